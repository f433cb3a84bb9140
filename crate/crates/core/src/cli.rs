//! Command-line dispatch, run manifests and the cross-engine validation suites.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::dynamics::{annihilation, propagate_const, trajectory_const, LindbladChannel, QuadraticHamiltonian, TimeGrid};
use crate::error::{Error, Result};
use crate::gaussian::{make_state, symplectic_eigenvalues, ModePrep, StateSpec};
use crate::lattice::{best_site, find_wells_with, LatticeConfig};
use crate::oracle::{compare_swap, Truncation};
use crate::protocols::{
    cooling_comparison, run_scenario, CoolingInputs, FullModelConfig, ModelKind, Scenario, ScenarioConfig, ScenarioResult,
};
use crate::system::{check_strong_coupling, ConditionThresholds, PhysicalParams};
use crate::thermal::{steady_state_heat_map, HeatConfig};

/// Top-level sections accepted in a config document.
pub const CONFIG_SECTIONS: [&str; 6] = ["system", "design_check", "lattice", "protocols", "cool", "thermal"];

#[derive(Debug, Parser)]
#[command(name = "atom-membrane", version, about = "Atom-membrane state transfer and entanglement simulator")]
pub struct Cli {
    /// Write the run manifest to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the strong-coupling conditions and print the report as JSON.
    DesignCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Locate the lattice wells and write them as CSV.
    LatticeScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transfer a state from the atom to the membrane.
    Swap {
        #[arg(long, value_enum)]
        state: StateArg,
        /// Noise ratio f; a comma-separated list runs a sweep.
        #[arg(long, value_delimiter = ',')]
        f: Vec<f64>,
        #[arg(long)]
        g_over_omega: Option<f64>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for sweeps.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Entangle atom and membrane with a pulsed coupling.
    Entangle {
        #[arg(long, value_delimiter = ',')]
        f: Vec<f64>,
        #[arg(long)]
        omega_ratio: Option<f64>,
        #[arg(long)]
        g_over_omega: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare swap cooling with cavity and Raman cooling.
    Cool {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the membrane heat map.
    Heat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run cross-engine consistency checks.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Coherent,
    Squeezed,
    Fock,
}

impl StateArg {
    fn scenario(self) -> Scenario {
        match self {
            StateArg::Coherent => Scenario::SwapCoherent,
            StateArg::Squeezed => Scenario::SwapSqueezed,
            StateArg::Fock => Scenario::SwapFock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Effective,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gaussian,
    Oracle,
}

/// Provenance record written next to every run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub config: Value,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, outputs: Vec<String>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            command: command.to_string(),
            config_digest: config_digest(&config),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            outputs,
        }
    }
}

/// SHA-256 of the compact JSON encoding; object keys serialize in sorted order.
pub fn config_digest(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("JSON values always serialize");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Design-check section: thermal link of the membrane centre and pass thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignCheckConfig {
    #[serde(default = "default_link")]
    pub kb_kappa_th: f64,
    #[serde(default)]
    pub thresholds: ConditionThresholds,
}

fn default_link() -> f64 {
    10e-9
}

/// A parsed config document.
#[derive(Debug, Clone, Default)]
pub struct ConfigDoc {
    root: Map<String, Value>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("", format!("invalid JSON: {e}")))?;
        let Value::Object(root) = value else {
            return Err(Error::config("", "config must be a JSON object"));
        };
        if let Some(key) = root.keys().find(|k| !CONFIG_SECTIONS.contains(&k.as_str())) {
            return Err(Error::config(
                key.clone(),
                format!("unknown section; expected one of {CONFIG_SECTIONS:?}"),
            ));
        }
        Ok(ConfigDoc { root })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Deserializes `section` after applying `overrides`; errors carry the dotted field path.
    pub fn section<T: DeserializeOwned>(&self, section: &str, overrides: &[(&str, Value)]) -> Result<T> {
        let mut value = self.root.get(section).cloned().unwrap_or_else(|| Value::Object(Map::new()));
        let Value::Object(obj) = &mut value else {
            return Err(Error::config(section, "section must be a JSON object"));
        };
        for (k, v) in overrides {
            obj.insert((*k).to_string(), v.clone());
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." {
                section.to_string()
            } else {
                format!("{section}.{path}")
            };
            Error::config(path, e.into_inner().to_string())
        })
    }
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::Config { path, message } => Error::config(format!("{section}.{path}"), message),
        other => other,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config types serialize")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes the manifest to `explicit`, else `default`, else stderr.
fn emit_manifest(manifest: &RunManifest, explicit: Option<&Path>, default: Option<PathBuf>) -> Result<()> {
    match explicit.map(Path::to_path_buf).or(default) {
        Some(path) => write_json(&path, manifest),
        None => {
            eprintln!("{}", serde_json::to_string(manifest)?);
            Ok(())
        }
    }
}

fn load_optional(config: Option<&Path>) -> Result<ConfigDoc> {
    config.map(ConfigDoc::load).unwrap_or_else(|| Ok(ConfigDoc::default()))
}

/// Builds one scenario config per `f` value (or one from the config when none are given).
fn scenario_configs(doc: &ConfigDoc, base: &[(&str, Value)], fs: &[f64]) -> Result<Vec<ScenarioConfig>> {
    let build = |f: Option<f64>| -> Result<ScenarioConfig> {
        let mut ov: Vec<(&str, Value)> = base.to_vec();
        if let Some(f) = f {
            ov.push(("f", Value::from(f)));
        }
        let cfg: ScenarioConfig = doc.section("protocols", &ov)?;
        cfg.validate().map_err(|e| prefixed("protocols", e))?;
        Ok(cfg)
    };
    if fs.is_empty() {
        Ok(vec![build(None)?])
    } else {
        fs.iter().map(|&f| build(Some(f))).collect()
    }
}

fn run_sweep(configs: &[ScenarioConfig], jobs: usize) -> Result<Vec<ScenarioResult>> {
    if jobs <= 1 {
        return configs.iter().map(run_scenario).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| configs.par_iter().map(run_scenario).collect())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    f: f64,
    csv: String,
    summary: &'a std::collections::BTreeMap<String, f64>,
}

fn write_sweep(prefix: &str, out: &Path, configs: &[ScenarioConfig], results: &[ScenarioResult]) -> Result<Vec<String>> {
    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    let mut runs = Vec::new();
    for (cfg, res) in configs.iter().zip(results) {
        let name = format!("{prefix}_f{}.csv", cfg.f);
        let path = out.join(&name);
        let mut w = create(&path)?;
        res.write_csv(&mut w)?;
        w.flush()?;
        outputs.push(path.display().to_string());
        runs.push(RunSummary {
            f: cfg.f,
            csv: name,
            summary: &res.summary,
        });
    }
    let summary_path = out.join("summary.json");
    write_json(&summary_path, &serde_json::json!({ "runs": runs }))?;
    outputs.push(summary_path.display().to_string());
    Ok(outputs)
}

/// One cross-engine check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Gaussian-engine checks against closed forms and physicality invariants.
pub fn gaussian_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for f in [0.01, 0.05, 0.1] {
        let res = run_scenario(&ScenarioConfig::new(Scenario::SwapCoherent, f))?;
        let expected = 1.0 / (1.0 + std::f64::consts::PI * f);
        checks.push(Check::below(
            format!("fidelity_vs_closed_form_f{f}"),
            (res.summary["F_at_ts"] - expected).abs(),
            0.02,
        ));
        let fock = run_scenario(&ScenarioConfig::new(Scenario::SwapFock, f))?;
        checks.push(Check::below(
            format!("fock_negativity_vs_rwa_f{f}"),
            (fock.summary["N_w_at_ts"] - fock.summary["N_w_rwa_at_ts"]).abs(),
            0.03,
        ));
    }

    let g_over_delta = 0.02;
    let mut eff = ScenarioConfig::new(Scenario::SwapCoherent, 0.05);
    eff.cavity_from_full = true;
    eff.full = FullModelConfig {
        g_over_delta,
        ..Default::default()
    };
    let mut full = eff.clone();
    full.model = ModelKind::Full;
    let (a, b) = (run_scenario(&eff)?, run_scenario(&full)?);
    let (fa, fb) = (a.series("F").unwrap_or(&[]), b.series("F").unwrap_or(&[]));
    let diff = fa.iter().zip(fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    checks.push(Check::below("effective_vs_full_fidelity", diff, 5.0 * g_over_delta));

    // Thermal swap stays above the uncertainty bound.
    let mut thermal = ScenarioConfig::new(Scenario::SwapSqueezed, 0.1);
    thermal.membrane_n0 = 2.0;
    let rates = crate::protocols::scenario_rates(&thermal)?;
    let gen = crate::protocols::scenario_model(&thermal, &rates)?.generator()?;
    let state0 = make_state(
        &[
            StateSpec::new(0, ModePrep::Thermal { n_bar: 2.0 }),
            StateSpec::new(1, ModePrep::Squeezed { s: thermal.s0 }),
        ],
        2,
    )?;
    let traj = trajectory_const(&state0, &gen, TimeGrid::new(0.0, 3.0 / thermal.g_over_omega, 300)?)?;
    let mut min_nu = f64::INFINITY;
    for s in &traj.states {
        for nu in symplectic_eigenvalues(&s.cov)? {
            min_nu = min_nu.min(nu);
        }
    }
    checks.push(Check::below("uncertainty_deficit", 0.5 - min_nu, 1e-7));

    let mut h = QuadraticHamiltonian::zeros(2);
    h.add_oscillator(0, 1.0);
    h.add_oscillator(1, 1.1);
    // Beam-splitter exchange conserves excitations, so the damped fixed point is the vacuum.
    h.add_quadrature_product(0, 2, -0.068);
    h.add_quadrature_product(1, 3, -0.068);
    let channels = [
        LindbladChannel::new(annihilation(2, 0), 0.01, "membrane")?,
        LindbladChannel::new(annihilation(2, 1), 0.02, "atom")?,
    ];
    let gen = crate::dynamics::assemble_qn(&h, &channels)?;
    let ss = gen.steady_state()?;
    let vacuum = nalgebra::DMatrix::<f64>::identity(4, 4) * 0.5;
    checks.push(Check::below("damping_steady_state_vs_vacuum", (ss - &vacuum).amax(), 1e-9));
    let late = propagate_const(&state0, &gen, 4000.0)?;
    checks.push(Check::below("damped_state_reaches_vacuum", (late.cov - vacuum).amax(), 1e-9));
    Ok(checks)
}

/// Density-matrix oracle against the Gaussian engine at `f = 0.05`.
pub fn oracle_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for scenario in [Scenario::SwapCoherent, Scenario::SwapFock] {
        let cfg = ScenarioConfig::new(scenario, 0.05);
        let cmp = compare_swap(&cfg, Truncation::TotalExcitation(25), 0.1)?;
        let tag = if scenario == Scenario::SwapFock { "fock" } else { "coherent" };
        checks.push(Check::below(format!("{tag}_moments"), cmp.moment_error, 1e-5));
        checks.push(Check::below(format!("{tag}_wigner_origin"), cmp.wigner_error, 1e-3));
    }
    Ok(checks)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Json(_) => 2,
        _ => 1,
    }
}

/// Executes a parsed command.
pub fn dispatch(cli: &Cli) -> Result<i32> {
    let manifest_path = cli.manifest.as_deref();
    match &cli.command {
        Command::DesignCheck { config } => {
            let doc = ConfigDoc::load(config)?;
            let params: PhysicalParams = doc.section("system", &[])?;
            let dc: DesignCheckConfig = doc.section("design_check", &[])?;
            let report = check_strong_coupling(&params, dc.kb_kappa_th, &dc.thresholds).map_err(|e| prefixed("system", e))?;
            print_json(&report)?;
            let cfg = serde_json::json!({ "system": to_value(&params), "design_check": to_value(&dc) });
            emit_manifest(&RunManifest::new("design-check", cfg, vec![]), manifest_path, None)?;
        }
        Command::LatticeScan { config, out } => {
            let doc = ConfigDoc::load(config)?;
            let lc: LatticeConfig = doc.section("lattice", &[])?;
            let geometry = lc.geometry().map_err(|e| prefixed("lattice", e))?;
            let wells = find_wells_with(&geometry, lc.geometry_factor, lc.points_per_period)?;
            let mut w = create(out)?;
            writeln!(w, "x,delta_k_x,u,theta,zeta,xi,is_intensity_max")?;
            for s in &wells {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    s.x,
                    geometry.delta_k() * s.x,
                    s.u,
                    s.theta,
                    s.zeta,
                    s.xi,
                    u8::from(s.is_intensity_max)
                )?;
            }
            w.flush()?;
            let best = best_site(&wells, Default::default()).ok();
            print_json(&serde_json::json!({ "geometry": geometry, "wells": wells.len(), "best": best }))?;
            let default = PathBuf::from(format!("{}.manifest.json", out.display()));
            let m = RunManifest::new("lattice-scan", to_value(&lc), vec![out.display().to_string()]);
            emit_manifest(&m, manifest_path, Some(default))?;
        }
        Command::Swap {
            state,
            f,
            g_over_omega,
            model,
            config,
            out,
            jobs,
        } => {
            let doc = load_optional(config.as_deref())?;
            let mut ov = vec![("scenario", to_value(&state.scenario()))];
            if let Some(g) = g_over_omega {
                ov.push(("g_over_omega", Value::from(*g)));
            }
            if let Some(m) = model {
                let kind = if *m == ModelArg::Full {
                    ModelKind::Full
                } else {
                    ModelKind::Effective
                };
                ov.push(("model", to_value(&kind)));
            }
            let configs = scenario_configs(&doc, &ov, f)?;
            let results = run_sweep(&configs, *jobs)?;
            let prefix = format!("swap_{}", state.to_possible_value().expect("named").get_name());
            let outputs = write_sweep(&prefix, out, &configs, &results)?;
            let cfg = Value::Array(configs.iter().map(to_value).collect());
            emit_manifest(
                &RunManifest::new("swap", cfg, outputs),
                manifest_path,
                Some(out.join("manifest.json")),
            )?;
        }
        Command::Entangle {
            f,
            omega_ratio,
            g_over_omega,
            config,
            out,
            jobs,
        } => {
            let doc = load_optional(config.as_deref())?;
            let mut ov = vec![("scenario", to_value(&Scenario::Entangle))];
            if let Some(r) = omega_ratio {
                ov.push(("omega_ratio", Value::from(*r)));
            }
            if let Some(g) = g_over_omega {
                ov.push(("g_over_omega", Value::from(*g)));
            }
            let configs = scenario_configs(&doc, &ov, f)?;
            let results = run_sweep(&configs, *jobs)?;
            let outputs = write_sweep("entangle", out, &configs, &results)?;
            let cfg = Value::Array(configs.iter().map(to_value).collect());
            emit_manifest(
                &RunManifest::new("entangle", cfg, outputs),
                manifest_path,
                Some(out.join("manifest.json")),
            )?;
        }
        Command::Cool { config } => {
            let doc = ConfigDoc::load(config)?;
            let inputs: CoolingInputs = doc.section("cool", &[])?;
            let summary = cooling_comparison(&inputs).map_err(|e| prefixed("cool", e))?;
            print_json(&summary)?;
            emit_manifest(&RunManifest::new("cool", to_value(&inputs), vec![]), manifest_path, None)?;
        }
        Command::Heat { config, out } => {
            let doc = ConfigDoc::load(config)?;
            let hc: HeatConfig = doc.section("thermal", &[])?;
            hc.validate().map_err(|e| prefixed("thermal", e))?;
            let map = steady_state_heat_map(&hc)?;
            fs::create_dir_all(out)?;
            let csv = out.join("heat_map.csv");
            let mut w = create(&csv)?;
            map.write_csv(&mut w)?;
            w.flush()?;
            let summary_path = out.join("summary.json");
            let summary = serde_json::json!({
                "t_peak": map.t_peak,
                "t_avg": map.t_avg,
                "delta_t_lumped": map.delta_t_lumped,
                "absorbed_power": map.absorbed_power,
                "iterations": map.iterations,
                "residual": map.residual,
            });
            write_json(&summary_path, &summary)?;
            let outputs = vec![csv.display().to_string(), summary_path.display().to_string()];
            emit_manifest(
                &RunManifest::new("heat", to_value(&hc), outputs),
                manifest_path,
                Some(out.join("manifest.json")),
            )?;
        }
        Command::Validate { suite } => {
            let checks = match suite {
                Suite::Gaussian => gaussian_suite()?,
                Suite::Oracle => oracle_suite()?,
            };
            let all_pass = checks.iter().all(|c| c.pass);
            let name = suite.to_possible_value().expect("named").get_name().to_string();
            print_json(&serde_json::json!({ "suite": name, "checks": checks, "all_pass": all_pass }))?;
            let m = RunManifest::new("validate", serde_json::json!({ "suite": name }), vec![]);
            emit_manifest(&m, manifest_path, None)?;
            if !all_pass {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
