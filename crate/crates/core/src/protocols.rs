//! End-to-end transfer, entanglement and cooling scenarios in units of `ω_m`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    effective_generator, full_generator, propagate_timedep, EffectiveOptions, GeneratorMatrices, Model, StepMap, TimeDepOptions, TimeGrid,
};
use crate::error::{Error, Result};
use crate::gaussian::{make_state, symplectic_eigenvalues, GaussianState, ModePrep, StateSpec};
use crate::metrics::{fock_negativity_from_map, fock_negativity_rwa, log_negativity, min_variance, occupation, transfer_fidelity};
use crate::system::{g_exact, optimal_swap_coupling, CouplingInputs, DerivedRates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SwapCoherent,
    SwapSqueezed,
    SwapFock,
    Entangle,
}

impl Scenario {
    pub fn is_swap(self) -> bool {
        !matches!(self, Scenario::Entangle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Effective,
    Full,
}

/// Dissipation rates in units of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRatios {
    pub gamma_c: f64,
    pub gamma_m: f64,
    pub gamma_at: f64,
}

impl RateRatios {
    pub fn equal(f: f64) -> Self {
        RateRatios {
            gamma_c: f,
            gamma_m: f,
            gamma_at: f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// Cavity parameters of the four-mode model, in units of `ω_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FullModelConfig {
    pub g_over_delta: f64,
    pub kappa: f64,
}

impl Default for FullModelConfig {
    fn default() -> Self {
        FullModelConfig {
            g_over_delta: 0.02,
            kappa: 1.0,
        }
    }
}

fn default_g() -> f64 {
    0.034
}
fn default_beta() -> Complex {
    Complex { re: 1.0, im: 0.0 }
}
fn default_s0() -> f64 {
    (-2.0f64).exp()
}
fn default_samples() -> usize {
    200
}
fn default_n_bar() -> f64 {
    50.0
}
fn default_steps_per_period() -> f64 {
    80.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Common noise ratio: `Γc = Γm = Γat = fG`.
    #[serde(default)]
    pub f: f64,
    /// Per-rate ratios; overrides `f` when present.
    #[serde(default)]
    pub rates: Option<RateRatios>,
    #[serde(default = "default_g")]
    pub g_over_omega: f64,
    /// `ω_at/ω_m`; 1 for swaps and 1.1 for entanglement when absent.
    #[serde(default)]
    pub omega_ratio: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: Complex,
    /// Minimal variance of the squeezed atomic input (vacuum = 1).
    #[serde(default = "default_s0")]
    pub s0: f64,
    /// Run length in units of `t_s` (swaps, default 2) or `1/G` (entanglement, default 3).
    #[serde(default)]
    pub duration: Option<f64>,
    /// Output samples per `t_s` (swaps) or per `1/G` (entanglement).
    #[serde(default = "default_samples")]
    pub samples_per_unit: usize,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub full: FullModelConfig,
    /// Effective model only: take `G` and the cavity rates from the couplings of `full`
    /// instead of `f`, so that both models describe the same device.
    #[serde(default)]
    pub cavity_from_full: bool,
    /// Thermal occupation of the membrane bath; sets `γ_m = Γm/n̄_m`.
    #[serde(default = "default_n_bar")]
    pub n_bar_m: f64,
    /// Occupation of the membrane at `t = 0`.
    #[serde(default)]
    pub membrane_n0: f64,
    /// `G(t) = G cos²(ω̄t)`; on by default for entanglement only.
    #[serde(default)]
    pub modulation: Option<bool>,
    #[serde(default)]
    pub include_epsilon: bool,
    /// Integration steps per period of the fastest frequency (modulated runs).
    #[serde(default = "default_steps_per_period")]
    pub steps_per_period: f64,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, f: f64) -> Self {
        ScenarioConfig {
            scenario,
            f,
            rates: None,
            g_over_omega: default_g(),
            omega_ratio: None,
            beta: default_beta(),
            s0: default_s0(),
            duration: None,
            samples_per_unit: default_samples(),
            model: ModelKind::Effective,
            full: FullModelConfig::default(),
            cavity_from_full: false,
            n_bar_m: default_n_bar(),
            membrane_n0: 0.0,
            modulation: None,
            include_epsilon: false,
            steps_per_period: default_steps_per_period(),
        }
    }

    pub fn ratios(&self) -> RateRatios {
        self.rates.unwrap_or(RateRatios::equal(self.f))
    }

    pub fn omega_at(&self) -> f64 {
        self.omega_ratio.unwrap_or(if self.scenario.is_swap() { 1.0 } else { 1.1 })
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or(if self.scenario.is_swap() { 2.0 } else { 3.0 })
    }

    pub fn modulated(&self) -> bool {
        self.modulation.unwrap_or(!self.scenario.is_swap())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, path: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be positive and finite, got {v}")))
            }
        };
        let non_negative = |v: f64, path: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be non-negative and finite, got {v}")))
            }
        };
        non_negative(self.f, "f")?;
        if let Some(r) = self.rates {
            non_negative(r.gamma_c, "rates.gamma_c")?;
            non_negative(r.gamma_m, "rates.gamma_m")?;
            non_negative(r.gamma_at, "rates.gamma_at")?;
        }
        positive(self.g_over_omega, "g_over_omega")?;
        positive(self.omega_at(), "omega_ratio")?;
        positive(self.s0, "s0")?;
        positive(self.duration(), "duration")?;
        positive(self.n_bar_m, "n_bar_m")?;
        non_negative(self.membrane_n0, "membrane_n0")?;
        positive(self.steps_per_period, "steps_per_period")?;
        if self.samples_per_unit == 0 {
            return Err(Error::config("samples_per_unit", "must be at least 1"));
        }
        if !(self.beta.re.is_finite() && self.beta.im.is_finite()) {
            return Err(Error::config("beta", "must be finite"));
        }
        if self.model == ModelKind::Full || self.cavity_from_full {
            positive(self.full.g_over_delta, "full.g_over_delta")?;
            positive(self.full.kappa, "full.kappa")?;
            if self.full.g_over_delta > 0.2 {
                return Err(Error::config("full.g_over_delta", "must be at most 0.2 for a dispersive coupling"));
            }
            if self.modulated() {
                return Err(Error::config(
                    "modulation",
                    "the four-mode model runs with a constant coupling only",
                ));
            }
        }
        Ok(())
    }
}

/// Rate set of the effective model with coupling `G` and absolute rates `Γc`, `Γm`, `Γat`.
///
/// The cavity channels run at `Γc⁺ = Γc⁻ = Γc`; the membrane bath at `γ_m = Γm/n̄_m`.
pub fn effective_rates(g: f64, gamma_c: f64, gamma_m: f64, gamma_at: f64, omega_at: f64, n_bar_m: f64) -> Result<DerivedRates> {
    if !(n_bar_m > 0.0) {
        return Err(Error::invalid("membrane bath occupation must be positive"));
    }
    let gm = std::f64::consts::FRAC_1_SQRT_2;
    let mut r = DerivedRates::from_couplings(CouplingInputs {
        g_m: gm,
        g_at: gm,
        delta: 1.0 / g.max(1e-300),
        kappa: 0.0,
        omega_m: 1.0,
        omega_at,
        gamma_at,
        gamma_mech: gamma_m / n_bar_m,
        n_bar_m,
    })?;
    r.g_exact = g;
    r.g_dispersive = g;
    r.epsilon = 0.0;
    r.gamma_c_plus = gamma_c;
    r.gamma_c_minus = gamma_c;
    r.gamma_c_dispersive = gamma_c;
    r.f_c = gamma_c / g;
    r.f_at = gamma_at / g;
    r.f_m = gamma_m / g;
    Ok(r)
}

/// Cavity detuning at which the four-mode model with `g = (g/Δ)·Δ`, `g_m = g_at` reaches
/// the sideband-resolved coupling `target`.
pub fn detuning_for_coupling(target: f64, g_over_delta: f64, kappa: f64) -> Result<f64> {
    let coupling = |delta: f64| {
        let gm = g_over_delta * delta * std::f64::consts::FRAC_1_SQRT_2;
        g_exact(gm, gm, delta, kappa, 1.0)
    };
    let (mut lo, mut hi) = (2.0, 2.0);
    while coupling(hi)? < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::invalid(format!("no detuning reaches G = {target}")));
        }
    }
    if coupling(lo)? > target {
        return Err(Error::invalid(format!(
            "G = {target} needs |Δ| < 2ω_m, outside the dispersive regime"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if coupling(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rate set of the four-mode model tuned so that `G_exact = G`.
pub fn full_model_rates(config: &ScenarioConfig) -> Result<DerivedRates> {
    let g = config.g_over_omega;
    let r = config.ratios();
    let delta = detuning_for_coupling(g, config.full.g_over_delta, config.full.kappa)?;
    let gm = config.full.g_over_delta * delta * std::f64::consts::FRAC_1_SQRT_2;
    DerivedRates::from_couplings(CouplingInputs {
        g_m: gm,
        g_at: gm,
        delta,
        kappa: config.full.kappa,
        omega_m: 1.0,
        omega_at: config.omega_at(),
        gamma_at: r.gamma_at * g,
        gamma_mech: r.gamma_m * g / config.n_bar_m,
        n_bar_m: config.n_bar_m,
    })
}

/// Effective-model rates of a configuration (with derived cavity rates for the full model).
pub fn scenario_rates(config: &ScenarioConfig) -> Result<DerivedRates> {
    match config.model {
        ModelKind::Effective if config.cavity_from_full => full_model_rates(config),
        ModelKind::Effective => {
            let g = config.g_over_omega;
            let r = config.ratios();
            effective_rates(g, r.gamma_c * g, r.gamma_m * g, r.gamma_at * g, config.omega_at(), config.n_bar_m)
        }
        ModelKind::Full => full_model_rates(config),
    }
}

/// Named series sampled on the run grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub model: ModelKind,
    pub g: f64,
    pub omega_at: f64,
    /// Realized rates in units of `G` (cavity rates derived from κ and Δ in the full model).
    pub rates: RateRatios,
    pub t_swap: f64,
    pub times: Vec<f64>,
    pub series: Vec<Series>,
    pub overlays: Vec<Series>,
    pub summary: BTreeMap<String, f64>,
}

impl ScenarioResult {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .chain(&self.overlays)
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    /// Columns `t`, `Gt`, every series, then every overlay.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let cols: Vec<&Series> = self.series.iter().chain(&self.overlays).collect();
        let mut header = vec!["t".to_string(), "Gt".to_string()];
        header.extend(cols.iter().map(|s| s.name.clone()));
        writeln!(out, "{}", header.join(","))?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}"), format!("{:.16e}", self.g * t)];
            row.extend(cols.iter().map(|s| format!("{:.16e}", s.values[k])));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn min_symplectic(state: &GaussianState) -> Result<f64> {
    Ok(symplectic_eigenvalues(&state.cov)?.into_iter().fold(f64::INFINITY, f64::min))
}

fn block(m: &DMatrix<f64>, mode: usize) -> Matrix2<f64> {
    m.fixed_view::<2, 2>(2 * mode, 2 * mode).into_owned()
}

/// Added membrane noise of the rotating-wave swap.
fn rwa_added_noise(t: f64, g: f64, gc: f64, gm: f64, gat: f64) -> f64 {
    0.5 * (2.0 * gc + gm + gat) * t + (2.0 * g * t).sin() * (gm - gat) / (4.0 * g)
}

fn initial_state(config: &ScenarioConfig, n_modes: usize) -> Result<(GaussianState, Matrix2<f64>)> {
    let mut specs = vec![StateSpec::new(0, ModePrep::Thermal { n_bar: config.membrane_n0 })];
    match config.scenario {
        Scenario::SwapCoherent => specs.push(StateSpec::new(
            1,
            ModePrep::Coherent {
                re: config.beta.re,
                im: config.beta.im,
            },
        )),
        Scenario::SwapSqueezed => specs.push(StateSpec::new(1, ModePrep::Squeezed { s: config.s0 })),
        // |1⟩ has the moments of a thermal state with n̄ = 1.
        Scenario::SwapFock => specs.push(StateSpec::new(1, ModePrep::Thermal { n_bar: 1.0 })),
        Scenario::Entangle => {}
    }
    let state = make_state(&specs, n_modes)?;
    let atom0 = block(&state.cov, 1);
    Ok((state, atom0))
}

/// Effective or full model selected by `config.model`.
pub fn scenario_model(config: &ScenarioConfig, rates: &DerivedRates) -> Result<Model> {
    match config.model {
        ModelKind::Effective => effective_generator(
            rates,
            EffectiveOptions {
                include_epsilon: config.include_epsilon,
                ..Default::default()
            },
        ),
        ModelKind::Full => full_generator(rates, rates.delta, -rates.delta),
    }
}

fn model_generator(config: &ScenarioConfig, rates: &DerivedRates) -> Result<GeneratorMatrices> {
    scenario_model(config, rates)?.generator()
}

fn realized_ratios(rates: &DerivedRates) -> RateRatios {
    RateRatios {
        gamma_c: 0.5 * (rates.gamma_c_plus + rates.gamma_c_minus) / rates.g_exact,
        gamma_m: rates.gamma_m / rates.g_exact,
        gamma_at: rates.gamma_at / rates.g_exact,
    }
}

/// Transfer of a coherent, squeezed or one-phonon atomic state onto the membrane.
pub fn run_swap(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    if !config.scenario.is_swap() {
        return Err(Error::config(
            "scenario",
            "run_swap needs swap_coherent, swap_squeezed or swap_fock",
        ));
    }
    let rates = scenario_rates(config)?;
    let gen = model_generator(config, &rates)?;
    let n_modes = gen.dim() / 2;
    let g = config.g_over_omega;
    let t_swap = PI / (2.0 * g);
    let ratios = realized_ratios(&rates);
    let (gc, gm, gat) = (ratios.gamma_c * g, ratios.gamma_m * g, ratios.gamma_at * g);

    let steps = ((config.duration() * config.samples_per_unit as f64).round() as usize).max(1);
    let dt = t_swap / config.samples_per_unit as f64;
    let step = StepMap::new(&gen, dt)?;
    let (state0, atom0) = initial_state(config, n_modes)?;
    let membrane0 = block(&state0.cov, 0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut cols: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut map = StepMap::identity(gen.dim());
    let mut min_nu = f64::INFINITY;
    for k in 0..=steps {
        if k > 0 {
            map = map.then(&step);
        }
        let t = k as f64 * dt;
        times.push(t);
        let state = map.apply(&state0)?;
        min_nu = min_nu.min(min_symplectic(&state)?);
        let cov_m = block(&state.cov, 0);
        let add = rwa_added_noise(t, g, gc, gm, gat);
        let (c2, s2) = ((g * t).cos().powi(2), (g * t).sin().powi(2));
        let cov_rwa = membrane0 * c2 + atom0 * s2 + Matrix2::identity() * add;
        cols.entry("n_m").or_default().push(occupation(&state, 0)?);
        cols.entry("n_at").or_default().push(occupation(&state, 1)?);
        match config.scenario {
            Scenario::SwapCoherent => {
                cols.entry("F").or_default().push(transfer_fidelity(&cov_m, &atom0)?);
                cols.entry("F_rwa").or_default().push(transfer_fidelity(&cov_rwa, &atom0)?);
            }
            Scenario::SwapSqueezed => {
                let mv = min_variance(&cov_m)?;
                cols.entry("s").or_default().push(mv.s);
                cols.entry("S_dB").or_default().push(mv.db);
                cols.entry("s_rwa").or_default().push(min_variance(&cov_rwa)?.s);
            }
            Scenario::SwapFock => {
                cols.entry("N_w").or_default().push(fock_negativity_from_map(&map, &membrane0)?);
                let rwa = if config.membrane_n0 == 0.0 {
                    fock_negativity_rwa(t, g, gc, gm, gat)?
                } else {
                    f64::NAN
                };
                cols.entry("N_w_rwa").or_default().push(rwa);
            }
            Scenario::Entangle => unreachable!(),
        }
    }

    let (mut series, mut overlays) = (Vec::new(), Vec::new());
    for (name, values) in cols {
        let s = Series {
            name: name.to_string(),
            values,
        };
        if name.ends_with("_rwa") {
            overlays.push(s);
        } else {
            series.push(s);
        }
    }
    let ts_index = config.samples_per_unit.min(steps);
    let mut summary = BTreeMap::new();
    summary.insert("t_swap".to_string(), t_swap);
    for s in series.iter().chain(&overlays) {
        summary.insert(format!("{}_at_ts", s.name), s.values[ts_index]);
        summary.insert(format!("{}_final", s.name), *s.values.last().unwrap());
    }
    if let Some(f) = summary.get("F_at_ts").copied() {
        summary.insert("fidelity_at_ts".to_string(), f);
    }
    summary.insert("f_c".to_string(), ratios.gamma_c);
    summary.insert("min_symplectic_eigenvalue".to_string(), min_nu);
    if config.model == ModelKind::Full || config.cavity_from_full {
        summary.insert("delta".to_string(), rates.delta);
        summary.insert("g_over_delta".to_string(), rates.g / rates.delta);
    }
    Ok(ScenarioResult {
        scenario: config.scenario,
        model: config.model,
        g,
        omega_at: config.omega_at(),
        rates: ratios,
        t_swap,
        times,
        series,
        overlays,
        summary,
    })
}

/// Entanglement from the coupling `G(t) = G cos²(ω̄t)`, `ω̄ = (ω_m + ω_at)/2`, starting in the ground state.
pub fn run_entangle(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    if config.scenario != Scenario::Entangle {
        return Err(Error::config("scenario", "run_entangle needs the entangle scenario"));
    }
    let rates = scenario_rates(config)?;
    let g = config.g_over_omega;
    let omega_at = config.omega_at();
    let omega_bar = 0.5 * (1.0 + omega_at);
    let modulated = config.modulated();

    let coupled = model_generator(config, &rates)?;
    let mut free_rates = rates.clone();
    free_rates.g_exact = 0.0;
    free_rates.g_dispersive = 0.0;
    let free = model_generator(config, &free_rates)?;
    let dq = &coupled.q - &free.q;
    let envelope = move |t: f64| if modulated { (omega_bar * t).cos().powi(2) } else { 1.0 };
    let generator = |t: f64| GeneratorMatrices::new(&free.q + &dq * envelope(t), coupled.n.clone());

    let omega_max = coupled.spectral_radius().max(free.spectral_radius());
    let t_end = config.duration() / g;
    let h_target = 2.0 * PI / omega_max / config.steps_per_period;
    let samples = ((config.duration() * config.samples_per_unit as f64).round() as usize).max(1);
    let per_sample = ((t_end / samples as f64) / h_target).ceil().max(1.0) as usize;
    let grid = TimeGrid::new(0.0, t_end, samples * per_sample)?;
    let (state0, _) = initial_state(config, 2)?;
    let traj = propagate_timedep(
        &state0,
        generator,
        grid,
        TimeDepOptions {
            omega_max: Some(omega_max),
            steps_per_period: 40.0,
            sample_every: per_sample,
        },
    )?;

    let mut e_n = Vec::with_capacity(traj.len());
    let mut n_at = Vec::with_capacity(traj.len());
    let mut n_m = Vec::with_capacity(traj.len());
    let mut corr = Vec::with_capacity(traj.len());
    let mut min_nu = f64::INFINITY;
    for s in &traj.states {
        min_nu = min_nu.min(min_symplectic(s)?);
        e_n.push(log_negativity(s)?);
        n_at.push(occupation(s, 1)?);
        n_m.push(occupation(s, 0)?);
        corr.push(s.cov.fixed_view::<2, 2>(0, 2).amax());
    }
    // Resonant parametric-amplifier limit: two-mode squeezing at rate G/4, no dissipation.
    let e_n_rwa: Vec<f64> = traj
        .times
        .iter()
        .map(|t| if modulated { g * t / (2.0 * 2f64.ln()) } else { f64::NAN })
        .collect();

    let mut summary = BTreeMap::new();
    summary.insert("E_N_final".to_string(), *e_n.last().unwrap());
    summary.insert("E_N_max".to_string(), e_n.iter().cloned().fold(0.0, f64::max));
    summary.insert("n_at_max".to_string(), n_at.iter().cloned().fold(0.0, f64::max));
    summary.insert("n_at_final".to_string(), *n_at.last().unwrap());
    summary.insert("n_m_final".to_string(), *n_m.last().unwrap());
    summary.insert("min_symplectic_eigenvalue".to_string(), min_nu);
    if let Some(k) = e_n.iter().position(|&e| e > 0.0) {
        summary.insert("Gt_first_positive".to_string(), g * traj.times[k]);
    }
    let series = vec![
        Series {
            name: "E_N".into(),
            values: e_n,
        },
        Series {
            name: "n_at".into(),
            values: n_at,
        },
        Series {
            name: "n_m".into(),
            values: n_m,
        },
        Series {
            name: "corr_max".into(),
            values: corr,
        },
    ];
    Ok(ScenarioResult {
        scenario: config.scenario,
        model: config.model,
        g,
        omega_at,
        rates: realized_ratios(&rates),
        t_swap: PI / (2.0 * g),
        times: traj.times,
        series,
        overlays: vec![Series {
            name: "E_N_rwa".into(),
            values: e_n_rwa,
        }],
        summary,
    })
}

/// Dispatches on the scenario kind.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    if config.scenario.is_swap() {
        run_swap(config)
    } else {
        run_entangle(config)
    }
}

/// Inputs of the swap-versus-cavity cooling comparison, in units of `ω_m` unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingInputs {
    /// Noise ratio of the swap, `Γc/G`.
    pub f: f64,
    pub g: f64,
    #[serde(default = "one")]
    pub omega_m: f64,
    /// Raman cooling rate of the atom.
    pub gamma_r: f64,
    /// Direct membrane-cavity coupling for the cavity-cooling reference.
    pub g_m: f64,
    pub kappa: f64,
    /// Membrane heating rate `γ_m n̄_m`.
    pub gamma_m: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSummary {
    pub n_swap: f64,
    pub n_cool: f64,
    pub n_cavity: f64,
    /// Coupling minimizing `n_swap` at fixed `Γc = fG`.
    pub g_opt: f64,
    pub n_swap_at_g_opt: f64,
    pub swap_beats_cavity: bool,
    /// `G/π > g_m²/κ`.
    pub coupling_criterion: bool,
}

/// Final occupation after one swap at fixed `Γc`: `πΓc/G + (G/2ω_m)²`.
pub fn swap_cooling_occupation(g: f64, gamma_c: f64, omega_m: f64) -> f64 {
    PI * gamma_c / g + (g / (2.0 * omega_m)).powi(2)
}

pub fn cooling_comparison(inp: &CoolingInputs) -> Result<CoolingSummary> {
    for (v, name) in [
        (inp.f, "f"),
        (inp.g, "g"),
        (inp.omega_m, "omega_m"),
        (inp.gamma_r, "gamma_r"),
        (inp.g_m, "g_m"),
        (inp.kappa, "kappa"),
        (inp.gamma_m, "gamma_m"),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::config(name, format!("must be positive and finite, got {v}")));
        }
    }
    let n_swap = PI * inp.f + (inp.g / (2.0 * inp.omega_m)).powi(2);
    let n_cool = inp.f * inp.gamma_r / inp.g + (inp.gamma_r / (2.0 * inp.omega_m)).powi(2);
    let n_cavity = inp.gamma_m * inp.kappa / (inp.g_m * inp.g_m) + (inp.kappa / (2.0 * inp.omega_m)).powi(2);
    let gamma_c = inp.f * inp.g;
    let g_opt = optimal_swap_coupling(gamma_c, inp.omega_m)?;
    Ok(CoolingSummary {
        n_swap,
        n_cool,
        n_cavity,
        g_opt,
        n_swap_at_g_opt: swap_cooling_occupation(g_opt, gamma_c, inp.omega_m),
        swap_beats_cavity: n_swap < n_cavity,
        coupling_criterion: inp.g / PI > inp.g_m * inp.g_m / inp.kappa,
    })
}

/// Geometric scan of [`swap_cooling_occupation`] over `G ∈ [g_lo, g_hi]`; returns the
/// scan and the grid point of the minimum.
pub fn swap_cooling_scan(gamma_c: f64, omega_m: f64, g_lo: f64, g_hi: f64, points: usize) -> Result<(Vec<(f64, f64)>, f64)> {
    if !(g_lo > 0.0 && g_hi > g_lo) || points < 3 {
        return Err(Error::invalid("scan needs 0 < g_lo < g_hi and at least three points"));
    }
    let ratio = (g_hi / g_lo).ln() / (points - 1) as f64;
    let scan: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let g = g_lo * (ratio * k as f64).exp();
            (g, swap_cooling_occupation(g, gamma_c, omega_m))
        })
        .collect();
    let best = scan
        .iter()
        .cloned()
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    Ok((scan, best.0))
}
