//! Membrane heating from absorption of the circulating light.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ΔT = P_a/(k_B κ_th)` with absorbed power `P_a = (2π/𝓕)P_c`.
pub fn lumped_temperature_rise(power: f64, finesse: f64, kb_kappa_th: f64) -> Result<f64> {
    if !(power >= 0.0) || !(finesse > 0.0) || !(kb_kappa_th > 0.0) {
        return Err(Error::invalid("need P_c ≥ 0, 𝓕 > 0 and k_B·κ_th > 0"));
    }
    Ok(absorbed_power(power, finesse) / kb_kappa_th)
}

pub fn absorbed_power(power: f64, finesse: f64) -> f64 {
    2.0 * PI / finesse * power
}

fn d_power() -> f64 {
    850e-6
}
fn d_finesse() -> f64 {
    2e5
}
fn d_link() -> f64 {
    10e-9
}
fn d_t0() -> f64 {
    2.0
}
fn d_k() -> f64 {
    0.05
}
fn d_side() -> f64 {
    1e-3
}
fn d_thickness() -> f64 {
    50e-9
}
fn d_waist() -> f64 {
    10e-6
}
fn d_cells() -> usize {
    128
}
fn d_stretch() -> f64 {
    3.0
}
fn d_tol() -> f64 {
    1e-10
}

/// Heat-map inputs in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    /// Circulating power `P_c` (W).
    #[serde(default = "d_power")]
    pub power: f64,
    #[serde(default = "d_finesse")]
    pub finesse: f64,
    /// Thermal link `k_B κ_th` (W/K).
    #[serde(default = "d_link")]
    pub kb_kappa_th: f64,
    /// Frame temperature (K).
    #[serde(default = "d_t0")]
    pub t0: f64,
    /// Thermal conductivity (W/m·K).
    #[serde(default = "d_k")]
    pub k_th: f64,
    /// Side of the square membrane (m).
    #[serde(default = "d_side")]
    pub a_side: f64,
    /// Membrane thickness (m).
    #[serde(default = "d_thickness")]
    pub thickness: f64,
    /// Beam waist `w₀` (m).
    #[serde(default = "d_waist")]
    pub waist: f64,
    /// Cells per side.
    #[serde(default = "d_cells")]
    pub grid_cells: usize,
    /// Grid clustering: node `x = (a/2) sinh(βξ)/sinh β` for uniform `ξ ∈ [−1, 1]`; 0 is uniform.
    #[serde(default = "d_stretch")]
    pub stretch: f64,
    /// Relative residual at which the solver stops.
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    /// Absorbed power (W); `(2π/𝓕)P_c` when absent.
    #[serde(default)]
    pub absorbed_power: Option<f64>,
}

impl Default for HeatConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl HeatConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.power, "power", true),
            (self.finesse, "finesse", false),
            (self.kb_kappa_th, "kb_kappa_th", false),
            (self.t0, "t0", false),
            (self.k_th, "k_th", false),
            (self.a_side, "a_side", false),
            (self.thickness, "thickness", false),
            (self.waist, "waist", false),
            (self.stretch, "stretch", true),
            (self.tolerance, "tolerance", false),
        ];
        for (v, name, zero_ok) in positive {
            let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
            if !ok {
                return Err(Error::config(
                    name,
                    format!("must be {}, got {v}", if zero_ok { "non-negative" } else { "positive" }),
                ));
            }
        }
        if let Some(p) = self.absorbed_power {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::config("absorbed_power", format!("must be non-negative, got {p}")));
            }
        }
        if self.waist >= 0.5 * self.a_side {
            return Err(Error::config("waist", "must be smaller than half the membrane side"));
        }
        if self.grid_cells < 64 || !self.grid_cells.is_multiple_of(2) {
            return Err(Error::config("grid_cells", "must be an even number of at least 64"));
        }
        Ok(())
    }

    pub fn p_absorbed(&self) -> f64 {
        self.absorbed_power.unwrap_or_else(|| absorbed_power(self.power, self.finesse))
    }

    /// Node coordinates along one side, symmetric about 0 with a node at the centre.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.grid_cells;
        let half = 0.5 * self.a_side;
        (0..=n)
            .map(|i| {
                let xi = 2.0 * i as f64 / n as f64 - 1.0;
                if self.stretch == 0.0 {
                    half * xi
                } else {
                    half * (self.stretch * xi).sinh() / self.stretch.sinh()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    /// Node coordinates (same along x and y).
    pub nodes: Vec<f64>,
    /// Temperatures, row-major with `y` as the row index.
    pub temperature: Vec<f64>,
    pub t_peak: f64,
    pub t_avg: f64,
    pub delta_t_lumped: f64,
    pub absorbed_power: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl HeatMap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.temperature[iy * self.nodes.len() + ix]
    }

    /// Bilinear interpolation at `(x, y)`.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let locate = |v: f64| {
            let k = self.nodes.partition_point(|&p| p <= v).clamp(1, self.nodes.len() - 1);
            let (a, b) = (self.nodes[k - 1], self.nodes[k]);
            (k - 1, (v - a) / (b - a))
        };
        let (i, fx) = locate(x);
        let (j, fy) = locate(y);
        let t00 = self.at(i, j);
        let t10 = self.at(i + 1, j);
        let t01 = self.at(i, j + 1);
        let t11 = self.at(i + 1, j + 1);
        (1.0 - fy) * ((1.0 - fx) * t00 + fx * t10) + fy * ((1.0 - fx) * t01 + fx * t11)
    }

    /// Long-format CSV `x,y,T`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,T")?;
        for (j, y) in self.nodes.iter().enumerate() {
            for (i, x) in self.nodes.iter().enumerate() {
                writeln!(out, "{x:.16e},{y:.16e},{:.16e}", self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// Fraction of the rectangle `[x0, x1] × [y0, y1]` inside the disk of radius `r`.
fn disk_fraction(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let near = |a: f64, b: f64| {
        if a > 0.0 {
            a
        } else if b < 0.0 {
            -b
        } else {
            0.0
        }
    };
    let far = |a: f64, b: f64| a.abs().max(b.abs());
    let (nx, ny) = (near(x0, x1), near(y0, y1));
    if nx * nx + ny * ny >= r * r {
        return 0.0;
    }
    let (fx, fy) = (far(x0, x1), far(y0, y1));
    if fx * fx + fy * fy <= r * r {
        return 1.0;
    }
    const SUB: usize = 32;
    let mut inside = 0usize;
    for i in 0..SUB {
        let x = x0 + (i as f64 + 0.5) / SUB as f64 * (x1 - x0);
        for j in 0..SUB {
            let y = y0 + (j as f64 + 0.5) / SUB as f64 * (y1 - y0);
            if x * x + y * y < r * r {
                inside += 1;
            }
        }
    }
    inside as f64 / (SUB * SUB) as f64
}

/// Steady state of `∇·(k_th t_m ∇T) + q = 0` on the square with `T = T₀` on the frame.
///
/// Vertex-centred finite volumes on a tensor grid; `q` is uniform over the disk of radius
/// `w₀` and integrates to the absorbed power.
pub fn steady_state_heat_map(config: &HeatConfig) -> Result<HeatMap> {
    config.validate()?;
    let x = config.nodes();
    let n = x.len();
    let sheet = config.k_th * config.thickness;
    let p_a = config.p_absorbed();

    // Control-volume faces around each node.
    let face = |i: usize| -> (f64, f64) {
        let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
        let hi = if i == n - 1 { x[n - 1] } else { 0.5 * (x[i] + x[i + 1]) };
        (lo, hi)
    };
    let faces: Vec<(f64, f64)> = (0..n).map(face).collect();
    let width: Vec<f64> = faces.iter().map(|(a, b)| b - a).collect();

    let m = n - 2;
    let idx = |i: usize, j: usize| (j - 1) * m + (i - 1);
    let mut rhs = vec![0.0; m * m];
    let mut total = 0.0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let area = width[i] * width[j];
            let frac = disk_fraction(faces[i].0, faces[i].1, faces[j].0, faces[j].1, config.waist);
            rhs[idx(i, j)] = frac * area;
            total += frac * area;
        }
    }
    if total <= 0.0 {
        return Err(Error::invalid("beam waist not resolved by the grid"));
    }
    let q_scale = p_a / total;
    rhs.iter_mut().for_each(|v| *v *= q_scale);

    // Conductances between neighbours; the unknown is T − T₀, zero on the frame.
    let cx: Vec<f64> = (0..n - 1).map(|i| sheet / (x[i + 1] - x[i])).collect();
    let apply = |u: &[f64], out: &mut [f64]| {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let k = idx(i, j);
                let c = u[k];
                let mut acc = 0.0;
                let wy = width[j];
                let wx = width[i];
                let left = if i > 1 { u[idx(i - 1, j)] } else { 0.0 };
                let right = if i < n - 2 { u[idx(i + 1, j)] } else { 0.0 };
                let down = if j > 1 { u[idx(i, j - 1)] } else { 0.0 };
                let up = if j < n - 2 { u[idx(i, j + 1)] } else { 0.0 };
                acc += cx[i - 1] * wy * (c - left);
                acc += cx[i] * wy * (c - right);
                acc += cx[j - 1] * wx * (c - down);
                acc += cx[j] * wx * (c - up);
                out[k] = acc;
            }
        }
    };
    let mut diag = vec![0.0; m * m];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            diag[idx(i, j)] = (cx[i - 1] + cx[i]) * width[j] + (cx[j - 1] + cx[j]) * width[i];
        }
    }
    let (u, iterations, residual) = conjugate_gradient(apply, &diag, &rhs, config.tolerance, 20 * m * m)?;

    let mut temperature = vec![config.t0; n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            temperature[j * n + i] = config.t0 + u[idx(i, j)];
        }
    }
    let mut weighted = 0.0;
    for j in 0..n {
        for i in 0..n {
            weighted += temperature[j * n + i] * width[i] * width[j];
        }
    }
    let t_avg = weighted / (config.a_side * config.a_side);
    let t_peak = temperature.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(HeatMap {
        nodes: x.clone(),
        temperature,
        t_peak,
        t_avg,
        delta_t_lumped: lumped_temperature_rise(config.power, config.finesse, config.kb_kappa_th)?,
        absorbed_power: p_a,
        iterations,
        residual,
    })
}

/// Jacobi-preconditioned conjugate gradients; returns the solution, iteration count and
/// final relative residual.
fn conjugate_gradient<F>(apply: F, diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; dim];
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; dim];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..dim {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res < tol {
            return Ok((x, it, res));
        }
        for k in 0..dim {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..dim {
            p[k] = z[k] + beta * p[k];
        }
    }
    let res = dot(&r, &r).sqrt() / b_norm;
    Err(Error::Numerical(format!(
        "heat solver did not converge: relative residual {res:e} after {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lumped_examples() {
        let dt = lumped_temperature_rise(850e-6, 2e5, 10e-9).unwrap();
        assert!((dt - 2.6704).abs() < 1e-4);
        assert!((lumped_temperature_rise(850e-6, 4e5, 10e-9).unwrap() - dt / 2.0).abs() < 1e-12);
        assert_eq!(lumped_temperature_rise(0.0, 2e5, 10e-9).unwrap(), 0.0);
        assert!(lumped_temperature_rise(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn disk_fraction_limits() {
        assert_eq!(disk_fraction(-0.1, 0.1, -0.1, 0.1, 1.0), 1.0);
        assert_eq!(disk_fraction(2.0, 3.0, 2.0, 3.0, 1.0), 0.0);
        let quarter = disk_fraction(0.0, 1.0, 0.0, 1.0, 1.0);
        assert!((quarter - PI / 4.0).abs() < 0.01);
    }

    #[test]
    fn no_source_keeps_frame_temperature() {
        let cfg = HeatConfig {
            power: 0.0,
            grid_cells: 64,
            ..Default::default()
        };
        let map = steady_state_heat_map(&cfg).unwrap();
        assert!(map.temperature.iter().all(|&t| t == cfg.t0));
    }

    #[test]
    fn config_validation() {
        let cfg = HeatConfig {
            grid_cells: 32,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { path, .. }) if path == "grid_cells"));
        let cfg = HeatConfig {
            waist: 0.6e-3,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { path, .. }) if path == "waist"));
        let parsed: HeatConfig = serde_json::from_str(r#"{"t0": 3.0}"#).unwrap();
        assert_eq!(parsed.t0, 3.0);
        assert_eq!(parsed.grid_cells, 128);
    }

    #[test]
    fn nodes_are_symmetric_with_centre() {
        let x = HeatConfig::default().nodes();
        assert_eq!(x.len(), 129);
        assert_eq!(x[64], 0.0);
        assert!((x[0] + 0.5e-3).abs() < 1e-18 && (x[128] - 0.5e-3).abs() < 1e-18);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }
}
