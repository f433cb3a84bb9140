//! Time evolution of first and second moments.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::GeneratorMatrices;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

/// Largest `‖Q‖·dt` handed to a single block exponential.
const MAX_EXP_NORM: f64 = 0.5;

/// Exact one-step map `d ↦ Φd`, `γ ↦ ΦγΦᵀ + W` of a constant generator.
#[derive(Debug, Clone)]
pub struct StepMap {
    pub phi: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl StepMap {
    /// Block exponential of `[[Q, N], [0, −Qᵀ]]·dt`, composed over substeps.
    pub fn new(gen: &GeneratorMatrices, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be finite and non-negative, got {dt}")));
        }
        let dim = gen.dim();
        let norm = gen.q.norm();
        let pieces = ((norm * dt / MAX_EXP_NORM).ceil() as usize).max(1);
        let h = dt / pieces as f64;

        let mut block = DMatrix::zeros(2 * dim, 2 * dim);
        block.view_mut((0, 0), (dim, dim)).copy_from(&(&gen.q * h));
        block.view_mut((0, dim), (dim, dim)).copy_from(&(&gen.n * h));
        block.view_mut((dim, dim), (dim, dim)).copy_from(&(-gen.q.transpose() * h));
        let e = block.exp();
        let phi_h = e.view((0, 0), (dim, dim)).into_owned();
        let w_h = symmetrized(&(e.view((0, dim), (dim, dim)) * phi_h.transpose()));

        let mut map = StepMap {
            phi: phi_h.clone(),
            w: w_h.clone(),
        };
        for _ in 1..pieces {
            map.w = symmetrized(&(&phi_h * &map.w * phi_h.transpose() + &w_h));
            map.phi = &phi_h * &map.phi;
        }
        Ok(map)
    }

    /// Identity map of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        StepMap {
            phi: DMatrix::identity(dim, dim),
            w: DMatrix::zeros(dim, dim),
        }
    }

    /// Map of `self` followed by `later`.
    pub fn then(&self, later: &StepMap) -> StepMap {
        StepMap {
            phi: &later.phi * &self.phi,
            w: symmetrized(&(&later.phi * &self.w * later.phi.transpose() + &later.w)),
        }
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.dim() != self.phi.nrows() {
            return Err(Error::invalid(format!(
                "state dimension {} does not match generator dimension {}",
                state.dim(),
                self.phi.nrows()
            )));
        }
        let d = &self.phi * &state.d;
        let cov = symmetrized(&(&self.phi * &state.cov * self.phi.transpose() + &self.w));
        GaussianState::from_parts_unchecked(d, cov)
    }
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// State at time `t` under a constant generator.
pub fn propagate_const(state: &GaussianState, gen: &GeneratorMatrices, t: f64) -> Result<GaussianState> {
    if t < 0.0 {
        return Err(Error::invalid(format!("propagation time must be non-negative, got {t}")));
    }
    StepMap::new(gen, t)?.apply(state)
}

/// Uniform grid `t0, t0 + h, …, t1` with `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
            return Err(Error::invalid(format!("time grid needs finite t0 ≤ t1, got [{t0}, {t1}]")));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid { t0, t1, steps })
    }

    /// Grid with step at most `h_max`.
    pub fn with_max_step(t0: f64, t1: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::invalid("maximum step must be positive"));
        }
        let steps = (((t1 - t0) / h_max).ceil() as usize).max(1);
        TimeGrid::new(t0, t1, steps)
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// States sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&GaussianState> {
        self.states.last()
    }

    /// CSV with `t`, the displacement entries and the row-major upper triangle of the covariance.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(first) = self.states.first() else {
            return Ok(());
        };
        let dim = first.dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|i| format!("d{i}")));
        for i in 0..dim {
            for j in i..dim {
                header.push(format!("cov{i}_{j}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(s.d.iter().map(|x| format!("{x:.16e}")));
            for i in 0..dim {
                for j in i..dim {
                    row.push(format!("{:.16e}", s.cov[(i, j)]));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Exact trajectory of a constant generator sampled on `grid`.
pub fn trajectory_const(state: &GaussianState, gen: &GeneratorMatrices, grid: TimeGrid) -> Result<Trajectory> {
    let map = StepMap::new(gen, grid.step())?;
    let mut states = Vec::with_capacity(grid.steps + 1);
    let mut current = state.clone();
    states.push(current.clone());
    for _ in 0..grid.steps {
        current = map.apply(&current)?;
        states.push(current.clone());
    }
    Ok(Trajectory {
        times: grid.times(),
        states,
    })
}

/// Controls for [`propagate_timedep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDepOptions {
    /// Largest frequency of the flow; the spectral radius of `Q(t0)` when `None`.
    pub omega_max: Option<f64>,
    /// Minimum number of steps per period `2π/ω_max`.
    pub steps_per_period: f64,
    /// Keep every `sample_every`-th state (the final state is always kept).
    pub sample_every: usize,
}

impl Default for TimeDepOptions {
    fn default() -> Self {
        TimeDepOptions {
            omega_max: None,
            steps_per_period: 40.0,
            sample_every: 1,
        }
    }
}

fn moment_rates(gen: &GeneratorMatrices, d: &DVector<f64>, cov: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let qc = &gen.q * cov;
    (&gen.q * d, &qc + qc.transpose() + &gen.n)
}

/// Fixed-step fourth-order Runge-Kutta for `ḋ = Qd`, `γ̇ = Qγ + γQᵀ + N`.
pub fn propagate_timedep<F>(state: &GaussianState, generator: F, grid: TimeGrid, opts: TimeDepOptions) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<GeneratorMatrices>,
{
    let h = grid.step();
    let first = generator(grid.t0)?;
    if first.dim() != state.dim() {
        return Err(Error::invalid(format!(
            "state dimension {} does not match generator dimension {}",
            state.dim(),
            first.dim()
        )));
    }
    let omega_max = match opts.omega_max {
        Some(w) => w,
        None => first.spectral_radius(),
    };
    if omega_max > 0.0 {
        let h_max = 2.0 * std::f64::consts::PI / omega_max / opts.steps_per_period;
        if h > h_max * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "step {h:e} exceeds the limit {h_max:e} set by ω_max = {omega_max:e}"
            )));
        }
    }
    let every = opts.sample_every.max(1);

    let mut d = state.d.clone();
    let mut cov = state.cov.clone();
    let mut times = vec![grid.t0];
    let mut states = vec![state.clone()];
    let mut gen_start = first;
    for k in 0..grid.steps {
        let t = grid.time(k);
        let gen_mid = generator(t + 0.5 * h)?;
        let gen_end = generator(grid.time(k + 1))?;
        let (k1d, k1c) = moment_rates(&gen_start, &d, &cov);
        let (k2d, k2c) = moment_rates(&gen_mid, &(&d + &k1d * (0.5 * h)), &(&cov + &k1c * (0.5 * h)));
        let (k3d, k3c) = moment_rates(&gen_mid, &(&d + &k2d * (0.5 * h)), &(&cov + &k2c * (0.5 * h)));
        let (k4d, k4c) = moment_rates(&gen_end, &(&d + &k3d * h), &(&cov + &k3c * h));
        d += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (h / 6.0);
        cov += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
        cov = symmetrized(&cov);
        if !cov.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("covariance diverged at t = {}", grid.time(k + 1))));
        }
        if (k + 1) % every == 0 || k + 1 == grid.steps {
            times.push(grid.time(k + 1));
            states.push(GaussianState::from_parts_unchecked(d.clone(), cov.clone())?);
        }
        gen_start = gen_end;
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{annihilation, assemble_qn, LindbladChannel, QuadraticHamiltonian};
    use crate::gaussian::{make_state, symplectic_eigenvalues, ModePrep, StateSpec};

    fn damped(gamma: f64) -> GeneratorMatrices {
        let h = QuadraticHamiltonian::zeros(1);
        let ch = LindbladChannel::new(annihilation(1, 0), gamma, "decay").unwrap();
        assemble_qn(&h, &[ch]).unwrap()
    }

    fn occupation(s: &GaussianState) -> f64 {
        0.5 * (s.cov[(0, 0)] + s.cov[(1, 1)] - 1.0) + 0.5 * s.d.norm_squared()
    }

    #[test]
    fn free_rotation() {
        let mut h = QuadraticHamiltonian::zeros(1);
        h.add_oscillator(0, 1.3);
        let gen = assemble_qn(&h, &[]).unwrap();
        let s0 = make_state(&[StateSpec::new(0, ModePrep::Coherent { re: 1.0, im: 0.0 })], 1).unwrap();
        let t = 0.7;
        let s = propagate_const(&s0, &gen, t).unwrap();
        // ⟨a⟩ = α e^{−iωt}: X = √2 cos ωt, P = −√2 sin ωt.
        assert!((s.d[0] - 2f64.sqrt() * (1.3 * t).cos()).abs() < 1e-13);
        assert!((s.d[1] + 2f64.sqrt() * (1.3 * t).sin()).abs() < 1e-13);
        assert!((s.cov.clone() - s0.cov).amax() < 1e-13);
    }

    #[test]
    fn thermal_relaxation() {
        let gamma = 0.3;
        let gen = damped(gamma);
        let s0 = make_state(&[StateSpec::new(0, ModePrep::Thermal { n_bar: 4.0 })], 1).unwrap();
        for t in [0.1, 2.0, 25.0] {
            let s = propagate_const(&s0, &gen, t).unwrap();
            assert!((occupation(&s) - 4.0 * (-gamma * t).exp()).abs() < 1e-12);
        }
        assert!(propagate_const(&s0, &gen, -1.0).is_err());
    }

    #[test]
    fn trajectory_matches_direct_propagation() {
        let gen = damped(0.2);
        let s0 = make_state(&[StateSpec::new(0, ModePrep::Squeezed { s: 0.8 })], 1).unwrap();
        let traj = trajectory_const(&s0, &gen, TimeGrid::new(0.0, 5.0, 50).unwrap()).unwrap();
        let direct = propagate_const(&s0, &gen, 5.0).unwrap();
        assert_eq!(traj.len(), 51);
        assert!((traj.last().unwrap().cov.clone() - direct.cov).amax() < 1e-13);
    }

    fn coupled() -> GeneratorMatrices {
        let mut h = QuadraticHamiltonian::zeros(2);
        h.add_oscillator(0, 1.0);
        h.add_oscillator(1, 1.1);
        h.add_quadrature_product(0, 2, -0.1);
        let chans = vec![
            LindbladChannel::new(annihilation(2, 0), 0.02, "a").unwrap(),
            LindbladChannel::new(annihilation(2, 1).map(|z| z.conj()), 0.01, "b").unwrap(),
        ];
        assemble_qn(&h, &chans).unwrap()
    }

    #[test]
    fn rk4_agrees_with_exact() {
        let gen = coupled();
        let s0 = make_state(
            &[
                StateSpec::new(0, ModePrep::Coherent { re: 0.5, im: -0.2 }),
                StateSpec::new(1, ModePrep::Squeezed { s: 0.5 }),
            ],
            2,
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 2000).unwrap();
        let rk = propagate_timedep(&s0, |_| Ok(gen.clone()), grid, TimeDepOptions::default()).unwrap();
        let exact = propagate_const(&s0, &gen, 10.0).unwrap();
        let last = rk.last().unwrap();
        assert!((last.cov.clone() - exact.cov).amax() < 1e-8);
        assert!((last.d.clone() - exact.d).amax() < 1e-8);
    }

    #[test]
    fn rk4_fourth_order() {
        let gen = coupled();
        let s0 = make_state(&[StateSpec::new(0, ModePrep::Thermal { n_bar: 1.0 })], 2).unwrap();
        let exact = propagate_const(&s0, &gen, 10.0).unwrap();
        let err = |steps| {
            let grid = TimeGrid::new(0.0, 10.0, steps).unwrap();
            let rk = propagate_timedep(&s0, |_| Ok(gen.clone()), grid, TimeDepOptions::default()).unwrap();
            (rk.last().unwrap().cov.clone() - &exact.cov).amax()
        };
        let (e1, e2) = (err(100), err(200));
        let ratio = e1 / e2;
        assert!(e2 < 1e-6);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_limit_enforced() {
        let gen = coupled();
        let s0 = GaussianState::vacuum(2).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 20).unwrap();
        assert!(propagate_timedep(&s0, |_| Ok(gen.clone()), grid, TimeDepOptions::default()).is_err());
        let relaxed = TimeDepOptions {
            omega_max: Some(0.1),
            ..Default::default()
        };
        assert!(propagate_timedep(&s0, |_| Ok(gen.clone()), grid, relaxed).is_ok());
    }

    #[test]
    fn composed_maps_match_single_map() {
        let gen = coupled();
        let a = StepMap::new(&gen, 1.3).unwrap();
        let b = StepMap::new(&gen, 2.1).unwrap();
        let ab = a.then(&b);
        let direct = StepMap::new(&gen, 3.4).unwrap();
        assert!((ab.phi - direct.phi).amax() < 1e-13);
        assert!((ab.w - direct.w).amax() < 1e-13);
        let id = StepMap::identity(4).then(&a);
        assert!((id.phi - a.phi).amax() == 0.0);
    }

    #[test]
    fn csv_layout() {
        let gen = damped(0.1);
        let s0 = GaussianState::vacuum(1).unwrap();
        let traj = trajectory_const(&s0, &gen, TimeGrid::new(0.0, 1.0, 2).unwrap()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,d0,d1,cov0_0,cov0_1,cov1_1");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("1.0000000000000000e0,"));
    }

    #[test]
    fn uncertainty_kept_along_trajectory() {
        let gen = coupled();
        let s0 = make_state(&[StateSpec::new(1, ModePrep::Squeezed { s: 0.2 })], 2).unwrap();
        let traj = trajectory_const(&s0, &gen, TimeGrid::new(0.0, 50.0, 100).unwrap()).unwrap();
        for s in &traj.states {
            let nu = symplectic_eigenvalues(&s.cov).unwrap();
            assert!(nu.iter().all(|&v| v >= 0.5 - 1e-7));
        }
    }
}
