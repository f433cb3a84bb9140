//! Brute-force density-matrix integrator in a truncated two-mode Fock space.
//!
//! Serves as an independent check of the moment equations: the same quadratic Hamiltonian
//! and channels are applied to `ρ` directly, so no Gaussian identity is used.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use sprs::{CsMat, TriMat};

use crate::dynamics::{propagate_const, LindbladChannel, Model, QuadraticHamiltonian};
use crate::error::{Error, Result};
use crate::gaussian::{make_state, ModePrep, StateSpec};
use crate::metrics::fock_negativity_numeric;
use crate::protocols::{scenario_model, scenario_rates, Scenario, ScenarioConfig};

type C = Complex64;
type Sparse = CsMat<C>;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Largest population allowed on the outermost retained levels.
pub const LEAK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `n_m, n_at ≤ N − 1` (N levels per mode).
    PerMode(usize),
    /// `n_m + n_at ≤ N − 1`.
    TotalExcitation(usize),
}

impl Truncation {
    pub fn levels(self) -> usize {
        match self {
            Truncation::PerMode(n) | Truncation::TotalExcitation(n) => n,
        }
    }
}

/// Two-mode product basis `|n_m, n_at⟩`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub truncation: Truncation,
    pub states: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl FockBasis {
    pub fn new(truncation: Truncation) -> Result<Self> {
        let n = truncation.levels();
        if !(10..=40).contains(&n) {
            return Err(Error::invalid(format!("truncation must keep 10 to 40 levels, got {n}")));
        }
        let mut states = Vec::new();
        for m in 0..n {
            for a in 0..n {
                let keep = match truncation {
                    Truncation::PerMode(_) => true,
                    Truncation::TotalExcitation(_) => m + a < n,
                };
                if keep {
                    states.push((m, a));
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(FockBasis { truncation, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    fn is_edge(&self, (m, a): (usize, usize)) -> bool {
        let n = self.truncation.levels();
        match self.truncation {
            Truncation::PerMode(_) => m + 1 == n || a + 1 == n,
            Truncation::TotalExcitation(_) => m + a + 1 == n,
        }
    }

    /// Annihilation operator of mode 0 (membrane) or 1 (atom).
    pub fn lowering(&self, mode: usize) -> Sparse {
        let d = self.dim();
        let mut t = TriMat::new((d, d));
        for (j, &(m, a)) in self.states.iter().enumerate() {
            let (n, target) = if mode == 0 {
                (m, (m.wrapping_sub(1), a))
            } else {
                (a, (m, a.wrapping_sub(1)))
            };
            if n > 0 {
                if let Some(&i) = self.index.get(&target) {
                    t.add_triplet(i, j, C::new((n as f64).sqrt(), 0.0));
                }
            }
        }
        t.to_csr()
    }
}

fn adjoint(a: &Sparse) -> Sparse {
    a.transpose_view().to_csr().map(|v| v.conj())
}

fn scale(a: &Sparse, c: C) -> Sparse {
    a.map(|v| v * c)
}

fn add(a: &Sparse, b: &Sparse) -> Sparse {
    a + b
}

fn mul(a: &Sparse, b: &Sparse) -> Sparse {
    a * b
}

/// Quadrature operators `(X_m, P_m, X_at, P_at)`.
fn quadratures(basis: &FockBasis) -> Vec<Sparse> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for mode in 0..2 {
        let a = basis.lowering(mode);
        let ad = adjoint(&a);
        out.push(scale(&add(&a, &ad), C::new(s, 0.0)));
        out.push(scale(&add(&a, &scale(&ad, C::new(-1.0, 0.0))), C::new(0.0, -s)));
    }
    out
}

/// Generator `ρ ↦ −i[H, ρ] + Σ (γ/2)(2LρL† − {L†L, ρ})` in the interaction frame of `diag(H)`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub basis: Arc<FockBasis>,
    energies: Vec<f64>,
    h_eff: Sparse,
    jumps: Vec<(f64, Sparse)>,
}

impl Superoperator {
    pub fn new(hamiltonian: &QuadraticHamiltonian, channels: &[LindbladChannel], truncation: Truncation) -> Result<Self> {
        if hamiltonian.n_modes() != 2 {
            return Err(Error::invalid("the Fock-space oracle handles two modes"));
        }
        let basis = Arc::new(FockBasis::new(truncation)?);
        let d = basis.dim();
        let r = quadratures(&basis);

        let mut h: Sparse = CsMat::zero((d, d));
        for i in 0..4 {
            for j in 0..4 {
                let c = hamiltonian.h[(i, j)];
                if c != 0.0 {
                    h = add(&h, &scale(&mul(&r[i], &r[j]), C::new(c, 0.0)));
                }
            }
        }
        let mut energies = vec![0.0; d];
        let mut diag = TriMat::new((d, d));
        for (i, row) in h.outer_iterator().enumerate() {
            if let Some(v) = row.get(i) {
                energies[i] = v.re;
                diag.add_triplet(i, i, -*v);
            }
        }
        let mut h_eff = add(&h, &diag.to_csr());

        // Σ γ_k L_k ρ L_k† = Σ K_pq B_p ρ B_q† over B = (a_m, a_m†, a_at, a_at†).
        let mut k = DMatrix::<C>::zeros(4, 4);
        for ch in channels {
            if ch.n_modes() != 2 {
                return Err(Error::invalid(format!("channel `{}` is not a two-mode channel", ch.label)));
            }
            let mut c = DVector::<C>::zeros(4);
            for mode in 0..2 {
                let (lx, lp) = (ch.l[2 * mode], ch.l[2 * mode + 1]);
                c[2 * mode] = (lx - I * lp) * std::f64::consts::FRAC_1_SQRT_2;
                c[2 * mode + 1] = (lx + I * lp) * std::f64::consts::FRAC_1_SQRT_2;
            }
            k += &c * c.adjoint() * C::new(ch.rate, 0.0);
        }
        let ladder: Vec<Sparse> = (0..2)
            .flat_map(|mode| {
                let a = basis.lowering(mode);
                let ad = adjoint(&a);
                [a, ad]
            })
            .collect();
        let eig = k.clone().symmetric_eigen();
        let scale_k = k.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut jumps = Vec::new();
        for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -1e-12 * scale_k.max(1.0) {
                return Err(Error::NonPhysical(format!("dissipation matrix has negative eigenvalue {lambda:e}")));
            }
            if lambda <= 1e-14 * scale_k {
                continue;
            }
            let v = eig.eigenvectors.column(idx);
            let mut j: Sparse = CsMat::zero((d, d));
            for p in 0..4 {
                if v[p].norm() > 0.0 {
                    j = add(&j, &scale(&ladder[p], v[p]));
                }
            }
            let jj = mul(&adjoint(&j), &j);
            h_eff = add(&h_eff, &scale(&jj, C::new(0.0, -0.5 * lambda)));
            jumps.push((lambda, j));
        }
        Ok(Superoperator {
            basis,
            energies,
            h_eff,
            jumps,
        })
    }

    pub fn from_model(model: &Model, truncation: Truncation) -> Result<Self> {
        Superoperator::new(&model.hamiltonian, &model.channels, truncation)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn phases(&self, t: f64) -> Vec<C> {
        self.energies.iter().map(|&e| C::from_polar(1.0, -e * t)).collect()
    }

    /// `dρ_I/dt` at time `t` for the interaction-frame matrix `rho` (row-major).
    fn rhs(&self, t: f64, rho: &[C], out: &mut [C], work: &mut Work) {
        let d = self.dim();
        let p = self.phases(t);
        for i in 0..d {
            for j in 0..d {
                work.lab[i * d + j] = rho[i * d + j] * p[i] * p[j].conj();
            }
        }
        sparse_dense(&self.h_eff, &work.lab, &mut work.k, d);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = -I * work.k[i * d + j] + I * work.k[j * d + i].conj();
            }
        }
        for (lambda, j_op) in &self.jumps {
            sparse_dense(j_op, &work.lab, &mut work.k, d);
            for i in 0..d {
                for j in 0..d {
                    work.kt[i * d + j] = work.k[j * d + i].conj();
                }
            }
            sparse_dense_acc(j_op, &work.kt, out, d, C::new(*lambda, 0.0));
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] *= p[i].conj() * p[j];
            }
        }
    }
}

struct Work {
    lab: Vec<C>,
    k: Vec<C>,
    kt: Vec<C>,
}

fn sparse_dense(a: &Sparse, x: &[C], y: &mut [C], d: usize) {
    y.iter_mut().for_each(|v| *v = ZERO);
    sparse_dense_acc(a, x, y, d, C::new(1.0, 0.0));
}

/// `y += c·A·x` with `x`, `y` row-major `d × d`.
fn sparse_dense_acc(a: &Sparse, x: &[C], y: &mut [C], d: usize, c: C) {
    for (i, row) in a.outer_iterator().enumerate() {
        let yrow = &mut y[i * d..(i + 1) * d];
        for (k, &v) in row.iter() {
            let f = v * c;
            let xrow = &x[k * d..(k + 1) * d];
            for (yv, xv) in yrow.iter_mut().zip(xrow) {
                *yv += f * xv;
            }
        }
    }
}

/// Single-mode preparation for the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Fock(usize),
    Coherent { re: f64, im: f64 },
    Thermal { n_bar: f64 },
}

impl ModeState {
    /// Density matrix over `levels` Fock states, renormalized after truncation.
    fn matrix(self, levels: usize) -> Result<DMatrix<C>> {
        let mut m = DMatrix::<C>::zeros(levels, levels);
        match self {
            ModeState::Fock(n) => {
                if n >= levels {
                    return Err(Error::invalid(format!("Fock state |{n}⟩ outside the truncation")));
                }
                m[(n, n)] = C::new(1.0, 0.0);
            }
            ModeState::Coherent { re, im } => {
                let alpha = C::new(re, im);
                let mut amp = vec![C::new((-0.5 * alpha.norm_sqr()).exp(), 0.0)];
                for n in 1..levels {
                    let prev = amp[n - 1];
                    amp.push(prev * alpha / (n as f64).sqrt());
                }
                for i in 0..levels {
                    for j in 0..levels {
                        m[(i, j)] = amp[i] * amp[j].conj();
                    }
                }
            }
            ModeState::Thermal { n_bar } => {
                if !(n_bar >= 0.0) {
                    return Err(Error::invalid("thermal occupation must be non-negative"));
                }
                let q = n_bar / (1.0 + n_bar);
                for n in 0..levels {
                    m[(n, n)] = C::new(q.powi(n as i32) / (1.0 + n_bar), 0.0);
                }
            }
        }
        let tr: f64 = (0..levels).map(|n| m[(n, n)].re).sum();
        Ok(m / C::new(tr, 0.0))
    }
}

/// Two-mode density matrix in the lab frame, row-major over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub basis: Arc<FockBasis>,
    pub data: Vec<C>,
}

impl DensityMatrix {
    pub fn product(basis: Arc<FockBasis>, membrane: ModeState, atom: ModeState) -> Result<Self> {
        let n = basis.truncation.levels();
        let (rm, ra) = (membrane.matrix(n)?, atom.matrix(n)?);
        let d = basis.dim();
        let mut data = vec![ZERO; d * d];
        for (i, &(mi, ai)) in basis.states.iter().enumerate() {
            for (j, &(mj, aj)) in basis.states.iter().enumerate() {
                data[i * d + j] = rm[(mi, mj)] * ra[(ai, aj)];
            }
        }
        let mut rho = DensityMatrix { basis, data };
        rho.normalize();
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn trace(&self) -> C {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    fn normalize(&mut self) -> f64 {
        let tr = self.trace().re;
        self.data.iter_mut().for_each(|v| *v /= tr);
        tr
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                err = err.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        err
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_row_slice(d, d, &self.data);
        let h = (&m + m.adjoint()) * C::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Total population of the outermost retained levels.
    pub fn edge_population(&self) -> f64 {
        let d = self.dim();
        self.basis
            .states
            .iter()
            .enumerate()
            .filter(|(_, &s)| self.basis.is_edge(s))
            .map(|(i, _)| self.data[i * d + i].re)
            .sum()
    }

    /// `tr(Aρ)`.
    pub fn expectation(&self, a: &Sparse) -> C {
        let d = self.dim();
        let mut acc = ZERO;
        for (i, row) in a.outer_iterator().enumerate() {
            for (k, &v) in row.iter() {
                acc += v * self.data[k * d + i];
            }
        }
        acc
    }

    /// Displacement and symmetrized covariance in `(X_m, P_m, X_at, P_at)`.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let r = quadratures(&self.basis);
        let d = DVector::from_iterator(4, r.iter().map(|op| self.expectation(op).re));
        let mut cov = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in i..4 {
                let sym = self.expectation(&add(&mul(&r[i], &r[j]), &mul(&r[j], &r[i]))).re * 0.5;
                cov[(i, j)] = sym - d[i] * d[j];
                cov[(j, i)] = cov[(i, j)];
            }
        }
        (d, cov)
    }

    /// Phonon-number distribution of the membrane.
    pub fn membrane_populations(&self) -> Vec<f64> {
        let d = self.dim();
        let mut p = vec![0.0; self.basis.truncation.levels()];
        for (i, &(m, _)) in self.basis.states.iter().enumerate() {
            p[m] += self.data[i * d + i].re;
        }
        p
    }

    /// Membrane Wigner function at the origin in units of `1/π`: `Σ(−1)ⁿ pₙ`.
    pub fn membrane_wigner_origin(&self) -> f64 {
        self.membrane_populations()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
            .sum()
    }

    /// `⟨ψ|ρ_m|ψ⟩` for a pure membrane state.
    pub fn membrane_overlap(&self, target: ModeState) -> Result<f64> {
        let n = self.basis.truncation.levels();
        let t = target.matrix(n)?;
        let d = self.dim();
        let mut reduced = DMatrix::<C>::zeros(n, n);
        for (i, &(mi, ai)) in self.basis.states.iter().enumerate() {
            for (j, &(mj, aj)) in self.basis.states.iter().enumerate() {
                if ai == aj {
                    reduced[(mi, mj)] += self.data[i * d + j];
                }
            }
        }
        Ok((t.transpose() * reduced).trace().re)
    }
}

/// Fixed-step fourth-order Runge-Kutta in the interaction frame; trace renormalized every step.
pub fn propagate_density(rho0: &DensityMatrix, superop: &Superoperator, t: f64, h: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) || !(h > 0.0) {
        return Err(Error::invalid("need t ≥ 0 and h > 0"));
    }
    if !Arc::ptr_eq(&rho0.basis, &superop.basis) && rho0.basis.states != superop.basis.states {
        return Err(Error::invalid("density matrix and generator use different bases"));
    }
    let d = superop.dim();
    let steps = (t / h).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let n2 = d * d;
    let mut work = Work {
        lab: vec![ZERO; n2],
        k: vec![ZERO; n2],
        kt: vec![ZERO; n2],
    };
    let mut rho = rho0.data.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; n2], vec![ZERO; n2], vec![ZERO; n2], vec![ZERO; n2]);
    let mut tmp = vec![ZERO; n2];
    let hc = C::new(h, 0.0);
    let half = C::new(0.5 * h, 0.0);
    let mut state = DensityMatrix {
        basis: superop.basis.clone(),
        data: Vec::new(),
    };
    for s in 0..steps {
        let t0 = s as f64 * h;
        superop.rhs(t0, &rho, &mut k1, &mut work);
        for ((o, r), k) in tmp.iter_mut().zip(&rho).zip(&k1) {
            *o = r + half * k;
        }
        superop.rhs(t0 + 0.5 * h, &tmp, &mut k2, &mut work);
        for ((o, r), k) in tmp.iter_mut().zip(&rho).zip(&k2) {
            *o = r + half * k;
        }
        superop.rhs(t0 + 0.5 * h, &tmp, &mut k3, &mut work);
        for ((o, r), k) in tmp.iter_mut().zip(&rho).zip(&k3) {
            *o = r + hc * k;
        }
        superop.rhs(t0 + h, &tmp, &mut k4, &mut work);
        let sixth = C::new(h / 6.0, 0.0);
        for i in 0..n2 {
            rho[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        state.data = std::mem::take(&mut rho);
        let tr = state.normalize();
        if !tr.is_finite() || (tr - 1.0).abs() > 1e-6 {
            return Err(Error::Numerical(format!("trace drifted to {tr} at step {s}")));
        }
        // The frame phases leave the diagonal untouched.
        let leak = state.edge_population();
        if leak > LEAK_TOLERANCE {
            return Err(Error::Numerical(format!(
                "population {leak:e} on the truncation edge at t = {}; increase the truncation",
                t0 + h
            )));
        }
        rho = std::mem::take(&mut state.data);
    }
    let p = superop.phases(t);
    for i in 0..d {
        for j in 0..d {
            rho[i * d + j] *= p[i] * p[j].conj();
        }
    }
    Ok(DensityMatrix {
        basis: superop.basis.clone(),
        data: rho,
    })
}

/// Oracle and Gaussian-engine results for one swap at `t_s = π/2G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapComparison {
    pub scenario: Scenario,
    pub t: f64,
    pub dim: usize,
    /// Largest absolute difference over means and covariance entries.
    pub moment_error: f64,
    /// Membrane parity `Σ(−1)ⁿpₙ` from the density matrix.
    pub wigner_oracle: f64,
    pub wigner_gaussian: f64,
    pub wigner_error: f64,
    pub edge_population: f64,
}

/// Propagates a coherent or one-phonon swap with both engines.
pub fn compare_swap(config: &ScenarioConfig, truncation: Truncation, h: f64) -> Result<SwapComparison> {
    config.validate()?;
    let atom = match config.scenario {
        Scenario::SwapCoherent => (
            ModeState::Coherent {
                re: config.beta.re,
                im: config.beta.im,
            },
            ModePrep::Coherent {
                re: config.beta.re,
                im: config.beta.im,
            },
        ),
        Scenario::SwapFock => (ModeState::Fock(1), ModePrep::Thermal { n_bar: 1.0 }),
        _ => return Err(Error::config("scenario", "oracle comparison supports swap_coherent and swap_fock")),
    };
    let rates = scenario_rates(config)?;
    let model = scenario_model(config, &rates)?;
    if model.n_modes() != 2 {
        return Err(Error::config("model", "oracle comparison needs the two-mode effective model"));
    }
    let t = PI / (2.0 * config.g_over_omega);
    let gen = model.generator()?;

    let membrane = ModePrep::Thermal { n_bar: config.membrane_n0 };
    let state0 = make_state(&[StateSpec::new(0, membrane), StateSpec::new(1, atom.1)], 2)?;
    let state = propagate_const(&state0, &gen, t)?;
    let cov_m = state.mode_cov(0);
    let wigner_gaussian = match config.scenario {
        Scenario::SwapFock => fock_negativity_numeric(&gen, &state0.mode_cov(0), t)?,
        _ => {
            let d = state.mode_displacement(0);
            let inv = cov_m
                .try_inverse()
                .ok_or_else(|| Error::NonPhysical("singular membrane covariance".into()))?;
            (-0.5 * (d.transpose() * inv * d)[0]).exp() / (2.0 * cov_m.determinant().sqrt())
        }
    };

    let superop = Superoperator::from_model(&model, truncation)?;
    let rho0 = DensityMatrix::product(superop.basis.clone(), ModeState::Thermal { n_bar: config.membrane_n0 }, atom.0)?;
    let rho = propagate_density(&rho0, &superop, t, h)?;
    let (d, cov) = rho.moments();
    let moment_error = (&d - &state.d).amax().max((&cov - &state.cov).amax());
    let wigner_oracle = rho.membrane_wigner_origin();
    Ok(SwapComparison {
        scenario: config.scenario,
        t,
        dim: rho.dim(),
        moment_error,
        wigner_oracle,
        wigner_gaussian,
        wigner_error: (wigner_oracle - wigner_gaussian).abs(),
        edge_population: rho.edge_population(),
    })
}
