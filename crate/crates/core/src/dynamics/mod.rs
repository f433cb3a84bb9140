//! Quadratic Hamiltonians, linear Lindblad channels, the drift/diffusion
//! matrices they induce, and propagation of Gaussian moments.
//!
//! The master equation has the form
//! `ρ̇ = −i[RᵀĤR, ρ] + Σₖ (γₖ/2) D[Lₖ·R](ρ)` with `D[a]ρ = 2aρa† − {a†a, ρ}`.

mod models;
mod propagate;

pub use models::*;
pub use propagate::*;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{check_symmetric, symplectic_form};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Real symmetric `Ĥ` with the Hamiltonian equal to `RᵀĤR`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    pub h: DMatrix<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if !h.nrows().is_multiple_of(2) {
            return Err(Error::invalid("Hamiltonian dimension must be even"));
        }
        check_symmetric(&h)?;
        Ok(QuadraticHamiltonian { h })
    }

    pub fn zeros(n_modes: usize) -> Self {
        QuadraticHamiltonian {
            h: DMatrix::zeros(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows() / 2
    }

    /// Adds `ω a†a` on `mode` (up to a constant).
    pub fn add_oscillator(&mut self, mode: usize, omega: f64) {
        self.h[(2 * mode, 2 * mode)] += omega / 2.0;
        self.h[(2 * mode + 1, 2 * mode + 1)] += omega / 2.0;
    }

    /// Adds `c·X_i X_j` style terms for quadrature indices `i ≠ j`.
    pub fn add_quadrature_product(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.h[(i, i)] += c;
        } else {
            self.h[(i, j)] += c / 2.0;
            self.h[(j, i)] += c / 2.0;
        }
    }

    /// Adds the Hermitian operator `Rᵀ M R`, keeping the real symmetric part of `M`.
    ///
    /// The imaginary symmetric part must vanish (up to roundoff) for a Hermitian operator;
    /// antisymmetric parts only contribute a constant through the commutators.
    pub fn add_operator_matrix(&mut self, m: &CMatrix) -> Result<()> {
        let sym = (m + m.transpose()) * Complex64::new(0.5, 0.0);
        let scale = sym.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        if sym.iter().any(|z| z.im.abs() > 1e-10 * scale) {
            return Err(Error::NonPhysical("operator matrix is not Hermitian".into()));
        }
        self.h += sym.map(|z| z.re);
        Ok(())
    }

    /// Embeds a Hamiltonian over a subset of modes.
    pub fn embed(&mut self, other: &QuadraticHamiltonian, modes: &[usize]) {
        for (a, &ma) in modes.iter().enumerate() {
            for (b, &mb) in modes.iter().enumerate() {
                for p in 0..2 {
                    for q in 0..2 {
                        self.h[(2 * ma + p, 2 * mb + q)] += other.h[(2 * a + p, 2 * b + q)];
                    }
                }
            }
        }
    }
}

/// Jump operator `L·R` applied at rate `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladChannel {
    pub l: CVector,
    pub rate: f64,
    pub label: String,
}

impl LindbladChannel {
    pub fn new(l: CVector, rate: f64, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::NonPhysical(format!("channel `{label}` has rate {rate}")));
        }
        if l.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::invalid(format!("channel `{label}` has a zero jump vector")));
        }
        Ok(LindbladChannel { l, rate, label })
    }

    pub fn n_modes(&self) -> usize {
        self.l.len() / 2
    }

    /// Same channel with its vector placed on a subset of modes of a larger system.
    pub fn embedded(&self, n_modes: usize, modes: &[usize]) -> LindbladChannel {
        let mut l = CVector::zeros(2 * n_modes);
        for (a, &m) in modes.iter().enumerate() {
            l[2 * m] = self.l[2 * a];
            l[2 * m + 1] = self.l[2 * a + 1];
        }
        LindbladChannel {
            l,
            rate: self.rate,
            label: self.label.clone(),
        }
    }
}

/// Quadrature vector of `a` on `mode`: `a = (X + iP)/√2`.
pub fn annihilation(n_modes: usize, mode: usize) -> CVector {
    let mut v = CVector::zeros(2 * n_modes);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    v[2 * mode] = Complex64::new(s, 0.0);
    v[2 * mode + 1] = Complex64::new(0.0, s);
    v
}

/// Quadrature vector of `a†` on `mode`.
pub fn creation(n_modes: usize, mode: usize) -> CVector {
    annihilation(n_modes, mode).map(|z| z.conj())
}

/// Drift `Q` and diffusion `N` of the moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrices {
    pub q: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

impl GeneratorMatrices {
    pub fn new(q: DMatrix<f64>, n: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() || n.shape() != q.shape() || !q.nrows().is_multiple_of(2) {
            return Err(Error::invalid("Q and N must be square, even and of equal size"));
        }
        check_symmetric(&n)?;
        let min = n.clone().symmetric_eigenvalues().min();
        if min < -1e-12 * n.amax().max(1.0) {
            return Err(Error::NonPhysical(format!("diffusion matrix has eigenvalue {min}")));
        }
        Ok(GeneratorMatrices { q, n })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Residual `Qγ + γQᵀ + N` of the stationary moment equation.
    pub fn lyapunov_residual(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * cov + cov * self.q.transpose() + &self.n
    }

    /// Largest eigenvalue modulus of `Q`.
    pub fn spectral_radius(&self) -> f64 {
        self.q.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Stationary covariance solving `Qγ + γQᵀ + N = 0`; requires a strictly stable drift.
    pub fn steady_state(&self) -> Result<DMatrix<f64>> {
        let eig = self.q.clone().complex_eigenvalues();
        if let Some(z) = eig.iter().find(|z| z.re >= 0.0) {
            return Err(Error::Numerical(format!("drift has non-decaying eigenvalue {z}")));
        }
        let d = self.dim();
        let id = DMatrix::<f64>::identity(d, d);
        // vec(Qγ + γQᵀ) = (I⊗Q + Q⊗I) vec(γ) in column-major order.
        let a = id.kronecker(&self.q) + self.q.kronecker(&id);
        let rhs = -DVector::from_column_slice(self.n.as_slice());
        let x = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
        let g = DMatrix::from_column_slice(d, d, x.as_slice());
        Ok((&g + g.transpose()) * 0.5)
    }
}

/// Builds `Q = 2σ(Ĥ + Im Γ̂)` and `N = 2σ Re Γ̂ σᵀ` with `Γ̂ₘₙ = Σ (γₖ/2) L*ₖₘ Lₖₙ`.
pub fn assemble_qn(h: &QuadraticHamiltonian, channels: &[LindbladChannel]) -> Result<GeneratorMatrices> {
    let dim = h.h.nrows();
    let sigma = symplectic_form(dim / 2)?;
    let mut gamma = CMatrix::zeros(dim, dim);
    for ch in channels {
        if ch.l.len() != dim {
            return Err(Error::invalid(format!(
                "channel `{}` has length {}, expected {dim}",
                ch.label,
                ch.l.len()
            )));
        }
        let w = Complex64::new(ch.rate / 2.0, 0.0);
        for m in 0..dim {
            for n in 0..dim {
                gamma[(m, n)] += w * ch.l[m].conj() * ch.l[n];
            }
        }
    }
    let re = gamma.map(|z| z.re);
    let im = gamma.map(|z| z.im);
    let q = &sigma * (&h.h + im) * 2.0;
    let n = &sigma * re * sigma.transpose() * 2.0;
    GeneratorMatrices::new(q, (&n + n.transpose()) * 0.5)
}
