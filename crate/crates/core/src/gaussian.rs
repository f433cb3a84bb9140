//! Gaussian states over `n` bosonic modes in dimensionless quadratures.
//!
//! Quadratures are ordered `(X1, P1, X2, P2, ...)` with `X = (a + a†)/√2` and
//! `P = (a - a†)/(i√2)`. The covariance convention puts the vacuum at `I/2`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below 1/2 for symplectic eigenvalues of a valid state.
pub const UNCERTAINTY_TOL: f64 = 1e-9;
/// Largest real part tolerated on the (purely imaginary) spectrum of `σ·cov`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` blocks.
pub fn symplectic_form(n_modes: usize) -> Result<DMatrix<f64>> {
    if n_modes == 0 {
        return Err(Error::invalid("symplectic form needs at least one mode"));
    }
    let dim = 2 * n_modes;
    let mut sigma = DMatrix::zeros(dim, dim);
    for k in 0..n_modes {
        sigma[(2 * k, 2 * k + 1)] = 1.0;
        sigma[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(sigma)
}

/// Per-mode preparation used by [`make_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModePrep {
    Vacuum,
    /// Coherent state `|α⟩`.
    Coherent {
        re: f64,
        im: f64,
    },
    /// Quadrature-squeezed vacuum with `Var(X) = s/2`, `Var(P) = 1/(2s)`.
    Squeezed {
        s: f64,
    },
    /// Thermal state with mean occupation `n_bar`.
    Thermal {
        n_bar: f64,
    },
}

impl ModePrep {
    pub fn coherent(alpha: Complex64) -> Self {
        ModePrep::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }
}

/// A preparation applied to one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub mode: usize,
    #[serde(flatten)]
    pub prep: ModePrep,
}

impl StateSpec {
    pub fn new(mode: usize, prep: ModePrep) -> Self {
        StateSpec { mode, prep }
    }
}

/// First and second moments of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub n_modes: usize,
    pub d: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds and validates a state.
    pub fn new(d: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::from_parts_unchecked(d, cov)?;
        state.validate()?;
        Ok(state)
    }

    /// Builds a state checking only the shapes. Used for partially transposed
    /// or intermediate moment data that need not be physical.
    pub fn from_parts_unchecked(d: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = d.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid(format!("displacement length {dim} is not a positive even number")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(GaussianState { n_modes: dim / 2, d, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("state needs at least one mode"));
        }
        let dim = 2 * n_modes;
        Ok(GaussianState {
            n_modes,
            d: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * 0.5,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    /// Checks covariance symmetry and the uncertainty principle.
    pub fn validate(&self) -> Result<()> {
        check_symmetric(&self.cov)?;
        let nu = symplectic_eigenvalues(&self.cov)?;
        if let Some(&min) = nu.first() {
            if min < 0.5 - UNCERTAINTY_TOL {
                return Err(Error::NonPhysical(format!(
                    "smallest symplectic eigenvalue {min} violates the uncertainty bound 1/2"
                )));
            }
        }
        Ok(())
    }

    /// 2x2 covariance block of one mode.
    pub fn mode_cov(&self, mode: usize) -> Matrix2<f64> {
        let i = 2 * mode;
        Matrix2::new(
            self.cov[(i, i)],
            self.cov[(i, i + 1)],
            self.cov[(i + 1, i)],
            self.cov[(i + 1, i + 1)],
        )
    }

    pub fn mode_displacement(&self, mode: usize) -> Vector2<f64> {
        Vector2::new(self.d[2 * mode], self.d[2 * mode + 1])
    }

    /// Restores exact symmetry after floating-point propagation.
    pub fn symmetrize(&mut self) {
        let t = self.cov.transpose();
        self.cov = (&self.cov + t) * 0.5;
    }
}

/// Prepares a product state; modes not mentioned stay in vacuum.
///
/// A coherent amplitude may be combined with one covariance-setting preparation
/// (squeezed or thermal) on the same mode.
pub fn make_state(specs: &[StateSpec], n_modes: usize) -> Result<GaussianState> {
    let mut state = GaussianState::vacuum(n_modes)?;
    let mut cov_set = vec![false; n_modes];
    for spec in specs {
        if spec.mode >= n_modes {
            return Err(Error::invalid(format!("mode index {} out of range for {n_modes} modes", spec.mode)));
        }
        let i = 2 * spec.mode;
        let mut set_block = |block: [f64; 2]| -> Result<()> {
            if cov_set[spec.mode] {
                return Err(Error::invalid(format!(
                    "mode {} has more than one covariance preparation",
                    spec.mode
                )));
            }
            cov_set[spec.mode] = true;
            state.cov[(i, i)] = block[0];
            state.cov[(i + 1, i + 1)] = block[1];
            Ok(())
        };
        match spec.prep {
            ModePrep::Vacuum => {}
            ModePrep::Coherent { re, im } => {
                state.d[i] = std::f64::consts::SQRT_2 * re;
                state.d[i + 1] = std::f64::consts::SQRT_2 * im;
            }
            ModePrep::Squeezed { s } => {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::invalid(format!("squeezing parameter must be positive, got {s}")));
                }
                set_block([s / 2.0, 1.0 / (2.0 * s)])?;
            }
            ModePrep::Thermal { n_bar } => {
                if !(n_bar >= 0.0) || !n_bar.is_finite() {
                    return Err(Error::invalid(format!("thermal occupation must be non-negative, got {n_bar}")));
                }
                set_block([n_bar + 0.5, n_bar + 0.5])?;
            }
        }
    }
    Ok(state)
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid("matrix is not square"));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NonPhysical(format!(
                    "covariance not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Symplectic eigenvalues of a covariance matrix, ascending, one per mode.
///
/// Taken as the moduli of the conjugate pairs `±iν` in the spectrum of `σ·cov`.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::invalid(format!("covariance dimension {dim} is not even")));
    }
    check_symmetric(cov)?;
    let sigma = symplectic_form(dim / 2)?;
    let spectrum = (sigma * cov).complex_eigenvalues();
    let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if let Some(z) = spectrum.iter().find(|z| z.re.abs() > IMAG_RESIDUE_TOL * scale) {
        return Err(Error::NonPhysical(format!(
            "σ·cov has eigenvalue {z} off the imaginary axis; covariance is not positive definite"
        )));
    }
    let mut moduli: Vec<f64> = spectrum.iter().map(|z| z.im.abs()).collect();
    moduli.sort_by(f64::total_cmp);
    Ok(moduli.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// Flips the sign of `P` of the chosen mode (time reversal on that mode).
pub fn partial_transpose(state: &GaussianState, mode: usize) -> Result<GaussianState> {
    if state.n_modes != 2 {
        return Err(Error::invalid(format!(
            "partial transpose is only defined here for two modes, got {}",
            state.n_modes
        )));
    }
    if mode >= 2 {
        return Err(Error::invalid(format!("mode index {mode} out of range")));
    }
    let p = 2 * mode + 1;
    let mut out = state.clone();
    out.d[p] = -out.d[p];
    for k in 0..out.dim() {
        if k != p {
            out.cov[(p, k)] = -out.cov[(p, k)];
            out.cov[(k, p)] = -out.cov[(k, p)];
        }
    }
    Ok(out)
}

/// Standard two-mode squeezed vacuum covariance with squeezing `r`.
pub fn two_mode_squeezed_cov(r: f64) -> DMatrix<f64> {
    let c = (2.0 * r).cosh() / 2.0;
    let s = (2.0 * r).sinh() / 2.0;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn symplectic_form_blocks() {
        let s1 = symplectic_form(1).unwrap();
        assert_eq!(s1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let s2 = symplectic_form(2).unwrap();
        assert_eq!(s2[(2, 3)], 1.0);
        assert_eq!(s2[(3, 2)], -1.0);
        assert_eq!(s2[(0, 2)], 0.0);
        let s3 = symplectic_form(3).unwrap();
        assert_eq!(s3.transpose(), -&s3);
        for n in 1..=4 {
            let s = symplectic_form(n).unwrap();
            let sq = &s * &s;
            assert_eq!(sq, -DMatrix::<f64>::identity(2 * n, 2 * n));
        }
        assert!(symplectic_form(0).is_err());
    }

    #[test]
    fn constructors() {
        let vac = make_state(&[], 2).unwrap();
        assert_eq!(vac.d, DVector::zeros(4));
        assert_eq!(vac.cov, DMatrix::identity(4, 4) * 0.5);

        let coh = make_state(&[StateSpec::new(1, ModePrep::coherent(Complex64::new(1.0, 0.0)))], 2).unwrap();
        assert!(approx(coh.d[2], 2f64.sqrt(), 1e-15));
        assert_eq!(coh.d[0], 0.0);
        assert_eq!(coh.d[3], 0.0);

        let s = (-2.0f64).exp();
        let sq = make_state(&[StateSpec::new(0, ModePrep::Squeezed { s })], 1).unwrap();
        assert!(approx(sq.cov[(0, 0)], s / 2.0, 1e-15));
        assert!(approx(sq.cov[(1, 1)], 2f64.exp() / 2.0, 1e-12));
    }

    #[test]
    fn constructor_errors() {
        assert!(make_state(&[StateSpec::new(0, ModePrep::Squeezed { s: 0.0 })], 1).is_err());
        assert!(make_state(&[StateSpec::new(0, ModePrep::Squeezed { s: -1.0 })], 1).is_err());
        assert!(make_state(&[StateSpec::new(0, ModePrep::Thermal { n_bar: -0.1 })], 1).is_err());
        assert!(make_state(&[StateSpec::new(2, ModePrep::Vacuum)], 2).is_err());
        assert!(make_state(
            &[
                StateSpec::new(0, ModePrep::Thermal { n_bar: 1.0 }),
                StateSpec::new(0, ModePrep::Squeezed { s: 0.5 })
            ],
            1
        )
        .is_err());
    }

    #[test]
    fn symplectic_eigenvalue_examples() {
        let vac = GaussianState::vacuum(1).unwrap();
        let nu = symplectic_eigenvalues(&vac.cov).unwrap();
        assert!(approx(nu[0], 0.5, 1e-14));

        let th = make_state(&[StateSpec::new(0, ModePrep::Thermal { n_bar: 1.0 })], 1).unwrap();
        assert!(approx(symplectic_eigenvalues(&th.cov).unwrap()[0], 1.5, 1e-13));

        let tms = two_mode_squeezed_cov(0.5);
        let nu = symplectic_eigenvalues(&tms).unwrap();
        assert_eq!(nu.len(), 2);
        assert!(approx(nu[0], 0.5, 1e-10) && approx(nu[1], 0.5, 1e-10));
    }

    #[test]
    fn symplectic_eigenvalues_reject_asymmetric() {
        let mut m = DMatrix::identity(2, 2) * 0.5;
        m[(0, 1)] = 0.1;
        assert!(symplectic_eigenvalues(&m).is_err());
        assert!(symplectic_eigenvalues(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn two_mode_squeezed_is_symplectic_conjugate_of_vacuum() {
        // S = exp(r K) for the generator of two-mode squeezing; cov = S (I/2) S^T.
        let r = 0.5;
        let mut k = DMatrix::zeros(4, 4);
        k[(0, 2)] = 1.0;
        k[(2, 0)] = 1.0;
        k[(1, 3)] = -1.0;
        k[(3, 1)] = -1.0;
        let s = (k * r).exp();
        let sigma = symplectic_form(2).unwrap();
        assert!((&s * &sigma * s.transpose() - &sigma).amax() < 1e-12);
        let cov = &s * s.transpose() * 0.5;
        assert!((cov - two_mode_squeezed_cov(r)).amax() < 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let vac = GaussianState::vacuum(2).unwrap();
        assert_eq!(partial_transpose(&vac, 1).unwrap().cov, vac.cov);

        let th = make_state(
            &[
                StateSpec::new(0, ModePrep::Thermal { n_bar: 0.3 }),
                StateSpec::new(1, ModePrep::Thermal { n_bar: 2.0 }),
            ],
            2,
        )
        .unwrap();
        assert_eq!(partial_transpose(&th, 0).unwrap().cov, th.cov);

        let r = 0.5;
        let tms = GaussianState::new(DVector::zeros(4), two_mode_squeezed_cov(r)).unwrap();
        let pt = partial_transpose(&tms, 1).unwrap();
        let nu = symplectic_eigenvalues(&pt.cov).unwrap();
        assert!(approx(nu[0], (-2.0 * r).exp() / 2.0, 1e-10));
        assert!(approx(nu[0], (-1.0f64).exp() / 2.0, 1e-10));

        assert!(partial_transpose(&GaussianState::vacuum(3).unwrap(), 0).is_err());
        assert!(partial_transpose(&vac, 2).is_err());
    }

    #[test]
    fn validate_rejects_sub_vacuum() {
        let bad = GaussianState::from_parts_unchecked(DVector::zeros(2), DMatrix::identity(2, 2) * 0.4).unwrap();
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn pure_states_have_unit_half_eigenvalues(
            re in -3.0f64..3.0, im in -3.0f64..3.0, ln_s in -2.5f64..2.5
        ) {
            let st = make_state(&[
                StateSpec::new(0, ModePrep::Coherent { re, im }),
                StateSpec::new(1, ModePrep::Squeezed { s: ln_s.exp() }),
            ], 2).unwrap();
            st.validate().unwrap();
            for nu in symplectic_eigenvalues(&st.cov).unwrap() {
                prop_assert!((nu - 0.5).abs() < 1e-10);
            }
        }

        #[test]
        fn constructed_states_validate(n0 in 0.0f64..20.0, n1 in 0.0f64..20.0, ln_s in -3.0f64..3.0) {
            let st = make_state(&[
                StateSpec::new(0, ModePrep::Thermal { n_bar: n0 }),
                StateSpec::new(1, ModePrep::Thermal { n_bar: n1 }),
                StateSpec::new(2, ModePrep::Squeezed { s: ln_s.exp() }),
            ], 3).unwrap();
            prop_assert!(st.validate().is_ok());
        }
    }
}
