//! Figures of merit for transfer and entanglement runs.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{GeneratorMatrices, StepMap};
use crate::error::{Error, Result};
use crate::gaussian::{partial_transpose, symplectic_eigenvalues, GaussianState};

fn check_block(cov: &Matrix2<f64>, what: &str) -> Result<()> {
    if !cov.iter().all(|x| x.is_finite()) || (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * cov.amax().max(1.0) {
        return Err(Error::invalid(format!("{what} is not a finite symmetric 2x2 block")));
    }
    if cov.determinant() < 0.25 - 1e-9 || cov[(0, 0)] <= 0.0 {
        return Err(Error::NonPhysical(format!("{what} violates the uncertainty relation")));
    }
    Ok(())
}

/// `F = 1/√det(γ_m(t) + γ_at(0))`; ignores the displacement.
pub fn transfer_fidelity(cov_m_t: &Matrix2<f64>, cov_at_0: &Matrix2<f64>) -> Result<f64> {
    check_block(cov_m_t, "membrane covariance")?;
    check_block(cov_at_0, "atom covariance")?;
    let det = (cov_m_t + cov_at_0).determinant();
    if !(det > 0.0) {
        return Err(Error::Numerical(format!("fidelity determinant {det} is not positive")));
    }
    Ok(1.0 / det.sqrt())
}

/// Overlap of a single-mode Gaussian with a pure Gaussian target, displacement included.
pub fn displaced_fidelity(cov: &Matrix2<f64>, d: &Vector2<f64>, target_cov: &Matrix2<f64>, target_d: &Vector2<f64>) -> Result<f64> {
    let base = transfer_fidelity(cov, target_cov)?;
    let sum = cov + target_cov;
    let inv = sum
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular covariance sum".into()))?;
    let delta = d - target_d;
    Ok(base * (-0.5 * (delta.transpose() * inv * delta)[(0, 0)]).exp())
}

/// Minimal quadrature variance of a single-mode block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinVariance {
    /// Twice the smallest eigenvalue, so that vacuum gives 1.
    pub s: f64,
    /// Angle of the minimal quadrature `X cos φ + P sin φ`, in (−π/2, π/2].
    pub angle: f64,
    pub db: f64,
}

pub fn min_variance(cov: &Matrix2<f64>) -> Result<MinVariance> {
    check_block(cov, "covariance block")?;
    let (a, b, c) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 1)]);
    let lambda = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
    // Eigenvector of the smaller eigenvalue lies at 2φ = atan2(2b, a − c) + π.
    let mut angle = 0.5 * (2.0 * b).atan2(a - c) + 0.5 * PI;
    if angle > 0.5 * PI {
        angle -= PI;
    }
    let s = 2.0 * lambda;
    Ok(MinVariance {
        s,
        angle,
        db: 10.0 * s.log10(),
    })
}

/// Mean excitation number `⟨a†a⟩` of one mode.
pub fn occupation(state: &GaussianState, mode: usize) -> Result<f64> {
    if mode >= state.n_modes {
        return Err(Error::invalid(format!("mode {mode} out of range for {} modes", state.n_modes)));
    }
    let c = state.mode_cov(mode);
    let d = state.mode_displacement(mode);
    Ok(0.5 * (c[(0, 0)] + c[(1, 1)] - 1.0) + 0.5 * d.norm_squared())
}

/// Logarithmic negativity `max(0, −log₂(2ν̃₋))` of a two-mode state.
pub fn log_negativity(state: &GaussianState) -> Result<f64> {
    if state.n_modes != 2 {
        return Err(Error::invalid("logarithmic negativity needs exactly two modes"));
    }
    let pt = partial_transpose(state, 1)?;
    let nu = symplectic_eigenvalues(&pt.cov)?;
    let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(nu_min > 0.0) {
        return Err(Error::NonPhysical(format!("partial transpose has symplectic eigenvalue {nu_min}")));
    }
    Ok((-(2.0 * nu_min).log2()).max(0.0))
}

/// Membrane Wigner value at the origin relative to its vacuum value, for a one-phonon
/// atomic input, given the map `(Φ, W)` from the initial time.
///
/// Mode 0 is the membrane, mode 1 the atom; any further modes start in vacuum.
pub fn fock_negativity_from_map(map: &StepMap, membrane_cov0: &Matrix2<f64>) -> Result<f64> {
    let dim = map.phi.nrows();
    if dim < 4 || !dim.is_multiple_of(2) {
        return Err(Error::invalid("Fock negativity needs at least the membrane and atom modes"));
    }
    check_block(membrane_cov0, "initial membrane covariance")?;
    let mut gamma0 = DMatrix::<f64>::identity(dim, dim) * 0.5;
    gamma0.view_mut((0, 0), (2, 2)).copy_from(membrane_cov0);
    let gamma = &map.phi * gamma0 * map.phi.transpose() + &map.w;
    let a: Matrix2<f64> = gamma.fixed_view::<2, 2>(0, 0).into_owned();
    let k: Matrix2<f64> = map.phi.fixed_view::<2, 2>(0, 2).transpose();
    let det = a.determinant();
    let a_inv = a
        .try_inverse()
        .filter(|_| det > 0.0)
        .ok_or_else(|| Error::NonPhysical("membrane block is not positive definite".into()))?;
    let c = k.transpose() * k;
    Ok((1.0 - 0.5 * (c * a_inv).trace()) / (2.0 * det.sqrt()))
}

/// [`fock_negativity_from_map`] at time `t` under a constant generator.
pub fn fock_negativity_numeric(gen: &GeneratorMatrices, membrane_cov0: &Matrix2<f64>, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::invalid("time must be non-negative"));
    }
    fock_negativity_from_map(&StepMap::new(gen, t)?, membrane_cov0)
}

/// Analytic swap-dynamics negativity with rotating-wave dissipation.
pub fn fock_negativity_rwa(t: f64, g: f64, gamma_c: f64, gamma_m: f64, gamma_at: f64) -> Result<f64> {
    if gamma_c < 0.0 || gamma_m < 0.0 || gamma_at < 0.0 {
        return Err(Error::invalid("rates must be non-negative"));
    }
    let asym = if g == 0.0 {
        if gamma_m != gamma_at {
            return Err(Error::invalid("G = 0 requires Γm = Γat"));
        }
        0.0
    } else {
        (2.0 * g * t).sin() * (gamma_m - gamma_at) / (2.0 * g)
    };
    let n_bar = 0.5 * (2.0 * gamma_c + gamma_m + gamma_at) * t;
    let den = 1.0 + 2.0 * n_bar + asym;
    Ok((2.0 * n_bar + (2.0 * g * t).cos() + asym) / (den * den))
}

/// Closed-form swap figures for equal dissipation rates `fG`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaPrediction {
    pub t_swap: f64,
    pub fidelity_swap: f64,
    pub n_bar_swap: f64,
    /// Added to the input `s` of a squeezed atom: `s(t_s) = s(0) + 2πf`.
    pub squeezing_offset: f64,
    pub fock_negativity_swap: f64,
}

impl RwaPrediction {
    pub fn squeezing_out(&self, s0: f64) -> f64 {
        s0 + self.squeezing_offset
    }
}

pub fn rwa_predictions(f: f64, g: f64) -> Result<RwaPrediction> {
    if !(f >= 0.0) || !(g > 0.0) {
        return Err(Error::invalid("need f ≥ 0 and G > 0"));
    }
    let t_swap = PI / (2.0 * g);
    Ok(RwaPrediction {
        t_swap,
        fidelity_swap: 1.0 / (1.0 + PI * f),
        n_bar_swap: PI * f,
        squeezing_offset: 2.0 * PI * f,
        fock_negativity_swap: fock_negativity_rwa(t_swap, g, f * g, f * g, f * g)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_qn, LindbladChannel, QuadraticHamiltonian};
    use crate::gaussian::{make_state, two_mode_squeezed_cov, ModePrep, StateSpec};
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn half() -> Matrix2<f64> {
        Matrix2::identity() * 0.5
    }

    #[test]
    fn fidelity_examples() {
        assert!((transfer_fidelity(&half(), &half()).unwrap() - 1.0).abs() < 1e-15);
        let n = 3.0;
        let th = Matrix2::identity() * (n + 0.5);
        assert!((transfer_fidelity(&th, &half()).unwrap() - 1.0 / (1.0 + n)).abs() < 1e-15);
        // Membrane picks up πf thermal quanta on top of the transferred vacuum.
        let f = 0.1;
        let out = Matrix2::identity() * (0.5 + PI * f);
        let fid = transfer_fidelity(&out, &half()).unwrap();
        assert!((fid - 0.7609).abs() < 5e-5);
        assert!(transfer_fidelity(&(Matrix2::identity() * 0.1), &half()).is_err());
    }

    #[test]
    fn displaced_fidelity_of_coherent_states() {
        let d = Vector2::new(2f64.sqrt(), 0.0);
        let f = displaced_fidelity(&half(), &d, &half(), &Vector2::zeros()).unwrap();
        // |⟨0|α⟩|² = e^{−|α|²}
        assert!((f - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn squeezing_examples() {
        let v = min_variance(&half()).unwrap();
        assert!((v.s - 1.0).abs() < 1e-15 && v.db.abs() < 1e-12);
        let sq = Matrix2::new((-2.0f64).exp() / 2.0, 0.0, 0.0, 2f64.exp() / 2.0);
        let v = min_variance(&sq).unwrap();
        assert!((v.s - (-2.0f64).exp()).abs() < 1e-15);
        assert!((v.db + 8.69).abs() < 5e-3);
        assert!(v.angle.abs() < 1e-15);
        let s = (-1.0f64).exp() + 2.0 * PI * 0.1;
        assert!((s - 0.9962).abs() < 5e-5);
        assert!((10.0 * s.log10() + 0.0165).abs() < 5e-4);
    }

    #[test]
    fn occupation_examples() {
        let alpha = (0.3, -1.1);
        let s = make_state(
            &[
                StateSpec::new(0, ModePrep::Coherent { re: alpha.0, im: alpha.1 }),
                StateSpec::new(1, ModePrep::Thermal { n_bar: 2.5 }),
            ],
            2,
        )
        .unwrap();
        assert!((occupation(&s, 0).unwrap() - (0.09 + 1.21)).abs() < 1e-14);
        assert!((occupation(&s, 1).unwrap() - 2.5).abs() < 1e-14);
        assert!(occupation(&s, 2).is_err());
    }

    #[test]
    fn negativity_examples() {
        let vac = GaussianState::vacuum(2).unwrap();
        assert_eq!(log_negativity(&vac).unwrap(), 0.0);
        for r in [0.1, 0.5, 1.2] {
            let s = GaussianState::new(DVector::zeros(4), two_mode_squeezed_cov(r)).unwrap();
            let en = log_negativity(&s).unwrap();
            assert!((en - 2.0 * r / 2f64.ln()).abs() < 1e-10, "r = {r}: {en}");
        }
        assert!(log_negativity(&GaussianState::vacuum(1).unwrap()).is_err());
    }

    #[test]
    fn rwa_negativity_examples() {
        let g = 0.034;
        let ts = PI / (2.0 * g);
        for f in [0.0, 0.05, 0.1] {
            let r = fock_negativity_rwa(ts, g, f * g, f * g, f * g).unwrap();
            let x = 2.0 * PI * f;
            assert!((r - (x - 1.0) / ((1.0 + x) * (1.0 + x))).abs() < 1e-14);
        }
        assert!((fock_negativity_rwa(ts, g, 0.1 * g, 0.1 * g, 0.1 * g).unwrap() + 0.140).abs() < 5e-4);
        let f = 1.0 / (2.0 * PI);
        assert!(fock_negativity_rwa(ts, g, f * g, f * g, f * g).unwrap().abs() < 1e-15);
        assert!(fock_negativity_rwa(1.0, 0.0, 0.1, 0.2, 0.1).is_err());
        assert_eq!(fock_negativity_rwa(0.0, 0.0, 0.0, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn rwa_prediction_examples() {
        let p = rwa_predictions(0.0, 0.034).unwrap();
        assert_eq!((p.fidelity_swap, p.n_bar_swap), (1.0, 0.0));
        let p = rwa_predictions(0.1, 0.034).unwrap();
        assert!((p.fidelity_swap - 0.7609).abs() < 5e-5);
        assert!((p.n_bar_swap - 0.3142).abs() < 5e-5);
        // ½(4fG)(π/2G) = πf
        assert!((0.5 * 4.0 * 0.1 * 0.034 * p.t_swap - p.n_bar_swap).abs() < 1e-15);
    }

    fn beam_splitter(g: f64, rate: f64) -> GeneratorMatrices {
        let mut h = QuadraticHamiltonian::zeros(2);
        // G(a_m†a_at + h.c.) = G(X_m X_at + P_m P_at)
        h.add_quadrature_product(0, 2, g);
        h.add_quadrature_product(1, 3, g);
        let mut chans = Vec::new();
        if rate > 0.0 {
            for mode in 0..2 {
                chans.push(LindbladChannel::new(crate::dynamics::annihilation(2, mode), rate, "c").unwrap());
                chans.push(LindbladChannel::new(crate::dynamics::creation(2, mode), rate, "h").unwrap());
            }
        }
        assemble_qn(&h, &chans).unwrap()
    }

    #[test]
    fn numeric_negativity_limits() {
        let g = 0.05;
        let gen = beam_splitter(g, 0.0);
        assert!((fock_negativity_numeric(&gen, &half(), 0.0).unwrap() - 1.0).abs() < 1e-14);
        let ts = PI / (2.0 * g);
        assert!((fock_negativity_numeric(&gen, &half(), ts).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn numeric_negativity_matches_rwa_formula_for_beam_splitter() {
        // Equal heating and cooling channels at rate r add r quanta per unit time: Γm = Γat = r, Γc = 0.
        let (g, r) = (0.04, 0.002);
        let gen = beam_splitter(g, r);
        for t in [5.0, 20.0, PI / (2.0 * g)] {
            let num = fock_negativity_numeric(&gen, &half(), t).unwrap();
            let ana = fock_negativity_rwa(t, g, 0.0, r, r).unwrap();
            assert!((num - ana).abs() < 1e-12, "t = {t}: {num} vs {ana}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let gen = beam_splitter(0.07, 0.003);
        let t = 13.0;
        let map = StepMap::new(&gen, t).unwrap();
        let closed = fock_negativity_from_map(&map, &half()).unwrap();
        let mut gamma0 = DMatrix::<f64>::identity(4, 4) * 0.5;
        gamma0[(0, 0)] = 0.5;
        let gamma = &map.phi * gamma0 * map.phi.transpose() + &map.w;
        let a = gamma.fixed_view::<2, 2>(0, 0).into_owned();
        let k: Matrix2<f64> = map.phi.fixed_view::<2, 2>(0, 2).transpose();
        // Trapezoid rule on χ(ζ) = (1 − ½|Kζ|²) exp(−½ζᵀAζ) over a box.
        let (n, half_width) = (401, 14.0);
        let h = 2.0 * half_width / (n - 1) as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = Vector2::new(-half_width + i as f64 * h, -half_width + j as f64 * h);
                let kz = k * z;
                sum += (1.0 - 0.5 * kz.norm_squared()) * (-0.5 * (z.transpose() * a * z)[(0, 0)]).exp();
            }
        }
        let quad = sum * h * h / (4.0 * PI);
        assert!((closed - quad).abs() < 1e-9, "{closed} vs {quad}");
    }

    proptest! {
        #[test]
        fn product_states_have_no_log_negativity(
            s1 in -1.5f64..1.5, n1 in 0.0f64..3.0, s2 in -1.5f64..1.5, n2 in 0.0f64..3.0, phi in 0.0f64..3.2,
        ) {
            let block = |s: f64, n: f64| {
                let (c, si) = (phi.cos(), phi.sin());
                let r = Matrix2::new(c, -si, si, c);
                r * Matrix2::new((2.0 * n + 1.0) * (-s).exp() / 2.0, 0.0, 0.0, (2.0 * n + 1.0) * s.exp() / 2.0) * r.transpose()
            };
            let mut cov = DMatrix::zeros(4, 4);
            cov.view_mut((0, 0), (2, 2)).copy_from(&block(s1, n1));
            cov.view_mut((2, 2), (2, 2)).copy_from(&block(s2, n2));
            let st = GaussianState::new(DVector::zeros(4), cov).unwrap();
            prop_assert_eq!(log_negativity(&st).unwrap(), 0.0);
        }

        #[test]
        fn min_variance_rotation_invariant(s in -2.0f64..2.0, n in 0.0f64..2.0, phi in -3.2f64..3.2) {
            let base = Matrix2::new((2.0 * n + 1.0) * (-s).exp() / 2.0, 0.0, 0.0, (2.0 * n + 1.0) * s.exp() / 2.0);
            let r = Matrix2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos());
            let a = min_variance(&base).unwrap();
            let b = min_variance(&(r * base * r.transpose())).unwrap();
            prop_assert!((a.s - b.s).abs() < 1e-12 * a.s.max(1.0));
        }
    }
}
