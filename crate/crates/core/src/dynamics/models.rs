//! Generators of the effective two-mode model and of the full four-mode model.

use num_complex::Complex64;

use super::{annihilation, assemble_qn, creation, CMatrix, CVector, GeneratorMatrices, LindbladChannel, QuadraticHamiltonian};
use crate::error::{Error, Result};
use crate::system::DerivedRates;

pub const MEMBRANE: usize = 0;
pub const ATOM: usize = 1;
pub const CAVITY_1: usize = 2;
pub const CAVITY_2: usize = 3;

/// Hamiltonian and dissipation channels of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub hamiltonian: QuadraticHamiltonian,
    pub channels: Vec<LindbladChannel>,
}

impl Model {
    pub fn generator(&self) -> Result<GeneratorMatrices> {
        assemble_qn(&self.hamiltonian, &self.channels)
    }

    pub fn n_modes(&self) -> usize {
        self.hamiltonian.n_modes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectiveOptions {
    /// Use the sideband-resolved coupling instead of `4 g_m g_at / Δ`.
    pub use_exact_g: bool,
    /// Keep the `iε(a_m a_at − h.c.)` correction.
    pub include_epsilon: bool,
    /// Cavity-induced decay with diagonal (RWA) rates rather than the full M̂ matrices.
    pub rwa_cavity_decay: bool,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        EffectiveOptions {
            use_exact_g: true,
            include_epsilon: false,
            rwa_cavity_decay: true,
        }
    }
}

/// Which correlated-decay description to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    Exact,
    Rwa,
}

/// Force operators `F₁,₂ = (−g_m a_m ± g_at a_at)/g` as quadrature vectors.
pub fn force_vectors(g_m: f64, g_at: f64, n_modes: usize, membrane: usize, atom: usize) -> Option<(CVector, CVector)> {
    let g = (g_m * g_m + g_at * g_at).sqrt();
    if g == 0.0 {
        return None;
    }
    let am = annihilation(n_modes, membrane) * Complex64::new(-g_m / g, 0.0);
    let aa = annihilation(n_modes, atom) * Complex64::new(g_at / g, 0.0);
    Some((&am + &aa, am - aa))
}

fn conj(v: &CVector) -> CVector {
    v.map(|z| z.conj())
}

fn push(channels: &mut Vec<LindbladChannel>, l: CVector, rate: f64, label: &str) -> Result<()> {
    if rate > 0.0 {
        channels.push(LindbladChannel::new(l, rate, label)?);
    } else if rate < 0.0 {
        return Err(Error::NonPhysical(format!("channel `{label}` has negative rate {rate}")));
    }
    Ok(())
}

/// Thermal contact of `mode`: `a` at `γ(n̄+1)` and `a†` at `γn̄`.
pub fn membrane_bath_channels(n_modes: usize, mode: usize, gamma_mech: f64, n_bar: f64) -> Result<Vec<LindbladChannel>> {
    let mut out = Vec::new();
    push(
        &mut out,
        annihilation(n_modes, mode),
        gamma_mech * (n_bar + 1.0),
        "membrane_cooling",
    )?;
    push(&mut out, creation(n_modes, mode), gamma_mech * n_bar, "membrane_heating")?;
    Ok(out)
}

/// Momentum diffusion `(Γ_at/2) D[a + a†]`, i.e. jump vector `√2 X` at rate `Γ_at`.
pub fn atom_diffusion_channel(n_modes: usize, mode: usize, gamma_at: f64) -> Result<Vec<LindbladChannel>> {
    let mut l = CVector::zeros(2 * n_modes);
    l[2 * mode] = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    let mut out = Vec::new();
    push(&mut out, l, gamma_at, "atom_diffusion")?;
    Ok(out)
}

fn h_pm(g2: f64, delta: f64, kappa: f64, omega_m: f64) -> Result<(Complex64, Complex64)> {
    let hp = Complex64::new(kappa, delta + omega_m);
    let hm = Complex64::new(kappa, delta - omega_m);
    if hp.norm() == 0.0 || hm.norm() == 0.0 {
        return Err(Error::invalid("resonant divergence: κ = 0 with |Δ| = ω_m"));
    }
    Ok((g2 / hp, g2 / hm))
}

/// Eigen-decomposition of a 2x2 Hermitian matrix `[[a, b], [b*, d]]`.
fn hermitian_eigen_2x2(a: f64, b: Complex64, d: f64) -> [(f64, [Complex64; 2]); 2] {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let mut out = [(0.0, [Complex64::new(0.0, 0.0); 2]); 2];
    for (k, lambda) in [mean + rad, mean - rad].into_iter().enumerate() {
        let v = if b.norm() == 0.0 {
            // Already diagonal: pick the matching unit vector.
            let first = if k == 0 { a >= d } else { a < d };
            if first {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
        } else {
            let c1 = [b, Complex64::new(lambda - a, 0.0)];
            let c2 = [Complex64::new(lambda - d, 0.0), b.conj()];
            let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
            let n2 = (c2[0].norm_sqr() + c2[1].norm_sqr()).sqrt();
            if n1 >= n2 {
                [c1[0] / n1, c1[1] / n1]
            } else {
                [c2[0] / n2, c2[1] / n2]
            }
        };
        out[k] = (lambda, v);
    }
    out
}

/// Cavity-induced correlated decay of the two-mode system, one block per cavity detuning.
pub fn correlated_decay_channels(
    g_m: f64,
    g_at: f64,
    deltas: &[f64],
    kappa: f64,
    omega_m: f64,
    mode: DecayMode,
) -> Result<Vec<LindbladChannel>> {
    let mut out = Vec::new();
    let Some((f1, f2)) = force_vectors(g_m, g_at, 2, MEMBRANE, ATOM) else {
        return Ok(out);
    };
    let g2 = g_m * g_m + g_at * g_at;
    for (i, &delta) in deltas.iter().enumerate() {
        let f = match i % 2 {
            0 => f1.clone(),
            _ => f2.clone(),
        };
        let (hp, hm) = h_pm(g2, delta, kappa, omega_m)?;
        let label = |s: &str| format!("cavity{}_{s}", i + 1);
        match mode {
            DecayMode::Rwa => {
                push(&mut out, f.clone(), 2.0 * hp.re, &label("cooling"))?;
                push(&mut out, conj(&f), 2.0 * hm.re, &label("heating"))?;
            }
            DecayMode::Exact => {
                let b = hm + hp.conj();
                for (k, (lambda, m)) in hermitian_eigen_2x2(2.0 * hp.re, b, 2.0 * hm.re).into_iter().enumerate() {
                    if lambda < -1e-12 {
                        return Err(Error::NonPhysical(format!(
                            "correlated decay matrix of cavity mode {} has negative eigenvalue {lambda:e}",
                            i + 1
                        )));
                    }
                    let l = &f * m[0] + conj(&f) * m[1];
                    push(&mut out, l, lambda.max(0.0), &label(&format!("j{}", k + 1)))?;
                }
            }
        }
    }
    Ok(out)
}

/// Coherent part of the adiabatically eliminated cavity dynamics over (membrane, atom).
pub fn cavity_mediated_hamiltonian(g_m: f64, g_at: f64, deltas: &[f64], kappa: f64, omega_m: f64) -> Result<QuadraticHamiltonian> {
    let mut h = QuadraticHamiltonian::zeros(2);
    let Some((f1, f2)) = force_vectors(g_m, g_at, 2, MEMBRANE, ATOM) else {
        return Ok(h);
    };
    let g2 = g_m * g_m + g_at * g_at;
    let half_i = Complex64::new(0.0, 0.5);
    for (i, &delta) in deltas.iter().enumerate() {
        let f = if i % 2 == 0 { &f1 } else { &f2 };
        let (hp, hm) = h_pm(g2, delta, kappa, omega_m)?;
        let u = f * hm + conj(f) * hp;
        let v = f + conj(f);
        let m: CMatrix = &u * v.transpose();
        let d = (&m - m.adjoint()) * half_i;
        h.add_operator_matrix(&d)?;
    }
    Ok(h)
}

/// Effective atom-membrane model with the `−G(a_m + a_m†)(a_at + a_at†)` coupling.
pub fn effective_generator(rates: &DerivedRates, opts: EffectiveOptions) -> Result<Model> {
    let g = if opts.use_exact_g { rates.g_exact } else { rates.g_dispersive };
    let mut h = QuadraticHamiltonian::zeros(2);
    h.add_oscillator(MEMBRANE, rates.omega_m);
    h.add_oscillator(ATOM, rates.omega_at);
    // (a_m + a_m†)(a_at + a_at†) = 2 X_m X_at
    h.add_quadrature_product(2 * MEMBRANE, 2 * ATOM, -2.0 * g);
    if opts.include_epsilon {
        // −iGε(a_m a_at − a_m† a_at†) = Gε(X_m P_at + P_m X_at)
        h.add_quadrature_product(2 * MEMBRANE, 2 * ATOM + 1, g * rates.epsilon);
        h.add_quadrature_product(2 * MEMBRANE + 1, 2 * ATOM, g * rates.epsilon);
    }

    let mut channels = membrane_bath_channels(2, MEMBRANE, rates.gamma_mech, rates.n_bar_m)?;
    channels.extend(atom_diffusion_channel(2, ATOM, rates.gamma_at)?);
    if opts.rwa_cavity_decay {
        if let Some((f1, f2)) = force_vectors(rates.g_m, rates.g_at, 2, MEMBRANE, ATOM) {
            push(&mut channels, f1.clone(), rates.gamma_c_plus, "cavity1_cooling")?;
            push(&mut channels, conj(&f2), rates.gamma_c_plus, "cavity2_heating")?;
            push(&mut channels, conj(&f1), rates.gamma_c_minus, "cavity1_heating")?;
            push(&mut channels, f2, rates.gamma_c_minus, "cavity2_cooling")?;
        }
    } else {
        channels.extend(correlated_decay_channels(
            rates.g_m,
            rates.g_at,
            &[rates.delta, -rates.delta],
            rates.kappa,
            rates.omega_m,
            DecayMode::Exact,
        )?);
    }
    Ok(Model { hamiltonian: h, channels })
}

/// Two-mode model obtained by eliminating the cavities: free motion, the cavity-mediated
/// Hamiltonian and correlated decay for detunings `(Δ₁, Δ₂)`.
pub fn adiabatic_generator(rates: &DerivedRates, delta_1: f64, delta_2: f64, mode: DecayMode) -> Result<Model> {
    let deltas = [delta_1, delta_2];
    let mut h = cavity_mediated_hamiltonian(rates.g_m, rates.g_at, &deltas, rates.kappa, rates.omega_m)?;
    h.add_oscillator(MEMBRANE, rates.omega_m);
    h.add_oscillator(ATOM, rates.omega_at);
    let mut channels = membrane_bath_channels(2, MEMBRANE, rates.gamma_mech, rates.n_bar_m)?;
    channels.extend(atom_diffusion_channel(2, ATOM, rates.gamma_at)?);
    channels.extend(correlated_decay_channels(
        rates.g_m,
        rates.g_at,
        &deltas,
        rates.kappa,
        rates.omega_m,
        mode,
    )?);
    Ok(Model { hamiltonian: h, channels })
}

/// Linearized four-mode model (membrane, atom, cavity 1, cavity 2).
///
/// `H = −Σ Δᵢ aᵢ†aᵢ + ω_m a_m†a_m + ω_at a_at†a_at + g Σ (Fᵢ + Fᵢ†)(aᵢ + aᵢ†)`, cavity decay
/// `κ D[aᵢ]` (jump rate 2κ), plus the membrane bath and atomic diffusion.
pub fn full_generator(rates: &DerivedRates, delta_1: f64, delta_2: f64) -> Result<Model> {
    let n = 4;
    let mut h = QuadraticHamiltonian::zeros(n);
    h.add_oscillator(MEMBRANE, rates.omega_m);
    h.add_oscillator(ATOM, rates.omega_at);
    h.add_oscillator(CAVITY_1, -delta_1);
    h.add_oscillator(CAVITY_2, -delta_2);
    if let Some((f1, f2)) = force_vectors(rates.g_m, rates.g_at, n, MEMBRANE, ATOM) {
        let g = Complex64::new(rates.g, 0.0);
        for (f, cav) in [(f1, CAVITY_1), (f2, CAVITY_2)] {
            let x_f = &f + conj(&f);
            let x_c = annihilation(n, cav) + creation(n, cav);
            h.add_operator_matrix(&(&x_f * x_c.transpose() * g))?;
        }
    }
    let mut channels = membrane_bath_channels(n, MEMBRANE, rates.gamma_mech, rates.n_bar_m)?;
    channels.extend(atom_diffusion_channel(n, ATOM, rates.gamma_at)?);
    for (cav, label) in [(CAVITY_1, "cavity1_decay"), (CAVITY_2, "cavity2_decay")] {
        push(&mut channels, annihilation(n, cav), 2.0 * rates.kappa, label)?;
    }
    Ok(Model { hamiltonian: h, channels })
}
