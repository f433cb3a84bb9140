//! Physical parameters, derived couplings and decoherence rates, and the
//! strong-coupling feasibility conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Default angular factor of the spontaneous-emission recoil (Δm = 0 transitions).
pub const DEFAULT_GEOMETRY_FACTOR: f64 = 0.8;

fn default_geometry_factor() -> f64 {
    DEFAULT_GEOMETRY_FACTOR
}

fn default_theta() -> f64 {
    1.0
}

fn default_zeta() -> f64 {
    0.5
}

fn default_u() -> f64 {
    1.0
}

/// Experimental inputs in SI units (frequencies in rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Cavity length (m).
    pub cavity_length: f64,
    /// Cavity finesse; either this or `kappa` must be given.
    #[serde(default)]
    pub finesse: Option<f64>,
    /// Cavity amplitude decay rate (rad/s).
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Wavelength of the first driven mode (m); sets ω_c and k₁.
    pub wavelength: f64,
    /// Membrane amplitude reflectivity.
    pub reflectivity: f64,
    /// Membrane distance to the field node (m). Without it the optimum `f = 2r` is used.
    #[serde(default)]
    pub membrane_position: Option<f64>,
    /// Membrane effective mass (kg).
    pub membrane_mass: f64,
    /// Membrane frequency (rad/s).
    pub omega_m: f64,
    /// Mechanical quality factor.
    pub q_m: f64,
    /// Membrane bath occupation; takes precedence over `temperature`.
    #[serde(default)]
    pub n_bar_m: Option<f64>,
    /// Membrane bath temperature (K).
    #[serde(default)]
    pub temperature: Option<f64>,
    /// Atom mass (kg).
    pub atom_mass: f64,
    /// Atomic linewidth γ (rad/s).
    pub gamma: f64,
    /// Vacuum Rabi frequency Ω₀ (rad/s).
    pub omega_0: f64,
    /// Atomic detuning δ (rad/s); negative for red detuning.
    pub atomic_detuning: f64,
    /// Drive power (W); either this or `alpha` must be given.
    #[serde(default)]
    pub power: Option<f64>,
    /// Intracavity amplitude.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Cavity detuning Δ (rad/s).
    pub detuning: f64,
    /// Relative lattice slope θ at the atom site.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Lattice intensity u at the atom site.
    #[serde(default = "default_u")]
    pub u: f64,
    /// Lattice curvature ζ at the atom site (only |ζ| is used).
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    /// Angular factor in the recoil diffusion rate.
    #[serde(default = "default_geometry_factor")]
    pub geometry_factor: f64,
    /// Raman cooling rate (rad/s), used only for cooling comparisons.
    #[serde(default)]
    pub raman_rate: Option<f64>,
}

impl PhysicalParams {
    /// Field-level validation; errors carry the offending field name.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cavity_length", self.cavity_length),
            ("wavelength", self.wavelength),
            ("membrane_mass", self.membrane_mass),
            ("omega_m", self.omega_m),
            ("q_m", self.q_m),
            ("atom_mass", self.atom_mass),
            ("gamma", self.gamma),
            ("omega_0", self.omega_0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.reflectivity) {
            return Err(Error::config(
                "reflectivity",
                format!("must lie in [0, 1), got {}", self.reflectivity),
            ));
        }
        if self.atomic_detuning == 0.0 || !self.atomic_detuning.is_finite() {
            return Err(Error::config("atomic_detuning", "must be nonzero and finite"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::config("detuning", "must be finite"));
        }
        match (self.finesse, self.kappa) {
            (None, None) => return Err(Error::config("finesse", "either finesse or kappa is required")),
            (Some(f), _) if !(f > 0.0) => return Err(Error::config("finesse", "must be positive")),
            (_, Some(k)) if !(k > 0.0) => return Err(Error::config("kappa", "must be positive")),
            _ => {}
        }
        match (self.power, self.alpha) {
            (None, None) => return Err(Error::config("power", "either power or alpha is required")),
            (Some(p), _) if !(p >= 0.0) => return Err(Error::config("power", "must be non-negative")),
            (_, Some(a)) if !(a >= 0.0) => return Err(Error::config("alpha", "must be non-negative")),
            _ => {}
        }
        if self.n_bar_m.is_none() && self.temperature.is_none() {
            return Err(Error::config("n_bar_m", "either n_bar_m or temperature is required"));
        }
        if let Some(n) = self.n_bar_m {
            if !(n >= 0.0) {
                return Err(Error::config("n_bar_m", "must be non-negative"));
            }
        }
        if let Some(t) = self.temperature {
            if !(t >= 0.0) {
                return Err(Error::config("temperature", "must be non-negative"));
            }
        }
        if !(self.geometry_factor >= 0.0) {
            return Err(Error::config("geometry_factor", "must be non-negative"));
        }
        Ok(())
    }

    /// Cavity amplitude decay rate, from `kappa` or from the finesse.
    pub fn kappa(&self) -> f64 {
        match self.kappa {
            Some(k) => k,
            None => finesse_to_kappa(self.finesse.unwrap_or(f64::NAN), self.cavity_length),
        }
    }

    pub fn finesse(&self) -> f64 {
        match self.finesse {
            Some(f) => f,
            None => kappa_to_finesse(self.kappa.unwrap_or(f64::NAN), self.cavity_length),
        }
    }

    pub fn omega_c(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.wavelength
    }

    pub fn k1(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Intracavity amplitude, given directly or from the drive power.
    pub fn alpha(&self) -> Result<f64> {
        match (self.alpha, self.power) {
            (Some(a), _) => Ok(a),
            (None, Some(p)) => intracavity_amplitude(p, self.kappa(), self.detuning, self.omega_c()),
            (None, None) => Err(Error::config("power", "either power or alpha is required")),
        }
    }

    pub fn u0(&self) -> f64 {
        self.omega_0 * self.omega_0 / self.atomic_detuning
    }

    /// Membrane bath occupation from `n_bar_m` or the Bose-Einstein value at `temperature`.
    pub fn n_bar_m(&self) -> f64 {
        match (self.n_bar_m, self.temperature) {
            (Some(n), _) => n,
            (None, Some(t)) => bose_einstein(self.omega_m, t),
            (None, None) => 0.0,
        }
    }

    /// Optomechanical correction factor f.
    pub fn f_factor(&self) -> f64 {
        let r = self.reflectivity;
        match self.membrane_position {
            None => 2.0 * r,
            Some(x) => {
                let c = (2.0 * self.k1() * x).cos();
                2.0 * r * (2.0 * self.k1() * x).sin() / (1.0 - r * r * c * c).sqrt()
            }
        }
    }
}

pub fn finesse_to_kappa(finesse: f64, length: f64) -> f64 {
    std::f64::consts::PI * SPEED_OF_LIGHT / (2.0 * finesse * length)
}

pub fn kappa_to_finesse(kappa: f64, length: f64) -> f64 {
    std::f64::consts::PI * SPEED_OF_LIGHT / (2.0 * kappa * length)
}

/// Mean thermal occupation of an oscillator at frequency `omega` (rad/s) and temperature `t` (K).
pub fn bose_einstein(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / ((HBAR * omega / (BOLTZMANN * t)).exp_m1())
}

/// Zero-point length `√(ħ/2mω)`.
pub fn zero_point_length(mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// Real intracavity amplitude `E/√(Δ²+κ²)` with `E = √(2Pκ/ħω_c)`.
pub fn intracavity_amplitude(power: f64, kappa: f64, detuning: f64, omega_c: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(power >= 0.0) {
        return Err(Error::invalid(format!("power must be non-negative, got {power}")));
    }
    let e = (2.0 * power * kappa / (HBAR * omega_c)).sqrt();
    Ok(e / (detuning * detuning + kappa * kappa).sqrt())
}

/// Cavity-mediated coupling including sideband terms.
pub fn g_exact(g_m: f64, g_at: f64, delta: f64, kappa: f64, omega_m: f64) -> Result<f64> {
    let dm = delta - omega_m;
    let dp = delta + omega_m;
    let k2 = kappa * kappa;
    if k2 + dm * dm == 0.0 || k2 + dp * dp == 0.0 {
        return Err(Error::invalid("resonant divergence: Δ = ±ω_m with κ = 0"));
    }
    Ok(2.0 * g_m * g_at * (dm / (k2 + dm * dm) + dp / (k2 + dp * dp)))
}

/// Leading-order dispersive coupling `4 g_m g_at / Δ`.
pub fn g_dispersive(g_m: f64, g_at: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::invalid("dispersive coupling needs Δ ≠ 0"));
    }
    Ok(4.0 * g_m * g_at / delta)
}

/// Relative weight of the counter-rotating two-mode-squeezing correction.
pub fn epsilon(delta: f64, kappa: f64, omega_m: f64) -> f64 {
    2.0 * kappa * omega_m / (delta * delta + kappa * kappa - omega_m * omega_m)
}

/// Cavity-induced decay rates `(Γc⁺, Γc⁻)`.
pub fn gamma_c_pm(g_m: f64, g_at: f64, delta: f64, kappa: f64, omega_m: f64) -> Result<(f64, f64)> {
    let g2 = g_m * g_m + g_at * g_at;
    let k2 = kappa * kappa;
    let dp = delta + omega_m;
    let dm = delta - omega_m;
    if k2 + dp * dp == 0.0 || k2 + dm * dm == 0.0 {
        return Err(Error::invalid("resonant divergence: Δ = ±ω_m with κ = 0"));
    }
    Ok((2.0 * kappa * g2 / (k2 + dp * dp), 2.0 * kappa * g2 / (k2 + dm * dm)))
}

/// Coupling of a single cavity mode, half the two-mode dispersive value.
pub fn single_mode_coupling(g_m: f64, g_at: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::invalid("single-mode coupling needs Δ ≠ 0"));
    }
    Ok(2.0 * g_m * g_at / delta)
}

/// Coupling that minimizes the swap-cooling final occupation `πΓc/G + (G/2ω_m)²`.
pub fn optimal_swap_coupling(gamma_c: f64, omega_m: f64) -> Result<f64> {
    if !(gamma_c > 0.0) || !(omega_m > 0.0) {
        return Err(Error::invalid("optimal swap coupling needs Γc > 0 and ω_m > 0"));
    }
    Ok((2.0 * std::f64::consts::PI * gamma_c * omega_m * omega_m).cbrt())
}

/// Couplings and rates, in whatever frequency unit the inputs used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub g_m: f64,
    pub g_at: f64,
    pub g: f64,
    pub g_exact: f64,
    pub g_dispersive: f64,
    pub epsilon: f64,
    pub gamma_c_plus: f64,
    pub gamma_c_minus: f64,
    pub gamma_c_dispersive: f64,
    pub gamma_at: f64,
    pub gamma_m: f64,
    pub omega_at: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Mechanical linewidth γ_m.
    pub gamma_mech: f64,
    pub n_bar_m: f64,
    /// Γc/G with Γc the mean of Γc⁺ and Γc⁻.
    pub f_c: f64,
    pub f_at: f64,
    pub f_m: f64,
    /// Non-fatal diagnostics such as a small intracavity amplitude.
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Inputs of [`DerivedRates::from_couplings`], all in one frequency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingInputs {
    pub g_m: f64,
    pub g_at: f64,
    pub delta: f64,
    pub kappa: f64,
    pub omega_m: f64,
    pub omega_at: f64,
    pub gamma_at: f64,
    pub gamma_mech: f64,
    pub n_bar_m: f64,
}

impl DerivedRates {
    /// Builds the rate set from bare couplings, without any SI inputs.
    pub fn from_couplings(c: CouplingInputs) -> Result<Self> {
        let g_exact = g_exact(c.g_m, c.g_at, c.delta, c.kappa, c.omega_m)?;
        let g_disp = g_dispersive(c.g_m, c.g_at, c.delta)?;
        let (gp, gm) = gamma_c_pm(c.g_m, c.g_at, c.delta, c.kappa, c.omega_m)?;
        let gamma_m = c.gamma_mech * c.n_bar_m;
        let ratio = |x: f64| if g_exact != 0.0 { x / g_exact.abs() } else { f64::INFINITY };
        Ok(DerivedRates {
            g_m: c.g_m,
            g_at: c.g_at,
            g: (c.g_m * c.g_m + c.g_at * c.g_at).sqrt(),
            g_exact,
            g_dispersive: g_disp,
            epsilon: epsilon(c.delta, c.kappa, c.omega_m),
            gamma_c_plus: gp,
            gamma_c_minus: gm,
            gamma_c_dispersive: g_disp * c.kappa / c.delta,
            gamma_at: c.gamma_at,
            gamma_m,
            omega_at: c.omega_at,
            omega_m: c.omega_m,
            kappa: c.kappa,
            delta: c.delta,
            gamma_mech: c.gamma_mech,
            n_bar_m: c.n_bar_m,
            f_c: ratio(0.5 * (gp + gm)),
            f_at: ratio(c.gamma_at),
            f_m: ratio(gamma_m),
            warnings: Vec::new(),
        })
    }

    /// Same rates expressed in units of ω_m.
    pub fn scaled_to_omega_m(&self) -> DerivedRates {
        let w = self.omega_m;
        DerivedRates {
            g_m: self.g_m / w,
            g_at: self.g_at / w,
            g: self.g / w,
            g_exact: self.g_exact / w,
            g_dispersive: self.g_dispersive / w,
            epsilon: self.epsilon,
            gamma_c_plus: self.gamma_c_plus / w,
            gamma_c_minus: self.gamma_c_minus / w,
            gamma_c_dispersive: self.gamma_c_dispersive / w,
            gamma_at: self.gamma_at / w,
            gamma_m: self.gamma_m / w,
            omega_at: self.omega_at / w,
            omega_m: 1.0,
            kappa: self.kappa / w,
            delta: self.delta / w,
            gamma_mech: self.gamma_mech / w,
            n_bar_m: self.n_bar_m,
            f_c: self.f_c,
            f_at: self.f_at,
            f_m: self.f_m,
            warnings: self.warnings.clone(),
        }
    }
}

/// Atomic trap frequency from `mω_at² = ħ|U₀|α²k₁²|ζ|`.
pub fn atom_trap_frequency(params: &PhysicalParams, alpha: f64) -> f64 {
    (HBAR * params.u0().abs() * alpha * alpha * params.k1().powi(2) * params.zeta.abs() / params.atom_mass).sqrt()
}

/// Derives every coupling and rate from SI inputs (results in rad/s).
pub fn derive_rates(params: &PhysicalParams) -> Result<DerivedRates> {
    params.validate()?;
    let kappa = params.kappa();
    let alpha = params.alpha()?;
    let omega_c = params.omega_c();
    let l_m = zero_point_length(params.membrane_mass, params.omega_m);
    let g0 = params.f_factor() * (l_m / params.cavity_length) * omega_c;
    let g_m = g0 * alpha;

    let u0 = params.u0().abs();
    let omega_at = atom_trap_frequency(params, alpha);
    let (g_at, gamma_at) = if omega_at > 0.0 {
        let eta = params.k1() * zero_point_length(params.atom_mass, omega_at);
        let s_e = (alpha * params.omega_0 / params.atomic_detuning).powi(2);
        let gamma_at = eta * eta * s_e * params.gamma * (2.0 - params.geometry_factor * params.u);
        (u0 * alpha * eta * params.theta, gamma_at)
    } else {
        (0.0, 0.0)
    };

    let gamma_mech = params.omega_m / params.q_m;
    let mut rates = DerivedRates::from_couplings(CouplingInputs {
        g_m,
        g_at,
        delta: params.detuning,
        kappa,
        omega_m: params.omega_m,
        omega_at,
        gamma_at,
        gamma_mech,
        n_bar_m: params.n_bar_m(),
    })?;
    if alpha < 10.0 {
        rates.warnings.push(format!(
            "intracavity amplitude α = {alpha:.3} is below 10; linearization is questionable"
        ));
    }
    if rates.g > 0.0 && params.detuning.abs() < 10.0 * rates.g {
        rates
            .warnings
            .push("|Δ| is not much larger than g; adiabatic elimination is questionable".into());
    }
    Ok(rates)
}

/// Thresholds deciding the pass flags of a [`ConditionReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionThresholds {
    /// Minimum ratio accepted for a "much greater than" condition.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Allowed relative deviation of the balance condition from one.
    #[serde(default = "default_balance_tol")]
    pub balance_tolerance: f64,
}

fn default_margin() -> f64 {
    10.0
}

fn default_balance_tol() -> f64 {
    0.2
}

impl Default for ConditionThresholds {
    fn default() -> Self {
        ConditionThresholds {
            margin: default_margin(),
            balance_tolerance: default_balance_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub margin_1: f64,
    pub balance_2: f64,
    pub margin_3: f64,
    pub margin_4: f64,
    pub cooperativity: f64,
    /// Intracavity amplitude putting the atomic trap on resonance with the membrane.
    pub resonance_alpha: f64,
    pub condition_1: bool,
    pub condition_2: bool,
    pub condition_3: bool,
    pub condition_4: bool,
    pub all_pass: bool,
}

/// Evaluates the four strong-coupling conditions.
///
/// `kb_kappa_th` is the thermal link `k_B·κ_th` of the membrane center in W/K.
pub fn check_strong_coupling(params: &PhysicalParams, kb_kappa_th: f64, thresholds: &ConditionThresholds) -> Result<ConditionReport> {
    params.validate()?;
    let kappa = params.kappa();
    let finesse = params.finesse();
    let r = params.reflectivity;
    let delta = params.detuning.abs();
    let pi = std::f64::consts::PI;

    let coop = params.omega_0 * params.omega_0 / (kappa * params.gamma);
    let margin_1 = delta / kappa.max(params.omega_m);
    let balance_2 = (4.0 * r * finesse / pi) / ((params.gamma / params.atomic_detuning.abs()) * coop)
        * (params.atom_mass / params.membrane_mass).sqrt();
    let margin_3 = coop / (delta / (4.0 * kappa));
    let kappa_th = kb_kappa_th / BOLTZMANN;
    let gamma_mech = params.omega_m / params.q_m;
    let margin_4 = (8.0 * r * r * finesse * finesse / (pi * pi))
        * (kappa_th / gamma_mech)
        * (HBAR * params.omega_c() / (params.membrane_mass * SPEED_OF_LIGHT * SPEED_OF_LIGHT))
        / (delta / kappa);

    let eta_res = params.k1() * zero_point_length(params.atom_mass, params.omega_m);
    let resonance_alpha = (params.omega_m / (eta_res * eta_res * params.u0().abs())).sqrt();

    let condition_1 = margin_1 >= thresholds.margin;
    let condition_2 = (balance_2 - 1.0).abs() <= thresholds.balance_tolerance;
    let condition_3 = margin_3 >= thresholds.margin;
    let condition_4 = margin_4 >= thresholds.margin;
    Ok(ConditionReport {
        margin_1,
        balance_2,
        margin_3,
        margin_4,
        cooperativity: coop,
        resonance_alpha,
        condition_1,
        condition_2,
        condition_3,
        condition_4,
        all_pass: condition_1 && condition_2 && condition_3 && condition_4,
    })
}
