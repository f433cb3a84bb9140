//! Two-mode AC-Stark intensity landscape along the cavity axis and its trapping wells.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::DEFAULT_GEOMETRY_FACTOR;

/// Two standing waves `sin²(k₁x)` and `sin²(k₂x)` in a cavity of length `length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub k1: f64,
    pub k2: f64,
    pub length: f64,
    /// Mode separation in free spectral ranges, when known.
    pub q: Option<u32>,
}

impl LatticeGeometry {
    pub fn new(k1: f64, k2: f64, length: f64, q: Option<u32>) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("cavity length must be positive, got {length}")));
        }
        if !(k2 > 0.0) || !k1.is_finite() {
            return Err(Error::invalid("wavenumbers must be positive and finite"));
        }
        if k1 == k2 {
            return Err(Error::invalid("degenerate geometry: k1 = k2 leaves no relative slope"));
        }
        if k1 < k2 {
            return Err(Error::invalid(format!("expected k1 > k2, got k1 = {k1}, k2 = {k2}")));
        }
        let geom = LatticeGeometry { k1, k2, length, q };
        if let Some(q) = q {
            let measured = geom.delta_k() * length / PI;
            if (measured - q as f64).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "δk·L/π = {measured} does not match the mode separation q = {q}"
                )));
            }
        }
        Ok(geom)
    }

    pub fn from_wavelengths(lambda1: f64, lambda2: f64, length: f64) -> Result<Self> {
        Self::new(2.0 * PI / lambda1, 2.0 * PI / lambda2, length, None)
    }

    /// Cavity resonant with `lambda1` close to `length_hint`, second mode `q` FSRs lower.
    pub fn resonant(lambda1: f64, length_hint: f64, q: u32) -> Result<Self> {
        if !(lambda1 > 0.0) || !(length_hint > 0.0) {
            return Err(Error::invalid("wavelength and length must be positive"));
        }
        let n1 = (2.0 * length_hint / lambda1).round();
        let n2 = n1 - q as f64;
        if q == 0 || n2 < 1.0 {
            return Err(Error::invalid(format!("mode separation q = {q} is not admissible for n1 = {n1}")));
        }
        let length = n1 * lambda1 / 2.0;
        Self::new(n1 * PI / length, n2 * PI / length, length, Some(q))
    }

    pub fn k(&self) -> f64 {
        self.k1 + self.k2
    }

    pub fn delta_k(&self) -> f64 {
        self.k1 - self.k2
    }

    pub fn wavelength_1(&self) -> f64 {
        2.0 * PI / self.k1
    }

    pub fn wavelength_2(&self) -> f64 {
        2.0 * PI / self.k2
    }
}

/// Intensity `u` and its first two derivatives at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

fn intensity_unchecked(x: f64, g: &LatticeGeometry) -> Intensity {
    let (s1, c1) = (g.k1 * x).sin_cos();
    let (s2, c2) = (g.k2 * x).sin_cos();
    Intensity {
        u: s1 * s1 + s2 * s2,
        du: g.k1 * (2.0 * g.k1 * x).sin() + g.k2 * (2.0 * g.k2 * x).sin(),
        d2u: 2.0 * g.k1 * g.k1 * (c1 * c1 - s1 * s1) + 2.0 * g.k2 * g.k2 * (c2 * c2 - s2 * s2),
    }
}

pub fn intensity(x: f64, geometry: &LatticeGeometry) -> Result<Intensity> {
    if !(0.0..=geometry.length).contains(&x) {
        return Err(Error::invalid(format!("x = {x} outside [0, {}]", geometry.length)));
    }
    Ok(intensity_unchecked(x, geometry))
}

/// A stationary point of the combined intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSite {
    pub x: f64,
    pub u: f64,
    /// Relative slope of the first mode, `u₁′/k₁`.
    pub theta: f64,
    /// Signed curvature `u″/k₁²`.
    pub zeta: f64,
    /// Diffusion geometry factor `(2 − c·u)/θ²`.
    pub xi: f64,
    pub is_intensity_max: bool,
}

impl WellSite {
    fn at(x: f64, g: &LatticeGeometry, geometry_factor: f64) -> Self {
        let i = intensity_unchecked(x, g);
        let theta = (2.0 * g.k1 * x).sin();
        WellSite {
            x,
            u: i.u,
            theta,
            zeta: i.d2u / (g.k1 * g.k1),
            xi: (2.0 - geometry_factor * i.u) / (theta * theta),
            is_intensity_max: i.d2u < 0.0,
        }
    }
}

/// Grid points per period `π/k₁` of the intensity used for bracketing.
pub const DEFAULT_POINTS_PER_PERIOD: usize = 64;

/// All stationary points of `u` in the open interval `(0, L)`, sorted by position.
pub fn find_wells(geometry: &LatticeGeometry, geometry_factor: f64) -> Result<Vec<WellSite>> {
    find_wells_with(geometry, geometry_factor, DEFAULT_POINTS_PER_PERIOD)
}

pub fn find_wells_with(geometry: &LatticeGeometry, geometry_factor: f64, points_per_period: usize) -> Result<Vec<WellSite>> {
    if geometry.k1 == geometry.k2 {
        return Err(Error::invalid("degenerate geometry: k1 = k2"));
    }
    if points_per_period < 32 {
        return Err(Error::invalid("bracketing grid needs at least 32 points per optical period"));
    }
    let period = PI / geometry.k1;
    let n = ((geometry.length / period) * points_per_period as f64).ceil() as usize;
    let h = geometry.length / n as f64;
    let du = |x: f64| intensity_unchecked(x, geometry).du;
    let tol = 1e-12 * geometry.k1;

    let mut roots = Vec::new();
    let mut x_prev = h;
    let mut f_prev = du(x_prev);
    // Both endpoints are nodes of each mode; interior stationary points only.
    for i in 2..n {
        let x = i as f64 * h;
        let f = du(x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev.signum() != f.signum() && f != 0.0 {
            roots.push(bisect(&du, x_prev, x, f_prev, tol));
        }
        x_prev = x;
        f_prev = f;
    }
    if f_prev == 0.0 {
        roots.push(x_prev);
    }
    // First grid point, in case u′ vanishes in (0, h).
    let f0 = du(h);
    let tiny = h * 1e-6;
    if du(tiny).signum() != f0.signum() && f0 != 0.0 {
        roots.insert(0, bisect(&du, tiny, h, du(tiny), tol));
    }
    Ok(roots.into_iter().map(|x| WellSite::at(x, geometry, geometry_factor)).collect())
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    loop {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < tol || m <= a || m >= b {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

/// Selection rule for [`best_site`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteCriterion {
    /// Largest `θ²/ξ`, i.e. the best coupling-to-diffusion trade-off.
    #[default]
    ThetaSquaredOverXi,
    MaxTheta,
}

/// Best intensity maximum under `criterion`; ties go to the smaller position.
pub fn best_site(sites: &[WellSite], criterion: SiteCriterion) -> Result<WellSite> {
    if sites.is_empty() {
        return Err(Error::invalid("no well sites to choose from"));
    }
    let score = |s: &WellSite| match criterion {
        SiteCriterion::ThetaSquaredOverXi => s.theta * s.theta / s.xi,
        SiteCriterion::MaxTheta => s.theta.abs(),
    };
    let mut best: Option<&WellSite> = None;
    for s in sites.iter().filter(|s| s.is_intensity_max) {
        best = match best {
            None => Some(s),
            Some(b) if score(s) > score(b) || (score(s) == score(b) && s.x < b.x) => Some(s),
            keep => keep,
        };
    }
    best.copied()
        .ok_or_else(|| Error::invalid("no intensity maxima among the well sites"))
}

/// Distance of `δk·x` to the nearest half-beat point `(n + ½)π`, and that `n`.
pub fn half_beat_offset(x: f64, geometry: &LatticeGeometry) -> (u32, f64) {
    let phase = geometry.delta_k() * x / PI - 0.5;
    let n = phase.round().max(0.0);
    (n as u32, (phase - n).abs() * PI)
}

/// Lattice section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Wavelength of the first mode (m).
    pub wavelength_1: f64,
    /// Wavelength of the second mode (m); ignored when `q` is set.
    #[serde(default)]
    pub wavelength_2: Option<f64>,
    /// Cavity length (m); with `q` set this is a hint rounded to the nearest resonance.
    pub length: f64,
    #[serde(default)]
    pub q: Option<u32>,
    #[serde(default = "default_geometry_factor")]
    pub geometry_factor: f64,
    #[serde(default = "default_points")]
    pub points_per_period: usize,
}

fn default_geometry_factor() -> f64 {
    DEFAULT_GEOMETRY_FACTOR
}

fn default_points() -> usize {
    DEFAULT_POINTS_PER_PERIOD
}

impl LatticeConfig {
    pub fn geometry(&self) -> Result<LatticeGeometry> {
        if !(self.wavelength_1 > 0.0) {
            return Err(Error::config("wavelength_1", "must be positive"));
        }
        if !(self.length > 0.0) {
            return Err(Error::config("length", "must be positive"));
        }
        if self.points_per_period < 32 {
            return Err(Error::config("points_per_period", "must be at least 32"));
        }
        match (self.q, self.wavelength_2) {
            (Some(q), _) => LatticeGeometry::resonant(self.wavelength_1, self.length, q).map_err(|e| Error::config("q", e.to_string())),
            (None, Some(l2)) => LatticeGeometry::from_wavelengths(self.wavelength_1, l2, self.length)
                .map_err(|e| Error::config("wavelength_2", e.to_string())),
            (None, None) => Err(Error::config("q", "either q or wavelength_2 is required")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig_geometry() -> LatticeGeometry {
        LatticeGeometry::resonant(852e-9, 53e-6, 5).unwrap()
    }

    #[test]
    fn resonant_construction() {
        let g = fig_geometry();
        assert!((g.length - 124.0 * 852e-9 / 2.0).abs() < 1e-18);
        assert!((g.wavelength_2() - 887.8e-9).abs() < 0.1e-9);
        assert!((g.delta_k() * g.length / PI - 5.0).abs() < 1e-9);
        assert!(LatticeGeometry::new(1.0, 1.0, 1.0, None).is_err());
        assert!(LatticeGeometry::new(1.0, 2.0, 1.0, None).is_err());
    }

    #[test]
    fn intensity_examples() {
        let g = fig_geometry();
        let i0 = intensity(0.0, &g).unwrap();
        assert_eq!(i0.u, 0.0);
        assert_eq!(i0.du, 0.0);
        assert!(intensity(-1e-9, &g).is_err());
        assert!(intensity(g.length * 1.01, &g).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = fig_geometry();
        let h = 1e-11;
        // Five-point central stencil; a three-point one loses to roundoff at these phases.
        let stencil = |f: &dyn Fn(f64) -> f64, x: f64| (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
        for i in 0..1000 {
            let x = g.length * (0.0005 + 0.999 * ((i as f64 * 0.618_033_988_75) % 1.0));
            let c = intensity(x, &g).unwrap();
            let fd = stencil(&|y| intensity(y, &g).unwrap().u, x);
            assert!((fd - c.du).abs() < 1e-8 * g.k1, "x={x}: {fd} vs {}", c.du);
            let fd2 = stencil(&|y| intensity(y, &g).unwrap().du, x);
            assert!((fd2 - c.d2u).abs() < 1e-8 * g.k1 * g.k1);
        }
    }

    #[test]
    fn wells_satisfy_tangent_relation_and_identity() {
        let g = fig_geometry();
        let sites = find_wells(&g, 0.8).unwrap();
        assert!(!sites.is_empty());
        let (k, dk) = (g.k(), g.delta_k());
        for s in &sites {
            let i = intensity(s.x, &g).unwrap();
            assert!(i.du.abs() < 1e-9 * g.k1);
            assert_eq!(s.is_intensity_max, i.d2u < 0.0);
            // tan(kx) = -(δk/k) tan(δk x) in cross-multiplied form.
            let lhs = k * (k * s.x).sin() * (dk * s.x).cos();
            let rhs = -dk * (k * s.x).cos() * (dk * s.x).sin();
            assert!((lhs - rhs).abs() < 1e-8 * k);
            let (tk, td) = ((k * s.x).tan(), (dk * s.x).tan());
            if tk.abs() < 1e3 && td.abs() < 1e3 {
                assert!((tk + dk / k * td).abs() < 1e-8 * (1.0 + tk.abs()));
            }
            assert!((s.xi * s.theta * s.theta + 0.8 * s.u - 2.0).abs() < 1e-8);
        }
        for w in sites.windows(2) {
            assert!(w[0].x < w[1].x);
        }
    }

    #[test]
    fn fig_geometry_has_good_sites_near_half_beats() {
        let g = fig_geometry();
        let sites = find_wells(&g, 0.8).unwrap();
        let good: Vec<_> = sites
            .iter()
            .filter(|s| s.is_intensity_max && s.theta.abs() >= 0.9 && s.xi <= 1.3)
            .filter(|s| (0.35..=0.65).contains(&s.zeta.abs()))
            .collect();
        assert!(good.len() >= 5, "only {} qualifying wells", good.len());
        for s in &good {
            let (n, off) = half_beat_offset(s.x, &g);
            assert!(n <= 5);
            assert!(off <= 0.1 * PI, "x = {} is {off} from a half-beat point", s.x);
        }
    }

    #[test]
    fn best_site_examples() {
        let g = fig_geometry();
        let sites = find_wells(&g, 0.8).unwrap();
        let best = best_site(&sites, SiteCriterion::default()).unwrap();
        // Exhaustive check against the full list.
        let top = sites
            .iter()
            .filter(|s| s.is_intensity_max)
            .map(|s| s.theta * s.theta / s.xi)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.theta * best.theta / best.xi, top);
        let (_, off) = half_beat_offset(best.x, &g);
        assert!(off / g.delta_k() <= g.wavelength_1(), "best site too far from a half-beat point");
        assert!(best.theta.abs() >= 0.9);
        let by_theta = best_site(&sites, SiteCriterion::MaxTheta).unwrap();
        assert!(by_theta.theta.abs() >= 0.9);

        let one = [sites.iter().copied().find(|s| s.is_intensity_max).unwrap()];
        assert_eq!(best_site(&one, SiteCriterion::default()).unwrap(), one[0]);
        assert!(best_site(&[], SiteCriterion::default()).is_err());
    }

    #[test]
    fn single_mode_limit_has_flat_slope_at_maxima() {
        let k1 = 2.0 * PI / 852e-9;
        let g = LatticeGeometry::new(k1, k1 * (1.0 - 1e-6), 5e-6, None).unwrap();
        let sites = find_wells(&g, 0.8).unwrap();
        let maxima: Vec<_> = sites.iter().filter(|s| s.is_intensity_max).collect();
        assert!(!maxima.is_empty());
        for s in maxima {
            assert!(s.theta.abs() < 1e-3, "θ = {} at x = {}", s.theta, s.x);
        }
    }

    #[test]
    fn maxima_count_tracks_length() {
        for (hint, q) in [(20e-6, 2u32), (53e-6, 5), (106e-6, 10)] {
            let g = LatticeGeometry::resonant(852e-9, hint, q).unwrap();
            let sites = find_wells(&g, 0.8).unwrap();
            let maxima = sites.iter().filter(|s| s.is_intensity_max).count() as f64;
            let expected = 2.0 * g.length / g.wavelength_1();
            assert!((maxima - expected).abs() <= 2.0, "{maxima} maxima vs {expected}");
        }
    }

    #[test]
    fn finer_grid_finds_same_wells() {
        let g = fig_geometry();
        let a = find_wells_with(&g, 0.8, 32).unwrap();
        let b = find_wells_with(&g, 0.8, 128).unwrap();
        assert_eq!(a.len(), b.len());
        for (s, t) in a.iter().zip(&b) {
            assert!((s.x - t.x).abs() < 1e-15);
        }
    }

    #[test]
    fn config_paths() {
        let cfg = LatticeConfig {
            wavelength_1: 852e-9,
            wavelength_2: None,
            length: 53e-6,
            q: None,
            geometry_factor: 0.8,
            points_per_period: 64,
        };
        match cfg.geometry() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn intensity_bounded(frac in 0.0f64..1.0) {
            let g = fig_geometry();
            let i = intensity(frac * g.length, &g).unwrap();
            prop_assert!((0.0..=2.0).contains(&i.u));
        }
    }
}
