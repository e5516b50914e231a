//! Scalar-type standing waves `w·Q_{ω,a}`, their variational functionals,
//! residual certification, the least action `𝕴(ω)`, the sharp
//! Gagliardo–Nirenberg constant, the potential-well constants and the
//! stability regime.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{band_limited_field, field_functionals, PeriodicGrid, Spectral};
use crate::scalar_profile::{rescale, s_c, Norms, ScalarProfile};
use crate::sphere_critical::{chart_gradient_norm, ground_set};
use crate::system_model::{pair_norm, GForm, Pair};

/// `(w₁Q_{ω,a}(·−y), w₂Q_{ω,a}(·−y))` with `‖w‖ = 1`.
#[derive(Clone, Debug)]
pub struct VectorProfile {
    pub w: Pair,
    pub omega: f64,
    pub a: f64,
    /// `Q_{ω,a}` sampled on its radial grid.
    pub profile: ScalarProfile,
    /// Translation `y` (only the first `d` entries are used).
    pub shift: [f64; 3],
}

impl VectorProfile {
    /// Build from the base profile `Q = Q_{1,1}` (or any `Q_{ω',a'}`).
    pub fn new(w: Pair, base: &ScalarProfile, omega: f64, a: f64) -> Result<Self> {
        if (pair_norm(&w) - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("amplitude direction must be a unit vector, |w| = {}", pair_norm(&w))));
        }
        let profile = rescale(base, omega, a)?;
        Ok(VectorProfile { w, omega, a, profile, shift: [0.0; 3] })
    }

    pub fn d(&self) -> usize {
        self.profile.d
    }

    pub fn p(&self) -> f64 {
        self.profile.p
    }

    pub fn translated(mut self, y: [f64; 3]) -> Self {
        self.shift = y;
        self
    }

    /// Value at `x` (`x` has `d` meaningful entries).
    pub fn at(&self, x: &[f64]) -> Pair {
        let r = x.iter().zip(&self.shift).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let q = self.profile.eval(r);
        [self.w[0] * q, self.w[1] * q]
    }
}

/// The variational functionals of one field at frequency `ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Functionals {
    /// `M = ½Σ‖u_j‖²`.
    pub mass: f64,
    /// `H = ½Σ‖∇u_j‖²`.
    pub kinetic: f64,
    /// `G = (1/p)∫g(u)`.
    pub potential: f64,
    /// `E = H + G`.
    pub energy: f64,
    /// `S_ω = E + ωM`.
    pub action: f64,
    /// `K_ω = 2H + 2ωM + pG`.
    pub nehari: f64,
    /// `V = 2H + (2d/(d−2s_c))G`.
    pub virial: f64,
    /// Momentum `Σ n_j^{−1} Im∫ū_j∇u_j` (gridded fields only).
    pub momentum: Option<[f64; 2]>,
}

impl Functionals {
    pub fn from_parts(mass: f64, kinetic: f64, potential: f64, omega: f64, d: usize, p: f64) -> Self {
        let energy = kinetic + potential;
        Functionals {
            mass,
            kinetic,
            potential,
            energy,
            action: energy + omega * mass,
            nehari: 2.0 * kinetic + 2.0 * omega * mass + p * potential,
            virial: 2.0 * kinetic + virial_coefficient(d, p) * potential,
            momentum: None,
        }
    }
}

/// `2d/(d − 2s_c) = d(p−2)/2`.
pub fn virial_coefficient(d: usize, p: f64) -> f64 {
    d as f64 * (p - 2.0) / 2.0
}

/// Functionals of `w·Q_{ω,a}` from the radial norms: `M = ½‖Q‖²`,
/// `H = ½‖∇Q‖²`, `G = g(w)‖Q‖_p^p/p` (homogeneity of `g`).
pub fn profile_functionals(vp: &VectorProfile, gform: &GForm) -> Functionals {
    let n = vp.profile.norms();
    let p = gform.degree();
    let g = gform.eval(&vp.w) * n.lp / p;
    Functionals::from_parts(0.5 * n.mass, 0.5 * n.grad, g, vp.omega, vp.d(), p)
}

fn require_negative(g_min: f64) -> Result<()> {
    if g_min < 0.0 {
        Ok(())
    } else {
        Err(Error::NoGroundState { g_min })
    }
}

/// `𝕴(ω) = (1/(2(1−s_c)))‖Q‖₂²(−g_min)^{s_c−d/2} ω^{1−s_c}` for the base
/// profile mass `‖Q‖₂²`.
pub fn action_min_value(g_min: f64, d: usize, p: f64, omega: f64, q_mass: f64) -> Result<f64> {
    require_negative(g_min)?;
    let sc = s_c(d, p);
    Ok(q_mass * (-g_min).powf(sc - d as f64 / 2.0) * omega.powf(1.0 - sc) / (2.0 * (1.0 - sc)))
}

/// Least action `𝕴(ω)` of the system with nonlinearity `gform`.
pub fn action_min(gform: &GForm, d: usize, omega: f64, q: &Norms) -> Result<f64> {
    action_min_value(ground_set(gform).g_min, d, gform.degree(), omega, q.mass)
}

/// The ground states `w·Q_{ω,−g_min}`, one per generator of `T₀` (continua
/// contribute sample points).
pub fn build_ground_states(gform: &GForm, omega: f64, base: &ScalarProfile) -> Result<Vec<VectorProfile>> {
    let set = ground_set(gform);
    require_negative(set.g_min)?;
    set.generators().into_iter().map(|w| VectorProfile::new(w, base, omega, -set.g_min)).collect()
}

/// Outcome of certifying a candidate `w·Q_{ω,a}` as a standing wave.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitedReport {
    /// `|∂_ν h| + |∂_ζ h|` at the orbit of `w`.
    pub gradient: f64,
    /// `−g(w)`, the amplitude a solution along `w` must have.
    pub expected_a: f64,
    pub a: f64,
    /// `‖−ΔΦ_j + ωΦ_j + F_j(Φ)‖∞ / ‖Φ‖∞` over `r ≤ R_match`.
    pub residual: f64,
    /// Residual tolerance applied (`1e-5` for `d ≤ 2`, `1e-3` for `d = 3`).
    pub tolerance: f64,
    pub is_critical: bool,
    /// `w ∈ T₀` and `a = −g_min`.
    pub is_ground: bool,
    pub pass: bool,
}

/// Residual tolerance for vector profiles in dimension `d`.
pub fn residual_tolerance(d: usize) -> f64 {
    if d <= 2 {
        1e-5
    } else {
        1e-3
    }
}

/// Elliptic residual of `Φ = w·Q_{ω,a}` for the full vector equation,
/// with `F` evaluated on the samples.
pub fn vector_residual(vp: &VectorProfile, gform: &GForm) -> f64 {
    let q = vp.profile.values();
    let lap = vp.profile.laplacian();
    let mut worst = 0.0_f64;
    for (i, l) in lap.iter().enumerate() {
        let z = [vp.w[0] * q[i], vp.w[1] * q[i]];
        let f = gform.eval_f(&z);
        for j in 0..2 {
            let r = -vp.w[j] * *l + z[j] * vp.omega + f[j];
            worst = worst.max(r.norm());
        }
    }
    let peak = vp.profile.peak() * vp.w[0].norm().max(vp.w[1].norm());
    worst / peak
}

/// Check that `w·Q_{ω,a}` solves the stationary system: `w` is critical
/// for `g|∂B`, `a = −g(w) > 0`, and the residual is small.
pub fn verify_excited(gform: &GForm, w: &Pair, a: f64, omega: f64, base: &ScalarProfile) -> Result<ExcitedReport> {
    let vp = VectorProfile::new(*w, base, omega, a)?;
    let gradient = chart_gradient_norm(gform, w);
    let expected_a = -gform.eval(w);
    let residual = vector_residual(&vp, gform);
    let tolerance = residual_tolerance(base.d);
    let is_critical = gradient <= 1e-6;
    let a_ok = expected_a > 0.0 && (a - expected_a).abs() <= 1e-9 * expected_a.max(1.0);
    let set = ground_set(gform);
    let is_ground = set.g_min < 0.0
        && (expected_a + set.g_min).abs() <= 1e-9 * (1.0 + set.g_min.abs())
        && (a + set.g_min).abs() <= 1e-9 * (1.0 + set.g_min.abs());
    let pass = is_critical && a_ok && residual <= tolerance;
    Ok(ExcitedReport { gradient, expected_a, a, residual, tolerance, is_critical, is_ground, pass })
}

/// Exponents `(α, β)` in `−G ≤ C_GN M^α H^β`.
pub fn gn_exponents(d: usize, p: f64) -> (f64, f64) {
    let beta = d as f64 * (p - 2.0) / 4.0;
    (p / 2.0 - beta, beta)
}

/// Sharp constant `C_GN = ((d−2s_c)/2)(1−s_c)^{−2(1−s_c)/(d−2s_c)}(d/2)^{−d/(d−2s_c)}𝕴(1)^{−2/(d−2s_c)}`.
pub fn gn_constant_value(g_min: f64, d: usize, p: f64, q_mass: f64) -> Result<f64> {
    let i1 = action_min_value(g_min, d, p, 1.0, q_mass)?;
    let sc = s_c(d, p);
    let df = d as f64;
    let k = df - 2.0 * sc;
    Ok(0.5 * k * (1.0 - sc).powf(-2.0 * (1.0 - sc) / k) * (df / 2.0).powf(-df / k) * i1.powf(-2.0 / k))
}

/// Sharp Gagliardo–Nirenberg constant of the system.
pub fn gn_constant(gform: &GForm, d: usize, q: &Norms) -> Result<f64> {
    gn_constant_value(ground_set(gform).g_min, d, gform.degree(), q.mass)
}

/// `−G / (M^α H^β)`; the inequality is `gn_ratio ≤ C_GN`.
pub fn gn_ratio(f: &Functionals, d: usize, p: f64) -> f64 {
    let (alpha, beta) = gn_exponents(d, p);
    -f.potential / (f.mass.powf(alpha) * f.kinetic.powf(beta))
}

/// Result of testing the GN inequality on random fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnSweep {
    pub samples: usize,
    /// Fields with `−G > C_GN M^α H^β` (beyond a 1e−9 relative rounding margin).
    pub violations: usize,
    /// Largest observed `−G / (M^α H^β)`.
    pub max_ratio: f64,
}

/// Test `−G(u) ≤ C_GN M(u)^α H(u)^β` on `samples` seeded band-limited
/// random fields (sample `i` uses ChaCha stream `i` of `seed`). Runs in
/// parallel with one FFT plan per worker.
pub fn gn_sweep(gform: &GForm, grid: PeriodicGrid, c_gn: f64, samples: usize, seed: u64, k_max: f64) -> GnSweep {
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map_init(
            || Spectral::new(grid),
            |spectral, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let u = band_limited_field(spectral, &mut rng, k_max);
                gn_ratio(&field_functionals(spectral, gform, &u, 0.0), grid.d, gform.degree())
            },
        )
        .collect();
    GnSweep {
        samples,
        violations: ratios.iter().filter(|&&r| r > c_gn * (1.0 + 1e-9)).count(),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Exponent `(1−s_c)/s_c`.
fn well_exponent(d: usize, p: f64) -> f64 {
    let sc = s_c(d, p);
    (1.0 - sc) / sc
}

/// `𝕴₃ = (d/(2(1−s_c)))(½(−g_min)^{s_c−d/2}‖Q‖₂²)^{1/s_c}` (mass-supercritical only).
pub fn potential_well_value(g_min: f64, d: usize, p: f64, q_mass: f64) -> Result<f64> {
    require_negative(g_min)?;
    let sc = s_c(d, p);
    if sc <= 0.0 {
        return Err(Error::Validation(format!("potential well needs p > 2 + 4/d (s_c = {sc})")));
    }
    let base = 0.5 * (-g_min).powf(sc - d as f64 / 2.0) * q_mass;
    Ok(d as f64 / (2.0 * (1.0 - sc)) * base.powf(1.0 / sc))
}

/// `𝕴₃` for the system.
pub fn potential_well(gform: &GForm, d: usize, q: &Norms) -> Result<f64> {
    potential_well_value(ground_set(gform).g_min, d, gform.degree(), q.mass)
}

/// `H M^{(1−s_c)/s_c}`.
pub fn well_functional(f: &Functionals, d: usize, p: f64) -> f64 {
    f.kinetic * f.mass.powf(well_exponent(d, p))
}

/// Outcome of the potential-well trichotomy for one field below the
/// ground-state level `E M^{(1−s_c)/s_c} ≤ (1−δ)·level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellCheck {
    /// The largest admissible `δ ∈ (0, 1)`.
    pub delta: f64,
    pub virial: f64,
    /// `H M^{(1−s_c)/s_c}`.
    pub hm: f64,
    /// `V M^{(1−s_c)/s_c}`.
    pub vm: f64,
    /// `δ̃` used for the explicit bound of the branch taken.
    pub delta_tilde: f64,
    pub holds: bool,
}

/// Check the trichotomy for a field with functionals `f`, given `𝕴₃`.
/// Returns `None` when the field is not below the ground-state level.
///
/// For `V > 0` the bound `V ≥ δ̃H` uses `δ̃ = 2(1 − (1−δ)^{2s_c/(d−2s_c)})`;
/// for `V < 0` the bound `V M^{(1−s_c)/s_c} ≤ −δ̃𝕴₃` uses `δ̃ = 4s_cδ/d`.
pub fn well_check(f: &Functionals, d: usize, p: f64, i3: f64) -> Option<WellCheck> {
    let sc = s_c(d, p);
    let e = well_exponent(d, p);
    let level = 2.0 * sc / d as f64 * i3;
    let ratio = f.energy * f.mass.powf(e) / level;
    let delta = (1.0 - ratio).min(1.0 - 1e-12);
    if !(delta > 0.0) {
        return None;
    }
    let hm = f.kinetic * f.mass.powf(e);
    let vm = f.virial * f.mass.powf(e);
    let (delta_tilde, holds) = if f.virial > 0.0 {
        let dt = 2.0 * (1.0 - (1.0 - delta).powf(2.0 * sc / (d as f64 - 2.0 * sc)));
        (dt, hm < i3 && f.virial >= dt * f.kinetic)
    } else if f.virial < 0.0 {
        let dt = 4.0 * sc * delta / d as f64;
        (dt, hm > i3 && vm <= -dt * i3)
    } else {
        (0.0, false)
    };
    Some(WellCheck { delta, virial: f.virial, hm, vm, delta_tilde, holds })
}

/// Stable below the mass-critical exponent, unstable from it on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Stable,
    Unstable,
}

/// Which argument establishes the verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Orbital stability by concentration compactness (`p < 2 + 4/d`).
    Compactness,
    /// Blowup via the pseudo-conformal / finite-variance virial argument,
    /// which needs `n = (1, 1)`.
    MassResonance,
    /// Blowup or grow-up for radial data via the localized virial
    /// (`d ≥ 2`, `p ≤ 6`).
    RadialVirial,
    /// Unstable regime, but neither instability route
    /// applies to these `(d, p, n)`.
    Unavailable,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Compactness => "compactness",
            Route::MassResonance => "mass-resonance",
            Route::RadialVirial => "radial-virial",
            Route::Unavailable => "unavailable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub regime: Regime,
    pub route: Route,
}

/// Stability of the ground-state set as a function of `(d, p, n)` only.
pub fn stability_verdict(d: usize, p: f64, n: [u32; 2]) -> Result<StabilityVerdict> {
    crate::scalar_profile::check_dp(d, p)?;
    if p < 2.0 + 4.0 / d as f64 {
        return Ok(StabilityVerdict { regime: Regime::Stable, route: Route::Compactness });
    }
    let route = if d >= 2 && p <= 6.0 {
        Route::RadialVirial
    } else if n == [1, 1] {
        Route::MassResonance
    } else {
        Route::Unavailable
    };
    Ok(StabilityVerdict { regime: Regime::Unstable, route })
}

/// Gauge-current identity `Σ n_j Im(F_j(z) z̄_j)` (zero for admissible `g`).
pub fn gauge_current(gform: &GForm, z: &Pair) -> f64 {
    let f = gform.eval_f(z);
    let n = gform.gauge();
    (0..2).map(|j| n[j] as f64 * (f[j] * z[j].conj()).im).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::scalar_profile::{solve_q, GridParams};
    use crate::system_model::{StandardForm, C64};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn re(a: f64, b: f64) -> Pair {
        [C64::new(a, 0.0), C64::new(b, 0.0)]
    }

    fn base(d: usize, p: f64) -> ScalarProfile {
        solve_q(d, p, &GridParams::default()).unwrap()
    }

    #[test]
    fn zero_field_functionals() {
        let f = Functionals::from_parts(0.0, 0.0, 0.0, 1.0, 2, 4.0);
        assert_eq!((f.energy, f.action, f.nehari, f.virial), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn nls1_profile_functionals() {
        let g = GForm::standard(StandardForm::Nls1 { alpha: -1.0, beta: -1.0 });
        let vp = VectorProfile::new(re(0.0, 1.0), &base(1, 4.0), 1.0, 1.0).unwrap();
        let f = profile_functionals(&vp, &g);
        assert!((f.mass - 2.0).abs() < 1e-12);
        assert!((f.kinetic - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.potential + 4.0 / 3.0).abs() < 1e-12);
        assert!((f.action - 4.0 / 3.0).abs() < 1e-12);
        assert!(f.nehari.abs() < 1e-12);
        let i = action_min(&g, 1, 1.0, &vp.profile.norms()).unwrap();
        assert!((i - 4.0 / 3.0).abs() < 1e-12);
        assert!((f.action - f.nehari / 2.0 + f.potential).abs() < 1e-12);
    }

    #[test]
    fn action_scaling_and_nonexistence() {
        let (d, p) = (2, 4.0);
        let i1 = action_min_value(-0.7, d, p, 1.0, 11.7).unwrap();
        let i4 = action_min_value(-0.7, d, p, 4.0, 11.7).unwrap();
        assert!((i4 / i1 - 4f64.powf(1.0 - s_c(d, p))).abs() < 1e-12);
        assert!(matches!(action_min_value(0.0, d, p, 1.0, 11.7), Err(Error::NoGroundState { .. })));
    }

    #[test]
    fn nls3_ground_generators() {
        let g = GForm::standard(StandardForm::Nls3 { alpha1: 0.8, alpha2: 0.6, r: -2.0 });
        let gs = build_ground_states(&g, 1.0, &base(1, 4.0)).unwrap();
        let h = FRAC_1_SQRT_2;
        for target in [[C64::new(h, 0.0), C64::new(0.0, h)], [C64::new(h, 0.0), C64::new(0.0, -h)]] {
            assert!(gs.iter().any(|v| crate::sphere_critical::orbit_distance(&v.w, &target, [1, 1]) < 1e-9));
        }
        for vp in &gs {
            assert!((vp.a - 0.4).abs() < 1e-12);
            assert!(vector_residual(vp, &g) < 1e-5);
        }
    }

    #[test]
    fn co_ground_state_above_threshold() {
        let g = GForm::standard(StandardForm::Co { kappa: 2.0, gamma: 0.5 });
        let set = ground_set(&g);
        assert_eq!(set.t0.len(), 1);
        assert_eq!(set.t0[0].label, "A1");
    }

    #[test]
    fn excited_and_noncritical() {
        let q = base(1, 4.0);
        let g = GForm::standard(StandardForm::Nls4 { alpha1: 0.1, alpha2: 0.2, alpha3: (1.0f64 - 0.05).sqrt(), r: 1.0 });
        let w = re(0.6, 0.8);
        let a = -g.eval(&w);
        let rep = verify_excited(&g, &w, a.abs(), 1.0, &q).unwrap();
        assert!(!rep.is_critical && !rep.pass);
        let g1 = GForm::standard(StandardForm::Nls1 { alpha: -1.0, beta: -1.0 });
        let rep = verify_excited(&g1, &re(1.0, 0.0), 1.0, 1.0, &q).unwrap();
        assert!(rep.pass && rep.is_ground, "{rep:?}");
    }

    #[test]
    fn gn_constant_one_dimensional() {
        let c = gn_constant_value(-1.0, 1, 4.0, 4.0).unwrap();
        assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        // equality on the ground state
        let g = GForm::standard(StandardForm::Nls1 { alpha: -1.0, beta: -1.0 });
        let vp = VectorProfile::new(re(1.0, 0.0), &base(1, 4.0), 1.0, 1.0).unwrap();
        let f = profile_functionals(&vp, &g);
        assert!((gn_ratio(&f, 1, 4.0) - c).abs() < 1e-10);
    }

    #[test]
    fn gn_sweep_is_seeded_and_bounded() {
        let g = GForm::standard(StandardForm::Nls2 { alpha: 1.0, beta: 1.0, sigma: -1.0 });
        let c = gn_constant(&g, 1, &base(1, 4.0).norms()).unwrap();
        let grid = PeriodicGrid::new(1, 128, 10.0).unwrap();
        let a = gn_sweep(&g, grid, c, 200, 11, 3.0);
        assert_eq!(a, gn_sweep(&g, grid, c, 200, 11, 3.0));
        assert_eq!(a.violations, 0);
        assert!(a.max_ratio > 0.0 && a.max_ratio < c);
        // an artificially small constant is violated
        assert!(gn_sweep(&g, grid, 1e-3 * a.max_ratio, 50, 11, 3.0).violations > 0);
    }

    #[test]
    fn gn_constant_mass_critical_matches_display() {
        // for s_c = 0 the displayed closed form is exact
        let (d, p, g, m): (usize, f64, f64, f64) = (2, 4.0, -0.5, 11.7);
        let disp = (2.0 / (p - 2.0)).powf(p / 2.0)
            * (2.0 / d as f64).powf(d as f64 * (p - 2.0) / 4.0)
            * (d as f64 - (d as f64 - 2.0) * p / 2.0).powf((p - 2.0) / 2.0)
            * m.powf((2.0 - p) / 2.0)
            * -g;
        assert!((gn_constant_value(g, d, p, m).unwrap() - disp).abs() < 1e-13);
    }

    #[test]
    fn potential_well_three_dimensional() {
        let q = base(3, 4.0);
        let g = GForm::standard(StandardForm::Nls1 { alpha: 0.0, beta: -1.0 });
        let i3 = potential_well(&g, 3, &q.norms()).unwrap();
        let vp = VectorProfile::new(re(0.0, 1.0), &q, 1.0, 1.0).unwrap();
        let f = profile_functionals(&vp, &g);
        assert!((well_functional(&f, 3, 4.0) / i3 - 1.0).abs() < 1e-4);
        // 𝕴₂ at the ground state equals 𝕴(ω)
        let i2 = 2.0 * s_c(3, 4.0) / 3.0 * f.kinetic + f.mass;
        let i = action_min(&g, 3, 1.0, &q.norms()).unwrap();
        assert!((i2 / i - 1.0).abs() < 1e-4);
        // L²-scalings Φ_c = c^{d/2}Φ(c·): M fixed, H ~ c², G ~ c^{d(p−2)/2}
        for (c, sign) in [(1.3, -1.0), (0.7, 1.0)] {
            let fc = Functionals::from_parts(f.mass, c * c * f.kinetic, c.powf(3.0) * f.potential, 1.0, 3, 4.0);
            let chk = well_check(&fc, 3, 4.0, i3).expect("below the ground-state level");
            assert_eq!(chk.virial.signum(), sign);
            assert!(chk.holds, "{chk:?}");
        }
        assert!(potential_well_value(-1.0, 1, 4.0, 4.0).is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(stability_verdict(1, 4.0, [1, 1]).unwrap().regime, Regime::Stable);
        let v = stability_verdict(2, 4.0, [1, 1]).unwrap();
        assert_eq!((v.regime, v.route), (Regime::Unstable, Route::RadialVirial));
        assert_eq!(stability_verdict(3, 3.0, [1, 2]).unwrap().regime, Regime::Stable);
        assert_eq!(stability_verdict(1, 7.0, [1, 2]).unwrap().route, Route::Unavailable);
        assert_eq!(stability_verdict(1, 7.0, [1, 1]).unwrap().route, Route::MassResonance);
        assert_eq!(stability_verdict(2, 8.0, [1, 1]).unwrap().route, Route::MassResonance);
    }

    proptest! {
        #[test]
        fn functional_identities_hold(m in 0.0f64..10.0, h in 0.0f64..10.0, g in -10.0f64..10.0, omega in 0.1f64..5.0, d in 1usize..=3, p in 2.1f64..5.9) {
            let f = Functionals::from_parts(m, h, g, omega, d, p);
            prop_assert!((f.action - f.nehari / 2.0 + (p - 2.0) / 2.0 * g).abs() <= 1e-12 * (1.0 + f.action.abs() + f.nehari.abs()));
            prop_assert_eq!(f.energy, h + g);
        }

        #[test]
        fn gauge_current_vanishes(alpha1 in -2.0f64..2.0, alpha2 in -2.0f64..2.0, alpha3 in -2.0f64..2.0, r in -2.0f64..2.0, eta in 0.01f64..3.13,
                                  kappa in -2.0f64..2.0, gamma in 0.01f64..3.0, z in proptest::array::uniform4(-1.5f64..1.5)) {
            let z = [C64::new(z[0], z[1]), C64::new(z[2], z[3])];
            for form in [StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta }, StandardForm::Co { kappa, gamma }] {
                prop_assert!(gauge_current(&GForm::standard(form), &z).abs() <= 1e-12);
            }
        }

        #[test]
        fn verdict_depends_only_on_d_p_n(d in 1usize..=3, p in 2.05f64..5.95, n1 in 1u32..3, n2 in 1u32..3) {
            prop_assume!(crate::scalar_profile::check_dp(d, p).is_ok());
            let a = stability_verdict(d, p, [n1, n2]).unwrap();
            prop_assert_eq!(a.clone(), stability_verdict(d, p, [n1, n2]).unwrap());
            prop_assert_eq!(a.regime == Regime::Stable, p < 2.0 + 4.0 / d as f64);
        }
    }
}
