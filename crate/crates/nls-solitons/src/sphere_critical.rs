//! Minimum and critical points of `g` restricted to the unit sphere `∂B ⊂ ℂ²`.
//!
//! The sphere is charted by `(ν, ζ, θ) ↦ (e^{iθ}cos ν, e^{i(θ+ζ)}sin ν)`;
//! for a gauge-invariant `g` every point is gauge-equivalent to one with
//! `θ = 0`, so `h(ν, ζ) = g(cos ν, e^{iζ} sin ν)` on `[0, π/2] × [0, 2π)`
//! sees every value of `g|∂B`. Analytic tables for the standard forms sit
//! beside a grid-plus-simplex numerical oracle used to cross-check them.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_section, nelder_mead};
use crate::system_model::{chart_point, pair_norm, GForm, GKind, Pair, StandardForm, C64};

/// Shape of a critical family modulo the gauge action.
#[derive(Clone, Debug, PartialEq)]
pub enum Orbit {
    /// Finitely many gauge orbits, one generator each.
    Points(Vec<Pair>),
    /// The torus `{(e^{iθ₁}cos ν, e^{iθ₂}sin ν)}` with both phases free.
    FreePhase { nu: f64 },
    /// The real great circle `{e^{iθ}(cos μ, sin μ)}`.
    RealCircle,
    /// All of `∂B`.
    WholeSphere,
}

impl Orbit {
    /// Whether the family is a manifold of positive dimension modulo gauge.
    pub fn is_continuum(&self) -> bool {
        !matches!(self, Orbit::Points(_))
    }

    /// Representative unit vectors (one per orbit for discrete families,
    /// a few sample points for continua).
    pub fn generators(&self) -> Vec<Pair> {
        let re = |a: f64, b: f64| [C64::new(a, 0.0), C64::new(b, 0.0)];
        match self {
            Orbit::Points(p) => p.clone(),
            Orbit::FreePhase { nu } => vec![re(nu.cos(), nu.sin())],
            Orbit::RealCircle => vec![re(1.0, 0.0), re(FRAC_1_SQRT_2, FRAC_1_SQRT_2)],
            Orbit::WholeSphere => vec![re(1.0, 0.0)],
        }
    }

    /// Gauge-quotiented distance from `w` to the family.
    pub fn distance(&self, w: &Pair, n: [u32; 2]) -> f64 {
        let w = normalized(w);
        match self {
            Orbit::Points(p) => p.iter().map(|v| orbit_distance(&w, v, n)).fold(f64::INFINITY, f64::min),
            Orbit::FreePhase { nu } => {
                let (a, b) = (w[0].norm() - nu.cos(), w[1].norm() - nu.sin());
                (a * a + b * b).sqrt()
            }
            Orbit::RealCircle => {
                // max over μ of |w₁cos μ + w₂sin μ|² is the top eigenvalue of Re(w w*)
                let (p, q) = (w[0].norm_sqr(), w[1].norm_sqr());
                let x = (w[0] * w[1].conj()).re;
                let top = 0.5 * (p + q + ((p - q).powi(2) + 4.0 * x * x).sqrt());
                (2.0 - 2.0 * top.sqrt()).max(0.0).sqrt()
            }
            Orbit::WholeSphere => 0.0,
        }
    }
}

/// Where a critical set came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Numeric,
}

/// A family of critical points of `g|∂B` sharing one critical value.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalSet {
    /// Family label, e.g. `T01`, `theta3`, `Tc`, `A1`.
    pub label: String,
    pub orbit: Orbit,
    /// Critical value (NaN when the family does not exist).
    pub value: f64,
    /// Whether the family's existence condition holds for these parameters.
    pub exists: bool,
    /// Whether the value is the global minimum `g_min`.
    pub is_min: bool,
    pub provenance: Provenance,
}

impl CriticalSet {
    fn analytic(label: &str, orbit: Orbit, value: f64) -> Self {
        CriticalSet { label: label.into(), orbit, value, exists: true, is_min: false, provenance: Provenance::Analytic }
    }

    /// Whether the family yields standing waves: it exists and `a = −g(w) > 0`.
    pub fn gives_solution(&self) -> bool {
        self.exists && self.value < 0.0
    }

    fn absent(label: &str) -> Self {
        CriticalSet {
            label: label.into(),
            orbit: Orbit::Points(Vec::new()),
            value: f64::NAN,
            exists: false,
            is_min: false,
            provenance: Provenance::Analytic,
        }
    }
}

/// `g_min` together with the minimizer families `T₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSet {
    pub g_min: f64,
    pub t0: Vec<CriticalSet>,
}

impl GroundSet {
    /// Whether `T₀` contains a continuum of gauge orbits.
    pub fn is_continuum(&self) -> bool {
        self.t0.iter().any(|s| s.orbit.is_continuum())
    }

    /// Distance from `w` to `T₀`.
    pub fn distance(&self, w: &Pair, n: [u32; 2]) -> f64 {
        self.t0.iter().map(|s| s.orbit.distance(w, n)).fold(f64::INFINITY, f64::min)
    }

    /// All discrete generators of `T₀` (empty contributions from continua
    /// are replaced by their sample points).
    pub fn generators(&self) -> Vec<Pair> {
        self.t0.iter().flat_map(|s| s.orbit.generators()).collect()
    }
}

fn normalized(w: &Pair) -> Pair {
    let n = pair_norm(w);
    [w[0] / n, w[1] / n]
}

/// Distance between the gauge orbits of `w` and `v` on `∂B`:
/// `min_θ ‖(e^{in₁θ}w₁, e^{in₂θ}w₂) − v‖` for unit `w`, `v`.
pub fn orbit_distance(w: &Pair, v: &Pair, n: [u32; 2]) -> f64 {
    let (w, v) = (normalized(w), normalized(v));
    let ip = |t: f64| {
        w[0] * v[0].conj() * C64::from_polar(1.0, n[0] as f64 * t)
            + w[1] * v[1].conj() * C64::from_polar(1.0, n[1] as f64 * t)
    };
    let best_re = if n[0] == n[1] {
        ip(0.0).norm()
    } else {
        const SCAN: usize = 256;
        let step = TAU / SCAN as f64;
        let (k, _) = (0..SCAN)
            .map(|k| (k, ip(k as f64 * step).re))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let t0 = k as f64 * step;
        let (_, neg) = golden_section(|t| -ip(t).re, t0 - step, t0 + step, 1e-12);
        -neg
    };
    (2.0 - 2.0 * best_re).max(0.0).sqrt()
}

/// Canonical chart coordinates `(ν, ζ)` of the orbit of `w`:
/// `ν = atan2(|w₂|, |w₁|)`, `ζ = arg w₂ − (n₂/n₁) arg w₁ mod 2π` (exact for `n₁ = 1`).
pub fn chart_coords(w: &Pair, n: [u32; 2]) -> (f64, f64) {
    let nu = w[1].norm().atan2(w[0].norm());
    let zeta = if w[0].norm() == 0.0 || w[1].norm() == 0.0 {
        0.0
    } else {
        w[1].arg() - (n[1] as f64 / n[0] as f64) * w[0].arg()
    };
    (nu, zeta.rem_euclid(TAU))
}

/// `|∂_ν h| + |∂_ζ h|` at the orbit of `w` by central differences with
/// step `1e-6`; at the chart poles the ν-derivative is checked along four
/// directions because ζ is degenerate there.
pub fn chart_gradient_norm(g: &GForm, w: &Pair) -> f64 {
    let (nu, zeta) = chart_coords(&normalized(w), g.gauge());
    let e = 1e-6;
    let grad = |nu: f64, zeta: f64| {
        let dn = (g.h(nu + e, zeta) - g.h(nu - e, zeta)) / (2.0 * e);
        let dz = (g.h(nu, zeta + e) - g.h(nu, zeta - e)) / (2.0 * e);
        dn.abs() + dz.abs()
    };
    if nu < 1e-12 || nu > FRAC_PI_2 - 1e-12 {
        (0..4).map(|k| grad(nu, zeta + k as f64 * FRAC_PI_2)).fold(0.0, f64::max)
    } else {
        grad(nu, zeta)
    }
}

// ---------------------------------------------------------------------------
// Trigonometric bifurcation equation sin 2θ + ρ sin(θ − τ) = 0

/// Roots of `f(θ) = sin 2θ + ρ sin(θ − τ)` on `[0, 2π)` labelled θ₀…θ₃
/// by their branches, and the threshold `ρ_*(τ)` at which two of them merge.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSolveResult {
    pub rho: f64,
    pub tau: f64,
    pub roots: [Option<f64>; 4],
    pub rho_star: f64,
    /// Labels sharing one (merged, multiple) root at `ρ = ρ_*`.
    pub merged: Vec<usize>,
}

impl TrigSolveResult {
    /// Number of distinct roots.
    pub fn distinct_roots(&self) -> usize {
        let mut v: Vec<f64> = self.roots.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v.len()
    }
}

/// `sin 2θ + ρ sin(θ − τ)`.
pub fn trig_f(rho: f64, tau: f64, theta: f64) -> f64 {
    (2.0 * theta).sin() + rho * (theta - tau).sin()
}

fn trig_df(rho: f64, tau: f64, theta: f64) -> f64 {
    2.0 * (2.0 * theta).cos() + rho * (theta - tau).cos()
}

/// Root in `[a, b]` by bisection polished with Newton steps that stay
/// inside the bracket.
fn refine_root(rho: f64, tau: f64, a: f64, b: f64) -> Option<f64> {
    let mut x = bisect(|t| trig_f(rho, tau, t), a, b, 1e-15)?;
    for _ in 0..3 {
        let d = trig_df(rho, tau, x);
        if d.abs() < 1e-8 {
            break;
        }
        let nx = x - trig_f(rho, tau, x) / d;
        if nx < a || nx > b || trig_f(rho, tau, nx).abs() > trig_f(rho, tau, x).abs() {
            break;
        }
        x = nx;
    }
    Some(x)
}

/// Extremum of `sign·f` on `[a, b]` (minimum of `sign·f`): dense scan then
/// golden-section refinement. Returns `(θ, f(θ))`.
fn extremum(rho: f64, tau: f64, a: f64, b: f64, sign: f64) -> (f64, f64) {
    const SCAN: usize = 512;
    let h = (b - a) / SCAN as f64;
    let phi = |t: f64| sign * trig_f(rho, tau, t);
    let k = (0..=SCAN)
        .min_by(|&i, &j| phi(a + i as f64 * h).total_cmp(&phi(a + j as f64 * h)))
        .unwrap_or(0);
    let lo = (a + (k as f64 - 1.0) * h).max(a);
    let hi = (a + (k as f64 + 1.0) * h).min(b);
    let (t, _) = golden_section(phi, lo, hi, 1e-14);
    let ends = [(a, phi(a)), (b, phi(b)), (t, phi(t))];
    let (t, v) = ends.into_iter().fold((t, f64::INFINITY), |m, x| if x.1 < m.1 { x } else { m });
    (t, sign * v)
}

/// The merging interval and the sign of the extremum that controls the
/// merge: `[π/2, π]` with the minimum for `τ < π/2`, `[0, π/2]` with the
/// maximum for `τ > π/2`.
fn merge_window(tau: f64) -> (f64, f64, f64) {
    if tau < FRAC_PI_2 {
        (FRAC_PI_2, PI, 1.0)
    } else {
        (0.0, FRAC_PI_2, -1.0)
    }
}

/// `ρ_*(τ)`: the coupling at which the extremum of `f` on the merging
/// interval touches zero, by bisection on ρ (the extremum is monotone in ρ
/// because `sin(θ − τ)` has a fixed sign there).
pub fn rho_star(tau: f64) -> f64 {
    if tau == FRAC_PI_2 {
        return 2.0;
    }
    let (a, b, sign) = merge_window(tau);
    // sign·extremum < 0 ⇔ two roots in the window
    let two_roots = |rho: f64| extremum(rho, tau, a, b, sign).1 * sign < 0.0;
    let mut hi = 1.0;
    while two_roots(hi) {
        hi *= 2.0;
        if hi > 1e8 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if two_roots(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `sin 2θ + ρ sin(θ − τ) = 0` for `ρ ≥ 0`, `τ ∈ (0, π)`.
///
/// Branches: for `τ < π/2`, θ₀ ∈ [0,τ), θ₁ ∈ [π/2,π), θ₂ ∈ (π/2,π] and
/// θ₃ ∈ (π+τ,3π/2], with θ₁, θ₂ merging at `ρ_*`; for `τ > π/2`,
/// θ₀ ∈ [0,π/2), θ₁ ∈ (0,π/2], θ₂ ∈ (π/2,π], θ₃ ∈ [3π/2,2π), with θ₀, θ₁
/// merging; for `τ = π/2` the roots are explicit and θ₀, θ₁, θ₂ meet at
/// `ρ = 2`.
pub fn solve_trig(rho: f64, tau: f64) -> Result<TrigSolveResult> {
    if !(rho >= 0.0 && rho.is_finite()) || !(tau > 0.0 && tau < PI) {
        return Err(Error::Validation(format!("solve_trig needs rho >= 0 and tau in (0, pi), got ({rho}, {tau})")));
    }
    let rs = rho_star(tau);
    let mut out = TrigSolveResult { rho, tau, roots: [None; 4], rho_star: rs, merged: Vec::new() };
    if rho == 0.0 {
        out.roots = [Some(0.0), Some(FRAC_PI_2), Some(PI), Some(1.5 * PI)];
        return Ok(out);
    }
    let at_merge = (rho - rs).abs() <= 1e-10 * rs.max(1.0);
    if tau == FRAC_PI_2 {
        out.roots[1] = Some(FRAC_PI_2);
        out.roots[3] = Some(1.5 * PI);
        if at_merge {
            out.roots[0] = Some(FRAC_PI_2);
            out.roots[2] = Some(FRAC_PI_2);
            out.merged = vec![0, 1, 2];
        } else if rho < 2.0 {
            let s = (rho / 2.0).asin();
            out.roots[0] = Some(s);
            out.roots[2] = Some(PI - s);
        }
        return Ok(out);
    }
    let (wa, wb, sign) = merge_window(tau);
    let (pair, first, second) = if tau < FRAC_PI_2 { ([1, 2], 0, 3) } else { ([0, 1], 2, 3) };
    if tau < FRAC_PI_2 {
        out.roots[0] = refine_root(rho, tau, 0.0, tau);
        out.roots[3] = refine_root(rho, tau, PI + tau, 1.5 * PI);
    } else {
        out.roots[2] = refine_root(rho, tau, FRAC_PI_2, PI);
        out.roots[3] = refine_root(rho, tau, 1.5 * PI, TAU);
    }
    debug_assert!(out.roots[first].is_some() && out.roots[second].is_some());
    let (tm, _) = extremum(rho, tau, wa, wb, sign);
    if at_merge {
        out.roots[pair[0]] = Some(tm);
        out.roots[pair[1]] = Some(tm);
        out.merged = pair.to_vec();
    } else if rho < rs {
        // the branch increasing from the window's left end comes first
        let left = refine_root(rho, tau, wa, tm);
        let right = refine_root(rho, tau, tm, wb);
        out.roots[pair[0]] = left;
        out.roots[pair[1]] = right;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Analytic tables

fn pair(a: C64, b: C64) -> Pair {
    [a, b]
}

fn re(a: f64) -> C64 {
    C64::new(a, 0.0)
}

fn im(a: f64) -> C64 {
    C64::new(0.0, a)
}

fn nls12_families(alpha: f64, beta: f64, sigma: f64) -> Vec<CriticalSet> {
    if alpha == 0.0 && beta == 0.0 {
        return vec![CriticalSet::analytic("S", Orbit::WholeSphere, sigma)];
    }
    let mut v = vec![
        CriticalSet::analytic("T01", Orbit::Points(vec![pair(re(0.0), re(1.0))]), beta + sigma),
        CriticalSet::analytic("T02", Orbit::Points(vec![pair(re(1.0), re(0.0))]), alpha + sigma),
    ];
    if alpha * beta > 0.0 {
        let nu = (alpha / beta).sqrt().atan();
        v.push(CriticalSet::analytic("T03", Orbit::FreePhase { nu }, alpha * beta / (alpha + beta) + sigma));
    } else {
        v.push(CriticalSet::absent("T03"));
    }
    v
}

fn nls3_families(a1: f64, a2: f64, r: f64) -> Vec<CriticalSet> {
    let s = FRAC_1_SQRT_2;
    let t03 = CriticalSet::analytic(
        "T03",
        Orbit::Points(vec![pair(re(s), im(s)), pair(re(s), im(-s))]),
        2.0 * a1 + r,
    );
    if a2 > 0.0 {
        vec![
            CriticalSet::analytic(
                "T01",
                Orbit::Points(vec![pair(re(1.0), re(0.0)), pair(re(0.0), re(1.0))]),
                3.0 * a1 + a2 + r,
            ),
            CriticalSet::analytic(
                "T02",
                Orbit::Points(vec![pair(re(s), re(s)), pair(re(s), re(-s))]),
                3.0 * a1 - a2 + r,
            ),
            t03,
            CriticalSet::absent("T04"),
        ]
    } else {
        vec![t03, CriticalSet::analytic("T04", Orbit::RealCircle, 3.0 * a1 + r)]
    }
}

fn nls4_families(a1: f64, a2: f64, a3: f64, r: f64) -> Vec<CriticalSet> {
    let mut v = vec![
        CriticalSet::analytic("T01", Orbit::Points(vec![pair(re(1.0), re(0.0))]), 3.0 * a1 + a2 + 2.0 * a3 + r),
        CriticalSet::analytic("T02", Orbit::Points(vec![pair(re(0.0), re(1.0))]), 3.0 * a1 + a2 - 2.0 * a3 + r),
    ];
    if a3 < 2.0 * a2 {
        let x = ((2.0 * a2 - a3) / (4.0 * a2)).sqrt();
        let y = ((2.0 * a2 + a3) / (4.0 * a2)).sqrt();
        v.push(CriticalSet::analytic(
            "T03",
            Orbit::Points(vec![pair(re(x), re(y)), pair(re(x), re(-y))]),
            -a3 * a3 / (2.0 * a2) + 3.0 * a1 - a2 + r,
        ));
    } else {
        v.push(CriticalSet::absent("T03"));
    }
    let s = a1 + a2;
    if a3 < s.abs() {
        let x = ((s - a3) / (2.0 * s)).sqrt();
        let y = ((s + a3) / (2.0 * s)).sqrt();
        v.push(CriticalSet::analytic(
            "T04",
            Orbit::Points(vec![pair(re(x), im(y)), pair(re(x), im(-y))]),
            -a3 * a3 / s + 2.0 * a1 + r,
        ));
    } else {
        v.push(CriticalSet::absent("T04"));
    }
    v
}

/// Right-hand side of the existence inequality for the complex NLS5 family:
/// `(α₁+α₂)²(α₁−α₂)² / (α₁²+α₂²−2α₁α₂cos 2η)`.
pub fn nls5_tc_bound(a1: f64, a2: f64, eta: f64) -> f64 {
    let den = a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * (2.0 * eta).cos();
    (a1 + a2).powi(2) * (a1 - a2).powi(2) / den
}

fn nls5_tc(a1: f64, a2: f64, a3: f64, r: f64, eta: f64) -> CriticalSet {
    if a1 == a2 || a3 * a3 > nls5_tc_bound(a1, a2, eta) {
        return CriticalSet::absent("Tc");
    }
    let (c, s) = (a3 * eta.cos(), a3 * eta.sin());
    let sum = a1 + a2;
    let x = (sum - c) / (2.0 * sum);
    let inner = 1.0 - a3 * a3 * (a1 * a1 + a2 * a2 - 2.0 * a1 * a2 * (2.0 * eta).cos()) / (sum * sum * (a1 - a2).powi(2));
    let scale = (sum / (2.0 * (sum - c))).sqrt();
    let gens: Vec<Pair> = [1.0, -1.0]
        .iter()
        .map(|&sg| {
            let w1 = re(sg * x.sqrt());
            let w2 = C64::new(-sg * s / (a1 - a2), inner.max(0.0).sqrt()) * scale;
            pair(w1, w2)
        })
        .collect();
    if !(x >= 0.0 && x <= 1.0) || gens.iter().any(|w| !w[1].is_finite()) {
        return CriticalSet::absent("Tc");
    }
    let value = -a3 * a3 * (a1 - a2 * (2.0 * eta).cos()) / (a1 * a1 - a2 * a2) + 2.0 * a1 + r;
    CriticalSet::analytic("Tc", Orbit::Points(gens), value)
}

/// Value `α₂cos 2θ + 2α₃cos(θ − η) + 3α₁ + r` of `g` at `(cos θ/2, sin θ/2)`.
pub fn nls5_theta_value(a1: f64, a2: f64, a3: f64, r: f64, eta: f64, theta: f64) -> f64 {
    a2 * (2.0 * theta).cos() + 2.0 * a3 * (theta - eta).cos() + 3.0 * a1 + r
}

fn nls5_families(a1: f64, a2: f64, a3: f64, r: f64, eta: f64) -> Result<Vec<CriticalSet>> {
    let sol = solve_trig(a3 / a2, eta)?;
    let mut v = Vec::new();
    let mut done = [false; 4];
    for j in 0..4 {
        if done[j] {
            continue;
        }
        let label = if sol.merged.contains(&j) {
            for &k in &sol.merged {
                done[k] = true;
            }
            sol.merged.iter().map(|k| format!("theta{k}")).collect::<Vec<_>>().join("=")
        } else {
            format!("theta{j}")
        };
        match sol.roots[j] {
            Some(t) => v.push(CriticalSet::analytic(
                &label,
                Orbit::Points(vec![pair(re((t / 2.0).cos()), re((t / 2.0).sin()))]),
                nls5_theta_value(a1, a2, a3, r, eta, t),
            )),
            None => v.push(CriticalSet::absent(&label)),
        }
    }
    v.push(nls5_tc(a1, a2, a3, r, eta));
    Ok(v)
}

/// `κ_c(γ) = ½(γ+2)√(1−γ)` for `γ ∈ (0, 1]`: the coupling above which the
/// ν₁ family undercuts the semitrivial state (`h(ν₁,0) = −1` exactly there).
pub fn co_kappa_c(gamma: f64) -> f64 {
    0.5 * (gamma + 2.0) * (1.0 - gamma).max(0.0).sqrt()
}

/// Membership in J₁ (domain of the ν₁ family).
pub fn co_in_j1(kappa: f64, gamma: f64) -> bool {
    if gamma == 1.0 && kappa == 0.0 {
        return false;
    }
    gamma > 1.0 || kappa >= (2.0 * gamma * (1.0 - gamma)).sqrt()
}

/// Membership in J₂ (domain of the ν₂ family).
pub fn co_in_j2(kappa: f64, gamma: f64) -> bool {
    gamma < 1.0 && kappa >= (2.0 * gamma * (1.0 - gamma)).sqrt()
}

/// Membership in J₃, where the ν₃ critical value is negative (so the
/// family yields standing waves). The ν₃ critical point itself exists for
/// every `(γ, κ)`.
pub fn co_in_j3(kappa: f64, gamma: f64) -> bool {
    kappa > FRAC_1_SQRT_2 * gamma.powf(1.5)
}

/// `(ν₁, ν₂, ν₃)` of the CO critical points in the chart (`None` where the
/// stationarity equation has no root with `tan ν > 0`: off J₁ for ν₁, off
/// J₂ for ν₂; ν₃ always exists).
pub fn co_nus(kappa: f64, gamma: f64) -> [Option<f64>; 3] {
    let root1 = (kappa * kappa + 2.0 * gamma * (gamma - 1.0)).max(0.0).sqrt();
    let b3 = kappa + root1;
    let b1 = kappa - root1;
    let b2 = (kappa * kappa + 2.0 * gamma * (gamma + 1.0)).sqrt() - kappa;
    [
        co_in_j1(kappa, gamma).then(|| gamma.atan2(b3)),
        co_in_j2(kappa, gamma).then(|| gamma.atan2(b1)),
        Some(gamma.atan2(b2)),
    ]
}

/// Closed-form CO critical values at `(ν₁,0)`, `(ν₂,0)`, `(ν₃,π)`.
pub fn co_closed_values(kappa: f64, gamma: f64) -> [f64; 3] {
    let root1 = (kappa * kappa + 2.0 * gamma * (gamma - 1.0)).max(0.0).sqrt();
    let b3 = kappa + root1;
    let b1 = kappa - root1;
    let b2 = (kappa * kappa + 2.0 * gamma * (gamma + 1.0)).sqrt() - kappa;
    let g2 = gamma * gamma;
    [
        -0.5 * (g2 + b3 * b3).powf(-0.5) * (b3 * b3 + 2.0 * gamma),
        -(b1 / (2.0 * b1.abs())) * (g2 + b1 * b1).powf(-0.5) * (b1 * b1 + 2.0 * gamma),
        0.5 * (b2 * b2 + g2).powf(-0.5) * (b2 * b2 - 2.0 * gamma),
    ]
}

fn co_families(kappa: f64, gamma: f64) -> Vec<CriticalSet> {
    let nus = co_nus(kappa, gamma);
    let vals = co_closed_values(kappa, gamma);
    let mut v = vec![CriticalSet::analytic("A0", Orbit::Points(vec![pair(re(0.0), re(1.0))]), -1.0)];
    for (k, (nu, zeta)) in [(nus[0], 0.0), (nus[1], 0.0), (nus[2], PI)].into_iter().enumerate() {
        let label = format!("A{}", k + 1);
        match nu {
            Some(nu) => v.push(CriticalSet::analytic(&label, Orbit::Points(vec![chart_point(nu, zeta)]), vals[k])),
            None => v.push(CriticalSet::absent(&label)),
        }
    }
    v
}

fn analytic_families(form: &StandardForm) -> Result<Vec<CriticalSet>> {
    Ok(match *form {
        StandardForm::Nls1 { alpha, beta } => nls12_families(alpha, beta, 0.0),
        StandardForm::Nls2 { alpha, beta, sigma } => nls12_families(alpha, beta, sigma),
        StandardForm::Nls3 { alpha1, alpha2, r } => nls3_families(alpha1, alpha2, r),
        StandardForm::Nls4 { alpha1, alpha2, alpha3, r } => nls4_families(alpha1, alpha2, alpha3, r),
        StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta } => nls5_families(alpha1, alpha2, alpha3, r, eta)?,
        StandardForm::Co { kappa, gamma } => co_families(kappa, gamma),
    })
}

/// Closed-form `g_min` and the labels of the `T₀` families, per the case
/// tables of each standard form.
fn gmin_table(form: &StandardForm, fams: &[CriticalSet]) -> (f64, Vec<&'static str>) {
    match *form {
        StandardForm::Nls1 { alpha, beta } => nls12_table(alpha, beta, 0.0),
        StandardForm::Nls2 { alpha, beta, sigma } => nls12_table(alpha, beta, sigma),
        StandardForm::Nls3 { alpha1, alpha2, r } => {
            if alpha1 > alpha2 {
                (2.0 * alpha1 + r, vec!["T03"])
            } else if alpha2 > 0.0 {
                (3.0 * alpha1 - alpha2 + r, vec!["T02"])
            } else {
                (3.0 * alpha1 + r, vec!["T04"])
            }
        }
        StandardForm::Nls4 { alpha1, alpha2, alpha3, r } => {
            let tilde = (alpha1 + alpha2).max(2.0 * alpha2);
            let m = tilde.max(alpha3);
            let g = -alpha3 * alpha3 / m + 3.0 * alpha1 + alpha2 - m + r;
            let label = if alpha3 >= tilde {
                "T02"
            } else if 2.0 * alpha2 > alpha1 + alpha2 {
                "T03"
            } else {
                "T04"
            };
            (g, vec![label])
        }
        StandardForm::Nls5 { alpha1, alpha2, alpha3, eta, .. } => {
            let strict = alpha1 > alpha2 && alpha3 * alpha3 < nls5_tc_bound(alpha1, alpha2, eta);
            let label = if strict { "Tc" } else { "theta3" };
            let value = fams
                .iter()
                .find(|s| s.exists && s.label.split('=').any(|l| l == label))
                .map(|s| s.value)
                .unwrap_or(f64::NAN);
            (value, vec![label])
        }
        StandardForm::Co { kappa, gamma } => {
            let h1 = if co_in_j1(kappa, gamma) { co_closed_values(kappa, gamma)[0] } else { f64::INFINITY };
            let g = h1.min(-1.0);
            let kc = co_kappa_c(gamma);
            let labels = if gamma > 1.0 || kappa > kc + 1e-12 {
                vec!["A1"]
            } else if (kappa - kc).abs() <= 1e-12 {
                vec!["A0", "A1"]
            } else {
                vec!["A0"]
            };
            (g, labels)
        }
    }
}

fn nls12_table(alpha: f64, beta: f64, sigma: f64) -> (f64, Vec<&'static str>) {
    if alpha == 0.0 && beta == 0.0 {
        (sigma, vec!["S"])
    } else if beta <= 0.0 {
        if alpha == beta {
            (beta + sigma, vec!["T01", "T02"])
        } else {
            (beta + sigma, vec!["T01"])
        }
    } else {
        (alpha * beta / (alpha + beta) + sigma, vec!["T03"])
    }
}

fn standard_tag(gform: &GForm) -> Result<StandardForm> {
    match gform.kind() {
        GKind::Standard(f) => Ok(*f),
        _ => Err(Error::Unsupported(
            "analytic tables need a standard-form tag; use the numerical oracle".into(),
        )),
    }
}

/// Closed-form `g_min` and minimizer families `T₀` for a tagged form.
pub fn gmin_analytic(gform: &GForm) -> Result<GroundSet> {
    let form = standard_tag(gform)?;
    let fams = analytic_families(&form)?;
    let (g_min, labels) = gmin_table(&form, &fams);
    let t0 = fams
        .into_iter()
        .filter(|s| s.exists && s.label.split('=').any(|l| labels.contains(&l)))
        .map(|mut s| {
            s.is_min = true;
            s
        })
        .collect();
    Ok(GroundSet { g_min, t0 })
}

/// `g_min` and `T₀` from the analytic tables when `g` carries a standard-form
/// tag, otherwise from the numerical oracle (one point family per orbit).
pub fn ground_set(gform: &GForm) -> GroundSet {
    if let Ok(set) = gmin_analytic(gform) {
        return set;
    }
    let num = gmin_numeric(gform);
    let t0 = num
        .minimizers
        .iter()
        .enumerate()
        .map(|(k, m)| CriticalSet {
            label: format!("N{k}"),
            orbit: Orbit::Points(vec![m.point()]),
            value: m.value,
            exists: true,
            is_min: true,
            provenance: Provenance::Numeric,
        })
        .collect();
    GroundSet { g_min: num.g_min, t0 }
}

/// All critical families of `g|∂B`, including those whose existence
/// condition fails (`exists = false`). Tagged forms use the analytic lists;
/// other forms are searched numerically (`∇h = 0` from a grid).
pub fn critical_points(gform: &GForm) -> Result<Vec<CriticalSet>> {
    match gform.kind() {
        GKind::Standard(form) => {
            let mut fams = analytic_families(form)?;
            let g_min = gmin_analytic(gform)?.g_min;
            for s in fams.iter_mut().filter(|s| s.exists) {
                s.is_min = (s.value - g_min).abs() <= 1e-12 * (1.0 + g_min.abs());
            }
            Ok(fams)
        }
        _ => Ok(numeric_critical_points(gform, 256)),
    }
}

// ---------------------------------------------------------------------------
// Numerical oracle

/// A point of the `(ν, ζ)` chart with its value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub nu: f64,
    pub zeta: f64,
    pub value: f64,
}

impl ChartPoint {
    pub fn point(&self) -> Pair {
        chart_point(self.nu, self.zeta)
    }
}

/// Result of the numerical minimization of `h`.
#[derive(Clone, Debug)]
pub struct NumericMinimum {
    pub g_min: f64,
    /// One representative per distinct minimizing gauge orbit found.
    pub minimizers: Vec<ChartPoint>,
    /// Set when at least five distinct orbits attain the minimum, i.e. the
    /// minimizer set is a continuum.
    pub continuum: bool,
}

/// Tuning of the numerical oracle.
#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    /// Grid points per chart axis.
    pub grid: usize,
    /// Maximum number of grid minima refined by Nelder–Mead.
    pub seeds: usize,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { grid: 2048, seeds: 32 }
    }
}

const FIT_DEGREE: usize = 4;
const FIT_SAMPLES: usize = 2 * FIT_DEGREE + 1;

/// `h` on a `n_nu × n_zeta` grid, row-major in ν. Each row is fitted as a
/// trigonometric polynomial of degree ≤ 4 in ζ (exact for the quartic and
/// CO forms), verified at two extra points and evaluated directly otherwise.
fn scan_grid(g: &GForm, n_nu: usize, n_zeta: usize) -> Vec<f64> {
    let dz = TAU / n_zeta as f64;
    let mut cs = vec![[0.0; FIT_DEGREE]; n_zeta];
    let mut sn = vec![[0.0; FIT_DEGREE]; n_zeta];
    for j in 0..n_zeta {
        for k in 0..FIT_DEGREE {
            let a = (k + 1) as f64 * j as f64 * dz;
            cs[j][k] = a.cos();
            sn[j][k] = a.sin();
        }
    }
    let fit_z: Vec<f64> = (0..FIT_SAMPLES).map(|m| TAU * m as f64 / FIT_SAMPLES as f64).collect();
    let mut out = vec![0.0; n_nu * n_zeta];
    for i in 0..n_nu {
        let nu = grid_nu(i, n_nu);
        let row = &mut out[i * n_zeta..(i + 1) * n_zeta];
        let samples: Vec<f64> = fit_z.iter().map(|&z| g.h(nu, z)).collect();
        let a0 = samples.iter().sum::<f64>() / FIT_SAMPLES as f64;
        let mut a = [0.0; FIT_DEGREE];
        let mut b = [0.0; FIT_DEGREE];
        for k in 0..FIT_DEGREE {
            for (m, &s) in samples.iter().enumerate() {
                let t = (k + 1) as f64 * fit_z[m];
                a[k] += 2.0 * s * t.cos() / FIT_SAMPLES as f64;
                b[k] += 2.0 * s * t.sin() / FIT_SAMPLES as f64;
            }
        }
        let eval = |z: f64| a0 + (0..FIT_DEGREE).map(|k| a[k] * ((k + 1) as f64 * z).cos() + b[k] * ((k + 1) as f64 * z).sin()).sum::<f64>();
        let scale = 1.0 + samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let fits = [0.3, 1.7].iter().all(|&z| (eval(z) - g.h(nu, z)).abs() <= 1e-12 * scale);
        if fits {
            let deg = (0..FIT_DEGREE).rev().find(|&k| a[k].abs() + b[k].abs() > 1e-15 * scale).map_or(0, |k| k + 1);
            for (j, v) in row.iter_mut().enumerate() {
                let mut s = a0;
                for k in 0..deg {
                    s += a[k] * cs[j][k] + b[k] * sn[j][k];
                }
                *v = s;
            }
        } else {
            for (j, v) in row.iter_mut().enumerate() {
                *v = g.h(nu, j as f64 * dz);
            }
        }
    }
    out
}

fn grid_nu(i: usize, n_nu: usize) -> f64 {
    FRAC_PI_2 * i as f64 / (n_nu - 1) as f64
}

/// Discrete local minima `(value, i, j)` of the grid; the pole rows
/// (single points of ∂B) contribute their `j = 0` entry only.
fn grid_local_minima(vals: &[f64], n_nu: usize, n_zeta: usize) -> Vec<(f64, usize, usize)> {
    let at = |i: usize, j: usize| vals[i * n_zeta + j];
    let row_min = |i: usize| vals[i * n_zeta..(i + 1) * n_zeta].iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for pole in [0, n_nu - 1] {
        let adj = if pole == 0 { 1 } else { n_nu - 2 };
        if at(pole, 0) <= row_min(adj) {
            out.push((at(pole, 0), pole, 0));
        }
    }
    for i in 1..n_nu - 1 {
        for j in 0..n_zeta {
            let v = at(i, j);
            let jm = (j + n_zeta - 1) % n_zeta;
            let jp = (j + 1) % n_zeta;
            let is_min = [i - 1, i, i + 1].iter().all(|&ii| {
                let (a, b, c) = if ii == 0 || ii == n_nu - 1 {
                    let p = at(ii, 0);
                    (p, p, p)
                } else {
                    (at(ii, jm), at(ii, j), at(ii, jp))
                };
                v <= a && (ii == i || v <= b) && v <= c
            });
            if is_min {
                out.push((v, i, j));
            }
        }
    }
    out
}

/// Numerical global minimum of `g|∂B` with its distinct minimizing orbits.
pub fn gmin_numeric(gform: &GForm) -> NumericMinimum {
    gmin_numeric_with(gform, NumericOptions::default())
}

/// [`gmin_numeric`] with explicit tuning.
pub fn gmin_numeric_with(gform: &GForm, opts: NumericOptions) -> NumericMinimum {
    let (n_nu, n_zeta) = (opts.grid.max(8), opts.grid.max(8));
    let vals = scan_grid(gform, n_nu, n_zeta);
    let mut cands = grid_local_minima(&vals, n_nu, n_zeta);
    let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2));
    const KEEP: usize = 4096;
    if cands.len() > KEEP {
        cands.select_nth_unstable_by(KEEP, cmp);
        cands.truncate(KEEP);
    }
    cands.sort_by(cmp);

    // greedy, spatially separated seeds
    const SEP: usize = 4;
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for &(_, i, j) in &cands {
        if seeds.len() >= opts.seeds {
            break;
        }
        let far = seeds.iter().all(|&(si, sj)| {
            let di = si.abs_diff(i);
            let dj = sj.abs_diff(j).min(n_zeta - sj.abs_diff(j));
            let pole = i == 0 || i == n_nu - 1;
            if pole && si == i {
                return false;
            }
            di > SEP || (!pole && dj > SEP)
        });
        if far {
            seeds.push((i, j));
        }
    }

    let dnu = FRAC_PI_2 / (n_nu - 1) as f64;
    let h = |x: &[f64]| gform.h(x[0], x[1]);
    let n = gform.gauge();
    let mut refined: Vec<(f64, Pair)> = seeds
        .iter()
        .map(|&(i, j)| {
            let x0 = [grid_nu(i, n_nu), TAU * j as f64 / n_zeta as f64];
            let scale = 1.0 + h(&x0).abs();
            let m = nelder_mead(h, &x0, dnu, 1e-11, 1e-15 * scale, 4000);
            (m.f, normalized(&chart_point(m.x[0], m.x[1])))
        })
        .collect();
    refined.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut orbits: Vec<(f64, Pair)> = Vec::new();
    for (v, w) in refined {
        if !orbits.iter().any(|(_, u)| orbit_distance(u, &w, n) < 1e-6) {
            orbits.push((v, w));
        }
    }
    let g_min = orbits.first().map_or(f64::NAN, |o| o.0);
    let level = 1e-9 * (1.0 + g_min.abs());
    let minimizers: Vec<ChartPoint> = orbits
        .iter()
        .filter(|(v, _)| *v <= g_min + level)
        .map(|(v, w)| {
            let (nu, zeta) = chart_coords(w, n);
            ChartPoint { nu, zeta, value: *v }
        })
        .collect();
    let continuum = minimizers.len() >= 5;
    NumericMinimum { g_min, minimizers, continuum }
}

/// Critical points of `h` found numerically: grid minima of `|∇h|²`
/// polished by Newton's method on `∇h = 0` (finite-difference Hessian), plus
/// the two chart poles when `h` is stationary there.
pub fn numeric_critical_points(gform: &GForm, grid: usize) -> Vec<CriticalSet> {
    let n = gform.gauge();
    let e = 1e-5;
    let grad = |nu: f64, z: f64| {
        [
            (gform.h(nu + e, z) - gform.h(nu - e, z)) / (2.0 * e),
            (gform.h(nu, z + e) - gform.h(nu, z - e)) / (2.0 * e),
        ]
    };
    let mut found: Vec<Pair> = Vec::new();
    for nu in [0.0, FRAC_PI_2] {
        let w = chart_point(nu, 0.0);
        if chart_gradient_norm(gform, &w) < 1e-7 {
            found.push(w);
        }
    }
    let (n_nu, n_zeta) = (grid.max(8), grid.max(8));
    let g2: Vec<f64> = (0..n_nu * n_zeta)
        .map(|k| {
            let (i, j) = (k / n_zeta, k % n_zeta);
            let d = grad(grid_nu(i, n_nu), TAU * j as f64 / n_zeta as f64);
            d[0] * d[0] + d[1] * d[1]
        })
        .collect();
    for (_, i, j) in grid_local_minima(&g2, n_nu, n_zeta) {
        if i == 0 || i == n_nu - 1 {
            continue;
        }
        let (mut x, mut y) = (grid_nu(i, n_nu), TAU * j as f64 / n_zeta as f64);
        let mut ok = false;
        for _ in 0..50 {
            let d = grad(x, y);
            if d[0].abs() + d[1].abs() < 1e-10 {
                ok = true;
                break;
            }
            let s = 1e-4;
            let dx = grad(x + s, y);
            let dy = grad(x, y + s);
            let hm = [[(dx[0] - d[0]) / s, (dy[0] - d[0]) / s], [(dx[1] - d[1]) / s, (dy[1] - d[1]) / s]];
            let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
            if det.abs() < 1e-14 {
                break;
            }
            x -= (hm[1][1] * d[0] - hm[0][1] * d[1]) / det;
            y -= (-hm[1][0] * d[0] + hm[0][0] * d[1]) / det;
        }
        if ok {
            let w = normalized(&chart_point(x, y));
            if !found.iter().any(|u| orbit_distance(u, &w, n) < 1e-6) {
                found.push(w);
            }
        }
    }
    let values: Vec<f64> = found.iter().map(|w| gform.eval(w)).collect();
    let g_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    found
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(k, (w, v))| CriticalSet {
            label: format!("N{k}"),
            orbit: Orbit::Points(vec![w]),
            value: v,
            exists: true,
            is_min: (v - g_min).abs() <= 1e-9 * (1.0 + g_min.abs()),
            provenance: Provenance::Numeric,
        })
        .collect()
}

/// Whether the analytic `T₀` and a numerical minimum agree: values within
/// `value_tol`; for discrete `T₀` a bijection of orbits within `dist_tol`;
/// for continua, matching continuum flags and every numerical minimizer
/// within `dist_tol` of `T₀`.
pub fn t0_agree(analytic: &GroundSet, numeric: &NumericMinimum, n: [u32; 2], value_tol: f64, dist_tol: f64) -> bool {
    if (analytic.g_min - numeric.g_min).abs() > value_tol {
        return false;
    }
    let on_set = numeric.minimizers.iter().all(|m| analytic.distance(&m.point(), n) <= dist_tol);
    if analytic.is_continuum() || numeric.continuum {
        return analytic.is_continuum() == numeric.continuum && on_set;
    }
    let gens = analytic.generators();
    gens.len() == numeric.minimizers.len()
        && on_set
        && gens
            .iter()
            .all(|w| numeric.minimizers.iter().any(|m| orbit_distance(w, &m.point(), n) <= dist_tol))
}

/// Name `A_k` of the soliton family generated by the critical set
/// `label` of a standard form (merged labels `a=b` map part by part; the
/// CO labels already are family names).
pub fn family_name(form: Option<&StandardForm>, label: &str) -> Option<String> {
    let map = |l: &str| -> Option<&'static str> {
        Some(match (form?, l) {
            (StandardForm::Nls1 { .. }, "T01") => "A1",
            (StandardForm::Nls1 { .. }, "T02") => "A2",
            (StandardForm::Nls2 { .. }, "T01") => "A3",
            (StandardForm::Nls2 { .. }, "T02") => "A4",
            (StandardForm::Nls2 { beta, sigma, .. }, "T03") => {
                if *beta > 0.0 && *sigma == -1.0 {
                    "A5"
                } else {
                    "A6"
                }
            }
            (StandardForm::Nls3 { .. }, "T01") => "A7",
            (StandardForm::Nls3 { .. }, "T02") => "A8",
            (StandardForm::Nls3 { .. }, "T03") => "A9",
            (StandardForm::Nls3 { .. }, "T04") => "A10",
            (StandardForm::Nls4 { .. }, "T01") => "A11",
            (StandardForm::Nls4 { .. }, "T02") => "A12",
            (StandardForm::Nls4 { .. }, "T03") => "A13",
            (StandardForm::Nls4 { .. }, "T04") => "A14",
            (StandardForm::Nls5 { .. }, "theta0") => "A15",
            (StandardForm::Nls5 { .. }, "theta1") => "A16",
            (StandardForm::Nls5 { .. }, "theta2") => "A17",
            (StandardForm::Nls5 { .. }, "theta3") => "A18",
            (StandardForm::Nls5 { .. }, "Tc") => "A19",
            _ => return None,
        })
    };
    if let Some(StandardForm::Co { .. }) = form {
        return Some(label.to_string());
    }
    let parts: Option<Vec<&str>> = label.split('=').map(map).collect();
    parts.map(|p| p.join("="))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn std(form: StandardForm) -> GForm {
        GForm::standard(form)
    }

    #[test]
    fn trig_tau_half_pi() {
        let s = solve_trig(1.0, FRAC_PI_2).unwrap();
        let expect = [PI / 6.0, FRAC_PI_2, 5.0 * PI / 6.0, 1.5 * PI];
        for (r, e) in s.roots.iter().zip(expect) {
            assert!((r.unwrap() - e).abs() < 1e-12);
        }
        assert_eq!(s.rho_star, 2.0);
    }

    #[test]
    fn trig_rho_zero_and_generic() {
        let s = solve_trig(0.0, 1.0).unwrap();
        assert_eq!(s.roots, [Some(0.0), Some(FRAC_PI_2), Some(PI), Some(1.5 * PI)]);
        let s = solve_trig(0.5, PI / 3.0).unwrap();
        assert_eq!(s.distinct_roots(), 4);
        for r in s.roots.iter().flatten() {
            assert!(trig_f(0.5, PI / 3.0, *r).abs() <= 1e-12);
        }
    }

    #[test]
    fn rho_star_is_continuous_at_half_pi_and_symmetric() {
        // ρ_* approaches 2 like a square root of the distance to π/2
        assert!((rho_star(FRAC_PI_2 - 1e-9) - 2.0).abs() < 1e-4);
        assert!((rho_star(FRAC_PI_2 + 1e-9) - 2.0).abs() < 1e-4);
        assert!((rho_star(0.4) - rho_star(PI - 0.4)).abs() < 1e-9);
        // dense-scan bisection oracle values
        assert!((rho_star(1.0) - 1.0317381046677283).abs() < 1e-8);
        assert!((rho_star(0.3) - 1.1898978920073553).abs() < 1e-8);
    }

    #[test]
    fn trig_merge_reports_labels() {
        let tau = 0.9;
        let rs = rho_star(tau);
        let s = solve_trig(rs, tau).unwrap();
        assert_eq!(s.merged, vec![1, 2]);
        assert_eq!(s.distinct_roots(), 3);
        let s = solve_trig(rs * 1.01, tau).unwrap();
        assert_eq!(s.distinct_roots(), 2);
    }

    #[test]
    fn nls3_and_nls1_examples() {
        let g = gmin_analytic(&std(StandardForm::Nls3 { alpha1: 0.8, alpha2: 0.6, r: 0.0 })).unwrap();
        assert!((g.g_min - 1.6).abs() < 1e-15);
        assert_eq!(g.t0[0].label, "T03");
        let g = gmin_analytic(&std(StandardForm::Nls1 { alpha: 1.0, beta: 0.0 })).unwrap();
        assert_eq!(g.g_min, 0.0);
    }

    #[test]
    fn nls4_example_value() {
        let form = StandardForm::Nls4 { alpha1: 0.0, alpha2: 0.6, alpha3: 0.8, r: 0.0 };
        let g = gmin_analytic(&std(form)).unwrap();
        assert!((g.g_min + 17.0 / 15.0).abs() < 1e-14);
        let num = gmin_numeric_with(&std(form), NumericOptions { grid: 512, seeds: 32 });
        assert!((num.g_min - g.g_min).abs() < 1e-9);
        assert!(t0_agree(&g, &num, [1, 1], 1e-6, 1e-5));
    }

    #[test]
    fn whole_sphere_is_a_continuum() {
        let form = StandardForm::Nls2 { alpha: 0.0, beta: 0.0, sigma: -1.0 };
        let num = gmin_numeric_with(&std(form), NumericOptions { grid: 256, seeds: 32 });
        assert!((num.g_min + 1.0).abs() < 1e-12);
        assert!(num.continuum);
        assert!(t0_agree(&gmin_analytic(&std(form)).unwrap(), &num, [1, 1], 1e-6, 1e-5));
    }

    #[test]
    fn analytic_points_are_critical() {
        let forms = [
            StandardForm::Nls4 { alpha1: 0.1, alpha2: 0.5, alpha3: 0.3, r: 0.2 },
            StandardForm::Nls5 { alpha1: 0.7, alpha2: 0.3, alpha3: 0.2, r: 0.1, eta: 1.1 },
            StandardForm::Co { kappa: 0.0, gamma: 2.0 },
        ];
        for f in forms {
            let g = std(f);
            for s in critical_points(&g).unwrap().iter().filter(|s| s.exists) {
                for w in s.orbit.generators() {
                    assert!((pair_norm(&w) - 1.0).abs() < 1e-12);
                    assert!(chart_gradient_norm(&g, &w) < 1e-9, "{} {:?}", s.label, f);
                    assert!((g.eval(&w) - s.value).abs() < 1e-12, "{} {:?}", s.label, f);
                }
            }
        }
    }

    #[test]
    fn co_gamma_two_kappa_zero_families() {
        let fams = critical_points(&std(StandardForm::Co { kappa: 0.0, gamma: 2.0 })).unwrap();
        let present: Vec<&str> = fams.iter().filter(|s| s.exists).map(|s| s.label.as_str()).collect();
        assert_eq!(present, vec!["A0", "A1", "A3"]);
        // ν₃ is critical here but outside J₃: its value is positive
        let a3 = fams.iter().find(|s| s.label == "A3").unwrap();
        assert!(!co_in_j3(0.0, 2.0) && a3.value > 0.0 && !a3.gives_solution());
    }

    #[test]
    fn orbit_distance_respects_gauge() {
        let w = chart_point(0.4, 1.0);
        let g = |t: f64, n: [u32; 2]| [w[0] * C64::from_polar(1.0, n[0] as f64 * t), w[1] * C64::from_polar(1.0, n[1] as f64 * t)];
        assert!(orbit_distance(&w, &g(0.8, [1, 1]), [1, 1]) < 1e-7);
        assert!(orbit_distance(&w, &g(2.1, [1, 2]), [1, 2]) < 1e-6);
        assert!(orbit_distance(&w, &g(2.1, [1, 1]), [1, 2]) > 1e-2);
    }

    #[test]
    fn custom_numeric_critical_points() {
        let g = std(StandardForm::Nls3 { alpha1: 0.6, alpha2: 0.8, r: 0.0 });
        let inner = g.clone();
        let custom = GForm::custom(4.0, [1, 1], move |z| inner.eval(z));
        let num = numeric_critical_points(&custom, 128);
        let ana = critical_points(&g).unwrap();
        for s in ana.iter().filter(|s| s.exists) {
            for w in s.orbit.generators() {
                assert!(num.iter().any(|c| c.orbit.distance(&w, [1, 1]) < 1e-6), "{}", s.label);
            }
        }
    }

    proptest! {
        #[test]
        fn trig_roots_solve_the_equation(rho in 0.0f64..5.0, tau in 0.01f64..3.13) {
            let res = solve_trig(rho, tau).unwrap();
            for th in res.roots.iter().flatten() {
                prop_assert!(trig_f(rho, tau, *th).abs() <= 1e-12, "f({th}) = {}", trig_f(rho, tau, *th));
            }
            let n = res.distinct_roots();
            if rho < res.rho_star * (1.0 - 1e-6) {
                prop_assert_eq!(n, 4);
            } else if rho > res.rho_star * (1.0 + 1e-6) {
                prop_assert_eq!(n, 2);
            }
        }

        #[test]
        fn orbits_share_the_critical_value(
            a1 in -1.0f64..1.0, a2 in 0.0f64..1.0, a3 in 0.05f64..1.0, r in -3.0f64..3.0,
            eta in 0.05f64..3.09, th in 0.0f64..6.3,
        ) {
            let norm = (a1 * a1 + a2 * a2 + a3 * a3).sqrt();
            let (a1, a2, a3) = (a1 / norm, a2 / norm, a3 / norm);
            let forms = [
                StandardForm::Nls4 { alpha1: a1, alpha2: a2, alpha3: a3, r },
                StandardForm::Nls5 { alpha1: a1, alpha2: a2, alpha3: a3, r, eta },
            ];
            for form in forms {
                prop_assume!(form.validate().is_ok());
                let g = std(form);
                let n = g.gauge();
                for set in critical_points(&g).unwrap().into_iter().filter(|s| s.exists) {
                    for w in set.orbit.generators() {
                        prop_assert!((crate::system_model::pair_norm(&w) - 1.0).abs() <= 1e-12);
                        let rot = [w[0] * C64::from_polar(1.0, n[0] as f64 * th), w[1] * C64::from_polar(1.0, n[1] as f64 * th)];
                        prop_assert!((g.eval(&rot) - set.value).abs() <= 1e-12, "{} at {:?}", set.label, w);
                    }
                }
            }
        }
    }
}
