//! The positive radial ground state `Q` of `−ΔQ + Q = Q^{p−1}` in
//! `d = 1, 2, 3`, its rescalings `Q_{ω,a} = (ω/a)^{1/(p−2)} Q(√ω ·)` solving
//! `−ΔQ_{ω,a} + ωQ_{ω,a} = aQ_{ω,a}^{p−1}`, and its norms.
//!
//! `d = 1` uses the closed form `Q(x) = (p/2)^{1/(p−2)} sech^{2/(p−2)}((p−2)x/2)`;
//! `d ≥ 2` shoots on `Q'' + ((d−1)/r)Q' = Q − Q^{p−1}` from a series start
//! at the regular singular point, bisecting on `Q(0)`, with an exponential
//! tail attached beyond the matching radius.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radial grid parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridParams {
    /// Grid spacing `δr`.
    pub dr: f64,
    /// Outer radius of the sampled grid.
    pub r_max: f64,
    /// Radius beyond which the shooting solution is replaced by the
    /// `A r^{−(d−1)/2} e^{−r}` tail.
    pub r_match: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { dr: 1e-3, r_max: 20.0, r_match: 15.0 }
    }
}

/// `‖Q‖₂²`, `‖∇Q‖₂²`, `‖Q‖_p^p` over `ℝ^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub mass: f64,
    pub grad: f64,
    pub lp: f64,
}

/// Surface measure of the unit sphere in `ℝ^d` (`2`, `2π`, `4π`).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {d} not supported"),
    }
}

/// `s_p = d/2 − d/p`.
pub fn s_p(d: usize, p: f64) -> f64 {
    d as f64 / 2.0 - d as f64 / p
}

/// `s_c = d/2 − 2/(p−2)`.
pub fn s_c(d: usize, p: f64) -> f64 {
    d as f64 / 2.0 - 2.0 / (p - 2.0)
}

/// Check `d ∈ {1,2,3}` and `p ∈ (2, 2*)`.
pub fn check_dp(d: usize, p: f64) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(Error::Validation(format!("profiles need d in 1..=3, got {d}")));
    }
    let p_star = if d <= 2 { f64::INFINITY } else { 2.0 * d as f64 / (d as f64 - 2.0) };
    if !(p > 2.0 && p < p_star) {
        return Err(Error::Validation(format!("p = {p} outside (2, {p_star}) for d = {d}")));
    }
    Ok(())
}

/// A sampled radial profile `Q_{ω,a}` on a uniform grid `r_i = i·δr`.
#[derive(Clone, Debug)]
pub struct ScalarProfile {
    pub d: usize,
    pub p: f64,
    pub omega: f64,
    pub a: f64,
    dr: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    /// Index of the matching radius (samples beyond it are the tail closure).
    match_index: usize,
    /// Tail amplitude `A` in `Q ≈ A r^{−(d−1)/2} e^{−√ω r}` beyond the grid.
    tail_amp: f64,
}

impl ScalarProfile {
    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Radii of the samples.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.q.len()).map(|i| i as f64 * self.dr).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.dq
    }

    /// `Q(0)`.
    pub fn peak(&self) -> f64 {
        self.q[0]
    }

    /// Matching radius (end of the solved region).
    pub fn r_match(&self) -> f64 {
        self.match_index as f64 * self.dr
    }

    /// Outer radius of the samples.
    pub fn r_max(&self) -> f64 {
        (self.q.len() - 1) as f64 * self.dr
    }

    fn sqrt_omega(&self) -> f64 {
        self.omega.sqrt()
    }

    /// `(Q(r), Q'(r))` by cubic Hermite interpolation of the samples, the
    /// exponential tail beyond the grid.
    pub fn eval_with_derivative(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let last = self.q.len() - 1;
        if r >= last as f64 * self.dr {
            let k = self.sqrt_omega();
            let m = (self.d as f64 - 1.0) / 2.0;
            let v = self.tail_amp * r.powf(-m) * (-k * r).exp();
            return (v, v * (-k - m / r));
        }
        let t = r / self.dr;
        let i = (t.floor() as usize).min(last - 1);
        let s = t - i as f64;
        let (y0, y1) = (self.q[i], self.q[i + 1]);
        let (m0, m1) = (self.dq[i] * self.dr, self.dq[i + 1] * self.dr);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let dv = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / self.dr;
        (v, dv)
    }

    /// `Q(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_derivative(r).0
    }

    /// Norms by trapezoidal quadrature of the samples with the radial
    /// measure `|S^{d−1}| r^{d−1} dr` (the tail beyond the grid is
    /// negligible at the default radii and is omitted).
    pub fn norms(&self) -> Norms {
        let w = sphere_area(self.d);
        let dm1 = self.d as i32 - 1;
        let mut acc = [0.0; 3];
        let n = self.q.len();
        for i in 0..n {
            let r = i as f64 * self.dr;
            let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * r.powi(dm1);
            let q = self.q[i];
            acc[0] += weight * q * q;
            acc[1] += weight * self.dq[i] * self.dq[i];
            acc[2] += weight * q.abs().powf(self.p);
        }
        Norms { mass: w * self.dr * acc[0], grad: w * self.dr * acc[1], lp: w * self.dr * acc[2] }
    }

    /// Relative defects of the two Pohozaev identities,
    /// `‖∇Q‖² = (s_p/(1−s_p)) ω‖Q‖²` and `a‖Q‖_p^p = ω‖Q‖²/(1−s_p)`, each
    /// divided by `ω‖Q‖²`.
    pub fn pohozaev_defects(&self) -> [f64; 2] {
        let n = self.norms();
        let sp = s_p(self.d, self.p);
        let wm = self.omega * n.mass;
        [(n.grad - sp / (1.0 - sp) * wm).abs() / wm, (self.a * n.lp - wm / (1.0 - sp)).abs() / wm]
    }

    /// Relative sup-norm residual of `−ΔQ + ωQ − aQ^{p−1}` over `r ≤ R_match`,
    /// with fourth-order central differences (samples extended evenly through
    /// `r = 0`, where `ΔQ = d·Q''`).
    pub fn residual(&self) -> f64 {
        self.residual_with_order(4)
    }

    /// The same residual with second-order central differences. Its own
    /// truncation error, roughly `h²(Q''''/12 + (d−1)Q'''/(6r))`, dominates for
    /// sharply peaked profiles (about 8e-5 relative for `d = 3`, `p = 4`,
    /// `δr = 1e-3`).
    pub fn residual_second_order(&self) -> f64 {
        self.residual_with_order(2)
    }

    /// `ΔQ` at the samples `r < R_match` by central differences of the given
    /// order (2 or 4), with `ΔQ(0) = d·Q''(0)`.
    pub fn laplacian_with_order(&self, order: usize) -> Vec<f64> {
        let h = self.dr;
        let d = self.d as f64;
        let end = self.match_index.min(self.q.len() - 3);
        let q = |i: isize| self.q[i.unsigned_abs()];
        (0..end as isize)
            .map(|i| {
                let (qpp, qp) = if order == 2 {
                    ((q(i + 1) - 2.0 * q(i) + q(i - 1)) / (h * h), (q(i + 1) - q(i - 1)) / (2.0 * h))
                } else {
                    (
                        (-q(i + 2) + 16.0 * q(i + 1) - 30.0 * q(i) + 16.0 * q(i - 1) - q(i - 2)) / (12.0 * h * h),
                        (-q(i + 2) + 8.0 * q(i + 1) - 8.0 * q(i - 1) + q(i - 2)) / (12.0 * h),
                    )
                };
                if i == 0 {
                    d * qpp
                } else {
                    qpp + (d - 1.0) / (i as f64 * h) * qp
                }
            })
            .collect()
    }

    /// Fourth-order `ΔQ` at the samples `r < R_match`.
    pub fn laplacian(&self) -> Vec<f64> {
        self.laplacian_with_order(4)
    }

    fn residual_with_order(&self, order: usize) -> f64 {
        let rhs = |v: f64| self.omega * v - self.a * v.abs().powf(self.p - 2.0) * v;
        let worst = self
            .laplacian_with_order(order)
            .iter()
            .zip(&self.q)
            .map(|(lap, &v)| (-lap + rhs(v)).abs())
            .fold(0.0_f64, f64::max);
        worst / self.peak()
    }
}

/// Closed-form `d = 1` profile and its first two derivatives at `x`.
pub fn q1d(p: f64, x: f64) -> (f64, f64, f64) {
    let k = (p - 2.0) / 2.0;
    let m = 2.0 / (p - 2.0);
    let amp = (p / 2.0).powf(1.0 / (p - 2.0));
    let sech = 1.0 / (k * x).cosh();
    let tanh = (k * x).tanh();
    let q = amp * sech.powf(m);
    let dq = -amp * m * k * sech.powf(m) * tanh;
    let ddq = amp * m * k * k * sech.powf(m) * (m * tanh * tanh - sech * sech);
    (q, dq, ddq)
}

/// Residual of the closed-form `d = 1` profile with its analytic second
/// derivative, relative sup-norm over `[0, R_match]`.
pub fn residual_1d_closed_form(p: f64, grid: &GridParams) -> f64 {
    let n = (grid.r_match / grid.dr).round() as usize;
    let peak = q1d(p, 0.0).0;
    (0..=n)
        .map(|i| {
            let (q, _, ddq) = q1d(p, i as f64 * grid.dr);
            (-ddq + q - q.powf(p - 1.0)).abs()
        })
        .fold(0.0, f64::max)
        / peak
}

/// Outcome of one shooting trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    /// `Q` crossed zero: `Q(0)` too large.
    Crossed,
    /// `Q'` turned positive: `Q(0)` too small.
    TurnedUp,
    /// Reached the target radius monotonically.
    Reached,
}

struct Shooter {
    d: usize,
    p: f64,
    dr: f64,
}

impl Shooter {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        let q = y[0];
        [y[1], -(self.d as f64 - 1.0) / r * y[1] + q - q.abs().powf(self.p - 2.0) * q]
    }

    /// `Q(r) ≈ a + A r² + B r⁴` with `A = f(a)/(2d)`, `B = f'(a)A/(4(d+2))`,
    /// `f(Q) = Q − Q^{p−1}`, evaluated at `r = δr`.
    fn series_start(&self, a: f64) -> [f64; 2] {
        let d = self.d as f64;
        let f = a - a.powf(self.p - 1.0);
        let df = 1.0 - (self.p - 1.0) * a.powf(self.p - 2.0);
        let big_a = f / (2.0 * d);
        let big_b = df * big_a / (4.0 * (d + 2.0));
        let r = self.dr;
        [a + big_a * r * r + big_b * r.powi(4), 2.0 * big_a * r + 4.0 * big_b * r.powi(3)]
    }

    /// RK4 from `r = δr` to grid index `n_end`, recording samples into
    /// `out` when given. Two substeps per grid cell, refined to 32 for
    /// `r < 0.1` where the `(d−1)/r` coefficient is large.
    fn shoot(&self, a: f64, n_end: usize, mut out: Option<(&mut Vec<f64>, &mut Vec<f64>)>) -> (Shot, usize) {
        let mut y = self.series_start(a);
        if let Some((q, dq)) = out.as_mut() {
            q.clear();
            dq.clear();
            q.push(a);
            dq.push(0.0);
            q.push(y[0]);
            dq.push(y[1]);
        }
        for i in 1..n_end {
            let mut r = i as f64 * self.dr;
            let sub = if r < 0.1 { 32 } else { 2 };
            let h = self.dr / sub as f64;
            for _ in 0..sub {
                let k1 = self.rhs(r, y);
                let k2 = self.rhs(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
                let k3 = self.rhs(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
                let k4 = self.rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
                r += h;
            }
            if let Some((q, dq)) = out.as_mut() {
                q.push(y[0]);
                dq.push(y[1]);
            }
            if y[0] <= 0.0 {
                return (Shot::Crossed, i + 1);
            }
            if y[1] > 0.0 {
                return (Shot::TurnedUp, i + 1);
            }
        }
        (Shot::Reached, n_end)
    }
}

/// The positive radial ground state of `−ΔQ + Q = Q^{p−1}` sampled on
/// `[0, r_max]`.
pub fn solve_q(d: usize, p: f64, grid: &GridParams) -> Result<ScalarProfile> {
    check_dp(d, p)?;
    if !(grid.dr > 0.0 && grid.r_match > 0.0 && grid.r_max >= grid.r_match) {
        return Err(Error::Validation(format!("bad grid parameters {grid:?}")));
    }
    let n = (grid.r_max / grid.dr).round() as usize + 1;
    let match_index = (grid.r_match / grid.dr).round() as usize;
    if d == 1 {
        let (q, dq): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let (q, dq, _) = q1d(p, i as f64 * grid.dr);
                (q, dq)
            })
            .unzip();
        let r_end = (n - 1) as f64 * grid.dr;
        let tail_amp = q[n - 1] * r_end.exp();
        return Ok(ScalarProfile { d, p, omega: 1.0, a: 1.0, dr: grid.dr, q, dq, match_index, tail_amp });
    }
    shoot_profile(d, p, grid, n, match_index)
}

/// Shooting solution (also usable in `d = 1` as a cross-check of the
/// closed form).
pub fn solve_q_shooting(d: usize, p: f64, grid: &GridParams) -> Result<ScalarProfile> {
    check_dp(d, p)?;
    let n = (grid.r_max / grid.dr).round() as usize + 1;
    let match_index = (grid.r_match / grid.dr).round() as usize;
    shoot_profile(d, p, grid, n, match_index)
}

fn shoot_profile(d: usize, p: f64, grid: &GridParams, n: usize, match_index: usize) -> Result<ScalarProfile> {
    let sh = Shooter { d, p, dr: grid.dr };
    let mut trace: Vec<(f64, &'static str)> = Vec::new();
    // lower bracket: just above the constant solution Q ≡ 1
    let mut lo = 1.0 + 1e-6;
    let (shot, _) = sh.shoot(lo, match_index, None);
    trace.push((lo, shot_name(shot)));
    if shot != Shot::TurnedUp {
        return Err(Error::NonConvergence(format!("shooting: no lower bracket, trace {trace:?}")));
    }
    let mut hi = 2.0;
    loop {
        let (shot, _) = sh.shoot(hi, match_index, None);
        trace.push((hi, shot_name(shot)));
        if shot == Shot::Crossed {
            break;
        }
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence(format!("shooting: no upper bracket, trace {trace:?}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match sh.shoot(mid, match_index, None).0 {
            Shot::Crossed => hi = mid,
            Shot::TurnedUp => lo = mid,
            Shot::Reached => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let a = 0.5 * (lo + hi);
    let mut q = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    let (_, reached) = sh.shoot(a, match_index, Some((&mut q, &mut dq)));
    // the separatrix is followed until round-off makes it peel off; match
    // the tail a little before that point if it happens before R_match
    let cut = reached.min(match_index).saturating_sub(if reached < match_index { 200 } else { 0 });
    if cut < match_index / 2 {
        return Err(Error::NonConvergence(format!(
            "shooting trajectory left the separatrix at r = {}, bracket [{lo}, {hi}]",
            reached as f64 * grid.dr
        )));
    }
    q.truncate(cut + 1);
    dq.truncate(cut + 1);
    let m = (d as f64 - 1.0) / 2.0;
    let r_cut = cut as f64 * grid.dr;
    let tail_amp = q[cut] * r_cut.powf(m) * r_cut.exp();
    for i in cut + 1..n {
        let r = i as f64 * grid.dr;
        let v = tail_amp * r.powf(-m) * (-r).exp();
        q.push(v);
        dq.push(v * (-1.0 - m / r));
    }
    Ok(ScalarProfile { d, p, omega: 1.0, a: 1.0, dr: grid.dr, q, dq, match_index: cut, tail_amp })
}

fn shot_name(s: Shot) -> &'static str {
    match s {
        Shot::Crossed => "crossed-zero",
        Shot::TurnedUp => "turned-up",
        Shot::Reached => "reached",
    }
}

/// `Q_{ω,a}(r) = (ω/a)^{1/(p−2)} Q(√ω r)`, sampled on the grid `r_i/√ω`.
pub fn rescale(profile: &ScalarProfile, omega: f64, a: f64) -> Result<ScalarProfile> {
    if !(omega > 0.0 && a > 0.0 && omega.is_finite() && a.is_finite()) {
        return Err(Error::Validation(format!("rescale needs omega > 0 and a > 0, got ({omega}, {a})")));
    }
    // compose with any existing scaling: new (ω', a') relative to Q itself
    let (w0, a0) = (profile.omega, profile.a);
    let k = omega.sqrt();
    let amp = (omega / a).powf(1.0 / (profile.p - 2.0));
    let amp_old = (w0 / a0).powf(1.0 / (profile.p - 2.0));
    let ratio = amp / amp_old;
    let kr = k / w0.sqrt();
    Ok(ScalarProfile {
        d: profile.d,
        p: profile.p,
        omega,
        a,
        dr: profile.dr / kr,
        q: profile.q.iter().map(|v| ratio * v).collect(),
        dq: profile.dq.iter().map(|v| ratio * kr * v).collect(),
        match_index: profile.match_index,
        tail_amp: ratio * profile.tail_amp * kr.powf(-(profile.d as f64 - 1.0) / 2.0),
    })
}

/// Scaling law of the norms: `(ω/a)^{2/(p−2)} ω^{−d/2}‖Q‖²`,
/// `(ω/a)^{2/(p−2)} ω^{1−d/2}‖∇Q‖²`, `(ω/a)^{p/(p−2)} ω^{−d/2}‖Q‖_p^p`.
pub fn scaled_norms(base: &Norms, d: usize, p: f64, omega: f64, a: f64) -> Norms {
    let s = omega / a;
    let half_d = d as f64 / 2.0;
    Norms {
        mass: s.powf(2.0 / (p - 2.0)) * omega.powf(-half_d) * base.mass,
        grad: s.powf(2.0 / (p - 2.0)) * omega.powf(1.0 - half_d) * base.grad,
        lp: s.powf(p / (p - 2.0)) * omega.powf(-half_d) * base.lp,
    }
}
