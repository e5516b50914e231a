//! Time integration of `(i∂_t + n_jΔ)u_j = n_jF_j(u)` on periodic grids,
//! conservation diagnostics, the localized virial, exact standing-wave and
//! pseudo-conformal solutions, and the stability / blowup experiments.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{band_limited_field, field_functionals, kinetic, mass, FieldPair, PeriodicGrid, Spectral};
use crate::ground_state::{build_ground_states, Functionals, VectorProfile};
use crate::optimize::nelder_mead;
use crate::scalar_profile::{solve_q, GridParams};
use crate::system_model::{eval_f, GForm, SystemSpec, C64};

/// Two fields on a periodic grid at time `t`.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub grid: PeriodicGrid,
    pub u: FieldPair,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: PeriodicGrid, u: FieldPair) -> Self {
        FieldState { grid, u, t: 0.0 }
    }

    /// `max_x max_j |u_j(x)|`.
    pub fn peak(&self) -> f64 {
        self.u.iter().flat_map(|v| v.iter()).map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pointwise maximum of `|u_j − v_j|` over both components.
    pub fn sup_distance(&self, v: &FieldPair) -> f64 {
        self.u
            .iter()
            .zip(v)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }
}

/// How the pointwise nonlinear flow `∂_t u_j = −i n_j F_j(u)` is advanced.
#[derive(Clone, Copy, Debug)]
enum Nonlinear {
    /// `F_j = V_j(|u₁|², |u₂|²) u_j`: moduli are frozen and the flow is an
    /// exact phase rotation. Holds `[λ₁, λ₄, λ₈, λ₁₂]`.
    Diagonal([f64; 4]),
    /// Anything else: one classical RK4 step.
    General,
}

/// Strang split-step Fourier integrator: half nonlinear kick, full
/// spectral drift with symbol `e^{−i n_j|ξ|² dt}`, half kick.
#[derive(Clone, Debug)]
pub struct Integrator {
    spec: SystemSpec,
    gform: GForm,
    spectral: Spectral,
    dt: f64,
    propagator: [Vec<C64>; 2],
    nonlinear: Nonlinear,
}

impl Integrator {
    pub fn new(spec: &SystemSpec, grid: PeriodicGrid, dt: f64) -> Result<Self> {
        if spec.d != grid.d {
            return Err(Error::Validation(format!("system is {}-dimensional, grid is {}-dimensional", spec.d, grid.d)));
        }
        let gform = spec
            .gform
            .clone()
            .ok_or_else(|| Error::Validation("dynamics needs a system with a potential g".into()))?;
        let nonlinear = match spec.lambdas {
            Some(l) if [1, 2, 4, 5, 6, 8, 9, 10].iter().all(|&k| l[k] == 0.0) => {
                Nonlinear::Diagonal([l[0], l[3], l[7], l[11]])
            }
            _ => Nonlinear::General,
        };
        let mut it = Integrator {
            spec: spec.clone(),
            gform,
            spectral: Spectral::new(grid),
            dt: 0.0,
            propagator: [Vec::new(), Vec::new()],
            nonlinear,
        };
        it.set_dt(dt)?;
        Ok(it)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gform(&self) -> &GForm {
        &self.gform
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn spectral(&mut self) -> &mut Spectral {
        &mut self.spectral
    }

    /// Change the time step (rebuilds the linear propagator).
    pub fn set_dt(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("time step {dt} must be positive")));
        }
        self.dt = dt;
        let grid = self.spectral.grid;
        for j in 0..2 {
            let nj = self.spec.n[j] as f64;
            self.propagator[j] =
                (0..grid.len()).map(|i| C64::from_polar(1.0, -nj * grid.wave_number_sq(i) * dt)).collect();
        }
        Ok(())
    }

    fn kick(&self, u: &mut FieldPair, tau: f64) {
        let [n1, n2] = self.spec.n.map(|x| x as f64);
        let (first, second) = u.split_at_mut(1);
        let (u1, u2) = (&mut first[0], &mut second[0]);
        match self.nonlinear {
            Nonlinear::Diagonal([l0, l3, l7, l11]) => {
                for (a, b) in u1.iter_mut().zip(u2.iter_mut()) {
                    let (m1, m2) = (a.norm_sqr(), b.norm_sqr());
                    *a *= C64::from_polar(1.0, -n1 * (l0 * m1 + l3 * m2) * tau);
                    *b *= C64::from_polar(1.0, -n2 * (l7 * m1 + l11 * m2) * tau);
                }
            }
            Nonlinear::General => {
                let rhs = |z: [C64; 2]| {
                    let f = eval_f(&self.spec, &z);
                    [C64::new(0.0, -n1) * f[0], C64::new(0.0, -n2) * f[1]]
                };
                for (a, b) in u1.iter_mut().zip(u2.iter_mut()) {
                    let z = [*a, *b];
                    let k1 = rhs(z);
                    let k2 = rhs([z[0] + k1[0] * (tau / 2.0), z[1] + k1[1] * (tau / 2.0)]);
                    let k3 = rhs([z[0] + k2[0] * (tau / 2.0), z[1] + k2[1] * (tau / 2.0)]);
                    let k4 = rhs([z[0] + k3[0] * tau, z[1] + k3[1] * tau]);
                    *a = z[0] + (k1[0] + k2[0] * 2.0 + k3[0] * 2.0 + k4[0]) * (tau / 6.0);
                    *b = z[1] + (k1[1] + k2[1] * 2.0 + k3[1] * 2.0 + k4[1]) * (tau / 6.0);
                }
            }
        }
    }

    fn drift(&mut self, u: &mut FieldPair) {
        for (v, prop) in u.iter_mut().zip(&self.propagator) {
            self.spectral.forward(v);
            v.iter_mut().zip(prop).for_each(|(c, e)| *c *= e);
            self.spectral.inverse(v);
        }
    }

    /// Advance by one step `dt`. A non-finite field aborts with
    /// [`Error::NonConvergence`].
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        let half = 0.5 * self.dt;
        self.kick(&mut state.u, half);
        self.drift(&mut state.u);
        self.kick(&mut state.u, half);
        state.t += self.dt;
        if state.u.iter().flat_map(|v| v.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonConvergence(format!("field became non-finite at t = {}", state.t)));
        }
        Ok(())
    }

    /// Advance `steps` steps.
    pub fn advance(&mut self, state: &mut FieldState, steps: usize) -> Result<()> {
        (0..steps).try_for_each(|_| self.step(state))
    }

    /// Functionals of the current state at frequency `ω`.
    pub fn functionals(&mut self, state: &FieldState, omega: f64) -> Functionals {
        field_functionals(&mut self.spectral, &self.gform, &state.u, omega)
    }
}

// ---------------------------------------------------------------------------
// Localized virial

/// The smooth step `ψ(t) = 1/(1 + e^{1/t − 1/(1−t)})` on `(0,1)` (0 before,
/// 1 after) and its first two derivatives. Every derivative vanishes at both
/// ends, so the step is `C^∞`. Returns `(ψ, 1 − ψ, ψ', ψ'')`, with `1 − ψ`
/// computed without cancellation.
fn smooth_step(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0, 1.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let u = 1.0 - t;
    let h = 1.0 / t - 1.0 / u;
    let h1 = -1.0 / (t * t) - 1.0 / (u * u);
    let h2 = 2.0 / (t * t * t) - 2.0 / (u * u * u);
    let lo = 1.0 / (1.0 + h.exp()); // ψ
    let hi = 1.0 / (1.0 + (-h).exp()); // 1 − ψ
    let d1 = -lo * hi; // dψ/dh
    let d2 = lo * hi * (hi - lo); // d²ψ/dh²
    [lo, hi, d1 * h1, d2 * h1 * h1 + d1 * h2]
}

/// First three derivatives of `χ₀` at `s ≥ 0`, where
/// `χ₀'(s) = 2s(1 − ψ(s − 1))`.
pub fn chi0_derivatives(s: f64) -> [f64; 3] {
    let s = s.abs();
    let [_, rest, p1, p2] = smooth_step(s - 1.0);
    [2.0 * s * rest, 2.0 * rest - 2.0 * s * p1, -4.0 * p1 - 2.0 * s * p2]
}

/// The radial profile `χ₀` and its first three derivatives at `s ≥ 0`:
/// `χ₀ = s²` on `[0,1]`, `χ₀'(s) = 2s(1 − ψ(s−1))` with the `C^∞` step
/// `ψ` on `[1,2]`, constant beyond. It is `C^∞`, with `χ₀' ≤ 2s`,
/// `χ₀' = 0` for `s ≥ 2` and `χ₀'' ≤ 2` everywhere. The value on `[1,2]`
/// is integrated numerically (only derivatives enter the virial terms).
pub fn chi0(s: f64) -> [f64; 4] {
    let s = s.abs();
    let [d1, d2, d3] = chi0_derivatives(s);
    if s <= 1.0 {
        return [s * s, d1, d2, d3];
    }
    // composite Simpson on [1, min(s, 2)]; the integrand is smooth
    const PANELS: usize = 256;
    let b = s.min(2.0);
    let h = (b - 1.0) / PANELS as f64;
    let f = |x: f64| chi0_derivatives(x)[0];
    let mut acc = f(1.0) + f(b);
    for k in 1..PANELS {
        acc += f(1.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    [1.0 + acc * h / 3.0, d1, d2, d3]
}

/// `J` and the right-hand side of its evolution law,
/// `4Σ∫∂_k∂_mχ Re(∂_kū_j ∂_m u_j) − ∫Δ²χ Σ|u_j|² + (2(p−2)/p)∫Δχ g(u)`,
/// for `χ(x) = R²χ₀(|x|/R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirialValues {
    pub j: f64,
    pub j_prime: f64,
}

/// Evaluate the localized virial quantities on a gridded pair. The
/// `Δ²χ` term is integrated by parts (`−∫Δ²χ ρ = ∫∇Δχ·∇ρ`) because `χ₀`
/// is only `C²`.
pub fn localized_virial(spectral: &mut Spectral, gform: &GForm, u: &FieldPair, radius: f64) -> Result<VirialValues> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Validation(format!("virial radius {radius} must be positive")));
    }
    let grid = spectral.grid;
    let d = grid.d;
    let n = gform.gauge();
    let p = gform.degree();
    let grads: Vec<[Vec<C64>; 2]> =
        (0..d).map(|k| [spectral.derivative(&u[0], k), spectral.derivative(&u[1], k)]).collect();
    let (mut j_val, mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0, 0.0);
    for idx in 0..grid.len() {
        let x = grid.coords(idx);
        let r = grid.radius(idx);
        let s = r / radius;
        let [c1, c2, c3] = chi0_derivatives(s);
        let (f1, f2, f3) = (radius * c1, c2, c3 / radius);
        let dm = d as f64 - 1.0;
        let unit = if r > 0.0 { [x[0] / r, x[1] / r] } else { [0.0, 0.0] };
        // ∇χ, Hessian, Δχ and ∇Δχ of the radial weight
        let (hess, lap, dlap) = if s <= 1.0 {
            ([[2.0, 0.0], [0.0, 2.0]], 2.0 * d as f64, 0.0)
        } else {
            let tang = f1 / r;
            let mut h = [[0.0; 2]; 2];
            for (a, row) in h.iter_mut().enumerate().take(d) {
                for (b, e) in row.iter_mut().enumerate().take(d) {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    *e = f2 * unit[a] * unit[b] + tang * (delta - unit[a] * unit[b]);
                }
            }
            (h, f2 + dm * tang, f3 + dm * (f2 / r - f1 / (r * r)))
        };
        for jj in 0..2 {
            let uj = u[jj][idx];
            for k in 0..d {
                let dk = grads[k][jj][idx];
                j_val += 2.0 * f1 * unit[k] * (uj.conj() * dk).im / n[jj] as f64;
                t2 += dlap * unit[k] * 2.0 * (uj.conj() * dk).re;
                for m in 0..d {
                    t1 += 4.0 * hess[k][m] * (dk.conj() * grads[m][jj][idx]).re;
                }
            }
        }
        t3 += 2.0 * (p - 2.0) / p * lap * gform.eval(&[u[0][idx], u[1][idx]]);
    }
    let dv = grid.cell_volume();
    Ok(VirialValues { j: j_val * dv, j_prime: (t1 + t2 + t3) * dv })
}

// ---------------------------------------------------------------------------
// Exact solutions

/// The standing wave `(e^{i n₁ωt}φ₁, e^{i n₂ωt}φ₂)` sampled on `grid`.
pub fn standing_wave_solution(profile: &VectorProfile, n: [u32; 2], t: f64, grid: &PeriodicGrid) -> FieldState {
    let mut u = grid.sample_profile(profile);
    for (j, v) in u.iter_mut().enumerate() {
        let phase = C64::from_polar(1.0, n[j] as f64 * profile.omega * t);
        v.iter_mut().for_each(|c| *c *= phase);
    }
    FieldState { grid: *grid, u, t }
}

/// Pseudo-conformal image of `e^{iωt}Φ`:
/// `v(t,x) = ℓ^{−d/2} e^{iωt/ℓ} Φ(x/ℓ) e^{−i|x|²/(4(b²−t))}`, `ℓ = 1 − t/b²`,
/// which blows up at `t = b²`. Mass-critical `p = 2 + 4/d`, `n = (1,1)` only.
pub fn pseudo_conformal_blowup(
    profile: &VectorProfile,
    n: [u32; 2],
    b: f64,
    t: f64,
    grid: &PeriodicGrid,
) -> Result<FieldState> {
    let d = grid.d as f64;
    if (profile.p() - (2.0 + 4.0 / d)).abs() > 1e-12 || n != [1, 1] {
        return Err(Error::Validation("pseudo-conformal transform needs p = 2 + 4/d and n = (1,1)".into()));
    }
    if !(b > 0.0) || t >= b * b {
        return Err(Error::Validation(format!("pseudo-conformal solution needs t < b² (t = {t}, b = {b})")));
    }
    let ell = 1.0 - t / (b * b);
    let amp = ell.powf(-d / 2.0);
    let phase_t = profile.omega * t / ell;
    let u = grid.sample(|x| {
        let r = (x[0] - profile.shift[0]).hypot(x[1] - profile.shift[1]);
        let q = profile.profile.eval(r / ell) * amp;
        let ph = C64::from_polar(1.0, phase_t - r * r / (4.0 * (b * b - t)));
        [profile.w[0] * q * ph, profile.w[1] * q * ph]
    });
    Ok(FieldState { grid: *grid, u, t })
}

// ---------------------------------------------------------------------------
// Orbit distance

/// Precomputed spectra of the ground-state generators for orbit distances.
#[derive(Clone, Debug)]
pub struct OrbitReference {
    hats: Vec<[Vec<C64>; 2]>,
    norms_sq: Vec<f64>,
    /// `‖Φ‖_{H¹}` of the first generator (normalization of the distance).
    pub scale: f64,
}

fn h1_weight(grid: &PeriodicGrid, i: usize) -> f64 {
    1.0 + grid.wave_number_sq(i)
}

impl OrbitReference {
    pub fn new(spectral: &mut Spectral, generators: &[FieldPair]) -> Self {
        let grid = spectral.grid;
        let scale_sq = |hat: &[Vec<C64>; 2]| {
            grid.cell_volume() / grid.len() as f64
                * hat.iter().flat_map(|v| v.iter().enumerate()).map(|(i, c)| h1_weight(&grid, i) * c.norm_sqr()).sum::<f64>()
        };
        let hats: Vec<[Vec<C64>; 2]> = generators
            .iter()
            .map(|g| {
                let mut h = g.clone();
                spectral.forward(&mut h[0]);
                spectral.forward(&mut h[1]);
                h
            })
            .collect();
        let norms_sq: Vec<f64> = hats.iter().map(scale_sq).collect();
        let scale = norms_sq[0].sqrt();
        OrbitReference { hats, norms_sq, scale }
    }

    /// `inf_{y, θ₁, θ₂} ‖u − (e^{iθ₁}φ₁(·−y), e^{iθ₂}φ₂(·−y))‖_{H¹} / ‖Φ‖_{H¹}`,
    /// minimized over the generators: the best grid shift comes from an
    /// FFT cross-correlation, is refined continuously through the Fourier
    /// interpolant, and the phases are optimal in closed form.
    pub fn distance(&self, spectral: &mut Spectral, u: &FieldPair) -> f64 {
        let grid = spectral.grid;
        let dv = grid.cell_volume();
        let nn = grid.len();
        let mut uh = u.clone();
        spectral.forward(&mut uh[0]);
        spectral.forward(&mut uh[1]);
        let u_norm_sq = dv / nn as f64
            * uh.iter().flat_map(|v| v.iter().enumerate()).map(|(i, c)| h1_weight(&grid, i) * c.norm_sqr()).sum::<f64>();
        let mut best = f64::INFINITY;
        for (hat, phi_sq) in self.hats.iter().zip(&self.norms_sq) {
            // products X_j(ξ) = (1+|ξ|²) conj(φ̂_j) û_j
            let prods: [Vec<C64>; 2] = [0, 1].map(|j| {
                (0..nn).map(|i| hat[j][i].conj() * uh[j][i] * h1_weight(&grid, i)).collect::<Vec<_>>()
            });
            let mut corr = prods.clone();
            spectral.inverse(&mut corr[0]);
            spectral.inverse(&mut corr[1]);
            let (m_best, _) = (0..nn)
                .map(|m| (m, corr[0][m].norm() + corr[1][m].norm()))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let h = grid.spacing();
            let wrap = |m: usize| if m < grid.n / 2 { m as f64 * h } else { (m as f64 - grid.n as f64) * h };
            let y0 = match grid.d {
                1 => vec![wrap(m_best)],
                _ => vec![wrap(m_best % grid.n), wrap(m_best / grid.n)],
            };
            let overlap = |y: &[f64]| -> f64 {
                let mut c = [C64::new(0.0, 0.0); 2];
                for i in 0..nn {
                    let k = grid.wave_vector(i);
                    let arg = k[0] * y[0] + if grid.d == 2 { k[1] * y[1] } else { 0.0 };
                    let e = C64::from_polar(1.0, arg);
                    c[0] += prods[0][i] * e;
                    c[1] += prods[1][i] * e;
                }
                (c[0].norm() + c[1].norm()) * dv / nn as f64
            };
            let refined = nelder_mead(|y| -overlap(y), &y0, 0.5 * h, 1e-9, 0.0, 400);
            let s = -refined.f;
            best = best.min((u_norm_sq + phi_sq - 2.0 * s).max(0.0).sqrt());
        }
        best / self.scale
    }
}

// ---------------------------------------------------------------------------
// Diagnostics and experiments

/// One row of the diagnostic time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// First component of the momentum.
    pub momentum: f64,
    pub kinetic: f64,
    pub virial: f64,
    /// Localized virial `J` (NaN when not requested).
    pub j: f64,
    /// Relative `H¹` distance to the ground-state orbit (NaN when not requested).
    pub orbit_dist: f64,
    /// Kinetic energy of a reference exact solution (NaN when absent).
    pub reference_kinetic: f64,
    pub peak: f64,
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    /// The peak grew 50-fold or more than 10% of `H` moved into the upper
    /// half of the spectrum. A numerical signature, not a proof of blowup.
    BlowupSignature { t: f64, reason: String },
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
}

impl Diagnostics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,M,E,P,H,V,J,orbit_dist,H_ref\n");
        for r in &self.samples {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.t, r.mass, r.energy, r.momentum, r.kinetic, r.virial, r.j, r.orbit_dist, r.reference_kinetic
            );
        }
        s
    }

    /// `max_t |M(t) − M(0)| / M(0)`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.samples[0].mass;
        self.samples.iter().map(|r| (r.mass - m0).abs() / m0).fold(0.0, f64::max)
    }

    /// `max_t |E(t) − E(0)| / (|E(0)| + 1)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        self.samples.iter().map(|r| (r.energy - e0).abs() / (e0.abs() + 1.0)).fold(0.0, f64::max)
    }

    pub fn max_orbit_distance(&self) -> f64 {
        self.samples.iter().map(|r| r.orbit_dist).fold(0.0, f64::max)
    }
}

/// Run parameters.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub t_end: f64,
    /// Record a sample every this many steps.
    pub sample_every: usize,
    /// Frequency used for the action-type functionals.
    pub omega: f64,
    /// Radius `R` of the localized virial weight, if `J` is wanted.
    pub virial_radius: Option<f64>,
    /// Stop on the blowup signature and shrink `dt ∝ peak⁻²` as the field
    /// concentrates.
    pub watch_blowup: bool,
}

/// Extra per-sample hooks: the orbit reference and an exact reference
/// solution whose kinetic energy is recorded.
#[derive(Default)]
pub struct Observers<'a> {
    pub orbit: Option<&'a OrbitReference>,
    pub reference: Option<&'a dyn Fn(f64) -> Result<FieldState>>,
}

fn record(
    it: &mut Integrator,
    state: &FieldState,
    cfg: &RunConfig,
    obs: &Observers<'_>,
) -> Result<Sample> {
    let f = it.functionals(state, cfg.omega);
    let j = match cfg.virial_radius {
        Some(r) => localized_virial(&mut it.spectral, &it.gform, &state.u, r)?.j,
        None => f64::NAN,
    };
    let orbit_dist = obs.orbit.map_or(f64::NAN, |o| o.distance(&mut it.spectral, &state.u));
    let reference_kinetic = match obs.reference {
        Some(exact) => kinetic(&mut it.spectral, &exact(state.t)?.u),
        None => f64::NAN,
    };
    Ok(Sample {
        t: state.t,
        mass: f.mass,
        energy: f.energy,
        momentum: f.momentum.map_or(0.0, |p| p[0]),
        kinetic: f.kinetic,
        virial: f.virial,
        j,
        orbit_dist,
        reference_kinetic,
        peak: state.peak(),
    })
}

/// Integrate `state` to `cfg.t_end`, sampling diagnostics.
pub fn evolve(it: &mut Integrator, state: &mut FieldState, cfg: &RunConfig, obs: &Observers<'_>) -> Result<Diagnostics> {
    let dt0 = it.dt();
    let peak0 = state.peak();
    let mut samples = vec![record(it, state, cfg, obs)?];
    let mut steps = 0usize;
    while state.t < cfg.t_end - 1e-9 * dt0 {
        let remaining = cfg.t_end - state.t;
        if remaining < it.dt() {
            it.set_dt(remaining)?;
        }
        it.step(state)?;
        steps += 1;
        if steps % cfg.sample_every == 0 || state.t >= cfg.t_end - 1e-9 * dt0 {
            samples.push(record(it, state, cfg, obs)?);
        }
        if cfg.watch_blowup {
            let peak = state.peak();
            let fraction = it.spectral.high_mode_fraction(&state.u);
            if peak >= 50.0 * peak0 || fraction > 0.1 {
                if samples.last().map(|s| s.t) != Some(state.t) {
                    samples.push(record(it, state, cfg, obs)?);
                }
                let reason = if peak >= 50.0 * peak0 {
                    format!("peak amplitude grew {:.1}-fold", peak / peak0)
                } else {
                    format!("{:.1}% of H above half the Nyquist wavenumber", 100.0 * fraction)
                };
                it.set_dt(dt0)?;
                return Ok(Diagnostics { samples, outcome: Outcome::BlowupSignature { t: state.t, reason } });
            }
            let target = dt0 * (peak0 / peak).powi(2).min(1.0);
            if target < 0.75 * it.dt() {
                it.set_dt(target)?;
            }
        }
    }
    it.set_dt(dt0)?;
    Ok(Diagnostics { samples, outcome: Outcome::Completed })
}

/// Ground states of `spec` at frequency `ω` with the default radial grid.
pub fn ground_states(spec: &SystemSpec, omega: f64) -> Result<Vec<VectorProfile>> {
    let gform = spec
        .gform
        .as_ref()
        .ok_or_else(|| Error::Validation("system has no potential g".into()))?;
    let base = solve_q(spec.d, spec.p, &GridParams::default())?;
    build_ground_states(gform, omega, &base)
}

/// Soliton propagation: evolve the first ground state and compare with the
/// exact standing wave. Returns the diagnostics and the final sup error.
pub fn soliton_experiment(
    spec: &SystemSpec,
    grid: PeriodicGrid,
    omega: f64,
    dt: f64,
    cfg: &RunConfig,
) -> Result<(Diagnostics, f64)> {
    let vp = ground_states(spec, omega)?.swap_remove(0);
    let mut state = standing_wave_solution(&vp, spec.n, 0.0, &grid);
    let mut it = Integrator::new(spec, grid, dt)?;
    let diag = evolve(&mut it, &mut state, cfg, &Observers::default())?;
    let exact = standing_wave_solution(&vp, spec.n, state.t, &grid);
    Ok((diag, state.sup_distance(&exact.u)))
}

/// Perturbation of the ground state in the stability experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// `Φ(1 + ε)`.
    Scale(f64),
    /// `Φ + εψ` with a seeded band-limited field `ψ` normalized to
    /// `‖ψ‖_{H¹} = ‖Φ‖_{H¹}`.
    Random { eps: f64, seed: u64 },
}

/// Orbital-stability experiment: evolve a perturbed ground state and
/// record its relative `H¹` distance to the ground-state orbit.
pub fn stability_experiment(
    spec: &SystemSpec,
    grid: PeriodicGrid,
    omega: f64,
    perturbation: Perturbation,
    dt: f64,
    cfg: &RunConfig,
) -> Result<Diagnostics> {
    let profiles = ground_states(spec, omega)?;
    let generators: Vec<FieldPair> = profiles.iter().map(|vp| grid.sample_profile(vp)).collect();
    let mut it = Integrator::new(spec, grid, dt)?;
    let orbit = OrbitReference::new(it.spectral(), &generators);
    let mut u = generators[0].clone();
    match perturbation {
        Perturbation::Scale(eps) => u.iter_mut().flatten().for_each(|c| *c *= 1.0 + eps),
        Perturbation::Random { eps, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = band_limited_field(it.spectral(), &mut rng, 2.0);
            let h1_sq = 2.0 * (mass(&grid, &psi) + kinetic(it.spectral(), &psi));
            let s = eps * orbit.scale / h1_sq.sqrt();
            for j in 0..2 {
                u[j].iter_mut().zip(&psi[j]).for_each(|(a, b)| *a += b * s);
            }
        }
    }
    let mut state = FieldState::new(grid, u);
    evolve(&mut it, &mut state, cfg, &Observers { orbit: Some(&orbit), reference: None })
}

/// Mass-critical blowup experiment from `cΦ` (radial, `E < 0` for `c > 1`).
pub fn blowup_experiment(
    spec: &SystemSpec,
    grid: PeriodicGrid,
    omega: f64,
    amplitude: f64,
    dt: f64,
    cfg: &RunConfig,
) -> Result<Diagnostics> {
    let vp = ground_states(spec, omega)?.swap_remove(0);
    let mut u = grid.sample_profile(&vp);
    u.iter_mut().flatten().for_each(|c| *c *= amplitude);
    let mut state = FieldState::new(grid, u);
    let mut it = Integrator::new(spec, grid, dt)?;
    let cfg = RunConfig { watch_blowup: true, ..cfg.clone() };
    evolve(&mut it, &mut state, &cfg, &Observers::default())
}

/// Evolve the pseudo-conformal datum `v(0)` and record `H` of the exact
/// `v(t)` alongside the simulated one.
pub fn pseudo_conformal_experiment(
    spec: &SystemSpec,
    grid: PeriodicGrid,
    omega: f64,
    b: f64,
    dt: f64,
    cfg: &RunConfig,
) -> Result<Diagnostics> {
    let vp = ground_states(spec, omega)?.swap_remove(0);
    let mut state = pseudo_conformal_blowup(&vp, spec.n, b, 0.0, &grid)?;
    let mut it = Integrator::new(spec, grid, dt)?;
    let n = spec.n;
    let exact = move |t: f64| pseudo_conformal_blowup(&vp, n, b, t, &grid);
    evolve(&mut it, &mut state, cfg, &Observers { orbit: None, reference: Some(&exact) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::system_model::StandardForm;

    fn scalar_spec(d: usize) -> SystemSpec {
        SystemSpec::standard(StandardForm::Nls1 { alpha: 0.0, beta: -1.0 }, d).unwrap()
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = PeriodicGrid::new(1, 64, 10.0).unwrap();
        let mut it = Integrator::new(&scalar_spec(1), grid, 1e-2).unwrap();
        let mut s = FieldState::new(grid, grid.zeros());
        it.advance(&mut s, 10).unwrap();
        assert_eq!(s.peak(), 0.0);
    }

    #[test]
    fn free_evolution_keeps_fourier_moduli() {
        let grid = PeriodicGrid::new(1, 64, 10.0).unwrap();
        let spec = SystemSpec::standard(StandardForm::Nls1 { alpha: 0.0, beta: 0.0 }, 1).unwrap();
        let mut it = Integrator::new(&spec, grid, 0.05).unwrap();
        let u0 = grid.sample(|x| [C64::new((-x[0] * x[0]).exp(), 0.0), C64::new(0.0, (-(x[0] - 1.0).powi(2)).exp())]);
        let mut s = FieldState::new(grid, u0.clone());
        it.advance(&mut s, 40).unwrap();
        let mut sp = Spectral::new(grid);
        for j in 0..2 {
            let (mut a, mut b) = (u0[j].clone(), s.u[j].clone());
            sp.forward(&mut a);
            sp.forward(&mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x.norm() - y.norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sech_soliton() {
        // e^{it}√2 sech x in the second component; at dt = 1e-3 the Strang
        // splitting error after T = 5 is about 5e-6, so 1e-6 needs dt = 4e-4
        let grid = PeriodicGrid::new(1, 1024, 20.0).unwrap();
        let spec = scalar_spec(1);
        let mut it = Integrator::new(&spec, grid, 4e-4).unwrap();
        let exact = |t: f64| grid.sample(|x| [C64::new(0.0, 0.0), C64::from_polar(2f64.sqrt() / x[0].cosh(), t)]);
        let mut s = FieldState::new(grid, exact(0.0));
        it.advance(&mut s, 12500).unwrap();
        let err = s.sup_distance(&exact(s.t));
        assert!(err <= 1e-6, "error {err}");
    }

    #[test]
    fn strang_is_second_order() {
        let grid = PeriodicGrid::new(1, 512, 20.0).unwrap();
        let spec = scalar_spec(1);
        let exact = |t: f64| grid.sample(|x| [C64::new(0.0, 0.0), C64::from_polar(2f64.sqrt() / x[0].cosh(), t)]);
        let err = |dt: f64| {
            let mut it = Integrator::new(&spec, grid, dt).unwrap();
            let mut s = FieldState::new(grid, exact(0.0));
            it.advance(&mut s, (1.0 / dt).round() as usize).unwrap();
            s.sup_distance(&exact(s.t))
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn general_kick_matches_diagonal_kick() {
        // same system run through both nonlinear paths
        let grid = PeriodicGrid::new(1, 128, 10.0).unwrap();
        let spec = SystemSpec::standard(StandardForm::Nls2 { alpha: 1.0, beta: 1.0, sigma: -1.0 }, 1).unwrap();
        let mut diag = Integrator::new(&spec, grid, 1e-3).unwrap();
        let mut gen = diag.clone();
        gen.nonlinear = Nonlinear::General;
        let u0 = grid.sample(|x| [C64::new(1.0 / x[0].cosh(), 0.0), C64::new(0.0, 0.7 / (x[0] - 0.5).cosh())]);
        let (mut a, mut b) = (FieldState::new(grid, u0.clone()), FieldState::new(grid, u0));
        diag.advance(&mut a, 200).unwrap();
        gen.advance(&mut b, 200).unwrap();
        assert!(a.sup_distance(&b.u) < 1e-10);
    }

    #[test]
    fn chi0_constraints() {
        let eps = 1e-7;
        for s in [1.0, 2.0] {
            let (l, r) = (chi0(s - eps), chi0(s + eps));
            for k in 0..4 {
                assert!((l[k] - r[k]).abs() < 1e-5, "χ₀^({k}) jumps at {s}");
            }
        }
        // each derivative matches a central difference of the one below
        for s in [1.2, 1.5, 1.8] {
            let (l, r, c) = (chi0(s - eps), chi0(s + eps), chi0(s));
            for k in 0..3 {
                assert!(((r[k] - l[k]) / (2.0 * eps) - c[k + 1]).abs() < 1e-5, "order {} at {s}", k + 1);
            }
        }
        for i in 0..=3000 {
            let s = i as f64 * 1e-3;
            let [_, d1, d2, _] = chi0(s);
            assert!(d2 <= 2.0 + 1e-12);
            if (1.0..=2.0).contains(&s) {
                assert!(d1 <= 2.0 * s + 1e-12);
            }
            if s >= 2.0 {
                assert_eq!(d1, 0.0);
            }
        }
    }

    #[test]
    fn virial_of_real_field_and_unlocalized_limit() {
        let grid = PeriodicGrid::new(2, 128, 16.0).unwrap();
        let mut sp = Spectral::new(grid);
        let g = GForm::standard(StandardForm::Nls1 { alpha: 0.0, beta: -1.0 });
        let real = grid.sample(|x| [C64::new(0.0, 0.0), C64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)]);
        assert!(localized_virial(&mut sp, &g, &real, 4.0).unwrap().j.abs() < 1e-14);
        // compactly concentrated field with a phase: χ = |x|² on its support
        let u = grid.sample(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [C64::new(0.0, 0.0), C64::from_polar(1.5 * (-r2).exp(), 0.3 * x[0] + 0.2 * r2)]
        });
        let f = field_functionals(&mut sp, &g, &u, 1.0);
        let v = localized_virial(&mut sp, &g, &u, 7.0).unwrap();
        assert!((v.j_prime - 8.0 * f.virial).abs() < 1e-8 * (1.0 + f.virial.abs()), "{} vs {}", v.j_prime, 8.0 * f.virial);
        assert!(localized_virial(&mut sp, &g, &u, 0.0).is_err());
    }

    #[test]
    fn standing_wave_phases() {
        let spec = SystemSpec::standard(StandardForm::Co { kappa: 2.0, gamma: 0.5 }, 1).unwrap();
        let vp = ground_states(&spec, 1.0).unwrap().swap_remove(0);
        let grid = PeriodicGrid::new(1, 256, 20.0).unwrap();
        let s0 = standing_wave_solution(&vp, spec.n, 0.0, &grid);
        let s1 = standing_wave_solution(&vp, spec.n, 0.3, &grid);
        let i = grid.n / 2;
        for j in 0..2 {
            if s0.u[j][i].norm() > 1e-3 {
                let ratio = s1.u[j][i] / s0.u[j][i];
                assert!((ratio.arg() - 0.3 * spec.n[j] as f64).abs() < 1e-12);
            }
        }
        assert_eq!(s0.u, grid.sample_profile(&vp));
    }

    #[test]
    fn pseudo_conformal_initial_datum() {
        let spec = SystemSpec::standard(StandardForm::Nls1 { alpha: 0.0, beta: -1.0 }, 2).unwrap();
        let vp = ground_states(&spec, 1.0).unwrap().swap_remove(0);
        let grid = PeriodicGrid::new(2, 64, 12.0).unwrap();
        let phi = grid.sample_profile(&vp);
        let v0 = pseudo_conformal_blowup(&vp, [1, 1], 4.0, 0.0, &grid).unwrap();
        for idx in 0..grid.len() {
            let r2 = grid.radius(idx).powi(2);
            let want = phi[1][idx] * C64::from_polar(1.0, -r2 / 64.0);
            assert!((v0.u[1][idx] - want).norm() < 1e-14);
        }
        let mut sp = Spectral::new(grid);
        let mut last = f64::INFINITY;
        for b in [4.0, 8.0, 16.0] {
            let v = pseudo_conformal_blowup(&vp, [1, 1], b, 0.0, &grid).unwrap();
            let diff: FieldPair = [0, 1].map(|j| v.u[j].iter().zip(&phi[j]).map(|(a, c)| a - c).collect());
            let dist = (2.0 * (mass(&grid, &diff) + kinetic(&mut sp, &diff))).sqrt();
            assert!(dist < last);
            last = dist;
        }
        assert!(pseudo_conformal_blowup(&vp, [1, 1], 2.0, 4.0, &grid).is_err());
    }

    #[test]
    fn orbit_distance_of_translated_rotated_ground_state() {
        let spec = SystemSpec::standard(StandardForm::Nls2 { alpha: 1.0, beta: 1.0, sigma: -1.0 }, 1).unwrap();
        let grid = PeriodicGrid::new(1, 512, 20.0).unwrap();
        let vps = ground_states(&spec, 1.0).unwrap();
        let gens: Vec<FieldPair> = vps.iter().map(|v| grid.sample_profile(v)).collect();
        let mut sp = Spectral::new(grid);
        let orbit = OrbitReference::new(&mut sp, &gens);
        let moved = vps[0].clone().translated([1.234, 0.0, 0.0]);
        let mut u = grid.sample_profile(&moved);
        u[0].iter_mut().for_each(|c| *c *= C64::from_polar(1.0, 0.4));
        u[1].iter_mut().for_each(|c| *c *= C64::from_polar(1.0, -1.1));
        assert!(orbit.distance(&mut sp, &u) < 1e-7);
        u[0].iter_mut().for_each(|c| *c *= 1.01);
        u[1].iter_mut().for_each(|c| *c *= 1.01);
        assert!((orbit.distance(&mut sp, &u) - 0.01).abs() < 1e-6);
    }

    #[test]
    fn virial_sign_is_preserved_below_the_well() {
        // d = 1, p = 8 (mass-supercritical), scalar-type g = −|z|⁸
        let g = GForm::custom(8.0, [1, 1], |z| -(z[0].norm_sqr() + z[1].norm_sqr()).powi(4));
        let spec = SystemSpec { lambdas: None, d: 1, p: 8.0, n: [1, 1], gform: Some(g.clone()) };
        let base = solve_q(1, 8.0, &GridParams::default()).unwrap();
        let vp = build_ground_states(&g, 1.0, &base).unwrap().swap_remove(0);
        let grid = PeriodicGrid::new(1, 512, 20.0).unwrap();
        let phi = grid.sample_profile(&vp);
        for c in [0.8_f64, 1.2] {
            // Φ_c = c^{1/2}Φ(c·)
            let uc = grid.sample(|x| {
                let q = vp.profile.eval(c * x[0]) * c.sqrt();
                [vp.w[0] * q, vp.w[1] * q]
            });
            let mut it = Integrator::new(&spec, grid, 2e-4).unwrap();
            let mut s = FieldState::new(grid, uc);
            let sign0 = it.functionals(&s, 1.0).virial.signum();
            for _ in 0..20 {
                it.advance(&mut s, 10).unwrap();
                assert_eq!(it.functionals(&s, 1.0).virial.signum(), sign0);
            }
        }
        let _ = phi;
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mass_is_conserved(alpha in -1.0f64..1.0, beta in -1.0f64..1.0, sigma in prop_oneof![Just(-1.0), Just(1.0)],
                             a in 0.2f64..1.5, shift in -2.0f64..2.0) {
            let grid = PeriodicGrid::new(1, 128, 12.0).unwrap();
            let spec = SystemSpec::standard_unchecked(StandardForm::Nls2 { alpha, beta, sigma }, 1).unwrap();
            let mut it = Integrator::new(&spec, grid, 1e-3).unwrap();
            let u0 = grid.sample(|x| [C64::new(a * (-x[0] * x[0]).exp(), 0.0), C64::from_polar((-(x[0] - shift).powi(2)).exp(), x[0])]);
            let m0 = crate::grid::mass(&grid, &u0);
            let mut s = FieldState::new(grid, u0);
            it.advance(&mut s, 50).unwrap();
            prop_assert!((crate::grid::mass(&grid, &s.u) - m0).abs() <= 1e-12 * m0);
        }
    }
}
