//! Uniform periodic grids on `[−L, L)^d` (`d = 1, 2`), their FFTs, and the
//! variational functionals of gridded field pairs.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::ground_state::{Functionals, VectorProfile};
use crate::system_model::{GForm, Pair, C64};

/// Two complex components sampled on a grid.
pub type FieldPair = [Vec<C64>; 2];

/// A square periodic grid with `n` points per axis on `[−L, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub d: usize,
    pub n: usize,
    /// Half the box width `L`.
    pub half_width: f64,
}

impl PeriodicGrid {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Validation(format!("periodic grids support d = 1, 2, got {d}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Validation(format!("grid size {n} must be a power of two ≥ 4")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Validation(format!("box half-width {half_width} must be positive")));
        }
        Ok(PeriodicGrid { d, n, half_width })
    }

    /// Total number of points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid spacing `2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Position of point `idx`; for `d = 2` the index is `iy·n + ix`.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let x = |i: usize| -self.half_width + i as f64 * h;
        match self.d {
            1 => [x(idx), 0.0],
            _ => [x(idx % self.n), x(idx / self.n)],
        }
    }

    /// `|x|` at point `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.coords(idx);
        x.hypot(y)
    }

    /// Angular wavenumber of FFT bin `m` (the Nyquist bin counts as negative).
    pub fn wavenumber(&self, m: usize) -> f64 {
        let m = if m < self.n / 2 { m as f64 } else { m as f64 - self.n as f64 };
        PI / self.half_width * m
    }

    /// Wave vector of spectral index `idx`.
    pub fn wave_vector(&self, idx: usize) -> [f64; 2] {
        match self.d {
            1 => [self.wavenumber(idx), 0.0],
            _ => [self.wavenumber(idx % self.n), self.wavenumber(idx / self.n)],
        }
    }

    /// `|ξ|²` of spectral index `idx`.
    pub fn wave_number_sq(&self, idx: usize) -> f64 {
        let [a, b] = self.wave_vector(idx);
        a * a + b * b
    }

    /// Largest `|ξ|` resolved along an axis.
    pub fn nyquist(&self) -> f64 {
        PI / self.half_width * (self.n / 2) as f64
    }

    pub fn zeros(&self) -> FieldPair {
        [vec![C64::new(0.0, 0.0); self.len()], vec![C64::new(0.0, 0.0); self.len()]]
    }

    /// Sample `f(x)` at every grid point.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> Pair) -> FieldPair {
        let mut u = self.zeros();
        for idx in 0..self.len() {
            let z = f(self.coords(idx));
            u[0][idx] = z[0];
            u[1][idx] = z[1];
        }
        u
    }

    /// Sample a vector profile `w·Q_{ω,a}(|x − y|)` centred at the origin
    /// (`y` taken from the profile's shift).
    pub fn sample_profile(&self, vp: &VectorProfile) -> FieldPair {
        self.sample(|x| {
            let r = (x[0] - vp.shift[0]).hypot(x[1] - vp.shift[1]);
            let q = vp.profile.eval(r);
            [vp.w[0] * q, vp.w[1] * q]
        })
    }
}

/// Planned forward and inverse FFTs for one grid. The inverse is
/// normalized so that `inverse(forward(u)) = u`.
#[derive(Clone)]
pub struct Spectral {
    pub grid: PeriodicGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n);
        let inv = planner.plan_fft_inverse(grid.n);
        Spectral { grid, fwd, inv, scratch: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    fn transform(&mut self, data: &mut [C64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        // rustfft processes a buffer of several rows chunk by chunk
        plan.process(data);
        if self.grid.d == 2 {
            let n = self.grid.n;
            transpose(data, &mut self.scratch, n);
            plan.process(&mut self.scratch);
            transpose(&self.scratch, data, n);
        }
        if inverse {
            let s = 1.0 / self.grid.len() as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.transform(data, false);
    }

    pub fn inverse(&mut self, data: &mut [C64]) {
        self.transform(data, true);
    }

    /// `∫|∇v|²` by Parseval.
    pub fn gradient_sq(&mut self, v: &[C64]) -> f64 {
        let mut hat = v.to_vec();
        self.forward(&mut hat);
        let n = self.grid.len() as f64;
        let s: f64 = hat.iter().enumerate().map(|(i, c)| self.grid.wave_number_sq(i) * c.norm_sqr()).sum();
        s * self.grid.cell_volume() / n
    }

    /// Spectral partial derivative `∂_{x_axis} v`.
    pub fn derivative(&mut self, v: &[C64], axis: usize) -> Vec<C64> {
        let mut hat = v.to_vec();
        self.forward(&mut hat);
        for (i, c) in hat.iter_mut().enumerate() {
            *c *= C64::new(0.0, self.grid.wave_vector(i)[axis]);
        }
        self.inverse(&mut hat);
        hat
    }

    /// Fraction of `∫|∇v|²` carried by modes with `|ξ|` above half the
    /// Nyquist wavenumber along some axis (a resolution monitor).
    pub fn high_mode_fraction(&mut self, u: &FieldPair) -> f64 {
        let k_half = 0.5 * self.grid.nyquist();
        let (mut hi, mut all) = (0.0, 0.0);
        for v in u {
            let mut hat = v.clone();
            self.forward(&mut hat);
            for (i, c) in hat.iter().enumerate() {
                let [a, b] = self.grid.wave_vector(i);
                let e = (a * a + b * b) * c.norm_sqr();
                all += e;
                if a.abs() > k_half || b.abs() > k_half {
                    hi += e;
                }
            }
        }
        if all > 0.0 {
            hi / all
        } else {
            0.0
        }
    }
}

fn transpose(src: &[C64], dst: &mut [C64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

/// `M(u) = ½Σ‖u_j‖²` by the rectangle rule (spectrally accurate on periodic grids).
pub fn mass(grid: &PeriodicGrid, u: &FieldPair) -> f64 {
    0.5 * grid.cell_volume() * u.iter().flat_map(|v| v.iter()).map(|c| c.norm_sqr()).sum::<f64>()
}

/// `H(u) = ½Σ‖∇u_j‖²` by Parseval.
pub fn kinetic(spec: &mut Spectral, u: &FieldPair) -> f64 {
    0.5 * (spec.gradient_sq(&u[0]) + spec.gradient_sq(&u[1]))
}

/// `G(u) = (1/p)∫g(u)`.
pub fn potential(grid: &PeriodicGrid, gform: &GForm, u: &FieldPair) -> f64 {
    let s: f64 = (0..grid.len()).map(|i| gform.eval(&[u[0][i], u[1][i]])).sum();
    s * grid.cell_volume() / gform.degree()
}

/// Momentum `P = Σ_j n_j^{−1} Im∫ ū_j ∇u_j`.
pub fn momentum(spec: &mut Spectral, u: &FieldPair, n: [u32; 2]) -> [f64; 2] {
    let dv = spec.grid.cell_volume();
    let mut p = [0.0; 2];
    for axis in 0..spec.grid.d {
        for j in 0..2 {
            let du = spec.derivative(&u[j], axis);
            let s: f64 = u[j].iter().zip(&du).map(|(a, b)| (a.conj() * b).im).sum();
            p[axis] += s * dv / n[j] as f64;
        }
    }
    p
}

/// All functionals of a gridded pair at frequency `ω`.
pub fn field_functionals(spec: &mut Spectral, gform: &GForm, u: &FieldPair, omega: f64) -> Functionals {
    let grid = spec.grid;
    let m = mass(&grid, u);
    let h = kinetic(spec, u);
    let g = potential(&grid, gform, u);
    let mut f = Functionals::from_parts(m, h, g, omega, grid.d, gform.degree());
    f.momentum = Some(momentum(spec, u, gform.gauge()));
    f
}

/// A random band-limited Gaussian field: independent standard complex
/// normal Fourier coefficients on `|ξ| ≤ k_max` (zero above), each component
/// scaled by an independent random factor so that one component may dominate.
pub fn band_limited_field(spec: &mut Spectral, rng: &mut impl Rng, k_max: f64) -> FieldPair {
    let grid = spec.grid;
    let mut u = grid.zeros();
    for v in u.iter_mut() {
        let weight: f64 = rng.random_range(0.0..1.0);
        for (i, c) in v.iter_mut().enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if grid.wave_number_sq(i) <= k_max * k_max {
                *c = C64::new(re, im) * weight;
            }
        }
        spec.inverse(v);
    }
    u
}
