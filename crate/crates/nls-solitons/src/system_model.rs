//! Two-component cubic NLS systems: the twelve-coefficient λ encoding, the
//! homogeneous nonlinearity `g`, its Wirtinger-derivative nonlinearities
//! `F_j = (2/p) ∂_{z̄_j} g`, the matrix–vector `(C, v)` encoding with its
//! conserved-energy criterion, and real changes of variables `ũ = M u`.
//!
//! The λ ordering per equation is
//! `[|u₁|²u₁, |u₁|²u₂, u₁²ū₂, |u₂|²u₁, u₂²ū₁, |u₂|²u₂]`; λ₁…λ₆ belong to the
//! `u₁` equation and λ₇…λ₁₂ to the `u₂` equation, i.e. the system reads
//! `(i∂_t + Δ)u_j = F_j(u)` with `F_j` the corresponding cubic.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_rational::BigRational;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{nullspace3, Field};

/// Complex double.
pub type C64 = Complex<f64>;
/// A point of ℂ².
pub type Pair = [C64; 2];

/// Euclidean norm of a pair.
pub fn pair_norm(z: &Pair) -> f64 {
    (z[0].norm_sqr() + z[1].norm_sqr()).sqrt()
}

/// Evaluate the six cubic monomials (in λ order) at `z`.
pub fn monomials(z: &Pair) -> [C64; 6] {
    let (z1, z2) = (z[0], z[1]);
    let (c1, c2) = (z1.conj(), z2.conj());
    [
        z1 * z1 * c1,
        z1 * z2 * c1,
        z1 * z1 * c2,
        z1 * z2 * c2,
        z2 * z2 * c1,
        z2 * z2 * c2,
    ]
}

/// Evaluate `(F₁, F₂)` of a λ-given cubic system.
pub fn lambda_rhs(lambdas: &[f64; 12], z: &Pair) -> Pair {
    let m = monomials(z);
    let mut f = [C64::new(0.0, 0.0); 2];
    for (j, fj) in f.iter_mut().enumerate() {
        for k in 0..6 {
            *fj += m[k] * lambdas[6 * j + k];
        }
    }
    f
}

/// The five standard forms and the quadratic Colin–Ohta system, with their
/// parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StandardForm {
    Nls1 { alpha: f64, beta: f64 },
    Nls2 { alpha: f64, beta: f64, sigma: f64 },
    Nls3 { alpha1: f64, alpha2: f64, r: f64 },
    Nls4 { alpha1: f64, alpha2: f64, alpha3: f64, r: f64 },
    Nls5 { alpha1: f64, alpha2: f64, alpha3: f64, r: f64, eta: f64 },
    /// `g = −κ|z₁|³ − |z₂|³ − (3γ/2) Re(z̄₁² z₂)`, `p = 3`, gauge `n = (1,2)`.
    Co { kappa: f64, gamma: f64 },
}

impl StandardForm {
    /// Tag name as used in system files and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            StandardForm::Nls1 { .. } => "NLS1",
            StandardForm::Nls2 { .. } => "NLS2",
            StandardForm::Nls3 { .. } => "NLS3",
            StandardForm::Nls4 { .. } => "NLS4",
            StandardForm::Nls5 { .. } => "NLS5",
            StandardForm::Co { .. } => "CO",
        }
    }

    /// Parameters as `(name, value)` pairs in a fixed order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            StandardForm::Nls1 { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
            StandardForm::Nls2 { alpha, beta, sigma } => {
                vec![("alpha", alpha), ("beta", beta), ("sigma", sigma)]
            }
            StandardForm::Nls3 { alpha1, alpha2, r } => {
                vec![("alpha1", alpha1), ("alpha2", alpha2), ("r", r)]
            }
            StandardForm::Nls4 { alpha1, alpha2, alpha3, r } => vec![
                ("alpha1", alpha1),
                ("alpha2", alpha2),
                ("alpha3", alpha3),
                ("r", r),
            ],
            StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta } => vec![
                ("alpha1", alpha1),
                ("alpha2", alpha2),
                ("alpha3", alpha3),
                ("r", r),
                ("eta", eta),
            ],
            StandardForm::Co { kappa, gamma } => vec![("kappa", kappa), ("gamma", gamma)],
        }
    }

    /// Build a form from its tag and a parameter map. Every parameter of the
    /// tag is required and unknown parameters are rejected.
    pub fn from_params(tag: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let expected: &[&str] = match tag.to_ascii_uppercase().as_str() {
            "NLS1" => &["alpha", "beta"],
            "NLS2" => &["alpha", "beta", "sigma"],
            "NLS3" => &["alpha1", "alpha2", "r"],
            "NLS4" => &["alpha1", "alpha2", "alpha3", "r"],
            "NLS5" => &["alpha1", "alpha2", "alpha3", "r", "eta"],
            "CO" => &["kappa", "gamma"],
            other => return Err(Error::Validation(format!("unknown standard form '{other}'"))),
        };
        for key in params.keys() {
            if !expected.contains(&key.as_str()) {
                return Err(Error::Validation(format!("unknown parameter '{key}' for {tag}")));
            }
        }
        let get = |k: &str| -> Result<f64> {
            let v = *params
                .get(k)
                .ok_or_else(|| Error::Validation(format!("missing parameter '{k}' for {tag}")))?;
            if !v.is_finite() {
                return Err(Error::Validation(format!("parameter '{k}' is not finite")));
            }
            Ok(v)
        };
        Ok(match tag.to_ascii_uppercase().as_str() {
            "NLS1" => StandardForm::Nls1 { alpha: get("alpha")?, beta: get("beta")? },
            "NLS2" => StandardForm::Nls2 {
                alpha: get("alpha")?,
                beta: get("beta")?,
                sigma: get("sigma")?,
            },
            "NLS3" => StandardForm::Nls3 { alpha1: get("alpha1")?, alpha2: get("alpha2")?, r: get("r")? },
            "NLS4" => StandardForm::Nls4 {
                alpha1: get("alpha1")?,
                alpha2: get("alpha2")?,
                alpha3: get("alpha3")?,
                r: get("r")?,
            },
            "NLS5" => StandardForm::Nls5 {
                alpha1: get("alpha1")?,
                alpha2: get("alpha2")?,
                alpha3: get("alpha3")?,
                r: get("r")?,
                eta: get("eta")?,
            },
            _ => StandardForm::Co { kappa: get("kappa")?, gamma: get("gamma")? },
        })
    }

    /// Check the parameter constraints under which the standard form is
    /// stated (normalizations to `1e-9`).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Validation(format!("{}: {msg}", self.name())));
        let unit = |s: f64| (s - 1.0).abs() <= 1e-9;
        match *self {
            StandardForm::Nls1 { alpha, beta } => {
                let ok = |x: f64| x == -1.0 || x == 0.0 || x == 1.0;
                if !ok(alpha) || !ok(beta) {
                    return fail("alpha, beta must lie in {-1, 0, 1}");
                }
                if alpha < beta {
                    return fail("requires alpha >= beta");
                }
            }
            StandardForm::Nls2 { alpha, beta, sigma } => {
                if alpha < beta {
                    return fail("requires alpha >= beta");
                }
                if sigma != 1.0 && sigma != -1.0 {
                    return fail("sigma must be +1 or -1");
                }
            }
            StandardForm::Nls3 { alpha1, alpha2, .. } => {
                if alpha2 < 0.0 {
                    return fail("requires alpha2 >= 0");
                }
                if !unit(alpha1 * alpha1 + alpha2 * alpha2) {
                    return fail("requires alpha1^2 + alpha2^2 = 1");
                }
                if (alpha1 * alpha1 - alpha2 * alpha2).abs() <= 1e-12 {
                    return fail("requires alpha1^2 != alpha2^2");
                }
            }
            StandardForm::Nls4 { alpha1, alpha2, alpha3, .. } => {
                if alpha2 < 0.0 || alpha3 <= 0.0 {
                    return fail("requires alpha2 >= 0 and alpha3 > 0");
                }
                if alpha1 == alpha2 {
                    return fail("requires alpha1 != alpha2");
                }
                if !unit(alpha1 * alpha1 + alpha2 * alpha2 + alpha3 * alpha3) {
                    return fail("requires alpha1^2 + alpha2^2 + alpha3^2 = 1");
                }
            }
            StandardForm::Nls5 { alpha1, alpha2, alpha3, eta, .. } => {
                if alpha2 <= 0.0 || alpha3 <= 0.0 {
                    return fail("requires alpha2 > 0 and alpha3 > 0");
                }
                if !(eta > 0.0 && eta < PI) {
                    return fail("requires eta in (0, pi)");
                }
                if eta > PI / 2.0 && alpha1 <= 0.0 {
                    return fail("requires alpha1 > 0 when eta > pi/2");
                }
                if !unit(alpha1 * alpha1 + alpha2 * alpha2 + alpha3 * alpha3) {
                    return fail("requires alpha1^2 + alpha2^2 + alpha3^2 = 1");
                }
            }
            StandardForm::Co { gamma, kappa } => {
                if gamma <= 0.0 || !kappa.is_finite() {
                    return fail("requires gamma > 0");
                }
            }
        }
        Ok(())
    }

    /// Homogeneity degree of `g`.
    pub fn degree(&self) -> f64 {
        match self {
            StandardForm::Co { .. } => 3.0,
            _ => 4.0,
        }
    }

    /// Gauge vector.
    pub fn gauge(&self) -> [u32; 2] {
        match self {
            StandardForm::Co { .. } => [1, 2],
            _ => [1, 1],
        }
    }

    /// λ-coefficients of the cubic forms (`None` for the quadratic CO system).
    pub fn lambdas(&self) -> Option<[f64; 12]> {
        Some(match *self {
            StandardForm::Nls1 { alpha, beta } => {
                let mut l = [0.0; 12];
                l[0] = alpha;
                l[11] = beta;
                l
            }
            StandardForm::Nls2 { alpha, beta, sigma } => nls2_lambdas(alpha, beta, sigma),
            StandardForm::Nls3 { alpha1, alpha2, r } => nls5_lambdas(alpha1, alpha2, 0.0, 0.0, r),
            StandardForm::Nls4 { alpha1, alpha2, alpha3, r } => {
                nls5_lambdas(alpha1, alpha2, alpha3, 0.0, r)
            }
            StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta } => nls5_lambdas(
                alpha1,
                alpha2,
                alpha3 * eta.cos(),
                alpha3 * eta.sin(),
                r,
            ),
            StandardForm::Co { .. } => return None,
        })
    }

    /// Closed-form value of `g(z)`, written directly from the quartic (or
    /// cubic, for CO) displays rather than from the λ-coefficients.
    pub fn eval_g(&self, z: &Pair) -> f64 {
        let a1 = z[0].norm_sqr();
        let a2 = z[1].norm_sqr();
        let s = a1 + a2;
        match *self {
            StandardForm::Nls1 { alpha, beta } => alpha * a1 * a1 + beta * a2 * a2,
            StandardForm::Nls2 { alpha, beta, sigma } => {
                alpha * a1 * a1 + beta * a2 * a2 + sigma * s * s
            }
            StandardForm::Nls3 { alpha1, alpha2, r } => nls5_g(alpha1, alpha2, 0.0, 0.0, r, z),
            StandardForm::Nls4 { alpha1, alpha2, alpha3, r } => {
                nls5_g(alpha1, alpha2, alpha3, 0.0, r, z)
            }
            StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta } => nls5_g(
                alpha1,
                alpha2,
                alpha3 * eta.cos(),
                alpha3 * eta.sin(),
                r,
                z,
            ),
            StandardForm::Co { kappa, gamma } => {
                let (m1, m2) = (z[0].norm(), z[1].norm());
                let cross = (z[0].conj() * z[0].conj() * z[1]).re;
                -kappa * m1 * m1 * m1 - m2 * m2 * m2 - 1.5 * gamma * cross
            }
        }
    }

    /// `(F₁, F₂)` in closed form.
    pub fn eval_f(&self, z: &Pair) -> Pair {
        match *self {
            StandardForm::Co { kappa, gamma } => [
                -kappa * z[0].norm() * z[0] - gamma * z[0].conj() * z[1],
                -z[1].norm() * z[1] - 0.5 * gamma * z[0] * z[0],
            ],
            _ => lambda_rhs(&self.lambdas().expect("cubic form"), z),
        }
    }
}

fn nls2_lambdas(alpha: f64, beta: f64, sigma: f64) -> [f64; 12] {
    let mut l = [0.0; 12];
    l[0] = alpha + sigma;
    l[3] = sigma;
    l[7] = sigma;
    l[11] = beta + sigma;
    l
}

/// λ-coefficients of the NLS5 family with `c = α₃cos η`, `s = α₃sin η`
/// (NLS3: `c = s = 0`; NLS4: `s = 0`), generic over the coefficient field so
/// exact tests can use rationals.
pub fn nls5_lambdas_generic<T: Field>(a1: T, a2: T, c: T, s: T, r: T) -> [T; 12] {
    let two = T::from_i64(2);
    let big_a = T::from_i64(3) * a1.clone() + a2.clone();
    let big_b = a1 - a2;
    [
        big_a.clone() + two.clone() * c.clone() + r.clone(),
        two.clone() * s.clone(),
        s.clone(),
        two.clone() * big_b.clone() + r.clone(),
        big_b.clone(),
        s.clone(),
        s.clone(),
        two.clone() * big_b.clone() + r.clone(),
        big_b,
        two.clone() * s.clone(),
        s,
        big_a - two * c + r,
    ]
}

fn nls5_lambdas(a1: f64, a2: f64, c: f64, s: f64, r: f64) -> [f64; 12] {
    nls5_lambdas_generic(a1, a2, c, s, r)
}

fn nls5_g(a1: f64, a2: f64, c: f64, s: f64, r: f64, z: &Pair) -> f64 {
    let (z1, z2) = (z[0], z[1]);
    let m1 = z1.norm_sqr();
    let m2 = z2.norm_sqr();
    let sum = m1 + m2;
    let plus = (z1 * z1 + z2 * z2).norm_sqr();
    let minus = (z1 * z1 - z2 * z2).norm_sqr();
    let cross = (z1.conj() * z2).re;
    a1 * plus + a2 * minus - 4.0 * a2 * m1 * m2
        + 2.0 * c * (m1 * m1 - m2 * m2)
        + 4.0 * s * sum * cross
        + (2.0 * a1 + r) * sum * sum
}

/// A user-supplied nonlinearity `g: ℂ² → ℝ`.
#[derive(Clone)]
pub struct CustomG(pub Arc<dyn Fn(&Pair) -> f64 + Send + Sync>);

impl fmt::Debug for CustomG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomG(<fn>)")
    }
}

/// How a [`GForm`] evaluates `g`.
#[derive(Clone, Debug)]
pub enum GKind {
    Standard(StandardForm),
    /// `g = Re(z̄·F)` for a λ-system admitting the energy with `(a,b,c) = (1,0,1)`.
    Lambda([f64; 12]),
    Custom(CustomG),
}

/// The homogeneous nonlinearity `g` together with its degree and gauge vector.
#[derive(Clone, Debug)]
pub struct GForm {
    p: f64,
    n: [u32; 2],
    kind: GKind,
}

impl GForm {
    pub fn standard(form: StandardForm) -> Self {
        GForm { p: form.degree(), n: form.gauge(), kind: GKind::Standard(form) }
    }

    /// `g = Re(z̄₁F₁ + z̄₂F₂)` for a λ-system. Only meaningful (i.e. generating
    /// the given `F` through `F_j = ½∂_{z̄_j} g`) when the energy criterion
    /// holds with `(1,0,1)`; [`SystemSpec::from_lambdas`] checks this.
    pub fn from_lambdas(lambdas: [f64; 12]) -> Self {
        GForm { p: 4.0, n: [1, 1], kind: GKind::Lambda(lambdas) }
    }

    /// Arbitrary `g`; Wirtinger derivatives are taken numerically.
    pub fn custom(p: f64, n: [u32; 2], g: impl Fn(&Pair) -> f64 + Send + Sync + 'static) -> Self {
        GForm { p, n, kind: GKind::Custom(CustomG(Arc::new(g))) }
    }

    /// `t·g` as a custom form (used to check scaling laws).
    pub fn scaled(&self, t: f64) -> Self {
        let inner = self.clone();
        GForm::custom(self.p, self.n, move |z| t * inner.eval(z))
    }

    pub fn degree(&self) -> f64 {
        self.p
    }

    pub fn gauge(&self) -> [u32; 2] {
        self.n
    }

    pub fn kind(&self) -> &GKind {
        &self.kind
    }

    /// Standard-form tag, if any.
    pub fn tag(&self) -> Option<&StandardForm> {
        match &self.kind {
            GKind::Standard(f) => Some(f),
            _ => None,
        }
    }

    /// `g(z)`.
    pub fn eval(&self, z: &Pair) -> f64 {
        match &self.kind {
            GKind::Standard(f) => f.eval_g(z),
            GKind::Lambda(l) => {
                let f = lambda_rhs(l, z);
                (z[0].conj() * f[0] + z[1].conj() * f[1]).re
            }
            GKind::Custom(c) => (c.0)(z),
        }
    }

    /// `F_j = (2/p)∂_{z̄_j} g`: analytic for tagged and λ forms, fourth-order
    /// central differences for custom forms.
    pub fn eval_f(&self, z: &Pair) -> Pair {
        match &self.kind {
            GKind::Standard(f) => f.eval_f(z),
            GKind::Lambda(l) => lambda_rhs(l, z),
            GKind::Custom(_) => self.numeric_f(z, 1e-3 * pair_norm(z).max(1e-3)),
        }
    }

    /// Numerical Wirtinger derivative `(1/p)(∂_x g + i∂_y g)` per component,
    /// by fourth-order central differences with step `step`.
    pub fn numeric_f(&self, z: &Pair, step: f64) -> Pair {
        let mut out = [C64::new(0.0, 0.0); 2];
        for j in 0..2 {
            let d = |dir: C64| -> f64 {
                let at = |t: f64| {
                    let mut w = *z;
                    w[j] += dir * t;
                    self.eval(&w)
                };
                (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2.0 * step))
                    / (12.0 * step)
            };
            let dx = d(C64::new(1.0, 0.0));
            let dy = d(C64::new(0.0, 1.0));
            out[j] = C64::new(dx, dy) / self.p;
        }
        out
    }

    /// Sphere chart `h(ν, ζ) = g(cos ν, e^{iζ} sin ν)`.
    pub fn h(&self, nu: f64, zeta: f64) -> f64 {
        self.eval(&chart_point(nu, zeta))
    }
}

/// `(cos ν, e^{iζ} sin ν)`.
pub fn chart_point(nu: f64, zeta: f64) -> Pair {
    [C64::new(nu.cos(), 0.0), C64::from_polar(nu.sin(), zeta)]
}

/// `eval_g` of the module interface.
pub fn eval_g(gform: &GForm, z: &Pair) -> f64 {
    gform.eval(z)
}

/// A two-component system: optional λ-coefficients (absent for the
/// quadratic CO system), dimension, degree, gauge vector and an optional
/// attached nonlinearity `g`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub lambdas: Option<[f64; 12]>,
    pub d: usize,
    pub p: f64,
    pub n: [u32; 2],
    pub gform: Option<GForm>,
}

impl SystemSpec {
    /// A cubic system from its λ-coefficients. A `g` is attached when the
    /// energy criterion holds with `(a,b,c) = (1,0,1)` (the normalized
    /// kinetic part the stationary theory requires).
    pub fn from_lambdas(lambdas: [f64; 12], d: usize) -> Result<Self> {
        if lambdas.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("lambdas must be finite".into()));
        }
        let mv = lambdas_to_cv(&lambdas);
        let gform = energy_criterion(&mv, 1.0, 0.0, 1.0)?.then(|| GForm::from_lambdas(lambdas));
        let spec = SystemSpec { lambdas: Some(lambdas), d, p: 4.0, n: [1, 1], gform };
        spec.validate()?;
        Ok(spec)
    }

    /// A standard form in dimension `d` (parameter constraints are checked).
    pub fn standard(form: StandardForm, d: usize) -> Result<Self> {
        form.validate()?;
        Self::standard_unchecked(form, d)
    }

    /// Like [`SystemSpec::standard`] but without the parameter constraints
    /// (the dimension/degree checks still apply).
    pub fn standard_unchecked(form: StandardForm, d: usize) -> Result<Self> {
        let spec = SystemSpec {
            lambdas: form.lambdas(),
            d,
            p: form.degree(),
            n: form.gauge(),
            gform: Some(GForm::standard(form)),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Dimension, degree range `p ∈ (2, 2*)` and gauge positivity.
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::Validation(format!("dimension d = {} not in 1..=3", self.d)));
        }
        let p_star = if self.d <= 2 { f64::INFINITY } else { 2.0 * self.d as f64 / (self.d as f64 - 2.0) };
        if !(self.p > 2.0 && self.p < p_star) {
            return Err(Error::Validation(format!(
                "degree p = {} outside (2, {p_star}) for d = {}",
                self.p, self.d
            )));
        }
        if self.n.contains(&0) {
            return Err(Error::Validation("gauge vector entries must be positive".into()));
        }
        if self.lambdas.is_some() && self.p != 4.0 {
            return Err(Error::Validation("lambda systems are cubic (p = 4)".into()));
        }
        if self.lambdas.is_none() && self.gform.is_none() {
            return Err(Error::Validation("system needs lambdas or a nonlinearity g".into()));
        }
        Ok(())
    }
}

/// `(F₁(z), F₂(z))` of a system: the λ monomial expansion when coefficients
/// are given, otherwise the attached `g`.
pub fn eval_f(spec: &SystemSpec, z: &Pair) -> Pair {
    match (&spec.lambdas, &spec.gform) {
        (Some(l), _) => lambda_rhs(l, z),
        (None, Some(g)) => g.eval_f(z),
        (None, None) => [C64::new(0.0, 0.0); 2],
    }
}

/// Matrix–vector encoding `(C, v)` of a cubic system.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixVectorForm<T> {
    pub c: [[T; 3]; 3],
    pub vvec: [T; 3],
}

impl<T: Field> MatrixVectorForm<T> {
    pub fn trace(&self) -> T {
        self.c[0][0].clone() + self.c[1][1].clone() + self.c[2][2].clone()
    }

    /// The 3×3 matrix built from `tr C` and `v` in the energy criterion.
    pub fn criterion_matrix(&self) -> [[T; 3]; 3] {
        let tr = self.trace();
        let [v1, v2, v3] = self.vvec.clone();
        let two = T::from_i64(2);
        [
            [tr.clone() - two.clone() * v2.clone(), two.clone() * v1.clone(), T::zero()],
            [-v3.clone(), tr.clone(), v1],
            [T::zero(), -(two.clone() * v3), tr + two * v2],
        ]
    }
}

/// λ → (C, v), generic over the coefficient field (exact on rationals).
pub fn lambdas_to_cv_generic<T: Field>(l: &[T; 12]) -> MatrixVectorForm<T> {
    // 1-based access to match the usual λ₁…λ₁₂ numbering
    let g = |i: usize| l[i - 1].clone();
    let half = T::ratio(1, 2);
    let two = T::from_i64(2);
    MatrixVectorForm {
        c: [
            [g(2) - g(3), -g(1) + g(8) - g(9), -g(7)],
            [g(5), -g(3) + g(11), -g(9)],
            [g(6), -g(4) + g(5) + g(12), -g(10) + g(11)],
        ],
        vvec: [
            g(8) - two.clone() * g(9),
            half * (-g(2) + two.clone() * g(3) - g(10) + two.clone() * g(11)),
            g(4) - two * g(5),
        ],
    }
}

/// (C, v) → λ, the inverse of [`lambdas_to_cv_generic`].
pub fn cv_to_lambdas_generic<T: Field>(mv: &MatrixVectorForm<T>) -> [T; 12] {
    let c = |i: usize, j: usize| mv.c[i - 1][j - 1].clone();
    let [v1, v2, v3] = mv.vvec.clone();
    let tr = mv.trace();
    let half_tr = tr * T::ratio(1, 2);
    let two = T::from_i64(2);
    [
        -(c(1, 2) + c(2, 3)) + v1.clone(),
        two.clone() * c(1, 1) - half_tr.clone() + v2.clone(),
        c(1, 1) - half_tr.clone() + v2.clone(),
        two.clone() * c(2, 1) + v3.clone(),
        c(2, 1),
        c(3, 1),
        -c(1, 3),
        -(two.clone() * c(2, 3)) + v1,
        -c(2, 3),
        -(two * c(3, 3)) + half_tr.clone() + v2.clone(),
        -c(3, 3) + half_tr + v2,
        c(2, 1) + c(3, 2) + v3,
    ]
}

/// λ → (C, v) on floats.
pub fn lambdas_to_cv(l: &[f64; 12]) -> MatrixVectorForm<f64> {
    lambdas_to_cv_generic(l)
}

/// The `lambdas_to_cv` operation on a system (rejects non-cubic systems).
pub fn spec_to_cv(spec: &SystemSpec) -> Result<MatrixVectorForm<f64>> {
    match (&spec.lambdas, spec.p == 4.0) {
        (Some(l), true) => Ok(lambdas_to_cv(l)),
        _ => Err(Error::Validation("lambdas_to_cv requires a cubic (p = 4) lambda system".into())),
    }
}

/// (C, v) → λ on floats.
pub fn cv_to_lambdas(mv: &MatrixVectorForm<f64>) -> [f64; 12] {
    cv_to_lambdas_generic(mv)
}

fn check_coercive<T: Field>(a: &T, b: &T, c: &T) -> Result<()> {
    // coercivity needs b² − ac < 0 strictly
    let disc = b.clone() * b.clone() - a.clone() * c.clone();
    if !disc.is_negligible() && disc.re_f64() < 0.0 {
        Ok(())
    } else {
        Err(Error::Validation("energy criterion needs b^2 - ac < 0".into()))
    }
}

/// Energy criterion: `C(a,b,c)ᵀ = 0` and the `(tr C, v)` matrix annihilates
/// `(a,b,c)ᵀ`. Requires the coercivity condition `b² − ac < 0`.
pub fn energy_criterion<T: Field>(mv: &MatrixVectorForm<T>, a: T, b: T, c: T) -> Result<bool> {
    check_coercive(&a, &b, &c)?;
    let x = [a, b, c];
    let k = mv.criterion_matrix();
    let annihilates = |m: &[[T; 3]; 3]| {
        m.iter().all(|row| {
            let s = row[0].clone() * x[0].clone() + row[1].clone() * x[1].clone() + row[2].clone() * x[2].clone();
            s.is_negligible()
        })
    };
    Ok(annihilates(&mv.c) && annihilates(&k))
}

/// Existence query for the energy criterion: a coercive `(a,b,c)` with
/// `a > 0` in the null space of the stacked `[C; K]` system, if one exists.
pub fn admissible_abc(mv: &MatrixVectorForm<f64>) -> Option<[f64; 3]> {
    let k = mv.criterion_matrix();
    let rows: Vec<[f64; 3]> = mv.c.iter().chain(k.iter()).cloned().collect();
    let ns = nullspace3(&rows);
    coercive_in_span(&ns)
}

/// A vector `(a,b,c)` with `b² − ac < 0` and `a > 0` in the span of `basis`.
pub fn coercive_in_span(basis: &[[f64; 3]]) -> Option<[f64; 3]> {
    let q = |x: &[f64; 3]| x[1] * x[1] - x[0] * x[2];
    let normalize = |mut x: [f64; 3]| {
        if x[0] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        x.iter_mut().for_each(|v| *v /= n);
        x
    };
    match basis.len() {
        0 => None,
        1 => (q(&basis[0]) < -1e-12).then(|| normalize(basis[0])),
        2 => {
            let (u, v) = (basis[0], basis[1]);
            // q(s u + t v) = A s² + B s t + C t²
            let a = q(&u);
            let c = q(&v);
            let b = 2.0 * u[1] * v[1] - u[0] * v[2] - v[0] * u[2];
            let comb = |s: f64, t: f64| [s * u[0] + t * v[0], s * u[1] + t * v[1], s * u[2] + t * v[2]];
            let candidate = if a < -1e-12 {
                Some(u)
            } else if c < -1e-12 {
                Some(v)
            } else if a > 1e-12 {
                let s = -b / (2.0 * a);
                Some(comb(s, 1.0))
            } else if b.abs() > 1e-12 {
                Some(comb(-(c + 1.0) / b, 1.0))
            } else {
                None
            };
            candidate.filter(|x| q(x) < -1e-12).map(normalize)
        }
        _ => Some(normalize([1.0, 0.0, 1.0])),
    }
}

/// Index of the monomial `z_a z_b z̄_c` (components 0/1) in λ order.
fn monomial_index(a: usize, b: usize, c: usize) -> usize {
    let pair = a + b; // 0: z1², 1: z1z2, 2: z2²
    match (pair, c) {
        (0, 0) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        (1, 1) => 3,
        (2, 0) => 4,
        _ => 5,
    }
}

/// `(unconjugated a, unconjugated b, conjugated c)` for each λ monomial.
const MONOMIAL_FACTORS: [(usize, usize, usize); 6] =
    [(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (1, 1, 0), (1, 1, 1)];

/// Coefficients of `F̃(v) = M F(M⁻¹ v)` in the 12-monomial basis, by exact
/// polynomial substitution. Works over any [`Field`]; for complex matrices
/// the conjugated variable transforms with the conjugate matrix.
pub fn transform_lambdas_generic<T: Field>(l: &[T; 12], m: &[[T; 2]; 2]) -> Result<[T; 12]> {
    let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
    if det.is_negligible() {
        return Err(Error::Singular("change-of-variable matrix has zero determinant".into()));
    }
    let inv = [
        [m[1][1].clone() / det.clone(), -m[0][1].clone() / det.clone()],
        [-m[1][0].clone() / det.clone(), m[0][0].clone() / det],
    ];
    // F_j(N v) expanded in the v-monomials
    let mut subst: [Vec<T>; 2] = [vec![T::zero(); 6], vec![T::zero(); 6]];
    for j in 0..2 {
        for (k, &(a, b, c)) in MONOMIAL_FACTORS.iter().enumerate() {
            let coef = l[6 * j + k].clone();
            if coef.is_negligible() {
                continue;
            }
            for x in 0..2 {
                for y in 0..2 {
                    for w in 0..2 {
                        let t = coef.clone()
                            * inv[a][x].clone()
                            * inv[b][y].clone()
                            * inv[c][w].conj();
                        let idx = monomial_index(x, y, w);
                        subst[j][idx] = subst[j][idx].clone() + t;
                    }
                }
            }
        }
    }
    let mut out: [T; 12] = std::array::from_fn(|_| T::zero());
    for i in 0..2 {
        for k in 0..6 {
            out[6 * i + k] = m[i][0].clone() * subst[0][k].clone() + m[i][1].clone() * subst[1][k].clone();
        }
    }
    Ok(out)
}

/// Coefficients of the system satisfied by `ũ = M u` for a real invertible `M`.
pub fn transform_system(spec: &SystemSpec, m: [[f64; 2]; 2]) -> Result<SystemSpec> {
    let l = spec
        .lambdas
        .ok_or_else(|| Error::Validation("transform_system requires a cubic lambda system".into()))?;
    if spec.p != 4.0 {
        return Err(Error::Validation("transform_system requires p = 4".into()));
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs()));
    if det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
        return Err(Error::Singular(format!("det M = {det}")));
    }
    let out = transform_lambdas_generic(&l, &m)?;
    SystemSpec::from_lambdas(out, spec.d)
}

/// Exact rational version of [`transform_system`] on λ-vectors.
pub fn transform_lambdas_exact(l: &[BigRational; 12], m: &[[BigRational; 2]; 2]) -> Result<[BigRational; 12]> {
    transform_lambdas_generic(l, m)
}

/// The complex diagonal change of variables `ũ = diag(d₁, d₂) u`. The
/// resulting coefficients must be real (to `1e-12`); otherwise the system
/// leaves the real λ-class and an error is returned.
pub fn transform_complex_diagonal(spec: &SystemSpec, d1: C64, d2: C64) -> Result<SystemSpec> {
    let l = spec
        .lambdas
        .ok_or_else(|| Error::Validation("diagonal transform requires a cubic lambda system".into()))?;
    let lc: [C64; 12] = std::array::from_fn(|i| C64::new(l[i], 0.0));
    let zero = C64::new(0.0, 0.0);
    let out = transform_lambdas_generic(&lc, &[[d1, zero], [zero, d2]])?;
    if let Some(bad) = out.iter().find(|c| c.im.abs() > 1e-12) {
        return Err(Error::Validation(format!(
            "diagonal transform produces a non-real coefficient {bad}"
        )));
    }
    SystemSpec::from_lambdas(std::array::from_fn(|i| out[i].re), spec.d)
}

/// Unitary-invariant angle `arccos(|⟨z,w⟩| / (‖z‖‖w‖)) ∈ [0, π/2]`.
pub fn unitary_angle(z: &Pair, w: &Pair) -> Result<f64> {
    let (nz, nw) = (pair_norm(z), pair_norm(w));
    if nz == 0.0 || nw == 0.0 {
        return Err(Error::Validation("unitary_angle of a zero vector".into()));
    }
    let ip = z[0] * w[0].conj() + z[1] * w[1].conj();
    Ok((ip.norm() / (nz * nw)).clamp(0.0, 1.0).acos())
}

/// On-disk system definition.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SystemFile {
    Lambdas {
        lambdas: Vec<f64>,
        d: usize,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        n: Option<[u32; 2]>,
    },
    Standard {
        standard_form: String,
        params: BTreeMap<String, f64>,
        d: usize,
    },
}

/// Parse a JSON system definition:
/// `{"lambdas":[12 reals],"d":int,"p":real,"n":[int,int]}` or
/// `{"standard_form":"NLS3","params":{...},"d":int}`.
pub fn parse_system_json(text: &str) -> Result<SystemSpec> {
    let file: SystemFile = serde_json::from_str(text)
        .map_err(|e| Error::Validation(format!("malformed system file: {e}")))?;
    match file {
        SystemFile::Lambdas { lambdas, d, p, n } => {
            let arr: [f64; 12] = lambdas
                .try_into()
                .map_err(|v: Vec<f64>| Error::Validation(format!("expected 12 lambdas, got {}", v.len())))?;
            if let Some(p) = p {
                if p != 4.0 {
                    return Err(Error::Validation("lambda systems are cubic: p must be 4".into()));
                }
            }
            let mut spec = SystemSpec::from_lambdas(arr, d)?;
            if let Some(n) = n {
                spec.n = n;
                if n != [1, 1] {
                    // the λ-family is gauge invariant for n = (1,1) only
                    spec.gform = None;
                }
                spec.validate()?;
            }
            Ok(spec)
        }
        SystemFile::Standard { standard_form, params, d } => {
            let form = StandardForm::from_params(&standard_form, &params)?;
            SystemSpec::standard(form, d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_g_examples() {
        let g = GForm::standard(StandardForm::Nls1 { alpha: 1.0, beta: -1.0 });
        assert_eq!(g.eval(&[c(1.0, 0.0), c(0.0, 0.0)]), 1.0);
        assert_eq!(g.eval(&[c(0.0, 0.0), c(0.0, 0.0)]), 0.0);
        let g3 = GForm::standard(StandardForm::Nls3 { alpha1: 1.0, alpha2: 0.0, r: 0.0 });
        let v = g3.eval(&[c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_g_matches_lambda_g() {
        let forms = [
            StandardForm::Nls2 { alpha: 0.7, beta: -0.3, sigma: -1.0 },
            StandardForm::Nls5 { alpha1: 0.3, alpha2: 0.5, alpha3: 0.81240384, r: -1.0, eta: 1.1 },
        ];
        for f in forms {
            let gl = GForm::from_lambdas(f.lambdas().unwrap());
            let gs = GForm::standard(f);
            let z = [c(0.3, -0.7), c(1.1, 0.4)];
            assert!((gl.eval(&z) - gs.eval(&z)).abs() < 1e-12);
        }
    }

    #[test]
    fn co_rhs_matches_display() {
        let (kappa, gamma) = (0.7, 1.3);
        let g = GForm::standard(StandardForm::Co { kappa, gamma });
        let z = [c(0.4, 0.9), c(-0.5, 0.2)];
        let f = g.eval_f(&z);
        let f1 = -kappa * z[0].norm() * z[0] - gamma * z[0].conj() * z[1];
        let f2 = -z[1].norm() * z[1] - gamma / 2.0 * z[0] * z[0];
        assert!((f[0] - f1).norm() < 1e-15 && (f[1] - f2).norm() < 1e-15);
        let num = g.numeric_f(&z, 1e-4);
        assert!((num[0] - f[0]).norm() < 1e-8 && (num[1] - f[1]).norm() < 1e-8);
    }

    #[test]
    fn cv_examples() {
        let zero = lambdas_to_cv(&[0.0; 12]);
        assert!(zero.c.iter().flatten().all(|x| *x == 0.0) && zero.vvec == [0.0; 3]);
        let mut l = [0.0; 12];
        l[7] = 1.0;
        let mv = lambdas_to_cv(&l);
        assert_eq!(mv.vvec[0], 1.0);
        assert_eq!(mv.c[0][1], 1.0);
        let l2 = StandardForm::Nls2 { alpha: 1.0, beta: -1.0, sigma: 1.0 }.lambdas().unwrap();
        assert_eq!(cv_to_lambdas(&lambdas_to_cv(&l2)), l2);
    }

    #[test]
    fn criterion_examples() {
        let zero = lambdas_to_cv(&[0.0; 12]);
        assert!(energy_criterion(&zero, 2.0, 0.5, 1.0).unwrap());
        let mut l = [0.0; 12];
        l[6] = 1.0;
        assert!(!energy_criterion(&lambdas_to_cv(&l), 1.0, 0.0, 1.0).unwrap());
        assert!(energy_criterion(&zero, 1.0, 1.0, 1.0).is_err());
        assert!(energy_criterion(&zero, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exact_criterion_rejects_noncoercive_rationals() {
        let r = |x: i64| BigRational::from_i64(x);
        let mv = lambdas_to_cv_generic::<BigRational>(&std::array::from_fn(|_| r(0)));
        assert!(energy_criterion(&mv, r(1), r(0), r(1)).unwrap());
        assert!(energy_criterion(&mv, r(1), r(2), r(1)).is_err());
        assert!(energy_criterion(&mv, r(-1), r(0), r(-1)).unwrap());
    }

    #[test]
    fn identity_transform_is_trivial() {
        let spec = SystemSpec::standard(StandardForm::Nls3 { alpha1: 0.6, alpha2: 0.8, r: 0.5 }, 1).unwrap();
        let t = transform_system(&spec, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        for (a, b) in t.lambdas.unwrap().iter().zip(spec.lambdas.unwrap().iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(transform_system(&spec, [[1.0, 2.0], [2.0, 4.0]]).is_err());
    }

    #[test]
    fn angle_examples() {
        let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(unitary_angle(&e1, &e1).unwrap(), 0.0);
        assert!((unitary_angle(&e1, &e2).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(unitary_angle(&e1, &[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn system_json_roundtrip() {
        let spec = parse_system_json(
            r#"{"standard_form":"NLS3","params":{"alpha1":0.8,"alpha2":0.6,"r":0.0},"d":1}"#,
        )
        .unwrap();
        assert_eq!(spec.p, 4.0);
        assert!(spec.gform.is_some());
        let l = parse_system_json(r#"{"lambdas":[-1,0,0,0,0,0,0,0,0,0,0,-1],"d":2,"p":4,"n":[1,1]}"#).unwrap();
        assert!(l.gform.is_some());
        assert!(parse_system_json(r#"{"lambdas":[1,2],"d":1}"#).is_err());
        assert!(parse_system_json(r#"{"standard_form":"NLS9","params":{},"d":1}"#).is_err());
        assert!(parse_system_json(r#"{"standard_form":"NLS1","params":{"alpha":1,"beta":0,"x":1},"d":1}"#).is_err());
        assert!(parse_system_json("not json").is_err());
    }

    fn arb_form() -> impl Strategy<Value = StandardForm> {
        let x = || -2.0f64..2.0;
        prop_oneof![
            (x(), x()).prop_map(|(alpha, beta)| StandardForm::Nls1 { alpha, beta }),
            (x(), x(), x()).prop_map(|(alpha, beta, sigma)| StandardForm::Nls2 { alpha, beta, sigma }),
            (x(), x(), x()).prop_map(|(alpha1, alpha2, r)| StandardForm::Nls3 { alpha1, alpha2, r }),
            (x(), x(), x(), x()).prop_map(|(alpha1, alpha2, alpha3, r)| StandardForm::Nls4 { alpha1, alpha2, alpha3, r }),
            (x(), x(), x(), x(), 0.01f64..3.13)
                .prop_map(|(alpha1, alpha2, alpha3, r, eta)| StandardForm::Nls5 { alpha1, alpha2, alpha3, r, eta }),
            (x(), 0.01f64..3.0).prop_map(|(kappa, gamma)| StandardForm::Co { kappa, gamma }),
        ]
    }

    fn arb_pair() -> impl Strategy<Value = Pair> {
        proptest::array::uniform4(-1.5f64..1.5).prop_map(|v| [c(v[0], v[1]), c(v[2], v[3])])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #[test]
        fn g_is_homogeneous_real_and_gauge_invariant(form in arb_form(), z in arb_pair(), r in 0.0f64..3.0, th in 0.0f64..6.3) {
            let g = GForm::standard(form);
            let p = g.degree();
            prop_assert!(close(g.eval(&[z[0] * r, z[1] * r]), r.powf(p) * g.eval(&z), 1e-12));
            let n = g.gauge();
            let rot = [z[0] * C64::from_polar(1.0, n[0] as f64 * th), z[1] * C64::from_polar(1.0, n[1] as f64 * th)];
            prop_assert!(close(g.eval(&rot), g.eval(&z), 1e-12));
            prop_assert!(g.eval(&z).is_finite());
        }

        #[test]
        fn f_is_the_derivative_of_g(form in arb_form(), z in arb_pair()) {
            let g = GForm::standard(form);
            let f = g.eval_f(&z);
            let num = g.numeric_f(&z, 1e-3);
            for j in 0..2 {
                prop_assert!((f[j] - num[j]).norm() <= 1e-7 * (1.0 + f[j].norm()), "F_{} {} vs {}", j + 1, f[j], num[j]);
            }
            if let Some(l) = form.lambdas() {
                let from_l = lambda_rhs(&l, &z);
                for j in 0..2 {
                    prop_assert!((f[j] - from_l[j]).norm() <= 1e-12 * (1.0 + f[j].norm()));
                }
            }
        }

        #[test]
        fn cv_round_trip(l in proptest::array::uniform12(-5.0f64..5.0)) {
            let back = cv_to_lambdas(&lambdas_to_cv(&l));
            for k in 0..12 {
                prop_assert!((back[k] - l[k]).abs() <= 1e-12, "lambda {}: {} vs {}", k + 1, back[k], l[k]);
            }
        }

        #[test]
        fn transform_then_inverse_is_identity(
            l in proptest::array::uniform12(-3.0f64..3.0),
            m in proptest::array::uniform4(-2.0f64..2.0),
        ) {
            let det = m[0] * m[3] - m[1] * m[2];
            prop_assume!(det.abs() > 0.2);
            let mm = [[m[0], m[1]], [m[2], m[3]]];
            let inv = [[m[3] / det, -m[1] / det], [-m[2] / det, m[0] / det]];
            let back = transform_lambdas_generic(&transform_lambdas_generic(&l, &mm).unwrap(), &inv).unwrap();
            for k in 0..12 {
                prop_assert!((back[k] - l[k]).abs() <= 1e-9 * (1.0 + l[k].abs()));
            }
        }

        #[test]
        fn criterion_is_scale_invariant(form in arb_form(), t in 0.1f64..10.0) {
            prop_assume!(form.lambdas().is_some());
            let mv = lambdas_to_cv(&form.lambdas().unwrap());
            let (a, b, c) = (1.0, 0.0, 1.0);
            prop_assert_eq!(
                energy_criterion(&mv, a, b, c).unwrap(),
                energy_criterion(&mv, t * a, t * b, t * c).unwrap()
            );
        }

        #[test]
        fn chart_value_ignores_common_phase(form in arb_form(), nu in 0.0f64..1.58, zeta in 0.0f64..6.3, th in 0.0f64..6.3) {
            let g = GForm::standard(form);
            prop_assume!(g.gauge() == [1, 1]);
            let w = chart_point(nu, zeta);
            let e = C64::from_polar(1.0, th);
            prop_assert!((pair_norm(&w) - 1.0).abs() <= 1e-15);
            prop_assert!(close(g.eval(&[w[0] * e, w[1] * e]), g.h(nu, zeta), 1e-12));
        }
    }
}
