//! Matching admissible cubic systems to the standard forms NLS1–NLS5 by
//! real changes of variable `ũ = M u`, and the invariants that obstruct a
//! match.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::nullspace3;
use crate::optimize::nelder_mead;
use crate::sphere_critical::ground_set;
use crate::system_model::{
    admissible_abc, coercive_in_span, nls5_lambdas_generic, spec_to_cv, transform_lambdas_generic, unitary_angle,
    GForm, MatrixVectorForm, StandardForm, SystemSpec,
};

pub type Mat2 = [[f64; 2]; 2];

/// Rank of `C`, a basis of its kernel and a coercive kernel vector.
#[derive(Clone, Debug, PartialEq)]
pub struct RankKernel {
    pub rank: usize,
    pub kernel: Vec<[f64; 3]>,
    /// A kernel vector `(a,b,c)` with `b² − ac < 0` (`a > 0`, unit norm).
    pub coercive: Option<[f64; 3]>,
}

/// Rank and kernel of the matrix part of a matrix–vector form.
pub fn rank_and_kernel(mv: &MatrixVectorForm<f64>) -> RankKernel {
    let kernel = nullspace3(&mv.c);
    RankKernel { rank: 3 - kernel.len(), coercive: coercive_in_span(&kernel), kernel }
}

/// A successful match `T(λ, M) = λ(form)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatch {
    pub form: StandardForm,
    pub m: Mat2,
    /// `‖T(λ, M) − λ(form)‖∞ / ‖λ(form)‖∞`.
    pub residual: f64,
}

/// Coarse-grid resolution and refinement budget of the matcher.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    /// Grid points per rotation angle on `[0, π)`.
    pub angles: usize,
    /// Log-spaced singular-value ratios `s/t` on `[0.01, 100]`.
    pub ratios: usize,
    /// Number of best coarse cells refined by Nelder–Mead.
    pub refinements: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { angles: 12, ratios: 9, refinements: 12 }
    }
}

/// Acceptance threshold on the match residual.
pub const MATCH_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Nls1,
    Nls2,
    Nls3,
    Nls4,
    Nls5,
}

const FAMILIES: [Family; 5] = [Family::Nls1, Family::Nls2, Family::Nls3, Family::Nls4, Family::Nls5];

impl Family {
    /// λ-vector of the family at parameter vector `θ` (linear in `θ`).
    fn lambdas(self, th: &[f64]) -> [f64; 12] {
        match self {
            Family::Nls1 => {
                let mut l = [0.0; 12];
                l[0] = th[0];
                l[11] = th[1];
                l
            }
            Family::Nls2 => {
                let mut l = [0.0; 12];
                l[0] = th[0] + th[2];
                l[3] = th[2];
                l[7] = th[2];
                l[11] = th[1] + th[2];
                l
            }
            Family::Nls3 => nls5_lambdas_generic(th[0], th[1], 0.0, 0.0, th[2]),
            Family::Nls4 => nls5_lambdas_generic(th[0], th[1], th[2], 0.0, th[3]),
            Family::Nls5 => nls5_lambdas_generic(th[0], th[1], th[2], th[3], th[4]),
        }
    }

    fn dim(self) -> usize {
        match self {
            Family::Nls1 => 2,
            Family::Nls2 | Family::Nls3 => 3,
            Family::Nls4 => 4,
            Family::Nls5 => 5,
        }
    }

    /// Least-squares parameters and relative residual of `l` in the span.
    fn project(self, l: &[f64; 12]) -> (Vec<f64>, f64) {
        let k = self.dim();
        let cols: Vec<[f64; 12]> = (0..k)
            .map(|i| {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                self.lambdas(&e)
            })
            .collect();
        let dot = |a: &[f64; 12], b: &[f64; 12]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| dot(&cols[i], &cols[j])).collect();
                row.push(dot(&cols[i], l));
                row
            })
            .collect();
        let th = solve_dense(&mut a);
        let fit = self.lambdas(&th);
        let norm = l.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let res = l.iter().zip(&fit).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        (th, if norm > 0.0 { res / norm } else { f64::INFINITY })
    }

    /// Scale a fitted parameter vector to the standard normalization;
    /// returns the form and the uniform/diagonal scaling matrix achieving it.
    fn normalize(self, th: &[f64]) -> Option<(StandardForm, Mat2)> {
        let uniform = |k2: f64| (k2 > 1e-12).then(|| [[k2.sqrt(), 0.0], [0.0, k2.sqrt()]]);
        let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
        match self {
            Family::Nls1 => {
                let (a, b) = (snap(th[0]), snap(th[1]));
                let s = |x: f64| if x == 0.0 { 1.0 } else { x.abs().sqrt() };
                Some((StandardForm::Nls1 { alpha: a.signum() * (a != 0.0) as u8 as f64, beta: b.signum() * (b != 0.0) as u8 as f64 }, [[s(a), 0.0], [0.0, s(b)]]))
            }
            Family::Nls2 => {
                let k2 = th[2].abs();
                let m = uniform(k2)?;
                Some((StandardForm::Nls2 { alpha: th[0] / k2, beta: th[1] / k2, sigma: th[2].signum() }, m))
            }
            Family::Nls3 => {
                let k2 = th[0].hypot(th[1]);
                let m = uniform(k2)?;
                Some((StandardForm::Nls3 { alpha1: th[0] / k2, alpha2: snap(th[1] / k2), r: th[2] / k2 }, m))
            }
            Family::Nls4 => {
                let k2 = (th[0] * th[0] + th[1] * th[1] + th[2] * th[2]).sqrt();
                let m = uniform(k2)?;
                Some((
                    StandardForm::Nls4 { alpha1: th[0] / k2, alpha2: snap(th[1] / k2), alpha3: th[2] / k2, r: th[3] / k2 },
                    m,
                ))
            }
            Family::Nls5 => {
                let a3 = th[2].hypot(th[3]);
                let k2 = (th[0] * th[0] + th[1] * th[1] + a3 * a3).sqrt();
                let m = uniform(k2)?;
                Some((
                    StandardForm::Nls5 {
                        alpha1: th[0] / k2,
                        alpha2: th[1] / k2,
                        alpha3: a3 / k2,
                        r: th[4] / k2,
                        eta: th[3].atan2(th[2]),
                    },
                    m,
                ))
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented `k×(k+1)`
/// system; singular directions get a zero coefficient.
fn solve_dense(a: &mut [Vec<f64>]) -> Vec<f64> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("rows");
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            continue;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { a[i][k] / a[i][i] }).collect()
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn rotation(t: f64) -> Mat2 {
    [[t.cos(), -t.sin()], [t.sin(), t.cos()]]
}

fn transform(l: &[f64; 12], m: &Mat2) -> Option<[f64; 12]> {
    transform_lambdas_generic(l, m).ok()
}

/// Finite symmetries tried during normalization: signed permutations,
/// each optionally preceded by the 45° rotation.
fn symmetries() -> Vec<Mat2> {
    let h = FRAC_1_SQRT_2;
    let r45 = [[h, -h], [h, h]];
    let mut out = Vec::new();
    for perm in [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]] {
        for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let sp = mul(&[[s1, 0.0], [0.0, s2]], &perm);
            out.push(sp);
            out.push(mul(&sp, &r45));
        }
    }
    out
}

fn residual_to(l: &[f64; 12], m: &Mat2, form: &StandardForm) -> f64 {
    let target = form.lambdas().expect("cubic form");
    let Some(got) = transform(l, m) else { return f64::INFINITY };
    let norm = target.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    got.iter().zip(&target).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs())) / norm.max(f64::MIN_POSITIVE)
}

/// Try to finish a near-match `T(λ, M)` with a finite symmetry and a
/// scaling, producing a validated standard form.
fn finish(l: &[f64; 12], m: &Mat2) -> Option<FormMatch> {
    let lm = transform(l, m)?;
    for fam in FAMILIES {
        for s in symmetries() {
            let Some(ls) = transform(&lm, &s) else { continue };
            let (th, res) = fam.project(&ls);
            if res > MATCH_TOLERANCE {
                continue;
            }
            let Some((form, scale)) = fam.normalize(&th) else { continue };
            if form.validate().is_err() {
                continue;
            }
            let total = mul(&scale, &mul(&s, m));
            let residual = residual_to(l, &total, &form);
            if residual <= MATCH_TOLERANCE {
                return Some(FormMatch { form, m: total, residual });
            }
        }
    }
    None
}

fn search_matrix(x: &[f64]) -> Mat2 {
    let rho = x[1].exp();
    let d = [[rho.sqrt(), 0.0], [0.0, 1.0 / rho.sqrt()]];
    mul(&rotation(x[0]), &mul(&d, &rotation(x[2])))
}

/// Smallest relative distance from `T(λ, M(x))` to any family span.
fn family_distance(l: &[f64; 12], x: &[f64]) -> f64 {
    match transform(l, &search_matrix(x)) {
        Some(lm) => FAMILIES.iter().map(|f| f.project(&lm).1).fold(f64::INFINITY, f64::min),
        None => f64::INFINITY,
    }
}

/// Search for `M` with `T(λ, M)` equal to a validated standard form.
///
/// Returns `Ok(None)` when the budget is exhausted without a match (not a
/// proof of non-membership) and an error when no coercive `(a,b,c)`
/// exists, i.e. the system is outside the class.
pub fn match_standard_form(spec: &SystemSpec, budget: SearchBudget) -> Result<Option<FormMatch>> {
    let mv = spec_to_cv(spec)?;
    if admissible_abc(&mv).is_none() {
        return Err(Error::Validation("not in the class: no admissible (a,b,c) for the energy criterion".into()));
    }
    let l = spec.lambdas.expect("checked by spec_to_cv");
    let identity = [[1.0, 0.0], [0.0, 1.0]];
    if let Some(form) = spec.gform.as_ref().and_then(|g| g.tag()) {
        if form.validate().is_ok() && form.lambdas() == Some(l) {
            return Ok(Some(FormMatch { form: *form, m: identity, residual: 0.0 }));
        }
    }
    if let Some(m) = finish(&l, &identity) {
        return Ok(Some(m));
    }
    let na = budget.angles.max(1);
    let nr = budget.ratios.max(1);
    let ln_max = 100f64.ln();
    let cells: Vec<[f64; 3]> = (0..na)
        .flat_map(|i| {
            (0..nr).flat_map(move |k| {
                (0..na).map(move |j| {
                    let lr = if nr == 1 { 0.0 } else { -ln_max + 2.0 * ln_max * k as f64 / (nr - 1) as f64 };
                    [PI * i as f64 / na as f64, lr, PI * j as f64 / na as f64]
                })
            })
        })
        .collect();
    let mut scored: Vec<(f64, [f64; 3])> = cells.par_iter().map(|x| (family_distance(&l, x), *x)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.partial_cmp(&b.1).expect("finite cells")));
    let step = PI / na as f64;
    let found: Vec<FormMatch> = scored
        .par_iter()
        .take(budget.refinements)
        .filter_map(|(_, x0)| {
            let mut x = x0.to_vec();
            for _ in 0..3 {
                let r = nelder_mead(|y| family_distance(&l, y), &x, 0.5 * step, 1e-13, 0.0, 4000);
                x = r.x;
                if r.f <= 0.1 * MATCH_TOLERANCE {
                    break;
                }
            }
            finish(&l, &search_matrix(&x))
        })
        .collect();
    Ok(found.into_iter().min_by(|a, b| {
        a.residual.total_cmp(&b.residual).then_with(|| format!("{:?}", a.form).cmp(&format!("{:?}", b.form)))
    }))
}

/// Ground-state structure invariants under unitary changes of variable:
/// `g_min`, the number of minimizing orbits and the multiset of pairwise
/// unitary angles between their generators.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundInvariants {
    pub g_min: f64,
    pub orbits: usize,
    /// Sorted pairwise angles.
    pub angles: Vec<f64>,
}

pub fn ground_invariants(gform: &GForm) -> Result<GroundInvariants> {
    let set = ground_set(gform);
    let gens = set.generators();
    let mut angles = Vec::new();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            angles.push(unitary_angle(&gens[i], &gens[j])?);
        }
    }
    angles.sort_by(f64::total_cmp);
    Ok(GroundInvariants { g_min: set.g_min, orbits: gens.len(), angles })
}

/// Whether two invariant sets agree to `tol` (a necessary condition for
/// unitary equivalence of the underlying systems).
pub fn invariants_agree(a: &GroundInvariants, b: &GroundInvariants, tol: f64) -> bool {
    (a.g_min - b.g_min).abs() <= tol
        && a.orbits == b.orbits
        && a.angles.len() == b.angles.len()
        && a.angles.iter().zip(&b.angles).all(|(x, y)| (x - y).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system_model::{lambdas_to_cv, transform_system};

    fn lam(form: StandardForm) -> [f64; 12] {
        form.lambdas().unwrap()
    }

    #[test]
    fn rank_and_kernel_examples() {
        let zero = MatrixVectorForm { c: [[0.0; 3]; 3], vvec: [0.0; 3] };
        let rk = rank_and_kernel(&zero);
        assert_eq!((rk.rank, rk.kernel.len()), (0, 3));
        assert!(rk.coercive.is_some());
        // only the second column is nonzero
        let one = MatrixVectorForm { c: [[0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [0.0, -1.0, 0.0]], vvec: [0.0; 3] };
        let rk = rank_and_kernel(&one);
        assert_eq!(rk.rank, 1);
        for e in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]] {
            let in_span = one.c.iter().all(|row| row.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
            assert!(in_span);
        }
        let rk = rank_and_kernel(&lambdas_to_cv(&lam(StandardForm::Nls3 { alpha1: 0.6, alpha2: 0.8, r: 0.3 })));
        assert_eq!(rk.kernel.len(), 1);
        let k = rk.kernel[0];
        assert!((k[0] - k[2]).abs() < 1e-12 && k[1].abs() < 1e-12);
    }

    #[test]
    fn identity_match() {
        let form = StandardForm::Nls2 { alpha: 0.5, beta: -0.25, sigma: -1.0 };
        let spec = SystemSpec::standard(form, 1).unwrap();
        let m = match_standard_form(&spec, SearchBudget::default()).unwrap().unwrap();
        assert_eq!(m.form, form);
        assert_eq!(m.m, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn rotated_nls3_flips_alpha2() {
        let pre = SystemSpec::standard_unchecked(StandardForm::Nls3 { alpha1: 0.6, alpha2: -0.8, r: 0.5 }, 1).unwrap();
        let h = FRAC_1_SQRT_2;
        let rotated = transform_system(&pre, [[h, -h], [h, h]]).unwrap();
        let m = match_standard_form(&rotated, SearchBudget::default()).unwrap().unwrap();
        match m.form {
            StandardForm::Nls3 { alpha1, alpha2, r } => {
                assert!((alpha1 - 0.6).abs() < 1e-9 && (alpha2 - 0.8).abs() < 1e-9 && (r - 0.5).abs() < 1e-9);
            }
            other => panic!("matched {other:?}"),
        }
        assert!(m.residual <= MATCH_TOLERANCE);
    }

    #[test]
    fn gl2_conjugate_of_nls4() {
        let a3 = (1.0f64 - 0.01 - 0.04).sqrt();
        let form = StandardForm::Nls4 { alpha1: 0.1, alpha2: 0.2, alpha3: a3, r: 1.0 };
        let spec = SystemSpec::standard(form, 1).unwrap();
        let hidden = [[1.3, 0.4], [-0.7, 0.9]];
        let disguised = transform_system(&spec, hidden).unwrap();
        let m = match_standard_form(&disguised, SearchBudget::default()).unwrap().expect("match");
        assert!(m.residual <= MATCH_TOLERANCE, "{m:?}");
        assert!(matches!(m.form, StandardForm::Nls4 { .. }), "{m:?}");
        assert!((residual_to(&disguised.lambdas.unwrap(), &m.m, &m.form)).abs() <= MATCH_TOLERANCE);
    }

    #[test]
    fn matching_the_output_is_identity() {
        let form = StandardForm::Nls4 { alpha1: 0.1, alpha2: 0.2, alpha3: (0.95f64).sqrt(), r: 1.0 };
        let disguised = transform_system(&SystemSpec::standard(form, 1).unwrap(), [[0.8, -0.3], [0.5, 1.1]]).unwrap();
        let first = match_standard_form(&disguised, SearchBudget::default()).unwrap().unwrap();
        let normalized = SystemSpec::standard(first.form, 1).unwrap();
        let again = match_standard_form(&normalized, SearchBudget::default()).unwrap().unwrap();
        assert_eq!(again.m, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(again.form, first.form);
    }

    #[test]
    fn outside_the_class_is_an_error() {
        // off-diagonal couplings with no coercive (a,b,c)
        let mut l = [0.0; 12];
        l[1] = 1.0;
        l[5] = -2.0;
        l[8] = 3.0;
        let spec = SystemSpec { lambdas: Some(l), d: 1, p: 4.0, n: [1, 1], gform: None };
        assert!(admissible_abc(&lambdas_to_cv(&l)).is_none());
        assert!(match_standard_form(&spec, SearchBudget::default()).is_err());
    }

    #[test]
    fn invariants_survive_the_remark_rotation() {
        let a = GForm::standard(StandardForm::Nls3 { alpha1: 0.6, alpha2: 0.8, r: -2.0 });
        let pre = SystemSpec::standard_unchecked(StandardForm::Nls3 { alpha1: 0.6, alpha2: 0.8, r: -2.0 }, 1).unwrap();
        let h = FRAC_1_SQRT_2;
        let rotated = transform_system(&pre, [[h, -h], [h, h]]).unwrap();
        let b = GForm::from_lambdas(rotated.lambdas.unwrap());
        let (ia, ib) = (ground_invariants(&a).unwrap(), ground_invariants(&b).unwrap());
        assert!(invariants_agree(&ia, &ib, 1e-6), "{ia:?} vs {ib:?}");
        // NLS1(−1, 0) shares g_min = −1 but has a single minimizing orbit
        let c = GForm::standard(StandardForm::Nls1 { alpha: -1.0, beta: 0.0 });
        let ic = ground_invariants(&c).unwrap();
        assert!(!invariants_agree(&ia, &ic, 1e-6), "{ia:?} {ic:?}");
    }
}
