//! Scalar abstraction shared by the float and exact (rational) code paths,
//! plus the small amount of linear algebra the coefficient maps need.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A field with complex conjugation. Real fields conjugate trivially.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn conj(&self) -> Self;
    /// Exact zero for exact fields, `|x| <= 1e-12` for floating types.
    fn is_negligible(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    /// Magnitude used for pivoting (approximate for exact types).
    fn magnitude(&self) -> f64;
    /// Signed `f64` approximation of the real part.
    fn re_f64(&self) -> f64;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
}

impl Field for f64 {
    fn conj(&self) -> Self {
        *self
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-12
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn re_f64(&self) -> f64 {
        *self
    }
}

impl Field for BigRational {
    fn conj(&self) -> Self {
        self.clone()
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn re_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Field for Complex<f64> {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn is_negligible(&self) -> bool {
        self.norm() <= 1e-12
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn re_f64(&self) -> f64 {
        self.re
    }
}

impl Field for Complex<BigRational> {
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn is_negligible(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_i64(v), BigRational::zero())
    }
    fn magnitude(&self) -> f64 {
        self.re.magnitude() + self.im.magnitude()
    }
    fn re_f64(&self) -> f64 {
        self.re.re_f64()
    }
}

/// Convert an `f64` to an exact rational (exact binary expansion).
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Basis of the right null space of a matrix with three columns, by
/// Gauss–Jordan elimination with partial pivoting. For floating types a
/// pivot below `1e-10` times the largest entry counts as zero.
pub fn nullspace3<T: Field>(rows: &[[T; 3]]) -> Vec<[T; 3]> {
    let mut a: Vec<[T; 3]> = rows.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|x| x.magnitude()))
        .fold(0.0_f64, f64::max);
    let tol = if scale > 0.0 { 1e-10 * scale } else { 0.0 };
    let is_zero = |x: &T| x.is_negligible() || x.magnitude() <= tol;

    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..3 {
        if row >= a.len() {
            break;
        }
        // partial pivoting
        let (best, best_mag) = (row..a.len())
            .map(|i| (i, a[i][col].magnitude()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_mag < 0.0 || is_zero(&a[best][col]) {
            continue;
        }
        a.swap(row, best);
        let piv = a[row][col].clone();
        for k in 0..3 {
            a[row][k] = a[row][k].clone() / piv.clone();
        }
        for i in 0..a.len() {
            if i != row && !a[i][col].is_negligible() {
                let f = a[i][col].clone();
                for k in 0..3 {
                    a[i][k] = a[i][k].clone() - f.clone() * a[row][k].clone();
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..3).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = [T::zero(), T::zero(), T::zero()];
            v[fc] = T::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][fc].clone();
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_zero_is_everything() {
        let ns = nullspace3::<f64>(&[[0.0; 3]; 2]);
        assert_eq!(ns.len(), 3);
    }

    #[test]
    fn nullspace_exact_rank_two() {
        let r = |x: i64| BigRational::from_i64(x);
        let rows = [[r(1), r(0), r(-1)], [r(0), r(1), r(0)]];
        let ns = nullspace3(&rows);
        assert_eq!(ns, vec![[r(1), r(0), r(1)]]);
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let rows = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]];
        let ns = nullspace3(&rows);
        assert_eq!(ns.len(), 2);
        for v in ns {
            for row in &rows {
                let s: f64 = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                assert!(s.abs() < 1e-12);
            }
        }
    }
}
