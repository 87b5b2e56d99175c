//! Scalar abstraction: the crate is generic over the real base field.

use nalgebra::{DMatrix, RealField};
use nalgebra::ComplexField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the whole crate is generic over: `f32` or `f64`.
pub trait RealScalar: RealField + FromPrimitive + ToPrimitive + Copy {}
impl<T: RealField + FromPrimitive + ToPrimitive + Copy> RealScalar for T {}

/// Complex number over the generic real scalar.
pub type Cx<T> = Complex<T>;

/// Convert an `f64` literal into the generic scalar.
#[inline]
pub(crate) fn real<T: RealScalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Complex literal helper.
#[inline]
pub(crate) fn cx<T: RealScalar>(re: f64, im: f64) -> Cx<T> {
    Complex::new(real(re), real(im))
}

/// Largest singular value of a dense complex matrix.
///
/// Exact (SVD-based); used for residuals where the reported number matters.
pub(crate) fn spectral_norm<T: RealScalar>(m: &DMatrix<Cx<T>>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    let sv = m.clone().singular_values();
    let mut max = T::zero();
    for i in 0..sv.len() {
        if sv[i] > max {
            max = sv[i];
        }
    }
    max
}

/// Cheap upper bound on the spectral norm: sqrt(norm_1 * norm_inf).
///
/// Used when propagating error bounds through compositions, where an exact
/// SVD per product would dominate the runtime.
pub(crate) fn norm_bound<T: RealScalar>(m: &DMatrix<Cx<T>>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    let mut col_max = T::zero();
    for j in 0..m.ncols() {
        let mut s = T::zero();
        for i in 0..m.nrows() {
            s += m[(i, j)].modulus();
        }
        if s > col_max {
            col_max = s;
        }
    }
    let mut row_max = T::zero();
    for i in 0..m.nrows() {
        let mut s = T::zero();
        for j in 0..m.ncols() {
            s += m[(i, j)].modulus();
        }
        if s > row_max {
            row_max = s;
        }
    }
    (col_max * row_max).sqrt()
}

/// Max-entry modulus, for entrywise comparisons.
pub(crate) fn max_abs<T: RealScalar>(m: &DMatrix<Cx<T>>) -> T {
    let mut max = T::zero();
    for v in m.iter() {
        let a = v.modulus();
        if a > max {
            max = a;
        }
    }
    max
}

/// Numerical rank at a relative cutoff with floor-1 scale.
pub(crate) fn numerical_rank<T: RealScalar>(m: &DMatrix<Cx<T>>, tol: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    if sv.len() == 0 {
        return 0;
    }
    let scale = sv[0].max(T::one());
    let cutoff = tol * scale;
    (0..sv.len()).filter(|&i| sv[i] > cutoff).count()
}
