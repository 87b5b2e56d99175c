//! Almost-invariance defects, minimal orthogonal defect spaces,
//! nearly-invariance defects, duality and enlargement identities, and
//! absorption chains.
//!
//! The defect is computed as the numerical rank of `(I - P_M) T P_M`, which
//! agrees with the set-theoretic definition (`T M` inside `M + W` with `W`
//! finite dimensional, minimal `dim W`); the range of that operator is the
//! unique minimal orthogonal defect space.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::operators::TruncatedOp;
use crate::scalar::{Cx, RealScalar};
use crate::subspaces::Subspace;

/// Defect value, minimal orthogonal defect-space basis, and the residual
/// certifying it.
#[derive(Clone, Debug)]
pub struct DefectReport<T: RealScalar> {
    /// The defect (number of singular values above the rank cutoff).
    pub defect: usize,
    /// Orthonormal basis of the minimal orthogonal defect space.
    pub defect_space: Subspace<T>,
    /// Largest singular value left after removing the defect directions.
    pub residual: T,
    /// Guard bookkeeping of the operator the defect was computed under.
    pub window_guard: usize,
}

fn defect_matrix<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
) -> Result<DMatrix<Cx<T>>> {
    if op.order() != m.order() || op.dim_in() != m.fiber_dim() || op.dim_out() != m.fiber_dim() {
        return Err(Error::AmbientMismatch(
            op.order(),
            op.dim_in(),
            m.order(),
            m.fiber_dim(),
        ));
    }
    let image = op.apply(m.basis())?;
    Ok(m.project_out(&image))
}

fn rank_split<T: RealScalar>(
    cols: &DMatrix<Cx<T>>,
    order: usize,
    dim: usize,
    tol: T,
) -> (usize, Subspace<T>, T) {
    if cols.ncols() == 0 {
        return (0, Subspace::zero(order, dim, tol), T::zero());
    }
    let svd = cols.clone().svd(true, false);
    let sv = &svd.singular_values;
    let scale = if sv.len() > 0 { sv[0].max(T::one()) } else { T::one() };
    let cutoff = tol * scale;
    let mut rank = 0;
    for i in 0..sv.len() {
        if sv[i] > cutoff {
            rank += 1;
        }
    }
    let residual = if rank < sv.len() { sv[rank] } else { T::zero() };
    let u = svd.u.expect("svd with left vectors");
    let basis = u.columns(0, rank).into_owned();
    let space = Subspace::from_orthonormal(order, dim, basis, tol)
        .expect("singular vectors are orthonormal");
    (rank, space, residual)
}

/// Almost-invariance defect of `M` under `T`: the numerical rank of
/// `(I - P_M) T P_M` together with its range (the minimal orthogonal defect
/// space).
///
/// Refuses when the operator's guard eats half the window: at that point the
/// stored matrix carries too little trusted information for rank decisions.
pub fn almost_defect<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    tol: T,
) -> Result<DefectReport<T>> {
    if 2 * op.guard() >= op.order() {
        return Err(Error::GuardExhausted { guard: op.guard(), order: op.order() });
    }
    let d = defect_matrix(op, m)?;
    let (defect, defect_space, residual) = rank_split(&d, m.order(), m.fiber_dim(), tol);
    Ok(DefectReport { defect, defect_space, residual, window_guard: op.guard() })
}

/// Independent route to the minimal orthogonal defect space: column-pivoted
/// QR of `(I - P_M) T P_M` instead of an SVD. Used to exercise uniqueness.
pub fn minimal_defect_space_qr<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    tol: T,
) -> Result<Subspace<T>> {
    let d = defect_matrix(op, m)?;
    if d.ncols() == 0 {
        return Ok(Subspace::zero(m.order(), m.fiber_dim(), tol));
    }
    let qr = d.col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let scale = if k > 0 { r[(0, 0)].modulus().max(T::one()) } else { T::one() };
    let cutoff = tol * scale;
    let mut rank = 0;
    for i in 0..k {
        if r[(i, i)].modulus() > cutoff {
            rank += 1;
        }
    }
    let basis = q.columns(0, rank).into_owned();
    Subspace::from_orthonormal(m.order(), m.fiber_dim(), basis, tol)
}

/// Nearly-invariance defect: functions of `M` vanishing at 0 are mapped by
/// the backward shift into `M + G`; the report carries the minimal such `G`.
pub fn nearly_defect<T: RealScalar>(
    m: &Subspace<T>,
    tol_rank: T,
    tol_angle: T,
) -> Result<DefectReport<T>> {
    let (order, dim) = (m.order(), m.fiber_dim());
    let vanishing = Subspace::span_degrees_from(order, dim, 1, m.tol());
    let m1 = m.intersect(&vanishing, tol_angle)?;
    let backshift = TruncatedOp::backshift(order, dim);
    let image = backshift.apply(m1.basis())?;
    let out = m.project_out(&image);
    let (defect, defect_space, residual) = rank_split(&out, order, dim, tol_rank);
    Ok(DefectReport { defect, defect_space, residual, window_guard: 0 })
}

/// Defect duality: `varsigma(T, M)` against `varsigma(T^*, M^perp)`.
#[derive(Clone, Debug)]
pub struct DualityReport<T: RealScalar> {
    pub forward: DefectReport<T>,
    pub dual: DefectReport<T>,
    pub equal: bool,
}

/// Computes both defects of the duality lemma. At the level computed here
/// both equal the rank of `(I - P_M) T P_M`, so exact integer equality is
/// asserted by the caller.
pub fn duality_check<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    tol: T,
) -> Result<DualityReport<T>> {
    if op.dim_in() != op.dim_out() {
        return Err(Error::DimensionMismatch {
            context: "duality needs a square operator",
            left: op.dim_in(),
            right: op.dim_out(),
        });
    }
    let forward = almost_defect(op, m, tol)?;
    let dual = almost_defect(&op.adjoint(), &m.orth_complement(), tol)?;
    let equal = forward.defect == dual.defect;
    Ok(DualityReport { forward, dual, equal })
}

/// Outcome of the enlargement formula.
#[derive(Clone, Debug)]
pub struct EnlargedDefect {
    /// `dim(TW) - dim(TW cap (W + M))`.
    pub formula_value: usize,
    /// Defect of `M + W` recomputed from scratch.
    pub recomputed: usize,
    pub consistent: bool,
}

/// Enlargement formula: the defect of `M + W` equals
/// `dim(TW) - dim(TW cap (W + M))` when `W` is the minimal orthogonal defect
/// space of `(T, M)`. The supplied `W` is validated first.
pub fn enlarged_defect<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    w: &Subspace<T>,
    tol_rank: T,
    tol_angle: T,
    tol_contain: T,
) -> Result<EnlargedDefect> {
    let enlarged = m.sum(w)?;
    let image = op.apply(m.basis())?;
    let out = enlarged.project_out(&image);
    let leak = crate::scalar::spectral_norm(&out);
    if leak > tol_contain {
        return Err(Error::DefectSpace(format!(
            "T M is not inside M + W: residual {:.3e}",
            leak.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let tw_cols = op.apply(w.basis())?;
    let tw = Subspace::from_columns(m.order(), m.fiber_dim(), &tw_cols, tol_rank)?;
    let overlap = tw.intersect(&enlarged, tol_angle)?;
    let formula_value = tw.dim() - overlap.dim();
    let recomputed = almost_defect(op, &enlarged, tol_rank)?.defect;
    Ok(EnlargedDefect { formula_value, recomputed, consistent: formula_value == recomputed })
}

/// One step of an absorption chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainStep {
    pub subspace_dim: usize,
    pub defect: usize,
}

/// Iteratively enlarge `M` by `W, TW, T^2 W, ...` (with `W` the minimal
/// orthogonal defect space of `M`), reporting the defect at each stage.
/// The defects are nonincreasing along the chain.
pub fn absorption_chain<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    steps: usize,
    tol: T,
) -> Result<Vec<ChainStep>> {
    let first = almost_defect(op, m, tol)?;
    let mut chain = vec![ChainStep { subspace_dim: m.dim(), defect: first.defect }];
    let mut current = m.clone();
    let mut w_cols = first.defect_space.basis().clone();
    for _ in 0..steps {
        let w = Subspace::from_columns(m.order(), m.fiber_dim(), &w_cols, tol)?;
        current = current.sum(&w)?;
        let rep = almost_defect(op, &current, tol)?;
        chain.push(ChainStep { subspace_dim: current.dim(), defect: rep.defect });
        w_cols = op.apply(&w_cols)?;
    }
    Ok(chain)
}

/// The compact/finite-rank perturbation `T_0 = -(I - P_M) T P_M + P_M W_1 +
/// W_2 (I - P_M)`; at finite truncation compact and finite-rank coincide, so
/// this single synthesis represents all three equivalent notions.
pub fn essential_t0<T: RealScalar>(
    op: &TruncatedOp<T>,
    m: &Subspace<T>,
    w1: &TruncatedOp<T>,
    w2: &TruncatedOp<T>,
) -> Result<TruncatedOp<T>> {
    let p = m.projector();
    let eye = TruncatedOp::identity(m.order(), m.fiber_dim());
    let q = TruncatedOp::sub(&eye, &p)?;
    let core = TruncatedOp::compose(&q, &TruncatedOp::compose(op, &p)?)?
        .scale(Cx::new(-T::one(), T::zero()));
    let lhs = TruncatedOp::compose(&p, w1)?;
    let rhs = TruncatedOp::compose(w2, &q)?;
    TruncatedOp::add(&TruncatedOp::add(&core, &lhs)?, &rhs)
}
