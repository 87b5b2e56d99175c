//! Representations of almost-invariant subspaces as ranges of partial
//! isometries built from Toeplitz operators: `M = R(T_Theta)` and
//! `M = R(T_Phi (I - T_Theta T_Theta^*))`, their theorem-specified minimal
//! defect spaces, complement representations and nearly-invariance criteria.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::invariance::{almost_defect, nearly_defect, DefectReport};
use crate::operators::TruncatedOp;
use crate::scalar::{real, Cx, RealScalar};
use crate::subspaces::Subspace;
use crate::symbols::LaurentSymbol;
use crate::Tolerances;

/// Which of the two range representations a spec describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepFlavor {
    /// `M = R(T_Theta)` for an inner `Theta`.
    RangeOfInner,
    /// `M = R(T_Phi (I - T_Theta T_Theta^*))` for inner pure `Theta` and
    /// analytic `Phi` making the product a partial isometry.
    PhiModel,
}

/// Declarative description of a representation.
#[derive(Clone, Debug)]
pub struct RepSpec<T: RealScalar> {
    pub phi: LaurentSymbol<T>,
    pub theta: LaurentSymbol<T>,
    pub order: usize,
    pub flavor: RepFlavor,
}

impl<T: RealScalar> RepSpec<T> {
    /// Spec for `M = R(T_Theta)`.
    pub fn range_of_inner(theta: LaurentSymbol<T>, order: usize) -> Self {
        let phi = LaurentSymbol::identity(theta.rows());
        RepSpec { phi, theta, order, flavor: RepFlavor::RangeOfInner }
    }

    /// Spec for `M = R(T_Phi (I - T_Theta T_Theta^*))`; the dimension chain
    /// `E -> E1 -> F` must be consistent.
    pub fn phi_model(phi: LaurentSymbol<T>, theta: LaurentSymbol<T>, order: usize) -> Result<Self> {
        if phi.cols() != theta.rows() {
            return Err(Error::DimensionMismatch {
                context: "rep spec chain (Phi.cols = Theta.rows)",
                left: phi.cols(),
                right: theta.rows(),
            });
        }
        Ok(RepSpec { phi, theta, order, flavor: RepFlavor::PhiModel })
    }

    /// Same symbols at a different truncation order.
    pub fn at_order(&self, order: usize) -> Self {
        RepSpec { order, ..self.clone() }
    }

    /// Fiber dimension of the space `M` lives in.
    pub fn dim_f(&self) -> usize {
        match self.flavor {
            RepFlavor::RangeOfInner => self.theta.rows(),
            RepFlavor::PhiModel => self.phi.rows(),
        }
    }
}

/// Residual of `K^* K - (I - T_Theta T_Theta^*)` on the trusted window.
#[derive(Clone, Copy, Debug)]
pub struct PartialIsometryReport<T: RealScalar> {
    pub residual: T,
    pub threshold: T,
    pub passed: bool,
}

/// A built representation: the subspace, the representing operator and the
/// partial-isometry certificate.
#[derive(Clone, Debug)]
pub struct Representation<T: RealScalar> {
    pub spec: RepSpec<T>,
    pub subspace: Subspace<T>,
    /// `K = T_Phi (I - T_Theta T_Theta^*)` (or `T_Theta` for the range
    /// flavor).
    pub op: TruncatedOp<T>,
    /// `I - T_Theta T_Theta^*` (identity for the range flavor).
    pub model_proj: TruncatedOp<T>,
    pub iso: PartialIsometryReport<T>,
}

/// The compression `I - T_Theta,N T_Theta,N^*` of the model-space projector.
///
/// For analytic `Theta` with band below the order this matrix is entrywise
/// equal to `P_N (I - T_Theta T_Theta^*) P_N`, the compression of a rank-
/// `dim K_Theta` projection, so it is declared window-supported: exact as
/// stored, no reach beyond the window.
pub fn model_projector<T: RealScalar>(
    theta: &LaurentSymbol<T>,
    order: usize,
    tols: &Tolerances<T>,
) -> Result<TruncatedOp<T>> {
    let cert = theta.check_inner(tols.inner)?;
    if !cert.passes(tols.inner) {
        return Err(Error::NotInner {
            residual: cert.left_inner_residual.to_f64().unwrap_or(f64::NAN),
            tol: tols.inner.to_f64().unwrap_or(f64::NAN),
        });
    }
    let a = TruncatedOp::toeplitz(theta, order)?;
    let p = TruncatedOp::sub(
        &TruncatedOp::identity(order, theta.rows()),
        &TruncatedOp::compose(&a, &a.adjoint())?,
    )?;
    Ok(p.into_window_op())
}

/// The model space `K_Theta = H^2 (-) Theta H^2` as the numerical range of
/// `I - T_Theta T_Theta^*`, with the rank determined on the trusted window
/// (input degrees `<= N - 1 - band(Theta)`).
pub fn model_space<T: RealScalar>(
    theta: &LaurentSymbol<T>,
    order: usize,
    tols: &Tolerances<T>,
) -> Result<Subspace<T>> {
    let p = model_projector(theta, order, tols)?;
    let window = order - theta.band();
    let cols = p.matrix().columns(0, window * theta.rows()).into_owned();
    Subspace::from_columns(order, theta.rows(), &cols, tols.rank)
}

/// Build the subspace `M` of a rep spec together with the partial-isometry
/// certificate comparing `K^* K` against `I - T_Theta T_Theta^*`.
///
/// The `phi_model` flavor requires `Theta` inner and pure; when `Phi` is
/// merely contractive-analytic the construction still runs and the report
/// decides validity (invalid specs are reported, not repaired).
pub fn build_rep<T: RealScalar>(
    spec: &RepSpec<T>,
    tols: &Tolerances<T>,
) -> Result<Representation<T>> {
    if !spec.phi.is_analytic() {
        return Err(Error::NotAnalytic { n_min: spec.phi.n_min() });
    }
    let cert = spec.theta.check_inner(tols.inner)?;
    if !cert.passes(tols.inner) {
        return Err(Error::NotInner {
            residual: cert.left_inner_residual.to_f64().unwrap_or(f64::NAN),
            tol: tols.inner.to_f64().unwrap_or(f64::NAN),
        });
    }
    let hundred = real::<T>(100.0);
    match spec.flavor {
        RepFlavor::RangeOfInner => {
            let k = TruncatedOp::toeplitz(&spec.theta, spec.order)?;
            let subspace = Subspace::from_range(&k, tols.rank);
            let eye = TruncatedOp::identity(spec.order, spec.theta.cols());
            // T_Theta is an exact isometry on the safe window
            let gram = TruncatedOp::compose(&k.adjoint(), &k)?;
            let (residual, _) = TruncatedOp::windowed_diff(&gram, &eye)?;
            let threshold = hundred * gram.err_bound() + tols.isometry;
            Ok(Representation {
                spec: spec.clone(),
                subspace,
                op: k,
                model_proj: eye,
                iso: PartialIsometryReport { residual, threshold, passed: residual <= threshold },
            })
        }
        RepFlavor::PhiModel => {
            if !cert.is_pure() {
                return Err(Error::NotPure { rank: cert.unitary_part_rank });
            }
            let p = model_projector(&spec.theta, spec.order, tols)?;
            let k = TruncatedOp::compose(&TruncatedOp::toeplitz(&spec.phi, spec.order)?, &p)?;
            let subspace = Subspace::from_range(&k, tols.rank);
            let gram = TruncatedOp::compose(&k.adjoint(), &k)?;
            let (residual, _) = TruncatedOp::windowed_diff(&gram, &p)?;
            let err = gram.err_bound() + p.err_bound();
            let threshold = hundred * err + tols.isometry;
            Ok(Representation {
                spec: spec.clone(),
                subspace,
                op: k,
                model_proj: p,
                iso: PartialIsometryReport { residual, threshold, passed: residual <= threshold },
            })
        }
    }
}

/// Defect of `M` from a theorem formula, cross-checked against the generic
/// rank computation.
#[derive(Clone, Debug)]
pub struct TheoremDefect<T: RealScalar> {
    /// Defect value read off the theorem.
    pub theorem_value: usize,
    /// Minimal defect space from the quoted formula.
    pub w_formula: Subspace<T>,
    /// Its orthogonal version `(I - P_M) W` (the minimal orthogonal defect
    /// space the generic computation produces).
    pub w_orth: Subspace<T>,
    /// Generic `rank((I - P_M) T P_M)` computation.
    pub cross: DefectReport<T>,
    /// Integer equality of theorem value and generic rank.
    pub values_match: bool,
    /// Subspace residual between `w_orth` and the generic defect space.
    pub space_residual: T,
}

fn orthogonalize_against<T: RealScalar>(w: &Subspace<T>, m: &Subspace<T>, tol: T) -> Subspace<T> {
    if w.dim() == 0 {
        return w.clone();
    }
    let cols = m.project_out(w.basis());
    Subspace::from_columns(w.order(), w.fiber_dim(), &cols, tol).expect("ambient is consistent")
}

fn compare_spaces<T: RealScalar>(a: &Subspace<T>, b: &Subspace<T>) -> T {
    if a.dim() != b.dim() {
        return T::one();
    }
    match a.equal_within(b, T::one()) {
        Ok((_, res)) => res,
        Err(_) => T::one(),
    }
}

/// Backward-shift defect of `M` from the representation theorems:
/// `dim E - rank(U)` with `W = R(S^* T_Theta P_E)` for `M = R(T_Theta)`, and
/// `W = R(S^* T_Phi P_{E1}) (-) [R(S^* T_Phi P_{E1}) cap M]` for the
/// `phi_model` flavor. Cross-asserted against the generic rank computation.
pub fn defect_thm_main<T: RealScalar>(
    rep: &Representation<T>,
    tols: &Tolerances<T>,
) -> Result<TheoremDefect<T>> {
    let spec = &rep.spec;
    let order = spec.order;
    let f = spec.dim_f();
    let backshift = TruncatedOp::backshift(order, f);
    let cross = almost_defect(&backshift, &rep.subspace, tols.rank)?;
    let (theorem_value, w_formula) = match spec.flavor {
        RepFlavor::RangeOfInner => {
            let cert = spec.theta.check_inner(tols.inner)?;
            let value = spec.theta.cols() - cert.unitary_part_rank;
            let x = TruncatedOp::compose(
                &backshift,
                &TruncatedOp::compose(
                    &TruncatedOp::toeplitz(&spec.theta, order)?,
                    &TruncatedOp::proj_const(order, spec.theta.cols()),
                )?,
            )?;
            (value, Subspace::from_range(&x, tols.rank))
        }
        RepFlavor::PhiModel => {
            let x = TruncatedOp::compose(
                &backshift,
                &TruncatedOp::compose(
                    &TruncatedOp::toeplitz(&spec.phi, order)?,
                    &TruncatedOp::proj_const(order, spec.phi.cols()),
                )?,
            )?;
            let rx = Subspace::from_range(&x, tols.rank);
            let w = rx.rel_complement(&rep.subspace, tols.angle)?;
            (w.dim(), w)
        }
    };
    let w_orth = orthogonalize_against(&w_formula, &rep.subspace, tols.rank);
    let space_residual = compare_spaces(&w_orth, &cross.defect_space);
    Ok(TheoremDefect {
        values_match: theorem_value == cross.defect,
        theorem_value,
        w_formula,
        w_orth,
        cross,
        space_residual,
    })
}

/// Forward-shift defect from the theorems: `0` for `M = R(T_Theta)`, and
/// `W = R(T_Phi T_Theta P_E) (-) [R(T_Phi T_Theta P_E) cap M]` for the
/// `phi_model` flavor. Cross-asserted against the generic rank computation.
pub fn defect_thm_main2<T: RealScalar>(
    rep: &Representation<T>,
    tols: &Tolerances<T>,
) -> Result<TheoremDefect<T>> {
    let spec = &rep.spec;
    let order = spec.order;
    let f = spec.dim_f();
    let shift = TruncatedOp::shift(order, f);
    let cross = almost_defect(&shift, &rep.subspace, tols.rank)?;
    let (theorem_value, w_formula) = match spec.flavor {
        RepFlavor::RangeOfInner => (0, Subspace::zero(order, f, tols.rank)),
        RepFlavor::PhiModel => {
            let x = TruncatedOp::compose(
                &TruncatedOp::toeplitz(&spec.phi, order)?,
                &TruncatedOp::compose(
                    &TruncatedOp::toeplitz(&spec.theta, order)?,
                    &TruncatedOp::proj_const(order, spec.theta.cols()),
                )?,
            )?;
            let rx = Subspace::from_range(&x, tols.rank);
            let w = rx.rel_complement(&rep.subspace, tols.angle)?;
            (w.dim(), w)
        }
    };
    let w_orth = orthogonalize_against(&w_formula, &rep.subspace, tols.rank);
    let space_residual = compare_spaces(&w_orth, &cross.defect_space);
    Ok(TheoremDefect {
        values_match: theorem_value == cross.defect,
        theorem_value,
        w_formula,
        w_orth,
        cross,
        space_residual,
    })
}

/// Complement representation `M^perp = R(T_{Phi Theta}) (+) K_Phi`, together
/// with the re-representation through `Phi_1 = [Phi Theta, I_F]` and
/// `Theta_1 = [0; Phi]`.
#[derive(Clone, Debug)]
pub struct PerpRep<T: RealScalar> {
    pub mperp_direct: Subspace<T>,
    pub phi1: LaurentSymbol<T>,
    pub theta1: LaurentSymbol<T>,
    /// Residual of `R(T_{Phi Theta}) (+) K_Phi` against `M^perp`.
    pub complement_residual: T,
    /// Residual of the rebuilt representation against `M^perp`; absent when
    /// `Phi` has a unitary part (then `Theta_1 = [0; Phi]` is not pure and
    /// the rebuilt spec is out of scope).
    pub rep_residual: Option<T>,
    pub passed: bool,
}

pub fn perp_rep<T: RealScalar>(
    rep: &Representation<T>,
    tols: &Tolerances<T>,
) -> Result<PerpRep<T>> {
    let spec = &rep.spec;
    if spec.flavor != RepFlavor::PhiModel {
        return Err(Error::InvalidParameter("perp_rep applies to the phi_model flavor".into()));
    }
    let cert = spec.phi.check_inner(tols.inner)?;
    if !cert.passes(tols.inner) {
        return Err(Error::NotInner {
            residual: cert.left_inner_residual.to_f64().unwrap_or(f64::NAN),
            tol: tols.inner.to_f64().unwrap_or(f64::NAN),
        });
    }
    let order = spec.order;
    let product = LaurentSymbol::multiply(&spec.phi, &spec.theta)?;
    let range_part = Subspace::from_range(&TruncatedOp::toeplitz(&product, order)?, tols.rank);
    let k_phi = model_space(&spec.phi, order, tols)?;
    let mperp_direct = range_part.sum(&k_phi)?;
    let complement = rep.subspace.orth_complement();
    let (_, complement_residual) = mperp_direct.equal_within(&complement, tols.angle)?;
    let mut passed =
        complement_residual <= tols.angle && mperp_direct.dim() == complement.dim();

    let phi1 = LaurentSymbol::block_row(&[product, LaurentSymbol::identity(spec.phi.rows())])?;
    let theta1 = LaurentSymbol::block_col(&[
        LaurentSymbol::zero(spec.theta.cols(), spec.phi.cols()),
        spec.phi.clone(),
    ])?;
    let rep_residual = if cert.is_pure() {
        let rep1 = build_rep(&RepSpec::phi_model(phi1.clone(), theta1.clone(), order)?, tols)?;
        let (_, res) = rep1.subspace.equal_within(&complement, tols.angle)?;
        passed = passed
            && res <= tols.angle
            && rep1.iso.passed
            && rep1.subspace.dim() == complement.dim();
        Some(res)
    } else {
        None
    };
    Ok(PerpRep { mperp_direct, phi1, theta1, complement_residual, rep_residual, passed })
}

/// Nearly-invariance criterion: `rank Phi(0) = dim E1` (or
/// `rank Theta(0) = dim F` for the range flavor), cross-checked against a
/// vanishing nearly-invariance defect.
#[derive(Clone, Debug)]
pub struct NearlyReport<T: RealScalar> {
    pub rank_at_zero: usize,
    pub required: usize,
    pub criterion: bool,
    pub nearly: DefectReport<T>,
    pub consistent: bool,
}

pub fn nearly_criterion<T: RealScalar>(
    rep: &Representation<T>,
    tols: &Tolerances<T>,
) -> Result<NearlyReport<T>> {
    let spec = &rep.spec;
    let origin = Cx::new(T::zero(), T::zero());
    let (at_zero, required) = match spec.flavor {
        RepFlavor::RangeOfInner => (spec.theta.evaluate(origin)?, spec.theta.rows()),
        RepFlavor::PhiModel => (spec.phi.evaluate(origin)?, spec.phi.cols()),
    };
    let rank_at_zero = crate::scalar::numerical_rank(&at_zero, tols.rank);
    let criterion = rank_at_zero == required;
    let nearly = nearly_defect(&rep.subspace, tols.rank, tols.angle)?;
    let consistent = criterion == (nearly.defect == 0);
    Ok(NearlyReport { rank_at_zero, required, criterion, nearly, consistent })
}

/// Defect stability across two orders, and the forward/backward equivalence.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub order: usize,
    pub comparison_order: usize,
    /// `varsigma(S, M)` at the two orders.
    pub shift_defects: (usize, usize),
    /// `varsigma(S^*, M)` at the two orders.
    pub backshift_defects: (usize, usize),
    pub shift_stable: bool,
    pub backshift_stable: bool,
    /// Both sides stable or both unstable.
    pub consistent: bool,
}

/// Computes `varsigma(S, M)` and `varsigma(S^*, M)` at the spec's order and
/// at a comparison order; stability across orders is the operational meaning
/// of almost invariance at finite truncation.
pub fn equivalence_check<T: RealScalar>(
    spec: &RepSpec<T>,
    comparison_order: usize,
    tols: &Tolerances<T>,
) -> Result<EquivalenceReport> {
    let mut shift_defects = (0usize, 0usize);
    let mut backshift_defects = (0usize, 0usize);
    for (slot, order) in [(0usize, spec.order), (1, comparison_order)] {
        let rep = build_rep(&spec.at_order(order), tols)?;
        let f = spec.dim_f();
        let s = almost_defect(&TruncatedOp::shift(order, f), &rep.subspace, tols.rank)?.defect;
        let b = almost_defect(&TruncatedOp::backshift(order, f), &rep.subspace, tols.rank)?.defect;
        if slot == 0 {
            shift_defects.0 = s;
            backshift_defects.0 = b;
        } else {
            shift_defects.1 = s;
            backshift_defects.1 = b;
        }
    }
    let shift_stable = shift_defects.0 == shift_defects.1;
    let backshift_stable = backshift_defects.0 == backshift_defects.1;
    Ok(EquivalenceReport {
        order: spec.order,
        comparison_order,
        shift_defects,
        backshift_defects,
        shift_stable,
        backshift_stable,
        consistent: shift_stable == backshift_stable,
    })
}

/// Heuristic classification of the dimension-growth table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Growth {
    Stabilizing,
    Growing,
}

/// Dimension of `M` per truncation order; a finite-dimensional candidate
/// stabilizes once the symbol degree fits the window. Explicitly a
/// heuristic: finite truncations cannot decide half-space status.
#[derive(Clone, Debug)]
pub struct GrowthTable {
    pub rows: Vec<(usize, usize)>,
    pub classification: Growth,
    pub note: &'static str,
}

pub fn halfspace_probe<T: RealScalar>(
    spec: &RepSpec<T>,
    orders: &[usize],
    tols: &Tolerances<T>,
) -> Result<GrowthTable> {
    if orders.len() < 2 {
        return Err(Error::InvalidParameter("halfspace probe needs at least two orders".into()));
    }
    let mut rows = Vec::with_capacity(orders.len());
    for &order in orders {
        let dim = match spec.flavor {
            // dim M = dim K_Theta through the window when Phi is isometric
            RepFlavor::PhiModel => {
                if spec.phi.band() == 0 && spec.phi.rows() == spec.phi.cols() {
                    model_space(&spec.theta, order, tols)?.dim()
                } else {
                    build_rep(&spec.at_order(order), tols)?.subspace.dim()
                }
            }
            RepFlavor::RangeOfInner => build_rep(&spec.at_order(order), tols)?.subspace.dim(),
        };
        rows.push((order, dim));
    }
    let last = rows[rows.len() - 1].1;
    let prev = rows[rows.len() - 2].1;
    let classification = if last == prev { Growth::Stabilizing } else { Growth::Growing };
    Ok(GrowthTable {
        rows,
        classification,
        note: "heuristic: rank growth across finite orders cannot decide half-space status",
    })
}

/// Two-sided inner check: `R(H_{Theta^*}^*) = K_Theta` and the
/// partial-isometry identity `H_{Theta^*}^* H_{Theta^*} = I - T_Theta
/// T_Theta^*` (the form the multiplication formula yields; the paper's
/// inline display writes `H_{Theta^*}^* H_{Theta}^*` there, which does not
/// typecheck).
#[derive(Clone, Debug)]
pub struct TwoSidedReport<T: RealScalar> {
    pub range_residual: T,
    pub identity_residual: T,
    pub identity_threshold: T,
    pub passed: bool,
}

pub fn two_sided_model_check<T: RealScalar>(
    theta: &LaurentSymbol<T>,
    order: usize,
    tols: &Tolerances<T>,
) -> Result<TwoSidedReport<T>> {
    let cert = theta.check_inner(tols.inner)?;
    if !cert.is_two_sided(tols.inner) {
        return Err(Error::NotTwoSided);
    }
    let h = TruncatedOp::hankel(&theta.star(), order)?;
    let range = Subspace::from_range(&h.adjoint(), tols.rank);
    let k_theta = model_space(theta, order, tols)?;
    let (_, range_residual) = range.equal_within(&k_theta, tols.angle)?;

    let lhs = TruncatedOp::compose(&h.adjoint(), &h)?;
    let a = TruncatedOp::toeplitz(theta, order)?;
    let rhs = TruncatedOp::sub(
        &TruncatedOp::identity(order, theta.rows()),
        &TruncatedOp::compose(&a, &a.adjoint())?,
    )?;
    let (identity_residual, _) = TruncatedOp::windowed_diff(&lhs, &rhs)?;
    let err = lhs.err_bound() + rhs.err_bound();
    let identity_threshold = real::<T>(100.0) * err + tols.isometry;
    let passed = range_residual <= tols.angle && identity_residual <= identity_threshold;
    Ok(TwoSidedReport { range_residual, identity_residual, identity_threshold, passed })
}

/// Rank of `P_{E1} (I - T_Theta T_Theta^*)`: full `dim E1` for every pure
/// inner `Theta` (the claim the main representation theorem rests on).
pub fn constant_block_rank<T: RealScalar>(
    theta: &LaurentSymbol<T>,
    order: usize,
    tols: &Tolerances<T>,
) -> Result<usize> {
    let p = model_projector(theta, order, tols)?;
    let compressed = TruncatedOp::compose(&TruncatedOp::proj_const(order, theta.rows()), &p)?;
    Ok(Subspace::from_range(&compressed, tols.rank).dim())
}
