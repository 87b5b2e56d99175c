//! Reproducing kernels of the represented subspaces and their complements,
//! cross-checked against projector-applied Szego kernel vectors.
//!
//! Kernel formulas (for `|z|, |w|` inside the certified disk):
//! `K_M(z,w) = Phi(z)(I_{E1} - Theta(z)Theta(w)^*)Phi(w)^* / (1 - z conj(w))`
//! and its complement with `I_F - ...` in the numerator. The `I_{E1}` in the
//! numerator is the dimensionally consistent choice.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::representations::{RepFlavor, RepSpec, Representation};
use crate::scalar::{real, Cx, RealScalar};
use crate::symbols::LaurentSymbol;
use crate::Tolerances;

const DISK_RADIUS: f64 = 0.95;

fn check_disk<T: RealScalar>(z: Cx<T>) -> Result<()> {
    let m = z.modulus();
    if m > real(DISK_RADIUS) {
        return Err(Error::OutsideDisk { modulus: m.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// Coefficient stack of the Szego kernel vector `k_w(z) c`: coefficients
/// `conj(w)^k c` for `k = 0..N-1`. Refuses when the geometric tail at the
/// order exceeds 1e-8.
pub fn szego_vector<T: RealScalar>(
    w: Cx<T>,
    c: &DVector<Cx<T>>,
    order: usize,
) -> Result<DVector<Cx<T>>> {
    check_disk(w)?;
    let tail = szego_tail(w, order);
    if tail > real(1e-8) {
        return Err(Error::SzegoTail { tail: tail.to_f64().unwrap_or(f64::NAN) });
    }
    let dim = c.len();
    let mut out = DVector::zeros(order * dim);
    let wbar = w.conjugate();
    let mut pow = Cx::new(T::one(), T::zero());
    for k in 0..order {
        for i in 0..dim {
            out[k * dim + i] = pow * c[i];
        }
        pow *= wbar;
    }
    Ok(out)
}

/// Geometric tail `|w|^N / (1 - |w|)` of the Szego expansion at the order.
pub fn szego_tail<T: RealScalar>(w: Cx<T>, order: usize) -> T {
    let r = w.modulus();
    if r == T::zero() {
        return T::zero();
    }
    r.powi(order as i32) / (T::one() - r)
}

/// Kernel of `M` at `(z, w)`: a `dim F x dim F` matrix.
pub fn kernel_m<T: RealScalar>(
    spec: &RepSpec<T>,
    z: Cx<T>,
    w: Cx<T>,
) -> Result<DMatrix<Cx<T>>> {
    check_disk(z)?;
    check_disk(w)?;
    let denom = Cx::new(T::one(), T::zero()) - z * w.conjugate();
    match spec.flavor {
        RepFlavor::RangeOfInner => {
            let tz = spec.theta.evaluate(z)?;
            let tw = spec.theta.evaluate(w)?;
            Ok((tz * tw.adjoint()).map(|v| v / denom))
        }
        RepFlavor::PhiModel => {
            let pz = spec.phi.evaluate(z)?;
            let pw = spec.phi.evaluate(w)?;
            let tz = spec.theta.evaluate(z)?;
            let tw = spec.theta.evaluate(w)?;
            let eye = DMatrix::identity(spec.phi.cols(), spec.phi.cols());
            let mid = eye - tz * tw.adjoint();
            Ok((pz * mid * pw.adjoint()).map(|v| v / denom))
        }
    }
}

/// Kernel of `M^perp` at `(z, w)`; `kernel_m + kernel_mperp` is the Szego
/// kernel `I_F / (1 - z conj(w))` exactly in exact arithmetic.
pub fn kernel_mperp<T: RealScalar>(
    spec: &RepSpec<T>,
    z: Cx<T>,
    w: Cx<T>,
) -> Result<DMatrix<Cx<T>>> {
    let denom = Cx::new(T::one(), T::zero()) - z * w.conjugate();
    let dim = spec.dim_f();
    let szego = DMatrix::<Cx<T>>::identity(dim, dim).map(|v| v / denom);
    Ok(szego - kernel_m(spec, z, w)?)
}

/// Coefficient stack of `(A v) k_w` truncated at the order: the geometric
/// series in `conj(w)` convolved with the symbol-vector coefficients.
fn symbol_vector_szego<T: RealScalar>(
    a: &LaurentSymbol<T>,
    v: &DVector<Cx<T>>,
    w: Cx<T>,
    order: usize,
) -> DVector<Cx<T>> {
    let dim = a.rows();
    let mut out = DVector::zeros(order * dim);
    let wbar = w.conjugate();
    let n_max = a.n_max().min(order as i64 - 1);
    for i in 0..=n_max.max(0) {
        if i > a.n_max() || i < a.n_min() {
            continue;
        }
        let ui = a.coeff(i) * v;
        // u_i contributes u_i * conj(w)^{j-i} to coefficient j >= i
        let mut pow = Cx::new(T::one(), T::zero());
        for j in i as usize..order {
            for r in 0..dim {
                out[j * dim + r] += ui[r] * pow;
            }
            pow *= wbar;
        }
    }
    out
}

/// Outcome of the kernel-vs-projector cross-check.
#[derive(Clone, Debug)]
pub struct KernelConsistency<T: RealScalar> {
    /// Relative residual between the coefficient expansion of the kernel
    /// and the projector-applied Szego vector.
    pub residual: T,
    /// Certified geometric tail folded into the check.
    pub tail: T,
    pub passed: bool,
}

/// Expand `K_M(., w) c` (or the complement kernel) in coefficients and
/// compare with the projector applied to the Szego vector.
pub fn kernel_consistency<T: RealScalar>(
    rep: &Representation<T>,
    w: Cx<T>,
    c: &DVector<Cx<T>>,
    complement: bool,
    tol: T,
    _tols: &Tolerances<T>,
) -> Result<KernelConsistency<T>> {
    let spec = &rep.spec;
    let order = spec.order;
    let dim = spec.dim_f();
    if c.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "kernel direction vector",
            left: c.len(),
            right: dim,
        });
    }
    let szego = szego_vector(w, c, order)?;
    let tail = szego_tail(w, order);

    // route 1: coefficient expansion of the kernel formula
    let m_side = match spec.flavor {
        RepFlavor::RangeOfInner => {
            let tw = spec.theta.evaluate(w)?;
            let v0 = tw.adjoint() * c;
            symbol_vector_szego(&spec.theta, &v0, w, order)
        }
        RepFlavor::PhiModel => {
            let pw = spec.phi.evaluate(w)?;
            let v0 = pw.adjoint() * c;
            let tw = spec.theta.evaluate(w)?;
            let w1 = tw.adjoint() * &v0;
            let product = LaurentSymbol::multiply(&spec.phi, &spec.theta)?;
            symbol_vector_szego(&spec.phi, &v0, w, order)
                - symbol_vector_szego(&product, &w1, w, order)
        }
    };
    let route1 = if complement { &szego - &m_side } else { m_side };

    // route 2: projector applied to the Szego vector
    let projected = rep.subspace.project(&DMatrix::from_column_slice(
        szego.len(),
        1,
        szego.as_slice(),
    ));
    let route2_col = if complement {
        &szego - DVector::from_column_slice(projected.as_slice())
    } else {
        DVector::from_column_slice(projected.as_slice())
    };

    let diff = &route1 - &route2_col;
    let scale = route2_col.norm().max(real(1e-30));
    let residual = diff.norm() / scale;
    Ok(KernelConsistency { residual, tail, passed: residual <= tol })
}
