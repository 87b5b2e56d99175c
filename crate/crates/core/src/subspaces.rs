//! Numerical lattice of subspaces of the truncated Hardy space: ranges,
//! kernels, sums, intersections, relative orthocomplements, containment,
//! projectors and principal angles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::TruncatedOp;
use crate::scalar::{real, spectral_norm, Cx, RealScalar};

/// An ambient descriptor `(order N, fiber dim d)` plus an orthonormal basis
/// matrix, together with the singular-value threshold that produced it.
#[derive(Clone, Debug)]
pub struct Subspace<T: RealScalar> {
    order: usize,
    dim: usize,
    basis: DMatrix<Cx<T>>,
    tol: T,
}

impl<T: RealScalar> Subspace<T> {
    /// The zero subspace.
    pub fn zero(order: usize, dim: usize, tol: T) -> Self {
        Subspace { order, dim, basis: DMatrix::zeros(order * dim, 0), tol }
    }

    /// The whole truncated space.
    pub fn full(order: usize, dim: usize, tol: T) -> Self {
        Subspace { order, dim, basis: DMatrix::identity(order * dim, order * dim), tol }
    }

    /// Span of the coordinate directions of degrees `>= k0` (e.g. `z H^2`
    /// for `k0 = 1`).
    pub fn span_degrees_from(order: usize, dim: usize, k0: usize, tol: T) -> Self {
        let n = order * dim;
        let k0 = k0.min(order);
        let mut basis = DMatrix::zeros(n, (order - k0) * dim);
        for (c, row) in (k0 * dim..n).enumerate() {
            basis[(row, c)] = Cx::new(T::one(), T::zero());
        }
        Subspace { order, dim, basis, tol }
    }

    /// Wrap an already-orthonormal basis (checked).
    pub fn from_orthonormal(order: usize, dim: usize, basis: DMatrix<Cx<T>>, tol: T) -> Result<Self> {
        if basis.nrows() != order * dim {
            return Err(Error::DimensionMismatch {
                context: "subspace basis",
                left: basis.nrows(),
                right: order * dim,
            });
        }
        let r = basis.ncols();
        if r > 0 {
            let gram = basis.adjoint() * &basis;
            let eye = DMatrix::identity(r, r);
            if spectral_norm(&(gram - eye)) > real(1e-10) {
                return Err(Error::InvalidParameter("basis columns are not orthonormal".into()));
            }
        }
        Ok(Subspace { order, dim, basis, tol })
    }

    /// Orthonormal basis of the numerical column space of `columns`.
    pub fn from_columns(order: usize, dim: usize, columns: &DMatrix<Cx<T>>, tol: T) -> Result<Self> {
        if columns.nrows() != order * dim {
            return Err(Error::DimensionMismatch {
                context: "subspace columns",
                left: columns.nrows(),
                right: order * dim,
            });
        }
        if columns.ncols() == 0 {
            return Ok(Self::zero(order, dim, tol));
        }
        let svd = columns.clone().svd(true, false);
        let sv = &svd.singular_values;
        let scale = if sv.len() > 0 { sv[0].max(T::one()) } else { T::one() };
        let cutoff = tol * scale;
        let mut r = 0;
        for i in 0..sv.len() {
            if sv[i] > cutoff {
                r += 1;
            }
        }
        let u = svd.u.expect("svd with left vectors");
        let basis = u.columns(0, r).into_owned();
        Ok(Subspace { order, dim, basis, tol })
    }

    /// Orthonormal basis of the numerical column space of an operator:
    /// left singular vectors with singular value above `tol * max(sigma_0, 1)`.
    pub fn from_range(op: &TruncatedOp<T>, tol: T) -> Self {
        Self::from_columns(op.order(), op.dim_out(), op.matrix(), tol)
            .expect("operator matrix shape is consistent by construction")
    }

    /// Numerical kernel, computed as the orthocomplement of the range of the
    /// adjoint (`N(T) = R(T^*)^perp`).
    pub fn kernel(op: &TruncatedOp<T>, tol: T) -> Self {
        Self::from_range(&op.adjoint(), tol).orth_complement()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fiber_dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_len(&self) -> usize {
        self.order * self.dim
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn basis(&self) -> &DMatrix<Cx<T>> {
        &self.basis
    }

    pub fn same_ambient(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::AmbientMismatch(self.order, self.dim, other.order, other.dim));
        }
        Ok(())
    }

    /// Apply the orthogonal projection onto the subspace to a stack of
    /// columns.
    pub fn project(&self, columns: &DMatrix<Cx<T>>) -> DMatrix<Cx<T>> {
        if self.dim() == 0 {
            return DMatrix::zeros(columns.nrows(), columns.ncols());
        }
        &self.basis * (self.basis.adjoint() * columns)
    }

    /// Apply `I - P_M` to a stack of columns.
    pub fn project_out(&self, columns: &DMatrix<Cx<T>>) -> DMatrix<Cx<T>> {
        columns - self.project(columns)
    }

    /// Orthogonal projector as a window-supported operator (guard 0).
    pub fn projector(&self) -> TruncatedOp<T> {
        let n = self.ambient_len();
        let matrix = if self.dim() == 0 {
            DMatrix::zeros(n, n)
        } else {
            &self.basis * self.basis.adjoint()
        };
        TruncatedOp::from_matrix(matrix, self.order, self.dim, self.dim)
            .expect("projector shape is consistent")
    }

    /// Orthocomplement within the ambient space, via the Hermitian
    /// eigendecomposition of `I - Q Q^*` (its eigenvalues sit at 0 and 1, so
    /// the split is unambiguous).
    pub fn orth_complement(&self) -> Self {
        let n = self.ambient_len();
        if self.dim() == 0 {
            return Self::full(self.order, self.dim, self.tol);
        }
        if self.dim() == n {
            return Self::zero(self.order, self.dim, self.tol);
        }
        let p = DMatrix::identity(n, n) - &self.basis * self.basis.adjoint();
        let eig = p.symmetric_eigen();
        let half = real::<T>(0.5);
        let mut cols = Vec::new();
        for i in 0..n {
            if eig.eigenvalues[i] > half {
                cols.push(eig.eigenvectors.column(i).into_owned());
            }
        }
        let basis = DMatrix::from_columns(&cols);
        Subspace { order: self.order, dim: self.dim, basis, tol: self.tol }
    }

    /// Column space of the concatenation.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.same_ambient(other)?;
        if self.dim() == 0 {
            return Ok(other.clone());
        }
        if other.dim() == 0 {
            return Ok(self.clone());
        }
        let mut cat = DMatrix::zeros(self.ambient_len(), self.dim() + other.dim());
        cat.view_mut((0, 0), (self.ambient_len(), self.dim())).copy_from(&self.basis);
        cat.view_mut((0, self.dim()), (self.ambient_len(), other.dim()))
            .copy_from(&other.basis);
        Self::from_columns(self.order, self.dim, &cat, self.tol)
    }

    /// Intersection via the projector-product spectral method: eigenvectors
    /// of `P_M P_L P_M` with eigenvalue above `1 - tol_angle`.
    pub fn intersect(&self, other: &Self, tol_angle: T) -> Result<Self> {
        self.same_ambient(other)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Self::zero(self.order, self.dim, self.tol));
        }
        // compress P_M P_L P_M onto the basis of M: B^* P_L B, r x r Hermitian
        let cross = self.basis.adjoint() * other.project(&self.basis);
        let eig = cross.symmetric_eigen();
        let threshold = T::one() - tol_angle;
        let mut cols = Vec::new();
        for i in 0..self.dim() {
            if eig.eigenvalues[i] > threshold {
                cols.push((&self.basis * eig.eigenvectors.column(i)).into_owned());
            }
        }
        if cols.is_empty() {
            return Ok(Self::zero(self.order, self.dim, self.tol));
        }
        let raw = DMatrix::from_columns(&cols);
        Self::from_columns(self.order, self.dim, &raw, self.tol)
    }

    /// Relative orthocomplement `M (-) L := M cap (M cap L)^perp`, computed
    /// by projecting the intersection out of `M`'s basis.
    pub fn rel_complement(&self, other: &Self, tol_angle: T) -> Result<Self> {
        self.same_ambient(other)?;
        let j = self.intersect(other, tol_angle)?;
        if j.dim() == 0 {
            return Ok(self.clone());
        }
        let residual = j.project_out(&self.basis);
        Self::from_columns(self.order, self.dim, &residual, self.tol)
    }

    /// Containment test: `L <= M` iff `|| (I - P_M) basis_L || <= tol`.
    pub fn contains(&self, other: &Self, tol: T) -> Result<(bool, T)> {
        self.same_ambient(other)?;
        if other.dim() == 0 {
            return Ok((true, T::zero()));
        }
        let residual = spectral_norm(&self.project_out(&other.basis));
        Ok((residual <= tol, residual))
    }

    /// Mutual containment at `tol`; the residual is the worse direction.
    pub fn equal_within(&self, other: &Self, tol: T) -> Result<(bool, T)> {
        let (a, ra) = self.contains(other, tol)?;
        let (b, rb) = other.contains(self, tol)?;
        Ok((a && b && self.dim() == other.dim(), ra.max(rb)))
    }

    /// Principal angles (radians, ascending) from the singular values of
    /// `basis_M^* basis_L`.
    pub fn principal_angles(&self, other: &Self) -> Result<Vec<T>> {
        self.same_ambient(other)?;
        let k = self.dim().min(other.dim());
        if k == 0 {
            return Ok(Vec::new());
        }
        let product = self.basis.adjoint() * &other.basis;
        let sv = product.singular_values();
        let mut angles: Vec<T> = (0..k)
            .map(|i| sv[i].min(T::one()).max(-T::one()).acos())
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
        Ok(angles)
    }

    /// Re-express in a rotated orthonormal basis of the same space (used by
    /// basis-invariance checks).
    pub fn with_rotated_basis(&self, unitary: &DMatrix<Cx<T>>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "basis rotation",
                left: unitary.nrows(),
                right: self.dim(),
            });
        }
        Ok(Subspace {
            order: self.order,
            dim: self.dim,
            basis: &self.basis * unitary,
            tol: self.tol,
        })
    }
}
