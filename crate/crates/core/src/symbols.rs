//! Matrix-valued Laurent symbols stored as banded Fourier-coefficient
//! families.
//!
//! Coefficients are the source of truth for every operator matrix built
//! downstream; circle-grid sampling is only used as an oracle (in tests) and
//! for the sup-norm estimates that feed tail-bound propagation.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::scalar::{cx, max_abs, real, spectral_norm, Cx, RealScalar};

/// A matrix-valued function on the circle, stored as the family of Fourier
/// coefficients on a finite band `[n_min, n_max]`.
///
/// `tail_bound` is a certified bound on the sup-norm of the discarded
/// Fourier tail; it is zero exactly when the symbol is a genuine matrix
/// Laurent polynomial.
#[derive(Clone, Debug)]
pub struct LaurentSymbol<T: RealScalar> {
    rows: usize,
    cols: usize,
    n_min: i64,
    coeffs: Vec<DMatrix<Cx<T>>>,
    tail_bound: T,
}

impl<T: RealScalar> LaurentSymbol<T> {
    /// Build from an explicit coefficient family; `coeffs[i]` is the
    /// coefficient of `z^(n_min + i)`.
    pub fn from_coeffs(
        rows: usize,
        cols: usize,
        n_min: i64,
        coeffs: Vec<DMatrix<Cx<T>>>,
        tail_bound: T,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("symbol dimensions must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("coefficient family must be nonempty".into()));
        }
        if tail_bound < T::zero() {
            return Err(Error::InvalidParameter("tail bound must be nonnegative".into()));
        }
        for c in &coeffs {
            if c.nrows() != rows || c.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    context: "symbol coefficient shape",
                    left: c.nrows() * 10000 + c.ncols(),
                    right: rows * 10000 + cols,
                });
            }
        }
        let mut sym = LaurentSymbol { rows, cols, n_min, coeffs, tail_bound };
        sym.trim_exact_zeros();
        Ok(sym)
    }

    /// The zero symbol.
    pub fn zero(rows: usize, cols: usize) -> Self {
        LaurentSymbol {
            rows,
            cols,
            n_min: 0,
            coeffs: vec![DMatrix::zeros(rows, cols)],
            tail_bound: T::zero(),
        }
    }

    /// Constant symbol.
    pub fn constant(value: DMatrix<Cx<T>>) -> Self {
        LaurentSymbol {
            rows: value.nrows(),
            cols: value.ncols(),
            n_min: 0,
            coeffs: vec![value],
            tail_bound: T::zero(),
        }
    }

    /// The identity symbol on a `dim`-dimensional fiber.
    pub fn identity(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim))
    }

    /// The shift symbol `z * I_dim`.
    pub fn shift(dim: usize) -> Self {
        LaurentSymbol {
            rows: dim,
            cols: dim,
            n_min: 1,
            coeffs: vec![DMatrix::identity(dim, dim)],
            tail_bound: T::zero(),
        }
    }

    /// Scalar (1x1) symbol from a coefficient list starting at degree `n_min`.
    pub fn scalar(n_min: i64, values: &[Cx<T>], tail_bound: T) -> Result<Self> {
        let coeffs = values
            .iter()
            .map(|v| DMatrix::from_element(1, 1, *v))
            .collect();
        Self::from_coeffs(1, 1, n_min, coeffs, tail_bound)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.coeffs.len() as i64 - 1
    }

    /// Max of `|n_min|` and `n_max`: the truncation order must exceed this.
    pub fn band(&self) -> usize {
        let lo = self.n_min.unsigned_abs() as usize;
        let hi = if self.n_max() > 0 { self.n_max() as usize } else { 0 };
        lo.max(hi)
    }

    pub fn tail_bound(&self) -> T {
        self.tail_bound
    }

    /// A symbol is analytic when it carries no negative coefficients.
    pub fn is_analytic(&self) -> bool {
        self.n_min >= 0
    }

    /// Coefficient of `z^n` (zero matrix outside the stored band).
    pub fn coeff(&self, n: i64) -> DMatrix<Cx<T>> {
        if n < self.n_min || n > self.n_max() {
            DMatrix::zeros(self.rows, self.cols)
        } else {
            self.coeffs[(n - self.n_min) as usize].clone()
        }
    }

    fn coeff_ref(&self, n: i64) -> Option<&DMatrix<Cx<T>>> {
        if n < self.n_min || n > self.n_max() {
            None
        } else {
            Some(&self.coeffs[(n - self.n_min) as usize])
        }
    }

    /// Drop exactly-zero coefficient matrices at the band edges.
    fn trim_exact_zeros(&mut self) {
        while self.coeffs.len() > 1 && max_abs(self.coeffs.last().unwrap()) == T::zero() {
            self.coeffs.pop();
        }
        while self.coeffs.len() > 1 && max_abs(&self.coeffs[0]) == T::zero() {
            self.coeffs.remove(0);
            self.n_min += 1;
        }
    }

    /// Drop band-edge coefficients of sup norm at most `eps`, folding the
    /// dropped mass into the tail bound.
    pub fn trim_small(&mut self, eps: T) {
        let mut dropped = T::zero();
        while self.coeffs.len() > 1 {
            let norm = spectral_norm(self.coeffs.last().unwrap());
            if norm <= eps {
                dropped += norm;
                self.coeffs.pop();
            } else {
                break;
            }
        }
        while self.coeffs.len() > 1 {
            let norm = spectral_norm(&self.coeffs[0]);
            if norm <= eps {
                dropped += norm;
                self.coeffs.remove(0);
                self.n_min += 1;
            } else {
                break;
            }
        }
        self.tail_bound += dropped;
        self.trim_exact_zeros();
    }

    /// Scalar Blaschke factor `phi_a(z) = (z - a) / (1 - conj(a) z)`,
    /// truncated at the minimal degree whose geometric remainder is at most
    /// `eps_sym`.
    pub fn blaschke_factor(a: Cx<T>, eps_sym: T) -> Result<Self> {
        if eps_sym <= T::zero() {
            return Err(Error::InvalidParameter("eps_sym must be positive".into()));
        }
        let r = a.modulus();
        if r >= T::one() {
            return Err(Error::InvalidParameter(format!(
                "Blaschke parameter must satisfy |a| < 1, got |a| = {:?}",
                r.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let one = T::one();
        let head = (one - r * r) / (one - r);
        // minimal n_max with (1 - |a|^2) |a|^n_max / (1 - |a|) <= eps_sym
        let mut n_max = 1usize;
        let mut rem = head * r;
        while rem > eps_sym && n_max < 100_000 {
            n_max += 1;
            rem *= r;
        }
        let mut coeffs = Vec::with_capacity(n_max + 1);
        coeffs.push(DMatrix::from_element(1, 1, -a));
        let factor = Cx::new(one - r * r, T::zero());
        let abar = a.conjugate();
        let mut pow = Cx::new(one, T::zero());
        for _ in 1..=n_max {
            coeffs.push(DMatrix::from_element(1, 1, factor * pow));
            pow *= abar;
        }
        let tail = if r == T::zero() { T::zero() } else { rem };
        Self::from_coeffs(1, 1, 0, coeffs, tail)
    }

    /// Blaschke-Potapov factor `Q(z) = phi_a(z) (I - P_F) + P_F` for an
    /// orthogonal projection `P_F != I`.
    pub fn blaschke_potapov_factor(
        a: Cx<T>,
        proj: &DMatrix<Cx<T>>,
        eps_sym: T,
    ) -> Result<Self> {
        let d = proj.nrows();
        if proj.ncols() != d || d == 0 {
            return Err(Error::InvalidParameter("projection must be square".into()));
        }
        let tol = real::<T>(1e-12);
        let idem = max_abs(&(proj * proj - proj));
        let herm = max_abs(&(proj.adjoint() - proj));
        if idem > tol || herm > tol {
            return Err(Error::InvalidParameter(
                "proj is not an orthogonal projection (idempotent, self-adjoint within 1e-12)"
                    .into(),
            ));
        }
        let eye = DMatrix::<Cx<T>>::identity(d, d);
        if max_abs(&(proj - &eye)) <= tol {
            return Err(Error::InvalidParameter(
                "proj = I is rejected: the factor would be trivial".into(),
            ));
        }
        let phi = Self::blaschke_factor(a, eps_sym)?;
        let complement = &eye - proj;
        let mut coeffs = Vec::with_capacity(phi.coeffs.len());
        // degree 0: -a (I - P) + P, then phi_a(k) (I - P) for k >= 1
        coeffs.push(&complement * (-a) + proj);
        for k in 1..=phi.n_max() {
            let c = phi.coeff(k)[(0, 0)];
            coeffs.push(&complement * c);
        }
        Self::from_coeffs(d, d, 0, coeffs, phi.tail_bound)
    }

    /// Coefficient convolution `(AB)^(n) = sum_k A^(k) B^(n-k)`.
    pub fn multiply(a: &Self, b: &Self) -> Result<Self> {
        if a.cols != b.rows {
            return Err(Error::DimensionMismatch {
                context: "symbol product",
                left: a.cols,
                right: b.rows,
            });
        }
        let n_min = a.n_min + b.n_min;
        let n_max = a.n_max() + b.n_max();
        let len = (n_max - n_min + 1) as usize;
        let mut coeffs = vec![DMatrix::<Cx<T>>::zeros(a.rows, b.cols); len];
        for (i, ca) in a.coeffs.iter().enumerate() {
            let ka = a.n_min + i as i64;
            for (j, cb) in b.coeffs.iter().enumerate() {
                let kb = b.n_min + j as i64;
                let idx = (ka + kb - n_min) as usize;
                coeffs[idx] += ca * cb;
            }
        }
        let na = a.sup_norm_estimate(256);
        let nb = b.sup_norm_estimate(256);
        let tail = na * b.tail_bound + a.tail_bound * nb + a.tail_bound * b.tail_bound;
        Self::from_coeffs(a.rows, b.cols, n_min, coeffs, tail)
    }

    /// Product of a list of symbols, left to right.
    pub fn product(factors: &[Self]) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty symbol product".into()))?;
        let mut acc = first.clone();
        for f in &factors[1..] {
            acc = Self::multiply(&acc, f)?;
        }
        Ok(acc)
    }

    /// Pointwise sum; bands are merged.
    pub fn add(a: &Self, b: &Self) -> Result<Self> {
        if a.rows != b.rows || a.cols != b.cols {
            return Err(Error::DimensionMismatch {
                context: "symbol sum",
                left: a.rows * 10000 + a.cols,
                right: b.rows * 10000 + b.cols,
            });
        }
        let n_min = a.n_min.min(b.n_min);
        let n_max = a.n_max().max(b.n_max());
        let mut coeffs = Vec::with_capacity((n_max - n_min + 1) as usize);
        for n in n_min..=n_max {
            let mut c = DMatrix::zeros(a.rows, a.cols);
            if let Some(ca) = a.coeff_ref(n) {
                c += ca;
            }
            if let Some(cb) = b.coeff_ref(n) {
                c += cb;
            }
            coeffs.push(c);
        }
        Self::from_coeffs(a.rows, a.cols, n_min, coeffs, a.tail_bound + b.tail_bound)
    }

    /// Pointwise difference.
    pub fn sub(a: &Self, b: &Self) -> Result<Self> {
        Self::add(a, &b.scale(cx(-1.0, 0.0)))
    }

    /// Scale every coefficient by a complex constant.
    pub fn scale(&self, lambda: Cx<T>) -> Self {
        LaurentSymbol {
            rows: self.rows,
            cols: self.cols,
            n_min: self.n_min,
            coeffs: self.coeffs.iter().map(|c| c * lambda).collect(),
            tail_bound: self.tail_bound * lambda.modulus(),
        }
    }

    /// The tilde symbol `tilde(Phi)(z) = Phi(conj(z))^*`: coefficientwise
    /// conjugate transpose on the same band.
    pub fn tilde(&self) -> Self {
        LaurentSymbol {
            rows: self.cols,
            cols: self.rows,
            n_min: self.n_min,
            coeffs: self.coeffs.iter().map(|c| c.adjoint()).collect(),
            tail_bound: self.tail_bound,
        }
    }

    /// The pointwise adjoint symbol `Phi^*(z) = Phi(z)^*`, with coefficients
    /// `(Phi^*)^(n) = Phi^(-n)^*` on the negated band.
    pub fn star(&self) -> Self {
        let n_max = self.n_max();
        let coeffs = self
            .coeffs
            .iter()
            .rev()
            .map(|c| c.adjoint())
            .collect();
        LaurentSymbol {
            rows: self.cols,
            cols: self.rows,
            n_min: -n_max,
            coeffs,
            tail_bound: self.tail_bound,
        }
    }

    /// Direct sum of symbols along the diagonal.
    pub fn diag(blocks: &[Self]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("empty diagonal".into()));
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let n_min = blocks.iter().map(|b| b.n_min).min().unwrap();
        let n_max = blocks.iter().map(|b| b.n_max()).max().unwrap();
        let mut coeffs = Vec::with_capacity((n_max - n_min + 1) as usize);
        for n in n_min..=n_max {
            let mut c = DMatrix::zeros(rows, cols);
            let (mut r0, mut c0) = (0, 0);
            for b in blocks {
                if let Some(cb) = b.coeff_ref(n) {
                    c.view_mut((r0, c0), (b.rows, b.cols)).copy_from(cb);
                }
                r0 += b.rows;
                c0 += b.cols;
            }
            coeffs.push(c);
        }
        let tail = blocks.iter().fold(T::zero(), |acc, b| acc + b.tail_bound);
        Self::from_coeffs(rows, cols, n_min, coeffs, tail)
    }

    /// Horizontal concatenation `[A B]` (same row dimension).
    pub fn block_row(blocks: &[Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty block row".into()))?;
        let rows = first.rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch {
                context: "block row",
                left: rows,
                right: blocks.iter().map(|b| b.rows).max().unwrap(),
            });
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let n_min = blocks.iter().map(|b| b.n_min).min().unwrap();
        let n_max = blocks.iter().map(|b| b.n_max()).max().unwrap();
        let mut coeffs = Vec::with_capacity((n_max - n_min + 1) as usize);
        for n in n_min..=n_max {
            let mut c = DMatrix::zeros(rows, cols);
            let mut c0 = 0;
            for b in blocks {
                if let Some(cb) = b.coeff_ref(n) {
                    c.view_mut((0, c0), (rows, b.cols)).copy_from(cb);
                }
                c0 += b.cols;
            }
            coeffs.push(c);
        }
        let tail = blocks.iter().fold(T::zero(), |acc, b| acc + b.tail_bound);
        Self::from_coeffs(rows, cols, n_min, coeffs, tail)
    }

    /// Vertical concatenation `[A; B]` (same column dimension).
    pub fn block_col(blocks: &[Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty block column".into()))?;
        let cols = first.cols;
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::DimensionMismatch {
                context: "block column",
                left: cols,
                right: blocks.iter().map(|b| b.cols).max().unwrap(),
            });
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let n_min = blocks.iter().map(|b| b.n_min).min().unwrap();
        let n_max = blocks.iter().map(|b| b.n_max()).max().unwrap();
        let mut coeffs = Vec::with_capacity((n_max - n_min + 1) as usize);
        for n in n_min..=n_max {
            let mut c = DMatrix::zeros(rows, cols);
            let mut r0 = 0;
            for b in blocks {
                if let Some(cb) = b.coeff_ref(n) {
                    c.view_mut((r0, 0), (b.rows, cols)).copy_from(cb);
                }
                r0 += b.rows;
            }
            coeffs.push(c);
        }
        let tail = blocks.iter().fold(T::zero(), |acc, b| acc + b.tail_bound);
        Self::from_coeffs(rows, cols, n_min, coeffs, tail)
    }

    /// Evaluate `sum_n A^(n) z^n` over the stored band.
    ///
    /// For `|z| != 1` the result carries a geometric extrapolation error
    /// bounded by the tail bound scaled by the missing powers; intended use
    /// is `|z| <= 0.95` for analytic symbols or `|z| = 1`. Negative powers
    /// at `z = 0` are rejected.
    pub fn evaluate(&self, z: Cx<T>) -> Result<DMatrix<Cx<T>>> {
        if self.n_min < 0 && z.modulus() == T::zero() {
            return Err(Error::InvalidParameter(
                "cannot evaluate a symbol with negative powers at z = 0".into(),
            ));
        }
        let mut acc = DMatrix::<Cx<T>>::zeros(self.rows, self.cols);
        for (i, c) in self.coeffs.iter().enumerate() {
            let n = self.n_min + i as i64;
            let zp = powi_cx(z, n);
            acc += c * zp;
        }
        Ok(acc)
    }

    /// Max over a circle grid of the pointwise spectral norm; the sup-norm
    /// estimate used in tail-bound propagation.
    pub fn sup_norm_estimate(&self, grid: usize) -> T {
        let two_pi = T::two_pi();
        let mut max = T::zero();
        for j in 0..grid {
            let theta = two_pi * real::<T>(j as f64) / real::<T>(grid as f64);
            let z = Cx::new(theta.cos(), theta.sin());
            let v = self.evaluate(z).expect("|z| = 1 evaluation cannot fail");
            let n = spectral_norm(&v);
            if n > max {
                max = n;
            }
        }
        max
    }

    /// Certify (left, and two-sided when square) innerness from the Fourier
    /// coefficients of `Phi^* Phi`, and split off the unitary part at 0.
    pub fn check_inner(&self, tol: T) -> Result<InnerCertificate<T>> {
        if !self.is_analytic() {
            return Err(Error::NotAnalytic { n_min: self.n_min });
        }
        let left = Self::multiply(&self.star(), self)?;
        let left_inner_residual = delta_residual(&left) + left.tail_bound;
        let two_sided_residual = if self.rows == self.cols {
            let right = Self::multiply(self, &self.star())?;
            Some(delta_residual(&right) + right.tail_bound)
        } else {
            None
        };
        let at_zero = self.evaluate(Cx::new(T::zero(), T::zero()))?;
        let svd = at_zero.clone().svd(true, true);
        let sv = &svd.singular_values;
        let threshold = T::one() - tol;
        let mut unitary_part_rank = 0;
        for i in 0..sv.len() {
            if sv[i] > threshold {
                unitary_part_rank += 1;
            }
        }
        let v_t = svd.v_t.expect("svd with vectors");
        let v = v_t.adjoint();
        let unitary_direction_basis = v.columns(0, unitary_part_rank).into_owned();
        let singular_values_at_zero = (0..sv.len()).map(|i| sv[i]).collect();
        Ok(InnerCertificate {
            left_inner_residual,
            two_sided_residual,
            unitary_part_rank,
            pure_part_dims: (self.cols - unitary_part_rank, self.rows - unitary_part_rank),
            unitary_direction_basis,
            singular_values_at_zero,
        })
    }

    /// Hitt-Sarason pair for a scalar inner `phi`:
    /// `g = (1-|phi(0)|^2)^{-1/2} (1 - conj(phi(0)) phi)` and
    /// `theta = (phi(0) - phi) / (1 - conj(phi(0)) phi)`, so `T_g K_theta = K_phi`.
    pub fn hitt_sarason_pair(&self, eps_sym: T) -> Result<(Self, Self)> {
        if self.rows != 1 || self.cols != 1 {
            return Err(Error::InvalidParameter("hitt_sarason_pair needs a scalar symbol".into()));
        }
        let cert = self.check_inner(real(1e-8))?;
        if cert.left_inner_residual > real(1e-8) {
            return Err(Error::NotInner {
                residual: cert.left_inner_residual.to_f64().unwrap_or(f64::NAN),
                tol: 1e-8,
            });
        }
        let c = self.evaluate(Cx::new(T::zero(), T::zero()))?[(0, 0)];
        let r = c.modulus();
        if r >= T::one() - real(1e-10) {
            return Err(Error::Degenerate(
                "phi(0) is unimodular: phi is a constant unimodular function".into(),
            ));
        }
        let one = LaurentSymbol::identity(1);
        let den = Self::sub(&one, &self.scale(c.conjugate()))?;
        let norm = (T::one() - r * r).sqrt();
        let g = den.scale(Cx::new(T::one() / norm, T::zero()));
        let num = Self::sub(&LaurentSymbol::constant(DMatrix::from_element(1, 1, c)), self)?;
        let inv = invert_scalar_analytic(&den, r, eps_sym)?;
        let mut theta = Self::multiply(&num, &inv)?;
        theta.trim_small(eps_sym);
        Ok((g, theta))
    }
}

/// Certificate produced by [`LaurentSymbol::check_inner`].
#[derive(Clone, Debug)]
pub struct InnerCertificate<T: RealScalar> {
    /// Max deviation of the `Phi^* Phi` coefficients from `delta_{n0} I`.
    pub left_inner_residual: T,
    /// Same for `Phi Phi^*` when the symbol is square.
    pub two_sided_residual: Option<T>,
    /// Number of singular values of `Phi(0)` exceeding `1 - tol`.
    pub unitary_part_rank: usize,
    /// Dimensions `(dim E_1, dim F_1)` of the purely contractive part.
    pub pure_part_dims: (usize, usize),
    /// Right singular vectors spanning the unitary directions at 0.
    pub unitary_direction_basis: DMatrix<Cx<T>>,
    /// All singular values of `Phi(0)`, so near-threshold values can be
    /// inspected instead of silently classified.
    pub singular_values_at_zero: Vec<T>,
}

impl<T: RealScalar> InnerCertificate<T> {
    /// Accepted as (left) inner at the caller's tolerance.
    pub fn passes(&self, tol: T) -> bool {
        self.left_inner_residual <= tol
    }

    pub fn is_two_sided(&self, tol: T) -> bool {
        matches!(self.two_sided_residual, Some(r) if r <= tol) && self.passes(tol)
    }

    pub fn is_pure(&self) -> bool {
        self.unitary_part_rank == 0
    }
}

/// Max over the band of `|| P^(n) - delta_{n0} I ||`.
fn delta_residual<T: RealScalar>(p: &LaurentSymbol<T>) -> T {
    let eye = DMatrix::<Cx<T>>::identity(p.rows(), p.cols());
    let mut max = T::zero();
    for n in p.n_min()..=p.n_max() {
        let mut c = p.coeff(n);
        if n == 0 {
            c -= &eye;
        }
        let norm = spectral_norm(&c);
        if norm > max {
            max = norm;
        }
    }
    // the band may not contain 0 at all
    if p.n_min() > 0 || p.n_max() < 0 {
        max = max.max(T::one());
    }
    max
}

/// Invert a scalar analytic symbol with invertible constant term by exact
/// power-series long division, stopping once the trailing coefficients sit
/// below the geometric budget implied by `eps_sym`.
///
/// `q` is the Neumann contraction rate (for `1 - conj(c) phi` with `phi`
/// inner it is `|c|`), which controls both the stop rule and the reported
/// tail bound.
fn invert_scalar_analytic<T: RealScalar>(
    den: &LaurentSymbol<T>,
    q: T,
    eps_sym: T,
) -> Result<LaurentSymbol<T>> {
    if den.rows() != 1 || den.cols() != 1 || !den.is_analytic() {
        return Err(Error::InvalidParameter("inversion needs a scalar analytic symbol".into()));
    }
    let d0 = den.coeff(0)[(0, 0)];
    if d0.modulus() <= real(1e-14) {
        return Err(Error::Degenerate("denominator vanishes at 0".into()));
    }
    let band = den.n_max() as usize;
    let q_eff = q.max(real(0.1)).min(real(0.95));
    let floor = eps_sym * (T::one() - q_eff) * real(0.25);
    let window = band.max(8);
    let hard_cap = 4096usize;

    let mut v: Vec<Cx<T>> = Vec::with_capacity(window * 2);
    v.push(Cx::new(T::one(), T::zero()) / d0);
    let mut n = 1usize;
    loop {
        let mut s = Cx::new(T::zero(), T::zero());
        for k in 1..=band.min(n) {
            s += den.coeff(k as i64)[(0, 0)] * v[n - k];
        }
        v.push(-s / d0);
        n += 1;
        if n > window {
            let trailing = v[n - window..n]
                .iter()
                .fold(T::zero(), |acc, x| acc.max(x.modulus()));
            if trailing <= floor || n >= hard_cap {
                break;
            }
        }
    }
    let tail = if n >= hard_cap {
        let trailing = v[n - window..n]
            .iter()
            .fold(T::zero(), |acc, x| acc.max(x.modulus()));
        trailing / (T::one() - q_eff)
    } else {
        eps_sym
    };
    let mut sym = LaurentSymbol::scalar(0, &v, tail)?;
    sym.trim_small(floor);
    Ok(sym)
}

fn powi_cx<T: RealScalar>(z: Cx<T>, n: i64) -> Cx<T> {
    if n == 0 {
        return Cx::new(T::one(), T::zero());
    }
    let base = if n < 0 {
        Cx::new(T::one(), T::zero()) / z
    } else {
        z
    };
    ComplexField::powi(base, n.unsigned_abs().min(i32::MAX as u64) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    type S = LaurentSymbol<f64>;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn blaschke_at_origin_is_shift() {
        let phi = S::blaschke_factor(c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(phi.n_min(), 1);
        assert_eq!(phi.n_max(), 1);
        assert_eq!(phi.coeff(1)[(0, 0)], c(1.0, 0.0));
        assert_eq!(phi.tail_bound(), 0.0);
    }

    #[test]
    fn blaschke_half_coefficients() {
        let phi = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        assert_eq!(phi.coeff(0)[(0, 0)], c(-0.5, 0.0));
        // phi^(k) = (1 - |a|^2) conj(a)^{k-1}
        assert!((phi.coeff(1)[(0, 0)] - c(0.75, 0.0)).norm() < 1e-15);
        assert!((phi.coeff(2)[(0, 0)] - c(0.375, 0.0)).norm() < 1e-15);
        assert!(phi.tail_bound() <= 1e-12);
        // remainder really is certified: sum of |dropped coefficients|
        let n_max = phi.n_max();
        let dropped = 0.75 * 0.5f64.powi(n_max as i32) / (1.0 - 0.5);
        assert!(dropped <= phi.tail_bound() + 1e-18);
    }

    #[test]
    fn blaschke_rejects_boundary() {
        assert!(S::blaschke_factor(c(1.0, 0.0), 1e-12).is_err());
        assert!(S::blaschke_factor(c(0.8, 0.7), 1e-12).is_err());
    }

    #[test]
    fn potapov_rank_zero_projection_matches_blaschke() {
        let p = DMatrix::<Cx<f64>>::zeros(1, 1);
        let q = S::blaschke_potapov_factor(c(0.5, 0.0), &p, 1e-12).unwrap();
        let phi = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        for n in 0..=q.n_max() {
            assert_eq!(q.coeff(n), phi.coeff(n));
        }
    }

    #[test]
    fn potapov_diag_factor() {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        // a = 0: Q(z) = diag(1, z)
        let q = S::blaschke_potapov_factor(c(0.0, 0.0), &p, 1e-12).unwrap();
        let q0 = q.coeff(0);
        let q1 = q.coeff(1);
        assert_eq!(q0[(0, 0)], c(1.0, 0.0));
        assert_eq!(q0[(1, 1)], c(0.0, 0.0));
        assert_eq!(q1[(0, 0)], c(0.0, 0.0));
        assert_eq!(q1[(1, 1)], c(1.0, 0.0));
        // a = 0.5: Q(0.5) = diag(1, 0)
        let q = S::blaschke_potapov_factor(c(0.5, 0.0), &p, 1e-12).unwrap();
        let v = q.evaluate(c(0.5, 0.0)).unwrap();
        assert!((v[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(v[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn potapov_rejects_full_projection() {
        let p = DMatrix::<Cx<f64>>::identity(2, 2);
        assert!(S::blaschke_potapov_factor(c(0.3, 0.0), &p, 1e-12).is_err());
    }

    #[test]
    fn potapov_rejects_non_projection() {
        let p = DMatrix::from_element(2, 2, c(0.5, 0.1));
        assert!(S::blaschke_potapov_factor(c(0.3, 0.0), &p, 1e-12).is_err());
    }

    #[test]
    fn multiply_shift_squares() {
        let z = S::shift(1);
        let z2 = S::multiply(&z, &z).unwrap();
        assert_eq!(z2.n_min(), 2);
        assert_eq!(z2.n_max(), 2);
        assert_eq!(z2.coeff(2)[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn multiply_blaschke_pair_at_zero() {
        let a = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        let b = S::blaschke_factor(c(-0.5, 0.0), 1e-12).unwrap();
        let p = S::multiply(&a, &b).unwrap();
        let v = p.evaluate(c(0.0, 0.0)).unwrap()[(0, 0)];
        // phi_{0.5}(0) * phi_{-0.5}(0) = (-0.5)(0.5)
        assert!((v - c(-0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn complementary_potapov_factors_compose_to_shift() {
        let p1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let p2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let q1 = S::blaschke_potapov_factor(c(0.0, 0.0), &p1, 1e-12).unwrap();
        let q2 = S::blaschke_potapov_factor(c(0.0, 0.0), &p2, 1e-12).unwrap();
        let prod = S::multiply(&q1, &q2).unwrap();
        // diag(z, z): single coefficient I at degree 1
        assert_eq!(prod.n_min(), 1);
        assert_eq!(prod.n_max(), 1);
        let eye = DMatrix::<Cx<f64>>::identity(2, 2);
        assert!(max_abs(&(prod.coeff(1) - eye)) < 1e-15);
    }

    #[test]
    fn tilde_of_shift() {
        let z = S::shift(1);
        let t = z.tilde();
        assert_eq!(t.n_min(), 1);
        assert_eq!(t.coeff(1)[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn tilde_is_involution() {
        let phi = S::blaschke_factor(c(0.4, 0.2), 1e-12).unwrap();
        let back = phi.tilde().tilde();
        assert_eq!(back.n_min(), phi.n_min());
        for n in phi.n_min()..=phi.n_max() {
            assert_eq!(back.coeff(n), phi.coeff(n));
        }
    }

    #[test]
    fn tilde_of_constant_is_adjoint() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(0.0, 1.0), c(3.0, 0.0), c(0.5, -1.0)]);
        let s = S::constant(m.clone());
        let t = s.tilde();
        assert_eq!(t.coeff(0), m.adjoint());
    }

    #[test]
    fn evaluate_examples() {
        let z = S::shift(1);
        let v = z.evaluate(c(0.0, 1.0)).unwrap()[(0, 0)];
        assert!((v - c(0.0, 1.0)).norm() < 1e-15);
        let phi = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        assert!(phi.evaluate(c(0.5, 0.0)).unwrap()[(0, 0)].norm() < 1e-12);
        let at_one = phi.evaluate(c(1.0, 0.0)).unwrap()[(0, 0)];
        assert!((at_one - c(1.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn check_inner_shift() {
        let z = S::shift(1);
        let cert = z.check_inner(1e-8).unwrap();
        assert!(cert.left_inner_residual < 1e-14);
        assert_eq!(cert.unitary_part_rank, 0);
        assert!(cert.is_pure());
    }

    #[test]
    fn check_inner_unitary_block() {
        let one = S::identity(1);
        let phi = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        let th = S::diag(&[one, phi]).unwrap();
        let cert = th.check_inner(1e-8).unwrap();
        assert!(cert.passes(1e-7));
        assert_eq!(cert.unitary_part_rank, 1);
        assert_eq!(cert.pure_part_dims, (1, 1));
        // the unitary direction is e_0
        assert!((cert.unitary_direction_basis[(0, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn check_inner_product_of_factors() {
        let a = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        let b = S::blaschke_factor(c(-0.3, 0.0), 1e-12).unwrap();
        let p = S::multiply(&a, &b).unwrap();
        let cert = p.check_inner(1e-8).unwrap();
        assert!(cert.left_inner_residual <= 10.0 * 1e-8);
        assert!(cert.is_pure());
    }

    #[test]
    fn check_inner_rejects_non_analytic() {
        let zbar = S::scalar(-1, &[c(1.0, 0.0)], 0.0).unwrap();
        assert!(zbar.check_inner(1e-8).is_err());
    }

    #[test]
    fn hitt_sarason_zero_at_origin() {
        // phi(0) = 0: g = 1, theta = -phi
        let phi = S::shift(1);
        let (g, theta) = phi.hitt_sarason_pair(1e-12).unwrap();
        assert_eq!(g.n_min(), 0);
        assert_eq!(g.n_max(), 0);
        assert!((g.coeff(0)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((theta.coeff(1)[(0, 0)] + 1.0).norm() < 1e-12);
    }

    #[test]
    fn hitt_sarason_g_value() {
        // phi = phi_{-0.5}: phi(0) = 0.5, g(0) = sqrt(3)/2
        let phi = S::blaschke_factor(c(-0.5, 0.0), 1e-12).unwrap();
        let (g, theta) = phi.hitt_sarason_pair(1e-12).unwrap();
        let g0 = g.evaluate(c(0.0, 0.0)).unwrap()[(0, 0)];
        assert!((g0.re - 3f64.sqrt() / 2.0).abs() < 1e-12, "g(0) = {}", g0.re);
        // theta(0) = 0 by construction
        let t0 = theta.evaluate(c(0.0, 0.0)).unwrap()[(0, 0)];
        assert!(t0.norm() < 1e-10);
        // single Blaschke factor: theta = -z exactly (up to truncation noise)
        assert!((theta.coeff(1)[(0, 0)] + 1.0).norm() < 1e-9);
        assert!(theta.band() <= 8);
    }

    #[test]
    fn hitt_sarason_theta_vanishes_at_zero_for_products() {
        let a = S::blaschke_factor(c(-0.4, 0.1), 1e-12).unwrap();
        let b = S::blaschke_factor(c(0.3, -0.2), 1e-12).unwrap();
        let phi = S::multiply(&a, &b).unwrap();
        let (_, theta) = phi.hitt_sarason_pair(1e-12).unwrap();
        let t0 = theta.evaluate(c(0.0, 0.0)).unwrap()[(0, 0)];
        assert!(t0.norm() < 1e-9);
        let cert = theta.check_inner(1e-8).unwrap();
        assert!(cert.left_inner_residual <= 10.0 * (1e-8 + 1e-12), "residual {}", cert.left_inner_residual);
    }

    #[test]
    fn hitt_sarason_rejects_degenerate() {
        let phi = S::constant(DMatrix::from_element(1, 1, c(1.0, 0.0)));
        assert!(phi.hitt_sarason_pair(1e-12).is_err());
    }

    #[test]
    fn star_band_is_negated() {
        let phi = S::blaschke_factor(c(0.5, 0.0), 1e-12).unwrap();
        let s = phi.star();
        assert_eq!(s.n_max(), 0);
        assert_eq!(s.n_min(), -phi.n_max());
        assert_eq!(s.coeff(0)[(0, 0)], c(-0.5, 0.0));
        assert_eq!(s.coeff(-1)[(0, 0)], c(0.75, 0.0));
    }
}
