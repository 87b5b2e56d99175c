//! Seeded random corpora: Blaschke-Potapov products, scalar inner
//! functions, Laurent polynomial symbols, subspaces and vectors.
//!
//! Zeros are drawn uniformly from a disk of radius at most 0.7 and then
//! clamped so each factor's certified tail fits the per-order band budget;
//! this keeps `toeplitz` constructions legal (band < N) and keeps tail noise
//! below the rank tolerances the defect machinery uses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Cx;
use crate::subspaces::Subspace;
use crate::symbols::LaurentSymbol;

pub type CorpusRng = ChaCha8Rng;

/// Draw policy for one corpus.
#[derive(Clone, Copy, Debug)]
pub struct CorpusParams {
    /// Fiber dimensions are drawn from `1..=max_fiber_dim`.
    pub max_fiber_dim: usize,
    /// Blaschke-Potapov factor counts are drawn from `1..=max_factors`.
    pub max_factors: usize,
    /// Outer bound on zero moduli.
    pub radius: f64,
    /// Per-symbol certified tail budget.
    pub tail_target: f64,
    /// Per-symbol band budget (the truncation order must exceed it).
    pub band_budget: usize,
}

impl CorpusParams {
    /// Identity-suite corpus: generous tails (thresholds scale with the
    /// accumulated error), bands small enough that guarded windows survive
    /// the compositions appearing in the identity catalogue.
    pub fn for_identities(order: usize) -> Self {
        CorpusParams {
            max_fiber_dim: 2,
            max_factors: 2,
            radius: 0.7,
            tail_target: if order >= 64 { 1e-6 } else { 1e-4 },
            band_budget: (order / 4).saturating_sub(2).max(3),
        }
    }

    /// Defect/representation corpus: tight tails so that rank decisions at
    /// the 1e-8 relative cutoff are unambiguous, bands that fit the order
    /// and its doubled comparison order.
    pub fn for_defects(order: usize) -> Self {
        CorpusParams {
            max_fiber_dim: 3,
            max_factors: 2,
            radius: 0.6,
            tail_target: 1e-10,
            band_budget: (order * 2 / 3).max(8),
        }
    }
}

/// Uniform point in the disk of the given radius.
pub fn random_in_disk(radius: f64, rng: &mut CorpusRng) -> Cx<f64> {
    loop {
        let re = radius * (2.0 * rng.random::<f64>() - 1.0);
        let im = radius * (2.0 * rng.random::<f64>() - 1.0);
        if re * re + im * im <= radius * radius {
            return Cx::new(re, im);
        }
    }
}

/// Largest zero modulus whose Blaschke tail fits the band budget:
/// `(1 - r^2) r^band / (1 - r) <= tail`.
fn feasible_radius(tail: f64, band: usize) -> f64 {
    let fits = |r: f64| (1.0 - r * r) * r.powi(band as i32) / (1.0 - r) <= tail;
    let (mut lo, mut hi) = (0.0f64, 0.999f64);
    if fits(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Blaschke zero: uniform in the radius disk, clamped to the feasible
/// radius of the per-factor band budget.
pub fn random_zero(params: &CorpusParams, per_factor_band: usize, rng: &mut CorpusRng) -> Cx<f64> {
    let cap = feasible_radius(params.tail_target, per_factor_band).min(params.radius);
    let a = random_in_disk(params.radius, rng);
    let m = (a.re * a.re + a.im * a.im).sqrt();
    if m > cap && m > 0.0 {
        a * (cap / m)
    } else {
        a
    }
}

/// Haar-ish random unitary: QR of a complex Gaussian-free uniform matrix.
pub fn random_unitary(d: usize, rng: &mut CorpusRng) -> DMatrix<Cx<f64>> {
    loop {
        let m = DMatrix::from_fn(d, d, |_, _| {
            Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let qr = m.qr();
        let q = qr.q();
        if q.ncols() == d {
            return q;
        }
    }
}

/// Random orthogonal projection of the given rank.
pub fn random_projection(d: usize, rank: usize, rng: &mut CorpusRng) -> DMatrix<Cx<f64>> {
    assert!(rank <= d);
    if rank == 0 {
        return DMatrix::zeros(d, d);
    }
    let u = random_unitary(d, rng);
    let cols = u.columns(0, rank).into_owned();
    &cols * cols.adjoint()
}

/// Random Blaschke-Potapov product `U prod Q(a_i, P_i)` on `C^d`, with
/// projection ranks drawn uniformly below `d`.
pub fn random_blaschke_potapov(
    d: usize,
    params: &CorpusParams,
    rng: &mut CorpusRng,
) -> LaurentSymbol<f64> {
    let factors = 1 + rng.random_range(0..params.max_factors);
    let per_factor_band = (params.band_budget / factors).max(1);
    let mut sym = LaurentSymbol::constant(random_unitary(d, rng));
    for _ in 0..factors {
        let a = random_zero(params, per_factor_band, rng);
        let q = if d == 1 {
            LaurentSymbol::blaschke_factor(a, params.tail_target)
                .expect("|a| < 1 by construction")
        } else {
            let rank = rng.random_range(0..d);
            let proj = random_projection(d, rank, rng);
            LaurentSymbol::blaschke_potapov_factor(a, &proj, params.tail_target)
                .expect("projection and |a| < 1 by construction")
        };
        sym = LaurentSymbol::multiply(&sym, &q).expect("square factors compose");
    }
    sym
}

/// Random scalar inner function: a unimodular constant times a product of
/// Blaschke factors.
pub fn random_scalar_inner(params: &CorpusParams, rng: &mut CorpusRng) -> LaurentSymbol<f64> {
    let factors = 1 + rng.random_range(0..params.max_factors);
    let per_factor_band = (params.band_budget / factors).max(1);
    let angle = std::f64::consts::TAU * rng.random::<f64>();
    let mut sym = LaurentSymbol::constant(DMatrix::from_element(
        1,
        1,
        Cx::new(angle.cos(), angle.sin()),
    ));
    for _ in 0..factors {
        let a = random_zero(params, per_factor_band, rng);
        let q = LaurentSymbol::blaschke_factor(a, params.tail_target).expect("|a| < 1");
        sym = LaurentSymbol::multiply(&sym, &q).expect("scalar factors compose");
    }
    sym
}

/// Random matrix Laurent polynomial on the band `[-neg, pos]` with entries
/// decaying geometrically away from degree 0 (tail bound zero: these are
/// genuine polynomials, the sharpest inputs for identity checks).
pub fn random_laurent_polynomial(
    rows: usize,
    cols: usize,
    neg: usize,
    pos: usize,
    rng: &mut CorpusRng,
) -> LaurentSymbol<f64> {
    let mut coeffs = Vec::with_capacity(neg + pos + 1);
    for n in -(neg as i64)..=(pos as i64) {
        let decay = 0.5f64.powi(n.unsigned_abs() as i32);
        coeffs.push(DMatrix::from_fn(rows, cols, |_, _| {
            Cx::new(
                decay * (rng.random::<f64>() - 0.5),
                decay * (rng.random::<f64>() - 0.5),
            )
        }));
    }
    LaurentSymbol::from_coeffs(rows, cols, -(neg as i64), coeffs, 0.0)
        .expect("shapes are consistent")
}

/// Random complex vector.
pub fn random_vector(len: usize, rng: &mut CorpusRng) -> DVector<Cx<f64>> {
    DVector::from_fn(len, |_, _| {
        Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

/// Random `r`-dimensional subspace of the truncated space.
pub fn random_subspace(
    order: usize,
    dim: usize,
    r: usize,
    tol: f64,
    rng: &mut CorpusRng,
) -> Subspace<f64> {
    let cols = DMatrix::from_fn(order * dim, r, |_, _| {
        Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    Subspace::from_columns(order, dim, &cols, tol).expect("ambient is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn potapov_products_fit_their_budget_and_are_inner() {
        let mut rng = CorpusRng::seed_from_u64(2024);
        for order in [32usize, 64] {
            let params = CorpusParams::for_identities(order);
            for _ in 0..6 {
                let d = 1 + rng.random_range(0..params.max_fiber_dim);
                let b = random_blaschke_potapov(d, &params, &mut rng);
                assert!(b.band() < order, "band {} at order {}", b.band(), order);
                let cert = b.check_inner(1e-6).unwrap();
                assert!(
                    cert.left_inner_residual <= 10.0 * (params.tail_target + 1e-8),
                    "residual {}",
                    cert.left_inner_residual
                );
            }
        }
    }

    #[test]
    fn unitaries_and_projections_are_what_they_claim() {
        let mut rng = CorpusRng::seed_from_u64(7);
        let u = random_unitary(3, &mut rng);
        let eye = DMatrix::<Cx<f64>>::identity(3, 3);
        assert!(crate::scalar::max_abs(&(&u * u.adjoint() - &eye)) < 1e-12);
        let p = random_projection(3, 2, &mut rng);
        assert!(crate::scalar::max_abs(&(&p * &p - &p)) < 1e-12);
        assert!(crate::scalar::max_abs(&(p.adjoint() - &p)) < 1e-12);
    }

    #[test]
    fn draws_are_deterministic_per_seed() {
        let params = CorpusParams::for_defects(64);
        let mut a = CorpusRng::seed_from_u64(99);
        let mut b = CorpusRng::seed_from_u64(99);
        let s1 = random_scalar_inner(&params, &mut a);
        let s2 = random_scalar_inner(&params, &mut b);
        assert_eq!(s1.n_max(), s2.n_max());
        for n in 0..=s1.n_max() {
            assert_eq!(s1.coeff(n), s2.coeff(n));
        }
    }

    #[test]
    fn feasible_radius_is_monotone() {
        assert!(feasible_radius(1e-12, 40) > feasible_radius(1e-12, 10));
        assert!(feasible_radius(1e-6, 10) > feasible_radius(1e-12, 10));
    }
}
