//! Seeded generators for random states, measurements and protocol contexts.
//!
//! Everything is driven by explicitly passed RNGs so that sweeps and tests
//! are reproducible trial by trial.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::bits::BitString;
use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::measurement::{Effect, GeneralMeasurement, Povm};
use crate::protocol::SharedContext;
use crate::purification::canonical_purification;
use crate::state::{DensityMatrix, Ensemble, PureState};

/// Per-trial RNG derived from one root seed: the trial index is mixed into
/// the seed through a SplitMix64 step (after a golden-ratio spread), so any
/// trial can be reproduced in isolation from (root_seed, trial).
pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha12Rng {
    let z = splitmix64(root_seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    ChaCha12Rng::seed_from_u64(z)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex Gaussian entry (Box-Muller).
pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(radius * angle.cos(), radius * angle.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_pure(dim: usize, rng: &mut impl Rng) -> Result<PureState> {
    let v = CVector::from_fn(dim, |_, _| random_complex(rng));
    PureState::normalized(v, vec![dim])
}

/// Ginibre construction: G G† normalized to unit trace; full rank almost
/// surely.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let g = random_matrix(dim, dim, rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::new(linalg::hermitize(&m.unscale(tr)), vec![dim])
}

/// Haar-like unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = random_matrix(dim, dim, rng);
    g.qr().q()
}

/// Thin isometry with `rows` ≥ `cols` and Q†Q = I.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    if rows < cols {
        return Err(Error::DimensionMismatch(format!(
            "isometry needs rows >= cols, got {rows} x {cols}"
        )));
    }
    let g = random_matrix(rows, cols, rng);
    Ok(g.qr().q())
}

/// Random POVM with `outcomes` dense elements: normalize random PSD pieces
/// by the inverse square root of their sum.
pub fn random_povm(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Result<Povm> {
    if outcomes == 0 {
        return Err(Error::InvalidMeasurement("no outcomes".into()));
    }
    let pieces: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = random_matrix(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    for p in &pieces {
        sum += p;
    }
    let (_, inv_sqrt) = linalg::sqrt_with_pinv(&linalg::hermitize(&sum), 1e-12)?;
    let elements = pieces
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let e = linalg::hermitize(&(&inv_sqrt * p * &inv_sqrt));
            (i.to_string(), e)
        })
        .collect();
    Povm::new(elements)
}

/// Random collapse-operator measurement: U_j √E_j for a random POVM and
/// independent random unitaries; completeness is inherited from the POVM.
pub fn random_general_measurement(
    dim: usize,
    outcomes: usize,
    rng: &mut impl Rng,
) -> Result<GeneralMeasurement> {
    let povm = random_povm(dim, outcomes, rng)?;
    let mut operators = Vec::with_capacity(outcomes);
    for (label, effect) in povm.elements() {
        let sqrt = effect.sqrt()?.to_matrix();
        let u = random_unitary(dim, rng);
        operators.push((label.clone(), u * sqrt));
    }
    GeneralMeasurement::new(operators)
}

/// Uniform-simplex random distribution (normalized exponentials).
pub fn random_distribution(outcomes: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..outcomes)
        .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
        .collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// A random pure-state ensemble averaging exactly to `rho`: a random
/// rank-one ancilla POVM (rows of a random isometry) measured on the
/// canonical purification. `size` must be at least the dimension.
pub fn random_ensemble_of(
    rho: &DensityMatrix,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Ensemble> {
    let dim = rho.dim();
    if size < dim {
        return Err(Error::InvalidParameter(format!(
            "ensemble size {size} below dimension {dim}"
        )));
    }
    let phi = canonical_purification(rho)?;
    let v = random_isometry(size, dim, rng)?;
    let mut elements = Vec::with_capacity(size);
    for i in 0..size {
        // effect w w† with w = V† e_i
        let w = v.row(i).adjoint();
        elements.push((i.to_string(), Effect::Rank1(w)));
    }
    let povm = Povm::from_effects(elements)?;
    let outcomes = crate::purification::measure_ancilla(&phi, &povm)?;
    let mut entries = Vec::new();
    let mut kept = 0.0;
    for outcome in &outcomes {
        if let Some(state) = outcome.conditional.pure_state() {
            entries.push((outcome.probability, state.clone()));
            kept += outcome.probability;
        }
    }
    for (p, _) in &mut entries {
        *p /= kept;
    }
    Ensemble::new(entries)
}

/// A random valid shared context with 2 ≤ n ≤ `max_n`: a random full-rank
/// generator and an r that splits the code.
pub fn random_context(max_n: usize, rng: &mut impl Rng) -> Result<SharedContext> {
    let max_n = max_n.clamp(2, 10);
    for _ in 0..1000 {
        let n = rng.random_range(2..=max_n);
        let k = rng.random_range(1..=n.min(4));
        let rows: Vec<BitString> = (0..k)
            .map(|_| {
                let mask = rng.random_range(1..(1u32 << n));
                BitString::from_mask(mask, n).expect("mask fits")
            })
            .collect();
        let Ok(code) = LinearCode::new(rows) else {
            continue;
        };
        let r_mask = rng.random_range(1..(1u32 << n));
        let r = BitString::from_mask(r_mask, n).expect("mask fits");
        if let Ok(ctx) = SharedContext::new(code, r) {
            return Ok(ctx);
        }
    }
    Err(Error::InvalidContext(
        "failed to draw a valid random context".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trial_rngs_are_reproducible_and_distinct() {
        let mut a = trial_rng(7, 3);
        let mut b = trial_rng(7, 3);
        let mut c = trial_rng(7, 4);
        let xa: u64 = a.random();
        let xb: u64 = b.random();
        let xc: u64 = c.random();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn random_density_is_valid_and_full_rank() {
        let mut rng = trial_rng(1, 0);
        for dim in [2, 4, 8] {
            let rho = random_density(dim, &mut rng).unwrap();
            let eigs = rho.eigenvalues();
            assert!(eigs[0] > 0.0, "expected full rank, got {eigs:?}");
            let tr: f64 = eigs.iter().sum();
            assert_abs_diff_eq!(tr, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = trial_rng(2, 0);
        let u = random_unitary(5, &mut rng);
        let defect = linalg::max_abs_diff(&(u.adjoint() * &u), &linalg::identity(5));
        assert!(defect < 1e-10);
    }

    #[test]
    fn random_povm_probabilities_sum_to_one() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..100 {
            let dim = 2 + (rng.random::<u32>() % 3) as usize;
            let povm = random_povm(dim, 3, &mut rng).unwrap();
            let rho = random_density(dim, &mut rng).unwrap();
            let probs = povm.expectations(&rho).unwrap();
            let total: f64 = probs.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
            assert!(probs.iter().all(|&p| p >= -1e-10));
        }
    }

    #[test]
    fn random_ensemble_averages_to_its_state() {
        let mut rng = trial_rng(4, 0);
        for _ in 0..20 {
            let dim = 2 + (rng.random::<u32>() % 3) as usize;
            let rho = random_density(dim, &mut rng).unwrap();
            let ensemble = random_ensemble_of(&rho, dim + 2, &mut rng).unwrap();
            let avg = ensemble.average();
            assert!(linalg::max_abs_diff(avg.matrix(), rho.matrix()) < 1e-8);
        }
    }

    #[test]
    fn random_context_is_always_valid() {
        let mut rng = trial_rng(5, 0);
        for _ in 0..50 {
            let ctx = random_context(4, &mut rng).unwrap();
            assert!(!ctx.codeword_class(false).is_empty());
            assert!(!ctx.codeword_class(true).is_empty());
        }
    }

    #[test]
    fn random_distribution_is_normalized() {
        let mut rng = trial_rng(6, 0);
        let d = random_distribution(16, &mut rng);
        let total: f64 = d.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(d.iter().all(|&p| p > 0.0));
    }
}
