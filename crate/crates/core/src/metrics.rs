//! Classical distinguishability metrics and the security-against-Bob
//! criterion.
//!
//! Bob's knowledge after the commit phase is a measurement outcome
//! distribution pair (p_0, p_1), one distribution per committed bit. The
//! quantities tracked here:
//!
//! * Kolmogorov distance K = Σ|p_0 − p_1| (range [0, 2]);
//! * Bhattacharyya-Wootters coefficient BW = Σ√(p_0 p_1), whose minimum
//!   over all measurements equals the root fidelity of (ρ_0, ρ_1);
//! * the probability of error PE of a binary guess, minimized by the
//!   Helstrom measurement, with K = 4|PE − ½| for binary outcomes;
//! * binary coarsening, which merges a many-outcome measurement into the
//!   likelihood sets A_0/A_1 while preserving K exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, TOL_CONSTRUCT, TOL_CROSS};
use crate::measurement::{GeneralMeasurement, Povm};
use crate::purification::{fidelity, root_fidelity, SUPPORT_CUTOFF};
use crate::state::DensityMatrix;

/// A pair of outcome distributions over a common label set.
#[derive(Clone, Debug)]
pub struct DistributionPair {
    labels: Vec<String>,
    p0: Vec<f64>,
    p1: Vec<f64>,
}

impl DistributionPair {
    /// Entries must be nonnegative (tiny negative round-off below 1e-10 is
    /// clamped) and each vector must sum to 1 within 1e-10.
    pub fn new(labels: Vec<String>, p0: Vec<f64>, p1: Vec<f64>) -> Result<Self> {
        if labels.len() != p0.len() || labels.len() != p1.len() || labels.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "label/probability lengths {} / {} / {}",
                labels.len(),
                p0.len(),
                p1.len()
            )));
        }
        let mut p0 = p0;
        let mut p1 = p1;
        for p in p0.iter_mut().chain(p1.iter_mut()) {
            if *p < -TOL_CONSTRUCT {
                return Err(Error::InvalidDistribution(format!("negative entry {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        for (name, v) in [("p0", &p0), ("p1", &p1)] {
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > TOL_CONSTRUCT {
                return Err(Error::InvalidDistribution(format!(
                    "{name} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self { labels, p0, p1 })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }
}

/// K(p_0, p_1) = Σ_x |p_0(x) − p_1(x)|.
pub fn kolmogorov(pair: &DistributionPair) -> f64 {
    pair.p0
        .iter()
        .zip(&pair.p1)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// BW(p_0, p_1) = Σ_x √(p_0(x) p_1(x)).
pub fn bhattacharyya(pair: &DistributionPair) -> f64 {
    pair.p0
        .iter()
        .zip(&pair.p1)
        .map(|(a, b)| (a * b).max(0.0).sqrt())
        .sum()
}

/// Outcome distributions of a measurement on the full system, against both
/// states.
pub fn outcome_distributions(
    m: &GeneralMeasurement,
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<DistributionPair> {
    check_pair(rho0, rho1)?;
    if m.input_dim() != rho0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement input dimension {} against state dimension {}",
            m.input_dim(),
            rho0.dim()
        )));
    }
    let mut p0 = Vec::with_capacity(m.len());
    let mut p1 = Vec::with_capacity(m.len());
    for effect in m.effects() {
        p0.push(rho0.expectation(&effect)?.max(0.0));
        p1.push(rho1.expectation(&effect)?.max(0.0));
    }
    DistributionPair::new(m.labels(), p0, p1)
}

/// Merges the outcomes of `m` into the likelihood classes
/// A_0 = {j : p_0(j) ≥ p_1(j)} and A_1 = their complement, at the effect
/// level E'_x = Σ_{j ∈ A_x} M_j†M_j. Returns the binary POVM together with
/// the distribution pair before and after coarsening; the merge preserves
/// the Kolmogorov distance exactly.
pub fn binary_coarsen(
    m: &GeneralMeasurement,
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<(Povm, DistributionPair, DistributionPair)> {
    let before = outcome_distributions(m, rho0, rho1)?;
    let dim = m.input_dim();
    let mut merged = [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)];
    let mut p0_after = [0.0f64; 2];
    let mut p1_after = [0.0f64; 2];
    for (j, effect) in m.effects().into_iter().enumerate() {
        let class = usize::from(before.p0[j] < before.p1[j]);
        merged[class] += effect;
        p0_after[class] += before.p0[j];
        p1_after[class] += before.p1[j];
    }
    let [e0, e1] = merged;
    let binary = Povm::new(vec![
        ("0".to_string(), linalg::hermitize(&e0)),
        ("1".to_string(), linalg::hermitize(&e1)),
    ])?;
    let after = DistributionPair::new(
        vec!["0".to_string(), "1".to_string()],
        p0_after.to_vec(),
        p1_after.to_vec(),
    )?;
    Ok((binary, before, after))
}

/// The optimal binary guess: projectors onto the nonnegative / negative
/// eigenspaces of prior0·ρ_0 − (1−prior0)·ρ_1 (ties go to the guess-0
/// side), and the resulting probability of error
/// PE = prior0·Pr(guess 1 | ρ_0) + (1−prior0)·Pr(guess 0 | ρ_1).
pub fn helstrom(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    prior0: f64,
) -> Result<(Povm, f64)> {
    check_pair(rho0, rho1)?;
    if !(0.0..=1.0).contains(&prior0) {
        return Err(Error::InvalidParameter(format!(
            "prior {prior0} outside [0, 1]"
        )));
    }
    let dim = rho0.dim();
    let delta = rho0.matrix().scale(prior0) - rho1.matrix().scale(1.0 - prior0);
    let eig = linalg::eigh(&delta);
    let mut e0 = CMatrix::zeros(dim, dim);
    let mut e1 = CMatrix::zeros(dim, dim);
    for (i, &value) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(i).into_owned();
        let proj = linalg::outer(&v, &v);
        if value >= 0.0 {
            e0 += proj;
        } else {
            e1 += proj;
        }
    }
    let povm = Povm::new(vec![
        ("0".to_string(), linalg::hermitize(&e0)),
        ("1".to_string(), linalg::hermitize(&e1)),
    ])?;
    let probs0 = povm.expectations(rho0)?;
    let probs1 = povm.expectations(rho1)?;
    let pe = prior0 * probs0[1] + (1.0 - prior0) * probs1[0];
    Ok((povm, pe))
}

/// PE of a binary distribution pair whose outcome index is read as the
/// guessed bit: PE = prior0·p_0(1) + (1−prior0)·p_1(0).
pub fn probability_of_error(pair: &DistributionPair, prior0: f64) -> Result<f64> {
    if pair.len() != 2 {
        return Err(Error::InvalidDistribution(format!(
            "probability_of_error needs a binary pair, got {} outcomes",
            pair.len()
        )));
    }
    if !(0.0..=1.0).contains(&prior0) {
        return Err(Error::InvalidParameter(format!(
            "prior {prior0} outside [0, 1]"
        )));
    }
    Ok(prior0 * pair.p0[1] + (1.0 - prior0) * pair.p1[0])
}

/// The measurement minimizing the Bhattacharyya-Wootters coefficient: the
/// projective measurement in the eigenbasis of the geometric-mean operator
/// ρ_0^{-½} (ρ_0^{½} ρ_1 ρ_0^{½})^{½} ρ_0^{-½} (support pseudo-inverses for
/// rank-deficient ρ_0). The achieved BW equals the root fidelity.
pub fn min_bw_measurement(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<(Povm, f64)> {
    check_pair(rho0, rho1)?;
    let (s0, s0_pinv) = linalg::sqrt_with_pinv(rho0.matrix(), SUPPORT_CUTOFF)?;
    let inner = linalg::hermitize(&(&s0 * rho1.matrix() * &s0));
    let inner_sqrt = linalg::matrix_sqrt(&inner)?;
    let geometric_mean = linalg::hermitize(&(&s0_pinv * inner_sqrt * &s0_pinv));
    let basis = linalg::eigh(&geometric_mean).vectors;
    let povm = Povm::projective(&basis)?;
    let p0 = povm.expectations(rho0)?;
    let p1 = povm.expectations(rho1)?;
    let bw = p0
        .iter()
        .zip(&p1)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    Ok((povm, bw))
}

/// The security-against-Bob summary for one state pair.
#[derive(Clone, Debug, Serialize)]
pub struct SecurityReport {
    /// Helstrom-optimal probability of error at uniform prior.
    pub pe: f64,
    /// |PE − ½|.
    pub epsilon_effective: f64,
    /// Kolmogorov distance under the Helstrom measurement (= 4|PE − ½|).
    pub k_optimal: f64,
    /// Minimal Bhattacharyya-Wootters coefficient over measurements.
    pub bw_min: f64,
    /// Root fidelity Tr √(√ρ_0 ρ_1 √ρ_0).
    pub fidelity_root: f64,
    /// The squared convention, (root fidelity)².
    pub fidelity_squared: f64,
    /// The ε the criterion was evaluated against.
    pub epsilon: f64,
    /// Whether |PE − ½| ≤ ε.
    pub criterion_met: bool,
}

impl SecurityReport {
    /// Report-level invariants; called before anything is written out.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pe) {
            return Err(Error::InvariantViolated(format!("pe = {}", self.pe)));
        }
        if (self.k_optimal - 4.0 * self.epsilon_effective).abs() > TOL_CONSTRUCT {
            return Err(Error::InvariantViolated(format!(
                "K = {} deviates from 4|PE − ½| = {}",
                self.k_optimal,
                4.0 * self.epsilon_effective
            )));
        }
        if self.bw_min < 1.0 - self.k_optimal / 2.0 - TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "BW_min = {} below 1 − K/2 = {}",
                self.bw_min,
                1.0 - self.k_optimal / 2.0
            )));
        }
        Ok(())
    }
}

/// Assembles the report and asserts the criterion chain: whenever
/// |PE − ½| ≤ ε one must have K ≤ 4ε, BW_min ≥ 1 − 2ε, and
/// (root fidelity)² ≥ (1 − 2ε)².
pub fn security_report(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    epsilon: f64,
) -> Result<SecurityReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, 1/2)"
        )));
    }
    let (helstrom_povm, pe) = helstrom(rho0, rho1, 0.5)?;
    let p0 = helstrom_povm.expectations(rho0)?;
    let p1 = helstrom_povm.expectations(rho1)?;
    let pair = DistributionPair::new(vec!["0".into(), "1".into()], p0, p1)?;
    let k_optimal = kolmogorov(&pair);
    let epsilon_effective = (pe - 0.5).abs();

    let (_, bw_min) = min_bw_measurement(rho0, rho1)?;
    let fidelity_root = root_fidelity(rho0, rho1)?;
    let fidelity_squared = fidelity(rho0, rho1)?;
    let criterion_met = epsilon_effective <= epsilon;

    let report = SecurityReport {
        pe,
        epsilon_effective,
        k_optimal,
        bw_min,
        fidelity_root,
        fidelity_squared,
        epsilon,
        criterion_met,
    };
    report.validate()?;

    if criterion_met {
        let floor = 1.0 - 2.0 * epsilon;
        if k_optimal > 4.0 * epsilon + TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "criterion met but K = {k_optimal} exceeds 4ε"
            )));
        }
        if bw_min < floor - TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "criterion met but BW_min = {bw_min} below 1 − 2ε = {floor}"
            )));
        }
        if fidelity_squared < floor * floor - TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "criterion met but F = {fidelity_squared} below (1 − 2ε)²"
            )));
        }
    }
    Ok(report)
}

fn check_pair(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<()> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state pair of dimensions {} and {}",
            rho0.dim(),
            rho1.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Basis;
    use crate::random;
    use crate::state::bb84_qubit;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn swap_pair() -> DistributionPair {
        DistributionPair::new(
            vec!["0".into(), "1".into()],
            vec![0.75, 0.25],
            vec![0.25, 0.75],
        )
        .unwrap()
    }

    fn bb84_pair() -> (DensityMatrix, DensityMatrix) {
        let rho0 = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.75, 0.0), c(0.25, 0.0), c(0.25, 0.0), c(0.25, 0.0)],
        );
        let rho1 = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.25, 0.0), c(0.25, 0.0), c(0.25, 0.0), c(0.75, 0.0)],
        );
        (
            DensityMatrix::new(rho0, vec![2]).unwrap(),
            DensityMatrix::new(rho1, vec![2]).unwrap(),
        )
    }

    #[test]
    fn kolmogorov_basics() {
        let equal = DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![0.3, 0.7],
            vec![0.3, 0.7],
        )
        .unwrap();
        assert_abs_diff_eq!(kolmogorov(&equal), 0.0, epsilon = 1e-15);

        let disjoint = DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(kolmogorov(&disjoint), 2.0, epsilon = 1e-15);

        assert_abs_diff_eq!(kolmogorov(&swap_pair()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bhattacharyya_basics() {
        let equal = DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![0.3, 0.7],
            vec![0.3, 0.7],
        )
        .unwrap();
        assert_abs_diff_eq!(bhattacharyya(&equal), 1.0, epsilon = 1e-12);

        let disjoint = DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(bhattacharyya(&disjoint), 0.0, epsilon = 1e-15);

        // 2·√(3/16) = √3/2
        assert_abs_diff_eq!(bhattacharyya(&swap_pair()), 3f64.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn distribution_pair_rejects_corruption() {
        assert!(DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![-0.1, 1.1],
            vec![0.5, 0.5]
        )
        .is_err());
        assert!(DistributionPair::new(
            vec!["a".into(), "b".into()],
            vec![0.4, 0.4],
            vec![0.5, 0.5]
        )
        .is_err());
    }

    #[test]
    fn probability_of_error_examples() {
        // perfect distinguisher
        let perfect = DistributionPair::new(
            vec!["0".into(), "1".into()],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(probability_of_error(&perfect, 0.5).unwrap(), 0.0, epsilon = 1e-15);

        // uninformative
        let flat = DistributionPair::new(
            vec!["0".into(), "1".into()],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(probability_of_error(&flat, 0.5).unwrap(), 0.5, epsilon = 1e-15);

        // PE = 1/4 and K = 4|PE − ½| = 1
        let pair = swap_pair();
        let pe = probability_of_error(&pair, 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(kolmogorov(&pair), 4.0 * (pe - 0.5).abs(), epsilon = 1e-15);

        let triple = DistributionPair::new(
            vec!["0".into(), "1".into(), "2".into()],
            vec![0.5, 0.25, 0.25],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        assert!(probability_of_error(&triple, 0.5).is_err());
    }

    #[test]
    fn helstrom_degenerate_cases() {
        let rho = bb84_qubit(false, Basis::Times).density();
        let (_, pe) = helstrom(&rho, &rho, 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.5, epsilon = 1e-12);

        let zero = bb84_qubit(false, Basis::Plus).density();
        let one = bb84_qubit(true, Basis::Plus).density();
        let (_, pe) = helstrom(&zero, &one, 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn helstrom_matches_trace_norm_formula() {
        let (rho0, rho1) = bb84_pair();
        let (_, pe) = helstrom(&rho0, &rho1, 0.5).unwrap();
        let tn = linalg::trace_norm(&(rho0.matrix() - rho1.matrix()));
        assert_abs_diff_eq!(pe, 0.5 - 0.25 * tn, epsilon = 1e-10);
        // ‖ρ0 − ρ1‖₁ = 1 for this pair, so PE = 1/4.
        assert_abs_diff_eq!(pe, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn helstrom_beats_random_binary_povms() {
        let (rho0, rho1) = bb84_pair();
        let (_, pe) = helstrom(&rho0, &rho1, 0.5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let povm = random::random_povm(2, 2, &mut rng).unwrap();
            let p0 = povm.expectations(&rho0).unwrap();
            let p1 = povm.expectations(&rho1).unwrap();
            // best relabeling of the two outcomes as guesses
            let pe_a = 0.5 * p0[1] + 0.5 * p1[0];
            let pe_b = 0.5 * p0[0] + 0.5 * p1[1];
            let best = pe_a.min(pe_b);
            assert!(best >= pe - 1e-6, "random POVM beat Helstrom: {best} < {pe}");
        }
    }

    #[test]
    fn coarsening_preserves_kolmogorov() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let dim = 2 + (rng.random::<u32>() % 3) as usize;
            let outcomes = 2 + (rng.random::<u32>() % 4) as usize;
            let rho0 = random::random_density(dim, &mut rng).unwrap();
            let rho1 = random::random_density(dim, &mut rng).unwrap();
            let m = random::random_general_measurement(dim, outcomes, &mut rng).unwrap();
            let (_, before, after) = binary_coarsen(&m, &rho0, &rho1).unwrap();
            assert_abs_diff_eq!(kolmogorov(&before), kolmogorov(&after), epsilon = 1e-12);
        }
    }

    #[test]
    fn coarsening_equal_states_gives_zero_k() {
        let rho = bb84_qubit(true, Basis::Times).density();
        let m = GeneralMeasurement::computational(2).unwrap();
        let (_, before, after) = binary_coarsen(&m, &rho, &rho).unwrap();
        assert_abs_diff_eq!(kolmogorov(&before), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kolmogorov(&after), 0.0, epsilon = 1e-15);
        for (a, b) in after.p0().iter().zip(after.p1()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn coarsening_binary_input_is_a_relabeling() {
        let (rho0, rho1) = bb84_pair();
        let m = GeneralMeasurement::computational(2).unwrap();
        let (_, before, after) = binary_coarsen(&m, &rho0, &rho1).unwrap();
        let mut before_sorted: Vec<f64> = before.p0().to_vec();
        let mut after_sorted: Vec<f64> = after.p0().to_vec();
        before_sorted.sort_by(f64::total_cmp);
        after_sorted.sort_by(f64::total_cmp);
        for (a, b) in before_sorted.iter().zip(&after_sorted) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn min_bw_reaches_root_fidelity_on_bb84_pair() {
        let (rho0, rho1) = bb84_pair();
        let (_, bw) = min_bw_measurement(&rho0, &rho1).unwrap();
        let fid = root_fidelity(&rho0, &rho1).unwrap();
        assert_abs_diff_eq!(bw, fid, epsilon = 1e-6);
        assert_abs_diff_eq!(bw, 3f64.sqrt() / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn min_bw_on_equal_states_is_one() {
        let rho = bb84_qubit(false, Basis::Times).density();
        let (_, bw) = min_bw_measurement(&rho, &rho).unwrap();
        assert_abs_diff_eq!(bw, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn min_bw_on_commuting_diagonals_is_classical_bhattacharyya() {
        let d0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.7, 0.0),
            c(0.3, 0.0),
        ]));
        let d1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.2, 0.0),
            c(0.8, 0.0),
        ]));
        let rho0 = DensityMatrix::new(d0, vec![2]).unwrap();
        let rho1 = DensityMatrix::new(d1, vec![2]).unwrap();
        let (_, bw) = min_bw_measurement(&rho0, &rho1).unwrap();
        let expected = (0.7f64 * 0.2).sqrt() + (0.3f64 * 0.8).sqrt();
        assert_abs_diff_eq!(bw, expected, epsilon = 1e-10);
    }

    #[test]
    fn security_report_on_equal_states() {
        let rho = bb84_qubit(true, Basis::Plus).density();
        let report = security_report(&rho, &rho, 0.04).unwrap();
        assert_abs_diff_eq!(report.pe, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(report.k_optimal, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.bw_min, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(report.fidelity_root, 1.0, epsilon = 1e-8);
        assert!(report.criterion_met);
    }

    #[test]
    fn security_report_chain_floor() {
        // With the criterion met, BW_min must sit above 1 − 2ε = 0.92.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        // nearly equal states: mix a common state with a slight perturbation
        let base = random::random_density(4, &mut rng).unwrap();
        let other = random::random_density(4, &mut rng).unwrap();
        let mixed = CMatrix::from_fn(4, 4, |i, j| {
            base.matrix()[(i, j)] * c(0.99, 0.0) + other.matrix()[(i, j)] * c(0.01, 0.0)
        });
        let rho1 = DensityMatrix::new(linalg::hermitize(&mixed), vec![4]).unwrap();
        let report = security_report(&base, &rho1, 1.0 / 25.0).unwrap();
        if report.criterion_met {
            assert!(report.bw_min >= 1.0 - 2.0 / 25.0 - 1e-8);
        }
    }

    #[test]
    fn security_report_rejects_out_of_range_epsilon() {
        let (rho0, rho1) = bb84_pair();
        assert!(security_report(&rho0, &rho1, 0.6).is_err());
        assert!(security_report(&rho0, &rho1, 0.0).is_err());
    }
}
