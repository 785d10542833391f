//! The purification attack on the commitment phase.
//!
//! Instead of committing to a mixture, Alice keeps an ancilla and prepares
//! the joint system in φ0, a purification of the honest density matrix ρ0
//! that is Uhlmann-aligned with a purification φ1 of ρ1, so that
//! ⟨φ0|φ1⟩ equals the root fidelity of (ρ0, ρ1). To unveil b she measures
//! her ancilla with the steering POVM that would realize the honest
//! (θ, c)-labeled mixture from φ_b — always on the ancilla of φ0, since
//! that is the state she actually holds.
//!
//! For b = 0 the steering is exact and Bob's test passes with certainty.
//! For b = 1 the acceptance probability can drop below the ideal value
//! only by
//!
//! |Pr(ok | φ0) − Pr(ok | φ1)| ≤ 2‖M_ok(φ0−φ1)‖ ≤ 2‖φ0−φ1‖
//!                             = 2√(2(1−⟨φ0|φ1⟩)),
//!
//! every link of which is computed exactly here.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, TOL_CROSS};
use crate::measurement::{Effect, Povm};
use crate::protocol::{Announcement, CommitmentScheme, TestPolicy};
use crate::purification::{
    measure_ancilla, optimal_purifications, root_fidelity, steering_povm, Conditional,
    Purification,
};
use crate::state::PureState;

/// Everything a dishonest Alice prepares before the commit message is sent.
#[derive(Clone, Debug)]
pub struct AttackState {
    scheme: CommitmentScheme,
    phi0: Purification,
    phi1: Purification,
    steer0: Povm,
    steer1: Povm,
    announcements0: Vec<Announcement>,
    announcements1: Vec<Announcement>,
    honest_probs0: Vec<f64>,
    honest_probs1: Vec<f64>,
    overlap: f64,
}

/// One outcome of the unveil measurement: the announcement Alice makes (or
/// none, when the completeness element of a cross-steered POVM fires), its
/// probability, and Bob's conditional state.
#[derive(Clone, Debug)]
pub struct UnveilOutcome {
    pub announcement: Option<Announcement>,
    pub probability: f64,
    pub bob_state: Conditional,
}

/// The exact numbers entering the bound chain.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaBoundCheck {
    pub accept1: f64,
    pub accept1_ideal: f64,
    /// |accept1_ideal − accept1|.
    pub delta: f64,
    /// 2‖M_ok(φ0 − φ1)‖, the middle link.
    pub operator_link: f64,
    /// 2‖φ0 − φ1‖ = 2√(2(1 − overlap)), the final bound.
    pub bound_delta: f64,
    pub holds: bool,
}

/// Full machine-readable attack summary.
#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub context: String,
    pub overlap: f64,
    pub accept0: f64,
    pub accept1: f64,
    pub accept1_ideal: f64,
    pub delta: f64,
    pub bound_delta: f64,
    pub classic_bound: f64,
    pub epsilon_used: f64,
    pub epsilon_prime_used: f64,
}

impl AttackReport {
    /// Report-level invariants; called before anything is written out.
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("accept0", self.accept0),
            ("accept1", self.accept1),
            ("accept1_ideal", self.accept1_ideal),
        ] {
            if !(-TOL_CROSS..=1.0 + TOL_CROSS).contains(&p) {
                return Err(Error::InvariantViolated(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if self.delta > self.bound_delta + TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "delta {} exceeds its bound {}",
                self.delta, self.bound_delta
            )));
        }
        Ok(())
    }
}

impl AttackState {
    /// Builds the attack for a scheme: honest density matrices, aligned
    /// purifications, and both steering POVMs. The steering invariants
    /// (probabilities and conditional states of the honest ensembles) are
    /// verified before the state is returned.
    pub fn build(scheme: &CommitmentScheme) -> Result<Self> {
        let rho0 = scheme.honest_density_matrix(false)?;
        let rho1 = scheme.honest_density_matrix(true)?;
        let (phi0, phi1) = optimal_purifications(&rho0, &rho1)?;

        let labeled0 = scheme.honest_ensemble(false)?;
        let labeled1 = scheme.honest_ensemble(true)?;
        let steer0 = steering_povm(&phi0, &labeled0.ensemble)?;
        let steer1 = steering_povm(&phi1, &labeled1.ensemble)?;

        let overlap = phi0.overlap(&phi1)?;
        if overlap.im.abs() > TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "purification overlap has imaginary part {}",
                overlap.im
            )));
        }
        let overlap = overlap.re;
        let fid = root_fidelity(&rho0, &rho1)?;
        if (overlap - fid).abs() > TOL_CROSS {
            return Err(Error::InvariantViolated(format!(
                "overlap {overlap} deviates from root fidelity {fid}"
            )));
        }

        let honest_probs0: Vec<f64> =
            labeled0.ensemble.entries().iter().map(|(p, _)| *p).collect();
        let honest_probs1: Vec<f64> =
            labeled1.ensemble.entries().iter().map(|(p, _)| *p).collect();

        let state = Self {
            scheme: scheme.clone(),
            phi0,
            phi1,
            steer0,
            steer1,
            announcements0: labeled0.announcements,
            announcements1: labeled1.announcements,
            honest_probs0,
            honest_probs1,
            overlap,
        };
        state.verify_steering(false, &labeled0.ensemble)?;
        state.verify_steering(true, &labeled1.ensemble)?;
        Ok(state)
    }

    /// Checks that steer_b applied to φ_b reproduces (p_i, |ψ_i⟩) within
    /// 1e-8.
    fn verify_steering(&self, bit: bool, target: &crate::state::Ensemble) -> Result<()> {
        let outcomes = self.unveil_ideal(bit)?;
        for (i, (p, psi)) in target.entries().iter().enumerate() {
            let outcome = &outcomes[i];
            if (outcome.probability - p).abs() > TOL_CROSS {
                return Err(Error::InvariantViolated(format!(
                    "steering probability {} deviates from honest {p}",
                    outcome.probability
                )));
            }
            if let Conditional::Pure(state) = &outcome.bob_state {
                if state.fidelity_with(psi)? < 1.0 - TOL_CROSS {
                    return Err(Error::InvariantViolated(
                        "steered conditional state deviates from the honest state".into(),
                    ));
                }
            } else if *p >= 1e-9 {
                return Err(Error::InvariantViolated(
                    "steering produced a non-pure conditional".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn scheme(&self) -> &CommitmentScheme {
        &self.scheme
    }

    pub fn phi0(&self) -> &Purification {
        &self.phi0
    }

    pub fn phi1(&self) -> &Purification {
        &self.phi1
    }

    pub fn steering(&self, bit: bool) -> &Povm {
        if bit {
            &self.steer1
        } else {
            &self.steer0
        }
    }

    pub fn announcements(&self, bit: bool) -> &[Announcement] {
        if bit {
            &self.announcements1
        } else {
            &self.announcements0
        }
    }

    /// Honest announcement probabilities p(θ,c|b), aligned with
    /// [`announcements`](Self::announcements).
    pub fn honest_probabilities(&self, bit: bool) -> &[f64] {
        if bit {
            &self.honest_probs1
        } else {
            &self.honest_probs0
        }
    }

    /// ⟨φ0|φ1⟩, real and nonnegative by construction.
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// The unveil measurement Alice actually performs: steer_b on the
    /// ancilla of the committed state φ0.
    pub fn unveil(&self, bit: bool) -> Result<Vec<UnveilOutcome>> {
        self.unveil_from(&self.phi0, bit)
    }

    /// The reference measurement: steer_b on φ_b itself. For b = 0 this is
    /// the same as [`unveil`](Self::unveil).
    pub fn unveil_ideal(&self, bit: bool) -> Result<Vec<UnveilOutcome>> {
        let phi = if bit { &self.phi1 } else { &self.phi0 };
        self.unveil_from(phi, bit)
    }

    fn unveil_from(&self, phi: &Purification, bit: bool) -> Result<Vec<UnveilOutcome>> {
        let outcomes = measure_ancilla(phi, self.steering(bit))?;
        let announcements = self.announcements(bit);
        Ok(outcomes
            .into_iter()
            .enumerate()
            .map(|(i, o)| UnveilOutcome {
                announcement: announcements.get(i).copied(),
                probability: o.probability,
                bob_state: o.conditional,
            })
            .collect())
    }

    /// Exact acceptance probability Pr(T_b = ok) when Alice commits φ0 and
    /// unveils b: Σ_i p_i · Tr(A(θ_i, c_i) σ_i), evaluated as
    /// Σ_i ⟨v_i|A_i|v_i⟩ over the unnormalized conditionals v_i. No
    /// sampling is involved.
    pub fn acceptance(&self, bit: bool, policy: &TestPolicy) -> Result<f64> {
        self.acceptance_from(&self.phi0, bit, policy)
    }

    /// Acceptance when the matching purification φ_b is steered; this is
    /// the ε'-side reference value (1 under the default policy).
    pub fn acceptance_ideal(&self, bit: bool, policy: &TestPolicy) -> Result<f64> {
        let phi = if bit { &self.phi1 } else { &self.phi0 };
        self.acceptance_from(phi, bit, policy)
    }

    fn acceptance_from(&self, phi: &Purification, bit: bool, policy: &TestPolicy) -> Result<f64> {
        let m = phi.amplitude_matrix();
        self.acceptance_effect_quadratic_form(&m, bit, policy)
    }

    /// Σ_i ⟨M v_i | A_i | M v_i⟩ where v_i is the conjugated steering
    /// vector of outcome i and M an amplitude matrix. With M the amplitude
    /// matrix of a unit vector this is ⟨ψ|E_ok|ψ⟩ for the total acceptance
    /// effect E_ok = Σ_i A_i ⊗ E_i; with M a difference of amplitude
    /// matrices it yields ‖M_ok(φ − φ')‖².
    fn acceptance_effect_quadratic_form(
        &self,
        m: &CMatrix,
        bit: bool,
        policy: &TestPolicy,
    ) -> Result<f64> {
        let steering = self.steering(bit);
        let announcements = self.announcements(bit);
        let mut total = 0.0;
        for (i, (_, effect)) in steering.elements().iter().enumerate() {
            let Some(announcement) = announcements.get(i) else {
                // The completeness element never yields a valid
                // announcement, so it contributes nothing to acceptance.
                continue;
            };
            let Effect::Rank1(w) = effect else {
                return Err(Error::InvariantViolated(
                    "steering elements are rank-one by construction".into(),
                ));
            };
            let v: CVector = w.map(|z| z.conj());
            let conditional = m * v;
            let op = self
                .scheme
                .acceptance_operator(bit, announcement, policy)?;
            total += op.expectation_vector(&conditional);
        }
        Ok(total)
    }

    /// Every link of the bound chain, computed exactly:
    /// delta ≤ 2‖M_ok(φ0−φ1)‖ ≤ 2‖φ0−φ1‖ = 2√(2(1−overlap)).
    pub fn verify_delta_bound(&self, policy: &TestPolicy) -> Result<DeltaBoundCheck> {
        let accept1 = self.acceptance(true, policy)?;
        let accept1_ideal = self.acceptance_ideal(true, policy)?;
        let delta = (accept1_ideal - accept1).abs();

        let m_diff = self.phi0.amplitude_matrix() - self.phi1.amplitude_matrix();
        let operator_link = 2.0
            * self
                .acceptance_effect_quadratic_form(&m_diff, true, policy)?
                .max(0.0)
                .sqrt();

        let norm_diff = vector_norm_diff(&self.phi0, &self.phi1);
        let bound_delta = attack_bound_delta(self.overlap);
        // ‖φ0 − φ1‖ = √(2(1 − ⟨φ0|φ1⟩)) for a real nonnegative overlap.
        if (2.0 * norm_diff - bound_delta).abs() > 1e-10 {
            return Err(Error::InvariantViolated(format!(
                "norm identity violated: 2‖φ0−φ1‖ = {} vs bound {bound_delta}",
                2.0 * norm_diff
            )));
        }

        let holds = delta <= bound_delta + TOL_CROSS
            && delta <= operator_link + TOL_CROSS
            && operator_link <= bound_delta + TOL_CROSS;
        Ok(DeltaBoundCheck {
            accept1,
            accept1_ideal,
            delta,
            operator_link,
            bound_delta,
            holds,
        })
    }

    /// Assembles the full report for the given slack parameters.
    pub fn report(
        &self,
        epsilon: f64,
        epsilon_prime: f64,
        policy: &TestPolicy,
    ) -> Result<AttackReport> {
        let accept0 = self.acceptance(false, policy)?;
        let check = self.verify_delta_bound(policy)?;
        let report = AttackReport {
            context: self.scheme.describe(),
            overlap: self.overlap,
            accept0,
            accept1: check.accept1,
            accept1_ideal: check.accept1_ideal,
            delta: check.delta,
            bound_delta: check.bound_delta,
            classic_bound: classic_attack_bound(epsilon, epsilon_prime),
            epsilon_used: epsilon,
            epsilon_prime_used: epsilon_prime,
        };
        report.validate()?;
        Ok(report)
    }

    /// Prepares a sampler for Monte Carlo cross-checks of the exact
    /// acceptance value.
    pub fn sampler(&self, bit: bool, policy: TestPolicy) -> Result<AttackSampler> {
        let outcomes = self.unveil(bit)?;
        let qubit_dims = vec![2usize; self.scheme.n()];
        let mut cumulative = Vec::with_capacity(outcomes.len());
        let mut acc = 0.0;
        let mut entries = Vec::with_capacity(outcomes.len());
        for outcome in &outcomes {
            acc += outcome.probability;
            cumulative.push(acc);
            let state = match outcome.bob_state.pure_state() {
                Some(s) => Some(s.clone().reshaped(qubit_dims.clone())?),
                None => None,
            };
            entries.push((outcome.announcement, state));
        }
        Ok(AttackSampler {
            scheme: self.scheme.clone(),
            bit,
            policy,
            entries,
            cumulative,
        })
    }
}

/// Samples full attack rounds: draw Alice's announcement, let Bob measure
/// the conditional state in random bases, apply the unveil test.
pub struct AttackSampler {
    scheme: CommitmentScheme,
    bit: bool,
    policy: TestPolicy,
    entries: Vec<(Option<Announcement>, Option<PureState>)>,
    cumulative: Vec<f64>,
}

impl AttackSampler {
    /// One sampled round; returns whether Bob accepted.
    pub fn sample_round(&self, rng: &mut impl rand::Rng) -> Result<bool> {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        let idx = idx.min(self.entries.len() - 1);
        let (announcement, state) = &self.entries[idx];
        let (Some(announcement), Some(state)) = (announcement, state) else {
            return Ok(false);
        };
        let (measured_bases, measured_bits) = crate::protocol::bob_measure(state, rng)?;
        Ok(self.scheme.test_transcript(
            self.bit,
            announcement,
            &measured_bases,
            &measured_bits,
            &self.policy,
        ))
    }
}

fn vector_norm_diff(a: &Purification, b: &Purification) -> f64 {
    (a.joint().amplitudes() - b.joint().amplitudes()).norm()
}

/// 2√(2(1 − overlap)): the exact bound on |accept1_ideal − accept1|.
pub fn attack_bound_delta(overlap: f64) -> f64 {
    2.0 * (2.0 * (1.0 - overlap).max(0.0)).sqrt()
}

/// Guaranteed attack acceptance 1 − ε' − 2√(2(1 − overlap)) in terms of the
/// achieved purification overlap.
pub fn attack_bound(overlap: f64, epsilon_prime: f64) -> f64 {
    1.0 - epsilon_prime - attack_bound_delta(overlap)
}

/// The weaker classical form 1 − ε' − 4√ε, stated in terms of the
/// distinguishability slack ε with overlap² ≥ 1 − 2ε.
pub fn classic_attack_bound(epsilon: f64, epsilon_prime: f64) -> f64 {
    1.0 - epsilon_prime - 4.0 * epsilon.sqrt()
}

/// Exact rational evaluation of the classical bound, available whenever √ε
/// is rational. With ε = ε' = 1/25 this returns exactly 4/25.
pub fn classic_attack_bound_exact(
    epsilon: Ratio<i64>,
    epsilon_prime: Ratio<i64>,
) -> Option<Ratio<i64>> {
    let reduced = epsilon.reduced();
    let num = exact_isqrt(*reduced.numer())?;
    let den = exact_isqrt(*reduced.denom())?;
    Some(Ratio::from_integer(1) - epsilon_prime - Ratio::new(4 * num, den))
}

fn exact_isqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let guess = (n as f64).sqrt().round() as i64;
    for candidate in guess.saturating_sub(1)..=guess + 1 {
        if candidate >= 0 && candidate * candidate == n {
            return Some(candidate);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LinearCode;
    use crate::linalg::CMatrix;
    use crate::protocol::{builtin_scheme, SharedContext};
    use approx::assert_abs_diff_eq;

    fn single_qubit_scheme() -> CommitmentScheme {
        let code = LinearCode::new(vec!["1".parse().unwrap()]).unwrap();
        let ctx = SharedContext::new(code, "1".parse().unwrap()).unwrap();
        CommitmentScheme::Bcjl(ctx)
    }

    #[test]
    fn equal_density_scheme_has_unit_overlap_and_perfect_unveils() {
        let scheme = CommitmentScheme::ConjugateBasis { n: 2 };
        let attack = AttackState::build(&scheme).unwrap();
        assert_abs_diff_eq!(attack.overlap(), 1.0, epsilon = 1e-10);
        let policy = TestPolicy::default();
        assert_abs_diff_eq!(attack.acceptance(false, &policy).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(attack.acceptance(true, &policy).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn single_qubit_overlap_matches_bb84_root_fidelity() {
        let attack = AttackState::build(&single_qubit_scheme()).unwrap();
        // Frozen closed-form value for the BB84 pair: √3/2.
        assert_abs_diff_eq!(attack.overlap(), 3f64.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn unveil_of_committed_bit_reproduces_honest_distribution() {
        let attack = AttackState::build(&single_qubit_scheme()).unwrap();
        let outcomes = attack.unveil(false).unwrap();
        let honest = attack.honest_probabilities(false);
        for (outcome, p) in outcomes.iter().zip(honest) {
            assert_abs_diff_eq!(outcome.probability, *p, epsilon = 1e-10);
            assert!(outcome.bob_state.pure_state().is_some());
        }
    }

    #[test]
    fn unveil_outcomes_satisfy_defining_equations() {
        // Independent check by direct matrix computation: for each steering
        // element E_i, the probability must be ⟨φ0|(I ⊗ E_i)|φ0⟩ and the
        // conditional must match Tr_anc[(I ⊗ E_i)|φ0⟩⟨φ0|]/p, both computed
        // here from raw Kronecker products.
        let attack = AttackState::build(&single_qubit_scheme()).unwrap();
        let phi0 = attack.phi0().joint();
        let rho_joint = phi0.density();
        for bit in [false, true] {
            let steering = attack.steering(bit);
            let outcomes = attack.unveil(bit).unwrap();
            for ((_, effect), outcome) in steering.elements().iter().zip(&outcomes) {
                let e = effect.to_matrix();
                let lifted = crate::linalg::tensor_product(&crate::linalg::identity(2), &e);
                let p = rho_joint.expectation(&lifted).unwrap();
                assert_abs_diff_eq!(outcome.probability, p, epsilon = 1e-10);
                if p > 1e-9 {
                    let joint = rho_joint.matrix();
                    let product = &lifted * joint;
                    // partial trace over the ancilla of E|φ⟩⟨φ|, by hand
                    let mut cond = CMatrix::zeros(2, 2);
                    for s in 0..2 {
                        for t in 0..2 {
                            for a in 0..2 {
                                cond[(s, t)] += product[(s * 2 + a, t * 2 + a)];
                            }
                        }
                    }
                    cond.unscale_mut(p);
                    let reported = outcome.bob_state.density().unwrap();
                    assert!(
                        crate::linalg::max_abs_diff(&cond, reported.matrix()) < 1e-8,
                        "conditional mismatch"
                    );
                }
            }
        }
    }

    #[test]
    fn acceptance_of_committed_bit_is_one() {
        for scheme in [single_qubit_scheme(), builtin_scheme("toy42").unwrap()] {
            let attack = AttackState::build(&scheme).unwrap();
            let policy = TestPolicy::default();
            assert_abs_diff_eq!(attack.acceptance(false, &policy).unwrap(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(
                attack.acceptance_ideal(true, &policy).unwrap(),
                1.0,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn delta_bound_chain_holds_on_the_toy_context() {
        let attack = AttackState::build(&builtin_scheme("toy42").unwrap()).unwrap();
        let check = attack.verify_delta_bound(&TestPolicy::default()).unwrap();
        assert!(check.holds);
        assert!(check.delta <= check.operator_link + 1e-8);
        assert!(check.operator_link <= check.bound_delta + 1e-8);
        assert!(check.accept1 >= check.accept1_ideal - check.bound_delta - 1e-8);
    }

    #[test]
    fn bound_values() {
        assert_abs_diff_eq!(attack_bound(1.0, 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            attack_bound(0.999, 0.0),
            1.0 - 2.0 * 0.002f64.sqrt(),
            epsilon = 1e-12
        );
        // 1 - 2√0.002 ≈ 0.9106
        assert_abs_diff_eq!(attack_bound(0.999, 0.0), 0.910_557_280_9, epsilon = 1e-10);
        assert_abs_diff_eq!(classic_attack_bound(0.04, 0.04), 0.16, epsilon = 1e-12);
    }

    #[test]
    fn classic_bound_is_exactly_four_twentyfifths() {
        let eps = Ratio::new(1, 25);
        let bound = classic_attack_bound_exact(eps, eps).unwrap();
        assert_eq!(bound, Ratio::new(4, 25));
        // 4√ε = 4/5 exactly.
        assert_eq!(
            Ratio::from_integer(1) - Ratio::new(1, 25) - bound,
            Ratio::new(4, 5)
        );
        // no exact value when √ε is irrational
        assert!(classic_attack_bound_exact(Ratio::new(1, 2), eps).is_none());
    }

    #[test]
    fn report_validates_and_serializes() {
        let attack = AttackState::build(&single_qubit_scheme()).unwrap();
        let report = attack
            .report(0.04, 0.04, &TestPolicy::default())
            .unwrap();
        assert!(report.accept0 > 1.0 - 1e-8);
        assert_abs_diff_eq!(report.classic_bound, 0.16, epsilon = 1e-12);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"overlap\""));
    }
}
