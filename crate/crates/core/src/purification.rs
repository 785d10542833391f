//! Purifications, fidelity, Uhlmann-aligned purification pairs, and
//! ensemble steering.
//!
//! A purification of ρ on a d-dimensional system is a pure state of
//! system ⊗ ancilla whose reduced state on the system equals ρ. It is
//! handled here through its amplitude matrix M with ψ[s·d_a + a] = M[s, a],
//! so that the reduced system state is M M† and the reduced ancilla state is
//! (M† M)ᵀ.
//!
//! Steering follows the purification picture of mixtures: measuring the
//! ancilla of a purification with a suitable POVM realizes any pure-state
//! ensemble that averages to ρ, with outcome i occurring with probability
//! p_i and leaving the system in |ψ_i⟩.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, TOL_CONSTRUCT, TOL_CROSS};
use crate::measurement::{Effect, Povm, NEGLIGIBLE_PROBABILITY};
use crate::state::{DensityMatrix, Ensemble, PureState};

/// Eigenvalue / singular-value cutoff for support pseudo-inverses.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Label used for the completeness element a steering POVM gains when the
/// steered state is rank-deficient.
pub const DISCARD_LABEL: &str = "discard";

/// A pure state on system ⊗ ancilla together with the split of dimensions.
#[derive(Clone, Debug)]
pub struct Purification {
    joint: PureState,
    system_dim: usize,
    ancilla_dim: usize,
}

impl Purification {
    pub fn new(joint: PureState, system_dim: usize, ancilla_dim: usize) -> Result<Self> {
        if system_dim * ancilla_dim != joint.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{system_dim} x {ancilla_dim} does not factor a joint state of dimension {}",
                joint.dim()
            )));
        }
        Ok(Self {
            joint,
            system_dim,
            ancilla_dim,
        })
    }

    /// Builds the joint state from its amplitude matrix (rows = system,
    /// columns = ancilla). The matrix must have unit Frobenius norm.
    pub fn from_amplitude_matrix(m: &CMatrix) -> Result<Self> {
        let (system_dim, ancilla_dim) = m.shape();
        let mut amps = CVector::zeros(system_dim * ancilla_dim);
        for s in 0..system_dim {
            for a in 0..ancilla_dim {
                amps[s * ancilla_dim + a] = m[(s, a)];
            }
        }
        let joint = PureState::new(amps, vec![system_dim, ancilla_dim])?;
        Ok(Self {
            joint,
            system_dim,
            ancilla_dim,
        })
    }

    pub fn joint(&self) -> &PureState {
        &self.joint
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    /// M with ψ[s·d_a + a] = M[s, a].
    pub fn amplitude_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.system_dim, self.ancilla_dim);
        let amps = self.joint.amplitudes();
        for s in 0..self.system_dim {
            for a in 0..self.ancilla_dim {
                m[(s, a)] = amps[s * self.ancilla_dim + a];
            }
        }
        m
    }

    /// Reduced state on the system, M M†.
    pub fn reduced_system(&self) -> Result<DensityMatrix> {
        self.joint.reduced(&[0])
    }

    /// Reduced state on the ancilla, (M† M)ᵀ.
    pub fn reduced_ancilla(&self) -> Result<DensityMatrix> {
        self.joint.reduced(&[1])
    }

    /// Checks the defining property: the reduced system state equals `rho`
    /// entrywise within 1e-8.
    pub fn verify_purifies(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.system_dim {
            return Err(Error::DimensionMismatch(format!(
                "purification system dimension {} against state dimension {}",
                self.system_dim,
                rho.dim()
            )));
        }
        let reduced = self.reduced_system()?;
        let defect = linalg::max_abs_diff(reduced.matrix(), rho.matrix());
        if defect > TOL_CROSS {
            return Err(Error::InvalidState(format!(
                "purification defect {defect:.3e} exceeds 1e-8"
            )));
        }
        Ok(())
    }

    /// ⟨self|other⟩ on the joint space.
    pub fn overlap(&self, other: &Purification) -> Result<Complex64> {
        self.joint.overlap(&other.joint)
    }
}

/// The canonical purification (√ρ ⊗ I) Σ_k |k⟩|k⟩ with ancilla dimension
/// equal to the system dimension; its amplitude matrix is √ρ itself.
pub fn canonical_purification(rho: &DensityMatrix) -> Result<Purification> {
    let sqrt = linalg::matrix_sqrt(rho.matrix())?;
    Purification::from_amplitude_matrix(&sqrt)
}

/// Tr √(√ρ0 ρ1 √ρ0): the root fidelity, equal to the maximal purification
/// overlap |⟨φ0|φ1⟩| and to the minimal Bhattacharyya-Wootters coefficient
/// over measurements.
pub fn root_fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of states with dimensions {} and {}",
            rho0.dim(),
            rho1.dim()
        )));
    }
    let s0 = linalg::matrix_sqrt(rho0.matrix())?;
    let inner = linalg::hermitize(&(&s0 * rho1.matrix() * &s0));
    let eig = linalg::eigh(&inner);
    Ok(eig.values.iter().map(|&v| v.max(0.0).sqrt()).sum())
}

/// Squared fidelity (Tr √(√ρ0 ρ1 √ρ0))², the other common convention.
pub fn fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    let r = root_fidelity(rho0, rho1)?;
    Ok(r * r)
}

/// Purifications φ0, φ1 of ρ0, ρ1 with a common ancilla dimension whose
/// overlap ⟨φ0|φ1⟩ is real, nonnegative and equal to the root fidelity —
/// the pair at which the purification-overlap maximum is attained.
///
/// φ0 is the canonical purification; φ1 is the canonical purification of ρ1
/// followed by the ancilla rotation from the singular value decomposition
/// of √ρ0 √ρ1.
pub fn optimal_purifications(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
) -> Result<(Purification, Purification)> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "purifications of states with dimensions {} and {}",
            rho0.dim(),
            rho1.dim()
        )));
    }
    let s0 = linalg::matrix_sqrt(rho0.matrix())?;
    let s1 = linalg::matrix_sqrt(rho1.matrix())?;
    let product = &s0 * &s1;
    let svd = product.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    // Right-multiplying the amplitude matrix acts on the ancilla alone and
    // leaves the reduced system state M M† unchanged.
    let rotation = v_t.adjoint() * u.adjoint();
    let m1 = &s1 * rotation;

    let phi0 = Purification::from_amplitude_matrix(&s0)?;
    let phi1 = Purification::from_amplitude_matrix(&m1)?;

    let overlap = phi0.overlap(&phi1)?;
    let target: f64 = svd.singular_values.iter().sum();
    if overlap.im.abs() > TOL_CROSS || (overlap.re - target).abs() > TOL_CROSS {
        return Err(Error::InvariantViolated(format!(
            "aligned purification overlap {overlap} differs from Σσ = {target}"
        )));
    }
    Ok((phi0, phi1))
}

/// A steering POVM on the ancilla of `phi`: measuring it yields ensemble
/// entry i with probability p_i and collapses the system to |ψ_i⟩.
///
/// Requires the ensemble average to match the reduced system state within
/// 1e-8. For rank-deficient states the construction uses the support
/// pseudo-inverse and appends a zero-probability completeness element
/// labeled [`DISCARD_LABEL`].
pub fn steering_povm(phi: &Purification, target: &Ensemble) -> Result<Povm> {
    let rho = phi.reduced_system()?;
    if target.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble of dimension {} against system of dimension {}",
            target.dim(),
            rho.dim()
        )));
    }
    let avg = target.average();
    let defect = linalg::max_abs_diff(avg.matrix(), rho.matrix());
    if defect > TOL_CROSS {
        return Err(Error::SteeringInfeasible(format!(
            "ensemble average deviates from the purified state by {defect:.3e}"
        )));
    }

    let m = phi.amplitude_matrix();
    let pinv = linalg::pseudo_inverse(&m, SUPPORT_CUTOFF);

    let mut elements: Vec<(String, Effect)> = Vec::with_capacity(target.len() + 1);
    let mut sum = CMatrix::zeros(phi.ancilla_dim(), phi.ancilla_dim());
    for (i, (p, state)) in target.entries().iter().enumerate() {
        // Effect (v v†)ᵀ = w w† with w = conj(v) and v = √p · M⁺ ψ; then
        // M (w w†)ᵀ M† = (M v)(M v)† = p ψ ψ†.
        let v = (&pinv * state.amplitudes()).scale(p.sqrt());
        let w = v.map(|z| z.conj());
        let effect = Effect::Rank1(w);
        effect.add_into(&mut sum);
        elements.push((i.to_string(), effect));
    }

    // Completeness: what is missing from the identity is the projector onto
    // the orthogonal complement of the ancilla support.
    let remainder = linalg::identity(phi.ancilla_dim()) - &sum;
    let remainder = linalg::hermitize(&remainder);
    if linalg::max_abs(&remainder) > TOL_CONSTRUCT {
        elements.push((DISCARD_LABEL.to_string(), Effect::Dense(remainder)));
    }

    Povm::from_effects(elements)
}

/// Conditional state of the system after an ancilla measurement outcome.
#[derive(Clone, Debug)]
pub enum Conditional {
    Pure(PureState),
    Mixed(DensityMatrix),
    /// Probability below [`NEGLIGIBLE_PROBABILITY`]; no state reported.
    Negligible,
}

impl Conditional {
    pub fn density(&self) -> Option<DensityMatrix> {
        match self {
            Conditional::Pure(p) => Some(p.density()),
            Conditional::Mixed(m) => Some(m.clone()),
            Conditional::Negligible => None,
        }
    }

    pub fn pure_state(&self) -> Option<&PureState> {
        match self {
            Conditional::Pure(p) => Some(p),
            _ => None,
        }
    }
}

/// One outcome of measuring a POVM on the ancilla of a purification.
#[derive(Clone, Debug)]
pub struct AncillaOutcome {
    pub label: String,
    pub probability: f64,
    pub conditional: Conditional,
}

/// Measures `povm` on the ancilla of `phi`, returning the exact outcome
/// distribution and the conditional system states. Rank-one effects give
/// pure conditionals (at cost O(d_s·d_a) each); dense effects give mixed
/// ones through M Eᵀ M†.
pub fn measure_ancilla(phi: &Purification, povm: &Povm) -> Result<Vec<AncillaOutcome>> {
    if povm.dim() != phi.ancilla_dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM of dimension {} against ancilla of dimension {}",
            povm.dim(),
            phi.ancilla_dim()
        )));
    }
    let m = phi.amplitude_matrix();
    let mut outcomes = Vec::with_capacity(povm.len());
    for (label, effect) in povm.elements() {
        let outcome = match effect {
            Effect::Rank1(w) => {
                // Effect w w† on the ancilla: conditional = (M w̄)(M w̄)†.
                let v = w.map(|z| z.conj());
                let sys = &m * v;
                let p = sys.norm_squared();
                let conditional = if p >= NEGLIGIBLE_PROBABILITY {
                    Conditional::Pure(PureState::normalized(sys, vec![phi.system_dim()])?)
                } else {
                    Conditional::Negligible
                };
                AncillaOutcome {
                    label: label.clone(),
                    probability: p,
                    conditional,
                }
            }
            Effect::Dense(e) => {
                let unnormalized = &m * e.transpose() * m.adjoint();
                let p = linalg::trace(&unnormalized).re;
                let conditional = if p >= NEGLIGIBLE_PROBABILITY {
                    let normalized = linalg::hermitize(&unnormalized.unscale(p));
                    Conditional::Mixed(DensityMatrix::new(normalized, vec![phi.system_dim()])?)
                } else {
                    Conditional::Negligible
                };
                AncillaOutcome {
                    label: label.clone(),
                    probability: p,
                    conditional,
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
