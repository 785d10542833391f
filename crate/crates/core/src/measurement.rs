//! Generalized measurements: collapse-operator (Kraus) lists, POVMs, and
//! their application to pure or mixed states on arbitrary subsystem sets.
//!
//! A `GeneralMeasurement` stores collapse operators M_j with Σ M_j†M_j = I;
//! the isometry-plus-projectors form M_j = P_j U is provided as a
//! constructor. A `Povm` stores effect operators only, which is all that
//! outcome statistics need; conditional states are produced through the
//! canonical √E collapse.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, TOL_CONSTRUCT, TOL_CROSS};
use crate::state::{DensityMatrix, PureState, SubsystemSplit};

/// Outcome probabilities below this are reported with no conditional state.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

/// One measurement outcome: label, probability, and the renormalized
/// conditional state (absent when the probability is negligible).
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub label: String,
    pub probability: f64,
    pub conditional: Option<DensityMatrix>,
}

/// A POVM effect, stored either densely or as a rank-one outer product
/// w w† (the form steering produces; dense storage would be wasteful for
/// the thousands of rank-one elements a steering POVM carries).
#[derive(Clone, Debug)]
pub enum Effect {
    Dense(CMatrix),
    Rank1(CVector),
}

impl Effect {
    pub fn dim(&self) -> usize {
        match self {
            Effect::Dense(m) => m.nrows(),
            Effect::Rank1(w) => w.len(),
        }
    }

    /// Materializes the effect as a dense matrix.
    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Effect::Dense(m) => m.clone(),
            Effect::Rank1(w) => linalg::outer(w, w),
        }
    }

    /// The canonical collapse operator √E.
    pub fn sqrt(&self) -> Result<Effect> {
        match self {
            Effect::Dense(m) => Ok(Effect::Dense(linalg::matrix_sqrt(m)?)),
            Effect::Rank1(w) => {
                let norm = w.norm();
                if norm < 1e-300 {
                    return Ok(Effect::Rank1(w.clone()));
                }
                Ok(Effect::Rank1(w.unscale(norm.sqrt())))
            }
        }
    }

    /// Accumulates the dense form of this effect into `acc`.
    pub(crate) fn add_into(&self, acc: &mut CMatrix) {
        match self {
            Effect::Dense(m) => *acc += m,
            Effect::Rank1(w) => {
                let dim = w.len();
                for i in 0..dim {
                    if w[i] == Complex64::ZERO {
                        continue;
                    }
                    for j in 0..dim {
                        acc[(i, j)] += w[i] * w[j].conj();
                    }
                }
            }
        }
    }
}

/// A positive operator-valued measure: labeled effects summing to identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<(String, Effect)>,
    dim: usize,
}

impl Povm {
    /// Dense constructor. Each element must be Hermitian PSD within 1e-10
    /// and the elements must sum to the identity within 1e-8.
    pub fn new(elements: Vec<(String, CMatrix)>) -> Result<Self> {
        let effects = elements
            .into_iter()
            .map(|(l, m)| (l, Effect::Dense(m)))
            .collect();
        Self::from_effects(effects)
    }

    pub fn from_effects(elements: Vec<(String, Effect)>) -> Result<Self> {
        let dim = match elements.first() {
            Some((_, e)) => e.dim(),
            None => return Err(Error::InvalidMeasurement("empty POVM".into())),
        };
        let mut sum = CMatrix::zeros(dim, dim);
        for (label, effect) in &elements {
            if effect.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "POVM element {label:?} has dimension {} instead of {dim}",
                    effect.dim()
                )));
            }
            if let Effect::Dense(m) = effect {
                if m.nrows() != m.ncols() {
                    return Err(Error::InvalidMeasurement(format!(
                        "POVM element {label:?} is not square"
                    )));
                }
                let defect = linalg::hermiticity_defect(m);
                if defect > TOL_CONSTRUCT {
                    return Err(Error::InvalidMeasurement(format!(
                        "POVM element {label:?} has Hermiticity defect {defect:.3e}"
                    )));
                }
                let min_eig = linalg::eigh(m).values.first().copied().unwrap_or(0.0);
                if min_eig < -TOL_CONSTRUCT {
                    return Err(Error::NotPositiveSemidefinite(format!(
                        "POVM element {label:?} has eigenvalue {min_eig:.3e}"
                    )));
                }
            }
            effect.add_into(&mut sum);
        }
        let defect = linalg::max_abs_diff(&sum, &linalg::identity(dim));
        if defect > TOL_CROSS {
            return Err(Error::InvalidMeasurement(format!(
                "POVM completeness defect {defect:.3e} exceeds 1e-8"
            )));
        }
        Ok(Self { elements, dim })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[(String, Effect)] {
        &self.elements
    }

    /// Projective measurement in the basis given by the columns of a unitary.
    pub fn projective(basis: &CMatrix) -> Result<Self> {
        let dim = basis.nrows();
        let mut elements = Vec::with_capacity(dim);
        for j in 0..dim {
            let col = basis.column(j).into_owned();
            elements.push((j.to_string(), Effect::Rank1(col)));
        }
        Self::from_effects(elements)
    }

    pub fn computational(dim: usize) -> Result<Self> {
        Self::projective(&linalg::identity(dim))
    }

    /// Expectation values Tr(E_j ρ) against a state on the full system.
    pub fn expectations(&self, state: &DensityMatrix) -> Result<Vec<f64>> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "POVM of dimension {} against state of dimension {}",
                self.dim,
                state.dim()
            )));
        }
        let rho = state.matrix();
        let mut probs = Vec::with_capacity(self.elements.len());
        for (_, effect) in &self.elements {
            let p = match effect {
                Effect::Dense(e) => state.expectation(e)?,
                Effect::Rank1(w) => {
                    let mut acc = Complex64::ZERO;
                    for i in 0..self.dim {
                        if w[i] == Complex64::ZERO {
                            continue;
                        }
                        for j in 0..self.dim {
                            acc += w[i].conj() * rho[(i, j)] * w[j];
                        }
                    }
                    acc.re
                }
            };
            probs.push(p);
        }
        Ok(probs)
    }

    /// Outcome probabilities against a density matrix on the subsystems in
    /// `target` (ascending indices into `state.dims()`).
    pub fn probabilities_density(&self, state: &DensityMatrix, target: &[usize]) -> Result<Vec<f64>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split)?;
        let mut probs = Vec::with_capacity(self.elements.len());
        for (_, effect) in &self.elements {
            probs.push(expectation_on_subsystem(effect, state, &split));
        }
        Ok(probs)
    }

    pub fn probabilities_pure(&self, state: &PureState, target: &[usize]) -> Result<Vec<f64>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split)?;
        let mut probs = Vec::with_capacity(self.elements.len());
        for (_, effect) in &self.elements {
            probs.push(pure_expectation_on_subsystem(effect, state, &split));
        }
        Ok(probs)
    }

    /// Full outcome list with conditional states via the √E collapse.
    pub fn apply_density(&self, state: &DensityMatrix, target: &[usize]) -> Result<Vec<MeasurementOutcome>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split)?;
        let mut outcomes = Vec::with_capacity(self.elements.len());
        for (label, effect) in &self.elements {
            let sqrt = effect.sqrt()?.to_matrix();
            let collapsed = sandwich_on_subsystem(&sqrt, state.matrix(), &split);
            let p = linalg::trace(&collapsed).re;
            outcomes.push(finish_outcome(label, p, collapsed, state.dims()));
        }
        debug_assert!((outcomes.iter().map(|o| o.probability).sum::<f64>() - 1.0).abs() < TOL_CROSS);
        Ok(outcomes)
    }

    pub fn apply_pure(&self, state: &PureState, target: &[usize]) -> Result<Vec<MeasurementOutcome>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split)?;
        let mut outcomes = Vec::with_capacity(self.elements.len());
        for (label, effect) in &self.elements {
            let sqrt = effect.sqrt()?.to_matrix();
            let v = apply_on_subsystem(&sqrt, state.amplitudes(), &split);
            let p = v.norm_squared();
            let conditional = if p >= NEGLIGIBLE_PROBABILITY {
                let normalized = PureState::normalized(v, state.dims().to_vec())?;
                Some(normalized.density())
            } else {
                None
            };
            outcomes.push(MeasurementOutcome {
                label: label.clone(),
                probability: p,
                conditional,
            });
        }
        debug_assert!((outcomes.iter().map(|o| o.probability).sum::<f64>() - 1.0).abs() < TOL_CROSS);
        Ok(outcomes)
    }

    /// Samples one outcome from a pure state, returning the collapsed pure
    /// state (√E applied and renormalized).
    pub fn sample_pure(
        &self,
        state: &PureState,
        target: &[usize],
        rng: &mut impl rand::Rng,
    ) -> Result<(usize, PureState)> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.elements.len() - 1;
        for (i, (_, effect)) in self.elements.iter().enumerate() {
            acc += pure_expectation_on_subsystem(effect, state, &split);
            if u < acc {
                chosen = i;
                break;
            }
        }
        let sqrt = self.elements[chosen].1.sqrt()?.to_matrix();
        let v = apply_on_subsystem(&sqrt, state.amplitudes(), &split);
        let collapsed = PureState::normalized(v, state.dims().to_vec())?;
        Ok((chosen, collapsed))
    }

    fn check_target(&self, split: &SubsystemSplit) -> Result<()> {
        if split.target_dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "POVM of dimension {} against target subsystems of dimension {}",
                self.dim,
                split.target_dim()
            )));
        }
        Ok(())
    }
}

/// Measurement given by collapse operators. Operators may map the input
/// space to a larger output space (the isometry model); non-square operators
/// are only accepted when the measurement addresses the full system.
#[derive(Clone, Debug)]
pub struct GeneralMeasurement {
    operators: Vec<(String, CMatrix)>,
    input_dim: usize,
}

impl GeneralMeasurement {
    /// Validates completeness Σ M†M = I within 1e-8.
    pub fn new(operators: Vec<(String, CMatrix)>) -> Result<Self> {
        let input_dim = match operators.first() {
            Some((_, m)) => m.ncols(),
            None => {
                return Err(Error::InvalidMeasurement(
                    "measurement needs at least one operator".into(),
                ))
            }
        };
        let mut sum = CMatrix::zeros(input_dim, input_dim);
        for (label, m) in &operators {
            if m.ncols() != input_dim {
                return Err(Error::DimensionMismatch(format!(
                    "operator {label:?} has {} columns, expected {input_dim}",
                    m.ncols()
                )));
            }
            sum += m.adjoint() * m;
        }
        let defect = linalg::max_abs_diff(&sum, &linalg::identity(input_dim));
        if defect > TOL_CROSS {
            return Err(Error::InvalidMeasurement(format!(
                "completeness defect {defect:.3e} exceeds 1e-8"
            )));
        }
        Ok(Self {
            operators,
            input_dim,
        })
    }

    /// Builds M_j = P_j U from an isometry U and projectors P_j on its
    /// output space.
    pub fn from_isometry(isometry: &CMatrix, projectors: Vec<(String, CMatrix)>) -> Result<Self> {
        let d = isometry.ncols();
        let out = isometry.nrows();
        if out < d {
            return Err(Error::DimensionMismatch(
                "isometry must not shrink the space".into(),
            ));
        }
        let defect = linalg::max_abs_diff(&(isometry.adjoint() * isometry), &linalg::identity(d));
        if defect > TOL_CROSS {
            return Err(Error::InvalidMeasurement(format!(
                "isometry defect {defect:.3e}"
            )));
        }
        let mut operators = Vec::with_capacity(projectors.len());
        for (label, p) in projectors {
            if p.nrows() != out || p.ncols() != out {
                return Err(Error::DimensionMismatch(format!(
                    "projector {label:?} does not act on the isometry output"
                )));
            }
            operators.push((label, p * isometry));
        }
        Self::new(operators)
    }

    /// Projective measurement with collapse operators |e_j⟩⟨e_j| from the
    /// columns of a unitary.
    pub fn projective(basis: &CMatrix) -> Result<Self> {
        let dim = basis.nrows();
        let mut operators = Vec::with_capacity(dim);
        for j in 0..dim {
            let col = basis.column(j).into_owned();
            operators.push((j.to_string(), linalg::outer(&col, &col)));
        }
        Self::new(operators)
    }

    pub fn computational(dim: usize) -> Result<Self> {
        Self::projective(&linalg::identity(dim))
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn operators(&self) -> &[(String, CMatrix)] {
        &self.operators
    }

    /// Effect operators M†M, one per outcome.
    pub fn effects(&self) -> Vec<CMatrix> {
        self.operators
            .iter()
            .map(|(_, m)| m.adjoint() * m)
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.operators.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Outcome probabilities Tr(M ρ M†) on the given subsystems.
    pub fn probabilities_density(&self, state: &DensityMatrix, target: &[usize]) -> Result<Vec<f64>> {
        Ok(self
            .apply_density(state, target)?
            .into_iter()
            .map(|o| o.probability)
            .collect())
    }

    pub fn apply_density(&self, state: &DensityMatrix, target: &[usize]) -> Result<Vec<MeasurementOutcome>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split, state.dims())?;
        let mut outcomes = Vec::with_capacity(self.operators.len());
        for (label, m) in &self.operators {
            if m.nrows() == m.ncols() {
                let collapsed = sandwich_on_subsystem(m, state.matrix(), &split);
                let p = linalg::trace(&collapsed).re;
                outcomes.push(finish_outcome(label, p, collapsed, state.dims()));
            } else {
                // Isometry-model operator: acts on the whole system and
                // lands in its own output space.
                let collapsed = m * state.matrix() * m.adjoint();
                let p = linalg::trace(&collapsed).re;
                outcomes.push(finish_outcome(label, p, collapsed, &[m.nrows()]));
            }
        }
        debug_assert!((outcomes.iter().map(|o| o.probability).sum::<f64>() - 1.0).abs() < TOL_CROSS);
        Ok(outcomes)
    }

    pub fn apply_pure(&self, state: &PureState, target: &[usize]) -> Result<Vec<MeasurementOutcome>> {
        let split = SubsystemSplit::new(state.dims(), target)?;
        self.check_target(&split, state.dims())?;
        let mut outcomes = Vec::with_capacity(self.operators.len());
        for (label, m) in &self.operators {
            let (v, dims) = if m.nrows() == m.ncols() {
                (
                    apply_on_subsystem(m, state.amplitudes(), &split),
                    state.dims().to_vec(),
                )
            } else {
                (m * state.amplitudes(), vec![m.nrows()])
            };
            let p = v.norm_squared();
            let conditional = if p >= NEGLIGIBLE_PROBABILITY {
                Some(PureState::normalized(v, dims)?.density())
            } else {
                None
            };
            outcomes.push(MeasurementOutcome {
                label: label.clone(),
                probability: p,
                conditional,
            });
        }
        debug_assert!((outcomes.iter().map(|o| o.probability).sum::<f64>() - 1.0).abs() < TOL_CROSS);
        Ok(outcomes)
    }

    fn check_target(&self, split: &SubsystemSplit, dims: &[usize]) -> Result<()> {
        if split.target_dim() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "measurement of input dimension {} against target subsystems of dimension {}",
                self.input_dim,
                split.target_dim()
            )));
        }
        let non_square = self.operators.iter().any(|(_, m)| m.nrows() != m.ncols());
        let full: usize = dims.iter().product();
        if non_square && split.target_dim() != full {
            return Err(Error::DimensionMismatch(
                "isometry-model operators may only address the full system".into(),
            ));
        }
        Ok(())
    }
}

fn finish_outcome(
    label: &str,
    probability: f64,
    unnormalized: CMatrix,
    dims: &[usize],
) -> MeasurementOutcome {
    let conditional = if probability >= NEGLIGIBLE_PROBABILITY {
        let normalized = unnormalized.unscale(probability);
        DensityMatrix::new(linalg::hermitize(&normalized), dims.to_vec()).ok()
    } else {
        None
    };
    MeasurementOutcome {
        label: label.to_string(),
        probability,
        conditional,
    }
}

/// (I ⊗ O ⊗ I) ψ with O acting on the subsystems described by `split`.
pub(crate) fn apply_on_subsystem(op: &CMatrix, psi: &CVector, split: &SubsystemSplit) -> CVector {
    let k = split.target_dim();
    let mut out = CVector::zeros(psi.len());
    let mut sub = CVector::zeros(k);
    for ctx in 0..split.context_dim() {
        for i in 0..k {
            sub[i] = psi[split.compose(i, ctx)];
        }
        let applied = op * &sub;
        for i in 0..k {
            out[split.compose(i, ctx)] = applied[i];
        }
    }
    out
}

/// (I ⊗ O ⊗ I) ρ (I ⊗ O† ⊗ I).
pub(crate) fn sandwich_on_subsystem(op: &CMatrix, rho: &CMatrix, split: &SubsystemSplit) -> CMatrix {
    let dim = rho.nrows();
    // Apply to columns, adjoint, apply to columns again, adjoint back.
    let mut stage = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = rho.column(j).into_owned();
        stage.set_column(j, &apply_on_subsystem(op, &col, split));
    }
    let stage = stage.adjoint();
    let mut out = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = stage.column(j).into_owned();
        out.set_column(j, &apply_on_subsystem(op, &col, split));
    }
    out.adjoint()
}

/// Tr((I ⊗ E ⊗ I) ρ) for an effect on the target subsystems.
fn expectation_on_subsystem(effect: &Effect, state: &DensityMatrix, split: &SubsystemSplit) -> f64 {
    let rho = state.matrix();
    let mut acc = Complex64::ZERO;
    match effect {
        Effect::Dense(e) => {
            let k = split.target_dim();
            for ctx in 0..split.context_dim() {
                for i in 0..k {
                    let row = split.compose(i, ctx);
                    for j in 0..k {
                        acc += e[(i, j)] * rho[(split.compose(j, ctx), row)];
                    }
                }
            }
        }
        Effect::Rank1(w) => {
            // ⟨w| ρ_blk |w⟩ summed over context blocks.
            let k = split.target_dim();
            for ctx in 0..split.context_dim() {
                for i in 0..k {
                    if w[i] == Complex64::ZERO {
                        continue;
                    }
                    let row = split.compose(i, ctx);
                    for j in 0..k {
                        acc += w[i].conj() * rho[(row, split.compose(j, ctx))] * w[j];
                    }
                }
            }
        }
    }
    acc.re
}

/// ⟨ψ|(I ⊗ E ⊗ I)|ψ⟩.
fn pure_expectation_on_subsystem(effect: &Effect, state: &PureState, split: &SubsystemSplit) -> f64 {
    let psi = state.amplitudes();
    let k = split.target_dim();
    match effect {
        Effect::Rank1(w) => {
            // Σ_ctx |⟨w|ψ_ctx⟩|².
            let mut acc = 0.0;
            for ctx in 0..split.context_dim() {
                let mut inner = Complex64::ZERO;
                for i in 0..k {
                    inner += w[i].conj() * psi[split.compose(i, ctx)];
                }
                acc += inner.norm_sqr();
            }
            acc
        }
        Effect::Dense(e) => {
            let mut acc = Complex64::ZERO;
            let mut sub = CVector::zeros(k);
            for ctx in 0..split.context_dim() {
                for i in 0..k {
                    sub[i] = psi[split.compose(i, ctx)];
                }
                let applied = e * &sub;
                acc += sub.dotc(&applied);
            }
            acc.re
        }
    }
}
