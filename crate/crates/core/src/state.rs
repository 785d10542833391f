//! Pure states, density matrices and pure-state ensembles.
//!
//! States carry an explicit list of subsystem dimensions. When a composite
//! index is flattened, the leftmost subsystem is the most significant digit,
//! matching the Kronecker convention of [`crate::linalg::tensor_product`].

use num_complex::Complex64;

use crate::bits::{Basis, BasisString, BitString};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, TOL_CONSTRUCT};

/// A normalized pure state over one or more subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    dims: Vec<usize>,
}

impl PureState {
    /// Validates that the dimensions multiply out to the vector length and
    /// that the amplitudes are normalized within 1e-10.
    pub fn new(amplitudes: CVector, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dim != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match an amplitude vector of length {}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!(
                "state norm {norm} deviates from 1 by more than 1e-10"
            )));
        }
        Ok(Self { amplitudes, dims })
    }

    /// Normalizes the vector first; fails only on (near-)zero input.
    pub fn normalized(mut amplitudes: CVector, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidState(
                "cannot normalize a zero vector".into(),
            ));
        }
        amplitudes.unscale_mut(norm);
        Self::new(amplitudes, dims)
    }

    /// Computational basis state |index⟩ of a single subsystem.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v, vec![dim])
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "overlap of states with dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |⟨self|other⟩|².
    pub fn fidelity_with(&self, other: &Self) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// |ψ⟩⟨ψ| with the same subsystem structure.
    pub fn density(&self) -> DensityMatrix {
        let m = linalg::outer(&self.amplitudes, &self.amplitudes);
        DensityMatrix {
            matrix: m,
            dims: self.dims.clone(),
        }
    }

    /// Tensor product; dimension lists are concatenated left to right.
    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { amplitudes, dims }
    }

    /// Reinterprets the flat index as the given subsystem factorization.
    pub fn reshaped(mut self, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dim != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not factor dimension {}",
                self.dim()
            )));
        }
        self.dims = dims;
        Ok(self)
    }

    /// Reduced density matrix over the subsystems in `keep` (ascending,
    /// deduplicated), tracing out everything else.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = SubsystemSplit::new(&self.dims, keep)?;
        let mut out = CMatrix::zeros(split.target_dim(), split.target_dim());
        for t in 0..split.context_dim() {
            for a in 0..split.target_dim() {
                let ia = split.compose(a, t);
                let amp_a = self.amplitudes[ia];
                if amp_a == Complex64::ZERO {
                    continue;
                }
                for b in 0..split.target_dim() {
                    let ib = split.compose(b, t);
                    out[(a, b)] += amp_a * self.amplitudes[ib].conj();
                }
            }
        }
        DensityMatrix::new(out, split.target_dims().to_vec())
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix with subsystem
/// structure.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace within 1e-10 and eigenvalues
    /// above -1e-10.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!(
                "Hermiticity defect {herm:.3e} exceeds 1e-10"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TOL_CONSTRUCT || tr.im.abs() > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!(
                "trace {tr} deviates from 1 by more than 1e-10"
            )));
        }
        let min_eig = linalg::eigh(&matrix)
            .values
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -TOL_CONSTRUCT {
            return Err(Error::NotPositiveSemidefinite(format!(
                "smallest eigenvalue {min_eig:.3e} below -1e-10"
            )));
        }
        Ok(Self { matrix, dims })
    }

    /// I/d on a single subsystem of dimension `dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("dimension 0".into()));
        }
        let m = linalg::identity(dim).unscale(dim as f64);
        Self::new(m, vec![dim])
    }

    /// Reinterprets the flat index as the given subsystem factorization.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dim != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not factor dimension {}",
                self.dim()
            )));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigh(&self.matrix).values
    }

    /// Tr(ρ M) as a real number (M must be Hermitian for this to be exact).
    pub fn expectation(&self, observable: &CMatrix) -> Result<f64> {
        if observable.shape() != self.matrix.shape() {
            return Err(Error::DimensionMismatch(format!(
                "observable {:?} against state dimension {}",
                observable.shape(),
                self.dim()
            )));
        }
        let dim = self.dim();
        let mut acc = Complex64::ZERO;
        for i in 0..dim {
            for j in 0..dim {
                acc += observable[(i, j)] * self.matrix[(j, i)];
            }
        }
        Ok(acc.re)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let matrix = linalg::tensor_product(&self.matrix, &other.matrix);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { matrix, dims }
    }

    /// Partial trace keeping the subsystems in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let split = SubsystemSplit::new(&self.dims, keep)?;
        let mut out = CMatrix::zeros(split.target_dim(), split.target_dim());
        for t in 0..split.context_dim() {
            for a in 0..split.target_dim() {
                let ia = split.compose(a, t);
                for b in 0..split.target_dim() {
                    let ib = split.compose(b, t);
                    out[(a, b)] += self.matrix[(ia, ib)];
                }
            }
        }
        DensityMatrix::new(out, split.target_dims().to_vec())
    }
}

/// Index bookkeeping for addressing a subsystem subset: splits a flat index
/// into a target part and a context (everything else) part. Used by partial
/// traces and by measurement application.
pub(crate) struct SubsystemSplit {
    target_dims: Vec<usize>,
    target_dim: usize,
    context_dim: usize,
    /// (flat stride, subsystem dimension) per target subsystem, least
    /// significant digit first.
    target_digits: Vec<(usize, usize)>,
    context_digits: Vec<(usize, usize)>,
}

impl SubsystemSplit {
    pub(crate) fn new(dims: &[usize], target: &[usize]) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::DimensionMismatch(
                "subsystem set must not be empty".into(),
            ));
        }
        let mut sorted = target.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != target.len() || *sorted.last().unwrap() >= dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "invalid subsystem set {target:?} for dims {dims:?}"
            )));
        }

        // Flat strides: leftmost subsystem most significant.
        let mut flat_strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            flat_strides[i] = flat_strides[i + 1] * dims[i + 1];
        }

        let mut target_digits = Vec::new();
        let mut context_digits = Vec::new();
        let mut target_dim = 1usize;
        let mut context_dim = 1usize;
        for i in (0..dims.len()).rev() {
            if sorted.binary_search(&i).is_ok() {
                target_digits.push((flat_strides[i], dims[i]));
                target_dim *= dims[i];
            } else {
                context_digits.push((flat_strides[i], dims[i]));
                context_dim *= dims[i];
            }
        }
        let target_dims = sorted.iter().map(|&i| dims[i]).collect();

        Ok(Self {
            target_dims,
            target_dim,
            context_dim,
            target_digits,
            context_digits,
        })
    }

    pub(crate) fn target_dims(&self) -> &[usize] {
        &self.target_dims
    }

    pub(crate) fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub(crate) fn context_dim(&self) -> usize {
        self.context_dim
    }

    /// Flat index from a target local index and a context local index. Local
    /// indices use their subsystems in original order, leftmost most
    /// significant.
    pub(crate) fn compose(&self, mut target_idx: usize, mut context_idx: usize) -> usize {
        let mut flat = 0usize;
        for &(stride, dim) in &self.target_digits {
            flat += (target_idx % dim) * stride;
            target_idx /= dim;
        }
        for &(stride, dim) in &self.context_digits {
            flat += (context_idx % dim) * stride;
            context_idx /= dim;
        }
        flat
    }
}

/// A pure-state mixture: pairs of (probability, state) with a common
/// dimension and probabilities summing to one.
#[derive(Clone, Debug)]
pub struct Ensemble {
    entries: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(entries: Vec<(f64, PureState)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        let dim = entries[0].1.dim();
        let mut total = 0.0;
        for (p, state) in &entries {
            if !(0.0..=1.0 + TOL_CONSTRUCT).contains(p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
            if state.dim() != dim {
                return Err(Error::DimensionMismatch(
                    "ensemble states of unequal dimension".into(),
                ));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOL_CONSTRUCT {
            return Err(Error::InvalidDistribution(format!(
                "ensemble probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, PureState)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries[0].1.dim()
    }

    /// Σ p_i |ψ_i⟩⟨ψ_i|.
    pub fn average(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for (p, state) in &self.entries {
            let amps = state.amplitudes();
            for i in 0..dim {
                let w = amps[i] * Complex64::new(*p, 0.0);
                if w == Complex64::ZERO {
                    continue;
                }
                for j in 0..dim {
                    acc[(i, j)] += w * amps[j].conj();
                }
            }
        }
        DensityMatrix {
            matrix: linalg::hermitize(&acc),
            dims: self.entries[0].1.dims().to_vec(),
        }
    }
}

/// Single-qubit conjugate-coding state: bit `b` in basis "+" is |b⟩, in
/// basis "x" it is (|0⟩ + (-1)^b |1⟩)/√2.
pub fn bb84_qubit(bit: bool, basis: Basis) -> PureState {
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match (basis, bit) {
        (Basis::Plus, false) => vec![Complex64::new(1.0, 0.0), Complex64::ZERO],
        (Basis::Plus, true) => vec![Complex64::ZERO, Complex64::new(1.0, 0.0)],
        (Basis::Times, false) => vec![
            Complex64::new(sqrt_half, 0.0),
            Complex64::new(sqrt_half, 0.0),
        ],
        (Basis::Times, true) => vec![
            Complex64::new(sqrt_half, 0.0),
            Complex64::new(-sqrt_half, 0.0),
        ],
    };
    PureState::new(CVector::from_vec(amps), vec![2]).expect("qubit state is normalized")
}

/// Product state |c⟩_θ = |c_0⟩_{θ_0} ⊗ ... ⊗ |c_{n-1}⟩_{θ_{n-1}}.
pub fn encode_bb84(bits: &BitString, bases: &BasisString) -> Result<PureState> {
    if bits.len() != bases.len() {
        return Err(Error::DimensionMismatch(format!(
            "bit string of length {} against basis string of length {}",
            bits.len(),
            bases.len()
        )));
    }
    let mut state = bb84_qubit(bits.get(0), bases.get(0));
    for i in 1..bits.len() {
        state = state.tensor(&bb84_qubit(bits.get(i), bases.get(i)));
    }
    Ok(state)
}

/// Single-qubit density matrix of bit `b` averaged over the two conjugate
/// bases. The exact honest density matrices factorize into these per
/// position: Σ_θ 2^{-n} |c⟩_θ⟨c| = ⊗_i bb84_basis_average(c_i).
pub fn bb84_basis_average(bit: bool) -> CMatrix {
    let plus = bb84_qubit(bit, Basis::Plus).density();
    let times = bb84_qubit(bit, Basis::Times).density();
    (plus.matrix() + times.matrix()).scale(0.5)
}
