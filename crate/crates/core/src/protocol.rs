//! The honest bit-commitment protocol layer.
//!
//! COMMIT(b): Bob announces a linear code C; Alice announces a random
//! r ∈ {0,1}^n, draws θ uniformly from {+,x}^n and c uniformly from
//! {c ∈ C | c ⊙ r = b}, and sends the product state |c⟩_θ. Bob measures
//! every photon in a uniformly random basis θ̂ and records ĉ. At unveil
//! time Alice announces (b, θ, c) and Bob evaluates the acceptance test
//! T_b on the transcript (θ, c, θ̂, ĉ) given (C, r).
//!
//! The concrete T_b used here accepts iff c ∈ C, c ⊙ r = b, and the
//! disagreement rate on positions measured in the announced basis does not
//! exceed an error allowance (zero by default). This is the minimal test
//! with perfect honest completeness.
//!
//! Besides the BCJL scheme proper, the module provides the equal-density
//! conjugate-basis scheme (the bit selects the encoding basis, the payload
//! is uniform, and both honest density matrices are exactly I/2^n), which is
//! the textbook case in which a committed purification can be steered to
//! either bit perfectly.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{Basis, BasisString, BitString};
use crate::code::{inner_bit, LinearCode};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::state::{bb84_basis_average, bb84_qubit, encode_bb84, DensityMatrix, Ensemble, PureState};

/// Largest photon count for which exact enumeration (2^n · |class| terms,
/// 2^n-dimensional operators) is attempted.
pub const MAX_EXACT_N: usize = 10;

/// The information shared between the parties before the photons are sent:
/// the code C and Alice's string r.
#[derive(Clone, Debug)]
pub struct SharedContext {
    code: LinearCode,
    r: BitString,
    class0: Vec<BitString>,
    class1: Vec<BitString>,
}

impl SharedContext {
    /// Fails unless both codeword classes {c ∈ C | c ⊙ r = b} are nonempty,
    /// i.e. unless r splits C into two proper cosets. This excludes r = 0.
    pub fn new(code: LinearCode, r: BitString) -> Result<Self> {
        if r.len() != code.length() {
            return Err(Error::InvalidContext(format!(
                "r of length {} against a code of length {}",
                r.len(),
                code.length()
            )));
        }
        let mut class0 = Vec::new();
        let mut class1 = Vec::new();
        for word in code.codewords() {
            if inner_bit(&word, &r)? {
                class1.push(word);
            } else {
                class0.push(word);
            }
        }
        if class0.is_empty() || class1.is_empty() {
            return Err(Error::InvalidContext(
                "r does not split the code: one parity class is empty".into(),
            ));
        }
        Ok(Self {
            code,
            r,
            class0,
            class1,
        })
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn r(&self) -> &BitString {
        &self.r
    }

    pub fn n(&self) -> usize {
        self.code.length()
    }

    /// The codewords c with c ⊙ r = b.
    pub fn codeword_class(&self, bit: bool) -> &[BitString] {
        if bit {
            &self.class1
        } else {
            &self.class0
        }
    }
}

/// JSON document form of a context: { n, k, generator, r } with bit strings
/// as text rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContextSpec {
    pub n: usize,
    pub k: usize,
    pub generator: Vec<BitString>,
    pub r: BitString,
}

impl TryFrom<ContextSpec> for SharedContext {
    type Error = Error;

    fn try_from(spec: ContextSpec) -> Result<Self> {
        let code = LinearCode::new(spec.generator)?;
        if code.length() != spec.n || code.dimension() != spec.k {
            return Err(Error::InvalidContext(format!(
                "declared [{}, {}] does not match a [{}, {}] generator",
                spec.n,
                spec.k,
                code.length(),
                code.dimension()
            )));
        }
        SharedContext::new(code, spec.r)
    }
}

impl From<&SharedContext> for ContextSpec {
    fn from(ctx: &SharedContext) -> Self {
        ContextSpec {
            n: ctx.code.length(),
            k: ctx.code.dimension(),
            generator: ctx.code.generator().to_vec(),
            r: *ctx.r(),
        }
    }
}

/// What Alice wrote down while committing.
#[derive(Clone, Copy, Debug)]
pub struct AliceRecord {
    pub bit: bool,
    pub bases: BasisString,
    pub codeword: BitString,
}

/// The unveil announcement (θ, c).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Announcement {
    pub bases: BasisString,
    pub bits: BitString,
}

/// Everything T_b sees: the announcement, Bob's measurement record, and the
/// shared context.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub bases: BasisString,
    pub codeword: BitString,
    pub measured_bases: BasisString,
    pub measured_bits: BitString,
    pub context: SharedContext,
}

/// Acceptance-test tuning: the fraction of matching-basis positions allowed
/// to disagree. Zero (the default) demands exact agreement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TestPolicy {
    max_error_fraction: f64,
}

impl TestPolicy {
    pub fn new(max_error_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&max_error_fraction) {
            return Err(Error::InvalidParameter(format!(
                "max_error_fraction {max_error_fraction} outside [0, 1]"
            )));
        }
        Ok(Self { max_error_fraction })
    }

    pub fn max_error_fraction(&self) -> f64 {
        self.max_error_fraction
    }

    pub fn is_exact(&self) -> bool {
        self.max_error_fraction == 0.0
    }
}

impl Default for TestPolicy {
    fn default() -> Self {
        Self {
            max_error_fraction: 0.0,
        }
    }
}

/// Uniformly random basis string.
pub fn random_bases(n: usize, rng: &mut impl rand::Rng) -> Result<BasisString> {
    let mut bases = BasisString::all_plus(n)?;
    for i in 0..n {
        if rng.random::<bool>() {
            bases.set(i, Basis::Times);
        }
    }
    Ok(bases)
}

/// One honest commitment round: θ uniform over {+,x}^n, c uniform over the
/// parity class of `bit`, photons in the product state |c⟩_θ.
pub fn honest_commit(
    bit: bool,
    ctx: &SharedContext,
    rng: &mut impl rand::Rng,
) -> Result<(AliceRecord, PureState)> {
    let n = ctx.n();
    let bases = random_bases(n, rng)?;
    let class = ctx.codeword_class(bit);
    let codeword = class[rng.random_range(0..class.len())];
    let state = encode_bb84(&codeword, &bases)?;
    Ok((
        AliceRecord {
            bit,
            bases,
            codeword,
        },
        state,
    ))
}

/// Measures the listed qubit subsystems in the given bases, sampling
/// outcomes from the exact single-qubit distributions and collapsing as it
/// goes. Returns the outcome bits and the collapsed state.
pub fn measure_qubits(
    state: &PureState,
    qubits: &[usize],
    bases: &BasisString,
    rng: &mut impl rand::Rng,
) -> Result<(BitString, PureState)> {
    if qubits.len() != bases.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} qubits against {} bases",
            qubits.len(),
            bases.len()
        )));
    }
    let dims = state.dims().to_vec();
    for &q in qubits {
        if q >= dims.len() || dims[q] != 2 {
            return Err(Error::DimensionMismatch(format!(
                "subsystem {q} is not a qubit of dims {dims:?}"
            )));
        }
    }
    // Strides: leftmost subsystem most significant.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }

    let mut amps: Vec<Complex64> = state.amplitudes().iter().copied().collect();
    let dim = amps.len();
    let mut outcome = BitString::zeros(qubits.len())?;
    for (pos, &q) in qubits.iter().enumerate() {
        let basis = bases.get(pos);
        let stride = strides[q];
        if basis == Basis::Times {
            hadamard_in_place(&mut amps, stride);
        }
        // Probability of outcome 0 on this qubit.
        let mut p0 = 0.0;
        for (idx, amp) in amps.iter().enumerate() {
            if idx / stride % 2 == 0 {
                p0 += amp.norm_sqr();
            }
        }
        let bit = rng.random::<f64>() >= p0;
        outcome.set(pos, bit);
        let p = if bit { 1.0 - p0 } else { p0 };
        let scale = Complex64::new(1.0 / p.sqrt(), 0.0);
        let keep = usize::from(bit);
        for idx in 0..dim {
            if idx / stride % 2 == keep {
                amps[idx] *= scale;
            } else {
                amps[idx] = Complex64::ZERO;
            }
        }
        if basis == Basis::Times {
            hadamard_in_place(&mut amps, stride);
        }
    }
    let collapsed = PureState::new(CVector::from_vec(amps), dims)?;
    Ok((outcome, collapsed))
}

fn hadamard_in_place(amps: &mut [Complex64], stride: usize) {
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let dim = amps.len();
    let mut idx0 = 0;
    while idx0 < dim {
        if idx0 / stride % 2 == 0 {
            let idx1 = idx0 + stride;
            let a = amps[idx0];
            let b = amps[idx1];
            amps[idx0] = (a + b).scale(sqrt_half);
            amps[idx1] = (a - b).scale(sqrt_half);
        }
        idx0 += 1;
    }
}

/// Bob's step: a uniformly random basis string θ̂ and the sampled outcome ĉ
/// of measuring every photon.
pub fn bob_measure(
    state: &PureState,
    rng: &mut impl rand::Rng,
) -> Result<(BasisString, BitString)> {
    let n = state.dims().len();
    if state.dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch(format!(
            "bob_measure expects qubits, got dims {:?}",
            state.dims()
        )));
    }
    let bases = random_bases(n, rng)?;
    let qubits: Vec<usize> = (0..n).collect();
    let (bits, _) = measure_qubits(state, &qubits, &bases, rng)?;
    Ok((bases, bits))
}

/// The unveil test T_b: code membership, the parity constraint, and
/// agreement on matching-basis positions within the policy allowance.
pub fn test_unveil(bit: bool, transcript: &Transcript, policy: &TestPolicy) -> bool {
    let ctx = &transcript.context;
    if !ctx.code().contains(&transcript.codeword) {
        return false;
    }
    match inner_bit(&transcript.codeword, ctx.r()) {
        Ok(parity) if parity == bit => {}
        _ => return false,
    }
    matching_positions_agree(
        &transcript.bases,
        &transcript.codeword,
        &transcript.measured_bases,
        &transcript.measured_bits,
        policy,
    )
}

fn matching_positions_agree(
    bases: &BasisString,
    codeword: &BitString,
    measured_bases: &BasisString,
    measured_bits: &BitString,
    policy: &TestPolicy,
) -> bool {
    let n = bases.len();
    if codeword.len() != n || measured_bases.len() != n || measured_bits.len() != n {
        return false;
    }
    let mut matches = 0usize;
    let mut errors = 0usize;
    for i in 0..n {
        if bases.get(i) == measured_bases.get(i) {
            matches += 1;
            if codeword.get(i) != measured_bits.get(i) {
                errors += 1;
            }
        }
    }
    errors as f64 <= policy.max_error_fraction() * matches as f64
}

/// The exact honest density matrix ρ_b = Σ_{θ,c} p(θ,c|b) |c⟩_θ⟨c| with
/// p(θ,c|b) = 2^{-n} / |class_b|. The sum over θ factorizes per position
/// into the two-basis average of each bit, which keeps the computation at
/// |class_b| Kronecker products.
pub fn honest_density_matrix(bit: bool, ctx: &SharedContext) -> Result<DensityMatrix> {
    let n = ctx.n();
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge(format!(
            "exact density matrix needs 2^{n} dimensions; n must be <= {MAX_EXACT_N}"
        )));
    }
    let class = ctx.codeword_class(bit);
    let dim = 1usize << n;
    let mut acc = CMatrix::zeros(dim, dim);
    for word in class {
        let mut term = bb84_basis_average(word.get(0));
        for i in 1..n {
            term = linalg::tensor_product(&term, &bb84_basis_average(word.get(i)));
        }
        acc += term;
    }
    acc.unscale_mut(class.len() as f64);
    DensityMatrix::new(linalg::hermitize(&acc), vec![2; n])
}

/// An honest ensemble with its announcement labels: entry ((θ, c), p, |c⟩_θ).
#[derive(Clone, Debug)]
pub struct LabeledEnsemble {
    pub announcements: Vec<Announcement>,
    pub ensemble: Ensemble,
}

/// The honest mixture {(p(θ,c|b), |c⟩_θ)}, enumerated with θ outermost.
pub fn honest_ensemble(bit: bool, ctx: &SharedContext) -> Result<LabeledEnsemble> {
    let n = ctx.n();
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge(format!(
            "exact ensemble needs 2^{n} states per basis string; n must be <= {MAX_EXACT_N}"
        )));
    }
    let class = ctx.codeword_class(bit);
    let p = 1.0 / ((1usize << n) as f64 * class.len() as f64);
    let mut announcements = Vec::new();
    let mut entries = Vec::new();
    for theta_idx in 0..1usize << n {
        let bases = BasisString::from_index(theta_idx, n)?;
        for word in class {
            announcements.push(Announcement {
                bases,
                bits: *word,
            });
            entries.push((p, encode_bb84(word, &bases)?));
        }
    }
    Ok(LabeledEnsemble {
        announcements,
        ensemble: Ensemble::new(entries)?,
    })
}

/// The effect operator of the event "T_b accepts" for a fixed announcement,
/// averaged over Bob's uniformly random basis choice: Pr(ok | σ) = Tr(A σ).
///
/// Under the zero-error policy for a legal announcement this is the product
/// ⊗_i (½ I + ½ |c_i⟩_{θ_i}⟨c_i|): a matching basis (probability ½) must
/// reproduce c_i, a mismatched one always passes. Illegal announcements give
/// the zero operator. A nonzero error allowance couples the positions
/// through the error budget and is handled by a dense dynamic program over
/// (matching count, error count).
#[derive(Clone, Debug)]
pub struct AcceptanceOperator {
    dim: usize,
    kind: AcceptanceKind,
}

#[derive(Clone, Debug)]
enum AcceptanceKind {
    Zero,
    Product(Vec<Matrix2<Complex64>>),
    Dense(CMatrix),
}

impl AcceptanceOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            kind: AcceptanceKind::Zero,
        }
    }

    fn product(factors: Vec<Matrix2<Complex64>>) -> Self {
        Self {
            dim: 1 << factors.len(),
            kind: AcceptanceKind::Product(factors),
        }
    }

    fn dense(matrix: CMatrix) -> Self {
        Self {
            dim: matrix.nrows(),
            kind: AcceptanceKind::Dense(matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, AcceptanceKind::Zero)
    }

    /// Materializes the full operator.
    pub fn matrix(&self) -> CMatrix {
        match &self.kind {
            AcceptanceKind::Zero => CMatrix::zeros(self.dim, self.dim),
            AcceptanceKind::Dense(m) => m.clone(),
            AcceptanceKind::Product(factors) => {
                let mut acc = matrix2_to_dyn(&factors[0]);
                for f in &factors[1..] {
                    acc = linalg::tensor_product(&acc, &matrix2_to_dyn(f));
                }
                acc
            }
        }
    }

    /// A|v⟩ without materializing A (product factors act qubit by qubit).
    pub fn apply(&self, v: &CVector) -> CVector {
        debug_assert_eq!(v.len(), self.dim);
        match &self.kind {
            AcceptanceKind::Zero => CVector::zeros(self.dim),
            AcceptanceKind::Dense(m) => m * v,
            AcceptanceKind::Product(factors) => {
                let mut out: Vec<Complex64> = v.iter().copied().collect();
                let n = factors.len();
                let mut stride = self.dim;
                for f in factors.iter().take(n) {
                    stride /= 2;
                    apply_factor(f, &mut out, stride);
                }
                CVector::from_vec(out)
            }
        }
    }

    /// ⟨v|A|v⟩ for an unnormalized vector; with v the √p-scaled conditional
    /// state this is p · Pr(ok | conditional).
    pub fn expectation_vector(&self, v: &CVector) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let av = self.apply(v);
        v.dotc(&av).re
    }

    pub fn expectation_pure(&self, state: &PureState) -> Result<f64> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "acceptance operator of dimension {} against state of dimension {}",
                self.dim,
                state.dim()
            )));
        }
        Ok(self.expectation_vector(state.amplitudes()))
    }

    /// Tr(A σ).
    pub fn expectation_density(&self, state: &DensityMatrix) -> Result<f64> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "acceptance operator of dimension {} against state of dimension {}",
                self.dim,
                state.dim()
            )));
        }
        match &self.kind {
            AcceptanceKind::Zero => Ok(0.0),
            AcceptanceKind::Dense(m) => state.expectation(m),
            AcceptanceKind::Product(_) => {
                // Tr(Aρ) = Σ_j (A ρ e_j)_j.
                let mut acc = Complex64::ZERO;
                for j in 0..self.dim {
                    let col = state.matrix().column(j).into_owned();
                    let applied = self.apply(&col);
                    acc += applied[j];
                }
                Ok(acc.re)
            }
        }
    }
}

fn matrix2_to_dyn(m: &Matrix2<Complex64>) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

fn apply_factor(f: &Matrix2<Complex64>, amps: &mut [Complex64], stride: usize) {
    let dim = amps.len();
    for idx0 in 0..dim {
        if idx0 / stride % 2 == 0 {
            let idx1 = idx0 + stride;
            let a = amps[idx0];
            let b = amps[idx1];
            amps[idx0] = f[(0, 0)] * a + f[(0, 1)] * b;
            amps[idx1] = f[(1, 0)] * a + f[(1, 1)] * b;
        }
    }
}

/// The per-position acceptance factor ½ I + ½ |c_i⟩_{θ_i}⟨c_i|.
fn acceptance_factor(bit: bool, basis: Basis) -> Matrix2<Complex64> {
    let q = bb84_qubit(bit, basis);
    let d = q.density();
    let m = d.matrix();
    let half = Complex64::new(0.5, 0.0);
    Matrix2::new(
        half + half * m[(0, 0)],
        half * m[(0, 1)],
        half * m[(1, 0)],
        half + half * m[(1, 1)],
    )
}

/// Builds the acceptance effect for an announcement already known legal.
/// For `policy.is_exact()` this is the product form; otherwise a dense
/// dynamic program over (matching positions, errors) enumerates the error
/// budget exactly (limited to n ≤ 8).
fn acceptance_effect(
    bases: &BasisString,
    codeword: &BitString,
    policy: &TestPolicy,
) -> Result<AcceptanceOperator> {
    let n = bases.len();
    if policy.is_exact() {
        let factors: Vec<Matrix2<Complex64>> = (0..n)
            .map(|i| acceptance_factor(codeword.get(i), bases.get(i)))
            .collect();
        return Ok(AcceptanceOperator::product(factors));
    }
    if n > 8 {
        return Err(Error::TooLarge(format!(
            "dense acceptance enumeration limited to n <= 8, got {n}"
        )));
    }
    // table[(m, e)] = sum of operator terms with m matching positions and e
    // errors among them, built one position at a time.
    let half = Complex64::new(0.5, 0.0);
    let mut table: Vec<Vec<Option<CMatrix>>> = vec![vec![Some(CMatrix::identity(1, 1)); 1]; 1];
    for i in 0..n {
        let agree = bb84_qubit(codeword.get(i), bases.get(i)).density();
        let error = bb84_qubit(!codeword.get(i), bases.get(i)).density();
        let agree = agree.matrix().scale(0.5);
        let error = error.matrix().scale(0.5);
        let pass = linalg::identity(2).map(|z| z * half);

        let mut next: Vec<Vec<Option<CMatrix>>> = vec![vec![None; i + 3]; i + 3];
        for (m, row) in table.iter().enumerate() {
            for (e, op) in row.iter().enumerate() {
                let Some(op) = op else { continue };
                // mismatched basis: both outcomes pass, no error counted
                accumulate(&mut next[m][e], &linalg::tensor_product(op, &pass));
                // matching basis, agreement
                accumulate(&mut next[m + 1][e], &linalg::tensor_product(op, &agree));
                // matching basis, disagreement
                accumulate(&mut next[m + 1][e + 1], &linalg::tensor_product(op, &error));
            }
        }
        table = next;
    }
    let dim = 1usize << n;
    let mut total = CMatrix::zeros(dim, dim);
    for (m, row) in table.iter().enumerate() {
        for (e, op) in row.iter().enumerate() {
            let Some(op) = op else { continue };
            if e as f64 <= policy.max_error_fraction() * m as f64 + 1e-12 {
                total += op;
            }
        }
    }
    Ok(AcceptanceOperator::dense(total))
}

fn accumulate(slot: &mut Option<CMatrix>, term: &CMatrix) {
    match slot {
        Some(acc) => *acc += term,
        None => *slot = Some(term.clone()),
    }
}

/// Acceptance effect for the BCJL test: zero unless c ∈ C and c ⊙ r = b.
pub fn acceptance_operator(
    bit: bool,
    bases: &BasisString,
    codeword: &BitString,
    ctx: &SharedContext,
    policy: &TestPolicy,
) -> Result<AcceptanceOperator> {
    let n = ctx.n();
    if bases.len() != n || codeword.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "announcement of lengths ({}, {}) against context n = {n}",
            bases.len(),
            codeword.len()
        )));
    }
    let legal = ctx.code().contains(codeword)
        && inner_bit(codeword, ctx.r()).unwrap_or(false) == bit;
    if !legal {
        return Ok(AcceptanceOperator::zero(1 << n));
    }
    acceptance_effect(bases, codeword, policy)
}

/// A commitment scheme the purification attack can be run against: the BCJL
/// protocol itself, or the equal-density conjugate-basis scheme.
#[derive(Clone, Debug)]
pub enum CommitmentScheme {
    Bcjl(SharedContext),
    /// Bit 0 encodes a uniform payload in the "+" basis, bit 1 in the "x"
    /// basis; ρ_0 = ρ_1 = I/2^n exactly.
    ConjugateBasis { n: usize },
}

impl CommitmentScheme {
    pub fn n(&self) -> usize {
        match self {
            CommitmentScheme::Bcjl(ctx) => ctx.n(),
            CommitmentScheme::ConjugateBasis { n } => *n,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CommitmentScheme::Bcjl(ctx) => format!(
                "bcjl[n={},k={},r={}]",
                ctx.n(),
                ctx.code().dimension(),
                ctx.r()
            ),
            CommitmentScheme::ConjugateBasis { n } => format!("conjugate-basis[n={n}]"),
        }
    }

    fn conjugate_bases(n: usize, bit: bool) -> Result<BasisString> {
        if bit {
            BasisString::all_times(n)
        } else {
            BasisString::all_plus(n)
        }
    }

    pub fn honest_density_matrix(&self, bit: bool) -> Result<DensityMatrix> {
        match self {
            CommitmentScheme::Bcjl(ctx) => honest_density_matrix(bit, ctx),
            CommitmentScheme::ConjugateBasis { n } => {
                if *n > MAX_EXACT_N {
                    return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_EXACT_N}")));
                }
                DensityMatrix::maximally_mixed(1 << n)?.with_dims(vec![2; *n])
            }
        }
    }

    pub fn honest_ensemble(&self, bit: bool) -> Result<LabeledEnsemble> {
        match self {
            CommitmentScheme::Bcjl(ctx) => honest_ensemble(bit, ctx),
            CommitmentScheme::ConjugateBasis { n } => {
                if *n > MAX_EXACT_N {
                    return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_EXACT_N}")));
                }
                let bases = Self::conjugate_bases(*n, bit)?;
                let p = 1.0 / (1usize << n) as f64;
                let mut announcements = Vec::new();
                let mut entries = Vec::new();
                for idx in 0..1usize << n {
                    let bits = BitString::from_basis_index(idx, *n)?;
                    announcements.push(Announcement { bases, bits });
                    entries.push((p, encode_bb84(&bits, &bases)?));
                }
                Ok(LabeledEnsemble {
                    announcements,
                    ensemble: Ensemble::new(entries)?,
                })
            }
        }
    }

    pub fn is_legal_announcement(&self, bit: bool, announcement: &Announcement) -> bool {
        match self {
            CommitmentScheme::Bcjl(ctx) => {
                announcement.bits.len() == ctx.n()
                    && announcement.bases.len() == ctx.n()
                    && ctx.code().contains(&announcement.bits)
                    && inner_bit(&announcement.bits, ctx.r()).unwrap_or(false) == bit
            }
            CommitmentScheme::ConjugateBasis { n } => {
                announcement.bits.len() == *n
                    && Self::conjugate_bases(*n, bit)
                        .map(|b| b == announcement.bases)
                        .unwrap_or(false)
            }
        }
    }

    pub fn acceptance_operator(
        &self,
        bit: bool,
        announcement: &Announcement,
        policy: &TestPolicy,
    ) -> Result<AcceptanceOperator> {
        match self {
            CommitmentScheme::Bcjl(ctx) => acceptance_operator(
                bit,
                &announcement.bases,
                &announcement.bits,
                ctx,
                policy,
            ),
            CommitmentScheme::ConjugateBasis { n } => {
                if !self.is_legal_announcement(bit, announcement) {
                    return Ok(AcceptanceOperator::zero(1 << n));
                }
                acceptance_effect(&announcement.bases, &announcement.bits, policy)
            }
        }
    }

    /// The sampled form of the unveil test for this scheme.
    pub fn test_transcript(
        &self,
        bit: bool,
        announcement: &Announcement,
        measured_bases: &BasisString,
        measured_bits: &BitString,
        policy: &TestPolicy,
    ) -> bool {
        if !self.is_legal_announcement(bit, announcement) {
            return false;
        }
        matching_positions_agree(
            &announcement.bases,
            &announcement.bits,
            measured_bases,
            measured_bits,
            policy,
        )
    }
}

impl From<SharedContext> for CommitmentScheme {
    fn from(ctx: SharedContext) -> Self {
        CommitmentScheme::Bcjl(ctx)
    }
}

/// Built-in schemes addressable by name:
/// `toy42`, `hamming84`, and `equalrho<n>` for 1 ≤ n ≤ 10.
pub fn builtin_scheme(name: &str) -> Option<CommitmentScheme> {
    match name {
        "toy42" => {
            let ctx = SharedContext::new(LinearCode::toy_4x2(), "1100".parse().ok()?).ok()?;
            Some(CommitmentScheme::Bcjl(ctx))
        }
        "hamming84" => {
            let ctx = SharedContext::new(
                LinearCode::extended_hamming_8x4(),
                "11010000".parse().ok()?,
            )
            .ok()?;
            Some(CommitmentScheme::Bcjl(ctx))
        }
        _ => {
            let n: usize = name.strip_prefix("equalrho")?.parse().ok()?;
            if (1..=MAX_EXACT_N).contains(&n) {
                Some(CommitmentScheme::ConjugateBasis { n })
            } else {
                None
            }
        }
    }
}

/// Names accepted by [`builtin_scheme`], for help texts.
pub fn builtin_scheme_names() -> Vec<&'static str> {
    vec!["toy42", "hamming84", "equalrho<n>"]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn toy_context() -> SharedContext {
        SharedContext::new(LinearCode::toy_4x2(), "1100".parse().unwrap()).unwrap()
    }

    /// n = 1 degenerate context: C = {0, 1}, r = 1. Cryptographically
    /// meaningless but ideal for hand-checked oracles.
    fn single_qubit_context() -> SharedContext {
        let code = LinearCode::new(vec!["1".parse().unwrap()]).unwrap();
        SharedContext::new(code, "1".parse().unwrap()).unwrap()
    }

    #[test]
    fn context_classes_split_the_code() {
        let ctx = toy_context();
        let class0: Vec<String> = ctx.codeword_class(false).iter().map(|c| c.to_string()).collect();
        let class1: Vec<String> = ctx.codeword_class(true).iter().map(|c| c.to_string()).collect();
        assert_eq!(class0, vec!["0000", "1111"]);
        assert_eq!(class1, vec!["1010", "0101"]);
    }

    #[test]
    fn context_rejects_all_zero_r_and_orthogonal_r() {
        assert!(SharedContext::new(LinearCode::toy_4x2(), "0000".parse().unwrap()).is_err());
        // The toy code is self-dual, so r = 1010 is orthogonal to every
        // codeword and the b = 1 class would be empty.
        assert!(SharedContext::new(LinearCode::toy_4x2(), "1010".parse().unwrap()).is_err());
    }

    #[test]
    fn honest_commit_respects_the_parity_class() {
        let ctx = toy_context();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for bit in [false, true] {
            for _ in 0..200 {
                let (record, state) = honest_commit(bit, &ctx, &mut rng).unwrap();
                assert_eq!(inner_bit(&record.codeword, ctx.r()).unwrap(), bit);
                assert!(ctx.code().contains(&record.codeword));
                assert_abs_diff_eq!(state.amplitudes().norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn honest_commit_is_uniform_over_the_class() {
        let ctx = toy_context();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let (record, _) = honest_commit(true, &ctx, &mut rng).unwrap();
            *counts.entry(record.codeword.to_string()).or_insert(0usize) += 1;
        }
        // two codewords, each Binomial(10^4, 1/2): 5 sigma band is ±250.
        assert_eq!(counts.len(), 2);
        for (_, count) in counts {
            assert!((count as f64 - 5000.0).abs() < 250.0, "count = {count}");
        }
    }

    #[test]
    fn bob_matching_basis_reproduces_the_bit() {
        let ctx = toy_context();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..500 {
            let (record, state) = honest_commit(false, &ctx, &mut rng).unwrap();
            let (theta_hat, c_hat) = bob_measure(&state, &mut rng).unwrap();
            for i in 0..ctx.n() {
                if theta_hat.get(i) == record.bases.get(i) {
                    assert_eq!(c_hat.get(i), record.codeword.get(i));
                }
            }
        }
    }

    #[test]
    fn bob_mismatched_basis_is_uniform() {
        // Single qubit |0⟩ measured in the x basis: outcome 1 has
        // probability 1/2; check a 5 sigma band over 10^4 trials.
        let state = bb84_qubit(false, Basis::Plus);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut ones = 0usize;
        let trials = 10_000;
        let bases: BasisString = "x".parse().unwrap();
        for _ in 0..trials {
            let (bits, _) = measure_qubits(&state, &[0], &bases, &mut rng).unwrap();
            if bits.get(0) {
                ones += 1;
            }
        }
        assert!((ones as f64 - 5000.0).abs() < 250.0, "ones = {ones}");
    }

    #[test]
    fn measure_qubits_plus_state_is_even() {
        let state = bb84_qubit(false, Basis::Times);
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let bases: BasisString = "+".parse().unwrap();
        let mut zeros = 0usize;
        for _ in 0..10_000 {
            let (bits, _) = measure_qubits(&state, &[0], &bases, &mut rng).unwrap();
            if !bits.get(0) {
                zeros += 1;
            }
        }
        assert!((zeros as f64 - 5000.0).abs() < 250.0, "zeros = {zeros}");
    }

    #[test]
    fn honest_transcripts_always_pass() {
        let ctx = toy_context();
        let policy = TestPolicy::default();
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for bit in [false, true] {
            for _ in 0..500 {
                let (record, state) = honest_commit(bit, &ctx, &mut rng).unwrap();
                let (theta_hat, c_hat) = bob_measure(&state, &mut rng).unwrap();
                let transcript = Transcript {
                    bases: record.bases,
                    codeword: record.codeword,
                    measured_bases: theta_hat,
                    measured_bits: c_hat,
                    context: ctx.clone(),
                };
                assert!(test_unveil(bit, &transcript, &policy));
                // announcing the complementary bit with the same codeword
                // violates the parity constraint
                assert!(!test_unveil(!bit, &transcript, &policy));
            }
        }
    }

    #[test]
    fn non_codeword_announcements_fail() {
        let ctx = toy_context();
        let policy = TestPolicy::default();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let (record, state) = honest_commit(false, &ctx, &mut rng).unwrap();
        let (theta_hat, c_hat) = bob_measure(&state, &mut rng).unwrap();
        let mut transcript = Transcript {
            bases: record.bases,
            codeword: "1100".parse().unwrap(),
            measured_bases: theta_hat,
            measured_bits: c_hat,
            context: ctx,
        };
        assert!(!test_unveil(false, &transcript, &policy));
        transcript.codeword = "0011".parse().unwrap();
        assert!(!test_unveil(false, &transcript, &policy));
    }

    #[test]
    fn single_qubit_density_matrix_matches_hand_sum() {
        // ρ_0 = ½|0⟩⟨0|_+ + ½|0⟩⟨0|_x = [[3/4, 1/4], [1/4, 1/4]]
        let ctx = single_qubit_context();
        let rho0 = honest_density_matrix(false, &ctx).unwrap();
        let expected = [[0.75, 0.25], [0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(rho0.matrix()[(i, j)].re, expected[i][j], epsilon = 1e-12);
                assert_abs_diff_eq!(rho0.matrix()[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    /// Literal double sum Σ_{θ,c} p(θ,c|b)|c⟩_θ⟨c|, as an oracle for the
    /// factored computation.
    fn density_by_enumeration(bit: bool, ctx: &SharedContext) -> DensityMatrix {
        let n = ctx.n();
        let class = ctx.codeword_class(bit);
        let dim = 1usize << n;
        let p = 1.0 / ((1usize << n) as f64 * class.len() as f64);
        let mut acc = CMatrix::zeros(dim, dim);
        for theta_idx in 0..1usize << n {
            let bases = BasisString::from_index(theta_idx, n).unwrap();
            for word in class {
                let state = encode_bb84(word, &bases).unwrap();
                acc += state.density().matrix().scale(p);
            }
        }
        DensityMatrix::new(linalg::hermitize(&acc), vec![2; n]).unwrap()
    }

    #[test]
    fn factored_density_equals_enumerated_density() {
        let ctx = toy_context();
        for bit in [false, true] {
            let fast = honest_density_matrix(bit, &ctx).unwrap();
            let slow = density_by_enumeration(bit, &ctx);
            assert!(linalg::max_abs_diff(fast.matrix(), slow.matrix()) < 1e-12);
        }
    }

    #[test]
    fn density_matrices_have_unit_trace_for_builtins() {
        for name in ["toy42", "hamming84"] {
            let scheme = builtin_scheme(name).unwrap();
            for bit in [false, true] {
                let rho = scheme.honest_density_matrix(bit).unwrap();
                let tr = linalg::trace(rho.matrix());
                assert_abs_diff_eq!(tr.re, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn acceptance_operator_accepts_honest_collapse() {
        let ctx = toy_context();
        let policy = TestPolicy::default();
        let bases: BasisString = "+x+x".parse().unwrap();
        let codeword: BitString = "0101".parse().unwrap();
        let op = acceptance_operator(true, &bases, &codeword, &ctx, &policy).unwrap();
        let sigma = encode_bb84(&codeword, &bases).unwrap();
        assert_abs_diff_eq!(op.expectation_pure(&sigma).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn acceptance_operator_on_wrong_bit_same_basis_is_half() {
        let ctx = single_qubit_context();
        let policy = TestPolicy::default();
        let bases: BasisString = "+".parse().unwrap();
        let codeword: BitString = "1".parse().unwrap();
        let op = acceptance_operator(true, &bases, &codeword, &ctx, &policy).unwrap();
        let sigma = bb84_qubit(false, Basis::Plus);
        assert_abs_diff_eq!(op.expectation_pure(&sigma).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn acceptance_operator_is_zero_off_the_code() {
        let ctx = toy_context();
        let policy = TestPolicy::default();
        let bases: BasisString = "++++".parse().unwrap();
        let codeword: BitString = "1100".parse().unwrap();
        let op = acceptance_operator(false, &bases, &codeword, &ctx, &policy).unwrap();
        assert!(op.is_zero());
        let sigma = encode_bb84(&codeword, &bases).unwrap();
        assert_abs_diff_eq!(op.expectation_pure(&sigma).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn acceptance_reconstruction_sums_to_one() {
        // Σ_{θ,c} p(θ,c|b) Tr(A(θ,c)|c⟩_θ⟨c|) = 1: every honest collapse is
        // accepted with certainty.
        let ctx = toy_context();
        let policy = TestPolicy::default();
        for bit in [false, true] {
            let labeled = honest_ensemble(bit, &ctx).unwrap();
            let mut total = 0.0;
            for (announcement, (p, state)) in labeled
                .announcements
                .iter()
                .zip(labeled.ensemble.entries())
            {
                let op = acceptance_operator(
                    bit,
                    &announcement.bases,
                    &announcement.bits,
                    &ctx,
                    &policy,
                )
                .unwrap();
                total += p * op.expectation_pure(state).unwrap();
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dense_acceptance_path_matches_product_at_zero_allowance() {
        // The DP with a tiny (but nonzero) allowance below 1/n must coincide
        // with the exact product operator.
        let bases: BasisString = "+x".parse().unwrap();
        let codeword: BitString = "01".parse().unwrap();
        let product = acceptance_effect(&bases, &codeword, &TestPolicy::default()).unwrap();
        let dense =
            acceptance_effect(&bases, &codeword, &TestPolicy::new(0.2).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(&product.matrix(), &dense.matrix()) < 1e-12);
    }

    #[test]
    fn dense_acceptance_with_full_allowance_accepts_legal_announcements() {
        // max_error_fraction = 1 means any outcome passes: the operator is
        // the identity.
        let bases: BasisString = "+x".parse().unwrap();
        let codeword: BitString = "01".parse().unwrap();
        let op = acceptance_effect(&bases, &codeword, &TestPolicy::new(1.0).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(&op.matrix(), &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn conjugate_basis_scheme_has_equal_densities() {
        let scheme = CommitmentScheme::ConjugateBasis { n: 2 };
        let rho0 = scheme.honest_density_matrix(false).unwrap();
        let rho1 = scheme.honest_density_matrix(true).unwrap();
        assert!(linalg::max_abs_diff(rho0.matrix(), rho1.matrix()) < 1e-15);
        let ens0 = scheme.honest_ensemble(false).unwrap();
        assert!(linalg::max_abs_diff(ens0.ensemble.average().matrix(), rho0.matrix()) < 1e-12);
    }

    #[test]
    fn builtin_scheme_names_resolve() {
        assert!(builtin_scheme("toy42").is_some());
        assert!(builtin_scheme("hamming84").is_some());
        assert!(builtin_scheme("equalrho2").is_some());
        assert!(builtin_scheme("equalrho11").is_none());
        assert!(builtin_scheme("nope").is_none());
    }

    #[test]
    fn context_spec_round_trips_through_json() {
        let ctx = toy_context();
        let spec = ContextSpec::from(&ctx);
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: ContextSpec = serde_json::from_str(&json).unwrap();
        let restored = SharedContext::try_from(parsed).unwrap();
        assert_eq!(restored.r(), ctx.r());
        assert_eq!(restored.code(), ctx.code());
    }

    #[test]
    fn test_policy_validation() {
        assert!(TestPolicy::new(0.0).is_ok());
        assert!(TestPolicy::new(1.0).is_ok());
        assert!(TestPolicy::new(-0.1).is_err());
        assert!(TestPolicy::new(1.1).is_err());
    }
}
