//! Exact desk-scale simulator of the BCJL quantum bit-commitment protocol
//! and of the purification attack against it.
//!
//! The crate has four layers:
//!
//! * quantum primitives — states, density matrices, tensor products and
//!   partial traces ([`state`]), generalized measurements ([`measurement`]),
//!   fidelity, Uhlmann-aligned purifications and ensemble steering
//!   ([`purification`]);
//! * the honest protocol — GF(2) codes ([`code`]), contexts, commit and
//!   unveil, exact honest density matrices and acceptance effect operators
//!   ([`protocol`]);
//! * the attack — committed purifications, steering either bit open, and
//!   the exact bound chain on the acceptance gap ([`attack`]);
//! * distinguishability metrics — Kolmogorov distance, the
//!   Bhattacharyya-Wootters coefficient, Helstrom and minimum-BW
//!   measurements, and the security criterion report ([`metrics`]).
//!
//! Everything is computed with dense complex linear algebra at dimensions
//! up to 2^10; no quantity in the reports is sampled unless a Monte Carlo
//! cross-check is explicitly requested.

pub mod attack;
pub mod bits;
pub mod code;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod protocol;
pub mod purification;
pub mod random;
pub mod state;

pub use attack::{
    attack_bound, attack_bound_delta, classic_attack_bound, classic_attack_bound_exact,
    AttackReport, AttackSampler, AttackState, DeltaBoundCheck, UnveilOutcome,
};
pub use bits::{Basis, BasisString, BitString};
pub use code::{inner_bit, make_code, CodeSpec, LinearCode};
pub use error::{Error, Result};
pub use measurement::{Effect, GeneralMeasurement, MeasurementOutcome, Povm};
pub use metrics::{
    bhattacharyya, binary_coarsen, helstrom, kolmogorov, min_bw_measurement,
    outcome_distributions, probability_of_error, security_report, DistributionPair,
    SecurityReport,
};
pub use protocol::{
    acceptance_operator, bob_measure, builtin_scheme, builtin_scheme_names, honest_commit,
    honest_density_matrix, honest_ensemble, measure_qubits, test_unveil, AcceptanceOperator,
    AliceRecord, Announcement, CommitmentScheme, ContextSpec, LabeledEnsemble, SharedContext,
    TestPolicy, Transcript,
};
pub use purification::{
    canonical_purification, fidelity, measure_ancilla, optimal_purifications, root_fidelity,
    steering_povm, AncillaOutcome, Conditional, Purification,
};
pub use state::{encode_bb84, DensityMatrix, Ensemble, PureState};
