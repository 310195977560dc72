//! Weighted magnetic graph calculus at desk scale.
//!
//! The toolkit models locally finite weighted graphs with edge phases,
//! applies the magnetic Laplacian, its square, and radial perturbations to
//! finitely supported amplitudes, and builds three kinds of evidence on top:
//!
//! - [`theorem`]: does a concrete (family, potential, q, alpha) instance
//!   satisfy the hypotheses of the self-adjointness criterion for the
//!   perturbed bi-Laplacian?
//! - [`lab`]: randomized verification of the cut-off estimate machinery —
//!   product rule, norm expansion, localization bounds — with observed
//!   sharpness ratios.
//! - [`probe`]: heuristic deficiency-index diagnostics via recurrence
//!   shooting and truncated-operator singular values.
//!
//! Infinite graphs are always handled through [`family::GraphFamily`]
//! generators with explicit horizons; nothing is silently truncated.

pub mod amplitude;
pub mod cutoff;
pub mod error;
pub mod family;
pub mod graph;
pub mod io;
pub mod lab;
pub mod manifest;
pub mod operator;
pub mod potential;
pub mod probe;
pub mod svd;
pub mod theorem;

pub use amplitude::{Amplitudes, RealAmplitudes};
pub use error::{CertificateError, FamilyError, GraphError, OperatorError, ProbeError};
pub use family::{growth_stats, growth_table, FamilySpec, GraphFamily, GrowthStats};
pub use graph::{Ball, EdgeSpec, MagneticGraph};
pub use manifest::RunManifest;
pub use operator::{
    apply_bilaplacian, apply_h, apply_laplacian, apply_p, assemble_truncation, inner, norm,
    norm_sq, Boundary, SparseOperator,
};
pub use potential::{Potential, QCertificate, QFunction};
pub use theorem::{check_instance, check_theorem, HypothesisReport, InstanceDoc, Verdict};
