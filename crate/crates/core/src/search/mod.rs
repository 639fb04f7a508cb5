//! The repair search: dominance, archive, suspiciousness, patch generation and the main loop.

pub mod archive;
pub mod dominance;
pub mod patch;
pub mod repair;
pub mod susp;

pub use archive::{classify_impact, Archive, ArchiveEntry, Lineage, Update, DEFAULT_ARCHIVE_CAP, IMPACT_TOLERANCE};
pub use dominance::{dominates, non_dominated_indices, weakly_dominates};
pub use patch::{generate_patch, select_parameter};
pub use repair::{confirm_patch, repair, Budget, Confirmation, EvalRecord, FrontSnapshot, Mode, RepairConfig, RunLog, StopReason};
pub use susp::{Counters, Impact, SuspTracker, DEFAULT_N_SUSP};
