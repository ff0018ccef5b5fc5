//! Space-time multigrid preconditioner.

pub mod bounds;
pub mod rebuild;
pub mod schedule;
pub mod transfer;
pub mod vanka;
pub mod vcycle;

pub use bounds::{patch_pair, surrogate_bounds, SurrogateBounds};
pub use rebuild::{should_rebuild, stagnates, RebuildConfig, RebuildMonitor};
pub use schedule::{build_schedule, build_schedule_ordered, CoarseningOrder, LevelSchedule, LevelSpec, TransferKind};
pub use transfer::Transfer;
pub use vanka::{build_patches, PatchSet, VankaMode};
pub use vcycle::{Multigrid, MultigridConfig};
