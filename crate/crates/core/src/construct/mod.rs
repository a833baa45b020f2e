//! The stage machines, their schedules, and the sources they draw bits from.

pub mod conditions;
pub mod schedule;
pub mod sources;
pub mod target;
pub mod thm1;
pub mod thm2;

pub use conditions::{Condition, Requirement};
pub use schedule::Schedule;
pub use sources::{BitSource, Periodic, PrngBits};
pub use target::{gen_target, partition_t, Ratio, TargetBlock, TargetSequence};
pub use thm1::{build_thm1, recover_a, StageTrace, Thm1Build};
pub use thm2::{build_thm2, recover_parity, BlockTrace, FoldSource, Thm2Build, Thm2StageTrace};
