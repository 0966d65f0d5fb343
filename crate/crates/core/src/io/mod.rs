//! On-disk formats: binary weight archives, TOML pruning plans and
//! line-delimited JSON traces.

mod archive;
mod plan;
mod trace;

pub use archive::{load_archive, save_archive, WeightArchive, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use plan::{read_plan, validate_plan, write_plan};
pub use trace::{read_trace, write_trace};
