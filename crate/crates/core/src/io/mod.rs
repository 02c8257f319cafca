//! Text formats and built-in benchmarks.

pub mod benchmarks;
mod fsc_format;
mod pomdp_format;
mod result_format;

pub use benchmarks::{builtin, BenchmarkId};
pub use fsc_format::{parse_fsc, write_fsc};
pub use pomdp_format::{parse_pomdp, write_pomdp};
pub use result_format::{parse_result, write_result, write_sweep, OutputFormat, CSV_HEADER};
