//! Problem data structures and elementary operations: sparse symmetric
//! matrices, quadratic forms, GTRS instances, the aggregated pencil, data
//! normalization, and boundary stepping along a ray.

mod instance;
mod io;
pub(crate) mod la;
mod ops;
mod quadratic;
mod sparse;

pub use instance::{GtrsInstance, InstanceError, PencilView, SymOp};
pub use io::{
    instance_from_json, instance_to_json, read_instance, write_instance, FileGroundTruth,
    FormatError, InstanceFile, FORMAT_VERSION,
};
pub use ops::{boundary_step, normalize_instance, BoundaryStepError, NormalizeError};
pub use quadratic::{eval_aggregated, eval_quadratic, Quadratic};
pub use sparse::{SparseError, SparseSymMatrix};
