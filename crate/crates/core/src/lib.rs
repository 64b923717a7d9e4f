//! Rotation-invariant shape descriptors from moment tensors, Hermite
//! expansions and tensor contraction graphs.

pub mod align;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hermite;
pub mod invariants;
pub mod io;
pub mod pipeline;
pub mod shape;
pub mod symtensor;

pub use align::{optimize, AlignConfig, AlignmentResult, Rotation};
pub use error::{Error, Result};
pub use graph::{ContractionGraph, Edge, GraphSpec, Port};
pub use hermite::{encode, encode_with, reconstruct, to_polynomial, HermiteCoeffs};
pub use invariants::{
    default_catalog, feature_vector, rotation_equivalence_test, similarity_distance, InvariantCatalog,
    InvariantVector,
};
pub use pipeline::ScaleMode;
pub use shape::{MomentSet, Shape, TensorSet};
pub use symtensor::{pack_index, trace_power, SymTensor};
