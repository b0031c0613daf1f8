//! Anisotropic a posteriori mesh adaptation for P1 finite elements on the
//! unit square.

pub mod linalg;
pub mod adapt;
pub mod cases;
pub mod estimate;
pub mod fem;
pub mod mesh;
pub mod metric;
pub mod recovery;
pub mod study;

pub use linalg::{Mat2, Point, Sym2};
pub use mesh::{EdgeRef, Mesh, MeshError};
