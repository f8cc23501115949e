//! Reference elements, quadrature, finite element spaces and the
//! single-mesh fluid operators.

pub mod assembly;
pub mod element;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use assembly::{
    assemble_convection, assemble_divergence, assemble_load, assemble_mass, assemble_traction,
    assemble_viscous,
};
pub use element::{shape_eval, ElementFamily, ShapeValues};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use space::{CellQuadrature, FeSpace, QuadPoint};
pub use sparse::{CsrMatrix, TripletBuilder};
