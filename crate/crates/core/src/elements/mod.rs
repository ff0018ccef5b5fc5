//! Quadrature rules, the temporal Lagrange basis at Gauss-Radau nodes, and
//! the inf-sup stable velocity/pressure pair on quadrilateral meshes.

mod basis;
mod quadrature;
mod spaces;

pub use basis::{temporal_basis, LagrangeBasis, TemporalBasis};
pub use quadrature::{
    gauss_legendre, gauss_legendre_reference, gauss_lobatto, gauss_radau, legendre, QuadratureRule,
};
pub use spaces::{
    build_pressure_space, build_velocity_space, monomial_exponents, shape_tables, PressureSpace,
    ShapeTables, VelocitySpace,
};
