//! Test functions, quadrature, and the Plancherel identity term.

pub mod plancherel;
pub mod quadrature;
pub mod testfn;

pub use plancherel::{fourier_roundtrip, identity_term, IdentityTerm, PlancherelModel};
pub use testfn::{mollifier_family, Family, PhiTable, TestFunction, TestFunctionSpec};
