//! Finite-element spectrum of the twisted Laplacian on the octagon.

pub mod assemble;
pub mod eigen;
pub mod mesh;
pub mod side;

pub use assemble::{assemble, AssembledSystem, CsrMatrix};
pub use eigen::{solve_spectrum, solve_spectrum_with, EigenCluster, SolverOptions, SpectrumResult};
pub use mesh::{build_octagon_mesh, OctagonMesh};
pub use side::{spectral_side, spectral_side_lenient, weyl_counting, SpectralSide, WeylPoint};
