//! Genus-2 Fuchsian group, words, and its length spectrum.

pub mod cache;
pub mod enumerate;
pub mod group;
pub mod mat2;
pub mod word;

pub use enumerate::{
    enumerate_classes, enumerate_with, primitive_decomposition, ClassCanonicalizer, ConjugacyClass,
    EnumerationOptions, LengthSpectrum,
};
pub use group::{bolza_preset, SurfaceGroup};
pub use mat2::{hyperbolic_length, Mat2};
pub use word::{Letter, Word};
