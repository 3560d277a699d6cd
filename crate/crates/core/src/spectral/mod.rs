//! Divergence-free periodic fields in truncated Fourier space.

mod field;
mod grid;
mod ops;
mod tensor;
mod transform;

pub use field::{leray_project, FieldDefects, Norms, SpectralField};
pub use grid::{sym_index, GridSpec, ModeTable, DEFAULT_DEALIAS_FRACTION};
pub use ops::{
    div_tensor, gradient_physical, nonlinear_eval, nonlinear_term, outer_products,
    projected_divergence, with_transform, NonlinearEval,
};
pub use tensor::SymTensorField;
pub use transform::Transform;

