//! Numerical verification engine for paraquaternionic contact (pqc) geometry.
//!
//! The flat model is the paraquaternionic Heisenberg group with its
//! left-invariant structure. Conformal deformations `η̄ = η/2h` by positive
//! polynomial factors `h` are built in closed form, and the identities linking
//! curvature, torsion and the pqc conformal curvature are checked numerically.

pub mod paraquat;
pub mod tensor;
pub mod jets;
pub mod residual;
pub mod conformal;
pub mod heisenberg;
pub mod invariants;
pub mod cayley;
pub mod checks;

pub use paraquat::{ParaQuaternion, ParaquatError};
pub use tensor::{EpsilonSigns, PqcFrameData, Tensor2, Tensor4, TensorError};
