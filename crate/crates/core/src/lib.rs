//! Rayleigh-quotient minimization over tensor-train varieties: dense and
//! TT tensor formats, ALS/DMRG solvers, and enumeration of all complex
//! critical points by homotopy continuation and monodromy.

pub mod critical;
pub mod error;
pub mod hamiltonian;
pub mod rng;
pub mod solvers;
pub mod tensor;
pub mod tt;
pub mod variety;

pub use error::{Error, Result};
pub use hamiltonian::{Hamiltonian, SecondQuantizedSpec};
pub use tensor::{DenseTensor, FlatMatrix, RankProfile, Scalar, Shape};
pub use tt::{GaugedTrain, TensorTrain, TtCore};
