//! Mutually unbiased equiangular tight frames and the projection-constant
//! bounds they certify.
//!
//! The crate has three layers:
//!
//! * construction — [`gf2`] builds the ±1 character submatrix indexed by
//!   the two quadrics of F₂^{2s}, and [`frame`] recovers from any valid
//!   sign matrix the mutually unbiased pair of equiangular tight frames
//!   it encodes;
//! * closed forms — [`bounds`] evaluates the coherence φ, the upper
//!   bound δ, the two-frame lower bound γ with its mixing angle, the
//!   family closed form, and the integrality obstructions;
//! * search — [`witness`] assembles the explicit candidate maximizer
//!   from a frame pair and certifies its stationarity identities, while
//!   [`optimizer`] maximizes the objective from random restarts by
//!   alternating the two eigenvector conditions.
//!
//! Everything runs on the self-contained dense kernels in [`linalg`];
//! all functions are pure and safe to call concurrently.

pub mod bounds;
pub mod frame;
pub mod gf2;
pub mod linalg;
pub mod optimizer;
pub mod textfmt;
pub mod witness;

pub use bounds::{delta, gamma, phi};
pub use frame::{frames_from_sign_matrix, verify_properties, Frame};
pub use gf2::{build_sign_matrix, SignMatrix};
pub use optimizer::{maximize, OptimizerConfig};
pub use witness::{build_witness, Witness};
