//! Max-plus measure algebra and transport distances.
//!
//! This crate models finitely supported idempotent probability measures —
//! max-combinations of weighted Dirac functionals with top weight 0 — over
//! a finite metric space, and computes the bottleneck transport distance
//! between them: the minimum over coupling supports of the worst pair cost
//! |λ₂ₖ − λ₁ⱼ| + ρ(x₁ⱼ, x₂ₖ), together with its diameter-truncated
//! variant and convergence diagnostics.
//!
//! # Layout
//!
//! - [`semiring`]: max-plus scalars and the smoothed addition ⊕ₕ.
//! - [`space`]: finite ground spaces (distance matrix or Euclidean cloud).
//! - [`measure`]: measures, Maslov integration, pushforwards.
//! - [`coupling`]: the coupling set, its canonical member, random members,
//!   composition, and exhaustive support enumeration.
//! - [`metric`]: pair costs, the closed-form solver and the exhaustive
//!   oracle, truncation, tail estimation, Gram matrices.
//! - [`convergence`]: atom tracking, weak neighborhoods, metric vs
//!   pointwise convergence verdicts.
//! - [`sampling`]: random spaces, measures and drift families.
//!
//! # Parallelism
//!
//! The `parallel` feature (on by default) runs Gram matrices and tail
//! checks on the rayon pool; without it the same code runs sequentially
//! with identical results.

pub mod convergence;
pub mod coupling;
pub mod error;
pub mod measure;
pub mod metric;
mod par;
pub mod sampling;
pub mod semiring;
pub mod space;

pub use error::{Error, Result};
pub use measure::{IdempotentMeasure, Normalization, TestFunction};
pub use metric::{cost_matrix, gram, h, h_bruteforce, rho_omega, DistanceReport};
pub use semiring::{oplus_h, MaxPlusScalar};
pub use space::GroundSpace;
