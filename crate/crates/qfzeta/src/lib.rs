//! Arithmetic of indefinite integral quadratic forms and the modular
//! objects built from their representation measures.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`quadform`] — exact invariants of a half-integral symmetric matrix
//!    `Y` (determinant, signature, level, dual form, field characters);
//! 2. [`localdensity`] — p-adic representation densities by stabilized
//!    counting and Euler-product measures `M(P;n)`;
//! 3. [`characters`] / [`bruhat`] — Dirichlet characters, Gauss sums, the
//!    theta multiplier, and finite Fourier analysis on rational lattices;
//! 4. [`series`] — coefficient sequences, completed Dirichlet series with
//!    Hecke-type functional equations and their character twists;
//! 5. [`forms`] — Fourier expansions of Maass and holomorphic modular
//!    forms, with numerical modularity / Laplacian / Fricke defects;
//! 6. [`cli`] — configuration, caching, and report generation for the
//!    `qfzeta` binary.
//!
//! All exact computations are done in integer or rational arithmetic;
//! floating point enters only at product assembly and analytic evaluation.

pub mod bruhat;
pub mod characters;
pub mod cli;
pub mod forms;
pub mod localdensity;
pub mod quadform;
pub mod series;
pub mod special;

pub use quadform::{FormProfile, QuadraticForm};
