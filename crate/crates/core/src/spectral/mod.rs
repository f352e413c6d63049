//! Periodic 2D spectral fields, dyadic projections, and multiplier plumbing.
//!
//! Fields live on an `n × n` periodic grid of side `box_length` and are
//! stored as Fourier series coefficients `c(ξ)` with
//! `f(x) = Σ_ξ c(ξ) e^{i x·ξ}`, `ξ = (2π/box_length)·m`, `m ∈ [−n/2, n/2)²`.
//! With this normalization a pointwise product of fields is the plain
//! discrete convolution of coefficients, and the continuum transform
//! `F(f)(ξ) = ∫ e^{−ix·ξ} f dx` equals `box_length² · c(ξ)` on the lattice.

mod cutoffs;
mod fft;
mod field;
mod grid;

pub use cutoffs::{
    multiply_physical_radial, psi, psi_geq, psi_leq, psi_tilde, theta_cutoff, theta_tilde,
    DyadicCutoffs,
};
pub use field::SpectralField;
pub use grid::Grid2D;

pub(crate) use fft::{fft2, ifft2};
