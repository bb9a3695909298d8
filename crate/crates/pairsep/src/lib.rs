//! Fisher-information limits for resolving an incoherent point-source
//! pair in three dimensions.
//!
//! A photon collected from a pair of equally bright incoherent sources
//! carries, across the exit pupil of a circular-aperture imager, a phase
//! tilt proportional to the transverse pair separation and a defocus
//! term proportional to the axial one. This crate computes how much
//! information about the full 3D separation vector that photon can
//! possibly deliver, and how much of it specific wavefront-projection
//! measurements actually recover:
//!
//! - [`qfi`] — the per-photon quantum Fisher information matrix by three
//!   routes (closed form, phase covariance, state derivative) with
//!   cross-route certification;
//! - [`modal`] — Zernike and sine-cosine projection modes, their overlap
//!   amplitudes, and exact or small-separation channel probabilities;
//! - [`fisher`] — classical Fisher information of modal photon counting,
//!   Cramér-Rao bounds, and truncation sweeps that converge to the
//!   quantum bound;
//! - [`montecarlo`] — seeded multinomial photon counting and
//!   maximum-likelihood estimation of the separation vector;
//! - [`experiments`] — configuration-driven sweeps with CSV/SVG output,
//!   shared by the `pairsep` command-line tool and the examples.
//!
//! Numerical infrastructure lives in [`quad`] (Gauss-Legendre by
//! trapezoid tensor rule on the unit disk), [`bessel`] (integer-order
//! `J_n` by downward recurrence), and [`optim`] (BFGS with a Nelder-Mead
//! fallback).
//!
//! All quantities are dimensionless: transverse separations in units of
//! `lambda z_O / R`, axial in units of `lambda z_O^2 / R^2`, information
//! per detected photon.

pub mod bessel;
pub mod error;
pub mod experiments;
pub mod fisher;
pub mod modal;
pub mod montecarlo;
pub mod optics;
pub mod optim;
pub mod qfi;
pub mod quad;

pub use error::{Error, Result};
pub use fisher::{
    crb_from_fisher, fisher_matrix, sincos_fi_axial, sincos_fi_transverse, AxialFiLevel,
    ChannelRef, CrbResult, DerivativeMode, FisherOutcome, TransverseFiLevel,
};
pub use modal::{
    channel_probabilities, mode_overlap_amplitude, orthonormality_residual,
    sincos_overlap_transverse, zernike_eval, zernike_probability_exact,
    zernike_probability_small, ChannelProbabilities, ModeId, ModeSet, ProbabilityModel, Sign,
    SinCosFamily,
};
pub use montecarlo::{
    batch_estimate, ml_estimate, neg_log_likelihood, sample_frame, BatchConfig, BatchEstimate,
    CountsFrame, EstimationResult, MlOptions,
};
pub use optics::{
    eigen_decompose, normalize_separation, overlap_delta, phase_psi, ApertureKind, ApertureModel,
    EigenPair, OverlapDelta, SeparationVector,
};
pub use qfi::{
    localization_qfi, qfi_clear_analytic, qfi_phase_covariance, qfi_state_derivative,
    qfi_state_derivative_detailed, InfoMatrix,
};
