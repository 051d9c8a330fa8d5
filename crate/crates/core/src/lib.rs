//! Frequency-shortcut analysis and DFM-guided data augmentation.
//!
//! This crate computes per-class dominant frequency maps (DFMs) for a trained
//! image classifier, uses them to drive the DFM-X augmentation strategy, and
//! measures the effect on corruption robustness (mCE/rCE/SA/RA) and
//! adversarial robustness (FGSM/PGD).
//!
//! The crate is organised around a small set of modules:
//!
//! - [`spectral`] — 2D radix-2 DFTs, Hermitian-symmetric binary masks, and
//!   the mask-filtering operation used everywhere else.
//! - [`model`] — a small convolutional classifier with exact analytic
//!   gradients for both parameters and inputs, plus the training loop.
//! - [`dfm`] — greedy per-frequency-pair search for dominant frequency maps
//!   under an accuracy-degradation budget.
//! - [`augment`] — the per-epoch DFM-X augmentation scheduler.
//! - [`corruptions`] — a desk-scale corruption suite and the mCE/rCE/SA/RA
//!   metrics.
//! - [`attacks`] — FGSM and PGD L-infinity evaluation.
//! - [`datasets`] — synthetic planted-shortcut data, the CIFAR-10 binary
//!   loader, dataset views, and binary persistence for every artifact.
//!
//! Batch-level inner loops (gradient accumulation, evaluation, DFM search,
//! corruption and attack sweeps) run on rayon when the default `parallel`
//! feature is enabled and fall back to sequential execution without it.
//! All reductions are structured so results are bitwise identical either way.

pub mod attacks;
pub mod augment;
pub mod corruptions;
pub mod datasets;
pub mod dfm;
pub mod exec;
pub mod keyval;
pub mod model;
pub mod seeding;
pub mod spectral;
