//! Compactly supported and band-limited shearlet frames in 2D and 3D.
//!
//! The crate is organised along the pipeline it serves:
//!
//! * [`filters`] — low-pass filters from the squared-magnitude closed form,
//!   spectral factorisation, scaling functions and shearlet generators;
//! * [`systems`] — scaling/shear matrices, cone and pyramid partitions,
//!   index enumeration;
//! * [`framebounds`] — grid estimates of the Θ/Γ quantities and the frame-bound
//!   sandwich;
//! * [`transform`] — FFT analysis/synthesis, frame operator, iterative inversion
//!   and coefficient selection;
//! * [`cartoon`] — cartoon-like phantoms in 2D and 3D;
//! * [`lab`] — N-term error curves, wavelet baseline, denoising, rate fits;
//! * [`io`] — the F64R container, CSV, PGM and key=value config helpers.

pub mod cartoon;
pub mod error;
pub mod fft;
pub mod filters;
pub mod framebounds;
pub mod io;
pub mod lab;
pub mod systems;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
