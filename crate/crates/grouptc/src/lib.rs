//! Signal processing on finite groups.
//!
//! Everything in this crate runs on a group presented by its Cayley table:
//! exact permutation actions on grids and voxel cubes, G-convolution with
//! max G-pooling, the complete G-triple-correlation invariant with its
//! symmetry-reduced coefficient set, the group Fourier transform with
//! bispectra and Clebsch-Gordan machinery, signal recovery from a reduced
//! set of bispectral coefficients, exhaustive completeness scans, and a
//! small training harness comparing max pooling against the triple
//! correlation layer.
//!
//! See the `examples/` directory for a runnable tour of each capability,
//! and the `grouptc` binary for the file-based command line interface.

pub mod action;
pub mod cli;
pub mod completeness;
pub mod gconv;
pub mod io;
pub mod group;
pub mod rng;
pub mod spectral;
pub mod tc;
pub mod train;
