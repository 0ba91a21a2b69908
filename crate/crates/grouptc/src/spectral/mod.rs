//! Spectral machinery: irreps, group Fourier transform, Kronecker tables,
//! Clebsch-Gordan matrices, bispectra, and signal recovery from a reduced
//! coefficient set.

pub mod bispectrum;
pub mod clebsch;
pub mod cmatrix;
pub mod fourier;
pub mod irreps;
pub mod kron;
pub mod recovery;

pub use bispectrum::{Bispectrum, BispectrumError, SpectralContext};
pub use clebsch::{clebsch_gordan, CgBlock, ClebschError, ClebschGordan};
pub use cmatrix::CMatrix;
pub use fourier::{gft, igft, igft_real, FourierCoefficients, FourierError};
pub use irreps::{builtin_irreps, irreps_to_json, load_irreps, Irrep, IrrepError, IrrepTable};
pub use kron::{kronecker_table, KronError, KroneckerTable};
pub use recovery::{recover_signal, recovery_plan, RecoveredSignal, RecoveryError, RecoveryPlan};
