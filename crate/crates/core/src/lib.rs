//! Metastability analysis for Fokker-Planck type operators with a Gibbs state:
//! energy landscape labeling, structural checks, Eyring-Kramers asymptotics,
//! graded Schur-complement spectra and finite-difference validation.

pub mod error;
pub mod eyring_kramers;
pub mod fields;
pub mod graded;
pub mod grid;
pub mod landscape;
pub mod linalg;
pub mod logscaled;
pub mod operator;
pub mod sampling;
pub mod validate;

pub use error::{Error, ErrorKind, Result};
pub use logscaled::LogScaled;
