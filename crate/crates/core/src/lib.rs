//! Numerical models for contrast loss of an aloof electron beam passing a
//! conducting surface, together with the beam optics and image analysis
//! needed to compare those models against biprism interferograms.
//!
//! The crate is organised in three layers:
//!
//! * shared physics plumbing: constants, beam kinematics, materials and
//!   their dielectric response, adaptive quadrature and special functions;
//! * five interchangeable decoherence models behind [`models::DecoherenceModel`],
//!   selected by tag at runtime and evaluated into visibility curves;
//! * the measurement side: transfer-matrix beamlines with an electron
//!   biprism, Wien filter contrast analysis, and a synthetic interferogram
//!   pipeline (Poisson sampling, slab-wise fringe fits, normalised contrast
//!   profiles).
//!
//! All quantities are SI unless a field name says otherwise.

pub mod beam;
pub mod config;
pub mod constants;
pub mod fit;
pub mod fringe;
pub mod geometry;
pub mod material;
pub mod models;
pub mod optics;
pub mod pgm;
pub mod quad;
pub mod response;
pub mod special;
pub mod wien;
