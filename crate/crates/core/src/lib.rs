//! Beamforming, capacity bounds and outage analysis for RIS-aided MISO
//! downlinks under Rician fading.

pub mod beamforming;
pub mod bounds;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod outage;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
