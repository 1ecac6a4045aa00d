//! Closed-loop simulator and parameter extraction for a 3D microwave cavity
//! coupled to a transmission line through a flux-tunable SQUID-bridge coupler.

pub mod config;
pub mod csvfmt;
pub mod device;
pub mod dynamics;
pub mod extraction;
pub mod protocols;
pub mod spectroscopy;
pub mod trace;
pub mod units;
