//! Quasi-modular forms, the Darboux-Halphen flow, Bianchi IX instanton
//! geometry, BPS monopoles and the two-monopole moduli space.

pub mod bianchi_geometry;
pub mod bps_monopole;
pub mod darboux_halphen;
pub mod error;
pub mod forms;
pub mod jet;
pub mod moduli_space;
pub mod modular_forms;
pub mod ode;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use bianchi_geometry::{asd_residual, build_coframe_metric, ricci, CoframeMetric};
pub use bps_monopole::{MonopoleConfig, Profile};
pub use darboux_halphen::{ClosedForm, TriadJet, TriadProvider, TriadState};
pub use moduli_space::{AhMetric, Gauge, GeodesicState, RationalMap};
pub use modular_forms::{HalfPlanePoint, SeriesParams};
