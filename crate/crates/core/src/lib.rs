//! Time-to-event continual reassessment method (TITE-CRM) with explicit
//! handling of follow-up censored by disease progression.
//!
//! * [`crm`]: skeleton, empirical model, weighted likelihood and posterior.
//! * [`engine`]: the sequential trial state machine shared by simulation and
//!   live conduct.
//! * [`scenario`]: latent outcome generation and the built-in scenario grid.
//! * [`sim`]: replicate runner, study aggregation and strategy comparison.

pub mod config;
pub mod crm;
pub mod design;
pub mod engine;
pub mod error;
pub mod scenario;
pub mod sim;

pub use design::{DesignConfig, Strategy};
pub use error::{Error, Result};
