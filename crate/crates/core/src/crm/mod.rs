//! Stateless CRM mathematics: skeleton, empirical model, weighted likelihood,
//! posterior estimation and dose recommendation.

pub mod model;
pub mod posterior;
pub mod quadrature;
pub mod recommend;
pub mod skeleton;

pub use model::{log_weighted_likelihood, prob_tox, weight_of, Observation, PROB_CLAMP};
pub use posterior::{posterior_beta_mean, Estimate, PosteriorModel};
pub use quadrature::GaussHermite;
pub use recommend::recommend_dose;
pub use skeleton::Skeleton;
