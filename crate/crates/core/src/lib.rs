//! Evolving per-synapse Hebbian learning rules with evolution strategies.
//!
//! Agents start every episode with random weights and rewire them online
//! with a rule `dw = eta * (A*pre*post + B*pre + C*post + D)` whose
//! coefficients are the only evolved parameters. The crate contains the
//! network and rule ([`net`]), the genome mapping ([`genome`]), the
//! optimizer ([`es`]), small deterministic environments ([`envs`]), episode
//! and perturbation pipelines ([`rollout`]), post-hoc analysis
//! ([`analysis`]) and the experiment harness behind the `hebbian-es` binary
//! ([`expcli`]).

pub mod analysis;
pub mod envs;
pub mod error;
pub mod es;
pub mod expcli;
mod format;
pub mod genome;
pub mod net;
pub mod rollout;
pub mod seed;

pub use error::{Error, Result};
