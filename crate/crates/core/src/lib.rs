//! Bayesian dating of language families from binary cognate data.
//!
//! Trees are dated in years before present. Tips may be ancient languages
//! with uncertain ages, and under the fossilized birth-death prior an ancient
//! language may sit directly on a lineage as a sampled ancestor.

pub mod analysis;
pub mod clade;
pub mod clock;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod mcmc;
pub mod model;
pub mod priors;
pub mod simulate;
pub mod tree;

pub use error::{ModelError, ParseError};
