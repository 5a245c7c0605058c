#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod error;
pub mod estimators;
pub mod gpd;
pub mod predictive;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod validation;
