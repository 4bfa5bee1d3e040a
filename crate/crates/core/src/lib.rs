#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod ensemble;
pub mod experiments;
pub mod error;
pub mod integrability;
pub mod model;
pub mod ode;
pub mod painleve2;
pub mod par;
pub mod pathintegrate;
pub mod spectrum;
pub mod stats;
