//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

pub mod derivatives;
pub mod quadrature;
pub mod rate;
