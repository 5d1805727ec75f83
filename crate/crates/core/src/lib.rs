#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beam;
pub mod config;
pub mod error;
pub mod figure;
pub mod grassmannian;
pub mod io;
pub mod microlocal;
pub mod probe;
pub mod product;
pub mod run;
pub mod sampling;
pub mod scene;
pub mod selfcheck;
pub mod transform;

pub use error::{Error, Result};
