//! Compression of atomistic datasets by greedy set cover over atom-centered
//! descriptors, with kernel-density entropy measures to judge the result.
//!
//! The pipeline is: read structures ([`io`]), compute one descriptor row per
//! atom ([`descriptor`]), select a subset of structures ([`samplers`]), and
//! compare the subset with the full dataset ([`evaluation`], [`info`]).

pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod info;
pub mod io;
pub mod samplers;

pub use error::{Error, Result};
