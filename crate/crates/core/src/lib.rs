//! A desk-scale laboratory for nonparametric operator regression.
//!
//! The crate generates synthetic operator-regression problems whose input
//! measure has a prescribed covariance spectrum, fits piecewise-constant
//! (histogram) estimators in eigencoordinates under two observation-noise
//! models, measures empirical Bochner risk by Monte Carlo, constructs
//! information-theoretic lower-bound instances from packed bump families and
//! binary codes, and evaluates the matching closed-form rate expressions for
//! overlay plots.

pub mod config;
pub mod error;
pub mod estimator;
pub mod lowerbound;
pub mod measure;
pub mod noise;
pub mod operators;
pub mod rates;
pub mod risk;
pub mod rng;
pub mod runner;
pub mod spectrum;

pub use error::{Error, Result};
pub use spectrum::SpectrumProfile;
