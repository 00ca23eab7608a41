//! Core numerics for a conformal-welding laboratory on critical (γ=2) Liouville
//! quantum gravity surfaces: one-dimensional process samplers (Brownian, Bessel-3,
//! line-conditioned diffusions), multi-scale log-correlated boundary fields,
//! boundary LQG measures with their cumulative/quantile machinery, quantum wedge
//! assembly, a discrete Loewner engine (forward/reverse, driving extraction), and
//! slit-map conformal welding.
//!
//! The crate is `no_std` + `alloc`: everything here is a pure function of its
//! inputs and an explicit [`rng::RngStream`], so replicas parallelise trivially
//! in a host that provides threads. IO, configuration and experiment
//! orchestration live in the companion `critweld-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod field;
pub mod loewner;
pub mod measures;
pub mod numerics;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod wedge;
pub mod welding;

pub use error::{CoreError, Result};
pub use rng::RngStream;
