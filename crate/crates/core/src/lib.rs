// SPDX-License-Identifier: Apache-2.0

//! Linearized quantum-noise model of a driven Kerr cavity with a movable mirror.
//!
//! Steady states come from [`steady`], fluctuation dynamics and normal modes
//! from [`dynamics`], closed-form spectra and the effective temperature from
//! [`spectrum`], and independent checks from [`verification`].

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod poly;
pub mod presets;
pub mod quad;
pub mod spectrum;
pub mod steady;
pub mod verification;

pub use error::{Error, ErrorKind, Result};
pub use model::{make_params, DerivedQuantities, RawConfig, SystemParams, UnitMode};
pub use steady::{solve_branches, SteadyState};
