//! Exact and asymptotic computations for Bessel-like reflecting random walks.
//!
//! A Bessel-like walk lives on `{0, 1, 2, ...}`, steps up from 0, and at
//! height `x >= 1` steps up with probability `(1/2)(1 - delta/2x + R_x/2)`.
//! The crate provides
//!
//! * [`spec`]: walk definitions and validation,
//! * [`scale`]: the scale function `M`, `lambda`, `L` and the constant `K0`,
//! * [`exact`]: dynamic-programming laws of hitting times and positions, with
//!   audits of the identities and inequalities they satisfy,
//! * [`asymptotics`]: closed-form approximations for large times,
//! * [`montecarlo`]: path samplers and coupling constructions.

// `!(x > y)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bessel;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod scale;
pub mod spec;
pub mod special;

pub use asymptotics::{AsymptoticEval, FormulaId};
pub use error::{Error, Result};
pub use exact::{FirstPassageTable, OccupancyGrid};
pub use montecarlo::coupling::CouplingTrace;
pub use scale::{K0Estimate, ScaleTable};
pub use spec::{Perturbation, Regime, WalkSpec};
