//! f-DP accounting for discrete and compressed local randomizers.

// `!(x > y)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod bench;
pub mod error;
pub mod mechanisms;
pub mod numeric;
pub mod randomizers;
pub(crate) mod serde_float;
pub mod tradeoff;

pub use error::{Error, Result};
pub use mechanisms::{CltBound, MechanismParams};
pub use randomizers::{EncodedVector, RandomSeed};
pub use tradeoff::{
    curve_to_delta, curve_to_epsilon, curve_to_gdp, gdp_curve, gdp_tradeoff, np_tradeoff, pure_dp_to_gdp, DiscreteDist,
    PrivacyProfile, TradeoffCurve, Vertex,
};
