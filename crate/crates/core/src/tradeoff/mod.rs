//! Tradeoff functions: representation, exact construction and conversions.

pub mod convert;
pub mod curve;
pub mod oracle;

pub use convert::{
    curve_to_delta, curve_to_epsilon, curve_to_gdp, gdp_curve, gdp_tradeoff, pure_dp_to_gdp, EpsDelta, PrivacyProfile,
    DEFAULT_GDP_GRID,
};
pub use curve::{TradeoffCurve, Vertex};
pub use oracle::{np_tradeoff, DiscreteDist};
