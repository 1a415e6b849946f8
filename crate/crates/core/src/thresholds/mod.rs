//! Threshold functions, reservation prices and their trade-off parameters.

mod lambert;
mod one_way;
mod piecewise;
mod reservation;
mod tradeoff;

pub use lambert::{alpha_star, lambert_w};
pub use one_way::{
    boundary_breakpoints, build_threshold_one_way, intermediate_breakpoints, one_way_design, pure_threshold_one_way,
    BoundaryBreakpoints, IntermediateBreakpoints, OneWayDesign,
};
pub use piecewise::{PiecewiseThreshold, SegmentShape, ThresholdSegment};
pub(crate) use piecewise::slack;
pub use reservation::{naive_reservation_price, pure_reservation_max_search, reservation_price, NaiveMode};
pub use tradeoff::{one_way_consistency, tradeoff_max_search, tradeoff_one_way, TradeoffParams};
