#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod hierarchy;
pub mod jet;
pub mod laurent;
pub mod linalg;
pub mod loopsim;
pub mod matrix;
pub mod metric;
pub mod model;
pub mod report;
pub mod series;
pub mod smatrix;
pub mod testing;
pub mod topo;

pub use error::{Error, Result};
pub use laurent::ULaurent;
pub use matrix::SeriesMatrix;
pub use model::FrobeniusModel;
pub use series::{Cap, Rational, TruncSeries};
