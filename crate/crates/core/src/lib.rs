//! Pool-based active learning for time-series classification.
//!
//! Raw multichannel series are cut into overlapping windows, summarised into
//! statistical feature vectors, and then fed to an iterative query loop that
//! picks which pool instances an oracle should label next. Query batches can
//! be rebalanced towards under-represented classes with the inverted class
//! frequency rule in [`balancing`].

pub mod balancing;
pub mod engine;
pub mod error;
pub mod featurize;
pub mod learners;
pub mod seeds;
pub mod split;
pub mod strategies;
pub mod types;

pub use error::{Error, Result};
pub use types::{Channel, FeatureDataset, LabelSpace, Provenance, RawSeries};
