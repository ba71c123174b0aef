//! HTTP/JSON annotation service: a human labels the batches an
//! [`alloom_core::engine::ActiveLearner`] asks for.
//!
//! | Route | |
//! |---|---|
//! | `GET /health` | liveness |
//! | `POST /sessions` | create a session, returns the first batch |
//! | `GET /sessions/{id}` | session summary |
//! | `GET /sessions/{id}/batch` | outstanding batch (202 while training) |
//! | `POST /sessions/{id}/labels` | submit some or all labels of the batch |
//! | `GET /sessions/{id}/progress` | per-iteration trace |
//! | `GET /sessions/{id}/export` | labelled instances as a feature file |

pub mod api;
pub mod app;
pub mod dataset;
pub mod error;
pub mod journal;
pub mod session;

pub const API_VERSION: u32 = 1;

pub use app::{router, AppState};
pub use error::ApiError;
