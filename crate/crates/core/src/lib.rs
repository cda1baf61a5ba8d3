//! Battery discharge-interval modeling and per-operator power attribution.
//!
//! The pipeline: a deterministic device/battery/workload simulator (or an
//! ingested trace file) produces poll + state-of-charge traces; segmentation
//! turns them into execution segments, discharge intervals, and training
//! samples; preprocessing filters measurement noise; regression (ordinary
//! least squares and epsilon-SVR under nested cross-validation) predicts
//! discharge-interval durations; attribution inverts the linear model into
//! per-operator power estimates; and the inference path maps short-horizon
//! observations onto interval-scale predictions for live use.

pub mod attribution;
pub mod inference;
pub mod preprocess;
pub mod regress;
pub mod segment;
pub mod sim;
pub mod trace;
