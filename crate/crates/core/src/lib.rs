#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

//! Activity recognition from binary sensor traces.
//!
//! The crate implements a supervised development loop over uniformized
//! smart-home datasets:
//!
//! 1. [`ingest`] raw interval tables into the uniform [`model::Dataset`] format
//! 2. [`cleaning`] rules over the event stream
//! 3. [`segmentation`] into windows centred on sensor transitions
//! 4. [`representation`] as binary sensor-state vectors
//! 5. [`classifier`] training (CART decision tree)
//! 6. [`evaluation`] with preceding-days leave-one-day-out cross-validation
//!
//! [`experiment`] ties the stages together and persists run records.

pub mod model;
pub mod ingest;
pub mod cleaning;
pub mod segmentation;
pub mod representation;
pub mod classifier;
pub mod evaluation;
pub mod experiment;
