//! Streaming uncertainty quantification for node regression on graphs.
//!
//! An ensemble of random-feature Gaussian processes is built over a k-NN
//! graph; each member keeps a Gaussian posterior over its feature weights
//! that is updated in O(D²) per revealed label. The fused, moment-matched
//! Gaussian predictive is turned into prediction intervals by thresholding
//! the negative predictive log-likelihood, with the threshold adapted
//! online so long-run coverage tracks the target level.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration
//! and the experiment runner live in the `streamgp` harness crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod conformal;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod graph;
pub mod linalg;
pub mod posterior;
pub mod rf;

pub use conformal::{
    bcs_interval, init_threshold, invert_to_interval, npll_score, ConformalState, CoverageReport,
    CoverageStats, CpMode, PredictionSet,
};
pub use data::{Dataset, Scaler, SplitSpec};
pub use ensemble::{fuse_moments, EnsembleState, FusedPrediction, Member, WEIGHT_FLOOR};
pub use error::{Error, Result};
pub use exact::ExactGraphGP;
pub use graph::{Graph, Propagation};
pub use linalg::Matrix;
pub use posterior::{log_predictive, Innovation, Posterior};
pub use rf::{exact_kernel, FrequencyDraw, KernelFamily, KernelSpec};
