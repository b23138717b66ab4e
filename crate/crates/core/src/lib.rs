//! Map word embeddings from an initial (unsupervised) space into the space
//! learned by a supervised system, so that words never seen during
//! supervised training still receive task-specific vectors.
//!
//! The crate is organised around the workflow:
//!
//! 1. [`embedding`]: text embedding tables and corpus word counts.
//! 2. [`mapper`]: the single-hidden-layer hardtanh mapper, its weighted
//!    absolute/squared loss and the elastic-net objective with exact gradients.
//! 3. [`lbfgs`]: batch L-BFGS with a strong Wolfe line search.
//! 4. [`pipeline`]: frequency thresholds, pair selection, training and
//!    merging mapped vectors into a task-trained table.
//! 5. [`knn`]: the nearest-neighbour shift baseline.
//! 6. [`tuner`]: grid search over loss weight and regularisation strengths.
//! 7. [`treebank`]: CoNLL-X reading, attachment scores, unseen-word rates
//!    and the paired bootstrap test.
//! 8. [`synth`]: synthetic embedding pairs from known transforms.
//! 9. [`cli`]: the `embmap` command line.

pub mod cli;
pub mod embedding;
mod error;
pub mod knn;
pub mod lbfgs;
pub mod mapper;
pub mod pipeline;
pub mod synth;
pub mod treebank;
pub mod tuner;

pub use error::{Error, Result};
