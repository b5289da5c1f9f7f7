//! Teaching classifiers to predict a decision together with its explanation
//! by training on the Cartesian product of labels and explanations.
//!
//! Datasets carry `(X, Y, E)` triples. The [`codec`] fuses each `(Y, E)` pair
//! into one composite class, any [`learners`] classifier is trained on the
//! composite classes, and predictions are decoded back into a label and an
//! explanation. [`tictactoe`] and [`loan`] generate the two labeled
//! datasets; [`harness`] runs the baseline and explanation-augmented
//! experiments.

pub mod codec;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod learners;
pub mod loan;
pub mod model;
pub mod tictactoe;

pub use codec::{fit_codec, CodecTable, CompositeId, LabelIndex};
pub use dataset::{Dataset, ExplanationId, LabelId, LabeledInstance, Task};
pub use error::{Result, TedError};
