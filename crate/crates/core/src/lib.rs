//! Keyphrase extraction as BIO sequence labeling with a BiLSTM-CRF, trained
//! either on labeled documents alone or jointly with unlabeled documents
//! through self-distillation.

pub mod checkpoint;
pub mod corpus;
pub mod crf;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod jlsd;
pub mod math;
pub mod model;
pub mod params;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};
pub use model::Model;
pub use params::ModelParams;
