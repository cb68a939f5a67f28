//! Part-of-speech tagging for code-mixed social-media text.
//!
//! The crate covers the whole pipeline: reading annotated corpora
//! ([`corpus`]), Code-Mixing Index statistics ([`cmi`]), token feature
//! templates ([`features`]), a linear-chain CRF with L1/L2-regularized
//! training ([`crf`]), cross-validated hyperparameter search ([`tuning`]) and
//! scoring ([`eval`]). The `cmxtag` binary wraps it all behind subcommands
//! ([`cli`]).

pub mod cli;
pub mod cmi;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod features;
pub mod tuning;

pub use cmi::{corpus_cmi_report, utterance_cmi, CmiReport, CmiValue, IndependentTags};
pub use corpus::{parse_corpus, split_corpus, write_corpus, Corpus, LanguageTag, TagsetMode, Token, Utterance};
pub use crf::{load_model, save_model, train, CrfModel, SequenceInstance, TrainConfig, Weights};
pub use error::{Error, Result};
pub use eval::{evaluate, generate_synthetic_corpus, render_matrix, EvalReport, LangPair, ResultMatrix};
pub use features::{classify_pattern, token_features, FeatureConfig, FeatureIndex, PatternFlags};
pub use tuning::{grid_search, GridResult, GridSpec};
