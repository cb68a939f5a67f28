//! Linear-chain conditional random field.

mod inference;
mod io;
mod objective;
pub mod owlqn;
mod weights;

pub use inference::{
    forward_backward, log_partition, posterior_marginals, score_sequence, state_scores, viterbi_decode, Lattice,
    Marginals, TIE_TOLERANCE,
};
pub use io::{load_model, save_model, write_model, MAGIC, VERSION};
pub use objective::objective_and_gradient;
pub use owlqn::{OptimizeOutcome, OptimizerConfig, Termination};
pub use weights::Weights;

use indexmap::IndexSet;

use crate::corpus::{Corpus, Utterance};
use crate::error::{Error, Result};
use crate::features::{build_feature_index, sequence_features, FeatureConfig, FeatureIndex, FeatureSet};

/// Feature ids per position, plus gold label ids when training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceInstance {
    pub features: Vec<Vec<u32>>,
    pub gold: Option<Vec<usize>>,
}

impl SequenceInstance {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub c1: f64,
    pub c2: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c1: 0.05,
            c2: 0.1,
            max_iterations: 200,
            tolerance: 1e-5,
            features: FeatureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 >= 0.0 && self.c1.is_finite()) || !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "c1 and c2 must be finite and non-negative (c1={}, c2={})",
                self.c1, self.c2
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        self.features.validate()
    }
}

/// A trained tagger. Immutable; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<String>,
    feature_index: FeatureIndex,
    weights: Weights,
    config: FeatureConfig,
}

impl CrfModel {
    pub fn new(
        labels: Vec<String>,
        feature_index: FeatureIndex,
        weights: Weights,
        config: FeatureConfig,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one label".into()));
        }
        if labels.iter().collect::<IndexSet<_>>().len() != labels.len() {
            return Err(Error::InvalidArgument("duplicate labels".into()));
        }
        if weights.num_labels() != labels.len() || weights.num_features() != feature_index.len() {
            return Err(Error::InvalidArgument(
                "weight dimensions do not match labels/features".into(),
            ));
        }
        if !weights.all_finite() {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        Ok(CrfModel {
            labels,
            feature_index,
            weights,
            config,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn feature_index(&self) -> &FeatureIndex {
        &self.feature_index
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Number of state weights that are exactly zero.
    pub fn zero_state_weights(&self) -> usize {
        self.weights.state().iter().filter(|&&w| w == 0.0).count()
    }

    /// Feature ids for every position; features unknown to the model are dropped.
    pub fn instance(&self, utterance: &Utterance) -> Result<SequenceInstance> {
        let sets = sequence_features(utterance, &self.config)?;
        Ok(SequenceInstance {
            features: sets.iter().map(|s| self.feature_index.lookup(s)).collect(),
            gold: None,
        })
    }

    pub fn score_sequence(&self, instance: &SequenceInstance, labels: &[usize]) -> Result<f64> {
        score_sequence(&self.weights, instance, labels)
    }

    pub fn log_partition(&self, instance: &SequenceInstance) -> f64 {
        log_partition(&self.weights, instance)
    }

    pub fn posterior_marginals(&self, instance: &SequenceInstance) -> Marginals {
        posterior_marginals(&self.weights, instance)
    }

    pub fn viterbi_decode(&self, instance: &SequenceInstance) -> (Vec<usize>, f64) {
        viterbi_decode(&self.weights, instance)
    }

    /// Predicted labels for one utterance.
    pub fn tag(&self, utterance: &Utterance) -> Result<Vec<&str>> {
        if utterance.is_empty() {
            return Err(Error::InvalidArgument("cannot tag an empty utterance".into()));
        }
        let inst = self.instance(utterance)?;
        let (path, _) = self.viterbi_decode(&inst);
        Ok(path.into_iter().map(|y| self.labels[y].as_str()).collect())
    }

    /// Copy of `corpus` with every POS label replaced by the model's prediction.
    pub fn tag_corpus(&self, corpus: &Corpus) -> Result<Corpus> {
        use rayon::prelude::*;
        let tagged: Vec<Utterance> = corpus
            .utterances
            .par_iter()
            .map(|u| {
                let labels = self.tag(u)?;
                let mut out = u.clone();
                for (tok, label) in out.tokens.iter_mut().zip(labels) {
                    tok.pos = Some(label.to_string());
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(Corpus {
            utterances: tagged,
            meta: corpus.meta.clone(),
        })
    }
}

/// Everything extracted from a training corpus before optimization.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub labels: Vec<String>,
    pub feature_index: FeatureIndex,
    pub instances: Vec<SequenceInstance>,
}

pub fn prepare_training_data(corpus: &Corpus, config: &FeatureConfig) -> Result<TrainingData> {
    if corpus.is_empty() {
        return Err(Error::NoUtterances);
    }
    let mut labels: IndexSet<String> = IndexSet::new();
    let mut golds = Vec::with_capacity(corpus.len());
    for (u, utt) in corpus.utterances.iter().enumerate() {
        if utt.is_empty() {
            return Err(Error::InvalidArgument(format!("utterance {u} is empty")));
        }
        let gold = utt
            .tokens
            .iter()
            .enumerate()
            .map(|(p, tok)| {
                let label = tok.pos.as_ref().ok_or(Error::MissingLabel {
                    utterance: u,
                    position: p,
                })?;
                Ok(labels.insert_full(label.clone()).0)
            })
            .collect::<Result<Vec<_>>>()?;
        golds.push(gold);
    }

    let sets: Vec<Vec<FeatureSet>> = corpus
        .utterances
        .iter()
        .map(|u| sequence_features(u, config))
        .collect::<Result<_>>()?;
    let feature_index = build_feature_index(sets.iter().flatten(), config.min_count)?;
    let instances = sets
        .iter()
        .zip(golds)
        .map(|(seq, gold)| SequenceInstance {
            features: seq.iter().map(|s| feature_index.lookup(s)).collect(),
            gold: Some(gold),
        })
        .collect();
    Ok(TrainingData {
        labels: labels.into_iter().collect(),
        feature_index,
        instances,
    })
}

/// Result of [`train_with_report`]: the model plus optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: CrfModel,
    pub objective: f64,
    pub iterations: usize,
    pub objective_history: Vec<f64>,
    pub termination: Termination,
}

pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<CrfModel> {
    train_with_report(corpus, config).map(|r| r.model)
}

pub fn train_with_report(corpus: &Corpus, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let data = prepare_training_data(corpus, &config.features)?;
    let f = data.feature_index.len();
    let l = data.labels.len();
    let opt = OptimizerConfig {
        c1: config.c1,
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        ..OptimizerConfig::default()
    };
    let outcome = owlqn::minimize(
        |x| {
            let w = Weights::from_values(f, l, x.to_vec())?;
            let (v, g) = objective_and_gradient(&w, &data.instances, config.c2)?;
            Ok((v, g.into_values()))
        },
        vec![0.0; Weights::param_count(f, l)],
        &opt,
    )?;
    let weights = Weights::from_values(f, l, outcome.x)?;
    let model = CrfModel::new(data.labels, data.feature_index, weights, config.features.clone())?;
    Ok(TrainReport {
        model,
        objective: outcome.objective,
        iterations: outcome.iterations,
        objective_history: outcome.history,
        termination: outcome.termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LanguageTag, Token};

    fn corpus(rows: &[&[(&str, &str)]]) -> Corpus {
        Corpus::new(
            rows.iter()
                .map(|r| {
                    Utterance::new(
                        r.iter()
                            .map(|&(f, p)| Token::new(f, LanguageTag::Hi, Some(p)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn single_label_corpus_decodes_that_label() {
        let c = corpus(&[&[("a", "X"), ("b", "X")], &[("c", "X")]]);
        let m = train(&c, &TrainConfig::default()).unwrap();
        assert_eq!(m.labels(), ["X"]);
        for u in &c.utterances {
            assert!(m.tag(u).unwrap().iter().all(|&l| l == "X"));
        }
    }

    #[test]
    fn missing_pos_is_an_error() {
        let mut c = corpus(&[&[("a", "X"), ("b", "Y")]]);
        c.utterances[0].tokens[1].pos = None;
        assert!(matches!(
            train(&c, &TrainConfig::default()),
            Err(Error::MissingLabel {
                utterance: 0,
                position: 1
            })
        ));
    }

    #[test]
    fn too_high_min_count_leaves_no_features() {
        let c = corpus(&[&[("a", "X")]]);
        let mut cfg = TrainConfig::default();
        cfg.features.min_count = 5;
        assert!(matches!(train(&c, &cfg), Err(Error::NoFeatures { .. })));
    }

    #[test]
    fn negative_regularization_is_rejected() {
        let c = corpus(&[&[("a", "X")]]);
        let cfg = TrainConfig {
            c2: -1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&c, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn learns_a_tiny_lexicon() {
        let c = corpus(&[
            &[("main", "PRON"), ("ja", "VERB"), ("raha", "AUX")],
            &[("tum", "PRON"), ("ja", "VERB"), ("raha", "AUX")],
            &[("main", "PRON"), ("kha", "VERB")],
        ]);
        let report = train_with_report(
            &c,
            &TrainConfig {
                c1: 0.0,
                c2: 0.01,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(report.objective_history.windows(2).all(|w| w[1] <= w[0]));
        for u in &c.utterances {
            let gold: Vec<&str> = u.tokens.iter().map(|t| t.pos.as_deref().unwrap()).collect();
            assert_eq!(report.model.tag(u).unwrap(), gold);
        }
    }
}
