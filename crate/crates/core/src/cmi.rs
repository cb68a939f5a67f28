//! Code-Mixing Index per utterance and the four corpus-level statistics.
//!
//! For an utterance of `N` tokens, `u` of which carry a language-independent
//! tag, and per-language counts `w_i` over {en, hi, bn, te}:
//!
//! ```text
//! CMI = 100 * (1 - max_i w_i / (N - u))   if N > u
//!     = 0                                 otherwise
//! ```
//!
//! By default every tag outside {en, hi, bn, te} counts towards `u`
//! ([`IndependentTags::AllNonLanguage`]). [`IndependentTags::UnivOnly`] counts
//! only `univ`; the other non-language tags then enlarge `N - u` without
//! contributing to any `w_i`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Corpus, LanguageTag, Utterance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndependentTags {
    #[default]
    AllNonLanguage,
    UnivOnly,
}

impl IndependentTags {
    fn contains(self, tag: LanguageTag) -> bool {
        match self {
            IndependentTags::AllNonLanguage => !tag.is_language_bearing(),
            IndependentTags::UnivOnly => tag == LanguageTag::Univ,
        }
    }
}

/// A CMI value in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct CmiValue(f64);

impl CmiValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_mixed(self) -> bool {
        self.0 > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmiReport {
    pub cmi_all: f64,
    pub cmi_mixed: f64,
    pub mixed_pct: f64,
    pub num_utt: usize,
    pub per_utterance: Vec<CmiValue>,
}

pub fn utterance_cmi(utterance: &Utterance) -> CmiValue {
    utterance_cmi_with(utterance, IndependentTags::default())
}

pub fn utterance_cmi_with(utterance: &Utterance, independent: IndependentTags) -> CmiValue {
    cmi_from_tags(utterance.tokens.iter().map(|t| t.lang), independent)
}

/// CMI of a bag of language tags. Order does not matter.
pub fn cmi_from_tags(tags: impl IntoIterator<Item = LanguageTag>, independent: IndependentTags) -> CmiValue {
    // en, hi, bn, te
    let mut counts = [0usize; 4];
    let mut total = 0usize;
    let mut indep = 0usize;
    for tag in tags {
        total += 1;
        if independent.contains(tag) {
            indep += 1;
            continue;
        }
        match tag {
            LanguageTag::En => counts[0] += 1,
            LanguageTag::Hi => counts[1] += 1,
            LanguageTag::Bn => counts[2] += 1,
            LanguageTag::Te => counts[3] += 1,
            _ => {}
        }
    }
    if total <= indep {
        return CmiValue(0.0);
    }
    let dominant = counts.into_iter().max().unwrap_or(0);
    let value = 100.0 * (1.0 - dominant as f64 / (total - indep) as f64);
    CmiValue(value.clamp(0.0, 100.0))
}

pub fn corpus_cmi_report(corpus: &Corpus) -> Result<CmiReport> {
    corpus_cmi_report_with(corpus, IndependentTags::default())
}

pub fn corpus_cmi_report_with(corpus: &Corpus, independent: IndependentTags) -> Result<CmiReport> {
    if corpus.is_empty() {
        return Err(Error::NoUtterances);
    }
    let per_utterance: Vec<CmiValue> = corpus
        .utterances
        .iter()
        .map(|u| utterance_cmi_with(u, independent))
        .collect();
    Ok(report_from_values(per_utterance))
}

pub(crate) fn report_from_values(per_utterance: Vec<CmiValue>) -> CmiReport {
    let num_utt = per_utterance.len();
    let sum: f64 = per_utterance.iter().map(|v| v.0).sum();
    let mixed = per_utterance.iter().filter(|v| v.is_mixed()).count();
    let cmi_all = sum / num_utt as f64;
    let cmi_mixed = if mixed == 0 { 0.0 } else { sum / mixed as f64 };
    let mixed_pct = 100.0 * mixed as f64 / num_utt as f64;
    CmiReport {
        cmi_all,
        cmi_mixed,
        mixed_pct,
        num_utt,
        per_utterance,
    }
}

impl CmiReport {
    /// `metric<TAB>value` lines, reals with two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        let _ = writeln!(out, "cmi_all\t{:.2}", self.cmi_all);
        let _ = writeln!(out, "cmi_mixed\t{:.2}", self.cmi_mixed);
        let _ = writeln!(out, "mixed_pct\t{:.2}", self.mixed_pct);
        let _ = writeln!(out, "num_utt\t{}", self.num_utt);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
