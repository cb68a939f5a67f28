//! Scoring predictions against gold labels, result matrices, and a
//! deterministic synthetic corpus generator.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Corpus, LanguageTag, Token, Utterance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Sorted by label.
    pub per_tag: BTreeMap<String, TagScore>,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub token_count: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Neumaier summation, so the result does not depend on tag order in practice.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per-tag precision/recall/F1 and their gold-support-weighted average.
pub fn evaluate(gold: &Corpus, pred: &Corpus) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::Misaligned {
            utterance: gold.len().min(pred.len()),
            position: 0,
            message: format!("gold has {} utterances, prediction has {}", gold.len(), pred.len()),
        });
    }
    #[derive(Default)]
    struct Counts {
        tp: usize,
        fp: usize,
        fn_: usize,
        support: usize,
    }
    let mut counts: BTreeMap<&str, Counts> = BTreeMap::new();
    let mut correct = 0usize;
    let mut total = 0usize;

    for (u, (g, p)) in gold.utterances.iter().zip(&pred.utterances).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Misaligned {
                utterance: u,
                position: g.len().min(p.len()),
                message: format!("gold has {} tokens, prediction has {}", g.len(), p.len()),
            });
        }
        for (i, (gt, pt)) in g.tokens.iter().zip(&p.tokens).enumerate() {
            if gt.form != pt.form {
                return Err(Error::Misaligned {
                    utterance: u,
                    position: i,
                    message: format!("form {:?} vs {:?}", gt.form, pt.form),
                });
            }
            let missing = |what: &str| Error::Misaligned {
                utterance: u,
                position: i,
                message: format!("{what} token has no POS label"),
            };
            let gl = gt.pos.as_deref().ok_or_else(|| missing("gold"))?;
            let pl = pt.pos.as_deref().ok_or_else(|| missing("predicted"))?;
            total += 1;
            counts.entry(gl).or_default().support += 1;
            if gl == pl {
                correct += 1;
                counts.entry(gl).or_default().tp += 1;
            } else {
                counts.entry(gl).or_default().fn_ += 1;
                counts.entry(pl).or_default().fp += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoUtterances);
    }

    let per_tag: BTreeMap<String, TagScore> = counts
        .into_iter()
        .map(|(label, c)| {
            let precision = ratio(c.tp, c.tp + c.fp);
            let recall = ratio(c.tp, c.tp + c.fn_);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (
                label.to_string(),
                TagScore {
                    precision,
                    recall,
                    f1,
                    support: c.support,
                },
            )
        })
        .collect();
    let weighted_f1 = compensated_sum(per_tag.values().map(|s| s.support as f64 / total as f64 * s.f1));
    Ok(EvalReport {
        per_tag,
        weighted_f1,
        accuracy: ratio(correct, total),
        token_count: total,
    })
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("tag\tprecision\trecall\tf1\tsupport\n");
        for (tag, s) in &self.per_tag {
            let _ = writeln!(
                out,
                "{tag}\t{:.4}\t{:.4}\t{:.4}\t{}",
                s.precision, s.recall, s.f1, s.support
            );
        }
        let _ = writeln!(out, "weighted_f1\t{:.4}", self.weighted_f1);
        let _ = writeln!(out, "accuracy\t{:.4}", self.accuracy);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixAxis {
    Platform,
    Granularity,
}

impl MatrixAxis {
    fn canonical_order(self) -> &'static [&'static str] {
        match self {
            MatrixAxis::Platform => &["whatsapp", "twitter", "facebook"],
            MatrixAxis::Granularity => &["fine", "coarse"],
        }
    }
}

impl FromStr for MatrixAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "platform" => Ok(MatrixAxis::Platform),
            "granularity" => Ok(MatrixAxis::Granularity),
            other => Err(Error::InvalidArgument(format!("unknown matrix axis {other:?}"))),
        }
    }
}

/// Weighted F1 × 100 by language pair (rows) and platform or granularity (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][col]`, rounded to two decimals; `None` where no report exists.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Mean of the populated cells, computed before rounding.
    pub overall: f64,
}

fn ordered_keys<'a>(keys: impl Iterator<Item = &'a str>, canonical: &[&str]) -> Vec<String> {
    let mut seen: Vec<&str> = Vec::new();
    for k in keys {
        if !seen.contains(&k) {
            seen.push(k);
        }
    }
    let rank = |k: &str| {
        canonical
            .iter()
            .position(|c| c.eq_ignore_ascii_case(k))
            .unwrap_or(canonical.len())
    };
    seen.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
    seen.into_iter().map(str::to_string).collect()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn render_matrix(reports: &IndexMap<(String, String), EvalReport>, axis: MatrixAxis) -> Result<ResultMatrix> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to tabulate".into()));
    }
    let rows = ordered_keys(reports.keys().map(|(r, _)| r.as_str()), &["te", "hi", "bn"]);
    let columns = ordered_keys(reports.keys().map(|(_, c)| c.as_str()), axis.canonical_order());
    let mut cells = vec![vec![None; columns.len()]; rows.len()];
    let mut sum = 0.0;
    for ((row, col), report) in reports {
        let r = rows.iter().position(|x| x == row).expect("row collected above");
        let c = columns.iter().position(|x| x == col).expect("column collected above");
        let pct = 100.0 * report.weighted_f1;
        sum += pct;
        cells[r][c] = Some(round2(pct));
    }
    Ok(ResultMatrix {
        rows,
        columns,
        cells,
        overall: sum / reports.len() as f64,
    })
}

impl fmt::Display for ResultMatrix {
    /// Aligned plain-text table; blank cells print as `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header = "Language (English +)";
        let first = self
            .rows
            .iter()
            .map(String::len)
            .chain([header.len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = self.columns.iter().map(|c| c.len().max(6)).collect();
        write!(f, "{header:<first$}")?;
        for (c, w) in self.columns.iter().zip(&widths) {
            write!(f, "  {c:>w$}")?;
        }
        writeln!(f)?;
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            write!(f, "{row:<first$}")?;
            for (cell, w) in cells.iter().zip(&widths) {
                match cell {
                    Some(v) => write!(f, "  {v:>w$.2}")?,
                    None => write!(f, "  {:>w$}", "-")?,
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "overall {:.2}", self.overall)
    }
}

/// Embedded-with-English language pair of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LangPair {
    Hi,
    Bn,
    Te,
}

impl LangPair {
    pub fn tag(self) -> LanguageTag {
        match self {
            LangPair::Hi => LanguageTag::Hi,
            LangPair::Bn => LanguageTag::Bn,
            LangPair::Te => LanguageTag::Te,
        }
    }
}

impl FromStr for LangPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hi" => Ok(LangPair::Hi),
            "bn" => Ok(LangPair::Bn),
            "te" => Ok(LangPair::Te),
            other => Err(Error::InvalidArgument(format!(
                "unknown language pair {other:?} (expected hi, bn or te)"
            ))),
        }
    }
}

// Lexical classes and their labels. Every word belongs to exactly one class.
const CLASSES: [&str; 6] = ["NOUN", "VERB", "ADJ", "PRON", "ADP", "PRT"];

const EN_WORDS: [&[&str]; 6] = [
    &[
        "movie", "phone", "friend", "time", "match", "office", "party", "song", "traffic", "exam", "college", "news",
    ],
    &[
        "watch", "call", "go", "come", "like", "play", "send", "check", "told", "love",
    ],
    &["good", "awesome", "bad", "late", "happy", "new", "boring", "cool"],
    &["i", "you", "we", "he", "she", "they"],
    &["in", "on", "at", "with", "for", "from"],
    &["not", "just", "only", "also", "to"],
];

const HI_WORDS: [&[&str]; 6] = [
    &[
        "ghar", "khana", "dost", "paani", "kaam", "baat", "din", "log", "duniya", "gaana", "shaadi", "raat",
    ],
    &[
        "jaana", "khao", "dekho", "bolo", "karo", "aaya", "gaya", "suno", "chalo", "likho",
    ],
    &["accha", "bura", "bada", "chhota", "sundar", "naya", "purana", "mast"],
    &["main", "tum", "hum", "woh", "aap", "yeh"],
    &["mein", "par", "se", "ko", "tak", "ke"],
    &["nahi", "bhi", "hi", "toh", "na"],
];

const BN_WORDS: [&[&str]; 6] = [
    &[
        "bari", "khabar", "bondhu", "jol", "kaj", "kotha", "din", "lok", "gaan", "biye", "raat", "boi",
    ],
    &[
        "jabo", "khabo", "dekho", "bolo", "koro", "elo", "gelo", "shono", "cholo", "lekho",
    ],
    &[
        "bhalo", "kharap", "boro", "chhoto", "sundor", "notun", "purono", "darun",
    ],
    &["ami", "tumi", "amra", "se", "apni", "eta"],
    &["theke", "porjonto", "diye", "jonno", "kache", "modhye"],
    &["na", "o", "to", "i", "ki"],
];

const TE_WORDS: [&[&str]; 6] = [
    &[
        "illu",
        "bhojanam",
        "snehitudu",
        "neellu",
        "pani",
        "maata",
        "roju",
        "janam",
        "paata",
        "pelli",
        "ratri",
        "pustakam",
    ],
    &[
        "vellu", "tinu", "chudu", "cheppu", "cheyyi", "vachadu", "velladu", "vinu", "raa", "raayi",
    ],
    &[
        "manchi",
        "chedu",
        "pedda",
        "chinna",
        "andamaina",
        "kotha",
        "paata_",
        "super",
    ],
    &["nenu", "nuvvu", "memu", "atanu", "meeru", "idi"],
    &["lo", "meeda", "nunchi", "ki", "varaku", "tho"],
    &["kaadu", "kuda", "ey", "ga", "ante"],
];

const PUNCT: &[&str] = &[".", "!", "?", ",", "!!", "..."];

fn lexicon(lang: LanguageTag) -> &'static [&'static [&'static str]; 6] {
    match lang {
        LanguageTag::Hi => &HI_WORDS,
        LanguageTag::Bn => &BN_WORDS,
        LanguageTag::Te => &TE_WORDS,
        _ => &EN_WORDS,
    }
}

// Simple clause shapes over class indices (see CLASSES).
const SHAPES: &[&[usize]] = &[
    &[3, 0, 4, 1],
    &[3, 2, 0, 1],
    &[0, 4, 0, 1, 5],
    &[3, 5, 1],
    &[2, 0, 1],
    &[3, 0, 1, 5, 2],
    &[0, 1, 4, 3],
];

/// Deterministic corpus whose POS labels are a fixed function of each word's
/// lexical class. Each language-bearing token is English with probability
/// `mixing`, otherwise in the matrix language of `pair`.
pub fn generate_synthetic_corpus(seed: u64, num_utterances: usize, pair: LangPair, mixing: f64) -> Result<Corpus> {
    if num_utterances == 0 {
        return Err(Error::InvalidArgument("num_utterances must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&mixing) {
        return Err(Error::InvalidArgument(format!(
            "mixing must be in [0, 1], got {mixing}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = pair.tag();
    let mut utterances = Vec::with_capacity(num_utterances);
    for id in 0..num_utterances {
        let clauses = rng.gen_range(1..=2);
        let mut tokens = Vec::new();
        for _ in 0..clauses {
            let shape = SHAPES[rng.gen_range(0..SHAPES.len())];
            for &class in shape {
                let lang = if rng.gen_bool(mixing) { LanguageTag::En } else { matrix };
                let words = lexicon(lang)[class];
                let form = words[rng.gen_range(0..words.len())];
                let form = if rng.gen_bool(0.1) {
                    capitalize(form)
                } else {
                    form.to_string()
                };
                tokens.push(Token::new(form, lang, Some(CLASSES[class])));
            }
            if rng.gen_bool(0.6) {
                let p = PUNCT[rng.gen_range(0..PUNCT.len())];
                tokens.push(Token::new(p, LanguageTag::Univ, Some("PUNCT")));
            }
        }
        if rng.gen_bool(0.15) {
            let n: u32 = rng.gen_range(1..500);
            tokens.push(Token::new(n.to_string(), LanguageTag::Univ, Some("NUM")));
        }
        if rng.gen_bool(0.1) {
            tokens.push(Token::new(":)", LanguageTag::Univ, Some("X")));
        }
        let mut utt = Utterance::new(tokens);
        utt.meta.insert("id".into(), id.to_string());
        utterances.push(utt);
    }
    let mut corpus = Corpus::new(utterances);
    corpus.meta.insert("langpair".into(), format!("{}-en", matrix));
    corpus.meta.insert("seed".into(), seed.to_string());
    Ok(corpus)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
