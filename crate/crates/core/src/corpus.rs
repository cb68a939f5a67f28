//! Annotated-token data model and the tab-separated corpus format.
//!
//! A corpus file is UTF-8 text with LF line endings. Utterances are blocks of
//! `FORM<TAB>LANG[<TAB>POS]` lines separated by blank lines. Lines of the form
//! `# key = value` directly above a block become that utterance's metadata;
//! `## key = value` lines before the first utterance hold corpus metadata.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Key/value metadata attached to an utterance or a corpus.
pub type Meta = IndexMap<String, String>;

/// The 12 labels of the universal (coarse-grained) POS tagset.
pub const COARSE_TAGSET: [&str; 12] = [
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LanguageTag {
    En,
    Hi,
    Bn,
    Te,
    Univ,
    Mixed,
    Acro,
    Ne,
    Undef,
}

impl LanguageTag {
    pub const ALL: [LanguageTag; 9] = [
        LanguageTag::En,
        LanguageTag::Hi,
        LanguageTag::Bn,
        LanguageTag::Te,
        LanguageTag::Univ,
        LanguageTag::Mixed,
        LanguageTag::Acro,
        LanguageTag::Ne,
        LanguageTag::Undef,
    ];

    /// `true` for en, hi, bn and te; the remaining tags name no single language.
    pub fn is_language_bearing(self) -> bool {
        matches!(
            self,
            LanguageTag::En | LanguageTag::Hi | LanguageTag::Bn | LanguageTag::Te
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::En => "en",
            LanguageTag::Hi => "hi",
            LanguageTag::Bn => "bn",
            LanguageTag::Te => "te",
            LanguageTag::Univ => "univ",
            LanguageTag::Mixed => "mixed",
            LanguageTag::Acro => "acro",
            LanguageTag::Ne => "ne",
            LanguageTag::Undef => "undef",
        }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLanguageTag(pub String);

impl fmt::Display for UnknownLanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown language tag \"{}\"", self.0)
    }
}

impl std::error::Error for UnknownLanguageTag {}

impl FromStr for LanguageTag {
    type Err = UnknownLanguageTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownLanguageTag(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagsetMode {
    Coarse,
    Fine,
    #[default]
    Open,
}

impl TagsetMode {
    pub fn accepts(self, label: &str) -> bool {
        match self {
            TagsetMode::Coarse => COARSE_TAGSET.contains(&label),
            TagsetMode::Fine | TagsetMode::Open => true,
        }
    }
}

impl FromStr for TagsetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(TagsetMode::Coarse),
            "fine" => Ok(TagsetMode::Fine),
            "open" => Ok(TagsetMode::Open),
            other => Err(Error::InvalidArgument(format!(
                "unknown tagset mode \"{other}\" (expected coarse, fine or open)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub lang: LanguageTag,
    pub pos: Option<String>,
}

impl Token {
    pub fn new(form: impl Into<String>, lang: LanguageTag, pos: Option<&str>) -> Self {
        Token {
            form: form.into(),
            lang,
            pos: pos.map(str::to_string),
        }
    }

    /// Checks the form/label invariants that the file format relies on.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.form.is_empty() {
            return Err("empty token form".into());
        }
        if self.form.contains(['\t', '\n', '\r']) {
            return Err(format!("token form {:?} contains a TAB or line break", self.form));
        }
        if let Some(pos) = &self.pos {
            if pos.is_empty() || pos.chars().any(char::is_whitespace) {
                return Err(format!("invalid POS label {pos:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Utterance {
    pub tokens: Vec<Token>,
    pub meta: Meta,
}

impl Utterance {
    pub fn new(tokens: Vec<Token>) -> Self {
        Utterance {
            tokens,
            meta: Meta::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub meta: Meta,
}

impl Corpus {
    pub fn new(utterances: Vec<Utterance>) -> Self {
        Corpus {
            utterances,
            meta: Meta::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.utterances.iter().map(Utterance::len).sum()
    }
}

/// A non-fatal problem found while reading in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub corpus: Corpus,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_corpus(input: &str, mode: TagsetMode, strict: bool) -> Result<Corpus> {
    parse_corpus_with_diagnostics(input, mode, strict).map(|p| p.corpus)
}

fn parse_meta_line(body: &str) -> Option<(String, String)> {
    let (key, value) = body.split_once('=')?;
    let key = key.trim();
    if key.is_empty() {
        return None;
    }
    Some((key.to_string(), value.trim().to_string()))
}

pub fn parse_corpus_with_diagnostics(input: &str, mode: TagsetMode, strict: bool) -> Result<Parsed> {
    let mut corpus = Corpus::default();
    let mut diagnostics = Vec::new();
    let mut pending_meta = Meta::new();
    let mut pending_meta_line = 0;
    let mut tokens: Vec<Token> = Vec::new();

    let flush = |tokens: &mut Vec<Token>, meta: &mut Meta, corpus: &mut Corpus| {
        if !tokens.is_empty() {
            corpus.utterances.push(Utterance {
                tokens: std::mem::take(tokens),
                meta: std::mem::take(meta),
            });
        }
    };

    for (idx, raw) in input.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if line.trim().is_empty() {
            flush(&mut tokens, &mut pending_meta, &mut corpus);
            continue;
        }

        if !line.contains('\t') && line.starts_with('#') {
            if !tokens.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "metadata comment inside an utterance".into(),
                });
            }
            if let Some(body) = line.strip_prefix("##") {
                if !corpus.utterances.is_empty() || !pending_meta.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "corpus metadata must precede all utterances".into(),
                    });
                }
                match parse_meta_line(body) {
                    Some((k, v)) => {
                        corpus.meta.insert(k, v);
                    }
                    None => diagnostics.push(Diagnostic {
                        line: line_no,
                        message: "comment without `key = value` ignored".into(),
                    }),
                }
            } else {
                match parse_meta_line(&line[1..]) {
                    Some((k, v)) => {
                        if pending_meta.is_empty() {
                            pending_meta_line = line_no;
                        }
                        pending_meta.insert(k, v);
                    }
                    None => diagnostics.push(Diagnostic {
                        line: line_no,
                        message: "comment without `key = value` ignored".into(),
                    }),
                }
            }
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 or 3 TAB-separated fields, found {}", fields.len()),
            });
        }
        let form = fields[0];
        if form.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty token form".into(),
            });
        }
        let lang = match fields[1].parse::<LanguageTag>() {
            Ok(tag) => tag,
            Err(_) if strict => {
                return Err(Error::UnknownLanguage {
                    line: line_no,
                    tag: fields[1].to_string(),
                })
            }
            Err(e) => {
                diagnostics.push(Diagnostic {
                    line: line_no,
                    message: format!("{e}; mapped to undef"),
                });
                LanguageTag::Undef
            }
        };
        let pos = match fields.get(2) {
            None => None,
            Some(label) => {
                if label.is_empty() || label.chars().any(char::is_whitespace) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("invalid POS label {label:?}"),
                    });
                }
                if !mode.accepts(label) {
                    return Err(Error::CoarseLabel {
                        line: line_no,
                        label: label.to_string(),
                    });
                }
                Some(label.to_string())
            }
        };
        tokens.push(Token {
            form: form.to_string(),
            lang,
            pos,
        });
    }
    flush(&mut tokens, &mut pending_meta, &mut corpus);

    if !pending_meta.is_empty() {
        return Err(Error::Parse {
            line: pending_meta_line,
            message: "metadata is not followed by an utterance".into(),
        });
    }
    if corpus.utterances.is_empty() {
        return Err(Error::NoUtterances);
    }
    Ok(Parsed { corpus, diagnostics })
}

fn check_meta(key: &str, value: &str) -> Result<()> {
    let bad = |what: &str| Error::Unrepresentable(format!("metadata {what}: {key:?} = {value:?}"));
    if key.is_empty() || key != key.trim() || key.contains('=') || key.starts_with('#') {
        return Err(bad("key"));
    }
    if key.contains(['\n', '\r', '\t']) || value.contains(['\n', '\r', '\t']) {
        return Err(bad("contains TAB or line break"));
    }
    if value != value.trim() {
        return Err(bad("value has surrounding whitespace"));
    }
    Ok(())
}

pub fn write_corpus(corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    for (k, v) in &corpus.meta {
        check_meta(k, v)?;
        out.push_str(&format!("## {k} = {v}\n"));
    }
    if !corpus.meta.is_empty() {
        out.push('\n');
    }
    for utt in &corpus.utterances {
        if utt.tokens.is_empty() {
            return Err(Error::Unrepresentable("empty utterance".into()));
        }
        for (k, v) in &utt.meta {
            check_meta(k, v)?;
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for tok in &utt.tokens {
            tok.validate().map_err(Error::Unrepresentable)?;
            out.push_str(&tok.form);
            out.push('\t');
            out.push_str(tok.lang.as_str());
            if let Some(pos) = &tok.pos {
                out.push('\t');
                out.push_str(pos);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// K-fold partition of a corpus after a seeded shuffle.
///
/// Returns `(train, held_out)` pairs; held-out sizes differ by at most one.
pub fn split_corpus(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<(Corpus, Corpus)>> {
    let n = corpus.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!("folds must be in 2..={n}, got {folds}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let base = n / folds;
    let extra = n % folds;
    let mut bounds = Vec::with_capacity(folds + 1);
    bounds.push(0);
    for k in 0..folds {
        let size = base + usize::from(k < extra);
        bounds.push(bounds[k] + size);
    }

    let pick = |ids: &mut dyn Iterator<Item = usize>| Corpus {
        utterances: ids.map(|i| corpus.utterances[i].clone()).collect(),
        meta: corpus.meta.clone(),
    };
    Ok((0..folds)
        .map(|k| {
            let (lo, hi) = (bounds[k], bounds[k + 1]);
            let held = pick(&mut order[lo..hi].iter().copied());
            let train = pick(&mut order[..lo].iter().chain(order[hi..].iter()).copied());
            (train, held)
        })
        .collect())
}
