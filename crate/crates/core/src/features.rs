//! Feature templates for tokens in context.
//!
//! Every feature is a flat string. Offsets are written `0`, `+1`, `-2`, ...
//!
//! | template           | scope          | example            |
//! |--------------------|----------------|--------------------|
//! | `bias`             | always         | `bias`             |
//! | `BOS` / `EOS`      | first / last   | `BOS`              |
//! | `w[δ]=…`           | every offset   | `w[-1]=kya`        |
//! | `isupper[δ]` etc.  | every offset   | `istitle[0]`       |
//! | `pat[δ]=…`         | every offset   | `pat[+1]=url`      |
//! | `lang[δ]=…`        | every offset   | `lang[0]=hi`       |
//! | `ng=…`             | focus token    | `ng=^ju`           |

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Read, Write};
use std::sync::LazyLock;

use indexmap::{IndexMap, IndexSet};

use crate::corpus::Utterance;
use crate::error::{Error, Result};

/// Emoticons recognised without a custom lexicon.
pub const DEFAULT_EMOTICONS: &[&str] = &[
    ":)", ":(", ":-)", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p", "<3", "</3", ":')", ":'(", ":o",
    ":O", ":-O", ":/", ":-/", ":|", ":-|", ":*", ":-*", "^_^", "^^", "-_-", "xD", "XD", "B)", "8)", ":3", ";P", ";D",
    "o_O", "O_o", ":@",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmoticonLexicon {
    entries: BTreeSet<String>,
}

impl Default for EmoticonLexicon {
    fn default() -> Self {
        EmoticonLexicon {
            entries: DEFAULT_EMOTICONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl EmoticonLexicon {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EmoticonLexicon {
            entries: entries
                .into_iter()
                .map(Into::into)
                .filter(|s: &String| !s.is_empty())
                .collect(),
        }
    }

    /// One emoticon per line; blank lines and lines starting with `//` are skipped.
    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Ok(Self::from_entries(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("//")),
        ))
    }

    pub fn contains(&self, form: &str) -> bool {
        self.entries.contains(form)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    pub window: usize,
    pub max_ngram: usize,
    pub min_count: u32,
    pub use_lang: bool,
    pub emoticons: EmoticonLexicon,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: 2,
            max_ngram: 3,
            min_count: 1,
            use_lang: true,
            emoticons: EmoticonLexicon::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_ngram == 0 {
            return Err(Error::InvalidArgument("max_ngram must be at least 1".into()));
        }
        if self.min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatternFlags {
    pub is_url: bool,
    pub is_email: bool,
    pub is_number: bool,
    pub is_punct: bool,
    pub is_emoticon: bool,
    pub is_mention: bool,
    pub is_hashtag: bool,
}

impl PatternFlags {
    /// Names of the set flags, in a fixed order.
    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        [
            (self.is_url, "url"),
            (self.is_email, "email"),
            (self.is_number, "number"),
            (self.is_punct, "punct"),
            (self.is_emoticon, "emoticon"),
            (self.is_mention, "mention"),
            (self.is_hashtag, "hashtag"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_emoji_char(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF)
}

fn is_emoji_sequence(form: &str) -> bool {
    // variation selectors, ZWJ and skin-tone modifiers may follow an emoji
    let mut saw_emoji = false;
    for c in form.chars() {
        if is_emoji_char(c) {
            saw_emoji = true;
        } else if !matches!(c as u32, 0xFE0E | 0xFE0F | 0x200D | 0x20E3) {
            return false;
        }
    }
    saw_emoji
}

fn is_number(form: &str) -> bool {
    let cleaned: String = form.chars().filter(|&c| c != ',').collect();
    let body = cleaned.strip_prefix(['+', '-']).unwrap_or(&cleaned);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn is_email(form: &str) -> bool {
    let mut parts = form.split('@');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(local), Some(domain), None) => !local.is_empty() && domain.contains('.'),
        _ => false,
    }
}

fn leads_with_then_word(form: &str, lead: char) -> bool {
    let mut chars = form.chars();
    chars.next() == Some(lead) && chars.next().is_some_and(is_word_char)
}

static DEFAULT_LEXICON: LazyLock<EmoticonLexicon> = LazyLock::new(EmoticonLexicon::default);

pub fn classify_pattern(form: &str) -> PatternFlags {
    classify_pattern_with(form, &DEFAULT_LEXICON)
}

pub fn classify_pattern_with(form: &str, emoticons: &EmoticonLexicon) -> PatternFlags {
    let mut flags = PatternFlags {
        is_url: form.starts_with("http://") || form.starts_with("https://") || form.starts_with("www."),
        is_email: is_email(form),
        is_number: is_number(form),
        is_punct: false,
        is_emoticon: emoticons.contains(form) || is_emoji_sequence(form),
        is_mention: leads_with_then_word(form, '@'),
        is_hashtag: leads_with_then_word(form, '#'),
    };
    let any_other = flags.names().next().is_some();
    flags.is_punct = !form.is_empty() && !any_other && form.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace());
    flags
}

/// Deterministically ordered, duplicate-free feature names for one position.
pub type FeatureSet = IndexSet<String>;

struct Offset(isize);

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 0 {
            write!(f, "+{}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn is_upper(form: &str) -> bool {
    let mut cased = false;
    for c in form.chars() {
        if c.is_lowercase() {
            return false;
        }
        cased |= c.is_uppercase();
    }
    cased
}

fn is_title(form: &str) -> bool {
    let mut chars = form.chars();
    chars.next().is_some_and(char::is_uppercase) && chars.all(|c| !c.is_uppercase())
}

pub fn token_features(utterance: &Utterance, position: usize, config: &FeatureConfig) -> Result<FeatureSet> {
    let len = utterance.len();
    if position >= len {
        return Err(Error::InvalidArgument(format!(
            "position {position} out of range for utterance of length {len}"
        )));
    }
    let mut out = FeatureSet::new();
    out.insert("bias".to_string());
    if position == 0 {
        out.insert("BOS".to_string());
    }
    if position + 1 == len {
        out.insert("EOS".to_string());
    }

    let window = config.window as isize;
    for delta in -window..=window {
        let idx = position as isize + delta;
        if idx < 0 || idx >= len as isize {
            continue;
        }
        let tok = &utterance.tokens[idx as usize];
        let off = Offset(delta);
        out.insert(format!("w[{off}]={}", tok.form.to_lowercase()));
        if is_upper(&tok.form) {
            out.insert(format!("isupper[{off}]"));
        }
        if is_title(&tok.form) {
            out.insert(format!("istitle[{off}]"));
        }
        if tok.form.chars().any(char::is_numeric) {
            out.insert(format!("hasdigit[{off}]"));
        }
        for name in classify_pattern_with(&tok.form, &config.emoticons).names() {
            out.insert(format!("pat[{off}]={name}"));
        }
        if config.use_lang {
            out.insert(format!("lang[{off}]={}", tok.lang));
        }
    }

    let wrapped: Vec<char> = std::iter::once('^')
        .chain(utterance.tokens[position].form.to_lowercase().chars())
        .chain(std::iter::once('$'))
        .collect();
    for n in 1..=config.max_ngram.min(wrapped.len()) {
        for gram in wrapped.windows(n) {
            let mut name = String::with_capacity(3 + 4 * n);
            name.push_str("ng=");
            name.extend(gram);
            out.insert(name);
        }
    }
    Ok(out)
}

pub fn sequence_features(utterance: &Utterance, config: &FeatureConfig) -> Result<Vec<FeatureSet>> {
    (0..utterance.len())
        .map(|i| token_features(utterance, i, config))
        .collect()
}

/// Dense 0-based ids for the features kept after count pruning.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureIndex {
    ids: IndexMap<String, u32>,
    counts: Vec<u64>,
}

impl FeatureIndex {
    pub(crate) fn from_parts(names: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if names.len() != counts.len() {
            return Err(Error::ModelFormat("feature name/count length mismatch".into()));
        }
        let mut ids = IndexMap::with_capacity(names.len());
        for (i, name) in names.into_iter().enumerate() {
            if ids.insert(name, i as u32).is_some() {
                return Err(Error::ModelFormat("duplicate feature name".into()));
            }
        }
        Ok(FeatureIndex { ids, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.ids.get_index(id as usize).map(|(k, _)| k.as_str())
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.counts.get(id as usize).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ids.keys().map(String::as_str)
    }

    /// Ids of the known features in `set`, unknown ones dropped.
    pub fn lookup(&self, set: &FeatureSet) -> Vec<u32> {
        set.iter().filter_map(|f| self.id(f)).collect()
    }

    /// Length-prefixed little-endian dump: count, then (name, occurrence count) pairs.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(&(self.len() as u32).to_le_bytes())?;
        for (name, &count) in self.ids.keys().zip(&self.counts) {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&count.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Builds an index from per-position feature sets, keeping features seen at
/// least `min_count` times. Ids follow first occurrence.
pub fn build_feature_index<'a, I>(feature_sets: I, min_count: u32) -> Result<FeatureIndex>
where
    I: IntoIterator<Item = &'a FeatureSet>,
{
    let mut counts: IndexMap<&'a str, u64> = IndexMap::new();
    for set in feature_sets {
        for name in set {
            *counts.entry(name.as_str()).or_insert(0) += 1;
        }
    }
    let (names, kept): (Vec<String>, Vec<u64>) = counts
        .into_iter()
        .filter(|&(_, c)| c >= u64::from(min_count))
        .map(|(n, c)| (n.to_string(), c))
        .unzip();
    if names.is_empty() {
        return Err(Error::NoFeatures { min_count });
    }
    FeatureIndex::from_parts(names, kept)
}
