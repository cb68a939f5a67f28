//! Versioned binary model container.
//!
//! ```text
//! "CMXCRF"  u32 version
//! u32 window  u32 max_ngram  u32 min_count  u8 use_lang
//! u32 n  n × str                      emoticon lexicon
//! u32 L  L × str                      labels
//! u32 F  F × (str, u64 count)         feature table
//! u64 K  K × (u32 feature, u32 label, f64 weight)   non-zero state weights
//! L×L f64 transitions, L f64 start, L f64 end
//! ```
//!
//! Integers and floats are little-endian; `str` is a u32 byte length followed
//! by UTF-8 bytes.

use std::io::Write;

use super::{CrfModel, Weights};
use crate::error::{Error, Result};
use crate::features::{EmoticonLexicon, FeatureConfig, FeatureIndex};

pub const MAGIC: &[u8; 6] = b"CMXCRF";
pub const VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn save_model(model: &CrfModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let cfg = model.config();
    out.extend_from_slice(&(cfg.window as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.max_ngram as u32).to_le_bytes());
    out.extend_from_slice(&cfg.min_count.to_le_bytes());
    out.push(u8::from(cfg.use_lang));
    out.extend_from_slice(&(cfg.emoticons.len() as u32).to_le_bytes());
    for e in cfg.emoticons.iter() {
        put_str(&mut out, e);
    }

    out.extend_from_slice(&(model.labels().len() as u32).to_le_bytes());
    for label in model.labels() {
        put_str(&mut out, label);
    }

    model
        .feature_index()
        .write_to(&mut out)
        .expect("writing to a Vec cannot fail");

    let w = model.weights();
    let l = w.num_labels();
    let nonzero: Vec<(usize, f64)> = w
        .state()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();
    out.extend_from_slice(&(nonzero.len() as u64).to_le_bytes());
    for (i, v) in nonzero {
        out.extend_from_slice(&((i / l) as u32).to_le_bytes());
        out.extend_from_slice(&((i % l) as u32).to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in w.trans().iter().chain(w.bos()).chain(w.eos()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_model(model: &CrfModel, mut w: impl Write) -> Result<()> {
    w.write_all(&save_model(model))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::ModelFormat(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::ModelFormat(format!("non-finite {what}")));
        }
        Ok(v)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::ModelFormat(format!("{what} is not valid UTF-8")))
    }

    /// Guards `Vec::with_capacity` against absurd counts from corrupt input.
    fn count(&mut self, n: usize, min_item: usize, what: &str) -> Result<usize> {
        if n.saturating_mul(min_item) > self.buf.len() - self.pos {
            return Err(Error::ModelFormat(format!("truncated {what} table")));
        }
        Ok(n)
    }
}

pub fn load_model(bytes: &[u8]) -> Result<CrfModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic").ok() != Some(MAGIC.as_slice()) {
        return Err(Error::ModelFormat("bad magic (not a CMXCRF model)".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }

    let window = r.u32("window")? as usize;
    let max_ngram = r.u32("max_ngram")? as usize;
    let min_count = r.u32("min_count")?;
    let use_lang = match r.u8("use_lang")? {
        0 => false,
        1 => true,
        other => return Err(Error::ModelFormat(format!("bad use_lang flag {other}"))),
    };
    let n = r.u32("emoticon count")? as usize;
    let n = r.count(n, 4, "emoticon")?;
    let emoticons = (0..n).map(|_| r.string("emoticon")).collect::<Result<Vec<_>>>()?;
    let config = FeatureConfig {
        window,
        max_ngram,
        min_count,
        use_lang,
        emoticons: EmoticonLexicon::from_entries(emoticons),
    };

    let l = r.u32("label count")? as usize;
    let l = r.count(l, 4, "label")?;
    let labels = (0..l).map(|_| r.string("label")).collect::<Result<Vec<_>>>()?;

    let f = r.u32("feature count")? as usize;
    let f = r.count(f, 12, "feature")?;
    let mut names = Vec::with_capacity(f);
    let mut counts = Vec::with_capacity(f);
    for _ in 0..f {
        names.push(r.string("feature name")?);
        counts.push(r.u64("feature count")?);
    }
    let index = FeatureIndex::from_parts(names, counts)?;

    let k = r.u64("weight count")? as usize;
    let k = r.count(k, 16, "state weight")?;
    let mut weights = Weights::zeros(f, l);
    for _ in 0..k {
        let fid = r.u32("feature id")? as usize;
        let lid = r.u32("label id")? as usize;
        let v = r.f64("state weight")?;
        if fid >= f || lid >= l {
            return Err(Error::ModelFormat(format!("state weight ({fid}, {lid}) out of range")));
        }
        weights.state_mut()[fid * l + lid] = v;
    }
    for slot in weights.trans_mut() {
        *slot = r.f64("transition weight")?;
    }
    for slot in weights.bos_mut() {
        *slot = r.f64("start weight")?;
    }
    for slot in weights.eos_mut() {
        *slot = r.f64("end weight")?;
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    CrfModel::new(labels, index, weights, config).map_err(|e| Error::ModelFormat(e.to_string()))
}
