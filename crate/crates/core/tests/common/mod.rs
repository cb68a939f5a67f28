//! Independent oracles shared by the integration tests. Nothing here calls
//! into the inference code it is used to check.

#![allow(dead_code)]

use cmxtag::crf::{SequenceInstance, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weights in `[-scale, scale]`.
pub fn random_weights(rng: &mut ChaCha8Rng, f: usize, l: usize, scale: f64) -> Weights {
    let values = (0..Weights::param_count(f, l))
        .map(|_| rng.gen_range(-scale..=scale))
        .collect();
    Weights::from_values(f, l, values).unwrap()
}

/// Small integer weights, which make exact score ties common.
pub fn integer_weights(rng: &mut ChaCha8Rng, f: usize, l: usize) -> Weights {
    let values = (0..Weights::param_count(f, l))
        .map(|_| rng.gen_range(-1i32..=1) as f64)
        .collect();
    Weights::from_values(f, l, values).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, t: usize, f: usize, l: usize, with_gold: bool) -> SequenceInstance {
    let features = (0..t)
        .map(|_| {
            let k = rng.gen_range(0..=4.min(f));
            let mut ids: Vec<u32> = Vec::new();
            while ids.len() < k {
                let id = rng.gen_range(0..f as u32);
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            ids
        })
        .collect();
    let gold = with_gold.then(|| (0..t).map(|_| rng.gen_range(0..l)).collect());
    SequenceInstance { features, gold }
}

/// Reads a weight straight out of the flat parameter layout.
fn param(w: &Weights, idx: usize) -> f64 {
    w.values()[idx]
}

/// Log-potential of a labeling, summed term by term from the raw parameter vector.
pub fn oracle_score(w: &Weights, inst: &SequenceInstance, labels: &[usize]) -> f64 {
    let (f, l) = (w.num_features(), w.num_labels());
    let trans = f * l;
    let bos = trans + l * l;
    let eos = bos + l;
    let mut s = param(w, bos + labels[0]) + param(w, eos + labels[labels.len() - 1]);
    for t in 0..labels.len() {
        for &feat in &inst.features[t] {
            s += param(w, feat as usize * l + labels[t]);
        }
        if t > 0 {
            s += param(w, trans + labels[t - 1] * l + labels[t]);
        }
    }
    s
}

/// Every labeling of length `t` over `l` labels, in lexicographic order.
pub fn all_labelings(t: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(l.pow(t as u32));
    let mut cur = vec![0; t];
    loop {
        out.push(cur.clone());
        let mut i = t;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < l {
                break;
            }
            cur[i] = 0;
        }
    }
}

pub fn brute_log_partition(w: &Weights, inst: &SequenceInstance) -> f64 {
    let scores: Vec<f64> = all_labelings(inst.len(), w.num_labels())
        .iter()
        .map(|y| oracle_score(w, inst, y))
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Highest-scoring labeling; the first one in lexicographic order wins ties.
/// Scores within a relative 1e-12 of the maximum count as tied.
pub fn brute_argmax(w: &Weights, inst: &SequenceInstance) -> (Vec<usize>, f64) {
    let scored: Vec<(Vec<usize>, f64)> = all_labelings(inst.len(), w.num_labels())
        .into_iter()
        .map(|y| {
            let s = oracle_score(w, inst, &y);
            (y, s)
        })
        .collect();
    let max = scored.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let floor = max - 1e-12 * max.abs().max(1.0);
    scored.into_iter().find(|p| p.1 >= floor).unwrap()
}

/// Position marginals by explicit enumeration: `out[t][y]`.
pub fn brute_marginals(w: &Weights, inst: &SequenceInstance) -> Vec<Vec<f64>> {
    let l = w.num_labels();
    let log_z = brute_log_partition(w, inst);
    let mut out = vec![vec![0.0; l]; inst.len()];
    for y in all_labelings(inst.len(), l) {
        let p = (oracle_score(w, inst, &y) - log_z).exp();
        for (t, &label) in y.iter().enumerate() {
            out[t][label] += p;
        }
    }
    out
}

/// Regularized negative log-likelihood, computed by enumeration.
pub fn brute_objective(w: &Weights, instances: &[SequenceInstance], c2: f64) -> f64 {
    let nll: f64 = instances
        .iter()
        .map(|inst| brute_log_partition(w, inst) - oracle_score(w, inst, inst.gold.as_ref().unwrap()))
        .sum();
    nll + 0.5 * c2 * w.values().iter().map(|v| v * v).sum::<f64>()
}

/// Central finite-difference gradient of `f` at `w`.
pub fn finite_difference<F: Fn(&Weights) -> f64>(w: &Weights, h: f64, f: F) -> Vec<f64> {
    (0..w.values().len())
        .map(|i| {
            let mut plus = w.clone();
            plus.values_mut()[i] += h;
            let mut minus = w.clone();
            minus.values_mut()[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)`, 0 when both are exactly zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let den = a.abs().max(b.abs());
    if den == 0.0 {
        0.0
    } else {
        (a - b).abs() / den
    }
}
