//! Exact inference on a linear chain: scoring, forward/backward, marginals
//! and Viterbi decoding. All recursions run in log space.

use super::{SequenceInstance, Weights};
use crate::error::{Error, Result};

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Per-position label scores: `out[t * L + y]` is the summed state weight of
/// the features active at `t` for label `y`.
pub fn state_scores(weights: &Weights, instance: &SequenceInstance) -> Vec<f64> {
    let l = weights.num_labels();
    let mut out = vec![0.0; instance.len() * l];
    for (t, feats) in instance.features.iter().enumerate() {
        let row = &mut out[t * l..(t + 1) * l];
        for &f in feats {
            for (acc, w) in row.iter_mut().zip(weights.state_row(f)) {
                *acc += w;
            }
        }
    }
    out
}

pub fn score_sequence(weights: &Weights, instance: &SequenceInstance, labels: &[usize]) -> Result<f64> {
    if labels.len() != instance.len() {
        return Err(Error::InvalidArgument(format!(
            "label sequence length {} does not match instance length {}",
            labels.len(),
            instance.len()
        )));
    }
    let l = weights.num_labels();
    if let Some(&bad) = labels.iter().find(|&&y| y >= l) {
        return Err(Error::InvalidArgument(format!("label id {bad} out of range (L = {l})")));
    }
    let f_count = weights.num_features();
    if let Some(&bad) = instance.features.iter().flatten().find(|&&f| f as usize >= f_count) {
        return Err(Error::InvalidArgument(format!(
            "feature id {bad} out of range (F = {f_count})"
        )));
    }
    let (Some(&first), Some(&last)) = (labels.first(), labels.last()) else {
        return Ok(0.0);
    };
    let mut score = weights.bos()[first] + weights.eos()[last];
    for (t, (&y, feats)) in labels.iter().zip(&instance.features).enumerate() {
        for &f in feats {
            score += weights.state_row(f)[y];
        }
        if t > 0 {
            score += weights.transition(labels[t - 1], y);
        }
    }
    Ok(score)
}

/// Forward and backward tables plus both estimates of `log Z`.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub num_labels: usize,
    pub state: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub log_z: f64,
    pub log_z_backward: f64,
}

pub fn forward_backward(weights: &Weights, instance: &SequenceInstance) -> Lattice {
    let l = weights.num_labels();
    let t_len = instance.len();
    let state = state_scores(weights, instance);
    let mut alpha = vec![0.0; t_len * l];
    let mut beta = vec![0.0; t_len * l];
    if t_len == 0 {
        // the empty labeling is the only one, with score 0
        return Lattice {
            num_labels: l,
            state,
            alpha,
            beta,
            log_z: 0.0,
            log_z_backward: 0.0,
        };
    }

    for y in 0..l {
        alpha[y] = weights.bos()[y] + state[y];
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * l);
        let prev = &prev[(t - 1) * l..];
        for y in 0..l {
            cur[y] = state[t * l + y] + log_sum_exp((0..l).map(|p| prev[p] + weights.transition(p, y)));
        }
    }
    let last = (t_len - 1) * l;
    let log_z = log_sum_exp((0..l).map(|y| alpha[last + y] + weights.eos()[y]));

    beta[last..].copy_from_slice(weights.eos());
    for t in (0..t_len - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * l);
        let cur = &mut cur[t * l..];
        let next_state = &state[(t + 1) * l..(t + 2) * l];
        for (y, slot) in cur.iter_mut().enumerate() {
            *slot = log_sum_exp((0..l).map(|n| weights.transition(y, n) + next_state[n] + next[n]));
        }
    }
    let log_z_backward = log_sum_exp((0..l).map(|y| weights.bos()[y] + state[y] + beta[y]));

    Lattice {
        num_labels: l,
        state,
        alpha,
        beta,
        log_z,
        log_z_backward,
    }
}

pub fn log_partition(weights: &Weights, instance: &SequenceInstance) -> f64 {
    forward_backward(weights, instance).log_z
}

#[derive(Debug, Clone)]
pub struct Marginals {
    pub num_labels: usize,
    /// `position[t * L + y]`
    pub position: Vec<f64>,
    /// `edge[t * L * L + from * L + to]` for the edge between `t` and `t + 1`
    pub edge: Vec<f64>,
    pub log_z: f64,
    pub log_z_backward: f64,
}

impl Marginals {
    pub fn at(&self, t: usize) -> &[f64] {
        &self.position[t * self.num_labels..(t + 1) * self.num_labels]
    }

    pub fn edge_at(&self, t: usize) -> &[f64] {
        let ll = self.num_labels * self.num_labels;
        &self.edge[t * ll..(t + 1) * ll]
    }
}

impl Lattice {
    pub fn marginals(&self, weights: &Weights) -> Marginals {
        let l = self.num_labels;
        let t_len = self.state.len() / l;
        let position = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| (a + b - self.log_z).exp())
            .collect();
        let mut edge = vec![0.0; t_len.saturating_sub(1) * l * l];
        for t in 0..t_len.saturating_sub(1) {
            for from in 0..l {
                let a = self.alpha[t * l + from];
                for to in 0..l {
                    edge[(t * l + from) * l + to] =
                        (a + weights.transition(from, to) + self.state[(t + 1) * l + to] + self.beta[(t + 1) * l + to]
                            - self.log_z)
                            .exp();
                }
            }
        }
        Marginals {
            num_labels: l,
            position,
            edge,
            log_z: self.log_z,
            log_z_backward: self.log_z_backward,
        }
    }
}

pub fn posterior_marginals(weights: &Weights, instance: &SequenceInstance) -> Marginals {
    forward_backward(weights, instance).marginals(weights)
}

/// Relative score gap below which two Viterbi candidates are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Best labeling and its score.
///
/// Among equal-scoring labelings the lexicographically smallest label-id
/// sequence wins: best suffix scores are computed right to left, then labels
/// are chosen left to right taking the lowest id that attains the optimum.
/// Scores within `TIE_TOLERANCE` (relative) count as equal, so mathematically
/// tied paths are not separated by summation-order rounding.
pub fn viterbi_decode(weights: &Weights, instance: &SequenceInstance) -> (Vec<usize>, f64) {
    let l = weights.num_labels();
    let t_len = instance.len();
    if t_len == 0 {
        return (Vec::new(), 0.0);
    }
    let state = state_scores(weights, instance);

    // best[t * L + y]: max score of positions t.. given label y at t (eos included)
    let mut best = vec![0.0; t_len * l];
    let last = (t_len - 1) * l;
    for y in 0..l {
        best[last + y] = state[last + y] + weights.eos()[y];
    }
    for t in (0..t_len - 1).rev() {
        for y in 0..l {
            let tail = (0..l)
                .map(|n| weights.transition(y, n) + best[(t + 1) * l + n])
                .fold(f64::NEG_INFINITY, f64::max);
            best[t * l + y] = state[t * l + y] + tail;
        }
    }

    let first_lowest = |scores: &mut dyn Iterator<Item = f64>| {
        let scores: Vec<f64> = scores.collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = max - TIE_TOLERANCE * max.abs().max(1.0);
        scores.iter().position(|&s| s >= floor).unwrap_or(0)
    };

    let mut path = Vec::with_capacity(t_len);
    path.push(first_lowest(&mut (0..l).map(|y| weights.bos()[y] + best[y])));
    for t in 1..t_len {
        let prev = path[t - 1];
        path.push(first_lowest(
            &mut (0..l).map(|n| weights.transition(prev, n) + best[t * l + n]),
        ));
    }
    let score = score_sequence(weights, instance, &path).expect("path length matches instance");
    (path, score)
}
