//! Smooth part of the training objective: negative log-likelihood summed over
//! instances plus `(c2 / 2) * ||w||^2`. The L1 term lives in the optimizer.

use rayon::prelude::*;

use super::inference::forward_backward;
use super::{SequenceInstance, Weights};
use crate::error::{Error, Result};

/// Instances per work unit. Fixed so that partial sums, and therefore the
/// final bits, do not depend on the thread count.
const CHUNK: usize = 32;
const GROUP: usize = 8;

fn accumulate(weights: &Weights, instance: &SequenceInstance, gold: &[usize], grad: &mut [f64]) -> f64 {
    let l = weights.num_labels();
    let lattice = forward_backward(weights, instance);
    let marg = lattice.marginals(weights);
    let t_len = instance.len();
    let trans_start = weights.num_features() * l;
    let bos_start = trans_start + l * l;
    let eos_start = bos_start + l;

    let mut gold_score = 0.0;
    for (t, feats) in instance.features.iter().enumerate() {
        let p = marg.at(t);
        let y = gold[t];
        gold_score += lattice.state[t * l + y];
        for &f in feats {
            let row = &mut grad[f as usize * l..(f as usize + 1) * l];
            for (g, pv) in row.iter_mut().zip(p) {
                *g += pv;
            }
            row[y] -= 1.0;
        }
    }
    for t in 0..t_len.saturating_sub(1) {
        let e = marg.edge_at(t);
        for (g, pv) in grad[trans_start..bos_start].iter_mut().zip(e) {
            *g += pv;
        }
        grad[trans_start + gold[t] * l + gold[t + 1]] -= 1.0;
        gold_score += weights.transition(gold[t], gold[t + 1]);
    }
    for (g, pv) in grad[bos_start..eos_start].iter_mut().zip(marg.at(0)) {
        *g += pv;
    }
    grad[bos_start + gold[0]] -= 1.0;
    for (g, pv) in grad[eos_start..].iter_mut().zip(marg.at(t_len - 1)) {
        *g += pv;
    }
    grad[eos_start + gold[t_len - 1]] -= 1.0;
    gold_score += weights.bos()[gold[0]] + weights.eos()[gold[t_len - 1]];

    lattice.log_z - gold_score
}

fn check_instance(weights: &Weights, inst: &SequenceInstance, gold: &[usize], i: usize) -> Result<()> {
    let misaligned = |position: usize, message: String| Error::Misaligned {
        utterance: i,
        position,
        message,
    };
    if inst.is_empty() || gold.len() != inst.len() {
        return Err(misaligned(
            0,
            format!("{} labels for {} positions", gold.len(), inst.len()),
        ));
    }
    for (t, (&y, feats)) in gold.iter().zip(&inst.features).enumerate() {
        if y >= weights.num_labels() {
            return Err(misaligned(t, format!("label id {y} out of range")));
        }
        if let Some(&f) = feats.iter().find(|&&f| f as usize >= weights.num_features()) {
            return Err(misaligned(t, format!("feature id {f} out of range")));
        }
    }
    Ok(())
}

/// Value and gradient of the L2-regularized negative log-likelihood.
pub fn objective_and_gradient(weights: &Weights, instances: &[SequenceInstance], c2: f64) -> Result<(f64, Weights)> {
    if instances.is_empty() {
        return Err(Error::InvalidArgument("no training instances".into()));
    }
    let golds: Vec<&[usize]> = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let gold = inst.gold.as_deref().ok_or(Error::MissingLabel {
                utterance: i,
                position: 0,
            })?;
            check_instance(weights, inst, gold, i)?;
            Ok(gold)
        })
        .collect::<Result<_>>()?;

    let n = weights.values().len();
    let mut value = 0.0;
    let mut grad = vec![0.0; n];
    // bounded number of partial gradients alive at once; summed in chunk order
    for group in instances.chunks(CHUNK * GROUP).zip(golds.chunks(CHUNK * GROUP)) {
        let partials: Vec<(f64, Vec<f64>)> = group
            .0
            .par_chunks(CHUNK)
            .zip(group.1.par_chunks(CHUNK))
            .map(|(insts, golds)| {
                let mut g = vec![0.0; n];
                let v = insts
                    .iter()
                    .zip(golds)
                    .map(|(inst, gold)| accumulate(weights, inst, gold, &mut g))
                    .sum::<f64>();
                (v, g)
            })
            .collect();
        for (v, g) in &partials {
            value += v;
            for (acc, x) in grad.iter_mut().zip(g) {
                *acc += x;
            }
        }
    }
    if c2 != 0.0 {
        let mut sq = 0.0;
        for (g, w) in grad.iter_mut().zip(weights.values()) {
            *g += c2 * w;
            sq += w * w;
        }
        value += 0.5 * c2 * sq;
    }
    let grad = Weights::from_values(weights.num_features(), weights.num_labels(), grad)?;
    Ok((value, grad))
}
