use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Gradients, Mlp};
use super::train::bce;
use crate::featurize::SparseVec;

/// Scalar whose parameter gradient is checked. The model's L2 term is added
/// to the loss targets.
#[derive(Clone, Copy, Debug)]
pub enum GradTarget<'a> {
    /// Raw network output.
    Output,
    /// Logistic loss against a label.
    Logistic { label: bool },
    /// Ranking hinge with `input` as the plausible branch.
    Margin { decoy: &'a SparseVec, margin: f64 },
}

/// Denominator floor so that vanishing gradients compare by absolute error.
const FLOOR: f64 = 1e-6;

fn value(model: &Mlp, x: &SparseVec, target: GradTarget) -> f64 {
    let out = model.forward_cache(x, None).output();
    let l2 = 0.5 * model.config.l2 * model.weight_norm_sq();
    match target {
        GradTarget::Output => out,
        GradTarget::Logistic { label } => bce(out, label, 1.0).0 + l2,
        GradTarget::Margin { decoy, margin } => {
            let d = model.forward_cache(decoy, None).output();
            (margin - out + d).max(0.0) + l2
        }
    }
}

fn analytic(model: &Mlp, x: &SparseVec, target: GradTarget) -> Gradients {
    let mut g = Gradients::zeros(model);
    let cache = model.forward_cache(x, None);
    let out = cache.output();
    match target {
        GradTarget::Output => model.backward(x, &cache, 1.0, &mut g),
        GradTarget::Logistic { label } => model.backward(x, &cache, bce(out, label, 1.0).1, &mut g),
        GradTarget::Margin { decoy, margin } => {
            let cd = model.forward_cache(decoy, None);
            if margin - out + cd.output() > 0.0 {
                model.backward(x, &cache, -1.0, &mut g);
                model.backward(decoy, &cd, 1.0, &mut g);
            }
        }
    }
    if !matches!(target, GradTarget::Output) && model.config.l2 > 0.0 {
        for (gw, l) in g.w.iter_mut().zip(&model.layers) {
            gw.iter_mut().zip(&l.w).for_each(|(a, w)| *a += model.config.l2 * w);
        }
    }
    g
}

fn check(model: &Mlp, x: &SparseVec, target: GradTarget, eps: f64, params: impl Iterator<Item = usize>) -> f64 {
    assert!((1e-7..=1e-3).contains(&eps), "epsilon must lie in [1e-7, 1e-3]");
    let g = analytic(model, x, target);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for p in params {
        let orig = probe.param(p);
        probe.set_param(p, orig + eps);
        let up = value(&probe, x, target);
        probe.set_param(p, orig - eps);
        let down = value(&probe, x, target);
        probe.set_param(p, orig);
        let numeric = (up - down) / (2.0 * eps);
        let a = g.get(model, p);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(rel);
    }
    worst
}

/// Largest relative error between backpropagated and central-difference
/// gradients over every parameter. Dropout is off during the check.
pub fn grad_check(model: &Mlp, input: &SparseVec, target: GradTarget, epsilon: f64) -> f64 {
    check(model, input, target, epsilon, 0..model.param_count())
}

/// As [`grad_check`] over `n` parameters drawn uniformly without replacement.
pub fn grad_check_sampled(
    model: &Mlp,
    input: &SparseVec,
    target: GradTarget,
    epsilon: f64,
    n: usize,
    seed: u64,
) -> f64 {
    let total = model.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = sample(&mut rng, total, n.min(total));
    check(model, input, target, epsilon, picked.into_iter())
}

/// Smallest |pre-activation| over hidden units; a relu check is only
/// meaningful when this stays well above the perturbation size.
pub fn min_abs_preactivation(model: &Mlp, input: &SparseVec) -> f64 {
    let cache = model.forward_cache(input, None);
    let hidden = cache.z.len() - 1;
    cache.z[..hidden]
        .iter()
        .flatten()
        .map(|z| z.abs())
        .fold(f64::INFINITY, f64::min)
}
