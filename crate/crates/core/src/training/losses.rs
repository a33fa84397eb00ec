use ndarray::Array2;
use rand::Rng;

use crate::models::Critic;
use crate::nn::ConvStack;
use crate::{Error, Result, Scalar};

/// Correspondence loss: mean((p_pos - 1)^2) + mean((p_neg - 0)^2).
pub fn amc_loss<S: Scalar>(p_pos: &[S], p_neg: &[S]) -> Result<S> {
    if p_pos.is_empty() || p_neg.is_empty() {
        return Err(Error::InvalidConfig(
            "amc_loss needs at least one positive and one negative probability".into(),
        ));
    }
    let np = S::from_f64c(p_pos.len() as f64);
    let nn = S::from_f64c(p_neg.len() as f64);
    let pos: S = p_pos.iter().map(|&p| (p - S::one()) * (p - S::one())).sum::<S>() / np;
    let neg: S = p_neg.iter().map(|&p| p * p).sum::<S>() / nn;
    Ok(pos + neg)
}

/// Gradients of [`amc_loss`] w.r.t. each probability.
pub fn amc_loss_grads<S: Scalar>(p_pos: &[S], p_neg: &[S]) -> (Vec<S>, Vec<S>) {
    let two = S::from_f64c(2.0);
    let np = S::from_f64c(p_pos.len() as f64);
    let nn = S::from_f64c(p_neg.len() as f64);
    let gp = p_pos.iter().map(|&p| two * (p - S::one()) / np).collect();
    let gn = p_neg.iter().map(|&p| two * p / nn).collect();
    (gp, gn)
}

/// Mean squared difference over all elements.
pub fn mse<S: Scalar>(a: &Array2<S>, b: &Array2<S>) -> S {
    assert_eq!(a.dim(), b.dim());
    let n = S::from_f64c(a.len() as f64);
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        / n
}

/// Perceptual loss: MSE between (frozen) motion-encoder features of the
/// generated and reference windows.
pub fn perceptual_loss<S: Scalar>(
    motion_enc: &ConvStack<S>,
    y_hat: &Array2<S>,
    y: &Array2<S>,
) -> Result<S> {
    if y_hat.dim() != y.dim() {
        return Err(Error::ShapeMismatch(format!(
            "perceptual loss windows differ: {:?} vs {:?}",
            y_hat.dim(),
            y.dim()
        )));
    }
    let fa = motion_enc.forward(y_hat);
    let fb = motion_enc.forward(y);
    Ok(mse(&fa, &fb))
}

/// Perceptual loss plus its gradient w.r.t. `y_hat`; encoder parameters are
/// never touched.
pub fn perceptual_loss_with_grad<S: Scalar>(
    motion_enc: &ConvStack<S>,
    y_hat: &Array2<S>,
    y: &Array2<S>,
) -> Result<(S, Array2<S>)> {
    if y_hat.dim() != y.dim() {
        return Err(Error::ShapeMismatch("perceptual loss window mismatch".into()));
    }
    let cache = motion_enc.forward_cache(y_hat);
    let fa = cache.acts.last().unwrap().clone();
    let fb = motion_enc.forward(y);
    let n = S::from_f64c(fa.len() as f64);
    let loss = mse(&fa, &fb);
    let mut g_feat = &fa - &fb;
    g_feat.mapv_inplace(|v| v * S::from_f64c(2.0) / n);
    let g = motion_enc.input_grad(&cache, &g_feat);
    Ok((loss, g))
}

/// Critic objective: mean(d_real) - mean(d_fake) + gp_weight * gp.
/// The critic minimizes this, learning fake-high / real-low scores, which
/// matches a generator that minimizes +mean(D(G(x))).
pub fn critic_loss<S: Scalar>(d_real: &[S], d_fake: &[S], gp: S, gp_weight: S) -> Result<S> {
    if d_real.len() != d_fake.len() || d_real.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "critic batches must be equal and nonempty: {} vs {}",
            d_real.len(),
            d_fake.len()
        )));
    }
    let loss = batch_mean(d_real) - batch_mean(d_fake) + gp_weight * gp;
    if !loss.is_finite() {
        return Err(Error::Divergence(format!("critic loss is {loss}")));
    }
    Ok(loss)
}

/// |mean(d_fake) - mean(d_real)|: a convention-proof Wasserstein curve.
pub fn wasserstein_estimate<S: Scalar>(d_real: &[S], d_fake: &[S]) -> S {
    (batch_mean(d_fake) - batch_mean(d_real)).abs()
}

pub fn batch_mean<S: Scalar>(v: &[S]) -> S {
    v.iter().copied().sum::<S>() / S::from_f64c(v.len() as f64)
}

/// Lipschitz penalty mean((|grad D| - 1)^2) at per-sample random
/// interpolates of real and fake windows. Returns the value only.
pub fn gradient_penalty<S: Scalar>(
    critic: &Critic<S>,
    y_real: &[Array2<S>],
    y_fake: &[Array2<S>],
    rng: &mut impl Rng,
) -> S {
    assert_eq!(y_real.len(), y_fake.len());
    assert!(!y_real.is_empty());
    let m = y_real.len();
    let mut total = S::zero();
    for i in 0..m {
        let interp = gp_interpolate(&y_real[i], &y_fake[i], rng);
        let (_, g) = critic.score_and_input_grad(&interp);
        let norm = g.iter().map(|&v| v * v).sum::<S>().sqrt();
        let diff = norm - S::one();
        total += diff * diff;
    }
    total / S::from_f64c(m as f64)
}

/// As [`gradient_penalty`] but also accumulates `coeff * d(gp)/d(theta)` into
/// the critic's parameter gradients (the second-order path).
pub fn gradient_penalty_backward<S: Scalar>(
    critic: &mut Critic<S>,
    y_real: &[Array2<S>],
    y_fake: &[Array2<S>],
    rng: &mut impl Rng,
    coeff: S,
) -> S {
    assert_eq!(y_real.len(), y_fake.len());
    assert!(!y_real.is_empty());
    let m = y_real.len();
    let mut total = S::zero();
    for i in 0..m {
        let interp = gp_interpolate(&y_real[i], &y_fake[i], rng);
        let (_, g) = critic.score_and_input_grad(&interp);
        let norm = g.iter().map(|&v| v * v).sum::<S>().sqrt();
        let diff = norm - S::one();
        total += diff * diff;
        // d/dtheta (|g|-1)^2 = (2(|g|-1)/|g|) * d/dtheta (u_dir . g),
        // with u_dir a frozen copy of g
        let safe_norm = norm.max(S::from_f64c(1e-12));
        let scale = coeff * S::from_f64c(2.0) * diff / (safe_norm * S::from_f64c(m as f64));
        critic.grad_dot_backward(&interp, &g, scale);
    }
    total / S::from_f64c(m as f64)
}

fn gp_interpolate<S: Scalar>(
    real: &Array2<S>,
    fake: &Array2<S>,
    rng: &mut impl Rng,
) -> Array2<S> {
    let u = S::from_f64c(rng.random_range(0.0..1.0));
    let mut interp = real.mapv(|v| v * u);
    interp.zip_mut_with(fake, |a, &b| *a = *a + (S::one() - u) * b);
    interp
}
