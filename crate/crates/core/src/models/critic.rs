use ndarray::{Array1, Array2};
use rand::Rng;

use crate::nn::{mean_pool, mean_pool_backward, ConvStack, Linear, Net, StackCache};
use crate::Scalar;

/// Wasserstein critic: temporal convolution body -> mean pool -> linear.
///
/// `body: None` gives a purely linear critic (pool then affine), used by the
/// Lipschitz-penalty closed-form tests.
#[derive(Clone)]
pub struct Critic<S> {
    pub body: Option<ConvStack<S>>,
    pub head: Linear<S>,
}

pub struct CriticCache<S> {
    body: Option<StackCache<S>>,
    t_len: usize,
    pooled: Array1<S>,
}

impl<S: Scalar> Critic<S> {
    pub fn new(
        c_motion: usize,
        d_hidden: usize,
        n_layers: usize,
        kernel: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let body = ConvStack::new(c_motion, d_hidden, d_hidden, n_layers, kernel, true, rng);
        let head = Linear::new(d_hidden, 1, rng);
        Critic { body: Some(body), head }
    }

    /// Affine critic D(y) = w . meanpool(y) + b, no hidden layers.
    pub fn linear(c_motion: usize, rng: &mut impl Rng) -> Self {
        Critic {
            body: None,
            head: Linear::new(c_motion, 1, rng),
        }
    }

    pub fn score(&self, y: &Array2<S>) -> S {
        self.forward_cache(y).0
    }

    pub fn forward_cache(&self, y: &Array2<S>) -> (S, CriticCache<S>) {
        let t_len = y.nrows();
        let (body_cache, pooled) = match &self.body {
            Some(b) => {
                let c = b.forward_cache(y);
                let pooled = mean_pool(c.acts.last().unwrap());
                (Some(c), pooled)
            }
            None => (None, mean_pool(y)),
        };
        let s = self.head.forward(&pooled)[0];
        (s, CriticCache { body: body_cache, t_len, pooled })
    }

    /// Accumulate parameter gradients of `g * D(y)`.
    pub fn backward(&mut self, cache: &CriticCache<S>, g: S) -> Array2<S> {
        let gs = Array1::from_elem(1, g);
        let g_pooled = self.head.backward(&cache.pooled, &gs);
        let g_feat = mean_pool_backward(&g_pooled, cache.t_len);
        match (&mut self.body, &cache.body) {
            (Some(b), Some(c)) => b.backward(c, &g_feat),
            _ => g_feat,
        }
    }

    /// Gradient of `g * D(y)` w.r.t. the input, parameters untouched.
    pub fn input_grad(&self, cache: &CriticCache<S>, g: S) -> Array2<S> {
        let gs = Array1::from_elem(1, g);
        let g_pooled = self.head.input_grad(&gs);
        let g_feat = mean_pool_backward(&g_pooled, cache.t_len);
        match (&self.body, &cache.body) {
            (Some(b), Some(c)) => b.input_grad(c, &g_feat),
            _ => g_feat,
        }
    }

    /// Input gradient of D at `y` together with the score.
    pub fn score_and_input_grad(&self, y: &Array2<S>) -> (S, Array2<S>) {
        let (s, cache) = self.forward_cache(y);
        let g = self.input_grad(&cache, S::one());
        (s, g)
    }

    /// Accumulate `coeff * d/dtheta [ u . grad_y D(y) ]` into the parameter
    /// gradients. `u` is treated as a constant direction. This is the
    /// second-order path needed to train with a gradient penalty.
    pub fn grad_dot_backward(&mut self, y: &Array2<S>, u: &Array2<S>, coeff: S) {
        // h(theta) = u . grad_y D = forward-tangent of D at y in direction u.
        match self.body.take() {
            Some(mut body) => {
                let cache = body.forward_jvp(y, u);
                let t_pooled = mean_pool(cache.tans.last().unwrap());
                // h = w . t_pooled; adjoints at the head:
                //   d h / d w = t_pooled (tangent path); primal pooled path has
                //   zero adjoint at the output but feeds the body activations.
                for (gw, &tp) in self.head.gw.row_mut(0).iter_mut().zip(t_pooled.iter()) {
                    *gw += coeff * tp;
                }
                let w_row = self.head.w.row(0).to_owned();
                let g_tan = mean_pool_backward(&w_row.mapv(|v| v * coeff), cache.tans.last().unwrap().nrows());
                let g_act = Array2::zeros(g_tan.raw_dim());
                body.jvp_backward(&cache, &g_act, &g_tan);
                self.body = Some(body);
            }
            None => {
                // h = w . meanpool(u): gradient w.r.t. w is meanpool(u).
                let pu = mean_pool(u);
                for (gw, &v) in self.head.gw.row_mut(0).iter_mut().zip(pu.iter()) {
                    *gw += coeff * v;
                }
            }
        }
    }
}

impl<S: Scalar> Net<S> for Critic<S> {
    fn num_params(&self) -> usize {
        self.body.as_ref().map_or(0, |b| b.num_params()) + self.head.num_params()
    }
    fn write_params(&self, out: &mut Vec<S>) {
        if let Some(b) = &self.body {
            b.write_params(out);
        }
        self.head.write_params(out);
    }
    fn read_params(&mut self, src: &[S]) -> usize {
        let mut off = 0;
        if let Some(b) = &mut self.body {
            off = b.read_params(src);
        }
        off + self.head.read_params(&src[off..])
    }
    fn write_grads(&self, out: &mut Vec<S>) {
        if let Some(b) = &self.body {
            b.write_grads(out);
        }
        self.head.write_grads(out);
    }
    fn zero_grads(&mut self) {
        if let Some(b) = &mut self.body {
            b.zero_grads();
        }
        self.head.zero_grads();
    }
}
