use ndarray::{Array1, Array2};
use rand::Rng;

use super::{Conv1d, Linear, Net};
use crate::Scalar;

/// Stack of same-padding temporal convolutions with tanh between layers.
///
/// The final layer is linear unless `activate_last` is set (the critic body
/// wants a nonlinearity before pooling, the encoders want a linear head).
#[derive(Debug, Clone)]
pub struct ConvStack<S> {
    pub layers: Vec<Conv1d<S>>,
    pub activate_last: bool,
}

/// Per-layer inputs captured by `forward_cache`; `acts[l]` feeds layer `l`,
/// `acts.last()` is the stack output.
pub struct StackCache<S> {
    pub acts: Vec<Array2<S>>,
}

/// Primal/tangent pairs for the forward-tangent (JVP) pass.
/// `pre_tans[l]` is layer `l`'s tangent after the convolution but before the
/// activation scaling (equal to `tans[l+1]` on linear layers).
pub struct StackJvpCache<S> {
    pub acts: Vec<Array2<S>>,
    pub tans: Vec<Array2<S>>,
    pub pre_tans: Vec<Array2<S>>,
}

impl<S: Scalar> ConvStack<S> {
    pub fn new(
        c_in: usize,
        c_hidden: usize,
        c_out: usize,
        n_layers: usize,
        kernel: usize,
        activate_last: bool,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(n_layers >= 1);
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let ci = if l == 0 { c_in } else { c_hidden };
            let co = if l == n_layers - 1 { c_out } else { c_hidden };
            layers.push(Conv1d::new(ci, co, kernel, rng));
        }
        ConvStack { layers, activate_last }
    }

    pub fn c_in(&self) -> usize {
        self.layers[0].c_in()
    }
    pub fn c_out(&self) -> usize {
        self.layers.last().unwrap().c_out()
    }

    /// Frames a single output sample depends on.
    pub fn receptive_field(&self) -> usize {
        let mut rf = 1usize;
        for l in &self.layers {
            rf += l.kernel() - 1;
        }
        rf
    }

    pub fn forward(&self, x: &Array2<S>) -> Array2<S> {
        self.forward_cache(x).acts.pop().unwrap()
    }

    pub fn forward_cache(&self, x: &Array2<S>) -> StackCache<S> {
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(x.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().unwrap());
            if l < n - 1 || self.activate_last {
                z.mapv_inplace(|v| v.tanh());
            }
            acts.push(z);
        }
        StackCache { acts }
    }

    /// Accumulate parameter gradients; return gradient w.r.t. the input.
    pub fn backward(&mut self, cache: &StackCache<S>, g_out: &Array2<S>) -> Array2<S> {
        let n = self.layers.len();
        let mut g = g_out.clone();
        for l in (0..n).rev() {
            if l < n - 1 || self.activate_last {
                // d tanh(z) = 1 - tanh(z)^2, with tanh(z) = cached output
                let post = &cache.acts[l + 1];
                g.zip_mut_with(post, |gv, &a| *gv = *gv * (S::one() - a * a));
            }
            g = self.layers[l].backward(&cache.acts[l], &g);
        }
        g
    }

    /// Input gradient with parameters frozen.
    pub fn input_grad(&self, cache: &StackCache<S>, g_out: &Array2<S>) -> Array2<S> {
        let n = self.layers.len();
        let mut g = g_out.clone();
        for l in (0..n).rev() {
            if l < n - 1 || self.activate_last {
                let post = &cache.acts[l + 1];
                g.zip_mut_with(post, |gv, &a| *gv = *gv * (S::one() - a * a));
            }
            g = self.layers[l].input_grad(&g);
        }
        g
    }

    /// Forward pass carrying an input-direction tangent `v` alongside the
    /// primal values. Parameters carry no tangent.
    pub fn forward_jvp(&self, x: &Array2<S>, v: &Array2<S>) -> StackJvpCache<S> {
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        let mut tans = Vec::with_capacity(n + 1);
        let mut pre_tans = Vec::with_capacity(n);
        acts.push(x.clone());
        tans.push(v.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().unwrap());
            let mut tz = layer.forward_no_bias(tans.last().unwrap());
            pre_tans.push(tz.clone());
            if l < n - 1 || self.activate_last {
                z.mapv_inplace(|v| v.tanh());
                tz.zip_mut_with(&z, |tv, &a| *tv = *tv * (S::one() - a * a));
            }
            acts.push(z);
            tans.push(tz);
        }
        StackJvpCache { acts, tans, pre_tans }
    }

    /// Reverse pass through the JVP computation: given adjoints of the primal
    /// output and of the tangent output, accumulate parameter gradients.
    /// Needed for the parameter gradient of the gradient penalty.
    pub fn jvp_backward(
        &mut self,
        cache: &StackJvpCache<S>,
        g_out: &Array2<S>,
        g_tan_out: &Array2<S>,
    ) -> (Array2<S>, Array2<S>) {
        let n = self.layers.len();
        let mut ga = g_out.clone();
        let mut gt = g_tan_out.clone();
        for l in (0..n).rev() {
            if l < n - 1 || self.activate_last {
                let post = &cache.acts[l + 1]; // a = tanh(z)
                let tz = &cache.pre_tans[l]; // tangent before activation scaling
                // adjoint w.r.t. z:  (1-a^2) * ga  -  2 a (1-a^2) * tz * gt
                let mut gz = Array2::zeros(ga.raw_dim());
                for ((gz_v, (&a, &tz_v)), (&ga_v, &gt_v)) in gz
                    .iter_mut()
                    .zip(post.iter().zip(tz.iter()))
                    .zip(ga.iter().zip(gt.iter()))
                {
                    let d = S::one() - a * a;
                    *gz_v = d * ga_v - (S::one() + S::one()) * a * d * tz_v * gt_v;
                }
                let gtz = {
                    let mut g = gt.clone();
                    g.zip_mut_with(post, |gv, &a| *gv = *gv * (S::one() - a * a));
                    g
                };
                ga = gz;
                gt = gtz;
            }
            let new_ga = self.layers[l].backward(&cache.acts[l], &ga);
            let new_gt = self.layers[l].backward_no_bias(&cache.tans[l], &gt);
            ga = new_ga;
            gt = new_gt;
        }
        (ga, gt)
    }
}

impl<S: Scalar> Net<S> for ConvStack<S> {
    fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.num_params()).sum()
    }
    fn write_params(&self, out: &mut Vec<S>) {
        for l in &self.layers {
            l.write_params(out);
        }
    }
    fn read_params(&mut self, src: &[S]) -> usize {
        let mut off = 0;
        for l in &mut self.layers {
            off += l.read_params(&src[off..]);
        }
        off
    }
    fn write_grads(&self, out: &mut Vec<S>) {
        for l in &self.layers {
            l.write_grads(out);
        }
    }
    fn zero_grads(&mut self) {
        for l in &mut self.layers {
            l.zero_grads();
        }
    }
}

/// Two-layer perceptron on vectors, tanh hidden activation, linear output.
#[derive(Debug, Clone)]
pub struct Mlp<S> {
    pub l1: Linear<S>,
    pub l2: Linear<S>,
}

pub struct MlpCache<S> {
    pub x: Array1<S>,
    pub h: Array1<S>,
}

impl<S: Scalar> Mlp<S> {
    pub fn new(d_in: usize, d_hidden: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Mlp {
            l1: Linear::new(d_in, d_hidden, rng),
            l2: Linear::new(d_hidden, d_out, rng),
        }
    }

    pub fn forward(&self, x: &Array1<S>) -> Array1<S> {
        let h = self.l1.forward(x).mapv(|v| v.tanh());
        self.l2.forward(&h)
    }

    pub fn forward_cache(&self, x: &Array1<S>) -> (Array1<S>, MlpCache<S>) {
        let h = self.l1.forward(x).mapv(|v| v.tanh());
        let y = self.l2.forward(&h);
        (
            y,
            MlpCache {
                x: x.clone(),
                h,
            },
        )
    }

    pub fn backward(&mut self, cache: &MlpCache<S>, gy: &Array1<S>) -> Array1<S> {
        let mut gh = self.l2.backward(&cache.h, gy);
        gh.zip_mut_with(&cache.h, |gv, &a| *gv = *gv * (S::one() - a * a));
        self.l1.backward(&cache.x, &gh)
    }

    pub fn input_grad(&self, cache: &MlpCache<S>, gy: &Array1<S>) -> Array1<S> {
        let mut gh = self.l2.input_grad(gy);
        gh.zip_mut_with(&cache.h, |gv, &a| *gv = *gv * (S::one() - a * a));
        self.l1.input_grad(&gh)
    }
}

impl<S: Scalar> Net<S> for Mlp<S> {
    fn num_params(&self) -> usize {
        self.l1.num_params() + self.l2.num_params()
    }
    fn write_params(&self, out: &mut Vec<S>) {
        self.l1.write_params(out);
        self.l2.write_params(out);
    }
    fn read_params(&mut self, src: &[S]) -> usize {
        let mut off = self.l1.read_params(src);
        off += self.l2.read_params(&src[off..]);
        off
    }
    fn write_grads(&self, out: &mut Vec<S>) {
        self.l1.write_grads(out);
        self.l2.write_grads(out);
    }
    fn zero_grads(&mut self) {
        self.l1.zero_grads();
        self.l2.zero_grads();
    }
}
