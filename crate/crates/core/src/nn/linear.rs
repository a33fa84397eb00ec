use ndarray::{Array1, Array2};
use rand::Rng;

use super::Net;
use crate::Scalar;

/// Fully connected layer on vectors: y = W x + b.
#[derive(Debug, Clone)]
pub struct Linear<S> {
    /// (d_out, d_in)
    pub w: Array2<S>,
    pub b: Array1<S>,
    pub gw: Array2<S>,
    pub gb: Array1<S>,
}

impl<S: Scalar> Linear<S> {
    pub fn new(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        let w = Array2::from_shape_fn((d_out, d_in), |_| {
            S::from_f64c(rng.random_range(-bound..bound))
        });
        let b = Array1::from_shape_fn(d_out, |_| S::from_f64c(rng.random_range(-bound..bound)));
        let gw = Array2::zeros(w.raw_dim());
        let gb = Array1::zeros(b.raw_dim());
        Linear { w, b, gw, gb }
    }

    pub fn d_in(&self) -> usize {
        self.w.ncols()
    }
    pub fn d_out(&self) -> usize {
        self.w.nrows()
    }

    pub fn forward(&self, x: &Array1<S>) -> Array1<S> {
        assert_eq!(x.len(), self.d_in(), "linear input size mismatch");
        let mut y = self.b.clone();
        for (o, mut_y) in y.iter_mut().enumerate() {
            for i in 0..x.len() {
                *mut_y += self.w[[o, i]] * x[i];
            }
        }
        y
    }

    pub fn forward_no_bias(&self, x: &Array1<S>) -> Array1<S> {
        let mut y = self.forward(x);
        y -= &self.b;
        y
    }

    pub fn backward(&mut self, x: &Array1<S>, gy: &Array1<S>) -> Array1<S> {
        self.backward_impl(x, gy, true)
    }

    pub fn backward_no_bias(&mut self, x: &Array1<S>, gy: &Array1<S>) -> Array1<S> {
        self.backward_impl(x, gy, false)
    }

    fn backward_impl(&mut self, x: &Array1<S>, gy: &Array1<S>, with_bias: bool) -> Array1<S> {
        let mut gx = Array1::zeros(x.len());
        for o in 0..self.d_out() {
            let g = gy[o];
            if with_bias {
                self.gb[o] += g;
            }
            for i in 0..x.len() {
                self.gw[[o, i]] += g * x[i];
                gx[i] += g * self.w[[o, i]];
            }
        }
        gx
    }

    pub fn input_grad(&self, gy: &Array1<S>) -> Array1<S> {
        let mut gx = Array1::zeros(self.d_in());
        for o in 0..self.d_out() {
            for i in 0..self.d_in() {
                gx[i] += gy[o] * self.w[[o, i]];
            }
        }
        gx
    }
}

impl<S: Scalar> Net<S> for Linear<S> {
    fn num_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
    fn write_params(&self, out: &mut Vec<S>) {
        out.extend(self.w.iter().copied());
        out.extend(self.b.iter().copied());
    }
    fn read_params(&mut self, src: &[S]) -> usize {
        let nw = self.w.len();
        let nb = self.b.len();
        assert!(src.len() >= nw + nb, "linear parameter slice too short");
        for (dst, s) in self.w.iter_mut().zip(&src[..nw]) {
            *dst = *s;
        }
        for (dst, s) in self.b.iter_mut().zip(&src[nw..nw + nb]) {
            *dst = *s;
        }
        nw + nb
    }
    fn write_grads(&self, out: &mut Vec<S>) {
        out.extend(self.gw.iter().copied());
        out.extend(self.gb.iter().copied());
    }
    fn zero_grads(&mut self) {
        self.gw.fill(S::zero());
        self.gb.fill(S::zero());
    }
}
