//! Minimal dense/temporal-convolution layers with hand-written gradients.
//!
//! Everything operates on time-major `Array2<S>` (T x C) windows. Layers
//! accumulate parameter gradients into internal buffers; optimizers consume
//! them through the flat [`Net`] interface so checkpointing, transfer and
//! finite-difference checks all see one contiguous parameter vector.

mod adam;
mod conv;
mod linear;
mod stack;

pub use adam::Adam;
pub use conv::Conv1d;
pub use linear::Linear;
pub use stack::{ConvStack, Mlp, MlpCache, StackCache, StackJvpCache};

use ndarray::{Array1, Array2};

use crate::Scalar;

/// Flat parameter access shared by all layers and composite networks.
pub trait Net<S: Scalar> {
    fn num_params(&self) -> usize;
    /// Append parameters, in a fixed order, to `out`.
    fn write_params(&self, out: &mut Vec<S>);
    /// Read parameters back in the same order. Panics on length mismatch.
    fn read_params(&mut self, src: &[S]) -> usize;
    /// Append accumulated gradients in the same order as `write_params`.
    fn write_grads(&self, out: &mut Vec<S>);
    fn zero_grads(&mut self);

    fn params_flat(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(self.num_params());
        self.write_params(&mut v);
        v
    }
    fn grads_flat(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(self.num_params());
        self.write_grads(&mut v);
        v
    }
    fn set_params_flat(&mut self, p: &[S]) {
        let used = self.read_params(p);
        assert_eq!(used, p.len(), "parameter vector length mismatch");
    }
}

/// Mean over the time axis: (T x C) -> C.
pub fn mean_pool<S: Scalar>(x: &Array2<S>) -> Array1<S> {
    let t = S::from_f64c(x.nrows() as f64);
    let mut out = Array1::zeros(x.ncols());
    for row in x.rows() {
        out += &row;
    }
    out.mapv_inplace(|v| v / t);
    out
}

/// Backward of [`mean_pool`]: spread the pooled gradient evenly over time.
pub fn mean_pool_backward<S: Scalar>(g: &Array1<S>, t_len: usize) -> Array2<S> {
    let t = S::from_f64c(t_len as f64);
    let mut out = Array2::zeros((t_len, g.len()));
    for mut row in out.rows_mut() {
        row.assign(&g.mapv(|v| v / t));
    }
    out
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}
