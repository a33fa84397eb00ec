use ndarray::{Array1, Array2, Array3};
use rand::Rng;

use super::Net;
use crate::Scalar;

/// 1-D temporal convolution, stride 1, zero "same" padding (odd kernel).
///
/// Input and output are (T x C) time-major; the time length is preserved.
#[derive(Debug, Clone)]
pub struct Conv1d<S> {
    /// (c_out, c_in, k)
    pub w: Array3<S>,
    pub b: Array1<S>,
    pub gw: Array3<S>,
    pub gb: Array1<S>,
}

impl<S: Scalar> Conv1d<S> {
    pub fn new(c_in: usize, c_out: usize, k: usize, rng: &mut impl Rng) -> Self {
        assert!(k % 2 == 1, "kernel length must be odd for same padding");
        let bound = 1.0 / ((c_in * k) as f64).sqrt();
        let w = Array3::from_shape_fn((c_out, c_in, k), |_| {
            S::from_f64c(rng.random_range(-bound..bound))
        });
        let b = Array1::from_shape_fn(c_out, |_| S::from_f64c(rng.random_range(-bound..bound)));
        let gw = Array3::zeros(w.raw_dim());
        let gb = Array1::zeros(b.raw_dim());
        Conv1d { w, b, gw, gb }
    }

    pub fn c_in(&self) -> usize {
        self.w.shape()[1]
    }
    pub fn c_out(&self) -> usize {
        self.w.shape()[0]
    }
    pub fn kernel(&self) -> usize {
        self.w.shape()[2]
    }

    /// Weights flattened to (c_out, k*c_in) with the tap index major, matching
    /// the column order [`im2col`] produces.
    fn w_col(&self) -> Array2<S> {
        let (c_out, c_in, k) = self.w.dim();
        self.w
            .view()
            .permuted_axes([0, 2, 1])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((c_out, k * c_in))
            .unwrap()
    }

    /// Unfold (T x c_in) into (T x k*c_in) patch rows; out-of-range taps stay zero.
    fn im2col(x: &Array2<S>, k: usize) -> Array2<S> {
        let (t_len, c_in) = x.dim();
        let pad = k / 2;
        let mut cols = Array2::zeros((t_len, k * c_in));
        for t in 0..t_len {
            for kk in 0..k {
                let src = t as isize + kk as isize - pad as isize;
                if src < 0 || src >= t_len as isize {
                    continue;
                }
                cols.slice_mut(ndarray::s![t, kk * c_in..(kk + 1) * c_in])
                    .assign(&x.row(src as usize));
            }
        }
        cols
    }

    pub fn forward(&self, x: &Array2<S>) -> Array2<S> {
        let (_, c_in) = x.dim();
        assert_eq!(c_in, self.c_in(), "conv1d input channel mismatch");
        let mut y = Self::im2col(x, self.kernel()).dot(&self.w_col().t());
        for mut row in y.rows_mut() {
            row += &self.b;
        }
        y
    }

    /// Same linear map without the bias; used for tangent propagation.
    pub fn forward_no_bias(&self, x: &Array2<S>) -> Array2<S> {
        let mut y = self.forward(x);
        for mut row in y.rows_mut() {
            row -= &self.b;
        }
        y
    }

    /// Accumulate parameter gradients and return the input gradient.
    pub fn backward(&mut self, x: &Array2<S>, gy: &Array2<S>) -> Array2<S> {
        self.backward_impl(x, gy, true)
    }

    /// Backward of the bias-free map (tangent path of a JVP).
    pub fn backward_no_bias(&mut self, x: &Array2<S>, gy: &Array2<S>) -> Array2<S> {
        self.backward_impl(x, gy, false)
    }

    /// Fold (T x k*c_in) patch-row gradients back onto the input grid.
    fn col2im(g_cols: &Array2<S>, t_len: usize, c_in: usize, k: usize) -> Array2<S> {
        let pad = k / 2;
        let mut gx = Array2::zeros((t_len, c_in));
        for t in 0..t_len {
            for kk in 0..k {
                let src = t as isize + kk as isize - pad as isize;
                if src < 0 || src >= t_len as isize {
                    continue;
                }
                let mut row = gx.row_mut(src as usize);
                row += &g_cols.slice(ndarray::s![t, kk * c_in..(kk + 1) * c_in]);
            }
        }
        gx
    }

    fn backward_impl(&mut self, x: &Array2<S>, gy: &Array2<S>, with_bias: bool) -> Array2<S> {
        let (t_len, c_in) = x.dim();
        let k = self.kernel();
        let c_out = self.c_out();
        assert_eq!(gy.dim(), (t_len, c_out), "conv1d grad shape mismatch");
        let cols = Self::im2col(x, k);
        let prod = gy
            .t()
            .dot(&cols)
            .into_shape_with_order((c_out, k, c_in))
            .unwrap();
        let mut gw_perm = self.gw.view_mut().permuted_axes([0, 2, 1]);
        gw_perm += &prod;
        if with_bias {
            self.gb += &gy.sum_axis(ndarray::Axis(0));
        }
        Self::col2im(&gy.dot(&self.w_col()), t_len, c_in, k)
    }

    /// Input gradient only; parameters untouched (frozen network paths).
    pub fn input_grad(&self, gy: &Array2<S>) -> Array2<S> {
        let (t_len, _) = gy.dim();
        let k = self.kernel();
        Self::col2im(&gy.dot(&self.w_col()), t_len, self.c_in(), k)
    }
}

impl<S: Scalar> Net<S> for Conv1d<S> {
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
        assert!(src.len() >= nw + nb, "conv1d parameter slice too short");
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
