use crate::Scalar;

/// Adam on a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    pub t: u64,
    pub m: Vec<S>,
    pub v: Vec<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(n_params: usize, lr: S) -> Self {
        Adam {
            lr,
            beta1: S::from_f64c(0.9),
            beta2: S::from_f64c(0.999),
            eps: S::from_f64c(1e-8),
            t: 0,
            m: vec![S::zero(); n_params],
            v: vec![S::zero(); n_params],
        }
    }

    pub fn step(&mut self, params: &mut [S], grads: &[S]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let t = S::from_f64c(self.t as f64);
        let bc1 = S::one() - self.beta1.powf(t);
        let bc2 = S::one() - self.beta2.powf(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (S::one() - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (S::one() - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] = params[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
