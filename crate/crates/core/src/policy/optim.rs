use serde::{Deserialize, Serialize};

/// Adam in ascent form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// Moves `x` along `grad`.
    pub fn ascend(&mut self, x: &mut [f64], grad: &[f64]) {
        assert_eq!(x.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..x.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            x[i] += self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn climbs_a_concave_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.05);
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|v| -2.0 * (v - 1.0)).collect();
            opt.ascend(&mut x, &g);
        }
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-3), "{x:?}");
    }

    #[test]
    fn zero_rate_is_a_no_op() {
        let mut x = vec![0.5, 0.25];
        let mut opt = Adam::new(2, 0.0);
        opt.ascend(&mut x, &[10.0, -3.0]);
        assert_eq!(x, vec![0.5, 0.25]);
    }
}
