use placenet_autograd::NamedTensor;

/// Adam optimizer state over a flat parameter list (β₁ 0.9, β₂ 0.999,
/// ε 1e-8, bias-corrected moments).
pub(crate) struct Adam {
    lr: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    pub fn new(params: &[NamedTensor], lr: f64) -> Adam {
        Adam {
            lr,
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [NamedTensor], grads: &[Vec<f64>]) {
        assert_eq!(params.len(), grads.len(), "param/grad count mismatch");
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t as i32);
        let c2 = 1.0 - BETA2.powi(self.t as i32);
        for (k, p) in params.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            for i in 0..p.data.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p.data[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        }
    }
}

/// Minimum-validation-loss checkpointing with patience. The initial
/// parameters stand in as the epoch-0 checkpoint so a zero-epoch run is
/// well-defined.
pub(crate) struct EarlyStop {
    pub best_val: f64,
    pub best_epoch: usize,
    pub best_params: Vec<NamedTensor>,
    bad: usize,
    patience: usize,
}

impl EarlyStop {
    pub fn new(init: &[NamedTensor], patience: usize) -> EarlyStop {
        EarlyStop {
            best_val: f64::INFINITY,
            best_epoch: 0,
            best_params: init.to_vec(),
            bad: 0,
            patience,
        }
    }

    /// Record the post-update validation loss for `epoch`; true means stop.
    pub fn observe(&mut self, epoch: usize, val_loss: f64, params: &[NamedTensor]) -> bool {
        if val_loss < self.best_val {
            self.best_val = val_loss;
            self.best_epoch = epoch;
            self.best_params = params.to_vec();
            self.bad = 0;
            false
        } else {
            self.bad += 1;
            self.bad >= self.patience
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descends_a_quadratic() {
        let mut params = vec![NamedTensor {
            name: "x".into(),
            rows: 1,
            cols: 1,
            data: vec![3.0],
        }];
        let mut adam = Adam::new(&params, 0.1);
        for _ in 0..400 {
            let g = vec![vec![2.0 * params[0].data[0]]];
            adam.step(&mut params, &g);
        }
        assert!(params[0].data[0].abs() < 1e-3);
    }

    #[test]
    fn early_stop_keeps_argmin_checkpoint() {
        let p = |v: f64| {
            vec![NamedTensor {
                name: "x".into(),
                rows: 1,
                cols: 1,
                data: vec![v],
            }]
        };
        let mut stop = EarlyStop::new(&p(0.0), 2);
        assert!(!stop.observe(1, 0.9, &p(1.0)));
        assert!(!stop.observe(2, 0.4, &p(2.0)));
        assert!(!stop.observe(3, 0.5, &p(3.0)));
        assert!(stop.observe(4, 0.6, &p(4.0)));
        assert_eq!(stop.best_epoch, 2);
        assert_eq!(stop.best_params[0].data[0], 2.0);
    }
}
