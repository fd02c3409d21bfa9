//! AMSGrad with bias correction and the cosine learning-rate modulation
//! with warm restarts and geometric decay.

/// AMSGrad state for one parameter group.
#[derive(Clone, Debug)]
pub struct AmsGrad {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    mean: Vec<f64>,
    variance: Vec<f64>,
    variance_max: Vec<f64>,
}

impl AmsGrad {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            mean: vec![0.0; len],
            variance: vec![0.0; len],
            variance_max: vec![0.0; len],
        }
    }

    /// Plain Adam update (no running maximum), for experiments.
    pub fn step_adam(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.mean[i] = self.beta1 * self.mean[i] + (1.0 - self.beta1) * g;
            self.variance[i] = self.beta2 * self.variance[i] + (1.0 - self.beta2) * g * g;
            let denom = (self.variance[i] / bc2).sqrt() + self.epsilon;
            params[i] -= lr * (self.mean[i] / bc1) / denom;
        }
    }

    /// One update of `params` by `grads` at learning rate `lr`; first and
    /// second moments are bias-corrected, the second moment enters through
    /// its running maximum.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.mean.len());
        assert_eq!(grads.len(), self.mean.len());
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.mean[i] = self.beta1 * self.mean[i] + (1.0 - self.beta1) * g;
            self.variance[i] = self.beta2 * self.variance[i] + (1.0 - self.beta2) * g * g;
            self.variance_max[i] = self.variance_max[i].max(self.variance[i]);
            let denom = (self.variance_max[i] / bc2).sqrt() + self.epsilon;
            params[i] -= lr * (self.mean[i] / bc1) / denom;
        }
    }
}

/// Learning-rate schedule: cosine modulation between `alpha_min` and
/// `alpha_max` with period `2 M`, decayed geometrically per epoch.
#[derive(Clone, Copy, Debug)]
pub struct LrSchedule {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Half period `M`.
    pub half_period: u32,
    /// Geometric decay per epoch.
    pub gamma: f64,
    /// Reset the cosine phase every period (`epoch mod 2M`); disabling it
    /// runs a single ever-slowing cosine instead.
    pub restart: bool,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            alpha_min: 1.5e-3,
            alpha_max: 1.5e-2,
            half_period: 50,
            gamma: 0.999,
            restart: true,
        }
    }
}

impl LrSchedule {
    pub fn rate(&self, epoch: u32) -> f64 {
        let m = if self.restart {
            (epoch % (2 * self.half_period)) as f64
        } else {
            epoch as f64
        };
        let cosine = 0.5
            * (self.alpha_max - self.alpha_min)
            * (1.0 + (std::f64::consts::PI * m / self.half_period as f64).cos());
        self.gamma.powi(epoch as i32) * (self.alpha_min + cosine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let s = LrSchedule::default();
        assert!((s.rate(0) - s.alpha_max).abs() < 1e-15);
        let at_m = s.rate(s.half_period);
        assert!((at_m - s.gamma.powi(s.half_period as i32) * s.alpha_min).abs() < 1e-12);
    }

    #[test]
    fn schedule_is_monotone_within_each_half_period_up_to_decay() {
        let s = LrSchedule::default();
        for epoch in 0..s.half_period {
            let undecayed = |e: u32| s.rate(e) / s.gamma.powi(e as i32);
            assert!(undecayed(epoch + 1) <= undecayed(epoch) + 1e-15);
        }
        for epoch in s.half_period..(2 * s.half_period - 1) {
            let undecayed = |e: u32| s.rate(e) / s.gamma.powi(e as i32);
            assert!(undecayed(epoch + 1) >= undecayed(epoch) - 1e-15);
        }
    }

    #[test]
    fn amsgrad_descends_a_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = AmsGrad::new(2);
        for _ in 0..2000 {
            let g: Vec<f64> = x.iter().map(|&v| 2.0 * v).collect();
            opt.step(&mut x, &g, 1e-2);
        }
        assert!(x[0].abs() < 1e-3 && x[1].abs() < 1e-3, "{x:?}");
    }

    #[test]
    fn amsgrad_second_moment_never_decreases() {
        let mut x = vec![1.0];
        let mut opt = AmsGrad::new(1);
        let mut prev = 0.0;
        for k in 0..100 {
            let g = [if k % 2 == 0 { 5.0 } else { 0.1 }];
            opt.step(&mut x, &g, 1e-3);
            assert!(opt.variance_max[0] >= prev);
            prev = opt.variance_max[0];
        }
    }
}
