use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// 0.5·ln(2π)
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Default admissible range for log σ.
pub const LOG_STD_BOUNDS: (f64, f64) = (-5.0, 2.0);

/// Diagonal Gaussian with a state-independent log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub bounds: (f64, f64),
}

impl GaussianHead {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Self {
        Self {
            mean,
            log_std,
            bounds: LOG_STD_BOUNDS,
        }
    }

    pub fn with_bounds(mut self, bounds: (f64, f64)) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn clamped_log_std(&self) -> Vec<f64> {
        self.log_std.iter().map(|&l| clamp_log_std(l, self.bounds)).collect()
    }

    pub fn log_prob(&self, action: &[f64]) -> f64 {
        log_prob(&self.mean, &self.clamped_log_std(), action)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(self.clamped_log_std())
            .map(|(&m, l)| {
                let eps: f64 = StandardNormal.sample(rng);
                m + l.exp() * eps
            })
            .collect()
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.clamped_log_std())
    }
}

pub fn clamp_log_std(log_std: f64, bounds: (f64, f64)) -> f64 {
    log_std.clamp(bounds.0, bounds.1)
}

/// Σ_d [−½((a_d−μ_d)/σ_d)² − log σ_d − ½ log 2π]
pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &l), &a)| {
            let z = (a - m) * (-l).exp();
            -0.5 * z * z - l - HALF_LN_2PI
        })
        .sum()
}

/// Gradients of the log density w.r.t. the mean and log σ, scaled by `scale`.
pub fn log_prob_grads(mean: &[f64], log_std: &[f64], action: &[f64], scale: f64, d_mean: &mut [f64], d_log_std: &mut [f64]) {
    for d in 0..mean.len() {
        let inv_var = (-2.0 * log_std[d]).exp();
        let diff = action[d] - mean[d];
        d_mean[d] += scale * diff * inv_var;
        d_log_std[d] += scale * (diff * diff * inv_var - 1.0);
    }
}

pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|l| l + 0.5 + HALF_LN_2PI).sum()
}
