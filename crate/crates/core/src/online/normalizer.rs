use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};

use crate::symmetry::TransformSet;

const EPS: f64 = 1e-8;

/// Running per-dimension mean and variance (parallel-merge update).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMeanStd {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
}

impl RunningMeanStd {
    pub fn new(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            var: vec![1.0; width],
            count: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, rows: ArrayView2<f64>) {
        let n = rows.nrows() as f64;
        if n == 0.0 {
            return;
        }
        let batch_mean = rows.mean_axis(Axis(0)).expect("non-empty");
        let batch_var = rows.var_axis(Axis(0), 0.0);
        let total = self.count + n;
        for d in 0..self.mean.len() {
            let delta = batch_mean[d] - self.mean[d];
            let m2 = self.var[d] * self.count + batch_var[d] * n + delta * delta * self.count * n / total;
            self.mean[d] += delta * n / total;
            self.var[d] = m2 / total;
        }
        self.count = total;
    }

    pub fn update_scalars(&mut self, values: &[f64]) {
        let view = ArrayView2::from_shape((values.len(), 1), values).expect("column");
        self.update(view);
    }

    pub fn std(&self, d: usize) -> f64 {
        (self.var[d] + EPS).sqrt()
    }

    pub fn normalize_rows(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        let mut out = rows.to_owned();
        for mut row in out.rows_mut() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[d]) / self.std(d);
            }
        }
        out
    }

    pub fn normalize_scalar(&self, v: f64) -> f64 {
        (v - self.mean[0]) / self.std(0)
    }

    pub fn denormalize_scalar(&self, v: f64) -> f64 {
        v * self.std(0) + self.mean[0]
    }
}

/// Observation normalizer. With a transform set, every batch is pooled with
/// all its transformed copies {T_j(o)} so symmetric slots share statistics
/// and normalization commutes with the transforms.
#[derive(Debug, Clone)]
pub struct ObsNormalizer {
    pub stats: RunningMeanStd,
    pub enabled: bool,
    pool: Option<Arc<TransformSet>>,
}

impl ObsNormalizer {
    pub fn new(width: usize, enabled: bool, pool: Option<Arc<TransformSet>>) -> Self {
        Self {
            stats: RunningMeanStd::new(width),
            enabled,
            pool,
        }
    }

    pub fn is_pooled(&self) -> bool {
        self.pool.is_some()
    }

    pub fn update(&mut self, rows: ArrayView2<f64>) {
        if !self.enabled {
            return;
        }
        match &self.pool {
            Some(set) => {
                let views: Vec<Array2<f64>> = (0..set.n()).map(|j| set.obs(j).apply_rows(rows)).collect();
                let refs: Vec<ArrayView2<f64>> = views.iter().map(|v| v.view()).collect();
                let pooled = ndarray::concatenate(Axis(0), &refs).expect("same width");
                self.stats.update(pooled.view());
            }
            None => self.stats.update(rows),
        }
    }

    pub fn normalize(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        if self.enabled {
            self.stats.normalize_rows(rows)
        } else {
            rows.to_owned()
        }
    }
}
