//! Kohonen self-organizing map on a rectangular lattice of 3D weights.
//!
//! The map is used twice: a large grid evens out the density and size of a
//! raw cloud, and a small grid condenses the result into skeleton key points.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{principal_axes, Point3, PointCloud};
use crate::{Error, Result};

/// `rows × cols` lattice of weight vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SomGrid {
    rows: usize,
    cols: usize,
    weights: Vec<Point3>,
    epochs_trained: usize,
}

impl SomGrid {
    pub fn from_weights(rows: usize, cols: usize, weights: Vec<Point3>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams("grid dimensions must be at least 1".into()));
        }
        if weights.len() != rows * cols {
            return Err(Error::SizeMismatch {
                left: weights.len(),
                right: rows * cols,
            });
        }
        Ok(SomGrid {
            rows,
            cols,
            weights,
            epochs_trained: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[Point3] {
        &self.weights
    }

    pub fn node(&self, row: usize, col: usize) -> &Point3 {
        &self.weights[row * self.cols + col]
    }

    pub fn epochs_trained(&self) -> usize {
        self.epochs_trained
    }

    /// Best matching unit: the closest node, lowest row-major index on ties.
    pub fn bmu(&self, sample: &Point3) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, w) in self.weights.iter().enumerate() {
            let d2 = (w - sample).norm_squared();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        best
    }

    /// Mean distance from each sample to its BMU.
    pub fn quantization_error(&self, samples: &[Point3]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples
            .iter()
            .map(|p| (self.weights[self.bmu(p)] - p).norm())
            .sum::<f64>()
            / samples.len() as f64
    }
}

/// Lays the grid out on the cloud's principal plane: columns along the first
/// principal axis, rows along the second, each spanning ±2 standard deviations
/// about the centroid.
pub fn init_grid(cloud: &PointCloud, rows: usize, cols: usize) -> Result<SomGrid> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParams("grid dimensions must be at least 1".into()));
    }
    let pa = principal_axes(cloud.points()).ok_or(Error::EmptyCloud)?;
    let sd = pa.std_devs();
    if rows * cols > 1 && !(sd[0] > 0.0) {
        return Err(Error::DegenerateCloud);
    }
    let spread = |i: usize, n: usize| {
        if n == 1 {
            0.0
        } else {
            -2.0 + 4.0 * i as f64 / (n - 1) as f64
        }
    };
    let mut weights = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let w = pa.centroid + pa.axes[0] * (spread(c, cols) * sd[0]) + pa.axes[1] * (spread(r, rows) * sd[1]);
            weights.push(w);
        }
    }
    SomGrid::from_weights(rows, cols, weights)
}

/// Learning-rate and neighborhood-radius schedule expressed by endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SomSchedule {
    pub epochs: usize,
    pub learning_rate_initial: f64,
    pub learning_rate_final: f64,
    /// Lattice units; `None` means half the larger grid dimension.
    pub radius_initial: Option<f64>,
    pub radius_final: f64,
}

impl SomSchedule {
    pub fn with_epochs(epochs: usize) -> Self {
        SomSchedule {
            epochs,
            learning_rate_initial: 0.5,
            learning_rate_final: 0.01,
            radius_initial: None,
            radius_final: 0.5,
        }
    }
}

/// Training parameters. Decay constants are in iterations (one iteration per sample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SomParams {
    pub learning_rate: f64,
    pub learning_rate_decay: f64,
    pub radius: f64,
    pub radius_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

fn decay_constant(initial: f64, last: f64, iterations: f64) -> f64 {
    if last > 0.0 && initial > last {
        iterations / (initial / last).ln()
    } else {
        f64::INFINITY
    }
}

impl SomParams {
    /// Exponential decay constants chosen so the rates reach the schedule's
    /// final values at the end of training on `samples` points.
    pub fn scheduled(grid: &SomGrid, samples: usize, schedule: &SomSchedule, seed: u64) -> Self {
        let radius = schedule
            .radius_initial
            .unwrap_or(grid.rows().max(grid.cols()) as f64 / 2.0);
        let total = (schedule.epochs * samples.max(1)) as f64;
        SomParams {
            learning_rate: schedule.learning_rate_initial,
            learning_rate_decay: decay_constant(schedule.learning_rate_initial, schedule.learning_rate_final, total),
            radius,
            radius_decay: decay_constant(radius, schedule.radius_final, total),
            epochs: schedule.epochs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParams("initial learning rate must lie in (0, 1]".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParams("initial neighborhood radius must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParams("epochs must be at least 1".into()));
        }
        if !(self.learning_rate_decay > 0.0) || !(self.radius_decay > 0.0) {
            return Err(Error::InvalidParams("decay constants must be positive".into()));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, iteration: u64) -> f64 {
        self.learning_rate * (-(iteration as f64) / self.learning_rate_decay).exp()
    }

    pub fn radius_at(&self, iteration: u64) -> f64 {
        self.radius * (-(iteration as f64) / self.radius_decay).exp()
    }
}

/// One weight update, `w + θ·lr·(p − w)`, evaluated as `(1 − a)·w + a·p` so
/// that a full step (`a = 1`) lands exactly on the sample.
#[inline]
pub fn som_step(weight: &Point3, sample: &Point3, theta: f64, learning_rate: f64) -> Point3 {
    let a = theta * learning_rate;
    Point3::from(weight.coords * (1.0 - a) + sample.coords * a)
}

pub fn train(grid: SomGrid, cloud: &PointCloud, params: &SomParams) -> Result<SomGrid> {
    train_observed(grid, cloud, params, |_, _| {})
}

/// Online training. Each epoch visits every point once in a seeded shuffled
/// order; every node moves toward the sample by the learning rate times a
/// Gaussian of its lattice distance to the BMU. `observer` sees the grid after
/// each epoch.
pub fn train_observed(
    mut grid: SomGrid,
    cloud: &PointCloud,
    params: &SomParams,
    mut observer: impl FnMut(usize, &SomGrid),
) -> Result<SomGrid> {
    params.validate()?;
    let samples = cloud.points();
    if samples.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (rows, cols) = (grid.rows, grid.cols);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut row_factor = vec![0.0; rows];
    let mut col_factor = vec![0.0; cols];
    let mut iteration = 0u64;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let p = samples[k];
            let winner = grid.bmu(&p);
            let (wr, wc) = ((winner / cols) as f64, (winner % cols) as f64);
            let lr = params.learning_rate_at(iteration);
            let sigma = params.radius_at(iteration);
            let inv = 1.0 / (2.0 * sigma * sigma);
            // The Gaussian over lattice distance factors into row and column terms.
            for (r, f) in row_factor.iter_mut().enumerate() {
                let d = r as f64 - wr;
                *f = (-d * d * inv).exp();
            }
            for (c, f) in col_factor.iter_mut().enumerate() {
                let d = c as f64 - wc;
                *f = (-d * d * inv).exp();
            }
            for (r, rf) in row_factor.iter().enumerate() {
                for (c, cf) in col_factor.iter().enumerate() {
                    let w = &mut grid.weights[r * cols + c];
                    *w = som_step(w, &p, rf * cf, lr);
                }
            }
            iteration += 1;
        }
        grid.epochs_trained += 1;
        observer(epoch, &grid);
    }
    Ok(grid)
}

/// All node weights in row-major order.
pub fn extract_key_points(grid: &SomGrid) -> PointCloud {
    PointCloud::new(grid.weights.clone())
}
