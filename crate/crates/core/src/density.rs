//! Gaussian kernel density estimates over absolute torque pairs, served from
//! a precomputed log-density lookup grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ContactState, TorqueSample};

pub const DEFAULT_GRID_RESOLUTION: usize = 200;
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;
/// Grid bounds extend this many bandwidths past the extreme training points.
pub const GRID_MARGIN_BANDWIDTHS: f64 = 3.0;

const AXIS_NAMES: [&str; 2] = ["knee", "wheel"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension must be at least 1")]
    NoDimensions,
    #[error("expected {expected} standard deviations, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate data: zero or non-finite spread on the {axis} axis")]
    DegenerateAxis { axis: &'static str },
    #[error("sample {index} is not a finite non-negative torque pair")]
    InvalidSample { index: usize },
    #[error("grid resolution must be at least 2, got {0}")]
    InvalidResolution(usize),
    #[error("density floor must be positive and finite, got {0}")]
    InvalidFloor(f64),
    #[error("malformed model: {0}")]
    Malformed(String),
}

/// How the kernel bandwidth is derived from the data spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    /// One scalar bandwidth from Scott's rule with the geometric-mean stddev.
    #[default]
    ScottIsotropic,
    /// Scott's rule applied per axis.
    ScottDiagonal,
}

/// How lookups between lattice nodes are computed (always in log space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Bilinear,
    /// Catmull-Rom cubic convolution over the 4×4 surrounding nodes.
    #[default]
    Bicubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub grid_resolution: usize,
    pub density_floor: f64,
    pub bandwidth: BandwidthRule,
    pub interpolation: Interpolation,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            density_floor: DEFAULT_DENSITY_FLOOR,
            bandwidth: BandwidthRule::ScottIsotropic,
            interpolation: Interpolation::Bicubic,
        }
    }
}

/// Scott's rule of thumb: `n^(-1/(d+4))` times the geometric mean of the
/// marginal standard deviations.
pub fn scott_bandwidth(n: usize, d: usize, stddevs: &[f64]) -> Result<f64, DensityError> {
    if n < 2 {
        return Err(DensityError::TooFewSamples(n));
    }
    if d == 0 {
        return Err(DensityError::NoDimensions);
    }
    if stddevs.len() != d {
        return Err(DensityError::DimensionMismatch {
            expected: d,
            actual: stddevs.len(),
        });
    }
    if let Some(axis) = stddevs.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(DensityError::DegenerateAxis {
            axis: AXIS_NAMES.get(axis).copied().unwrap_or("unnamed"),
        });
    }
    let mean_log = stddevs.iter().map(|s| s.ln()).sum::<f64>() / d as f64;
    Ok((n as f64).powf(-1.0 / (d as f64 + 4.0)) * mean_log.exp())
}

fn sample_stddev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Axis-aligned lattice bounds in Nm, `[min, max]` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub knee: [f64; 2],
    pub wheel: [f64; 2],
}

impl GridBounds {
    fn axis(&self, axis: usize) -> [f64; 2] {
        if axis == 0 {
            self.knee
        } else {
            self.wheel
        }
    }

    pub fn contains(&self, m: &TorqueSample) -> bool {
        (self.knee[0]..=self.knee[1]).contains(&m.knee)
            && (self.wheel[0]..=self.wheel[1]).contains(&m.wheel)
    }
}

/// A fitted Gaussian KDE for one contact state plus its lookup grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    state: ContactState,
    /// Kernel bandwidth per axis (equal for the isotropic rule).
    bandwidth: [f64; 2],
    bounds: GridBounds,
    resolution: usize,
    density_floor: f64,
    #[serde(default)]
    interpolation: Interpolation,
    sample_count: usize,
    /// Row-major `resolution × resolution` log-densities, rows along the knee axis.
    log_density: Vec<f64>,
    points: Vec<TorqueSample>,
}

impl KdeModel {
    pub fn state(&self) -> ContactState {
        self.state
    }

    /// Knee-axis bandwidth; the scalar bandwidth under the isotropic rule.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth[0]
    }

    pub fn bandwidths(&self) -> [f64; 2] {
        self.bandwidth
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn density_floor(&self) -> f64 {
        self.density_floor
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn points(&self) -> &[TorqueSample] {
        &self.points
    }

    pub fn log_density_grid(&self) -> &[f64] {
        &self.log_density
    }

    fn step(&self, axis: usize) -> f64 {
        let [lo, hi] = self.bounds.axis(axis);
        (hi - lo) / (self.resolution - 1) as f64
    }

    /// Lattice node `(i, j)` along the knee and wheel axes.
    pub fn node(&self, i: usize, j: usize) -> TorqueSample {
        TorqueSample {
            knee: self.bounds.knee[0] + i as f64 * self.step(0),
            wheel: self.bounds.wheel[0] + j as f64 * self.step(1),
        }
    }

    pub fn grid_log_density(&self, i: usize, j: usize) -> f64 {
        self.log_density[i * self.resolution + j]
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Grid value with linear extrapolation one node past each edge.
    fn extended(&self, i: isize, j: isize) -> f64 {
        let last = self.resolution as isize - 1;
        let fold = |k: isize| -> (usize, usize, f64) {
            // (node, neighbour, weight of the extrapolation)
            if k < 0 {
                (0, 1, -k as f64)
            } else if k > last {
                (last as usize, last as usize - 1, (k - last) as f64)
            } else {
                (k as usize, k as usize, 0.0)
            }
        };
        let (i0, i1, wi) = fold(i);
        let (j0, j1, wj) = fold(j);
        let g = |a: usize, b: usize| self.log_density[a * self.resolution + b];
        // v + w (v - neighbour) on each axis
        let row = |a: usize| (1.0 + wj) * g(a, j0) - wj * g(a, j1);
        (1.0 + wi) * row(i0) - wi * row(i1)
    }

    /// Interpolated log-density before flooring.
    ///
    /// Inside the grid this interpolates the stored log-densities. Outside,
    /// the query is clamped to the grid edge and a Gaussian tail is continued
    /// from a kernel sitting `3h` inside that edge, which keeps the value
    /// continuous and decaying like the exact estimate.
    pub fn log_likelihood(&self, m: &TorqueSample) -> f64 {
        let res = self.resolution;
        let mut cell = [0usize; 2];
        let mut frac = [0.0; 2];
        let mut tail = 0.0;
        for axis in 0..2 {
            let [lo, hi] = self.bounds.axis(axis);
            let x = m.axis(axis);
            let clamped = x.clamp(lo, hi);
            let outside = (x - clamped).abs();
            if outside > 0.0 {
                let h = self.bandwidth[axis];
                let margin = GRID_MARGIN_BANDWIDTHS * h;
                tail += (outside * outside + 2.0 * margin * outside) / (2.0 * h * h);
            }
            let u = (clamped - lo) / self.step(axis);
            let i0 = (u.floor() as usize).min(res - 2);
            cell[axis] = i0;
            frac[axis] = (u - i0 as f64).clamp(0.0, 1.0);
        }
        let [i, j] = cell;
        let [tx, ty] = frac;
        let inner = match self.interpolation {
            Interpolation::Bilinear => {
                let v00 = self.log_density[i * res + j];
                let v01 = self.log_density[i * res + j + 1];
                let v10 = self.log_density[(i + 1) * res + j];
                let v11 = self.log_density[(i + 1) * res + j + 1];
                let along_wheel_lo = (1.0 - ty) * v00 + ty * v01;
                let along_wheel_hi = (1.0 - ty) * v10 + ty * v11;
                (1.0 - tx) * along_wheel_lo + tx * along_wheel_hi
            }
            Interpolation::Bicubic => {
                let wx = catmull_rom(tx);
                let wy = catmull_rom(ty);
                let (i, j) = (i as isize, j as isize);
                let mut acc = 0.0;
                for (a, wa) in wx.iter().enumerate() {
                    let mut row = 0.0;
                    for (b, wb) in wy.iter().enumerate() {
                        row += wb * self.extended(i + a as isize - 1, j + b as isize - 1);
                    }
                    acc += wa * row;
                }
                acc
            }
        };
        inner - tail
    }

    /// Density at `m` in 1/Nm², never below the configured floor.
    pub fn likelihood(&self, m: &TorqueSample) -> f64 {
        let v = self.log_likelihood(m).exp();
        if v.is_finite() {
            v.max(self.density_floor)
        } else {
            self.density_floor
        }
    }

    /// Trapezoid-rule integral of the gridded density over the grid region.
    pub fn grid_mass(&self) -> f64 {
        let res = self.resolution;
        let weight = |k: usize| if k == 0 || k == res - 1 { 0.5 } else { 1.0 };
        let mut sum = 0.0;
        for i in 0..res {
            for j in 0..res {
                sum += weight(i) * weight(j) * self.log_density[i * res + j].exp();
            }
        }
        sum * self.step(0) * self.step(1)
    }

    /// Structural checks for models read back from disk.
    pub fn validate(&self) -> Result<(), DensityError> {
        let bad = |msg: &str| Err(DensityError::Malformed(msg.to_owned()));
        if self.resolution < 2 {
            return bad("resolution below 2");
        }
        if self.log_density.len() != self.resolution * self.resolution {
            return bad("grid size does not match resolution");
        }
        if self.log_density.iter().any(|v| !v.is_finite()) {
            return bad("non-finite grid value");
        }
        if !self.bandwidth.iter().all(|h| h.is_finite() && *h > 0.0) {
            return bad("bandwidth must be positive");
        }
        for axis in 0..2 {
            let [lo, hi] = self.bounds.axis(axis);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad("grid bounds must be strictly ordered");
            }
        }
        if !(self.density_floor.is_finite() && self.density_floor > 0.0) {
            return bad("density floor must be positive");
        }
        if self.sample_count < 2 {
            return bad("sample count below 2");
        }
        Ok(())
    }
}

/// Catmull-Rom weights for nodes at offsets -1, 0, 1, 2.
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Fits a Gaussian KDE to `points` and tabulates its log-density.
pub fn fit_kde(
    points: &[TorqueSample],
    state: ContactState,
    config: &KdeConfig,
) -> Result<KdeModel, DensityError> {
    let n = points.len();
    if n < 2 {
        return Err(DensityError::TooFewSamples(n));
    }
    if config.grid_resolution < 2 {
        return Err(DensityError::InvalidResolution(config.grid_resolution));
    }
    if !(config.density_floor.is_finite() && config.density_floor > 0.0) {
        return Err(DensityError::InvalidFloor(config.density_floor));
    }
    if let Some(index) = points
        .iter()
        .position(|p| TorqueSample::new(p.knee, p.wheel).is_none())
    {
        return Err(DensityError::InvalidSample { index });
    }

    let stddevs = [
        sample_stddev(points.iter().map(|p| p.knee)),
        sample_stddev(points.iter().map(|p| p.wheel)),
    ];
    let bandwidth = match config.bandwidth {
        BandwidthRule::ScottIsotropic => {
            let h = scott_bandwidth(n, 2, &stddevs)?;
            [h, h]
        }
        // Keeps the 2-D exponent: h_a = n^(-1/6) * sd_a.
        BandwidthRule::ScottDiagonal => [
            scott_bandwidth(n, 2, &[stddevs[0], stddevs[0]])?,
            scott_bandwidth(n, 2, &[stddevs[1], stddevs[1]])?,
        ],
    };

    let extent = |axis: usize| {
        let (lo, hi) = points
            .iter()
            .map(|p| p.axis(axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let margin = GRID_MARGIN_BANDWIDTHS * bandwidth[axis];
        [lo - margin, hi + margin]
    };
    let bounds = GridBounds {
        knee: extent(0),
        wheel: extent(1),
    };

    let res = config.grid_resolution;
    let mut model = KdeModel {
        state,
        bandwidth,
        bounds,
        resolution: res,
        density_floor: config.density_floor,
        interpolation: config.interpolation,
        sample_count: n,
        log_density: vec![0.0; res * res],
        points: points.to_vec(),
    };

    let [hx, hy] = bandwidth;
    let log_norm = (n as f64).ln() + (2.0 * std::f64::consts::PI).ln() + hx.ln() + hy.ln();
    // Per-column wheel exponents, shared by every row.
    let wheel_terms: Vec<Vec<f64>> = (0..res)
        .map(|j| {
            let y = model.node(0, j).wheel;
            points
                .iter()
                .map(|p| {
                    let z = (y - p.wheel) / hy;
                    -0.5 * z * z
                })
                .collect()
        })
        .collect();
    let knee_nodes: Vec<f64> = (0..res).map(|i| model.node(i, 0).knee).collect();

    model
        .log_density
        .par_chunks_mut(res)
        .zip(knee_nodes.par_iter())
        .for_each(|(row, &x)| {
            let knee_terms: Vec<f64> = points
                .iter()
                .map(|p| {
                    let z = (x - p.knee) / hx;
                    -0.5 * z * z
                })
                .collect();
            for (slot, wheel) in row.iter_mut().zip(&wheel_terms) {
                let max = knee_terms
                    .iter()
                    .zip(wheel)
                    .map(|(a, b)| a + b)
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = knee_terms
                    .iter()
                    .zip(wheel)
                    .map(|(a, b)| (a + b - max).exp())
                    .sum();
                *slot = max + sum.ln() - log_norm;
            }
        });

    Ok(model)
}
