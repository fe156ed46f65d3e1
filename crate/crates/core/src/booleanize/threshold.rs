use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Adaptive Gaussian thresholding settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarizationConfig {
    /// Odd window side `W >= 3`.
    pub window: usize,
    pub sigma: f64,
    /// Constant `C` subtracted from the local mean.
    pub offset: i32,
}

impl Default for BinarizationConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 11.0 / 6.0,
            offset: 0,
        }
    }
}

impl BinarizationConfig {
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            sigma: window as f64 / 6.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::param(format!(
                "threshold window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::param(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

const KERNEL_SCALE: f64 = 4096.0;

/// Integer 1-D Gaussian weights of length `W`.
///
/// The 2-D kernel is the outer product of these weights, so a separable
/// pass and a direct 2-D sum produce the same integer totals.
pub fn gaussian_kernel(cfg: &BinarizationConfig) -> Vec<u64> {
    let r = (cfg.window / 2) as f64;
    (0..cfg.window)
        .map(|i| {
            let d = i as f64 - r;
            let g = (-(d * d) / (2.0 * cfg.sigma * cfg.sigma)).exp();
            ((g * KERNEL_SCALE).round() as u64).max(1)
        })
        .collect()
}

/// `out(i, j) = pixel(i, j) > gaussian_mean(i, j) - C`, with edge-replicated
/// borders. Output is row-major.
pub fn adaptive_gaussian_threshold(
    plane: &[u8],
    rows: usize,
    cols: usize,
    cfg: &BinarizationConfig,
) -> Result<Vec<bool>> {
    cfg.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::param("cannot threshold an empty image"));
    }
    if plane.len() != rows * cols {
        return Err(Error::Dimension {
            expected: rows * cols,
            found: plane.len(),
        });
    }
    let kernel = gaussian_kernel(cfg);
    let r = cfg.window as isize / 2;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0u64; rows * cols];
    for y in 0..rows {
        let row = &plane[y * cols..(y + 1) * cols];
        for x in 0..cols {
            horizontal[y * cols + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, &k)| k * u64::from(row[clamp(x as isize + i as isize - r, cols)]))
                .sum();
        }
    }

    let norm = kernel.iter().sum::<u64>().pow(2) as i64;
    let offset = i64::from(cfg.offset);
    let mut out = Vec::with_capacity(rows * cols);
    for y in 0..rows {
        for x in 0..cols {
            let weighted: u64 = kernel
                .iter()
                .enumerate()
                .map(|(i, &k)| k * horizontal[clamp(y as isize + i as isize - r, rows) * cols + x])
                .sum();
            // pixel > weighted / norm - C, scaled by norm
            let pixel = i64::from(plane[y * cols + x]);
            out.push((pixel + offset) * norm > weighted as i64);
        }
    }
    Ok(out)
}
