use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
    /// Side of the square Gaussian window.
    pub window: usize,
    pub sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            dynamic_range: 255.0,
            k1: 0.01,
            k2: 0.03,
            window: 11,
            sigma: 1.5,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// SSIM from first and second moments.
pub fn ssim_from_moments(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64, p: &SsimParams) -> f64 {
    let (c1, c2) = (p.c1(), p.c2());
    ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
}

/// SSIM of two equally sized patches with uniform weighting.
pub fn ssim(x: &[f64], y: &[f64], p: &SsimParams) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::SizeMismatch(x.len(), 1, y.len(), 1));
    }
    let n = x.len() as f64;
    let mu_x = x.iter().sum::<f64>() / n;
    let mu_y = y.iter().sum::<f64>() / n;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (a, b) in x.iter().zip(y) {
        var_x += (a - mu_x) * (a - mu_x);
        var_y += (b - mu_y) * (b - mu_y);
        cov += (a - mu_x) * (b - mu_y);
    }
    Ok(ssim_from_moments(mu_x, mu_y, var_x / n, var_y / n, cov / n, p))
}

/// Valid-mode separable filtering: `(h - k + 1) x (w - k + 1)` output.
fn filter(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&line[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM over every stride-1 window position.
pub fn mssim(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::SizeMismatch(a.width, a.height, b.width, b.height));
    }
    let (w, h, k) = (a.width, a.height, p.window);
    if w < k || h < k {
        return Err(Error::ImageTooSmall(w, h, k));
    }
    let x: Vec<f64> = a.data.iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = b.data.iter().map(|&v| f64::from(v)).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let taps = p.taps();
    let mu_x = filter(&x, w, h, &taps);
    let mu_y = filter(&y, w, h, &taps);
    let e_xx = filter(&xx, w, h, &taps);
    let e_yy = filter(&yy, w, h, &taps);
    let e_xy = filter(&xy, w, h, &taps);

    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            ssim_from_moments(mx, my, e_xx[i] - mx * mx, e_yy[i] - my * my, e_xy[i] - mx * my, p)
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}
