//! Savitzky–Golay and exponential smoothing for weekly series.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SmoothKind {
    SavitzkyGolay { window: usize, order: usize },
    Exponential { factor: f64 },
}

pub fn smooth_series(series: &[f64], kind: SmoothKind) -> Result<Vec<f64>> {
    match kind {
        SmoothKind::SavitzkyGolay { window, order } => savitzky_golay(series, window, order),
        SmoothKind::Exponential { factor } => exponential(series, factor),
    }
}

/// Local least-squares polynomial smoothing.
///
/// Interior points use the centered window. The first and last half-windows
/// are read off the polynomial fitted to the edge window, so polynomials of
/// degree ≤ `order` pass through unchanged everywhere.
pub fn savitzky_golay(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::BadFilter(format!(
            "window must be odd, got {window}"
        )));
    }
    if order >= window {
        return Err(Error::BadFilter(format!(
            "order {order} must be below window {window}"
        )));
    }
    let n = series.len();
    if window > n {
        return Err(Error::WindowTooLong { window, len: n });
    }
    let half = window / 2;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let start = if i < half {
            0
        } else if i + half >= n {
            n - window
        } else {
            i - half
        };
        let coef = polyfit(&series[start..start + window], order);
        let x = i as f64 - (start + half) as f64;
        out[i] = coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
    }
    Ok(out)
}

/// Coefficients (constant first) of the least-squares polynomial through
/// `ys` sampled at `x = -h..=h`.
fn polyfit(ys: &[f64], order: usize) -> Vec<f64> {
    let m = order + 1;
    let h = (ys.len() / 2) as f64;
    let mut ata = vec![vec![0.0; m]; m];
    let mut aty = vec![0.0; m];
    for (j, &y) in ys.iter().enumerate() {
        let x = j as f64 - h;
        let pows: Vec<f64> = (0..m).map(|p| x.powi(p as i32)).collect();
        for r in 0..m {
            aty[r] += pows[r] * y;
            for c in 0..m {
                ata[r][c] += pows[r] * pows[c];
            }
        }
    }
    solve(ata, aty)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `s₀ = x₀`, `sₜ = f·xₜ + (1−f)·sₜ₋₁`.
pub fn exponential(series: &[f64], factor: f64) -> Result<Vec<f64>> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::BadFilter(format!(
            "factor must lie in (0, 1], got {factor}"
        )));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut prev = None;
    for &x in series {
        let s = match prev {
            None => x,
            Some(p) => factor * x + (1.0 - factor) * p,
        };
        out.push(s);
        prev = Some(s);
    }
    Ok(out)
}
