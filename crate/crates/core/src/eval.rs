//! PSNR and Bjøntegaard-delta rate.

use crate::error::{Error, Result};
use crate::seqio::Frame;

/// Reported in place of infinity when two frames are identical.
pub const PSNR_CAP: f64 = 99.0;

/// The four quantization parameters of an RD curve.
pub const QPS: [u8; 4] = [22, 27, 32, 37];

/// Luma PSNR in dB.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Dimensions(format!(
            "psnr of {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(PSNR_CAP);
    }
    let mse = sse as f64 / a.samples().len() as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub bits: f64,
    pub psnr: f64,
}

impl RdPoint {
    pub fn new(bits: f64, psnr: f64) -> Self {
        RdPoint { bits, psnr }
    }
}

/// Four rate-distortion points, sorted by descending rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    points: [RdPoint; 4],
}

impl RdCurve {
    pub fn new(mut points: [RdPoint; 4]) -> Result<Self> {
        for p in &points {
            if !(p.bits > 0.0 && p.bits.is_finite() && p.psnr.is_finite()) {
                return Err(Error::invalid("rd curve", format!("bad point {p:?}")));
            }
        }
        points.sort_by(|a, b| b.bits.total_cmp(&a.bits));
        for w in points.windows(2) {
            if !(w[0].bits > w[1].bits && w[0].psnr > w[1].psnr) {
                return Err(Error::invalid(
                    "rd curve",
                    "quality must fall strictly with rate".to_string(),
                ));
            }
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint; 4] {
        &self.points
    }

    fn psnr_range(&self) -> (f64, f64) {
        (self.points[3].psnr, self.points[0].psnr)
    }

    /// Integral of the interpolating cubic `log10(bits)(psnr)` over `[lo, hi]`.
    fn log_rate_integral(&self, lo: f64, hi: f64) -> f64 {
        // centre the abscissa to keep the Vandermonde system well conditioned
        let center = self.points.iter().map(|p| p.psnr).sum::<f64>() / 4.0;
        let xs = self.points.map(|p| p.psnr - center);
        let ys = self.points.map(|p| p.bits.log10());
        let c = interpolate_cubic(xs, ys);
        let antiderivative = |x: f64| {
            c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0
        };
        antiderivative(hi - center) - antiderivative(lo - center)
    }
}

/// Coefficients `[c0, c1, c2, c3]` of the cubic through four points.
fn interpolate_cubic(xs: [f64; 4], ys: [f64; 4]) -> [f64; 4] {
    let mut a = [[0.0; 5]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = xs[i].powi(j as i32);
        }
        a[i][4] = ys[i];
    }
    // Gaussian elimination with partial pivoting
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut c = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * c[k]).sum();
        c[row] = (a[row][4] - s) / a[row][row];
    }
    c
}

/// Average rate difference of `test` against `anchor` at equal quality, in
/// percent. Negative values mean `test` needs fewer bits.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    let (alo, ahi) = anchor.psnr_range();
    let (tlo, thi) = test.psnr_range();
    let lo = alo.max(tlo);
    let hi = ahi.min(thi);
    if !(hi > lo) {
        return Err(Error::invalid(
            "rd curves",
            format!("PSNR ranges [{alo}, {ahi}] and [{tlo}, {thi}] do not overlap"),
        ));
    }
    let delta = (test.log_rate_integral(lo, hi) - anchor.log_rate_integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(delta) - 1.0) * 100.0)
}

/// Relative change of total encoding time, in percent.
pub fn time_delta(anchor_seconds: f64, test_seconds: f64) -> Result<f64> {
    if !(anchor_seconds > 0.0) {
        return Err(Error::invalid("timing", "anchor time must be positive"));
    }
    Ok((test_seconds - anchor_seconds) / anchor_seconds * 100.0)
}
