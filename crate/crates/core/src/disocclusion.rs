//! Depth-based disocclusion detection.
//!
//! A pixel is disoccluded when the surface it shows now was hidden behind a
//! nearer surface in the previous frame. Following the pixel's 3D motion back
//! gives the depth the surface had at its previous position; if that depth
//! lies behind whatever the previous depth map shows there (by more than a
//! small threshold against depth fighting) the motion vector would fetch
//! another object's texture.

use crate::error::{Error, Result};
use crate::mvmap::{BlockGrid, BLOCK};
use crate::seqio::{DepthMap, MotionField};

/// Default depth-fighting threshold on the normalized depth scale.
pub const DEFAULT_THRESHOLD: f64 = 0.004;

/// A block is invalidated when more than this many of its 16 pixels are disoccluded.
pub const MAX_DISOCCLUDED_PER_BLOCK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisocclusionParams {
    threshold: f64,
}

impl DisocclusionParams {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::invalid(
                "disocclusion threshold",
                format!("{threshold} is not a finite non-negative value"),
            ));
        }
        Ok(DisocclusionParams { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for DisocclusionParams {
    fn default() -> Self {
        DisocclusionParams {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Outcome of the per-pixel test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelVisibility {
    Visible,
    Disoccluded,
    /// The previous position falls outside the frame.
    ExitsFrame,
}

impl PixelVisibility {
    /// Whether callers should count the pixel as disoccluded.
    pub fn is_disoccluded(self) -> bool {
        !matches!(self, PixelVisibility::Visible)
    }
}

/// Per-pixel disocclusion flags, raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisocclusionMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl DisocclusionMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        if width * height != flags.len() {
            return Err(Error::Dimensions(format!(
                "{} flags for a {width}x{height} mask",
                flags.len()
            )));
        }
        Ok(DisocclusionMask {
            width,
            height,
            flags,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Fraction of pixels on which two masks agree.
    pub fn agreement(&self, other: &DisocclusionMask) -> f64 {
        let same = self
            .flags
            .iter()
            .zip(&other.flags)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.flags.len() as f64
    }
}

/// Nearest integer to `x + v/4`, halves rounding up.
#[inline]
fn previous_coordinate(x: usize, v: i32) -> i64 {
    (4 * x as i64 + v as i64 + 2).div_euclid(4)
}

/// Tests one pixel of the current frame against the previous depth map.
pub fn pixel_disoccluded(
    x: usize,
    y: usize,
    z_cur: &DepthMap,
    z_prev: &DepthMap,
    mf: &MotionField,
    params: &DisocclusionParams,
) -> PixelVisibility {
    let m = mf.get(x, y);
    let xp = previous_coordinate(x, m.mx);
    let yp = previous_coordinate(y, m.my);
    if xp < 0 || yp < 0 || xp >= z_prev.width() as i64 || yp >= z_prev.height() as i64 {
        return PixelVisibility::ExitsFrame;
    }
    let z_test = f64::from(z_cur.get(x, y)) + f64::from(m.mz);
    let z_seen = f64::from(z_prev.get(xp as usize, yp as usize));
    if z_test > z_seen + params.threshold {
        PixelVisibility::Disoccluded
    } else {
        PixelVisibility::Visible
    }
}

fn same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimensions(format!(
            "{what}: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Evaluates every pixel of a frame; pixels whose motion leaves the frame are flagged.
pub fn mask_frame(
    z_cur: &DepthMap,
    z_prev: &DepthMap,
    mf: &MotionField,
    params: &DisocclusionParams,
) -> Result<DisocclusionMask> {
    let dims = (mf.width(), mf.height());
    same_dims(dims, (z_cur.width(), z_cur.height()), "current depth vs motion")?;
    same_dims(dims, (z_prev.width(), z_prev.height()), "previous depth vs motion")?;
    let (w, h) = dims;
    let mut flags = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            flags.push(pixel_disoccluded(x, y, z_cur, z_prev, mf, params).is_disoccluded());
        }
    }
    DisocclusionMask::new(w, h, flags)
}

/// Invalidates every block with more than eight disoccluded pixels.
pub fn invalidate_blocks(grid: &BlockGrid, mask: &DisocclusionMask) -> Result<BlockGrid> {
    same_dims(
        (grid.blocks_x() * BLOCK, grid.blocks_y() * BLOCK),
        (mask.width(), mask.height()),
        "block grid vs mask",
    )?;
    let mut out = grid.clone();
    let bw = grid.blocks_x();
    for (i, entry) in out.entries_mut().iter_mut().enumerate() {
        let (bx, by) = (i % bw, i / bw);
        let hidden = (0..BLOCK * BLOCK)
            .filter(|k| mask.get(bx * BLOCK + k % BLOCK, by * BLOCK + k / BLOCK))
            .count();
        if hidden > MAX_DISOCCLUDED_PER_BLOCK {
            entry.valid = false;
        }
    }
    Ok(out)
}
