//! Pixel-to-block motion vector mapping.
//!
//! Each 4×4 block gets one representative taken from its own pixels: the
//! x-median and the y-median each nominate the first vector carrying that
//! component, and the nominee with the smaller sum of squared differences to
//! all sixteen vectors wins. A componentwise mean would be cheaper but can
//! produce a vector that no pixel actually has.

use crate::error::{Error, Result};
use crate::mv::Mv;
use crate::seqio::MotionField;

pub const BLOCK: usize = 4;
const BLOCK_PIXELS: usize = BLOCK * BLOCK;

/// Representative vector of one 4×4 block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockMv {
    pub mv: Mv,
    pub valid: bool,
}

impl BlockMv {
    pub fn valid(mv: Mv) -> Self {
        BlockMv { mv, valid: true }
    }

    pub fn invalid(mv: Mv) -> Self {
        BlockMv { mv, valid: false }
    }
}

/// Block representatives for a whole frame, raster order over 4×4 blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    blocks_x: usize,
    blocks_y: usize,
    entries: Vec<BlockMv>,
}

impl BlockGrid {
    pub fn new(blocks_x: usize, blocks_y: usize, entries: Vec<BlockMv>) -> Result<Self> {
        if blocks_x * blocks_y != entries.len() {
            return Err(Error::Dimensions(format!(
                "{} entries for a {blocks_x}x{blocks_y} block grid",
                entries.len()
            )));
        }
        Ok(BlockGrid {
            blocks_x,
            blocks_y,
            entries,
        })
    }

    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    pub fn entries(&self) -> &[BlockMv] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [BlockMv] {
        &mut self.entries
    }

    #[inline]
    pub fn get(&self, bx: usize, by: usize) -> BlockMv {
        self.entries[by * self.blocks_x + bx]
    }

    /// Entries covering the pixel rectangle `(x, y, w, h)`, raster order.
    /// The rectangle must be block aligned.
    pub fn region(&self, x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = BlockMv> + '_ {
        let (bx0, by0) = (x / BLOCK, y / BLOCK);
        let (bw, bh) = (w / BLOCK, h / BLOCK);
        (by0..by0 + bh).flat_map(move |by| (bx0..bx0 + bw).map(move |bx| self.get(bx, by)))
    }

    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.valid).count()
    }
}

/// Lower median of sixteen values: the 8th smallest.
fn lower_median(mut values: [i32; BLOCK_PIXELS]) -> i32 {
    values.sort_unstable();
    values[BLOCK_PIXELS / 2 - 1]
}

fn ssd_to_all(candidate: Mv, vectors: &[Mv; BLOCK_PIXELS]) -> i64 {
    vectors
        .iter()
        .map(|v| {
            let dx = (candidate.x - v.x) as i64;
            let dy = (candidate.y - v.y) as i64;
            dx * dx + dy * dy
        })
        .sum()
}

/// Whether a 4×4 block at pixel `(x, y)` displaced by `mv` reads only
/// samples inside a `width`×`height` frame. A fractional component needs one
/// extra sample of interpolation support on that axis.
pub fn block_fits(x: usize, y: usize, mv: Mv, width: usize, height: usize) -> bool {
    fn axis(origin: usize, v: i32, extent: usize) -> bool {
        let q = 4 * origin as i64 + v as i64;
        let first = q.div_euclid(4);
        let last = first + BLOCK as i64 - 1 + i64::from(q.rem_euclid(4) != 0);
        first >= 0 && last < extent as i64
    }
    axis(x, mv.x, width) && axis(y, mv.y, height)
}

/// Picks the representative of sixteen raster-ordered vectors for the block
/// at pixel `(x, y)`; the result is invalid if it would read outside the frame.
pub fn map_block(vectors: &[Mv; BLOCK_PIXELS], x: usize, y: usize, width: usize, height: usize) -> BlockMv {
    let x_median = lower_median(vectors.map(|v| v.x));
    let y_median = lower_median(vectors.map(|v| v.y));
    // the medians are sample components, so both searches succeed
    let by_x = *vectors.iter().find(|v| v.x == x_median).unwrap();
    let by_y = *vectors.iter().find(|v| v.y == y_median).unwrap();

    let chosen = if ssd_to_all(by_y, vectors) < ssd_to_all(by_x, vectors) {
        by_y
    } else {
        by_x
    };
    BlockMv {
        mv: chosen,
        valid: block_fits(x, y, chosen, width, height),
    }
}

/// Gathers the sixteen vectors of the block at block coordinates `(bx, by)`.
pub fn block_vectors(mf: &MotionField, bx: usize, by: usize) -> [Mv; BLOCK_PIXELS] {
    let mut out = [Mv::ZERO; BLOCK_PIXELS];
    for dy in 0..BLOCK {
        for dx in 0..BLOCK {
            out[dy * BLOCK + dx] = mf.get(bx * BLOCK + dx, by * BLOCK + dy).mv();
        }
    }
    out
}

/// Maps a whole motion field to a [`BlockGrid`].
pub fn map_frame(mf: &MotionField) -> Result<BlockGrid> {
    let (w, h) = (mf.width(), mf.height());
    if w % BLOCK != 0 || h % BLOCK != 0 {
        return Err(Error::Dimensions(format!(
            "motion field {w}x{h} is not a multiple of {BLOCK}"
        )));
    }
    let (bw, bh) = (w / BLOCK, h / BLOCK);
    let mut entries = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let v = block_vectors(mf, bx, by);
            entries.push(map_block(&v, bx * BLOCK, by * BLOCK, w, h));
        }
    }
    BlockGrid::new(bw, bh, entries)
}
