//! Motion search for one prediction unit (PU).
//!
//! Two searches run under the same Lagrangian cost `SAD + λ·bits`:
//!
//! * the conventional search, an eight-point diamond on whole pixels with
//!   step sizes 32 down to 1 followed by half- and quarter-pel refinement,
//!   confined to `±search_range` pixels;
//! * the proposed search, which evaluates a short list of candidates built
//!   from the block representatives of the true motion field plus the two
//!   predictors. It is not bounded by the search range.
//!
//! Every tested vector is costed against the better of the two predictors.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mv::Mv;
use crate::mvmap::BlockGrid;
use crate::seqio::Frame;

/// Length in bits of the signed order-0 exp-Golomb code of `v`.
pub fn signed_exp_golomb_len(v: i64) -> u32 {
    let code = if v > 0 {
        2 * v as u64 - 1
    } else {
        2 * v.unsigned_abs()
    };
    2 * (code + 1).ilog2() + 1
}

/// Bits to signal `mv` against predictor `mvp`: both difference components
/// plus one bit for the predictor index.
pub fn mv_rate_bits(mv: Mv, mvp: Mv) -> u32 {
    let d = mv - mvp;
    signed_exp_golomb_len(d.x as i64) + signed_exp_golomb_len(d.y as i64) + 1
}

/// Lagrange multipliers for a quantization parameter: `(λ_mode, λ_motion)`.
pub fn lambdas_for_qp(qp: u8) -> (f64, f64) {
    let mode = 0.85 * 2f64.powf((f64::from(qp) - 12.0) / 3.0);
    (mode, mode.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    Conventional,
    ProposedOnly,
    Combined,
}

impl SearchMode {
    pub fn uses_true_motion(self) -> bool {
        !matches!(self, SearchMode::Conventional)
    }

    pub fn runs_conventional(self) -> bool {
        !matches!(self, SearchMode::ProposedOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Conventional => "conventional",
            SearchMode::ProposedOnly => "proposed-only",
            SearchMode::Combined => "combined",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(SearchMode::Conventional),
            "proposed-only" => Ok(SearchMode::ProposedOnly),
            "combined" => Ok(SearchMode::Combined),
            _ => Err(Error::Config(format!("unknown search mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pu_size: usize,
    search_range: u32,
    lambda_mode: f64,
    lambda_motion: f64,
    mode: SearchMode,
}

pub const DEFAULT_PU_SIZE: usize = 16;
pub const DEFAULT_SEARCH_RANGE: u32 = 64;

impl SearchConfig {
    pub fn new(
        pu_size: usize,
        search_range: u32,
        lambda_mode: f64,
        lambda_motion: f64,
        mode: SearchMode,
    ) -> Result<Self> {
        if !matches!(pu_size, 8 | 16 | 32 | 64) {
            return Err(Error::invalid("search config", format!("PU size {pu_size} not in {{8, 16, 32, 64}}")));
        }
        if search_range == 0 {
            return Err(Error::invalid("search config", "search range must be positive"));
        }
        if !(lambda_mode > 0.0 && lambda_motion > 0.0) {
            return Err(Error::invalid("search config", "lambdas must be positive"));
        }
        Ok(SearchConfig {
            pu_size,
            search_range,
            lambda_mode,
            lambda_motion,
            mode,
        })
    }

    /// Configuration with lambdas derived from `qp`.
    pub fn for_qp(qp: u8, pu_size: usize, search_range: u32, mode: SearchMode) -> Result<Self> {
        let (lm, lmo) = lambdas_for_qp(qp);
        SearchConfig::new(pu_size, search_range, lm, lmo, mode)
    }

    pub fn pu_size(&self) -> usize {
        self.pu_size
    }

    pub fn search_range(&self) -> u32 {
        self.search_range
    }

    pub fn lambda_mode(&self) -> f64 {
        self.lambda_mode
    }

    pub fn lambda_motion(&self) -> f64 {
        self.lambda_motion
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Motion vector predictors from the left and above PUs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MvpPair {
    pub left: Mv,
    pub above: Mv,
}

impl MvpPair {
    pub fn new(left: Mv, above: Mv) -> Self {
        MvpPair { left, above }
    }

    pub fn get(&self, index: u8) -> Mv {
        if index == 0 {
            self.left
        } else {
            self.above
        }
    }

    /// Cheapest predictor for `mv` as `(index, bits)`; ties go to index 0.
    pub fn best_for(&self, mv: Mv) -> (u8, u32) {
        let a = mv_rate_bits(mv, self.left);
        let b = mv_rate_bits(mv, self.above);
        if b < a {
            (1, b)
        } else {
            (0, a)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Conventional,
    Proposed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PuDecision {
    pub mv: Mv,
    pub mvp_index: u8,
    pub sad: u32,
    pub mv_bits: u32,
    pub motion_cost: f64,
    pub origin: Origin,
}

/// Bilinear quarter-pel prediction of a `w`×`h` block at `(x, y)` displaced
/// by `mv`. Reference coordinates outside the frame are clamped to the edge.
pub fn interpolate_block(reference: &Frame, x: usize, y: usize, w: usize, h: usize, mv: Mv) -> Vec<u8> {
    let mut out = Vec::with_capacity(w * h);
    for_each_prediction(reference, x, y, w, h, mv, |_, _, p| out.push(p));
    out
}

#[inline]
fn for_each_prediction(
    reference: &Frame,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    mv: Mv,
    mut f: impl FnMut(usize, usize, u8),
) {
    let qx = 4 * x as i64 + mv.x as i64;
    let qy = 4 * y as i64 + mv.y as i64;
    let (ix, fx) = (qx.div_euclid(4) as isize, qx.rem_euclid(4) as u32);
    let (iy, fy) = (qy.div_euclid(4) as isize, qy.rem_euclid(4) as u32);
    let rw = reference.width() as isize;
    let rh = reference.height() as isize;
    let inside = ix >= 0 && iy >= 0 && ix + (w as isize) < rw && iy + (h as isize) < rh;

    if fx == 0 && fy == 0 {
        if inside || (ix >= 0 && iy >= 0 && ix + w as isize <= rw && iy + h as isize <= rh) {
            for r in 0..h {
                let row = &reference.row((iy + r as isize) as usize)[ix as usize..ix as usize + w];
                for (c, &s) in row.iter().enumerate() {
                    f(c, r, s);
                }
            }
        } else {
            for r in 0..h {
                for c in 0..w {
                    f(c, r, reference.get_clamped(ix + c as isize, iy + r as isize));
                }
            }
        }
        return;
    }

    let w00 = (4 - fx) * (4 - fy);
    let w10 = fx * (4 - fy);
    let w01 = (4 - fx) * fy;
    let w11 = fx * fy;
    let blend = |s00: u8, s10: u8, s01: u8, s11: u8| -> u8 {
        ((w00 * s00 as u32 + w10 * s10 as u32 + w01 * s01 as u32 + w11 * s11 as u32 + 8) >> 4) as u8
    };
    if inside {
        for r in 0..h {
            let y0 = (iy + r as isize) as usize;
            let top = &reference.row(y0)[ix as usize..ix as usize + w + 1];
            let bottom = &reference.row(y0 + 1)[ix as usize..ix as usize + w + 1];
            for c in 0..w {
                f(c, r, blend(top[c], top[c + 1], bottom[c], bottom[c + 1]));
            }
        }
    } else {
        for r in 0..h {
            let sy = iy + r as isize;
            for c in 0..w {
                let sx = ix + c as isize;
                f(
                    c,
                    r,
                    blend(
                        reference.get_clamped(sx, sy),
                        reference.get_clamped(sx + 1, sy),
                        reference.get_clamped(sx, sy + 1),
                        reference.get_clamped(sx + 1, sy + 1),
                    ),
                );
            }
        }
    }
}

/// Sum of absolute differences between a source block and its prediction.
pub fn block_sad(cur: &Frame, reference: &Frame, x: usize, y: usize, w: usize, h: usize, mv: Mv) -> u32 {
    let mut sad = 0u32;
    for_each_prediction(reference, x, y, w, h, mv, |c, r, p| {
        sad += (cur.get(x + c, y + r) as i32 - p as i32).unsigned_abs();
    });
    sad
}

/// Everything needed to cost a vector for one PU.
#[derive(Clone, Copy)]
pub struct PuContext<'a> {
    pub cur: &'a Frame,
    pub reference: &'a Frame,
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub mvps: MvpPair,
    pub lambda_motion: f64,
}

impl PuContext<'_> {
    pub fn evaluate(&self, mv: Mv, origin: Origin) -> PuDecision {
        let sad = block_sad(self.cur, self.reference, self.x, self.y, self.size, self.size, mv);
        let (mvp_index, mv_bits) = self.mvps.best_for(mv);
        PuDecision {
            mv,
            mvp_index,
            sad,
            mv_bits,
            motion_cost: sad as f64 + self.lambda_motion * mv_bits as f64,
            origin,
        }
    }
}

const DIAMOND: [(i32, i32); 8] = [
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, 0),
    (1, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
];

/// Integer steps of the diamond stage, in pixels.
const DIAMOND_STEPS: [i32; 6] = [32, 16, 8, 4, 2, 1];

struct Memo<'a, 'b> {
    ctx: &'b PuContext<'a>,
    seen: HashMap<Mv, PuDecision>,
}

impl Memo<'_, '_> {
    fn eval(&mut self, mv: Mv) -> PuDecision {
        let ctx = self.ctx;
        *self
            .seen
            .entry(mv)
            .or_insert_with(|| ctx.evaluate(mv, Origin::Conventional))
    }

    /// Tests the eight neighbors of `best` at `offset` quarter-pel and
    /// returns the cheapest, keeping `best` unless strictly improved.
    fn ring(&mut self, best: PuDecision, offset: i32, limit: i32) -> PuDecision {
        let center = best.mv;
        let mut best = best;
        for (dx, dy) in DIAMOND {
            let cand = Mv::new(center.x + dx * offset, center.y + dy * offset).clamp(limit);
            if cand == center {
                continue;
            }
            let d = self.eval(cand);
            if d.motion_cost < best.motion_cost {
                best = d;
            }
        }
        best
    }
}

/// Diamond search on whole pixels followed by half- and quarter-pel
/// refinement. The result stays within `±search_range` pixels per component.
pub fn conventional_search(ctx: &PuContext<'_>, search_range: u32) -> PuDecision {
    let limit = 4 * search_range as i32;
    let mut memo = Memo {
        ctx,
        seen: HashMap::new(),
    };

    let starts = [
        Mv::ZERO,
        ctx.mvps.left.round_to_integer().clamp(limit),
        ctx.mvps.above.round_to_integer().clamp(limit),
    ];
    let mut best = memo.eval(starts[0]);
    for s in &starts[1..] {
        let d = memo.eval(*s);
        if d.motion_cost < best.motion_cost {
            best = d;
        }
    }

    for step in DIAMOND_STEPS {
        loop {
            let next = memo.ring(best, 4 * step, limit);
            if next.mv == best.mv {
                break;
            }
            best = next;
        }
    }

    best = memo.ring(best, 2, limit);
    memo.ring(best, 1, limit)
}

/// Candidate list for one PU: valid block vectors of the PU in raster order
/// without duplicates, then the predictors if not already listed.
pub fn build_candidate_list(grid: &BlockGrid, x: usize, y: usize, size: usize, mvps: MvpPair) -> Vec<Mv> {
    let mut list: Vec<Mv> = Vec::new();
    let mut push = |mv: Mv| {
        if !list.contains(&mv) {
            list.push(mv);
        }
    };
    for b in grid.region(x, y, size, size).filter(|b| b.valid) {
        push(b.mv);
    }
    push(mvps.left);
    push(mvps.above);
    list
}

/// Evaluates every candidate and keeps the cheapest; earlier entries win ties.
pub fn proposed_search(ctx: &PuContext<'_>, candidates: &[Mv]) -> Option<PuDecision> {
    let mut best: Option<PuDecision> = None;
    for &mv in candidates {
        let d = ctx.evaluate(mv, Origin::Proposed);
        if best.is_none_or(|b| d.motion_cost < b.motion_cost) {
            best = Some(d);
        }
    }
    best
}

/// Final choice between the two searches. In combined mode the cheaper one
/// wins with ties going to the conventional result; single modes pass their
/// own result through.
pub fn select_best(
    conventional: Option<PuDecision>,
    proposed: Option<PuDecision>,
    mode: SearchMode,
) -> Option<PuDecision> {
    match mode {
        SearchMode::Conventional => conventional,
        SearchMode::ProposedOnly => proposed,
        SearchMode::Combined => match (conventional, proposed) {
            (Some(c), Some(p)) => Some(if p.motion_cost < c.motion_cost { p } else { c }),
            (c, p) => c.or(p),
        },
    }
}

/// Both searches for one PU as configured.
#[derive(Clone, Copy, Debug)]
pub struct PuSearch {
    pub conventional: Option<PuDecision>,
    pub proposed: Option<PuDecision>,
    pub chosen: PuDecision,
}

pub fn search_pu(ctx: &PuContext<'_>, config: &SearchConfig, grid: Option<&BlockGrid>) -> PuSearch {
    let mode = config.mode();
    let conventional = mode
        .runs_conventional()
        .then(|| conventional_search(ctx, config.search_range()));
    let proposed = if mode.uses_true_motion() {
        let candidates = match grid {
            Some(g) => build_candidate_list(g, ctx.x, ctx.y, ctx.size, ctx.mvps),
            None => {
                let mut v = vec![ctx.mvps.left];
                if ctx.mvps.above != ctx.mvps.left {
                    v.push(ctx.mvps.above);
                }
                v
            }
        };
        proposed_search(ctx, &candidates)
    } else {
        None
    };
    let chosen = select_best(conventional, proposed, mode).expect("mode yields at least one search");
    PuSearch {
        conventional,
        proposed,
        chosen,
    }
}
