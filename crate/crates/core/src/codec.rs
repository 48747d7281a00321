//! A small closed-loop inter codec.
//!
//! Frames are split into a fixed grid of square PUs. Frame 0 is predicted
//! from a flat mid-grey; every later frame predicts each PU from the
//! previous reconstruction with one motion vector. Residuals go through an
//! 8×8 orthonormal DCT, uniform quantization and an exp-Golomb bit count.
//! Nothing is actually serialized: the codec accounts bits, which is all the
//! rate-distortion comparison needs.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use crate::disocclusion::{invalidate_blocks, mask_frame, DisocclusionParams};
use crate::error::{Error, Result};
use crate::eval::psnr;
use crate::mv::Mv;
use crate::mvmap::{map_frame, BlockGrid};
use crate::search::{
    interpolate_block, search_pu, signed_exp_golomb_len, MvpPair, Origin, PuContext, PuDecision,
    SearchConfig, SearchMode,
};
use crate::seqio::{write_frame, Frame, Sequence};

pub const TRANSFORM_SIZE: usize = 8;
pub const HEADER_BITS_PER_FRAME: u64 = 16;
const N: usize = TRANSFORM_SIZE;

pub type Block = [f64; N * N];
pub type Levels = [i32; N * N];

fn dct_basis() -> &'static [[f64; N]; N] {
    static BASIS: OnceLock<[[f64; N]; N]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; N]; N];
        for (k, row) in b.iter_mut().enumerate() {
            let scale = if k == 0 {
                (1.0 / N as f64).sqrt()
            } else {
                (2.0 / N as f64).sqrt()
            };
            for (n, v) in row.iter_mut().enumerate() {
                *v = scale
                    * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / (2 * N) as f64).cos();
            }
        }
        b
    })
}

/// Separable orthonormal 2D DCT-II of an 8×8 block in raster order.
pub fn forward_transform(block: &Block) -> Block {
    let b = dct_basis();
    let mut tmp = [0.0; N * N];
    for r in 0..N {
        for k in 0..N {
            tmp[r * N + k] = (0..N).map(|n| b[k][n] * block[r * N + n]).sum();
        }
    }
    let mut out = [0.0; N * N];
    for c in 0..N {
        for k in 0..N {
            out[k * N + c] = (0..N).map(|n| b[k][n] * tmp[n * N + c]).sum();
        }
    }
    out
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform(coeffs: &Block) -> Block {
    let b = dct_basis();
    let mut tmp = [0.0; N * N];
    for c in 0..N {
        for n in 0..N {
            tmp[n * N + c] = (0..N).map(|k| b[k][n] * coeffs[k * N + c]).sum();
        }
    }
    let mut out = [0.0; N * N];
    for r in 0..N {
        for n in 0..N {
            out[r * N + n] = (0..N).map(|k| b[k][n] * tmp[r * N + k]).sum();
        }
    }
    out
}

/// Quantizer step size, `2^((qp - 4) / 6)`; exact when `qp - 4` is a multiple of 6.
pub fn qstep(qp: u8) -> f64 {
    let e = i32::from(qp) - 4;
    let (whole, rem) = (e.div_euclid(6), e.rem_euclid(6));
    let frac = if rem == 0 {
        1.0
    } else {
        2f64.powf(f64::from(rem) / 6.0)
    };
    2f64.powi(whole) * frac
}

pub fn quantize(coeffs: &Block, qp: u8) -> Levels {
    let step = qstep(qp);
    coeffs.map(|c| (c / step).round() as i32)
}

pub fn dequantize(levels: &Levels, qp: u8) -> Block {
    let step = qstep(qp);
    levels.map(|l| f64::from(l) * step)
}

/// One coded-block flag, plus the exp-Golomb length of every level when any is nonzero.
pub fn residual_bits(levels: &Levels) -> u64 {
    if levels.iter().all(|&l| l == 0) {
        return 1;
    }
    1 + levels
        .iter()
        .map(|&l| u64::from(signed_exp_golomb_len(i64::from(l))))
        .sum::<u64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    qp: u8,
    search: SearchConfig,
}

impl EncoderConfig {
    pub fn new(qp: u8, search: SearchConfig) -> Result<Self> {
        if qp > 51 {
            return Err(Error::invalid("encoder config", format!("qp {qp} outside [0, 51]")));
        }
        if search.pu_size() < TRANSFORM_SIZE {
            return Err(Error::invalid("encoder config", "PU smaller than the transform"));
        }
        Ok(EncoderConfig { qp, search })
    }

    /// Lambdas follow `qp`.
    pub fn for_qp(qp: u8, pu_size: usize, search_range: u32, mode: SearchMode) -> Result<Self> {
        EncoderConfig::new(qp, SearchConfig::for_qp(qp, pu_size, search_range, mode)?)
    }

    pub fn qp(&self) -> u8 {
        self.qp
    }

    pub fn search(&self) -> &SearchConfig {
        &self.search
    }

    pub fn mode(&self) -> SearchMode {
        self.search.mode()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameStats {
    pub frame_index: usize,
    pub bits: u64,
    pub psnr_y: f64,
    pub wall_seconds: f64,
    pub pu_conventional: usize,
    pub pu_proposed: usize,
}

/// Everything the encoder decided for one PU.
#[derive(Clone, Copy, Debug)]
pub struct PuRecord {
    pub x: usize,
    pub y: usize,
    pub mvps: MvpPair,
    pub decision: PuDecision,
    /// The conventional search result, when it ran.
    pub conventional: Option<PuDecision>,
}

#[derive(Clone, Debug)]
pub struct EncodedFrame {
    pub recon: Frame,
    pub stats: FrameStats,
    /// Inter PUs in coding order; empty for the first frame.
    pub pus: Vec<PuRecord>,
    /// Quantized levels per 8×8 block, raster order over the frame.
    pub levels: Vec<Levels>,
}

fn check_frame_dims(frame: &Frame, pu: usize) -> Result<()> {
    if !frame.width().is_multiple_of(pu) || !frame.height().is_multiple_of(pu) {
        return Err(Error::Dimensions(format!(
            "frame {}x{} is not a multiple of the {pu}-pixel PU",
            frame.width(),
            frame.height()
        )));
    }
    Ok(())
}

/// Codes the residual of the 8×8 block at `(bx, by)` against `pred` (a
/// `pred_stride`-wide prediction whose origin is `(px, py)`), writes the
/// reconstruction and returns the levels.
fn code_block(
    cur: &Frame,
    pred: &[u8],
    pred_stride: usize,
    (px, py): (usize, usize),
    (bx, by): (usize, usize),
    qp: u8,
    recon: &mut [u8],
    width: usize,
) -> Levels {
    let mut resid = [0.0; N * N];
    for r in 0..N {
        for c in 0..N {
            let p = pred[(by - py + r) * pred_stride + (bx - px + c)];
            resid[r * N + c] = f64::from(cur.get(bx + c, by + r)) - f64::from(p);
        }
    }
    let levels = quantize(&forward_transform(&resid), qp);
    reconstruct_block(&levels, pred, pred_stride, (px, py), (bx, by), qp, recon, width);
    levels
}

fn reconstruct_block(
    levels: &Levels,
    pred: &[u8],
    pred_stride: usize,
    (px, py): (usize, usize),
    (bx, by): (usize, usize),
    qp: u8,
    recon: &mut [u8],
    width: usize,
) {
    let coded = levels.iter().any(|&l| l != 0);
    let rec = if coded {
        inverse_transform(&dequantize(levels, qp))
    } else {
        [0.0; N * N]
    };
    for r in 0..N {
        for c in 0..N {
            let p = f64::from(pred[(by - py + r) * pred_stride + (bx - px + c)]);
            recon[(by + r) * width + bx + c] = (p + rec[r * N + c]).round().clamp(0.0, 255.0) as u8;
        }
    }
}

fn block_index(width: usize, bx: usize, by: usize) -> usize {
    (by / N) * (width / N) + bx / N
}

const INTRA_PREDICTION: u8 = 128;

/// Encodes one frame. `reference` is the previous reconstruction (absent
/// for the first frame); `grid` carries the disocclusion-filtered block
/// representatives when the configured mode uses them.
pub fn encode_frame(
    cur: &Frame,
    reference: Option<&Frame>,
    grid: Option<&BlockGrid>,
    config: &EncoderConfig,
    frame_index: usize,
) -> Result<EncodedFrame> {
    let pu = config.search().pu_size();
    check_frame_dims(cur, pu)?;
    let (w, h) = (cur.width(), cur.height());
    let qp = config.qp();
    let mut recon = vec![0u8; w * h];
    let mut levels = vec![[0i32; N * N]; (w / N) * (h / N)];
    let mut bits = HEADER_BITS_PER_FRAME;
    let mut pus = Vec::new();

    let Some(reference) = reference else {
        let flat = [INTRA_PREDICTION; N * N];
        for by in (0..h).step_by(N) {
            for bx in (0..w).step_by(N) {
                let l = code_block(cur, &flat, N, (bx, by), (bx, by), qp, &mut recon, w);
                bits += residual_bits(&l);
                levels[block_index(w, bx, by)] = l;
            }
        }
        let recon = Frame::new(w, h, recon)?;
        let stats = FrameStats {
            frame_index,
            bits,
            psnr_y: psnr(cur, &recon)?,
            wall_seconds: 0.0,
            pu_conventional: 0,
            pu_proposed: 0,
        };
        return Ok(EncodedFrame {
            recon,
            stats,
            pus,
            levels,
        });
    };

    if (reference.width(), reference.height()) != (w, h) {
        return Err(Error::Dimensions("reference and current frame differ".into()));
    }
    if let Some(g) = grid {
        if (g.blocks_x() * 4, g.blocks_y() * 4) != (w, h) {
            return Err(Error::Dimensions("block grid does not cover the frame".into()));
        }
    }
    if config.mode().uses_true_motion() && grid.is_none() {
        return Err(Error::Config(format!(
            "{} mode needs a block grid for inter frames",
            config.mode().as_str()
        )));
    }

    let (pus_x, pus_y) = (w / pu, h / pu);
    let mut chosen: Vec<Mv> = Vec::with_capacity(pus_x * pus_y);
    let (mut n_conv, mut n_prop) = (0, 0);
    for py in 0..pus_y {
        for px in 0..pus_x {
            let mvps = MvpPair::new(
                if px > 0 { chosen[py * pus_x + px - 1] } else { Mv::ZERO },
                if py > 0 { chosen[(py - 1) * pus_x + px] } else { Mv::ZERO },
            );
            let (x, y) = (px * pu, py * pu);
            let ctx = PuContext {
                cur,
                reference,
                x,
                y,
                size: pu,
                mvps,
                lambda_motion: config.search().lambda_motion(),
            };
            let result = search_pu(&ctx, config.search(), grid);
            let d = result.chosen;
            match d.origin {
                Origin::Conventional => n_conv += 1,
                Origin::Proposed => n_prop += 1,
            }
            chosen.push(d.mv);
            bits += u64::from(d.mv_bits);

            let pred = interpolate_block(reference, x, y, pu, pu, d.mv);
            for by in (y..y + pu).step_by(N) {
                for bx in (x..x + pu).step_by(N) {
                    let l = code_block(cur, &pred, pu, (x, y), (bx, by), qp, &mut recon, w);
                    bits += residual_bits(&l);
                    levels[block_index(w, bx, by)] = l;
                }
            }
            pus.push(PuRecord {
                x,
                y,
                mvps,
                decision: d,
                conventional: result.conventional,
            });
        }
    }

    let recon = Frame::new(w, h, recon)?;
    let stats = FrameStats {
        frame_index,
        bits,
        psnr_y: psnr(cur, &recon)?,
        wall_seconds: 0.0,
        pu_conventional: n_conv,
        pu_proposed: n_prop,
    };
    Ok(EncodedFrame {
        recon,
        stats,
        pus,
        levels,
    })
}

/// Decoder-side reconstruction from coded decisions alone: motion vectors,
/// quantized levels and `qp`.
pub fn reconstruct_frame(
    width: usize,
    height: usize,
    reference: Option<&Frame>,
    pu_size: usize,
    motion: &[Mv],
    levels: &[Levels],
    qp: u8,
) -> Result<Frame> {
    if !width.is_multiple_of(pu_size) || !height.is_multiple_of(pu_size) || levels.len() != (width / N) * (height / N) {
        return Err(Error::Dimensions("levels do not cover the frame".into()));
    }
    let mut recon = vec![0u8; width * height];
    match reference {
        None => {
            let flat = [INTRA_PREDICTION; N * N];
            for by in (0..height).step_by(N) {
                for bx in (0..width).step_by(N) {
                    let l = &levels[block_index(width, bx, by)];
                    reconstruct_block(l, &flat, N, (bx, by), (bx, by), qp, &mut recon, width);
                }
            }
        }
        Some(reference) => {
            let pus_x = width / pu_size;
            if motion.len() != pus_x * (height / pu_size) {
                return Err(Error::Dimensions("one motion vector per PU expected".into()));
            }
            for (i, &mv) in motion.iter().enumerate() {
                let (x, y) = ((i % pus_x) * pu_size, (i / pus_x) * pu_size);
                let pred = interpolate_block(reference, x, y, pu_size, pu_size, mv);
                for by in (y..y + pu_size).step_by(N) {
                    for bx in (x..x + pu_size).step_by(N) {
                        let l = &levels[block_index(width, bx, by)];
                        reconstruct_block(l, &pred, pu_size, (x, y), (bx, by), qp, &mut recon, width);
                    }
                }
            }
        }
    }
    Frame::new(width, height, recon)
}

/// Block representatives of frame `t`, filtered by disocclusion.
pub fn candidate_grid(seq: &Sequence, t: usize, params: &DisocclusionParams) -> Result<BlockGrid> {
    let missing = || Error::Config("missing motion sidecar".into());
    let motion = seq.motion.as_ref().ok_or_else(missing)?;
    let mf = motion.get(t).and_then(|m| m.as_ref()).ok_or_else(missing)?;
    let depth = seq
        .depth
        .as_ref()
        .ok_or_else(|| Error::Config("missing depth sidecar".into()))?;
    let grid = map_frame(mf)?;
    let mask = mask_frame(&depth[t], &depth[t - 1], mf, params)?;
    invalidate_blocks(&grid, &mask)
}

/// Encodes a loaded sequence, each frame against the previous
/// reconstruction. Wall time covers motion mapping, disocclusion handling
/// and encoding; loading is excluded.
pub fn encode_loaded(seq: &Sequence, config: &EncoderConfig) -> Result<Vec<EncodedFrame>> {
    if seq.frames.is_empty() {
        return Err(Error::invalid("sequence", "no frames"));
    }
    if config.mode().uses_true_motion() && !seq.has_sidecars() {
        return Err(Error::Config(format!(
            "missing motion sidecar: {} mode needs motion and depth files",
            config.mode().as_str()
        )));
    }
    let params = DisocclusionParams::default();
    let mut out: Vec<EncodedFrame> = Vec::with_capacity(seq.frames.len());
    for (t, frame) in seq.frames.iter().enumerate() {
        let start = Instant::now();
        let grid = if t > 0 && config.mode().uses_true_motion() {
            Some(candidate_grid(seq, t, &params)?)
        } else {
            None
        };
        let reference = out.last().map(|e| &e.recon);
        let mut encoded = encode_frame(frame, reference, grid.as_ref(), config, t)?;
        encoded.stats.wall_seconds = start.elapsed().as_secs_f64();
        out.push(encoded);
    }
    Ok(out)
}

/// Loads the sequence in `dir` and encodes it, returning per-frame stats.
/// Reconstructions are written as PGM when `recon_dir` is given.
pub fn encode_sequence(
    dir: impl AsRef<Path>,
    config: &EncoderConfig,
    recon_dir: Option<&Path>,
) -> Result<Vec<FrameStats>> {
    let seq = Sequence::load(dir, config.mode().uses_true_motion())?;
    let frames = encode_loaded(&seq, config)?;
    if let Some(rd) = recon_dir {
        std::fs::create_dir_all(rd).map_err(|e| Error::Io {
            path: rd.to_path_buf(),
            source: e,
        })?;
        for f in &frames {
            write_frame(&f.recon, rd.join(format!("recon_{:04}.pgm", f.stats.frame_index)))?;
        }
    }
    Ok(frames.into_iter().map(|f| f.stats).collect())
}

pub const STATS_HEADER: &str = "frame,bits,psnr_y,wall_s,pu_conv,pu_prop";

/// Sequence totals: bits, mean PSNR and wall time summed over frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsTotals {
    pub bits: u64,
    pub mean_psnr: f64,
    pub wall_seconds: f64,
    pub pu_conventional: usize,
    pub pu_proposed: usize,
}

pub fn totals(stats: &[FrameStats]) -> StatsTotals {
    StatsTotals {
        bits: stats.iter().map(|s| s.bits).sum(),
        mean_psnr: stats.iter().map(|s| s.psnr_y).sum::<f64>() / stats.len().max(1) as f64,
        wall_seconds: stats.iter().map(|s| s.wall_seconds).sum(),
        pu_conventional: stats.iter().map(|s| s.pu_conventional).sum(),
        pu_proposed: stats.iter().map(|s| s.pu_proposed).sum(),
    }
}

pub fn stats_to_csv(stats: &[FrameStats]) -> String {
    let mut s = String::from(STATS_HEADER);
    s.push('\n');
    for f in stats {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{},{}",
            f.frame_index, f.bits, f.psnr_y, f.wall_seconds, f.pu_conventional, f.pu_proposed
        );
    }
    let t = totals(stats);
    let _ = writeln!(
        s,
        "total,{},{:.6},{:.6},{},{}",
        t.bits, t.mean_psnr, t.wall_seconds, t.pu_conventional, t.pu_proposed
    );
    s
}

/// Reads the `total` row of a stats CSV.
pub fn parse_stats_totals(csv: &str) -> Result<StatsTotals> {
    let mut lines = csv.lines();
    if lines.next().map(str::trim) != Some(STATS_HEADER) {
        return Err(Error::format("stats", "missing or unexpected header"));
    }
    let row = lines
        .map(str::trim)
        .find(|l| l.starts_with("total,"))
        .ok_or_else(|| Error::format("stats", "missing total row"))?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::format("stats", format!("total row has {} fields", fields.len())));
    }
    let bad = |f: &'static str| Error::format(f, "unparseable value in total row");
    Ok(StatsTotals {
        bits: fields[1].parse().map_err(|_| bad("bits"))?,
        mean_psnr: fields[2].parse().map_err(|_| bad("psnr_y"))?,
        wall_seconds: fields[3].parse().map_err(|_| bad("wall_s"))?,
        pu_conventional: fields[4].parse().map_err(|_| bad("pu_conv"))?,
        pu_proposed: fields[5].parse().map_err(|_| bad("pu_prop"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block_from(f: impl Fn(usize) -> f64) -> Block {
        std::array::from_fn(f)
    }

    #[test]
    fn constant_block_has_only_dc() {
        let c = forward_transform(&[5.0; 64]);
        assert!((c[0] - 40.0).abs() < 1e-9);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn transform_round_trip_and_energy() {
        let x = block_from(|i| ((i * 37) % 23) as f64 - 11.5);
        let c = forward_transform(&x);
        let y = inverse_transform(&c);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-6);
        }
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        assert!((ex - ec).abs() < 1e-6);
    }

    #[test]
    fn quantizer_steps() {
        assert_eq!(qstep(22), 8.0);
        assert_eq!(qstep(4), 1.0);
        assert_eq!(qstep(10), 2.0);
        assert!((qstep(27) - 2f64.powf(23.0 / 6.0)).abs() < 1e-12);
        let mut c = [0.0; 64];
        c[0] = 12.0;
        c[1] = -12.0;
        c[2] = 11.9;
        let l = quantize(&c, 22);
        assert_eq!(&l[..3], &[2, -2, 1]);
        assert_eq!(dequantize(&l, 22)[0], 16.0);
        let r = quantize(&[2.5; 64], 4);
        assert!(r.iter().all(|&v| v == 3));
    }

    #[test]
    fn residual_bit_counts() {
        assert_eq!(residual_bits(&[0; 64]), 1);
        let mut one = [0; 64];
        one[5] = 1;
        assert_eq!(residual_bits(&one), 67);
        let alt: Levels = std::array::from_fn(|i| if i % 2 == 0 { 1 } else { -1 });
        assert_eq!(residual_bits(&alt), 193);
    }

    fn config(mode: SearchMode) -> EncoderConfig {
        EncoderConfig::for_qp(22, 16, 64, mode).unwrap()
    }

    /// Piecewise constant on 8×8 blocks with values that survive qp 22 exactly.
    fn blocky(w: usize, h: usize) -> Frame {
        let samples = (0..w * h)
            .map(|i| {
                let (bx, by) = ((i % w) / 8, (i / w) / 8);
                (64 + ((bx * 37 + by * 91) % 120)) as u8
            })
            .collect();
        Frame::new(w, h, samples).unwrap()
    }

    #[test]
    fn flat_first_frame_is_free() {
        let f = Frame::filled(32, 32, 128).unwrap();
        let e = encode_frame(&f, None, None, &config(SearchMode::Conventional), 0).unwrap();
        assert_eq!(e.recon, f);
        assert_eq!(e.stats.psnr_y, 99.0);
        assert_eq!(e.stats.bits, HEADER_BITS_PER_FRAME + 16);
    }

    #[test]
    fn static_pair_costs_only_flags() {
        let f = blocky(64, 48);
        let cfg = config(SearchMode::Conventional);
        let e0 = encode_frame(&f, None, None, &cfg, 0).unwrap();
        assert_eq!(e0.recon, f);
        let e1 = encode_frame(&f, Some(&e0.recon), None, &cfg, 1).unwrap();
        assert!(e1.pus.iter().all(|p| p.decision.mv == Mv::ZERO));
        assert!(e1.levels.iter().all(|l| l.iter().all(|&v| v == 0)));
        let pus = (64 / 16) * (48 / 16);
        assert_eq!(e1.stats.bits, HEADER_BITS_PER_FRAME + pus as u64 * (3 + 4));
    }

    #[test]
    fn proposed_mode_requires_grid() {
        let f = blocky(32, 32);
        let err = encode_frame(&f, Some(&f), None, &config(SearchMode::Combined), 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unaligned_frame_is_rejected() {
        let f = Frame::filled(40, 32, 0).unwrap();
        assert!(encode_frame(&f, None, None, &config(SearchMode::Conventional), 0).is_err());
    }

    #[test]
    fn qp_range_enforced() {
        assert!(EncoderConfig::for_qp(52, 16, 64, SearchMode::Combined).is_err());
        assert!(EncoderConfig::for_qp(51, 16, 64, SearchMode::Combined).is_ok());
    }

    #[test]
    fn csv_round_trip_of_totals() {
        let stats = vec![
            FrameStats { frame_index: 0, bits: 1000, psnr_y: 40.0, wall_seconds: 0.5, pu_conventional: 0, pu_proposed: 0 },
            FrameStats { frame_index: 1, bits: 500, psnr_y: 38.0, wall_seconds: 0.25, pu_conventional: 3, pu_proposed: 1 },
        ];
        let csv = stats_to_csv(&stats);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], STATS_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "total,1500,39.000000,0.750000,3,1");
        let t = parse_stats_totals(&csv).unwrap();
        assert_eq!(t.bits, 1500);
        assert_eq!(t.pu_proposed, 1);
        assert!(parse_stats_totals("frame,bits\n").is_err());
    }

    proptest! {
        #[test]
        fn decoder_matches_encoder(seed in any::<u64>(), qp in 0u8..52) {
            let mut s = seed | 1;
            let mut next = || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; s };
            let f0 = Frame::new(32, 32, (0..1024).map(|_| (next() % 256) as u8).collect()).unwrap();
            let f1 = Frame::new(32, 32, (0..1024).map(|_| (next() % 256) as u8).collect()).unwrap();
            let cfg = EncoderConfig::for_qp(qp, 16, 8, SearchMode::Conventional).unwrap();
            let e0 = encode_frame(&f0, None, None, &cfg, 0).unwrap();
            let r0 = reconstruct_frame(32, 32, None, 16, &[], &e0.levels, qp).unwrap();
            prop_assert_eq!(&r0, &e0.recon);
            let e1 = encode_frame(&f1, Some(&e0.recon), None, &cfg, 1).unwrap();
            let mvs: Vec<Mv> = e1.pus.iter().map(|p| p.decision.mv).collect();
            let r1 = reconstruct_frame(32, 32, Some(&r0), 16, &mvs, &e1.levels, qp).unwrap();
            prop_assert_eq!(&r1, &e1.recon);
        }
    }
}
