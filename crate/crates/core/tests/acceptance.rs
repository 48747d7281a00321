//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use truemv_core::codec::{
    dequantize, encode_loaded, forward_transform, inverse_transform, qstep, quantize,
    reconstruct_frame, totals, EncodedFrame, EncoderConfig,
};
use truemv_core::disocclusion::{mask_frame, DisocclusionParams};
use truemv_core::eval::{bd_rate, RdCurve, RdPoint, QPS};
use truemv_core::mvmap::map_block;
use truemv_core::search::{
    conventional_search, signed_exp_golomb_len, PuContext, SearchMode, DEFAULT_PU_SIZE,
    DEFAULT_SEARCH_RANGE,
};
use truemv_core::synthgen::{preset, preset_with, render, MotionPrecision, Preset};
use truemv_core::{Mv, Sequence};

type Outcome = Result<String, String>;

fn sequence(p: Preset, w: usize, h: usize, frames: usize, seed: u64) -> Sequence {
    render(&preset(p, w, h, frames, seed).unwrap())
        .unwrap()
        .into_sequence()
}

fn encode(seq: &Sequence, qp: u8, mode: SearchMode) -> Vec<EncodedFrame> {
    let cfg = EncoderConfig::for_qp(qp, DEFAULT_PU_SIZE, DEFAULT_SEARCH_RANGE, mode).unwrap();
    encode_loaded(seq, &cfg).unwrap()
}

/// RD curve over the four QPs plus total wall time.
fn rd_curve(seq: &Sequence, mode: SearchMode) -> (RdCurve, f64) {
    let mut wall = 0.0;
    let points = QPS.map(|qp| {
        let stats: Vec<_> = encode(seq, qp, mode).into_iter().map(|f| f.stats).collect();
        let t = totals(&stats);
        wall += t.wall_seconds;
        RdPoint::new(t.bits as f64, t.mean_psnr)
    });
    (RdCurve::new(points).unwrap(), wall)
}

fn bd_between(seq: &Sequence, anchor: SearchMode, test: SearchMode) -> f64 {
    let (a, _) = rd_curve(seq, anchor);
    let (t, _) = rd_curve(seq, test);
    bd_rate(&a, &t).unwrap()
}

fn criterion_1_superset() -> Outcome {
    let start = Instant::now();
    let seq = sequence(Preset::Arrows, 352, 288, 15, 1);
    let (mut checked, mut violations, mut proposed_wins) = (0usize, 0usize, 0usize);
    for qp in QPS {
        let cfg = EncoderConfig::for_qp(qp, DEFAULT_PU_SIZE, DEFAULT_SEARCH_RANGE, SearchMode::Combined).unwrap();
        let frames = encode_loaded(&seq, &cfg).unwrap();
        for t in 1..frames.len() {
            for pu in &frames[t].pus {
                let ctx = PuContext {
                    cur: &seq.frames[t],
                    reference: &frames[t - 1].recon,
                    x: pu.x,
                    y: pu.y,
                    size: DEFAULT_PU_SIZE,
                    mvps: pu.mvps,
                    lambda_motion: cfg.search().lambda_motion(),
                };
                let conv = conventional_search(&ctx, DEFAULT_SEARCH_RANGE);
                checked += 1;
                if pu.decision.motion_cost > conv.motion_cost {
                    violations += 1;
                }
                if pu.decision.motion_cost < conv.motion_cost {
                    proposed_wins += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{checked} PUs, {violations} violations, {proposed_wins} strictly improved, {secs:.1} s");
    if violations == 0 && secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2_disocclusion() -> Outcome {
    let start = Instant::now();
    let params = DisocclusionParams::default();
    let mut worst_quarter: f64 = 1.0;
    let mut integer_exact = true;
    let mut marked = 0;
    for precision in [MotionPrecision::IntegerPel, MotionPrecision::QuarterPel] {
        let scene = preset_with(Preset::Layers, 352, 288, 15, 5, precision).unwrap();
        let r = render(&scene).unwrap();
        for t in 1..r.frames.len() {
            let mask = mask_frame(&r.depth[t], &r.depth[t - 1], r.motion[t].as_ref().unwrap(), &params).unwrap();
            let truth = r.masks[t].as_ref().unwrap();
            marked += truth.count();
            let agreement = mask.agreement(truth);
            match precision {
                MotionPrecision::IntegerPel => integer_exact &= agreement == 1.0,
                MotionPrecision::QuarterPel => worst_quarter = worst_quarter.min(agreement),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "integer-pel exact: {integer_exact}, worst quarter-pel frame agreement {:.4}%, {marked} truth pixels, {secs:.1} s",
        100.0 * worst_quarter
    );
    if integer_exact && worst_quarter >= 0.99 && marked > 0 && secs < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3_large_motion() -> Outcome {
    let start = Instant::now();
    let seq = sequence(Preset::LargeMotion, 320, 192, 10, 7);
    let bd = bd_between(&seq, SearchMode::Conventional, SearchMode::Combined);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("BD-rate combined vs conventional {bd:.3}%, {secs:.1} s");
    if bd <= -5.0 && secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4_non_harm() -> Outcome {
    let arrows = bd_between(&sequence(Preset::Arrows, 352, 288, 15, 1), SearchMode::Conventional, SearchMode::Combined);
    let layers = bd_between(&sequence(Preset::Layers, 352, 288, 15, 1), SearchMode::Conventional, SearchMode::Combined);
    let detail = format!("arrows {arrows:.3}%, layers {layers:.3}%");
    if arrows <= 0.5 && layers <= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5_replacement() -> Outcome {
    let seq = sequence(Preset::Arrows, 352, 288, 15, 1);
    let bd = bd_between(&seq, SearchMode::Combined, SearchMode::ProposedOnly);
    let detail = format!("BD-rate proposed-only vs combined {bd:.3}%");
    if bd > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6_bd_fixtures() -> Outcome {
    let anchor = RdCurve::new([
        RdPoint::new(412_000.0, 41.7),
        RdPoint::new(236_500.0, 38.9),
        RdPoint::new(131_200.0, 35.8),
        RdPoint::new(74_900.0, 32.6),
    ])
    .unwrap();
    let scaled = RdCurve::new(anchor.points().map(|p| RdPoint::new(0.9 * p.bits, p.psnr))).unwrap();
    let other = RdCurve::new([
        RdPoint::new(398_000.0, 41.9),
        RdPoint::new(240_100.0, 39.2),
        RdPoint::new(125_000.0, 35.7),
        RdPoint::new(70_300.0, 32.2),
    ])
    .unwrap();
    let same = bd_rate(&anchor, &anchor).unwrap();
    let tenth = bd_rate(&anchor, &scaled).unwrap();
    let ab = bd_rate(&anchor, &other).unwrap();
    let ba = bd_rate(&other, &anchor).unwrap();
    let product = (1.0 + ab / 100.0) * (1.0 + ba / 100.0);
    let detail = format!("identical {same}, 0.9x {tenth:.9}%, anti-symmetry product - 1 = {:.2e}", product - 1.0);
    if same == 0.0 && (tenth + 10.0).abs() <= 1e-6 && (product - 1.0).abs() <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Length of the signed exp-Golomb codeword of `v`, built bit by bit.
fn exp_golomb_codeword_len(v: i64) -> usize {
    let code_num: u64 = if v > 0 { (2 * v - 1) as u64 } else { (-2 * v) as u64 };
    let info = format!("{:b}", code_num + 1);
    let prefix = "0".repeat(info.len() - 1);
    (prefix + &info).len()
}

fn criterion_7_kernels() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let block: [f64; 64] = std::array::from_fn(|_| rng.gen_range(-255.0..255.0));
        let back = inverse_transform(&forward_transform(&block));
        for (a, b) in block.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    let q22 = qstep(22);
    let eg_mismatch = (-1000i64..=1000)
        .filter(|&v| signed_exp_golomb_len(v) as usize != exp_golomb_codeword_len(v))
        .count();
    // quantizer sanity on the exact step
    let mut c = [0.0; 64];
    c[0] = 12.0;
    let deq = dequantize(&quantize(&c, 22), 22)[0];
    let detail = format!("round-trip max error {worst:.2e}, Qstep(22) = {q22}, eg0 mismatches {eg_mismatch}, dequant(12) = {deq}");
    if worst <= 1e-6 && q22 == 8.0 && eg_mismatch == 0 && deq == 16.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Representative by direct enumeration: the lower median is the value with
/// at most 7 samples strictly below it and at least 8 at or below it.
fn brute_force_representative(v: &[Mv; 16]) -> Mv {
    let rank_median = |get: &dyn Fn(&Mv) -> i32| -> i32 {
        v.iter()
            .map(get)
            .find(|&c| {
                let below = v.iter().filter(|m| get(m) < c).count();
                let at_or_below = v.iter().filter(|m| get(m) <= c).count();
                below <= 7 && at_or_below >= 8
            })
            .unwrap()
    };
    let xm = rank_median(&|m| m.x);
    let ym = rank_median(&|m| m.y);
    let mut cand_x = None;
    let mut cand_y = None;
    for m in v {
        if cand_x.is_none() && m.x == xm {
            cand_x = Some(*m);
        }
        if cand_y.is_none() && m.y == ym {
            cand_y = Some(*m);
        }
    }
    let (a, b) = (cand_x.unwrap(), cand_y.unwrap());
    let err = |c: Mv| -> i64 {
        v.iter()
            .map(|m| {
                let dx = i64::from(c.x - m.x);
                let dy = i64::from(c.y - m.y);
                dx * dx + dy * dy
            })
            .sum()
    };
    if err(b) < err(a) {
        b
    } else {
        a
    }
}

fn criterion_8_mapping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut non_member, mut mismatch, mut invalid) = (0, 0, 0);
    for i in 0..10_000 {
        // mix narrow and wide distributions so ties and duplicates occur
        let spread = if i % 2 == 0 { 3 } else { 400 };
        let v: [Mv; 16] = std::array::from_fn(|_| Mv::new(rng.gen_range(-spread..=spread), rng.gen_range(-spread..=spread)));
        let (x, y) = (rng.gen_range(0..16usize) * 4, rng.gen_range(0..16usize) * 4);
        let b = map_block(&v, x, y, 64, 64);
        if !b.valid {
            invalid += 1;
        }
        if !v.contains(&b.mv) {
            non_member += 1;
        }
        if b.mv != brute_force_representative(&v) {
            mismatch += 1;
        }
    }
    let detail = format!("{non_member} non-members, {mismatch} oracle mismatches, {invalid} invalid of 10000");
    if non_member == 0 && mismatch == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9_closed_loop() -> Outcome {
    let mut frames_checked = 0;
    let mut mismatches = Vec::new();
    for p in Preset::ALL {
        let (w, h, n) = match p {
            Preset::LargeMotion => (320, 192, 10),
            _ => (176, 144, 8),
        };
        let seq = sequence(p, w, h, n, 3);
        let encoded = encode(&seq, 27, SearchMode::Combined);
        let mut previous = None;
        for (t, e) in encoded.iter().enumerate() {
            let motion: Vec<Mv> = e.pus.iter().map(|p| p.decision.mv).collect();
            let rec = reconstruct_frame(w, h, previous.as_ref(), DEFAULT_PU_SIZE, &motion, &e.levels, 27).unwrap();
            if rec != e.recon {
                mismatches.push(format!("{} frame {t}", p.name()));
            }
            frames_checked += 1;
            previous = Some(rec);
        }
    }
    let detail = format!("{frames_checked} frames over {} presets, mismatches {:?}", Preset::ALL.len(), mismatches);
    if mismatches.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10_timing() -> Outcome {
    let seq = sequence(Preset::Layers, 352, 288, 15, 1);
    let time = |mode| {
        (0..3)
            .map(|_| {
                let stats: Vec<_> = encode(&seq, 27, mode).into_iter().map(|f| f.stats).collect();
                totals(&stats).wall_seconds
            })
            .fold(f64::INFINITY, f64::min)
    };
    let conv = time(SearchMode::Conventional);
    let comb = time(SearchMode::Combined);
    let delta = (comb - conv) / conv * 100.0;
    let detail = format!("conventional {conv:.3} s, combined {comb:.3} s, delta {delta:+.1}% (min of 3)");
    if comb >= conv {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("superset optimality", criterion_1_superset),
        ("disocclusion oracle", criterion_2_disocclusion),
        ("large-motion rate savings", criterion_3_large_motion),
        ("non-harm on arrows and layers", criterion_4_non_harm),
        ("replacement direction", criterion_5_replacement),
        ("BD-rate analytic fixtures", criterion_6_bd_fixtures),
        ("numerical kernels", criterion_7_kernels),
        ("mapping property suite", criterion_8_mapping),
        ("closed-loop integrity", criterion_9_closed_loop),
        ("timing report sanity", criterion_10_timing),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
