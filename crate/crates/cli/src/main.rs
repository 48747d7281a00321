//! `truemv`: sequence generation, encoding, mask inspection and BD-rate
//! reporting. Exit status is 0 on success, 1 on runtime or data errors and 2
//! on usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use truemv_core::codec::{encode_sequence, parse_stats_totals, stats_to_csv, totals, EncoderConfig};
use truemv_core::disocclusion::{mask_frame, DisocclusionParams};
use truemv_core::eval::{bd_rate, time_delta, RdCurve, RdPoint, QPS};
use truemv_core::search::{SearchMode, DEFAULT_PU_SIZE, DEFAULT_SEARCH_RANGE};
use truemv_core::seqio::write_frame;
use truemv_core::synthgen::{mask_to_frame, preset, render_sequence, Preset};
use truemv_core::Sequence;

#[derive(Parser)]
#[command(name = "truemv", version, about = "True-motion assisted block motion search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic sequence with motion and depth sidecars.
    Synthgen {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a sequence directory and write per-frame statistics as CSV.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=51))]
        qp: u8,
        #[arg(long)]
        mode: SearchMode,
        #[arg(long, default_value_t = DEFAULT_PU_SIZE)]
        pu_size: usize,
        #[arg(long, default_value_t = DEFAULT_SEARCH_RANGE)]
        search_range: u32,
        #[arg(long)]
        out: PathBuf,
        /// Directory for reconstructed frames.
        #[arg(long)]
        recon: Option<PathBuf>,
    },
    /// Write the disocclusion mask of one frame as a PGM.
    Maskdump {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        frame: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two directories of qp22.csv..qp37.csv statistics.
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synthgen { preset: p, width, height, frames, seed, out } => {
            let scene = preset(p, width, height, frames, seed)?;
            render_sequence(&scene, &out)?;
            println!("wrote {} frames of {}x{} to {}", frames, width, height, out.display());
        }
        Command::Encode { input, qp, mode, pu_size, search_range, out, recon } => {
            let config = EncoderConfig::for_qp(qp, pu_size, search_range, mode)?;
            let stats = encode_sequence(&input, &config, recon.as_deref())?;
            std::fs::write(&out, stats_to_csv(&stats)).with_context(|| format!("writing {}", out.display()))?;
            let t = totals(&stats);
            println!("total_bits={}", t.bits);
            println!("mean_psnr_y={:.4}", t.mean_psnr);
            println!("wall_seconds={:.4}", t.wall_seconds);
        }
        Command::Maskdump { input, frame, out } => {
            let seq = Sequence::load(&input, true)?;
            if frame == 0 {
                bail!("frame 0 has no previous frame and no motion field");
            }
            if frame >= seq.frames.len() {
                bail!("frame {frame} out of range, sequence has {} frames", seq.frames.len());
            }
            let depth = seq.depth.as_ref().context("sequence has no depth maps")?;
            let motion = seq
                .motion
                .as_ref()
                .and_then(|m| m[frame].as_ref())
                .context("sequence has no motion field for this frame")?;
            let mask = mask_frame(&depth[frame], &depth[frame - 1], motion, &DisocclusionParams::default())?;
            write_frame(&mask_to_frame(&mask)?, &out)?;
            println!("disoccluded_pixels={}", mask.count());
        }
        Command::Bdrate { anchor, test } => {
            let (a, a_secs) = load_curve(&anchor)?;
            let (t, t_secs) = load_curve(&test)?;
            println!("bd_rate_percent={:?}", bd_rate(&a, &t)?);
            println!("delta_t_percent={:?}", time_delta(a_secs, t_secs)?);
        }
    }
    Ok(())
}

/// RD curve and total wall time from `qp22.csv`..`qp37.csv` in `dir`.
fn load_curve(dir: &Path) -> Result<(RdCurve, f64)> {
    let mut seconds = 0.0;
    let mut points = [RdPoint::new(0.0, 0.0); 4];
    for (p, qp) in points.iter_mut().zip(QPS) {
        let path = dir.join(format!("qp{qp}.csv"));
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let t = parse_stats_totals(&text).with_context(|| format!("parsing {}", path.display()))?;
        seconds += t.wall_seconds;
        *p = RdPoint::new(t.bits as f64, t.mean_psnr);
    }
    Ok((RdCurve::new(points)?, seconds))
}
