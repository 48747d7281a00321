//! Synthetic sequences with exact ground truth.
//!
//! Scenes are textured rectangles ("sprites") translating over a static
//! textured background. Rendering happens on a 4× supersampled grid, where
//! one sample is exactly one quarter pixel, so integer quarter-pel
//! velocities move sprites by whole samples and the per-pixel motion,
//! depth and disocclusion ground truth are exact. Output pixels are 4×4 box
//! averages; ground truth is read from the sample at each pixel centre.

use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disocclusion::DisocclusionMask;
use crate::error::{Error, Result};
use crate::seqio::{
    write_depth_map, write_frame, write_motion_field, DepthMap, Frame, MotionField, MotionSample,
    SequenceManifest, MANIFEST_FILE,
};

/// Supersampling factor; one sample per quarter pel.
pub const SS: usize = 4;

/// Scene dimensions must be a multiple of this (the default PU size).
pub const SCENE_ALIGN: usize = 16;

pub const BACKGROUND_DEPTH: f32 = 1.0;

pub const FRAME_PATTERN: &str = "frame_%04d.pgm";
pub const MVF_PATTERN: &str = "mvf_%04d.mvf";
pub const DEPTH_PATTERN: &str = "depth_%04d.dpt";
pub const MASK_PATTERN: &str = "gtmask_%04d.pgm";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice_value(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(ix as u64 ^ splitmix64(iy as u64)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: usize, y: usize, period: usize) -> f64 {
    let (ix, iy) = ((x / period) as i64, (y / period) as i64);
    let fx = (x % period) as f64 / period as f64;
    let fy = (y % period) as f64 / period as f64;
    let v00 = lattice_value(seed, ix, iy);
    let v10 = lattice_value(seed, ix + 1, iy);
    let v01 = lattice_value(seed, ix, iy + 1);
    let v11 = lattice_value(seed, ix + 1, iy + 1);
    (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
}

const COARSE_PERIOD: usize = 32;
const FINE_PERIOD: usize = 12;
pub const TEXTURE_MIN: u8 = 32;
pub const TEXTURE_MAX: u8 = 224;

/// Two-octave value noise in `[32, 224]`, `w`×`h` samples in raster order.
pub fn texture(seed: u64, w: usize, h: usize) -> Vec<u8> {
    let fine_seed = splitmix64(seed ^ 0x5eed_f1e1d);
    let span = f64::from(TEXTURE_MAX - TEXTURE_MIN);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = (2.0 * value_noise(seed, x, y, COARSE_PERIOD)
                + value_noise(fine_seed, x, y, FINE_PERIOD))
                / 3.0;
            out.push((f64::from(TEXTURE_MIN) + span * v).round() as u8);
        }
    }
    out
}

/// A textured rectangle moving with constant velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct SpriteSpec {
    /// Size in output pixels.
    pub width: usize,
    pub height: usize,
    /// Top-left corner at frame 0, quarter-pel.
    pub x: i64,
    pub y: i64,
    /// Quarter-pel displacement per frame.
    pub vx: i32,
    pub vy: i32,
    pub depth: f64,
    pub depth_velocity: f64,
    pub texture_seed: u64,
}

impl SpriteSpec {
    fn position(&self, t: usize) -> (i64, i64) {
        (
            self.x + t as i64 * i64::from(self.vx),
            self.y + t as i64 * i64::from(self.vy),
        )
    }

    fn depth_at(&self, t: usize) -> f64 {
        self.depth + t as f64 * self.depth_velocity
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub background_seed: u64,
    /// Earlier sprites win depth ties.
    pub sprites: Vec<SpriteSpec>,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid("scene", m));
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(SCENE_ALIGN) || !self.height.is_multiple_of(SCENE_ALIGN) {
            return bad(format!(
                "{}x{} is not a positive multiple of {SCENE_ALIGN}",
                self.width, self.height
            ));
        }
        if self.frame_count == 0 {
            return bad("no frames".into());
        }
        let (cw, ch) = ((self.width * SS) as i64, (self.height * SS) as i64);
        for (k, s) in self.sprites.iter().enumerate() {
            if s.width == 0 || s.height == 0 {
                return bad(format!("sprite {k} is empty"));
            }
            let last = s.depth + self.frame_count as f64 * s.depth_velocity;
            if !(s.depth > 0.0 && s.depth < 1.0 && last > 0.0 && last < 1.0) {
                return bad(format!("sprite {k} depth leaves (0, 1)"));
            }
            for t in 0..self.frame_count {
                let (x, y) = s.position(t);
                let (sw, sh) = ((s.width * SS) as i64, (s.height * SS) as i64);
                if x >= cw || y >= ch || x + sw <= 0 || y + sh <= 0 {
                    return Err(Error::invalid(
                        "scene",
                        format!("sprite {k} leaves the canvas entirely at frame {t}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A rendered sequence held in memory. `motion[t]` and `masks[t]` are `None`
/// for frame 0.
#[derive(Clone, Debug)]
pub struct Rendered {
    pub frames: Vec<Frame>,
    pub depth: Vec<DepthMap>,
    pub motion: Vec<Option<MotionField>>,
    pub masks: Vec<Option<DisocclusionMask>>,
}

impl Rendered {
    pub fn into_sequence(self) -> crate::seqio::Sequence {
        crate::seqio::Sequence {
            frames: self.frames,
            motion: Some(self.motion),
            depth: Some(self.depth),
        }
    }
}

/// Supersampled surface ids of one frame; 0 is the background, `k + 1` sprite `k`.
struct SurfaceMap {
    width: usize,
    ids: Vec<u16>,
}

impl SurfaceMap {
    fn at(&self, sx: usize, sy: usize) -> u16 {
        self.ids[sy * self.width + sx]
    }
}

fn surfaces(scene: &SceneSpec, t: usize) -> SurfaceMap {
    let (cw, ch) = (scene.width * SS, scene.height * SS);
    let mut ids = vec![0u16; cw * ch];
    // paint far to near; among equal depths the earlier sprite ends on top
    let mut order: Vec<usize> = (0..scene.sprites.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (scene.sprites[a].depth_at(t), scene.sprites[b].depth_at(t));
        db.total_cmp(&da).then(b.cmp(&a))
    });
    for k in order {
        let s = &scene.sprites[k];
        let (x, y) = s.position(t);
        let x0 = x.clamp(0, cw as i64) as usize;
        let x1 = (x + (s.width * SS) as i64).clamp(0, cw as i64) as usize;
        let y0 = y.clamp(0, ch as i64) as usize;
        let y1 = (y + (s.height * SS) as i64).clamp(0, ch as i64) as usize;
        for sy in y0..y1 {
            ids[sy * cw + x0..sy * cw + x1].fill(k as u16 + 1);
        }
    }
    SurfaceMap { width: cw, ids }
}

/// Renders every frame with its ground truth.
pub fn render(scene: &SceneSpec) -> Result<Rendered> {
    scene.validate()?;
    let (w, h) = (scene.width, scene.height);
    let cw = w * SS;
    let background = texture(scene.background_seed, cw, h * SS);
    let textures: Vec<Vec<u8>> = scene
        .sprites
        .iter()
        .map(|s| texture(s.texture_seed, s.width * SS, s.height * SS))
        .collect();

    let mut out = Rendered {
        frames: Vec::with_capacity(scene.frame_count),
        depth: Vec::with_capacity(scene.frame_count),
        motion: Vec::with_capacity(scene.frame_count),
        masks: Vec::with_capacity(scene.frame_count),
    };
    let mut previous: Option<SurfaceMap> = None;

    for t in 0..scene.frame_count {
        let map = surfaces(scene, t);
        let positions: Vec<(i64, i64)> = scene.sprites.iter().map(|s| s.position(t)).collect();
        let sample = |sx: usize, sy: usize| -> u32 {
            match map.at(sx, sy) {
                0 => u32::from(background[sy * cw + sx]),
                id => {
                    let k = id as usize - 1;
                    let (px, py) = positions[k];
                    let lx = (sx as i64 - px) as usize;
                    let ly = (sy as i64 - py) as usize;
                    u32::from(textures[k][ly * scene.sprites[k].width * SS + lx])
                }
            }
        };

        let mut pixels = Vec::with_capacity(w * h);
        let mut depths = Vec::with_capacity(w * h);
        let mut vectors = Vec::with_capacity(w * h);
        let mut flags = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0;
                for dy in 0..SS {
                    for dx in 0..SS {
                        sum += sample(x * SS + dx, y * SS + dy);
                    }
                }
                pixels.push(((sum + 8) / 16) as u8);

                let (cx, cy) = (x * SS + SS / 2, y * SS + SS / 2);
                let id = map.at(cx, cy);
                let (depth, m) = if id == 0 {
                    (BACKGROUND_DEPTH, MotionSample::default())
                } else {
                    let s = &scene.sprites[id as usize - 1];
                    let mz = if t > 0 {
                        (s.depth_at(t - 1) - s.depth_at(t)) as f32
                    } else {
                        0.0
                    };
                    (s.depth_at(t) as f32, MotionSample::new(-s.vx, -s.vy, mz))
                };
                depths.push(depth);
                vectors.push(m);

                if let Some(prev) = &previous {
                    let px = cx as i64 + i64::from(m.mx);
                    let py = cy as i64 + i64::from(m.my);
                    let inside = px >= 0 && py >= 0 && px < cw as i64 && py < (h * SS) as i64;
                    flags.push(!inside || prev.at(px as usize, py as usize) != id);
                }
            }
        }
        out.frames.push(Frame::new(w, h, pixels)?);
        out.depth.push(DepthMap::new(w, h, depths)?);
        if t == 0 {
            out.motion.push(None);
            out.masks.push(None);
        } else {
            out.motion.push(Some(MotionField::new(w, h, vectors)?));
            out.masks.push(Some(DisocclusionMask::new(w, h, flags)?));
        }
        previous = Some(map);
    }
    Ok(out)
}

/// Encodes a mask as PGM: 0 visible, 255 disoccluded.
pub fn mask_to_frame(mask: &DisocclusionMask) -> Result<Frame> {
    Frame::new(
        mask.width(),
        mask.height(),
        mask.flags().iter().map(|&f| if f { 255 } else { 0 }).collect(),
    )
}

/// Renders `scene` into `out_dir`: frames, motion fields, depth maps,
/// ground-truth masks and a manifest.
pub fn render_sequence(scene: &SceneSpec, out_dir: impl AsRef<Path>) -> Result<SequenceManifest> {
    let dir = out_dir.as_ref();
    let rendered = render(scene)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let name = |pattern: &str, t: usize| dir.join(crate::seqio::expand_pattern(pattern, t).expect("static pattern"));
    for t in 0..scene.frame_count {
        write_frame(&rendered.frames[t], name(FRAME_PATTERN, t))?;
        write_depth_map(&rendered.depth[t], name(DEPTH_PATTERN, t))?;
        if let Some(mf) = &rendered.motion[t] {
            write_motion_field(mf, name(MVF_PATTERN, t))?;
        }
        if let Some(mask) = &rendered.masks[t] {
            write_frame(&mask_to_frame(mask)?, name(MASK_PATTERN, t))?;
        }
    }
    let manifest = SequenceManifest {
        width: scene.width,
        height: scene.height,
        frame_count: scene.frame_count,
        frame_pattern: FRAME_PATTERN.into(),
        mvf_pattern: Some(MVF_PATTERN.into()),
        depth_pattern: Some(DEPTH_PATTERN.into()),
    };
    manifest.write(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Six small sprites drifting in different directions.
    Arrows,
    /// Eight large overlapping sprites that cross each other.
    Layers,
    /// One wide sprite moving 80 pixels per frame.
    LargeMotion,
    /// One sprite moving towards the camera.
    Approach,
    /// One sprite, nothing moves.
    Static,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Arrows,
        Preset::Layers,
        Preset::LargeMotion,
        Preset::Approach,
        Preset::Static,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Arrows => "arrows",
            Preset::Layers => "layers",
            Preset::LargeMotion => "largemotion",
            Preset::Approach => "approach",
            Preset::Static => "static",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

/// Grid on which preset velocities and start positions lie.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionPrecision {
    QuarterPel,
    /// Whole-pixel velocities and pixel-aligned start positions.
    IntegerPel,
}

/// Velocity of the large-motion preset in quarter-pel per frame (80 px).
pub const LARGE_MOTION_VELOCITY: i32 = 320;

/// Builds a preset scene with quarter-pel motion.
pub fn preset(name: Preset, width: usize, height: usize, frames: usize, seed: u64) -> Result<SceneSpec> {
    preset_with(name, width, height, frames, seed, MotionPrecision::QuarterPel)
}

pub fn preset_with(
    name: Preset,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
    precision: MotionPrecision,
) -> Result<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background_seed = rng.gen();
    let travel_frames = frames.saturating_sub(1) as i64;

    let velocity = |rng: &mut ChaCha8Rng, max: i32, min_norm: i32| -> (i32, i32) {
        loop {
            let (vx, vy) = match precision {
                MotionPrecision::QuarterPel => (rng.gen_range(-max..=max), rng.gen_range(-max..=max)),
                MotionPrecision::IntegerPel => (
                    4 * rng.gen_range(-max / 4..=max / 4),
                    4 * rng.gen_range(-max / 4..=max / 4),
                ),
            };
            let n2 = vx * vx + vy * vy;
            if n2 <= max * max && n2 >= min_norm * min_norm {
                return (vx, vy);
            }
        }
    };
    // start position (quarter-pel) keeping the sprite inside at both ends when possible
    let place = |rng: &mut ChaCha8Rng, extent: usize, size: usize, v: i32| -> i64 {
        let canvas = (extent * SS) as i64;
        let size = (size * SS) as i64;
        let drift = travel_frames * i64::from(v);
        let lo = 0.max(-drift);
        let hi = (canvas - size).min(canvas - size - drift);
        let q = if lo <= hi {
            rng.gen_range(lo..=hi)
        } else {
            (canvas - size - drift) / 2
        };
        match precision {
            MotionPrecision::QuarterPel => q,
            MotionPrecision::IntegerPel => q.div_euclid(4) * 4,
        }
    };

    let sprites = match name {
        Preset::Arrows | Preset::Layers => {
            let (count, max_v, min_v, size_lo, size_hi) = if name == Preset::Arrows {
                (6, 12, 2, 8, 5)
            } else {
                (8, 16, 4, 5, 3)
            };
            let mut slots: Vec<usize> = (0..9).collect();
            slots.shuffle(&mut rng);
            (0..count)
                .map(|k| {
                    let sw = rng.gen_range(width / size_lo..=width / size_hi).max(4);
                    let sh = rng.gen_range(height / size_lo..=height / size_hi).max(4);
                    let (vx, vy) = velocity(&mut rng, max_v, min_v);
                    let (x, y) = if name == Preset::Layers {
                        // start near the centre so that sprites overlap and cross
                        let cx = ((width * SS) as i64 - (sw * SS) as i64) / 2;
                        let cy = ((height * SS) as i64 - (sh * SS) as i64) / 2;
                        let jx = rng.gen_range(-(width as i64)..=width as i64);
                        let jy = rng.gen_range(-(height as i64)..=height as i64);
                        let snap = |q: i64| match precision {
                            MotionPrecision::QuarterPel => q,
                            MotionPrecision::IntegerPel => q.div_euclid(4) * 4,
                        };
                        (
                            snap(cx + jx - travel_frames * i64::from(vx) / 2),
                            snap(cy + jy - travel_frames * i64::from(vy) / 2),
                        )
                    } else {
                        (place(&mut rng, width, sw, vx), place(&mut rng, height, sh, vy))
                    };
                    SpriteSpec {
                        width: sw,
                        height: sh,
                        x,
                        y,
                        vx,
                        vy,
                        depth: 0.1 + 0.1 * slots[k] as f64,
                        depth_velocity: 0.0,
                        texture_seed: rng.gen(),
                    }
                })
                .collect()
        }
        Preset::LargeMotion => {
            let travel = travel_frames as usize * (LARGE_MOTION_VELOCITY as usize / SS);
            let sh = (height * 5 / 8).max(4);
            vec![SpriteSpec {
                width: width + travel,
                height: sh,
                x: -((travel * SS) as i64),
                y: (((height - sh) / 2) * SS) as i64,
                vx: LARGE_MOTION_VELOCITY,
                vy: 0,
                depth: 0.5,
                depth_velocity: 0.0,
                texture_seed: rng.gen(),
            }]
        }
        Preset::Approach => {
            let (sw, sh) = ((width / 3).max(4), (height / 3).max(4));
            let (vx, vy) = velocity(&mut rng, 8, 2);
            vec![SpriteSpec {
                width: sw,
                height: sh,
                x: place(&mut rng, width, sw, vx),
                y: place(&mut rng, height, sh, vy),
                vx,
                vy,
                depth: 0.7,
                depth_velocity: -0.5 / frames.max(1) as f64,
                texture_seed: rng.gen(),
            }]
        }
        Preset::Static => {
            let (sw, sh) = ((width / 3).max(4), (height / 3).max(4));
            vec![SpriteSpec {
                width: sw,
                height: sh,
                x: ((width - sw) / 2 * SS) as i64,
                y: ((height - sh) / 2 * SS) as i64,
                vx: 0,
                vy: 0,
                depth: 0.5,
                depth_velocity: 0.0,
                texture_seed: rng.gen(),
            }]
        }
    };

    let scene = SceneSpec {
        width,
        height,
        frame_count: frames,
        background_seed,
        sprites,
        seed,
    };
    scene.validate()?;
    Ok(scene)
}
