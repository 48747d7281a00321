//! Frames, motion fields, depth maps and their on-disk formats.
//!
//! * frames are binary PGM (`P5`, maxval 255), luma only;
//! * motion fields use the `MVF1` layout: magic, `u32` width, `u32` height,
//!   then per pixel `i32 mx`, `i32 my`, `f32 mz`, all little-endian;
//! * depth maps use the `DPT1` layout: magic, `u32` width, `u32` height,
//!   then one `f32` per pixel, little-endian.
//!
//! A [`SequenceManifest`] ties numbered files of each kind together.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mv::Mv;

/// An 8-bit single-plane image in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_dims("frame", width, height, samples.len())?;
        Ok(Frame {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Sample at `(x, y)` with coordinates clamped to the frame edge.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.samples);
        out
    }

    pub fn from_pgm_bytes(data: &[u8]) -> Result<Self> {
        let mut cur = PgmCursor { data, pos: 0 };
        if data.len() < 2 || &data[..2] != b"P5" {
            return Err(Error::format("magic", "expected binary PGM (P5)"));
        }
        cur.pos = 2;
        let width = cur.header_int("width")?;
        let height = cur.header_int("height")?;
        let maxval = cur.header_int("maxval")?;
        if maxval != 255 {
            return Err(Error::format(
                "maxval",
                format!("unsupported maxval {maxval}"),
            ));
        }
        // exactly one whitespace byte separates the header from the payload
        match data.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(Error::format("maxval", "missing whitespace after header")),
        }
        let need = width
            .checked_mul(height)
            .ok_or_else(|| Error::format("width", "dimension overflow"))?;
        let payload = &data[cur.pos..];
        if payload.len() < need {
            return Err(Error::format(
                "payload",
                format!("truncated: expected {need} bytes, found {}", payload.len()),
            ));
        }
        Frame::new(width, height, payload[..need].to_vec())
    }
}

struct PgmCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_int(&mut self, field: &'static str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .data
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(field, "malformed header"));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(field, "malformed header"))
    }
}

/// One pixel of backward motion: previous position = current position + motion.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MotionSample {
    /// Quarter-pel horizontal displacement.
    pub mx: i32,
    /// Quarter-pel vertical displacement.
    pub my: i32,
    /// Depth change, in normalized depth units.
    pub mz: f32,
}

impl MotionSample {
    pub fn new(mx: i32, my: i32, mz: f32) -> Self {
        MotionSample { mx, my, mz }
    }

    pub fn mv(&self) -> Mv {
        Mv::new(self.mx, self.my)
    }
}

/// Per-pixel true motion of frame `t` relative to frame `t - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionField {
    width: usize,
    height: usize,
    vectors: Vec<MotionSample>,
}

impl MotionField {
    pub fn new(width: usize, height: usize, vectors: Vec<MotionSample>) -> Result<Self> {
        check_dims("motion field", width, height, vectors.len())?;
        if let Some(i) = vectors.iter().position(|v| !v.mz.is_finite()) {
            return Err(Error::invalid(
                "motion field",
                format!("non-finite mz at pixel ({}, {})", i % width, i / width),
            ));
        }
        Ok(MotionField {
            width,
            height,
            vectors,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        MotionField::new(width, height, vec![MotionSample::default(); width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vectors(&self) -> &[MotionSample] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> MotionSample {
        self.vectors[y * self.width + x]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 12 * self.vectors.len());
        out.extend_from_slice(b"MVF1");
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&v.mx.to_le_bytes());
            out.extend_from_slice(&v.my.to_le_bytes());
            out.extend_from_slice(&v.mz.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let (width, height, payload) = split_sidecar(data, b"MVF", 12)?;
        let vectors = payload
            .chunks_exact(12)
            .map(|c| {
                MotionSample::new(
                    i32::from_le_bytes(c[0..4].try_into().unwrap()),
                    i32::from_le_bytes(c[4..8].try_into().unwrap()),
                    f32::from_le_bytes(c[8..12].try_into().unwrap()),
                )
            })
            .collect();
        MotionField::new(width, height, vectors)
    }
}

/// Per-pixel normalized depth of the visible surface, `0` near, `1` far.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depths: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depths: Vec<f32>) -> Result<Self> {
        check_dims("depth map", width, height, depths.len())?;
        if let Some(i) = depths
            .iter()
            .position(|d| !d.is_finite() || !(0.0..=1.0).contains(d))
        {
            return Err(Error::invalid(
                "depth map",
                format!(
                    "depth {} out of [0, 1] at pixel ({}, {})",
                    depths[i],
                    i % width,
                    i / width
                ),
            ));
        }
        Ok(DepthMap {
            width,
            height,
            depths,
        })
    }

    pub fn filled(width: usize, height: usize, depth: f32) -> Result<Self> {
        DepthMap::new(width, height, vec![depth; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depths(&self) -> &[f32] {
        &self.depths
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.depths[y * self.width + x]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.depths.len());
        out.extend_from_slice(b"DPT1");
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for d in &self.depths {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let (width, height, payload) = split_sidecar(data, b"DPT", 4)?;
        let depths = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DepthMap::new(width, height, depths)
    }
}

fn check_dims(what: &'static str, width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(what, format!("empty dimensions {width}x{height}")));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::invalid(
            what,
            format!("{len} samples for {width}x{height}"),
        ));
    }
    Ok(())
}

/// Validates a `XXX1` sidecar header and returns `(width, height, payload)`.
fn split_sidecar<'a>(
    data: &'a [u8],
    family: &[u8; 3],
    bytes_per_pixel: usize,
) -> Result<(usize, usize, &'a [u8])> {
    if data.len() < 12 {
        return Err(Error::format("header", "truncated header"));
    }
    if &data[..3] != family {
        return Err(Error::format("magic", "bad magic"));
    }
    if data[3] != b'1' {
        return Err(Error::format(
            "magic",
            format!("unsupported version {:?}", data[3] as char),
        ));
    }
    let width = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bytes_per_pixel))
        .ok_or_else(|| Error::format("width", "dimension overflow"))?;
    let payload = &data[12..];
    if payload.len() < need {
        return Err(Error::format(
            "payload",
            format!("truncated: expected {need} bytes, found {}", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(Error::format(
            "payload",
            format!("{} trailing bytes", payload.len() - need),
        ));
    }
    Ok((width, height, payload))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, data: &[u8]) -> Result<()> {
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<Frame> {
    Frame::from_pgm_bytes(&read_bytes(path.as_ref())?)
}

pub fn write_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &frame.to_pgm_bytes())
}

pub fn read_motion_field(path: impl AsRef<Path>) -> Result<MotionField> {
    MotionField::from_bytes(&read_bytes(path.as_ref())?)
}

pub fn write_motion_field(mf: &MotionField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &mf.to_bytes())
}

pub fn read_depth_map(path: impl AsRef<Path>) -> Result<DepthMap> {
    DepthMap::from_bytes(&read_bytes(path.as_ref())?)
}

pub fn write_depth_map(dm: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &dm.to_bytes())
}

/// Name of the manifest file inside a sequence directory.
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Describes a numbered sequence of frames with optional motion and depth
/// sidecars. Patterns carry one printf-style `%d` / `%0Nd` placeholder and
/// are resolved relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceManifest {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub frame_pattern: String,
    pub mvf_pattern: Option<String>,
    pub depth_pattern: Option<String>,
}

impl SequenceManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let (mut width, mut height, mut frames) = (None, None, None);
        let (mut frame, mut mvf, mut depth) = (None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format("manifest", format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let int = |field: &'static str| -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| Error::format(field, format!("not an integer: {value:?}")))
            };
            match key {
                "width" => width = Some(int("width")?),
                "height" => height = Some(int("height")?),
                "frames" => frames = Some(int("frames")?),
                "frame" => frame = Some(checked_pattern("frame", value)?),
                "mvf" => mvf = Some(checked_pattern("mvf", value)?),
                "depth" => depth = Some(checked_pattern("depth", value)?),
                _ => {
                    return Err(Error::format(
                        "manifest",
                        format!("unknown key {key:?}"),
                    ))
                }
            }
        }
        let missing = |f: &'static str| Error::format(f, "missing from manifest");
        let manifest = SequenceManifest {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            frame_count: frames.ok_or_else(|| missing("frames"))?,
            frame_pattern: frame.ok_or_else(|| missing("frame"))?,
            mvf_pattern: mvf,
            depth_pattern: depth,
        };
        if manifest.width == 0 || manifest.height == 0 || manifest.frame_count == 0 {
            return Err(Error::invalid("manifest", "dimensions and frames must be positive"));
        }
        Ok(manifest)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "width={}\nheight={}\nframes={}\nframe={}\n",
            self.width, self.height, self.frame_count, self.frame_pattern
        );
        if let Some(p) = &self.mvf_pattern {
            s.push_str(&format!("mvf={p}\n"));
        }
        if let Some(p) = &self.depth_pattern {
            s.push_str(&format!("depth={p}\n"));
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_bytes(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::format("manifest", "not valid UTF-8"))?;
        SequenceManifest::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), self.to_text().as_bytes())
    }
}

fn checked_pattern(field: &'static str, pattern: &str) -> Result<String> {
    expand_pattern(pattern, 0).map_err(|m| Error::format(field, m))?;
    Ok(pattern.to_string())
}

/// Substitutes `index` into the single `%d` / `%0Nd` placeholder of `pattern`.
pub fn expand_pattern(pattern: &str, index: usize) -> std::result::Result<String, String> {
    let start = pattern
        .find('%')
        .ok_or_else(|| format!("pattern {pattern:?} has no %d placeholder"))?;
    let rest = &pattern[start + 1..];
    let end = rest
        .find('d')
        .ok_or_else(|| format!("pattern {pattern:?} has an unterminated placeholder"))?;
    let spec = &rest[..end];
    let tail = &rest[end + 1..];
    if tail.contains('%') {
        return Err(format!("pattern {pattern:?} has more than one placeholder"));
    }
    let number = if spec.is_empty() {
        index.to_string()
    } else if let Some(w) = spec.strip_prefix('0').filter(|w| !w.is_empty()) {
        let width: usize = w
            .parse()
            .map_err(|_| format!("bad placeholder width in {pattern:?}"))?;
        format!("{index:0width$}")
    } else {
        return Err(format!("unsupported placeholder %{spec}d in {pattern:?}"));
    };
    Ok(format!("{}{}{}", &pattern[..start], number, tail))
}

/// A sequence loaded into memory.
///
/// `motion[t]` holds the field of frame `t` and is `None` for frame 0;
/// `depth[t]` holds frame `t`'s depth map.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub frames: Vec<Frame>,
    pub motion: Option<Vec<Option<MotionField>>>,
    pub depth: Option<Vec<DepthMap>>,
}

impl Sequence {
    /// Loads a sequence directory. Sidecars are only read when
    /// `with_sidecars` is set; a missing sidecar is then a configuration
    /// error.
    pub fn load(dir: impl AsRef<Path>, with_sidecars: bool) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = SequenceManifest::read(dir.join(MANIFEST_FILE))?;
        Sequence::load_with_manifest(dir, &manifest, with_sidecars)
    }

    pub fn load_with_manifest(
        dir: &Path,
        manifest: &SequenceManifest,
        with_sidecars: bool,
    ) -> Result<Self> {
        let path_for = |pattern: &str, t: usize| -> Result<PathBuf> {
            expand_pattern(pattern, t)
                .map(|p| dir.join(p))
                .map_err(|m| Error::format("manifest", m))
        };
        let check = |what: &str, t: usize, w: usize, h: usize| -> Result<()> {
            if w != manifest.width || h != manifest.height {
                return Err(Error::Dimensions(format!(
                    "{what} {t} is {w}x{h}, manifest says {}x{}",
                    manifest.width, manifest.height
                )));
            }
            Ok(())
        };

        let mut frames = Vec::with_capacity(manifest.frame_count);
        for t in 0..manifest.frame_count {
            let f = read_frame(path_for(&manifest.frame_pattern, t)?)?;
            check("frame", t, f.width(), f.height())?;
            frames.push(f);
        }
        if !with_sidecars {
            return Ok(Sequence {
                frames,
                motion: None,
                depth: None,
            });
        }

        let mvf_pattern = manifest
            .mvf_pattern
            .as_deref()
            .ok_or_else(|| Error::Config("missing motion sidecar: manifest has no mvf pattern".into()))?;
        let depth_pattern = manifest
            .depth_pattern
            .as_deref()
            .ok_or_else(|| Error::Config("missing depth sidecar: manifest has no depth pattern".into()))?;

        let mut motion = vec![None];
        for t in 1..manifest.frame_count {
            let p = path_for(mvf_pattern, t)?;
            if !p.exists() {
                return Err(Error::Config(format!(
                    "missing motion sidecar for frame {t}: {}",
                    p.display()
                )));
            }
            let mf = read_motion_field(&p)?;
            check("motion field", t, mf.width(), mf.height())?;
            motion.push(Some(mf));
        }
        let mut depth = Vec::with_capacity(manifest.frame_count);
        for t in 0..manifest.frame_count {
            let p = path_for(depth_pattern, t)?;
            if !p.exists() {
                return Err(Error::Config(format!(
                    "missing depth sidecar for frame {t}: {}",
                    p.display()
                )));
            }
            let dm = read_depth_map(&p)?;
            check("depth map", t, dm.width(), dm.height())?;
            depth.push(dm);
        }
        Ok(Sequence {
            frames,
            motion: Some(motion),
            depth: Some(depth),
        })
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn has_sidecars(&self) -> bool {
        self.motion.is_some() && self.depth.is_some()
    }
}
