//! Deterministic grayscale rasterization of segments and points.
//!
//! World coordinates are mapped onto a pixel grid through a [`Viewport`]
//! whose vertical window is symmetric about `v = 0`. Vertical positions are
//! handled as signed pixel offsets `w` from the horizontal axis (positive
//! downwards), so reflecting geometry across the axis negates `w` exactly
//! and every step below is sign-symmetric. Lines are drawn by sampling the
//! segment at pixel centers along its major axis and inking the nearest
//! pixel on the minor axis. When a sample falls exactly halfway between two
//! pixel centers both pixels are inked; this keeps the output independent of
//! endpoint order and makes drawing commute with vertical reflection.

use std::io::{self, Write};

use thiserror::Error;

use crate::cgr::CgrWalk;
use crate::geom::{Point, Segment};
use crate::kaleidoscope::SegmentSet;

pub const BACKGROUND: u8 = 255;
pub const DEFAULT_INK: u8 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("nothing to draw: geometry is empty")]
    EmptyGeometry,
    #[error("geometry contains a non-finite coordinate")]
    NonFinite,
    #[error("image size must be at least 1x1, got {0}x{1}")]
    InvalidSize(usize, usize),
    #[error("pad fraction must be finite and nonnegative, got {0}")]
    InvalidPad(f64),
    #[error("ink level {0} is the background value")]
    InvalidInk(u8),
    #[error("image has no viewport to map world coordinates")]
    NoViewport,
    #[error("PGM: {0}")]
    Pgm(String),
    #[error("PNG: {0}")]
    Png(String),
}

/// World window and pixel grid. `v_min == -v_max` always holds, and the
/// window's aspect ratio equals the pixel grid's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub width: usize,
    pub height: usize,
}

impl Viewport {
    /// Fits a window around `points`: bounding box grown by `pad_fraction`
    /// of its half-extent on each side, made symmetric about `v = 0`, then
    /// widened on one axis to the pixel aspect ratio. A single repeated
    /// point gets a unit window centred on it (before symmetrization).
    pub fn fit<I>(points: I, width: usize, height: usize, pad_fraction: f64) -> Result<Self, RasterError>
    where
        I: IntoIterator<Item = Point>,
    {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidSize(width, height));
        }
        if !(pad_fraction.is_finite() && pad_fraction >= 0.0) {
            return Err(RasterError::InvalidPad(pad_fraction));
        }
        let mut bbox: Option<(f64, f64, f64, f64)> = None;
        for p in points {
            if !p.is_finite() {
                return Err(RasterError::NonFinite);
            }
            bbox = Some(match bbox {
                None => (p.x, p.x, p.y, p.y),
                Some((a, b, c, d)) => (a.min(p.x), b.max(p.x), c.min(p.y), d.max(p.y)),
            });
        }
        let (u_lo, u_hi, v_lo, v_hi) = bbox.ok_or(RasterError::EmptyGeometry)?;

        let (u_min, u_max, v_lo, v_hi) = if u_lo == u_hi && v_lo == v_hi {
            (u_lo - 0.5, u_lo + 0.5, v_lo - 0.5, v_lo + 0.5)
        } else {
            let grow = 1.0 + pad_fraction;
            let (cu, hu) = ((u_lo + u_hi) / 2.0, (u_hi - u_lo) / 2.0 * grow);
            let (cv, hv) = ((v_lo + v_hi) / 2.0, (v_hi - v_lo) / 2.0 * grow);
            (cu - hu, cu + hu, cv - hv, cv + hv)
        };
        let mut v_max = v_lo.abs().max(v_hi.abs());
        let (mut u_min, mut u_max) = (u_min, u_max);

        let (wf, hf) = (width as f64, height as f64);
        let du = u_max - u_min;
        let dv = 2.0 * v_max;
        if du * hf < dv * wf {
            let cu = (u_min + u_max) / 2.0;
            let half = dv * wf / hf / 2.0;
            u_min = cu - half;
            u_max = cu + half;
        } else if du * hf > dv * wf {
            v_max = du * hf / wf / 2.0;
        }
        let vp = Self {
            u_min,
            u_max,
            v_min: -v_max,
            v_max,
            width,
            height,
        };
        if !(vp.u_min < vp.u_max && vp.v_min < vp.v_max)
            || !vp.u_min.is_finite()
            || !vp.u_max.is_finite()
            || !vp.v_max.is_finite()
        {
            return Err(RasterError::NonFinite);
        }
        Ok(vp)
    }

    fn x_scale(&self) -> f64 {
        self.width as f64 / (self.u_max - self.u_min)
    }

    fn w_scale(&self) -> f64 {
        self.height as f64 / (self.v_max - self.v_min)
    }

    /// Horizontal pixel coordinate (0 at the left edge) and signed downward
    /// offset from the horizontal axis, both in pixels.
    pub fn to_pixel(&self, p: Point) -> (f64, f64) {
        ((p.x - self.u_min) * self.x_scale(), -(p.y * self.w_scale()))
    }
}

/// Fits a viewport to every endpoint of `segments`.
pub fn fit_viewport(
    segments: &SegmentSet,
    width: usize,
    height: usize,
    pad_fraction: f64,
) -> Result<Viewport, RasterError> {
    Viewport::fit(segments.iter().flat_map(|s| [s.a, s.b]), width, height, pad_fraction)
}

/// Row-major 8-bit grayscale image. `BACKGROUND` is white; anything else
/// counts as ink.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    viewport: Option<Viewport>,
    ink: u8,
}

impl RasterImage {
    /// Blank image without a viewport.
    pub fn blank(width: usize, height: usize) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidSize(width, height));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
            viewport: None,
            ink: DEFAULT_INK,
        })
    }

    pub fn with_viewport(viewport: Viewport) -> Self {
        let mut img = Self::blank(viewport.width, viewport.height).expect("viewport sizes are nonzero");
        img.viewport = Some(viewport);
        img
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(RasterError::InvalidSize(width, height));
        }
        Ok(Self {
            width,
            height,
            pixels,
            viewport: None,
            ink: DEFAULT_INK,
        })
    }

    pub fn set_ink(&mut self, level: u8) -> Result<(), RasterError> {
        if level == BACKGROUND {
            return Err(RasterError::InvalidInk(level));
        }
        self.ink = level;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn viewport(&self) -> Option<&Viewport> {
        self.viewport.as_ref()
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn is_ink(&self, col: usize, row: usize) -> bool {
        self.get(col, row) != BACKGROUND
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != BACKGROUND).count()
    }

    pub fn ink_fraction(&self) -> f64 {
        self.ink_count() as f64 / self.pixels.len() as f64
    }

    /// Top-to-bottom reflection.
    pub fn flip_vertical(&self) -> Self {
        let mut out = self.clone();
        for (dst, src) in out
            .pixels
            .chunks_mut(self.width)
            .zip(self.pixels.chunks(self.width).rev())
        {
            dst.copy_from_slice(src);
        }
        out
    }

    fn plot(&mut self, col: i64, row: i64) {
        if col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height {
            let idx = row as usize * self.width + col as usize;
            self.pixels[idx] = self.ink;
        }
    }

    fn plot_all(&mut self, cols: Near, rows: Near) {
        for c in cols.iter() {
            for r in rows.iter() {
                self.plot(c, r);
            }
        }
    }

    /// Draws the segment `a`-`b` (world coordinates), clipped to the image.
    pub fn draw_segment(&mut self, a: Point, b: Point) -> Result<(), RasterError> {
        let vp = self.viewport.ok_or(RasterError::NoViewport)?;
        let (mut x0, mut w0) = vp.to_pixel(a);
        let (mut x1, mut w1) = vp.to_pixel(b);
        if !(x0.is_finite() && w0.is_finite() && x1.is_finite() && w1.is_finite()) {
            return Err(RasterError::NonFinite);
        }
        if x0 > x1 {
            std::mem::swap(&mut x0, &mut x1);
            std::mem::swap(&mut w0, &mut w1);
        }
        let (width, height) = (self.width, self.height);

        self.plot_all(near_cols(x0, width), near_rows(w0, height));
        self.plot_all(near_cols(x1, width), near_rows(w1, height));

        let dx = x1 - x0;
        let dw = w1 - w0;
        if dx == 0.0 && dw == 0.0 {
            return Ok(());
        }
        if dx.abs() >= dw.abs() {
            for col in candidate_range(x0, x1, width) {
                let xc = col as f64 + 0.5;
                if xc < x0 || xc > x1 {
                    continue;
                }
                let w = w0 + ((xc - x0) * dw) / dx;
                self.plot_all(Near::one(col), near_rows(w, height));
            }
        } else {
            let half_h = height as f64 / 2.0;
            let (lo, hi) = if w0 <= w1 { (w0, w1) } else { (w1, w0) };
            for row in candidate_range(lo + half_h, hi + half_h, height) {
                let wc = row_center(row, height);
                if wc < lo || wc > hi {
                    continue;
                }
                let x = x0 + ((wc - w0) * dx) / dw;
                self.plot_all(near_cols(x, width), Near::one(row));
            }
        }
        Ok(())
    }

    pub fn draw(&mut self, s: &Segment) -> Result<(), RasterError> {
        self.draw_segment(s.a, s.b)
    }

    /// Inks the pixel nearest to `p` (both pixels on an exact tie).
    pub fn draw_point(&mut self, p: Point) -> Result<(), RasterError> {
        let vp = self.viewport.ok_or(RasterError::NoViewport)?;
        let (x, w) = vp.to_pixel(p);
        if !(x.is_finite() && w.is_finite()) {
            return Err(RasterError::NonFinite);
        }
        self.plot_all(near_cols(x, self.width), near_rows(w, self.height));
        Ok(())
    }
}

/// One or two neighbouring pixel indices.
#[derive(Debug, Clone, Copy)]
struct Near([Option<i64>; 2]);

impl Near {
    const NONE: Near = Near([None, None]);

    fn one(i: i64) -> Self {
        Near([Some(i), None])
    }

    fn iter(self) -> impl Iterator<Item = i64> {
        self.0.into_iter().flatten()
    }
}

/// Signed offset of row `row`'s center from the horizontal axis.
fn row_center(row: i64, height: usize) -> f64 {
    (row as f64 + 0.5) - height as f64 / 2.0
}

/// Candidate pixel indices whose centers (at `i + 0.5`) may lie in
/// `[lo, hi]`, limited to `0..len`. One extra index on each side absorbs
/// rounding; callers filter exactly.
fn candidate_range(lo: f64, hi: f64, len: usize) -> std::ops::RangeInclusive<i64> {
    let clamp = |v: f64| v.clamp(-2.0, len as f64 + 2.0);
    let first = (clamp(lo - 0.5).ceil() as i64 - 1).max(0);
    let last = (clamp(hi - 0.5).floor() as i64 + 1).min(len as i64 - 1);
    first..=last
}

/// Columns nearest to horizontal pixel coordinate `x`.
fn near_cols(x: f64, width: usize) -> Near {
    let t = x - 0.5;
    if !(-2.0..=width as f64 + 2.0).contains(&t) {
        return Near::NONE;
    }
    let f = t.floor();
    let frac = t - f;
    let f = f as i64;
    if frac < 0.5 {
        Near::one(f)
    } else if frac > 0.5 {
        Near::one(f + 1)
    } else {
        Near([Some(f), Some(f + 1)])
    }
}

/// Rows nearest to the signed axis offset `w`, computed from `|w|` so that
/// `near_rows(-w)` is the mirror image of `near_rows(w)`.
fn near_rows(w: f64, height: usize) -> Near {
    let a = w.abs();
    if a > height as f64 + 2.0 {
        return Near::NONE;
    }
    let f = a.floor();
    // Offsets counted away from the axis on w's side.
    let steps: [Option<i64>; 2] = if height.is_multiple_of(2) {
        // Row centers sit at half-integer offsets.
        [Some(f as i64), (a == f).then_some(f as i64 - 1)]
    } else {
        let frac = a - f;
        let f = f as i64;
        if frac < 0.5 {
            [Some(f), None]
        } else if frac > 0.5 {
            [Some(f + 1), None]
        } else {
            [Some(f), Some(f + 1)]
        }
    };
    let h = height as i64;
    let to_row = |k: i64| {
        if h % 2 == 0 {
            if w < 0.0 {
                h / 2 - 1 - k
            } else {
                h / 2 + k
            }
        } else if w < 0.0 {
            (h - 1) / 2 - k
        } else {
            (h - 1) / 2 + k
        }
    };
    Near(steps.map(|s| s.map(to_row)))
}

/// Fits a viewport to `segments` and draws all of them.
pub fn rasterize(
    segments: &SegmentSet,
    width: usize,
    height: usize,
    pad_fraction: f64,
) -> Result<RasterImage, RasterError> {
    rasterize_with_ink(segments, width, height, pad_fraction, DEFAULT_INK)
}

pub fn rasterize_with_ink(
    segments: &SegmentSet,
    width: usize,
    height: usize,
    pad_fraction: f64,
    ink: u8,
) -> Result<RasterImage, RasterError> {
    let vp = fit_viewport(segments, width, height, pad_fraction)?;
    let mut img = RasterImage::with_viewport(vp);
    img.set_ink(ink)?;
    for s in segments {
        img.draw(s)?;
    }
    Ok(img)
}

/// Plots each walk point as one dot. The viewport is fitted to the unit
/// square, so every walk shares one coordinate frame.
pub fn rasterize_walk(
    walk: &CgrWalk,
    width: usize,
    height: usize,
    pad_fraction: f64,
    ink: u8,
) -> Result<RasterImage, RasterError> {
    let corners = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
    let vp = Viewport::fit(corners, width, height, pad_fraction)?;
    let mut img = RasterImage::with_viewport(vp);
    img.set_ink(ink)?;
    for &p in &walk.points {
        img.draw_point(p)?;
    }
    Ok(img)
}

/// Binary PGM (`P5`, maxval 255). Returns the number of bytes written.
pub fn write_pgm<W: Write>(image: &RasterImage, sink: &mut W) -> io::Result<usize> {
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    sink.write_all(header.as_bytes())?;
    sink.write_all(&image.pixels)?;
    Ok(header.len() + image.pixels.len())
}

/// Reads a binary PGM with maxval 255. Header comments are allowed.
pub fn read_pgm(data: &[u8]) -> Result<RasterImage, RasterError> {
    let bad = |m: &str| RasterError::Pgm(m.to_string());
    if !data.starts_with(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Skip whitespace and comment lines before each header number.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while data.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(bad("expected a header number"));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .expect("digits are ASCII")
            .parse()
            .map_err(|_| bad("header number out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    if !data.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after maxval"));
    }
    pos += 1;
    let n = width.checked_mul(height).ok_or_else(|| bad("image too large"))?;
    let payload = &data[pos..];
    if payload.len() != n {
        return Err(bad(&format!("expected {n} pixel bytes, found {}", payload.len())));
    }
    RasterImage::from_pixels(width, height, payload.to_vec())
}

/// 8-bit grayscale PNG. Returns the number of bytes written.
pub fn write_png<W: Write>(image: &RasterImage, sink: &mut W) -> io::Result<usize> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, image.width as u32, image.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(io::Error::other)?;
        w.write_image_data(&image.pixels).map_err(io::Error::other)?;
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

/// Largest image [`read_png`] will decode, in pixels.
pub const MAX_DECODED_PIXELS: usize = 64 << 20;

/// Decodes an 8-bit grayscale PNG.
pub fn read_png(data: &[u8]) -> Result<RasterImage, RasterError> {
    let perr = |e: png::DecodingError| RasterError::Png(e.to_string());
    let mut decoder = png::Decoder::new(data);
    decoder.set_limits(png::Limits {
        bytes: MAX_DECODED_PIXELS,
    });
    let mut reader = decoder.read_info().map_err(perr)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::Png("expected 8-bit grayscale".into()));
    }
    // The header alone sets the buffer size, so check it before allocating.
    let pixels = info.width as u64 * info.height as u64;
    if pixels > MAX_DECODED_PIXELS as u64 {
        return Err(RasterError::Png(format!(
            "{}x{} image is too large",
            info.width, info.height
        )));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(perr)?;
    buf.truncate(frame.buffer_size());
    RasterImage::from_pixels(frame.width as usize, frame.height as usize, buf)
}
