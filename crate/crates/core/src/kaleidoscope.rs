//! Kaleidoscope geometry for a protein sequence.
//!
//! Each residue has a fixed point in the unit square ([`CoordinateTable`]).
//! A walker starts at a seed position and takes one fixed-length step per
//! residue. After every step it draws four lines between the walker and the
//! residue's point (with both walker and point reflected), then restarts the
//! whole walk from the four sign-flipped copies of its position with a
//! smaller depth budget. The budget also drops by one after every residue,
//! so later residues spawn shallower sub-walks.
//!
//! The output is the list of segments in emission order; rasterization is a
//! separate step.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use thiserror::Error;

pub use crate::geom::{Point, Segment};
use crate::seqdata::{residue_rank, ProteinSequence, ALPHABET};

/// Largest accepted recursion depth. Active sub-walks grow as `5^(depth-1)`.
pub const MAX_DEPTH: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown residue {0:?}")]
    UnknownResidue(char),
    #[error("depth {depth} exceeds the limit of {max}")]
    DepthExceeded { depth: u32, max: u32 },
    #[error("scale must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("seed position and angle must be finite")]
    NonFinite,
    #[error("coordinate table: {0}")]
    InvalidTable(String),
    #[error("{0}")]
    InvalidParam(String),
    #[error("segment dump line {line}: {reason}")]
    BadDump { line: usize, reason: String },
}

/// Residue-to-point assignment. Points are unique and lie in `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTable {
    points: [Point; 20],
}

const DEFAULT_POINTS: [Point; 20] = [
    Point::new(0.5, 0.5),   // A
    Point::new(1.0, 0.5),   // C
    Point::new(0.5, 1.0),   // D
    Point::new(0.0, 0.5),   // E
    Point::new(1.0, 1.0),   // F
    Point::new(0.25, 0.25), // G
    Point::new(0.75, 0.25), // H
    Point::new(0.75, 0.75), // I
    Point::new(0.25, 0.75), // K
    Point::new(0.75, 0.0),  // L
    Point::new(0.5, 0.0),   // M
    Point::new(0.25, 0.5),  // N
    Point::new(1.0, 0.0),   // P
    Point::new(0.0, 1.0),   // Q
    Point::new(0.5, 0.25),  // R
    Point::new(0.75, 0.5),  // S
    Point::new(0.5, 0.75),  // T
    Point::new(0.0, 0.0),   // V
    Point::new(1.0, 0.25),  // W
    Point::new(1.0, 0.75),  // Y
];

impl Default for CoordinateTable {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS }
    }
}

impl CoordinateTable {
    /// Builds a table from `(residue, point)` pairs covering every residue
    /// exactly once.
    pub fn new(entries: &[(u8, Point)]) -> Result<Self, GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidTable(m));
        if entries.len() != 20 {
            return bad(format!("expected 20 entries, got {}", entries.len()));
        }
        let mut points = [None; 20];
        for &(residue, p) in entries {
            let rank =
                residue_rank(residue.to_ascii_uppercase()).ok_or(GeometryError::UnknownResidue(residue as char))?;
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return bad(format!("point for {:?} lies outside the unit square", residue as char));
            }
            if points[rank].replace(p).is_some() {
                return bad(format!("residue {:?} listed twice", residue as char));
            }
        }
        let points = points.map(|p| p.expect("20 distinct ranks fill the table"));
        for i in 0..20 {
            for j in i + 1..20 {
                if points[i] == points[j] {
                    return bad(format!(
                        "{:?} and {:?} share a point",
                        ALPHABET[i] as char, ALPHABET[j] as char
                    ));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn get(&self, residue: u8) -> Result<Point, GeometryError> {
        residue_rank(residue)
            .map(|r| self.points[r])
            .ok_or(GeometryError::UnknownResidue(residue as char))
    }

    pub fn entries(&self) -> impl Iterator<Item = (u8, Point)> + '_ {
        ALPHABET.iter().copied().zip(self.points.iter().copied())
    }

    /// Exchanges the points of two residues.
    pub fn swapped(&self, a: u8, b: u8) -> Result<Self, GeometryError> {
        let ra = residue_rank(a).ok_or(GeometryError::UnknownResidue(a as char))?;
        let rb = residue_rank(b).ok_or(GeometryError::UnknownResidue(b as char))?;
        let mut out = self.clone();
        out.points.swap(ra, rb);
        Ok(out)
    }
}

/// Looks up a residue's point.
pub fn coordinate_rule(residue: u8, table: &CoordinateTable) -> Result<Point, GeometryError> {
    table.get(residue)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaleidoscopeParams {
    pub depth: u32,
    pub pos: Point,
    /// Step direction in radians.
    pub angle: f64,
    /// Step length in world units.
    pub scale: f64,
    /// Skip sub-walks whose (position, depth) was already expanded. This
    /// changes the segment multiset and is off by default.
    pub memoize: bool,
}

impl Default for KaleidoscopeParams {
    fn default() -> Self {
        Self {
            depth: 4,
            pos: Point::new(0.0, 0.0),
            angle: 0.0,
            scale: 10.0,
            memoize: false,
        }
    }
}

impl KaleidoscopeParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.depth > MAX_DEPTH {
            return Err(GeometryError::DepthExceeded {
                depth: self.depth,
                max: MAX_DEPTH,
            });
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(GeometryError::InvalidScale(self.scale));
        }
        if !self.pos.is_finite() || !self.angle.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }
}

/// Segments in emission order; duplicates are kept.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentSet {
    segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }

    pub fn as_slice(&self) -> &[Segment] {
        &self.segments
    }

    pub fn into_vec(self) -> Vec<Segment> {
        self.segments
    }

    /// One segment per line, `x1 y1 x2 y2`, 17 significant digits each.
    pub fn write_dump<W: Write>(&self, sink: &mut W) -> io::Result<()> {
        for s in &self.segments {
            writeln!(sink, "{:.16e} {:.16e} {:.16e} {:.16e}", s.a.x, s.a.y, s.b.x, s.b.y)?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(source: R) -> Result<Self, GeometryError> {
        let mut segments = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let bad = |reason: String| GeometryError::BadDump { line: i + 1, reason };
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let [x1, y1, x2, y2] = vals[..] else {
                return Err(bad(format!("expected 4 values, got {}", vals.len())));
            };
            let s = Segment::new(Point::new(x1, y1), Point::new(x2, y2));
            if !s.is_finite() {
                return Err(bad("non-finite coordinate".into()));
            }
            segments.push(s);
        }
        Ok(Self { segments })
    }
}

impl<'a> IntoIterator for &'a SegmentSet {
    type Item = &'a Segment;
    type IntoIter = std::slice::Iter<'a, Segment>;

    fn into_iter(self) -> Self::IntoIter {
        self.segments.iter()
    }
}

struct Walker<'a, F> {
    points: &'a [Point],
    dx: f64,
    dy: f64,
    visited: Option<HashSet<(u64, u64, i64)>>,
    emit: F,
}

impl<F: FnMut(usize, Segment)> Walker<'_, F> {
    fn walk(&mut self, depth: i64, pos: Point) {
        if depth <= 0 {
            return;
        }
        if let Some(seen) = &mut self.visited {
            // +0.0 folds -0.0 into 0.0: such calls produce identical output.
            let key = ((pos.x + 0.0).to_bits(), (pos.y + 0.0).to_bits(), depth);
            if !seen.insert(key) {
                return;
            }
        }

        let (mut x, mut y) = (pos.x, pos.y);
        let mut depth = depth;
        for (i, &c) in self.points.iter().enumerate() {
            x += self.dx;
            y += self.dy;
            let here = Point::new(x, y);
            let opposite = Point::new(-x, -y);
            let low = Point::new(c.x, -c.y);
            (self.emit)(i, Segment::new(here, c));
            (self.emit)(i, Segment::new(here, low));
            (self.emit)(i, Segment::new(opposite, c));
            (self.emit)(i, Segment::new(opposite, low));

            self.walk(depth - 1, Point::new(x, y));
            self.walk(depth - 1, Point::new(x, -y));
            self.walk(depth - 1, Point::new(-x, y));
            self.walk(depth - 1, Point::new(-x, -y));

            depth -= 1;
        }
    }
}

/// Streams every segment to `emit` along with the index of the residue
/// whose step produced it.
pub fn for_each_segment<F>(
    residues: &[u8],
    params: &KaleidoscopeParams,
    table: &CoordinateTable,
    emit: F,
) -> Result<(), GeometryError>
where
    F: FnMut(usize, Segment),
{
    params.validate()?;
    let points = residues
        .iter()
        .map(|&r| table.get(r.to_ascii_uppercase()))
        .collect::<Result<Vec<_>, _>>()?;
    let dx = params.scale * params.angle.cos();
    let dy = params.scale * params.angle.sin();
    debug_assert!(dx.is_finite() && dy.is_finite());

    let mut walker = Walker {
        points: &points,
        dx,
        dy,
        visited: params.memoize.then(HashSet::new),
        emit,
    };
    walker.walk(i64::from(params.depth), params.pos);
    Ok(())
}

/// Collects the kaleidoscope segments of `seq` in emission order.
pub fn generate_kaleidoscope(
    seq: &ProteinSequence,
    params: &KaleidoscopeParams,
    table: &CoordinateTable,
) -> Result<SegmentSet, GeometryError> {
    generate_from_residues(seq.as_bytes(), params, table)
}

/// Like [`generate_kaleidoscope`] for an unvalidated residue string. An
/// empty string yields no segments.
pub fn generate_from_residues(
    residues: &[u8],
    params: &KaleidoscopeParams,
    table: &CoordinateTable,
) -> Result<SegmentSet, GeometryError> {
    params.validate()?;
    let mut segments = Vec::new();
    let expected = segment_count_oracle(residues.len() as u64, params.depth);
    if !params.memoize && expected <= 1 << 24 {
        segments.reserve_exact(expected as usize);
    }
    for_each_segment(residues, params, table, |_, s| segments.push(s))?;
    debug_assert!(segments.iter().all(Segment::is_finite));
    Ok(SegmentSet { segments })
}

/// Exact number of segments produced for a sequence of `length` residues
/// at `depth`, without memoization.
///
/// A call entered with budget `d > 0` emits `4 * length` segments and, at
/// its `i`-th residue, starts four sub-walks with budget `d - 1 - i`. So the
/// number of active calls is `C(d) = 1 + 4 * sum(C(k) for k in d-length..d, k >= 1)`,
/// and the total is `4 * length * C(depth)`. Saturates at `u128::MAX`.
pub fn segment_count_oracle(length: u64, depth: u32) -> u128 {
    if length == 0 || depth == 0 {
        return 0;
    }
    let per_call = 4 * length as u128;
    let mut calls: Vec<u128> = vec![0];
    for d in 1..=depth as usize {
        let lo = d.saturating_sub(length as usize).max(1);
        let below = calls[lo..d].iter().fold(0u128, |acc, &c| acc.saturating_add(c));
        let c = below.saturating_mul(4).saturating_add(1);
        if c == u128::MAX {
            return u128::MAX;
        }
        calls.push(c);
    }
    per_call.saturating_mul(calls[depth as usize])
}
