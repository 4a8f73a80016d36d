//! Classic chaos-game walk over the residue table, and its frequency grid.

use std::io::{self, Write};

use crate::geom::Point;
use crate::kaleidoscope::{CoordinateTable, GeometryError};
use crate::seqdata::ProteinSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgrParams {
    pub start: Point,
    /// Fraction of the way moved toward the residue's point each step.
    pub ratio: f64,
}

impl Default for CgrParams {
    fn default() -> Self {
        Self {
            start: Point::new(0.5, 0.5),
            ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgrWalk {
    pub start: Point,
    pub points: Vec<Point>,
}

impl CgrWalk {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn cgr_walk(seq: &ProteinSequence, table: &CoordinateTable, params: &CgrParams) -> Result<CgrWalk, GeometryError> {
    walk_residues(seq.as_bytes(), table, params)
}

/// `p_i = (1 - ratio) * p_{i-1} + ratio * c(a_i)`, starting from `params.start`.
pub fn walk_residues(residues: &[u8], table: &CoordinateTable, params: &CgrParams) -> Result<CgrWalk, GeometryError> {
    let unit = 0.0..=1.0;
    if !unit.contains(&params.start.x) || !unit.contains(&params.start.y) {
        return Err(GeometryError::InvalidParam(
            "walk start must lie in the unit square".into(),
        ));
    }
    if !(params.ratio > 0.0 && params.ratio < 1.0) {
        return Err(GeometryError::InvalidParam(format!(
            "walk ratio must lie in (0, 1), got {}",
            params.ratio
        )));
    }
    let keep = 1.0 - params.ratio;
    let mut p = params.start;
    let mut points = Vec::with_capacity(residues.len());
    for &r in residues {
        let c = table.get(r.to_ascii_uppercase())?;
        p = Point::new(
            (keep * p.x + params.ratio * c.x).clamp(0.0, 1.0),
            (keep * p.y + params.ratio * c.y).clamp(0.0, 1.0),
        );
        points.push(p);
    }
    Ok(CgrWalk {
        start: params.start,
        points,
    })
}

/// `resolution x resolution` histogram of walk points. Row `j` holds the
/// cells with y-index `j`; row 0 is the low-y edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FcgrGrid {
    resolution: usize,
    counts: Vec<u64>,
}

impl FcgrGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Count at x-index `i`, y-index `j`.
    pub fn cell(&self, i: usize, j: usize) -> u64 {
        self.counts[j * self.resolution + i]
    }

    /// Counts in row-major order (rows are y-indices).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, sink: &mut W) -> io::Result<()> {
        for row in self.counts.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(sink, "{}", line.join(","))?;
        }
        Ok(())
    }
}

fn bin(v: f64, r: usize) -> usize {
    ((v * r as f64).floor().max(0.0) as usize).min(r - 1)
}

pub fn fcgr_grid(walk: &CgrWalk, resolution: usize) -> Result<FcgrGrid, GeometryError> {
    if resolution == 0 {
        return Err(GeometryError::InvalidParam("grid resolution must be at least 1".into()));
    }
    let mut counts = vec![0u64; resolution * resolution];
    for p in &walk.points {
        counts[bin(p.y, resolution) * resolution + bin(p.x, resolution)] += 1;
    }
    Ok(FcgrGrid { resolution, counts })
}
