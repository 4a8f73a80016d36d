/// A point in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Reflection across the horizontal axis.
    pub fn mirror_v(self) -> Self {
        Self::new(self.x, -self.y)
    }
}

/// A plotted line from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn mirror_v(self) -> Self {
        Self::new(self.a.mirror_v(), self.b.mirror_v())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}
