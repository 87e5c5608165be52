//! Rectilinear 2D domains, semi-infinite strip truncation and structured
//! triangulation.
//!
//! A [`RectilinearDomain2D`] is a union of axis-aligned rectangles (the
//! bounded part) plus strip ports. Each port is a semi-infinite strip cut at
//! distance `truncation` from the edge it is attached to; the cut face is
//! tagged [`EdgeTag::Artificial`].
//!
//! [`triangulate`] builds a tensor grid from all rectangle breakpoints,
//! subdivides every gap uniformly with spacing at most `h`, keeps the cells
//! whose centre lies in the domain and splits each cell along its rising
//! diagonal. The result is conforming by construction and nested under
//! [`refine`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },
    #[error("degenerate rectangle ({x0}, {y0}) - ({x1}, {y1})")]
    DegenerateRect { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("rectangles {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("domain is not connected")]
    Disconnected,
    #[error("port {0} is not attached to the boundary of the bounded part")]
    DetachedPort(usize),
    #[error("conflicting tags on boundary segment near ({x}, {y})")]
    ConflictingTags { x: f64, y: f64 },
    #[error("artificial tag outside a port truncation face near ({x}, {y})")]
    MisplacedArtificial { x: f64, y: f64 },
    #[error("mesh size h = {h} too large: must be positive and at most {max}")]
    MeshTooCoarse { h: f64, max: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle {0} has non-positive signed area {1}")]
    NonPositiveArea(usize, f64),
    #[error("edge ({0}, {1}) shared by {2} triangles")]
    EdgeValence(usize, usize, usize),
    #[error("edge ({0}, {1}) lies on a single triangle but is not a boundary edge")]
    UntaggedBoundary(usize, usize),
    #[error("boundary edge ({0}, {1}) is not the edge of exactly one triangle")]
    BadBoundaryEdge(usize, usize),
    #[error("Euler characteristic {found}, expected {expected}")]
    Euler { found: i64, expected: i64 },
    #[error("node {0} is not used by any triangle")]
    OrphanNode(usize),
}

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        if !(x0 < x1 && y0 < y1) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::DegenerateRect { x0, y0, x1, y1 });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, p: Point) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    pub fn contains_closed(&self, p: Point) -> bool {
        p[0] >= self.x0 - GEOM_TOL
            && p[0] <= self.x1 + GEOM_TOL
            && p[1] >= self.y0 - GEOM_TOL
            && p[1] <= self.y1 + GEOM_TOL
    }

    fn interior_overlap(&self, other: &Rect) -> bool {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        w > GEOM_TOL && h > GEOM_TOL
    }

    /// Closures share a boundary piece of positive length.
    fn touches(&self, other: &Rect) -> bool {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        (w > GEOM_TOL && h.abs() <= GEOM_TOL) || (h > GEOM_TOL && w.abs() <= GEOM_TOL)
    }

    fn edges(&self) -> [Segment; 4] {
        let (x0, y0, x1, y1) = (self.x0, self.y0, self.x1, self.y1);
        [
            Segment::new([x0, y0], [x1, y0]),
            Segment::new([x1, y0], [x1, y1]),
            Segment::new([x0, y1], [x1, y1]),
            Segment::new([x0, y0], [x0, y1]),
        ]
    }
}

/// Axis-aligned segment, stored with `a <= b` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        if (a[0], a[1]) <= (b[0], b[1]) {
            Self { a, b }
        } else {
            Self { a: b, b: a }
        }
    }

    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }

    pub fn midpoint(&self) -> Point {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }

    fn is_horizontal(&self) -> bool {
        (self.a[1] - self.b[1]).abs() <= GEOM_TOL
    }

    /// Point lies on the closed segment.
    pub fn contains(&self, p: Point) -> bool {
        if self.is_horizontal() {
            (p[1] - self.a[1]).abs() <= GEOM_TOL
                && p[0] >= self.a[0] - GEOM_TOL
                && p[0] <= self.b[0] + GEOM_TOL
        } else {
            (p[0] - self.a[0]).abs() <= GEOM_TOL
                && p[1] >= self.a[1] - GEOM_TOL
                && p[1] <= self.b[1] + GEOM_TOL
        }
    }

    /// Collinear overlap of positive length.
    fn overlaps(&self, other: &Segment) -> bool {
        if self.is_horizontal() != other.is_horizontal() {
            return false;
        }
        if self.is_horizontal() {
            (self.a[1] - other.a[1]).abs() <= GEOM_TOL
                && self.b[0].min(other.b[0]) - self.a[0].max(other.a[0]) > GEOM_TOL
        } else {
            (self.a[0] - other.a[0]).abs() <= GEOM_TOL
                && self.b[1].min(other.b[1]) - self.a[1].max(other.a[1]) > GEOM_TOL
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

/// Boundary-condition tag carried by every boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Dirichlet,
    Neumann,
    Artificial,
    InnerConductor,
    OuterConductor,
    Symmetry,
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EdgeTag::Dirichlet => "dirichlet",
            EdgeTag::Neumann => "neumann",
            EdgeTag::Artificial => "artificial",
            EdgeTag::InnerConductor => "inner_conductor",
            EdgeTag::OuterConductor => "outer_conductor",
            EdgeTag::Symmetry => "symmetry",
        };
        f.write_str(s)
    }
}

/// Semi-infinite strip glued to the bounded part, truncated at distance
/// `truncation` from its attachment edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripPort {
    pub attachment: Segment,
    pub direction: Direction,
    pub truncation: f64,
}

impl StripPort {
    pub fn new(attachment: Segment, direction: Direction, truncation: f64) -> Result<Self, GeometryError> {
        if !(truncation > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "T".into(),
                value: truncation,
                reason: "truncation length must be positive",
            });
        }
        let horizontal = attachment.is_horizontal();
        let along_y = matches!(direction, Direction::PlusY | Direction::MinusY);
        if horizontal != along_y || attachment.length() <= GEOM_TOL {
            return Err(GeometryError::InvalidParameter {
                name: "port".into(),
                value: attachment.length(),
                reason: "port direction must be normal to a non-degenerate attachment edge",
            });
        }
        Ok(Self {
            attachment,
            direction,
            truncation,
        })
    }

    pub fn width(&self) -> f64 {
        self.attachment.length()
    }

    /// The truncated strip as a rectangle.
    pub fn rect(&self) -> Rect {
        let Segment { a, b } = self.attachment;
        let t = self.truncation;
        let (x0, y0, x1, y1) = match self.direction {
            Direction::PlusX => (a[0], a[1], a[0] + t, b[1]),
            Direction::MinusX => (a[0] - t, a[1], a[0], b[1]),
            Direction::PlusY => (a[0], a[1], b[0], a[1] + t),
            Direction::MinusY => (a[0], a[1] - t, b[0], a[1]),
        };
        Rect { x0, y0, x1, y1 }
    }

    /// The artificial face at distance `truncation` from the attachment edge.
    pub fn truncation_face(&self) -> Segment {
        let Segment { a, b } = self.attachment;
        let t = self.truncation;
        let shift = match self.direction {
            Direction::PlusX => [t, 0.0],
            Direction::MinusX => [-t, 0.0],
            Direction::PlusY => [0.0, t],
            Direction::MinusY => [0.0, -t],
        };
        Segment::new([a[0] + shift[0], a[1] + shift[1]], [b[0] + shift[0], b[1] + shift[1]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedSegment {
    pub segment: Segment,
    pub tag: EdgeTag,
}

/// Union of axis-aligned rectangles and truncated strip ports with tagged
/// boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectilinearDomain2D {
    pub name: String,
    pub rects: Vec<Rect>,
    pub ports: Vec<StripPort>,
    /// Explicit tags; any boundary point not covered carries `default_tag`.
    pub edge_tags: Vec<TaggedSegment>,
    pub default_tag: EdgeTag,
    /// Number of holes (0 simply connected, 1 annular).
    pub holes: usize,
}

impl RectilinearDomain2D {
    /// Builds and validates a domain. Artificial tags are added on every port
    /// truncation face.
    pub fn new(
        name: impl Into<String>,
        rects: Vec<Rect>,
        ports: Vec<StripPort>,
        default_tag: EdgeTag,
        holes: usize,
    ) -> Result<Self, GeometryError> {
        let edge_tags = ports
            .iter()
            .map(|p| TaggedSegment {
                segment: p.truncation_face(),
                tag: EdgeTag::Artificial,
            })
            .collect();
        let dom = Self {
            name: name.into(),
            rects,
            ports,
            edge_tags,
            default_tag,
            holes,
        };
        dom.validate()?;
        Ok(dom)
    }

    pub fn with_tag(mut self, segment: Segment, tag: EdgeTag) -> Result<Self, GeometryError> {
        self.edge_tags.push(TaggedSegment { segment, tag });
        self.validate()?;
        Ok(self)
    }

    /// Same domain with every port truncated at `t`.
    pub fn with_truncation(&self, t: f64) -> Result<Self, GeometryError> {
        let ports = self
            .ports
            .iter()
            .map(|p| StripPort::new(p.attachment, p.direction, t))
            .collect::<Result<Vec<_>, _>>()?;
        let mut edge_tags: Vec<TaggedSegment> = self
            .edge_tags
            .iter()
            .filter(|ts| ts.tag != EdgeTag::Artificial)
            .copied()
            .collect();
        edge_tags.extend(ports.iter().map(|p| TaggedSegment {
            segment: p.truncation_face(),
            tag: EdgeTag::Artificial,
        }));
        let dom = Self {
            name: self.name.clone(),
            rects: self.rects.clone(),
            ports,
            edge_tags,
            default_tag: self.default_tag,
            holes: self.holes,
        };
        dom.validate()?;
        Ok(dom)
    }

    /// Common truncation length of the ports, if any.
    pub fn truncation(&self) -> Option<f64> {
        self.ports.first().map(|p| p.truncation)
    }

    /// Bounded rectangles followed by the port rectangles.
    pub fn pieces(&self) -> Vec<Rect> {
        self.rects
            .iter()
            .copied()
            .chain(self.ports.iter().map(StripPort::rect))
            .collect()
    }

    pub fn area(&self) -> f64 {
        self.pieces().iter().map(Rect::area).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.pieces().iter().any(|r| r.contains_closed(p))
    }

    pub fn tag_at(&self, p: Point) -> EdgeTag {
        self.edge_tags
            .iter()
            .find(|ts| ts.segment.contains(p))
            .map(|ts| ts.tag)
            .unwrap_or(self.default_tag)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let pieces = self.pieces();
        for r in &pieces {
            Rect::new(r.x0, r.y0, r.x1, r.y1)?;
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if pieces[i].interior_overlap(&pieces[j]) {
                    return Err(GeometryError::Overlap(i, j));
                }
            }
        }
        // connectivity over the touch graph
        if !pieces.is_empty() {
            let mut seen = vec![false; pieces.len()];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..pieces.len() {
                    if !seen[j] && pieces[i].touches(&pieces[j]) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(GeometryError::Disconnected);
            }
        }
        for (k, port) in self.ports.iter().enumerate() {
            let on_edge = self.rects.iter().any(|r| {
                r.edges().iter().any(|e| {
                    e.contains(port.attachment.a) && e.contains(port.attachment.b)
                })
            });
            // the strip must leave the bounded part
            let probe = {
                let m = port.attachment.midpoint();
                let d = 1e-9;
                match port.direction {
                    Direction::PlusX => [m[0] + d, m[1]],
                    Direction::MinusX => [m[0] - d, m[1]],
                    Direction::PlusY => [m[0], m[1] + d],
                    Direction::MinusY => [m[0], m[1] - d],
                }
            };
            let outward = !self.rects.iter().any(|r| r.contains_interior(probe));
            if !on_edge || !outward {
                return Err(GeometryError::DetachedPort(k));
            }
        }
        for i in 0..self.edge_tags.len() {
            for j in i + 1..self.edge_tags.len() {
                let (s, t) = (&self.edge_tags[i], &self.edge_tags[j]);
                if s.tag != t.tag && s.segment.overlaps(&t.segment) {
                    let m = s.segment.midpoint();
                    return Err(GeometryError::ConflictingTags { x: m[0], y: m[1] });
                }
            }
        }
        let faces: Vec<Segment> = self.ports.iter().map(StripPort::truncation_face).collect();
        for ts in &self.edge_tags {
            if ts.tag == EdgeTag::Artificial
                && !faces
                    .iter()
                    .any(|f| f.contains(ts.segment.a) && f.contains(ts.segment.b))
            {
                let m = ts.segment.midpoint();
                return Err(GeometryError::MisplacedArtificial { x: m[0], y: m[1] });
            }
        }
        Ok(())
    }

    /// Smallest gap between distinct rectangle breakpoints along either axis.
    pub fn min_feature_size(&self) -> f64 {
        let (xs, ys) = breakpoints(&self.pieces());
        xs.windows(2)
            .chain(ys.windows(2))
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn breakpoints(pieces: &[Rect]) -> (Vec<f64>, Vec<f64>) {
    let dedup = |mut v: Vec<f64>| {
        v.sort_by(|a, b| a.total_cmp(b));
        let mut out: Vec<f64> = Vec::with_capacity(v.len());
        for x in v {
            if out.last().is_none_or(|&l| x - l > GEOM_TOL) {
                out.push(x);
            }
        }
        out
    };
    let xs = dedup(pieces.iter().flat_map(|r| [r.x0, r.x1]).collect());
    let ys = dedup(pieces.iter().flat_map(|r| [r.y0, r.y1]).collect());
    (xs, ys)
}

/// Named parameter set for presets.
pub type PresetParams = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Rectangle,
    LShape,
    XShape,
    SquareAnnulus,
    HalfGuideMixed,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Rectangle,
        Preset::LShape,
        Preset::XShape,
        Preset::SquareAnnulus,
        Preset::HalfGuideMixed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Rectangle => "rectangle",
            Preset::LShape => "l_shape",
            Preset::XShape => "x_shape",
            Preset::SquareAnnulus => "square_annulus",
            Preset::HalfGuideMixed => "half_guide_mixed",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .iter()
            .find(|p| p.name() == s)
            .copied()
            .ok_or_else(|| GeometryError::UnknownPreset(s.to_string()))
    }
}

/// Default strip truncation length, in strip widths.
pub const DEFAULT_TRUNCATION: f64 = 4.0;
/// Default target element size.
pub const DEFAULT_H: f64 = 1.0 / 32.0;

fn param(params: &PresetParams, name: &str, default: f64) -> Result<f64, GeometryError> {
    let v = params.get(name).copied().unwrap_or(default);
    if !(v > 0.0) || !v.is_finite() {
        return Err(GeometryError::InvalidParameter {
            name: name.into(),
            value: v,
            reason: "must be positive",
        });
    }
    Ok(v)
}

/// Canonical domains.
///
/// * `rectangle`: `(0,a) × (0,b)`, parameters `a`, `b` (default 1).
/// * `l_shape`: `{y < 1 or z < 1}` in the quadrant, unit corner square plus
///   two width-1 ports; parameter `T`.
/// * `x_shape`: `{|y| < 1/2 or |z| < 1/2}`, central square `(-1/2,1/2)²` plus
///   four ports; parameter `T`.
/// * `square_annulus`: outer square of side `outer` (default 3) centred at the
///   origin minus an inner square of side `inner` (default 1) centred at
///   (`offset_x`, `offset_y`); inner boundary `inner_conductor`, outer
///   boundary `outer_conductor`.
/// * `half_guide_mixed`: `(0,a) × (0,b)` with the symmetry line `x = 0`
///   tagged Dirichlet and the rest Neumann.
pub fn preset_domain(preset: Preset, params: &PresetParams) -> Result<RectilinearDomain2D, GeometryError> {
    match preset {
        Preset::Rectangle => {
            let a = param(params, "a", 1.0)?;
            let b = param(params, "b", 1.0)?;
            RectilinearDomain2D::new("rectangle", vec![Rect::new(0.0, 0.0, a, b)?], vec![], EdgeTag::Dirichlet, 0)
        }
        Preset::LShape => {
            let t = param(params, "T", DEFAULT_TRUNCATION)?;
            let ports = vec![
                StripPort::new(Segment::new([1.0, 0.0], [1.0, 1.0]), Direction::PlusX, t)?,
                StripPort::new(Segment::new([0.0, 1.0], [1.0, 1.0]), Direction::PlusY, t)?,
            ];
            RectilinearDomain2D::new("l_shape", vec![Rect::new(0.0, 0.0, 1.0, 1.0)?], ports, EdgeTag::Dirichlet, 0)
        }
        Preset::XShape => {
            let t = param(params, "T", DEFAULT_TRUNCATION)?;
            let (lo, hi) = (-0.5, 0.5);
            let ports = vec![
                StripPort::new(Segment::new([hi, lo], [hi, hi]), Direction::PlusX, t)?,
                StripPort::new(Segment::new([lo, lo], [lo, hi]), Direction::MinusX, t)?,
                StripPort::new(Segment::new([lo, hi], [hi, hi]), Direction::PlusY, t)?,
                StripPort::new(Segment::new([lo, lo], [hi, lo]), Direction::MinusY, t)?,
            ];
            RectilinearDomain2D::new("x_shape", vec![Rect::new(lo, lo, hi, hi)?], ports, EdgeTag::Dirichlet, 0)
        }
        Preset::SquareAnnulus => {
            let outer = param(params, "outer", 3.0)?;
            let inner = param(params, "inner", 1.0)?;
            let cx = params.get("offset_x").copied().unwrap_or(0.0);
            let cy = params.get("offset_y").copied().unwrap_or(0.0);
            let (o0, o1) = (-outer / 2.0, outer / 2.0);
            let (ix0, ix1) = (cx - inner / 2.0, cx + inner / 2.0);
            let (iy0, iy1) = (cy - inner / 2.0, cy + inner / 2.0);
            if !(ix0 > o0 + GEOM_TOL && ix1 < o1 - GEOM_TOL && iy0 > o0 + GEOM_TOL && iy1 < o1 - GEOM_TOL) {
                return Err(GeometryError::InvalidParameter {
                    name: "inner".into(),
                    value: inner,
                    reason: "inner square must be strictly nested in the outer square",
                });
            }
            let rects = vec![
                Rect::new(o0, o0, o1, iy0)?,
                Rect::new(o0, iy1, o1, o1)?,
                Rect::new(o0, iy0, ix0, iy1)?,
                Rect::new(ix1, iy0, o1, iy1)?,
            ];
            let inner_rect = Rect::new(ix0, iy0, ix1, iy1)?;
            let mut dom = RectilinearDomain2D::new("square_annulus", rects, vec![], EdgeTag::OuterConductor, 1)?;
            for e in inner_rect.edges() {
                dom = dom.with_tag(e, EdgeTag::InnerConductor)?;
            }
            Ok(dom)
        }
        Preset::HalfGuideMixed => {
            let a = param(params, "a", 1.0)?;
            let b = param(params, "b", 1.0)?;
            RectilinearDomain2D::new("half_guide_mixed", vec![Rect::new(0.0, 0.0, a, b)?], vec![], EdgeTag::Neumann, 0)?
                .with_tag(Segment::new([0.0, 0.0], [0.0, b]), EdgeTag::Dirichlet)
        }
    }
}

/// Mesh boundary edge with its tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

/// Conforming triangulation.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise node triples.
    pub tris: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Target element size (cell side bound).
    pub h: f64,
    /// Declared number of holes, for the Euler check.
    pub holes: usize,
    locator: OnceLock<Locator>,
}

impl TriMesh {
    pub fn new(nodes: Vec<Point>, tris: Vec<[usize; 3]>, boundary_edges: Vec<BoundaryEdge>, h: f64, holes: usize) -> Self {
        Self {
            nodes,
            tris,
            boundary_edges,
            h,
            holes,
            locator: OnceLock::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.tris[t].map(|i| self.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.tris[t].map(|i| self.nodes[i]);
        let d = |u: Point, v: Point| ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt();
        d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]))
    }

    /// Edge → incident triangle count, keyed by sorted node pair.
    pub fn edge_valence(&self) -> BTreeMap<(usize, usize), usize> {
        let mut map = BTreeMap::new();
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *map.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        map
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.nodes.len() as i64;
        let e = self.edge_valence().len() as i64;
        let f = self.tris.len() as i64;
        v - e + f
    }

    /// Checks positive areas, conformity, tag partition and the Euler
    /// relation `V - E + F = 1 - holes`.
    pub fn check_invariants(&self) -> Result<(), MeshError> {
        for t in 0..self.tris.len() {
            let a = self.signed_area(t);
            if !(a > 0.0) {
                return Err(MeshError::NonPositiveArea(t, a));
            }
        }
        let valence = self.edge_valence();
        let mut used = vec![false; self.nodes.len()];
        for t in &self.tris {
            for &i in t {
                used[i] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(MeshError::OrphanNode(i));
        }
        let boundary: BTreeMap<(usize, usize), usize> = {
            let mut m = BTreeMap::new();
            for e in &self.boundary_edges {
                let [a, b] = e.nodes;
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
            m
        };
        for (&(a, b), &count) in &boundary {
            if count != 1 || valence.get(&(a, b)) != Some(&1) {
                return Err(MeshError::BadBoundaryEdge(a, b));
            }
        }
        for (&(a, b), &count) in &valence {
            match count {
                1 if !boundary.contains_key(&(a, b)) => return Err(MeshError::UntaggedBoundary(a, b)),
                1 | 2 => {}
                n => return Err(MeshError::EdgeValence(a, b, n)),
            }
        }
        let expected = 1 - self.holes as i64;
        let found = self.euler_characteristic();
        if found != expected {
            return Err(MeshError::Euler { found, expected });
        }
        Ok(())
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator.get_or_init(|| Locator::build(self)).locate(self, p)
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.tris[t].map(|i| self.nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Uniform bucket grid over the bounding box for point location.
#[derive(Debug, Clone)]
struct Locator {
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn build(mesh: &TriMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let n = ((mesh.tris.len() as f64).sqrt().ceil() as usize).max(1);
        let dims = [n, n];
        let cell = [((hi[0] - lo[0]) / n as f64).max(1e-300), ((hi[1] - lo[1]) / n as f64).max(1e-300)];
        let mut buckets = vec![Vec::new(); n * n];
        let index = |v: f64, d: usize| (((v - lo[d]) / cell[d]).floor().max(0.0) as usize).min(n - 1);
        for (t, tri) in mesh.tris.iter().enumerate() {
            let pts = tri.map(|i| mesh.nodes[i]);
            let (mut bl, mut bh) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for d in 0..2 {
                    bl[d] = bl[d].min(p[d]);
                    bh[d] = bh[d].max(p[d]);
                }
            }
            for i in index(bl[0], 0)..=index(bh[0], 0) {
                for j in index(bl[1], 1)..=index(bh[1], 1) {
                    buckets[j * n + i].push(t as u32);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            dims,
            buckets,
        }
    }

    fn locate(&self, mesh: &TriMesh, p: Point) -> Option<(usize, [f64; 3])> {
        let fi = (p[0] - self.origin[0]) / self.cell[0];
        let fj = (p[1] - self.origin[1]) / self.cell[1];
        let tol = 1e-9;
        if fi < -tol || fj < -tol || fi > self.dims[0] as f64 + tol || fj > self.dims[1] as f64 + tol {
            return None;
        }
        let i = (fi.floor().max(0.0) as usize).min(self.dims[0] - 1);
        let j = (fj.floor().max(0.0) as usize).min(self.dims[1] - 1);
        for &t in &self.buckets[j * self.dims[0] + i] {
            let t = t as usize;
            let bary = mesh.barycentric(t, p);
            if bary.iter().all(|&l| l >= -1e-10) {
                return Some((t, bary));
            }
        }
        None
    }
}

/// Structured conforming triangulation of `dom` with cell sides at most `h`.
pub fn triangulate(dom: &RectilinearDomain2D, h: f64) -> Result<TriMesh, GeometryError> {
    let max = dom.min_feature_size() / 2.0;
    if !(h > 0.0) || h > max * (1.0 + 1e-9) {
        return Err(GeometryError::MeshTooCoarse { h, max });
    }
    let pieces = dom.pieces();
    let (bx, by) = breakpoints(&pieces);
    let subdivide = |b: &[f64]| {
        let mut out = vec![b[0]];
        for w in b.windows(2) {
            let n = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0) as usize;
            for k in 1..=n {
                out.push(if k == n { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / n as f64 });
            }
        }
        out
    };
    let xs = subdivide(&bx);
    let ys = subdivide(&by);
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let active = |i: usize, j: usize| {
        let c = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
        pieces.iter().any(|r| r.contains_interior(c))
    };
    let mut cell_on = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            cell_on[j * nx + i] = active(i, j);
        }
    }
    let on = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && cell_on[j as usize * nx + i as usize];

    // nodes in row-major order over grid points touching an active cell
    let mut node_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let (ii, jj) = (i as isize, j as isize);
            if on(ii - 1, jj - 1) || on(ii, jj - 1) || on(ii - 1, jj) || on(ii, jj) {
                node_id[j * (nx + 1) + i] = nodes.len();
                nodes.push([xs[i], ys[j]]);
            }
        }
    }
    let nid = |i: usize, j: usize| node_id[j * (nx + 1) + i];
    let mut tris = Vec::with_capacity(2 * nx * ny);
    let mut boundary_edges = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if !cell_on[j * nx + i] {
                continue;
            }
            let (p00, p10, p11, p01) = (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1));
            tris.push([p00, p10, p11]);
            tris.push([p00, p11, p01]);
            let (ii, jj) = (i as isize, j as isize);
            let mut push = |a: usize, b: usize| {
                let mid = [0.5 * (nodes[a][0] + nodes[b][0]), 0.5 * (nodes[a][1] + nodes[b][1])];
                boundary_edges.push(BoundaryEdge {
                    nodes: [a, b],
                    tag: dom.tag_at(mid),
                });
            };
            if !on(ii, jj - 1) {
                push(p00, p10);
            }
            if !on(ii + 1, jj) {
                push(p10, p11);
            }
            if !on(ii, jj + 1) {
                push(p11, p01);
            }
            if !on(ii - 1, jj) {
                push(p01, p00);
            }
        }
    }
    Ok(TriMesh::new(nodes, tris, boundary_edges, h, dom.holes))
}

/// Uniform red refinement: every triangle split into four through its edge
/// midpoints. Original nodes keep their indices.
pub fn refine(mesh: &TriMesh) -> TriMesh {
    let mut nodes = mesh.nodes.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let (p, q) = (nodes[a], nodes[b]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };
    let mut tris = Vec::with_capacity(4 * mesh.tris.len());
    for &[a, b, c] in &mesh.tris {
        let ab = midpoint(a, b, &mut nodes);
        let bc = midpoint(b, c, &mut nodes);
        let ca = midpoint(c, a, &mut nodes);
        tris.push([a, ab, ca]);
        tris.push([ab, b, bc]);
        tris.push([ca, bc, c]);
        tris.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        let m = midpoint(a, b, &mut nodes);
        boundary_edges.push(BoundaryEdge { nodes: [a, m], tag: e.tag });
        boundary_edges.push(BoundaryEdge { nodes: [m, b], tag: e.tag });
    }
    TriMesh::new(nodes, tris, boundary_edges, mesh.h / 2.0, mesh.holes)
}
