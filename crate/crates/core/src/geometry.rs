//! Reference paths, Frenet-frame projection and lane geometry.
//!
//! A [`ReferencePath`] is a densely sampled polyline with a unit left normal at
//! every vertex. Between vertices the frame is defined by the linearly
//! interpolated point and the normalized interpolated normal, which makes the
//! normal field continuous along the whole path. Projection solves for the
//! foot whose interpolated normal passes through the query point, so
//! projection followed by reconstruction is exact up to rounding.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest allowed distance between consecutive samples of a reference path.
pub const MAX_SAMPLE_SPACING: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a {kind} reference path needs at least {min} waypoints, got {got}")]
    TooFewWaypoints { kind: &'static str, min: usize, got: usize },
    #[error("consecutive waypoints {0} and {1} coincide")]
    DuplicateWaypoint(usize, usize),
    #[error("waypoint {0} is not finite")]
    NonFinite(usize),
    #[error("lateral offset {d} folds over the path at s = {s} (local radius {radius})")]
    FoldOver { s: f64, d: f64, radius: f64 },
    #[error("sample spacing {0} exceeds the resampling bound")]
    SpacingTooLarge(f64),
    #[error("invalid map parameter: {0}")]
    InvalidMapParameter(String),
    #[error("lane {lane} out of range for a {count}-lane map")]
    LaneOutOfRange { lane: usize, count: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_heading(theta: f64) -> Self {
        Self::new(libm::cos(theta), libm::sin(theta))
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn distance_sq(self, o: Self) -> f64 {
        let d = self - o;
        d.x * d.x + d.y * d.y
    }

    /// Rotated by +90 degrees.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Self, u: f64) -> Self {
        Self::new(self.x + u * (o.x - self.x), self.y + u * (o.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Position plus heading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Arc length `s` along a path and signed lateral offset `d` (positive left).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrenetCoord {
    pub s: f64,
    pub d: f64,
}

impl FrenetCoord {
    pub const fn new(s: f64, d: f64) -> Self {
        Self { s, d }
    }
}

/// Where on the path a projection landed: segment index, chord parameter and offset.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Foot {
    seg: usize,
    u: f64,
    d: f64,
}

#[derive(Clone, Debug)]
pub struct ReferencePath {
    points: Vec<Point2>,
    arc: Vec<f64>,
    headings: Vec<f64>,
    normals: Vec<Point2>,
    curvature: Vec<f64>,
    closed: bool,
    length: f64,
}

/// Vertices searched on each side of a hint before falling back to a global search.
const HINT_WINDOW: usize = 80;

impl ReferencePath {
    /// Builds a path from waypoints, subdividing every leg so that consecutive
    /// samples are at most [`MAX_SAMPLE_SPACING`] apart.
    pub fn from_waypoints(waypoints: &[Point2], closed: bool) -> Result<Self, GeometryError> {
        validate_waypoints(waypoints, closed)?;
        let n = waypoints.len();
        let legs = if closed { n } else { n - 1 };
        let mut points = Vec::with_capacity(n * 4);
        for i in 0..legs {
            let a = waypoints[i];
            let b = waypoints[(i + 1) % n];
            let len = a.distance(b);
            let pieces = ((len / MAX_SAMPLE_SPACING) - 1e-9).ceil().max(1.0) as usize;
            for k in 0..pieces {
                points.push(a.lerp(b, k as f64 / pieces as f64));
            }
        }
        if !closed {
            points.push(waypoints[n - 1]);
        }
        Self::from_samples(points, closed)
    }

    /// Builds a path from samples that already satisfy the spacing bound.
    pub fn from_samples(points: Vec<Point2>, closed: bool) -> Result<Self, GeometryError> {
        validate_waypoints(&points, closed)?;
        let n = points.len();
        let mut headings = Vec::with_capacity(n);
        for i in 0..n {
            let (prev, next) = if closed {
                (points[(i + n - 1) % n], points[(i + 1) % n])
            } else if i == 0 {
                (points[0], points[1])
            } else if i == n - 1 {
                (points[n - 2], points[n - 1])
            } else {
                (points[i - 1], points[i + 1])
            };
            let t = next - prev;
            headings.push(libm::atan2(t.y, t.x));
        }
        Self::assemble(points, headings, closed)
    }

    fn assemble(points: Vec<Point2>, headings: Vec<f64>, closed: bool) -> Result<Self, GeometryError> {
        let n = points.len();
        let mut arc = Vec::with_capacity(n);
        arc.push(0.0);
        let mut max_gap: f64 = 0.0;
        for i in 1..n {
            let gap = points[i].distance(points[i - 1]);
            max_gap = max_gap.max(gap);
            arc.push(arc[i - 1] + gap);
        }
        let mut length = arc[n - 1];
        if closed {
            let gap = points[0].distance(points[n - 1]);
            max_gap = max_gap.max(gap);
            length += gap;
        }
        if max_gap > MAX_SAMPLE_SPACING + 1e-9 {
            return Err(GeometryError::SpacingTooLarge(max_gap));
        }
        let normals: Vec<Point2> = headings.iter().map(|&h| Point2::from_heading(h).perp()).collect();
        let mut curvature = Vec::with_capacity(n);
        for i in 0..n {
            let (ip, inext) = if closed {
                ((i + n - 1) % n, (i + 1) % n)
            } else {
                (i.saturating_sub(1), (i + 1).min(n - 1))
            };
            let mut ds = arc[inext] - arc[ip];
            if ds <= 0.0 {
                ds += length;
            }
            curvature.push(wrap_angle(headings[inext] - headings[ip]) / ds);
        }
        Ok(Self { points, arc, headings, normals, curvature, closed, length })
    }

    /// The same path shifted laterally by `offset` (positive left). Vertex
    /// headings and normals are shared with `self`.
    pub fn offset(&self, offset: f64) -> Result<Self, GeometryError> {
        for (i, &k) in self.curvature.iter().enumerate() {
            if 1.0 - offset * k <= 1e-6 {
                return Err(GeometryError::FoldOver { s: self.arc[i], d: offset, radius: 1.0 / k.abs() });
            }
        }
        let points = self
            .points
            .iter()
            .zip(&self.normals)
            .map(|(&p, &nrm)| p + nrm * offset)
            .collect();
        let mut path = Self::assemble(points, self.headings.clone(), self.closed)?;
        path.normals = self.normals.clone();
        path.curvature = self.curvature.iter().map(|&k| k / (1.0 - offset * k)).collect();
        Ok(path)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    fn segment_len(&self, seg: usize) -> f64 {
        if seg + 1 < self.points.len() {
            self.arc[seg + 1] - self.arc[seg]
        } else {
            self.length - self.arc[seg]
        }
    }

    fn seg_end(&self, seg: usize) -> usize {
        (seg + 1) % self.points.len()
    }

    /// Wraps `s` into `[0, length)` on closed paths; identity on open ones.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if !self.closed {
            return s;
        }
        let w = s.rem_euclid(self.length);
        if w >= self.length {
            0.0
        } else {
            w
        }
    }

    /// Signed difference `to - from` along the path; on closed paths it is
    /// wrapped into `(-L/2, L/2]`.
    pub fn signed_gap(&self, from: f64, to: f64) -> f64 {
        let raw = to - from;
        if !self.closed {
            return raw;
        }
        let half = 0.5 * self.length;
        let mut g = raw.rem_euclid(self.length);
        if g > half {
            g -= self.length;
        }
        g
    }

    fn locate_segment(&self, s: f64) -> (usize, f64) {
        let s = self.wrap_s(s);
        let last = self.segment_count() - 1;
        let seg = self.arc.partition_point(|&a| a <= s).saturating_sub(1).min(last);
        let len = self.segment_len(seg);
        (seg, (s - self.arc[seg]) / len)
    }

    fn frame_at(&self, seg: usize, u: f64) -> (Point2, Point2) {
        let j = self.seg_end(seg);
        let c = self.points[seg].lerp(self.points[j], u);
        let m = self.normals[seg].lerp(self.normals[j], u);
        (c, m * (1.0 / m.norm()))
    }

    /// Signed curvature at `s` (positive for left turns).
    pub fn curvature_at(&self, s: f64) -> f64 {
        let (seg, u) = self.locate_segment(s);
        let j = self.seg_end(seg);
        self.curvature[seg] + u * (self.curvature[j] - self.curvature[seg])
    }

    /// Position and heading of the path itself at arc length `s`.
    pub fn pose_at(&self, s: f64) -> Pose {
        let (seg, u) = self.locate_segment(s);
        let (c, m) = self.frame_at(seg, u);
        Pose::new(c.x, c.y, libm::atan2(-m.x, m.y))
    }

    /// Inverse of [`ReferencePath::project`].
    pub fn to_cartesian(&self, fc: FrenetCoord) -> Result<Pose, GeometryError> {
        let (seg, u) = self.locate_segment(fc.s);
        let j = self.seg_end(seg);
        let k = self.curvature[seg].abs().max(self.curvature[j].abs());
        if fc.d.abs() * k >= 1.0 {
            return Err(GeometryError::FoldOver { s: fc.s, d: fc.d, radius: 1.0 / k });
        }
        let (c, m) = self.frame_at(seg, u);
        let p = c + m * fc.d;
        Ok(Pose::new(p.x, p.y, libm::atan2(-m.x, m.y)))
    }

    /// Projects `p` onto the path. Ties are broken towards the smaller `s`.
    pub fn project(&self, p: Point2) -> FrenetCoord {
        let nearest = self.nearest_vertex(p, 0, self.points.len());
        self.foot_to_frenet(self.refine(p, nearest))
    }

    /// Like [`ReferencePath::project`] but searches near `hint_s` first, which
    /// keeps projections on self-approaching paths on the branch being followed.
    pub fn project_near(&self, p: Point2, hint_s: f64) -> FrenetCoord {
        let n = self.points.len();
        if n <= 2 * HINT_WINDOW + 1 {
            return self.project(p);
        }
        let (hint, _) = self.locate_segment(hint_s);
        let start = if self.closed {
            (hint + n - HINT_WINDOW) % n
        } else {
            hint.saturating_sub(HINT_WINDOW)
        };
        let count = if self.closed { 2 * HINT_WINDOW + 1 } else { (hint + HINT_WINDOW + 1).min(n) - start };
        let nearest = self.nearest_vertex(p, start, count);
        let offset = (nearest + n - start) % n;
        let at_edge = offset == 0 || offset + 1 == count;
        let boundary = !self.closed && (nearest == 0 || nearest == n - 1);
        if at_edge && !boundary {
            return self.project(p);
        }
        self.foot_to_frenet(self.refine(p, nearest))
    }

    fn nearest_vertex(&self, p: Point2, start: usize, count: usize) -> usize {
        let n = self.points.len();
        let mut best = start % n;
        let mut best_d = f64::INFINITY;
        for k in 0..count {
            let i = (start + k) % n;
            let d = self.points[i].distance_sq(p);
            if d < best_d || (d == best_d && i < best) {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn foot_to_frenet(&self, f: Foot) -> FrenetCoord {
        let s = self.arc[f.seg] + f.u * self.segment_len(f.seg);
        FrenetCoord::new(self.wrap_s(s), f.d)
    }

    fn refine(&self, p: Point2, vertex: usize) -> Foot {
        let n = self.points.len();
        let segs = self.segment_count();
        let mut best: Option<(Foot, f64)> = None;
        for delta in -2i64..=1 {
            let seg = if self.closed {
                (vertex as i64 + delta).rem_euclid(n as i64) as usize
            } else {
                let s = vertex as i64 + delta;
                if s < 0 || s >= segs as i64 {
                    continue;
                }
                s as usize
            };
            let lo = if !self.closed && seg == 0 { f64::NEG_INFINITY } else { -1e-9 };
            let hi = if !self.closed && seg + 1 == segs { f64::INFINITY } else { 1.0 + 1e-9 };
            for u in self.normal_roots(p, seg) {
                if u < lo || u > hi {
                    continue;
                }
                let (c, m) = self.frame_at(seg, u);
                let d = (p - c).dot(m);
                let s = self.arc[seg] + u * self.segment_len(seg);
                let better = match best {
                    None => true,
                    Some((bf, bs)) => d.abs() < bf.d.abs() - 1e-12 || (d.abs() <= bf.d.abs() + 1e-12 && s < bs),
                };
                if better {
                    best = Some((Foot { seg, u, d }, s));
                }
            }
        }
        best.map(|(f, _)| f).unwrap_or_else(|| {
            let seg = vertex.min(segs - 1);
            let u = if vertex == seg { 0.0 } else { 1.0 };
            let (c, m) = self.frame_at(seg, u);
            Foot { seg, u, d: (p - c).dot(m) }
        })
    }

    /// Parameters `u` on segment `seg` whose interpolated normal line passes through `p`.
    fn normal_roots(&self, p: Point2, seg: usize) -> Vec<f64> {
        let j = self.seg_end(seg);
        let q = p - self.points[seg];
        let dir = self.points[j] - self.points[seg];
        let n0 = self.normals[seg];
        let dn = self.normals[j] - n0;
        // cross(q - u*dir, n0 + u*dn) = 0
        let a = -dir.cross(dn);
        let b = q.cross(dn) - dir.cross(n0);
        let c = q.cross(n0);
        if a.abs() <= 1e-14 * b.abs().max(1e-300) {
            if b == 0.0 {
                return Vec::new();
            }
            return vec![-c / b];
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Vec::new();
        }
        let root = disc.sqrt();
        let qq = -0.5 * (b + b.signum() * root);
        let mut out = Vec::with_capacity(2);
        if qq != 0.0 {
            out.push(c / qq);
        }
        out.push(qq / a);
        out
    }
}

fn validate_waypoints(points: &[Point2], closed: bool) -> Result<(), GeometryError> {
    let (kind, min) = if closed { ("closed", 3) } else { ("open", 2) };
    if points.len() < min {
        return Err(GeometryError::TooFewWaypoints { kind, min, got: points.len() });
    }
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite(i));
        }
    }
    let n = points.len();
    let pairs = if closed { n } else { n - 1 };
    for i in 0..pairs {
        let j = (i + 1) % n;
        if points[i].distance(points[j]) <= 1e-12 {
            return Err(GeometryError::DuplicateWaypoint(i, j));
        }
    }
    Ok(())
}

/// Distances from the ego reference point to the left and right boundary of
/// `lane`, given the ego position in reference-path (rightmost lane) coordinates.
pub fn lane_boundary_distances(map: &TrackMap, ego_fc: FrenetCoord, lane: usize) -> (f64, f64) {
    let half = 0.5 * map.lane_width();
    let rel = ego_fc.d - map.lane_offset(lane);
    ((half - rel).max(0.0), (half + rel).max(0.0))
}

/// Ego location relative to the lane layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanePosition {
    /// Laterally nearest lane.
    pub lane: usize,
    /// Frenet coordinates on the rightmost-lane centerline.
    pub reference: FrenetCoord,
    /// Frenet coordinates on the centerline of `lane`.
    pub in_lane: FrenetCoord,
}

/// A multi-lane road: one centerline per lane, lane 0 being the rightmost.
#[derive(Clone, Debug)]
pub struct TrackMap {
    centerlines: Vec<ReferencePath>,
    lane_width: f64,
    rightmost_lane_index: usize,
}

impl TrackMap {
    /// Builds a map whose rightmost lane follows `reference`; further lanes
    /// are stacked to its left at `lane_width` spacing.
    pub fn from_reference(reference: ReferencePath, lane_width: f64, lane_count: usize) -> Result<Self, GeometryError> {
        if !(lane_width > 0.0 && lane_width.is_finite()) {
            return Err(GeometryError::InvalidMapParameter(format!("lane_width must be positive, got {lane_width}")));
        }
        if lane_count < 2 {
            return Err(GeometryError::InvalidMapParameter(format!("lane_count must be at least 2, got {lane_count}")));
        }
        let mut centerlines = Vec::with_capacity(lane_count);
        for k in 1..lane_count {
            centerlines.push(reference.offset(k as f64 * lane_width)?);
        }
        centerlines.insert(0, reference);
        Ok(Self { centerlines, lane_width, rightmost_lane_index: 0 })
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn lane_count(&self) -> usize {
        self.centerlines.len()
    }

    pub fn rightmost_lane_index(&self) -> usize {
        self.rightmost_lane_index
    }

    /// Centerline of the rightmost lane; all lateral offsets refer to it.
    pub fn reference(&self) -> &ReferencePath {
        &self.centerlines[self.rightmost_lane_index]
    }

    pub fn centerline(&self, lane: usize) -> Result<&ReferencePath, GeometryError> {
        self.centerlines
            .get(lane)
            .ok_or(GeometryError::LaneOutOfRange { lane, count: self.centerlines.len() })
    }

    pub fn centerlines(&self) -> &[ReferencePath] {
        &self.centerlines
    }

    /// Lateral offset of a lane centerline from the reference path.
    pub fn lane_offset(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    /// Lane whose centerline is laterally nearest to reference offset `d`.
    pub fn lane_of_offset(&self, d: f64) -> usize {
        let k = (d / self.lane_width).round();
        k.clamp(0.0, (self.lane_count() - 1) as f64) as usize
    }

    /// Lateral range of the paved road on the reference path, `(right edge, left edge)`.
    pub fn road_edges(&self) -> (f64, f64) {
        let half = 0.5 * self.lane_width;
        (-half, self.lane_offset(self.lane_count() - 1) + half)
    }

    /// Locates a point; `hint_s` is a reference-path arc length near the expected answer.
    pub fn locate(&self, p: Point2, hint_s: Option<f64>) -> LanePosition {
        let reference = match hint_s {
            Some(h) => self.reference().project_near(p, h),
            None => self.reference().project(p),
        };
        let lane = self.lane_of_offset(reference.d);
        let in_lane = if lane == self.rightmost_lane_index {
            reference
        } else {
            self.centerlines[lane].project_near(p, reference.s)
        };
        LanePosition { lane, reference, in_lane }
    }

    /// Projects `p` onto the centerline of `lane`, searching near reference arc length `hint_s`.
    pub fn project_on_lane(&self, p: Point2, lane: usize, hint_s: f64) -> FrenetCoord {
        let path = &self.centerlines[lane.min(self.lane_count() - 1)];
        if lane == self.rightmost_lane_index {
            path.project_near(p, hint_s)
        } else {
            // Lane paths share vertex indices with the reference, so scale the hint.
            let frac = hint_s / self.reference().length();
            path.project_near(p, frac * path.length())
        }
    }
}

/// A straight leg or a circular arc; positive `angle` turns left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathSegment {
    Straight { length: f64 },
    Arc { radius: f64, angle: f64 },
}

impl PathSegment {
    pub fn length(&self) -> f64 {
        match *self {
            PathSegment::Straight { length } => length,
            PathSegment::Arc { radius, angle } => radius * angle.abs(),
        }
    }
}

/// Samples a chain of segments at `spacing` starting from `start`. The end
/// point is included.
pub fn sample_segments(start: Pose, segments: &[PathSegment], spacing: f64) -> Vec<Point2> {
    let (mut x, mut y, mut th) = (start.x, start.y, start.theta);
    let mut pts = vec![Point2::new(x, y)];
    for seg in segments {
        let len = seg.length();
        let pieces = ((len / spacing) - 1e-9).ceil().max(1.0) as usize;
        let ds = len / pieces as f64;
        let (x0, y0, th0) = (x, y, th);
        for k in 1..=pieces {
            let l = ds * k as f64;
            match *seg {
                PathSegment::Straight { .. } => {
                    x = x0 + l * libm::cos(th0);
                    y = y0 + l * libm::sin(th0);
                }
                PathSegment::Arc { radius, angle } => {
                    let kappa = angle.signum() / radius;
                    th = th0 + kappa * l;
                    x = x0 + (libm::sin(th) - libm::sin(th0)) / kappa;
                    y = y0 - (libm::cos(th) - libm::cos(th0)) / kappa;
                }
            }
            pts.push(Point2::new(x, y));
        }
    }
    pts
}

/// Spacing used when sampling the built-in maps. Kept below
/// [`MAX_SAMPLE_SPACING`] so that outer lanes on right-hand curves still meet it.
pub const MAP_SAMPLE_SPACING: f64 = 0.025;

fn closed_map(segments: &[PathSegment], lane_width: f64, lane_count: usize) -> Result<TrackMap, GeometryError> {
    let mut pts = sample_segments(Pose::default(), segments, MAP_SAMPLE_SPACING);
    let last = pts.pop().expect("segments produce points");
    let closure = last.distance(pts[0]);
    if closure > 1e-6 {
        return Err(GeometryError::InvalidMapParameter(format!("segments do not close (gap {closure:.3e} m)")));
    }
    let reference = ReferencePath::from_samples(pts, true)?;
    TrackMap::from_reference(reference, lane_width, lane_count)
}

fn check_positive(name: &str, v: f64) -> Result<(), GeometryError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidMapParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Counter-clockwise oval; `radius` is the radius of the rightmost (outer) lane centerline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvalParams {
    pub straight_length: f64,
    pub radius: f64,
    pub lane_width: f64,
    pub lane_count: usize,
}

impl Default for OvalParams {
    fn default() -> Self {
        Self { straight_length: 6.0, radius: 2.0, lane_width: 0.8, lane_count: 2 }
    }
}

pub fn build_oval_map(params: &OvalParams) -> Result<TrackMap, GeometryError> {
    check_positive("straight_length", params.straight_length)?;
    check_positive("radius", params.radius)?;
    check_positive("lane_width", params.lane_width)?;
    let segments = [
        PathSegment::Straight { length: params.straight_length },
        PathSegment::Arc { radius: params.radius, angle: PI },
        PathSegment::Straight { length: params.straight_length },
        PathSegment::Arc { radius: params.radius, angle: PI },
    ];
    closed_map(&segments, params.lane_width, params.lane_count)
}

/// Closed two-lobe route with left curves around the lobes and right curves
/// at the waist, so the ego meets both turning directions.
///
/// Radii refer to the rightmost lane centerline. The route is built from nine
/// segments and is point-symmetric about the middle of the waist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossParams {
    pub straight_length: f64,
    pub lobe_radius: f64,
    pub waist_radius: f64,
    /// Turning angle of each right-hand waist curve, in degrees.
    pub waist_angle_deg: f64,
    pub lane_width: f64,
    pub lane_count: usize,
}

impl Default for CrossParams {
    fn default() -> Self {
        Self {
            straight_length: 3.0,
            lobe_radius: 3.0,
            waist_radius: 1.5,
            waist_angle_deg: 30.0,
            lane_width: 0.8,
            lane_count: 2,
        }
    }
}

impl CrossParams {
    pub fn segments(&self) -> Vec<PathSegment> {
        let w = self.waist_angle_deg.to_radians();
        let half = PathSegment::Straight { length: 0.5 * self.straight_length };
        let full = PathSegment::Straight { length: self.straight_length };
        let right = PathSegment::Arc { radius: self.waist_radius, angle: -w };
        let lobe = PathSegment::Arc { radius: self.lobe_radius, angle: PI + 2.0 * w };
        vec![half, right, lobe, right, full, right, lobe, right, half]
    }
}

pub fn build_cross_map(params: &CrossParams) -> Result<TrackMap, GeometryError> {
    check_positive("straight_length", params.straight_length)?;
    check_positive("lobe_radius", params.lobe_radius)?;
    check_positive("waist_radius", params.waist_radius)?;
    check_positive("lane_width", params.lane_width)?;
    if !(params.waist_angle_deg > 0.0 && params.waist_angle_deg < 90.0) {
        return Err(GeometryError::InvalidMapParameter(format!(
            "waist_angle_deg must lie in (0, 90), got {}",
            params.waist_angle_deg
        )));
    }
    closed_map(&params.segments(), params.lane_width, params.lane_count)
}
