// SPDX-License-Identifier: Apache-2.0

//! Exact planar convex geometry.
//!
//! Every angular integral over a polygon (Cauchy perimeter, semi-perimeter)
//! is evaluated in closed form, one vertex arc at a time. A vertex `v` is the
//! support point for all directions between the outward normals of its two
//! incident edges, and on that arc `h(e_θ) = v·e_θ`, whose antiderivative is
//! `v_x sin θ - v_y cos θ`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for collinearity and coincidence tests.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("undefined direction")]
    UndefinedDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector `e_θ = (cos θ, sin θ)`.
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Rotation by +π/2.
    #[inline]
    pub fn perp(self) -> Self {
        Vec2 { x: -self.y, y: self.x }
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x + o.x, y: self.y + o.y }
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 { x: self.x - o.x, y: self.y - o.y }
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2 { x: -self.x, y: -self.y }
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2 { x: self.x * s, y: self.y * s }
    }
}

/// 2×2 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };
    pub const ZERO: Mat2 = Mat2 { a11: 0.0, a12: 0.0, a21: 0.0, a22: 0.0 };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Mat2 { a11: d1, a12: 0.0, a21: 0.0, a22: d2 }
    }

    pub fn symmetric(s11: f64, s12: f64, s22: f64) -> Self {
        Mat2 { a11: s11, a12: s12, a21: s12, a22: s22 }
    }

    /// Rotation matrix by angle `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2 { a11: c, a12: -s, a21: s, a22: c }
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2 { x: self.a11 * v.x + self.a12 * v.y, y: self.a21 * v.x + self.a22 * v.y }
    }

    /// Bilinear form `uᵀ M v`.
    #[inline]
    pub fn bilinear(&self, u: Vec2, v: Vec2) -> f64 {
        u.dot(self.apply(v))
    }

    #[inline]
    pub fn quad(&self, u: Vec2) -> f64 {
        self.bilinear(u, u)
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a11: self.a11, a12: self.a21, a21: self.a12, a22: self.a22 }
    }

    pub fn matmul(&self, o: &Mat2) -> Self {
        Mat2 {
            a11: self.a11 * o.a11 + self.a12 * o.a21,
            a12: self.a11 * o.a12 + self.a12 * o.a22,
            a21: self.a21 * o.a11 + self.a22 * o.a21,
            a22: self.a21 * o.a12 + self.a22 * o.a22,
        }
    }

    pub fn add(&self, o: &Mat2) -> Self {
        Mat2 {
            a11: self.a11 + o.a11,
            a12: self.a12 + o.a12,
            a21: self.a21 + o.a21,
            a22: self.a22 + o.a22,
        }
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2 { a11: self.a11 * s, a12: self.a12 * s, a21: self.a21 * s, a22: self.a22 * s }
    }

    /// `R M Rᵀ`: the covariance of `R X` when `M` is the covariance of `X`.
    pub fn conjugate(&self, r: &Mat2) -> Self {
        r.matmul(self).matmul(&r.transpose())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn is_symmetric(&self) -> bool {
        let scale = self.a12.abs().max(self.a21.abs()).max(1.0);
        (self.a12 - self.a21).abs() <= 1e-12 * scale
    }

    /// Eigenvalues (ascending) and unit eigenvector of the larger one, for a
    /// symmetric matrix.
    pub fn sym_eigen(&self) -> ([f64; 2], Vec2) {
        let (a, b, d) = (self.a11, 0.5 * (self.a12 + self.a21), self.a22);
        let mean = 0.5 * (a + d);
        let half_gap = (0.5 * (a - d)).hypot(b);
        let hi = mean + half_gap;
        let lo = mean - half_gap;
        let v = if b.abs() > 0.0 {
            let v = Vec2::new(hi - d, b);
            v.normalized().unwrap_or(Vec2::new(1.0, 0.0))
        } else if a >= d {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        };
        ([lo, hi], v)
    }

    /// True when symmetric with both eigenvalues ≥ −1e−12 (relative to scale).
    pub fn is_covariance(&self) -> bool {
        if !self.is_finite() || !self.is_symmetric() {
            return false;
        }
        let ([lo, hi], _) = self.sym_eigen();
        lo >= -1e-12 * hi.abs().max(1.0)
    }

    /// Symmetric PSD square root via eigendecomposition; small negative
    /// eigenvalues are clamped to zero.
    pub fn sqrt_psd(&self) -> Mat2 {
        let ([lo, hi], v) = self.sym_eigen();
        let s_hi = hi.max(0.0).sqrt();
        let s_lo = lo.max(0.0).sqrt();
        let w = v.perp();
        // s_hi v vᵀ + s_lo w wᵀ
        Mat2 {
            a11: s_hi * v.x * v.x + s_lo * w.x * w.x,
            a12: s_hi * v.x * v.y + s_lo * w.x * w.y,
            a21: s_hi * v.y * v.x + s_lo * w.y * w.x,
            a22: s_hi * v.y * v.y + s_lo * w.y * w.y,
        }
    }
}

/// A compact convex polygon with counter-clockwise vertices starting at the
/// lexicographically smallest one. One vertex is a point, two a segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn point(p: Vec2) -> Self {
        ConvexPolygon { vertices: vec![p] }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Never true; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    pub fn into_vertices(self) -> Vec<Vec2> {
        self.vertices
    }

    /// Outward unit normals of the edges; edge `k` joins vertex `k` to `k+1`.
    /// Empty for a point.
    fn edge_normals(&self) -> Vec<Vec2> {
        let v = &self.vertices;
        let m = v.len();
        if m < 2 {
            return Vec::new();
        }
        (0..m)
            .map(|k| {
                let d = v[(k + 1) % m] - v[k];
                Vec2::new(d.y, -d.x).normalized().expect("distinct vertices")
            })
            .collect()
    }

    /// Support-point arcs: for vertex `k`, the outward normals bounding the
    /// range of directions in which it is the maximiser, in CCW order.
    fn vertex_arcs(&self) -> Vec<(Vec2, Vec2, Vec2)> {
        let normals = self.edge_normals();
        let m = self.vertices.len();
        (0..m)
            .map(|k| {
                let prev = normals[(k + m - 1) % m];
                (self.vertices[k], prev, normals[k])
            })
            .collect()
    }

    /// `true` if `p` lies in the polygon (boundary included, within tolerance).
    pub fn contains(&self, p: Vec2) -> bool {
        point_distance(p, self) <= GEOM_TOL * (1.0 + p.norm().max(self.scale()))
    }

    fn scale(&self) -> f64 {
        self.vertices.iter().fold(0.0_f64, |acc, v| acc.max(v.x.abs()).max(v.y.abs()))
    }
}

#[inline]
fn orient(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a - o).cross(b - o)
}

/// Left turn strictly beyond the relative collinearity tolerance.
#[inline]
fn is_left_turn(o: Vec2, a: Vec2, b: Vec2) -> bool {
    let u = a - o;
    let w = b - o;
    let c = u.cross(w);
    c > GEOM_TOL * u.norm() * w.norm()
}

/// Convex hull (Andrew's monotone chain). Collinear and coincident points
/// are dropped, so the output is strictly convex.
pub fn convex_hull(points: &[Vec2]) -> Result<ConvexPolygon, GeomError> {
    if points.is_empty() {
        return Err(GeomError::EmptyPointSet);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let mut pts = points.to_vec();
    Ok(hull_in_place(&mut pts))
}

/// Hull of a point buffer that the caller no longer needs (it is sorted).
pub(crate) fn hull_in_place(pts: &mut [Vec2]) -> ConvexPolygon {
    pts.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let n = pts.len();
    let first = pts[0];
    let last = pts[n - 1];
    let span = first.dist(last).max(first.norm()).max(last.norm());
    if first.dist(last) <= GEOM_TOL * span.max(f64::MIN_POSITIVE) {
        return ConvexPolygon::point(first);
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(64);
    for &p in pts.iter() {
        while hull.len() >= 2 && !is_left_turn(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && !is_left_turn(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    dedup_ring(&mut hull, span);
    ConvexPolygon { vertices: hull }
}

fn dedup_ring(hull: &mut Vec<Vec2>, span: f64) {
    let eps = GEOM_TOL * span.max(f64::MIN_POSITIVE);
    hull.dedup_by(|a, b| a.dist(*b) <= eps);
    while hull.len() > 1 && hull[0].dist(hull[hull.len() - 1]) <= eps {
        hull.pop();
    }
}

/// Hull of the union of several polygons.
pub fn hull_of_union(polys: &[&ConvexPolygon]) -> Result<ConvexPolygon, GeomError> {
    let mut pts: Vec<Vec2> = polys.iter().flat_map(|p| p.vertices.iter().copied()).collect();
    if pts.is_empty() {
        return Err(GeomError::EmptyPointSet);
    }
    Ok(hull_in_place(&mut pts))
}

/// Boundary length; a segment counts twice its length.
pub fn perimeter(k: &ConvexPolygon) -> f64 {
    let v = &k.vertices;
    let m = v.len();
    if m < 2 {
        return 0.0;
    }
    (0..m).map(|i| v[i].dist(v[(i + 1) % m])).sum()
}

/// Diameter by rotating calipers over antipodal vertex pairs.
pub fn diameter(k: &ConvexPolygon) -> f64 {
    let v = &k.vertices;
    let m = v.len();
    match m {
        1 => return 0.0,
        2 => return v[0].dist(v[1]),
        _ => {}
    }
    let mut best = 0.0_f64;
    let mut j = 1;
    for i in 0..m {
        let i1 = (i + 1) % m;
        let edge = v[i1] - v[i];
        // Advance while the next vertex is farther from the line through edge i.
        loop {
            let j1 = (j + 1) % m;
            if edge.cross(v[j1] - v[j]) > 0.0 {
                j = j1;
            } else {
                break;
            }
        }
        best = best.max(v[i].dist(v[j])).max(v[i1].dist(v[j]));
    }
    best
}

/// Support function `h_K(e_θ) = max_v e_θ·v`.
pub fn support_value(k: &ConvexPolygon, theta: f64) -> f64 {
    let e = Vec2::from_angle(theta);
    support_in_direction(k, e)
}

pub fn support_in_direction(k: &ConvexPolygon, e: Vec2) -> f64 {
    k.vertices.iter().map(|v| v.dot(e)).fold(f64::NEG_INFINITY, f64::max)
}

/// Perimeter as the exact integral of the support function over the circle.
pub fn cauchy_perimeter(k: &ConvexPolygon) -> f64 {
    if k.len() < 2 {
        return 0.0;
    }
    // ∫ v·e_θ over the arc between normals n1 and n2 equals
    // v_x (n2_y − n1_y) − v_y (n2_x − n1_x).
    k.vertex_arcs()
        .into_iter()
        .map(|(v, n1, n2)| v.x * (n2.y - n1.y) - v.y * (n2.x - n1.x))
        .sum()
}

/// CCW angle from `a` to `b` in (0, 2π]; equal directions give 2π.
fn ccw_angle(a: Vec2, b: Vec2) -> f64 {
    let ang = a.cross(b).atan2(a.dot(b));
    if ang <= 0.0 {
        ang + TAU
    } else {
        ang
    }
}

/// Integral of `v·e_θ` for θ in `[t0, t1]`.
#[inline]
fn arc_integral(v: Vec2, t0: f64, t1: f64) -> f64 {
    let (s0, c0) = t0.sin_cos();
    let (s1, c1) = t1.sin_cos();
    v.x * (s1 - s0) - v.y * (c1 - c0)
}

/// Semi-perimeter `∫_{H_μ} h_K(e_θ) dθ`, `H_μ = {θ : e_θ·μ < 0}`, evaluated
/// exactly arc by arc.
pub fn semi_perimeter(k: &ConvexPolygon, mu: Vec2) -> Result<f64, GeomError> {
    let mu_hat = mu.normalized().ok_or(GeomError::UndefinedDirection)?;
    // H_μ is the open arc (φ + π/2, φ + 3π/2). Work in ψ = θ − (φ + π/2) so
    // that H_μ is (0, π).
    let offset = mu_hat.angle() + FRAC_PI_2;
    if k.is_point() {
        let v = k.vertices[0];
        return Ok(arc_integral(v, offset, offset + PI));
    }
    let base = Vec2::from_angle(offset);
    let mut total = 0.0;
    for (v, n1, n2) in k.vertex_arcs() {
        let start = {
            let a = base.cross(n1).atan2(base.dot(n1));
            if a < 0.0 {
                a + TAU
            } else {
                a
            }
        };
        let len = ccw_angle(n1, n2);
        let end = start + len;
        // Arcs have length ≤ π + (ε) so they can meet (0,π) and (2π,3π).
        for (lo, hi) in [(0.0, PI), (TAU, TAU + PI)] {
            let a = start.max(lo);
            let b = end.min(hi);
            if b > a {
                total += arc_integral(v, a + offset, b + offset);
            }
        }
    }
    Ok(total)
}

/// Geometric semi-perimeter: length of the boundary arc opposite `μ` between
/// the extreme left and right support points, minus their signed heights.
pub fn semi_perimeter_geometric(k: &ConvexPolygon, mu: Vec2) -> Result<f64, GeomError> {
    let up = mu.normalized().ok_or(GeomError::UndefinedDirection)?;
    let left = up.perp();
    let v = &k.vertices;
    let m = v.len();
    let scale = k.scale().max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let pick = |dir: Vec2| -> usize {
        let best = v.iter().map(|p| p.dot(dir)).fold(f64::NEG_INFINITY, f64::max);
        (0..m)
            .filter(|&i| v[i].dot(dir) >= best - tol)
            .min_by(|&a, &b| v[a].dot(up).total_cmp(&v[b].dot(up)))
            .expect("nonempty support set")
    };
    let il = pick(left);
    let ir = pick(-left);
    let mut minorant = 0.0;
    let mut i = il;
    while i != ir {
        let nxt = (i + 1) % m;
        minorant += v[i].dist(v[nxt]);
        i = nxt;
    }
    Ok(minorant - v[il].dot(up) - v[ir].dot(up))
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Exact distance from a point to a convex polygon (zero inside).
pub fn point_distance(p: Vec2, k: &ConvexPolygon) -> f64 {
    let v = &k.vertices;
    match v.len() {
        1 => return p.dist(v[0]),
        2 => return point_segment_distance(p, v[0], v[1]),
        _ => {}
    }
    let m = v.len();
    let inside = (0..m).all(|i| orient(v[i], v[(i + 1) % m], p) >= 0.0);
    if inside {
        return 0.0;
    }
    (0..m)
        .map(|i| point_segment_distance(p, v[i], v[(i + 1) % m]))
        .fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between convex polygons. The farthest point of a
/// convex polygon from a convex set is one of its vertices.
pub fn hausdorff_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let ab = a.vertices.iter().map(|&p| point_distance(p, b)).fold(0.0, f64::max);
    let ba = b.vertices.iter().map(|&p| point_distance(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Perimeter deviation `ρ₁(A,B) = 2·perim hull(A∪B) − perim A − perim B`,
/// the L¹ distance between support functions.
pub fn perimeter_deviation(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let joint = hull_of_union(&[a, b]).expect("polygons are nonempty");
    (2.0 * perimeter(&joint) - perimeter(a) - perimeter(b)).max(0.0)
}
