// SPDX-License-Identifier: Apache-2.0

//! Drift configurations: boundary/diameter index sets, diametrical chord
//! classes, and the walk-derived sets that approximate the hull or its
//! diameter.
//!
//! Walks are relabelled `1..=N` in order of non-decreasing drift norm (stable
//! in the input order); label `0` is the origin. Every index set and chord
//! below uses these labels, and [`DriftClassification::order`] maps them back
//! to input positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom2d::{convex_hull, diameter, point_segment_distance, ConvexPolygon, Vec2};
use crate::walks::{joint_hull, WalkError};

pub const DEFAULT_DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriftError {
    #[error("need at least one drift")]
    NoDrifts,
    #[error("non-finite drift")]
    NonFinite,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("expected {expected} paths, got {got}")]
    PathCount { expected: usize, got: usize },
    #[error("the segment approximant needs exactly one walk, got {0}")]
    SegmentNeedsOneWalk(usize),
    #[error("no diametrical chords: every drift is zero")]
    NoChords,
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table1Case {
    /// Two walks, no zero drift on a diameter and a unique maximal edge.
    Gaussian,
    ZeroDrifts,
    IceCream,
    IsoscelesI,
    EqualDrifts,
    IsoscelesIi,
    Equilateral,
    ZeroInteriorGeneric,
    UniqueDiameter,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordClass {
    /// Two non-zero drifts.
    Plus,
    /// A zero-drift walk and a non-zero drift.
    Times,
    /// The origin and a non-zero drift.
    Circ,
}

/// Diametrical chord `(i, j)`, `i < j`, in sorted labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chord {
    pub i: usize,
    pub j: usize,
    pub class: ChordClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftClassification {
    /// `order[k − 1]` is the input position of the walk labelled `k`.
    pub order: Vec<usize>,
    /// `mus[0]` is the origin, `mus[k]` the drift of walk `k`.
    pub mus: Vec<Vec2>,
    pub c_mu: ConvexPolygon,
    pub diam_c_mu: f64,
    pub i_mu: Vec<usize>,
    pub i0: Vec<usize>,
    pub iface: Vec<usize>,
    pub iplus: Vec<usize>,
    pub j_mu: Vec<usize>,
    pub j0: Vec<usize>,
    pub jplus: Vec<usize>,
    pub chords_plus: Vec<(usize, usize)>,
    pub chords_times: Vec<(usize, usize)>,
    pub chords_circ: Vec<(usize, usize)>,
    pub zero_in_interior: bool,
    pub table1_case: Table1Case,
    pub tol: f64,
}

impl DriftClassification {
    pub fn walks(&self) -> usize {
        self.order.len()
    }

    /// All chords tagged with their class, `plus` first.
    pub fn chords(&self) -> Vec<Chord> {
        let tag = |v: &[(usize, usize)], class| {
            v.iter().map(move |&(i, j)| Chord { i, j, class }).collect::<Vec<_>>()
        };
        let mut out = tag(&self.chords_plus, ChordClass::Plus);
        out.extend(tag(&self.chords_circ, ChordClass::Circ));
        out.extend(tag(&self.chords_times, ChordClass::Times));
        out
    }

    /// Reorder per-walk data given in input order into label order `1..=N`.
    pub fn relabel<T: Clone>(&self, by_input: &[T]) -> Vec<T> {
        self.order.iter().map(|&p| by_input[p].clone()).collect()
    }

    fn scale_tol(&self) -> f64 {
        self.tol * self.diam_c_mu.max(f64::MIN_POSITIVE)
    }

    /// Whether `μ_k` lies on a vertex of `C_μ`.
    pub fn is_vertex(&self, k: usize) -> bool {
        let eps = self.scale_tol();
        self.c_mu.vertices().iter().any(|v| v.dist(self.mus[k]) <= eps)
    }

    /// Unit direction `μ̂_{i,j}` of `μ_i − μ_j`; for `i = 0` it is `μ̂_j`.
    pub fn chord_direction(&self, i: usize, j: usize) -> Option<Vec2> {
        if i == 0 {
            self.mus[j].normalized()
        } else {
            (self.mus[i] - self.mus[j]).normalized()
        }
    }
}

/// Classify drifts (input order) with relative tolerance `tol`.
pub fn classify_drifts(mus: &[Vec2], tol: f64) -> Result<DriftClassification, DriftError> {
    if mus.is_empty() {
        return Err(DriftError::NoDrifts);
    }
    if mus.iter().any(|m| !m.is_finite()) {
        return Err(DriftError::NonFinite);
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(DriftError::BadTolerance);
    }
    let n = mus.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mus[a].norm().total_cmp(&mus[b].norm()));
    let mut labelled = Vec::with_capacity(n + 1);
    labelled.push(Vec2::ZERO);
    labelled.extend(order.iter().map(|&p| mus[p]));

    let c_mu = convex_hull(&labelled).expect("nonempty");
    let diam = diameter(&c_mu);
    let eps = tol * diam.max(f64::MIN_POSITIVE);
    let is_zero = |k: usize| labelled[k].norm() <= eps;

    let verts = c_mu.vertices();
    let edges: Vec<(Vec2, Vec2)> = if verts.len() >= 3 {
        (0..verts.len()).map(|i| (verts[i], verts[(i + 1) % verts.len()])).collect()
    } else {
        Vec::new()
    };
    let full_dim = !edges.is_empty();
    let on_edge = |p: Vec2, e: &(Vec2, Vec2)| point_segment_distance(p, e.0, e.1) <= eps;
    let on_boundary = |p: Vec2| !full_dim || edges.iter().any(|e| on_edge(p, e));

    let i_mu: Vec<usize> = (0..=n).filter(|&k| on_boundary(labelled[k])).collect();
    let (mut i0, mut iface, mut iplus) = (Vec::new(), Vec::new(), Vec::new());
    for &k in &i_mu {
        if is_zero(k) {
            i0.push(k);
        } else if !full_dim || edges.iter().any(|e| on_edge(Vec2::ZERO, e) && on_edge(labelled[k], e)) {
            iface.push(k);
        } else {
            iplus.push(k);
        }
    }
    let zero_in_interior = !i_mu.contains(&0);

    let is_diam = |a: usize, b: usize| a != b && labelled[a].dist(labelled[b]) >= diam - eps;
    let j_mu: Vec<usize> =
        i_mu.iter().copied().filter(|&k| i_mu.iter().any(|&j| is_diam(k, j))).collect();
    let (j0, jplus): (Vec<usize>, Vec<usize>) = j_mu.iter().partition(|&&k| is_zero(k));

    let (mut chords_plus, mut chords_times, mut chords_circ) = (Vec::new(), Vec::new(), Vec::new());
    for (a, &i) in j_mu.iter().enumerate() {
        for &j in &j_mu[a + 1..] {
            if !is_diam(i, j) {
                continue;
            }
            match (i == 0, is_zero(i), is_zero(j)) {
                (_, false, false) => chords_plus.push((i, j)),
                (true, _, false) => chords_circ.push((i, j)),
                (false, true, false) => chords_times.push((i, j)),
                // Norm-sorted labels put zero drifts first, so `j` is never
                // zero unless both are.
                _ => {}
            }
        }
    }

    let mut cls = DriftClassification {
        order,
        mus: labelled,
        c_mu,
        diam_c_mu: diam,
        i_mu,
        i0,
        iface,
        iplus,
        j_mu,
        j0,
        jplus,
        chords_plus,
        chords_times,
        chords_circ,
        zero_in_interior,
        table1_case: Table1Case::General,
        tol,
    };
    cls.table1_case = table1_case(&cls);
    Ok(cls)
}

fn table1_case(cls: &DriftClassification) -> Table1Case {
    let mus = &cls.mus;
    let eps = cls.scale_tol();
    let eq = |a: f64, b: f64| (a - b).abs() <= eps;
    match cls.walks() {
        1 if mus[1].norm() <= eps => Table1Case::ZeroDrifts,
        1 => Table1Case::UniqueDiameter,
        2 => {
            let (a, b, c) = (mus[1].norm(), mus[2].norm(), mus[1].dist(mus[2]));
            if b <= eps {
                Table1Case::ZeroDrifts
            } else if a <= eps {
                Table1Case::IceCream
            } else if eq(a, b) && eq(b, c) {
                Table1Case::Equilateral
            } else if eq(a, b) && c < b {
                if c <= eps {
                    Table1Case::EqualDrifts
                } else {
                    Table1Case::IsoscelesI
                }
            } else if eq(b, c) && a < b {
                Table1Case::IsoscelesIi
            } else {
                Table1Case::Gaussian
            }
        }
        _ => {
            let distinct = cls.i_mu.iter().enumerate().all(|(x, &k)| {
                cls.i_mu[x + 1..].iter().all(|&l| mus[k].dist(mus[l]) > eps)
            });
            if cls.zero_in_interior && distinct {
                Table1Case::ZeroInteriorGeneric
            } else if cls.j_mu.len() == 2 {
                Table1Case::UniqueDiameter
            } else {
                Table1Case::General
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ApproximantKind {
    U,
    V,
    G,
    A,
    Gprime,
    #[serde(rename = "segment")]
    Segment,
}

/// Walk-derived approximating set, evaluated on path prefixes given in
/// **input** order (each slice is `S_0, …, S_n` for the same `n`).
pub fn build_approximant(
    paths: &[&[Vec2]],
    cls: &DriftClassification,
    kind: ApproximantKind,
) -> Result<ConvexPolygon, DriftError> {
    let labelled = label_paths(paths, cls)?;
    let end = |k: usize| *labelled[k - 1].last().expect("nonempty path");
    let mut pts: Vec<Vec2> = Vec::new();
    let trajectory = |pts: &mut Vec<Vec2>, k: usize| pts.extend_from_slice(labelled[k - 1]);

    match kind {
        ApproximantKind::U => {
            pts.push(Vec2::ZERO);
            pts.extend((1..=cls.walks()).map(end));
        }
        ApproximantKind::V => {
            if cls.i_mu.contains(&0) {
                pts.push(Vec2::ZERO);
            }
            pts.extend(cls.i_mu.iter().filter(|&&k| k > 0).map(|&k| end(k)));
        }
        ApproximantKind::G => {
            for &k in cls.i0.iter().chain(&cls.iface).filter(|&&k| k > 0) {
                trajectory(&mut pts, k);
            }
            pts.extend(cls.iplus.iter().map(|&k| end(k)));
        }
        ApproximantKind::Gprime => {
            if cls.i_mu.contains(&0) {
                pts.push(Vec2::ZERO);
            }
            for &k in cls.i0.iter().filter(|&&k| k > 0) {
                trajectory(&mut pts, k);
            }
            let eps = cls.scale_tol();
            for &k in &cls.iface {
                if !cls.is_vertex(k) {
                    continue;
                }
                let unique = cls
                    .iface
                    .iter()
                    .all(|&l| l == k || cls.mus[l].dist(cls.mus[k]) > eps);
                if unique {
                    pts.push(end(k));
                } else {
                    trajectory(&mut pts, k);
                }
            }
            pts.extend(cls.iplus.iter().map(|&k| end(k)));
        }
        ApproximantKind::A => {
            if cls.j_mu.contains(&0) {
                pts.push(Vec2::ZERO);
            }
            for &k in cls.j0.iter().filter(|&&k| k > 0) {
                trajectory(&mut pts, k);
            }
            pts.extend(cls.jplus.iter().map(|&k| end(k)));
        }
        ApproximantKind::Segment => {
            if cls.walks() != 1 {
                return Err(DriftError::SegmentNeedsOneWalk(cls.walks()));
            }
            pts.push(Vec2::ZERO);
            pts.push(end(1));
        }
    }
    Ok(joint_hull(&[&pts])?)
}

fn label_paths<'a>(
    paths: &[&'a [Vec2]],
    cls: &DriftClassification,
) -> Result<Vec<&'a [Vec2]>, DriftError> {
    if paths.len() != cls.walks() {
        return Err(DriftError::PathCount { expected: cls.walks(), got: paths.len() });
    }
    Ok(cls.order.iter().map(|&p| paths[p]).collect())
}

/// `Γ_μ(n, 0)`: the largest of the chord-wise distances
/// `‖S_n^{(i)} − S_n^{(j)}‖` (plus), `‖S_n^{(j)}‖` (circ) and
/// `max_k ‖S_n^{(j)} − S_k^{(i)}‖` (times). Paths in input order.
pub fn gamma_diameter(paths: &[&[Vec2]], cls: &DriftClassification) -> Result<f64, DriftError> {
    let labelled = label_paths(paths, cls)?;
    if cls.chords_plus.is_empty() && cls.chords_circ.is_empty() && cls.chords_times.is_empty() {
        return Err(DriftError::NoChords);
    }
    let end = |k: usize| *labelled[k - 1].last().expect("nonempty path");
    let mut g = 0.0f64;
    for &(i, j) in &cls.chords_plus {
        g = g.max(end(i).dist(end(j)));
    }
    for &(_, j) in &cls.chords_circ {
        g = g.max(end(j).norm());
    }
    for &(i, j) in &cls.chords_times {
        let tip = end(j);
        g = labelled[i - 1].iter().fold(g, |acc, &p| acc.max(tip.dist(p)));
    }
    Ok(g)
}
