//! Convex bodies as membership and support oracles.
//!
//! Five representations are closed under everything the tiling calculus
//! does: halfspace polytopes, the cone-spindle family, similarity images,
//! finite intersections (conjunction of oracles), and hyperplane slices in
//! chart coordinates. Each body answers three questions: where a point lies
//! relative to it (`membership`), how far it extends in a direction
//! (`support`), and how much space it fills (`volume`, by hit-or-miss
//! sampling over the support-function bounding box).
//!
//! Polytopes in dimension at most 6 carry their full vertex set, computed
//! at construction by brute force over facet subsets; support queries are
//! exact maximization over vertices. Above that, and for intersections and
//! slices, support is estimated by seeded hill climbing on the membership
//! oracle. Bounding boxes never rely on the estimate: they use per-variant
//! upper bounds that are valid by construction.
//!
//! All sampling draws from counter-indexed streams, so every estimate here
//! is a pure function of `(body, samples, seed)` regardless of thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::geom::{Halfspace, Matrix, Similarity, SliceChart, Vector, DEFAULT_TOL};
use crate::rng::SampleStream;

/// Classification of a point against a body, with a tolerance band of width
/// `tol` around the active constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExtremalEstimate {
    pub directions_sampled: usize,
    pub clusters: usize,
    pub saturated: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BodyError {
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension {0} is below this body's minimum")]
    InvalidDimension(usize),
    #[error("a polytope needs at least one halfspace")]
    NoHalfspaces,
    #[error("halfspaces admit an escape direction; the polytope is unbounded")]
    Unbounded,
    #[error("no interior point found; the body is empty or lower-dimensional")]
    EmptyInterior,
}

#[derive(Debug, Clone)]
pub struct PolytopeBody {
    halfspaces: Vec<Halfspace>,
    /// Full vertex set when `dim <= 6` and enumeration was tractable.
    vertices: Vec<Vector>,
    interior: Vector,
}

impl PolytopeBody {
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }
}

#[derive(Debug, Clone)]
pub struct IntersectionBody {
    parts: Vec<Body>,
    halfspaces: Vec<Halfspace>,
    interior: Vector,
}

impl IntersectionBody {
    pub fn parts(&self) -> &[Body] {
        &self.parts
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }
}

#[derive(Debug, Clone)]
pub struct SliceBody {
    chart: SliceChart,
    base: Box<Body>,
    interior: Vector,
}

impl SliceBody {
    pub fn chart(&self) -> &SliceChart {
        &self.chart
    }

    pub fn base(&self) -> &Body {
        &self.base
    }

    /// Strict interior point of the slice, in chart coordinates.
    pub fn interior_chart(&self) -> &Vector {
        &self.interior
    }
}

/// A bounded convex body with nonempty interior.
#[derive(Debug, Clone)]
pub enum Body {
    Polytope(PolytopeBody),
    /// `{ x : sqrt(x_0^2 + x_1^2) + sum_{j >= 2} x_j <= 1, x_j >= 0 }`,
    /// the convex hull of the unit disk in the first coordinate plane and
    /// the standard basis points of the remaining axes. For `dim == 2` the
    /// family degenerates to the unit disk; supported as an extension.
    ConeSpindle {
        dim: usize,
    },
    Image {
        map: Similarity,
        base: Box<Body>,
    },
    Intersection(IntersectionBody),
    Slice(SliceBody),
}

/// Stream tag for randomized interior searches.
const INTERIOR_SEARCH_SEED: u64 = 0x7a11_b0d7;

impl Body {
    pub fn polytope(halfspaces: Vec<Halfspace>) -> Result<Body, BodyError> {
        if halfspaces.is_empty() {
            return Err(BodyError::NoHalfspaces);
        }
        let dim = halfspaces[0].dim();
        if dim < 1 {
            return Err(BodyError::InvalidDimension(dim));
        }
        for h in &halfspaces {
            if h.dim() != dim {
                return Err(BodyError::DimensionMismatch {
                    left: dim,
                    right: h.dim(),
                });
            }
        }
        if boundedness_probe(&halfspaces, dim).is_some() {
            return Err(BodyError::Unbounded);
        }
        match build_polytope(halfspaces.clone()) {
            Some(p) => Ok(Body::Polytope(p)),
            // A feasible interior with a deficient vertex set means some
            // direction escapes, just through a cone too thin to probe.
            None => match deepest_point(&halfspaces, dim) {
                Some(_) if dim <= 6 && subset_count_tractable(halfspaces.len(), dim) => {
                    Err(BodyError::Unbounded)
                }
                _ => Err(BodyError::EmptyInterior),
            },
        }
    }

    pub fn cone_spindle(dim: usize) -> Result<Body, BodyError> {
        if dim < 2 {
            return Err(BodyError::InvalidDimension(dim));
        }
        Ok(Body::ConeSpindle { dim })
    }

    pub fn image(map: Similarity, base: Body) -> Result<Body, BodyError> {
        if map.dim() != base.dim() {
            return Err(BodyError::DimensionMismatch {
                left: map.dim(),
                right: base.dim(),
            });
        }
        Ok(Body::Image {
            map,
            base: Box::new(base),
        })
    }

    /// Intersection of `parts` (at least one) with extra halfspace cuts.
    ///
    /// All-polytope inputs flatten to a single halfspace list. Otherwise the
    /// conjunction is kept as-is and an interior point is located by probing
    /// up to `budget` points of the joint bounding box. `EmptyInterior`
    /// means the search failed; callers treat that as "drop the piece".
    pub fn intersection(
        parts: Vec<Body>,
        halfspaces: Vec<Halfspace>,
        budget: u64,
        seed: u64,
    ) -> Result<Body, BodyError> {
        if parts.is_empty() {
            return Err(BodyError::EmptyInterior);
        }
        let dim = parts[0].dim();
        for p in &parts {
            if p.dim() != dim {
                return Err(BodyError::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
        }
        for h in &halfspaces {
            if h.dim() != dim {
                return Err(BodyError::DimensionMismatch {
                    left: dim,
                    right: h.dim(),
                });
            }
        }
        // Absorb nested intersections and flatten all-polytope conjunctions.
        let mut flat_parts: Vec<Body> = Vec::new();
        let mut cuts = halfspaces;
        for p in parts {
            match p {
                Body::Intersection(ib) => {
                    flat_parts.extend(ib.parts);
                    cuts.extend(ib.halfspaces);
                }
                other => flat_parts.push(other),
            }
        }
        if flat_parts.iter().all(|p| matches!(p, Body::Polytope(_))) {
            let mut hs: Vec<Halfspace> = Vec::new();
            for p in &flat_parts {
                if let Body::Polytope(pb) = p {
                    hs.extend(pb.halfspaces.iter().cloned());
                }
            }
            hs.extend(cuts);
            return match build_polytope(hs) {
                Some(p) => Ok(Body::Polytope(p)),
                None => Err(BodyError::EmptyInterior),
            };
        }

        let interior = find_conjunction_interior(&flat_parts, &cuts, budget, seed)
            .ok_or(BodyError::EmptyInterior)?;
        Ok(Body::Intersection(IntersectionBody {
            parts: flat_parts,
            halfspaces: cuts,
            interior,
        }))
    }

    pub(crate) fn slice_body(
        chart: SliceChart,
        base: Body,
        interior_chart: Vector,
    ) -> Result<Body, BodyError> {
        if chart.ambient_dim() != base.dim() {
            return Err(BodyError::DimensionMismatch {
                left: chart.ambient_dim(),
                right: base.dim(),
            });
        }
        if interior_chart.len() != chart.chart_dim() {
            return Err(BodyError::DimensionMismatch {
                left: interior_chart.len(),
                right: chart.chart_dim(),
            });
        }
        Ok(Body::Slice(SliceBody {
            chart,
            base: Box::new(base),
            interior: interior_chart,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(p) => p.interior.len(),
            Body::ConeSpindle { dim } => *dim,
            Body::Image { map, .. } => map.dim(),
            Body::Intersection(i) => i.interior.len(),
            Body::Slice(s) => s.chart.chart_dim(),
        }
    }

    /// A cached or analytic strict interior point.
    pub fn interior_point(&self) -> Vector {
        match self {
            Body::Polytope(p) => p.interior.clone(),
            Body::ConeSpindle { dim } => {
                let mut x = Vector::zeros(*dim);
                if *dim > 2 {
                    let t = 0.5 / (*dim as f64 - 2.0);
                    for j in 2..*dim {
                        x[j] = t;
                    }
                }
                x
            }
            Body::Image { map, base } => map.apply(&base.interior_point()),
            Body::Intersection(i) => i.interior.clone(),
            Body::Slice(s) => s.interior.clone(),
        }
    }

    pub fn membership(&self, x: &Vector, tol: f64) -> Membership {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Body::Polytope(p) => {
                let mut worst = Membership::Inside;
                for h in &p.halfspaces {
                    match classify_slack(h.slack(x), tol) {
                        Membership::Outside => return Membership::Outside,
                        Membership::Boundary => worst = Membership::Boundary,
                        Membership::Inside => {}
                    }
                }
                worst
            }
            Body::ConeSpindle { dim } => cone_spindle_membership(*dim, x, tol),
            Body::Image { map, base } => base.membership(&map.apply_inverse(x), tol),
            Body::Intersection(i) => {
                let mut worst = Membership::Inside;
                for part in &i.parts {
                    match part.membership(x, tol) {
                        Membership::Outside => return Membership::Outside,
                        Membership::Boundary => worst = Membership::Boundary,
                        Membership::Inside => {}
                    }
                }
                for h in &i.halfspaces {
                    match classify_slack(h.slack(x), tol) {
                        Membership::Outside => return Membership::Outside,
                        Membership::Boundary => worst = Membership::Boundary,
                        Membership::Inside => {}
                    }
                }
                worst
            }
            Body::Slice(s) => s.base.membership(&s.chart.from_chart(x), tol),
        }
    }

    /// Maximum of `d . x` over the body, with a witness point attaining it.
    ///
    /// Exact for polytopes with enumerated vertices, cone spindles, and
    /// similarity images of those; a seeded hill-climbing estimate for
    /// intersections, slices, and polytopes above dimension 6.
    pub fn support(&self, d: &Vector) -> (f64, Vector) {
        debug_assert_eq!(d.len(), self.dim());
        match self {
            Body::Polytope(p) if !p.vertices.is_empty() => {
                let mut best = 0usize;
                let mut bestv = f64::NEG_INFINITY;
                for (i, v) in p.vertices.iter().enumerate() {
                    let val = d.dot(v);
                    if val > bestv {
                        bestv = val;
                        best = i;
                    }
                }
                (bestv, p.vertices[best].clone())
            }
            Body::Polytope(p) => {
                let (mut value, mut witness) = polytope_ascent(&p.halfspaces, &p.interior, d);
                if let Some((v, w)) = active_set_polish(&p.halfspaces, &witness, d) {
                    if v >= value - 1e-9 * (1.0 + value.abs()) {
                        value = v;
                        witness = w;
                    }
                }
                (value, witness)
            }
            Body::ConeSpindle { dim } => cone_spindle_support(*dim, d),
            Body::Image { map, base } => {
                let inner_d = map.rotation().tr_mul(d);
                let (v, w) = base.support(&inner_d);
                (map.scale() * v + d.dot(map.translation()), map.apply(&w))
            }
            _ => self.oracle_support(d),
        }
    }

    /// Hill climb on the membership oracle: walk the boundary through rays
    /// from an interior anchor, locally maximizing `d . x`.
    fn oracle_support(&self, d: &Vector) -> (f64, Vector) {
        let anchor = self.interior_point();
        let dim = self.dim();
        let mut dir = d.normalize();
        let mut best = self.boundary_along(&anchor, &dir);
        let mut bestv = d.dot(&best);
        let mut stream = SampleStream::at(0x05ad_d1e5, 0);
        let mut step = 0.5;
        for _ in 0..240 {
            let jitter = stream.unit_direction(dim);
            let cand_dir = (&dir + jitter * step).normalize();
            let cand = self.boundary_along(&anchor, &cand_dir);
            let v = d.dot(&cand);
            if v > bestv {
                bestv = v;
                best = cand;
                dir = cand_dir;
                step = (step * 1.25).min(1.0);
            } else {
                step *= 0.82;
                if step < 1e-10 {
                    break;
                }
            }
        }
        (bestv, best)
    }

    /// Last point of the body along `from + t * dir`, `t >= 0`, by bisection.
    pub(crate) fn boundary_along(&self, from: &Vector, dir: &Vector) -> Vector {
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut doublings = 0;
        while self.membership(&(from + dir * hi), DEFAULT_TOL) != Membership::Outside {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                break;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.membership(&(from + dir * mid), DEFAULT_TOL) == Membership::Outside {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        from + dir * lo
    }

    /// Valid per-direction upper bound on the support function. Used for
    /// bounding boxes, where overestimates are safe and underestimates are
    /// not.
    pub(crate) fn support_upper_bound(&self, d: &Vector) -> f64 {
        match self {
            Body::Polytope(p) if !p.vertices.is_empty() => p
                .vertices
                .iter()
                .map(|v| d.dot(v))
                .fold(f64::NEG_INFINITY, f64::max),
            Body::Polytope(_) => {
                let c = self.interior_point();
                let r = self.probe_radius_about(&c);
                d.dot(&c) + r * d.norm()
            }
            Body::ConeSpindle { dim } => cone_spindle_support(*dim, d).0,
            Body::Image { map, base } => {
                let inner_d = map.rotation().tr_mul(d);
                map.scale() * base.support_upper_bound(&inner_d) + d.dot(map.translation())
            }
            Body::Intersection(i) => i
                .parts
                .iter()
                .map(|p| p.support_upper_bound(d))
                .fold(f64::INFINITY, f64::min),
            Body::Slice(s) => {
                let ambient_d = s.chart.frame() * d;
                s.base.support_upper_bound(&ambient_d) - ambient_d.dot(s.chart.origin())
            }
        }
    }

    /// Axis-aligned box containing the body.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        let dim = self.dim();
        let mut lo = Vector::zeros(dim);
        let mut hi = Vector::zeros(dim);
        let mut e = Vector::zeros(dim);
        for j in 0..dim {
            e[j] = 1.0;
            hi[j] = self.support_upper_bound(&e);
            e[j] = -1.0;
            lo[j] = -self.support_upper_bound(&e);
            e[j] = 0.0;
        }
        (lo, hi)
    }

    /// Radius of a ball about `center` containing the body.
    ///
    /// Exact for vertex polytopes, cone spindles, and their similarity
    /// images; an upper bound elsewhere.
    pub fn bounding_radius_about(&self, center: &Vector) -> f64 {
        debug_assert_eq!(center.len(), self.dim());
        match self {
            Body::Polytope(p) if !p.vertices.is_empty() => p
                .vertices
                .iter()
                .map(|v| (v - center).norm())
                .fold(0.0, f64::max),
            Body::Polytope(_) => self.probe_radius_about(center),
            Body::ConeSpindle { dim } => {
                let c12 = (center[0] * center[0] + center[1] * center[1]).sqrt();
                let mut rest2 = 0.0;
                for j in 2..*dim {
                    rest2 += center[j] * center[j];
                }
                let mut best = (1.0 + c12) * (1.0 + c12) + rest2;
                for j in 2..*dim {
                    let mut d2 = 0.0;
                    for k in 0..*dim {
                        let delta = if k == j { 1.0 - center[k] } else { -center[k] };
                        d2 += delta * delta;
                    }
                    best = best.max(d2);
                }
                best.sqrt()
            }
            Body::Image { map, base } => {
                map.scale() * base.bounding_radius_about(&map.apply_inverse(center))
            }
            Body::Intersection(i) => i
                .parts
                .iter()
                .map(|p| p.bounding_radius_about(center))
                .fold(f64::INFINITY, f64::min),
            Body::Slice(s) => s.base.bounding_radius_about(&s.chart.from_chart(center)),
        }
    }

    /// Boundary-probe radius estimate for bodies without exact extremal
    /// structure; inflated a little so it still functions as a cover.
    fn probe_radius_about(&self, center: &Vector) -> f64 {
        let anchor = self.interior_point();
        let dim = self.dim();
        let count = 128 * dim as u64;
        let best = (0..count)
            .map(|i| {
                let mut s = SampleStream::at(0xad1_5eed, i);
                let dir = s.unit_direction(dim);
                (self.boundary_along(&anchor, &dir) - center).norm()
            })
            .fold(0.0, f64::max);
        best * 1.02 + DEFAULT_TOL
    }

    /// Hit-or-miss Monte Carlo volume over the bounding box. Deterministic
    /// in `(samples, seed)`, bitwise identical across thread counts.
    pub fn volume(&self, samples: u64, seed: u64) -> VolumeEstimate {
        assert!(samples > 0, "need at least one sample");
        let (lo, hi) = self.bounding_box();
        let mut box_volume = 1.0;
        for j in 0..self.dim() {
            box_volume *= (hi[j] - lo[j]).max(0.0);
        }
        if box_volume == 0.0 {
            return VolumeEstimate {
                value: 0.0,
                std_error: 0.0,
                samples,
            };
        }
        let hits: u64 = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut s = SampleStream::at(seed, i);
                let x = s.point_in_box(&lo, &hi);
                match self.membership(&x, DEFAULT_TOL) {
                    Membership::Outside => 0u64,
                    _ => 1u64,
                }
            })
            .sum();
        let p = hits as f64 / samples as f64;
        VolumeEstimate {
            value: box_volume * p,
            std_error: box_volume * (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }

    /// Estimate the extremal points by clustering support witnesses of `m`
    /// seeded unit directions. `saturated` reports whether doubling the
    /// direction count left the cluster count within 5 percent: true for
    /// polytopes once every vertex has been seen, false for bodies with
    /// curved boundary, where witnesses keep spreading.
    pub fn estimate_extremal_points(&self, m: usize, delta: f64, seed: u64) -> ExtremalEstimate {
        let dim = self.dim();
        assert!(m > dim, "need at least dim + 1 directions");
        assert!(delta > 0.0, "cluster radius must be positive");
        let witnesses: Vec<Vector> = (0..2 * m as u64)
            .into_par_iter()
            .map(|i| {
                let mut s = SampleStream::at(seed, i);
                let d = s.unit_direction(dim);
                self.support(&d).1
            })
            .collect();
        let clusters = cluster_count(&witnesses[..m], delta);
        let doubled = cluster_count(&witnesses, delta);
        let change = (doubled as f64 - clusters as f64).abs();
        ExtremalEstimate {
            directions_sampled: m,
            clusters,
            saturated: change < 0.05 * clusters.max(1) as f64,
        }
    }
}

fn classify_slack(slack: f64, tol: f64) -> Membership {
    if slack < -tol {
        Membership::Outside
    } else if slack > tol {
        Membership::Inside
    } else {
        Membership::Boundary
    }
}

fn cone_spindle_membership(dim: usize, x: &Vector, tol: f64) -> Membership {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let mut sum = 0.0;
    for j in 2..dim {
        sum += x[j];
    }
    let mut worst = classify_slack(1.0 - (r + sum), tol);
    if worst == Membership::Outside {
        return worst;
    }
    for j in 2..dim {
        match classify_slack(x[j], tol) {
            Membership::Outside => return Membership::Outside,
            Membership::Boundary => worst = Membership::Boundary,
            Membership::Inside => {}
        }
    }
    worst
}

fn cone_spindle_support(dim: usize, d: &Vector) -> (f64, Vector) {
    let rd = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let mut best_j = None;
    let mut best = rd;
    for j in 2..dim {
        if d[j] > best {
            best = d[j];
            best_j = Some(j);
        }
    }
    let mut w = Vector::zeros(dim);
    match best_j {
        Some(j) => w[j] = 1.0,
        None => {
            if rd > 1e-300 {
                w[0] = d[0] / rd;
                w[1] = d[1] / rd;
            } else {
                w[0] = 1.0;
            }
        }
    }
    (best, w)
}

/// Gradient-projection ascent for `max d . x` over a halfspace polytope:
/// project the objective onto the current active face, walk to the first
/// blocking facet, repeat. The objective increases strictly at every step,
/// so on a bounded polytope this terminates at a face whose normal cone
/// contains `d`.
fn polytope_ascent(halfspaces: &[Halfspace], interior: &Vector, d: &Vector) -> (f64, Vector) {
    let dim = interior.len();
    let mut x = interior.clone();
    for _ in 0..64 + 4 * halfspaces.len() {
        let scale = 1.0 + x.norm();
        let active: Vec<usize> = (0..halfspaces.len())
            .filter(|&i| halfspaces[i].slack(&x) < 1e-9 * scale)
            .collect();
        let dir = if active.is_empty() {
            d.clone()
        } else {
            let mut a = Matrix::zeros(active.len(), dim);
            for (row, &i) in active.iter().enumerate() {
                for col in 0..dim {
                    a[(row, col)] = halfspaces[i].normal()[col];
                }
            }
            match a.clone().pseudo_inverse(1e-12) {
                Ok(pinv) => d - pinv * (a * d),
                Err(_) => break,
            }
        };
        if dir.norm() < 1e-11 * d.norm() {
            break;
        }
        let mut tmax = f64::INFINITY;
        for (i, h) in halfspaces.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let speed = h.normal().dot(&dir);
            if speed > 1e-14 {
                tmax = tmax.min(h.slack(&x) / speed);
            }
        }
        if !tmax.is_finite() || tmax <= 0.0 {
            break;
        }
        x += dir * tmax;
    }
    (d.dot(&x), x)
}

/// Least-squares solve on the active facets at an approximate optimum;
/// recovers exact polytope support points when the climb lands near a
/// vertex.
fn active_set_polish(halfspaces: &[Halfspace], near: &Vector, d: &Vector) -> Option<(f64, Vector)> {
    let dim = near.len();
    let scale = 1.0 + near.norm();
    let active: Vec<&Halfspace> = halfspaces
        .iter()
        .filter(|h| h.slack(near).abs() < 1e-5 * scale)
        .collect();
    if active.len() < dim {
        return None;
    }
    let mut a = Matrix::zeros(active.len(), dim);
    let mut b = Vector::zeros(active.len());
    for (i, h) in active.iter().enumerate() {
        for j in 0..dim {
            a[(i, j)] = h.normal()[j];
        }
        b[i] = h.offset();
    }
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-10).ok()?;
    let feasible = halfspaces.iter().all(|h| h.slack(&x) >= -1e-7 * scale);
    if feasible {
        Some((d.dot(&x), x))
    } else {
        None
    }
}

/// Find a direction along which every halfspace is slack; evidence of
/// unboundedness. Probabilistic probe with a fixed internal seed.
fn boundedness_probe(halfspaces: &[Halfspace], dim: usize) -> Option<Vector> {
    let count = 384 * dim as u64;
    for i in 0..count {
        let mut s = SampleStream::at(0xb0b_5eed, i);
        let d = s.unit_direction(dim);
        if halfspaces.iter().all(|h| h.normal().dot(&d) <= 1e-9) {
            return Some(d);
        }
    }
    None
}

fn build_polytope(halfspaces: Vec<Halfspace>) -> Option<PolytopeBody> {
    let dim = halfspaces[0].dim();
    if dim <= 6 && subset_count_tractable(halfspaces.len(), dim) {
        let vertices = enumerate_vertices(&halfspaces, dim);
        if vertices.len() < dim + 1 {
            return None;
        }
        let mut centroid = Vector::zeros(dim);
        for v in &vertices {
            centroid += v;
        }
        centroid /= vertices.len() as f64;
        let min_slack = halfspaces
            .iter()
            .map(|h| h.slack(&centroid))
            .fold(f64::INFINITY, f64::min);
        if min_slack <= 1e-12 * (1.0 + centroid.norm()) {
            return None;
        }
        Some(PolytopeBody {
            halfspaces,
            vertices,
            interior: centroid,
        })
    } else {
        let interior = deepest_point(&halfspaces, dim)?;
        Some(PolytopeBody {
            halfspaces,
            vertices: Vec::new(),
            interior,
        })
    }
}

fn subset_count_tractable(m: usize, dim: usize) -> bool {
    let mut count: u128 = 1;
    for i in 0..dim {
        count = count * (m.saturating_sub(i)) as u128 / (i as u128 + 1);
        if count > 2_000_000 {
            return false;
        }
    }
    true
}

/// All feasible intersection points of `dim`-subsets of facet hyperplanes.
fn enumerate_vertices(halfspaces: &[Halfspace], dim: usize) -> Vec<Vector> {
    let m = halfspaces.len();
    if m < dim {
        return Vec::new();
    }
    let mut vertices: Vec<Vector> = Vec::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        let mut a = Matrix::zeros(dim, dim);
        let mut b = Vector::zeros(dim);
        for (row, &i) in subset.iter().enumerate() {
            for col in 0..dim {
                a[(row, col)] = halfspaces[i].normal()[col];
            }
            b[row] = halfspaces[i].offset();
        }
        if let Some(x) = a.clone().lu().solve(&b) {
            let residual = (&a * &x - &b).norm();
            if residual <= 1e-8 * (1.0 + x.norm()) {
                let scale = 1.0 + x.norm();
                let feasible = halfspaces.iter().all(|h| h.slack(&x) >= -1e-9 * scale);
                if feasible && !vertices.iter().any(|v| (v - &x).norm() < 1e-9 * scale) {
                    vertices.push(x);
                }
            }
        }
        // Next lexicographic subset.
        let mut i = dim;
        loop {
            if i == 0 {
                return vertices;
            }
            i -= 1;
            if subset[i] != i + m - dim {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..dim {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Feasible point by alternating projections, then pushed toward the
/// incenter by hill climbing on the minimum slack.
fn deepest_point(halfspaces: &[Halfspace], dim: usize) -> Option<Vector> {
    let mut x = Vector::zeros(dim);
    for _ in 0..4000 {
        let (worst, slack) = worst_slack(halfspaces, &x);
        if slack > 0.0 {
            break;
        }
        x += halfspaces[worst].normal() * slack.min(-1e-12);
    }
    let (_, mut slack) = worst_slack(halfspaces, &x);
    if slack <= 0.0 {
        return None;
    }
    let mut step = 1.0;
    for _ in 0..400 {
        let (worst, _) = worst_slack(halfspaces, &x);
        let cand = &x - halfspaces[worst].normal() * step;
        let (_, cand_slack) = worst_slack(halfspaces, &cand);
        if cand_slack > slack {
            x = cand;
            slack = cand_slack;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    if slack > 1e-12 * (1.0 + x.norm()) {
        Some(x)
    } else {
        None
    }
}

fn worst_slack(halfspaces: &[Halfspace], x: &Vector) -> (usize, f64) {
    let mut worst = 0;
    let mut min = f64::INFINITY;
    for (i, h) in halfspaces.iter().enumerate() {
        let s = h.slack(x);
        if s < min {
            min = s;
            worst = i;
        }
    }
    (worst, min)
}

fn find_conjunction_interior(
    parts: &[Body],
    cuts: &[Halfspace],
    budget: u64,
    seed: u64,
) -> Option<Vector> {
    let strictly_inside = |x: &Vector| {
        parts
            .iter()
            .all(|p| p.membership(x, DEFAULT_TOL) == Membership::Inside)
            && cuts.iter().all(|h| h.slack(x) > DEFAULT_TOL)
    };
    for p in parts {
        let c = p.interior_point();
        if strictly_inside(&c) {
            return Some(c);
        }
    }
    let dim = parts[0].dim();
    let mut lo = Vector::from_element(dim, f64::NEG_INFINITY);
    let mut hi = Vector::from_element(dim, f64::INFINITY);
    for p in parts {
        let (plo, phi) = p.bounding_box();
        for j in 0..dim {
            lo[j] = lo[j].max(plo[j]);
            hi[j] = hi[j].min(phi[j]);
        }
    }
    if (0..dim).any(|j| lo[j] >= hi[j]) {
        return None;
    }
    for i in 0..budget {
        let mut s = SampleStream::at(derive_probe_seed(seed), i);
        let x = s.point_in_box(&lo, &hi);
        if strictly_inside(&x) {
            return Some(x);
        }
    }
    None
}

fn derive_probe_seed(seed: u64) -> u64 {
    crate::rng::derive_seed(seed, INTERIOR_SEARCH_SEED)
}

fn point_distance(a: &Vector, b: &Vector) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        sum += d * d;
    }
    sum.sqrt()
}

fn nearest_alive(clusters: &[(Vector, f64)], alive: &[bool], i: usize) -> (f64, usize) {
    let mut best = (f64::INFINITY, usize::MAX);
    for j in 0..clusters.len() {
        if j == i || !alive[j] {
            continue;
        }
        let d = point_distance(&clusters[i].0, &clusters[j].0);
        if d < best.0 {
            best = (d, j);
        }
    }
    best
}

/// Greedy pre-aggregation followed by centroid-linkage merging at radius
/// `delta`. The merge loop always takes the closest surviving pair; a
/// per-cluster nearest-neighbor cache keeps that from rescanning every
/// pair after each merge.
fn cluster_count(points: &[Vector], delta: f64) -> usize {
    let mut clusters: Vec<(Vector, f64)> = Vec::new();
    for p in points {
        match clusters
            .iter_mut()
            .find(|(c, _)| point_distance(c, p) < 0.25 * delta)
        {
            Some((c, w)) => {
                *c = (&*c * *w + p) / (*w + 1.0);
                *w += 1.0;
            }
            None => clusters.push((p.clone(), 1.0)),
        }
    }
    let k = clusters.len();
    if k < 2 {
        return k;
    }
    let mut alive = vec![true; k];
    let mut nn: Vec<(f64, usize)> = (0..k)
        .map(|i| nearest_alive(&clusters, &alive, i))
        .collect();
    let mut remaining = k;
    loop {
        let mut bi = usize::MAX;
        let mut bd = f64::INFINITY;
        for i in 0..k {
            if alive[i] && nn[i].0 < bd {
                bd = nn[i].0;
                bi = i;
            }
        }
        if bd >= delta {
            return remaining;
        }
        let j = nn[bi].1;
        let (cj, wj) = (clusters[j].0.clone(), clusters[j].1);
        let (ci, wi) = &mut clusters[bi];
        *ci = (&*ci * *wi + cj * wj) / (*wi + wj);
        *wi += wj;
        alive[j] = false;
        remaining -= 1;
        if remaining < 2 {
            return remaining;
        }
        // The merged centroid moved, so entries pointing at either old
        // cluster are stale; everything else can only gain the merged
        // cluster as a closer neighbor.
        nn[bi] = nearest_alive(&clusters, &alive, bi);
        for l in 0..k {
            if !alive[l] || l == bi {
                continue;
            }
            if nn[l].1 == bi || nn[l].1 == j {
                nn[l] = nearest_alive(&clusters, &alive, l);
            } else {
                let d = point_distance(&clusters[l].0, &clusters[bi].0);
                if d < nn[l].0 {
                    nn[l] = (d, bi);
                }
            }
        }
    }
}
