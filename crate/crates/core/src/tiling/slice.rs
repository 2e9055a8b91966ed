//! Cutting a tiling by a hyperplane.
//!
//! The cut produces a chart for the hyperplane plus a tiling of the sliced
//! ambient in chart coordinates. Polytope tiles are sliced exactly by
//! rewriting their halfspaces in the chart; other tiles become slice bodies
//! that answer membership through the chart. A tile tagged by a contracting
//! homothety whose fixed point lies on the plane keeps a tag: the homothety
//! restricts to a chart homothety of the same scale.

use crate::body::{Body, BodyError, Membership};
use crate::geom::{Halfspace, Hyperplane, Similarity, SliceChart, Vector};
use crate::rng::{derive_seed, SampleStream};
use crate::tiling::{Tile, Tiling, TilingError};

const SLICE_STREAM: u64 = 0x51;
const GRAZE_TOL: f64 = 1e-7;
const FIXED_ON_PLANE_TOL: f64 = 1e-8;
const PARALLEL_TOL: f64 = 1e-10;
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Closest sampled strictly-positive and strictly-negative points.
#[derive(Clone, Default)]
struct SideReps {
    pos: Option<(f64, Vector)>,
    neg: Option<(f64, Vector)>,
}

impl SideReps {
    fn note(&mut self, sd: f64, p: &Vector) {
        if sd > GRAZE_TOL {
            if self.pos.as_ref().is_none_or(|(s, _)| sd < *s) {
                self.pos = Some((sd, p.clone()));
            }
        } else if sd < -GRAZE_TOL && self.neg.as_ref().is_none_or(|(s, _)| sd > *s) {
            self.neg = Some((sd, p.clone()));
        }
    }

    fn pair(&self) -> Option<(Vector, Vector)> {
        match (&self.pos, &self.neg) {
            (Some((_, p)), Some((_, q))) => Some((p.clone(), q.clone())),
            _ => None,
        }
    }
}

/// Slices `tiling` by `hyperplane`, returning the chart and the tiling of
/// the cut in chart coordinates.
///
/// `EmptySlice` means the plane misses the ambient interior entirely;
/// `DegenerateSlice` means it only touches the boundary (both decided from
/// support values). Tiles whose interior the plane misses are dropped.
pub fn slice_tiling(
    tiling: &Tiling,
    hyperplane: &Hyperplane,
    samples: u64,
    seed: u64,
) -> Result<(SliceChart, Tiling), TilingError> {
    if hyperplane.dim() != tiling.dim() {
        return Err(TilingError::DimensionMismatch {
            left: hyperplane.dim(),
            right: tiling.dim(),
        });
    }
    if tiling.dim() < 2 {
        return Err(TilingError::DimensionMismatch {
            left: tiling.dim(),
            right: 2,
        });
    }
    let ambient = tiling.ambient();
    let (above, below) = support_margins(ambient, hyperplane);
    if above < -GRAZE_TOL || below < -GRAZE_TOL {
        return Err(TilingError::EmptySlice);
    }
    if above <= GRAZE_TOL || below <= GRAZE_TOL {
        return Err(TilingError::DegenerateSlice);
    }

    let mut ambient_reps = SideReps::default();
    let mut tile_reps = vec![SideReps::default(); tiling.tiles().len()];
    if samples > 0 {
        let (lo, hi) = ambient.bounding_box();
        let stream_seed = derive_seed(seed, SLICE_STREAM);
        for i in 0..samples {
            let mut s = SampleStream::at(stream_seed, i);
            let p = s.point_in_box(&lo, &hi);
            if ambient.membership(&p, MEMBERSHIP_TOL) != Membership::Inside {
                continue;
            }
            let sd = hyperplane.signed_distance(&p);
            ambient_reps.note(sd, &p);
            for (t, tile) in tiling.tiles().iter().enumerate() {
                if tile.body.membership(&p, MEMBERSHIP_TOL) == Membership::Inside {
                    tile_reps[t].note(sd, &p);
                }
            }
        }
    }

    let (ppos, pneg) = ambient_reps
        .pair()
        .or_else(|| support_reps(ambient, hyperplane))
        .ok_or(TilingError::EmptySlice)?;
    let origin = plane_crossing(hyperplane, &ppos, &pneg);
    let chart = SliceChart::new(hyperplane.clone(), &origin)?;
    let ambient_slice = slice_of_body(ambient, &chart, Some(Vector::zeros(chart.chart_dim())))?
        .ok_or(TilingError::EmptySlice)?;

    let mut tiles = Vec::new();
    for (t, tile) in tiling.tiles().iter().enumerate() {
        if let Some(chart_tag) = restricted_tag(tile, hyperplane, &chart)? {
            tiles.push(Tile::tagged(
                Body::image(chart_tag.clone(), ambient_slice.clone())?,
                chart_tag,
            ));
            continue;
        }
        let interior = tile_reps[t]
            .pair()
            .or_else(|| support_reps(&tile.body, hyperplane))
            .map(|(p, q)| chart.to_chart(&plane_crossing(hyperplane, &p, &q)));
        if let Some(body) = slice_of_body(&tile.body, &chart, interior)? {
            tiles.push(Tile::plain(body));
        }
    }
    if tiles.is_empty() {
        return Err(TilingError::EmptySlice);
    }
    let out = Tiling::new(ambient_slice, tiles)?;
    Ok((chart, out))
}

/// Chart homothety carried over from a tile tag that restricts to the plane.
fn restricted_tag(
    tile: &Tile,
    hyperplane: &Hyperplane,
    chart: &SliceChart,
) -> Result<Option<Similarity>, TilingError> {
    let Some(tag) = tile.similarity_to_ambient.as_ref() else {
        return Ok(None);
    };
    if !tag.is_homothety() {
        return Ok(None);
    }
    let Ok(fixed) = tag.fixed_point() else {
        return Ok(None);
    };
    if hyperplane.signed_distance(&fixed).abs() > FIXED_ON_PLANE_TOL {
        return Ok(None);
    }
    let center = chart.to_chart(&fixed);
    Ok(Some(Similarity::homothety(tag.scale(), &center)?))
}

/// Distances from the plane to the body's support values along the normal:
/// positive on both sides means the plane properly crosses the interior.
fn support_margins(body: &Body, plane: &Hyperplane) -> (f64, f64) {
    let (top, _) = body.support(plane.normal());
    let minus = -plane.normal();
    let (bottom_neg, _) = body.support(&minus);
    (top - plane.offset(), plane.offset() + bottom_neg)
}

/// Strictly interior points on both sides of the plane, built from the
/// interior point and the support witnesses. `None` when either margin is
/// too thin to certify a crossing.
fn support_reps(body: &Body, plane: &Hyperplane) -> Option<(Vector, Vector)> {
    let (_, top_witness) = body.support(plane.normal());
    let minus = -plane.normal();
    let (_, bottom_witness) = body.support(&minus);
    let s_plus = plane.signed_distance(&top_witness);
    let s_minus = plane.signed_distance(&bottom_witness);
    if s_plus <= 2.0 * GRAZE_TOL || -s_minus <= 2.0 * GRAZE_TOL {
        return None;
    }
    let c = body.interior_point();
    let sd_c = plane.signed_distance(&c);
    let pos = if sd_c > GRAZE_TOL {
        c.clone()
    } else {
        // signed distance is affine along the segment, so this lands at
        // s_plus / 2 while staying strictly interior
        let tau = (0.5 * s_plus - sd_c) / (s_plus - sd_c);
        &c + (&top_witness - &c) * tau
    };
    let neg = if sd_c < -GRAZE_TOL {
        c.clone()
    } else {
        let tau = (0.5 * s_minus - sd_c) / (s_minus - sd_c);
        &c + (&bottom_witness - &c) * tau
    };
    Some((pos, neg))
}

/// Exact crossing of the segment between a positive-side and a
/// negative-side point; signed distance is affine along the segment.
fn plane_crossing(plane: &Hyperplane, pos: &Vector, neg: &Vector) -> Vector {
    let dp = plane.signed_distance(pos);
    let dn = plane.signed_distance(neg);
    let t = dp / (dp - dn);
    pos + (neg - pos) * t
}

/// Slice of one body in chart coordinates. Polytopes slice exactly; other
/// bodies need a certified relative-interior point and wrap the chart.
/// `Ok(None)` means the slice has no interior and the piece is dropped.
fn slice_of_body(
    body: &Body,
    chart: &SliceChart,
    interior_chart: Option<Vector>,
) -> Result<Option<Body>, TilingError> {
    match body {
        Body::Polytope(p) => {
            let Some(halfspaces) = chart_halfspaces(p.halfspaces(), chart)? else {
                return Ok(None);
            };
            match Body::polytope(halfspaces) {
                Ok(b) => Ok(Some(b)),
                Err(BodyError::EmptyInterior) => Ok(None),
                Err(e) => Err(e.into()),
            }
        }
        other => match interior_chart {
            Some(u) => Ok(Some(Body::slice_body(chart.clone(), other.clone(), u)?)),
            None => Ok(None),
        },
    }
}

/// Rewrites halfspaces `n . x <= c` as chart constraints on `origin + F u`.
/// Constraints parallel to the plane either hold everywhere on it or rule
/// the whole slice out (`None`).
fn chart_halfspaces(
    halfspaces: &[Halfspace],
    chart: &SliceChart,
) -> Result<Option<Vec<Halfspace>>, TilingError> {
    let mut out = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        let n = chart.frame().tr_mul(h.normal());
        let c = h.offset() - h.normal().dot(chart.origin());
        if n.norm() < PARALLEL_TOL {
            if c >= -MEMBERSHIP_TOL {
                continue;
            }
            return Ok(None);
        }
        out.push(Halfspace::new(n, c)?);
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cone_spindle_tiling, quarter_square_tiling, Corner};
    use crate::geom::vector;

    #[test]
    fn vertical_line_cuts_two_quarters_exactly() {
        let t = quarter_square_tiling(Corner::BottomLeft).unwrap();
        let plane = Hyperplane::new(vector(&[1.0, 0.0]), 0.25).unwrap();
        let (chart, cut) = slice_tiling(&t, &plane, 4096, 0).unwrap();
        assert_eq!(cut.tiles().len(), 2);
        assert!(cut
            .tiles()
            .iter()
            .all(|tile| tile.similarity_to_ambient.is_none()));
        let probe = chart.to_chart(&vector(&[0.25, 0.3]));
        assert_eq!(cut.ambient().membership(&probe, 1e-9), Membership::Inside);
        let outside = chart.to_chart(&vector(&[0.25, 1.7]));
        assert_eq!(
            cut.ambient().membership(&outside, 1e-9),
            Membership::Outside
        );
    }

    #[test]
    fn diagonal_through_tagged_corner_keeps_a_chart_tag() {
        let t = quarter_square_tiling(Corner::BottomLeft).unwrap();
        let plane = Hyperplane::new(vector(&[1.0, -1.0]), 0.0).unwrap();
        let (chart, cut) = slice_tiling(&t, &plane, 4096, 0).unwrap();
        let tagged: Vec<_> = cut
            .tiles()
            .iter()
            .filter_map(|tile| tile.similarity_to_ambient.clone())
            .collect();
        assert_eq!(tagged.len(), 1);
        assert!((tagged[0].scale() - 0.5).abs() < 1e-12);
        let fixed = tagged[0].fixed_point().unwrap();
        assert!((fixed - chart.to_chart(&vector(&[0.0, 0.0]))).norm() < 1e-9);
    }

    #[test]
    fn planes_outside_or_tangent_are_classified_by_support() {
        let t = quarter_square_tiling(Corner::BottomLeft).unwrap();
        let far = Hyperplane::new(vector(&[1.0, 0.0]), 2.0).unwrap();
        assert!(matches!(
            slice_tiling(&t, &far, 512, 0).unwrap_err(),
            TilingError::EmptySlice
        ));
        let tangent = Hyperplane::new(vector(&[1.0, 0.0]), 1.0).unwrap();
        assert!(matches!(
            slice_tiling(&t, &tangent, 512, 0).unwrap_err(),
            TilingError::DegenerateSlice
        ));
    }

    #[test]
    fn axis_plane_through_cone_spindle_keeps_the_apex_tag() {
        let t = cone_spindle_tiling(3).unwrap();
        let plane = Hyperplane::new(vector(&[1.0, 0.3, 0.0]), 0.0).unwrap();
        let (chart, cut) = slice_tiling(&t, &plane, 4096, 7).unwrap();
        let tagged: Vec<_> = cut
            .tiles()
            .iter()
            .filter_map(|tile| tile.similarity_to_ambient.clone())
            .collect();
        assert_eq!(tagged.len(), 1);
        assert!((tagged[0].scale() - 0.5).abs() < 1e-12);
        let apex_chart = chart.to_chart(&vector(&[0.0, 0.0, 1.0]));
        assert!((tagged[0].fixed_point().unwrap() - apex_chart).norm() < 1e-8);
        assert!(cut.tiles().len() >= 2);
    }

    #[test]
    fn tilted_plane_through_the_cut_point_cuts_both_tiles() {
        let t = cone_spindle_tiling(3).unwrap();
        let n = vector(&[0.2, 0.1, 1.0]);
        let offset = 0.5; // passes through (0, 0, 0.5)
        let plane = Hyperplane::new(n, offset).unwrap();
        let (_, cut) = slice_tiling(&t, &plane, 4096, 3).unwrap();
        assert_eq!(cut.tiles().len(), 2);
    }
}
