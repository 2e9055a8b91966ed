//! Tilings of a convex ambient body and the calculus on them.
//!
//! A tiling is an ambient body together with a list of tiles. A tile may
//! carry a tag: a contracting similarity that maps the ambient body onto
//! the tile, certifying that the tile is a similar copy of the whole.
//! Everything here revolves around manipulating tagged tilings: refining
//! them (`iterate_tiling`, `meet_tilings`), straightening a tag into a
//! pure homothety (`normalize_to_homothety`), steering a tag's fixed point
//! (`move_fixed_point`), cutting with a hyperplane (`slice_tiling`), and
//! measuring how well the tiles actually cover (`validate_tiling`).
//!
//! Tag checks at construction are structural where possible (bodies built
//! from the same maps compare exactly) with a sampled membership-agreement
//! fallback for representation changes.

mod normalize;
mod refine;
mod relocate;
mod slice;
mod validate;

pub use normalize::{normalize_to_homothety, EpsSearch};
pub use refine::{iterate_tiling, meet_tilings};
pub use relocate::{move_fixed_point, Relocation};
pub use slice::slice_tiling;
pub use validate::{validate_tiling, Thresholds};

use serde::Serialize;

use crate::body::{Body, BodyError, Membership};
use crate::geom::{GeomError, Matrix, Similarity, Vector};
use crate::rng::SampleStream;

#[derive(Debug, Clone, thiserror::Error)]
pub enum TilingError {
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("a tiling needs at least one tile")]
    NoTiles,
    #[error("tile index {index} out of range for {len} tiles")]
    TileIndexOutOfRange { index: usize, len: usize },
    #[error("tile {index} carries no similarity tag")]
    UntaggedTile { index: usize },
    #[error("tiling contains no suitably tagged tile")]
    UntaggedTiling,
    #[error("tag on tile {index} has scale {scale}, expected < 1")]
    TagNotContracting { index: usize, scale: f64 },
    #[error("tile {index} body does not match the image of the ambient under its tag")]
    TagMismatch { index: usize },
    #[error("expected one designation per tiling: {expected} tilings, {got} designations")]
    DesignationCountMismatch { expected: usize, got: usize },
    #[error("tiling {index} has a different ambient body than tiling 0")]
    AmbientMismatch { index: usize },
    #[error("no intersection piece survived the interior search")]
    EmptyIntersection,
    #[error("no probe radius down to {eps_min} agreed between ambient and tile")]
    EpsNotFound { eps_min: f64, probes: u64 },
    #[error("tag fixed point lies outside the ambient body")]
    FixedPointOutsideAmbient,
    #[error("target lies outside the convex hull of the anchor fixed points")]
    TargetOutsideHull,
    #[error("no anchor composition reached the target within {steps} steps")]
    StepBudgetExceeded { steps: usize },
    #[error("hyperplane does not cross the interior of the ambient body or of any tile")]
    EmptySlice,
    #[error("hyperplane only grazes the ambient body; slice has no relative interior")]
    DegenerateSlice,
}

/// One piece of a tiling. `similarity_to_ambient`, when present, maps the
/// ambient body onto this tile's body.
#[derive(Debug, Clone)]
pub struct Tile {
    pub body: Body,
    pub similarity_to_ambient: Option<Similarity>,
}

impl Tile {
    pub fn plain(body: Body) -> Tile {
        Tile {
            body,
            similarity_to_ambient: None,
        }
    }

    pub fn tagged(body: Body, tag: Similarity) -> Tile {
        Tile {
            body,
            similarity_to_ambient: Some(tag),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tiling {
    ambient: Body,
    tiles: Vec<Tile>,
}

impl Tiling {
    /// Checks every tag: dimension, scale < 1, and that the tile body is
    /// the tag's image of the ambient (structural comparison first, then
    /// sampled membership agreement). Properness is not enforced here; a
    /// single-tile tiling constructs fine and reports `proper = false` on
    /// validation.
    pub fn new(ambient: Body, tiles: Vec<Tile>) -> Result<Tiling, TilingError> {
        if tiles.is_empty() {
            return Err(TilingError::NoTiles);
        }
        let dim = ambient.dim();
        for (index, tile) in tiles.iter().enumerate() {
            if tile.body.dim() != dim {
                return Err(TilingError::DimensionMismatch {
                    left: dim,
                    right: tile.body.dim(),
                });
            }
            if let Some(tag) = &tile.similarity_to_ambient {
                if tag.dim() != dim {
                    return Err(TilingError::DimensionMismatch {
                        left: dim,
                        right: tag.dim(),
                    });
                }
                if tag.scale() >= 1.0 {
                    return Err(TilingError::TagNotContracting {
                        index,
                        scale: tag.scale(),
                    });
                }
                let expected = canonical(&Body::image(tag.clone(), ambient.clone())?);
                let got = canonical(&tile.body);
                if !structurally_eq(&got, &expected, 1e-9)
                    && !agree_on_samples(&got, &expected, 512, 1e-7)
                {
                    return Err(TilingError::TagMismatch { index });
                }
            }
        }
        Ok(Tiling { ambient, tiles })
    }

    pub fn ambient(&self) -> &Body {
        &self.ambient
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Index of the first tile carrying any tag.
    pub fn first_tagged(&self) -> Option<usize> {
        self.tiles
            .iter()
            .position(|t| t.similarity_to_ambient.is_some())
    }
}

/// Fixed points of the designated tags across a family of tilings, with
/// the affine dimension of their span.
///
/// `nondegenerate_for` is the ambient dimension for which these points
/// would certify the nondegeneracy hypothesis: k points in general
/// position (affine dimension k - 1) certify dimension k + 1, where k + 1
/// ambient dimensions require k tilings spanning a (k - 1)-simplex. When
/// the points are affinely degenerate the field is absent.
#[derive(Debug, Clone)]
pub struct TipSimplex {
    pub points: Vec<Vector>,
    pub affine_dim: usize,
    pub nondegenerate_for: Option<usize>,
}

/// Tip simplex using the first tagged tile of each tiling.
pub fn tip_simplex(tilings: &[Tiling]) -> Result<TipSimplex, TilingError> {
    tip_simplex_with_tags(tilings, None)
}

/// Tip simplex with explicit designated tile indices, one per tiling.
pub fn tip_simplex_with_tags(
    tilings: &[Tiling],
    tags: Option<&[usize]>,
) -> Result<TipSimplex, TilingError> {
    if tilings.is_empty() {
        return Err(TilingError::NoTiles);
    }
    if let Some(list) = tags {
        if list.len() != tilings.len() {
            return Err(TilingError::DesignationCountMismatch {
                expected: tilings.len(),
                got: list.len(),
            });
        }
    }
    let dim = tilings[0].dim();
    let mut points = Vec::with_capacity(tilings.len());
    for (i, tiling) in tilings.iter().enumerate() {
        if tiling.dim() != dim {
            return Err(TilingError::DimensionMismatch {
                left: dim,
                right: tiling.dim(),
            });
        }
        let index = match tags {
            Some(list) => {
                let idx = list[i];
                if idx >= tiling.tiles.len() {
                    return Err(TilingError::TileIndexOutOfRange {
                        index: idx,
                        len: tiling.tiles.len(),
                    });
                }
                idx
            }
            None => tiling.first_tagged().ok_or(TilingError::UntaggedTiling)?,
        };
        let tag = tiling.tiles[index]
            .similarity_to_ambient
            .as_ref()
            .ok_or(TilingError::UntaggedTile { index })?;
        points.push(tag.fixed_point()?);
    }
    let affine_dim = affine_rank(&points);
    let count = points.len();
    let nondegenerate_for = if affine_dim == count - 1 {
        Some(count + 1)
    } else {
        None
    };
    Ok(TipSimplex {
        points,
        affine_dim,
        nondegenerate_for,
    })
}

/// Numeric affine rank: count of singular values of the difference matrix
/// above 1e-8 times the largest.
fn affine_rank(points: &[Vector]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let dim = points[0].len();
    let mut diffs = Matrix::zeros(dim, points.len() - 1);
    for (col, p) in points[1..].iter().enumerate() {
        let d = p - &points[0];
        for row in 0..dim {
            diffs[(row, col)] = d[row];
        }
    }
    let singular = diffs.svd(false, false).singular_values;
    let smax = singular.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > 1e-8 * smax).count()
}

/// Outcome of a Monte Carlo cover check. Field names are stable; they are
/// emitted verbatim in reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValidationReport {
    pub covered: bool,
    pub volume_gap: f64,
    pub max_overlap_fraction: f64,
    pub orphan_points: usize,
    pub proper: bool,
    pub seed: u64,
    pub samples: u64,
}

/// Collapse nested similarity images so bodies built along different
/// composition routes compare equal.
pub(crate) fn canonical(body: &Body) -> Body {
    match body {
        Body::Image { map, base } => {
            let inner = canonical(base);
            match inner {
                Body::Image {
                    map: inner_map,
                    base: core,
                } => Body::Image {
                    map: map
                        .compose(&inner_map)
                        .expect("image chain dimensions agree"),
                    base: core,
                },
                other => Body::Image {
                    map: map.clone(),
                    base: Box::new(other),
                },
            }
        }
        other => other.clone(),
    }
}

pub(crate) fn similarity_approx_eq(a: &Similarity, b: &Similarity, tol: f64) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    if (a.scale() - b.scale()).abs() > tol * (1.0 + a.scale()) {
        return false;
    }
    if (a.rotation() - b.rotation()).amax() > tol {
        return false;
    }
    (a.translation() - b.translation()).norm() <= tol * (1.0 + a.translation().norm())
}

/// Representation-level equality, used as the cheap first pass of tag
/// checking. Halfspace lists compare as multisets; everything else
/// compares variant-wise.
pub(crate) fn structurally_eq(a: &Body, b: &Body, tol: f64) -> bool {
    match (a, b) {
        (Body::Polytope(pa), Body::Polytope(pb)) => {
            let ha = pa.halfspaces();
            let hb = pb.halfspaces();
            if ha.len() != hb.len() {
                return false;
            }
            let mut used = vec![false; hb.len()];
            'outer: for h in ha {
                for (j, other) in hb.iter().enumerate() {
                    if used[j] {
                        continue;
                    }
                    if (h.normal() - other.normal()).norm() <= tol
                        && (h.offset() - other.offset()).abs() <= tol * (1.0 + h.offset().abs())
                    {
                        used[j] = true;
                        continue 'outer;
                    }
                }
                return false;
            }
            true
        }
        (Body::ConeSpindle { dim: da }, Body::ConeSpindle { dim: db }) => da == db,
        (Body::Image { map: ma, base: ba }, Body::Image { map: mb, base: bb }) => {
            similarity_approx_eq(ma, mb, tol) && structurally_eq(ba, bb, tol)
        }
        (Body::Intersection(ia), Body::Intersection(ib)) => {
            ia.parts().len() == ib.parts().len()
                && ia.halfspaces().len() == ib.halfspaces().len()
                && ia
                    .parts()
                    .iter()
                    .zip(ib.parts())
                    .all(|(x, y)| structurally_eq(x, y, tol))
                && ia.halfspaces().iter().zip(ib.halfspaces()).all(|(x, y)| {
                    (x.normal() - y.normal()).norm() <= tol
                        && (x.offset() - y.offset()).abs() <= tol * (1.0 + x.offset().abs())
                })
        }
        (Body::Slice(sa), Body::Slice(sb)) => {
            (sa.chart().hyperplane().normal() - sb.chart().hyperplane().normal()).norm() <= tol
                && (sa.chart().hyperplane().offset() - sb.chart().hyperplane().offset()).abs()
                    <= tol
                && (sa.chart().origin() - sb.chart().origin()).norm() <= tol
                && (sa.chart().frame() - sb.chart().frame()).amax() <= tol
                && structurally_eq(sa.base(), sb.base(), tol)
        }
        _ => false,
    }
}

/// Membership agreement on sampled points of the joint bounding box. Points
/// in either tolerance band are wildcards; strict Inside/Outside conflicts
/// fail.
pub(crate) fn agree_on_samples(a: &Body, b: &Body, samples: u64, tol: f64) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    let dim = a.dim();
    let mut lo = Vector::zeros(dim);
    let mut hi = Vector::zeros(dim);
    for j in 0..dim {
        lo[j] = alo[j].min(blo[j]);
        hi[j] = ahi[j].max(bhi[j]);
    }
    for i in 0..samples {
        let mut s = SampleStream::at(0xa9_2ee5, i);
        let x = s.point_in_box(&lo, &hi);
        let ma = a.membership(&x, tol);
        let mb = b.membership(&x, tol);
        let conflict = matches!(
            (ma, mb),
            (Membership::Inside, Membership::Outside) | (Membership::Outside, Membership::Inside)
        );
        if conflict {
            return false;
        }
    }
    true
}

pub(crate) fn body_eq_or_agrees(a: &Body, b: &Body) -> bool {
    structurally_eq(&canonical(a), &canonical(b), 1e-9) || agree_on_samples(a, b, 512, 1e-7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{vector, Halfspace};

    fn unit_square() -> Body {
        Body::polytope(vec![
            Halfspace::new(vector(&[1.0, 0.0]), 1.0).unwrap(),
            Halfspace::new(vector(&[-1.0, 0.0]), 0.0).unwrap(),
            Halfspace::new(vector(&[0.0, 1.0]), 1.0).unwrap(),
            Halfspace::new(vector(&[0.0, -1.0]), 0.0).unwrap(),
        ])
        .unwrap()
    }

    fn quarter(x0: f64, y0: f64) -> Body {
        Body::polytope(vec![
            Halfspace::new(vector(&[1.0, 0.0]), x0 + 0.5).unwrap(),
            Halfspace::new(vector(&[-1.0, 0.0]), -x0).unwrap(),
            Halfspace::new(vector(&[0.0, 1.0]), y0 + 0.5).unwrap(),
            Halfspace::new(vector(&[0.0, -1.0]), -y0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn tag_scale_must_contract() {
        let sq = unit_square();
        let grow = Similarity::homothety(1.5, &vector(&[0.0, 0.0])).unwrap();
        let body = Body::image(grow.clone(), sq.clone()).unwrap();
        let err = Tiling::new(sq, vec![Tile::tagged(body, grow)]).unwrap_err();
        assert!(matches!(err, TilingError::TagNotContracting { .. }));
    }

    #[test]
    fn structural_tag_check_accepts_image_bodies() {
        let sq = unit_square();
        let f = Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap();
        let tile = Tile::tagged(Body::image(f.clone(), sq.clone()).unwrap(), f);
        let rest = Tile::plain(quarter(0.5, 0.0));
        assert!(Tiling::new(sq, vec![tile, rest]).is_ok());
    }

    #[test]
    fn sampled_tag_check_accepts_polytope_representation() {
        // Same quarter tile, written as halfspaces instead of an image.
        let sq = unit_square();
        let f = Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap();
        let tile = Tile::tagged(quarter(0.0, 0.0), f);
        assert!(Tiling::new(sq, vec![tile]).is_ok());
    }

    #[test]
    fn mismatched_tag_is_rejected() {
        let sq = unit_square();
        // Tag claims the lower-left quarter but the body is the upper-right.
        let f = Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap();
        let err = Tiling::new(sq, vec![Tile::tagged(quarter(0.5, 0.5), f)]).unwrap_err();
        assert!(matches!(err, TilingError::TagMismatch { index: 0 }));
    }

    #[test]
    fn tip_simplex_of_two_corner_tags() {
        let sq = unit_square();
        let f0 = Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap();
        let f1 = Similarity::homothety(0.5, &vector(&[1.0, 1.0])).unwrap();
        let t0 = Tiling::new(
            sq.clone(),
            vec![
                Tile::tagged(Body::image(f0.clone(), sq.clone()).unwrap(), f0),
                Tile::plain(quarter(0.5, 0.5)),
            ],
        )
        .unwrap();
        let t1 = Tiling::new(
            sq.clone(),
            vec![
                Tile::tagged(Body::image(f1.clone(), sq.clone()).unwrap(), f1),
                Tile::plain(quarter(0.0, 0.0)),
            ],
        )
        .unwrap();
        let tip = tip_simplex(&[t0.clone(), t1.clone()]).unwrap();
        assert_eq!(tip.points.len(), 2);
        assert_eq!(tip.affine_dim, 1);
        assert_eq!(tip.nondegenerate_for, Some(3));

        // Coinciding fixed points degenerate.
        let tip = tip_simplex(&[t0.clone(), t0]).unwrap();
        assert_eq!(tip.affine_dim, 0);
        assert_eq!(tip.nondegenerate_for, None);

        // Order invariance.
        let t1_first = tip_simplex(&[t1.clone(), t1]).unwrap();
        assert_eq!(t1_first.affine_dim, 0);
    }

    #[test]
    fn canonical_collapses_image_chains() {
        let sq = unit_square();
        let f = Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap();
        let g = Similarity::homothety(0.5, &vector(&[1.0, 1.0])).unwrap();
        let nested = Body::image(f.clone(), Body::image(g.clone(), sq.clone()).unwrap()).unwrap();
        let direct = Body::image(f.compose(&g).unwrap(), sq).unwrap();
        assert!(structurally_eq(
            &canonical(&nested),
            &canonical(&direct),
            1e-12
        ));
    }
}
