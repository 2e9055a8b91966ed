//! Ready-made bodies and tilings used by the command line tool and the
//! test suites.

use crate::body::{Body, BodyError};
use crate::geom::{vector, Halfspace, Matrix, Similarity, Vector};
use crate::tiling::{Tile, Tiling, TilingError};

const REMAINDER_BUDGET: u64 = 4096;
const REMAINDER_SEED: u64 = 0xc0de_5eed;

/// Axis-aligned box given by opposite corners.
pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Body, BodyError> {
    assert_eq!(lo.len(), hi.len());
    let dim = lo.len();
    let mut halfspaces = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let mut n = Vector::zeros(dim);
        n[i] = -1.0;
        halfspaces.push(Halfspace::new(n, -lo[i])?);
        let mut p = Vector::zeros(dim);
        p[i] = 1.0;
        halfspaces.push(Halfspace::new(p, hi[i])?);
    }
    Body::polytope(halfspaces)
}

pub fn unit_square() -> Body {
    axis_box(&[0.0, 0.0], &[1.0, 1.0]).expect("unit square is a valid polytope")
}

/// Tiling of the cone spindle in `dim` coordinates: one half-scale copy
/// pulled toward each apex, plus the remainder below the half-coordinate
/// cuts. At `dim == 2` the body has no apexes and the single tile is the
/// body itself.
pub fn cone_spindle_tiling(dim: usize) -> Result<Tiling, TilingError> {
    let ambient = Body::cone_spindle(dim)?;
    let mut tiles = Vec::with_capacity(dim - 1);
    for j in 2..dim {
        let mut apex = Vector::zeros(dim);
        apex[j] = 1.0;
        let tag = Similarity::homothety(0.5, &apex)?;
        tiles.push(Tile::tagged(
            Body::image(tag.clone(), ambient.clone())?,
            tag,
        ));
    }
    let mut cuts = Vec::with_capacity(dim.saturating_sub(2));
    for j in 2..dim {
        let mut n = Vector::zeros(dim);
        n[j] = 1.0;
        cuts.push(Halfspace::new(n, 0.5)?);
    }
    let remainder = Body::intersection(
        vec![ambient.clone()],
        cuts,
        REMAINDER_BUDGET,
        REMAINDER_SEED,
    )?;
    tiles.push(Tile::plain(remainder));
    Tiling::new(ambient, tiles)
}

/// The cone-spindle tiling repackaged as one tiling per apex, each keeping
/// only that apex's tag. The tip-simplex analyzer reads one tagged tile per
/// tiling, so this is its natural input shape for the family.
pub fn cone_spindle_family(dim: usize) -> Result<Vec<Tiling>, TilingError> {
    let base = cone_spindle_tiling(dim)?;
    (0..dim.saturating_sub(2))
        .map(|keep| {
            let tiles = base
                .tiles()
                .iter()
                .enumerate()
                .map(|(i, tile)| {
                    if i == keep {
                        tile.clone()
                    } else {
                        Tile::plain(tile.body.clone())
                    }
                })
                .collect();
            Tiling::new(base.ambient().clone(), tiles)
        })
        .collect()
}

/// Which corner of the unit square carries the half-scale tagged copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    pub fn point(self) -> (f64, f64) {
        match self {
            Corner::BottomLeft => (0.0, 0.0),
            Corner::BottomRight => (1.0, 0.0),
            Corner::TopLeft => (0.0, 1.0),
            Corner::TopRight => (1.0, 1.0),
        }
    }
}

impl std::str::FromStr for Corner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bl" | "bottom-left" => Ok(Corner::BottomLeft),
            "br" | "bottom-right" => Ok(Corner::BottomRight),
            "tl" | "top-left" => Ok(Corner::TopLeft),
            "tr" | "top-right" => Ok(Corner::TopRight),
            other => Err(format!("unknown corner {other:?}; use bl, br, tl, or tr")),
        }
    }
}

/// Unit square split into four quarters, with the quarter at `corner`
/// tagged by the half-scale homothety about that corner.
pub fn quarter_square_tiling(corner: Corner) -> Result<Tiling, TilingError> {
    let square = unit_square();
    let (cx, cy) = corner.point();
    let tag = Similarity::homothety(0.5, &vector(&[cx, cy]))?;
    let mut tiles = vec![Tile::tagged(Body::image(tag.clone(), square.clone())?, tag)];
    for qy in 0..2 {
        for qx in 0..2 {
            let lo = [qx as f64 * 0.5, qy as f64 * 0.5];
            if (lo[0] - cx * 0.5).abs() < 1e-12 && (lo[1] - cy * 0.5).abs() < 1e-12 {
                continue;
            }
            tiles.push(Tile::plain(axis_box(&lo, &[lo[0] + 0.5, lo[1] + 0.5])?));
        }
    }
    Tiling::new(square, tiles)
}

/// Unit square whose tagged quarter is carried by a similarity with a
/// non-identity orthogonal part: the half-scale diagonal swap about the
/// origin. The swapped quarter equals the bottom-left quarter as a set,
/// so the pieces still tile.
pub fn rotated_similar_tile_fixture() -> Result<Tiling, TilingError> {
    let square = unit_square();
    let swap = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let tag = Similarity::new(0.5, swap, vector(&[0.0, 0.0]))?;
    let mut tiles = vec![Tile::tagged(Body::image(tag.clone(), square.clone())?, tag)];
    for (qx, qy) in [(1, 0), (0, 1), (1, 1)] {
        let lo = [qx as f64 * 0.5, qy as f64 * 0.5];
        tiles.push(Tile::plain(axis_box(&lo, &[lo[0] + 0.5, lo[1] + 0.5])?));
    }
    Tiling::new(square, tiles)
}

/// Catalog entry for a shipped tiling file. `name` is the file stem under
/// the fixtures directory; `expected` holds the values the test suites
/// check the file against.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExampleSpec {
    pub name: String,
    pub dim: usize,
    pub expected: ExpectedValues,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExpectedValues {
    pub tile_count: usize,
    /// Affine dimension of the fixed points across all tagged tiles.
    pub tip_dim: usize,
    /// Per-tile volumes in tile order, when a closed form is known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub volumes: Option<Vec<f64>>,
}

/// Per-tile volumes of `cone_spindle_tiling(dim)`. The whole body encloses
/// 2 pi / dim! and each apex copy scales that by (1/2)^dim.
fn cone_spindle_volumes(dim: usize) -> Vec<f64> {
    let factorial: f64 = (1..=dim).map(|k| k as f64).product();
    let total = 2.0 * std::f64::consts::PI / factorial;
    let apex = total / (1u64 << dim) as f64;
    let mut v = vec![apex; dim - 2];
    v.push(total - (dim - 2) as f64 * apex);
    v
}

/// One entry per shipped fixture file.
pub fn example_manifest() -> Vec<ExampleSpec> {
    let mut entries = Vec::new();
    for dim in 3..=6 {
        entries.push(ExampleSpec {
            name: format!("cone_spindle_{dim}"),
            dim,
            expected: ExpectedValues {
                tile_count: dim - 1,
                tip_dim: dim - 3,
                volumes: Some(cone_spindle_volumes(dim)),
            },
        });
    }
    for (suffix, _) in CORNER_NAMES {
        entries.push(ExampleSpec {
            name: format!("quarter_square_{suffix}"),
            dim: 2,
            expected: ExpectedValues {
                tile_count: 4,
                tip_dim: 0,
                volumes: Some(vec![0.25; 4]),
            },
        });
    }
    entries.push(ExampleSpec {
        name: "rotated_fixture".to_string(),
        dim: 2,
        expected: ExpectedValues {
            tile_count: 4,
            tip_dim: 0,
            volumes: Some(vec![0.25; 4]),
        },
    });
    entries
}

const CORNER_NAMES: [(&str, Corner); 4] = [
    ("bl", Corner::BottomLeft),
    ("br", Corner::BottomRight),
    ("tl", Corner::TopLeft),
    ("tr", Corner::TopRight),
];

/// Builds the tiling a manifest entry names, or `None` for unknown names.
pub fn example_tiling(name: &str) -> Option<Result<Tiling, TilingError>> {
    if let Some(dim) = name.strip_prefix("cone_spindle_") {
        let dim: usize = dim.parse().ok()?;
        if (3..=6).contains(&dim) {
            return Some(cone_spindle_tiling(dim));
        }
        return None;
    }
    if let Some(suffix) = name.strip_prefix("quarter_square_") {
        let corner = CORNER_NAMES.iter().find(|(s, _)| *s == suffix)?.1;
        return Some(quarter_square_tiling(corner));
    }
    if name == "rotated_fixture" {
        return Some(rotated_similar_tile_fixture());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Membership;

    #[test]
    fn manifest_entries_build_and_match_their_counts() {
        for entry in example_manifest() {
            let t = example_tiling(&entry.name).unwrap().unwrap();
            assert_eq!(t.dim(), entry.dim, "{}", entry.name);
            assert_eq!(t.tiles().len(), entry.expected.tile_count, "{}", entry.name);
            if let Some(volumes) = &entry.expected.volumes {
                assert_eq!(volumes.len(), entry.expected.tile_count);
            }
        }
        assert!(example_tiling("cone_spindle_7").is_none());
        assert!(example_tiling("mystery").is_none());
    }

    #[test]
    fn family_keeps_one_tag_per_tiling() {
        let family = cone_spindle_family(5).unwrap();
        assert_eq!(family.len(), 3);
        for (i, t) in family.iter().enumerate() {
            let tags: Vec<usize> = t
                .tiles()
                .iter()
                .enumerate()
                .filter(|(_, tile)| tile.similarity_to_ambient.is_some())
                .map(|(j, _)| j)
                .collect();
            assert_eq!(tags, vec![i]);
        }
    }

    #[test]
    fn cone_spindle_tiling_has_one_tile_per_apex_plus_remainder() {
        for dim in 2..=6 {
            let t = cone_spindle_tiling(dim).unwrap();
            assert_eq!(t.tiles().len(), dim - 1);
            let tagged = t
                .tiles()
                .iter()
                .filter(|tile| tile.similarity_to_ambient.is_some())
                .count();
            assert_eq!(tagged, dim.saturating_sub(2));
        }
    }

    #[test]
    fn cone_spindle_tags_fix_the_apexes() {
        let t = cone_spindle_tiling(4).unwrap();
        for (j, tile) in t.tiles()[..2].iter().enumerate() {
            let fixed = tile
                .similarity_to_ambient
                .as_ref()
                .unwrap()
                .fixed_point()
                .unwrap();
            let mut apex = Vector::zeros(4);
            apex[j + 2] = 1.0;
            assert!((fixed - apex).norm() < 1e-12);
        }
    }

    #[test]
    fn cone_spindle_pieces_partition_sample_points() {
        let t = cone_spindle_tiling(3).unwrap();
        let apex_copy = &t.tiles()[0].body;
        let remainder = &t.tiles()[1].body;
        let high = vector(&[0.0, 0.0, 0.75]);
        assert_eq!(apex_copy.membership(&high, 1e-9), Membership::Inside);
        assert_eq!(remainder.membership(&high, 1e-9), Membership::Outside);
        let low = vector(&[0.3, 0.2, 0.2]);
        assert_eq!(apex_copy.membership(&low, 1e-9), Membership::Outside);
        assert_eq!(remainder.membership(&low, 1e-9), Membership::Inside);
    }

    #[test]
    fn quarter_square_tag_fixes_the_chosen_corner() {
        for corner in [
            Corner::BottomLeft,
            Corner::BottomRight,
            Corner::TopLeft,
            Corner::TopRight,
        ] {
            let t = quarter_square_tiling(corner).unwrap();
            assert_eq!(t.tiles().len(), 4);
            let fixed = t.tiles()[0]
                .similarity_to_ambient
                .as_ref()
                .unwrap()
                .fixed_point()
                .unwrap();
            let (cx, cy) = corner.point();
            assert!((fixed - vector(&[cx, cy])).norm() < 1e-12);
        }
    }

    #[test]
    fn corner_labels_round_trip() {
        for (label, corner) in [
            ("bl", Corner::BottomLeft),
            ("br", Corner::BottomRight),
            ("tl", Corner::TopLeft),
            ("tr", Corner::TopRight),
        ] {
            assert_eq!(label.parse::<Corner>().unwrap(), corner);
        }
        assert!("middle".parse::<Corner>().is_err());
    }

    #[test]
    fn rotated_fixture_tag_has_a_non_identity_rotation() {
        let t = rotated_similar_tile_fixture().unwrap();
        let tag = t.tiles()[0].similarity_to_ambient.as_ref().unwrap();
        assert!((tag.rotation() - Matrix::identity(2, 2)).abs().max() > 0.5);
        assert!(tag.fixed_point().unwrap().norm() < 1e-12);
    }
}
