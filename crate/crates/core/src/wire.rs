//! Tiling interchange files.
//!
//! One JSON document per tiling: the ambient body plus the tile list, every
//! object flattened to decimal numbers in row-major arrays. Reading feeds the
//! data back through the ordinary constructors, so a document that decodes
//! also passes the same geometric checks as one built in process. Decode
//! errors carry the JSON path of the offending field.
//!
//! Floats survive a write/read round trip bit-exactly, with two deliberate
//! exceptions: negative zeros are scrubbed on write, and a rotation matrix
//! that is exactly the identity is abbreviated to the string `"I"`.

use serde::{Deserialize, Serialize};

use crate::body::{Body, Membership};
use crate::geom::{
    vector, Halfspace, Hyperplane, Matrix, Similarity, SliceChart, Vector, DEFAULT_TOL,
};
use crate::tiling::{Tile, Tiling};

const INTERIOR_PROBE_BUDGET: u64 = 4096;
const INTERIOR_PROBE_SEED: u64 = 0x1ce_b0d1;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl ToString) -> WireError {
    WireError::Invalid {
        path: path.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationRepr {
    Shorthand(String),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityRepr {
    pub scale: f64,
    pub rotation: RotationRepr,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfspaceRepr {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartRepr {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub origin: Vec<f64>,
    /// Orthonormal in-plane basis, one ambient-dimension column per entry.
    pub frame: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodyRepr {
    Polytope {
        halfspaces: Vec<HalfspaceRepr>,
    },
    ConeSpindle {
        dim: usize,
    },
    Image {
        map: SimilarityRepr,
        base: Box<BodyRepr>,
    },
    Intersection {
        parts: Vec<BodyRepr>,
        halfspaces: Vec<HalfspaceRepr>,
    },
    Slice {
        chart: ChartRepr,
        base: Box<BodyRepr>,
        interior: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileRepr {
    pub body: BodyRepr,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub similarity_to_ambient: Option<SimilarityRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TilingRepr {
    pub ambient: BodyRepr,
    pub tiles: Vec<TileRepr>,
}

fn scrub(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn vec_repr(v: &Vector) -> Vec<f64> {
    v.iter().map(|&x| scrub(x)).collect()
}

fn rows_repr(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| scrub(m[(r, c)])).collect())
        .collect()
}

fn cols_repr(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.ncols())
        .map(|c| (0..m.nrows()).map(|r| scrub(m[(r, c)])).collect())
        .collect()
}

pub fn similarity_repr(map: &Similarity) -> SimilarityRepr {
    let r = map.rotation();
    let dim = map.dim();
    let rotation = if r == &Matrix::identity(dim, dim) {
        RotationRepr::Shorthand("I".to_string())
    } else {
        RotationRepr::Rows(rows_repr(r))
    };
    SimilarityRepr {
        scale: map.scale(),
        rotation,
        translation: vec_repr(map.translation()),
    }
}

fn halfspace_repr(h: &Halfspace) -> HalfspaceRepr {
    HalfspaceRepr {
        normal: vec_repr(h.normal()),
        offset: scrub(h.offset()),
    }
}

pub fn chart_repr(chart: &SliceChart) -> ChartRepr {
    ChartRepr {
        normal: vec_repr(chart.hyperplane().normal()),
        offset: scrub(chart.hyperplane().offset()),
        origin: vec_repr(chart.origin()),
        frame: cols_repr(chart.frame()),
    }
}

pub fn body_repr(body: &Body) -> BodyRepr {
    match body {
        Body::Polytope(p) => BodyRepr::Polytope {
            halfspaces: p.halfspaces().iter().map(halfspace_repr).collect(),
        },
        Body::ConeSpindle { dim } => BodyRepr::ConeSpindle { dim: *dim },
        Body::Image { map, base } => BodyRepr::Image {
            map: similarity_repr(map),
            base: Box::new(body_repr(base)),
        },
        Body::Intersection(i) => BodyRepr::Intersection {
            parts: i.parts().iter().map(body_repr).collect(),
            halfspaces: i.halfspaces().iter().map(halfspace_repr).collect(),
        },
        Body::Slice(s) => BodyRepr::Slice {
            chart: chart_repr(s.chart()),
            base: Box::new(body_repr(s.base())),
            interior: vec_repr(s.interior_chart()),
        },
    }
}

pub fn tiling_repr(tiling: &Tiling) -> TilingRepr {
    TilingRepr {
        ambient: body_repr(tiling.ambient()),
        tiles: tiling
            .tiles()
            .iter()
            .map(|tile| TileRepr {
                body: body_repr(&tile.body),
                similarity_to_ambient: tile.similarity_to_ambient.as_ref().map(similarity_repr),
            })
            .collect(),
    }
}

pub fn similarity_from_repr(repr: &SimilarityRepr, path: &str) -> Result<Similarity, WireError> {
    let dim = repr.translation.len();
    let rotation = match &repr.rotation {
        RotationRepr::Shorthand(s) if s == "I" => Matrix::identity(dim, dim),
        RotationRepr::Shorthand(s) => {
            return Err(invalid(
                &format!("{path}.rotation"),
                format!("unknown shorthand {s:?}, expected \"I\" or a matrix"),
            ))
        }
        RotationRepr::Rows(rows) => {
            if rows.len() != dim {
                return Err(invalid(
                    &format!("{path}.rotation"),
                    format!("{} rows for dimension {dim}", rows.len()),
                ));
            }
            let mut flat = Vec::with_capacity(dim * dim);
            for (r, row) in rows.iter().enumerate() {
                if row.len() != dim {
                    return Err(invalid(
                        &format!("{path}.rotation[{r}]"),
                        format!("row length {} for dimension {dim}", row.len()),
                    ));
                }
                flat.extend_from_slice(row);
            }
            Matrix::from_row_slice(dim, dim, &flat)
        }
    };
    Similarity::new(repr.scale, rotation, vector(&repr.translation)).map_err(|e| invalid(path, e))
}

fn halfspace_from_repr(repr: &HalfspaceRepr, path: &str) -> Result<Halfspace, WireError> {
    Halfspace::new(vector(&repr.normal), repr.offset).map_err(|e| invalid(path, e))
}

fn chart_from_repr(repr: &ChartRepr, path: &str) -> Result<SliceChart, WireError> {
    let hyperplane = Hyperplane::new(vector(&repr.normal), repr.offset)
        .map_err(|e| invalid(&format!("{path}.normal"), e))?;
    let n = hyperplane.dim();
    if repr.frame.len() + 1 != n {
        return Err(invalid(
            &format!("{path}.frame"),
            format!("{} columns for ambient dimension {n}", repr.frame.len()),
        ));
    }
    for (c, col) in repr.frame.iter().enumerate() {
        if col.len() != n {
            return Err(invalid(
                &format!("{path}.frame[{c}]"),
                format!("column length {} for ambient dimension {n}", col.len()),
            ));
        }
    }
    let frame = Matrix::from_fn(n, n - 1, |r, c| repr.frame[c][r]);
    SliceChart::from_parts(hyperplane, vector(&repr.origin), frame).map_err(|e| invalid(path, e))
}

pub fn body_from_repr(repr: &BodyRepr, path: &str) -> Result<Body, WireError> {
    match repr {
        BodyRepr::Polytope { halfspaces } => {
            let hs = halfspaces
                .iter()
                .enumerate()
                .map(|(i, h)| halfspace_from_repr(h, &format!("{path}.halfspaces[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Body::polytope(hs).map_err(|e| invalid(path, e))
        }
        BodyRepr::ConeSpindle { dim } => Body::cone_spindle(*dim).map_err(|e| invalid(path, e)),
        BodyRepr::Image { map, base } => {
            let map = similarity_from_repr(map, &format!("{path}.map"))?;
            let base = body_from_repr(base, &format!("{path}.base"))?;
            Body::image(map, base).map_err(|e| invalid(path, e))
        }
        BodyRepr::Intersection { parts, halfspaces } => {
            let parts = parts
                .iter()
                .enumerate()
                .map(|(i, p)| body_from_repr(p, &format!("{path}.parts[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let hs = halfspaces
                .iter()
                .enumerate()
                .map(|(i, h)| halfspace_from_repr(h, &format!("{path}.halfspaces[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Body::intersection(parts, hs, INTERIOR_PROBE_BUDGET, INTERIOR_PROBE_SEED)
                .map_err(|e| invalid(path, e))
        }
        BodyRepr::Slice {
            chart,
            base,
            interior,
        } => {
            let chart = chart_from_repr(chart, &format!("{path}.chart"))?;
            let base = body_from_repr(base, &format!("{path}.base"))?;
            let interior = vector(interior);
            let probe = chart.from_chart(&interior);
            if base.membership(&probe, DEFAULT_TOL) != Membership::Inside {
                return Err(invalid(
                    &format!("{path}.interior"),
                    "interior point does not land inside the base",
                ));
            }
            Body::slice_body(chart, base, interior).map_err(|e| invalid(path, e))
        }
    }
}

pub fn tiling_from_repr(repr: &TilingRepr) -> Result<Tiling, WireError> {
    let ambient = body_from_repr(&repr.ambient, "ambient")?;
    let tiles = repr
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let body = body_from_repr(&t.body, &format!("tiles[{i}].body"))?;
            let tag = t
                .similarity_to_ambient
                .as_ref()
                .map(|s| similarity_from_repr(s, &format!("tiles[{i}].similarity_to_ambient")))
                .transpose()?;
            Ok(Tile {
                body,
                similarity_to_ambient: tag,
            })
        })
        .collect::<Result<Vec<_>, WireError>>()?;
    Tiling::new(ambient, tiles).map_err(|e| invalid("tiles", e))
}

/// Pretty JSON document with a trailing newline; stable bytes for equal input.
pub fn tiling_to_json(tiling: &Tiling) -> String {
    let mut text = serde_json::to_string_pretty(&tiling_repr(tiling)).expect("plain data");
    text.push('\n');
    text
}

pub fn tiling_from_json(text: &str) -> Result<Tiling, WireError> {
    let repr: TilingRepr = serde_json::from_str(text)?;
    tiling_from_repr(&repr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cone_spindle_tiling, quarter_square_tiling, Corner};
    use crate::geom::vector;
    use crate::tiling::slice_tiling;

    fn assert_same_tiling(a: &Tiling, b: &Tiling) {
        assert_eq!(a.tiles().len(), b.tiles().len());
        for (x, y) in a.tiles().iter().zip(b.tiles()) {
            assert_eq!(
                x.similarity_to_ambient.is_some(),
                y.similarity_to_ambient.is_some()
            );
            if let (Some(f), Some(g)) = (&x.similarity_to_ambient, &y.similarity_to_ambient) {
                assert!((f.scale() - g.scale()).abs() <= 1e-12);
                assert!((f.rotation() - g.rotation()).amax() <= 1e-12);
                assert!((f.translation() - g.translation()).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn quarter_square_round_trips_bit_exactly() {
        let t = quarter_square_tiling(Corner::TopRight).unwrap();
        let text = tiling_to_json(&t);
        let back = tiling_from_json(&text).unwrap();
        assert_same_tiling(&t, &back);
        assert_eq!(text, tiling_to_json(&back));
    }

    #[test]
    fn cone_spindle_round_trips_with_oracle_remainder() {
        let t = cone_spindle_tiling(4).unwrap();
        let text = tiling_to_json(&t);
        let back = tiling_from_json(&text).unwrap();
        assert_same_tiling(&t, &back);
        assert_eq!(text, tiling_to_json(&back));
    }

    #[test]
    fn sliced_tiling_round_trips_through_chart_fields() {
        let t = cone_spindle_tiling(3).unwrap();
        let plane = Hyperplane::new(vector(&[0.0, 0.0, 1.0]), 0.25).unwrap();
        let (_, sliced) = slice_tiling(&t, &plane, 4096, 5).unwrap();
        let text = tiling_to_json(&sliced);
        let back = tiling_from_json(&text).unwrap();
        assert_same_tiling(&sliced, &back);
        assert_eq!(text, tiling_to_json(&back));
    }

    #[test]
    fn homothety_rotation_collapses_to_shorthand() {
        let t = quarter_square_tiling(Corner::BottomLeft).unwrap();
        let text = tiling_to_json(&t);
        assert!(text.contains("\"rotation\": \"I\""));
        assert!(!text.contains("-0.0"));
    }

    #[test]
    fn decode_errors_carry_the_field_path() {
        let text = r#"{"ambient": {"type": "polytope", "halfspaces": []}, "tiles": []}"#;
        let err = tiling_from_json(text).unwrap_err();
        assert!(err.to_string().starts_with("ambient:"), "{err}");

        let text = r#"{
            "ambient": {"type": "cone_spindle", "dim": 3},
            "tiles": [{"body": {"type": "cone_spindle", "dim": 3},
                       "similarity_to_ambient": {"scale": 0.5, "rotation": "Q", "translation": [0,0,0]}}]
        }"#;
        let err = tiling_from_json(text).unwrap_err();
        assert!(
            err.to_string()
                .starts_with("tiles[0].similarity_to_ambient.rotation:"),
            "{err}"
        );
    }

    #[test]
    fn bad_tags_are_rejected_on_read() {
        // scale 1 is not a contraction, so the tiling constructor refuses it
        let text = r#"{
            "ambient": {"type": "cone_spindle", "dim": 3},
            "tiles": [{"body": {"type": "cone_spindle", "dim": 3},
                       "similarity_to_ambient": {"scale": 1.0, "rotation": "I", "translation": [0,0,0]}}]
        }"#;
        let err = tiling_from_json(text).unwrap_err();
        assert!(err.to_string().contains("expected < 1"), "{err}");
    }
}
