//! Rebuilding a tiling so the designated tile is a homothetic copy of the
//! ambient body.
//!
//! The designated tile's tag is some contracting similarity `f` with fixed
//! point `x`. Refining the tiling at that tile `k` times replaces the tag by
//! `f^(2^k)`; composing with an expansion about `x` that undoes the
//! accumulated rotation yields a tag whose rotation part is the identity up
//! to floating point. The other tiles are carried along by the expansion and
//! clipped back to the ambient.

use crate::body::{Body, BodyError, Membership};
use crate::geom::{Similarity, Vector};
use crate::rng::{derive_seed, SampleStream};
use crate::tiling::refine::iterate_tiling;
use crate::tiling::{Tile, Tiling, TilingError};

const BALL_SEED: u64 = 0x00ba_11a9;
const CLIP_SEED: u64 = 0x05ca_1ed0;
const CLIP_BUDGET: u64 = 4096;
const MAX_HALVINGS: u64 = 60;
const MAX_DOUBLINGS: usize = 20;
const ROTATION_SETTLE_TOL: f64 = 1e-6;
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Knobs for the agreement-radius search around the designated fixed point.
#[derive(Debug, Clone, Copy)]
pub struct EpsSearch {
    /// Largest radius tried; halved on failure.
    pub eps_max: f64,
    /// Ball samples per candidate radius.
    pub probes: u64,
}

impl Default for EpsSearch {
    fn default() -> Self {
        EpsSearch {
            eps_max: 1.0,
            probes: 4096,
        }
    }
}

/// Rebuilds `tiling` so the tile at `tile_index` carries a tag whose rotation
/// part is the identity to floating point, while fixing the same point as the
/// original tag.
///
/// Fails with `EpsNotFound` when no probed radius around the fixed point has
/// the tile covering the ambient locally, with `FixedPointOutsideAmbient`
/// when the tag's fixed point is not in the ambient body, and with
/// `StepBudgetExceeded` when the tag's rotation does not settle near the
/// identity within the refinement budget.
pub fn normalize_to_homothety(
    tiling: &Tiling,
    tile_index: usize,
    search: EpsSearch,
) -> Result<Tiling, TilingError> {
    let tiles = tiling.tiles();
    if tile_index >= tiles.len() {
        return Err(TilingError::TileIndexOutOfRange {
            index: tile_index,
            len: tiles.len(),
        });
    }
    let tag = tiles[tile_index]
        .similarity_to_ambient
        .clone()
        .ok_or(TilingError::UntaggedTile { index: tile_index })?;
    let ambient = tiling.ambient();
    let x = tag.fixed_point()?;
    if ambient.membership(&x, MEMBERSHIP_TOL) == Membership::Outside {
        return Err(TilingError::FixedPointOutsideAmbient);
    }

    let radius = ambient.bounding_radius_about(&x);
    let eps = find_agreement_radius(ambient, &tiles[tile_index].body, &x, search, radius)?;
    let expansion_ratio = radius / eps;

    // Smallest chain depth whose contracted scale fits in the agreement ball
    // and stays below 1 after the expansion.
    let lambda = tag.scale();
    let target = eps.min(1.0 / expansion_ratio);
    let mut depth: u64 = 1;
    while lambda.powi(depth as i32) >= target {
        depth += 1;
        if depth > 1 << 20 {
            return Err(TilingError::StepBudgetExceeded { steps: 1 << 20 });
        }
    }

    // Refinement doubles the chain exponent, so round the depth up to a power
    // of two, then keep doubling until the rotation's power settles near the
    // identity.
    let mut doublings = 0usize;
    let mut pow: u64 = 1;
    while pow < depth {
        doublings += 1;
        pow *= 2;
    }
    let mut q = tag.rotation().clone();
    for _ in 0..doublings {
        q = &q * &q;
    }
    while max_abs_diff_from_identity(&q) > ROTATION_SETTLE_TOL {
        if doublings >= MAX_DOUBLINGS {
            return Err(TilingError::StepBudgetExceeded {
                steps: MAX_DOUBLINGS,
            });
        }
        doublings += 1;
        q = &q * &q;
    }

    let mut current = tiling.clone();
    for _ in 0..doublings {
        // The refined block lands first and in order, so the designated
        // index is stable across iterations.
        current = iterate_tiling(&current, tile_index)?;
    }

    let chain = current.tiles()[tile_index]
        .similarity_to_ambient
        .clone()
        .expect("designated tag survives refinement");
    let undo = chain.rotation().transpose();
    let translation = &x - (&undo * &x) * expansion_ratio;
    let expansion = Similarity::new(expansion_ratio, undo, translation)?;
    let (tiling, _) = expand_and_clip(&current, tile_index, &expansion, CLIP_BUDGET, CLIP_SEED)?;
    Ok(tiling)
}

/// Applies `map` to every tile. The designated tile is rebuilt as the image
/// of the ambient under `map` composed with its old tag, and keeps that
/// composition as its sole tag; every other tile loses its tag, is clipped
/// back to the ambient, and is dropped if the clip has no interior. Returns
/// the tiling and the designated tile's index in it.
pub(crate) fn expand_and_clip(
    tiling: &Tiling,
    designated: usize,
    map: &Similarity,
    budget: u64,
    seed: u64,
) -> Result<(Tiling, usize), TilingError> {
    let ambient = tiling.ambient();
    let old_tag = tiling.tiles()[designated]
        .similarity_to_ambient
        .as_ref()
        .ok_or(TilingError::UntaggedTile { index: designated })?;
    let new_tag = map.compose(old_tag)?;
    if new_tag.scale() >= 1.0 {
        return Err(TilingError::TagNotContracting {
            index: designated,
            scale: new_tag.scale(),
        });
    }
    let mut tiles = Vec::with_capacity(tiling.tiles().len());
    let mut designated_out = 0;
    for (i, tile) in tiling.tiles().iter().enumerate() {
        if i == designated {
            designated_out = tiles.len();
            tiles.push(Tile::tagged(
                Body::image(new_tag.clone(), ambient.clone())?,
                new_tag.clone(),
            ));
            continue;
        }
        let moved = Body::image(map.clone(), tile.body.clone())?;
        match Body::intersection(
            vec![moved, ambient.clone()],
            Vec::new(),
            budget,
            derive_seed(seed, i as u64),
        ) {
            Ok(piece) => tiles.push(Tile::plain(piece)),
            Err(BodyError::EmptyInterior) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((Tiling::new(ambient.clone(), tiles)?, designated_out))
}

/// Largest probed radius (halving from `search.eps_max`) such that every
/// sampled ball point strictly inside the ambient also lands in the tile.
fn find_agreement_radius(
    ambient: &Body,
    tile: &Body,
    center: &Vector,
    search: EpsSearch,
    radius_cap: f64,
) -> Result<f64, TilingError> {
    // A radius at or above the circumradius would make the later expansion a
    // contraction, so start strictly below it.
    let mut eps = if search.eps_max < radius_cap {
        search.eps_max
    } else {
        radius_cap * 0.5
    };
    for halving in 0..=MAX_HALVINGS {
        let stream_seed = derive_seed(BALL_SEED, halving);
        let mut agrees = true;
        for i in 0..search.probes {
            let mut s = SampleStream::at(stream_seed, i);
            let p = s.point_in_ball(center, eps);
            if ambient.membership(&p, MEMBERSHIP_TOL) == Membership::Inside
                && tile.membership(&p, MEMBERSHIP_TOL) == Membership::Outside
            {
                agrees = false;
                break;
            }
        }
        if agrees {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Err(TilingError::EpsNotFound {
        eps_min: eps,
        probes: search.probes,
    })
}

fn max_abs_diff_from_identity(m: &crate::geom::Matrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::rotated_similar_tile_fixture;
    use crate::geom::vector;

    #[test]
    fn agreement_radius_on_corner_tile_is_half() {
        let t = rotated_similar_tile_fixture().unwrap();
        let x = vector(&[0.0, 0.0]);
        let r = t.ambient().bounding_radius_about(&x);
        let eps =
            find_agreement_radius(t.ambient(), &t.tiles()[0].body, &x, EpsSearch::default(), r)
                .unwrap();
        assert!((eps - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalized_tag_is_a_contracting_homothety_fixing_the_corner() {
        let t = rotated_similar_tile_fixture().unwrap();
        let out = normalize_to_homothety(&t, 0, EpsSearch::default()).unwrap();
        let tag = out.tiles()[0].similarity_to_ambient.clone().unwrap();
        assert!(max_abs_diff_from_identity(tag.rotation()) < 1e-12);
        let ratio = tag.scale();
        assert!(ratio > 0.0 && ratio < 1.0);
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let fixed = tag.fixed_point().unwrap();
        assert!(fixed.norm() < 1e-9);
    }

    #[test]
    fn normalize_rejects_untagged_designation() {
        let t = rotated_similar_tile_fixture().unwrap();
        let err = normalize_to_homothety(&t, 1, EpsSearch::default()).unwrap_err();
        assert!(matches!(err, TilingError::UntaggedTile { index: 1 }));
    }
}
