//! Refinement operations: iterating a tagged tile and meeting two tilings.

use crate::body::{Body, BodyError};
use crate::geom::Similarity;
use crate::rng::derive_seed;
use crate::tiling::{body_eq_or_agrees, canonical, Tile, Tiling, TilingError};

/// Replace tile `at` of `outer` by the image of the whole tiling `inner`
/// under `map`. Tags compose: a tile of `inner` tagged `g` becomes a tile
/// tagged `map . g`, which still maps the common ambient onto it. The
/// mapped block comes first in the result, at the same indices as in
/// `inner`.
pub(crate) fn graft(
    outer: &Tiling,
    at: usize,
    inner: &Tiling,
    map: &Similarity,
) -> Result<Vec<Tile>, TilingError> {
    let mut tiles = Vec::with_capacity(inner.tiles().len() + outer.tiles().len() - 1);
    for tile in inner.tiles() {
        let body = canonical(&Body::image(map.clone(), tile.body.clone())?);
        let tag = tile
            .similarity_to_ambient
            .as_ref()
            .map(|g| map.compose(g))
            .transpose()?;
        tiles.push(Tile {
            body,
            similarity_to_ambient: tag,
        });
    }
    for (j, tile) in outer.tiles().iter().enumerate() {
        if j != at {
            tiles.push(tile.clone());
        }
    }
    Ok(tiles)
}

/// Replace the tagged tile L by the image of the whole tiling under its
/// own tag: the result covers the same ambient with 2|t| - 1 tiles, and
/// the copy of L inside the image block carries the squared tag.
pub fn iterate_tiling(tiling: &Tiling, tile_index: usize) -> Result<Tiling, TilingError> {
    let tiles = tiling.tiles();
    if tile_index >= tiles.len() {
        return Err(TilingError::TileIndexOutOfRange {
            index: tile_index,
            len: tiles.len(),
        });
    }
    let map = tiles[tile_index]
        .similarity_to_ambient
        .clone()
        .ok_or(TilingError::UntaggedTile { index: tile_index })?;
    let new_tiles = graft(tiling, tile_index, tiling, &map)?;
    Tiling::new(tiling.ambient().clone(), new_tiles)
}

/// Pairwise intersection of two tilings of a common ambient (or of two
/// overlapping ambients; the result tiles the intersection).
///
/// Pieces are intersections-as-oracles, flattened to halfspace lists when
/// both factors are polytopes. A piece whose interior search fails within
/// `interior_samples` probes is dropped as a lower-dimensional sliver. A
/// tag survives only when the other factor's tile is the whole meet
/// ambient, so the tagged tile passes through intact.
pub fn meet_tilings(
    a: &Tiling,
    b: &Tiling,
    interior_samples: u64,
    seed: u64,
) -> Result<Tiling, TilingError> {
    if a.dim() != b.dim() {
        return Err(TilingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let ambient = if body_eq_or_agrees(a.ambient(), b.ambient()) {
        a.ambient().clone()
    } else {
        match Body::intersection(
            vec![a.ambient().clone(), b.ambient().clone()],
            vec![],
            interior_samples,
            derive_seed(seed, u64::MAX),
        ) {
            Ok(body) => body,
            Err(BodyError::EmptyInterior) => return Err(TilingError::EmptyIntersection),
            Err(e) => return Err(e.into()),
        }
    };

    let b_len = b.tiles().len() as u64;
    let mut tiles = Vec::new();
    for (i, p) in a.tiles().iter().enumerate() {
        for (j, q) in b.tiles().iter().enumerate() {
            let piece_seed = derive_seed(seed, i as u64 * b_len + j as u64);
            let piece = match Body::intersection(
                vec![p.body.clone(), q.body.clone()],
                vec![],
                interior_samples,
                piece_seed,
            ) {
                Ok(body) => body,
                Err(BodyError::EmptyInterior) => continue,
                Err(e) => return Err(e.into()),
            };
            let tag = preserved_tag(p, q, &ambient, &piece)
                .or_else(|| preserved_tag(q, p, &ambient, &piece));
            tiles.push(Tile {
                body: piece,
                similarity_to_ambient: tag,
            });
        }
    }
    if tiles.is_empty() {
        return Err(TilingError::EmptyIntersection);
    }
    Tiling::new(ambient, tiles)
}

fn preserved_tag(tagged: &Tile, other: &Tile, ambient: &Body, piece: &Body) -> Option<Similarity> {
    let tag = tagged.similarity_to_ambient.as_ref()?;
    if body_eq_or_agrees(&other.body, ambient) && body_eq_or_agrees(piece, &tagged.body) {
        Some(tag.clone())
    } else {
        None
    }
}
