//! Similarity tilings of convex bodies.
//!
//! A tiling splits an ambient body into finitely many convex tiles; some
//! tiles carry a contracting similarity that maps the ambient body onto
//! them. This crate provides the geometry kernel (`geom`), body oracles
//! (`body`), the tiling calculus with its refinement, normalization,
//! fixed-point relocation, and slicing operations (`tiling`), canonical
//! example constructions (`fixtures`), and a stable JSON wire format
//! (`wire`).

pub mod body;
pub mod fixtures;
pub mod geom;
pub mod rng;
pub mod tiling;
pub mod wire;

pub use body::{Body, BodyError, ExtremalEstimate, Membership, VolumeEstimate};
pub use geom::{GeomError, Halfspace, Hyperplane, Matrix, Similarity, SliceChart, Vector};
pub use tiling::{
    iterate_tiling, meet_tilings, move_fixed_point, normalize_to_homothety, slice_tiling,
    tip_simplex, tip_simplex_with_tags, validate_tiling, EpsSearch, Relocation, Thresholds, Tile,
    Tiling, TilingError, TipSimplex, ValidationReport,
};
pub use wire::{tiling_from_json, tiling_to_json, WireError};
