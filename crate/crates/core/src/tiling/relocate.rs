//! Moving the designated fixed point of a family of tilings.
//!
//! Each input tiling contributes an anchor: its first tile tagged by a
//! contracting homothety. Grafting one tiling into another at a tagged tile
//! composes the two homotheties, and the composition's fixed point lands
//! between the two anchors. Greedy composition therefore walks the
//! designated fixed point toward any target in the convex hull of the
//! anchor points.

use crate::geom::{Matrix, Similarity, Vector};
use crate::tiling::normalize::expand_and_clip;
use crate::tiling::refine::graft;
use crate::tiling::{body_eq_or_agrees, Tiling, TilingError};

const CORRECTION_SEED: u64 = 0x0e10_ca7e;
const CORRECTION_BUDGET: u64 = 4096;
const COLLINEAR_TOL: f64 = 1e-9;
const EXACT_SUBSET_LIMIT: usize = 10;
const FRANK_WOLFE_ITERS: usize = 512;

/// Result of a relocation: the rebuilt tiling, the index of its designated
/// tile, the number of composition steps spent, and the distance from the
/// designated tag's fixed point to the requested target.
#[derive(Debug, Clone)]
pub struct Relocation {
    pub tiling: Tiling,
    pub designated: usize,
    pub steps: usize,
    pub distance: f64,
}

struct Anchor {
    tiling: usize,
    tile: usize,
    tag: Similarity,
    fixed: Vector,
}

/// Rebuilds one of the input tilings so its designated tile is tagged by a
/// contracting homothety whose fixed point lies within `eps` of `target`.
///
/// The target must lie in the convex hull of the anchor fixed points. Every
/// tiling must tile the same ambient body and contribute at least one tile
/// tagged by a contracting homothety.
pub fn move_fixed_point(
    tilings: &[Tiling],
    target: &Vector,
    eps: f64,
    max_steps: usize,
) -> Result<Relocation, TilingError> {
    if tilings.is_empty() {
        return Err(TilingError::NoTiles);
    }
    assert!(eps > 0.0, "eps must be positive");
    let ambient = tilings[0].ambient();
    for (i, t) in tilings.iter().enumerate().skip(1) {
        if t.dim() != tilings[0].dim() || !body_eq_or_agrees(t.ambient(), ambient) {
            return Err(TilingError::AmbientMismatch { index: i });
        }
    }

    let mut anchors = Vec::with_capacity(tilings.len());
    for (i, t) in tilings.iter().enumerate() {
        let found = t.tiles().iter().enumerate().find(|(_, tile)| {
            tile.similarity_to_ambient
                .as_ref()
                .is_some_and(|g| g.is_homothety() && g.scale() < 1.0)
        });
        let (tile, tagged) = found.ok_or(TilingError::UntaggedTiling)?;
        let tag = tagged
            .similarity_to_ambient
            .clone()
            .expect("anchor tile is tagged");
        let fixed = tag.fixed_point()?;
        anchors.push(Anchor {
            tiling: i,
            tile,
            tag,
            fixed,
        });
    }

    let points: Vec<Vector> = anchors.iter().map(|a| a.fixed.clone()).collect();
    let hull_gap = hull_distance(&points, target);
    if hull_gap > eps.max(COLLINEAR_TOL * (1.0 + target.norm())) {
        return Err(TilingError::TargetOutsideHull);
    }

    let (start, start_dist) = anchors
        .iter()
        .enumerate()
        .map(|(j, a)| (j, (&a.fixed - target).norm()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("at least one anchor");
    if start_dist <= eps {
        return Ok(Relocation {
            tiling: tilings[start].clone(),
            designated: anchors[start].tile,
            steps: 0,
            distance: start_dist,
        });
    }

    let mut cur = tilings[start].clone();
    let mut designated = anchors[start].tile;
    let mut cur_tag = anchors[start].tag.clone();
    let mut cur_fixed = anchors[start].fixed.clone();
    let mut cur_dist = start_dist;
    let mut steps = 0usize;

    while steps < max_steps {
        // The exact landing move applies as soon as the walk has brought the
        // fixed point collinearly past the target; take it over more greedy
        // creep, it finishes in one composition.
        if let Some((tiling, idx, distance)) =
            correct_radially(&cur, designated, &cur_tag, &cur_fixed, &anchors, target)?
        {
            if distance <= eps {
                return Ok(Relocation {
                    tiling,
                    designated: idx,
                    steps: steps + 1,
                    distance,
                });
            }
        }

        let mut best: Option<(f64, f64, usize, u8, Similarity, Vector)> = None;
        for (j, anchor) in anchors.iter().enumerate() {
            for order in 0..2u8 {
                let composed = if order == 0 {
                    cur_tag.compose(&anchor.tag)?
                } else {
                    anchor.tag.compose(&cur_tag)?
                };
                let fixed = match composed.fixed_point() {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let dist = (&fixed - target).norm();
                let ratio = composed.scale();
                let better = match &best {
                    None => true,
                    Some((bd, br, bj, bo, _, _)) => (dist, ratio, j, order) < (*bd, *br, *bj, *bo),
                };
                if better {
                    best = Some((dist, ratio, j, order, composed, fixed));
                }
            }
        }
        let (bdist, _, bj, border, btag, bfixed) =
            best.ok_or(TilingError::StepBudgetExceeded { steps })?;
        // A step that holds the distance while shrinking the ratio still
        // helps: finer contractions unlock moves the coarse ones overshoot.
        let tightens =
            bdist <= cur_dist + COLLINEAR_TOL * (1.0 + cur_dist) && btag.scale() < cur_tag.scale();
        if bdist < cur_dist || tightens {
            let anchor = &anchors[bj];
            let (tiles, next_designated) = if border == 0 {
                (
                    graft(&cur, designated, &tilings[anchor.tiling], &cur_tag)?,
                    anchor.tile,
                )
            } else {
                (
                    graft(&tilings[anchor.tiling], anchor.tile, &cur, &anchor.tag)?,
                    designated,
                )
            };
            cur = Tiling::new(ambient.clone(), tiles)?;
            designated = next_designated;
            cur_tag = btag;
            cur_fixed = bfixed;
            cur_dist = bdist;
            steps += 1;
            if cur_dist <= eps {
                return Ok(Relocation {
                    tiling: cur,
                    designated,
                    steps,
                    distance: cur_dist,
                });
            }
        } else {
            match correct_radially(&cur, designated, &cur_tag, &cur_fixed, &anchors, target)? {
                Some((tiling, idx, distance)) => {
                    return Ok(Relocation {
                        tiling,
                        designated: idx,
                        steps: steps + 1,
                        distance,
                    });
                }
                None => return Err(TilingError::StepBudgetExceeded { steps }),
            }
        }
    }
    Err(TilingError::StepBudgetExceeded { steps: max_steps })
}

/// Exact landing move for a stalled walk: when the target sits on the ray
/// from some anchor through the current fixed point, at or beyond it, an
/// expansion about that anchor composed with the current tag fixes the
/// target exactly and stays contracting.
fn correct_radially(
    cur: &Tiling,
    designated: usize,
    cur_tag: &Similarity,
    cur_fixed: &Vector,
    anchors: &[Anchor],
    target: &Vector,
) -> Result<Option<(Tiling, usize, f64)>, TilingError> {
    if !cur_tag.is_homothety() {
        return Ok(None);
    }
    let lambda = cur_tag.scale();
    for anchor in anchors {
        let u = cur_fixed - &anchor.fixed;
        let v = target - &anchor.fixed;
        let a = u.norm();
        let b = v.norm();
        if a <= COLLINEAR_TOL || b < a {
            continue;
        }
        let uhat = &u / a;
        let along = v.dot(&uhat);
        if along <= 0.0 {
            continue;
        }
        let off = (&v - &uhat * along).norm();
        if off > COLLINEAR_TOL * (1.0 + b) {
            continue;
        }
        // rho >= 1 since b >= a, and rho * lambda < 1 since a > 0
        let rho = b / (a + lambda * (b - a));
        let correction = Similarity::homothety(rho, &anchor.fixed)?;
        let (out, idx) = expand_and_clip(
            cur,
            designated,
            &correction,
            CORRECTION_BUDGET,
            CORRECTION_SEED,
        )?;
        let new_tag = out.tiles()[idx]
            .similarity_to_ambient
            .clone()
            .expect("designated keeps its tag through the clip");
        let distance = (new_tag.fixed_point()? - target).norm();
        return Ok(Some((out, idx, distance)));
    }
    Ok(None)
}

fn hull_distance(points: &[Vector], target: &Vector) -> f64 {
    if points.len() <= EXACT_SUBSET_LIMIT {
        exact_hull_distance(points, target)
    } else {
        frank_wolfe_distance(points, target)
    }
}

/// Exact distance to the convex hull by solving the equality-constrained
/// least squares on every subset of points. A subset whose optimum needs a
/// negative weight is skipped; some affinely independent subset attains the
/// true projection.
fn exact_hull_distance(points: &[Vector], target: &Vector) -> f64 {
    let k = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s = idx.len();
        let mut m = Matrix::zeros(s + 1, s + 1);
        let mut rhs = Vector::zeros(s + 1);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                m[(r, c)] = 2.0 * points[i].dot(&points[j]);
            }
            m[(r, s)] = 1.0;
            m[(s, r)] = 1.0;
            rhs[r] = 2.0 * points[i].dot(target);
        }
        rhs[s] = 1.0;
        let Some(w) = m.lu().solve(&rhs) else {
            continue;
        };
        if (0..s).any(|r| w[r] < -1e-9) {
            continue;
        }
        let mut x = Vector::zeros(target.len());
        for (r, &i) in idx.iter().enumerate() {
            x += &points[i] * w[r];
        }
        best = best.min((x - target).norm());
    }
    best
}

fn frank_wolfe_distance(points: &[Vector], target: &Vector) -> f64 {
    let mut x = points[0].clone();
    for _ in 0..FRANK_WOLFE_ITERS {
        let grad = &x - target;
        let j = (0..points.len())
            .min_by(|&a, &b| points[a].dot(&grad).total_cmp(&points[b].dot(&grad)))
            .expect("points nonempty");
        let d = &points[j] - &x;
        let dd = d.norm_squared();
        if dd < 1e-30 {
            break;
        }
        let gamma = ((target - &x).dot(&d) / dd).clamp(0.0, 1.0);
        if gamma <= 0.0 {
            break;
        }
        x += d * gamma;
    }
    (x - target).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Body;
    use crate::fixtures::{axis_box, quarter_square_tiling, unit_square, Corner};
    use crate::geom::vector;
    use crate::tiling::Tile;

    fn segment_pair() -> Vec<Tiling> {
        vec![
            quarter_square_tiling(Corner::BottomLeft).unwrap(),
            quarter_square_tiling(Corner::TopRight).unwrap(),
        ]
    }

    #[test]
    fn hull_distance_is_zero_inside_and_positive_outside() {
        let pts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 1.0])];
        assert!(exact_hull_distance(&pts, &vector(&[0.25, 0.25])) < 1e-12);
        let off = exact_hull_distance(&pts, &vector(&[1.0, 0.0]));
        assert!((off - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let fw = frank_wolfe_distance(&pts, &vector(&[0.25, 0.25]));
        assert!(fw < 1e-12);
    }

    #[test]
    fn target_at_anchor_needs_no_steps() {
        let ts = segment_pair();
        let r = move_fixed_point(&ts, &vector(&[1.0, 1.0]), 1e-6, 60).unwrap();
        assert_eq!(r.steps, 0);
        assert!(r.distance < 1e-12);
    }

    #[test]
    fn one_third_point_lands_exactly_in_one_step() {
        let ts = segment_pair();
        let third = 1.0 / 3.0;
        let r = move_fixed_point(&ts, &vector(&[third, third]), 1e-9, 60).unwrap();
        assert_eq!(r.steps, 1);
        assert!(r.distance < 1e-12);
        let tag = r.tiling.tiles()[r.designated]
            .similarity_to_ambient
            .clone()
            .unwrap();
        assert!(tag.is_homothety());
        assert!((tag.fixed_point().unwrap() - vector(&[third, third])).norm() < 1e-12);
    }

    #[test]
    fn generic_segment_target_converges_within_budget() {
        let ts = segment_pair();
        let target = vector(&[0.77, 0.77]);
        let r = move_fixed_point(&ts, &target, 1e-3, 60).unwrap();
        assert!(r.steps <= 60);
        assert!(r.distance <= 1e-3);
        let tag = r.tiling.tiles()[r.designated]
            .similarity_to_ambient
            .clone()
            .unwrap();
        assert!(tag.is_homothety() && tag.scale() < 1.0);
    }

    #[test]
    fn target_off_the_segment_is_rejected() {
        let ts = segment_pair();
        let err = move_fixed_point(&ts, &vector(&[0.9, 0.1]), 1e-3, 60).unwrap_err();
        assert!(matches!(err, TilingError::TargetOutsideHull));
    }

    #[test]
    fn radial_correction_lands_exactly_on_target() {
        let g = Similarity::homothety(0.5, &vector(&[0.25, 0.25])).unwrap();
        let square = unit_square();
        let tiles = vec![
            Tile::tagged(Body::image(g.clone(), square.clone()).unwrap(), g.clone()),
            Tile::plain(axis_box(&[0.0, 0.0], &[0.125, 1.0]).unwrap()),
            Tile::plain(axis_box(&[0.625, 0.0], &[1.0, 1.0]).unwrap()),
            Tile::plain(axis_box(&[0.125, 0.0], &[0.625, 0.125]).unwrap()),
            Tile::plain(axis_box(&[0.125, 0.625], &[0.625, 1.0]).unwrap()),
        ];
        let cur = Tiling::new(square, tiles).unwrap();
        let anchors = vec![Anchor {
            tiling: 0,
            tile: 0,
            tag: Similarity::homothety(0.5, &vector(&[0.0, 0.0])).unwrap(),
            fixed: vector(&[0.0, 0.0]),
        }];
        let fixed = g.fixed_point().unwrap();
        let target = vector(&[0.5, 0.5]);
        let (out, idx, distance) = correct_radially(&cur, 0, &g, &fixed, &anchors, &target)
            .unwrap()
            .expect("correction applies on the ray");
        assert!(distance < 1e-12);
        let tag = out.tiles()[idx].similarity_to_ambient.clone().unwrap();
        assert!((tag.scale() - 2.0 / 3.0).abs() < 1e-12);
        assert!((tag.fixed_point().unwrap() - target).norm() < 1e-12);
    }
}
