//! Monte Carlo cover checking.
//!
//! Three statistics over one stream of sampled points: orphans (ambient
//! interior points no tile touches), pairwise overlap (ambient points
//! strictly inside two tiles), and the volume gap between the ambient and
//! the tile sum. Ambient and tile hits are counted on the same points, so
//! the gap measures actual mismatch instead of accumulating independent
//! sampling noise per body. All sampling is counter-indexed, so reports
//! are bitwise reproducible for a given seed regardless of thread count.

use rayon::prelude::*;

use crate::body::Membership;
use crate::geom::DEFAULT_TOL;
use crate::rng::{derive_seed, SampleStream};
use crate::tiling::{Tiling, ValidationReport};

#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub volume_gap: f64,
    pub overlap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            volume_gap: 0.01,
            overlap: 0.01,
        }
    }
}

struct Tally {
    inside: u64,
    tile_hits: u64,
    orphans: u64,
    pairs: Vec<u64>,
}

impl Tally {
    fn zero(k: usize) -> Tally {
        Tally {
            inside: 0,
            tile_hits: 0,
            orphans: 0,
            pairs: vec![0; k * k],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.inside += other.inside;
        self.tile_hits += other.tile_hits;
        self.orphans += other.orphans;
        for (a, b) in self.pairs.iter_mut().zip(other.pairs) {
            *a += b;
        }
        self
    }
}

const CLASSIFY_STREAM: u64 = 1;

/// Classify sampled ambient-interior points against every tile and compare
/// Monte Carlo volumes. `covered` holds when the volume gap and the worst
/// pairwise overlap are below their thresholds and no orphan was seen.
pub fn validate_tiling(
    tiling: &Tiling,
    samples: u64,
    seed: u64,
    thresholds: &Thresholds,
) -> ValidationReport {
    assert!(samples >= 1_000, "need at least 1000 samples");
    let ambient = tiling.ambient();
    let tiles = tiling.tiles();
    let k = tiles.len();

    // Sample the joint box so tile mass sticking out of the ambient still
    // counts toward the tile sum.
    let (mut lo, mut hi) = ambient.bounding_box();
    for tile in tiles {
        let (tlo, thi) = tile.body.bounding_box();
        lo.zip_apply(&tlo, |a, b| *a = a.min(b));
        hi.zip_apply(&thi, |a, b| *a = a.max(b));
    }
    let class_seed = derive_seed(seed, CLASSIFY_STREAM);

    let tally = (0..samples)
        .into_par_iter()
        .fold(
            || Tally::zero(k),
            |mut tally, i| {
                let mut s = SampleStream::at(class_seed, i);
                let x = s.point_in_box(&lo, &hi);
                let mut inside_tiles: Vec<usize> = Vec::new();
                let mut touched = false;
                for (t, tile) in tiles.iter().enumerate() {
                    match tile.body.membership(&x, DEFAULT_TOL) {
                        Membership::Inside => {
                            touched = true;
                            inside_tiles.push(t);
                        }
                        Membership::Boundary => touched = true,
                        Membership::Outside => {}
                    }
                }
                tally.tile_hits += inside_tiles.len() as u64;
                if ambient.membership(&x, DEFAULT_TOL) != Membership::Inside {
                    return tally;
                }
                tally.inside += 1;
                if !touched {
                    tally.orphans += 1;
                }
                for (a_pos, &a) in inside_tiles.iter().enumerate() {
                    for &b in &inside_tiles[a_pos + 1..] {
                        tally.pairs[a * k + b] += 1;
                    }
                }
                tally
            },
        )
        .reduce(|| Tally::zero(k), Tally::merge);

    let max_overlap_fraction = if tally.inside == 0 {
        0.0
    } else {
        let worst = tally.pairs.iter().copied().max().unwrap_or(0);
        worst as f64 / tally.inside as f64
    };

    let volume_gap = if tally.inside > 0 {
        (tally.inside as f64 - tally.tile_hits as f64).abs() / tally.inside as f64
    } else {
        f64::INFINITY
    };

    ValidationReport {
        covered: volume_gap < thresholds.volume_gap
            && tally.orphans == 0
            && max_overlap_fraction < thresholds.overlap,
        volume_gap,
        max_overlap_fraction,
        orphan_points: tally.orphans as usize,
        proper: k >= 2,
        seed,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{axis_box, quarter_square_tiling, unit_square, Corner};
    use crate::tiling::Tile;

    #[test]
    fn quarter_square_passes_at_default_thresholds() {
        let t = quarter_square_tiling(Corner::BottomLeft).unwrap();
        let report = validate_tiling(&t, 20_000, 11, &Thresholds::default());
        assert!(report.covered, "report: {report:?}");
        assert!(report.proper);
        assert_eq!(report.orphan_points, 0);
        assert!(report.volume_gap < 0.01);
        assert!(report.max_overlap_fraction < 0.01);
        assert_eq!(report.seed, 11);
        assert_eq!(report.samples, 20_000);
    }

    #[test]
    fn a_missing_quarter_shows_up_as_orphans_and_gap() {
        let square = unit_square();
        let tiles = vec![
            Tile::plain(axis_box(&[0.0, 0.0], &[0.5, 0.5]).unwrap()),
            Tile::plain(axis_box(&[0.5, 0.0], &[1.0, 0.5]).unwrap()),
            Tile::plain(axis_box(&[0.0, 0.5], &[0.5, 1.0]).unwrap()),
        ];
        let t = Tiling::new(square, tiles).unwrap();
        let report = validate_tiling(&t, 20_000, 5, &Thresholds::default());
        assert!(!report.covered);
        assert!(report.orphan_points > 4_000);
        assert!(report.volume_gap > 0.2);
    }

    #[test]
    fn duplicated_tiles_show_up_as_overlap() {
        let square = unit_square();
        let half = axis_box(&[0.0, 0.0], &[1.0, 0.5]).unwrap();
        let top = axis_box(&[0.0, 0.5], &[1.0, 1.0]).unwrap();
        let t = Tiling::new(
            square,
            vec![
                Tile::plain(half.clone()),
                Tile::plain(half),
                Tile::plain(top),
            ],
        )
        .unwrap();
        let report = validate_tiling(&t, 20_000, 9, &Thresholds::default());
        assert!(!report.covered);
        assert!(report.max_overlap_fraction > 0.4);
        assert_eq!(report.orphan_points, 0);
    }

    #[test]
    fn a_single_tile_covers_but_is_not_proper() {
        let square = unit_square();
        let t = Tiling::new(square.clone(), vec![Tile::plain(square)]).unwrap();
        let report = validate_tiling(&t, 10_000, 1, &Thresholds::default());
        assert!(report.covered);
        assert!(!report.proper);
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let t = quarter_square_tiling(Corner::TopLeft).unwrap();
        let baseline = validate_tiling(&t, 5_000, 42, &Thresholds::default());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| validate_tiling(&t, 5_000, 42, &Thresholds::default()));
        assert_eq!(baseline.volume_gap.to_bits(), serial.volume_gap.to_bits());
        assert_eq!(
            baseline.max_overlap_fraction.to_bits(),
            serial.max_overlap_fraction.to_bits()
        );
        assert_eq!(baseline.orphan_points, serial.orphan_points);
    }
}
