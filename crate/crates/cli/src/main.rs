//! Command line front end.
//!
//! Every command reads and writes tilings in the JSON interchange format and
//! prints exactly one JSON document to standard output. Exit codes: 0 on
//! success, 1 when a command could not run (bad flags, unreadable or
//! malformed files), 2 when it ran and judged the input invalid (uncovered
//! or improper tiling, empty slice, missing nondegeneracy under
//! `--require-nondegenerate`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use simtile_core::fixtures::{
    cone_spindle_tiling, quarter_square_tiling, rotated_similar_tile_fixture, Corner,
};
use simtile_core::rng::{derive_seed, SampleStream};
use simtile_core::wire;
use simtile_core::{
    iterate_tiling, meet_tilings, move_fixed_point, normalize_to_homothety, slice_tiling,
    tip_simplex_with_tags, validate_tiling, Body, EpsSearch, Hyperplane, Membership, Thresholds,
    Tiling, TilingError, Vector,
};

const CLOUD_DIRECTION_SEED: u64 = 0xc10d;

#[derive(Parser)]
#[command(
    name = "simtile",
    version,
    about = "Similarity tilings of convex bodies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ready-made example tiling
    Example {
        /// cone-spindle, quarter-square, or rotated-fixture
        kind: String,
        /// Ambient dimension (cone-spindle only)
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Tagged corner for quarter-square: bl, br, tl, or tr
        #[arg(long, default_value = "bl")]
        corner: Corner,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Monte Carlo cover check of a tiling file
    Validate {
        path: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Covered requires |vol K - sum of tiles| / vol K below this
        #[arg(long, default_value_t = 0.01)]
        volume_gap: f64,
        /// Covered requires the worst pairwise overlap fraction below this
        #[arg(long, default_value_t = 0.01)]
        overlap: f64,
    },
    /// Replace the tagged tile by the image of the whole tiling under its tag
    Iterate {
        path: PathBuf,
        #[arg(long)]
        tile: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Pairwise intersection of two tilings
    Meet {
        a: PathBuf,
        b: PathBuf,
        /// Interior-point probes per piece before it is dropped as a sliver
        #[arg(long, default_value_t = 4096)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rebuild a tiling so the designated tile's tag is a pure homothety
    Normalize {
        path: PathBuf,
        #[arg(long)]
        tile: usize,
        /// Largest agreement radius tried around the fixed point
        #[arg(long, default_value_t = 1.0)]
        eps_max: f64,
        /// Ball samples per candidate radius
        #[arg(long, default_value_t = 4096)]
        probes: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compose tilings until a homothetic tile fixes the target point
    MoveFixpoint {
        #[arg(num_args = 1.., required = true)]
        paths: Vec<PathBuf>,
        /// Target point, comma-separated coordinates
        #[arg(long)]
        target: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 60)]
        max_steps: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fixed points of the designated tiles and their affine hull dimension
    TipSimplex {
        #[arg(num_args = 1.., required = true)]
        paths: Vec<PathBuf>,
        /// Designated tile index per file, comma-separated; default first tagged
        #[arg(long)]
        tags: Option<String>,
        /// Exit 2 unless the points span a simplex of full count
        #[arg(long)]
        require_nondegenerate: bool,
    },
    /// Cut a tiling with a hyperplane and report the induced chart tiling
    Slice {
        path: PathBuf,
        /// Hyperplane normal, comma-separated; normalized internally
        #[arg(long)]
        normal: String,
        #[arg(long)]
        offset: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write boundary sample points per slice tile, one JSON line each
        #[arg(long)]
        cloud: Option<PathBuf>,
        /// Boundary points per tile in the cloud dump
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Interior sampling budget for locating slice representatives
        #[arg(long, default_value_t = 4096)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Support-witness clustering: does the body look like a polytope
    Extremal {
        path: PathBuf,
        /// Analyze this tile's body instead of the ambient body
        #[arg(long)]
        tile: Option<usize>,
        #[arg(long)]
        directions: usize,
        /// Cluster radius for merging nearby witnesses
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Example {
            kind,
            dim,
            corner,
            output,
        } => cmd_example(&kind, dim, corner, &output),
        Command::Validate {
            path,
            samples,
            seed,
            volume_gap,
            overlap,
        } => cmd_validate(&path, samples, seed, volume_gap, overlap),
        Command::Iterate { path, tile, output } => cmd_iterate(&path, tile, &output),
        Command::Meet {
            a,
            b,
            samples,
            seed,
            output,
        } => cmd_meet(&a, &b, samples, seed, &output),
        Command::Normalize {
            path,
            tile,
            eps_max,
            probes,
            output,
        } => cmd_normalize(&path, tile, eps_max, probes, &output),
        Command::MoveFixpoint {
            paths,
            target,
            eps,
            max_steps,
            output,
        } => cmd_move_fixpoint(&paths, &target, eps, max_steps, &output),
        Command::TipSimplex {
            paths,
            tags,
            require_nondegenerate,
        } => cmd_tip_simplex(&paths, tags.as_deref(), require_nondegenerate),
        Command::Slice {
            path,
            normal,
            offset,
            output,
            cloud,
            resolution,
            samples,
            seed,
        } => cmd_slice(
            &path,
            &normal,
            offset,
            output.as_deref(),
            cloud.as_deref(),
            resolution,
            samples,
            seed,
        ),
        Command::Extremal {
            path,
            tile,
            directions,
            delta,
            seed,
        } => cmd_extremal(&path, tile, directions, delta, seed),
    }
}

fn read_tiling(path: &Path) -> Result<Tiling> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    wire::tiling_from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_tiling(path: &Path, tiling: &Tiling) -> Result<()> {
    fs::write(path, wire::tiling_to_json(tiling))
        .with_context(|| format!("writing {}", path.display()))
}

fn print_doc(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn parse_coords(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("{what}: {part:?} is not a number"))
        })
        .collect()
}

fn vec_json(v: &Vector) -> serde_json::Value {
    json!(v.iter().copied().collect::<Vec<f64>>())
}

fn tagged_indices(tiling: &Tiling) -> Vec<usize> {
    tiling
        .tiles()
        .iter()
        .enumerate()
        .filter(|(_, tile)| tile.similarity_to_ambient.is_some())
        .map(|(i, _)| i)
        .collect()
}

fn cmd_example(kind: &str, dim: usize, corner: Corner, output: &Path) -> Result<u8> {
    let (name, tiling) = match kind {
        "cone-spindle" => {
            if dim < 3 {
                bail!("cone-spindle needs --dim of at least 3");
            }
            (format!("cone_spindle_{dim}"), cone_spindle_tiling(dim)?)
        }
        "quarter-square" => {
            let suffix = match corner {
                Corner::BottomLeft => "bl",
                Corner::BottomRight => "br",
                Corner::TopLeft => "tl",
                Corner::TopRight => "tr",
            };
            (
                format!("quarter_square_{suffix}"),
                quarter_square_tiling(corner)?,
            )
        }
        "rotated-fixture" => (
            "rotated_fixture".to_string(),
            rotated_similar_tile_fixture()?,
        ),
        other => {
            bail!("unknown example {other:?}; use cone-spindle, quarter-square, or rotated-fixture")
        }
    };
    write_tiling(output, &tiling)?;
    print_doc(&json!({
        "name": name,
        "dim": tiling.dim(),
        "tile_count": tiling.tiles().len(),
        "tagged_tiles": tagged_indices(&tiling),
        "written": output.display().to_string(),
    }))?;
    Ok(0)
}

fn cmd_validate(path: &Path, samples: u64, seed: u64, volume_gap: f64, overlap: f64) -> Result<u8> {
    let tiling = read_tiling(path)?;
    let thresholds = Thresholds {
        volume_gap,
        overlap,
    };
    let report = validate_tiling(&tiling, samples, seed, &thresholds);
    print_doc(&serde_json::to_value(report)?)?;
    Ok(if report.covered && report.proper {
        0
    } else {
        2
    })
}

fn cmd_iterate(path: &Path, tile: usize, output: &Path) -> Result<u8> {
    let tiling = read_tiling(path)?;
    let refined = iterate_tiling(&tiling, tile)?;
    write_tiling(output, &refined)?;
    print_doc(&json!({
        "tile_count": refined.tiles().len(),
        "tagged_tiles": tagged_indices(&refined),
        "written": output.display().to_string(),
    }))?;
    Ok(0)
}

fn cmd_meet(a: &Path, b: &Path, samples: u64, seed: u64, output: &Path) -> Result<u8> {
    let left = read_tiling(a)?;
    let right = read_tiling(b)?;
    let met = meet_tilings(&left, &right, samples, seed)?;
    write_tiling(output, &met)?;
    print_doc(&json!({
        "tile_count": met.tiles().len(),
        "tagged_tiles": tagged_indices(&met),
        "written": output.display().to_string(),
    }))?;
    Ok(0)
}

fn cmd_normalize(path: &Path, tile: usize, eps_max: f64, probes: u64, output: &Path) -> Result<u8> {
    let tiling = read_tiling(path)?;
    if let Some(tag) = tiling
        .tiles()
        .get(tile)
        .and_then(|t| t.similarity_to_ambient.as_ref())
    {
        let fixed = tag.fixed_point()?;
        if tiling.ambient().membership(&fixed, 1e-9) == Membership::Inside {
            eprintln!(
                "note: the tag's fixed point lies strictly inside the ambient body; \
                 the construction still runs"
            );
        }
    }
    let search = EpsSearch { eps_max, probes };
    let normalized = normalize_to_homothety(&tiling, tile, search)?;
    let homothetic = tagged_indices(&normalized)
        .first()
        .copied()
        .context("normalized tiling has no tagged tile")?;
    let tag = normalized.tiles()[homothetic]
        .similarity_to_ambient
        .clone()
        .expect("index comes from the tagged list");
    let dim = normalized.dim();
    let identity = simtile_core::Matrix::identity(dim, dim);
    write_tiling(output, &normalized)?;
    print_doc(&json!({
        "tile_count": normalized.tiles().len(),
        "homothetic_tile": homothetic,
        "ratio": tag.scale(),
        "rotation_deviation": (tag.rotation() - identity).amax(),
        "fixed_point": vec_json(&tag.fixed_point()?),
        "written": output.display().to_string(),
    }))?;
    Ok(0)
}

fn cmd_move_fixpoint(
    paths: &[PathBuf],
    target: &str,
    eps: f64,
    max_steps: usize,
    output: &Path,
) -> Result<u8> {
    let tilings = paths
        .iter()
        .map(|p| read_tiling(p))
        .collect::<Result<Vec<_>>>()?;
    let target = Vector::from_vec(parse_coords(target, "--target")?);
    let relocation = move_fixed_point(&tilings, &target, eps, max_steps)?;
    let tag = relocation.tiling.tiles()[relocation.designated]
        .similarity_to_ambient
        .clone()
        .expect("relocation designates a tagged tile");
    write_tiling(output, &relocation.tiling)?;
    print_doc(&json!({
        "steps": relocation.steps,
        "distance": relocation.distance,
        "designated": relocation.designated,
        "ratio": tag.scale(),
        "fixed_point": vec_json(&tag.fixed_point()?),
        "tile_count": relocation.tiling.tiles().len(),
        "written": output.display().to_string(),
    }))?;
    Ok(0)
}

fn cmd_tip_simplex(paths: &[PathBuf], tags: Option<&str>, require: bool) -> Result<u8> {
    let tilings = paths
        .iter()
        .map(|p| read_tiling(p))
        .collect::<Result<Vec<_>>>()?;
    let indices = tags
        .map(|list| -> Result<Vec<usize>> {
            list.split(',')
                .map(|part| {
                    part.trim()
                        .parse::<usize>()
                        .with_context(|| format!("--tags: {part:?} is not an index"))
                })
                .collect()
        })
        .transpose()?;
    let tip = tip_simplex_with_tags(&tilings, indices.as_deref())?;
    print_doc(&json!({
        "points": tip.points.iter().map(vec_json).collect::<Vec<_>>(),
        "affine_dim": tip.affine_dim,
        "nondegenerate_for": tip.nondegenerate_for,
    }))?;
    Ok(if require && tip.nondegenerate_for.is_none() {
        2
    } else {
        0
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_slice(
    path: &Path,
    normal: &str,
    offset: f64,
    output: Option<&Path>,
    cloud: Option<&Path>,
    resolution: usize,
    samples: u64,
    seed: u64,
) -> Result<u8> {
    let tiling = read_tiling(path)?;
    let normal = Vector::from_vec(parse_coords(normal, "--normal")?);
    let plane = Hyperplane::new(normal, offset)?;
    let (chart, sliced) = match slice_tiling(&tiling, &plane, samples, seed) {
        Ok(pair) => pair,
        Err(e @ (TilingError::EmptySlice | TilingError::DegenerateSlice)) => {
            eprintln!("{e}");
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = output {
        write_tiling(path, &sliced)?;
    }
    if let Some(path) = cloud {
        write_cloud(path, &sliced, resolution, seed)?;
    }
    print_doc(&json!({
        "chart": serde_json::to_value(wire::chart_repr(&chart))?,
        "tile_count": sliced.tiles().len(),
        "tagged_tiles": tagged_indices(&sliced),
        "proper": sliced.tiles().len() >= 2,
        "written": output.map(|p| p.display().to_string()),
        "cloud": cloud.map(|p| p.display().to_string()),
    }))?;
    Ok(0)
}

/// Boundary points of every slice tile: support witnesses of evenly spread
/// directions, one JSON record per line. Witnesses of a polytope tile pile
/// up on its vertices; witnesses of a curved tile trace its outline.
fn write_cloud(path: &Path, sliced: &Tiling, resolution: usize, seed: u64) -> Result<()> {
    let dim = sliced.dim();
    let mut out = String::new();
    for (index, tile) in sliced.tiles().iter().enumerate() {
        for k in 0..resolution {
            let direction = if dim == 2 {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
                Vector::from_vec(vec![angle.cos(), angle.sin()])
            } else {
                let mut stream = SampleStream::at(
                    derive_seed(seed, CLOUD_DIRECTION_SEED + index as u64),
                    k as u64,
                );
                stream.unit_direction(dim)
            };
            let (_, witness) = tile.body.support(&direction);
            let record = json!({
                "tile": index,
                "point": vec_json(&witness),
            });
            out.push_str(&serde_json::to_string(&record)?);
            out.push('\n');
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn cmd_extremal(
    path: &Path,
    tile: Option<usize>,
    directions: usize,
    delta: f64,
    seed: u64,
) -> Result<u8> {
    let tiling = read_tiling(path)?;
    let body: &Body = match tile {
        Some(index) => {
            &tiling
                .tiles()
                .get(index)
                .with_context(|| format!("tile {index} out of range"))?
                .body
        }
        None => tiling.ambient(),
    };
    if directions < body.dim() + 1 {
        bail!("--directions must be at least dim + 1 = {}", body.dim() + 1);
    }
    if delta <= 0.0 {
        bail!("--delta must be positive");
    }
    let estimate = body.estimate_extremal_points(directions, delta, seed);
    print_doc(&serde_json::to_value(estimate)?)?;
    Ok(0)
}
