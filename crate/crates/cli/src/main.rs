use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use tsurf::circles::{circle_measure, region_volume, CellGrid};
use tsurf::geodesics::{enumerate_closed, occupancy, pi_stats};
use tsurf::geom::{format_rational, parse_rational};
use tsurf::paths::{radius_grid, radius_grid_csv, PathLengths};
use tsurf::report::{line_chart_svg, sig12};
use tsurf::spectral::{all_weights, solve_entropy, v_weight};
use tsurf::surface::{describe, load_surface};
use tsurf::unfold::saddles_csv;
use tsurf::{BuiltinSurface, ConcatGraph, Error, Rational, TranslationSurface};

#[derive(Parser, Debug)]
#[command(name = "tsurf", version, about = "Saddle connections, circle growth and closed-geodesic counts on translation surfaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Built-in surface: lshape or slit_tori.
    #[arg(long, global = true, conflicts_with = "surface")]
    builtin: Option<String>,
    /// Parameters of the built-in, comma separated (lshape: width,height; slit_tori: x,y).
    #[arg(long, global = true, value_delimiter = ',')]
    params: Vec<String>,
    /// Surface description file (JSON).
    #[arg(long, global = true)]
    surface: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write SVG figures.
    #[arg(long, global = true)]
    svg: bool,
    /// Saddle connection length budget; defaults to what the command needs.
    #[arg(long, global = true)]
    budget: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the surface and exit.
    Validate,
    /// Genus, cone points and area.
    Info,
    /// List oriented saddle connections up to a length.
    Saddles {
        #[arg(long)]
        max_length: String,
    },
    /// Volume entropy from truncated transfer matrices.
    Entropy {
        #[arg(long, value_delimiter = ',', required = true)]
        cutoffs: Vec<String>,
    },
    /// N(x, R), circle length and ball volume on a grid of radii.
    Circle {
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        rmax: String,
        #[arg(long, default_value = "1/10")]
        step: String,
    },
    /// Monte Carlo circle measure on a cell grid.
    Measure {
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        radius: String,
        #[arg(long, default_value_t = 4)]
        grid: usize,
        /// Samples per unit angle of each direction window.
        #[arg(long, default_value_t = 2)]
        samples: usize,
    },
    /// Monte Carlo volume of the ball inside a set of cells.
    Volume {
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        radius: String,
        #[arg(long, default_value_t = 4)]
        grid: usize,
        /// Cell ids; all cells when omitted.
        #[arg(long, value_delimiter = ',')]
        cells: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        samples: usize,
    },
    /// Census of primitive closed geodesics, π(T), F(T) and occupancy.
    Geodesics {
        #[arg(long)]
        tmax: String,
        #[arg(long, default_value = "1/4")]
        step: String,
        #[arg(long, default_value_t = 4)]
        grid: usize,
        /// Cutoff used for h and the spectral weights; defaults to tmax.
        #[arg(long)]
        cutoff: Option<String>,
    },
    /// Spectral weights v(s) of the saddles in a cutoff component.
    Weights {
        #[arg(long)]
        cutoff: String,
        /// Saddle ids to cross-check against finite differences.
        #[arg(long, value_delimiter = ',')]
        check: Vec<usize>,
    },
}

fn number(text: &str) -> Result<f64, Error> {
    Ok(tsurf::geom::rational_to_f64(&parse_rational(text)?))
}

fn load(g: &Global) -> Result<TranslationSurface, Error> {
    match (&g.builtin, &g.surface) {
        (Some(name), None) => {
            let params = g.params.iter().map(|p| parse_rational(p)).collect::<Result<Vec<_>, _>>()?;
            BuiltinSurface::from_name(name, &params)?.build()
        }
        (None, Some(path)) => load_surface(&fs::read_to_string(path)?),
        _ => Err(Error::InvalidParams("give exactly one of --builtin or --surface".into())),
    }
}

/// Saddle budget as a squared length: `--budget` if given, else `need`.
fn budget_sq(g: &Global, need: f64) -> Result<Rational, Error> {
    match &g.budget {
        Some(b) => {
            let b = parse_rational(b)?;
            if tsurf::geom::rational_to_f64(&b) < need {
                return Err(Error::Truncation { requested: need, available: tsurf::geom::rational_to_f64(&b) });
            }
            Ok(b * b)
        }
        None => {
            let r = Rational::approximate_float(need).ok_or_else(|| Error::InvalidParams(format!("bad length {need}")))?;
            Ok(r * r)
        }
    }
}

fn graph(s: &TranslationSurface, g: &Global, need: f64) -> Result<ConcatGraph, Error> {
    let b = budget_sq(g, need)?;
    let cg = ConcatGraph::build(s, &b)?;
    info!("{} saddle connections, {} allowed pairs", cg.len(), cg.allowed_count());
    Ok(cg)
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn write(&self, name: &str, text: &str) -> Result<(), Error> {
        fs::create_dir_all(self.dir)?;
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let g = &cli.global;
    let s = load(g)?;
    let out = Out { dir: &g.out };
    match &cli.command {
        Command::Validate => {
            eprintln!("valid: {} polygons, genus {}", s.polygons().len(), s.genus());
        }
        Command::Info => {
            let d = describe(&s);
            out.write("info.json", &(serde_json::to_string_pretty(&d).expect("map serializes") + "\n"))?;
            let ks: Vec<String> = s.cone_points().iter().map(|c| format!("k={}", c.k)).collect();
            eprintln!(
                "genus {}, {} singularit{}: {}, area {}",
                s.genus(),
                ks.len(),
                if ks.len() == 1 { "y" } else { "ies" },
                ks.join(" "),
                format_rational(&s.area())
            );
        }
        Command::Saddles { max_length } => {
            let l = parse_rational(max_length)?;
            let sc = tsurf::unfold::enumerate_saddle_connections(&s, &(l * l))?;
            out.write("saddles.csv", &saddles_csv(&sc))?;
            eprintln!("{} oriented saddle connections of length ≤ {}", sc.len(), format_rational(&l));
        }
        Command::Entropy { cutoffs } => {
            let cs = cutoffs.iter().map(|c| number(c)).collect::<Result<Vec<_>, _>>()?;
            let need = cs.iter().cloned().fold(0.0, f64::max);
            let cg = graph(&s, g, need)?;
            let est = solve_entropy(&cg, &cs)?;
            out.write("entropy.json", &est.to_json())?;
            eprintln!("h = {} at cutoff {} ({} saddles in component)", sig12(est.h), sig12(est.cutoff), est.scc_size);
        }
        Command::Circle { center, rmax, step } => {
            let (rmax, step) = (number(rmax)?, number(step)?);
            let cg = graph(&s, g, rmax)?;
            let p = PathLengths::collect(&cg, *center, rmax, None)?;
            let grid = radius_grid(rmax, step);
            out.write("circle.csv", &radius_grid_csv(&p, &grid)?)?;
            if g.svg {
                let rows = p.rows(&grid)?;
                let series = [
                    ("log N", rows.iter().map(|r| (r.count as f64).ln()).collect()),
                    ("log circle length", rows.iter().map(|r| r.circle_length.ln()).collect()),
                ];
                out.write("circle.svg", &line_chart_svg(&grid, &series, "circle growth"))?;
            }
            eprintln!("N = {}, circle length {} at R = {}", p.count(rmax)?, sig12(p.circle_length(rmax)?), sig12(rmax));
        }
        Command::Measure { center, radius, grid, samples } => {
            let r = number(radius)?;
            let cg = graph(&s, g, r)?;
            let cells = CellGrid::new(&s, *grid)?;
            let h = circle_measure(&s, &cg, *center, r, &cells, *samples, g.seed)?;
            out.write("measure.csv", &h.to_csv(&cells))?;
            if g.svg {
                out.write("measure.svg", &h.to_svg(&cells, &format!("circle measure density, R = {}", sig12(r))))?;
            }
            eprintln!("{} samples over {} cells, {} dropped", h.samples, cells.len(), h.dropped);
        }
        Command::Volume { center, radius, grid, cells, samples } => {
            let r = number(radius)?;
            let cg = graph(&s, g, r)?;
            let grid = CellGrid::new(&s, *grid)?;
            let region: Vec<usize> = if cells.is_empty() { (0..grid.len()).collect() } else { cells.clone() };
            let v = region_volume(&s, &cg, *center, r, &grid, &region, *samples, g.seed)?;
            let ball = PathLengths::collect(&cg, *center, r, None)?.ball_volume(r)?;
            let json = serde_json::json!({
                "radius": r,
                "cells": region,
                "estimate": v.estimate,
                "std_err": v.std_err,
                "samples": v.samples,
                "dropped": v.dropped,
                "ball_volume": ball,
                "seed": g.seed,
            });
            out.write("volume.json", &(serde_json::to_string_pretty(&json).expect("json") + "\n"))?;
            eprintln!("V_A = {} ± {} (V_X = {})", sig12(v.estimate), sig12(v.std_err), sig12(ball));
        }
        Command::Geodesics { tmax, step, grid, cutoff } => {
            let t = number(tmax)?;
            let cut = cutoff.as_deref().map(number).transpose()?.unwrap_or(t);
            let cg = graph(&s, g, t.max(cut))?;
            let h = solve_entropy(&cg, &[cut])?.h;
            let census = enumerate_closed(&cg, t)?;
            let stats = pi_stats(&census, h, &radius_grid(t, number(step)?))?;
            out.write("geodesics.csv", &stats.to_csv())?;
            let cells = CellGrid::new(&s, *grid)?;
            let occ = occupancy(&s, &cg, &census, &cells)?;
            let w = all_weights(&cg, cut, h)?;
            out.write("saddle_weights.csv", &occ.saddle_csv(Some(&w)))?;
            out.write("occupancy.csv", &occ.measure.to_csv(&cells))?;
            if g.svg {
                out.write("occupancy.svg", &occ.measure.to_svg(&cells, &format!("occupancy density, T = {}", sig12(t))))?;
            }
            eprintln!("π(T) = {} at T = {}, slope of log π = {} (h = {})", occ.pi, sig12(t), sig12(stats.slope), sig12(h));
        }
        Command::Weights { cutoff, check } => {
            let cut = number(cutoff)?;
            let cg = graph(&s, g, cut)?;
            let h = solve_entropy(&cg, &[cut])?.h;
            let w = all_weights(&cg, cut, h)?;
            let mut csv = String::from("saddle_id,length,v\n");
            for (id, v) in w.ids.iter().zip(&w.weights) {
                csv.push_str(&format!("{id},{},{}\n", sig12(cg.length(*id)), sig12(*v)));
            }
            out.write("weights.csv", &csv)?;
            for &id in check {
                let v = v_weight(&cg, cut, h, id)?;
                eprintln!("v({id}) = {} (finite differences agree)", sig12(v));
            }
            eprintln!("{} weights at h = {}, sum {}", w.ids.len(), sig12(h), sig12(w.weights.iter().sum()));
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_truncation() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
