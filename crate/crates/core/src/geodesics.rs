//! Primitive closed geodesics through cone points as cyclic words of saddle
//! connections, their counting functions, and the occupancy measure.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::circles::{CellGrid, MeasureHistogram};
use crate::error::{Error, Result};
use crate::paths::{regression_slope, ConcatGraph};
use crate::report::sig12;
use crate::spectral::SaddleWeights;
use crate::surface::TranslationSurface;
use crate::unfold::trace_pieces;

/// An oriented primitive closed geodesic, in canonical rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesic {
    pub word: Vec<usize>,
    pub length: f64,
    pub primitive: bool,
    /// `(saddle id, occurrences)`, sorted by id.
    pub occurrences: Vec<(usize, usize)>,
}

/// Smallest rotation of a cyclic word.
pub fn canonical_rotation(word: &[usize]) -> Vec<usize> {
    let n = word.len();
    (0..n)
        .map(|i| word[i..].iter().chain(&word[..i]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// Is the word a strict power of a shorter one?
pub fn is_power(word: &[usize]) -> bool {
    let n = word.len();
    (1..n).any(|d| n % d == 0 && (d..n).all(|i| word[i] == word[i - d]))
}

fn is_canonical(word: &[usize]) -> bool {
    let n = word.len();
    (1..n).all(|i| word[i..].iter().chain(&word[..i]).cmp(word.iter()).is_ge())
}

fn occurrences(word: &[usize]) -> Vec<(usize, usize)> {
    let mut w = word.to_vec();
    w.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for s in w {
        match out.last_mut() {
            Some((t, c)) if *t == s => *c += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

fn within(l: f64, t: f64) -> bool {
    l <= t * (1.0 + 1e-12)
}

/// All oriented primitive closed geodesics of length ≤ `t`.
#[derive(Clone, Debug)]
pub struct GeodesicCensus {
    pub t: f64,
    pub geodesics: Vec<ClosedGeodesic>,
    /// Saddle lengths of the graph the census came from.
    lengths: Vec<f64>,
}

impl GeodesicCensus {
    /// π(T') for `T' ≤ T`.
    pub fn pi(&self, t: f64) -> usize {
        self.geodesics.iter().filter(|q| within(q.length, t)).count()
    }

    /// F(T') = Σ over pairs (n, q) with n·ℓ(q) ≤ T' of ℓ(q).
    pub fn f(&self, t: f64) -> f64 {
        self.geodesics
            .iter()
            .map(|q| {
                let reps = (1..).take_while(|&n| within(n as f64 * q.length, t)).count();
                reps as f64 * q.length
            })
            .sum()
    }

    /// π_s(T') = Σ_q ℓ_s(q)/ℓ(q) for every saddle id.
    pub fn pi_s(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.lengths.len()];
        for q in self.geodesics.iter().filter(|q| within(q.length, t)) {
            for &(s, c) in &q.occurrences {
                out[s] += c as f64 * self.lengths[s] / q.length;
            }
        }
        out
    }

    /// Set of canonical words, for membership tests.
    pub fn words(&self) -> HashSet<Vec<usize>> {
        self.geodesics.iter().map(|q| q.word.clone()).collect()
    }
}

/// Depth-first census from each anchor saddle: words whose smallest letter
/// is the anchor, extended while the length stays within `t`, closed when
/// the last-to-first pair is allowed.
pub fn enumerate_closed(g: &ConcatGraph, t: f64) -> Result<GeodesicCensus> {
    g.check_radius(t)?;
    let mut geodesics: Vec<ClosedGeodesic> = (0..g.len())
        .into_par_iter()
        .flat_map_iter(|a| from_anchor(g, a, t))
        .collect();
    geodesics.sort_by(|x, y| x.word.cmp(&y.word));
    Ok(GeodesicCensus { t, geodesics, lengths: g.lengths().to_vec() })
}

fn from_anchor(g: &ConcatGraph, a: usize, t: f64) -> Vec<ClosedGeodesic> {
    let mut out = Vec::new();
    if !within(g.length(a), t) {
        return out;
    }
    let mut word = vec![a];
    // Stack of (next successor index to try) per depth, with running lengths.
    let mut next = vec![0usize];
    let mut len = vec![g.length(a)];
    loop {
        let depth = word.len();
        let last = word[depth - 1];
        if next[depth - 1] == 0 && g.allowed(last, a) && is_canonical(&word) && !is_power(&word) {
            out.push(ClosedGeodesic {
                word: word.clone(),
                length: len[depth - 1],
                primitive: true,
                occurrences: occurrences(&word),
            });
        }
        let succ = g.successors(last);
        let mut pushed = false;
        while next[depth - 1] < succ.len() {
            let b = succ[next[depth - 1]];
            next[depth - 1] += 1;
            let l = len[depth - 1] + g.length(b);
            if b >= a && within(l, t) {
                word.push(b);
                len.push(l);
                next.push(0);
                pushed = true;
                break;
            }
        }
        if !pushed {
            word.pop();
            len.pop();
            next.pop();
            if word.is_empty() {
                return out;
            }
        }
    }
}

/// One row of [`pi_stats`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiRow {
    pub t: f64,
    pub pi: usize,
    pub f: f64,
    /// π(T)·hT·e^{−hT}.
    pub pi_ratio: f64,
    /// F(T)·h·e^{−hT}.
    pub f_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct PiStats {
    pub h: f64,
    pub rows: Vec<PiRow>,
    /// Least-squares slope of log π(T) against T over the rows with π > 0.
    pub slope: f64,
}

impl PiStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,pi,F,pi_h_T_ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", sig12(r.t), r.pi, sig12(r.f), sig12(r.pi_ratio)));
        }
        out
    }
}

/// π(T), F(T) and their normalized ratios on a grid of `T ≤ census.t`.
pub fn pi_stats(census: &GeodesicCensus, h: f64, grid: &[f64]) -> Result<PiStats> {
    if let Some(&bad) = grid.iter().find(|&&x| x > census.t) {
        return Err(Error::Truncation { requested: bad, available: census.t });
    }
    let rows: Vec<PiRow> = grid
        .iter()
        .map(|&t| {
            let pi = census.pi(t);
            let f = census.f(t);
            let decay = (-h * t).exp();
            PiRow { t, pi, f, pi_ratio: pi as f64 * h * t * decay, f_ratio: f * h * decay }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.pi > 0).map(|r| (r.t, (r.pi as f64).ln())).unzip();
    let slope = if xs.len() >= 2 { regression_slope(&xs, &ys) } else { f64::NAN };
    Ok(PiStats { h, rows, slope })
}

/// The occupancy measure m_T and π_s(T)/π(T) per saddle.
#[derive(Clone, Debug)]
pub struct Occupancy {
    pub measure: MeasureHistogram,
    pub pi: usize,
    pub pi_s: Vec<f64>,
}

impl Occupancy {
    pub fn fraction(&self, s: usize) -> f64 {
        self.pi_s[s] / self.pi as f64
    }

    /// CSV `saddle_id,pi_s,pi_s_over_pi,v_spectral` over saddles used by the
    /// census; `v_spectral` is empty for saddles outside `weights`.
    pub fn saddle_csv(&self, weights: Option<&SaddleWeights>) -> String {
        let mut out = String::from("saddle_id,pi_s,pi_s_over_pi,v_spectral\n");
        for (s, &p) in self.pi_s.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = weights.and_then(|w| w.get(s)).map(sig12).unwrap_or_default();
            out.push_str(&format!("{s},{},{},{v}\n", sig12(p), sig12(p / self.pi as f64)));
        }
        out
    }
}

/// Length of each saddle connection inside each grid cell.
pub fn saddle_cell_lengths(s: &TranslationSurface, g: &ConcatGraph, grid: &CellGrid, ids: &[usize]) -> Result<Vec<Vec<(usize, f64)>>> {
    if g.saddles().len() != g.len() {
        return Err(Error::InvalidParams("concatenation graph carries no surface geometry".into()));
    }
    ids.par_iter()
        .map(|&i| {
            let sc = g.saddles().get(i).ok_or(Error::UnknownSaddle(i))?;
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for p in trace_pieces(s, &sc.out_dir, &sc.length_sq)? {
                for (cell, l) in grid.split_segment(p.polygon, &p.from, &p.to) {
                    match acc.iter_mut().find(|e| e.0 == cell) {
                        Some(e) => e.1 += l,
                        None => acc.push((cell, l)),
                    }
                }
            }
            acc.sort_by_key(|e| e.0);
            Ok(acc)
        })
        .collect()
}

/// m_T(A) = (1/π(T)) Σ_q ℓ_A(q)/ℓ(q), assembled from saddle occurrences.
pub fn occupancy(s: &TranslationSurface, g: &ConcatGraph, census: &GeodesicCensus, grid: &CellGrid) -> Result<Occupancy> {
    let pi = census.pi(census.t);
    // Σ_q count_s(q)/ℓ(q) per saddle.
    let mut w = vec![0.0; g.len()];
    for q in &census.geodesics {
        for &(sid, c) in &q.occurrences {
            w[sid] += c as f64 / q.length;
        }
    }
    let used: Vec<usize> = (0..g.len()).filter(|&i| w[i] > 0.0).collect();
    let split = saddle_cell_lengths(s, g, grid, &used)?;
    let mut masses = vec![0.0; grid.len()];
    for (k, &sid) in used.iter().enumerate() {
        for &(cell, l) in &split[k] {
            masses[cell] += w[sid] * l / pi.max(1) as f64;
        }
    }
    let total = masses.iter().sum();
    Ok(Occupancy {
        measure: MeasureHistogram {
            std_err: vec![0.0; masses.len()],
            masses,
            total,
            raw_total: total * pi as f64,
            radius: census.t,
            samples: pi as u64,
            seed: 0,
            dropped: 0,
        },
        pi,
        pi_s: census.pi_s(census.t),
    })
}
