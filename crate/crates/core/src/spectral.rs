//! Truncated transfer matrices and the entropy solve.
//!
//! `W_{σ,t}(s, s') = exp(−σℓ(s') + t·ℓ_{s₀}(s'))` on allowed pairs. Its Perron
//! value λ(σ, t) is strictly decreasing in σ; the entropy estimate is the σ
//! with λ(σ, 0) = 1, and the weight of a saddle s₀ is the derivative of the
//! pressure σ(t) defined by λ(σ(t), t) = 1.

use log::warn;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::ConcatGraph;

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100_000;

/// Sparse nonnegative matrix in row-compressed form.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in rows {
            if r.len() != n || r.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParams("matrix must be square, finite and nonnegative".into()));
            }
            for (j, &x) in r.iter().enumerate() {
                if x > 0.0 {
                    cols.push(j);
                    vals.push(x);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(WeightMatrix { n, row_ptr, cols, vals })
    }

    /// `W_{σ,t}` on the saddles `ids` (local index i ↔ saddle `ids[i]`).
    pub fn for_graph(g: &ConcatGraph, ids: &[usize], sigma: f64, t: f64, s0: Option<usize>) -> Self {
        let pattern = Pattern::new(g, ids);
        pattern.weights(sigma, t, s0.and_then(|s| ids.binary_search(&s).ok()))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, o)| {
            *o = self.row(i).map(|(j, w)| w * x[j]).sum();
        });
    }

    fn transpose(&self) -> WeightMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                rows[j].push((i, w));
            }
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in rows {
            for (j, w) in r {
                cols.push(j);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        WeightMatrix { n: self.n, row_ptr, cols, vals }
    }

    fn restrict(&self, keep: &[usize]) -> WeightMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for &i in keep {
            for (j, w) in self.row(i) {
                if local[j] != usize::MAX {
                    cols.push(local[j]);
                    vals.push(w);
                }
            }
            row_ptr.push(cols.len());
        }
        WeightMatrix { n: keep.len(), row_ptr, cols, vals }
    }

    /// Largest strongly connected component of the nonzero pattern.
    fn largest_scc(&self) -> Vec<usize> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, self.nnz());
        let nodes: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        let mut best: Vec<usize> = Vec::new();
        for comp in petgraph::algo::tarjan_scc(&g) {
            let mut ids: Vec<usize> = comp.iter().map(|n| n.index()).collect();
            ids.sort_unstable();
            if ids.len() == 1 && !self.row(ids[0]).any(|(j, _)| j == ids[0]) {
                continue;
            }
            if ids.len() > best.len() || (ids.len() == best.len() && ids.first() < best.first()) {
                best = ids;
            }
        }
        best
    }
}

/// Allowed pattern on a fixed index set, reused across (σ, t).
struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    col_len: Vec<f64>,
}

impl Pattern {
    fn new(g: &ConcatGraph, ids: &[usize]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for &a in ids {
            for &b in g.successors(a) {
                if let Ok(j) = ids.binary_search(&b) {
                    cols.push(j);
                }
            }
            row_ptr.push(cols.len());
        }
        Pattern { n: ids.len(), row_ptr, cols, col_len: ids.iter().map(|&s| g.length(s)).collect() }
    }

    fn weights(&self, sigma: f64, t: f64, s0: Option<usize>) -> WeightMatrix {
        let col_w: Vec<f64> = (0..self.n)
            .map(|j| {
                let tilt = if Some(j) == s0 { t * self.col_len[j] } else { 0.0 };
                (-sigma * self.col_len[j] + tilt).exp()
            })
            .collect();
        WeightMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.cols.iter().map(|&j| col_w[j]).collect(),
        }
    }
}

/// Leading eigendata of a nonnegative matrix.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Left eigenvector, normalized so that `u·v = 1`.
    pub u: Vec<f64>,
    /// Right eigenvector, normalized so that `Σv = 1`.
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Indices (into the matrix) of the component used.
    pub scc: Vec<usize>,
}

fn normalize_sum(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|a| *a /= s);
}

/// Power iteration on `W + cI` for the Perron vector of an irreducible
/// matrix; the shift removes periodicity. Returns (λ, v, residual, iters).
fn perron(w: &WeightMatrix, start: Option<&[f64]>) -> (f64, Vec<f64>, f64, usize) {
    let n = w.n;
    let max_row = (0..n).map(|i| w.row(i).map(|(_, x)| x).sum::<f64>()).fold(0.0, f64::max);
    let shift = 0.1 * max_row;
    let mut v = match start {
        Some(s) if s.len() == n && s.iter().all(|&x| x > 0.0) => s.to_vec(),
        _ => vec![1.0 / n as f64; n],
    };
    normalize_sum(&mut v);
    let mut wv = vec![0.0; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITER {
        w.mul(&v, &mut wv);
        lambda = wv.iter().sum::<f64>();
        residual = wv.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        if residual < RESIDUAL_TOL {
            return (lambda, v, residual, it);
        }
        for (a, b) in v.iter_mut().zip(&wv) {
            *a = b + shift * *a;
        }
        normalize_sum(&mut v);
    }
    (lambda, v, residual, MAX_ITER)
}

fn spectral_with_start(w: &WeightMatrix, start: Option<&[f64]>) -> Result<SpectralResult> {
    let scc = w.largest_scc();
    if scc.is_empty() {
        return Err(Error::EmptyScc);
    }
    let sub = w.restrict(&scc);
    let (lambda, v, residual, iterations) = perron(&sub, start);
    let (_, mut u, lres, _) = perron(&sub.transpose(), None);
    let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    u.iter_mut().for_each(|a| *a /= uv);
    let converged = residual < RESIDUAL_TOL && lres < RESIDUAL_TOL;
    if !converged {
        warn!("power iteration stopped at residual {residual:.3e} (left {lres:.3e})");
    }
    Ok(SpectralResult { lambda, u, v, residual, iterations, converged, scc })
}

/// Perron value and normalized eigenvectors on the largest strongly
/// connected component of `W`.
pub fn spectral_radius(w: &WeightMatrix) -> Result<SpectralResult> {
    spectral_with_start(w, None)
}

/// Per-cutoff outcome of the entropy solve.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffResult {
    pub cutoff: f64,
    pub num_saddles: usize,
    pub scc_size: usize,
    pub h: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// λ was strictly decreasing across all bisection samples.
    pub monotone: bool,
    pub tail_estimate: f64,
}

/// Entropy estimate from the largest cutoff, with the whole sequence.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub cutoff: f64,
    pub num_saddles: usize,
    pub scc_size: usize,
    pub h: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub tail_estimate: f64,
    pub per_cutoff: Vec<CutoffResult>,
}

impl EntropyEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Saddles of length ≤ `cutoff` (a prefix of the canonical order) and the
/// largest strongly connected component among them.
pub fn cutoff_component(g: &ConcatGraph, cutoff: f64) -> Result<(usize, Vec<usize>)> {
    if cutoff > g.budget() {
        return Err(Error::Truncation { requested: cutoff, available: g.budget() });
    }
    let prefix = g.lengths().partition_point(|&l| l <= cutoff);
    let scc = g.largest_scc(prefix);
    if scc.is_empty() {
        return Err(Error::EmptyScc);
    }
    if scc.len() < prefix {
        warn!("cutoff {cutoff}: strongly connected component has {} of {prefix} saddles", scc.len());
    }
    Ok((prefix, scc))
}

/// Least-squares `c` in `#{s : ℓ(s) ≤ r} ≈ c·r²` over the saddle lengths.
fn quadratic_count_fit(lengths: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &l) in lengths.iter().enumerate() {
        let r2 = l * l;
        num += (i + 1) as f64 * r2;
        den += r2 * r2;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// σ with λ(σ) = 1 on a fixed pattern, by bisection.
fn solve_sigma(p: &Pattern) -> Result<(f64, (f64, f64), usize, bool)> {
    let min_len = p.col_len.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_deg = (0..p.n).map(|i| p.row_ptr[i + 1] - p.row_ptr[i]).max().unwrap_or(1);
    let mut lo = 1e-3;
    let mut hi = 10.0 * (max_deg as f64).ln().max(1.0) / min_len;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut eval = |sigma: f64, samples: &mut Vec<(f64, f64)>| -> Result<f64> {
        let r = spectral_with_start(&p.weights(sigma, 0.0, None), warm.as_deref())?;
        iterations += r.iterations;
        warm = Some(r.v.clone());
        samples.push((sigma, r.lambda));
        Ok(r.lambda)
    };
    let mut widen = 0;
    while eval(lo, &mut samples)? <= 1.0 {
        lo /= 10.0;
        widen += 1;
        if widen > 12 {
            return Err(Error::BracketFailure(format!("λ({lo}) ≤ 1")));
        }
    }
    widen = 0;
    while eval(hi, &mut samples)? >= 1.0 {
        hi *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(Error::BracketFailure(format!("λ({hi}) ≥ 1")));
        }
    }
    let bracket = (lo, hi);
    let (mut a, mut b) = (lo, hi);
    let mut mid = 0.5 * (a + b);
    for _ in 0..200 {
        mid = 0.5 * (a + b);
        let l = eval(mid, &mut samples)?;
        if (l - 1.0).abs() < 1e-13 || b - a < 1e-15 * b.max(1.0) {
            break;
        }
        if l > 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let monotone = samples.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1);
    if !monotone {
        warn!("λ(σ) not strictly decreasing across bisection samples");
    }
    Ok((mid, bracket, iterations, monotone))
}

/// Entropy estimate at each cutoff length; the reported `h` is from the
/// largest cutoff.
pub fn solve_entropy(g: &ConcatGraph, cutoffs: &[f64]) -> Result<EntropyEstimate> {
    if cutoffs.is_empty() {
        return Err(Error::InvalidParams("at least one cutoff is required".into()));
    }
    let mut cutoffs = cutoffs.to_vec();
    cutoffs.sort_by(f64::total_cmp);
    let fit = quadratic_count_fit(g.lengths());
    let mut per = Vec::new();
    for &cutoff in &cutoffs {
        let (prefix, scc) = cutoff_component(g, cutoff)?;
        let pattern = Pattern::new(g, &scc);
        let (h, bracket, iterations, monotone) = solve_sigma(&pattern)?;
        let tail = 2.0 * fit * (-h * cutoff).exp() * (cutoff / h + 1.0 / (h * h));
        per.push(CutoffResult {
            cutoff,
            num_saddles: prefix,
            scc_size: scc.len(),
            h,
            bracket,
            iterations,
            monotone,
            tail_estimate: tail,
        });
    }
    let last = per.last().unwrap().clone();
    Ok(EntropyEstimate {
        cutoff: last.cutoff,
        num_saddles: last.num_saddles,
        scc_size: last.scc_size,
        h: last.h,
        bracket: last.bracket,
        iterations: last.iterations,
        tail_estimate: last.tail_estimate,
        per_cutoff: per,
    })
}

/// Weights v(s₀) for every saddle in the cutoff component at entropy `h`.
#[derive(Clone, Debug, Serialize)]
pub struct SaddleWeights {
    pub h: f64,
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SaddleWeights {
    pub fn get(&self, s: usize) -> Option<f64> {
        self.ids.binary_search(&s).ok().map(|i| self.weights[i])
    }
}

/// v(s) = −(∂λ/∂t)/(∂λ/∂σ) at (h, 0) for all s in the cutoff component,
/// from the eigenvector formula `∂λ = u(∂W)v`.
pub fn all_weights(g: &ConcatGraph, cutoff: f64, h: f64) -> Result<SaddleWeights> {
    let (_, ids) = cutoff_component(g, cutoff)?;
    let pattern = Pattern::new(g, &ids);
    let w = pattern.weights(h, 0.0, None);
    let r = spectral_radius(&w)?;
    if r.scc.len() != ids.len() {
        return Err(Error::EmptyScc);
    }
    // uW at each column.
    let mut uw = vec![0.0; ids.len()];
    for i in 0..ids.len() {
        for (j, x) in w.row(i) {
            uw[j] += r.u[i] * x;
        }
    }
    let d_sigma: f64 = -(0..ids.len()).map(|j| pattern.col_len[j] * uw[j] * r.v[j]).sum::<f64>();
    let weights = (0..ids.len()).map(|j| -(pattern.col_len[j] * uw[j] * r.v[j]) / d_sigma).collect();
    Ok(SaddleWeights { h, ids, weights })
}

fn lambda_at(p: &Pattern, sigma: f64, t: f64, s0: Option<usize>) -> Result<f64> {
    Ok(spectral_radius(&p.weights(sigma, t, s0))?.lambda)
}

/// v(s₀), cross-checked against central finite differences of λ.
pub fn v_weight(g: &ConcatGraph, cutoff: f64, h: f64, s0: usize) -> Result<f64> {
    if s0 >= g.len() {
        return Err(Error::UnknownSaddle(s0));
    }
    let (_, ids) = cutoff_component(g, cutoff)?;
    let local = ids.binary_search(&s0).map_err(|_| Error::UnknownSaddle(s0))?;
    let pattern = Pattern::new(g, &ids);
    let w = pattern.weights(h, 0.0, None);
    let r = spectral_radius(&w)?;
    let mut uw = vec![0.0; ids.len()];
    for i in 0..ids.len() {
        for (j, x) in w.row(i) {
            uw[j] += r.u[i] * x;
        }
    }
    let d_t = pattern.col_len[local] * uw[local] * r.v[local];
    let d_sigma = -(0..ids.len()).map(|j| pattern.col_len[j] * uw[j] * r.v[j]).sum::<f64>();

    let step = 1e-5;
    let fd_t = (lambda_at(&pattern, h, step, Some(local))? - lambda_at(&pattern, h, -step, Some(local))?) / (2.0 * step);
    let fd_sigma = (lambda_at(&pattern, h + step, 0.0, None)? - lambda_at(&pattern, h - step, 0.0, None)?) / (2.0 * step);
    for (which, a, n) in [("∂λ/∂t", d_t, fd_t), ("∂λ/∂σ", d_sigma, fd_sigma)] {
        if (a - n).abs() > 1e-6 * a.abs().max(1.0) {
            return Err(Error::DerivativeMismatch { which: which.into(), analytic: a, numeric: n });
        }
    }
    Ok(-d_t / d_sigma)
}
