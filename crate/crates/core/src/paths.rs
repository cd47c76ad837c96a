//! Saddle connection paths, the counting function N(x, R), and the closed
//! forms for circle length and ball volume.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Rational;
use crate::surface::TranslationSurface;
use crate::unfold::{budget_length, concatenation_allowed, enumerate_saddle_connections, SaddleConnection};

/// Allowed-concatenation relation on an ordered list of saddle connections.
#[derive(Clone, Debug)]
pub struct ConcatGraph {
    saddles: Vec<SaddleConnection>,
    lengths: Vec<f64>,
    start: Vec<usize>,
    end: Vec<usize>,
    cone_k: Vec<usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    reverse: Vec<Option<usize>>,
    budget: f64,
}

impl ConcatGraph {
    /// Enumerates saddle connections up to `max_length_sq` and computes the
    /// allowed relation between them.
    pub fn build(s: &TranslationSurface, max_length_sq: &Rational) -> Result<Self> {
        let saddles = enumerate_saddle_connections(s, max_length_sq)?;
        let by_start = group_by_start(&saddles, s.cone_points().len());
        let succ: Vec<Vec<usize>> = saddles
            .par_iter()
            .map(|a| {
                by_start[a.end]
                    .iter()
                    .copied()
                    .filter(|&b| concatenation_allowed(s, &a.back_dir, &saddles[b].out_dir))
                    .collect()
            })
            .collect();
        let reverse = reverse_map(s, &saddles);
        let mut g = Self::from_parts(
            saddles.iter().map(SaddleConnection::length).collect(),
            saddles.iter().map(|c| c.start).collect(),
            saddles.iter().map(|c| c.end).collect(),
            s.cone_points().iter().map(|c| c.k).collect(),
            succ,
            budget_length(max_length_sq),
        )?;
        g.saddles = saddles;
        g.reverse = reverse;
        Ok(g)
    }

    /// Graph from explicit data: per-saddle lengths and endpoint cones,
    /// per-cone `k`, and successor lists. `budget` is the largest length the
    /// saddle list is complete up to.
    pub fn from_parts(
        lengths: Vec<f64>,
        start: Vec<usize>,
        end: Vec<usize>,
        cone_k: Vec<usize>,
        successors: Vec<Vec<usize>>,
        budget: f64,
    ) -> Result<Self> {
        let n = lengths.len();
        if start.len() != n || end.len() != n || successors.len() != n {
            return Err(Error::InvalidParams("inconsistent graph part sizes".into()));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (a, succ) in successors.iter().enumerate() {
            let mut succ = succ.clone();
            succ.sort_unstable();
            succ.dedup();
            for &b in &succ {
                if b >= n || start[b] != end[a] {
                    return Err(Error::InvalidParams(format!("pair ({a},{b}) does not meet at a cone point")));
                }
            }
            targets.extend(succ);
            offsets.push(targets.len());
        }
        if start.iter().chain(&end).any(|&c| c >= cone_k.len()) {
            return Err(Error::InvalidParams("cone id out of range".into()));
        }
        Ok(ConcatGraph {
            saddles: Vec::new(),
            lengths,
            start,
            end,
            cone_k,
            offsets,
            targets,
            reverse: vec![None; n],
            budget,
        })
    }

    /// `m` saddles of equal length at a single cone, every pair allowed.
    pub fn complete(m: usize, length: f64) -> Self {
        let succ = vec![(0..m).collect(); m];
        Self::from_parts(vec![length; m], vec![0; m], vec![0; m], vec![1], succ, f64::INFINITY)
            .expect("complete fixture is consistent")
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Saddle connections, when the graph was built from a surface.
    pub fn saddles(&self) -> &[SaddleConnection] {
        &self.saddles
    }

    pub fn length(&self, s: usize) -> f64 {
        self.lengths[s]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn start(&self, s: usize) -> usize {
        self.start[s]
    }

    pub fn end(&self, s: usize) -> usize {
        self.end[s]
    }

    pub fn cone_count(&self) -> usize {
        self.cone_k.len()
    }

    pub fn k(&self, cone: usize) -> usize {
        self.cone_k[cone]
    }

    pub fn successors(&self, s: usize) -> &[usize] {
        &self.targets[self.offsets[s]..self.offsets[s + 1]]
    }

    pub fn allowed(&self, a: usize, b: usize) -> bool {
        self.successors(a).binary_search(&b).is_ok()
    }

    pub fn allowed_count(&self) -> usize {
        self.targets.len()
    }

    /// Length up to which the saddle list is complete.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Id of the same segment traversed backwards.
    pub fn reverse_of(&self, s: usize) -> Option<usize> {
        self.reverse[s]
    }

    pub fn cone_checked(&self, x: usize) -> Result<()> {
        if x < self.cone_k.len() {
            Ok(())
        } else {
            Err(Error::UnknownCone(x))
        }
    }

    /// Largest strongly connected component among the first `prefix`
    /// saddles, sorted. Ties go to the component with the smallest id.
    pub fn largest_scc(&self, prefix: usize) -> Vec<usize> {
        let prefix = prefix.min(self.len());
        let mut g = DiGraph::<(), ()>::with_capacity(prefix, 0);
        let nodes: Vec<_> = (0..prefix).map(|_| g.add_node(())).collect();
        for a in 0..prefix {
            for &b in self.successors(a) {
                if b < prefix {
                    g.add_edge(nodes[a], nodes[b], ());
                }
            }
        }
        let mut best: Vec<usize> = Vec::new();
        for comp in petgraph::algo::tarjan_scc(&g) {
            let mut ids: Vec<usize> = comp.iter().map(|n| n.index()).collect();
            ids.sort_unstable();
            // A single node is a component only with a self loop.
            if ids.len() == 1 && !self.allowed(ids[0], ids[0]) {
                continue;
            }
            if ids.len() > best.len() || (ids.len() == best.len() && ids.first() < best.first()) {
                best = ids;
            }
        }
        best
    }

    /// Does the largest strongly connected component contain every saddle?
    pub fn strongly_connected(&self) -> bool {
        self.largest_scc(self.len()).len() == self.len()
    }

    pub(crate) fn check_radius(&self, r: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::DegenerateRadius(r));
        }
        if r > self.budget {
            return Err(Error::Truncation { requested: r, available: self.budget });
        }
        Ok(())
    }
}

fn group_by_start(saddles: &[SaddleConnection], cones: usize) -> Vec<Vec<usize>> {
    let mut by = vec![Vec::new(); cones];
    for c in saddles {
        by[c.start].push(c.id);
    }
    by
}

fn reverse_map(s: &TranslationSurface, saddles: &[SaddleConnection]) -> Vec<Option<usize>> {
    let mut index = std::collections::HashMap::new();
    for c in saddles {
        index.insert((c.start, c.out_dir.slot, c.holonomy.clone()), c.id);
    }
    saddles
        .iter()
        .map(|c| {
            let r = c.reversed(s);
            index.get(&(r.start, r.out_dir.slot, r.holonomy)).copied()
        })
        .collect()
}

/// A word of saddle connections forming a geodesic path.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddlePath {
    pub saddle_ids: Vec<usize>,
    pub length: f64,
    pub initial: usize,
    pub terminal: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    length: f64,
    saddle: usize,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the shortest path first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.length.total_cmp(&self.length).then(o.saddle.cmp(&self.saddle)).then(o.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Best-first walk over the paths from `x` of length ≤ `r`, in nondecreasing
/// length. `visit(length, last_saddle, parent_node)` returns the node id
/// later passed as parent to the path's extensions.
fn walk(g: &ConcatGraph, x: usize, r: f64, mut visit: impl FnMut(f64, usize, usize) -> usize) {
    let mut heap = BinaryHeap::new();
    for s in 0..g.len() {
        if g.start(s) == x && g.length(s) <= r {
            heap.push(Entry { length: g.length(s), saddle: s, node: usize::MAX });
        }
    }
    while let Some(e) = heap.pop() {
        let node = visit(e.length, e.saddle, e.node);
        for &t in g.successors(e.saddle) {
            let l = e.length + g.length(t);
            if l <= r {
                heap.push(Entry { length: l, saddle: t, node });
            }
        }
    }
}

/// All saddle connection paths from `x` of length ≤ `r`, shortest first.
pub fn enumerate_paths(g: &ConcatGraph, x: usize, r: f64) -> Result<Vec<SaddlePath>> {
    g.cone_checked(x)?;
    g.check_radius(r)?;
    let mut arena: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    walk(g, x, r, |length, saddle, parent| {
        arena.push((saddle, parent));
        let node = arena.len() - 1;
        let mut ids = Vec::new();
        let mut cur = node;
        while cur != usize::MAX {
            ids.push(arena[cur].0);
            cur = arena[cur].1;
        }
        ids.reverse();
        out.push(SaddlePath { saddle_ids: ids, length, initial: x, terminal: g.end(saddle) });
        node
    });
    Ok(out)
}

/// Path lengths from a cone point, sorted, with the terminal `k` of each,
/// enough to evaluate N(x, R), circle lengths and ball volumes at any radius
/// up to `rmax`.
#[derive(Clone, Debug)]
pub struct PathLengths {
    center_k: usize,
    rmax: f64,
    lengths: Vec<f64>,
    terminal_k: Vec<u8>,
}

/// N(x, R), ℓ(C(x, R)), the circle's slope and V_X(R) at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusRow {
    pub r: f64,
    pub count: usize,
    pub circle_length: f64,
    pub circle_slope: f64,
    pub ball_volume: f64,
}

impl PathLengths {
    /// Collects paths from `x` up to `rmax`; with `last` set, only paths
    /// ending in that saddle are kept.
    pub fn collect(g: &ConcatGraph, x: usize, rmax: f64, last: Option<usize>) -> Result<Self> {
        g.cone_checked(x)?;
        g.check_radius(rmax)?;
        let mut lengths = Vec::new();
        let mut terminal_k = Vec::new();
        for_each_path(g, x, rmax, |l, s| {
            if last.map_or(true, |t| t == s) {
                lengths.push(l);
                terminal_k.push(g.k(g.end(s)).min(u8::MAX as usize) as u8);
            }
        })?;
        Ok(PathLengths { center_k: g.k(x), rmax, lengths, terminal_k })
    }

    pub fn rmax(&self) -> f64 {
        self.rmax
    }

    /// Sorted path lengths.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    fn check(&self, r: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::DegenerateRadius(r));
        }
        if r > self.rmax {
            return Err(Error::Truncation { requested: r, available: self.rmax });
        }
        Ok(())
    }

    /// Rows for nondecreasing radii in one sweep over the paths, summing
    /// in nondecreasing ℓ(p).
    pub fn rows(&self, radii: &[f64]) -> Result<Vec<RadiusRow>> {
        let k0 = (self.center_k + 1) as f64;
        let (mut n, mut k_sum, mut kl_sum, mut kll_sum) = (0usize, 0.0, 0.0, 0.0);
        let mut prev = f64::NEG_INFINITY;
        let mut out = Vec::with_capacity(radii.len());
        for &r in radii {
            self.check(r)?;
            if r < prev {
                return Err(Error::InvalidParams("radii must be nondecreasing".into()));
            }
            prev = r;
            while n < self.lengths.len() && self.lengths[n] <= r {
                let (k, l) = (self.terminal_k[n] as f64, self.lengths[n]);
                k_sum += k;
                kl_sum += k * l;
                kll_sum += k * l * l;
                n += 1;
            }
            out.push(RadiusRow {
                r,
                count: n,
                circle_length: 2.0 * PI * (k0 * r + (r * k_sum - kl_sum)),
                circle_slope: 2.0 * PI * (k0 + k_sum),
                ball_volume: PI * (k0 * r * r + (r * r * k_sum - 2.0 * r * kl_sum + kll_sum)),
            });
        }
        Ok(out)
    }

    fn row(&self, r: f64) -> Result<RadiusRow> {
        Ok(self.rows(&[r])?[0])
    }

    /// N(x, R).
    pub fn count(&self, r: f64) -> Result<usize> {
        self.check(r)?;
        Ok(self.lengths.partition_point(|&l| l <= r))
    }

    /// ℓ(C(x, R)) = 2π(k(x)+1)R + Σ 2πk(t(p))(R − ℓ(p)).
    pub fn circle_length(&self, r: f64) -> Result<f64> {
        Ok(self.row(r)?.circle_length)
    }

    /// Slope of R ↦ ℓ(C(x, R)) just above `r`.
    pub fn circle_slope(&self, r: f64) -> Result<f64> {
        Ok(self.row(r)?.circle_slope)
    }

    /// V_X(R) = (k(x)+1)πR² + Σ k(t(p))π(R − ℓ(p))².
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        Ok(self.row(r)?.ball_volume)
    }
}

/// Calls `f(length, last_saddle)` for every path from `x` of length ≤ `r`,
/// in nondecreasing length.
pub fn for_each_path(g: &ConcatGraph, x: usize, r: f64, mut f: impl FnMut(f64, usize)) -> Result<()> {
    g.cone_checked(x)?;
    g.check_radius(r)?;
    walk(g, x, r, |l, s, _| {
        f(l, s);
        0
    });
    Ok(())
}

/// N(x, R).
pub fn count_paths(g: &ConcatGraph, x: usize, r: f64) -> Result<usize> {
    PathLengths::collect(g, x, r, None)?.count(r)
}

/// N(x, s', R): paths from `x` of length ≤ R whose last saddle is `last`.
pub fn count_paths_ending(g: &ConcatGraph, x: usize, last: usize, r: f64) -> Result<usize> {
    if last >= g.len() {
        return Err(Error::UnknownSaddle(last));
    }
    PathLengths::collect(g, x, r, Some(last))?.count(r)
}

pub fn circle_length(g: &ConcatGraph, x: usize, r: f64) -> Result<f64> {
    PathLengths::collect(g, x, r, None)?.circle_length(r)
}

pub fn ball_volume_closed(g: &ConcatGraph, x: usize, r: f64) -> Result<f64> {
    PathLengths::collect(g, x, r, None)?.ball_volume(r)
}

/// Radii `step, 2·step, …` up to `rmax` (inclusive within rounding).
pub fn radius_grid(rmax: f64, step: f64) -> Vec<f64> {
    let n = (rmax / step + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// CSV with columns `R,N,circle_length,ball_volume`.
pub fn radius_grid_csv(p: &PathLengths, grid: &[f64]) -> Result<String> {
    use crate::report::sig12;
    let mut out = String::from("R,N,circle_length,ball_volume\n");
    for row in p.rows(grid)? {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig12(row.r),
            row.count,
            sig12(row.circle_length),
            sig12(row.ball_volume)
        ));
    }
    Ok(out)
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
