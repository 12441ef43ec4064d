//! Graph approximation of the Randers distance on a sphere.
//!
//! Points are unit vectors in `R^D` (complex or quaternionic coordinates
//! flattened to reals). Edge `i -> j` costs `F_x(P_x(y - x))`, where `P_x`
//! removes the normal component and `F_x` is the invariant norm carried to
//! `x` by the isometry group:
//!
//! * unitary families: `q = Im <x, w>`, `|u|^2 = |w|^2 - q^2`,
//! * symplectic family: `q = Im <x, w>_H` (three components).
//!
//! Shortest paths come from Dijkstra. [`refined_distance`] polishes a
//! graph path between arbitrary points by subdivision and local relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cosets::ModelSpace;
use crate::error::{invalid, Error, Result};
use crate::flows::{apply_flow, FlowGenerator, FlowIsometry, FlowPoint};
use crate::matrixcore::ComplexVector;
use crate::randers::{MinkowskiNorm, RandersSpec};
use crate::rng::RngStream;

pub const MIN_POINTS: usize = 500;
pub const MIN_DEGREE: usize = 8;
/// Relative spread accepted by [`displacement_profile`].
pub const DISPLACEMENT_TOL: f64 = 0.07;
/// Longest chord left by [`refined_distance`].
const REFINE_CHORD: f64 = 0.04;
const REFINE_SWEEPS: usize = 30;

/// Real coordinates `(re_0, im_0, re_1, im_1, ..)`.
pub fn complex_to_real(v: &ComplexVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn real_to_complex(x: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(x.len() / 2, x.chunks(2).map(|c| Complex64::new(c[0], c[1])))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Invariant norm at an arbitrary point of the sphere.
#[derive(Debug, Clone, Copy)]
struct LocalNorm {
    norm: MinkowskiNorm,
    quaternionic: bool,
}

impl LocalNorm {
    /// `F_x(w)` for `w` tangent at `x`.
    fn eval(&self, x: &[f64], w: &[f64]) -> f64 {
        let wsq = dot(w, w);
        let q = if self.quaternionic {
            // Im of sum conj(x_k) w_k with x_k = a + b i + c j + d k.
            let mut l = [0.0; 3];
            for (xk, wk) in x.chunks(4).zip(w.chunks(4)) {
                let (a, b, c, d) = (xk[0], -xk[1], -xk[2], -xk[3]);
                let (e, f, g, h) = (wk[0], wk[1], wk[2], wk[3]);
                l[0] += a * f + b * e + c * h - d * g;
                l[1] += a * g - b * h + c * e + d * f;
                l[2] += a * h + b * g - c * f + d * e;
            }
            l
        } else {
            let q: f64 = x.chunks(2).zip(w.chunks(2)).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).sum();
            [q, 0.0, 0.0]
        };
        let qsq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
        self.norm.eval_parts(q, (wsq - qsq).max(0.0))
    }

    /// `F_x(P_x(y - x))`.
    fn edge(&self, x: &[f64], y: &[f64]) -> f64 {
        let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let s = dot(x, &d);
        let w: Vec<f64> = d.iter().zip(x).map(|(di, xi)| di - s * xi).collect();
        self.eval(x, &w)
    }

    /// Length of the great arc from `x` to `y`, evaluating the norm at the
    /// arc midpoint.
    fn arc(&self, x: &[f64], y: &[f64]) -> f64 {
        let chord: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let c = dot(&chord, &chord).sqrt();
        if c == 0.0 {
            return 0.0;
        }
        let mut mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        if dot(&mid, &mid) < 1e-12 {
            return f64::INFINITY;
        }
        normalize(&mut mid);
        let theta = 2.0 * (c / 2.0).min(1.0).asin();
        self.eval(&mid, &chord) * theta / c
    }
}

/// Directed neighbour graph on sampled sphere points.
#[derive(Debug, Clone)]
pub struct SphereGraph {
    space: ModelSpace,
    spec: RandersSpec,
    local: LocalNorm,
    points: Vec<Vec<f64>>,
    k: usize,
    /// Out-edges `(j, weight)` of each vertex.
    edges: Vec<Vec<(usize, f64)>>,
    h: f64,
}

fn ambient_dim(space: &ModelSpace) -> usize {
    match *space {
        ModelSpace::USphere { n } => 2 * (n + 1),
        ModelSpace::SpSphere { n } => 4 * (n + 1),
        ModelSpace::Su2 { .. } => 4,
    }
}

fn check_pairing(space: &ModelSpace, s: &RandersSpec) -> Result<()> {
    let ok = match (space, s) {
        (ModelSpace::USphere { n }, RandersSpec::USphere { n: m, .. }) => n == m,
        (ModelSpace::SpSphere { n }, RandersSpec::SpSphere { n: m, .. }) => n == m,
        (ModelSpace::Su2 { .. }, RandersSpec::Su2 { .. }) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(invalid("model space and spec describe different spheres"))
    }
}

impl SphereGraph {
    fn assemble(space: ModelSpace, spec: RandersSpec, points: Vec<Vec<f64>>, k: usize, edges: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let local = LocalNorm {
            norm: spec.norm()?,
            quaternionic: matches!(space, ModelSpace::SpSphere { .. }),
        };
        let mut weights: Vec<f64> = edges.iter().flatten().map(|e| e.1).collect();
        if weights.is_empty() {
            return Err(Error::ResolutionTooCoarse("graph has no edges".into()));
        }
        let mid = weights.len() / 2;
        let h = *weights.select_nth_unstable_by(mid, f64::total_cmp).1;
        let g = Self { space, spec, local, points, k, edges, h };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.points.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.edges[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        if count < n {
            return Err(Error::ResolutionTooCoarse(format!(
                "graph is disconnected: {count} of {n} vertices reachable; raise N or k"
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn spec(&self) -> &RandersSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.edges[i]
    }

    /// Median edge weight, the discretization scale.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edges[i].iter().find(|e| e.0 == j).map(|e| e.1)
    }

    /// `F_x(P_x(y - x))` for arbitrary points.
    pub fn edge_cost(&self, x: &[f64], y: &[f64]) -> f64 {
        self.local.edge(x, y)
    }

    /// Vertex closest to `x` in the ambient metric, with the distance.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let (i, d2) = self
            .points
            .par_iter()
            .enumerate()
            .map(|(i, p)| (i, dist2(p, x)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("graph has vertices");
        (i, d2.sqrt())
    }

    /// Single-source shortest distances and predecessors.
    pub fn shortest_from(&self, from: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        let n = self.points.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Item(0.0, from));
        while let Some(Item(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            for &(j, w) in &self.edges[i] {
                let nd = d + w;
                if nd < dist[j] {
                    dist[j] = nd;
                    prev[j] = Some(i);
                    heap.push(Item(nd, j));
                }
            }
        }
        (dist, prev)
    }

    /// Writes the graph as text: `#` header lines (spec, degree, one
    /// `# point i x_0 .. x_D` line per vertex) followed by `i,j,weight`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# sphere-graph v1")?;
        writeln!(out, "# spec {}", serde_json::to_string(&self.spec)?)?;
        if let ModelSpace::Su2 { v } = self.space {
            writeln!(out, "# su2_v {v}")?;
        }
        writeln!(out, "# k {}", self.k)?;
        for (i, p) in self.points.iter().enumerate() {
            let coords: Vec<String> = p.iter().map(f64::to_string).collect();
            writeln!(out, "# point {i} {}", coords.join(" "))?;
        }
        for (i, es) in self.edges.iter().enumerate() {
            for &(j, w) in es {
                writeln!(out, "{i},{j},{w}")?;
            }
        }
        Ok(())
    }

    /// Reads the format of [`SphereGraph::write_text`].
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut spec = None;
        let mut k = 0;
        let mut su2_v = None;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut edges: Vec<Vec<(usize, f64)>> = Vec::new();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| invalid(format!("bad number {s:?}: {e}")));
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let bad = |what: &str| invalid(format!("line {}: {what}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(json) = rest.strip_prefix("spec ") {
                    spec = Some(serde_json::from_str::<RandersSpec>(json)?);
                } else if let Some(v) = rest.strip_prefix("k ") {
                    k = v.trim().parse().map_err(|_| bad("bad degree"))?;
                } else if let Some(v) = rest.strip_prefix("su2_v ") {
                    su2_v = Some(num(v)?);
                } else if let Some(p) = rest.strip_prefix("point ") {
                    let mut it = p.split_whitespace();
                    let idx: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad point index"))?;
                    if idx != points.len() {
                        return Err(bad("points out of order"));
                    }
                    points.push(it.map(num).collect::<Result<_>>()?);
                    edges.push(Vec::new());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected i,j,weight"));
            }
            let i: usize = f[0].trim().parse().map_err(|_| bad("bad source"))?;
            let j: usize = f[1].trim().parse().map_err(|_| bad("bad target"))?;
            let w = num(f[2])?;
            if i >= points.len() || j >= points.len() || w.is_nan() || w < 0.0 {
                return Err(bad("edge out of range"));
            }
            edges[i].push((j, w));
        }
        let spec = spec.ok_or_else(|| invalid("missing spec header"))?;
        let mut space = ModelSpace::of_spec(&spec);
        if let (ModelSpace::Su2 { v }, Some(sv)) = (&mut space, su2_v) {
            *v = sv;
        }
        if points.is_empty() {
            return Err(invalid("graph has no points"));
        }
        let dim = ambient_dim(&space);
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid(format!("points must have {dim} coordinates")));
        }
        Self::assemble(space, spec, points, k, edges)
    }
}

/// Samples `n_points` uniform points (the orbit of the base point under a
/// Haar-random isometry is uniform) and links every point to its `k`
/// nearest neighbours, in both directions.
pub fn build_graph(space: &ModelSpace, s: &RandersSpec, n_points: usize, k: usize, rng: &mut RngStream) -> Result<SphereGraph> {
    check_pairing(space, s)?;
    if n_points < MIN_POINTS {
        return Err(invalid(format!("N must be at least {MIN_POINTS}")));
    }
    if k < MIN_DEGREE || k >= n_points {
        return Err(invalid(format!("k must be in [{MIN_DEGREE}, N)")));
    }
    let dim = ambient_dim(space);
    let points: Vec<Vec<f64>> = (0..n_points).map(|_| rng.unit_vector(dim)).collect();
    let local = LocalNorm {
        norm: s.norm()?,
        quaternionic: matches!(space, ModelSpace::SpSphere { .. }),
    };
    let knn: Vec<Vec<usize>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (dist2(p, q), j))
                .collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d[..k].iter().map(|e| e.1).collect()
        })
        .collect();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n_points];
    for (i, js) in knn.iter().enumerate() {
        for &j in js {
            nbrs[i].push(j);
            nbrs[j].push(i);
        }
    }
    let edges: Vec<Vec<(usize, f64)>> = nbrs
        .into_par_iter()
        .enumerate()
        .map(|(i, mut js)| {
            js.sort_unstable();
            js.dedup();
            js.into_iter().map(|j| (j, local.edge(&points[i], &points[j]))).collect()
        })
        .collect();
    SphereGraph::assemble(*space, *s, points, k, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub source: usize,
    pub target: usize,
    /// Length of the polished path (see [`refined_distance`]).
    pub distance: f64,
    /// Shortest-path length in the graph.
    pub graph_distance: f64,
    pub hops: usize,
    pub h: f64,
}

/// Distance from vertex `from` to vertex `to`: the graph shortest path and
/// its polished length.
pub fn distance(g: &SphereGraph, from: usize, to: usize) -> Result<DistanceReport> {
    if from >= g.len() || to >= g.len() {
        return Err(invalid("vertex index out of range"));
    }
    let (dist, prev) = g.shortest_from(from);
    if !dist[to].is_finite() {
        return Err(Error::ResolutionTooCoarse(format!("vertex {to} unreachable from {from}")));
    }
    let hops = trace(&prev, from, to);
    let polished = if from == to {
        0.0
    } else {
        polish_between(g, g.point(from), g.point(to), &hops)
    };
    Ok(DistanceReport {
        source: from,
        target: to,
        distance: polished,
        graph_distance: dist[to],
        hops: hops.len() - 1,
        h: g.h,
    })
}

fn trace(prev: &[Option<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur].expect("reachable vertex has a predecessor");
        path.push(cur);
    }
    path.reverse();
    path
}

fn check_point(g: &SphereGraph, x: &[f64]) -> Result<()> {
    if x.len() != ambient_dim(&g.space) {
        return Err(invalid("point has the wrong dimension"));
    }
    if x.iter().any(|v| !v.is_finite()) || (dot(x, x).sqrt() - 1.0).abs() > 1e-9 {
        return Err(invalid("point is not on the unit sphere"));
    }
    Ok(())
}

/// Distance between arbitrary points of the sphere. The graph path between
/// the nearest vertices seeds a chain from `x` to `y`; the chain is
/// subdivided until every chord is short, and each interior node is moved
/// by damped Newton steps to minimise the length of its two arcs.
pub fn refined_distance(g: &SphereGraph, x: &[f64], y: &[f64]) -> Result<f64> {
    check_point(g, x)?;
    check_point(g, y)?;
    if dist2(x, y) == 0.0 {
        return Ok(0.0);
    }
    let (sx, _) = g.nearest(x);
    let (sy, _) = g.nearest(y);
    let (dist, prev) = g.shortest_from(sx);
    if !dist[sy].is_finite() {
        return Err(Error::ResolutionTooCoarse(format!("vertex {sy} unreachable from {sx}")));
    }
    Ok(polish_between(g, x, y, &trace(&prev, sx, sy)))
}

/// Polished length of the chain `x, hops[1..len-1], y`, also trying the
/// great arc when `x` and `y` are not nearly antipodal.
fn polish_between(g: &SphereGraph, x: &[f64], y: &[f64], hops: &[usize]) -> f64 {
    let mut seed: Vec<Vec<f64>> = Vec::with_capacity(hops.len() + 2);
    seed.push(x.to_vec());
    seed.extend(hops.iter().skip(1).take(hops.len().saturating_sub(2)).map(|&i| g.points[i].clone()));
    seed.push(y.to_vec());
    let mut best = polish(&g.local, seed);
    // The great arc seeds the short and mildly non-reversible cases, where
    // a coarse graph path may start in a folded shape.
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    if dot(&sum, &sum) > 1e-2 {
        best = best.min(polish(&g.local, vec![x.to_vec(), y.to_vec()]));
    }
    best
}

fn polish(local: &LocalNorm, mut chain: Vec<Vec<f64>>) -> f64 {
    prune(&mut chain);
    relax(local, &mut chain);
    loop {
        prune(&mut chain);
        let longest = chain.windows(2).map(|w| dist2(&w[0], &w[1]).sqrt()).fold(0.0, f64::max);
        if longest <= REFINE_CHORD {
            break;
        }
        chain = subdivide(&chain);
        relax(local, &mut chain);
    }
    chain.windows(2).map(|w| local.arc(&w[0], &w[1])).sum()
}

/// Drops interior nodes that have collapsed onto a neighbour; the arc cost
/// has a kink there that stalls the Newton steps.
fn prune(chain: &mut Vec<Vec<f64>>) {
    if chain.len() <= 2 {
        return;
    }
    let total: f64 = chain.windows(2).map(|w| dist2(&w[0], &w[1]).sqrt()).sum();
    let floor = 0.1 * total / (chain.len() - 1) as f64;
    let last = chain.pop().expect("chain has endpoints");
    let mut kept = vec![chain[0].clone()];
    for p in chain.iter().skip(1) {
        if dist2(kept.last().expect("non-empty"), p).sqrt() >= floor {
            kept.push(p.clone());
        }
    }
    if kept.len() > 1 && dist2(kept.last().expect("non-empty"), &last).sqrt() < floor {
        kept.pop();
    }
    kept.push(last);
    *chain = kept;
}

fn subdivide(chain: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chain.len());
    for w in chain.windows(2) {
        out.push(w[0].clone());
        let mut mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a + b).collect();
        if dot(&mid, &mid) < 1e-12 {
            // Antipodal neighbours: any orthogonal direction.
            mid = tangent_basis(&w[0]).swap_remove(0);
        }
        normalize(&mut mid);
        out.push(mid);
    }
    out.push(chain.last().expect("non-empty chain").clone());
    out
}

/// Orthonormal basis of the tangent space at unit `x`.
fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut all = vec![x.to_vec()];
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        for _ in 0..2 {
            for b in &all {
                let s = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(ei, bi)| *ei -= s * bi);
            }
        }
        let n = dot(&e, &e).sqrt();
        if n > 1e-6 {
            e.iter_mut().for_each(|v| *v /= n);
            all.push(e.clone());
            basis.push(e);
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    basis
}

fn retract(p: &[f64], basis: &[Vec<f64>], xi: &[f64]) -> Vec<f64> {
    let mut out = p.to_vec();
    for (b, s) in basis.iter().zip(xi) {
        out.iter_mut().zip(b).for_each(|(o, bi)| *o += s * bi);
    }
    normalize(&mut out);
    out
}

/// Gauss-Seidel sweeps of Newton steps on the interior nodes, until a
/// sweep no longer shortens the chain.
fn relax(local: &LocalNorm, chain: &mut [Vec<f64>]) {
    let length = |c: &[Vec<f64>]| c.windows(2).map(|w| local.arc(&w[0], &w[1])).sum::<f64>();
    let mut current = length(chain);
    for _ in 0..REFINE_SWEEPS {
        for i in 1..chain.len() - 1 {
            let (a, b) = (&chain[i - 1], &chain[i + 1]);
            let cost = |p: &[f64]| local.arc(a, p) + local.arc(p, b);
            let scale = dist2(a, b).sqrt().max(1e-6);
            if let Some(next) = newton_step(&cost, &chain[i], scale) {
                chain[i] = next;
            }
        }
        let next = length(chain);
        let gain = current - next;
        current = next;
        if gain <= 1e-6 * current {
            break;
        }
    }
}

fn newton_step(cost: &dyn Fn(&[f64]) -> f64, p: &[f64], scale: f64) -> Option<Vec<f64>> {
    let basis = tangent_basis(p);
    let m = basis.len();
    let delta = 1e-4 * scale;
    let f = |xi: &[f64]| cost(&retract(p, &basis, xi));
    let f0 = cost(p);
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    let mut e = vec![0.0; m];
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for k in 0..m {
        e[k] = delta;
        fp[k] = f(&e);
        e[k] = -delta;
        fm[k] = f(&e);
        e[k] = 0.0;
        grad[k] = (fp[k] - fm[k]) / (2.0 * delta);
        hess[(k, k)] = (fp[k] - 2.0 * f0 + fm[k]) / (delta * delta);
    }
    for k in 0..m {
        for l in k + 1..m {
            let mut x = vec![0.0; m];
            let mut at = |sk: f64, sl: f64| {
                x[k] = sk * delta;
                x[l] = sl * delta;
                f(&x)
            };
            let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * delta * delta);
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    if !f0.is_finite() || grad.iter().any(|g: &f64| !g.is_finite()) {
        return None;
    }
    // Levenberg-Marquardt: the chain direction is nearly flat, so damp
    // the Hessian until a capped step decreases the cost.
    let trace = (0..m).map(|k| hess[(k, k)]).sum::<f64>().abs() / m as f64;
    // Nothing left to gain at this resolution.
    if grad.norm() * scale <= 1e-12 * f0 {
        return None;
    }
    let mut mu = 1e-6 * trace.max(1e-12);
    for _ in 0..12 {
        let damped = &hess + DMatrix::identity(m, m) * mu;
        if let Some(ch) = damped.cholesky() {
            let mut step = -ch.solve(&grad);
            let len = step.norm();
            if len > 0.5 * scale {
                step *= 0.5 * scale / len;
            }
            let cand = retract(p, &basis, step.as_slice());
            if cost(&cand) < f0 {
                return Some(cand);
            }
        }
        mu *= 10.0;
    }
    None
}

/// One sampled displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementSample {
    pub vertex: usize,
    /// Ambient distance from the image point to its nearest vertex.
    pub snap: f64,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementProfile {
    pub samples: Vec<DisplacementSample>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max - min) / mean`.
    pub spread: f64,
    pub tolerance: f64,
    /// Largest snap distance, an upper bound for the error a snap-only
    /// estimate would carry.
    pub snap_uncertainty: f64,
    pub constant: bool,
}

/// Image of a graph point under a flow, in real coordinates.
pub fn flow_point(g: &SphereGraph, f: &FlowIsometry, x: &[f64]) -> Result<Vec<f64>> {
    let point = match (&g.space, &f.generator) {
        (ModelSpace::USphere { n }, FlowGenerator::USphere { x: gen }) if gen.dim() == n + 1 => {
            FlowPoint::Vector(real_to_complex(x))
        }
        (ModelSpace::Su2 { .. }, FlowGenerator::Su2 { .. }) => FlowPoint::Vector(real_to_complex(x)),
        _ => return Err(invalid("flow does not act on this graph's sphere")),
    };
    match apply_flow(f, &point)? {
        FlowPoint::Vector(v) => Ok(complex_to_real(&v)),
        FlowPoint::Group(_) => unreachable!("vector input maps to a vector"),
    }
}

/// Statistics of `d(x, phi(x))` over `sample_points` random vertices.
pub fn displacement_profile(
    g: &SphereGraph,
    f: &FlowIsometry,
    sample_points: usize,
    rng: &mut RngStream,
) -> Result<DisplacementProfile> {
    displacement_profile_with(g, f, sample_points, DISPLACEMENT_TOL, rng)
}

pub fn displacement_profile_with(
    g: &SphereGraph,
    f: &FlowIsometry,
    sample_points: usize,
    tolerance: f64,
    rng: &mut RngStream,
) -> Result<DisplacementProfile> {
    if sample_points == 0 {
        return Err(invalid("need at least one sample point"));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }
    let vertices: Vec<usize> = (0..sample_points).map(|_| rng.index(g.len())).collect();
    let samples = vertices
        .par_iter()
        .map(|&v| {
            let x = g.point(v);
            let y = flow_point(g, f, x)?;
            let (_, snap) = g.nearest(&y);
            Ok(DisplacementSample {
                vertex: v,
                snap,
                displacement: refined_distance(g, x, &y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.displacement).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = if mean > 0.0 { (max - min) / mean } else { 0.0 };
    let snap_uncertainty = samples.iter().map(|s| s.snap).fold(0.0, f64::max);
    Ok(DisplacementProfile {
        samples,
        min,
        max,
        mean,
        spread,
        tolerance,
        snap_uncertainty,
        constant: spread <= tolerance,
    })
}

/// Writes `vertex,snap,displacement` rows.
pub fn write_displacement_csv<W: Write>(out: W, p: &DisplacementProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &p.samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
