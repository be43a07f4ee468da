//! Detached scales, conflicted discontinuities and the short closed curve they produce.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::cell::Complex;
use super::geometry::ConePoint;
use super::returns::{return_data, ReturnData, ReturnError};
use crate::flow::{OrbitState, TwoSheetIET};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error(transparent)]
    Return(#[from] ReturnError),
    #[error("interior is not a union of strips")]
    Unsupported,
    #[error("interior has no horizontal boundary")]
    NoBoundary,
    #[error("detachment needs a non-empty set")]
    EmptySet,
    #[error("N must exceed 1")]
    BadN,
    #[error("no detached scale below the trajectory length")]
    NoDetachment,
    #[error("conflicted discontinuity {0} meets its cone point after M")]
    SpecialEarly(usize),
    #[error("class of cone point {0:?} has valence {1}")]
    LowValence(ConePoint, usize),
    #[error("no late interval, hence no conflicted discontinuity")]
    NoConflict,
}

/// `S` meets `[0, M)` and `(C M, inf)` but not `[M, C M]`.
pub fn is_detached(set: &[f64], m: f64, c: f64) -> bool {
    set.iter().any(|&x| x >= 0.0 && x < m)
        && set.iter().any(|&x| x > c * m)
        && !set.iter().any(|&x| x >= m && x <= c * m)
}

#[derive(Clone, Debug, Serialize)]
pub struct Detachment {
    pub m: f64,
    /// `C = N^c`.
    pub c: f64,
    pub c_exp: f64,
    /// Consecutive partition points around `[M, C M]`.
    pub gap: (f64, f64),
}

/// Detached scale inside `[left, right]` for the partition of that window by `set`.
///
/// Among consecutive partition points `a < b` with `b / a > C` the widest log-gap wins,
/// and `M = sqrt(a b / C)` centres `[M, C M]` in it.
pub fn find_detachment(
    set: &[f64],
    n: f64,
    d: usize,
    left: f64,
    right: f64,
) -> Result<Option<Detachment>, CertError> {
    if set.is_empty() {
        return Err(CertError::EmptySet);
    }
    if !(n > 1.0) {
        return Err(CertError::BadN);
    }
    if d == 0 || !(left > 0.0) || !(right > left) {
        return Ok(None);
    }
    let c_exp = 1.0 / (2.0 * d as f64);
    let c = n.powf(c_exp);
    let mut pts: Vec<f64> = set
        .iter()
        .copied()
        .filter(|&x| x > left && x < right)
        .collect();
    pts.push(left);
    pts.push(right);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut best: Option<(f64, Detachment)> = None;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b / a <= c {
            continue;
        }
        let m = (a * b / c).sqrt();
        if !is_detached(set, m, c) {
            continue;
        }
        let gap = (b / a).ln();
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((
                gap,
                Detachment {
                    m,
                    c,
                    c_exp,
                    gap: (a, b),
                },
            ));
        }
    }
    Ok(best.map(|(_, d)| d))
}

#[derive(Clone, Debug, Serialize)]
pub struct Conflicts {
    pub m: f64,
    /// Per return interval: leaves before `M`.
    pub early: Vec<bool>,
    /// Discontinuity indices.
    pub conflicted: Vec<usize>,
}

/// Discontinuities between an early and a late interval; a segment endpoint counts when
/// its only neighbour is late. Each must meet its cone point before `M`.
pub fn classify_conflicted(rd: &ReturnData, m: f64) -> Result<Conflicts, CertError> {
    let early: Vec<bool> = rd.intervals.iter().map(|i| i.leave_time < m).collect();
    let mut conflicted = Vec::new();
    for (k, nb) in rd.neighbours().into_iter().enumerate() {
        let is = match nb {
            (Some(l), Some(r)) => early[l] != early[r],
            (Some(i), None) | (None, Some(i)) => !early[i],
            (None, None) => false,
        };
        if is {
            if rd.discontinuities[k].hit_time >= m {
                return Err(CertError::SpecialEarly(k));
            }
            conflicted.push(k);
        }
    }
    Ok(Conflicts {
        m,
        early,
        conflicted,
    })
}

/// Undirected multigraph; loops allowed.
#[derive(Clone, Debug, Serialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

/// A closed walk: edge index and whether it is run from its first vertex to its second.
pub type Cycle = Vec<(usize, bool)>;

impl Graph {
    pub fn valence(&self) -> Vec<usize> {
        let mut v = vec![0; self.n];
        for &(a, b) in &self.edges {
            v[a] += 1;
            v[b] += 1;
        }
        v
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize, bool)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            adj[a].push((i, b, true));
            if a != b {
                adj[b].push((i, a, false));
            }
        }
        adj
    }

    /// Some cycle, if the graph has one.
    pub fn find_cycle(&self) -> Option<Cycle> {
        if let Some(i) = self.edges.iter().position(|&(a, b)| a == b) {
            return Some(vec![(i, true)]);
        }
        let adj = self.adjacency();
        let mut depth = vec![usize::MAX; self.n];
        // parent edge of each vertex on the DFS tree, run towards the vertex
        let mut parent: Vec<Option<(usize, usize, bool)>> = vec![None; self.n];
        for root in 0..self.n {
            if depth[root] != usize::MAX {
                continue;
            }
            depth[root] = 0;
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if *next == adj[u].len() {
                    stack.pop();
                    continue;
                }
                let (e, w, fwd) = adj[u][*next];
                *next += 1;
                if parent[u].is_some_and(|p| p.0 == e) {
                    continue;
                }
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    parent[w] = Some((e, u, fwd));
                    stack.push((w, 0));
                } else if depth[w] < depth[u] {
                    // back edge to an ancestor: walk w -> ... -> u then close with e
                    let mut path = Vec::new();
                    let mut x = u;
                    while x != w {
                        let (pe, px, pf) = parent[x].unwrap();
                        path.push((pe, pf));
                        x = px;
                    }
                    path.reverse();
                    path.push((e, fwd));
                    return Some(path);
                }
            }
        }
        None
    }

    /// Every simple cycle, up to `limit` of them, each listed once.
    pub fn simple_cycles(&self, limit: usize) -> Vec<Cycle> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if a == b && seen.insert(vec![i]) {
                out.push(vec![(i, true)]);
            }
        }
        for s in 0..self.n {
            let mut path: Cycle = Vec::new();
            let mut on = vec![false; self.n];
            on[s] = true;
            self.cycles_from(s, s, &adj, &mut on, &mut path, &mut seen, &mut out, limit);
            if out.len() >= limit {
                break;
            }
        }
        out.truncate(limit);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn cycles_from(
        &self,
        s: usize,
        u: usize,
        adj: &[Vec<(usize, usize, bool)>],
        on: &mut [bool],
        path: &mut Cycle,
        seen: &mut BTreeSet<Vec<usize>>,
        out: &mut Vec<Cycle>,
        limit: usize,
    ) {
        for &(e, w, fwd) in &adj[u] {
            if out.len() >= limit
                || w < s
                || path.iter().any(|p| p.0 == e)
                || self.edges[e].0 == self.edges[e].1
            {
                continue;
            }
            if w == s {
                if path.is_empty() {
                    continue;
                }
                path.push((e, fwd));
                let mut key: Vec<usize> = path.iter().map(|p| p.0).collect();
                key.sort_unstable();
                if seen.insert(key) {
                    out.push(path.clone());
                }
                path.pop();
            } else if !on[w] {
                on[w] = true;
                path.push((e, fwd));
                self.cycles_from(s, w, adj, on, path, seen, out, limit);
                path.pop();
                on[w] = false;
            }
        }
    }
}

/// Chain over a maximal run of late intervals, between its two conflicted ends.
#[derive(Clone, Debug, Serialize)]
pub struct ChainEdge {
    pub from: usize,
    pub to: usize,
    /// Holonomy from the cone point of `from` to that of `to`.
    pub holonomy: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ConflictCertificate {
    /// Vertices are the classes of the relation, one per cone point.
    pub vertices: Vec<ConePoint>,
    pub graph: Graph,
    pub chains: Vec<ChainEdge>,
    pub valence: Vec<usize>,
    /// Whether `T(p+) = T(q-)` only ever relates discontinuities of the same cone point.
    pub relation_consistent: bool,
    pub cycle: Cycle,
    pub holonomy: (f64, f64),
}

fn vertex(c: ConePoint) -> usize {
    c as usize
}

pub fn conflict_certificate(
    rd: &ReturnData,
    cf: &Conflicts,
) -> Result<ConflictCertificate, CertError> {
    let discs = &rd.discontinuities;
    let mut chains = Vec::new();
    let mut run_start: Option<usize> = None;
    for (k, iv) in rd.intervals.iter().enumerate() {
        let late = !cf.early[k];
        let continues = k > 0
            && rd.intervals[k - 1].segment == iv.segment
            && rd.intervals[k - 1].right == iv.left;
        if late && (run_start.is_none() || !continues) {
            run_start = Some(iv.left);
        }
        let run_ends = !late || k + 1 == rd.intervals.len() || {
            let nx = &rd.intervals[k + 1];
            cf.early[k + 1] || nx.segment != iv.segment || nx.left != iv.right
        };
        if late && run_ends {
            let a = run_start.take().unwrap();
            let b = iv.right;
            chains.push(ChainEdge {
                from: a,
                to: b,
                holonomy: (
                    discs[b].x - discs[a].x,
                    discs[b].hit_time - discs[a].hit_time,
                ),
            });
        }
    }
    if chains.is_empty() {
        return Err(CertError::NoConflict);
    }
    let graph = Graph {
        n: 2,
        edges: chains
            .iter()
            .map(|c| (vertex(discs[c.from].cone), vertex(discs[c.to].cone)))
            .collect(),
    };
    let valence = graph.valence();
    for &k in &cf.conflicted {
        let c = discs[k].cone;
        if valence[vertex(c)] < 2 {
            return Err(CertError::LowValence(c, valence[vertex(c)]));
        }
    }

    let nb = rd.neighbours();
    let mut relation_consistent = true;
    for (p, np) in nb.iter().enumerate() {
        for (q, nq) in nb.iter().enumerate() {
            if let (Some(r), Some(l)) = (np.1, nq.0) {
                if rd.image(r, p) == rd.image(l, q) && discs[p].cone != discs[q].cone {
                    relation_consistent = false;
                }
            }
        }
    }

    let hol = |cy: &Cycle| {
        cy.iter().fold((0.0, 0.0), |acc, &(e, fwd)| {
            let (x, y) = chains[e].holonomy;
            let s = if fwd { 1.0 } else { -1.0 };
            (acc.0 + s * x, acc.1 + s * y)
        })
    };
    let size = |h: (f64, f64)| {
        if h.1 == 0.0 {
            f64::INFINITY
        } else {
            (2.0 * h.0.abs() * h.1.abs()).sqrt()
        }
    };
    let cycles = graph.simple_cycles(10_000);
    let cycle = cycles
        .iter()
        .min_by(|a, b| size(hol(a)).partial_cmp(&size(hol(b))).unwrap())
        .cloned()
        .or_else(|| graph.find_cycle())
        .ok_or(CertError::LowValence(ConePoint::P, 0))?;
    let holonomy = hol(&cycle);
    Ok(ConflictCertificate {
        vertices: vec![ConePoint::P, ConePoint::Q],
        graph,
        chains,
        valence,
        relation_consistent,
        cycle,
        holonomy,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyConfig {
    pub samples: usize,
    pub seed: u64,
    pub step_cap: u64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            samples: 10_000,
            seed: 0,
            step_cap: 100_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sampling {
    pub samples: usize,
    pub target_steps: u64,
    pub longest_steps: u64,
    /// Largest leaving time over the continuity intervals, from the exact return data.
    pub max_interval_leave: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    /// 1: every trajectory leaves before `N A / h`; 2: a short closed curve exists.
    pub branch: u8,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub h: f64,
    pub d: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "c")]
    pub c_exp: Option<f64>,
    pub conflicted: Vec<usize>,
    pub cycle: Cycle,
    pub curve_holonomy: Option<(f64, f64)>,
    pub shrink_time: Option<f64>,
    /// Time at which the curve is shortest, before clipping to the time bound.
    pub t_star: Option<f64>,
    pub shrunk_length: Option<f64>,
    pub length_bound: Option<f64>,
    pub time_bound: Option<f64>,
    pub bounds_ok: Option<bool>,
    pub sampling: Option<Sampling>,
}

impl DichotomyReport {
    fn branch_one(n: f64, area: f64, h: f64, sampling: Option<Sampling>) -> Self {
        DichotomyReport {
            branch: 1,
            n,
            area,
            h,
            d: None,
            m: None,
            c: None,
            c_exp: None,
            conflicted: Vec::new(),
            cycle: Vec::new(),
            curve_holonomy: None,
            shrink_time: None,
            t_star: None,
            shrunk_length: None,
            length_bound: None,
            time_bound: None,
            bounds_ok: None,
            sampling,
        }
    }
}

/// Either no vertical trajectory of length `N A / h` stays in the complex, or a closed
/// curve built from conflicted discontinuities shrinks below the stated bound.
pub fn dichotomy_check(
    iet: &TwoSheetIET,
    c: &Complex,
    n: f64,
    cfg: &DichotomyConfig,
) -> Result<DichotomyReport, CertError> {
    if !(n > 1.0) {
        return Err(CertError::BadN);
    }
    if !c.has_interior() {
        return Ok(DichotomyReport::branch_one(
            n,
            0.0,
            c.boundary_horizontal(),
            None,
        ));
    }
    if !c.triangles.is_empty() {
        return Err(CertError::Unsupported);
    }
    let area = c.area();
    let h = c.boundary_horizontal();
    if h <= 0.0 {
        return Err(CertError::NoBoundary);
    }
    let rd = return_data(iet, c, cfg.step_cap)?;
    let target_time = n * area / h;
    let target_steps = (target_time / rd.time_scale).ceil() as u64;

    // stratified starts along the inward boundary
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total: u128 = rd.segments.iter().map(|s| s.hi - s.lo).sum();
    let mut longest = 0u64;
    for k in 0..cfg.samples {
        let u = (k as f64 + rng.gen::<f64>()) / cfg.samples as f64;
        let mut off = (u * total as f64) as u128;
        let seg = rd.segments.iter().find(|s| {
            let len = s.hi - s.lo;
            if off < len {
                true
            } else {
                off -= len;
                false
            }
        });
        let Some(seg) = seg else { continue };
        let raw = (seg.lo + off).clamp(seg.lo + 1, seg.hi - 1);
        let mut st = OrbitState {
            raw,
            sheet: seg.sheet,
            step: 0,
        };
        while st.step < target_steps {
            match iet.step(&st) {
                Ok(nx) if c.strips.contains(&nx.sheet) => st = nx,
                _ => break,
            }
        }
        longest = longest.max(st.step);
    }
    let sampling = Sampling {
        samples: cfg.samples,
        target_steps,
        longest_steps: longest,
        max_interval_leave: Some(rd.max_leave_time()),
    };
    if longest < target_steps {
        return Ok(DichotomyReport::branch_one(n, area, h, Some(sampling)));
    }

    let d = rd.d();
    let mut set = rd.hit_times();
    let leaves = rd.leave_times();
    let left = leaves.iter().copied().fold(f64::INFINITY, f64::min);
    set.extend(leaves);
    let det = find_detachment(&set, n, d, left, target_time)?.ok_or(CertError::NoDetachment)?;
    let cf = classify_conflicted(&rd, det.m)?;
    let cert = conflict_certificate(&rd, &cf)?;

    let (x, y) = (cert.holonomy.0.abs(), cert.holonomy.1.abs());
    let df = d as f64;
    let length_bound = 2f64.sqrt() * df.powf(1.5) * n.powf(-det.c_exp) * area.sqrt();
    let time_bound = 0.5 * (df * n * n * area / (h * h)).ln();
    let t_star = if x > 0.0 && y > 0.0 {
        Some(0.5 * (y / x).ln())
    } else {
        None
    };
    let shrink_time = t_star.map_or(time_bound, |t| t.min(time_bound));
    let shrunk_length = (shrink_time.exp() * x).hypot((-shrink_time).exp() * y);
    let bounds_ok = shrunk_length <= length_bound && shrink_time <= time_bound;
    Ok(DichotomyReport {
        branch: 2,
        n,
        area,
        h,
        d: Some(d),
        m: Some(det.m),
        c: Some(det.c),
        c_exp: Some(det.c_exp),
        conflicted: cf.conflicted,
        cycle: cert.cycle,
        curve_holonomy: Some(cert.holonomy),
        shrink_time: Some(shrink_time),
        t_star,
        shrunk_length: Some(shrunk_length),
        length_bound: Some(length_bound),
        time_bound: Some(time_bound),
        bounds_ok: Some(bounds_ok),
        sampling: Some(sampling),
    })
}
