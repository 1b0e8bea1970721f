//! Multilevel k-way partitioning: heavy-edge matching, greedy region
//! growing on the coarsest graph, and positive-gain boundary refinement
//! while projecting back.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{balance_cap, HyperedgeGraph, PartitionResult};
use crate::error::{Error, Result};

const INITIAL_TRIALS: usize = 8;
/// Coarsest graphs at most this large get extra initial trials.
const SMALL_GRAPH: usize = 64;
const SMALL_GRAPH_TRIALS: usize = 32;
const REFINE_PASSES: usize = 2;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Level {
    vw: Vec<usize>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Level {
    fn n(&self) -> usize {
        self.vw.len()
    }

    fn cut(&self, part: &[usize]) -> f64 {
        let mut c = 0.0;
        for (u, row) in self.adj.iter().enumerate() {
            for &(v, w) in row {
                if u < v && part[u] != part[v] {
                    c += w;
                }
            }
        }
        c
    }
}

#[derive(PartialEq)]
struct Cand(f64, usize);

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Balanced `q`-way partition minimizing the weighted edge cut.
///
/// Every cluster is non-empty and holds at most `ceil(1.1 * m / q)` vertices.
/// Isolated vertices are dealt round-robin to the smallest clusters after
/// the connected part is partitioned.
pub fn partition_multilevel(g: &HyperedgeGraph, q: usize, seed: u64) -> Result<PartitionResult> {
    let m = g.num_vertices();
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if q > m {
        return Err(Error::InvalidArgument(format!("q = {q} exceeds {m} hyperedges")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = balance_cap(m, q);
    let core: Vec<usize> = (0..m).filter(|&v| g.degree(v) > 0).collect();
    let mut labels = vec![NONE; m];
    let mut sizes = vec![0usize; q];

    if q > 1 && !core.is_empty() {
        let mut index = vec![NONE; m];
        for (i, &v) in core.iter().enumerate() {
            index[v] = i;
        }
        let level = Level {
            vw: vec![1; core.len()],
            adj: core
                .iter()
                .map(|&v| g.adjacency()[v].iter().map(|&(u, w)| (index[u], w)).collect())
                .collect(),
        };
        let bounds = Bounds {
            cap,
            total: m,
            spare: m - core.len(),
        };
        let part = multilevel(&level, q, bounds, &mut rng);
        for (i, &v) in core.iter().enumerate() {
            labels[v] = part[i];
            sizes[part[i]] += 1;
        }
    }
    for v in 0..m {
        if labels[v] == NONE {
            let p = (0..q).min_by_key(|&p| (sizes[p], p)).expect("q >= 1");
            labels[v] = p;
            sizes[p] += 1;
        }
    }
    rebalance(g.adjacency(), &mut labels, q, cap);
    Ok(PartitionResult {
        q,
        edge_cut: g.edge_cut(&labels),
        labels,
        seed,
    })
}

/// Size limits for the connected part: `cap` per cluster, targets computed
/// from `total` vertices, and up to `spare` clusters may stay empty because
/// isolated vertices fill them afterwards.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    cap: usize,
    total: usize,
    spare: usize,
}

fn multilevel(fine: &Level, q: usize, bounds: Bounds, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let cap = bounds.cap;
    let total = fine.n();
    let max_vw = ((1.5 * total as f64) / (4 * q) as f64).ceil().max(2.0) as usize;
    let mut levels = vec![fine.clone()];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().expect("nonempty").n() > 4 * q {
        let cur = levels.last().expect("nonempty");
        let (coarse, map) = coarsen(cur, max_vw, rng);
        if coarse.n() as f64 > 0.95 * cur.n() as f64 {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }

    let coarsest = levels.last().expect("nonempty");
    let mut best: Option<(bool, f64, Vec<usize>)> = None;
    let trials = if coarsest.n() <= SMALL_GRAPH { SMALL_GRAPH_TRIALS } else { INITIAL_TRIALS };
    for t in 0..trials {
        let mut part = grow_regions(coarsest, q, bounds, t % 2 == 1, rng);
        refine(coarsest, &mut part, q, bounds, rng);
        let weights = part_weights(coarsest, &part, q);
        let empties = weights.iter().filter(|&&w| w == 0).count();
        let balanced = weights.iter().all(|&w| w <= cap) && empties <= bounds.spare;
        let cut = coarsest.cut(&part);
        let better = match &best {
            None => true,
            Some((b, c, _)) => (balanced && !b) || (balanced == *b && cut < *c),
        };
        if better {
            best = Some((balanced, cut, part));
        }
    }
    let mut part = best.expect("at least one trial").2;

    for l in (0..maps.len()).rev() {
        let map = &maps[l];
        part = map.iter().map(|&c| part[c]).collect();
        refine(&levels[l], &mut part, q, bounds, rng);
    }
    part
}

fn coarsen(g: &Level, max_vw: usize, rng: &mut ChaCha8Rng) -> (Level, Vec<usize>) {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut map = vec![NONE; n];
    let mut next = 0;
    for &v in &order {
        if map[v] != NONE {
            continue;
        }
        let mut mate = NONE;
        let mut best = 0.0;
        for &(u, w) in &g.adj[v] {
            if map[u] == NONE && u != v && g.vw[u] + g.vw[v] <= max_vw && w > best {
                best = w;
                mate = u;
            }
        }
        map[v] = next;
        if mate != NONE {
            map[mate] = next;
        }
        next += 1;
    }
    let mut vw = vec![0; next];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); next];
    for v in 0..n {
        vw[map[v]] += g.vw[v];
        for &(u, w) in &g.adj[v] {
            if map[u] != map[v] {
                rows[map[v]].push((map[u], w));
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(c, w) in row.iter() {
            match merged.last_mut() {
                Some((lc, lw)) if *lc == c => *lw += w,
                _ => merged.push((c, w)),
            }
        }
        *row = merged;
    }
    (Level { vw, adj: rows }, map)
}

/// Grow `q - 1` regions one at a time from random seeds, always adding the
/// unassigned vertex most strongly connected to the region; the last part
/// takes the rest. With `jitter` each region's target size is drawn between
/// the even share and the cap.
fn grow_regions(g: &Level, q: usize, bounds: Bounds, jitter: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.n();
    let cap = bounds.cap;
    let mut part = vec![NONE; n];
    let mut remaining = bounds.total;
    for p in 0..q - 1 {
        let even = remaining.div_ceil(q - p);
        let target = if jitter && even < cap { rng.gen_range(even..=cap) } else { even };
        let mut weight = 0;
        let mut conn = vec![0.0; n];
        let mut skipped = vec![false; n];
        let mut heap = BinaryHeap::new();
        while weight < target {
            let v = loop {
                match heap.pop() {
                    Some(Cand(c, v)) if part[v] == NONE && !skipped[v] && c == conn[v] => break Some(v),
                    Some(_) => continue,
                    None => break None,
                }
            };
            let v = match v {
                Some(v) => v,
                None => {
                    let free: Vec<usize> = (0..n).filter(|&v| part[v] == NONE && !skipped[v]).collect();
                    match free.choose(rng) {
                        Some(&v) => v,
                        None => break,
                    }
                }
            };
            if weight + g.vw[v] > cap {
                skipped[v] = true;
                continue;
            }
            part[v] = p;
            weight += g.vw[v];
            for &(u, w) in &g.adj[v] {
                if part[u] == NONE {
                    conn[u] += w;
                    heap.push(Cand(conn[u], u));
                }
            }
        }
        remaining = remaining.saturating_sub(weight.max(remaining.div_ceil(q - p)));
    }
    for p in part.iter_mut() {
        if *p == NONE {
            *p = q - 1;
        }
    }
    part
}

fn part_weights(g: &Level, part: &[usize], q: usize) -> Vec<usize> {
    let mut w = vec![0; q];
    for (v, &p) in part.iter().enumerate() {
        w[p] += g.vw[v];
    }
    w
}

#[derive(PartialEq)]
struct Move {
    gain: f64,
    v: usize,
    to: usize,
    version: u32,
}

impl Eq for Move {}

impl Ord for Move {
    fn cmp(&self, o: &Self) -> Ordering {
        self.gain
            .total_cmp(&o.gain)
            .then_with(|| o.v.cmp(&self.v))
            .then_with(|| o.to.cmp(&self.to))
    }
}

impl PartialOrd for Move {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct PassState<'a> {
    g: &'a Level,
    part: &'a mut [usize],
    weights: Vec<usize>,
    empties: usize,
    bounds: Bounds,
    conn: Vec<f64>,
    touched: Vec<usize>,
}

impl PassState<'_> {
    /// Best boundary move of `v` that respects the bounds.
    fn best_move(&mut self, v: usize) -> Option<(f64, usize)> {
        let from = self.part[v];
        for &(u, w) in &self.g.adj[v] {
            let p = self.part[u];
            if self.conn[p] == 0.0 {
                self.touched.push(p);
            }
            self.conn[p] += w;
        }
        let own = self.conn[from];
        let vw = self.g.vw[v];
        let mut best: Option<(f64, usize)> = None;
        for &p in &self.touched {
            if p == from || self.weights[p] + vw > self.bounds.cap {
                continue;
            }
            let empties = self.empties + usize::from(self.weights[from] == vw) - usize::from(self.weights[p] == 0);
            if empties > self.bounds.spare {
                continue;
            }
            let gain = self.conn[p] - own;
            if best.is_none_or(|(bg, bp)| gain > bg || (gain == bg && p < bp)) {
                best = Some((gain, p));
            }
        }
        for &p in &self.touched {
            self.conn[p] = 0.0;
        }
        self.touched.clear();
        best
    }

    fn on_boundary(&self, v: usize) -> bool {
        self.g.adj[v].iter().any(|&(u, _)| self.part[u] != self.part[v])
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.part[v];
        let vw = self.g.vw[v];
        self.empties = self.empties + usize::from(self.weights[from] == vw) - usize::from(self.weights[to] == 0);
        self.weights[from] -= vw;
        self.weights[to] += vw;
        self.part[v] = to;
    }
}

/// Fiduccia-Mattheyses passes: boundary vertices move one at a time in
/// order of gain, each at most once per pass, and the pass is rolled back
/// to its best prefix, so the cut never increases.
fn refine(g: &Level, part: &mut [usize], q: usize, bounds: Bounds, rng: &mut ChaCha8Rng) {
    let n = g.n();
    let weights = part_weights(g, part, q);
    let empties = weights.iter().filter(|&&w| w == 0).count();
    let mut st = PassState {
        g,
        part,
        weights,
        empties,
        bounds,
        conn: vec![0.0; q],
        touched: Vec::new(),
    };
    let patience = 50.max(n / 20);
    for _ in 0..REFINE_PASSES {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut locked = vec![false; n];
        let mut version = vec![0u32; n];
        let mut heap = BinaryHeap::new();
        // Boundary vertices whose every move is currently blocked by the bounds.
        let mut blocked = Vec::new();
        for &v in &order {
            match st.best_move(v) {
                Some((gain, to)) => heap.push(Move { gain, v, to, version: 0 }),
                None if st.on_boundary(v) => blocked.push(v),
                None => {}
            }
        }
        let mut log: Vec<(usize, usize)> = Vec::new();
        let (mut cum, mut best_cum, mut best_len, mut since_best) = (0.0, 0.0, 0, 0);
        while let Some(mv) = heap.pop() {
            if locked[mv.v] || mv.version != version[mv.v] {
                continue;
            }
            match st.best_move(mv.v) {
                Some((gain, to)) if gain == mv.gain && to == mv.to => {}
                Some((gain, to)) => {
                    heap.push(Move { gain, v: mv.v, to, version: version[mv.v] });
                    continue;
                }
                None => continue,
            }
            log.push((mv.v, st.part[mv.v]));
            st.apply(mv.v, mv.to);
            locked[mv.v] = true;
            cum += mv.gain;
            if cum > best_cum + 1e-12 {
                best_cum = cum;
                best_len = log.len();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > patience {
                    break;
                }
            }
            for &(u, _) in &g.adj[mv.v] {
                if !locked[u] {
                    version[u] += 1;
                    match st.best_move(u) {
                        Some((gain, to)) => heap.push(Move { gain, v: u, to, version: version[u] }),
                        None if st.on_boundary(u) => blocked.push(u),
                        None => {}
                    }
                }
            }
            blocked.retain(|&u| {
                if locked[u] {
                    return false;
                }
                match st.best_move(u) {
                    Some((gain, to)) => {
                        version[u] += 1;
                        heap.push(Move { gain, v: u, to, version: version[u] });
                        false
                    }
                    None => true,
                }
            });
            blocked.sort_unstable();
            blocked.dedup();
        }
        for &(v, from) in log[best_len..].iter().rev() {
            st.apply(v, from);
        }
        if best_len == 0 {
            break;
        }
    }
}

/// Enforce the size cap and non-empty clusters on unit-weight vertices,
/// choosing each forced move with the smallest cut increase.
fn rebalance(adj: &[Vec<(usize, f64)>], labels: &mut [usize], q: usize, cap: usize) {
    let mut sizes = vec![0usize; q];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    loop {
        let over = (0..q).find(|&p| sizes[p] > cap);
        let empty = (0..q).find(|&p| sizes[p] == 0);
        let (from, to_choices): (usize, Vec<usize>) = match (empty, over) {
            (Some(e), _) => {
                let from = (0..q).max_by_key(|&p| (sizes[p], std::cmp::Reverse(p))).expect("q >= 1");
                (from, vec![e])
            }
            (None, Some(o)) => (o, (0..q).filter(|&p| sizes[p] < cap).collect()),
            (None, None) => break,
        };
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for v in (0..labels.len()).filter(|&v| labels[v] == from) {
            for &to in &to_choices {
                let mut delta = 0.0;
                for &(u, w) in &adj[v] {
                    if labels[u] == from {
                        delta += w;
                    } else if labels[u] == to {
                        delta -= w;
                    }
                }
                let key = (delta, sizes[to], v, to);
                let better = match best {
                    None => true,
                    Some(b) => key.0 < b.0 || (key.0 == b.0 && (key.1, key.2, key.3) < (b.1, b.2, b.3)),
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let (_, _, v, to) = best.expect("source cluster is non-empty");
        labels[v] = to;
        sizes[from] -= 1;
        sizes[to] += 1;
    }
}
