//! *-core peeling of the essential hypergraph.
//!
//! A vertex is removable when it is essential in no remaining edge; removing
//! it deletes every edge that contains it. Removable vertices are processed
//! generation by generation, so generation `i` is exactly the set removed
//! by parallel round `i` and the per-round statistics come for free.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hypergraph::EssentialHypergraph;
use crate::sampler::rng_from_seed;

/// Counts split by sign: `(Λ⁺, Λ⁻)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignSplit {
    pub plus: usize,
    pub minus: usize,
}

impl SignSplit {
    pub fn total(&self) -> usize {
        self.plus + self.minus
    }

    fn add(&mut self, sign: i8, delta: isize) {
        let slot = if sign > 0 {
            &mut self.plus
        } else {
            &mut self.minus
        };
        *slot = (*slot as isize + delta) as usize;
    }
}

/// State of the surviving hypergraph `H(i)` at the start of round `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    /// Surviving vertices.
    pub x: SignSplit,
    /// Surviving edges, by the sign of their essential vertex.
    pub y: SignSplit,
    /// Vertices removed in this round.
    pub a: SignSplit,
    /// Surviving vertices essential in exactly one surviving edge.
    pub b: SignSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelTrace {
    /// Removed vertices with the round that removed them, in removal order.
    pub removal_order: Vec<(u32, u32)>,
    /// Removal round of each vertex; `None` for vertices that survive.
    pub round_of: Vec<Option<u32>>,
    pub round_stats: Vec<RoundStats>,
    /// Rounds that removed at least one vertex.
    pub rounds: usize,
    /// Whether peeling ran to completion (false when cut off by `i_max`).
    pub stabilized: bool,
}

/// The *-core of `Γ` together with the per-vertex data the freezing
/// analysis needs.
#[derive(Clone, Debug)]
pub struct StarCore<'g> {
    gamma: &'g EssentialHypergraph,
    in_core: Vec<bool>,
    edge_alive: Vec<bool>,
    /// For each core vertex in `H₁`, its unique surviving essential edge.
    single_edge: Vec<Option<u32>>,
}

impl<'g> StarCore<'g> {
    pub fn gamma(&self) -> &'g EssentialHypergraph {
        self.gamma
    }

    pub fn contains(&self, v: u32) -> bool {
        self.in_core[v as usize]
    }

    pub fn membership(&self) -> &[bool] {
        &self.in_core
    }

    pub fn is_edge_alive(&self, e: u32) -> bool {
        self.edge_alive[e as usize]
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.in_core.len() as u32).filter(|&v| self.in_core[v as usize])
    }

    pub fn edges(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.edge_alive.len() as u32).filter(|&e| self.edge_alive[e as usize])
    }

    pub fn vertex_count(&self) -> usize {
        self.in_core.iter().filter(|&&b| b).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_alive.iter().filter(|&&b| b).count()
    }

    /// Surviving edges in which `v` is essential.
    pub fn essential_edges(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.gamma
            .essential_edges(v)
            .iter()
            .copied()
            .filter(|&e| self.edge_alive[e as usize])
    }

    /// Surviving edges in which `v` is non-essential.
    pub fn nonessential_edges(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.gamma
            .nonessential_edges(v)
            .iter()
            .copied()
            .filter(|&e| self.edge_alive[e as usize])
    }

    pub fn in_h1(&self, v: u32) -> bool {
        self.single_edge[v as usize].is_some()
    }

    /// `H₁`, sorted.
    pub fn h1(&self) -> Vec<u32> {
        (0..self.single_edge.len() as u32)
            .filter(|&v| self.in_h1(v))
            .collect()
    }

    /// `e(x)`: the unique surviving edge in which the `H₁` vertex `x` is
    /// essential.
    pub fn single_edge(&self, x: u32) -> Option<u32> {
        self.single_edge[x as usize]
    }

    /// Vertices of `e(x)` other than `x`.
    pub fn single_edge_others(&self, x: u32) -> &'g [u32] {
        match self.single_edge[x as usize] {
            Some(e) => self.gamma.non_essential(e),
            None => &[],
        }
    }
}

struct Peeler<'g> {
    gamma: &'g EssentialHypergraph,
    alive: Vec<bool>,
    edge_alive: Vec<bool>,
    degree: Vec<u32>,
    x: SignSplit,
    y: SignSplit,
    b: SignSplit,
}

impl<'g> Peeler<'g> {
    fn new(gamma: &'g EssentialHypergraph) -> Self {
        let n = gamma.n_vertices();
        let degree: Vec<u32> = (0..n as u32)
            .map(|v| gamma.essential_edges(v).len() as u32)
            .collect();
        let mut p = Peeler {
            gamma,
            alive: vec![true; n],
            edge_alive: vec![true; gamma.edge_count()],
            degree,
            x: SignSplit::default(),
            y: SignSplit::default(),
            b: SignSplit::default(),
        };
        for v in 0..n as u32 {
            p.x.add(gamma.sign(v), 1);
            if p.degree[v as usize] == 1 {
                p.b.add(gamma.sign(v), 1);
            }
        }
        for e in 0..gamma.edge_count() as u32 {
            p.y.add(gamma.sign(gamma.essential(e)), 1);
        }
        p
    }

    /// Removes `v`; calls `on_free` for each vertex whose essential degree
    /// drops to zero.
    fn remove(&mut self, v: u32, mut on_free: impl FnMut(u32)) {
        let g = self.gamma;
        self.alive[v as usize] = false;
        let sv = g.sign(v);
        self.x.add(sv, -1);
        if self.degree[v as usize] == 1 {
            self.b.add(sv, -1);
        }
        for e in g.incident_edges(v) {
            if !self.edge_alive[e as usize] {
                continue;
            }
            self.edge_alive[e as usize] = false;
            let u = g.essential(e);
            self.y.add(g.sign(u), -1);
            if u == v {
                continue;
            }
            let d = &mut self.degree[u as usize];
            *d -= 1;
            if *d == 1 {
                self.b.add(g.sign(u), 1);
            } else if *d == 0 {
                self.b.add(g.sign(u), -1);
                if self.alive[u as usize] {
                    on_free(u);
                }
            }
        }
        self.degree[v as usize] = 0;
    }

    fn snapshot(&self, round: usize) -> RoundStats {
        RoundStats {
            round,
            x: self.x,
            y: self.y,
            a: SignSplit::default(),
            b: self.b,
        }
    }
}

/// Parallel rounds of the *-core process, run for at most `i_max` rounds.
pub fn parallel_rounds(gamma: &EssentialHypergraph, i_max: usize) -> PeelTrace {
    run_rounds(gamma, i_max).0
}

fn run_rounds(gamma: &EssentialHypergraph, i_max: usize) -> (PeelTrace, Peeler<'_>) {
    let n = gamma.n_vertices();
    let mut p = Peeler::new(gamma);
    let mut round_of = vec![None; n];
    let mut removal_order = Vec::new();
    let mut round_stats = Vec::new();
    let mut current: Vec<u32> = (0..n as u32)
        .filter(|&v| p.degree[v as usize] == 0)
        .collect();
    let mut stabilized = true;
    let mut round = 0usize;
    if n > 0 {
        loop {
            let mut stats = p.snapshot(round);
            if current.is_empty() {
                round_stats.push(stats);
                break;
            }
            if round >= i_max {
                round_stats.push(stats);
                stabilized = false;
                break;
            }
            let mut next = Vec::new();
            for &v in &current {
                stats.a.add(gamma.sign(v), 1);
                round_of[v as usize] = Some(round as u32);
                removal_order.push((v, round as u32));
            }
            for &v in &current {
                p.remove(v, |u| next.push(u));
            }
            round_stats.push(stats);
            current = next;
            round += 1;
        }
    }
    let trace = PeelTrace {
        removal_order,
        round_of,
        round_stats,
        rounds: round,
        stabilized,
    };
    (trace, p)
}

fn finish_core<'g>(
    gamma: &'g EssentialHypergraph,
    alive: Vec<bool>,
    edge_alive: Vec<bool>,
    degree: &[u32],
) -> StarCore<'g> {
    let single_edge = (0..gamma.n_vertices() as u32)
        .map(|v| {
            if alive[v as usize] && degree[v as usize] == 1 {
                gamma
                    .essential_edges(v)
                    .iter()
                    .copied()
                    .find(|&e| edge_alive[e as usize])
            } else {
                None
            }
        })
        .collect();
    StarCore {
        gamma,
        in_core: alive,
        edge_alive,
        single_edge,
    }
}

/// The *-core of `Γ` and the full peeling trace.
pub fn peel_star_core(gamma: &EssentialHypergraph) -> (StarCore<'_>, PeelTrace) {
    let (trace, p) = run_rounds(gamma, usize::MAX);
    let core = finish_core(gamma, p.alive, p.edge_alive, &p.degree);
    (core, trace)
}

/// Peels in a random order determined by `seed`; the resulting core does
/// not depend on the order.
pub fn peel_star_core_randomized(gamma: &EssentialHypergraph, seed: u64) -> StarCore<'_> {
    let mut rng = rng_from_seed(seed);
    let mut p = Peeler::new(gamma);
    let mut pending: Vec<u32> = (0..gamma.n_vertices() as u32)
        .filter(|&v| p.degree[v as usize] == 0)
        .collect();
    pending.shuffle(&mut rng);
    while !pending.is_empty() {
        let i = rng.gen_range(0..pending.len());
        let v = pending.swap_remove(i);
        let mut freed = Vec::new();
        p.remove(v, |u| freed.push(u));
        pending.extend(freed);
    }
    finish_core(gamma, p.alive, p.edge_alive, &p.degree)
}

/// *-depth of a vertex: `Finite(d)` for peeled vertices, `Infinite` for
/// core vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StarDepth {
    Finite(u32),
    Infinite,
}

impl StarDepth {
    pub fn finite(self) -> Option<u32> {
        match self {
            StarDepth::Finite(d) => Some(d),
            StarDepth::Infinite => None,
        }
    }
}

impl std::fmt::Display for StarDepth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StarDepth::Finite(d) => write!(f, "{d}"),
            StarDepth::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-vertex depth at scale: the parallel round that removes the vertex.
/// This bounds the exact *-depth from above.
pub fn star_depth(trace: &PeelTrace) -> Vec<StarDepth> {
    trace
        .round_of
        .iter()
        .map(|r| r.map_or(StarDepth::Infinite, StarDepth::Finite))
        .collect()
}

/// Exact *-depth of `x`: the least `D` such that `x` is removed when only
/// vertices within distance `D` of `x` may be peeled. A peeling chain of
/// depth `D` lies inside that ball, and peeling inside the ball removes
/// everything any such chain can.
pub fn exact_star_depth(gamma: &EssentialHypergraph, x: u32, upper: StarDepth) -> StarDepth {
    let limit = match upper {
        StarDepth::Finite(d) => d,
        StarDepth::Infinite => return StarDepth::Infinite,
    };
    let n = gamma.n_vertices();
    let mut dist = vec![u32::MAX; n];
    let mut order = vec![x];
    dist[x as usize] = 0;
    let mut queue = VecDeque::from([x]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        if dv == limit {
            continue;
        }
        for u in gamma.neighbours(v) {
            if dist[u as usize] == u32::MAX {
                dist[u as usize] = dv + 1;
                order.push(u);
                queue.push_back(u);
            }
        }
    }
    for d in 0..=limit {
        if removable_within(gamma, x, &order, &dist, d) {
            return StarDepth::Finite(d);
        }
    }
    // cannot happen when `upper` comes from the round index
    upper
}

fn removable_within(
    gamma: &EssentialHypergraph,
    x: u32,
    ball: &[u32],
    dist: &[u32],
    d: u32,
) -> bool {
    use std::collections::{HashMap, HashSet};
    let inside = |v: u32| dist[v as usize] <= d;
    let mut degree: HashMap<u32, u32> = HashMap::new();
    let mut dead_edges: HashSet<u32> = HashSet::new();
    let mut stack = Vec::new();
    for &v in ball.iter().filter(|&&v| inside(v)) {
        let deg = gamma.essential_edges(v).len() as u32;
        degree.insert(v, deg);
        if deg == 0 {
            stack.push(v);
        }
    }
    let mut removed: HashSet<u32> = HashSet::new();
    while let Some(v) = stack.pop() {
        if !removed.insert(v) {
            continue;
        }
        if v == x {
            return true;
        }
        for e in gamma.incident_edges(v) {
            if !dead_edges.insert(e) {
                continue;
            }
            let u = gamma.essential(e);
            if u != v && inside(u) {
                let du = degree.get_mut(&u).unwrap();
                *du -= 1;
                if *du == 0 {
                    stack.push(u);
                }
            }
        }
    }
    false
}

/// Summary of a *-core.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoreSummary {
    pub vertices: usize,
    pub edges: usize,
    pub vertices_plus: usize,
    pub vertices_minus: usize,
    pub h1_plus: usize,
    pub h1_minus: usize,
    /// `(k-1)|H₁|/|V(H*)|`, zero for an empty core.
    pub branching_ratio: f64,
}

pub fn core_stats(core: &StarCore) -> CoreSummary {
    let g = core.gamma();
    let mut s = CoreSummary::default();
    for v in core.vertices() {
        let plus = g.sign(v) > 0;
        if plus {
            s.vertices_plus += 1;
        } else {
            s.vertices_minus += 1;
        }
        if core.in_h1(v) {
            if plus {
                s.h1_plus += 1;
            } else {
                s.h1_minus += 1;
            }
        }
    }
    s.vertices = s.vertices_plus + s.vertices_minus;
    s.edges = core.edge_count();
    if s.vertices > 0 {
        s.branching_ratio =
            (g.arity() - 1) as f64 * (s.h1_plus + s.h1_minus) as f64 / s.vertices as f64;
    }
    s
}
