//! Flippable sets in the *-core and exact freezing on small instances.
//!
//! Vertex sets are passed as slices of vertex ids; duplicates are ignored.
//! `H₁` is the set of core vertices essential in exactly one core edge and
//! `e(x)` that edge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{build_gamma, EssentialHypergraph};
use crate::model::{CspModel, SignVector};
use crate::peel::{exact_star_depth, peel_star_core, star_depth, StarCore, StarDepth};
use crate::sampler::{derive_seed, sample_uniform_small, CspInstance};
use crate::solutions::{enumerate_solutions, signs_to_mask, MAX_ENUMERATION_VARS};

/// Largest candidate set searched exhaustively for a weak-flippability
/// witness.
pub const MAX_WITNESS_CANDIDATES: usize = 24;

fn membership(n: usize, set: &[u32]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v as usize] = true;
    }
    m
}

fn sorted_unique(set: &[u32]) -> Vec<u32> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn require_in_core(core: &StarCore, set: &[u32]) -> Result<()> {
    let n = core.gamma().n_vertices();
    match set.iter().find(|&&v| v as usize >= n || !core.contains(v)) {
        Some(v) => Err(Error::Input(format!("vertex {v} is not in the *-core"))),
        None => Ok(()),
    }
}

/// Every core edge in which some `x ∈ S` is essential contains another
/// vertex of `S`. `in_s` marks `S`; `members` lists it.
fn flippable_marked(core: &StarCore, in_s: &[bool], members: &[u32]) -> bool {
    let g = core.gamma();
    members.iter().all(|&x| {
        core.essential_edges(x)
            .all(|e| g.non_essential(e).iter().any(|&u| in_s[u as usize]))
    })
}

pub fn is_flippable(core: &StarCore, s: &[u32]) -> Result<bool> {
    require_in_core(core, s)?;
    let in_s = membership(core.gamma().n_vertices(), s);
    Ok(flippable_marked(core, &in_s, s))
}

/// The largest flippable subset of `u`: the union of all flippable subsets.
pub fn greatest_flippable_subset(core: &StarCore, u: &[u32]) -> Result<Vec<u32>> {
    require_in_core(core, u)?;
    let g = core.gamma();
    let mut inside = membership(g.n_vertices(), u);
    let violates = |x: u32, inside: &[bool]| {
        core.essential_edges(x)
            .any(|e| !g.non_essential(e).iter().any(|&w| inside[w as usize]))
    };
    let mut stack: Vec<u32> = sorted_unique(u);
    while let Some(x) = stack.pop() {
        if !inside[x as usize] || !violates(x, &inside) {
            continue;
        }
        inside[x as usize] = false;
        // vertices essential in an edge through x may now fail
        for e in core.nonessential_edges(x) {
            let y = g.essential(e);
            if inside[y as usize] {
                stack.push(y);
            }
        }
    }
    Ok(sorted_unique(u)
        .into_iter()
        .filter(|&v| inside[v as usize])
        .collect())
}

/// `D(S)`, its out-degree-zero part `A_S = S∖H₁` and its cycle part `C_S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlippableDecomposition {
    pub s: Vec<u32>,
    /// `(x, x')` for each `x ∈ S∩H₁`: the lowest-index vertex of
    /// `S ∩ e(x)∖{x}`.
    pub arcs: Vec<(u32, u32)>,
    pub a_s: Vec<u32>,
    pub c_s: Vec<u32>,
}

impl FlippableDecomposition {
    pub fn target(&self, x: u32) -> Option<u32> {
        self.arcs
            .binary_search_by_key(&x, |&(a, _)| a)
            .ok()
            .map(|i| self.arcs[i].1)
    }
}

/// Builds `D(S)` and checks that `A_S` is weakly flippable with witness
/// `S∩H₁`, that `C_S` is cyclic and that `S ⊆ cl(A_S ∪ C_S)`.
pub fn decompose_flippable(core: &StarCore, s: &[u32]) -> Result<FlippableDecomposition> {
    let s = sorted_unique(s);
    if !is_flippable(core, &s)? {
        return Err(Error::Contract("set is not flippable".into()));
    }
    let n = core.gamma().n_vertices();
    let in_s = membership(n, &s);
    let mut arcs = Vec::new();
    let mut a_s = Vec::new();
    for &x in &s {
        if core.in_h1(x) {
            let target = core
                .single_edge_others(x)
                .iter()
                .copied()
                .filter(|&u| in_s[u as usize])
                .min()
                .expect("flippable sets meet e(x) again");
            arcs.push((x, target));
        } else {
            a_s.push(x);
        }
    }
    let mut next = vec![u32::MAX; n];
    for &(x, y) in &arcs {
        next[x as usize] = y;
    }
    // walk the functional graph; 0 = unseen, 1 = on current walk, 2 = done
    let mut state = vec![0u8; n];
    let mut on_cycle = vec![false; n];
    for &start in &s {
        let mut walk = Vec::new();
        let mut v = start;
        while v != u32::MAX && state[v as usize] == 0 {
            state[v as usize] = 1;
            walk.push(v);
            v = next[v as usize];
        }
        if v != u32::MAX && state[v as usize] == 1 {
            let pos = walk.iter().position(|&w| w == v).unwrap();
            for &w in &walk[pos..] {
                on_cycle[w as usize] = true;
            }
        }
        for w in walk {
            state[w as usize] = 2;
        }
    }
    let c_s: Vec<u32> = s
        .iter()
        .copied()
        .filter(|&v| on_cycle[v as usize])
        .collect();
    let d = FlippableDecomposition {
        s: s.clone(),
        arcs,
        a_s,
        c_s,
    };

    let witness: Vec<u32> = s.iter().copied().filter(|&v| core.in_h1(v)).collect();
    let mut union = d.a_s.clone();
    union.extend(&witness);
    if !is_flippable(core, &union)? {
        return Err(Error::Assertion("A_S ∪ (S∩H₁) is not flippable".into()));
    }
    if !is_cyclic(core, &d.c_s)? {
        return Err(Error::Assertion("C_S is not cyclic".into()));
    }
    let mut base = d.a_s.clone();
    base.extend(&d.c_s);
    let cl = membership(n, &closure(core, &base)?);
    if let Some(v) = s.iter().find(|&&v| !cl[v as usize]) {
        return Err(Error::Assertion(format!(
            "{v} ∈ S lies outside cl(A_S ∪ C_S)"
        )));
    }
    Ok(d)
}

/// For each vertex `u`, the `H₁` vertices `w` with `u ∈ e(w)∖{w}`.
fn reverse_single_edges(core: &StarCore) -> Vec<Vec<u32>> {
    let n = core.gamma().n_vertices();
    let mut rev = vec![Vec::new(); n];
    for w in core.h1() {
        for &u in core.single_edge_others(w) {
            rev[u as usize].push(w);
        }
    }
    rev
}

/// `cl(A)`: `A` together with every `x ∈ H₁∖A` that reaches `A` by a chain
/// `x = x_0, ..., x_l ∈ A` with `x_{i+1} ∈ e(x_i)` and intermediate vertices
/// in `H₁∖A`. Computed by a worklist from `A` backwards along `e(·)`.
pub fn closure(core: &StarCore, a: &[u32]) -> Result<Vec<u32>> {
    require_in_core(core, a)?;
    let rev = reverse_single_edges(core);
    let mut inside = membership(core.gamma().n_vertices(), a);
    let mut work = sorted_unique(a);
    let mut out = work.clone();
    while let Some(u) = work.pop() {
        for &w in &rev[u as usize] {
            if !inside[w as usize] {
                inside[w as usize] = true;
                out.push(w);
                work.push(w);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Outcome of a weak-flippability search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakFlipWitness {
    /// A witness `P ⊆ H₁` with `A ∪ P` flippable, minimum among sets of
    /// size at most `ψ` when `exhaustive` is true.
    pub witness: Option<Vec<u32>>,
    pub exhaustive: bool,
}

fn weak_candidates(core: &StarCore, a: &[u32]) -> Result<Option<Vec<u32>>> {
    require_in_core(core, a)?;
    if let Some(v) = a.iter().find(|&&v| core.in_h1(v)) {
        return Err(Error::Input(format!("vertex {v} of A lies in H₁")));
    }
    // any witness P has A ∪ P inside the greatest flippable subset of A ∪ H₁
    let mut pool = sorted_unique(a);
    pool.extend(core.h1());
    let g = greatest_flippable_subset(core, &pool)?;
    let in_g = membership(core.gamma().n_vertices(), &g);
    if a.iter().any(|&v| !in_g[v as usize]) {
        return Ok(None);
    }
    Ok(Some(g.into_iter().filter(|&v| core.in_h1(v)).collect()))
}

/// Exhaustive search, by increasing size up to `psi`, for `P ⊆ H₁` with
/// `A ∪ P` flippable. The search runs over the `H₁` vertices of the greatest
/// flippable subset of `A ∪ H₁`, which contains every witness; it refuses
/// candidate sets larger than [`MAX_WITNESS_CANDIDATES`].
pub fn is_weakly_flippable(core: &StarCore, a: &[u32], psi: usize) -> Result<Option<Vec<u32>>> {
    let Some(cands) = weak_candidates(core, a)? else {
        return Ok(None);
    };
    if cands.len() > MAX_WITNESS_CANDIDATES {
        return Err(Error::Scale(format!(
            "{} witness candidates exceed the exhaustive limit {MAX_WITNESS_CANDIDATES}; use weakly_flippable_heuristic",
            cands.len()
        )));
    }
    let a = sorted_unique(a);
    let n = core.gamma().n_vertices();
    let mut in_s = membership(n, &a);
    let mut members = a.clone();
    for size in 0..=psi.min(cands.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            for &i in &idx {
                in_s[cands[i] as usize] = true;
                members.push(cands[i]);
            }
            let ok = flippable_marked(core, &in_s, &members);
            let chosen: Vec<u32> = idx.iter().map(|&i| cands[i]).collect();
            for &v in &chosen {
                in_s[v as usize] = false;
            }
            members.truncate(a.len());
            if ok {
                return Ok(Some(chosen));
            }
            if !next_combination(&mut idx, cands.len()) {
                break;
            }
        }
    }
    Ok(None)
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Non-exhaustive witness search: start from every admissible `H₁` vertex
/// and drop vertices in index order while `A ∪ P` stays flippable. May miss
/// witnesses of size at most `psi`.
pub fn weakly_flippable_heuristic(
    core: &StarCore,
    a: &[u32],
    psi: usize,
) -> Result<WeakFlipWitness> {
    let Some(mut p) = weak_candidates(core, a)? else {
        return Ok(WeakFlipWitness {
            witness: None,
            exhaustive: true,
        });
    };
    let a = sorted_unique(a);
    let mut i = 0;
    while i < p.len() {
        let mut trial: Vec<u32> = a.clone();
        trial.extend(
            p.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v),
        );
        if is_flippable(core, &trial)? {
            p.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(WeakFlipWitness {
        witness: (p.len() <= psi).then_some(p),
        exhaustive: false,
    })
}

/// Whether some permutation `π` of `C` has `x_{π(j)} ∈ e(x_j)` for all `j`,
/// decided as a perfect matching between `C` and itself.
pub fn is_cyclic(core: &StarCore, c: &[u32]) -> Result<bool> {
    require_in_core(core, c)?;
    if let Some(v) = c.iter().find(|&&v| !core.in_h1(v)) {
        return Err(Error::Input(format!("vertex {v} is not in H₁")));
    }
    let c = sorted_unique(c);
    let pos = |v: u32| c.binary_search(&v).ok();
    let adj: Vec<Vec<usize>> = c
        .iter()
        .map(|&x| {
            core.single_edge_others(x)
                .iter()
                .filter_map(|&u| pos(u))
                .collect()
        })
        .collect();
    let mut matched_to: Vec<Option<usize>> = vec![None; c.len()];
    fn augment(
        j: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        matched_to: &mut [Option<usize>],
    ) -> bool {
        for &t in &adj[j] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            if matched_to[t].is_none_or(|o| augment(o, adj, seen, matched_to)) {
                matched_to[t] = Some(j);
                return true;
            }
        }
        false
    }
    for j in 0..c.len() {
        let mut seen = vec![false; c.len()];
        if !augment(j, &adj, &mut seen, &mut matched_to) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Solutions of a small instance joined when they differ on at most `ell`
/// variables. Assignments are packed as in [`crate::solutions`].
#[derive(Clone, Debug)]
pub struct SolutionGraph {
    n: usize,
    ell: usize,
    solutions: Vec<u32>,
    present: Vec<u64>,
}

impl SolutionGraph {
    pub fn new(m: &CspModel, f: &CspInstance, ell: usize) -> Result<Self> {
        Ok(Self::from_solutions(f.n(), enumerate_solutions(m, f)?, ell))
    }

    pub fn from_solutions(n: usize, mut solutions: Vec<u32>, ell: usize) -> Self {
        assert!(n <= MAX_ENUMERATION_VARS);
        solutions.sort_unstable();
        solutions.dedup();
        let mut present = vec![0u64; (1usize << n).div_ceil(64)];
        for &s in &solutions {
            present[(s / 64) as usize] |= 1 << (s % 64);
        }
        SolutionGraph {
            n,
            ell,
            solutions,
            present,
        }
    }

    pub fn solutions(&self) -> &[u32] {
        &self.solutions
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn contains(&self, s: u32) -> bool {
        (s as usize) < (1usize << self.n) && self.present[(s / 64) as usize] >> (s % 64) & 1 == 1
    }

    fn flip_count(&self) -> f64 {
        (1..=self.ell.min(self.n))
            .map(|i| (0..i).fold(1.0, |acc, j| acc * (self.n - j) as f64 / (j + 1) as f64))
            .sum()
    }

    /// Calls `visit` on every solution adjacent to `s`.
    pub fn for_each_neighbour(&self, s: u32, mut visit: impl FnMut(u32)) {
        if self.flip_count() <= self.solutions.len() as f64 {
            for size in 1..=self.ell.min(self.n) {
                let mut idx: Vec<usize> = (0..size).collect();
                loop {
                    let t = idx.iter().fold(s, |acc, &i| acc ^ (1 << i));
                    if self.contains(t) {
                        visit(t);
                    }
                    if !next_combination(&mut idx, self.n) {
                        break;
                    }
                }
            }
        } else {
            for &t in &self.solutions {
                let d = (s ^ t).count_ones() as usize;
                if d >= 1 && d <= self.ell {
                    visit(t);
                }
            }
        }
    }

    /// The connected component containing `s`, sorted.
    pub fn component(&self, s: u32) -> Vec<u32> {
        let mut seen = vec![0u64; self.present.len()];
        let mark = |seen: &mut Vec<u64>, t: u32| {
            let w = &mut seen[(t / 64) as usize];
            let fresh = *w >> (t % 64) & 1 == 0;
            *w |= 1 << (t % 64);
            fresh
        };
        let mut out = vec![s];
        mark(&mut seen, s);
        let mut i = 0;
        while i < out.len() {
            let cur = out[i];
            self.for_each_neighbour(cur, |t| {
                if mark(&mut seen, t) {
                    out.push(t);
                }
            });
            i += 1;
        }
        out.sort_unstable();
        out
    }

    /// Variables on which every solution reachable from `s` agrees with `s`.
    pub fn frozen_set(&self, s: u32) -> Vec<u32> {
        let comp = self.component(s);
        let (or, and) = comp
            .iter()
            .fold((0u32, u32::MAX), |(o, a), &t| (o | t, a & t));
        (0..self.n as u32)
            .filter(|&v| (or ^ and) >> v & 1 == 0)
            .collect()
    }
}

/// Variables that no `ell`-path of solutions from `σ` can change.
pub fn exact_frozen_set(
    m: &CspModel,
    f: &CspInstance,
    sigma: &SignVector,
    ell: usize,
) -> Result<Vec<u32>> {
    if sigma.len() != f.n() {
        return Err(Error::Input("assignment length differs from n".into()));
    }
    let g = SolutionGraph::new(m, f, ell)?;
    let s = signs_to_mask(sigma);
    if !g.contains(s) {
        return Err(Error::Contract("assignment is not a solution".into()));
    }
    Ok(g.frozen_set(s))
}

/// Whether the core vertices on which two solutions differ
/// form a flippable set.
pub fn difference_is_flippable(core: &StarCore, sigma: u32, other: u32) -> bool {
    let n = core.gamma().n_vertices();
    let diff = sigma ^ other;
    let in_s: Vec<bool> = (0..n)
        .map(|v| diff >> v & 1 == 1 && core.contains(v as u32))
        .collect();
    let members: Vec<u32> = (0..n as u32).filter(|&v| in_s[v as usize]).collect();
    flippable_marked(core, &in_s, &members)
}

/// A peeling chain for a peeled vertex together with the constraints that
/// touch it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelingChain {
    /// Chain vertices in a valid removal order (ending with the target).
    pub vertices: Vec<u32>,
    /// Indices of every constraint of `F` containing a chain vertex.
    pub constraints: Vec<u32>,
    /// Whether the variable–constraint incidence graph of those constraints
    /// is a forest.
    pub acyclic: bool,
}

/// Builds a peeling chain for `x` by following, for each essential edge of a
/// chain vertex, the non-essential vertex removed earliest (lowest index on
/// ties). `round_of` comes from the peeling trace; `x` must be peeled.
pub fn peeling_chain(
    f: &CspInstance,
    gamma: &EssentialHypergraph,
    round_of: &[Option<u32>],
    x: u32,
) -> Result<PeelingChain> {
    if round_of[x as usize].is_none() {
        return Err(Error::Input(format!("vertex {x} is in the *-core")));
    }
    let n = f.n();
    let mut in_chain = vec![false; n];
    let mut order = Vec::new();
    // iterative post-order: killers before the vertices they free
    let mut stack = vec![(x, false)];
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            order.push(v);
            continue;
        }
        if in_chain[v as usize] {
            continue;
        }
        in_chain[v as usize] = true;
        stack.push((v, true));
        for &e in gamma.essential_edges(v) {
            let killer = gamma
                .non_essential(e)
                .iter()
                .copied()
                .filter_map(|u| round_of[u as usize].map(|r| (r, u)))
                .min()
                .map(|(_, u)| u)
                .ok_or_else(|| {
                    Error::Assertion("peeled vertex has an edge with no peeled vertex".into())
                })?;
            if !in_chain[killer as usize] {
                stack.push((killer, false));
            }
        }
    }
    order.sort_by_key(|&v| (round_of[v as usize], v));
    let constraints: Vec<u32> = (0..f.len() as u32)
        .filter(|&c| f.vars(c as usize).iter().any(|&v| in_chain[v as usize]))
        .collect();
    // union-find over variables 0..n and constraints n..n+|W|
    let mut parent: Vec<usize> = (0..n + constraints.len()).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    let mut acyclic = true;
    'outer: for (i, &c) in constraints.iter().enumerate() {
        for &v in f.vars(c as usize) {
            let (a, b) = (find(&mut parent, v as usize), find(&mut parent, n + i));
            if a == b {
                acyclic = false;
                break 'outer;
            }
            parent[a] = b;
        }
    }
    Ok(PeelingChain {
        vertices: order,
        constraints,
        acyclic,
    })
}

/// Flips the chain vertices of `sigma` one at a time; returns the sequence
/// of solutions visited, or `None` if some single flip breaks a constraint.
pub fn chain_flip_path(
    m: &CspModel,
    f: &CspInstance,
    sigma: &SignVector,
    chain: &PeelingChain,
) -> Option<Vec<SignVector>> {
    let mut cur = sigma.as_slice().to_vec();
    let mut path = vec![sigma.clone()];
    for &v in &chain.vertices {
        cur[v as usize] = -cur[v as usize];
        let ok = chain.constraints.iter().all(|&c| {
            m.member(f.member(c as usize))
                .eval_index(f.local_index(c as usize, &cur))
        });
        if !ok {
            return None;
        }
        path.push(SignVector::new(cur.clone()).ok()?);
    }
    Some(path)
}

/// Per-variable outcome of one freezing trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableRecord {
    pub trial: usize,
    pub variable: u32,
    pub in_core: bool,
    pub star_depth: StarDepth,
    /// Frozen status for each requested `ell`, in order.
    pub frozen: Vec<bool>,
    /// For peeled variables, whether the constraints around its peeling
    /// chain contain a cycle; false for core variables.
    pub near_short_cycle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezeTrial {
    pub trial: usize,
    pub seed: u64,
    pub constraints: usize,
    pub solutions: usize,
    pub retries: u64,
    pub core_vertices: usize,
    /// Solutions `σ'` for which the core part of `σ Δ σ'` is not flippable.
    pub difference_violations: usize,
    pub records: Vec<VariableRecord>,
}

/// Counts of core/non-core against frozen/unfrozen for one `ell`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub ell: usize,
    pub core_frozen: usize,
    pub core_unfrozen: usize,
    pub noncore_frozen: usize,
    pub noncore_unfrozen: usize,
    /// Non-core frozen variables whose chain neighbourhood has a cycle.
    pub noncore_frozen_near_cycle: usize,
}

impl Agreement {
    pub fn agreement_rate(&self) -> f64 {
        let total =
            self.core_frozen + self.core_unfrozen + self.noncore_frozen + self.noncore_unfrozen;
        if total == 0 {
            1.0
        } else {
            (self.core_frozen + self.noncore_unfrozen) as f64 / total as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezeScanReport {
    pub ell_list: Vec<usize>,
    pub trials: Vec<FreezeTrial>,
    pub agreement: Vec<Agreement>,
    pub difference_violations: usize,
}

/// Runs `trials` independent uniform-model draws and analyses each exactly.
pub fn frozen_scan(
    m: &CspModel,
    n: usize,
    count: usize,
    ell_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<FreezeScanReport> {
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::Scale(format!(
            "freeze scans need n <= {MAX_ENUMERATION_VARS}"
        )));
    }
    if ell_list.contains(&0) {
        return Err(Error::Input("ell values must be positive".into()));
    }
    let results: Vec<Result<FreezeTrial>> = (0..trials)
        .into_par_iter()
        .map(|t| freeze_trial(m, n, count, ell_list, t, derive_seed(seed, t as u64)))
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut agreement: Vec<Agreement> = ell_list
        .iter()
        .map(|&ell| Agreement {
            ell,
            ..Agreement::default()
        })
        .collect();
    for t in &trials {
        for r in &t.records {
            for (i, a) in agreement.iter_mut().enumerate() {
                match (r.in_core, r.frozen[i]) {
                    (true, true) => a.core_frozen += 1,
                    (true, false) => a.core_unfrozen += 1,
                    (false, true) => {
                        a.noncore_frozen += 1;
                        if r.near_short_cycle {
                            a.noncore_frozen_near_cycle += 1;
                        }
                    }
                    (false, false) => a.noncore_unfrozen += 1,
                }
            }
        }
    }
    let difference_violations = trials.iter().map(|t| t.difference_violations).sum();
    Ok(FreezeScanReport {
        ell_list: ell_list.to_vec(),
        trials,
        agreement,
        difference_violations,
    })
}

fn freeze_trial(
    m: &CspModel,
    n: usize,
    count: usize,
    ell_list: &[usize],
    trial: usize,
    seed: u64,
) -> Result<FreezeTrial> {
    let draw = sample_uniform_small(m, n, count, seed)?;
    let f = &draw.instance;
    let gamma = build_gamma(f, &draw.sigma, m)?;
    let (core, trace) = peel_star_core(&gamma);
    let depths = star_depth(&trace);
    let sols = enumerate_solutions(m, f)?;
    let s = signs_to_mask(&draw.sigma);
    let difference_violations = sols
        .iter()
        .filter(|&&t| !difference_is_flippable(&core, s, t))
        .count();
    let frozen_by_ell: Vec<Vec<bool>> = ell_list
        .iter()
        .map(|&ell| {
            let g = SolutionGraph::from_solutions(n, sols.clone(), ell);
            let mut mark = vec![false; n];
            for v in g.frozen_set(s) {
                mark[v as usize] = true;
            }
            mark
        })
        .collect();
    let mut records = Vec::with_capacity(n);
    for v in 0..n as u32 {
        let in_core = core.contains(v);
        let depth = exact_star_depth(&gamma, v, depths[v as usize]);
        let near_short_cycle = if in_core {
            false
        } else {
            !peeling_chain(f, &gamma, &trace.round_of, v)?.acyclic
        };
        records.push(VariableRecord {
            trial,
            variable: v,
            in_core,
            star_depth: depth,
            frozen: frozen_by_ell.iter().map(|fr| fr[v as usize]).collect(),
            near_short_cycle,
        });
    }
    Ok(FreezeTrial {
        trial,
        seed,
        constraints: f.len(),
        solutions: sols.len(),
        retries: draw.retries,
        core_vertices: core.vertex_count(),
        difference_violations,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::peel::tests::{chain_instance, triangle_instance};

    #[test]
    fn flippable_examples() {
        let g = triangle_instance();
        let (core, _) = peel_star_core(&g);
        assert!(is_flippable(&core, &[]).unwrap());
        assert!(is_flippable(&core, &[0, 1, 2]).unwrap());
        assert!(!is_flippable(&core, &[0]).unwrap());
        let g2 = chain_instance();
        let (empty, _) = peel_star_core(&g2);
        assert!(matches!(is_flippable(&empty, &[0]), Err(Error::Input(_))));
    }

    #[test]
    fn triangle_decomposition() {
        let g = triangle_instance();
        let (core, _) = peel_star_core(&g);
        let d = decompose_flippable(&core, &[0, 1, 2]).unwrap();
        assert!(d.a_s.is_empty());
        assert_eq!(d.arcs, vec![(0, 1), (1, 0), (2, 0)]);
        assert_eq!(d.c_s, vec![0, 1]);
        let empty = decompose_flippable(&core, &[]).unwrap();
        assert!(empty.arcs.is_empty() && empty.c_s.is_empty());
        assert!(matches!(
            decompose_flippable(&core, &[0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn triangle_closure() {
        let g = triangle_instance();
        let (core, _) = peel_star_core(&g);
        assert_eq!(closure(&core, &[]).unwrap(), Vec::<u32>::new());
        assert_eq!(closure(&core, &[1]).unwrap(), vec![0, 1, 2]);
        assert_eq!(closure(&core, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn triangle_cyclic() {
        let g = triangle_instance();
        let (core, _) = peel_star_core(&g);
        assert!(is_cyclic(&core, &[]).unwrap());
        assert!(is_cyclic(&core, &[0, 1]).unwrap());
        assert!(is_cyclic(&core, &[0, 1, 2]).unwrap());
        assert!(!is_cyclic(&core, &[0]).unwrap());
    }

    #[test]
    fn weakly_flippable_trivial_cases() {
        let g = triangle_instance();
        let (core, _) = peel_star_core(&g);
        assert_eq!(is_weakly_flippable(&core, &[], 3).unwrap(), Some(vec![]));
        assert!(matches!(
            is_weakly_flippable(&core, &[0], 3),
            Err(Error::Input(_))
        ));
    }

    /// v (vertex 0) is essential in two edges, so it is outside H₁. Edge
    /// f = {0,1,2} essential 0 and g = {0,3,4} essential 0; vertices 1..4 each
    /// have one edge pointing back at 0.
    fn star_instance() -> EssentialHypergraph {
        EssentialHypergraph::from_edges(
            3,
            vec![1; 5],
            vec![
                (vec![0, 1, 2], 0),
                (vec![0, 3, 4], 1),
                (vec![1, 0, 3], 2),
                (vec![2, 0, 4], 3),
                (vec![3, 0, 2], 4),
                (vec![4, 0, 1], 5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn weak_witness_is_minimal() {
        let g = star_instance();
        let (core, _) = peel_star_core(&g);
        assert_eq!(core.vertex_count(), 5);
        assert!(!core.in_h1(0));
        assert_eq!(core.h1(), vec![1, 2, 3, 4]);
        // one vertex from each of f and g is needed
        let w = is_weakly_flippable(&core, &[0], 4).unwrap().unwrap();
        assert_eq!(w.len(), 2);
        let mut s = w.clone();
        s.push(0);
        assert!(is_flippable(&core, &s).unwrap());
        assert_eq!(is_weakly_flippable(&core, &[0], 1).unwrap(), None);
        let h = weakly_flippable_heuristic(&core, &[0], 4).unwrap();
        assert!(!h.exhaustive);
        assert!(h.witness.unwrap().len() >= 2);
    }

    #[test]
    fn greatest_flippable_subset_drops_unsupported() {
        let g = star_instance();
        let (core, _) = peel_star_core(&g);
        assert_eq!(
            greatest_flippable_subset(&core, &[0, 1]).unwrap(),
            Vec::<u32>::new()
        );
        assert_eq!(
            greatest_flippable_subset(&core, &[0, 1, 3]).unwrap(),
            vec![0, 1, 3]
        );
        assert_eq!(
            greatest_flippable_subset(&core, &[1, 2]).unwrap(),
            Vec::<u32>::new()
        );
    }

    #[test]
    fn frozen_set_without_constraints_is_empty() {
        let m = CspModel::two_coloring(3).unwrap();
        let f = CspInstance::new(6, 3);
        let sigma = SignVector::all(6, 1);
        for ell in [1, 2, 6] {
            assert!(exact_frozen_set(&m, &f, &sigma, ell).unwrap().is_empty());
        }
    }

    #[test]
    fn frozen_set_rejects_non_solutions() {
        let m = CspModel::two_coloring(3).unwrap();
        let mut f = CspInstance::new(3, 3);
        f.push(0, &[0, 1, 2]).unwrap();
        assert!(matches!(
            exact_frozen_set(&m, &f, &SignVector::all(3, 1), 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn neighbour_strategies_agree() {
        let sols: Vec<u32> = (0..1u32 << 10)
            .filter(|s| s.count_ones() % 3 != 1)
            .collect();
        for ell in 1..=4 {
            let g = SolutionGraph::from_solutions(10, sols.clone(), ell);
            for &s in sols.iter().step_by(37) {
                let mut a = Vec::new();
                g.for_each_neighbour(s, |t| a.push(t));
                a.sort_unstable();
                let b: Vec<u32> = sols
                    .iter()
                    .copied()
                    .filter(|&t| {
                        let d = (s ^ t).count_ones() as usize;
                        d >= 1 && d <= ell
                    })
                    .collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn frozen_scan_without_constraints() {
        let m = CspModel::two_coloring(3).unwrap();
        let r = frozen_scan(&m, 8, 0, &[1, 2], 3, 11).unwrap();
        for a in &r.agreement {
            assert_eq!(a.core_frozen + a.noncore_frozen + a.core_unfrozen, 0);
            assert_eq!(a.agreement_rate(), 1.0);
        }
        assert_eq!(r.difference_violations, 0);
    }
}
