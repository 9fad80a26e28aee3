//! Random instances: the plain random CSP, the planted model, the uniform
//! model at desk scale, and essential hypergraphs drawn directly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{EdgeType, EssentialHypergraph};
use crate::model::{CspModel, Property, SignVector};
use crate::solutions::{enumerate_solutions, mask_to_signs, MAX_ENUMERATION_VARS};

pub const PLANTED_REJECTION_CAP: u64 = 1_000_000;
pub const UNIFORM_RETRY_CAP: u64 = 10_000;
const POOL_RETRY_CAP: usize = 10_000;

pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent per-trial stream.
pub fn derive_seed(root: u64, trial: u64) -> u64 {
    splitmix64(root ^ splitmix64(trial))
}

/// `M` constraints over `n` variables, each a model member applied to an
/// ordered tuple of distinct variables. Variables are 0-based in memory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspInstance {
    n: usize,
    k: usize,
    members: Vec<u32>,
    vars: Vec<u32>,
}

impl CspInstance {
    pub fn new(n: usize, k: usize) -> Self {
        CspInstance {
            n,
            k,
            members: Vec::new(),
            vars: Vec::new(),
        }
    }

    pub fn push(&mut self, member: usize, vars: &[u32]) -> Result<()> {
        if vars.len() != self.k {
            return Err(Error::Input(format!(
                "constraint has {} variables, expected {}",
                vars.len(),
                self.k
            )));
        }
        for (i, &v) in vars.iter().enumerate() {
            if v as usize >= self.n {
                return Err(Error::Input(format!(
                    "variable {v} out of range (n = {})",
                    self.n
                )));
            }
            if vars[..i].contains(&v) {
                return Err(Error::Input(format!("constraint repeats variable {v}")));
            }
        }
        self.members.push(member as u32);
        self.vars.extend_from_slice(vars);
        Ok(())
    }

    /// Keeps the first `len` constraints.
    pub fn truncate(&mut self, len: usize) {
        self.members.truncate(len);
        self.vars.truncate(len * self.k);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, c: usize) -> usize {
        self.members[c] as usize
    }

    pub fn vars(&self, c: usize) -> &[u32] {
        &self.vars[c * self.k..(c + 1) * self.k]
    }

    pub fn constraints(&self) -> impl Iterator<Item = (usize, &[u32])> + '_ {
        self.members
            .iter()
            .zip(self.vars.chunks(self.k.max(1)))
            .map(|(&m, v)| (m as usize, v))
    }

    /// Local assignment index of constraint `c` under a global `±1` vector.
    #[inline]
    pub fn local_index(&self, c: usize, sigma: &[i8]) -> u64 {
        self.vars(c)
            .iter()
            .fold(0u64, |acc, &v| (acc << 1) | (sigma[v as usize] > 0) as u64)
    }

    /// Index of the first constraint `σ` violates.
    pub fn first_violation(&self, m: &CspModel, sigma: &[i8]) -> Option<usize> {
        (0..self.len()).find(|&c| {
            !m.member(self.member(c))
                .eval_index(self.local_index(c, sigma))
        })
    }

    pub fn is_satisfied_by(&self, m: &CspModel, sigma: &[i8]) -> bool {
        self.first_violation(m, sigma).is_none()
    }

    /// Writes the text format: header `n M k model`, then one line per
    /// constraint (member index, then 1-based variables), then optionally
    /// the assignment as a string of `+`/`-`.
    pub fn write_to(
        &self,
        mut w: impl Write,
        model_name: &str,
        sigma: Option<&SignVector>,
    ) -> std::io::Result<()> {
        writeln!(w, "{} {} {} {}", self.n, self.len(), self.k, model_name)?;
        let mut line = String::new();
        for (m, vars) in self.constraints() {
            line.clear();
            write!(line, "{m}").unwrap();
            for v in vars {
                write!(line, " {}", v + 1).unwrap();
            }
            writeln!(w, "{line}")?;
        }
        if let Some(s) = sigma {
            let text: String = s
                .as_slice()
                .iter()
                .map(|&v| if v > 0 { '+' } else { '-' })
                .collect();
            writeln!(w, "{text}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`CspInstance::write_to`]; returns the
    /// instance, the model name and the assignment line if present.
    pub fn read_from(r: impl BufRead) -> Result<(CspInstance, String, Option<SignVector>)> {
        let mut lines = r.lines();
        let mut next = || -> Result<Option<String>> {
            lines
                .next()
                .transpose()
                .map_err(|e| Error::Input(format!("read error: {e}")))
        };
        let header = next()?.ok_or_else(|| Error::Input("empty instance file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Input(format!("bad header '{header}'")));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Input(format!("bad integer '{s}'")))
        };
        let (n, count, k) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        let mut inst = CspInstance::new(n, k);
        for _ in 0..count {
            let line = next()?.ok_or_else(|| Error::Input("instance file truncated".into()))?;
            let nums = line
                .split_whitespace()
                .map(parse)
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != k + 1 || nums[1..].contains(&0) {
                return Err(Error::Input(format!("bad constraint line '{line}'")));
            }
            let vars: Vec<u32> = nums[1..].iter().map(|&v| (v - 1) as u32).collect();
            inst.push(nums[0], &vars)?;
        }
        let sigma = match next()? {
            Some(line) if !line.trim().is_empty() => {
                let values = line
                    .trim()
                    .chars()
                    .map(|c| match c {
                        '+' => Ok(1),
                        '-' => Ok(-1),
                        other => Err(Error::Input(format!("bad assignment character '{other}'"))),
                    })
                    .collect::<Result<Vec<i8>>>()?;
                if values.len() != n {
                    return Err(Error::Input("assignment line has the wrong length".into()));
                }
                Some(SignVector::new(values)?)
            }
            _ => None,
        };
        Ok((inst, fields[3].to_string(), sigma))
    }
}

/// A planted instance together with its planted assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedPair {
    pub instance: CspInstance,
    pub sigma: SignVector,
    /// Total number of rejected constraint draws.
    pub rejections: u64,
}

/// An instance with a uniformly random solution.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformDraw {
    pub instance: CspInstance,
    pub sigma: SignVector,
    /// Instances discarded for having no solution.
    pub retries: u64,
    pub solution_count: usize,
}

/// Fills `out` with `count` distinct values drawn uniformly, in random
/// order, from `0..n` mapped through `map`, skipping `exclude`.
fn sample_distinct(
    rng: &mut impl Rng,
    n: usize,
    count: usize,
    map: impl Fn(usize) -> u32,
    exclude: Option<u32>,
    out: &mut Vec<u32>,
) -> bool {
    let available = n - exclude.map_or(0, |_| 1);
    if count > available {
        return false;
    }
    let start = out.len();
    if count * count <= n {
        while out.len() < start + count {
            let v = map(rng.gen_range(0..n));
            if Some(v) != exclude && !out[start..].contains(&v) {
                out.push(v);
            }
        }
    } else {
        let mut pool: Vec<u32> = (0..n).map(&map).filter(|&v| Some(v) != exclude).collect();
        let (chosen, _) = pool.partial_shuffle(rng, count);
        out.extend_from_slice(chosen);
    }
    true
}

fn require_sampleable(m: &CspModel, n: usize) -> Result<()> {
    if !m.is_explicit() {
        return Err(Error::Domain(
            "sign-flip-orbit models cannot be sampled; use an explicit model".into(),
        ));
    }
    if n < m.arity() {
        return Err(Error::Input(format!(
            "n = {n} is smaller than k = {}",
            m.arity()
        )));
    }
    Ok(())
}

struct MemberPicker(Option<WeightedIndex<f64>>);

impl MemberPicker {
    fn new(m: &CspModel) -> Result<Self> {
        if m.members().len() == 1 {
            return Ok(MemberPicker(None));
        }
        WeightedIndex::new(m.weights())
            .map(|w| MemberPicker(Some(w)))
            .map_err(|e| Error::Input(format!("bad weights: {e}")))
    }

    fn pick(&self, rng: &mut impl Rng) -> usize {
        self.0.as_ref().map_or(0, |w| w.sample(rng))
    }
}

fn draw_csp(m: &CspModel, n: usize, count: usize, rng: &mut impl Rng) -> Result<CspInstance> {
    let picker = MemberPicker::new(m)?;
    let k = m.arity();
    let mut inst = CspInstance::new(n, k);
    inst.members.reserve(count);
    inst.vars.reserve(count * k);
    for _ in 0..count {
        inst.members.push(picker.pick(rng) as u32);
        sample_distinct(rng, n, k, |v| v as u32, None, &mut inst.vars);
    }
    Ok(inst)
}

/// The random CSP: members by weight, tuples uniform over ordered tuples of
/// distinct variables.
pub fn sample_csp(m: &CspModel, n: usize, count: usize, seed: u64) -> Result<CspInstance> {
    require_sampleable(m, n)?;
    draw_csp(m, n, count, &mut rng_from_seed(seed))
}

fn uniform_signs(n: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect()
}

/// The planted model: uniform `σ`, then each constraint redrawn until `σ`
/// satisfies it.
pub fn sample_planted(m: &CspModel, n: usize, count: usize, seed: u64) -> Result<PlantedPair> {
    require_sampleable(m, n)?;
    let mut rng = rng_from_seed(seed);
    let sigma = uniform_signs(n, &mut rng);
    planted_constraints(m, sigma, count, &mut rng)
}

/// Planted constraints for a fixed assignment `σ`.
pub fn sample_planted_for(
    m: &CspModel,
    sigma: &SignVector,
    count: usize,
    seed: u64,
) -> Result<PlantedPair> {
    require_sampleable(m, sigma.len())?;
    planted_constraints(
        m,
        sigma.as_slice().to_vec(),
        count,
        &mut rng_from_seed(seed),
    )
}

fn planted_constraints(
    m: &CspModel,
    sigma: Vec<i8>,
    count: usize,
    rng: &mut impl Rng,
) -> Result<PlantedPair> {
    m.properties().require(&[Property::Feasible])?;
    let n = sigma.len();
    let picker = MemberPicker::new(m)?;
    let k = m.arity();
    let mut inst = CspInstance::new(n, k);
    inst.members.reserve(count);
    inst.vars.reserve(count * k);
    let mut rejections = 0u64;
    for _ in 0..count {
        let mut tries = 0u64;
        loop {
            let member = picker.pick(rng);
            let at = inst.vars.len();
            sample_distinct(rng, n, k, |v| v as u32, None, &mut inst.vars);
            let x = inst.vars[at..]
                .iter()
                .fold(0u64, |acc, &v| (acc << 1) | (sigma[v as usize] > 0) as u64);
            if m.member(member).eval_index(x) {
                inst.members.push(member as u32);
                break;
            }
            inst.vars.truncate(at);
            rejections += 1;
            tries += 1;
            if tries >= PLANTED_REJECTION_CAP {
                return Err(Error::Sampling(format!(
                    "{PLANTED_REJECTION_CAP} consecutive rejections; no constraint accepts this assignment"
                )));
            }
        }
    }
    debug_assert!(inst.is_satisfied_by(m, &sigma));
    Ok(PlantedPair {
        instance: inst,
        sigma: SignVector::new(sigma)?,
        rejections,
    })
}

/// The uniform model at desk scale: a random instance and a uniformly
/// chosen solution, found by enumerating all `2^n` assignments.
pub fn sample_uniform_small(
    m: &CspModel,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<UniformDraw> {
    require_sampleable(m, n)?;
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::Scale(format!(
            "uniform sampling enumerates 2^n assignments; n = {n} exceeds {MAX_ENUMERATION_VARS}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    for retries in 0..UNIFORM_RETRY_CAP {
        let inst = draw_csp(m, n, count, &mut rng)?;
        let sols = enumerate_solutions(m, &inst)?;
        if sols.is_empty() {
            continue;
        }
        let pick = sols[rng.gen_range(0..sols.len())];
        return Ok(UniformDraw {
            sigma: mask_to_signs(pick, n),
            solution_count: sols.len(),
            instance: inst,
            retries,
        });
    }
    Err(Error::Sampling(format!(
        "{UNIFORM_RETRY_CAP} consecutive unsatisfiable instances"
    )))
}

/// Exact distribution of the type of a planted constraint's essential edge
/// when `|Λ⁺| = n_plus` and `|Λ⁻| = n_minus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTypeDistribution {
    pub k: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    /// Types with positive weight, sorted.
    pub types: Vec<EdgeType>,
    /// `w(τ)`, conditioned on the constraint having an essential variable.
    pub weights: Vec<f64>,
    /// Probability that a planted constraint has an essential variable.
    pub essential_fraction: f64,
}

/// `(x)_j = x(x-1)...(x-j+1)`.
fn falling(x: usize, j: usize) -> f64 {
    (0..j)
        .map(|i| x as f64 - i as f64)
        .product::<f64>()
        .max(0.0)
}

impl EdgeTypeDistribution {
    pub fn new(m: &CspModel, n_plus: usize, n_minus: usize) -> Result<Self> {
        m.properties().require(&[Property::OneEssential])?;
        if !m.is_explicit() {
            return Err(Error::Domain("edge types need an explicit model".into()));
        }
        let k = m.arity();
        let n = n_plus + n_minus;
        if n < k {
            return Err(Error::Input(format!("n = {n} is smaller than k = {k}")));
        }
        // probability that an ordered tuple of distinct variables shows a
        // given pattern with j pluses
        let total = falling(n, k);
        let pattern: Vec<f64> = (0..=k)
            .map(|j| falling(n_plus, j) * falling(n_minus, k - j) / total)
            .collect();
        let mut acc = std::collections::BTreeMap::<EdgeType, f64>::new();
        let mut satisfied = 0.0;
        for member in m.members() {
            let f = &member.function;
            let forbidden_mass: f64 = f
                .forbidden_indices()
                .iter()
                .map(|x| pattern[x.count_ones() as usize])
                .sum();
            satisfied += member.weight * (1.0 - forbidden_mass);
            for (x, i) in f.essential_pairs() {
                let j = x.count_ones() as usize;
                let plus_here = x >> (k - 1 - i) & 1 == 1;
                let t = EdgeType {
                    s: if plus_here { 1 } else { -1 },
                    a: (j - plus_here as usize) as u32,
                    b: (k - 1 - (j - plus_here as usize)) as u32,
                };
                *acc.entry(t).or_insert(0.0) += member.weight * pattern[j];
            }
        }
        acc.retain(|_, w| *w > 0.0);
        let ess: f64 = acc.values().sum();
        Ok(EdgeTypeDistribution {
            k,
            n_plus,
            n_minus,
            types: acc.keys().copied().collect(),
            weights: acc.values().map(|w| w / ess).collect(),
            essential_fraction: if satisfied > 0.0 {
                ess / satisfied
            } else {
                0.0
            },
        })
    }

    pub fn weight(&self, t: EdgeType) -> f64 {
        self.types
            .iter()
            .position(|&u| u == t)
            .map_or(0.0, |i| self.weights[i])
    }

    /// `w^s(τ)`: the type distribution given the essential vertex's sign.
    pub fn conditional(&self, s: i8) -> Vec<(EdgeType, f64)> {
        let mass: f64 = self
            .types
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| t.s == s)
            .map(|(_, w)| w)
            .sum();
        self.types
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| t.s == s)
            .map(|(&t, &w)| (t, w / mass))
            .collect()
    }

    /// `Σ_τ a·w^s(τ)`.
    pub fn mean_plus_count(&self, s: i8) -> f64 {
        self.conditional(s)
            .iter()
            .map(|(t, w)| t.a as f64 * w)
            .sum()
    }
}

struct SignPools {
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl SignPools {
    fn new(signs: &[i8]) -> Self {
        let (plus, minus) = (0..signs.len() as u32).partition(|&v| signs[v as usize] > 0);
        SignPools { plus, minus }
    }

    fn of(&self, s: i8) -> &[u32] {
        if s > 0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// Completes an edge with essential vertex `v` (already in `out`).
    fn complete(&self, rng: &mut impl Rng, t: EdgeType, v: u32, out: &mut Vec<u32>) -> bool {
        let at = out.len();
        let plus = &self.plus;
        let minus = &self.minus;
        let (ex_plus, ex_minus) = if t.s > 0 {
            (Some(v), None)
        } else {
            (None, Some(v))
        };
        let ok = sample_distinct(rng, plus.len(), t.a as usize, |i| plus[i], ex_plus, out)
            && sample_distinct(rng, minus.len(), t.b as usize, |i| minus[i], ex_minus, out);
        if !ok {
            out.truncate(at);
        }
        ok
    }
}

fn typed_edge(
    rng: &mut impl Rng,
    pools: &SignPools,
    types: &[EdgeType],
    picker: &WeightedIndex<f64>,
    fixed_essential: Option<u32>,
    out: &mut Vec<u32>,
) -> Result<()> {
    for _ in 0..POOL_RETRY_CAP {
        let t = types[picker.sample(rng)];
        let v = match fixed_essential {
            Some(v) => v,
            None => {
                let pool = pools.of(t.s);
                if pool.is_empty() {
                    continue;
                }
                pool[rng.gen_range(0..pool.len())]
            }
        };
        out.push(v);
        if pools.complete(rng, t, v, out) {
            return Ok(());
        }
        out.pop();
    }
    Err(Error::Sampling("no edge type fits the vertex pools".into()))
}

/// Draws `Γ` directly: uniform vertex signs, each of `count` constraints
/// contributes an edge with the exact essential probability, and each edge
/// gets its type from `w(τ)` and its vertices from the signed pools.
pub fn sample_model_a(
    m: &CspModel,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<EssentialHypergraph> {
    require_sampleable(m, n)?;
    let mut rng = rng_from_seed(seed);
    let signs = uniform_signs(n, &mut rng);
    let pools = SignPools::new(&signs);
    let dist = EdgeTypeDistribution::new(m, pools.plus.len(), pools.minus.len())?;
    let k = m.arity();
    let mut vertices = Vec::new();
    let mut source = Vec::new();
    if !dist.types.is_empty() {
        let picker = WeightedIndex::new(&dist.weights)
            .map_err(|e| Error::Sampling(format!("bad type weights: {e}")))?;
        for c in 0..count {
            if rng.gen::<f64>() < dist.essential_fraction {
                typed_edge(&mut rng, &pools, &dist.types, &picker, None, &mut vertices)?;
                source.push(c as u32);
            }
        }
    }
    let edges = vertices.chunks(k).map(|c| c.to_vec()).zip(source).collect();
    EssentialHypergraph::from_edges(k, signs, edges)
}

/// Completes edges whose essential vertices are given: each edge draws its
/// type from `w^s(τ)` for the sign `s` of its essential vertex.
pub fn sample_essential_model(
    signs: &SignVector,
    essential_vertices: &[u32],
    m: &CspModel,
    seed: u64,
) -> Result<EssentialHypergraph> {
    let n = signs.len();
    require_sampleable(m, n)?;
    if let Some(v) = essential_vertices.iter().find(|&&v| v as usize >= n) {
        return Err(Error::Input(format!("vertex {v} out of range (n = {n})")));
    }
    let mut rng = rng_from_seed(seed);
    let s = signs.as_slice();
    let pools = SignPools::new(s);
    let dist = EdgeTypeDistribution::new(m, pools.plus.len(), pools.minus.len())?;
    let mut by_sign = Vec::new();
    for sign in [1i8, -1] {
        let cond = dist.conditional(sign);
        let types: Vec<EdgeType> = cond.iter().map(|(t, _)| *t).collect();
        let picker = if cond.is_empty() {
            None
        } else {
            Some(
                WeightedIndex::new(cond.iter().map(|(_, w)| *w))
                    .map_err(|e| Error::Sampling(format!("bad type weights: {e}")))?,
            )
        };
        by_sign.push((types, picker));
    }
    let k = m.arity();
    let mut vertices = Vec::with_capacity(essential_vertices.len() * k);
    for &v in essential_vertices {
        let (types, picker) = &by_sign[if s[v as usize] > 0 { 0 } else { 1 }];
        let picker = picker.as_ref().ok_or_else(|| {
            Error::Sampling("no edge type has an essential vertex of this sign".into())
        })?;
        typed_edge(&mut rng, &pools, types, picker, Some(v), &mut vertices)?;
    }
    let edges = vertices.chunks(k).map(|c| c.to_vec()).zip(0u32..).collect();
    EssentialHypergraph::from_edges(k, s.to_vec(), edges)
}
