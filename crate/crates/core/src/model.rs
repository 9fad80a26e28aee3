//! Boolean constraint functions and weighted CSP models.
//!
//! Assignments over `{-1,+1}^k` are encoded as integers: the assignment is
//! read as a bit string with `-1 -> 0`, `+1 -> 1`, variable 1 most
//! significant. A [`ConstraintFunction`] stores its forbidden set `I` as a
//! sorted list of such indices and, for arity at most [`MAX_TABLE_ARITY`],
//! a dense truth table as well. Everything that needs exhaustive
//! enumeration of `{-1,+1}^k` (Fourier expansion, the exhaustive property
//! checks) is limited to tabulated functions; the forbidden-set view works
//! for any arity up to [`MAX_ARITY`].

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest arity for which a dense truth table is kept.
pub const MAX_TABLE_ARITY: usize = 20;
/// Largest arity representable by the integer encoding.
pub const MAX_ARITY: usize = 63;
/// Largest arity for which the sign-flip-closed NAE family is materialized
/// member by member (it has `2^(k-1)` members).
pub const NAE_MAX_ARITY: usize = 16;

const BALANCE_GRID_STEPS: usize = 1000;
const BALANCE_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn bit_of(position: usize, arity: usize) -> u64 {
    1u64 << (arity - 1 - position)
}

#[inline]
pub(crate) fn full_mask(arity: usize) -> u64 {
    if arity == 64 {
        u64::MAX
    } else {
        (1u64 << arity) - 1
    }
}

/// A vector of `±1` values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::Input(format!(
                "sign vector entries must be -1 or +1, found {bad}"
            )));
        }
        Ok(SignVector(values))
    }

    pub fn all(len: usize, sign: i8) -> Self {
        SignVector(vec![if sign < 0 { -1 } else { 1 }; len])
    }

    /// Decodes an index under the crate-wide bit convention.
    pub fn from_index(index: u64, len: usize) -> Self {
        SignVector(
            (0..len)
                .map(|i| if index & bit_of(i, len) != 0 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Encodes the vector as an index. Panics above [`MAX_ARITY`] entries.
    pub fn index(&self) -> u64 {
        assert!(self.0.len() <= MAX_ARITY, "sign vector too long to index");
        let len = self.0.len();
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .fold(0u64, |acc, (i, _)| acc | bit_of(i, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn negated(&self) -> Self {
        SignVector(self.0.iter().map(|v| -v).collect())
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.0[i] = -out.0[i];
        out
    }

    pub fn plus_count(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0).count()
    }

    pub fn hamming(&self, other: &SignVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SignVector::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(v: SignVector) -> Self {
        v.0
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if *v > 0 { "+1" } else { "-1" })?;
        }
        f.write_str(")")
    }
}

/// A boolean function on `{-1,+1}^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintFunction {
    arity: usize,
    /// Sorted indices of the unsatisfying assignments.
    forbidden: Vec<u64>,
    /// Bitset over all `2^k` indices, set for satisfying assignments.
    table: Option<Vec<u64>>,
}

impl ConstraintFunction {
    /// Builds the function that is false exactly on the given indices.
    pub fn from_forbidden_indices(arity: usize, mut forbidden: Vec<u64>) -> Result<Self> {
        check_arity(arity)?;
        let mask = full_mask(arity);
        if let Some(bad) = forbidden.iter().find(|&&x| x & !mask != 0) {
            return Err(Error::Input(format!(
                "index {bad} out of range for arity {arity}"
            )));
        }
        forbidden.sort_unstable();
        forbidden.dedup();
        let table = (arity <= MAX_TABLE_ARITY).then(|| {
            let size = 1usize << arity;
            let mut bits = vec![u64::MAX; size.div_ceil(64)];
            if !size.is_multiple_of(64) {
                *bits.last_mut().unwrap() = (1u64 << (size % 64)) - 1;
            }
            for &x in &forbidden {
                bits[(x / 64) as usize] &= !(1u64 << (x % 64));
            }
            bits
        });
        Ok(ConstraintFunction {
            arity,
            forbidden,
            table,
        })
    }

    pub fn from_forbidden(arity: usize, forbidden: &[SignVector]) -> Result<Self> {
        let mut idx = Vec::with_capacity(forbidden.len());
        for x in forbidden {
            if x.len() != arity {
                return Err(Error::Input(format!(
                    "forbidden assignment {x} has length {} but arity is {arity}",
                    x.len()
                )));
            }
            idx.push(x.index());
        }
        Self::from_forbidden_indices(arity, idx)
    }

    /// Builds a function from its dense truth table (indexed by the crate
    /// bit convention).
    pub fn from_truth_table(arity: usize, table: &[bool]) -> Result<Self> {
        check_table_arity(arity)?;
        if table.len() != 1usize << arity {
            return Err(Error::Input(format!(
                "truth table has {} entries, expected 2^{arity}",
                table.len()
            )));
        }
        let forbidden = table
            .iter()
            .enumerate()
            .filter(|(_, &sat)| !sat)
            .map(|(i, _)| i as u64)
            .collect();
        Self::from_forbidden_indices(arity, forbidden)
    }

    pub fn from_predicate(arity: usize, pred: impl Fn(&SignVector) -> bool) -> Result<Self> {
        check_table_arity(arity)?;
        let table: Vec<bool> = (0..1u64 << arity)
            .map(|i| pred(&SignVector::from_index(i, arity)))
            .collect();
        Self::from_truth_table(arity, &table)
    }

    pub fn constant_true(arity: usize) -> Result<Self> {
        Self::from_forbidden_indices(arity, Vec::new())
    }

    /// Hypergraph 2-colouring: forbids the two monochromatic assignments.
    pub fn two_coloring(arity: usize) -> Result<Self> {
        check_arity(arity)?;
        Self::from_forbidden_indices(arity, vec![0, full_mask(arity)])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn forbidden_indices(&self) -> &[u64] {
        &self.forbidden
    }

    pub fn forbidden(&self) -> Vec<SignVector> {
        self.forbidden
            .iter()
            .map(|&x| SignVector::from_index(x, self.arity))
            .collect()
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    /// `|S_φ|`.
    pub fn satisfying_count(&self) -> u64 {
        (1u64 << self.arity) - self.forbidden.len() as u64
    }

    /// `|I_φ|`.
    pub fn unsatisfying_count(&self) -> u64 {
        self.forbidden.len() as u64
    }

    #[inline]
    pub fn eval_index(&self, index: u64) -> bool {
        match &self.table {
            Some(bits) => bits[(index / 64) as usize] >> (index % 64) & 1 == 1,
            None => self.forbidden.binary_search(&index).is_err(),
        }
    }

    pub fn eval(&self, x: &SignVector) -> Result<bool> {
        self.check_len(x)?;
        Ok(self.eval_index(x.index()))
    }

    /// All positions whose flip turns the satisfying assignment `x` into an
    /// unsatisfying one.
    pub fn essential_variables(&self, x: &SignVector) -> Result<Vec<usize>> {
        self.check_len(x)?;
        let idx = x.index();
        if !self.eval_index(idx) {
            return Err(Error::Contract(format!(
                "essential variables requested for unsatisfying assignment {x}"
            )));
        }
        Ok(self.essential_positions(idx).collect())
    }

    /// The essential position of `x`, if any. Fails with a contract error
    /// when more than one position is essential.
    pub fn essential_variable(&self, x: &SignVector) -> Result<Option<usize>> {
        let all = self.essential_variables(x)?;
        match all.as_slice() {
            [] => Ok(None),
            [i] => Ok(Some(*i)),
            _ => Err(Error::Contract(format!(
                "assignment {x} has {} essential variables",
                all.len()
            ))),
        }
    }

    fn essential_positions(&self, idx: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.arity).filter(move |&i| !self.eval_index(idx ^ bit_of(i, self.arity)))
    }

    /// First essential position of a satisfying index; the caller is
    /// responsible for the function being 1-essential.
    #[inline]
    pub fn first_essential_position(&self, idx: u64) -> Option<usize> {
        if self.forbidden.is_empty() {
            return None;
        }
        self.essential_positions(idx).next()
    }

    /// Every (satisfying assignment, essential position) pair, found by
    /// walking the neighbours of the forbidden set.
    pub fn essential_pairs(&self) -> Vec<(u64, usize)> {
        let mut pairs = Vec::new();
        for &y in &self.forbidden {
            for i in 0..self.arity {
                let x = y ^ bit_of(i, self.arity);
                if self.eval_index(x) {
                    pairs.push((x, i));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Smallest Hamming distance between two distinct forbidden assignments.
    pub fn min_forbidden_distance(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        for (i, &a) in self.forbidden.iter().enumerate() {
            for &b in &self.forbidden[i + 1..] {
                let d = (a ^ b).count_ones();
                best = Some(best.map_or(d, |cur| cur.min(d)));
            }
        }
        best
    }

    /// Every completion of every `k-1` partial assignment has a satisfying
    /// value for the remaining variable.
    pub fn is_feasible(&self) -> bool {
        if self.is_tabulated() {
            (0..1u64 << self.arity).all(|x| {
                (0..self.arity)
                    .all(|i| self.eval_index(x) || self.eval_index(x ^ bit_of(i, self.arity)))
            })
        } else {
            self.forbidden
                .iter()
                .all(|&y| (0..self.arity).all(|i| self.eval_index(y ^ bit_of(i, self.arity))))
        }
    }

    /// Every satisfying assignment has at most one essential variable.
    pub fn is_one_essential(&self) -> bool {
        if self.is_tabulated() {
            (0..1u64 << self.arity)
                .filter(|&x| self.eval_index(x))
                .all(|x| self.essential_positions(x).nth(1).is_none())
        } else {
            let mut touched: Vec<u64> = self
                .forbidden
                .iter()
                .flat_map(|&y| (0..self.arity).map(move |i| y ^ bit_of(i, self.arity)))
                .filter(|&x| self.eval_index(x))
                .collect();
            touched.sort_unstable();
            touched.windows(2).all(|w| w[0] != w[1])
        }
    }

    /// `φ(x) = φ(-x)` for every `x`.
    pub fn is_symmetric(&self) -> bool {
        let mask = full_mask(self.arity);
        self.forbidden
            .iter()
            .all(|&x| self.forbidden.binary_search(&(!x & mask)).is_ok())
    }

    /// `φ^s(x) = φ(s_1 x_1, ..., s_k x_k)`.
    pub fn sign_flipped(&self, s: &SignVector) -> Result<Self> {
        self.check_len(s)?;
        let flip = !s.index() & full_mask(self.arity);
        Self::from_forbidden_indices(
            self.arity,
            self.forbidden.iter().map(|&x| x ^ flip).collect(),
        )
    }

    /// Normalized Fourier expansion; requires a tabulated function.
    pub fn fourier_expand(&self) -> Result<FourierTable> {
        check_table_arity(self.arity)?;
        let size = 1usize << self.arity;
        let mut w: Vec<f64> = (0..size as u64)
            .map(|x| if self.eval_index(x) { 1.0 } else { 0.0 })
            .collect();
        // w[q] <- sum_x f(x) (-1)^{popcount(q & x)}
        let mut h = 1;
        while h < size {
            for block in (0..size).step_by(2 * h) {
                for j in block..block + h {
                    let (a, b) = (w[j], w[j + h]);
                    w[j] = a + b;
                    w[j + h] = a - b;
                }
            }
            h *= 2;
        }
        let scale = 1.0 / size as f64;
        // prod_{i in Q} x_i = (-1)^{|Q|} (-1)^{popcount(Q & x)}
        let coefficients = w
            .into_iter()
            .enumerate()
            .map(|(q, v)| {
                let sign = if (q as u64).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                sign * v * scale
            })
            .collect();
        Ok(FourierTable {
            arity: self.arity,
            coefficients,
        })
    }

    fn check_len(&self, x: &SignVector) -> Result<()> {
        if x.len() != self.arity {
            return Err(Error::Input(format!(
                "assignment of length {} given to a constraint of arity {}",
                x.len(),
                self.arity
            )));
        }
        Ok(())
    }
}

fn check_arity(arity: usize) -> Result<()> {
    if arity == 0 || arity > MAX_ARITY {
        return Err(Error::Input(format!(
            "arity must lie in 1..={MAX_ARITY}, got {arity}"
        )));
    }
    Ok(())
}

fn check_table_arity(arity: usize) -> Result<()> {
    check_arity(arity)?;
    if arity > MAX_TABLE_ARITY {
        return Err(Error::Scale(format!(
            "arity {arity} exceeds the truth-table limit {MAX_TABLE_ARITY}"
        )));
    }
    Ok(())
}

/// Feasible and 1-essential, decided through the forbidden set alone:
/// no two forbidden assignments lie within Hamming distance 2.
pub fn check_feasible_1essential_characterization(phi: &ConstraintFunction) -> bool {
    phi.min_forbidden_distance().is_none_or(|d| d >= 3)
}

/// Coefficients `φ_Q = 2^{-k} Σ_x φ(x) Π_{i∈Q} x_i`, indexed by the subset
/// mask of `Q` (variable `i`, 0-based, is bit `k-1-i`).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    arity: usize,
    coefficients: Vec<f64>,
}

impl FourierTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coefficient_by_mask(&self, mask: u64) -> f64 {
        self.coefficients[mask as usize]
    }

    /// Coefficient of the subset given by 0-based variable positions.
    pub fn coefficient(&self, subset: &[usize]) -> f64 {
        let mask = subset
            .iter()
            .fold(0u64, |acc, &i| acc | bit_of(i, self.arity));
        self.coefficient_by_mask(mask)
    }

    pub fn constant(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(q, &c)| (q as u64, c))
    }

    /// `Σ_{|Q|=j} φ_Q²` for `j = 0..=k`.
    pub fn level_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.arity + 1];
        for (q, c) in self.iter() {
            out[q.count_ones() as usize] += c * c;
        }
        out
    }

    pub fn parseval_sum(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// `Σ_Q φ_Q Π_{i∈Q} x_i` at the assignment with the given index.
    pub fn reconstruct(&self, x: u64) -> f64 {
        let neg = !x & full_mask(self.arity);
        self.iter()
            .map(|(q, c)| {
                if (q & neg).count_ones().is_multiple_of(2) {
                    c
                } else {
                    -c
                }
            })
            .sum()
    }
}

/// The five structural properties a model may have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    NonTrivial,
    Feasible,
    Symmetric,
    BalanceDominated,
    OneEssential,
}

impl Property {
    pub const ALL: [Property; 5] = [
        Property::NonTrivial,
        Property::Feasible,
        Property::Symmetric,
        Property::BalanceDominated,
        Property::OneEssential,
    ];
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::NonTrivial => "non-trivial",
            Property::Feasible => "feasible",
            Property::Symmetric => "symmetric",
            Property::BalanceDominated => "balance-dominated",
            Property::OneEssential => "1-essential",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub non_trivial: bool,
    pub feasible: bool,
    pub symmetric: bool,
    pub balance_dominated: bool,
    pub one_essential: bool,
}

impl PropertyReport {
    pub fn has(&self, p: Property) -> bool {
        match p {
            Property::NonTrivial => self.non_trivial,
            Property::Feasible => self.feasible,
            Property::Symmetric => self.symmetric,
            Property::BalanceDominated => self.balance_dominated,
            Property::OneEssential => self.one_essential,
        }
    }

    pub fn all(&self) -> bool {
        Property::ALL.iter().all(|&p| self.has(p))
    }

    pub fn missing(&self) -> Vec<Property> {
        Property::ALL
            .iter()
            .copied()
            .filter(|&p| !self.has(p))
            .collect()
    }

    /// Domain error naming the first required property that is absent.
    pub fn require(&self, required: &[Property]) -> Result<()> {
        match required.iter().find(|&&p| !self.has(p)) {
            Some(p) => Err(Error::Domain(format!("model is not {p}"))),
            None => Ok(()),
        }
    }
}

/// How the member list of a model is to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orbit {
    /// Members are listed one by one.
    Explicit,
    /// Each listed member stands for its whole orbit `{φ^s}` under sign
    /// flips, with its weight spread uniformly over the orbit. Used to
    /// evaluate thresholds of large sign-flip-closed families whose members
    /// cannot all be materialized; such models cannot be sampled.
    SignFlips,
}

#[derive(Clone, Debug)]
pub struct Member {
    pub function: ConstraintFunction,
    pub weight: f64,
}

/// A weighted family `(Φ, p)` of constraint functions of a common arity.
#[derive(Clone, Debug)]
pub struct CspModel {
    name: String,
    arity: usize,
    members: Vec<Member>,
    orbit: Orbit,
    report: PropertyReport,
}

impl CspModel {
    pub fn new(name: impl Into<String>, members: Vec<(ConstraintFunction, f64)>) -> Result<Self> {
        Self::build(name.into(), members, Orbit::Explicit)
    }

    /// A model whose members represent their sign-flip orbits.
    pub fn sign_flip_orbits(
        name: impl Into<String>,
        members: Vec<(ConstraintFunction, f64)>,
    ) -> Result<Self> {
        Self::build(name.into(), members, Orbit::SignFlips)
    }

    fn build(name: String, members: Vec<(ConstraintFunction, f64)>, orbit: Orbit) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Input("model has no constraint functions".into()));
        };
        let arity = first.0.arity();
        if let Some((f, _)) = members.iter().find(|(f, _)| f.arity() != arity) {
            return Err(Error::Input(format!(
                "mixed arities in model: {} and {arity}",
                f.arity()
            )));
        }
        if let Some((_, w)) = members.iter().find(|(_, w)| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Input(format!("weight {w} is not strictly positive")));
        }
        let total: f64 = members.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("weights sum to {total}, not 1")));
        }
        let mut model = CspModel {
            name,
            arity,
            members: members
                .into_iter()
                .map(|(function, weight)| Member { function, weight })
                .collect(),
            orbit,
            report: PropertyReport {
                non_trivial: false,
                feasible: false,
                symmetric: false,
                balance_dominated: false,
                one_essential: false,
            },
        };
        model.report = validate_model(&model)?;
        Ok(model)
    }

    /// Hypergraph 2-colouring of arity `k`.
    pub fn two_coloring(k: usize) -> Result<Self> {
        Self::new("2col", vec![(ConstraintFunction::two_coloring(k)?, 1.0)])
    }

    /// k-NAE-SAT: every sign pattern of literals, uniformly weighted.
    /// Materialized for `k <= NAE_MAX_ARITY`.
    pub fn nae(k: usize) -> Result<Self> {
        if k > NAE_MAX_ARITY {
            return Err(Error::Scale(format!(
                "explicit NAE family limited to k <= {NAE_MAX_ARITY}; use CspModel::nae_orbit"
            )));
        }
        check_arity(k)?;
        let mask = full_mask(k);
        // φ^s forbids {s, -s}; keep one representative per unordered pair.
        let reps: Vec<u64> = (0..1u64 << k).filter(|&s| s < (!s & mask)).collect();
        let w = 1.0 / reps.len() as f64;
        let members = reps
            .into_iter()
            .map(|s| {
                Ok((
                    ConstraintFunction::from_forbidden_indices(k, vec![s, !s & mask])?,
                    w,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new("nae", members)
    }

    /// k-NAE-SAT as a single sign-flip orbit, valid for any arity.
    pub fn nae_orbit(k: usize) -> Result<Self> {
        Self::sign_flip_orbits("nae", vec![(ConstraintFunction::two_coloring(k)?, 1.0)])
    }

    /// One of the built-in families by name (`2col` or `nae`).
    pub fn builtin(name: &str, k: usize) -> Result<Self> {
        match name {
            "2col" => Self::two_coloring(k),
            "nae" if k <= NAE_MAX_ARITY => Self::nae(k),
            "nae" => Self::nae_orbit(k),
            other => Err(Error::Input(format!("unknown built-in model '{other}'"))),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("invalid model file: {e}")))?;
        file.into_model()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_model_file(&self) -> ModelFile {
        ModelFile {
            k: self.arity,
            constraints: self
                .members
                .iter()
                .map(|m| ConstraintSpec {
                    forbidden: m.function.forbidden().into_iter().map(Vec::from).collect(),
                    weight: m.weight,
                })
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &ConstraintFunction {
        &self.members[i].function
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    pub fn orbit(&self) -> Orbit {
        self.orbit
    }

    pub fn is_explicit(&self) -> bool {
        self.orbit == Orbit::Explicit
    }

    pub fn properties(&self) -> &PropertyReport {
        &self.report
    }

    /// `E_φ[g(φ)]` under the model weights.
    pub fn expect(&self, g: impl Fn(&ConstraintFunction) -> f64) -> f64 {
        self.members.iter().map(|m| m.weight * g(&m.function)).sum()
    }

    /// Probability that a `q`-biased random assignment satisfies a random
    /// member.
    pub fn satisfaction_probability(&self, q: f64) -> f64 {
        let k = self.arity as i32;
        match self.orbit {
            Orbit::Explicit => {
                1.0 - self.expect(|f| {
                    f.forbidden_indices()
                        .iter()
                        .map(|x| {
                            let j = x.count_ones() as i32;
                            q.powi(j) * (1.0 - q).powi(k - j)
                        })
                        .sum()
                })
            }
            // averaging over the orbit makes each forbidden point uniform
            Orbit::SignFlips => {
                1.0 - self.expect(|f| f.unsatisfying_count() as f64 * 0.5f64.powi(k))
            }
        }
    }

    fn satisfaction_slope_at_half(&self) -> f64 {
        if self.orbit == Orbit::SignFlips {
            return 0.0;
        }
        let k = self.arity as i32;
        // d/dq q^j (1-q)^{k-j} at q = 1/2 is (2j - k) 2^{1-k}
        -self.expect(|f| {
            f.forbidden_indices()
                .iter()
                .map(|x| (2 * x.count_ones() as i32 - k) as f64 * 0.5f64.powi(k - 1))
                .sum()
        })
    }
}

/// Recomputes the five property flags of a model from its members.
pub fn validate_model(m: &CspModel) -> Result<PropertyReport> {
    if m.members.is_empty() {
        return Err(Error::Input("model has no constraint functions".into()));
    }
    let k = m.arity;
    let all_ones = full_mask(k);
    let non_trivial = match m.orbit {
        Orbit::Explicit => {
            let forbids = |x: u64| m.members.iter().any(|mb| !mb.function.eval_index(x));
            forbids(all_ones) && forbids(0)
        }
        Orbit::SignFlips => m
            .members
            .iter()
            .any(|mb| mb.function.unsatisfying_count() > 0),
    };
    let feasible = m.members.iter().all(|mb| mb.function.is_feasible());
    let symmetric = m.members.iter().all(|mb| mb.function.is_symmetric());
    let one_essential = m.members.iter().all(|mb| mb.function.is_one_essential());

    let centre = m.satisfaction_probability(0.5);
    let balance_dominated = (0..=BALANCE_GRID_STEPS).all(|i| {
        let q = i as f64 / BALANCE_GRID_STEPS as f64;
        centre >= m.satisfaction_probability(q) - BALANCE_TOL
    }) && m.satisfaction_slope_at_half().abs() <= BALANCE_TOL;

    Ok(PropertyReport {
        non_trivial,
        feasible,
        symmetric,
        balance_dominated,
        one_essential,
    })
}

/// Builds the model whose constraints forbid `J = I ∪ -I`, optionally closed
/// under all sign flips with uniform weights, and checks all five properties.
pub fn build_distance_model(
    k: usize,
    forbidden: &[SignVector],
    epsilon: f64,
    close_under_sign_flips: bool,
) -> Result<CspModel> {
    check_arity(k)?;
    if forbidden.is_empty() {
        return Err(Error::Construction("empty forbidden set".into()));
    }
    for x in forbidden {
        if x.len() != k {
            return Err(Error::Input(format!("{x} does not have length {k}")));
        }
        let sum: i64 = x.as_slice().iter().map(|&v| v as i64).sum();
        if (sum as f64) <= epsilon * k as f64 {
            return Err(Error::Construction(format!(
                "{x} has coordinate sum {sum}, not above {epsilon}*{k}"
            )));
        }
    }
    for (i, a) in forbidden.iter().enumerate() {
        for b in &forbidden[i + 1..] {
            let d = a.hamming(b);
            if d < 3 {
                return Err(Error::Construction(format!(
                    "{a} and {b} are at Hamming distance {d} < 3"
                )));
            }
        }
    }
    let mask = full_mask(k);
    let mut j: Vec<u64> = forbidden
        .iter()
        .flat_map(|x| {
            let i = x.index();
            [i, !i & mask]
        })
        .collect();
    j.sort_unstable();
    j.dedup();

    let model = if close_under_sign_flips {
        if k > NAE_MAX_ARITY {
            return Err(Error::Scale(format!(
                "sign-flip closure is materialized only for k <= {NAE_MAX_ARITY}"
            )));
        }
        let mut orbit: BTreeSet<Vec<u64>> = BTreeSet::new();
        for flip in 0..=mask {
            let mut f: Vec<u64> = j.iter().map(|&x| x ^ flip).collect();
            f.sort_unstable();
            orbit.insert(f);
        }
        let w = 1.0 / orbit.len() as f64;
        let members = orbit
            .into_iter()
            .map(|f| Ok((ConstraintFunction::from_forbidden_indices(k, f)?, w)))
            .collect::<Result<Vec<_>>>()?;
        CspModel::new("distance", members)?
    } else {
        CspModel::new(
            "distance",
            vec![(ConstraintFunction::from_forbidden_indices(k, j)?, 1.0)],
        )?
    };
    let missing = model.properties().missing();
    if !missing.is_empty() {
        let names: Vec<String> = missing.iter().map(|p| p.to_string()).collect();
        return Err(Error::Construction(format!(
            "constructed model is not {}",
            names.join(", ")
        )));
    }
    Ok(model)
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub k: usize,
    pub constraints: Vec<ConstraintSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub forbidden: Vec<Vec<i8>>,
    pub weight: f64,
}

impl ModelFile {
    pub fn into_model(self) -> Result<CspModel> {
        let members = self
            .constraints
            .into_iter()
            .map(|c| {
                let forbidden = c
                    .forbidden
                    .into_iter()
                    .map(SignVector::new)
                    .collect::<Result<Vec<_>>>()?;
                Ok((
                    ConstraintFunction::from_forbidden(self.k, &forbidden)?,
                    c.weight,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        CspModel::new("file", members)
    }
}
