//! Incremental greedy solver: constraints are added one at a time to a
//! growing instance while a solution is maintained, repairing it locally
//! whenever a new constraint is violated.
//!
//! The repair is a breadth-first search over small sets of flipped
//! variables. A set is expanded by picking the lowest-indexed constraint it
//! violates and adding one of that constraint's variables. This is a
//! heuristic with no success guarantee.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CspModel, SignVector};
use crate::sampler::{rng_from_seed, sample_csp, CspInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairBudget {
    /// Most variables a single repair may change.
    pub max_flips: usize,
    /// Most flip sets a single repair may expand.
    pub max_expansions: usize,
}

impl Default for RepairBudget {
    fn default() -> Self {
        RepairBudget {
            max_flips: 30,
            max_expansions: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyRun {
    pub n: usize,
    pub target: usize,
    /// Constraints placed before the first failed repair (all of them on
    /// success). `instance` holds exactly these and `sigma` satisfies them.
    pub placed: usize,
    pub success: bool,
    pub repairs: usize,
    pub flipped_variables: usize,
    pub max_repair_size: usize,
    pub instance: CspInstance,
    pub sigma: SignVector,
}

impl GreedyRun {
    pub fn density_reached(&self) -> f64 {
        self.placed as f64 / self.n as f64
    }
}

struct State<'m> {
    m: &'m CspModel,
    inst: CspInstance,
    by_var: Vec<Vec<u32>>,
    sigma: Vec<i8>,
}

impl State<'_> {
    fn violated(&self, c: usize, assignment: &[i8]) -> bool {
        !self
            .m
            .member(self.inst.member(c))
            .eval_index(self.inst.local_index(c, assignment))
    }

    /// Lowest-indexed constraint violated once `flips` are applied.
    fn first_violated(&self, flips: &[u32], scratch: &mut [i8]) -> Option<usize> {
        for &v in flips {
            scratch[v as usize] = -scratch[v as usize];
        }
        let found = flips
            .iter()
            .flat_map(|&v| self.by_var[v as usize].iter().copied())
            .filter(|&c| self.violated(c as usize, scratch))
            .min();
        for &v in flips {
            scratch[v as usize] = -scratch[v as usize];
        }
        found.map(|c| c as usize)
    }

    fn repair(&mut self, c: usize, budget: RepairBudget) -> Option<Vec<u32>> {
        let mut scratch = self.sigma.clone();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut queue: VecDeque<Vec<u32>> = VecDeque::new();
        for &v in self.inst.vars(c) {
            let t = vec![v];
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
        let mut expansions = 0;
        while let Some(t) = queue.pop_front() {
            let Some(bad) = self.first_violated(&t, &mut scratch) else {
                return Some(t);
            };
            expansions += 1;
            if expansions > budget.max_expansions {
                return None;
            }
            if t.len() >= budget.max_flips {
                continue;
            }
            for &u in self.inst.vars(bad) {
                if let Err(pos) = t.binary_search(&u) {
                    let mut child = t.clone();
                    child.insert(pos, u);
                    if seen.insert(child.clone()) {
                        queue.push_back(child);
                    }
                }
            }
        }
        None
    }
}

/// Runs the solver on `count` random constraints over `n` variables,
/// starting from a uniformly random assignment.
pub fn greedy_solve(
    m: &CspModel,
    n: usize,
    count: usize,
    seed: u64,
    budget: RepairBudget,
) -> Result<GreedyRun> {
    if budget.max_flips == 0 {
        return Err(Error::Input(
            "repair budget must allow at least one flip".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let stream = sample_csp(m, n, count, rng.gen())?;
    let sigma: Vec<i8> = (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    let mut st = State {
        m,
        inst: CspInstance::new(n, m.arity()),
        by_var: vec![Vec::new(); n],
        sigma,
    };
    let mut repairs = 0;
    let mut flipped = 0;
    let mut max_repair = 0;
    let mut success = true;
    for (member, vars) in stream.constraints() {
        let c = st.inst.len();
        st.inst.push(member, vars)?;
        for &v in vars {
            st.by_var[v as usize].push(c as u32);
        }
        if !st.violated(c, &st.sigma) {
            continue;
        }
        match st.repair(c, budget) {
            Some(t) => {
                for &v in &t {
                    st.sigma[v as usize] = -st.sigma[v as usize];
                }
                repairs += 1;
                flipped += t.len();
                max_repair = max_repair.max(t.len());
            }
            None => {
                success = false;
                break;
            }
        }
    }
    if !success {
        let placed = st.inst.len() - 1;
        st.inst.truncate(placed);
    }
    let placed = st.inst.len();
    debug_assert!(st.inst.is_satisfied_by(m, &st.sigma));
    Ok(GreedyRun {
        n,
        target: count,
        placed,
        success,
        repairs,
        flipped_variables: flipped,
        max_repair_size: max_repair,
        instance: st.inst,
        sigma: SignVector::new(st.sigma)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_constraints_succeeds() {
        let m = CspModel::two_coloring(3).unwrap();
        let r = greedy_solve(&m, 10, 0, 1, RepairBudget::default()).unwrap();
        assert!(r.success);
        assert_eq!(r.placed, 0);
    }

    #[test]
    fn low_density_runs_succeed_with_valid_solutions() {
        let m = CspModel::two_coloring(3).unwrap();
        for seed in 0..5 {
            let r = greedy_solve(&m, 500, 500, seed, RepairBudget::default()).unwrap();
            assert!(r.success, "seed {seed}");
            assert!(r.instance.is_satisfied_by(&m, r.sigma.as_slice()));
            assert!(r.repairs > 0);
        }
    }

    #[test]
    fn deterministic() {
        let m = CspModel::nae(3).unwrap();
        let a = greedy_solve(&m, 200, 300, 4, RepairBudget::default()).unwrap();
        let b = greedy_solve(&m, 200, 300, 4, RepairBudget::default()).unwrap();
        assert_eq!(a, b);
    }
}
