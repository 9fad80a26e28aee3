//! Exhaustive solution enumeration for small instances.
//!
//! Assignments of up to [`MAX_ENUMERATION_VARS`] variables are packed into a
//! `u32`: bit `v` is set when variable `v` is `+1`.

use crate::error::{Error, Result};
use crate::model::{CspModel, SignVector};
use crate::sampler::CspInstance;

pub const MAX_ENUMERATION_VARS: usize = 24;

pub fn mask_to_signs(mask: u32, n: usize) -> SignVector {
    SignVector::new(
        (0..n)
            .map(|v| if mask >> v & 1 == 1 { 1 } else { -1 })
            .collect(),
    )
    .expect("entries are ±1")
}

pub fn signs_to_mask(sigma: &SignVector) -> u32 {
    sigma
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .fold(0, |acc, (v, _)| acc | 1 << v)
}

/// Local index of constraint `c` under a packed assignment.
#[inline]
pub(crate) fn local_index_mask(f: &CspInstance, c: usize, mask: u32) -> u64 {
    f.vars(c)
        .iter()
        .fold(0u64, |acc, &v| (acc << 1) | (mask >> v & 1) as u64)
}

pub fn satisfies_mask(m: &CspModel, f: &CspInstance, mask: u32) -> bool {
    (0..f.len()).all(|c| {
        m.member(f.member(c))
            .eval_index(local_index_mask(f, c, mask))
    })
}

/// Every satisfying assignment, sorted. Constraints are checked as soon as
/// their last variable is assigned.
pub fn enumerate_solutions(m: &CspModel, f: &CspInstance) -> Result<Vec<u32>> {
    let n = f.n();
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::Scale(format!(
            "enumeration limited to n <= {MAX_ENUMERATION_VARS}, got {n}"
        )));
    }
    if f.arity() != m.arity() {
        return Err(Error::Input("instance and model arities differ".into()));
    }
    let mut by_last: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..f.len() {
        let last = *f.vars(c).iter().max().expect("k >= 1") as usize;
        by_last[last].push(c);
    }
    let mut out = Vec::new();
    if n == 0 {
        if f.is_empty() {
            out.push(0);
        }
        return Ok(out);
    }
    // iterative depth-first search over variables 0..n
    let mut mask = 0u32;
    let mut depth = 0usize;
    let mut value = vec![0u8; n];
    loop {
        if value[depth] < 2 {
            if value[depth] == 1 {
                mask |= 1 << depth;
            } else {
                mask &= !(1 << depth);
            }
            value[depth] += 1;
            let ok = by_last[depth].iter().all(|&c| {
                m.member(f.member(c))
                    .eval_index(local_index_mask(f, c, mask))
            });
            if ok {
                if depth + 1 == n {
                    out.push(mask);
                } else {
                    depth += 1;
                    value[depth] = 0;
                }
            }
        } else {
            mask &= !(1 << depth);
            if depth == 0 {
                break;
            }
            depth -= 1;
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_csp;

    #[test]
    fn no_constraints_gives_everything() {
        let m = CspModel::two_coloring(3).unwrap();
        let f = CspInstance::new(5, 3);
        assert_eq!(
            enumerate_solutions(&m, &f).unwrap(),
            (0..32).collect::<Vec<u32>>()
        );
    }

    #[test]
    fn matches_brute_force() {
        let m = CspModel::nae(3).unwrap();
        for seed in 0..20 {
            let f = sample_csp(&m, 9, 12, seed).unwrap();
            let brute: Vec<u32> = (0..1u32 << 9)
                .filter(|&x| satisfies_mask(&m, &f, x))
                .collect();
            assert_eq!(enumerate_solutions(&m, &f).unwrap(), brute);
        }
    }

    #[test]
    fn mask_conversion_round_trips() {
        let s = mask_to_signs(0b1011, 5);
        assert_eq!(s.as_slice(), &[1, 1, -1, 1, -1]);
        assert_eq!(signs_to_mask(&s), 0b1011);
    }

    #[test]
    fn scale_limit() {
        let m = CspModel::two_coloring(3).unwrap();
        assert!(matches!(
            enumerate_solutions(&m, &CspInstance::new(25, 3)),
            Err(Error::Scale(_))
        ));
    }
}
