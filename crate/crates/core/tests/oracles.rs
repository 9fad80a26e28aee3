//! Independent brute-force oracles for the combinatorial predicates, run on
//! small random instances.

use proptest::prelude::*;
use starcore::freeze::{
    chain_flip_path, closure, decompose_flippable, difference_is_flippable, exact_frozen_set,
    greatest_flippable_subset, is_cyclic, is_flippable, peeling_chain, SolutionGraph,
};
use starcore::hypergraph::build_gamma;
use starcore::model::check_feasible_1essential_characterization;
use starcore::peel::{exact_star_depth, peel_star_core, star_depth, StarCore, StarDepth};
use starcore::sampler::{rng_from_seed, sample_uniform_small, CspInstance, UniformDraw};
use starcore::solutions::{enumerate_solutions, signs_to_mask};
use starcore::{derive_seed, ConstraintFunction, CspModel};

use rand::seq::SliceRandom;
use rand::Rng;

fn draw(seed: u64) -> (CspModel, UniformDraw) {
    draw_with_density(seed, 2.0, 3.0)
}

fn draw_with_density(seed: u64, lo: f64, hi: f64) -> (CspModel, UniformDraw) {
    let m = CspModel::two_coloring(3).unwrap();
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(8..=13);
    let count = (rng.gen_range(lo..=hi) * n as f64).round() as usize;
    let d = sample_uniform_small(&m, n, count, seed).unwrap();
    (m, d)
}

fn brute_solutions(m: &CspModel, f: &CspInstance) -> Vec<u32> {
    (0..1u32 << f.n())
        .filter(|&x| {
            f.constraints().all(|(member, vars)| {
                let idx = vars
                    .iter()
                    .fold(0u64, |a, &v| (a << 1) | (x >> v & 1) as u64);
                m.member(member).eval_index(idx)
            })
        })
        .collect()
}

/// Definition check, written without the library helpers.
fn flippable_by_definition(core: &StarCore, s: &[u32]) -> bool {
    let g = core.gamma();
    s.iter().all(|&x| {
        (0..g.edge_count() as u32)
            .filter(|&e| core.is_edge_alive(e) && g.essential(e) == x)
            .all(|e| g.edge(e).iter().any(|&u| u != x && s.contains(&u)))
    })
}

/// `cl(A)` as the least fixed point of "add `x ∈ H₁` whose single edge meets
/// the current set".
fn closure_by_fixpoint(core: &StarCore, a: &[u32]) -> Vec<u32> {
    let g = core.gamma();
    let mut set: Vec<u32> = a.to_vec();
    loop {
        let mut grew = false;
        for x in 0..g.n_vertices() as u32 {
            if set.contains(&x) || !core.in_h1(x) {
                continue;
            }
            let e = core.single_edge(x).unwrap();
            if g.non_essential(e).iter().any(|u| set.contains(u)) {
                set.push(x);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    set.sort_unstable();
    set
}

fn random_subset(rng: &mut impl Rng, from: &[u32]) -> Vec<u32> {
    let mut s: Vec<u32> = from.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    s.sort_unstable();
    s
}

/// Frozen set found by breadth-first search over brute-force solutions.
fn frozen_by_bfs(sols: &[u32], start: u32, n: usize, ell: u32) -> Vec<u32> {
    let mut seen = vec![false; sols.len()];
    let i0 = sols.iter().position(|&s| s == start).unwrap();
    seen[i0] = true;
    let mut queue = vec![i0];
    let mut changed = 0u32;
    while let Some(i) = queue.pop() {
        changed |= sols[i] ^ start;
        for (j, &t) in sols.iter().enumerate() {
            if !seen[j] && (sols[i] ^ t).count_ones() <= ell {
                seen[j] = true;
                queue.push(j);
            }
        }
    }
    (0..n as u32).filter(|&v| changed >> v & 1 == 0).collect()
}

#[test]
fn enumeration_matches_brute_force() {
    for t in 0..40 {
        let (m, d) = draw(derive_seed(100, t));
        assert_eq!(
            enumerate_solutions(&m, &d.instance).unwrap(),
            brute_solutions(&m, &d.instance)
        );
    }
}

#[test]
fn frozen_sets_match_breadth_first_search() {
    for t in 0..40 {
        let (m, d) = draw(derive_seed(101, t));
        let sols = brute_solutions(&m, &d.instance);
        let s = signs_to_mask(&d.sigma);
        let mut previous: Option<Vec<u32>> = None;
        for ell in 1..=4 {
            let got = exact_frozen_set(&m, &d.instance, &d.sigma, ell).unwrap();
            assert_eq!(
                got,
                frozen_by_bfs(&sols, s, d.instance.n(), ell as u32),
                "trial {t}, ell {ell}"
            );
            if let Some(prev) = previous {
                assert!(
                    got.iter().all(|v| prev.contains(v)),
                    "frozen set grew with ell"
                );
            }
            previous = Some(got);
        }
    }
}

#[test]
fn solution_graph_components_are_symmetric() {
    let (m, d) = draw(derive_seed(102, 0));
    let g = SolutionGraph::new(&m, &d.instance, 2).unwrap();
    for &s in g.solutions() {
        for t in g.component(s) {
            assert!(g.component(t).contains(&s));
        }
    }
}

#[test]
fn closure_matches_fixpoint() {
    for t in 0..60 {
        let (m, d) = draw(derive_seed(103, t));
        let gamma = build_gamma(&d.instance, &d.sigma, &m).unwrap();
        let (core, _) = peel_star_core(&gamma);
        let verts: Vec<u32> = core.vertices().collect();
        let mut rng = rng_from_seed(t);
        for _ in 0..10 {
            let a = random_subset(&mut rng, &verts);
            assert_eq!(closure(&core, &a).unwrap(), closure_by_fixpoint(&core, &a));
        }
    }
}

#[test]
fn greatest_flippable_subset_is_union_of_all_flippable_subsets() {
    for t in 0..60 {
        let (m, d) = draw(derive_seed(104, t));
        let gamma = build_gamma(&d.instance, &d.sigma, &m).unwrap();
        let (core, _) = peel_star_core(&gamma);
        let mut verts: Vec<u32> = core.vertices().collect();
        let mut rng = rng_from_seed(t);
        verts.shuffle(&mut rng);
        verts.truncate(11);
        verts.sort_unstable();
        let mut union = 0u32;
        for bits in 0..1u32 << verts.len() {
            let s: Vec<u32> = (0..verts.len())
                .filter(|&i| bits >> i & 1 == 1)
                .map(|i| verts[i])
                .collect();
            assert_eq!(
                is_flippable(&core, &s).unwrap(),
                flippable_by_definition(&core, &s)
            );
            if flippable_by_definition(&core, &s) {
                union |= bits;
            }
        }
        let expect: Vec<u32> = (0..verts.len())
            .filter(|&i| union >> i & 1 == 1)
            .map(|i| verts[i])
            .collect();
        assert_eq!(greatest_flippable_subset(&core, &verts).unwrap(), expect);
    }
}

#[test]
fn flippable_sets_decompose_and_unions_stay_flippable() {
    let mut checked = 0;
    for t in 0..80 {
        let (m, d) = draw(derive_seed(105, t));
        let gamma = build_gamma(&d.instance, &d.sigma, &m).unwrap();
        let (core, _) = peel_star_core(&gamma);
        let verts: Vec<u32> = core.vertices().collect();
        let mut rng = rng_from_seed(t);
        for _ in 0..5 {
            let a = greatest_flippable_subset(&core, &random_subset(&mut rng, &verts)).unwrap();
            let b = greatest_flippable_subset(&core, &random_subset(&mut rng, &verts)).unwrap();
            let mut u = a.clone();
            u.extend(&b);
            u.sort_unstable();
            u.dedup();
            assert!(flippable_by_definition(&core, &u));
            for s in [&a, &b, &u] {
                let dec = decompose_flippable(&core, s).unwrap();
                assert!(is_cyclic(&core, &dec.c_s).unwrap());
                for &(x, y) in &dec.arcs {
                    assert!(core.single_edge_others(x).contains(&y));
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn solution_differences_are_flippable_on_the_core() {
    for t in 0..60 {
        let (m, d) = draw(derive_seed(106, t));
        let gamma = build_gamma(&d.instance, &d.sigma, &m).unwrap();
        let (core, _) = peel_star_core(&gamma);
        let s = signs_to_mask(&d.sigma);
        for other in brute_solutions(&m, &d.instance) {
            assert!(difference_is_flippable(&core, s, other));
        }
    }
}

#[test]
fn acyclic_chains_give_flip_paths() {
    let mut acyclic = 0;
    for t in 0..200 {
        let (m, d) = draw_with_density(derive_seed(107, t), 0.5, 1.5);
        let f = &d.instance;
        let gamma = build_gamma(f, &d.sigma, &m).unwrap();
        let (core, trace) = peel_star_core(&gamma);
        let frozen = exact_frozen_set(&m, f, &d.sigma, 1).unwrap();
        for x in 0..f.n() as u32 {
            if core.contains(x) {
                continue;
            }
            let chain = peeling_chain(f, &gamma, &trace.round_of, x).unwrap();
            if !chain.acyclic {
                continue;
            }
            acyclic += 1;
            let path =
                chain_flip_path(&m, f, &d.sigma, &chain).expect("acyclic chain flips cleanly");
            let last = path.last().unwrap();
            assert!(f.is_satisfied_by(&m, last.as_slice()));
            assert_ne!(last.get(x as usize), d.sigma.get(x as usize));
            assert!(!frozen.contains(&x), "trial {t}: {x} is 1-frozen");
        }
    }
    assert!(acyclic > 100, "only {acyclic} acyclic chains");
}

#[test]
fn exact_depth_never_exceeds_round() {
    for t in 0..40 {
        let (m, d) = draw(derive_seed(108, t));
        let gamma = build_gamma(&d.instance, &d.sigma, &m).unwrap();
        let (_, trace) = peel_star_core(&gamma);
        for (v, &up) in star_depth(&trace).iter().enumerate() {
            let exact = exact_star_depth(&gamma, v as u32, up);
            assert!(exact <= up);
            assert_eq!(exact == StarDepth::Infinite, up == StarDepth::Infinite);
            if up == StarDepth::Finite(0) {
                assert_eq!(exact, StarDepth::Finite(0));
            }
        }
    }
}

fn feasible_by_definition(phi: &ConstraintFunction) -> bool {
    let k = phi.arity();
    (0..1u64 << k).all(|x| (0..k).all(|i| phi.eval_index(x) || phi.eval_index(x ^ (1 << i))))
}

fn essential_count(phi: &ConstraintFunction, x: u64) -> usize {
    (0..phi.arity())
        .filter(|&i| !phi.eval_index(x ^ (1 << i)))
        .count()
}

fn one_essential_by_definition(phi: &ConstraintFunction) -> bool {
    (0..1u64 << phi.arity())
        .filter(|&x| phi.eval_index(x))
        .all(|x| essential_count(phi, x) <= 1)
}

fn arb_function() -> impl Strategy<Value = ConstraintFunction> {
    (3usize..=6).prop_flat_map(|k| {
        proptest::collection::btree_set(0u64..1 << k, 0..=5).prop_map(move |set| {
            ConstraintFunction::from_forbidden_indices(k, set.into_iter().collect()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn distance_characterization_matches_definitions(phi in arb_function()) {
        prop_assert_eq!(phi.is_feasible(), feasible_by_definition(&phi));
        prop_assert_eq!(phi.is_one_essential(), one_essential_by_definition(&phi));
        prop_assert_eq!(
            check_feasible_1essential_characterization(&phi),
            feasible_by_definition(&phi) && one_essential_by_definition(&phi)
        );
    }

    #[test]
    fn essential_pairs_count_k_per_forbidden(phi in arb_function()) {
        prop_assume!(feasible_by_definition(&phi));
        let pairs: usize = (0..1u64 << phi.arity())
            .filter(|&x| phi.eval_index(x))
            .map(|x| essential_count(&phi, x))
            .sum();
        prop_assert_eq!(pairs, phi.arity() * phi.unsatisfying_count() as usize);
        prop_assert_eq!(phi.essential_pairs().len(), pairs);
    }

    #[test]
    fn fourier_reconstruction_and_parseval(phi in arb_function()) {
        let t = phi.fourier_expand().unwrap();
        for x in 0..1u64 << phi.arity() {
            let want = if phi.eval_index(x) { 1.0 } else { 0.0 };
            prop_assert!((t.reconstruct(x) - want).abs() < 1e-12);
        }
        let density = phi.satisfying_count() as f64 / (1u64 << phi.arity()) as f64;
        prop_assert!((t.parseval_sum() - density).abs() < 1e-12);
        prop_assert!((t.constant() - density).abs() < 1e-12);
    }

    #[test]
    fn distance_three_sets_obey_the_sphere_packing_bound(phi in arb_function()) {
        prop_assume!(check_feasible_1essential_characterization(&phi));
        let k = phi.arity() as u64;
        prop_assert!(phi.unsatisfying_count() * (k + 1) <= 1 << k);
    }
}

#[test]
fn hamming_code_beats_the_pairwise_bound() {
    // the [7,4] Hamming code: 16 words, pairwise distance >= 3, closed under
    // negation. 16 > 2^7/(C(7,2)+1), so the pairwise bound does not hold for
    // every feasible 1-essential function; the sphere-packing bound is tight
    let gen = [0b1000110u64, 0b0100101, 0b0010011, 0b0001111];
    let words: Vec<u64> = (0..16u32)
        .map(|c| {
            (0..4)
                .filter(|&i| c >> i & 1 == 1)
                .fold(0, |w, i| w ^ gen[i])
        })
        .collect();
    let phi = ConstraintFunction::from_forbidden_indices(7, words).unwrap();
    assert!(feasible_by_definition(&phi) && one_essential_by_definition(&phi));
    assert!(phi.is_symmetric());
    assert_eq!(phi.unsatisfying_count(), 16);
    let pairs = 7.0 * 6.0 / 2.0;
    assert!(phi.unsatisfying_count() as f64 > 128.0 / (pairs + 1.0));
    assert_eq!(phi.unsatisfying_count() * 8, 128);
}
