use starcore::hypergraph::build_gamma;
use starcore::peel::{core_stats, parallel_rounds, peel_star_core, peel_star_core_randomized};
use starcore::sampler::{
    sample_essential_model, sample_model_a, sample_planted, sample_planted_for,
    sample_uniform_small, EdgeTypeDistribution,
};
use starcore::thresholds::{fixed_point_trace, rho_k, xi};
use starcore::{derive_seed, CspModel, SignVector};

fn essential_fraction(m: &CspModel, n: usize, count: usize, seed: u64) -> f64 {
    let p = sample_planted(m, n, count, seed).unwrap();
    let g = build_gamma(&p.instance, &p.sigma, m).unwrap();
    g.edge_count() as f64 / count as f64
}

#[test]
fn every_planted_three_colouring_clause_is_essential() {
    let m = CspModel::two_coloring(3).unwrap();
    assert_eq!(essential_fraction(&m, 20_000, 40_000, 3), 1.0);
}

#[test]
fn essential_fraction_concentrates_at_xi() {
    let m = CspModel::two_coloring(4).unwrap();
    let x = xi(&m).unwrap();
    let f = essential_fraction(&m, 50_000, 50_000, 8);
    assert!((f - x).abs() < 0.01, "{f} vs {x}");
}

#[test]
fn core_fraction_matches_fixed_point() {
    let m = CspModel::two_coloring(3).unwrap();
    let n = 30_000;
    let p = sample_planted(&m, n, 3 * n, 17).unwrap();
    let g = build_gamma(&p.instance, &p.sigma, &m).unwrap();
    let (core, _) = peel_star_core(&g);
    let frac = core.vertex_count() as f64 / n as f64;
    let rho = rho_k(3, 3.0).unwrap();
    assert!((frac - rho).abs() < 0.015, "{frac} vs {rho}");
    let s = core_stats(&core);
    let t = fixed_point_trace(3, 3.0, 1e-13, 1_000_000).unwrap();
    assert!((s.branching_ratio - (1.0 - t.gamma_margin)).abs() < 0.03);
    assert!((s.vertices_plus as f64 / s.vertices as f64 - 0.5).abs() < 0.02);
}

#[test]
fn subcritical_core_is_tiny() {
    let m = CspModel::two_coloring(3).unwrap();
    let n = 30_000;
    let p = sample_planted(&m, n, 2 * n, 5).unwrap();
    let g = build_gamma(&p.instance, &p.sigma, &m).unwrap();
    let (core, _) = peel_star_core(&g);
    assert!((core.vertex_count() as f64) < 0.01 * n as f64);
}

#[test]
fn rounds_follow_the_recursion() {
    let m = CspModel::two_coloring(3).unwrap();
    let n = 40_000;
    let p = sample_planted(&m, n, 3 * n, 23).unwrap();
    let g = build_gamma(&p.instance, &p.sigma, &m).unwrap();
    let trace = parallel_rounds(&g, 6);
    let t = fixed_point_trace(3, 3.0, 1e-13, 1_000_000).unwrap();
    for i in 0..=5 {
        let st = trace.round_stats[i];
        for count in [st.x.plus, st.x.minus] {
            assert!(
                (count as f64 / n as f64 - 0.5 * t.rho_sequence[i]).abs() < 0.01,
                "X at {i}"
            );
        }
        for count in [st.b.plus, st.b.minus] {
            assert!(
                (count as f64 / n as f64 - t.half_single_fraction(i)).abs() < 0.01,
                "B at {i}"
            );
        }
    }
}

#[test]
fn parallel_and_sequential_cores_agree_in_every_order() {
    let m = CspModel::nae(4).unwrap();
    for seed in 0..5 {
        let p = sample_planted(&m, 3000, 4500, seed).unwrap();
        let g = build_gamma(&p.instance, &p.sigma, &m).unwrap();
        let (core, trace) = peel_star_core(&g);
        let survivors: Vec<bool> = trace.round_of.iter().map(|r| r.is_none()).collect();
        assert_eq!(survivors, core.membership());
        for shuffle in 0..10 {
            let other = peel_star_core_randomized(&g, derive_seed(seed, shuffle));
            assert_eq!(other.membership(), core.membership());
            assert_eq!(other.h1(), core.h1());
        }
    }
}

#[test]
fn uniform_small_solution_frequencies_are_flat() {
    // one 2-colouring constraint on 4 variables: 16 - 4 = 12 solutions
    let m = CspModel::two_coloring(3).unwrap();
    let mut counts = std::collections::HashMap::<Vec<i8>, usize>::new();
    let trials = 12_000;
    let mut instances = std::collections::HashSet::new();
    for t in 0..trials {
        let d = sample_uniform_small(&m, 4, 1, t).unwrap();
        instances.insert(d.instance.vars(0).to_vec());
        if d.instance.vars(0) == [0, 1, 2] {
            *counts.entry(d.sigma.as_slice().to_vec()).or_default() += 1;
        }
    }
    assert_eq!(instances.len(), 24);
    assert_eq!(counts.len(), 12);
    let total: usize = counts.values().sum();
    let expect = total as f64 / 12.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    // 11 degrees of freedom, 0.999 quantile is about 31.3
    assert!(chi2 < 31.3, "chi2 = {chi2}");
}

#[test]
fn planted_clause_law_on_three_variables() {
    // with σ = (+,+,-) each of the six orderings shows a 2-1 pattern, and
    // exactly one of the four NAE members forbids it: 18 equally likely
    // (member, tuple) outcomes
    let m = CspModel::nae(3).unwrap();
    let sigma = SignVector::new(vec![1, 1, -1]).unwrap();
    let mut counts = std::collections::HashMap::<(usize, Vec<u32>), usize>::new();
    let trials = 72_000;
    for t in 0..trials {
        let p = sample_planted_for(&m, &sigma, 1, t).unwrap();
        assert!(p.instance.is_satisfied_by(&m, sigma.as_slice()));
        *counts
            .entry((p.instance.member(0), p.instance.vars(0).to_vec()))
            .or_default() += 1;
    }
    assert_eq!(counts.len(), 18);
    let expect = trials as f64 / 18.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    assert!(chi2 < 40.8, "chi2 = {chi2}"); // 17 dof, 0.999 quantile
}

#[test]
fn model_a_matches_type_weights_and_sign_split() {
    let m = CspModel::two_coloring(4).unwrap();
    let n = 20_000;
    let g = sample_model_a(&m, n, 20_000, 4).unwrap();
    let (plus, minus) = g.essential_sign_split();
    let e = g.edge_count() as f64;
    assert!(((plus as f64 - minus as f64) / e).abs() < 3.0 * 2.0 / e.sqrt());
    let n_plus = g.signs().iter().filter(|&&s| s > 0).count();
    let dist = EdgeTypeDistribution::new(&m, n_plus, n - n_plus).unwrap();
    for (t, c) in g.type_histogram() {
        let w = dist.weight(t);
        let sd = (e * w * (1.0 - w)).sqrt();
        assert!(
            (c as f64 - e * w).abs() < 4.0 * sd + 1.0,
            "{t}: {c} vs {}",
            e * w
        );
    }
}

#[test]
fn model_a_and_planted_agree_on_summaries() {
    let m = CspModel::nae(3).unwrap();
    let n = 5000;
    let count = 10_000;
    let mut planted = Vec::new();
    let mut direct = Vec::new();
    for t in 0..40 {
        let p = sample_planted(&m, n, count, derive_seed(1, t)).unwrap();
        planted.push(build_gamma(&p.instance, &p.sigma, &m).unwrap().edge_count() as f64);
        direct.push(
            sample_model_a(&m, n, count, derive_seed(2, t))
                .unwrap()
                .edge_count() as f64,
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // every planted 3-NAE clause has an essential variable
    assert_eq!(mean(&planted), count as f64);
    assert_eq!(mean(&direct), count as f64);
}

#[test]
fn essential_model_plus_counts() {
    let m = CspModel::two_coloring(5).unwrap();
    let n = 4000;
    let signs = SignVector::new((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
    let ess: Vec<u32> = (0..20_000).map(|i| (i * 2) % n as u32).collect();
    let g = sample_essential_model(&signs, &ess, &m, 3).unwrap();
    let dist = EdgeTypeDistribution::new(&m, n / 2, n / 2).unwrap();
    let want = dist.mean_plus_count(1);
    let got: f64 = (0..g.edge_count() as u32)
        .map(|e| g.edge_type(e).a as f64)
        .sum::<f64>()
        / g.edge_count() as f64;
    let var: f64 = dist
        .conditional(1)
        .iter()
        .map(|(t, w)| w * (t.a as f64 - want).powi(2))
        .sum();
    assert!((got - want).abs() < 3.0 * (var / g.edge_count() as f64).sqrt() + 1e-9);
}
