//! Threshold constants of a CSP model.
//!
//! `α_k` and `x_k(α)` come from `f(x) = x/(1-e^{-x})^{k-1}`; `ρ_k(α)` is the
//! limiting *-core fraction and `fixed_point_trace` iterates the round
//! recursion that converges to it. `r_p` is the infimum of
//! `-H(θ)/E_φ[ln p_φ(θ)]` over `θ ∈ (0,1)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintFunction, CspModel, Property};
use crate::numeric::{bisect, golden_section_min};

pub const DEFAULT_GRID_STEPS: usize = 10_000;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-13;
pub const DEFAULT_FIXED_POINT_MAX_ITER: usize = 10_000_000;

/// `x/(1-e^{-x})^{k-1}`.
pub fn core_ratio(k: usize, x: f64) -> f64 {
    x / (-(-x).exp_m1()).powi(k as i32 - 1)
}

fn stationarity(k: usize, x: f64) -> f64 {
    // e^x - 1 - (k-1)x, scaled by e^{-x}
    -(-x).exp_m1() - (k as f64 - 1.0) * x * (-x).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaK {
    pub alpha: f64,
    pub minimizer: f64,
}

/// `α_k = inf_{x>0} x/(1-e^{-x})^{k-1}` and its minimizer.
pub fn alpha_k(k: usize) -> Result<AlphaK> {
    if k < 3 {
        return Err(Error::Input(format!("alpha_k requires k >= 3, got {k}")));
    }
    let upper = 10.0 + 4.0 * (k as f64).ln();
    let steps = 20_000;
    let h = upper / steps as f64;
    let best = (1..=steps)
        .map(|i| i as f64 * h)
        .min_by(|a, b| core_ratio(k, *a).total_cmp(&core_ratio(k, *b)))
        .unwrap();
    let (lo, hi) = ((best - h).max(h * 1e-3), best + h);
    let (approx, _) = golden_section_min(|x| core_ratio(k, x), lo, hi, 1e-12);
    // polish on the stationarity equation, which has a clean sign change
    let minimizer = bisect(|x| stationarity(k, x), lo, hi, 0.0).unwrap_or(approx);
    Ok(AlphaK {
        alpha: core_ratio(k, minimizer),
        minimizer,
    })
}

/// Largest root of `x/(1-e^{-x})^{k-1} = α`.
pub fn x_k(k: usize, alpha: f64) -> Result<f64> {
    let a = alpha_k(k)?;
    if alpha.is_nan() || alpha <= a.alpha {
        return Err(Error::Domain(format!(
            "x_k needs alpha > alpha_k = {}, got {alpha}",
            a.alpha
        )));
    }
    let mut hi = a.minimizer.max(1.0) * 2.0;
    while core_ratio(k, hi) <= alpha {
        hi *= 2.0;
    }
    bisect(|x| core_ratio(k, x) - alpha, a.minimizer, hi, 0.0)
        .ok_or_else(|| Error::Assertion("x_k bracket lost its sign change".into()))
}

/// Limiting *-core fraction `1-e^{-x_k(α)}`, zero at or below `α_k`.
pub fn rho_k(k: usize, alpha: f64) -> Result<f64> {
    if alpha <= alpha_k(k)?.alpha {
        return Ok(0.0);
    }
    Ok(-(-x_k(k, alpha)?).exp_m1())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointTrace {
    pub k: usize,
    pub alpha: f64,
    pub rho_sequence: Vec<f64>,
    pub lambda_sequence: Vec<f64>,
    pub rho_limit: f64,
    pub lambda_limit: f64,
    /// `1 - (k-1)λe^{-λ}/ρ` at the limit; 1 when the limit is zero.
    pub gamma_margin: f64,
    pub converged: bool,
}

impl FixedPointTrace {
    pub fn iterations(&self) -> usize {
        self.rho_sequence.len() - 1
    }

    /// `½ λ_i e^{-λ_i}`, the per-sign fraction of vertices essential in
    /// exactly one surviving edge after `i` rounds.
    pub fn half_single_fraction(&self, i: usize) -> f64 {
        let l = self.lambda_sequence[i];
        0.5 * l * (-l).exp()
    }
}

/// Iterates `ρ_{i+1} = 1 - e^{-αρ_i^{k-1}}` from `ρ_0 = 1`.
pub fn fixed_point_trace(
    k: usize,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointTrace> {
    if k < 2 {
        return Err(Error::Input(format!("k must be at least 2, got {k}")));
    }
    if alpha.is_nan() || tol.is_nan() || alpha <= 0.0 || tol <= 0.0 {
        return Err(Error::Input("alpha and tol must be positive".into()));
    }
    let lam = |rho: f64| alpha * rho.powi(k as i32 - 1);
    let mut rho = 1.0;
    let mut rho_sequence = vec![rho];
    let mut lambda_sequence = vec![lam(rho)];
    let mut converged = false;
    for _ in 0..max_iter {
        let next = -(-lam(rho)).exp_m1();
        let step = (next - rho).abs();
        rho = next;
        rho_sequence.push(rho);
        lambda_sequence.push(lam(rho));
        if step < tol {
            converged = true;
            break;
        }
    }
    let lambda_limit = lam(rho);
    let gamma_margin = if rho > 1e-9 {
        1.0 - (k as f64 - 1.0) * lambda_limit * (-lambda_limit).exp() / rho
    } else {
        1.0
    };
    Ok(FixedPointTrace {
        k,
        alpha,
        rho_sequence,
        lambda_sequence,
        rho_limit: rho,
        lambda_limit,
        gamma_margin,
        converged,
    })
}

/// `Ω_f = E|I_φ| / E|S_φ|`.
pub fn omega_f(m: &CspModel) -> f64 {
    m.expect(|f| f.unsatisfying_count() as f64) / m.expect(|f| f.satisfying_count() as f64)
}

/// `Ω_p = E[|I_φ|/|S_φ|]`.
pub fn omega_p(m: &CspModel) -> f64 {
    m.expect(|f| f.unsatisfying_count() as f64 / f.satisfying_count() as f64)
}

/// `ξ = kΩ_f`, the limiting fraction of planted constraints that have an
/// essential variable.
pub fn xi(m: &CspModel) -> Result<f64> {
    m.properties()
        .require(&[Property::Feasible, Property::OneEssential])?;
    Ok(m.arity() as f64 * omega_f(m))
}

fn binomial_row(n: usize) -> Vec<i128> {
    let mut row = vec![1i128; n + 1];
    for j in 1..n {
        row[j] = row[j - 1] * (n - j + 1) as i128 / j as i128;
    }
    row
}

/// `p_φ(θ) = Σ_Q (φ_Q/φ_∅)² θ^{|Q|}` stored by degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiPolynomial {
    coefficients: Vec<f64>,
}

impl PhiPolynomial {
    /// Builds the polynomial from the pairwise distances within `I_φ`:
    /// `Σ_{|Q|=j} φ_Q² = 4^{-k} Σ_{y,y'∈I} e_j(y∘y')`, and `e_j` of a vector
    /// with `d` minus signs is the `θ^j` coefficient of `(1+θ)^{k-d}(1-θ)^d`.
    pub fn new(phi: &ConstraintFunction) -> Result<Self> {
        let k = phi.arity();
        let s = phi.satisfying_count();
        if s == 0 {
            return Err(Error::Domain(
                "constraint has no satisfying assignment".into(),
            ));
        }
        let forbidden = phi.forbidden_indices();
        let mut by_distance = vec![0i128; k + 1];
        for (i, &a) in forbidden.iter().enumerate() {
            by_distance[0] += 1;
            for &b in &forbidden[i + 1..] {
                by_distance[(a ^ b).count_ones() as usize] += 2;
            }
        }
        let mut sums = vec![0i128; k + 1];
        for (d, &count) in by_distance.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let plus = binomial_row(k - d);
            let minus = binomial_row(d);
            for (a, &pa) in plus.iter().enumerate() {
                for (b, &mb) in minus.iter().enumerate() {
                    let term = pa * mb;
                    sums[a + b] += count * if b % 2 == 0 { term } else { -term };
                }
            }
        }
        let s2 = (s as f64) * (s as f64);
        let mut coefficients: Vec<f64> = sums.iter().map(|&u| u as f64 / s2).collect();
        coefficients[0] = 1.0;
        Ok(PhiPolynomial { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, theta: f64) -> f64 {
        1.0 + self.eval_tail(theta)
    }

    /// `p_φ(θ) - 1`, evaluated without cancellation.
    pub fn eval_tail(&self, theta: f64) -> f64 {
        self.coefficients[1..]
            .iter()
            .rev()
            .fold(0.0, |acc, &c| (acc + c) * theta)
    }

    pub fn ln_eval(&self, theta: f64) -> f64 {
        self.eval_tail(theta).ln_1p()
    }
}

pub fn p_phi_poly(phi: &ConstraintFunction, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Input(format!(
            "theta must lie in [0,1], got {theta}"
        )));
    }
    Ok(PhiPolynomial::new(phi)?.eval(theta))
}

fn entropy_unchecked(theta: f64) -> f64 {
    let a = if theta == 0.0 {
        0.0
    } else {
        (1.0 + theta) * theta.ln_1p()
    };
    let b = if theta == 1.0 {
        0.0
    } else {
        (1.0 - theta) * (-theta).ln_1p()
    };
    -0.5 * (a + b)
}

/// `H(θ) = -((1+θ)/2)ln(1+θ) - ((1-θ)/2)ln(1-θ)`; non-positive on `[0,1]`.
pub fn binary_entropy(theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Input(format!(
            "theta must lie in [0,1], got {theta}"
        )));
    }
    Ok(entropy_unchecked(theta))
}

/// The model's distinct polynomials with their total weight.
fn weighted_polynomials(m: &CspModel) -> Result<Vec<(PhiPolynomial, f64)>> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut out: Vec<(PhiPolynomial, f64)> = Vec::new();
    for member in m.members() {
        let poly = PhiPolynomial::new(&member.function)?;
        let key: Vec<u64> = poly.coefficients.iter().map(|c| c.to_bits()).collect();
        match index.get(&key) {
            Some(&i) => out[i].1 += member.weight,
            None => {
                index.insert(key, out.len());
                out.push((poly, member.weight));
            }
        }
    }
    Ok(out)
}

/// Where the infimum defining `r_p` was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfimumLocation {
    Interior,
    ThetaToZero,
    ThetaToOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpValue {
    pub value: f64,
    pub theta: f64,
    pub location: InfimumLocation,
}

/// `inf_{θ∈(0,1)} -H(θ)/E_φ[ln p_φ(θ)]`: grid scan with golden-section
/// refinement, together with both endpoint limits.
pub fn r_p_detailed(m: &CspModel, grid_steps: usize) -> Result<RpValue> {
    m.properties().require(&[
        Property::NonTrivial,
        Property::Feasible,
        Property::Symmetric,
        Property::BalanceDominated,
    ])?;
    if grid_steps < 2 {
        return Err(Error::Input("grid_steps must be at least 2".into()));
    }
    let polys = weighted_polynomials(m)?;
    let mean_ln = |t: f64| polys.iter().map(|(p, w)| w * p.ln_eval(t)).sum::<f64>();
    let g = |t: f64| {
        let d = mean_ln(t);
        if d > 0.0 {
            -entropy_unchecked(t) / d
        } else {
            f64::INFINITY
        }
    };

    let h = 1.0 / grid_steps as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 1..grid_steps {
        let v = g(i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return Err(Error::Degenerate(
            "E[ln p_φ(θ)] vanishes on the whole grid".into(),
        ));
    }
    let lo = (best_i - 1) as f64 * h;
    let hi = (best_i + 1) as f64 * h;
    let (theta, refined) = golden_section_min(g, lo.max(h * 1e-3), hi.min(1.0 - h * 1e-3), 1e-12);
    let mut result = if refined < best {
        RpValue {
            value: refined,
            theta,
            location: InfimumLocation::Interior,
        }
    } else {
        RpValue {
            value: best,
            theta: best_i as f64 * h,
            location: InfimumLocation::Interior,
        }
    };

    let c2: f64 = polys
        .iter()
        .map(|(p, w)| w * p.coefficients().get(2).copied().unwrap_or(0.0))
        .sum();
    if c2 > 0.0 {
        let at_zero = 0.5 / c2;
        if at_zero <= result.value {
            result = RpValue {
                value: at_zero,
                theta: 0.0,
                location: InfimumLocation::ThetaToZero,
            };
        }
    }
    let at_one = r_sat(m);
    if at_one < result.value {
        result = RpValue {
            value: at_one,
            theta: 1.0,
            location: InfimumLocation::ThetaToOne,
        };
    }
    Ok(result)
}

pub fn r_p(m: &CspModel, grid_steps: usize) -> Result<f64> {
    Ok(r_p_detailed(m, grid_steps)?.value)
}

/// `ln 2 / E_φ[ln(1+|I_φ|/|S_φ|)]`.
pub fn r_sat(m: &CspModel) -> f64 {
    std::f64::consts::LN_2
        / m.expect(|f| (f.unsatisfying_count() as f64 / f.satisfying_count() as f64).ln_1p())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub k: usize,
    pub alpha_k: f64,
    pub alpha_minimizer: f64,
    pub xi: f64,
    pub omega_f: f64,
    pub omega_p: f64,
    pub r_f: f64,
    pub r_p: f64,
    pub r_p_theta: f64,
    pub r_p_location: InfimumLocation,
    pub r_p_lower_bound: f64,
    pub r_sat_reference: f64,
}

impl ThresholdReport {
    /// `λ(Υ,r) = ρ_k(ξr)`.
    pub fn lambda(&self, r: f64) -> Result<f64> {
        rho_k(self.k, self.xi * r)
    }
}

pub fn threshold_report(m: &CspModel) -> Result<ThresholdReport> {
    threshold_report_with_grid(m, DEFAULT_GRID_STEPS)
}

pub fn threshold_report_with_grid(m: &CspModel, grid_steps: usize) -> Result<ThresholdReport> {
    let k = m.arity();
    let a = alpha_k(k)?;
    m.properties().require(&Property::ALL)?;
    let xi = xi(m)?;
    let rp = r_p_detailed(m, grid_steps)?;
    let omega_p = omega_p(m);
    Ok(ThresholdReport {
        k,
        alpha_k: a.alpha,
        alpha_minimizer: a.minimizer,
        xi,
        omega_f: omega_f(m),
        omega_p,
        r_f: a.alpha / xi,
        r_p: rp.value,
        r_p_theta: rp.theta,
        r_p_location: rp.location,
        r_p_lower_bound: 0.25 / omega_p,
        r_sat_reference: r_sat(m),
    })
}

/// `λ(Υ,r) = ρ_k(ξ(Υ)r)`.
pub fn lambda(m: &CspModel, r: f64) -> Result<f64> {
    rho_k(m.arity(), xi(m)? * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    // minimizers and infima computed independently at 50-digit precision
    const ALPHA_TABLE: [(usize, f64, f64); 8] = [
        (3, 1.2564312086261697, 2.455_407_482_284_128),
        (4, 1.9038136944403835, 3.089_119_359_210_034),
        (5, 2.336_662_982_263_054, 3.5089013324228448),
        (6, 2.660399058463685, 3.8224867636449225),
        (7, 2.9183004757830526, 4.0724262389972115),
        (8, 3.132_265_450_540_42, 4.2799782903536965),
        (9, 3.314_877_361_786_055, 4.457_295_378_587_838),
        (10, 3.4740194769663545, 4.611_973_711_087_147),
    ];

    #[test]
    fn alpha_k_matches_reference_table() {
        for (k, x1, a) in ALPHA_TABLE {
            let got = alpha_k(k).unwrap();
            assert!(
                (got.minimizer - x1).abs() < 1e-9,
                "k={k}: {}",
                got.minimizer
            );
            assert!((got.alpha - a).abs() < 1e-12, "k={k}: {}", got.alpha);
            assert!(stationarity(k, got.minimizer).abs() < 1e-10);
        }
    }

    #[test]
    fn alpha_k_local_minimality() {
        for k in 3..=12 {
            let a = alpha_k(k).unwrap();
            assert!(core_ratio(k, a.minimizer - 0.1) > a.alpha);
            assert!(core_ratio(k, a.minimizer + 0.1) > a.alpha);
        }
        assert!(matches!(alpha_k(2), Err(Error::Input(_))));
    }

    #[test]
    fn x3_at_three() {
        let x = x_k(3, 3.0).unwrap();
        assert!((x - 2.5496483293345565).abs() < 1e-10);
        assert!((core_ratio(3, x) - 3.0).abs() < 1e-10);
        let rho = rho_k(3, 3.0).unwrap();
        assert!((rho - 0.921_890_870_138_571_3).abs() < 1e-10);
    }

    #[test]
    fn x_k_near_threshold_approaches_minimizer() {
        let a = alpha_k(3).unwrap();
        let x = x_k(3, a.alpha + 1e-9).unwrap();
        assert!((x - a.minimizer).abs() < 1e-3);
        assert!(matches!(x_k(3, a.alpha), Err(Error::Domain(_))));
        assert!(matches!(x_k(3, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fixed_point_sequences_k3_alpha3() {
        let rho = [
            1.0,
            0.9502129316,
            0.9333775617,
            0.9267283138,
            0.9239585052,
            0.9227800903,
            0.9222742975,
        ];
        let half = [
            0.07468060255,
            0.09023056059,
            0.09575074407,
            0.09795954715,
            0.09888387649,
            0.0992778461,
            0.09944707107,
        ];
        let t = fixed_point_trace(
            3,
            3.0,
            DEFAULT_FIXED_POINT_TOL,
            DEFAULT_FIXED_POINT_MAX_ITER,
        )
        .unwrap();
        assert!(t.converged);
        for i in 0..7 {
            assert!((t.rho_sequence[i] - rho[i]).abs() < 1e-9, "rho_{i}");
            assert!(
                (t.half_single_fraction(i) - half[i]).abs() < 1e-9,
                "half_{i}"
            );
        }
        assert!((t.rho_limit - 0.921_890_870_138_571_3).abs() < 1e-9);
        assert!((t.gamma_margin - 0.567_951_437_837_685_1).abs() < 1e-8);
        assert!(t.rho_sequence.windows(2).all(|w| w[1] <= w[0]));
        assert!((t.rho_sequence[1] - (1.0 - (-3.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_collapses_below_threshold() {
        let t = fixed_point_trace(3, 2.0, 1e-12, 100_000).unwrap();
        assert!(t.rho_limit <= 1e-11);
        assert_eq!(t.gamma_margin, 1.0);
    }

    #[test]
    fn xi_examples() {
        assert!((xi(&CspModel::two_coloring(3).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!((xi(&CspModel::two_coloring(4).unwrap()).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert!((xi(&CspModel::nae(3).unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xi_requires_one_essential() {
        let xor =
            ConstraintFunction::from_predicate(3, |x| x.as_slice().iter().product::<i8>() > 0)
                .unwrap();
        let m = CspModel::new("xor", vec![(xor, 1.0)]).unwrap();
        assert!(matches!(xi(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn polynomial_two_coloring_k3() {
        let f = ConstraintFunction::two_coloring(3).unwrap();
        let p = PhiPolynomial::new(&f).unwrap();
        let want = [1.0, 0.0, 1.0 / 3.0, 0.0];
        for (c, w) in p.coefficients().iter().zip(want) {
            assert!((c - w).abs() < 1e-15);
        }
        assert_eq!(p_phi_poly(&f, 0.0).unwrap(), 1.0);
        assert!((p_phi_poly(&f, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_agrees_with_fourier_route() {
        for f in [
            ConstraintFunction::two_coloring(5).unwrap(),
            ConstraintFunction::from_forbidden_indices(6, vec![0b000111, 0b111000, 0b101010])
                .unwrap(),
            ConstraintFunction::from_forbidden_indices(4, vec![1, 2, 4, 8, 15]).unwrap(),
        ] {
            let t = f.fourier_expand().unwrap();
            let levels = t.level_weights();
            let p = PhiPolynomial::new(&f).unwrap();
            let c0 = t.constant();
            for (j, lw) in levels.iter().enumerate() {
                assert!((lw / (c0 * c0) - p.coefficients()[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((binary_entropy(1.0).unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
        let want = -0.75 * 1.5f64.ln() - 0.25 * 0.5f64.ln();
        assert!((binary_entropy(0.5).unwrap() - want).abs() < 1e-15);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn r_p_two_coloring_k3() {
        let m = CspModel::two_coloring(3).unwrap();
        let rp = r_p_detailed(&m, DEFAULT_GRID_STEPS).unwrap();
        assert!((rp.value - 1.5).abs() < 1e-12);
        assert_eq!(rp.location, InfimumLocation::ThetaToZero);
        assert!((r_sat(&m) - 2.409420839653209).abs() < 1e-12);
    }

    #[test]
    fn r_p_two_coloring_k4_k5() {
        let r4 = r_p(&CspModel::two_coloring(4).unwrap(), DEFAULT_GRID_STEPS).unwrap();
        assert!((r4 - 49.0 / 12.0).abs() < 1e-9, "{r4}");
        let r5 = r_p_detailed(&CspModel::two_coloring(5).unwrap(), DEFAULT_GRID_STEPS).unwrap();
        assert!((r5.value - 9.9732).abs() < 1e-3, "{}", r5.value);
        assert_eq!(r5.location, InfimumLocation::Interior);
    }

    #[test]
    fn report_two_coloring_k3() {
        let rep = threshold_report(&CspModel::two_coloring(3).unwrap()).unwrap();
        assert!((rep.r_f - 2.455_407_482_284_128).abs() < 1e-12);
        assert_eq!(rep.r_f, rep.alpha_k / rep.xi);
        assert!(rep.r_f > rep.r_p);
        assert!(rep.r_p_lower_bound <= rep.r_p + 1e-9);
        assert_eq!(rep.lambda(2.0).unwrap(), 0.0);
    }

    #[test]
    fn large_k_orders_thresholds() {
        for k in 27..=35 {
            for m in [
                CspModel::two_coloring(k).unwrap(),
                CspModel::nae_orbit(k).unwrap(),
            ] {
                let rep = threshold_report(&m).unwrap();
                assert!(rep.r_f < rep.r_p, "k={k}");
                let kf = k as f64;
                let pairs = kf * (kf - 1.0) / 2.0;
                let bound = 8.0 * kf.ln()
                    / (kf * (1.0 - 1.0 / (pairs + 1.0)) * (1.0 - 1.0 / (kf * kf)).powf(kf - 1.0));
                assert!(rep.r_f / rep.r_p <= bound, "k={k}");
            }
        }
    }

    #[test]
    fn report_requires_all_properties() {
        let f = ConstraintFunction::from_forbidden_indices(3, vec![0]).unwrap();
        let m = CspModel::new("biased", vec![(f, 1.0)]).unwrap();
        assert!(matches!(threshold_report(&m), Err(Error::Domain(_))));
    }
}
