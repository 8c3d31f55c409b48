//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers (visible with `--nocapture`).
//!
//! Expected values marked as frozen were computed once with an independent
//! high-precision implementation (50-digit arithmetic) of the same
//! definitions and then pinned here.

use guessrisk::bounds::{asymptotic_table, cost_lower_bound, cost_upper_bound};
use guessrisk::construct::{brute_force_optimum, build_achievable_strategy};
use guessrisk::dist::{JointPmf, Pmf, DEFAULT_ATOM_CAP};
use guessrisk::entropy::{
    inv_gaussian_cdf, renyi_entropy, smooth_renyi_entropy, smooth_renyi_oracle, source_stats,
    conditional_renyi_zero,
};
use guessrisk::guessing::{evaluate, floor_exp, is_admissible, simulate, GuessingStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA_GRID: [f64; 4] = [0.2, 1.0 / 3.0, 0.5, 0.9];
const EPS_GRID: [f64; 4] = [0.0, 0.05, 0.3, 0.7];

fn random_pmf(rng: &mut ChaCha8Rng, m: usize) -> Pmf {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    Pmf::from_weights(&w).unwrap()
}

/// The shared instance set for the sandwich and achievability criteria.
fn sandwich_instances() -> Vec<(Pmf, f64, f64, f64)> {
    let d_grid = [0.0, 0.5, 1.0, 3.0f64.log2()];
    let rho_grid = [0.5, 1.0, 2.0];
    let eps_grid = [0.0, 0.1, 0.3];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    (0..200)
        .map(|_| {
            let m = rng.random_range(2..=8);
            let p = random_pmf(&mut rng, m);
            let d = d_grid[rng.random_range(0..d_grid.len())];
            let rho = rho_grid[rng.random_range(0..rho_grid.len())];
            let eps = eps_grid[rng.random_range(0..eps_grid.len())];
            (p, d, rho, eps)
        })
        .collect()
}

#[test]
fn criterion_1_smooth_entropy_formula_vs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let m = rng.random_range(2..=8);
        let p = random_pmf(&mut rng, m);
        let alpha = ALPHA_GRID[rng.random_range(0..ALPHA_GRID.len())];
        let eps = EPS_GRID[rng.random_range(0..EPS_GRID.len())];
        let formula = smooth_renyi_entropy(&p, alpha, eps).unwrap();
        let oracle = smooth_renyi_oracle(&p, alpha, eps).unwrap();
        let delta = (formula - oracle).abs();
        worst = worst.max(delta);
        assert!(
            delta <= 1e-9,
            "formula {formula} vs oracle {oracle} (M={m}, alpha={alpha}, eps={eps})"
        );
    }
    println!("ACCEPTANCE 1 (smooth-entropy formula vs oracle, 500 instances): PASS, max |delta| = {worst:.3e}");
}

#[test]
fn criterion_2_one_shot_sandwich() {
    let mut worst_lower: f64 = f64::INFINITY;
    let mut worst_upper: f64 = f64::INFINITY;
    for (p, d, rho, eps) in sandwich_instances() {
        let lower = cost_lower_bound(&p, d, rho, eps).unwrap();
        let upper = cost_upper_bound(&p, d, rho, eps).unwrap();
        let c_star = brute_force_optimum(&p, d, rho, eps).unwrap().c_star;
        assert!(
            lower - 1e-9 <= c_star,
            "lower {lower} > c* {c_star} (M={}, D={d}, rho={rho}, eps={eps})",
            p.len()
        );
        assert!(
            c_star <= upper + 1e-9,
            "c* {c_star} > upper {upper} (M={}, D={d}, rho={rho}, eps={eps})",
            p.len()
        );
        worst_lower = worst_lower.min(c_star - lower);
        worst_upper = worst_upper.min(upper - c_star);
    }
    println!(
        "ACCEPTANCE 2 (one-shot sandwich, 200 instances): PASS, min slacks lower={worst_lower:.3e} upper={worst_upper:.3e}"
    );
}

#[test]
fn criterion_3_achievability_realization() {
    let mut worst_pe: f64 = 0.0;
    for (p, d, rho, eps) in sandwich_instances() {
        let strategy = build_achievable_strategy(&p, d, eps).unwrap();
        assert!(is_admissible(&strategy, &p, d));
        let e = evaluate(&strategy, &p, d, rho).unwrap();
        worst_pe = worst_pe.max((e.error_prob - eps).abs());
        assert!(
            (e.error_prob - eps).abs() <= 1e-9,
            "P_e {} != eps {eps}",
            e.error_prob
        );
        let c_star = brute_force_optimum(&p, d, rho, eps).unwrap().c_star;
        let upper = cost_upper_bound(&p, d, rho, eps).unwrap();
        assert!(
            e.expected_cost >= c_star - 1e-9 && e.expected_cost <= upper + 1e-9,
            "constructed cost {} outside [{c_star}, {upper}]",
            e.expected_cost
        );
    }
    println!("ACCEPTANCE 3 (achievability realization, 200 instances): PASS, max |P_e - eps| = {worst_pe:.3e}");
}

#[test]
fn criterion_4_known_value_spot_checks() {
    let uniform = Pmf::uniform(4);
    let lower = cost_lower_bound(&uniform, 1.0, 1.0, 0.0).unwrap();
    assert!((lower - 0.3333).abs() <= 1e-4, "lower {lower}");
    let constructed = evaluate(
        &build_achievable_strategy(&uniform, 1.0, 0.0).unwrap(),
        &uniform,
        1.0,
        1.0,
    )
    .unwrap()
    .expected_cost;
    assert!((constructed - 1.5).abs() <= 1e-9, "constructed {constructed}");
    let upper = cost_upper_bound(&uniform, 1.0, 1.0, 0.0).unwrap();
    assert!((upper - 5.0).abs() <= 1e-9, "upper {upper}");

    let p = Pmf::from_weights(&[0.7, 0.3]).unwrap();
    let c0 = brute_force_optimum(&p, 0.0, 1.0, 0.0).unwrap().c_star;
    assert!((c0 - 1.3).abs() <= 1e-9, "C*(eps=0) = {c0}");
    let c3 = brute_force_optimum(&p, 0.0, 1.0, 0.3).unwrap().c_star;
    assert!((c3 - 0.7).abs() <= 1e-9, "C*(eps=0.3) = {c3}");

    println!("ACCEPTANCE 4 (known-value spot checks): PASS, lower={lower:.6} constructed={constructed} upper={upper} C*={c0}/{c3}");
}

#[allow(clippy::needless_range_loop)] // y indexes a column across rows
fn random_joint(rng: &mut ChaCha8Rng) -> JointPmf {
    let nx = rng.random_range(2..=6);
    let ny = rng.random_range(2..=6);
    let mut table = vec![vec![0.0f64; ny]; nx];
    for row in table.iter_mut() {
        for cell in row.iter_mut() {
            // sprinkle zeros but keep every column mass positive below
            *cell = if rng.random_range(0.0..1.0) < 0.2 {
                0.0
            } else {
                rng.random_range(0.01..1.0)
            };
        }
    }
    for y in 0..ny {
        if (0..nx).all(|x| table[x][y] == 0.0) {
            let x = rng.random_range(0..nx);
            table[x][y] = rng.random_range(0.01..1.0);
        }
    }
    let total: f64 = table.iter().flatten().sum();
    for row in table.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    JointPmf::new(table).unwrap()
}

#[test]
fn criterion_5_chain_rule_inequalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst_mono: f64 = f64::INFINITY;
    let mut worst_chain: f64 = f64::INFINITY;
    for _ in 0..500 {
        let joint = random_joint(&mut rng);
        let alpha = ALPHA_GRID[rng.random_range(0..ALPHA_GRID.len())];
        let eps = EPS_GRID[rng.random_range(0..EPS_GRID.len())];

        let flat = joint.flattened();
        let h_joint = smooth_renyi_entropy(&flat, alpha, eps).unwrap();

        // adding a variable never decreases smooth entropy
        let x_marginal = Pmf::from_weights(&joint.marginal_x()).unwrap();
        let h_x = smooth_renyi_entropy(&x_marginal, alpha, eps).unwrap();
        worst_mono = worst_mono.min(h_joint - h_x);
        assert!(
            h_x <= h_joint + 1e-9,
            "H(X) {h_x} > H(X,Y) {h_joint} (alpha={alpha}, eps={eps})"
        );

        // chain rule: H^eps(X,Y) <= H^0(X|Y) + H^eps(Y)
        let y_marginal = Pmf::from_weights(&joint.marginal_y()).unwrap();
        let h_y = smooth_renyi_entropy(&y_marginal, alpha, eps).unwrap();
        let h_cond = conditional_renyi_zero(&joint, alpha).unwrap();
        worst_chain = worst_chain.min(h_cond + h_y - h_joint);
        assert!(
            h_joint <= h_cond + h_y + 1e-9,
            "H(X,Y) {h_joint} > H(X|Y) {h_cond} + H(Y) {h_y} (alpha={alpha}, eps={eps})"
        );
    }
    println!(
        "ACCEPTANCE 5 (chain-rule inequalities, 500 joints): PASS, min slacks mono={worst_mono:.3e} chain={worst_chain:.3e}"
    );
}

/// A random admissible strategy: a random ordered block partition with
/// uniform reconstructions and moderate stop probabilities.
fn random_admissible_strategy(
    rng: &mut ChaCha8Rng,
    m: usize,
    d_level: f64,
) -> GuessingStrategy {
    let width = floor_exp(d_level) as usize;
    let mut symbols: Vec<usize> = (0..m).collect();
    // Fisher-Yates with the test rng
    for i in (1..m).rev() {
        let j = rng.random_range(0..=i);
        symbols.swap(i, j);
    }
    let mut reconstructions = Vec::new();
    let mut start = 0;
    while start < m {
        let size = rng.random_range(1..=width.min(m - start));
        let mut r = vec![0.0; m];
        for &x in &symbols[start..start + size] {
            r[x] = 1.0 / size as f64;
        }
        reconstructions.push(r);
        start += size;
    }
    let n = reconstructions.len();
    let stop_probs = (0..n).map(|_| rng.random_range(0.05..0.5)).collect();
    GuessingStrategy::new(reconstructions, stop_probs).unwrap()
}

#[test]
fn criterion_6_monte_carlo_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let trials = 100_000u64;
    let mut worst_pe_sigmas: f64 = 0.0;
    let mut worst_cost_sigmas: f64 = 0.0;
    for k in 0..20 {
        let m = rng.random_range(3..=8);
        let p = random_pmf(&mut rng, m);
        let d = [0.0, 1.0, 3.0f64.log2()][rng.random_range(0..3)];
        let rho = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let s = random_admissible_strategy(&mut rng, m, d);
        assert!(is_admissible(&s, &p, d));
        let exact = evaluate(&s, &p, d, rho).unwrap();
        let report = simulate(&s, &p, d, rho, trials, 9000 + k).unwrap();

        // standard errors from the exact distribution of a single trial
        let n = trials as f64;
        let se_pe = (exact.error_prob * (1.0 - exact.error_prob) / n).sqrt();
        let second_moment: f64 = exact
            .survival
            .iter()
            .zip(&exact.pz)
            .enumerate()
            .map(|(i, (l, q))| l * q * ((i + 1) as f64).powf(2.0 * rho))
            .sum();
        let var_cost = (second_moment - exact.expected_cost * exact.expected_cost).max(0.0);
        let se_cost = (var_cost / n).sqrt();

        let pe_dev = (report.est_error_prob - exact.error_prob).abs();
        let cost_dev = (report.est_cost - exact.expected_cost).abs();
        assert!(
            pe_dev <= 4.0 * se_pe,
            "instance {k}: P_e deviation {pe_dev} > 4 x {se_pe}"
        );
        assert!(
            cost_dev <= 4.0 * se_cost,
            "instance {k}: cost deviation {cost_dev} > 4 x {se_cost}"
        );
        worst_pe_sigmas = worst_pe_sigmas.max(pe_dev / se_pe);
        worst_cost_sigmas = worst_cost_sigmas.max(cost_dev / se_cost);

        // identical seeds give byte-identical reports
        let again = simulate(&s, &p, d, rho, trials, 9000 + k).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }
    println!(
        "ACCEPTANCE 6 (Monte Carlo consistency, 20 strategies x 1e5 trials): PASS, worst deviations {worst_pe_sigmas:.2} / {worst_cost_sigmas:.2} sigma"
    );
}

#[test]
fn criterion_7_asymptotic_expansion() {
    let p = Pmf::from_weights(&[0.75, 0.25]).unwrap();
    let ns = [8u64, 16, 32, 64, 128, 256, 512];
    let rows = asymptotic_table(&p, 1.0 / 3.0, 0.1, &ns, DEFAULT_ATOM_CAP).unwrap();

    // Frozen reference entropies (independent 50-digit evaluation).
    let expected_exact = [
        (8, 6.394_407_434_166_396),
        (512, 427.669_937_355_529),
    ];
    for (n, value) in expected_exact {
        let row = rows.iter().find(|r| r.n == n).unwrap();
        assert!(
            (row.exact_entropy - value).abs() <= 1e-6,
            "exact H at n={n}: {} vs frozen {value}",
            row.exact_entropy
        );
    }

    // (a) residual stays bounded; the grid maximum observed at freeze time
    // was 0.8562, pinned here with headroom that still fails on any
    // log(n) or sqrt(n) drift.
    let max_residual = rows
        .iter()
        .map(|r| r.residual.abs())
        .fold(0.0f64, f64::max);
    assert!(max_residual <= 1.0, "max |residual| = {max_residual}");

    // (b) the sqrt(n)-normalized second-order statistic approaches
    // -sqrt(V) * inverse_cdf(eps).
    let stats = source_stats(&p);
    let limit = -stats.varentropy.sqrt() * inv_gaussian_cdf(0.1).unwrap();
    let last = rows.last().unwrap();
    assert_eq!(last.n, 512);
    assert!(
        (last.normalized_second_order - limit).abs() <= 0.1,
        "normalized second order {} vs limit {limit}",
        last.normalized_second_order
    );
    println!(
        "ACCEPTANCE 7 (asymptotic expansion): PASS, max |residual| = {max_residual:.4}, nso(512) = {:.4} vs limit {limit:.4}",
        last.normalized_second_order
    );
}

/// Test-side normal CDF, independent of the library's internal integrator:
/// composite Simpson with a different step policy.
fn reference_gaussian_cdf(x: f64) -> f64 {
    let steps = 4000usize;
    let h = x / steps as f64;
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = density(0.0) + density(x);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * density(i as f64 * h);
    }
    0.5 + acc * h / 3.0
}

#[test]
fn criterion_8_inverse_gaussian_contract() {
    let mut worst: f64 = 0.0;
    for i in 1..=99 {
        let u = i as f64 / 100.0;
        let x = inv_gaussian_cdf(u).unwrap();
        let roundtrip = reference_gaussian_cdf(x);
        let err = (roundtrip - u).abs();
        worst = worst.max(err);
        assert!(err <= 1e-7, "Phi(Phi^-1({u})) = {roundtrip}");
        let mirrored = inv_gaussian_cdf(1.0 - u).unwrap();
        assert!((x + mirrored).abs() <= 1e-8, "antisymmetry at {u}");
    }
    println!("ACCEPTANCE 8 (inverse Gaussian CDF contract, 99-point grid): PASS, max |roundtrip error| = {worst:.3e}");
}

#[test]
fn criterion_9_specialization_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.random_range(2..=8);
        let p = random_pmf(&mut rng, m);
        let rho = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let alpha = 1.0 / (1.0 + rho);
        let d = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        let eps = [0.0, 0.1, 0.3][rng.random_range(0..3)];

        // eps = 0: the upper bound must reduce to the plain-Renyi form
        let upper = cost_upper_bound(&p, d, rho, 0.0).unwrap();
        let log_b = (floor_exp(d) as f64).log2();
        let wu_form = 1.0
            + (rho + rho * renyi_entropy(&p, alpha).unwrap() - rho * log_b).exp2();
        worst = worst.max((upper - wu_form).abs());
        assert!((upper - wu_form).abs() <= 1e-12, "{upper} vs {wu_form}");

        // D = 0: the lower bound must reduce to the distortion-free form
        let lower = cost_lower_bound(&p, 0.0, rho, eps).unwrap();
        let direct = (1.0 + (m as f64).log2()).powf(-rho)
            * (rho * smooth_renyi_entropy(&p, alpha, eps).unwrap()).exp2();
        worst = worst.max((lower - direct).abs());
        assert!((lower - direct).abs() <= 1e-12, "{lower} vs {direct}");
    }
    println!("ACCEPTANCE 9 (specialization identities, 50 instances): PASS, max |delta| = {worst:.3e}");
}
