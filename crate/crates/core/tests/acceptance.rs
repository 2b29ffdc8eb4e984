//! Acceptance suite: every criterion below runs at its stated tolerance and
//! prints one PASS/FAIL line (use `-- --nocapture` to see them live).

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vnwass::algebra::{
    make_state, random_faithful_state, random_faithful_state_with, FdAlgebra, GeneratorSet,
};
use vnwass::linalg::{matrix_power, CMatrix, C64, ZERO};
use vnwass::modular::kms_dual;
use vnwass::solver::{qubit_grid_oracle, solve_w2, transportation_lp, Mode, SolverOptions};
use vnwass::transport::{channel_to_plan, cost_channel, cost_plan, multiplicative_domain_check};
use vnwass::verify::{
    asymmetric_suite, kms_symmetry_check, pseudometric_demo, random_covariant_channel,
    random_matched_channel, subadditivity_suite, SuiteOptions,
};

fn criterion(n: usize, name: &str, pass: bool, details: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("[criterion {n:2}] {status} — {name}: {details}");
    assert!(pass, "criterion {n} ({name}) failed: {details}");
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// random diagonal state on C^m
fn random_probability(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

#[test]
fn criterion_01_classical_reduction() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max_gap: f64 = 0.0;
    for inst in 0..50 {
        let m = 2 + inst % 5;
        let alg = FdAlgebra::abelian(m);
        let p = random_probability(m, &mut rng);
        let q = random_probability(m, &mut rng);
        let mu = make_state(&alg, CMatrix::diag(&p)).unwrap();
        let nu = make_state(&alg, CMatrix::diag(&q)).unwrap();
        // alternate singleton indicators and random 0/1 subset diagonals
        let k = if inst % 2 == 0 {
            GeneratorSet::coordinate_indicators(&alg).unwrap()
        } else {
            let sets: Vec<CMatrix> = (0..m)
                .map(|_| {
                    let d: Vec<f64> = (0..m)
                        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                        .collect();
                    CMatrix::diag(&d)
                })
                .collect();
            GeneratorSet::new(&alg, sets).unwrap()
        };
        let cost: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        k.iter()
                            .map(|kl| (kl[(i, i)] - kl[(j, j)]).norm_sqr())
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let (lp, _) = transportation_lp(&p, &q, &cost).unwrap();
        let res = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        max_gap = max_gap.max((res.w2 * res.w2 - lp).abs());
    }
    // pinned fixture
    let alg = FdAlgebra::abelian(2);
    let mu = make_state(&alg, CMatrix::diag(&[0.7, 0.3])).unwrap();
    let nu = make_state(&alg, CMatrix::diag(&[0.4, 0.6])).unwrap();
    let k = GeneratorSet::new(&alg, vec![CMatrix::diag(&[0.0, 1.0])]).unwrap();
    let res = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
    let fixture_gap = (res.w2 * res.w2 - 0.3).abs();
    criterion(
        1,
        "classical reduction",
        max_gap <= 1e-5 && fixture_gap <= 1e-5,
        &format!(
            "max |SDP − LP| = {max_gap:.2e} over 50 instances, fixture gap {fixture_gap:.2e}, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_02_self_distance() {
    let start = Instant::now();
    let mut worst_w2: f64 = 0.0;
    let mut worst_idres: f64 = 0.0;
    for trial in 0..50 {
        let (alg, k) = if trial % 2 == 0 {
            let alg = FdAlgebra::full(2);
            let k = GeneratorSet::paulis(&alg).unwrap();
            (alg, k)
        } else {
            let alg = FdAlgebra::full(3);
            let k = GeneratorSet::hermitian_basis(&alg).unwrap();
            (alg, k)
        };
        let mu = random_faithful_state(&alg, 200 + trial as u64);
        let res = solve_w2(&mu, &mu, &k, Mode::Modular, &opts()).unwrap();
        worst_w2 = worst_w2.max(res.w2);
        let md = multiplicative_domain_check(&res.optimal_channel, &k, &mu, 2).unwrap();
        worst_idres = worst_idres.max(md.identity_residual);
    }
    criterion(
        2,
        "self-distance",
        worst_w2 <= 1e-3 && worst_idres <= 1e-6,
        &format!(
            "max W₂(μ,μ) = {worst_w2:.2e}, max identity residual = {worst_idres:.2e}, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_03_symmetry() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut max_gap: f64 = 0.0;
    for _ in 0..100 {
        let mu = random_faithful_state_with(&alg, &mut rng);
        let nu = random_faithful_state_with(&alg, &mut rng);
        let fwd = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        let bwd = solve_w2(&nu, &mu, &k, Mode::Modular, &opts()).unwrap();
        max_gap = max_gap.max((fwd.w2 - bwd.w2).abs());
    }
    criterion(
        3,
        "symmetry",
        max_gap <= 1e-5,
        &format!(
            "max |W₂(μ,ν) − W₂(ν,μ)| = {max_gap:.2e} over 100 pairs, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_04_triangle_inequality() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut max_violation: f64 = 0.0;
    for _ in 0..100 {
        let mu = random_faithful_state_with(&alg, &mut rng);
        let nu = random_faithful_state_with(&alg, &mut rng);
        let xi = random_faithful_state_with(&alg, &mut rng);
        let mu_xi = solve_w2(&mu, &xi, &k, Mode::Modular, &opts()).unwrap();
        let mu_nu = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        let nu_xi = solve_w2(&nu, &xi, &k, Mode::Modular, &opts()).unwrap();
        max_violation = max_violation.max(mu_xi.w2 - mu_nu.w2 - nu_xi.w2);
    }
    let sub_m2 = subadditivity_suite(&alg, &k, 250, 4041).unwrap();
    let alg3 = FdAlgebra::abelian(3);
    let k3 = GeneratorSet::coordinate_indicators(&alg3).unwrap();
    let sub_c3 = subadditivity_suite(&alg3, &k3, 250, 4042).unwrap();
    let sub_max = sub_m2.max_violation.max(sub_c3.max_violation);
    criterion(
        4,
        "triangle inequality",
        max_violation <= 1e-5 && sub_max <= 1e-9,
        &format!(
            "max W₂ triangle violation = {max_violation:.2e} over 100 triples, \
             max subadditivity violation = {sub_max:.2e} over 500 chains, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_05_duality_identities() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut max_involution: f64 = 0.0;
    let mut max_marginal: f64 = 0.0;
    for seed in 0..100u64 {
        let mu = random_faithful_state(&alg, 5000 + 2 * seed);
        let nu = random_faithful_state(&alg, 5001 + 2 * seed);
        let e = random_matched_channel(&mu, &nu, &mut rng).unwrap();
        let dual = kms_dual(&e, &mu, &nu).unwrap();
        max_marginal = max_marginal.max(dual.marginal_residual(&nu, &mu));
        let back = kms_dual(&dual, &nu, &mu).unwrap();
        max_involution = max_involution.max(back.dist(&e));
    }
    let mut max_term_gap: f64 = 0.0;
    for seed in 0..10u64 {
        let mu = random_faithful_state(&alg, 5200 + 2 * seed);
        let nu = random_faithful_state(&alg, 5201 + 2 * seed);
        let gap = kms_symmetry_check(&mu, &nu, &k, 10, 5300 + seed).unwrap();
        max_term_gap = max_term_gap.max(gap);
    }
    criterion(
        5,
        "duality identities",
        max_involution <= 1e-9 && max_marginal <= 1e-10 && max_term_gap <= 1e-8,
        &format!(
            "max ‖(E^σ)^σ − E‖ = {max_involution:.2e}, max ‖μ∘E^σ − ν‖ = {max_marginal:.2e}, \
             max per-term symmetry gap = {max_term_gap:.2e} over 100 covariant channels, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_06_cost_form_equivalence() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut max_gap: f64 = 0.0;
    let mut max_gram_gap: f64 = 0.0;
    for seed in 0..50u64 {
        let mu = random_faithful_state(&alg, 6000 + 2 * seed);
        let nu = random_faithful_state(&alg, 6001 + 2 * seed);
        let e = if seed % 2 == 0 {
            random_matched_channel(&mu, &nu, &mut rng).unwrap()
        } else {
            random_covariant_channel(&mu, &nu, &mut rng).unwrap()
        };
        let ch = cost_channel(&e, &mu, &nu, &k).unwrap();
        let plan = channel_to_plan(&e, &nu).unwrap();
        let pl = cost_plan(&plan, &mu, &nu, &k).unwrap();
        max_gap = max_gap.max((ch.total - pl.total).abs());
        for l in 0..k.len() {
            max_gap = max_gap.max((ch.per_generator[l] - pl.per_generator[l]).abs());
        }
        max_gram_gap = max_gram_gap.max((gram_gns_cost(&plan, &nu, &k) - ch.total).abs());
    }
    criterion(
        6,
        "cost-form equivalence",
        max_gap <= 1e-9 && max_gram_gap <= 1e-9,
        &format!(
            "max |channel − plan| = {max_gap:.2e}, max |channel − Gram GNS| = {max_gram_gap:.2e} \
             over 50 instances, {:.1?}",
            start.elapsed()
        ),
    );
}

/// Independent GNS-path cost: the Gram matrix of the vectors
/// {(e_ij⊗1)Ω} ∪ {(1⊗R(e_kl))Ω} is read off the plan, and each generator
/// term is the quadratic form of k⊗1 − 1⊗R(ρ^{-1/2}kρ^{1/2}).
fn gram_gns_cost(
    plan: &vnwass::transport::TransportPlan,
    nu: &vnwass::algebra::State,
    k: &GeneratorSet,
) -> f64 {
    let n = nu.dim();
    let dim = 2 * n * n;
    let unit = CMatrix::identity(n);
    let elem = |idx: usize| -> (CMatrix, CMatrix) {
        if idx < n * n {
            (CMatrix::unit(n, idx / n, idx % n), unit.clone())
        } else {
            let t = idx - n * n;
            (unit.clone(), CMatrix::unit(n, t / n, t % n))
        }
    };
    let gram = CMatrix::from_fn(dim, dim, |alpha, beta| {
        let (a1, m1) = elem(alpha);
        let (a2, m2) = elem(beta);
        plan.evaluate(&a1.adjoint().matmul(&a2), &m2.matmul(&m1.adjoint()))
    });
    let sqrt_rho = matrix_power(nu.density(), 0.5).unwrap();
    let inv_sqrt = matrix_power(nu.density(), -0.5).unwrap();
    let mut total = 0.0;
    for kl in k.iter() {
        let m = inv_sqrt.matmul(kl).matmul(&sqrt_rho);
        let mut coeff = vec![ZERO; dim];
        for (idx, &v) in kl.data().iter().enumerate() {
            coeff[idx] = v;
        }
        for (idx, &v) in m.data().iter().enumerate() {
            coeff[n * n + idx] = -v;
        }
        let gc = gram.mul_vec(&coeff);
        let term: C64 = coeff.iter().zip(gc.iter()).map(|(c, g)| c.conj() * g).sum();
        total += term.re;
    }
    total
}

#[test]
fn criterion_07_indiscernibles() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut min_w2 = f64::INFINITY;
    let mut checked = 0;
    while checked < 50 {
        let mu = random_faithful_state_with(&alg, &mut rng);
        let nu = random_faithful_state_with(&alg, &mut rng);
        if mu.trace_distance(&nu).unwrap() < 0.05 {
            continue;
        }
        checked += 1;
        let res = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        min_w2 = min_w2.min(res.w2);
    }
    criterion(
        7,
        "indiscernibles with generation",
        min_w2 >= 1e-4,
        &format!(
            "min W₂ = {min_w2:.2e} over 50 pairs at trace distance ≥ 0.05, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_08_pseudometric_counterexample() {
    let start = Instant::now();
    let rep = pseudometric_demo(&opts()).unwrap();
    criterion(
        8,
        "pseudometric counterexample",
        rep.claim_reproduced
            && rep.w2_upper_bound <= 1e-6
            && rep.trace_distance > 0.2
            && rep.w2_generating >= 1e-2,
        &format!(
            "W₂ ≤ {:.2e} at trace distance {:.3}; generating set restores W₂ = {:.4}; \
             subalgebra dim {}/{}; {:.1?}",
            rep.w2_upper_bound,
            rep.trace_distance,
            rep.w2_generating,
            rep.subalgebra_dim,
            rep.algebra_dim,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_09_qubit_grid_oracle() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut max_gap: f64 = 0.0;
    for inst in 0..20 {
        let (p1, q1) = if inst == 0 {
            (0.7, 0.3) // anti-matched sectors: q = swap(p)
        } else {
            loop {
                let a = rng.gen_range(0.1..0.9);
                let b = rng.gen_range(0.1..0.9);
                if (2.0 * a - 1.0f64).abs() > 0.05 && (2.0 * b - 1.0f64).abs() > 0.05 {
                    break (a, b);
                }
            }
        };
        let mu = make_state(&alg, CMatrix::diag(&[p1, 1.0 - p1])).unwrap();
        let nu = make_state(&alg, CMatrix::diag(&[q1, 1.0 - q1])).unwrap();
        let sdp = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        let grid = qubit_grid_oracle(&mu, &nu, &k, 200).unwrap();
        max_gap = max_gap.max((grid - sdp.w2 * sdp.w2).abs());
    }
    criterion(
        9,
        "qubit grid oracle agreement",
        max_gap <= 2e-3,
        &format!(
            "max |SDP − grid| = {max_gap:.2e} over 20 diagonal instances, {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_10_mode_monotonicity_and_asymmetric_suite() {
    let start = Instant::now();
    let alg = FdAlgebra::full(2);
    let k = GeneratorSet::paulis(&alg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut max_excess: f64 = f64::NEG_INFINITY;
    for _ in 0..20 {
        let mu = random_faithful_state_with(&alg, &mut rng);
        let nu = random_faithful_state_with(&alg, &mut rng);
        let modular = solve_w2(&mu, &nu, &k, Mode::Modular, &opts()).unwrap();
        let all = solve_w2(&mu, &nu, &k, Mode::All, &opts()).unwrap();
        max_excess = max_excess.max(all.w2 - modular.w2);
    }
    let suite = asymmetric_suite(&alg, &k, 10, 10101, &SuiteOptions::default()).unwrap();
    criterion(
        10,
        "mode monotonicity + asymmetric suite",
        max_excess <= 1e-6 && suite.passed(),
        &format!(
            "max (d − W₂) = {max_excess:.2e} over 20 pairs; asymmetric suite: \
             {} violations, max symmetry gap {:.2e} (recorded), max triangle violation {:.2e}, \
             max self-distance {:.2e}; {:.1?}",
            suite.violations,
            suite.max_symmetry_gap,
            suite.max_triangle_violation,
            suite.max_self_distance,
            start.elapsed()
        ),
    );
}
