//! The metric-axiom harness and the counterexample/extension demos,
//! packaged as reproducible, seed-replayable suites.
//!
//! Random modular transport plans are drawn by pinching a Wishart-type
//! u.c.p. channel onto the covariant sector subspace, projecting onto the
//! affine feasible set, and repairing positivity by convex mixing toward
//! the strictly feasible collapse channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    generated_subalgebra, make_state, random_faithful_state_with, support_compress, FdAlgebra,
    GeneratorSet, State,
};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, kron, CMatrix};
use crate::modular::{covariance_residual, kms_dual, sector_pinch_choi, DEFAULT_T_SAMPLES};
use crate::solver::{
    assemble_mixed, constraint_rows, solve_problem, solve_w2, Mode, OrthoRows, SolverOptions, Svec,
    W2Result,
};
use crate::transport::{
    cost_channel, multiplicative_domain_check, random_ucp_channel, slice_expectation, Channel,
};

/// Harness options shared by the suites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub solver: SolverOptions,
    /// Axiom tolerance: ten times the solver's objective budget.
    pub tolerance: f64,
    /// Allow generator sets that do not generate the algebra (for
    /// counterexample studies); the indiscernibles assertion is skipped.
    pub allow_non_generating: bool,
    /// Contrapositive indiscernibles thresholds: states at trace distance
    /// at least `trace_floor` must be at least `w2_floor` apart. These are
    /// empirical harness settings, recorded in every report.
    pub indiscernible_trace_floor: f64,
    pub indiscernible_w2_floor: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tolerance: 1e-5,
            allow_non_generating: false,
            indiscernible_trace_floor: 0.05,
            indiscernible_w2_floor: 1e-4,
        }
    }
}

/// One metric-axiom trial over a random state triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub w2_mu_nu: f64,
    pub w2_nu_mu: f64,
    pub w2_mu_xi: f64,
    pub w2_nu_xi: f64,
    pub w2_self: f64,
    pub symmetry_gap: f64,
    pub triangle_slack: f64,
    pub trace_distance_mu_nu: f64,
    pub identity_residual_self: f64,
    pub converged: bool,
}

/// Replayable axiom-suite report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub suite: String,
    pub mode: Mode,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub indiscernible_trace_floor: f64,
    pub indiscernible_w2_floor: f64,
    pub max_symmetry_gap: f64,
    pub max_triangle_violation: f64,
    pub max_self_distance: f64,
    /// (w2, trace distance, identity residual of the self-distance channel)
    pub indiscernibles: Vec<(f64, f64, f64)>,
    pub failed_trials: Vec<usize>,
    pub violations: usize,
    pub records: Vec<TrialRecord>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.failed_trials.is_empty()
    }
}

fn run_axiom_trials(
    algebra: &FdAlgebra,
    k: &GeneratorSet,
    trials: usize,
    seed: u64,
    opts: &SuiteOptions,
    mode: Mode,
    suite: &str,
) -> Result<AxiomReport> {
    if !opts.allow_non_generating && !k.generates()? {
        let basis = generated_subalgebra(algebra, k, 2 * algebra.total_dim())?;
        return Err(Error::NotGenerating {
            found: basis.len(),
            expected: algebra.algebra_dim(),
        });
    }
    let assert_symmetry = mode == Mode::Modular;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        suite: suite.to_string(),
        mode,
        trials,
        seed,
        tolerance: opts.tolerance,
        indiscernible_trace_floor: opts.indiscernible_trace_floor,
        indiscernible_w2_floor: opts.indiscernible_w2_floor,
        max_symmetry_gap: 0.0,
        max_triangle_violation: 0.0,
        max_self_distance: 0.0,
        indiscernibles: Vec::new(),
        failed_trials: Vec::new(),
        violations: 0,
        records: Vec::new(),
    };
    for trial in 0..trials {
        let mu = random_faithful_state_with(algebra, &mut rng);
        let nu = random_faithful_state_with(algebra, &mut rng);
        let xi = random_faithful_state_with(algebra, &mut rng);
        let solve = |a: &State, b: &State| solve_w2(a, b, k, mode, &opts.solver);
        let outcome = (|| -> Result<TrialRecord> {
            let mu_nu = solve(&mu, &nu)?;
            let nu_mu = solve(&nu, &mu)?;
            let mu_xi = solve(&mu, &xi)?;
            let nu_xi = solve(&nu, &xi)?;
            let self_res = solve(&mu, &mu)?;
            let md = multiplicative_domain_check(&self_res.optimal_channel, k, &mu, 3)?;
            Ok(TrialRecord {
                trial,
                w2_mu_nu: mu_nu.w2,
                w2_nu_mu: nu_mu.w2,
                w2_mu_xi: mu_xi.w2,
                w2_nu_xi: nu_xi.w2,
                w2_self: self_res.w2,
                symmetry_gap: (mu_nu.w2 - nu_mu.w2).abs(),
                triangle_slack: mu_xi.w2 - mu_nu.w2 - nu_xi.w2,
                trace_distance_mu_nu: mu.trace_distance(&nu)?,
                identity_residual_self: md.identity_residual,
                converged: true,
            })
        })();
        match outcome {
            Ok(rec) => {
                report.max_symmetry_gap = report.max_symmetry_gap.max(rec.symmetry_gap);
                report.max_triangle_violation = report
                    .max_triangle_violation
                    .max(rec.triangle_slack.max(0.0));
                report.max_self_distance = report.max_self_distance.max(rec.w2_self);
                if assert_symmetry && rec.symmetry_gap > opts.tolerance {
                    report.violations += 1;
                }
                if rec.triangle_slack > opts.tolerance {
                    report.violations += 1;
                }
                if rec.w2_self > opts.tolerance {
                    report.violations += 1;
                }
                if !opts.allow_non_generating
                    && rec.trace_distance_mu_nu >= opts.indiscernible_trace_floor
                {
                    report.indiscernibles.push((
                        rec.w2_mu_nu,
                        rec.trace_distance_mu_nu,
                        rec.identity_residual_self,
                    ));
                    if rec.w2_mu_nu < opts.indiscernible_w2_floor {
                        report.violations += 1;
                    }
                }
                report.records.push(rec);
            }
            Err(_) => {
                report.failed_trials.push(trial);
                report.records.push(TrialRecord {
                    trial,
                    w2_mu_nu: f64::NAN,
                    w2_nu_mu: f64::NAN,
                    w2_mu_xi: f64::NAN,
                    w2_nu_xi: f64::NAN,
                    w2_self: f64::NAN,
                    symmetry_gap: f64::NAN,
                    triangle_slack: f64::NAN,
                    trace_distance_mu_nu: f64::NAN,
                    identity_residual_self: f64::NAN,
                    converged: false,
                });
            }
        }
    }
    Ok(report)
}

/// Metric-axiom suite over modular transport plans: symmetry, triangle
/// inequality, self-distance, and the contrapositive indiscernibles check.
pub fn axiom_suite(
    algebra: &FdAlgebra,
    k: &GeneratorSet,
    trials: usize,
    seed: u64,
    opts: &SuiteOptions,
) -> Result<AxiomReport> {
    run_axiom_trials(algebra, k, trials, seed, opts, Mode::Modular, "axioms")
}

/// The asymmetric-distance suite: all transport plans admitted; triangle,
/// self-distance and indiscernibles are asserted, the symmetry gap is
/// recorded as data only (whether d must be symmetric is open).
pub fn asymmetric_suite(
    algebra: &FdAlgebra,
    k: &GeneratorSet,
    trials: usize,
    seed: u64,
    opts: &SuiteOptions,
) -> Result<AxiomReport> {
    run_axiom_trials(algebra, k, trials, seed, opts, Mode::All, "asymmetric")
}

/// Repairs a Choi matrix into a strictly feasible channel for (μ, ν):
/// project onto the affine rows of the given mode, then mix toward the
/// collapse channel until comfortably inside the PSD cone.
fn repair_to_feasible(choi0: &CMatrix, mu: &State, nu: &State, mode: Mode) -> Result<Channel> {
    let rows = constraint_rows(mu, nu, mode)?;
    let d = mu.dim() * nu.dim();
    let svec = Svec::new(d);
    let raw: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|row| (svec.packed(&row.coeff), row.rhs))
        .collect();
    let ortho = OrthoRows::build(&raw)?;
    let mut v = svec.packed(&choi0.hermitize());
    ortho.project(&mut v);
    let collapse = Channel::collapse(mu, nu.algebra());
    let cv = svec.packed(collapse.choi());
    for step in 0..=60 {
        let theta = step as f64 / 60.0;
        let mixed: Vec<f64> = v
            .iter()
            .zip(cv.iter())
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        let cand = svec.unpack(&mixed);
        if herm_eig(&cand)?.min_eigenvalue() >= 1e-7 {
            return Channel::from_choi_tol(mu.algebra(), nu.algebra(), cand, 1e-7);
        }
    }
    // θ = 1 is the collapse channel itself, strictly positive definite
    Channel::from_choi_tol(mu.algebra(), nu.algebra(), collapse.choi().clone(), 1e-7)
}

/// Random u.c.p. channel with matched marginals ν∘E = μ.
pub fn random_matched_channel(mu: &State, nu: &State, rng: &mut ChaCha8Rng) -> Result<Channel> {
    let raw = random_ucp_channel(mu.algebra(), nu.algebra(), rng)?;
    repair_to_feasible(raw.choi(), mu, nu, Mode::All)
}

/// Random modular transport plan: sector-pinched, affine-projected, mixed
/// toward the collapse channel until strictly feasible.
pub fn random_covariant_channel(mu: &State, nu: &State, rng: &mut ChaCha8Rng) -> Result<Channel> {
    let raw = random_ucp_channel(mu.algebra(), nu.algebra(), rng)?;
    let pinched = sector_pinch_choi(raw.choi(), mu, nu)?;
    repair_to_feasible(&pinched, mu, nu, Mode::Modular)
}

/// KMS-symmetry check (per-generator): for random modular transport plans,
/// the l-th cost term of (μ, ν, E) equals the l-th cost term of
/// (ν, μ, E^σ). Returns the max gap.
pub fn kms_symmetry_check(
    mu: &State,
    nu: &State,
    k: &GeneratorSet,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    for _ in 0..trials {
        let e = random_covariant_channel(mu, nu, &mut rng)?;
        let dual = kms_dual(&e, mu, nu)?;
        let forward = cost_channel(&e, mu, nu, k)?;
        let backward = cost_channel(&dual, nu, mu, k)?;
        for l in 0..k.len() {
            max_gap = max_gap.max((forward.per_generator[l] - backward.per_generator[l]).abs());
        }
    }
    Ok(max_gap)
}

/// Report of the solver-free subadditivity suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub trials: usize,
    pub seed: u64,
    pub max_violation: f64,
}

/// Checks I(E₂∘E₁)^{1/2} ≤ I(E₁)^{1/2} + I(E₂)^{1/2} on random chains
/// μ→ν→ξ of matched channels; no solver involved.
pub fn subadditivity_suite(
    algebra: &FdAlgebra,
    k: &GeneratorSet,
    trials: usize,
    seed: u64,
) -> Result<SubadditivityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation: f64 = 0.0;
    for trial in 0..trials {
        let mu = random_faithful_state_with(algebra, &mut rng);
        let nu = random_faithful_state_with(algebra, &mut rng);
        let xi = random_faithful_state_with(algebra, &mut rng);
        let e1 = if trial % 2 == 0 {
            random_matched_channel(&mu, &nu, &mut rng)?
        } else {
            random_covariant_channel(&mu, &nu, &mut rng)?
        };
        let e2 = match trial % 3 {
            0 => random_matched_channel(&nu, &xi, &mut rng)?,
            1 => random_covariant_channel(&nu, &xi, &mut rng)?,
            _ => Channel::collapse(&nu, algebra),
        };
        let comp = crate::transport::compose(&e1, &e2)?;
        let i1 = cost_channel(&e1, &mu, &nu, k)?.total.max(0.0).sqrt();
        let i2 = cost_channel(&e2, &nu, &xi, k)?.total.max(0.0).sqrt();
        let ic = cost_channel(&comp, &mu, &xi, k)?.total.max(0.0).sqrt();
        max_violation = max_violation.max(ic - i1 - i2);
    }
    Ok(SubadditivityReport {
        trials,
        seed,
        max_violation: max_violation.max(0.0),
    })
}

/// Quantitative findings of the tensor-product pseudometric counterexample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudometricReport {
    /// √I of the slice-expectation witness plan: an upper bound for W₂.
    pub w2_upper_bound: f64,
    pub witness_cost: f64,
    pub witness_covariance_residual: f64,
    pub witness_marginal_residual: f64,
    pub trace_distance: f64,
    /// Dimension of the subalgebra generated by the chosen generators.
    pub subalgebra_dim: usize,
    pub algebra_dim: usize,
    /// W₂ with the generating (full Hermitian basis) generator set.
    pub w2_generating: f64,
    /// Whether the counterexample reproduced: zero distance at positive
    /// trace distance, separation restored by a generating set.
    pub claim_reproduced: bool,
}

/// The fixed M₂⊗M₂ counterexample: λ = diag(0.6,0.4), ζ = diag(0.8,0.2),
/// η = diag(0.3,0.7), generators the Hermitian basis of M⊗1.
pub fn pseudometric_demo(opts: &SolverOptions) -> Result<PseudometricReport> {
    let m_factor = FdAlgebra::full(2);
    let lambda = make_state(&m_factor, CMatrix::diag(&[0.6, 0.4]))?;
    let zeta = make_state(&m_factor, CMatrix::diag(&[0.8, 0.2]))?;
    let eta = make_state(&m_factor, CMatrix::diag(&[0.3, 0.7]))?;
    pseudometric_demo_with(&lambda, &zeta, &eta, opts)
}

/// Parametrized version of the demo; ζ = η degenerates gracefully to a
/// statement about equal states.
pub fn pseudometric_demo_with(
    lambda: &State,
    zeta: &State,
    eta: &State,
    opts: &SolverOptions,
) -> Result<PseudometricReport> {
    let d1 = lambda.dim();
    let d2 = zeta.dim();
    let algebra = FdAlgebra::tensor_product(d1, d2)?;
    let mu = make_state(&algebra, kron(lambda.density(), zeta.density()))?;
    let nu = make_state(&algebra, kron(lambda.density(), eta.density()))?;

    let m_basis = GeneratorSet::hermitian_basis(lambda.algebra())?;
    let lifted: Vec<CMatrix> = m_basis
        .iter()
        .map(|h| kron(h, &CMatrix::identity(d2)))
        .collect();
    let k = GeneratorSet::new(&algebra, lifted)?;

    let witness = slice_expectation(&algebra, zeta)?;
    let witness_marginal_residual = witness.marginal_residual(&mu, &nu);
    let witness_covariance_residual = covariance_residual(&witness, &mu, &nu, &DEFAULT_T_SAMPLES)?;
    let witness_cost = cost_channel(&witness, &mu, &nu, &k)?.total;
    let w2_upper_bound = witness_cost.max(0.0).sqrt();
    let trace_distance = mu.trace_distance(&nu)?;
    let subalgebra_dim = generated_subalgebra(&algebra, &k, 8)?.len();

    let k_full = GeneratorSet::hermitian_basis(&algebra)?;
    let w2_generating = solve_w2(&mu, &nu, &k_full, Mode::Modular, opts)?.w2;

    let states_differ = trace_distance > 1e-12;
    let claim_reproduced = if states_differ {
        witness_marginal_residual <= 1e-10
            && witness_covariance_residual <= 1e-10
            && witness_cost <= 1e-12
            && subalgebra_dim < algebra.algebra_dim()
            && w2_generating > 1e-2
    } else {
        w2_upper_bound <= 1e-6 && w2_generating <= 1e-3
    };

    Ok(PseudometricReport {
        w2_upper_bound,
        witness_cost,
        witness_covariance_residual,
        witness_marginal_residual,
        trace_distance,
        subalgebra_dim,
        algebra_dim: algebra.algebra_dim(),
        w2_generating,
        claim_reproduced,
    })
}

/// The distance ρ on arbitrary normal states: support-compress both states,
/// form the mixed cost with the two compressed generator tuples, and solve
/// the compressed program over modular plans. Reduces to [`solve_w2`] when
/// both states are faithful.
pub fn nonfaithful_distance(
    zeta: &State,
    eta: &State,
    k: &GeneratorSet,
    opts: &SolverOptions,
) -> Result<W2Result> {
    if zeta.algebra() != eta.algebra() || k.algebra() != zeta.algebra() {
        return Err(Error::Dimension(
            "states and generators must share one algebra".into(),
        ));
    }
    let left = support_compress(zeta, k)?;
    let right = support_compress(eta, k)?;
    let problem = assemble_mixed(
        &left.state,
        &right.state,
        &left.generators,
        &right.generators,
        Mode::Modular,
    )?;
    solve_problem(
        &problem,
        &left.state,
        &right.state,
        &left.generators,
        &right.generators,
        opts,
    )
}
