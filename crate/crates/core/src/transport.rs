//! Transport plans and their channels: Choi–Jamiolkowski duality, marginals,
//! the transport cost in channel form and in GNS form, plan composition, and
//! the multiplicative-domain diagnostic.
//!
//! Conventions, fixed once for the whole crate:
//! - vec(·) is row-major, so vec(A X B) = (A ⊗ Bᵀ)·vec(X);
//! - the Choi matrix of E: A → B is C = Σ_{ij} e_{ij} ⊗ E(e_{ij}) on the
//!   containing full algebras, i.e. C[(i,k),(j,l)] = E(e_{ij})[k,l];
//! - unitality reads Tr_first(C) = 1 and state preservation ν∘E = μ reads
//!   Tr_second((1⊗ρ_ν)·C) = ρ_μᵀ (both unit-tested against direct channel
//!   evaluation);
//! - B′ is realized as right multiplications R(m) in the standard form, with
//!   ν′(R(m)) = Tr(ρ_ν m).

use serde::{Deserialize, Serialize};

use crate::algebra::{FdAlgebra, GeneratorSet, State};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, matrix_power, CMatrix, Leg, C64, ZERO};

/// Complete-positivity slack: the Choi matrix may dip this far below the
/// PSD cone before a channel is rejected.
pub const CP_TOL: f64 = 1e-9;

/// Unitality tolerance for constructed channels.
pub const UNITALITY_TOL: f64 = 1e-9;

/// Marginal tolerance accepted by the cost evaluators. Looser than the
/// construction tolerances so that converged solver iterates (feasible to
/// ~1e-8) can be re-validated through the same code path.
pub const COST_MARGINAL_TOL: f64 = 1e-6;

/// A u.c.p. map E: A → B stored as both a superoperator on the containing
/// matrix algebras (pre-composed with the block pinching of A) and the
/// corresponding Choi matrix.
#[derive(Debug, Clone)]
pub struct Channel {
    source: FdAlgebra,
    target: FdAlgebra,
    action: CMatrix,
    choi: CMatrix,
}

impl Channel {
    /// Builds a channel from its superoperator, validating complete
    /// positivity, unitality and block support at the given tolerance.
    pub fn from_action_tol(
        source: &FdAlgebra,
        target: &FdAlgebra,
        action: CMatrix,
        tol: f64,
    ) -> Result<Self> {
        let (na, nb) = (source.total_dim(), target.total_dim());
        if action.rows() != nb * nb || action.cols() != na * na {
            return Err(Error::Dimension(format!(
                "superoperator must be {}x{}, got {}x{}",
                nb * nb,
                na * na,
                action.rows(),
                action.cols()
            )));
        }
        let choi = choi_from_action(&action, na, nb);
        let ch = Self {
            source: source.clone(),
            target: target.clone(),
            action,
            choi,
        };
        ch.validate(tol)?;
        Ok(ch)
    }

    pub fn from_action(source: &FdAlgebra, target: &FdAlgebra, action: CMatrix) -> Result<Self> {
        Self::from_action_tol(source, target, action, CP_TOL)
    }

    pub fn from_choi_tol(
        source: &FdAlgebra,
        target: &FdAlgebra,
        choi: CMatrix,
        tol: f64,
    ) -> Result<Self> {
        let (na, nb) = (source.total_dim(), target.total_dim());
        let d = na * nb;
        if choi.rows() != d || choi.cols() != d {
            return Err(Error::Dimension(format!(
                "Choi matrix must be {}x{}, got {}x{}",
                d,
                d,
                choi.rows(),
                choi.cols()
            )));
        }
        let action = action_from_choi(&choi, na, nb);
        let ch = Self {
            source: source.clone(),
            target: target.clone(),
            action,
            choi,
        };
        ch.validate(tol)?;
        Ok(ch)
    }

    pub fn from_choi(source: &FdAlgebra, target: &FdAlgebra, choi: CMatrix) -> Result<Self> {
        Self::from_choi_tol(source, target, choi, CP_TOL)
    }

    /// The identity channel of an algebra: the block-diagonal pinching of
    /// the containing matrix algebra.
    pub fn identity(algebra: &FdAlgebra) -> Self {
        let n = algebra.total_dim();
        let mut action = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                if algebra.in_block(i, j) {
                    let idx = i * n + j;
                    action[(idx, idx)] = crate::linalg::ONE;
                }
            }
        }
        let choi = choi_from_action(&action, n, n);
        Self {
            source: algebra.clone(),
            target: algebra.clone(),
            action,
            choi,
        }
    }

    /// The state-collapse channel a ↦ μ(a)·1 into the target algebra; a
    /// strictly feasible transport plan for any target state.
    pub fn collapse(mu: &State, target: &FdAlgebra) -> Self {
        let na = mu.dim();
        let nb = target.total_dim();
        let mut action = CMatrix::zeros(nb * nb, na * na);
        for i in 0..na {
            for j in 0..na {
                let val = mu.density()[(j, i)]; // μ(e_ij) = ρ_ji
                if val == ZERO {
                    continue;
                }
                for k in 0..nb {
                    action[(k * nb + k, i * na + j)] = val;
                }
            }
        }
        let choi = choi_from_action(&action, na, nb);
        Self {
            source: mu.algebra().clone(),
            target: target.clone(),
            action,
            choi,
        }
    }

    pub fn source(&self) -> &FdAlgebra {
        &self.source
    }

    pub fn target(&self) -> &FdAlgebra {
        &self.target
    }

    pub fn action(&self) -> &CMatrix {
        &self.action
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// E(a), for any a on the containing source algebra (the block pinching
    /// is part of the action).
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let na = self.source.total_dim();
        let nb = self.target.total_dim();
        assert_eq!((a.rows(), a.cols()), (na, na), "apply dimension mismatch");
        let out = self.action.mul_vec(a.data());
        CMatrix::from_vec_square(nb, out).expect("square output")
    }

    /// ‖E(1) − 1‖_F
    pub fn unitality_residual(&self) -> f64 {
        let nb = self.target.total_dim();
        self.apply(&CMatrix::identity(self.source.total_dim()))
            .dist_fro(&CMatrix::identity(nb))
    }

    /// Smallest eigenvalue of the Choi matrix (negative = CP violation).
    pub fn cp_slack(&self) -> Result<f64> {
        Ok(herm_eig(&self.choi)?.min_eigenvalue())
    }

    /// ‖ν∘E − μ‖ as the Frobenius norm of the matrix of marginal defects on
    /// the source basis.
    pub fn marginal_residual(&self, mu: &State, nu: &State) -> f64 {
        let na = self.source.total_dim();
        let mut defect = CMatrix::zeros(na, na);
        for i in 0..na {
            for j in 0..na {
                if !self.source.in_block(i, j) {
                    continue;
                }
                let eij = CMatrix::unit(na, i, j);
                defect[(i, j)] = nu.expect(&self.apply(&eij)) - mu.expect(&eij);
            }
        }
        defect.norm_fro()
    }

    /// Superoperator distance ‖E₁ − E₂‖_F.
    pub fn dist(&self, other: &Channel) -> f64 {
        self.action.dist_fro(&other.action)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        // output support: E(a) must land in the target algebra
        let nb = self.target.total_dim();
        let na = self.source.total_dim();
        let mut support_res: f64 = 0.0;
        for i in 0..na {
            for j in 0..na {
                if !self.source.in_block(i, j) {
                    continue;
                }
                let out = self.apply(&CMatrix::unit(na, i, j));
                support_res = support_res.max(self.target.off_block_residual(&out));
            }
        }
        if support_res > tol.max(1e-9) {
            return Err(Error::InvalidChannel(format!(
                "output leaves the target algebra (residual {support_res:.3e})"
            )));
        }
        let unit = self.unitality_residual() / (1.0 + (nb as f64).sqrt());
        if unit > tol.max(UNITALITY_TOL) {
            return Err(Error::InvalidChannel(format!(
                "channel is not unital (residual {unit:.3e})"
            )));
        }
        let slack = self.cp_slack()?;
        if slack < -tol.max(CP_TOL) {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix is not PSD (min eigenvalue {slack:.3e})"
            )));
        }
        Ok(())
    }
}

/// C[(i,k),(j,l)] = E(e_ij)[k,l]
pub(crate) fn choi_from_action(action: &CMatrix, na: usize, nb: usize) -> CMatrix {
    let d = na * nb;
    CMatrix::from_fn(d, d, |r, c| {
        let (i, k) = (r / nb, r % nb);
        let (j, l) = (c / nb, c % nb);
        action[(k * nb + l, i * na + j)]
    })
}

pub(crate) fn action_from_choi(choi: &CMatrix, na: usize, nb: usize) -> CMatrix {
    CMatrix::from_fn(nb * nb, na * na, |r, c| {
        let (k, l) = (r / nb, r % nb);
        let (i, j) = (c / na, c % na);
        choi[(i * nb + k, j * nb + l)]
    })
}

/// Composition of transport plans: compose(E₁: A→B, E₂: B→C) is E₂∘E₁,
/// a channel A→C.
pub fn compose(e1: &Channel, e2: &Channel) -> Result<Channel> {
    if e1.target() != e2.source() {
        return Err(Error::Dimension(
            "compose: middle algebras do not match".into(),
        ));
    }
    let action = e2.action().matmul(e1.action());
    Channel::from_action_tol(e1.source(), e2.target(), action, 10.0 * CP_TOL)
}

/// The conditional expectation of a declared tensor product M⊗N onto M⊗1
/// that slices out the second factor with ζ: x⊗y ↦ ζ(y)·x⊗1.
pub fn slice_expectation(algebra: &FdAlgebra, zeta: &State) -> Result<Channel> {
    let (d1, d2) = algebra.tensor_factors().ok_or(Error::NotTensorProduct)?;
    if zeta.dim() != d2 {
        return Err(Error::Dimension(format!(
            "slicing state must live on the {d2}-dimensional factor, got {}",
            zeta.dim()
        )));
    }
    let n = d1 * d2;
    let rho = zeta.density();
    // E(e_{(i,k),(j,l)}) = ζ(e_kl)·(e_ij ⊗ 1) with ζ(e_kl) = ρ_lk
    let mut action = CMatrix::zeros(n * n, n * n);
    for i in 0..d1 {
        for j in 0..d1 {
            for k in 0..d2 {
                for l in 0..d2 {
                    let val = rho[(l, k)];
                    if val == ZERO {
                        continue;
                    }
                    let col = (i * d2 + k) * n + (j * d2 + l);
                    for m in 0..d2 {
                        let row = (i * d2 + m) * n + (j * d2 + m);
                        action[(row, col)] = val;
                    }
                }
            }
        }
    }
    Channel::from_action(algebra, algebra, action)
}

/// A transport plan ω from μ to ν as the table of values
/// ω(e_ij ⊗ R(e_kl)) on the containing basis of A ⊙ B′.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    source: FdAlgebra,
    target: FdAlgebra,
    table: CMatrix,
}

impl TransportPlan {
    pub fn source(&self) -> &FdAlgebra {
        &self.source
    }

    pub fn target(&self) -> &FdAlgebra {
        &self.target
    }

    pub fn table(&self) -> &CMatrix {
        &self.table
    }

    /// ω(a ⊗ R(m)) by bilinear expansion on the table.
    pub fn evaluate(&self, a: &CMatrix, m: &CMatrix) -> C64 {
        let na = self.source.total_dim();
        let nb = self.target.total_dim();
        assert_eq!((a.rows(), a.cols()), (na, na));
        assert_eq!((m.rows(), m.cols()), (nb, nb));
        let mut acc = ZERO;
        for (row, &aij) in a.data().iter().enumerate() {
            if aij == ZERO {
                continue;
            }
            for (col, &mkl) in m.data().iter().enumerate() {
                if mkl == ZERO {
                    continue;
                }
                acc += aij * mkl * self.table[(row, col)];
            }
        }
        acc
    }

    /// ω(a ⊗ 1) — must equal μ(a).
    pub fn left_marginal(&self, a: &CMatrix) -> C64 {
        self.evaluate(a, &CMatrix::identity(self.target.total_dim()))
    }

    /// ω(1 ⊗ R(m)) — must equal ν′(R(m)) = Tr(ρ_ν m).
    pub fn right_marginal(&self, m: &CMatrix) -> C64 {
        self.evaluate(&CMatrix::identity(self.source.total_dim()), m)
    }

    /// Max marginal defect against the two prescribed states.
    pub fn marginal_residual(&self, mu: &State, nu: &State) -> f64 {
        let na = self.source.total_dim();
        let nb = self.target.total_dim();
        let mut res: f64 = 0.0;
        for (i, j) in self.source.basis_indices() {
            let a = CMatrix::unit(na, i, j);
            res = res.max((self.left_marginal(&a) - mu.expect(&a)).norm());
        }
        for (k, l) in self.target.basis_indices() {
            let m = CMatrix::unit(nb, k, l);
            let expected = nu.density().matmul(&m).trace();
            res = res.max((self.right_marginal(&m) - expected).norm());
        }
        res
    }
}

/// The plan ω(a⊗b′) = δ_ν(E(a)⊗b′) of a channel: the Choi–Jamiolkowski
/// correspondence in the direction channel → plan.
pub fn channel_to_plan(e: &Channel, nu: &State) -> Result<TransportPlan> {
    if !nu.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: nu.eig().min_eigenvalue(),
        });
    }
    if nu.algebra() != e.target() {
        return Err(Error::Dimension(
            "target state lives on a different algebra".into(),
        ));
    }
    let na = e.source().total_dim();
    let nb = e.target().total_dim();
    let sqrt_rho = matrix_power(nu.density(), 0.5)?;
    let mut table = CMatrix::zeros(na * na, nb * nb);
    for i in 0..na {
        for j in 0..na {
            let x = sqrt_rho
                .matmul(&e.apply(&CMatrix::unit(na, i, j)))
                .matmul(&sqrt_rho);
            // ω(e_ij ⊗ R(e_kl)) = Tr(√ρ E(e_ij) √ρ e_kl) = X_lk
            for k in 0..nb {
                for l in 0..nb {
                    table[(i * na + j, k * nb + l)] = x[(l, k)];
                }
            }
        }
    }
    Ok(TransportPlan {
        source: e.source().clone(),
        target: e.target().clone(),
        table,
    })
}

/// The unique channel of a plan: inverse direction of the correspondence.
pub fn plan_to_channel(plan: &TransportPlan, nu: &State) -> Result<Channel> {
    if !nu.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: nu.eig().min_eigenvalue(),
        });
    }
    let na = plan.source.total_dim();
    let nb = plan.target.total_dim();
    let inv_sqrt = matrix_power(nu.density(), -0.5)?;
    let mut action = CMatrix::zeros(nb * nb, na * na);
    for i in 0..na {
        for j in 0..na {
            let y = CMatrix::from_fn(nb, nb, |l, k| plan.table[(i * na + j, k * nb + l)]);
            let out = inv_sqrt.matmul(&y).matmul(&inv_sqrt);
            for r in 0..nb * nb {
                action[(r, i * na + j)] = out.data()[r];
            }
        }
    }
    Channel::from_action_tol(&plan.source, &plan.target, action, 10.0 * CP_TOL)
}

/// Which formula produced a cost report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostPath {
    #[serde(rename = "channel-form")]
    ChannelForm,
    #[serde(rename = "gns-form")]
    GnsForm,
}

/// Transport cost split per generator; total = Σ per_generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub total: f64,
    pub per_generator: Vec<f64>,
    pub path: CostPath,
}

/// Cost of transport in channel form:
/// I(E) = Σ_l [μ(k_l*k_l) + ν(k_l*k_l) − ν(E(k_l)*k_l) − ν(k_l*E(k_l))].
pub fn cost_channel(e: &Channel, mu: &State, nu: &State, k: &GeneratorSet) -> Result<CostReport> {
    let res = e.marginal_residual(mu, nu);
    if res > COST_MARGINAL_TOL {
        return Err(Error::MarginalMismatch { residual: res });
    }
    let mut per_generator = Vec::with_capacity(k.len());
    for kl in k.iter() {
        let ek = e.apply(kl);
        let kk = kl.adjoint().matmul(kl);
        let term = mu.expect(&kk).re + nu.expect(&kk).re
            - nu.expect(&ek.adjoint().matmul(kl)).re
            - nu.expect(&kl.adjoint().matmul(&ek)).re;
        per_generator.push(term);
    }
    Ok(CostReport {
        total: per_generator.iter().sum(),
        per_generator,
        path: CostPath::ChannelForm,
    })
}

/// Cost of transport in GNS form, evaluated on the plan table alone. The
/// commutant vector for k is the right multiplication by
/// m = ρ_ν^{-1/2} k ρ_ν^{1/2}, and each term is
/// ω(k*k⊗1) + ω(1⊗R(m m*)) − ω(k*⊗R(m)) − ω(k⊗R(m*)).
pub fn cost_plan(
    plan: &TransportPlan,
    mu: &State,
    nu: &State,
    k: &GeneratorSet,
) -> Result<CostReport> {
    let res = plan.marginal_residual(mu, nu);
    if res > COST_MARGINAL_TOL {
        return Err(Error::MarginalMismatch { residual: res });
    }
    let sqrt_rho = matrix_power(nu.density(), 0.5)?;
    let inv_sqrt_rho = matrix_power(nu.density(), -0.5)?;
    let na = plan.source.total_dim();
    let mut per_generator = Vec::with_capacity(k.len());
    for kl in k.iter() {
        let m = inv_sqrt_rho.matmul(kl).matmul(&sqrt_rho);
        let m_adj = m.adjoint();
        let kk = kl.adjoint().matmul(kl);
        let term = plan.left_marginal(&kk) + plan.right_marginal(&m.matmul(&m_adj))
            - plan.evaluate(&kl.adjoint(), &m)
            - plan.evaluate(kl, &m_adj);
        debug_assert!(term.im.abs() <= 1e-9 * (1.0 + term.re.abs()));
        per_generator.push(term.re);
    }
    let _ = na;
    Ok(CostReport {
        total: per_generator.iter().sum(),
        per_generator,
        path: CostPath::GnsForm,
    })
}

/// Vectorization of the channel-form cost for the conic solver:
/// I(E) = c₀ − ⟨C(E), M⟩ with ⟨·,·⟩ = Tr(·ᵀ... the Hermitian trace pairing,
/// M = Σ_l (S_l + S_l†) for S_l = k_lᵀ ⊗ (ρ_ν k_l*), and
/// c₀ = Σ_l [μ(k_l*k_l) + ν(k_l*k_l)].
pub fn objective_matrix(mu: &State, nu: &State, k: &GeneratorSet) -> Result<(CMatrix, f64)> {
    objective_matrix_mixed(mu, nu, k, k)
}

/// Mixed-cost variant pairing source generators with target generators;
/// the two lists must have equal length. The plain cost is the diagonal
/// case k_source = k_target.
pub fn objective_matrix_mixed(
    mu: &State,
    nu: &State,
    k_source: &GeneratorSet,
    k_target: &GeneratorSet,
) -> Result<(CMatrix, f64)> {
    if k_source.len() != k_target.len() {
        return Err(Error::InvalidGenerators(
            "mixed cost needs equally many source and target generators".into(),
        ));
    }
    if !nu.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: nu.eig().min_eigenvalue(),
        });
    }
    let d = mu.dim() * nu.dim();
    let mut m_total = CMatrix::zeros(d, d);
    let mut c0 = 0.0;
    for l in 0..k_source.len() {
        let ks = k_source.get(l);
        let kt = k_target.get(l);
        let s = crate::linalg::kron(&ks.transpose(), &nu.density().matmul(&kt.adjoint()));
        m_total = m_total.add(&s).add(&s.adjoint());
        c0 += mu.expect(&ks.adjoint().matmul(ks)).re + nu.expect(&kt.adjoint().matmul(kt)).re;
    }
    Ok((m_total, c0))
}

/// Report of the multiplicative-domain diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicativeDomainReport {
    /// Whether E fixes every generator and is multiplicative on them.
    pub fixed: bool,
    /// Linear dimension of the subalgebra generated by the generators.
    pub domain_dim: usize,
    /// Max GNS-norm residual √ν(|E(w)−w|²) over words w up to the word cap.
    pub identity_residual: f64,
    /// Max ‖E(k*k) − E(k)*E(k)‖_F over generators.
    pub multiplicativity_residual: f64,
}

/// Checks whether the generators sit in the multiplicative domain of E and
/// are fixed by it; if so, E is the identity on every generator word.
pub fn multiplicative_domain_check(
    e: &Channel,
    k: &GeneratorSet,
    nu: &State,
    word_len: usize,
) -> Result<MultiplicativeDomainReport> {
    let gns_norm = |x: &CMatrix| -> f64 { nu.expect(&x.adjoint().matmul(x)).re.max(0.0).sqrt() };
    let mut fix_res: f64 = 0.0;
    let mut mult_res: f64 = 0.0;
    for kl in k.iter() {
        let ek = e.apply(kl);
        fix_res = fix_res.max(gns_norm(&ek.sub(kl)));
        let lhs = e.apply(&kl.adjoint().matmul(kl));
        let rhs = ek.adjoint().matmul(&ek);
        mult_res = mult_res.max(lhs.dist_fro(&rhs));
    }
    let tol = 1e-8;
    let mut identity_residual = fix_res;
    let fixed = fix_res <= tol && mult_res <= tol;
    if fixed {
        // walk all words up to word_len
        let mut words: Vec<CMatrix> = vec![e.source().identity()];
        for _ in 0..word_len {
            let mut next = Vec::new();
            for w in &words {
                for g in k.iter() {
                    let word = w.matmul(g);
                    identity_residual = identity_residual.max(gns_norm(&e.apply(&word).sub(&word)));
                    next.push(word);
                }
            }
            words = next;
            if words.len() > 4096 {
                break; // word explosion guard; length cap dominates in practice
            }
        }
    }
    let domain_dim = crate::algebra::generated_subalgebra(k.algebra(), k, word_len.max(4))
        .map(|b| b.len())
        .unwrap_or(0);
    Ok(MultiplicativeDomainReport {
        fixed,
        domain_dim,
        identity_residual,
        multiplicativity_residual: mult_res,
    })
}

/// Draws a u.c.p. channel with block-respecting Choi support: a Wishart
/// Choi matrix pinched to the support pattern, then normalized to make the
/// channel unital. Deterministic given the RNG stream.
pub fn random_ucp_channel(
    source: &FdAlgebra,
    target: &FdAlgebra,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Channel> {
    use rand::Rng;
    let na = source.total_dim();
    let nb = target.total_dim();
    let d = na * nb;
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let mut c = g.matmul(&g.adjoint());
    // pinch to the block-support pattern
    for r in 0..d {
        for col in 0..d {
            let (i, k) = (r / nb, r % nb);
            let (j, l) = (col / nb, col % nb);
            if !source.in_block(i, j) || !target.in_block(k, l) {
                c[(r, col)] = ZERO;
            }
        }
    }
    // unital normalization: C ← (1⊗X^{-1/2}) C (1⊗X^{-1/2}), X = Tr_first(C)
    let x = crate::linalg::partial_trace(&c, Leg::First, (na, nb))?;
    let x_inv_sqrt = matrix_power(&x.hermitize(), -0.5)?;
    let scaler = crate::linalg::kron(&CMatrix::identity(na), &x_inv_sqrt);
    let c = scaler.matmul(&c).matmul(&scaler.adjoint());
    Channel::from_choi(source, target, c.hermitize())
}
