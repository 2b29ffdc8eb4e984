//! Modular machinery in finite dimensions: the modular group
//! σ_t(a) = ρ^{it} a ρ^{-it} of a faithful state, modular sector tables,
//! the GNS-space contraction K of a channel, and KMS duals.
//!
//! Modular covariance of a channel for all real t is equivalent to the
//! single commutation [C(E), conj(ρ_μ) ⊗ ρ_ν^{-1}] = 0 of its Choi matrix:
//! commuting with a positive matrix implies commuting with all its imaginary
//! powers. Equivalently, in the joint eigenbasis the Choi entries between
//! mismatched eigenvalue-ratio sectors vanish. Both forms are used here and
//! cross-validated numerically at incommensurate t samples.

use crate::algebra::State;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, kron, matrix_power, CMatrix, C64, ZERO};
use crate::transport::Channel;

/// Two eigenvalue ratios fall in the same modular sector iff their logs
/// differ by at most this.
pub const SECTOR_TOL: f64 = 1e-9;

/// Incommensurate sample times for covariance checks: {0.3, 1, √2, π}.
pub const DEFAULT_T_SAMPLES: [f64; 4] = [0.3, 1.0, std::f64::consts::SQRT_2, std::f64::consts::PI];

/// A block-respecting eigendecomposition ρ = U·diag(λ)·U† with U
/// block-diagonal, so functional calculus never mixes blocks even for
/// degenerate spectra.
#[derive(Debug, Clone)]
pub struct StateEigenbasis {
    pub eigenvalues: Vec<f64>,
    pub basis: CMatrix,
}

/// Per-block eigendecomposition of a state's density matrix.
pub fn block_eig(state: &State) -> Result<StateEigenbasis> {
    let n = state.dim();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut basis = CMatrix::zeros(n, n);
    let mut start = 0;
    for &d in state.algebra().block_dims() {
        let block = CMatrix::from_fn(d, d, |i, j| state.density()[(start + i, start + j)]);
        let eig = herm_eig(&block)?;
        for j in 0..d {
            eigenvalues.push(eig.eigenvalues[j]);
            for i in 0..d {
                basis[(start + i, start + j)] = eig.eigenvectors[(i, j)];
            }
        }
        start += d;
    }
    Ok(StateEigenbasis { eigenvalues, basis })
}

/// Modular data of a faithful state: ρ^{1/2}, ρ^{-1/2}, the block
/// eigenbasis, and the sector table of its own eigenvalue ratios.
#[derive(Debug, Clone)]
pub struct ModularData {
    pub sqrt_density: CMatrix,
    pub inv_sqrt_density: CMatrix,
    pub eigenbasis: StateEigenbasis,
    /// class id of pair (i,j) at flat index i·N+j, grouping log(pᵢ/pⱼ).
    pub sectors: Vec<usize>,
}

impl ModularData {
    pub fn new(state: &State) -> Result<Self> {
        if !state.is_faithful() {
            return Err(Error::NotFaithful {
                min_eig: state.eig().min_eigenvalue(),
            });
        }
        let sqrt_density = matrix_power(state.density(), 0.5)?;
        let inv_sqrt_density = matrix_power(state.density(), -0.5)?;
        let eigenbasis = block_eig(state)?;
        let sectors = group_log_ratios(&eigenbasis.eigenvalues, &eigenbasis.eigenvalues);
        Ok(Self {
            sqrt_density,
            inv_sqrt_density,
            eigenbasis,
            sectors,
        })
    }
}

/// Groups flat pairs (i,k) ↦ i·len(q)+k by the value log(pᵢ/q_k), merging
/// values closer than [`SECTOR_TOL`]; returns the class id per pair.
pub fn group_log_ratios(p: &[f64], q: &[f64]) -> Vec<usize> {
    let nb = q.len();
    let mut ratios: Vec<(f64, usize)> = Vec::with_capacity(p.len() * nb);
    for (i, &pi) in p.iter().enumerate() {
        for (k, &qk) in q.iter().enumerate() {
            ratios.push(((pi / qk).ln(), i * nb + k));
        }
    }
    ratios.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut class = vec![0usize; ratios.len()];
    let mut current = 0;
    for w in 0..ratios.len() {
        if w > 0 && ratios[w].0 - ratios[w - 1].0 > SECTOR_TOL {
            current += 1;
        }
        class[ratios[w].1] = current;
    }
    class
}

/// σ_t^μ(a) = ρ^{it} a ρ^{-it}
pub fn modular_apply(mu: &State, a: &CMatrix, t: f64) -> Result<CMatrix> {
    if !mu.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: mu.eig().min_eigenvalue(),
        });
    }
    let u = crate::linalg::unitary_power(mu.density(), t)?;
    Ok(u.matmul(a).matmul(&u.adjoint()))
}

/// The modular group at time t as a channel (A,μ) → (A,μ).
pub fn modular_channel(mu: &State, t: f64) -> Result<Channel> {
    if !mu.is_faithful() {
        return Err(Error::NotFaithful {
            min_eig: mu.eig().min_eigenvalue(),
        });
    }
    let n = mu.dim();
    let u = crate::linalg::unitary_power(mu.density(), t)?;
    let mut action = kron(&u, &u.conj());
    // pre-compose with the block pinching
    for i in 0..n {
        for j in 0..n {
            if !mu.algebra().in_block(i, j) {
                let col = i * n + j;
                for row in 0..n * n {
                    action[(row, col)] = ZERO;
                }
            }
        }
    }
    Channel::from_action(mu.algebra(), mu.algebra(), action)
}

/// Max over sampled t and basis elements a of
/// ‖E(σ_t^μ(a)) − σ_t^ν(E(a))‖_F; ≈ 0 iff E is modular-covariant on the
/// sampled set.
pub fn covariance_residual(e: &Channel, mu: &State, nu: &State, t_samples: &[f64]) -> Result<f64> {
    let na = mu.dim();
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        let u_mu = crate::linalg::unitary_power(mu.density(), t)?;
        let u_nu = crate::linalg::unitary_power(nu.density(), t)?;
        for (i, j) in mu.algebra().basis_indices() {
            let a = CMatrix::unit(na, i, j);
            let lhs = e.apply(&u_mu.matmul(&a).matmul(&u_mu.adjoint()));
            let rhs = u_nu.matmul(&e.apply(&a)).matmul(&u_nu.adjoint());
            worst = worst.max(lhs.dist_fro(&rhs));
        }
    }
    Ok(worst)
}

/// ‖[C(E), conj(ρ_μ) ⊗ ρ_ν^{-1}]‖_F — the all-t covariance condition in
/// commutator form.
pub fn covariance_commutator_residual(e: &Channel, mu: &State, nu: &State) -> Result<f64> {
    let rho_nu_inv = matrix_power(nu.density(), -1.0)?;
    let p = kron(&mu.density().conj(), &rho_nu_inv);
    let c = e.choi();
    Ok(c.matmul(&p).dist_fro(&p.matmul(c)))
}

/// Class id per Choi row index α = i·N_ν + k, grouping the cross ratios
/// p_i/q_k of the two block eigenbases.
pub fn cross_sector_classes(mu_eig: &StateEigenbasis, nu_eig: &StateEigenbasis) -> Vec<usize> {
    group_log_ratios(&mu_eig.eigenvalues, &nu_eig.eigenvalues)
}

/// The unitary W = conj(U_μ) ⊗ V_ν whose columns are the joint eigenvectors
/// of conj(ρ_μ) ⊗ ρ_ν^{-1}; covariance of a Choi matrix C is the vanishing
/// of W†CW between different sector classes.
pub fn sector_basis(mu_eig: &StateEigenbasis, nu_eig: &StateEigenbasis) -> CMatrix {
    kron(&mu_eig.basis.conj(), &nu_eig.basis)
}

/// Pinches a Choi matrix onto the modular-covariant subspace: rotate to the
/// sector basis, zero all entries between different classes, rotate back.
pub fn sector_pinch_choi(choi: &CMatrix, mu: &State, nu: &State) -> Result<CMatrix> {
    let mu_eig = block_eig(mu)?;
    let nu_eig = block_eig(nu)?;
    let classes = cross_sector_classes(&mu_eig, &nu_eig);
    let w = sector_basis(&mu_eig, &nu_eig);
    let mut rotated = w.adjoint().matmul(choi).matmul(&w);
    let d = rotated.rows();
    for a in 0..d {
        for b in 0..d {
            if classes[a] != classes[b] {
                rotated[(a, b)] = ZERO;
            }
        }
    }
    Ok(w.matmul(&rotated).matmul(&w.adjoint()))
}

/// The contraction K: G_μ → G_ν with K(a·Λ_μ) = E(a)·Λ_ν, as a matrix on
/// the vectorized Hilbert–Schmidt spaces.
#[derive(Debug, Clone)]
pub struct KContraction {
    matrix: CMatrix,
}

impl KContraction {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Operator norm via the top eigenvalue of K†K.
    pub fn op_norm(&self) -> Result<f64> {
        let gram = self.matrix.adjoint().matmul(&self.matrix);
        Ok(herm_eig(&gram)?.max_eigenvalue().max(0.0).sqrt())
    }
}

/// Builds the GNS contraction of a channel with matched marginals
/// (required: ν∘E = μ within 1e-10, else Kadison does not make K
/// contractive).
pub fn k_contraction(e: &Channel, mu: &State, nu: &State) -> Result<KContraction> {
    let res = e.marginal_residual(mu, nu);
    if res > 1e-10 {
        return Err(Error::MarginalMismatch { residual: res });
    }
    let md_mu = ModularData::new(mu)?;
    let md_nu = ModularData::new(nu)?;
    let na = mu.dim();
    let nb = nu.dim();
    // K = R(ρ_ν^{1/2}) ∘ E ∘ R(ρ_μ^{-1/2}) on vec(x), R(m): x ↦ x·m
    let right_mu = kron(&CMatrix::identity(na), &md_mu.inv_sqrt_density.transpose());
    let right_nu = kron(&CMatrix::identity(nb), &md_nu.sqrt_density.transpose());
    let matrix = right_nu.matmul(e.action()).matmul(&right_mu);
    let k = KContraction { matrix };
    let norm = k.op_norm()?;
    if norm > 1.0 + 1e-10 {
        return Err(Error::InvalidChannel(format!(
            "GNS representation is not contractive (norm {norm:.12})"
        )));
    }
    Ok(k)
}

/// The modular operator Δ = ρ·(·)·ρ^{-1} as a superoperator matrix.
pub fn delta_superop(state: &State) -> Result<CMatrix> {
    let rho_inv = matrix_power(state.density(), -1.0)?;
    Ok(kron(state.density(), &rho_inv.transpose()))
}

/// KMS-dual of a channel w.r.t. (μ, ν):
/// E^σ(b) = ρ_μ^{-1/2}·E†(ρ_ν^{1/2}·b·ρ_ν^{1/2})·ρ_μ^{-1/2},
/// with E† the trace-pairing adjoint. Satisfies μ∘E^σ = ν, (E^σ)^σ = E, and
/// μ(a·E^σ(b)) = ν(E(a)·b) exactly when E is modular-covariant.
pub fn kms_dual(e: &Channel, mu: &State, nu: &State) -> Result<Channel> {
    let res = e.marginal_residual(mu, nu);
    if res > 1e-10 {
        return Err(Error::MarginalMismatch { residual: res });
    }
    let md_mu = ModularData::new(mu)?;
    let md_nu = ModularData::new(nu)?;
    let na = mu.dim();
    let nb = nu.dim();
    // trace-pairing adjoint: E†(e_kl)[i,j] = E(e_ji)[l,k]
    let adj = CMatrix::from_fn(na * na, nb * nb, |r, c| {
        let (i, j) = (r / na, r % na);
        let (k, l) = (c / nb, c % nb);
        e.action()[(l * nb + k, j * na + i)]
    });
    let sandwich_nu = kron(&md_nu.sqrt_density, &md_nu.sqrt_density.transpose());
    let sandwich_mu = kron(&md_mu.inv_sqrt_density, &md_mu.inv_sqrt_density.transpose());
    let action = sandwich_mu.matmul(&adj).matmul(&sandwich_nu);
    Channel::from_action_tol(nu.algebra(), mu.algebra(), action, 1e-8)
}

/// Per-generator transport-cost terms seen from the swapped side: the
/// l-th term of I over (ν, μ) for the KMS-dual channel.
pub fn dual_side_term(e_dual: &Channel, mu: &State, nu: &State, k: &CMatrix) -> C64 {
    let ek = e_dual.apply(k);
    let kk = k.adjoint().matmul(k);
    nu.expect(&kk) + mu.expect(&kk)
        - mu.expect(&ek.adjoint().matmul(k))
        - mu.expect(&k.adjoint().matmul(&ek))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_state, random_faithful_state, FdAlgebra};
    use crate::linalg::ONE;
    use crate::testutil::{random_matrix, rng};
    use crate::transport::{compose, random_ucp_channel};

    fn qubit_state(p: f64) -> State {
        make_state(&FdAlgebra::full(2), CMatrix::diag(&[p, 1.0 - p])).unwrap()
    }

    /// random u.c.p. channel with marginals matched to ν by defining
    /// μ := ν∘E, floored away from the boundary by mixing with a collapse
    fn matched_pair(
        alg: &FdAlgebra,
        nu: &State,
        r: &mut rand_chacha::ChaCha8Rng,
    ) -> (Channel, State) {
        let n = alg.total_dim();
        let raw = random_ucp_channel(alg, alg, r).unwrap();
        let tracial = make_state(alg, CMatrix::identity(n).scale_re(1.0 / n as f64)).unwrap();
        let mix = raw
            .action()
            .scale_re(0.9)
            .add(&Channel::collapse(&tracial, alg).action().scale_re(0.1));
        let e = Channel::from_action(alg, alg, mix).unwrap();
        let mut rho = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rho[(j, i)] = nu.expect(&e.apply(&CMatrix::unit(n, i, j)));
            }
        }
        let mu = make_state(alg, alg.pinch(&rho.hermitize())).unwrap();
        assert!(mu.is_faithful());
        (e, mu)
    }

    #[test]
    fn modular_apply_fixes_unit_and_traces() {
        let mu = qubit_state(0.7);
        let id = CMatrix::identity(2);
        assert!(modular_apply(&mu, &id, 1.3).unwrap().dist_fro(&id) <= 1e-13);

        let tracial = qubit_state(0.5);
        let mut r = rng(1);
        for _ in 0..5 {
            let a = random_matrix(2, 2, &mut r);
            assert!(modular_apply(&tracial, &a, 0.9).unwrap().dist_fro(&a) <= 1e-12);
        }
    }

    #[test]
    fn modular_apply_qubit_phases() {
        let mu = qubit_state(0.7);
        let mut sx = CMatrix::zeros(2, 2);
        sx[(0, 1)] = ONE;
        sx[(1, 0)] = ONE;
        let t = 1.0;
        let out = modular_apply(&mu, &sx, t).unwrap();
        let phase = (0.7f64 / 0.3).ln();
        let expected01 = C64::new(0.0, t * phase).exp();
        assert!((out[(0, 1)] - expected01).norm() <= 1e-12);
        assert!((out[(1, 0)] - expected01.conj()).norm() <= 1e-12);
        assert!(out[(0, 0)].norm() <= 1e-13 && out[(1, 1)].norm() <= 1e-13);
        // state preservation
        assert!((mu.expect(&out) - mu.expect(&sx)).norm() <= 1e-11);
    }

    #[test]
    fn modular_group_law() {
        let mu = qubit_state(0.64);
        let mut r = rng(2);
        let a = random_matrix(2, 2, &mut r);
        for &(s, t) in &[(0.3, 0.4), (-1.0, 2.0), (0.7, -0.7)] {
            let one = modular_apply(&mu, &modular_apply(&mu, &a, s).unwrap(), t).unwrap();
            let two = modular_apply(&mu, &a, s + t).unwrap();
            assert!(one.dist_fro(&two) <= 1e-10 * (1.0 + two.norm_fro()));
        }
    }

    #[test]
    fn covariance_residual_examples() {
        let alg = FdAlgebra::full(2);
        let mu = qubit_state(0.7);
        let nu = qubit_state(0.5);
        let id = Channel::identity(&alg);
        assert!(covariance_residual(&id, &mu, &mu, &DEFAULT_T_SAMPLES).unwrap() <= 1e-10);

        let collapse = Channel::collapse(&mu, &alg);
        assert!(covariance_residual(&collapse, &mu, &nu, &DEFAULT_T_SAMPLES).unwrap() <= 1e-10);

        // identity between sector-mismatched states moves e_12 by a phase
        let res = covariance_residual(&id, &mu, &nu, &DEFAULT_T_SAMPLES).unwrap();
        assert!(res > 0.1);
    }

    #[test]
    fn commutator_form_matches_sampled_form() {
        let alg = FdAlgebra::full(2);
        let mut r = rng(3);
        let mu = random_faithful_state(&alg, 61);
        let nu = random_faithful_state(&alg, 62);
        let mut covariant_seen = 0;
        for _ in 0..100 {
            let e = random_ucp_channel(&alg, &alg, &mut r).unwrap();
            let sampled = covariance_residual(&e, &mu, &nu, &DEFAULT_T_SAMPLES).unwrap();
            let comm = covariance_commutator_residual(&e, &mu, &nu).unwrap();
            if sampled <= 1e-10 {
                assert!(comm <= 1e-8);
            }
            if comm <= 1e-8 {
                assert!(sampled <= 1e-10 * 100.0); // scaled: commutator bound is looser
                covariant_seen += 1;
            }
            // covariant projection of the Choi satisfies both
            let pinched = sector_pinch_choi(e.choi(), &mu, &nu).unwrap();
            let ep = Channel::from_choi_tol(&alg, &alg, pinched, 1e-6).unwrap();
            assert!(covariance_commutator_residual(&ep, &mu, &nu).unwrap() <= 1e-8);
            assert!(covariance_residual(&ep, &mu, &nu, &DEFAULT_T_SAMPLES).unwrap() <= 1e-9);
        }
        // random channels are generically not covariant
        assert!(covariant_seen <= 5);
    }

    #[test]
    fn k_contraction_identity_and_collapse() {
        let alg = FdAlgebra::full(2);
        let mu = random_faithful_state(&alg, 71);
        let id = Channel::identity(&alg);
        let k = k_contraction(&id, &mu, &mu).unwrap();
        assert!(k.matrix().dist_fro(&CMatrix::identity(4)) <= 1e-11);

        let nu = random_faithful_state(&alg, 72);
        let collapse = Channel::collapse(&mu, &alg);
        let kc = k_contraction(&collapse, &mu, &nu).unwrap();
        let norm = kc.op_norm().unwrap();
        assert!((norm - 1.0).abs() <= 1e-10);
        // rank one: second singular value vanishes
        let gram = kc.matrix().adjoint().matmul(kc.matrix());
        let eigs = herm_eig(&gram).unwrap();
        assert!(eigs.eigenvalues[eigs.eigenvalues.len() - 2].abs() <= 1e-10);
        // K(a·Λ_μ) = E(a)·Λ_ν on basis elements
        let sqrt_mu = matrix_power(mu.density(), 0.5).unwrap();
        let sqrt_nu = matrix_power(nu.density(), 0.5).unwrap();
        for (i, j) in alg.basis_indices() {
            let a = CMatrix::unit(2, i, j);
            let lhs = kc.matrix().mul_vec(a.matmul(&sqrt_mu).data());
            let rhs = collapse.apply(&a).matmul(&sqrt_nu);
            let lhs = CMatrix::from_vec_square(2, lhs).unwrap();
            assert!(lhs.dist_fro(&rhs) <= 1e-11);
        }
    }

    #[test]
    fn k_contraction_requires_matched_marginals() {
        let alg = FdAlgebra::full(2);
        let mu = qubit_state(0.7);
        let nu = qubit_state(0.4);
        let id = Channel::identity(&alg);
        assert!(matches!(
            k_contraction(&id, &mu, &nu),
            Err(Error::MarginalMismatch { .. })
        ));
    }

    #[test]
    fn covariant_channel_intertwines_delta() {
        let alg = FdAlgebra::full(2);
        let mu = random_faithful_state(&alg, 81);
        let nu = random_faithful_state(&alg, 82);
        let collapse = Channel::collapse(&mu, &alg);
        let k = k_contraction(&collapse, &mu, &nu).unwrap();
        let d_mu = delta_superop(&mu).unwrap();
        let d_nu = delta_superop(&nu).unwrap();
        let lhs = d_nu.matmul(k.matrix());
        let rhs = k.matrix().matmul(&d_mu);
        assert!(lhs.dist_fro(&rhs) <= 1e-9 * (1.0 + rhs.norm_fro()));
    }

    #[test]
    fn kms_dual_identity_and_collapse() {
        let alg = FdAlgebra::full(2);
        let mu = random_faithful_state(&alg, 91);
        let id = Channel::identity(&alg);
        let dual = kms_dual(&id, &mu, &mu).unwrap();
        assert!(dual.dist(&id) <= 1e-10);

        let nu = random_faithful_state(&alg, 92);
        let collapse = Channel::collapse(&mu, &alg);
        let dual = kms_dual(&collapse, &mu, &nu).unwrap();
        let expected = Channel::collapse(&nu, &alg);
        assert!(dual.dist(&expected) <= 1e-10);
        assert!(dual.marginal_residual(&nu, &mu) <= 1e-10);
    }

    #[test]
    fn kms_dual_involution_and_marginals() {
        let alg = FdAlgebra::full(2);
        let mut r = rng(5);
        for trial in 0..100 {
            let nu = random_faithful_state(&alg, 900 + trial);
            let (e, mu) = matched_pair(&alg, &nu, &mut r);
            let dual = kms_dual(&e, &mu, &nu).unwrap();
            assert!(dual.marginal_residual(&nu, &mu) <= 1e-10);
            let back = kms_dual(&dual, &nu, &mu).unwrap();
            assert!(back.dist(&e) <= 1e-9 * (1.0 + e.action().norm_fro()));
        }
    }

    #[test]
    fn kms_dual_pairing_for_covariant_channels() {
        // μ(a E^σ(b)) = ν(E(a) b) under modular covariance
        let alg = FdAlgebra::full(2);
        let mut r = rng(6);
        let mu = random_faithful_state(&alg, 95);
        let nu = random_faithful_state(&alg, 96);
        let collapse = Channel::collapse(&mu, &alg);
        let dual = kms_dual(&collapse, &mu, &nu).unwrap();
        for _ in 0..100 {
            let a = random_matrix(2, 2, &mut r);
            let b = random_matrix(2, 2, &mut r);
            let lhs = mu.expect(&a.matmul(&dual.apply(&b)));
            let rhs = nu.expect(&collapse.apply(&a).matmul(&b));
            assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn modular_group_family_is_kms_self_dual() {
        // (σ_t)^σ = σ_{-t}: the dual reverses the flow parameter, so the
        // one-parameter family is closed under KMS duality, which is what
        // carries modular plans to modular plans under ω ↦ ω^σ
        let mu = qubit_state(0.61);
        for &t in &DEFAULT_T_SAMPLES {
            let sigma = modular_channel(&mu, t).unwrap();
            let dual = kms_dual(&sigma, &mu, &mu).unwrap();
            let reversed = modular_channel(&mu, -t).unwrap();
            assert!(dual.dist(&reversed) <= 1e-9);
            // dual stays in the covariant set
            assert!(covariance_residual(&dual, &mu, &mu, &DEFAULT_T_SAMPLES).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn composed_covariant_channels_stay_covariant() {
        let alg = FdAlgebra::full(2);
        let mu = random_faithful_state(&alg, 101);
        let nu = random_faithful_state(&alg, 102);
        let xi = random_faithful_state(&alg, 103);
        let e1 = Channel::collapse(&mu, &alg); // (A,μ) → (A,ν), covariant
        let e2 = Channel::collapse(&nu, &alg); // (A,ν) → (A,ξ), covariant
        let comp = compose(&e1, &e2).unwrap();
        assert!(comp.marginal_residual(&mu, &xi) <= 1e-10);
        assert!(covariance_residual(&comp, &mu, &xi, &DEFAULT_T_SAMPLES).unwrap() <= 1e-10);
    }
}
