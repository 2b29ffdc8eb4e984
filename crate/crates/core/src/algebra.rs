//! Finite-dimensional von Neumann algebras as direct sums of full matrix
//! blocks, their faithful normal states, generator sets, generated
//! subalgebras, and support compression of non-faithful states.
//!
//! Every algebra element is an N×N matrix vanishing outside the diagonal
//! blocks; channel-level objects always act on the containing full matrix
//! algebra composed with the block-diagonal pinching, so a single Choi
//! convention serves all block structures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, CMatrix, HermEig, C64, ONE, ZERO};

/// Relative tolerance for membership in the block-diagonal subspace.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A state is faithful iff its minimum eigenvalue is at least this times N.
pub const FAITHFUL_FLOOR_REL: f64 = 1e-10;

/// Eigenvalue floor used by the random state fixture generator; keeps
/// ρ^{-1/2} well-conditioned in the harnesses.
pub const FIXTURE_EIG_FLOOR: f64 = 0.01;

/// Direct sum of full matrix blocks M_{n₁} ⊕ … ⊕ M_{n_m} inside M_N,
/// N = Σ nᵢ. The abelian case is block_dims = (1,…,1). A two-factor tensor
/// product structure on a single full block is declared metadata, never
/// inferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdAlgebra {
    block_dims: Vec<usize>,
    block_starts: Vec<usize>,
    total_dim: usize,
    tensor_factors: Option<(usize, usize)>,
}

impl FdAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidInput(
                "block dimensions must be positive".into(),
            ));
        }
        let mut block_starts = Vec::with_capacity(block_dims.len());
        let mut acc = 0;
        for &d in &block_dims {
            block_starts.push(acc);
            acc += d;
        }
        Ok(Self {
            block_dims,
            block_starts,
            total_dim: acc,
            tensor_factors: None,
        })
    }

    /// The full matrix algebra M_n.
    pub fn full(n: usize) -> Self {
        Self::new(vec![n]).expect("positive dimension")
    }

    /// The abelian algebra C^m.
    pub fn abelian(m: usize) -> Self {
        Self::new(vec![1; m]).expect("positive dimension")
    }

    /// M_{d₁} ⊗ M_{d₂} as a single full block with declared factors.
    pub fn tensor_product(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidInput(
                "tensor factors must be positive".into(),
            ));
        }
        let mut alg = Self::full(d1 * d2);
        alg.tensor_factors = Some((d1, d2));
        Ok(alg)
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn tensor_factors(&self) -> Option<(usize, usize)> {
        self.tensor_factors
    }

    /// Linear dimension Σ nᵢ² of the algebra.
    pub fn algebra_dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }

    fn block_of(&self, i: usize) -> usize {
        debug_assert!(i < self.total_dim);
        match self.block_starts.binary_search(&i) {
            Ok(b) => b,
            Err(b) => b - 1,
        }
    }

    /// Whether matrix position (i, j) lies inside a diagonal block.
    pub fn in_block(&self, i: usize, j: usize) -> bool {
        self.block_of(i) == self.block_of(j)
    }

    /// Global index pairs of the block matrix units, in row-major order.
    pub fn basis_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.algebra_dim());
        for i in 0..self.total_dim {
            for j in 0..self.total_dim {
                if self.in_block(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn basis_matrix(&self, i: usize, j: usize) -> CMatrix {
        debug_assert!(self.in_block(i, j));
        CMatrix::unit(self.total_dim, i, j)
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.total_dim)
    }

    /// Block-diagonal pinching: zero all off-block entries.
    pub fn pinch(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.total_dim, self.total_dim, |i, j| {
            if self.in_block(i, j) {
                m[(i, j)]
            } else {
                ZERO
            }
        })
    }

    /// ‖m − pinch(m)‖_F / (1 + ‖m‖_F)
    pub fn off_block_residual(&self, m: &CMatrix) -> f64 {
        m.sub(&self.pinch(m)).norm_fro() / (1.0 + m.norm_fro())
    }

    pub fn contains(&self, m: &CMatrix) -> bool {
        m.rows() == self.total_dim
            && m.cols() == self.total_dim
            && self.off_block_residual(m) <= MEMBERSHIP_TOL
    }
}

/// A normal state, stored as a block-diagonal PSD density matrix of unit
/// trace with its eigendecomposition cached. `faithful` is set by the
/// eigenvalue-floor test.
#[derive(Debug, Clone)]
pub struct State {
    algebra: FdAlgebra,
    density: CMatrix,
    eig: HermEig,
    faithful: bool,
}

/// Builds a state after validating block support, positivity and unit trace.
pub fn make_state(algebra: &FdAlgebra, density: CMatrix) -> Result<State> {
    let n = algebra.total_dim();
    if density.rows() != n || density.cols() != n {
        return Err(Error::Dimension(format!(
            "density must be {}x{}, got {}x{}",
            n,
            n,
            density.rows(),
            density.cols()
        )));
    }
    let herm_res = density.hermitian_residual();
    if herm_res > 1e-12 {
        return Err(Error::InvalidState(format!(
            "density is not Hermitian (residual {herm_res:.3e})"
        )));
    }
    if algebra.off_block_residual(&density) > MEMBERSHIP_TOL {
        return Err(Error::InvalidState(
            "density has support outside the diagonal blocks".into(),
        ));
    }
    let tr = density.trace();
    if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "density trace is {tr}, expected 1"
        )));
    }
    let eig = herm_eig(&density)?;
    if eig.min_eigenvalue() < -1e-12 {
        return Err(Error::InvalidState(format!(
            "density has negative eigenvalue {:.3e}",
            eig.min_eigenvalue()
        )));
    }
    let faithful = eig.min_eigenvalue() >= FAITHFUL_FLOOR_REL * n as f64;
    Ok(State {
        algebra: algebra.clone(),
        density,
        eig,
        faithful,
    })
}

impl State {
    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn eig(&self) -> &HermEig {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.algebra.total_dim()
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    /// μ(a) = Tr(ρ a)
    pub fn expect(&self, a: &CMatrix) -> C64 {
        self.density.matmul(a).trace()
    }

    /// 0.5·‖ρ_μ − ρ_ν‖₁
    pub fn trace_distance(&self, other: &State) -> Result<f64> {
        let diff = self.density.sub(&other.density);
        let eig = herm_eig(&diff)?;
        Ok(0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// Deterministic full-rank random state: per-block Wishart matrix, trace
/// normalized, then mixed toward the tracial state until the minimum
/// eigenvalue clears [`FIXTURE_EIG_FLOOR`].
pub fn random_faithful_state(algebra: &FdAlgebra, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_faithful_state_with(algebra, &mut rng)
}

/// As [`random_faithful_state`], drawing from a caller-owned stream.
pub fn random_faithful_state_with(algebra: &FdAlgebra, rng: &mut ChaCha8Rng) -> State {
    let n = algebra.total_dim();
    let mut density = CMatrix::zeros(n, n);
    let mut start = 0;
    for &d in algebra.block_dims() {
        let g = CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let w = g.matmul(&g.adjoint());
        for i in 0..d {
            for j in 0..d {
                density[(start + i, start + j)] = w[(i, j)];
            }
        }
        start += d;
    }
    let tr = density.trace().re;
    density = density.scale_re(1.0 / tr);
    let eig = herm_eig(&density).expect("Wishart density is Hermitian");
    let target = FIXTURE_EIG_FLOOR * 1.05;
    let lam_min = eig.min_eigenvalue();
    if lam_min < target {
        let theta = ((target - lam_min) / (1.0 / n as f64 - lam_min)).clamp(0.0, 1.0);
        let tracial = CMatrix::identity(n).scale_re(1.0 / n as f64);
        density = density.scale_re(1.0 - theta).add(&tracial.scale_re(theta));
    }
    let state = make_state(algebra, density).expect("fixture density is valid");
    debug_assert!(state.eig.min_eigenvalue() >= FIXTURE_EIG_FLOOR);
    state
}

/// The tuple (k₁,…,k_n) defining the transport cost; adjoint-closed as a
/// set, with the partner permutation recorded.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    algebra: FdAlgebra,
    k: Vec<CMatrix>,
    adjoint_partner: Vec<usize>,
}

impl GeneratorSet {
    pub fn new(algebra: &FdAlgebra, k: Vec<CMatrix>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidGenerators("empty generator list".into()));
        }
        for (l, m) in k.iter().enumerate() {
            if !algebra.contains(m) {
                return Err(Error::InvalidGenerators(format!(
                    "generator {l} is not an element of the algebra"
                )));
            }
        }
        let mut adjoint_partner = Vec::with_capacity(k.len());
        for (l, m) in k.iter().enumerate() {
            let adj = m.adjoint();
            let tol = 1e-12 * (1.0 + adj.norm_fro());
            match k.iter().position(|cand| cand.dist_fro(&adj) <= tol) {
                Some(p) => adjoint_partner.push(p),
                None => {
                    return Err(Error::InvalidGenerators(format!(
                        "generator set is not adjoint-closed: k_{l}* is missing"
                    )))
                }
            }
        }
        Ok(Self {
            algebra: algebra.clone(),
            k,
            adjoint_partner,
        })
    }

    /// Pauli generators σx, σy, σz on M₂.
    pub fn paulis(algebra: &FdAlgebra) -> Result<Self> {
        if algebra.total_dim() != 2 || algebra.block_dims() != [2] {
            return Err(Error::InvalidGenerators(
                "Pauli generators require M_2".into(),
            ));
        }
        let mut sx = CMatrix::zeros(2, 2);
        sx[(0, 1)] = ONE;
        sx[(1, 0)] = ONE;
        let mut sy = CMatrix::zeros(2, 2);
        sy[(0, 1)] = C64::new(0.0, -1.0);
        sy[(1, 0)] = C64::new(0.0, 1.0);
        let sz = CMatrix::diag(&[1.0, -1.0]);
        Self::new(algebra, vec![sx, sy, sz])
    }

    /// The Hermitian basis of the algebra: per block, e_ii, e_ij + e_ji and
    /// i(e_ij − e_ji); adjoint-closed and generating.
    pub fn hermitian_basis(algebra: &FdAlgebra) -> Result<Self> {
        let n = algebra.total_dim();
        let mut k = Vec::new();
        let mut start = 0;
        for &d in algebra.block_dims() {
            for i in 0..d {
                k.push(CMatrix::unit(n, start + i, start + i));
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    let mut re = CMatrix::zeros(n, n);
                    re[(start + i, start + j)] = ONE;
                    re[(start + j, start + i)] = ONE;
                    k.push(re);
                    let mut im = CMatrix::zeros(n, n);
                    im[(start + i, start + j)] = C64::new(0.0, 1.0);
                    im[(start + j, start + i)] = C64::new(0.0, -1.0);
                    k.push(im);
                }
            }
            start += d;
        }
        Self::new(algebra, k)
    }

    /// Diagonal 0/1 indicators e_ll; the coordinate functions of the abelian
    /// case.
    pub fn coordinate_indicators(algebra: &FdAlgebra) -> Result<Self> {
        let n = algebra.total_dim();
        let k = (0..n).map(|i| CMatrix::unit(n, i, i)).collect();
        Self::new(algebra, k)
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn get(&self, l: usize) -> &CMatrix {
        &self.k[l]
    }

    /// Index l′ with k_{l′} = k_l†.
    pub fn adjoint_partner(&self, l: usize) -> usize {
        self.adjoint_partner[l]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CMatrix> {
        self.k.iter()
    }

    /// Whether the generators (with the unit) span the whole algebra.
    pub fn generates(&self) -> Result<bool> {
        let basis = generated_subalgebra(&self.algebra, self, 2 * self.algebra.total_dim())?;
        Ok(basis.len() == self.algebra.algebra_dim())
    }
}

/// Orthonormal (Hilbert–Schmidt) basis of the unital *-algebra generated by
/// the generator set, built by breadth-first word expansion with
/// Gram–Schmidt. Errors if the word-length cap is hit before the span
/// stabilizes.
pub fn generated_subalgebra(
    algebra: &FdAlgebra,
    gens: &GeneratorSet,
    max_word_len: usize,
) -> Result<Vec<CMatrix>> {
    let n = algebra.total_dim();
    let norm_id = (n as f64).sqrt();
    let mut basis: Vec<CMatrix> = vec![CMatrix::identity(n).scale_re(1.0 / norm_id)];
    // words of the previous length whose residuals entered the basis
    let mut frontier: Vec<CMatrix> = vec![CMatrix::identity(n)];

    let orthogonalize = |basis: &[CMatrix], w: &CMatrix| -> CMatrix {
        let mut resid = w.clone();
        for _ in 0..2 {
            for b in basis {
                let coef = b.hs_inner(&resid);
                resid = resid.sub(&b.scale(coef));
            }
        }
        resid
    };

    let mut len = 0;
    loop {
        len += 1;
        let mut next_frontier = Vec::new();
        let mut added = false;
        for w in &frontier {
            for g in gens.iter() {
                let word = w.matmul(g);
                let resid = orthogonalize(&basis, &word);
                if resid.norm_fro() > 1e-9 * (1.0 + word.norm_fro()) {
                    let nrm = resid.norm_fro();
                    basis.push(resid.scale_re(1.0 / nrm));
                    next_frontier.push(word);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        if len >= max_word_len {
            return Err(Error::WordLengthCap { max_word_len });
        }
        frontier = next_frontier;
        if basis.len() >= algebra.algebra_dim() {
            break;
        }
    }

    // closure check: products of basis elements stay in the span
    for a in &basis {
        for b in &basis {
            let prod = a.matmul(b);
            let resid = orthogonalize(&basis, &prod);
            if resid.norm_fro() > 1e-10 * (1.0 + prod.norm_fro()) {
                return Err(Error::WordLengthCap { max_word_len });
            }
        }
    }
    Ok(basis)
}

/// Result of compressing a state to its support: the corner algebra
/// p M p expressed in a support basis, the now-faithful state, the
/// compressed generators, and the isometry back into the original space.
#[derive(Debug, Clone)]
pub struct Compression {
    pub algebra: FdAlgebra,
    pub state: State,
    pub generators: GeneratorSet,
    /// N×r block isometry W with W†W = I_r; compression is a ↦ W†aW.
    pub isometry: CMatrix,
}

/// Restricts a normal state of any rank to its support projection. Blocks
/// that are already full rank keep their original basis, so a faithful
/// state compresses to itself exactly.
pub fn support_compress(state: &State, gens: &GeneratorSet) -> Result<Compression> {
    let algebra = state.algebra();
    let n = algebra.total_dim();
    let floor = FAITHFUL_FLOOR_REL * n as f64;

    // per-block isometry columns
    let mut columns: Vec<Vec<C64>> = Vec::new();
    let mut new_block_dims = Vec::new();
    let mut start = 0;
    for &d in algebra.block_dims() {
        let block = CMatrix::from_fn(d, d, |i, j| state.density()[(start + i, start + j)]);
        let eig = herm_eig(&block)?;
        let kept: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > floor).collect();
        if kept.len() == d {
            for i in 0..d {
                let mut col = vec![ZERO; n];
                col[start + i] = ONE;
                columns.push(col);
            }
            new_block_dims.push(d);
        } else if !kept.is_empty() {
            for &j in &kept {
                let mut col = vec![ZERO; n];
                for i in 0..d {
                    col[start + i] = eig.eigenvectors[(i, j)];
                }
                columns.push(col);
            }
            new_block_dims.push(kept.len());
        }
        start += d;
    }
    if new_block_dims.is_empty() {
        return Err(Error::ZeroState);
    }
    let r = columns.len();
    let isometry = CMatrix::from_fn(n, r, |i, j| columns[j][i]);

    let compressed_algebra = FdAlgebra::new(new_block_dims)?;
    let compress = |m: &CMatrix| isometry.adjoint().matmul(m).matmul(&isometry);

    let mut density = compress(state.density()).hermitize();
    let tr = density.trace().re;
    density = density.scale_re(1.0 / tr);
    let compressed_state = make_state(&compressed_algebra, compressed_algebra.pinch(&density))?;
    if !compressed_state.is_faithful() {
        return Err(Error::InvalidState(
            "support compression left a non-faithful state".into(),
        ));
    }

    let compressed_k: Vec<CMatrix> = gens
        .iter()
        .map(|k| compressed_algebra.pinch(&compress(k)))
        .collect();
    let generators = GeneratorSet::new(&compressed_algebra, compressed_k)?;

    Ok(Compression {
        algebra: compressed_algebra,
        state: compressed_state,
        generators,
        isometry,
    })
}
