//! Density matrices, POVMs, Born-rule sampling, the copy oracle, Pauli
//! observables and mutually unbiased bases.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::haar::{complex_gaussian_matrix, sample_haar_unitary};
use crate::linalg::{
    self, c64, ensure_dim, ensure_square, eig_hermitian, hermitian_function, hermitian_part,
    hermitian_residual, hs_norm, identity, outer, CMatrix, CVector, C64, HERMITIAN_TOL,
    PSD_FLOOR,
};
use crate::stats::multinomial;
use crate::{Error, Result};

/// Completeness tolerance `‖Σ M_x − I‖_HS`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Born probabilities in `[−BORN_CLIP, 0)` are clipped to zero.
pub const BORN_CLIP: f64 = 1e-10;

pub fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n.is_power_of_two()
}

pub fn ensure_power_of_two(name: &str, n: usize) -> Result<()> {
    if !is_power_of_two(n) {
        return Err(Error::InvalidParameter(format!("{name} = {n} is not a power of 2")));
    }
    Ok(())
}

/// A d×d PSD Hermitian matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        let d = ensure_square(&rho)?;
        if d == 0 {
            return Err(Error::InvalidParameter("empty density matrix".into()));
        }
        let res = hermitian_residual(&rho);
        if res > HERMITIAN_TOL * hs_norm(&rho).max(1.0) {
            return Err(Error::NotHermitian(res));
        }
        let tr = linalg::trace(&rho).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = eig_hermitian(&rho)?.min();
        if min < PSD_FLOOR {
            return Err(Error::StateNotPsd(min));
        }
        Ok(DensityMatrix { rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// `I/d`.
    pub fn mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        Ok(DensityMatrix { rho: identity(d) * c64(1.0 / d as f64, 0.0) })
    }

    /// `|φ⟩⟨φ|` with `|φ⟩ = d^{-1/2} Σ|x⟩`.
    pub fn plus(d: usize) -> Result<Self> {
        ensure_power_of_two("d", d)?;
        Ok(DensityMatrix { rho: CMatrix::from_element(d, d, c64(1.0 / d as f64, 0.0)) })
    }

    /// `|j⟩⟨j|`, 0-based `j`.
    pub fn basis(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::InvalidParameter(format!("basis index {j} out of range for d = {d}")));
        }
        let mut rho = CMatrix::zeros(d, d);
        rho[(j, j)] = c64(1.0, 0.0);
        Ok(DensityMatrix { rho })
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        DensityMatrix::new(outer(&(psi / c64(n, 0.0))))
    }

    /// Haar-rotated diagonal with a Dirichlet(1, …, 1) spectrum.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        ensure_power_of_two("d", d)?;
        let mut w: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let u = sample_haar_unitary(d, rng);
        let mut ud = u.clone();
        for (j, wj) in w.iter().enumerate() {
            ud.column_mut(j).scale_mut(*wj);
        }
        let rho = hermitian_part(&(ud * u.adjoint()));
        let tr = linalg::trace(&rho).re;
        Ok(DensityMatrix { rho: rho * c64(1.0 / tr, 0.0) })
    }

    pub fn to_json(&self) -> StateJson {
        StateJson { dim: self.dim(), rho: matrix_to_json(&self.rho) }
    }

    pub fn from_json(j: &StateJson) -> Result<Self> {
        let rho = matrix_from_json(&j.rho, j.dim)?;
        DensityMatrix::new(rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardState {
    Mixed,
    Plus,
    Basis(usize),
    Random,
}

pub fn make_standard_state<R: Rng + ?Sized>(
    d: usize,
    which: StandardState,
    rng: &mut R,
) -> Result<DensityMatrix> {
    match which {
        StandardState::Mixed => DensityMatrix::mixed(d),
        StandardState::Plus => DensityMatrix::plus(d),
        StandardState::Basis(j) => DensityMatrix::basis(d, j),
        StandardState::Random => DensityMatrix::random(d, rng),
    }
}

/// A finite set of PSD effects summing to the identity. Labels are `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<CMatrix>,
}

impl Povm {
    /// Validates the candidate and names the first violated invariant.
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidParameter("POVM needs at least one effect".into()))?;
        let d = ensure_square(first)?;
        let mut sum = CMatrix::zeros(d, d);
        for (x, m) in effects.iter().enumerate() {
            ensure_dim(m, d)?;
            let res = hermitian_residual(m);
            if res > HERMITIAN_TOL * hs_norm(m).max(1.0) {
                return Err(Error::NotHermitian(res));
            }
            let min_eig = eig_hermitian(m)?.min();
            if min_eig < PSD_FLOOR {
                return Err(Error::EffectNotPsd { effect: x + 1, min_eig });
            }
            sum += m;
        }
        let res = hs_norm(&(sum - identity(d)));
        if res > COMPLETENESS_TOL {
            return Err(Error::Incomplete(res));
        }
        Ok(Povm { dim: d, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    /// Effect for a 1-based label.
    pub fn effect(&self, label: usize) -> &CMatrix {
        &self.effects[label - 1]
    }

    /// `{|x⟩⟨x|}`.
    pub fn canonical(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be positive".into()));
        }
        let effects = (0..d)
            .map(|x| {
                let mut m = CMatrix::zeros(d, d);
                m[(x, x)] = c64(1.0, 0.0);
                m
            })
            .collect();
        Ok(Povm { dim: d, effects })
    }

    /// Rank-one measurement in the orthonormal basis given by the columns of `u`.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let d = ensure_square(u)?;
        let res = linalg::orthonormality_residual(u);
        if res > 1e-9 {
            return Err(Error::NotOrthonormal(res));
        }
        let effects = (0..d).map(|j| outer(&u.column(j).into_owned())).collect();
        Ok(Povm { dim: d, effects })
    }

    /// `{(I − P)/2, (I + P)/2}` for a Pauli observable `P`.
    pub fn pauli(p: &CMatrix) -> Result<Self> {
        let d = ensure_square(p)?;
        let half = c64(0.5, 0.0);
        Povm::new(vec![(identity(d) - p) * half, (identity(d) + p) * half])
    }

    /// The trivial POVM `{I}`.
    pub fn trivial(d: usize) -> Result<Self> {
        Povm::new(vec![identity(d)])
    }

    /// Random k-outcome POVM: `M_x = S^{-1/2} G_x S^{-1/2}` with Wishart `G_x`.
    pub fn random<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidParameter("d and k must be positive".into()));
        }
        let gs: Vec<CMatrix> = (0..k)
            .map(|_| {
                let a = complex_gaussian_matrix(d, d, rng);
                hermitian_part(&(&a * a.adjoint()))
            })
            .collect();
        let s = gs.iter().fold(CMatrix::zeros(d, d), |acc, g| acc + g);
        let s_inv_half = hermitian_function(&s, |v| 1.0 / v.max(1e-300).sqrt())?;
        let mut effects: Vec<CMatrix> =
            gs.iter().map(|g| hermitian_part(&(&s_inv_half * g * &s_inv_half))).collect();
        // Push the rounding residual of the completeness relation into the last effect.
        let sum = effects.iter().fold(CMatrix::zeros(d, d), |acc, m| acc + m);
        let last = effects.last_mut().expect("k >= 1");
        *last += identity(d) - sum;
        *last = hermitian_part(last);
        Povm::new(effects)
    }

    pub fn to_json(&self) -> PovmJson {
        PovmJson { dim: self.dim, effects: self.effects.iter().map(matrix_to_json).collect() }
    }

    pub fn from_json(j: &PovmJson) -> Result<Self> {
        let effects =
            j.effects.iter().map(|m| matrix_from_json(m, j.dim)).collect::<Result<Vec<_>>>()?;
        Povm::new(effects)
    }
}

/// Haar-projector POVM: `Π_x` projects onto columns `r(x−1)..rx` of `u`, `r = d/k`.
pub fn haar_projector_povm(u: &CMatrix, k: usize) -> Result<Povm> {
    let d = ensure_square(u)?;
    if k == 0 || d % k != 0 {
        return Err(Error::InvalidParameter(format!("k = {k} does not divide d = {d}")));
    }
    ensure_power_of_two("k", k)?;
    let r = d / k;
    let effects = (0..k)
        .map(|x| {
            let block = u.columns(x * r, r);
            hermitian_part(&(block * block.adjoint()))
        })
        .collect();
    Povm::new(effects)
}

/// A probability vector over outcomes `1..=k` (stored 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// Draw a 1-based label.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        // u landed in the rounding gap at the top; return the last positive outcome.
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) + 1
    }
}

/// `Tr[ρM] = Σ_ij ρ_ij M_ji`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = c64(0.0, 0.0);
    for j in 0..d {
        for i in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Born's rule `p(x) = Tr[ρ M_x]`, with tiny negatives clipped and renormalized.
pub fn born_distribution(rho: &DensityMatrix, povm: &Povm) -> Result<OutcomeDistribution> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch { expected: povm.dim(), got: rho.dim() });
    }
    let mut probs = Vec::with_capacity(povm.k());
    for (x, m) in povm.effects().iter().enumerate() {
        let p = trace_product(rho.matrix(), m).re;
        if p < -BORN_CLIP {
            return Err(Error::NegativeProbability { outcome: x + 1, prob: p });
        }
        probs.push(p.max(0.0));
    }
    let s: f64 = probs.iter().sum();
    if s <= 0.0 {
        return Err(Error::Numerical("Born probabilities sum to zero".into()));
    }
    probs.iter_mut().for_each(|p| *p /= s);
    Ok(OutcomeDistribution { probs })
}

/// Budgeted access to copies of a hidden state; one outcome per copy.
#[derive(Debug, Clone)]
pub struct CopyOracle {
    rho: DensityMatrix,
    initial: u64,
    consumed: u64,
    rng: ChaCha8Rng,
}

impl CopyOracle {
    pub fn new(rho: DensityMatrix, budget: u64, seed: u64) -> Self {
        CopyOracle { rho, initial: budget, consumed: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn initial_budget(&self) -> u64 {
        self.initial
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.initial - self.consumed
    }

    fn reserve(&mut self, m: u64) -> Result<()> {
        if m > self.remaining() {
            return Err(if self.remaining() == 0 {
                Error::BudgetExhausted
            } else {
                Error::InsufficientCopies { need: m, have: self.remaining() }
            });
        }
        self.consumed += m;
        Ok(())
    }

    /// Measure one fresh copy; returns a 1-based label.
    pub fn measure(&mut self, povm: &Povm) -> Result<usize> {
        let dist = born_distribution(&self.rho, povm)?;
        self.reserve(1)?;
        Ok(dist.sample(&mut self.rng))
    }

    /// Measure `m` fresh copies with the same POVM, in order.
    pub fn measure_many(&mut self, povm: &Povm, m: u64) -> Result<Vec<usize>> {
        let dist = born_distribution(&self.rho, povm)?;
        self.reserve(m)?;
        Ok((0..m).map(|_| dist.sample(&mut self.rng)).collect())
    }

    /// Outcome counts of `m` fresh copies with the same POVM. Equal in law to
    /// tallying `measure_many`.
    pub fn measure_counts(&mut self, povm: &Povm, m: u64) -> Result<Vec<u64>> {
        let dist = born_distribution(&self.rho, povm)?;
        self.reserve(m)?;
        Ok(multinomial(m, &dist.probs, &mut self.rng))
    }
}

/// Fixed scheme: the whole POVM sequence exists before any measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedScheme {
    dim: usize,
    povms: Vec<Povm>,
}

impl FixedScheme {
    pub fn new(povms: Vec<Povm>) -> Result<Self> {
        let dim = povms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty measurement scheme".into()))?
            .dim();
        for p in &povms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        Ok(FixedScheme { dim, povms })
    }

    pub fn repeated(povm: Povm, n: usize) -> Result<Self> {
        FixedScheme::new(vec![povm; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }
}

pub type MeasurementPlan = Arc<dyn Fn(u64, usize) -> Result<Povm> + Send + Sync>;

/// Randomized non-adaptive scheme: a deterministic plan `(seed, i) → POVM`.
#[derive(Clone)]
pub struct RandomizedScheme {
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub plan: MeasurementPlan,
}

impl RandomizedScheme {
    pub fn povm(&self, i: usize) -> Result<Povm> {
        if i >= self.n {
            return Err(Error::InvalidParameter(format!("index {i} beyond scheme length {}", self.n)));
        }
        (self.plan)(self.seed, i)
    }

    /// Fix the seed, turning the scheme into an explicit sequence.
    pub fn realize(&self) -> Result<FixedScheme> {
        FixedScheme::new((0..self.n).map(|i| self.povm(i)).collect::<Result<Vec<_>>>()?)
    }
}

impl std::fmt::Debug for RandomizedScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RandomizedScheme")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum MeasurementScheme {
    Fixed(FixedScheme),
    Randomized(RandomizedScheme),
}

impl MeasurementScheme {
    pub fn dim(&self) -> usize {
        match self {
            MeasurementScheme::Fixed(s) => s.dim(),
            MeasurementScheme::Randomized(s) => s.dim,
        }
    }
}

// ---------------------------------------------------------------------------
// Pauli observables
// ---------------------------------------------------------------------------

/// A tensor product of `σ_I, σ_X, σ_Y, σ_Z` in symplectic form. Qubit 0 is the
/// most significant bit of a basis index. `σ_Y = [[0, i], [−i, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: u32,
    pub z: u32,
}

impl PauliString {
    /// String number `idx` in base-4 order (digits I, X, Y, Z; qubit 0 leading).
    pub fn from_index(n_qubits: usize, idx: usize) -> Self {
        let mut x = 0u32;
        let mut z = 0u32;
        for q in 0..n_qubits {
            let digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
            let bit = 1u32 << (n_qubits - 1 - q);
            match digit {
                1 => x |= bit,
                2 => {
                    x |= bit;
                    z |= bit
                }
                3 => z |= bit,
                _ => {}
            }
        }
        PauliString { n_qubits, x, z }
    }

    pub fn index(&self) -> usize {
        let mut idx = 0;
        for q in 0..self.n_qubits {
            let bit = 1u32 << (self.n_qubits - 1 - q);
            let digit = match (self.x & bit != 0, self.z & bit != 0) {
                (false, false) => 0,
                (true, false) => 1,
                (true, true) => 2,
                (false, true) => 3,
            };
            idx = idx * 4 + digit;
        }
        idx
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn label(&self) -> String {
        (0..self.n_qubits)
            .map(|q| {
                let bit = 1u32 << (self.n_qubits - 1 - q);
                match (self.x & bit != 0, self.z & bit != 0) {
                    (false, false) => 'I',
                    (true, false) => 'X',
                    (true, true) => 'Y',
                    (false, true) => 'Z',
                }
            })
            .collect()
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Column `b` has a single nonzero entry at row `b ⊕ x`; this is its value.
    #[inline]
    pub fn entry(&self, b: usize) -> C64 {
        let ny = (self.x & self.z).count_ones() % 4;
        // (−i)^ny
        let base = match ny {
            0 => c64(1.0, 0.0),
            1 => c64(0.0, -1.0),
            2 => c64(-1.0, 0.0),
            _ => c64(0.0, 1.0),
        };
        if (self.z & b as u32).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }

    #[inline]
    pub fn row_of(&self, b: usize) -> usize {
        b ^ self.x as usize
    }

    pub fn matrix(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            m[(self.row_of(b), b)] = self.entry(b);
        }
        m
    }

    /// `Tr[ρP]` in O(d).
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        let d = self.dim();
        let mut acc = c64(0.0, 0.0);
        for b in 0..d {
            acc += self.entry(b) * rho[(b, self.row_of(b))];
        }
        acc.re
    }

    /// `A += s·P`.
    pub fn add_scaled_to(&self, a: &mut CMatrix, s: f64) {
        for b in 0..self.dim() {
            a[(self.row_of(b), b)] += self.entry(b) * s;
        }
    }
}

/// The `4^N − 1` non-identity Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSet {
    pub n_qubits: usize,
    pub strings: Vec<PauliString>,
}

impl PauliSet {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 15 {
            return Err(Error::InvalidParameter(format!("unsupported qubit count {n_qubits}")));
        }
        let strings = (1..1usize << (2 * n_qubits))
            .map(|i| PauliString::from_index(n_qubits, i))
            .collect();
        Ok(PauliSet { n_qubits, strings })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        self.strings.iter().map(PauliString::matrix).collect()
    }

    pub fn povms(&self) -> Result<Vec<Povm>> {
        self.strings.iter().map(|p| Povm::pauli(&p.matrix())).collect()
    }
}

pub fn pauli_set(n_qubits: usize) -> Result<PauliSet> {
    PauliSet::new(n_qubits)
}

pub fn pauli_povm(p: &CMatrix) -> Result<Povm> {
    Povm::pauli(p)
}

/// `(1 + Tr[ρP])/2` for each non-identity `P`, in base-4 order.
pub fn pauli_probability_vector(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let d = rho.dim();
    ensure_power_of_two("d", d)?;
    let set = PauliSet::new(d.trailing_zeros() as usize)?;
    Ok(set.strings.iter().map(|p| 0.5 * (1.0 + p.expectation(rho.matrix()))).collect())
}

// ---------------------------------------------------------------------------
// Mutually unbiased bases
// ---------------------------------------------------------------------------

/// `d + 1` orthonormal bases, each stored as a unitary with the vectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily {
    pub dim: usize,
    pub bases: Vec<CMatrix>,
    /// The commuting Pauli class diagonalized by each basis.
    pub classes: Vec<Vec<PauliString>>,
}

impl MubFamily {
    pub fn vectors(&self) -> Vec<CVector> {
        self.bases
            .iter()
            .flat_map(|b| (0..b.ncols()).map(move |j| b.column(j).into_owned()))
            .collect()
    }

    pub fn povms(&self) -> Result<Vec<Povm>> {
        self.bases.iter().map(Povm::from_basis).collect()
    }

    /// Largest `| |⟨ψ_x^l|ψ_y^m⟩|² − 1/d |` over `l ≠ m`.
    pub fn unbiasedness_residual(&self) -> f64 {
        let d = self.dim as f64;
        let mut worst: f64 = 0.0;
        for (l, a) in self.bases.iter().enumerate() {
            for b in self.bases.iter().skip(l + 1) {
                let g = a.adjoint() * b;
                for z in g.iter() {
                    worst = worst.max((z.norm_sqr() - 1.0 / d).abs());
                }
            }
        }
        worst
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.bases.iter().map(linalg::orthonormality_residual).fold(0.0, f64::max)
    }

    /// Outcome law of the uniform mixture of all `d+1` bases, over `d(d+1)`
    /// outcomes indexed `l·d + x` (0-based): `⟨ψ_x^l|ρ|ψ_x^l⟩/(d+1)`.
    pub fn probability_vector(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: rho.dim() });
        }
        let scale = 1.0 / (self.dim + 1) as f64;
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1));
        for b in &self.bases {
            let rb = rho.matrix() * b;
            for j in 0..self.dim {
                out.push(b.column(j).dotc(&rb.column(j)).re * scale);
            }
        }
        Ok(out)
    }
}

fn symplectic_commute(a: u32, b: u32, n: usize) -> bool {
    let mask = (1u32 << n) - 1;
    let (ax, az) = (a >> n, a & mask);
    let (bx, bz) = (b >> n, b & mask);
    ((ax & bz).count_ones() + (az & bx).count_ones()) % 2 == 0
}

/// All Lagrangian subspaces of F₂^{2N}, each as a bitset over nonzero vectors.
fn lagrangian_subspaces(n: usize) -> Vec<u64> {
    let total = 1u32 << (2 * n);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut out = Vec::new();
    fn grow(
        n: usize,
        total: u32,
        span: Vec<u32>,
        gens: usize,
        seen: &mut HashSet<u64>,
        out: &mut Vec<u64>,
    ) {
        if gens == n {
            let mask = span.iter().filter(|&&v| v != 0).fold(0u64, |m, &v| m | 1u64 << v);
            if seen.insert(mask) {
                out.push(mask);
            }
            return;
        }
        for v in 1..total {
            if span.contains(&v) || !span.iter().all(|&s| symplectic_commute(s, v, n)) {
                continue;
            }
            let mut next = span.clone();
            next.extend(span.iter().map(|&s| s ^ v));
            grow(n, total, next, gens + 1, seen, out);
        }
    }
    grow(n, total, vec![0], 0, &mut seen, &mut out);
    out
}

fn exact_cover(target: u64, candidates: &[u64], chosen: &mut Vec<u64>, covered: u64) -> bool {
    if covered == target {
        return true;
    }
    let first = (target & !covered).trailing_zeros();
    for &c in candidates {
        if c & (1u64 << first) != 0 && c & covered == 0 {
            chosen.push(c);
            if exact_cover(target, candidates, chosen, covered | c) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Symplectic vector `(x | z)` → Pauli string.
fn pauli_from_symplectic(v: u32, n: usize) -> PauliString {
    let mask = (1u32 << n) - 1;
    PauliString { n_qubits: n, x: v >> n, z: v & mask }
}

/// Maximal MUB for `d = 2^N`, `N ∈ {1, 2, 3}`: the non-identity Pauli strings
/// are partitioned into `d+1` commuting classes and each class is diagonalized
/// jointly. The all-Z class comes first.
pub fn build_mub(n_qubits: usize) -> Result<MubFamily> {
    if !(1..=3).contains(&n_qubits) {
        return Err(Error::Unsupported(format!("MUB construction for N = {n_qubits}")));
    }
    let n = n_qubits;
    let d = 1usize << n;
    let subspaces = lagrangian_subspaces(n);
    let z_class: u64 = (1u32..(1 << n)).fold(0u64, |m, z| m | 1u64 << z);
    let target: u64 = (1u32..(1 << (2 * n))).fold(0u64, |m, v| m | 1u64 << v);
    let rest: Vec<u64> = subspaces.iter().copied().filter(|&s| s & z_class == 0).collect();
    let mut chosen = vec![z_class];
    if !exact_cover(target, &rest, &mut chosen, z_class) {
        return Err(Error::Numerical("no Pauli partition found".into()));
    }
    let members = |mask: u64| -> Vec<PauliString> {
        let mut ps: Vec<PauliString> = (1..64u32)
            .filter(|v| mask & (1u64 << v) != 0)
            .map(|v| pauli_from_symplectic(v, n))
            .collect();
        ps.sort_by_key(PauliString::index);
        ps
    };
    let mut classes: Vec<Vec<PauliString>> = chosen.iter().map(|&m| members(m)).collect();
    classes[1..].sort_by_key(|c| c[0].index());

    let mut bases = Vec::with_capacity(d + 1);
    for class in &classes {
        bases.push(joint_eigenbasis(class, n)?);
    }
    let fam = MubFamily { dim: d, bases, classes };
    let orth = fam.orthonormality_residual();
    if orth > 1e-9 {
        return Err(Error::NotOrthonormal(orth));
    }
    Ok(fam)
}

/// Joint eigenbasis of a maximal commuting class: for each sign pattern on `N`
/// independent generators, the rank-one projector `Π_j (I + s_j G_j)/2`.
fn joint_eigenbasis(class: &[PauliString], n: usize) -> Result<CMatrix> {
    let d = 1usize << n;
    // Pick N independent generators greedily (symplectic vectors over F₂).
    let mut gens: Vec<PauliString> = Vec::new();
    let mut span: Vec<u32> = vec![0];
    for p in class {
        let v = (p.x << n) | p.z;
        if !span.contains(&v) {
            span.extend(span.clone().iter().map(|&s| s ^ v));
            gens.push(*p);
        }
        if gens.len() == n {
            break;
        }
    }
    let gmats: Vec<CMatrix> = gens.iter().map(PauliString::matrix).collect();
    let half = c64(0.5, 0.0);
    let mut basis = CMatrix::zeros(d, d);
    for s in 0..d {
        let mut proj = identity(d);
        for (j, g) in gmats.iter().enumerate() {
            let sign = if (s >> (n - 1 - j)) & 1 == 0 { 1.0 } else { -1.0 };
            proj *= (identity(d) + g * c64(sign, 0.0)) * half;
        }
        let (col, norm) = (0..d)
            .map(|j| (j, proj.column(j).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("d >= 1");
        if norm < 1e-6 {
            return Err(Error::Numerical("empty joint eigenspace".into()));
        }
        let v = proj.column(col) / c64(norm, 0.0);
        basis.set_column(s, &v);
    }
    Ok(basis)
}

/// `‖(1/m)Σ(|ψ⟩⟨ψ|)^{⊗2} − (I + SWAP)/(d(d+1))‖_HS`.
pub fn two_design_check(vectors: &[CVector]) -> Result<f64> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty vector set".into()))?;
    let d = first.len();
    let mut acc = CMatrix::zeros(d * d, d * d);
    for v in vectors {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        let n = v.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("vector has norm {n}, expected 1")));
        }
        let p = outer(v);
        acc += p.kronecker(&p);
    }
    acc /= c64(vectors.len() as f64, 0.0);
    let mut target = CMatrix::identity(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            // SWAP |i⟩|j⟩ = |j⟩|i⟩ with |i⟩|j⟩ ↦ index i·d + j.
            target[(j * d + i, i * d + j)] += c64(1.0, 0.0);
        }
    }
    target /= c64((d * (d + 1)) as f64, 0.0);
    Ok(hs_norm(&(acc - target)))
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// Row-major list of rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub effects: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub rho: MatrixJson,
}

pub fn matrix_to_json(a: &CMatrix) -> MatrixJson {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson, dim: usize) -> Result<CMatrix> {
    if m.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.len() });
    }
    let mut out = CMatrix::zeros(dim, dim);
    for (i, row) in m.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
        }
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::Parse(format!("non-finite entry at ({i}, {j})")));
            }
            out[(i, j)] = c64(z[0], z[1]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{schatten_norm, Schatten};
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn standard_states() {
        let m = DensityMatrix::mixed(2).unwrap();
        assert_eq!(m.matrix()[(0, 0)], c64(0.5, 0.0));
        assert_eq!(m.matrix()[(0, 1)], c64(0.0, 0.0));
        let p = DensityMatrix::plus(4).unwrap();
        assert!(p.matrix().iter().all(|z| (*z - c64(0.25, 0.0)).norm() < 1e-15));
        assert!(DensityMatrix::plus(3).is_err());
        let mut r = rng(1);
        for _ in 0..1000 {
            let s = DensityMatrix::random(4, &mut r).unwrap();
            assert!(DensityMatrix::new(s.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn povm_validation() {
        let c = Povm::canonical(4).unwrap();
        assert_eq!(c.k(), 4);
        assert!(Povm::new(c.effects().to_vec()).is_ok());
        let z = PauliString::from_index(1, 3).matrix();
        assert_eq!(Povm::pauli(&z).unwrap().k(), 2);
        assert!(matches!(Povm::new(vec![identity(2), identity(2)]), Err(Error::Incomplete(_))));
        let mut bad = identity(2);
        bad[(1, 1)] = c64(-0.5, 0.0);
        let mut comp = zeros2();
        comp[(1, 1)] = c64(1.5, 0.0);
        assert!(matches!(Povm::new(vec![bad, comp]), Err(Error::EffectNotPsd { effect: 1, .. })));
    }

    fn zeros2() -> CMatrix {
        CMatrix::zeros(2, 2)
    }

    #[test]
    fn born_examples() {
        let mm = DensityMatrix::mixed(2).unwrap();
        let p = born_distribution(&mm, &Povm::canonical(2).unwrap()).unwrap();
        assert_eq!(p.probs, vec![0.5, 0.5]);
        let plus = DensityMatrix::plus(4).unwrap();
        let p = born_distribution(&plus, &Povm::canonical(4).unwrap()).unwrap();
        assert!(p.probs.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let zero = DensityMatrix::basis(2, 0).unwrap();
        let z = PauliString::from_index(1, 3).matrix();
        let p = born_distribution(&zero, &Povm::pauli(&z).unwrap()).unwrap();
        // Label 1 is (I − Z)/2; |0⟩ is the +1 eigenvector so label 2 carries the mass.
        assert!((p.probs[1] - 0.5 * (1.0 + trace_product(zero.matrix(), &z).re)).abs() < 1e-15);
        assert!((p.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_sampling_and_budget() {
        let mm = DensityMatrix::mixed(2).unwrap();
        let c = Povm::canonical(2).unwrap();
        let mut o = CopyOracle::new(mm.clone(), 100_000, 7);
        let mut ones = 0u64;
        for _ in 0..100_000 {
            let x = o.measure(&c).unwrap();
            assert!((1..=2).contains(&x));
            ones += (x == 1) as u64;
        }
        let f = ones as f64 / 1e5;
        assert!((f - 0.5).abs() <= 4.0 * (0.25f64 / 1e5).sqrt());
        assert_eq!(o.consumed() + o.remaining(), o.initial_budget());
        assert_eq!(o.measure(&c), Err(Error::BudgetExhausted));
        let mut o = CopyOracle::new(mm, 5, 1);
        assert!(matches!(o.measure_many(&c, 6), Err(Error::InsufficientCopies { .. })));
        assert_eq!(o.measure_counts(&c, 5).unwrap().iter().sum::<u64>(), 5);
        assert_eq!(o.remaining(), 0);
    }

    #[test]
    fn pauli_single_qubit() {
        let s = pauli_set(1).unwrap();
        let labels: Vec<String> = s.strings.iter().map(PauliString::label).collect();
        assert_eq!(labels, ["X", "Y", "Z"]);
        let m = s.matrices();
        let i = c64(0.0, 1.0);
        assert_eq!(m[0][(0, 1)], c64(1.0, 0.0));
        assert_eq!(m[1][(0, 1)], i);
        assert_eq!(m[1][(1, 0)], -i);
        assert_eq!(m[2][(1, 1)], c64(-1.0, 0.0));
        assert_eq!(pauli_set(2).unwrap().len(), 15);
    }

    #[test]
    fn pauli_orthogonality() {
        for n in 1..=3 {
            let s = pauli_set(n).unwrap();
            let d = s.dim() as f64;
            let m = s.matrices();
            for (a, pa) in m.iter().enumerate() {
                assert!(linalg::trace(pa).norm() < 1e-10);
                assert!(hs_norm(&(pa * pa - identity(s.dim()))) < 1e-10);
                for (b, pb) in m.iter().enumerate() {
                    let t = trace_product(pa, pb);
                    let expect = if a == b { d } else { 0.0 };
                    assert!((t - c64(expect, 0.0)).norm() < 1e-10);
                }
            }
            for (a, pa) in s.strings.iter().enumerate() {
                for pb in &s.strings[a..] {
                    let comm = &m[pa.index() - 1] * &m[pb.index() - 1]
                        - &m[pb.index() - 1] * &m[pa.index() - 1];
                    assert_eq!(pa.commutes(pb), hs_norm(&comm) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_probability_examples() {
        let mm = DensityMatrix::mixed(4).unwrap();
        assert!(pauli_probability_vector(&mm).unwrap().iter().all(|p| (p - 0.5).abs() < 1e-15));
        let a = pauli_probability_vector(&DensityMatrix::basis(2, 0).unwrap()).unwrap();
        let b = pauli_probability_vector(&DensityMatrix::basis(2, 1).unwrap()).unwrap();
        let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((dist - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_expectation_matches_dense() {
        let mut r = rng(3);
        let s = pauli_set(3).unwrap();
        let rho = DensityMatrix::random(8, &mut r).unwrap();
        for p in &s.strings {
            let dense = trace_product(rho.matrix(), &p.matrix()).re;
            assert!((p.expectation(rho.matrix()) - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn mub_single_qubit_is_z_x_y() {
        let f = build_mub(1).unwrap();
        let labels: Vec<String> = f.classes.iter().map(|c| c[0].label()).collect();
        assert_eq!(labels, ["Z", "X", "Y"]);
        assert!(f.unbiasedness_residual() < 1e-12);
        assert!(two_design_check(&f.vectors()).unwrap() < 1e-9);
    }

    #[test]
    fn mub_families() {
        for n in 1..=3 {
            let f = build_mub(n).unwrap();
            let d = 1 << n;
            assert_eq!(f.bases.len(), d + 1);
            assert!(f.classes.iter().all(|c| c.len() == d - 1));
            assert!(f.orthonormality_residual() <= 1e-9);
            assert!(f.unbiasedness_residual() <= 1e-9);
            assert!(two_design_check(&f.vectors()).unwrap() <= 1e-9);
        }
        assert!(build_mub(4).is_err());
    }

    #[test]
    fn single_basis_is_not_two_design() {
        let v: Vec<CVector> = (0..4)
            .map(|j| {
                let mut e = CVector::zeros(4);
                e[j] = c64(1.0, 0.0);
                e
            })
            .collect();
        assert!(two_design_check(&v).unwrap() > 0.01);
        let half = vec![v[0].clone() * c64(2.0, 0.0)];
        assert!(two_design_check(&half).is_err());
    }

    #[test]
    fn haar_projector_examples() {
        let p = haar_projector_povm(&identity(4), 2).unwrap();
        assert_eq!(p.effect(1)[(0, 0)], c64(1.0, 0.0));
        assert_eq!(p.effect(1)[(1, 1)], c64(1.0, 0.0));
        assert_eq!(p.effect(1)[(2, 2)], c64(0.0, 0.0));
        assert_eq!(p.effect(2)[(3, 3)], c64(1.0, 0.0));
        let mut r = rng(4);
        let u = sample_haar_unitary(8, &mut r);
        for k in [1, 2, 4, 8] {
            let p = haar_projector_povm(&u, k).unwrap();
            for m in p.effects() {
                assert!((linalg::trace(m).re - (8 / k) as f64).abs() < 1e-10);
            }
        }
        let full = haar_projector_povm(&u, 8).unwrap();
        let basis = Povm::from_basis(&u).unwrap();
        for (a, b) in full.effects().iter().zip(basis.effects()) {
            assert!(hs_norm(&(a - b)) < 1e-12);
        }
        assert!(haar_projector_povm(&u, 3).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut r = rng(5);
        let p = Povm::random(2, 3, &mut r).unwrap();
        let s = serde_json::to_string(&p.to_json()).unwrap();
        let back = Povm::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(p, back);
        let rho = DensityMatrix::random(2, &mut r).unwrap();
        let back = DensityMatrix::from_json(&rho.to_json()).unwrap();
        assert_eq!(rho, back);
    }

    #[test]
    fn randomized_scheme_realizes_deterministically() {
        let plan: MeasurementPlan = Arc::new(|seed, i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            haar_projector_povm(&sample_haar_unitary(4, &mut r), 2)
        });
        let s = RandomizedScheme { dim: 4, n: 3, seed: 11, plan };
        assert_eq!(s.realize().unwrap(), s.realize().unwrap());
        assert!(s.povm(3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn born_sums_to_one(seed in any::<u64>(), dexp in 1u32..4, k in 1usize..6) {
            let d = 1usize << dexp;
            let mut r = rng(seed);
            let rho = DensityMatrix::random(d, &mut r).unwrap();
            let povm = Povm::random(d, k, &mut r).unwrap();
            let p = born_distribution(&rho, &povm).unwrap();
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            prop_assert!(p.probs.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn pauli_distance_identity(seed in any::<u64>(), n in 1usize..4) {
            let d = 1usize << n;
            let mut r = rng(seed);
            let a = DensityMatrix::random(d, &mut r).unwrap();
            let b = DensityMatrix::random(d, &mut r).unwrap();
            let pa = pauli_probability_vector(&a).unwrap();
            let pb = pauli_probability_vector(&b).unwrap();
            let lhs: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let rhs = (d as f64).sqrt() / 2.0 * schatten_norm(&(a.matrix() - b.matrix()), Schatten::Two);
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn oracle_accounting(seed in any::<u64>(), budget in 0u64..50, asks in proptest::collection::vec(0u64..10, 0..8)) {
            let mut o = CopyOracle::new(DensityMatrix::mixed(2).unwrap(), budget, seed);
            let c = Povm::canonical(2).unwrap();
            for m in asks {
                let before = o.remaining();
                let res = o.measure_many(&c, m);
                if m <= before {
                    prop_assert_eq!(res.unwrap().len() as u64, m);
                } else {
                    prop_assert!(res.is_err());
                    prop_assert_eq!(o.remaining(), before);
                }
                prop_assert_eq!(o.consumed() + o.remaining(), budget);
            }
        }
    }
}
