//! Binary perturbations of the maximally mixed state, adversarial bases
//! against fixed schemes, operator-norm concentration and the classical
//! Paninski analogue.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    self, c64, hermitian_residual, hs_inner, identity, schatten_norm_hermitian, CMatrix, Schatten,
};
use crate::mic::{average_mic, mic_eigenbasis, MicEigenbasis};
use crate::states::{ensure_power_of_two, DensityMatrix, FixedScheme, PauliString};
use crate::{Error, Result};

/// Constant from the operator-norm corollary, `c ≤ 10√2`.
pub const DEFAULT_C: f64 = 10.0 * std::f64::consts::SQRT_2;
/// `κ₁` for the concentration experiment.
pub const KAPPA_1: f64 = 10.0;

/// Orthonormal Hermitian family `V_1..V_{d²}` with `V_{d²} = I/√d`.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationBasis {
    /// `{P/√d}` in base-4 Pauli order, then `I/√d`. Kept implicit so large `d`
    /// never materializes `d²` dense matrices.
    Pauli { n_qubits: usize },
    Explicit(Vec<CMatrix>),
}

impl PerturbationBasis {
    pub fn pauli(d: usize) -> Result<Self> {
        ensure_power_of_two("d", d)?;
        if d < 2 {
            return Err(Error::InvalidParameter("Pauli basis needs d >= 2".into()));
        }
        Ok(PerturbationBasis::Pauli { n_qubits: d.trailing_zeros() as usize })
    }

    /// Validates orthonormality, Hermiticity and the pinned identity.
    pub fn explicit(vectors: Vec<CMatrix>) -> Result<Self> {
        let d = vectors.first().map(|v| v.nrows()).unwrap_or(0);
        if d == 0 || vectors.len() != d * d {
            return Err(Error::InvalidParameter(format!(
                "basis must have d² elements, got {}",
                vectors.len()
            )));
        }
        let mut worst: f64 = 0.0;
        for (i, a) in vectors.iter().enumerate() {
            linalg::ensure_dim(a, d)?;
            if hermitian_residual(a) > 1e-10 {
                return Err(Error::NotHermitian(hermitian_residual(a)));
            }
            for (j, b) in vectors.iter().enumerate().skip(i) {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((hs_inner(a, b) - c64(t, 0.0)).norm());
            }
        }
        if worst > 1e-8 {
            return Err(Error::NotOrthonormal(worst));
        }
        let id = identity(d) * c64(1.0 / (d as f64).sqrt(), 0.0);
        let pin = linalg::hs_norm(&(vectors.last().expect("nonempty") - id));
        if pin > 1e-8 {
            return Err(Error::InvalidParameter(format!("last basis element is not I/√d ({pin:.2e})")));
        }
        Ok(PerturbationBasis::Explicit(vectors))
    }

    pub fn from_eigenbasis(e: &MicEigenbasis) -> Result<Self> {
        PerturbationBasis::explicit(e.vectors.clone())
    }

    pub fn dim(&self) -> usize {
        match self {
            PerturbationBasis::Pauli { n_qubits } => 1 << n_qubits,
            PerturbationBasis::Explicit(v) => v[0].nrows(),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            PerturbationBasis::Pauli { .. } => "pauli",
            PerturbationBasis::Explicit(_) => "explicit",
        }
    }

    /// `A += s·V_i` for 0-based `i < d² − 1`.
    pub fn add_scaled(&self, i: usize, s: f64, a: &mut CMatrix) {
        match self {
            PerturbationBasis::Pauli { n_qubits } => {
                let d = (1usize << n_qubits) as f64;
                PauliString::from_index(*n_qubits, i + 1).add_scaled_to(a, s / d.sqrt());
            }
            PerturbationBasis::Explicit(v) => *a += &v[i] * c64(s, 0.0),
        }
    }

    pub fn element(&self, i: usize) -> CMatrix {
        let d = self.dim();
        let mut a = CMatrix::zeros(d, d);
        if i + 1 == d * d {
            return identity(d) * c64(1.0 / (d as f64).sqrt(), 0.0);
        }
        self.add_scaled(i, 1.0, &mut a);
        a
    }

    /// `Σ_{i<ℓ} z_i V_i`.
    pub fn signed_sum(&self, z: &[i8]) -> CMatrix {
        let d = self.dim();
        let mut w = CMatrix::zeros(d, d);
        for (i, &zi) in z.iter().enumerate() {
            self.add_scaled(i, zi as f64, &mut w);
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub basis_id: String,
    pub ell: usize,
    pub eps: f64,
    pub c: f64,
    pub z: Vec<i8>,
    pub seed: Option<u64>,
    pub delta_raw: CMatrix,
    /// `a_z = min{1, 1/(d‖Δ_z‖_∞)}`.
    pub clip: f64,
    pub delta_clipped: CMatrix,
    pub sigma: DensityMatrix,
}

impl HardInstance {
    pub fn dim(&self) -> usize {
        self.delta_raw.nrows()
    }

    pub fn clipped(&self) -> bool {
        self.clip < 1.0
    }

    pub fn to_json(&self) -> HardInstanceJson {
        HardInstanceJson {
            basis: self.basis_id.clone(),
            ell: self.ell,
            eps: self.eps,
            c: self.c,
            z: self.z.clone(),
            seed: self.seed,
        }
    }
}

/// Replay record for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceJson {
    pub basis: String,
    pub ell: usize,
    pub eps: f64,
    pub c: f64,
    pub z: Vec<i8>,
    pub seed: Option<u64>,
}

impl HardInstanceJson {
    /// Rebuild on a Pauli basis of dimension `d`.
    pub fn replay_pauli(&self, d: usize) -> Result<HardInstance> {
        if self.basis != "pauli" {
            return Err(Error::Unsupported(format!("replay of basis '{}'", self.basis)));
        }
        let mut h = build_perturbation(&PerturbationBasis::pauli(d)?, self.ell, self.eps, self.c, &self.z)?;
        h.seed = self.seed;
        Ok(h)
    }
}

fn check_ell(d: usize, ell: usize) -> Result<()> {
    let lo = (d * d).div_ceil(2);
    if ell < lo || ell > d * d - 1 {
        return Err(Error::InvalidParameter(format!("ell = {ell} outside [{lo}, {}]", d * d - 1)));
    }
    Ok(())
}

/// `Δ_z = (cε/√d)(1/√ℓ) Σ z_i V_i`, clipped to `‖Δ̄_z‖_∞ ≤ 1/d`.
pub fn build_perturbation(
    basis: &PerturbationBasis,
    ell: usize,
    eps: f64,
    c: f64,
    z: &[i8],
) -> Result<HardInstance> {
    let d = basis.dim();
    check_ell(d, ell)?;
    if z.len() != ell || z.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter("z must be a ±1 vector of length ell".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) || !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("need eps >= 0 and c > 0 (eps = {eps}, c = {c})")));
    }
    let df = d as f64;
    let scale = c * eps / df.sqrt() / (ell as f64).sqrt();
    let delta_raw = basis.signed_sum(z) * c64(scale, 0.0);
    let op = schatten_norm_hermitian(&delta_raw, Schatten::Inf)?;
    let clip = if op * df > 1.0 { 1.0 / (df * op) } else { 1.0 };
    let delta_clipped = &delta_raw * c64(clip, 0.0);
    let sigma = DensityMatrix::new(identity(d) * c64(1.0 / df, 0.0) + &delta_clipped)?;
    Ok(HardInstance {
        basis_id: basis.id().to_string(),
        ell,
        eps,
        c,
        z: z.to_vec(),
        seed: None,
        delta_raw,
        clip,
        delta_clipped,
        sigma,
    })
}

pub fn random_signs<R: Rng + ?Sized>(ell: usize, rng: &mut R) -> Vec<i8> {
    (0..ell).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

/// Draw `z` uniformly from `{−1, 1}^ℓ` and build the instance.
pub fn sample_perturbation<R: Rng + ?Sized>(
    basis: &PerturbationBasis,
    ell: usize,
    eps: f64,
    c: f64,
    rng: &mut R,
) -> Result<HardInstance> {
    let z = random_signs(ell, rng);
    build_perturbation(basis, ell, eps, c, &z)
}

/// Eigenbasis of the scheme's average channel, smallest eigenvalues first
/// among traceless directions, `I/√d` last.
pub fn adversarial_basis(scheme: &FixedScheme) -> Result<MicEigenbasis> {
    mic_eigenbasis(&average_mic(scheme)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceReport {
    pub valid_state: bool,
    /// `‖Δ̄_z‖₁ ≥ ε`.
    pub far: bool,
    /// `‖Δ_z‖_∞ ≤ 1/d`, i.e. no clipping was needed.
    pub raw_within_op_bound: bool,
    pub trace_distance: f64,
    pub raw_op_norm: f64,
}

pub fn validate_hard_instance(h: &HardInstance, eps: f64) -> Result<HardInstanceReport> {
    let d = h.dim();
    let valid_state = DensityMatrix::new(h.sigma.matrix().clone()).is_ok();
    let tn = schatten_norm_hermitian(&h.delta_clipped, Schatten::One)?;
    let op = schatten_norm_hermitian(&h.delta_raw, Schatten::Inf)?;
    Ok(HardInstanceReport {
        valid_state,
        far: tn >= eps && tn > 0.0,
        raw_within_op_bound: op <= 1.0 / d as f64 + 1e-10,
        trace_distance: tn,
        raw_op_norm: op,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub ell: usize,
    pub trials: usize,
    /// Largest `‖W‖_∞/√d` seen.
    pub max_ratio: f64,
    /// Fraction of trials with `‖W‖_∞ > κ√d`.
    pub tail_fraction: f64,
    pub kappa: f64,
}

/// `W = Σ_{i≤ℓ} z_i V_i` for random signs; records `‖W‖_∞/√d`.
pub fn opnorm_concentration_experiment<R: Rng + ?Sized>(
    basis: &PerturbationBasis,
    ell: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ConcentrationReport> {
    let d = basis.dim();
    if ell == 0 || ell > d * d - 1 {
        return Err(Error::InvalidParameter(format!("ell = {ell} outside [1, d² − 1]")));
    }
    let sd = (d as f64).sqrt();
    let mut max_ratio: f64 = 0.0;
    let mut over = 0usize;
    for _ in 0..trials {
        let w = basis.signed_sum(&random_signs(ell, rng));
        let ratio = schatten_norm_hermitian(&w, Schatten::Inf)? / sd;
        max_ratio = max_ratio.max(ratio);
        over += (ratio > KAPPA_1) as usize;
    }
    Ok(ConcentrationReport {
        d,
        ell,
        trials,
        max_ratio,
        tail_fraction: if trials == 0 { 0.0 } else { over as f64 / trials as f64 },
        kappa: KAPPA_1,
    })
}

/// `p_z(2t−1) = (1 + cεz_t)/d`, `p_z(2t) = (1 − cεz_t)/d`.
pub fn paninski_instance(d: usize, eps: f64, z: &[i8], c: f64) -> Result<Vec<f64>> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("d = {d} must be even")));
    }
    if z.len() != d / 2 || z.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter("z must be a ±1 vector of length d/2".into()));
    }
    if c * eps > 1.0 || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("c·eps = {} outside [0, 1]", c * eps)));
    }
    let df = d as f64;
    Ok(z.iter()
        .flat_map(|&s| {
            let t = c * eps * s as f64;
            [(1.0 + t) / df, (1.0 - t) / df]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{born_distribution, Povm};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn eps_zero_gives_mixed_state() {
        let b = PerturbationBasis::pauli(4).unwrap();
        let h = sample_perturbation(&b, 8, 0.0, DEFAULT_C, &mut rng(1)).unwrap();
        assert_eq!(h.sigma, DensityMatrix::mixed(4).unwrap());
        let rep = validate_hard_instance(&h, 0.0).unwrap();
        assert!(rep.valid_state && !rep.far);
    }

    #[test]
    fn pauli_instance_norms() {
        let b = PerturbationBasis::pauli(4).unwrap();
        let mut r = rng(2);
        for _ in 0..50 {
            let h = sample_perturbation(&b, 8, 0.004, DEFAULT_C, &mut r).unwrap();
            let hs = linalg::hs_norm(&h.delta_raw);
            assert!((hs - DEFAULT_C * 0.004 / 2.0).abs() <= 1e-9);
            assert!(linalg::trace(&h.delta_raw).norm() <= 1e-10);
            let op = schatten_norm_hermitian(&h.delta_raw, Schatten::Inf).unwrap();
            assert_eq!(h.clipped(), op > 0.25);
            assert!(schatten_norm_hermitian(&h.delta_clipped, Schatten::Inf).unwrap() <= 0.25 + 1e-10);
        }
    }

    #[test]
    fn clip_engages_only_when_needed() {
        let b = PerturbationBasis::pauli(2).unwrap();
        let z = [1i8, 1];
        let small = build_perturbation(&b, 2, 0.01, 1.0, &z).unwrap();
        assert!(!small.clipped());
        let big = build_perturbation(&b, 2, 1.0, DEFAULT_C, &z).unwrap();
        assert!(big.clipped());
        let op = schatten_norm_hermitian(&big.delta_clipped, Schatten::Inf).unwrap();
        assert!((op - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ell_and_sign_validation() {
        let b = PerturbationBasis::pauli(4).unwrap();
        assert!(build_perturbation(&b, 7, 0.1, 1.0, &[1; 7]).is_err());
        assert!(build_perturbation(&b, 16, 0.1, 1.0, &[1; 16]).is_err());
        assert!(build_perturbation(&b, 8, 0.1, 1.0, &[1, 1, 1, 1, 1, 1, 1, 0]).is_err());
    }

    #[test]
    fn explicit_basis_validation() {
        let b = PerturbationBasis::pauli(2).unwrap();
        let v: Vec<CMatrix> = (0..4).map(|i| b.element(i)).collect();
        assert!(PerturbationBasis::explicit(v.clone()).is_ok());
        let mut bad = v.clone();
        bad[0] = &bad[0] * c64(2.0, 0.0);
        assert!(matches!(PerturbationBasis::explicit(bad), Err(Error::NotOrthonormal(_))));
        let mut swapped = v;
        swapped.swap(0, 3);
        assert!(PerturbationBasis::explicit(swapped).is_err());
    }

    #[test]
    fn adversarial_basis_fools_canonical_scheme() {
        let scheme = FixedScheme::repeated(Povm::canonical(2).unwrap(), 3).unwrap();
        let e = adversarial_basis(&scheme).unwrap();
        assert!(e.values[0].abs() < 1e-12 && e.values[1].abs() < 1e-12);
        let b = PerturbationBasis::from_eigenbasis(&e).unwrap();
        let h = build_perturbation(&b, 2, 0.2, 1.0, &[1, 1]).unwrap();
        let p = born_distribution(&h.sigma, &Povm::canonical(2).unwrap()).unwrap();
        assert!(p.probs.iter().all(|x| (x - 0.5).abs() <= 1e-14));
    }

    #[test]
    fn adversarial_basis_full_rank_for_mub() {
        let mub = crate::states::build_mub(1).unwrap();
        let scheme = FixedScheme::new(mub.povms().unwrap()).unwrap();
        let e = adversarial_basis(&scheme).unwrap();
        assert!(e.values[0] > 1e-3);
    }

    #[test]
    fn concentration_single_term_is_deterministic() {
        let b = PerturbationBasis::pauli(8).unwrap();
        let rep = opnorm_concentration_experiment(&b, 1, 20, &mut rng(3)).unwrap();
        let expected = 1.0 / 8f64.sqrt() / 8f64.sqrt();
        assert!((rep.max_ratio - expected).abs() < 1e-12);
        assert_eq!(rep.tail_fraction, 0.0);
    }

    #[test]
    fn paninski_examples() {
        let p = paninski_instance(4, 0.1, &[1, 1], 1.0).unwrap();
        let expect = [0.275, 0.225, 0.275, 0.225];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let u = paninski_instance(6, 0.0, &[1, -1, 1], 3.0).unwrap();
        assert!(u.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
        assert!(paninski_instance(4, 0.6, &[1, 1], 2.0).is_err());
        assert!(paninski_instance(5, 0.1, &[1, 1], 1.0).is_err());
    }

    #[test]
    fn json_replay_is_bitwise() {
        let b = PerturbationBasis::pauli(4).unwrap();
        let mut h = sample_perturbation(&b, 10, 0.05, 2.0, &mut rng(4)).unwrap();
        h.seed = Some(4);
        let j: HardInstanceJson =
            serde_json::from_str(&serde_json::to_string(&h.to_json()).unwrap()).unwrap();
        assert_eq!(j.replay_pauli(4).unwrap(), h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn instances_are_valid_and_reproducible(seed in any::<u64>(), n in 1usize..4, eps in 0.0f64..1.0, c in 0.1f64..20.0) {
            let d = 1usize << n;
            let b = PerturbationBasis::pauli(d).unwrap();
            let ell = d * d / 2;
            let h1 = sample_perturbation(&b, ell, eps, c, &mut rng(seed)).unwrap();
            let h2 = sample_perturbation(&b, ell, eps, c, &mut rng(seed)).unwrap();
            prop_assert_eq!(&h1, &h2);
            prop_assert!(validate_hard_instance(&h1, eps).unwrap().valid_state);
            prop_assert!(linalg::trace(&h1.delta_raw).norm() <= 1e-10);
            // Δ lies in span{V_1..V_ℓ}.
            for i in ell..d * d {
                prop_assert!(hs_inner(&b.element(i), &h1.delta_raw).norm() <= 1e-10);
            }
        }

        #[test]
        fn paninski_tv_is_half_c_eps(z in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 1..8), ce in 0.0f64..1.0) {
            let d = 2 * z.len();
            let p = paninski_instance(d, ce, &z, 1.0).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let tv: f64 = p.iter().map(|x| (x - 1.0 / d as f64).abs()).sum::<f64>() / 2.0;
            prop_assert!((tv - ce / 2.0).abs() < 1e-12);
        }
    }
}
