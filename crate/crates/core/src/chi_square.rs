//! Exact enumeration of joint outcome laws of fixed schemes and brute-force
//! checks of the chi-square identities behind the lower bounds.

use serde::{Deserialize, Serialize};

use crate::hard_instances::{adversarial_basis, build_perturbation, PerturbationBasis};
use crate::linalg::{c64, identity, vectorize};
use crate::mic::mic_matrix;
use crate::states::{born_distribution, trace_product, DensityMatrix, FixedScheme, Povm};
use crate::{Error, Result};

/// Largest enumerable joint outcome space.
pub const OUTCOME_CAP: u128 = 1_000_000;
/// Largest enumerable sign-vector space.
pub const SIGN_CAP: u128 = 256;
/// A fixed scheme must reach this chi-square to have a chance at 2/3 success.
pub const GAME_THRESHOLD: f64 = 2.0 / 25.0;

/// Law of all `n` outcomes, flattened with copy 1 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcomeLaw {
    pub ks: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointOutcomeLaw {
    pub fn n(&self) -> usize {
        self.ks.len()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// 0-based outcome digits of a flat index.
    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.ks.len()];
        for i in (0..self.ks.len()).rev() {
            out[i] = idx % self.ks[i];
            idx /= self.ks[i];
        }
        out
    }
}

fn outcome_space(scheme: &FixedScheme) -> Result<(Vec<usize>, usize)> {
    let ks: Vec<usize> = scheme.povms().iter().map(Povm::k).collect();
    let size: u128 = ks.iter().map(|&k| k as u128).product();
    if size > OUTCOME_CAP {
        return Err(Error::EnumerationCap { size, cap: OUTCOME_CAP });
    }
    Ok((ks, size as usize))
}

/// Mixed-radix odometer over all outcome strings.
fn for_each_string(ks: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = ks.iter().product();
    let mut digits = vec![0usize; ks.len()];
    for idx in 0..total {
        f(idx, &digits);
        for i in (0..ks.len()).rev() {
            digits[i] += 1;
            if digits[i] < ks[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

pub fn enumerate_outcome_law(scheme: &FixedScheme, rho: &DensityMatrix) -> Result<JointOutcomeLaw> {
    let (ks, size) = outcome_space(scheme)?;
    let per: Vec<Vec<f64>> = scheme
        .povms()
        .iter()
        .map(|p| born_distribution(rho, p).map(|d| d.probs))
        .collect::<Result<_>>()?;
    let mut probs = vec![0.0; size];
    for_each_string(&ks, |idx, x| {
        probs[idx] = x.iter().enumerate().map(|(i, &xi)| per[i][xi]).product();
    });
    Ok(JointOutcomeLaw { ks, probs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergences {
    pub tv: f64,
    pub kl: f64,
    pub chi_square: f64,
}

/// Total variation, KL (natural log) and chi-square of `P` from `Q`.
pub fn divergences(p: &JointOutcomeLaw, q: &JointOutcomeLaw) -> Result<Divergences> {
    divergences_of(&p.probs, &q.probs)
}

pub fn divergences_of(p: &[f64], q: &[f64]) -> Result<Divergences> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: p.len() });
    }
    let (mut tv, mut kl, mut chi) = (0.0, 0.0, 0.0);
    for (x, (&a, &b)) in p.iter().zip(q).enumerate() {
        tv += (a - b).abs();
        if b <= 0.0 {
            if a > 0.0 {
                return Err(Error::SupportViolation(format!("P puts mass {a:e} on outcome {x} where Q has none")));
            }
            continue;
        }
        if a > 0.0 {
            kl += a * (a / b).ln();
        }
        chi += (a - b) * (a - b) / b;
    }
    Ok(Divergences { tv: tv / 2.0, kl: kl.max(0.0), chi_square: chi })
}

/// Numerators below this count as zero where the reference law vanishes.
const ZERO_NUMERATOR: f64 = 1e-14;

/// `H(σ, σ′) = d·vec(σ − ρ_mm)† C vec(σ′ − ρ_mm)`.
pub fn mic_kernel(sigma: &DensityMatrix, sigma2: &DensityMatrix, povm: &Povm) -> Result<f64> {
    let d = povm.dim();
    let mm = identity(d) * c64(1.0 / d as f64, 0.0);
    let a = vectorize(&(sigma.matrix() - &mm))?;
    let b = vectorize(&(sigma2.matrix() - &mm))?;
    let c = mic_matrix(povm)?;
    Ok(a.dotc(&(&c.matrix * b)).re * d as f64)
}

/// `Σ_x (p_σ(x) − u(x))(p_σ′(x) − u(x))/u(x)` with `u(x) = Tr[M_x]/d`.
pub fn mic_kernel_classical(sigma: &DensityMatrix, sigma2: &DensityMatrix, povm: &Povm) -> Result<f64> {
    let d = povm.dim();
    let mm = identity(d) * c64(1.0 / d as f64, 0.0);
    let da = sigma.matrix() - &mm;
    let db = sigma2.matrix() - &mm;
    let mut acc = 0.0;
    for (x, m) in povm.effects().iter().enumerate() {
        let u = crate::linalg::trace(m).re / d as f64;
        let ea = trace_product(m, &da).re;
        let eb = trace_product(m, &db).re;
        if u <= 0.0 {
            if ea.abs() > ZERO_NUMERATOR || eb.abs() > ZERO_NUMERATOR {
                return Err(Error::SupportViolation(format!("outcome {} has u = 0 but nonzero deviation", x + 1)));
            }
            continue;
        }
        acc += ea * eb / u;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    /// Exact `χ²(E_σ P_σ ‖ P_ρmm)` by enumeration.
    pub chi_square: f64,
    /// `E_{σσ′} Π_i (1 + H_i(σ, σ′)) − 1`.
    pub pollard_rhs: f64,
    /// `kernels[j][j′][i] = H_i(σ_j, σ_j′)`.
    pub kernels: Vec<Vec<Vec<f64>>>,
    /// `E_{σσ′} exp(Σ_i H_i(σ, σ′)) − 1`.
    pub decoupled_bound: f64,
}

impl ChiSquareReport {
    pub fn relative_error(&self) -> f64 {
        let scale = self.chi_square.abs().max(self.pollard_rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.chi_square - self.pollard_rhs).abs() / scale
        }
    }

    /// Pollard equality at relative tolerance `rel`, with an absolute floor
    /// for values that are zero up to rounding.
    pub fn pollard_holds(&self, rel: f64) -> bool {
        let scale = self.chi_square.abs().max(self.pollard_rhs.abs());
        (self.chi_square - self.pollard_rhs).abs() <= rel * scale + 1e-14
    }

    pub fn decoupled_holds(&self, slack: f64) -> bool {
        self.chi_square <= self.decoupled_bound + slack
    }
}

/// Per-copy Born law `p_i` and deviation `δ_i(x) = Tr[M_x (σ − ρ_mm)]`.
struct CopyLaws {
    p: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

fn copy_laws(scheme: &FixedScheme, sigma: &DensityMatrix) -> Result<CopyLaws> {
    let d = scheme.dim();
    let mm = identity(d) * c64(1.0 / d as f64, 0.0);
    let dev = sigma.matrix() - &mm;
    let mut p = Vec::with_capacity(scheme.len());
    let mut delta = Vec::with_capacity(scheme.len());
    for povm in scheme.povms() {
        p.push(born_distribution(sigma, povm)?.probs);
        delta.push(povm.effects().iter().map(|m| trace_product(m, &dev).re).collect());
    }
    Ok(CopyLaws { p, delta })
}

fn check_instances(scheme: &FixedScheme, instances: &[(DensityMatrix, f64)]) -> Result<()> {
    if instances.is_empty() {
        return Err(Error::InvalidParameter("empty instance set".into()));
    }
    let total: f64 = instances.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 || instances.iter().any(|(_, w)| *w < 0.0) {
        return Err(Error::InvalidParameter(format!("weights must be a distribution (sum {total})")));
    }
    for (s, _) in instances {
        if s.dim() != scheme.dim() {
            return Err(Error::DimensionMismatch { expected: scheme.dim(), got: s.dim() });
        }
    }
    Ok(())
}

/// Exact mixture chi-square against the maximally mixed law. Differences
/// `P_σ(x) − P_mm(x)` are telescoped copy by copy so small divergences keep
/// full relative precision.
pub fn mixture_chi_square(scheme: &FixedScheme, instances: &[(DensityMatrix, f64)]) -> Result<f64> {
    check_instances(scheme, instances)?;
    let (ks, _) = outcome_space(scheme)?;
    let d = scheme.dim();
    let u: Vec<Vec<f64>> = scheme
        .povms()
        .iter()
        .map(|p| p.effects().iter().map(|m| crate::linalg::trace(m).re / d as f64).collect())
        .collect();
    let laws: Vec<CopyLaws> =
        instances.iter().map(|(s, _)| copy_laws(scheme, s)).collect::<Result<_>>()?;
    let n = ks.len();
    let mut chi = 0.0;
    let mut suffix = vec![1.0; n + 1];
    for_each_string(&ks, |_, x| {
        let q: f64 = x.iter().enumerate().map(|(i, &xi)| u[i][xi]).product();
        let mut diff = 0.0;
        for (law, (_, w)) in laws.iter().zip(instances) {
            // Π a_i − Π b_i = Σ_i (a_i − b_i) Π_{j<i} a_j Π_{j>i} b_j
            for i in (0..n).rev() {
                suffix[i] = suffix[i + 1] * u[i][x[i]];
            }
            let mut prefix = 1.0;
            let mut acc = 0.0;
            for i in 0..n {
                acc += law.delta[i][x[i]] * prefix * suffix[i + 1];
                prefix *= law.p[i][x[i]];
            }
            diff += w * acc;
        }
        if q > 0.0 {
            chi += diff * diff / q;
        }
    });
    Ok(chi)
}

/// Kernel table `H_i(σ_j, σ_j′)` via the classical dual formula.
fn kernel_table(scheme: &FixedScheme, instances: &[(DensityMatrix, f64)]) -> Result<Vec<Vec<Vec<f64>>>> {
    let m = instances.len();
    let mut out = vec![vec![Vec::new(); m]; m];
    for j in 0..m {
        for jj in 0..m {
            out[j][jj] = scheme
                .povms()
                .iter()
                .map(|p| mic_kernel_classical(&instances[j].0, &instances[jj].0, p))
                .collect::<Result<Vec<f64>>>()?;
        }
    }
    Ok(out)
}

/// Exact chi-square of the mixture against both sides of Pollard's identity
/// and the decoupled exponential bound.
pub fn pollard_check(scheme: &FixedScheme, instances: &[(DensityMatrix, f64)]) -> Result<ChiSquareReport> {
    let chi_square = mixture_chi_square(scheme, instances)?;
    let kernels = kernel_table(scheme, instances)?;
    let (mut rhs, mut bound) = (0.0, 0.0);
    for (j, (_, wj)) in instances.iter().enumerate() {
        for (jj, (_, wjj)) in instances.iter().enumerate() {
            let h = &kernels[j][jj];
            let log_prod: f64 = h.iter().map(|&x| x.ln_1p()).sum();
            let sum: f64 = h.iter().sum();
            rhs += wj * wjj * log_prod.exp_m1();
            bound += wj * wjj * sum.exp_m1();
        }
    }
    Ok(ChiSquareReport { chi_square, pollard_rhs: rhs, kernels, decoupled_bound: bound })
}

fn enumerate_signs(ell: usize) -> Result<Vec<Vec<i8>>> {
    let size = 1u128 << ell.min(127);
    if ell >= 127 || size > SIGN_CAP {
        return Err(Error::EnumerationCap { size, cap: SIGN_CAP });
    }
    Ok((0..size as usize)
        .map(|m| (0..ell).map(|i| if (m >> (ell - 1 - i)) & 1 == 0 { 1 } else { -1 }).collect())
        .collect())
}

/// Uniform mixture over all `z ∈ {±1}^ℓ` of the hard instances on `basis`.
pub fn perturbation_family(
    basis: &PerturbationBasis,
    ell: usize,
    eps: f64,
    c: f64,
) -> Result<Vec<(DensityMatrix, f64)>> {
    let signs = enumerate_signs(ell)?;
    let w = 1.0 / signs.len() as f64;
    signs
        .iter()
        .map(|z| build_perturbation(basis, ell, eps, c, z).map(|h| (h.sigma, w)))
        .collect()
}

/// Exact mixture chi-square and its decoupled bound
/// `E_{zz′} exp(n d vec(Δ_z)† C̄ vec(Δ_z′)) − 1` over enumerable `z`.
pub fn decoupled_bound_check(
    scheme: &FixedScheme,
    basis: &PerturbationBasis,
    ell: usize,
    eps: f64,
    c: f64,
) -> Result<ChiSquareReport> {
    let family = perturbation_family(basis, ell, eps, c)?;
    pollard_check(scheme, &family)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameValue {
    pub chi_fixed_basis: f64,
    pub chi_adversarial_basis: f64,
    pub fixed_clears_threshold: bool,
    pub adversarial_clears_threshold: bool,
}

/// Mixture chi-square for a measurement-independent Pauli basis and for the
/// basis chosen against this particular scheme.
pub fn game_value_demo(scheme: &FixedScheme, eps: f64, ell: usize, c: f64) -> Result<GameValue> {
    let d = scheme.dim();
    let fixed = PerturbationBasis::pauli(d)?;
    let adv = PerturbationBasis::from_eigenbasis(&adversarial_basis(scheme)?)?;
    let chi_fixed = mixture_chi_square(scheme, &perturbation_family(&fixed, ell, eps, c)?)?;
    let chi_adv = mixture_chi_square(scheme, &perturbation_family(&adv, ell, eps, c)?)?;
    Ok(GameValue {
        chi_fixed_basis: chi_fixed,
        chi_adversarial_basis: chi_adv,
        fixed_clears_threshold: chi_fixed >= GAME_THRESHOLD,
        adversarial_clears_threshold: chi_adv >= GAME_THRESHOLD,
    })
}

/// Outcome law of a mixture of states, for TV comparisons.
pub fn mixture_law(scheme: &FixedScheme, instances: &[(DensityMatrix, f64)]) -> Result<JointOutcomeLaw> {
    check_instances(scheme, instances)?;
    let mut acc: Option<JointOutcomeLaw> = None;
    for (s, w) in instances {
        let law = enumerate_outcome_law(scheme, s)?;
        match &mut acc {
            None => {
                acc = Some(JointOutcomeLaw {
                    ks: law.ks.clone(),
                    probs: law.probs.iter().map(|p| p * w).collect(),
                })
            }
            Some(a) => a.probs.iter_mut().zip(&law.probs).for_each(|(x, p)| *x += p * w),
        }
    }
    Ok(acc.expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hard_instances::paninski_instance;
    use crate::states::{build_mub, pauli_set, PauliString};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn mm(d: usize) -> DensityMatrix {
        DensityMatrix::mixed(d).unwrap()
    }

    #[test]
    fn single_copy_law_is_born() {
        let mut r = rng(1);
        let rho = DensityMatrix::random(2, &mut r).unwrap();
        let p = Povm::random(2, 3, &mut r).unwrap();
        let law = enumerate_outcome_law(&FixedScheme::new(vec![p.clone()]).unwrap(), &rho).unwrap();
        assert_eq!(law.probs, born_distribution(&rho, &p).unwrap().probs);
    }

    #[test]
    fn iid_canonical_on_mixed_is_uniform() {
        let s = FixedScheme::repeated(Povm::canonical(2).unwrap(), 2).unwrap();
        let law = enumerate_outcome_law(&s, &mm(2)).unwrap();
        assert_eq!(law.probs, vec![0.25; 4]);
    }

    #[test]
    fn joint_law_matches_product_per_string() {
        let mut r = rng(2);
        let povms: Vec<Povm> = (0..3).map(|_| Povm::random(2, 3, &mut r).unwrap()).collect();
        let s = FixedScheme::new(povms.clone()).unwrap();
        let rho = DensityMatrix::random(2, &mut r).unwrap();
        let law = enumerate_outcome_law(&s, &rho).unwrap();
        for idx in 0..law.len() {
            let x = law.digits(idx);
            let direct: f64 =
                x.iter().zip(&povms).map(|(&xi, p)| trace_product(rho.matrix(), &p.effects()[xi]).re).product();
            assert!((law.probs[idx] - direct).abs() <= 1e-12);
        }
        assert!((law.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn enumeration_cap() {
        let s = FixedScheme::repeated(Povm::canonical(4).unwrap(), 10).unwrap();
        assert!(matches!(enumerate_outcome_law(&s, &mm(4)), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn divergence_examples() {
        let p = [0.2, 0.3, 0.5];
        let d = divergences_of(&p, &p).unwrap();
        assert_eq!((d.tv, d.kl, d.chi_square), (0.0, 0.0, 0.0));
        let pz = paninski_instance(4, 0.1, &[1, -1], 1.0).unwrap();
        let d = divergences_of(&pz, &[0.25; 4]).unwrap();
        assert!((d.tv - 0.05).abs() < 1e-15);
        assert!(matches!(divergences_of(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn kernel_examples() {
        let c = Povm::canonical(4).unwrap();
        assert_eq!(mic_kernel(&mm(4), &mm(4), &c).unwrap(), 0.0);
        let plus = DensityMatrix::plus(4).unwrap();
        assert!(mic_kernel(&plus, &plus, &c).unwrap().abs() < 1e-15);
        let mut r = rng(3);
        for _ in 0..50 {
            let a = DensityMatrix::random(2, &mut r).unwrap();
            let b = DensityMatrix::random(2, &mut r).unwrap();
            let p = Povm::random(2, 3, &mut r).unwrap();
            let k1 = mic_kernel(&a, &b, &p).unwrap();
            let k2 = mic_kernel_classical(&a, &b, &p).unwrap();
            assert!((k1 - k2).abs() <= 1e-10);
        }
    }

    #[test]
    fn pollard_singleton_mixed() {
        let s = FixedScheme::repeated(Povm::canonical(2).unwrap(), 2).unwrap();
        let rep = pollard_check(&s, &[(mm(2), 1.0)]).unwrap();
        assert_eq!(rep.chi_square, 0.0);
        assert_eq!(rep.pollard_rhs, 0.0);
    }

    #[test]
    fn pollard_two_instances_bruteforce() {
        let b = PerturbationBasis::pauli(2).unwrap();
        let s = FixedScheme::repeated(Povm::canonical(2).unwrap(), 2).unwrap();
        let fam = perturbation_family(&b, 2, 0.3, 1.0).unwrap();
        let two = vec![(fam[0].0.clone(), 0.5), (fam[3].0.clone(), 0.5)];
        let rep = pollard_check(&s, &two).unwrap();
        // Independent recomputation from the plain enumerated mixture law.
        let mix = mixture_law(&s, &two).unwrap();
        let null = enumerate_outcome_law(&s, &mm(2)).unwrap();
        let direct = divergences(&mix, &null).unwrap().chi_square;
        assert!((direct - rep.chi_square).abs() <= 1e-12);
        assert!(rep.pollard_holds(1e-9), "{rep:?}");
    }

    #[test]
    fn pollard_pauli_scheme_full_family() {
        let paulis = pauli_set(1).unwrap().povms().unwrap();
        let s = FixedScheme::new(vec![paulis[0].clone(), paulis[1].clone(), paulis[2].clone(), paulis[0].clone()]).unwrap();
        let rep = decoupled_bound_check(&s, &PerturbationBasis::pauli(2).unwrap(), 2, 0.2, 1.0).unwrap();
        assert!(rep.chi_square > 0.0);
        assert!(rep.pollard_holds(1e-9), "{rep:?}");
        assert!(rep.decoupled_holds(1e-9));
    }

    #[test]
    fn decoupled_examples() {
        let s = FixedScheme::repeated(Povm::canonical(2).unwrap(), 3).unwrap();
        let b = PerturbationBasis::pauli(2).unwrap();
        let rep = decoupled_bound_check(&s, &b, 2, 0.0, 1.0).unwrap();
        assert_eq!((rep.chi_square, rep.decoupled_bound), (0.0, 0.0));

        let adv = PerturbationBasis::from_eigenbasis(&adversarial_basis(&s).unwrap()).unwrap();
        let rep = decoupled_bound_check(&s, &adv, 2, 0.3, 1.0).unwrap();
        assert!(rep.chi_square.abs() < 1e-14 && rep.decoupled_bound.abs() < 1e-14);

        let z = Povm::pauli(&PauliString::from_index(1, 3).matrix()).unwrap();
        let s = FixedScheme::repeated(z, 3).unwrap();
        // ℓ = 2 spans {σ_X, σ_Y}, which a Z measurement cannot see; ℓ = 3 adds σ_Z.
        let blind = decoupled_bound_check(&s, &b, 2, 0.05, 1.0).unwrap();
        assert!(blind.chi_square.abs() < 1e-15 && blind.decoupled_bound.abs() < 1e-15);
        let rep = decoupled_bound_check(&s, &b, 3, 0.05, 1.0).unwrap();
        assert!(rep.chi_square > 0.0 && rep.chi_square < rep.decoupled_bound);
        assert!(rep.pollard_holds(1e-9));
    }

    #[test]
    fn game_value_examples() {
        let s = FixedScheme::repeated(Povm::canonical(2).unwrap(), 3).unwrap();
        let g = game_value_demo(&s, 0.3, 2, 1.0).unwrap();
        assert!(g.chi_adversarial_basis < GAME_THRESHOLD);
        assert!(!g.adversarial_clears_threshold);
        assert!(g.chi_adversarial_basis <= g.chi_fixed_basis + 1e-12);

        let mub = build_mub(1).unwrap().povms().unwrap();
        let mut prev = -1.0;
        for rounds in 1..=4 {
            let povms: Vec<Povm> = (0..3 * rounds).map(|i| mub[i % 3].clone()).collect();
            let g = game_value_demo(&FixedScheme::new(povms).unwrap(), 0.3, 2, 1.0).unwrap();
            assert!(g.chi_adversarial_basis > prev);
            prev = g.chi_adversarial_basis;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pinsker_chain(seed in any::<u64>(), k in 2usize..12) {
            let mut r = rng(seed);
            let draw = |r: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..k).map(|_| rand::Rng::random::<f64>(r) + 1e-3).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
            };
            let p = draw(&mut r);
            let q = draw(&mut r);
            let d = divergences_of(&p, &q).unwrap();
            prop_assert!(2.0 * d.tv * d.tv <= d.kl + 1e-12);
            prop_assert!(d.kl <= d.chi_square + 1e-12);
        }

        #[test]
        fn kernel_dual_formula(seed in any::<u64>(), k in 1usize..5) {
            let mut r = rng(seed);
            let a = DensityMatrix::random(2, &mut r).unwrap();
            let b = DensityMatrix::random(2, &mut r).unwrap();
            let p = Povm::random(2, k, &mut r).unwrap();
            let k1 = mic_kernel(&a, &b, &p).unwrap();
            let k2 = mic_kernel_classical(&a, &b, &p).unwrap();
            prop_assert!((k1 - k2).abs() <= 1e-10);
        }
    }
}
