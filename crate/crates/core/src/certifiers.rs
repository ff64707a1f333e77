//! The end-to-end certification algorithms. Each consumes a [`CopyOracle`]
//! holding copies of the unknown state, compares against a known `ρ₀` and
//! returns YES (`ρ = ρ₀`) or NO (`‖ρ − ρ₀‖₁ > ε`).
//!
//! Every certifier uses the copies remaining in the oracle as its budget and
//! measures each copy at most once; copies that do not fill a whole group or
//! batch are left untouched. Fixed certifiers build their whole measurement
//! sequence as a [`DeclaredSequence`] before the first measurement.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{
    amplify_vote, eta_simulate_with_coins, identity_statistic, prod_bern_sample_size, prod_bern_statistic,
    test_identity_l2, test_identity_l2_batches, vote_groups, ConstantsMode, SimulationConfig, TesterConfig, Verdict,
    CALIBRATED_IDENTITY_CONSTANT, CALIBRATED_PROD_BERN_CONSTANT, VOTE_T1, VOTE_T2,
};
use crate::haar::sample_haar_unitary;
use crate::states::{
    born_distribution, build_mub, ensure_power_of_two, haar_projector_povm, pauli_probability_vector, CopyOracle,
    DensityMatrix, MubFamily, PauliSet, Povm,
};
use crate::stats::multinomial;
use crate::{Error, Result};

/// Failure probability of the tester inside the randomized algorithm.
pub const RANDOMIZED_DELTA: f64 = 0.01;
/// Failure probability of the tester inside the MUB algorithms.
pub const MUB_DELTA: f64 = 1.0 / 6.0;
/// `η` for the l-bit simulation.
pub const SIMULATION_ETA: f64 = 0.01;
/// Success target `α` used to size the vote.
pub const BOOST_ALPHA: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertifierId {
    #[serde(rename = "randomized-k")]
    RandomizedK,
    #[serde(rename = "randomized-k-boosted")]
    RandomizedKBoosted,
    #[serde(rename = "fixed-pauli")]
    FixedPauli,
    #[serde(rename = "fixed-mub-d")]
    FixedMubD,
    #[serde(rename = "fixed-mub-k")]
    FixedMubK,
    /// Baseline: the canonical basis repeated on every copy.
    #[serde(rename = "fixed-canonical")]
    FixedCanonical,
}

impl CertifierId {
    pub const ALL: [CertifierId; 6] = [
        CertifierId::RandomizedK,
        CertifierId::RandomizedKBoosted,
        CertifierId::FixedPauli,
        CertifierId::FixedMubD,
        CertifierId::FixedMubK,
        CertifierId::FixedCanonical,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CertifierId::RandomizedK => "randomized-k",
            CertifierId::RandomizedKBoosted => "randomized-k-boosted",
            CertifierId::FixedPauli => "fixed-pauli",
            CertifierId::FixedMubD => "fixed-mub-d",
            CertifierId::FixedMubK => "fixed-mub-k",
            CertifierId::FixedCanonical => "fixed-canonical",
        }
    }

    pub fn is_fixed(&self) -> bool {
        !matches!(self, CertifierId::RandomizedK | CertifierId::RandomizedKBoosted)
    }

    /// Number of measurement outcomes used for a given `(d, k)`.
    pub fn outcomes(&self, d: usize, k: usize) -> usize {
        match self {
            CertifierId::RandomizedK | CertifierId::RandomizedKBoosted | CertifierId::FixedMubK => k,
            CertifierId::FixedPauli => 2,
            CertifierId::FixedMubD | CertifierId::FixedCanonical => d,
        }
    }
}

impl std::fmt::Display for CertifierId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CertifierId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CertifierId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown certifier id '{s}'")))
    }
}

/// How the MUB algorithms turn per-group outcomes into one tester input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Subsampling {
    /// Multinomial subsample targets `m_l`, pooled and shuffled, then the
    /// batched identity tester.
    #[default]
    Multinomial,
    /// Deterministic post-processing: every group's full sample enters a
    /// single stratified l2 statistic.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    pub eps: f64,
    pub k: usize,
    pub mode: ConstantsMode,
    /// Vote groups for the boosted algorithm.
    pub groups: usize,
    pub subsampling: Subsampling,
    pub identity_constant: f64,
    pub prod_bern_constant: f64,
}

impl CertParams {
    pub fn new(eps: f64, k: usize, mode: ConstantsMode) -> Self {
        CertParams {
            eps,
            k,
            mode,
            groups: vote_groups(BOOST_ALPHA, VOTE_T1, VOTE_T2),
            subsampling: Subsampling::Multinomial,
            identity_constant: CALIBRATED_IDENTITY_CONSTANT,
            prod_bern_constant: CALIBRATED_PROD_BERN_CONSTANT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 2.0) {
            return Err(Error::InvalidParameter(format!("eps = {} outside (0, 2]", self.eps)));
        }
        if self.groups == 0 {
            return Err(Error::InvalidParameter("boosting needs at least one group".into()));
        }
        if !(self.identity_constant > 0.0 && self.prod_bern_constant > 0.0) {
            return Err(Error::InvalidParameter("tester constants must be positive".into()));
        }
        Ok(())
    }

    fn tester(&self, radius: f64, delta: f64, b: f64) -> Result<TesterConfig> {
        let mut cfg = TesterConfig::new(radius, delta, b, self.mode)?;
        cfg.calibrated_constant = self.identity_constant;
        Ok(cfg)
    }

    /// Tester setup of the randomized algorithm: radius `0.07ε/d`, `δ = 0.01`,
    /// `b = 10/√k` (capped at 1 in calibrated mode, since `‖p‖₂ ≤ 1`).
    pub fn randomized_tester(&self, d: usize) -> Result<TesterConfig> {
        let b = 10.0 / (self.k as f64).sqrt();
        let b = match self.mode {
            ConstantsMode::Paper => b,
            ConstantsMode::Calibrated => b.min(1.0),
        };
        self.tester(0.07 * self.eps / d as f64, RANDOMIZED_DELTA, b)
    }

    /// Tester setup of the MUB algorithms: radius `ε/((d+1)√d)`, `δ = 1/6`,
    /// `b = √2/(d+1)`.
    pub fn mub_tester(&self, d: usize) -> Result<TesterConfig> {
        let df = d as f64;
        self.tester(self.eps / ((df + 1.0) * df.sqrt()), MUB_DELTA, std::f64::consts::SQRT_2 / (df + 1.0))
    }

    /// Baseline tester on the canonical-basis law: radius `ε/d`, `δ = 1/6`, `b = 1`.
    pub fn canonical_tester(&self, d: usize) -> Result<TesterConfig> {
        self.tester(self.eps / d as f64, MUB_DELTA, 1.0)
    }
}

/// Group bookkeeping of the fixed algorithms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupedPlan {
    pub groups: usize,
    /// Copies per group (`n₀`, or `L` for the Pauli algorithm).
    pub group_size: u64,
    /// Simulation block size `M`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_size: Option<u64>,
    /// Multinomial targets `m_l`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subsample_targets: Vec<u64>,
    /// Successful simulations `n_l`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub successes: Vec<u64>,
    /// Outcomes entering the tester per group.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub kept: Vec<u64>,
}

/// A fixed measurement sequence written as runs: `runs[i] = (povm index, copies)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredSequence {
    pub povms: Vec<Povm>,
    pub runs: Vec<(usize, u64)>,
}

impl DeclaredSequence {
    pub fn total(&self) -> u64 {
        self.runs.iter().map(|r| r.1).sum()
    }

    /// POVM applied to copy `i` (0-based), if any.
    pub fn povm_at(&self, mut i: u64) -> Option<&Povm> {
        for &(p, c) in &self.runs {
            if i < c {
                return Some(&self.povms[p]);
            }
            i -= c;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// l2 radius handed to the classical tester.
    pub radius: f64,
    /// Normalized statistic (mean batch estimate, or the single statistic).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
    /// NO votes among batches, or among groups for the boosted algorithm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_votes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub votes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<GroupedPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertResult {
    pub certifier: CertifierId,
    pub verdict: Verdict,
    pub copies: u64,
    pub mode: ConstantsMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub diagnostics: Diagnostics,
}

impl CertResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn mub_family(d: usize) -> Result<&'static MubFamily> {
    static CACHE: [OnceLock<Option<MubFamily>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    ensure_power_of_two("d", d)?;
    let n = d.trailing_zeros() as usize;
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!("MUB algorithms need d in {{2, 4, 8}}, got {d}")));
    }
    CACHE[n - 1]
        .get_or_init(|| build_mub(n).ok())
        .as_ref()
        .ok_or_else(|| Error::Numerical("MUB construction failed".into()))
}

fn check_state(oracle: &CopyOracle, rho0: &DensityMatrix) -> Result<usize> {
    let d = rho0.dim();
    if oracle.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: oracle.dim() });
    }
    ensure_power_of_two("d", d)?;
    Ok(d)
}

fn check_k(d: usize, k: usize) -> Result<()> {
    ensure_power_of_two("k", k)?;
    if k < 2 || k > d || !d.is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!("need 2 <= k <= d with k | d, got d = {d}, k = {k}")));
    }
    Ok(())
}

fn insufficient(need: u64, have: u64) -> Error {
    Error::InsufficientCopies { need, have }
}

/// One run of the randomized algorithm on `n` copies.
fn randomized_round<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    n: u64,
    rng: &mut R,
) -> Result<(Verdict, Diagnostics)> {
    let d = rho0.dim();
    let cfg = params.randomized_tester(d)?;
    let b = cfg.batches();
    let m = n / b as u64;
    if m < 2 {
        return Err(insufficient(cfg.min_samples(), n));
    }
    let u = sample_haar_unitary(d, rng);
    let povm = haar_projector_povm(&u, params.k)?;
    let q = born_distribution(rho0, &povm)?.probs;
    let batches = (0..b).map(|_| oracle.measure_counts(&povm, m)).collect::<Result<Vec<_>>>()?;
    let out = test_identity_l2_batches(&q, &batches, cfg.eps)?;
    let stat = out.estimates.iter().sum::<f64>() / out.estimates.len() as f64;
    Ok((
        out.verdict,
        Diagnostics {
            radius: cfg.eps,
            statistic: Some(stat),
            threshold: Some(cfg.eps * cfg.eps / 2.0),
            batches: Some(out.batches),
            batch_size: Some(out.batch_size),
            no_votes: Some(out.no_votes),
            ..Default::default()
        },
    ))
}

/// Randomized k-outcome certification: one Haar-random projective POVM with
/// `k` rank-`d/k` projectors applied to every copy, then the l2 identity test.
pub fn certify_randomized_k<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    rng: &mut R,
) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    check_k(d, params.k)?;
    let start = oracle.consumed();
    let (verdict, diagnostics) = randomized_round(oracle, rho0, params, oracle.remaining(), rng)?;
    Ok(CertResult {
        certifier: CertifierId::RandomizedK,
        verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics,
    })
}

/// `T` independent randomized runs on equal groups, combined by
/// [`amplify_vote`] with `t₁ = 0.03`, `t₂ = 0.1`.
pub fn certify_randomized_k_boosted<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    rng: &mut R,
) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    check_k(d, params.k)?;
    let t = params.groups;
    let per_group = oracle.remaining() / t as u64;
    let need = params.randomized_tester(d)?.min_samples();
    if per_group < need {
        return Err(insufficient(need * t as u64, oracle.remaining()));
    }
    let start = oracle.consumed();
    let votes = (0..t)
        .map(|_| randomized_round(oracle, rho0, params, per_group, rng).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let verdict = amplify_vote(&votes, VOTE_T1, VOTE_T2)?;
    let no = votes.iter().filter(|v| **v == Verdict::No).count();
    Ok(CertResult {
        certifier: CertifierId::RandomizedKBoosted,
        verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics: Diagnostics {
            radius: params.randomized_tester(d)?.eps,
            statistic: Some(no as f64 / t as f64),
            threshold: Some((VOTE_T1 + VOTE_T2) / 2.0),
            no_votes: Some(no),
            votes: Some(t),
            plan: Some(GroupedPlan { groups: t, group_size: per_group, ..Default::default() }),
            ..Default::default()
        },
    })
}

/// Declared sequence of the Pauli algorithm: every non-identity Pauli
/// observable on `L` copies each. The `L` groups of `d² − 1` copies are
/// arranged by observable; the multiset of (copy, POVM) pairs is the same.
pub fn declare_pauli_sequence(d: usize, n: u64) -> Result<DeclaredSequence> {
    ensure_power_of_two("d", d)?;
    let set = PauliSet::new(d.trailing_zeros() as usize)?;
    let l = n / set.len() as u64;
    let povms = set.povms()?;
    let runs = (0..povms.len()).map(|j| (j, l)).collect();
    Ok(DeclaredSequence { povms, runs })
}

/// Fixed Pauli certification: `L = ⌊n/(d² − 1)⌋` product-Bernoulli samples
/// tested against `q = pauli_probability_vector(ρ₀)` at radius `ε/2`.
pub fn certify_fixed_pauli(oracle: &mut CopyOracle, rho0: &DensityMatrix, params: &CertParams) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    if d < 2 {
        return Err(Error::InvalidParameter("Pauli certification needs d >= 2".into()));
    }
    let seq = declare_pauli_sequence(d, oracle.remaining())?;
    let l = seq.runs[0].1;
    if l < 2 {
        return Err(insufficient(2 * seq.povms.len() as u64, oracle.remaining()));
    }
    let q = pauli_probability_vector(rho0)?;
    let start = oracle.consumed();
    let mut ones = Vec::with_capacity(seq.runs.len());
    for &(p, c) in &seq.runs {
        // Label 2 is the +1 eigenspace, the Bernoulli "1".
        ones.push(oracle.measure_counts(&seq.povms[p], c)?[1]);
    }
    let radius = params.eps / 2.0;
    let z = prod_bern_statistic(&q, &ones, l);
    let lf = l as f64;
    let verdict = if z > lf * lf * radius * radius / 2.0 { Verdict::No } else { Verdict::Yes };
    Ok(CertResult {
        certifier: CertifierId::FixedPauli,
        verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics: Diagnostics {
            radius,
            statistic: Some(z / (lf * lf)),
            threshold: Some(radius * radius / 2.0),
            plan: Some(GroupedPlan { groups: l as usize, group_size: seq.povms.len() as u64, ..Default::default() }),
            ..Default::default()
        },
    })
}

/// Declared sequence of the MUB algorithms: basis `l` on `n₀` copies each.
pub fn declare_mub_sequence(d: usize, group_size: u64) -> Result<DeclaredSequence> {
    let mub = mub_family(d)?;
    let povms = mub.povms()?;
    let runs = (0..povms.len()).map(|l| (l, group_size)).collect();
    Ok(DeclaredSequence { povms, runs })
}

/// Single stratified statistic over per-group counts: the unbiased estimate
/// of `Σ_l ‖p_l − q_l‖₂²/(d+1)²`, which equals `‖p − q‖₂²` on the mixture law.
fn stratified_test(q: &[f64], counts: &[Vec<u64>], radius: f64) -> Result<(Verdict, f64)> {
    let groups = counts.len() as f64;
    let mut stat = 0.0;
    for (l, c) in counts.iter().enumerate() {
        let m: u64 = c.iter().sum();
        if m < 2 {
            return Err(Error::InsufficientSamples { need: 2, have: m as usize });
        }
        let ql: Vec<f64> = q[l * c.len()..(l + 1) * c.len()].iter().map(|x| x * groups).collect();
        let mf = m as f64;
        stat += identity_statistic(&ql, c) / (mf * (mf - 1.0)) / (groups * groups);
    }
    let verdict = if stat > radius * radius / 2.0 { Verdict::No } else { Verdict::Yes };
    Ok((verdict, stat))
}

/// Pools the first `min(available_l, m_l)` outcomes of each group as joint
/// labels `l·d + x` (1-based), shuffles them and runs the batched tester.
fn pooled_test<R: Rng + ?Sized>(
    q: &[f64],
    groups: &[Vec<usize>],
    targets: &[u64],
    cfg: &TesterConfig,
    rng: &mut R,
) -> Result<(Verdict, Diagnostics, Vec<u64>)> {
    let d = q.len() / groups.len();
    let mut pooled = Vec::new();
    let mut kept = Vec::with_capacity(groups.len());
    for (l, (g, &m)) in groups.iter().zip(targets).enumerate() {
        let take = (g.len() as u64).min(m) as usize;
        kept.push(take as u64);
        pooled.extend(g[..take].iter().map(|&x| l * d + x));
    }
    pooled.shuffle(rng);
    let out = test_identity_l2(q, &pooled, cfg)?;
    let stat = out.estimates.iter().sum::<f64>() / out.estimates.len() as f64;
    let diag = Diagnostics {
        radius: cfg.eps,
        statistic: Some(stat),
        threshold: Some(cfg.eps * cfg.eps / 2.0),
        batches: Some(out.batches),
        batch_size: Some(out.batch_size),
        no_votes: Some(out.no_votes),
        ..Default::default()
    };
    Ok((out.verdict, diag, kept))
}

fn counts_of(samples: &[usize], d: usize) -> Vec<u64> {
    let mut c = vec![0u64; d];
    for &x in samples {
        c[x - 1] += 1;
    }
    c
}

/// Fixed MUB certification with `d` outcomes: `d + 1` equal groups, group `l`
/// measured in basis `l`.
pub fn certify_fixed_mub_d<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    rng: &mut R,
) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    let n = oracle.remaining();
    let n0 = n / (d as u64 + 1);
    let cfg = params.mub_tester(d)?;
    let need = match params.subsampling {
        Subsampling::Multinomial => 2 * cfg.min_samples(),
        Subsampling::Stratified => 2 * (d as u64 + 1),
    };
    if n0 < 2 || n < need {
        return Err(insufficient(need.max(2 * (d as u64 + 1)), n));
    }
    let seq = declare_mub_sequence(d, n0)?;
    let q = mub_family(d)?.probability_vector(rho0)?;
    let start = oracle.consumed();
    let outcomes = seq
        .runs
        .iter()
        .map(|&(p, c)| oracle.measure_many(&seq.povms[p], c))
        .collect::<Result<Vec<_>>>()?;
    let mut plan = GroupedPlan { groups: d + 1, group_size: n0, ..Default::default() };
    let (verdict, mut diag) = match params.subsampling {
        Subsampling::Multinomial => {
            let targets = multinomial(n / 2, &vec![1.0 / (d + 1) as f64; d + 1], rng);
            let (v, diag, kept) = pooled_test(&q, &outcomes, &targets, &cfg, rng)?;
            plan.subsample_targets = targets;
            plan.kept = kept;
            (v, diag)
        }
        Subsampling::Stratified => {
            let counts: Vec<Vec<u64>> = outcomes.iter().map(|g| counts_of(g, d)).collect();
            let (v, stat) = stratified_test(&q, &counts, cfg.eps)?;
            plan.kept = vec![n0; d + 1];
            let diag = Diagnostics {
                radius: cfg.eps,
                statistic: Some(stat),
                threshold: Some(cfg.eps * cfg.eps / 2.0),
                ..Default::default()
            };
            (v, diag)
        }
    };
    diag.plan = Some(plan);
    Ok(CertResult {
        certifier: CertifierId::FixedMubD,
        verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics: diag,
    })
}

/// Simulation setup of the k-outcome MUB algorithm: `ℓ = log₂ k`, `η = 0.01`.
pub fn mub_k_simulation(d: usize, k: usize) -> Result<SimulationConfig> {
    SimulationConfig::new(d, k.trailing_zeros(), SIMULATION_ETA)
}

/// Fixed MUB certification with `k < d` outcomes: as the `d`-outcome version,
/// but each group's basis outcomes pass through the l-bit simulation in blocks
/// of `M` copies. Every player's coin is drawn before the first measurement,
/// so each copy's effective `k`-outcome POVM (basis measurement followed by
/// the player's message map) is fixed in advance.
pub fn certify_fixed_mub_k<R: Rng + ?Sized>(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    rng: &mut R,
) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    let k = params.k;
    ensure_power_of_two("k", k)?;
    if k >= d {
        return Err(Error::InvalidParameter(format!("k = {k} >= d = {d}: use the d-outcome MUB certifier")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2".into()));
    }
    let sim = mub_k_simulation(d, k)?;
    let m_block = sim.players as u64;
    let n = oracle.remaining();
    let blocks = n / (d as u64 + 1) / m_block;
    let cfg = params.mub_tester(d)?;
    let need_draws = match params.subsampling {
        Subsampling::Multinomial => cfg.min_samples(),
        Subsampling::Stratified => 2 * (d as u64 + 1),
    };
    if blocks < 2 || n / (2 * m_block) < need_draws {
        return Err(insufficient((2 * need_draws).max(2 * (d as u64 + 1)) * m_block, n));
    }
    let n0 = blocks * m_block;
    let seq = declare_mub_sequence(d, n0)?;
    let coins: Vec<Vec<bool>> = (0..=d).map(|_| (0..n0).map(|_| rng.random()).collect()).collect();
    let q = mub_family(d)?.probability_vector(rho0)?;
    let start = oracle.consumed();
    let mut simulated = Vec::with_capacity(d + 1);
    for (&(p, c), coins) in seq.runs.iter().zip(&coins) {
        let outcomes: Vec<usize> = oracle.measure_many(&seq.povms[p], c)?.into_iter().map(|x| x - 1).collect();
        let mut ok = Vec::new();
        for (s, cb) in outcomes.chunks_exact(sim.players).zip(coins.chunks_exact(sim.players)) {
            if let Some(x) = eta_simulate_with_coins(s, cb, &sim)? {
                ok.push(x + 1);
            }
        }
        simulated.push(ok);
    }
    let mut plan = GroupedPlan {
        groups: d + 1,
        group_size: n0,
        block_size: Some(m_block),
        successes: simulated.iter().map(|g| g.len() as u64).collect(),
        ..Default::default()
    };
    let (verdict, mut diag) = match params.subsampling {
        Subsampling::Multinomial => {
            let draws = n / (2 * m_block);
            let targets = multinomial(draws, &vec![1.0 / (d + 1) as f64; d + 1], rng);
            let (v, diag, kept) = pooled_test(&q, &simulated, &targets, &cfg, rng)?;
            plan.subsample_targets = targets;
            plan.kept = kept;
            (v, diag)
        }
        Subsampling::Stratified => {
            let counts: Vec<Vec<u64>> = simulated.iter().map(|g| counts_of(g, d)).collect();
            let (v, stat) = stratified_test(&q, &counts, cfg.eps)?;
            plan.kept = plan.successes.clone();
            let diag = Diagnostics {
                radius: cfg.eps,
                statistic: Some(stat),
                threshold: Some(cfg.eps * cfg.eps / 2.0),
                ..Default::default()
            };
            (v, diag)
        }
    };
    diag.plan = Some(plan);
    Ok(CertResult {
        certifier: CertifierId::FixedMubK,
        verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics: diag,
    })
}

/// Baseline: the canonical basis on every copy, tested against `diag(ρ₀)`.
/// It only sees diagonals, so states with equal diagonals are never told apart.
pub fn certify_fixed_canonical(
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
) -> Result<CertResult> {
    params.validate()?;
    let d = check_state(oracle, rho0)?;
    let cfg = params.canonical_tester(d)?;
    let b = cfg.batches();
    let m = oracle.remaining() / b as u64;
    if m < 2 {
        return Err(insufficient(cfg.min_samples(), oracle.remaining()));
    }
    let povm = Povm::canonical(d)?;
    let q = born_distribution(rho0, &povm)?.probs;
    let start = oracle.consumed();
    let batches = (0..b).map(|_| oracle.measure_counts(&povm, m)).collect::<Result<Vec<_>>>()?;
    let out = test_identity_l2_batches(&q, &batches, cfg.eps)?;
    Ok(CertResult {
        certifier: CertifierId::FixedCanonical,
        verdict: out.verdict,
        copies: oracle.consumed() - start,
        mode: params.mode,
        seed: None,
        diagnostics: Diagnostics {
            radius: cfg.eps,
            statistic: Some(out.estimates.iter().sum::<f64>() / b as f64),
            threshold: Some(cfg.eps * cfg.eps / 2.0),
            batches: Some(b),
            batch_size: Some(m),
            no_votes: Some(out.no_votes),
            ..Default::default()
        },
    })
}

/// Runs the named certifier.
pub fn certify<R: Rng + ?Sized>(
    id: CertifierId,
    oracle: &mut CopyOracle,
    rho0: &DensityMatrix,
    params: &CertParams,
    rng: &mut R,
) -> Result<CertResult> {
    match id {
        CertifierId::RandomizedK => certify_randomized_k(oracle, rho0, params, rng),
        CertifierId::RandomizedKBoosted => certify_randomized_k_boosted(oracle, rho0, params, rng),
        CertifierId::FixedPauli => certify_fixed_pauli(oracle, rho0, params),
        CertifierId::FixedMubD => certify_fixed_mub_d(oracle, rho0, params, rng),
        CertifierId::FixedMubK => certify_fixed_mub_k(oracle, rho0, params, rng),
        CertifierId::FixedCanonical => certify_fixed_canonical(oracle, rho0, params),
    }
}

/// Copy budget for the named certifier from its sample-size formula.
///
/// - randomized: the tester size `C·b·ln(1/δ)/r²` (times `T` when boosted);
/// - Pauli: `(d² − 1)·L` with `L = ⌈C√(d² − 1)/(ε/2)²⌉`;
/// - MUB, `d` outcomes: twice the tester size, since the tester sees `n/2`
///   subsampled outcomes, rounded up to a multiple of `d + 1`;
/// - MUB, `k` outcomes: `2M` times the tester size, rounded up to whole blocks.
pub fn required_copies(id: CertifierId, d: usize, params: &CertParams) -> Result<u64> {
    params.validate()?;
    ensure_power_of_two("d", d)?;
    let groups = d as u64 + 1;
    Ok(match id {
        CertifierId::RandomizedK => {
            check_k(d, params.k)?;
            params.randomized_tester(d)?.sample_size()
        }
        CertifierId::RandomizedKBoosted => {
            check_k(d, params.k)?;
            params.groups as u64 * params.randomized_tester(d)?.sample_size()
        }
        CertifierId::FixedPauli => {
            let dd = d * d - 1;
            dd as u64 * prod_bern_sample_size(dd, params.eps / 2.0, params.prod_bern_constant).max(2)
        }
        CertifierId::FixedMubD => {
            let nt = params.mub_tester(d)?.sample_size().max(params.mub_tester(d)?.min_samples());
            (2 * nt).div_ceil(groups) * groups
        }
        CertifierId::FixedMubK => {
            if params.k >= d {
                return Err(Error::InvalidParameter("k must be below d".into()));
            }
            let m = mub_k_simulation(d, params.k)?.players as u64;
            let nt = params.mub_tester(d)?.sample_size().max(params.mub_tester(d)?.min_samples());
            (2 * m * nt).div_ceil(groups * m) * groups * m
        }
        CertifierId::FixedCanonical => params.canonical_tester(d)?.sample_size(),
    })
}
