//! Classical subroutines: l2 identity testing, product-Bernoulli l2 testing,
//! threshold-vote amplification and l-bit simulation of d-ary samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Yes,
    No,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsMode {
    Paper,
    #[default]
    Calibrated,
}

impl std::fmt::Display for ConstantsMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConstantsMode::Paper => "paper",
            ConstantsMode::Calibrated => "calibrated",
        })
    }
}

impl std::str::FromStr for ConstantsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ConstantsMode::Paper),
            "calibrated" => Ok(ConstantsMode::Calibrated),
            _ => Err(Error::Parse(format!("unknown constants mode '{s}'"))),
        }
    }
}

/// Leading constant of the identity tester's sample size in paper mode.
pub const PAPER_IDENTITY_CONSTANT: f64 = 1000.0;
/// Leading constant in calibrated mode, from the calibration suite.
pub const CALIBRATED_IDENTITY_CONSTANT: f64 = 20.0;
/// Leading constant of the product-Bernoulli tester, `n = C√D/ε²`.
pub const CALIBRATED_PROD_BERN_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    /// l2 radius.
    pub eps: f64,
    /// Failure probability.
    pub delta: f64,
    /// Bound on `min{‖p‖₂, ‖q‖₂}`.
    pub b: f64,
    pub mode: ConstantsMode,
    pub calibrated_constant: f64,
}

impl TesterConfig {
    pub fn new(eps: f64, delta: f64, b: f64, mode: ConstantsMode) -> Result<Self> {
        let cfg = TesterConfig { eps, delta, b, mode, calibrated_constant: CALIBRATED_IDENTITY_CONSTANT };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("tester eps = {} outside (0, 1)", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("tester delta = {} outside (0, 1)", self.delta)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("tester b = {} must be positive", self.b)));
        }
        if self.calibrated_constant.is_nan() || self.calibrated_constant <= 0.0 {
            return Err(Error::InvalidParameter("calibrated constant must be positive".into()));
        }
        Ok(())
    }

    pub fn leading_constant(&self) -> f64 {
        match self.mode {
            ConstantsMode::Paper => PAPER_IDENTITY_CONSTANT,
            ConstantsMode::Calibrated => self.calibrated_constant,
        }
    }

    /// `n = C·b·ln(1/δ)/ε²`.
    pub fn sample_size(&self) -> u64 {
        (self.leading_constant() * self.b * (1.0 / self.delta).ln() / (self.eps * self.eps)).ceil() as u64
    }

    /// `⌈18 ln(1/δ)⌉` disjoint batches for the majority vote.
    pub fn batches(&self) -> usize {
        (18.0 * (1.0 / self.delta).ln()).ceil() as usize
    }

    /// Samples per batch at the configured size.
    pub fn batch_size(&self) -> u64 {
        self.sample_size() / self.batches() as u64
    }

    /// Fewest samples the tester accepts: two per batch.
    pub fn min_samples(&self) -> u64 {
        2 * self.batches() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityTestOutcome {
    pub verdict: Verdict,
    pub batches: usize,
    pub batch_size: u64,
    pub no_votes: usize,
    /// Per-batch unbiased estimates of `‖p − q‖₂²`.
    pub estimates: Vec<f64>,
}

/// Unbiased U-statistic for `m(m−1)‖p − q‖₂²` from multinomial counts:
/// `Σ_x [N_x(N_x − 1) − 2(m − 1)q_x N_x + m(m − 1)q_x²]`.
pub fn identity_statistic(q: &[f64], counts: &[u64]) -> f64 {
    let m: f64 = counts.iter().sum::<u64>() as f64;
    q.iter()
        .zip(counts)
        .map(|(&qx, &n)| {
            let n = n as f64;
            n * (n - 1.0) - 2.0 * (m - 1.0) * qx * n + m * (m - 1.0) * qx * qx
        })
        .sum()
}

fn check_distribution(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::InvalidParameter("empty reference distribution".into()));
    }
    let s: f64 = q.iter().sum();
    if q.iter().any(|x| x.is_nan() || *x < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("reference is not a distribution (sum {s})")));
    }
    Ok(())
}

/// Identity test from per-batch count vectors (each batch an independent
/// multinomial sample). NO iff a strict majority of batches vote NO.
pub fn test_identity_l2_batches(q: &[f64], batches: &[Vec<u64>], eps: f64) -> Result<IdentityTestOutcome> {
    check_distribution(q)?;
    if batches.is_empty() {
        return Err(Error::InsufficientSamples { need: 2, have: 0 });
    }
    let mut no_votes = 0;
    let mut estimates = Vec::with_capacity(batches.len());
    let mut batch_size = u64::MAX;
    for counts in batches {
        if counts.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), got: counts.len() });
        }
        let m: u64 = counts.iter().sum();
        if m < 2 {
            return Err(Error::InsufficientSamples { need: 2, have: m as usize });
        }
        batch_size = batch_size.min(m);
        let mf = m as f64;
        let norm = mf * (mf - 1.0);
        let a = identity_statistic(q, counts);
        estimates.push(a / norm);
        if a > norm * eps * eps / 2.0 {
            no_votes += 1;
        }
    }
    let verdict = if 2 * no_votes > batches.len() { Verdict::No } else { Verdict::Yes };
    Ok(IdentityTestOutcome { verdict, batches: batches.len(), batch_size, no_votes, estimates })
}

/// Counts of 1-based labels over `k` symbols.
pub fn count_labels(samples: &[usize], k: usize) -> Result<Vec<u64>> {
    let mut c = vec![0u64; k];
    for &s in samples {
        if s == 0 || s > k {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: k });
        }
        c[s - 1] += 1;
    }
    Ok(c)
}

/// Identity test on a sample sequence (1-based labels). The samples are cut
/// into `⌈18 ln(1/δ)⌉` equal contiguous batches; trailing leftovers are unused.
pub fn test_identity_l2(q: &[f64], samples: &[usize], cfg: &TesterConfig) -> Result<IdentityTestOutcome> {
    cfg.validate()?;
    check_distribution(q)?;
    let b = cfg.batches();
    let m = samples.len() / b;
    if m < 2 {
        return Err(Error::InsufficientSamples { need: 2 * b, have: samples.len() });
    }
    let batches = samples
        .chunks_exact(m)
        .take(b)
        .map(|chunk| count_labels(chunk, q.len()))
        .collect::<Result<Vec<_>>>()?;
    test_identity_l2_batches(q, &batches, cfg.eps)
}

/// Unbiased statistic for `n²‖p − q‖₂²` from per-coordinate ones-counts:
/// `Σ_i [(W_i − n q_i)² − W_i(n − W_i)/(n − 1)]`.
pub fn prod_bern_statistic(q: &[f64], ones: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    q.iter()
        .zip(ones)
        .map(|(&qi, &w)| {
            let w = w as f64;
            (w - nf * qi).powi(2) - w * (nf - w) / (nf - 1.0)
        })
        .sum()
}

/// Product-Bernoulli test from ones-counts over `n` samples.
pub fn test_prod_bern_l2_counts(q: &[f64], ones: &[u64], n: u64, eps: f64) -> Result<Verdict> {
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, have: n as usize });
    }
    if ones.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: ones.len() });
    }
    if q.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParameter("Bernoulli means must lie in [0, 1]".into()));
    }
    if ones.iter().any(|&w| w > n) {
        return Err(Error::InvalidParameter("ones-count exceeds sample count".into()));
    }
    let nf = n as f64;
    let z = prod_bern_statistic(q, ones, n);
    Ok(if z > nf * nf * eps * eps / 2.0 { Verdict::No } else { Verdict::Yes })
}

/// Product-Bernoulli test on 0/1 sample vectors.
pub fn test_prod_bern_l2(q: &[f64], samples: &[Vec<u8>], eps: f64) -> Result<Verdict> {
    let mut ones = vec![0u64; q.len()];
    for s in samples {
        if s.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), got: s.len() });
        }
        for (o, &bit) in ones.iter_mut().zip(s) {
            match bit {
                0 => {}
                1 => *o += 1,
                _ => return Err(Error::SymbolOutOfRange { symbol: bit as usize, alphabet: 2 }),
            }
        }
    }
    test_prod_bern_l2_counts(q, &ones, samples.len() as u64, eps)
}

/// `n = ⌈C√D/ε²⌉`.
pub fn prod_bern_sample_size(dim: usize, eps: f64, constant: f64) -> u64 {
    (constant * (dim as f64).sqrt() / (eps * eps)).ceil() as u64
}

pub const VOTE_T1: f64 = 0.03;
pub const VOTE_T2: f64 = 0.1;

/// NO iff the fraction of NO votes exceeds `(t₁ + t₂)/2`.
pub fn amplify_vote(results: &[Verdict], t1: f64, t2: f64) -> Result<Verdict> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("no votes to amplify".into()));
    }
    let no = results.iter().filter(|v| **v == Verdict::No).count();
    Ok(if no as f64 / results.len() as f64 > (t1 + t2) / 2.0 { Verdict::No } else { Verdict::Yes })
}

/// `T = ⌈2 ln(1/α)/(t₂ − t₁)²⌉`.
pub fn vote_groups(alpha: f64, t1: f64, t2: f64) -> usize {
    (2.0 * (1.0 / alpha).ln() / ((t2 - t1) * (t2 - t1))).ceil() as usize
}

/// Parameters of the l-bit simulation of one d-ary sample.
///
/// The domain is cut into `T = ⌈d/s⌉` parts of size `s = 2^ℓ − 1`. With
/// `T ≥ 2` an attempt uses two blocks of `T` players; player `t` of each block
/// owns part `t`, sends its within-part index (1..=s) when its sample falls in
/// its part and a private fair coin allows it, and 0 otherwise. The referee
/// accepts iff exactly one block-A player `t` speaks and block-B player `t` is
/// silent, which makes the accepted value exactly `p`-distributed. With
/// `T = 1` a single player always speaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub d: usize,
    pub ell: u32,
    pub eta_attempts_factor: u32,
    pub part_size: usize,
    pub parts: usize,
    pub players_per_attempt: usize,
    pub attempts: usize,
    pub players: usize,
}

impl SimulationConfig {
    pub fn new(d: usize, ell: u32, eta: f64) -> Result<Self> {
        if d == 0 || ell == 0 || ell > 30 {
            return Err(Error::InvalidParameter(format!("invalid simulation shape d = {d}, ell = {ell}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta = {eta} outside (0, 1)")));
        }
        let log_term = (1.0 / eta).ln().ceil() as u32;
        let part_size = (1usize << ell) - 1;
        let parts = d.div_ceil(part_size);
        let (players_per_attempt, attempts) = if parts == 1 {
            (1, 40 * log_term as usize)
        } else {
            (2 * parts, 20 * log_term as usize)
        };
        Ok(SimulationConfig {
            d,
            ell,
            eta_attempts_factor: log_term,
            part_size,
            parts,
            players_per_attempt,
            attempts,
            players: players_per_attempt * attempts,
        })
    }

    /// `M = 40⌈ln(1/η)⌉⌈d/(2^ℓ − 1)⌉`.
    pub fn formula_players(&self) -> usize {
        40 * self.eta_attempts_factor as usize * self.parts
    }

    /// Largest message value; messages fit in `ℓ` bits.
    pub fn max_message(&self) -> u32 {
        self.part_size as u32
    }

    /// Per-attempt success probability under `p` (0-based symbols).
    pub fn success_probability(&self, p: &[f64]) -> f64 {
        if self.parts == 1 {
            return 1.0;
        }
        let prod: f64 = (0..self.parts).map(|t| 1.0 - self.part_mass(p, t) / 2.0).product();
        0.5 * prod
    }

    fn part_mass(&self, p: &[f64], t: usize) -> f64 {
        let lo = t * self.part_size;
        let hi = ((t + 1) * self.part_size).min(self.d);
        p[lo..hi].iter().sum()
    }
}

/// Message of a player owning part `part` holding 0-based `sample`.
pub fn player_message(cfg: &SimulationConfig, part: usize, sample: usize, coin: bool) -> Result<u32> {
    if sample >= cfg.d {
        return Err(Error::SymbolOutOfRange { symbol: sample, alphabet: cfg.d });
    }
    let lo = part * cfg.part_size;
    let in_part = sample >= lo && sample < lo + cfg.part_size;
    let speak = in_part && (cfg.parts == 1 || coin);
    let msg = if speak { (sample - lo + 1) as u32 } else { 0 };
    if msg > cfg.max_message() {
        return Err(Error::Protocol(format!("message {msg} exceeds {} bits", cfg.ell)));
    }
    Ok(msg)
}

/// Referee decision for one attempt given all player messages
/// (block A then block B). Returns a 0-based symbol.
pub fn referee(cfg: &SimulationConfig, messages: &[u32]) -> Result<Option<usize>> {
    if messages.len() != cfg.players_per_attempt {
        return Err(Error::Protocol(format!(
            "expected {} messages, got {}",
            cfg.players_per_attempt,
            messages.len()
        )));
    }
    if messages.iter().any(|&m| m > cfg.max_message()) {
        return Err(Error::Protocol("message exceeds the bit budget".into()));
    }
    if cfg.parts == 1 {
        return Ok(messages[0].checked_sub(1).map(|v| v as usize));
    }
    let (a, b) = messages.split_at(cfg.parts);
    let mut speakers = a.iter().enumerate().filter(|(_, &m)| m != 0);
    let first = speakers.next();
    match (first, speakers.next()) {
        (Some((t, &m)), None) if b[t] == 0 => Ok(Some(t * cfg.part_size + m as usize - 1)),
        _ => Ok(None),
    }
}

/// One attempt from explicit samples and coins (`players_per_attempt` each).
pub fn simulate_attempt(cfg: &SimulationConfig, samples: &[usize], coins: &[bool]) -> Result<Option<usize>> {
    if samples.len() != cfg.players_per_attempt || coins.len() != cfg.players_per_attempt {
        return Err(Error::Protocol("one sample and one coin per player".into()));
    }
    let messages = samples
        .iter()
        .zip(coins)
        .enumerate()
        .map(|(j, (&s, &c))| player_message(cfg, j % cfg.parts, s, c))
        .collect::<Result<Vec<u32>>>()?;
    referee(cfg, &messages)
}

/// Runs attempts in order over `M` player samples (0-based symbols) and
/// returns the first accepted value, or `None` (⊥).
pub fn eta_simulate<R: Rng + ?Sized>(
    samples: &[usize],
    cfg: &SimulationConfig,
    rng: &mut R,
) -> Result<Option<usize>> {
    let coins: Vec<bool> = (0..cfg.players).map(|_| rng.random()).collect();
    eta_simulate_with_coins(samples, &coins, cfg)
}

/// As [`eta_simulate`] with the players' private coins supplied up front.
pub fn eta_simulate_with_coins(samples: &[usize], coins: &[bool], cfg: &SimulationConfig) -> Result<Option<usize>> {
    if samples.len() < cfg.players {
        return Err(Error::InsufficientSamples { need: cfg.players, have: samples.len() });
    }
    if coins.len() < cfg.players {
        return Err(Error::Protocol(format!("{} coins for {} players", coins.len(), cfg.players)));
    }
    let w = cfg.players_per_attempt;
    for (s, c) in samples[..cfg.players].chunks_exact(w).zip(coins.chunks_exact(w)) {
        if let Some(x) = simulate_attempt(cfg, s, c)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Exact per-attempt law by enumerating every sample/coin assignment:
/// `(P(accept), P(output = x | accept))`.
pub fn enumerate_attempt(cfg: &SimulationConfig, p: &[f64]) -> Result<(f64, Vec<f64>)> {
    if p.len() != cfg.d {
        return Err(Error::DimensionMismatch { expected: cfg.d, got: p.len() });
    }
    let players = cfg.players_per_attempt;
    let states = (2 * cfg.d) as u128;
    let size = states.checked_pow(players as u32).unwrap_or(u128::MAX);
    if size > 10_000_000 {
        return Err(Error::EnumerationCap { size, cap: 10_000_000 });
    }
    let mut out = vec![0.0; cfg.d];
    let mut samples = vec![0usize; players];
    let mut coins = vec![false; players];
    for idx in 0..size as u64 {
        let mut rest = idx;
        let mut weight = 1.0;
        for j in 0..players {
            let s = (rest % states as u64) as usize;
            rest /= states as u64;
            samples[j] = s / 2;
            coins[j] = s % 2 == 1;
            weight *= p[samples[j]] * 0.5;
        }
        if weight == 0.0 {
            continue;
        }
        if let Some(x) = simulate_attempt(cfg, &samples, &coins)? {
            out[x] += weight;
        }
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    }
    Ok((total, out))
}
