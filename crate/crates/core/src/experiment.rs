//! Seeded Monte Carlo front end: experiment configuration, single trials,
//! success-rate estimation with Wilson intervals, grid sweeps and CSV output.
//!
//! Trial `i` of an experiment with master seed `s` uses seed
//! `derive_seed(s, i)`; inside a trial, the instance, the copy oracle and the
//! certifier each get their own stream `derive_seed(trial_seed, 0 | 1 | 2)`.
//! Streams are ChaCha8, so replays match across platforms.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::certifiers::{certify, required_copies, CertParams, CertResult, CertifierId, Subsampling};
use crate::classical::{ConstantsMode, Verdict};
use crate::hard_instances::{sample_perturbation, PerturbationBasis, DEFAULT_C};
use crate::linalg::{schatten_norm_hermitian, Schatten};
use crate::states::{is_power_of_two, CopyOracle, DensityMatrix, StateJson};
use crate::stats::Proportion;
use crate::{Error, Result};

/// Counter-based seed splitter (SplitMix64 finalizer over `master + (i+1)·γ`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Copy budget: a fixed count or `"auto"` (the certifier's sizing formula).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CopyBudget {
    #[default]
    Auto,
    Copies(u64),
}

impl Serialize for CopyBudget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CopyBudget::Auto => s.serialize_str("auto"),
            CopyBudget::Copies(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for CopyBudget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(CopyBudget::Copies(n)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for CopyBudget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(CopyBudget::Auto);
        }
        s.parse::<u64>()
            .map(CopyBudget::Copies)
            .map_err(|_| Error::Parse(format!("copy budget must be 'auto' or an integer, got '{s}'")))
    }
}

/// Which state the copies come from. The reference `ρ₀` is `ρ_mm` unless the
/// config names a reference file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    /// `ρ = ρ₀`.
    #[default]
    Null,
    /// `ρ = |+⟩⟨+|^{⊗N}`.
    Plus,
    /// A fresh random hard instance per trial.
    Hard {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ell: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<String>,
    },
    /// A density matrix from a state JSON file.
    File { path: PathBuf },
    /// `ρ_mm` or `ρ₊` by a fair per-trial coin.
    CoinFlip,
}

impl FromStr for InstanceSpec {
    type Err = Error;
    /// `null`, `plus`, `coin-flip`, `file:<path>`, `hard` or
    /// `hard:ell=<l>,c=<c>,basis=pauli`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "null" => Ok(InstanceSpec::Null),
            "plus" => Ok(InstanceSpec::Plus),
            "coin-flip" => Ok(InstanceSpec::CoinFlip),
            "file" if !rest.is_empty() => Ok(InstanceSpec::File { path: rest.into() }),
            "hard" => {
                let (mut ell, mut c, mut basis) = (None, None, None);
                for kv in rest.split(',').filter(|x| !x.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad hard option '{kv}'")))?;
                    let bad = |_| Error::Parse(format!("bad value for '{k}': '{v}'"));
                    match k {
                        "ell" => ell = Some(v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
                        "c" => c = Some(v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
                        "basis" => basis = Some(v.to_string()),
                        _ => return Err(Error::Parse(format!("unknown hard option '{k}'"))),
                    }
                }
                Ok(InstanceSpec::Hard { ell, c, basis })
            }
            _ => Err(Error::Parse(format!("unknown instance '{s}'"))),
        }
    }
}

/// The correct answer for one trial. Hard instances that land below distance
/// `ε` are in neither hypothesis, so either answer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Yes,
    No,
    Either,
}

impl Expected {
    pub fn accepts(&self, v: Verdict) -> bool {
        match self {
            Expected::Yes => v == Verdict::Yes,
            Expected::No => v == Verdict::No,
            Expected::Either => true,
        }
    }
}

fn default_trials() -> u64 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub certifier: CertifierId,
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    #[serde(default)]
    pub n: CopyBudget,
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: ConstantsMode,
    #[serde(default)]
    pub subsampling: Subsampling,
    /// Vote groups for the boosted certifier (default 166).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prod_bern_constant: Option<f64>,
    /// State JSON for `ρ₀`; the maximally mixed state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(certifier: CertifierId, d: usize, k: usize, eps: f64) -> Self {
        ExperimentConfig {
            certifier,
            d,
            k,
            eps,
            n: CopyBudget::Auto,
            instance: InstanceSpec::Null,
            trials: default_trials(),
            seed: 0,
            mode: ConstantsMode::Calibrated,
            subsampling: Subsampling::Multinomial,
            groups: None,
            identity_constant: None,
            prod_bern_constant: None,
            reference: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_power_of_two(self.d) || self.d < 2 {
            return Err(Error::InvalidParameter(format!("d = {} must be a power of 2 and at least 2", self.d)));
        }
        if !is_power_of_two(self.k) || self.k < 2 || self.k > self.d {
            return Err(Error::InvalidParameter(format!("k = {} must be a power of 2 in [2, d]", self.k)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        self.params().validate()
    }

    pub fn params(&self) -> CertParams {
        let mut p = CertParams::new(self.eps, self.k, self.mode);
        p.subsampling = self.subsampling;
        if let Some(g) = self.groups {
            p.groups = g;
        }
        if let Some(c) = self.identity_constant {
            p.identity_constant = c;
        }
        if let Some(c) = self.prod_bern_constant {
            p.prod_bern_constant = c;
        }
        p
    }

    /// Resolved copy budget.
    pub fn copies(&self) -> Result<u64> {
        match self.n {
            CopyBudget::Copies(n) => Ok(n),
            CopyBudget::Auto => required_copies(self.certifier, self.d, &self.params()),
        }
    }

    pub fn reference_state(&self) -> Result<DensityMatrix> {
        match &self.reference {
            None => DensityMatrix::mixed(self.d),
            Some(p) => load_state(p, self.d),
        }
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: u64) -> u64 {
        derive_seed(self.seed, i)
    }
}

fn load_state(path: &PathBuf, d: usize) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    let j: StateJson = serde_json::from_str(&text)?;
    let rho = DensityMatrix::from_json(&j)?;
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho.dim() });
    }
    Ok(rho)
}

/// The state behind the copies for one trial and the answer a correct
/// certifier should give.
pub fn build_instance(cfg: &ExperimentConfig, rho0: &DensityMatrix, trial_seed: u64) -> Result<(DensityMatrix, Expected)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, 0));
    let d = cfg.d;
    let far = |rho: &DensityMatrix| -> Result<Expected> {
        let dist = schatten_norm_hermitian(&(rho.matrix() - rho0.matrix()), Schatten::One)?;
        Ok(if dist <= 1e-9 {
            Expected::Yes
        } else if dist > cfg.eps {
            Expected::No
        } else {
            Expected::Either
        })
    };
    match &cfg.instance {
        InstanceSpec::Null => Ok((rho0.clone(), Expected::Yes)),
        InstanceSpec::Plus => {
            let rho = DensityMatrix::plus(d)?;
            let e = far(&rho)?;
            Ok((rho, e))
        }
        InstanceSpec::CoinFlip => {
            if rng.random::<bool>() {
                let rho = DensityMatrix::plus(d)?;
                let e = far(&rho)?;
                Ok((rho, e))
            } else {
                Ok((rho0.clone(), Expected::Yes))
            }
        }
        InstanceSpec::Hard { ell, c, basis } => {
            if let Some(b) = basis {
                if b != "pauli" {
                    return Err(Error::Unsupported(format!("hard-instance basis '{b}'")));
                }
            }
            let ell = ell.unwrap_or((d * d).div_ceil(2));
            let h = sample_perturbation(&PerturbationBasis::pauli(d)?, ell, cfg.eps, c.unwrap_or(DEFAULT_C), &mut rng)?;
            let e = far(&h.sigma)?;
            Ok((h.sigma, e))
        }
        InstanceSpec::File { path } => {
            let rho = load_state(path, d)?;
            let e = far(&rho)?;
            Ok((rho, e))
        }
    }
}

/// One certification run. Deterministic given `(cfg, trial_seed)`.
pub fn run_trial(cfg: &ExperimentConfig, trial_seed: u64) -> Result<CertResult> {
    cfg.validate()?;
    let rho0 = cfg.reference_state()?;
    run_trial_with(cfg, &rho0, trial_seed).map(|t| t.result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub expected: Expected,
    pub success: bool,
    pub result: CertResult,
}

fn run_trial_with(cfg: &ExperimentConfig, rho0: &DensityMatrix, trial_seed: u64) -> Result<TrialRecord> {
    let (rho, expected) = build_instance(cfg, rho0, trial_seed)?;
    let mut oracle = CopyOracle::new(rho, cfg.copies()?, derive_seed(trial_seed, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, 2));
    let mut result = certify(cfg.certifier, &mut oracle, rho0, &cfg.params(), &mut rng)?;
    result.seed = Some(trial_seed);
    Ok(TrialRecord { expected, success: expected.accepts(result.verdict), result })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    /// Resolved copy budget per trial.
    pub copies: u64,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub wall_ms: u64,
    pub trial_seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ExperimentRecord {
    pub fn proportion(&self) -> Proportion {
        Proportion::new(self.successes, self.trials)
    }

    /// Same record with the wall time zeroed, for byte-reproducible output.
    pub fn without_timing(mut self) -> Self {
        self.wall_ms = 0;
        self
    }
}

/// Success rate over `cfg.trials` independent trials, run in parallel and
/// merged by trial index.
pub fn estimate_success(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let rho0 = cfg.reference_state()?;
    let copies = cfg.copies()?;
    let seeds: Vec<u64> = (0..cfg.trials).map(|i| cfg.trial_seed(i)).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&s| run_trial_with(cfg, &rho0, s).map(|t| t.success))
        .collect::<Result<Vec<bool>>>()?;
    let successes = outcomes.iter().filter(|s| **s).count() as u64;
    let p = Proportion::new(successes, cfg.trials);
    let mut warnings = Vec::new();
    if cfg.trials < 30 {
        warnings.push(format!("only {} trials: the Wilson interval is wide and approximate", cfg.trials));
    }
    Ok(ExperimentRecord {
        config: cfg.clone(),
        copies,
        trials: cfg.trials,
        successes,
        rate: p.rate,
        wilson_lo: p.wilson_lo,
        wilson_hi: p.wilson_hi,
        wall_ms: start.elapsed().as_millis() as u64,
        trial_seeds: seeds,
        warnings,
    })
}

/// Axes of a sweep. Empty axes keep the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub certifier: Vec<CertifierId>,
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub n: Vec<CopyBudget>,
    #[serde(default)]
    pub instance: Vec<InstanceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub grid: Grid,
}

impl SweepConfig {
    /// Cartesian product of the axes, in row-major order
    /// (certifier, d, k, eps, n, instance).
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let b = &self.base;
        let mut out = Vec::new();
        for c in axis(&self.grid.certifier, b.certifier) {
            for d in axis(&self.grid.d, b.d) {
                for k in axis(&self.grid.k, b.k) {
                    for eps in axis(&self.grid.eps, b.eps) {
                        for n in axis(&self.grid.n, b.n) {
                            for inst in axis(&self.grid.instance, b.instance.clone()) {
                                let mut cfg = b.clone();
                                cfg.certifier = c;
                                cfg.d = d;
                                cfg.k = k;
                                cfg.eps = eps;
                                cfg.n = n;
                                cfg.instance = inst;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<ExperimentRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One record per cell; a failing cell records its error and the sweep
/// continues.
pub fn sweep(grid: &[ExperimentConfig]) -> Result<Vec<SweepCell>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(index, cfg)| {
            let (record, error) = match estimate_success(cfg) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepCell { index, config: cfg.clone(), record, error }
        })
        .collect())
}

pub const CSV_HEADER: [&str; 13] = [
    "certifier", "d", "k", "eps", "n", "mode", "trials", "successes", "rate", "wilson_lo", "wilson_hi", "seed", "wall_ms",
];

/// CSV with the fixed header; failed cells keep their config columns and
/// leave the result columns empty.
pub fn write_csv<W: std::io::Write>(cells: &[SweepCell], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for cell in cells {
        let c = &cell.config;
        let mut row = vec![c.certifier.to_string(), c.d.to_string(), c.k.to_string(), c.eps.to_string()];
        match &cell.record {
            Some(r) => row.extend([
                r.copies.to_string(),
                c.mode.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.rate.to_string(),
                r.wilson_lo.to_string(),
                r.wilson_hi.to_string(),
                c.seed.to_string(),
                if timing { r.wall_ms.to_string() } else { "0".into() },
            ]),
            None => {
                let n = match c.n {
                    CopyBudget::Auto => "auto".to_string(),
                    CopyBudget::Copies(n) => n.to_string(),
                };
                row.extend([n, c.mode.to_string(), c.trials.to_string()]);
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.extend([c.seed.to_string(), String::new()]);
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(id: CertifierId) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(id, 4, 4, 1.0);
        c.trials = 20;
        c.seed = 42;
        c
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let s: Vec<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), s.len());
        assert_eq!(derive_seed(7, 3), s[3]);
        assert_ne!(derive_seed(8, 3), s[3]);
    }

    #[test]
    fn trial_is_deterministic() {
        let mut cfg = small(CertifierId::RandomizedK);
        cfg.instance = InstanceSpec::Plus;
        let a = serde_json::to_vec(&run_trial(&cfg, 99).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_trial(&cfg, 99).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_json_and_errors() {
        let text = r#"{"certifier":"fixed-mub-k","d":4,"k":2,"eps":1.0,"n":"auto",
            "instance":{"kind":"hard","ell":8},"trials":3,"seed":5}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.instance, InstanceSpec::Hard { ell: Some(8), c: None, basis: None });
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(&text.replace("fixed-mub-k", "fixed-nope")).is_err());
        assert!(ExperimentConfig::from_json(&text.replace("\"d\":4", "\"d\":6")).is_err());
        assert!(ExperimentConfig::from_json(&text.replace("\"trials\":3", "\"trials\":0")).is_err());
        assert!(ExperimentConfig::from_json(&text.replace("1.0", "2.5")).is_err());
        assert_eq!(serde_json::to_string(&CopyBudget::Copies(5)).unwrap(), "5");
    }

    #[test]
    fn instance_strings() {
        assert_eq!("null".parse::<InstanceSpec>().unwrap(), InstanceSpec::Null);
        assert_eq!("coin-flip".parse::<InstanceSpec>().unwrap(), InstanceSpec::CoinFlip);
        assert_eq!(
            "hard:ell=10,c=3.5".parse::<InstanceSpec>().unwrap(),
            InstanceSpec::Hard { ell: Some(10), c: Some(3.5), basis: None }
        );
        assert!("hard:foo=1".parse::<InstanceSpec>().is_err());
        assert!("bogus".parse::<InstanceSpec>().is_err());
    }

    #[test]
    fn null_instance_mostly_yes() {
        let r = estimate_success(&small(CertifierId::FixedMubD)).unwrap();
        assert!(r.successes * 3 >= 2 * r.trials);
        assert!(r.warnings.len() == 1);
        assert!(0.0 <= r.wilson_lo && r.wilson_hi <= 1.0);
    }

    #[test]
    fn single_trial_interval_is_wide() {
        let mut cfg = small(CertifierId::RandomizedK);
        cfg.trials = 1;
        let r = estimate_success(&cfg).unwrap();
        assert!(r.wilson_hi - r.wilson_lo > 0.7);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn sweep_records_errors_and_keeps_going() {
        let mut bad = small(CertifierId::RandomizedK);
        bad.n = CopyBudget::Copies(3);
        let grid = vec![small(CertifierId::FixedMubD), bad];
        let cells = sweep(&grid).unwrap();
        assert!(cells[0].record.is_some());
        assert!(cells[1].error.is_some());
        assert!(sweep(&[]).is_err());
        let mut buf = Vec::new();
        write_csv(&cells, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn sweep_cells_are_order_independent() {
        let a = small(CertifierId::FixedPauli);
        let mut b = small(CertifierId::FixedMubD);
        b.instance = InstanceSpec::Plus;
        let x = sweep(&[a.clone(), b.clone()]).unwrap();
        let y = sweep(&[b, a]).unwrap();
        let strip = |c: &SweepCell| c.record.clone().map(ExperimentRecord::without_timing);
        assert_eq!(strip(&x[0]), strip(&y[1]));
        assert_eq!(strip(&x[1]), strip(&y[0]));
    }

    #[test]
    fn grid_expansion() {
        let sc = SweepConfig {
            base: small(CertifierId::RandomizedK),
            grid: Grid { n: vec![CopyBudget::Copies(1000), CopyBudget::Copies(2000)], k: vec![2, 4], ..Default::default() },
        };
        let cells = sc.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].k, cells[1].n), (2, CopyBudget::Copies(2000)));
    }
}
