//! Invariant suites behind `qcert verify` and the acceptance tests.
//!
//! Every suite is seeded from one master seed, returns named checks with the
//! measured value and the limit it was held to, and never panics: internal
//! errors surface as a failing `error` check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certifiers::CertifierId;
use crate::chi_square::{
    decoupled_bound_check, enumerate_outcome_law, mic_kernel, mic_kernel_classical, perturbation_family,
};
use crate::classical::{
    eta_simulate, enumerate_attempt, prod_bern_sample_size, test_identity_l2, test_prod_bern_l2, ConstantsMode,
    SimulationConfig, TesterConfig, Verdict, CALIBRATED_PROD_BERN_CONSTANT,
};
use crate::error::{Error, Result};
use crate::experiment::{derive_seed, estimate_success, CopyBudget, ExperimentConfig, InstanceSpec};
use crate::haar::{
    domain_compression_check, first_moment_check, fourth_moment_bound_check, random_hermitian,
    random_traceless_hermitian, second_moment_check,
};
use crate::hard_instances::{
    adversarial_basis, opnorm_concentration_experiment, sample_perturbation, validate_hard_instance,
    PerturbationBasis, DEFAULT_C,
};
use crate::linalg::hs_norm;
use crate::mic::{mic_apply, mic_eigenbasis, mic_matrix, mic_property_report_with, MicBuilder};
use crate::states::{
    build_mub, pauli_probability_vector, pauli_set, two_design_check, DensityMatrix, FixedScheme,
    OutcomeDistribution, Povm,
};
use crate::stats::{wilson_interval, Proportion};

pub const DEFAULT_SUITE_SEED: u64 = 20_241_015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Mic,
    Norms,
    ChiSquare,
    Fooling,
    Pauli,
    Mub,
    Haar,
    Compression,
    Opnorm,
    HardInstance,
    Simulation,
    Certifiers,
    Scaling,
    Testers,
}

impl Suite {
    pub const ALL: [Suite; 14] = [
        Suite::Mic,
        Suite::Norms,
        Suite::ChiSquare,
        Suite::Fooling,
        Suite::Pauli,
        Suite::Mub,
        Suite::Haar,
        Suite::Compression,
        Suite::Opnorm,
        Suite::HardInstance,
        Suite::Simulation,
        Suite::Certifiers,
        Suite::Scaling,
        Suite::Testers,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Mic => "mic",
            Suite::Norms => "norms",
            Suite::ChiSquare => "chi-square",
            Suite::Fooling => "fooling",
            Suite::Pauli => "pauli",
            Suite::Mub => "mub",
            Suite::Haar => "haar",
            Suite::Compression => "compression",
            Suite::Opnorm => "opnorm",
            Suite::HardInstance => "hard-instance",
            Suite::Simulation => "simulation",
            Suite::Certifiers => "certifiers",
            Suite::Scaling => "scaling",
            Suite::Testers => "testers",
        }
    }

    /// 1-based position in the acceptance list.
    pub fn criterion(&self) -> u32 {
        Suite::ALL.iter().position(|s| s == self).expect("listed") as u32 + 1
    }

    pub fn title(&self) -> &'static str {
        match self {
            Suite::Mic => "MIC property suite",
            Suite::Norms => "closed-form MIC norms",
            Suite::ChiSquare => "exact chi-square identities",
            Suite::Fooling => "canonical-basis fooling",
            Suite::Pauli => "Pauli l2 identity",
            Suite::Mub => "MUB construction and l2 lemma",
            Suite::Haar => "Haar moments",
            Suite::Compression => "domain compression",
            Suite::Opnorm => "operator-norm concentration",
            Suite::HardInstance => "hard-instance validity",
            Suite::Simulation => "eta-simulation",
            Suite::Certifiers => "end-to-end certifiers",
            Suite::Scaling => "qualitative scaling",
            Suite::Testers => "classical tester calibration",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// `"all"` or a comma-separated list of suite names.
pub fn parse_selector(selector: &str) -> Result<Vec<Suite>> {
    let selector = selector.trim();
    if selector == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    let mut out: Vec<Suite> = Vec::new();
    for part in selector.split(',').map(str::trim) {
        let s: Suite = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty suite selector".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check::compare(name, measured, limit, measured <= limit, "<=")
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check::compare(name, measured, limit, measured >= limit, ">=")
    }

    pub fn above(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check::compare(name, measured, limit, measured > limit, ">")
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), passed, measured: None, limit: None, relation: None, note: None }
    }

    fn compare(name: impl Into<String>, measured: f64, limit: f64, passed: bool, rel: &str) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: Some(measured),
            limit: Some(limit),
            relation: Some(rel.into()),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!("{} {}", if self.passed { "ok  " } else { "FAIL" }, self.name);
        if let (Some(m), Some(l), Some(r)) = (self.measured, self.limit, &self.relation) {
            s.push_str(&format!(": {m:.6e} {r} {l:.6e}"));
        }
        if let Some(n) = &self.note {
            s.push_str(&format!(" ({n})"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub criterion: u32,
    pub title: String,
    pub passed: bool,
    pub elapsed_ms: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.failures().iter().map(|c| c.name.as_str()).collect();
        let mut s = format!(
            "{} criterion {:>2} [{}] {}: {}/{} checks",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.suite,
            self.title,
            self.checks.len() - failed.len(),
            self.checks.len()
        );
        if !failed.is_empty() {
            s.push_str(&format!("; failed: {}", failed.join(", ")));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Channel constructor under test; swapped out by mutation checks.
    pub mic_builder: MicBuilder,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: DEFAULT_SUITE_SEED, mic_builder: mic_matrix }
    }
}

pub fn verify_suites(selector: &str, opts: &SuiteOptions) -> Result<VerifyReport> {
    let suites = parse_selector(selector)?;
    let reports: Vec<SuiteReport> = suites.iter().map(|s| run_suite(*s, opts)).collect();
    Ok(VerifyReport { seed: opts.seed, passed: reports.iter().all(|r| r.passed), suites: reports })
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> SuiteReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, suite.criterion() as u64));
    let result = match suite {
        Suite::Mic => mic_suite(opts.mic_builder, &mut rng),
        Suite::Norms => norms_suite(opts.mic_builder),
        Suite::ChiSquare => chi_square_suite(&mut rng),
        Suite::Fooling => fooling_suite(opts.mic_builder),
        Suite::Pauli => pauli_suite(&mut rng),
        Suite::Mub => mub_suite(&mut rng),
        Suite::Haar => haar_suite(&mut rng),
        Suite::Compression => compression_suite(&mut rng),
        Suite::Opnorm => opnorm_suite(&mut rng),
        Suite::HardInstance => hard_instance_suite(&mut rng),
        Suite::Simulation => simulation_suite(&mut rng),
        Suite::Certifiers => certifiers_suite(opts.seed),
        Suite::Scaling => scaling_suite(opts.seed),
        Suite::Testers => testers_suite(&mut rng),
    };
    let mut checks = result.unwrap_or_else(|e| vec![Check::flag("error", false).with_note(e.to_string())]);
    let secs = start.elapsed().as_secs_f64();
    if let Some(limit) = runtime_limit(suite) {
        checks.push(Check::at_most("runtime seconds", secs, limit));
    }
    SuiteReport {
        suite,
        criterion: suite.criterion(),
        title: suite.title().to_string(),
        passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
        elapsed_ms: (secs * 1000.0) as u64,
        checks,
    }
}

fn runtime_limit(suite: Suite) -> Option<f64> {
    match suite {
        Suite::Mic | Suite::ChiSquare => Some(60.0),
        Suite::Haar => Some(300.0),
        Suite::Certifiers => Some(900.0),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// 1-4: channel and chi-square identities
// ---------------------------------------------------------------------------

const MIC_POVMS: usize = 200;
const MIC_PROBES: usize = 50;
const EXACT_TOL: f64 = 1e-10;
const BOUND_SLACK: f64 = 1e-8;

fn mic_suite(build: MicBuilder, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let dims = [2usize, 4, 8, 16];
    let names = [
        "psd",
        "hermitian",
        "unital",
        "trace-preserving",
        "hermiticity-preserving",
        "matrix-vs-direct",
        "op-norm <= 1",
        "trace-norm <= min(d,k)",
        "hs^2 <= trace",
        "hs^2 <= op*trace",
    ];
    let mut violations: BTreeMap<&str, usize> = names.iter().map(|n| (*n, 0)).collect();
    let mut worst_min_eig = f64::INFINITY;
    let mut worst_exact: f64 = 0.0;
    let mut worst_eigenbasis: f64 = 0.0;
    for i in 0..MIC_POVMS {
        let d = dims[i % dims.len()];
        let k = 2 + (i / dims.len()) % (d.min(8) - 1);
        let povm = Povm::random(d, k, rng)?;
        let r = mic_property_report_with(build, &povm, MIC_PROBES, rng)?;
        worst_min_eig = worst_min_eig.min(r.min_eigenvalue);
        worst_exact = worst_exact
            .max(r.unital_residual)
            .max(r.trace_residual)
            .max(r.hermiticity_residual)
            .max(r.direct_residual);
        for v in r.violations(EXACT_TOL, BOUND_SLACK) {
            if let Some(c) = violations.iter_mut().find(|(n, _)| **n == v) {
                *c.1 += 1;
            }
        }
        if d <= 4 {
            let c = build(&povm)?;
            if let Ok(e) = mic_eigenbasis(&c) {
                let x = random_hermitian(d, rng);
                let direct = mic_apply(&c, &x)?;
                worst_eigenbasis = worst_eigenbasis
                    .max(e.orthonormality_residual())
                    .max(hs_norm(&(e.apply(&x) - direct)));
            } else {
                worst_eigenbasis = f64::INFINITY;
            }
        }
    }
    let mut checks: Vec<Check> = violations
        .into_iter()
        .map(|(name, count)| Check::at_most(name, count as f64, 0.0).with_note(format!("violating POVMs of {MIC_POVMS}")))
        .collect();
    checks.push(Check::at_least("min eigenvalue", worst_min_eig, -1e-8));
    checks.push(Check::at_most("worst preservation residual", worst_exact, EXACT_TOL));
    checks.push(Check::at_most("eigenbasis reconstruction", worst_eigenbasis, 1e-8));
    Ok(checks)
}

fn norms_suite(build: MicBuilder) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let n = build(&Povm::canonical(4)?)?.norms()?;
    checks.push(Check::at_most("canonical d=4 trace norm = 4", (n.trace - 4.0).abs(), 1e-9));
    checks.push(Check::at_most("canonical d=4 hs norm = 2", (n.hs - 2.0).abs(), 1e-9));
    checks.push(Check::at_most("canonical d=4 op norm = 1", (n.op - 1.0).abs(), 1e-9));
    for q in 1..=2usize {
        let (mut t, mut h, mut o) = (0.0f64, 0.0f64, 0.0f64);
        for povm in pauli_set(q)?.povms()? {
            let n = build(&povm)?.norms()?;
            t = t.max((n.trace - 2.0).abs());
            h = h.max((n.hs - 2f64.sqrt()).abs());
            o = o.max((n.op - 1.0).abs());
        }
        let d = 1 << q;
        checks.push(Check::at_most(format!("pauli d={d} trace norm = 2"), t, 1e-9));
        checks.push(Check::at_most(format!("pauli d={d} hs norm = sqrt 2"), h, 1e-9));
        checks.push(Check::at_most(format!("pauli d={d} op norm = 1"), o, 1e-9));
    }
    Ok(checks)
}

/// Small `d = 2` schemes: random POVMs with 2 or 3 outcomes plus the
/// structured Pauli and canonical schemes, for `n = 1..=4` copies.
fn chi_square_schemes(rng: &mut ChaCha8Rng) -> Result<Vec<FixedScheme>> {
    let paulis: Vec<Povm> = pauli_set(1)?.povms()?;
    let mut out = Vec::new();
    for n in 1..=4usize {
        for k in 2..=3usize {
            for _ in 0..3 {
                out.push(FixedScheme::new((0..n).map(|_| Povm::random(2, k, rng)).collect::<Result<_>>()?)?);
            }
            let mixed: Vec<Povm> = (0..n)
                .map(|i| Povm::random(2, 2 + (i + k) % 2, rng))
                .collect::<Result<_>>()?;
            out.push(FixedScheme::new(mixed)?);
        }
        out.push(FixedScheme::repeated(paulis[2].clone(), n)?);
        out.push(FixedScheme::new((0..n).map(|i| paulis[i % 3].clone()).collect())?);
        out.push(FixedScheme::repeated(Povm::canonical(2)?, n)?);
    }
    Ok(out)
}

fn chi_square_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let ell = 2;
    let pauli = PerturbationBasis::pauli(2)?;
    let settings = [(0.1, DEFAULT_C), (0.3, 1.0), (0.05, 4.0)];
    let (mut pollard, mut decoupled, mut kernel) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut configs = 0usize;
    for scheme in chi_square_schemes(rng)? {
        let adversarial = PerturbationBasis::from_eigenbasis(&adversarial_basis(&scheme)?)?;
        for basis in [&pauli, &adversarial] {
            for &(eps, c) in &settings {
                let r = decoupled_bound_check(&scheme, basis, ell, eps, c)?;
                let scale = r.chi_square.abs().max(r.pollard_rhs.abs());
                let err = if scale < 1e-14 { 0.0 } else { (r.chi_square - r.pollard_rhs).abs() / scale };
                pollard = pollard.max(err);
                decoupled = decoupled.max(r.chi_square - r.decoupled_bound);
                let family = perturbation_family(basis, ell, eps, c)?;
                for (s, _) in &family {
                    for (s2, _) in &family {
                        for povm in scheme.povms() {
                            let a = mic_kernel(s, s2, povm)?;
                            let b = mic_kernel_classical(s, s2, povm)?;
                            kernel = kernel.max((a - b).abs());
                        }
                    }
                }
                configs += 1;
            }
        }
    }
    let note = format!("{configs} configurations");
    Ok(vec![
        Check::at_most("pollard relative error", pollard, 1e-9).with_note(note.clone()),
        Check::at_most("kernel dual-formula agreement", kernel, 1e-10).with_note(note.clone()),
        Check::at_most("decoupled bound excess", decoupled, 1e-9).with_note(note),
    ])
}

fn fooling_suite(build: MicBuilder) -> Result<Vec<Check>> {
    let d = 4;
    let plus = DensityMatrix::plus(d)?;
    let mixed = DensityMatrix::mixed(d)?;
    let mut checks = Vec::new();
    for n in [1usize, 2, 4] {
        let scheme = FixedScheme::repeated(Povm::canonical(d)?, n)?;
        let p = enumerate_outcome_law(&scheme, &plus)?;
        let q = enumerate_outcome_law(&scheme, &mixed)?;
        let tv = 0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>();
        checks.push(Check::at_most(format!("joint law TV n={n}"), tv, 1e-14));
    }
    let c = build(&Povm::canonical(d)?)?;
    let image = mic_apply(&c, &(plus.matrix() - mixed.matrix()))?;
    checks.push(Check::at_most("mic image of rho_plus - rho_mm", hs_norm(&image), 1e-12));
    let far = hs_norm(&(plus.matrix() - mixed.matrix()));
    checks.push(Check::above("rho_plus is far from rho_mm (hs)", far, 0.5));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// 5-6: Pauli and MUB l2 identities
// ---------------------------------------------------------------------------

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn pauli_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for q in 1..=3usize {
        let d = 1usize << q;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let rho = DensityMatrix::random(d, rng)?;
            let sigma = DensityMatrix::random(d, rng)?;
            let lhs = l2(&pauli_probability_vector(&rho)?, &pauli_probability_vector(&sigma)?);
            let rhs = (d as f64).sqrt() / 2.0 * hs_norm(&(rho.matrix() - sigma.matrix()));
            worst = worst.max((lhs - rhs).abs());
        }
        checks.push(Check::at_most(format!("l2 identity N={q}"), worst, 1e-10).with_note("100 random pairs"));
    }
    Ok(checks)
}

fn mub_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for q in 1..=3usize {
        let d = 1usize << q;
        let mub = build_mub(q)?;
        checks.push(Check::at_most(format!("N={q} bases are orthonormal"), mub.orthonormality_residual(), 1e-9));
        checks.push(Check::at_most(format!("N={q} unbiasedness residual"), mub.unbiasedness_residual(), 1e-9));
        checks.push(Check::at_most(format!("N={q} 2-design residual"), two_design_check(&mub.vectors())?, 1e-9));
        let cap = 2f64.sqrt() / (d + 1) as f64;
        let mut norm_excess = f64::NEG_INFINITY;
        let mut dist: f64 = 0.0;
        let mut states = vec![DensityMatrix::plus(d)?, DensityMatrix::basis(d, 0)?, DensityMatrix::mixed(d)?];
        for _ in 0..50 {
            states.push(DensityMatrix::random(d, rng)?);
        }
        let probs: Vec<Vec<f64>> = states.iter().map(|s| mub.probability_vector(s)).collect::<Result<_>>()?;
        for (i, p) in probs.iter().enumerate() {
            norm_excess = norm_excess.max(l2(p, &vec![0.0; p.len()]) - cap);
            let j = (i + 1) % probs.len();
            let hs = hs_norm(&(states[i].matrix() - states[j].matrix()));
            dist = dist.max((l2(p, &probs[j]) - hs / (d + 1) as f64).abs());
        }
        checks.push(Check::at_most(format!("N={q} norm above sqrt2/(d+1)"), norm_excess, 1e-9));
        checks.push(Check::at_most(format!("N={q} distance identity"), dist, 1e-9));
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// 7-10: Haar moments, compression, concentration, hard instances
// ---------------------------------------------------------------------------

const HAAR_SAMPLES: usize = 20_000;
const Z_GATE: f64 = 4.0;

fn haar_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for d in [4usize, 8] {
        let a = random_hermitian(d, rng);
        let b = random_hermitian(d, rng);
        let r = first_moment_check(&a, &b, HAAR_SAMPLES, rng)?;
        checks.push(Check::at_most(format!("first moment d={d} |z|"), r.z_score.abs(), Z_GATE));
        let mut k = 2;
        while k <= d {
            let m = random_hermitian(d, rng);
            let r = second_moment_check(&m, k, HAAR_SAMPLES, rng)?;
            checks.push(Check::at_most(format!("projector second moment d={d} k={k} |z|"), r.z_score.abs(), Z_GATE));
            k *= 2;
        }
    }
    let d = 8;
    for k in [2usize, 4] {
        let delta = random_traceless_hermitian(d, rng);
        let r = fourth_moment_bound_check(&delta, k, HAAR_SAMPLES, rng)?;
        for (name, b) in [("single", r.single), ("cross", r.cross)] {
            let se = if b.std_error.is_finite() { b.std_error } else { 0.0 };
            checks.push(Check::at_most(
                format!("fourth moment {name} d={d} k={k}"),
                b.estimate,
                b.bound + Z_GATE * se,
            ));
        }
    }
    Ok(checks)
}

const COMPRESSION_DRAWS: usize = 2000;
const NORM_FRACTION: f64 = 0.98;
const SEPARATION_FRACTION: f64 = 0.13;

fn compression_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let d = 8;
    let n = COMPRESSION_DRAWS as f64;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    let pairs = [
        ("plus vs mixed", DensityMatrix::plus(d)?, DensityMatrix::mixed(d)?),
        ("random pair", DensityMatrix::random(d, rng)?, DensityMatrix::random(d, rng)?),
        ("pure vs pure", DensityMatrix::basis(d, 0)?, DensityMatrix::plus(d)?),
    ];
    let mut checks = Vec::new();
    for (label, rho, sigma) in &pairs {
        for k in [2usize, 4, 8] {
            let r = domain_compression_check(rho, sigma, k, COMPRESSION_DRAWS, rng)?;
            checks.push(Check::at_least(
                format!("{label} k={k} norm fraction"),
                r.norm_fraction.rate,
                NORM_FRACTION - 3.0 * se(NORM_FRACTION),
            ));
            checks.push(Check::at_least(
                format!("{label} k={k} separation fraction"),
                r.separation_fraction.rate,
                SEPARATION_FRACTION - 3.0 * se(SEPARATION_FRACTION),
            ));
        }
    }
    Ok(checks)
}

fn opnorm_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let trials = 500;
    let mut checks = Vec::new();
    for d in [16usize, 32, 64] {
        let basis = PerturbationBasis::pauli(d)?;
        let r = opnorm_concentration_experiment(&basis, d * d / 2, trials, rng)?;
        let over = (r.tail_fraction * trials as f64).round();
        checks.push(
            Check::at_most(format!("d={d} exceedances of 10 sqrt d"), over, 0.0)
                .with_note(format!("max |W|/sqrt d = {:.3}", r.max_ratio)),
        );
    }
    Ok(checks)
}

fn hard_instance_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let (d, eps, draws) = (8usize, 0.004, 10_000usize);
    let basis = PerturbationBasis::pauli(d)?;
    let (mut invalid, mut far, mut clipped) = (0usize, 0usize, 0usize);
    for _ in 0..draws {
        let h = sample_perturbation(&basis, d * d / 2, eps, DEFAULT_C, rng)?;
        let r = validate_hard_instance(&h, eps)?;
        invalid += (!r.valid_state) as usize;
        far += r.far as usize;
        clipped += h.clipped() as usize;
    }
    Ok(vec![
        Check::at_most("invalid density matrices", invalid as f64, 0.0),
        Check::above("far fraction", far as f64 / draws as f64, 0.5)
            .with_note(format!("{clipped} of {draws} draws clipped")),
    ])
}

// ---------------------------------------------------------------------------
// 11: eta-simulation
// ---------------------------------------------------------------------------

const SIMULATION_RUNS: usize = 100_000;

fn simulation_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let (d, ell, eta) = (5usize, 2u32, 0.01);
    let cfg = SimulationConfig::new(d, ell, eta)?;
    let mut checks = Vec::new();
    let laws = [vec![0.2; 5], vec![0.35, 0.25, 0.2, 0.15, 0.05], vec![0.0, 0.0, 0.0, 0.5, 0.5]];
    let (mut law_err, mut succ_err) = (0.0f64, 0.0f64);
    for p in &laws {
        let (success, cond) = enumerate_attempt(&cfg, p)?;
        law_err = law_err.max(cond.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        succ_err = succ_err.max((success - cfg.success_probability(p)).abs());
    }
    checks.push(Check::at_most("conditional law equals p (enumeration)", law_err, 1e-12));
    checks.push(Check::at_most("attempt success probability", succ_err, 1e-12));
    checks.push(
        Check::flag("player count M = 40 ceil(ln 1/eta) ceil(d/3)", cfg.players == cfg.formula_players())
            .with_note(format!("M = {}", cfg.players)),
    );
    let p = &laws[1];
    let dist = OutcomeDistribution { probs: p.clone() };
    let mut counts = vec![0u64; d];
    let mut aborts = 0u64;
    let mut samples = vec![0usize; cfg.players];
    for _ in 0..SIMULATION_RUNS {
        for s in samples.iter_mut() {
            *s = dist.sample(rng) - 1;
        }
        match eta_simulate(&samples, &cfg, rng)? {
            Some(x) => counts[x] += 1,
            None => aborts += 1,
        }
    }
    checks.push(Check::at_most("abort rate", aborts as f64 / SIMULATION_RUNS as f64, eta));
    let accepted = (SIMULATION_RUNS as u64 - aborts) as f64;
    let mut worst_z: f64 = 0.0;
    for (c, &px) in counts.iter().zip(p) {
        let se = (px * (1.0 - px) / accepted).sqrt();
        if se > 0.0 {
            worst_z = worst_z.max((*c as f64 / accepted - px).abs() / se);
        }
    }
    checks.push(Check::at_most("output frequencies |z|", worst_z, 5.0));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// 12-13: end-to-end certifiers and scaling
// ---------------------------------------------------------------------------

const E2E_TRIALS: u64 = 200;
const E2E_GATE: f64 = 0.6;

fn e2e_configs(seed: u64) -> Vec<(String, ExperimentConfig)> {
    let arms = [
        (CertifierId::RandomizedK, 4usize),
        (CertifierId::RandomizedKBoosted, 4),
        (CertifierId::FixedPauli, 2),
        (CertifierId::FixedMubD, 4),
        (CertifierId::FixedMubK, 2),
    ];
    let mut out = Vec::new();
    for (i, (id, k)) in arms.iter().enumerate() {
        for (j, instance) in [InstanceSpec::Null, InstanceSpec::Plus].into_iter().enumerate() {
            let mut cfg = ExperimentConfig::new(*id, 4, *k, 1.0);
            cfg.trials = E2E_TRIALS;
            cfg.seed = derive_seed(seed, 100 + (2 * i + j) as u64);
            let label = format!("{} k={} {}", id.as_str(), k, if j == 0 { "null" } else { "plus" });
            cfg.instance = instance;
            out.push((label, cfg));
        }
    }
    out
}

fn certifiers_suite(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, cfg) in e2e_configs(seed) {
        let rec = estimate_success(&cfg)?;
        checks.push(
            Check::at_least(format!("{label} wilson lower bound"), rec.wilson_lo, E2E_GATE)
                .with_note(format!("{}/{} at n = {}", rec.successes, rec.trials, rec.copies)),
        );
    }
    Ok(checks)
}

const SCALING_TRIALS: u64 = 200;
/// Scaling runs use `d = 16`, `ε = 1` and `ρ₊`; every batch keeps at least
/// 12 copies so the majority vote is past its small-batch discreteness.
pub const SCALING_DIM: usize = 16;
/// Copy budgets for the n-grid, at `k = SCALING_N_GRID_K`.
pub const SCALING_N_GRID: [u64; 4] = [1_000, 2_500, 6_000, 15_000];
pub const SCALING_N_GRID_K: usize = 2;
/// k-grid at `n = SCALING_K_COPIES`.
pub const SCALING_K_GRID: [usize; 4] = [2, 4, 8, 16];
pub const SCALING_K_COPIES: u64 = 1_000;
/// The baseline's success rate is exactly 1/2, so this gate is a pure false
/// alarm test; `z = 4` matches the other 4-SE gates.
const BASELINE_Z: f64 = 4.0;
const BASELINE_TRIALS: u64 = 1000;

fn rate_and_se(successes: u64, trials: u64) -> (f64, f64) {
    let p = Proportion::new(successes, trials);
    (p.rate, p.std_error())
}

/// Consecutive rates may drop by at most two standard errors of the difference.
fn monotone_checks(label: &str, axis: &str, points: &[(String, u64, u64)]) -> Vec<Check> {
    points
        .windows(2)
        .map(|w| {
            let (r0, s0) = rate_and_se(w[0].1, w[0].2);
            let (r1, s1) = rate_and_se(w[1].1, w[1].2);
            let slack = 2.0 * (s0 * s0 + s1 * s1).sqrt();
            Check::at_least(format!("{label} {axis} {} -> {}", w[0].0, w[1].0), r1 - r0, -slack)
                .with_note(format!("{r0:.3} -> {r1:.3}"))
        })
        .collect()
}

fn scaling_suite(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let mut n_points = Vec::new();
    for (i, &n) in SCALING_N_GRID.iter().enumerate() {
        let mut cfg = ExperimentConfig::new(CertifierId::RandomizedK, SCALING_DIM, SCALING_N_GRID_K, 1.0);
        cfg.instance = InstanceSpec::Plus;
        cfg.n = CopyBudget::Copies(n);
        cfg.trials = SCALING_TRIALS;
        cfg.seed = derive_seed(seed, 200 + i as u64);
        let rec = estimate_success(&cfg)?;
        n_points.push((format!("n={n}"), rec.successes, rec.trials));
    }
    checks.extend(monotone_checks("randomized-k", "n", &n_points));

    let mut k_points = Vec::new();
    for (i, &k) in SCALING_K_GRID.iter().enumerate() {
        let mut cfg = ExperimentConfig::new(CertifierId::RandomizedK, SCALING_DIM, k, 1.0);
        cfg.instance = InstanceSpec::Plus;
        cfg.n = CopyBudget::Copies(SCALING_K_COPIES);
        cfg.trials = SCALING_TRIALS;
        cfg.seed = derive_seed(seed, 300 + i as u64);
        let rec = estimate_success(&cfg)?;
        k_points.push((format!("k={k}"), rec.successes, rec.trials));
    }
    checks.extend(monotone_checks("randomized-k", "k", &k_points));

    for (i, &n) in SCALING_N_GRID.iter().enumerate() {
        let mut cfg = ExperimentConfig::new(CertifierId::FixedCanonical, SCALING_DIM, SCALING_DIM, 1.0);
        cfg.instance = InstanceSpec::CoinFlip;
        cfg.n = CopyBudget::Copies(n);
        cfg.trials = BASELINE_TRIALS;
        cfg.seed = derive_seed(seed, 400 + i as u64);
        let rec = estimate_success(&cfg)?;
        let (lo, hi) = wilson_interval(rec.successes, rec.trials, BASELINE_Z);
        checks.push(
            Check::flag(format!("fixed-canonical coin-flip n={n} interval covers 0.5"), lo <= 0.5 && 0.5 <= hi)
                .with_note(format!("rate {:.3}, interval [{lo:.3}, {hi:.3}]", rec.rate)),
        );
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// 14: classical testers
// ---------------------------------------------------------------------------

const TESTER_RUNS: usize = 1000;

fn testers_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let (k, eps, delta) = (16usize, 0.1, 0.01);
    let q = vec![1.0 / k as f64; k];
    let b = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cfg = TesterConfig::new(eps, delta, b, ConstantsMode::Calibrated)?;
    let n = cfg.sample_size() as usize;
    let shift = 2.0 * eps / (k as f64).sqrt();
    let far: Vec<f64> = q.iter().enumerate().map(|(i, x)| if i % 2 == 0 { x + shift } else { x - shift }).collect();
    let arms = [("identity type-I", &q, Verdict::No), ("identity type-II", &far, Verdict::Yes)];
    for (name, p, wrong) in arms {
        let dist = OutcomeDistribution { probs: p.clone() };
        let mut errors = 0usize;
        let mut samples = vec![0usize; n];
        for _ in 0..TESTER_RUNS {
            for s in samples.iter_mut() {
                *s = dist.sample(rng);
            }
            errors += (test_identity_l2(&q, &samples, &cfg)?.verdict == wrong) as usize;
        }
        checks.push(
            Check::at_most(name, errors as f64 / TESTER_RUNS as f64, delta)
                .with_note(format!("k = {k}, n = {n}, {TESTER_RUNS} runs")),
        );
    }

    let (dim, eps, delta) = (15usize, 0.5, 1.0 / 3.0);
    let q = vec![0.5; dim];
    let n = prod_bern_sample_size(dim, eps, CALIBRATED_PROD_BERN_CONSTANT) as usize;
    let shift = 2.0 * eps / (dim as f64).sqrt();
    let far: Vec<f64> = q.iter().enumerate().map(|(i, x)| if i % 2 == 0 { x + shift } else { x - shift }).collect();
    let arms = [("product-bernoulli type-I", &q, Verdict::No), ("product-bernoulli type-II", &far, Verdict::Yes)];
    for (name, p, wrong) in arms {
        let mut errors = 0usize;
        for _ in 0..TESTER_RUNS {
            let samples: Vec<Vec<u8>> =
                (0..n).map(|_| p.iter().map(|&pi| rng.random_bool(pi) as u8).collect()).collect();
            errors += (test_prod_bern_l2(&q, &samples, eps)? == wrong) as usize;
        }
        checks.push(
            Check::at_most(name, errors as f64 / TESTER_RUNS as f64, delta)
                .with_note(format!("D = {dim}, n = {n}, {TESTER_RUNS} runs")),
        );
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, vectorize, CMatrix};
    use crate::mic::MicMatrix;

    fn flipped_normalization(povm: &Povm) -> Result<MicMatrix> {
        let d = povm.dim();
        let mut c = CMatrix::zeros(d * d, d * d);
        for m in povm.effects() {
            let v = vectorize(m)?;
            c.gerc(c64(-1.0 / crate::linalg::trace(m).re, 0.0), &v, &v, c64(1.0, 0.0));
        }
        Ok(MicMatrix { dim: d, matrix: c, averaged: false })
    }

    #[test]
    fn selector_parsing() {
        assert_eq!(parse_selector("all").unwrap().len(), 14);
        assert_eq!(parse_selector("mic").unwrap(), vec![Suite::Mic]);
        assert_eq!(parse_selector("mub, mic,mub").unwrap(), vec![Suite::Mub, Suite::Mic]);
        assert!(parse_selector("mics").is_err());
        assert!(parse_selector("").is_err());
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(Suite::Mic.criterion(), 1);
        assert_eq!(Suite::Testers.criterion(), 14);
    }

    #[test]
    fn cheap_suites_pass() {
        let r = verify_suites("norms,fooling,pauli,mub", &SuiteOptions::default()).unwrap();
        assert!(r.passed, "{:#?}", r);
        assert_eq!(r.suites.len(), 4);
    }

    #[test]
    fn flipped_normalization_fails_named_checks() {
        let opts = SuiteOptions { mic_builder: flipped_normalization, ..Default::default() };
        let r = run_suite(Suite::Mic, &opts);
        assert!(!r.passed);
        let failed: Vec<&str> = r.failures().iter().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"psd"), "{failed:?}");
        // Spectral norms only see |λ|, so the closed-form suite cannot tell.
        assert!(run_suite(Suite::Norms, &opts).passed);
    }

    #[test]
    fn check_constructors() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_most("a", f64::NAN, 1.0).passed);
        assert!(!Check::above("a", 0.5, 0.5).passed);
        assert!(Check::at_least("a", 0.5, 0.5).passed);
        let j = serde_json::to_string(&Check::flag("x", true)).unwrap();
        assert_eq!(j, r#"{"name":"x","passed":true}"#);
    }

    #[test]
    fn monotone_slack() {
        let pts = vec![("a".to_string(), 90, 100), ("b".to_string(), 85, 100)];
        assert!(monotone_checks("t", "n", &pts)[0].passed);
        let pts = vec![("a".to_string(), 90, 100), ("b".to_string(), 70, 100)];
        assert!(!monotone_checks("t", "n", &pts)[0].passed);
    }

    #[test]
    fn error_becomes_failing_check() {
        fn broken(_: &Povm) -> Result<MicMatrix> {
            Err(Error::Numerical("broken builder".into()))
        }
        let r = run_suite(Suite::Norms, &SuiteOptions { mic_builder: broken, ..Default::default() });
        assert!(!r.passed);
        assert_eq!(r.checks[0].name, "error");
    }
}
