//! `qcert`: command-line front end for the certification lab.
//!
//! Exit codes: 0 success (verdict YES, suites pass), 1 verdict NO,
//! 2 validation or I/O error, 3 suite failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcert::certifiers::{CertifierId, Subsampling};
use qcert::classical::{enumerate_attempt, eta_simulate, ConstantsMode, SimulationConfig, Verdict};
use qcert::experiment::{
    estimate_success, run_trial, sweep, write_csv, CopyBudget, ExperimentConfig, InstanceSpec, SweepCell,
    SweepConfig,
};
use qcert::mic::{lower_bound_certificate, mic_matrix, MicNorms};
use qcert::states::{build_mub, pauli_set, OutcomeDistribution, Povm, PovmJson};
use qcert::suites::{verify_suites, SuiteOptions, DEFAULT_SUITE_SEED};
use qcert::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const EXIT_NO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_SUITE_FAIL: u8 = 3;

#[derive(Parser)]
#[command(name = "qcert", version, about = "Quantum state certification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one certifier trial (or, with --estimate, a full success estimate).
    Certify(CertifyArgs),
    /// Run a grid of experiments and emit one row per cell.
    Sweep(SweepArgs),
    /// Channel norms and lower-bound certificate for a set of POVMs.
    MicCert(MicCertArgs),
    /// Run invariant suites; exits 3 if any check fails.
    Verify(VerifyArgs),
    /// Monte Carlo and exact check of the l-bit simulation protocol.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Paper,
    Calibrated,
}

impl From<ModeArg> for ConstantsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => ConstantsMode::Paper,
            ModeArg::Calibrated => ConstantsMode::Calibrated,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubsamplingArg {
    Multinomial,
    Stratified,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero every wall-clock field so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CertifyArgs {
    /// Experiment config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    certifier: Option<CertifierId>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Copy budget: an integer or "auto".
    #[arg(long)]
    n: Option<CopyBudget>,
    /// null | plus | coin-flip | hard[:ell=..,c=..,basis=pauli] | file:<path>
    #[arg(long)]
    instance: Option<InstanceSpec>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    subsampling: Option<SubsamplingArg>,
    /// Run `trials` trials and report the success rate instead of one verdict.
    #[arg(long)]
    estimate: bool,
    #[arg(long)]
    trials: Option<u64>,
    /// Which trial of the master seed to replay in single-run mode.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config JSON: {"base": <experiment config>, "grid": {...}}.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Canonical,
    Pauli,
    Mub,
}

#[derive(Args)]
struct MicCertArgs {
    /// POVM JSON file holding one POVM or an array of them; repeatable.
    #[arg(long)]
    povm: Vec<PathBuf>,
    /// Built-in POVM family instead of (or in addition to) files.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Dimension for --family.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// "all" or a comma-separated list of suites.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_SUITE_SEED)]
    seed: u64,
    /// Print the JSON report to stdout instead of the summary lines.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero the per-suite wall times in the JSON report.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    ell: u32,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    /// Comma-separated source distribution; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => certify_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::MicCert(a) => mic_cert_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn cells_output(cells: &[SweepCell], format: Format, timing: bool) -> Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(cells, timing, &mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
        }
        Format::Json => {
            let cells: Vec<SweepCell> = if timing {
                cells.to_vec()
            } else {
                cells
                    .iter()
                    .cloned()
                    .map(|mut c| {
                        c.record = c.record.map(|r| r.without_timing());
                        c
                    })
                    .collect()
            };
            to_json(&cells)
        }
    }
}

fn certify_config(a: &CertifyArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json(&read(p)?)?,
        None => {
            let certifier = a
                .certifier
                .ok_or_else(|| Error::InvalidParameter("--certifier is required without --config".into()))?;
            let d = a.d.ok_or_else(|| Error::InvalidParameter("--d is required without --config".into()))?;
            let eps = a.eps.ok_or_else(|| Error::InvalidParameter("--eps is required without --config".into()))?;
            ExperimentConfig::new(certifier, d, a.k.unwrap_or(d), eps)
        }
    };
    if let Some(c) = a.certifier {
        cfg.certifier = c;
    }
    if let Some(d) = a.d {
        cfg.d = d;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(e) = a.eps {
        cfg.eps = e;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(i) = &a.instance {
        cfg.instance = i.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if let Some(s) = a.subsampling {
        cfg.subsampling = match s {
            SubsamplingArg::Multinomial => Subsampling::Multinomial,
            SubsamplingArg::Stratified => Subsampling::Stratified,
        };
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn certify_cmd(a: CertifyArgs) -> Result<u8> {
    let cfg = certify_config(&a)?;
    let out = a.output.out.as_deref();
    if a.estimate {
        let record = estimate_success(&cfg)?;
        let record = if a.output.no_timing { record.without_timing() } else { record };
        for w in &record.warnings {
            eprintln!("warning: {w}");
        }
        let cell = SweepCell { index: 0, config: cfg, record: Some(record.clone()), error: None };
        let text = match a.format {
            Format::Csv => cells_output(&[cell], Format::Csv, !a.output.no_timing)?,
            Format::Json => to_json(&record)?,
        };
        emit(out, &text)?;
        return Ok(0);
    }
    if a.format == Format::Csv {
        return Err(Error::InvalidParameter("CSV output needs --estimate".into()));
    }
    let result = run_trial(&cfg, cfg.trial_seed(a.trial))?;
    emit(out, &(result.to_json()? + "\n"))?;
    Ok(if result.verdict == Verdict::No { EXIT_NO } else { 0 })
}

fn sweep_cmd(a: SweepArgs) -> Result<u8> {
    let mut sc: SweepConfig = serde_json::from_str(&read(&a.config)?)?;
    if let Some(s) = a.seed {
        sc.base.seed = s;
    }
    if let Some(m) = a.mode {
        sc.base.mode = m.into();
    }
    if let Some(t) = a.trials {
        sc.base.trials = t;
    }
    let cells = sweep(&sc.cells())?;
    for c in &cells {
        if let Some(e) = &c.error {
            eprintln!("cell {}: {e}", c.index);
        }
    }
    emit(a.output.out.as_deref(), &cells_output(&cells, a.format, !a.output.no_timing)?)?;
    Ok(0)
}

fn load_povms(path: &Path) -> Result<Vec<Povm>> {
    let value: serde_json::Value = serde_json::from_str(&read(path)?)?;
    let list: Vec<PovmJson> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    list.iter().map(Povm::from_json).collect()
}

fn family_povms(family: Family, d: usize) -> Result<Vec<Povm>> {
    match family {
        Family::Canonical => Ok(vec![Povm::canonical(d)?]),
        Family::Pauli | Family::Mub => {
            if !d.is_power_of_two() || d < 2 {
                return Err(Error::InvalidParameter(format!("d = {d} must be a power of two >= 2")));
            }
            let q = d.trailing_zeros() as usize;
            if family == Family::Pauli {
                pauli_set(q)?.povms()
            } else {
                build_mub(q)?.povms()
            }
        }
    }
}

#[derive(Serialize)]
struct PovmSummary {
    source: String,
    dim: usize,
    k: usize,
    norms: MicNorms,
}

fn mic_cert_cmd(a: MicCertArgs) -> Result<u8> {
    let mut povms: Vec<(String, Povm)> = Vec::new();
    for p in &a.povm {
        for (i, povm) in load_povms(p)?.into_iter().enumerate() {
            povms.push((format!("{}#{i}", p.display()), povm));
        }
    }
    if let Some(f) = a.family {
        let d = a.d.ok_or_else(|| Error::InvalidParameter("--family needs --d".into()))?;
        for (i, povm) in family_povms(f, d)?.into_iter().enumerate() {
            let name = match f {
                Family::Canonical => "canonical",
                Family::Pauli => "pauli",
                Family::Mub => "mub",
            };
            povms.push((format!("{name}#{i}"), povm));
        }
    }
    if povms.is_empty() {
        return Err(Error::InvalidParameter("give --povm files or --family".into()));
    }
    let summaries = povms
        .iter()
        .map(|(source, p)| {
            Ok(PovmSummary { source: source.clone(), dim: p.dim(), k: p.k(), norms: mic_matrix(p)?.norms()? })
        })
        .collect::<Result<Vec<_>>>()?;
    let list: Vec<Povm> = povms.into_iter().map(|(_, p)| p).collect();
    let certificate = lower_bound_certificate(&list, a.eps)?;
    #[derive(Serialize)]
    struct Out {
        certificate: qcert::mic::LowerBoundCertificate,
        povms: Vec<PovmSummary>,
    }
    emit(a.out.as_deref(), &to_json(&Out { certificate, povms: summaries })?)?;
    Ok(0)
}

fn verify_cmd(a: VerifyArgs) -> Result<u8> {
    let opts = SuiteOptions { seed: a.seed, ..Default::default() };
    let mut report = verify_suites(&a.suite, &opts)?;
    if a.no_timing {
        for s in &mut report.suites {
            s.elapsed_ms = 0;
            s.checks.retain(|c| c.name != "runtime seconds");
        }
    }
    let json = report.to_json()? + "\n";
    if let Some(p) = &a.out {
        emit(Some(p), &json)?;
    }
    if a.format == Some(Format::Json) {
        emit(None, &json)?;
    } else {
        let mut text = String::new();
        for s in &report.suites {
            text.push_str(&s.summary_line());
            text.push('\n');
            for c in s.failures() {
                text.push_str(&format!("    {}\n", c.line()));
            }
        }
        text.push_str(if report.passed { "verify: pass\n" } else { "verify: FAIL\n" });
        emit(None, &text)?;
    }
    Ok(if report.passed { 0 } else { EXIT_SUITE_FAIL })
}

#[derive(Serialize)]
struct SimulationOutput {
    config: SimulationConfig,
    eta: f64,
    probs: Vec<f64>,
    runs: u64,
    seed: u64,
    aborts: u64,
    abort_rate: f64,
    frequencies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_attempt_success: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_conditional_law: Option<Vec<f64>>,
}

fn simulate_cmd(a: SimulateArgs) -> Result<u8> {
    let cfg = SimulationConfig::new(a.d, a.ell, a.eta)?;
    let probs = a.probs.clone().unwrap_or_else(|| vec![1.0 / a.d as f64; a.d]);
    if probs.len() != a.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: probs.len() });
    }
    if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("--probs must be a probability vector".into()));
    }
    let dist = OutcomeDistribution { probs: probs.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut counts = vec![0u64; a.d];
    let mut aborts = 0u64;
    let mut samples = vec![0usize; cfg.players];
    for _ in 0..a.runs {
        for s in samples.iter_mut() {
            *s = dist.sample(&mut rng) - 1;
        }
        match eta_simulate(&samples, &cfg, &mut rng)? {
            Some(x) => counts[x] += 1,
            None => aborts += 1,
        }
    }
    let accepted = (a.runs - aborts).max(1) as f64;
    let exact = enumerate_attempt(&cfg, &probs).ok();
    let out = SimulationOutput {
        config: cfg,
        eta: a.eta,
        probs,
        runs: a.runs,
        seed: a.seed,
        aborts,
        abort_rate: if a.runs == 0 { 0.0 } else { aborts as f64 / a.runs as f64 },
        frequencies: counts.iter().map(|c| *c as f64 / accepted).collect(),
        exact_attempt_success: exact.as_ref().map(|e| e.0),
        exact_conditional_law: exact.map(|e| e.1),
    };
    emit(a.out.as_deref(), &to_json(&out)?)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CertifyArgs {
        let mut full = vec!["qcert", "certify"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Certify(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_build_a_config() {
        let a = parse(&["--certifier", "fixed-mub-k", "--d", "8", "--k", "2", "--eps", "0.5", "--n", "auto"]);
        let cfg = certify_config(&a).unwrap();
        assert_eq!(cfg.certifier, CertifierId::FixedMubK);
        assert_eq!((cfg.d, cfg.k, cfg.eps), (8, 2, 0.5));
        assert_eq!(cfg.n, CopyBudget::Auto);
        assert_eq!(cfg.instance, InstanceSpec::Null);
    }

    #[test]
    fn k_defaults_to_d() {
        let a = parse(&["--certifier", "randomized-k", "--d", "4", "--eps", "1"]);
        assert_eq!(certify_config(&a).unwrap().k, 4);
    }

    #[test]
    fn missing_fields_are_reported() {
        assert!(certify_config(&parse(&["--d", "4", "--eps", "1"])).is_err());
        assert!(certify_config(&parse(&["--certifier", "fixed-pauli", "--eps", "1"])).is_err());
    }

    #[test]
    fn mode_and_subsampling_flags() {
        let a = parse(&[
            "--certifier", "fixed-mub-d", "--d", "4", "--eps", "1", "--mode", "paper", "--subsampling", "stratified",
            "--instance", "hard:ell=10,c=2",
        ]);
        let cfg = certify_config(&a).unwrap();
        assert_eq!(cfg.mode, ConstantsMode::Paper);
        assert_eq!(cfg.subsampling, Subsampling::Stratified);
        assert_eq!(cfg.instance, InstanceSpec::Hard { ell: Some(10), c: Some(2.0), basis: None });
    }

    #[test]
    fn families() {
        assert_eq!(family_povms(Family::Pauli, 4).unwrap().len(), 15);
        assert_eq!(family_povms(Family::Mub, 8).unwrap().len(), 9);
        assert_eq!(family_povms(Family::Canonical, 3).unwrap().len(), 1);
        assert!(family_povms(Family::Mub, 6).is_err());
    }
}
