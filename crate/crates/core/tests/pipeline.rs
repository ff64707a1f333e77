//! End-to-end runs through the experiment harness: reproducibility, CSV
//! output and the Monte Carlo success examples.

use qcert::certifiers::CertifierId;
use qcert::classical::Verdict;
use qcert::experiment::{
    estimate_success, run_trial, sweep, write_csv, CopyBudget, ExperimentConfig, Grid, InstanceSpec, SweepConfig,
};

fn csv_bytes(cells: &[qcert::experiment::SweepCell]) -> String {
    let mut buf = Vec::new();
    write_csv(cells, false, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn small_sweep() -> SweepConfig {
    let mut base = ExperimentConfig::new(CertifierId::RandomizedK, 4, 4, 1.0);
    base.trials = 40;
    base.seed = 11;
    SweepConfig {
        base,
        grid: Grid {
            certifier: vec![CertifierId::RandomizedK, CertifierId::FixedPauli, CertifierId::FixedMubD],
            instance: vec![InstanceSpec::Null, InstanceSpec::Plus],
            ..Default::default()
        },
    }
}

#[test]
fn sweep_csv_is_byte_reproducible() {
    let cells = small_sweep().cells();
    let a = csv_bytes(&sweep(&cells).unwrap());
    let b = csv_bytes(&sweep(&cells).unwrap());
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "certifier,d,k,eps,n,mode,trials,successes,rate,wilson_lo,wilson_hi,seed,wall_ms"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn sweep_is_order_independent() {
    let cells = small_sweep().cells();
    let mut reversed = cells.clone();
    reversed.reverse();
    let fwd = sweep(&cells).unwrap();
    let rev = sweep(&reversed).unwrap();
    for (i, cell) in fwd.iter().enumerate() {
        let twin = &rev[cells.len() - 1 - i];
        assert_eq!(cell.config, twin.config);
        let a = cell.record.clone().unwrap().without_timing();
        let b = twin.record.clone().unwrap().without_timing();
        assert_eq!(a, b);
    }
}

#[test]
fn sweep_config_round_trips_through_json() {
    let s = small_sweep();
    let json = serde_json::to_string(&s).unwrap();
    let back: SweepConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
}

#[test]
fn trial_bytes_repeat() {
    for id in CertifierId::ALL {
        let k = if id == CertifierId::FixedMubK { 2 } else { 4 };
        let mut cfg = ExperimentConfig::new(id, 4, k, 1.0);
        cfg.instance = InstanceSpec::Plus;
        if id == CertifierId::RandomizedKBoosted {
            cfg.groups = Some(5);
        }
        let a = run_trial(&cfg, 99).unwrap().to_json().unwrap();
        let b = run_trial(&cfg, 99).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{id}");
    }
}

#[test]
fn randomized_plus_instance_clears_the_gate() {
    let mut cfg = ExperimentConfig::new(CertifierId::RandomizedK, 4, 4, 1.0);
    cfg.instance = InstanceSpec::Plus;
    cfg.seed = 5;
    let rec = estimate_success(&cfg).unwrap();
    assert_eq!(rec.trials, 200);
    assert!(rec.wilson_lo >= 2.0 / 3.0 - 0.07, "{rec:?}");
}

#[test]
fn null_instance_mostly_yes_for_every_certifier() {
    for id in CertifierId::ALL {
        let k = if id == CertifierId::FixedMubK { 2 } else { 4 };
        let mut cfg = ExperimentConfig::new(id, 4, k, 1.0);
        cfg.trials = 30;
        cfg.seed = 8;
        if id == CertifierId::RandomizedKBoosted {
            cfg.groups = Some(9);
        }
        let rec = estimate_success(&cfg).unwrap();
        assert!(rec.successes * 3 >= rec.trials * 2, "{id}: {}/{}", rec.successes, rec.trials);
    }
}

#[test]
fn fixed_canonical_cannot_see_rho_plus() {
    let mut cfg = ExperimentConfig::new(CertifierId::FixedCanonical, 4, 4, 1.0);
    cfg.instance = InstanceSpec::Plus;
    cfg.trials = 100;
    let yes = (0..cfg.trials)
        .filter(|&i| run_trial(&cfg, cfg.trial_seed(i)).unwrap().verdict == Verdict::Yes)
        .count();
    assert!(yes >= 60, "baseline said NO on rho_plus {} times", 100 - yes);
}

#[test]
fn budget_too_small_is_an_error() {
    let mut cfg = ExperimentConfig::new(CertifierId::FixedMubD, 4, 4, 1.0);
    cfg.n = CopyBudget::Copies(10);
    assert!(run_trial(&cfg, 1).is_err());
    cfg.trials = 3;
    assert!(estimate_success(&cfg).is_err());
}
