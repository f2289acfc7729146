//! Acceptance gate. Runs every criterion at its pinned tolerance, prints one
//! `PASS`/`FAIL` line each, and exits non-zero if any criterion fails.
//!
//! Monte-Carlo criteria all draw from MT19937 streams starting at seed 5489
//! (the library default); sequence `i` uses seed `5489 + i`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use specvar::bitseq::PmSequence;
use specvar::dftt::TestKind;
use specvar::generators::{mt19937_bits, AesCtr, GeneratorSpec, Mt19937, SequenceSource};
use specvar::harness::config::default_workers;
use specvar::harness::{
    geometric_periods, map_sequences, run_batch, run_detection_sweep, sample_v_tilde, CdfTable, ExperimentConfig,
    ExperimentReport,
};
use specvar::specialfns::{chi2_sf, erfc};
use specvar::vtest::{exact_v_n_moments, v_n_delta_oracle, v_n_full};

const SEED: u32 = 5489;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn mt() -> GeneratorSpec {
    GeneratorSpec::Mt19937 { seed: SEED }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn pm_from_mask(mask: u64, n: usize) -> PmSequence {
    PmSequence::from_values((0..n).map(|k| if mask >> k & 1 == 1 { 1 } else { -1 }).collect()).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let mut worst = 0.0f64;
    for n in [2, 4, 6, 8, 10, 12] {
        for mask in 0..1u64 << n {
            let x = pm_from_mask(mask, n);
            worst = worst.max((v_n_full(&x).unwrap() - v_n_delta_oracle(&x).unwrap()).abs());
        }
    }
    let mut rng = Mt19937::new(SEED);
    for _ in 0..200 {
        let n = 2 * (1 + rng.next_u32() as usize % 16);
        let mask = u64::from(rng.next_u32());
        let x = pm_from_mask(mask, n);
        worst = worst.max((v_n_full(&x).unwrap() - v_n_delta_oracle(&x).unwrap()).abs());
    }
    verdict(worst < 1e-9, format!("max |v_n_full - delta oracle| = {worst:.3e}"))
}

fn exact_means() -> Verdict {
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for n in 2..=16usize {
        let target = if n % 2 == 0 { 1.0 } else { 1.0 - 1.0 / (2.0 * n as f64) };
        let mean = exact_v_n_moments(n).unwrap().mean();
        let err = (mean - target).abs();
        worst = worst.max(err);
        if err >= 1e-12 {
            misses.push(format!("n={n}: {mean:.12} vs {target:.12}"));
        }
    }
    if misses.is_empty() {
        verdict(true, format!("n=2..16 exact, max error {worst:.1e}"))
    } else {
        verdict(false, format!("{} misses: {}", misses.len(), misses.join("; ")))
    }
}

fn asymptotic_variance() -> Verdict {
    let n = 1024;
    let source = SequenceSource::open(&mt()).unwrap();
    let v = map_sequences(&source, n, 100_000, default_workers(), |_, bits| v_n_full(&bits.to_pm1())).unwrap();
    let count = v.len() as f64;
    let mean = v.iter().sum::<f64>() / count;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let target = 8.0 / n as f64;
    let rel = var / target - 1.0;
    verdict(rel.abs() <= 0.07, format!("Var[V_1024] = {var:.6e}, 8/n = {target:.6e}, rel {rel:+.4}"))
}

fn moment_convergence() -> Verdict {
    let v = sample_v_tilde(10_000, 10_000, &mt(), default_workers()).unwrap();
    let count = v.len() as f64;
    let m = |k: i32| v.iter().map(|x| x.powi(k)).sum::<f64>() / count;
    let (m2, m3, m4) = (m(2), m(3), m(4));
    verdict(
        within(m2, 0.95, 1.05) && m3.abs() <= 0.1 && within(m4, 2.7, 3.3),
        format!("E[V~^2] = {m2:.4}, E[V~^3] = {m3:.4}, E[V~^4] = {m4:.4}"),
    )
}

fn cdf_convergence() -> Verdict {
    let ks_at = |n| {
        let samples = sample_v_tilde(n, 10_000, &mt(), default_workers()).unwrap();
        CdfTable::from_samples(n, samples).unwrap().ks
    };
    let (large, small) = (ks_at(10_000), ks_at(100));
    verdict(large < 0.02 && small > large, format!("KS(n=1e4) = {large:.5}, KS(n=100) = {small:.5}"))
}

fn batch(tests: Vec<TestKind>, n: usize) -> ExperimentReport {
    let mut config = ExperimentConfig::new(tests, n, 1000, 20, mt());
    config.workers = default_workers();
    config.validate().unwrap();
    run_batch(&config).unwrap()
}

fn small_fraction(report: &ExperimentReport, test: TestKind) -> f64 {
    report.summary(test, None).unwrap().small_fraction()
}

fn type1_table(main_run: &ExperimentReport) -> Verdict {
    let proposed = small_fraction(main_run, TestKind::Proposed);
    let kim = small_fraction(main_run, TestKind::Kim);
    let kim_short = small_fraction(&batch(vec![TestKind::Kim], 1000), TestKind::Kim);
    verdict(
        within(proposed, 0.0080, 0.0126) && within(kim, 0.0088, 0.0133) && within(kim_short, 0.0135, 0.0187),
        format!("p<0.01 fractions: proposed {proposed:.5}, kim {kim:.5} (n=1e4); kim {kim_short:.5} (n=1e3)"),
    )
}

fn uniformity_table(main_run: &ExperimentReport) -> Verdict {
    let rejected = |t| main_run.summary(t, None).unwrap().uniformity_rejections;
    let (kim, pareschi, proposed) = (rejected(TestKind::Kim), rejected(TestKind::Pareschi), rejected(TestKind::Proposed));
    verdict(
        kim >= 15 && pareschi >= 13 && proposed <= 1,
        format!("uniformity rejections of 20 sets: kim {kim}, pareschi {pareschi}, proposed {proposed}"),
    )
}

fn detection_power() -> Verdict {
    let n = 100_000;
    let mut config = ExperimentConfig::new(vec![TestKind::Kim, TestKind::Pareschi, TestKind::Proposed], n, 200, 20, mt());
    config.periods = geometric_periods(n);
    config.workers = default_workers();
    config.validate().unwrap();
    let report = run_detection_sweep(&config).unwrap();
    let total = |t| report.detection_series(t).into_iter().map(|(_, _, _, total)| total).collect::<Vec<_>>();
    let (kim, pareschi, proposed) = (total(TestKind::Kim), total(TestKind::Pareschi), total(TestKind::Proposed));
    let periods: Vec<usize> = config.periods.iter().map(|p| p.period()).collect();

    let dominates = (0..periods.len()).all(|i| proposed[i] >= kim[i] && proposed[i] >= pareschi[i]);
    let exclusive = (0..periods.len()).find(|&i| proposed[i] > 0 && kim[i] == 0 && pareschi[i] == 0);
    let mut monotone = true;
    for t in [TestKind::Kim, TestKind::Pareschi, TestKind::Proposed] {
        let series = report.detection_series(t);
        for w in series.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.1 > a.1 + 1 || b.2 > a.2 + 1 || b.3 > a.3 + 1 {
                monotone = false;
            }
        }
    }
    let table: Vec<String> = (0..periods.len())
        .map(|i| format!("T={}:{}/{}/{}", periods[i], proposed[i], kim[i], pareschi[i]))
        .collect();
    verdict(
        dominates && exclusive.is_some() && monotone,
        format!(
            "(a) {dominates} (b) {} (c) {monotone}; total proposed/kim/pareschi {}",
            exclusive.map_or_else(|| "none".to_string(), |i| format!("T={}", periods[i])),
            table.join(" ")
        ),
    )
}

fn golden_values() -> Verdict {
    let mut g = Mt19937::new(5489);
    let first = g.next_u32();
    let tenth_thousand = (1..10_000).map(|_| g.next_u32()).last().unwrap();
    let mut key = [0u8; 16];
    for (i, k) in key.iter_mut().enumerate() {
        *k = i as u8;
    }
    let block = AesCtr::new(key, 0x0011_2233_4455_6677_8899_aabb_ccdd_eeff).next_block();
    let fips = [
        0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a,
    ];
    let e = erfc(1.0).unwrap();
    let c = chi2_sf(3.0, 9).unwrap().value();
    let pass = first == 3_499_211_612
        && tenth_thousand == 4_123_659_995
        && block == fips
        && (e - 0.157_299_207_1).abs() < 5e-11
        && (e - 0.157_299_207_050_285_13).abs() < 1e-15
        && (c - 0.9643).abs() < 5e-5
        && (c - 0.964_294_972_685_089_1).abs() < 1e-14;
    verdict(
        pass,
        format!("mt {first}, {tenth_thousand}; aes first block ok {}; erfc(1) = {e}; chi2_sf(3, 9) = {c}", block == fips),
    )
}

fn exp1_csv(workers: usize, dir: &std::path::Path) -> Vec<u8> {
    let out = dir.join(format!("exp1_w{workers}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_specvar"))
        .args(["exp1", "--workers", &workers.to_string(), "--out"])
        .arg(&out)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(out).unwrap()
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("specvar-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (one, eight) = (exp1_csv(1, &dir), exp1_csv(8, &dir));
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        one == eight && !one.is_empty(),
        format!("exp1 CSV workers=1 vs 8: {} bytes, identical {}", one.len(), one == eight),
    )
}

fn main() -> ExitCode {
    // sanity: the shared sequences really are MT streams from SEED
    assert_eq!(
        SequenceSource::open(&mt()).unwrap().sequence(3, 64).unwrap(),
        mt19937_bits(SEED + 3, 64).unwrap()
    );
    let mut failures = 0;
    let mut run = |id: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {name}: {} ({:.1}s of {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
    };
    let secs = Duration::from_secs;
    run(1, "oracle equivalence", secs(30), &mut oracle_equivalence);
    run(2, "exact means", secs(60), &mut exact_means);
    run(3, "asymptotic variance", secs(120), &mut asymptotic_variance);
    run(4, "moment convergence", secs(180), &mut moment_convergence);
    run(5, "normal-CDF convergence", secs(120), &mut cdf_convergence);

    // criteria 6 and 7 read the same 20 x 1000 run at n = 1e4
    let start = Instant::now();
    let main_run = batch(vec![TestKind::Kim, TestKind::Pareschi, TestKind::Proposed], 10_000);
    let shared = start.elapsed();
    run(6, "p<0.01 fractions", secs(300) - shared, &mut || type1_table(&main_run));
    run(7, "uniformity rejections", secs(600) - shared, &mut || uniformity_table(&main_run));

    run(8, "detection power", secs(900), &mut detection_power);
    run(9, "golden values", secs(10), &mut golden_values);
    run(10, "determinism", secs(120), &mut determinism);

    println!("acceptance: {} of 10 criteria failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
