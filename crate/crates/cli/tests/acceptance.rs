//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Time limits are wall-clock, measured
//! around each criterion alone.

use std::time::{Duration, Instant};

use nmts::fuzz::{run_fuzz, FuzzConfig};
use nmts::impls::subset_implementations;
use nmts::random::{random_mts, RandomSpec};
use nmts::{
    implementations_upto, parse_system, refines, thorough_refines_bounded, EnumerationConfig, Lts, ModalSystem,
    RefinementKind, Strategy, ThoroughVerdict,
};
use nmts_cli::corpus::{bundled_file, Corpus};
use nmts_cli::report::{Details, Verdict};
use nmts_cli::{load_report, reverify, run};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn model(file: &str) -> ModalSystem {
    parse_system(bundled_file(file).unwrap()).unwrap()
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn require(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

/// Runs the named corpus assertions and requires each to pass.
fn corpus_assertions(corpus: &Corpus, ids: &[&str]) -> Result<(), String> {
    for id in ids {
        let assertion = corpus
            .manifest
            .assertions
            .iter()
            .find(|a| a.id == *id)
            .ok_or(format!("no assertion {id}"))?;
        let outcome = corpus.evaluate(assertion).map_err(|e| format!("{id}: {e}"))?;
        require(
            outcome.passed,
            &format!("{id}: expected {}, got {}", outcome.expected, outcome.actual),
        )?;
    }
    Ok(())
}

fn figure_verdicts() -> Outcome {
    let start = Instant::now();
    let corpus = Corpus::bundled().map_err(|e| e.to_string())?;
    let ids = [
        "fig1.not-modal",
        "fig2.not-modal",
        "fig2.S-not-nmts",
        "fig2.T-not-nmts",
        "fig3.S-nmts",
        "fig3.T-nmts",
        "fig3.not-modal",
        "fig3.not-nmts",
        "fig3.I-nmts-S",
        "fig3.I-not-nmts-T",
        "fig3.I-modal-T",
        "fig5.not-nmts",
        "fig5.not-modal",
        "fig6.T-U",
        "fig6.S-T",
        "fig6.S-not-U",
        "fig6.R_TU",
        "fig6.R_ST",
        "fig7.infinite",
        "fig7.once",
    ];
    corpus_assertions(&corpus, &ids)?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(5), elapsed)?;
    Ok(format!("{} verdicts in {elapsed:.2?}", ids.len()))
}

fn bounded_thorough() -> Outcome {
    let modal = RefinementKind::Modal;
    let nmts = RefinementKind::Nmts;

    let start = Instant::now();
    let (s, t) = (model("fig1_s.mts"), model("fig1_t.mts"));
    require(s.alphabet() == ["a"] && t.alphabet() == ["a"], "fig1 is not over {a}")?;
    let verdict = thorough_refines_bounded(&s, &t, EnumerationConfig::new(modal, Strategy::Exhaustive, 4))
        .map_err(|e| e.to_string())?;
    require(
        matches!(verdict, ThoroughVerdict::HoldsUpTo { max_states: 4, .. }),
        "fig1 modal is not HoldsUpTo(4)",
    )?;
    let fig1 = start.elapsed();
    within(Duration::from_secs(10), fig1)?;

    let start = Instant::now();
    let (s, t) = (model("fig5_s.mts"), model("fig5_t.mts"));
    let verdict = thorough_refines_bounded(&s, &t, EnumerationConfig::new(modal, Strategy::Subset, 4))
        .map_err(|e| e.to_string())?;
    require(!verdict.holds(), "fig5 modal has no counterexample at 4")?;
    let fig5 = start.elapsed();
    within(Duration::from_secs(1), fig5)?;

    let start = Instant::now();
    let (s, t, u) = (model("fig6_s.mts"), model("fig6_t.mts"), model("fig6_u.mts"));
    let verdict = thorough_refines_bounded(&t, &u, EnumerationConfig::new(nmts, Strategy::Exhaustive, 4))
        .map_err(|e| e.to_string())?;
    require(!verdict.holds(), "fig6 nmts has no counterexample at 4")?;
    require(
        s.is_lts() && refines(&s, &t, nmts) && !refines(&s, &u, nmts),
        "fig6 S does not separate T from U",
    )?;
    let fig6 = start.elapsed();
    within(Duration::from_secs(10), fig6)?;

    Ok(format!("fig1 {fig1:.2?}, fig5 {fig5:.2?}, fig6 {fig6:.2?}"))
}

fn coin_gap() -> Outcome {
    let start = Instant::now();
    let out = run(["nmts", "gap", "fig7.spec", "--max-states", "2", "--json"]);
    require(out.code == 0, &out.stderr)?;
    let report = load_report(&out.stdout).map_err(|e| e.to_string())?;
    let Details::Gap { members, .. } = &report.details else {
        return Err("not a gap report".to_string());
    };
    require(!members.is_empty(), "the gap is empty")?;
    let heads_only = Lts::try_from(model("coin_heads_only.mts")).unwrap();
    let key = nmts::canonical_key(&heads_only).unwrap();
    require(
        members.iter().any(|m| m.key == key.as_str()),
        "the heads-only game is missing",
    )?;
    // Every member is ≼m-accepted and ≼n-rejected.
    reverify(&report).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(Duration::from_secs(5), elapsed)?;
    Ok(format!("{} members in {elapsed:.2?}", members.len()))
}

fn non_transitivity() -> Outcome {
    let corpus = Corpus::bundled().map_err(|e| e.to_string())?;
    corpus_assertions(&corpus, &["fig6.non-transitive"])?;
    Ok("T ≼n U ∧ S ≼n T ∧ S ⋠n U".to_string())
}

const LAWS: [&str; 11] = [
    "modal-soundness",
    "modal-reflexive",
    "modal-transitive",
    "nmts-reflexive",
    "nmts-implies-modal",
    "certificate-coherence",
    "coreach-witness",
    "bisim-reflexive",
    "bisim-symmetric",
    "bisim-transitive",
    "key-agreement",
];

fn property_suites() -> Outcome {
    let config = FuzzConfig {
        seed: 0,
        iterations: 1000,
        max_states: 4,
        alphabet_size: 2,
        impl_bound: 3,
    };
    let start = Instant::now();
    let report = run_fuzz(config);
    let elapsed = start.elapsed();
    if let Some(v) = report.violations.first() {
        return Err(format!(
            "{} violations, first: iteration {} {}: {}",
            report.violations.len(),
            v.iteration,
            v.property,
            v.detail
        ));
    }
    for law in LAWS {
        require(
            report.checks.get(law).copied().unwrap_or(0) > 0,
            &format!("{law} never exercised"),
        )?;
    }
    within(Duration::from_secs(120), elapsed)?;
    let checks: u64 = report.checks.values().sum();
    let skipped: u64 = report.skipped.values().sum();
    Ok(format!(
        "{checks} checks, 0 violations, {skipped} skipped, {} findings in {elapsed:.2?}",
        report.finding_counts.values().sum::<u64>()
    ))
}

/// Specifications are capped at three states: with four states over two
/// actions, the exhaustive side alone visits more than 2^24 candidates for a
/// third of the seeds.
fn oracle_equivalence() -> Outcome {
    let spec = RandomSpec {
        max_states: 3,
        alphabet: vec!["a".to_string(), "b".to_string()],
        density: 0.3,
        optional_ratio: 0.5,
    };
    let start = Instant::now();
    let mut members = 0;
    for seed in 0..100 {
        let system = random_mts(seed, &spec);
        let k = system.state_count();
        let subset = subset_implementations(
            &system,
            EnumerationConfig::new(RefinementKind::Modal, Strategy::Subset, k),
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let exhaustive = implementations_upto(
            &system,
            EnumerationConfig::new(RefinementKind::Modal, Strategy::Exhaustive, k),
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        for key in subset.keys() {
            require(exhaustive.contains_key(key), &format!("seed {seed}: {key} missing"))?;
        }
        members += subset.len();
    }
    let elapsed = start.elapsed();
    within(Duration::from_secs(120), elapsed)?;
    Ok(format!(
        "100 systems, {members} subset classes, all found exhaustively in {elapsed:.2?}"
    ))
}

fn determinism() -> Outcome {
    let commands: &[&[&str]] = &[
        &["check", "fig2.S"],
        &["refine", "fig6.S", "fig6.U", "--kind", "nmts"],
        &[
            "refine",
            "fig6.T",
            "fig6.U",
            "--kind",
            "nmts",
            "--relation",
            "fig6.R_TU",
        ],
        &["impls", "fig1.S", "--kind", "modal", "--max-states", "3"],
        &["thorough", "fig6.T", "fig6.U", "--kind", "nmts", "--max-states", "4"],
        &["gap", "fig7.spec", "--max-states", "2"],
        &["bisim", "fig4.I", "fig4.I'"],
        &["export-dot", "fig3.T"],
        &["corpus"],
        &["fuzz", "--seed", "5", "--iterations", "50"],
    ];
    for args in commands {
        let argv: Vec<&str> = ["nmts"]
            .iter()
            .chain(args.iter())
            .chain(["--json"].iter())
            .copied()
            .collect();
        let first = run(&argv);
        let second = run(&argv);
        require(first.stderr.is_empty(), &first.stderr)?;
        require(first.stdout == second.stdout, &format!("{args:?} differs between runs"))?;
        let report = load_report(&first.stdout).map_err(|e| e.to_string())?;
        require(report.verdict != Verdict::Fail, &format!("{args:?} failed"))?;
    }
    Ok(format!("{} commands", commands.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("figure verdicts", figure_verdicts),
        ("bounded thorough checks", bounded_thorough),
        ("coin toss gap", coin_gap),
        ("non-transitivity chain", non_transitivity),
        ("property suites", property_suites),
        ("subset within exhaustive", oracle_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (index, (name, criterion)) in criteria.iter().enumerate() {
        match criterion() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", index + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {reason}", index + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
