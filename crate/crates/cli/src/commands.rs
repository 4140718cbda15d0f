use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nmts::dot::to_dot;
use nmts::format::parse_relation;
use nmts::fuzz::{run_fuzz, FuzzConfig};
use nmts::impls::{impl_gap, ImplementationSet};
use nmts::refine::{Certificate, ClauseViolation};
use nmts::{
    bisimilar, canonical_key, implementations_upto, parse_system, refines_with_certificate, serialize,
    thorough_refines_bounded, verify_relation, EnumerationConfig, Lts, ModalSystem, RefinementKind, StateRelation,
    ThoroughVerdict,
};

use crate::corpus::{bundled_file, bundled_manifest, symbol, Corpus, Manifest};
use crate::error::CliError;
use crate::report::{CheckDetails, Details, Input, Member, RunReport, ThoroughOutcome, Verdict};
use crate::{Bounds, Command};

/// Reads `source` as a file, or else as the id of a bundled model or relation.
fn read_source(source: &str) -> Result<String, CliError> {
    let path = Path::new(source);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: source.to_string(),
            message: e.to_string(),
        });
    }
    let manifest: Manifest = toml::from_str(bundled_manifest()).map_err(|e| CliError::Manifest(e.to_string()))?;
    manifest
        .models
        .iter()
        .chain(&manifest.relations)
        .find(|entry| entry.id == source)
        .and_then(|entry| bundled_file(&entry.file))
        .map(str::to_string)
        .ok_or_else(|| CliError::MissingFile(source.to_string()))
}

fn load(role: &str, source: &str) -> Result<(Input, ModalSystem), CliError> {
    let text = read_source(source)?;
    let system = parse_system(&text).map_err(|error| CliError::Parse {
        source_name: source.to_string(),
        error,
    })?;
    let input = Input {
        role: role.to_string(),
        source: source.to_string(),
        text,
    };
    Ok((input, system))
}

fn load_lts(role: &str, source: &str) -> Result<(Input, Lts), CliError> {
    let (input, system) = load(role, source)?;
    let lts = Lts::try_from(system).map_err(|_| CliError::NotLts(source.to_string()))?;
    Ok((input, lts))
}

fn report(command: &str, inputs: Vec<Input>, verdict: Verdict, details: Details) -> RunReport {
    RunReport {
        command: command.to_string(),
        inputs,
        verdict,
        exit_code: verdict.exit_code(),
        details,
    }
}

fn config(kind: RefinementKind, bounds: &Bounds) -> EnumerationConfig {
    EnumerationConfig::new(kind, bounds.strategy.into(), bounds.max_states).allow_non_nmts(bounds.allow_non_nmts)
}

/// Runs a command. The text is the human-readable rendering of the report,
/// followed by the elapsed time, which the JSON report leaves out.
pub fn execute(command: &Command, explain: bool) -> Result<(RunReport, String), CliError> {
    let start = Instant::now();
    let mut out = String::new();
    let report = match command {
        Command::Check { model } => check(model, &mut out)?,
        Command::Refine {
            left,
            right,
            kind,
            allow_non_nmts,
            relation: None,
        } => refine(left, right, (*kind).into(), *allow_non_nmts, explain, &mut out)?,
        Command::Refine {
            left,
            right,
            kind,
            relation: Some(relation),
            ..
        } => check_relation(left, right, relation, (*kind).into(), explain, &mut out)?,
        Command::Impls { model, kind, bounds } => impls(model, config((*kind).into(), bounds), explain, &mut out)?,
        Command::Thorough {
            left,
            right,
            kind,
            bounds,
        } => thorough(left, right, config((*kind).into(), bounds), explain, &mut out)?,
        Command::Gap { model, bounds } => gap(model, config(RefinementKind::Modal, bounds), explain, &mut out)?,
        Command::Bisim { left, right } => bisim(left, right, explain, &mut out)?,
        Command::ExportDot { model } => {
            let (input, system) = load("model", model)?;
            let dot = to_dot(&system);
            out.push_str(&dot);
            report("export-dot", vec![input], Verdict::Done, Details::Dot { dot })
        }
        Command::Corpus { manifest } => corpus(manifest.as_deref(), &mut out)?,
        Command::Fuzz {
            seed,
            iterations,
            max_states,
            alphabet_size,
            impl_bound,
        } => {
            let config = FuzzConfig {
                seed: *seed,
                iterations: *iterations,
                max_states: *max_states,
                alphabet_size: *alphabet_size,
                impl_bound: *impl_bound,
            };
            fuzz(config, explain, &mut out)
        }
    };
    if !matches!(command, Command::ExportDot { .. }) {
        writeln!(out, "time: {} ms", start.elapsed().as_millis()).unwrap();
    }
    Ok((report, out))
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

fn check(model: &str, out: &mut String) -> Result<RunReport, CliError> {
    let (input, system) = load("model", model)?;
    let details = CheckDetails::of(&system);
    writeln!(
        out,
        "system {}: {} states, {} actions, {} transitions",
        details.system, details.states, details.actions, details.transitions
    )
    .unwrap();
    writeln!(out, "lts: {}", yes_no(details.is_lts)).unwrap();
    writeln!(out, "deterministic: {}", yes_no(details.is_deterministic)).unwrap();
    match &details.coherence_violation {
        None => writeln!(out, "nmts: yes").unwrap(),
        Some(v) => writeln!(out, "nmts: no, {v}").unwrap(),
    }
    Ok(report("check", vec![input], Verdict::Done, Details::Check(details)))
}

fn write_pairs(out: &mut String, title: &str, pairs: &[(String, String)]) {
    writeln!(out, "{title}:").unwrap();
    for (l, r) in pairs {
        writeln!(out, "  ({l}, {r})").unwrap();
    }
}

fn write_violation(out: &mut String, v: &ClauseViolation, explain: bool) {
    writeln!(
        out,
        "violated {} at ({}, {}): {}",
        v.clause, v.left, v.right, v.explanation
    )
    .unwrap();
    if explain {
        if let (Some(state), Some(word)) = (&v.related_state, &v.witness) {
            writeln!(out, "  related state {state}, reached by \"{}\"", word.join(" ")).unwrap();
        }
    }
}

fn write_certificate(out: &mut String, cert: &Certificate, explain: bool) {
    let holds = cert.holds();
    writeln!(
        out,
        "{} {} {}",
        cert.left_system,
        symbol(cert.kind, holds),
        cert.right_system
    )
    .unwrap();
    if holds {
        write_pairs(out, "relation", &cert.relation);
        return;
    }
    if let Some(root) = cert.root_cause() {
        write_violation(out, root, explain);
    }
    if explain {
        writeln!(out, "trace:").unwrap();
        for step in &cert.trace {
            write!(
                out,
                "  ({}, {}) {}: {}",
                step.left, step.right, step.clause, step.challenge
            )
            .unwrap();
            match &step.response {
                Some(response) => writeln!(out, ", answered by {response}").unwrap(),
                None => writeln!(out, ", unanswered").unwrap(),
            }
        }
    }
}

fn refine(
    left: &str,
    right: &str,
    kind: RefinementKind,
    allow_non_nmts: bool,
    explain: bool,
    out: &mut String,
) -> Result<RunReport, CliError> {
    let (left_input, l) = load("left", left)?;
    let (right_input, r) = load("right", right)?;
    let certificate = refines_with_certificate(&l, &r, kind, allow_non_nmts)?;
    write_certificate(out, &certificate, explain);
    Ok(report(
        "refine",
        vec![left_input, right_input],
        Verdict::of(certificate.holds()),
        Details::Refine { certificate },
    ))
}

fn check_relation(
    left: &str,
    right: &str,
    relation: &str,
    kind: RefinementKind,
    explain: bool,
    out: &mut String,
) -> Result<RunReport, CliError> {
    let (left_input, l) = load("left", left)?;
    let (right_input, r) = load("right", right)?;
    let text = read_source(relation)?;
    let pairs = parse_relation(&text).map_err(|error| CliError::Parse {
        source_name: relation.to_string(),
        error,
    })?;
    let rel = StateRelation::from_names(&l, &r, kind.into(), &pairs)?;
    let violations = verify_relation(&l, &r, &rel, kind)?;
    if violations.is_empty() {
        writeln!(
            out,
            "the relation witnesses {} {} {}",
            l.name(),
            symbol(kind, true),
            r.name()
        )
        .unwrap();
    } else {
        writeln!(
            out,
            "the relation does not witness {} {} {}",
            l.name(),
            symbol(kind, true),
            r.name()
        )
        .unwrap();
        for v in &violations {
            write_violation(out, v, explain);
        }
    }
    let relation_input = Input {
        role: "relation".to_string(),
        source: relation.to_string(),
        text,
    };
    Ok(report(
        "refine",
        vec![left_input, right_input, relation_input],
        Verdict::of(violations.is_empty()),
        Details::VerifyRelation {
            kind,
            relation: pairs,
            violations,
        },
    ))
}

fn members(set: &ImplementationSet) -> Vec<Member> {
    set.members()
        .map(|(key, lts)| Member {
            key: key.to_string(),
            model: serialize(lts),
        })
        .collect()
}

fn write_members(out: &mut String, members: &[Member], explain: bool) {
    for (index, member) in members.iter().enumerate() {
        writeln!(out, "member {}: {}", index + 1, member.key).unwrap();
        if explain {
            for line in member.model.lines() {
                writeln!(out, "  {line}").unwrap();
            }
        }
    }
}

fn describe(config: &EnumerationConfig) -> String {
    let strategy = match config.strategy {
        nmts::Strategy::Subset => "subset",
        nmts::Strategy::Exhaustive => "exhaustive",
    };
    format!("{strategy}, at most {} states", config.max_states)
}

fn impls(model: &str, config: EnumerationConfig, explain: bool, out: &mut String) -> Result<RunReport, CliError> {
    let (input, spec) = load("model", model)?;
    let set = implementations_upto(&spec, config)?;
    let members = members(&set);
    writeln!(
        out,
        "{} {} implementations of {} ({}), {} candidates",
        members.len(),
        config.kind,
        spec.name(),
        describe(&config),
        set.candidates
    )
    .unwrap();
    write_members(out, &members, explain);
    if !set.mixed_classes.is_empty() {
        writeln!(
            out,
            "{} classes mix accepted and rejected members",
            set.mixed_classes.len()
        )
        .unwrap();
    }
    Ok(report(
        "impls",
        vec![input],
        Verdict::Done,
        Details::Impls {
            config,
            candidates: set.candidates,
            members,
            mixed_classes: set.mixed_classes.iter().map(ToString::to_string).collect(),
        },
    ))
}

fn thorough(
    left: &str,
    right: &str,
    config: EnumerationConfig,
    explain: bool,
    out: &mut String,
) -> Result<RunReport, CliError> {
    let (left_input, l) = load("left", left)?;
    let (right_input, r) = load("right", right)?;
    let verdict = thorough_refines_bounded(&l, &r, config)?;
    let tag = if config.kind == RefinementKind::Modal { "m" } else { "n" };
    let result = match verdict {
        ThoroughVerdict::HoldsUpTo { max_states, candidates } => {
            writeln!(
                out,
                "Impl_{tag}({}) ⊆ Impl_{tag}({}) up to {max_states} states ({}), {candidates} candidates",
                l.name(),
                r.name(),
                describe(&config)
            )
            .unwrap();
            ThoroughOutcome::HoldsUpTo { max_states, candidates }
        }
        ThoroughVerdict::Counterexample {
            implementation,
            accepted,
            rejected,
        } => {
            writeln!(
                out,
                "Impl_{tag}({}) ⊄ Impl_{tag}({}), counterexample:",
                l.name(),
                r.name()
            )
            .unwrap();
            let text = serialize(&implementation);
            for line in text.lines() {
                writeln!(out, "  {line}").unwrap();
            }
            if explain {
                write_certificate(out, &accepted, false);
                write_certificate(out, &rejected, true);
            }
            ThoroughOutcome::Counterexample {
                implementation: text,
                accepted,
                rejected,
            }
        }
    };
    let verdict = Verdict::of(matches!(result, ThoroughOutcome::HoldsUpTo { .. }));
    Ok(report(
        "thorough",
        vec![left_input, right_input],
        verdict,
        Details::Thorough { config, result },
    ))
}

fn gap(model: &str, config: EnumerationConfig, explain: bool, out: &mut String) -> Result<RunReport, CliError> {
    let (input, spec) = load("model", model)?;
    let set = impl_gap(&spec, config)?;
    let members = members(&set);
    writeln!(
        out,
        "{} implementations of {} accepted by ≼m and rejected by ≼n ({})",
        members.len(),
        spec.name(),
        describe(&config)
    )
    .unwrap();
    write_members(out, &members, explain);
    Ok(report(
        "gap",
        vec![input],
        Verdict::Done,
        Details::Gap {
            config,
            candidates: set.candidates,
            members,
        },
    ))
}

fn bisim(left: &str, right: &str, explain: bool, out: &mut String) -> Result<RunReport, CliError> {
    let (left_input, l) = load_lts("left", left)?;
    let (right_input, r) = load_lts("right", right)?;
    let relation = bisimilar(&l, &r).map(|pairs| {
        pairs
            .into_iter()
            .map(|(p, q)| (l.state_name(p).to_string(), r.state_name(q).to_string()))
            .collect::<Vec<_>>()
    });
    let holds = relation.is_some();
    writeln!(
        out,
        "{} and {} are {}bisimilar",
        l.name(),
        r.name(),
        if holds { "" } else { "not " }
    )
    .unwrap();
    if let (true, Some(pairs)) = (explain, &relation) {
        write_pairs(out, "bisimulation", pairs);
    }
    Ok(report(
        "bisim",
        vec![left_input, right_input],
        Verdict::of(holds),
        Details::Bisim {
            bisimilar: holds,
            left_key: canonical_key(&l)?.to_string(),
            right_key: canonical_key(&r)?.to_string(),
            relation,
        },
    ))
}

fn corpus(manifest: Option<&Path>, out: &mut String) -> Result<RunReport, CliError> {
    let (input, corpus) = match manifest {
        None => (
            Input {
                role: "manifest".to_string(),
                source: "bundled".to_string(),
                text: bundled_manifest().to_string(),
            },
            Corpus::bundled()?,
        ),
        Some(path) => {
            let source = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: source.clone(),
                message: e.to_string(),
            })?;
            let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            let corpus = Corpus::load(&text, |file| {
                let full = dir.join(file);
                if full.is_file() {
                    std::fs::read_to_string(&full).map_err(|e| CliError::Io {
                        path: full.display().to_string(),
                        message: e.to_string(),
                    })
                } else {
                    bundled_file(file)
                        .map(str::to_string)
                        .ok_or_else(|| CliError::MissingFile(file.to_string()))
                }
            })?;
            let input = Input {
                role: "manifest".to_string(),
                source,
                text,
            };
            (input, corpus)
        }
    };
    let assertions = corpus.run()?;
    let width = assertions.iter().map(|a| a.id.chars().count()).max().unwrap_or(0);
    for a in &assertions {
        let status = if a.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status}  {:<width$}  {}", a.id, a.claim).unwrap();
        if !a.passed {
            writeln!(out, "      expected: {}", a.expected).unwrap();
            writeln!(out, "      actual:   {}", a.actual).unwrap();
        }
    }
    let passed = assertions.iter().filter(|a| a.passed).count();
    let failed = assertions.len() - passed;
    writeln!(out, "{passed} passed, {failed} failed").unwrap();
    let verdict = if failed == 0 { Verdict::Pass } else { Verdict::Fail };
    Ok(report(
        "corpus",
        vec![input],
        verdict,
        Details::Corpus {
            passed,
            failed,
            assertions,
        },
    ))
}

fn fuzz(config: FuzzConfig, explain: bool, out: &mut String) -> RunReport {
    let fuzz = run_fuzz(config);
    writeln!(
        out,
        "{} iterations, seed {}, at most {} states over {} actions, implementation bound {}",
        config.iterations, config.seed, config.max_states, config.alphabet_size, config.impl_bound
    )
    .unwrap();
    for (property, count) in &fuzz.checks {
        writeln!(out, "  {property}: {count} checks").unwrap();
    }
    for (property, count) in &fuzz.skipped {
        writeln!(out, "  {property}: {count} skipped, budget exhausted").unwrap();
    }
    writeln!(out, "violations: {}", fuzz.violations.len()).unwrap();
    for v in &fuzz.violations {
        writeln!(out, "  iteration {}, {}: {}", v.iteration, v.property, v.detail).unwrap();
    }
    for (property, count) in &fuzz.finding_counts {
        writeln!(out, "findings of {property}: {count}").unwrap();
    }
    for f in &fuzz.findings {
        writeln!(out, "  iteration {}, {}: {}", f.iteration, f.property, f.detail).unwrap();
        if explain {
            for system in &f.systems {
                for line in system.lines() {
                    writeln!(out, "    {line}").unwrap();
                }
                writeln!(out).unwrap();
            }
        }
    }
    let verdict = if fuzz.passed() { Verdict::Pass } else { Verdict::Fail };
    report("fuzz", Vec::new(), verdict, Details::Fuzz { report: fuzz })
}
