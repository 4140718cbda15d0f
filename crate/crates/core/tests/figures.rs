mod common;

use common::*;
use nmts::format::parse_relation;
use nmts::impls::subset_implementations;
use nmts::refine::{check_certificate, Clause, RelationKind};
use nmts::{
    are_bisimilar, coreachable, impl_gap, implementations_upto, is_nmts, minimize, modal_refines, nmts_refines,
    refines, thorough_refines_bounded, verify_relation, EnumerationConfig, Lts, RefineError, RefinementKind,
    StateRelation, Strategy, ThoroughVerdict,
};

use RefinementKind::{Modal, Nmts};

fn nmts_allowing(left: &str, right: &str) -> bool {
    nmts_refines(&model(left), &model(right), true).unwrap().holds()
}

#[test]
fn fig1_modal_refinement_fails_but_no_implementation_separates() {
    let (s, t) = (model("fig1_s.mts"), model("fig1_t.mts"));
    let cert = modal_refines(&s, &t);
    assert!(!cert.holds());
    assert!(check_certificate(&s, &t, &cert));
    let config = EnumerationConfig::new(Modal, Strategy::Exhaustive, 4);
    assert!(matches!(
        thorough_refines_bounded(&s, &t, config).unwrap(),
        ThoroughVerdict::HoldsUpTo { max_states: 4, .. }
    ));
}

#[test]
fn fig2_systems_are_not_nmts() {
    let s = model("fig2_s.mts");
    let violation = is_nmts(&s).unwrap_err();
    assert_eq!(
        (
            violation.state.as_str(),
            violation.other.as_str(),
            violation.action.as_str()
        ),
        ("s2", "s1", "a")
    );
    assert_eq!(violation.witness, ["c"]);
    assert!(is_nmts(&model("fig2_t.mts")).is_err());
    assert!(!refines(&s, &model("fig2_t.mts"), Modal));
    assert!(matches!(
        nmts_refines(&s, &model("fig2_t.mts"), false),
        Err(RefineError::NotNmts { .. })
    ));
    assert!(!nmts_allowing("fig2_s.mts", "fig2_t.mts"));

    let rel = coreachable(&s, &s);
    assert_eq!(rel.witness(state(&s, "s1"), state(&s, "s2")).unwrap(), ["c"]);
    assert_eq!(rel.witness(state(&s, "s3"), state(&s, "s4")).unwrap(), ["c", "a"]);
}

#[test]
fn fig3_verdicts() {
    let (s, t, i) = (model("fig3_s.mts"), model("fig3_t.mts"), model("fig3_i.mts"));
    assert!(is_nmts(&s).is_ok() && is_nmts(&t).is_ok());
    assert!(!refines(&s, &t, Modal));
    assert!(!nmts_refines(&s, &t, false).unwrap().holds());
    assert!(nmts_refines(&i, &s, false).unwrap().holds());
    assert!(!nmts_refines(&i, &t, false).unwrap().holds());
    assert!(modal_refines(&i, &t).holds());
}

#[test]
fn fig3_gap_contains_the_pruned_implementation() {
    let s = model("fig3_s.mts");
    let candidate = lts("fig3_gap.mts");
    assert!(refines(&candidate, &s, Modal));
    assert!(!refines(&candidate, &s, Nmts));
    let gap = impl_gap(&s, EnumerationConfig::new(Nmts, Strategy::Exhaustive, 6)).unwrap();
    assert!(gap.contains_class_of(&candidate).unwrap());
}

#[test]
fn fig4_implementations_of_fig2() {
    let (i, i2) = (lts("fig4_i.mts"), lts("fig4_i_prime.mts"));
    for spec in ["fig2_s.mts", "fig2_t.mts"] {
        for implementation in ["fig4_i.mts", "fig4_i_prime.mts"] {
            assert!(refines(&model(implementation), &model(spec), Modal));
            assert!(nmts_allowing(implementation, spec), "{implementation} vs {spec}");
        }
    }
    let config = EnumerationConfig::new(Nmts, Strategy::Subset, 6).allow_non_nmts(true);
    let set = subset_implementations(&model("fig2_s.mts"), config).unwrap();
    assert_eq!(set.len(), 2);
    assert!(set.contains_class_of(&i).unwrap());
    assert!(set.contains_class_of(&i2).unwrap());
    assert!(!are_bisimilar(&i, &i2));
    // i4 and i5 both deadlock and are merged.
    assert_eq!(minimize(&i).state_count(), 5);
    assert_eq!(minimize(&i2).state_count(), 3);
}

#[test]
fn fig5_verdicts_and_counterexample() {
    let (s, t) = (model("fig5_s.mts"), model("fig5_t.mts"));
    assert!(!refines(&s, &t, Modal));
    assert!(!nmts_refines(&s, &t, true).unwrap().holds());

    let config = EnumerationConfig::new(Modal, Strategy::Subset, 4);
    let ThoroughVerdict::Counterexample {
        implementation,
        accepted,
        rejected,
    } = thorough_refines_bounded(&s, &t, config).unwrap()
    else {
        panic!("expected a counterexample");
    };
    assert!(are_bisimilar(&implementation, &lts("fig5_s_cut.mts")));
    assert!(accepted.holds() && !rejected.holds());

    let config = EnumerationConfig::new(Nmts, Strategy::Subset, 4).allow_non_nmts(true);
    let set = subset_implementations(&s, config).unwrap();
    assert_eq!(set.len(), 1);
    assert!(set.contains_class_of(&Lts::try_from(t).unwrap()).unwrap());
}

#[test]
fn fig6_non_transitivity() {
    let (u, t, s) = (model("fig6_u.mts"), model("fig6_t.mts"), model("fig6_s.mts"));
    for x in [&u, &t, &s] {
        assert!(is_nmts(x).is_ok());
    }
    assert!(s.is_lts());
    assert!(nmts_refines(&t, &u, false).unwrap().holds());
    assert!(nmts_refines(&s, &t, false).unwrap().holds());
    let cert = nmts_refines(&s, &u, false).unwrap();
    assert!(!cert.holds());
    assert!(check_certificate(&s, &u, &cert));

    let first = &cert.trace[0];
    assert_eq!((first.left.as_str(), first.right.as_str()), ("s0", "u0"));
    assert_eq!(first.clause, Clause::NmtsMust);
    assert_eq!(first.challenge.to_string(), "u0 --b--> u (must)");
    let root = cert.root_cause().unwrap();
    assert_eq!((root.left.as_str(), root.right.as_str()), ("s", "u"));
    assert_eq!(root.clause, Clause::NmtsOptional);
    assert_eq!(root.related_state.as_deref(), Some("s1"));
    assert_eq!(root.witness.as_deref(), Some(&["c".to_string()][..]));
}

#[test]
fn fig6_caption_relations_verify_verbatim() {
    let (u, t, s) = (model("fig6_u.mts"), model("fig6_t.mts"), model("fig6_s.mts"));
    for (left, right, file) in [(&t, &u, "fig6_t_u.rel"), (&s, &t, "fig6_s_t.rel")] {
        let pairs = parse_relation(text(file)).unwrap();
        let relation = StateRelation::from_names(left, right, RelationKind::Nmts, &pairs).unwrap();
        assert_eq!(relation.len(), 5);
        assert!(
            verify_relation(left, right, &relation, Nmts).unwrap().is_empty(),
            "{file}"
        );
    }
}

#[test]
fn fig6_unsoundness_witness() {
    let (u, t, s) = (model("fig6_u.mts"), model("fig6_t.mts"), model("fig6_s.mts"));
    let config = EnumerationConfig::new(Nmts, Strategy::Exhaustive, 4);
    let verdict = thorough_refines_bounded(&t, &u, config).unwrap();
    let ThoroughVerdict::Counterexample { implementation, .. } = verdict else {
        panic!("expected a counterexample");
    };
    assert!(refines(&implementation, &t, Nmts) && !refines(&implementation, &u, Nmts));
    // S itself separates the two.
    assert!(refines(&s, &t, Nmts) && !refines(&s, &u, Nmts));
}

#[test]
fn nondeterministic_example() {
    assert!(refines(&model("nondet_s.mts"), &model("nondet_t.mts"), Modal));
    assert!(!nmts_allowing("nondet_s.mts", "nondet_t.mts"));
    assert!(refines(&model("nondet_t.mts"), &model("nondet_s.mts"), Modal));
    assert!(!nmts_allowing("nondet_t.mts", "nondet_s.mts"));
    assert!(nmts_allowing("nondet_t_impl.mts", "nondet_t.mts"));
    assert!(!nmts_allowing("nondet_t_impl.mts", "nondet_s.mts"));
    assert!(refines(&model("nondet_t_impl.mts"), &model("nondet_s.mts"), Modal));
}

#[test]
fn coin_toss() {
    let spec = model("coin_spec.mts");
    assert!(is_nmts(&spec).is_ok());
    for implementation in ["coin_infinite.mts", "coin_once.mts"] {
        assert!(nmts_refines(&model(implementation), &spec, false).unwrap().holds());
    }
    let heads = lts("coin_heads_only.mts");
    assert!(refines(&heads, &spec, Modal) && !refines(&heads, &spec, Nmts));

    let set = subset_implementations(&spec, EnumerationConfig::new(Nmts, Strategy::Subset, 3)).unwrap();
    assert_eq!(set.len(), 2);
    let gap = impl_gap(&spec, EnumerationConfig::new(Nmts, Strategy::Exhaustive, 2)).unwrap();
    assert!(gap.contains_class_of(&heads).unwrap());
    for (_, member) in gap.members() {
        assert!(refines(member, &spec, Modal) && !refines(member, &spec, Nmts));
    }
}

#[test]
fn lts_specifications_have_empty_gaps() {
    for file in ["fig5_t.mts", "fig6_s.mts", "coin_once.mts"] {
        let spec = model(file);
        let gap = impl_gap(&spec, EnumerationConfig::new(Nmts, Strategy::Exhaustive, 3)).unwrap();
        assert!(gap.is_empty(), "{file}");
    }
}

#[test]
fn exhaustive_sets_include_subset_sets_on_figures() {
    for file in ["fig3_s.mts", "fig5_s.mts", "coin_spec.mts", "nondet_s.mts"] {
        let spec = model(file);
        let k = spec.state_count();
        let subset = subset_implementations(&spec, EnumerationConfig::new(Modal, Strategy::Subset, k)).unwrap();
        let exhaustive = implementations_upto(&spec, EnumerationConfig::new(Modal, Strategy::Exhaustive, k)).unwrap();
        for key in subset.keys() {
            assert!(exhaustive.contains_key(key), "{file}");
        }
    }
}
