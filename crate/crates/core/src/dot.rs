//! GraphViz export. Optional transitions are dashed, necessary ones solid,
//! and the initial state gets an arrow from an invisible node.

use std::fmt::Write as _;

use crate::model::{ModalSystem, Modality};

fn quote(id: &str) -> String {
    format!("\"{}\"", id.replace('"', "\\\""))
}

pub fn to_dot(system: &ModalSystem) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(system.name())).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    writeln!(out, "  __start [shape=point, style=invis];").unwrap();
    for state in system.states() {
        writeln!(out, "  {};", quote(state)).unwrap();
    }
    writeln!(out, "  __start -> {};", quote(system.state_name(system.initial()))).unwrap();
    for t in system.transitions() {
        let style = match t.modality {
            Modality::Necessary => "solid",
            Modality::Optional => "dashed",
        };
        writeln!(
            out,
            "  {} -> {} [label={}, style={style}];",
            quote(system.state_name(t.source)),
            quote(system.state_name(t.target)),
            quote(system.action_name(t.action)),
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
