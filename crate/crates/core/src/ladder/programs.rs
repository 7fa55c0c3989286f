//! The two reference tank controllers.

use std::collections::{BTreeMap, BTreeSet};

use super::{CounterBlock, Expr, LadderProgram, Rung};
use crate::plant::{ADDR_INV, ADDR_LLS, ADDR_MLS, ADDR_OUTV, ADDR_ULS};

fn wiring() -> (BTreeMap<String, String>, BTreeMap<String, String>) {
    let inputs = [(ADDR_ULS, "ul"), (ADDR_LLS, "ll"), (ADDR_MLS, "ml")]
        .into_iter()
        .map(|(a, v)| (a.to_string(), v.to_string()))
        .collect();
    let outputs = [(ADDR_INV, "inv"), (ADDR_OUTV, "outv")]
        .into_iter()
        .map(|(a, v)| (a.to_string(), v.to_string()))
        .collect();
    (inputs, outputs)
}

fn actuator_rungs() -> [Rung; 2] {
    [
        Rung::Coil {
            coil: "inv".into(),
            expr: Expr::var("ctrl"),
        },
        Rung::Coil {
            coil: "outv".into(),
            expr: Expr::not(Expr::var("ctrl")),
        },
    ]
}

/// Fill to ULS, drain to below LLS, repeat.
///
/// `ctrl := !ul && (ctrl || !ll)`. The MLS input is wired but unused.
pub fn c1() -> LadderProgram {
    let (inputs, outputs) = wiring();
    let mut rungs = vec![Rung::Coil {
        coil: "ctrl".into(),
        expr: Expr::And(vec![
            Expr::not(Expr::var("ul")),
            Expr::Or(vec![Expr::var("ctrl"), Expr::not(Expr::var("ll"))]),
        ]),
    }];
    rungs.extend(actuator_rungs());
    LadderProgram {
        inputs,
        outputs,
        internals: BTreeSet::from(["ctrl".to_string()]),
        counters: Vec::new(),
        rungs,
    }
}

/// Fill to ULS, then oscillate between MLS and ULS until `cnt` has seen
/// three ULS rising edges; then drain below LLS, which resets the counter.
///
/// `pass := cnt.done`, `ctrl := !ul && (ctrl || (!ml && !pass) || !ll)`.
pub fn c2() -> LadderProgram {
    let (inputs, outputs) = wiring();
    let mut rungs = vec![
        Rung::Count {
            counter: "cnt".into(),
        },
        Rung::Coil {
            coil: "pass".into(),
            expr: Expr::Done("cnt".into()),
        },
        Rung::Coil {
            coil: "ctrl".into(),
            expr: Expr::And(vec![
                Expr::not(Expr::var("ul")),
                Expr::Or(vec![
                    Expr::var("ctrl"),
                    Expr::And(vec![Expr::not(Expr::var("ml")), Expr::not(Expr::var("pass"))]),
                    Expr::not(Expr::var("ll")),
                ]),
            ]),
        },
    ];
    rungs.extend(actuator_rungs());
    LadderProgram {
        inputs,
        outputs,
        internals: BTreeSet::from(["ctrl".to_string(), "pass".to_string()]),
        counters: vec![CounterBlock {
            name: "cnt".into(),
            preset: 3,
            count_input: Expr::var("ul"),
            reset_input: Expr::not(Expr::var("ll")),
        }],
        rungs,
    }
}
