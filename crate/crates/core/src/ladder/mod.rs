//! A small ladder-logic runtime: Boolean rungs assigning coils, and
//! rising-edge up-counters, executed top to bottom once per scan.

mod programs;

pub use programs::{c1, c2};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LadderError {
    #[error("input address `{0}` missing from the input image")]
    MissingInput(String),
    #[error("program references undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("program references undeclared counter `{0}`")]
    UndeclaredCounter(String),
    #[error("coil `{0}` is an input and cannot be assigned")]
    AssignsInput(String),
    #[error("counter `{0}` must be scanned by exactly one rung")]
    CounterRung(String),
    #[error("cannot parse ladder program: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Contact logic of a rung.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Var(String),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    /// Done flag of a counter.
    Done(String),
    Const(bool),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    fn visit<'a>(&'a self, vars: &mut Vec<&'a str>, counters: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => vars.push(v),
            Expr::Done(c) => counters.push(c),
            Expr::Not(e) => e.visit(vars, counters),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.visit(vars, counters)),
            Expr::Const(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterBlock {
    pub name: String,
    pub preset: u32,
    /// Counts on each rising edge.
    pub count_input: Expr,
    pub reset_input: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Rung {
    Coil { coil: String, expr: Expr },
    Count { counter: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderProgram {
    /// Physical input address -> variable.
    pub inputs: BTreeMap<String, String>,
    /// Physical output address -> variable.
    pub outputs: BTreeMap<String, String>,
    pub internals: BTreeSet<String>,
    pub counters: Vec<CounterBlock>,
    pub rungs: Vec<Rung>,
}

impl LadderProgram {
    pub fn validate(&self) -> Result<(), LadderError> {
        let inputs: BTreeSet<&str> = self.inputs.values().map(String::as_str).collect();
        let mut declared = inputs.clone();
        declared.extend(self.outputs.values().map(String::as_str));
        declared.extend(self.internals.iter().map(String::as_str));
        let counters: BTreeSet<&str> = self.counters.iter().map(|c| c.name.as_str()).collect();

        let check = |e: &Expr| -> Result<(), LadderError> {
            let (mut vars, mut cnts) = (Vec::new(), Vec::new());
            e.visit(&mut vars, &mut cnts);
            if let Some(v) = vars.into_iter().find(|v| !declared.contains(v)) {
                return Err(LadderError::UndeclaredVariable(v.to_string()));
            }
            if let Some(c) = cnts.into_iter().find(|c| !counters.contains(c)) {
                return Err(LadderError::UndeclaredCounter(c.to_string()));
            }
            Ok(())
        };
        for c in &self.counters {
            check(&c.count_input)?;
            check(&c.reset_input)?;
            let scans = self
                .rungs
                .iter()
                .filter(|r| matches!(r, Rung::Count { counter } if *counter == c.name))
                .count();
            if scans != 1 {
                return Err(LadderError::CounterRung(c.name.clone()));
            }
        }
        for rung in &self.rungs {
            match rung {
                Rung::Coil { coil, expr } => {
                    if inputs.contains(coil.as_str()) {
                        return Err(LadderError::AssignsInput(coil.clone()));
                    }
                    if !declared.contains(coil.as_str()) {
                        return Err(LadderError::UndeclaredVariable(coil.clone()));
                    }
                    check(expr)?;
                }
                Rung::Count { counter } => {
                    if !counters.contains(counter.as_str()) {
                        return Err(LadderError::UndeclaredCounter(counter.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, LadderError> {
        let prog: LadderProgram = serde_json::from_str(text)?;
        prog.validate()?;
        Ok(prog)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ladder program serializes")
    }
}

/// Runtime state of one counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CounterState {
    pub count: u32,
    pub done: bool,
    prev_input: bool,
}

/// A program plus its retained memory (coils and counters).
#[derive(Debug, Clone)]
pub struct LadderRuntime {
    program: LadderProgram,
    vars: BTreeMap<String, bool>,
    counters: BTreeMap<String, CounterState>,
}

impl LadderRuntime {
    /// Fresh runtime: every variable false, every counter at 0.
    pub fn new(program: LadderProgram) -> Result<Self, LadderError> {
        program.validate()?;
        let mut vars = BTreeMap::new();
        for v in program
            .inputs
            .values()
            .chain(program.outputs.values())
            .chain(program.internals.iter())
        {
            vars.insert(v.clone(), false);
        }
        let counters = program
            .counters
            .iter()
            .map(|c| (c.name.clone(), CounterState::default()))
            .collect();
        Ok(LadderRuntime {
            program,
            vars,
            counters,
        })
    }

    pub fn program(&self) -> &LadderProgram {
        &self.program
    }

    pub fn var(&self, name: &str) -> Option<bool> {
        self.vars.get(name).copied()
    }

    pub fn counter(&self, name: &str) -> Option<CounterState> {
        self.counters.get(name).copied()
    }

    fn eval(&self, e: &Expr) -> bool {
        match e {
            Expr::Var(v) => self.vars[v],
            Expr::Not(e) => !self.eval(e),
            Expr::And(es) => es.iter().all(|e| self.eval(e)),
            Expr::Or(es) => es.iter().any(|e| self.eval(e)),
            Expr::Done(c) => self.counters[c].done,
            Expr::Const(b) => *b,
        }
    }

    /// One scan: latch the input image, run every rung in order, return
    /// the output image keyed by address.
    pub fn scan(&mut self, inputs: &BTreeMap<String, bool>) -> Result<BTreeMap<String, bool>, LadderError> {
        for (address, var) in &self.program.inputs {
            let value = *inputs
                .get(address)
                .ok_or_else(|| LadderError::MissingInput(address.clone()))?;
            self.vars.insert(var.clone(), value);
        }
        for i in 0..self.program.rungs.len() {
            match &self.program.rungs[i] {
                Rung::Coil { coil, expr } => {
                    let value = self.eval(expr);
                    *self.vars.get_mut(coil).expect("validated coil") = value;
                }
                Rung::Count { counter } => {
                    let block = self
                        .program
                        .counters
                        .iter()
                        .find(|c| c.name == *counter)
                        .expect("validated counter");
                    let cu = self.eval(&block.count_input);
                    let reset = self.eval(&block.reset_input);
                    let preset = block.preset;
                    let state = self.counters.get_mut(counter).expect("validated counter");
                    if reset {
                        state.count = 0;
                    } else if cu && !state.prev_input {
                        state.count = (state.count + 1).min(preset);
                    }
                    state.prev_input = cu;
                    state.done = state.count >= preset;
                }
            }
        }
        Ok(self
            .program
            .outputs
            .iter()
            .map(|(address, var)| (address.clone(), self.vars[var]))
            .collect())
    }
}
