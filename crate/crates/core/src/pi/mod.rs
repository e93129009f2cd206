//! Abstract syntax of the stochastic pi-calculus subset emitted by the code
//! generator, together with its SPiM-dialect text form.
//!
//! The subset: global and local channel declarations, parameterised process
//! definitions grouped in `let ... and ...` blocks, guarded summations of
//! output / input / delay prefixes, and `run N of P()` populations.

mod parse;
mod render;

use std::collections::{BTreeMap, BTreeSet};

pub use parse::{parse_program, SpimParseError};
pub use render::{format_rate, render};

/// `new name@rate:chan(...)`.
#[derive(Clone, PartialEq, Debug)]
pub struct ChannelDecl {
    pub name: String,
    pub rate: f64,
    /// Number of channels carried per message.
    pub arity: usize,
    /// Minimum number of decimals when rendering the rate.
    pub min_decimals: usize,
}

impl ChannelDecl {
    pub fn new(name: impl Into<String>, rate: f64, arity: usize) -> Self {
        Self {
            name: name.into(),
            rate,
            arity,
            min_decimals: 1,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Prefix {
    /// `!channel(payload)*weight`
    Output {
        channel: String,
        payload: Vec<String>,
        weight: Option<f64>,
    },
    /// `?channel(params)`
    Input { channel: String, params: Vec<String> },
    /// `delay@rate`
    Delay { rate: f64 },
}

#[derive(Clone, PartialEq, Debug)]
pub enum Continuation {
    Call { process: String, args: Vec<String> },
    /// `()`: the process terminates.
    Stop,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Action {
    pub prefix: Prefix,
    pub cont: Continuation,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ProcessDef {
    pub name: String,
    pub params: Vec<String>,
    /// Private channels created when the process starts.
    pub locals: Vec<ChannelDecl>,
    /// Summation; empty means the inert process.
    pub body: Vec<Action>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Run {
    pub count: u64,
    pub process: String,
}

#[derive(Clone, PartialEq, Debug)]
pub struct PiProgram {
    pub sample_time: f64,
    pub plot: Vec<String>,
    pub globals: Vec<ChannelDecl>,
    /// Each inner list is one `let ... and ...` block.
    pub blocks: Vec<Vec<ProcessDef>>,
    pub runs: Vec<Run>,
}

impl PiProgram {
    pub fn defs(&self) -> impl Iterator<Item = &ProcessDef> {
        self.blocks.iter().flatten()
    }

    pub fn def(&self, name: &str) -> Option<&ProcessDef> {
        self.defs().find(|d| d.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&ChannelDecl> {
        self.globals.iter().find(|g| g.name == name)
    }
}

/// Closedness and arity checks. Returns one message per problem.
pub fn lint(program: &PiProgram) -> Vec<String> {
    let mut problems = Vec::new();
    let arity: BTreeMap<&str, usize> = program
        .defs()
        .map(|d| (d.name.as_str(), d.params.len()))
        .collect();
    let globals: BTreeMap<&str, &ChannelDecl> =
        program.globals.iter().map(|g| (g.name.as_str(), g)).collect();

    let mut seen = BTreeSet::new();
    for d in program.defs() {
        if !seen.insert(d.name.as_str()) {
            problems.push(format!("process {} defined twice", d.name));
        }
    }

    for d in program.defs() {
        let mut scope: BTreeSet<&str> = d.params.iter().map(String::as_str).collect();
        scope.extend(d.locals.iter().map(|l| l.name.as_str()));
        let known = |name: &str, extra: &[String]| {
            globals.contains_key(name) || scope.contains(name) || extra.iter().any(|e| e == name)
        };
        for a in &d.body {
            let bound: &[String] = match &a.prefix {
                Prefix::Output {
                    channel, payload, ..
                } => {
                    if !known(channel, &[]) {
                        problems.push(format!("{}: unbound channel {channel}", d.name));
                    }
                    for p in payload {
                        if !known(p, &[]) {
                            problems.push(format!("{}: unbound channel {p} in payload", d.name));
                        }
                    }
                    if let Some(g) = globals.get(channel.as_str()) {
                        if g.arity != payload.len() && !scope.contains(channel.as_str()) {
                            problems.push(format!(
                                "{}: {channel} carries {} channel(s), sent {}",
                                d.name,
                                g.arity,
                                payload.len()
                            ));
                        }
                    }
                    &[]
                }
                Prefix::Input { channel, params } => {
                    if !known(channel, &[]) {
                        problems.push(format!("{}: unbound channel {channel}", d.name));
                    }
                    if let Some(g) = globals.get(channel.as_str()) {
                        if g.arity != params.len() && !scope.contains(channel.as_str()) {
                            problems.push(format!(
                                "{}: {channel} carries {} channel(s), received {}",
                                d.name,
                                g.arity,
                                params.len()
                            ));
                        }
                    }
                    params
                }
                Prefix::Delay { .. } => &[],
            };
            if let Continuation::Call { process, args } = &a.cont {
                match arity.get(process.as_str()) {
                    None => problems.push(format!("{}: undefined process {process}", d.name)),
                    Some(&n) if n != args.len() => problems.push(format!(
                        "{}: {process} takes {n} argument(s), given {}",
                        d.name,
                        args.len()
                    )),
                    _ => {}
                }
                for arg in args {
                    if !known(arg, bound) {
                        problems.push(format!("{}: unbound channel {arg} in call to {process}", d.name));
                    }
                }
            }
        }
    }
    // Plotting counts instances by name, so parameters are allowed there.
    for name in &program.plot {
        if !arity.contains_key(name.as_str()) {
            problems.push(format!("undefined process {name} in plot"));
        }
    }
    for r in &program.runs {
        match arity.get(r.process.as_str()) {
            None => problems.push(format!("undefined process {}", r.process)),
            Some(&n) if n != 0 => problems.push(format!("{} needs {n} argument(s) to run", r.process)),
            _ => {}
        }
    }
    problems
}

/// Channel reference after alpha-normalisation.
#[derive(Clone, PartialEq, Debug)]
pub enum NormRef {
    Global(usize),
    Param(usize),
    Local(usize),
    Bound(usize),
    Free(String),
}

#[derive(Clone, PartialEq, Debug)]
pub enum NormPrefix {
    Output {
        channel: NormRef,
        payload: Vec<NormRef>,
        weight: Option<f64>,
    },
    Input { channel: NormRef, arity: usize },
    Delay { rate: f64 },
}

#[derive(Clone, PartialEq, Debug)]
pub struct NormAction {
    pub prefix: NormPrefix,
    pub cont: Option<(String, Vec<NormRef>)>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct NormDef {
    pub name: String,
    pub params: usize,
    pub locals: Vec<f64>,
    pub body: Vec<NormAction>,
}

/// A program with every channel name replaced by its binding position.
/// Two programs that differ only in channel spelling normalise equally.
#[derive(Clone, PartialEq, Debug)]
pub struct NormProgram {
    pub sample_time: f64,
    pub plot: BTreeSet<String>,
    pub globals: Vec<(f64, usize)>,
    pub blocks: Vec<Vec<NormDef>>,
    pub runs: Vec<(u64, String)>,
}

pub fn alpha_normalize(program: &PiProgram) -> NormProgram {
    let globals: BTreeMap<&str, usize> = program
        .globals
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.as_str(), i))
        .collect();
    let norm_def = |d: &ProcessDef| {
        let resolve = |name: &str, bound: &[String]| -> NormRef {
            if let Some(i) = bound.iter().position(|b| b == name) {
                NormRef::Bound(i)
            } else if let Some(i) = d.locals.iter().position(|l| l.name == name) {
                NormRef::Local(i)
            } else if let Some(i) = d.params.iter().position(|p| p == name) {
                NormRef::Param(i)
            } else if let Some(&i) = globals.get(name) {
                NormRef::Global(i)
            } else {
                NormRef::Free(name.to_string())
            }
        };
        let body = d
            .body
            .iter()
            .map(|a| {
                let (prefix, bound): (NormPrefix, &[String]) = match &a.prefix {
                    Prefix::Output {
                        channel,
                        payload,
                        weight,
                    } => (
                        NormPrefix::Output {
                            channel: resolve(channel, &[]),
                            payload: payload.iter().map(|p| resolve(p, &[])).collect(),
                            weight: *weight,
                        },
                        &[],
                    ),
                    Prefix::Input { channel, params } => (
                        NormPrefix::Input {
                            channel: resolve(channel, &[]),
                            arity: params.len(),
                        },
                        params,
                    ),
                    Prefix::Delay { rate } => (NormPrefix::Delay { rate: *rate }, &[]),
                };
                let cont = match &a.cont {
                    Continuation::Call { process, args } => Some((
                        process.clone(),
                        args.iter().map(|x| resolve(x, bound)).collect(),
                    )),
                    Continuation::Stop => None,
                };
                NormAction { prefix, cont }
            })
            .collect();
        NormDef {
            name: d.name.clone(),
            params: d.params.len(),
            locals: d.locals.iter().map(|l| l.rate).collect(),
            body,
        }
    };
    NormProgram {
        sample_time: program.sample_time,
        plot: program.plot.iter().cloned().collect(),
        globals: program.globals.iter().map(|g| (g.rate, g.arity)).collect(),
        blocks: program
            .blocks
            .iter()
            .map(|b| b.iter().map(norm_def).collect())
            .collect(),
        runs: program.runs.iter().map(|r| (r.count, r.process.clone())).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "directive sample 5.0
directive plot A1(); A0(); B0()
new ab1@1.0:chan(chan)
new nil@0.0:chan
let A0() = ( new a@1.0:chan !ab1(a)*2.0; A1(a) )
and A1(a:chan) = ( do !a; A0() or ?a; A0() )
let B0() = ( ?ab1(b); B0() )
run 10 of A0()
run 5 of B0()
";

    #[test]
    fn lint_accepts_closed_program() {
        let p = parse_program(SMALL).unwrap();
        assert!(lint(&p).is_empty(), "{:?}", lint(&p));
    }

    #[test]
    fn lint_reports_free_channels_and_arity() {
        let mut p = parse_program(SMALL).unwrap();
        p.blocks[1][0].body[0].cont = Continuation::Call {
            process: "A1".into(),
            args: vec!["zz".into()],
        };
        p.blocks[0][1].body[0].prefix = Prefix::Output {
            channel: "ab1".into(),
            payload: vec![],
            weight: None,
        };
        let problems = lint(&p);
        assert_eq!(problems.len(), 2, "{problems:?}");
    }

    #[test]
    fn renaming_channels_is_invisible_after_normalisation() {
        let p = parse_program(SMALL).unwrap();
        let renamed = parse_program(
            &SMALL
                .replace("ab1", "q7")
                .replace("(a)", "(x)")
                .replace("a@", "x@")
                .replace("a:chan", "x:chan")
                .replace("!a;", "!x;")
                .replace("?a;", "?x;")
                .replace("(b)", "(y)"),
        )
        .unwrap();
        assert_ne!(p, renamed);
        assert_eq!(alpha_normalize(&p), alpha_normalize(&renamed));
    }
}
