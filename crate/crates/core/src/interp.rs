//! Stochastic simulation of pi programs by Gillespie's direct method.
//!
//! Live process instances offer the branches of their summation. A
//! communication pairs an output and an input on the same channel from two
//! different instances and fires at `channel rate * output weight`; a delay
//! fires at its own rate. Offers are aggregated per channel, so a channel
//! with output weight `W`, `n` inputs and same-instance overlap `s` has
//! propensity `rate * (W * n - s)`.

use indexmap::{IndexMap, IndexSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::LoadError;
use crate::pi::{Continuation, PiProgram, Prefix};
use crate::sumtree::SumTree;
use crate::trace::{sample_times, TraceTable};

/// A channel at run time. Globals have ids below the number of global
/// declarations; every executed `new` mints a fresh id.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Chan {
    pub id: u64,
    pub rate: f64,
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Ref {
    Global(usize),
    /// Parameters followed by locals.
    Env(usize),
    /// Channels received by the input that fired.
    Bound(usize),
}

#[derive(Clone, Debug)]
enum Kind {
    Out { chan: Ref, payload: Vec<Ref>, weight: f64 },
    In { chan: Ref, arity: usize },
    Delay(f64),
}

#[derive(Clone, Debug)]
struct Branch {
    kind: Kind,
    cont: Option<(usize, Vec<Ref>)>,
}

#[derive(Clone, Debug)]
struct Def {
    name: String,
    params: usize,
    locals: Vec<f64>,
    body: Vec<Branch>,
}

/// A program resolved to indices, ready to instantiate.
#[derive(Clone, Debug)]
pub struct LoadedProgram {
    defs: Vec<Def>,
    globals: Vec<Chan>,
    runs: Vec<(usize, u64)>,
    columns: Vec<usize>,
    pub sample_time: f64,
}

impl LoadedProgram {
    pub fn load(program: &PiProgram) -> Result<Self, LoadError> {
        let index: IndexMap<&str, usize> = program
            .defs()
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), i))
            .collect();
        let global_index: IndexMap<&str, usize> = program
            .globals
            .iter()
            .enumerate()
            .map(|(i, g)| (g.name.as_str(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| LoadError::UndefinedProcess(name.to_string()))
        };

        let mut defs = Vec::new();
        for d in program.defs() {
            let scope: Vec<&str> = d
                .params
                .iter()
                .chain(d.locals.iter().map(|l| &l.name))
                .map(String::as_str)
                .collect();
            let resolve = |name: &str, bound: &[String]| -> Result<Ref, LoadError> {
                if let Some(j) = bound.iter().position(|b| b == name) {
                    Ok(Ref::Bound(j))
                } else if let Some(j) = scope.iter().rposition(|s| *s == name) {
                    Ok(Ref::Env(j))
                } else if let Some(&g) = global_index.get(name) {
                    Ok(Ref::Global(g))
                } else {
                    Err(LoadError::UndefinedChannel {
                        process: d.name.clone(),
                        channel: name.to_string(),
                    })
                }
            };
            let check_arity = |chan: Ref, channel: &str, given: usize| -> Result<(), LoadError> {
                if let Ref::Global(g) = chan {
                    let expected = program.globals[g].arity;
                    if expected != given {
                        return Err(LoadError::PayloadArity {
                            process: d.name.clone(),
                            channel: channel.to_string(),
                            given,
                            expected,
                        });
                    }
                }
                Ok(())
            };
            let mut body = Vec::new();
            for a in &d.body {
                let (kind, bound): (Kind, &[String]) = match &a.prefix {
                    Prefix::Output {
                        channel,
                        payload,
                        weight,
                    } => {
                        let chan = resolve(channel, &[])?;
                        check_arity(chan, channel, payload.len())?;
                        let payload = payload
                            .iter()
                            .map(|p| resolve(p, &[]))
                            .collect::<Result<_, _>>()?;
                        (
                            Kind::Out {
                                chan,
                                payload,
                                weight: weight.unwrap_or(1.0),
                            },
                            &[],
                        )
                    }
                    Prefix::Input { channel, params } => {
                        let chan = resolve(channel, &[])?;
                        check_arity(chan, channel, params.len())?;
                        (
                            Kind::In {
                                chan,
                                arity: params.len(),
                            },
                            params,
                        )
                    }
                    Prefix::Delay { rate } => (Kind::Delay(*rate), &[]),
                };
                let cont = match &a.cont {
                    Continuation::Stop => None,
                    Continuation::Call { process, args } => {
                        let target = lookup(process)?;
                        let expected = program.defs().nth(target).expect("indexed").params.len();
                        if args.len() != expected {
                            return Err(LoadError::Arity {
                                process: process.clone(),
                                given: args.len(),
                                expected,
                            });
                        }
                        let args = args
                            .iter()
                            .map(|x| resolve(x, bound))
                            .collect::<Result<_, _>>()?;
                        Some((target, args))
                    }
                };
                body.push(Branch { kind, cont });
            }
            defs.push(Def {
                name: d.name.clone(),
                params: d.params.len(),
                locals: d.locals.iter().map(|l| l.rate).collect(),
                body,
            });
        }

        let mut runs = Vec::new();
        for r in &program.runs {
            let def = lookup(&r.process)?;
            if defs[def].params != 0 {
                return Err(LoadError::Arity {
                    process: r.process.clone(),
                    given: 0,
                    expected: defs[def].params,
                });
            }
            runs.push((def, r.count));
        }
        let columns = if program.plot.is_empty() {
            (0..defs.len()).collect()
        } else {
            program.plot.iter().map(|p| lookup(p)).collect::<Result<_, _>>()?
        };
        let globals = program
            .globals
            .iter()
            .enumerate()
            .map(|(i, g)| Chan {
                id: i as u64,
                rate: g.rate,
            })
            .collect();
        Ok(Self {
            defs,
            globals,
            runs,
            columns,
            sample_time: program.sample_time,
        })
    }

    /// Plotted definition names, in plot order.
    pub fn columns(&self) -> Vec<String> {
        self.columns.iter().map(|&d| self.defs[d].name.clone()).collect()
    }

    pub fn def_names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }
}

#[derive(Clone, Debug)]
struct Instance {
    def: usize,
    env: Vec<Chan>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Key {
    Chan(u64),
    /// Instance and branch.
    Delay(usize, usize),
}

#[derive(Clone, Debug)]
enum Group {
    Comm {
        rate: f64,
        outputs: IndexMap<(usize, usize), f64>,
        inputs: IndexSet<(usize, usize)>,
        weight: f64,
        /// Sum over instances of own output weight times own input count.
        overlap: f64,
    },
    Delay(f64),
}

impl Group {
    fn propensity(&self) -> f64 {
        match self {
            Group::Comm {
                rate,
                weight,
                inputs,
                overlap,
                outputs,
            } => {
                if outputs.is_empty() || inputs.is_empty() {
                    return 0.0;
                }
                let pairs = weight * inputs.len() as f64 - overlap;
                if pairs <= 1e-9 * weight {
                    0.0
                } else {
                    rate * pairs
                }
            }
            Group::Delay(rate) => *rate,
        }
    }
}

/// What a step did.
#[derive(Clone, PartialEq, Debug)]
pub enum Fired {
    /// Output instance's definition, input instance's definition, channel.
    Comm { sender: String, receiver: String, channel: u64 },
    Delay { process: String },
}

#[derive(Clone, PartialEq, Debug)]
pub struct StepEvent {
    pub dt: f64,
    pub fired: Fired,
}

/// A running mixture of process instances.
pub struct PiSimulation<'p> {
    program: &'p LoadedProgram,
    instances: Vec<Option<Instance>>,
    free: Vec<usize>,
    counts: Vec<u64>,
    groups: IndexMap<Key, Group>,
    tree: SumTree,
    next_id: u64,
    time: f64,
    rng: ChaCha8Rng,
}

impl<'p> PiSimulation<'p> {
    pub fn new(program: &'p LoadedProgram, seed: u64) -> Self {
        let mut sim = Self {
            program,
            instances: Vec::new(),
            free: Vec::new(),
            counts: vec![0; program.defs.len()],
            groups: IndexMap::new(),
            tree: SumTree::new(),
            next_id: program.globals.len() as u64,
            time: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for &(def, n) in &program.runs {
            for _ in 0..n {
                sim.spawn(def, Vec::new());
            }
        }
        sim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Live instances of the named definition.
    pub fn count(&self, name: &str) -> u64 {
        self.program
            .defs
            .iter()
            .position(|d| d.name == name)
            .map_or(0, |i| self.counts[i])
    }

    pub fn live(&self) -> usize {
        self.instances.iter().flatten().count()
    }

    pub fn total_propensity(&self) -> f64 {
        self.tree.total()
    }

    fn resolve(&self, r: Ref, env: &[Chan], bound: &[Chan]) -> Chan {
        match r {
            Ref::Global(g) => self.program.globals[g],
            Ref::Env(j) => env[j],
            Ref::Bound(j) => bound[j],
        }
    }

    fn group_set(&mut self, key: Key) {
        if let Some((i, _, g)) = self.groups.get_full(&key) {
            self.tree.set(i, g.propensity());
        }
    }

    /// Channels this instance offers on, with its own output weight and input count.
    fn own_offers(&self, inst: &Instance) -> Vec<(Chan, f64, usize)> {
        let mut out: Vec<(Chan, f64, usize)> = Vec::new();
        for b in &self.program.defs[inst.def].body {
            let (chan, w, n) = match &b.kind {
                Kind::Out { chan, weight, .. } => (*chan, *weight, 0),
                Kind::In { chan, .. } => (*chan, 0.0, 1),
                Kind::Delay(_) => continue,
            };
            let c = self.resolve(chan, &inst.env, &[]);
            match out.iter_mut().find(|(x, _, _)| x.id == c.id) {
                Some(entry) => {
                    entry.1 += w;
                    entry.2 += n;
                }
                None => out.push((c, w, n)),
            }
        }
        out
    }

    fn spawn(&mut self, def: usize, args: Vec<Chan>) {
        let d = &self.program.defs[def];
        debug_assert_eq!(args.len(), d.params);
        let mut env = args;
        for &rate in &d.locals {
            env.push(Chan { id: self.next_id, rate });
            self.next_id += 1;
        }
        let inst = Instance { def, env };
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.instances.push(None);
                self.instances.len() - 1
            }
        };
        self.counts[def] += 1;

        for (bi, b) in d.body.iter().enumerate() {
            match &b.kind {
                Kind::Delay(rate) => {
                    let key = Key::Delay(id, bi);
                    self.groups.insert(key, Group::Delay(*rate));
                    self.tree.push(*rate);
                }
                Kind::Out { chan, weight, .. } => {
                    let c = self.resolve(*chan, &inst.env, &[]);
                    if let Group::Comm { outputs, weight: w, .. } = self.comm_group(c) {
                        outputs.insert((id, bi), *weight);
                        *w += weight;
                    }
                }
                Kind::In { chan, .. } => {
                    let c = self.resolve(*chan, &inst.env, &[]);
                    if let Group::Comm { inputs, .. } = self.comm_group(c) {
                        inputs.insert((id, bi));
                    }
                }
            }
        }
        for (c, w, n) in self.own_offers(&inst) {
            if let Some(Group::Comm { overlap, .. }) = self.groups.get_mut(&Key::Chan(c.id)) {
                *overlap += w * n as f64;
            }
            self.group_set(Key::Chan(c.id));
        }
        self.instances[id] = Some(inst);
    }

    fn comm_group(&mut self, c: Chan) -> &mut Group {
        let key = Key::Chan(c.id);
        if !self.groups.contains_key(&key) {
            self.tree.push(0.0);
        }
        self.groups.entry(key).or_insert_with(|| Group::Comm {
            rate: c.rate,
            outputs: IndexMap::new(),
            inputs: IndexSet::new(),
            weight: 0.0,
            overlap: 0.0,
        })
    }

    fn remove_group(&mut self, key: Key) {
        if let Some((i, _, _)) = self.groups.swap_remove_full(&key) {
            self.tree.swap_remove(i);
        }
    }

    fn kill(&mut self, id: usize) -> Instance {
        let inst = self.instances[id].take().expect("live instance");
        self.free.push(id);
        self.counts[inst.def] -= 1;
        let offers = self.own_offers(&inst);
        for (c, w, n) in &offers {
            if let Some(Group::Comm { overlap, .. }) = self.groups.get_mut(&Key::Chan(c.id)) {
                *overlap -= w * *n as f64;
            }
        }
        for (bi, b) in self.program.defs[inst.def].body.iter().enumerate() {
            match &b.kind {
                Kind::Delay(_) => self.remove_group(Key::Delay(id, bi)),
                Kind::Out { chan, .. } => {
                    let c = self.resolve(*chan, &inst.env, &[]);
                    if let Some(Group::Comm { outputs, weight, .. }) = self.groups.get_mut(&Key::Chan(c.id)) {
                        if let Some(w) = outputs.swap_remove(&(id, bi)) {
                            *weight -= w;
                        }
                    }
                }
                Kind::In { chan, .. } => {
                    let c = self.resolve(*chan, &inst.env, &[]);
                    if let Some(Group::Comm { inputs, .. }) = self.groups.get_mut(&Key::Chan(c.id)) {
                        inputs.swap_remove(&(id, bi));
                    }
                }
            }
        }
        for (c, _, _) in offers {
            let key = Key::Chan(c.id);
            let empty = match self.groups.get_mut(&key) {
                Some(Group::Comm {
                    outputs,
                    inputs,
                    weight,
                    overlap,
                    ..
                }) => {
                    if outputs.is_empty() {
                        *weight = 0.0;
                    }
                    if outputs.is_empty() || inputs.is_empty() {
                        *overlap = 0.0;
                    }
                    outputs.is_empty() && inputs.is_empty()
                }
                _ => false,
            };
            if empty {
                self.remove_group(key);
            } else {
                self.group_set(key);
            }
        }
        inst
    }

    /// Replaces an instance by the continuation of one of its branches.
    fn continue_with(&mut self, inst: &Instance, branch: usize, bound: &[Chan]) {
        if let Some((def, args)) = &self.program.defs[inst.def].body[branch].cont {
            let args = args.iter().map(|r| self.resolve(*r, &inst.env, bound)).collect();
            self.spawn(*def, args);
        }
    }

    /// Advances by one reaction, or returns `None` when nothing can fire.
    pub fn step(&mut self) -> Option<StepEvent> {
        let total = self.tree.total();
        if total <= 0.0 || self.tree.len() == 0 {
            return None;
        }
        let dt = -(1.0 - self.rng.gen::<f64>()).ln() / total;
        Some(self.fire(dt))
    }

    /// Applies one reaction chosen by propensity and advances the clock by `dt`.
    fn fire(&mut self, dt: f64) -> StepEvent {
        let i = self.tree.find(self.rng.gen::<f64>());
        let (key, pair) = {
            let (&key, group) = self.groups.get_index(i).expect("aligned with tree");
            let pair = match group {
                Group::Comm {
                    outputs,
                    inputs,
                    weight,
                    ..
                } => Some(pick_pair(&mut self.rng, outputs, inputs, *weight)),
                Group::Delay(_) => None,
            };
            (key, pair)
        };
        self.time += dt;
        let fired = match (key, pair) {
            (Key::Delay(id, branch), _) => {
                let inst = self.kill(id);
                let process = self.program.defs[inst.def].name.clone();
                self.continue_with(&inst, branch, &[]);
                Fired::Delay { process }
            }
            (Key::Chan(channel), Some(((o, ob), (r, rb)))) => {
                let sender = self.kill(o);
                let receiver = self.kill(r);
                let payload: Vec<Chan> = match &self.program.defs[sender.def].body[ob].kind {
                    Kind::Out { payload, .. } => payload.iter().map(|p| self.resolve(*p, &sender.env, &[])).collect(),
                    _ => unreachable!("output branch"),
                };
                debug_assert!(matches!(
                    self.program.defs[receiver.def].body[rb].kind,
                    Kind::In { arity, .. } if arity == payload.len()
                ));
                self.continue_with(&sender, ob, &[]);
                self.continue_with(&receiver, rb, &payload);
                Fired::Comm {
                    sender: self.program.defs[sender.def].name.clone(),
                    receiver: self.program.defs[receiver.def].name.clone(),
                    channel,
                }
            }
            (Key::Chan(_), None) => unreachable!("channel keys hold offers"),
        };
        StepEvent { dt, fired }
    }

    fn row(&self) -> Vec<u64> {
        self.program.columns.iter().map(|&d| self.counts[d]).collect()
    }

    /// Runs until `until` and samples the plotted definitions at `points`
    /// evenly spaced times, starting from the current state at time 0.
    pub fn simulate(&mut self, until: f64, points: usize) -> TraceTable {
        let mut table = TraceTable::new(self.program.columns());
        let times = sample_times(until, points);
        let mut next = 0;
        while next < times.len() {
            let total = self.tree.total();
            if total <= 0.0 {
                break;
            }
            let dt = -(1.0 - self.rng.gen::<f64>()).ln() / total;
            while next < times.len() && self.time + dt > times[next] {
                table.push(times[next], self.row());
                next += 1;
            }
            if next == times.len() {
                break;
            }
            self.fire(dt);
        }
        while next < times.len() {
            table.push(times[next], self.row());
            next += 1;
        }
        table
    }

    /// Every enabled reaction and its propensity, found by checking each
    /// ordered pair of live instances. Slow; used to cross-check the
    /// aggregated bookkeeping.
    pub fn enumerate_reactions(&self) -> Vec<(Key, f64)> {
        let mut by_key: IndexMap<Key, f64> = IndexMap::new();
        let live: Vec<(usize, &Instance)> = self
            .instances
            .iter()
            .enumerate()
            .filter_map(|(i, x)| x.as_ref().map(|x| (i, x)))
            .collect();
        for &(i, a) in &live {
            for (bi, b) in self.program.defs[a.def].body.iter().enumerate() {
                match &b.kind {
                    Kind::Delay(rate) => {
                        *by_key.entry(Key::Delay(i, bi)).or_default() += rate;
                    }
                    Kind::Out { chan, weight, .. } => {
                        let c = self.resolve(*chan, &a.env, &[]);
                        for &(j, other) in &live {
                            if i == j {
                                continue;
                            }
                            for b2 in &self.program.defs[other.def].body {
                                if let Kind::In { chan: ch2, .. } = &b2.kind {
                                    if self.resolve(*ch2, &other.env, &[]).id == c.id && c.rate > 0.0 {
                                        *by_key.entry(Key::Chan(c.id)).or_default() += c.rate * weight;
                                    }
                                }
                            }
                        }
                    }
                    Kind::In { .. } => {}
                }
            }
        }
        by_key.into_iter().collect()
    }

    /// Aggregated propensity per reaction group, as used for sampling.
    pub fn group_propensities(&self) -> Vec<(Key, f64)> {
        self.groups
            .iter()
            .enumerate()
            .map(|(i, (k, _))| (*k, self.tree.get(i)))
            .filter(|(_, p)| *p > 0.0)
            .collect()
    }
}

/// Output drawn by weight and input drawn uniformly, redrawn while both
/// belong to the same instance.
fn pick_pair(
    rng: &mut ChaCha8Rng,
    outputs: &IndexMap<(usize, usize), f64>,
    inputs: &IndexSet<(usize, usize)>,
    weight: f64,
) -> ((usize, usize), (usize, usize)) {
    loop {
        let mut u = rng.gen::<f64>() * weight;
        let mut chosen = *outputs.get_index(outputs.len() - 1).expect("nonempty").0;
        for (k, w) in outputs {
            if u < *w {
                chosen = *k;
                break;
            }
            u -= w;
        }
        let input = *inputs.get_index(rng.gen_range(0..inputs.len())).expect("nonempty");
        if chosen.0 != input.0 {
            return (chosen, input);
        }
    }
}

/// Loads `program` and samples one trajectory.
pub fn run_program(program: &LoadedProgram, seed: u64, until: f64, points: usize) -> TraceTable {
    PiSimulation::new(program, seed).simulate(until, points)
}
