//! Direct stochastic simulation of the sentences as rules over agents with
//! explicit bonds. Shares no code with the pi translation, so agreement
//! between the two simulators checks the translation.

use indexmap::{IndexMap, IndexSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codegen::process_name;
use crate::compile_map::{check_state_cap, DEFAULT_STATE_CAP};
use crate::error::CompileError;
use crate::model::{graded_index, Body, Model, SiteRef, SiteTable, StateMask};
use crate::trace::{sample_times, TraceTable};
use crate::validate::validate;

struct Species {
    table: SiteTable,
    /// Agents per state mask.
    by_mask: Vec<IndexSet<usize>>,
    /// Column names indexed by mask.
    names: Vec<String>,
}

#[derive(Clone, Debug)]
struct Agent {
    species: usize,
    bonds: Vec<Option<u64>>,
    mask: StateMask,
}

#[derive(Clone, Debug)]
struct Bond {
    /// Agent and site index, smaller site reference first.
    ends: [(usize, usize); 2],
    kind: usize,
    key: (StateMask, StateMask),
}

#[derive(Clone, Debug)]
enum Rule {
    Associate {
        rate: f64,
        /// Species, site index and allowed states, smaller site reference first.
        sides: [(usize, usize, Vec<StateMask>); 2],
        kind: usize,
    },
    Dissociate {
        rate: f64,
        kind: usize,
        allowed: [Vec<bool>; 2],
    },
    Transform {
        rate: f64,
        source: usize,
        target: Option<usize>,
    },
}

/// One line of [`RuleSimulation::propensities`].
#[derive(Clone, PartialEq, Debug)]
pub struct RuleActivity {
    /// 1-based sentence number.
    pub sentence: usize,
    pub matches: u64,
    pub propensity: f64,
}

/// A mixture of agents evolving under the sentences of a model.
pub struct RuleSimulation {
    species: Vec<Species>,
    rules: Vec<Rule>,
    agents: Vec<Option<Agent>>,
    free: Vec<usize>,
    bonds: IndexMap<u64, Bond>,
    /// Per bond kind, bonds grouped by the states of their two ends.
    buckets: Vec<IndexMap<(StateMask, StateMask), IndexSet<u64>>>,
    next_bond: u64,
    time: f64,
    rng: ChaCha8Rng,
}

impl RuleSimulation {
    /// Builds the initial mixture: `model.population(A)` unbound agents of
    /// every species `A`.
    pub fn new(model: &Model, seed: u64) -> Result<Self, CompileError> {
        let violations = validate(model);
        if !violations.is_empty() {
            return Err(CompileError::Invalid(violations));
        }
        check_state_cap(model, DEFAULT_STATE_CAP)?;

        let names = model.species();
        let species: Vec<Species> = names
            .iter()
            .map(|sp| {
                let table = model.site_table(sp);
                let n = table.len();
                Species {
                    by_mask: vec![IndexSet::new(); 1 << n],
                    names: graded_index(n).into_iter().map(|i| process_name(sp.as_str(), i)).collect(),
                    table,
                }
            })
            .collect();
        let sp_index = |name: &crate::model::SpeciesName| names.iter().position(|x| x == name).expect("species");
        let site_index = |r: &SiteRef| {
            let s = sp_index(&r.species);
            (s, species[s].table.index_of(&r.site).expect("site"))
        };

        let mut kinds: IndexMap<(SiteRef, SiteRef), usize> = IndexMap::new();
        let mut kind_of = |a: &SiteRef, b: &SiteRef| {
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            let n = kinds.len();
            *kinds.entry(key).or_insert(n)
        };
        let mut rules = Vec::new();
        for (i, s) in model.sentences().iter().enumerate() {
            let (ls, rs) = model.sentence_states(i);
            match s.body() {
                Body::Association(l, r) | Body::Dissociation(l, r) => {
                    let rs = rs.expect("binding body");
                    let (lo, hi, lo_states, hi_states) = if l <= r { (l, r, ls, rs) } else { (r, l, rs, ls) };
                    let kind = kind_of(lo, hi);
                    if matches!(s.body(), Body::Association(..)) {
                        let (ls, lsite) = site_index(lo);
                        let (hs, hsite) = site_index(hi);
                        rules.push(Rule::Associate {
                            rate: s.rate(),
                            sides: [
                                (ls, lsite, lo_states.masks().to_vec()),
                                (hs, hsite, hi_states.masks().to_vec()),
                            ],
                            kind,
                        });
                    } else {
                        rules.push(Rule::Dissociate {
                            rate: s.rate(),
                            kind,
                            allowed: [lo_states.membership(), hi_states.membership()],
                        });
                    }
                }
                Body::Transformation { source, target } => rules.push(Rule::Transform {
                    rate: s.rate(),
                    source: sp_index(source),
                    target: target.as_ref().map(sp_index),
                }),
            }
        }

        let mut sim = Self {
            species,
            rules,
            agents: Vec::new(),
            free: Vec::new(),
            bonds: IndexMap::new(),
            buckets: vec![IndexMap::new(); kinds.len()],
            next_bond: 0,
            time: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        for (i, sp) in names.iter().enumerate() {
            for _ in 0..model.population(sp) {
                sim.add_agent(i);
            }
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Column names, highest state first within each species.
    pub fn columns(&self) -> Vec<String> {
        self.column_order().into_iter().map(|(s, m)| self.species[s].names[m as usize].clone()).collect()
    }

    fn column_order(&self) -> Vec<(usize, StateMask)> {
        self.species
            .iter()
            .enumerate()
            .flat_map(|(i, sp)| sp.table.states_in_order().into_iter().rev().map(move |m| (i, m)))
            .collect()
    }

    /// Agents currently in the state named like the matching pi process.
    pub fn count(&self, name: &str) -> u64 {
        for sp in &self.species {
            if let Some(m) = sp.names.iter().position(|n| n == name) {
                return sp.by_mask[m].len() as u64;
            }
        }
        0
    }

    fn add_agent(&mut self, species: usize) {
        let n = self.species[species].table.len();
        let agent = Agent {
            species,
            bonds: vec![None; n],
            mask: 0,
        };
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.agents.push(None);
                self.agents.len() - 1
            }
        };
        self.agents[id] = Some(agent);
        self.species[species].by_mask[0].insert(id);
    }

    fn agent(&self, id: usize) -> &Agent {
        self.agents[id].as_ref().expect("live agent")
    }

    fn bucket_key(&self, bond: &Bond) -> (StateMask, StateMask) {
        (self.agent(bond.ends[0].0).mask, self.agent(bond.ends[1].0).mask)
    }

    fn rebucket(&mut self, bond_id: u64) {
        let bond = self.bonds[&bond_id].clone();
        let new_key = self.bucket_key(&bond);
        if new_key == bond.key {
            return;
        }
        let buckets = &mut self.buckets[bond.kind];
        if let Some(set) = buckets.get_mut(&bond.key) {
            set.swap_remove(&bond_id);
            if set.is_empty() {
                buckets.swap_remove(&bond.key);
            }
        }
        buckets.entry(new_key).or_default().insert(bond_id);
        self.bonds[&bond_id].key = new_key;
    }

    fn set_site(&mut self, agent: usize, site: usize, bond: Option<u64>) {
        let a = self.agents[agent].as_mut().expect("live agent");
        let old = a.mask;
        a.bonds[site] = bond;
        let bit = 1 << site;
        a.mask = if bond.is_some() { old | bit } else { old & !bit };
        let (species, new) = (a.species, a.mask);
        let by_mask = &mut self.species[species].by_mask;
        by_mask[old as usize].swap_remove(&agent);
        by_mask[new as usize].insert(agent);
    }

    fn rebucket_agent(&mut self, agent: usize) {
        let ids: Vec<u64> = self.agent(agent).bonds.iter().flatten().copied().collect();
        for b in ids {
            self.rebucket(b);
        }
    }

    fn allowed_count(&self, species: usize, masks: &[StateMask]) -> u64 {
        masks
            .iter()
            .map(|&m| self.species[species].by_mask[m as usize].len() as u64)
            .sum()
    }

    fn matching_buckets<'a>(
        &'a self,
        kind: usize,
        allowed: &'a [Vec<bool>; 2],
    ) -> impl Iterator<Item = &'a IndexSet<u64>> + 'a {
        self.buckets[kind]
            .iter()
            .filter(|((a, b), _)| allowed[0][*a as usize] && allowed[1][*b as usize])
            .map(|(_, set)| set)
    }

    /// Match count and propensity of every sentence in the current mixture.
    pub fn propensities(&self) -> Vec<RuleActivity> {
        self.rules
            .iter()
            .enumerate()
            .map(|(i, rule)| {
                let (matches, rate) = match rule {
                    Rule::Associate { rate, sides, .. } => (
                        self.allowed_count(sides[0].0, &sides[0].2) * self.allowed_count(sides[1].0, &sides[1].2),
                        *rate,
                    ),
                    Rule::Dissociate { rate, kind, allowed } => (
                        self.matching_buckets(*kind, allowed).map(|s| s.len() as u64).sum(),
                        *rate,
                    ),
                    Rule::Transform { rate, source, .. } => (self.species[*source].by_mask[0].len() as u64, *rate),
                };
                RuleActivity {
                    sentence: i + 1,
                    matches,
                    propensity: rate * matches as f64,
                }
            })
            .collect()
    }

    fn pick_agent(&mut self, species: usize, masks: &[StateMask]) -> usize {
        let total = self.allowed_count(species, masks);
        let mut k = self.rng.gen_range(0..total) as usize;
        for &m in masks {
            let set = &self.species[species].by_mask[m as usize];
            if k < set.len() {
                return *set.get_index(k).expect("in range");
            }
            k -= set.len();
        }
        unreachable!("index below total")
    }

    fn fire(&mut self, rule: usize) {
        match self.rules[rule].clone() {
            Rule::Associate { sides, kind, .. } => {
                let x = self.pick_agent(sides[0].0, &sides[0].2);
                let y = self.pick_agent(sides[1].0, &sides[1].2);
                let id = self.next_bond;
                self.next_bond += 1;
                self.set_site(x, sides[0].1, Some(id));
                self.set_site(y, sides[1].1, Some(id));
                let mut bond = Bond {
                    ends: [(x, sides[0].1), (y, sides[1].1)],
                    kind,
                    key: (0, 0),
                };
                bond.key = self.bucket_key(&bond);
                self.buckets[kind].entry(bond.key).or_default().insert(id);
                self.bonds.insert(id, bond);
                self.rebucket_agent(x);
                self.rebucket_agent(y);
            }
            Rule::Dissociate { kind, allowed, .. } => {
                let total: usize = self.matching_buckets(kind, &allowed).map(IndexSet::len).sum();
                let mut k = self.rng.gen_range(0..total);
                let mut chosen = None;
                for set in self.matching_buckets(kind, &allowed) {
                    if k < set.len() {
                        chosen = set.get_index(k).copied();
                        break;
                    }
                    k -= set.len();
                }
                let id = chosen.expect("index below total");
                let bond = self.bonds.swap_remove(&id).expect("registered bond");
                let set = self.buckets[kind].get_mut(&bond.key).expect("bucket");
                set.swap_remove(&id);
                if set.is_empty() {
                    self.buckets[kind].swap_remove(&bond.key);
                }
                for (agent, site) in bond.ends {
                    self.set_site(agent, site, None);
                    self.rebucket_agent(agent);
                }
            }
            Rule::Transform { source, target, .. } => {
                let x = self.pick_agent(source, &[0]);
                self.species[source].by_mask[0].swap_remove(&x);
                self.agents[x] = None;
                self.free.push(x);
                if let Some(t) = target {
                    self.add_agent(t);
                }
            }
        }
    }

    fn draw(&mut self) -> Option<(f64, usize)> {
        let props: Vec<f64> = self.propensities().into_iter().map(|a| a.propensity).collect();
        let total: f64 = props.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let dt = -(1.0 - self.rng.gen::<f64>()).ln() / total;
        let mut u = self.rng.gen::<f64>() * total;
        let mut rule = props.iter().rposition(|p| *p > 0.0).expect("positive total");
        for (i, p) in props.iter().enumerate() {
            if u < *p {
                rule = i;
                break;
            }
            u -= p;
        }
        Some((dt, rule))
    }

    /// Fires one sentence; returns the waiting time and 1-based sentence
    /// number, or `None` when nothing is enabled.
    pub fn step(&mut self) -> Option<(f64, usize)> {
        let (dt, rule) = self.draw()?;
        self.time += dt;
        self.fire(rule);
        Some((dt, rule + 1))
    }

    fn row(&self) -> Vec<u64> {
        self.column_order()
            .into_iter()
            .map(|(s, m)| self.species[s].by_mask[m as usize].len() as u64)
            .collect()
    }

    /// Samples every species state at `points` evenly spaced times up to `until`.
    pub fn simulate(&mut self, until: f64, points: usize) -> TraceTable {
        let mut table = TraceTable::new(self.columns());
        let times = sample_times(until, points);
        let mut next = 0;
        while next < times.len() {
            let Some((dt, rule)) = self.draw() else { break };
            while next < times.len() && self.time + dt > times[next] {
                table.push(times[next], self.row());
                next += 1;
            }
            if next == times.len() {
                break;
            }
            self.time += dt;
            self.fire(rule);
        }
        while next < times.len() {
            table.push(times[next], self.row());
            next += 1;
        }
        table
    }

    /// Checks that every bond is recorded on both of its ends and in the
    /// right bucket. Used by tests.
    pub fn check_consistency(&self) -> Result<(), String> {
        for (id, b) in &self.bonds {
            for (agent, site) in b.ends {
                let a = self.agents[agent].as_ref().ok_or("bond on dead agent")?;
                if a.bonds[site] != Some(*id) {
                    return Err(format!("bond {id} missing on agent {agent}"));
                }
            }
            if b.key != self.bucket_key(b) || !self.buckets[b.kind].get(&b.key).is_some_and(|s| s.contains(id)) {
                return Err(format!("bond {id} in the wrong bucket"));
            }
        }
        let bonded_sites: usize = self.agents.iter().flatten().map(|a| a.bonds.iter().flatten().count()).sum();
        if bonded_sites != 2 * self.bonds.len() {
            return Err("dangling bond ids on agents".into());
        }
        for (s, sp) in self.species.iter().enumerate() {
            for (m, set) in sp.by_mask.iter().enumerate() {
                for &a in set {
                    let agent = self.agent(a);
                    if agent.species != s || agent.mask as usize != m {
                        return Err(format!("agent {a} filed under the wrong state"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs `model` from its initial populations and samples one trajectory.
pub fn run(model: &Model, seed: u64, until: f64, points: usize) -> Result<TraceTable, CompileError> {
    Ok(RuleSimulation::new(model, seed)?.simulate(until, points))
}
