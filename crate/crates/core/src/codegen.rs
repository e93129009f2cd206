//! Translation of a compile map into a pi program.
//!
//! Every species state becomes one process definition whose parameters are
//! the private channels held by its bound sites. Associations communicate
//! on global channels that carry the fresh private channels of the new bond;
//! dissociations offer both an output and an input on a private channel of
//! half the sentence rate; transformations are delays.

use std::collections::{BTreeMap, BTreeSet};

use crate::compile_map::{CompileMap, SpeciesActions};
use crate::error::CompileError;
use crate::model::{graded_index, Body, Model, SiteName, SiteRef, SpeciesName, StateMask};
use crate::pi::{Action, ChannelDecl, Continuation, PiProgram, Prefix, ProcessDef, Run};

/// Name of the zero-rate channel passed for slots with no bond to carry.
pub const NIL: &str = "nil";

const SPIM_RESERVED: &[&str] = &[
    "new", "chan", "let", "and", "do", "or", "run", "of", "delay", "directive", "sample", "plot", NIL,
];

/// One private channel a bound site holds.
#[derive(Clone, PartialEq, Debug)]
pub struct RateEntry {
    pub site: SiteName,
    /// Declared channel rate: half the dissociation rate, or 1.0 for the default.
    pub rate: f64,
    /// 1-based position in the site's list.
    pub index: usize,
    /// 1-based dissociation sentence, `None` for the default entry.
    pub sentence: Option<usize>,
}

impl RateEntry {
    pub fn is_default(&self) -> bool {
        self.sentence.is_none()
    }
}

/// Private channels of site `site` on `species`: one per dissociation
/// sentence mentioning it, or a single default entry when there are none.
pub fn r_set(model: &Model, species: &SpeciesName, site: &SiteName) -> Vec<RateEntry> {
    let me = SiteRef::new(species.clone(), site.clone());
    let mut out: Vec<RateEntry> = Vec::new();
    for (i, s) in model.sentences().iter().enumerate() {
        if let Body::Dissociation(l, r) = s.body() {
            if *l == me || *r == me {
                out.push(RateEntry {
                    site: site.clone(),
                    rate: s.rate() / 2.0,
                    index: out.len() + 1,
                    sentence: Some(i + 1),
                });
            }
        }
    }
    if out.is_empty() {
        out.push(RateEntry {
            site: site.clone(),
            rate: 1.0,
            index: 1,
            sentence: None,
        });
    }
    out
}

fn dissociates(model: &Model, sentence: usize, a: &SiteRef, b: &SiteRef) -> bool {
    match model.sentences()[sentence - 1].body() {
        Body::Dissociation(l, r) => (l == a && r == b) || (l == b && r == a),
        _ => false,
    }
}

/// Entries of `a` that a bond between `a` and `b` carries, regardless of
/// which side sends them.
fn carried(model: &Model, a: &SiteRef, b: &SiteRef) -> Vec<RateEntry> {
    let mine = r_set(model, &a.species, &a.site);
    let specific: Vec<RateEntry> = mine
        .iter()
        .filter(|e| e.sentence.is_some_and(|s| dissociates(model, s, a, b)))
        .cloned()
        .collect();
    if !specific.is_empty() {
        return specific;
    }
    let theirs = r_set(model, &b.species, &b.site);
    if mine[0].is_default() && theirs[0].is_default() {
        mine
    } else {
        Vec::new()
    }
}

/// Fresh channels created when `a` associates with `b`. Only the smaller
/// side of the pair creates them, so the result is empty when `b < a`.
pub fn u_set(model: &Model, a: &SiteRef, b: &SiteRef) -> Vec<RateEntry> {
    if a < b {
        carried(model, a, b)
    } else {
        Vec::new()
    }
}

/// Process name for the state at graded position `index`.
pub fn process_name(species: &str, index: usize) -> String {
    if species.ends_with(|c: char| c.is_ascii_digit()) {
        format!("{species}_{index}")
    } else {
        format!("{species}{index}")
    }
}

/// Process names of `species` indexed by state mask.
fn process_names(species: &SpeciesName, sites: usize) -> Vec<String> {
    graded_index(sites)
        .into_iter()
        .map(|i| process_name(species.as_str(), i))
        .collect()
}

/// Channel names chosen for one model.
pub struct Naming {
    /// Association sentence label to global channel.
    pub globals: BTreeMap<usize, String>,
    /// Slot names per site, aligned with [`r_set`].
    pub slots: BTreeMap<SiteRef, Vec<(RateEntry, String)>>,
}

fn fresh(base: String, taken: &BTreeSet<String>) -> String {
    if !taken.contains(&base) {
        return base;
    }
    (2..)
        .map(|k| format!("{base}_{k}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded search")
}

impl Naming {
    pub fn new(model: &Model) -> Self {
        let mut taken: BTreeSet<String> = SPIM_RESERVED.iter().map(|s| s.to_string()).collect();
        let mut globals = BTreeMap::new();
        for (i, s) in model.sentences().iter().enumerate() {
            if let Body::Association(l, r) = s.body() {
                let (lo, hi) = if l.site <= r.site { (&l.site, &r.site) } else { (&r.site, &l.site) };
                let plain = format!("{lo}{hi}{}", i + 1);
                let name = if taken.contains(&plain) {
                    fresh(format!("{lo}_{hi}_{}", i + 1), &taken)
                } else {
                    plain
                };
                taken.insert(name.clone());
                globals.insert(i + 1, name);
            }
        }

        let mut slots = BTreeMap::new();
        for sp in model.species() {
            let mut local = taken.clone();
            for site in model.sites(&sp) {
                let entries = r_set(model, &sp, &site);
                let named = entries
                    .into_iter()
                    .map(|e| {
                        let base = if e.is_default() {
                            site.to_string()
                        } else if site.as_str().ends_with(|c: char| c.is_ascii_digit()) {
                            format!("{site}_{}", e.index)
                        } else {
                            format!("{site}{}", e.index)
                        };
                        let name = fresh(base, &local);
                        local.insert(name.clone());
                        (e, name)
                    })
                    .collect();
                slots.insert(SiteRef::new(sp.clone(), site), named);
            }
        }
        Self { globals, slots }
    }

    fn slots_of(&self, r: &SiteRef) -> &[(RateEntry, String)] {
        &self.slots[r]
    }
}

/// Parameter names of a process in state `mask`, with the slots of
/// `replace.0` substituted by `replace.1`.
fn args_for(
    naming: &Naming,
    sa: &SpeciesActions,
    mask: StateMask,
    replace: Option<(&SiteName, &[String])>,
) -> Vec<String> {
    let mut out = Vec::new();
    for site in sa.table.names(mask) {
        match replace {
            Some((s, names)) if *s == site => out.extend(names.iter().cloned()),
            _ => {
                let r = SiteRef::new(sa.species.clone(), site);
                out.extend(naming.slots_of(&r).iter().map(|(_, n)| n.clone()));
            }
        }
    }
    out
}

/// Communication actions for the associations of `site` in state `mask`.
/// The second component lists the private channels the process must create.
pub fn association_actions(
    model: &Model,
    naming: &Naming,
    sa: &SpeciesActions,
    mask: StateMask,
    site: &SiteName,
) -> (Vec<Action>, Vec<ChannelDecl>) {
    let names = process_names(&sa.species, sa.table.len());
    let bit = sa.table.bit(site).expect("site of species");
    let me = SiteRef::new(sa.species.clone(), site.clone());
    let slots = naming.slots_of(&me);
    let mut actions = Vec::new();
    let mut locals: Vec<ChannelDecl> = Vec::new();
    let Some(partners) = sa.at(mask).assoc.get(site) else {
        return (actions, locals);
    };
    for p in partners {
        let other = SiteRef::new(p.species.clone(), p.site.clone());
        let sent = carried(model, &me, &other);
        let sent_names: Vec<String> = sent
            .iter()
            .map(|e| slots.iter().find(|(x, _)| x == e).expect("slot of site").1.clone())
            .collect();
        let filled: Vec<String> = slots
            .iter()
            .map(|(e, n)| if sent.contains(e) { n.clone() } else { NIL.to_string() })
            .collect();
        let cont = Continuation::Call {
            process: names[(mask | bit) as usize].clone(),
            args: args_for(naming, sa, mask | bit, Some((site, &filled))),
        };
        let channel = naming.globals[&p.label].clone();
        let prefix = if me < other {
            for (e, n) in sent.iter().zip(&sent_names) {
                if !locals.iter().any(|l| &l.name == n) {
                    let mut decl = ChannelDecl::new(n.clone(), e.rate, 0);
                    if !e.is_default() {
                        decl.min_decimals = 2;
                    }
                    locals.push(decl);
                }
            }
            Prefix::Output {
                channel,
                payload: sent_names,
                weight: Some(p.rate),
            }
        } else {
            Prefix::Input {
                channel,
                params: sent_names,
            }
        };
        actions.push(Action { prefix, cont });
    }
    (actions, locals)
}

/// `!x; P or ?x; P` for every dissociation of `site` enabled in `mask`.
pub fn dissociation_actions(naming: &Naming, sa: &SpeciesActions, mask: StateMask, site: &SiteName) -> Vec<Action> {
    let names = process_names(&sa.species, sa.table.len());
    let bit = sa.table.bit(site).expect("site of species");
    let slots = naming.slots_of(&SiteRef::new(sa.species.clone(), site.clone()));
    let mut out = Vec::new();
    let Some(partners) = sa.at(mask).dissoc.get(site) else {
        return out;
    };
    for p in partners {
        let channel = slots
            .iter()
            .find(|(e, _)| e.sentence == Some(p.label))
            .expect("dissociation slot")
            .1
            .clone();
        let cont = Continuation::Call {
            process: names[(mask & !bit) as usize].clone(),
            args: args_for(naming, sa, mask & !bit, None),
        };
        out.push(Action {
            prefix: Prefix::Output {
                channel: channel.clone(),
                payload: Vec::new(),
                weight: None,
            },
            cont: cont.clone(),
        });
        out.push(Action {
            prefix: Prefix::Input {
                channel,
                params: Vec::new(),
            },
            cont,
        });
    }
    out
}

/// `delay@r; B0()` per transformation of the unbound state, `delay@r; ()`
/// for decays.
pub fn transformation_actions(sa: &SpeciesActions, mask: StateMask) -> Vec<Action> {
    sa.at(mask)
        .transform
        .iter()
        .map(|t| Action {
            prefix: Prefix::Delay { rate: t.rate },
            cont: match &t.target {
                Some(b) => Continuation::Call {
                    process: process_name(b.as_str(), 0),
                    args: Vec::new(),
                },
                None => Continuation::Stop,
            },
        })
        .collect()
}

/// Assembles the complete program for a valid model and its compile map.
pub fn generate(map: &CompileMap, model: &Model) -> Result<PiProgram, CompileError> {
    let naming = Naming::new(model);
    let mut globals = Vec::new();
    for (i, s) in model.sentences().iter().enumerate() {
        if let Body::Association(l, r) = s.body() {
            let arity = carried(model, l, r).len();
            globals.push(ChannelDecl::new(naming.globals[&(i + 1)].clone(), 1.0, arity));
        }
    }
    globals.push(ChannelDecl::new(NIL, 0.0, 0));

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut blocks = Vec::new();
    let mut plot = Vec::new();
    let mut runs = Vec::new();
    for sa in &map.species {
        let names = process_names(&sa.species, sa.table.len());
        let mut block = Vec::new();
        for st in &sa.states {
            let mut body = Vec::new();
            let mut locals: Vec<ChannelDecl> = Vec::new();
            for site in st.assoc.keys() {
                let (acts, decls) = association_actions(model, &naming, sa, st.state, site);
                body.extend(acts);
                for d in decls {
                    if !locals.iter().any(|l| l.name == d.name) {
                        locals.push(d);
                    }
                }
            }
            for site in st.dissoc.keys() {
                body.extend(dissociation_actions(&naming, sa, st.state, site));
            }
            body.extend(transformation_actions(sa, st.state));
            let name = names[st.state as usize].clone();
            if !seen.insert(name.clone()) {
                return Err(CompileError::NameClash(name));
            }
            block.push(ProcessDef {
                name,
                params: args_for(&naming, sa, st.state, None),
                locals,
                body,
            });
        }
        plot.extend(sa.states.iter().rev().map(|st| names[st.state as usize].clone()));
        runs.push(Run {
            count: model.population(&sa.species),
            process: names[0].clone(),
        });
        blocks.push(block);
    }
    Ok(PiProgram {
        sample_time: model.sample_time(),
        plot,
        globals,
        blocks,
        runs,
    })
}
