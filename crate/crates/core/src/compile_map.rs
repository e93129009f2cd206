//! Per-species, per-state action tables.
//!
//! For every species `A` and every subset `S` of its sites, the table lists
//! which sites of `A` can associate (and with whom), which bound sites can
//! dissociate, and, for the fully unbound state, which transformations apply.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::desugar::format_float;
use crate::error::CompileError;
use crate::model::{Body, Model, SiteName, SiteTable, SpeciesName, StateMask, StateSet, MAX_SITES};
use crate::validate::validate;

/// Default bound on the total number of states over all species.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;

/// The other side of a binding sentence, seen from one species.
#[derive(Clone, PartialEq, Debug)]
pub struct Partner {
    pub species: SpeciesName,
    pub site: SiteName,
    /// States the partner must be in.
    pub states: StateSet,
    pub rate: f64,
    /// 1-based index of the originating sentence.
    pub label: usize,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Transform {
    pub target: Option<SpeciesName>,
    pub rate: f64,
    pub label: usize,
}

#[derive(Clone, PartialEq, Debug)]
pub struct StateActions {
    pub state: StateMask,
    /// Only sites with at least one partner appear.
    pub assoc: BTreeMap<SiteName, Vec<Partner>>,
    pub dissoc: BTreeMap<SiteName, Vec<Partner>>,
    pub transform: Vec<Transform>,
}

impl StateActions {
    pub fn is_empty(&self) -> bool {
        self.assoc.is_empty() && self.dissoc.is_empty() && self.transform.is_empty()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct SpeciesActions {
    pub species: SpeciesName,
    pub table: SiteTable,
    /// One entry per state, in graded order.
    pub states: Vec<StateActions>,
}

impl SpeciesActions {
    pub fn at(&self, state: StateMask) -> &StateActions {
        self.states
            .iter()
            .find(|s| s.state == state)
            .expect("every state is present")
    }

    pub fn at_sites(&self, sites: &[&str]) -> &StateActions {
        let names: Vec<SiteName> = sites
            .iter()
            .map(|s| SiteName::new(*s).expect("valid site name"))
            .collect();
        self.at(self.table.mask_of(&names))
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct CompileMap {
    pub species: Vec<SpeciesActions>,
}

impl CompileMap {
    pub fn get(&self, species: &str) -> Option<&SpeciesActions> {
        self.species.iter().find(|s| s.species.as_str() == species)
    }

    pub fn total_states(&self) -> usize {
        self.species.iter().map(|s| s.states.len()).sum()
    }
}

/// Checks the per-species site limit and the total state cap.
pub fn check_state_cap(model: &Model, cap: usize) -> Result<(), CompileError> {
    let mut total = 0usize;
    for sp in model.species() {
        let n = model.sites(&sp).len();
        if n > MAX_SITES {
            return Err(CompileError::TooManySites {
                species: sp.to_string(),
                sites: n,
                max: MAX_SITES,
            });
        }
        total += 1usize << n;
        if total > cap {
            return Err(CompileError::StateCap {
                species: sp.to_string(),
                total,
                cap,
            });
        }
    }
    Ok(())
}

/// Builds the action table of a valid model with the default state cap.
pub fn build_compile_map(model: &Model) -> Result<CompileMap, CompileError> {
    build_compile_map_capped(model, DEFAULT_STATE_CAP)
}

pub fn build_compile_map_capped(model: &Model, cap: usize) -> Result<CompileMap, CompileError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(CompileError::Invalid(violations));
    }
    check_state_cap(model, cap)?;

    let sentence_states: Vec<_> = (0..model.sentences().len())
        .map(|i| model.sentence_states(i))
        .collect();

    let species = model
        .species()
        .into_iter()
        .map(|sp| {
            let table = model.site_table(&sp);
            let states = table
                .states_in_order()
                .into_iter()
                .map(|state| {
                    let mut actions = StateActions {
                        state,
                        assoc: BTreeMap::new(),
                        dissoc: BTreeMap::new(),
                        transform: Vec::new(),
                    };
                    for (i, s) in model.sentences().iter().enumerate() {
                        let (left_states, right_states) = &sentence_states[i];
                        let label = i + 1;
                        match s.body() {
                            Body::Association(l, r) | Body::Dissociation(l, r) => {
                                let right_states = right_states.as_ref().expect("binding body");
                                let sides = [(l, r, left_states, right_states), (r, l, right_states, left_states)];
                                for (me, other, my_states, other_states) in sides {
                                    if me.species != sp || !my_states.contains(state) {
                                        continue;
                                    }
                                    let partner = Partner {
                                        species: other.species.clone(),
                                        site: other.site.clone(),
                                        states: other_states.clone(),
                                        rate: s.rate(),
                                        label,
                                    };
                                    let slot = match s.body() {
                                        Body::Association(..) => &mut actions.assoc,
                                        _ => &mut actions.dissoc,
                                    };
                                    slot.entry(me.site.clone()).or_default().push(partner);
                                }
                            }
                            Body::Transformation { source, target } => {
                                if source == &sp && state == 0 {
                                    actions.transform.push(Transform {
                                        target: target.clone(),
                                        rate: s.rate(),
                                        label,
                                    });
                                }
                            }
                        }
                    }
                    actions
                })
                .collect();
            SpeciesActions {
                species: sp,
                table,
                states,
            }
        })
        .collect();
    Ok(CompileMap { species })
}

fn fmt_state(table: &SiteTable, state: StateMask) -> String {
    let names: Vec<String> = table.names(state).iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", names.join(","))
}

fn fmt_partners(map: &BTreeMap<SiteName, Vec<Partner>>) -> String {
    let entries: Vec<String> = map
        .iter()
        .map(|(site, partners)| {
            let ps: Vec<String> = partners
                .iter()
                .map(|p| format!("({},{},{},{})", p.species, p.site, p.states, format_float(p.rate)))
                .collect();
            format!("({}, {{{}}})", site, ps.join(", "))
        })
        .collect();
    format!("{{{}}}", entries.join(", "))
}

impl fmt::Display for CompileMap {
    /// `<A, { <S, assoc, dissoc, transform>, ... }>` per species.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for sp in &self.species {
            let _ = writeln!(out, "<{}, {{", sp.species);
            for (i, st) in sp.states.iter().enumerate() {
                let transforms: Vec<String> = st
                    .transform
                    .iter()
                    .map(|t| {
                        format!(
                            "({},{})",
                            t.target.as_ref().map_or("()", |t| t.as_str()),
                            format_float(t.rate)
                        )
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "  <{}, {}, {}, {{{}}}>{}",
                    fmt_state(&sp.table, st.state),
                    fmt_partners(&st.assoc),
                    fmt_partners(&st.dissoc),
                    transforms.join(", "),
                    if i + 1 < sp.states.len() { "," } else { "" }
                );
            }
            let _ = writeln!(out, "}}>");
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn transformation_only_model() {
        let cm = build_compile_map(&parse("A becomes B").unwrap()).unwrap();
        let a = cm.get("A").unwrap();
        assert_eq!(a.states.len(), 1);
        assert_eq!(
            a.states[0].transform,
            vec![Transform {
                target: Some(SpeciesName::new("B").unwrap()),
                rate: 1.0,
                label: 1
            }]
        );
        assert!(a.states[0].assoc.is_empty() && a.states[0].dissoc.is_empty());
        assert!(cm.get("B").unwrap().states[0].is_empty());
    }

    #[test]
    fn invalid_model_is_refused() {
        let m = parse("site a on A associates site b on A").unwrap();
        assert!(matches!(build_compile_map(&m), Err(CompileError::Invalid(v)) if v.len() == 1));
    }

    #[test]
    fn state_cap_names_the_species() {
        let m = parse(
            "site a on A associates site x on B\nsite b on A associates site y on B\nsite c on A associates site z on B",
        )
        .unwrap();
        // A: 8 states, B: 8 states.
        assert!(build_compile_map_capped(&m, 16).is_ok());
        match build_compile_map_capped(&m, 15) {
            Err(CompileError::StateCap { species, total, .. }) => {
                assert_eq!(species, "B");
                assert_eq!(total, 16);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transforms_only_in_empty_state() {
        let m = parse("site a on A associates site b on B\nA decays with rate 0.5").unwrap();
        let cm = build_compile_map(&m).unwrap();
        let a = cm.get("A").unwrap();
        assert_eq!(a.at(0).transform.len(), 1);
        assert!(a.at(1).transform.is_empty());
        assert_eq!(a.at(0).transform[0].target, None);
    }
}
