use std::collections::BTreeSet;

use pimc_core::codegen::generate;
use pimc_core::compile_map::build_compile_map;
use pimc_core::model::{graded_index, graded_order, states_from, SiteTable};
use pimc_core::pi::{parse_program, render};
use pimc_core::{parse, validate, SiteName, SiteRef, SpeciesName};
use proptest::prelude::*;

const SPECIES: [&str; 3] = ["A", "B", "C"];
const SITES: [&str; 3] = ["p", "q", "r"];
const RATES: [&str; 3] = ["0.5", "1.0", "2.0"];

fn condition() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        (0..3usize, any::<bool>())
            .prop_map(|(s, b)| format!(" if site {} on {{L}} is {}", SITES[s], if b { "bound" } else { "unbound" })),
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    (0..6usize, 0..3usize, 1..3usize, 0..3usize, 0..3usize, 0..3usize, condition()).prop_map(
        |(kind, l, shift, ls, rs, rate, cond)| {
            let left = SPECIES[l];
            let right = SPECIES[(l + shift) % 3];
            let (sl, sr, r) = (SITES[ls], SITES[rs], RATES[rate]);
            let cond = cond.replace("{L}", left);
            match kind {
                0 => format!("site {sl} on {left} associates site {sr} on {right} with rate {r}{cond}"),
                1 => format!("site {sl} on {left} dissociates site {sr} on {right} with rate {r}{cond}"),
                2 => format!("site {sl} on {left} gets phosphorylated with rate {r}{cond}"),
                3 => format!("site {sl} on {left} gets dephosphorylated with rate {r}{cond}"),
                4 => format!("{left} becomes {right} with rate {r}"),
                _ => format!("{left} decays with rate {r}"),
            }
        },
    )
}

fn model_text() -> impl Strategy<Value = String> {
    prop::collection::vec(sentence(), 1..6).prop_map(|s| s.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_programs_render_and_read_back(text in model_text()) {
        let m = parse(&text).unwrap();
        prop_assume!(validate(&m).is_empty());
        let p = generate(&build_compile_map(&m).unwrap(), &m).unwrap();
        prop_assert_eq!(parse_program(&render(&p)).unwrap(), p);
    }

    #[test]
    fn compile_map_partners_are_mutual(text in model_text()) {
        let m = parse(&text).unwrap();
        prop_assume!(validate(&m).is_empty());
        let map = build_compile_map(&m).unwrap();
        for sa in &map.species {
            for st in &sa.states {
                for (tables, mirror) in [(&st.assoc, true), (&st.dissoc, false)] {
                    for (site, partners) in tables {
                        for p in partners {
                            let other = map.get(p.species.as_str()).unwrap();
                            for &t in p.states.masks() {
                                let back = other.at(t);
                                let back = if mirror { &back.assoc } else { &back.dissoc };
                                let found = back.get(&p.site).into_iter().flatten().any(|q| {
                                    q.species == sa.species
                                        && &q.site == site
                                        && q.label == p.label
                                        && q.rate == p.rate
                                        && q.states.contains(st.state)
                                });
                                prop_assert!(found, "{} {} -> {} {}", sa.species, site, p.species, p.site);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn adding_a_condition_never_adds_states(
        n in 1..5usize,
        pos in prop::collection::btree_set(0..5usize, 0..3),
        neg in prop::collection::btree_set(0..5usize, 0..3),
        extra in 0..5usize,
        bound in any::<bool>(),
    ) {
        let sp = SpeciesName::new("S").unwrap();
        let names = ["s0", "s1", "s2", "s3", "s4"];
        let table = SiteTable::new(sp.clone(), names[..n].iter().map(|s| SiteName::new(*s).unwrap()));
        let refs = |ix: &BTreeSet<usize>| -> BTreeSet<SiteRef> {
            ix.iter().filter(|&&i| i < n).map(|&i| SiteRef::parse("S", names[i]).unwrap()).collect()
        };
        let (p, q) = (refs(&pos), refs(&neg));
        let before = states_from(&table, &p, &q);
        let (mut p2, mut q2) = (p.clone(), q.clone());
        let r = SiteRef::parse("S", names[extra % n]).unwrap();
        if bound { p2.insert(r); } else { q2.insert(r); }
        let after = states_from(&table, &p2, &q2);
        for mask in after.masks() {
            prop_assert!(before.contains(*mask));
        }
    }

    #[test]
    fn graded_order_is_a_graded_permutation(n in 0..10usize) {
        let order = graded_order(n);
        prop_assert_eq!(order.len(), 1 << n);
        let distinct: BTreeSet<_> = order.iter().copied().collect();
        prop_assert_eq!(distinct.len(), order.len());
        for w in order.windows(2) {
            prop_assert!(w[0].count_ones() <= w[1].count_ones());
        }
        let index = graded_index(n);
        for (k, &mask) in order.iter().enumerate() {
            prop_assert_eq!(index[mask as usize], k);
        }
    }
}
