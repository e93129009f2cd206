//! Models shared by the integration tests.
#![allow(dead_code)]

use pimc_core::{parse, Model, Sentence, SiteRef, SpeciesName};

pub const FCR_IGG: &str = include_str!("../data/fcr_igg.pim");
pub const FCR_SRC: &str = include_str!("../data/fcr_src.pim");

pub const M2_TEXT: &str = "site a1 on A associates site b on B
site a2 on A associates site c on C
site a1 on A dissociates site b on B with rate 2.0 if site a2 on A is bound
site a1 on A dissociates site b on B with rate 4.0 if site a2 on A is unbound
";

pub const DECAY: &str = "A decays with rate 0.5\n";

pub const CHAIN: &str = "site a on A associates site x on X with rate 0.5
site a on A dissociates site x on X
A becomes B with rate 0.4
B becomes C with rate 0.3
site c on C associates site x on X with rate 0.2
C decays with rate 0.1
";

/// Site `a` chooses between two partners; each bond carries only its own
/// dissociation channel and `nil` for the other.
pub const MULTI_PARTNER: &str = "site a on A associates site b on B
site a on A associates site c on C with rate 2.0
site a on A dissociates site b on B with rate 2.0
site a on A dissociates site c on C with rate 0.5
site y on A gets phosphorylated if site a on A is bound
site y on A gets dephosphorylated with rate 0.5
";

pub fn r(species: &str, site: &str) -> SiteRef {
    SiteRef::parse(species, site).unwrap()
}

pub fn sp(name: &str) -> SpeciesName {
    SpeciesName::new(name).unwrap()
}

/// The model with one violation of every condition.
pub fn m1() -> Model {
    Model::new(vec![
        Sentence::association(
            r("A", "a"),
            r("B", "b"),
            [r("B", "f")],
            [r("C", "c"), r("A", "a"), r("B", "f")],
            1.0,
        )
        .unwrap(),
        Sentence::dissociation(r("A", "a"), r("B", "b"), [r("B", "b")], [], 1.0).unwrap(),
        Sentence::transformation(sp("A"), Some(sp("B")), [], [], 1.0).unwrap(),
        Sentence::association(r("D", "d"), r("E", "e"), [], [r("D", "d"), r("E", "e")], 2.0).unwrap(),
        Sentence::association(r("D", "d"), r("E", "e"), [], [r("D", "d"), r("E", "e")], 4.0).unwrap(),
    ])
}

/// The valid four-sentence model, written with explicit conditions.
pub fn m2() -> Model {
    Model::new(vec![
        Sentence::association(r("A", "a1"), r("B", "b"), [], [r("A", "a1"), r("B", "b")], 1.0).unwrap(),
        Sentence::association(r("A", "a2"), r("C", "c"), [], [r("A", "a2"), r("C", "c")], 1.0).unwrap(),
        Sentence::dissociation(
            r("A", "a1"),
            r("B", "b"),
            [r("A", "a1"), r("A", "a2"), r("B", "b")],
            [],
            2.0,
        )
        .unwrap(),
        Sentence::dissociation(r("A", "a1"), r("B", "b"), [r("A", "a1"), r("B", "b")], [r("A", "a2")], 4.0)
            .unwrap(),
    ])
}

/// The differential corpus: name, text, per-species population, horizon.
pub fn corpus() -> Vec<(&'static str, &'static str, u64, f64)> {
    vec![
        ("fcr-igg", FCR_IGG, 40, 2.0),
        ("fcr-src", FCR_SRC, 40, 3.0),
        ("m2", M2_TEXT, 40, 3.0),
        ("decay", DECAY, 100, 4.0),
        ("chain", CHAIN, 40, 8.0),
        ("multi-partner", MULTI_PARTNER, 40, 3.0),
    ]
}

pub fn with_population(text: &str, n: u64) -> Model {
    let mut m = parse(text).unwrap();
    m.set_default_population(n);
    m
}
