use pimc_core::codegen::generate;
use pimc_core::compile_map::build_compile_map;
use pimc_core::interp::{LoadedProgram, PiSimulation};
use pimc_core::rules::RuleSimulation;
use pimc_core::{parse, Model, SpeciesName};

const M2: &str = "site a1 on A associates site b on B
site a2 on A associates site c on C
site a1 on A dissociates site b on B with rate 2.0 if site a2 on A is bound
site a1 on A dissociates site b on B with rate 4.0 if site a2 on A is unbound
";

fn model(text: &str, pops: &[(&str, u64)]) -> Model {
    let mut m = parse(text).unwrap();
    for (sp, n) in pops {
        m.set_population(SpeciesName::new(*sp).unwrap(), *n);
    }
    m
}

#[test]
fn association_counts_ordered_pairs() {
    let m = model("site a on A associates site b on B with rate 2.0", &[("A", 2), ("B", 3)]);
    let sim = RuleSimulation::new(&m, 0).unwrap();
    let p = sim.propensities();
    assert_eq!(p[0].matches, 6);
    assert_eq!(p[0].propensity, 12.0);
}

#[test]
fn empty_mixture_is_inert() {
    let m = model(M2, &[("A", 0), ("B", 0), ("C", 0)]);
    let mut sim = RuleSimulation::new(&m, 0).unwrap();
    assert!(sim.propensities().iter().all(|a| a.propensity == 0.0));
    assert!(sim.step().is_none());
}

#[test]
fn conditional_dissociation_follows_the_other_site() {
    let m = model(M2, &[("A", 1), ("B", 1), ("C", 0)]);
    let mut sim = RuleSimulation::new(&m, 5).unwrap();
    assert_eq!(sim.step().unwrap().1, 1);
    let p = sim.propensities();
    assert_eq!((p[2].matches, p[2].propensity), (0, 0.0));
    assert_eq!((p[3].matches, p[3].propensity), (1, 4.0));
    assert_eq!(sim.count("A1"), 1);
    sim.check_consistency().unwrap();
}

#[test]
fn transformation_creates_a_fresh_unbound_agent() {
    let m = model(
        "site a on A associates site x on X\nA becomes B with rate 5.0\nsite b on B associates site y on Y",
        &[("A", 1), ("X", 0), ("B", 0), ("Y", 0)],
    );
    let mut sim = RuleSimulation::new(&m, 1).unwrap();
    assert_eq!(sim.step().unwrap().1, 2);
    assert_eq!(sim.count("A0"), 0);
    assert_eq!(sim.count("B0"), 1);
    assert!(sim.step().is_none());
}

#[test]
fn columns_and_first_row_match_the_pi_program() {
    for text in [include_str!("data/fcr_igg.pim"), include_str!("data/fcr_src.pim"), M2] {
        let mut m = parse(text).unwrap();
        m.set_default_population(30);
        let program = LoadedProgram::load(&generate(&build_compile_map(&m).unwrap(), &m).unwrap()).unwrap();
        let pi = PiSimulation::new(&program, 0).simulate(1.0, 2);
        let rules = RuleSimulation::new(&m, 0).unwrap().simulate(1.0, 2);
        assert_eq!(pi.columns, rules.columns);
        assert_eq!(pi.rows[0], rules.rows[0]);
    }
}

#[test]
fn bookkeeping_stays_consistent() {
    for text in [include_str!("data/fcr_src.pim"), M2] {
        let mut m = parse(text).unwrap();
        m.set_default_population(20);
        let mut sim = RuleSimulation::new(&m, 11).unwrap();
        for _ in 0..500 {
            sim.check_consistency().unwrap();
            if sim.step().is_none() {
                break;
            }
        }
        sim.check_consistency().unwrap();
    }
}

#[test]
fn transformation_free_species_are_conserved() {
    let mut m = parse(include_str!("data/fcr_src.pim")).unwrap();
    m.set_default_population(40);
    let t = RuleSimulation::new(&m, 3).unwrap().simulate(3.0, 16);
    for prefix in ["FcR", "IgG", "Phosph", "Src"] {
        let cols: Vec<usize> = (0..t.columns.len())
            .filter(|&j| t.columns[j].strip_prefix(prefix).is_some_and(|r| r.chars().all(|c| c.is_ascii_digit())))
            .collect();
        for row in &t.rows {
            assert_eq!(cols.iter().map(|&j| row[j]).sum::<u64>(), 40, "{prefix}");
        }
    }
}

#[test]
fn invalid_models_are_refused() {
    let m = parse("site a on A associates site b on A").unwrap();
    assert!(RuleSimulation::new(&m, 0).is_err());
}
