use pimc_core::codegen::generate;
use pimc_core::compile_map::build_compile_map;
use pimc_core::pi::{alpha_normalize, lint, parse_program, render, PiProgram};
use pimc_core::parse;

const MODEL_A: &str = include_str!("data/fcr_igg.pim");
const MODEL_B: &str = include_str!("data/fcr_src.pim");
const LISTING_A: &str = include_str!("data/fcr_igg.spim");
const LISTING_B: &str = include_str!("data/fcr_src.spim");

fn compile(text: &str) -> PiProgram {
    let m = parse(text).unwrap();
    generate(&build_compile_map(&m).unwrap(), &m).unwrap()
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

#[test]
fn fcr_igg_listing_matches_token_for_token() {
    let ours = render(&compile(MODEL_A));
    assert_eq!(words(&ours), words(LISTING_A));
}

#[test]
fn fcr_igg_listing_matches_up_to_renaming() {
    let reference = parse_program(LISTING_A).unwrap();
    assert_eq!(alpha_normalize(&compile(MODEL_A)), alpha_normalize(&reference));
}

#[test]
fn src_listing_matches_up_to_renaming() {
    let mut ours = compile(MODEL_B);
    // The reference listing leaves its run statements commented out.
    ours.runs.clear();
    let reference = parse_program(LISTING_B).unwrap();
    assert!(reference.runs.is_empty());
    assert_eq!(alpha_normalize(&ours), alpha_normalize(&reference));
}

#[test]
fn src_listing_shape() {
    let p = compile(MODEL_B);
    assert_eq!(p.defs().filter(|d| d.name.starts_with("FcR")).count(), 16);
    let text = render(&p);
    assert!(text.contains("new s1@0.50:chan"));
    assert!(text.contains("!s1; FcR1(f)\n    or ?s1; FcR1(f)"));
    assert!(text.contains("( ?ssr4(sr1); Src1(sr1) )"));
    let names: Vec<&str> = p.globals.iter().map(|g| g.name.as_str()).collect();
    assert_eq!(names, ["fi1", "phosphy2", "phosphz3", "ssr4", "nil"]);
}

#[test]
fn reference_listings_are_closed() {
    for listing in [LISTING_A, LISTING_B] {
        assert_eq!(lint(&parse_program(listing).unwrap()), Vec::<String>::new());
    }
    for model in [MODEL_A, MODEL_B] {
        assert!(lint(&compile(model)).is_empty());
    }
}

#[test]
fn rendered_text_reads_back() {
    for model in [MODEL_A, MODEL_B] {
        let p = compile(model);
        assert_eq!(parse_program(&render(&p)).unwrap(), p);
    }
}
