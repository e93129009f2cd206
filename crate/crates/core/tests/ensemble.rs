mod common;

use common::*;
use pimc_core::ensemble::{
    diff, generated_program, model_traces, program_traces, summarize, Engine, RunSpec, Schedule,
};
use pimc_core::interp::LoadedProgram;
use pimc_core::pi::Prefix;

fn spec(seed: u64) -> RunSpec {
    RunSpec {
        until: 2.0,
        points: 20,
        replicates: 200,
        seed,
        schedule: Schedule::Sequential,
    }
}

/// A generator that gets one rate wrong must be caught by the differential
/// test against the direct engine.
#[test]
fn corrupted_generator_is_detected() {
    let model = with_population(FCR_IGG, 40);
    let direct = summarize(&model_traces(&model, Engine::Direct, &spec(7), 1 << 16).unwrap()).unwrap();

    let mut program = generated_program(&model, 1 << 16).unwrap();
    for def in program.blocks.iter_mut().flatten() {
        for action in &mut def.body {
            if let Prefix::Output { weight: Some(w), .. } = &mut action.prefix {
                *w *= 3.0;
            }
        }
    }
    let loaded = LoadedProgram::load(&program).unwrap();
    let corrupted = summarize(&program_traces(&loaded, &spec(8)).unwrap()).unwrap();
    let report = diff(&corrupted, &direct, 3.0).unwrap();
    assert!(!report.passed(), "{report}");
    assert!(report.max_abs_z() > 6.0, "{report}");
}

#[test]
fn direct_engine_respects_the_state_cap() {
    let model = with_population(FCR_SRC, 5);
    for engine in [Engine::Generated, Engine::Direct] {
        assert!(model_traces(&model, engine, &spec(1), 4).is_err());
    }
}

#[test]
fn schedules_give_identical_traces() {
    let model = with_population(M2_TEXT, 20);
    for engine in [Engine::Generated, Engine::Direct] {
        let mut s = spec(3);
        s.replicates = 16;
        let seq = model_traces(&model, engine, &s, 1 << 16).unwrap();
        s.schedule = Schedule::Parallel;
        assert_eq!(seq, model_traces(&model, engine, &s, 1 << 16).unwrap());
    }
}
