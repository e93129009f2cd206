//! Replicate ensembles, their mean trajectories, and the column-wise
//! comparison of two ensembles.
//!
//! Replicates run in parallel with rayon when the `parallel` feature is on
//! (the default) and sequentially otherwise. Either way every replicate gets
//! a seed derived from the ensemble seed and results are kept in replicate
//! order, so the output does not depend on scheduling.

use std::fmt;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codegen::{generate, process_name};
use crate::compile_map::build_compile_map_capped;
use crate::error::SimError;
use crate::interp::{LoadedProgram, PiSimulation};
use crate::model::{Body, Model};
use crate::pi::PiProgram;
use crate::rules::RuleSimulation;
use crate::trace::{format_time, TraceTable};

/// Which simulator produces the trajectories.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Engine {
    /// The generated pi program, run by the pi interpreter.
    Generated,
    /// The sentences themselves, run by the rule simulator.
    Direct,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Schedule {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Schedule {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Schedule::Parallel
        } else {
            Schedule::Sequential
        }
    }
}

/// Per-replicate seeds drawn from one ensemble seed.
pub fn replicate_seeds(seed: u64, replicates: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..replicates).map(|_| rng.gen()).collect()
}

/// Calls `run` once per replicate seed and returns the results in order.
pub fn run_replicates<T, F>(seed: u64, replicates: usize, schedule: Schedule, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let seeds = replicate_seeds(seed, replicates);
    match schedule {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => {
            use rayon::prelude::*;
            seeds.into_par_iter().map(&run).collect()
        }
        _ => seeds.into_iter().map(run).collect(),
    }
}

/// Mean and standard error of the mean per column and sample time.
#[derive(Clone, PartialEq, Debug)]
pub struct Summary {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub replicates: usize,
}

/// Column-wise mean and standard error over traces sharing columns and times.
pub fn summarize(traces: &[TraceTable]) -> Result<Summary, SimError> {
    let first = traces
        .first()
        .ok_or_else(|| SimError::Config("no replicates".into()))?;
    for t in traces {
        if t.columns != first.columns {
            return Err(SimError::Columns(format!("{:?} vs {:?}", first.columns, t.columns)));
        }
        if t.times != first.times {
            return Err(SimError::Times);
        }
    }
    let n = traces.len() as f64;
    let (rows, cols) = (first.times.len(), first.columns.len());
    let mut mean = vec![vec![0.0; cols]; rows];
    let mut se = vec![vec![0.0; cols]; rows];
    for k in 0..rows {
        for j in 0..cols {
            let m = traces.iter().map(|t| t.rows[k][j] as f64).sum::<f64>() / n;
            mean[k][j] = m;
            if traces.len() > 1 {
                let var = traces.iter().map(|t| (t.rows[k][j] as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
                se[k][j] = (var / n).sqrt();
            }
        }
    }
    Ok(Summary {
        columns: first.columns.clone(),
        times: first.times.clone(),
        mean,
        se,
        replicates: traces.len(),
    })
}

impl Summary {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn write(&self, out: impl io::Write, values: &[Vec<f64>]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("time").chain(self.columns.iter().map(String::as_str)))?;
        for (t, row) in self.times.iter().zip(values) {
            let mut record = vec![format_time(*t)];
            record.extend(row.iter().map(|x| format!("{x:?}")));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_mean_csv(&self, out: impl io::Write) -> csv::Result<()> {
        self.write(out, &self.mean)
    }

    pub fn write_se_csv(&self, out: impl io::Write) -> csv::Result<()> {
        self.write(out, &self.se)
    }
}

/// Loads the program generated for `model`, honouring a state cap.
pub fn generated_program(model: &Model, state_cap: usize) -> Result<PiProgram, SimError> {
    let map = build_compile_map_capped(model, state_cap)?;
    Ok(generate(&map, model)?)
}

/// Run parameters shared by both engines.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RunSpec {
    pub until: f64,
    pub points: usize,
    pub replicates: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

impl RunSpec {
    fn check(&self) -> Result<(), SimError> {
        if !(self.until > 0.0 && self.until.is_finite()) {
            return Err(SimError::Config(format!("time must be positive, got {}", self.until)));
        }
        if self.points < 2 {
            return Err(SimError::Config("need at least two sample points".into()));
        }
        if self.replicates == 0 {
            return Err(SimError::Config("need at least one replicate".into()));
        }
        Ok(())
    }
}

/// Replicate traces of a loaded pi program.
pub fn program_traces(program: &LoadedProgram, spec: &RunSpec) -> Result<Vec<TraceTable>, SimError> {
    spec.check()?;
    Ok(run_replicates(spec.seed, spec.replicates, spec.schedule, |s| {
        PiSimulation::new(program, s).simulate(spec.until, spec.points)
    }))
}

/// Replicate traces of `model` under the chosen engine.
pub fn model_traces(model: &Model, engine: Engine, spec: &RunSpec, state_cap: usize) -> Result<Vec<TraceTable>, SimError> {
    spec.check()?;
    match engine {
        Engine::Generated => {
            let program = LoadedProgram::load(&generated_program(model, state_cap)?)?;
            program_traces(&program, spec)
        }
        Engine::Direct => {
            // Surface validation errors once rather than per replicate.
            crate::compile_map::check_state_cap(model, state_cap)?;
            RuleSimulation::new(model, 0)?;
            let traces = run_replicates(spec.seed, spec.replicates, spec.schedule, |s| {
                RuleSimulation::new(model, s)
                    .expect("validated above")
                    .simulate(spec.until, spec.points)
            });
            Ok(traces)
        }
    }
}

/// Column-wise z-scores between two ensembles.
#[derive(Clone, PartialEq, Debug)]
pub struct DiffReport {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// `z[k][j]` compares column `j` at `times[k]`.
    pub z: Vec<Vec<f64>>,
    pub threshold: f64,
    /// Informational lines, e.g. closed-form checks.
    pub notes: Vec<String>,
}

/// `(m1 - m2) / sqrt(se1^2 + se2^2)`; zero when both ensembles agree exactly.
pub fn z_score(m1: f64, se1: f64, m2: f64, se2: f64) -> f64 {
    let pooled = (se1 * se1 + se2 * se2).sqrt();
    if pooled == 0.0 {
        if m1 == m2 {
            0.0
        } else {
            f64::INFINITY.copysign(m1 - m2)
        }
    } else {
        (m1 - m2) / pooled
    }
}

/// Compares two summaries with identical columns and sample times.
pub fn diff(a: &Summary, b: &Summary, threshold: f64) -> Result<DiffReport, SimError> {
    if a.columns != b.columns {
        return Err(SimError::Columns(format!("{:?} vs {:?}", a.columns, b.columns)));
    }
    if a.times != b.times {
        return Err(SimError::Times);
    }
    let z = (0..a.times.len())
        .map(|k| {
            (0..a.columns.len())
                .map(|j| z_score(a.mean[k][j], a.se[k][j], b.mean[k][j], b.se[k][j]))
                .collect()
        })
        .collect();
    Ok(DiffReport {
        columns: a.columns.clone(),
        times: a.times.clone(),
        z,
        threshold,
        notes: Vec::new(),
    })
}

impl DiffReport {
    /// Largest |z| with its column and time.
    pub fn worst(&self) -> Option<(f64, &str, f64)> {
        let mut best: Option<(f64, &str, f64)> = None;
        for (k, row) in self.z.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if best.is_none_or(|(b, _, _)| z.abs() > b) {
                    best = Some((z.abs(), &self.columns[j], self.times[k]));
                }
            }
        }
        best
    }

    pub fn max_abs_z(&self) -> f64 {
        self.worst().map_or(0.0, |w| w.0)
    }

    pub fn passed(&self) -> bool {
        self.max_abs_z() <= self.threshold
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.columns.iter().enumerate() {
            let m = self.z.iter().map(|row| row[j].abs()).fold(0.0, f64::max);
            writeln!(f, "{c}: max |z| = {m:.3}")?;
        }
        for note in &self.notes {
            writeln!(f, "{note}")?;
        }
        match self.worst() {
            Some((z, c, t)) => writeln!(
                f,
                "{}: max |z| = {z:.3} ({c} at t = {}), threshold {}",
                if self.passed() { "PASS" } else { "FAIL" },
                format_time(t),
                self.threshold
            ),
            None => writeln!(f, "PASS: nothing to compare"),
        }
    }
}

/// A species whose only dynamics is first-order loss: it has no sites, is
/// the source of at least one transformation and the target of none.
#[derive(Clone, PartialEq, Debug)]
pub struct PureOutflow {
    pub column: String,
    pub initial: f64,
    /// Sum of its transformation rates.
    pub rate: f64,
}

impl PureOutflow {
    /// Expected count at time `t`.
    pub fn mean(&self, t: f64) -> f64 {
        self.initial * (-self.rate * t).exp()
    }

    /// Binomial standard error of an ensemble mean over `n` replicates.
    pub fn se(&self, t: f64, n: usize) -> f64 {
        let p = (-self.rate * t).exp();
        (self.initial * p * (1.0 - p) / n as f64).sqrt()
    }
}

pub fn pure_outflow_species(model: &Model) -> Vec<PureOutflow> {
    model
        .species()
        .into_iter()
        .filter(|sp| model.sites(sp).is_empty())
        .filter_map(|sp| {
            let mut rate = 0.0;
            for s in model.sentences() {
                if let Body::Transformation { source, target } = s.body() {
                    if target.as_ref() == Some(&sp) {
                        return None;
                    }
                    if *source == sp {
                        rate += s.rate();
                    }
                }
            }
            (rate > 0.0).then(|| PureOutflow {
                column: process_name(sp.as_str(), 0),
                initial: model.population(&sp) as f64,
                rate,
            })
        })
        .collect()
}

/// Adds a closed-form comparison line per pure-outflow species of `model`.
pub fn annotate_closed_form(report: &mut DiffReport, model: &Model, summary: &Summary) {
    for p in pure_outflow_species(model) {
        let Some(j) = summary.column_index(&p.column) else { continue };
        let worst = summary
            .times
            .iter()
            .enumerate()
            .map(|(k, &t)| z_score(summary.mean[k][j], summary.se[k][j], p.mean(t), 0.0).abs())
            .fold(0.0, f64::max);
        report.notes.push(format!(
            "{}: closed form {}*exp(-{}t), max |z| = {worst:.3}",
            p.column, p.initial, p.rate
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let a = replicate_seeds(7, 4);
        assert_eq!(a, replicate_seeds(7, 4));
        assert_ne!(a[0], a[1]);
        assert_eq!(&replicate_seeds(7, 2)[..], &a[..2]);
    }

    #[test]
    fn schedules_agree() {
        let f = |s: u64| s.wrapping_mul(3);
        assert_eq!(
            run_replicates(1, 50, Schedule::Sequential, f),
            run_replicates(1, 50, Schedule::Parallel, f)
        );
    }

    #[test]
    fn mean_and_standard_error() {
        let mk = |v: u64| TraceTable {
            columns: vec!["A0".into()],
            times: vec![0.0],
            rows: vec![vec![v]],
        };
        let s = summarize(&[mk(1), mk(3)]).unwrap();
        assert_eq!(s.mean[0][0], 2.0);
        // Sample sd sqrt(2), divided by sqrt(2).
        assert!((s.se[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_scores() {
        assert_eq!(z_score(5.0, 0.0, 5.0, 0.0), 0.0);
        assert_eq!(z_score(5.0, 3.0, 1.0, 4.0), 0.8);
        assert!(z_score(1.0, 0.0, 0.0, 0.0).is_infinite());
    }
}
