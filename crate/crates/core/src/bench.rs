//! Sweeps over mesh levels and regularization weights, with CSV output.

use std::io::{Read, Write};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::problems::{alpha_sweep_spec, ProblemSpec};
use crate::scalar::Scalar;
use crate::solvers::{solve, Algorithm, SolverConfig, SolverReport};

pub const THREADS_ENV: &str = "GRADSTATE_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub h_label: String,
    pub dofs: usize,
    pub algorithm: String,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_seconds: f64,
    /// Empty for a converged run, `max_iter` or `error: ...` otherwise.
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub iterations: usize,
    pub residual: f64,
    pub flag: String,
}

/// Worker count from `GRADSTATE_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on at most `threads` scoped workers, keeping input order.
pub fn parallel_map<I: Sync, O: Send>(items: &[I], threads: usize, f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

fn flag_of<T>(outcome: &Result<SolverReport<T>>) -> String {
    match outcome {
        Ok(r) if r.converged => String::new(),
        Ok(_) => "max_iter".into(),
        Err(e) => format!("error: {e}"),
    }
}

pub fn build_system<T: Scalar>(problem: &ProblemSpec<T>, level: usize) -> Result<FemSystem<T>> {
    FemSystem::laplacian(&problem.mesh(level)?)
}

/// One row per `(level, algorithm)`, level-major, algorithms in the given order.
/// A failed run is recorded with `iterations = max_iter` and the error in `flag`.
pub fn run_bench<T: Scalar>(
    problem: &ProblemSpec<T>,
    levels: &[usize],
    algorithms: &[Algorithm],
    config: &SolverConfig,
    threads: usize,
) -> Result<Vec<BenchRow>> {
    if levels.is_empty() || algorithms.is_empty() {
        return Err(Error::InvalidArgument("empty level or algorithm list".into()));
    }
    config.validate()?;
    let systems = parallel_map(levels, threads, |&l| build_system(problem, l));
    let systems: Vec<FemSystem<T>> = systems.into_iter().collect::<Result<_>>()?;
    let jobs: Vec<(usize, Algorithm)> =
        (0..levels.len()).flat_map(|i| algorithms.iter().map(move |&a| (i, a))).collect();
    Ok(parallel_map(&jobs, threads, |&(i, algo)| {
        let sys = &systems[i];
        let outcome = solve(algo, problem, sys, config);
        let flag = flag_of(&outcome);
        let (iterations, residual, wall) = match &outcome {
            Ok(r) => (r.iterations, r.residual, r.wall_time_seconds),
            Err(_) => (config.max_iter, f64::NAN, 0.0),
        };
        BenchRow {
            h_label: problem.h_label(levels[i]),
            dofs: sys.num_dofs(),
            algorithm: algo.name().into(),
            iterations,
            residual,
            wall_time_seconds: wall,
            flag,
        }
    }))
}

/// The dual method on one level for each α of the sweep configuration.
pub fn run_alpha_sweep<T: Scalar>(
    problem: &ProblemSpec<T>,
    level: usize,
    alphas: &[T],
    config: &SolverConfig,
    threads: usize,
) -> Result<Vec<AlphaRow>> {
    config.validate()?;
    let specs = alpha_sweep_spec(problem, alphas)?;
    let sys = build_system(problem, level)?;
    let mut config = config.clone();
    config.alpha = None;
    Ok(parallel_map(&specs, threads, |spec| {
        let outcome = solve(Algorithm::Dabcd, spec, &sys, &config);
        let flag = flag_of(&outcome);
        let (iterations, residual) = match &outcome {
            Ok(r) => (r.iterations, r.residual),
            Err(_) => (config.max_iter, f64::NAN),
        };
        AlphaRow { alpha: spec.alpha.as_f64(), iterations, residual, flag }
    }))
}

/// Rows that did not converge or exceed `cap` iterations.
pub fn alpha_sweep_violations(rows: &[AlphaRow], cap: Option<usize>) -> Vec<&AlphaRow> {
    rows.iter().filter(|r| !r.flag.is_empty() || cap.is_some_and(|c| r.iterations > c)).collect()
}

pub fn write_csv<W: Write, R: Serialize>(w: W, rows: &[R]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<Rd: Read, R: for<'de> Deserialize<'de>>(r: Rd) -> Result<Vec<R>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..17).collect();
        for threads in [1, 2, 5, 40] {
            assert_eq!(parallel_map(&items, threads, |&x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(parallel_map(&[] as &[usize], 4, |&x| x).is_empty());
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![
            BenchRow {
                h_label: "1/2^3".into(),
                dofs: 169,
                algorithm: "dabcd".into(),
                iterations: 12,
                residual: 9.5e-5,
                wall_time_seconds: 0.25,
                flag: String::new(),
            },
            BenchRow {
                h_label: "1/2^4".into(),
                dofs: 721,
                algorithm: "admm".into(),
                iterations: 100,
                residual: 3e-3,
                wall_time_seconds: 1.5,
                flag: "max_iter".into(),
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("h_label,dofs,algorithm,iterations,residual,wall_time_seconds,flag\n"));
        let back: Vec<BenchRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn violations() {
        let row = |it, flag: &str| AlphaRow { alpha: 1e-2, iterations: it, residual: 1e-5, flag: flag.into() };
        let rows = [row(10, ""), row(50, ""), row(100, "max_iter")];
        assert_eq!(alpha_sweep_violations(&rows, Some(40)).len(), 2);
        assert_eq!(alpha_sweep_violations(&rows, None).len(), 1);
    }
}
