//! Grid-refinement studies against the exact cell averages of a problem.

use anyhow::{bail, Context};
use gradflow_core::diagnostics::{error_norms, observed_order};
use gradflow_core::{cell_average_init_1d, cell_average_init_2d, Grid2D};

use crate::catalog::{grid_1d, grid_2d, resolve, Problem, ProblemKind};
use crate::config::{GridConfig, RunConfig};
use crate::runner::{run_problem, Metadata, RunArtifacts};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Cells per direction.
    pub n: usize,
    pub tau: f64,
    pub l1: f64,
    pub l1_order: Option<f64>,
    pub linf: f64,
    pub linf_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// Metadata of the coarsest run.
    pub metadata: Metadata,
    pub rows: Vec<ConvergenceRow>,
}

fn level_grid(problem: &Problem, n: usize) -> GridConfig {
    if problem.is_2d() {
        GridConfig::square(n)
    } else {
        GridConfig::cells(n)
    }
}

fn exact_at_end(problem: &Problem, art: &RunArtifacts, grid: &GridConfig) -> anyhow::Result<Vec<f64>> {
    let t = art.final_state.time;
    Ok(match &problem.kind {
        ProblemKind::OneD { spec, exact: Some(e) } => {
            let g = grid_1d(spec, grid)?;
            cell_average_init_1d(|x| e(x, t), &g)?.into_values()
        }
        ProblemKind::TwoD { spec, exact: Some(e) } => {
            let g: Grid2D = grid_2d(spec, grid)?;
            cell_average_init_2d(|x, y| e(x, y, t), &g)?.into_values()
        }
        _ => bail!("problem {} has no exact solution", problem.id),
    })
}

/// Runs `base` at each `N` in `levels` and tabulates the errors at `t_end`.
/// Levels run on separate threads; rows come back in the order given.
pub fn convergence_study(base: &RunConfig, levels: &[usize]) -> anyhow::Result<ConvergenceStudy> {
    base.validate()?;
    if levels.is_empty() {
        bail!("no refinement levels given");
    }
    if let Some(n) = levels.iter().find(|&&n| n == 0) {
        bail!("refinement level {n} is not a positive cell count");
    }
    let problem = resolve(base)?;
    if !problem.has_exact() {
        bail!("problem {} has no exact solution", problem.id);
    }
    let results: Vec<anyhow::Result<(RunArtifacts, Vec<f64>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = levels
            .iter()
            .map(|&n| {
                let problem = &problem;
                s.spawn(move || {
                    let grid = level_grid(problem, n);
                    let config = RunConfig {
                        grid: Some(grid.clone()),
                        snapshots: Some(Vec::new()),
                        ..base.clone()
                    };
                    let art = run_problem(problem, &config).with_context(|| format!("level N = {n}"))?;
                    let exact = exact_at_end(problem, &art, &grid)?;
                    Ok((art, exact))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("refinement level panicked"))))
            .collect()
    });

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    let mut metadata = None;
    for (&n, result) in levels.iter().zip(results) {
        let (art, exact) = result?;
        let norms = error_norms(art.final_state.rho_curr.values(), &exact, &art.weights)?;
        let (l1_order, linf_order) = match rows.last() {
            Some(prev) => (Some(observed_order(prev.l1, norms.l1)), Some(observed_order(prev.linf, norms.linf))),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n,
            tau: art.metadata.tau,
            l1: norms.l1,
            l1_order,
            linf: norms.linf,
            linf_order,
        });
        metadata.get_or_insert(art.metadata);
    }
    Ok(ConvergenceStudy {
        metadata: metadata.expect("at least one level"),
        rows,
    })
}
