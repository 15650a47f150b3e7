//! Time loop shared by `run` and the convergence studies.

use anyhow::{bail, Context};
use gradflow_core::diagnostics::{
    discrete_energy_with_1d, discrete_energy_with_2d, dissipation_1d, dissipation_2d, EnergyReport,
};
use gradflow_core::limiter::LimiterEntry;
use gradflow_core::{
    Field, Grid1D, Grid2D, Scheme, SelfTermPolicy, Solver1D, Solver2D, SolverState, StepOptions, StepRecord,
};

use crate::catalog::{grid_1d, grid_2d, resolve, Problem, ProblemKind};
use crate::config::{GridConfig, RunConfig, SchemeName, TauRule};

/// Settings of one run after config values and problem defaults are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub grid: GridConfig,
    pub tau_rule: TauRule,
    pub scheme: SchemeName,
    pub limiter: bool,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
}

impl Resolved {
    pub fn new(config: &RunConfig, problem: &Problem) -> anyhow::Result<Self> {
        let d = &problem.defaults;
        let r = Self {
            grid: config.grid.clone().unwrap_or_else(|| d.grid.clone()),
            tau_rule: config.tau.unwrap_or(d.tau),
            scheme: config.scheme.unwrap_or(d.scheme),
            limiter: config.limiter,
            t_end: config.t_end.unwrap_or(d.t_end),
            snapshots: config.snapshots.clone().unwrap_or_else(|| {
                let t = config.t_end.unwrap_or(d.t_end);
                d.snapshots.iter().copied().filter(|&s| s <= t).collect()
            }),
        };
        r.tau_rule.validate()?;
        if let Some(s) = r.snapshots.iter().find(|&&s| s > r.t_end * (1.0 + 1e-12)) {
            bail!("snapshot time {s} exceeds t_end {}", r.t_end);
        }
        Ok(r)
    }
}

/// Number of steps and the step that lands exactly on `t_end`.
pub fn step_plan(t_end: f64, tau: f64) -> (usize, f64) {
    let n = ((t_end / tau) - 1e-9).ceil().max(1.0) as usize;
    (n, t_end / n as f64)
}

/// Cell coordinates of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    OneD(Vec<f64>),
    TwoD { x: Vec<f64>, y: Vec<f64> },
}

impl Coords {
    pub fn len(&self) -> usize {
        match self {
            Coords::OneD(x) => x.len(),
            Coords::TwoD { x, .. } => x.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub rho: Vec<f64>,
}

/// Key facts written as the first line of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub problem: String,
    pub scheme: SchemeName,
    pub grid: String,
    pub tau_rule: TauRule,
    pub tau: f64,
    pub steps: usize,
    pub t_end: f64,
    pub limiter: bool,
    pub self_term: SelfTermPolicy,
    pub initial_mass: f64,
    pub notes: Vec<(String, String)>,
}

impl Metadata {
    pub fn header_line(&self) -> String {
        let mut line = format!(
            "# problem={} scheme={} grid={} tau_rule={} tau={:.16e} steps={} t_end={} limiter={} self_term={} initial_mass={:.16e}",
            self.problem,
            self.scheme,
            self.grid,
            self.tau_rule,
            self.tau,
            self.steps,
            self.t_end,
            if self.limiter { "on" } else { "off" },
            self.self_term,
            self.initial_mass,
        );
        for (k, v) in &self.notes {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub metadata: Metadata,
    pub coords: Coords,
    /// Cell widths (1D) or areas (2D), for norms and masses.
    pub weights: Vec<f64>,
    /// One row per step, starting with the initial state.
    pub energy: Vec<EnergyReport>,
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<StepRecord>,
    pub warnings: Vec<String>,
    pub final_state: SolverState,
}

impl RunArtifacts {
    /// `(step, entry)` for every limiter repair, in order.
    pub fn limiter_log(&self) -> Vec<(usize, &LimiterEntry)> {
        self.records
            .iter()
            .flat_map(|r| r.limiter.iter().map(move |e| (r.step, e)))
            .collect()
    }
}

/// Stepper over either dimension.
enum Stepper {
    OneD(Box<Solver1D>),
    TwoD(Box<Solver2D>),
}

impl Stepper {
    /// Advances `state`; the dissipation is NaN when negatives were left in place.
    fn step(&self, scheme: Scheme, state: &mut SolverState, tau: f64) -> anyhow::Result<(StepRecord, f64)> {
        Ok(match self {
            Stepper::OneD(s) => {
                let out = s.step(scheme, state, tau)?;
                let i = if out.record.negatives_left > 0 {
                    f64::NAN
                } else {
                    dissipation_1d(&state.rho_curr, &out.mobility, s.grid())?
                };
                (out.record, i)
            }
            Stepper::TwoD(s) => {
                let out = s.step(scheme, state, tau)?;
                let i = if out.record.negatives_left > 0 {
                    f64::NAN
                } else {
                    dissipation_2d(&state.rho_curr, &out.mobility, s.grid())?
                };
                (out.record, i)
            }
        })
    }

    /// NaN for a state with negative cells, where the entropy is undefined.
    fn energy(&self, rho: &Field) -> anyhow::Result<f64> {
        if rho.min() < 0.0 {
            return Ok(f64::NAN);
        }
        Ok(match self {
            Stepper::OneD(s) => discrete_energy_with_1d(s.evaluator(), rho)?,
            Stepper::TwoD(s) => discrete_energy_with_2d(s.evaluator(), rho)?,
        })
    }
}

/// Solver, grid description and weights for a resolved run.
struct Setup {
    stepper: Stepper,
    coords: Coords,
    weights: Vec<f64>,
    h: f64,
    grid_label: String,
    self_term: SelfTermPolicy,
    initial: SolverState,
}

fn max_width(g: &Grid1D) -> f64 {
    g.widths().iter().copied().fold(0.0, f64::max)
}

fn setup(problem: &Problem, r: &Resolved) -> anyhow::Result<Setup> {
    let options = StepOptions {
        limiter: r.limiter,
        ..StepOptions::default()
    };
    Ok(match &problem.kind {
        ProblemKind::OneD { spec, .. } => {
            let g = grid_1d(spec, &r.grid)?;
            let solver = Solver1D::new(g.clone(), spec.clone())?.with_options(options);
            let initial = solver.initial_state()?;
            Setup {
                coords: Coords::OneD(g.centers().to_vec()),
                weights: g.widths().to_vec(),
                h: max_width(&g),
                grid_label: if g.is_uniform() { g.len().to_string() } else { format!("{}-nonuniform", g.len()) },
                self_term: spec.self_term(),
                stepper: Stepper::OneD(Box::new(solver)),
                initial,
            }
        }
        ProblemKind::TwoD { spec, .. } => {
            let g: Grid2D = grid_2d(spec, &r.grid)?;
            let solver = Solver2D::new(g.clone(), spec.clone())?.with_options(options);
            let initial = solver.initial_state()?;
            let (mut x, mut y) = (Vec::with_capacity(g.len()), Vec::with_capacity(g.len()));
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let (cx, cy) = g.center(i, j);
                    x.push(cx);
                    y.push(cy);
                }
            }
            Setup {
                coords: Coords::TwoD { x, y },
                weights: g.areas(),
                h: max_width(&g.gx).max(max_width(&g.gy)),
                grid_label: format!("{}x{}", g.nx(), g.ny()),
                self_term: spec.self_term(),
                stepper: Stepper::TwoD(Box::new(solver)),
                initial,
            }
        }
    })
}

fn weighted(weights: &[f64], rho: &[f64]) -> f64 {
    weights.iter().zip(rho).map(|(w, r)| w * r).sum()
}

/// Runs a config to `t_end`.
pub fn run(config: &RunConfig) -> anyhow::Result<RunArtifacts> {
    config.validate()?;
    let problem = resolve(config)?;
    run_problem(&problem, config)
}

/// Runs `problem` with the settings in `config`.
pub fn run_problem(problem: &Problem, config: &RunConfig) -> anyhow::Result<RunArtifacts> {
    let r = Resolved::new(config, problem)?;
    let Setup {
        stepper,
        coords,
        weights,
        h,
        grid_label,
        self_term,
        initial,
    } = setup(problem, &r)?;
    let (steps, tau) = step_plan(r.t_end, r.tau_rule.tau(h));
    let scheme = r.scheme.scheme();
    let snapshot_steps: Vec<usize> = r
        .snapshots
        .iter()
        .map(|&s| ((s / tau).round() as usize).min(steps))
        .collect();

    let mut state = initial;
    let initial_mass = weighted(&weights, state.rho_curr.values());
    let metadata = Metadata {
        problem: problem.id.clone(),
        scheme: r.scheme,
        grid: grid_label,
        tau_rule: r.tau_rule,
        tau,
        steps,
        t_end: r.t_end,
        limiter: r.limiter,
        self_term,
        initial_mass,
        notes: problem.notes.clone(),
    };
    log::info!("{}", metadata.header_line().trim_start_matches("# "));

    let mut energy = vec![EnergyReport {
        step: 0,
        time: 0.0,
        mass: initial_mass,
        energy: stepper.energy(&state.rho_curr)?,
        dissipation: f64::NAN,
    }];
    let mut snapshots = Vec::new();
    let take = |state: &SolverState, snapshots: &mut Vec<Snapshot>| {
        for (k, &s) in snapshot_steps.iter().enumerate() {
            if s == state.step_index {
                snapshots.push(Snapshot {
                    time: r.snapshots[k],
                    step: s,
                    rho: state.rho_curr.values().to_vec(),
                });
            }
        }
    };
    take(&state, &mut snapshots);
    let mut records = Vec::with_capacity(steps);
    let mut warnings = Vec::new();
    for n in 0..steps {
        let (record, dissipation) = stepper
            .step(scheme, &mut state, tau)
            .with_context(|| format!("step {} of {}", n + 1, steps))?;
        // Land on t_end exactly rather than on the accumulated sum.
        state.time = if n + 1 == steps { r.t_end } else { (n + 1) as f64 * tau };
        if record.negatives_left > 0 {
            warnings.push(format!(
                "step {}: {} negative cells with the limiter off (min {:e})",
                record.step, record.negatives_left, record.raw_min
            ));
        }
        energy.push(EnergyReport {
            step: state.step_index,
            time: state.time,
            mass: weighted(&weights, state.rho_curr.values()),
            energy: stepper.energy(&state.rho_curr)?,
            dissipation,
        });
        records.push(record);
        take(&state, &mut snapshots);
    }
    Ok(RunArtifacts {
        metadata,
        coords,
        weights,
        energy,
        snapshots,
        records,
        warnings,
        final_state: state,
    })
}
