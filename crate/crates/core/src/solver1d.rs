//! One-dimensional steppers in the variable `G = rho / M`.
//!
//! The implicit systems are tridiagonal M-matrices, so the Thomas sweep
//! below needs no pivoting and maps a nonnegative right-hand side to a
//! nonnegative solution in floating point as well.

use crate::dd::Acc;
use crate::error::{Error, Result};
use crate::grid::{cell_average_init_1d, Field, Grid1D};
use crate::limiter::limit_field_1d;
use crate::model::{MobilityEvaluator1D, MobilityProfile, ProblemSpec1D};
use crate::state::{check_tau, clamp_rounding, weighted_sum, Scheme, SolverState, StepOptions, StepOutcome, StepRecord};

/// Tridiagonal system; `sub[0]` and `sup[n - 1]` are unused and zero.
///
/// `weight` holds the row sums of the matrix. The implicit steps assemble
/// `diag = weight + couplings`, which rounds away the small cell term when
/// the couplings are large; the solver recovers it from `weight` so that the
/// column sums telescope and mass is conserved to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem1D {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
    pub weight: Vec<f64>,
}

impl BandedSystem1D {
    /// Builds a system from its bands; row sums are computed from them.
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Self {
        let weight = (0..diag.len())
            .map(|j| diag[j] + sub.get(j).copied().unwrap_or(0.0) + sup.get(j).copied().unwrap_or(0.0))
            .collect();
        Self {
            sub,
            diag,
            sup,
            rhs,
            weight,
        }
    }

    /// Builds `weight_j G_j + sum_faces c (G_j - G_nb) = rhs_j` from the
    /// cell weights and the `n - 1` face couplings.
    pub fn from_couplings(weight: Vec<f64>, coupling: &[f64], rhs: Vec<f64>) -> Self {
        let n = weight.len();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut diag = weight.clone();
        for (j, &c) in coupling.iter().enumerate() {
            sup[j] = -c;
            sub[j + 1] = -c;
            diag[j] += c;
            diag[j + 1] += c;
        }
        Self {
            sub,
            diag,
            sup,
            rhs,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// First row violating `diag > |sub| + |sup|`, if any. A row with
    /// nonpositive couplings also counts as dominant when its weight is
    /// positive but below the rounding of `diag`.
    pub fn first_non_dominant_row(&self) -> Option<usize> {
        (0..self.len()).find(|&j| {
            let off = self.sub[j].abs() + self.sup[j].abs();
            let m_row = self.sub[j] <= 0.0 && self.sup[j] <= 0.0 && self.weight[j] > 0.0;
            !(self.diag[j] > off || (m_row && self.diag[j] >= off))
        })
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut v = self.diag[j] * x[j];
                if j > 0 {
                    v += self.sub[j] * x[j - 1];
                }
                if j + 1 < n {
                    v += self.sup[j] * x[j + 1];
                }
                v
            })
            .collect()
    }

    /// `max |b - A x|`.
    pub fn residual_max(&self, x: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.rhs)
            .fold(0.0f64, |m, (ax, b)| m.max((b - ax).abs()))
    }

    /// `b - A x` in flux form, `A x = w x - sub (x_j - x_{j-1}) - sup (x_j - x_{j+1})`,
    /// accumulated without intermediate rounding.
    fn flux_residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut acc = Acc::new(self.rhs[j]);
                acc.add_product(-self.weight[j], x[j]);
                if j > 0 {
                    acc.add_product(self.sub[j], x[j] - x[j - 1]);
                }
                if j + 1 < n {
                    acc.add_product(self.sup[j], x[j] - x[j + 1]);
                }
                acc.value()
            })
            .collect()
    }
}

/// Sweeps of iterative refinement after the direct solve.
const REFINEMENT_SWEEPS: usize = 3;

fn thomas(sys: &BandedSystem1D, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = sys.diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::ZeroPivot { row: 0 });
    }
    c[0] = sys.sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for j in 1..n {
        pivot = sys.diag[j] - sys.sub[j] * c[j - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::ZeroPivot { row: j });
        }
        c[j] = sys.sup[j] / pivot;
        d[j] = (rhs[j] - sys.sub[j] * d[j - 1]) / pivot;
    }
    let mut x = d;
    for j in (0..n - 1).rev() {
        x[j] -= c[j] * x[j + 1];
    }
    Ok(x)
}

/// Thomas algorithm followed by a few refinement sweeps against the
/// flux-form residual.
pub fn solve_tridiagonal(sys: &BandedSystem1D) -> Result<Vec<f64>> {
    let n = sys.len();
    if n == 0 {
        return Err(Error::ShapeMismatch { expected: 1, found: 0 });
    }
    for v in [&sys.sub, &sys.sup, &sys.rhs, &sys.weight] {
        if v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let mut x = thomas(sys, &sys.rhs)?;
    for _ in 0..REFINEMENT_SWEEPS {
        let r = sys.flux_residual(&x);
        if r.iter().all(|v| *v == 0.0) {
            break;
        }
        let dx = thomas(sys, &r)?;
        let size = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let step = dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter_mut().zip(&dx) {
            *a += b;
        }
        if step <= f64::EPSILON * size {
            break;
        }
    }
    Ok(x)
}

fn check_inputs(grid: &Grid1D, mob: &MobilityProfile, rho_n: &Field, tau: f64) -> Result<()> {
    check_tau(tau)?;
    rho_n.expect_len(grid.len())?;
    for (expected, found) in [
        (grid.len(), mob.at_centers.len()),
        (grid.len() - 1, mob.at_interfaces.len()),
    ] {
        if expected != found {
            return Err(Error::ShapeMismatch { expected, found });
        }
    }
    Ok(())
}

fn implicit_system(grid: &Grid1D, mob: &MobilityProfile, rho_n: &Field, scale: f64) -> BandedSystem1D {
    let weight = grid.widths().iter().zip(&mob.at_centers).map(|(h, m)| h * m).collect();
    let coupling: Vec<f64> = mob
        .at_interfaces
        .iter()
        .zip(grid.half_widths())
        .map(|(m, h)| scale * m / h)
        .collect();
    let rhs = grid.widths().iter().zip(rho_n.values()).map(|(h, r)| h * r).collect();
    BandedSystem1D::from_couplings(weight, &coupling, rhs)
}

/// Implicit step with frozen mobility: row `j` reads
/// `-a_{j-1/2} G_{j-1} + (h_j M_j + a_{j-1/2} + a_{j+1/2}) G_j - a_{j+1/2} G_{j+1} = h_j rho^n_j`
/// with `a_{j+1/2} = tau M_{j+1/2} / h_{j+1/2}`.
pub fn assemble_first_order_1d(grid: &Grid1D, mob: &MobilityProfile, rho_n: &Field, tau: f64) -> Result<BandedSystem1D> {
    check_inputs(grid, mob, rho_n, tau)?;
    Ok(implicit_system(grid, mob, rho_n, tau))
}

/// Half-step system of the predictor-corrector: the first-order rows with
/// `tau / 2`, solved for `G^* = rho^* / M*`. The corrector is
/// `rho^{n+1} = 2 rho^* - rho^n`.
pub fn assemble_predictor_1d(grid: &Grid1D, mob: &MobilityProfile, rho_n: &Field, tau: f64) -> Result<BandedSystem1D> {
    check_inputs(grid, mob, rho_n, tau)?;
    Ok(implicit_system(grid, mob, rho_n, 0.5 * tau))
}

/// Steppers bound to one grid and problem; kernel weights are cached once.
#[derive(Clone)]
pub struct Solver1D {
    eval: MobilityEvaluator1D,
    options: StepOptions,
}

impl Solver1D {
    pub fn new(grid: Grid1D, spec: ProblemSpec1D) -> Result<Self> {
        Ok(Self {
            eval: MobilityEvaluator1D::new(grid, spec)?,
            options: StepOptions::default(),
        })
    }

    pub fn with_options(mut self, options: StepOptions) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> StepOptions {
        self.options
    }

    pub fn grid(&self) -> &Grid1D {
        self.eval.grid()
    }

    pub fn spec(&self) -> &ProblemSpec1D {
        self.eval.spec()
    }

    pub fn evaluator(&self) -> &MobilityEvaluator1D {
        &self.eval
    }

    /// Cell averages of the problem's initial density.
    pub fn initial_state(&self) -> Result<SolverState> {
        let spec = self.spec();
        Ok(SolverState::new(cell_average_init_1d(|x| spec.initial(x), self.grid())?))
    }

    fn mass(&self, rho: &[f64]) -> f64 {
        weighted_sum(self.grid().widths(), rho)
    }

    fn require_nonnegative(rho: &Field) -> Result<()> {
        match rho.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            Some((index, &value)) => Err(Error::NegativeDensity { index, value }),
            None => Ok(()),
        }
    }

    /// `tau * F(x_j, t)` per cell, scaled by `weight`.
    fn add_source(&self, rhs: &mut [f64], t: f64, weight: impl Fn(usize) -> f64) {
        if let Some(f) = self.spec().source() {
            for (j, &x) in self.grid().centers().iter().enumerate() {
                rhs[j] += weight(j) * f(x, t);
            }
        }
    }

    fn finish(
        &self,
        state: &mut SolverState,
        mut next: Vec<f64>,
        tau: f64,
        mobility: MobilityProfile,
        predictor: Option<Vec<f64>>,
        limit: bool,
    ) -> Result<StepOutcome<MobilityProfile>> {
        let mass_before = self.mass(state.rho_curr.values());
        let mut record = StepRecord {
            step: state.step_index + 1,
            raw_min: next.iter().cloned().fold(f64::INFINITY, f64::min),
            ..StepRecord::default()
        };
        record.clamped = clamp_rounding(&mut next);
        let negatives = next.iter().filter(|&&v| v < 0.0).count();
        if negatives > 0 {
            if limit {
                let (fixed, report) = limit_field_1d(&Field::new(next)?, self.grid())?;
                next = fixed.into_values();
                if report.max_size() > self.options.neighbourhood_cap {
                    log::warn!(
                        "step {}: limiter neighbourhood of {} cells exceeds cap {}",
                        record.step,
                        report.max_size(),
                        self.options.neighbourhood_cap
                    );
                }
                record.limiter = report.entries;
            } else {
                log::warn!(
                    "step {}: {negatives} negative cells left in place (min {:e})",
                    record.step,
                    record.raw_min
                );
                record.negatives_left = negatives;
            }
        }
        if record.clamped > 0 {
            log::debug!("step {}: clamped {} rounding-level negatives", record.step, record.clamped);
        }
        let mass_after = self.mass(&next);
        state.advance(next, tau, record.clone())?;
        Ok(StepOutcome {
            mobility,
            mass_before,
            mass_after,
            record,
            predictor,
        })
    }

    /// Implicit–explicit step with mobility frozen at `rho^n`; source at `t_{n+1}`.
    pub fn step_first_order(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile>> {
        check_tau(tau)?;
        Self::require_nonnegative(&state.rho_curr)?;
        let mob = self.eval.profile(state.rho_curr.values())?;
        let mut sys = assemble_first_order_1d(self.grid(), &mob, &state.rho_curr, tau)?;
        if let Some(row) = sys.first_non_dominant_row() {
            return Err(Error::NotDominant { row });
        }
        let widths = self.grid().widths();
        self.add_source(&mut sys.rhs, state.time + tau, |j| widths[j] * tau);
        let g = solve_tridiagonal(&sys)?;
        let next = g.iter().zip(&mob.at_centers).map(|(g, m)| m * g).collect();
        // Only a sink term can drive this step negative.
        self.finish(state, next, tau, mob, None, self.options.limiter)
    }

    /// Forward Euler with the same fluxes, evaluated at `rho^n`; source at `t_n`.
    pub fn step_explicit_euler(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile>> {
        check_tau(tau)?;
        let grid = self.grid();
        let n = grid.len();
        let rho = state.rho_curr.values();
        let mob = self.eval.profile(rho)?;
        let g: Vec<f64> = rho.iter().zip(&mob.at_centers).map(|(r, m)| r / m).collect();
        let flux: Vec<f64> = (0..n - 1)
            .map(|j| mob.at_interfaces[j] / grid.half_widths()[j] * (g[j + 1] - g[j]))
            .collect();
        let mut next: Vec<f64> = (0..n)
            .map(|j| {
                let right = if j + 1 < n { flux[j] } else { 0.0 };
                let left = if j > 0 { flux[j - 1] } else { 0.0 };
                rho[j] + tau / grid.widths()[j] * (right - left)
            })
            .collect();
        self.add_source(&mut next, state.time, |_| tau);
        self.finish(state, next, tau, mob, None, false)
    }

    /// Predictor-corrector step with mobility at `1.5 rho^n - 0.5 rho^{n-1}`:
    /// a half step for `rho^*` with the source at `t_n + tau / 2`, then
    /// `rho^{n+1} = 2 rho^* - rho^n`.
    pub fn step_second_order(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile>> {
        check_tau(tau)?;
        let prev = state.rho_prev.as_ref().ok_or(Error::MissingHistory)?;
        prev.expect_len(self.grid().len())?;
        Self::require_nonnegative(&state.rho_curr)?;
        let rho = state.rho_curr.values();
        let extrapolated: Vec<f64> = rho
            .iter()
            .zip(prev.values())
            .map(|(r, p)| 1.5 * r - 0.5 * p)
            .collect();
        let mob = self.eval.profile(&extrapolated)?;
        let mut sys = assemble_predictor_1d(self.grid(), &mob, &state.rho_curr, tau)?;
        if let Some(row) = sys.first_non_dominant_row() {
            return Err(Error::NotDominant { row });
        }
        let widths = self.grid().widths();
        self.add_source(&mut sys.rhs, state.time + 0.5 * tau, |j| 0.5 * tau * widths[j]);
        let g = solve_tridiagonal(&sys)?;
        let next: Vec<f64> = g.iter().zip(&mob.at_centers).zip(rho).map(|((g, m), r)| 2.0 * (m * g) - r).collect();
        // Reported as (rho^n + rho^{n+1}) / 2 so the corrector identity holds bitwise.
        let predictor = rho.iter().zip(&next).map(|(r, x)| 0.5 * (r + x)).collect();
        let limit = self.options.limiter;
        self.finish(state, next, tau, mob, Some(predictor), limit)
    }

    /// Dispatches on `scheme`; a second-order request without history takes
    /// a first-order step.
    pub fn step(&self, scheme: Scheme, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile>> {
        match scheme {
            Scheme::FirstOrder => self.step_first_order(state, tau),
            Scheme::ExplicitEuler => self.step_explicit_euler(state, tau),
            Scheme::SecondOrder if state.rho_prev.is_none() => self.step_first_order(state, tau),
            Scheme::SecondOrder => self.step_second_order(state, tau),
        }
    }
}

fn one_step(
    state: &SolverState,
    grid: &Grid1D,
    spec: &ProblemSpec1D,
    tau: f64,
    f: impl FnOnce(&Solver1D, &mut SolverState, f64) -> Result<StepOutcome<MobilityProfile>>,
) -> Result<SolverState> {
    let solver = Solver1D::new(grid.clone(), spec.clone())?;
    let mut next = state.clone();
    f(&solver, &mut next, tau)?;
    Ok(next)
}

pub fn step_first_order_1d(state: &SolverState, grid: &Grid1D, spec: &ProblemSpec1D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver1D::step_first_order)
}

pub fn step_explicit_euler_1d(state: &SolverState, grid: &Grid1D, spec: &ProblemSpec1D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver1D::step_explicit_euler)
}

/// Second-order step with the limiter enabled.
pub fn step_second_order_1d(state: &SolverState, grid: &Grid1D, spec: &ProblemSpec1D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver1D::step_second_order)
}
