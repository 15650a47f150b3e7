//! Two-dimensional steppers on tensor grids.
//!
//! Systems are five-point, row-major with `x` fastest. Both a symmetric
//! Gauss–Seidel iteration and a banded LU factorization are provided; the
//! steppers use the factorization by default (see [`LinearSolver2D`]).

use std::sync::Mutex;

use crate::dd::Acc;
use crate::error::{Error, Result};
use crate::grid::{cell_average_init_2d, Field, Grid2D};
use crate::limiter::limit_field_2d;
use crate::model::{MobilityEvaluator2D, MobilityProfile2D, ProblemSpec2D};
use crate::state::{check_tau, clamp_rounding, weighted_sum, Scheme, SolverState, StepOptions, StepOutcome, StepRecord};

/// Relative `l1` residual targeted by the iterative solver.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

/// Sweep budget of the iterative solver.
pub const MAX_SWEEPS: usize = 100_000;

const REFINEMENT_SWEEPS: usize = 3;

/// Five-point system. Coefficients of out-of-grid neighbours are zero.
///
/// `weight` holds the row sums (the cell term `|I| M` for the assembled
/// systems); the direct solver refines against it so that mass telescopes
/// even when `center` has rounded that term away.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem2D {
    pub nx: usize,
    pub ny: usize,
    pub center: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
    pub rhs: Vec<f64>,
    pub weight: Vec<f64>,
}

impl BandedSystem2D {
    fn zeros(nx: usize, ny: usize) -> Self {
        let n = nx * ny;
        Self {
            nx,
            ny,
            center: vec![0.0; n],
            west: vec![0.0; n],
            east: vec![0.0; n],
            south: vec![0.0; n],
            north: vec![0.0; n],
            rhs: vec![0.0; n],
            weight: vec![0.0; n],
        }
    }

    /// Recomputes `weight` from the bands, for systems built by hand.
    pub fn update_row_sums(&mut self) {
        self.weight = (0..self.len())
            .map(|p| self.center[p] + self.west[p] + self.east[p] + self.south[p] + self.north[p])
            .collect();
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.len();
        for v in [&self.center, &self.west, &self.east, &self.south, &self.north, &self.rhs, &self.weight] {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    fn off_diagonal_sum(&self, p: usize) -> f64 {
        self.west[p].abs() + self.east[p].abs() + self.south[p].abs() + self.north[p].abs()
    }

    /// First row violating strict dominance; see
    /// [`BandedSystem1D::first_non_dominant_row`](crate::solver1d::BandedSystem1D::first_non_dominant_row).
    pub fn first_non_dominant_row(&self) -> Option<usize> {
        (0..self.len()).find(|&p| {
            let off = self.off_diagonal_sum(p);
            let m_row = [self.west[p], self.east[p], self.south[p], self.north[p]].iter().all(|&c| c <= 0.0)
                && self.weight[p] > 0.0;
            !(self.center[p] > off || (m_row && self.center[p] >= off))
        })
    }

    /// Row `p` of `A x`.
    fn row_product(&self, x: &[f64], p: usize) -> f64 {
        let nx = self.nx;
        let mut v = self.center[p] * x[p];
        if p % nx > 0 {
            v += self.west[p] * x[p - 1];
        }
        if p % nx + 1 < nx {
            v += self.east[p] * x[p + 1];
        }
        if p >= nx {
            v += self.south[p] * x[p - nx];
        }
        if p + nx < self.len() {
            v += self.north[p] * x[p + nx];
        }
        v
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|p| self.row_product(x, p)).collect()
    }

    /// `||b - A x||_1 / ||b||_1` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r: f64 = (0..self.len())
            .map(|p| (self.rhs[p] - self.row_product(x, p)).abs())
            .sum();
        let b: f64 = self.rhs.iter().map(|v| v.abs()).sum();
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }

    /// `b - A x` with `A x = w x - sum_nb a_nb (x_p - x_nb)`, accumulated
    /// without intermediate rounding.
    fn flux_residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let nx = self.nx;
        (0..self.len())
            .map(|p| {
                let mut acc = Acc::new(b[p]);
                acc.add_product(-self.weight[p], x[p]);
                if p % nx > 0 {
                    acc.add_product(self.west[p], x[p] - x[p - 1]);
                }
                if p % nx + 1 < nx {
                    acc.add_product(self.east[p], x[p] - x[p + 1]);
                }
                if p >= nx {
                    acc.add_product(self.south[p], x[p] - x[p - nx]);
                }
                if p + nx < self.len() {
                    acc.add_product(self.north[p], x[p] - x[p + nx]);
                }
                acc.value()
            })
            .collect()
    }

    /// Solves with `lu` (factors of this operator) and refines against the
    /// flux-form residual.
    pub fn solve_refined(&self, lu: &BandLu) -> Result<Vec<f64>> {
        self.check_shape()?;
        let mut x = lu.solve(&self.rhs)?;
        for _ in 0..REFINEMENT_SWEEPS {
            let r = self.flux_residual(&x, &self.rhs);
            if r.iter().all(|v| *v == 0.0) {
                break;
            }
            let dx = lu.solve(&r)?;
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

    fn same_operator(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.center == other.center
            && self.west == other.west
            && self.east == other.east
            && self.south == other.south
            && self.north == other.north
            && self.weight == other.weight
    }

    /// LU factors without pivoting, stored over the band `|i - j| <= nx`.
    pub fn factorize(&self) -> Result<BandLu> {
        self.check_shape()?;
        let n = self.len();
        let bw = self.nx;
        let width = 2 * bw + 1;
        let mut band = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + j + bw - i;
        for p in 0..n {
            band[at(p, p)] = self.center[p];
            if p % self.nx > 0 {
                band[at(p, p - 1)] = self.west[p];
            }
            if p % self.nx + 1 < self.nx {
                band[at(p, p + 1)] = self.east[p];
            }
            if p >= self.nx {
                band[at(p, p - self.nx)] = self.south[p];
            }
            if p + self.nx < n {
                band[at(p, p + self.nx)] = self.north[p];
            }
        }
        for k in 0..n {
            let pivot = band[at(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::ZeroPivot { row: k });
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = band[at(i, k)] / pivot;
                if l == 0.0 {
                    continue;
                }
                band[at(i, k)] = l;
                let (row_k, row_i) = (at(k, k), at(i, k));
                for d in 1..=last - k {
                    band[row_i + d] -= l * band[row_k + d];
                }
            }
        }
        Ok(BandLu { n, bw, band })
    }
}

/// Banded LU factors of a [`BandedSystem2D`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                found: rhs.len(),
            });
        }
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        let at = |i: usize, j: usize| i * width + j + bw - i;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut v = x[i];
            for k in i.saturating_sub(bw)..i {
                v -= self.band[at(i, k)] * x[k];
            }
            x[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for j in i + 1..=(i + bw).min(n - 1) {
                v -= self.band[at(i, j)] * x[j];
            }
            x[i] = v / self.band[at(i, i)];
        }
        Ok(x)
    }
}

/// Stopping rule of [`solve_banded_2d_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self {
            tolerance: RESIDUAL_TOLERANCE,
            max_sweeps: MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeSolution {
    pub x: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
}

/// Symmetric Gauss–Seidel from a zero start with the default stopping rule.
pub fn solve_banded_2d(sys: &BandedSystem2D) -> Result<IterativeSolution> {
    solve_banded_2d_with(sys, None, IterativeOptions::default())
}

/// Symmetric Gauss–Seidel (forward then backward sweep) until the relative
/// `l1` residual drops below `options.tolerance`.
pub fn solve_banded_2d_with(
    sys: &BandedSystem2D,
    start: Option<&[f64]>,
    options: IterativeOptions,
) -> Result<IterativeSolution> {
    sys.check_shape()?;
    let n = sys.len();
    let mut x = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: s.len(),
            })
        }
        None => vec![0.0; n],
    };
    let relax = |x: &mut [f64], p: usize| {
        let off = sys.row_product(x, p) - sys.center[p] * x[p];
        x[p] = (sys.rhs[p] - off) / sys.center[p];
    };
    let mut residual = sys.relative_residual(&x);
    let mut sweeps = 0;
    while residual > options.tolerance {
        if sweeps == options.max_sweeps {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                residual,
            });
        }
        for p in 0..n {
            relax(&mut x, p);
        }
        for p in (0..n).rev() {
            relax(&mut x, p);
        }
        sweeps += 1;
        residual = sys.relative_residual(&x);
    }
    Ok(IterativeSolution { x, sweeps, residual })
}

fn check_inputs(grid: &Grid2D, mob: &MobilityProfile2D, rho_n: &Field, tau: f64) -> Result<()> {
    check_tau(tau)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    rho_n.expect_len(nx * ny)?;
    for (expected, found) in [
        (nx * ny, mob.at_centers.len()),
        ((nx - 1) * ny, mob.at_x_faces.len()),
        (nx * (ny - 1), mob.at_y_faces.len()),
    ] {
        if expected != found {
            return Err(Error::ShapeMismatch { expected, found });
        }
    }
    Ok(())
}

/// Fills the couplings `scale * M̃` on every face and returns the system
/// with `center = area * M` plus the couplings; `rhs` is left at zero.
fn assemble_operator(grid: &Grid2D, mob: &MobilityProfile2D, scale: f64) -> BandedSystem2D {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.gx.widths(), grid.gy.widths());
    let (dx, dy) = (grid.gx.half_widths(), grid.gy.half_widths());
    let mut sys = BandedSystem2D::zeros(nx, ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            sys.weight[p] = hx[i] * hy[j] * mob.at_centers[p];
            sys.center[p] = sys.weight[p];
        }
    }
    for j in 0..ny {
        for i in 0..nx - 1 {
            let p = j * nx + i;
            let a = scale * (hy[j] / dx[i]) * mob.at_x_faces[j * (nx - 1) + i];
            sys.east[p] = -a;
            sys.west[p + 1] = -a;
            sys.center[p] += a;
            sys.center[p + 1] += a;
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let p = j * nx + i;
            let a = scale * (hx[i] / dy[j]) * mob.at_y_faces[p];
            sys.north[p] = -a;
            sys.south[p + nx] = -a;
            sys.center[p] += a;
            sys.center[p + nx] += a;
        }
    }
    sys
}

/// Implicit step with frozen mobility: area-weighted rows
/// `|I_ij| M_ij G_ij + tau sum_faces M̃ (G_ij - G_nb) = |I_ij| rho^n_ij`
/// with `M̃_{i+1/2,j} = (h^y_j / h^x_{i+1/2}) M_{i+1/2,j}` and likewise in `y`.
pub fn assemble_first_order_2d(grid: &Grid2D, mob: &MobilityProfile2D, rho_n: &Field, tau: f64) -> Result<BandedSystem2D> {
    check_inputs(grid, mob, rho_n, tau)?;
    let mut sys = assemble_operator(grid, mob, tau);
    for (p, (a, r)) in grid.areas().iter().zip(rho_n.values()).enumerate() {
        sys.rhs[p] = a * r;
    }
    Ok(sys)
}

/// Half-step system of the predictor-corrector: the first-order rows with
/// `tau / 2`, solved for `G^* = rho^* / M*`. The corrector is
/// `rho^{n+1} = 2 rho^* - rho^n`.
pub fn assemble_predictor_2d(grid: &Grid2D, mob: &MobilityProfile2D, rho_n: &Field, tau: f64) -> Result<BandedSystem2D> {
    check_inputs(grid, mob, rho_n, tau)?;
    let mut sys = assemble_operator(grid, mob, 0.5 * tau);
    for (p, (a, r)) in grid.areas().iter().zip(rho_n.values()).enumerate() {
        sys.rhs[p] = a * r;
    }
    Ok(sys)
}

/// How the steppers solve their linear systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver2D {
    /// Banded LU without pivoting. The systems are M-matrices, so a
    /// nonnegative right-hand side yields a nonnegative solution exactly,
    /// and the factors are reused while the operator is unchanged.
    Direct,
    /// Symmetric Gauss–Seidel warm-started from `rho^n / M`.
    GaussSeidel(IterativeOptions),
}

struct CachedFactor {
    system: BandedSystem2D,
    lu: BandLu,
}

pub struct Solver2D {
    eval: MobilityEvaluator2D,
    options: StepOptions,
    linear: LinearSolver2D,
    cache: Mutex<Option<CachedFactor>>,
}

impl Clone for Solver2D {
    fn clone(&self) -> Self {
        Self {
            eval: self.eval.clone(),
            options: self.options,
            linear: self.linear,
            cache: Mutex::new(None),
        }
    }
}

impl Solver2D {
    pub fn new(grid: Grid2D, spec: ProblemSpec2D) -> Result<Self> {
        Ok(Self::from_evaluator(MobilityEvaluator2D::new(grid, spec)?))
    }

    pub fn from_evaluator(eval: MobilityEvaluator2D) -> Self {
        Self {
            eval,
            options: StepOptions::default(),
            linear: LinearSolver2D::Direct,
            cache: Mutex::new(None),
        }
    }

    pub fn with_options(mut self, options: StepOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_linear_solver(mut self, linear: LinearSolver2D) -> Self {
        self.linear = linear;
        self
    }

    pub fn options(&self) -> StepOptions {
        self.options
    }

    pub fn linear_solver(&self) -> LinearSolver2D {
        self.linear
    }

    pub fn grid(&self) -> &Grid2D {
        self.eval.grid()
    }

    pub fn spec(&self) -> &ProblemSpec2D {
        self.eval.spec()
    }

    pub fn evaluator(&self) -> &MobilityEvaluator2D {
        &self.eval
    }

    pub fn initial_state(&self) -> Result<SolverState> {
        let spec = self.spec();
        Ok(SolverState::new(cell_average_init_2d(|x, y| spec.initial(x, y), self.grid())?))
    }

    fn mass(&self, rho: &[f64]) -> f64 {
        weighted_sum(self.eval.areas(), rho)
    }

    fn solve(&self, sys: &BandedSystem2D, start: Vec<f64>) -> Result<Vec<f64>> {
        if let Some(row) = sys.first_non_dominant_row() {
            return Err(Error::NotDominant { row });
        }
        match self.linear {
            LinearSolver2D::GaussSeidel(opts) => Ok(solve_banded_2d_with(sys, Some(&start), opts)?.x),
            LinearSolver2D::Direct => {
                let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
                let reusable = cache.as_ref().is_some_and(|c| c.system.same_operator(sys));
                if !reusable {
                    let lu = sys.factorize()?;
                    *cache = Some(CachedFactor {
                        system: sys.clone(),
                        lu,
                    });
                }
                sys.solve_refined(&cache.as_ref().expect("factor cached").lu)
            }
        }
    }

    fn add_source(&self, rhs: &mut [f64], t: f64, tau: f64) {
        if let Some(f) = self.spec().source() {
            let g = self.grid();
            let areas = self.eval.areas();
            let mut p = 0;
            for &y in g.gy.centers() {
                for &x in g.gx.centers() {
                    rhs[p] += areas[p] * tau * f(x, y, t);
                    p += 1;
                }
            }
        }
    }

    fn require_nonnegative(rho: &Field) -> Result<()> {
        match rho.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            Some((index, &value)) => Err(Error::NegativeDensity { index, value }),
            None => Ok(()),
        }
    }

    fn finish(
        &self,
        state: &mut SolverState,
        mut next: Vec<f64>,
        tau: f64,
        mobility: MobilityProfile2D,
        predictor: Option<Vec<f64>>,
        limit: bool,
    ) -> Result<StepOutcome<MobilityProfile2D>> {
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
                let (fixed, report) = limit_field_2d(&Field::new(next)?, self.grid())?;
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

    /// Implicit step with mobility frozen at `rho^n`; source at `t_{n+1}`.
    pub fn step_first_order(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile2D>> {
        check_tau(tau)?;
        Self::require_nonnegative(&state.rho_curr)?;
        let rho = state.rho_curr.values();
        let mob = self.eval.profile(rho)?;
        let mut sys = assemble_first_order_2d(self.grid(), &mob, &state.rho_curr, tau)?;
        self.add_source(&mut sys.rhs, state.time + tau, tau);
        let start = rho.iter().zip(&mob.at_centers).map(|(r, m)| r / m).collect();
        let g = self.solve(&sys, start)?;
        let next = g.iter().zip(&mob.at_centers).map(|(g, m)| m * g).collect();
        // Only a sink term can drive this step negative.
        self.finish(state, next, tau, mob, None, self.options.limiter)
    }

    /// Forward Euler with the same fluxes, evaluated at `rho^n`; source at `t_n`.
    pub fn step_explicit_euler(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile2D>> {
        check_tau(tau)?;
        let rho = state.rho_curr.values();
        let mob = self.eval.profile(rho)?;
        let mut op = assemble_operator(self.grid(), &mob, tau);
        op.weight.iter_mut().for_each(|w| *w = 0.0);
        let g: Vec<f64> = rho.iter().zip(&mob.at_centers).map(|(r, m)| r / m).collect();
        // Without the cell term the residual of 0 is tau times the net inflow.
        let inflow = op.flux_residual(&g, &vec![0.0; op.len()]);
        let areas = self.eval.areas();
        let mut src = vec![0.0; rho.len()];
        self.add_source(&mut src, state.time, tau);
        let next = (0..rho.len())
            .map(|p| rho[p] + (inflow[p] + src[p]) / areas[p])
            .collect();
        self.finish(state, next, tau, mob, None, false)
    }

    /// Predictor-corrector step with mobility at `1.5 rho^n - 0.5 rho^{n-1}`:
    /// a half step for `rho^*` with the source at `t_n + tau / 2`, then
    /// `rho^{n+1} = 2 rho^* - rho^n`.
    pub fn step_second_order(&self, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile2D>> {
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
        let mut sys = assemble_predictor_2d(self.grid(), &mob, &state.rho_curr, tau)?;
        self.add_source(&mut sys.rhs, state.time + 0.5 * tau, 0.5 * tau);
        let start = rho.iter().zip(&mob.at_centers).map(|(r, m)| r / m).collect();
        let g = self.solve(&sys, start)?;
        let next: Vec<f64> = g.iter().zip(&mob.at_centers).zip(rho).map(|((g, m), r)| 2.0 * (m * g) - r).collect();
        // Reported as (rho^n + rho^{n+1}) / 2 so the corrector identity holds bitwise.
        let predictor = rho.iter().zip(&next).map(|(r, x)| 0.5 * (r + x)).collect();
        let limit = self.options.limiter;
        self.finish(state, next, tau, mob, Some(predictor), limit)
    }

    pub fn step(&self, scheme: Scheme, state: &mut SolverState, tau: f64) -> Result<StepOutcome<MobilityProfile2D>> {
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
    grid: &Grid2D,
    spec: &ProblemSpec2D,
    tau: f64,
    f: impl FnOnce(&Solver2D, &mut SolverState, f64) -> Result<StepOutcome<MobilityProfile2D>>,
) -> Result<SolverState> {
    let solver = Solver2D::new(grid.clone(), spec.clone())?;
    let mut next = state.clone();
    f(&solver, &mut next, tau)?;
    Ok(next)
}

pub fn step_first_order_2d(state: &SolverState, grid: &Grid2D, spec: &ProblemSpec2D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver2D::step_first_order)
}

pub fn step_explicit_euler_2d(state: &SolverState, grid: &Grid2D, spec: &ProblemSpec2D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver2D::step_explicit_euler)
}

/// Second-order step with the limiter enabled.
pub fn step_second_order_2d(state: &SolverState, grid: &Grid2D, spec: &ProblemSpec2D, tau: f64) -> Result<SolverState> {
    one_step(state, grid, spec, tau, Solver2D::step_second_order)
}
