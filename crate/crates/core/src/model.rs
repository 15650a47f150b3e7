//! Problem definitions, the discrete interaction convolution and the
//! mobility `M = exp(-V - intensity * W * rho)`.
//!
//! Convolutions are direct sums in ascending cell order. The evaluators
//! below cache kernel weights per grid; cached and uncached paths perform
//! the same floating-point operations in the same order, except for the 2D
//! uniform-grid offset tables, whose displacements are formed as integer
//! multiples of the spacing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D, Grid2D};

/// Largest `|V + intensity * (W * rho)|` accepted before the mobility is
/// considered out of range.
pub const EXPONENT_LIMIT: f64 = 700.0;

/// Kernel-weight caches are built only below this many entries.
pub const DENSE_TABLE_LIMIT: usize = 4_000_000;

const SYMMETRY_SAMPLES: usize = 64;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// What the convolution does with the zero-displacement pair when the
/// kernel is unbounded there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfTermPolicy {
    /// The kernel is finite at zero and every pair contributes.
    Include,
    /// The kernel is not finite at zero; self pairs contribute nothing.
    SkipSingular,
}

impl fmt::Display for SelfTermPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelfTermPolicy::Include => f.write_str("include"),
            SelfTermPolicy::SkipSingular => f.write_str("skip-singular-self-pair"),
        }
    }
}

/// A 1D problem on `[lower, upper]` with zero-flux boundaries.
#[derive(Clone)]
pub struct ProblemSpec1D {
    lower: f64,
    upper: f64,
    potential: Fn1,
    kernel: Option<Fn1>,
    intensity: f64,
    source: Option<Fn2>,
    initial: Fn1,
    self_term: SelfTermPolicy,
}

impl fmt::Debug for ProblemSpec1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec1D")
            .field("domain", &(self.lower, self.upper))
            .field("interaction", &self.kernel.is_some())
            .field("intensity", &self.intensity)
            .field("source", &self.source.is_some())
            .field("self_term", &self.self_term)
            .finish()
    }
}

pub struct ProblemSpec1DBuilder {
    lower: f64,
    upper: f64,
    potential: Fn1,
    kernel: Option<Fn1>,
    intensity: f64,
    source: Option<Fn2>,
    initial: Fn1,
}

impl ProblemSpec1D {
    /// Starts a problem on `[lower, upper]` with `V = 0`, no interaction,
    /// unit intensity, no source and `rho0 = 1`.
    pub fn builder(lower: f64, upper: f64) -> ProblemSpec1DBuilder {
        ProblemSpec1DBuilder {
            lower,
            upper,
            potential: Arc::new(|_| 0.0),
            kernel: None,
            intensity: 1.0,
            source: None,
            initial: Arc::new(|_| 1.0),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn potential(&self, x: f64) -> f64 {
        (self.potential)(x)
    }

    pub fn kernel(&self) -> Option<&Fn1> {
        self.kernel.as_ref()
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// Whether `W * rho` enters the mobility at all.
    pub fn has_interaction(&self) -> bool {
        self.kernel.is_some() && self.intensity != 0.0
    }

    pub fn source(&self) -> Option<&Fn2> {
        self.source.as_ref()
    }

    pub fn initial(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    pub fn self_term(&self) -> SelfTermPolicy {
        self.self_term
    }
}

impl ProblemSpec1DBuilder {
    pub fn potential(mut self, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Arc::new(v);
        self
    }

    pub fn kernel(mut self, w: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel = Some(Arc::new(w));
        self
    }

    pub fn intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    /// Source `F(x, t)` added to the right-hand side.
    pub fn source(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    pub fn initial(mut self, rho0: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(rho0);
        self
    }

    pub fn build(self) -> Result<ProblemSpec1D> {
        let (a, b) = (self.lower, self.upper);
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidProblem(format!("bad domain [{a}, {b}]")));
        }
        if !self.intensity.is_finite() {
            return Err(Error::InvalidProblem("intensity must be finite".into()));
        }
        let len = b - a;
        let mut self_term = SelfTermPolicy::Include;
        if let Some(w) = &self.kernel {
            if !w(0.0).is_finite() {
                self_term = SelfTermPolicy::SkipSingular;
            }
            for k in 1..=SYMMETRY_SAMPLES {
                let s = len * k as f64 / SYMMETRY_SAMPLES as f64 * 0.999_123;
                check_symmetric(w(s), w(-s), &[s])?;
            }
        }
        for k in 0..=SYMMETRY_SAMPLES {
            let x = a + len * k as f64 / SYMMETRY_SAMPLES as f64;
            let r = (self.initial)(x);
            if r.is_nan() || r < 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "initial density {r} at x = {x} is negative"
                )));
            }
        }
        Ok(ProblemSpec1D {
            lower: a,
            upper: b,
            potential: self.potential,
            kernel: self.kernel,
            intensity: self.intensity,
            source: self.source,
            initial: self.initial,
            self_term,
        })
    }
}

fn check_symmetric(plus: f64, minus: f64, at: &[f64]) -> Result<()> {
    if !plus.is_finite() && !minus.is_finite() {
        return Ok(());
    }
    if (plus - minus).abs() > 1e-12 * (1.0 + plus.abs()) {
        return Err(Error::InvalidProblem(format!(
            "interaction kernel is not symmetric at {at:?}: {plus} vs {minus}"
        )));
    }
    Ok(())
}

/// A 2D problem on a rectangle with zero-flux boundaries.
#[derive(Clone)]
pub struct ProblemSpec2D {
    x_range: (f64, f64),
    y_range: (f64, f64),
    potential: Fn2,
    kernel: Option<Fn2>,
    intensity: f64,
    source: Option<Fn3>,
    initial: Fn2,
    self_term: SelfTermPolicy,
}

impl fmt::Debug for ProblemSpec2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec2D")
            .field("x_range", &self.x_range)
            .field("y_range", &self.y_range)
            .field("interaction", &self.kernel.is_some())
            .field("intensity", &self.intensity)
            .field("source", &self.source.is_some())
            .field("self_term", &self.self_term)
            .finish()
    }
}

pub struct ProblemSpec2DBuilder {
    x_range: (f64, f64),
    y_range: (f64, f64),
    potential: Fn2,
    kernel: Option<Fn2>,
    intensity: f64,
    source: Option<Fn3>,
    initial: Fn2,
}

impl ProblemSpec2D {
    pub fn builder(x_range: (f64, f64), y_range: (f64, f64)) -> ProblemSpec2DBuilder {
        ProblemSpec2DBuilder {
            x_range,
            y_range,
            potential: Arc::new(|_, _| 0.0),
            kernel: None,
            intensity: 1.0,
            source: None,
            initial: Arc::new(|_, _| 1.0),
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn potential(&self, x: f64, y: f64) -> f64 {
        (self.potential)(x, y)
    }

    pub fn kernel(&self) -> Option<&Fn2> {
        self.kernel.as_ref()
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn has_interaction(&self) -> bool {
        self.kernel.is_some() && self.intensity != 0.0
    }

    pub fn source(&self) -> Option<&Fn3> {
        self.source.as_ref()
    }

    pub fn initial(&self, x: f64, y: f64) -> f64 {
        (self.initial)(x, y)
    }

    pub fn self_term(&self) -> SelfTermPolicy {
        self.self_term
    }
}

impl ProblemSpec2DBuilder {
    pub fn potential(mut self, v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Arc::new(v);
        self
    }

    pub fn kernel(mut self, w: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel = Some(Arc::new(w));
        self
    }

    pub fn intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    /// Source `F(x, y, t)`.
    pub fn source(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    pub fn initial(mut self, rho0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(rho0);
        self
    }

    pub fn build(self) -> Result<ProblemSpec2D> {
        let ((a, b), (c, d)) = (self.x_range, self.y_range);
        for (lo, hi) in [(a, b), (c, d)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidProblem(format!("bad domain [{lo}, {hi}]")));
            }
        }
        if !self.intensity.is_finite() {
            return Err(Error::InvalidProblem("intensity must be finite".into()));
        }
        let (lx, ly) = (b - a, d - c);
        let mut self_term = SelfTermPolicy::Include;
        if let Some(w) = &self.kernel {
            if !w(0.0, 0.0).is_finite() {
                self_term = SelfTermPolicy::SkipSingular;
            }
            let n = 8;
            for p in -n..=n {
                for q in 0..=n {
                    let s = lx * p as f64 / n as f64 * 0.999_123;
                    let t = ly * q as f64 / n as f64 * 0.998_771;
                    if p == 0 && q == 0 {
                        continue;
                    }
                    check_symmetric(w(s, t), w(-s, -t), &[s, t])?;
                }
            }
        }
        let n = 16;
        for p in 0..=n {
            for q in 0..=n {
                let x = a + lx * p as f64 / n as f64;
                let y = c + ly * q as f64 / n as f64;
                let r = (self.initial)(x, y);
                if r.is_nan() || r < 0.0 {
                    return Err(Error::InvalidProblem(format!(
                        "initial density {r} at ({x}, {y}) is negative"
                    )));
                }
            }
        }
        Ok(ProblemSpec2D {
            x_range: self.x_range,
            y_range: self.y_range,
            potential: self.potential,
            kernel: self.kernel,
            intensity: self.intensity,
            source: self.source,
            initial: self.initial,
            self_term,
        })
    }
}

/// Mobility frozen for one step: `Q1` at cell centers and interior interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityProfile {
    pub at_centers: Vec<f64>,
    pub at_interfaces: Vec<f64>,
}

impl MobilityProfile {
    pub fn is_positive(&self) -> bool {
        self.at_centers
            .iter()
            .chain(&self.at_interfaces)
            .all(|&m| m.is_finite() && m > 0.0)
    }
}

/// 2D mobility. `at_x_faces[j * (nx - 1) + i]` sits at `(x_{i+1/2}, y_j)`,
/// `at_y_faces[j * nx + i]` at `(x_i, y_{j+1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityProfile2D {
    pub at_centers: Vec<f64>,
    pub at_x_faces: Vec<f64>,
    pub at_y_faces: Vec<f64>,
}

impl MobilityProfile2D {
    pub fn is_positive(&self) -> bool {
        self.at_centers
            .iter()
            .chain(&self.at_x_faces)
            .chain(&self.at_y_faces)
            .all(|&m| m.is_finite() && m > 0.0)
    }
}

fn guarded_exp(exponent: f64, location: impl FnOnce() -> String) -> Result<f64> {
    if exponent.abs() <= EXPONENT_LIMIT {
        Ok((-exponent).exp())
    } else {
        Err(Error::MobilityRange {
            location: location(),
            exponent,
        })
    }
}

fn kernel_weight(w: &Fn1, d: f64, h: f64) -> Result<f64> {
    let v = w(d);
    if v.is_finite() {
        Ok(h * v)
    } else if d == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::SingularKernel {
            displacement: vec![d],
        })
    }
}

fn kernel_weight_2d(w: &Fn2, dx: f64, dy: f64, area: f64) -> Result<f64> {
    let v = w(dx, dy);
    if v.is_finite() {
        Ok(area * v)
    } else if dx == 0.0 && dy == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::SingularKernel {
            displacement: vec![dx, dy],
        })
    }
}

/// `sum_i h_i W(x_i - x) rho_i`, without the intensity factor.
pub fn convolve_1d(grid: &Grid1D, spec: &ProblemSpec1D, rho: &Field, x: f64) -> Result<f64> {
    rho.expect_len(grid.len())?;
    convolve_slice_1d(grid, spec, rho.values(), x)
}

fn convolve_slice_1d(grid: &Grid1D, spec: &ProblemSpec1D, rho: &[f64], x: f64) -> Result<f64> {
    let Some(w) = spec.kernel() else {
        return Ok(0.0);
    };
    let mut acc = 0.0;
    for ((&xi, &hi), &ri) in grid.centers().iter().zip(grid.widths()).zip(rho) {
        let d = xi - x;
        let v = w(d);
        if !v.is_finite() {
            if d == 0.0 {
                continue;
            }
            return Err(Error::SingularKernel {
                displacement: vec![d],
            });
        }
        acc += hi * v * ri;
    }
    Ok(acc)
}

/// `Q1(x, rho) = exp(-V(x) - intensity * sum_i h_i W(x_i - x) rho_i)`.
pub fn mobility_value_1d(grid: &Grid1D, spec: &ProblemSpec1D, rho: &Field, x: f64) -> Result<f64> {
    rho.expect_len(grid.len())?;
    let conv = if spec.has_interaction() {
        convolve_slice_1d(grid, spec, rho.values(), x)?
    } else {
        0.0
    };
    let exponent = spec.potential(x) + spec.intensity() * conv;
    guarded_exp(exponent, || format!("x = {x}"))
}

pub fn mobility_profile_1d(grid: &Grid1D, spec: &ProblemSpec1D, rho: &Field) -> Result<MobilityProfile> {
    rho.expect_len(grid.len())?;
    MobilityEvaluator1D::uncached(grid.clone(), spec.clone()).profile(rho.values())
}

pub fn mobility_profile_2d(grid: &Grid2D, spec: &ProblemSpec2D, rho: &Field) -> Result<MobilityProfile2D> {
    rho.expect_len(grid.len())?;
    MobilityEvaluator2D::with_strategy(grid.clone(), spec.clone(), Strategy2D::Direct)?
        .profile(rho.values())
}

/// Evaluates 1D mobility profiles for one grid/problem pair, caching
/// `h_i W(x_i - p)` for every evaluation point `p` when it fits.
#[derive(Clone)]
pub struct MobilityEvaluator1D {
    grid: Grid1D,
    spec: ProblemSpec1D,
    potential_centers: Vec<f64>,
    potential_interfaces: Vec<f64>,
    // rows: centers then interfaces; columns: source cells
    weights: Option<Vec<f64>>,
}

impl MobilityEvaluator1D {
    pub fn new(grid: Grid1D, spec: ProblemSpec1D) -> Result<Self> {
        let mut eval = Self::uncached(grid, spec);
        let n = eval.grid.len();
        if let Some(w) = eval.spec.kernel().filter(|_| eval.spec.has_interaction()) {
            if n * (2 * n - 1) <= DENSE_TABLE_LIMIT {
                let mut weights = Vec::with_capacity(n * (2 * n - 1));
                for &p in eval.grid.centers().iter().chain(eval.grid.interfaces()) {
                    for (&xi, &hi) in eval.grid.centers().iter().zip(eval.grid.widths()) {
                        weights.push(kernel_weight(w, xi - p, hi)?);
                    }
                }
                eval.weights = Some(weights);
            }
        }
        Ok(eval)
    }

    fn uncached(grid: Grid1D, spec: ProblemSpec1D) -> Self {
        let potential_centers = grid.centers().iter().map(|&x| spec.potential(x)).collect();
        let potential_interfaces = grid.interfaces().iter().map(|&x| spec.potential(x)).collect();
        Self {
            grid,
            spec,
            potential_centers,
            potential_interfaces,
            weights: None,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn spec(&self) -> &ProblemSpec1D {
        &self.spec
    }

    /// `V(x_j)` at the cell centers.
    pub fn potential_at_centers(&self) -> &[f64] {
        &self.potential_centers
    }

    fn convolve_row(&self, row: usize, point: f64, rho: &[f64]) -> Result<f64> {
        match &self.weights {
            Some(weights) => {
                let n = self.grid.len();
                let mut acc = 0.0;
                for (&w, &r) in weights[row * n..(row + 1) * n].iter().zip(rho) {
                    acc += w * r;
                }
                Ok(acc)
            }
            None => convolve_slice_1d(&self.grid, &self.spec, rho, point),
        }
    }

    /// `g_j = sum_i h_i W(x_i - x_j) rho_i` at every center (no intensity).
    pub fn convolution_at_centers(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: rho.len(),
            });
        }
        if self.spec.kernel().is_none() {
            return Ok(vec![0.0; rho.len()]);
        }
        self.grid
            .centers()
            .iter()
            .enumerate()
            .map(|(j, &x)| self.convolve_row(j, x, rho))
            .collect()
    }

    pub fn profile(&self, rho: &[f64]) -> Result<MobilityProfile> {
        let n = self.grid.len();
        if rho.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: rho.len(),
            });
        }
        let interacting = self.spec.has_interaction();
        let intensity = self.spec.intensity();
        let mut at_centers = Vec::with_capacity(n);
        for (j, (&x, &v)) in self.grid.centers().iter().zip(&self.potential_centers).enumerate() {
            let conv = if interacting { self.convolve_row(j, x, rho)? } else { 0.0 };
            at_centers.push(guarded_exp(v + intensity * conv, || format!("x = {x}"))?);
        }
        let mut at_interfaces = Vec::with_capacity(n - 1);
        for (j, (&x, &v)) in self
            .grid
            .interfaces()
            .iter()
            .zip(&self.potential_interfaces)
            .enumerate()
        {
            let conv = if interacting { self.convolve_row(n + j, x, rho)? } else { 0.0 };
            at_interfaces.push(guarded_exp(v + intensity * conv, || format!("x = {x}"))?);
        }
        Ok(MobilityProfile {
            at_centers,
            at_interfaces,
        })
    }
}

/// How a [`MobilityEvaluator2D`] forms the double-sum convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy2D {
    /// Kernel evaluated on the fly for every pair.
    Direct,
    /// Every weight `h^x_k h^y_l W(.)` cached (small grids).
    Dense,
    /// Uniform grids: weights tabulated by integer cell offset.
    UniformOffsets,
}

#[derive(Clone)]
enum Weights2D {
    None,
    Direct,
    Dense(Vec<f64>),
    Offsets {
        centers: Vec<f64>,
        x_faces: Vec<f64>,
        y_faces: Vec<f64>,
    },
}

/// Which family of evaluation points a convolution is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PointKind {
    Center,
    XFace,
    YFace,
}

#[derive(Clone)]
pub struct MobilityEvaluator2D {
    grid: Grid2D,
    spec: ProblemSpec2D,
    areas: Vec<f64>,
    potential_centers: Vec<f64>,
    potential_x_faces: Vec<f64>,
    potential_y_faces: Vec<f64>,
    weights: Weights2D,
}

impl MobilityEvaluator2D {
    /// Picks offset tables on uniform grids, a dense cache on small grids,
    /// and direct evaluation otherwise.
    pub fn new(grid: Grid2D, spec: ProblemSpec2D) -> Result<Self> {
        let cells = grid.len();
        let points = cells + (grid.nx() - 1) * grid.ny() + grid.nx() * (grid.ny() - 1);
        let strategy = if grid.gx.is_uniform() && grid.gy.is_uniform() {
            Strategy2D::UniformOffsets
        } else if points * cells <= DENSE_TABLE_LIMIT {
            Strategy2D::Dense
        } else {
            Strategy2D::Direct
        };
        Self::with_strategy(grid, spec, strategy)
    }

    pub fn with_strategy(grid: Grid2D, spec: ProblemSpec2D, strategy: Strategy2D) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut potential_centers = Vec::with_capacity(nx * ny);
        let mut potential_x_faces = Vec::with_capacity((nx - 1) * ny);
        let mut potential_y_faces = Vec::with_capacity(nx * (ny - 1));
        for &y in grid.gy.centers() {
            for &x in grid.gx.centers() {
                potential_centers.push(spec.potential(x, y));
            }
            for &x in grid.gx.interfaces() {
                potential_x_faces.push(spec.potential(x, y));
            }
        }
        for &y in grid.gy.interfaces() {
            for &x in grid.gx.centers() {
                potential_y_faces.push(spec.potential(x, y));
            }
        }
        let areas = grid.areas();
        let mut eval = Self {
            grid,
            spec,
            areas,
            potential_centers,
            potential_x_faces,
            potential_y_faces,
            weights: Weights2D::None,
        };
        if eval.spec.has_interaction() {
            eval.weights = match strategy {
                Strategy2D::Direct => Weights2D::Direct,
                Strategy2D::Dense => eval.dense_weights()?,
                Strategy2D::UniformOffsets => eval.offset_weights()?,
            };
        }
        Ok(eval)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn spec(&self) -> &ProblemSpec2D {
        &self.spec
    }

    pub fn potential_at_centers(&self) -> &[f64] {
        &self.potential_centers
    }

    fn points(&self, kind: PointKind) -> (&[f64], &[f64]) {
        let g = &self.grid;
        match kind {
            PointKind::Center => (g.gx.centers(), g.gy.centers()),
            PointKind::XFace => (g.gx.interfaces(), g.gy.centers()),
            PointKind::YFace => (g.gx.centers(), g.gy.interfaces()),
        }
    }

    fn dense_weights(&self) -> Result<Weights2D> {
        let w = self.spec.kernel().expect("interaction present");
        let g = &self.grid;
        let mut out = Vec::new();
        for kind in [PointKind::Center, PointKind::XFace, PointKind::YFace] {
            let (px, py) = self.points(kind);
            for &y in py {
                for &x in px {
                    for (&yl, &hy) in g.gy.centers().iter().zip(g.gy.widths()) {
                        for (&xk, &hx) in g.gx.centers().iter().zip(g.gx.widths()) {
                            out.push(kernel_weight_2d(w, xk - x, yl - y, hx * hy)?);
                        }
                    }
                }
            }
        }
        Ok(Weights2D::Dense(out))
    }

    fn offset_weights(&self) -> Result<Weights2D> {
        let w = self.spec.kernel().expect("interaction present");
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (hx, hy) = (g.gx.widths()[0], g.gy.widths()[0]);
        let area = hx * hy;
        // offset m = (source index) - (point index), m in -(n-1)..=(n-1)
        let table = |x_shift: f64, y_shift: f64| -> Result<Vec<f64>> {
            let mut t = Vec::with_capacity((2 * nx - 1) * (2 * ny - 1));
            for my in -(ny as i64 - 1)..=(ny as i64 - 1) {
                let dy = (my as f64 - y_shift) * hy;
                for mx in -(nx as i64 - 1)..=(nx as i64 - 1) {
                    let dx = (mx as f64 - x_shift) * hx;
                    t.push(kernel_weight_2d(w, dx, dy, area)?);
                }
            }
            Ok(t)
        };
        // a face x_{i+1/2} lies half a cell right of center i
        Ok(Weights2D::Offsets {
            centers: table(0.0, 0.0)?,
            x_faces: table(0.5, 0.0)?,
            y_faces: table(0.0, 0.5)?,
        })
    }

    fn convolve_all(&self, kind: PointKind, rho: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (px, py) = self.points(kind);
        let (npx, npy) = (px.len(), py.len());
        let cells = nx * ny;
        let mut out = Vec::with_capacity(npx * npy);
        match &self.weights {
            Weights2D::None => out.resize(npx * npy, 0.0),
            Weights2D::Direct => {
                for &y in py {
                    for &x in px {
                        out.push(self.direct_sum(x, y, rho)?);
                    }
                }
            }
            Weights2D::Dense(all) => {
                let offset = match kind {
                    PointKind::Center => 0,
                    PointKind::XFace => cells,
                    PointKind::YFace => cells + (nx - 1) * ny,
                };
                for p in 0..npx * npy {
                    let row = &all[(offset + p) * cells..(offset + p + 1) * cells];
                    let mut acc = 0.0;
                    for (&wt, &r) in row.iter().zip(rho) {
                        acc += wt * r;
                    }
                    out.push(acc);
                }
            }
            Weights2D::Offsets {
                centers,
                x_faces,
                y_faces,
            } => {
                let table = match kind {
                    PointKind::Center => centers,
                    PointKind::XFace => x_faces,
                    PointKind::YFace => y_faces,
                };
                let stride = 2 * nx - 1;
                for j in 0..npy {
                    for i in 0..npx {
                        let mut acc = 0.0;
                        for l in 0..ny {
                            let my = l + ny - 1 - j;
                            // k - i + nx - 1 for k = 0..nx
                            let start = my * stride + (nx - 1 - i);
                            let trow = &table[start..start + nx];
                            let rrow = &rho[l * nx..(l + 1) * nx];
                            for (&wt, &r) in trow.iter().zip(rrow) {
                                acc += wt * r;
                            }
                        }
                        out.push(acc);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Convolution (no intensity) at every cell center, row-major.
    pub fn convolution_at_centers(&self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: rho.len(),
            });
        }
        if self.spec.kernel().is_none() {
            return Ok(vec![0.0; rho.len()]);
        }
        if matches!(self.weights, Weights2D::None) {
            // kernel present but switched off by a zero intensity
            let g = &self.grid;
            let mut out = Vec::with_capacity(g.len());
            for &y in g.gy.centers() {
                for &x in g.gx.centers() {
                    out.push(self.direct_sum(x, y, rho)?);
                }
            }
            return Ok(out);
        }
        self.convolve_all(PointKind::Center, rho)
    }

    /// `sum_{k,l} h^x_k h^y_l W(x_k - x, y_l - y) rho_{k,l}` in row-major order.
    fn direct_sum(&self, x: f64, y: f64, rho: &[f64]) -> Result<f64> {
        let w = self.spec.kernel().expect("kernel present");
        let g = &self.grid;
        let mut acc = 0.0;
        let mut p = 0;
        for (&yl, &hy) in g.gy.centers().iter().zip(g.gy.widths()) {
            for (&xk, &hx) in g.gx.centers().iter().zip(g.gx.widths()) {
                acc += kernel_weight_2d(w, xk - x, yl - y, hx * hy)? * rho[p];
                p += 1;
            }
        }
        Ok(acc)
    }

    pub fn profile(&self, rho: &[f64]) -> Result<MobilityProfile2D> {
        if rho.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                found: rho.len(),
            });
        }
        let intensity = self.spec.intensity();
        let finish = |kind: PointKind, potential: &[f64]| -> Result<Vec<f64>> {
            let conv = self.convolve_all(kind, rho)?;
            let (px, _) = self.points(kind);
            let npx = px.len();
            potential
                .iter()
                .zip(&conv)
                .enumerate()
                .map(|(p, (&v, &c))| {
                    guarded_exp(v + intensity * c, || {
                        let (px, py) = self.points(kind);
                        format!("({}, {})", px[p % npx], py[p / npx])
                    })
                })
                .collect()
        };
        Ok(MobilityProfile2D {
            at_centers: finish(PointKind::Center, &self.potential_centers)?,
            at_x_faces: finish(PointKind::XFace, &self.potential_x_faces)?,
            at_y_faces: finish(PointKind::YFace, &self.potential_y_faces)?,
        })
    }

    /// Cell areas `h^x_i h^y_j`, row-major.
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }
}
