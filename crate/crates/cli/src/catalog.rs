//! Built-in benchmark problems and inline problems from the config.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::{bail, Context};
use exmex::prelude::*;
use gradflow_core::{Grid1D, Grid2D, ProblemSpec1D, ProblemSpec2D};

use crate::config::{GridConfig, InlineProblem, ProblemChoice, Regime, RunConfig, SchemeName, TauRule};

/// Exact solution `rho(x, t)`.
pub type Exact1 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Exact solution `rho(x, y, t)`.
pub type Exact2 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ProblemKind {
    OneD { spec: ProblemSpec1D, exact: Option<Exact1> },
    TwoD { spec: ProblemSpec2D, exact: Option<Exact2> },
}

/// Settings a run takes when the config leaves them unset.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub grid: GridConfig,
    pub tau: TauRule,
    pub scheme: SchemeName,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Clone)]
pub struct Problem {
    pub id: String,
    pub summary: String,
    pub kind: ProblemKind,
    pub defaults: Defaults,
    /// Extra `key=value` pairs for output metadata.
    pub notes: Vec<(String, String)>,
}

impl Problem {
    pub fn has_exact(&self) -> bool {
        match &self.kind {
            ProblemKind::OneD { exact, .. } => exact.is_some(),
            ProblemKind::TwoD { exact, .. } => exact.is_some(),
        }
    }

    pub fn is_2d(&self) -> bool {
        matches!(self.kind, ProblemKind::TwoD { .. })
    }
}

pub const PROBLEM_IDS: [&str; 6] = [
    "accuracy1d",
    "fokker_planck",
    "doi_onsager",
    "accuracy2d",
    "keller_segel",
    "touching_zero",
];

/// Every built-in problem with its default parameters
/// (`alpha = 3`, sub-critical Keller–Segel).
pub fn builtin_problems() -> Vec<Problem> {
    PROBLEM_IDS
        .iter()
        .map(|id| builtin(id, None, None).expect("catalog entries are valid"))
        .collect()
}

/// The problem a config asks for.
pub fn resolve(config: &RunConfig) -> anyhow::Result<Problem> {
    match &config.problem {
        ProblemChoice::Id(id) => builtin(id, config.alpha, config.regime),
        ProblemChoice::Inline(p) => inline(p),
    }
}

pub fn builtin(id: &str, alpha: Option<f64>, regime: Option<Regime>) -> anyhow::Result<Problem> {
    match id {
        "accuracy1d" => accuracy_1d(),
        "fokker_planck" => fokker_planck(),
        "doi_onsager" => doi_onsager(alpha.unwrap_or(3.0)),
        "accuracy2d" => accuracy_2d(),
        "keller_segel" => keller_segel(regime.unwrap_or(Regime::Sub)),
        "touching_zero" => touching_zero(),
        other => bail!("unknown problem '{other}'; known: {}", PROBLEM_IDS.join(", ")),
    }
}

fn accuracy_1d() -> anyhow::Result<Problem> {
    let source = |x: f64, t: f64| {
        let c = x.cos();
        let q = 2.0 * c * c + 2.0 * c;
        PI * (-2.0 * t).exp() * (q - 1.0) + (-t).exp() * (q - 3.0)
    };
    let spec = ProblemSpec1D::builder(-PI, PI)
        .potential(f64::cos)
        .kernel(f64::cos)
        .source(source)
        .initial(|x| 2.0 + x.cos())
        .build()?;
    Ok(Problem {
        id: "accuracy1d".into(),
        summary: "manufactured rho = e^-t (2 + cos x), V = W = cos x on [-pi, pi]".into(),
        kind: ProblemKind::OneD {
            spec,
            exact: Some(Arc::new(|x, t| (-t).exp() * (2.0 + x.cos()))),
        },
        defaults: Defaults {
            grid: GridConfig::cells(40),
            tau: TauRule::H2 { coefficient: 1.0 },
            scheme: SchemeName::First,
            t_end: 1.0,
            snapshots: vec![0.0, 1.0],
        },
        notes: Vec::new(),
    })
}

/// `(1/7) int_{-5}^{5} e^{-x^2/2} dx`, the plateau height of the initial data.
pub fn fokker_planck_plateau() -> f64 {
    let n = 10_000;
    let h = 10.0 / n as f64;
    let f = |x: f64| (-0.5 * x * x).exp();
    // Composite Simpson.
    let mut s = f(-5.0) + f(5.0);
    for k in 1..n {
        let x = -5.0 + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0 / 7.0
}

fn fokker_planck() -> anyhow::Result<Problem> {
    let c = fokker_planck_plateau();
    let spec = ProblemSpec1D::builder(-5.0, 5.0)
        .potential(|x| 0.5 * x * x)
        .initial(move |x| if x.abs() <= 3.5 { c } else { 0.0 })
        .build()?;
    Ok(Problem {
        id: "fokker_planck".into(),
        summary: "linear Fokker-Planck, V = x^2/2, plateau initial data on [-5, 5]".into(),
        kind: ProblemKind::OneD { spec, exact: None },
        defaults: Defaults {
            grid: GridConfig::cells(200),
            tau: TauRule::Fixed { value: 0.1 },
            scheme: SchemeName::First,
            t_end: 4.0,
            snapshots: vec![0.0, 0.2, 0.5, 1.0, 4.0],
        },
        notes: vec![("plateau".into(), format!("{c:.16e}"))],
    })
}

fn doi_onsager(alpha: f64) -> anyhow::Result<Problem> {
    let spec = ProblemSpec1D::builder(0.0, 2.0 * PI)
        .kernel(|s| s.sin().powi(2))
        .intensity(alpha)
        .initial(|x| (x + 1.0) / (2.0 * PI * (PI + 1.0)))
        .build()?;
    let (t_end, snapshots) = if alpha <= 4.0 {
        (30.0, vec![0.0, 0.5, 5.0, 15.0, 25.0, 30.0])
    } else {
        (35.0, vec![0.0, 0.5, 1.0, 5.0, 25.0, 35.0])
    };
    Ok(Problem {
        id: "doi_onsager".into(),
        summary: "Doi-Onsager with Maier-Saupe kernel sin^2, zero-flux on [0, 2 pi]".into(),
        kind: ProblemKind::OneD { spec, exact: None },
        defaults: Defaults {
            grid: GridConfig::cells(80),
            tau: TauRule::Fixed { value: 0.1 },
            scheme: SchemeName::First,
            t_end,
            snapshots,
        },
        notes: vec![("alpha".into(), alpha.to_string())],
    })
}

fn accuracy_2d() -> anyhow::Result<Problem> {
    let half = 0.5 * PI;
    let source = |x: f64, y: f64, t: f64| {
        let (sx, cx, sy, cy) = (x.sin(), x.cos(), y.sin(), y.cos());
        let s = sx * sy;
        (-t).exp() * (2.0 * s * s + 5.0 * s - cx * cx * sy * sy - sx * sx * cy * cy - 2.0)
    };
    let spec = ProblemSpec2D::builder((-half, half), (-half, half))
        .potential(|x, y| x.sin() * y.sin())
        .source(source)
        .initial(|x, y| 2.0 + x.sin() * y.sin())
        .build()?;
    Ok(Problem {
        id: "accuracy2d".into(),
        summary: "manufactured rho = e^-t (2 + sin x sin y), V = sin x sin y on [-pi/2, pi/2]^2".into(),
        kind: ProblemKind::TwoD {
            spec,
            exact: Some(Arc::new(|x, y, t| (-t).exp() * (2.0 + x.sin() * y.sin()))),
        },
        defaults: Defaults {
            grid: GridConfig::square(10),
            tau: TauRule::H2 { coefficient: 0.1 },
            scheme: SchemeName::First,
            t_end: 1.0,
            snapshots: vec![0.0, 1.0],
        },
        notes: Vec::new(),
    })
}

fn keller_segel(regime: Regime) -> anyhow::Result<Problem> {
    let (half, height, t_end, snapshots, label) = match regime {
        Regime::Sub => (5.0, 2.0 * (PI - 0.2), 16.0, vec![0.0, 2.0, 8.0, 12.0, 16.0], "sub"),
        Regime::Super => (1.5, 2.0 * (PI + 0.2), 2.0, vec![0.0, 0.5, 1.0, 1.5, 2.0], "super"),
    };
    let spec = ProblemSpec2D::builder((-half, half), (-half, half))
        .kernel(|x, y| x.hypot(y).ln() / (2.0 * PI))
        .initial(move |x, y| if x.abs() <= 1.0 && y.abs() <= 1.0 { height } else { 0.0 })
        .build()?;
    Ok(Problem {
        id: "keller_segel".into(),
        summary: "parabolic-elliptic Keller-Segel, W = log(r) / (2 pi), indicator data on [-1, 1]^2".into(),
        kind: ProblemKind::TwoD { spec, exact: None },
        defaults: Defaults {
            grid: GridConfig::square(51),
            tau: TauRule::Fixed { value: 0.01 },
            scheme: SchemeName::First,
            t_end,
            snapshots,
        },
        notes: vec![
            ("regime".into(), label.into()),
            ("initial_mass".into(), format!("{:.16e}", 4.0 * height)),
        ],
    })
}

/// Amplitude swing and frequency of `touching_zero`.
const SWING: f64 = 0.9;
const FREQ: f64 = 5.0;

fn touching_zero() -> anyhow::Result<Problem> {
    let amp = |t: f64| 1.0 + SWING * (FREQ * t).sin();
    let source = move |x: f64, t: f64| {
        (1.0 - x.cos()) * SWING * FREQ * (FREQ * t).cos() - x.cos() * amp(t)
    };
    let spec = ProblemSpec1D::builder(-PI, PI)
        .source(source)
        .initial(|x| 1.0 - x.cos())
        .build()?;
    Ok(Problem {
        id: "touching_zero".into(),
        summary: "manufactured rho = (1 - cos x)(1 + 0.9 sin 5t) touching zero at x = 0, V = W = 0".into(),
        kind: ProblemKind::OneD {
            spec,
            exact: Some(Arc::new(move |x, t| (1.0 - x.cos()) * amp(t))),
        },
        defaults: Defaults {
            grid: GridConfig::cells(80),
            tau: TauRule::H { coefficient: 1.0 },
            scheme: SchemeName::Second,
            t_end: 1.0,
            snapshots: vec![0.0, 1.0],
        },
        notes: Vec::new(),
    })
}

type Compiled = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// exmex binds a unary minus tighter than `^`, so `-x^2` would be `(-x)^2`.
/// A minus that opens an expression or a bracket becomes `0-`, which gives
/// the usual `-(x^2)`.
fn binary_minus(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let mut prev = None;
    for ch in text.chars() {
        if ch == '-' && matches!(prev, None | Some('(') | Some(',')) {
            out.push('0');
        }
        out.push(ch);
        if !ch.is_whitespace() {
            prev = Some(ch);
        }
    }
    out
}

/// Compiles `text` as a function of the variables in `allowed`, called
/// with arguments in that order.
fn compile(text: &str, allowed: &[&str]) -> anyhow::Result<Compiled> {
    let expr = exmex::parse::<f64>(&binary_minus(text)).with_context(|| format!("cannot parse expression '{text}'"))?;
    let mut order = Vec::new();
    for name in expr.var_names() {
        match allowed.iter().position(|a| a == name) {
            Some(i) => order.push(i),
            None => bail!("expression '{text}' uses '{name}'; allowed: {}", allowed.join(", ")),
        }
    }
    Ok(Arc::new(move |args: &[f64]| {
        let vals: Vec<f64> = order.iter().map(|&i| args[i]).collect();
        expr.eval(&vals).unwrap_or(f64::NAN)
    }))
}

fn inline(p: &InlineProblem) -> anyhow::Result<Problem> {
    let defaults_1d = Defaults {
        grid: GridConfig::cells(40),
        tau: TauRule::H2 { coefficient: 1.0 },
        scheme: SchemeName::First,
        t_end: 1.0,
        snapshots: vec![0.0, 1.0],
    };
    let kind = match p.domain.as_slice() {
        &[a, b] => {
            let v = compile(&p.potential, &["x"])?;
            let r0 = compile(&p.initial, &["x"])?;
            let mut builder = ProblemSpec1D::builder(a, b)
                .potential(move |x| v(&[x]))
                .initial(move |x| r0(&[x]))
                .intensity(p.intensity);
            if let Some(w) = &p.kernel {
                let w = compile(w, &["x"])?;
                builder = builder.kernel(move |s| w(&[s]));
            }
            if let Some(f) = &p.source {
                let f = compile(f, &["x", "t"])?;
                builder = builder.source(move |x, t| f(&[x, t]));
            }
            let exact: Option<Exact1> = match &p.exact {
                Some(e) => {
                    let e = compile(e, &["x", "t"])?;
                    Some(Arc::new(move |x, t| e(&[x, t])))
                }
                None => None,
            };
            ProblemKind::OneD {
                spec: builder.build()?,
                exact,
            }
        }
        &[ax, bx, ay, by] => {
            let v = compile(&p.potential, &["x", "y"])?;
            let r0 = compile(&p.initial, &["x", "y"])?;
            let mut builder = ProblemSpec2D::builder((ax, bx), (ay, by))
                .potential(move |x, y| v(&[x, y]))
                .initial(move |x, y| r0(&[x, y]))
                .intensity(p.intensity);
            if let Some(w) = &p.kernel {
                let w = compile(w, &["x", "y"])?;
                builder = builder.kernel(move |x, y| w(&[x, y]));
            }
            if let Some(f) = &p.source {
                let f = compile(f, &["x", "y", "t"])?;
                builder = builder.source(move |x, y, t| f(&[x, y, t]));
            }
            let exact: Option<Exact2> = match &p.exact {
                Some(e) => {
                    let e = compile(e, &["x", "y", "t"])?;
                    Some(Arc::new(move |x, y, t| e(&[x, y, t])))
                }
                None => None,
            };
            ProblemKind::TwoD {
                spec: builder.build()?,
                exact,
            }
        }
        other => bail!("inline domain needs 2 or 4 numbers, got {}", other.len()),
    };
    let defaults = match kind {
        ProblemKind::OneD { .. } => defaults_1d,
        ProblemKind::TwoD { .. } => Defaults {
            grid: GridConfig::square(10),
            ..defaults_1d
        },
    };
    Ok(Problem {
        id: p.name.clone(),
        summary: "inline".into(),
        kind,
        defaults,
        notes: Vec::new(),
    })
}

/// The 1D grid a config asks for on `spec`'s domain.
pub fn grid_1d(spec: &ProblemSpec1D, grid: &GridConfig) -> anyhow::Result<Grid1D> {
    let (a, b) = spec.domain();
    if grid.nx.is_some() || grid.ny.is_some() {
        bail!("nx/ny given for a 1D problem");
    }
    Ok(match (&grid.widths, grid.n) {
        (Some(w), _) => Grid1D::from_widths(a, b, w)?,
        (None, Some(n)) => Grid1D::uniform(a, b, n)?,
        (None, None) => bail!("1D grid needs n or widths"),
    })
}

pub fn grid_2d(spec: &ProblemSpec2D, grid: &GridConfig) -> anyhow::Result<Grid2D> {
    if grid.n.is_some() || grid.widths.is_some() {
        bail!("n/widths given for a 2D problem; use nx and ny");
    }
    let (Some(nx), Some(ny)) = (grid.nx, grid.ny) else {
        bail!("2D grid needs nx and ny");
    };
    Ok(Grid2D::uniform(spec.x_range(), spec.y_range(), nx, ny)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gradflow_core::diagnostics::total_mass_1d;
    use gradflow_core::{cell_average_init_1d, SelfTermPolicy};

    #[test]
    fn catalog_is_complete_and_valid() {
        let all = builtin_problems();
        let ids: Vec<&str> = all.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, PROBLEM_IDS);
        for p in &all {
            assert!(p.defaults.t_end > 0.0);
            assert!(p.defaults.snapshots.iter().all(|&s| s <= p.defaults.t_end));
        }
        assert!(builtin("nope", None, None).is_err());
    }

    #[test]
    fn manufactured_sources_balance_the_exact_solutions() {
        // Central differences of the exact solutions reproduce the sources.
        let p = accuracy_1d().unwrap();
        let ProblemKind::OneD { spec, exact: Some(exact) } = &p.kind else { panic!() };
        let f = spec.source().unwrap();
        let (x, t, d) = (0.7, 0.3, 1e-4);
        let rho = |x: f64| exact(x, t);
        let flux = |x: f64| {
            let dr = (rho(x + d) - rho(x - d)) / (2.0 * d);
            dr + rho(x) * (-x.sin() - (-t).exp() * PI * x.sin())
        };
        let dt = (exact(x, t + d) - exact(x, t - d)) / (2.0 * d);
        let div = (flux(x + d) - flux(x - d)) / (2.0 * d);
        assert!((dt - div - f(x, t)).abs() < 1e-6);

        let p = accuracy_2d().unwrap();
        let ProblemKind::TwoD { spec, exact: Some(exact) } = &p.kind else { panic!() };
        let f = spec.source().unwrap();
        let (x, y) = (0.3, -0.8);
        let rho = |x: f64, y: f64| exact(x, y, t);
        let fx = |x: f64, y: f64| {
            (rho(x + d, y) - rho(x - d, y)) / (2.0 * d) + rho(x, y) * x.cos() * y.sin()
        };
        let fy = |x: f64, y: f64| {
            (rho(x, y + d) - rho(x, y - d)) / (2.0 * d) + rho(x, y) * x.sin() * y.cos()
        };
        let dt = (exact(x, y, t + d) - exact(x, y, t - d)) / (2.0 * d);
        let div = (fx(x + d, y) - fx(x - d, y)) / (2.0 * d) + (fy(x, y + d) - fy(x, y - d)) / (2.0 * d);
        assert!((dt - div - f(x, y, t)).abs() < 1e-5);

        let p = touching_zero().unwrap();
        let ProblemKind::OneD { spec, exact: Some(exact) } = &p.kind else { panic!() };
        let f = spec.source().unwrap();
        let dt = (exact(x, t + d) - exact(x, t - d)) / (2.0 * d);
        let lap = (exact(x + d, t) - 2.0 * exact(x, t) + exact(x - d, t)) / (d * d);
        assert!((dt - lap - f(x, t)).abs() < 1e-5);
    }

    #[test]
    fn fokker_planck_mass_matches_gaussian_integral() {
        let p = fokker_planck().unwrap();
        let ProblemKind::OneD { spec, .. } = &p.kind else { panic!() };
        let g = grid_1d(spec, &p.defaults.grid).unwrap();
        let rho = cell_average_init_1d(|x| spec.initial(x), &g).unwrap();
        let mass = total_mass_1d(&rho, &g).unwrap();
        // int_{-5}^{5} e^{-x^2/2} = sqrt(2 pi) erf(5 / sqrt 2).
        let reference = 2.506_628_274_631_000_5 * (1.0 - 5.733_031_438_470_704e-7);
        assert!((mass - reference).abs() < 1e-9, "{mass} {reference}");
        assert!((fokker_planck_plateau() * 7.0 - reference).abs() < 1e-12);
    }

    #[test]
    fn keller_segel_kernel_skips_the_self_pair() {
        for regime in [Regime::Sub, Regime::Super] {
            let p = keller_segel(regime).unwrap();
            let ProblemKind::TwoD { spec, .. } = &p.kind else { panic!() };
            assert_eq!(spec.self_term(), SelfTermPolicy::SkipSingular);
        }
    }

    #[test]
    fn inline_expressions_compile() {
        let p = InlineProblem {
            domain: vec![0.0, 2.0],
            potential: "x^2".into(),
            kernel: Some("cos(x)".into()),
            source: Some("x * t".into()),
            initial: "1 + x".into(),
            exact: Some("t + x".into()),
            ..InlineProblem::default()
        };
        let prob = inline(&p).unwrap();
        let ProblemKind::OneD { spec, exact: Some(e) } = &prob.kind else { panic!() };
        assert_eq!(spec.potential(3.0), 9.0);
        assert_eq!(spec.initial(0.5), 1.5);
        assert_eq!(spec.source().unwrap()(2.0, 3.0), 6.0);
        assert_eq!(e(1.0, 2.0), 3.0);

        let p2 = InlineProblem {
            domain: vec![0.0, 1.0, 0.0, 2.0],
            potential: "x * y".into(),
            ..InlineProblem::default()
        };
        let prob = inline(&p2).unwrap();
        let ProblemKind::TwoD { spec, .. } = &prob.kind else { panic!() };
        assert_eq!(spec.potential(2.0, 3.0), 6.0);

        let bad = InlineProblem {
            potential: "z".into(),
            ..InlineProblem::default()
        };
        assert!(inline(&bad).is_err());
        let bad = InlineProblem {
            domain: vec![0.0, 1.0, 2.0],
            ..InlineProblem::default()
        };
        assert!(inline(&bad).is_err());
    }
}
