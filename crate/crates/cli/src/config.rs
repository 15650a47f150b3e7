//! JSON run configuration. Every field has a default and unknown keys are
//! rejected; unset grid, step and time fields fall back to the chosen
//! problem's defaults.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use gradflow_core::Scheme;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemChoice,
    /// Interaction strength of `doi_onsager`.
    pub alpha: Option<f64>,
    /// Mass regime of `keller_segel`.
    pub regime: Option<Regime>,
    pub grid: Option<GridConfig>,
    pub tau: Option<TauRule>,
    pub scheme: Option<SchemeName>,
    pub limiter: bool,
    pub t_end: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub output_dir: String,
    /// File name prefix; defaults to the problem id.
    pub prefix: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemChoice::Id("accuracy1d".into()),
            alpha: None,
            regime: None,
            grid: None,
            tau: None,
            scheme: None,
            limiter: true,
            t_end: None,
            snapshots: None,
            output_dir: "output".into(),
            prefix: None,
        }
    }
}

impl RunConfig {
    pub fn for_problem(id: &str) -> Self {
        Self {
            problem: ProblemChoice::Id(id.into()),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: Self = serde_json::from_str(text).context("invalid run configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks the field-level invariants that do not need the problem.
    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(tau) = &self.tau {
            tau.validate()?;
        }
        if let Some(t) = self.t_end {
            if !(t.is_finite() && t > 0.0) {
                bail!("t_end must be positive, got {t}");
            }
        }
        if let Some(snaps) = &self.snapshots {
            if let Some(s) = snaps.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                bail!("snapshot time {s} is not a nonnegative number");
            }
            if let Some(t) = self.t_end {
                if let Some(s) = snaps.iter().find(|s| **s > t * (1.0 + 1e-12)) {
                    bail!("snapshot time {s} exceeds t_end {t}");
                }
            }
        }
        if let Some(grid) = &self.grid {
            grid.validate()?;
        }
        if let Some(a) = self.alpha {
            if !a.is_finite() {
                bail!("alpha must be finite");
            }
        }
        Ok(())
    }
}

/// A catalog id or a problem written out in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemChoice {
    Id(String),
    Inline(InlineProblem),
}

/// Expressions in `x` (and `y`), `t` where time enters. The kernel is
/// written in the displacement, also named `x` (and `y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InlineProblem {
    pub name: String,
    /// `[a, b]` in 1D, `[ax, bx, ay, by]` in 2D.
    pub domain: Vec<f64>,
    pub potential: String,
    pub kernel: Option<String>,
    pub intensity: f64,
    pub source: Option<String>,
    pub initial: String,
    pub exact: Option<String>,
}

impl Default for InlineProblem {
    fn default() -> Self {
        Self {
            name: "inline".into(),
            domain: vec![0.0, 1.0],
            potential: "0".into(),
            kernel: None,
            intensity: 1.0,
            source: None,
            initial: "1".into(),
            exact: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Super,
}

/// `n` or `widths` in 1D, `nx` and `ny` in 2D.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: Option<usize>,
    pub widths: Option<Vec<f64>>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

impl GridConfig {
    pub fn cells(n: usize) -> Self {
        Self {
            n: Some(n),
            ..Self::default()
        }
    }

    pub fn square(n: usize) -> Self {
        Self {
            nx: Some(n),
            ny: Some(n),
            ..Self::default()
        }
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.n.is_some() && self.widths.is_some() {
            bail!("grid: give either n or widths, not both");
        }
        for (name, v) in [("n", self.n), ("nx", self.nx), ("ny", self.ny)] {
            if v == Some(0) {
                bail!("grid: {name} must be positive");
            }
        }
        Ok(())
    }
}

/// Time step: a fixed value or a multiple of `h` or `h^2`, with `h` the
/// largest cell width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum TauRule {
    Fixed { value: f64 },
    H { coefficient: f64 },
    H2 { coefficient: f64 },
}

impl TauRule {
    pub fn validate(&self) -> anyhow::Result<()> {
        let c = match self {
            TauRule::Fixed { value } => value,
            TauRule::H { coefficient } | TauRule::H2 { coefficient } => coefficient,
        };
        if !(c.is_finite() && *c > 0.0) {
            bail!("tau rule coefficient must be positive, got {c}");
        }
        Ok(())
    }

    pub fn tau(&self, h: f64) -> f64 {
        match *self {
            TauRule::Fixed { value } => value,
            TauRule::H { coefficient } => coefficient * h,
            TauRule::H2 { coefficient } => coefficient * h * h,
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::Fixed { value } => write!(f, "fixed:{value}"),
            TauRule::H { coefficient } => write!(f, "{coefficient}*h"),
            TauRule::H2 { coefficient } => write!(f, "{coefficient}*h^2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    First,
    Second,
    Explicit,
}

impl SchemeName {
    pub fn scheme(self) -> Scheme {
        match self {
            SchemeName::First => Scheme::FirstOrder,
            SchemeName::Second => Scheme::SecondOrder,
            SchemeName::Explicit => Scheme::ExplicitEuler,
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeName::First => "first",
            SchemeName::Second => "second",
            SchemeName::Explicit => "explicit",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_takes_every_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{
            "problem": "doi_onsager", "alpha": 5.0,
            "grid": {"n": 80}, "tau": {"rule": "fixed", "value": 0.1},
            "scheme": "second", "limiter": false, "t_end": 35.0,
            "snapshots": [0.0, 0.5, 35.0], "output_dir": "out", "prefix": "do5"
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.alpha, Some(5.0));
        assert_eq!(c.tau, Some(TauRule::Fixed { value: 0.1 }));
        assert_eq!(c.scheme, Some(SchemeName::Second));
        let again = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn inline_problem_parses() {
        let c = RunConfig::from_json(r#"{"problem": {"domain": [0, 2], "initial": "1 + x"}}"#).unwrap();
        match c.problem {
            ProblemChoice::Inline(p) => {
                assert_eq!(p.domain, vec![0.0, 2.0]);
                assert_eq!(p.potential, "0");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"problem": "accuracy1d", "tau_rule": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid": {"n": 4, "m": 2}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tau": {"rule": "h", "coefficient": 1, "extra": 0}}"#).is_err());
    }

    #[test]
    fn invariants_are_checked() {
        assert!(RunConfig::from_json(r#"{"tau": {"rule": "h2", "coefficient": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"t_end": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"t_end": 1, "snapshots": [0.5, 2]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid": {"n": 0}}"#).is_err());
    }

    #[test]
    fn tau_rules() {
        assert_eq!(TauRule::Fixed { value: 0.1 }.tau(0.5), 0.1);
        assert_eq!(TauRule::H { coefficient: 0.1 }.tau(0.5), 0.05);
        assert_eq!(TauRule::H2 { coefficient: 1.0 }.tau(0.5), 0.25);
        assert_eq!(TauRule::H2 { coefficient: 1.0 }.to_string(), "1*h^2");
    }
}
