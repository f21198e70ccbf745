use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Closed-form transition probabilities against path enumeration.
    ExactCheck,
    /// Rescaled lattice probabilities against their Gaussian limits.
    DensityScaling,
    /// Empirical leg-height law against the limit CDF.
    HeightDist,
    /// Walk/Brownian spider coupling distances.
    Coupling,
    /// Probability that every leg reaches height L (or k times).
    LegsGrowth,
    /// Urn filling against its Poisson limit.
    Coupon,
    /// Rescaled minimal leg height along single paths.
    HirschTrace,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ExactCheck => "exact-check",
            Kind::DensityScaling => "density-scaling",
            Kind::HeightDist => "height-dist",
            Kind::Coupling => "coupling",
            Kind::LegsGrowth => "legs-growth",
            Kind::Coupon => "coupon",
            Kind::HirschTrace => "hirsch-trace",
        }
    }

    /// Parameters the kind reads; anything else on the command line is a usage error.
    fn accepts(self) -> &'static [Param] {
        use Param::*;
        match self {
            Kind::ExactCheck => &[Legs, Steps, Weights],
            Kind::DensityScaling => &[Legs, Weights, Checkpoints, X, YGrid],
            Kind::HeightDist => &[Legs, Weights, Steps, YGrid],
            Kind::Coupling => &[Legs, Weights, Steps, Dt, Checkpoints],
            Kind::LegsGrowth => &[Legs, Height, C, FnMode, K, AllowOutsideRegime],
            Kind::Coupon => &[Legs, M, X],
            Kind::HirschTrace => &[Legs, Weights, Steps, Checkpoints, GPower],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FnMode {
    /// Scale factor log N.
    Up,
    /// Scale factor 1 / log N.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    Legs,
    Height,
    C,
    FnMode,
    K,
    YGrid,
    Checkpoints,
    Steps,
    Weights,
    M,
    X,
    Dt,
    GPower,
    AllowOutsideRegime,
}

impl Param {
    fn flag(self) -> &'static str {
        match self {
            Param::Legs => "--N",
            Param::Height => "--L",
            Param::C => "--c",
            Param::FnMode => "--fN-mode",
            Param::K => "--k",
            Param::YGrid => "--y-grid",
            Param::Checkpoints => "--checkpoints",
            Param::Steps => "--n",
            Param::Weights => "--weights",
            Param::M => "--m",
            Param::X => "--x",
            Param::Dt => "--dt",
            Param::GPower => "--g-power",
            Param::AllowOutsideRegime => "--allow-outside-regime",
        }
    }
}

/// Kind-specific parameters. Empty lists and `None` mean "use the default".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    /// Number of legs (or urns), possibly a sweep.
    pub legs: Vec<u32>,
    pub height: Option<u64>,
    pub c: Option<f64>,
    pub fn_mode: Option<FnMode>,
    pub k: Option<u64>,
    pub y_grid: Vec<f64>,
    pub checkpoints: Vec<u64>,
    /// Walk length.
    pub steps: Option<u64>,
    pub weights: Vec<f64>,
    pub m: Option<u64>,
    pub x: Vec<f64>,
    pub dt: Option<f64>,
    pub g_power: Option<f64>,
    pub allow_outside_regime: bool,
}

impl Params {
    fn given(&self) -> Vec<Param> {
        let mut v = Vec::new();
        let mut mark = |on: bool, p| {
            if on {
                v.push(p)
            }
        };
        mark(!self.legs.is_empty(), Param::Legs);
        mark(self.height.is_some(), Param::Height);
        mark(self.c.is_some(), Param::C);
        mark(self.fn_mode.is_some(), Param::FnMode);
        mark(self.k.is_some(), Param::K);
        mark(!self.y_grid.is_empty(), Param::YGrid);
        mark(!self.checkpoints.is_empty(), Param::Checkpoints);
        mark(self.steps.is_some(), Param::Steps);
        mark(!self.weights.is_empty(), Param::Weights);
        mark(self.m.is_some(), Param::M);
        mark(!self.x.is_empty(), Param::X);
        mark(self.dt.is_some(), Param::Dt);
        mark(self.g_power.is_some(), Param::GPower);
        mark(self.allow_outside_regime, Param::AllowOutsideRegime);
        v
    }
}

/// A fully described experiment.
///
/// Only `kind`, `params`, `seed` and `trials` determine the output; the
/// thread count and destination are excluded from the serialized echo so
/// that files written under different pools compare equal byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub params: Params,
    pub seed: u64,
    pub trials: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip, default = "default_format")]
    pub format: Format,
    /// File holding aggregate counts of long sweeps; reused when it exists.
    #[serde(skip)]
    pub resume: Option<PathBuf>,
}

fn default_format() -> Format {
    Format::JsonLines
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn geometric_checkpoints(first: u64, ratio: u64, last: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut c = first;
    while c < last {
        v.push(c);
        c *= ratio;
    }
    v.push(last);
    v
}

impl ExperimentSpec {
    pub fn new(kind: Kind, seed: u64, trials: u64) -> Self {
        Self {
            kind,
            params: Params::default(),
            seed,
            trials,
            threads: None,
            out: None,
            format: Format::JsonLines,
            resume: None,
        }
    }

    /// Checks the parameters and fills in defaults, so the echoed spec
    /// records exactly what ran.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let accepted = self.kind.accepts();
        if let Some(p) = self.params.given().into_iter().find(|p| !accepted.contains(p)) {
            return Err(usage(format!(
                "{} does not apply to --kind {}",
                p.flag(),
                self.kind.name()
            )));
        }
        if self.threads == Some(0) {
            return Err(usage("--threads must be positive"));
        }
        let p = &mut self.params;
        let stochastic = !matches!(self.kind, Kind::ExactCheck | Kind::DensityScaling);
        if stochastic && self.trials == 0 {
            return Err(usage("--trials must be positive"));
        }
        if p.legs.is_empty() {
            p.legs = match self.kind {
                Kind::LegsGrowth => vec![50, 200, 1000],
                Kind::Coupon => vec![10_000],
                _ => vec![3],
            };
        }
        if p.legs.contains(&0) {
            return Err(usage("--N must be positive"));
        }
        let sweeps = matches!(self.kind, Kind::LegsGrowth | Kind::Coupon);
        if !sweeps && p.legs.len() != 1 {
            return Err(usage(format!("--kind {} takes a single --N", self.kind.name())));
        }
        let n_legs = p.legs[0];
        if accepted.contains(&Param::Weights) {
            if p.weights.is_empty() {
                p.weights = vec![1.0 / n_legs as f64; n_legs as usize];
            } else if p.weights.len() != n_legs as usize {
                return Err(usage(format!(
                    "--weights has {} entries but --N is {n_legs}",
                    p.weights.len()
                )));
            }
            spider_walk::LegWeights::new(p.weights.clone()).map_err(|e| usage(e.to_string()))?;
        }
        match self.kind {
            Kind::ExactCheck => {
                let s = *p.steps.get_or_insert(6);
                if s > spider_walk::exact::MAX_ORACLE_STEPS {
                    return Err(usage(format!(
                        "--n {s} exceeds the enumeration limit of {}",
                        spider_walk::exact::MAX_ORACLE_STEPS
                    )));
                }
            }
            Kind::DensityScaling => {
                if p.checkpoints.is_empty() {
                    p.checkpoints = vec![100, 1_000, 10_000, 100_000];
                }
                if p.x.is_empty() {
                    p.x = vec![0.5];
                }
                if p.y_grid.is_empty() {
                    p.y_grid = vec![0.5];
                }
                if p.checkpoints.contains(&0) {
                    return Err(usage("--checkpoints must be positive"));
                }
                if p.x.iter().chain(&p.y_grid).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(usage("--x and --y-grid must be positive"));
                }
            }
            Kind::HeightDist => {
                if *p.steps.get_or_insert(10_000) == 0 {
                    return Err(usage("--n must be positive"));
                }
                if p.y_grid.is_empty() {
                    p.y_grid = (1..=12).map(|i| i as f64 * 0.25).collect();
                }
                if p.y_grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(usage("--y-grid must be positive"));
                }
            }
            Kind::Coupling => {
                let n = *p.steps.get_or_insert(4096);
                let dt = *p.dt.get_or_insert(1e-4);
                if n < 3 {
                    return Err(usage("--n must be at least 3"));
                }
                let k = (1.0 / dt).round();
                if !(dt > 0.0 && dt < 1.0 && (k * dt - 1.0).abs() < 1e-9) {
                    return Err(usage("--dt must be 1/k for an integer k > 1"));
                }
                if p.checkpoints.is_empty() {
                    p.checkpoints = geometric_checkpoints(4, 2, n);
                }
                if p.checkpoints.iter().any(|&c| c < 3 || c > n) {
                    return Err(usage("--checkpoints must lie in 3..=n"));
                }
            }
            Kind::LegsGrowth => {
                if *p.height.get_or_insert(1) == 0 {
                    return Err(usage("--L must be positive"));
                }
                if *p.k.get_or_insert(1) == 0 {
                    return Err(usage("--k must be positive"));
                }
                match (p.c, p.fn_mode) {
                    (Some(_), Some(_)) => return Err(usage("--c and --fN-mode are exclusive")),
                    (None, None) => p.c = Some(1.0),
                    (Some(c), None) if !(c.is_finite() && c > 0.0) => return Err(usage("--c must be positive")),
                    _ => {}
                }
                if p.legs.contains(&1) {
                    return Err(usage("--N must be at least 2 for legs-growth"));
                }
            }
            Kind::Coupon => {
                if *p.m.get_or_insert(1) == 0 {
                    return Err(usage("--m must be positive"));
                }
                if p.x.is_empty() {
                    p.x = vec![0.0];
                }
                if p.legs.iter().any(|&n| n < 3) {
                    return Err(usage("--N must be at least 3 for coupon"));
                }
                if p.x.iter().any(|v| !v.is_finite()) {
                    return Err(usage("--x must be finite"));
                }
            }
            Kind::HirschTrace => {
                let n = *p.steps.get_or_insert(100_000);
                if n < 3 {
                    return Err(usage("--n must be at least 3"));
                }
                if p.checkpoints.is_empty() {
                    p.checkpoints = geometric_checkpoints(10, 10, n);
                }
                if p.checkpoints.iter().any(|&c| c < 3 || c > n) {
                    return Err(usage("--checkpoints must lie in 3..=n"));
                }
                if !p.g_power.get_or_insert(1.0).is_finite() {
                    return Err(usage("--g-power must be finite"));
                }
            }
        }
        if !p.checkpoints.is_empty() {
            p.checkpoints.sort_unstable();
            p.checkpoints.dedup();
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let s = ExperimentSpec::new(Kind::Coupling, 1, 10).resolve().unwrap();
        assert_eq!(s.params.steps, Some(4096));
        assert_eq!(s.params.checkpoints.first(), Some(&4));
        assert_eq!(s.params.checkpoints.last(), Some(&4096));
        assert_eq!(s.params.weights.len(), 3);
    }

    #[test]
    fn foreign_flags_are_rejected() {
        let mut s = ExperimentSpec::new(Kind::Coupon, 1, 10);
        s.params.height = Some(2);
        assert!(matches!(s.resolve(), Err(CliError::Usage(m)) if m.contains("--L")));
    }

    #[test]
    fn scale_choices_are_exclusive() {
        let mut s = ExperimentSpec::new(Kind::LegsGrowth, 1, 10);
        s.params.c = Some(1.0);
        s.params.fn_mode = Some(FnMode::Up);
        assert!(s.resolve().is_err());
    }

    #[test]
    fn weights_must_match_legs() {
        let mut s = ExperimentSpec::new(Kind::HeightDist, 1, 10);
        s.params.weights = vec![0.5, 0.5];
        assert!(s.resolve().is_err());
    }

    #[test]
    fn coupling_dt_must_divide_unity() {
        let mut s = ExperimentSpec::new(Kind::Coupling, 1, 10);
        s.params.dt = Some(0.3);
        assert!(s.resolve().is_err());
    }
}
