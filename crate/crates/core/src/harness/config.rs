use crate::density::AnalyticDensity;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Exponential decay with a normal rate; intrusive Galerkin surrogates.
    Ode,
    /// Average of a manufactured elliptic solution; pseudo-spectral surrogates.
    Pde,
    /// `λ^5` on `[-1, 1]`; piecewise-linear surrogates.
    Singular,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ode => "ode",
            Self::Pde => "pde",
            Self::Singular => "singular",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ode" => Ok(Self::Ode),
            "pde" => Ok(Self::Pde),
            "singular" => Ok(Self::Singular),
            other => Err(Error::Config(format!(
                "unknown experiment `{other}` (expected ode, pde or singular)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpace {
    /// `L^r(D_c)` on the data space, Lebesgue measure.
    Data,
    /// `L^p` on the parameter space against the initial measure.
    Param,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub space: NormSpace,
    pub order: f64,
}

/// One observed density, named so several can share a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedCase {
    pub name: String,
    #[serde(flatten)]
    pub density: AnalyticDensity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<ObservedCase>),
    One(AnalyticDensity),
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub m: usize,
    pub orders: Vec<usize>,
    pub seed: u64,
    pub observed: Vec<ObservedCase>,
    pub norms: Vec<NormSpec>,
    pub output_dir: PathBuf,
    pub replicates: usize,
    pub initial: AnalyticDensity,
    /// Sample sizes for the bound and Lipschitz tables.
    pub table_sizes: Vec<usize>,
    /// The data-space region `D_c`.
    pub region: (f64, f64),
    pub region_samples: usize,
    /// Sample count for the rejection-sampling consistency check; the stage
    /// fits its own push-forward KDEs to these proposals.
    pub proposals: usize,
    pub probe_points: usize,
    pub quadrature_points: usize,
    pub t_end: f64,
    pub dt: f64,
}

/// Every field but `experiment` falls back to the experiment's preset.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    m: Option<usize>,
    orders: Option<Vec<usize>>,
    seed: Option<u64>,
    observed: Option<OneOrMany>,
    norms: Option<Vec<NormSpec>>,
    output_dir: Option<PathBuf>,
    replicates: Option<usize>,
    initial: Option<AnalyticDensity>,
    table_sizes: Option<Vec<usize>>,
    region: Option<(f64, f64)>,
    region_samples: Option<usize>,
    proposals: Option<usize>,
    probe_points: Option<usize>,
    quadrature_points: Option<usize>,
    t_end: Option<f64>,
    dt: Option<f64>,
}

fn normal(mean: f64, std: f64) -> AnalyticDensity {
    AnalyticDensity::Normal { mean, std }
}

fn case(name: &str, density: AnalyticDensity) -> ObservedCase {
    ObservedCase {
        name: name.into(),
        density,
    }
}

impl ExperimentConfig {
    /// The reference setup of each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut norms: Vec<NormSpec> = (1..=5)
            .map(|r| NormSpec {
                space: NormSpace::Data,
                order: r as f64,
            })
            .collect();
        norms.push(NormSpec {
            space: NormSpace::Param,
            order: 2.0,
        });
        let base = Self {
            experiment: kind,
            m: 10_000,
            orders: vec![1, 2, 3, 4, 5],
            seed: 2018,
            observed: vec![],
            norms,
            output_dir: PathBuf::from(format!("out/{}", kind.name())),
            replicates: 1,
            initial: normal(0.0, 1.0),
            table_sizes: vec![1_000, 10_000, 100_000],
            region: (0.0, 4.0),
            region_samples: 10_000,
            proposals: 200_000,
            probe_points: 401,
            quadrature_points: crate::polychaos::DEFAULT_QUADRATURE_POINTS,
            t_end: 0.5,
            dt: 1e-3,
        };
        match kind {
            ExperimentKind::Ode => Self {
                observed: vec![case("obs", normal(1.0, 0.1))],
                ..base
            },
            ExperimentKind::Pde => Self {
                observed: vec![case("obs", normal(0.3, 0.1))],
                initial: AnalyticDensity::ProductNormal {
                    means: vec![0.0, 0.0],
                    stds: vec![0.1, 0.1],
                },
                region: (-1.0, 1.0),
                // the observed density sits in the push-forward's tail, so M is large
                proposals: 400_000,
                ..base
            },
            ExperimentKind::Singular => Self {
                observed: vec![
                    case("I", normal(0.5, 0.1)),
                    case("II", normal(0.25, 0.1)),
                    case("III", normal(1.0, 0.1)),
                ],
                orders: vec![1, 2, 4, 8, 16],
                initial: AnalyticDensity::Uniform { lo: -1.0, hi: 1.0 },
                region: (-1.0, 1.0),
                ..base
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let p = Self::preset(raw.experiment);
        let observed = match raw.observed {
            None => p.observed,
            Some(OneOrMany::One(d)) => vec![case("obs", d)],
            Some(OneOrMany::Many(v)) => v,
        };
        let config = Self {
            experiment: raw.experiment,
            m: raw.m.unwrap_or(p.m),
            orders: raw.orders.unwrap_or(p.orders),
            seed: raw.seed.unwrap_or(p.seed),
            observed,
            norms: raw.norms.unwrap_or(p.norms),
            output_dir: raw.output_dir.unwrap_or(p.output_dir),
            replicates: raw.replicates.unwrap_or(p.replicates),
            initial: raw.initial.unwrap_or(p.initial),
            table_sizes: raw.table_sizes.unwrap_or(p.table_sizes),
            region: raw.region.unwrap_or(p.region),
            region_samples: raw.region_samples.unwrap_or(p.region_samples),
            proposals: raw.proposals.unwrap_or(p.proposals),
            probe_points: raw.probe_points.unwrap_or(p.probe_points),
            quadrature_points: raw.quadrature_points.unwrap_or(p.quadrature_points),
            t_end: raw.t_end.unwrap_or(p.t_end),
            dt: raw.dt.unwrap_or(p.dt),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m < 100 {
            return fail(format!("m must be at least 100, got {}", self.m));
        }
        if self.orders.is_empty() || self.orders.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("orders must be nonempty and strictly ascending, got {:?}", self.orders));
        }
        if self.orders[0] == 0 {
            return fail("surrogate orders start at 1".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if self.observed.is_empty() {
            return fail("at least one observed density is required".into());
        }
        let mut names: Vec<&str> = self.observed.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return fail(format!("observed case names must be unique, got {names:?}"));
        }
        for c in &self.observed {
            c.density
                .validate()
                .map_err(|e| Error::Config(format!("observed `{}`: {e}", c.name)))?;
            if c.density.moments().is_none() || matches!(c.density, AnalyticDensity::ProductNormal { .. }) {
                return fail(format!("observed `{}` must be a 1-D density", c.name));
            }
        }
        if let Some(n) = self.norms.iter().find(|n| !(n.order.is_finite() && n.order >= 1.0)) {
            return fail(format!("norm order must be at least 1, got {}", n.order));
        }
        if self.table_sizes.iter().any(|&s| s < 100) {
            return fail(format!("table sizes must be at least 100, got {:?}", self.table_sizes));
        }
        let (lo, hi) = self.region;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return fail(format!("region must be a bounded interval, got [{lo}, {hi}]"));
        }
        if self.region_samples == 0 || self.proposals == 0 || self.probe_points < 2 {
            return fail("region_samples and proposals must be positive, probe_points at least 2".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.t_end.is_finite() && self.t_end >= 0.0) {
            return fail(format!("need dt > 0 and t_end >= 0, got dt = {}, t_end = {}", self.dt, self.t_end));
        }
        self.initial
            .validate()
            .map_err(|e| Error::Config(format!("initial: {e}")))?;
        let max_order = *self.orders.last().unwrap();
        match (self.experiment, &self.initial) {
            (ExperimentKind::Ode, AnalyticDensity::Normal { .. }) => {}
            (ExperimentKind::Pde, AnalyticDensity::ProductNormal { means, .. }) if means.len() == 2 => {
                if self.quadrature_points < max_order + 1 {
                    return fail(format!(
                        "{} quadrature points cannot resolve order {max_order}",
                        self.quadrature_points
                    ));
                }
            }
            (ExperimentKind::Singular, AnalyticDensity::Uniform { lo, hi }) if *lo == -1.0 && *hi == 1.0 => {}
            (kind, d) => {
                return fail(format!("initial density {d:?} is not supported by the {} experiment", kind.name()))
            }
        }
        Ok(())
    }

    /// Largest sample set any stage needs.
    pub fn max_samples(&self) -> usize {
        self.table_sizes.iter().copied().fold(self.m, usize::max)
    }

    pub fn data_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.norms.iter().filter(|n| n.space == NormSpace::Data).map(|n| n.order)
    }

    pub fn param_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.norms.iter().filter(|n| n.space == NormSpace::Param).map(|n| n.order)
    }
}
