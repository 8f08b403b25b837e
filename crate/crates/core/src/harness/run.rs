use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{
    ConsistencyRow, Diagnostics, ExperimentReport, Meta, PredictabilityRow, RatioTable,
    SurrogateInfo, Tables, Curves, Timing,
};
use crate::density::{pwl_pushforward_exact, AnalyticDensity, Density, SimpleFunctionDensity};
use crate::diagnostics::{
    bound_and_lipschitz, ks_statistic, lp_norm_values, lr_norm_from_values, mean_std,
    region_samples, BoundTable, ErrorCurve,
};
use crate::error::Result;
use crate::forward::{build_pushforward, draw_initial, PushforwardEnsemble, SampleSet};
use crate::inverse::{
    mean_ratio, predictability_check, probe_grid, rejection_from_ratios, PredictabilityVerdict,
    UpdatedDensity,
};
use crate::maps::{pwl_surrogate, OdeDecayMap, PdeAverageQoi, QoiMap, QuinticMap};
use crate::polychaos::{pseudo_spectral_project, GalerkinDecay, Standardization};
use crate::rng::{SeedTree, Stage};
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

/// Reference label for errors measured against the exact map's KDE.
pub const EXACT_KDE: &str = "exact-kde";
/// Reference label for errors against the closed-form push-forward.
pub const ANALYTIC: &str = "analytic";
/// Errors of the surrogates' exact simple-function push-forwards.
pub const EXACT_SIMPLE: &str = "exact-simple";

const SINGULAR_INTEGRABILITY: f64 = 1.25;

/// The surrogate family and exact map of one experiment.
pub struct Family {
    pub exact: Arc<dyn QoiMap>,
    pub surrogates: Vec<Arc<dyn QoiMap>>,
    pub info: Vec<SurrogateInfo>,
    /// Exact push-forwards of the surrogates, when available in closed form.
    pub exact_pushforwards: Option<Vec<SimpleFunctionDensity>>,
}

pub fn build_family(config: &ExperimentConfig) -> Result<Family> {
    let orders = &config.orders;
    match config.experiment {
        ExperimentKind::Ode => {
            let (mean, std) = config.initial.moments().expect("validated 1-D initial");
            let solver = GalerkinDecay {
                rate_mean: mean,
                rate_std: std,
            };
            let pces = orders
                .iter()
                .map(|&n| solver.solve(n, config.t_end, config.dt))
                .collect::<Result<Vec<_>>>()?;
            Ok(pce_family(Arc::new(OdeDecayMap), orders, pces))
        }
        ExperimentKind::Pde => {
            let AnalyticDensity::ProductNormal { means, stds } = &config.initial else {
                unreachable!("validated product-normal initial")
            };
            let standardization = means
                .iter()
                .zip(stds)
                .map(|(&m, &s)| Standardization::new(m, s))
                .collect::<Result<Vec<_>>>()?;
            let exact = PdeAverageQoi::default();
            let top = *orders.last().expect("validated nonempty orders");
            let full = pseudo_spectral_project(&exact, top, config.quadrature_points, &standardization)?;
            let pces = orders.iter().map(|&n| full.truncate(n)).collect();
            Ok(pce_family(Arc::new(exact), orders, pces))
        }
        ExperimentKind::Singular => {
            let maps = orders.iter().map(|&n| pwl_surrogate(n)).collect::<Result<Vec<_>>>()?;
            let exact_pf = maps.iter().map(pwl_pushforward_exact).collect::<Result<Vec<_>>>()?;
            let info = orders
                .iter()
                .zip(&exact_pf)
                .map(|(&n, pf)| {
                    Ok(SurrogateInfo {
                        n,
                        label: format!("pwl({n})"),
                        pce: None,
                        central_density: Some(pf.eval(&[0.0])?),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Family {
                exact: Arc::new(QuinticMap),
                surrogates: maps.into_iter().map(|m| Arc::new(m) as Arc<dyn QoiMap>).collect(),
                info,
                exact_pushforwards: Some(exact_pf),
            })
        }
    }
}

fn pce_family(exact: Arc<dyn QoiMap>, orders: &[usize], pces: Vec<crate::polychaos::PceSurrogate>) -> Family {
    let info = orders
        .iter()
        .zip(&pces)
        .map(|(&n, p)| SurrogateInfo {
            n,
            label: format!("pce({n})"),
            pce: Some(p.clone()),
            central_density: None,
        })
        .collect();
    Family {
        exact,
        surrogates: pces.into_iter().map(|p| Arc::new(p) as Arc<dyn QoiMap>).collect(),
        info,
        exact_pushforwards: None,
    }
}

/// Curve layout shared by every replicate: `(reference, order)` pairs.
struct CurveLayout {
    pushforward: Vec<(String, f64)>,
    composed: Vec<(String, f64)>,
    updated: Vec<(String, f64)>,
}

impl CurveLayout {
    fn new(config: &ExperimentConfig) -> Self {
        let mut refs = vec![EXACT_KDE.to_string()];
        if config.experiment == ExperimentKind::Singular {
            refs.push(ANALYTIC.into());
            refs.push(EXACT_SIMPLE.into());
        }
        // The closed-form density q^(-4/5)/10 is only in L^r for r < 5/4.
        let pushforward = refs
            .iter()
            .flat_map(|r| {
                config
                    .data_norms()
                    .filter(move |&o| r == EXACT_KDE || o < SINGULAR_INTEGRABILITY)
                    .map(move |o| (r.clone(), o))
            })
            .collect();
        let composed = config.param_norms().map(|o| (EXACT_KDE.to_string(), o)).collect();
        let updated = config
            .observed
            .iter()
            .flat_map(|c| config.param_norms().map(move |o| (c.name.clone(), o)))
            .collect();
        Self {
            pushforward,
            composed,
            updated,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Consistency {
    accepted: usize,
    bound: f64,
    ks: f64,
}

/// Everything one replicate measures.
struct Replicate {
    bounds: Vec<Vec<f64>>,
    lipschitz: Vec<Vec<f64>>,
    pushforward: Vec<Vec<f64>>,
    composed: Vec<Vec<f64>>,
    updated: Vec<Vec<f64>>,
    expected_ratio: Vec<Vec<f64>>,
    exact_expected_ratio: Vec<f64>,
    predictability: Vec<Vec<Vec<PredictabilityVerdict>>>,
    consistency: Vec<Vec<Consistency>>,
}

fn stage<T>(name: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn ensembles(
    maps: &[Arc<dyn QoiMap>],
    orders: &[usize],
    samples: &Arc<SampleSet>,
) -> Result<Vec<PushforwardEnsemble>> {
    maps.par_iter()
        .zip(orders)
        .map(|(map, n)| {
            stage(
                format!("push-forward n={n}, m={}", samples.len()),
                build_pushforward(map.clone(), samples.clone()),
            )
        })
        .collect()
}

fn run_replicate(config: &ExperimentConfig, family: &Family, layout: &CurveLayout, seeds: SeedTree) -> Result<Replicate> {
    let orders = &config.orders;
    let initial: Arc<dyn Density> = Arc::new(config.initial.clone());
    let all = stage(
        "initial samples",
        draw_initial(&config.initial, config.max_samples(), seeds.stream(Stage::Initial, 0)),
    )?;

    // Bound and Lipschitz tables over nested prefixes of one sample stream.
    let mut bounds = Vec::new();
    let mut lipschitz = Vec::new();
    let mut main = None;
    for &size in &config.table_sizes {
        let samples = Arc::new(all.prefix(size)?);
        let pfs = ensembles(&family.surrogates, orders, &samples)?;
        let stats = pfs
            .par_iter()
            .map(bound_and_lipschitz)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage(format!("bounds m={size}")))?;
        bounds.push(stats.iter().map(|s| s.0).collect());
        lipschitz.push(stats.iter().map(|s| s.1).collect());
        if size == config.m {
            main = Some((samples, pfs));
        }
    }
    let (samples, pfs) = match main {
        Some(found) => found,
        None => {
            let samples = Arc::new(all.prefix(config.m)?);
            let pfs = ensembles(&family.surrogates, orders, &samples)?;
            (samples, pfs)
        }
    };
    let exact = stage("push-forward exact", build_pushforward(family.exact.clone(), samples.clone()))?;

    // Push-forward errors on D_c.
    let region = config.region;
    let width = region.1 - region.0;
    let qs = stage(
        "data region",
        region_samples(region, config.region_samples, seeds.stream(Stage::DataRegion, 0)),
    )?;
    let exact_on_region = exact.kde().eval_scalars(&qs)?;
    let surrogate_on_region = pfs
        .iter()
        .map(|pf| pf.kde().eval_scalars(&qs))
        .collect::<Result<Vec<_>>>()?;
    let analytic_on_region = match config.experiment {
        ExperimentKind::Singular => Some(stage(
            "analytic push-forward",
            AnalyticDensity::QuinticPushforward.eval_scalars(&qs),
        )?),
        _ => None,
    };
    let simple_on_region = family
        .exact_pushforwards
        .as_ref()
        .map(|v| v.iter().map(|d| d.eval_scalars(&qs)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let mut pushforward = Vec::new();
    for (reference, r) in &layout.pushforward {
        let row = (0..orders.len())
            .map(|j| {
                let (f, g) = match reference.as_str() {
                    EXACT_KDE => (&exact_on_region, &surrogate_on_region[j]),
                    ANALYTIC => (analytic_on_region.as_ref().unwrap(), &surrogate_on_region[j]),
                    _ => (analytic_on_region.as_ref().unwrap(), &simple_on_region.as_ref().unwrap()[j]),
                };
                lr_norm_from_values(f, g, *r, width)
            })
            .collect::<Result<Vec<_>>>()?;
        pushforward.push(row);
    }

    // Composed densities at the shared samples.
    let exact_composed = exact.density_at_outputs()?;
    let composed_n = pfs.iter().map(|pf| pf.density_at_outputs()).collect::<Result<Vec<_>>>()?;
    let composed = layout
        .composed
        .iter()
        .map(|(_, p)| {
            composed_n
                .iter()
                .map(|c| lp_norm_values(&exact_composed, c, *p))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let prior: Vec<f64> = samples
        .iter()
        .map(|p| initial.eval(p))
        .collect::<Result<_>>()?;
    // Consistency stage: rejection sampling over the very samples that fit
    // each push-forward KDE, so every ratio has a kernel at its own output.
    let proposals = Arc::new(stage(
        "proposals",
        draw_initial(&config.initial, config.proposals, seeds.stream(Stage::Proposals, 0)),
    )?);
    let proposal_pfs = ensembles(&family.surrogates, orders, &proposals)?;

    let mut updated_by_case = Vec::new();
    let mut expected_ratio = Vec::new();
    let mut exact_expected_ratio = Vec::new();
    let mut predictability = Vec::new();
    let mut consistency = Vec::new();
    for (ci, case) in config.observed.iter().enumerate() {
        let observed: Arc<dyn Density> = Arc::new(case.density.clone());
        let u_exact = UpdatedDensity::from_ensemble(initial.clone(), observed.clone(), &exact)?;
        let r_exact = u_exact.ratios_at_outputs(exact.outputs())?;
        exact_expected_ratio.push(mean_ratio(&r_exact));
        let pi_exact: Vec<f64> = prior.iter().zip(&r_exact).map(|(p, r)| p * r.unwrap_or(0.0)).collect();
        let probes = probe_grid(&case.density, config.probe_points)?;

        let per_order = pfs
            .par_iter()
            .enumerate()
            .map(|(j, pf)| {
                let n = orders[j];
                let label = format!("case {} n={n}", case.name);
                let u = UpdatedDensity::from_ensemble(initial.clone(), observed.clone(), pf)?;
                let r = u.ratios_at_outputs(pf.outputs())?;
                let e = mean_ratio(&r);
                let pi_n: Vec<f64> = prior.iter().zip(&r).map(|(p, r)| p * r.unwrap_or(0.0)).collect();
                let mut verdicts = vec![predictability_check(observed.as_ref(), pf.kde(), &probes)?];
                if let Some(exact_pf) = &family.exact_pushforwards {
                    verdicts.push(predictability_check(observed.as_ref(), &exact_pf[j], &probes)?);
                }
                let pp = &proposal_pfs[j];
                let up = UpdatedDensity::from_ensemble(initial.clone(), observed.clone(), pp)?;
                let ratios = up.ratios_at_outputs(pp.outputs())?;
                let accept_seed = seeds.stream(Stage::Acceptance, ((ci as u64) << 16) | n as u64);
                let rej = stage(format!("rejection {label}"), rejection_from_ratios(&ratios, &proposals, accept_seed))?;
                let pushed: Vec<f64> = rej.accepted_indices.iter().map(|&i| pp.outputs()[i]).collect();
                let ks = if pushed.is_empty() {
                    1.0
                } else {
                    ks_statistic(&pushed, |q| case.density.cdf(q).unwrap_or(f64::NAN))
                };
                Ok((
                    e,
                    pi_n,
                    verdicts,
                    Consistency {
                        accepted: rej.accepted_count(),
                        bound: rej.bound,
                        ks,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut updated_rows = Vec::new();
        for (name, p) in &layout.updated {
            if name == &case.name {
                updated_rows.push(
                    per_order
                        .iter()
                        .map(|o| lp_norm_values(&pi_exact, &o.1, *p))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
        updated_by_case.push(updated_rows);
        expected_ratio.push(per_order.iter().map(|o| o.0).collect());
        predictability.push(per_order.iter().map(|o| o.2.clone()).collect());
        consistency.push(per_order.iter().map(|o| o.3).collect());
    }

    Ok(Replicate {
        bounds,
        lipschitz,
        pushforward,
        composed,
        updated: updated_by_case.into_iter().flatten().collect(),
        expected_ratio,
        exact_expected_ratio,
        predictability,
        consistency,
    })
}

fn curves(
    layout: &[(String, f64)],
    space: &str,
    region: Option<(f64, f64)>,
    samples: usize,
    config: &ExperimentConfig,
    reps: &[Vec<Vec<f64>>],
) -> Vec<ErrorCurve> {
    let (mean, std) = crate::diagnostics::aggregate_grid(layout.len(), config.orders.len(), reps);
    layout
        .iter()
        .zip(mean.into_iter().zip(std))
        .map(|((reference, order), (mean, std))| ErrorCurve {
            reference: reference.clone(),
            space: space.into(),
            order: *order,
            region,
            samples,
            seed: config.seed,
            orders: config.orders.clone(),
            mean,
            std,
        })
        .collect()
}

/// Runs every replicate of an experiment and aggregates the results.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let family = stage("surrogates", build_family(config))?;
    let layout = CurveLayout::new(config);
    let mut reps = Vec::with_capacity(config.replicates);
    let mut seeds = Vec::with_capacity(config.replicates);
    let mut per_replicate = Vec::with_capacity(config.replicates);
    for r in 0..config.replicates {
        let tree = SeedTree::replicate(config.seed, r as u64);
        let t = Instant::now();
        let rep = run_replicate(config, &family, &layout, tree)
            .map_err(|e| e.in_stage(format!("replicate {r} (seed {})", tree.seed())))?;
        per_replicate.push(t.elapsed().as_secs_f64());
        seeds.push(tree.seed());
        reps.push(rep);
    }

    let orders = config.orders.clone();
    let grid = |f: fn(&Replicate) -> &Vec<Vec<f64>>| reps.iter().map(|r| f(r).clone()).collect::<Vec<_>>();
    let bounds = BoundTable::from_replicates(config.table_sizes.clone(), orders.clone(), &grid(|r| &r.bounds));
    let lipschitz = BoundTable::from_replicates(config.table_sizes.clone(), orders.clone(), &grid(|r| &r.lipschitz));
    let cases: Vec<String> = config.observed.iter().map(|c| c.name.clone()).collect();
    let (er_mean, er_std) = crate::diagnostics::aggregate_grid(cases.len(), orders.len(), &grid(|r| &r.expected_ratio));
    let exact_er: Vec<(f64, f64)> = (0..cases.len())
        .map(|c| mean_std(&reps.iter().map(|r| r.exact_expected_ratio[c]).collect::<Vec<_>>()))
        .collect();

    let mut predictability = Vec::new();
    let mut consistency = Vec::new();
    for (ci, case) in cases.iter().enumerate() {
        for (j, &n) in orders.iter().enumerate() {
            let refs: &[&str] = if family.exact_pushforwards.is_some() { &["kde", "exact"] } else { &["kde"] };
            for (k, reference) in refs.iter().enumerate() {
                let c: Vec<f64> = reps.iter().map(|r| r.predictability[ci][j][k].c).collect();
                let v: Vec<f64> = reps.iter().map(|r| r.predictability[ci][j][k].violation_fraction).collect();
                let (c_mean, c_std) = mean_std(&c);
                let (v_mean, v_std) = mean_std(&v);
                predictability.push(PredictabilityRow {
                    case: case.clone(),
                    n,
                    reference: reference.to_string(),
                    c_mean,
                    c_std,
                    violation_mean: v_mean,
                    violation_std: v_std,
                });
            }
            let stats: Vec<Consistency> = reps.iter().map(|r| r.consistency[ci][j]).collect();
            let (ks_mean, ks_std) = mean_std(&stats.iter().map(|s| s.ks).collect::<Vec<_>>());
            consistency.push(ConsistencyRow {
                case: case.clone(),
                n,
                expected_ratio: er_mean[ci][j],
                proposals: config.proposals,
                accepted_min: stats.iter().map(|s| s.accepted).min().unwrap_or(0),
                accepted_mean: mean_std(&stats.iter().map(|s| s.accepted as f64).collect::<Vec<_>>()).0,
                bound_mean: mean_std(&stats.iter().map(|s| s.bound).collect::<Vec<_>>()).0,
                ks_mean,
                ks_std,
                ks_max: stats.iter().map(|s| s.ks).fold(0.0, f64::max),
            });
        }
    }

    let region = Some(config.region);
    let report = ExperimentReport {
        config: config.clone(),
        tables: Tables {
            bounds,
            lipschitz,
            expected_ratio: RatioTable {
                cases: cases.clone(),
                orders: orders.clone(),
                mean: er_mean,
                std: er_std,
                exact_mean: exact_er.iter().map(|e| e.0).collect(),
                exact_std: exact_er.iter().map(|e| e.1).collect(),
            },
        },
        curves: Curves {
            pushforward: curves(&layout.pushforward, "data", region, config.region_samples, config, &grid(|r| &r.pushforward)),
            composed: curves(&layout.composed, "param", None, config.m, config, &grid(|r| &r.composed)),
            updated: curves(&layout.updated, "param", None, config.m, config, &grid(|r| &r.updated)),
        },
        diagnostics: Diagnostics {
            predictability,
            consistency,
            surrogates: family.info,
        },
        meta: Meta {
            software: format!("uqdc {}", env!("CARGO_PKG_VERSION")),
            replicates: config.replicates,
            replicate_seeds: seeds,
        },
        timing: Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            replicate_seconds: per_replicate,
        },
    };
    Ok(report)
}
