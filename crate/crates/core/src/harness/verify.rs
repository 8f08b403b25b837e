use super::config::{ExperimentConfig, ExperimentKind};
use super::report::ExperimentReport;
use super::run::{run_experiment, EXACT_KDE};
use crate::density::{pwl_pushforward_exact, AnalyticDensity, BandwidthRule, Density, KdeDensity};
use crate::diagnostics::{lr_norm_data, mean_std};
use crate::error::{Error, Result};
use crate::forward::draw_initial;
use crate::maps::{ode_exact_map, pwl_surrogate};
use crate::polychaos::{
    factorial, galerkin_ode_solve, gauss_hermite, hermite_eval, pseudo_spectral_project,
    triple_product, PceSurrogate, Standardization,
};
use crate::rng::StreamSeed;
use std::fmt;

pub const REPLICATES: usize = 10;

pub const ODE_FIRST_ORDER_RATIO: f64 = 0.58;
pub const ODE_FIRST_ORDER_TOL: f64 = 0.05;
pub const ODE_HIGHER_ORDER_RANGE: (f64, f64) = (0.94, 1.02);
pub const ODE_RATIO_SECONDS: f64 = 30.0;
pub const ODE_PUSHFORWARD_SECONDS: f64 = 60.0;
pub const CONVERGENCE_RATIO: f64 = 0.1;
pub const PDE_SUPPORT: [[usize; 2]; 6] = [[1, 0], [3, 0], [1, 2], [5, 0], [3, 2], [1, 4]];
pub const PDE_OFF_SUPPORT_REL: f64 = 1e-6;
pub const PDE_PAIR_REL: f64 = 0.05;
pub const PDE_STEP_FACTOR: f64 = 0.8;
pub const PDE_RATIO_TOL: f64 = 0.02;
pub const CASE_I_MIN: f64 = 0.95;
pub const CASE_II_MAX: f64 = 0.95;
pub const CASE_III_RANGE: (f64, f64) = (0.55, 0.75);
pub const SIMPLE_REL: f64 = 1e-12;
pub const CONSISTENCY_GATE: f64 = 0.95;
pub const CONSISTENCY_MIN_ACCEPTED: usize = 5_000;
pub const CONSISTENCY_KS: f64 = 0.03;
pub const TRIPLE_PRODUCT_REL: f64 = 1e-9;
pub const GALERKIN_ABS: f64 = 1e-3;
pub const PROJECTION_ABS: f64 = 1e-10;
pub const GRADIENT_REL: f64 = 1e-4;
pub const PDF_NORM_ABS: f64 = 0.01;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict} {}: {}", self.id, self.title, self.detail)
    }
}

fn criterion(id: u8, title: &'static str, passed: bool, detail: String) -> Criterion {
    Criterion {
        id,
        title,
        passed,
        detail,
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn fmt_row(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", cells.join(", "))
}

fn mean_replicate_seconds(r: &ExperimentReport) -> f64 {
    mean_std(&r.timing.replicate_seconds).0
}

/// The acceptance setup: the experiment preset with ten replicates.
pub fn acceptance_config(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        replicates: REPLICATES,
        ..ExperimentConfig::preset(kind)
    }
}

fn first_case(r: &ExperimentReport) -> &str {
    &r.tables.expected_ratio.cases[0]
}

fn curve_values(r: &ExperimentReport, curve: Option<&crate::diagnostics::ErrorCurve>, what: &str) -> Result<Vec<f64>> {
    curve
        .map(|c| c.mean.clone())
        .ok_or_else(|| Error::Config(format!("{} report has no {what} curve", r.config.experiment.name())))
}

pub fn ode_expected_ratio(r: &ExperimentReport) -> Criterion {
    let row = &r.tables.expected_ratio.mean[0];
    let first_ok = (row[0] - ODE_FIRST_ORDER_RATIO).abs() <= ODE_FIRST_ORDER_TOL;
    let (lo, hi) = ODE_HIGHER_ORDER_RANGE;
    let rest_ok = row[1..].iter().all(|e| (lo..=hi).contains(e));
    let secs = mean_replicate_seconds(r);
    criterion(
        1,
        "ODE expected ratios",
        first_ok && rest_ok && secs < ODE_RATIO_SECONDS,
        format!(
            "E_i = {} (n=1 target {ODE_FIRST_ORDER_RATIO} ± {ODE_FIRST_ORDER_TOL}, n>1 in [{lo}, {hi}]), {secs:.1} s per run",
            fmt_row(row)
        ),
    )
}

pub fn ode_pushforward_convergence(r: &ExperimentReport) -> Result<Criterion> {
    let mut detail = Vec::new();
    let mut ok = true;
    for order in 1..=5 {
        let v = curve_values(r, r.pushforward_curve(EXACT_KDE, order as f64), "push-forward")?;
        ok &= strictly_decreasing(&v);
        detail.push(format!("r={order} {}", fmt_row(&v)));
    }
    let l2 = curve_values(r, r.pushforward_curve(EXACT_KDE, 2.0), "push-forward")?;
    let ratio = l2[l2.len() - 1] / l2[0];
    let secs = mean_replicate_seconds(r);
    Ok(criterion(
        2,
        "ODE push-forward convergence",
        ok && ratio < CONVERGENCE_RATIO && secs < ODE_PUSHFORWARD_SECONDS,
        format!("{}; L2 ratio n=5/n=1 = {ratio:.4}; {secs:.1} s per run", detail.join("; ")),
    ))
}

pub fn ode_composed_convergence(r: &ExperimentReport) -> Result<Criterion> {
    let v = curve_values(r, r.composed_curve(2.0), "composed")?;
    let ratio = v[v.len() - 1] / v[0];
    Ok(criterion(
        3,
        "ODE composed-density convergence",
        strictly_decreasing(&v) && ratio < CONVERGENCE_RATIO,
        format!("L2 = {}, ratio {ratio:.4}", fmt_row(&v)),
    ))
}

pub fn ode_updated_convergence(r: &ExperimentReport) -> Result<Criterion> {
    let v = curve_values(r, r.updated_curve(first_case(r), 2.0), "updated")?;
    Ok(criterion(
        4,
        "ODE updated-density convergence",
        strictly_decreasing(&v[1..]),
        format!("L2 = {} (n=1 excluded)", fmt_row(&v)),
    ))
}

fn top_pce(r: &ExperimentReport) -> Result<&PceSurrogate> {
    r.diagnostics
        .surrogates
        .last()
        .and_then(|s| s.pce.as_ref())
        .ok_or_else(|| Error::Config("report carries no polynomial chaos surrogate".into()))
}

pub fn pde_sparsity(r: &ExperimentReport) -> Result<Criterion> {
    let pce = top_pce(r)?;
    let on: Vec<f64> = PDE_SUPPORT.iter().map(|i| pce.coefficient(i).abs()).collect();
    let max_on = on.iter().copied().fold(0.0, f64::max);
    let max_off = pce
        .terms()
        .iter()
        .filter(|(i, _)| !PDE_SUPPORT.iter().any(|s| s.as_slice() == i.as_slice()))
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max);
    let all_on = on.iter().all(|c| *c > PDE_OFF_SUPPORT_REL * max_on);
    Ok(criterion(
        5,
        "PDE coefficient sparsity",
        all_on && max_off < PDE_OFF_SUPPORT_REL * max_on,
        format!("min on S {:.3e}, max on S {max_on:.3e}, max off S {max_off:.3e}", on.iter().copied().fold(f64::INFINITY, f64::min)),
    ))
}

pub fn pde_odd_even(r: &ExperimentReport) -> Result<Criterion> {
    let e = curve_values(r, r.pushforward_curve(EXACT_KDE, 2.0), "push-forward")?;
    if e.len() < 5 {
        return Err(Error::Config("odd/even pattern needs orders 1..5".into()));
    }
    let pair1 = (e[1] - e[0]).abs() / e[0];
    let pair2 = (e[3] - e[2]).abs() / e[2];
    let ok = pair1 < PDE_PAIR_REL
        && pair2 < PDE_PAIR_REL
        && e[2] < PDE_STEP_FACTOR * e[0]
        && e[4] < PDE_STEP_FACTOR * e[2];
    Ok(criterion(
        6,
        "PDE odd/even error pattern",
        ok,
        format!("L2 = {}, |e2-e1|/e1 = {pair1:.4}, |e4-e3|/e3 = {pair2:.4}", fmt_row(&e)),
    ))
}

pub fn pde_expected_ratio(r: &ExperimentReport) -> Criterion {
    let row = &r.tables.expected_ratio.mean[0];
    criterion(
        7,
        "PDE expected ratios",
        row.iter().all(|e| (e - 1.0).abs() <= PDE_RATIO_TOL),
        format!("E_i = {} (target 1 ± {PDE_RATIO_TOL})", fmt_row(row)),
    )
}

pub fn singular_divergence(r: &ExperimentReport) -> Criterion {
    let l = &r.tables.lipschitz;
    let b = &r.tables.bounds;
    let largest = *l.sizes.iter().max().unwrap();
    let smallest = *l.sizes.iter().min().unwrap();
    let top = *l.orders.last().unwrap();
    let along_n: Vec<f64> = l.orders.iter().filter_map(|&n| l.get(largest, n)).collect();
    let along_m: Vec<f64> = l.sizes.iter().filter_map(|&m| l.get(m, top)).collect();
    let (b_small, b_large) = (b.get(smallest, top).unwrap(), b.get(largest, top).unwrap());
    criterion(
        8,
        "piecewise-linear divergence",
        strictly_increasing(&along_n) && strictly_increasing(&along_m) && b_large > b_small,
        format!(
            "L(m={largest}) = {}, L(n={top}) over m = {}, B(n={top}) {b_small:.3} -> {b_large:.3}",
            fmt_row(&along_n),
            fmt_row(&along_m)
        ),
    )
}

pub fn singular_cases(r: &ExperimentReport) -> Result<Criterion> {
    let t = &r.tables.expected_ratio;
    let row = |case: &str| -> Result<&Vec<f64>> {
        t.cases
            .iter()
            .position(|c| c == case)
            .map(|i| &t.mean[i])
            .ok_or_else(|| Error::Config(format!("no observed case `{case}`")))
    };
    let (i, ii, iii) = (row("I")?, row("II")?, row("III")?);
    let (lo, hi) = CASE_III_RANGE;
    let ok = i.iter().all(|e| *e >= CASE_I_MIN)
        && ii.iter().any(|e| *e <= CASE_II_MAX)
        && iii.iter().all(|e| (lo..=hi).contains(e));
    Ok(criterion(
        9,
        "observed-density cases",
        ok,
        format!("I {}, II {}, III {}", fmt_row(i), fmt_row(ii), fmt_row(iii)),
    ))
}

pub fn simple_function_plateau() -> Result<Criterion> {
    let mut worst: f64 = 0.0;
    for n in (1..=31).step_by(2) {
        let pf = pwl_pushforward_exact(&pwl_surrogate(n)?)?;
        let exact = ((n + 1) as f64).powi(4) / 32.0;
        let half_width = 32.0 / ((n + 1) as f64).powi(5);
        for k in -4..=4 {
            let q = half_width * k as f64 / 5.0;
            worst = worst.max((pf.eval(&[q])? - exact).abs() / exact);
        }
    }
    Ok(criterion(
        10,
        "exact simple-function push-forward",
        worst <= SIMPLE_REL,
        format!("largest relative deviation {worst:.2e} over odd n <= 31"),
    ))
}

pub fn consistency(reports: &[&ExperimentReport]) -> Criterion {
    let mut checked = Vec::new();
    let mut ok = true;
    for r in reports {
        for row in &r.diagnostics.consistency {
            if row.expected_ratio < CONSISTENCY_GATE {
                continue;
            }
            let pass = row.accepted_min >= CONSISTENCY_MIN_ACCEPTED && row.ks_mean < CONSISTENCY_KS;
            ok &= pass;
            checked.push(format!(
                "{}/{}/n={}: ks {:.4}, accepted >= {}{}",
                r.config.experiment.name(),
                row.case,
                row.n,
                row.ks_mean,
                row.accepted_min,
                if pass { "" } else { " (fails)" }
            ));
        }
    }
    let empty = checked.is_empty();
    criterion(
        11,
        "consistency of accepted samples",
        ok && !empty,
        if empty { "no order passed the expected-ratio gate".into() } else { checked.join("; ") },
    )
}

pub fn oracle_suites() -> Result<Criterion> {
    let mut notes = Vec::new();
    let mut ok = true;

    let rule = gauss_hermite(30)?;
    let mut worst: f64 = 0.0;
    for i in 0..=6 {
        for j in 0..=6 {
            for k in 0..=6 {
                let quad = rule.integrate(|x| hermite_eval(i, x) * hermite_eval(j, x) * hermite_eval(k, x));
                let closed = triple_product(i, j, k);
                let scale = closed.abs().max(1.0);
                worst = worst.max((quad - closed).abs() / scale);
            }
        }
    }
    ok &= worst <= TRIPLE_PRODUCT_REL;
    notes.push(format!("triple products {worst:.1e}"));

    let galerkin = galerkin_ode_solve(5, 0.5, 1e-3)?;
    let rule40 = gauss_hermite(40)?;
    let worst = (0..=3)
        .map(|i| {
            let oracle = rule40.integrate(|x| ode_exact_map(x) * hermite_eval(i, x)) / factorial(i);
            (galerkin.coefficient(&[i]) - oracle).abs()
        })
        .fold(0.0, f64::max);
    ok &= worst <= GALERKIN_ABS;
    notes.push(format!("Galerkin {worst:.1e}"));

    let s = [Standardization::new(0.2, 0.7)?, Standardization::STANDARD];
    let truth: Vec<(Vec<usize>, f64)> = crate::polychaos::total_degree_indices(2, 4)
        .into_iter()
        .enumerate()
        .map(|(k, i)| (i, ((k * 37 % 11) as f64 - 5.0) / 3.0))
        .collect();
    let poly = PceSurrogate::new(4, s.to_vec(), truth.clone())?;
    let projected = pseudo_spectral_project(&poly, 4, 5, &s)?;
    let worst = truth
        .iter()
        .map(|(i, c)| (projected.coefficient(i) - c).abs())
        .fold(0.0, f64::max);
    ok &= worst <= PROJECTION_ABS;
    notes.push(format!("projection {worst:.1e}"));

    let samples = draw_initial(&AnalyticDensity::normal(0.0, 1.0)?, 500, StreamSeed::new(12, 0))?;
    let kde = KdeDensity::fit(samples.points(), 1, BandwidthRule::Scott)?;
    let h = kde.bandwidth()[0];
    let probes: Vec<f64> = (0..200).map(|i| -4.0 + 8.0 * i as f64 / 199.0).collect();
    let (values, grads) = kde.eval_with_gradient_scalars(&probes)?;
    let mut worst: f64 = 0.0;
    for ((&x, &g), &v) in probes.iter().zip(&grads).zip(&values) {
        let fd = (kde.eval(&[x + 1e-5])? - kde.eval(&[x - 1e-5])?) / 2e-5;
        let scale = g.abs().max(fd.abs()).max(1e-4 * v / h);
        worst = worst.max((g - fd).abs() / scale);
    }
    ok &= worst <= GRADIENT_REL;
    notes.push(format!("KDE gradient {worst:.1e}"));

    #[derive(Debug)]
    struct Zero;
    impl Density for Zero {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
    }
    let norm = lr_norm_data(&AnalyticDensity::normal(0.0, 1.0)?, &Zero, 2.0, (-5.0, 5.0), 100_000, StreamSeed::new(12, 1))?;
    let oracle = (0.5 / std::f64::consts::PI.sqrt()).sqrt();
    ok &= (norm - oracle).abs() <= PDF_NORM_ABS;
    notes.push(format!("pdf L2 {norm:.4} vs {oracle:.4}"));

    Ok(criterion(12, "oracle suites", ok, notes.join(", ")))
}

/// Criteria computed from one experiment's report.
pub fn check_report(report: &ExperimentReport) -> Result<Vec<Criterion>> {
    Ok(match report.config.experiment {
        ExperimentKind::Ode => vec![
            ode_expected_ratio(report),
            ode_pushforward_convergence(report)?,
            ode_composed_convergence(report)?,
            ode_updated_convergence(report)?,
            consistency(&[report]),
        ],
        ExperimentKind::Pde => vec![
            pde_sparsity(report)?,
            pde_odd_even(report)?,
            pde_expected_ratio(report),
            consistency(&[report]),
        ],
        ExperimentKind::Singular => vec![
            singular_divergence(report),
            singular_cases(report)?,
            simple_function_plateau()?,
            consistency(&[report]),
        ],
    })
}

/// Runs the acceptance subset for `name` (`ode`, `pde`, `singular`,
/// `oracles` or `all`). `adjust` may override seeds, replicates or output.
pub fn verify(
    name: &str,
    adjust: impl Fn(&mut ExperimentConfig),
) -> Result<(Vec<Criterion>, Vec<ExperimentReport>)> {
    let kinds = match name {
        "all" => vec![ExperimentKind::Ode, ExperimentKind::Pde, ExperimentKind::Singular],
        "oracles" => vec![],
        other => vec![ExperimentKind::parse(other)?],
    };
    let mut reports = Vec::new();
    for kind in kinds {
        let mut config = acceptance_config(kind);
        adjust(&mut config);
        reports.push(run_experiment(&config)?);
    }
    let mut out = Vec::new();
    if name == "all" {
        for r in &reports {
            out.extend(check_report(r)?.into_iter().filter(|c| c.id != 11));
        }
        out.push(consistency(&reports.iter().collect::<Vec<_>>()));
        out.sort_by_key(|c| c.id);
    } else if let Some(r) = reports.first() {
        out = check_report(r)?;
    }
    if name == "all" || name == "oracles" {
        out.push(oracle_suites()?);
    }
    Ok((out, reports))
}
