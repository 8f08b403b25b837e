//! The inverse problem: updated densities through the observed/push-forward
//! ratio, rejection sampling, and the expected-ratio diagnostic.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::forward::{evaluate_map, PushforwardEnsemble, SampleSet};
use crate::maps::QoiMap;
use crate::rng::StreamSeed;
use rand::Rng;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Push-forward values below this are treated as "not predicted" and the
/// ratio is undefined.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Observed values above this count as observed mass in the predictability check.
pub const OBSERVED_MASS_FLOOR: f64 = 1e-8;

/// `π^u(λ) = π^i(λ) · π_obs(Q(λ)) / π^Q(Q(λ))`.
#[derive(Debug, Clone)]
pub struct UpdatedDensity {
    initial: Arc<dyn Density>,
    observed: Arc<dyn Density>,
    pushforward: Arc<dyn Density>,
    map: Arc<dyn QoiMap>,
}

impl UpdatedDensity {
    pub fn new(
        initial: Arc<dyn Density>,
        observed: Arc<dyn Density>,
        pushforward: Arc<dyn Density>,
        map: Arc<dyn QoiMap>,
    ) -> Result<Self> {
        if observed.dim() != 1 || pushforward.dim() != 1 {
            return Err(Error::Usage("observed and push-forward densities must be 1-D".into()));
        }
        if initial.dim() != map.dim() {
            return Err(Error::Usage(format!(
                "initial density has dimension {}, map {} expects {}",
                initial.dim(),
                map.label(),
                map.dim()
            )));
        }
        Ok(Self {
            initial,
            observed,
            pushforward,
            map,
        })
    }

    /// Uses the ensemble's map and KDE as the push-forward.
    pub fn from_ensemble(
        initial: Arc<dyn Density>,
        observed: Arc<dyn Density>,
        pf: &PushforwardEnsemble,
    ) -> Result<Self> {
        Self::new(initial, observed, Arc::new(pf.kde().clone()), pf.map().clone())
    }

    pub fn map(&self) -> &Arc<dyn QoiMap> {
        &self.map
    }

    /// `r(λ)`, or `None` when the push-forward at `Q(λ)` is under the floor.
    pub fn ratio(&self, lambda: &[f64]) -> Result<Option<f64>> {
        let q = self.map.eval(lambda)?;
        self.ratio_at_output(q)
    }

    pub fn ratio_at_output(&self, q: f64) -> Result<Option<f64>> {
        let den = self.pushforward.eval(&[q])?;
        if den < RATIO_FLOOR {
            return Ok(None);
        }
        Ok(Some(self.observed.eval(&[q])? / den))
    }

    /// Ratios at precomputed map outputs.
    pub fn ratios_at_outputs(&self, qs: &[f64]) -> Result<Vec<Option<f64>>> {
        let den = self.pushforward.eval_scalars(qs)?;
        let num = self.observed.eval_scalars(qs)?;
        Ok(num
            .into_iter()
            .zip(den)
            .map(|(o, p)| (p >= RATIO_FLOOR).then(|| o / p))
            .collect())
    }

    pub fn ratios(&self, samples: &SampleSet) -> Result<Vec<Option<f64>>> {
        self.ratios_at_outputs(&evaluate_map(self.map.as_ref(), samples)?)
    }

    /// `π^u(λ)`; zero wherever the initial density vanishes, `None` where the
    /// ratio is undefined.
    pub fn updated_eval(&self, lambda: &[f64]) -> Result<Option<f64>> {
        let prior = self.initial.eval(lambda)?;
        if prior == 0.0 {
            return Ok(Some(0.0));
        }
        Ok(self.ratio(lambda)?.map(|r| prior * r))
    }
}

/// Mean ratio with undefined entries counted as zero.
pub fn mean_ratio(ratios: &[Option<f64>]) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    crate::diagnostics::stable_sum(ratios.iter().map(|r| r.unwrap_or(0.0))) / ratios.len() as f64
}

/// `E_i(r)`: Monte Carlo mean of the ratio over draws from the initial density.
pub fn expected_ratio(u: &UpdatedDensity, proposals: &SampleSet) -> Result<f64> {
    Ok(mean_ratio(&u.ratios(proposals)?))
}

/// Outcome of rejection sampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionResult {
    pub dim: usize,
    /// Accepted points, row-major.
    pub accepted: Vec<f64>,
    pub accepted_indices: Vec<usize>,
    pub proposals: usize,
    /// The bound `M`: largest defined ratio over the proposals.
    pub bound: f64,
}

impl RejectionResult {
    pub fn accepted_count(&self) -> usize {
        self.accepted_indices.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted_count() as f64 / self.proposals as f64
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = vec!["sample_index".to_string()];
        header.extend((1..=self.dim).map(|d| format!("lambda_{d}")));
        w.write_record(&header)?;
        for (i, p) in self.accepted_indices.iter().zip(self.accepted.chunks_exact(self.dim)) {
            let mut row = vec![i.to_string()];
            row.extend(p.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.into_inner()
            .map_err(|e| Error::io(path, e.into_error()))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Accepts proposal `i` when `u_i < r_i / M`, with one uniform drawn per
/// proposal in index order.
pub fn rejection_sample(
    u: &UpdatedDensity,
    proposals: &SampleSet,
    seed: StreamSeed,
) -> Result<RejectionResult> {
    let ratios = u.ratios(proposals)?;
    rejection_from_ratios(&ratios, proposals, seed)
}

pub fn rejection_from_ratios(
    ratios: &[Option<f64>],
    proposals: &SampleSet,
    seed: StreamSeed,
) -> Result<RejectionResult> {
    if ratios.len() != proposals.len() {
        return Err(Error::Usage(format!(
            "{} ratios for {} proposals",
            ratios.len(),
            proposals.len()
        )));
    }
    let bound = ratios
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(bound > 0.0) {
        return Err(Error::EmptyRejection(format!(
            "no positive finite ratio among {} proposals",
            ratios.len()
        )));
    }
    let mut rng = seed.rng();
    let mut accepted = Vec::new();
    let mut accepted_indices = Vec::new();
    for (i, r) in ratios.iter().enumerate() {
        let draw: f64 = rng.random();
        if let Some(r) = r {
            if r.is_finite() && draw < r / bound {
                accepted_indices.push(i);
                accepted.extend_from_slice(proposals.point(i));
            }
        }
    }
    Ok(RejectionResult {
        dim: proposals.dim(),
        accepted,
        accepted_indices,
        proposals: proposals.len(),
        bound,
    })
}

/// Empirical check of `π_obs ≤ C π^Q` over probe points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictabilityVerdict {
    /// Largest `π_obs / max(π^Q, floor)` over the probes.
    pub c: f64,
    /// Share of probes with observed mass but a push-forward under the floor.
    pub violation_fraction: f64,
}

pub fn predictability_check(
    observed: &dyn Density,
    pushforward: &dyn Density,
    probes: &[f64],
) -> Result<PredictabilityVerdict> {
    if probes.is_empty() {
        return Err(Error::Usage("predictability check needs probe points".into()));
    }
    let obs = observed.eval_scalars(probes)?;
    let pf = pushforward.eval_scalars(probes)?;
    let mut c: f64 = 0.0;
    let mut violations = 0usize;
    for (o, p) in obs.iter().zip(&pf) {
        c = c.max(o / p.max(RATIO_FLOOR));
        if *p < RATIO_FLOOR && *o > OBSERVED_MASS_FLOOR {
            violations += 1;
        }
    }
    Ok(PredictabilityVerdict {
        c,
        violation_fraction: violations as f64 / probes.len() as f64,
    })
}

/// `count` evenly spaced probes over `mean ± 4 std` of a 1-D density.
pub fn probe_grid(observed: &crate::density::AnalyticDensity, count: usize) -> Result<Vec<f64>> {
    let (mean, std) = observed
        .moments()
        .ok_or_else(|| Error::Usage("probe grid needs a 1-D observed density".into()))?;
    if count < 2 {
        return Err(Error::Usage("probe grid needs at least two points".into()));
    }
    let (lo, hi) = (mean - 4.0 * std, mean + 4.0 * std);
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::AnalyticDensity;
    use crate::diagnostics::ks_statistic;
    use crate::forward::{build_pushforward, draw_initial};
    use crate::maps::{FnMap, OdeDecayMap, PdeAverageQoi};
    use crate::polychaos::galerkin_ode_solve;
    use crate::rng::StreamSeed;

    fn normal(m: f64, s: f64) -> Arc<AnalyticDensity> {
        Arc::new(AnalyticDensity::normal(m, s).unwrap())
    }

    fn ode_setup(m: usize, n: usize) -> (UpdatedDensity, PushforwardEnsemble) {
        let initial = normal(0.0, 1.0);
        let samples = Arc::new(draw_initial(&initial, m, StreamSeed::new(21, 1)).unwrap());
        let map = Arc::new(galerkin_ode_solve(n, 0.5, 1e-3).unwrap());
        let pf = build_pushforward(map, samples).unwrap();
        let u = UpdatedDensity::from_ensemble(initial, normal(1.0, 0.1), &pf).unwrap();
        (u, pf)
    }

    #[test]
    fn identical_observed_and_pushforward() {
        let initial = normal(0.0, 1.0);
        let samples = Arc::new(draw_initial(&initial, 2000, StreamSeed::new(1, 1)).unwrap());
        let pf = build_pushforward(Arc::new(OdeDecayMap), samples.clone()).unwrap();
        let kde: Arc<dyn Density> = Arc::new(pf.kde().clone());
        let u = UpdatedDensity::new(initial.clone(), kde.clone(), kde, pf.map().clone()).unwrap();
        for p in samples.iter().take(50) {
            assert_eq!(u.ratio(p).unwrap(), Some(1.0));
            assert_eq!(u.updated_eval(p).unwrap(), Some(initial.eval(p).unwrap()));
        }
        assert_eq!(expected_ratio(&u, &samples).unwrap(), 1.0);
        let rej = rejection_sample(&u, &samples, StreamSeed::new(1, 4)).unwrap();
        assert_eq!(rej.accepted_count(), samples.len());
        assert_eq!(rej.bound, 1.0);
        let verdict = predictability_check(pf.kde(), pf.kde(), &[0.5, 1.0, 1.5]).unwrap();
        assert_eq!(verdict, PredictabilityVerdict { c: 1.0, violation_fraction: 0.0 });
    }

    #[test]
    fn ratio_unrolls_definition() {
        let (u, pf) = ode_setup(5000, 5);
        let q0 = pf.map().eval(&[0.0]).unwrap();
        let expected = normal(1.0, 0.1).eval(&[q0]).unwrap() / pf.kde().eval(&[q0]).unwrap();
        assert_eq!(u.ratio(&[0.0]).unwrap(), Some(expected));
        let prior = normal(0.0, 1.0).eval(&[0.0]).unwrap();
        assert_eq!(u.updated_eval(&[0.0]).unwrap(), Some(prior * expected));
    }

    #[test]
    fn undefined_ratios_and_zero_prior() {
        let initial = Arc::new(AnalyticDensity::uniform(-1.0, 1.0).unwrap());
        let pf: Arc<dyn Density> = normal(0.0, 0.01);
        let id: Arc<dyn QoiMap> = Arc::new(FnMap::new(1, "id", |x: &[f64]| x[0]));
        let u = UpdatedDensity::new(initial, normal(0.5, 0.1), pf, id).unwrap();
        assert_eq!(u.ratio(&[0.9]).unwrap(), None);
        assert_eq!(u.updated_eval(&[0.9]).unwrap(), None);
        assert_eq!(u.updated_eval(&[3.0]).unwrap(), Some(0.0));
        assert_eq!(mean_ratio(&[None, Some(2.0)]), 1.0);
        let s = draw_initial(&AnalyticDensity::uniform(0.8, 1.0).unwrap(), 10, 0.into()).unwrap();
        assert!(matches!(rejection_sample(&u, &s, 0.into()), Err(Error::EmptyRejection(_))));
    }

    #[test]
    fn expected_ratio_is_mean_of_updated_over_initial() {
        let (u, pf) = ode_setup(5000, 3);
        let s = pf.samples();
        let e = expected_ratio(&u, s).unwrap();
        let prior = normal(0.0, 1.0);
        let via_updated: Vec<Option<f64>> = s
            .iter()
            .map(|p| u.updated_eval(p).unwrap().map(|v| v / prior.eval(p).unwrap()))
            .collect();
        assert!((e - mean_ratio(&via_updated)).abs() < 1e-12);
    }

    #[test]
    fn acceptance_rate_matches_expectation() {
        let (u, _) = ode_setup(10_000, 5);
        let prop = draw_initial(&normal(0.0, 1.0), 20_000, StreamSeed::new(21, 3)).unwrap();
        let ratios = u.ratios(&prop).unwrap();
        let rej = rejection_from_ratios(&ratios, &prop, StreamSeed::new(21, 4)).unwrap();
        let p = crate::diagnostics::stable_sum(ratios.iter().map(|r| r.unwrap_or(0.0))) / (prop.len() as f64 * rej.bound);
        let sd = (p * (1.0 - p) / prop.len() as f64).sqrt();
        assert!((rej.acceptance_rate() - p).abs() < 3.0 * sd, "{} vs {p}", rej.acceptance_rate());
        assert!(rej.accepted_count() <= rej.proposals);
        for (k, &i) in rej.accepted_indices.iter().enumerate() {
            assert_eq!(&rej.accepted[k..k + 1], prop.point(i));
        }
    }

    #[test]
    fn accepted_samples_are_consistent_with_observed() {
        // ~2e3 acceptances per run put a single KS statistic at the 0.02
        // noise floor, so the mean over ten seeds is compared.
        let obs = AnalyticDensity::normal(1.0, 0.1).unwrap();
        let initial = normal(0.0, 1.0);
        let map = Arc::new(galerkin_ode_solve(5, 0.5, 1e-3).unwrap());
        let ks: Vec<f64> = (0..10)
            .map(|s| {
                let samples = Arc::new(draw_initial(&initial, 10_000, StreamSeed::new(s, 1)).unwrap());
                let pf = build_pushforward(map.clone(), samples).unwrap();
                let u = UpdatedDensity::from_ensemble(initial.clone(), Arc::new(obs.clone()), &pf).unwrap();
                let prop = draw_initial(&initial, 10_000, StreamSeed::new(s, 3)).unwrap();
                let rej = rejection_sample(&u, &prop, StreamSeed::new(s, 4)).unwrap();
                let pushed: Vec<f64> = rej.accepted.iter().map(|l| u.map().eval(&[*l]).unwrap()).collect();
                ks_statistic(&pushed, |q| obs.cdf(q).unwrap())
            })
            .collect();
        let (mean, _) = crate::diagnostics::mean_std(&ks);
        assert!(mean < 0.02, "{ks:?}");
    }

    #[test]
    fn rescaled_observed_gives_same_acceptances() {
        #[derive(Debug)]
        struct Scaled(AnalyticDensity, f64);
        impl Density for Scaled {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &[f64]) -> Result<f64> {
                Ok(self.1 * self.0.eval(x)?)
            }
        }
        let (_, pf) = ode_setup(5000, 4);
        let prop = draw_initial(&normal(0.0, 1.0), 5000, StreamSeed::new(2, 3)).unwrap();
        let base = AnalyticDensity::normal(1.0, 0.1).unwrap();
        let run = |c: f64| {
            let u = UpdatedDensity::from_ensemble(normal(0.0, 1.0), Arc::new(Scaled(base.clone(), c)), &pf).unwrap();
            rejection_sample(&u, &prop, StreamSeed::new(2, 4)).unwrap().accepted_indices
        };
        let reference = run(1.0);
        assert!(!reference.is_empty());
        assert_eq!(run(0.25), reference);
        assert_eq!(run(1024.0), reference);
    }

    #[test]
    fn unpredicted_observed_mass_is_flagged() {
        let probes = probe_grid(&AnalyticDensity::normal(1.0, 0.1).unwrap(), 401).unwrap();
        let v = predictability_check(
            &AnalyticDensity::normal(1.0, 0.1).unwrap(),
            &AnalyticDensity::QuinticPushforward,
            &probes,
        )
        .unwrap();
        assert!(v.violation_fraction > 0.3, "{v:?}");
        assert!((v.violation_fraction - 0.5).abs() < 0.01);
    }

    #[test]
    fn two_dimensional_initial() {
        let initial = Arc::new(AnalyticDensity::product_normal(vec![0.0, 0.0], vec![0.1, 0.1]).unwrap());
        let s = Arc::new(draw_initial(&initial, 4000, StreamSeed::new(9, 1)).unwrap());
        let pf = build_pushforward(Arc::new(PdeAverageQoi::default()), s.clone()).unwrap();
        let u = UpdatedDensity::from_ensemble(initial, normal(0.0, 0.1), &pf).unwrap();
        assert!((expected_ratio(&u, &s).unwrap() - 1.0).abs() < 0.05);
        assert!(UpdatedDensity::from_ensemble(normal(0.0, 1.0), normal(0.0, 0.1), &pf).is_err());
    }
}
