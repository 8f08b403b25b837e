//! The forward problem: sample the initial density, push the samples through
//! a map and estimate the push-forward density with a KDE.

use crate::density::{AnalyticDensity, BandwidthRule, Density, KdeDensity};
use crate::error::{Error, Result};
use crate::maps::QoiMap;
use crate::rng::StreamSeed;
use rand::distr::{Distribution, Uniform};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Ordered i.i.d. draws from an initial density, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<f64>,
    seed: StreamSeed,
    source: AnalyticDensity,
}

impl SampleSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Row-major coordinates.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn seed(&self) -> StreamSeed {
        self.seed
    }

    pub fn source(&self) -> &AnalyticDensity {
        &self.source
    }

    /// The first `m` draws. Because draws are sequential in one stream this is
    /// exactly the set `draw_initial` would produce for `m`.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::Usage(format!(
                "prefix of {m} points from a set of {}",
                self.len()
            )));
        }
        Ok(Self {
            points: self.points[..m * self.dim].to_vec(),
            ..self.clone()
        })
    }
}

/// Draws `m` i.i.d. points from a normal, uniform or product-normal density.
pub fn draw_initial(dist: &AnalyticDensity, m: usize, seed: StreamSeed) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::Usage("cannot draw an empty sample set".into()));
    }
    dist.validate()?;
    let mut rng = seed.rng();
    let points: Vec<f64> = match dist {
        AnalyticDensity::Normal { mean, std } => (0..m)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + std * z
            })
            .collect(),
        AnalyticDensity::Uniform { lo, hi } => {
            let u = Uniform::new(*lo, *hi).map_err(|e| Error::Usage(e.to_string()))?;
            u.sample_iter(&mut rng).take(m).collect()
        }
        AnalyticDensity::ProductNormal { means, stds } => {
            let mut out = Vec::with_capacity(m * means.len());
            for _ in 0..m {
                for (mu, s) in means.iter().zip(stds) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    out.push(mu + s * z);
                }
            }
            out
        }
        AnalyticDensity::QuinticPushforward => {
            return Err(Error::Unsupported(
                "sampling is only implemented for normal and uniform families".into(),
            ))
        }
    };
    Ok(SampleSet {
        dim: dist.dim(),
        points,
        seed,
        source: dist.clone(),
    })
}

/// Evaluates `map` at every point, in order; failures name the sample index.
pub fn evaluate_map(map: &dyn QoiMap, samples: &SampleSet) -> Result<Vec<f64>> {
    if map.dim() != samples.dim() {
        return Err(Error::Usage(format!(
            "map {} takes dimension {}, samples have {}",
            map.label(),
            map.dim(),
            samples.dim()
        )));
    }
    let evaluated: Vec<Result<f64>> = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            map.eval(samples.point(i)).map_err(|e| Error::MapEvaluation {
                location: format!("sample {i}"),
                source: Box::new(e),
            })
        })
        .collect();
    evaluated.into_iter().collect()
}

/// Push-forward of a sample set through one map, with its KDE.
#[derive(Debug, Clone)]
pub struct PushforwardEnsemble {
    map: Arc<dyn QoiMap>,
    samples: Arc<SampleSet>,
    outputs: Vec<f64>,
    kde: KdeDensity,
}

impl PushforwardEnsemble {
    pub fn label(&self) -> String {
        self.map.label()
    }

    pub fn map(&self) -> &Arc<dyn QoiMap> {
        &self.map
    }

    pub fn samples(&self) -> &Arc<SampleSet> {
        &self.samples
    }

    /// `Q(λ_i)` in sample order.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn kde(&self) -> &KdeDensity {
        &self.kde
    }

    /// `π^Q(Q(λ))`: the push-forward estimate composed with the map.
    pub fn eval_composed(&self, lambda: &[f64]) -> Result<f64> {
        let q = self.map.eval(lambda)?;
        self.kde.eval(&[q])
    }

    /// The KDE at each stored output, in sample order.
    pub fn density_at_outputs(&self) -> Result<Vec<f64>> {
        self.kde.eval_scalars(&self.outputs)
    }

    /// Writes `sample_index, λ..., q` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = vec!["sample_index".to_string()];
        header.extend((1..=self.samples.dim()).map(|d| format!("lambda_{d}")));
        header.push("q".into());
        w.write_record(&header)?;
        for (i, (p, q)) in self.samples.iter().zip(&self.outputs).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.iter().map(|v| v.to_string()));
            row.push(q.to_string());
            w.write_record(&row)?;
        }
        w.into_inner()
            .map_err(|e| Error::io(path, e.into_error()))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Evaluates the map on every sample and fits a Scott-rule KDE to the outputs.
pub fn build_pushforward(
    map: Arc<dyn QoiMap>,
    samples: Arc<SampleSet>,
) -> Result<PushforwardEnsemble> {
    let outputs = evaluate_map(map.as_ref(), &samples)?;
    let kde = KdeDensity::fit(&outputs, 1, BandwidthRule::Scott)?;
    Ok(PushforwardEnsemble {
        map,
        samples,
        outputs,
        kde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pwl_pushforward_exact;
    use crate::maps::{pwl_surrogate, FnMap};
    use crate::rng::StreamSeed;

    fn identity() -> Arc<dyn QoiMap> {
        Arc::new(FnMap::new(1, "id", |x: &[f64]| x[0]))
    }

    #[test]
    fn normal_draws_are_reproducible() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        let a = draw_initial(&d, 10_000, StreamSeed::new(7, 1)).unwrap();
        let b = draw_initial(&d, 10_000, StreamSeed::new(7, 1)).unwrap();
        assert_eq!(a, b);
        let mean = a.points().iter().sum::<f64>() / 1e4;
        assert!(mean.abs() < 4.0 / 100.0);
        let c = draw_initial(&d, 10_000, StreamSeed::new(7, 2)).unwrap();
        assert_ne!(a.points(), c.points());
        assert_eq!(a.prefix(100).unwrap(), draw_initial(&d, 100, StreamSeed::new(7, 1)).unwrap());
    }

    #[test]
    fn product_normal_spread() {
        let d = AnalyticDensity::product_normal(vec![0.0, 0.0], vec![0.1, 0.1]).unwrap();
        let s = draw_initial(&d, 10_000, StreamSeed::new(3, 0)).unwrap();
        assert_eq!(s.dim(), 2);
        for k in 0..2 {
            let xs: Vec<f64> = s.iter().map(|p| p[k]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
            assert!((sd - 0.1).abs() < 0.01, "{sd}");
        }
    }

    #[test]
    fn uniform_draws_stay_in_range() {
        let d = AnalyticDensity::uniform(-1.0, 1.0).unwrap();
        let s = draw_initial(&d, 5000, StreamSeed::new(1, 0)).unwrap();
        assert!(s.points().iter().all(|x| (-1.0..1.0).contains(x)));
    }

    #[test]
    fn empty_and_unsupported_draws() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        assert!(matches!(draw_initial(&d, 0, 0.into()), Err(Error::Usage(_))));
        assert!(matches!(
            draw_initial(&AnalyticDensity::QuinticPushforward, 10, 0.into()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn identity_pushforward_recovers_normal_pdf() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        let s = Arc::new(draw_initial(&d, 100_000, StreamSeed::new(11, 0)).unwrap());
        let pf = build_pushforward(identity(), s.clone()).unwrap();
        assert_eq!(pf.outputs(), s.points());
        assert!((pf.kde().eval(&[0.0]).unwrap() - 0.3989422804).abs() < 0.02);
        assert!((pf.eval_composed(&[0.0]).unwrap() - 0.3989422804).abs() < 0.02);
        let at = pf.density_at_outputs().unwrap();
        assert_eq!(at[17], pf.kde().eval(&[pf.outputs()[17]]).unwrap());
        assert_eq!(at[17], pf.eval_composed(s.point(17)).unwrap());
    }

    #[test]
    fn constant_map_is_degenerate() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        let s = Arc::new(draw_initial(&d, 100, 0.into()).unwrap());
        let c: Arc<dyn QoiMap> = Arc::new(FnMap::new(1, "c", |_: &[f64]| 2.5));
        assert!(matches!(build_pushforward(c, s), Err(Error::DegenerateSamples(_))));
    }

    #[test]
    fn failing_sample_is_named() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        let s = Arc::new(draw_initial(&d, 100, 0.into()).unwrap());
        let first_bad = s.iter().position(|p| p[0] > 1.0).unwrap();
        let bad: Arc<dyn QoiMap> = Arc::new(FnMap::new(1, "bad", |x: &[f64]| if x[0] > 1.0 { f64::NAN } else { x[0] }));
        match build_pushforward(bad, s) {
            Err(Error::MapEvaluation { location, .. }) => assert_eq!(location, format!("sample {first_bad}")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plateau_of_third_pwl_surrogate() {
        let d = AnalyticDensity::uniform(-1.0, 1.0).unwrap();
        let s = Arc::new(draw_initial(&d, 100_000, StreamSeed::new(5, 0)).unwrap());
        let map = pwl_surrogate(3).unwrap();
        let exact = pwl_pushforward_exact(&map).unwrap().eval(&[0.0]).unwrap();
        assert_eq!(exact, 8.0);
        let pf = build_pushforward(Arc::new(map), s).unwrap();
        assert!(pf.kde().eval(&[0.0]).unwrap() >= exact / 2.0);
    }

    #[test]
    fn l1_distance_shrinks_with_m() {
        let d = AnalyticDensity::normal(0.0, 1.0).unwrap();
        let all = Arc::new(draw_initial(&d, 100_000, StreamSeed::new(2, 0)).unwrap());
        let grid: Vec<f64> = (0..=2000).map(|i| -6.0 + 12.0 * i as f64 / 2000.0).collect();
        let l1 = |m: usize| {
            let pf = build_pushforward(identity(), Arc::new(all.prefix(m).unwrap())).unwrap();
            let v = pf.kde().eval_scalars(&grid).unwrap();
            grid.iter().zip(v).map(|(x, k)| (k - d.eval(&[*x]).unwrap()).abs()).sum::<f64>() * 12.0 / 2000.0
        };
        let (a, b, c) = (l1(1000), l1(10_000), l1(100_000));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn csv_export_columns() {
        let d = AnalyticDensity::product_normal(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let s = Arc::new(draw_initial(&d, 3, 0.into()).unwrap());
        let m: Arc<dyn QoiMap> = Arc::new(FnMap::new(2, "sum", |x: &[f64]| x[0] + x[1]));
        let pf = build_pushforward(m, s.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.csv");
        pf.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_index,lambda_1,lambda_2,q");
        let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], 1.0);
        assert_eq!(&row[1..3], s.point(1));
        assert_eq!(row[3], pf.outputs()[1]);
    }
}
