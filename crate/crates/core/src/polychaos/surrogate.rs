use super::hermite::hermite_table;
use crate::error::{Error, Result};
use crate::maps::{check_dim, QoiMap};
use serde::{Deserialize, Serialize};

/// Affine input map `ζ = (λ - mean) / std` applied before basis evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    pub const STANDARD: Self = Self { mean: 0.0, std: 1.0 };

    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(Error::Usage(format!(
                "standardization needs finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }
}

/// Truncated Hermite chaos expansion `Σ_{|α| ≤ n} c_α Π_d He_{α_d}(ζ_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PceDocument", into = "PceDocument")]
pub struct PceSurrogate {
    truncation: usize,
    standardization: Vec<Standardization>,
    terms: Vec<(Vec<usize>, f64)>,
}

impl PceSurrogate {
    /// Builds a surrogate; every multi-index must have total degree at most `truncation`.
    pub fn new(
        truncation: usize,
        standardization: Vec<Standardization>,
        terms: Vec<(Vec<usize>, f64)>,
    ) -> Result<Self> {
        let dim = standardization.len();
        if dim == 0 {
            return Err(Error::Usage("surrogate needs at least one input dimension".into()));
        }
        for s in &standardization {
            Standardization::new(s.mean, s.std)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for (index, value) in &terms {
            if index.len() != dim {
                return Err(Error::Usage(format!(
                    "multi-index {index:?} does not have dimension {dim}"
                )));
            }
            if index.iter().sum::<usize>() > truncation {
                return Err(Error::Usage(format!(
                    "multi-index {index:?} exceeds total degree {truncation}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Usage(format!("coefficient for {index:?} is {value}")));
            }
            if !seen.insert(index.clone()) {
                return Err(Error::Usage(format!("duplicate multi-index {index:?}")));
            }
        }
        Ok(Self {
            truncation,
            standardization,
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.standardization.len()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn standardization(&self) -> &[Standardization] {
        &self.standardization
    }

    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    /// Coefficient of `index`, zero when absent.
    pub fn coefficient(&self, index: &[usize]) -> f64 {
        self.terms
            .iter()
            .find(|(i, _)| i.as_slice() == index)
            .map_or(0.0, |(_, c)| *c)
    }

    /// The same expansion restricted to total degree `n`.
    pub fn truncate(&self, n: usize) -> Self {
        Self {
            truncation: n.min(self.truncation),
            standardization: self.standardization.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(i, _)| i.iter().sum::<usize>() <= n)
                .cloned()
                .collect(),
        }
    }

    /// `pce_eval`: finite basis sum at the standardized input.
    pub fn evaluate(&self, lambda: &[f64]) -> Result<f64> {
        check_dim(lambda, self.dim())?;
        let tables: Vec<Vec<f64>> = lambda
            .iter()
            .zip(&self.standardization)
            .map(|(&x, s)| hermite_table(self.truncation, s.apply(x)))
            .collect();
        Ok(self
            .terms
            .iter()
            .map(|(index, c)| c * index.iter().zip(&tables).map(|(&i, t)| t[i]).product::<f64>())
            .sum())
    }
}

impl QoiMap for PceSurrogate {
    fn dim(&self) -> usize {
        self.standardization.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x)
    }

    fn label(&self) -> String {
        format!("pce({})", self.truncation)
    }
}

/// JSON form of a [`PceSurrogate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceDocument {
    pub dimension: usize,
    pub truncation: usize,
    pub standardization: Vec<Standardization>,
    pub entries: Vec<PceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceEntry {
    pub index: Vec<usize>,
    pub value: f64,
}

impl From<PceSurrogate> for PceDocument {
    fn from(s: PceSurrogate) -> Self {
        Self {
            dimension: s.dim(),
            truncation: s.truncation,
            standardization: s.standardization,
            entries: s
                .terms
                .into_iter()
                .map(|(index, value)| PceEntry { index, value })
                .collect(),
        }
    }
}

impl TryFrom<PceDocument> for PceSurrogate {
    type Error = Error;

    fn try_from(doc: PceDocument) -> Result<Self> {
        if doc.dimension != doc.standardization.len() {
            return Err(Error::Usage(format!(
                "dimension {} does not match {} standardization entries",
                doc.dimension,
                doc.standardization.len()
            )));
        }
        Self::new(
            doc.truncation,
            doc.standardization,
            doc.entries.into_iter().map(|e| (e.index, e.value)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_linear() {
        let c = PceSurrogate::new(0, vec![Standardization::STANDARD], vec![(vec![0], 2.0)]).unwrap();
        assert_eq!(c.evaluate(&[17.0]).unwrap(), 2.0);
        let l = PceSurrogate::new(1, vec![Standardization::STANDARD], vec![(vec![1], 1.0)]).unwrap();
        assert_eq!(l.evaluate(&[3.0]).unwrap(), 3.0);
        assert!(matches!(l.evaluate(&[3.0, 1.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn standardized_two_dimensional() {
        let s = vec![Standardization::new(1.0, 2.0).unwrap(), Standardization::new(0.0, 0.5).unwrap()];
        let p = PceSurrogate::new(3, s, vec![(vec![1, 2], 0.5), (vec![0, 0], 1.0)]).unwrap();
        // ζ = (1, 2): He_1(1) He_2(2) = 1 * 3
        assert_eq!(p.evaluate(&[3.0, 1.0]).unwrap(), 1.0 + 0.5 * 3.0);
        assert_eq!(p.coefficient(&[1, 2]), 0.5);
        assert_eq!(p.coefficient(&[2, 1]), 0.0);
        assert_eq!(p.truncate(2).terms().len(), 1);
    }

    #[test]
    fn rejects_terms_above_truncation() {
        let s = vec![Standardization::STANDARD; 2];
        assert!(PceSurrogate::new(2, s.clone(), vec![(vec![2, 1], 1.0)]).is_err());
        assert!(PceSurrogate::new(2, s.clone(), vec![(vec![1], 1.0)]).is_err());
        assert!(PceSurrogate::new(2, s, vec![(vec![1, 0], 1.0), (vec![1, 0], 2.0)]).is_err());
        assert!(Standardization::new(0.0, 0.0).is_err());
    }

    #[test]
    fn json_layout() {
        let p = PceSurrogate::new(1, vec![Standardization::STANDARD], vec![(vec![1], -0.5)]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["dimension"], 1);
        assert_eq!(v["truncation"], 1);
        assert_eq!(v["standardization"][0]["std"], 1.0);
        assert_eq!(v["entries"][0]["index"][0], 1);
        assert_eq!(v["entries"][0]["value"], -0.5);
        let bad = r#"{"dimension":2,"truncation":1,"standardization":[{"mean":0.0,"std":1.0}],"entries":[]}"#;
        assert!(serde_json::from_str::<PceSurrogate>(bad).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(coefs in prop::collection::vec(-10.0f64..10.0, 6), mean in -1.0f64..1.0, std in 0.01f64..3.0) {
            let idx = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
            let terms = idx.iter().zip(&coefs).map(|(i, c)| (i.to_vec(), *c)).collect();
            let s = vec![Standardization { mean, std }, Standardization::STANDARD];
            let p = PceSurrogate::new(2, s, terms).unwrap();
            let back: PceSurrogate = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
