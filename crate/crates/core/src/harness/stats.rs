use serde::{Deserialize, Serialize};

use super::{HarnessError, RunMetrics};

/// Identity of one benchmark matrix cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub target: String,
    pub model: String,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for one sample.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    /// Mean of the middle two values for even counts.
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self, HarnessError> {
        if values.is_empty() {
            return Err(HarnessError::EmptySamples);
        }
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (min, max) = (sorted[0], sorted[n - 1]);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        // rounding can push the mean of near-equal values just past an end
        let mean = (values.iter().sum::<f64>() / n as f64).clamp(min, max);
        let stddev = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Summary {
            mean,
            stddev,
            min,
            max,
            median,
        })
    }
}

/// Statistics for one cell over its measured runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    #[serde(flatten)]
    pub id: CellId,
    pub samples: Vec<RunMetrics>,
    pub tok_per_s: Summary,
    pub time_per_inference_ms: Summary,
    /// Absent unless every sample carries a memory measurement.
    pub peak_memory_bytes: Option<Summary>,
}

pub fn aggregate(id: CellId, samples: Vec<RunMetrics>) -> Result<CellStats, HarnessError> {
    let col = |f: fn(&RunMetrics) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let tok_per_s = Summary::of(&col(|m| m.tok_per_s))?;
    let time_per_inference_ms = Summary::of(&col(|m| m.time_per_inference_ms))?;
    let memory: Option<Vec<f64>> = samples
        .iter()
        .map(|m| m.peak_memory_bytes.map(|b| b as f64))
        .collect();
    let peak_memory_bytes = memory.map(|v| Summary::of(&v)).transpose()?;
    Ok(CellStats {
        id,
        samples,
        tok_per_s,
        time_per_inference_ms,
        peak_memory_bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_three() {
        let s = Summary::of(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(
            s,
            Summary {
                mean: 20.0,
                stddev: 10.0,
                min: 10.0,
                max: 30.0,
                median: 20.0
            }
        );
    }

    #[test]
    fn single_sample() {
        let s = Summary::of(&[42.0]).unwrap();
        assert_eq!(
            s,
            Summary {
                mean: 42.0,
                stddev: 0.0,
                min: 42.0,
                max: 42.0,
                median: 42.0
            }
        );
    }

    #[test]
    fn even_median() {
        assert_eq!(Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
    }

    #[test]
    fn empty() {
        assert!(matches!(Summary::of(&[]), Err(HarnessError::EmptySamples)));
        let id = CellId {
            target: "t".into(),
            model: "m".into(),
            threads: 1,
        };
        assert!(matches!(aggregate(id, vec![]), Err(HarnessError::EmptySamples)));
    }

    #[test]
    fn memory_absent_if_any_sample_lacks_it() {
        let id = CellId {
            target: "t".into(),
            model: "m".into(),
            threads: 1,
        };
        let a = RunMetrics::from_counts(3, 1.0, Some(100)).unwrap();
        let b = RunMetrics::from_counts(3, 1.0, None).unwrap();
        assert!(aggregate(id.clone(), vec![a, b])
            .unwrap()
            .peak_memory_bytes
            .is_none());
        let s = aggregate(id, vec![a, a]).unwrap();
        assert_eq!(s.peak_memory_bytes.unwrap().mean, 100.0);
    }

    proptest! {
        #[test]
        fn ordering_invariants(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = Summary::of(&v).unwrap();
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            prop_assert!(s.stddev >= 0.0);
        }
    }
}
