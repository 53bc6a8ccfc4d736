//! Summary statistics and the significance tests used to compare runs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { n, mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-tailed p-value.
    pub p: f64,
}

fn two_tailed(t: f64, df: f64, mean_diff: f64) -> TTest {
    if !t.is_finite() {
        // Zero variance on both sides: either identical or certainly different.
        let p = if mean_diff == 0.0 { 1.0 } else { 0.0 };
        return TTest { t, df, p };
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    TTest {
        t,
        df,
        p: 2.0 * (1.0 - dist.cdf(t.abs())),
    }
}

/// Two-sample Student's t-test with pooled variance.
///
/// # Panics
///
/// If either sample has fewer than two values.
pub fn student_t_test(a: &[f64], b: &[f64]) -> TTest {
    assert!(
        a.len() >= 2 && b.len() >= 2,
        "t-test needs two values per sample"
    );
    let (sa, sb) = (Summary::of(a), Summary::of(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * sa.sd.powi(2) + (nb - 1.0) * sb.sd.powi(2)) / df;
    let diff = sa.mean - sb.mean;
    let t = if pooled == 0.0 {
        if diff == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY.copysign(diff)
        }
    } else {
        diff / (pooled * (1.0 / na + 1.0 / nb)).sqrt()
    };
    two_tailed(t, df, diff)
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> TTest {
    assert!(
        a.len() >= 2 && b.len() >= 2,
        "t-test needs two values per sample"
    );
    let (sa, sb) = (Summary::of(a), Summary::of(b));
    let (va, vb) = (
        sa.sd.powi(2) / a.len() as f64,
        sb.sd.powi(2) / b.len() as f64,
    );
    let diff = sa.mean - sb.mean;
    if va + vb == 0.0 {
        let t = if diff == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY.copysign(diff)
        };
        return two_tailed(t, (a.len() + b.len() - 2) as f64, diff);
    }
    let t = diff / (va + vb).sqrt();
    let df =
        (va + vb).powi(2) / (va.powi(2) / (a.len() - 1) as f64 + vb.powi(2) / (b.len() - 1) as f64);
    two_tailed(t, df, diff)
}

/// Pearson goodness-of-fit of `counts` against `probabilities`.
/// Returns `(statistic, p_value)`.
pub fn chi_square_test(counts: &[u64], probabilities: &[f64]) -> (f64, f64) {
    assert_eq!(counts.len(), probabilities.len());
    assert!(counts.len() >= 2, "need at least two categories");
    let total: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probabilities)
        .map(|(&c, &p)| {
            let expected = p * total as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constants_has_zero_sd() {
        let s = Summary::of(&[0.7; 5]);
        assert_eq!(s.sd, 0.0);
        assert!((s.mean - 0.7).abs() < 1e-15);
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn t_test_reference_values() {
        // scipy.stats.ttest_ind([1,2,3,4,5],[2,4,6,8,10]) -> t=-1.8973665961, p=0.0943498
        let r = student_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!((r.t + 1.897_366_596_1).abs() < 1e-9);
        assert!((r.p - 0.094_349_77).abs() < 1e-7);
        // equal_var=False -> t=-1.8973665961, df=5.882..., p=0.107531
        let w = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!((w.df - 5.882_352_9).abs() < 1e-6);
        assert!((w.p - 0.107_531_2).abs() < 1e-6);
    }

    #[test]
    fn degenerate_t_tests() {
        assert_eq!(student_t_test(&[1.0, 1.0], &[1.0, 1.0]).p, 1.0);
        assert_eq!(student_t_test(&[1.0, 1.0], &[2.0, 2.0]).p, 0.0);
    }

    #[test]
    fn chi_square_reference() {
        // scipy.stats.chisquare([18, 22, 20, 40], [25, 25, 25, 25]) -> 12.32, p=0.0063636
        let (stat, p) = chi_square_test(&[18, 22, 20, 40], &[0.25; 4]);
        assert!((stat - 12.32).abs() < 1e-9);
        assert!((p - 0.006_363_6).abs() < 1e-6);
    }
}
