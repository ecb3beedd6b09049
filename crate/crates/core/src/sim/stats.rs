use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided 95% normal quantile.
pub fn z95() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(successes <= trials);
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Binomial standard error of a proportion estimate.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    pub name: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl Metric {
    pub fn proportion(name: &str, successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, trials, z95());
        Self {
            name: name.to_string(),
            estimate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            ci_low,
            ci_high,
            trials,
        }
    }

    /// Mean of a per-trial count, with a normal 95% interval.
    pub fn mean(name: &str, sum: u64, sum_sq: u128, trials: u64) -> Self {
        let n = trials as f64;
        let mean = if trials == 0 { 0.0 } else { sum as f64 / n };
        let var = if trials < 2 {
            0.0
        } else {
            ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        };
        let half = z95() * (var / n.max(1.0)).sqrt();
        Self {
            name: name.to_string(),
            estimate: mean,
            ci_low: mean - half,
            ci_high: mean + half,
            trials,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryStats {
    pub scenario_hash: String,
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl SummaryStats {
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,ci_low,ci_high,trials\n");
        for m in &self.metrics {
            writeln!(out, "{},{},{},{},{}", m.name, m.estimate, m.ci_low, m.ci_high, m.trials)
                .unwrap();
        }
        out
    }
}
