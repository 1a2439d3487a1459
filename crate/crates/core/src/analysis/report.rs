use std::collections::BTreeMap;

use serde::Serialize;

/// Direction of a pass/fail comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Pass when `statistic < threshold`.
    Below,
    /// Pass when `statistic > threshold`.
    Above,
}

/// Outcome of one statistical or deterministic check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub experiment: String,
    pub parameter: String,
    /// Measured quantity.
    pub value: f64,
    /// Theoretical value of the measured quantity (NaN when none).
    pub target: f64,
    /// Quantity compared against the threshold.
    pub statistic: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// The check does not apply (e.g. all samples identical).
    pub degenerate: bool,
    pub samples: u64,
    pub fragment: String,
    pub seed: u64,
    /// Steps that grazed a quantizer split plane.
    pub hazards: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TestReport {
    pub fn new(experiment: &str, parameter: impl Into<String>) -> Self {
        TestReport {
            experiment: experiment.to_string(),
            parameter: parameter.into(),
            value: f64::NAN,
            target: f64::NAN,
            statistic: f64::NAN,
            threshold: f64::NAN,
            comparison: Comparison::Below,
            pass: false,
            degenerate: false,
            samples: 0,
            fragment: String::new(),
            seed: 0,
            hazards: 0,
            diagnostics: BTreeMap::new(),
        }
    }

    /// Sets the measured and theoretical values; the statistic becomes
    /// their absolute difference.
    pub fn measured(mut self, value: f64, target: f64) -> Self {
        self.value = value;
        self.target = target;
        self.statistic = (value - target).abs();
        self
    }

    pub fn statistic(mut self, statistic: f64) -> Self {
        self.statistic = statistic;
        self
    }

    pub fn below(self, threshold: f64) -> Self {
        self.judge(threshold, Comparison::Below)
    }

    pub fn above(self, threshold: f64) -> Self {
        self.judge(threshold, Comparison::Above)
    }

    fn judge(mut self, threshold: f64, comparison: Comparison) -> Self {
        self.threshold = threshold;
        self.comparison = comparison;
        self.pass = !self.degenerate
            && match comparison {
                Comparison::Below => self.statistic < threshold,
                Comparison::Above => self.statistic > threshold,
            };
        self
    }

    pub fn samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    pub fn fragment(mut self, fragment: impl Into<String>) -> Self {
        self.fragment = fragment.into();
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn hazards(mut self, hazards: u64) -> Self {
        self.hazards = hazards;
        self
    }

    pub fn degenerate(mut self, degenerate: bool) -> Self {
        self.degenerate = degenerate;
        if degenerate {
            self.pass = false;
        }
        self
    }

    pub fn diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    /// `value - target`, NaN when there is no target.
    pub fn gap(&self) -> f64 {
        self.value - self.target
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_threshold() {
        let r = TestReport::new("x", "").measured(0.51, 0.5).below(0.02);
        assert!(r.pass);
        assert!((r.statistic - 0.01).abs() < 1e-12);
        let p = TestReport::new("x", "").statistic(1e-4).above(1e-3);
        assert!(!p.pass);
        let d = TestReport::new("x", "").statistic(0.0).degenerate(true).below(1.0);
        assert!(!d.pass && d.degenerate);
    }
}
