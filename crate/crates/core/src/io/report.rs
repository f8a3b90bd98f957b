//! JSON result reports.
//!
//! Keys appear in a fixed order, bounds are keyed by state id in numeric
//! order, and floats are written in shortest round-trip form, so parsing and
//! re-serializing a report reproduces it byte for byte. Wall-clock time is
//! deliberately not part of a report: identical inputs give identical bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::framework::ResultBounds;
use crate::iterative::IntervalVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportStats {
    pub explored: usize,
    pub episodes: u64,
    pub vi_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub model: String,
    pub method: String,
    pub epsilon: f64,
    pub seed: u64,
    pub certified: bool,
    /// `None` for methods without an error bound.
    pub global_error: Option<f64>,
    pub bounds: BTreeMap<usize, [f64; 2]>,
    pub stats: ReportStats,
}

fn bounds_map(iv: &IntervalVector) -> BTreeMap<usize, [f64; 2]> {
    iv.lower
        .iter()
        .zip(&iv.upper)
        .enumerate()
        .map(|(s, (&l, &u))| (s, [l, u]))
        .collect()
}

impl ResultReport {
    /// Report for a certified (or budget-exhausted partial) run.
    pub fn from_result(model: &str, result: &ResultBounds, certified: bool) -> Self {
        ResultReport {
            model: model.to_string(),
            method: result.method.clone(),
            epsilon: result.epsilon,
            seed: result.seed.unwrap_or(0),
            certified,
            global_error: Some(result.global_error),
            bounds: bounds_map(&result.bounds),
            stats: ReportStats {
                explored: result.stats.explored,
                episodes: result.stats.episodes,
                vi_steps: result.stats.vi_steps,
            },
        }
    }

    /// Report for a point estimate with no guarantee, e.g. the power method.
    pub fn uncertified(
        model: &str,
        method: &str,
        epsilon: f64,
        seed: u64,
        values: &[f64],
        iterations: u64,
    ) -> Self {
        ResultReport {
            model: model.to_string(),
            method: method.to_string(),
            epsilon,
            seed,
            certified: false,
            global_error: None,
            bounds: values
                .iter()
                .enumerate()
                .map(|(s, &v)| (s, [v, v]))
                .collect(),
            stats: ReportStats {
                explored: values.len(),
                episodes: 0,
                vi_steps: iterations,
            },
        }
    }

    pub fn bounds(&self) -> IntervalVector {
        let n = self.bounds.keys().next_back().map_or(0, |&k| k + 1);
        let mut iv = IntervalVector {
            lower: vec![0.0; n],
            upper: vec![0.0; n],
        };
        for (&s, &[l, u]) in &self.bounds {
            iv.lower[s] = l;
            iv.upper[s] = u;
        }
        iv
    }
}

pub fn write_report(report: &ResultReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports contain only finite numbers");
    s.push('\n');
    s
}

pub fn parse_report(text: &str) -> Result<ResultReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::Stats;

    fn fig1_report() -> ResultReport {
        let result = ResultBounds {
            bounds: IntervalVector::exact(vec![0.0, 0.5, 1.0 / 12.0, 5.0 / 12.0]),
            global_error: 0.0,
            method: "classic".into(),
            epsilon: 1e-4,
            seed: None,
            stats: Stats {
                explored: 4,
                episodes: 1,
                vi_steps: 0,
            },
        };
        ResultReport::from_result("fig1", &result, true)
    }

    #[test]
    fn fig1_bounds_block() {
        let text = write_report(&fig1_report());
        assert!(
            text.contains("\"1\": [\n      0.5,\n      0.5\n    ]"),
            "{text}"
        );
        assert!(text.find("\"model\"").unwrap() < text.find("\"bounds\"").unwrap());
    }

    #[test]
    fn empty_stats_are_present() {
        let r = ResultReport::uncertified("m", "power", 1e-4, 0, &[1.0], 0);
        let text = write_report(&r);
        for key in [
            "\"explored\"",
            "\"episodes\"",
            "\"vi_steps\"",
            "\"certified\": false",
            "\"global_error\": null",
        ] {
            assert!(text.contains(key), "{key} missing in {text}");
        }
    }

    #[test]
    fn reserialization_is_byte_identical() {
        let text = write_report(&fig1_report());
        let back = parse_report(&text).unwrap();
        assert_eq!(back, fig1_report());
        assert_eq!(write_report(&back), text);
        assert_eq!(back.bounds().lower[3], 5.0 / 12.0);
    }
}
