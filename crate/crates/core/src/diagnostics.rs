//! Probability and absolute-return profiles.
//!
//! Both are cumulative shares compared against the identity on (0, 1]: a
//! profile bending away from the diagonal points to a time-varying zero
//! probability or a time-varying variance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::ReturnSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Probability,
    AbsoluteReturn,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Probability => "probability",
            ProfileKind::AbsoluteReturn => "absolute_return",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub kind: ProfileKind,
    /// `(s, value)` pairs on the grid `k / len`.
    pub points: Vec<(f64, f64)>,
}

impl Profile {
    fn cumulative(kind: ProfileKind, weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let len = weights.len() as f64;
        let mut acc = 0.0;
        let points = weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                acc += w;
                ((k + 1) as f64 / len, acc / total)
            })
            .collect();
        Self { kind, points }
    }

    /// `max_s |profile(s) - s|`.
    pub fn max_deviation_from_identity(&self) -> f64 {
        self.points
            .iter()
            .map(|(s, v)| (v - s).abs())
            .fold(0.0, f64::max)
    }

    /// Value at the largest grid point not exceeding `s` (0 before the first).
    pub fn value_at(&self, s: f64) -> f64 {
        let idx = self.points.partition_point(|(x, _)| *x <= s + 1e-12);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }
}

/// `p(s) = (sum_t a_t)^-1 sum_{t <= [ns]} a_t`.
pub fn probability_profile(series: &ReturnSeries) -> Result<Profile> {
    if series.nonzero_count() == 0 {
        return Err(Error::AllZero);
    }
    Ok(Profile::cumulative(
        ProfileKind::Probability,
        &series.indicators_f64(),
    ))
}

/// Cumulative share of `|r_t|` over the nonzero returns only.
pub fn absolute_return_profile(series: &ReturnSeries) -> Result<Profile> {
    let abs: Vec<f64> = series.nonzero_values().map(f64::abs).collect();
    if abs.len() < 2 {
        return Err(Error::TooFewNonzero {
            needed: 2,
            found: abs.len(),
        });
    }
    Ok(Profile::cumulative(ProfileKind::AbsoluteReturn, &abs))
}

/// CSV rows `s, value, kind` for any number of profiles.
pub fn write_profiles_csv<W: std::io::Write>(profiles: &[Profile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "value", "kind"])?;
    for p in profiles {
        for (s, v) in &p.points {
            w.write_record([s.to_string(), v.to_string(), p.kind.name().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_series;
    use proptest::prelude::*;

    #[test]
    fn uniform_liquidity_gives_identity() {
        let s = build_series(&[0.1, -0.2, 0.3, 0.4], 0.0).unwrap();
        let p = probability_profile(&s).unwrap();
        assert_eq!(p.points, vec![(0.25, 0.25), (0.5, 0.5), (0.75, 0.75), (1.0, 1.0)]);
    }

    #[test]
    fn late_liquidity() {
        let s = build_series(&[0.0, 0.0, 1.0, 1.0], 0.0).unwrap();
        let p = probability_profile(&s).unwrap();
        assert_eq!(p.value_at(0.5), 0.0);
        assert_eq!(p.value_at(1.0), 1.0);
    }

    #[test]
    fn absolute_return_examples() {
        let s = build_series(&[1.0, 0.0, -1.0, 1.0, 0.0, -1.0], 0.0).unwrap();
        let p = absolute_return_profile(&s).unwrap();
        assert_eq!(p.points, vec![(0.25, 0.25), (0.5, 0.5), (0.75, 0.75), (1.0, 1.0)]);

        let s = build_series(&[0.0, 1.0, 0.0, -3.0], 0.0).unwrap();
        let p = absolute_return_profile(&s).unwrap();
        assert_eq!(p.value_at(0.5), 0.25);
        assert_eq!(p.value_at(1.0), 1.0);

        let s = build_series(&[0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(
            absolute_return_profile(&s),
            Err(Error::TooFewNonzero { needed: 2, found: 1 })
        );
    }

    #[test]
    fn csv_layout() {
        let s = build_series(&[0.0, 2.0], 0.0).unwrap();
        let mut buf = Vec::new();
        write_profiles_csv(&[probability_profile(&s).unwrap()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "s,value,kind\n0.5,0,probability\n1,1,probability\n"
        );
    }

    proptest! {
        #[test]
        fn profiles_are_monotone_and_end_at_one(
            v in prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 2..200),
        ) {
            prop_assume!(v.iter().filter(|x| **x != 0.0).count() >= 2);
            let s = build_series(&v, 0.0).unwrap();
            for p in [probability_profile(&s).unwrap(), absolute_return_profile(&s).unwrap()] {
                prop_assert!(p.points.windows(2).all(|w| w[1].1 >= w[0].1));
                prop_assert_eq!(p.points.last().unwrap().1, 1.0);
            }
        }
    }
}
