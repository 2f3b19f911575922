//! Annual extreme-rainfall events sampled from year-dependent quantile tables.
//!
//! A scenario supplies one quantile table per anchor year; the intensity at
//! probability `p` for an arbitrary year interpolates linearly in `p` inside
//! each table and linearly between the two bracketing anchor years. Years
//! outside the anchor span clamp to the nearest anchor. Sampling draws one
//! uniform `u ∈ [0,1)` and returns the `u`-quantile — inverse-CDF sampling,
//! so any distribution shape can be encoded nonparametrically.
//!
//! Intensity is the accumulated daily rainfall of the event, in mm/day; the
//! simulator draws one event per simulated year (the annual daily maximum).

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::uniform;
use crate::scalar::{cast, Scalar};

/// Default projection span, inclusive.
pub const DEFAULT_YEAR_RANGE: (i32, i32) = (2023, 2100);

/// Quantile (return-level) table anchored at one calendar year.
///
/// Points are `(p, intensity mm/day)` with `p` strictly increasing from 0.0
/// to 1.0 and intensities non-decreasing and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable<T> {
    anchor_year: i32,
    points: Vec<(T, T)>,
}

impl<T: Scalar> QuantileTable<T> {
    pub fn new(anchor_year: i32, points: Vec<(T, T)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(format!(
                "quantile table @{anchor_year}: needs at least 2 points, got {}",
                points.len()
            )));
        }
        let zero = T::zero();
        let one = T::one();
        if points[0].0 != zero {
            return Err(Error::Validation(format!(
                "quantile table @{anchor_year}: first point must have p = 0, got p = {}",
                points[0].0
            )));
        }
        if points[points.len() - 1].0 != one {
            return Err(Error::Validation(format!(
                "quantile table @{anchor_year}: last point must have p = 1, got p = {}",
                points[points.len() - 1].0
            )));
        }
        for w in points.windows(2) {
            let (p0, v0) = w[0];
            let (p1, v1) = w[1];
            if !(p1 > p0) {
                return Err(Error::Validation(format!(
                    "quantile table @{anchor_year}: duplicate or decreasing quantile p = {p1} after p = {p0}"
                )));
            }
            if v1 < v0 {
                return Err(Error::Validation(format!(
                    "quantile table @{anchor_year}: intensity decreases from {v0} to {v1} at p = {p1}"
                )));
            }
        }
        for &(p, v) in &points {
            if !v.is_finite() || v < zero {
                return Err(Error::Validation(format!(
                    "quantile table @{anchor_year}: intensity at p = {p} is {v}; must be finite and >= 0"
                )));
            }
        }
        Ok(Self { anchor_year, points })
    }

    pub fn anchor_year(&self) -> i32 {
        self.anchor_year
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Piecewise-linear quantile within this table; `p` must be in [0, 1].
    fn quantile(&self, p: T) -> T {
        // p is validated by the caller; endpoints are covered by invariant.
        let idx = self.points.partition_point(|&(q, _)| q < p);
        if idx == 0 {
            return self.points[0].1;
        }
        let (p1, v1) = self.points[idx - 1];
        if p1 == p {
            return v1;
        }
        let (p2, v2) = self.points[idx];
        let t = (p - p1) / (p2 - p1);
        v1 + t * (v2 - v1)
    }
}

/// Year-indexed family of quantile tables for one climate scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RainfallModel<T> {
    scenario_name: String,
    tables: Vec<QuantileTable<T>>,
    year_range: (i32, i32),
}

/// One sampled rainfall event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainEvent<T> {
    pub year: i32,
    /// Accumulated daily rainfall, mm/day.
    pub intensity_mm: T,
}

impl<T: Scalar> RainfallModel<T> {
    pub fn new(
        scenario_name: impl Into<String>,
        tables: Vec<QuantileTable<T>>,
        year_range: (i32, i32),
    ) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::Validation(
                "rainfall model needs at least one quantile table".into(),
            ));
        }
        if year_range.0 > year_range.1 {
            return Err(Error::Validation(format!(
                "rainfall year range [{}, {}] is empty",
                year_range.0, year_range.1
            )));
        }
        for w in tables.windows(2) {
            if w[1].anchor_year <= w[0].anchor_year {
                return Err(Error::Validation(format!(
                    "rainfall anchor years must be strictly increasing: {} then {}",
                    w[0].anchor_year, w[1].anchor_year
                )));
            }
        }
        for t in &tables {
            if t.anchor_year < year_range.0 || t.anchor_year > year_range.1 {
                return Err(Error::Validation(format!(
                    "anchor year {} outside year range [{}, {}]",
                    t.anchor_year, year_range.0, year_range.1
                )));
            }
        }
        Ok(Self {
            scenario_name: scenario_name.into(),
            tables,
            year_range,
        })
    }

    pub fn scenario_name(&self) -> &str {
        &self.scenario_name
    }

    pub fn tables(&self) -> &[QuantileTable<T>] {
        &self.tables
    }

    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    /// True when every table is a constant distribution, i.e. sampling is
    /// deterministic. Explicit-MDP extraction requires this.
    pub fn is_deterministic(&self) -> bool {
        self.tables.iter().all(|t| {
            let first = t.points[0].1;
            t.points.iter().all(|&(_, v)| v == first)
        })
    }

    /// Intensity at probability `p` for `year`.
    ///
    /// Linear in `p` within a table, linear in year between the bracketing
    /// anchors, clamped to the nearest anchor outside the span.
    pub fn quantile(&self, year: i32, p: T) -> Result<T> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        if year < self.year_range.0 || year > self.year_range.1 {
            return Err(Error::Domain(format!(
                "year {year} outside [{}, {}]",
                self.year_range.0, self.year_range.1
            )));
        }
        let idx = self.tables.partition_point(|t| t.anchor_year < year);
        // Clamp outside the anchor span; exact anchor hit uses that table.
        if idx == 0 {
            return Ok(self.tables[0].quantile(p));
        }
        if self.tables[idx - 1].anchor_year == year {
            return Ok(self.tables[idx - 1].quantile(p));
        }
        if idx == self.tables.len() {
            return Ok(self.tables[idx - 1].quantile(p));
        }
        let lo = &self.tables[idx - 1];
        let hi = &self.tables[idx];
        let v_lo = lo.quantile(p);
        let v_hi = hi.quantile(p);
        let span = cast::<T>(f64::from(hi.anchor_year - lo.anchor_year));
        let t = cast::<T>(f64::from(year - lo.anchor_year)) / span;
        Ok(v_lo + t * (v_hi - v_lo))
    }

    /// Sample one event for `year` from the given stream.
    pub fn sample_event<R: Rng>(&self, year: i32, rng: &mut R) -> Result<RainEvent<T>> {
        let u: T = uniform(rng);
        let intensity_mm = self.quantile(year, u)?;
        Ok(RainEvent { year, intensity_mm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn table(year: i32, pts: &[(f64, f64)]) -> QuantileTable<f64> {
        QuantileTable::new(year, pts.to_vec()).unwrap()
    }

    fn constant_model() -> RainfallModel<f64> {
        RainfallModel::new(
            "const",
            vec![table(2023, &[(0.0, 20.0), (1.0, 20.0)])],
            DEFAULT_YEAR_RANGE,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_constant_distribution() {
        let m = constant_model();
        assert_eq!(m.quantile(2050, 0.5).unwrap(), 20.0);
        assert!(m.is_deterministic());
    }

    #[test]
    fn year_interpolation_midpoint() {
        let m = RainfallModel::new(
            "lin",
            vec![
                table(2023, &[(0.0, 10.0), (1.0, 50.0)]),
                table(2077, &[(0.0, 20.0), (1.0, 60.0)]),
            ],
            DEFAULT_YEAR_RANGE,
        )
        .unwrap();
        // 2050 sits exactly halfway between 2023 and 2077.
        assert!((m.quantile(2050, 1.0).unwrap() - 55.0).abs() < 1e-12);
    }

    #[test]
    fn clamps_outside_anchor_span() {
        let m = RainfallModel::new(
            "clamp",
            vec![
                table(2040, &[(0.0, 10.0), (1.0, 50.0)]),
                table(2060, &[(0.0, 20.0), (1.0, 60.0)]),
            ],
            DEFAULT_YEAR_RANGE,
        )
        .unwrap();
        assert_eq!(m.quantile(2023, 1.0).unwrap(), 50.0);
        assert_eq!(m.quantile(2100, 1.0).unwrap(), 60.0);
    }

    #[test]
    fn rejects_duplicate_quantile() {
        let err = QuantileTable::<f64>::new(
            2023,
            vec![(0.0, 1.0), (0.5, 2.0), (0.5, 3.0), (1.0, 4.0)],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate or decreasing quantile"), "{msg}");
        assert!(msg.contains("0.5"), "{msg}");
    }

    #[test]
    fn rejects_missing_endpoints() {
        assert!(QuantileTable::<f64>::new(2023, vec![(0.1, 1.0), (1.0, 2.0)]).is_err());
        assert!(QuantileTable::<f64>::new(2023, vec![(0.0, 1.0), (0.9, 2.0)]).is_err());
    }

    #[test]
    fn domain_errors() {
        let m = constant_model();
        assert!(matches!(m.quantile(2050, 1.5), Err(Error::Domain(_))));
        assert!(matches!(m.quantile(2101, 0.5), Err(Error::Domain(_))));
        assert!(matches!(m.quantile(1999, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_model_samples_constant() {
        let m = constant_model();
        for seed in [0u64, 7, 42] {
            let mut rng = RandomSource::new(seed).stream(0);
            let ev = m.sample_event(2077, &mut rng).unwrap();
            assert_eq!(ev.intensity_mm, 20.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = RainfallModel::new(
            "lin",
            vec![table(2023, &[(0.0, 10.0), (1.0, 50.0)])],
            DEFAULT_YEAR_RANGE,
        )
        .unwrap();
        let seq = |seed: u64| -> Vec<f64> {
            let mut rng = RandomSource::new(seed).stream(0);
            (0..32)
                .map(|_| m.sample_event(2050, &mut rng).unwrap().intensity_mm)
                .collect()
        };
        assert_eq!(seq(42), seq(42));
        assert_ne!(seq(42), seq(43));
    }

    #[test]
    fn f32_instantiation_interpolates() {
        let t = QuantileTable::<f32>::new(2023, vec![(0.0, 10.0), (1.0, 50.0)]).unwrap();
        let m = RainfallModel::new("f32", vec![t], DEFAULT_YEAR_RANGE).unwrap();
        assert!((m.quantile(2023, 0.5).unwrap() - 30.0).abs() < 1e-5);
    }
}
