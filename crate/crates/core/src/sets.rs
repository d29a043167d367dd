//! Measurable subsets of the line as finite unions of half-open intervals.
//!
//! The window functionals (relative density, complement sparsity) are exact:
//! `t -> |E ∩ [t, t + a)|` is piecewise linear with breakpoints where `t` or
//! `t + a` crosses an interval endpoint, so the extremes are attained there.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A half-open interval `[lo, hi)`.
pub type Interval = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
    period: Option<f64>,
}

impl IntervalSet {
    /// Builds a set from arbitrary (possibly overlapping) intervals. Periodic
    /// input is folded into the fundamental domain `[0, period)`.
    pub fn new(intervals: Vec<Interval>, period: Option<f64>) -> Result<Self> {
        if let Some(p) = period {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid("period", format!("{p} is not a positive real")));
            }
        }
        let mut pieces = Vec::with_capacity(intervals.len() + 1);
        for (lo, hi) in intervals {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(invalid("intervals", "endpoints must be finite"));
            }
            if hi < lo {
                return Err(invalid("intervals", format!("[{lo}, {hi}) is reversed")));
            }
            if hi == lo {
                continue;
            }
            match period {
                None => pieces.push((lo, hi)),
                Some(p) if hi - lo >= p => pieces.push((0.0, p)),
                Some(p) => {
                    let l = lo.rem_euclid(p);
                    let r = l + (hi - lo);
                    if r > p {
                        pieces.push((l, p));
                        pieces.push((0.0, r - p));
                    } else {
                        pieces.push((l, r));
                    }
                }
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for (lo, hi) in pieces {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self {
            intervals: merged,
            period,
        })
    }

    pub fn bounded(intervals: Vec<Interval>) -> Result<Self> {
        Self::new(intervals, None)
    }

    pub fn periodic(intervals: Vec<Interval>, period: f64) -> Result<Self> {
        Self::new(intervals, Some(period))
    }

    pub fn empty(period: Option<f64>) -> Self {
        Self {
            intervals: Vec::new(),
            period,
        }
    }

    /// The whole line, as the 1-periodic set `[0, 1)`.
    pub fn full_line() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
            period: Some(1.0),
        }
    }

    /// Period-1 set whose complement is `k` equal holes of total measure `eps`;
    /// hole `j` is `[j/k, (j + eps)/k)`.
    pub fn holes(eps: f64, k: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(invalid("eps", format!("{eps} is outside [0, 1]")));
        }
        if k == 0 {
            return Err(invalid("k", "need at least one hole"));
        }
        let kf = k as f64;
        let intervals = (0..k).map(|j| ((j as f64 + eps) / kf, (j as f64 + 1.0) / kf)).collect();
        Self::periodic(intervals, 1.0)
    }

    /// Parses the `holes:eps,k` shorthand.
    pub fn from_shorthand(spec: &str) -> Result<Self> {
        let body = spec
            .trim()
            .strip_prefix("holes:")
            .ok_or_else(|| invalid("set", format!("unknown shorthand `{spec}`")))?;
        let (eps, k) = body
            .split_once(',')
            .ok_or_else(|| invalid("set", format!("expected `holes:eps,k`, got `{spec}`")))?;
        let eps: f64 = eps
            .trim()
            .parse()
            .map_err(|e| invalid("set", format!("eps in `{spec}`: {e}")))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|e| invalid("set", format!("k in `{spec}`: {e}")))?;
        Self::holes(eps, k)
    }

    /// Random periodic set of at most `count` intervals with uniform endpoints.
    pub fn random_periodic<G: Rng + ?Sized>(rng: &mut G, count: usize, period: f64) -> Self {
        let mut ends: Vec<f64> = (0..2 * count).map(|_| rng.gen_range(0.0..period)).collect();
        ends.sort_by(f64::total_cmp);
        let intervals = ends.chunks(2).map(|c| (c[0], c[1])).collect();
        Self::periodic(intervals, period).expect("endpoints lie in the fundamental domain")
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Total length of the stored intervals (one period for periodic sets).
    pub fn base_measure(&self) -> f64 {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = match self.period {
            Some(p) => x.rem_euclid(p),
            None => x,
        };
        self.intervals.iter().any(|&(l, r)| l <= x && x < r)
    }

    /// |E ∩ (-inf, x)| for bounded sets; for periodic sets the same quantity
    /// measured from 0, negative for `x < 0`.
    fn cumulative(&self, x: f64) -> f64 {
        let within = |y: f64| -> f64 { self.intervals.iter().map(|&(l, r)| (r.min(y) - l).max(0.0)).sum() };
        match self.period {
            None => within(x),
            Some(p) => {
                let turns = (x / p).floor();
                let rest = (x - turns * p).clamp(0.0, p);
                turns * self.base_measure() + within(rest)
            }
        }
    }

    /// Lebesgue measure of `E ∩ [lo, hi]`.
    pub fn measure_on(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if self.period.is_none() {
            return self
                .intervals
                .iter()
                .map(|&(l, r)| (r.min(hi) - l.max(lo)).max(0.0))
                .sum();
        }
        (self.cumulative(hi) - self.cumulative(lo)).clamp(0.0, hi - lo)
    }

    /// The pieces of `E ∩ [lo, hi)`, sorted.
    pub fn pieces_in(&self, lo: f64, hi: f64) -> Vec<Interval> {
        let mut out = Vec::new();
        if hi <= lo {
            return out;
        }
        match self.period {
            None => {
                for &(l, r) in &self.intervals {
                    let (a, b) = (l.max(lo), r.min(hi));
                    if b > a {
                        out.push((a, b));
                    }
                }
            }
            Some(p) => {
                let first = (lo / p).floor() as i64;
                let last = (hi / p).ceil() as i64;
                for turn in first..last {
                    let base = turn as f64 * p;
                    for &(l, r) in &self.intervals {
                        let (a, b) = ((base + l).max(lo), (base + r).min(hi));
                        if b > a {
                            match out.last_mut() {
                                Some(prev) if a <= prev.1 => prev.1 = prev.1.max(b),
                                _ => out.push((a, b)),
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Complement within the fundamental domain, for periodic sets.
    pub fn complement(&self) -> Result<Self> {
        let p = self.period.ok_or(Error::NeedsScanWindow)?;
        let gaps = gaps_between(&self.intervals, 0.0, p);
        Ok(Self {
            intervals: gaps,
            period: Some(p),
        })
    }

    /// Complement relative to the window `[lo, hi)`, as a bounded set.
    pub fn complement_within(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(invalid("window", format!("[{lo}, {hi}) is not a bounded window")));
        }
        let pieces = self.pieces_in(lo, hi);
        Ok(Self {
            intervals: gaps_between(&pieces, lo, hi),
            period: None,
        })
    }

    /// Shift by `s` (reduced modulo the period for periodic sets).
    pub fn translate(&self, s: f64) -> Self {
        let moved = self.intervals.iter().map(|&(l, r)| (l + s, r + s)).collect();
        Self::new(moved, self.period).expect("translation preserves validity")
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.period != other.period {
            return Err(invalid("set", "union of sets with different periods"));
        }
        let all = self.intervals.iter().chain(&other.intervals).copied().collect();
        Self::new(all, self.period)
    }

    fn scan_candidates(&self, a: f64, scan: Option<Interval>) -> Result<Vec<f64>> {
        let ends = self.intervals.iter().flat_map(|&(l, r)| [l, r]);
        match (self.period, scan) {
            (Some(p), _) => {
                let mut ts = vec![0.0];
                for e in ends {
                    ts.push(e.rem_euclid(p));
                    ts.push((e - a).rem_euclid(p));
                }
                Ok(ts)
            }
            (None, Some((s0, s1))) => {
                if s1 - s0 < a {
                    return Err(invalid("scan", "window shorter than the probe length"));
                }
                let t_max = s1 - a;
                let mut ts = vec![s0, t_max];
                for e in ends {
                    for t in [e, e - a] {
                        if (s0..=t_max).contains(&t) {
                            ts.push(t);
                        }
                    }
                }
                Ok(ts)
            }
            (None, None) => Err(Error::NeedsScanWindow),
        }
    }

    /// Smallest and largest `|E ∩ [t, t + a)|` over admissible offsets `t`.
    pub fn window_extremes(&self, a: f64, scan: Option<Interval>) -> Result<(f64, f64)> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", format!("{a} is not a positive length")));
        }
        let ts = self.scan_candidates(a, scan)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in ts {
            let m = self.measure_on(t, t + a);
            lo = lo.min(m);
            hi = hi.max(m);
        }
        Ok((lo, hi))
    }

    /// inf over intervals I of length `a` of |E ∩ I| / a.
    pub fn relative_density(&self, a: f64, scan: Option<Interval>) -> Result<f64> {
        let (lo, _) = self.window_extremes(a, scan)?;
        Ok((lo / a).clamp(0.0, 1.0))
    }

    /// sup over intervals I of length `1/b` of |E^c ∩ I| / |I|.
    pub fn complement_sparsity(&self, b: f64, scan: Option<Interval>) -> Result<f64> {
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", format!("{b} is not a positive bandwidth")));
        }
        let a = 1.0 / b;
        let complement = match (self.period, scan) {
            (Some(_), _) => self.complement()?,
            (None, Some((s0, s1))) => self.complement_within(s0, s1)?,
            (None, None) => return Err(Error::NeedsScanWindow),
        };
        // Same endpoint set, so the complement's candidates cover this set's too.
        let (_, hi) = complement.window_extremes(a, scan)?;
        Ok((hi / a).clamp(0.0, 1.0))
    }
}

fn gaps_between(sorted: &[Interval], lo: f64, hi: f64) -> Vec<Interval> {
    let mut gaps = Vec::with_capacity(sorted.len() + 1);
    let mut cursor = lo;
    for &(l, r) in sorted {
        if l > cursor {
            gaps.push((cursor, l.min(hi)));
        }
        cursor = cursor.max(r);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        gaps.push((cursor, hi));
    }
    gaps.retain(|&(l, r)| r > l);
    gaps
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRepr {
    periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    intervals: Vec<[f64; 2]>,
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetRepr {
            periodic: self.period.is_some(),
            period: self.period,
            intervals: self.intervals.iter().map(|&(l, r)| [l, r]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Shorthand(String),
            Full(SetRepr),
        }
        match Either::deserialize(d)? {
            Either::Shorthand(s) => Self::from_shorthand(&s).map_err(serde::de::Error::custom),
            Either::Full(repr) => {
                let period = match (repr.periodic, repr.period) {
                    (true, p) => Some(p.unwrap_or(1.0)),
                    (false, None) => None,
                    (false, Some(_)) => return Err(serde::de::Error::custom("`period` given for a non-periodic set")),
                };
                let intervals = repr.intervals.into_iter().map(|[l, r]| (l, r)).collect();
                Self::new(intervals, period).map_err(serde::de::Error::custom)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> IntervalSet {
        IntervalSet::periodic(vec![(0.0, 0.5)], 1.0).unwrap()
    }

    #[test]
    fn measure_examples() {
        let full = IntervalSet::full_line();
        assert_eq!(full.measure_on(3.0, 5.0), 2.0);
        assert_eq!(half().measure_on(0.0, 2.0), 1.0);
        let e = IntervalSet::bounded(vec![(0.2, 0.7)]).unwrap();
        assert!((e.measure_on(0.5, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(e.measure_on(0.6, 0.6), 0.0);
    }

    #[test]
    fn periodic_measure_over_negative_windows() {
        let e = half();
        assert!((e.measure_on(-1.25, 0.25) - 0.75).abs() < 1e-15);
        assert!((e.measure_on(-0.75, -0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn folding_and_merging() {
        let e = IntervalSet::periodic(vec![(0.8, 1.3), (0.25, 0.35)], 1.0).unwrap();
        assert_eq!(e.intervals(), &[(0.0, 0.35), (0.8, 1.0)]);
        let f = IntervalSet::bounded(vec![(0.0, 1.0), (1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_eq!(f.intervals(), &[(0.0, 2.0), (3.0, 4.0)]);
        assert!(IntervalSet::bounded(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn density_examples() {
        assert_eq!(IntervalSet::full_line().relative_density(1.0, None).unwrap(), 1.0);
        let e = IntervalSet::periodic(vec![(0.1, 1.0)], 1.0).unwrap();
        assert!((e.relative_density(1.0, None).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(half().relative_density(0.5, None).unwrap(), 0.0);
        assert!(half().relative_density(0.0, None).is_err());
        let bounded = IntervalSet::bounded(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(bounded.relative_density(0.5, None), Err(Error::NeedsScanWindow));
        let d = bounded.relative_density(0.5, Some((-0.25, 1.0))).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sparsity_examples() {
        let e = IntervalSet::periodic(vec![(0.1, 1.0)], 1.0).unwrap();
        assert!((e.complement_sparsity(1.0, None).unwrap() - 0.1).abs() < 1e-12);
        for b in [0.3, 1.0, 7.0] {
            assert_eq!(IntervalSet::full_line().complement_sparsity(b, None).unwrap(), 0.0);
        }
        assert_eq!(half().complement_sparsity(2.0, None).unwrap(), 1.0);
        assert!(half().complement_sparsity(-1.0, None).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(half().complement().unwrap().intervals(), &[(0.5, 1.0)]);
        assert!(IntervalSet::full_line().complement().unwrap().is_empty());
        let e = IntervalSet::bounded(vec![(0.2, 0.4), (0.6, 0.9)]).unwrap();
        let c = e.complement_within(0.0, 1.0).unwrap();
        assert_eq!(c.intervals(), &[(0.0, 0.2), (0.4, 0.6), (0.9, 1.0)]);
        assert_eq!(c.complement_within(0.0, 1.0).unwrap(), e);
    }

    #[test]
    fn holes_shorthand() {
        let e = IntervalSet::from_shorthand("holes:0.1,1").unwrap();
        assert_eq!(e.intervals(), &[(0.1, 1.0)]);
        let many = IntervalSet::from_shorthand("holes:0.2,4").unwrap();
        assert_eq!(many.intervals().len(), 4);
        assert!((many.base_measure() - 0.8).abs() < 1e-15);
        assert!((many.complement_sparsity(1.0, None).unwrap() - 0.2).abs() < 1e-12);
        assert!(IntervalSet::from_shorthand("gaps:0.1,2").is_err());
        assert!(IntervalSet::from_shorthand("holes:1.5,2").is_err());
    }

    #[test]
    fn pieces_wrap_across_periods() {
        let e = IntervalSet::periodic(vec![(0.9, 1.1)], 1.0).unwrap();
        let p = e.pieces_in(-0.5, 1.5);
        assert_eq!(p.len(), 2);
        assert!((p[0].0 + 0.1).abs() < 1e-15 && (p[0].1 - 0.1).abs() < 1e-15);
        assert!((p[1].0 - 0.9).abs() < 1e-15 && (p[1].1 - 1.1).abs() < 1e-15);
    }

    #[test]
    fn json_forms() {
        let e: IntervalSet =
            serde_json::from_str(r#"{"periodic": true, "period": 1, "intervals": [[0, 0.5]]}"#).unwrap();
        assert_eq!(e, half());
        let s: IntervalSet = serde_json::from_str(r#""holes:0.1,1""#).unwrap();
        assert_eq!(s.intervals(), &[(0.1, 1.0)]);
        assert!(serde_json::from_str::<IntervalSet>(r#"{"periodic": false, "intervals": [], "x": 1}"#).is_err());
        let text = serde_json::to_string(&half()).unwrap();
        assert_eq!(text, r#"{"periodic":true,"period":1.0,"intervals":[[0.0,0.5]]}"#);
    }
}
