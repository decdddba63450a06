//! Empirical CDFs per (kind, direction, scheme) group.

use std::collections::BTreeMap;
use std::io::Write;

use crate::linklevel::{Direction, Scheme, SinrSample};
use crate::topology::UserKind;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub kind: UserKind,
    pub direction: Direction,
    pub scheme: Scheme,
}

impl GroupKey {
    /// `<direction>_<kind>_<scheme>`, e.g. `ul_uav_before`.
    pub fn label(&self) -> String {
        format!(
            "{}_{}_{}",
            self.direction.as_str(),
            self.kind.as_str(),
            self.scheme.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    pub key: GroupKey,
    pub uavs: usize,
    /// Sorted SINRs in dB.
    pub values: Vec<f64>,
    /// `i / n`, i = 1..n.
    pub probabilities: Vec<f64>,
}

impl CdfSeries {
    pub fn from_values(key: GroupKey, uavs: usize, mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let probabilities = (1..=values.len()).map(|i| i as f64 / n).collect();
        Some(Self {
            key,
            uavs,
            values,
            probabilities,
        })
    }

    /// Linear-interpolated quantile of the sorted values, `p` in [0, 1].
    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.values, p)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn file_name(&self) -> String {
        format!("cdf_{}.csv", self.key.label())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sinr_db", "probability"])?;
        for (v, p) in self.values.iter().zip(&self.probabilities) {
            w.write_record([v.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// First-order stochastic dominance of `self` over `other`: at every
    /// probability level the quantile of `self` is at least that of `other`.
    /// Checked on a 1000-point probability grid.
    pub fn dominates(&self, other: &CdfSeries) -> bool {
        (1..1000).all(|i| {
            let p = i as f64 / 1000.0;
            self.quantile(p) >= other.quantile(p)
        })
    }
}

/// Type-7 (linear interpolation) quantile; `sorted` must be non-empty and
/// ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Groups samples by (kind, direction, scheme) and builds one CDF per group,
/// in a fixed group order.
pub fn empirical_cdf(samples: &[SinrSample], uavs: usize) -> Vec<CdfSeries> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for s in samples {
        let key = GroupKey {
            kind: s.user_kind,
            direction: s.direction,
            scheme: s.scheme,
        };
        groups.entry(key).or_default().push(s.db());
    }
    groups
        .into_iter()
        .filter_map(|(key, v)| {
            let series = CdfSeries::from_values(key, uavs, v);
            if series.is_none() {
                log::warn!("empty group {}", key.label());
            }
            series
        })
        .collect()
}
