//! Summary tables computed purely from persisted samples and diagnostics.

use std::fmt::Write as _;

use super::cdf::{empirical_cdf, CdfSeries, GroupKey};
use super::runner::TrialDiagnostics;
use crate::linklevel::{Scheme, SinrSample};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub count: usize,
    pub median_db: f64,
    pub p5_db: f64,
    pub p95_db: f64,
    /// Median minus the Perfect-scheme median of the same kind/direction.
    pub gap_to_perfect_db: Option<f64>,
    pub gap_to_truecsi_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub uavs: usize,
    pub groups: Vec<GroupSummary>,
    pub totals: TrialDiagnostics,
}

fn ratio(num: u32, den: u32) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Report {
    pub fn identification_rate(&self) -> Option<f64> {
        ratio(self.totals.id_successes, self.totals.id_attempts)
    }

    pub fn false_alarm_rate(&self) -> Option<f64> {
        ratio(self.totals.false_alarm_runs, self.totals.detection_runs)
    }

    pub fn miss_rate(&self) -> Option<f64> {
        ratio(self.totals.missed, self.totals.interferers)
    }

    pub fn group(&self, key: GroupKey) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.key == key)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "K_u = {}", self.uavs);
        let _ = writeln!(
            s,
            "{:<22} {:>7} {:>10} {:>10} {:>10} {:>12} {:>12}",
            "group", "n", "median_dB", "p5_dB", "p95_dB", "gap_perfect", "gap_truecsi"
        );
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        for g in &self.groups {
            let _ = writeln!(
                s,
                "{:<22} {:>7} {:>10.3} {:>10.3} {:>10.3} {:>12} {:>12}",
                g.key.label(),
                g.count,
                g.median_db,
                g.p5_db,
                g.p95_db,
                opt(g.gap_to_perfect_db),
                opt(g.gap_to_truecsi_db)
            );
        }
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
        let t = &self.totals;
        let _ = writeln!(
            s,
            "uav identification success: {} ({} / {})",
            pct(self.identification_rate()),
            t.id_successes,
            t.id_attempts
        );
        let _ = writeln!(
            s,
            "multiple-match branch: {} ({} with all unmatched components removed)",
            t.multi_match, t.multi_match_cleared
        );
        let _ = writeln!(
            s,
            "detector false-alarm rate (runs): {} ({} / {})",
            pct(self.false_alarm_rate()),
            t.false_alarm_runs,
            t.detection_runs
        );
        let _ = writeln!(
            s,
            "detector miss rate (interferers): {} ({} / {})",
            pct(self.miss_rate()),
            t.missed,
            t.interferers
        );
        let _ = writeln!(
            s,
            "truncated detection runs: {} / {}",
            t.truncated_runs, t.detection_runs
        );
        s
    }
}

/// Builds the summary; `diagnostics` may be empty when the After scheme was
/// not simulated.
pub fn compare_report(samples: &[SinrSample], diagnostics: &[TrialDiagnostics], uavs: usize) -> Report {
    let cdfs = empirical_cdf(samples, uavs);
    let median_of = |key: GroupKey, scheme: Scheme| -> Option<f64> {
        cdfs.iter()
            .find(|c| c.key == GroupKey { scheme, ..key })
            .map(CdfSeries::median)
    };
    let groups = cdfs
        .iter()
        .map(|c| {
            let median = c.median();
            GroupSummary {
                key: c.key,
                count: c.values.len(),
                median_db: median,
                p5_db: c.quantile(0.05),
                p95_db: c.quantile(0.95),
                gap_to_perfect_db: median_of(c.key, Scheme::Perfect).map(|m| median - m),
                gap_to_truecsi_db: median_of(c.key, Scheme::TrueCsi).map(|m| median - m),
            }
        })
        .collect();
    let mut totals = TrialDiagnostics::default();
    for d in diagnostics {
        totals.accumulate(d);
    }
    Report { uavs, groups, totals }
}
