//! Acceptance checks: asymptotic oracles, high-SNR limits, detector quality,
//! two-block identification, CDF-level properties and determinism.
//!
//! Every check returns a [`CriterionResult`]; trial counts come from a
//! [`ValidationPlan`] so the same code runs at full scale and in CI.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use super::cdf::{empirical_cdf, CdfSeries, GroupKey};
use super::config::ScenarioConfig;
use super::io::write_samples;
use super::runner::{trial_rng, RunOutput, Simulator};
use crate::channel::{complex_gaussian, steering_vector, uav_channel_with_phase, ArrayGeometry, SPEED_OF_LIGHT};
use crate::detector::{beamwidths, Detector, DetectorConfig, MatchedFilterBank};
use crate::linklevel::{
    asymptotic_sinr, downlink_sinr_gue, downlink_sinr_uav, high_snr_limit, to_db, uplink_sinr, AsymptoticInputs,
    CrossLink, Direction, PowerBudget, Scheme,
};
use crate::pdc::{perfect_pdc, OrthogonalProjector};
use crate::topology::UserKind;
use crate::training::{estimate_norm_sq_asymptote, ls_estimate, PilotConfig};
use crate::{ChannelVector, Result, VectorRole, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionResult {
    /// `PASS  3 high-SNR limits at large M [12.3 s / 300 s]: ...`
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {} [{:.1} s / {} s]: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

/// Sample sizes and the scenario used by the system-level checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationPlan {
    pub seed: u64,
    /// Random interferer sets per set size (1..=8).
    pub projection_sets: usize,
    /// Draws per array size for the convergence statistics.
    pub statistic_draws: usize,
    /// Trials of the equal-gain construction at the largest array.
    pub limit_trials: usize,
    pub sweep_trials: usize,
    /// Trials per array size for the finite-M convergence check.
    pub convergence_trials: usize,
    /// Planted and pure-noise trials per SNR point.
    pub detector_trials: usize,
    pub identification_trials: u64,
    pub cdf_trials: u64,
    pub determinism_trials: u64,
    /// Largest array of the equal-gain checks.
    pub large_antennas: usize,
    /// Preset for the system-level checks (7-9).
    pub base: ScenarioConfig,
}

impl ValidationPlan {
    /// Acceptance-scale sample sizes.
    pub fn full(base: ScenarioConfig) -> Self {
        Self {
            seed: base.seed,
            projection_sets: 100,
            statistic_draws: 1000,
            limit_trials: 1000,
            sweep_trials: 300,
            convergence_trials: 2000,
            detector_trials: 1000,
            identification_trials: 1000,
            cdf_trials: 10_000,
            determinism_trials: 1000,
            large_antennas: 4096,
            base,
        }
    }

    /// Small sample sizes for smoke tests; tolerances are unchanged, so
    /// statistical checks may fail.
    pub fn quick(base: ScenarioConfig) -> Self {
        Self {
            projection_sets: 5,
            statistic_draws: 50,
            limit_trials: 10,
            sweep_trials: 5,
            convergence_trials: 10,
            detector_trials: 20,
            identification_trials: 4,
            cdf_trials: 4,
            determinism_trials: 3,
            large_antennas: 512,
            ..Self::full(base)
        }
    }
}

pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Runs the selected criteria (all when `only` is empty) in order.
/// Runs `only` in the given order (duplicates dropped; unknown ids produce a
/// failing result), or every criterion when `only` is empty.
pub fn run_validation(plan: &ValidationPlan, only: &[u8]) -> Vec<CriterionResult> {
    let mut ids: Vec<u8> = if only.is_empty() { CRITERIA.to_vec() } else { Vec::new() };
    for &id in only {
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids.into_iter().map(|id| run_criterion(plan, id)).collect()
}

type Check = fn(&ValidationPlan) -> Result<(bool, String)>;

pub fn run_criterion(plan: &ValidationPlan, id: u8) -> CriterionResult {
    let (name, budget_s, check): (&'static str, u64, Check) = match id {
        1 => ("projection exactness", 1, projection_exactness),
        2 => ("large-array statistics", 60, large_array_statistics),
        3 => ("high-SNR limits at large M", 300, high_snr_limits),
        4 => ("power invariance", 300, power_invariance),
        5 => ("finite-M convergence", 600, finite_m_convergence),
        6 => ("detector quality", 60, detector_quality),
        7 => ("two-block identification", 120, two_block_identification),
        8 => ("CDF-level properties", 900, cdf_properties),
        9 => ("determinism", 900, determinism),
        _ => ("unknown criterion", 0, |_| Ok((false, "no such criterion".into()))),
    };
    let start = Instant::now();
    let (mut passed, mut detail) = match check(plan) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    if elapsed > budget {
        passed = false;
        detail.push_str("; runtime budget exceeded");
    }
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed,
        budget,
    }
}

fn carrier_wavelength() -> f64 {
    SPEED_OF_LIGHT / 2e9
}

fn array(m: usize) -> Result<ArrayGeometry> {
    ArrayGeometry::half_wavelength(m, carrier_wavelength())
}

fn random_aoa<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    (rng.gen_range(0.0..PI / 2.0), rng.gen_range(-PI..PI))
}

/// Stream family of one check, so checks never share random numbers.
fn salted(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- 1

fn projection_exactness(plan: &ValidationPlan) -> Result<(bool, String)> {
    let m = 128;
    let arr = array(m)?;
    let tol = 1e-9 * (m as f64).sqrt();
    let (mut worst_null, mut worst_idem) = (0.0f64, 0.0f64);
    for size in 1..=8usize {
        for s in 0..plan.projection_sets {
            let mut rng = trial_rng(salted(plan.seed, 1), (size * 1_000_000 + s) as u64);
            let cols: Vec<ChannelVector> = (0..size)
                .map(|_| {
                    let (t, p) = random_aoa(&mut rng);
                    steering_vector(&arr, t, p)
                })
                .collect();
            let proj = OrthogonalProjector::from_columns(&cols, m)?;
            for a in &cols {
                worst_null = worst_null.max(proj.apply(a)?.norm());
            }
            let x = ChannelVector::new(complex_gaussian(m, 1.0, &mut rng), VectorRole::TrueChannel);
            let px = proj.apply(&x)?;
            worst_idem = worst_idem.max(proj.apply(&px)?.sub(&px).norm());
        }
    }
    Ok((
        worst_null <= tol && worst_idem <= tol,
        format!("max |P a_k| = {worst_null:.2e}, max |P(Px) - Px| = {worst_idem:.2e} (tolerance {tol:.2e})"),
    ))
}

// ---------------------------------------------------------------- 2

const STATISTIC_SIZES: [usize; 4] = [32, 128, 512, 4096];

/// Mean |p^H p'|/M, |q^H q'|/M, |p^H q|/M and the self-term samples.
struct Statistics {
    cross_random: f64,
    cross_steering: f64,
    mixed: f64,
    self_random: Vec<f64>,
    self_steering: Vec<f64>,
}

fn statistics(m: usize, draws: usize, variance: f64, seed: u64) -> Result<Statistics> {
    let arr = array(m)?;
    let mf = m as f64;
    let (mut cr, mut cs, mut mx) = (Vec::new(), Vec::new(), Vec::new());
    let (mut sr, mut ss) = (Vec::new(), Vec::new());
    for d in 0..draws {
        let mut rng = trial_rng(seed, d as u64);
        let p1 = ChannelVector::new(complex_gaussian(m, variance, &mut rng), VectorRole::TrueChannel);
        let p2 = ChannelVector::new(complex_gaussian(m, variance, &mut rng), VectorRole::TrueChannel);
        let (t1, f1) = random_aoa(&mut rng);
        let (t2, f2) = random_aoa(&mut rng);
        let q1 = steering_vector(&arr, t1, f1);
        let q2 = steering_vector(&arr, t2, f2);
        cr.push(p1.inner(&p2).norm() / mf);
        cs.push(q1.inner(&q2).norm() / mf);
        mx.push(p1.inner(&q1).norm() / mf);
        sr.push(p1.norm_sqr() / mf);
        ss.push(q1.norm_sqr() / mf);
    }
    Ok(Statistics {
        cross_random: mean(&cr),
        cross_steering: mean(&cs),
        mixed: mean(&mx),
        self_random: sr,
        self_steering: ss,
    })
}

fn large_array_statistics(plan: &ValidationPlan) -> Result<(bool, String)> {
    let variance = 2.0;
    let stats: Vec<Statistics> = STATISTIC_SIZES
        .iter()
        .map(|&m| statistics(m, plan.statistic_draws, variance, salted(plan.seed, 2_000 + m as u64)))
        .collect::<Result<_>>()?;
    let decreasing = |f: fn(&Statistics) -> f64| stats.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let cross_ok = decreasing(|s| s.cross_random) && decreasing(|s| s.cross_steering) && decreasing(|s| s.mixed);
    let last = stats.last().expect("sizes");
    let within = |v: &[f64], target: f64| {
        v.iter().filter(|x| ((*x - target) / target).abs() <= 0.05).count() as f64 / v.len() as f64
    };
    let random_within = within(&last.self_random, variance);
    let steering_within = within(&last.self_steering, 1.0);
    let self_ok = random_within >= 0.99
        && steering_within == 1.0
        && ((mean(&last.self_random) - variance) / variance).abs() <= 0.05;
    let mixed_ok = last.mixed < 0.05;
    let fmt = |f: fn(&Statistics) -> f64| {
        stats
            .iter()
            .map(|s| format!("{:.4}", f(s)))
            .collect::<Vec<_>>()
            .join(" > ")
    };
    Ok((
        cross_ok && self_ok && mixed_ok,
        format!(
            "M = {:?}: |p'p|/M {}; |q'q|/M {}; |p'q|/M {}; at M = {}: p'p/M within 5% of {variance} in {:.1}% of draws, q'q/M = 1 in {:.1}%",
            STATISTIC_SIZES,
            fmt(|s| s.cross_random),
            fmt(|s| s.cross_steering),
            fmt(|s| s.mixed),
            STATISTIC_SIZES[3],
            100.0 * random_within,
            100.0 * steering_within
        ),
    ))
}

// ---------------------------------------------------------------- 3-5

/// Equal-gain network: `cells` co-pilot cells, UAVs in the first `uavs`
/// cells and ground users in the rest. Every UAV reaches every BS over a LoS
/// path of gain `beta` with a random direction; ground users reach only
/// their own BS (Rayleigh, gain `beta`).
#[derive(Debug, Clone)]
pub struct EqualGainScenario {
    pub cells: usize,
    pub uavs: usize,
    pub beta: f64,
    pub pilot: PilotConfig,
    /// Length of the underlying Gaussian draws (at least `M`).
    pub coupling_len: usize,
    array: ArrayGeometry,
}

/// Channels and estimates of one draw.
pub struct EqualGainDraw {
    /// `links[l][u]` for UAVs (all `l`) and for `u == l`.
    links: Vec<Vec<Option<ChannelVector>>>,
    before: Vec<ChannelVector>,
    perfect: Vec<ChannelVector>,
}

/// Per-user SINRs of one draw: `(kind, direction, scheme, linear value)`.
pub type LabelledSinr = (UserKind, Direction, Scheme, f64);

impl EqualGainScenario {
    pub fn new(cells: usize, uavs: usize, antennas: usize, beta: f64, pilot: PilotConfig) -> Result<Self> {
        Ok(Self {
            cells,
            uavs,
            beta,
            pilot,
            coupling_len: antennas,
            array: array(antennas)?,
        })
    }

    pub fn antennas(&self) -> usize {
        self.array.antennas()
    }

    pub fn kind(&self, user: usize) -> UserKind {
        if user < self.uavs {
            UserKind::Uav
        } else {
            UserKind::Gue
        }
    }

    fn interferers(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.uavs).filter(move |&u| u != l)
    }

    /// One draw. Directions and phases are drawn first, then every Gaussian
    /// vector as the first `M` entries of a `coupling_len`-long draw, so
    /// scenarios that differ only in `M` see common random numbers when
    /// driven by the same stream.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EqualGainDraw> {
        let k = self.cells;
        let m = self.antennas();
        let len = self.coupling_len.max(m);
        let mut paths = vec![vec![(0.0, 0.0, 0.0); k]; k];
        for row in paths.iter_mut() {
            for path in row.iter_mut().take(self.uavs) {
                let (t, p) = random_aoa(rng);
                *path = (t, p, rng.gen_range(0.0..2.0 * PI));
            }
        }
        let gaussian = |variance: f64, rng: &mut R| {
            let mut v = complex_gaussian(len, variance, rng);
            v.truncate(m);
            ChannelVector::new(v, VectorRole::TrueChannel)
        };
        let mut links = vec![vec![None; k]; k];
        for (l, row) in links.iter_mut().enumerate() {
            for (u, slot) in row.iter_mut().enumerate() {
                if u < self.uavs {
                    let (t, p, psi) = paths[l][u];
                    *slot = Some(uav_channel_with_phase(&self.array, self.beta, t, p, psi)?);
                } else if u == l {
                    *slot = Some(gaussian(self.beta, rng));
                }
            }
        }
        let mut before = Vec::with_capacity(k);
        let mut perfect = Vec::with_capacity(k);
        for l in 0..k {
            let intf: Vec<&ChannelVector> = self
                .interferers(l)
                .map(|u| links[l][u].as_ref().expect("uav"))
                .collect();
            let own = links[l][l].as_ref().expect("own");
            let mut est = ls_estimate(own, &intf, &PilotConfig::noiseless(), l, 0, rng)?.vector;
            if self.pilot.noise_variance() > 0.0 {
                est.axpy(C64::new(1.0, 0.0), &gaussian(self.pilot.noise_variance(), rng));
            }
            let dirs: Vec<(f64, f64)> = self.interferers(l).map(|u| (paths[l][u].0, paths[l][u].1)).collect();
            perfect.push(perfect_pdc(&est, &dirs, &self.array)?.vector);
            before.push(est);
        }
        Ok(EqualGainDraw { links, before, perfect })
    }

    /// UL and DL SINRs of every user for the Before and Perfect estimates.
    pub fn sinrs(&self, draw: &EqualGainDraw, budget: &PowerBudget) -> Result<Vec<LabelledSinr>> {
        let k = self.cells;
        let link = |l: usize, u: usize| draw.links[l][u].as_ref().expect("link");
        let mut out = Vec::with_capacity(4 * k);
        for (scheme, est) in [(Scheme::Before, &draw.before), (Scheme::Perfect, &draw.perfect)] {
            for u in 0..k {
                let kind = self.kind(u);
                let intf: Vec<&ChannelVector> = self.interferers(u).map(|v| link(u, v)).collect();
                let ul = uplink_sinr(&est[u], link(u, u), &intf, budget)?;
                let dl = match kind {
                    UserKind::Uav => {
                        let to_user: Vec<&ChannelVector> = (0..k).map(|l| link(l, u)).collect();
                        let precoders: Vec<&ChannelVector> = est.iter().collect();
                        downlink_sinr_uav(&to_user, &precoders, u, budget)?
                    }
                    UserKind::Gue => downlink_sinr_gue(link(u, u), &est[u], budget)?,
                };
                out.push((kind, Direction::Ul, scheme, ul));
                out.push((kind, Direction::Dl, scheme, dl));
            }
        }
        Ok(out)
    }

    /// Large-array limit for a user of `kind` (all users of a kind are
    /// statistically identical).
    pub fn asymptote(&self, kind: UserKind, direction: Direction, scheme: Scheme, budget: &PowerBudget) -> Result<f64> {
        let user = match kind {
            UserKind::Uav => 0,
            UserKind::Gue => self.uavs,
        };
        let betas = |l: usize| vec![self.beta; self.interferers(l).count()];
        let downlink_cross = (kind == UserKind::Uav).then(|| {
            (0..self.cells)
                .filter(|&l| l != user)
                .map(|l| CrossLink {
                    beta: self.beta,
                    eta_sq: estimate_norm_sq_asymptote(self.beta, &betas(l), &self.pilot),
                })
                .collect()
        });
        let inputs = AsymptoticInputs {
            beta_own: self.beta,
            interferer_betas: betas(user),
            downlink_cross,
        };
        asymptotic_sinr(scheme, direction, kind, &inputs, budget, &self.pilot)
    }
}

/// Linear means per (kind, direction, scheme), over `trials` draws evaluated
/// at every budget with common random numbers.
fn equal_gain_means(
    scenario: &EqualGainScenario,
    budgets: &[PowerBudget],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<(GroupKey, f64)>>> {
    let mut sums: Vec<std::collections::BTreeMap<GroupKey, (f64, usize)>> = vec![Default::default(); budgets.len()];
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let draw = scenario.draw(&mut rng)?;
        for (b, budget) in budgets.iter().enumerate() {
            for (kind, direction, scheme, v) in scenario.sinrs(&draw, budget)? {
                let e = sums[b]
                    .entry(GroupKey {
                        kind,
                        direction,
                        scheme,
                    })
                    .or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|m| m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect())
        .collect())
}

fn lookup(means: &[(GroupKey, f64)], kind: UserKind, direction: Direction, scheme: Scheme) -> f64 {
    means
        .iter()
        .find(|(k, _)| {
            *k == GroupKey {
                kind,
                direction,
                scheme,
            }
        })
        .map(|(_, v)| *v)
        .expect("group present")
}

const EQUAL_GAIN_CELLS: usize = 9;
const EQUAL_GAIN_UAVS: usize = 3;
const HIGH_POWER_DB: f64 = 30.0;

fn high_power_scenario(antennas: usize) -> Result<EqualGainScenario> {
    let pilot = PilotConfig::from_processing_gain(10f64.powf(HIGH_POWER_DB / 10.0))?;
    EqualGainScenario::new(EQUAL_GAIN_CELLS, EQUAL_GAIN_UAVS, antennas, 1.0, pilot)
}

fn budget_db(e_db: f64) -> Result<PowerBudget> {
    let e = 10f64.powf(e_db / 10.0);
    PowerBudget::new(e, e)
}

const COMBOS: [(UserKind, Direction); 4] = [
    (UserKind::Uav, Direction::Ul),
    (UserKind::Gue, Direction::Ul),
    (UserKind::Uav, Direction::Dl),
    (UserKind::Gue, Direction::Dl),
];

fn combo_label(kind: UserKind, direction: Direction) -> String {
    format!("{}/{}", direction.as_str(), kind.as_str())
}

fn high_snr_limits(plan: &ValidationPlan) -> Result<(bool, String)> {
    let scenario = high_power_scenario(plan.large_antennas)?;
    let levels = [HIGH_POWER_DB, HIGH_POWER_DB + 10.0];
    let budgets: Vec<PowerBudget> = levels.iter().map(|&e| budget_db(e)).collect::<Result<_>>()?;
    let means = equal_gain_means(&scenario, &budgets, plan.limit_trials, salted(plan.seed, 3))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, direction) in COMBOS {
        let got = to_db(lookup(&means[0], kind, direction, Scheme::Before));
        let want = to_db(high_snr_limit(
            kind,
            direction,
            Scheme::Before,
            EQUAL_GAIN_CELLS,
            EQUAL_GAIN_UAVS,
            1.0,
            &budgets[0],
        )?);
        ok &= (got - want).abs() <= 1.0;
        parts.push(format!(
            "before {} {got:.2} dB (limit {want:.2})",
            combo_label(kind, direction)
        ));
    }
    for (b, level) in levels.iter().enumerate() {
        for (kind, direction) in COMBOS {
            let got = to_db(lookup(&means[b], kind, direction, Scheme::Perfect));
            let want = to_db(high_snr_limit(
                kind,
                direction,
                Scheme::Perfect,
                EQUAL_GAIN_CELLS,
                EQUAL_GAIN_UAVS,
                1.0,
                &budgets[b],
            )?);
            ok &= (got - want).abs() <= 1.0;
            if (got - want).abs() > 1.0 {
                parts.push(format!(
                    "after {} at E = {level} dB: {got:.2} dB (limit {want:.2})",
                    combo_label(kind, direction)
                ));
            }
        }
    }
    parts.push(format!(
        "after-projection entries {} within 1 dB of E*beta at E*beta = {levels:?} dB",
        if ok { "all" } else { "not all" }
    ));
    Ok((ok, format!("M = {}: {}", plan.large_antennas, parts.join("; "))))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn power_invariance(plan: &ValidationPlan) -> Result<(bool, String)> {
    let scenario = high_power_scenario(plan.large_antennas)?;
    let levels: Vec<f64> = (0..=4).map(|i| HIGH_POWER_DB + 5.0 * i as f64).collect();
    let budgets: Vec<PowerBudget> = levels.iter().map(|&e| budget_db(e)).collect::<Result<_>>()?;
    let means = equal_gain_means(&scenario, &budgets, plan.sweep_trials, salted(plan.seed, 4))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [UserKind::Uav, UserKind::Gue] {
        let before: Vec<f64> = means
            .iter()
            .map(|m| to_db(lookup(m, kind, Direction::Ul, Scheme::Before)))
            .collect();
        let after: Vec<f64> = means
            .iter()
            .map(|m| to_db(lookup(m, kind, Direction::Ul, Scheme::Perfect)))
            .collect();
        let spread = before.iter().cloned().fold(f64::MIN, f64::max) - before.iter().cloned().fold(f64::MAX, f64::min);
        let s = slope(&levels, &after);
        ok &= spread <= 0.5 && (s - 1.0).abs() <= 0.05;
        parts.push(format!(
            "ul/{}: before spread {spread:.3} dB, after slope {s:.4}",
            kind.as_str()
        ));
    }
    Ok((
        ok,
        format!(
            "E_u*beta {}..{} dB at M = {}: {}",
            levels[0],
            levels[4],
            plan.large_antennas,
            parts.join("; ")
        ),
    ))
}

fn convergence_sizes(large: usize) -> Vec<usize> {
    [128usize, 512, 2048, 4096]
        .into_iter()
        .filter(|&m| m <= large.max(128))
        .collect()
}

fn finite_m_convergence(plan: &ValidationPlan) -> Result<(bool, String)> {
    let sizes = convergence_sizes(plan.large_antennas);
    let budget = budget_db(HIGH_POWER_DB)?;
    let mut gaps: Vec<Vec<(GroupKey, f64)>> = Vec::new();
    let largest = *sizes.last().expect("sizes");
    for &m in &sizes {
        // Common random numbers across M: same stream, Gaussian vectors
        // nested as prefixes of the largest array's.
        let mut scenario = high_power_scenario(m)?;
        scenario.coupling_len = largest;
        let means = equal_gain_means(&scenario, &[budget], plan.convergence_trials, salted(plan.seed, 5))?;
        let mut row = Vec::new();
        for scheme in [Scheme::Before, Scheme::Perfect] {
            for (kind, direction) in COMBOS {
                let limit = scenario.asymptote(kind, direction, scheme, &budget)?;
                let got = lookup(&means[0], kind, direction, scheme);
                row.push((
                    GroupKey {
                        kind,
                        direction,
                        scheme,
                    },
                    (got - limit) / limit,
                ));
            }
        }
        gaps.push(row);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (key, _)) in gaps[0].iter().enumerate() {
        let series: Vec<f64> = gaps.iter().map(|row| row[i].1).collect();
        let monotone = series.windows(2).all(|w| w[1].abs() <= w[0].abs());
        ok &= monotone;
        parts.push(format!(
            "{}{} {}",
            key.label(),
            if monotone { "" } else { " (not monotone)" },
            series.iter().map(|g| format!("{g:+.2e}")).collect::<Vec<_>>().join(" ")
        ));
    }
    Ok((
        ok,
        format!(
            "relative (mean - limit) / limit over M = {sizes:?}: {}",
            parts.join("; ")
        ),
    ))
}

// ---------------------------------------------------------------- 6

const DETECTOR_SNRS_DB: [f64; 3] = [0.0, 10.0, 20.0];

fn detector_quality(plan: &ValidationPlan) -> Result<(bool, String)> {
    let arr = array(128)?;
    let grid = plan.base.grid()?;
    let bank = Arc::new(MatchedFilterBank::new(arr, grid));
    let iterations = plan.base.detector.max_iterations.unwrap_or(2 * plan.base.layout.cells);
    let detector = Detector::new(bank, DetectorConfig::new(3.0, iterations)?);
    let bw = beamwidths(&arr);
    let trials = plan.detector_trials;
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, snr_db) in DETECTOR_SNRS_DB.iter().enumerate() {
        let amplitude = 10f64.powf(snr_db / 20.0);
        let (mut located, mut near, mut gain_ok) = (0usize, 0usize, 0usize);
        for t in 0..trials {
            let mut rng = trial_rng(salted(plan.seed, 6_000 + s as u64), t as u64);
            let first = random_cell(&mut rng, grid.n_theta(), grid.n_phi());
            let second = loop {
                let c = random_cell(&mut rng, grid.n_theta(), grid.n_phi());
                let dt = (grid.theta(c.0) - grid.theta(first.0)).abs();
                let dp = wrapped(grid.phi(c.1) - grid.phi(first.1)).abs();
                if dt >= 2.0 * bw.theta || dp >= 2.0 * bw.phi {
                    break c;
                }
            };
            let planted: Vec<((usize, usize), C64)> = [first, second]
                .into_iter()
                .map(|c| (c, C64::from_polar(amplitude, rng.gen_range(0.0..2.0 * PI))))
                .collect();
            let mut est = ChannelVector::new(complex_gaussian(arr.antennas(), 1.0, &mut rng), VectorRole::Estimate);
            for &(c, mu) in &planted {
                est.axpy(mu, &steering_vector(&arr, grid.theta(c.0), grid.phi(c.1)));
            }
            let out = detector.detect(&est)?;
            let found: Vec<Option<C64>> = planted
                .iter()
                .map(|(c, _)| out.components.iter().find(|d| d.cell == *c).map(|d| d.mu))
                .collect();
            located += found.iter().all(Option::is_some) as usize;
            near += planted.iter().all(|(c, _)| {
                out.components
                    .iter()
                    .any(|d| cell_distance(d.cell, *c, grid.n_phi()) <= 1)
            }) as usize;
            gain_ok += planted
                .iter()
                .zip(&found)
                .all(|((_, mu), f)| f.is_some_and(|g| (0.95..=1.05).contains(&(g.norm() / mu.norm()))))
                as usize;
        }
        let (loc, gain) = (located as f64 / trials as f64, gain_ok as f64 / trials as f64);
        ok &= loc >= 0.99 && gain >= 0.95;
        parts.push(format!(
            "SNR {snr_db} dB: exact cell {:.1}% (within one cell {:.1}%), gain within 5% {:.1}%",
            100.0 * loc,
            100.0 * near as f64 / trials as f64,
            100.0 * gain
        ));
    }
    let mut alarms = 0usize;
    for t in 0..trials {
        let mut rng = trial_rng(salted(plan.seed, 6_100), t as u64);
        let noise = ChannelVector::new(complex_gaussian(arr.antennas(), 1.0, &mut rng), VectorRole::Estimate);
        alarms += (detector.detect(&noise)?.count() > 0) as usize;
    }
    let fa = alarms as f64 / trials as f64;
    ok &= fa <= 0.05;
    parts.push(format!("pure-noise false alarms {:.1}%", 100.0 * fa));
    Ok((ok, parts.join("; ")))
}

/// On-grid cell away from the zenith row, where every azimuth coincides.
fn random_cell<R: Rng + ?Sized>(rng: &mut R, n_theta: usize, n_phi: usize) -> (usize, usize) {
    (rng.gen_range(1..n_theta), rng.gen_range(0..n_phi))
}

/// Chebyshev distance between grid cells, azimuth index wrapping around.
fn cell_distance(a: (usize, usize), b: (usize, usize), n_phi: usize) -> usize {
    let dphi = a.1.abs_diff(b.1);
    a.0.abs_diff(b.0).max(dphi.min(n_phi - dphi))
}

fn wrapped(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

// ---------------------------------------------------------------- 7-9

fn preset(plan: &ValidationPlan, trials: u64) -> ScenarioConfig {
    let mut cfg = plan.base.clone();
    cfg.trials = trials;
    cfg.seed = plan.seed;
    cfg
}

fn two_block_identification(plan: &ValidationPlan) -> Result<(bool, String)> {
    let mut cfg = preset(plan, plan.identification_trials);
    cfg.layout.cells = 9;
    cfg.layout.uavs = 3;
    cfg.schemes = vec![Scheme::After];
    let total = |cfg: &ScenarioConfig| -> Result<super::TrialDiagnostics> {
        let run = Simulator::new(cfg)?.run(cfg.workers)?;
        let mut t = super::TrialDiagnostics::default();
        run.diagnostics.iter().for_each(|d| t.accumulate(d));
        Ok(t)
    };
    cfg.pdc.persistence = 0.0;
    let fresh = total(&cfg)?;
    cfg.pdc.persistence = 1.0;
    let persistent = total(&cfg)?;
    let rate = fresh.id_successes as f64 / fresh.id_attempts.max(1) as f64;
    let rate_ok = fresh.id_attempts > 0 && rate >= 0.95;
    let branch_ok = persistent.multi_match > 0 && persistent.multi_match_cleared == persistent.multi_match;
    Ok((
        rate_ok && branch_ok,
        format!(
            "fresh interferers: own component identified in {:.2}% ({} / {}); persistent interferers: multiple-match branch {} times, unmatched components all removed in {}",
            100.0 * rate,
            fresh.id_successes,
            fresh.id_attempts,
            persistent.multi_match,
            persistent.multi_match_cleared
        ),
    ))
}

fn group_series(cdfs: &[CdfSeries], kind: UserKind, direction: Direction, scheme: Scheme) -> Option<&CdfSeries> {
    cdfs.iter().find(|c| {
        c.key
            == GroupKey {
                kind,
                direction,
                scheme,
            }
    })
}

fn cdf_properties(plan: &ValidationPlan) -> Result<(bool, String)> {
    let mut runs: Vec<(usize, Vec<CdfSeries>)> = Vec::new();
    for uavs in [1usize, 3] {
        let mut cfg = preset(plan, plan.cdf_trials);
        cfg.layout.uavs = uavs;
        cfg.schemes = Scheme::ALL.to_vec();
        let run: RunOutput = Simulator::new(&cfg)?.run(cfg.workers)?;
        runs.push((uavs, empirical_cdf(&run.samples, uavs)));
    }
    let series = |cdfs: &[CdfSeries], kind, direction, scheme| -> Result<CdfSeries> {
        group_series(cdfs, kind, direction, scheme).cloned().ok_or_else(|| {
            crate::Error::Config(format!(
                "missing group {}",
                GroupKey {
                    kind,
                    direction,
                    scheme
                }
                .label()
            ))
        })
    };
    let (mut a, mut b, mut c, mut d) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (uavs, cdfs) in &runs {
        for (kind, direction) in COMBOS {
            let before = series(cdfs, kind, direction, Scheme::Before)?;
            let after = series(cdfs, kind, direction, Scheme::After)?;
            let perfect = series(cdfs, kind, direction, Scheme::Perfect)?;
            if !after.dominates(&before) {
                a.push(format!("{} K_u={uavs}", combo_label(kind, direction)));
            }
            let gap = after.median() - perfect.median();
            if gap.abs() > 1.0 {
                d.push(format!("{} K_u={uavs} {gap:+.1}", combo_label(kind, direction)));
            }
        }
        let dl_uav = series(cdfs, UserKind::Uav, Direction::Dl, Scheme::Before)?.median();
        let dl_gue = series(cdfs, UserKind::Gue, Direction::Dl, Scheme::Before)?.median();
        if dl_uav >= dl_gue {
            c.push(format!("K_u={uavs}: {dl_uav:.1} vs {dl_gue:.1}"));
        }
    }
    for (kind, direction) in COMBOS {
        let m1 = series(&runs[0].1, kind, direction, Scheme::Before)?.median();
        let m3 = series(&runs[1].1, kind, direction, Scheme::Before)?.median();
        if m3 >= m1 {
            b.push(format!("{} {m1:.1} -> {m3:.1}", combo_label(kind, direction)));
        }
    }
    let verdict = |fails: &[String]| {
        if fails.is_empty() {
            "ok".to_string()
        } else {
            format!("fails: {}", fails.join(", "))
        }
    };
    Ok((
        a.is_empty() && b.is_empty() && c.is_empty() && d.is_empty(),
        format!(
            "{} trials per K_u in {{1, 3}}: (a) after dominates before {}; (b) before medians drop with K_u {}; (c) DL UAV below DL GUE before {}; (d) after within 1 dB of perfect {}",
            plan.cdf_trials,
            verdict(&a),
            verdict(&b),
            verdict(&c),
            verdict(&d)
        ),
    ))
}

fn determinism(plan: &ValidationPlan) -> Result<(bool, String)> {
    let cfg = preset(plan, plan.determinism_trials);
    let bytes = |workers: usize| -> Result<Vec<u8>> {
        let run = Simulator::new(&cfg)?.run(workers)?;
        let mut buf = Vec::new();
        write_samples(&run.samples, &mut buf)?;
        Ok(buf)
    };
    let single = bytes(1)?;
    let pooled = bytes(4)?;
    Ok((
        !single.is_empty() && single == pooled,
        format!(
            "{} trials: samples.csv with 1 and 4 workers {} ({} bytes)",
            plan.determinism_trials,
            if single == pooled { "identical" } else { "differ" },
            single.len()
        ),
    ))
}
