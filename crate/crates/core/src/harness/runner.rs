//! Per-trial simulation and the parallel, order-independent trial loop.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{LinkBudget, ScenarioConfig};
use crate::channel::{gen_gue_channel, gen_uav_channel, path_loss, steering_vector, ArrayGeometry, LinkType};
use crate::detector::{Detector, LoSComponent, MatchedFilterBank};
use crate::linklevel::{downlink_sinr_gue, downlink_sinr_uav, uplink_sinr, Direction, Scheme, SinrSample};
use crate::pdc::{decontaminate_gue, decontaminate_uav, perfect_pdc, MatchTolerance, UavBranch};
use crate::topology::{build_layout, drop_user, geometry_to_aoa, place_users, NetworkLayout, UserKind, UserPlacement};
use crate::training::ls_estimate;
use crate::{ChannelVector, Error, Result};

/// Correlation `|a1^H a2| / M` needed to attribute a detection to a source.
pub const ATTRIBUTION_CORRELATION: f64 = 0.5;

/// Detector bookkeeping for one trial (After scheme only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialDiagnostics {
    pub trial: u64,
    /// UAV users whose block-1 estimate carried interference.
    pub id_attempts: u32,
    /// ... of which the own LoS component was correctly singled out.
    pub id_successes: u32,
    /// UAV users where more than one component matched across blocks.
    pub multi_match: u32,
    /// ... of which every unmatched block-1 component was removed.
    pub multi_match_cleared: u32,
    /// Block-1 detection runs.
    pub detection_runs: u32,
    /// Runs with at least one detection not attributable to a true LoS path.
    pub false_alarm_runs: u32,
    /// True LoS interferers present at the BSs.
    pub interferers: u32,
    /// Interferers without any attributed detection.
    pub missed: u32,
    /// Runs stopped by the iteration cap.
    pub truncated_runs: u32,
    /// Total detected components over all runs.
    pub components: u32,
}

impl TrialDiagnostics {
    pub fn accumulate(&mut self, o: &TrialDiagnostics) {
        self.id_attempts += o.id_attempts;
        self.id_successes += o.id_successes;
        self.multi_match += o.multi_match;
        self.multi_match_cleared += o.multi_match_cleared;
        self.detection_runs += o.detection_runs;
        self.false_alarm_runs += o.false_alarm_runs;
        self.interferers += o.interferers;
        self.missed += o.missed;
        self.truncated_runs += o.truncated_runs;
        self.components += o.components;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub samples: Vec<SinrSample>,
    pub diagnostics: TrialDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub samples: Vec<SinrSample>,
    pub diagnostics: Vec<TrialDiagnostics>,
}

/// Everything shared read-only between trials.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ScenarioConfig,
    layout: NetworkLayout,
    array: ArrayGeometry,
    budget: LinkBudget,
    detector: Detector,
    tolerance: MatchTolerance,
}

/// Random stream of trial `trial`: stream `trial` of the ChaCha generator
/// keyed by `seed`, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct Link {
    channel: ChannelVector,
    theta: f64,
    phi: f64,
}

impl Simulator {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let l = &config.layout;
        let layout = build_layout(l.cell_radius, l.reuse_factor, l.cells, l.bs_height)?;
        let array = config.array.geometry()?;
        let bank = Arc::new(MatchedFilterBank::new(array, config.grid()?));
        Ok(Self {
            config: config.clone(),
            layout,
            array,
            budget: config.link_budget()?,
            detector: Detector::new(bank, config.detector_config()?),
            tolerance: config.tolerance()?,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    fn link<R: Rng + ?Sized>(&self, bs: usize, user: &UserPlacement, rng: &mut R) -> Result<Link> {
        let aoa = geometry_to_aoa(&self.layout.sites[bs], user)?;
        let m = self.array.antennas();
        let channel = match user.kind {
            UserKind::Uav => {
                let beta = path_loss(aoa.distance, LinkType::LoS, &self.config.pathloss, rng)?.beta;
                gen_uav_channel(&self.array, beta, aoa.theta, aoa.phi, rng)?
            }
            UserKind::Gue => {
                let beta = path_loss(aoa.distance, LinkType::NLoS, &self.config.pathloss, rng)?.beta;
                gen_gue_channel(m, beta, rng)?
            }
        };
        Ok(Link {
            channel,
            theta: aoa.theta,
            phi: aoa.phi,
        })
    }

    /// Runs trial `trial` on its own random stream.
    pub fn run_trial(&self, trial: u64) -> Result<TrialOutput> {
        self.trial_inner(trial).map_err(|e| e.in_trial(trial))
    }

    fn trial_inner(&self, trial: u64) -> Result<TrialOutput> {
        let cfg = &self.config;
        let mut rng = trial_rng(cfg.seed, trial);
        let k = self.layout.num_cells();
        let placed = place_users(&self.layout, cfg.layout.uavs, &cfg.layout.heights(), &mut rng)?;
        let users = &placed.users;
        let gue_cross = cfg.interference.gue_pilot || cfg.interference.dl_gue;

        // links[l][u]: user u seen from BS l. GUE cross links only when a
        // flag needs them.
        let mut links: Vec<Vec<Option<Link>>> = Vec::with_capacity(k);
        for l in 0..k {
            let mut row = Vec::with_capacity(k);
            for (u, user) in users.iter().enumerate() {
                let needed = u == l || user.kind == UserKind::Uav || gue_cross;
                row.push(if needed {
                    Some(self.link(l, user, &mut rng)?)
                } else {
                    None
                });
            }
            links.push(row);
        }
        let get = |l: usize, u: usize| links[l][u].as_ref().expect("link generated");
        let pilot_interferers = |l: usize| -> Vec<usize> {
            (0..k)
                .filter(|&u| u != l && (users[u].kind == UserKind::Uav || cfg.interference.gue_pilot))
                .collect()
        };

        let mut block1 = Vec::with_capacity(k);
        for l in 0..k {
            let intf: Vec<&ChannelVector> = pilot_interferers(l).iter().map(|&u| &get(l, u).channel).collect();
            block1.push(ls_estimate(&get(l, l).channel, &intf, &self.budget.pilot, l, 0, &mut rng)?.vector);
        }

        let wants = |s: Scheme| cfg.schemes.contains(&s);
        let mut diag = TrialDiagnostics {
            trial,
            ..Default::default()
        };
        let mut estimates: Vec<(Scheme, Vec<ChannelVector>)> = Vec::new();
        for &scheme in &cfg.schemes {
            let mut per_bs = Vec::with_capacity(k);
            for (l, b1) in block1.iter().enumerate() {
                let est = match scheme {
                    Scheme::Before => b1.clone(),
                    Scheme::TrueCsi => get(l, l).channel.clone(),
                    Scheme::Perfect => {
                        let aoas: Vec<(f64, f64)> = pilot_interferers(l)
                            .iter()
                            .filter(|&&u| users[u].kind == UserKind::Uav)
                            .map(|&u| (get(l, u).theta, get(l, u).phi))
                            .collect();
                        perfect_pdc(b1, &aoas, &self.array)?.vector
                    }
                    Scheme::After => self.after_pdc(l, users, &links, b1, &mut rng, &mut diag)?,
                };
                per_bs.push(est);
            }
            estimates.push((scheme, per_bs));
        }
        debug_assert!(!wants(Scheme::After) || diag.detection_runs as usize == k);

        let budget = &self.budget.power;
        let mut samples = Vec::with_capacity(estimates.len() * 2 * k);
        for (scheme, est) in &estimates {
            for (u, user) in users.iter().enumerate() {
                let own = &get(u, u).channel;
                let intf: Vec<&ChannelVector> = pilot_interferers(u).iter().map(|&v| &get(u, v).channel).collect();
                let ul = uplink_sinr(&est[u], own, &intf, budget)?;
                let dl = match user.kind {
                    UserKind::Gue if !cfg.interference.dl_gue => downlink_sinr_gue(own, &est[u], budget)?,
                    _ => {
                        let to_user: Vec<&ChannelVector> = (0..k).map(|l| &get(l, u).channel).collect();
                        let precoders: Vec<&ChannelVector> = est.iter().collect();
                        downlink_sinr_uav(&to_user, &precoders, u, budget)?
                    }
                };
                for (direction, value) in [(Direction::Ul, ul), (Direction::Dl, dl)] {
                    samples.push(SinrSample {
                        trial,
                        user: u,
                        user_kind: user.kind,
                        direction,
                        scheme: *scheme,
                        value,
                    });
                }
            }
        }
        Ok(TrialOutput {
            samples,
            diagnostics: diag,
        })
    }

    /// Proposed decontamination at BS `l`, including the second training
    /// block for UAV users, with detector bookkeeping.
    fn after_pdc(
        &self,
        l: usize,
        users: &[UserPlacement],
        links: &[Vec<Option<Link>>],
        block1: &ChannelVector,
        rng: &mut ChaCha8Rng,
        diag: &mut TrialDiagnostics,
    ) -> Result<ChannelVector> {
        let k = users.len();
        let get = |u: usize| links[l][u].as_ref().expect("link generated");
        let uav_interferers: Vec<usize> = (0..k).filter(|&u| u != l && users[u].kind == UserKind::Uav).collect();
        let mut sources: Vec<(f64, f64)> = uav_interferers.iter().map(|&u| (get(u).theta, get(u).phi)).collect();
        let own_is_uav = users[l].kind == UserKind::Uav;
        if own_is_uav {
            sources.insert(0, (get(l).theta, get(l).phi));
        }

        let out = match users[l].kind {
            UserKind::Gue => decontaminate_gue(block1, &self.detector)?,
            UserKind::Uav => {
                let block2 = self.second_block(l, users, links, &uav_interferers, rng)?;
                decontaminate_uav(block1, &block2, &self.detector, &self.tolerance)?
            }
        };

        let detected: Vec<&LoSComponent> = out.removed.iter().chain(out.kept.iter()).collect();
        let owners: Vec<Option<usize>> = detected.iter().map(|c| self.attribute(c, &sources)).collect();
        diag.detection_runs += 1;
        diag.components += detected.len() as u32;
        diag.truncated_runs += out.truncated as u32;
        diag.false_alarm_runs += owners.iter().any(|o| o.is_none()) as u32;
        let first_interferer = own_is_uav as usize;
        for s in first_interferer..sources.len() {
            diag.interferers += 1;
            diag.missed += (!owners.contains(&Some(s))) as u32;
        }

        if own_is_uav && !uav_interferers.is_empty() {
            diag.id_attempts += 1;
            let kept_owner: Vec<Option<usize>> = out.kept.iter().map(|c| self.attribute(c, &sources)).collect();
            let identified = matches!(out.branch, Some(UavBranch::UniqueMatch | UavBranch::MultipleMatches))
                && kept_owner.contains(&Some(0))
                && kept_owner.iter().all(|o| *o == Some(0) || o.is_none());
            diag.id_successes += identified as u32;
            if out.branch == Some(UavBranch::MultipleMatches) {
                diag.multi_match += 1;
                let disjoint = out.removed.iter().all(|r| out.kept.iter().all(|k| k.cell != r.cell));
                diag.multi_match_cleared += (disjoint && out.removed.len() + out.kept.len() == out.detected) as u32;
            }
        }
        Ok(out.vector)
    }

    /// Second training block at UAV BS `l` with a fresh pilot: each block-1
    /// interferer keeps sharing the pilot with probability `persistence`,
    /// otherwise it is replaced by a UAV dropped in another random cell. All
    /// LoS phases are redrawn.
    fn second_block(
        &self,
        l: usize,
        users: &[UserPlacement],
        links: &[Vec<Option<Link>>],
        uav_interferers: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Result<ChannelVector> {
        let k = users.len();
        let own = links[l][l].as_ref().expect("own link");
        let rephase = |h: &ChannelVector, rng: &mut ChaCha8Rng| {
            h.scaled(crate::C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
        };
        let own2 = rephase(&own.channel, rng);
        let mut intf = Vec::with_capacity(uav_interferers.len());
        for &u in uav_interferers {
            let persists = rng.gen_bool(self.config.pdc.persistence);
            let h = if persists {
                rephase(&links[l][u].as_ref().expect("uav link").channel, rng)
            } else {
                let mut cell = rng.gen_range(0..k - 1);
                if cell >= l {
                    cell += 1;
                }
                let heights = self.config.layout.heights();
                let fresh = drop_user(
                    &self.layout.sites[cell],
                    UserKind::Uav,
                    self.layout.cell_radius,
                    &heights,
                    rng,
                );
                self.link(l, &fresh, rng)?.channel
            };
            intf.push(h);
        }
        let refs: Vec<&ChannelVector> = intf.iter().collect();
        Ok(ls_estimate(&own2, &refs, &self.budget.pilot, l, 1, rng)?.vector)
    }

    /// Index of the true LoS source the component's primary direction points
    /// at, if any is correlated enough.
    fn attribute(&self, c: &LoSComponent, sources: &[(f64, f64)]) -> Option<usize> {
        let a = c.steering(&self.array);
        let m = self.array.antennas() as f64;
        sources
            .iter()
            .enumerate()
            .map(|(i, &(t, p))| (i, steering_vector(&self.array, t, p).inner(&a).norm() / m))
            .filter(|(_, rho)| *rho >= ATTRIBUTION_CORRELATION)
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            .map(|(i, _)| i)
    }

    /// Runs every trial on a pool of `workers` threads (0: all cores) and
    /// returns results in trial order.
    pub fn run(&self, workers: usize) -> Result<RunOutput> {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let outputs: Vec<TrialOutput> = pool.install(|| {
            (0..self.config.trials)
                .into_par_iter()
                .map(|t| self.run_trial(t))
                .collect::<Result<_>>()
        })?;
        let mut run = RunOutput::default();
        for o in outputs {
            run.samples.extend(o.samples);
            run.diagnostics.push(o.diagnostics);
        }
        Ok(run)
    }
}

/// Simulates `config.trials` trials with `config.workers` threads.
pub fn run_trials(config: &ScenarioConfig) -> Result<RunOutput> {
    Simulator::new(config)?.run(config.workers)
}
