//! Slot-driven simulation loop, batch runner over seeds, and the summary
//! metrics (Jain index, empirical CDF).
//!
//! Each slot advances in a fixed order: UE mobility, target replanning on
//! epoch boundaries, UAV kinematics, association, access rates, per-cell
//! alpha-fair schedules, backhaul links, then queue service. Throughput is
//! measured after a warmup window; backlog present at the measurement start
//! is credited away so a UE's measured mean can never exceed its offered
//! rate on the strength of pre-warmup queue drain.

use crate::access::{self, Association, CellAllocation, QueueState, SlotRates};
use crate::channel::{self, LinkBudget};
use crate::mobility::{self, GroupState, Position, UavState};
use crate::placement;
use crate::rng::{substream, STREAM_LOS, STREAM_MOBILITY, STREAM_PSO};
use crate::scenario::{validate_scenario, Mode, Scenario};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

/// Full mutable world state at a slot boundary.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub time_s: f64,
    pub ap_positions: Vec<Position>,
    pub uavs: Vec<UavState>,
    pub groups: Vec<GroupState>,
    pub ue_positions: Vec<Position>,
    pub ue_queues: Vec<QueueState>,
    /// One queue per UAV with one flow per UE.
    pub uav_queues: Vec<QueueState>,
    /// Association chosen in the most recent slot (all None before slot 0).
    pub assoc: Association,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    InvalidScenario(Vec<String>),
    #[error("no measurement slots: warmup covers the whole duration")]
    NoMeasurementSlots,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("all values are zero")]
    AllZero,
}

/// Jain fairness index (sum x)^2 / (n * sum x^2); 1 for equal vectors,
/// 1/n for a single nonzero entry.
pub fn jain_index(xs: &[f64]) -> Result<f64, MetricError> {
    if xs.is_empty() {
        return Err(MetricError::Empty);
    }
    let sum: f64 = xs.iter().sum();
    let sq: f64 = xs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return Err(MetricError::AllZero);
    }
    Ok(sum * sum / (xs.len() as f64 * sq))
}

/// Sorted (value, cumulative fraction) pairs with duplicate values merged
/// into a single step carrying the highest fraction.
pub fn empirical_cdf(xs: &[f64]) -> Vec<(f64, f64)> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, &x) in v.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    out
}

/// One UAV's backhaul assignment for a slot.
#[derive(Debug, Clone)]
pub struct BackhaulUse {
    pub uav_index: usize,
    pub donor_ap: usize,
    /// Capacity the queue drain actually used (infinite in the ideal regime).
    pub capacity_bps: f64,
    pub budget: LinkBudget,
}

/// Everything that happened in one slot, for observers and dumps.
#[derive(Debug, Clone)]
pub struct SlotSnapshot {
    pub slot: usize,
    pub t_s: f64,
    pub measured: bool,
    pub assoc: Association,
    pub budgets: Vec<Option<LinkBudget>>,
    pub cells: Vec<CellAllocation>,
    pub backhaul: Vec<BackhaulUse>,
    pub delivered_bps: Vec<f64>,
}

/// Hook for per-slot and per-PSO-iteration instrumentation.
pub trait RunObserver {
    fn on_slot(&mut self, _state: &NetworkState, _snap: &SlotSnapshot) {}
    /// `iteration` 0 is the post-initialization global best.
    fn on_pso(&mut self, _epoch: usize, _iteration: usize, _gbest: f64) {}
}

pub struct NoObserver;
impl RunObserver for NoObserver {}

/// One finished seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Measured per-UE delivered throughput, legacy-backlog corrected.
    pub per_ue_mean_bps: Vec<f64>,
    /// True when the UE was AP-attached in every measured slot.
    pub per_ue_ap_only: Vec<bool>,
    /// Per-node delivered throughput series over the measured window,
    /// attributed by each slot's association.
    pub per_cell_series_bps: Vec<Vec<f64>>,
    pub per_slot_mean_bps: Vec<f64>,
    /// Jain index of per_ue_mean_bps; NaN when nothing was delivered.
    pub jain: f64,
    pub sourced_bytes: u64,
    pub sunk_bytes: u64,
    pub dropped_bytes: u64,
    pub final_backlog_bytes: u64,
}

impl RunResult {
    pub fn mean_ue_throughput_bps(&self) -> f64 {
        if self.per_ue_mean_bps.is_empty() {
            return 0.0;
        }
        self.per_ue_mean_bps.iter().sum::<f64>() / self.per_ue_mean_bps.len() as f64
    }

    pub fn per_cell_mean_bps(&self) -> Vec<f64> {
        self.per_cell_series_bps
            .iter()
            .map(|series| {
                if series.is_empty() {
                    0.0
                } else {
                    series.iter().sum::<f64>() / series.len() as f64
                }
            })
            .collect()
    }
}

/// Steppable simulation for one seed.
pub struct Simulation {
    s: Scenario,
    seed: u64,
    state: NetworkState,
    targets: Vec<(f64, f64)>,
    slot: usize,
    n_slots: usize,
    warmup_slots: usize,
    reopt_slots: usize,
    rng_mob: ChaCha8Rng,
    rng_los: ChaCha8Rng,
    rng_pso: ChaCha8Rng,
    measured_slots: usize,
    legacy_credit: Vec<u64>,
    measured_bytes: Vec<u64>,
    ap_only: Vec<bool>,
    per_cell_series: Vec<Vec<f64>>,
    per_slot_mean: Vec<f64>,
    last_snapshot: Option<SlotSnapshot>,
}

impl Simulation {
    pub fn new(s: &Scenario, seed: u64) -> Result<Self, EngineError> {
        let violations = validate_scenario(s);
        if !violations.is_empty() {
            return Err(EngineError::InvalidScenario(violations));
        }
        let n_slots = s.n_slots();
        let warmup_slots = s.warmup_slots();
        if warmup_slots >= n_slots {
            return Err(EngineError::NoMeasurementSlots);
        }

        let mut rng_mob = substream(seed, STREAM_MOBILITY);
        let (groups, ue_positions) = mobility::init_clusters(s, &mut rng_mob);
        let ap_positions: Vec<Position> =
            placement::grid_positions(s.n_aps, s.area_width_m, s.area_height_m)
                .into_iter()
                .map(|(x, y)| Position::new(x, y, s.ap_height_m))
                .collect();
        let uavs: Vec<UavState> =
            placement::grid_positions(s.n_uavs, s.area_width_m, s.area_height_m)
                .into_iter()
                .map(|(x, y)| {
                    let p = Position::new(x, y, s.uav_altitude_m);
                    UavState { pos: p, target: p }
                })
                .collect();
        let targets = uavs.iter().map(|u| (u.pos.x, u.pos.y)).collect();

        let state = NetworkState {
            time_s: 0.0,
            ap_positions,
            uavs,
            groups,
            ue_positions,
            ue_queues: vec![QueueState::new(1, s.buffer_capacity_bytes); s.n_ues],
            uav_queues: vec![QueueState::new(s.n_ues, s.buffer_capacity_bytes); s.n_uavs],
            assoc: vec![None; s.n_ues],
        };

        Ok(Self {
            s: s.clone(),
            seed,
            state,
            targets,
            slot: 0,
            n_slots,
            warmup_slots,
            reopt_slots: s.reopt_slots(),
            rng_mob,
            rng_los: substream(seed, STREAM_LOS),
            rng_pso: substream(seed, STREAM_PSO),
            measured_slots: 0,
            legacy_credit: vec![0; s.n_ues],
            measured_bytes: vec![0; s.n_ues],
            ap_only: vec![true; s.n_ues],
            per_cell_series: vec![Vec::new(); s.n_nodes()],
            per_slot_mean: Vec::new(),
            last_snapshot: None,
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn scenario(&self) -> &Scenario {
        &self.s
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn is_done(&self) -> bool {
        self.slot >= self.n_slots
    }

    pub fn last_snapshot(&self) -> Option<&SlotSnapshot> {
        self.last_snapshot.as_ref()
    }

    /// Advances one slot.
    pub fn step(&mut self, obs: &mut dyn RunObserver) {
        assert!(self.slot < self.n_slots, "stepping past the configured duration");
        let s = &self.s;
        let n_aps = s.n_aps;
        let n_uavs = s.n_uavs;
        let n_nodes = s.n_nodes();
        let n_ues = s.n_ues;

        self.state.ue_positions =
            mobility::step_groups(&mut self.state.groups, s.slot_s, s, &mut self.rng_mob);

        if self.slot % self.reopt_slots == 0 {
            let epoch = self.slot / self.reopt_slots;
            let plan =
                placement::plan_targets(&self.state, s.mode, s.placement, s, &mut self.rng_pso);
            for (it, &g) in plan.trace.iter().enumerate() {
                obs.on_pso(epoch, it, g);
            }
            self.targets = plan.targets;
        }

        for u in 0..n_uavs {
            let (tx, ty) = self.targets[u];
            self.state.uavs[u].target = Position::new(tx, ty, s.uav_altitude_m);
            self.state.uavs[u] = mobility::step_uav(&self.state.uavs[u], s.slot_s, s.uav_speed_mps);
        }

        let assoc = access::associate(&self.state, s);
        let budgets = channel::access_rates(&self.state, &assoc, s, &mut self.rng_los);

        let mut backhaul = Vec::with_capacity(n_uavs);
        let mut backhaul_bps = vec![f64::INFINITY; n_uavs];
        for u in 0..n_uavs {
            let (donor_ap, budget) =
                channel::backhaul_link(self.state.uavs[u].pos, &self.state.ap_positions, s);
            if s.mode != Mode::Ideal {
                backhaul_bps[u] = budget.rate_bps;
            }
            backhaul.push(BackhaulUse {
                uav_index: u,
                donor_ap,
                capacity_bps: backhaul_bps[u],
                budget,
            });
        }

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (i, a) in assoc.iter().enumerate() {
            if let Some(n) = a {
                members[*n].push(i);
            }
        }
        let mut access_bps = vec![0.0f64; n_ues];
        let mut cells = Vec::new();
        for (n, cell_members) in members.into_iter().enumerate() {
            if cell_members.is_empty() {
                continue;
            }
            let rates: Vec<f64> = cell_members
                .iter()
                .map(|&i| budgets[i].as_ref().map_or(0.0, |b| b.rate_bps))
                .collect();
            let alloc = access::cell_allocation(n, cell_members, rates, s.alpha);
            // The access side always transmits its fair share; a finite
            // backhaul shows up as queueing at the UAV, not as access
            // throttling. The capped allocation is kept for reporting.
            for (k, &i) in alloc.members.iter().enumerate() {
                access_bps[i] = alloc.access_rate_bps[k];
            }
            let c_bh = if n >= n_aps { backhaul_bps[n - n_aps] } else { f64::INFINITY };
            cells.push(access::apply_backhaul_cap(alloc, c_bh).expect("capacity is nonnegative"));
        }

        if self.slot == self.warmup_slots {
            for i in 0..n_ues {
                let in_flight: u64 = self
                    .state
                    .uav_queues
                    .iter()
                    .map(|q| q.backlog_bytes[i])
                    .sum();
                self.legacy_credit[i] = self.state.ue_queues[i].backlog_bytes[0] + in_flight;
            }
        }

        let delivered_bps = access::serve_uplink(
            &mut self.state,
            &assoc,
            &SlotRates { access_bps, backhaul_bps },
            s,
        );

        self.state.assoc = assoc.clone();
        self.state.time_s = (self.slot + 1) as f64 * s.slot_s;

        let measured = self.slot >= self.warmup_slots;
        if measured {
            self.measured_slots += 1;
            let mut cell_bps = vec![0.0f64; n_nodes];
            for i in 0..n_ues {
                let bytes = (delivered_bps[i] * s.slot_s / 8.0).round() as u64;
                let use_credit = self.legacy_credit[i].min(bytes);
                self.legacy_credit[i] -= use_credit;
                self.measured_bytes[i] += bytes - use_credit;
                match assoc[i] {
                    Some(n) => {
                        cell_bps[n] += delivered_bps[i];
                        if n >= n_aps {
                            self.ap_only[i] = false;
                        }
                    }
                    None => self.ap_only[i] = false,
                }
            }
            for (n, series) in self.per_cell_series.iter_mut().enumerate() {
                series.push(cell_bps[n]);
            }
            self.per_slot_mean
                .push(delivered_bps.iter().sum::<f64>() / n_ues as f64);
        }

        let snap = SlotSnapshot {
            slot: self.slot,
            t_s: self.state.time_s,
            measured,
            assoc,
            budgets,
            cells,
            backhaul,
            delivered_bps,
        };
        obs.on_slot(&self.state, &snap);
        self.last_snapshot = Some(snap);
        self.slot += 1;
    }

    /// Runs the remaining slots and folds the accumulators into a result.
    pub fn run_to_end(mut self, obs: &mut dyn RunObserver) -> RunResult {
        while self.slot < self.n_slots {
            self.step(obs);
        }
        let window_s = self.measured_slots as f64 * self.s.slot_s;
        let per_ue_mean_bps: Vec<f64> =
            self.measured_bytes.iter().map(|&b| b as f64 * 8.0 / window_s).collect();
        let jain = jain_index(&per_ue_mean_bps).unwrap_or(f64::NAN);

        let st = &self.state;
        let sourced_bytes: u64 = st.ue_queues.iter().map(|q| q.arrived_bytes).sum();
        let ue_served: u64 = st.ue_queues.iter().map(|q| q.served_bytes).sum();
        let uav_arrived: u64 = st.uav_queues.iter().map(|q| q.arrived_bytes).sum();
        let uav_served: u64 = st.uav_queues.iter().map(|q| q.served_bytes).sum();
        let sunk_bytes = ue_served - uav_arrived + uav_served;
        let dropped_bytes: u64 =
            st.ue_queues.iter().chain(&st.uav_queues).map(|q| q.dropped_bytes).sum();
        let final_backlog_bytes: u64 =
            st.ue_queues.iter().chain(&st.uav_queues).map(|q| q.total_backlog()).sum();
        debug_assert_eq!(
            sourced_bytes,
            sunk_bytes + dropped_bytes + final_backlog_bytes,
            "end-to-end byte conservation broken"
        );

        RunResult {
            seed: self.seed,
            per_ue_mean_bps,
            per_ue_ap_only: self.ap_only,
            per_cell_series_bps: self.per_cell_series,
            per_slot_mean_bps: self.per_slot_mean,
            jain,
            sourced_bytes,
            sunk_bytes,
            dropped_bytes,
            final_backlog_bytes,
        }
    }
}

/// Runs one seed to completion with no instrumentation.
pub fn run(s: &Scenario, seed: u64) -> Result<RunResult, EngineError> {
    run_with_observer(s, seed, &mut NoObserver)
}

pub fn run_with_observer(
    s: &Scenario,
    seed: u64,
    obs: &mut dyn RunObserver,
) -> Result<RunResult, EngineError> {
    Ok(Simulation::new(s, seed)?.run_to_end(obs))
}

/// Per-seed row inside an aggregate summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub mean_throughput_bps: f64,
    pub jain: f64,
    pub sourced_bytes: u64,
    pub sunk_bytes: u64,
    pub dropped_bytes: u64,
}

/// Batch aggregate across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSummary {
    pub n_seeds: usize,
    /// Mean over seeds of the per-seed mean UE throughput.
    pub mean_throughput_bps: f64,
    pub jain_mean: f64,
    /// Sample standard deviation over seeds (0 for fewer than two finite values).
    pub jain_std: f64,
    /// Total dropped bytes over total sourced bytes, all seeds pooled.
    pub drop_fraction: f64,
    pub per_seed: Vec<SeedSummary>,
    pub cdf_per_ue_bps: Vec<(f64, f64)>,
    pub cdf_per_cell_bps: Vec<(f64, f64)>,
}

/// Folds finished runs into an aggregate summary.
pub fn aggregate(runs: &[RunResult]) -> AggregateSummary {
    let n_seeds = runs.len();
    let per_seed: Vec<SeedSummary> = runs
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            mean_throughput_bps: r.mean_ue_throughput_bps(),
            jain: r.jain,
            sourced_bytes: r.sourced_bytes,
            sunk_bytes: r.sunk_bytes,
            dropped_bytes: r.dropped_bytes,
        })
        .collect();

    let mean_throughput_bps = if n_seeds == 0 {
        0.0
    } else {
        per_seed.iter().map(|p| p.mean_throughput_bps).sum::<f64>() / n_seeds as f64
    };

    let jains: Vec<f64> = per_seed.iter().map(|p| p.jain).filter(|j| j.is_finite()).collect();
    let jain_mean = if jains.is_empty() {
        f64::NAN
    } else {
        jains.iter().sum::<f64>() / jains.len() as f64
    };
    let jain_std = if jains.len() < 2 {
        0.0
    } else {
        let var = jains.iter().map(|j| (j - jain_mean) * (j - jain_mean)).sum::<f64>()
            / (jains.len() - 1) as f64;
        var.sqrt()
    };

    let sourced: u64 = per_seed.iter().map(|p| p.sourced_bytes).sum();
    let dropped: u64 = per_seed.iter().map(|p| p.dropped_bytes).sum();
    let drop_fraction = if sourced == 0 { 0.0 } else { dropped as f64 / sourced as f64 };

    let pooled_ue: Vec<f64> =
        runs.iter().flat_map(|r| r.per_ue_mean_bps.iter().copied()).collect();
    let pooled_cell: Vec<f64> =
        runs.iter().flat_map(|r| r.per_cell_mean_bps()).collect();

    AggregateSummary {
        n_seeds,
        mean_throughput_bps,
        jain_mean,
        jain_std,
        drop_fraction,
        per_seed,
        cdf_per_ue_bps: empirical_cdf(&pooled_ue),
        cdf_per_cell_bps: empirical_cdf(&pooled_cell),
    }
}

/// Runs seeds `s.seed .. s.seed + n_seeds` (in parallel when the crate is
/// built with the `parallel` feature) and aggregates them. Results are
/// ordered by seed regardless of scheduling.
pub fn run_batch(s: &Scenario, n_seeds: usize) -> Result<(Vec<RunResult>, AggregateSummary), EngineError> {
    let violations = validate_scenario(s);
    if !violations.is_empty() {
        return Err(EngineError::InvalidScenario(violations));
    }
    let seeds: Vec<u64> = (0..n_seeds).map(|k| s.seed + k as u64).collect();
    #[cfg(feature = "parallel")]
    let runs: Result<Vec<RunResult>, EngineError> =
        seeds.par_iter().map(|&seed| run(s, seed)).collect();
    #[cfg(not(feature = "parallel"))]
    let runs: Result<Vec<RunResult>, EngineError> =
        seeds.iter().map(|&seed| run(s, seed)).collect();
    let runs = runs?;
    let summary = aggregate(&runs);
    Ok((runs, summary))
}
