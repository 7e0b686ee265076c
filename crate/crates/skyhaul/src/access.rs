//! UE association, alpha-fair TDM shares, backhaul capping, and exact
//! fluid-queue accounting.
//!
//! Queues hold whole bytes (u64) and every split uses largest-remainder
//! apportionment, so conservation (arrived = served + dropped + backlog)
//! holds to the byte at every slot, not just in expectation.

use crate::channel;
use crate::engine::NetworkState;
use crate::scenario::Scenario;
use thiserror::Error;

/// UE id -> serving node id (APs first, then UAVs), `None` = out of coverage.
pub type Association = Vec<Option<usize>>;

#[derive(Debug, Error, PartialEq)]
pub enum AccessError {
    #[error("alpha_fair_shares: empty rate vector")]
    EmptyRates,
    #[error("alpha_fair_shares: nonpositive rate {0}")]
    NonpositiveRate(f64),
    #[error("backhaul capacity must be nonnegative, got {0}")]
    NegativeBackhaul(f64),
}

/// Attaches every UE to the node with the highest expected received power
/// (LOS-probability-weighted path loss, boresight beams); ties go to the
/// lowest node id. A UE whose best expected SNR sits below the coverage
/// floor is out of coverage.
pub fn associate(state: &NetworkState, s: &Scenario) -> Association {
    let nodes = channel::access_nodes(state, s);
    let noise_dbm = s.noise_dbm();
    state
        .ue_positions
        .iter()
        .map(|&ue| {
            let mut best: Option<usize> = None;
            let mut best_dbm = f64::NEG_INFINITY;
            for (n, node) in nodes.iter().enumerate() {
                let p = channel::expected_rx_power_dbm(ue, node.pos, s.access_array_ue, node.array, s);
                if p > best_dbm {
                    best_dbm = p;
                    best = Some(n);
                }
            }
            best.filter(|_| best_dbm - noise_dbm >= s.sinr_floor_db)
        })
        .collect()
}

/// Closed-form alpha-fair time shares: tau_i proportional to
/// r_i^((1-alpha)/alpha), normalized to sum 1. This maximizes
/// sum U_alpha(tau_i * r_i) over the simplex.
pub fn alpha_fair_shares(rates: &[f64], alpha: f64) -> Result<Vec<f64>, AccessError> {
    if rates.is_empty() {
        return Err(AccessError::EmptyRates);
    }
    if let Some(&bad) = rates.iter().find(|r| !(**r > 0.0)) {
        return Err(AccessError::NonpositiveRate(bad));
    }
    debug_assert!(alpha >= 1.0);
    let e = (1.0 - alpha) / alpha;
    let w: Vec<f64> = if e == 0.0 {
        vec![1.0; rates.len()]
    } else if e == -0.5 {
        rates.iter().map(|r| 1.0 / r.sqrt()).collect()
    } else {
        rates.iter().map(|r| r.powf(e)).collect()
    };
    let sum: f64 = w.iter().sum();
    Ok(w.iter().map(|x| x / sum).collect())
}

/// One cell's slot-level scheduling outcome. Vectors are aligned with
/// `members`. Zero-rate members keep tau = 0 and deliver nothing.
#[derive(Debug, Clone)]
pub struct CellAllocation {
    pub cell_id: usize,
    pub members: Vec<usize>,
    pub time_share: Vec<f64>,
    pub access_rate_bps: Vec<f64>,
    /// Infinite for AP cells and in the ideal regime.
    pub backhaul_rate_bps: f64,
    pub delivered_rate_bps: Vec<f64>,
}

/// Builds a cell's alpha-fair allocation from its members' full-slot rates.
/// Members with nonpositive rate are excluded from the fair-share program
/// (the utility diverges at zero) and get tau = 0.
pub fn cell_allocation(
    cell_id: usize,
    members: Vec<usize>,
    member_rates: Vec<f64>,
    alpha: f64,
) -> CellAllocation {
    let active: Vec<usize> = (0..members.len()).filter(|&k| member_rates[k] > 0.0).collect();
    let mut time_share = vec![0.0; members.len()];
    if !active.is_empty() {
        let rates: Vec<f64> = active.iter().map(|&k| member_rates[k]).collect();
        let tau = alpha_fair_shares(&rates, alpha).expect("active rates are positive");
        for (slot, &k) in active.iter().enumerate() {
            time_share[k] = tau[slot];
        }
    }
    let access_rate_bps: Vec<f64> =
        (0..members.len()).map(|k| time_share[k] * member_rates[k]).collect();
    CellAllocation {
        cell_id,
        members,
        time_share,
        access_rate_bps,
        backhaul_rate_bps: f64::INFINITY,
        delivered_rate_bps: Vec::new(),
    }
}

/// Applies the backhaul cap: delivered rates are the access rates scaled by
/// min(1, c_bh / sum x). Infinite capacity leaves rates untouched.
pub fn apply_backhaul_cap(mut alloc: CellAllocation, c_bh: f64) -> Result<CellAllocation, AccessError> {
    if c_bh < 0.0 {
        return Err(AccessError::NegativeBackhaul(c_bh));
    }
    let total: f64 = alloc.access_rate_bps.iter().sum();
    let scale = if total > 0.0 { (c_bh / total).min(1.0) } else { 1.0 };
    alloc.backhaul_rate_bps = c_bh;
    alloc.delivered_rate_bps = alloc.access_rate_bps.iter().map(|x| x * scale).collect();
    Ok(alloc)
}

/// Multi-flow byte queue with cumulative conservation counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    pub backlog_bytes: Vec<u64>,
    pub capacity_bytes: u64,
    pub arrived_bytes: u64,
    pub served_bytes: u64,
    pub dropped_bytes: u64,
}

impl QueueState {
    pub fn new(flows: usize, capacity_bytes: u64) -> Self {
        Self {
            backlog_bytes: vec![0; flows],
            capacity_bytes,
            arrived_bytes: 0,
            served_bytes: 0,
            dropped_bytes: 0,
        }
    }

    pub fn total_backlog(&self) -> u64 {
        self.backlog_bytes.iter().sum()
    }
}

/// Per-flow outcome of one queue update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueUpdate {
    pub served: Vec<u64>,
    pub dropped: Vec<u64>,
}

/// Splits `total` across flows proportionally to `weights` (largest
/// remainder, ties to the lower flow index) without exceeding per-flow
/// `caps`. The result sums to min(total, sum of caps) exactly.
fn apportion(total: u64, weights: &[u64], caps: &[u64]) -> Vec<u64> {
    let cap_sum: u128 = caps.iter().map(|&c| c as u128).sum();
    let t = (total as u128).min(cap_sum);
    let w_sum: u128 = weights.iter().map(|&w| w as u128).sum();
    let mut alloc = vec![0u64; weights.len()];
    if t == 0 || w_sum == 0 {
        return alloc;
    }
    let mut rem: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    let mut assigned: u128 = 0;
    for (f, (&w, &cap)) in weights.iter().zip(caps).enumerate() {
        let exact = t * w as u128;
        let a = ((exact / w_sum) as u64).min(cap);
        alloc[f] = a;
        assigned += a as u128;
        rem.push((exact % w_sum, f));
    }
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut leftover = t - assigned;
    while leftover > 0 {
        let mut progressed = false;
        for &(_, f) in &rem {
            if leftover == 0 {
                break;
            }
            if alloc[f] < caps[f] {
                alloc[f] += 1;
                leftover -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// One slot of queue evolution: service first (each flow serves up to its
/// backlog plus this slot's arrivals), then any capacity excess is dropped
/// from the newly arrived bytes proportionally to arrivals. Counters stay
/// exact: arrived = served + dropped + backlog always.
pub fn update_queue(q: &mut QueueState, arrivals: &[u64], service: &[u64]) -> QueueUpdate {
    let flows = q.backlog_bytes.len();
    debug_assert_eq!(arrivals.len(), flows);
    debug_assert_eq!(service.len(), flows);

    let mut served = vec![0u64; flows];
    let mut mid = vec![0u64; flows];
    // FIFO within a flow: service consumes old backlog before new arrivals,
    // so the droppable portion of flow f is min(arrivals, remaining).
    let mut droppable = vec![0u64; flows];
    let mut mid_sum: u64 = 0;
    for f in 0..flows {
        let avail = q.backlog_bytes[f] + arrivals[f];
        served[f] = service[f].min(avail);
        mid[f] = avail - served[f];
        droppable[f] = arrivals[f].min(mid[f]);
        mid_sum += mid[f];
    }

    let excess = mid_sum.saturating_sub(q.capacity_bytes);
    let dropped = if excess > 0 {
        apportion(excess, arrivals, &droppable)
    } else {
        vec![0u64; flows]
    };

    for f in 0..flows {
        q.backlog_bytes[f] = mid[f] - dropped[f];
        q.arrived_bytes += arrivals[f];
        q.served_bytes += served[f];
        q.dropped_bytes += dropped[f];
    }
    debug_assert!(q.total_backlog() <= q.capacity_bytes, "queue exceeded capacity");
    debug_assert_eq!(
        q.arrived_bytes,
        q.served_bytes + q.dropped_bytes + q.total_backlog(),
        "conservation broken"
    );
    QueueUpdate { served, dropped }
}

/// Per-slot rate inputs for `serve_uplink`: time-shared access rate per UE
/// and backhaul capacity per UAV (already mode-adjusted; infinite in the
/// ideal regime).
#[derive(Debug, Clone)]
pub struct SlotRates {
    pub access_bps: Vec<f64>,
    pub backhaul_bps: Vec<f64>,
}

/// Moves one slot of uplink traffic: every UE sources its offered bytes
/// into its own queue; access service moves bytes to the serving node (an
/// AP sinks them, a UAV queues them per flow); each UAV then drains
/// min(backhaul capacity, post-arrival backlog) toward its donor AP,
/// split across flows proportionally to their post-arrival backlog.
/// Returns per-UE delivered (AP-arrival) throughput in bit/s.
pub fn serve_uplink(
    state: &mut NetworkState,
    assoc: &Association,
    rates: &SlotRates,
    s: &Scenario,
) -> Vec<f64> {
    let n_ues = state.ue_positions.len();
    let n_aps = state.ap_positions.len();
    let n_uavs = state.uavs.len();
    let offered = s.offered_bytes_per_slot();
    let to_bytes = |bps: f64| -> u64 {
        if bps.is_infinite() { u64::MAX } else { (bps * s.slot_s / 8.0).floor() as u64 }
    };

    let mut delivered_bytes = vec![0u64; n_ues];
    let mut uav_arrivals = vec![vec![0u64; n_ues]; n_uavs];
    for i in 0..n_ues {
        let svc = match assoc[i] {
            Some(_) => to_bytes(rates.access_bps[i]),
            None => 0,
        };
        let upd = update_queue(&mut state.ue_queues[i], &[offered], &[svc]);
        let moved = upd.served[0];
        match assoc[i] {
            Some(n) if n < n_aps => delivered_bytes[i] += moved,
            Some(n) => uav_arrivals[n - n_aps][i] = moved,
            None => debug_assert_eq!(moved, 0),
        }
    }

    for u in 0..n_uavs {
        let q = &mut state.uav_queues[u];
        let arr = &uav_arrivals[u];
        let post: Vec<u64> = (0..n_ues).map(|f| q.backlog_bytes[f] + arr[f]).collect();
        let total: u64 = post.iter().sum();
        let drain = to_bytes(rates.backhaul_bps[u]).min(total);
        let service = apportion(drain, &post, &post);
        let upd = update_queue(q, arr, &service);
        for f in 0..n_ues {
            delivered_bytes[f] += upd.served[f];
        }
    }

    delivered_bytes.iter().map(|&b| b as f64 * 8.0 / s.slot_s).collect()
}
