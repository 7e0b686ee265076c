//! UAV target planning: a static grid baseline and global-best PSO over a
//! mode-aware throughput-utility fitness.
//!
//! The fitness hypothetically places the UAVs at a candidate, re-associates
//! every UE on expected (LOS-probability-weighted) path loss, prices in the
//! same interference model the simulator uses, schedules each cell with
//! alpha-fair time shares, and sums the alpha-utility of per-UE throughput.
//! Only the backhaul-aware regime lets the fitness see the backhaul cap;
//! the other regimes optimize as if the backhaul were infinite.

use crate::access;
use crate::channel::{self, PairGeom};
use crate::engine::NetworkState;
use crate::mobility::Position;
use crate::scenario::{Mode, Placement, PsoParams, Scenario};
use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Utility floor: out-of-coverage UEs are scored at this throughput instead
/// of zero, which keeps the alpha-utility finite while still punishing
/// non-coverage hard.
pub const UTILITY_FLOOR_BPS: f64 = 1e3;

fn u_alpha(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x.ln()
    } else if alpha == 2.0 {
        -1.0 / x
    } else {
        x.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

/// Row-major cell centers of the smallest near-square grid holding `n`
/// points: cols = ceil(sqrt n), rows = ceil(n / cols).
pub fn grid_positions(n: usize, width: f64, height: f64) -> Vec<(f64, f64)> {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (0..n)
        .map(|k| {
            let (i, j) = (k / cols, k % cols);
            (
                (j as f64 + 0.5) * width / cols as f64,
                (i as f64 + 0.5) * height / rows as f64,
            )
        })
        .collect()
}

/// Precomputed per-snapshot data for fitness evaluations: the AP side of
/// every pair table is fixed while the optimizer moves only the UAVs.
pub struct FitnessContext<'a> {
    s: &'a Scenario,
    ues: &'a [Position],
    ap_positions: &'a [Position],
    ap_geom: Vec<PairGeom>,
    ap_pl_eff: Vec<f64>,
    noise_dbm: f64,
    noise_mw: f64,
    g_ue_db: f64,
    g_ap_db: f64,
    g_uav_db: f64,
}

impl<'a> FitnessContext<'a> {
    pub fn new(snapshot: &'a NetworkState, s: &'a Scenario) -> Self {
        let n_aps = snapshot.ap_positions.len();
        let mut ap_geom = Vec::with_capacity(snapshot.ue_positions.len() * n_aps);
        let mut ap_pl_eff = Vec::with_capacity(ap_geom.capacity());
        for &ue in &snapshot.ue_positions {
            for &ap in &snapshot.ap_positions {
                let g = PairGeom::new(ue, ap, s.carrier_ghz);
                ap_pl_eff.push(g.expected_pl_db());
                ap_geom.push(g);
            }
        }
        Self {
            s,
            ues: &snapshot.ue_positions,
            ap_positions: &snapshot.ap_positions,
            ap_geom,
            ap_pl_eff,
            noise_dbm: s.noise_dbm(),
            noise_mw: channel::dbm_to_mw(s.noise_dbm()),
            g_ue_db: channel::peak_gain_db(s.access_array_ue),
            g_ap_db: channel::peak_gain_db(s.access_array_ap),
            g_uav_db: channel::peak_gain_db(s.access_array_uav),
        }
    }

    /// Combined pair tables for a hypothetical UAV layout: cached AP
    /// columns + fresh UAV columns, laid out as [ue * n_nodes + node] to
    /// match access_rates.
    fn tables(&self, uav_pos: &[Position]) -> (Vec<PairGeom>, Vec<f64>) {
        let n_ues = self.ues.len();
        let n_aps = self.ap_positions.len();
        let n_nodes = n_aps + uav_pos.len();
        let mut geom = vec![PairGeom::default(); n_ues * n_nodes];
        let mut pl_eff = vec![0.0f64; n_ues * n_nodes];
        for i in 0..n_ues {
            let row = i * n_nodes;
            geom[row..row + n_aps].copy_from_slice(&self.ap_geom[i * n_aps..(i + 1) * n_aps]);
            pl_eff[row..row + n_aps]
                .copy_from_slice(&self.ap_pl_eff[i * n_aps..(i + 1) * n_aps]);
            for (u, &p) in uav_pos.iter().enumerate() {
                let g = PairGeom::new(self.ues[i], p, self.s.carrier_ghz);
                pl_eff[row + n_aps + u] = g.expected_pl_db();
                geom[row + n_aps + u] = g;
            }
        }
        (geom, pl_eff)
    }

    /// Association on expected received power, the same rule associate()
    /// applies to the live state.
    fn associate_candidate(&self, pl_eff: &[f64], n_aps: usize, n_nodes: usize) -> Vec<Option<usize>> {
        let s = self.s;
        let const_ap = s.tx_power_dbm + self.g_ue_db + self.g_ap_db;
        let const_uav = s.tx_power_dbm + self.g_ue_db + self.g_uav_db;
        let n_ues = self.ues.len();
        let mut assoc: Vec<Option<usize>> = vec![None; n_ues];
        for i in 0..n_ues {
            let row = i * n_nodes;
            let mut best = f64::NEG_INFINITY;
            let mut best_n = 0usize;
            for n in 0..n_nodes {
                let c = if n < n_aps { const_ap } else { const_uav };
                let p = c - pl_eff[row + n];
                if p > best {
                    best = p;
                    best_n = n;
                }
            }
            if best - self.noise_dbm >= s.sinr_floor_db {
                assoc[i] = Some(best_n);
            }
        }
        assoc
    }

    #[cfg(test)]
    pub(crate) fn candidate_assoc(&self, candidate: &[f64]) -> Vec<Option<usize>> {
        let uav_pos: Vec<Position> = candidate
            .chunks_exact(2)
            .map(|c| Position::new(c[0], c[1], self.s.uav_altitude_m))
            .collect();
        let n_nodes = self.ap_positions.len() + uav_pos.len();
        let (_, pl_eff) = self.tables(&uav_pos);
        self.associate_candidate(&pl_eff, self.ap_positions.len(), n_nodes)
    }

    /// Scores one candidate (x1, y1, x2, y2, ...) under the given regime.
    pub fn evaluate(&self, candidate: &[f64], mode: Mode) -> f64 {
        let s = self.s;
        let n_ues = self.ues.len();
        let n_aps = self.ap_positions.len();
        let n_uavs = candidate.len() / 2;
        let n_nodes = n_aps + n_uavs;

        let uav_pos: Vec<Position> = (0..n_uavs)
            .map(|u| Position::new(candidate[2 * u], candidate[2 * u + 1], s.uav_altitude_m))
            .collect();
        let (geom, pl_eff) = self.tables(&uav_pos);
        let assoc = self.associate_candidate(&pl_eff, n_aps, n_nodes);

        let nodes: Vec<channel::NodeGeom> = self
            .ap_positions
            .iter()
            .map(|&pos| channel::NodeGeom { pos, array: s.access_array_ap })
            .chain(uav_pos.iter().map(|&pos| channel::NodeGeom { pos, array: s.access_array_uav }))
            .collect();
        let interference = channel::interference_mw_per_ue(s, &nodes, &assoc, &geom, &pl_eff);

        let const_ap = s.tx_power_dbm + self.g_ue_db + self.g_ap_db;
        let const_uav = s.tx_power_dbm + self.g_ue_db + self.g_uav_db;
        let mut rate = vec![0.0f64; n_ues];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for i in 0..n_ues {
            if let Some(n) = assoc[i] {
                let c = if n < n_aps { const_ap } else { const_uav };
                let p_mw = channel::dbm_to_mw(c - pl_eff[i * n_nodes + n]);
                rate[i] = channel::rate_from_sinr(p_mw / (self.noise_mw + interference[i]), s);
                members[n].push(i);
            }
        }

        let mut delivered = vec![0.0f64; n_ues];
        for (n, cell_members) in members.into_iter().enumerate() {
            if cell_members.is_empty() {
                continue;
            }
            let rates: Vec<f64> = cell_members.iter().map(|&i| rate[i]).collect();
            let alloc = access::cell_allocation(n, cell_members, rates, s.alpha);
            let c_bh = if n >= n_aps && mode == Mode::BackhaulAware {
                channel::backhaul_link(uav_pos[n - n_aps], self.ap_positions, s).1.rate_bps
            } else {
                f64::INFINITY
            };
            let alloc = access::apply_backhaul_cap(alloc, c_bh).expect("c_bh >= 0");
            for (k, &i) in alloc.members.iter().enumerate() {
                delivered[i] = alloc.delivered_rate_bps[k];
            }
        }

        delivered
            .iter()
            .map(|&y| u_alpha(y.max(UTILITY_FLOOR_BPS), s.alpha))
            .sum()
    }
}

/// Spec'd single-shot fitness: build the context and evaluate once.
pub fn placement_fitness(candidate: &[f64], snapshot: &NetworkState, mode: Mode, s: &Scenario) -> f64 {
    FitnessContext::new(snapshot, s).evaluate(candidate, mode)
}

/// Outcome of one PSO run: best position, its fitness (the maximum ever
/// evaluated), and the global-best trace, one entry after initialization
/// plus one per iteration.
#[derive(Debug, Clone)]
pub struct PsoResult {
    pub position: Vec<f64>,
    pub fitness: f64,
    pub trace: Vec<f64>,
}

fn eval_all<F: Fn(&[f64]) -> f64 + Sync>(fitness: &F, xs: &[Vec<f64>]) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        xs.par_iter().map(|x| fitness(x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().map(|x| fitness(x)).collect()
    }
}

/// Synchronous global-best PSO, maximizing. Initial positions are uniform
/// in bounds, except that `injected` candidates (clamped) replace the
/// first particles; initial velocities are zero. Per iteration every
/// particle draws u1, u2 per dimension, then all fitnesses are evaluated
/// and personal/global bests updated in particle order (ties keep the
/// earlier particle). Velocities are clamped per dimension to
/// velocity_clamp_frac times the span, positions to the bounds.
pub fn pso_optimize<F, R>(
    fitness: F,
    bounds: &[(f64, f64)],
    p: &PsoParams,
    injected: &[Vec<f64>],
    rng: &mut R,
) -> PsoResult
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng,
{
    let dims = bounds.len();
    assert!(p.swarm_size >= 2, "swarm_size must be >= 2");
    assert!(dims > 0, "bounds must be non-empty");

    let vmax: Vec<f64> = bounds.iter().map(|(lo, hi)| p.velocity_clamp_frac * (hi - lo)).collect();
    let mut x: Vec<Vec<f64>> = (0..p.swarm_size)
        .map(|k| match injected.get(k) {
            Some(seeded) => {
                debug_assert_eq!(seeded.len(), dims);
                seeded
                    .iter()
                    .zip(bounds)
                    .map(|(&c, &(lo, hi))| c.clamp(lo, hi))
                    .collect()
            }
            None => bounds
                .iter()
                .map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect(),
        })
        .collect();
    let mut v = vec![vec![0.0f64; dims]; p.swarm_size];

    let fit = eval_all(&fitness, &x);
    let mut pbest = x.clone();
    let mut pbest_fit = fit;
    let mut gbest_idx = 0usize;
    for k in 1..p.swarm_size {
        if pbest_fit[k] > pbest_fit[gbest_idx] {
            gbest_idx = k;
        }
    }
    let mut gbest = pbest[gbest_idx].clone();
    let mut gbest_fit = pbest_fit[gbest_idx];
    let mut trace = Vec::with_capacity(p.iterations + 1);
    trace.push(gbest_fit);

    for _ in 0..p.iterations {
        for k in 0..p.swarm_size {
            for d in 0..dims {
                let u1 = rng.random::<f64>();
                let u2 = rng.random::<f64>();
                let vel = p.inertia_w * v[k][d]
                    + p.cognitive_c1 * u1 * (pbest[k][d] - x[k][d])
                    + p.social_c2 * u2 * (gbest[d] - x[k][d]);
                v[k][d] = vel.clamp(-vmax[d], vmax[d]);
                x[k][d] = (x[k][d] + v[k][d]).clamp(bounds[d].0, bounds[d].1);
            }
        }
        let fit = eval_all(&fitness, &x);
        for k in 0..p.swarm_size {
            if fit[k] > pbest_fit[k] {
                pbest_fit[k] = fit[k];
                pbest[k].clone_from(&x[k]);
            }
        }
        for k in 0..p.swarm_size {
            if pbest_fit[k] > gbest_fit {
                gbest_fit = pbest_fit[k];
                gbest.clone_from(&pbest[k]);
            }
        }
        trace.push(gbest_fit);
    }

    PsoResult { position: gbest, fitness: gbest_fit, trace }
}

/// Planned per-UAV targets plus the PSO trace (empty for the grid strategy).
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub targets: Vec<(f64, f64)>,
    pub trace: Vec<f64>,
}

/// Greedy nearest-neighbor assignment: repeatedly match the closest free
/// (UAV, target) pair. Ties break on the lower UAV id, then target id.
fn match_targets(uavs: &[Position], raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = raw.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (u, up) in uavs.iter().enumerate() {
        for (t, &(tx, ty)) in raw.iter().enumerate() {
            let d = (up.x - tx).hypot(up.y - ty);
            pairs.push((d, u, t));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![(0.0, 0.0); n];
    let mut u_done = vec![false; n];
    let mut t_done = vec![false; n];
    let mut assigned = 0;
    for (_, u, t) in pairs {
        if !u_done[u] && !t_done[t] {
            out[u] = raw[t];
            u_done[u] = true;
            t_done[t] = true;
            assigned += 1;
            if assigned == n {
                break;
            }
        }
    }
    out
}

/// Plans per-UAV targets for the coming interval: constant grid cells for
/// the grid strategy, or a PSO search warm-started with the incumbent UAV
/// positions. Targets are matched to UAVs to minimize travel.
pub fn plan_targets<R: Rng>(
    state: &NetworkState,
    mode: Mode,
    strategy: Placement,
    s: &Scenario,
    rng: &mut R,
) -> PlanOutcome {
    let (raw, trace) = match strategy {
        Placement::Grid => (grid_positions(s.n_uavs, s.area_width_m, s.area_height_m), Vec::new()),
        Placement::Pso => {
            let ctx = FitnessContext::new(state, s);
            let bounds: Vec<(f64, f64)> = (0..s.n_uavs)
                .flat_map(|_| [(0.0, s.area_width_m), (0.0, s.area_height_m)])
                .collect();
            let incumbent: Vec<f64> =
                state.uavs.iter().flat_map(|u| [u.pos.x, u.pos.y]).collect();
            let r = pso_optimize(|c| ctx.evaluate(c, mode), &bounds, &s.pso, &[incumbent], rng);
            let targets = r.position.chunks_exact(2).map(|c| (c[0], c[1])).collect();
            (targets, r.trace)
        }
    };
    let uav_pos: Vec<Position> = state.uavs.iter().map(|u| u.pos).collect();
    PlanOutcome { targets: match_targets(&uav_pos, &raw), trace }
}
