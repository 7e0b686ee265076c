//! Browser bindings: thin JSON-in/JSON-out wrappers around the simulator,
//! compiled to WebAssembly for the demo page in `www/`.
//!
//! All exports take and return JSON strings so the page needs no generated
//! type glue beyond the wasm-bindgen loader itself.

use serde::{Deserialize, Serialize};
use skyhaul::channel::{link_rate, peak_gain_db};
use skyhaul::engine::{run_with_observer, RunObserver, SlotSnapshot};
use skyhaul::mobility::Position;
use skyhaul::scenario::ArrayDims;
use skyhaul::{run_batch, validate_scenario, Mode, NetworkState, Scenario};
use wasm_bindgen::prelude::*;

/// Hard ceiling on animation frames shipped to the page; longer runs are
/// strided down so the payload stays a few hundred kilobytes.
const MAX_FRAMES: usize = 400;

fn parse_scenario(json: &str) -> Result<Scenario, String> {
    let s: Scenario = serde_json::from_str(json).map_err(|e| format!("scenario: {e}"))?;
    let violations = validate_scenario(&s);
    if !violations.is_empty() {
        return Err(violations.join("\n"));
    }
    Ok(s)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Delivered rate in Mbit/s, 3 decimals: compact JSON, ample precision
/// for a pixel chart.
fn mbps3(bps: f64) -> f64 {
    (bps / 1e6 * 1000.0).round() / 1000.0
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct Frame {
    t: f64,
    measured: bool,
    /// UAV positions, then matching targets, both [x, y] pairs.
    uav: Vec<[f64; 2]>,
    tgt: Vec<[f64; 2]>,
    ue: Vec<[f64; 2]>,
    /// Serving node index per UE, -1 when unattached.
    assoc: Vec<i32>,
    /// Delivered throughput per UE, Mbit/s.
    mbps: Vec<f64>,
    /// Backhaul capacity actually honored per UAV, Mbit/s (-1 = infinite).
    bh_mbps: Vec<f64>,
    /// Donor AP index per UAV.
    donor: Vec<u32>,
}

struct FrameCollector {
    frames: Vec<Frame>,
    aps: Vec<[f64; 2]>,
}

impl RunObserver for FrameCollector {
    fn on_slot(&mut self, state: &NetworkState, snap: &SlotSnapshot) {
        if self.aps.is_empty() {
            self.aps = state.ap_positions.iter().map(|p| [round2(p.x), round2(p.y)]).collect();
        }
        let bh_mbps = snap
            .backhaul
            .iter()
            .map(|b| if b.capacity_bps.is_finite() { mbps3(b.capacity_bps) } else { -1.0 })
            .collect();
        let donor = snap.backhaul.iter().map(|b| b.donor_ap as u32).collect();
        self.frames.push(Frame {
            t: round2(snap.t_s),
            measured: snap.measured,
            uav: state.uavs.iter().map(|u| [round2(u.pos.x), round2(u.pos.y)]).collect(),
            tgt: state.uavs.iter().map(|u| [round2(u.target.x), round2(u.target.y)]).collect(),
            ue: state.ue_positions.iter().map(|p| [round2(p.x), round2(p.y)]).collect(),
            assoc: snap.assoc.iter().map(|a| a.map_or(-1, |n| n as i32)).collect(),
            mbps: snap.delivered_bps.iter().map(|&r| mbps3(r)).collect(),
            bh_mbps,
            donor,
        });
    }
}

#[derive(Serialize)]
struct SimulatePayload {
    area: [f64; 2],
    n_aps: usize,
    n_uavs: usize,
    n_ues: usize,
    mode: Mode,
    aps: Vec<[f64; 2]>,
    slot_s: f64,
    frames: Vec<Frame>,
    per_ue_mbps: Vec<f64>,
    mean_mbps: f64,
    jain: f64,
    drop_fraction: f64,
}

fn simulate_impl(scenario_json: &str, seed: u64) -> Result<String, String> {
    let s = parse_scenario(scenario_json)?;
    let mut collector = FrameCollector { frames: Vec::new(), aps: Vec::new() };
    let result = run_with_observer(&s, seed, &mut collector).map_err(|e| e.to_string())?;

    let stride = collector.frames.len().div_ceil(MAX_FRAMES).max(1);
    let last = collector.frames.len().saturating_sub(1);
    let frames: Vec<Frame> = collector
        .frames
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, f)| f)
        .collect();

    let sourced = result.sourced_bytes.max(1) as f64;
    let payload = SimulatePayload {
        area: [s.area_width_m, s.area_height_m],
        n_aps: s.n_aps,
        n_uavs: s.n_uavs,
        n_ues: s.n_ues,
        mode: s.mode,
        aps: collector.aps,
        slot_s: s.slot_s * stride as f64,
        frames,
        per_ue_mbps: result.per_ue_mean_bps.iter().map(|&r| mbps3(r)).collect(),
        mean_mbps: mbps3(result.mean_ue_throughput_bps()),
        jain: result.jain,
        drop_fraction: result.dropped_bytes as f64 / sourced,
    };
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

/// Runs one seed and returns an animation payload: per-slot UAV/UE
/// positions, associations, and delivered rates. `seed` is u32 so the JS
/// side passes a plain number rather than a BigInt.
#[wasm_bindgen]
pub fn simulate(scenario_json: &str, seed: u32) -> Result<String, JsError> {
    simulate_impl(scenario_json, seed as u64).map_err(|e| JsError::new(&e))
}

// ------------------------------------------------------------- link_curves

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkParams {
    #[serde(default = "default_side")]
    node_side: u32,
    #[serde(default = "default_side")]
    ue_side: u32,
    #[serde(default = "default_node_height")]
    node_height_m: f64,
    #[serde(default = "default_max_distance")]
    max_distance_m: f64,
    #[serde(default = "default_points")]
    n_points: usize,
    /// Scenario overrides for carrier, power, bandwidth, noise, caps.
    #[serde(default)]
    scenario: Scenario,
}

fn default_side() -> u32 {
    8
}
fn default_node_height() -> f64 {
    20.0
}
fn default_max_distance() -> f64 {
    600.0
}
fn default_points() -> usize {
    240
}

#[derive(Serialize)]
struct LinkCurves {
    d_m: Vec<f64>,
    p_los: Vec<f64>,
    pl_los_db: Vec<f64>,
    pl_nlos_db: Vec<f64>,
    sinr_los_db: Vec<f64>,
    sinr_nlos_db: Vec<f64>,
    rate_los_mbps: Vec<f64>,
    rate_nlos_mbps: Vec<f64>,
    rate_exp_mbps: Vec<f64>,
    noise_dbm: f64,
    gain_node_db: f64,
    gain_ue_db: f64,
}

fn link_curves_impl(params_json: &str) -> Result<String, String> {
    let p: LinkParams = serde_json::from_str(params_json).map_err(|e| format!("params: {e}"))?;
    if p.n_points < 2 || p.n_points > 5000 {
        return Err(format!("n_points must be in 2..=5000 (got {})", p.n_points));
    }
    if !(p.max_distance_m.is_finite() && p.max_distance_m > 0.0) {
        return Err(format!("max_distance_m must be positive (got {})", p.max_distance_m));
    }
    if p.node_side == 0 || p.ue_side == 0 {
        return Err("array sides must be >= 1".into());
    }
    let s = &p.scenario;
    let node_arr = ArrayDims::new(p.node_side, p.node_side);
    let ue_arr = ArrayDims::new(p.ue_side, p.ue_side);
    let node = Position::new(0.0, 0.0, p.node_height_m);

    let mut out = LinkCurves {
        d_m: Vec::with_capacity(p.n_points),
        p_los: Vec::new(),
        pl_los_db: Vec::new(),
        pl_nlos_db: Vec::new(),
        sinr_los_db: Vec::new(),
        sinr_nlos_db: Vec::new(),
        rate_los_mbps: Vec::new(),
        rate_nlos_mbps: Vec::new(),
        rate_exp_mbps: Vec::new(),
        noise_dbm: s.noise_dbm(),
        gain_node_db: peak_gain_db(node_arr),
        gain_ue_db: peak_gain_db(ue_arr),
    };
    for k in 0..p.n_points {
        let d2d = p.max_distance_m * (k as f64 + 0.5) / p.n_points as f64;
        let ue = Position::new(d2d, 0.0, s.ue_height_m);
        // Uplink orientation (UE transmits) like the access channel.
        let los = link_rate(ue, node, ue_arr, node_arr, s, 0.0, false, true);
        let nlos = link_rate(ue, node, ue_arr, node_arr, s, 0.0, false, false);
        out.d_m.push(round2(d2d));
        out.p_los.push(los.p_los);
        out.pl_los_db.push(los.pl_db);
        out.pl_nlos_db.push(nlos.pl_db);
        out.sinr_los_db.push(los.sinr_db);
        out.sinr_nlos_db.push(nlos.sinr_db);
        out.rate_los_mbps.push(mbps3(los.rate_bps));
        out.rate_nlos_mbps.push(mbps3(nlos.rate_bps));
        out.rate_exp_mbps.push(mbps3(los.p_los * los.rate_bps + (1.0 - los.p_los) * nlos.rate_bps));
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Sweeps UE-to-node distance and returns LOS probability, path loss,
/// SINR, and achievable-rate curves for an interference-free link.
#[wasm_bindgen]
pub fn link_curves(params_json: &str) -> Result<String, JsError> {
    link_curves_impl(params_json).map_err(|e| JsError::new(&e))
}

// ----------------------------------------------------------- compare_modes

#[derive(Serialize)]
struct ModeOutcome {
    mode: Mode,
    mean_mbps: f64,
    jain_mean: f64,
    drop_fraction: f64,
    /// Per-UE delivered-throughput CDF: [Mbit/s, cumulative probability].
    cdf: Vec<[f64; 2]>,
}

fn decimate_cdf(cdf: &[(f64, f64)], max_points: usize) -> Vec<[f64; 2]> {
    let stride = cdf.len().div_ceil(max_points).max(1);
    let last = cdf.len().saturating_sub(1);
    cdf.iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, &(v, p))| [mbps3(v), (p * 1e4).round() / 1e4])
        .collect()
}

fn compare_modes_impl(scenario_json: &str, n_seeds: usize) -> Result<String, String> {
    if n_seeds == 0 || n_seeds > 64 {
        return Err(format!("n_seeds must be in 1..=64 (got {n_seeds})"));
    }
    let base = parse_scenario(scenario_json)?;
    let mut outcomes = Vec::with_capacity(3);
    for mode in [Mode::Ideal, Mode::BackhaulUnaware, Mode::BackhaulAware] {
        let s = Scenario { mode, ..base.clone() };
        let (_, agg) = run_batch(&s, n_seeds).map_err(|e| e.to_string())?;
        outcomes.push(ModeOutcome {
            mode,
            mean_mbps: mbps3(agg.mean_throughput_bps),
            jain_mean: agg.jain_mean,
            drop_fraction: agg.drop_fraction,
            cdf: decimate_cdf(&agg.cdf_per_ue_bps, 250),
        });
    }
    serde_json::to_string(&outcomes).map_err(|e| e.to_string())
}

/// Runs the same seed batch under all three backhaul regimes and returns
/// per-mode summaries plus per-UE throughput CDFs.
#[wasm_bindgen]
pub fn compare_modes(scenario_json: &str, n_seeds: usize) -> Result<String, JsError> {
    compare_modes_impl(scenario_json, n_seeds).map_err(|e| JsError::new(&e))
}

/// The crate's built-in defaults, for seeding the page's scenario editor.
#[wasm_bindgen]
pub fn default_scenario() -> String {
    serde_json::to_string_pretty(&Scenario::default()).expect("scenario serializes")
}
