//! mmWave link modeling: LOS state, urban-micro path loss, flat-top planar
//! array gains, interference aggregation, SINR, and achievable rate.
//!
//! Conventions used throughout:
//!
//! * LOS probability: p = 1 for d2d <= 18 m, else
//!   p = (18/d2d)(1 - e^(-d2d/36)) + e^(-d2d/36).
//! * Path loss (dB, d3d clamped to >= 1 m, fc in GHz):
//!   LOS  32.4 + 21 log10(d3d) + 20 log10(fc);
//!   NLOS max(LOS, 35.3 log10(d3d) + 22.4 + 21.3 log10(fc) - 0.3 (h_ut - 1.5)).
//! * Antenna pattern: flat-top, HPBW = 102/n degrees per plane, main lobe
//!   10 log10(n_az * n_el) dBi, sidelobe = main - 20 dB.
//! * Rate: bandwidth * min(log2(1 + SINR), se_cap), zero below sinr_floor.
//! * Access and backhaul live on disjoint channels, so neither interferes
//!   with the other; backhaul (UAV-AP) links are LOS-forced and mutually
//!   interference-free.
//!
//! The interference hot path avoids trigonometry: beam membership per plane
//! is tested as a dot product of unit direction vectors against the cosine
//! of the half-beamwidth, which is equivalent to comparing angles.

use crate::engine::NetworkState;
use crate::mobility::Position;
use crate::scenario::{ArrayDims, Scenario};
use rand::Rng;

const LN10_OVER_10: f64 = core::f64::consts::LN_10 / 10.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    (dbm * LN10_OVER_10).exp()
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Probability that a link of horizontal length `d2d_m` is line-of-sight.
/// Monotone nonincreasing, 1 up to 18 m.
pub fn los_probability(d2d_m: f64) -> f64 {
    if d2d_m <= 18.0 {
        1.0
    } else {
        let e = (-d2d_m / 36.0).exp();
        (18.0 / d2d_m) * (1.0 - e) + e
    }
}

/// Path loss in dB at 3D distance `d3d_m` (clamped to 1 m) and carrier
/// `fc_ghz`. `h_ut_m` is the terminal height, used by the NLOS branch only.
pub fn path_loss_db(d3d_m: f64, fc_ghz: f64, los: bool, h_ut_m: f64) -> f64 {
    let d = d3d_m.max(1.0);
    let pl_los = 32.4 + 21.0 * d.log10() + 20.0 * fc_ghz.log10();
    if los {
        pl_los
    } else {
        let pl_nlos =
            35.3 * d.log10() + 22.4 + 21.3 * fc_ghz.log10() - 0.3 * (h_ut_m - 1.5);
        pl_nlos.max(pl_los)
    }
}

/// LOS-probability-weighted path loss in dB; the expectation used by
/// association and placement fitness (no random draw).
pub fn expected_path_loss_db(d2d_m: f64, d3d_m: f64, fc_ghz: f64, h_ut_m: f64) -> f64 {
    let p = los_probability(d2d_m);
    let pl_los = path_loss_db(d3d_m, fc_ghz, true, h_ut_m);
    if p >= 1.0 {
        pl_los
    } else {
        p * pl_los + (1.0 - p) * path_loss_db(d3d_m, fc_ghz, false, h_ut_m)
    }
}

pub fn peak_gain_db(a: ArrayDims) -> f64 {
    10.0 * ((a.n_az * a.n_el) as f64).log10()
}

/// Half-power beamwidth of one plane with `n` elements, degrees.
pub fn hpbw_deg(n: u32) -> f64 {
    102.0 / n as f64
}

/// Flat-top pattern gain at the given off-boresight angles (degrees).
pub fn antenna_gain_db(a: ArrayDims, off_az_deg: f64, off_el_deg: f64) -> f64 {
    let main = peak_gain_db(a);
    if off_az_deg.abs() <= hpbw_deg(a.n_az) / 2.0 && off_el_deg.abs() <= hpbw_deg(a.n_el) / 2.0 {
        main
    } else {
        main - 20.0
    }
}

/// Cosines of the half-beamwidths, the dot-product thresholds equivalent to
/// the angular main-lobe test.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BeamCos {
    pub az: f64,
    pub el: f64,
}

impl BeamCos {
    pub fn of(a: ArrayDims) -> Self {
        Self {
            az: (hpbw_deg(a.n_az) / 2.0).to_radians().cos(),
            el: (hpbw_deg(a.n_el) / 2.0).to_radians().cos(),
        }
    }
}

/// Everything geometric about one UE-node pair. `ux, uy` is the horizontal
/// unit vector UE -> node (x-axis fallback when the pair is vertically
/// stacked); `cos_el`/`sin_el` describe the elevation seen from the UE.
/// The node-side view needs no extra fields: both horizontal vectors flip
/// sign and elevations negate, which leaves every same-endpoint dot product
/// unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PairGeom {
    pub d2d: f64,
    pub d3d: f64,
    pub p_los: f64,
    pub pl_los_db: f64,
    pub pl_nlos_db: f64,
    pub ux: f64,
    pub uy: f64,
    pub cos_el: f64,
    pub sin_el: f64,
}

impl PairGeom {
    pub fn new(ue: Position, node: Position, fc_ghz: f64) -> Self {
        let dx = node.x - ue.x;
        let dy = node.y - ue.y;
        let dz = node.z - ue.z;
        let d2d = (dx * dx + dy * dy).sqrt();
        let d3d = (d2d * d2d + dz * dz).sqrt();
        let h_ut = ue.z.min(node.z);
        let (ux, uy) = if d2d > 0.0 { (dx / d2d, dy / d2d) } else { (1.0, 0.0) };
        let (cos_el, sin_el) = if d3d > 0.0 { (d2d / d3d, dz / d3d) } else { (1.0, 0.0) };
        Self {
            d2d,
            d3d,
            p_los: los_probability(d2d),
            pl_los_db: path_loss_db(d3d, fc_ghz, true, h_ut),
            pl_nlos_db: path_loss_db(d3d, fc_ghz, false, h_ut),
            ux,
            uy,
            cos_el,
            sin_el,
        }
    }

    pub fn expected_pl_db(&self) -> f64 {
        self.p_los * self.pl_los_db + (1.0 - self.p_los) * self.pl_nlos_db
    }

    /// True when the direction of `other` lies inside the main lobe of a
    /// beam from the shared endpoint aimed along `self`.
    #[inline]
    pub fn within_beam(&self, other: &PairGeom, cos: BeamCos) -> bool {
        self.ux * other.ux + self.uy * other.uy >= cos.az
            && self.cos_el * other.cos_el + self.sin_el * other.sin_el >= cos.el
    }
}

/// Expected received power in dBm with boresight-aligned beams; the
/// association metric.
pub fn expected_rx_power_dbm(
    tx_pos: Position,
    rx_pos: Position,
    tx_arr: ArrayDims,
    rx_arr: ArrayDims,
    s: &Scenario,
) -> f64 {
    let g = PairGeom::new(tx_pos, rx_pos, s.carrier_ghz);
    s.tx_power_dbm + peak_gain_db(tx_arr) + peak_gain_db(rx_arr) - g.expected_pl_db()
}

/// Fully derived quantities of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub d2d_m: f64,
    pub d3d_m: f64,
    pub los: bool,
    pub p_los: f64,
    pub pl_db: f64,
    pub g_tx_db: f64,
    pub g_rx_db: f64,
    pub interference_mw: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
}

#[inline]
pub(crate) fn rate_from_sinr(sinr_linear: f64, s: &Scenario) -> f64 {
    let sinr_db = 10.0 * sinr_linear.log10();
    if sinr_db < s.sinr_floor_db {
        0.0
    } else {
        s.bandwidth_hz * (1.0 + sinr_linear).log2().min(s.se_cap)
    }
}

/// Evaluates one link with boresight-aligned beams (main-lobe gains both
/// ends). `force_los` pins the LOS state (backhaul links); otherwise
/// `los_draw` supplies the slot's Bernoulli outcome for this link.
#[allow(clippy::too_many_arguments)]
pub fn link_rate(
    tx_pos: Position,
    rx_pos: Position,
    tx_arr: ArrayDims,
    rx_arr: ArrayDims,
    s: &Scenario,
    interference_mw: f64,
    force_los: bool,
    los_draw: bool,
) -> LinkBudget {
    let g = PairGeom::new(tx_pos, rx_pos, s.carrier_ghz);
    let (los, p_los) = if force_los { (true, 1.0) } else { (los_draw, g.p_los) };
    let pl_db = if los { g.pl_los_db } else { g.pl_nlos_db };
    let g_tx_db = peak_gain_db(tx_arr);
    let g_rx_db = peak_gain_db(rx_arr);
    let p_rx_dbm = s.tx_power_dbm + g_tx_db + g_rx_db - pl_db;
    let sinr_linear = dbm_to_mw(p_rx_dbm) / (dbm_to_mw(s.noise_dbm()) + interference_mw);
    LinkBudget {
        d2d_m: g.d2d,
        d3d_m: g.d3d,
        los,
        p_los,
        pl_db,
        g_tx_db,
        g_rx_db,
        interference_mw,
        sinr_db: 10.0 * sinr_linear.log10(),
        rate_bps: rate_from_sinr(sinr_linear, s),
    }
}

/// Access-side description of one serving node (AP or UAV).
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeGeom {
    pub pos: Position,
    pub array: ArrayDims,
}

pub(crate) fn access_nodes(state: &NetworkState, s: &Scenario) -> Vec<NodeGeom> {
    let mut nodes = Vec::with_capacity(s.n_nodes());
    for &pos in &state.ap_positions {
        nodes.push(NodeGeom { pos, array: s.access_array_ap });
    }
    for uav in &state.uavs {
        nodes.push(NodeGeom { pos: uav.pos, array: s.access_array_uav });
    }
    nodes
}

/// Uplink co-channel interference at each UE's serving node, mW.
///
/// For victim UE i served by node n: every other cell c contributes
/// (1/|c|) * sum over members j of c of the power received at n from j,
/// with j's beam aimed at j's own server and n's beam aimed at i (sidelobe
/// gain, -20 dB, outside the main lobes). The 1/|c| weight is the
/// round-robin TDM average; every attached member counts toward |c|.
/// `geom` and `pl_db` are per-pair tables, row-major `[ue * n_nodes + node]`,
/// drawn or expected depending on the caller.
pub(crate) fn interference_mw_per_ue(
    s: &Scenario,
    nodes: &[NodeGeom],
    assoc: &[Option<usize>],
    geom: &[PairGeom],
    pl_db: &[f64],
) -> Vec<f64> {
    let n_ues = assoc.len();
    let n_nodes = nodes.len();
    debug_assert_eq!(geom.len(), n_ues * n_nodes);

    let mut cell_size = vec![0u32; n_nodes];
    for a in assoc.iter().flatten() {
        cell_size[*a] += 1;
    }

    let ue_cos = BeamCos::of(s.access_array_ue);
    let node_peak: Vec<f64> = nodes.iter().map(|n| peak_gain_db(n.array)).collect();
    let node_cos: Vec<BeamCos> = nodes.iter().map(|n| BeamCos::of(n.array)).collect();
    let g_ue_peak = peak_gain_db(s.access_array_ue);

    // Node-major transposed tables keep the victim scan on contiguous rows.
    // base[n * n_ues + j] is the power node n receives from UE j when j
    // aims at its own server and n listens at main lobe, already weighted
    // by 1/|cell(j)|; zero for unattached j and for j's own server.
    let mut base = vec![0.0f64; n_nodes * n_ues];
    let mut ux = vec![0.0f64; n_nodes * n_ues];
    let mut uy = vec![0.0f64; n_nodes * n_ues];
    let mut ce = vec![0.0f64; n_nodes * n_ues];
    let mut se = vec![0.0f64; n_nodes * n_ues];
    for j in 0..n_ues {
        for n in 0..n_nodes {
            let g = &geom[j * n_nodes + n];
            ux[n * n_ues + j] = g.ux;
            uy[n * n_ues + j] = g.uy;
            ce[n * n_ues + j] = g.cos_el;
            se[n * n_ues + j] = g.sin_el;
        }
        let Some(m) = assoc[j] else { continue };
        let aim = geom[j * n_nodes + m];
        let w = 1.0 / f64::from(cell_size[m]);
        for n in 0..n_nodes {
            if n == m {
                continue;
            }
            let g = &geom[j * n_nodes + n];
            let g_tx = if aim.within_beam(g, ue_cos) { g_ue_peak } else { g_ue_peak - 20.0 };
            let p_dbm = s.tx_power_dbm + g_tx + node_peak[n] - pl_db[j * n_nodes + n];
            base[n * n_ues + j] = w * dbm_to_mw(p_dbm);
        }
    }

    let mut out = vec![0.0f64; n_ues];
    for i in 0..n_ues {
        let Some(n) = assoc[i] else { continue };
        let cos = node_cos[n];
        let row = n * n_ues;
        let (aim_ux, aim_uy) = (ux[row + i], uy[row + i]);
        let (aim_ce, aim_se) = (ce[row + i], se[row + i]);
        let mut acc = 0.0;
        for j in 0..n_ues {
            let caz = ux[row + j] * aim_ux + uy[row + j] * aim_uy;
            let cel = ce[row + j] * aim_ce + se[row + j] * aim_se;
            let f = if caz >= cos.az && cel >= cos.el { 1.0 } else { 0.01 };
            acc += base[row + j] * f;
        }
        out[i] = acc;
    }
    out
}

/// Per-UE serving-link budgets for one slot. LOS is drawn once per
/// (UE, node) pair, consuming `rng` in UE-major, node-minor order, so the
/// same draws cover serving and interfering paths toward each node.
/// Out-of-coverage UEs yield `None`.
pub fn access_rates<R: Rng>(
    state: &NetworkState,
    assoc: &[Option<usize>],
    s: &Scenario,
    rng: &mut R,
) -> Vec<Option<LinkBudget>> {
    let nodes = access_nodes(state, s);
    let n_nodes = nodes.len();
    let n_ues = state.ue_positions.len();

    let mut geom = Vec::with_capacity(n_ues * n_nodes);
    for &ue in &state.ue_positions {
        for node in &nodes {
            geom.push(PairGeom::new(ue, node.pos, s.carrier_ghz));
        }
    }
    let mut los = vec![false; n_ues * n_nodes];
    let mut pl_db = vec![0.0f64; n_ues * n_nodes];
    for k in 0..n_ues * n_nodes {
        los[k] = rng.random::<f64>() < geom[k].p_los;
        pl_db[k] = if los[k] { geom[k].pl_los_db } else { geom[k].pl_nlos_db };
    }

    let interference = interference_mw_per_ue(s, &nodes, assoc, &geom, &pl_db);

    (0..n_ues)
        .map(|i| {
            assoc[i].map(|n| {
                link_rate(
                    state.ue_positions[i],
                    nodes[n].pos,
                    s.access_array_ue,
                    nodes[n].array,
                    s,
                    interference[i],
                    false,
                    los[i * n_nodes + n],
                )
            })
        })
        .collect()
}

/// Backhaul uplink from a UAV to its donor AP: the AP with the strongest
/// LOS-forced link (ties to the lowest AP id). Backhaul links see no
/// interference. Returns the donor AP index and the link budget.
pub fn backhaul_link(uav_pos: Position, ap_positions: &[Position], s: &Scenario) -> (usize, LinkBudget) {
    assert!(!ap_positions.is_empty(), "backhaul needs at least one AP");
    let mut best = 0usize;
    let mut best_pl = f64::INFINITY;
    for (k, &ap) in ap_positions.iter().enumerate() {
        // Equal arrays and powers on every candidate: strongest link is
        // exactly the lowest LOS path loss.
        let pl = PairGeom::new(uav_pos, ap, s.carrier_ghz).pl_los_db;
        if pl < best_pl {
            best_pl = pl;
            best = k;
        }
    }
    let budget = link_rate(
        uav_pos,
        ap_positions[best],
        s.backhaul_array_uav,
        s.backhaul_array_ap,
        s,
        0.0,
        true,
        true,
    );
    (best, budget)
}
