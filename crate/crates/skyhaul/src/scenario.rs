//! Experiment configuration: every geometry, radio, traffic, timing, and
//! optimizer parameter in one validated struct. An empty document loads the
//! reference setup (600 m x 600 m area, 4 APs, 2 UAVs, 100 clustered UEs,
//! 73 GHz / 0.56 GHz channel, 24 dBm transmitters, 500 Mb/s offered per UE).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planar antenna array, element counts per plane, serialized as `[az, el]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct ArrayDims {
    pub n_az: u32,
    pub n_el: u32,
}

impl ArrayDims {
    pub const fn new(n_az: u32, n_el: u32) -> Self {
        Self { n_az, n_el }
    }
}

impl From<[u32; 2]> for ArrayDims {
    fn from(v: [u32; 2]) -> Self {
        Self { n_az: v[0], n_el: v[1] }
    }
}

impl From<ArrayDims> for [u32; 2] {
    fn from(a: ArrayDims) -> Self {
        [a.n_az, a.n_el]
    }
}

/// Where the finite backhaul rate is honored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Infinite backhaul in both the simulation and the placement fitness.
    #[serde(rename = "ideal")]
    Ideal,
    /// Finite backhaul in the simulation; the optimizer assumes infinite.
    #[serde(rename = "bh-unaware")]
    BackhaulUnaware,
    /// Finite backhaul in the simulation and in the placement fitness.
    #[serde(rename = "bh-aware")]
    BackhaulAware,
}

/// UAV placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Pso,
    Grid,
}

/// Particle swarm optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia_w: f64,
    pub cognitive_c1: f64,
    pub social_c2: f64,
    /// Per-dimension velocity cap as a fraction of that dimension's span.
    pub velocity_clamp_frac: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            iterations: 50,
            inertia_w: 0.7,
            cognitive_c1: 1.5,
            social_c2: 1.5,
            velocity_clamp_frac: 0.2,
        }
    }
}

/// Full experiment configuration. All fields have defaults, so any subset can
/// be given in the scenario document; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub n_aps: usize,
    pub n_uavs: usize,
    pub n_ues: usize,
    pub n_clusters: usize,
    pub cluster_radius_m: f64,
    pub uav_altitude_m: f64,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    /// All transmitters run at full power; there is no power control.
    pub tx_power_dbm: f64,
    pub offered_rate_bps: f64,
    /// Queue granularity for reporting only; accounting is per byte.
    pub packet_size_bytes: u64,
    /// Fairness exponent of the scheduler utility (>= 1).
    pub alpha: f64,
    pub access_array_ap: ArrayDims,
    pub access_array_uav: ArrayDims,
    pub access_array_ue: ArrayDims,
    pub backhaul_array_ap: ArrayDims,
    pub backhaul_array_uav: ArrayDims,
    pub noise_figure_db: f64,
    /// Spectral-efficiency cap, bit/s/Hz.
    pub se_cap: f64,
    /// Links whose SINR falls below this are out of coverage.
    pub sinr_floor_db: f64,
    pub mode: Mode,
    pub placement: Placement,
    pub seed: u64,
    pub n_seeds: usize,
    pub slot_s: f64,
    pub reopt_interval_s: f64,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub uav_speed_mps: f64,
    pub ue_speed_mps: f64,
    pub buffer_capacity_bytes: u64,
    pub pso: PsoParams,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            area_width_m: 600.0,
            area_height_m: 600.0,
            n_aps: 4,
            n_uavs: 2,
            n_ues: 100,
            n_clusters: 4,
            cluster_radius_m: 50.0,
            uav_altitude_m: 20.0,
            ap_height_m: 20.0,
            ue_height_m: 1.5,
            carrier_ghz: 73.0,
            bandwidth_hz: 0.56e9,
            tx_power_dbm: 24.0,
            offered_rate_bps: 500e6,
            packet_size_bytes: 1000,
            alpha: 2.0,
            access_array_ap: ArrayDims::new(8, 8),
            access_array_uav: ArrayDims::new(8, 8),
            access_array_ue: ArrayDims::new(8, 8),
            backhaul_array_ap: ArrayDims::new(8, 8),
            backhaul_array_uav: ArrayDims::new(4, 4),
            noise_figure_db: 7.0,
            se_cap: 7.8,
            sinr_floor_db: -10.0,
            mode: Mode::Ideal,
            placement: Placement::Pso,
            seed: 0,
            n_seeds: 200,
            slot_s: 0.1,
            reopt_interval_s: 1.0,
            duration_s: 60.0,
            warmup_s: 5.0,
            uav_speed_mps: 10.0,
            ue_speed_mps: 1.4,
            buffer_capacity_bytes: 16_000_000,
            pso: PsoParams::default(),
        }
    }
}

impl Scenario {
    pub fn n_nodes(&self) -> usize {
        self.n_aps + self.n_uavs
    }

    pub fn n_slots(&self) -> usize {
        (self.duration_s / self.slot_s).round() as usize
    }

    pub fn warmup_slots(&self) -> usize {
        (self.warmup_s / self.slot_s).round() as usize
    }

    pub fn reopt_slots(&self) -> usize {
        (self.reopt_interval_s / self.slot_s).round() as usize
    }

    /// Thermal noise floor in dBm over the full bandwidth, noise figure
    /// included: -174 + 10*log10(B) + NF.
    pub fn noise_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    /// Bytes each UE sources per slot (floor of offered_rate_bps * slot_s / 8).
    pub fn offered_bytes_per_slot(&self) -> u64 {
        (self.offered_rate_bps * self.slot_s / 8.0).floor() as u64
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Parses a JSON scenario document, fills omitted keys with defaults, and
/// validates. Unknown keys and type mismatches are parse errors.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_str(text)?;
    let violations = validate_scenario(&s);
    if violations.is_empty() {
        Ok(s)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

/// Checks every Scenario invariant; returns one message per violation
/// (empty means ok). Violations are data, not failures.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut v = Vec::new();
    let mut req = |ok: bool, msg: String| {
        if !ok {
            v.push(msg);
        }
    };

    for (name, n) in [
        ("n_aps", s.n_aps),
        ("n_uavs", s.n_uavs),
        ("n_ues", s.n_ues),
        ("n_clusters", s.n_clusters),
        ("n_seeds", s.n_seeds),
    ] {
        req(n >= 1, format!("{name} must be >= 1 (got {n})"));
    }
    req(
        s.n_clusters <= s.n_ues,
        format!("n_clusters <= n_ues violated ({} > {})", s.n_clusters, s.n_ues),
    );

    for (name, x) in [
        ("area_width_m", s.area_width_m),
        ("area_height_m", s.area_height_m),
        ("cluster_radius_m", s.cluster_radius_m),
        ("uav_altitude_m", s.uav_altitude_m),
        ("ap_height_m", s.ap_height_m),
        ("ue_height_m", s.ue_height_m),
        ("carrier_ghz", s.carrier_ghz),
        ("bandwidth_hz", s.bandwidth_hz),
        ("offered_rate_bps", s.offered_rate_bps),
        ("se_cap", s.se_cap),
        ("uav_speed_mps", s.uav_speed_mps),
        ("ue_speed_mps", s.ue_speed_mps),
        ("slot_s", s.slot_s),
        ("reopt_interval_s", s.reopt_interval_s),
        ("duration_s", s.duration_s),
    ] {
        req(x > 0.0 && x.is_finite(), format!("{name} must be > 0 (got {x})"));
    }
    req(
        s.packet_size_bytes >= 1,
        format!("packet_size_bytes must be >= 1 (got {})", s.packet_size_bytes),
    );
    req(
        s.buffer_capacity_bytes >= 1,
        format!("buffer_capacity_bytes must be >= 1 (got {})", s.buffer_capacity_bytes),
    );

    req(
        s.warmup_s >= 0.0 && s.warmup_s < s.duration_s,
        format!("warmup_s < duration_s violated ({} >= {})", s.warmup_s, s.duration_s),
    );
    req(
        s.slot_s <= s.reopt_interval_s,
        format!("slot_s <= reopt_interval_s violated ({} > {})", s.slot_s, s.reopt_interval_s),
    );
    let k = (s.reopt_interval_s / s.slot_s).round();
    req(
        k >= 1.0 && (s.reopt_interval_s - k * s.slot_s).abs() <= 1e-9 * s.reopt_interval_s.max(1.0),
        format!(
            "reopt_interval_s must be an integer multiple of slot_s ({} / {})",
            s.reopt_interval_s, s.slot_s
        ),
    );
    req(s.alpha >= 1.0, format!("alpha >= 1 violated (got {})", s.alpha));

    for (name, a) in [
        ("access_array_ap", s.access_array_ap),
        ("access_array_uav", s.access_array_uav),
        ("access_array_ue", s.access_array_ue),
        ("backhaul_array_ap", s.backhaul_array_ap),
        ("backhaul_array_uav", s.backhaul_array_uav),
    ] {
        req(
            a.n_az >= 1 && a.n_el >= 1,
            format!("{name} element counts must be >= 1 (got {}x{})", a.n_az, a.n_el),
        );
    }

    let p = &s.pso;
    req(p.swarm_size >= 2, format!("pso.swarm_size must be >= 2 (got {})", p.swarm_size));
    req(p.iterations >= 1, format!("pso.iterations must be >= 1 (got {})", p.iterations));
    req(
        p.inertia_w > 0.0 && p.inertia_w < 1.0,
        format!("pso.inertia_w must be in (0,1) (got {})", p.inertia_w),
    );
    req(p.cognitive_c1 > 0.0, format!("pso.cognitive_c1 must be > 0 (got {})", p.cognitive_c1));
    req(p.social_c2 > 0.0, format!("pso.social_c2 must be > 0 (got {})", p.social_c2));
    req(
        p.velocity_clamp_frac > 0.0 && p.velocity_clamp_frac <= 1.0,
        format!("pso.velocity_clamp_frac must be in (0,1] (got {})", p.velocity_clamp_frac),
    );

    v
}
