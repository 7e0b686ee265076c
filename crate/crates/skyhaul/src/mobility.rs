//! Group mobility for clustered UEs and fixed-altitude UAV kinematics.
//!
//! UEs move as clusters: each cluster has a leader doing random-waypoint
//! motion inside the area inset by the cluster radius, and members hold
//! rigid offsets (uniform in the disc) from the leader, re-drawn whenever
//! the leader reaches a waypoint. UAVs fly straight toward their assigned
//! targets at fixed speed and altitude.

use crate::scenario::Scenario;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One UE cluster: leader kinematics plus member offsets. Member k of
/// group g is UE id `k * n_clusters + g` (round-robin assignment).
#[derive(Debug, Clone)]
pub struct GroupState {
    pub leader_pos: Position,
    pub leader_waypoint: (f64, f64),
    pub member_offsets: Vec<(f64, f64)>,
}

impl GroupState {
    pub fn member_count(&self) -> usize {
        self.member_offsets.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UavState {
    pub pos: Position,
    pub target: Position,
}

fn uniform_in(lo: f64, hi: f64, rng: &mut impl Rng) -> f64 {
    if hi <= lo {
        // Degenerate inset (radius over half the side): collapse to center.
        return (lo + hi) / 2.0;
    }
    lo + rng.random::<f64>() * (hi - lo)
}

/// Uniform point in the area inset by the cluster radius, so any member
/// offset stays inside the box.
fn draw_waypoint(s: &Scenario, rng: &mut impl Rng) -> (f64, f64) {
    let r = s.cluster_radius_m;
    let x = uniform_in(r, s.area_width_m - r, rng);
    let y = uniform_in(r, s.area_height_m - r, rng);
    (x, y)
}

/// Uniform point in the disc of radius `r` (sqrt trick).
fn draw_offset(r: f64, rng: &mut impl Rng) -> (f64, f64) {
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let rho = r * rng.random::<f64>().sqrt();
    (rho * theta.cos(), rho * theta.sin())
}

fn clamp_to_area(p: Position, s: &Scenario) -> Position {
    Position {
        x: p.x.clamp(0.0, s.area_width_m),
        y: p.y.clamp(0.0, s.area_height_m),
        z: p.z,
    }
}

/// Positions of all UEs in UE-id order, derived from group states.
pub fn ue_positions(groups: &[GroupState], s: &Scenario) -> Vec<Position> {
    let k = groups.len();
    (0..s.n_ues)
        .map(|i| {
            let g = &groups[i % k];
            let (ox, oy) = g.member_offsets[i / k];
            clamp_to_area(
                Position::new(g.leader_pos.x + ox, g.leader_pos.y + oy, s.ue_height_m),
                s,
            )
        })
        .collect()
}

/// Draws leaders uniformly in the inset area, assigns UEs round-robin
/// (cluster sizes differ by at most one), and draws each member offset
/// uniformly in the disc. Consumes `rng` in the order: leader positions,
/// leader waypoints, member offsets by UE id.
pub fn init_clusters(s: &Scenario, rng: &mut impl Rng) -> (Vec<GroupState>, Vec<Position>) {
    let k = s.n_clusters;
    let mut groups: Vec<GroupState> = (0..k)
        .map(|_| {
            let (x, y) = draw_waypoint(s, rng);
            GroupState {
                leader_pos: Position::new(x, y, s.ue_height_m),
                leader_waypoint: (0.0, 0.0),
                member_offsets: Vec::new(),
            }
        })
        .collect();
    for g in groups.iter_mut() {
        g.leader_waypoint = draw_waypoint(s, rng);
    }
    for i in 0..s.n_ues {
        let r = draw_offset(s.cluster_radius_m, rng);
        groups[i % k].member_offsets.push(r);
    }
    let ues = ue_positions(&groups, s);
    (groups, ues)
}

/// Advances every leader toward its waypoint at the UE speed; a leader
/// arriving within one step length lands on the waypoint, draws a fresh
/// waypoint, and re-draws its members' offsets. Returns UE positions after
/// the step. `dt <= 0` is the identity.
pub fn step_groups(
    groups: &mut [GroupState],
    dt: f64,
    s: &Scenario,
    rng: &mut impl Rng,
) -> Vec<Position> {
    if dt > 0.0 {
        let step = s.ue_speed_mps * dt;
        for g in groups.iter_mut() {
            let (wx, wy) = g.leader_waypoint;
            let dx = wx - g.leader_pos.x;
            let dy = wy - g.leader_pos.y;
            let dist = dx.hypot(dy);
            if dist <= step {
                g.leader_pos.x = wx;
                g.leader_pos.y = wy;
                g.leader_waypoint = draw_waypoint(s, rng);
                for off in g.member_offsets.iter_mut() {
                    *off = draw_offset(s.cluster_radius_m, rng);
                }
            } else {
                g.leader_pos.x += step * dx / dist;
                g.leader_pos.y += step * dy / dist;
            }
        }
    }
    ue_positions(groups, s)
}

/// Moves a UAV straight toward its target, capped at `speed * dt`, never
/// overshooting; altitude is untouched.
pub fn step_uav(u: &UavState, dt: f64, speed: f64) -> UavState {
    let dx = u.target.x - u.pos.x;
    let dy = u.target.y - u.pos.y;
    let dist = dx.hypot(dy);
    let step = speed * dt;
    let pos = if dist <= step {
        Position::new(u.target.x, u.target.y, u.pos.z)
    } else {
        Position::new(u.pos.x + step * dx / dist, u.pos.y + step * dy / dist, u.pos.z)
    };
    UavState { pos, target: u.target }
}
