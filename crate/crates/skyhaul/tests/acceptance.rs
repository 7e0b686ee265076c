//! Release gate: nine numbered end-to-end criteria, one test per criterion.
//! Covers regime ordering, grid-placement tail coincidence, sweep trends,
//! scheduler optimality against an independent numerical maximizer, PSO
//! convergence, link-budget analytics, byte conservation with bitwise
//! determinism, and fairness-index bounds.
//!
//! Each test prints its measured numbers (visible on failure or with
//! --nocapture). The sweep criteria (3 and 4) run hundreds of full
//! simulations and dominate the suite's runtime.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skyhaul::access::alpha_fair_shares;
use skyhaul::channel::{los_probability, path_loss_db};
use skyhaul::engine::jain_index;
use skyhaul::report::{cdf_csv, per_ue_csv, summary_json};
use skyhaul::scenario::PsoParams;
use skyhaul::{Mode, Placement, Scenario};
use std::time::Instant;

fn require(fails: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        fails.push(msg);
    }
}

fn finish(gate: &str, fails: Vec<String>) {
    assert!(fails.is_empty(), "{gate} failed:\n{}", fails.join("\n"));
}

/// Default scenario, 20 seeds, PSO placement: mean delivered throughput must
/// order Ideal > BackhaulAware > BackhaulUnaware with margins of at least 5%
/// (ideal over aware) and 10% (aware over unaware).
#[test]
fn c1_mode_ordering() {
    let t0 = Instant::now();
    let mean_at = |mode: Mode| -> f64 {
        let s = Scenario { mode, ..Scenario::default() };
        skyhaul::run_batch(&s, 20).unwrap().1.mean_throughput_bps
    };
    let ideal = mean_at(Mode::Ideal);
    let aware = mean_at(Mode::BackhaulAware);
    let unaware = mean_at(Mode::BackhaulUnaware);
    let elapsed = t0.elapsed();

    let m1 = 100.0 * (ideal / aware - 1.0);
    let m2 = 100.0 * (aware / unaware - 1.0);
    println!(
        "gate 1: ideal {ideal:.5e}, aware {aware:.5e}, unaware {unaware:.5e} bps; \
         ideal over aware {m1:+.2}% (need >= 5%), aware over unaware {m2:+.2}% (need >= 10%); \
         {elapsed:.1?}"
    );

    let mut fails = Vec::new();
    require(&mut fails, ideal > aware, format!("ordering: ideal {ideal:.5e} <= aware {aware:.5e}"));
    require(
        &mut fails,
        aware > unaware,
        format!("ordering: aware {aware:.5e} <= unaware {unaware:.5e}"),
    );
    require(
        &mut fails,
        ideal >= 1.05 * aware,
        format!("margin: ideal over aware {m1:+.2}% is below 5%"),
    );
    require(
        &mut fails,
        aware >= 1.10 * unaware,
        format!("margin: aware over unaware {m2:+.2}% is below 10%"),
    );
    require(
        &mut fails,
        elapsed.as_secs_f64() < 600.0,
        format!("runtime {elapsed:.1?} exceeds the 10 min budget"),
    );
    finish("gate 1", fails);
}

/// With UAVs pinned to the grid and the same seed, UEs that stay AP-attached
/// all run long must see byte-identical delivered throughput in all three
/// regimes (the backhaul only ever touches UAV traffic).
#[test]
fn c2_grid_tail_coincidence() {
    let mut checked = 0usize;
    for seed in 0..3u64 {
        let run_mode = |mode: Mode| {
            let s =
                Scenario { placement: Placement::Grid, mode, seed, ..Scenario::default() };
            skyhaul::run(&s, seed).unwrap()
        };
        let ideal = run_mode(Mode::Ideal);
        let unaware = run_mode(Mode::BackhaulUnaware);
        let aware = run_mode(Mode::BackhaulAware);

        assert_eq!(ideal.per_ue_ap_only, unaware.per_ue_ap_only, "seed {seed}: AP sets differ");
        assert_eq!(ideal.per_ue_ap_only, aware.per_ue_ap_only, "seed {seed}: AP sets differ");
        for i in 0..ideal.per_ue_mean_bps.len() {
            if !ideal.per_ue_ap_only[i] {
                continue;
            }
            let want = ideal.per_ue_mean_bps[i].to_bits();
            assert_eq!(
                want,
                unaware.per_ue_mean_bps[i].to_bits(),
                "seed {seed} ue {i}: ideal vs unaware"
            );
            assert_eq!(
                want,
                aware.per_ue_mean_bps[i].to_bits(),
                "seed {seed} ue {i}: ideal vs aware"
            );
            checked += 1;
        }
    }
    println!("gate 2: {checked} AP-attached per-UE values byte-equal across the three regimes");
    assert!(checked > 0, "no UE stayed AP-attached in any seed; nothing was compared");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut m = k;
        while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for t in k..=m {
            r[idx[t]] = avg;
        }
        k = m + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx * vy).sqrt()
}

/// Sweeping the UAV count over {1,2,3,5,8} with 4 clusters and 20 seeds:
/// mean throughput trends upward for both strategies (Spearman rho >= 0.9),
/// PSO beats Grid at every point, and the PSO advantage at 1-2 UAVs exceeds
/// the advantage at 8.
#[test]
fn c3_uav_count_trend() {
    let t0 = Instant::now();
    let values = [1usize, 2, 3, 5, 8];
    let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let mean_at = |n_uavs: usize, placement: Placement| -> f64 {
        let s = Scenario { n_uavs, placement, ..Scenario::default() };
        skyhaul::run_batch(&s, 20).unwrap().1.mean_throughput_bps
    };
    let pso: Vec<f64> = values.iter().map(|&v| mean_at(v, Placement::Pso)).collect();
    let grid: Vec<f64> = values.iter().map(|&v| mean_at(v, Placement::Grid)).collect();
    let gaps: Vec<f64> = pso.iter().zip(&grid).map(|(p, g)| p - g).collect();
    let rho_pso = spearman(&xs, &pso);
    let rho_grid = spearman(&xs, &grid);
    let sci = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ");
    println!(
        "gate 3: pso [{}], grid [{}], gaps [{}], rho pso {rho_pso:.3}, rho grid {rho_grid:.3}; {:.1?}",
        sci(&pso),
        sci(&grid),
        sci(&gaps),
        t0.elapsed()
    );

    let mut fails = Vec::new();
    require(&mut fails, rho_pso >= 0.9, format!("pso trend rho {rho_pso:.3} below 0.9"));
    require(&mut fails, rho_grid >= 0.9, format!("grid trend rho {rho_grid:.3} below 0.9"));
    for (k, &v) in values.iter().enumerate() {
        require(
            &mut fails,
            pso[k] >= grid[k],
            format!("{v} uavs: pso {:.4e} below grid {:.4e}", pso[k], grid[k]),
        );
    }
    require(
        &mut fails,
        gaps[0] > gaps[4],
        format!("gap at 1 uav {:.3e} not above gap at 8 {:.3e}", gaps[0], gaps[4]),
    );
    require(
        &mut fails,
        gaps[1] > gaps[4],
        format!("gap at 2 uavs {:.3e} not above gap at 8 {:.3e}", gaps[1], gaps[4]),
    );
    finish("gate 3", fails);
}

/// Sweeping the cluster count over 1..=6 with 5 UAVs and 20 seeds: mean Jain
/// fairness drops from 1 cluster to 6 for both strategies, and PSO fairness
/// stays at or above Grid at every point within one standard error of the
/// difference of means.
#[test]
fn c4_fairness_trend() {
    let t0 = Instant::now();
    let n_seeds = 20usize;
    let jain_at = |n_clusters: usize, placement: Placement| -> (f64, f64) {
        let s = Scenario { n_clusters, n_uavs: 5, placement, ..Scenario::default() };
        let (_, sum) = skyhaul::run_batch(&s, n_seeds).unwrap();
        (sum.jain_mean, sum.jain_std)
    };
    let pso: Vec<(f64, f64)> = (1..=6).map(|c| jain_at(c, Placement::Pso)).collect();
    let grid: Vec<(f64, f64)> = (1..=6).map(|c| jain_at(c, Placement::Grid)).collect();
    let pj: Vec<f64> = pso.iter().map(|x| x.0).collect();
    let gj: Vec<f64> = grid.iter().map(|x| x.0).collect();
    println!("gate 4: pso jain {pj:.4?}, grid jain {gj:.4?}; {:.1?}", t0.elapsed());

    let mut fails = Vec::new();
    require(
        &mut fails,
        pj[5] < pj[0],
        format!("pso jain at 6 clusters {:.4} not below 1 cluster {:.4}", pj[5], pj[0]),
    );
    require(
        &mut fails,
        gj[5] < gj[0],
        format!("grid jain at 6 clusters {:.4} not below 1 cluster {:.4}", gj[5], gj[0]),
    );
    for c in 0..6 {
        let se = ((pso[c].1 * pso[c].1 + grid[c].1 * grid[c].1) / n_seeds as f64).sqrt();
        require(
            &mut fails,
            pj[c] >= gj[c] - se,
            format!(
                "{} clusters: pso jain {:.4} below grid {:.4} by more than one se {:.4}",
                c + 1,
                pj[c],
                gj[c],
                se
            ),
        );
    }
    finish("gate 4", fails);
}

fn u_of(x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x.ln()
    } else {
        x.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

fn utility(tau: &[f64], rates: &[f64], alpha: f64) -> f64 {
    tau.iter().zip(rates).map(|(&t, &r)| u_of(t * r, alpha)).sum()
}

/// Maximizes the alpha-fair utility over the share simplex by pairwise
/// transfers with a geometrically shrinking step. Deliberately knows nothing
/// about the closed form it is checking.
fn numeric_opt(rates: &[f64], alpha: f64) -> f64 {
    let n = rates.len();
    let mut tau = vec![1.0 / n as f64; n];
    let mut terms: Vec<f64> = tau.iter().zip(rates).map(|(&t, &r)| u_of(t * r, alpha)).collect();
    let mut step = 0.25;
    while step > 1e-10 {
        let mut moved = true;
        let mut rounds = 0;
        while moved && rounds < 200 {
            moved = false;
            rounds += 1;
            for i in 0..n {
                for j in 0..n {
                    if i == j || tau[i] < step {
                        continue;
                    }
                    let ti = u_of((tau[i] - step) * rates[i], alpha);
                    let tj = u_of((tau[j] + step) * rates[j], alpha);
                    if ti + tj > terms[i] + terms[j] {
                        tau[i] -= step;
                        tau[j] += step;
                        terms[i] = ti;
                        terms[j] = tj;
                        moved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    utility(&tau, rates, alpha)
}

/// Closed-form alpha-fair shares match the numerical maximizer within 1e-6
/// relative utility on 100 random instances for alpha in {1, 2, 4}.
#[test]
fn c5_alpha_fair_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for inst in 0..100 {
        let n = rng.random_range(2..=20);
        let rates: Vec<f64> =
            (0..n).map(|_| 1e7 * (5e9f64 / 1e7).powf(rng.random::<f64>())).collect();
        for alpha in [1.0, 2.0, 4.0] {
            let tau = alpha_fair_shares(&rates, alpha).unwrap();
            let u_cf = utility(&tau, &rates, alpha);
            let u_num = numeric_opt(&rates, alpha);
            let rel = (u_cf - u_num).abs() / u_num.abs();
            worst = worst.max(rel);
            require(
                &mut fails,
                rel <= 1e-6,
                format!(
                    "instance {inst} (n {n}, alpha {alpha}): relative gap {rel:.2e} \
                     (closed form {u_cf:.12e}, numeric {u_num:.12e})"
                ),
            );
        }
    }
    let elapsed = t0.elapsed();
    println!("gate 5: 300 instances, worst relative utility gap {worst:.2e}; {elapsed:.2?}");
    require(
        &mut fails,
        elapsed.as_secs_f64() < 10.0,
        format!("runtime {elapsed:.2?} exceeds the 10 s budget"),
    );
    finish("gate 5", fails);
}

/// PSO on the separable quadratic with optimum at 300 in every coordinate:
/// 19 of 20 seeds must land within 1 m over 2, 4, and 8 dimensions, and
/// every global-best trace must be monotone nondecreasing.
#[test]
fn c6_pso_convergence() {
    let p = PsoParams { swarm_size: 30, iterations: 100, ..PsoParams::default() };
    let mut fails = Vec::new();
    let mut report = Vec::new();
    for d in [1usize, 2, 4] {
        let dims = 2 * d;
        let bounds = vec![(0.0, 600.0); dims];
        let mut hits = 0;
        let mut worst = 0.0f64;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let none: &[Vec<f64>] = &[];
            let res = skyhaul::placement::pso_optimize(
                |x| -x.iter().map(|v| (v - 300.0) * (v - 300.0)).sum::<f64>(),
                &bounds,
                &p,
                none,
                &mut rng,
            );
            for w in res.trace.windows(2) {
                assert!(
                    w[1] >= w[0],
                    "dims {dims} seed {seed}: trace decreased from {} to {}",
                    w[0],
                    w[1]
                );
            }
            let dist =
                res.position.iter().map(|v| (v - 300.0) * (v - 300.0)).sum::<f64>().sqrt();
            worst = worst.max(dist);
            if dist <= 1.0 {
                hits += 1;
            }
        }
        report.push(format!("{dims}d {hits}/20 within 1 m (worst {worst:.3} m)"));
        require(&mut fails, hits >= 19, format!("dims {dims}: only {hits}/20 within 1 m"));
    }
    println!("gate 6: {}", report.join(", "));
    finish("gate 6", fails);
}

/// Hand-derived link-budget values: LOS and NLOS path loss at 100 m and
/// 73 GHz, the default noise floor, and the LOS probability at 36 m.
#[test]
fn c7_link_budget_analytics() {
    let pl_los = path_loss_db(100.0, 73.0, true, 1.5);
    let pl_nlos = path_loss_db(100.0, 73.0, false, 1.5);
    let noise = Scenario::default().noise_dbm();
    let p36 = los_probability(36.0);
    println!(
        "gate 7: pl_los {pl_los:.4} dB, pl_nlos {pl_nlos:.4} dB, noise {noise:.4} dBm, \
         p_los(36) {p36:.6}"
    );

    let mut fails = Vec::new();
    require(&mut fails, (pl_los - 111.666).abs() <= 0.01, format!("LOS PL {pl_los:.4}"));
    require(&mut fails, (pl_nlos - 132.688).abs() <= 0.01, format!("NLOS PL {pl_nlos:.4}"));
    require(&mut fails, (noise - -79.519).abs() <= 0.01, format!("noise {noise:.4}"));
    require(&mut fails, (p36 - 0.68394).abs() <= 1e-5, format!("p_los(36) {p36:.7}"));
    finish("gate 7", fails);
}

/// Byte-exact conservation on full runs in every regime, and bitwise
/// determinism: repeated batches (seeds running concurrently) and a lone
/// rerun of one seed reproduce identical results and identical report files.
#[test]
fn c8_conservation_and_determinism() {
    for mode in [Mode::Ideal, Mode::BackhaulUnaware, Mode::BackhaulAware] {
        let s = Scenario {
            mode,
            duration_s: 12.0,
            warmup_s: 2.0,
            n_seeds: 4,
            ..Scenario::default()
        };
        let (runs_a, sum_a) = skyhaul::run_batch(&s, 4).unwrap();
        let (runs_b, sum_b) = skyhaul::run_batch(&s, 4).unwrap();
        assert_eq!(runs_a, runs_b, "{mode:?}: repeated batches differ");

        for r in &runs_a {
            assert!(r.sourced_bytes > 0, "{mode:?} seed {}: nothing sourced", r.seed);
            assert_eq!(
                r.sourced_bytes,
                r.sunk_bytes + r.dropped_bytes + r.final_backlog_bytes,
                "{mode:?} seed {}: conservation broken",
                r.seed
            );
        }

        let lone = skyhaul::run(&s, s.seed + 2).unwrap();
        assert_eq!(lone, runs_a[2], "{mode:?}: lone rerun differs from batch member");

        assert_eq!(summary_json(&s, &sum_a), summary_json(&s, &sum_b), "{mode:?} summary");
        assert_eq!(per_ue_csv(&runs_a), per_ue_csv(&runs_b), "{mode:?} per-ue csv");
        assert_eq!(
            cdf_csv(&sum_a.cdf_per_ue_bps),
            cdf_csv(&sum_b.cdf_per_ue_bps),
            "{mode:?} cdf csv"
        );
    }
    println!("gate 8: conservation and bitwise determinism hold in all three regimes");
}

/// Jain index over 10^4 random vectors: bounded by [1/N, 1], 1 exactly for
/// equal vectors, 1/N for one-hot vectors, and values at the upper bound
/// only occur when the entries really are (nearly) equal.
#[test]
fn c9_jain_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for inst in 0..10_000usize {
        let n = rng.random_range(1..=64);
        let xs: Vec<f64> = match inst % 4 {
            0 => (0..n).map(|_| rng.random::<f64>() * 1e9).collect(),
            1 => {
                let v = rng.random::<f64>() * 1e9 + 1.0;
                vec![v; n]
            }
            2 => {
                let mut v = vec![0.0; n];
                v[rng.random_range(0..n)] = rng.random::<f64>() * 1e9 + 1.0;
                v
            }
            _ => (0..n)
                .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() * 1e9 })
                .collect(),
        };
        let all_zero = xs.iter().all(|&x| x == 0.0);
        match jain_index(&xs) {
            Err(e) => assert!(all_zero, "instance {inst}: unexpected error {e}"),
            Ok(j) => {
                let inv_n = 1.0 / n as f64;
                assert!(
                    j >= inv_n - 1e-12 && j <= 1.0 + 1e-12,
                    "instance {inst}: jain {j} outside [{inv_n}, 1]"
                );
                if inst % 4 == 1 {
                    assert!((j - 1.0).abs() <= 1e-12, "instance {inst}: equal vector jain {j}");
                }
                if inst % 4 == 2 {
                    assert!((j - inv_n).abs() <= 1e-12, "instance {inst}: one-hot jain {j}");
                }
                if (j - 1.0).abs() <= 1e-12 {
                    let max = xs.iter().cloned().fold(f64::MIN, f64::max);
                    let min = xs.iter().cloned().fold(f64::MAX, f64::min);
                    // 1 - j >= (max-min)^2 / (2 n max^2), so j ~ 1 pins the
                    // spread to ~1e-5 relative for n <= 64.
                    assert!(
                        max - min <= max * 1.2e-5,
                        "instance {inst}: jain 1 with spread {min}..{max}"
                    );
                }
            }
        }
    }
    println!("gate 9: 10000 random vectors stayed within the Jain bounds");
}
