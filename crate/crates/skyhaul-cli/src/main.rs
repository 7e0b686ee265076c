//! Batch experiment front end: single runs (`run`) and one-parameter sweeps
//! (`sweep`), both writing plot-ready CSV/JSON artifacts. Exit codes: 0 on
//! success, 1 on I/O failure, 2 on validation failure (invalid scenario,
//! bad flag value, unknown sweep parameter).

use clap::{Args, Parser, Subcommand, ValueEnum};
use skyhaul::engine::{
    aggregate, run_with_observer, AggregateSummary, EngineError, NetworkState, RunObserver,
    RunResult, SlotSnapshot,
};
use skyhaul::report::{cdf_csv, fmt6, per_ue_csv, summary_json, sweep_csv, SweepRow};
use skyhaul::scenario::ScenarioError;
use skyhaul::{load_scenario, run_batch, validate_scenario, Mode, Placement, Scenario};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "skyhaul", version, about = "UAV mmWave access/backhaul network simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one batch of seeds and write summary.json plus CSV artifacts.
    Run(RunArgs),
    /// Run one batch per swept value and write sweep.csv plus per-point
    /// result directories.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ideal,
    BhUnaware,
    BhAware,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ideal => Mode::Ideal,
            ModeArg::BhUnaware => Mode::BackhaulUnaware,
            ModeArg::BhAware => Mode::BackhaulAware,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Pso,
    Grid,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Pso => Placement::Pso,
            PlacementArg::Grid => Placement::Grid,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON document; omitted keys keep their defaults.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Backhaul regime override.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// UAV placement strategy override.
    #[arg(long, value_enum)]
    placement: Option<PlacementArg>,
    /// Number of seeds per batch (overrides the scenario's n_seeds).
    #[arg(long)]
    seeds: Option<usize>,
    /// Base seed; seed k of a batch runs with base + k.
    #[arg(long)]
    seed: Option<u64>,
    /// UAV count override.
    #[arg(long)]
    uavs: Option<usize>,
    /// UE cluster count override.
    #[arg(long)]
    clusters: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Write trajectories.csv: per-slot UAV positions and targets.
    #[arg(long)]
    dump_trajectories: bool,
    /// Write links.csv: per-slot serving and backhaul link budgets.
    #[arg(long)]
    dump_links: bool,
    /// Write cells.csv: per-slot per-cell schedule and backhaul cap.
    #[arg(long)]
    dump_cells: bool,
    /// Write pso.csv: global-best trace of every optimizer epoch.
    #[arg(long)]
    dump_pso: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    #[value(name = "n_uavs")]
    NUavs,
    #[value(name = "n_clusters")]
    NClusters,
    Mode,
    Placement,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::NUavs => "n_uavs",
            SweepParam::NClusters => "n_clusters",
            SweepParam::Mode => "mode",
            SweepParam::Placement => "placement",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to sweep.
    #[arg(long, value_enum)]
    sweep: SweepParam,
    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

enum CliError {
    Io(String),
    Validation(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Io(msg) => {
                eprintln!("{msg}");
                ExitCode::from(1)
            }
            CliError::Validation(msg) => {
                eprintln!("{msg}");
                ExitCode::from(2)
            }
        }
    }
}

fn engine_err(e: EngineError) -> CliError {
    CliError::Validation(e.to_string())
}

fn resolve_scenario(c: &CommonArgs) -> Result<Scenario, CliError> {
    let mut s = match &c.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Io(format!("cannot read scenario {}: {e}", path.display()))
            })?;
            match load_scenario(&text) {
                Ok(s) => s,
                Err(ScenarioError::Parse(e)) => {
                    return Err(CliError::Validation(format!(
                        "scenario {}: {e}",
                        path.display()
                    )))
                }
                Err(ScenarioError::Invalid(v)) => return Err(CliError::Validation(v.join("\n"))),
            }
        }
        None => Scenario::default(),
    };
    if let Some(m) = c.mode {
        s.mode = m.into();
    }
    if let Some(p) = c.placement {
        s.placement = p.into();
    }
    if let Some(n) = c.seeds {
        s.n_seeds = n;
    }
    if let Some(b) = c.seed {
        s.seed = b;
    }
    if let Some(n) = c.uavs {
        s.n_uavs = n;
    }
    if let Some(n) = c.clusters {
        s.n_clusters = n;
    }
    let violations = validate_scenario(&s);
    if violations.is_empty() {
        Ok(s)
    } else {
        Err(CliError::Validation(violations.join("\n")))
    }
}

/// Per-seed CSV dump buffers; headers are written once by `DumpBufs`.
struct Dumper {
    seed: u64,
    n_aps: usize,
    traj: Option<String>,
    links: Option<String>,
    cells: Option<String>,
    pso: Option<String>,
}

impl RunObserver for Dumper {
    fn on_slot(&mut self, state: &NetworkState, snap: &SlotSnapshot) {
        if let Some(buf) = &mut self.traj {
            for (u, uav) in state.uavs.iter().enumerate() {
                writeln!(
                    buf,
                    "{},{},{},{},{},{},{},{}",
                    self.seed,
                    snap.slot,
                    fmt6(snap.t_s),
                    u,
                    fmt6(uav.pos.x),
                    fmt6(uav.pos.y),
                    fmt6(uav.target.x),
                    fmt6(uav.target.y)
                )
                .unwrap();
            }
        }
        if let Some(buf) = &mut self.links {
            for (i, b) in snap.budgets.iter().enumerate() {
                let Some(b) = b else { continue };
                writeln!(
                    buf,
                    "{},{},access,{},{},{},{},{},{},{}",
                    self.seed,
                    snap.slot,
                    i,
                    snap.assoc[i].expect("budget implies association"),
                    fmt6(b.d3d_m),
                    u8::from(b.los),
                    fmt6(b.pl_db),
                    fmt6(b.sinr_db),
                    fmt6(b.rate_bps)
                )
                .unwrap();
            }
            for bh in &snap.backhaul {
                writeln!(
                    buf,
                    "{},{},backhaul,{},{},{},{},{},{},{}",
                    self.seed,
                    snap.slot,
                    self.n_aps + bh.uav_index,
                    bh.donor_ap,
                    fmt6(bh.budget.d3d_m),
                    u8::from(bh.budget.los),
                    fmt6(bh.budget.pl_db),
                    fmt6(bh.budget.sinr_db),
                    fmt6(bh.budget.rate_bps)
                )
                .unwrap();
            }
        }
        if let Some(buf) = &mut self.cells {
            for c in &snap.cells {
                writeln!(
                    buf,
                    "{},{},{},{},{},{},{}",
                    self.seed,
                    snap.slot,
                    c.cell_id,
                    c.members.len(),
                    fmt6(c.access_rate_bps.iter().sum()),
                    fmt6(c.backhaul_rate_bps),
                    fmt6(c.delivered_rate_bps.iter().sum())
                )
                .unwrap();
            }
        }
    }

    fn on_pso(&mut self, epoch: usize, iteration: usize, gbest: f64) {
        if let Some(buf) = &mut self.pso {
            writeln!(buf, "{},{},{},{}", self.seed, epoch, iteration, fmt6(gbest)).unwrap();
        }
    }
}

/// Dump files accumulated across a batch, in seed order.
struct DumpBufs {
    traj: Option<String>,
    links: Option<String>,
    cells: Option<String>,
    pso: Option<String>,
}

impl DumpBufs {
    fn new(c: &CommonArgs) -> Self {
        Self {
            traj: c
                .dump_trajectories
                .then(|| "seed,slot,t_s,uav_id,x_m,y_m,target_x_m,target_y_m\n".to_string()),
            links: c
                .dump_links
                .then(|| "seed,slot,kind,src,dst,d3d_m,los,pl_db,sinr_db,rate_bps\n".to_string()),
            cells: c.dump_cells.then(|| {
                "seed,slot,cell_id,n_members,access_bps,backhaul_bps,delivered_bps\n".to_string()
            }),
            pso: c.dump_pso.then(|| "seed,epoch,iteration,gbest\n".to_string()),
        }
    }

    fn any(&self) -> bool {
        self.traj.is_some() || self.links.is_some() || self.cells.is_some() || self.pso.is_some()
    }

    fn dumper(&self, seed: u64, n_aps: usize) -> Dumper {
        Dumper {
            seed,
            n_aps,
            traj: self.traj.as_ref().map(|_| String::new()),
            links: self.links.as_ref().map(|_| String::new()),
            cells: self.cells.as_ref().map(|_| String::new()),
            pso: self.pso.as_ref().map(|_| String::new()),
        }
    }

    fn absorb(&mut self, d: Dumper) {
        for (dst, src) in [
            (&mut self.traj, d.traj),
            (&mut self.links, d.links),
            (&mut self.cells, d.cells),
            (&mut self.pso, d.pso),
        ] {
            if let (Some(dst), Some(src)) = (dst, src) {
                dst.push_str(&src);
            }
        }
    }
}

/// Runs a batch; seeds go through the parallel path unless dumps force a
/// sequential, observer-instrumented loop (results are identical either way).
fn execute_batch(
    s: &Scenario,
    c: &CommonArgs,
) -> Result<(Vec<RunResult>, AggregateSummary, DumpBufs), CliError> {
    let mut bufs = DumpBufs::new(c);
    if bufs.any() {
        let mut runs = Vec::with_capacity(s.n_seeds);
        for k in 0..s.n_seeds {
            let seed = s.seed + k as u64;
            let mut d = bufs.dumper(seed, s.n_aps);
            runs.push(run_with_observer(s, seed, &mut d).map_err(engine_err)?);
            bufs.absorb(d);
        }
        let summary = aggregate(&runs);
        Ok((runs, summary, bufs))
    } else {
        let (runs, summary) = run_batch(s, s.n_seeds).map_err(engine_err)?;
        Ok((runs, summary, bufs))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_outputs(
    dir: &Path,
    s: &Scenario,
    runs: &[RunResult],
    summary: &AggregateSummary,
    bufs: &DumpBufs,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("summary.json"), &summary_json(s, summary))?;
    write_file(&dir.join("per_ue.csv"), &per_ue_csv(runs))?;
    write_file(&dir.join("cdf_per_ue.csv"), &cdf_csv(&summary.cdf_per_ue_bps))?;
    write_file(&dir.join("cdf_per_cell.csv"), &cdf_csv(&summary.cdf_per_cell_bps))?;
    for (name, buf) in [
        ("trajectories.csv", &bufs.traj),
        ("links.csv", &bufs.links),
        ("cells.csv", &bufs.cells),
        ("pso.csv", &bufs.pso),
    ] {
        if let Some(buf) = buf {
            write_file(&dir.join(name), buf)?;
        }
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let s = resolve_scenario(&a.common)?;
    let (runs, summary, bufs) = execute_batch(&s, &a.common)?;
    write_outputs(&a.common.out, &s, &runs, &summary, &bufs)?;
    println!(
        "{} seeds: mean throughput {} bit/s, jain {}, drop fraction {}",
        summary.n_seeds,
        fmt6(summary.mean_throughput_bps),
        fmt6(summary.jain_mean),
        fmt6(summary.drop_fraction)
    );
    Ok(())
}

/// Expands the sweep token list into per-point scenarios, sorted by value
/// (numerically for counts, lexically otherwise) for deterministic output.
fn sweep_points(
    param: SweepParam,
    values: &[String],
    base: &Scenario,
) -> Result<Vec<(String, Scenario)>, CliError> {
    let mut points = Vec::new();
    match param {
        SweepParam::NUavs | SweepParam::NClusters => {
            let mut parsed: Vec<usize> = Vec::new();
            for v in values {
                parsed.push(v.trim().parse::<usize>().map_err(|_| {
                    CliError::Validation(format!("invalid {} value: {v}", param.name()))
                })?);
            }
            parsed.sort_unstable();
            for v in parsed {
                let mut s = base.clone();
                match param {
                    SweepParam::NUavs => s.n_uavs = v,
                    _ => s.n_clusters = v,
                }
                points.push((v.to_string(), s));
            }
        }
        SweepParam::Mode => {
            let mut tokens: Vec<String> = values.iter().map(|v| v.trim().to_string()).collect();
            tokens.sort_unstable();
            for t in tokens {
                let mode = match t.as_str() {
                    "ideal" => Mode::Ideal,
                    "bh-unaware" => Mode::BackhaulUnaware,
                    "bh-aware" => Mode::BackhaulAware,
                    _ => return Err(CliError::Validation(format!("invalid mode value: {t}"))),
                };
                points.push((t, Scenario { mode, ..base.clone() }));
            }
        }
        SweepParam::Placement => {
            let mut tokens: Vec<String> = values.iter().map(|v| v.trim().to_string()).collect();
            tokens.sort_unstable();
            for t in tokens {
                let placement = match t.as_str() {
                    "pso" => Placement::Pso,
                    "grid" => Placement::Grid,
                    _ => {
                        return Err(CliError::Validation(format!("invalid placement value: {t}")))
                    }
                };
                points.push((t, Scenario { placement, ..base.clone() }));
            }
        }
    }
    for (token, s) in &points {
        let violations = validate_scenario(s);
        if !violations.is_empty() {
            return Err(CliError::Validation(format!(
                "{}={token}: {}",
                param.name(),
                violations.join("\n")
            )));
        }
    }
    Ok(points)
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let base = resolve_scenario(&a.common)?;
    let points = sweep_points(a.sweep, &a.values, &base)?;
    let mut rows = Vec::with_capacity(points.len());
    for (token, s) in &points {
        let (runs, summary, bufs) = execute_batch(s, &a.common)?;
        let dir = a.common.out.join(format!("{}={token}", a.sweep.name()));
        write_outputs(&dir, s, &runs, &summary, &bufs)?;
        println!(
            "{}={token}: mean throughput {} bit/s, jain {}",
            a.sweep.name(),
            fmt6(summary.mean_throughput_bps),
            fmt6(summary.jain_mean)
        );
        rows.push(SweepRow::from_summary(token.clone(), &summary));
    }
    write_file(&a.common.out.join("sweep.csv"), &sweep_csv(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
