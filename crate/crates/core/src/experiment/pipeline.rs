//! Pipeline wiring: generate, build, measure, persist.
//!
//! Seeds run in parallel; every CSV is assembled afterwards in seed order,
//! so output bytes depend only on the configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Command, ExperimentConfig, Law};
use crate::balayage::{caloric_family, caloric_function, verify_balayage, Cylinder};
use crate::error::{Error, Result};
use crate::harnack::{harnack_report, stabilization_radius, PhiFamily};
use crate::kernel::{kernel_checkpoints, kernel_identities, sample_sources};
use crate::lattice::{
    build_weighted_graph, closest_point, density_estimate, extract_giant_cluster, gen_bond_config,
    gen_conductance_config, hole_size, max_window_radius, window_mass, write_snapshot, AntKind, BondConfig,
    SnapshotHeader, SnapshotLaw, WeightedGraph,
};
use crate::limits::{
    centered_graph, compare_boxes, estimate_diffusion, green_ant_equivalence, green_profile, green_solve,
    llt_error, LltGrid, LltParams, LltRow, Shell,
};

/// Worst kernel identity defect accepted as a pass.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Largest balayage mismatch accepted as a pass.
pub const BALAYAGE_TOL: f64 = 1e-10;
/// Half-width of the Green's profile band used for the onset radius.
pub const GREEN_BAND: f64 = 0.05;

/// Floats in CSV: 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub vertices: usize,
    pub a_hat: Option<f64>,
    pub d_hat: Option<f64>,
    pub c_h: Option<f64>,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub stabilization_radius: Option<usize>,
    pub balayage_max_gap: Option<f64>,
    pub kernel_identity_defect: Option<f64>,
    pub llt_sup_error: Option<f64>,
    pub green_c_ref: Option<f64>,
    pub green_onset: Option<f64>,
    pub green_two_box_change: Option<f64>,
    pub green_ant_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: String,
    pub version: String,
    /// The only non-deterministic quantity; kept out of every CSV.
    pub wall_time_seconds: f64,
    pub files: Vec<PathBuf>,
    pub seeds: Vec<SeedSummary>,
    /// Named invariant violations; nonempty means exit code 1.
    pub violations: Vec<String>,
}

/// Exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Parse(_) | Error::Domain(_) | Error::Margin(_) | Error::Lookup(_) => 2,
        Error::Resource(_) => 3,
        _ => 1,
    }
}

/// One CSV under construction: header plus rows in insertion order.
#[derive(Default)]
struct Table {
    header: String,
    rows: Vec<String>,
}

#[derive(Default)]
struct SeedOutput {
    tables: BTreeMap<&'static str, Table>,
    snapshot: Option<String>,
    summary: SeedSummary,
    violations: Vec<String>,
}

impl SeedOutput {
    fn row(&mut self, file: &'static str, header: impl FnOnce() -> String, row: String) {
        let t = self.tables.entry(file).or_default();
        if t.header.is_empty() {
            t.header = header();
        }
        t.rows.push(row);
    }
}

fn coord_header(prefix: &str, dim: usize) -> String {
    (0..dim).map(|a| format!("{prefix}{a}")).collect::<Vec<_>>().join(",")
}

fn bond_config(cfg: &ExperimentConfig, seed: u64) -> Result<BondConfig> {
    match cfg.law {
        Law::Bernoulli(p) => gen_bond_config(cfg.dim, cfg.side, p, seed),
        Law::Conductance(k) => gen_conductance_config(cfg.dim, cfg.side, k, seed),
    }
}

fn stages(command: Command, dim: usize) -> Vec<Command> {
    match command {
        Command::All => {
            let mut s = vec![Command::Gen, Command::Kernel, Command::Balayage, Command::Phi, Command::Llt];
            if dim == 3 {
                s.push(Command::Green);
            }
            s
        }
        c => vec![c],
    }
}

/// Density estimate at the largest window that respects the margin.
fn density(graph: &WeightedGraph<f64>) -> Result<f64> {
    Ok(density_estimate(graph, &[max_window_radius(graph.geometry().side)])?.estimate)
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let bonds = bond_config(cfg, seed)?;
    let cluster = extract_giant_cluster(&bonds)?;
    let graph = build_weighted_graph::<f64>(&bonds, &cluster, cfg.kind)?;
    let center = bonds.geometry.center();
    let target: Vec<f64> = center.iter().take(cfg.dim).map(|&c| c as f64).collect();
    let x0 = closest_point(&graph, &target)?;
    let mut out = SeedOutput::default();
    out.summary.seed = seed;
    out.summary.vertices = graph.len();
    let kind = cfg.kind.name();
    for stage in stages(cfg.command, cfg.dim) {
        match stage {
            Command::Gen => gen_stage(cfg, seed, &graph, &mut out)?,
            Command::Kernel => kernel_stage(cfg, seed, &graph, x0, &mut out)?,
            Command::Balayage => balayage_stage(cfg, seed, &graph, x0, &mut out)?,
            Command::Phi => phi_stage(cfg, seed, &graph, x0, &mut out)?,
            Command::Llt => llt_stage(cfg, seed, kind, &graph, x0, &mut out)?,
            Command::Green => green_stage(cfg, seed, &bonds, &graph, x0, &mut out)?,
            Command::All => unreachable!("expanded into stages"),
        }
    }
    Ok(out)
}

fn gen_stage(cfg: &ExperimentConfig, seed: u64, graph: &WeightedGraph<f64>, out: &mut SeedOutput) -> Result<()> {
    let header = SnapshotHeader {
        dim: cfg.dim,
        side: cfg.side,
        law: match cfg.law {
            Law::Bernoulli(p) => SnapshotLaw::Bernoulli(p),
            Law::Conductance(k) => SnapshotLaw::Conductance(k),
        },
        seed,
        kind: cfg.kind,
    };
    let mut buf = Vec::new();
    write_snapshot(graph, &header, &mut buf)?;
    out.snapshot = Some(String::from_utf8(buf).expect("snapshot text is ASCII"));
    let center = graph.geometry().center();
    let mut r = 1;
    while r <= max_window_radius(cfg.side) {
        let mass = window_mass(graph, &center, r)?;
        let hole = hole_size(graph, r)?;
        out.row(
            "geometry.csv",
            || "seed,kind,radius,window_mass,density,hole_size".into(),
            format!(
                "{seed},{},{r},{},{},{hole}",
                cfg.kind.name(),
                fmt_f64(mass),
                fmt_f64(mass / (2.0 * r as f64).powi(cfg.dim as i32))
            ),
        );
        r *= 2;
    }
    out.summary.a_hat = Some(density(graph)?);
    Ok(())
}

fn kernel_stage(
    cfg: &ExperimentConfig,
    seed: u64,
    graph: &WeightedGraph<f64>,
    x0: usize,
    out: &mut SeedOutput,
) -> Result<()> {
    let dim = cfg.dim;
    for slice in kernel_checkpoints(graph, x0, &cfg.times)? {
        let step = slice.step().expect("discrete checkpoint");
        for (y, &v) in slice.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let s = graph.site(y);
            let coords = (0..dim).map(|a| s[a].to_string()).collect::<Vec<_>>().join(",");
            out.row(
                "kernel.csv",
                || format!("seed,kind,step,{},density,mass", coord_header("y", dim)),
                format!("{seed},{},{step},{coords},{},{}", cfg.kind.name(), fmt_f64(v), fmt_f64(graph.mass(y))),
            );
        }
    }
    let sources = sample_sources(graph, 3, seed)?;
    let horizon = 40.min(cfg.margin_horizon() / 2).max(1);
    let rep = kernel_identities(graph, &sources, horizon)?;
    out.row(
        "kernel_identities.csv",
        || "seed,kind,horizon,symmetry,mass,chapman_kolmogorov,energy,cauchy_schwarz,diagonal_increase".into(),
        format!(
            "{seed},{},{horizon},{},{},{},{},{},{}",
            cfg.kind.name(),
            fmt_f64(rep.symmetry),
            fmt_f64(rep.mass),
            fmt_f64(rep.chapman_kolmogorov),
            fmt_f64(rep.energy),
            fmt_f64(rep.cauchy_schwarz),
            fmt_f64(rep.diagonal_increase)
        ),
    );
    let worst = rep.worst();
    out.summary.kernel_identity_defect = Some(worst);
    if !(worst < IDENTITY_TOL) {
        out.violations.push(format!("seed {seed}: kernel identity defect {worst:e} exceeds {IDENTITY_TOL:e}"));
    }
    Ok(())
}

fn balayage_stage(
    cfg: &ExperimentConfig,
    seed: u64,
    graph: &WeightedGraph<f64>,
    x0: usize,
    out: &mut SeedOutput,
) -> Result<()> {
    let mut overall: f64 = 0.0;
    for (id, &r) in cfg.radius.iter().enumerate() {
        let t = cfg.horizon.unwrap_or((r * r).min(64));
        let cyl = Cylinder::new(graph, x0, r, t)?;
        let (mut gap, mut residual, mut support): (f64, f64, usize) = (0.0, 0.0, 0);
        for source in caloric_family(&cyl, cfg.functions, seed ^ (r as u64) << 32) {
            let u = caloric_function(&cyl, &source)?;
            let check = verify_balayage(&cyl, &u);
            gap = gap.max(check.max_gap);
            residual = residual.max(check.caloric_residual);
            support += check.support_violations;
        }
        out.row(
            "balayage.csv",
            || "seed,cylinder,R,T,functions,max_gap,caloric_residual,support_violations".into(),
            format!("{seed},{id},{r},{t},{},{},{},{support}", cfg.functions, fmt_f64(gap), fmt_f64(residual)),
        );
        if !(gap < BALAYAGE_TOL) || support > 0 {
            out.violations.push(format!(
                "seed {seed}: balayage mismatch {gap:e} with {support} charge-support violations at R = {r}"
            ));
        }
        overall = overall.max(gap);
    }
    out.summary.balayage_max_gap = Some(overall);
    Ok(())
}

fn phi_stage(
    cfg: &ExperimentConfig,
    seed: u64,
    graph: &WeightedGraph<f64>,
    x0: usize,
    out: &mut SeedOutput,
) -> Result<()> {
    let family = PhiFamily { seed, ..PhiFamily::default() };
    let mut profile = Vec::new();
    let mut worst: Option<(f64, f64, f64)> = None;
    for &r in &cfg.radius {
        let rep = harnack_report(graph, x0, r, &family, 64, cfg.lateral)?;
        out.row(
            "phi.csv",
            || "seed,R,T,family_size,c_h,delta,theta,violations,holder_c,c_h_lateral".into(),
            format!(
                "{seed},{r},{},{},{},{},{},{},{},{}",
                rep.horizon,
                rep.family_size,
                fmt_f64(rep.c_h),
                fmt_f64(rep.delta),
                fmt_f64(rep.theta),
                rep.violations,
                fmt_f64(rep.holder_c),
                rep.c_h_lateral.map_or(String::new(), fmt_f64)
            ),
        );
        if rep.violations > 0 {
            out.violations.push(format!("seed {seed}: {} oscillation-decay violations at R = {r}", rep.violations));
        }
        if rep.unbounded > 0 {
            out.violations.push(format!("seed {seed}: {} family members with unbounded ratio at R = {r}", rep.unbounded));
        }
        profile.push((r, rep.c_h));
        if worst.map_or(true, |w| rep.c_h > w.0) {
            worst = Some((rep.c_h, rep.delta, rep.theta));
        }
    }
    if let Some((c, d, t)) = worst {
        out.summary.c_h = Some(c);
        out.summary.delta = Some(d);
        out.summary.theta = Some(t);
    }
    out.summary.stabilization_radius = stabilization_radius(&profile);
    Ok(())
}

fn llt_rows(
    out: &mut SeedOutput,
    file: &'static str,
    seed: u64,
    kind: &str,
    dim: usize,
    rows: &[LltRow],
) {
    for r in rows {
        let xs = r.x.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",");
        out.row(
            file,
            || format!("seed,kind,n,t,{},measured,gaussian_ref,abs_err", coord_header("x", dim)),
            format!(
                "{seed},{kind},{},{},{xs},{},{},{}",
                r.n,
                fmt_f64(r.t),
                fmt_f64(r.measured),
                fmt_f64(r.reference),
                fmt_f64(r.abs_err)
            ),
        );
    }
}

fn llt_stage(
    cfg: &ExperimentConfig,
    seed: u64,
    kind: &str,
    graph: &WeightedGraph<f64>,
    x0: usize,
    out: &mut SeedOutput,
) -> Result<()> {
    let a = density(graph)?;
    let t_max = cfg.t_grid.iter().cloned().fold(0.0, f64::max);
    let n_max = *cfg.n_list.iter().max().expect("validated nonempty");
    let steps = (n_max as f64 * t_max).floor() as usize;
    let d = estimate_diffusion(graph, x0, steps.max(1))?.diffusion;
    let xs: Vec<Vec<f64>> = cfg
        .x_grid
        .iter()
        .map(|&s| {
            let mut x = vec![0.0; cfg.dim];
            x[0] = s;
            x
        })
        .collect();
    let grid = LltGrid { ns: cfg.n_list.clone(), ts: cfg.t_grid.clone(), xs };
    let mut params = LltParams::new(a, d);
    params.continuous = cfg.continuous;
    params.poisson_tol = cfg.poisson_tol();
    let rep = llt_error(graph, x0, &grid, &params)?;
    llt_rows(out, "llt.csv", seed, kind, cfg.dim, &rep.rows);
    llt_rows(out, "llt_continuous.csv", seed, kind, cfg.dim, &rep.continuous_rows);
    for (i, &(n, e)) in rep.sup_error.iter().enumerate() {
        let cont = rep.continuous_sup_error.get(i).map_or(String::new(), |c| fmt_f64(c.1));
        out.row(
            "llt_sup.csv",
            || "seed,kind,n,sup_error,reference_origin,excluded,continuous_sup_error".into(),
            format!("{seed},{kind},{n},{},{},{},{cont}", fmt_f64(e), fmt_f64(rep.reference_origin), rep.excluded),
        );
    }
    out.summary.a_hat = Some(a);
    out.summary.d_hat = Some(d);
    out.summary.llt_sup_error = rep.sup_error.last().map(|s| s.1);
    Ok(())
}

fn green_stage(
    cfg: &ExperimentConfig,
    seed: u64,
    bonds: &BondConfig,
    graph: &WeightedGraph<f64>,
    x0: usize,
    out: &mut SeedOutput,
) -> Result<()> {
    let a = density(graph)?;
    let d = estimate_diffusion(graph, x0, cfg.margin_horizon())?.diffusion;
    let field = green_solve(graph, x0, cfg.tol)?;
    let shells: Vec<Shell> = (1..cfg.side / 4).map(Shell::unit).collect();
    let profile = green_profile(graph, &field, &shells, a, d, GREEN_BAND)?;
    for s in &profile.shells {
        out.row(
            "green.csv",
            || "seed,shell_radius,mean,min,max,C_ref,raw_mean,count".into(),
            format!(
                "{seed},{},{},{},{},{},{},{}",
                fmt_f64(s.shell.lo),
                fmt_f64(s.mean),
                fmt_f64(s.min),
                fmt_f64(s.max),
                fmt_f64(profile.c_ref),
                fmt_f64(s.raw_mean),
                s.count
            ),
        );
    }
    let small_side = cfg.side / 2;
    let (small_graph, small_x0) = centered_graph(&bonds.central_sub_box(small_side)?, cfg.kind)?;
    let small_field = green_solve(&small_graph, small_x0, cfg.tol)?;
    let small_shells: Vec<Shell> = (1..small_side / 4).map(Shell::unit).collect();
    let small = green_profile(&small_graph, &small_field, &small_shells, a, d, GREEN_BAND)?;
    let two = compare_boxes(small_side, &small, cfg.side, &profile);
    for s in &two.shells {
        out.row(
            "green_two_box.csv",
            || "seed,shell_radius,small_raw,large_raw,small,large".into(),
            format!(
                "{seed},{},{},{},{},{}",
                fmt_f64(s.shell.lo),
                fmt_f64(s.small_raw),
                fmt_f64(s.large_raw),
                fmt_f64(s.small),
                fmt_f64(s.large)
            ),
        );
    }
    if matches!(cfg.kind, AntKind::Myopic | AntKind::Blind) {
        let cluster = extract_giant_cluster(bonds)?;
        let other = if cfg.kind == AntKind::Myopic { AntKind::Blind } else { AntKind::Myopic };
        let twin = build_weighted_graph::<f64>(bonds, &cluster, other)?;
        let dev = green_ant_equivalence(graph, &twin, x0, cfg.tol)?;
        if !(dev < 10.0 * cfg.tol) {
            out.violations.push(format!("seed {seed}: myopic/blind Green deviation {dev:e} exceeds 10 tol"));
        }
        out.summary.green_ant_deviation = Some(dev);
    }
    out.summary.green_c_ref = Some(profile.c_ref);
    out.summary.green_onset = profile.onset;
    out.summary.green_two_box_change = Some(two.change);
    out.summary.a_hat = Some(a);
    out.summary.d_hat = Some(d);
    Ok(())
}

/// Worker count from `PHL_THREADS`, defaulting to the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var("PHL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config("PHL_THREADS", format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

/// Run the configured pipeline and write every artifact under `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SeedOutput>> = pool.install(|| cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect());
    let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&cfg.out)?;
    let mut files = Vec::new();
    let mut merged: BTreeMap<&'static str, String> = BTreeMap::new();
    for o in &outputs {
        for (name, table) in &o.tables {
            let body = merged.entry(name).or_insert_with(|| format!("{}\n", table.header));
            for row in &table.rows {
                let _ = writeln!(body, "{row}");
            }
        }
    }
    for (name, body) in &merged {
        write_file(&cfg.out, name, body, &mut files)?;
    }
    for o in &outputs {
        if let Some(snap) = &o.snapshot {
            write_file(&cfg.out, &format!("cluster-seed{}.txt", o.summary.seed), snap, &mut files)?;
        }
    }
    let mut report = ExperimentReport {
        config: cfg.emit(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: 0.0,
        files,
        seeds: outputs.iter().map(|o| o.summary.clone()).collect(),
        violations: outputs.iter().flat_map(|o| o.violations.iter().cloned()).collect(),
    };
    report.files.push(cfg.out.join("summary.json"));
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(cfg.out.join("summary.json"), json + "\n")?;
    Ok(report)
}
