//! The subcommands. Each returns the process exit code and writes its
//! report to `out`, diagnostics to `err`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gkdv_core::concentration::{concentration_sensitivity, concentration_series, WindowLaw};
use gkdv_core::dynamics::{
    refinement_check, run, BlowupVerdict, Event, RunOutcome, StopReason, VerdictStatus,
};
use gkdv_core::functionals::{
    admissibility_defect, energy, hsk_norm, is_admissible, mass, mixed_norm_xt, sobolev_norm,
    threshold_check, AccumulatorSummary, MixedPair, StrichartzAccumulator, ThresholdReport,
};
use gkdv_core::ground_state::{soliton, soliton_residual};
use gkdv_core::profile::extract_profiles;
use gkdv_core::snapshot::{read_snapshot, write_snapshot};
use gkdv_core::spectral::airy_propagate;
use gkdv_core::{Field, Grid1D};

use crate::initial::initial_field;
use crate::output::{json_string, write_concentration_csv, write_json, write_norms_csv};
use crate::spec::{ExperimentSpec, RunPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

/// Environment variable capping sweep workers.
pub const THREADS_ENV: &str = "GKDV_LAB_THREADS";

/// Residual accepted by `soliton`.
pub const SOLITON_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub name: String,
    pub k: u32,
    pub n_points: usize,
    pub length: f64,
    pub status: VerdictStatus,
    pub verdict: BlowupVerdict,
    pub refined: Option<BlowupVerdict>,
    pub events: Vec<Event>,
    pub strichartz: Vec<AccumulatorSummary>,
}

fn single_status(v: &BlowupVerdict) -> VerdictStatus {
    if v.fired {
        VerdictStatus::Fired
    } else if v.reason == StopReason::Completed {
        VerdictStatus::Completed
    } else {
        VerdictStatus::Inconclusive
    }
}

/// Running mixed norms at each report time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorFile {
    pub pairs: Vec<[f64; 3]>,
    pub truncated: bool,
    pub history: Vec<(f64, Vec<f64>)>,
}

fn write_run(dir: &Path, out: &RunOutcome, k: u32) -> anyhow::Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    write_norms_csv(&dir.join("norms.csv"), &out.reports)?;
    let acc = &out.state.strichartz_acc;
    let file = AccumulatorFile {
        pairs: acc.tracked_pairs().iter().map(MixedPair::as_array).collect(),
        truncated: acc.truncated(),
        history: acc.history().to_vec(),
    };
    write_json(&dir.join("accumulator.json"), &file)?;
    for (i, s) in out.snapshots.iter().enumerate() {
        write_snapshot(&dir.join("snapshots").join(format!("snap_{i:05}")), &s.field, s.time, k)?;
    }
    Ok(())
}

/// Worker count: `--jobs` if given, capped by `GKDV_LAB_THREADS`.
pub fn worker_count(jobs: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let want = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.map_or(want, |c| want.min(c)).max(1)
}

fn simulate_one(plan: &RunPlan) -> anyhow::Result<VerdictFile> {
    let grid = plan.grid()?;
    let u0 = initial_field(plan, grid)?;
    let g = *u0.grid();
    let cfg = &plan.solver;
    let (primary, refined, status) = if plan.refine {
        let r = refinement_check(|g| initial_field(plan, Some(g)), g, cfg)?;
        (r.primary, Some(r.refined), r.status)
    } else {
        let o = run(&u0, cfg)?;
        let s = single_status(&o.verdict);
        (o, None, s)
    };
    write_run(&plan.directory, &primary, plan.k)?;
    if let Some(r) = &refined {
        write_run(&plan.directory.join("refined"), r, plan.k)?;
    }
    let verdict_of = |o: &RunOutcome, status, refined| VerdictFile {
        name: plan.label.clone(),
        k: plan.k,
        n_points: o.state.field.grid().n_points(),
        length: g.length(),
        status,
        verdict: o.verdict,
        refined,
        events: o.state.events.clone(),
        strichartz: o.state.strichartz_acc.summary(),
    };
    if let Some(r) = &refined {
        let own = verdict_of(r, single_status(&r.verdict), None);
        write_json(&plan.directory.join("refined").join("verdict.json"), &own)?;
    }
    let file = verdict_of(&primary, status, refined.as_ref().map(|r| r.verdict));
    write_json(&plan.directory.join("verdict.json"), &file)?;
    Ok(file)
}

/// Run every plan of the experiment in `spec_path`.
pub fn simulate(spec_path: &Path, jobs: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = match ExperimentSpec::from_file(spec_path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let plans = spec.plans();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(worker_count(jobs)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let results: Vec<anyhow::Result<VerdictFile>> =
        pool.install(|| plans.par_iter().map(simulate_one).collect());

    let mut code = EXIT_OK;
    for (plan, res) in plans.iter().zip(results) {
        match res {
            Ok(v) => {
                let _ = writeln!(
                    out,
                    "{}: {} ({:?}, t = {})",
                    plan.label,
                    status_word(v.status),
                    v.verdict.reason,
                    v.verdict.t_last
                );
                if v.status == VerdictStatus::Inconclusive && code == EXIT_OK {
                    code = EXIT_INCONCLUSIVE;
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e:#}", plan.label);
                code = EXIT_INVALID;
            }
        }
    }
    code
}

fn status_word(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Completed => "completed",
        VerdictStatus::Fired => "fired",
        VerdictStatus::Inconclusive => "inconclusive",
    }
}

/// `p,q[,s]` with rational `p`, `q` such as `25/4,25/2`.
pub fn parse_pair(text: &str) -> anyhow::Result<MixedPair> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("pair {text:?} must look like p,q or p,q,s");
    }
    let rat = |s: &str| -> anyhow::Result<Ratio<i64>> {
        let r: Ratio<i64> = s.parse().with_context(|| format!("{s:?} is not a rational number"))?;
        if r <= Ratio::from_integer(0) {
            bail!("exponent {s} must be positive");
        }
        Ok(r)
    };
    let s = match parts.get(2) {
        Some(v) => v.parse::<f64>().with_context(|| format!("{v:?} is not a number"))?,
        None => 0.0,
    };
    Ok(MixedPair::new(rat(parts[0])?, rat(parts[1])?, s))
}

#[derive(Debug, Clone, Serialize)]
struct PairValue {
    p: String,
    q: String,
    s: f64,
    admissible: bool,
    horizon: f64,
    value: f64,
}

#[derive(Debug, Clone, Serialize)]
struct NormsReport {
    time: f64,
    k: u32,
    n_points: usize,
    length: f64,
    mass: f64,
    energy: f64,
    hsk_norm: f64,
    h1_norm: f64,
    threshold: ThresholdReport,
    pairs: Vec<PairValue>,
}

/// `‖D^s V(t) f‖_{L^p_x L^q_t([0, horizon])}` sampled at `samples` times.
fn linear_mixed_norm(f: &Field, k: u32, pair: MixedPair, horizon: f64, samples: usize) -> anyhow::Result<f64> {
    let mut acc = StrichartzAccumulator::new(*f.grid(), k, &[pair]);
    for i in 0..samples {
        let t = horizon * i as f64 / (samples - 1) as f64;
        acc.record(t, &airy_propagate(f, t)?)?;
    }
    Ok(mixed_norm_xt(&acc, pair.p, pair.q, pair.s)?)
}

#[derive(Debug, Clone)]
pub struct NormsArgs {
    pub snapshot: PathBuf,
    pub pairs: Vec<String>,
    pub force: bool,
    pub horizon: f64,
    pub samples: usize,
}

pub fn norms(args: &NormsArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match norms_inner(args, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INVALID
        }
    }
}

fn norms_inner(args: &NormsArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    if !(args.horizon > 0.0) || args.samples < 2 {
        bail!("need a positive horizon and at least two samples");
    }
    let (f, meta) = read_snapshot(&args.snapshot)
        .with_context(|| format!("cannot read snapshot {}", args.snapshot.display()))?;
    let k = meta.k;
    let mut pairs = Vec::new();
    for text in &args.pairs {
        let pair = parse_pair(text)?;
        let ok = is_admissible(pair.p, pair.q, k);
        if !ok && !args.force {
            let lhs = admissibility_defect(pair.p, pair.q, k) + Ratio::new(2, k as i64);
            writeln!(
                err,
                "error: pair (p, q) = ({}, {}) is not admissible for k = {k}: \
                 2/p+1/q = {lhs}, but 2/p+1/q=2/k requires {}; pass --force to evaluate it anyway",
                pair.p,
                pair.q,
                Ratio::new(2, k as i64)
            )?;
            return Ok(EXIT_INVALID);
        }
        if args.force && ok {
            let note = if pair.p == pair.q { " (diagonal case p = q)" } else { "" };
            writeln!(err, "note: ({}, {}) is admissible for k = {k}{note}; --force not needed", pair.p, pair.q)?;
        } else if !ok {
            writeln!(err, "note: evaluating non-admissible pair ({}, {})", pair.p, pair.q)?;
        }
        let value = linear_mixed_norm(&f, k, pair, args.horizon, args.samples)?;
        pairs.push(PairValue {
            p: pair.p.to_string(),
            q: pair.q.to_string(),
            s: pair.s,
            admissible: ok,
            horizon: args.horizon,
            value,
        });
    }
    let report = NormsReport {
        time: meta.time,
        k,
        n_points: meta.n_points,
        length: meta.length,
        mass: mass(&f),
        energy: energy(&f, k)?,
        hsk_norm: hsk_norm(&f, k)?,
        h1_norm: sobolev_norm(&f, 1.0)?,
        threshold: threshold_check(&f, k)?,
        pairs,
    };
    out.write_all(json_string(&report)?.as_bytes())?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
struct SolitonReport {
    k: u32,
    c: f64,
    n_points: usize,
    length: f64,
    residual: f64,
    residual_ok: bool,
    mass: f64,
    energy: f64,
    hsk_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolitonArgs {
    pub k: u32,
    pub c: f64,
    pub n_points: usize,
    pub length: f64,
    pub out: PathBuf,
}

pub fn soliton_cmd(args: &SolitonArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| -> anyhow::Result<i32> {
        if args.k < 4 {
            bail!("k must be ≥ 4, got {}", args.k);
        }
        let g = Grid1D::new(args.n_points, args.length)?;
        let f = soliton(args.k, args.c, g)?;
        let residual = soliton_residual(&f, args.k, args.c)?;
        if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        write_snapshot(&args.out, &f, 0.0, args.k)?;
        let report = SolitonReport {
            k: args.k,
            c: args.c,
            n_points: args.n_points,
            length: args.length,
            residual,
            residual_ok: residual <= SOLITON_RESIDUAL_TOL,
            mass: mass(&f),
            energy: energy(&f, args.k)?,
            hsk_norm: hsk_norm(&f, args.k)?,
        };
        out.write_all(json_string(&report)?.as_bytes())?;
        Ok(if report.residual_ok { EXIT_OK } else { EXIT_INVALID })
    })();
    res.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e:#}");
        EXIT_INVALID
    })
}

#[derive(Debug, Clone, Serialize)]
struct ProfileRow {
    h: f64,
    x0: f64,
    hsk_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DecomposeReport {
    profiles: Vec<ProfileRow>,
    defect: f64,
    gamma_matrix: Vec<Vec<f64>>,
    remainder_strichartz: f64,
}

#[derive(Debug, Clone)]
pub struct DecomposeArgs {
    pub snapshot: PathBuf,
    pub max_profiles: usize,
    pub strichartz_stop: f64,
    pub remove_mean: bool,
    pub out: Option<PathBuf>,
}

pub fn decompose(args: &DecomposeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| -> anyhow::Result<i32> {
        let (f, meta) = read_snapshot(&args.snapshot)
            .with_context(|| format!("cannot read snapshot {}", args.snapshot.display()))?;
        let f = if args.remove_mean { f.mean_removed() } else { f };
        let rep = extract_profiles(&f, meta.k, args.max_profiles, args.strichartz_stop)?;
        let profiles = rep
            .profiles
            .iter()
            .map(|p| {
                Ok(ProfileRow {
                    h: p.h,
                    x0: p.x0,
                    hsk_norm: p.hsk_norm(meta.k)?,
                })
            })
            .collect::<gkdv_core::Result<Vec<_>>>()?;
        let report = DecomposeReport {
            profiles,
            defect: rep.pythagorean_defect,
            gamma_matrix: rep.pairwise_divergence,
            remainder_strichartz: rep.remainder_strichartz,
        };
        let text = json_string(&report)?;
        match &args.out {
            Some(p) => fs::write(p, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(EXIT_OK)
    })();
    res.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e:#}");
        EXIT_INVALID
    })
}

#[derive(Debug, Clone)]
pub struct ConcentrateArgs {
    pub snapshots: PathBuf,
    pub law: WindowLaw,
    pub t_star: Option<f64>,
    pub out: PathBuf,
    pub sensitivity: bool,
}

/// Snapshots of a directory, in file-name order.
pub fn load_snapshots(dir: &Path) -> anyhow::Result<(Vec<(f64, Field)>, u32)> {
    let mut stems: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    stems.sort();
    let mut k = None;
    let mut snaps = Vec::with_capacity(stems.len());
    for stem in stems {
        let (f, meta) = read_snapshot(&stem)?;
        if *k.get_or_insert(meta.k) != meta.k {
            bail!("snapshots in {} mix different k", dir.display());
        }
        snaps.push((meta.time, f));
    }
    match k {
        Some(k) => Ok((snaps, k)),
        None => bail!("no snapshots in {}", dir.display()),
    }
}

/// `t_last` of a fired verdict next to a run's snapshot directory.
fn verdict_time(dir: &Path) -> Option<f64> {
    let path = dir.parent()?.join("verdict.json");
    let v: VerdictFile = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    v.verdict.fired.then_some(v.verdict.t_last)
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_{tag}.csv"))
}

pub fn concentrate(args: &ConcentrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| -> anyhow::Result<i32> {
        args.law.validate()?;
        let (snaps, k) = load_snapshots(&args.snapshots)?;
        let series = match args.law {
            WindowLaw::Fixed { .. } => concentration_series(&snaps, &args.law, f64::INFINITY, k)?,
            WindowLaw::Power { .. } => {
                let t_star = args
                    .t_star
                    .or_else(|| verdict_time(&args.snapshots))
                    .context("a power law needs --t-star (or a fired verdict.json beside the snapshots)")?;
                let kept: Vec<(f64, Field)> = snaps.iter().filter(|(t, _)| *t < t_star).cloned().collect();
                if args.sensitivity {
                    let [lo, _, hi] = concentration_sensitivity(&snaps, &args.law, t_star, k)?;
                    write_concentration_csv(&sibling(&args.out, "tstar_0.9"), &lo)?;
                    write_concentration_csv(&sibling(&args.out, "tstar_1.1"), &hi)?;
                }
                concentration_series(&kept, &args.law, t_star, k)?
            }
        };
        if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        write_concentration_csv(&args.out, &series)?;
        writeln!(out, "{} entries written to {}", series.len(), args.out.display())?;
        Ok(EXIT_OK)
    })();
    res.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e:#}");
        EXIT_INVALID
    })
}
