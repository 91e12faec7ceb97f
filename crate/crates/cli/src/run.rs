use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use delaymap::systems::periodic_return_scan;
use delaymap::topology::{box_counting_anchored, geometric_scales};
use delaymap::{
    certify_sampling, compatibility_margin, covering_dimension_estimate, delay_matrix, genericity_monte_carlo,
    hypothesis_check, perturb_to_compatible, sample_pairs, write_delay_csv, Error, PairSet, PeriodInfo, StateVector,
    SystemSpec, Trajectory,
};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Result of a successful run: the summary line and whether the theorem's
/// hypotheses held.
pub enum Outcome {
    Done(String),
    Violated(String),
}

/// A loaded config with its resolved seed and output directory.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

fn create(out: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok((BufWriter::new(f), path))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (mut w, path) = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

fn read_trajectory(path: &Path, sys: &SystemSpec) -> Result<Trajectory> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let traj = Trajectory::read_csv(BufReader::new(f), sys.label())
        .with_context(|| format!("trajectory {}", path.display()))?;
    if traj.dim() != sys.ambient_dim() {
        bail!("trajectory {} has {} columns, {} needs {}", path.display(), traj.dim(), sys.label(), sys.ambient_dim());
    }
    Ok(traj)
}

fn simulate_trajectory(ctx: &Run) -> Result<Trajectory> {
    let sys = &ctx.cfg.system;
    let t = &ctx.cfg.trajectory;
    if let Some(file) = &t.file {
        return read_trajectory(file, sys);
    }
    let x0 = match &t.initial {
        Some(v) => StateVector::new(v.clone()).context("field `trajectory.initial`")?,
        None => sys.default_initial_state(),
    };
    let start = sys.step_n(&x0, t.burn_in)?;
    Ok(sys.iterate(&start, t.length)?)
}

fn pair_set(ctx: &Run) -> Result<PairSet> {
    let sys = &ctx.cfg.system;
    let p = &ctx.cfg.pairs;
    let n_max = ctx.cfg.delay_count()?;
    let k = match &p.file {
        Some(file) => {
            let f = File::open(file).with_context(|| format!("reading {}", file.display()))?;
            PairSet::read_csv(BufReader::new(f), p.delta).with_context(|| format!("pairs {}", file.display()))?
        }
        None => {
            let samples = sys.attractor_samples(p.samples, p.burn_in, ctx.seed)?;
            let info = PeriodInfo::direct(n_max, sys.default_tol());
            sample_pairs(&samples, p.delta, p.count, sys, &info, ctx.seed)?
        }
    };
    if k.is_empty() {
        bail!("field `pairs`: no pair at separation >= {}", p.delta);
    }
    Ok(k)
}

fn write_pairs(out: &Path, k: &PairSet) -> Result<()> {
    let (mut w, _) = create(out, "pairs.csv")?;
    k.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn simulate(ctx: &Run, import: Option<&Path>) -> Result<Outcome> {
    let traj = match import {
        Some(path) => read_trajectory(path, &ctx.cfg.system)?,
        None => simulate_trajectory(ctx)?,
    };
    let (mut w, path) = create(&ctx.out, "trajectory.csv")?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(Outcome::Done(format!("simulate: {} states of {} -> {}", traj.len(), ctx.cfg.system.label(), path.display())))
}

pub fn embed(ctx: &Run) -> Result<Outcome> {
    let m = ctx.cfg.delay_count()?;
    let traj = simulate_trajectory(ctx)?;
    let rows = delay_matrix(&ctx.cfg.observable, &traj, m)?;
    let (mut w, path) = create(&ctx.out, "delay.csv")?;
    write_delay_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(Outcome::Done(format!("embed: {} delay vectors, m={} -> {}", rows.len(), m, path.display())))
}

pub fn margin(ctx: &Run) -> Result<Outcome> {
    let m = ctx.cfg.delay_count()?;
    let k = pair_set(ctx)?;
    write_pairs(&ctx.out, &k)?;
    let report = compatibility_margin(&ctx.cfg.observable, &ctx.cfg.system, &k, m)?;
    write_json(&ctx.out, "margin.json", &report)?;
    Ok(Outcome::Done(format!(
        "margin: {} on {} pairs (m={}, argmin pair {}){}",
        report.margin,
        k.len(),
        m,
        report.argmin,
        if report.compatible() { "" } else { ", not compatible" }
    )))
}

pub fn perturb(ctx: &Run) -> Result<Outcome> {
    let cfg = &ctx.cfg;
    if cfg.m.is_some_and(|m| m != 2 * cfg.d + 1) {
        bail!("field `m`: perturbation works with m = 2d+1 = {}", 2 * cfg.d + 1);
    }
    let k = pair_set(ctx)?;
    write_pairs(&ctx.out, &k)?;
    let eps = cfg.perturb.epsilon;
    let p = match perturb_to_compatible(&cfg.observable, eps, &k, &cfg.system, cfg.d, ctx.seed) {
        Ok(p) => p,
        Err(e @ (Error::CoverOrderBound { .. } | Error::OscillationBound { .. })) => {
            return Ok(Outcome::Violated(format!("perturb: {e}")));
        }
        Err(e) => return Err(e.into()),
    };
    write_json(&ctx.out, "perturb_report.json", &p.report)?;
    let mut next = cfg.clone();
    next.observable = p.observable;
    let path = write_json(&ctx.out, "perturbed_config.json", &next)?;
    Ok(Outcome::Done(format!(
        "perturb: margin {} with sup-distance {} < {} -> {}",
        p.report.margin,
        p.report.sup_distance,
        eps,
        path.display()
    )))
}

#[derive(Serialize)]
struct DimensionReport {
    samples: usize,
    box_counting: delaymap::DimensionEstimate,
    covering: delaymap::DimensionEstimate,
}

pub fn dimension(ctx: &Run) -> Result<Outcome> {
    let sys = &ctx.cfg.system;
    let dc = &ctx.cfg.dimension;
    let samples = match &dc.file {
        Some(file) => read_trajectory(file, sys)?.into_states(),
        None => sys.attractor_samples(dc.samples, dc.burn_in, ctx.seed)?,
    };
    let domain = sys.domain();
    let scales = match &dc.scales {
        Some(s) => s.clone(),
        None => {
            let mut lo = vec![f64::INFINITY; sys.ambient_dim()];
            let mut hi = vec![f64::NEG_INFINITY; sys.ambient_dim()];
            for s in &samples {
                for (j, c) in s.coords().iter().enumerate() {
                    lo[j] = lo[j].min(*c);
                    hi[j] = hi[j].max(*c);
                }
            }
            let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            if extent <= 0.0 {
                bail!("field `dimension.scales`: samples have zero extent, give scales explicitly");
            }
            geometric_scales(extent / 4.0, dc.scale_count)
        }
    };
    let anchor: Vec<f64> = domain.iter().map(|r| r[0]).collect();
    let box_est = box_counting_anchored(&samples, &scales, &anchor)?;
    let cover_est = covering_dimension_estimate(&samples, &scales)?;
    let (mut w, _) = create(&ctx.out, "box_counts.csv")?;
    writeln!(w, "scale,count")?;
    for (s, c) in box_est.scales.iter().zip(&box_est.counts) {
        writeln!(w, "{s},{c}")?;
    }
    w.flush()?;
    let line = format!("dimension: box-counting {:.4}, covering {}", box_est.value, cover_est.value);
    write_json(&ctx.out, "dimension.json", &DimensionReport { samples: samples.len(), box_counting: box_est, covering: cover_est })?;
    Ok(Outcome::Done(line))
}

pub fn hypothesis(ctx: &Run) -> Result<Outcome> {
    let sys = &ctx.cfg.system;
    let hc = &ctx.cfg.hypothesis;
    let report = hypothesis_check(sys, ctx.cfg.d, hc.seeds, hc.tol.unwrap_or_else(|| sys.default_tol()))?;
    write_json(&ctx.out, "hypothesis.json", &report)?;
    let line = format!("hypothesis: {}", report.summary());
    Ok(if report.ok { Outcome::Done(line) } else { Outcome::Violated(line) })
}

#[derive(Serialize)]
struct YorkeReport {
    certificate: delaymap::YorkeCertificate,
    /// Grid seeds returning within `2d` steps.
    short_returns: usize,
    scan_seeds: usize,
}

pub fn yorke(ctx: &Run) -> Result<Outcome> {
    let sys = &ctx.cfg.system;
    let yc = &ctx.cfg.yorke;
    let d = ctx.cfg.d;
    let cert = certify_sampling(sys, d, yc.lipschitz, yc.equilibrium_seeds)?;
    let seeds: Vec<StateVector> = sys
        .grid(yc.scan_seeds)
        .into_iter()
        .filter(|s| cert.equilibria.iter().all(|e| sys.distance(e, s) > yc.tol))
        .collect();
    let mut returning = 0;
    for s in &seeds {
        // orbits leaving the domain are not periodic
        if let Ok(hits) = periodic_return_scan(sys, std::slice::from_ref(s), 2 * d, yc.tol) {
            returning += hits.len();
        }
    }
    let holds = cert.hypothesis_holds();
    let line = format!(
        "yorke: t = {} {} pi/(L d) = {}, {} equilibria, {} short returns in {} seeds",
        cert.step,
        if cert.certified { "<" } else { ">=" },
        cert.threshold,
        cert.equilibria.len(),
        returning,
        seeds.len()
    );
    write_json(&ctx.out, "yorke.json", &YorkeReport { certificate: cert, short_returns: returning, scan_seeds: seeds.len() })?;
    Ok(if holds { Outcome::Done(line) } else { Outcome::Violated(line) })
}

pub fn genericity(ctx: &Run) -> Result<Outcome> {
    let m = ctx.cfg.delay_count()?;
    let k = pair_set(ctx)?;
    write_pairs(&ctx.out, &k)?;
    let g = &ctx.cfg.genericity;
    let report = genericity_monte_carlo(&ctx.cfg.system, &k, m, &ctx.cfg.observable, g.trials, g.bump_scale, ctx.seed)?;
    write_json(&ctx.out, "genericity.json", &report)?;
    Ok(Outcome::Done(format!(
        "genericity: {}/{} perturbations compatible (fraction {})",
        report.compatible, report.trials, report.fraction
    )))
}
