//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use delaymap::systems::{periodic_return_scan, GOLDEN_ROTATION};
use delaymap::topology::{box_counting, box_counting_anchored, geometric_scales};
use delaymap::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn sv(v: Vec<f64>) -> StateVector {
    StateVector::new(v).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn henon() -> SystemSpec {
    SystemSpec::henon(1.4, 0.3)
}

fn trig_2d() -> ObservableSpec {
    ObservableSpec::TrigPolynomial {
        terms: vec![
            TrigTerm { freq: vec![1.0, 0.0], cos: 1.0, sin: 0.3 },
            TrigTerm { freq: vec![0.5, 2.0], cos: 0.0, sin: 0.7 },
        ],
    }
}

fn orbit_points(sys: &SystemSpec, k: &PairSet, m: usize) -> Vec<StateVector> {
    k.pairs
        .iter()
        .flat_map(|p| [p.x.clone(), p.y.clone()])
        .flat_map(|z| sys.iterate(&z, m).unwrap().into_states())
        .collect()
}

fn henon_pairs(seed: u64, count: usize) -> PairSet {
    let sys = henon();
    let samples = sys.attractor_samples(2000, 500, seed).unwrap();
    sample_pairs(&samples, 1e-2, count, &sys, &PeriodInfo::direct(3, 1e-9), seed).unwrap()
}

/// delay_matrix rows agree bit for bit with per-point delay_vector on 10^4
/// Hénon states, and consecutive rows are shifts of each other.
fn criterion_1() -> Check {
    let start = Instant::now();
    let sys = henon();
    let h = trig_2d();
    let x0 = sys.attractor_samples(1, 500, 1).map_err(e)?.remove(0);
    let traj = sys.iterate(&x0, 10_004).map_err(e)?;
    let states = &traj.states()[..10_000];
    for m in [1usize, 3, 5] {
        let rows = delay_matrix(&h, &traj, m).map_err(e)?;
        for (i, x) in states.iter().enumerate() {
            let v = delay_vector(&h, &sys, x, m).map_err(e)?;
            ensure(v.values() == rows[i].values(), format!("m={m}: row {i} differs from delay_vector"))?;
        }
        for (i, w) in rows.windows(2).enumerate() {
            ensure(w[0].values()[1..] == w[1].values()[..m - 1], format!("m={m}: Hankel shift broken at row {i}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("10^4 states, m in {{1,3,5}}, {elapsed:.2?}"))
}

/// Bumps of sup-norm at most mu/4 never push the margin below mu/2.
fn criterion_2() -> Check {
    let sys = henon();
    let m = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut observables = 0;
    let mut violations = 0;
    let mut attempt = 0u64;
    while observables < 20 {
        attempt += 1;
        ensure(attempt < 200, "could not find 20 observables with positive margin")?;
        let k = henon_pairs(100 + attempt, 200);
        let h = bumped(&ObservableSpec::constant(0.5), random_trig_bump(2, &mut rng), 0.8);
        let mu = compatibility_margin(&h, &sys, &k, m).map_err(e)?.margin;
        if mu <= 0.0 {
            continue;
        }
        observables += 1;
        let orbit = orbit_points(&sys, &k, m);
        for _ in 0..100 {
            let scale = rng.gen_range(0.0..=1.0) * mu / 2.0;
            let f = bumped(&h, random_trig_bump(2, &mut rng), scale);
            let sup = sup_distance(&f, &h, &orbit).map_err(e)?.value;
            ensure(sup <= mu / 4.0 + 1e-15, format!("bump sup-norm {sup} exceeds mu/4 = {}", mu / 4.0))?;
            if compatibility_margin(&f, &sys, &k, m).map_err(e)?.margin < mu / 2.0 {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, format!("{violations} violations"))?;
    Ok("20 observables x 100 bumps, 0 violations".into())
}

/// perturb_to_compatible on 200 Hénon pairs from the constant observable.
fn criterion_3() -> Check {
    let sys = henon();
    let h = ObservableSpec::constant(0.5);
    let mut slowest = Duration::ZERO;
    let mut min_margin = f64::INFINITY;
    let mut max_sup = 0.0f64;
    for seed in 0..20u64 {
        let k = henon_pairs(seed, 200);
        ensure(k.len() == 200, format!("seed {seed}: only {} pairs", k.len()))?;
        let start = Instant::now();
        let p = perturb_to_compatible(&h, 0.05, &k, &sys, 1, seed).map_err(|err| format!("seed {seed}: {err}"))?;
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        // independent re-measurement
        let margin = compatibility_margin(&p.observable, &sys, &k, 3).map_err(e)?.margin;
        let sup = sup_distance(&p.observable, &h, &orbit_points(&sys, &k, 3)).map_err(e)?.value;
        ensure(margin > 1e-6, format!("seed {seed}: margin {margin}"))?;
        ensure(sup < 0.05, format!("seed {seed}: sup-distance {sup}"))?;
        ensure(elapsed < Duration::from_secs(10), format!("seed {seed}: took {elapsed:?}"))?;
        min_margin = min_margin.min(margin);
        max_sup = max_sup.max(sup);
    }
    Ok(format!("20/20 seeds, min margin {min_margin:.2e}, max sup {max_sup:.4}, slowest {slowest:.2?}"))
}

/// Reflected pairs need three delays on the rotation; one delay suffices on
/// the odometer.
fn criterion_4() -> Check {
    let rot = SystemSpec::circle_rotation(GOLDEN_ROTATION);
    let h = ObservableSpec::cosine(vec![1.0]);
    let pairs: Vec<Pair> = (1..32)
        .map(|i| {
            let x = i as f64 / 64.0;
            Pair { x: sv(vec![x]), y: sv(vec![1.0 - x]), class: PairClass::C1 }
        })
        .collect();
    let k = PairSet::new(pairs, 1.0 / 32.0).map_err(e)?;
    k.check_separation(&rot).map_err(e)?;
    let m1 = compatibility_margin(&h, &rot, &k, 1).map_err(e)?.margin;
    let m3 = compatibility_margin(&h, &rot, &k, 3).map_err(e)?.margin;
    ensure(m1 == 0.0, format!("rotation m=1 margin {m1}"))?;
    ensure(m3 > 1e-3, format!("rotation m=3 margin {m3}"))?;

    let odo = SystemSpec::odometer(2, 10);
    let states = odo.grid(1024);
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors = (0..32)
            .map(|_| Anchor { point: (0..10).map(|_| rng.gen()).collect(), value: rng.gen() })
            .collect();
        // bump support reaches every vertex of the digit cube from most anchors
        let f = ObservableSpec::PiecewiseAnchor { anchors, radius: 2.0, base: rng.gen() };
        let k = sample_pairs(&states, 0.5, 1000, &odo, &PeriodInfo::direct(1, 1e-9), seed).map_err(e)?;
        ensure(k.len() == 1000, format!("odometer seed {seed}: {} pairs", k.len()))?;
        if compatibility_margin(&f, &odo, &k, 1).map_err(e)?.margin > 0.0 {
            hits += 1;
        }
    }
    ensure(hits >= 95, format!("odometer: {hits}/100 seeds with positive margin"))?;
    Ok(format!("rotation m=1 margin {m1}, m=3 margin {m3:.4}; odometer {hits}/100"))
}

fn random_cantor_point(rng: &mut impl Rng, level: u32) -> f64 {
    let mut x = 0.0;
    let mut w = 1.0;
    for _ in 0..level {
        w /= 3.0;
        if rng.gen::<bool>() {
            x += 2.0 * w;
        }
    }
    x + w / 2.0
}

fn cantor_midpoints(level: u32) -> Vec<f64> {
    (0..1u64 << level)
        .map(|code| {
            let mut x = 0.0;
            let mut w = 1.0;
            for bit in (0..level).rev() {
                w /= 3.0;
                if (code >> bit) & 1 == 1 {
                    x += 2.0 * w;
                }
            }
            x + w / 2.0
        })
        .collect()
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cube: Vec<StateVector> =
        (0..40_000).map(|_| sv((0..3).map(|_| random_cantor_point(&mut rng, 8)).collect())).collect();
    let cov = covering_dimension_estimate(&cube, &[0.9, 0.6]).map_err(e)?.value;
    let bx = box_counting(&cube, &geometric_scales(0.25, 6)).map_err(e)?.value;
    ensure(cov == 0.0, format!("C^3 covering {cov}"))?;
    ensure((bx - 1.89).abs() <= 0.15, format!("C^3 box {bx}"))?;

    let line: Vec<StateVector> = cantor_midpoints(12).into_iter().map(|x| sv(vec![x])).collect();
    let triadic: Vec<f64> = (1..=6).map(|k| 3f64.powi(-k)).collect();
    let est = box_counting_anchored(&line, &triadic, &[0.0]).map_err(e)?;
    let oracle: Vec<i64> = (1..=6).map(|k| 1i64 << k).collect();
    ensure(est.counts == oracle, format!("Cantor counts {:?}", est.counts))?;
    ensure((est.value - 0.631).abs() <= 0.08, format!("Cantor box {}", est.value))?;

    let square: Vec<StateVector> = (0..20_000).map(|_| sv(vec![rng.gen(), rng.gen()])).collect();
    let sq_cov = covering_dimension_estimate(&square, &[0.5, 0.35]).map_err(e)?.value;
    let sq_box = box_counting(&square, &geometric_scales(0.25, 6)).map_err(e)?.value;
    ensure(sq_cov == 2.0, format!("square covering {sq_cov}"))?;
    ensure((sq_box - 2.0).abs() <= 0.1, format!("square box {sq_box}"))?;
    Ok(format!(
        "C^3 covering {cov} box {bx:.3}; Cantor box {:.3}; square covering {sq_cov} box {sq_box:.3}",
        est.value
    ))
}

/// Points of period dividing `n` for the cat map `[[1,1],[1,2]]`.
fn cat_rationals(n: u32) -> (i64, Vec<(i64, i64)>) {
    let mut a = [[1i64, 0], [0, 1]];
    for _ in 0..n {
        a = [[a[0][0] + a[1][0], a[0][1] + a[1][1]], [a[0][0] + 2 * a[1][0], a[0][1] + 2 * a[1][1]]];
    }
    let m = [[a[0][0] - 1, a[0][1]], [a[1][0], a[1][1] - 1]];
    let q = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let sols = (0..q)
        .flat_map(|i| (0..q).map(move |j| (i, j)))
        .filter(|&(i, j)| (m[0][0] * i + m[0][1] * j) % q == 0 && (m[1][0] * i + m[1][1] * j) % q == 0)
        .collect();
    (q, sols)
}

fn criterion_6() -> Check {
    let cat = SystemSpec::cat_map();
    let report = hypothesis_check(&cat, 2, 400, 1e-9).map_err(e)?;
    ensure(report.ok, format!("cat map: {}", report.summary()))?;
    let found = find_periodic(&cat, 4, 1e-9, &cat.grid(400)).map_err(e)?;
    for p in &found {
        let (q, sols) = cat_rationals(p.period as u32);
        let hit = sols.iter().any(|(i, j)| cat.distance(&sv(vec![*i as f64 / q as f64, *j as f64 / q as f64]), &p.state) < 1e-7);
        ensure(hit, format!("detected {:?} is not a period-{} rational", p.state, p.period))?;
    }
    let bound: usize = (1..=4).map(|n| cat_rationals(n).1.len()).sum();
    ensure(found.len() <= bound, "more points than the rational enumeration")?;
    let id = hypothesis_check(&SystemSpec::identity(1), 1, 50, 1e-9).map_err(e)?;
    ensure(!id.ok && id.witness == Some(1), format!("identity witness {:?}", id.witness))?;
    ensure(id.summary() == "n=1: dim 1 ≥ 0.5", format!("identity line {:?}", id.summary()))?;
    Ok(format!("cat map ok with {} finite periodic points; identity \"{}\"", found.len(), id.summary()))
}

fn criterion_7() -> Check {
    use std::f64::consts::PI;
    for (l, d) in [(1.0, 1usize), (2.0, 3), (0.5, 2)] {
        let t = yorke_threshold(l, d).map_err(e)?;
        ensure(t == PI / (l * d as f64), format!("threshold({l},{d}) = {t}"))?;
    }
    let sys = SystemSpec::sampled_flow(VectorField::Harmonic { omega: 1.0 }, 3.0, 0.01);
    // orbits are circles, so seeds stay inside the disc inscribed in the domain
    let seeds: Vec<StateVector> = sys
        .grid(1300)
        .into_iter()
        .filter(|s| {
            let r = s.coords()[0].hypot(s.coords()[1]);
            r > 1e-9 && r < 2.0
        })
        .take(1000)
        .collect();
    ensure(seeds.len() == 1000, format!("{} seeds", seeds.len()))?;
    let hits = periodic_return_scan(&sys, &seeds, 2, 1e-6).map_err(e)?;
    ensure(hits.is_empty(), format!("{} seeds return within 2 steps", hits.len()))?;
    Ok("threshold exact; 0 returns of order <= 2 in 10^3 seeds at t = 3".into())
}

fn criterion_8() -> Check {
    let sys = SystemSpec::circle_rotation(GOLDEN_ROTATION);
    let samples = sys.attractor_samples(2000, 0, 8).map_err(e)?;
    let k = sample_pairs(&samples, 1e-2, 200, &sys, &PeriodInfo::direct(3, 1e-9), 8).map_err(e)?;
    let h = ObservableSpec::constant(0.5);
    let generic = genericity_monte_carlo(&sys, &k, 3, &h, 200, 0.1, 8).map_err(e)?;
    let flat = genericity_monte_carlo(&sys, &k, 3, &h, 200, 0.0, 8).map_err(e)?;
    ensure(generic.fraction >= 0.95, format!("fraction {}", generic.fraction))?;
    ensure(flat.fraction == 0.0, format!("zero-scale fraction {}", flat.fraction))?;
    Ok(format!("fraction {} at 0.1, {} at 0", generic.fraction, flat.fraction))
}

const CONFIGS: &[(&str, &str, &[&str])] = &[
    (
        "henon",
        r#"{"system": {"kind": "henon", "a": 1.4, "b": 0.3},
            "observable": {"variant": "constant", "value": 0.5}, "d": 1, "seed": 11,
            "dimension": {"samples": 5000}, "genericity": {"trials": 50}}"#,
        &["simulate", "embed", "margin", "perturb", "dimension", "hypothesis", "genericity"],
    ),
    (
        "rotation",
        r#"{"system": {"kind": "circle_rotation", "alpha": 0.6180339887498949},
            "observable": {"variant": "trig_polynomial", "terms": [{"freq": [1.0], "cos": 1.0}]},
            "d": 1, "seed": 3, "genericity": {"trials": 50}}"#,
        &["simulate", "embed", "margin", "perturb", "hypothesis", "genericity"],
    ),
    (
        "harmonic",
        r#"{"system": {"kind": "sampled_flow", "field": {"name": "harmonic"}, "t": 3.0, "max_substep": 0.01},
            "observable": {"variant": "coordinate", "index": 0, "lo": -2.0, "hi": 2.0}, "d": 1, "seed": 5}"#,
        &["simulate", "embed", "yorke"],
    ),
];

fn run_all(root: &Path) -> std::result::Result<(), String> {
    for (name, text, commands) in CONFIGS {
        let cfg = root.join(format!("{name}.json"));
        std::fs::write(&cfg, text).map_err(e)?;
        for cmd in *commands {
            let out = root.join(name).join(cmd);
            let status = Command::new(env!("CARGO_BIN_EXE_delaymap"))
                .args([*cmd, "--quiet", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(e)?;
            ensure(status.code() == Some(0), format!("{name} {cmd}: exit {status}"))?;
        }
    }
    Ok(())
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Check {
    let a = tempfile::tempdir().map_err(e)?;
    let b = tempfile::tempdir().map_err(e)?;
    run_all(a.path())?;
    run_all(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa.len() == fb.len(), "different artifact sets")?;
    let artifacts = fa.iter().filter(|(n, _)| n.contains('/')).count();
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        ensure(na == nb, format!("artifact {na} vs {nb}"))?;
        ensure(ba == bb, format!("{na} differs between runs"))?;
    }
    Ok(format!("{artifacts} artifacts byte-identical across two runs"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("delay-map correctness", criterion_1),
        ("openness of compatibility", criterion_2),
        ("density by perturbation", criterion_3),
        ("dimension economy", criterion_4),
        ("covering vs box dimension", criterion_5),
        ("hypothesis checker", criterion_6),
        ("sampling bound", criterion_7),
        ("genericity Monte Carlo", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
