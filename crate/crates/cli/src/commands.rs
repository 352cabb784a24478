use crate::config::{ExperimentConfig, Mode};
use anyhow::{bail, Context, Result};
use fiemkit::connections::{
    group_orbits, periodic_intervals, saddle_connections, verify_no_nonsymmetric,
};
use fiemkit::iem::is_reversible;
use fiemkit::orbits::{
    confirm_nonsymmetric, newton_refine_with, predict_nonsymmetric, Diagnostic, Prediction,
};
use fiemkit::scalar::{parse_exact, Coord};
use fiemkit::symmetry::{IntersectionCandidate, CSV_HEADER};
use fiemkit::{
    find_symmetric, gamma, intersections, sweep_eps, Iem, OrbitRecord, PerturbedMap, PhasePoint,
    SaddleConnection,
};
use log::info;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// What a successful command reports back to `main`.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Some orbit left the domain; the files are written anyway.
    pub escaped: bool,
    /// An invariant check failed.
    pub failed: bool,
}

pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Result<Self> {
        fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
        let ctx = Self { cfg, out };
        ctx.write("resolved_config.toml", &ctx.cfg.to_toml()?)?;
        Ok(ctx)
    }

    fn write(&self, name: &str, content: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn seeds(cfg: &ExperimentConfig, t: &PerturbedMap) -> Result<Vec<PhasePoint>> {
    let opts = &cfg.iterate;
    let (lo, hi) = t.family().domain();
    let mut out: Vec<PhasePoint> = Vec::new();
    for (i, &[x, y]) in opts.seeds.iter().enumerate() {
        if !x.is_finite() || !t.family().contains_y(y) {
            bail!(
                "iterate.seeds[{}] = [{}, {}] lies outside the phase space [0, 1) x [{}, {}]",
                i,
                x,
                y,
                lo,
                hi
            );
        }
        out.push(PhasePoint::new(x, y));
    }
    if let Some([nx, ny]) = opts.grid {
        for j in 0..ny {
            for i in 0..nx {
                let x = (i as f64 + 0.5) / nx as f64;
                let y = lo + (hi - lo) * (j as f64 + 0.5) / ny as f64;
                out.push(PhasePoint::new(x, y));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    for _ in 0..opts.random {
        let x = rng.gen::<f64>();
        let y = lo + (hi - lo) * rng.gen::<f64>();
        out.push(PhasePoint::new(x, y));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SeedSummary {
    file: String,
    x: f64,
    y: f64,
    steps: usize,
    escaped: bool,
}

pub fn iterate(ctx: &Run) -> Result<Outcome> {
    let t = ctx.cfg.map()?;
    let seeds = seeds(&ctx.cfg, &t)?;
    let n = ctx.cfg.iterate.steps;
    let width = seeds.len().saturating_sub(1).to_string().len().max(3);
    let runs: Vec<_> = seeds.par_iter().map(|s| t.iterate(s, n, true)).collect();
    let mut summary = Vec::with_capacity(runs.len());
    for (k, (s, tr)) in seeds.iter().zip(&runs).enumerate() {
        let file = format!("trajectory_{:0w$}.csv", k, w = width);
        // the seed itself is not a row, so zero steps give a bare header
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        let mut body = format!("{}\n", lines.next().unwrap_or_default());
        for l in lines.skip(1) {
            body.push_str(l);
            body.push('\n');
        }
        ctx.write(&file, &body)?;
        summary.push(SeedSummary {
            file,
            x: s.x,
            y: s.y,
            steps: tr.steps,
            escaped: tr.escaped,
        });
    }
    ctx.write_json("trajectories.json", &summary)?;
    let escaped = summary.iter().filter(|s| s.escaped).count();
    info!(
        "{} trajectories of {} steps, {} escaped",
        summary.len(),
        n,
        escaped
    );
    if escaped > 0 {
        eprintln!("{} of {} orbits left the domain", escaped, summary.len());
    }
    Ok(Outcome {
        escaped: escaped > 0,
        ..Outcome::default()
    })
}

#[derive(Serialize)]
struct LineSummary {
    index: i64,
    source: String,
    power: i64,
    samples: usize,
    segments: usize,
    truncated: bool,
    unresolved: usize,
    off_line: usize,
}

#[derive(Serialize)]
struct PairCrossings {
    j: i64,
    k: i64,
    candidates: Vec<IntersectionCandidate>,
}

pub fn symmetry_lines(ctx: &Run) -> Result<Outcome> {
    let t = ctx.cfg.map()?;
    let gcfg = ctx.cfg.gamma();
    let i_max = ctx.cfg.lines.i_max as i64;
    let mut indices: Vec<i64> = (-i_max..=i_max).collect();
    for &[j, k] in &ctx.cfg.lines.pairs {
        if j == k {
            bail!("lines.pairs: [{}, {}] names the same line twice", j, k);
        }
        indices.extend([j, k]);
    }
    indices.sort_unstable();
    indices.dedup();
    let lines: Vec<_> = indices
        .par_iter()
        .map(|&i| gamma(&t, i, &gcfg))
        .collect::<fiemkit::Result<_>>()?;

    let mut csv = String::from(CSV_HEADER);
    let mut summary = Vec::new();
    for l in &lines {
        if l.index.abs() <= i_max {
            l.write_csv_rows(&mut csv);
        }
        summary.push(LineSummary {
            index: l.index,
            source: format!("{:?}", l.source),
            power: l.power,
            samples: l.samples().count(),
            segments: l.segment_count(),
            truncated: l.branches.iter().any(|b| b.truncated),
            unresolved: l.branches.iter().map(|b| b.unresolved).sum(),
            off_line: l.branches.iter().map(|b| b.off_line).sum(),
        });
    }
    ctx.write("symmetry_lines.csv", &csv)?;
    ctx.write_json("lines.json", &summary)?;

    if !ctx.cfg.lines.pairs.is_empty() {
        let icfg = ctx.cfg.intersections();
        let find = |i: i64| lines.iter().find(|l| l.index == i).expect("line was built");
        let crossings: Vec<PairCrossings> = ctx
            .cfg
            .lines
            .pairs
            .par_iter()
            .map(|&[j, k]| {
                intersections(&t, find(j), find(k), &icfg).map(|candidates| PairCrossings {
                    j,
                    k,
                    candidates,
                })
            })
            .collect::<fiemkit::Result<_>>()?;
        for p in &crossings {
            info!("Γ_{} ∩ Γ_{}: {} crossings", p.j, p.k, p.candidates.len());
        }
        ctx.write_json("intersections.json", &crossings)?;
    }
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct Catalog {
    eps: f64,
    symmetric: Vec<OrbitRecord>,
    predictions: Vec<PredictionEntry>,
    nonsymmetric: Vec<OrbitRecord>,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize)]
struct PredictionEntry {
    /// Index into `symmetric`.
    orbit: usize,
    ell: u32,
    prediction: Option<Prediction>,
    note: Option<String>,
    confirmed: usize,
}

pub fn find_periodic(ctx: &Run) -> Result<Outcome> {
    let t = ctx.cfg.map()?;
    let opts = &ctx.cfg.find_periodic;
    let tol = ctx.cfg.orbit_tolerances();
    let search = find_symmetric(&t, opts.q_max, &ctx.cfg.search())?;
    let mut predictions = Vec::new();
    let mut nonsymmetric: Vec<OrbitRecord> = Vec::new();
    if opts.predict {
        for (i, o) in search.orbits.iter().enumerate() {
            for &(ell, _) in t.forcing().terms() {
                let mut entry = PredictionEntry {
                    orbit: i,
                    ell,
                    prediction: None,
                    note: None,
                    confirmed: 0,
                };
                match predict_nonsymmetric(&t, o, ell, &tol) {
                    Ok(p) => {
                        for r in confirm_nonsymmetric(&t, &p, &tol).into_iter().flatten() {
                            if r.symmetric {
                                continue;
                            }
                            entry.confirmed += 1;
                            let mut r = r;
                            r.canonicalize();
                            if !nonsymmetric
                                .iter()
                                .any(|n| n.same_orbit(&r, tol.orbit_tol.max(1e-9)))
                            {
                                nonsymmetric.push(r);
                            }
                        }
                        entry.prediction = Some(p);
                    }
                    Err(e) => entry.note = Some(e.to_string()),
                }
                predictions.push(entry);
            }
        }
    }
    nonsymmetric.sort_by(|a, b| {
        let (p, q) = (&a.points[0], &b.points[0]);
        a.q.cmp(&b.q)
            .then(p.y.total_cmp(&q.y))
            .then(p.x.total_cmp(&q.x))
    });
    info!(
        "{} symmetric and {} non-symmetric orbits, {} diagnostics",
        search.orbits.len(),
        nonsymmetric.len(),
        search.diagnostics.len()
    );
    ctx.write_json(
        "orbits.json",
        &Catalog {
            eps: t.eps(),
            symmetric: search.orbits,
            predictions,
            nonsymmetric,
            diagnostics: search.diagnostics,
        },
    )?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct EventLog {
    pitchfork: Option<f64>,
    truncated: bool,
    stop_reason: Option<String>,
    events: Vec<EventEntry>,
}

#[derive(Serialize)]
struct EventEntry {
    eps: f64,
    events: Vec<&'static str>,
    residue: f64,
    class: String,
    branches: Option<[PhasePoint; 2]>,
}

pub fn sweep(ctx: &Run) -> Result<Outcome> {
    let opts = &ctx.cfg.sweep;
    let grid = opts.grid()?;
    let t = ctx.cfg.map()?.with_eps(grid[0])?;
    let [x, y] = opts.seed;
    if !t.family().contains_y(y) {
        bail!("sweep.seed: y = {} is outside the domain", y);
    }
    let tol = ctx.cfg.orbit_tolerances();
    let orbit0 =
        newton_refine_with(&t, &PhasePoint::new(x, y), opts.q, true, &tol).with_context(|| {
            format!(
                "sweep.seed: no period-{} orbit near ({}, {}) at eps = {}",
                opts.q, x, y, grid[0]
            )
        })?;
    let s = sweep_eps(&t, &orbit0, &grid, &ctx.cfg.sweep_config())?;
    ctx.write("track.csv", &s.to_csv())?;
    let log = EventLog {
        pitchfork: s.pitchfork,
        truncated: s.truncated,
        stop_reason: s.stop_reason.clone(),
        events: s
            .rows
            .iter()
            .filter(|r| !r.events.is_empty())
            .map(|r| EventEntry {
                eps: r.eps,
                events: r.events.iter().map(|e| e.name()).collect(),
                residue: r.record.residue,
                class: r.record.class.to_string(),
                branches: r.branches.as_ref().map(|(a, b)| [a.points[0], b.points[0]]),
            })
            .collect(),
    };
    ctx.write_json("events.json", &log)?;
    match s.pitchfork {
        Some(eb) => info!("pitchfork at eps = {}", eb),
        None => info!("no pitchfork on the grid"),
    }
    Ok(Outcome::default())
}

#[derive(Serialize)]
#[serde(bound = "")]
struct OracleReport<T: Coord> {
    mode: Mode,
    iem: Iem<T>,
    symmetric: bool,
    orbits: Vec<Vec<fiemkit::PeriodicInterval<T>>>,
    saddle_connections: Vec<ConnectionEntry>,
}

#[derive(Serialize)]
struct ConnectionEntry {
    #[serde(flatten)]
    connection: SaddleConnection,
    label: String,
}

fn oracle_report<T: Coord>(ctx: &Run, iem: Iem<T>) -> Result<()> {
    let opts = &ctx.cfg.oracle;
    let orbits = group_orbits(&periodic_intervals(&iem, opts.q_max));
    let conns = saddle_connections(&iem, opts.m_max);
    let mut text = String::new();
    for o in &orbits {
        let pieces: Vec<_> = o
            .iter()
            .map(|j| format!("[{}, {})", j.left.to_text(), j.right.to_text()))
            .collect();
        let _ = writeln!(text, "period {}: {}", o[0].period, pieces.join(" "));
    }
    for c in &conns {
        let _ = writeln!(text, "{}", c);
    }
    ctx.write("oracle.txt", &text)?;
    info!(
        "{} periodic orbits of intervals, {} saddle connections",
        orbits.len(),
        conns.len()
    );
    ctx.write_json(
        "oracle.json",
        &OracleReport {
            mode: ctx.cfg.mode,
            symmetric: iem.is_symmetric().symmetric(),
            iem,
            orbits,
            saddle_connections: conns
                .into_iter()
                .map(|c| ConnectionEntry {
                    label: c.to_string(),
                    connection: c,
                })
                .collect(),
        },
    )
}

pub fn oracle(ctx: &Run) -> Result<Outcome> {
    let opts = &ctx.cfg.oracle;
    let perm = ctx.cfg.perm()?;
    let exact_lengths = || -> Result<Vec<BigRational>> {
        opts.lengths
            .iter()
            .enumerate()
            .map(|(i, n)| n.exact().with_context(|| format!("oracle.lengths[{}]", i)))
            .collect()
    };
    match ctx.cfg.mode {
        Mode::Rational => {
            let iem = if opts.lengths.is_empty() {
                let y = opts.y.exact().context("oracle.y")?;
                ctx.cfg.family()?.iem_at_exact(&y).context("oracle.y")?
            } else {
                Iem::new(perm, exact_lengths()?).context("oracle.lengths")?
            };
            oracle_report(ctx, iem)?;
        }
        Mode::Float => {
            let iem = if opts.lengths.is_empty() {
                let y = opts.y.exact().context("oracle.y")?.as_f64();
                ctx.cfg.family()?.iem_at(y).context("oracle.y")?
            } else {
                let l = exact_lengths()?.iter().map(|v| v.as_f64()).collect();
                Iem::new(perm, l).context("oracle.lengths")?
            };
            oracle_report(ctx, iem)?;
        }
    }
    Ok(Outcome::default())
}

#[derive(Debug, Serialize)]
struct Suite {
    name: &'static str,
    checked: usize,
    skipped: usize,
    failures: usize,
    max_error: f64,
    tolerance: f64,
    passed: bool,
}

impl Suite {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            checked: 0,
            skipped: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
            passed: true,
        }
    }

    fn record(&mut self, err: f64) {
        self.checked += 1;
        let err = if err.is_nan() { f64::INFINITY } else { err };
        self.max_error = self.max_error.max(err);
        if err > self.tolerance {
            self.failures += 1;
        }
    }

    fn fail(&mut self) {
        self.checked += 1;
        self.failures += 1;
    }

    fn finish(mut self) -> Self {
        self.passed = self.failures == 0;
        self
    }
}

fn exchange_suite<T: Coord>(maps: &[Iem<T>], q_max: usize) -> Suite {
    let mut s = Suite::new("exchange-maps", 0.0);
    for f in maps {
        let inv = f.invert();
        for k in 0..64 {
            let x = T::from_f64(k as f64 / 64.0);
            let back = inv.evaluate(&f.evaluate(&x));
            if back.same(&x) {
                s.record(0.0);
            } else {
                s.fail();
            }
        }
        for ok in [f.is_symmetric().symmetric(), is_reversible(f)] {
            if ok {
                s.record(0.0);
            } else {
                s.fail();
            }
        }
        match verify_no_nonsymmetric(f, q_max) {
            Ok(r) if r.passed() => s.record(0.0),
            _ => s.fail(),
        }
    }
    s.finish()
}

pub fn verify(ctx: &Run) -> Result<Outcome> {
    let t = ctx.cfg.map()?;
    let opts = &ctx.cfg.verify;
    let fam = t.family();
    let (lo, hi) = fam.domain();
    let heights: Vec<f64> = (0..opts.heights.max(1))
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / opts.heights.max(1) as f64)
        .collect();

    let mut suites = Vec::new();
    let rational =
        ctx.cfg.mode == Mode::Rational && matches!(fam.kind(), fiemkit::FamilyKind::Linear { .. });
    suites.push(if rational {
        let maps: Vec<Iem<BigRational>> = heights
            .iter()
            .map(|&y| fam.iem_at_exact(&parse_exact(&format!("{}", y))?))
            .collect::<fiemkit::Result<_>>()?;
        exchange_suite(&maps, opts.q_max)
    } else {
        let maps: Vec<Iem<f64>> = heights
            .iter()
            .map(|&y| fam.iem_at(y))
            .collect::<fiemkit::Result<_>>()?;
        exchange_suite(&maps, opts.q_max)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let points: Vec<PhasePoint> = (0..opts.points)
        .map(|_| PhasePoint::new(rng.gen(), lo + (hi - lo) * rng.gen_range(0.05..0.95)))
        .collect();
    let dist = |a: &PhasePoint, b: &PhasePoint| {
        if fam.periodic_y() {
            a.dist_torus(b)
        } else {
            a.dist(b)
        }
    };
    let smooth = |p: &PhasePoint| {
        t.distance_to_discontinuity(p)
            .map(|d| d > 1e-9)
            .unwrap_or(false)
    };
    let mut invol = Suite::new("involutions", 1e-12);
    let mut rev = Suite::new("reversibility", 1e-11);
    let mut inverse = Suite::new("inverse", 1e-12);
    let mut area = Suite::new("area-preservation", 1e-10);
    for p in &points {
        invol.record(dist(&t.symmetry_s(&t.symmetry_s(p)), p));
        match t.local_symmetry_l(p).and_then(|l| t.local_symmetry_l(&l)) {
            Ok(q) => invol.record(dist(&q, p)),
            Err(_) => invol.fail(),
        }
        let Ok(q) = t.step(p) else {
            inverse.skipped += 1;
            rev.skipped += 1;
            area.skipped += 1;
            continue;
        };
        match t.step_inverse(&q) {
            Ok(b) => inverse.record(dist(&b, p)),
            Err(_) => inverse.fail(),
        }
        let sq = t.symmetry_s(&q);
        match t.step(&sq) {
            Ok(r) if smooth(p) && smooth(&sq) => rev.record(dist(&t.symmetry_s(&r), p)),
            _ => rev.skipped += 1,
        }
        match t.jacobian_step(p) {
            Ok(j) if !j.near_discontinuity => area.record((j.matrix.determinant() - 1.0).abs()),
            _ => area.skipped += 1,
        }
    }
    suites.extend([
        invol.finish(),
        rev.finish(),
        inverse.finish(),
        area.finish(),
    ]);

    let gcfg = ctx.cfg.gamma();
    let mut lines = Suite::new("symmetry-lines", gcfg.tol_line);
    for i in -opts.lines..=opts.lines {
        let line = gamma(&t, i, &gcfg)?;
        for s in line.samples() {
            let z = PhasePoint::new(s.x, s.y);
            match t.symmetry_i(&z, i) {
                Ok(w) => lines.record(dist(&w, &z)),
                Err(_) => lines.skipped += 1,
            }
        }
    }
    suites.push(lines.finish());

    let tol = ctx.cfg.orbit_tolerances();
    let mut closure = Suite::new("orbit-closure", tol.orbit_tol);
    let mut witness = Suite::new("orbit-witnesses", 1e-8);
    let search = find_symmetric(&t, opts.q_max.min(4), &ctx.cfg.search())?;
    for o in &search.orbits {
        let z = o.points[0];
        match t.power(&z, o.q as i64) {
            Ok(w) => closure.record(dist(&w, &z)),
            Err(_) => closure.fail(),
        }
        let Some(w) = o.witness else {
            witness.fail();
            continue;
        };
        let p = o.points[w.point];
        for i in [w.j, w.k] {
            match t.symmetry_i(&p, i) {
                Ok(q) => witness.record(dist(&q, &p)),
                Err(_) => witness.fail(),
            }
        }
    }
    suites.extend([closure.finish(), witness.finish()]);

    let failed = suites.iter().any(|s| !s.passed);
    for s in &suites {
        println!(
            "{} {}: {} checked, {} skipped, {} failures, max error {:.3e} (tol {:.0e})",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.checked,
            s.skipped,
            s.failures,
            s.max_error,
            s.tolerance
        );
    }
    ctx.write_json("verify.json", &suites)?;
    Ok(Outcome {
        failed,
        ..Outcome::default()
    })
}

pub fn out_dir(cli: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
