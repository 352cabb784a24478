use super::{l_related, newton_refine_with, OrbitRecord, OrbitTolerances};
use crate::error::{Error, Result};
use crate::perturbed::{PerturbedMap, PhasePoint};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const TRACK_CSV_HEADER: &str = "eps,q,x0,y0,residue,class,event\n";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Smallest offset of the off-symmetry seeds.
    pub delta_seed: f64,
    /// Number of doublings of the offset tried.
    pub ladder: u32,
    /// Signals at most this many grid steps apart count as one event.
    pub agree_window: usize,
    pub orbit: OrbitTolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta_seed: 1e-3,
            ladder: 6,
            agree_window: 2,
            orbit: OrbitTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepEvent {
    ResidueCrossingZero,
    ResidueCrossingOne,
    Degenerate,
    QuarterCrossing,
    OffSymmetry,
    Pitchfork,
    TrackLost,
}

impl SweepEvent {
    pub fn name(self) -> &'static str {
        match self {
            SweepEvent::ResidueCrossingZero => "residue-crossing-0",
            SweepEvent::ResidueCrossingOne => "residue-crossing-1",
            SweepEvent::Degenerate => "degenerate",
            SweepEvent::QuarterCrossing => "x0-quarter",
            SweepEvent::OffSymmetry => "off-symmetry",
            SweepEvent::Pitchfork => "pitchfork",
            SweepEvent::TrackLost => "track-lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub record: OrbitRecord,
    pub events: Vec<SweepEvent>,
    /// Non-symmetric orbits found next to a symmetric one, `L`-images of
    /// each other.
    pub branches: Option<(OrbitRecord, OrbitRecord)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// First `eps` at which at least two pitchfork signals agree.
    pub pitchfork: Option<f64>,
    /// Set when continuation stopped before the end of the grid.
    pub truncated: bool,
    pub stop_reason: Option<String>,
}

impl Sweep {
    pub fn last_good_eps(&self) -> Option<f64> {
        self.rows.last().map(|r| r.eps)
    }

    /// CSV `eps,q,x0,y0,residue,class,event`, events joined with `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACK_CSV_HEADER);
        for r in &self.rows {
            let p = &r.record.points[0];
            let events: Vec<_> = r.events.iter().map(|e| e.name()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.eps,
                r.record.q,
                p.x,
                p.y,
                r.record.residue,
                r.record.class,
                events.join(";")
            );
        }
        s
    }
}

/// A pair of `L`-related non-symmetric orbits next to `sym`, searched from
/// seeds `x_0 ± delta` with `delta` doubling along the ladder.
fn off_symmetry(
    t: &PerturbedMap,
    sym: &OrbitRecord,
    cfg: &SweepConfig,
) -> Option<(OrbitRecord, OrbitRecord)> {
    let z = sym.points[0];
    for m in 0..cfg.ladder {
        let delta = cfg.delta_seed * f64::powi(2.0, m as i32);
        for x in [z.x + delta, z.x - delta] {
            let seed = PhasePoint::new(x.rem_euclid(1.0), z.y);
            let Ok(a) = newton_refine_with(t, &seed, sym.q, true, &cfg.orbit) else {
                continue;
            };
            if a.symmetric || a.q != sym.q || a.same_orbit(sym, 1e-8) {
                continue;
            }
            let Ok(image) = t.local_symmetry_l(&a.points[0]) else {
                continue;
            };
            let Ok(b) = newton_refine_with(t, &image, sym.q, true, &cfg.orbit) else {
                continue;
            };
            if !b.same_orbit(&a, 1e-8) && l_related(t, &a, &b, 1e-8) {
                return Some((a, b));
            }
        }
    }
    None
}

fn crossed(a: f64, b: f64, level: f64) -> bool {
    (a - level) * (b - level) < 0.0
}

/// Naive continuation of `orbit0` along `eps_grid`, recording stability
/// changes and pitchfork signals.
///
/// Each grid point is seeded with the previous solution. A pitchfork is
/// reported where two of the three signals (residue crossing 0, an orbit
/// point crossing `x = 1/4`, onset of off-symmetry orbits) fall within
/// `agree_window` grid steps of each other.
pub fn sweep_eps(
    template: &PerturbedMap,
    orbit0: &OrbitRecord,
    eps_grid: &[f64],
    cfg: &SweepConfig,
) -> Result<Sweep> {
    if eps_grid.is_empty() {
        return Err(Error::Precondition("empty eps grid".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut truncated = false;
    let mut stop_reason = None;
    let mut seed = orbit0.points[0];
    let mut q = orbit0.q;
    let mut had_branches = false;
    for (idx, &eps) in eps_grid.iter().enumerate() {
        let t = template.with_eps(eps)?;
        let record = match newton_refine_with(&t, &seed, q, true, &cfg.orbit) {
            Ok(r) => r,
            Err(e) => {
                if let Some(last) = rows.last_mut() {
                    last.events.push(match e {
                        Error::DegeneratePersistence { .. } => SweepEvent::Degenerate,
                        _ => SweepEvent::TrackLost,
                    });
                }
                truncated = true;
                stop_reason = Some(format!("eps = {}: {}", eps, e));
                break;
            }
        };
        let mut events = Vec::new();
        if let Some(prev) = rows.last() {
            let (r0, r1) = (prev.record.residue, record.residue);
            if crossed(r0, r1, 0.0) {
                events.push(SweepEvent::ResidueCrossingZero);
            }
            if crossed(r0, r1, 1.0) {
                events.push(SweepEvent::ResidueCrossingOne);
            }
            if record.symmetric && record.q == 2 && prev.record.q == 2 {
                let quarter = prev
                    .record
                    .points
                    .iter()
                    .zip(&record.points)
                    .any(|(a, b)| crossed(a.x, b.x, 0.25) && (a.x - b.x).abs() < 0.25);
                if quarter {
                    events.push(SweepEvent::QuarterCrossing);
                }
            }
        }
        let branches = if record.symmetric {
            off_symmetry(&t, &record, cfg)
        } else {
            None
        };
        if idx > 0 && branches.is_some() && !had_branches {
            events.push(SweepEvent::OffSymmetry);
        }
        had_branches = branches.is_some();
        seed = record.points[0];
        q = record.q;
        rows.push(SweepRow {
            eps,
            record,
            events,
            branches,
        });
    }

    let pitchfork = detect_pitchfork(&mut rows, cfg.agree_window);
    Ok(Sweep {
        rows,
        pitchfork,
        truncated,
        stop_reason,
    })
}

fn detect_pitchfork(rows: &mut [SweepRow], window: usize) -> Option<f64> {
    use SweepEvent::*;
    let signals: Vec<(usize, SweepEvent)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            r.events
                .iter()
                .filter(|e| matches!(e, ResidueCrossingZero | QuarterCrossing | OffSymmetry))
                .map(move |&e| (i, e))
        })
        .collect();
    for &(i, e) in &signals {
        let agreeing: Vec<_> = signals
            .iter()
            .filter(|(j, f)| *f != e && j.abs_diff(i) <= window)
            .collect();
        if !agreeing.is_empty() {
            // report at the residue crossing when it is one of the signals
            let at = std::iter::once(&(i, e))
                .chain(agreeing)
                .find(|(_, f)| *f == ResidueCrossingZero)
                .map(|(j, _)| *j)
                .unwrap_or(i);
            rows[at].events.push(Pitchfork);
            return Some(rows[at].eps);
        }
    }
    None
}
