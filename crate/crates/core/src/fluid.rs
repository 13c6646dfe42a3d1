//! Event-driven simulation of the Hammersley interacting fluid system.
//!
//! The state is a purely atomic mass distribution on a spatial window. A
//! weighted point at `(x0, t)` deposits its weight at `x0` and removes the
//! same amount from the first available fluid strictly to the right of `x0`;
//! a sink removes mass from the left edge of the window. Mass that is
//! missing on the right materialises at the east window edge and is
//! ledgered, as is everything leaving on the left. Upper-right corner events
//! (the position the pulled mass came from) are logged for the corner
//! process statistics.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{AtomicMeasure, Point, Rect, WeightDistribution, WeightedPointSet};

/// Atom masses smaller than this are treated as exhausted and dropped
/// (float inputs only; unit and dyadic masses cancel exactly).
const EXHAUSTED_EPS: f64 = 1e-9;

/// Total-order key for f64 positions.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pos(f64);

impl Eq for Pos {}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pos {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Interior weighted point applied.
    Point,
    /// Scheduled sink demand at the left boundary.
    Sink,
    /// Mass entering through the east window edge.
    East,
    /// Mass leaving through the left window edge.
    Exit,
}

impl EventKind {
    fn label(&self) -> &'static str {
        match self {
            EventKind::Point => "point",
            EventKind::Sink => "sink",
            EventKind::East => "east",
            EventKind::Exit => "exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub x: f64,
    pub mass: f64,
}

/// The fluid state `M^t` with its ledgers.
#[derive(Debug, Clone)]
pub struct FluidState {
    atoms: BTreeMap<Pos, f64>,
    total: f64,
    pub time: f64,
    /// Spatial window `[west, east]` on which the fluid is simulated.
    pub window: (f64, f64),
    /// `(time, mass)` that exited at the left boundary.
    pub left_ledger: Vec<(f64, f64)>,
    /// `(time, mass)` that entered at the right boundary.
    pub east_ledger: Vec<(f64, f64)>,
    /// `(x, time)` upper-right corner events.
    pub corner_log: Vec<(f64, f64)>,
    pub events: Vec<EventRecord>,
    /// Set when east entries occurred in a whole-line emulation, meaning the
    /// window was too small for the run to represent the infinite system.
    pub saturated: bool,
}

impl FluidState {
    /// Start a fluid run from the restriction of `nu` to the window.
    pub fn from_measure(nu: &AtomicMeasure, window: (f64, f64)) -> Result<Self> {
        if !(window.0 < window.1) {
            return Err(Error::invalid("window must satisfy west < east"));
        }
        let restricted = nu.restrict(window.0, window.1);
        let mut atoms = BTreeMap::new();
        for (p, m) in restricted.atoms() {
            atoms.insert(Pos(p), m);
        }
        Ok(FluidState {
            total: restricted.total_mass(),
            atoms,
            time: 0.0,
            window,
            left_ledger: Vec::new(),
            east_ledger: Vec::new(),
            corner_log: Vec::new(),
            events: Vec::new(),
            saturated: false,
        })
    }

    /// Snapshot of the current mass distribution.
    pub fn measure(&self) -> AtomicMeasure {
        AtomicMeasure::new(self.atoms.iter().map(|(p, &m)| (p.0, m)).collect())
            .expect("fluid atoms are valid")
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn total_exited(&self) -> f64 {
        self.left_ledger.iter().map(|e| e.1).sum()
    }

    pub fn total_entered(&self) -> f64 {
        self.east_ledger.iter().map(|e| e.1).sum()
    }

    /// Move the clock forward; event times must be nondecreasing.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::invalid("events must be applied in time order"));
        }
        self.time = t;
        Ok(())
    }

    /// Consume `omega` of fluid strictly right of `x0`, nearest first.
    /// Returns `(consumed_inside, rightmost_position)`.
    fn consume_right_of(&mut self, x0: f64, omega: f64) -> (f64, Option<f64>) {
        let mut need = omega;
        let mut consumed = 0.0;
        let mut last_pos = None;
        let mut exhausted: Vec<Pos> = Vec::new();
        for (&pos, mass) in self.atoms.range_mut((
            std::ops::Bound::Excluded(Pos(x0)),
            std::ops::Bound::Unbounded,
        )) {
            if need <= 0.0 {
                break;
            }
            let mut take = need.min(*mass);
            if *mass - take <= EXHAUSTED_EPS {
                take = *mass;
                exhausted.push(pos);
            } else {
                *mass -= take;
            }
            consumed += take;
            need = (need - take).max(0.0);
            last_pos = Some(pos.0);
        }
        for p in exhausted {
            self.atoms.remove(&p);
        }
        self.total -= consumed;
        (consumed, last_pos)
    }

    fn deposit(&mut self, x0: f64, omega: f64) {
        *self.atoms.entry(Pos(x0)).or_insert(0.0) += omega;
        self.total += omega;
    }

    /// Apply an interior point of weight `omega` at `x0` at the current
    /// time: deposit at `x0`, pull the same mass from the right, drawing any
    /// deficit through the east boundary.
    pub fn apply_point(&mut self, x0: f64, omega: f64) -> Result<()> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid("point weight must be positive"));
        }
        let t = self.time;
        self.events.push(EventRecord {
            time: t,
            kind: EventKind::Point,
            x: x0,
            mass: omega,
        });
        let (consumed, last_pos) = self.consume_right_of(x0, omega);
        let deficit = omega - consumed;
        if deficit > 0.0 {
            self.east_ledger.push((t, deficit));
            self.events.push(EventRecord {
                time: t,
                kind: EventKind::East,
                x: self.window.1,
                mass: deficit,
            });
        } else if let Some(z) = last_pos {
            // Fully served inside: the pulled mass turns left at its
            // rightmost origin, an upper-right corner at (z, t).
            self.corner_log.push((z, t));
        }
        self.deposit(x0, omega);
        Ok(())
    }

    /// Apply a sink of mass `omega`: the first `omega` of fluid right of the
    /// left window edge exits there; missing mass passes straight through
    /// from the east boundary.
    pub fn apply_sink(&mut self, omega: f64) -> Result<()> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid("sink mass must be positive"));
        }
        let t = self.time;
        let west = self.window.0;
        self.events.push(EventRecord {
            time: t,
            kind: EventKind::Sink,
            x: west,
            mass: omega,
        });
        let (consumed, last_pos) = self.consume_right_of(f64::NEG_INFINITY, omega);
        let deficit = omega - consumed;
        if deficit > 0.0 {
            self.east_ledger.push((t, deficit));
            self.events.push(EventRecord {
                time: t,
                kind: EventKind::East,
                x: self.window.1,
                mass: deficit,
            });
        } else if let Some(z) = last_pos {
            self.corner_log.push((z, t));
        }
        self.left_ledger.push((t, omega));
        self.events.push(EventRecord {
            time: t,
            kind: EventKind::Exit,
            x: west,
            mass: omega,
        });
        Ok(())
    }

    /// Export the event log as CSV `time,kind,x,mass`.
    pub fn event_log_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "time,kind,x,mass")?;
        for e in &self.events {
            writeln!(w, "{},{},{},{}", e.time, e.kind.label(), e.x, e.mass)?;
        }
        Ok(())
    }
}

fn check_points_in_window(points: &WeightedPointSet, window: (f64, f64), t_max: f64) -> Result<()> {
    for p in points.points() {
        if p.t < 0.0 {
            return Err(Error::invalid("point times must be nonnegative"));
        }
        if p.t <= t_max && (p.x < window.0 || p.x > window.1) {
            return Err(Error::invalid(format!(
                "point at x={} outside the fluid window",
                p.x
            )));
        }
    }
    Ok(())
}

/// Points with `t <= t_max` in time order, ties broken left-to-right.
fn time_ordered(points: &WeightedPointSet, t_max: f64) -> Vec<Point> {
    let mut evs: Vec<Point> = points
        .points()
        .iter()
        .copied()
        .filter(|p| p.t <= t_max)
        .collect();
    evs.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.x.total_cmp(&b.x)));
    evs
}

/// Run the fluid from initial measure `nu` up to time `t_max` on the given
/// window (a whole-line emulation: east entries raise the saturation flag).
pub fn evolve(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    t_max: f64,
    window: (f64, f64),
) -> Result<FluidState> {
    if t_max < 0.0 {
        return Err(Error::invalid("t_max must be nonnegative"));
    }
    check_points_in_window(points, window, t_max)?;
    let mut state = FluidState::from_measure(nu, window)?;
    for p in time_ordered(points, t_max) {
        state.advance_to(p.t)?;
        state.apply_point(p.x, p.w)?;
    }
    state.time = t_max;
    state.saturated = !state.east_ledger.is_empty();
    Ok(state)
}

/// Run the sources-and-sinks box `[0, r] x [0, t_max]`: sources are the
/// initial fluid, sinks are scheduled demands at the left boundary. At equal
/// times sinks are processed before interior points.
pub fn evolve_box(
    sources: &AtomicMeasure,
    sinks: &AtomicMeasure,
    points: &WeightedPointSet,
    r: f64,
    t_max: f64,
) -> Result<FluidState> {
    if !(r > 0.0 && t_max >= 0.0) {
        return Err(Error::invalid("box dimensions must be positive"));
    }
    if sources.positions().iter().any(|&p| p < 0.0 || p > r) {
        return Err(Error::invalid("source support outside [0, r]"));
    }
    if sinks.positions().iter().any(|&s| s <= 0.0) {
        return Err(Error::invalid("sink times must be positive"));
    }
    check_points_in_window(points, (0.0, r), t_max)?;

    enum Ev {
        Sink(f64, f64),
        Point(Point),
    }
    let mut evs: Vec<Ev> = Vec::new();
    for (s, m) in sinks.atoms() {
        if s <= t_max {
            evs.push(Ev::Sink(s, m));
        }
    }
    for p in time_ordered(points, t_max) {
        evs.push(Ev::Point(p));
    }
    // Stable by construction: sinks were pushed first, so at equal times
    // they are applied before points.
    evs.sort_by(|a, b| {
        let ta = match a {
            Ev::Sink(s, _) => *s,
            Ev::Point(p) => p.t,
        };
        let tb = match b {
            Ev::Sink(s, _) => *s,
            Ev::Point(p) => p.t,
        };
        ta.total_cmp(&tb).then_with(|| {
            let ka = matches!(a, Ev::Point(_)) as u8;
            let kb = matches!(b, Ev::Point(_)) as u8;
            ka.cmp(&kb).then_with(|| {
                let xa = match a {
                    Ev::Sink(..) => f64::NEG_INFINITY,
                    Ev::Point(p) => p.x,
                };
                let xb = match b {
                    Ev::Sink(..) => f64::NEG_INFINITY,
                    Ev::Point(p) => p.x,
                };
                xa.total_cmp(&xb)
            })
        })
    });

    let mut state = FluidState::from_measure(sources, (0.0, r))?;
    for ev in evs {
        match ev {
            Ev::Sink(s, m) => {
                state.advance_to(s)?;
                state.apply_sink(m)?;
            }
            Ev::Point(p) => {
                state.advance_to(p.t)?;
                state.apply_point(p.x, p.w)?;
            }
        }
    }
    state.time = t_max;
    Ok(state)
}

/// Basic coupling: run the ordered pair `(nu_low, nu_high)` on the same
/// weighted points. Requires `nu_high` to dominate `nu_low` as measures.
pub fn couple_evolve(
    nu_low: &AtomicMeasure,
    nu_high: &AtomicMeasure,
    points: &WeightedPointSet,
    t_max: f64,
    window: (f64, f64),
) -> Result<(FluidState, FluidState)> {
    if !nu_high.dominates(nu_low) {
        return Err(Error::invalid("nu_high must dominate nu_low"));
    }
    let low = evolve(nu_low, points, t_max, window)?;
    let high = evolve(nu_high, points, t_max, window)?;
    Ok((low, high))
}

/// The small hand-checkable box instance used by the `figure21` experiment:
/// three sources, two sinks and two interior points in a 10 x 10 box, with
/// every ledger value known exactly.
pub fn worked_example_box() -> (AtomicMeasure, AtomicMeasure, WeightedPointSet, f64, f64) {
    let sources = AtomicMeasure::new(vec![(2.0, 5.0), (5.0, 3.0), (8.0, 7.0)]).unwrap();
    let sinks = AtomicMeasure::new(vec![(1.5, 4.0), (6.0, 6.0)]).unwrap();
    let points = WeightedPointSet::from_points(
        Rect::new(0.0, 10.0, 0.0, 10.0).unwrap(),
        vec![
            Point {
                x: 4.0,
                t: 3.0,
                w: 4.0,
            },
            Point {
                x: 6.0,
                t: 8.0,
                w: 7.0,
            },
        ],
    )
    .unwrap();
    (sources, sinks, points, 10.0, 10.0)
}

// ---------------------------------------------------------------------------
// Box-equilibrium experiments
// ---------------------------------------------------------------------------

/// Gaps of a point sequence on `[0, window]`, restricted to gaps whose left
/// end lies in the first half of the window. Near the right edge the
/// observed (completed) gaps of a Poisson process are length-biased by the
/// window conditioning; in the left half the tilt is exponentially small,
/// so the pooled gaps are exponential to working precision.
fn early_gaps(positions: &[f64], window: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = 0.0;
    for &p in positions {
        if prev > window / 2.0 {
            break;
        }
        out.push(p - prev);
        prev = p;
    }
    out
}

/// Statistics for the stationary box: top-boundary spacings, east-entry
/// spacings, corner-cell counts and pairwise independence of the three
/// summaries.
#[derive(Debug, Clone, Serialize)]
pub struct BurkeReport {
    pub rho: f64,
    pub box_size: f64,
    pub replicas: usize,
    pub top_spacings_ks: crate::stats::TestResult,
    pub east_spacings_ks: crate::stats::TestResult,
    pub corner_chi_square: crate::stats::TestResult,
    /// Pearson independence p-values: (top,east), (top,corner), (east,corner).
    pub independence: [crate::stats::TestResult; 3],
    pub unit_masses: bool,
    pub pass_top: bool,
    pub pass_east: bool,
    pub pass_corners: bool,
    pub pass_independence: bool,
    #[serde(skip)]
    pub top_spacings: Vec<f64>,
    #[serde(skip)]
    pub east_spacings: Vec<f64>,
}

impl BurkeReport {
    pub fn pass(&self) -> bool {
        self.pass_top && self.pass_east && self.pass_corners && self.pass_independence
    }
}

fn run_box_replica(
    rho: f64,
    r: f64,
    t: f64,
    seed: u64,
) -> Result<FluidState> {
    use crate::points::sample_atomic_poisson;
    let dist = WeightDistribution::Dirac1;
    let sources =
        sample_atomic_poisson((0.0, r), rho, &dist, crate::seeding::derive_seed(seed, &[1]))?;
    let sinks = sample_atomic_poisson(
        (0.0, t),
        1.0 / rho,
        &dist,
        crate::seeding::derive_seed(seed, &[2]),
    )?;
    let points = crate::points::sample_point_set(
        Rect::new(0.0, r, 0.0, t)?,
        1.0,
        &dist,
        crate::seeding::derive_seed(seed, &[3]),
    )?;
    evolve_box(&sources, &sinks, &points, r, t)
}

/// Output-process statistics of the stationary box at intensity `rho`:
/// the top measure is Poisson(rho), east entries Poisson(1/rho), upper-right
/// corners planar Poisson(1), all independent.
pub fn burke_report(
    rho: f64,
    box_size: f64,
    replicas: usize,
    seed: u64,
) -> Result<BurkeReport> {
    use crate::stats::{chi_square_poisson, independence_test, ks_test, KsReference};
    use rayon::prelude::*;

    if !(rho > 0.0 && box_size > 0.0) {
        return Err(Error::invalid("rho and box size must be positive"));
    }
    if replicas < 30 {
        return Err(Error::invalid("need at least 30 replicas"));
    }
    let (r, t) = (box_size, box_size);
    let cell = 10.0f64.min(box_size);
    let cells_per_side = (box_size / cell).floor() as usize;

    struct Row {
        top_gaps: Vec<f64>,
        east_gaps: Vec<f64>,
        cell_counts: Vec<u64>,
        n_top: f64,
        n_east: f64,
        n_corner: f64,
        unit: bool,
    }
    let rows: Vec<Row> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let st = run_box_replica(rho, r, t, crate::seeding::derive_seed(seed, &[0xB0, i]))?;
            let top = st.measure();
            let tops: Vec<f64> = top.positions().to_vec();
            let unit = top.atoms().all(|(_, m)| m == 1.0);
            let east_times: Vec<f64> = st.east_ledger.iter().map(|e| e.0).collect();
            let mut cell_counts = vec![0u64; cells_per_side * cells_per_side];
            for &(x, s) in &st.corner_log {
                let cx = ((x / cell) as usize).min(cells_per_side - 1);
                let ct = ((s / cell) as usize).min(cells_per_side - 1);
                cell_counts[cx * cells_per_side + ct] += 1;
            }
            Ok(Row {
                top_gaps: early_gaps(&tops, r),
                east_gaps: early_gaps(&east_times, t),
                n_top: tops.len() as f64,
                n_east: east_times.len() as f64,
                n_corner: st.corner_log.len() as f64,
                cell_counts,
                unit,
            })
        })
        .collect::<Result<_>>()?;

    let top_spacings: Vec<f64> = rows.iter().flat_map(|r| r.top_gaps.clone()).collect();
    let east_spacings: Vec<f64> = rows.iter().flat_map(|r| r.east_gaps.clone()).collect();
    let counts: Vec<u64> = rows.iter().flat_map(|r| r.cell_counts.clone()).collect();
    let n_top: Vec<f64> = rows.iter().map(|r| r.n_top).collect();
    let n_east: Vec<f64> = rows.iter().map(|r| r.n_east).collect();
    let n_corner: Vec<f64> = rows.iter().map(|r| r.n_corner).collect();

    let top_spacings_ks = ks_test(&top_spacings, KsReference::Exponential { rate: rho })?;
    let east_spacings_ks =
        ks_test(&east_spacings, KsReference::Exponential { rate: 1.0 / rho })?;
    let corner_chi_square = chi_square_poisson(&counts, cell * cell)?;
    let independence = [
        independence_test(&n_top, &n_east)?,
        independence_test(&n_top, &n_corner)?,
        independence_test(&n_east, &n_corner)?,
    ];
    let level = 0.01;
    Ok(BurkeReport {
        rho,
        box_size,
        replicas,
        pass_top: top_spacings_ks.p_value > level,
        pass_east: east_spacings_ks.p_value > level,
        pass_corners: corner_chi_square.p_value > level,
        pass_independence: independence.iter().all(|t| t.p_value > level),
        top_spacings_ks,
        east_spacings_ks,
        corner_chi_square,
        independence,
        unit_masses: rows.iter().all(|r| r.unit),
        top_spacings,
        east_spacings,
    })
}

/// Time invariance of the Poisson equilibrium: evolve the box to its top
/// and KS-test the spacings of the final measure against Exp(rho).
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub rho: f64,
    pub t_final: f64,
    pub replicas: usize,
    pub spacings_ks: crate::stats::TestResult,
    pub pass_spacings: bool,
    #[serde(skip)]
    pub spacings: Vec<f64>,
}

impl EquilibriumReport {
    pub fn pass(&self) -> bool {
        self.pass_spacings
    }
}

pub fn equilibrium_report(
    rho: f64,
    t_final: f64,
    replicas: usize,
    seed: u64,
) -> Result<EquilibriumReport> {
    use crate::stats::{ks_test, KsReference};
    use rayon::prelude::*;

    if !(rho > 0.0 && t_final > 0.0) {
        return Err(Error::invalid("rho and t_final must be positive"));
    }
    let gaps: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let st = run_box_replica(
                rho,
                t_final,
                t_final,
                crate::seeding::derive_seed(seed, &[0xE9, i]),
            )?;
            Ok(early_gaps(&st.measure().positions().to_vec(), t_final))
        })
        .collect::<Result<_>>()?;
    let spacings: Vec<f64> = gaps.into_iter().flatten().collect();
    let spacings_ks = ks_test(&spacings, KsReference::Exponential { rate: rho })?;
    Ok(EquilibriumReport {
        rho,
        t_final,
        replicas,
        pass_spacings: spacings_ks.p_value > 0.01,
        spacings_ks,
        spacings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measure(atoms: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(atoms.to_vec()).unwrap()
    }

    fn atoms_of(state: &FluidState) -> Vec<(f64, f64)> {
        state.measure().atoms().collect()
    }

    #[test]
    fn point_with_no_right_mass_draws_from_east() {
        let mut st = FluidState::from_measure(&measure(&[(2.0, 5.0)]), (0.0, 10.0)).unwrap();
        st.apply_point(4.0, 4.0).unwrap();
        assert_eq!(atoms_of(&st), vec![(2.0, 5.0), (4.0, 4.0)]);
        assert_eq!(st.east_ledger, vec![(0.0, 4.0)]);
        assert!(st.corner_log.is_empty());
    }

    #[test]
    fn point_splits_and_consumes_across_atoms() {
        let mut st =
            FluidState::from_measure(&measure(&[(5.0, 3.0), (8.0, 7.0)]), (0.0, 10.0)).unwrap();
        st.advance_to(3.0).unwrap();
        st.apply_point(4.0, 4.0).unwrap();
        assert_eq!(atoms_of(&st), vec![(4.0, 4.0), (8.0, 6.0)]);
        assert!(st.east_ledger.is_empty());
        assert_eq!(st.corner_log, vec![(8.0, 3.0)]);
    }

    #[test]
    fn sink_takes_leftmost_mass() {
        let mut st = FluidState::from_measure(
            &measure(&[(2.0, 5.0), (5.0, 3.0), (8.0, 7.0)]),
            (0.0, 10.0),
        )
        .unwrap();
        st.advance_to(1.5).unwrap();
        st.apply_sink(4.0).unwrap();
        assert_eq!(atoms_of(&st), vec![(2.0, 1.0), (5.0, 3.0), (8.0, 7.0)]);
        assert_eq!(st.left_ledger, vec![(1.5, 4.0)]);
    }

    #[test]
    fn sink_consumes_whole_atoms() {
        let mut st = FluidState::from_measure(
            &measure(&[(2.0, 1.0), (4.0, 4.0), (8.0, 6.0)]),
            (0.0, 10.0),
        )
        .unwrap();
        st.advance_to(6.0).unwrap();
        st.apply_sink(6.0).unwrap();
        assert_eq!(atoms_of(&st), vec![(8.0, 5.0)]);
    }

    #[test]
    fn sink_on_empty_state_passes_through() {
        let mut st = FluidState::from_measure(&AtomicMeasure::empty(), (0.0, 10.0)).unwrap();
        st.apply_sink(2.0).unwrap();
        assert_eq!(st.east_ledger, vec![(0.0, 2.0)]);
        assert_eq!(st.left_ledger, vec![(0.0, 2.0)]);
        assert_eq!(st.total_mass(), 0.0);
        assert!(st.corner_log.is_empty());
    }

    #[test]
    fn worked_example_mid_and_final_states() {
        let (sources, sinks, points, r, t) = worked_example_box();
        let mid = evolve_box(&sources, &sinks, &points, r, t / 2.0).unwrap();
        assert_eq!(atoms_of(&mid), vec![(2.0, 1.0), (4.0, 4.0), (8.0, 6.0)]);

        let end = evolve_box(&sources, &sinks, &points, r, t).unwrap();
        assert_eq!(atoms_of(&end), vec![(6.0, 7.0)]);
        assert_eq!(end.total_exited(), 10.0);
        assert_eq!(end.total_entered(), 2.0);
    }

    #[test]
    fn evolve_without_points_is_identity() {
        let nu = measure(&[(1.0, 2.0), (3.5, 0.5)]);
        let ps = WeightedPointSet::from_points(
            Rect::new(0.0, 5.0, 0.0, 5.0).unwrap(),
            vec![],
        )
        .unwrap();
        let st = evolve(&nu, &ps, 5.0, (0.0, 5.0)).unwrap();
        assert_eq!(st.measure(), nu);
        assert!(!st.saturated);
    }

    #[test]
    fn mass_accounting_is_exact_for_dyadic_inputs() {
        // initial + east entries = final + left exits, exactly (interior
        // points move mass, they do not create it).
        let nu = measure(&[(0.5, 1.25), (2.0, 0.75), (3.0, 2.5)]);
        let ps = WeightedPointSet::from_points(
            Rect::new(0.0, 4.0, 0.0, 4.0).unwrap(),
            vec![
                Point { x: 1.0, t: 0.5, w: 0.5 },
                Point { x: 2.5, t: 1.0, w: 1.25 },
                Point { x: 0.25, t: 2.0, w: 3.5 },
            ],
        )
        .unwrap();
        let st = evolve(&nu, &ps, 4.0, (0.0, 4.0)).unwrap();
        let initial = 1.25 + 0.75 + 2.5;
        let lhs = initial + st.total_entered();
        let rhs = st.total_mass() + st.total_exited();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn coupling_requires_domination() {
        let lo = measure(&[(1.0, 2.0)]);
        let hi = measure(&[(1.0, 1.0)]);
        let ps = WeightedPointSet::from_points(Rect::new(0.0, 5.0, 0.0, 5.0).unwrap(), vec![])
            .unwrap();
        assert!(couple_evolve(&lo, &hi, &ps, 1.0, (0.0, 5.0)).is_err());
        let (a, b) = couple_evolve(&lo, &lo.clone(), &ps, 1.0, (0.0, 5.0)).unwrap();
        assert_eq!(a.measure(), b.measure());
    }

    #[test]
    fn event_log_round_trip_format() {
        let (sources, sinks, points, r, t) = worked_example_box();
        let st = evolve_box(&sources, &sinks, &points, r, t).unwrap();
        let mut buf = Vec::new();
        st.event_log_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,kind,x,mass\n"));
        assert!(text.contains("1.5,sink,0,4"));
        assert!(text.contains("8,east,10,2"));
    }
}
