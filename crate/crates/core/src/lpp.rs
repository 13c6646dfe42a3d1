//! Last-passage values, lowest geodesics, boundary variants with sources and
//! sinks, exit points and the shape function.
//!
//! The passage value between ordered planar points is the maximal total
//! weight of an up-right chain of points in the half-open rectangle `(p, q]`
//! (points sharing a coordinate with `p` are left out; the north and east
//! sides belong to the rectangle). The sweep is O(n log n): points sorted by
//! x, a Fenwick prefix-maximum over compressed t-ranks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fenwick::{Best, FenwickMax};
use crate::points::{AtomicMeasure, Point, WeightedPointSet};

const NONE: u32 = u32::MAX;

/// An up-right chain of weighted points, strictly increasing in both
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassagePath {
    points: Vec<Point>,
}

impl PassagePath {
    pub fn empty() -> Self {
        PassagePath { points: Vec::new() }
    }

    pub fn new(points: Vec<Point>) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[0].x < w[1].x && w[0].t < w[1].t) {
                return Err(Error::invalid(
                    "path coordinates must be strictly increasing",
                ));
            }
        }
        Ok(PassagePath { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total weight collected along the chain.
    pub fn value(&self) -> f64 {
        self.points.iter().map(|p| p.w).sum()
    }

    /// Export as CSV `x,t,w` rows in path order.
    pub fn to_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,t,w")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.x, p.t, p.w)?;
        }
        Ok(())
    }
}

/// Result of a boundary passage computation: the value, a maximizing
/// interior chain, and exit-point data.
///
/// `exit` is the rightmost maximizer of the single-measure boundary problem;
/// `exit_sup`/`exit_inf` are the rightmost/leftmost exits of the
/// sources-and-sinks problem (sinks indexed by negative `z`). `saturated`
/// signals that the maximizer sat against the truncation window and the
/// caller should retry with a wider one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub value: f64,
    pub geodesic: PassagePath,
    pub exit: Option<f64>,
    pub exit_sup: Option<f64>,
    pub exit_inf: Option<f64>,
    pub saturated: bool,
}

impl PassageResult {
    /// Positive part of the rightmost exit.
    pub fn z_plus(&self) -> Option<f64> {
        self.exit_sup.or(self.exit).map(|z| z.max(0.0))
    }
}

/// Boundary data for the box process: sources on the x-axis, sinks on the
/// t-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcesSinks {
    pub sources: AtomicMeasure,
    pub sinks: AtomicMeasure,
}

impl SourcesSinks {
    pub fn new(sources: AtomicMeasure, sinks: AtomicMeasure) -> Self {
        SourcesSinks { sources, sinks }
    }

    /// Check that the supports fit in the box `[0, x] x (0, t]`.
    pub fn validate_box(&self, x: f64, t: f64) -> Result<()> {
        if self.sources.positions().iter().any(|&p| p < 0.0 || p > x) {
            return Err(Error::invalid("source support outside [0, x]"));
        }
        if self.sinks.positions().iter().any(|&p| p <= 0.0 || p > t) {
            return Err(Error::invalid("sink support outside (0, t]"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Core sweep
// ---------------------------------------------------------------------------

/// Fenwick entry for the sweep: chain value plus the coordinates of the chain
/// end, with the geodesic preference order.
#[derive(Clone, Copy)]
struct Entry {
    val: f64,
    x: f64,
    t: f64,
    idx: u32,
}

impl Best for Entry {
    fn bottom() -> Self {
        Entry {
            val: f64::NEG_INFINITY,
            x: f64::NEG_INFINITY,
            t: f64::INFINITY,
            idx: NONE,
        }
    }

    /// Prefer larger value; among equal values the endpoint with larger x,
    /// then smaller t. This is what keeps reconstructed geodesics lowest:
    /// equal-value chain ends form an antichain, so "larger x" picks the
    /// chain whose staircase is pointwise lowest near the query point.
    fn better(&self, other: &Self) -> bool {
        if self.val != other.val {
            return self.val > other.val;
        }
        if self.x != other.x {
            return self.x > other.x;
        }
        if self.t != other.t {
            return self.t < other.t;
        }
        self.idx < other.idx
    }
}

pub(crate) struct DpOut {
    /// dp[i] = best chain value ending at point i (inclusive), or -inf when
    /// the point is unreachable under the base function.
    pub dp: Vec<f64>,
    /// Predecessor point index, NONE when the chain starts at i.
    pred: Vec<u32>,
    /// Index of the best chain end under the geodesic preference, if any
    /// finite chain exists.
    best: Option<usize>,
}

impl DpOut {
    /// Chain through `start` following predecessors, in increasing order.
    pub(crate) fn chain_from(&self, points: &[Point], start: usize) -> Vec<Point> {
        let mut rev = Vec::new();
        let mut cur = start as u32;
        while cur != NONE {
            rev.push(points[cur as usize]);
            cur = self.pred[cur as usize];
        }
        rev.reverse();
        rev
    }
}

/// Maximal-chain DP over points sorted by (x asc, t asc).
///
/// `base(p)` is the value already collected when a chain starts at `p`
/// (0 for plain passage, a boundary cumulative for the `L_nu` variants;
/// `-inf` marks "cannot start here"). Points with equal x are processed as
/// one batch so they never chain on each other.
pub(crate) fn chain_dp<F: Fn(&Point) -> f64>(points: &[Point], base: F) -> DpOut {
    let n = points.len();
    let mut dp = vec![f64::NEG_INFINITY; n];
    let mut pred = vec![NONE; n];

    // Dense rank of t values (equal t -> equal rank) for the strict-t query.
    let mut by_t: Vec<u32> = (0..n as u32).collect();
    by_t.sort_by(|&a, &b| points[a as usize].t.total_cmp(&points[b as usize].t));
    let mut rank = vec![0u32; n];
    let mut distinct = 0u32;
    for (k, &i) in by_t.iter().enumerate() {
        if k > 0 && points[i as usize].t != points[by_t[k - 1] as usize].t {
            distinct += 1;
        }
        rank[i as usize] = distinct;
    }
    let n_ranks = if n == 0 { 0 } else { distinct as usize + 1 };

    let mut fw = FenwickMax::<Entry>::new(n_ranks);
    let mut best = Entry::bottom();

    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && points[j].x == points[i].x {
            j += 1;
        }
        for (k, p) in points.iter().enumerate().take(j).skip(i) {
            let e = fw.prefix(rank[k] as usize);
            let b = base(p);
            let (v, pr) = if e.idx != NONE && e.val > b {
                (p.w + e.val, e.idx)
            } else if b > f64::NEG_INFINITY {
                (p.w + b, NONE)
            } else {
                continue;
            };
            dp[k] = v;
            pred[k] = pr;
        }
        for (k, p) in points.iter().enumerate().take(j).skip(i) {
            if dp[k] > f64::NEG_INFINITY {
                let e = Entry {
                    val: dp[k],
                    x: p.x,
                    t: p.t,
                    idx: k as u32,
                };
                fw.update(rank[k] as usize, e);
                if e.better(&best) {
                    best = e;
                }
            }
        }
        i = j;
    }

    DpOut {
        dp,
        pred,
        best: (best.idx != NONE).then_some(best.idx as usize),
    }
}

/// Pareto staircase over (chain value, minimal ending t): both strictly
/// increasing. Backbone of the unit-weight fast path: the whole frontier is
/// a few kilobytes, so queries stay cache-resident, unlike the Fenwick
/// sweep.
struct Staircase {
    vals: Vec<f64>,
    tails: Vec<f64>,
}

impl Staircase {
    fn new() -> Self {
        Staircase {
            vals: Vec::new(),
            tails: Vec::new(),
        }
    }

    /// Best value among chains ending strictly below `t`.
    fn query(&self, t: f64) -> f64 {
        let k = self.tails.partition_point(|&tt| tt < t);
        if k == 0 {
            f64::NEG_INFINITY
        } else {
            self.vals[k - 1]
        }
    }

    fn insert(&mut self, v: f64, t: f64) {
        let pos = self.vals.partition_point(|&vv| vv < v);
        if pos < self.vals.len() && self.tails[pos] <= t {
            return; // dominated by an equal-or-higher value ending lower
        }
        // same-value entries right of pos and lower-value entries ending at
        // or above t are dominated by the new chain
        let end = pos + self.vals[pos..].partition_point(|&vv| vv == v);
        let start = self.tails[..pos].partition_point(|&tt| tt < t);
        self.vals.splice(start..end, [v]);
        self.tails.splice(start..end, [t]);
    }
}

/// Value-only chain DP. Unit weights with integer (or -inf) base values run
/// on the staircase; anything else falls back to the Fenwick sweep.
pub(crate) fn chain_values<F: Fn(&Point) -> f64>(points: &[Point], base: F) -> Vec<f64> {
    let bases: Vec<f64> = points.iter().map(|p| base(p)).collect();
    let fast = points.iter().all(|p| p.w == 1.0)
        && bases
            .iter()
            .all(|b| *b == f64::NEG_INFINITY || (b.fract() == 0.0 && b.abs() < 2f64.powi(52)));
    if !fast {
        return chain_dp(points, base).dp;
    }
    let n = points.len();
    let mut dp = vec![f64::NEG_INFINITY; n];
    let mut stairs = Staircase::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && points[j].x == points[i].x {
            j += 1;
        }
        for k in i..j {
            let prefix = stairs.query(points[k].t);
            let from = prefix.max(bases[k]);
            if from > f64::NEG_INFINITY {
                dp[k] = from + 1.0;
            }
        }
        for k in i..j {
            if dp[k] > f64::NEG_INFINITY {
                stairs.insert(dp[k], points[k].t);
            }
        }
        i = j;
    }
    dp
}

/// Points usable for a passage from `p` to `q`: inside `(p, q]`, leaving out
/// anything sharing a coordinate with `p`. Preserves x-sorted order and
/// borrows the original slice when nothing is filtered out.
fn usable<'a>(
    points: &'a WeightedPointSet,
    p: (f64, f64),
    q: (f64, f64),
) -> std::borrow::Cow<'a, [Point]> {
    let keep = |pt: &Point| pt.x > p.0 && pt.x <= q.0 && pt.t > p.1 && pt.t <= q.1;
    if points.points().iter().all(keep) {
        std::borrow::Cow::Borrowed(points.points())
    } else {
        std::borrow::Cow::Owned(points.points().iter().copied().filter(keep).collect())
    }
}

fn check_ordered(p: (f64, f64), q: (f64, f64)) -> Result<()> {
    if !(p.0 <= q.0 && p.1 <= q.1) || p == q {
        return Err(Error::invalid(format!(
            "endpoints must satisfy p < q coordinatewise, got {p:?}, {q:?}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Last-passage value `L(p, q)`: maximal total weight over up-right chains
/// in `(p, q]`, 0 when no points are usable.
pub fn last_passage(points: &WeightedPointSet, p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    check_ordered(p, q)?;
    let pts = usable(points, p, q);
    let dp = chain_values(&pts, |_| 0.0);
    Ok(dp.iter().copied().fold(0.0, f64::max))
}

/// The lowest maximizing chain for `L(p, q)`: pointwise below every other
/// maximizer in each strip between crossings.
pub fn lowest_geodesic(
    points: &WeightedPointSet,
    p: (f64, f64),
    q: (f64, f64),
) -> Result<PassagePath> {
    check_ordered(p, q)?;
    let pts = usable(points, p, q);
    let out = chain_dp(&pts, |_| 0.0);
    match out.best {
        Some(i) if out.dp[i] > 0.0 => Ok(PassagePath {
            points: out.chain_from(&pts, i),
        }),
        _ => Ok(PassagePath::empty()),
    }
}

/// One evaluated piece of the boundary profile: on `[z_lo, z_hi)` (or the
/// closed variants noted below) the candidate value is constant.
struct Piece {
    value: f64,
    /// Left endpoint of the piece (the infimum of its z-range).
    z_lo: f64,
    /// Right endpoint (the supremum of its z-range).
    z_hi: f64,
    /// Index of the interior point whose suffix chain realizes the value,
    /// NONE when the candidate uses no interior points.
    chain_start: u32,
}

/// Shared solver for the boundary problems. Evaluates the candidate profile
/// `z -> boundary(z) + L(entry(z), (x,t))` piecewise and extracts the
/// maximum together with the rightmost and leftmost maximizing locations.
struct BoundaryProfile {
    pieces: Vec<Piece>,
}

impl BoundaryProfile {
    fn value(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// (rightmost exit, leftmost exit, chain start of the best piece).
    ///
    /// The exits are the sup / inf of the set of maximizing z, which for the
    /// half-open pieces need not be attained.
    fn exits(&self) -> (f64, f64, u32) {
        let v = self.value();
        let mut right = f64::NEG_INFINITY;
        let mut left = f64::INFINITY;
        let mut chain = NONE;
        for p in &self.pieces {
            if p.value == v {
                if p.z_hi > right {
                    right = p.z_hi;
                }
                if p.z_lo < left {
                    left = p.z_lo;
                }
                chain = p.chain_start;
            }
        }
        (right, left, chain)
    }
}

/// Build the source-side profile over `z in [z_lo, x]`.
///
/// `pts` are the usable interior points (x-sorted); `dp2[i]` is the maximal
/// chain value starting at point i; `cum(z)` the boundary cumulative. The
/// final singleton `{x}` is included (entering at `z = x` uses no points
/// with that x-coordinate).
fn source_profile(
    pts: &[Point],
    dp2: &[f64],
    cum: &dyn Fn(f64) -> f64,
    extra_criticals: &[f64],
    z_lo: f64,
    x: f64,
) -> BoundaryProfile {
    // Suffix best over x-sorted points: best chain starting strictly right
    // of a threshold.
    let n = pts.len();
    let mut suf_val = vec![0.0f64; n + 1];
    let mut suf_idx = vec![NONE; n + 1];
    for i in (0..n).rev() {
        if dp2[i] > suf_val[i + 1] {
            suf_val[i] = dp2[i];
            suf_idx[i] = i as u32;
        } else {
            suf_val[i] = suf_val[i + 1];
            suf_idx[i] = suf_idx[i + 1];
        }
    }
    let g = |z: f64| -> (f64, u32) {
        let i = pts.partition_point(|p| p.x <= z);
        (suf_val[i], suf_idx[i])
    };

    // both inputs are sorted already: merge instead of re-sorting
    let mut crit: Vec<f64> = Vec::with_capacity(extra_criticals.len() + n + 2);
    crit.push(z_lo);
    {
        let a: Vec<f64> = extra_criticals
            .iter()
            .copied()
            .filter(|&c| c > z_lo && c <= x)
            .collect();
        let b = pts.iter().map(|p| p.x).filter(|&c| c > z_lo && c < x);
        let (mut i, mut b) = (0usize, b.peekable());
        while i < a.len() || b.peek().is_some() {
            let take_a = match (a.get(i), b.peek()) {
                (Some(&va), Some(&vb)) => va <= vb,
                (Some(_), None) => true,
                _ => false,
            };
            if take_a {
                crit.push(a[i]);
                i += 1;
            } else {
                crit.push(b.next().expect("peeked"));
            }
        }
    }
    crit.push(x);
    crit.dedup();

    let mut pieces = Vec::with_capacity(crit.len());
    for (k, &c) in crit.iter().enumerate() {
        let (gv, gi) = g(c);
        let value = cum(c) + gv.max(0.0);
        let chain_start = if gv > 0.0 { gi } else { NONE };
        let z_hi = if k + 1 < crit.len() { crit[k + 1] } else { c };
        pieces.push(Piece {
            value,
            z_lo: c,
            z_hi,
            chain_start,
        });
    }
    BoundaryProfile { pieces }
}

/// Build the sink-side profile over `s in (0, t]`, reported in `z = -s`
/// coordinates. Pieces are `(-s_{k+1}, -s_k]` plus the singleton `{-t}`.
fn sink_profile(
    pts: &[Point],
    dp2: &[f64],
    sinks: &AtomicMeasure,
    t: f64,
) -> BoundaryProfile {
    let n = pts.len();
    // Best chain among points with t-coordinate strictly above a threshold.
    let mut by_t: Vec<u32> = (0..n as u32).collect();
    by_t.sort_by(|&a, &b| pts[a as usize].t.total_cmp(&pts[b as usize].t));
    let ts: Vec<f64> = by_t.iter().map(|&i| pts[i as usize].t).collect();
    let mut suf_val = vec![0.0f64; n + 1];
    let mut suf_idx = vec![NONE; n + 1];
    for i in (0..n).rev() {
        let pi = by_t[i];
        if dp2[pi as usize] > suf_val[i + 1] {
            suf_val[i] = dp2[pi as usize];
            suf_idx[i] = pi;
        } else {
            suf_val[i] = suf_val[i + 1];
            suf_idx[i] = suf_idx[i + 1];
        }
    }
    let g = |s: f64| -> (f64, u32) {
        let i = ts.partition_point(|&tv| tv <= s);
        (suf_val[i], suf_idx[i])
    };

    let mut crit: Vec<f64> = Vec::with_capacity(sinks.len() + n + 2);
    crit.push(0.0);
    crit.extend(sinks.positions().iter().copied().filter(|&c| c > 0.0 && c <= t));
    crit.extend(ts.iter().copied().filter(|&c| c > 0.0 && c < t));
    crit.push(t);
    crit.sort_by(|a, b| a.total_cmp(b));
    crit.dedup();

    let mut pieces = Vec::with_capacity(crit.len());
    for (k, &s) in crit.iter().enumerate() {
        let (gv, gi) = g(s);
        let value = sinks.cumulative(s) + gv.max(0.0);
        let chain_start = if gv > 0.0 { gi } else { NONE };
        let s_hi = if k + 1 < crit.len() { crit[k + 1] } else { s };
        // s-piece [s, s_hi) maps to z-piece (-s_hi, -s]; normalise -0.0.
        let neg = |v: f64| if v == 0.0 { 0.0 } else { -v };
        pieces.push(Piece {
            value,
            z_lo: neg(s_hi),
            z_hi: neg(s),
            chain_start,
        });
    }
    BoundaryProfile { pieces }
}

/// Value-only suffix DP: `dp2[i]` = maximal chain value starting at i.
fn suffix_values(pts: &[Point]) -> Vec<f64> {
    let rev: Vec<Point> = pts
        .iter()
        .rev()
        .map(|p| Point {
            x: -p.x,
            t: -p.t,
            w: p.w,
        })
        .collect();
    let rev_dp = chain_values(&rev, |_| 0.0);
    let n = pts.len();
    let mut dp2 = vec![0.0f64; n];
    for i in 0..n {
        dp2[i] = rev_dp[n - 1 - i];
    }
    dp2
}

/// Suffix chain DP: `dp2[i]` = maximal chain value starting at point i and
/// increasing from there, plus the predecessor structure in reflected
/// coordinates (used to rebuild the chain forward).
fn suffix_dp(pts: &[Point]) -> (Vec<f64>, DpOut, Vec<Point>) {
    let rev: Vec<Point> = pts
        .iter()
        .rev()
        .map(|p| Point {
            x: -p.x,
            t: -p.t,
            w: p.w,
        })
        .collect();
    let out = chain_dp(&rev, |_| 0.0);
    let n = pts.len();
    let mut dp2 = vec![0.0f64; n];
    for i in 0..n {
        dp2[i] = out.dp[n - 1 - i];
    }
    (dp2, out, rev)
}

/// Rebuild the forward interior chain starting at original index `start`.
fn chain_forward(pts: &[Point], rev_out: &DpOut, rev_pts: &[Point], start: u32) -> Vec<Point> {
    if start == NONE {
        return Vec::new();
    }
    let n = pts.len();
    let rev_start = n - 1 - start as usize;
    rev_out
        .chain_from(rev_pts, rev_start)
        .into_iter()
        .rev()
        .map(|p| Point {
            x: -p.x,
            t: -p.t,
            w: p.w,
        })
        .collect()
}

/// Boundary last passage `L_nu(x, t) = sup_{z <= x} { nu(z) + L((z,0),(x,t)) }`
/// with the supremum truncated to `z in [z_min, x]`.
///
/// Returns the value, the rightmost maximizer as `exit`, and a saturation
/// flag when the maximizer sits against the truncation window (at most one
/// window atom strictly left of it), in which case the caller should retry
/// with a wider window.
pub fn boundary_last_passage(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
    z_min: f64,
) -> Result<PassageResult> {
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    if z_min > x {
        return Err(Error::invalid("empty truncation window"));
    }
    let in_window = nu
        .positions()
        .iter()
        .any(|&p| p >= z_min && p <= x);
    if !in_window && !(z_min <= 0.0 && 0.0 <= x) {
        return Err(Error::invalid(
            "window must meet the support of nu or contain the origin",
        ));
    }

    let pts = usable(points, (z_min, 0.0), (x, t));
    let (dp2, rev_out, rev_pts) = suffix_dp(&pts);
    let profile = source_profile(
        &pts,
        &dp2,
        &|z| nu.cumulative(z),
        nu.positions(),
        z_min,
        x,
    );
    let value = profile.value();
    let (exit, _leftmost, chain_start) = profile.exits();
    let geodesic = PassagePath {
        points: chain_forward(&pts, &rev_out, &rev_pts, chain_start),
    };
    let atoms_left_of_exit = nu
        .positions()
        .iter()
        .filter(|&&p| p >= z_min && p < exit)
        .count();
    let saturated = atoms_left_of_exit <= 1;
    Ok(PassageResult {
        value,
        geodesic,
        exit: Some(exit),
        exit_sup: None,
        exit_inf: None,
        saturated,
    })
}

/// Sources-and-sinks passage over the box `[0, x] x [0, t]`:
///
/// ```text
/// L(x,t) = max{ sup_{0<=z<=x} { nu(z) + L((z,0),(x,t)) },
///               sup_{0<s<=t}  { nu*(s) + L((0,s),(x,t)) } }
/// ```
///
/// `exit_sup`/`exit_inf` are the rightmost/leftmost maximizers over
/// `z in [-t, x]` with sink entries mapped to `z = -s`.
pub fn sources_sinks_passage(
    ss: &SourcesSinks,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
) -> Result<PassageResult> {
    solve_sources_sinks(ss, points, x, t, true)
}

/// Bulk-replica variant that skips materialising the maximizing chain
/// (`geodesic` comes back empty); values and exits are identical.
pub fn sources_sinks_passage_bulk(
    ss: &SourcesSinks,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
) -> Result<PassageResult> {
    solve_sources_sinks(ss, points, x, t, false)
}

fn solve_sources_sinks(
    ss: &SourcesSinks,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
    want_chain: bool,
) -> Result<PassageResult> {
    if x < 0.0 || t < 0.0 {
        return Err(Error::invalid("x and t must be nonnegative"));
    }
    ss.validate_box(x, t)?;

    let pts = usable(points, (0.0, 0.0), (x, t));
    let (dp2, full) = if want_chain {
        let (dp2, rev_out, rev_pts) = suffix_dp(&pts);
        (dp2, Some((rev_out, rev_pts)))
    } else {
        (suffix_values(&pts), None)
    };

    let sink_prof = sink_profile(&pts, &dp2, &ss.sinks, t);
    let src_prof = source_profile(
        &pts,
        &dp2,
        &|z| ss.sources.cumulative(z),
        ss.sources.positions(),
        0.0,
        x,
    );

    let value = src_prof.value().max(sink_prof.value());
    let mut right = f64::NEG_INFINITY;
    let mut left = f64::INFINITY;
    let mut chain = NONE;
    for prof in [&sink_prof, &src_prof] {
        for p in &prof.pieces {
            if p.value == value {
                if p.z_hi > right {
                    right = p.z_hi;
                }
                if p.z_lo < left {
                    left = p.z_lo;
                }
                chain = p.chain_start;
            }
        }
    }
    let geodesic = match &full {
        Some((rev_out, rev_pts)) => PassagePath {
            points: chain_forward(&pts, rev_out, rev_pts, chain),
        },
        None => PassagePath::empty(),
    };
    Ok(PassageResult {
        value,
        geodesic,
        exit: None,
        exit_sup: Some(right),
        exit_inf: Some(left),
        saturated: false,
    })
}

/// Boundary data accepted by [`flux_measure`].
pub enum FluxBoundary<'a> {
    /// A measure on the line; the supremum is truncated at `z_min`.
    Measure { nu: &'a AtomicMeasure, z_min: f64 },
    /// A sources-and-sinks box.
    Box(&'a SourcesSinks),
}

/// Flux through the t-axis: the increments of `t -> L_nu(0, t)` over the
/// given time grid, returned as an atomic measure on the grid times.
pub fn flux_measure(
    boundary: &FluxBoundary,
    points: &WeightedPointSet,
    time_grid: &[f64],
) -> Result<AtomicMeasure> {
    if time_grid.is_empty() {
        return Ok(AtomicMeasure::empty());
    }
    if time_grid[0] < 0.0 || time_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("time grid must be nonnegative, increasing"));
    }
    let mut atoms = Vec::new();
    let mut prev = 0.0;
    for &tau in time_grid {
        let v = match boundary {
            FluxBoundary::Measure { nu, z_min } => {
                boundary_last_passage(nu, points, 0.0, tau, *z_min)?.value
            }
            FluxBoundary::Box(ss) => {
                // At x = 0 only the column [0,0] x (0, tau] of the box is in
                // play: sources right of 0 and later sinks cannot contribute.
                let col = SourcesSinks::new(
                    ss.sources.restrict(0.0, 0.0),
                    ss.sinks.restrict(0.0, tau),
                );
                sources_sinks_passage(&col, points, 0.0, tau)?.value
            }
        };
        if v < prev - 1e-12 {
            return Err(Error::invalid("flux decreased along the grid"));
        }
        if v > prev {
            atoms.push((tau, v - prev));
        }
        prev = v;
    }
    AtomicMeasure::new(atoms)
}

/// The limiting shape `gamma * sqrt(x t)`.
pub fn shape_function(x: f64, t: f64, gamma: f64) -> Result<f64> {
    if x <= 0.0 || t <= 0.0 || gamma <= 0.0 {
        return Err(Error::invalid("shape function requires positive inputs"));
    }
    Ok(gamma * (x * t).sqrt())
}

/// Companion curvature predicate for the shape function: checks
/// `f(t+s, t) - f(t, t) <= gamma*s/2 - gamma*s^2/(32 t)` for `s <= 8t` and
/// `<= gamma*s/sqrt(8)` for `s >= 8t`.
pub fn curvature_bounds_hold(s: f64, t: f64, gamma: f64) -> bool {
    if s < 0.0 || t <= 0.0 || gamma <= 0.0 {
        return false;
    }
    let lhs = gamma * ((t * (t + s)).sqrt() - t);
    if s <= 8.0 * t {
        lhs <= gamma * s / 2.0 - gamma * s * s / (32.0 * t) + 1e-9 * gamma * t.max(s)
    } else {
        lhs <= gamma * s / 8f64.sqrt() + 1e-9 * gamma * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{sample_point_set, Rect, WeightDistribution};
    use approx::assert_relative_eq;

    fn ps(rect: (f64, f64, f64, f64), pts: &[(f64, f64, f64)]) -> WeightedPointSet {
        WeightedPointSet::from_points(
            Rect::new(rect.0, rect.1, rect.2, rect.3).unwrap(),
            pts.iter().map(|&(x, t, w)| Point { x, t, w }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_passage_is_zero() {
        let p = ps((0.0, 10.0, 0.0, 10.0), &[]);
        assert_eq!(last_passage(&p, (0.0, 0.0), (10.0, 10.0)).unwrap(), 0.0);
        assert!(lowest_geodesic(&p, (0.0, 0.0), (10.0, 10.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn chain_of_two_points() {
        let p = ps((0.0, 10.0, 0.0, 10.0), &[(4.0, 3.0, 4.0), (6.0, 8.0, 7.0)]);
        assert_eq!(last_passage(&p, (0.0, 0.0), (10.0, 10.0)).unwrap(), 11.0);
    }

    #[test]
    fn antichain_takes_best_single_point() {
        let p = ps((0.0, 3.0, 0.0, 3.0), &[(1.0, 2.0, 3.0), (2.0, 1.0, 5.0)]);
        assert_eq!(last_passage(&p, (0.0, 0.0), (3.0, 3.0)).unwrap(), 5.0);
    }

    #[test]
    fn invalid_endpoints_rejected() {
        let p = ps((0.0, 3.0, 0.0, 3.0), &[]);
        assert!(last_passage(&p, (1.0, 1.0), (1.0, 1.0)).is_err());
        assert!(last_passage(&p, (2.0, 0.0), (1.0, 3.0)).is_err());
    }

    #[test]
    fn south_west_excluded_north_east_included() {
        let p = ps(
            (0.0, 4.0, 0.0, 4.0),
            &[(1.0, 0.0, 10.0), (0.0, 1.0, 10.0), (4.0, 4.0, 1.0)],
        );
        // points sharing a coordinate with p=(0,0) are left out; the corner
        // q=(4,4) itself is usable.
        assert_eq!(last_passage(&p, (0.0, 0.0), (4.0, 4.0)).unwrap(), 1.0);
    }

    #[test]
    fn geodesic_of_single_chain_is_that_chain() {
        let pts = [(1.0, 1.0, 1.0), (2.0, 3.0, 2.0), (5.0, 4.0, 1.5)];
        let p = ps((0.0, 6.0, 0.0, 6.0), &pts);
        let g = lowest_geodesic(&p, (0.0, 0.0), (6.0, 6.0)).unwrap();
        assert_eq!(g.len(), 3);
        assert_relative_eq!(g.value(), 4.5);
        assert_eq!(
            last_passage(&p, (0.0, 0.0), (6.0, 6.0)).unwrap(),
            g.value()
        );
    }

    #[test]
    fn geodesic_prefers_lower_of_two_equal_chains() {
        // Two disjoint maximizers of equal value; the lower one (larger x,
        // smaller t) must be returned.
        let p = ps(
            (0.0, 3.0, 0.0, 3.0),
            &[(1.0, 2.0, 1.0), (2.0, 1.0, 1.0)],
        );
        let g = lowest_geodesic(&p, (0.0, 0.0), (3.0, 3.0)).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.points()[0].x, 2.0);
        assert_eq!(g.points()[0].t, 1.0);
    }

    #[test]
    fn geodesic_value_matches_passage_on_random_instances() {
        for seed in 0..200 {
            let rect = Rect::new(0.0, 12.0, 0.0, 12.0).unwrap();
            let pts =
                sample_point_set(rect, 0.35, &WeightDistribution::Exponential { rate: 1.0 }, seed)
                    .unwrap();
            let v = last_passage(&pts, (0.0, 0.0), (12.0, 12.0)).unwrap();
            let g = lowest_geodesic(&pts, (0.0, 0.0), (12.0, 12.0)).unwrap();
            assert_relative_eq!(v, g.value(), max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_dominant_atom_wins() {
        let nu = AtomicMeasure::new(vec![(5.0, 1e6)]).unwrap();
        let pts = ps((-10.0, 5.0, 0.0, 5.0), &[(1.0, 1.0, 1.0), (3.0, 2.0, 2.0)]);
        let r = boundary_last_passage(&nu, &pts, 5.0, 5.0, -10.0).unwrap();
        assert!(r.value >= 1e6);
        assert_eq!(r.exit, Some(5.0));
    }

    #[test]
    fn boundary_no_points_exit_at_x() {
        let nu = AtomicMeasure::new(vec![(-1.0, 1.0), (1.0, 2.0), (2.0, 1.0)]).unwrap();
        let pts = ps((-5.0, 4.0, 0.0, 4.0), &[]);
        let r = boundary_last_passage(&nu, &pts, 4.0, 4.0, -5.0).unwrap();
        assert_eq!(r.value, nu.cumulative(4.0));
        assert_eq!(r.exit, Some(4.0));
    }

    #[test]
    fn boundary_empty_window_rejected() {
        let nu = AtomicMeasure::new(vec![(1.0, 1.0)]).unwrap();
        let pts = ps((0.0, 4.0, 0.0, 4.0), &[]);
        assert!(boundary_last_passage(&nu, &pts, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn sources_only_exit_sup_is_x() {
        let x = 6.0;
        let ss = SourcesSinks::new(
            AtomicMeasure::new(vec![(x / 2.0, 5.0)]).unwrap(),
            AtomicMeasure::empty(),
        );
        let pts = ps((0.0, 6.0, 0.0, 6.0), &[]);
        let r = sources_sinks_passage(&ss, &pts, x, 6.0).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.exit_sup, Some(x));
        assert_eq!(r.exit_inf, Some(x / 2.0));
        assert_eq!(r.z_plus(), Some(x));
    }

    #[test]
    fn degenerate_time_zero_box() {
        let ss = SourcesSinks::new(
            AtomicMeasure::new(vec![(1.0, 2.0), (3.0, 1.0)]).unwrap(),
            AtomicMeasure::empty(),
        );
        let pts = ps((0.0, 4.0, 0.0, 4.0), &[]);
        let r = sources_sinks_passage(&ss, &pts, 4.0, 0.0).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.exit_sup, Some(4.0));
    }

    #[test]
    fn negative_box_rejected() {
        let ss = SourcesSinks::new(AtomicMeasure::empty(), AtomicMeasure::empty());
        let pts = ps((0.0, 4.0, 0.0, 4.0), &[]);
        assert!(sources_sinks_passage(&ss, &pts, -1.0, 4.0).is_err());
    }

    #[test]
    fn flux_zero_without_left_mass_or_sinks() {
        let nu = AtomicMeasure::new(vec![(1.0, 2.0), (3.0, 1.0)]).unwrap();
        let pts = ps((-5.0, 4.0, 0.0, 10.0), &[(1.0, 1.0, 1.0), (2.0, 5.0, 1.0)]);
        let f = flux_measure(
            &FluxBoundary::Measure { nu: &nu, z_min: -5.0 },
            &pts,
            &[2.0, 5.0, 10.0],
        )
        .unwrap();
        assert_eq!(f.total_mass(), 0.0);
    }

    #[test]
    fn shape_function_values() {
        assert_eq!(shape_function(1.0, 1.0, 2.0).unwrap(), 2.0);
        assert_eq!(shape_function(4.0, 1.0, 2.0).unwrap(), 4.0);
        assert!(shape_function(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn staircase_path_matches_fenwick_at_scale() {
        // unit weights with integer bases take the staircase; the Fenwick
        // sweep is the reference
        let rect = Rect::new(0.0, 120.0, 0.0, 120.0).unwrap();
        let ps = sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, 2024).unwrap();
        let base = |p: &Point| (p.x / 7.0).floor().max(0.0);
        let fast = chain_values(ps.points(), base);
        let slow = chain_dp(ps.points(), base).dp;
        assert_eq!(fast.len(), slow.len());
        for (i, (a, b)) in fast.iter().zip(&slow).enumerate() {
            assert_eq!(a, b, "index {i}");
        }
        // a negative-integer base exercises the sparse staircase
        let base_neg = |p: &Point| if p.x > 60.0 { -3.0 } else { f64::NEG_INFINITY };
        let fast = chain_values(ps.points(), base_neg);
        let slow = chain_dp(ps.points(), base_neg).dp;
        assert_eq!(fast, slow);
    }

    #[test]
    fn curvature_predicate_on_grid() {
        for i in 1..40 {
            for j in 1..40 {
                let s = i as f64 * 0.7;
                let t = j as f64 * 0.3;
                assert!(curvature_bounds_hold(s, t, 2.0), "s={s} t={t}");
            }
        }
    }
}
