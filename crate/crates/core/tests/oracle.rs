//! Exhaustive-enumeration oracles for the passage operations.
//!
//! Every oracle here is built from the definitions alone: chains are
//! enumerated as subsets, boundary problems evaluate the candidate profile
//! pointwise with brute-force chain maxima, and exits follow the
//! sup/inf-of-argmax definitions. None of it shares code with the sweep
//! implementations it checks.

use lpplab_core::lpp::{
    boundary_last_passage, flux_measure, last_passage, lowest_geodesic, sources_sinks_passage,
    FluxBoundary, SourcesSinks,
};
use lpplab_core::points::{
    sample_atomic_poisson, sample_point_set, AtomicMeasure, Point, Rect, WeightDistribution,
    WeightedPointSet,
};
use lpplab_core::seeding::derive_seed;
use lpplab_core::fluid::worked_example_box;

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// All maximal chain weights by subset enumeration (n <= ~16).
fn brute_chain_max(pts: &[Point]) -> f64 {
    let n = pts.len();
    assert!(n <= 20, "oracle instance too large");
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let mut ok = true;
        let mut sum = 0.0;
        let mut prev: Option<Point> = None;
        for (i, p) in pts.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            if let Some(q) = prev {
                // points are sorted by (x, t); a valid chain is strictly
                // increasing in both coordinates
                if !(p.x > q.x && p.t > q.t) {
                    ok = false;
                    break;
                }
            }
            sum += p.w;
            prev = Some(*p);
        }
        if ok && sum > best {
            best = sum;
        }
    }
    best
}

fn in_rect(p: &Point, sw: (f64, f64), ne: (f64, f64)) -> bool {
    p.x > sw.0 && p.x <= ne.0 && p.t > sw.1 && p.t <= ne.1
}

fn brute_last_passage(points: &WeightedPointSet, sw: (f64, f64), ne: (f64, f64)) -> f64 {
    let pts: Vec<Point> = points
        .points()
        .iter()
        .copied()
        .filter(|p| in_rect(p, sw, ne))
        .collect();
    brute_chain_max(&pts)
}

/// All maximizing chains (as index lists) by enumeration.
fn brute_maximizers(pts: &[Point]) -> Vec<Vec<usize>> {
    let n = pts.len();
    let best = brute_chain_max(pts);
    let mut out = Vec::new();
    if best == 0.0 {
        return out;
    }
    for mask in 0u32..(1 << n) {
        let mut ok = true;
        let mut sum = 0.0;
        let mut prev: Option<Point> = None;
        let mut chain = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            if let Some(q) = prev {
                if !(p.x > q.x && p.t > q.t) {
                    ok = false;
                    break;
                }
            }
            sum += p.w;
            prev = Some(*p);
            chain.push(i);
        }
        if ok && sum == best {
            out.push(chain);
        }
    }
    out
}

/// Staircase height of a chain at abscissa `x` (the lowest increasing
/// continuous path through the chain, starting at `sw`).
fn staircase(pts: &[Point], chain: &[usize], sw: (f64, f64), x: f64) -> f64 {
    let mut h = sw.1;
    for &i in chain {
        if pts[i].x <= x {
            h = pts[i].t;
        }
    }
    h
}

#[test]
fn passage_matches_enumeration_on_random_instances() {
    for seed in 0..400u64 {
        let rect = Rect::new(0.0, 10.0, 0.0, 10.0).unwrap();
        let dist = if seed % 2 == 0 {
            WeightDistribution::Dirac1
        } else {
            WeightDistribution::Exponential { rate: 1.0 }
        };
        let ps = sample_point_set(rect, 0.12, &dist, derive_seed(99, &[seed])).unwrap();
        if ps.len() > 14 {
            continue;
        }
        let got = last_passage(&ps, (0.0, 0.0), (10.0, 10.0)).unwrap();
        let want = brute_last_passage(&ps, (0.0, 0.0), (10.0, 10.0));
        assert!(approx(got, want), "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn passage_handles_coordinate_ties() {
    // hand-built ties: two points sharing x, two sharing t
    let rect = Rect::new(0.0, 4.0, 0.0, 4.0).unwrap();
    let pts = WeightedPointSet::from_points(
        rect,
        vec![
            Point { x: 1.0, t: 1.0, w: 1.0 },
            Point { x: 1.0, t: 2.0, w: 1.0 },
            Point { x: 2.0, t: 3.0, w: 1.0 },
            Point { x: 3.0, t: 3.0, w: 1.0 },
        ],
    )
    .unwrap();
    let got = last_passage(&pts, (0.0, 0.0), (4.0, 4.0)).unwrap();
    let want = brute_last_passage(&pts, (0.0, 0.0), (4.0, 4.0));
    assert_eq!(got, want);
    assert_eq!(got, 2.0);
}

#[test]
fn lowest_geodesic_is_pointwise_minimum_of_maximizers() {
    // unit weights force plenty of value ties
    for seed in 0..400u64 {
        let rect = Rect::new(0.0, 8.0, 0.0, 8.0).unwrap();
        let ps = sample_point_set(
            rect,
            0.15,
            &WeightDistribution::Dirac1,
            derive_seed(7, &[seed]),
        )
        .unwrap();
        if ps.len() > 14 || ps.is_empty() {
            continue;
        }
        let pts: Vec<Point> = ps
            .points()
            .iter()
            .copied()
            .filter(|p| in_rect(p, (0.0, 0.0), (8.0, 8.0)))
            .collect();
        let maximizers = brute_maximizers(&pts);
        if maximizers.is_empty() {
            continue;
        }
        // probe abscissae: all point x's and midpoints
        let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        xs.push(0.0);
        xs.push(8.0);
        xs.sort_by(|a, b| a.total_cmp(b));
        let mut probes = xs.clone();
        probes.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));

        // the pointwise-lowest staircase over all maximizers
        let heights: Vec<Vec<f64>> = maximizers
            .iter()
            .map(|c| probes.iter().map(|&x| staircase(&pts, c, (0.0, 0.0), x)).collect())
            .collect();
        let min_profile: Vec<f64> = (0..probes.len())
            .map(|j| heights.iter().map(|h| h[j]).fold(f64::INFINITY, f64::min))
            .collect();
        // the lattice property: some maximizer attains the minimum profile
        let bottom = heights
            .iter()
            .position(|h| h.iter().zip(&min_profile).all(|(a, b)| a == b))
            .expect("minimum of maximizers is a maximizer");

        let got = lowest_geodesic(&ps, (0.0, 0.0), (8.0, 8.0)).unwrap();
        let want: Vec<Point> = maximizers[bottom].iter().map(|&i| pts[i]).collect();
        assert_eq!(got.points(), &want[..], "seed {seed}");
    }
}

#[test]
fn lowest_geodesic_crafted_crossing_instance() {
    // two maximizers crossing twice; the bottom element mixes them
    let rect = Rect::new(0.0, 11.0, 0.0, 21.0).unwrap();
    let mk = |x: f64, t: f64| Point { x, t, w: 1.0 };
    let pts = WeightedPointSet::from_points(
        rect,
        vec![
            mk(1.0, 10.0),
            mk(2.0, 1.0),
            mk(3.0, 11.0),
            mk(4.0, 2.0),
            mk(5.0, 20.0),
            mk(10.0, 12.0),
        ],
    )
    .unwrap();
    let g = lowest_geodesic(&pts, (0.0, 0.0), (11.0, 21.0)).unwrap();
    let coords: Vec<(f64, f64)> = g.points().iter().map(|p| (p.x, p.t)).collect();
    assert_eq!(coords, vec![(2.0, 1.0), (4.0, 2.0), (10.0, 12.0)]);
}

// ---------------------------------------------------------------------------
// Boundary problems
// ---------------------------------------------------------------------------

/// Definitional boundary oracle: evaluate `nu(z) + L((z,0),(x,t))` on every
/// constancy piece, take the max, and read the rightmost/leftmost maximizer
/// as sup/inf of the argmax set.
fn brute_boundary(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
    z_min: f64,
) -> (f64, f64, f64) {
    let mut crit: Vec<f64> = vec![z_min, x];
    crit.extend(nu.positions().iter().copied().filter(|&p| p > z_min && p <= x));
    crit.extend(
        points
            .points()
            .iter()
            .map(|p| p.x)
            .filter(|&c| c > z_min && c < x),
    );
    crit.sort_by(|a, b| a.total_cmp(b));
    crit.dedup();

    let eval = |z: f64| -> f64 {
        let pts: Vec<Point> = points
            .points()
            .iter()
            .copied()
            .filter(|p| p.x > z && p.x <= x && p.t > 0.0 && p.t <= t)
            .collect();
        nu.cumulative(z) + brute_chain_max(&pts)
    };
    let vals: Vec<f64> = crit.iter().map(|&c| eval(c)).collect();
    let v = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = crit.len() - 1;
    let j = (0..crit.len()).rev().find(|&i| vals[i] == v).unwrap();
    let right = if j == last { x } else { crit[j + 1] };
    let i = (0..crit.len()).find(|&i| vals[i] == v).unwrap();
    let left = crit[i];
    (v, right, left)
}

#[test]
fn boundary_matches_enumeration() {
    for seed in 0..250u64 {
        let rect = Rect::new(-6.0, 6.0, 0.0, 6.0).unwrap();
        let ps = sample_point_set(
            rect,
            0.12,
            &WeightDistribution::Exponential { rate: 1.0 },
            derive_seed(31, &[seed]),
        )
        .unwrap();
        if ps.len() > 12 {
            continue;
        }
        let nu = sample_atomic_poisson(
            (-6.0, 6.0),
            0.5,
            &WeightDistribution::Exponential { rate: 0.5 },
            derive_seed(32, &[seed]),
        )
        .unwrap();
        if nu.len() > 8 || nu.is_empty() {
            continue;
        }
        let r = boundary_last_passage(&nu, &ps, 6.0, 6.0, -6.0).unwrap();
        let (v, right, _left) = brute_boundary(&nu, &ps, 6.0, 6.0, -6.0);
        assert!(approx(r.value, v), "seed {seed}: {} vs {v}", r.value);
        assert_eq!(r.exit, Some(right), "seed {seed}");
    }
}

/// Definitional sources-and-sinks oracle over `z in [-t, x]`.
fn brute_sources_sinks(
    ss: &SourcesSinks,
    points: &WeightedPointSet,
    x: f64,
    t: f64,
) -> (f64, f64, f64) {
    // pieces: (z_lo, z_hi, value)
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();

    let usable: Vec<Point> = points
        .points()
        .iter()
        .copied()
        .filter(|p| p.x > 0.0 && p.x <= x && p.t > 0.0 && p.t <= t)
        .collect();

    // sink side: s in (0, t], z = -s
    let mut s_crit: Vec<f64> = vec![0.0, t];
    s_crit.extend(ss.sinks.positions().iter().copied().filter(|&s| s > 0.0 && s <= t));
    s_crit.extend(usable.iter().map(|p| p.t).filter(|&c| c > 0.0 && c < t));
    s_crit.sort_by(|a, b| a.total_cmp(b));
    s_crit.dedup();
    for (k, &s) in s_crit.iter().enumerate() {
        let pts: Vec<Point> = usable.iter().copied().filter(|p| p.t > s).collect();
        let v = ss.sinks.cumulative(s) + brute_chain_max(&pts);
        let s_hi = if k + 1 < s_crit.len() { s_crit[k + 1] } else { s };
        let neg = |u: f64| if u == 0.0 { 0.0 } else { -u };
        pieces.push((neg(s_hi), neg(s), v));
    }

    // source side: z in [0, x]
    let mut z_crit: Vec<f64> = vec![0.0, x];
    z_crit.extend(ss.sources.positions().iter().copied().filter(|&p| p > 0.0 && p <= x));
    z_crit.extend(usable.iter().map(|p| p.x).filter(|&c| c > 0.0 && c < x));
    z_crit.sort_by(|a, b| a.total_cmp(b));
    z_crit.dedup();
    for (k, &z) in z_crit.iter().enumerate() {
        let pts: Vec<Point> = usable.iter().copied().filter(|p| p.x > z).collect();
        let v = ss.sources.cumulative(z) + brute_chain_max(&pts);
        let z_hi = if k + 1 < z_crit.len() { z_crit[k + 1] } else { z };
        pieces.push((z, z_hi, v));
    }

    let v = pieces.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let right = pieces
        .iter()
        .filter(|p| p.2 == v)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let left = pieces
        .iter()
        .filter(|p| p.2 == v)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    (v, right, left)
}

#[test]
fn sources_sinks_matches_enumeration() {
    for seed in 0..250u64 {
        let rect = Rect::new(0.0, 6.0, 0.0, 6.0).unwrap();
        let ps = sample_point_set(
            rect,
            0.25,
            &WeightDistribution::Dirac1,
            derive_seed(41, &[seed]),
        )
        .unwrap();
        if ps.len() > 12 {
            continue;
        }
        let sources = sample_atomic_poisson(
            (0.0, 6.0),
            0.6,
            &WeightDistribution::Dirac1,
            derive_seed(42, &[seed]),
        )
        .unwrap();
        let sinks = sample_atomic_poisson(
            (0.0, 6.0),
            0.6,
            &WeightDistribution::Dirac1,
            derive_seed(43, &[seed]),
        )
        .unwrap();
        if sources.len() > 6 || sinks.len() > 6 {
            continue;
        }
        let ss = SourcesSinks::new(sources, sinks);
        let r = sources_sinks_passage(&ss, &ps, 6.0, 6.0).unwrap();
        let (v, right, left) = brute_sources_sinks(&ss, &ps, 6.0, 6.0);
        assert!(approx(r.value, v), "seed {seed}: {} vs {v}", r.value);
        assert_eq!(r.exit_sup, Some(right), "seed {seed}");
        assert_eq!(r.exit_inf, Some(left), "seed {seed}");
        assert!(left <= right, "seed {seed}");
    }
}

#[test]
fn reflection_maps_exits_to_negated_duals() {
    // path-level symmetry: transpose the instance (x <-> t, sources <->
    // sinks); values agree exactly and exit_sup maps to -exit_inf.
    for seed in 0..100u64 {
        let rect = Rect::new(0.0, 8.0, 0.0, 8.0).unwrap();
        let ps = sample_point_set(
            rect,
            0.3,
            &WeightDistribution::Dirac1,
            derive_seed(51, &[seed]),
        )
        .unwrap();
        let sources = sample_atomic_poisson(
            (0.0, 8.0),
            0.7,
            &WeightDistribution::Dirac1,
            derive_seed(52, &[seed]),
        )
        .unwrap();
        let sinks = sample_atomic_poisson(
            (0.0, 8.0),
            0.7,
            &WeightDistribution::Dirac1,
            derive_seed(53, &[seed]),
        )
        .unwrap();

        let transposed = WeightedPointSet::from_points(
            rect,
            ps.points()
                .iter()
                .map(|p| Point { x: p.t, t: p.x, w: p.w })
                .collect(),
        )
        .unwrap();

        let fwd = sources_sinks_passage(
            &SourcesSinks::new(sources.clone(), sinks.clone()),
            &ps,
            8.0,
            8.0,
        )
        .unwrap();
        let rev = sources_sinks_passage(
            &SourcesSinks::new(sinks, sources),
            &transposed,
            8.0,
            8.0,
        )
        .unwrap();
        assert_eq!(fwd.value, rev.value, "seed {seed}");
        assert_eq!(fwd.exit_sup.unwrap(), -rev.exit_inf.unwrap(), "seed {seed}");
        assert_eq!(fwd.exit_inf.unwrap(), -rev.exit_sup.unwrap(), "seed {seed}");
    }
}

#[test]
fn worked_example_flux_values() {
    let (sources, sinks, points, _r, t) = worked_example_box();
    let ss = SourcesSinks::new(sources, sinks);
    let flux = flux_measure(&FluxBoundary::Box(&ss), &points, &[t / 2.0, t]).unwrap();
    assert_eq!(flux.cumulative(t / 2.0), 4.0);
    assert_eq!(flux.cumulative(t), 10.0);
}

#[test]
fn boundary_eight_atoms_eight_points() {
    // fixed mixed instance with atoms and points interleaved
    let nu = AtomicMeasure::new(vec![
        (-4.0, 0.5),
        (-2.5, 1.0),
        (-1.0, 0.25),
        (0.5, 2.0),
        (1.5, 0.5),
        (2.5, 1.5),
        (3.5, 0.75),
        (4.5, 1.0),
    ])
    .unwrap();
    let rect = Rect::new(-5.0, 5.0, 0.0, 5.0).unwrap();
    let pts = WeightedPointSet::from_points(
        rect,
        vec![
            Point { x: -3.0, t: 1.0, w: 1.0 },
            Point { x: -1.5, t: 2.0, w: 0.5 },
            Point { x: 0.2, t: 0.5, w: 2.0 },
            Point { x: 1.0, t: 3.0, w: 1.0 },
            Point { x: 2.0, t: 1.5, w: 0.5 },
            Point { x: 3.0, t: 4.0, w: 1.5 },
            Point { x: 4.0, t: 2.5, w: 1.0 },
            Point { x: 4.8, t: 4.8, w: 0.25 },
        ],
    )
    .unwrap();
    let r = boundary_last_passage(&nu, &pts, 5.0, 5.0, -5.0).unwrap();
    let (v, right, _) = brute_boundary(&nu, &pts, 5.0, 5.0, -5.0);
    assert!(approx(r.value, v));
    assert_eq!(r.exit, Some(right));
}
