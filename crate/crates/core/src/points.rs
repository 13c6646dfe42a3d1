//! Point clouds and one-dimensional atomic measures.
//!
//! A [`WeightedPointSet`] is one realization of a compound Poisson process in
//! a rectangle: planar points carrying i.i.d. positive weights. An
//! [`AtomicMeasure`] is a locally finite positive measure on an interval,
//! used for sources, sinks, fluid states and equilibrium samples. Its signed
//! cumulative process follows the convention
//!
//! ```text
//! nu(x) = nu((0, x])   for x >= 0,
//! nu(x) = -nu((x, 0])  for x < 0,
//! ```
//!
//! which makes `nu` cadlag and nondecreasing with `nu(0) = 0`.

use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Axis-aligned rectangle `[x0, x1] x [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, t0: f64, t1: f64) -> Result<Self> {
        let r = Rect { x0, x1, t0, t1 };
        if !(x0.is_finite() && x1.is_finite() && t0.is_finite() && t1.is_finite()) {
            return Err(Error::invalid("rectangle coordinates must be finite"));
        }
        if x1 <= x0 || t1 <= t0 {
            return Err(Error::invalid(format!(
                "degenerate or inverted rectangle [{x0},{x1}]x[{t0},{t1}]"
            )));
        }
        Ok(r)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.t1 - self.t0)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        x >= self.x0 && x <= self.x1 && t >= self.t0 && t <= self.t1
    }
}

/// A planar point with its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub t: f64,
    pub w: f64,
}

/// Law of the point weights. All supported laws have strictly positive
/// weights and finite exponential moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightDistribution {
    /// Unit weights: the classical Hammersley model.
    Dirac1,
    /// Exponential with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    /// Finitely many positive values with given probabilities.
    BoundedDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightDistribution::Dirac1 => Ok(()),
            WeightDistribution::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    Err(Error::invalid("exponential rate must be positive"))
                } else {
                    Ok(())
                }
            }
            WeightDistribution::BoundedDiscrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid("values/probs must be nonempty, same length"));
                }
                if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return Err(Error::invalid("discrete weight values must be positive"));
                }
                if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
                    return Err(Error::invalid("discrete probabilities must be positive"));
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("discrete probabilities must sum to 1"));
                }
                Ok(())
            }
        }
    }

    /// True when every weight is exactly 1 (enables exact integer arithmetic
    /// downstream and the Burke-style equilibrium constructions).
    pub fn is_unit(&self) -> bool {
        match self {
            WeightDistribution::Dirac1 => true,
            WeightDistribution::BoundedDiscrete { values, .. } => {
                values.iter().all(|v| *v == 1.0)
            }
            _ => false,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightDistribution::Dirac1 => 1.0,
            WeightDistribution::Exponential { rate } => 1.0 / rate,
            WeightDistribution::BoundedDiscrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            WeightDistribution::Dirac1 => 1.0,
            WeightDistribution::Exponential { rate } => {
                Exp::new(*rate).expect("validated rate").sample(rng)
            }
            WeightDistribution::BoundedDiscrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("nonempty")
            }
        }
    }

    /// The square-root tail integral `\int_0^\infty sqrt(1 - F(x)) dx`,
    /// in closed form per distribution kind. Finite for every supported kind.
    pub fn sqrt_tail_integral(&self) -> f64 {
        match self {
            WeightDistribution::Dirac1 => 1.0,
            WeightDistribution::Exponential { rate } => 2.0 / rate,
            WeightDistribution::BoundedDiscrete { values, probs } => {
                // 1 - F is piecewise constant between the sorted values.
                let mut order: Vec<usize> = (0..values.len()).collect();
                order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
                let mut tail: f64 = 1.0;
                let mut prev = 0.0;
                let mut integral = 0.0;
                for &i in &order {
                    integral += (values[i] - prev) * tail.max(0.0).sqrt();
                    tail -= probs[i];
                    prev = values[i];
                }
                integral
            }
        }
    }
}

/// One realization of the compound Poisson process in a rectangle.
///
/// Points are stored sorted by x-coordinate (ties by t) at creation: the
/// passage-time sweep and the fluid event loop both consume sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPointSet {
    pub rect: Rect,
    points: Vec<Point>,
    pub seed: u64,
}

impl WeightedPointSet {
    /// Build from explicit points (used by hand-crafted instances and file
    /// input). Sorts by `(x, t)` and validates containment and positivity.
    pub fn from_points(rect: Rect, mut points: Vec<Point>) -> Result<Self> {
        for p in &points {
            if !rect.contains(p.x, p.t) {
                return Err(Error::invalid(format!(
                    "point ({}, {}) outside rectangle",
                    p.x, p.t
                )));
            }
            if !(p.w.is_finite() && p.w > 0.0) {
                return Err(Error::invalid("point weights must be positive"));
            }
        }
        points.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.t.total_cmp(&b.t)));
        Ok(WeightedPointSet {
            rect,
            points,
            seed: 0,
        })
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

    /// Points strictly inside `(p, q]` in both coordinates, leaving out the
    /// south and west sides (anything sharing a coordinate with `p`).
    pub fn in_open_rect(&self, p: (f64, f64), q: (f64, f64)) -> Vec<Point> {
        self.points
            .iter()
            .copied()
            .filter(|pt| pt.x > p.0 && pt.x <= q.0 && pt.t > p.1 && pt.t <= q.1)
            .collect()
    }

    pub fn to_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,t,w")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.x, p.t, p.w)?;
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(rect: Rect, r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut points = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "x,t,w") {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("short row: {line}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number in '{line}': {e}")))
            };
            points.push(Point {
                x: parse(it.next())?,
                t: parse(it.next())?,
                w: parse(it.next())?,
            });
        }
        WeightedPointSet::from_points(rect, points)
    }
}

/// Sample a compound Poisson point set of the given intensity in `rect`,
/// weights i.i.d. from `dist`. Deterministic for fixed arguments.
pub fn sample_point_set(
    rect: Rect,
    intensity: f64,
    dist: &WeightDistribution,
    seed: u64,
) -> Result<WeightedPointSet> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::invalid("intensity must be positive"));
    }
    Rect::new(rect.x0, rect.x1, rect.t0, rect.t1)?;
    dist.validate()?;
    let mut rng = rng_from_seed(seed);
    let mean = rect.area() * intensity;
    let n = Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rect.x0 + rng.random::<f64>() * (rect.x1 - rect.x0);
        let t = rect.t0 + rng.random::<f64>() * (rect.t1 - rect.t0);
        let w = dist.sample(&mut rng);
        points.push(Point { x, t, w });
    }
    points.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.t.total_cmp(&b.t)));
    Ok(WeightedPointSet { rect, points, seed })
}

/// Which side of the origin a periodic configuration occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A locally finite positive measure with finitely many atoms, positions
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    positions: Vec<f64>,
    masses: Vec<f64>,
    /// prefix[i] = masses[0..i] summed; prefix[len] is the total mass.
    prefix: Vec<f64>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        AtomicMeasure {
            positions: Vec::new(),
            masses: Vec::new(),
            prefix: vec![0.0],
        }
    }

    /// Build from `(position, mass)` pairs; sorts and coalesces atoms at
    /// equal positions. Masses must be positive and finite.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(p, m) in &atoms {
            if !p.is_finite() {
                return Err(Error::invalid("atom position must be finite"));
            }
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid("atom mass must be positive"));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut positions: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            if positions.last() == Some(&p) {
                *masses.last_mut().expect("nonempty") += m;
            } else {
                positions.push(p);
                masses.push(m);
            }
        }
        Ok(Self::from_sorted(positions, masses))
    }

    fn from_sorted(positions: Vec<f64>, masses: Vec<f64>) -> Self {
        let mut prefix = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for m in &masses {
            acc += m;
            prefix.push(acc);
        }
        AtomicMeasure {
            positions,
            masses,
            prefix,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn total_mass(&self) -> f64 {
        *self.prefix.last().expect("prefix nonempty")
    }

    /// Number of atoms at positions `<= x`.
    fn count_le(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| p <= x)
    }

    fn count_lt(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| p < x)
    }

    /// Total mass at positions `<= x` (unsigned).
    pub fn mass_le(&self, x: f64) -> f64 {
        self.prefix[self.count_le(x)]
    }

    /// Mass of the interval `(a, b]` (requires `a <= b`).
    pub fn mass_interval(&self, a: f64, b: f64) -> f64 {
        self.prefix[self.count_le(b)] - self.prefix[self.count_le(a)]
    }

    /// Signed cumulative process: `nu((0,x])` for `x >= 0`, `-nu((x,0])` for
    /// `x < 0`. An atom placed exactly at 0 is never counted.
    pub fn cumulative(&self, x: f64) -> f64 {
        self.prefix[self.count_le(x)] - self.prefix[self.count_le(0.0)]
    }

    /// Left limit of the cumulative process at `x`.
    pub fn cumulative_left(&self, x: f64) -> f64 {
        self.prefix[self.count_lt(x)] - self.prefix[self.count_le(0.0)]
    }

    /// Mass of the single atom exactly at `pos` (0 if none).
    pub fn mass_at(&self, pos: f64) -> f64 {
        match self.positions.binary_search_by(|p| p.total_cmp(&pos)) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }

    /// Restriction to the closed interval `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let a = self.positions.partition_point(|&p| p < lo);
        let b = self.positions.partition_point(|&p| p <= hi);
        Self::from_sorted(self.positions[a..b].to_vec(), self.masses[a..b].to_vec())
    }

    /// Superposition of two measures.
    pub fn merge(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let mut atoms: Vec<(f64, f64)> = self.atoms().chain(other.atoms()).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        AtomicMeasure::new(atoms).expect("merging valid measures")
    }

    /// Measure domination: every atom of `other` is covered at the same
    /// position by at least as much mass of `self`.
    pub fn dominates(&self, other: &AtomicMeasure) -> bool {
        other
            .atoms()
            .all(|(p, m)| self.mass_at(p) >= m - 1e-12 * m.abs().max(1.0))
    }

    pub fn to_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "pos,mass")?;
        for (p, m) in self.atoms() {
            writeln!(w, "{p},{m}")?;
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut atoms = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "pos,mass") {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("short row: {line}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number in '{line}': {e}")))
            };
            atoms.push((parse(it.next())?, parse(it.next())?));
        }
        AtomicMeasure::new(atoms)
    }
}

/// Poisson atomic measure on `[a, b]`: atom positions a Poisson process of
/// the given intensity, masses i.i.d. from `mass_dist`.
pub fn sample_atomic_poisson(
    interval: (f64, f64),
    intensity: f64,
    mass_dist: &WeightDistribution,
    seed: u64,
) -> Result<AtomicMeasure> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid("interval must satisfy a < b"));
    }
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::invalid("intensity must be positive"));
    }
    mass_dist.validate()?;
    let mut rng = rng_from_seed(seed);
    let n = Poisson::new((b - a) * intensity)
        .expect("positive mean")
        .sample(&mut rng) as usize;
    let mut atoms = Vec::with_capacity(n);
    for _ in 0..n {
        let p = a + rng.random::<f64>() * (b - a);
        let m = mass_dist.sample(&mut rng);
        atoms.push((p, m));
    }
    AtomicMeasure::new(atoms)
}

/// Deterministic periodic configuration of unit atoms: on `{k/density, k >= 1}`
/// (right) or `{k/density, k <= -1}` (left), restricted to the closed interval.
pub fn periodic_measure(interval: (f64, f64), density: f64, side: Side) -> Result<AtomicMeasure> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("interval must satisfy lo < hi"));
    }
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::invalid("density must be positive"));
    }
    let mut atoms = Vec::new();
    match side {
        Side::Right => {
            let mut k: i64 = 1.max((lo * density).ceil() as i64);
            loop {
                let pos = k as f64 / density;
                if pos > hi {
                    break;
                }
                if pos >= lo {
                    atoms.push((pos, 1.0));
                }
                k += 1;
            }
        }
        Side::Left => {
            let mut k: i64 = (-1).min((hi * density).floor() as i64);
            loop {
                let pos = k as f64 / density;
                if pos < lo {
                    break;
                }
                if pos <= hi {
                    atoms.push((pos, 1.0));
                }
                k -= 1;
            }
        }
    }
    AtomicMeasure::new(atoms)
}
