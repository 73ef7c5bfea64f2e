//! Splits the positive x-axis at the critical points of `F` and derives the
//! two limit-cycle count bounds: `2n - 1` from the degree and `2m + 1` from
//! the `m` positive critical points (one per interval interior, one per border).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// The last interval extends to infinity; `hi` is its numerical truncation.
    pub unbounded: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPartition {
    pub critical_points: Vec<f64>,
    pub intervals: Vec<Interval>,
    pub x_max: f64,
}

impl CriticalPartition {
    /// Partition with no interior borders, `[0, x_max]`.
    pub fn single(x_max: f64) -> Self {
        Self::from_critical_points(Vec::new(), x_max)
    }

    /// Tiles `(0, x_max]` at the given sorted positive points.
    pub fn from_critical_points(critical_points: Vec<f64>, x_max: f64) -> Self {
        let mut intervals = Vec::with_capacity(critical_points.len() + 1);
        let mut lo = 0.0;
        for &c in &critical_points {
            intervals.push(Interval {
                lo,
                hi: c,
                unbounded: false,
            });
            lo = c;
        }
        intervals.push(Interval {
            lo,
            hi: x_max,
            unbounded: true,
        });
        Self {
            critical_points,
            intervals,
            x_max,
        }
    }

    pub fn m(&self) -> usize {
        self.critical_points.len()
    }

    /// Index of the interval whose interior holds `x`, or `None` when `x` is
    /// within `border_tol` of a critical point (or outside `(0, x_max]`).
    pub fn interior_index(&self, x: f64, border_tol: f64) -> Option<usize> {
        if self.is_border(x, border_tol) {
            return None;
        }
        self.intervals.iter().position(|iv| x > iv.lo && x < iv.hi)
    }

    /// Index of the closed interval holding `x`; ties go to the left interval.
    pub fn interval_index(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| iv.contains(x))
    }

    pub fn is_border(&self, x: f64, border_tol: f64) -> bool {
        self.critical_points
            .iter()
            .any(|&c| (x - c).abs() <= border_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub m: usize,
    pub degree_bound: usize,
    pub partition_bound: usize,
}

impl BoundReport {
    pub fn new(f: &Polynomial, partition: &CriticalPartition) -> Result<Self> {
        let n = f.degree();
        Ok(Self {
            n,
            m: partition.m(),
            degree_bound: degree_bound(n)?,
            partition_bound: partition_bound(partition),
        })
    }
}

fn ensure_nonconstant(f: &Polynomial) -> Result<()> {
    if f.degree() == 0 {
        return Err(Error::DegenerateInput(format!(
            "F must be nonconstant, got {f}"
        )));
    }
    Ok(())
}

/// Distinct roots of `F'` in `(0, x_max]`, sorted. `x_max` may be infinite.
pub fn positive_critical_points(f: &Polynomial, x_max: f64) -> Result<Vec<f64>> {
    ensure_nonconstant(f)?;
    if !(x_max > 0.0) {
        return Err(Error::DegenerateInput(format!("x_max must be positive, got {x_max}")));
    }
    let df = f.derivative();
    if df.degree() == 0 {
        return Ok(Vec::new());
    }
    let roots = df.real_roots(0.0, x_max)?;
    Ok(roots.values().into_iter().filter(|&r| r > 0.0).collect())
}

/// Ten times past the largest critical point, or 10 with none.
pub fn default_x_max(critical_points: &[f64]) -> f64 {
    match critical_points.last() {
        Some(&c) => 10.0 * (1.0 + c),
        None => 10.0,
    }
}

/// Builds the partition. With `x_max = None` the truncation follows
/// [`default_x_max`]; critical points beyond an explicit `x_max` are dropped.
pub fn build_partition(f: &Polynomial, x_max: Option<f64>) -> Result<CriticalPartition> {
    let all = positive_critical_points(f, f64::INFINITY)?;
    let x_max = x_max.unwrap_or_else(|| default_x_max(&all));
    if !(x_max > 0.0) {
        return Err(Error::DegenerateInput(format!("x_max must be positive, got {x_max}")));
    }
    let kept: Vec<f64> = all.into_iter().filter(|&c| c < x_max).collect();
    Ok(CriticalPartition::from_critical_points(kept, x_max))
}

pub fn degree_bound(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(Error::DegenerateInput("degree bound needs n >= 1".into()));
    }
    Ok(2 * n - 1)
}

pub fn partition_bound(p: &CriticalPartition) -> usize {
    2 * p.m() + 1
}

/// Smallest parameter in `[lo, hi]` at which `has_property` switches on,
/// located by bisection to width `tol`. The property must be off at `lo` and
/// on at `hi`.
pub fn bisect_onset<P>(mut lo: f64, mut hi: f64, tol: f64, has_property: P) -> Result<f64>
where
    P: Fn(f64) -> bool,
{
    if has_property(lo) || !has_property(hi) {
        return Err(Error::DegenerateInput(format!(
            "onset is not bracketed by [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if has_property(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
