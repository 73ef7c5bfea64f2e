//! The amplitude equation `phi * dphi/dx = -x - F'(x) * phi`, where `phi(x)` is
//! the velocity `x'` along an orbit written as a function of `x`. A periodic
//! orbit of amplitude `A` corresponds to a branch with `phi(A) = 0`.
//!
//! Near `phi = 0` the slope `dphi/dx` blows up, so the integrator switches to
//! `dx/dphi = phi / (-x - F'(x) * phi)`, which stays regular while `x != 0`.
//!
//! Every forward shot reaches some `phi = 0`, closed orbit or not, so a shot
//! alone cannot tell a cycle apart from a spiral. The shots supply trial
//! amplitudes; closure is then tested by following the lower (`phi < 0`)
//! branch from `(A, 0)` to the left turning point and the upper branch back
//! to the right one. The orbit closes exactly when it turns again at `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{bracketed_root, DenseStep, Dopri5, Tolerance};
use crate::par::{self, Execution};
use crate::partition::CriticalPartition;
use crate::poly::Polynomial;
use crate::quadrature::{cumulative_curve_integral, unit_tangents};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSample {
    pub x: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ZeroCrossing { x: f64 },
    LeftBoundary,
    RightBoundary,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiTrajectory {
    pub samples: Vec<PhiSample>,
    pub termination: Termination,
    /// Whether the last segment integrated `x` as a function of `phi`.
    pub swapped_variable: bool,
}

impl PhiTrajectory {
    pub fn zero_crossing(&self) -> Option<f64> {
        match self.termination {
            Termination::ZeroCrossing { x } => Some(x),
            _ => None,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.phi).collect()
    }

    /// Linear interpolation of `phi` at `x`; `None` outside the sampled range.
    pub fn phi_at(&self, x: f64) -> Option<f64> {
        self.samples.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            let inside = (a.x - x) * (b.x - x) <= 0.0;
            if !inside {
                return None;
            }
            if a.x == b.x {
                return Some(a.phi);
            }
            Some(a.phi + (b.phi - a.phi) * (x - a.x) / (b.x - a.x))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeCandidate {
    #[serde(rename = "A")]
    pub a: f64,
    pub interval_index: usize,
    pub at_border: bool,
    pub initial_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiGrid {
    pub count: usize,
    pub min_magnitude: f64,
    pub max_magnitude: f64,
}

impl Default for PhiGrid {
    fn default() -> Self {
        Self {
            count: 64,
            min_magnitude: 1e-3,
            max_magnitude: 10.0,
        }
    }
}

impl PhiGrid {
    /// Log-spaced magnitudes, negative values first, ascending.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count.max(1);
        let ratio = self.max_magnitude / self.min_magnitude;
        let mags: Vec<f64> = (0..n)
            .map(|k| {
                if n == 1 {
                    self.min_magnitude
                } else {
                    self.min_magnitude * ratio.powf(k as f64 / (n - 1) as f64)
                }
            })
            .collect();
        mags.iter().rev().map(|m| -m).chain(mags.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiOptions {
    pub tol: Tolerance,
    pub swap_eps: f64,
    /// Switch to `x(phi)` once `|dphi/dx|` exceeds this.
    pub swap_slope: f64,
    /// Switch back to `phi(x)` once `|dphi/dx|` drops below this.
    pub unswap_slope: f64,
    /// Largest step in either independent variable; keeps the samples dense
    /// enough for quadrature over them.
    pub max_step: f64,
    /// `|phi|` beyond this ends the run at the boundary it is heading for.
    pub phi_limit: f64,
    pub max_steps: usize,
    pub grid: PhiGrid,
    pub cluster_radius: f64,
    pub border_tol: f64,
    /// Return mismatch `|A' - A| / (1 + A)` at or below this counts as closed.
    pub closure_tol: f64,
    pub bisection_tol: f64,
    pub execution: Execution,
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::new(1e-9, 1e-12),
            swap_eps: 1e-6,
            swap_slope: 1.0,
            unswap_slope: 0.5,
            max_step: 0.01,
            phi_limit: 1e8,
            max_steps: 100_000,
            grid: PhiGrid::default(),
            cluster_radius: 1e-4,
            border_tol: 1e-4,
            closure_tol: 1e-6,
            bisection_tol: 1e-10,
            execution: Execution::default(),
        }
    }
}

pub fn phi_rhs(f: &Polynomial, x: f64, phi: f64, swap_eps: f64) -> Result<f64> {
    if phi.abs() < swap_eps {
        return Err(Error::SingularPoint { x, phi });
    }
    Ok((-x - f.derivative().eval(x) * phi) / phi)
}

fn slope(df: &Polynomial, x: f64, phi: f64) -> f64 {
    (-x - df.eval(x) * phi) / phi
}

struct Engine<'a> {
    df: &'a Polynomial,
    dir: f64,
    x_stop: f64,
    opts: &'a PhiOptions,
    samples: Vec<PhiSample>,
    steps_left: usize,
}

enum SegmentEnd {
    Switch,
    Done(Termination),
}

impl Engine<'_> {
    fn push_step(&mut self, step: &DenseStep<1>, swapped: bool) {
        let mid = step.eval_fraction(0.5)[0];
        let end = step.eval_fraction(1.0)[0];
        let (t_mid, t_end) = (step.t0 + 0.5 * step.h, step.t1());
        if swapped {
            self.samples.push(PhiSample { x: mid, phi: t_mid });
            self.samples.push(PhiSample { x: end, phi: t_end });
        } else {
            self.samples.push(PhiSample { x: t_mid, phi: mid });
            self.samples.push(PhiSample { x: t_end, phi: end });
        }
    }

    fn budget_error(e: Error) -> Result<SegmentEnd> {
        match e {
            Error::MaxSteps { .. } => Ok(SegmentEnd::Done(Termination::MaxSteps)),
            Error::StepUnderflow { .. } => Ok(SegmentEnd::Done(Termination::StepUnderflow)),
            e => Err(e),
        }
    }

    fn boundary(&self) -> Termination {
        if self.dir > 0.0 {
            Termination::RightBoundary
        } else {
            Termination::LeftBoundary
        }
    }

    fn run_x(&mut self, x0: f64, phi0: f64) -> Result<SegmentEnd> {
        let df = self.df;
        let rhs = |x: f64, u: &[f64; 1]| [(-x - df.eval(x) * u[0]) / u[0]];
        let sign = phi0.signum();
        let mut st = match Dopri5::new(&rhs, x0, [phi0], self.x_stop, self.opts.tol, self.steps_left) {
            Ok(s) => s.with_max_step(self.opts.max_step),
            Err(e) => return Self::budget_error(e),
        };
        let eps = self.opts.swap_eps;
        loop {
            let step = match st.step(&rhs, self.x_stop, |u| u[0] * sign > eps) {
                Ok(s) => s,
                Err(e) => return Self::budget_error(e),
            };
            self.steps_left = self.steps_left.saturating_sub(1);
            self.push_step(&step, false);
            let (x, phi) = (st.t(), st.y()[0]);
            if x == self.x_stop || phi.abs() > self.opts.phi_limit {
                return Ok(SegmentEnd::Done(self.boundary()));
            }
            if phi.abs() < 2.0 * eps || slope(df, x, phi).abs() > self.opts.swap_slope {
                return Ok(SegmentEnd::Switch);
            }
        }
    }

    fn run_phi(&mut self, x0: f64, phi0: f64, phi_dir: f64) -> Result<SegmentEnd> {
        let df = self.df;
        let rhs = |phi: f64, u: &[f64; 1]| [phi / (-u[0] - df.eval(u[0]) * phi)];
        let toward_zero = phi0 * phi_dir < 0.0;
        let bound = if toward_zero {
            0.0
        } else {
            phi0 + phi_dir * 1e3 * (1.0 + phi0.abs())
        };
        let denom0 = -x0 - df.eval(x0) * phi0;
        if denom0.abs() < 1e-12 * (1.0 + x0.abs()) {
            return Err(Error::SingularPoint { x: x0, phi: phi0 });
        }
        let mut st = match Dopri5::new(&rhs, phi0, [x0], bound, self.opts.tol, self.steps_left) {
            Ok(s) => s.with_max_step(self.opts.max_step),
            Err(Error::DegenerateInput(_)) => return Err(Error::SingularPoint { x: x0, phi: phi0 }),
            Err(e) => return Self::budget_error(e),
        };
        let dir = self.dir;
        loop {
            let x_prev = st.y()[0];
            let r = st.step(&rhs, bound, |u| (u[0] - x_prev) * dir >= 0.0);
            let step = match r {
                Ok(s) => s,
                Err(e) => return Self::budget_error(e),
            };
            self.steps_left = self.steps_left.saturating_sub(1);
            let (phi, x) = (st.t(), st.y()[0]);
            if (x - self.x_stop) * dir >= 0.0 {
                let g = |p: f64| step.eval(p)[0] - self.x_stop;
                let p = bracketed_root(g, step.t0, step.t1(), g(step.t0), g(step.t1()), 1e-15);
                let xs = self.x_stop;
                self.samples.push(PhiSample { x: xs, phi: p });
                return Ok(SegmentEnd::Done(self.boundary()));
            }
            self.push_step(&step, true);
            if toward_zero && phi == 0.0 {
                return Ok(SegmentEnd::Done(Termination::ZeroCrossing { x }));
            }
            if phi.abs() > self.opts.phi_limit {
                return Ok(SegmentEnd::Done(self.boundary()));
            }
            if !toward_zero && phi == bound {
                return Ok(SegmentEnd::Switch);
            }
            if phi.abs() >= self.opts.swap_eps && slope(df, x, phi).abs() < self.opts.unswap_slope {
                return Ok(SegmentEnd::Switch);
            }
        }
    }

    fn phi_direction(&self, x: f64, phi: f64, branch: f64) -> f64 {
        let denom = -x - self.df.eval(x) * phi;
        if phi == 0.0 {
            branch
        } else {
            // dx/dphi = phi / denom; advance phi so that x moves along `dir`.
            self.dir * (phi / denom).signum()
        }
    }

    fn run(mut self, x0: f64, phi0: f64, branch: f64) -> Result<PhiTrajectory> {
        self.samples.push(PhiSample { x: x0, phi: phi0 });
        let mut in_x = phi0 != 0.0 && slope(self.df, x0, phi0).abs() <= self.opts.swap_slope;
        let (mut x, mut phi) = (x0, phi0);
        let mut first = true;
        loop {
            let end = if in_x {
                self.run_x(x, phi)?
            } else {
                let d = if first { self.phi_direction(x, phi, branch) } else { self.phi_direction(x, phi, phi.signum()) };
                self.run_phi(x, phi, d)?
            };
            first = false;
            let last = *self.samples.last().expect("nonempty");
            match end {
                SegmentEnd::Done(termination) => {
                    return Ok(PhiTrajectory {
                        samples: self.samples,
                        termination,
                        swapped_variable: !in_x,
                    })
                }
                SegmentEnd::Switch => {
                    if self.steps_left == 0 {
                        return Ok(PhiTrajectory {
                            samples: self.samples,
                            termination: Termination::MaxSteps,
                            swapped_variable: !in_x,
                        });
                    }
                    x = last.x;
                    phi = last.phi;
                    in_x = !in_x;
                }
            }
        }
    }
}

/// Integrates the amplitude equation from `(x0, phi0)` toward `x_stop`,
/// stopping at the first zero of `phi`.
pub fn integrate_phi(f: &Polynomial, x0: f64, phi0: f64, x_stop: f64, opts: &PhiOptions) -> Result<PhiTrajectory> {
    if x0 == x_stop || !x0.is_finite() || !x_stop.is_finite() || !phi0.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "cannot integrate from x = {x0} to x = {x_stop} with phi = {phi0}"
        )));
    }
    if phi0 == 0.0 {
        return Ok(PhiTrajectory {
            samples: vec![PhiSample { x: x0, phi: 0.0 }],
            termination: Termination::ZeroCrossing { x: x0 },
            swapped_variable: true,
        });
    }
    let df = f.derivative();
    engine(&df, x0, x_stop, opts).run(x0, phi0, phi0.signum())
}

fn engine<'a>(df: &'a Polynomial, x0: f64, x_stop: f64, opts: &'a PhiOptions) -> Engine<'a> {
    Engine {
        df,
        dir: (x_stop - x0).signum(),
        x_stop,
        opts,
        samples: Vec::new(),
        steps_left: opts.max_steps,
    }
}

/// Follows the orbit from the turning point `(x_turn, 0)` toward `x_stop`
/// along the upper (`upper = true`, `phi > 0`) or lower branch until `phi`
/// returns to 0.
pub fn turning_branch(f: &Polynomial, x_turn: f64, upper: bool, x_stop: f64, opts: &PhiOptions) -> Result<PhiTrajectory> {
    if x_turn == 0.0 || x_stop == x_turn || !x_turn.is_finite() || !x_stop.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "cannot leave turning point {x_turn} toward {x_stop}"
        )));
    }
    let df = f.derivative();
    let branch = if upper { 1.0 } else { -1.0 };
    engine(&df, x_turn, x_stop, opts).run(x_turn, 0.0, branch)
}

/// One revolution of the amplitude equation: the lower branch from `(a, 0)`
/// to the left turning point, then the upper branch back to the next right
/// turning point.
#[derive(Debug, Clone)]
pub struct Closure {
    pub a: f64,
    pub lower: PhiTrajectory,
    /// Absent when the lower branch never turned.
    pub upper: Option<PhiTrajectory>,
}

impl Closure {
    /// Amplitude after one revolution minus `a`: zero exactly on a closed
    /// orbit. A branch that runs off its limit counts as an infinite return.
    pub fn mismatch(&self) -> Option<f64> {
        match self.lower.termination {
            Termination::ZeroCrossing { .. } => {}
            Termination::LeftBoundary => return Some(f64::INFINITY),
            _ => return None,
        }
        match self.upper.as_ref()?.termination {
            Termination::ZeroCrossing { x } => Some(x - self.a),
            Termination::RightBoundary => Some(f64::INFINITY),
            _ => None,
        }
    }

    pub fn left_turn(&self) -> Option<f64> {
        self.lower.zero_crossing()
    }
}

fn side_limit(a: f64) -> f64 {
    10.0 * a.abs() + 10.0
}

/// Options for runs where only the end point matters.
fn endpoint_only(opts: &PhiOptions) -> PhiOptions {
    PhiOptions {
        max_step: f64::INFINITY,
        ..*opts
    }
}

pub fn closure(f: &Polynomial, a: f64, opts: &PhiOptions) -> Result<Closure> {
    revolve(f, a, &endpoint_only(opts))
}

/// [`closure`] with both branches sampled at `opts.max_step`, for quadrature
/// and plotting.
pub fn sampled_closure(f: &Polynomial, a: f64, opts: &PhiOptions) -> Result<Closure> {
    let fine = PhiOptions {
        tol: opts.tol.tightened(100.0),
        ..*opts
    };
    revolve(f, a, &fine)
}

fn revolve(f: &Polynomial, a: f64, opts: &PhiOptions) -> Result<Closure> {
    let lower = turning_branch(f, a, false, -side_limit(a), opts)?;
    let upper = match lower.zero_crossing() {
        Some(x_min) if x_min < 0.0 => Some(turning_branch(f, x_min, true, side_limit(x_min), opts)?),
        _ => None,
    };
    Ok(Closure { a, lower, upper })
}

fn closure_mismatch(f: &Polynomial, a: f64, opts: &PhiOptions) -> Option<f64> {
    closure(f, a, opts).ok()?.mismatch()
}

/// Everything the shooting scan learned about one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalScan {
    pub interval_index: usize,
    pub candidates: Vec<AmplitudeCandidate>,
    pub shots: usize,
    /// Shots whose zero crossing stayed inside the interval.
    pub crossings: usize,
    /// Most of the crossings close up: non-isolated orbits.
    pub continuum: bool,
    /// More than one isolated amplitude survived in the interior.
    pub multiple_interior: bool,
}

struct Shot {
    phi0: f64,
    a: f64,
    mismatch: Option<f64>,
}

pub fn scan_interval(f: &Polynomial, p: &CriticalPartition, interval_index: usize, opts: &PhiOptions) -> Result<IntervalScan> {
    let iv = *p.intervals.get(interval_index).ok_or_else(|| {
        Error::DegenerateInput(format!("interval index {interval_index} out of range"))
    })?;
    let grid = opts.grid.values();
    if grid.is_empty() {
        return Err(Error::DegenerateInput("empty shooting grid".into()));
    }
    let btol = opts.border_tol;
    let coarse = endpoint_only(opts);
    let shots: Vec<Option<Shot>> = par::map(opts.execution, &grid, |&phi0| {
        let t = integrate_phi(f, iv.lo, phi0, p.x_max, &coarse).ok()?;
        let a = t.zero_crossing()?;
        if a < iv.lo - btol || a > iv.hi + btol || a <= 0.0 {
            return None;
        }
        Some(Shot {
            phi0,
            a,
            mismatch: closure_mismatch(f, a, opts),
        })
    });
    let mut shots: Vec<Shot> = shots.into_iter().flatten().collect();
    let crossings = shots.len();
    shots.retain(|s| s.mismatch.is_some());
    shots.sort_by(|s, t| s.a.total_cmp(&t.a).then(s.phi0.total_cmp(&t.phi0)));

    let closes = |s: &Shot| s.mismatch.is_some_and(|d| d.abs() <= opts.closure_tol * (1.0 + s.a));
    let closed: Vec<f64> = shots.iter().filter(|s| closes(s)).map(|s| s.a).collect();
    let span = |v: &[f64]| match (v.first(), v.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let reached = span(&shots.iter().map(|s| s.a).collect::<Vec<_>>()).min(iv.width());
    let continuum = 2 * closed.len() > grid.len() && span(&closed) > 0.25 * reached;

    let mut roots = Vec::new();
    if !continuum {
        for w in shots.windows(2) {
            let (d0, d1) = (w[0].mismatch.unwrap(), w[1].mismatch.unwrap());
            if closes(&w[0]) && closes(&w[1]) {
                continue;
            }
            if d0 == 0.0 {
                roots.push(w[0].a);
            } else if d0 * d1 < 0.0 {
                if let Some(a) = refine_closure(f, w[0].a, w[1].a, d0, opts) {
                    roots.push(a);
                }
            }
        }
        if let Some(last) = shots.last() {
            if last.mismatch == Some(0.0) {
                roots.push(last.a);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut clustered: Vec<f64> = Vec::new();
    for a in roots {
        match clustered.last() {
            Some(&prev) if a - prev <= opts.cluster_radius => {}
            _ => clustered.push(a),
        }
    }
    let candidates: Vec<AmplitudeCandidate> = clustered
        .into_iter()
        .filter(|&a| a >= iv.lo - btol && a <= iv.hi + btol)
        .map(|a| AmplitudeCandidate {
            a,
            interval_index,
            at_border: p.is_border(a, btol),
            initial_phi: initial_phi(f, a, iv.lo, opts),
        })
        .collect();
    let interior = candidates.iter().filter(|c| !c.at_border).count();
    Ok(IntervalScan {
        interval_index,
        candidates,
        shots: grid.len(),
        crossings,
        continuum,
        multiple_interior: interior > 1,
    })
}

/// Bisects a sign change of the closure mismatch. A bracket that collapses
/// onto a jump to an escaping branch (infinite on one side) is rejected.
fn refine_closure(f: &Polynomial, mut lo: f64, mut hi: f64, mut d_lo: f64, opts: &PhiOptions) -> Option<f64> {
    let mut d_hi = f64::NAN;
    while hi - lo > opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let d = closure_mismatch(f, mid, opts)?;
        if d == 0.0 {
            return Some(mid);
        }
        if (d > 0.0) == (d_lo > 0.0) {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
            d_hi = d;
        }
    }
    if d_hi.is_nan() {
        d_hi = closure_mismatch(f, hi, opts)?;
    }
    (d_lo.is_finite() && d_hi.is_finite()).then_some(0.5 * (lo + hi))
}

/// `phi` at the left end of the interval on the upper branch through `(a, 0)`.
fn initial_phi(f: &Polynomial, a: f64, x_left: f64, opts: &PhiOptions) -> f64 {
    if a <= x_left {
        return 0.0;
    }
    match turning_branch(f, a, true, x_left, &endpoint_only(opts)) {
        Ok(t) if t.termination == Termination::LeftBoundary => t.samples.last().map_or(f64::NAN, |s| s.phi),
        _ => f64::NAN,
    }
}

pub fn find_amplitude_candidates(f: &Polynomial, p: &CriticalPartition, interval_index: usize, opts: &PhiOptions) -> Result<Vec<AmplitudeCandidate>> {
    Ok(scan_interval(f, p, interval_index, opts)?.candidates)
}

/// Largest violation of the first integral along the samples, comparing
/// `-phi^2/2 + phi0^2/2` with `(x^2 - x0^2)/2 + ∫ F'(s) phi(s) ds`.
pub fn verify_energy_identity(f: &Polynomial, t: &PhiTrajectory) -> Result<f64> {
    Ok(energy_residuals(f, t)?.into_iter().fold(0.0, |m, r| m.max(r.abs())))
}

pub fn energy_residuals(f: &Polynomial, t: &PhiTrajectory) -> Result<Vec<f64>> {
    if t.samples.len() < 3 {
        return Err(Error::DegenerateInput("energy identity needs at least 3 samples".into()));
    }
    let df = f.derivative();
    let (xs, phis) = (t.xs(), t.phis());
    let h: Vec<f64> = xs.iter().zip(&phis).map(|(&x, &p)| df.eval(x) * p).collect();
    let c = cumulative_curve_integral(&xs, &phis, &h);
    let (x0, p0) = (xs[0], phis[0]);
    Ok((0..xs.len())
        .map(|j| (-0.5 * phis[j] * phis[j] + 0.5 * p0 * p0) - (0.5 * (xs[j] * xs[j] - x0 * x0) + c[j]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub tolerance: f64,
    /// `phi` at the sample nearest `A`; absent when no sample lies at `A`.
    pub phi_at_amplitude: Option<f64>,
    pub vanishes_at_amplitude: bool,
    /// Largest value of `∫_x^A (-s - F'(s) phi(s)) ds` over the samples.
    pub max_work_integral: f64,
    pub work_integral_nonpositive: bool,
    /// Largest `|cos|` between the normal of the equation and the curve tangent.
    pub max_ode_residual: f64,
    pub ode_satisfied: bool,
}

impl Theorem1Report {
    pub fn all_pass(&self) -> bool {
        self.vanishes_at_amplitude && self.work_integral_nonpositive && self.ode_satisfied
    }
}

/// Checks `phi(A) = 0`, the sign of the work integral up to `A`, and the
/// equation itself. The equation says `(x + F' phi, phi)` is normal to the
/// curve; its residual is the cosine between that vector and the sampled
/// unit tangent.
pub fn check_theorem1_conditions(f: &Polynomial, t: &PhiTrajectory, a: f64, tol: f64) -> Result<Theorem1Report> {
    let n = t.samples.len();
    if n < 5 {
        return Err(Error::DegenerateInput("condition check needs at least 5 samples".into()));
    }
    let df = f.derivative();
    let (xs, phis) = (t.xs(), t.phis());
    let end = if (xs[n - 1] - a).abs() <= (xs[0] - a).abs() { n - 1 } else { 0 };
    let scale = 1.0 + a.abs();
    let phi_at_amplitude = ((xs[end] - a).abs() <= tol * scale).then_some(phis[end]);
    let vanishes_at_amplitude = phi_at_amplitude.is_some_and(|p| p.abs() <= tol * scale);

    let h: Vec<f64> = xs.iter().zip(&phis).map(|(&x, &p)| -x - df.eval(x) * p).collect();
    let c = cumulative_curve_integral(&xs, &phis, &h);
    let max_work_integral = c.iter().map(|cj| c[end] - cj).fold(f64::NEG_INFINITY, f64::max);

    let tangents = unit_tangents(&xs, &phis);
    let max_ode_residual = (1..n - 1)
        .map(|j| {
            let (tx, tp) = tangents[j];
            let (nx, np) = (xs[j] + df.eval(xs[j]) * phis[j], phis[j]);
            (np * tp + nx * tx).abs() / nx.hypot(np)
        })
        .fold(0.0, f64::max);
    Ok(Theorem1Report {
        tolerance: tol,
        phi_at_amplitude,
        vanishes_at_amplitude,
        max_work_integral,
        work_integral_nonpositive: max_work_integral <= tol,
        max_ode_residual,
        ode_satisfied: max_ode_residual <= tol,
    })
}
