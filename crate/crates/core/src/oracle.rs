//! Direct simulation of `x' = y - F(x)`, `y' = -x` and the return map on the
//! section `y = F(x), x > 0`. On that curve `x' = 0`, so section crossings are
//! the x-maxima of the orbit and a fixed point of the map is the amplitude of
//! a periodic orbit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{bracketed_root, DenseStep, Dopri5, Tolerance};
use crate::par::{self, Execution};
use crate::phi_solver::{PhiSample, PhiTrajectory, Termination};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    /// Crossing with `x > 0`, `y - F(x)` decreasing.
    Maximum,
    /// Crossing with `x < 0`, `y - F(x)` increasing.
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationEnd {
    Completed,
    Escaped,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<OrbitSample>,
    pub events: Vec<SectionEvent>,
    pub end: SimulationEnd,
    steps: Vec<DenseStep<2>>,
}

impl Trajectory {
    pub fn maxima(&self) -> impl Iterator<Item = &SectionEvent> {
        self.events.iter().filter(|e| e.kind == ExtremumKind::Maximum)
    }

    pub fn minima(&self) -> impl Iterator<Item = &SectionEvent> {
        self.events.iter().filter(|e| e.kind == ExtremumKind::Minimum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone)]
pub struct LimitCycle {
    pub amplitude: f64,
    pub period: f64,
    pub stability: Stability,
    pub return_slope: f64,
    /// One revolution starting and ending on the section.
    pub orbit: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub tol: Tolerance,
    /// Time without a section crossing after which the return map gives up.
    pub max_time: f64,
    pub max_steps: usize,
    pub escape_radius: f64,
    pub fixed_point_tol: f64,
    pub bisection_tol: f64,
    /// Sign changes of `P(A) - A` with both ends below this are ignored.
    pub noise_floor: f64,
    pub slope_delta: f64,
    pub stability_theta: f64,
    pub center_tol: f64,
    pub center_fraction: f64,
    /// Center evidence uses the lower part of the scan, this share of it.
    /// Large orbits around a center can pass far out, where closure at
    /// `center_tol` is beyond the integrator.
    pub center_span: f64,
    pub execution: Execution,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::new(1e-10, 1e-12),
            max_time: 1e4,
            max_steps: 2_000_000,
            escape_radius: 1e6,
            fixed_point_tol: 1e-6,
            bisection_tol: 1e-10,
            noise_floor: 1e-8,
            slope_delta: 1e-4,
            stability_theta: 1e-3,
            center_tol: 1e-6,
            center_fraction: 0.95,
            center_span: 0.5,
            execution: Execution::default(),
        }
    }
}

pub fn vector_field(f: &Polynomial, s: State) -> (f64, f64) {
    (s.y - f.eval(s.x), -s.x)
}

enum Stop {
    At(f64),
    FirstMaximum,
}

struct Run {
    trajectory: Trajectory,
    /// The crossing that ended a [`Stop::FirstMaximum`] run.
    hit: Option<SectionEvent>,
}

fn integrate(f: &Polynomial, s0: State, stop: Stop, record: bool, opts: &OracleOptions) -> Result<Run> {
    let rhs = |_t: f64, u: &[f64; 2]| [u[1] - f.eval(u[0]), -u[0]];
    let gap = |u: &[f64; 2]| u[1] - f.eval(u[0]);
    let t_bound = match stop {
        Stop::At(t) => t,
        Stop::FirstMaximum => opts.max_time,
    };
    let mut stepper = Dopri5::new(&rhs, 0.0, [s0.x, s0.y], t_bound, opts.tol, opts.max_steps)?;
    let mut traj = Trajectory {
        samples: Vec::new(),
        events: Vec::new(),
        end: SimulationEnd::Completed,
        steps: Vec::new(),
    };
    if record {
        traj.samples.push(OrbitSample { t: 0.0, x: s0.x, y: s0.y });
    }
    let mut g0 = gap(&[s0.x, s0.y]);
    while stepper.t() < t_bound {
        let step = match stepper.step(&rhs, t_bound, |_| true) {
            Ok(s) => s,
            Err(Error::MaxSteps { at }) if matches!(stop, Stop::FirstMaximum) => {
                return Err(Error::NoReturn {
                    amplitude: s0.x,
                    reason: format!("step budget exhausted at t = {at}"),
                })
            }
            Err(e) => return Err(e),
        };
        let u = stepper.y();
        let g1 = gap(&u);
        let kind = if g0 > 0.0 && g1 <= 0.0 {
            Some(ExtremumKind::Maximum)
        } else if g0 < 0.0 && g1 >= 0.0 {
            Some(ExtremumKind::Minimum)
        } else {
            None
        };
        let mut hit = None;
        if let Some(kind) = kind {
            let s = bracketed_root(|s| gap(&step.eval_fraction(s)), 0.0, 1.0, g0, g1, 1e-15);
            let v = step.eval_fraction(s);
            let ev = SectionEvent {
                t: step.t0 + s * step.h,
                x: v[0],
                y: v[1],
                kind,
            };
            traj.events.push(ev);
            if kind == ExtremumKind::Maximum && matches!(stop, Stop::FirstMaximum) {
                hit = Some(ev);
            }
        }
        g0 = g1;
        if record {
            match hit {
                Some(ev) => traj.samples.push(OrbitSample { t: ev.t, x: ev.x, y: ev.y }),
                None => traj.samples.push(OrbitSample {
                    t: stepper.t(),
                    x: u[0],
                    y: u[1],
                }),
            }
            traj.steps.push(step);
        }
        if hit.is_some() {
            return Ok(Run { trajectory: traj, hit });
        }
        if u[0].abs() > opts.escape_radius || u[1].abs() > opts.escape_radius {
            if matches!(stop, Stop::FirstMaximum) {
                return Err(Error::NoReturn {
                    amplitude: s0.x,
                    reason: format!("escaped past radius {} at t = {}", opts.escape_radius, stepper.t()),
                });
            }
            traj.end = SimulationEnd::Escaped;
            return Ok(Run { trajectory: traj, hit: None });
        }
    }
    if matches!(stop, Stop::FirstMaximum) {
        return Err(Error::NoReturn {
            amplitude: s0.x,
            reason: format!("no section crossing within {} time units", opts.max_time),
        });
    }
    Ok(Run { trajectory: traj, hit: None })
}

/// Simulates to `t_end`, recording accepted steps and section crossings.
pub fn simulate(f: &Polynomial, s0: State, t_end: f64, opts: &OracleOptions) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::DegenerateInput(format!("t_end must be positive, got {t_end}")));
    }
    Ok(integrate(f, s0, Stop::At(t_end), true, opts)?.trajectory)
}

fn check_amplitude(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::DegenerateInput(format!("amplitude must be positive, got {a}")));
    }
    Ok(())
}

/// `P(A)`: x-coordinate of the next section crossing after `(A, F(A))`.
pub fn poincare_return(f: &Polynomial, a: f64, opts: &OracleOptions) -> Result<f64> {
    check_amplitude(a)?;
    let run = integrate(f, State::new(a, f.eval(a)), Stop::FirstMaximum, false, opts)?;
    Ok(run.hit.expect("first-maximum run ends on a crossing").x)
}

/// One revolution from `(A, F(A))`, returned with the crossing that closes it.
pub fn return_orbit(f: &Polynomial, a: f64, opts: &OracleOptions) -> Result<(Trajectory, SectionEvent)> {
    check_amplitude(a)?;
    let run = integrate(f, State::new(a, f.eval(a)), Stop::FirstMaximum, true, opts)?;
    let hit = run.hit.expect("first-maximum run ends on a crossing");
    Ok((run.trajectory, hit))
}

pub fn classify_stability(return_slope: f64, theta: f64) -> Stability {
    let m = return_slope.abs();
    if m < 1.0 - theta {
        Stability::Stable
    } else if m > 1.0 + theta {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// `P(A) - A` sampled on a uniform amplitude grid.
#[derive(Debug, Clone)]
pub struct ReturnScan {
    pub amplitudes: Vec<f64>,
    /// `None` where the orbit did not come back (escape, budget).
    pub displacement: Vec<Option<f64>>,
    pub failures: Vec<(f64, String)>,
}

impl ReturnScan {
    pub fn evaluated(&self) -> usize {
        self.displacement.iter().filter(|d| d.is_some()).count()
    }
}

pub fn amplitude_grid(a_lo: f64, a_hi: f64, grid_n: usize) -> Result<Vec<f64>> {
    if !(a_lo > 0.0 && a_lo < a_hi) || grid_n < 2 {
        return Err(Error::DegenerateInput(format!(
            "scan needs 0 < lo < hi and at least 2 points, got [{a_lo}, {a_hi}] x {grid_n}"
        )));
    }
    let step = (a_hi - a_lo) / (grid_n - 1) as f64;
    Ok((0..grid_n)
        .map(|i| if i + 1 == grid_n { a_hi } else { a_lo + step * i as f64 })
        .collect())
}

pub fn scan_return_map(f: &Polynomial, a_lo: f64, a_hi: f64, grid_n: usize, opts: &OracleOptions) -> Result<ReturnScan> {
    let amplitudes = amplitude_grid(a_lo, a_hi, grid_n)?;
    let values = par::map(opts.execution, &amplitudes, |&a| poincare_return(f, a, opts).map(|p| p - a));
    let mut displacement = Vec::with_capacity(values.len());
    let mut failures = Vec::new();
    for (a, v) in amplitudes.iter().zip(values) {
        match v {
            Ok(d) => displacement.push(Some(d)),
            Err(e @ (Error::NoReturn { .. } | Error::StepUnderflow { .. })) => {
                displacement.push(None);
                failures.push((*a, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ReturnScan {
        amplitudes,
        displacement,
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct CycleScan {
    pub cycles: Vec<LimitCycle>,
    pub scan: ReturnScan,
    /// Brackets abandoned during refinement, with the reason.
    pub dropped: Vec<(f64, f64, String)>,
}

fn refine_bracket(f: &Polynomial, mut lo: f64, mut hi: f64, mut h_lo: f64, opts: &OracleOptions) -> Result<f64> {
    while hi - lo > opts.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let h_mid = poincare_return(f, mid, opts)? - mid;
        if h_mid == 0.0 {
            return Ok(mid);
        }
        if (h_mid > 0.0) == (h_lo > 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn build_cycle(f: &Polynomial, a: f64, opts: &OracleOptions) -> Result<LimitCycle> {
    let (orbit, hit) = return_orbit(f, a, opts)?;
    if (hit.x - a).abs() > opts.fixed_point_tol {
        return Err(Error::DegenerateOrbit(format!(
            "refined amplitude {a} returns to {}",
            hit.x
        )));
    }
    let d = opts.slope_delta.min(0.5 * a);
    let slope = (poincare_return(f, a + d, opts)? - poincare_return(f, a - d, opts)?) / (2.0 * d);
    Ok(LimitCycle {
        amplitude: a,
        period: hit.t,
        stability: classify_stability(slope, opts.stability_theta),
        return_slope: slope,
        orbit,
    })
}

/// Brackets sign changes of `P(A) - A` on the grid, bisects each and builds
/// the closed orbit of every fixed point found. Cycles come out sorted by
/// amplitude.
pub fn find_limit_cycles(f: &Polynomial, a_lo: f64, a_hi: f64, grid_n: usize, opts: &OracleOptions) -> Result<CycleScan> {
    let scan = scan_return_map(f, a_lo, a_hi, grid_n, opts)?;
    Ok(cycles_from_scan(f, scan, opts))
}

pub fn cycles_from_scan(f: &Polynomial, scan: ReturnScan, opts: &OracleOptions) -> CycleScan {
    let mut brackets = Vec::new();
    for i in 0..scan.amplitudes.len() - 1 {
        let (Some(h0), Some(h1)) = (scan.displacement[i], scan.displacement[i + 1]) else {
            continue;
        };
        if h0.abs() < opts.noise_floor && h1.abs() < opts.noise_floor {
            continue;
        }
        if h0 == 0.0 {
            brackets.push((scan.amplitudes[i], scan.amplitudes[i], h0));
        } else if h0 * h1 < 0.0 {
            brackets.push((scan.amplitudes[i], scan.amplitudes[i + 1], h0));
        }
    }
    let refined = par::map(opts.execution, &brackets, |&(lo, hi, h_lo)| {
        let a = if lo == hi { lo } else { refine_bracket(f, lo, hi, h_lo, opts)? };
        build_cycle(f, a, opts)
    });
    let mut cycles = Vec::new();
    let mut dropped = Vec::new();
    for (&(lo, hi, _), r) in brackets.iter().zip(refined) {
        match r {
            Ok(c) => cycles.push(c),
            Err(e) => dropped.push((lo, hi, e.to_string())),
        }
    }
    cycles.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    CycleScan { cycles, scan, dropped }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterEvidence {
    pub is_center: bool,
    /// Share of the examined grid points with `|P(A) - A| <= center_tol`.
    pub fraction: f64,
    pub max_displacement: f64,
}

pub fn center_evidence(scan: &ReturnScan, opts: &OracleOptions) -> CenterEvidence {
    let (lo, hi) = match (scan.amplitudes.first(), scan.amplitudes.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => {
            return CenterEvidence {
                is_center: false,
                fraction: 0.0,
                max_displacement: f64::NAN,
            }
        }
    };
    let cutoff = lo + opts.center_span * (hi - lo);
    let window: Vec<Option<f64>> = scan
        .amplitudes
        .iter()
        .zip(&scan.displacement)
        .filter(|(a, _)| **a <= cutoff)
        .map(|(_, d)| *d)
        .collect();
    let close = window
        .iter()
        .filter(|d| matches!(d, Some(v) if v.abs() <= opts.center_tol))
        .count();
    let max_displacement = window
        .iter()
        .map(|d| d.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let fraction = close as f64 / window.len().max(1) as f64;
    CenterEvidence {
        is_center: fraction >= opts.center_fraction,
        fraction,
        max_displacement,
    }
}

pub fn detect_center(f: &Polynomial, a_lo: f64, a_hi: f64, grid_n: usize, opts: &OracleOptions) -> Result<CenterEvidence> {
    let scan = scan_return_map(f, a_lo, a_hi, grid_n, opts)?;
    Ok(center_evidence(&scan, opts))
}

/// Node positions clustered toward both ends of `[lo, hi]`.
fn chebyshev_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    (0..n)
        .map(|k| mid - half * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect()
}

const EXTRACT_NODES: usize = 2001;

/// The lower branch `phi(x) = y - F(x) < 0` of the orbit, from its x-minimum
/// up to the amplitude, resampled on a grid clustered at both turning points.
pub fn extract_phi_from_orbit(f: &Polynomial, cycle: &LimitCycle) -> Result<PhiTrajectory> {
    let orbit = &cycle.orbit;
    let start = orbit
        .samples
        .first()
        .ok_or_else(|| Error::DegenerateOrbit("empty orbit".into()))?;
    let a = start.x;
    let min = orbit
        .minima()
        .next()
        .copied()
        .ok_or_else(|| Error::DegenerateOrbit("orbit has no x-minimum".into()))?;
    if !(min.x < 0.0 && a > 0.0) {
        return Err(Error::DegenerateOrbit(format!(
            "extrema {} and {a} do not straddle the origin",
            min.x
        )));
    }
    let nodes = chebyshev_nodes(min.x, a, EXTRACT_NODES);
    let mut samples = Vec::with_capacity(EXTRACT_NODES);
    samples.push(PhiSample { x: min.x, phi: min.y - f.eval(min.x) });
    let descending: Vec<&DenseStep<2>> = orbit.steps.iter().take_while(|s| s.t0 < min.t).collect();
    for &xt in nodes[1..EXTRACT_NODES - 1].iter() {
        let step = descending
            .iter()
            .find(|s| {
                let x1 = s.eval(s.t1().min(min.t))[0];
                x1 <= xt && s.y0()[0] >= xt
            })
            .ok_or_else(|| Error::DegenerateOrbit(format!("x = {xt} not reached on the descending branch")))?;
        let t_hi = step.t1().min(min.t);
        let g = |t: f64| step.eval(t)[0] - xt;
        let t = bracketed_root(g, step.t0, t_hi, g(step.t0), g(t_hi), 1e-15);
        let u = step.eval(t);
        samples.push(PhiSample { x: xt, phi: u[1] - f.eval(xt) });
    }
    samples.push(PhiSample { x: a, phi: start.y - f.eval(a) });
    Ok(PhiTrajectory {
        samples,
        termination: Termination::ZeroCrossing { x: a },
        swapped_variable: false,
    })
}
