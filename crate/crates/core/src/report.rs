//! End-to-end analysis of one system: partition and bounds, the simulation
//! oracle, the amplitude-equation scan, identity checks on every branch, and
//! the cross-check between oracle amplitudes and the partition. Reports are
//! written as deterministic JSON; trajectories as CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::identities::{verify_compact_identity_with, CertifiedSign, CompactIdentityReport, COMPACT_TOLERANCE};
use crate::ode::Tolerance;
use crate::oracle::{
    center_evidence, cycles_from_scan, extract_phi_from_orbit, scan_return_map, LimitCycle, OracleOptions, OrbitSample,
    Stability,
};
use crate::par::Execution;
use crate::partition::{build_partition, positive_critical_points, BoundReport, CriticalPartition, Interval};
use crate::phi_solver::{
    check_theorem1_conditions, sampled_closure, scan_interval, verify_energy_identity, PhiGrid, PhiOptions, PhiSample,
    PhiTrajectory, Theorem1Report,
};
use crate::poly::Polynomial;

pub const SCHEMA: &str = "lienard-lab/1";

/// Default distance within which an oracle amplitude and a shooting candidate
/// are taken to be the same orbit.
pub const MATCH_TOL: f64 = 1e-3;

const THEOREM1_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputKind {
    /// Coefficients `a_1 … a_n` of `F`, constant term omitted.
    #[default]
    #[serde(rename = "F")]
    F,
    /// Coefficients `c_0 … c_{n-1}` of `F'`; `F` is its antiderivative with
    /// zero constant.
    #[serde(rename = "F_prime")]
    FPrime,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub integrator_rtol: Option<f64>,
    pub integrator_atol: Option<f64>,
    pub fixed_point: Option<f64>,
    pub center: Option<f64>,
    pub closure: Option<f64>,
    pub border: Option<f64>,
    pub amplitude_match: Option<f64>,
    pub identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub input_kind: InputKind,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default)]
    pub a_lo: Option<f64>,
    #[serde(default)]
    pub a_hi: Option<f64>,
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// Shooting values per sign for the amplitude-equation scan.
    #[serde(default)]
    pub phi_grid_n: Option<usize>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub execution: Execution,
}

impl AnalysisConfig {
    pub fn new(input_kind: InputKind, coefficients: Vec<f64>) -> Self {
        Self {
            input_kind,
            coefficients,
            x_max: None,
            a_lo: None,
            a_hi: None,
            grid_n: None,
            phi_grid_n: None,
            tolerances: ToleranceOverrides::default(),
            execution: Execution::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self.coefficients.last() {
            None => return bad("coefficients must not be empty".into()),
            Some(&c) if c == 0.0 => return bad("last coefficient must be nonzero".into()),
            _ => {}
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        if let Some(x) = self.x_max {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("x_max must be positive, got {x}"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.a_lo, self.a_hi) {
            if !(lo < hi) {
                return bad(format!("scan range [{lo}, {hi}] is empty"));
            }
        }
        if self.a_lo.is_some_and(|lo| !(lo > 0.0 && lo.is_finite())) {
            return bad("a_lo must be positive".into());
        }
        if self.a_hi.is_some_and(|hi| !(hi > 0.0 && hi.is_finite())) {
            return bad("a_hi must be positive".into());
        }
        if self.grid_n.is_some_and(|n| n < 2) {
            return bad("grid_n must be at least 2".into());
        }
        if self.phi_grid_n.is_some_and(|n| n < 2) {
            return bad("phi_grid_n must be at least 2".into());
        }
        let t = &self.tolerances;
        let all = [
            t.integrator_rtol,
            t.integrator_atol,
            t.fixed_point,
            t.center,
            t.closure,
            t.border,
            t.amplitude_match,
            t.identity,
        ];
        if all.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }

    /// `F` with ascending coefficients, constant term included (always 0).
    pub fn polynomial(&self) -> Result<Polynomial> {
        self.validate()?;
        Ok(match self.input_kind {
            InputKind::F => Polynomial::from_odd_free(&self.coefficients),
            InputKind::FPrime => Polynomial::new(self.coefficients.clone()).antiderivative(),
        })
    }

    pub fn oracle_options(&self) -> OracleOptions {
        let d = OracleOptions::default();
        let t = &self.tolerances;
        OracleOptions {
            tol: Tolerance::new(t.integrator_rtol.unwrap_or(d.tol.rtol), t.integrator_atol.unwrap_or(d.tol.atol)),
            fixed_point_tol: t.fixed_point.unwrap_or(d.fixed_point_tol),
            center_tol: t.center.unwrap_or(d.center_tol),
            execution: self.execution,
            ..d
        }
    }

    pub fn phi_options(&self) -> PhiOptions {
        let d = PhiOptions::default();
        let t = &self.tolerances;
        PhiOptions {
            closure_tol: t.closure.unwrap_or(d.closure_tol),
            border_tol: t.border.unwrap_or(d.border_tol),
            grid: PhiGrid {
                count: self.phi_grid_n.unwrap_or(d.grid.count),
                ..d.grid
            },
            execution: self.execution,
            ..d
        }
    }

    /// `[0.05, max(5, 2 x_m)]` unless overridden, `x_m` the largest critical point.
    pub fn scan_range(&self, p: &CriticalPartition) -> (f64, f64) {
        let top = p.critical_points.last().map_or(0.0, |c| 2.0 * c);
        (self.a_lo.unwrap_or(0.05), self.a_hi.unwrap_or(top.max(5.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub amplitude: f64,
    pub period: f64,
    pub stability: Stability,
    pub return_slope: f64,
    pub interval_index: Option<usize>,
    pub at_border: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub amplitude: f64,
    pub interval_index: usize,
    pub at_border: bool,
    pub initial_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPhiScan {
    pub interval_index: usize,
    pub candidates: Vec<CandidateSummary>,
    pub shots: usize,
    pub crossings: usize,
    pub continuum: bool,
    pub multiple_interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFailure {
    pub amplitude: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub a_lo: f64,
    pub a_hi: f64,
    pub grid_n: usize,
    pub returned: usize,
    pub failures: Vec<ScanFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSummary {
    pub detected: bool,
    pub fraction: f64,
    pub max_displacement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSource {
    /// `x'` against `x` on the lower half of a simulated cycle.
    OracleOrbit,
    /// Lower branch of the amplitude equation from `(A, 0)`.
    PhiLower,
    /// Upper branch back from the left turning point.
    PhiUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub source: BranchSource,
    pub amplitude: f64,
    pub samples: usize,
    pub energy_residual: f64,
    pub compact: CompactIdentityReport,
    pub theorem1: Option<Theorem1Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub checks: Vec<IdentityCheck>,
    pub max_energy_residual: Option<f64>,
    pub max_compact_residual: Option<f64>,
    /// The one sign every non-degenerate branch certified, if they agree.
    pub certified_sign: Option<CertifiedSign>,
    pub sign_consistent: bool,
}

impl IdentitySummary {
    fn from_checks(checks: Vec<IdentityCheck>) -> Self {
        let max = |v: Vec<f64>| v.into_iter().reduce(f64::max);
        let decided: Vec<CertifiedSign> = checks
            .iter()
            .map(|c| c.compact.certified)
            .filter(|s| *s != CertifiedSign::Both)
            .collect();
        let certified_sign = match decided.first() {
            Some(&s) if decided.iter().all(|d| *d == s) && matches!(s, CertifiedSign::Plus | CertifiedSign::Minus) => Some(s),
            _ => None,
        };
        Self {
            max_energy_residual: max(checks.iter().map(|c| c.energy_residual).collect()),
            max_compact_residual: max(checks.iter().map(|c| c.compact.certified_residual).collect()),
            sign_consistent: decided.is_empty() || certified_sign.is_some(),
            certified_sign,
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdedInterval {
    pub interval_index: usize,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Check {
    pub consistent: bool,
    /// Oracle amplitudes strictly inside each interval.
    pub interior_counts: Vec<usize>,
    pub crowded: Vec<CrowdedInterval>,
    /// Interior oracle amplitudes with no shooting candidate within tolerance.
    pub unmatched: Vec<f64>,
    pub diagnostics: Vec<String>,
}

/// At most one oracle amplitude per interval interior, and every interior
/// amplitude matched by a shooting candidate within `match_tol`. Amplitudes
/// within `border_tol` of a critical point are exempt from both.
pub fn cross_check_lemma2(
    p: &CriticalPartition,
    oracle_amplitudes: &[f64],
    candidates: &[f64],
    border_tol: f64,
    match_tol: f64,
) -> Lemma2Check {
    let mut per_interval: Vec<Vec<f64>> = vec![Vec::new(); p.intervals.len()];
    let mut unmatched = Vec::new();
    let mut diagnostics = Vec::new();
    for &a in oracle_amplitudes {
        if p.is_border(a, border_tol) {
            diagnostics.push(format!("amplitude {a} lies on a critical point"));
            continue;
        }
        match p.interior_index(a, border_tol) {
            Some(i) => per_interval[i].push(a),
            None => diagnostics.push(format!("amplitude {a} lies outside the partition")),
        }
        if !candidates.iter().any(|c| (c - a).abs() <= match_tol) {
            diagnostics.push(format!("amplitude {a} has no shooting candidate within {match_tol}"));
            unmatched.push(a);
        }
    }
    let crowded: Vec<CrowdedInterval> = per_interval
        .iter()
        .enumerate()
        .filter(|(_, v)| v.len() > 1)
        .map(|(i, v)| CrowdedInterval {
            interval_index: i,
            amplitudes: v.clone(),
        })
        .collect();
    for c in &crowded {
        diagnostics.push(format!("interval {} holds {} amplitudes {:?}", c.interval_index, c.amplitudes.len(), c.amplitudes));
    }
    Lemma2Check {
        consistent: crowded.is_empty() && unmatched.is_empty(),
        interior_counts: per_interval.iter().map(Vec::len).collect(),
        crowded,
        unmatched,
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub input_kind: InputKind,
    pub coefficients: Vec<f64>,
    /// Ascending coefficients of `F`, constant term first.
    pub f_coefficients: Vec<f64>,
    pub degree: usize,
    pub bounds: BoundReport,
    pub x_max: f64,
    pub critical_points: Vec<f64>,
    pub intervals: Vec<Interval>,
    pub scan: ScanSummary,
    pub cycles: Vec<CycleSummary>,
    pub phi_candidates: Vec<IntervalPhiScan>,
    pub center_detected: bool,
    pub center: CenterSummary,
    pub identity_residuals: IdentitySummary,
    pub lemma2: Lemma2Check,
    pub lemma2_consistent: bool,
    pub warnings: Vec<String>,
    /// Numerical failures that left parts of the report incomplete.
    pub failures: Vec<String>,
}

impl AnalysisReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A report together with the trajectories behind it.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub orbits: Vec<(f64, Vec<OrbitSample>)>,
    pub branches: Vec<(BranchSource, f64, PhiTrajectory)>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn ambiguity_warning(cfg: &AnalysisConfig, m: usize) -> Option<String> {
    if cfg.input_kind != InputKind::FPrime {
        return None;
    }
    let as_f = Polynomial::new(cfg.coefficients.clone());
    let alt = match positive_critical_points(&as_f, f64::INFINITY) {
        Ok(c) => format!("{} positive critical points", c.len()),
        Err(_) => "no partition".to_string(),
    };
    Some(format!(
        "F/F' ambiguity: coefficients were read as F' ({m} positive critical points); read as F they give {alt}"
    ))
}

pub fn run_analysis(cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    Ok(analyze(cfg)?.report)
}

pub fn analyze(cfg: &AnalysisConfig) -> Result<Analysis> {
    let f = cfg.polynomial()?;
    let partition = build_partition(&f, cfg.x_max)?;
    let bounds = BoundReport::new(&f, &partition)?;
    let oracle_opts = cfg.oracle_options();
    let phi_opts = cfg.phi_options();
    let border_tol = phi_opts.border_tol;
    let match_tol = cfg.tolerances.amplitude_match.unwrap_or(MATCH_TOL);
    let identity_tol = cfg.tolerances.identity.unwrap_or(COMPACT_TOLERANCE);
    let mut warnings: Vec<String> = ambiguity_warning(cfg, partition.m()).into_iter().collect();
    let mut failures = Vec::new();

    let (a_lo, a_hi) = cfg.scan_range(&partition);
    let grid_n = cfg.grid_n.unwrap_or(200);
    let scan = scan_return_map(&f, a_lo, a_hi, grid_n, &oracle_opts)?;
    let evidence = center_evidence(&scan, &oracle_opts);
    let scan_summary = ScanSummary {
        a_lo,
        a_hi,
        grid_n,
        returned: scan.evaluated(),
        failures: scan
            .failures
            .iter()
            .map(|(a, r)| ScanFailure {
                amplitude: *a,
                reason: r.clone(),
            })
            .collect(),
    };
    if !scan.failures.is_empty() {
        failures.push(format!(
            "{} of {} scan amplitudes did not return to the section",
            scan.failures.len(),
            grid_n
        ));
    }
    let found = cycles_from_scan(&f, scan, &oracle_opts);
    for (lo, hi, why) in &found.dropped {
        warnings.push(format!("bracket [{lo}, {hi}] dropped: {why}"));
    }
    let mut cycles: Vec<LimitCycle> = found.cycles;
    if evidence.is_center {
        warnings.push(format!(
            "center: {:.1}% of the lower scan returns to itself; isolated cycles are not reported",
            100.0 * evidence.fraction
        ));
        cycles.clear();
    }
    if cycles.len() > bounds.degree_bound {
        return Err(Error::BoundViolation {
            count: cycles.len(),
            bound: bounds.degree_bound,
        });
    }

    let mut phi_candidates = Vec::with_capacity(partition.intervals.len());
    for i in 0..partition.intervals.len() {
        let s = scan_interval(&f, &partition, i, &phi_opts)?;
        if s.multiple_interior {
            warnings.push(format!("interval {i}: more than one shooting candidate in the interior"));
        }
        phi_candidates.push(IntervalPhiScan {
            interval_index: i,
            candidates: s
                .candidates
                .iter()
                .map(|c| CandidateSummary {
                    amplitude: c.a,
                    interval_index: c.interval_index,
                    at_border: c.at_border,
                    initial_phi: finite(c.initial_phi),
                })
                .collect(),
            shots: s.shots,
            crossings: s.crossings,
            continuum: s.continuum,
            multiple_interior: s.multiple_interior,
        });
    }
    let any_continuum = phi_candidates.iter().any(|s| s.continuum);
    if any_continuum != evidence.is_center {
        warnings.push(format!(
            "center evidence disagrees: return map says {}, amplitude equation says {}",
            evidence.is_center, any_continuum
        ));
    }

    let mut checks = Vec::new();
    let mut orbits = Vec::new();
    let mut branches = Vec::new();
    let mut check = |source, a: f64, t: &PhiTrajectory, failures: &mut Vec<String>| {
        let run = || -> Result<IdentityCheck> {
            let compact = verify_compact_identity_with(&f, t, identity_tol)?;
            let theorem1 = check_theorem1_conditions(&f, t, a, THEOREM1_TOL).ok();
            Ok(IdentityCheck {
                source,
                amplitude: a,
                samples: t.samples.len(),
                energy_residual: verify_energy_identity(&f, t)?,
                compact,
                theorem1,
            })
        };
        match run() {
            Ok(c) => checks.push(c),
            Err(e) => failures.push(format!("identity check at amplitude {a}: {e}")),
        }
    };
    for c in &cycles {
        orbits.push((c.amplitude, c.orbit.samples.clone()));
        match extract_phi_from_orbit(&f, c) {
            Ok(t) => {
                check(BranchSource::OracleOrbit, c.amplitude, &t, &mut failures);
                branches.push((BranchSource::OracleOrbit, c.amplitude, t));
            }
            Err(e) => failures.push(format!("cycle {}: {e}", c.amplitude)),
        }
    }
    for cand in phi_candidates.iter().flat_map(|s| &s.candidates) {
        let a = cand.amplitude;
        match sampled_closure(&f, a, &phi_opts) {
            Ok(cl) => {
                check(BranchSource::PhiLower, a, &cl.lower, &mut failures);
                branches.push((BranchSource::PhiLower, a, cl.lower));
                if let Some(up) = cl.upper {
                    let a_up = up.zero_crossing().unwrap_or(a);
                    check(BranchSource::PhiUpper, a_up, &up, &mut failures);
                    branches.push((BranchSource::PhiUpper, a, up));
                }
            }
            Err(e) => failures.push(format!("candidate {a}: {e}")),
        }
    }
    let identity_residuals = IdentitySummary::from_checks(checks);
    if !identity_residuals.sign_consistent {
        warnings.push("compact identity: branches certify different signs".into());
    }

    let amplitudes: Vec<f64> = cycles.iter().map(|c| c.amplitude).collect();
    let candidate_amplitudes: Vec<f64> = phi_candidates
        .iter()
        .flat_map(|s| s.candidates.iter().map(|c| c.amplitude))
        .collect();
    let lemma2 = cross_check_lemma2(&partition, &amplitudes, &candidate_amplitudes, border_tol, match_tol);
    warnings.extend(lemma2.diagnostics.iter().cloned());

    let cycles = cycles
        .iter()
        .map(|c| {
            let at_border = partition.is_border(c.amplitude, border_tol);
            CycleSummary {
                amplitude: c.amplitude,
                period: c.period,
                stability: c.stability,
                return_slope: c.return_slope,
                interval_index: partition.interval_index(c.amplitude),
                at_border,
            }
        })
        .collect();

    let report = AnalysisReport {
        schema: SCHEMA.to_string(),
        input_kind: cfg.input_kind,
        coefficients: cfg.coefficients.clone(),
        f_coefficients: f.coeffs().to_vec(),
        degree: bounds.n,
        bounds,
        x_max: partition.x_max,
        critical_points: partition.critical_points.clone(),
        intervals: partition.intervals.clone(),
        scan: scan_summary,
        cycles,
        phi_candidates,
        center_detected: evidence.is_center,
        center: CenterSummary {
            detected: evidence.is_center,
            fraction: evidence.fraction,
            max_displacement: finite(evidence.max_displacement),
        },
        identity_residuals,
        lemma2_consistent: lemma2.consistent,
        lemma2,
        warnings,
        failures,
    };
    Ok(Analysis {
        report,
        orbits,
        branches,
    })
}

/// Pretty JSON with every float written with 17 significant digits.
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Any serializable value as deterministic JSON: keys sorted, floats in
/// `{:.16e}` form.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // Going through `Value` sorts the keys.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
}

pub fn report_to_json(r: &AnalysisReport) -> Result<String> {
    to_canonical_json(r)
}

pub fn parse_report(s: &str) -> Result<AnalysisReport> {
    let r: AnalysisReport = serde_json::from_str(s)?;
    if r.schema != SCHEMA {
        return Err(Error::InvalidConfig(format!("unknown report schema {:?}", r.schema)));
    }
    Ok(r)
}

pub fn serialize_report(r: &AnalysisReport, path: &Path) -> Result<()> {
    let json = report_to_json(r)?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// A row of one of the CSV dumps.
pub trait CsvRecord {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<f64>;
}

impl CsvRecord for PhiSample {
    const HEADER: &'static str = "x,phi";
    fn fields(&self) -> Vec<f64> {
        vec![self.x, self.phi]
    }
}

impl CsvRecord for OrbitSample {
    const HEADER: &'static str = "t,x,y";
    fn fields(&self) -> Vec<f64> {
        vec![self.t, self.x, self.y]
    }
}

pub fn emit_csv<R: CsvRecord>(rows: &[R], path: &Path) -> Result<()> {
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{}", R::HEADER)?;
        for r in rows {
            let line: Vec<String> = r.fields().iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes every orbit and branch of an analysis into `dir`, returning the
/// file names in the order written.
pub fn emit_analysis_csv(a: &Analysis, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for (i, (_, samples)) in a.orbits.iter().enumerate() {
        let name = format!("cycle_{i}_orbit.csv");
        emit_csv(samples, &dir.join(&name))?;
        names.push(name);
    }
    for (i, (source, _, t)) in a.branches.iter().enumerate() {
        let tag = match source {
            BranchSource::OracleOrbit => "orbit",
            BranchSource::PhiLower => "lower",
            BranchSource::PhiUpper => "upper",
        };
        let name = format!("branch_{i}_{tag}.csv");
        emit_csv(&t.samples, &dir.join(&name))?;
        names.push(name);
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(coeffs: &[f64]) -> AnalysisConfig {
        AnalysisConfig::new(InputKind::F, coeffs.to_vec())
    }

    #[test]
    fn config_validation() {
        assert!(matches!(cfg(&[0.0]).validate(), Err(Error::InvalidConfig(_))));
        assert!(matches!(cfg(&[]).validate(), Err(Error::InvalidConfig(_))));
        assert!(cfg(&[1.0, 0.0, 1.0]).validate().is_ok());
        let mut c = cfg(&[1.0]);
        c.a_lo = Some(2.0);
        c.a_hi = Some(1.0);
        assert!(c.validate().is_err());
        assert!(AnalysisConfig::from_json_str(r#"{"coefficients": [1.0], "bogus": 1}"#).is_err());
        assert!(AnalysisConfig::from_json_str(r#"{"coefficients": [1.0, 0.0]}"#).is_err());
        let c = AnalysisConfig::from_json_str(r#"{"input_kind": "F_prime", "coefficients": [1.0, 0.0, 3.0]}"#).unwrap();
        assert_eq!(c.polynomial().unwrap().coeffs(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn default_scan_range() {
        let c = cfg(&[1.0]);
        assert_eq!(c.scan_range(&CriticalPartition::single(10.0)), (0.05, 5.0));
        let p = CriticalPartition::from_critical_points(vec![0.5, 3.0], 40.0);
        assert_eq!(c.scan_range(&p), (0.05, 6.0));
    }

    #[test]
    fn lemma2_fixtures() {
        let p = CriticalPartition::from_critical_points(vec![0.4682, 1.5102], 25.0);
        let ok = cross_check_lemma2(&p, &[1.0034, 1.9993], &[1.00341, 1.99925], 1e-4, 1e-3);
        assert!(ok.consistent, "{ok:?}");
        assert_eq!(ok.interior_counts, vec![0, 1, 1]);

        let bad = cross_check_lemma2(&p, &[0.8, 1.2], &[0.8, 1.2], 1e-4, 1e-3);
        assert!(!bad.consistent);
        assert_eq!(bad.crowded.len(), 1);
        assert_eq!(bad.crowded[0].amplitudes, vec![0.8, 1.2]);

        let lonely = cross_check_lemma2(&p, &[2.0], &[], 1e-4, 1e-3);
        assert_eq!(lonely.unmatched, vec![2.0]);
        let border = cross_check_lemma2(&p, &[1.5102], &[], 1e-4, 1e-3);
        assert!(border.consistent);
    }

    #[test]
    fn canonical_json_format() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: Vec<f64>,
            n: usize,
        }
        let s = to_canonical_json(&S {
            zeta: 0.1,
            alpha: vec![1.0, -0.25],
            n: 3,
        })
        .unwrap();
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"n\"").unwrap());
        assert!(s.find("\"n\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("-2.5000000000000000e-1"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["zeta"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv::<PhiSample>(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,phi\n");
        let rows = [OrbitSample { t: 0.0, x: 1.0, y: -1.0 / 3.0 }];
        let path = dir.path().join("orbit.csv");
        emit_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y");
        let back: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(back, vec![0.0, 1.0, -1.0 / 3.0]);
        let missing = dir.path().join("no/such/dir/x.csv");
        assert!(matches!(emit_csv(&rows, &missing), Err(Error::Io { .. })));
    }
}
