//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lienard_lab::identities::{compute_pl, CertifiedSign, COMPACT_TOLERANCE};
use lienard_lab::oracle::{find_limit_cycles, poincare_return, return_orbit, OracleOptions, Stability};
use lienard_lab::partition::{bisect_onset, build_partition, degree_bound, partition_bound, positive_critical_points};
use lienard_lab::phi_solver::{integrate_phi, PhiOptions};
use lienard_lab::report::{run_analysis, AnalysisConfig, AnalysisReport, BranchSource, InputKind};
use lienard_lab::Polynomial;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn analyze(coeffs: &[f64]) -> Result<AnalysisReport, String> {
    run_analysis(&AnalysisConfig::new(InputKind::F, coeffs.to_vec())).map_err(|e| format!("{coeffs:?}: {e}"))
}

fn quintic(mu: f64) -> Polynomial {
    Polynomial::new(vec![0.0, 1.0, 0.0, -mu, 0.0, 1.0])
}

const VDP: [f64; 3] = [-1.0, 0.0, 1.0 / 3.0];
const QUINTIC_032: [f64; 5] = [0.8, 0.0, -4.0 / 3.0, 0.0, 0.32];

struct Fixtures {
    vdp: AnalysisReport,
    quintic: AnalysisReport,
    hard: AnalysisReport,
    center: AnalysisReport,
}

impl Fixtures {
    fn load() -> Result<Self, String> {
        Ok(Self {
            vdp: analyze(&VDP)?,
            quintic: analyze(&QUINTIC_032)?,
            hard: analyze(&[1.0, 0.0, 1.0])?,
            center: analyze(&[0.0, 1.0])?,
        })
    }

    fn all(&self) -> [(&str, &AnalysisReport); 4] {
        [
            ("x^3/3 - x", &self.vdp),
            ("0.32 quintic", &self.quintic),
            ("x + x^3", &self.hard),
            ("x^2", &self.center),
        ]
    }
}

fn critical_points() -> Outcome {
    let f = Polynomial::new([0.0].iter().chain(QUINTIC_032.iter()).copied().collect::<Vec<_>>());
    let cps = positive_critical_points(&f, f64::INFINITY).map_err(|e| e.to_string())?;
    let p = build_partition(&f, None).map_err(|e| e.to_string())?;
    let want = [0.4682, 1.5102];
    let close = cps.len() == 2 && cps.iter().zip(want).all(|(c, w)| (c - w).abs() <= 1e-3);
    let bound = partition_bound(&p);
    check(
        close && bound == 5,
        format!("critical points {cps:.4?}, partition bound {bound}"),
        format!("critical points {cps:?}, partition bound {bound}, want {want:?} and 5"),
    )
}

fn discriminant_threshold() -> Outcome {
    let mu = bisect_onset(0.0, 3.0, 1e-12, |mu| 9.0 * mu * mu - 20.0 > 0.0).map_err(|e| e.to_string())?;
    let exact = 2.0 * 5f64.sqrt() / 3.0;
    let cps = |mu: f64| positive_critical_points(&quintic(mu), f64::INFINITY).map(|c| c.len()).unwrap_or(usize::MAX);
    let (below, above) = (cps(mu - 1e-4), cps(mu + 1e-4));
    check(
        (mu - exact).abs() <= 1e-6 && below == 0 && above == 2,
        format!("onset mu = {mu:.7}, critical points {below} below and {above} above"),
        format!("onset mu = {mu}, exact {exact}, critical points {below} below and {above} above"),
    )
}

fn cycle_counts() -> Outcome {
    let opts = OracleOptions::default();
    let count = |mu: f64| -> Result<(usize, usize), String> {
        let s = find_limit_cycles(&quintic(mu), 0.05, 5.0, 200, &opts).map_err(|e| e.to_string())?;
        Ok((s.cycles.len(), s.scan.failures.len()))
    };
    let (at3, fail3) = count(3.0)?;
    let (at15, fail15) = count(1.5)?;
    check(
        at3 == 2 && at15 == 0 && fail3 + fail15 == 0,
        format!("{at3} cycles at mu = 3, {at15} at mu = 1.5"),
        format!("{at3} cycles at mu = 3 ({fail3} scan failures), {at15} at mu = 1.5 ({fail15} scan failures)"),
    )
}

fn cross_check(fx: &Fixtures) -> Outcome {
    let r = &fx.quintic;
    let idx: Vec<Option<usize>> = r.cycles.iter().map(|c| c.interval_index).collect();
    let interior = r.cycles.iter().all(|c| !c.at_border);
    let distinct = idx.len() == 2 && idx[0].is_some() && idx[1].is_some() && idx[0] != idx[1];
    let sparse = r.lemma2.interior_counts.iter().all(|&k| k <= 1);
    let amps: Vec<f64> = r.cycles.iter().map(|c| c.amplitude).collect();
    check(
        distinct && interior && sparse && r.lemma2_consistent,
        format!("amplitudes {amps:.4?} in intervals {idx:?}, interior counts {:?}", r.lemma2.interior_counts),
        format!(
            "amplitudes {amps:?} in intervals {idx:?}, interior counts {:?}, diagnostics {:?}",
            r.lemma2.interior_counts, r.lemma2.diagnostics
        ),
    )
}

fn small_fixtures(fx: &Fixtures) -> Outcome {
    let hard = fx.hard.cycles.len();
    let vdp = &fx.vdp.cycles;
    let vdp_ok = vdp.len() == 1 && vdp[0].stability == Stability::Stable;
    let center = fx.center.center_detected;
    let db = degree_bound(3).map_err(|e| e.to_string())?;
    check(
        hard == 0 && vdp_ok && center && db == 5,
        format!("x + x^3: {hard} cycles; x^3/3 - x: 1 stable cycle; x^2: center; degree bound(3) = {db}"),
        format!(
            "x + x^3: {hard} cycles; x^3/3 - x: {:?}; x^2 center: {center}; degree bound(3) = {db}",
            vdp.iter().map(|c| (c.amplitude, c.stability)).collect::<Vec<_>>()
        ),
    )
}

fn random_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11e4a2d);
    // Stiff high-degree cases would otherwise burn the full budget on every
    // point that does not come back.
    let opts = OracleOptions {
        max_steps: 200_000,
        ..OracleOptions::default()
    };
    let mut worst = Vec::new();
    let mut failed_points = 0;
    const CASES: usize = 50;
    for case in 0..CASES {
        let n = rng.random_range(1..=7usize);
        let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
        if a[n - 1] == 0.0 {
            a[n - 1] = 1.0;
        }
        let cfg = AnalysisConfig::new(InputKind::F, a.clone());
        let f = cfg.polynomial().map_err(|e| e.to_string())?;
        let p = build_partition(&f, None).map_err(|e| e.to_string())?;
        let (lo, hi) = cfg.scan_range(&p);
        let s = find_limit_cycles(&f, lo, hi, 100, &opts).map_err(|e| format!("case {case} {a:?}: {e}"))?;
        failed_points += s.scan.failures.len();
        let bound = 2 * n - 1;
        if s.cycles.len() > bound {
            worst.push(format!("case {case} {a:?}: {} cycles > {bound}", s.cycles.len()));
        }
    }
    check(
        worst.is_empty(),
        format!("{CASES} random F, every cycle count within 2n - 1 ({failed_points} scan points did not return)"),
        worst.join("; "),
    )
}

fn phi_agreement(fx: &Fixtures) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, r) in [("x^3/3 - x", &fx.vdp), ("0.32 quintic", &fx.quintic)] {
        let oracle: Vec<f64> = r.cycles.iter().map(|c| c.amplitude).collect();
        let cands: Vec<f64> = r.phi_candidates.iter().flat_map(|s| s.candidates.iter().map(|c| c.amplitude)).collect();
        let worst = cands
            .iter()
            .map(|a| oracle.iter().map(|o| (a - o).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        ok &= !cands.is_empty() && worst <= 1e-3;
        lines.push(format!("{name}: {} candidates, worst gap {worst:.1e}", cands.len()));
    }
    let msg = lines.join("; ");
    check(ok, msg.clone(), msg)
}

fn identities(fx: &Fixtures) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b9);
    let mut ulp_worst = 0u64;
    for _ in 0..100 {
        let n = rng.random_range(1..=8usize);
        let c: Vec<f64> = (0..=n).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let f = Polynomial::new(c);
        let p0 = compute_pl(&f, 0).map_err(|e| e.to_string())?;
        let df = f.derivative();
        for k in 0..df.coeffs().len().max(p0.coeffs().len()) {
            let (a, b) = (p0.coeff(k), df.coeff(k));
            let ulps = if a == b { 0 } else { (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs() };
            ulp_worst = ulp_worst.max(ulps);
        }
    }

    let mut energy_worst: f64 = 0.0;
    let mut solver_branches = 0;
    let mut compact_worst: f64 = 0.0;
    let mut signs = Vec::new();
    for (_, r) in fx.all() {
        for c in &r.identity_residuals.checks {
            if c.source != BranchSource::OracleOrbit {
                solver_branches += 1;
                energy_worst = energy_worst.max(c.energy_residual);
            }
            if c.compact.certified != CertifiedSign::Both {
                signs.push(c.compact.certified);
                compact_worst = compact_worst.max(c.compact.certified_residual);
            }
        }
    }
    let one_sign = matches!(signs.first(), Some(CertifiedSign::Plus | CertifiedSign::Minus))
        && signs.iter().all(|s| *s == signs[0]);
    let summary = format!(
        "P0 = F' within {ulp_worst} ulp; energy residual {energy_worst:.1e} on {solver_branches} solver branches; \
         sign {:?} on {} branches, residual {compact_worst:.1e}",
        signs.first(),
        signs.len()
    );
    check(
        ulp_worst <= 4 && solver_branches > 0 && energy_worst <= 1e-6 && one_sign && compact_worst <= COMPACT_TOLERANCE,
        summary.clone(),
        summary,
    )
}

fn exact_case() -> Outcome {
    let zero = Polynomial::zero();
    let opts = OracleOptions::default();
    let popts = PhiOptions::default();
    let mut period_err: f64 = 0.0;
    let mut return_err: f64 = 0.0;
    let mut phi_err: f64 = 0.0;
    for a in [0.5, 1.0, 2.0, 5.0] {
        let (_, back) = return_orbit(&zero, a, &opts).map_err(|e| e.to_string())?;
        period_err = period_err.max((back.t - std::f64::consts::TAU).abs());
        let pa = poincare_return(&zero, a, &opts).map_err(|e| e.to_string())?;
        return_err = return_err.max((pa - a).abs());
        let t = integrate_phi(&zero, 0.0, a, 2.0 * a, &popts).map_err(|e| e.to_string())?;
        let x = t.zero_crossing().ok_or_else(|| format!("no zero crossing for phi0 = {a}"))?;
        phi_err = phi_err.max((x - a).abs());
    }
    let msg = format!("period error {period_err:.1e}, |P(A) - A| {return_err:.1e}, crossing error {phi_err:.1e}");
    check(period_err <= 1e-6 && return_err <= 1e-8 && phi_err <= 1e-8, msg.clone(), msg)
}

fn three_critical_points() -> Outcome {
    let (c, e) = (-1.0, -0.75);
    let sq = &Polynomial::new(vec![-1.0, 0.0, 1.0]) * &Polynomial::new(vec![-1.0, 0.0, 1.0]);
    let lin = Polynomial::new(vec![1.0, c * e]);
    let quad = Polynomial::new(vec![0.125, e, 1.0]);
    let df = &(&sq * &lin) * &quad;
    let mut cfg = AnalysisConfig::new(InputKind::FPrime, df.coeffs().to_vec());
    // F has degree 8 here; past x = 2.5 the scan is stiff and slow.
    cfg.a_hi = Some(2.5);
    let r = run_analysis(&cfg).map_err(|e| e.to_string())?;
    let warned = r.warnings.iter().any(|w| w.contains("F/F' ambiguity"));
    check(
        r.bounds.partition_bound == 7 && warned,
        format!("critical points {:.4?}, partition bound 7, ambiguity warned", r.critical_points),
        format!(
            "critical points {:?}, partition bound {}, ambiguity warned: {warned}",
            r.critical_points, r.bounds.partition_bound
        ),
    )
}

fn main() {
    let start = Instant::now();
    let fixtures = Fixtures::load();
    println!("fixture analyses took {:.1} s", start.elapsed().as_secs_f64());
    let with = |f: fn(&Fixtures) -> Outcome| -> Outcome {
        match &fixtures {
            Ok(fx) => f(fx),
            Err(e) => Err(format!("fixture analysis failed: {e}")),
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        (f(), t.elapsed().as_secs_f64())
    };
    let results: Vec<(&str, (Outcome, f64))> = vec![
        ("critical points of the 0.32 quintic", timed(&critical_points)),
        ("discriminant threshold", timed(&discriminant_threshold)),
        ("cycle counts at mu = 3 and 1.5", timed(&cycle_counts)),
        ("partition cross-check", timed(&|| with(cross_check))),
        ("cubic and quadratic damping", timed(&|| with(small_fixtures))),
        ("cycle bound on random F", timed(&random_bound)),
        ("shooting and oracle amplitudes agree", timed(&|| with(phi_agreement))),
        ("identities", timed(&|| with(identities))),
        ("exact case F = 0", timed(&exact_case)),
        ("bound with three critical points", timed(&three_critical_points)),
    ];
    let mut failed = 0;
    for (i, (name, (outcome, secs))) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
