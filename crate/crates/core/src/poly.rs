//! Dense real polynomials in ascending coefficient order.
//!
//! Besides the usual arithmetic this module isolates every real root of a
//! polynomial on an interval. Isolation runs Sturm sequences on the
//! square-free factors of Yun's decomposition, so each factor's roots carry
//! the factor's multiplicity. Floating point is used throughout; gcds are
//! approximate with a relative remainder threshold.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Remainders below this (relative to a unit-normalised dividend) count as zero.
pub const GCD_THRESHOLD: f64 = 1e-10;
/// Bracket width at which bisection hands over to Newton polishing.
pub const BISECTION_WIDTH: f64 = 1e-8;
/// Newton polishing budget.
pub const NEWTON_STEPS: usize = 20;

#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, dropping trailing zeros.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c * x^k`
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// Builds `F(x) = a_1 x + ... + a_n x^n` from `[a_1, ..., a_n]`.
    pub fn from_odd_free(linear_up: &[f64]) -> Self {
        let mut coeffs = Vec::with_capacity(linear_up.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(linear_up);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k + 1) as f64),
        );
        Self::new(coeffs)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect::<Vec<_>>())
    }

    /// Scales so the largest coefficient magnitude is one. Signs are kept.
    pub fn normalized(&self) -> Self {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            Self::zero()
        } else {
            self.scale(1.0 / m)
        }
    }

    /// Euclidean division `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(Error::DegenerateInput("division by the zero polynomial".into()));
        }
        let dd = divisor.degree();
        if self.is_zero() || self.degree() < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Drops leading coefficients that are negligible against `scale`.
    fn trimmed(mut self, rel: f64, scale: f64) -> Self {
        while let Some(&c) = self.coeffs.last() {
            if c.abs() <= rel * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        self
    }

    /// Approximate gcd by a normalised Euclidean remainder sequence. The result
    /// is unit-normalised; a constant result means the inputs are coprime.
    pub fn approx_gcd(&self, other: &Self, threshold: f64) -> Self {
        let mut a = self.normalized();
        let mut b = other.normalized();
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        loop {
            if b.degree() == 0 {
                return Self::constant(1.0);
            }
            let (_, r) = a.div_rem(&b).expect("b is nonzero");
            let r = r.trimmed(threshold, 1.0);
            if r.is_zero() || r.max_abs_coeff() <= threshold {
                return b;
            }
            a = b;
            b = r.normalized();
        }
    }

    /// Yun's square-free decomposition: pairs `(factor, multiplicity)` with
    /// square-free, pairwise coprime factors of positive degree.
    pub fn square_free_factors(&self) -> Vec<(Polynomial, usize)> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let p = self.normalized();
        let dp = p.derivative();
        let g = p.approx_gcd(&dp, GCD_THRESHOLD);
        if g.degree() == 0 {
            return vec![(p, 1)];
        }
        let mut factors = Vec::new();
        let mut b = p.div_rem(&g).expect("g nonzero").0;
        let mut c = dp.div_rem(&g).expect("g nonzero").0;
        let mut d = &c - &b.derivative();
        let mut multiplicity = 1;
        while b.degree() > 0 {
            let d_small = d.max_abs_coeff() <= GCD_THRESHOLD * b.max_abs_coeff().max(1.0);
            let a = if d_small {
                b.normalized()
            } else {
                b.approx_gcd(&d, GCD_THRESHOLD)
            };
            if a.degree() > 0 {
                factors.push((a.clone(), multiplicity));
            }
            let (nb, _) = b.div_rem(&a).expect("a nonzero");
            let nc = if d_small {
                Polynomial::zero()
            } else {
                d.div_rem(&a).expect("a nonzero").0
            };
            b = nb;
            c = nc;
            d = &c - &b.derivative();
            multiplicity += 1;
            if multiplicity > self.degree() + 1 {
                break;
            }
        }
        factors
    }

    /// Every real root in `[lo, hi]` with its multiplicity, sorted.
    /// Infinite endpoints are allowed.
    pub fn real_roots(&self, lo: f64, hi: f64) -> Result<RootSet> {
        if self.is_zero() {
            return Err(Error::DegenerateInput(
                "root isolation of the zero polynomial".into(),
            ));
        }
        if !(lo < hi) {
            return Err(Error::DegenerateInput(format!(
                "empty root interval [{lo}, {hi}]"
            )));
        }
        let mut roots = Vec::new();
        for (factor, multiplicity) in self.square_free_factors() {
            for value in isolate_square_free(&factor, lo, hi) {
                let value = if multiplicity == 1 {
                    polish(self, value, lo, hi)
                } else {
                    value
                };
                roots.push(Root {
                    value,
                    multiplicity,
                });
            }
        }
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        roots.dedup_by(|b, a| {
            if (b.value - a.value).abs() <= 1e-12 * a.value.abs().max(1.0) {
                a.multiplicity += b.multiplicity;
                true
            } else {
                false
            }
        });
        Ok(RootSet {
            roots,
            interval: (lo, hi),
        })
    }

    /// Cauchy bound: every root satisfies `|r| < bound`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        1.0 + self.coeffs[..self.coeffs.len().saturating_sub(1)]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs() / lead))
    }
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}x", c.abs())?,
                _ => write!(f, "{}x^{}", c.abs(), k)?,
            }
        }
        Ok(())
    }
}

fn zip_coeffs(a: &Polynomial, b: &Polynomial, op: impl Fn(f64, f64) -> f64) -> Polynomial {
    let n = a.coeffs.len().max(b.coeffs.len());
    Polynomial::new((0..n).map(|k| op(a.coeff(k), b.coeff(k))).collect::<Vec<_>>())
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        zip_coeffs(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        zip_coeffs(self, rhs, |a, b| a - b)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub interval: (f64, f64),
}

impl RootSet {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// Sturm chain of a square-free polynomial.
#[derive(Debug, Clone)]
pub struct SturmSequence {
    chain: Vec<Polynomial>,
}

impl SturmSequence {
    pub fn new(p: &Polynomial) -> Self {
        let mut chain = vec![p.normalized()];
        let d = p.derivative().normalized();
        if !d.is_zero() {
            chain.push(d);
        }
        while chain.len() >= 2 {
            let n = chain.len();
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]).expect("nonzero chain");
            let r = r.trimmed(GCD_THRESHOLD, 1.0);
            if r.is_zero() || r.max_abs_coeff() <= GCD_THRESHOLD {
                break;
            }
            chain.push((-&r).normalized());
        }
        Self { chain }
    }

    /// Sign variations of the chain at `x`; infinities use leading terms.
    pub fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0_f64;
        for p in &self.chain {
            let v = if x.is_infinite() {
                let parity = if p.degree() % 2 == 0 { 1.0 } else { x.signum() };
                p.leading() * parity
            } else {
                p.eval(x)
            };
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && (v < 0.0) != (last < 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// Number of distinct roots in `(a, b]`.
    pub fn count(&self, a: f64, b: f64) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }
}

fn isolate_square_free(q: &Polynomial, lo: f64, hi: f64) -> Vec<f64> {
    if q.degree() == 0 {
        return Vec::new();
    }
    if q.degree() == 1 {
        let r = -q.coeff(0) / q.coeff(1);
        return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
    }
    let bound = q.cauchy_bound();
    let a = lo.max(-bound);
    let b = hi.min(bound);
    let mut out = Vec::new();
    if a > b {
        return out;
    }
    if q.eval(a) == 0.0 {
        out.push(a);
    }
    let sturm = SturmSequence::new(q);
    let mut stack = vec![(a, b, sturm.count(a, b))];
    while let Some((a, b, n)) = stack.pop() {
        if n == 0 {
            continue;
        }
        let width = b - a;
        if n == 1 || width <= 1e-14 * a.abs().max(b.abs()).max(1.0) {
            out.push(refine_single(q, &sturm, a, b));
            continue;
        }
        let m = split_point(q, a, b);
        stack.push((a, m, sturm.count(a, m)));
        stack.push((m, b, sturm.count(m, b)));
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Midpoint of `(a, b)`, nudged off points where `q` numerically vanishes:
/// Sturm counts are unreliable exactly at a root.
fn split_point(q: &Polynomial, a: f64, b: f64) -> f64 {
    let floor = 1e-12 * q.max_abs_coeff();
    let mut best = 0.5 * (a + b);
    let mut best_val = q.eval(best).abs();
    for shift in [0.0, 0.0625, -0.0625, 0.125, -0.125] {
        let m = a + (b - a) * (0.5 + shift);
        let v = q.eval(m).abs();
        if v > floor {
            return m;
        }
        if v > best_val {
            best = m;
            best_val = v;
        }
    }
    best
}

/// Shrinks `(a, b]`, known to hold exactly one root, by Sturm-counted
/// bisection, then polishes with bracketed Newton steps.
fn refine_single(q: &Polynomial, sturm: &SturmSequence, mut a: f64, mut b: f64) -> f64 {
    if q.eval(b) == 0.0 {
        return b;
    }
    while b - a > BISECTION_WIDTH {
        let m = split_point(q, a, b);
        if m <= a || m >= b {
            break;
        }
        if sturm.count(a, m) >= 1 {
            b = m;
        } else {
            a = m;
        }
    }
    newton_in_bracket(q, 0.5 * (a + b), a, b)
}

fn newton_in_bracket(q: &Polynomial, mut x: f64, a: f64, b: f64) -> f64 {
    let slack = (b - a).max(1e-12);
    let (lo, hi) = (a - slack, b + slack);
    for _ in 0..NEWTON_STEPS {
        let (v, d) = q.eval_with_derivative(x);
        if v == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - v / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let done = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Final Newton polish of a simple root against the original polynomial.
fn polish(p: &Polynomial, x: f64, lo: f64, hi: f64) -> f64 {
    let polished = newton_in_bracket(p, x, x - 1e-7, x + 1e-7);
    if polished.abs() < f64::INFINITY
        && p.eval(polished).abs() <= p.eval(x).abs()
        && polished >= lo
        && polished <= hi
    {
        polished
    } else {
        x
    }
}
