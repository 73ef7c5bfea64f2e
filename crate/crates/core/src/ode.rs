//! Dormand–Prince 5(4) stepper with the standard 5th-order continuous extension.
//!
//! The stepper is driven one accepted step at a time so callers can run their
//! own event logic against [`DenseStep`]. Integration may run in either
//! direction of the independent variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }

    pub fn tightened(self, factor: f64) -> Self {
        Self {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
        }
    }
}

/// Interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> [f64; N] {
        self.cont[0]
    }

    /// Evaluates at `t` (meant for `t` inside the step).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        self.eval_fraction(s)
    }

    /// Evaluates at fraction `s` of the step, `s` in `[0, 1]`.
    pub fn eval_fraction(&self, s: f64) -> [f64; N] {
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }
}

pub struct Dopri5<const N: usize> {
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    dir: f64,
    tol: Tolerance,
    max_h: f64,
    max_steps: usize,
    attempts: usize,
    accepted: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = 0.0;
        for (k, c) in terms {
            acc += c * k[i];
        }
        y[i] + h * acc
    })
}

fn all_finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<const N: usize> Dopri5<N> {
    /// Prepares integration from `(t0, y0)` toward `t_bound`.
    pub fn new<F>(f: &F, t0: f64, y0: [f64; N], t_bound: f64, tol: Tolerance, max_steps: usize) -> Result<Self>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        if !all_finite(&y0) || !t0.is_finite() {
            return Err(Error::DegenerateInput("non-finite initial state".into()));
        }
        let dir = if t_bound >= t0 { 1.0 } else { -1.0 };
        let k1 = f(t0, &y0);
        if !all_finite(&k1) {
            return Err(Error::DegenerateInput(format!(
                "non-finite derivative at the initial point t = {t0}"
            )));
        }
        let mut s = Self {
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            dir,
            tol,
            max_h: f64::INFINITY,
            max_steps,
            attempts: 0,
            accepted: 0,
        };
        s.h = s.initial_step(f, (t_bound - t0).abs());
        Ok(s)
    }

    /// Caps the magnitude of every step.
    pub fn with_max_step(mut self, max_h: f64) -> Self {
        self.max_h = max_h;
        self.h = self.h.min(max_h);
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.tol.atol + self.tol.rtol * a.abs().max(b.abs())
    }

    fn initial_step<F>(&self, f: &F, span: f64) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        if span == 0.0 {
            return 0.0;
        }
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sc = self.weight(self.y[i], self.y[i]);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k1[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(&self.y, self.dir * h0, &[(&self.k1, 1.0)]);
        let k2 = f(self.t + self.dir * h0, &y1);
        let mut d2 = 0.0;
        for i in 0..N {
            let sc = self.weight(self.y[i], self.y[i]);
            d2 += ((k2[i] - self.k1[i]) / sc).powi(2);
        }
        let d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        if !h1.is_finite() {
            return h0;
        }
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances by one accepted step toward `t_bound`. `admissible` may veto a
    /// step whose endpoint left the region where the caller's formulation is
    /// valid; vetoed steps are retried at a quarter of the size.
    pub fn step<F, V>(&mut self, f: &F, t_bound: f64, admissible: V) -> Result<DenseStep<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        V: Fn(&[f64; N]) -> bool,
    {
        let remaining = (t_bound - self.t) * self.dir;
        if remaining <= 0.0 {
            return Err(Error::DegenerateInput("stepper already at its bound".into()));
        }
        let min_h = 16.0 * f64::EPSILON * self.t.abs().max(1e-300);
        loop {
            self.attempts += 1;
            if self.attempts > self.max_steps {
                return Err(Error::MaxSteps { at: self.t });
            }
            let mut h = self.h.abs().min(remaining).min(self.max_h);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h < min_h {
                return Err(Error::StepUnderflow { at: self.t });
            }
            let hs = h * self.dir;
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            let k2 = f(t + C2 * hs, &axpy(y, hs, &[(k1, A21)]));
            let k3 = f(t + C3 * hs, &axpy(y, hs, &[(k1, A31), (&k2, A32)]));
            let k4 = f(t + C4 * hs, &axpy(y, hs, &[(k1, A41), (&k2, A42), (&k3, A43)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(y, hs, &[(k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
            );
            let k6 = f(
                t + hs,
                &axpy(y, hs, &[(k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]),
            );
            let y_new = axpy(y, hs, &[(k1, A71), (&k3, A73), (&k4, A74), (&k5, A75), (&k6, A76)]);
            let t_new = if last { t_bound } else { t + hs };
            let k7 = f(t_new, &y_new);

            let stages_ok = [&k2, &k3, &k4, &k5, &k6, &k7, &y_new].iter().all(|v| all_finite(v));
            if !stages_ok {
                self.h = h * MIN_FACTOR;
                continue;
            }
            let mut err = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err += (e / self.weight(y[i], y_new[i])).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                self.h = h * MIN_FACTOR;
                continue;
            }
            if err > 1.0 {
                let factor = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                self.h = h * factor;
                continue;
            }
            if !admissible(&y_new) {
                self.h = h * 0.25;
                continue;
            }

            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let cont = [
                *y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ];
            let dense = DenseStep {
                t0: t,
                h: t_new - t,
                cont,
            };
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            self.h = h * factor;
            self.t = t_new;
            self.y = y_new;
            self.k1 = k7;
            self.accepted += 1;
            return Ok(dense);
        }
    }
}

/// Bracketed root of a scalar function by the Illinois variant of regula falsi.
/// Requires `fa` and `fb` of opposite sign (or one of them zero).
pub fn bracketed_root<G>(g: G, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> f64
where
    G: Fn(f64) -> f64,
{
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        let fc = g(c);
        if fc == 0.0 {
            return c;
        }
        if (fc < 0.0) == (fb < 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}
