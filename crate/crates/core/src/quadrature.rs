//! Integration and differentiation over sampled plane curves `(x, phi)`.
//!
//! Curves produced near a turning point behave like `phi ~ sqrt(A - x)`, so a
//! fixed parameterization by `x` loses accuracy there. Each panel is
//! parameterized by whichever coordinate gives the smoother local
//! interpolant.

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Highest divided difference of `v` over the nodes `s`.
fn top_divided_difference(s: &[f64], v: &[f64]) -> f64 {
    let mut d = v.to_vec();
    for level in 1..s.len() {
        for i in (level..s.len()).rev() {
            d[i] = (d[i] - d[i - 1]) / (s[i] - s[i - level]);
        }
    }
    d[s.len() - 1]
}

/// Rough size of the tangent-angle error when `v` is interpolated as a
/// function of `s` over the window.
fn angle_error(s: &[f64], v: &[f64]) -> f64 {
    let k = s.len() - 1;
    let span = s[k] - s[0];
    let slope = (v[k] - v[0]) / span;
    top_divided_difference(s, v).abs() * span.abs().powi(k as i32 - 1) / (1.0 + slope * slope)
}

/// Choose the parameter for a run of sample indices: whichever coordinate is
/// monotone and gives the smoother interpolant. Stencils in `x` degrade near
/// turning points, stencils in `phi` near extrema of `phi`.
fn pick_param<'a>(xs: &'a [f64], phis: &'a [f64], idx: &[usize]) -> &'a [f64] {
    let monotone = |v: &[f64]| {
        let up = idx.windows(2).all(|w| v[w[1]] > v[w[0]]);
        let down = idx.windows(2).all(|w| v[w[1]] < v[w[0]]);
        up || down
    };
    match (monotone(xs), monotone(phis)) {
        (true, false) => xs,
        (false, true) => phis,
        (false, false) => xs,
        (true, true) => {
            let x: Vec<f64> = idx.iter().map(|&k| xs[k]).collect();
            let p: Vec<f64> = idx.iter().map(|&k| phis[k]).collect();
            if angle_error(&p, &x) < angle_error(&x, &p) {
                phis
            } else {
                xs
            }
        }
    }
}

fn lagrange_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| (at - nodes[k]) / (nodes[j] - nodes[k]))
                .product()
        })
        .collect()
}

fn dot(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Running integral `C[j] = ∫ h dx` along the curve from sample 0 to sample j,
/// with `h` given at the samples. The sign follows the direction of travel in x.
/// Each panel uses cubic interpolants through four neighbouring samples.
pub fn cumulative_curve_integral(xs: &[f64], phis: &[f64], h: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert!(phis.len() == n && h.len() == n, "sample arrays differ in length");
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (h[0] + h[1]) * (xs[1] - xs[0]);
        return out;
    }
    let width = n.min(4);
    for j in 0..n - 1 {
        let start = j.saturating_sub(1).min(n - width);
        let idx: Vec<usize> = (start..start + width).collect();
        let param = pick_param(xs, phis, &idx);
        let s = &param[start..start + width];
        let (xv, hv) = (&xs[start..start + width], &h[start..start + width]);
        let (a, b) = (param[j], param[j + 1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (node, weight) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
            let t = mid + half * node;
            let hval = dot(&lagrange_weights(s, t), hv);
            let dx = dot(&lagrange_derivative_weights(s, t), xv);
            acc += weight * hval * dx;
        }
        out[j + 1] = out[j] + acc * half;
    }
    out
}

/// Running integral of a function of x whose derivative is known at the
/// samples: trapezoid plus the endpoint derivative correction.
pub fn cumulative_with_derivative(xs: &[f64], v: &[f64], dv: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let w = xs[j + 1] - xs[j];
        out[j + 1] = out[j] + 0.5 * w * (v[j] + v[j + 1]) + w * w * (dv[j] - dv[j + 1]) / 12.0;
    }
    out
}

/// Weights of the derivative at `at` of the Lagrange interpolant through `nodes`.
pub fn lagrange_derivative_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let denom: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            let mut num = 0.0;
            for m in (0..n).filter(|&m| m != j) {
                num += (0..n)
                    .filter(|&k| k != j && k != m)
                    .map(|k| at - nodes[k])
                    .product::<f64>();
            }
            num / denom
        })
        .collect()
}

/// Derivative of sampled `v` with respect to `s` at every sample, from
/// five-point (fewer near short arrays) Lagrange stencils.
pub fn sampled_derivative(s: &[f64], v: &[f64]) -> Vec<f64> {
    let n = s.len();
    let width = n.min(5);
    (0..n)
        .map(|j| {
            let start = j.saturating_sub(width / 2).min(n - width);
            let nodes = &s[start..start + width];
            let w = lagrange_derivative_weights(nodes, s[j]);
            dot(&w, &v[start..start + width])
        })
        .collect()
}

/// Tangent of the curve at each interior sample as `(dx/ds, dphi/ds)` with the
/// panel parameter chosen as in [`cumulative_curve_integral`], normalised to
/// unit length. Needs at least five samples.
pub fn unit_tangents(xs: &[f64], phis: &[f64]) -> Vec<(f64, f64)> {
    let n = xs.len();
    let width = n.min(5);
    (0..n)
        .map(|j| {
            let start = j.saturating_sub(width / 2).min(n - width);
            let idx: Vec<usize> = (start..start + width).collect();
            let param = pick_param(xs, phis, &idx);
            let nodes = &param[start..start + width];
            let w = lagrange_derivative_weights(nodes, param[j]);
            let dx = dot(&w, &xs[start..start + width]);
            let dp = dot(&w, &phis[start..start + width]);
            let norm = dx.hypot(dp);
            (dx / norm, dp / norm)
        })
        .collect()
}
