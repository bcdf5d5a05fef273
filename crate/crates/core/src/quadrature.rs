//! Gauss–Legendre rules and the radial panel rules used for jump integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

fn cached_rule(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=32).map(gauss_legendre).collect());
    &rules[order.clamp(1, 32) - 1]
}

/// Integrate `f` over `[a, b]` with composite Gauss–Legendre on `panels` equal panels.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (t, w) = cached_rule(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (ti, wi) in t.iter().zip(w) {
            acc += wi * f(lo + 0.5 * h * (ti + 1.0));
        }
    }
    0.5 * h * acc
}

/// Exact `∫_a^b r^p dr` (`b` may be infinite when `p < −1`).
pub fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if (p + 1.0).abs() < 1e-14 {
        return (b / a).ln();
    }
    if b.is_infinite() {
        assert!(p < -1.0, "divergent power tail");
        return -a.powf(p + 1.0) / (p + 1.0);
    }
    (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
}

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * f(*r)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Parameters of the radial rules: logarithmic panels (`per_decade` panels of Gauss
/// order `order`, i.e. `per_decade·order` nodes per decade), inner Taylor radius `r0`,
/// outer radius `r_outer` beyond which tails are analytic, and linear refinement of
/// oscillatory integrands with `panels_per_period` panels per period up to
/// `oscillation_cap` refined panels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialQuadrature {
    pub per_decade: usize,
    pub order: usize,
    pub r0: f64,
    pub r_outer: f64,
    pub oscillation_cap: usize,
    pub panels_per_period: usize,
    pub angular_nodes: usize,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self {
            per_decade: 16,
            order: 4,
            r0: 1e-3,
            r_outer: 1e3,
            oscillation_cap: 2048,
            panels_per_period: 8,
            angular_nodes: 64,
        }
    }
}

impl RadialQuadrature {
    /// Inner Taylor radius adapted to a radial frequency `omega`.
    pub fn inner_radius(&self, omega: f64) -> f64 {
        if omega > 0.0 {
            self.r0.min(0.1 / omega)
        } else {
            self.r0
        }
    }

    /// Rule for `∫_a^b g(r) dr` with `0 < a < b < ∞`, breakpoints honoured, panels
    /// refined so that no panel exceeds `1/panels_per_period` of the period `2π/omega`.
    /// Refinement stops once `oscillation_cap` refined panels have been spent; the
    /// returned radius is the end of the resolved range (`b` when fully resolved).
    pub fn rule(&self, a: f64, b: f64, omega: f64, breaks: &[f64]) -> (Rule, f64) {
        let mut rule = Rule::default();
        if !(b > a) {
            return (rule, b.max(a));
        }
        let (t, w) = cached_rule(self.order);
        let mut pts: Vec<f64> = breaks.iter().cloned().filter(|p| *p > a && *p < b && p.is_finite()).collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs());
        let max_len = if omega > 0.0 { 2.0 * PI / (omega * self.panels_per_period as f64) } else { f64::INFINITY };
        let mut refined = 0usize;
        for seg in pts.windows(2) {
            let (s, e) = (seg[0], seg[1]);
            let np = ((self.per_decade as f64) * (e / s).log10()).ceil().max(1.0) as usize;
            let (ls, le) = (s.ln(), e.ln());
            let hl = (le - ls) / np as f64;
            for p in 0..np {
                let lo = (ls + p as f64 * hl).exp();
                let hi = if p + 1 == np { e } else { (ls + (p + 1) as f64 * hl).exp() };
                if hi - lo > max_len {
                    let m = ((hi - lo) / max_len).ceil() as usize;
                    if refined + m > self.oscillation_cap {
                        return (rule, lo);
                    }
                    refined += m;
                    let h = (hi - lo) / m as f64;
                    for q in 0..m {
                        let plo = lo + q as f64 * h;
                        for (ti, wi) in t.iter().zip(w) {
                            rule.nodes.push(plo + 0.5 * h * (ti + 1.0));
                            rule.weights.push(0.5 * h * wi);
                        }
                    }
                } else {
                    let (l0, l1) = (lo.ln(), hi.ln());
                    for (ti, wi) in t.iter().zip(w) {
                        let r = (l0 + 0.5 * (l1 - l0) * (ti + 1.0)).exp();
                        rule.nodes.push(r);
                        rule.weights.push(0.5 * (l1 - l0) * wi * r);
                    }
                }
            }
        }
        (rule, b)
    }
}
