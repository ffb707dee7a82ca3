//! Globally adaptive Gauss-Kronrod quadrature (10-point Gauss embedded in
//! 21-point Kronrod) on finite and infinite intervals.
//!
//! Integrands return an [`Estimate`] so that integrals can be nested: the
//! error of an inner integral is integrated alongside its value and added to
//! the outer error estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Kronrod abscissae on `[0, 1]`, descending; the odd-indexed ones are Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Gauss weights for `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// A value with an absolute error bound and the number of point evaluations behind it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    pub n_evals: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, err: 0.0, n_evals: 1 }
    }
}

impl From<f64> for Estimate {
    fn from(v: f64) -> Self {
        Estimate::exact(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub err: f64,
    pub n_evals: u64,
    pub converged: bool,
}

impl From<Integral> for Estimate {
    fn from(i: Integral) -> Self {
        Estimate { value: i.value, err: i.err, n_evals: i.n_evals }
    }
}

/// How `[0, 1]`-ish parameter `t` maps onto the real segment.
#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    /// `x = a + t / (1 - t)`, `t` in `[0, 1)`.
    Upper(f64),
    /// `x = b - t / (1 - t)`.
    Lower(f64),
}

impl Map {
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Finite => (t, 1.0),
            Map::Upper(a) => {
                let s = 1.0 - t;
                (a + t / s, 1.0 / (s * s))
            }
            Map::Lower(b) => {
                let s = 1.0 - t;
                (b - t / s, 1.0 / (s * s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    map: usize,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn gk21<F: FnMut(f64) -> Estimate>(f: &mut F, map: Map, a: f64, b: f64, evals: &mut u64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| {
        let (x, jac) = map.apply(t);
        let e = f(x);
        *evals += e.n_evals.max(1);
        (e.value * jac, e.err * jac.abs())
    };
    let (fc, ec) = eval(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = WGK[10] * fc.abs();
    let mut inner_err = WGK[10] * ec;
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, e1) = eval(center - dx);
        let (f2, e2) = eval(center + dx);
        fv[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        inner_err += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let h = half.abs();
    let (res_k, res_abs, res_asc) = (res_k * half, res_abs * h, res_asc * h);
    let mut err = (res_k - res_g * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k, err + inner_err * h)
}

/// Integrates `f` over `[a, b]` (either end may be infinite), split first at
/// the finite `breakpoints` that lie strictly inside.
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, breakpoints: &[f64], opts: &AdaptiveOptions) -> Integral
where
    F: FnMut(f64) -> E,
    E: Into<Estimate>,
{
    if a == b {
        return Integral { value: 0.0, err: 0.0, n_evals: 0, converged: true };
    }
    if a > b {
        let r = integrate(f, b, a, breakpoints, opts);
        return Integral { value: -r.value, ..r };
    }
    let mut g = |x: f64| f(x).into();
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b && c.is_finite()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pts = vec![a];
    pts.extend(cuts);
    pts.push(b);

    let mut maps = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evals = 0u64;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (map, ta, tb) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Map::Finite, lo, hi),
            (true, false) => (Map::Upper(lo), 0.0, 1.0),
            (false, true) => (Map::Lower(hi), 0.0, 1.0),
            (false, false) => {
                // Split the whole line at 0.
                for m in [Map::Lower(0.0), Map::Upper(0.0)] {
                    maps.push(m);
                    let (v, e) = gk21(&mut g, m, 0.0, 1.0, &mut evals);
                    heap.push(Segment { a: 0.0, b: 1.0, map: maps.len() - 1, value: v, err: e });
                }
                continue;
            }
        };
        maps.push(map);
        let (v, e) = gk21(&mut g, map, ta, tb, &mut evals);
        heap.push(Segment { a: ta, b: tb, map: maps.len() - 1, value: v, err: e });
    }

    let total = |h: &BinaryHeap<Segment>| h.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    loop {
        let (value, err) = total(&heap);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if err <= target {
            return Integral { value, err, n_evals: evals, converged: true };
        }
        if heap.len() >= opts.max_intervals {
            return Integral { value, err, n_evals: evals, converged: false };
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(Segment { err: 0.0, ..worst });
            let (value, err) = total(&heap);
            return Integral { value, err: err + worst.err, n_evals: evals, converged: false };
        }
        let map = maps[worst.map];
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk21(&mut g, map, lo, hi, &mut evals);
            heap.push(Segment { a: lo, b: hi, map: worst.map, value: v, err: e });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_polynomials() {
        // Kronrod-21 is exact to degree 31, Gauss-10 to degree 19.
        let mut evals = 0;
        for deg in [0, 5, 19, 31] {
            let (v, _) = gk21(&mut |x: f64| Estimate::exact(x.powi(deg)), Map::Finite, 0.0, 1.0, &mut evals);
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
        let mut gauss = 0.0;
        for j in 0..5 {
            let x = XGK[2 * j + 1];
            gauss += WG[j] * (x.powi(18) + (-x).powi(18));
        }
        assert!((gauss - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_and_singular() {
        let o = AdaptiveOptions::default();
        let r = integrate(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &[], &o);
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        let r = integrate(|x: f64| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, &[], &o);
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], &o);
        assert!((r.value - 2.0).abs() < 1e-9 && r.converged);
        let r = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], &o);
        assert!((r.value - 2.5).abs() < 1e-14);
        let r = integrate(|x: f64| x, 1.0, 0.0, &[], &o);
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn nested_errors_propagate() {
        let o = AdaptiveOptions::default();
        let r = integrate(
            |x: f64| {
                let inner = integrate(|y: f64| x * y, 0.0, 1.0, &[], &o);
                Estimate { err: 1e-3, ..Estimate::from(inner) }
            },
            0.0,
            1.0,
            &[],
            &AdaptiveOptions { max_intervals: 1, ..o },
        );
        assert!((r.value - 0.25).abs() < 1e-14);
        assert!(r.err >= 1e-3 * 0.99);
        assert!(r.n_evals >= 21 * 21);
    }
}
