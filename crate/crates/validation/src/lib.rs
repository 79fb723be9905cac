//! Brute-force oracles for the acceptance suite. They only use the function
//! representations, never the optimizers.

use maxlab::{Beta, DiscreteBVFunction, PiecewiseLinearFunction, Rational, Scalar, StepFunction};
use num_traits::{Signed, Zero};

/// Extra points scanned on both sides of the core.
pub fn pad(f: &DiscreteBVFunction<Rational>) -> i64 {
    3 * f.width() + 8
}

/// `S(k) = Σ_{lo ≤ m < k} |f(m)|` for `k` in `[lo, hi + 1]`.
fn prefix(f: &DiscreteBVFunction<Rational>, lo: i64, hi: i64) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    for n in lo..=hi {
        let next = out[out.len() - 1].clone() + f.evaluate(n).abs();
        out.push(next);
    }
    out
}

/// Classical maximal function by scanning every padded window, plus the tail limits.
pub fn discrete_classical(f: &DiscreteBVFunction<Rational>, n: i64, centered: bool) -> Rational {
    let p = pad(f);
    let (lo, hi) = if centered {
        let reach = (n - f.core_lo()).abs().max((n - f.core_hi()).abs()) + p;
        (n - reach, n + reach)
    } else {
        (f.core_lo().min(n) - p, f.core_hi().max(n) + p)
    };
    let (a, b) = (f.left_tail().abs(), f.right_tail().abs());
    let s = prefix(f, lo, hi);
    let abs_sum = |l: i64, r: i64| s[(r + 1 - lo) as usize].clone() - s[(l - lo) as usize].clone();
    let mut best = if centered { (a.clone() + b.clone()) / Rational::int(2) } else { a.clone().max(b.clone()) };
    if centered {
        for r in 0..=(n - lo) {
            best = best.max(abs_sum(n - r, n + r) / Rational::int(2 * r + 1));
        }
    } else {
        for l in lo..=n {
            for r in n..=hi {
                best = best.max(abs_sum(l, r) / Rational::int(r - l + 1));
            }
        }
    }
    best
}

/// Fractional maximal function of a zero-tailed function, by padded scan in `f64`.
pub fn discrete_fractional(f: &DiscreteBVFunction<Rational>, n: i64, centered: bool, beta: Beta) -> f64 {
    assert!(f.left_tail().is_zero() && f.right_tail().is_zero());
    let p = pad(f);
    let (lo, hi) = if centered {
        let reach = (n - f.core_lo()).abs().max((n - f.core_hi()).abs()) + p;
        (n - reach, n + reach)
    } else {
        (f.core_lo().min(n) - p, f.core_hi().max(n) + p)
    };
    let e = beta.as_f64() - 1.0;
    let s: Vec<f64> = prefix(f, lo, hi).iter().map(|v| v.to_f64()).collect();
    let avg = |l: i64, r: i64| (s[(r + 1 - lo) as usize] - s[(l - lo) as usize]) * ((r - l + 1) as f64).powf(e);
    let mut best: f64 = 0.0;
    if centered {
        for r in 0..=(n - lo) {
            best = best.max(avg(n - r, n + r));
        }
    } else {
        for l in lo..=n {
            for r in n..=hi {
                best = best.max(avg(l, r));
            }
        }
    }
    best
}

/// `∫_l^r |f|` for a piecewise linear function, splitting at nodes and sign changes.
pub fn pwl_abs_integral(f: &PiecewiseLinearFunction<f64>, l: f64, r: f64) -> f64 {
    let mut cuts = vec![l, r];
    for w in f.nodes().windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        cuts.push(x0);
        if y0 * y1 < 0.0 {
            cuts.push(x0 + (x1 - x0) * y0 / (y0 - y1));
        }
    }
    if let Some(last) = f.nodes().last() {
        cuts.push(last.0);
    }
    cuts.retain(|t| (l..=r).contains(t));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f.evaluate(&w[0]).abs() + f.evaluate(&w[1]).abs())).sum()
}

/// Smallest radius searched; shorter windows lose too many digits to cancellation
/// and their averages tend to the separately handled shrinking limit.
const MIN_RADIUS: f64 = 1e-7;

/// Largest value of `obj` on `[MIN_RADIUS, reach]` by a uniform scan refined around the best few samples.
pub fn dense_search(obj: impl Fn(f64) -> f64, reach: f64) -> f64 {
    if reach <= MIN_RADIUS {
        return f64::NEG_INFINITY;
    }
    let n = 4000usize;
    let h = reach / n as f64;
    let mut samples: Vec<(f64, f64)> = (1..=n).map(|k| (k as f64 * h, obj(k as f64 * h))).collect();
    let best = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    samples.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut out = best;
    for &(t0, _) in samples.iter().take(8) {
        let (mut lo, mut hi) = ((t0 - h).max(MIN_RADIUS), (t0 + h).min(reach));
        for _ in 0..12 {
            let m = 40;
            let step = (hi - lo) / m as f64;
            let mut arg = lo;
            for k in 0..=m {
                let t = lo + k as f64 * step;
                let v = obj(t);
                if v > out {
                    out = v;
                }
                if v >= obj(arg) {
                    arg = t;
                }
            }
            lo = (arg - step).max(MIN_RADIUS);
            hi = (arg + step).min(reach);
        }
    }
    out
}

/// `M_R f(x)` by dense search over the radius, with the shrinking limit `|f(x)|`.
pub fn pwl_right(f: &PiecewiseLinearFunction<f64>, x: f64) -> f64 {
    let hi = f.nodes().last().unwrap().0;
    let reach = hi - x;
    let searched = dense_search(|r| pwl_abs_integral(f, x, x + r) / r, reach);
    searched.max(f.evaluate(&x).abs())
}

pub fn pwl_left(f: &PiecewiseLinearFunction<f64>, x: f64) -> f64 {
    let lo = f.nodes()[0].0;
    let reach = x - lo;
    let searched = dense_search(|r| pwl_abs_integral(f, x - r, x) / r, reach);
    searched.max(f.evaluate(&x).abs())
}

/// Maximal function of a step function on a lattice of mesh `1/m` that contains `x`
/// and every breakpoint, with windows reaching `pad` beyond the hull.
pub fn step_lattice(f: &StepFunction<Rational>, x: &Rational, centered: bool, beta: Beta, m: i64, pad: i64) -> f64 {
    let (lo, hi) = f.hull().expect("breakpoints");
    let scaled = |t: &Rational| -> i64 { (t * Rational::int(m)).to_integer().try_into().unwrap() };
    let xm = scaled(x);
    let lo_m = scaled(&lo).min(xm) - pad * m;
    let hi_m = scaled(&hi).max(xm) + pad * m;
    let (lo_m, hi_m) = if centered {
        let reach = (xm - lo_m).max(hi_m - xm);
        (xm - reach, xm + reach)
    } else {
        (lo_m, hi_m)
    };
    let at = |k: i64| Rational::from_ratio(k, m);
    let base = at(lo_m);
    let prim: Vec<f64> =
        (lo_m..=hi_m).map(|k| f.integral_abs(&base, &at(k)).unwrap().to_f64()).collect();
    let e = beta.as_f64() - 1.0;
    let avg = |a: i64, b: i64| {
        let mass = prim[(b - lo_m) as usize] - prim[(a - lo_m) as usize];
        mass * ((b - a) as f64 / m as f64).powf(e)
    };
    let mut best: f64 = if beta.is_classical() {
        let (a, b) = (f.left_tail().abs().to_f64(), f.right_tail().abs().to_f64());
        if centered {
            0.5 * (a + b)
        } else {
            a.max(b).max(f.shrink_limit_abs(x).to_f64())
        }
    } else {
        0.0
    };
    if centered {
        for r in 1..=(xm - lo_m) {
            best = best.max(avg(xm - r, xm + r));
        }
    } else {
        for a in lo_m..=xm {
            for b in xm..=hi_m {
                if b > a {
                    best = best.max(avg(a, b));
                }
            }
        }
    }
    best
}

/// `‖g‖_BV` of a discrete function: `|left tail| + Var(g)`.
pub fn bvnorm(g: &DiscreteBVFunction<Rational>) -> Rational {
    let (lo, hi) = (g.core_lo() - 1, g.core_hi() + 1);
    let var = (lo..hi).fold(Rational::zero(), |acc, n| acc + (g.evaluate(n + 1) - g.evaluate(n)).abs());
    g.left_tail().abs() + var
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn half() -> Beta {
    Beta::new(1, 2).unwrap()
}
