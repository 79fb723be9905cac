use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A continuous piecewise linear function: the linear interpolant of its nodes,
/// extended by constants `y_1` and `y_m` outside `[x_1, x_m]`.
///
/// Interior collinear nodes and nodes that merely repeat a tail value are
/// removed, so the node list is canonical.
#[derive(Clone, PartialEq)]
pub struct PiecewiseLinearFunction<S> {
    nodes: Vec<(S, S)>,
}

impl<S: Scalar> PiecewiseLinearFunction<S> {
    pub fn new(nodes: Vec<(S, S)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Malformed("piecewise linear function needs at least one node".into()));
        }
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Unsorted);
        }
        let mut f = PiecewiseLinearFunction { nodes };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        loop {
            let before = self.nodes.len();
            while self.nodes.len() >= 2 && self.nodes[0].1 == self.nodes[1].1 {
                self.nodes.remove(0);
            }
            while self.nodes.len() >= 2 && self.nodes[self.nodes.len() - 1].1 == self.nodes[self.nodes.len() - 2].1 {
                self.nodes.pop();
            }
            let mut kept: Vec<(S, S)> = Vec::with_capacity(self.nodes.len());
            for (i, node) in self.nodes.iter().enumerate() {
                if i > 0 && i + 1 < self.nodes.len() {
                    let (x0, y0) = kept.last().cloned().unwrap_or_else(|| self.nodes[i - 1].clone());
                    let (x2, y2) = &self.nodes[i + 1];
                    let (x1, y1) = node;
                    let lhs = (y1.clone() - y0) * (x2.clone() - x1.clone());
                    let rhs = (y2.clone() - y1.clone()) * (x1.clone() - x0);
                    if lhs == rhs {
                        continue;
                    }
                }
                kept.push(node.clone());
            }
            self.nodes = kept;
            if self.nodes.len() == before {
                break;
            }
        }
    }

    /// `(1 - |x|)_+`.
    pub fn tent() -> Self {
        Self::new(vec![(S::int(-1), S::zero()), (S::zero(), S::one()), (S::one(), S::zero())])
            .expect("tent nodes are sorted")
    }

    pub fn nodes(&self) -> &[(S, S)] {
        &self.nodes
    }

    pub fn left_tail(&self) -> &S {
        &self.nodes[0].1
    }

    pub fn right_tail(&self) -> &S {
        &self.nodes[self.nodes.len() - 1].1
    }

    /// Whether both tails vanish, i.e. the function lies in the representable W^{1,1} class.
    pub fn is_w11(&self) -> bool {
        self.left_tail().is_zero() && self.right_tail().is_zero()
    }

    pub fn hull(&self) -> (S, S) {
        (self.nodes[0].0.clone(), self.nodes[self.nodes.len() - 1].0.clone())
    }

    /// Segments `((x0, y0), (x1, y1))` between consecutive nodes.
    pub fn segments(&self) -> impl Iterator<Item = (&(S, S), &(S, S))> {
        self.nodes.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn evaluate(&self, x: &S) -> S {
        let n = self.nodes.len();
        if *x <= self.nodes[0].0 {
            return self.nodes[0].1.clone();
        }
        if *x >= self.nodes[n - 1].0 {
            return self.nodes[n - 1].1.clone();
        }
        let i = self.nodes.partition_point(|(xi, _)| xi <= x) - 1;
        let (x0, y0) = &self.nodes[i];
        let (x1, y1) = &self.nodes[i + 1];
        y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    /// Slope on each segment, in node order.
    pub fn slopes(&self) -> Vec<S> {
        self.segments()
            .map(|((x0, y0), (x1, y1))| (y1.clone() - y0.clone()) / (x1.clone() - x0.clone()))
            .collect()
    }

    /// Derivative away from the nodes; `None` at a node where the one-sided slopes differ.
    pub fn derivative(&self, x: &S) -> Option<S> {
        let slopes = self.slopes();
        let n = self.nodes.len();
        let slope_at = |i: isize| -> S {
            if i < 0 || i as usize >= slopes.len() {
                S::zero()
            } else {
                slopes[i as usize].clone()
            }
        };
        match self.nodes.binary_search_by(|(xi, _)| xi.partial_cmp(x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => {
                let (l, r) = (slope_at(i as isize - 1), slope_at(i as isize));
                (l == r).then_some(l)
            }
            Err(i) => {
                if i == 0 || i == n {
                    Some(S::zero())
                } else {
                    Some(slope_at(i as isize - 1))
                }
            }
        }
    }

    pub fn map_values(&self, op: impl Fn(&S) -> S) -> Self {
        let mut f = PiecewiseLinearFunction {
            nodes: self.nodes.iter().map(|(x, y)| (x.clone(), op(y))).collect(),
        };
        f.canonicalize();
        f
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map_values(|y| y.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut xs: Vec<S> = self.nodes.iter().chain(other.nodes.iter()).map(|(x, _)| x.clone()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        xs.dedup();
        let mut f = PiecewiseLinearFunction {
            nodes: xs.into_iter().map(|x| {
                let y = self.evaluate(&x) + other.evaluate(&x);
                (x, y)
            })
            .collect(),
        };
        f.canonicalize();
        f
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    /// `|f|`, with a node inserted at every sign change.
    pub fn abs(&self) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len() * 2);
        for (i, (x0, y0)) in self.nodes.iter().enumerate() {
            nodes.push((x0.clone(), y0.abs()));
            if let Some((x1, y1)) = self.nodes.get(i + 1) {
                if (y0.is_positive() && y1.is_negative()) || (y0.is_negative() && y1.is_positive()) {
                    let t = x0.clone() + y0.clone() * (x1.clone() - x0.clone()) / (y0.clone() - y1.clone());
                    nodes.push((t, S::zero()));
                }
            }
        }
        let mut f = PiecewiseLinearFunction { nodes };
        f.canonicalize();
        f
    }

    /// `x ↦ f(-x)`.
    pub fn reflect(&self) -> Self {
        PiecewiseLinearFunction { nodes: self.nodes.iter().rev().map(|(x, y)| (-x.clone(), y.clone())).collect() }
    }

    /// Exact `∫_L^R |f|`.
    pub fn integral_abs(&self, l: &S, r: &S) -> Result<S> {
        if l > r {
            return Err(Error::InvalidInterval { lo: l.to_string(), hi: r.to_string() });
        }
        let n = self.nodes.len();
        let (first, last) = (&self.nodes[0], &self.nodes[n - 1]);
        let mut total = S::zero();
        // constant tails
        if *l < first.0 {
            let hi = S::min_of(first.0.clone(), r.clone());
            total = total + first.1.abs() * (hi - l.clone());
        }
        if *r > last.0 {
            let lo = S::max_of(last.0.clone(), l.clone());
            total = total + last.1.abs() * (r.clone() - lo);
        }
        for ((x0, _), (x1, _)) in self.segments() {
            let a = S::max_of(x0.clone(), l.clone());
            let b = S::min_of(x1.clone(), r.clone());
            if a >= b {
                continue;
            }
            let (ya, yb) = (self.evaluate(&a), self.evaluate(&b));
            total = total + trapezoid_abs(&a, &ya, &b, &yb);
        }
        Ok(total)
    }

    pub fn convert<T: Scalar>(&self) -> PiecewiseLinearFunction<T> {
        use crate::scalar::convert;
        PiecewiseLinearFunction { nodes: self.nodes.iter().map(|(x, y)| (convert(x), convert(y))).collect() }
    }

    pub fn to_f64(&self) -> PiecewiseLinearFunction<f64> {
        self.convert()
    }
}

/// `∫_a^b |ℓ|` for the line `ℓ` through `(a, ya)` and `(b, yb)`.
pub(crate) fn trapezoid_abs<S: Scalar>(a: &S, ya: &S, b: &S, yb: &S) -> S {
    let two = S::int(2);
    let len = b.clone() - a.clone();
    if (ya.is_negative() && yb.is_positive()) || (ya.is_positive() && yb.is_negative()) {
        // split at the root t, where |ya|/(|ya|+|yb|) of the length lies left of t
        let (pa, pb) = (ya.abs(), yb.abs());
        let sum = pa.clone() + pb.clone();
        (pa.clone() * pa + pb.clone() * pb) * len / (two * sum)
    } else {
        (ya.clone() + yb.clone()).abs() * len / two
    }
}

impl<S: Scalar> fmt::Debug for PiecewiseLinearFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pwl[")?;
        for (i, (x, y)) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({x}, {y})")?;
        }
        write!(f, "]")
    }
}
