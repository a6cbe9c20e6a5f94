//! One-dimensional quadrature rules.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule; nodes found by Newton iteration on `P_n` in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }

    /// Nodes and weights for `[a, b]` after the substitution
    /// `x = a + (b − a)(1 − cos πs)/2`, `s ∈ [0, 1]`.
    ///
    /// The Jacobian vanishes at both ends, which turns algebraic or
    /// logarithmic endpoint singularities into much milder ones.
    pub fn clustered_points(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let two = T::lit(2.0);
        let pi = T::PI();
        let len = b - a;
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| {
            let s = (x + T::one()) / two;
            let node = a + len * (T::one() - (pi * s).cos()) / two;
            let jac = len * pi * (pi * s).sin() / two;
            (node, w / two * jac)
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Equal-weight trapezoid rule on `[0, π]` with `n` intervals.
///
/// For integrands that extend to even `2π`-periodic functions it is exact on
/// `cos kθ` for every `k < 2n`.
pub fn trapezoid_0_pi<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let h = T::PI() / T::lit(n as f64);
    let nodes = (0..=n).map(|i| h * T::lit(i as f64)).collect();
    let weights = (0..=n)
        .map(|i| if i == 0 || i == n { h / T::lit(2.0) } else { h })
        .collect();
    (nodes, weights)
}
