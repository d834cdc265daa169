//! Truncated Chebyshev expansions of scalar functions applied to `M^-1 L`
//! through the three-term recurrence (operator-vector products only).

use crate::error::{Error, Result};
use crate::laplacian::SparseOperator;
use crate::scalar::Real;

/// `f(x) ~ sum_n c_n T_n(2x/upper - 1)` on `[0, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries<T> {
    coeffs: Vec<T>,
    upper: T,
}

impl<T: Real> ChebyshevSeries<T> {
    /// Degree-`order` expansion with coefficients from Chebyshev-Gauss
    /// quadrature on `order + 1` nodes (exact for the truncated series).
    pub fn fit(f: impl Fn(T) -> T, order: usize, upper: T) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidParameter("Chebyshev order must be at least 1".into()));
        }
        if !(upper >= T::zero()) || !upper.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid spectral interval upper bound {upper}")));
        }
        let nodes = order + 1;
        let kf = T::from_count(nodes);
        let half = upper * T::lit(0.5);
        let samples: Vec<(T, T)> = (0..nodes)
            .map(|k| {
                let theta = T::PI() * (T::from_count(k) + T::lit(0.5)) / kf;
                (theta, f(half * (theta.cos() + T::one())))
            })
            .collect();
        let coeffs = (0..nodes)
            .map(|n| {
                let nf = T::from_count(n);
                let s = samples.iter().fold(T::zero(), |s, &(th, fx)| s + fx * (nf * th).cos());
                let c = T::lit(2.0) * s / kf;
                if n == 0 { c * T::lit(0.5) } else { c }
            })
            .collect();
        Ok(Self { coeffs, upper })
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Scalar evaluation (Clenshaw).
    pub fn eval(&self, x: T) -> T {
        if self.upper == T::zero() {
            return self.coeffs.iter().copied().fold(T::zero(), |s, c| s + c);
        }
        let y = T::lit(2.0) * x / self.upper - T::one();
        let (mut b1, mut b2) = (T::zero(), T::zero());
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = T::lit(2.0) * y * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        y * b1 - b2 + self.coeffs[0]
    }

    /// `f(M^-1 L) x`.
    pub fn apply(&self, op: &SparseOperator<T>, x: &[T]) -> Result<Vec<T>> {
        self.apply_block(op, x, 1)
    }

    /// `f(M^-1 L) X` for `b` columns stored row-major (`x[j * b + c]`).
    /// Each column sees exactly the arithmetic of [`Self::apply`].
    pub fn apply_block(&self, op: &SparseOperator<T>, x: &[T], b: usize) -> Result<Vec<T>> {
        let len = op.dim() * b;
        if b == 0 || x.len() != len {
            return Err(Error::LengthMismatch { what: "signal", expected: len, found: x.len() });
        }
        if self.upper == T::zero() {
            // Zero operator: f(0) x, and T_n(-1) = (-1)^n.
            let f0 = self
                .coeffs
                .iter()
                .enumerate()
                .fold(T::zero(), |s, (k, &c)| if k % 2 == 0 { s + c } else { s - c });
            return Ok(x.iter().map(|&v| v * f0).collect());
        }
        let scale = T::lit(2.0) / self.upper;
        let two = T::lit(2.0);
        let mut tmp = vec![T::zero(); len];
        // cur = T_1(A) x with A = scale * Delta - I.
        let mut prev = x.to_vec();
        op.apply_block_into(x, b, &mut tmp);
        let mut cur: Vec<T> = tmp.iter().zip(x).map(|(&d, &v)| scale * d - v).collect();
        let mut out: Vec<T> = prev.iter().zip(&cur).map(|(&a, &b)| self.coeffs[0] * a + self.coeffs[1] * b).collect();
        for (term, &c) in self.coeffs.iter().enumerate().skip(2) {
            op.apply_block_into(&cur, b, &mut tmp);
            for ((p, &d), &u) in prev.iter_mut().zip(&tmp).zip(&cur) {
                *p = two * (scale * d - u) - *p;
            }
            std::mem::swap(&mut prev, &mut cur);
            let mut finite = true;
            for (o, &v) in out.iter_mut().zip(&cur) {
                *o += c * v;
                finite &= v.is_finite();
            }
            if !finite {
                return Err(Error::ChebyshevDiverged { term });
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::ChebyshevDiverged { term: self.order() });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_low_degree_polynomials() {
        let s = ChebyshevSeries::fit(|x: f64| 3.0 - 2.0 * x + x * x, 4, 5.0).unwrap();
        for x in [0.0, 0.7, 2.5, 5.0] {
            assert!((s.eval(x) - (3.0 - 2.0 * x + x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_function_is_exact() {
        let s = ChebyshevSeries::fit(|_x: f64| 1.0, 50, 17.0).unwrap();
        assert!((s.coefficients()[0] - 1.0).abs() < 1e-15);
        assert!(s.coefficients()[1..].iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn rejects_order_zero() {
        assert!(ChebyshevSeries::fit(|x: f64| x, 0, 1.0).is_err());
    }

    #[test]
    fn operator_action_matches_scalar_on_two_node_graph() {
        let op = SparseOperator::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap();
        let upper = 2.5;
        let s = ChebyshevSeries::fit(|x: f64| (-0.7 * x).exp(), 30, upper).unwrap();
        // Eigenvectors (1,1) -> 0 and (1,-1) -> 2.
        let y = s.apply(&op, &[1.0, -1.0]).unwrap();
        let e = (-1.4f64).exp();
        assert!((y[0] - e).abs() < 1e-13 && (y[1] + e).abs() < 1e-13);
        let y = s.apply(&op, &[1.0, 1.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-13);
    }
}
