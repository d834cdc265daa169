//! Heat kernel `exp(-t M^-1 L)`: an exact dense route through the
//! generalized eigendecomposition and a scalable Chebyshev route.
//!
//! Kernel convention: `heat_kernel_dense` returns `K_t = sum_s e^{-t l_s} phi_s phi_s^T`
//! with M-orthonormal `phi_s`. The operator acting on signals is `K_t M`, and
//! the "kernel row" at vertex `i` used by the filters is row `i` of `K_t M`,
//! so that `sum_j row_i[j] s[j]` is the heat-smoothed signal at `i`. With
//! identity mass both coincide with the plain spectral sum.

use nalgebra::{DMatrix, RealField, SymmetricEigen};

use crate::chebyshev::ChebyshevSeries;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::io::VertexSignal;
use crate::laplacian::SparseOperator;
use crate::scalar::Real;

/// Default polynomial degree per Chebyshev expansion.
pub const DEFAULT_CHEBYSHEV_ORDER: usize = 50;
/// Default relative cutoff for kernel-row supports.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-4;
/// Default size limit of the dense eigensolver.
pub const DEFAULT_DENSE_LIMIT: usize = 3000;
/// Largest `t * lambda_upper` covered by one expansion; longer times are
/// split into equal substeps composed through `K_{a+b} = K_a K_b`.
pub const MAX_EXPONENT_PER_STEP: f64 = 80.0;
/// Margin applied to the cached `lambda_max` estimate for the interval.
pub const INTERVAL_MARGIN: f64 = 1.01;

/// How the diffusion time is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScale {
    /// Use `t` as given.
    #[default]
    Raw,
    /// Multiply `t` by the mean vertex mass (total area / N), so that `t`
    /// counts in units of the mesh resolution.
    MeanVertexArea,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatParams<T> {
    pub t: T,
    pub chebyshev_order: usize,
    pub support_threshold: T,
    pub time_scale: TimeScale,
}

impl<T: Real> HeatParams<T> {
    pub fn new(t: T) -> Self {
        Self {
            t,
            chebyshev_order: DEFAULT_CHEBYSHEV_ORDER,
            support_threshold: T::lit(DEFAULT_SUPPORT_THRESHOLD),
            time_scale: TimeScale::Raw,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.chebyshev_order = order;
        self
    }

    pub fn with_threshold(mut self, threshold: T) -> Self {
        self.support_threshold = threshold;
        self
    }

    pub fn with_time_scale(mut self, scale: TimeScale) -> Self {
        self.time_scale = scale;
        self
    }

    pub fn with_t(mut self, t: T) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= T::zero()) || !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!("diffusion time must be finite and >= 0, got {}", self.t)));
        }
        if self.chebyshev_order < 1 {
            return Err(Error::InvalidParameter("Chebyshev order must be at least 1".into()));
        }
        if !(self.support_threshold >= T::zero() && self.support_threshold < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "support threshold must lie in [0, 1), got {}",
                self.support_threshold
            )));
        }
        Ok(())
    }

    /// Time actually used with `op`, after the configured normalisation.
    pub fn effective_time(&self, op: &SparseOperator<T>) -> T {
        effective_time(self.t, self.time_scale, op)
    }
}

pub fn effective_time<T: Real>(t: T, scale: TimeScale, op: &SparseOperator<T>) -> T {
    match scale {
        TimeScale::Raw => t,
        TimeScale::MeanVertexArea => {
            let total = op.mass().iter().fold(T::zero(), |s, &m| s + m);
            t * total / T::from_count(op.dim().max(1))
        }
    }
}

/// Generalized eigenpairs `L phi = lambda M phi`, ascending, M-orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralBasis<T> {
    eigenvalues: Vec<T>,
    /// Column `s` is `phi_s`.
    eigenvectors: DenseMatrix<T>,
}

impl<T: Real> SpectralBasis<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DenseMatrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, s: usize) -> Vec<T> {
        self.eigenvectors.column(s)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral filtering `sum_s g(lambda_s) <phi_s, x>_M phi_s`.
    pub fn apply_fn(&self, mass: &[T], g: impl Fn(T) -> T, x: &[T]) -> Vec<T> {
        let n = self.dim();
        let phi = &self.eigenvectors;
        let mut out = vec![T::zero(); n];
        for s in 0..n {
            let coef = (0..n).fold(T::zero(), |acc, i| acc + phi[(i, s)] * mass[i] * x[i]);
            let w = g(self.eigenvalues[s]) * coef;
            if w == T::zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += w * phi[(i, s)];
            }
        }
        out
    }

    /// Writes the eigenvalues one per line.
    pub fn write_spectrum_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for l in &self.eigenvalues {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

/// Dense generalized eigendecomposition through `M^-1/2 L M^-1/2`.
pub fn eigendecompose<T: Real + RealField>(op: &SparseOperator<T>, dense_limit: usize) -> Result<SpectralBasis<T>> {
    let n = op.dim();
    if n > dense_limit {
        return Err(Error::TooLargeForDense { n, limit: dense_limit });
    }
    let inv_sqrt: Vec<T> = op.mass().iter().map(|&m| T::one() / num_traits::Float::sqrt(m)).collect();
    let mut a = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for (j, v) in op.stiffness().row(i) {
            if !num_traits::Float::is_finite(v) {
                return Err(Error::NonFinite { what: "stiffness", index: i });
            }
            a[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::try_new(a, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap().then(x.cmp(&y)));
    let eigenvalues: Vec<T> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut phi = DenseMatrix::zeros(n, n);
    for (s, &k) in order.iter().enumerate() {
        // Sign convention: the largest-magnitude entry is positive.
        let col = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if num_traits::Float::abs(col[i]) > num_traits::Float::abs(col[pivot]) {
                pivot = i;
            }
        }
        let sign = if col[pivot] < T::zero() { -T::one() } else { T::one() };
        for i in 0..n {
            phi[(i, s)] = sign * col[i] * inv_sqrt[i];
        }
    }
    Ok(SpectralBasis { eigenvalues, eigenvectors: phi })
}

/// `K_t = sum_s e^{-t lambda_s} phi_s phi_s^T`.
pub fn heat_kernel_dense<T: Real>(basis: &SpectralBasis<T>, t: T) -> Result<DenseMatrix<T>> {
    if !(t >= T::zero()) {
        return Err(Error::InvalidParameter(format!("diffusion time must be >= 0, got {t}")));
    }
    let n = basis.dim();
    let decay: Vec<T> = basis.eigenvalues.iter().map(|&l| (-t * l).exp()).collect();
    let phi = &basis.eigenvectors;
    let mut k = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (0..n).fold(T::zero(), |s, q| s + decay[q] * phi[(i, q)] * phi[(j, q)]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `K_{t1} M K_{t2}`, which equals `K_{t1 + t2}`.
pub fn semigroup_compose<T: Real>(k1: &DenseMatrix<T>, k2: &DenseMatrix<T>, mass: &[T]) -> Result<DenseMatrix<T>> {
    if k1.cols() != mass.len() || k2.rows() != mass.len() {
        return Err(Error::LengthMismatch { what: "semigroup operands", expected: mass.len(), found: k1.cols() });
    }
    k1.scale_columns(mass).mul(k2)
}

/// Number of equal substeps used for diffusion time `t` on `[0, upper]`.
pub fn substeps<T: Real>(t: T, upper: T) -> usize {
    let x = (t * upper).as_f64() / MAX_EXPONENT_PER_STEP;
    if x.is_finite() && x > 1.0 { x.ceil() as usize } else { 1 }
}

fn interval_upper<T: Real>(op: &SparseOperator<T>) -> T {
    op.lambda_max().value * T::lit(INTERVAL_MARGIN)
}

/// Applies `g(Delta) e^{-t Delta}` to `x`, `Delta = M^-1 L`, where `g` is
/// `1` or `x -> x` depending on `with_delta`.
fn heat_like<T: Real>(op: &SparseOperator<T>, t: T, order: usize, with_delta: bool, x: &[T]) -> Result<Vec<T>> {
    heat_like_block(op, t, order, with_delta, x, 1)
}

fn heat_like_block<T: Real>(
    op: &SparseOperator<T>,
    t: T,
    order: usize,
    with_delta: bool,
    x: &[T],
    b: usize,
) -> Result<Vec<T>> {
    let upper = interval_upper(op);
    let m = substeps(t, upper);
    let tau = t / T::from_count(m);
    let step = ChebyshevSeries::fit(|l: T| (-tau * l).exp(), order, upper)?;
    let last = if with_delta {
        ChebyshevSeries::fit(|l: T| l * (-tau * l).exp(), order, upper)?
    } else {
        step.clone()
    };
    let mut y = x.to_vec();
    for k in 0..m {
        y = if k + 1 == m { last.apply_block(op, &y, b)? } else { step.apply_block(op, &y, b)? };
    }
    Ok(y)
}

/// Chebyshev approximation of `e^{-t M^-1 L} s`.
pub fn heat_apply_chebyshev<T: Real>(
    op: &SparseOperator<T>,
    params: &HeatParams<T>,
    s: &VertexSignal<T>,
) -> Result<VertexSignal<T>> {
    params.validate()?;
    s.expect_len(op.dim())?;
    let t = params.effective_time(op);
    let y = heat_like(op, t, params.chebyshev_order, false, s.values())?;
    VertexSignal::new(format!("heat_{}", s.name()), y)
}

/// Chebyshev approximation of `M^-1 L e^{-t M^-1 L} x` (used by the MHW baseline).
pub(crate) fn delta_heat_apply<T: Real>(op: &SparseOperator<T>, t: T, order: usize, x: &[T]) -> Result<Vec<T>> {
    heat_like(op, t, order, true, x)
}

/// Thresholded heat-kernel row: sparse entries of row `i` of `K_t M`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow<T> {
    pub vertex: usize,
    /// Surviving `(j, K[i, j])` pairs in ascending `j`; together they form the filter support.
    pub entries: Vec<(usize, T)>,
}

impl<T: Real> KernelRow<T> {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn to_dense(&self, n: usize) -> Vec<T> {
        let mut d = vec![T::zero(); n];
        for &(j, v) in &self.entries {
            d[j] = v;
        }
        d
    }
}

/// Keeps the entries whose magnitude reaches `threshold * max|row|`.
pub fn threshold_row<T: Real>(vertex: usize, row: &[T], threshold: T) -> KernelRow<T> {
    let max = row.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cut = threshold * max;
    let entries = row
        .iter()
        .enumerate()
        .filter(|(_, v)| threshold == T::zero() || v.abs() >= cut)
        .map(|(j, &v)| (j, v))
        .collect();
    KernelRow { vertex, entries }
}

/// Full (unthresholded) row `i` of `K_t M`, via the heat action on `e_i / M_i`.
pub(crate) fn kernel_row_full<T: Real>(op: &SparseOperator<T>, t: T, order: usize, i: usize) -> Result<Vec<T>> {
    Ok(kernel_rows_full(op, t, order, &[i])?.pop().expect("one row requested"))
}

/// Full rows of `K_t M` for several vertices, diffused together as one block.
pub(crate) fn kernel_rows_full<T: Real>(op: &SparseOperator<T>, t: T, order: usize, vertices: &[usize]) -> Result<Vec<Vec<T>>> {
    let b = vertices.len();
    let mass = op.mass();
    let mut x = vec![T::zero(); op.dim() * b];
    for (c, &i) in vertices.iter().enumerate() {
        x[i * b + c] = T::one() / mass[i];
    }
    let y = heat_like_block(op, t, order, false, &x, b)?;
    Ok(unblock(&y, b, mass))
}

/// Diffuses full `K_a M` rows forward by `dt`, giving rows of `K_{a+dt} M`.
pub(crate) fn advance_rows<T: Real>(op: &SparseOperator<T>, dt: T, order: usize, rows: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let b = rows.len();
    let mass = op.mass();
    let mut x = vec![T::zero(); op.dim() * b];
    for (c, row) in rows.iter().enumerate() {
        for (j, (&r, &m)) in row.iter().zip(mass).enumerate() {
            x[j * b + c] = r / m;
        }
    }
    let y = heat_like_block(op, dt, order, false, &x, b)?;
    Ok(unblock(&y, b, mass))
}

/// Splits a row-major block into per-column rows scaled by the mass.
fn unblock<T: Real>(y: &[T], b: usize, mass: &[T]) -> Vec<Vec<T>> {
    (0..b).map(|c| mass.iter().enumerate().map(|(j, &m)| y[j * b + c] * m).collect()).collect()
}

/// Row `i` of the heat kernel, thresholded at `params.support_threshold`.
pub fn heat_kernel_row<T: Real>(op: &SparseOperator<T>, params: &HeatParams<T>, i: usize) -> Result<KernelRow<T>> {
    params.validate()?;
    if i >= op.dim() {
        return Err(Error::VertexOutOfRange { index: i, count: op.dim() });
    }
    let full = kernel_row_full(op, params.effective_time(op), params.chebyshev_order, i)?;
    Ok(threshold_row(i, &full, params.support_threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> SparseOperator<f64> {
        SparseOperator::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn two_node_spectrum() {
        let b = eigendecompose(&two_node(), DEFAULT_DENSE_LIMIT).unwrap();
        assert!(b.eigenvalues()[0].abs() < 1e-14);
        assert!((b.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let p0 = b.eigenvector(0);
        let p1 = b.eigenvector(1);
        assert!((p0[0] - p0[1]).abs() < 1e-14);
        assert!((p1[0] + p1[1]).abs() < 1e-14);
    }

    #[test]
    fn two_node_kernel_closed_form() {
        let b = eigendecompose(&two_node(), DEFAULT_DENSE_LIMIT).unwrap();
        for t in [0.0, 0.3, 1.7] {
            let k = heat_kernel_dense(&b, t).unwrap();
            let e = (-2.0 * t).exp();
            assert!((k[(0, 0)] - (1.0 + e) / 2.0).abs() < 1e-14);
            assert!((k[(0, 1)] - (1.0 - e) / 2.0).abs() < 1e-14);
        }
        assert!(heat_kernel_dense(&b, -1.0).is_err());
    }

    #[test]
    fn dense_limit_enforced() {
        assert!(matches!(eigendecompose(&two_node(), 1), Err(Error::TooLargeForDense { n: 2, limit: 1 })));
    }

    #[test]
    fn time_zero_is_identity() {
        let op = two_node();
        let s = VertexSignal::new("s", vec![0.25, -3.0]).unwrap();
        let y = heat_apply_chebyshev(&op, &HeatParams::new(0.0), &s).unwrap();
        for (a, b) in y.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_keeps_half_half_row() {
        let op = two_node();
        let r = heat_kernel_row(&op, &HeatParams::new(20.0).with_threshold(0.5), 0).unwrap();
        assert_eq!(r.support().collect::<Vec<_>>(), vec![0, 1]);
        for (_, v) in &r.entries {
            assert!((v - 0.5).abs() < 1e-12);
        }
        assert!(matches!(
            heat_kernel_row(&op, &HeatParams::new(1.0), 2),
            Err(Error::VertexOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(HeatParams::new(-1.0).validate().is_err());
        assert!(HeatParams::new(1.0).with_order(0).validate().is_err());
        assert!(HeatParams::new(1.0).with_threshold(1.0).validate().is_err());
    }

    #[test]
    fn substep_count() {
        assert_eq!(substeps(1.0, 10.0), 1);
        assert_eq!(substeps(8.0, 10.0), 1);
        assert_eq!(substeps(10.0, 10.0), 2);
        assert_eq!(substeps(30.0, 10.0), 4);
        assert_eq!(substeps(0.0, 0.0), 1);
    }
}
