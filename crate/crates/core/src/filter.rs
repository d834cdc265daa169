//! Multiscale anisotropic harmonic filters.
//!
//! At vertex `i` the order-`k` filter weights neighbour `j` by the heat
//! kernel `K_t[i, j]` times `cos(k dtheta_ij)` (real part) and
//! `sin(k dtheta_ij)` (imaginary part), where `dtheta_ij` is the azimuth of
//! `p_j - p_i` in the tangent frame at `i`. The squared modulus
//! `R^2 = r_R^2 + r_I^2` does not depend on how the tangent frame is turned
//! about the normal.
//!
//! For `k >= 1` the self entry and any neighbour whose displacement is
//! parallel to the normal have no defined azimuth and contribute nothing;
//! for `k = 0` they keep their plain kernel weight.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::LocalFrame;
use crate::io::VertexSignal;
use crate::laplacian::SparseOperator;
use crate::scalar::Real;
use crate::spectral::{advance_rows, kernel_rows_full, threshold_row, HeatParams, KernelRow};

/// Vertices whose kernel rows are diffused together.
const ROW_BLOCK: usize = 32;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<T> {
    /// Harmonic order.
    pub k: u32,
    pub heat: HeatParams<T>,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(k: u32, heat: HeatParams<T>) -> Self {
        Self { k, heat }
    }
}

/// Per-vertex filter output for one `(k, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponse<T> {
    pub real: Vec<T>,
    pub imag: Vec<T>,
    /// `real^2 + imag^2`.
    pub r2: Vec<T>,
    pub spec: FilterSpec<T>,
}

impl<T: Real> FilterResponse<T> {
    pub fn squared_modulus(&self) -> VertexSignal<T> {
        VertexSignal::new(format!("R2_k{}_t{}", self.spec.k, self.spec.heat.t), self.r2.clone())
            .expect("responses are checked finite")
    }
}

/// Tangent-plane azimuth of a neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Azimuth<T> {
    /// Angle in (-pi, pi].
    Angle(T),
    /// Displacement is zero or parallel to the normal.
    Degenerate,
}

/// Azimuth of `p_j - p_i` projected onto the tangent plane of `frame`.
pub fn tangent_azimuth<T: Real>(frame: &LocalFrame<T>, p_i: &Vec3<T>, p_j: &Vec3<T>) -> Azimuth<T> {
    let d = *p_j - *p_i;
    let n = frame.normal;
    let dt = d - n * d.dot(&n);
    let dn = d.norm();
    if dn == T::zero() || dt.norm() <= T::lit(1e-9) * dn {
        return Azimuth::Degenerate;
    }
    let a = dt.dot(&frame.y_axis).atan2(dt.dot(&frame.x_axis));
    // atan2 may return -pi; fold onto +pi.
    Azimuth::Angle(if a == -T::PI() { T::PI() } else { a })
}

/// Filter rows aligned with `row.entries`: `(h_R, h_I)` as `(j, weight)` pairs.
pub fn build_filter_rows<T: Real>(
    row: &KernelRow<T>,
    angles: &[Azimuth<T>],
    k: u32,
) -> Result<(Vec<(usize, T)>, Vec<(usize, T)>)> {
    if angles.len() != row.entries.len() {
        return Err(Error::LengthMismatch {
            what: "azimuths for kernel support",
            expected: row.entries.len(),
            found: angles.len(),
        });
    }
    if k == 0 {
        let zero = row.entries.iter().map(|&(j, _)| (j, T::zero())).collect();
        return Ok((row.entries.clone(), zero));
    }
    let kf = T::from_u32(k).expect("harmonic order fits the scalar type");
    let mut hr = Vec::with_capacity(angles.len());
    let mut hi = Vec::with_capacity(angles.len());
    for (&(j, w), a) in row.entries.iter().zip(angles) {
        match a {
            Azimuth::Angle(theta) if j != row.vertex => {
                let (s, c) = (kf * *theta).sin_cos();
                hr.push((j, w * c));
                hi.push((j, w * s));
            }
            _ => {
                hr.push((j, T::zero()));
                hi.push((j, T::zero()));
            }
        }
    }
    Ok((hr, hi))
}

/// Thresholded kernel rows for every vertex at one diffusion time.
#[derive(Debug, Clone)]
pub struct KernelRows<T> {
    pub rows: Vec<KernelRow<T>>,
    pub heat: HeatParams<T>,
}

impl<T: Real> KernelRows<T> {
    pub fn compute(op: &SparseOperator<T>, heat: &HeatParams<T>) -> Result<Self> {
        heat.validate()?;
        let t = heat.effective_time(op);
        let ids: Vec<usize> = (0..op.dim()).collect();
        let blocks = ids
            .par_chunks(ROW_BLOCK)
            .map(|block| {
                let full = kernel_rows_full(op, t, heat.chebyshev_order, block)?;
                Ok(block.iter().zip(&full).map(|(&i, r)| threshold_row(i, r, heat.support_threshold)).collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(Self { rows: blocks.into_iter().flatten().collect(), heat: *heat })
    }

    /// Mean number of support vertices per row.
    pub fn mean_support(&self) -> f64 {
        let total: usize = self.rows.iter().map(|r| r.entries.len()).sum();
        total as f64 / self.rows.len().max(1) as f64
    }
}

fn check_aligned<T: Real>(n: usize, frames: &[LocalFrame<T>], positions: &[Vec3<T>], s: &[T]) -> Result<()> {
    for (what, len) in [("frames", frames.len()), ("positions", positions.len()), ("signal", s.len())] {
        if len != n {
            return Err(Error::LengthMismatch { what, expected: n, found: len });
        }
    }
    Ok(())
}

/// Applies the order-`k` filter with precomputed kernel rows.
pub fn filter_with_rows<T: Real>(
    rows: &KernelRows<T>,
    frames: &[LocalFrame<T>],
    positions: &[Vec3<T>],
    k: u32,
    s: &[T],
) -> Result<FilterResponse<T>> {
    let n = rows.rows.len();
    check_aligned(n, frames, positions, s)?;
    let out: Vec<(T, T)> = rows
        .rows
        .par_iter()
        .map(|row| {
            let i = row.vertex;
            let angles: Vec<Azimuth<T>> = row
                .entries
                .iter()
                .map(|&(j, _)| tangent_azimuth(&frames[i], &positions[i], &positions[j]))
                .collect();
            let (hr, hi) = build_filter_rows(row, &angles, k)?;
            let rr = hr.iter().fold(T::zero(), |acc, &(j, w)| acc + w * s[j]);
            let ri = hi.iter().fold(T::zero(), |acc, &(j, w)| acc + w * s[j]);
            if !(rr.is_finite() && ri.is_finite()) {
                return Err(Error::NonFiniteResponse { vertex: i });
            }
            Ok((rr, ri))
        })
        .collect::<Result<_>>()?;
    let real: Vec<T> = out.iter().map(|p| p.0).collect();
    let imag: Vec<T> = out.iter().map(|p| p.1).collect();
    let r2 = real.iter().zip(&imag).map(|(&a, &b)| a * a + b * b).collect();
    Ok(FilterResponse { real, imag, r2, spec: FilterSpec::new(k, rows.heat) })
}

/// Filters `s` with one MAHF, computing the kernel rows on the fly.
pub fn apply_filter<T: Real>(
    op: &SparseOperator<T>,
    frames: &[LocalFrame<T>],
    positions: &[Vec3<T>],
    spec: &FilterSpec<T>,
    s: &VertexSignal<T>,
) -> Result<FilterResponse<T>> {
    check_aligned(op.dim(), frames, positions, s.values())?;
    let rows = KernelRows::compute(op, &spec.heat)?;
    filter_with_rows(&rows, frames, positions, spec.k, s.values())
}

/// How kernels at successive times are obtained in a multiscale sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiscaleStrategy {
    /// Each time from scratch.
    #[default]
    Direct,
    /// Each time diffuses the previous time's full row by the time difference.
    Semigroup,
}

/// Kernel rows for every time in `ts` (ascending).
pub fn multiscale_rows<T: Real>(
    op: &SparseOperator<T>,
    base: &HeatParams<T>,
    ts: &[T],
    strategy: MultiscaleStrategy,
) -> Result<Vec<KernelRows<T>>> {
    if ts.is_empty() {
        return Err(Error::InvalidParameter("at least one diffusion time is required".into()));
    }
    if ts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("diffusion times must be strictly ascending".into()));
    }
    let params: Vec<HeatParams<T>> = ts.iter().map(|&t| base.with_t(t)).collect();
    for p in &params {
        p.validate()?;
    }
    match strategy {
        MultiscaleStrategy::Direct => params.iter().map(|p| KernelRows::compute(op, p)).collect(),
        MultiscaleStrategy::Semigroup => {
            let eff: Vec<T> = params.iter().map(|p| p.effective_time(op)).collect();
            let ids: Vec<usize> = (0..op.dim()).collect();
            let per_block = ids
                .par_chunks(ROW_BLOCK)
                .map(|block| {
                    let thr = |full: &[Vec<T>]| -> Vec<KernelRow<T>> {
                        block.iter().zip(full).map(|(&i, r)| threshold_row(i, r, base.support_threshold)).collect()
                    };
                    let mut full = kernel_rows_full(op, eff[0], base.chebyshev_order, block)?;
                    let mut out = vec![thr(&full)];
                    for w in eff.windows(2) {
                        // Rows of K_b M are M-weighted diffusions of rows of K_a M.
                        full = advance_rows(op, w[1] - w[0], base.chebyshev_order, &full)?;
                        out.push(thr(&full));
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut result: Vec<KernelRows<T>> = params
                .iter()
                .map(|p| KernelRows { rows: Vec::with_capacity(op.dim()), heat: *p })
                .collect();
            for per_time in per_block {
                for (slot, rows) in result.iter_mut().zip(per_time) {
                    slot.rows.extend(rows);
                }
            }
            Ok(result)
        }
    }
}

/// One response per diffusion time in `ts`.
pub fn multiscale_apply<T: Real>(
    op: &SparseOperator<T>,
    frames: &[LocalFrame<T>],
    positions: &[Vec3<T>],
    k: u32,
    base: &HeatParams<T>,
    ts: &[T],
    s: &VertexSignal<T>,
    strategy: MultiscaleStrategy,
) -> Result<Vec<FilterResponse<T>>> {
    check_aligned(op.dim(), frames, positions, s.values())?;
    multiscale_rows(op, base, ts, strategy)?
        .iter()
        .map(|rows| filter_with_rows(rows, frames, positions, k, s.values()))
        .collect()
}

/// Splits unit normals into their three coordinate signals.
pub fn normal_components<T: Real>(normals: &[Vec3<T>]) -> [Vec<T>; 3] {
    std::array::from_fn(|c| normals.iter().map(|n| n[c]).collect())
}

/// `R_N^2 = R_x^2 + R_y^2 + R_z^2`: each normal coordinate filtered as an
/// independent scalar signal with the same filter.
pub fn normal_variation<T: Real>(
    normals: &[Vec3<T>],
    op: &SparseOperator<T>,
    frames: &[LocalFrame<T>],
    positions: &[Vec3<T>],
    spec: &FilterSpec<T>,
) -> Result<VertexSignal<T>> {
    let rows = KernelRows::compute(op, &spec.heat)?;
    normal_variation_with_rows(normals, &rows, frames, positions, spec.k)
}

pub fn normal_variation_with_rows<T: Real>(
    normals: &[Vec3<T>],
    rows: &KernelRows<T>,
    frames: &[LocalFrame<T>],
    positions: &[Vec3<T>],
    k: u32,
) -> Result<VertexSignal<T>> {
    let n = rows.rows.len();
    if normals.len() != n {
        return Err(Error::LengthMismatch { what: "normals", expected: n, found: normals.len() });
    }
    let mut total = vec![T::zero(); n];
    for comp in normal_components(normals) {
        let r = filter_with_rows(rows, frames, positions, k, &comp)?;
        for (t, v) in total.iter_mut().zip(&r.r2) {
            *t += *v;
        }
    }
    VertexSignal::new("R2_normals", total)
}

/// `R_L^2 + beta R_N^2`, element-wise.
pub fn fuse<T: Real>(r_l2: &VertexSignal<T>, r_n2: &VertexSignal<T>, beta: T) -> Result<VertexSignal<T>> {
    if r_l2.len() != r_n2.len() {
        return Err(Error::LengthMismatch { what: "fusion operands", expected: r_l2.len(), found: r_n2.len() });
    }
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let v = r_l2.values().iter().zip(r_n2.values()).map(|(&a, &b)| a + beta * b).collect();
    VertexSignal::new("fused", v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn z_frame() -> LocalFrame<f64> {
        LocalFrame {
            origin: 0,
            normal: Vec3::new(0.0, 0.0, 1.0),
            x_axis: Vec3::new(1.0, 0.0, 0.0),
            y_axis: Vec3::new(0.0, 1.0, 0.0),
        }
    }

    #[test]
    fn azimuth_cases() {
        let f = z_frame();
        let o = Vec3::new(0.0, 0.0, 0.0);
        assert_eq!(tangent_azimuth(&f, &o, &Vec3::new(1.0, 0.0, 0.0)), Azimuth::Angle(0.0));
        match tangent_azimuth(&f, &o, &Vec3::new(0.0, 2.0, 0.5)) {
            Azimuth::Angle(a) => assert!((a - FRAC_PI_2).abs() < 1e-15),
            d => panic!("{d:?}"),
        }
        assert_eq!(tangent_azimuth(&f, &o, &Vec3::new(0.0, 0.0, 1.0)), Azimuth::Degenerate);
        assert_eq!(tangent_azimuth(&f, &o, &o), Azimuth::Degenerate);
        assert_eq!(tangent_azimuth(&f, &o, &Vec3::new(-1.0, 0.0, 0.0)), Azimuth::Angle(std::f64::consts::PI));
    }

    fn row() -> KernelRow<f64> {
        KernelRow { vertex: 0, entries: vec![(0, 0.4), (1, 0.3)] }
    }

    #[test]
    fn order_zero_rows() {
        let (hr, hi) = build_filter_rows(&row(), &[Azimuth::Degenerate, Azimuth::Angle(1.0)], 0).unwrap();
        assert_eq!(hr, row().entries);
        assert!(hi.iter().all(|e| e.1 == 0.0));
    }

    #[test]
    fn order_one_and_two_rows() {
        let angles = [Azimuth::Degenerate, Azimuth::Angle(FRAC_PI_2)];
        let (hr, hi) = build_filter_rows(&row(), &angles, 1).unwrap();
        assert_eq!(hr[0].1, 0.0);
        assert!(hr[1].1.abs() <= 1e-16);
        assert!((hi[1].1 - 0.3).abs() < 1e-16);
        let (hr, hi) = build_filter_rows(&row(), &angles, 2).unwrap();
        assert!((hr[1].1 + 0.3).abs() < 1e-16);
        assert!(hi[1].1.abs() < 1e-16);
    }

    #[test]
    fn row_length_mismatch() {
        assert!(build_filter_rows(&row(), &[Azimuth::Degenerate], 1).is_err());
    }

    #[test]
    fn fuse_rules() {
        let a = VertexSignal::new("a", vec![1.0f64, 2.0]).unwrap();
        let b = VertexSignal::new("b", vec![3.0, 6.0]).unwrap();
        assert_eq!(fuse(&a, &b, 0.0).unwrap().values(), a.values());
        let f = fuse(&a, &b, 1.0 / 3.0).unwrap();
        assert!((f.values()[1] - 4.0).abs() < 1e-15);
        let c = VertexSignal::new("c", vec![1.0]).unwrap();
        assert!(fuse(&a, &c, 1.0).is_err());
        assert!(fuse(&a, &b, -1.0).is_err());
    }
}
