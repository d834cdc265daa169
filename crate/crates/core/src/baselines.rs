//! Mexican hat wavelet baseline: `-d/dt e^{-t Delta} = Delta e^{-t Delta}`,
//! isotropic and free of any tangent frame. No normalisation constant is
//! applied.

use crate::error::{Error, Result};
use crate::io::VertexSignal;
use crate::laplacian::SparseOperator;
use crate::filter::normal_components;
use crate::scalar::Real;
use crate::spectral::{delta_heat_apply, HeatParams};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhwSpec<T> {
    pub heat: HeatParams<T>,
}

impl<T: Real> MhwSpec<T> {
    pub fn new(heat: HeatParams<T>) -> Self {
        Self { heat }
    }

    fn validate(&self) -> Result<()> {
        self.heat.validate()?;
        if !(self.heat.t > T::zero()) {
            return Err(Error::InvalidParameter("MHW scale t must be positive".into()));
        }
        Ok(())
    }
}

pub fn mhw_apply<T: Real>(op: &SparseOperator<T>, spec: &MhwSpec<T>, s: &VertexSignal<T>) -> Result<VertexSignal<T>> {
    spec.validate()?;
    s.expect_len(op.dim())?;
    let t = spec.heat.effective_time(op);
    let y = delta_heat_apply(op, t, spec.heat.chebyshev_order, s.values())?;
    VertexSignal::new(format!("mhw_{}", s.name()), y)
}

/// Sum over the three normal coordinates of the squared MHW response.
pub fn mhw_normal_variation<T: Real>(
    normals: &[Vec3<T>],
    op: &SparseOperator<T>,
    spec: &MhwSpec<T>,
) -> Result<VertexSignal<T>> {
    if normals.len() != op.dim() {
        return Err(Error::LengthMismatch { what: "normals", expected: op.dim(), found: normals.len() });
    }
    let mut total = vec![T::zero(); op.dim()];
    for comp in normal_components(normals) {
        let r = mhw_apply(op, spec, &VertexSignal::new("n", comp)?)?;
        for (t, v) in total.iter_mut().zip(r.values()) {
            *t += *v * *v;
        }
    }
    VertexSignal::new("mhw_normals", total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_closed_form() {
        let op = SparseOperator::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap();
        let s = VertexSignal::new("s", vec![1.0, -1.0]).unwrap();
        let y = mhw_apply(&op, &MhwSpec::new(HeatParams::new(0.5)), &s).unwrap();
        let e = 2.0 * (-1.0f64).exp();
        assert!((y.values()[0] - e).abs() < 1e-12 && (y.values()[1] + e).abs() < 1e-12);
        assert!((e - 0.73576).abs() < 1e-5);
    }

    #[test]
    fn annihilates_constants() {
        let op = SparseOperator::from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 2.0f64)]).unwrap();
        let s = VertexSignal::constant("c", 3, 4.0);
        let y = mhw_apply(&op, &MhwSpec::new(HeatParams::new(1.0)), &s).unwrap();
        assert!(y.values().iter().all(|v: &f64| v.abs() < 1e-8));
    }

    #[test]
    fn zero_time_rejected() {
        let op = SparseOperator::from_weighted_edges(2, &[(0, 1, 1.0)]).unwrap();
        let s = VertexSignal::constant("c", 2, 1.0);
        assert!(mhw_apply(&op, &MhwSpec::new(HeatParams::new(0.0)), &s).is_err());
    }
}
