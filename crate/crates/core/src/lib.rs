//! Multiscale anisotropic harmonic filters (MAHF) for scalar signals on
//! triangle meshes, point clouds and weighted graphs.
//!
//! A MAHF of order `k` at diffusion time `t` combines the heat kernel of the
//! domain's Laplacian with the `k`-th circular harmonic of the tangent-plane
//! azimuth. The crate assembles cotangent and Gaussian-kNN Laplacians,
//! evaluates heat kernels through Chebyshev expansions (with a dense
//! eigendecomposition for checking), and computes filter responses,
//! multiscale sweeps, normal-field variation and a Mexican hat baseline.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod baselines;
pub mod chebyshev;
pub mod dense;
pub mod error;
pub mod geometry;
pub mod io;
pub mod laplacian;
pub mod filter;
pub mod scalar;
pub mod shapes;
pub mod spectral;
pub mod vec3;

pub use crate::error::{Error, Result};
pub use crate::geometry::{LocalFrame, NeighborList};
pub use crate::io::{Mesh, VertexSignal};
pub use crate::laplacian::{SparseOperator, Sigma};
pub use crate::filter::{FilterResponse, FilterSpec};
pub use crate::scalar::Real;
pub use crate::spectral::{HeatParams, SpectralBasis, TimeScale};
pub use crate::vec3::Vec3;

pub type Mesh64 = Mesh<f64>;
pub type VertexSignal64 = VertexSignal<f64>;
pub type SparseOperator64 = SparseOperator<f64>;
pub type LocalFrame64 = LocalFrame<f64>;
pub type HeatParams64 = HeatParams<f64>;
pub type FilterSpec64 = FilterSpec<f64>;
pub type FilterResponse64 = FilterResponse<f64>;
pub type SpectralBasis64 = SpectralBasis<f64>;
pub type Vec3d = Vec3<f64>;

pub type Mesh32 = Mesh<f32>;
pub type SparseOperator32 = SparseOperator<f32>;
pub type FilterResponse32 = FilterResponse<f32>;
