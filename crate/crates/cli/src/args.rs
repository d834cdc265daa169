use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mahf", version, about = "Multiscale anisotropic harmonic filters on meshes, point clouds and graphs")]
pub struct Cli {
    /// More log output (repeat for debug level).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter a scalar signal with MAHFs, one output per (k, t) pair.
    Filter(FilterArgs),
    /// Aggregate filter response of the three normal coordinates.
    NormalVariation(NormalVariationArgs),
    /// Fuse two response fields as A + beta * B.
    Fuse(FuseArgs),
    /// Write heat-kernel rows of one vertex as scalar fields.
    Kernel(KernelArgs),
    /// Write a synthetic mesh and, optionally, a test signal.
    Generate(GenerateArgs),
    /// Dump the dense Laplacian spectrum as CSV.
    Spectrum(SpectrumArgs),
    /// Dump the stiffness and mass matrices in Matrix Market format.
    Operator(OperatorDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshFormatArg {
    Off,
    Obj,
    Ply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorKind {
    Cotangent,
    GaussianKnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Luma {
    Rec601,
    Rec709,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Direct,
    Semigroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Mhw,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Input mesh or point cloud (.off, .obj, .ply).
    #[arg(long)]
    pub mesh: PathBuf,

    /// Override the format implied by the extension.
    #[arg(long, value_enum)]
    pub mesh_format: Option<MeshFormatArg>,

    /// Fan-triangulate polygonal faces instead of rejecting them.
    #[arg(long)]
    pub triangulate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Laplacian: cotangent (needs faces) or Gaussian-weighted kNN graph.
    #[arg(long = "operator", value_enum, default_value_t = OperatorKind::Cotangent)]
    pub kind: OperatorKind,

    /// Neighbours per point for the kNN graph and PCA normals.
    #[arg(long, default_value_t = 10)]
    pub knn_k: usize,

    /// Gaussian width for kNN weights: a number, or "auto" for the mean kNN distance.
    #[arg(long, default_value = "auto")]
    pub sigma: String,
}

#[derive(Debug, Clone, Args)]
pub struct HeatArgs {
    /// Chebyshev polynomial degree.
    #[arg(long, default_value_t = 50)]
    pub order: usize,

    /// Relative kernel cutoff defining the filter support.
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,

    /// Measure t in units of the mean vertex area instead of raw units.
    #[arg(long)]
    pub area_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,

    /// Signal source: a CSV or PLY path, "luminance", "normals", or "ply:NAME"
    /// for a vertex property of the input PLY.
    #[arg(long)]
    pub signal: String,

    /// Luminance weights for --signal luminance.
    #[arg(long, value_enum, default_value_t = Luma::Rec601)]
    pub luma: Luma,

    /// Harmonic order (repeatable).
    #[arg(long = "k", required = true, num_args = 1)]
    pub ks: Vec<u32>,

    /// Diffusion time (repeatable).
    #[arg(long = "t", required = true, num_args = 1)]
    pub ts: Vec<f64>,

    #[command(flatten)]
    pub operator: GraphArgs,

    #[command(flatten)]
    pub heat: HeatArgs,

    /// How kernels at several times are computed.
    #[arg(long, value_enum, default_value_t = Strategy::Direct)]
    pub strategy: Strategy,

    /// Output base path; files are named <stem>_k<k>_t<t>.<ext> (.ply or .csv).
    #[arg(long)]
    pub out: PathBuf,

    /// Manifest path (defaults to <stem>.json next to the outputs).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NormalVariationArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,

    #[arg(long = "k", default_value_t = 1)]
    pub k: u32,

    /// Diffusion time (repeatable).
    #[arg(long = "t", required = true, num_args = 1)]
    pub ts: Vec<f64>,

    /// Write a baseline aggregate instead of the MAHF one.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,

    #[command(flatten)]
    pub operator: GraphArgs,

    #[command(flatten)]
    pub heat: HeatArgs,

    /// Output base path; files are named <stem>_k<k>_t<t>.<ext> (<stem>_mhw_t<t> for the baseline,
    /// whose manifest defaults to <stem>_mhw.json).
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    /// First field (CSV, or PLY with a quality property).
    #[arg(long)]
    pub a: PathBuf,

    /// Second field, weighted by beta.
    #[arg(long)]
    pub b: PathBuf,

    #[arg(long)]
    pub beta: f64,

    /// Output field (.csv, or .ply with geometry from --mesh or a PLY input).
    #[arg(long)]
    pub out: PathBuf,

    /// Geometry for PLY output.
    #[arg(long)]
    pub mesh: Option<PathBuf>,

    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,

    #[arg(long)]
    pub vertex: usize,

    /// Diffusion time (repeatable).
    #[arg(long = "t", required = true, num_args = 1)]
    pub ts: Vec<f64>,

    #[command(flatten)]
    pub operator: GraphArgs,

    #[command(flatten)]
    pub heat: HeatArgs,

    /// Output base path; files are named <stem>_v<vertex>_t<t>.<ext>.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Icosphere,
    BumpySphere,
    Grid,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestSignal {
    /// 0/1 split by the plane x = centre.
    TwoLevel,
    /// Step then plateau then linear ramp back to 0 along x.
    StepRamp,
    /// Height (z coordinate).
    Height,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,

    /// Subdivision level for spheres.
    #[arg(long, default_value_t = 3)]
    pub level: u32,

    /// Grid vertices along x, or cube subdivisions per edge.
    #[arg(long, default_value_t = 20)]
    pub nx: usize,

    /// Grid vertices along y.
    #[arg(long, default_value_t = 20)]
    pub ny: usize,

    /// Grid spacing or cube side.
    #[arg(long, default_value_t = 1.0)]
    pub size: f64,

    /// Relative bump height for bumpy spheres.
    #[arg(long, default_value_t = 0.15)]
    pub amplitude: f64,

    /// Attach a two-tone vertex colouring (for luminance runs).
    #[arg(long)]
    pub colors: bool,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum)]
    pub signal: Option<TestSignal>,

    /// CSV path for --signal.
    #[arg(long, requires = "signal")]
    pub signal_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,

    #[command(flatten)]
    pub operator: GraphArgs,

    /// Largest vertex count accepted by the dense solver.
    #[arg(long, default_value_t = 3000)]
    pub dense_limit: usize,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OperatorDumpArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,

    #[command(flatten)]
    pub operator: GraphArgs,

    /// Stiffness matrix output (lower triangle, Matrix Market).
    #[arg(long)]
    pub out: PathBuf,

    /// Mass diagonal output (Matrix Market).
    #[arg(long)]
    pub mass_out: Option<PathBuf>,
}
