use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};

use mahf::baselines::{mhw_normal_variation, MhwSpec};
use mahf::filter::{filter_with_rows, multiscale_rows, normal_variation_with_rows, KernelRows, MultiscaleStrategy};
use mahf::geometry::{build_frames, estimate_vertex_normals, pca_normals};
use mahf::io::{
    parse_mesh, parse_ply, parse_signal, rgb_to_luminance, write_mesh, write_response, write_signal_csv,
    LuminanceWeights, MeshFormat, ParseOptions, ResponseFormat, SignalSource,
};
use mahf::laplacian::{cotan_operator, gaussian_knn_operator};
use mahf::shapes::{bumpy_sphere, flat_grid, icosphere, refined_cube};
use mahf::spectral::{eigendecompose, heat_kernel_row};
use mahf::{
    Error, HeatParams64, LocalFrame64, Mesh64, Result, Sigma, SparseOperator64, TimeScale, Vec3d, VertexSignal64,
};

use crate::args::*;
use crate::manifest::{HeatRecord, InputRecord, Manifest, OperatorRecord, OutputRecord};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

struct Loaded {
    mesh: Mesh64,
    /// Extra PLY vertex properties, when the input is PLY.
    properties: Vec<(String, Vec<f64>)>,
}

fn mesh_format(args: &MeshArgs) -> Result<MeshFormat> {
    match args.mesh_format {
        Some(MeshFormatArg::Off) => Ok(MeshFormat::Off),
        Some(MeshFormatArg::Obj) => Ok(MeshFormat::Obj),
        Some(MeshFormatArg::Ply) => Ok(MeshFormat::PlyAscii),
        None => MeshFormat::from_path(&args.mesh).ok_or_else(|| {
            Error::UnsupportedFormat(format!("cannot infer mesh format of {}; use --mesh-format", args.mesh.display()))
        }),
    }
}

fn load_mesh(args: &MeshArgs) -> Result<Loaded> {
    let opts = ParseOptions { triangulate: args.triangulate };
    let loaded = match mesh_format(args)? {
        MeshFormat::PlyAscii => {
            let data = parse_ply::<f64>(&args.mesh, opts)?;
            Loaded { mesh: data.mesh, properties: data.vertex_properties }
        }
        f => Loaded { mesh: parse_mesh(&args.mesh, f, opts)?, properties: Vec::new() },
    };
    info!(
        "{}: {} vertices, {} faces",
        args.mesh.display(),
        loaded.mesh.vertex_count(),
        loaded.mesh.face_count()
    );
    Ok(loaded)
}

fn mesh_input(args: &MeshArgs, mesh: &Mesh64) -> InputRecord {
    InputRecord {
        role: "mesh",
        path: args.mesh.clone(),
        vertices: Some(mesh.vertex_count()),
        faces: Some(mesh.face_count()),
    }
}

fn parse_sigma(text: &str) -> Result<Sigma<f64>> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(Sigma::Auto);
    }
    text.parse::<f64>()
        .map(Sigma::Fixed)
        .map_err(|_| Error::InvalidParameter(format!("--sigma expects a number or \"auto\", got {text:?}")))
}

/// Operator plus the geometric context the filters need.
struct Setup {
    op: SparseOperator64,
    normals: Vec<Vec3d>,
    frames: Vec<LocalFrame64>,
    record: OperatorRecord,
}

fn build_operator(mesh: &Mesh64, g: &GraphArgs) -> Result<(SparseOperator64, OperatorRecord)> {
    let (op, knn_k, sigma, kind) = match g.kind {
        OperatorKind::Cotangent => {
            if mesh.face_count() == 0 {
                return Err(Error::InvalidParameter(
                    "the cotangent operator needs faces; use --operator gaussian-knn for point clouds".into(),
                ));
            }
            (cotan_operator(mesh)?, None, None, "cotangent")
        }
        OperatorKind::GaussianKnn => {
            let op = gaussian_knn_operator(mesh.vertices(), g.knn_k, parse_sigma(&g.sigma)?)?;
            (op, Some(g.knn_k), Some(g.sigma.clone()), "gaussian-knn")
        }
    };
    let est = op.lambda_max();
    if !est.converged {
        warn!("lambda_max power iteration did not converge after {} iterations", est.iterations);
    }
    if op.clamped_cotangents() > 0 {
        warn!("{} cotangent weights were clamped", op.clamped_cotangents());
    }
    let record = OperatorRecord {
        kind,
        knn_k,
        sigma,
        normals: "",
        lambda_max: est.value,
        lambda_max_converged: est.converged,
        clamped_cotangents: op.clamped_cotangents(),
        mean_vertex_mass: op.mass().iter().sum::<f64>() / op.dim() as f64,
    };
    Ok((op, record))
}

fn setup(mesh: &Mesh64, g: &GraphArgs) -> Result<Setup> {
    let (op, mut record) = build_operator(mesh, g)?;
    let (normals, source) = match mesh.normals() {
        Some(n) => (n.to_vec(), "input"),
        None if mesh.face_count() > 0 => (estimate_vertex_normals(mesh)?, "faces"),
        None => (pca_normals(mesh.vertices(), g.knn_k)?, "pca"),
    };
    record.normals = source;
    let frames = build_frames(&normals)?;
    Ok(Setup { op, normals, frames, record })
}

fn heat_params(h: &HeatArgs) -> HeatParams64 {
    let scale = if h.area_normalize { TimeScale::MeanVertexArea } else { TimeScale::Raw };
    HeatParams64::new(0.0).with_order(h.order).with_threshold(h.threshold).with_time_scale(scale)
}

fn heat_record(h: &HeatArgs) -> HeatRecord {
    HeatRecord {
        chebyshev_order: h.order,
        support_threshold: h.threshold,
        time_scale: if h.area_normalize { "mean-vertex-area" } else { "raw" },
        strategy: None,
        signal: None,
        luma: None,
        baseline: None,
    }
}

/// Sorted, duplicate-free copy of the requested times.
fn sorted_times(ts: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = ts.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidParameter(format!("diffusion time must be finite and >= 0, got {bad}")));
    }
    let mut v = ts.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Output naming: `<dir>/<stem><suffix>.<ext>`.
struct OutputBase {
    dir: PathBuf,
    stem: String,
    ext: String,
    format: ResponseFormat,
}

impl OutputBase {
    fn new(out: &Path) -> Result<Self> {
        let format = ResponseFormat::from_path(out).ok_or_else(|| {
            Error::UnsupportedFormat(format!("output {} must end in .ply or .csv", out.display()))
        })?;
        let stem = out
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidParameter(format!("bad output path {}", out.display())))?
            .to_string();
        let ext = out.extension().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { dir, stem, ext, format })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}.{}", self.stem, self.ext))
    }

    fn manifest(&self, explicit: &Option<PathBuf>) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.dir.join(format!("{}.json", self.stem)))
    }
}

fn write_field(base: &OutputBase, suffix: &str, mesh: &Mesh64, field: &VertexSignal64) -> Result<OutputRecord> {
    let path = base.path(suffix);
    write_response(&path, mesh, field, base.format)?;
    info!("wrote {}", path.display());
    Ok(OutputRecord::new(path, field.values()))
}

enum Signal {
    Scalar(VertexSignal64),
    Normals,
}

fn resolve_signal(a: &FilterArgs, loaded: &Loaded) -> Result<(Signal, Option<InputRecord>)> {
    let n = loaded.mesh.vertex_count();
    let weights = match a.luma {
        Luma::Rec601 => LuminanceWeights::REC601,
        Luma::Rec709 => LuminanceWeights::REC709,
    };
    match a.signal.as_str() {
        "normals" => Ok((Signal::Normals, None)),
        "luminance" => Ok((Signal::Scalar(rgb_to_luminance(&loaded.mesh, weights)?), None)),
        s if s.starts_with("ply:") => {
            let name = &s[4..];
            let values = loaded
                .properties
                .iter()
                .find(|(p, _)| p == name)
                .map(|(_, v)| v.clone())
                .ok_or(Error::MissingAttribute("requested PLY vertex property"))?;
            Ok((Signal::Scalar(VertexSignal64::new(name.to_string(), values)?), None))
        }
        path => {
            let path = PathBuf::from(path);
            let signal = parse_signal(&path, None::<SignalSource<'_>>, Some(n))?;
            let rec = InputRecord { role: "signal", path, vertices: Some(signal.len()), faces: None };
            Ok((Signal::Scalar(signal), Some(rec)))
        }
    }
}

pub fn filter(a: &FilterArgs) -> Result<()> {
    let loaded = load_mesh(&a.mesh)?;
    let mesh = &loaded.mesh;
    let (signal, signal_input) = resolve_signal(a, &loaded)?;
    let st = setup(mesh, &a.operator)?;
    let base = OutputBase::new(&a.out)?;
    let ts = sorted_times(&a.ts)?;
    let strategy = match a.strategy {
        Strategy::Direct => MultiscaleStrategy::Direct,
        Strategy::Semigroup => MultiscaleStrategy::Semigroup,
    };
    let all_rows = multiscale_rows(&st.op, &heat_params(&a.heat), &ts, strategy)?;

    let mut manifest = Manifest::new("filter");
    manifest.inputs.push(mesh_input(&a.mesh, mesh));
    manifest.inputs.extend(signal_input);
    let mut heat = heat_record(&a.heat);
    heat.strategy = Some(match a.strategy {
        Strategy::Direct => "direct",
        Strategy::Semigroup => "semigroup",
    });
    heat.signal = Some(a.signal.clone());
    if a.signal == "luminance" {
        heat.luma = Some(match a.luma {
            Luma::Rec601 => "rec601",
            Luma::Rec709 => "rec709",
        });
    }
    manifest.heat = Some(heat);

    let positions = mesh.vertices();
    for rows in &all_rows {
        let t = rows.heat.t;
        let support = rows.mean_support();
        for &k in &a.ks {
            let field = match &signal {
                Signal::Scalar(s) => filter_with_rows(rows, &st.frames, positions, k, s.values())?.squared_modulus(),
                Signal::Normals => normal_variation_with_rows(&st.normals, rows, &st.frames, positions, k)?,
            };
            let mut rec = write_field(&base, &format!("_k{k}_t{t}"), mesh, &field)?;
            rec.k = Some(k);
            rec.t = Some(t);
            rec.t_effective = Some(rows.heat.effective_time(&st.op));
            rec.mean_support = Some(support);
            manifest.outputs.push(rec);
        }
    }
    manifest.operator = Some(st.record);
    manifest.write(&base.manifest(&a.manifest))
}

pub fn normal_variation(a: &NormalVariationArgs) -> Result<()> {
    let loaded = load_mesh(&a.mesh)?;
    let mesh = &loaded.mesh;
    let st = setup(mesh, &a.operator)?;
    let base = OutputBase::new(&a.out)?;
    let params = heat_params(&a.heat);

    let mut manifest = Manifest::new("normal-variation");
    manifest.inputs.push(mesh_input(&a.mesh, mesh));
    let mut heat = heat_record(&a.heat);
    heat.baseline = a.baseline.map(|_| "mhw");
    manifest.heat = Some(heat);

    for t in sorted_times(&a.ts)? {
        let p = params.with_t(t);
        let (field, suffix, k, support) = match a.baseline {
            Some(Baseline::Mhw) => {
                (mhw_normal_variation(&st.normals, &st.op, &MhwSpec::new(p))?, format!("_mhw_t{t}"), None, None)
            }
            None => {
                let rows = KernelRows::compute(&st.op, &p)?;
                let field = normal_variation_with_rows(&st.normals, &rows, &st.frames, mesh.vertices(), a.k)?;
                (field, format!("_k{}_t{t}", a.k), Some(a.k), Some(rows.mean_support()))
            }
        };
        let mut rec = write_field(&base, &suffix, mesh, &field)?;
        rec.k = k;
        rec.t = Some(t);
        rec.t_effective = Some(p.effective_time(&st.op));
        rec.mean_support = support;
        manifest.outputs.push(rec);
    }
    manifest.operator = Some(st.record);
    let path = match (&a.manifest, a.baseline) {
        (None, Some(Baseline::Mhw)) => base.dir.join(format!("{}_mhw.json", base.stem)),
        _ => base.manifest(&a.manifest),
    };
    manifest.write(&path)
}

pub fn fuse(a: &FuseArgs) -> Result<()> {
    let fa = parse_signal::<f64>(&a.a, None, None)?;
    let fb = parse_signal::<f64>(&a.b, None, None)?;
    let fused = mahf::filter::fuse(&fa, &fb, a.beta)?;
    let format = ResponseFormat::from_path(&a.out).ok_or_else(|| {
        Error::UnsupportedFormat(format!("output {} must end in .ply or .csv", a.out.display()))
    })?;
    let mut manifest = Manifest::new("fuse");
    for (role, path, f) in [("a", &a.a, &fa), ("b", &a.b, &fb)] {
        manifest.inputs.push(InputRecord { role, path: path.clone(), vertices: Some(f.len()), faces: None });
    }
    match format {
        ResponseFormat::Csv => write_signal_csv(&a.out, fused.values())?,
        ResponseFormat::PlyAscii => {
            let geometry = match &a.mesh {
                Some(m) => m.clone(),
                None if ResponseFormat::from_path(&a.a) == Some(ResponseFormat::PlyAscii) => a.a.clone(),
                None => {
                    return Err(Error::InvalidParameter(
                        "PLY output needs geometry: pass --mesh or a PLY input for --a".into(),
                    ))
                }
            };
            let margs = MeshArgs { mesh: geometry, mesh_format: None, triangulate: false };
            let mesh = load_mesh(&margs)?.mesh;
            manifest.inputs.push(mesh_input(&margs, &mesh));
            write_response(&a.out, &mesh, &fused, format)?;
        }
    }
    manifest.beta = Some(a.beta);
    manifest.outputs.push(OutputRecord::new(a.out.clone(), fused.values()));
    let mpath = a.manifest.clone().unwrap_or_else(|| a.out.with_extension("json"));
    manifest.write(&mpath)
}

pub fn kernel(a: &KernelArgs) -> Result<()> {
    let loaded = load_mesh(&a.mesh)?;
    let mesh = &loaded.mesh;
    let n = mesh.vertex_count();
    if a.vertex >= n {
        return Err(Error::VertexOutOfRange { index: a.vertex, count: n });
    }
    let (op, record) = build_operator(mesh, &a.operator)?;
    let base = OutputBase::new(&a.out)?;
    let params = heat_params(&a.heat);
    let mut manifest = Manifest::new("kernel");
    manifest.inputs.push(mesh_input(&a.mesh, mesh));
    manifest.heat = Some(heat_record(&a.heat));
    for t in sorted_times(&a.ts)? {
        let p = params.with_t(t);
        let row = heat_kernel_row(&op, &p, a.vertex)?;
        let field = VertexSignal64::new(format!("kernel_v{}_t{t}", a.vertex), row.to_dense(n))?;
        let mut rec = write_field(&base, &format!("_v{}_t{t}", a.vertex), mesh, &field)?;
        rec.vertex = Some(a.vertex);
        rec.t = Some(t);
        rec.t_effective = Some(p.effective_time(&op));
        rec.mean_support = Some(row.entries.len() as f64);
        manifest.outputs.push(rec);
    }
    manifest.operator = Some(record);
    manifest.write(&base.manifest(&a.manifest))
}

fn bounds(mesh: &Mesh64, axis: usize) -> (f64, f64) {
    mesh.vertices()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[axis]), hi.max(v[axis])))
}

fn test_signal(mesh: &Mesh64, kind: TestSignal) -> Vec<f64> {
    let (lo, hi) = bounds(mesh, 0);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    mesh.vertices()
        .iter()
        .map(|v| {
            let u = (v[0] - lo) / span;
            match kind {
                TestSignal::TwoLevel => {
                    if u < 0.5 {
                        0.0
                    } else {
                        1.0
                    }
                }
                // Step up at 0.2, plateau, ramp back down over [0.5, 0.8].
                TestSignal::StepRamp => {
                    if u < 0.2 {
                        0.0
                    } else if u <= 0.5 {
                        1.0
                    } else if u < 0.8 {
                        1.0 - (u - 0.5) / 0.3
                    } else {
                        0.0
                    }
                }
                TestSignal::Height => v[2],
            }
        })
        .collect()
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let format = MeshFormat::from_path(&a.out)
        .ok_or_else(|| Error::UnsupportedFormat(format!("cannot infer mesh format of {}", a.out.display())))?;
    if !(a.size > 0.0) || !a.size.is_finite() {
        return Err(Error::InvalidParameter(format!("--size must be positive, got {}", a.size)));
    }
    let mut mesh: Mesh64 = match a.shape {
        Shape::Icosphere => icosphere(a.level),
        Shape::BumpySphere => bumpy_sphere(a.level, a.amplitude),
        Shape::Grid => {
            if a.nx < 2 || a.ny < 2 {
                return Err(Error::InvalidParameter("grids need --nx and --ny of at least 2".into()));
            }
            flat_grid(a.nx, a.ny, a.size)
        }
        Shape::Cube => {
            if a.nx == 0 {
                return Err(Error::InvalidParameter("cubes need --nx of at least 1".into()));
            }
            refined_cube(a.nx, a.size)
        }
    };
    if a.colors {
        // Two tones split by the x = centre plane with equal luminance contrast under both luma standards.
        let (lo, hi) = bounds(&mesh, 0);
        let mid = 0.5 * (lo + hi);
        let colors = mesh.vertices().iter().map(|v| if v[0] < mid { [0.2, 0.2, 0.2] } else { [0.8, 0.8, 0.8] }).collect();
        mesh = mesh.with_colors(colors)?;
    }
    write_mesh(&a.out, &mesh, format)?;
    info!("wrote {} ({} vertices)", a.out.display(), mesh.vertex_count());
    if let Some(kind) = a.signal {
        let path = a.signal_out.clone().unwrap_or_else(|| a.out.with_extension("csv"));
        write_signal_csv(&path, &test_signal(&mesh, kind))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn spectrum(a: &SpectrumArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?.mesh;
    let (op, _) = build_operator(&mesh, &a.operator)?;
    let basis = eigendecompose(&op, a.dense_limit)?;
    let mut w = BufWriter::new(File::create(&a.out).map_err(io_err(&a.out))?);
    basis.write_spectrum_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&a.out))
}

pub fn operator(a: &OperatorDumpArgs) -> Result<()> {
    let mesh = load_mesh(&a.mesh)?.mesh;
    let (op, _) = build_operator(&mesh, &a.operator)?;
    let mut w = BufWriter::new(File::create(&a.out).map_err(io_err(&a.out))?);
    op.write_matrix_market(&mut w).and_then(|_| w.flush()).map_err(io_err(&a.out))?;
    if let Some(path) = &a.mass_out {
        let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
        op.write_mass_matrix_market(&mut w).and_then(|_| w.flush()).map_err(io_err(path))?;
    }
    Ok(())
}
