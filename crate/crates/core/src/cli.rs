//! `shapeinv` command line. Every JSON document carries `format_version` and
//! the resolved `config`; floats are written with 17 significant digits so
//! repeated runs are byte-identical.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::align::{grid_oracle_2d, optimize, AlignConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::hermite::{normalized_grid, reconstruct, EncodeOptions, GridSpec, HermiteCoeffs};
use crate::invariants::{
    default_catalog, moment_features, rotation_equivalence_test_with, similarity_distance,
    InvariantCatalog, Norm,
};
use crate::io::{load_grid, load_points, points_to_csv, points_to_xyz, AtomWeighting, GrayImage, PointFormat};
use crate::pipeline::{self, ScaleMode};
use crate::shape::{Shape, ShapeData};

pub const FORMAT_VERSION: &str = "shapeinv/1";

#[derive(Parser, Debug)]
#[command(name = "shapeinv", version, about = "Rotation-invariant shape descriptors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Central moment tensors of a shape.
    Moments(MomentsArgs),
    /// Hermite expansion coefficients of a shape.
    Encode(EncodeArgs),
    /// Render Hermite coefficients back onto a 2D lattice as a PGM image.
    Reconstruct(ReconstructArgs),
    /// Invariant feature vectors of one or more shapes.
    Invariants(InvariantsArgs),
    /// Invariant distance and rotation-equivalence verdict for two shapes.
    Compare(CompareArgs),
    /// Rotation that best maps the moments of B onto those of A.
    Align(AlignArgs),
    /// Write the synthetic fixture shapes to a directory.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Xyz,
    Pgm,
}

#[derive(Args, Debug, Clone)]
pub struct InputOpts {
    /// Coordinate dimension (CSV); checked against XYZ/PGM input.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// XYZ atom weights: unit or mass.
    #[arg(long, default_value = "unit")]
    pub weights: AtomWeighting,
    /// normalize | normalize:<target> | fixed:<sigma> | off
    #[arg(long, default_value = "normalize")]
    pub scale: ScaleMode,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    pub input: PathBuf,
    /// Highest moment order.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[command(flatten)]
    pub opts: InputOpts,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    pub input: PathBuf,
    /// Highest total Hermite degree.
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    /// Least-squares projection on the sampling lattice (grid input only).
    #[arg(long)]
    pub gram_schmidt: bool,
    /// Also report the L2 error for every degree 0..=order (grid input only).
    #[arg(long)]
    pub sweep: bool,
    #[command(flatten)]
    pub opts: InputOpts,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Coefficients JSON written by `encode`.
    pub coeffs: PathBuf,
    /// Output PGM path.
    #[arg(long)]
    pub out: PathBuf,
    /// Lattice WIDTHxHEIGHT with unit spacing from the origin; defaults to the
    /// lattice the coefficients were encoded from, else 28x28.
    #[arg(long)]
    pub grid: Option<String>,
    /// Use only degrees up to this value.
    #[arg(long)]
    pub order: Option<usize>,
    /// Gamma applied after normalizing to the peak.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Keep negative values instead of clipping them to black.
    #[arg(long)]
    pub no_clip: bool,
    #[arg(long, default_value_t = 255)]
    pub maxval: u32,
    /// Where to write the JSON summary; stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Catalog JSON; the built-in catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Write CSV (one row per input) instead of JSON.
    #[arg(long)]
    pub csv: bool,
    #[command(flatten)]
    pub opts: InputOpts,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Equivalence tolerance on every invariant.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub opts: InputOpts,
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of starts (default 8 in 2D, 32 otherwise).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Also search improper rotations.
    #[arg(long)]
    pub reflect: bool,
    /// Keep running every start even after reaching the tolerance.
    #[arg(long)]
    pub all_restarts: bool,
    /// Cross-check with a brute-force angle grid (2D only).
    #[arg(long)]
    pub verify: bool,
    /// Angles in the verification grid.
    #[arg(long, default_value_t = 3600)]
    pub oracle_angles: usize,
    #[command(flatten)]
    pub opts: InputOpts,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    /// Target directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// Process exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::InconsistentDimension { .. } | Error::InvalidGraph(_) => 2,
        Error::ZeroWeight | Error::Degenerate(_) => 3,
        Error::DimensionMismatch(_)
        | Error::CatalogMismatch(_)
        | Error::FlagMismatch(_)
        | Error::MissingOrder(_) => 4,
        _ => 1,
    }
}

/// Parses arguments, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Moments(a) => cmd_moments(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Align(a) => cmd_align(a),
        Command::Fixtures(a) => cmd_fixtures(a),
    }
}

// ---------------------------------------------------------------------------
// output

struct SciFloats<'a>(PrettyFormatter<'a>);

impl Formatter for SciFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with every float in `{:.16e}` form.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable value");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn document(command: &str, config: Value, body: Value) -> Value {
    let mut doc = json!({
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": config,
    });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    doc
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

// ---------------------------------------------------------------------------
// input

fn detect_format(path: &Path, explicit: Option<InputFormat>) -> Result<InputFormat> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("csv") | Some("txt") => Ok(InputFormat::Csv),
        Some("xyz") => Ok(InputFormat::Xyz),
        Some("pgm") => Ok(InputFormat::Pgm),
        _ => Err(Error::InvalidArgument(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

pub fn load_shape(path: &Path, opts: &InputOpts) -> Result<Shape> {
    let format = detect_format(path, opts.format)?;
    let shape = match format {
        InputFormat::Csv => load_points(path, PointFormat::Csv, opts.dim, opts.weights)?,
        InputFormat::Xyz => load_points(path, PointFormat::Xyz, None, opts.weights)?,
        InputFormat::Pgm => load_grid(path)?,
    };
    if let Some(d) = opts.dim {
        if d != shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "--dim {d} but {} is {}-dimensional",
                path.display(),
                shape.dim()
            )));
        }
    }
    Ok(shape)
}

fn input_config(opts: &InputOpts) -> Value {
    json!({
        "dim": opts.dim,
        "format": opts.format,
        "weights": opts.weights,
        "scale": opts.scale.to_string(),
    })
}

fn with_config(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn load_catalog(path: Option<&Path>, dim: usize, order: usize) -> Result<InvariantCatalog> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            InvariantCatalog::from_json(&text)
        }
        None => default_catalog(dim, order),
    }
}

// ---------------------------------------------------------------------------
// commands

fn cmd_moments(a: MomentsArgs) -> Result<()> {
    let shape = load_shape(&a.input, &a.opts)?;
    let (prepared, set) = pipeline::moments(&shape, a.opts.scale, a.order)?;
    let moments: Vec<Value> = set
        .tensors
        .iter()
        .map(|t| {
            let layout = t.layout();
            let labels: Vec<Vec<usize>> = layout
                .tuples
                .iter()
                .map(|tuple| tuple.iter().map(|i| i + 1).collect())
                .collect();
            json!({ "order": t.order(), "labels": labels, "entries": t.entries() })
        })
        .collect();
    let config = with_config(input_config(&a.opts), json!({ "order": a.order }));
    let doc = document(
        "moments",
        config,
        json!({
            "input": path_str(&a.input),
            "dim": set.dim,
            "order_max": set.order_max,
            "centered": set.centered,
            "scale_normalized": set.scale_normalized,
            "center": prepared.center,
            "scale": prepared.scale,
            "moments": moments,
        }),
    );
    emit(a.opts.out.as_deref(), &to_json(&doc))
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let shape = load_shape(&a.input, &a.opts)?;
    let options = EncodeOptions {
        gram_schmidt: a.gram_schmidt,
    };
    let (prepared, coeffs) = pipeline::encode_shape(&shape, a.opts.scale, a.order, options)?;
    let mut body = json!({
        "input": path_str(&a.input),
        "dim": coeffs.dim,
        "coefficients": coeffs,
        "shell_energies": coeffs.shell_energies(),
    });
    if let ShapeData::Grid(g) = shape.data() {
        body["source_grid"] = json!(GridSpec::of(g));
        body["l2_error"] = json!(crate::hermite::l2_error(&coeffs, &prepared.shape)?);
    }
    if a.sweep {
        if !shape.is_grid() {
            return Err(Error::InvalidArgument("--sweep needs grid input".into()));
        }
        let mut sweep = Vec::new();
        for m in 0..=a.order {
            let c = crate::hermite::encode_with(&prepared.shape, m, options)?;
            sweep.push(json!({
                "degree": m,
                "l2_error": crate::hermite::l2_error(&c, &prepared.shape)?,
            }));
        }
        body["l2_by_degree"] = Value::Array(sweep);
    }
    let config = with_config(
        input_config(&a.opts),
        json!({ "order": a.order, "gram_schmidt": a.gram_schmidt, "sweep": a.sweep }),
    );
    emit(a.opts.out.as_deref(), &to_json(&document("encode", config, body)))
}

fn parse_grid_arg(s: &str) -> Result<GridSpec> {
    let bad = || Error::InvalidArgument(format!("bad --grid '{s}', expected WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok(GridSpec {
        origin: vec![0.0, 0.0],
        spacing: vec![1.0, 1.0],
        extents: vec![w, h],
    })
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    let text = fs::read_to_string(&a.coeffs).map_err(|e| io_err(&a.coeffs, e))?;
    let json_err = |e: serde_json::Error| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    };
    let doc: Value = serde_json::from_str(&text).map_err(json_err)?;
    let (coeff_value, source_grid) = match doc.get("coefficients") {
        Some(c) => (c.clone(), doc.get("source_grid").cloned()),
        None => (doc.clone(), None),
    };
    let mut coeffs: HermiteCoeffs = serde_json::from_value(coeff_value).map_err(json_err)?;
    coeffs.check()?;
    if coeffs.dim != 2 {
        return Err(Error::DimensionMismatch(format!(
            "PGM output needs 2D coefficients, got d = {}",
            coeffs.dim
        )));
    }
    if let Some(m) = a.order {
        coeffs = coeffs.truncated(m);
    }
    let grid = match (&a.grid, source_grid) {
        (Some(s), _) => parse_grid_arg(s)?,
        (None, Some(g)) => serde_json::from_value(g).map_err(json_err)?,
        (None, None) => parse_grid_arg("28x28")?,
    };
    if grid.extents.len() != 2 {
        return Err(Error::DimensionMismatch("reconstruction lattice must be 2D".into()));
    }
    let norm = normalized_grid(&coeffs, &grid);
    let field = reconstruct(&coeffs, &norm)?;
    let img = GrayImage::from_field([grid.extents[0], grid.extents[1]], &field, a.maxval, a.gamma, !a.no_clip)?;
    fs::write(&a.out, img.to_p2()).map_err(|e| io_err(&a.out, e))?;

    let cell: f64 = norm.spacing.iter().product();
    let config = json!({
        "grid": grid,
        "order": a.order,
        "gamma": a.gamma,
        "clip": !a.no_clip,
        "maxval": a.maxval,
    });
    let body = json!({
        "input": path_str(&a.coeffs),
        "output": path_str(&a.out),
        "width": img.width,
        "height": img.height,
        "field_min": field.iter().cloned().fold(f64::INFINITY, f64::min),
        "field_max": field.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "mass": field.iter().sum::<f64>() * cell,
    });
    emit(a.summary.as_deref(), &to_json(&document("reconstruct", config, body)))
}

fn cmd_invariants(a: InvariantsArgs) -> Result<()> {
    let shapes = a
        .inputs
        .iter()
        .map(|p| load_shape(p, &a.opts))
        .collect::<Result<Vec<_>>>()?;
    let dim = shapes[0].dim();
    if let Some(s) = shapes.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "inputs mix {dim}- and {}-dimensional shapes",
            s.dim()
        )));
    }
    let catalog = load_catalog(a.catalog.as_deref(), dim, a.order)?;
    let order = a.order.max(catalog.max_order());
    let mut vectors = Vec::new();
    for s in &shapes {
        let (_, set) = pipeline::moments(s, a.opts.scale, order)?;
        vectors.push(moment_features(&set, &catalog)?);
    }
    let config = with_config(
        input_config(&a.opts),
        json!({
            "order": order,
            "catalog": a.catalog.as_deref().map(path_str).unwrap_or_else(|| "default".into()),
        }),
    );
    if a.csv {
        let mut out = format!(
            "# format_version={FORMAT_VERSION} config={}\n",
            serde_json::to_string(&config).expect("json")
        );
        let names: Vec<String> = catalog.names().iter().map(|n| csv_field(n)).collect();
        out += &format!("input,{}\n", names.join(","));
        for (p, v) in a.inputs.iter().zip(&vectors) {
            let vals: Vec<String> = v.values.iter().map(|x| format!("{x:.16e}")).collect();
            out += &format!("{},{}\n", csv_field(&path_str(p)), vals.join(","));
        }
        return emit(a.opts.out.as_deref(), &out);
    }
    let results: Vec<Value> = a
        .inputs
        .iter()
        .zip(&vectors)
        .map(|(p, v)| json!({ "input": path_str(p), "values": v.values, "raw": v.raw }))
        .collect();
    let body = json!({
        "dim": dim,
        "scale_normalized": vectors[0].meta.scale_normalized,
        "names": catalog.names(),
        "results": results,
    });
    emit(a.opts.out.as_deref(), &to_json(&document("invariants", config, body)))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn load_pair(a: &Path, b: &Path, opts: &InputOpts) -> Result<(Shape, Shape)> {
    let sa = load_shape(a, opts)?;
    let sb = load_shape(b, opts)?;
    if sa.dim() != sb.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} is {}-dimensional but {} is {}-dimensional",
            a.display(),
            sa.dim(),
            b.display(),
            sb.dim()
        )));
    }
    Ok((sa, sb))
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let (sa, sb) = load_pair(&a.a, &a.b, &a.opts)?;
    let catalog = load_catalog(a.catalog.as_deref(), sa.dim(), a.order)?;
    let order = a.order.max(catalog.max_order());
    let (_, pa) = pipeline::moments(&sa, a.opts.scale, order)?;
    let (_, pb) = pipeline::moments(&sb, a.opts.scale, order)?;
    let fa = moment_features(&pa, &catalog)?;
    let fb = moment_features(&pb, &catalog)?;
    let report = rotation_equivalence_test_with(&pa, &pb, &catalog, a.tol)?;
    let config = with_config(
        input_config(&a.opts),
        json!({
            "order": order,
            "catalog": a.catalog.as_deref().map(path_str).unwrap_or_else(|| "default".into()),
            "tol": a.tol,
        }),
    );
    let body = json!({
        "inputs": [path_str(&a.a), path_str(&a.b)],
        "names": fa.names,
        "a": fa.values,
        "b": fb.values,
        "distance": {
            "l2": similarity_distance(&fa, &fb, Norm::L2)?,
            "linf": similarity_distance(&fa, &fb, Norm::Linf)?,
        },
        "equivalent": report.equivalent,
        "worst": report.worst,
    });
    emit(a.opts.out.as_deref(), &to_json(&document("compare", config, body)))
}

fn cmd_align(a: AlignArgs) -> Result<()> {
    let (sa, sb) = load_pair(&a.a, &a.b, &a.opts)?;
    let (_, p) = pipeline::moments(&sa, a.opts.scale, a.order)?;
    let (_, q) = pipeline::moments(&sb, a.opts.scale, a.order)?;
    let config = AlignConfig {
        restarts: a.restarts,
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.seed,
        allow_reflection: a.reflect,
        stop_at_tol: !a.all_restarts,
        ..AlignConfig::default()
    };
    let result = optimize(&p, &q, &config)?;
    let mut body = json!({
        "inputs": [path_str(&a.a), path_str(&a.b)],
        "dim": p.dim,
        "optimized": result,
    });
    if p.dim == 2 {
        let m = result.rotation.matrix();
        body["optimized"]["angle"] = json!(m[(1, 0)].atan2(m[(0, 0)]).rem_euclid(std::f64::consts::TAU));
    }
    if a.verify {
        if p.dim != 2 {
            return Err(Error::DimensionMismatch(format!(
                "--verify needs 2D input, got d = {}",
                p.dim
            )));
        }
        let oracle = grid_oracle_2d(&p, &q, a.oracle_angles, &config.weights)?;
        body["oracle"] = json!({
            "angle": oracle.angle,
            "residual": oracle.residual,
            "angles": a.oracle_angles,
        });
    }
    let cfg = with_config(
        input_config(&a.opts),
        json!({
            "order": a.order,
            "seed": a.seed,
            "restarts": config.restarts_for(p.dim),
            "max_iter": a.max_iter,
            "tol": a.tol,
            "reflect": a.reflect,
            "all_restarts": a.all_restarts,
            "verify": a.verify,
            "oracle_angles": a.oracle_angles,
        }),
    );
    emit(a.opts.out.as_deref(), &to_json(&document("align", cfg, body)))
}

fn cmd_fixtures(a: FixturesArgs) -> Result<()> {
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        let p = a.out.join(name);
        fs::write(&p, text).map_err(|e| io_err(&p, e))?;
        files.push(name.to_string());
        Ok(())
    };

    let planar = [
        ("cross", fixtures::cross(), 0.7),
        ("asym", fixtures::asymmetric_2d(), 1.1),
    ];
    for (name, shape, angle) in planar {
        write(&format!("{name}.csv"), points_to_csv(&shape))?;
        let rot = shape.transformed(&fixtures::rotation_2d(angle))?;
        write(&format!("{name}_rot.csv"), points_to_csv(&rot))?;
        let st = shape.transformed(&fixtures::stretch(2, 2.0))?;
        write(&format!("{name}_stretch.csv"), points_to_csv(&st))?;
    }

    for (name, img) in fixtures::blob_images() {
        write(&format!("{name}.pgm"), img.to_p2())?;
        write(&format!("{name}_rot.pgm"), fixtures::rotate_image_quarter(&img).to_p2())?;
        let st = img.to_shape()?.transformed(&fixtures::stretch(2, 2.0))?;
        write(&format!("{name}_stretch.csv"), points_to_csv(&st))?;
    }

    let mol = fixtures::molecule_3d();
    write("mol.xyz", points_to_xyz(&mol, "C", "fixture molecule")?)?;
    let rot = mol.transformed(&fixtures::rotation_3d([1.0, 2.0, 3.0], 0.9))?;
    write("mol_rot.xyz", points_to_xyz(&rot, "C", "fixture molecule, rotated")?)?;
    let st = mol.transformed(&fixtures::stretch(3, 2.0))?;
    write("mol_stretch.xyz", points_to_xyz(&st, "C", "fixture molecule, stretched")?)?;

    let doc = document(
        "fixtures",
        json!({ "out": path_str(&a.out) }),
        json!({ "files": files }),
    );
    emit(None, &to_json(&doc))
}
