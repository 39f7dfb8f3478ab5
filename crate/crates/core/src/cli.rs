//! Command-line front end: argument parsing, job configuration and the
//! five subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::convert::{self, validate_orders};
use crate::dressing::{self, BInit};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::frames::{self, PotentialForm, PotentialSpec, SurfaceMesh, SurfaceOptions};
use crate::gallery;
use crate::grid::{DomainGrid, GridSpec};
use crate::mesh_io;
use crate::report::{sphere_report, DataCheck, MeshReport, RunReport, SymmetryEntry};
use crate::symmetry::{self, circle_samples, SymmetrySpec};
use crate::weier::WeierstrassData;

/// Mesh symmetry tolerance, relative to the mesh diameter.
pub const MESH_SYMMETRY_TOL: f64 = 1e-5;
/// Default tolerance for data-level checks.
pub const DATA_CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "cmcdeform", version, about = "CMC and minimal surfaces from Weierstrass-type data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one mesh per h.
    Mesh(JobArgs),
    /// Convert between classical and normalized data.
    Convert(ConvertArgs),
    /// Order, symmetry and curvature checks.
    Check(JobArgs),
    /// Dress a potential, or test an h-independent dressing.
    Dress(DressArgs),
    /// Reproduce a named example family.
    Gallery(GalleryArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// TOML job file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use a gallery entry as the data source.
    #[arg(long)]
    pub gallery: Option<String>,
    /// Classical data μ(z)
    #[arg(long)]
    pub mu: Option<String>,
    /// Classical data ν(z), the Gauss map
    #[arg(long)]
    pub nu: Option<String>,
    /// Normalized data a(z)
    #[arg(long)]
    pub a: Option<String>,
    /// Hopf differential Q(z) of normalized data
    #[arg(long)]
    pub q: Option<String>,
    /// Mean curvatures, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub h: Vec<f64>,
    /// `N`, `HALF,N` or `X0,X1,Y0,Y1,NX,NY`.
    #[arg(long, allow_negative_numbers = true)]
    pub grid: Option<String>,
    /// Basepoint as a constant expression, e.g. `0.1+0.2*i`.
    #[arg(long, allow_hyphen_values = true)]
    pub basepoint: Option<String>,
    /// Fixed frame-series truncation order.
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Tail tolerance of the frame series; also the data-check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for mesh files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write binary PLY.
    #[arg(long)]
    pub ply: bool,
    /// `reflective` or a rotation order `n`.
    #[arg(long)]
    pub symmetry: Option<String>,
    /// Points for the order report, `;` separated constant expressions.
    #[arg(long, allow_hyphen_values = true)]
    pub orders: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub job: JobArgs,
    /// Convert classical data there and back and report the error.
    #[arg(long)]
    pub round_trip: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DressArgs {
    #[command(flatten)]
    pub job: JobArgs,
    /// Gauge `ρ`: `(a, Q) ↦ (ρ²a, Q)`.
    #[arg(long)]
    pub rho: Option<String>,
    /// Target `ã` for the h-independent dressing test.
    #[arg(long)]
    pub atilde: Option<String>,
    /// Order of the Wu recursion.
    #[arg(long, default_value_t = dressing::DEFAULT_ORDER)]
    pub order: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GalleryArgs {
    /// plane, sphere, catenoid, helicoid, enneper-K, smyth-K, order5, kusner.
    pub name: String,
    #[command(flatten)]
    pub job: JobArgs,
}

/// File form of a job; every field is optional and flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub gallery: Option<String>,
    pub mu: Option<String>,
    pub nu: Option<String>,
    pub a: Option<String>,
    pub q: Option<String>,
    pub basepoint: Option<String>,
    #[serde(default)]
    pub h: Vec<f64>,
    pub grid: Option<GridSpec>,
    pub trunc: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub ply: bool,
    pub symmetry: Option<String>,
    #[serde(default)]
    pub orders: Vec<String>,
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn merge(mut self, a: &JobArgs) -> Result<Self> {
        fn over<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        over(&mut self.gallery, &a.gallery);
        over(&mut self.mu, &a.mu);
        over(&mut self.nu, &a.nu);
        over(&mut self.a, &a.a);
        over(&mut self.q, &a.q);
        over(&mut self.basepoint, &a.basepoint);
        over(&mut self.trunc, &a.trunc);
        over(&mut self.tol, &a.tol);
        over(&mut self.out, &a.out);
        over(&mut self.symmetry, &a.symmetry);
        if !a.h.is_empty() {
            self.h = a.h.clone();
        }
        if let Some(g) = &a.grid {
            self.grid = Some(parse_grid(g)?);
        }
        if let Some(o) = &a.orders {
            self.orders = o.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
        self.ply |= a.ply;
        Ok(self)
    }
}

pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let bad = || Error::Config(format!("grid '{text}' is not N, HALF,N or X0,X1,Y0,Y1,NX,NY"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let n = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        [k] => Ok(GridSpec::square(1.0, n(k)?)),
        [w, k] => Ok(GridSpec::square(f(w)?, n(k)?)),
        [x0, x1, y0, y1, nx, ny] => Ok(GridSpec {
            x: [f(x0)?, f(x1)?],
            y: [f(y0)?, f(y1)?],
            nx: n(nx)?,
            ny: n(ny)?,
        }),
        _ => Err(bad()),
    }
}

/// Constant complex value of an expression such as `0.5-i`.
pub fn parse_point(text: &str) -> Result<Complex64> {
    let e = parse(text)?;
    let (v, w) = (e.eval_raw(Complex64::new(0.0, 0.0)), e.eval_raw(Complex64::new(0.3, 0.7)));
    if !(v.re.is_finite() && v.im.is_finite()) || (v - w).norm() > 0.0 {
        return Err(Error::Config(format!("'{text}' is not a finite constant")));
    }
    Ok(v)
}

pub fn parse_symmetry(text: &str) -> Result<SymmetrySpec> {
    match text.trim() {
        "reflective" | "reflect" => Ok(SymmetrySpec::Reflective),
        n => {
            let n = n
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("symmetry '{text}' is neither 'reflective' nor an order")))?;
            SymmetrySpec::rotational(n).map_err(|e| Error::Config(e.to_string()))
        }
    }
}

/// One surface to generate.
#[derive(Debug, Clone)]
pub struct MemberJob {
    pub h: f64,
    pub grid: GridSpec,
}

/// A validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    /// Data with `h` unset; members carry their own.
    pub spec: PotentialSpec,
    pub members: Vec<MemberJob>,
    pub opts: SurfaceOptions,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub ply: bool,
    pub symmetry: Option<SymmetrySpec>,
    pub orders: Vec<Complex64>,
    /// The h-list came from the user rather than gallery defaults.
    pub explicit_h: bool,
}

impl Job {
    /// Exactly one data source, a nonempty h-list and grids containing the
    /// basepoint as a node.
    pub fn from_config(cfg: &JobConfig, need_h: bool) -> Result<Self> {
        let entry = cfg.gallery.as_deref().map(gallery::lookup).transpose()?;
        let classical = cfg.mu.is_some() || cfg.nu.is_some();
        let normalized = cfg.a.is_some() || cfg.q.is_some();
        let sources = [entry.is_some(), classical, normalized].iter().filter(|&&b| b).count();
        if sources != 1 {
            return Err(Error::Config("give exactly one data source: a gallery name, μ/ν, or a/Q".into()));
        }
        let z0 = cfg.basepoint.as_deref().map(parse_point).transpose()?;
        let both = |x: &Option<String>, y: &Option<String>, what: &str| -> Result<(Expr, Expr)> {
            match (x, y) {
                (Some(x), Some(y)) => Ok((parse(x)?, parse(y)?)),
                _ => Err(Error::Config(format!("{what} data need both entries"))),
            }
        };
        let zero = Complex64::new(0.0, 0.0);
        let (name, mut spec, defaults, default_symmetry, default_orders) = match entry {
            Some(e) => {
                let members = e.members.iter().map(|m| MemberJob { h: m.h, grid: m.grid }).collect();
                (e.name, e.spec, members, e.symmetry, e.order_points)
            }
            None if classical => {
                let (mu, nu) = both(&cfg.mu, &cfg.nu, "classical")?;
                ("classical".to_string(), PotentialSpec::classical(mu, nu, 0.0, zero), Vec::new(), None, Vec::new())
            }
            None => {
                let (a, q) = both(&cfg.a, &cfg.q, "normalized")?;
                ("normalized".to_string(), PotentialSpec::normalized(a, q, 0.0, zero), Vec::new(), None, Vec::new())
            }
        };
        if let Some(z0) = z0 {
            spec.z0 = z0;
        }
        let members: Vec<MemberJob> = if !cfg.h.is_empty() || defaults.is_empty() {
            let grid = cfg.grid.or(defaults.first().map(|m| m.grid)).unwrap_or(GridSpec::square(1.0, 41));
            cfg.h.iter().map(|&h| MemberJob { h, grid }).collect()
        } else {
            defaults
                .into_iter()
                .map(|m| MemberJob {
                    h: m.h,
                    grid: cfg.grid.unwrap_or(m.grid),
                })
                .collect()
        };
        if need_h && members.is_empty() {
            return Err(Error::Config("the h-list is empty".into()));
        }
        for m in &members {
            if !m.h.is_finite() {
                return Err(Error::Config(format!("h = {} is not finite", m.h)));
            }
            let g = DomainGrid::new(m.grid)?;
            if g.locate(spec.z0).is_none() {
                return Err(Error::Config(format!("basepoint {} is not a node of grid {:?}", spec.z0, m.grid)));
            }
        }
        let mut opts = SurfaceOptions::default();
        if let Some(n) = cfg.trunc {
            opts.frame.truncation = Some(n);
            opts.frame.max_truncation = opts.frame.max_truncation.max(n);
        }
        if let Some(t) = cfg.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tolerance must be positive, got {t}")));
            }
            opts.frame.tail_tol = t;
        }
        let symmetry = match &cfg.symmetry {
            Some(s) => Some(parse_symmetry(s)?),
            None => default_symmetry,
        };
        let mut orders = cfg.orders.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
        if orders.is_empty() {
            orders = if default_orders.is_empty() { vec![spec.z0] } else { default_orders };
        }
        Ok(Job {
            name,
            spec,
            members,
            opts,
            tol: cfg.tol.unwrap_or(DATA_CHECK_TOL),
            out: cfg.out.clone(),
            ply: cfg.ply,
            symmetry,
            orders,
            explicit_h: !cfg.h.is_empty(),
        })
    }

    pub fn from_args(args: &JobArgs, need_h: bool) -> Result<Self> {
        Job::from_config(&load_config(args)?, need_h)
    }

    /// `Q` of the surfaces, for the Hopf comparison.
    fn hopf(&self) -> Option<Expr> {
        match &self.spec.form {
            PotentialForm::Normalized { q, .. } => Some(q.clone()),
            PotentialForm::Classical { mu, nu } => Some(WeierstrassData::new(mu.clone(), nu.clone(), self.spec.z0).hopf()),
        }
    }
}

pub fn load_config(args: &JobArgs) -> Result<JobConfig> {
    let base = match &args.config {
        Some(p) => JobConfig::from_toml(
            &fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        )?,
        None => JobConfig::default(),
    };
    base.merge(args)
}

fn source_json(job: &Job) -> serde_json::Value {
    let z0 = json!({ "re": job.spec.z0.re, "im": job.spec.z0.im });
    match &job.spec.form {
        PotentialForm::Classical { mu, nu } => json!({ "name": job.name, "form": "classical", "mu": mu.to_string(), "nu": nu.to_string(), "z0": z0 }),
        PotentialForm::Normalized { a, q } => json!({ "name": job.name, "form": "normalized", "a": a.to_string(), "q": q.to_string(), "z0": z0 }),
    }
}

/// One surface per member, computed concurrently.
pub fn build_meshes(job: &Job) -> Vec<Result<SurfaceMesh>> {
    use rayon::prelude::*;
    job.members
        .par_iter()
        .map(|m| frames::surface(&job.spec.with_h(m.h), &DomainGrid::new(m.grid)?, &job.opts))
        .collect()
}

fn vanishes(e: &Expr) -> bool {
    circle_samples(&[0.1, 0.3], 7).iter().all(|&z| e.eval_raw(z).norm() == 0.0)
}

/// Curvature, sphere and symmetry summaries for one mesh.
pub fn mesh_report(job: &Job, mesh: &SurfaceMesh) -> MeshReport {
    let hopf = job.hopf();
    let mut r = MeshReport::from_mesh(mesh, hopf.as_ref());
    if hopf.as_ref().is_some_and(vanishes) {
        r.sphere = sphere_report(mesh);
    }
    if let Some(sym) = &job.symmetry {
        let spec = job.spec.with_h(mesh.meta.h);
        let checked = symmetry::sampler_for(&spec, mesh.meta.truncation, &job.opts)
            .and_then(|s| symmetry::verify_mesh_symmetry(mesh, sym, Some(s.as_ref())));
        match checked {
            Ok(rep) => {
                r.symmetry = Some(SymmetryEntry {
                    kind: symmetry_name(sym),
                    tolerance: MESH_SYMMETRY_TOL,
                    pass: rep.deviation <= MESH_SYMMETRY_TOL,
                    report: rep,
                })
            }
            Err(e) => r.error = Some(format!("symmetry check: {e}")),
        }
    }
    r
}

fn symmetry_name(s: &SymmetrySpec) -> String {
    match s {
        SymmetrySpec::Reflective => "reflective".into(),
        SymmetrySpec::Rotational { n } => format!("rotational-{n}"),
    }
}

/// `catenoid_h1e-1`.
pub fn mesh_stem(name: &str, h: f64) -> String {
    let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{clean}_h{h:e}")
}

fn write_mesh(dir: &Path, stem: &str, mesh: &SurfaceMesh, ply: bool) -> Result<String> {
    fs::create_dir_all(dir)?;
    let obj = dir.join(format!("{stem}.obj"));
    mesh_io::write_obj(mesh, std::io::BufWriter::new(fs::File::create(&obj)?))?;
    if ply {
        mesh_io::write_ply(mesh, std::io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.ply")))?))?;
    }
    Ok(obj.display().to_string())
}

/// Generates every member, writes mesh files in member order and reports.
pub fn cmd_mesh(job: &Job) -> Result<RunReport> {
    let mut report = RunReport::new("mesh");
    report.source = Some(source_json(job));
    for (m, res) in job.members.iter().zip(build_meshes(job)) {
        let entry = match res {
            Ok(mesh) => {
                let mut r = mesh_report(job, &mesh);
                if let Some(dir) = &job.out {
                    r.output = Some(write_mesh(dir, &mesh_stem(&job.name, m.h), &mesh, job.ply)?);
                }
                r
            }
            Err(e) => MeshReport::failed(m.h, m.grid, &e),
        };
        report.meshes.push(entry);
    }
    Ok(report)
}

fn point_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn check_samples(job: &Job) -> Vec<Complex64> {
    let g = job.members.first().map_or(GridSpec::square(1.0, 41), |m| m.grid);
    let r = g.x[0].abs().min(g.x[1].abs()).min(g.y[0].abs()).min(g.y[1].abs()).max(0.1);
    circle_samples(&[0.2 * r, 0.45 * r, 0.7 * r, 0.95 * r], 16)
}

/// Prints the other form of the data.
pub fn cmd_convert(job: &Job, round_trip: bool) -> Result<RunReport> {
    let mut report = RunReport::new("convert");
    report.source = Some(source_json(job));
    let z0 = job.spec.z0;
    let h = job.members.first().map_or(1.0, |m| m.h);
    match &job.spec.form {
        PotentialForm::Classical { mu, nu } => {
            let w = WeierstrassData::new(mu.clone(), nu.clone(), z0);
            let p = convert::minimal_to_potential(&w, h)?;
            let PotentialForm::Normalized { a, q } = &p.form else {
                unreachable!("conversion yields normalized data")
            };
            let (upper, lower) = convert::normalized_entries(a, q, h);
            let e0 = p.e0.unwrap_or_else(crate::loops::id2);
            let e0_json: Vec<_> = e0.iter().map(|&v| point_json(v)).collect();
            report.extra = Some(json!({
                "h": h, "a": a.to_string(), "q": q.to_string(),
                "upper": upper.to_string(), "lower": lower.to_string(),
                "e0_column_major": e0_json,
            }));
            if round_trip {
                let back = convert::round_trip(&w)?;
                let samples = check_samples(job);
                let mut err: f64 = 0.0;
                for z in samples {
                    let (m0, n0) = (w.mu.eval_raw(z), w.nu.eval_raw(z));
                    let (m1, n1) = (back.mu.eval_raw(z), back.nu.eval_raw(z));
                    if [m0, n0, m1, n1].iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                        err = err.max((m1 - m0).norm()).max((n1 - n0).norm());
                    }
                }
                report.data_checks.push(DataCheck {
                    kind: "round-trip".into(),
                    residual: err,
                    tolerance: job.tol,
                    pass: err <= job.tol,
                });
            }
        }
        PotentialForm::Normalized { a, q } => {
            let w = convert::potential_to_minimal(a, q, z0)?;
            report.extra = Some(json!({ "mu": w.mu.to_string(), "nu": w.nu.to_string() }));
        }
    }
    Ok(report)
}

/// Order report, data-level symmetry and, for explicit h-lists, mesh checks.
pub fn cmd_check(job: &Job) -> Result<RunReport> {
    let mut report = RunReport::new("check");
    report.source = Some(source_json(job));
    let data = job.spec.resolve()?;
    let orders = validate_orders(&data.a, &data.q, &job.orders)?;
    let bad = orders
        .entries
        .iter()
        .filter(|e| matches!(e.tag, convert::OrderTag::Invalid | convert::OrderTag::Indeterminate))
        .count();
    report.data_checks.push(DataCheck {
        kind: "orders".into(),
        residual: bad as f64,
        tolerance: 0.0,
        pass: bad == 0,
    });
    report.orders = Some(orders);
    if let Some(sym) = &job.symmetry {
        let samples = check_samples(job);
        let residual = match sym {
            SymmetrySpec::Reflective => symmetry::check_reflective_data(&job.spec.form, &samples),
            SymmetrySpec::Rotational { n } => symmetry::check_rotational_data(&job.spec.form, *n, &samples)?,
        };
        report.data_checks.push(DataCheck {
            kind: format!("{}-data", symmetry_name(sym)),
            residual,
            tolerance: job.tol,
            pass: residual <= job.tol,
        });
    }
    if job.explicit_h {
        for (m, res) in job.members.iter().zip(build_meshes(job)) {
            report.meshes.push(match res {
                Ok(mesh) => mesh_report(job, &mesh),
                Err(e) => MeshReport::failed(m.h, m.grid, &e),
            });
        }
    }
    Ok(report)
}

/// Gauge transformation of the data, or the h-independent dressing test
/// with its Wu-recursion and cross-pipeline checks.
pub fn cmd_dress(job: &Job, args: &DressArgs) -> Result<RunReport> {
    let mut report = RunReport::new("dress");
    report.source = Some(source_json(job));
    let data = job.spec.resolve()?;
    let z0 = job.spec.z0;
    match (&args.rho, &args.atilde) {
        (Some(rho), None) => {
            let (a2, q2) = dressing::gauge_potential(&data.a, &data.q, &parse(rho)?);
            report.extra = Some(json!({ "a": a2.to_string(), "q": q2.to_string() }));
            if job.explicit_h {
                let mut dressed = job.clone();
                dressed.spec = PotentialSpec {
                    form: PotentialForm::Normalized { a: a2, q: q2 },
                    e0: Some(data.e0),
                    ..job.spec.clone()
                };
                report.meshes = cmd_mesh(&dressed)?.meshes;
            }
        }
        (None, Some(at)) => {
            let at = parse(at)?;
            let samples: Vec<Complex64> = circle_samples(&[0.1, 0.3], 8).into_iter().map(|z| z + z0).collect();
            let hi = dressing::h_independent_dressing(&data.a, &at, &data.q, z0, &samples)?;
            report.data_checks.push(DataCheck {
                kind: "b1-constant".into(),
                residual: hi.max_db1,
                tolerance: dressing::B1_TOL,
                pass: hi.pass,
            });
            let mut members = Vec::new();
            for m in &job.members {
                let coeffs = dressing::wu_recursion(&data.a, &at, &data.q, z0, m.h, args.order, &BInit::Regular)?;
                let higher = coeffs.max_higher(&samples);
                let mut relation: f64 = 0.0;
                for &z in &samples {
                    relation = relation.max(dressing::relation_residual(&coeffs, &data.a, &at, &data.q, z)?);
                }
                let mut cross = None;
                if let (Some(hp), true) = (&hi.h_plus, job.explicit_h) {
                    let grid = DomainGrid::new(m.grid)?;
                    let spec = job.spec.with_h(m.h);
                    let dressed = frames::dressed_surface(&spec, hp, &grid, &job.opts)?;
                    let target = PotentialSpec {
                        form: PotentialForm::Normalized { a: at.clone(), q: data.q.clone() },
                        e0: Some(data.e0),
                        ..spec
                    };
                    let direct = frames::surface(&target, &grid, &job.opts)?;
                    let dev = dressed
                        .valid_indices()
                        .filter(|&k| direct.grid.mask[k])
                        .map(|k| (dressed.positions[k] - direct.positions[k]).norm())
                        .fold(0.0, f64::max);
                    cross = Some(dev);
                }
                members.push(json!({ "h": m.h, "max_higher": higher, "relation_residual": relation, "cross_pipeline_deviation": cross }));
            }
            report.extra = Some(json!({ "h_independent": dressing::HIndependentSummary::from(&hi), "members": members }));
        }
        _ => return Err(Error::Config("dress needs exactly one of --rho and --atilde".into())),
    }
    Ok(report)
}

fn emit(report: &RunReport, path: Option<&Path>) -> Result<()> {
    let text = report.to_json();
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            // a closed pipe (`| head`) is not an error worth reporting
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

/// Status 0 on success, 1 when a check fails, 2 on configuration errors,
/// 3 on numerical failure.
pub fn run(cli: Cli) -> i32 {
    let result = (|| -> Result<i32> {
        let (report, dest, is_check) = match &cli.command {
            Command::Mesh(a) => (cmd_mesh(&Job::from_args(a, true)?)?, a.report.clone(), false),
            Command::Gallery(g) => {
                let mut a = g.job.clone();
                a.gallery = Some(g.name.clone());
                let mut r = cmd_mesh(&Job::from_args(&a, true)?)?;
                r.command = "gallery".into();
                (r, a.report.clone(), false)
            }
            Command::Convert(c) => (cmd_convert(&Job::from_args(&c.job, false)?, c.round_trip)?, c.job.report.clone(), true),
            Command::Check(a) => (cmd_check(&Job::from_args(a, false)?)?, a.report.clone(), true),
            Command::Dress(d) => {
                let need_h = d.atilde.is_some();
                (cmd_dress(&Job::from_args(&d.job, need_h)?, d)?, d.job.report.clone(), true)
            }
        };
        emit(&report, dest.as_deref())?;
        let numeric = report.meshes.iter().any(|m| m.error.is_some());
        Ok(if numeric {
            3
        } else if report.failed() && is_check {
            1
        } else if report.failed() {
            3
        } else {
            0
        })
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
