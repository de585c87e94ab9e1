//! `shearlet` — construct, certify, transform and experiment with shearlet frames.
//!
//! Exit codes: 0 ok, 2 bad parameters, 3 frame not certified, 4 malformed input, 5 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use shearlet_core::cartoon::{rasterize_cartoon, surface_cartoon_3d, CartoonSpec};
use shearlet_core::filters::{filters_csv, spectral_factorize_mode, CompactProfile, ParamMode, DEFAULT_J_TRUNC};
use shearlet_core::framebounds::{bisect_c, estimate_bounds, FreqGrid, DEFAULT_M_RADIUS};
use shearlet_core::io::{encode_pgm, fmt_f64, read_f64r, write_f64r, KeyValues};
use shearlet_core::lab;
use shearlet_core::systems::SystemSpec;
use shearlet_core::transform::{
    invert_frame, n_largest, CoefficientSet, Raster, SolveOptions, TransformPlan,
};
use shearlet_core::Error;

const EXIT_PARAMS: u8 = 2;
const EXIT_NOT_CERTIFIED: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_SOLVER: u8 = 5;

#[derive(Parser)]
#[command(name = "shearlet", version, about = "Compactly supported shearlet frames in 2D and 3D")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone, Default)]
struct Global {
    /// Key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SHEARLAB_THREADS")]
    threads: Option<usize>,
    /// Relative tolerance of the iterative frame inversion.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

/// System flags; anything left unset falls back to the config file, then to the defaults.
#[derive(Args, Clone, Default)]
struct SystemArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// compact | classical | zero
    #[arg(long = "generator", alias = "system")]
    generator: Option<String>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    relaxed: Option<bool>,
    #[arg(long = "J")]
    j_max: Option<u32>,
    /// Sets c1 = c2.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factorize the low-pass filter and sample the scaling and shearlet spectra.
    Construct {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false")]
        relaxed: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Samples per axis of the spectra on [-2, 2].
        #[arg(long, default_value_t = 257)]
        samples: usize,
    },
    /// Estimate frame bounds; exit 3 when the sandwich does not certify a frame.
    Certify {
        #[command(flatten)]
        system: SystemArgs,
        /// Search c = 2^-t for the largest certified sampling constant.
        #[arg(long)]
        bisect: bool,
        #[arg(long, default_value_t = 6)]
        t_max: u32,
        #[arg(long, default_value_t = 0.25)]
        t_tol: f64,
        #[arg(long, default_value_t = 26)]
        per_octave: usize,
        #[arg(long, default_value_t = DEFAULT_M_RADIUS)]
        m_radius: i64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Shearlet coefficients of an F64R raster.
    Transform {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raster from coefficients written by `transform` (optionally only the N largest).
    Reconstruct {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        nterm: Option<usize>,
        /// Report the relative L² error against this raster.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Seeded cartoon-like phantom.
    Cartoon {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 10.0)]
        nu: f64,
        #[arg(long)]
        size: Option<usize>,
        /// Boundary pieces (3D only).
        #[arg(long, default_value_t = 1)]
        pieces: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// N-term error curves of a seeded cartoon: shearlet frame vs. separable wavelet basis.
    Rate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        nu: f64,
        #[arg(long, default_value_t = 1)]
        pieces: usize,
        /// log2 of the smallest and largest N.
        #[arg(long)]
        lo: Option<u32>,
        #[arg(long)]
        hi: Option<u32>,
        #[arg(long, default_value_t = 2)]
        per_octave: u32,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Hard-threshold denoising of a noisy cartoon (or of --input).
    Denoise {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 10.0)]
        nu: f64,
        #[arg(long, default_value_t = 20.0)]
        psnr_in: f64,
        #[arg(long, default_value_t = lab::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    NotCertified(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Constraint(_) | Error::Factorization { .. } | Error::Shape(_) | Error::Consistency(_) | Error::Fit(_) => {
            EXIT_PARAMS
        }
        Error::Format(_) | Error::Io(_) => EXIT_FORMAT,
        Error::Solver { .. } => EXIT_SOLVER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotCertified(msg)) => {
            eprintln!("not certified: {msg}");
            ExitCode::from(EXIT_NOT_CERTIFIED)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Flags, then config file, then defaults.
struct Settings {
    config: KeyValues,
    tol: f64,
    seed: u64,
}

impl Settings {
    fn load(g: &Global) -> Result<Self, Failure> {
        let config = match &g.config {
            Some(p) => fs::read_to_string(p)?.parse::<KeyValues>()?,
            None => KeyValues::default(),
        };
        let tol = pick(g.tol, &config, "tol", lab::CURVE_TOL)?;
        let seed = pick(g.seed, &config, "seed", 1)?;
        let threads = pick(g.threads, &config, "threads", 0)?;
        if threads > 0 {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
        Ok(Self { config, tol, seed })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Failure> {
        pick(flag, &self.config, key, default)
    }

    fn solve_options(&self, max_iter: usize) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter, precondition: true }
    }

    /// System from config entries overridden by flags; experiment defaults fill the rest.
    fn system(&self, a: &SystemArgs, default_dim: usize, side: usize) -> Result<SystemSpec, Failure> {
        let mut kv = KeyValues::default();
        let dim = self.get(a.dim, "dim", default_dim)?;
        kv.set("dim", dim);
        kv.set("J_max", lab::experiment_j_max(dim, side));
        kv.set("c1", 1.0);
        kv.merge(&self.config);
        let mut flags = KeyValues::default();
        flags.set("dim", dim);
        if let Some(g) = &a.generator {
            flags.set("generator", g);
        }
        if let Some(k) = a.k {
            flags.set("K", k);
        }
        if let Some(l) = a.l {
            flags.set("L", l);
        }
        if let Some(r) = a.relaxed {
            flags.set("relaxed", r);
        }
        if let Some(j) = a.j_max {
            flags.set("J_max", j);
        }
        if let Some(c) = a.c {
            flags.set("c1", c);
            flags.set("c2", c);
        }
        if let Some(c) = a.c1 {
            flags.set("c1", c);
        }
        if let Some(c) = a.c2 {
            flags.set("c2", c);
        }
        kv.merge(&flags);
        Ok(SystemSpec::from_config(&kv)?)
    }
}

fn pick<T: FromStr>(flag: Option<T>, config: &KeyValues, key: &str, default: T) -> Result<T, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(config.get_parsed(key)?.unwrap_or(default))
}

fn run(cli: Cli) -> CmdResult {
    let s = Settings::load(&cli.global)?;
    match cli.cmd {
        Cmd::Construct { k, l, relaxed, out, samples } => construct(k, l, relaxed, &out, samples),
        Cmd::Certify { system, bisect, t_max, t_tol, per_octave, m_radius, out } => {
            let spec = s.system(&system, 2, 0)?;
            let grid = FreqGrid { per_octave, ..FreqGrid::default() };
            certify(&spec, bisect, t_max, t_tol, &grid, m_radius, &out)
        }
        Cmd::Transform { system, input, out } => transform(&s, &system, &input, &out),
        Cmd::Reconstruct { coeffs, out, nterm, reference, max_iter } => {
            reconstruct(&s, &coeffs, &out, nterm, reference.as_deref(), max_iter)
        }
        Cmd::Cartoon { dim, nu, size, pieces, out } => {
            let side = size.unwrap_or(if dim == 3 { 64 } else { 256 });
            cartoon(dim, nu, s.seed, side, pieces, &out)
        }
        Cmd::Rate { system, size, nu, pieces, lo, hi, per_octave, out } => {
            rate(&s, &system, size, nu, pieces, lo, hi, per_octave, &out)
        }
        Cmd::Denoise { system, input, size, nu, psnr_in, kappa, out } => {
            denoise(&s, &system, input.as_deref(), size, nu, psnr_in, kappa, &out)
        }
    }
}

fn create_dir(out: &Path) -> CmdResult {
    fs::create_dir_all(out)?;
    Ok(())
}

fn construct(k: usize, l: usize, relaxed: bool, out: &Path, samples: usize) -> CmdResult {
    let mode = if relaxed { ParamMode::Relaxed } else { ParamMode::Strict };
    let pair = spectral_factorize_mode(k, l, mode)?;
    if samples < 2 {
        return Err(Error::Constraint("need at least 2 spectrum samples".into()).into());
    }
    create_dir(out)?;
    fs::write(out.join("filters.csv"), filters_csv(&pair))?;
    let profile = CompactProfile::build(pair.clone(), DEFAULT_J_TRUNC);
    let xs: Vec<f64> = (0..samples).map(|i| -2.0 + 4.0 * i as f64 / (samples - 1) as f64).collect();
    // rows: ξ, Re φ̂, Im φ̂, |ψ̂1|
    let mut rows = Vec::with_capacity(4 * samples);
    rows.extend(&xs);
    let phi: Vec<_> = xs.iter().map(|&x| profile.phi(x)).collect();
    rows.extend(phi.iter().map(|z| z.re));
    rows.extend(phi.iter().map(|z| z.im));
    rows.extend(xs.iter().map(|&x| profile.wavelet_abs(x)));
    write_f64r(out.join("spectra_1d.f64r"), &[4, samples], &rows)?;
    // |ψ̂| of the 2D generator on [-2, 2]²
    let spec = SystemSpec::compact(2, k, l, mode, 0, (1.0, 1.0))?;
    let g = spec.shearlet(0);
    let mut grid = Vec::with_capacity(samples * samples);
    for &y in &xs {
        for &x in &xs {
            grid.push(g.spectrum(&[x, y]).norm());
        }
    }
    write_f64r(out.join("shearlet_2d.f64r"), &[samples, samples], &grid)?;
    println!("taps {}", pair.h0.len());
    println!("dc_gain {}", fmt_f64(pair.h0.iter().sum()));
    println!("residual {}", fmt_f64(pair.residual));
    Ok(())
}

fn certify(
    spec: &SystemSpec,
    bisect: bool,
    t_max: u32,
    t_tol: f64,
    grid: &FreqGrid,
    m_radius: i64,
    out: &Path,
) -> CmdResult {
    create_dir(out)?;
    let report = if bisect {
        match bisect_c(spec, grid, m_radius, t_max, t_tol)? {
            Some(r) => {
                println!("largest certified c {} {}", fmt_f64(r.c.0), fmt_f64(r.c.1));
                r
            }
            None => return Err(Failure::NotCertified(format!("no c = 2^-t with t ≤ {t_max} certifies"))),
        }
    } else {
        estimate_bounds(spec, grid, m_radius)?
    };
    fs::write(out.join("report.csv"), report.to_csv())?;
    fs::write(out.join("report.txt"), report.to_text())?;
    print!("{}", report.to_text());
    if report.certified {
        Ok(())
    } else {
        Err(Failure::NotCertified(format!("A_lower = {}", fmt_f64(report.a_lower))))
    }
}

fn sibling(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_raster(p: &Path) -> Result<Raster, Failure> {
    let (extents, data) = read_f64r(p)?;
    Ok(Raster::new(extents, data)?)
}

fn side_of(extents: &[usize]) -> usize {
    extents.iter().copied().min().unwrap_or(0)
}

/// Writes the coefficient vector, the band index (`.index`) and the system (`.cfg`).
fn transform(s: &Settings, a: &SystemArgs, input: &Path, out: &Path) -> CmdResult {
    let f = read_raster(input)?;
    let spec = s.system(a, f.extents.len(), side_of(&f.extents))?;
    let plan = TransformPlan::new(&spec, &f.extents)?;
    let c = plan.analyze(&f)?;
    let values = c.to_dense();
    write_f64r(out, &[values.len()], &values)?;
    fs::write(sibling(out, ".index"), plan.layout.sidecar())?;
    let mut cfg = spec.to_config();
    cfg.push_str(&format!(
        "extents={}\n",
        f.extents.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("x")
    ));
    fs::write(sibling(out, ".cfg"), cfg)?;
    println!("coefficients {}", values.len());
    println!("energy {}", fmt_f64(c.energy()));
    Ok(())
}

fn reconstruct(
    s: &Settings,
    coeffs: &Path,
    out: &Path,
    nterm: Option<usize>,
    reference: Option<&Path>,
    max_iter: usize,
) -> CmdResult {
    let cfg_path = sibling(coeffs, ".cfg");
    let kv: KeyValues = fs::read_to_string(&cfg_path)?.parse()?;
    let extents: Vec<usize> = kv
        .get("extents")
        .ok_or_else(|| Error::Format(format!("{}: missing extents", cfg_path.display())))?
        .split('x')
        .map(|v| v.trim().parse().map_err(|_| Error::Format(format!("bad extents '{v}'"))))
        .collect::<Result<_, _>>()?;
    let spec = SystemSpec::from_config(&kv)?;
    let plan = TransformPlan::new(&spec, &extents)?;
    if let Ok(index) = fs::read_to_string(sibling(coeffs, ".index")) {
        if index.lines().next() != plan.layout.sidecar().lines().next() {
            return Err(Error::Consistency("coefficient index does not match the system".into()).into());
        }
    }
    let (shape, values) = read_f64r(coeffs)?;
    if shape.len() != 1 {
        return Err(Error::Format(format!("coefficient file must be 1-D, got extents {shape:?}")).into());
    }
    let mut c = CoefficientSet::dense(plan.layout.clone(), values)?;
    if let Some(n) = nterm {
        c = n_largest(&c, n);
    }
    let y = plan.synthesize(&c)?;
    let sol = invert_frame(&plan, &y, &s.solve_options(max_iter), None)?;
    write_f64r(out, &sol.x.extents, &sol.x.data)?;
    println!("iterations {}", sol.iterations);
    println!("residual {}", fmt_f64(*sol.history.last().unwrap_or(&0.0)));
    if let Some(r) = reference {
        let f = read_raster(r)?;
        if f.extents != sol.x.extents {
            return Err(Error::Shape(format!("reference extents {:?} vs {:?}", f.extents, sol.x.extents)).into());
        }
        let diff: f64 = f.data.iter().zip(&sol.x.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        println!("relative_error {}", fmt_f64(diff / f.norm()));
    }
    Ok(())
}

fn make_cartoon(dim: usize, nu: f64, seed: u64, pieces: usize) -> Result<CartoonSpec, Failure> {
    let spec = match dim {
        2 => CartoonSpec::random_2d(nu, seed),
        3 => surface_cartoon_3d(nu, pieces, seed)?,
        _ => return Err(Error::Constraint(format!("dimension must be 2 or 3, got {dim}")).into()),
    };
    spec.validate()?;
    Ok(spec)
}

/// `<out>.f64r`, `<out>.cfg` and, in 2D, `<out>.pgm`.
fn cartoon(dim: usize, nu: f64, seed: u64, side: usize, pieces: usize, out: &Path) -> CmdResult {
    let spec = make_cartoon(dim, nu, seed, pieces)?;
    let f = rasterize_cartoon(&spec, &vec![side; dim])?;
    write_f64r(sibling(out, ".f64r"), &f.extents, &f.data)?;
    fs::write(sibling(out, ".cfg"), spec.to_config())?;
    if dim == 2 {
        fs::write(sibling(out, ".pgm"), encode_pgm(&f.extents, &f.data)?)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rate(
    s: &Settings,
    a: &SystemArgs,
    size: Option<usize>,
    nu: f64,
    pieces: usize,
    lo: Option<u32>,
    hi: Option<u32>,
    per_octave: u32,
    out: &Path,
) -> CmdResult {
    let dim = s.get(a.dim, "dim", 2)?;
    let side = s.get(size, "size", if dim == 3 { 64 } else { 512 })?;
    let (dlo, dhi) = lab::experiment_window(dim);
    let (lo, hi) = (lo.unwrap_or(dlo), hi.unwrap_or(dhi));
    let spec = s.system(a, dim, side)?;
    let cs = make_cartoon(dim, nu, s.seed, pieces)?;
    let f = rasterize_cartoon(&cs, &vec![side; dim])?;
    let plan = TransformPlan::new(&spec, &f.extents)?;
    let ns = lab::dyadic_ns(lo, hi, per_octave);
    let window = (1usize << lo, 1usize << hi);
    let shearlet = lab::nterm_curve(&plan, &f, &ns, window)?;
    let wavelet = lab::wavelet_baseline_curve(&f, &ns, window)?;
    create_dir(out)?;
    fs::write(out.join("shearlet.csv"), shearlet.to_csv())?;
    fs::write(out.join("wavelet.csv"), wavelet.to_csv())?;
    fs::write(out.join("shearlet.gp"), shearlet.gnuplot("shearlet.csv"))?;
    fs::write(out.join("wavelet.gp"), wavelet.gnuplot("wavelet.csv"))?;
    fs::write(out.join("system.cfg"), spec.to_config())?;
    fs::write(out.join("cartoon.cfg"), cs.to_config())?;
    println!("shearlet_slope {}", fmt_f64(shearlet.slope));
    println!("wavelet_slope {}", fmt_f64(wavelet.slope));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn denoise(
    s: &Settings,
    a: &SystemArgs,
    input: Option<&Path>,
    size: usize,
    nu: f64,
    psnr_in: f64,
    kappa: f64,
    out: &Path,
) -> CmdResult {
    let clean = match input {
        Some(p) => read_raster(p)?,
        None => rasterize_cartoon(&make_cartoon(2, nu, s.seed, 1)?, &[size, size])?,
    };
    let peak = lab::peak_of(&clean);
    let sigma = lab::sigma_for_psnr(peak, psnr_in);
    let noisy = lab::add_noise(&clean, sigma, s.seed.wrapping_add(1));
    let spec = s.system(a, clean.extents.len(), side_of(&clean.extents))?;
    let plan = TransformPlan::new(&spec, &clean.extents)?;
    let res = lab::denoise(&plan, &noisy, sigma, kappa, &s.solve_options(500))?;
    create_dir(out)?;
    for (name, r) in [("clean", &clean), ("noisy", &noisy), ("denoised", &res.denoised)] {
        write_f64r(out.join(format!("{name}.f64r")), &r.extents, &r.data)?;
        if r.extents.len() == 2 {
            fs::write(out.join(format!("{name}.pgm")), encode_pgm(&r.extents, &r.data)?)?;
        }
    }
    let before = lab::psnr(&clean, &noisy, peak);
    let after = lab::psnr(&clean, &res.denoised, peak);
    let report = format!(
        "# denoising by hard thresholding\nquantity,value\nsigma,{}\nthreshold,{}\nkept,{}\npsnr_noisy,{}\npsnr_denoised,{}\ngain_db,{}\n",
        fmt_f64(sigma),
        fmt_f64(res.threshold),
        res.kept,
        fmt_f64(before),
        fmt_f64(after),
        fmt_f64(after - before)
    );
    fs::write(out.join("denoise.csv"), &report)?;
    println!("psnr_noisy {}", fmt_f64(before));
    println!("psnr_denoised {}", fmt_f64(after));
    Ok(())
}
