//! `iap`: check, fit and generate near-isometry samples, and run the
//! numerical lemma checks.

mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iap_core::directions::{estimate_cluster_directions, mu1, tau_phi_estimate, DirectionEstimatorParams, TauGridParams};
use iap_core::fitter::{fit_isometry, fit_sample_oracle, BaseChoice, FitParams, OracleParams, TranslationMode};
use iap_core::generators::{aux_map_g, gen_ar, gen_cone, ConeSpec, AuxMapParams, FailureExperiment};
use iap_core::geom::{random_orthogonal, random_unit, Vector, TOL};
use iap_core::io::{CertificateFile, Provenance, SampleFile, SampleMeta};
use iap_core::nearmetric::{
    check_inner_product_bound, check_projection_bound, epsilon_estimate, CorrespondenceSample, DefectOptions,
};
use iap_core::{fitter, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

/// Exit codes shared by the subcommands.
pub(crate) mod exit {
    pub const OK: u8 = 0;
    pub const FAILED: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const MU_ZERO: u8 = 3;
}

/// Error carrying the exit code it should produce.
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotSpanning(_) => exit::MU_ZERO,
            _ => exit::INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

pub(crate) type CmdResult = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "iap", version, about = "Near-isometry checks, isometry fits with certificates, and lemma verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the defect of a sample and check the inner-product and projection bounds.
    Check(CheckArgs),
    /// Fit an isometry to a sample and write a certificate.
    Fit(FitArgs),
    /// Estimate the cluster directions and μ of the sample's source points.
    Mu(MuArgs),
    /// Generate a sample file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run the randomized lemma checks.
    Verify(verify::VerifyArgs),
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    /// Keep points with |x| ≥ rho·max|x| when estimating directions.
    #[arg(long)]
    rho: Option<f64>,
    /// Directions closer than this angle (radians) are merged.
    #[arg(long)]
    merge_angle: Option<f64>,
}

impl EstimatorArgs {
    fn params(&self) -> Result<DirectionEstimatorParams, Failure> {
        let mut p = DirectionEstimatorParams::default();
        if let Some(r) = self.rho {
            p.cutoff_fraction = r;
        }
        if let Some(a) = self.merge_angle {
            p.merge_angle = a;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Sample file (JSON, or CSV with 2n columns).
    input: PathBuf,
    /// Declared defect; the measured one is used when absent.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Translation {
    Seb,
    Mean,
}

#[derive(Args)]
struct FitArgs {
    /// Sample file (JSON, or CSV with 2n columns).
    input: PathBuf,
    /// Declared defect; the measured one is used when absent.
    #[arg(long)]
    eps: Option<f64>,
    /// Use this constant in the bound instead of 1/μ.
    #[arg(long)]
    c_prime: Option<f64>,
    /// Claimed μ of the domain; overrides the estimate.
    #[arg(long)]
    mu: Option<f64>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extend the sample by nearest-neighbour lookup and read the linear part off at large scales.
    #[arg(long)]
    oracle_mode: bool,
    /// Certificate path; printed to stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Base pair: an index, or `best` for the pair with the smallest distortion.
    #[arg(long, default_value = "0")]
    base: String,
    #[arg(long, value_enum, default_value_t = Translation::Seb)]
    translation: Translation,
    /// Points averaged per direction image.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Fit rank-deficient samples in their span (the certificate then fails).
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Args)]
struct MuArgs {
    input: PathBuf,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Also estimate τ and φ.
    #[arg(long)]
    tau: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Apply a random rotation.
    #[arg(long)]
    rotate: bool,
    /// Add noise of norm at most this, uniform in the ball.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args, Clone)]
struct OutArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Points of the cone {x : x·axis ≥ cos α |x|} around the last basis vector, paired with their images.
    Cone {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        alpha: f64,
        /// Also include the opposite cone.
        #[arg(long)]
        double: bool,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        rmin: f64,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Points of the half-space x·e₁ ≥ 0 plus the origin, paired with their images.
    Halfspace {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Wedge points paired with their images under the shear map.
    Ar {
        #[arg(long = "M", default_value_t = 4.0)]
        m: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 0.01)]
        rmin: f64,
        /// Largest |x|; defaults to 20M.
        #[arg(long)]
        rmax: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Mirrored wedge, origin and small-ball points under the map that is the shear on the wedge and 0 on the ball.
    Badmap {
        #[arg(long = "M", default_value_t = 100.0)]
        m: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 300)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        ball_count: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// `IAP_TOL` overrides the default comparison tolerance.
pub(crate) fn tolerance() -> Result<f64, Failure> {
    match std::env::var("IAP_TOL") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 && t.is_finite() => Ok(t),
            _ => Err(Failure {
                code: exit::INPUT,
                message: format!("IAP_TOL must be a non-negative number, got {s:?}"),
            }),
        },
        Err(_) => Ok(TOL),
    }
}

fn load(path: &Path) -> Result<(SampleFile, Vec<u8>), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure {
        code: exit::INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    let file = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        SampleFile::from_csv(bytes.as_slice())
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| Failure {
            code: exit::INPUT,
            message: format!("{}: {e}", path.display()),
        })?;
        SampleFile::from_json(text)
    }
    .map_err(|e| Failure {
        code: exit::INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok((file, bytes))
}

fn write_output(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure {
            code: exit::INPUT,
            message: format!("{}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_check(args: &CheckArgs) -> CmdResult {
    let (file, _) = load(&args.input)?;
    let sample = file.to_sample()?;
    let tol = tolerance()?;
    let defect = epsilon_estimate(
        &sample,
        &DefectOptions {
            seed: args.seed,
            ..DefectOptions::default()
        },
    )?;
    let declared = match args.eps {
        Some(e) if e >= 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidParameter(format!("ε must be ≥ 0, got {e}")).into()),
        None => defect.eps,
    };
    let normalized = sample.base_index().is_none();
    let based = if normalized {
        fitter::normalize_basepoint(&sample, 0)?
    } else {
        sample.clone()
    };
    let inner = check_inner_product_bound(&based, declared, tol)?;
    let proj = check_projection_bound(&based, declared, tol)?;
    let defect_ok = defect.eps <= declared + tol * (1.0 + declared);
    let clean = defect_ok && inner.passed() && proj.passed();

    if args.json {
        print!(
            "{}",
            pretty(&json!({
                "pairs": sample.len(),
                "dim": sample.n_src(),
                "eps_measured": defect.eps,
                "eps_subsampled": defect.subsampled,
                "eps_declared": declared,
                "normalized_at_pair_0": normalized,
                "defect_ok": defect_ok,
                "inner_product": {"checked": inner.checked, "violations": inner.violations.len(), "max_violation": inner.max_violation},
                "projection": {"checked": proj.checked, "violations": proj.violations.len(), "max_violation": proj.max_violation},
                "clean": clean,
            }))
        );
    } else {
        println!("pairs            {}", sample.len());
        println!("dimension        {}", sample.n_src());
        let note = if defect.subsampled { " (random pairs)" } else { "" };
        println!("eps measured     {}{note}", defect.eps);
        println!("eps declared     {declared}");
        if normalized {
            println!("base pair        none, pair 0 moved to the origin");
        }
        println!("defect           {}", if defect_ok { "within declared eps" } else { "EXCEEDS declared eps" });
        println!(
            "inner product    {} pairs checked, {} violations",
            inner.checked,
            inner.violations.len()
        );
        println!(
            "projection       {} pairs checked, {} violations",
            proj.checked,
            proj.violations.len()
        );
    }
    Ok(if clean { exit::OK } else { exit::FAILED })
}

fn parse_base(s: &str) -> Result<BaseChoice, Failure> {
    if s.eq_ignore_ascii_case("best") {
        return Ok(BaseChoice::BestDefect);
    }
    s.parse().map(BaseChoice::Index).map_err(|_| Failure {
        code: exit::INPUT,
        message: format!("--base must be an index or `best`, got {s:?}"),
    })
}

fn cmd_fit(args: &FitArgs) -> CmdResult {
    let (file, bytes) = load(&args.input)?;
    let sample = file.to_sample()?;
    let params = FitParams {
        base: parse_base(&args.base)?,
        estimator: args.estimator.params()?,
        k: args.k,
        known_mu: args.mu,
        c_prime: args.c_prime,
        eps: args.eps,
        translation: match args.translation {
            Translation::Seb => TranslationMode::SebCenter,
            Translation::Mean => TranslationMode::Mean,
        },
        certificate_abs_tol: tolerance()?,
        allow_partial_rank: args.allow_partial,
        defect: DefectOptions {
            seed: args.seed,
            ..DefectOptions::default()
        },
        ..FitParams::default()
    };
    let (t, cert) = if args.oracle_mode {
        let oracle = OracleParams {
            seed: args.seed,
            ..OracleParams::default()
        };
        let (t, cert, _) = fit_sample_oracle(&sample, &params, &oracle)?;
        (t, cert)
    } else {
        fit_isometry(&sample, &params)?
    };
    let passed = cert.passed;
    eprintln!(
        "residual {} bound {} (eps {}, mu {}): {}",
        cert.residual,
        cert.bound,
        cert.eps,
        cert.mu,
        if passed { "passed" } else { "failed" }
    );
    let provenance = Provenance {
        input_sha256: hex::encode(Sha256::digest(&bytes)),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: args.seed,
    };
    let out = CertificateFile::new(&t, cert, provenance);
    write_output(args.output.as_deref(), &out.to_json())?;
    Ok(if passed { exit::OK } else { exit::FAILED })
}

fn cmd_mu(args: &MuArgs) -> CmdResult {
    let (file, _) = load(&args.input)?;
    let sample = file.to_sample()?;
    let points: Vec<Vector> = sample.sources().cloned().collect();
    let est = args.estimator.params()?;
    let dirs = estimate_cluster_directions(&points, &est)?;
    let mu = mu1(&dirs);
    let tau = if args.tau {
        let grid = TauGridParams {
            seed: args.seed,
            ..TauGridParams::default()
        };
        Some(tau_phi_estimate(&points, &grid)?)
    } else {
        None
    };
    if args.json {
        let mut report = json!({
            "points": points.len(),
            "dim": dirs.dim(),
            "directions": dirs.len(),
            "span_rank": dirs.span_rank(),
            "mu": mu,
        });
        if let Some(t) = &tau {
            report["tau"] = json!(t.tau);
            report["phi"] = json!(t.phi);
            report["mu_from_tau"] = json!((1.0 - t.tau * t.tau).max(0.0).sqrt());
        }
        print!("{}", pretty(&report));
    } else {
        println!("points       {}", points.len());
        println!("directions   {} spanning {} of {} dimensions", dirs.len(), dirs.span_rank(), dirs.dim());
        println!("mu           {mu}");
        if let Some(t) = &tau {
            println!("tau          {}", t.tau);
            println!("phi          {}", t.phi);
            println!("sqrt(1-tau²) {}", (1.0 - t.tau * t.tau).max(0.0).sqrt());
        }
    }
    Ok(exit::OK)
}

/// `R x + η` with `R` random orthogonal (or identity) and `|η| ≤ noise`.
fn apply_map(points: &[Vector], map: &MapArgs, seed: u64) -> Result<CorrespondenceSample, Failure> {
    if !(map.noise >= 0.0 && map.noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be ≥ 0, got {}", map.noise)).into());
    }
    let n = points.first().map_or(0, |p| p.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ee_d0f_4a9);
    let rot = if map.rotate {
        random_orthogonal(n, &mut rng)
    } else {
        iap_core::Matrix::identity(n, n)
    };
    let pairs = points
        .iter()
        .map(|x| {
            let mut y = &rot * x;
            if map.noise > 0.0 {
                let r = map.noise * rng.random::<f64>().powf(1.0 / n as f64);
                y += random_unit(n, &mut rng) * r;
            }
            (x.clone(), y)
        })
        .collect();
    Ok(CorrespondenceSample::new(pairs)?)
}

fn write_sample(sample: &CorrespondenceSample, generator: &str, params: serde_json::Value, out: &OutArgs) -> CmdResult {
    let meta = SampleMeta {
        seed: Some(out.seed),
        generator: Some(generator.to_string()),
        params,
    };
    let file = SampleFile::from_sample(sample, Some(meta))?;
    write_output(out.output.as_deref(), &file.to_json())?;
    Ok(exit::OK)
}

fn cmd_gen(kind: &GenKind) -> CmdResult {
    match kind {
        GenKind::Cone {
            dim,
            alpha,
            double,
            count,
            rmin,
            rmax,
            map,
            out,
        } => {
            if *dim == 0 {
                return Err(Error::InvalidParameter("dimension must be positive".into()).into());
            }
            let axis = iap_core::geom::basis_vector(*dim, dim - 1);
            let spec = ConeSpec::new(axis, *alpha, *double)?;
            let pts = gen_cone(&spec, *count, (*rmin, *rmax), out.seed)?;
            let sample = apply_map(&pts, map, out.seed)?;
            let params = json!({"dim": dim, "alpha": alpha, "double": double, "count": count, "rmin": rmin, "rmax": rmax, "rotate": map.rotate, "noise": map.noise});
            write_sample(&sample, "cone", params, out)
        }
        GenKind::Halfspace {
            dim,
            count,
            rmax,
            map,
            out,
        } => {
            if *dim == 0 {
                return Err(Error::InvalidParameter("dimension must be positive".into()).into());
            }
            let axis = iap_core::geom::basis_vector(*dim, 0);
            let spec = ConeSpec::new(axis, std::f64::consts::FRAC_PI_2, false)?;
            let mut pts = vec![Vector::zeros(*dim)];
            pts.extend(gen_cone(&spec, *count, (1e-2 * rmax, *rmax), out.seed)?);
            let sample = apply_map(&pts, map, out.seed)?;
            let params = json!({"dim": dim, "count": count, "rmax": rmax, "rotate": map.rotate, "noise": map.noise});
            write_sample(&sample, "halfspace", params, out)
        }
        GenKind::Ar {
            m,
            dim,
            count,
            rmin,
            rmax,
            out,
        } => {
            let p = AuxMapParams::new(*m, 1.0)?;
            let rmax = rmax.unwrap_or(20.0 * m);
            let mut pts = vec![Vector::zeros(*dim)];
            pts.extend(gen_ar(&p, *dim, *count, (*rmin, rmax), out.seed)?);
            let sample = CorrespondenceSample::from_map(&pts, |z| aux_map_g(&p, z))?;
            let params = json!({"M": m, "r": p.r, "dim": dim, "count": count, "rmin": rmin, "rmax": rmax});
            write_sample(&sample, "ar", params, out)
        }
        GenKind::Badmap {
            m,
            lambda,
            dim,
            count,
            ball_count,
            out,
        } => {
            let exp = FailureExperiment {
                m: *m,
                lambda: *lambda,
                n: *dim,
                wedge_count: *count,
                ball_count: *ball_count,
                seed: out.seed,
            };
            let sample = exp.sample()?;
            let p = exp.params()?;
            let params = json!({"M": m, "r": p.r, "q": p.q(), "lambda": lambda, "dim": dim, "count": count, "ball_count": ball_count});
            write_sample(&sample, "badmap", params, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Mu(a) => cmd_mu(a),
        Command::Gen { kind } => cmd_gen(kind),
        Command::Verify(a) => verify::cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
