//! `n2d3`: command-line front end for the disentanglement pipeline and the
//! contrastive-loss numerics.
//!
//! Exit codes: 0 on success, 1 for usage and I/O errors or rejected inputs,
//! 2 for numeric failures (transport non-convergence, corollary FAIL).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use n2d3::degnce::{
    adversarial_losses, ot_reweight, run_degnce, CostSign, DegNceConfig, FeatureGrid, LossReport,
    NegativeMass, SinkhornConfig, DEFAULT_EPSILON, DEFAULT_MAX_PER_REGION, DEFAULT_MAX_SWEEPS,
    DEFAULT_TAU, DEFAULT_TOL,
};
use n2d3::io::{self, Report, Tensor};
use n2d3::synth::{self, CorollaryConfig, RenderMode, SceneDescription, ScenePair};
use n2d3::{disentangle, invariant, DisentangleConfig, InvariantParams, Plane};

const THREADS_ENV: &str = "N2D3_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "n2d3",
    version,
    about = "Nighttime degradation disentanglement toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Photometric invariant N of an RGB image, written as a [height, width] tensor.
    Invariant {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = InvariantParams::default().sigma)]
        sigma: f64,
        #[arg(long, default_value_t = InvariantParams::default().eps)]
        eps: f64,
    },
    /// Four-way region partition of an RGB image.
    Disentangle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_labels: PathBuf,
        #[arg(long)]
        out_palette: PathBuf,
        #[arg(long, default_value_t = DisentangleConfig::default().sigma)]
        sigma: f64,
        #[arg(long, default_value_t = DisentangleConfig::default().eps)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DisentangleConfig::default().max_iters)]
        max_iters: usize,
        #[arg(long, default_value_t = DisentangleConfig::default().tol)]
        tol: f64,
        /// Also write the soft light-effect response as a [height, width] tensor.
        #[arg(long)]
        dump_soft: Option<PathBuf>,
    },
    /// Renders a scene file to an RGB image and its ground-truth label map.
    Synth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out_img: PathBuf,
        #[arg(long)]
        out_labels: PathBuf,
        /// Overrides the scene's `mode` key.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Supersampling factor of the pixel grid.
        #[arg(long, default_value_t = 1)]
        factor: usize,
    },
    /// Checks that the invariant ignores material edges but sees illumination edges.
    #[command(name = "verify-corollary1")]
    VerifyCorollary1 {
        /// Scene pair file; the bundled pair when omitted.
        #[arg(long)]
        scene_pair: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Grid refinement factor for the material-edge decrease check.
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = InvariantParams::default().sigma)]
        sigma: f64,
        #[arg(long, default_value_t = InvariantParams::default().eps)]
        eps: f64,
    },
    /// Entropic transport plan with zero diagonal for a square cost block.
    Reweight {
        #[arg(long)]
        block: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
        max_sweeps: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Sign::Minimize)]
        sign: Sign,
        /// Solve at the target epsilon directly instead of annealing down to it.
        #[arg(long)]
        no_anneal: bool,
    },
    /// Degradation-aware NCE over paired per-layer feature grids.
    Nce {
        /// Source feature tensors [grid_h, grid_w, dim], one per layer.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        src: Vec<PathBuf>,
        /// Generated feature tensors, paired with `--src` by position.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        gen: Vec<PathBuf>,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
        max_sweeps: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Sign::Minimize)]
        sign: Sign,
        #[arg(long, default_value_t = DEFAULT_MAX_PER_REGION)]
        max_per_region: usize,
        #[arg(long, value_enum, default_value_t = Mass::PlanRows)]
        negative_mass: Mass,
        /// Discriminator outputs on real images, any shape.
        #[arg(long, requires = "d_fake")]
        d_real: Option<PathBuf>,
        /// Discriminator outputs on generated images, any shape.
        #[arg(long, requires = "d_real")]
        d_fake: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Eq1,
    Eq3,
}

impl From<Mode> for RenderMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Eq1 => RenderMode::Eq1,
            Mode::Eq3 => RenderMode::Eq3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sign {
    Minimize,
    Maximize,
}

impl From<Sign> for CostSign {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Minimize => CostSign::Minimize,
            Sign::Maximize => CostSign::Maximize,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mass {
    PlanRows,
    Count,
}

impl From<Mass> for NegativeMass {
    fn from(m: Mass) -> Self {
        match m {
            Mass::PlanRows => NegativeMass::PlanRows,
            Mass::Count => NegativeMass::Count,
        }
    }
}

#[derive(Debug)]
enum Failure {
    /// Bad flags, unreadable or malformed files, rejected inputs.
    Input(String),
    /// The computation ran but did not meet its numeric contract.
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Numeric(_) => 2,
        }
    }
}

fn input(e: impl Display) -> Failure {
    Failure::Input(e.to_string())
}

fn input_at(path: &Path) -> impl Fn(io::FormatError) -> Failure + '_ {
    move |e| match e {
        io::FormatError::MissingFile(_) | io::FormatError::Io { .. } => input(e),
        _ => Failure::Input(format!("{}: {e}", path.display())),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Input(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(input)
}

fn plane_tensor(p: &Plane) -> Result<Tensor, Failure> {
    Tensor::from_f64(vec![p.height(), p.width()], p.data()).map_err(input)
}

fn cmd_invariant(input_path: &Path, out: &Path, sigma: f64, eps: f64) -> Result<(), Failure> {
    let img = io::read_image(input_path).map_err(input_at(input_path))?;
    let n = invariant(&img, InvariantParams { sigma, eps }).map_err(input)?;
    io::write_tensor(&plane_tensor(n.as_plane())?, out).map_err(input)
}

fn cmd_disentangle(
    input_path: &Path,
    out_labels: &Path,
    out_palette: &Path,
    cfg: DisentangleConfig,
    dump_soft: Option<&Path>,
) -> Result<(), Failure> {
    let img = io::read_image(input_path).map_err(input_at(input_path))?;
    let map = disentangle(&img, &cfg).map_err(input)?;
    io::write_disentanglement(&map, out_labels, out_palette).map_err(input)?;
    if let Some(path) = dump_soft {
        let soft = map
            .soft_response
            .as_ref()
            .ok_or_else(|| Failure::Input("no soft response was computed".into()))?;
        io::write_tensor(&plane_tensor(soft)?, path).map_err(input)?;
    }
    let counts = map.counts();
    println!(
        "darkness={} well_lit={} light_effects={} high_light={}",
        counts[0], counts[1], counts[2], counts[3]
    );
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_synth(
    scene: &Path,
    out_img: &Path,
    out_labels: &Path,
    mode: Option<RenderMode>,
    factor: usize,
) -> Result<(), Failure> {
    let desc = SceneDescription::parse(&read_text(scene)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", scene.display())))?;
    let (img, spec) = synth::render_scene(&desc, factor, mode).map_err(input)?;
    io::write_image(&img, out_img).map_err(input)?;
    let labels: Vec<u8> = spec.labels().iter().map(|l| *l as u8).collect();
    io::write_gray8(spec.width(), spec.height(), &labels, out_labels).map_err(input)
}

fn cmd_verify_corollary1(
    scene_pair: Option<&Path>,
    report: &Path,
    cfg: CorollaryConfig,
) -> Result<(), Failure> {
    let pair = match scene_pair {
        Some(path) => ScenePair::parse(&read_text(path)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        None => synth::corollary_pair(),
    };
    let outcome = synth::verify_corollary1(&pair, &cfg).map_err(input)?;
    outcome.to_report().write(report).map_err(input)?;
    let ratio = outcome
        .ratio
        .map_or("none".to_string(), |r| format!("{r:e}"));
    println!("status={} ratio={ratio}", outcome.status.name());
    if outcome.status.passed() {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "corollary check failed with ratio {ratio}"
        )))
    }
}

fn cmd_reweight(block: &Path, out: &Path, cfg: SinkhornConfig) -> Result<(), Failure> {
    let t = io::read_tensor(block).map_err(input_at(block))?;
    let k = match *t.dims() {
        [r, c] if r == c => r,
        _ => {
            return Err(Failure::Input(format!(
                "{}: block must be a square rank-2 tensor, got dims {:?}",
                block.display(),
                t.dims()
            )))
        }
    };
    let plan = ot_reweight(&t.to_f64(), k, &cfg).map_err(input)?;
    io::write_tensor(
        &Tensor::from_f64(vec![k, k], plan.weights()).map_err(input)?,
        out,
    )
    .map_err(input)?;
    println!(
        "residual={:e} sweeps={} converged={}",
        plan.residual, plan.iterations, plan.converged
    );
    if plan.converged {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "transport did not converge: residual {:e} after {} sweeps",
            plan.residual, plan.iterations
        )))
    }
}

fn read_grids(role: &str, paths: &[PathBuf]) -> Result<Vec<FeatureGrid>, Failure> {
    paths
        .iter()
        .enumerate()
        .map(|(layer, path)| {
            let t = io::read_tensor(path).map_err(input_at(path))?;
            FeatureGrid::from_tensor(layer, &t).map_err(|e| {
                Failure::Input(format!("{role} layer {layer} ({}): {e}", path.display()))
            })
        })
        .collect()
}

fn read_values(path: &Path) -> Result<Vec<f64>, Failure> {
    Ok(io::read_tensor(path).map_err(input_at(path))?.to_f64())
}

struct NceArgs<'a> {
    src: &'a [PathBuf],
    gen: &'a [PathBuf],
    labels: &'a Path,
    report: &'a Path,
    d_real: Option<&'a Path>,
    d_fake: Option<&'a Path>,
}

fn cmd_nce(args: NceArgs<'_>, cfg: DegNceConfig) -> Result<(), Failure> {
    if args.src.len() != args.gen.len() {
        return Err(Failure::Input(format!(
            "{} --src tensors but {} --gen tensors",
            args.src.len(),
            args.gen.len()
        )));
    }
    let src = read_grids("src", args.src)?;
    let gen = read_grids("gen", args.gen)?;
    let dmap = io::read_label_map(args.labels).map_err(input_at(args.labels))?;
    let run = run_degnce(&src, &gen, &dmap, &cfg).map_err(input)?;
    let adversarial = match (args.d_real, args.d_fake) {
        (Some(r), Some(f)) => {
            Some(adversarial_losses(&read_values(r)?, &read_values(f)?).map_err(input)?)
        }
        _ => None,
    };
    let converged = run.converged();
    let summary = LossReport {
        config: cfg,
        run,
        adversarial,
    };
    let mut report: Report = summary.to_report();
    report.push("converged", converged);
    report.write(args.report).map_err(input)?;
    println!("deg_nce={:?}", summary.deg_nce());
    if converged {
        Ok(())
    } else {
        Err(Failure::Numeric("a transport plan did not converge".into()))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Invariant {
            input,
            out,
            sigma,
            eps,
        } => cmd_invariant(&input, &out, sigma, eps),
        Command::Disentangle {
            input,
            out_labels,
            out_palette,
            sigma,
            eps,
            seed,
            max_iters,
            tol,
            dump_soft,
        } => cmd_disentangle(
            &input,
            &out_labels,
            &out_palette,
            DisentangleConfig {
                sigma,
                eps,
                seed,
                max_iters,
                tol,
            },
            dump_soft.as_deref(),
        ),
        Command::Synth {
            scene,
            out_img,
            out_labels,
            mode,
            factor,
        } => cmd_synth(&scene, &out_img, &out_labels, mode.map(Into::into), factor),
        Command::VerifyCorollary1 {
            scene_pair,
            report,
            refine,
            mode,
            sigma,
            eps,
        } => cmd_verify_corollary1(
            scene_pair.as_deref(),
            &report,
            CorollaryConfig {
                sigma,
                eps,
                mode: mode.map(Into::into),
                refine,
            },
        ),
        Command::Reweight {
            block,
            epsilon,
            out,
            max_sweeps,
            tol,
            sign,
            no_anneal,
        } => cmd_reweight(
            &block,
            &out,
            SinkhornConfig {
                epsilon,
                max_sweeps,
                tol,
                sign: sign.into(),
                anneal: !no_anneal,
            },
        ),
        Command::Nce {
            src,
            gen,
            labels,
            tau,
            seed,
            report,
            epsilon,
            max_sweeps,
            tol,
            sign,
            max_per_region,
            negative_mass,
            d_real,
            d_fake,
        } => cmd_nce(
            NceArgs {
                src: &src,
                gen: &gen,
                labels: &labels,
                report: &report,
                d_real: d_real.as_deref(),
                d_fake: d_fake.as_deref(),
            },
            DegNceConfig {
                tau,
                seed,
                max_per_region,
                sinkhorn: SinkhornConfig {
                    epsilon,
                    max_sweeps,
                    tol,
                    sign: sign.into(),
                    anneal: true,
                },
                mass: negative_mass.into(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Input(msg) | Failure::Numeric(msg)) = f;
            eprintln!("n2d3: {msg}");
            ExitCode::from(code)
        }
    }
}
