use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use handfit::hand_model::{build_model, build_model_with, pose_hands, write_obj, FeatureEncoding, Hand, HandModel};
use handfit::harness::{evaluate, fit_directory, interaction_script, run_selftest, to_records};
use handfit::oracle::{generate_sequence, load_gt, NoiseSpec, Script, CAMERA_FILE};
use handfit::solver::{load_records, prior_alpha, save_records};
use handfit::{FitConfig, HandParams, PosedHands};

#[derive(Parser)]
#[command(name = "handfit", version, about = "Two-hand model fitting from dense predictor maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every frame of a sequence directory and write per-frame parameters.
    Fit {
        seq_dir: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "fit.csv")]
        out: PathBuf,
        /// Drop the temporal smoothing rows.
        #[arg(long)]
        no_smoothing: bool,
        /// Palm length prior in meters.
        #[arg(long)]
        palm_length: Option<f64>,
        /// Also write posed meshes as OBJ files here.
        #[arg(long)]
        mesh_dir: Option<PathBuf>,
    },
    /// Render a keyframe script into a synthetic sequence directory.
    RenderOracle {
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// e.g. `match=0.01,flip=0.02,heat_jitter=2,seed=3`
        #[arg(long, default_value = "")]
        noise: String,
        /// Palm length used to normalize the depth maps; overrides the script.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0)]
        model_seed: u64,
    },
    /// Score fitted parameters against ground truth annotations.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Supplies the camera and model seed; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the built-in two-hand interaction scene as a keyframe script.
    DemoScript {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        /// How far the hands are pushed into each other, in meters.
        #[arg(long, default_value_t = 0.04)]
        overlap: f64,
    },
    /// Run the built-in invariant checks.
    Selftest,
    /// Write the procedural hand model as a binary blob, optionally with OBJ meshes.
    ExportModel {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the geodesic embedding for the matching features.
        #[arg(long)]
        geodesic: bool,
        /// Also write the rest meshes of both hands into this directory.
        #[arg(long)]
        obj_dir: Option<PathBuf>,
    },
}

fn write_mesh(path: &Path, model: &HandModel, posed: &PosedHands, hand: Hand) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_obj(&mut w, posed.hand_vertices(hand), &model.hand_triangles(hand))?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn fit(
    seq_dir: &Path,
    config: &Path,
    out: &Path,
    no_smoothing: bool,
    palm_length: Option<f64>,
    mesh_dir: Option<&Path>,
) -> Result<()> {
    let mut cfg = FitConfig::load(config)?;
    let camera = seq_dir.join(CAMERA_FILE);
    if camera.exists() {
        let cam = FitConfig::load(&camera)?;
        cfg.intrinsics = cam.intrinsics;
        cfg.alpha = cfg.alpha.or(cam.alpha);
    }
    if no_smoothing {
        cfg.temporal = false;
    }
    if let Some(a) = palm_length {
        if !(a > 0.0) {
            bail!("--palm-length must be > 0, got {a}");
        }
        cfg.alpha = Some(a);
    }
    cfg.validate()?;
    let model = build_model(cfg.model_seed);
    let fits = fit_directory(&model, seq_dir, &cfg)?;
    let failed = fits.iter().filter(|f| f.is_err()).count();
    for (i, f) in fits.iter().enumerate() {
        if let Err(e) = f {
            eprintln!("frame {i}: {e}");
        }
    }
    let records = to_records(&fits, &HandParams::default());
    save_records(out, &records)?;
    if let Some(dir) = mesh_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for r in &records {
            let posed = pose_hands(&model, &r.params)?;
            for hand in Hand::BOTH {
                let path = dir.join(format!("frame_{:04}_{}.obj", r.frame, hand.name()));
                write_mesh(&path, &model, &posed, hand)?;
            }
        }
    }
    println!(
        "fitted {} frames (alpha {:.4} m), wrote {}",
        records.len(),
        prior_alpha(&model, &cfg),
        out.display()
    );
    if failed > 0 {
        bail!("{failed} of {} frames failed", records.len());
    }
    Ok(())
}

fn render_oracle(script: &Path, out: &Path, noise: &str, alpha: Option<f64>, model_seed: u64) -> Result<()> {
    let script = Script::load(script)?;
    let noise = NoiseSpec::parse(noise)?;
    let model = build_model(model_seed);
    let alpha = alpha.or(script.alpha).unwrap_or_else(|| prior_alpha(&model, &FitConfig::default()));
    if !(alpha > 0.0) {
        bail!("alpha must be > 0, got {alpha}");
    }
    let n = generate_sequence(&model, &script, &noise, alpha, out)?;
    println!("rendered {n} frames to {}", out.display());
    Ok(())
}

fn eval(pred: &Path, gt: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(p) => FitConfig::load(p)?,
        None => FitConfig::default(),
    };
    let model = build_model(cfg.model_seed);
    let records = load_records(pred)?;
    let gt = load_gt(gt)?;
    let report = evaluate(&model, &records, &gt, &cfg.intrinsics)?;
    std::fs::write(out, report.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{} frames: 2D {:.3} px, 3D {:.3} mm, wrote {}",
        report.frames,
        report.mean_2d,
        report.mean_3d_mm,
        out.display()
    );
    Ok(())
}

fn demo_script(out: &Path, frames: usize, overlap: f64) -> Result<()> {
    if frames < 3 {
        bail!("--frames must be at least 3, got {frames}");
    }
    let script = interaction_script(frames, overlap);
    std::fs::write(out, script.to_text()).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {frames}-frame script to {}", out.display());
    Ok(())
}

fn selftest() -> Result<()> {
    let checks = run_selftest();
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        failed += !c.passed as usize;
    }
    if failed > 0 {
        bail!("{failed} of {} self checks failed", checks.len());
    }
    Ok(())
}

fn export_model(out: &Path, seed: u64, geodesic: bool, obj_dir: Option<&Path>) -> Result<()> {
    let model = if geodesic {
        build_model_with(seed, FeatureEncoding::GeodesicMds)
    } else {
        build_model(seed)
    };
    model.save(out)?;
    if let Some(dir) = obj_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let posed = pose_hands(&model, &HandParams::default())?;
        for hand in Hand::BOTH {
            write_mesh(&dir.join(format!("rest_{}.obj", hand.name())), &model, &posed, hand)?;
        }
    }
    println!(
        "wrote model with {} vertices and {} triangles to {}",
        model.num_vertices(),
        model.triangles.len(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            seq_dir,
            config,
            out,
            no_smoothing,
            palm_length,
            mesh_dir,
        } => fit(&seq_dir, &config, &out, no_smoothing, palm_length, mesh_dir.as_deref()),
        Command::RenderOracle {
            script,
            out,
            noise,
            alpha,
            model_seed,
        } => render_oracle(&script, &out, &noise, alpha, model_seed),
        Command::Eval { pred, gt, out, config } => eval(&pred, &gt, &out, config.as_deref()),
        Command::DemoScript { out, frames, overlap } => demo_script(&out, frames, overlap),
        Command::Selftest => selftest(),
        Command::ExportModel {
            out,
            seed,
            geodesic,
            obj_dir,
        } => export_model(&out, seed, geodesic, obj_dir.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
