use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use artattack::config::{DEFAULT_B, DEFAULT_BETA, DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_N_P};
use artattack::harness::{
    export_png, load_cifar10_batch, load_png, reconstruct, run_experiment, synthetic_images, write_report,
    ExperimentPlan, LabeledImage, PlanFile,
};
use artattack::{attack, AttackConfig, ClassifierOracle, LinearSoftmaxOracle, MlpOracle, RemoteOracle, ShapeKind};
use clap::{Args, Parser, Subcommand};

/// Number of images produced by a `synthetic:<seed>` dataset.
const SYNTHETIC_COUNT: usize = 100;
const SYNTHETIC_SIDE: usize = 32;

#[derive(Parser)]
#[command(name = "artattack", version, about = "Black-box adversarial attacks with evolved shapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack one image towards a target class.
    Attack(AttackArgs),
    /// Run a shape-kind x N sweep described by a plan file.
    Experiment(ExperimentArgs),
    /// Approximate a reference image with evolved shapes.
    Reconstruct(ReconstructArgs),
}

#[derive(Args)]
struct OracleArgs {
    /// linear:<seed>, mlp:<weights.json> or remote:<url>
    #[arg(long)]
    oracle: String,
    /// Class count for linear and remote oracles.
    #[arg(long, default_value_t = 10)]
    classes: usize,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    /// CIFAR-10 binary batch, PNG file, or synthetic:<seed>
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 0)]
    image_index: usize,
    #[arg(long)]
    target_class: usize,
    #[arg(long, default_value = "circle")]
    shape: ShapeKind,
    #[arg(long, default_value_t = 100)]
    num_shapes: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: f64,
    #[arg(long, default_value_t = DEFAULT_N_P)]
    n_p: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    oracle: OracleArgs,
    /// CIFAR-10 binary batch, PNG file, or synthetic:<seed>
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value = "triangle")]
    shape: ShapeKind,
    #[arg(long, default_value_t = 100)]
    num_shapes: usize,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn load_dataset(spec: &str) -> Result<Vec<LabeledImage>> {
    if let Some(seed) = spec.strip_prefix("synthetic:") {
        let seed = seed.parse().with_context(|| format!("bad synthetic seed {seed:?}"))?;
        return Ok(synthetic_images(seed, SYNTHETIC_COUNT, SYNTHETIC_SIDE, SYNTHETIC_SIDE)
            .into_iter()
            .map(LabeledImage::unlabeled)
            .collect());
    }
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        let img = load_png(path).with_context(|| format!("loading {spec}"))?;
        return Ok(vec![LabeledImage::unlabeled(img)]);
    }
    let items = load_cifar10_batch(path).with_context(|| format!("loading {spec}"))?;
    Ok(items.into_iter().map(|(img, y)| LabeledImage::labeled(img, y)).collect())
}

fn load_oracle(args: &OracleArgs, height: usize, width: usize) -> Result<Box<dyn ClassifierOracle + Sync>> {
    let Some((kind, rest)) = args.oracle.split_once(':') else {
        bail!("oracle must be linear:<seed>, mlp:<path> or remote:<url>, got {:?}", args.oracle);
    };
    ensure!(args.classes >= 2, "need at least 2 classes");
    Ok(match kind {
        "linear" => {
            let seed = rest.parse().with_context(|| format!("bad linear seed {rest:?}"))?;
            Box::new(LinearSoftmaxOracle::for_images(seed, height, width, args.classes))
        }
        "mlp" => {
            let mlp = MlpOracle::load(rest).with_context(|| format!("loading weights {rest}"))?;
            ensure!(
                mlp.input_dim() == height * width * 3,
                "network expects {} inputs, images have {}",
                mlp.input_dim(),
                height * width * 3
            );
            Box::new(mlp)
        }
        "remote" => Box::new(RemoteOracle::new(rest, args.classes)),
        other => bail!("unknown oracle kind {other:?}"),
    })
}

fn run_attack(args: AttackArgs) -> Result<()> {
    let dataset = load_dataset(&args.dataset)?;
    let item = dataset
        .get(args.image_index)
        .with_context(|| format!("image index {} out of range ({} images)", args.image_index, dataset.len()))?;
    let (h, w) = item.image.dims();
    let oracle = load_oracle(&args.oracle, h, w)?;
    let predicted = oracle.predict(&item.image)?;
    let true_label = item.label.unwrap_or(predicted);
    if predicted != true_label {
        eprintln!("note: oracle predicts {predicted} for an image labelled {true_label}");
    }
    let config = AttackConfig {
        epsilon: args.epsilon,
        beta: args.beta,
        budget: args.budget,
        b: args.b,
        n_p: args.n_p,
        seed: args.seed,
        ..AttackConfig::new(args.shape, args.num_shapes, args.target_class)
    };
    let record = attack(oracle.as_ref(), &item.image, true_label, &config)?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("record.json"), serde_json::to_string_pretty(&record)?)?;
    export_png(record.final_image(), args.out.join("adversarial.png"))?;
    export_png(&item.image, args.out.join("original.png"))?;
    println!(
        "true {} -> predicted {} (target {}): targeted {}, untargeted {}, {} queries, max deviation {:.4}",
        true_label,
        record.final_probs().argmax(),
        args.target_class,
        record.success_targeted(),
        record.success_untargeted(),
        record.queries_used(),
        record.max_deviation()
    );
    Ok(())
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let file = PlanFile::load(&args.plan).with_context(|| format!("reading plan {}", args.plan.display()))?;
    let dataset = load_dataset(&args.dataset)?;
    let first = dataset.first().context("dataset is empty")?;
    let (h, w) = first.image.dims();
    let oracle = load_oracle(&args.oracle, h, w)?;
    let plan = ExperimentPlan::build(&dataset, &file.image_indices, oracle.as_ref(), file.configs(), &file.targets)?;
    if !plan.skipped().is_empty() {
        eprintln!("skipping misclassified images {:?}", plan.skipped());
    }
    let summary = run_experiment(&plan, oracle.as_ref(), args.seed);
    let pngs = write_report(&summary, &args.out)?;
    println!("{:<10} {:>4} {:>9} {:>9} {:>9} {:>5}", "kind", "N", "targeted", "untarget", "queries", "runs");
    for c in &summary.configs {
        let q = c.mean_queries.map_or_else(|| "-".to_string(), |q| format!("{q:.1}"));
        println!(
            "{:<10} {:>4} {:>9.3} {:>9.3} {:>9} {:>5}",
            c.kind.to_string(),
            c.num_shapes,
            c.targeted_asr,
            c.untargeted_asr,
            q,
            c.runs
        );
    }
    let errors: usize = summary.configs.iter().map(|c| c.errors).sum();
    if errors > 0 {
        eprintln!("{errors} attacks failed with errors; see records.jsonl");
    }
    println!("wrote {} adversarial PNGs to {}", pngs.len(), args.out.display());
    Ok(())
}

fn run_reconstruct(args: ReconstructArgs) -> Result<()> {
    ensure!(args.iterations >= 1, "iterations must be at least 1");
    let reference = load_png(&args.reference).with_context(|| format!("loading {}", args.reference.display()))?;
    let res = reconstruct(&reference, args.shape, args.num_shapes, args.iterations, args.seed)?;
    fs::create_dir_all(&args.out)?;
    export_png(&res.image, args.out.join("reconstruction.png"))?;
    fs::write(args.out.join("genome.json"), serde_json::to_string_pretty(&res.genome)?)?;
    let mut csv = csv::Writer::from_path(args.out.join("trajectory.csv"))?;
    csv.write_record(["iteration", "fitness"])?;
    for (i, f) in res.trajectory.iter().enumerate() {
        csv.write_record([(i + 1).to_string(), f.to_string()])?;
    }
    csv.flush()?;
    println!("MSE {:.6} -> {:.6}", res.initial_mse, res.final_mse);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Attack(a) => run_attack(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::Reconstruct(a) => run_reconstruct(a),
    }
}
