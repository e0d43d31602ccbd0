//! `stjd` command-line tool.
//!
//! Every command prints JSON on stdout. Failures print
//! `{"error": {"code": ..., "message": ...}}` on stderr and exit with status 2.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use stjd::config::RunConfig;
use stjd::contrastive::checkpoint::{load_checkpoint, save_checkpoint};
use stjd::contrastive::{
    bandwidths_for, extract_features, linear_probe, pretrain, EncoderPair, Schedule,
};
use stjd::density::{density_change_field, FieldJson};
use stjd::prime::{detect_prime, sample_mask_plan};
use stjd::skeleton::parse_ntu_skeleton;
use stjd::stats::paired_t_test;
use stjd::synth::{generate_dataset, read_dataset, write_dataset, ActionClass};
use stjd::{Error, Result, SkeletonSequence};

#[derive(Parser, Debug)]
#[command(name = "stjd", version, about = "Spatio-temporal joint density tools")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prime-joint threshold on the normalized density change.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long = "mask-ratio", global = true)]
    mask_ratio: Option<f64>,
    #[arg(long = "mask-temperature", global = true)]
    mask_temperature: Option<f64>,
}

#[derive(Args, Debug)]
struct Input {
    /// NTU `.skeleton` text file or sequence JSON.
    input: PathBuf,
    /// Body to use from multi-body NTU files.
    #[arg(long, default_value_t = 0)]
    person: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a skeleton file and print its shape; optionally export JSON.
    Parse {
        #[command(flatten)]
        input: Input,
        /// Directory for one JSON file per body.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density change field with per-joint maxima.
    Stjd {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frame-resolved prime-joint mask.
    Prime {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density-weighted masking plan.
    Maskplan {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a procedural dataset with ground-truth prime joints.
    Generate {
        /// Comma-separated class names, or `all`.
        #[arg(long, default_value = "all")]
        classes: String,
        /// Sequences per class.
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contrastive pretraining; writes a checkpoint and a JSONL step log.
    Pretrain {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Step log file (defaults to `<out>/train_log.jsonl`).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Linear probe on frozen features, next to a random-encoder baseline.
    Probe {
        checkpoint: PathBuf,
        dataset: PathBuf,
    },
    /// Paired two-tailed t-test on two value files.
    Ttest {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

fn run_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &g.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(b) = g.beta {
        cfg.train.beta = b;
    }
    if let Some(r) = g.mask_ratio {
        cfg.mask_ratio = r;
    }
    if let Some(t) = g.mask_temperature {
        cfg.mask_temperature = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn load_all(path: &Path) -> Result<Vec<SkeletonSequence>> {
    if is_json(path) {
        return Ok(vec![SkeletonSequence::read_json(path)?]);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_ntu_skeleton(&text)
}

fn load_one(input: &Input) -> Result<SkeletonSequence> {
    let mut all = load_all(&input.input)?;
    let len = all.len();
    if input.person >= len {
        return Err(Error::IndexOutOfBounds { index: input.person, len });
    }
    Ok(all.swap_remove(input.person))
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            // a closed pipe (`stjd ... | head`) is not an error
            if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn cmd_parse(input: &Input, out: Option<&Path>) -> Result<Value> {
    let seqs = load_all(&input.input)?;
    let mut bodies = Vec::new();
    for (k, s) in seqs.iter().enumerate() {
        let mut entry = json!({
            "person_index": k,
            "frames": s.frames(),
            "joints": s.joints(),
            "channels": s.channels(),
            "layout": s.layout().name,
            "subject_id": s.subject_id,
        });
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let file = dir.join(format!("body_{k}.json"));
            s.write_json(&file)?;
            entry["file"] = json!(file.display().to_string());
        }
        bodies.push(entry);
    }
    Ok(json!({ "bodies": bodies }))
}

fn cmd_stjd(input: &Input, cfg: &RunConfig) -> Result<Value> {
    let seq = load_one(input)?;
    let t = &cfg.train;
    let h = bandwidths_for(&seq, t.fit_bandwidths)?;
    let field = density_change_field(seq.values(), &h, t.delta_t, t.normalize)?;
    let joint_max: Vec<f64> = field
        .normalized
        .columns()
        .into_iter()
        .map(|c| c.iter().copied().fold(0.0, f64::max))
        .collect();
    let above = field.normalized.iter().filter(|&&x| x >= t.beta).count();
    let mut ranked: Vec<usize> = (0..joint_max.len()).collect();
    ranked.sort_by(|&a, &b| joint_max[b].total_cmp(&joint_max[a]));
    Ok(json!({
        "delta_t": t.delta_t,
        "bandwidths": h.as_slice(),
        "raw": FieldJson::from_array(&field.raw),
        "normalized": FieldJson::from_array(&field.normalized),
        "summary": {
            "joint_max": joint_max,
            "joints_by_max": ranked,
            "max_raw": field.raw.iter().copied().fold(0.0, f64::max),
            "beta": t.beta,
            "prime_entries": above,
            "no_prime_pre_fallback": above == 0,
        },
    }))
}

fn cmd_prime(input: &Input, cfg: &RunConfig) -> Result<Value> {
    let seq = load_one(input)?;
    let t = &cfg.train;
    let h = bandwidths_for(&seq, t.fit_bandwidths)?;
    let field = density_change_field(seq.values(), &h, t.delta_t, t.normalize)?;
    let mask = detect_prime(&field.normalized, t.beta)?;
    let joints: Vec<usize> = mask
        .joint_aggregate()
        .iter()
        .enumerate()
        .filter_map(|(j, &p)| p.then_some(j))
        .collect();
    Ok(json!({
        "mask": mask.to_json(),
        "count": mask.count(),
        "prime_joints_any_frame": joints,
    }))
}

fn cmd_maskplan(input: &Input, cfg: &RunConfig) -> Result<Value> {
    let seq = load_one(input)?;
    let t = &cfg.train;
    let h = bandwidths_for(&seq, t.fit_bandwidths)?;
    let field = density_change_field(seq.values(), &h, t.delta_t, t.normalize)?;
    let plan = sample_mask_plan(&field.normalized, cfg.mask_ratio, cfg.mask_temperature, cfg.seed)?;
    Ok(serde_json::to_value(plan.to_json())?)
}

fn parse_classes(spec: &str) -> Result<Vec<ActionClass>> {
    if spec == "all" {
        return Ok(ActionClass::ALL.to_vec());
    }
    spec.split(',').map(|s| ActionClass::from_name(s.trim())).collect()
}

fn cmd_generate(classes: &str, count: usize, out: &Path, cfg: &RunConfig) -> Result<Value> {
    let classes = parse_classes(classes)?;
    let (samples, manifest) = generate_dataset(&classes, count, &cfg.synth, cfg.seed)?;
    write_dataset(out, &samples, &manifest)?;
    Ok(json!({
        "out": out.display().to_string(),
        "sequences": samples.len(),
        "classes": classes.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "seed": cfg.seed,
    }))
}

fn cmd_pretrain(dataset: &Path, out: &Path, log: Option<&Path>, cfg: &RunConfig) -> Result<Value> {
    let (data, manifest) = read_dataset(dataset)?;
    let seqs: Vec<SkeletonSequence> = data.into_iter().map(|(s, _)| s).collect();
    fs::create_dir_all(out)?;
    let log_path = log.map_or_else(|| out.join("train_log.jsonl"), Path::to_path_buf);
    let mut writer = std::io::BufWriter::new(fs::File::create(&log_path)?);
    let mut write_err: Option<std::io::Error> = None;
    let schedule = Schedule {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
    };
    let (pair, bank, steps) = pretrain(&seqs, &cfg.train, schedule, cfg.seed, |step, r| {
        let line = json!({
            "step": step,
            "l_cl": r.l_cl,
            "l_rcl": r.l_rcl,
            "bank_size": r.bank_size,
            "prime_fraction": r.prime_fraction,
        });
        if write_err.is_none() {
            if let Err(e) = writeln!(writer, "{line}") {
                write_err = Some(e);
            }
        }
        log::debug!("{line}");
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    writer.flush()?;
    save_checkpoint(out, &pair, &cfg.train, steps, &manifest.layout)?;
    Ok(json!({
        "checkpoint": out.display().to_string(),
        "log": log_path.display().to_string(),
        "steps": steps,
        "sequences": seqs.len(),
        "bank_size": bank.len(),
    }))
}

fn cmd_probe(checkpoint: &Path, dataset: &Path, cfg: &RunConfig) -> Result<Value> {
    let (pair, manifest) = load_checkpoint(checkpoint)?;
    let (data, _) = read_dataset(dataset)?;
    if let Some((s, _)) = data.first() {
        if s.channels() != manifest.in_channels || s.joints() != pair.online.encoder.adjacency.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint expects {} channels x {} joints, dataset has {} x {}",
                manifest.in_channels,
                pair.online.encoder.adjacency.nrows(),
                s.channels(),
                s.joints()
            )));
        }
    }
    let features = |pair: &EncoderPair| -> Result<Vec<(Vec<f64>, i64)>> {
        data.iter()
            .map(|(s, l)| Ok((extract_features(&pair.online.encoder, s)?, *l)))
            .collect()
    };
    let pretrained = linear_probe(&features(&pair)?, &cfg.probe, cfg.seed)?;
    let random = EncoderPair::new(
        manifest.in_channels,
        pair.online.encoder.adjacency.clone(),
        &manifest.config,
        cfg.seed,
    );
    let baseline = linear_probe(&features(&random)?, &cfg.probe, cfg.seed)?;
    Ok(json!({
        "pretrained": pretrained,
        "baseline": baseline,
        "improvement": pretrained.accuracy - baseline.accuracy,
        "checkpoint_step": manifest.step,
    }))
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidArgument(format!("{}: not a number: {s:?}", path.display())))
        })
        .collect()
}

fn cmd_ttest(a: &Path, b: &Path, alpha: f64) -> Result<Value> {
    let r = paired_t_test(&read_values(a)?, &read_values(b)?, alpha)?;
    Ok(json!({
        "t_value": r.t_value,
        "degrees_freedom": r.degrees_freedom,
        "critical_value": r.critical_value,
        "p_value": r.p_value,
        "alpha": alpha,
        "reject": r.reject,
    }))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = run_config(&cli.global)?;
    let (value, out) = match &cli.command {
        Command::Parse { input, out } => (cmd_parse(input, out.as_deref())?, None),
        Command::Stjd { input, out } => (cmd_stjd(input, &cfg)?, out.as_deref()),
        Command::Prime { input, out } => (cmd_prime(input, &cfg)?, out.as_deref()),
        Command::Maskplan { input, out } => (cmd_maskplan(input, &cfg)?, out.as_deref()),
        Command::Generate { classes, count, out } => (cmd_generate(classes, *count, out, &cfg)?, None),
        Command::Pretrain { dataset, out, log } => (cmd_pretrain(dataset, out, log.as_deref(), &cfg)?, None),
        Command::Probe { checkpoint, dataset } => (cmd_probe(checkpoint, dataset, &cfg)?, None),
        Command::Ttest { a, b, alpha } => (cmd_ttest(a, b, *alpha)?, None),
    };
    emit(&value, out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{doc}");
            ExitCode::from(2)
        }
    }
}
