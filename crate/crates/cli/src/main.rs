use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use netschem::asc::{decode_text, parse_asc, serialize_asc, ParseMode};
use netschem::augment::{build_dataset, collect_asc_files, read_jsonl};
use netschem::baseline::baseline_asc;
use netschem::extract::{compile_asc, PinMapRegistry};
use netschem::harness::{
    evaluate, generation_jobs, load_candidate_dir, load_references, report_csv, report_json, report_table,
    EvalConfig, EvalReport, DEFAULT_TIMEOUT_S,
};
use netschem::llm::{generate_all, write_outputs, EndpointConfig, HttpClient};
use netschem::netlist::{parse_netlist, serialize_netlist};
use netschem::preprocess::{preprocess_pipeline, FilterReason};
use netschem::prompt::{ExamplePair, PromptVariant};
use netschem::render::{render, RenderConfig};

#[derive(Parser)]
#[command(name = "netschem", version, about = "Netlist and LTSpice schematic conversion toolkit")]
struct Cli {
    /// Seed for augmentation and split assignment.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with `pin_map`, `timeout` and `[render]` settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strip, normalize and filter raw schematics.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-file verdicts as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Dataset operations.
    Dataset {
        #[command(subcommand)]
        action: DatasetCommand,
    },
    /// Rule-based schematic for a netlist.
    Baseline {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query a model endpoint for every record of a dataset split.
    Generate(GenerateArgs),
    /// Netlist of a schematic.
    Compile {
        #[arg(long = "in")]
        input: PathBuf,
        /// Written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail on symbols missing from the pin map instead of skipping them.
        #[arg(long)]
        strict: bool,
        /// Extra pin maps, applied over the `--config` ones.
        #[arg(long)]
        pinmap: Option<PathBuf>,
    },
    /// Rasterize a schematic to a grayscale PNG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Schematic units per pixel.
        #[arg(long)]
        scale: Option<u32>,
    },
    /// Score generated schematics against references.
    Score(ScoreArgs),
    /// Print a stored report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        train: f64,
        #[arg(long, default_value_t = 0.05)]
        val: f64,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Overrides the variant in the endpoint file.
    #[arg(long)]
    variant: Option<u8>,
    #[arg(long)]
    endpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// One-shot example pair; the bundled low-pass filter is used otherwise.
    #[arg(long, requires = "example_asc")]
    example_net: Option<PathBuf>,
    #[arg(long, requires = "example_net")]
    example_asc: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gen: PathBuf,
    /// Directory of `<id>.asc` (+ optional `<id>.net`) or a dataset `.jsonl`.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Settings {
    pin_map: Option<PathBuf>,
    timeout: Option<f64>,
    render: RenderConfig,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Settings::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut s: Settings = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative pin-map paths are taken from the config file's directory.
        if let (Some(p), Some(dir)) = (&s.pin_map, path.parent()) {
            if p.is_relative() {
                s.pin_map = Some(dir.join(p));
            }
        }
        s.render.validate()?;
        Ok(s)
    }

    fn registry(&self) -> Result<PinMapRegistry> {
        Ok(match &self.pin_map {
            Some(p) => PinMapRegistry::with_overrides(p)?,
            None => PinMapRegistry::builtin(),
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(decode_text(&bytes)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct FileVerdict {
    keep: bool,
    reason: FilterReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn preprocess(input: &Path, out: &Path, report: Option<&Path>, reg: &PinMapRegistry) -> Result<()> {
    let (root, files) = if input.is_dir() {
        (input.to_path_buf(), collect_asc_files(input)?)
    } else {
        let name = input.file_name().context("input has no file name")?;
        (input.parent().unwrap_or(Path::new(".")).to_path_buf(), vec![PathBuf::from(name)])
    };
    let mut verdicts = BTreeMap::new();
    for rel in &files {
        let pre = preprocess_pipeline(&read_text(&root.join(rel))?);
        let mut v = FileVerdict {
            keep: pre.verdict.keep,
            reason: pre.verdict.reason,
            error: None,
        };
        if let Some(doc) = pre.doc.filter(|_| v.keep) {
            match compile_asc(&doc, reg, ParseMode::Strict) {
                Ok(n) => {
                    let target = out.join(rel);
                    write_text(&target, &serialize_asc(&doc))?;
                    write_text(&target.with_extension("net"), &serialize_netlist(&n))?;
                }
                Err(e) => {
                    v.keep = false;
                    v.reason = FilterReason::Uncompilable;
                    v.error = Some(e.to_string());
                }
            }
        }
        if !v.keep {
            log::info!("{}: dropped ({:?})", rel.display(), v.reason);
        }
        verdicts.insert(rel.to_string_lossy().replace('\\', "/"), v);
    }
    let kept = verdicts.values().filter(|v| v.keep).count();
    if let Some(path) = report {
        write_text(path, &(serde_json::to_string_pretty(&verdicts)? + "\n"))?;
    }
    println!("kept {kept} of {} files", files.len());
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut cfg = EndpointConfig::load(&args.endpoint)?;
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    let variant = PromptVariant::new(cfg.variant)?;
    let example = match (&args.example_net, &args.example_asc) {
        (Some(n), Some(a)) => ExamplePair {
            netlist_text: read_text(n)?.trim_end().to_string(),
            asc_text: read_text(a)?.trim_end().to_string(),
        },
        _ => ExamplePair::lpf(),
    };
    let records = read_jsonl(&args.dataset)?;
    let jobs = generation_jobs(&records, variant, Some(&example))?;
    let client = HttpClient::new(cfg.clone())?;
    log::info!("run {}: {} prompts, variant {}", client.run_id, jobs.len(), variant.id);
    let outputs = generate_all(&client, &jobs, &cfg.generation(), cfg.concurrency)?;
    write_outputs(&args.out, &outputs)?;
    let failed = outputs.iter().filter(|o| o.meta.error.is_some()).count();
    let truncated = outputs.iter().filter(|o| o.meta.truncated).count();
    println!("{} responses written ({failed} failed, {truncated} truncated)", outputs.len());
    Ok(())
}

fn score(args: &ScoreArgs, settings: &Settings, reg: &PinMapRegistry) -> Result<()> {
    let timeout = args.timeout.or(settings.timeout).unwrap_or(DEFAULT_TIMEOUT_S);
    if timeout.is_nan() || timeout < 0.0 {
        bail!("timeout must be non-negative");
    }
    let cfg = EvalConfig {
        timeout_seconds: timeout,
        render: settings.render,
        ..Default::default()
    };
    let refs = load_references(&args.reference)?;
    let cands = load_candidate_dir(&args.gen)?;
    let report = evaluate(&cands, &refs, &cfg, reg)?;
    if let Some(out) = &args.out {
        write_text(out, &report_json(&report)?)?;
    }
    if let Some(csv) = &args.csv {
        write_text(csv, &report_csv(&report))?;
    }
    print!("{}", report_table(&report));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let mut settings = Settings::load(cli.config.as_deref())?;
    let mut reg = settings.registry()?;
    match cli.command {
        Command::Preprocess { input, out, report } => preprocess(&input, &out, report.as_deref(), &reg),
        Command::Dataset {
            action: DatasetCommand::Build { corpus, test, out, train, val },
        } => {
            if train < 0.0 || val < 0.0 || train + val > 1.0 {
                bail!("split ratios must be non-negative and sum to at most 1");
            }
            let s = build_dataset(&corpus, test.as_deref(), &out, &reg, (train, val), cli.seed)?;
            println!(
                "train {}, validation {}, test {}, dropped as test overlap {}",
                s.manifest.train.len(),
                s.manifest.validation.len(),
                s.manifest.test.len(),
                s.dropped_overlap
            );
            Ok(())
        }
        Command::Baseline { input, out } => {
            let n = parse_netlist(&read_text(&input)?)?;
            write_text(&out, &serialize_asc(&baseline_asc(&n, &reg)?))
        }
        Command::Generate(args) => generate(&args),
        Command::Compile {
            input,
            out,
            strict,
            pinmap,
        } => {
            if let Some(p) = pinmap {
                reg.merge_json(&read_text(&p)?)?;
            }
            let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
            let doc = parse_asc(&read_text(&input)?, ParseMode::Lenient)?;
            let text = serialize_netlist(&compile_asc(&doc, &reg, mode)?);
            match out {
                Some(p) => write_text(&p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Render { input, out, scale } => {
            if let Some(s) = scale {
                settings.render.units_per_pixel = s;
                settings.render.validate()?;
            }
            let doc = parse_asc(&read_text(&input)?, ParseMode::Lenient)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Ok(render(&doc, &settings.render, &reg)?.write_png(&out)?)
        }
        Command::Score(args) => score(&args, &settings, &reg),
        Command::Report { input, format } => {
            let report: EvalReport = serde_json::from_str(&read_text(&input)?)?;
            match format {
                Format::Table => print!("{}", report_table(&report)),
                Format::Json => print!("{}", report_json(&report)?),
                Format::Csv => print!("{}", report_csv(&report)),
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
