use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tvcast_core::config::PipelineConfig;
use tvcast_core::dsl::{format_dsl, parse_dsl};
use tvcast_core::pipeline::{format_eval_table, run_convert, run_eval, PageDocument, Pipeline};
use tvcast_core::wireframe::{render_svg, render_wireframe};

/// Convert phone UI hierarchy dumps into TV layouts.
#[derive(Parser)]
#[command(name = "tvcast", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Pipeline config (TOML).
    #[arg(long, global = true, env = "TVCAST_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    tv_width: Option<u32>,
    #[arg(long, global = true)]
    tv_height: Option<u32>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Template catalog replacing the built-in one.
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over hierarchy dumps (files or directories).
    Convert {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory of ground-truth `<name>.wf` wireframes to score against.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Print the grouping of one page as JSON.
    Group {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the classified groups of one page as JSON.
    Classify {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the TV page and its layout as JSON.
    Layout {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a `.page.json` to `.svg` and `.wf`.
    Render {
        page: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Format or validate DSL files.
    Dsl {
        #[command(subcommand)]
        action: DslAction,
    },
    /// Score generated wireframes against ground truth.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        generated: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        truth: Vec<PathBuf>,
        /// CSV with header `page_id,group_id,match`.
        #[arg(long)]
        judgments: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DslAction {
    /// Print the canonical form, or rewrite the file with `--write`.
    Fmt {
        file: PathBuf,
        #[arg(long)]
        write: bool,
    },
    /// Exit non-zero if any file fails to parse.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Configuration problems exit with 1, distinct from per-input failures.
struct ConfigFailure(anyhow::Error);

fn load_pipeline(opts: &GlobalOpts) -> Result<Pipeline, ConfigFailure> {
    let mut cfg = match &opts.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| ConfigFailure(e.into()))?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = opts.tv_width {
        cfg.tv.width = w;
    }
    if let Some(h) = opts.tv_height {
        cfg.tv.height = h;
    }
    if let Some(j) = opts.jobs {
        cfg.run.jobs = j;
    }
    if let Some(t) = &opts.templates {
        cfg.data.templates = Some(t.clone());
    }
    Pipeline::new(cfg).map_err(|e| ConfigFailure(e.into()))
}

fn expand(inputs: &[PathBuf], extension: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == extension))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => std::fs::write(path, json).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, ConfigFailure> {
    let result = match cli.command {
        Command::Convert { inputs, out, truth } => {
            let pipeline = load_pipeline(&cli.global)?;
            (|| {
                let inputs = expand(&inputs, "xml")?;
                if inputs.is_empty() {
                    bail!("no input pages found");
                }
                let report = run_convert(&pipeline, &inputs, &out, truth.as_deref())?;
                for page in &report.pages {
                    match &page.error {
                        None => println!("ok     {}", page.name),
                        Some(e) => println!("failed {}: {}: {}", page.name, e.kind, e.message),
                    }
                }
                let agg = &report.aggregates;
                println!("{} of {} pages converted", agg.succeeded, agg.pages);
                if let Some(r) = agg.mean_reduced_ratio {
                    println!("mean reduced ratio {r:.4}");
                }
                if let Some(m) = agg.mean_miou {
                    println!("mean mIoU {m:.4}");
                }
                Ok(ExitCode::from(report.exit_code() as u8))
            })()
        }
        Command::Group { input, out } => {
            let pipeline = load_pipeline(&cli.global)?;
            (|| {
                let tree = pipeline.parse(&read(&input)?)?;
                emit_json(&pipeline.group(&tree), out.as_deref())?;
                Ok(ExitCode::SUCCESS)
            })()
        }
        Command::Classify { input, out } => {
            let pipeline = load_pipeline(&cli.global)?;
            (|| {
                let tree = pipeline.parse(&read(&input)?)?;
                let grouping = pipeline.group(&tree);
                emit_json(&pipeline.classify(&tree, &grouping), out.as_deref())?;
                Ok(ExitCode::SUCCESS)
            })()
        }
        Command::Layout { input, out } => {
            let pipeline = load_pipeline(&cli.global)?;
            (|| {
                let conv = pipeline.convert(&read(&input)?)?;
                let doc = PageDocument {
                    page: conv.fitted,
                    layout: conv.layout,
                };
                emit_json(&doc, out.as_deref())?;
                Ok(ExitCode::SUCCESS)
            })()
        }
        Command::Render { page, out } => (|| {
            let doc: PageDocument =
                serde_json::from_str(&read(&page)?).with_context(|| format!("parsing {}", page.display()))?;
            let file = page
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            let name = file
                .strip_suffix(".page.json")
                .or_else(|| file.strip_suffix(".json"))
                .unwrap_or(&file);
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join(format!("{name}.svg")), render_svg(&doc.page, &doc.layout))?;
            std::fs::write(
                out.join(format!("{name}.wf")),
                render_wireframe(&doc.page, &doc.layout).to_bytes(),
            )?;
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Dsl { action } => match action {
            DslAction::Fmt { file, write } => (|| {
                let text = read(&file)?;
                let formatted = format_dsl(&text).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
                if write {
                    std::fs::write(&file, formatted)?;
                } else {
                    print!("{formatted}");
                }
                Ok(ExitCode::SUCCESS)
            })(),
            DslAction::Check { files } => (|| {
                let mut failed = false;
                for file in &files {
                    match parse_dsl(&read(file)?) {
                        Ok(doc) => println!("ok     {} ({} statements)", file.display(), doc.statements.len()),
                        Err(e) => {
                            println!("failed {}:{e}", file.display());
                            failed = true;
                        }
                    }
                }
                Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
            })(),
        },
        Command::Eval {
            generated,
            truth,
            judgments,
            json,
        } => (|| {
            let report = run_eval(&expand(&generated, "wf")?, &expand(&truth, "wf")?, judgments.as_deref())?;
            print!("{}", format_eval_table(&report));
            if let Some(path) = json {
                emit_json(&report, Some(&path))?;
            }
            Ok(ExitCode::SUCCESS)
        })(),
    };
    Ok(result.unwrap_or_else(|e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    }))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(ConfigFailure(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
    }
}
