use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use gragra_core::aogg::{grammars_isomorphic, weave_all, weave_in_order, Aogg};
use gragra_core::cpa::{
    analyze_conflicts, analyze_dependencies, analyze_weaving, cross_aspect_interference, CpaReport,
};
use gragra_core::encoding::{encode_aogg, encode_grammar};
use gragra_core::format::dot::{encoded_dot, report_dot};
use gragra_core::format::{
    grammar_doc, load, print_grammar, CommuteSummary, ReportDoc, ReportKind, Settings, WeaveSummary,
};
use gragra_core::rewrite::{run_grammar, RunConfig};
use gragra_core::Grammar;

const USAGE: u8 = 1;
const INVALID: u8 = 2;
const INTERFERENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gragra",
    version,
    about = "Graph grammars with aspects and critical pair analysis"
)]
struct Cli {
    /// Add a generation timestamp to JSON output.
    #[arg(long, global = true)]
    timestamps: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a grammar file.
    Validate { file: PathBuf },
    /// Run the woven grammar from its initial graph.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Ignore aspects and run the base grammar.
        #[arg(long)]
        base: bool,
        /// Write the derivation trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Weave aspects into the base grammar and write the result.
    Weave {
        file: PathBuf,
        /// Comma-separated aspect names; defaults to declaration order.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the encoded grammar: encoded base rules in the initial graph,
    /// advices as rules over it.
    Encode {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the encoded base grammar as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Critical pair analysis.
    Cpa {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = CpaMode::Conflicts)]
        mode: CpaMode,
        /// Analyze the encoded advices instead of the base rules.
        #[arg(long)]
        weaving: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// With --weaving, exit 3 when advices of different aspects conflict.
        #[arg(long)]
        strict: bool,
        /// Also write the nonzero cells as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Weave in every aspect order and compare the results.
    Commute {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CpaMode {
    Conflicts,
    Dependencies,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Run {
            file,
            seed,
            max_steps,
            base,
            trace,
        } => run(cli, file, *seed, *max_steps, *base, trace.as_deref()),
        Command::Weave {
            file,
            order,
            output,
        } => weave(file, order.as_deref(), output),
        Command::Encode { file, output, dot } => encode(file, output, dot.as_deref()),
        Command::Cpa {
            file,
            mode,
            weaving,
            format,
            strict,
            dot,
        } => cpa(cli, file, *mode, *weaving, *format, *strict, dot.as_deref()),
        Command::Commute { file, format } => commute(cli, file, *format),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<(Aogg, Settings), Failure> {
    let text = read(path)?;
    load(&text).map_err(|e| fail(INVALID, format!("{}:{e}", path.display())))
}

fn woven(d: &Aogg) -> Result<Grammar, Failure> {
    weave_all(d).map_err(|e| fail(INVALID, format!("weaving failed: {e}")))
}

fn json(cli: &Cli, kind: ReportKind, body: &impl serde::Serialize) -> String {
    let doc = ReportDoc::new(kind, body).expect("reports serialize");
    if !cli.timestamps {
        return doc.to_json();
    }
    let mut value = serde_json::to_value(&doc).expect("reports serialize");
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    value["generated_at_unix"] = secs.into();
    let mut s = serde_json::to_string_pretty(&value).expect("reports serialize");
    s.push('\n');
    s
}

fn validate(file: &Path) -> Outcome {
    let (d, _) = open(file)?;
    woven(&d)?;
    println!(
        "ok: {} node types, {} edge types, {} rules, {} aspects, {} advices",
        d.base.types.node_types().count(),
        d.base.types.edge_types().count(),
        d.base.rules.len(),
        d.aspects.len(),
        d.advice_count()
    );
    Ok(0)
}

fn run(
    cli: &Cli,
    file: &Path,
    seed: Option<u64>,
    max_steps: Option<usize>,
    base: bool,
    trace: Option<&Path>,
) -> Outcome {
    let (d, settings) = open(file)?;
    let g = if base { d.base.clone() } else { woven(&d)? };
    let mut cfg = RunConfig::new(
        seed.or(settings.seed).unwrap_or(0),
        max_steps.or(settings.max_steps).unwrap_or(100),
    );
    cfg.policy = settings.policy;
    if let Some(t) = settings.snapshot_threshold {
        cfg.snapshot_threshold = t;
    }
    let result = run_grammar(&g, cfg).map_err(|e| fail(INVALID, format!("run failed: {e}")))?;
    for step in &result.steps {
        println!("{:>4} {}", step.index, step.rule);
    }
    let status = serde_json::to_value(result.status).expect("status serializes");
    println!(
        "{} steps, {}",
        result.steps.len(),
        status.as_str().unwrap_or_default()
    );
    if let Some(path) = trace {
        write(path, &json(cli, ReportKind::Trace, &result))?;
    }
    Ok(0)
}

fn weave(file: &Path, order: Option<&[String]>, output: &Path) -> Outcome {
    let (d, _) = open(file)?;
    let names: Vec<String> = match order {
        Some(o) => o.to_vec(),
        None => d.aspects.iter().map(|a| a.name.clone()).collect(),
    };
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let g = weave_in_order(&d, &refs).map_err(|e| fail(INVALID, format!("weaving failed: {e}")))?;
    write(output, &print_grammar(&grammar_doc(&g)))?;
    let summary = WeaveSummary {
        order: names,
        rules: g.rule_names(),
    };
    println!("order: {}", summary.order.join(", "));
    for r in &summary.rules {
        println!("  {r}");
    }
    Ok(0)
}

fn encode(file: &Path, output: &Path, dot: Option<&Path>) -> Outcome {
    let (d, _) = open(file)?;
    let (g, _) = encode_aogg(&d).map_err(|e| fail(INVALID, format!("encoding failed: {e}")))?;
    write(output, &print_grammar(&grammar_doc(&g)))?;
    if let Some(path) = dot {
        let (graph, trace, _) =
            encode_grammar(&d.base).map_err(|e| fail(INVALID, format!("encoding failed: {e}")))?;
        write(path, &encoded_dot(&graph, &trace, "encoding"))?;
    }
    println!(
        "{} nodes, {} edges, {} advice rules",
        g.initial.node_count(),
        g.initial.edge_count(),
        g.rules.len()
    );
    Ok(0)
}

fn cpa(
    cli: &Cli,
    file: &Path,
    mode: CpaMode,
    weaving: bool,
    format: Format,
    strict: bool,
    dot: Option<&Path>,
) -> Outcome {
    let (d, _) = open(file)?;
    let report: CpaReport = if weaving {
        if matches!(mode, CpaMode::Dependencies) {
            return Err(fail(USAGE, "--weaving supports only --mode conflicts"));
        }
        analyze_weaving(&d).map_err(|e| fail(INVALID, format!("analysis failed: {e}")))?
    } else {
        let r = match mode {
            CpaMode::Conflicts => analyze_conflicts(&d.base),
            CpaMode::Dependencies => analyze_dependencies(&d.base),
        };
        r.map_err(|e| fail(INVALID, format!("analysis failed: {e}")))?
    };
    match format {
        Format::Table => print!("{}", report.to_table()),
        Format::Json => print!("{}", json(cli, ReportKind::Cpa, &report)),
    }
    if let Some(path) = dot {
        write(path, &report_dot(&report))?;
    }
    if report.truncated() {
        eprintln!("warning: overlap enumeration hit the bound; counts are lower bounds");
    }
    if weaving {
        let verdict = cross_aspect_interference(&report, &d);
        if format == Format::Table {
            println!("{verdict}");
        }
        if strict && !verdict.order_independent {
            return Ok(INTERFERENCE);
        }
    }
    Ok(0)
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn commute(cli: &Cli, file: &Path, format: Format) -> Outcome {
    let (d, _) = open(file)?;
    let names: Vec<String> = d.aspects.iter().map(|a| a.name.clone()).collect();
    let orders = permutations(&names);
    let mut grammars = Vec::with_capacity(orders.len());
    for order in &orders {
        let refs: Vec<&str> = order.iter().map(String::as_str).collect();
        grammars.push(
            weave_in_order(&d, &refs).map_err(|e| fail(INVALID, format!("weaving failed: {e}")))?,
        );
    }
    let witness = (1..grammars.len())
        .find(|&i| !grammars_isomorphic(&grammars[0], &grammars[i]))
        .map(|i| (0, i));
    let summary = CommuteSummary {
        rule_counts: grammars.iter().map(|g| g.rules.len()).collect(),
        orders,
        agree: witness.is_none(),
        witness,
    };
    match format {
        Format::Json => print!("{}", json(cli, ReportKind::Commute, &summary)),
        Format::Table => {
            for (o, n) in summary.orders.iter().zip(&summary.rule_counts) {
                println!("[{}] {n} rules", o.join(", "));
            }
            match summary.witness {
                None => println!("orders agree"),
                Some((a, b)) => println!(
                    "orders disagree: [{}] vs [{}]",
                    summary.orders[a].join(", "),
                    summary.orders[b].join(", ")
                ),
            }
        }
    }
    Ok(if summary.agree { 0 } else { INTERFERENCE })
}
