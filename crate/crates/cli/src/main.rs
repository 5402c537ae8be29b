use clap::{Parser, ValueEnum};
use qaideal::aideal::{
    bulk_relations, certificate_json, classical_eliminate, classical_json, classical_to_string, element_json, eliminate,
    AIdealResult, ElimOptions, EliminationProblem,
};
use qaideal::compare::diff_fixture;
use qaideal::elim::ElimOrder;
use qaideal::invariants::{commutation_table, verify_generation, InvariantChart};
use qaideal::triangulation::{build_chart, parse_gluing, render_terms, ChartPresentation, Gen};
use qaideal::Error;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Worker count for the parallel row builder; defaults to all cores.
const WORKERS_VAR: &str = "QAIDEAL_WORKERS";

const EXIT_CHECK: u8 = 1;
const EXIT_IO: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Stage {
    Chart,
    Invariants,
    Bulk,
    Aideal,
    Classical,
    /// Compare derived chart data with the fixture's expected block.
    Diff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Order {
    YFirst,
    RFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "qaideal", about = "Quantum A-ideals from ideal triangulations")]
struct RunConfig {
    stage: Stage,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    max_degree: i64,
    #[arg(long)]
    min_degree: Option<i64>,
    /// Give up when a degree needs more rows than this.
    #[arg(long)]
    max_rows: Option<usize>,
    #[arg(long, value_enum, default_value_t = Order::YFirst)]
    elim_order: Order,
    /// Classical limit instead of the quantum ideal.
    #[arg(long)]
    classical: bool,
    #[arg(long)]
    emit_certificates: bool,
    /// Use the chart algebra printed in the fixture's expected block.
    #[arg(long)]
    reference: bool,
    /// Expected block to diff against, in place of the fixture's own.
    #[arg(long)]
    expected: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Io(String),
    Module(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e)
    }
}

struct Input {
    source: String,
    raw: Value,
}

fn read_json(path: &PathBuf) -> Result<Input, Failure> {
    let source = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let raw = serde_json::from_str(&source).map_err(|e| Error::MalformedInput(e.to_string()))?;
    Ok(Input { source, raw })
}

fn label(cfg: &RunConfig) -> String {
    cfg.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn chart_of(input: &Input) -> Result<ChartPresentation, Failure> {
    Ok(build_chart(&parse_gluing(&input.source)?)?)
}

fn chart_report(chart: &ChartPresentation) -> Value {
    let threads: Vec<String> =
        chart.atlas.basis.iter().filter(|g| matches!(g, Gen::Thread(..))).map(|g| g.name()).collect();
    let om = &chart.omega_prime.omega;
    let mut triples = Vec::new();
    for i in 0..om.len() {
        for j in i + 1..om.len() {
            if om[i][j] != 0 {
                triples.push(json!([i, j, om[i][j]]));
            }
        }
    }
    let checks = chart.gluing.checks(&chart.omega_prime);
    json!({
        "tetrahedra": chart.atlas.t,
        "rank": chart.rank(),
        "generators": chart.atlas.basis.iter().map(|g| g.name()).collect::<Vec<_>>(),
        "threads": threads,
        "omega_prime": triples,
        "gluing": chart.gluing_gens.iter().map(|g| json!({"terms": render_terms(&g.terms), "chi_half": g.chi_half})).collect::<Vec<_>>(),
        "unimodular": checks.unimodular,
        "central": checks.in_kernel,
    })
}

fn render_product(factors: &[(Gen, i64)]) -> String {
    let part = |(g, e): &(Gen, i64)| if *e == 1 { g.name() } else { format!("{}^{e}", g.name()) };
    factors.iter().map(part).collect::<Vec<_>>().join(" ")
}

fn invariants_report(inv: &InvariantChart) -> Value {
    let table = commutation_table(inv);
    json!({
        "generators": inv.generators.iter().map(|g| json!({
            "name": g.name,
            "family": format!("{:?}", g.family),
            "factors": render_product(&g.factors),
            "q_half": g.q_half,
            "value": g.value,
        })).collect::<Vec<_>>(),
        "generation": verify_generation(inv),
        "commutation": table.relations(1),
    })
}

fn problem(cfg: &RunConfig, input: &Input) -> Result<EliminationProblem, Failure> {
    let name = label(cfg);
    if let Some(chart) = input.raw.get("chart") {
        return Ok(EliminationProblem::from_chart(&name, chart)?);
    }
    if cfg.reference {
        let expected = input.raw.get("expected").ok_or_else(|| Error::MalformedInput("no expected block".into()))?;
        return Ok(EliminationProblem::printed(&name, expected)?);
    }
    let chart = chart_of(input)?;
    let inv = InvariantChart::build(&chart)?;
    Ok(EliminationProblem::derived(&name, &inv)?)
}

fn aideal_report(cfg: &RunConfig, p: &EliminationProblem, res: &AIdealResult) -> Value {
    let certificates: Vec<Value> =
        if cfg.emit_certificates { res.certificates.iter().map(|c| certificate_json(p, c)).collect() } else { vec![] };
    json!({
        "generators": res.generators.iter().map(|g| g.to_json()).collect::<Vec<_>>(),
        "display": res.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "certificates": certificates,
        "degree_bound_used": res.degree_bound_used,
        "stability_flag": res.stability_flag,
        "history": res.history,
    })
}

fn run(cfg: &RunConfig) -> Result<(Value, Vec<String>), Failure> {
    let input = read_json(&cfg.input)?;
    let stage = if cfg.classical && cfg.stage == Stage::Aideal { Stage::Classical } else { cfg.stage };
    let mut text = Vec::new();
    let report = match stage {
        Stage::Chart => {
            let r = chart_report(&chart_of(&input)?);
            text.push(format!("rank {} for {} tetrahedra", r["rank"], r["tetrahedra"]));
            let threads = r["threads"].as_array().unwrap();
            text.push(format!("{} threads", threads.len()));
            text.extend(threads.iter().map(|t| format!("  {}", t.as_str().unwrap())));
            text.push(format!("gluing generators: {}", r["gluing"].as_array().unwrap().len()));
            text.push(format!("unimodular {} central {}", r["unimodular"], r["central"]));
            r
        }
        Stage::Invariants => {
            let inv = InvariantChart::build(&chart_of(&input)?)?;
            let r = invariants_report(&inv);
            for g in &inv.generators {
                text.push(format!("{} = [{}] q^({}/2)", g.name, render_product(&g.factors), g.q_half));
            }
            text.push(format!("generation {}", r["generation"]));
            text.extend(commutation_table(&inv).render(1));
            if r["generation"] != json!(true) {
                return Err(Failure::Check("invariant generators do not span".into()));
            }
            r
        }
        Stage::Bulk => {
            let chart = chart_of(&input)?;
            let inv = InvariantChart::build(&chart)?;
            let rels = bulk_relations(&inv.chart)?;
            let p = EliminationProblem::derived(&label(cfg), &inv)?;
            for (i, b) in p.bulk.iter().enumerate() {
                text.push(format!("B{} ({} terms)", i + 1, b.len()));
            }
            json!({
                "generators": p.names,
                "relations": p.bulk.iter().map(|b| element_json(&p, b)).collect::<Vec<_>>(),
                "tetrahedra": rels.iter().map(|r| r.tet).collect::<Vec<_>>(),
            })
        }
        Stage::Aideal => {
            let p = problem(cfg, &input)?;
            let order = match cfg.elim_order {
                Order::YFirst => ElimOrder::YFirst,
                Order::RFirst => ElimOrder::RFirst,
            };
            let mut opts = ElimOptions { min_degree: cfg.min_degree, max_degree: cfg.max_degree, order, ..Default::default() };
            if let Some(n) = cfg.max_rows {
                opts.max_rows = n;
            }
            let quiet = cfg.quiet;
            let res = eliminate(&p, &opts, &mut |r| {
                if !quiet {
                    eprintln!("degree {}: {} rows, reduced dimension {}, {} generators", r.degree, r.rows, r.reduced_dim, r.generators);
                }
            })?;
            text.extend(res.generators.iter().map(|g| g.to_string()));
            text.push(format!("degree bound {} stable {}", res.degree_bound_used, res.stability_flag));
            aideal_report(cfg, &p, &res)
        }
        Stage::Classical => {
            let p = problem(cfg, &input)?;
            let ideal = classical_eliminate(&p)?;
            text.extend(ideal.generators.iter().map(classical_to_string));
            json!({
                "generators": ideal.generators.iter().map(classical_json).collect::<Vec<_>>(),
                "display": ideal.generators.iter().map(classical_to_string).collect::<Vec<_>>(),
            })
        }
        Stage::Diff => {
            let expected = cfg.expected.as_ref().map(read_json).transpose()?;
            let expected = expected.map(|e| e.raw.get("expected").cloned().unwrap_or(e.raw));
            let d = diff_fixture(&input.source, expected.as_ref())?;
            for c in &d.checks {
                text.push(format!("{} {}: {}", if c.ok { "ok  " } else { "DIFF" }, c.item, c.detail));
            }
            if let Some(c) = d.first_divergence() {
                text.push(format!("first divergence: {}", c.item));
                if !d.advisory {
                    print_report(cfg, &json!(d), &text);
                    return Err(Failure::Check(format!("first divergence at {}", c.item)));
                }
                text.push("advisory fixture, divergence not fatal".into());
            }
            json!(d)
        }
    };
    Ok((report, text))
}

fn print_report(cfg: &RunConfig, report: &Value, text: &[String]) {
    let mut out = std::io::stdout().lock();
    // a closed pipe is not an error
    let _ = match cfg.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(report).unwrap()),
        Format::Text => text.iter().try_for_each(|l| writeln!(out, "{l}")),
    };
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if let Some(n) = std::env::var(WORKERS_VAR).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    match run(&cfg) {
        Ok((mut report, text)) => {
            if let Value::Object(m) = &mut report {
                m.insert("wall_time".into(), json!(start.elapsed().as_secs_f64()));
            }
            print_report(&cfg, &report, &text);
            ExitCode::SUCCESS
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Check(e)) => {
            eprintln!("check failed: {e}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Module(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
