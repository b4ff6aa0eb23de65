//! Command-line front end: width computation, TTN construction, measurement
//! simulation, and the cross-stack verification report.
//!
//! Every run echoes its resolved configuration: stdout gets a `# config:`
//! line, tree files carry it as a trailing comment, TTN files embed it in
//! their `config` field, and simulation streams emit it as the first record.
//! Outputs are byte-identical for identical inputs, flags, and seed.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 size refusal,
//! 3 verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dense::{self, C64};
use crate::error::{domain, Error, Result};
use crate::graph::{Graph, SubcubicTree};
use crate::mqc::{self, MeasurementProgram, OutcomeSource};
use crate::rankwidth;
use crate::stabilizer;
use crate::ttn::{self, TreeTensorNetwork};

#[derive(Parser, Debug)]
#[command(
    name = "entwidth",
    version,
    about = "Entanglement-width measures, tree tensor networks, and measurement simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the rank width of a graph and a subcubic tree achieving it.
    Rankwidth(RankwidthArgs),
    /// Build the normal-form TTN of a graph state or dense statevector.
    TtnBuild(TtnBuildArgs),
    /// Run an adaptive single-qubit measurement program on a TTN.
    Simulate(SimulateArgs),
    /// Cross-check amplitudes, cut ranks, TTN round trip, and widths.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RankwidthArgs {
    /// Graph file: "n m" header, then one "a b" edge per line.
    graph: PathBuf,
    /// Force the exhaustive search (refused above --limit).
    #[arg(long, conflicts_with = "heuristic")]
    exact: bool,
    /// Force the greedy pairing heuristic (upper bound only).
    #[arg(long)]
    heuristic: bool,
    /// Vertex-count ceiling for the exhaustive search.
    #[arg(long, default_value_t = rankwidth::DEFAULT_EXACT_LIMIT)]
    limit: usize,
    /// Write the witness tree here (tree file format).
    #[arg(long)]
    tree_out: Option<PathBuf>,
    /// Worker threads for the exhaustive search.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct TtnBuildArgs {
    /// Graph file or statevector JSON (detected by content).
    input: PathBuf,
    /// Tree file to use; computed when omitted.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Write the TTN JSON here (default: stdout log only mentions D).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Dense-size ceiling (qubits) for construction.
    #[arg(long, default_value_t = ttn::DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    /// Ceiling for the exhaustive tree search when computing a tree.
    #[arg(long, default_value_t = rankwidth::DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    /// Worker threads for the tree search.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TTN JSON file or graph file (detected by content).
    input: PathBuf,
    /// Measurement program JSON.
    #[arg(long)]
    program: PathBuf,
    /// Seed for the per-shot ChaCha12 streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    shots: usize,
    /// Re-run each shot on the dense oracle with forced outcomes and print
    /// the maximal step-probability discrepancy.
    #[arg(long)]
    oracle: bool,
    /// Write the record stream here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for independent shots.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Dense-size ceiling (qubits) for graph input and the oracle.
    #[arg(long, default_value_t = ttn::DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Graph file.
    graph: PathBuf,
    /// Vertex ceiling for the dense cross-checks.
    #[arg(long, default_value_t = 8)]
    limit: usize,
}

/// Resolved configuration echoed into every output.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    command: String,
    inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_limit: Option<usize>,
    threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
}

impl RunConfig {
    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut impl std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error; usage errors are 1
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = write!(out, "{e}");
            return if is_help { 0 } else { 1 };
        }
    };
    let outcome = match cli.command {
        Command::Rankwidth(a) => cmd_rankwidth(&a, out),
        Command::TtnBuild(a) => cmd_ttn_build(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Size(_) => 2,
                _ => 1,
            }
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn cmd_rankwidth(args: &RankwidthArgs, out: &mut impl std::io::Write) -> Result<i32> {
    let g = Graph::from_text(&read_to_string(&args.graph)?)?;
    let n = g.vertex_count();
    let use_exact = if args.heuristic {
        false
    } else {
        args.exact || n <= args.limit
    };
    let config = RunConfig {
        command: "rankwidth".into(),
        inputs: vec![args.graph.display().to_string()],
        seed: None,
        shots: None,
        exact: Some(use_exact),
        limit: Some(args.limit),
        dense_limit: None,
        threads: args.threads,
        output: args.tree_out.as_ref().map(|p| p.display().to_string()),
    };
    writeln!(out, "# config: {}", config.to_json())?;

    if n < 2 {
        // width measures of an empty or single-vertex system are zero and
        // no subcubic tree exists
        writeln!(out, "width 0 exact")?;
        return Ok(0);
    }
    let result = if use_exact {
        rankwidth::rank_width_exact_with(&g, args.limit, args.threads)?
    } else {
        rankwidth::rank_width_heuristic(&g)?
    };
    writeln!(
        out,
        "width {} {}",
        result.width,
        if result.exact { "exact" } else { "heuristic" }
    )?;
    if let Some(path) = &args.tree_out {
        let mut text = result.tree.to_text();
        writeln!(text, "# config: {}", config.to_json()).expect("string write");
        std::fs::write(path, text)?;
        writeln!(out, "tree written to {}", path.display())?;
    }
    Ok(0)
}

enum BuildInput {
    Graph(Graph),
    State(Vec<C64>),
}

fn detect_build_input(text: &str) -> Result<BuildInput> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        Ok(BuildInput::State(ttn::statevector_from_json(text)?))
    } else {
        Ok(BuildInput::Graph(Graph::from_text(text)?))
    }
}

fn cmd_ttn_build(args: &TtnBuildArgs, out: &mut impl std::io::Write) -> Result<i32> {
    let input = detect_build_input(&read_to_string(&args.input)?)?;
    let n = match &input {
        BuildInput::Graph(g) => g.vertex_count(),
        BuildInput::State(psi) => dense::num_qubits(psi.len())?,
    };
    if n < 2 {
        return Err(domain(format!(
            "TTN construction needs at least 2 parties, got {n}"
        )));
    }
    let config = RunConfig {
        command: "ttn-build".into(),
        inputs: vec![args.input.display().to_string()],
        seed: None,
        shots: None,
        exact: None,
        limit: Some(args.exact_limit),
        dense_limit: Some(args.dense_limit),
        threads: args.threads,
        output: args.output.as_ref().map(|p| p.display().to_string()),
    };
    writeln!(out, "# config: {}", config.to_json())?;

    let (tree, tree_source) = match &args.tree {
        Some(path) => (SubcubicTree::from_text(&read_to_string(path)?)?, "provided"),
        None => match &input {
            BuildInput::Graph(g) => {
                if n <= args.exact_limit {
                    (
                        rankwidth::rank_width_exact_with(g, args.exact_limit, args.threads)?.tree,
                        "exact",
                    )
                } else {
                    (rankwidth::rank_width_heuristic(g)?.tree, "heuristic")
                }
            }
            BuildInput::State(psi) => {
                if n <= ttn::DEFAULT_EXHAUSTIVE_LIMIT {
                    (ttn::chi_width_dense(psi)?.tree, "exact")
                } else {
                    (SubcubicTree::caterpillar(n)?, "heuristic")
                }
            }
        },
    };
    writeln!(out, "tree: {tree_source}")?;

    let network = match &input {
        BuildInput::Graph(g) => ttn::build_ttn_graph_state_limited(g, &tree, args.dense_limit)?,
        BuildInput::State(psi) => {
            if n > args.dense_limit {
                return Err(crate::error::size(format!(
                    "dense construction refused for n={n} > limit {}",
                    args.dense_limit
                )));
            }
            ttn::build_ttn_from_state(psi, &tree)?
        }
    };
    writeln!(out, "D = {}", network.dimension())?;
    for (&(u, v), &d) in network.bond_dims() {
        writeln!(out, "bond {u}-{v} dim {d}")?;
    }
    if let Some(path) = &args.output {
        let json = network.to_json(Some(serde_json::to_value(&config)?))?;
        std::fs::write(path, json)?;
        writeln!(out, "ttn written to {}", path.display())?;
    }
    Ok(0)
}

enum SimInput {
    Ttn(TreeTensorNetwork),
    Graph(Graph),
}

fn cmd_simulate(args: &SimulateArgs, out: &mut impl std::io::Write) -> Result<i32> {
    let text = read_to_string(&args.input)?;
    let input = if text.trim_start().starts_with('{') {
        SimInput::Ttn(TreeTensorNetwork::from_json(&text)?)
    } else {
        SimInput::Graph(Graph::from_text(&text)?)
    };
    let prog = MeasurementProgram::from_json(&read_to_string(&args.program)?)?;
    let config = RunConfig {
        command: "simulate".into(),
        inputs: vec![
            args.input.display().to_string(),
            args.program.display().to_string(),
        ],
        seed: Some(args.seed),
        shots: Some(args.shots),
        exact: None,
        limit: None,
        dense_limit: Some(args.dense_limit),
        threads: args.threads,
        output: args.output.as_ref().map(|p| p.display().to_string()),
    };

    let (network, oracle_state): (TreeTensorNetwork, Option<Vec<C64>>) = match input {
        SimInput::Ttn(t) => {
            let oracle_state = if args.oracle {
                let n_open = (0..t.leaf_count()).filter(|&q| t.leaf_dim(q) == 2).count();
                if n_open > args.dense_limit || n_open != t.leaf_count() {
                    return Err(crate::error::size(
                        "oracle needs a fresh TTN within the dense limit".to_string(),
                    ));
                }
                Some(t.contract_full()?)
            } else {
                None
            };
            (t, oracle_state)
        }
        SimInput::Graph(g) => {
            let n = g.vertex_count();
            if n > args.dense_limit {
                return Err(crate::error::size(format!(
                    "graph input needs dense construction; n={n} > limit {}",
                    args.dense_limit
                )));
            }
            let tree = if n <= rankwidth::DEFAULT_EXACT_LIMIT {
                rankwidth::rank_width_exact_with(&g, rankwidth::DEFAULT_EXACT_LIMIT, args.threads)?
                    .tree
            } else {
                rankwidth::rank_width_heuristic(&g)?.tree
            };
            let t = ttn::build_ttn_graph_state_limited(&g, &tree, args.dense_limit)?;
            let oracle_state = args
                .oracle
                .then(|| stabilizer::graph_state_dense(&g));
            (t, oracle_state)
        }
    };

    let records = mqc::run_program(&network, &prog, args.seed, args.shots, args.threads)?;
    let mut stream = String::new();
    writeln!(stream, "{}", config.to_json()).expect("string write");
    for r in &records {
        writeln!(stream, "{}", serde_json::to_string(r)?).expect("string write");
    }
    match &args.output {
        Some(path) => {
            std::fs::write(path, &stream)?;
            writeln!(out, "# config: {}", config.to_json())?;
            writeln!(out, "records written to {}", path.display())?;
        }
        None => {
            write!(out, "{stream}")?;
        }
    }

    if let Some(psi) = oracle_state {
        let mut max_discrepancy = 0.0f64;
        for r in &records {
            let forced: Vec<u8> = r.outcomes.bytes().map(|b| b - b'0').collect();
            let (orec, _) = mqc::oracle_run(
                &psi,
                &prog,
                OutcomeSource::Forced(&forced),
                r.seed,
                r.shot,
            )?;
            for (p, q) in r.step_probabilities.iter().zip(&orec.step_probabilities) {
                max_discrepancy = max_discrepancy.max((p - q).abs());
            }
        }
        writeln!(out, "oracle max step-probability discrepancy: {max_discrepancy:e}")?;
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs, out: &mut impl std::io::Write) -> Result<i32> {
    let g = Graph::from_text(&read_to_string(&args.graph)?)?;
    let n = g.vertex_count();
    let config = RunConfig {
        command: "verify".into(),
        inputs: vec![args.graph.display().to_string()],
        seed: None,
        shots: None,
        exact: None,
        limit: Some(args.limit),
        dense_limit: None,
        threads: 1,
        output: None,
    };
    writeln!(out, "# config: {}", config.to_json())?;
    if n > args.limit {
        return Err(crate::error::size(format!(
            "verify runs dense checks; n={n} > limit {}",
            args.limit
        )));
    }
    if n < 2 {
        writeln!(out, "all checks vacuous for n={n}")?;
        return Ok(0);
    }

    let mut all_ok = true;
    let mut report = |out: &mut dyn std::io::Write, name: &str, ok: bool, detail: String| {
        all_ok &= ok;
        writeln!(
            out,
            "{}: {name} ({detail})",
            if ok { "PASS" } else { "FAIL" }
        )
        .expect("report write");
    };

    // (i) amplitude formula vs stabilizer dense state
    let via_formula = stabilizer::graph_state_dense(&g);
    let via_stab = stabilizer::graph_state_stabilizer(&g).to_dense()?;
    let max_amp_err = via_formula
        .iter()
        .zip(&via_stab)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    report(
        out,
        "amplitude formula vs stabilizer state",
        max_amp_err < 1e-10,
        format!("max error {max_amp_err:.3e}"),
    );

    // (ii) cut rank vs dense Schmidt rank and entropy, all bipartitions
    let mut rank_ok = true;
    let mut entropy_err = 0.0f64;
    for part_bits in 1..(1usize << n) - 1 {
        let part: Vec<usize> = (0..n).filter(|q| (part_bits >> q) & 1 == 1).collect();
        let cr = g.cut_rank(&part)?;
        let dec = dense::schmidt(&via_formula, n, &part)?;
        if dec.rank() != 1 << cr {
            rank_ok = false;
        }
        entropy_err = entropy_err.max((dec.entropy() - cr as f64).abs());
    }
    report(
        out,
        "cut rank vs dense Schmidt rank/entropy",
        rank_ok && entropy_err < 1e-9,
        format!("max entropy error {entropy_err:.3e}"),
    );

    // (iii) TTN round trip
    let tree = rankwidth::rank_width_exact_with(&g, args.limit.max(n), 1)?.tree;
    let network = ttn::build_ttn_graph_state(&g, &tree)?;
    let fid = dense::fidelity(&network.contract_full()?, &via_formula);
    report(
        out,
        "TTN round-trip fidelity",
        fid >= 1.0 - 1e-9,
        format!("fidelity 1-{:.3e}", 1.0 - fid),
    );

    // (iv) rank width vs dense chi-width
    let rw = rankwidth::rank_width_exact_with(&g, args.limit.max(n), 1)?.width;
    let chi = ttn::chi_width_dense_limited(&via_formula, args.limit)?;
    report(
        out,
        "rank width vs dense chi-width",
        chi.max_rank == 1 << rw,
        format!("rwd {} vs max rank {}", rw, chi.max_rank),
    );

    writeln!(out, "{}", if all_ok { "verify: PASS" } else { "verify: FAIL" })?;
    Ok(if all_ok { 0 } else { 3 })
}
