use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;

use crpblocks::crp::Rng;
use crpblocks::evalkit::{self, EvalConfig};
use crpblocks::genmodel::{self, GroundTruth};
use crpblocks::gibbs::{
    self, load_checkpoint, save_checkpoint, FitConfig, HyperParams, Model, Sampler, SeatingState, TRACE_HEADER,
};
use crpblocks::netcore::{
    self, degree_stats, load_edge_list, load_edge_list_with, load_labels, save_edge_list, save_labels, LoadedGraph,
    MultiGraph, SplitSpec, Vocabulary, WeightMode,
};
use crpblocks::Error;

use crate::config::{KeySpec, Reader, Resolved};
use crate::{EvalArgs, FitArgs, GenerateArgs, HyperArgs, SplitArgs, SummarizeArgs};

const HYPER_KEYS: [KeySpec; 5] = [
    ("tau-pair", "100"),
    ("tau-block", "10"),
    ("gamma-block", "10"),
    ("tau-node", "10"),
    ("gamma-node", "10"),
];

fn with_hyper(keys: &[KeySpec]) -> Vec<KeySpec> {
    keys.iter().copied().chain(HYPER_KEYS).collect()
}

fn hyper(rd: &mut Reader) -> Option<HyperParams> {
    let hp = HyperParams {
        tau_pair: rd.parse("tau-pair")?,
        tau_block: rd.parse("tau-block")?,
        gamma_block: rd.parse("gamma-block")?,
        tau_node: rd.parse("tau-node")?,
        gamma_node: rd.parse("gamma-node")?,
    };
    if let Err(e) = hp.validate() {
        rd.fail(e.to_string());
    }
    Some(hp)
}

fn flags_with_hyper(mut flags: Vec<(&'static str, Option<String>)>, h: &HyperArgs) -> Vec<(&'static str, Option<String>)> {
    flags.extend(h.flags());
    flags
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn load_graph(path: &Path, mode: WeightMode, labels: Option<&Path>, grow: bool) -> Result<LoadedGraph> {
    let loaded = match labels {
        Some(l) => load_edge_list_with(path, mode, load_labels(l)?, grow)?,
        None => load_edge_list(path, mode)?,
    };
    Ok(loaded)
}

// ----- generate -------------------------------------------------------------

const GENERATE_KEYS: &[KeySpec] = &[
    ("out", ""),
    ("seed", "0"),
    ("preset", ""),
    ("model", ""),
    ("edges", "1000"),
];

pub fn generate(a: GenerateArgs) -> Result<()> {
    let flags = vec![
        ("out", a.out),
        ("seed", a.seed),
        ("preset", a.preset),
        ("model", a.model),
        ("edges", a.edges),
    ];
    let mut cfg = Resolved::resolve(
        "generate",
        &with_hyper(GENERATE_KEYS),
        a.config.as_deref(),
        flags_with_hyper(flags, &a.hyper),
    )?;
    if !cfg.is_set("model") && !cfg.is_set("preset") {
        cfg.set("preset", "paper-like");
    }
    let mut rd = Reader::new(&cfg);
    let out = rd.path("out");
    let seed: Option<u64> = rd.parse("seed");
    let model: Option<Option<Model>> = rd.optional("model");
    let edges: Option<usize> = rd.parse("edges");
    let hp = hyper(&mut rd);
    if cfg.is_set("model") && cfg.is_set("preset") {
        rd.fail("give either preset or model, not both");
    }
    if edges == Some(0) {
        rd.fail("edges must be at least 1");
    }
    rd.finish()?;
    let (out, seed, model, edges, hp) = (out.unwrap(), seed.unwrap(), model.unwrap(), edges.unwrap(), hp.unwrap());
    create_dir(&out)?;

    let graph = match model {
        None => {
            let name = cfg.raw("preset");
            let (graph, truth) = genmodel::make_synthetic_benchmark(name, seed)?;
            write_truth(&out, &truth)?;
            graph
        }
        Some(model) => {
            let mut rng = Rng::named(seed, "generate");
            let draw = match model {
                Model::Ndmdnd => genmodel::gen_ndmdnd(&hp, edges, &mut rng)?,
                Model::Mdnd => genmodel::gen_mdnd(&hp, edges, &mut rng)?,
            };
            genmodel::save_assignments(out.join("assignments.tsv"), &draw)?;
            let blocks: Vec<(u32, u32)> = (0..draw.graph.num_edges()).map(|i| draw.edge_blocks(i)).collect();
            genmodel::save_edge_truth(out.join("edge_truth.tsv"), &blocks)?;
            draw.graph
        }
    };
    let vocab = Vocabulary::numeric(graph.num_nodes());
    save_edge_list(out.join("edges.tsv"), &graph, &vocab)?;
    save_labels(out.join("labels.tsv"), &vocab)?;
    cfg.save(&out)?;
    println!(
        "nodes {} edges {} distinct {} density {:.4}",
        graph.num_nodes(),
        graph.num_edges(),
        graph.num_unique_edges(),
        graph.density()
    );
    Ok(())
}

fn write_truth(out: &Path, truth: &GroundTruth) -> Result<()> {
    genmodel::save_edge_truth(out.join("edge_truth.tsv"), &truth.edge_blocks)?;
    if let Some(b) = &truth.block_of_node {
        genmodel::save_node_truth(out.join("node_truth.tsv"), b)?;
    }
    Ok(())
}

// ----- split ----------------------------------------------------------------

const SPLIT_KEYS: &[KeySpec] = &[
    ("input", ""),
    ("labels", ""),
    ("weight-mode", "multiplicity"),
    ("train-fraction", "0.8"),
    ("seed", "0"),
    ("out", ""),
];

pub fn split(a: SplitArgs) -> Result<()> {
    let cfg = Resolved::resolve(
        "split",
        SPLIT_KEYS,
        a.config.as_deref(),
        vec![
            ("input", a.input),
            ("labels", a.labels),
            ("weight-mode", a.weight_mode),
            ("train-fraction", a.train_fraction),
            ("seed", a.seed),
            ("out", a.out),
        ],
    )?;
    let mut rd = Reader::new(&cfg);
    let input = rd.path("input");
    let out = rd.path("out");
    let labels = rd.optional_path("labels");
    let mode: Option<WeightMode> = rd.parse("weight-mode");
    let fraction: Option<f64> = rd.parse("train-fraction");
    let seed: Option<u64> = rd.parse("seed");
    rd.finish()?;
    let (input, out) = (input.unwrap(), out.unwrap());

    let loaded = load_graph(&input, mode.unwrap(), labels.as_deref(), false)?;
    let spec = SplitSpec {
        train_fraction: fraction.unwrap(),
        seed: seed.unwrap(),
    };
    let (train, test) = netcore::split_edges(&loaded.graph, spec)?;
    create_dir(&out)?;
    save_edge_list(out.join("train.tsv"), &train, &loaded.vocab)?;
    save_edge_list(out.join("test.tsv"), &test, &loaded.vocab)?;
    save_labels(out.join("labels.tsv"), &loaded.vocab)?;
    cfg.save(&out)?;
    println!(
        "train {} edges ({} distinct), test {} edges ({} distinct)",
        train.num_edges(),
        train.num_unique_edges(),
        test.num_edges(),
        test.num_unique_edges()
    );
    Ok(())
}

// ----- fit ------------------------------------------------------------------

const FIT_KEYS: &[KeySpec] = &[
    ("train", ""),
    ("labels", ""),
    ("weight-mode", "multiplicity"),
    ("out", ""),
    ("model", "ndmdnd"),
    ("epochs", "1000"),
    ("burn-in", "500"),
    ("thin", "10"),
    ("chains", "1"),
    ("seed", "0"),
    ("checkpoint-every", "100"),
    ("top", "10"),
];

struct ChainPlan<'a> {
    graph: &'a MultiGraph,
    hp: HyperParams,
    model: Model,
    cfg: FitConfig,
    checkpoint_every: u64,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn run_chain(plan: &ChainPlan, chain: usize, dir: &Path) -> Result<SeatingState> {
    create_dir(dir)?;
    let rng = Rng::named(plan.cfg.seed, &format!("chain-{chain}"));
    let mut sampler = Sampler::new(plan.graph, plan.hp, plan.model, &plan.cfg, rng)?;
    let trace_path = dir.join("trace.csv");
    let file = fs::File::create(&trace_path).map_err(io_err(&trace_path))?;
    let mut trace = BufWriter::new(file);
    writeln!(trace, "{TRACE_HEADER}").map_err(io_err(&trace_path))?;
    let epochs = plan.cfg.epochs;
    gibbs::run(&mut sampler, &plan.cfg, |s, row| {
        gibbs::write_trace_row(&mut trace, row).map_err(io_err(&trace_path))?;
        if plan.cfg.keeps(row.epoch) {
            save_checkpoint(dir.join(format!("snapshot-{:06}.ckpt", row.epoch)), &s.checkpoint())?;
        }
        if row.epoch % plan.checkpoint_every == 0 || row.epoch == epochs {
            save_checkpoint(dir.join("checkpoint.ckpt"), &s.checkpoint())?;
        }
        if row.epoch % 100 == 0 {
            info!(
                "chain {chain} epoch {}: {} blocks, {} pair tables, log-score {:.3}",
                row.epoch, row.num_blocks, row.num_pair_tables, row.log_score
            );
        }
        Ok(())
    })?;
    trace.flush().map_err(io_err(&trace_path))?;
    Ok(sampler.into_state())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let flags = vec![
        ("train", a.train),
        ("labels", a.labels),
        ("weight-mode", a.weight_mode),
        ("out", a.out),
        ("model", a.model),
        ("epochs", a.epochs),
        ("burn-in", a.burn_in),
        ("thin", a.thin),
        ("chains", a.chains),
        ("seed", a.seed),
        ("checkpoint-every", a.checkpoint_every),
        ("top", a.top),
    ];
    let cfg = Resolved::resolve("fit", &with_hyper(FIT_KEYS), a.config.as_deref(), flags_with_hyper(flags, &a.hyper))?;
    let mut rd = Reader::new(&cfg);
    let train = rd.path("train");
    let out = rd.path("out");
    let labels = rd.optional_path("labels");
    let mode: Option<WeightMode> = rd.parse("weight-mode");
    let model: Option<Model> = rd.parse("model");
    let epochs: Option<u64> = rd.parse("epochs");
    let burn_in: Option<u64> = rd.parse("burn-in");
    let thin: Option<u64> = rd.parse("thin");
    let chains: Option<usize> = rd.parse("chains");
    let seed: Option<u64> = rd.parse("seed");
    let every: Option<u64> = rd.parse("checkpoint-every");
    let top: Option<usize> = rd.parse("top");
    let hp = hyper(&mut rd);
    if epochs == Some(0) {
        rd.fail("epochs must be at least 1");
    }
    if thin == Some(0) {
        rd.fail("thin must be at least 1");
    }
    if chains == Some(0) {
        rd.fail("chains must be at least 1");
    }
    if every == Some(0) {
        rd.fail("checkpoint-every must be at least 1");
    }
    if let (Some(e), Some(b)) = (epochs, burn_in) {
        if b > e {
            rd.fail(format!("burn-in {b} exceeds epochs {e}"));
        }
    }
    rd.finish()?;
    let fit_cfg = FitConfig {
        epochs: epochs.unwrap(),
        burn_in: burn_in.unwrap(),
        thin: thin.unwrap(),
        seed: seed.unwrap(),
        ..FitConfig::default()
    };
    let (train, out) = (train.unwrap(), out.unwrap());

    let loaded = load_graph(&train, mode.unwrap(), labels.as_deref(), false)?;
    if loaded.graph.is_empty() {
        bail!(Error::Config(format!("{} has no edges", train.display())));
    }
    create_dir(&out)?;
    cfg.save(&out)?;
    save_labels(out.join("labels.tsv"), &loaded.vocab)?;

    let plan = ChainPlan {
        graph: &loaded.graph,
        hp: hp.unwrap(),
        model: model.unwrap(),
        cfg: fit_cfg,
        checkpoint_every: every.unwrap(),
    };
    let chains = chains.unwrap();
    let finals: Vec<Result<SeatingState>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|c| {
                let plan = &plan;
                let dir = out.join(format!("chain-{c}"));
                scope.spawn(move || run_chain(plan, c, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let finals: Vec<SeatingState> = finals.into_iter().collect::<Result<_>>()?;

    let summary_dir = out.join("summary");
    create_dir(&summary_dir)?;
    let summary = evalkit::block_summary(&finals[0], top.unwrap());
    evalkit::save_block_matrix(summary_dir.join("block_matrix.csv"), &summary)?;
    evalkit::save_top_nodes(summary_dir.join("top_nodes.csv"), &summary, Some(&loaded.vocab))?;
    for (c, st) in finals.iter().enumerate() {
        println!(
            "chain {c}: {} blocks, {} pair tables, log-score {:.3}",
            st.num_blocks(),
            st.num_pair_tables(),
            st.log_score()
        );
    }
    Ok(())
}

// ----- eval -----------------------------------------------------------------

const EVAL_KEYS: &[KeySpec] = &[
    ("snapshots", ""),
    ("test", ""),
    ("labels", ""),
    ("weight-mode", "multiplicity"),
    ("negatives", "all"),
    ("self-loops", "true"),
    ("seed", "0"),
    ("out", ""),
];

fn is_snapshot(p: &Path) -> bool {
    p.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with("snapshot-") && n.ends_with(".ckpt"))
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        out.push(entry.map_err(io_err(dir))?.path());
    }
    out.sort();
    Ok(out)
}

/// Snapshot files under a fit directory (its `chain-*` subdirectories
/// included), or the single file given.
fn snapshot_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for p in list_dir(path)? {
        if p.is_dir() {
            files.extend(list_dir(&p)?.into_iter().filter(|f| is_snapshot(f)));
        } else if is_snapshot(&p) {
            files.push(p);
        }
    }
    if files.is_empty() {
        bail!(Error::Eval(format!("no snapshot-*.ckpt files under {}", path.display())));
    }
    Ok(files)
}

fn find_labels(explicit: Option<PathBuf>, near: &Path) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    let mut dir = if near.is_file() { near.parent() } else { Some(near) };
    for _ in 0..2 {
        if let Some(d) = dir {
            let candidate = d.join("labels.tsv");
            if candidate.is_file() {
                return Ok(candidate);
            }
            dir = d.parent();
        }
    }
    bail!(Error::Config(format!(
        "no labels.tsv found near {}; pass --labels",
        near.display()
    )))
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let cfg = Resolved::resolve(
        "eval",
        EVAL_KEYS,
        a.config.as_deref(),
        vec![
            ("snapshots", a.snapshots),
            ("test", a.test),
            ("labels", a.labels),
            ("weight-mode", a.weight_mode),
            ("negatives", a.negatives),
            ("self-loops", a.self_loops),
            ("seed", a.seed),
            ("out", a.out),
        ],
    )?;
    let mut rd = Reader::new(&cfg);
    let snapshots = rd.path("snapshots");
    let test = rd.path("test");
    let out = rd.path("out");
    let labels = rd.optional_path("labels");
    let mode: Option<WeightMode> = rd.parse("weight-mode");
    let negatives: Option<Option<usize>> = if cfg.raw("negatives") == "all" {
        Some(None)
    } else {
        rd.parse("negatives").map(Some)
    };
    let self_loops: Option<bool> = rd.parse("self-loops");
    let seed: Option<u64> = rd.parse("seed");
    rd.finish()?;
    let (snapshots, test, out) = (snapshots.unwrap(), test.unwrap(), out.unwrap());

    let labels = find_labels(labels, &snapshots)?;
    let vocab = load_labels(&labels)?;
    let files = snapshot_files(&snapshots)?;
    let states: Vec<SeatingState> = files
        .iter()
        .map(|f| load_checkpoint(f).map(|c| c.state).with_context(|| format!("loading {}", f.display())))
        .collect::<Result<_>>()?;
    let train = states[0].graph();
    if states.iter().any(|s| s.num_edges() != train.num_edges()) {
        bail!(Error::Eval("snapshots were fitted on different graphs".into()));
    }
    if train.num_nodes() != vocab.len() {
        bail!(Error::Config(format!(
            "{} lists {} nodes but the snapshots have {}",
            labels.display(),
            vocab.len(),
            train.num_nodes()
        )));
    }
    let test = load_edge_list_with(&test, mode.unwrap(), vocab, true)?;
    if test.graph.is_empty() {
        bail!(Error::Eval("test set is empty".into()));
    }
    let mut all_edges = train.edges().to_vec();
    all_edges.extend_from_slice(test.graph.edges());
    let full = MultiGraph::new(test.vocab.len(), all_edges)?;
    let eval_cfg = EvalConfig {
        negatives: negatives.unwrap(),
        self_loops: self_loops.unwrap(),
        seed: seed.unwrap(),
    };
    let (report, scores) = evalkit::evaluate(&states, &test.graph, &full, &eval_cfg)?;
    create_dir(&out)?;
    evalkit::save_scores(out.join("scores.csv"), &scores, Some(&test.vocab))?;
    evalkit::save_report(out.join("report.txt"), &report)?;
    cfg.save(&out)?;
    println!("{report}");
    println!("snapshots\t{}", states.len());
    Ok(())
}

// ----- summarize ------------------------------------------------------------

const SUMMARIZE_KEYS: &[KeySpec] = &[
    ("checkpoint", ""),
    ("labels", ""),
    ("truth", ""),
    ("top", "10"),
    ("out", ""),
];

pub fn summarize(a: SummarizeArgs) -> Result<()> {
    let cfg = Resolved::resolve(
        "summarize",
        SUMMARIZE_KEYS,
        a.config.as_deref(),
        vec![
            ("checkpoint", a.checkpoint),
            ("labels", a.labels),
            ("truth", a.truth),
            ("top", a.top),
            ("out", a.out),
        ],
    )?;
    let mut rd = Reader::new(&cfg);
    let ckpt = rd.path("checkpoint");
    let out = rd.path("out");
    let labels = rd.optional_path("labels");
    let truth = rd.optional_path("truth");
    let top: Option<usize> = rd.parse("top");
    rd.finish()?;
    let (ckpt, out) = (ckpt.unwrap(), out.unwrap());

    let state = load_checkpoint(&ckpt)?.state;
    let vocab = match labels {
        Some(p) => Some(load_labels(p)?),
        None => None,
    };
    let summary = evalkit::block_summary(&state, top.unwrap());
    let deg = degree_stats(&state.graph());
    create_dir(&out)?;
    evalkit::save_block_matrix(out.join("block_matrix.csv"), &summary)?;
    evalkit::save_top_nodes(out.join("top_nodes.csv"), &summary, vocab.as_ref())?;
    evalkit::save_degree_csv(out.join("degree.csv"), &deg)?;
    evalkit::save_degree_svg(out.join("degree.svg"), &deg)?;
    println!(
        "blocks {} pair tables {} edges {} max degree {}",
        state.num_blocks(),
        state.num_pair_tables(),
        state.num_edges(),
        deg.max_degree().unwrap_or(0)
    );
    if let Some(t) = truth {
        let truth = GroundTruth {
            edge_blocks: genmodel::load_edge_truth(&t)?,
            node_props: Vec::new(),
            block_of_node: None,
        };
        let ari = evalkit::recovery_score(std::slice::from_ref(&state), &truth)?;
        fs::write(out.join("recovery.txt"), format!("ari\t{ari:.6}\n")).map_err(io_err(&out))?;
        println!("recovery ari {ari:.4}");
    }
    cfg.save(&out)?;
    Ok(())
}
