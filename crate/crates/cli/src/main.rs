use clap::{Args, Parser, Subcommand, ValueEnum};
use hypersparse::dynamic::DynamicSparsifier;
use hypersparse::generate::{gen_dynamic_stream, gen_online_lower_bound, gen_random_hypergraph};
use hypersparse::io::{parse_hypergraph, parse_stream, serialize_hypergraph, serialize_stream, Stream};
use hypersparse::online::OnlineSparsifier;
use hypersparse::report::{report_line, RunConfig, SEED_ENV};
use hypersparse::sketch::{HypergraphSketch, SketchMode};
use hypersparse::verify::{verify_spectral, VerificationReport};
use hypersparse::{sparsify, Engine, Hypergraph, SparsifierOutput};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "hypersparse", version, about = "Spectral hypergraph sparsification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Master seed (HYPERSPARSE_SEED overrides it)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Write JSON-lines report records here
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Hypergraph,
    Stream,
    Dynamic,
    LowerBound,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchMode {
    Static,
    Online,
    Dynamic,
    Sketch,
    Naive,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Vs,
    Spanner,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Vs => Engine::Vs,
            EngineArg::Spanner => Engine::Spanner,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random hypergraph or update stream
    Gen {
        #[arg(long, value_enum, default_value = "hypergraph")]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        min_arity: usize,
        #[arg(long, default_value_t = 6)]
        max_arity: usize,
        /// Deletions in a dynamic stream
        #[arg(long, default_value_t = 0)]
        deletes: usize,
        /// Rounds of the lower-bound stream
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Static sparsifier of a hypergraph file
    Sparsify {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "vs")]
        engine: EngineArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Insert-only stream; prints KEEP/DROP per insertion
    StreamOnline {
        input: PathBuf,
        /// Stream length used in the size formulas (default: inserts in the file)
        #[arg(long)]
        m_hint: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fully dynamic stream; prints the sparsifier changes per update
    StreamDynamic {
        input: PathBuf,
        #[arg(long)]
        m_cap: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build a linear sketch of a hypergraph
    SketchBuild {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        m_cap: Option<usize>,
        /// Unprojected baseline sketch
        #[arg(long)]
        naive: bool,
    },
    /// Apply a stream of inserts and deletes to a sketch
    SketchUpdate {
        sketch: PathBuf,
        stream: PathBuf,
        /// Defaults to overwriting the input sketch
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cell-wise sum of two sketches with equal seeds and dimensions
    SketchMerge {
        a: PathBuf,
        b: PathBuf,
        /// Defaults to overwriting the first sketch
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover a sparsifier from a sketch
    SketchRecover {
        sketch: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare a sparsifier against its source; exit 1 on failure
    Verify {
        original: PathBuf,
        sparsifier: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Generate, sparsify and verify one instance
    Bench {
        #[arg(long, value_enum, default_value = "static")]
        mode: BenchMode,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        min_arity: usize,
        #[arg(long, default_value_t = 6)]
        max_arity: usize,
        #[arg(long, value_enum, default_value = "vs")]
        engine: EngineArg,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

enum Fail {
    Usage(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn read(p: &Path) -> Res<String> {
    fs::read_to_string(p).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn read_hypergraph(p: &Path) -> Res<Hypergraph> {
    parse_hypergraph(&read(p)?).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn read_stream(p: &Path) -> Res<Stream> {
    parse_stream(&read(p)?).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn read_sketch(p: &Path) -> Res<HypergraphSketch> {
    let bytes = fs::read(p).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))?;
    HypergraphSketch::from_bytes(&bytes).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_bytes(p: &Path, bytes: &[u8]) -> Res<()> {
    fs::write(p, bytes).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn run_config(g: &Global, mode: &str) -> Res<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &g.config {
        cfg = cfg.apply_text(&read(p)?)?;
    }
    cfg.mode = mode.to_string();
    if let Some(e) = g.eps {
        cfg.eps = e;
    }
    if let Some(s) = g.seed {
        cfg.set_seed(s);
    }
    if let Ok(s) = std::env::var(SEED_ENV) {
        let s = s.trim().parse().map_err(|_| Fail::Usage(format!("{SEED_ENV} = `{s}` is not an integer")))?;
        cfg.set_seed(s);
    }
    cfg.check()?;
    Ok(cfg)
}

struct Reporter {
    path: Option<PathBuf>,
    lines: Vec<String>,
}

impl Reporter {
    fn push(&mut self, kind: &str, cfg: &RunConfig, result: &serde_json::Value, wall_ms: u128) {
        if self.path.is_some() {
            self.lines.push(report_line(kind, cfg, result, wall_ms));
        }
    }

    fn finish(self) -> Res<()> {
        if let Some(p) = self.path {
            let mut text = self.lines.join("\n");
            text.push('\n');
            fs::write(&p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

fn summary(out: &SparsifierOutput, m: usize) -> serde_json::Value {
    json!({ "m": m, "size": out.len(), "levels": out.levels, "residue": out.residue, "warnings": out.warnings })
}

fn check(rep: &VerificationReport) -> String {
    format!(
        "{} size {}/{} max_rel_error {:.4} {}",
        if rep.pass { "PASS" } else { "FAIL" },
        rep.sparsifier_size,
        rep.m,
        rep.max_rel_error,
        rep.checks.iter().map(|c| format!("{}={:.4}", c.name, c.max_rel_error)).collect::<Vec<_>>().join(" ")
    )
}

fn run(cli: Cli) -> Res<()> {
    let g = &cli.global;
    let mut rep = Reporter { path: g.report.clone(), lines: Vec::new() };
    let start = Instant::now();
    match cli.cmd {
        Cmd::Gen { kind, n, m, min_arity, max_arity, deletes, rounds, output } => {
            let cfg = run_config(g, "gen")?;
            let seed = cfg.seed();
            let text = match kind {
                GenKind::Hypergraph => serialize_hypergraph(&gen_random_hypergraph(n, m, min_arity, max_arity, seed)?),
                GenKind::Stream => {
                    serialize_stream(&Stream::from_hypergraph(&gen_random_hypergraph(n, m, min_arity, max_arity, seed)?))
                }
                GenKind::Dynamic => serialize_stream(&gen_dynamic_stream(n, m, deletes, min_arity, max_arity, seed)?),
                GenKind::LowerBound => serialize_stream(&gen_online_lower_bound(n, rounds, seed)?.stream),
            };
            emit(output.as_deref(), &text)?;
            rep.push("gen", &cfg, &json!({ "n": n, "m": m }), start.elapsed().as_millis());
        }
        Cmd::Sparsify { input, engine, output } => {
            let cfg = run_config(g, "static")?;
            let h = read_hypergraph(&input)?;
            let out = sparsify(&h, cfg.eps, &cfg.sparsify, engine.into())?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            emit(output.as_deref(), &serialize_hypergraph(&out.to_hypergraph(&h)?))?;
            rep.push("sparsify", &cfg, &summary(&out, h.len()), start.elapsed().as_millis());
        }
        Cmd::StreamOnline { input, m_hint, output } => {
            let cfg = run_config(g, "online")?;
            let st = read_stream(&input)?;
            let mut o = OnlineSparsifier::new(st.n, cfg.eps, m_hint.unwrap_or(st.insert_count()), &cfg.sparsify)?;
            o.run(&st)?;
            let log: String = o.decisions().iter().map(|d| format!("{d}\n")).collect();
            let out = o.finalize();
            let source = st.replay(0)?;
            match output {
                Some(p) => {
                    print!("{log}");
                    emit(Some(&p), &serialize_hypergraph(&out.to_hypergraph(&source)?))?;
                }
                None => print!("{log}"),
            }
            rep.push("stream-online", &cfg, &summary(&out, source.len()), start.elapsed().as_millis());
        }
        Cmd::StreamDynamic { input, m_cap, output } => {
            let cfg = run_config(g, "dynamic")?;
            let st = read_stream(&input)?;
            let mut d = DynamicSparsifier::new(st.n, cfg.eps, m_cap.unwrap_or(st.insert_count()), &cfg.sparsify)?;
            let mut log = String::new();
            for op in &st.ops {
                for c in d.apply(op)? {
                    log.push_str(&format!("{c}\n"));
                }
            }
            print!("{log}");
            let out = d.current();
            let source = st.replay(0)?;
            if let Some(p) = output {
                emit(Some(&p), &serialize_hypergraph(&out.to_hypergraph(&source)?))?;
            }
            let mut s = summary(&out, source.len());
            s["touched_slots"] = json!(d.touched_slots());
            rep.push("stream-dynamic", &cfg, &s, start.elapsed().as_millis());
        }
        Cmd::SketchBuild { input, output, m_cap, naive } => {
            let cfg = run_config(g, "sketch")?;
            let h = read_hypergraph(&input)?;
            let mode = if naive { SketchMode::Naive } else { SketchMode::VertexSampling };
            let cap = m_cap.unwrap_or(h.len()).max(h.len());
            let mut sk = HypergraphSketch::new(h.n(), cfg.eps, cap, mode, &cfg.sparsify, &cfg.sketch)?;
            for e in h.edges() {
                sk.insert(e.clone())?;
            }
            let bytes = sk.to_bytes();
            write_bytes(&output, &bytes)?;
            let r = json!({ "m": h.len(), "cells": sk.cell_count(), "counter_bytes": sk.counter_bytes(), "serialized_bytes": bytes.len() });
            rep.push("sketch-build", &cfg, &r, start.elapsed().as_millis());
        }
        Cmd::SketchUpdate { sketch, stream, output } => {
            let cfg = run_config(g, "sketch")?;
            let mut sk = read_sketch(&sketch)?;
            sk.update(&read_stream(&stream)?)?;
            write_bytes(output.as_deref().unwrap_or(&sketch), &sk.to_bytes())?;
            rep.push("sketch-update", &cfg, &json!({ "m": sk.len() }), start.elapsed().as_millis());
        }
        Cmd::SketchMerge { a, b, output } => {
            let cfg = run_config(g, "sketch")?;
            let mut sa = read_sketch(&a)?;
            sa.merge(&read_sketch(&b)?)?;
            write_bytes(output.as_deref().unwrap_or(&a), &sa.to_bytes())?;
            rep.push("sketch-merge", &cfg, &json!({ "m": sa.len() }), start.elapsed().as_millis());
        }
        Cmd::SketchRecover { sketch, output } => {
            let cfg = run_config(g, "sketch")?;
            let sk = read_sketch(&sketch)?;
            let (out, stats) = sk.recover()?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            emit(output.as_deref(), &serialize_hypergraph(&out.to_hypergraph(&sk.source())?))?;
            let mut s = summary(&out, sk.len());
            s["decode"] = serde_json::to_value(&stats)?;
            rep.push("sketch-recover", &cfg, &s, start.elapsed().as_millis());
        }
        Cmd::Verify { original, sparsifier, trials } => {
            let cfg = run_config(g, "verify")?;
            let h = read_hypergraph(&original)?;
            let s = read_hypergraph(&sparsifier)?;
            let mut r = verify_spectral(&h, &s, cfg.eps, trials, cfg.seed())?;
            r.instance = original.display().to_string();
            println!("{}", check(&r));
            rep.push("verify", &cfg, &serde_json::to_value(&r)?, r.wall_ms);
            rep.finish()?;
            return if r.pass { Ok(()) } else { Err(Fail::Verification) };
        }
        Cmd::Bench { mode, n, m, min_arity, max_arity, engine, trials } => {
            let name = match mode {
                BenchMode::Static => "static",
                BenchMode::Online => "online",
                BenchMode::Dynamic => "dynamic",
                BenchMode::Sketch => "sketch",
                BenchMode::Naive => "naive",
            };
            let cfg = run_config(g, name)?;
            let seed = cfg.seed();
            let h = gen_random_hypergraph(n, m, min_arity, max_arity, seed)?;
            let t = Instant::now();
            let mut extra = json!({});
            let out = match mode {
                BenchMode::Static => sparsify(&h, cfg.eps, &cfg.sparsify, engine.into())?,
                BenchMode::Online => {
                    let mut o = OnlineSparsifier::new(n, cfg.eps, m, &cfg.sparsify)?;
                    o.run(&Stream::from_hypergraph(&h))?;
                    o.finalize()
                }
                BenchMode::Dynamic => {
                    let mut d = DynamicSparsifier::new(n, cfg.eps, m, &cfg.sparsify)?;
                    d.run(&Stream::from_hypergraph(&h))?;
                    extra = json!({ "touched_slots": d.touched_slots() });
                    d.current()
                }
                BenchMode::Sketch | BenchMode::Naive => {
                    let sm = if matches!(mode, BenchMode::Naive) { SketchMode::Naive } else { SketchMode::VertexSampling };
                    let mut sk = HypergraphSketch::new(n, cfg.eps, m, sm, &cfg.sparsify, &cfg.sketch)?;
                    for e in h.edges() {
                        sk.insert(e.clone())?;
                    }
                    extra = json!({ "cells": sk.cell_count(), "counter_bytes": sk.counter_bytes() });
                    sk.recover()?.0
                }
            };
            let run_ms = t.elapsed().as_millis();
            let s = out.to_hypergraph(&h)?;
            let mut r = verify_spectral(&h, &s, cfg.eps, trials, seed)?;
            r.instance = format!("random n={n} m={m} arity [{min_arity},{max_arity}]");
            println!("{}", check(&r));
            let result = json!({
                "n": n,
                "m": m,
                "size": out.len(),
                "levels": out.levels,
                "max_rel_error": r.max_rel_error,
                "pass": r.pass,
                "extra": extra,
                "verification": r,
                "run_wall_ms": run_ms,
            });
            rep.push("bench", &cfg, &result, start.elapsed().as_millis());
        }
    }
    rep.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Verification) => ExitCode::from(1),
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
