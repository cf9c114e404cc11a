//! End-to-end acceptance battery. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use hypersparse::config::lg;
use hypersparse::dynamic::{apply_changes, Change, DynamicSparsifier};
use hypersparse::generate::{gen_dynamic_stream, gen_online_lower_bound, gen_random_hypergraph};
use hypersparse::hypergraph::{arity_base, weight_class, Hyperedge};
use hypersparse::io::{Stream, StreamOp};
use hypersparse::multigraph::MultiGraph;
use hypersparse::online::{Decision, OnlineSparsifier};
use hypersparse::recovery::recursive_recovery;
use hypersparse::resistance::{effective_resistance_all_exact, er_sample_with, ExactResistance};
use hypersparse::sketch::{
    naive_sketch, sketch_construct, HeavyHitterSketch, HypergraphSketch, L2Estimator, SketchConfig, SketchMode,
};
use hypersparse::spanner::SpannerBundle;
use hypersparse::verify::{verify_spectral, VerificationReport};
use hypersparse::{sparsify, Engine, Hypergraph, SparsifyConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(name: &str, r: &VerificationReport) -> bool {
    r.checks.iter().any(|c| c.name == name && c.pass)
}

fn is_pow2(x: f64) -> bool {
    x > 0.0 && x.log2().fract() == 0.0
}

fn exhaustive_static() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for engine in [Engine::Vs, Engine::Spanner] {
        let mut ok = 0;
        let mut slowest = 0.0f64;
        for seed in 0..10 {
            let h = gen_random_hypergraph(12, 300, 3, 6, 100 + seed).unwrap();
            let t = Instant::now();
            let out = sparsify(&h, 0.5, &SparsifyConfig::default().with_seed(seed), engine).unwrap();
            let s = out.to_hypergraph(&h).unwrap();
            let r = verify_spectral(&h, &s, 0.5, 200, seed).unwrap();
            slowest = slowest.max(t.elapsed().as_secs_f64());
            ok += check("all_cuts", &r) as usize;
        }
        pass &= ok >= 9 && slowest <= 30.0;
        parts.push(format!("{engine:?} {ok}/10 slowest {slowest:.2}s"));
    }
    outcome(pass, parts.join(", "))
}

fn spectral_static() -> Outcome {
    let (mut ok, mut size_ok, mut slowest, mut worst_size) = (0, true, 0.0f64, 0);
    for seed in 0..10 {
        let h = gen_random_hypergraph(60, 3000, 4, 8, 200 + seed).unwrap();
        let t = Instant::now();
        let out = sparsify(&h, 0.4, &SparsifyConfig::default().with_seed(seed), Engine::Vs).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let s = out.to_hypergraph(&h).unwrap();
        let r = verify_spectral(&h, &s, 0.4, 200, seed).unwrap();
        ok += (check("gaussian", &r) && check("random_binary", &r)) as usize;
        size_ok &= out.len() <= 1000;
        worst_size = worst_size.max(out.len());
    }
    outcome(
        ok >= 9 && size_ok && slowest <= 120.0,
        format!("{ok}/10 within eps, largest size {worst_size} (limit 1000), slowest {slowest:.2}s"),
    )
}

fn er_sampling_graphs() -> Outcome {
    let (n, eps) = (64usize, 0.3f64);
    let lambda = 8.0 * (n as f64).ln() / (eps * eps);
    let mut ok = 0;
    for seed in 0..10 {
        let mut r = rng(300 + seed);
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.random::<f64>() < 0.3 {
                    pairs.push((u, v));
                }
            }
        }
        let g = MultiGraph::from_pairs(n, &pairs);
        let res = effective_resistance_all_exact(&g, 4096).unwrap().per_edge;
        let kept = er_sample_with(&res, lambda, &mut r);
        let h = Hypergraph::from_vertex_lists(n, pairs.iter().map(|&(u, v)| vec![u, v]).collect()).unwrap();
        let s = Hypergraph::from_edges(
            n,
            kept.iter()
                .map(|&k| Hyperedge::new(k, vec![pairs[k].0, pairs[k].1], 1.0 / (lambda * res[k]).min(1.0)))
                .collect(),
        )
        .unwrap();
        let rep = verify_spectral(&h, &s, eps, 100, seed).unwrap();
        ok += check("gaussian", &rep) as usize;
    }
    outcome(ok >= 9, format!("{ok}/10 within eps on 100 Gaussian vectors, lambda {lambda:.1}"))
}

fn random_multigraph(r: &mut ChaCha8Rng, n: usize, m: usize) -> MultiGraph {
    let mut pairs = Vec::with_capacity(m);
    while pairs.len() < m {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        if u != v {
            let copies = if r.random::<f64>() < 0.2 { r.random_range(1..4) } else { 1 };
            for _ in 0..copies.min(m - pairs.len()) {
                pairs.push((u.min(v), u.max(v)));
            }
        }
    }
    MultiGraph::from_pairs(n, &pairs)
}

fn bundle_threshold() -> Outcome {
    let mut r = rng(400);
    let (mut checked, mut exceptions) = (0, 0);
    for inst in 0..50 {
        let n = r.random_range(8..=256);
        let m = r.random_range(n / 2..=5000.min(n * 20));
        let g = random_multigraph(&mut r, n, m);
        let t = [2, 3, 4, 6][inst % 4];
        let ell = [1, 2, 3, 5, 8][inst % 5];
        let ex = ExactResistance::new(&g, 4096).unwrap();
        let mut b = SpannerBundle::new(n, t, ell);
        let held: Vec<bool> = g.edges.iter().map(|e| b.try_insert(e.u, e.v, e.label).is_some()).collect();
        for (e, &h) in g.edges.iter().zip(&held) {
            if ex.resistance(e.u, e.v) >= t as f64 / ell as f64 - 1e-9 {
                checked += 1;
                exceptions += !h as usize;
            }
        }
    }
    outcome(exceptions == 0, format!("{checked} edges at or above t/l, {exceptions} outside the bundle"))
}

fn recovery_probability() -> Outcome {
    let eps = 0.5f64;
    let mut worst = f64::INFINITY;
    let mut below_cap = 0;
    for inst in 0..20u64 {
        let mut r = rng(500 + inst);
        let n = 24 + (inst as usize % 5) * 8;
        let p = [0.1, 0.2, 0.35, 0.5][inst as usize % 4];
        let mult = [1usize, 6, 20][inst as usize % 3];
        let mut base: Vec<(usize, usize, bool)> = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if r.random::<f64>() < p {
                    base.extend(std::iter::repeat_n((u, v, false), mult));
                }
            }
        }
        let mut q: Vec<usize> = (0..n).collect();
        q.shuffle(&mut r);
        q.truncate(4);
        q.sort_unstable();
        for a in 0..4 {
            for b in a + 1..4 {
                base.push((q[a], q[b], true));
            }
        }
        let build = |order: &[(usize, usize, bool)]| {
            let mut g = MultiGraph::new(n);
            let mut c = HashMap::new();
            for (i, &(u, v, inq)) in order.iter().enumerate() {
                g.add(u, v, if inq { usize::MAX - i } else { i }, &mut c);
            }
            g
        };
        let in_q = |label: usize| label > usize::MAX / 2;
        let g0 = build(&base);
        let res = effective_resistance_all_exact(&g0, 4096).unwrap().per_edge;
        let sum_r: f64 = g0.edges.iter().zip(&res).filter(|(e, _)| in_q(e.label)).map(|(_, x)| x).sum();
        let cfg = SparsifyConfig::default();
        let t = cfg.stretch_for(n);
        let ell = cfg.bundle_size(t, eps, n, base.len());
        let levels = cfg.inner_levels(base.len());
        let mut hits = 0;
        for trial in 0..1000u64 {
            let mut order = base.clone();
            order.shuffle(&mut r);
            let g = build(&order);
            let s = recursive_recovery(&g, ell, levels, t, trial);
            hits += s.iter().any(|&(k, _)| in_q(g.edges[k].label)) as usize;
        }
        let target = (2.0f64 / 3.0).min(sum_r / (eps * eps));
        below_cap += (target < 2.0 / 3.0) as usize;
        worst = worst.min(hits as f64 / 1000.0 - (target - 0.07));
    }
    outcome(worst >= 0.0, format!("smallest margin {worst:.3} over 20 instances ({below_cap} below the 2/3 cap)"))
}

fn foster() -> Outcome {
    let mut r = rng(600);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(2..=512);
        let m = r.random_range(0..=3 * n);
        let g = random_multigraph(&mut r, n, m);
        let rep = effective_resistance_all_exact(&g, 4096).unwrap();
        worst = worst.max((rep.total() - (n - rep.components) as f64).abs());
    }
    outcome(worst <= 1e-6, format!("largest deviation {worst:.2e}"))
}

fn online() -> Outcome {
    // prefix replay
    let mut irrevocable = true;
    let mut pow2 = true;
    for s in 0..100u64 {
        let n = 10 + (s as usize % 20);
        let h = gen_random_hypergraph(n, 60, 2, 6, 700 + s).unwrap();
        let cfg = SparsifyConfig::default().with_seed(s);
        let mut full = OnlineSparsifier::new(n, 0.5, 60, &cfg).unwrap();
        for e in h.edges() {
            full.insert(e.vertices.clone(), e.weight).unwrap();
        }
        let cut = 1 + (s as usize * 7) % 59;
        let mut pre = OnlineSparsifier::new(n, 0.5, 60, &cfg).unwrap();
        for e in &h.edges()[..cut] {
            pre.insert(e.vertices.clone(), e.weight).unwrap();
        }
        irrevocable &= pre.decisions() == &full.decisions()[..cut];
        pow2 &= full.decisions().iter().all(|d| match d {
            Decision::Kept { weight, .. } => is_pow2(*weight),
            Decision::Dropped { .. } => true,
        });
    }
    // lower-bound stream
    let mut min_round = usize::MAX;
    for seed in 0..5 {
        let lb = gen_online_lower_bound(40, 3, seed).unwrap();
        let cfg = SparsifyConfig::default().with_seed(seed);
        let mut o = OnlineSparsifier::new(80, 0.5, lb.stream.insert_count(), &cfg).unwrap();
        let mut start = 0;
        for &end in &lb.round_ends {
            let before = o.kept_count();
            for op in &lb.stream.ops[start..end] {
                if let StreamOp::Insert { weight, vertices } = op {
                    o.insert(vertices.clone(), *weight).unwrap();
                }
            }
            min_round = min_round.min(o.kept_count() - before);
            start = end;
        }
    }
    // uniform streams with checkpoints
    let (n, m, eps) = (100, 20000, 0.5);
    let (mut ok, mut most_kept) = (0, 0);
    for seed in 0..10 {
        let h = gen_random_hypergraph(n, m, 4, 8, 800 + seed).unwrap();
        let mut o = OnlineSparsifier::new(n, eps, m, &SparsifyConfig::default().with_seed(seed)).unwrap();
        let mut good = true;
        for (k, e) in h.edges().iter().enumerate() {
            o.insert(e.vertices.clone(), e.weight).unwrap();
            if (k + 1) % (m / 5) == 0 {
                let prefix = h.filter(|x| x.id <= k);
                let s = o.finalize().to_hypergraph(&prefix).unwrap();
                good &= verify_spectral(&prefix, &s, eps, 200, seed).unwrap().pass;
            }
        }
        most_kept = most_kept.max(o.kept_count());
        good &= o.kept_count() <= m / 4;
        ok += good as usize;
    }
    outcome(
        irrevocable && pow2 && min_round >= 20 && ok >= 8,
        format!(
            "prefix replay {}, powers of two {}, fewest keeps per lower-bound round {min_round} (need 20), \
             uniform streams {ok}/10 (most kept {most_kept}, limit {})",
            if irrevocable { "exact" } else { "BROKEN" },
            if pow2 { "yes" } else { "NO" },
            m / 4
        ),
    )
}

struct DynRun {
    size_bound: bool,
    schedule: bool,
    lazy: bool,
    battery: bool,
    per_update: f64,
}

fn dynamic_run(n: usize, inserts: usize, deletes: usize, seed: u64, checkpoints: bool) -> DynRun {
    let eps = 0.5;
    let st = gen_dynamic_stream(n, inserts, deletes, 3, 6, 900 + seed).unwrap();
    let mut d = DynamicSparsifier::new(n, eps, inserts, &SparsifyConfig::default().with_seed(seed)).unwrap();
    let mut mirror = BTreeMap::new();
    let mut out = DynRun { size_bound: true, schedule: true, lazy: true, battery: true, per_update: 0.0 };
    let total = st.ops.len();
    let mut live = Stream::new(n);
    for (k, op) in st.ops.iter().enumerate() {
        // laziness: deleting x may only drop x; an insertion may only drop
        // edges of the instances it rebuilds
        let rebuilt: Vec<usize> = match op {
            StreamOp::Insert { weight, vertices } => {
                let key = (arity_base(vertices.len()), weight_class(*weight));
                d.buckets()
                    .filter(|(b, _)| **b == key)
                    .flat_map(|(_, s)| {
                        let j = (s.insertions() + 1).trailing_zeros() as usize + 1;
                        (1..=j).filter_map(|x| s.instance(x)).flat_map(|a| a.ids()).collect::<Vec<_>>()
                    })
                    .collect()
            }
            StreamOp::Delete(_) => Vec::new(),
        };
        let changes = d.apply(op).unwrap();
        for c in &changes {
            if let Change::Del { id } = c {
                let allowed = match op {
                    StreamOp::Delete(x) => x == id,
                    StreamOp::Insert { .. } => rebuilt.contains(id),
                };
                out.lazy &= allowed;
            }
        }
        apply_changes(&mut mirror, &changes);
        for (_, s) in d.buckets() {
            out.size_bound &= s.instance_sizes().iter().enumerate().all(|(i, &sz)| sz <= 1 << i);
        }
        live.ops.push(op.clone());
        if checkpoints && (k + 1) % (total / 5) == 0 {
            let cur = live.replay(0).unwrap();
            let o = d.current();
            out.lazy &= o.kept.iter().map(|k| (k.id, k.weight)).collect::<BTreeMap<_, _>>() == mirror;
            let s = o.to_hypergraph(&cur).unwrap();
            out.battery &= verify_spectral(&cur, &s, eps, 200, seed).unwrap().pass;
        }
    }
    for (_, s) in d.buckets() {
        let mut per_j: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for &(c, j) in &s.stats.rebuild_log {
            per_j.entry(j).or_default().push(c);
        }
        for (j, counts) in per_j {
            let step = 1u64 << j;
            out.schedule &= counts[0] == step / 2 && counts.windows(2).all(|w| w[1] - w[0] == step);
        }
    }
    out.per_update = d.touched_slots() as f64 / d.updates() as f64;
    out
}

fn dynamic() -> Outcome {
    let (mut bound, mut sched, mut lazy, mut ok) = (true, true, true, 0);
    for seed in 0..10 {
        let r = dynamic_run(80, 5000, 2000, seed, true);
        bound &= r.size_bound;
        sched &= r.schedule;
        lazy &= r.lazy;
        ok += r.battery as usize;
    }
    let small = dynamic_run(80, 5000, 2000, 42, false).per_update;
    let large = dynamic_run(80, 10000, 4000, 42, false).per_update;
    let ratio = large / small;
    outcome(
        bound && sched && lazy && ok >= 8 && ratio <= 4.0,
        format!(
            "size bound {bound}, rebuild schedule {sched}, laziness {lazy}, battery {ok}/10, \
             touched slots per update {small:.1} -> {large:.1} (x{ratio:.2}, limit 4)"
        ),
    )
}

fn sketch_linearity() -> Outcome {
    let (mut replay_ok, mut bytes_ok) = (0, 0);
    for s in 0..50u64 {
        let n = 8 + (s as usize % 16);
        let m = 10 + (s as usize * 3) % 50;
        let st = gen_dynamic_stream(n, m, m / 3, 2, 5.min(n), 1000 + s).unwrap();
        let cfg = SparsifyConfig::default().with_seed(s);
        let sc = SketchConfig::default();
        let mut a = HypergraphSketch::new(n, 0.5, m, SketchMode::VertexSampling, &cfg, &sc).unwrap();
        a.update(&st).unwrap();
        let direct = sketch_construct(&st.replay(0).unwrap(), 0.5, m, &cfg, &sc).unwrap();
        // the same net multiset in a shuffled order
        let mut shuffled = st.replay(0).unwrap().into_edges();
        shuffled.shuffle(&mut rng(s));
        let mut b = HypergraphSketch::new(n, 0.5, m, SketchMode::VertexSampling, &cfg, &sc).unwrap();
        for e in shuffled {
            b.insert(e).unwrap();
        }
        replay_ok += (a.counters_eq(&direct) && b.counters_eq(&direct)) as usize;
        let bytes = a.to_bytes();
        let back = HypergraphSketch::from_bytes(&bytes).unwrap();
        bytes_ok += (back == a && back.to_bytes() == bytes) as usize;
    }
    outcome(replay_ok == 50 && bytes_ok == 50, format!("replay {replay_ok}/50, round trip {bytes_ok}/50"))
}

fn heavy_hitters() -> Outcome {
    let u = 1024usize;
    let mut parts = Vec::new();
    let mut pass = true;
    for eta in [0.1, 0.05] {
        let mut ok = 0;
        for trial in 0..200u64 {
            let mut r = rng(1100 + trial);
            let mut x = vec![0i64; u];
            match trial % 3 {
                0 => {
                    x.iter_mut().for_each(|v| *v = r.random_range(-3..=3));
                    x[r.random_range(0..u)] = 500;
                }
                1 => x.iter_mut().for_each(|v| *v = if r.random::<bool>() { 5 } else { -5 }),
                _ => {
                    for _ in 0..(1.0 / (eta * eta)) as usize {
                        x[r.random_range(0..u)] = r.random_range(-50..=50);
                    }
                }
            }
            let mut sk = HeavyHitterSketch::new(eta, u, 2 * trial + 1);
            let mut l2 = L2Estimator::new(0.1, 1e-3, 2 * trial + 2);
            for (i, &v) in x.iter().enumerate() {
                if v != 0 {
                    sk.update(i as u64, v);
                    l2.update(i as u64, v);
                }
            }
            let mut w = vec![0.0; u];
            for (i, v) in sk.decode(l2.estimate(), 0..u as u64) {
                w[i as usize] = v;
            }
            let norm = x.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            let err = x.iter().zip(&w).map(|(&a, &b)| (a as f64 - b).abs()).fold(0.0, f64::max);
            ok += (err <= eta * norm) as usize;
        }
        pass &= ok >= 190;
        parts.push(format!("eta {eta}: {ok}/200"));
    }
    outcome(pass, parts.join(", "))
}

fn sketch_end_to_end() -> Outcome {
    let (n, m, eps) = (40, 500, 0.5);
    let (mut vs_ok, mut naive_ok, mut larger) = (0, 0, 0);
    let (mut vs_cells, mut naive_cells) = (0, 0);
    for seed in 0..10 {
        let h = gen_random_hypergraph(n, m, 3, 6, 1200 + seed).unwrap();
        let cfg = SparsifyConfig::default().with_seed(seed);
        let sc = SketchConfig::default();
        let a = sketch_construct(&h, eps, m, &cfg, &sc).unwrap();
        let b = naive_sketch(&h, eps, &cfg, &sc).unwrap();
        for (sk, ok) in [(&a, &mut vs_ok), (&b, &mut naive_ok)] {
            let s = sk.recover().unwrap().0.to_hypergraph(&h).unwrap();
            *ok += verify_spectral(&h, &s, eps, 200, seed).unwrap().pass as usize;
        }
        larger += (b.counter_bytes() > a.counter_bytes()) as usize;
        vs_cells += a.cell_count();
        naive_cells += b.cell_count();
    }
    outcome(
        vs_ok >= 8 && naive_ok >= 8 && larger == 10,
        format!(
            "vertex sampling {vs_ok}/10, naive {naive_ok}/10, naive larger on {larger}/10 \
             (mean cells {} vs {})",
            vs_cells / 10,
            naive_cells / 10
        ),
    )
}

fn size_scaling() -> Outcome {
    let mut sizes = Vec::new();
    for m in [5000, 10000, 20000] {
        let mut total = 0;
        for seed in 0..3 {
            let h = gen_random_hypergraph(100, m, 4, 8, 1300 + seed).unwrap();
            total += sparsify(&h, 0.5, &SparsifyConfig::default().with_seed(seed), Engine::Vs).unwrap().len();
        }
        sizes.push(total as f64 / 3.0);
    }
    let r1 = sizes[1] / sizes[0];
    let r2 = sizes[2] / sizes[1];
    outcome(
        r1 <= 1.5 && r2 <= 1.5,
        format!("mean sizes {:.0} -> {:.0} -> {:.0} (x{r1:.2}, x{r2:.2}; limit 1.5, lg m {} -> {})", sizes[0], sizes[1], sizes[2], lg(5000), lg(20000)),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("exhaustive cut fidelity, static", exhaustive_static),
        ("spectral battery, static", spectral_static),
        ("resistance sampling on ordinary graphs", er_sampling_graphs),
        ("bundle holds every edge with R >= t/l", bundle_threshold),
        ("recursive recovery hit probability", recovery_probability),
        ("resistance sum equals n - c", foster),
        ("online invariants", online),
        ("dynamic invariants", dynamic),
        ("sketch linearity and serialization", sketch_linearity),
        ("heavy-hitter guarantee", heavy_hitters),
        ("sketch end to end", sketch_end_to_end),
        ("size scaling in m", size_scaling),
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = f();
                    (o, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        println!("{} {:>2}. {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += !o.pass as usize;
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
