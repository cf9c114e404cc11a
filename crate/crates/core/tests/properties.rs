use hypersparse::dynamic::{apply_changes, DynamicSparsifier};
use hypersparse::generate::{gen_dynamic_stream, gen_random_hypergraph};
use hypersparse::hypergraph::{bucket_by_arity_and_weight, cut_value, quadratic_form, weight_class};
use hypersparse::io::{parse_hypergraph, parse_stream, serialize_hypergraph, serialize_stream, Stream, StreamOp};
use hypersparse::multigraph::{clique_expand, MultiGraph};
use hypersparse::online::{Decision, OnlineSparsifier};
use hypersparse::resistance::{effective_resistance_all_approx, er_sample_with, ExactResistance, ResistanceOptions};
use hypersparse::sketch::{sketch_construct, HypergraphSketch, SketchConfig, SketchMode};
use hypersparse::spanner::{Spanner, SpannerBundle};
use hypersparse::verify::{collective_energy, verify_spectral};
use hypersparse::{sparsify, Engine, Hyperedge, Hypergraph, SparsifyConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hypergraph with arbitrary positive weights spanning several classes.
fn weighted(n: usize, m: usize, max_arity: usize, seed: u64) -> Hypergraph {
    let mut r = rng(seed);
    let lists = (0..m)
        .map(|id| {
            let k = r.random_range(1..=max_arity.min(n));
            let mut vs = rand::seq::index::sample(&mut r, n, k).into_vec();
            vs.sort_unstable();
            Hyperedge::new(id, vs, 2f64.powf(r.random_range(-3.0..4.0)))
        })
        .collect();
    Hypergraph::from_edges(n, lists).unwrap()
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-5.0..5.0)).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn indicator_energy_is_cut(n in 2usize..10, m in 0usize..40, seed: u64) {
        let h = weighted(n, m, 5, seed);
        for mask in 0u32..(1 << n) {
            let s: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
            let x: Vec<f64> = (0..n).map(|v| (mask >> v & 1) as f64).collect();
            prop_assert!(close(quadratic_form(&h, &x).unwrap(), cut_value(&h, &s).unwrap()));
        }
    }

    #[test]
    fn energy_shift_and_scale(n in 2usize..30, m in 0usize..60, seed: u64, c in -10.0f64..10.0, a in -4.0f64..4.0) {
        let h = weighted(n, m, 6, seed);
        let x = random_vector(n, seed ^ 1);
        let q = quadratic_form(&h, &x).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * a).collect();
        prop_assert!((quadratic_form(&h, &shifted).unwrap() - q).abs() <= 1e-9 * q.max(1.0));
        prop_assert!((quadratic_form(&h, &scaled).unwrap() - a * a * q).abs() <= 1e-9 * (a * a * q).max(1.0));
        prop_assert!(close(collective_energy(&h, std::slice::from_ref(&x)).unwrap(), q));
    }

    #[test]
    fn buckets_partition(n in 2usize..30, m in 0usize..80, seed: u64) {
        let h = weighted(n, m, 12, seed);
        let buckets = bucket_by_arity_and_weight(&h);
        let mut seen = BTreeSet::new();
        let mut union = Hypergraph::new(n);
        for b in &buckets {
            for e in b.hypergraph.edges() {
                prop_assert!(seen.insert(e.id));
                prop_assert!(e.arity() >= b.r && e.arity() < 2 * b.r);
                prop_assert_eq!(weight_class(e.weight), b.weight_class);
                union.insert(e.clone()).unwrap();
            }
        }
        prop_assert_eq!(seen.len(), m);
        for k in 0..5 {
            let x = random_vector(n, seed.wrapping_add(k));
            prop_assert!(close(quadratic_form(&union, &x).unwrap(), quadratic_form(&h, &x).unwrap()));
        }
    }

    #[test]
    fn text_formats_roundtrip(n in 2usize..30, m in 0usize..40, seed: u64) {
        let h = weighted(n, m, 6, seed);
        prop_assert_eq!(parse_hypergraph(&serialize_hypergraph(&h)).unwrap(), h);
        let st = gen_dynamic_stream(n.max(4), m, m / 2, 2, 4, seed).unwrap();
        prop_assert_eq!(parse_stream(&serialize_stream(&st)).unwrap(), st);
    }

    #[test]
    fn clique_expansion_size(n in 2usize..30, m in 0usize..60, seed: u64) {
        let h = weighted(n, m, 8, seed);
        let g = clique_expand(&h);
        let want: usize = h.edges().iter().map(|e| e.arity() * (e.arity() - 1) / 2).sum();
        prop_assert_eq!(g.len(), want);
        for e in &g.edges {
            prop_assert!(h.get(e.label).unwrap().vertices.contains(&e.u));
        }
    }

    #[test]
    fn verify_self_is_exact(n in 2usize..14, m in 1usize..40, seed: u64) {
        let h = weighted(n, m, 5, seed);
        let rep = verify_spectral(&h, &h, 0.1, 20, seed).unwrap();
        prop_assert_eq!(rep.max_rel_error, 0.0);
        prop_assert!(rep.pass);
    }
}

fn random_graph(r: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m);
    while pairs.len() < m {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rayleigh_monotone(n in 3usize..40, extra in 0usize..80, seed: u64) {
        let mut r = rng(seed);
        let pairs = random_graph(&mut r, n, n + extra);
        let before = ExactResistance::new(&MultiGraph::from_pairs(n, &pairs), 4096).unwrap();
        for _ in 0..5 {
            let k = r.random_range(0..pairs.len());
            let mut fewer = pairs.clone();
            fewer.swap_remove(k);
            let after = ExactResistance::new(&MultiGraph::from_pairs(n, &fewer), 4096).unwrap();
            for &(u, v) in fewer.iter().take(20) {
                prop_assert!(after.resistance(u, v) >= before.resistance(u, v) - 1e-9);
            }
        }
    }

    #[test]
    fn approx_resistance_within_delta(n in 3usize..30, extra in 0usize..60, seed: u64) {
        let mut r = rng(seed);
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (r.random_range(0..v), v)).collect();
        pairs.extend(random_graph(&mut r, n, extra));
        let g = MultiGraph::from_pairs(n, &pairs);
        let opts = ResistanceOptions { delta: 0.3, ..Default::default() };
        let ex = ExactResistance::new(&g, 4096).unwrap();
        let ap = effective_resistance_all_approx(&g, &opts, &mut r).unwrap();
        for (e, &x) in g.edges.iter().zip(&ap.per_edge) {
            let want = ex.resistance(e.u, e.v);
            prop_assert!((x / want - 1.0).abs() <= opts.delta, "{x} vs {want}");
        }
    }

    #[test]
    fn certain_sampling_keeps_everything(n in 3usize..30, extra in 0usize..60, seed: u64) {
        let mut r = rng(seed);
        let pairs = random_graph(&mut r, n, n + extra);
        let g = MultiGraph::from_pairs(n, &pairs);
        let ex = ExactResistance::new(&g, 4096).unwrap();
        let res: Vec<f64> = g.edges.iter().map(|e| ex.resistance(e.u, e.v)).collect();
        let lambda = 1.0 / res.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert_eq!(er_sample_with(&res, lambda, &mut r).len(), g.len());
    }

    #[test]
    fn spanner_girth_and_size(n in 4usize..120, m in 0usize..1500, t in 2usize..7, seed: u64) {
        let mut r = rng(seed);
        let mut s = Spanner::new(n, t);
        for (u, v) in random_graph(&mut r, n, m) {
            s.try_insert(u, v);
        }
        prop_assert!(s.short_cycle(t).is_none());
        prop_assert!(s.len() as f64 <= 3.0 * (n as f64).powf(1.0 + 2.0 / t as f64));
    }

    #[test]
    fn bundle_disjoint(n in 4usize..60, m in 0usize..800, ell in 1usize..6, seed: u64) {
        let mut r = rng(seed);
        let t = 3;
        let mut b = SpannerBundle::new(n, t, ell);
        for (k, (u, v)) in random_graph(&mut r, n, m).into_iter().enumerate() {
            b.try_insert(u, v, k);
        }
        let mut per_slot: HashMap<(usize, usize), BTreeSet<usize>> = HashMap::new();
        let mut labels = BTreeSet::new();
        for (u, v, label, i) in b.contents() {
            prop_assert!(labels.insert(label));
            prop_assert!(per_slot.entry((u, v)).or_default().insert(i), "slot in spanner {i} twice");
            prop_assert!(b.spanners()[i].contains(u, v));
        }
        prop_assert!(per_slot.values().all(|s| s.len() <= ell));
        for s in b.spanners().to_vec().iter_mut() {
            prop_assert!(s.short_cycle(t).is_none());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn static_output_accounting(n in 4usize..30, m in 1usize..150, seed: u64, spanner: bool) {
        let h = weighted(n, m, 7, seed);
        let engine = if spanner { Engine::Spanner } else { Engine::Vs };
        let cfg = SparsifyConfig::default().with_seed(seed);
        let out = sparsify(&h, 0.5, &cfg, engine).unwrap();
        let mut ids = BTreeSet::new();
        for k in &out.kept {
            prop_assert!(ids.insert(k.id));
            let src = h.get(k.id).unwrap();
            prop_assert_eq!(k.weight, src.weight * 2f64.powi(k.level as i32));
        }
        prop_assert_eq!(sparsify(&h, 0.5, &cfg, engine).unwrap(), out);
    }

    #[test]
    fn online_weight_law(n in 4usize..30, m in 1usize..120, seed: u64) {
        let h = weighted(n, m, 6, seed);
        let mut o = OnlineSparsifier::new(n, 0.5, m, &SparsifyConfig::default().with_seed(seed)).unwrap();
        for e in h.edges() {
            o.insert(e.vertices.clone(), e.weight).unwrap();
        }
        let fin = o.finalize();
        prop_assert_eq!(fin.len(), o.kept_count());
        for d in o.decisions() {
            if let Decision::Kept { id, weight, level } = *d {
                prop_assert_eq!(weight, h.get(id).unwrap().weight * 2f64.powi(level as i32));
                prop_assert_eq!(fin.get(id).unwrap().weight, weight);
            }
        }
    }

    #[test]
    fn dynamic_mirror_and_decomposition(n in 6usize..25, ins in 1usize..150, seed: u64) {
        let st = gen_dynamic_stream(n, ins, ins / 2, 2, 5, seed).unwrap();
        let mut d = DynamicSparsifier::new(n, 0.5, ins, &SparsifyConfig::default().with_seed(seed)).unwrap();
        let mut mirror = BTreeMap::new();
        for op in &st.ops {
            let ch = d.apply(op).unwrap();
            apply_changes(&mut mirror, &ch);
            d.audit().map_err(TestCaseError::fail)?;
        }
        let cur = d.current();
        let got: BTreeMap<usize, f64> = cur.kept.iter().map(|k| (k.id, k.weight)).collect();
        prop_assert_eq!(&got, &mirror);
        let live = st.replay(0).unwrap();
        let whole = cur.to_hypergraph(&live).unwrap();
        let x = random_vector(n, seed);
        let mut parts = 0.0;
        for (_, s) in d.buckets() {
            let sub = Hypergraph::from_edges(
                n,
                s.kept().into_iter().map(|(id, _, w)| Hyperedge::new(id, live.get(id).unwrap().vertices.clone(), w)).collect(),
            )
            .unwrap();
            parts += quadratic_form(&sub, &x).unwrap();
        }
        prop_assert!(close(quadratic_form(&whole, &x).unwrap(), parts));
    }

    #[test]
    fn sketch_insert_delete_cancels(n in 6usize..20, m in 1usize..40, seed: u64) {
        let h = gen_random_hypergraph(n, m, 2, 5, seed).unwrap();
        let cfg = SparsifyConfig::default().with_seed(seed);
        let sc = SketchConfig::default();
        let base = sketch_construct(&h, 0.5, 2 * m, &cfg, &sc).unwrap();
        let mut sk = base.clone();
        let extra = gen_random_hypergraph(n, m, 2, 5, seed ^ 7).unwrap();
        let mut st = Stream::new(n);
        for e in extra.edges() {
            st.ops.push(StreamOp::Insert { weight: e.weight, vertices: e.vertices.clone() });
        }
        for k in 0..m {
            st.ops.push(StreamOp::Delete(base.next_id() + k));
        }
        sk.update(&st).unwrap();
        prop_assert!(sk.counters_eq(&base));
        let empty = HypergraphSketch::new(n, 0.5, 2 * m, SketchMode::VertexSampling, &cfg, &sc).unwrap();
        prop_assert_eq!(empty.cell_count(), 0);
    }
}
