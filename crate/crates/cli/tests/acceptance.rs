//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS or FAIL line; exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use navmem::bench::{generate_benchmark, run_ablations, run_retrieval_bench, BenchParams, RunSettings, Variant};
use navmem::env_sim::{detect_frontiers, explore_detailed, generate_scene, Cell, CellState, ExploreParams, Explorer, OccupancyGrid, SceneConfig, Termination};
use navmem::memory::{build_memory_from_places, Edge, MajoritySummarizer, MemoryParams, TopoNode, TopologicalMap};
use navmem::planner::{pairwise_costs, plan_sequence, travel_distance, CostMatrix, SequenceOptions};
use navmem::retrieval::{combo_score, flat_search, forest_search, gaussian_factor, neighbor_boost, retrieve, Embedder, HashEmbedder, Query, SearchMode};
use navmem::{NodeId, Position};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pinned tolerances.
const PLANNER_TOL: f64 = 0.0;
const DIJKSTRA_TOL: f64 = 1e-9;
const ANCHOR_TOL: f64 = 1e-12;
const VISIT_RATIO_MAX: f64 = 0.30;
const AGREEMENT_MIN: f64 = 0.95;
const ANCHOR_ACC_MIN: f64 = 0.95;
const FLAT_ACC_MAX: f64 = 0.60;

const COLORS: &[&str] = &["red", "blue", "green", "yellow", "black", "white", "grey", "brown", "orange", "purple", "pink", "beige"];
const MATERIALS: &[&str] = &["wooden", "metal", "plastic", "glass", "leather", "fabric", "stone", "ceramic", "wicker", "marble", "bamboo"];
const LABELS: &[&str] = &[
    "sofa", "television", "bed", "desk", "fridge", "bathtub", "piano", "wardrobe", "aquarium", "treadmill", "chair", "lamp",
    "cabinet", "printer", "clock", "remote", "pillow", "kettle", "towel", "guitar", "plant", "rug", "window", "doorway",
    "bookshelf", "vase", "mirror", "radiator", "bin", "painting", "stool", "curtain", "oven", "sink", "toilet", "shower",
    "dresser", "bench", "table", "fan",
];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("planner optimality", planner_optimality),
        ("shortest path costs", shortest_path_costs),
        ("lossless pruning", lossless_pruning),
        ("pruning efficiency", pruning_efficiency),
        ("anchor discrimination", anchor_discrimination),
        ("boost properties", boost_properties),
        ("distance rules", distance_rules),
        ("exploration coverage", exploration_coverage),
        ("end-to-end reproducibility", reproducibility),
        ("unit anchors", unit_anchors),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn inversions(order: &[usize], reference: &[usize]) -> usize {
    let rank: HashMap<usize, usize> = reference.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut count = 0;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            if rank[&order[a]] > rank[&order[b]] {
                count += 1;
            }
        }
    }
    count
}

fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.clone();
        let head = rest.remove(i);
        for mut tail in permutations(rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn planner_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for instance in 0..200 {
        let n = 2 + instance % 6;
        let lambda = [0.0, 1.0, 10.0][instance % 3];
        let pts: Vec<(f64, f64)> = (0..=n).map(|_| (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0))).collect();
        let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let costs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dist(pts[i], pts[j])).collect()).collect();
        let start: Option<Vec<f64>> = rng.gen_bool(0.5).then(|| (0..n).map(|i| dist(pts[n], pts[i])).collect());
        let mut seq: Vec<usize> = (0..n).collect();
        seq.shuffle(&mut rng);
        let matrix = CostMatrix { target_node_ids: (0..n as NodeId).collect(), costs: costs.clone() };
        let opts = SequenceOptions { lambda, start_costs: start.clone(), precedence: Vec::new() };
        let plan = plan_sequence(&matrix, &seq, &opts).map_err(|e| e.to_string())?;
        let best = permutations((0..n).collect())
            .into_iter()
            .map(|p| {
                let mut travel = start.as_ref().map_or(0.0, |s| s[p[0]]);
                for w in p.windows(2) {
                    travel += costs[w[0]][w[1]];
                }
                travel + lambda * inversions(&p, &seq) as f64
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((plan.objective - best).abs());
        if (plan.objective - best).abs() > PLANNER_TOL {
            return Err(format!("instance {instance}: objective {} vs brute force {best}", plan.objective));
        }
    }
    check(worst <= PLANNER_TOL, format!("200 instances, max deviation {worst:e}"))
}

fn map_from(points: &[(f64, f64)], edges: &[(NodeId, NodeId)]) -> TopologicalMap {
    let nodes = points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| TopoNode {
            id: i as NodeId,
            position: Position::planar(x, y),
            description: String::new(),
            embedding: vec![1.0],
            spatial_feature: vec![x, y, 1.0],
            object_ids: Vec::new(),
        })
        .collect();
    let edges = edges
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (points[i as usize], points[j as usize]);
            Edge { i, j, weight: ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() }
        })
        .collect();
    TopologicalMap { nodes, edges }
}

fn shortest_path_costs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for m in 0..50 {
        let n = rng.gen_range(2..=100);
        let p = rng.gen_range(0.02..0.2);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0))).collect();
        let mut edges = Vec::new();
        for i in 0..n as NodeId {
            for j in i + 1..n as NodeId {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let map = map_from(&pts, &edges);
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &map.edges {
            d[e.i as usize][e.j as usize] = e.weight;
            d[e.j as usize][e.i as usize] = e.weight;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let all: Vec<NodeId> = (0..n as NodeId).collect();
        let got = pairwise_costs(&map, &all).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (got.costs[i][j], d[i][j]);
                let err = if a.is_infinite() && b.is_infinite() { 0.0 } else { (a - b).abs() };
                if !(err <= DIJKSTRA_TOL) {
                    return Err(format!("map {m}: entry ({i},{j}) {a} vs {b}"));
                }
                worst = worst.max(err);
            }
        }
    }
    check(true, format!("50 maps, max entry error {worst:e}"))
}

fn random_places(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Position, String)> {
    (0..n)
        .map(|_| {
            let text = format!(
                "{} {} {}",
                COLORS.choose(rng).unwrap(),
                MATERIALS.choose(rng).unwrap(),
                LABELS[rng.gen_range(0..12)]
            );
            (Position::planar(rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0)), text)
        })
        .collect()
}

fn lossless_pruning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let emb = HashEmbedder::default();
    let params = MemoryParams::default();
    let mut queries = 0;
    for m in 0..100 {
        let n = rng.gen_range(5..=500);
        let places = random_places(&mut rng, n);
        let memory = build_memory_from_places(&places, &params, &emb, &MajoritySummarizer).map_err(|e| e.to_string())?;
        let beam = memory.forest.max_branching();
        for _ in 0..5 {
            let q = emb.embed(&random_places(&mut rng, 1)[0].1).unwrap();
            let k = rng.gen_range(1..=20);
            let forest = forest_search(&memory, &q, k, beam).candidates;
            let flat = flat_search(&memory, &q, k).candidates;
            let ids = |v: &[navmem::retrieval::RankedCandidate]| v.iter().map(|c| c.node_id).collect::<Vec<_>>();
            let (a, b) = (ids(&forest), ids(&flat));
            if a.iter().collect::<BTreeSet<_>>() != b.iter().collect::<BTreeSet<_>>() {
                return Err(format!("memory {m} ({n} nodes): top-{k} sets differ"));
            }
            if a != b {
                return Err(format!("memory {m} ({n} nodes): top-{k} orders differ"));
            }
            queries += 1;
        }
    }
    check(true, format!("100 memories, {queries} queries, sets and orders equal"))
}

fn clustered_places(seed: u64) -> Vec<(Position, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = LABELS.to_vec();
    labels.shuffle(&mut rng);
    let mut places = Vec::new();
    for (c, (cx, cy)) in [(0.0, 0.0), (1000.0, 0.0), (0.0, 1000.0), (1000.0, 1000.0)].into_iter().enumerate() {
        for r in 0..10 {
            let label = labels[c * 10 + r];
            let (rx, ry) = (cx + (r % 5) as f64 * 20.0, cy + (r / 5) as f64 * 20.0);
            let mut combos: Vec<(usize, usize)> =
                (0..COLORS.len()).flat_map(|a| (0..MATERIALS.len()).map(move |b| (a, b))).collect();
            combos.shuffle(&mut rng);
            for &(a, b) in &combos[..125] {
                let p = Position::planar(rx + rng.gen_range(0.0..12.0), ry + rng.gen_range(0.0..12.0));
                places.push((p, format!("{} {} {}", COLORS[a], MATERIALS[b], label)));
            }
        }
    }
    places
}

fn pruning_efficiency() -> Outcome {
    let emb = HashEmbedder::default();
    let params = MemoryParams { omega: 0.25, tau: 0.3, alpha: 0.2, max_children: 8, ..Default::default() };
    let mut details = Vec::new();
    let mut ok = true;
    for seed in [1u64, 2] {
        let places = clustered_places(seed);
        let memory = build_memory_from_places(&places, &params, &emb, &MajoritySummarizer).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let (mut agree, mut forest_visits, mut flat_visits) = (0usize, 0usize, 0usize);
        let queries = 200;
        for _ in 0..queries {
            let q = emb.embed(&places[rng.gen_range(0..places.len())].1).unwrap();
            let f = forest_search(&memory, &q, 1, 4);
            let fl = flat_search(&memory, &q, 1);
            agree += usize::from(f.candidates[0].node_id == fl.candidates[0].node_id);
            forest_visits += f.visited;
            flat_visits += fl.visited;
        }
        let ratio = forest_visits as f64 / flat_visits as f64;
        let agreement = agree as f64 / queries as f64;
        ok &= ratio < VISIT_RATIO_MAX && agreement >= AGREEMENT_MIN;
        details.push(format!("seed {seed}: {} nodes, visit ratio {ratio:.3}, top-1 agreement {agreement:.3}", places.len()));
    }
    check(ok, details.join("; "))
}

fn anchor_discrimination() -> Outcome {
    let params = BenchParams::default();
    let suite = generate_benchmark(&params, 42).map_err(|e| e.to_string())?;
    for case in &suite {
        let mut seen = HashMap::new();
        for o in &case.scene.objects {
            *seen.entry(o.description.as_str()).or_insert(0) += 1;
        }
        let decoyed = case.ground_truth.values().any(|&g| seen[case.scene.objects[g as usize].description.as_str()] > 1);
        if !decoyed {
            return Err(format!("case {} has no decoy", case.seed));
        }
    }
    let mut settings = RunSettings::for_params(&params);
    settings.repeats = 1;
    let emb = HashEmbedder::new(settings.memory.embedding_dim);
    let retrieval = run_retrieval_bench(&suite, &[Variant::Flat, Variant::Anchor], &settings, &emb).map_err(|e| e.to_string())?;
    let ablations = run_ablations(&suite, &settings, &emb).map_err(|e| e.to_string())?;
    let acc = |records: &[navmem::bench::MetricsRecord], v: Variant| {
        records.iter().find(|r| r.config == v.name()).map(|r| r.top1_accuracy).unwrap()
    };
    let (flat, anchor) = (acc(&retrieval, Variant::Flat), acc(&retrieval, Variant::Anchor));
    let (full, no_spatial) = (acc(&ablations, Variant::Full), acc(&ablations, Variant::NoSpatial));
    check(
        anchor >= ANCHOR_ACC_MIN && flat <= FLAT_ACC_MAX && full > no_spatial && no_spatial > flat,
        format!("anchor {anchor:.3}, flat {flat:.3}, full {full:.3}, no_spatial {no_spatial:.3}"),
    )
}

fn boost_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let emb = HashEmbedder::new(256);
    let params = MemoryParams { embedding_dim: 256, ..Default::default() };
    let (mut trials, mut scored, mut anchored) = (0usize, 0usize, 0usize);
    while trials < 10_000 {
        let n = rng.gen_range(2..=40);
        let places: Vec<(Position, String)> = (0..n)
            .map(|_| {
                let p = Position::planar(rng.gen_range(0.0..15.0), rng.gen_range(0.0..15.0));
                (p, LABELS[rng.gen_range(0..6)].to_string())
            })
            .collect();
        let memory = build_memory_from_places(&places, &params, &emb, &MajoritySummarizer).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let target = emb.embed(LABELS[rng.gen_range(0..6)]).unwrap();
            let contexts: Vec<Vec<f64>> = (0..rng.gen_range(0..3)).map(|_| emb.embed(LABELS[rng.gen_range(0..6)]).unwrap()).collect();
            let eta = rng.gen_range(0.0..3.0);
            let hops = rng.gen_range(0..3);
            let base = flat_search(&memory, &target, n).candidates;
            let boosted = neighbor_boost(&memory, base.clone(), &contexts, hops, eta, 0.55).map_err(|e| e.to_string())?;
            for c in &boosted {
                let b = c.s_boost.unwrap();
                if !(b >= c.s_sem) {
                    return Err(format!("trial {trials}: s_boost {b} < s_sem {}", c.s_sem));
                }
                scored += 1;
            }
            let unboosted = neighbor_boost(&memory, base.clone(), &contexts, hops, 0.0, 0.55).map_err(|e| e.to_string())?;
            let key = |v: &[navmem::retrieval::RankedCandidate]| {
                v.iter().map(|c| (c.node_id, c.final_score.to_bits())).collect::<Vec<_>>()
            };
            if key(&unboosted) != key(&base) {
                return Err(format!("trial {trials}: eta 0 changed the ranking"));
            }
            let mut q = Query::new(LABELS[rng.gen_range(0..6)]).with_anchor(LABELS[rng.gen_range(0..6)]);
            q.context_texts = vec![LABELS[rng.gen_range(0..6)].to_string()];
            let plain = retrieve(&memory, &emb, &Query { mode: SearchMode::Anchor, ..q.clone() });
            let zero = retrieve(&memory, &emb, &Query { mode: SearchMode::Boosted, eta: 0.0, ..q });
            if let (Ok(plain), Ok(zero)) = (plain, zero) {
                if key(&plain.candidates) != key(&zero.candidates) {
                    return Err(format!("trial {trials}: eta 0 changed the anchored ranking"));
                }
                anchored += 1;
            }
            trials += 1;
        }
    }
    check(true, format!("{trials} trials, {scored} boosted candidates, eta 0 rankings identical ({anchored} anchored)"))
}

fn distance_rules() -> Outcome {
    let mut path_map = map_from(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)], &[]);
    let weights = [1.5, 0.25, 2.0, 0.75];
    path_map.edges = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Edge { i: i as NodeId, j: i as NodeId + 1, weight: w })
        .collect();
    let along = travel_distance(&[0, 1, 2, 3, 4], &path_map);
    let bare = map_from(&[(0.0, 0.0), (3.0, 4.0)], &[]);
    let hop = travel_distance(&[0, 1], &bare);
    check(along == 4.5 && hop == 5.0, format!("edge path {along}, stripped hop {hop}"))
}

fn brute_frontiers(grid: &OccupancyGrid) -> BTreeSet<BTreeSet<Cell>> {
    let (cols, rows) = (grid.cols(), grid.rows());
    let frontier: Vec<Cell> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (c, r)))
        .filter(|&(c, r)| {
            grid.get((c, r)) == CellState::Explored
                && [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(dc, dr)| {
                    let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                    nc >= 0
                        && nr >= 0
                        && (nc as usize) < cols
                        && (nr as usize) < rows
                        && grid.get((nc as usize, nr as usize)) == CellState::Unknown
                })
        })
        .collect();
    let mut label: Vec<usize> = (0..frontier.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..frontier.len() {
            for j in 0..frontier.len() {
                let (a, b) = (frontier[i], frontier[j]);
                if a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1 && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: HashMap<usize, BTreeSet<Cell>> = HashMap::new();
    for (i, &cell) in frontier.iter().enumerate() {
        groups.entry(label[i]).or_default().insert(cell);
    }
    groups.into_values().collect()
}

fn exploration_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let params = ExploreParams::default();
    let mut steps = 0usize;
    for s in 0..20u64 {
        let config = SceneConfig {
            width: rng.gen_range(12..=40) as f64,
            height: rng.gen_range(12..=40) as f64,
            obstacles: rng.gen_range(0..10),
            objects: rng.gen_range(4..16),
            ..SceneConfig::default()
        };
        let scene = generate_scene(&config, s).map_err(|e| e.to_string())?;
        let start = scene.default_start(params.resolution).ok_or("no free start cell")?;
        let run = explore_detailed(&scene, start, &params).map_err(|e| e.to_string())?;
        if run.termination != Termination::Complete || !detect_frontiers(&run.grid, 1).is_empty() {
            return Err(format!("scene {s}: exploration left frontiers"));
        }
        let observed: BTreeSet<u32> = run.records.iter().flat_map(|r| r.visible_object_ids.iter().copied()).collect();
        if observed.len() != scene.objects.len() {
            return Err(format!("scene {s}: observed {} of {} objects", observed.len(), scene.objects.len()));
        }
        if s < 10 {
            let mut explorer = Explorer::new(&scene, start, params.clone()).map_err(|e| e.to_string())?;
            while explorer.step().is_some() {
                let got: BTreeSet<BTreeSet<Cell>> = detect_frontiers(explorer.grid(), 1)
                    .into_iter()
                    .map(|c| c.cells.into_iter().collect())
                    .collect();
                if got != brute_frontiers(explorer.grid()) {
                    return Err(format!("scene {s}: frontier mismatch at step {}", explorer.steps_taken()));
                }
                steps += 1;
            }
        }
    }
    check(true, format!("20 scenes complete, frontiers matched on {steps} replayed steps"))
}

fn bench_columns() -> Result<Vec<Vec<String>>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_navmem"))
        .args(["bench", "--seed", "42"])
        .env_remove("NAVMEM_EMBED_URL")
        .env_remove("NAVMEM_LLM_URL")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let cols: Vec<usize> = ["suite", "config", "top1_accuracy", "success_rate", "travel_distance"]
        .iter()
        .map(|name| headers.iter().position(|h| h == *name).ok_or(format!("missing column {name}")))
        .collect::<Result<_, _>>()?;
    reader
        .records()
        .map(|r| r.map(|r| cols.iter().map(|&c| r[c].to_string()).collect()).map_err(|e| e.to_string()))
        .collect()
}

fn reproducibility() -> Outcome {
    let first = bench_columns()?;
    let second = bench_columns()?;
    if first != second {
        return Err("columns differ between runs".into());
    }
    let oracle: Vec<&Vec<String>> = first.iter().filter(|r| r[1] == "oracle").collect();
    let accuracy_ok = oracle.iter().all(|r| r[2].parse::<f64>() == Ok(1.0));
    let success: Vec<&String> = oracle.iter().map(|r| &r[3]).filter(|s| !s.is_empty()).collect();
    let success_ok = !success.is_empty() && success.iter().all(|s| s.parse::<f64>() == Ok(1.0));
    check(
        !oracle.is_empty() && accuracy_ok && success_ok,
        format!("{} rows identical across runs, oracle accuracy and success 1.0", first.len()),
    )
}

fn unit_anchors() -> Outcome {
    let sigma = 2.0;
    let values = [
        (combo_score(0.0), 1.0),
        (combo_score(1.0), 0.5),
        (gaussian_factor(0.0, sigma), 1.0),
        (gaussian_factor(sigma * 2f64.sqrt(), sigma), (-1f64).exp()),
    ];
    let worst = values.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(worst <= ANCHOR_TOL, format!("max deviation {worst:e}"))
}
