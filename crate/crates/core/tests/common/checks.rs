//! One function per acceptance criterion. Each returns an [`Outcome`]; the
//! acceptance runner prints them and the per-module tests assert on them.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safe_explore::episode::Episode;
use safe_explore::frontier::{
    detect_frontiers, frontier_potential, frontier_potentials, state_potential, FrontierSet,
};
use safe_explore::graph::{build_graph, Edge, ExplorationGraph, Node, NodeClass};
use safe_explore::gridworld::AgentMap;
use safe_explore::harness::{run_episodes, run_sweep, seed_range, EvalPlan, Sweep};
use safe_explore::policy::gat::{gatv2_layer_traced, Activation};
use safe_explore::policy::network::{CriticNetwork, PolicyWeights};
use safe_explore::policy::{critic_forward, policy_forward, PolicyFactory, PolicySpec};
use safe_explore::protocol::{Client, ObsPayload, Request, Response, Server, Transition};
use safe_explore::reward::{compute_reward, RewardBranch, RewardParams};
use safe_explore::shield::{feasible_actions, shield, Executed};
use safe_explore::{Action, Cell, CellState, EnvConfig};

use super::*;

pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(name: &'static str, failures: &[String], summary: String) -> Self {
        let detail = match failures.first() {
            None => summary,
            Some(first) => format!("{summary}; {} failure(s), first: {first}", failures.len()),
        };
        Self { name, passed: failures.is_empty(), detail }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }

    pub fn assert(&self) {
        assert!(self.passed, "{}", self.line());
    }
}

fn within(limit: Duration, elapsed: Duration, failures: &mut Vec<String>) -> String {
    if elapsed > limit {
        failures.push(format!("took {elapsed:.1?}, limit {limit:?}"));
    }
    format!("{:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs())
}

// ------------------------------------------------------------------ shield

/// Fuzzed shield calls plus collision replay over full seeded episodes.
pub fn shield_soundness(cases: usize, episodes: usize) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();
    let mut interventions = 0;
    let mut stays = 0;
    for case in 0..cases {
        // alternate arbitrary maps with maps consistent with a ground truth
        let (m, truth) = if case % 2 == 0 {
            let (h, w) = (rng.gen_range(3..13), rng.gen_range(3..13));
            (random_partial_map(&mut rng, h, w), None)
        } else {
            let trunks = rng.gen_range(0..10);
            let truth = random_truth(&mut rng, 12, 12, trunks);
            let scans = rng.gen_range(1..4);
            let m = scanned_map(&mut rng, &truth, scans);
            (m, Some(truth))
        };
        let free = free_cells(&m);
        let Some(&pos) = free.choose(&mut rng) else { continue };
        let proposed = Action::ALL[rng.gen_range(0..8)];
        let mask = oracle_feasible(&m, pos);
        let feasible = feasible_actions(&m, pos);
        let out = shield(proposed, feasible);
        let ctx = || format!("case {case} pos {pos:?} proposed {}", proposed.index());
        if feasible.to_mask() != mask {
            failures.push(format!("{}: feasible set {:?} != oracle {mask:?}", ctx(), feasible.to_mask()));
            continue;
        }
        let candidates: Vec<usize> = (0..8).filter(|&i| mask[i]).collect();
        match out.executed {
            Executed::Stay => {
                stays += 1;
                if !candidates.is_empty() {
                    failures.push(format!("{}: stayed with feasible moves", ctx()));
                }
            }
            Executed::Move(a) => {
                let i = a.index();
                if !mask[i] {
                    failures.push(format!("{}: executed infeasible {i}", ctx()));
                }
                let best = candidates
                    .iter()
                    .copied()
                    .min_by(|&x, &y| oracle_angle(proposed.index(), x).total_cmp(&oracle_angle(proposed.index(), y)))
                    .expect("nonempty");
                if i != best {
                    failures.push(format!("{}: executed {i}, closest-lowest is {best}", ctx()));
                }
                if shield(a, feasible).executed != Executed::Move(a) {
                    failures.push(format!("{}: not idempotent", ctx()));
                }
                if let Some(truth) = &truth {
                    let (dr, dc) = OFFSETS[i];
                    let safe = truth.is_free(pos.offset(dr, dc))
                        && (dr == 0 || dc == 0
                            || truth.is_free(pos.offset(dr, 0)) && truth.is_free(pos.offset(0, dc)));
                    if !safe {
                        failures.push(format!("{}: move {i} collides with ground truth", ctx()));
                    }
                }
            }
        }
        if out.intervened != (out.executed != Executed::Move(proposed)) {
            failures.push(format!("{}: intervened flag wrong", ctx()));
        }
        interventions += usize::from(out.intervened);
    }

    let config = EnvConfig::default();
    let factory = PolicyFactory::Random;
    let mut steps = 0;
    let mut collisions = 0;
    for seed in 0..episodes as u64 {
        let mut ep = Episode::reset(&config, seed).expect("nominal config");
        let mut policy = factory.make(seed);
        while !ep.is_done() {
            let a = policy.propose(&ep.observation()).expect("random policy");
            ep.advance(a).expect("engine step");
        }
        let truth = ep.truth();
        let mut pos = ep.record().start_cell;
        for s in ep.trace() {
            let next = match s.executed {
                None => pos,
                Some(i) => {
                    let (dr, dc) = OFFSETS[i];
                    let ok = truth.is_free(pos.offset(dr, dc))
                        && (dr == 0 || dc == 0 || truth.is_free(pos.offset(dr, 0)) && truth.is_free(pos.offset(0, dc)));
                    if !ok {
                        collisions += 1;
                        failures.push(format!("seed {seed} step {}: collision moving {i} from {pos:?}", s.step));
                    }
                    pos.offset(dr, dc)
                }
            };
            if next != s.agent_cell {
                failures.push(format!("seed {seed} step {}: recorded cell disagrees with replay", s.step));
            }
            pos = next;
        }
        steps += ep.trace().len();
    }
    let time = within(Duration::from_secs(60), start.elapsed(), &mut failures);
    Outcome::new(
        "shield soundness",
        &failures,
        format!(
            "{cases} fuzzed calls ({interventions} interventions, {stays} stays), {episodes} episodes / {steps} steps, {collisions} collisions, {time}"
        ),
    )
}

// ------------------------------------------------------------------- graph

fn compare_graph(g: &ExplorationGraph<f64>, o: &OracleGraph) -> Result<(), String> {
    if g.nodes.len() != o.nodes.len() {
        return Err(format!("{} nodes, oracle {}", g.nodes.len(), o.nodes.len()));
    }
    for (i, (n, on)) in g.nodes.iter().zip(&o.nodes).enumerate() {
        if n.id != i || n.class != on.class || n.cell != on.cell || n.features != on.features {
            return Err(format!("node {i}: {n:?} vs oracle {on:?}"));
        }
    }
    let mut edges: Vec<(usize, usize, f64)> = g.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect();
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    if edges != o.edges {
        let diff = edges.iter().zip(&o.edges).find(|(a, b)| a != b);
        return Err(format!("edges differ ({} vs {}), first {diff:?}", edges.len(), o.edges.len()));
    }
    Ok(())
}

pub fn graph_oracle(maps: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a7);
    let mut failures = Vec::new();
    let mut frontier_nodes = 0;

    // open area fixture
    let open = AgentMap::from_ascii(&["......."; 7]);
    let pos = Cell::new(3, 3);
    let g = build_graph::<f64>(&open, pos, &detect_frontiers(&open), feasible_actions(&open, pos), 7);
    let agent_nav = g.edges.iter().filter(|e| e.src == 0 || e.dst == 0).count();
    let nav_nav = g.edges.iter().filter(|e| e.src != 0 && e.dst != 0).count();
    if (g.nodes.len(), agent_nav, nav_nav) != (9, 16, 24) {
        failures.push(format!("open fixture: {} nodes, {agent_nav} agent-nav, {nav_nav} nav-nav", g.nodes.len()));
    }
    // corner fixture
    let corner = Cell::new(0, 0);
    let g = build_graph::<f64>(&open, corner, &detect_frontiers(&open), feasible_actions(&open, corner), 7);
    let infeasible = g.nav_nodes().iter().filter(|n| n.class == NodeClass::NavInfeasible).count();
    if infeasible != 5 || (g.agent().features[6] - 33.0 / 49.0).abs() > 1e-12 {
        failures.push(format!("corner fixture: {infeasible} infeasible nav nodes"));
    }

    for i in 0..maps {
        let m = random_partial_map(&mut rng, 12, 12);
        let free = free_cells(&m);
        let Some(&pos) = free.choose(&mut rng) else { continue };
        let k = [3, 5, 7][rng.gen_range(0..3)];
        let frontiers = detect_frontiers(&m);
        let oracle_fr = oracle_frontiers(&m);
        if frontiers.cells() != oracle_fr.as_slice() {
            failures.push(format!("map {i}: frontier set differs"));
            continue;
        }
        frontier_nodes += oracle_fr.len();
        let g = build_graph::<f64>(&m, pos, &frontiers, feasible_actions(&m, pos), k);
        let o = oracle_graph(&m, pos, &oracle_fr, oracle_feasible(&m, pos), k);
        if let Err(e) = compare_graph(&g, &o) {
            failures.push(format!("map {i} (k={k}): {e}"));
        }
    }
    Outcome::new(
        "graph oracle",
        &failures,
        format!("{maps} random 12x12 maps ({frontier_nodes} frontier nodes) + open/corner fixtures, exact match"),
    )
}

// ------------------------------------------------------------------- GATv2

fn graph_from(rg: &RandomGraph) -> ExplorationGraph<f64> {
    let nodes = rg
        .features
        .iter()
        .enumerate()
        .map(|(id, f)| Node {
            id,
            class: NodeClass::Frontier,
            cell: Cell::new(0, id as i32),
            features: std::array::from_fn(|j| f[j]),
        })
        .collect();
    let edges = rg.edges.iter().map(|&(src, dst)| Edge { src, dst, weight: 1.0 }).collect();
    ExplorationGraph { nodes, edges }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn gat_numerics(graphs: usize, max_nodes: usize) -> Outcome {
    const ORACLE_TOL: f64 = 1e-5;
    const ATTN_TOL: f64 = 1e-6;
    const PERM_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a7);
    let mut failures = Vec::new();
    let (mut worst_oracle, mut worst_attn, mut worst_perm) = (0.0f64, 0.0f64, 0.0f64);

    for g in 0..graphs {
        let n = if g == 0 { max_nodes } else { rng.gen_range(1..=max_nodes) };
        let rg = random_graph(&mut rng, n);
        let net = random_network(&mut rng);

        // layer 1 against the dense oracle, plus attention normalization
        let trace = gatv2_layer_traced(&rg.features, &rg.edges, &net.layer1, true, Activation::Relu)
            .expect("valid layer");
        let x = nalgebra::DMatrix::from_fn(n, 8, |i, j| rg.features[i][j]);
        let dense = dense_gat_layer(&x, &dense_adjacency(n, &rg.edges), &net.layer1, true, true);
        for i in 0..n {
            let row: Vec<f64> = dense.output.row(i).iter().copied().collect();
            worst_oracle = worst_oracle.max(max_abs_diff(&trace.output[i], &row));
            for (h, alpha) in trace.attention.iter().enumerate() {
                let sum: f64 = alpha[i].iter().sum();
                worst_attn = worst_attn.max((sum - 1.0).abs());
                for (&j, &a) in trace.sets[i].iter().zip(&alpha[i]) {
                    worst_oracle = worst_oracle.max((a - dense.attention[h][(i, j)]).abs());
                }
            }
        }

        // end to end
        let scores = net.node_scores(&rg.features, &rg.edges).expect("valid network");
        let oracle = dense_scores(&net, &rg.features, &rg.edges);
        worst_oracle = worst_oracle.max(max_abs_diff(&scores, &oracle));
        if n >= 9 {
            let critic = CriticNetwork { gnn: net.clone(), fc_weight: rng.gen_range(-2.0..2.0), fc_bias: rng.gen_range(-1.0..1.0) };
            let weights = PolicyWeights { policy: net.clone(), critic: critic.clone() };
            let graph = graph_from(&rg);
            let out = policy_forward(&graph, &weights).expect("policy forward");
            worst_oracle = worst_oracle.max(max_abs_diff(&out.logits, &oracle[1..9]));
            let value = critic_forward(&graph, &weights).expect("critic forward");
            let mean = oracle[..9].iter().sum::<f64>() / 9.0;
            worst_oracle = worst_oracle.max((value - (critic.fc_weight * mean + critic.fc_bias)).abs());
        }

        // relabel nodes
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut features = vec![Vec::new(); n];
        for (i, f) in rg.features.iter().enumerate() {
            features[perm[i]] = f.clone();
        }
        let mut edges: Vec<(usize, usize)> = rg.edges.iter().map(|&(s, d)| (perm[s], perm[d])).collect();
        edges.shuffle(&mut rng);
        let permuted = net.node_scores(&features, &edges).expect("valid network");
        for i in 0..n {
            worst_perm = worst_perm.max((permuted[perm[i]] - scores[i]).abs());
        }
    }

    // frontier insertion order on real observation graphs
    let config = EnvConfig::default();
    let weights = PolicyWeights::<f64>::random(&mut rng);
    for seed in 0..10 {
        let ep = Episode::reset(&config, seed).expect("nominal config");
        let graph = ep.observation().graph().clone();
        let base = policy_forward(&graph, &weights).expect("forward").logits;
        let mut order: Vec<usize> = (9..graph.nodes.len()).collect();
        order.shuffle(&mut rng);
        let mut relabel: Vec<usize> = (0..graph.nodes.len()).collect();
        for (k, &old) in order.iter().enumerate() {
            relabel[old] = 9 + k;
        }
        let mut nodes = graph.nodes.clone();
        for node in &graph.nodes {
            nodes[relabel[node.id]] = Node { id: relabel[node.id], ..node.clone() };
        }
        let mut edges: Vec<Edge<f64>> =
            graph.edges.iter().map(|e| Edge { src: relabel[e.src], dst: relabel[e.dst], weight: e.weight }).collect();
        edges.reverse();
        let shuffled = policy_forward(&ExplorationGraph { nodes, edges }, &weights).expect("forward").logits;
        worst_perm = worst_perm.max(max_abs_diff(&base, &shuffled));
    }

    if worst_oracle > ORACLE_TOL {
        failures.push(format!("dense oracle deviation {worst_oracle:e} > {ORACLE_TOL:e}"));
    }
    if worst_attn > ATTN_TOL {
        failures.push(format!("attention row sum off by {worst_attn:e} > {ATTN_TOL:e}"));
    }
    if worst_perm > PERM_TOL {
        failures.push(format!("permutation deviation {worst_perm:e} > {PERM_TOL:e}"));
    }
    Outcome::new(
        "GATv2 numerics",
        &failures,
        format!(
            "{graphs} graphs up to {max_nodes} nodes: oracle max |diff| {worst_oracle:.1e} (tol {ORACLE_TOL:e}), attention |sum-1| {worst_attn:.1e} (tol {ATTN_TOL:e}), permutation {worst_perm:.1e} (tol {PERM_TOL:e})"
        ),
    )
}

// ------------------------------------------------------- reward / potential

pub fn reward_potential(segments: usize, states: usize) -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e3);
    let config = EnvConfig::default();
    let params = RewardParams { coverage_threshold: 0.98, r_exp: 100.0, r_sigma: -5.0 };

    // branch table
    let mut rows = 0;
    for intervened in [false, true] {
        for coverage in [0.0, 0.5, 0.979_999, 0.98, 0.99, 1.0] {
            for n_e in [0usize, 1, 37] {
                for (before, after) in [(0.0, 0.0), (0.2, 0.7), (0.9, 0.1), (1.0, 1.0)] {
                    rows += 1;
                    let t = compute_reward(coverage, intervened, n_e, before, after, &params);
                    let (branch, value) = if intervened {
                        (RewardBranch::ShieldPenalty, -5.0)
                    } else if coverage >= 0.98 {
                        (RewardBranch::TerminalBonus, 100.0)
                    } else {
                        (RewardBranch::Shaped, n_e as f64 + after - before)
                    };
                    let fields_ok = t.n_e == n_e && t.phi_before == before && t.phi_after == after && t.intervened == intervened;
                    if t.branch != branch || (t.value - value).abs() > 1e-12 || !fields_ok {
                        failures.push(format!(
                            "branch row intervened={intervened} rho={coverage} n_e={n_e} phi=({before},{after}): {t:?}"
                        ));
                    }
                }
            }
        }
    }

    // telescoping over intervention-free, non-terminal segments
    let mut worst_tele = 0.0f64;
    let mut done_segments = 0;
    let mut seed = 0u64;
    while done_segments < segments && seed < 10 * segments as u64 {
        seed += 1;
        let mut ep = Episode::reset(&config, seed).expect("nominal config");
        let mut policy = PolicyFactory::Frontier.make(seed);
        let lead = rng.gen_range(0..200);
        let len = rng.gen_range(5..300);
        for _ in 0..lead {
            if ep.is_done() {
                break;
            }
            let a = policy.propose(&ep.observation()).expect("baseline");
            ep.advance(a).expect("step");
        }
        let fresh = |ep: &Episode| {
            state_potential(ep.agent_map(), &detect_frontiers(ep.agent_map()), ep.agent().position, config.beta, config.window)
        };
        let phi0 = fresh(&ep);
        let (mut sum_r, mut sum_ne, mut taken) = (0.0, 0.0, 0);
        let mut clean = true;
        while taken < len && !ep.is_done() {
            let a = policy.propose(&ep.observation()).expect("baseline");
            let rec = ep.advance(a).expect("step");
            if rec.intervened || rec.reward.branch != RewardBranch::Shaped {
                clean = false;
                break;
            }
            sum_r += rec.reward.value;
            sum_ne += rec.n_e as f64;
            taken += 1;
        }
        if !clean || taken == 0 {
            continue;
        }
        let err = (sum_r - (sum_ne + fresh(&ep) - phi0)).abs();
        worst_tele = worst_tele.max(err);
        done_segments += 1;
    }
    if done_segments < segments {
        failures.push(format!("only {done_segments} clean segments found"));
    }
    if worst_tele > 1e-9 {
        failures.push(format!("telescoping error {worst_tele:e} > 1e-9"));
    }

    // normalized potential bounds
    let mut evaluated = 0;
    for _ in 0..states {
        let (h, w) = (rng.gen_range(8..40), rng.gen_range(8..40));
        let m = random_partial_map(&mut rng, h, w);
        let Some(&pos) = free_cells(&m).choose(&mut rng) else { continue };
        let beta = rng.gen_range(0.0..3.0);
        let k = [3, 5, 7, 9][rng.gen_range(0..4)];
        let fr = detect_frontiers(&m);
        let all = frontier_potentials::<f64>(&m, &fr, pos, beta, k);
        let phi = state_potential::<f64>(&m, &fr, pos, beta, k);
        let max = all.iter().map(|f| f.normalized).fold(0.0, f64::max);
        if all.iter().any(|f| !(0.0..=1.0).contains(&f.normalized)) || !(0.0..=1.0).contains(&phi) || phi != max {
            failures.push(format!("potential out of [0,1] or not the max on {h}x{w} map, beta {beta}, k {k}"));
        }
        evaluated += 1;
    }

    // worked example: 50x50, frontier at distance 5 with 25 unknown cells in its window
    let row = ".".repeat(50);
    let mut m = AgentMap::from_ascii(&vec![row.as_str(); 50]);
    let frontier = Cell::new(20, 25);
    let mut unknown = 0;
    'fill: for r in 17..=23 {
        for c in 22..=28 {
            if unknown == 25 {
                break 'fill;
            }
            let cell = Cell::new(r, c);
            if cell != frontier {
                m.set(cell, CellState::Unknown);
                unknown += 1;
            }
        }
    }
    let agent = Cell::new(20, 20);
    let fs = FrontierSet::from_cells(50, 50, [frontier]);
    let worked = frontier_potentials::<f64>(&m, &fs, agent, 0.5, 7)[0];
    let direct = frontier_potential(frontier, 5.0, 25, 5000f64.sqrt(), 7, 0.5);
    let expected = 0.78959;
    if worked.gain != 25 || (worked.normalized - expected).abs() > 1e-5 || (direct.normalized - expected).abs() > 1e-5 {
        failures.push(format!("worked example gave {} (gain {})", worked.normalized, worked.gain));
    }

    Outcome::new(
        "reward/potential",
        &failures,
        format!(
            "{rows} branch rows, {done_segments} telescoping segments (max err {worst_tele:.1e}, tol 1e-9), {evaluated} random states in [0,1], worked example {:.5} (target {expected} +/- 1e-5)",
            worked.normalized
        ),
    )
}

// --------------------------------------------------------------- coverage

pub fn baseline_coverage(seeds: usize) -> Outcome {
    let start = Instant::now();
    let config = EnvConfig::default();
    let records = run_episodes(&config, &PolicyFactory::Frontier, &seed_range(0, seeds), 2500, 0)
        .expect("baseline episodes");
    let reached = records.iter().filter(|r| r.final_coverage >= 0.95).count();
    let share = reached as f64 / seeds as f64;
    let mut failures = Vec::new();
    if share < 0.9 {
        failures.push(format!("{reached}/{seeds} reached 95%"));
    }
    let mean_steps = records.iter().map(|r| r.steps.len()).sum::<usize>() as f64 / seeds as f64;
    let time = within(Duration::from_secs(600), start.elapsed(), &mut failures);
    Outcome::new(
        "baseline coverage",
        &failures,
        format!("{reached}/{seeds} episodes reached >=95% coverage within 2500 steps (need >=90%), mean {mean_steps:.0} steps, {time}"),
    )
}

// ------------------------------------------------------------- robustness

pub fn robustness_trend(seeds: usize) -> Outcome {
    let plan = EvalPlan { policy: PolicySpec::Random, seeds: seed_range(0, seeds), steps: 2500, workers: 0 };
    let sweep = Sweep::TreeCount(vec![45, 60, 75]);
    let summaries = run_sweep(&EnvConfig::default(), &sweep, &plan, None).expect("sweep");
    let medians: Vec<f64> = summaries.iter().map(|s| s.median_intervention_rate()).collect();
    let mut failures = Vec::new();
    if medians.windows(2).any(|w| w[1] < w[0]) {
        failures.push(format!("medians not nondecreasing: {medians:?}"));
    }
    let listed: Vec<String> = summaries
        .iter()
        .zip(&medians)
        .map(|(s, m)| format!("{}={m:.4}", s.label))
        .collect();
    Outcome::new(
        "robustness trend",
        &failures,
        format!("random policy, {seeds} seeds per variant, median intervention rate {}", listed.join(" ")),
    )
}

// --------------------------------------------------------------- protocol

/// Action script for pair `i`: baseline-driven (reaches termination) for
/// even `i`, uniformly random otherwise.
fn script(config: &EnvConfig, seed: u64, i: usize, max_len: usize) -> Vec<usize> {
    if i % 2 == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        return (0..max_len).map(|_| rng.gen_range(0..8)).collect();
    }
    let mut ep = Episode::reset(config, seed).expect("config");
    let mut policy = PolicyFactory::Frontier.make(seed);
    let mut out = Vec::new();
    while !ep.is_done() && out.len() < max_len {
        let a = policy.propose(&ep.observation()).expect("baseline");
        ep.advance(a).expect("step");
        out.push(a.index());
    }
    out
}

pub fn protocol_equivalence(pairs: usize) -> Outcome {
    let base = EnvConfig::default();
    let server = Server::bind("127.0.0.1:0", base.clone()).expect("bind");
    let addr = server.local_addr().expect("addr");
    std::thread::spawn(move || server.run());
    let mut client = Client::connect(addr).expect("connect");

    let mut failures = Vec::new();
    let mut transitions = 0;
    let mut finished = 0;
    for i in 0..pairs {
        let seed = 1000 + 37 * i as u64;
        // small maps for half of the runs so scripted episodes terminate by coverage
        let overrides = (i % 4 < 2).then(|| serde_json::json!({"h": 16, "w": 16, "n_t": 6}));
        let config = match &overrides {
            Some(o) => base.with_overrides(o).expect("overrides"),
            None => base.clone(),
        };
        let actions = script(&config, seed, i, 400);

        let mut ep = Episode::reset(&config, seed).expect("config");
        let expected = Response::Obs(ObsPayload::from_observation(&ep.observation()));
        let got = client.request(&Request::Reset { seed, overrides }).expect("reset reply");
        if got != expected {
            failures.push(format!("pair {i}: reset observation differs"));
            continue;
        }
        for (t, &a) in actions.iter().enumerate() {
            let got = client.request(&Request::Step { action: a as i64 }).expect("step reply");
            let (record, obs, done) = ep.step(Action::from_index(a).expect("scripted action")).expect("engine step");
            let expected = Response::Transition(Transition::new(&record, &obs, done));
            transitions += 1;
            if got != expected {
                failures.push(format!("pair {i} step {t}: transition differs"));
                break;
            }
            if done {
                finished += 1;
                let after = client.request(&Request::Step { action: 0 }).expect("reply");
                if !matches!(after, Response::Error(_)) {
                    failures.push(format!("pair {i}: step after done accepted"));
                }
                break;
            }
        }
    }
    let closed = client.request(&Request::Close).expect("close reply");
    if closed != Response::Close {
        failures.push("close not acknowledged".into());
    }
    Outcome::new(
        "protocol equivalence",
        &failures,
        format!("{pairs} (seed, script) pairs over TCP, {transitions} transitions ({finished} episodes run to done) equal to in-process traces"),
    )
}
