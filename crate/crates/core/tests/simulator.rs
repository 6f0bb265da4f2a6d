use std::collections::BTreeSet;

use volflow::flow_model::{FlowId, MeasureKind, WindowingConfig};
use volflow::simulator::{
    build_topology, run_scenario, AttackMode, LabeledTrace, ScenarioSpec, TopologySpec,
};

fn windowing() -> WindowingConfig {
    WindowingConfig {
        delta_ms: 200,
        measure_set: vec![MeasureKind::Volume, MeasureKind::Flow],
    }
}

fn topology(clients: u32, zombies: u32) -> TopologySpec {
    TopologySpec {
        clients_total: clients,
        zombies_total: zombies,
        ..Default::default()
    }
}

fn scenario(mode: AttackMode, rate: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        duration_s: 30.0,
        attack_start_s: 10.0,
        attack_end_s: 20.0,
        attack_mode: mode,
        attack_rate_mbps: rate,
        rng_seed: seed,
        ..Default::default()
    }
}

fn run(topo: &TopologySpec, sc: &ScenarioSpec) -> LabeledTrace {
    let t = build_topology(topo, sc.rng_seed).unwrap();
    run_scenario(&t, sc, &windowing()).unwrap()
}

fn flows(w: &volflow::flow_model::WindowStats) -> BTreeSet<FlowId> {
    w.active_flows().unwrap().into_iter().collect()
}

#[test]
fn same_seed_same_trace() {
    let topo = topology(200, 50);
    let sc = scenario(AttackMode::Varied, 1.8, 17);
    let (a, b) = (run(&topo, &sc), run(&topo, &sc));
    assert_eq!(a.victim_records, b.victim_records);
    assert_eq!(a.edge_records, b.edge_records);
    assert_eq!(a.victim_windows, b.victim_windows);
    assert_eq!((a.t_a_ms, a.t_b_ms), (b.t_a_ms, b.t_b_ms));
    let c = run(&topo, &ScenarioSpec { rng_seed: 18, ..sc });
    assert_ne!(a.victim_records, c.victim_records);
}

#[test]
fn victim_traffic_is_the_sum_of_edges() {
    for (mode, rate, capacity) in [
        (AttackMode::None, 1.0, 200.0),
        (AttackMode::ConstantHigh, 3.0, 200.0),
        (AttackMode::ConstantLow, 0.1, 200.0),
        (AttackMode::Varied, 1.8, 100.0),
    ] {
        let sc = ScenarioSpec {
            victim_capacity_mbps: capacity,
            ..scenario(mode, rate, 5)
        };
        let trace = run(&topology(300, 80), &sc);
        for (i, victim) in trace.victim_windows.iter().enumerate() {
            let edges: Vec<_> = trace.edge_windows.iter().map(|e| &e[i]).collect();
            assert_eq!(
                victim.volume_bytes,
                edges.iter().map(|e| e.volume_bytes).sum::<u64>()
            );
            let union: BTreeSet<FlowId> = edges.iter().flat_map(|e| flows(e)).collect();
            assert_eq!(flows(victim), union);
            assert_eq!(victim.flow_count, union.len() as u64);
        }
    }
}

#[test]
fn attack_adds_exactly_its_bytes() {
    let topo = topology(200, 100);
    for (mode, rate) in [
        (AttackMode::ConstantHigh, 3.0),
        (AttackMode::ConstantLow, 0.1),
        (AttackMode::Varied, 1.8),
    ] {
        // Capacity far above peak load, so legitimate traffic never backs off.
        let attack = ScenarioSpec {
            victim_capacity_mbps: 1e6,
            ..scenario(mode, rate, 9)
        };
        let normal = ScenarioSpec {
            attack_mode: AttackMode::None,
            ..attack.clone()
        };
        let (a, n) = (run(&topo, &attack), run(&topo, &normal));
        for (i, (wa, wn)) in a.victim_windows.iter().zip(&n.victim_windows).enumerate() {
            assert_eq!(
                wa.volume_bytes - wn.volume_bytes,
                a.attack_bytes[i],
                "window {}",
                i + 1
            );
            assert_eq!(a.attack_bytes[i] > 0, a.truth[i], "window {}", i + 1);
        }
    }
}

#[test]
fn truth_covers_the_attack_interval() {
    let trace = run(
        &topology(100, 20),
        &scenario(AttackMode::ConstantHigh, 3.0, 2),
    );
    let attack_windows: Vec<usize> = (0..trace.truth.len())
        .filter(|i| trace.truth[*i])
        .map(|i| i + 1)
        .collect();
    assert_eq!(attack_windows, (51..=100).collect::<Vec<_>>());
    assert_eq!(trace.t_a_ms, Some(10_000));
    assert_eq!(trace.attack_end_ms, Some(20_000));
    let normal = run(&topology(100, 20), &scenario(AttackMode::None, 3.0, 2));
    assert!(normal.truth.iter().all(|t| !t));
    assert_eq!((normal.t_a_ms, normal.t_b_ms), (None, None));
}

#[test]
fn high_rate_adds_seven_and_a_half_megabytes_per_window() {
    let trace = run(
        &topology(400, 100),
        &scenario(AttackMode::ConstantHigh, 3.0, 4),
    );
    let expected = 100.0 * 3e6 / 8.0 * 0.2;
    for (bytes, t) in trace.attack_bytes.iter().zip(&trace.truth) {
        if *t {
            assert!((*bytes as f64 - expected).abs() <= 100.0, "{bytes}");
        }
    }
}

#[test]
fn low_rate_adds_a_quarter_megabyte_and_many_flows() {
    let topo = topology(400, 100);
    let attack = ScenarioSpec {
        victim_capacity_mbps: 1e6,
        ..scenario(AttackMode::ConstantLow, 0.1, 4)
    };
    let normal = ScenarioSpec {
        attack_mode: AttackMode::None,
        ..attack.clone()
    };
    let (a, n) = (run(&topo, &attack), run(&topo, &normal));
    for i in (0..a.truth.len()).filter(|i| a.truth[*i]) {
        assert!((a.attack_bytes[i] as f64 - 250_000.0).abs() <= 100.0);
        let extra = a.victim_windows[i].flow_count - n.victim_windows[i].flow_count;
        assert_eq!(extra, 100);
    }
}

#[test]
fn overwhelm_follows_onset() {
    let topo = topology(400, 100);
    let mut seen = 0;
    for seed in 1..=8 {
        for (mode, rate) in [(AttackMode::ConstantHigh, 3.0), (AttackMode::Varied, 1.8)] {
            let sc = ScenarioSpec {
                victim_capacity_mbps: 100.0,
                ..scenario(mode, rate, seed)
            };
            let trace = run(&topo, &sc);
            if let Some(t_b) = trace.t_b_ms {
                seen += 1;
                assert!(trace.t_a_ms.unwrap() < t_b);
            }
        }
    }
    assert!(seen > 0);
    let calm = run(
        &topo,
        &ScenarioSpec {
            victim_capacity_mbps: 1e6,
            ..scenario(AttackMode::ConstantHigh, 3.0, 1)
        },
    );
    assert_eq!(calm.t_b_ms, None);
}
