//! Deterministic fluid flow-level traffic simulator.
//!
//! Legitimate clients open transfers at Poisson arrival times; each transfer
//! delivers a fixed byte count at a capped per-flow rate. Zombies emit
//! constant or piecewise-varied byte rates during the attack interval and
//! never back off. Bytes are integrated over record slices and aggregated
//! into windows at the victim's access router and at every edge router.
//!
//! Every random stream is derived from the scenario seed plus a fixed stream
//! id per endpoint, so legitimate traffic is identical between an attack run
//! and a no-attack run with the same seed.

mod scenario;
mod topology;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::flow_model::{
    window_partition_span, FlowModelError, FlowRecord, WindowStats, WindowingConfig,
};

pub use scenario::{AttackMode, ScenarioSpec, ATTACK_RATE_MAX_MBPS, ATTACK_RATE_MIN_MBPS};
pub use topology::{
    build_topology, EdgeId, Endpoint, EndpointKind, StubDomain, Topology, TopologySpec,
};

const CLIENT_STREAM_BASE: u64 = 0x1000_0000;
const ZOMBIE_STREAM_BASE: u64 = 0x2000_0000;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Windowing(#[from] FlowModelError),
}

pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mbps_to_bytes_per_s(mbps: f64) -> f64 {
    mbps * 1e6 / 8.0
}

/// A simulated run with ground truth.
#[derive(Debug, Clone)]
pub struct LabeledTrace {
    pub delta_ms: u64,
    pub victim_windows: Vec<WindowStats>,
    /// Indexed by `EdgeId.0`.
    pub edge_windows: Vec<Vec<WindowStats>>,
    pub truth: Vec<bool>,
    pub t_a_ms: Option<u64>,
    pub t_b_ms: Option<u64>,
    pub attack_end_ms: Option<u64>,
    /// Attack bytes reaching the victim per window.
    pub attack_bytes: Vec<u64>,
    pub victim_records: Vec<FlowRecord>,
    pub edge_records: Vec<Vec<FlowRecord>>,
}

impl LabeledTrace {
    pub fn window_count(&self) -> usize {
        self.victim_windows.len()
    }
}

/// Per-slice byte contributions, indexed by endpoint position.
struct SliceLoad {
    legit: Vec<(u32, u64)>,
    attack: Vec<(u32, u64)>,
}

fn legit_contributions(
    topology: &Topology,
    scenario: &ScenarioSpec,
    slices: usize,
) -> Vec<Vec<(u32, u64)>> {
    let mut per_slice: Vec<Vec<(u32, u64)>> = vec![Vec::new(); slices];
    if scenario.client_request_rate <= 0.0 {
        return per_slice;
    }
    let slice_us = scenario.slice_ms as i64 * 1000;
    let horizon_us = scenario.duration_ms() as i64 * 1000;
    let rate = mbps_to_bytes_per_s(scenario.client_flow_rate_mbps);
    let total = scenario.client_flow_bytes;
    let transfer_us = ((total as f64 / rate) * 1e6).ceil() as i64;
    let gaps = Exp::new(scenario.client_request_rate).expect("positive request rate");
    let delivered = |start: i64, t: i64| -> u64 {
        if t <= start {
            return 0;
        }
        ((rate * (t - start) as f64 / 1e6).floor() as u64).min(total)
    };

    for client in &topology.clients {
        let mut rng = seeded_stream(scenario.rng_seed, CLIENT_STREAM_BASE + client.index as u64);
        // Start in steady state: transfers may begin before time zero.
        let mut start = -transfer_us + (gaps.sample(&mut rng) * 1e6) as i64;
        while start < horizon_us {
            let end = start + transfer_us;
            let first = (start.max(0) / slice_us) as usize;
            let last = ((end.min(horizon_us) + slice_us - 1) / slice_us) as usize;
            for (s, slot) in per_slice
                .iter_mut()
                .enumerate()
                .take(last.min(slices))
                .skip(first)
            {
                let lo = s as i64 * slice_us;
                let hi = lo + slice_us;
                let bytes = delivered(start, hi) - delivered(start, lo);
                if bytes == 0 {
                    continue;
                }
                match slot.last_mut() {
                    Some((c, b)) if *c == client.index => *b += bytes,
                    _ => slot.push((client.index, bytes)),
                }
            }
            start += (gaps.sample(&mut rng) * 1e6) as i64;
        }
    }
    per_slice
}

/// Cumulative bytes a zombie has sent `elapsed_ms` after attack onset.
struct AttackSchedule {
    segment_ms: u64,
    /// Per-segment rates in bytes/s; a single entry for constant modes.
    rates: Vec<f64>,
    /// Cumulative bytes at each segment start.
    prefix: Vec<f64>,
}

impl AttackSchedule {
    fn constant(rate_bps: f64, span_ms: u64) -> Self {
        Self {
            segment_ms: span_ms.max(1),
            rates: vec![rate_bps],
            prefix: vec![0.0],
        }
    }

    fn varied(rng: &mut ChaCha8Rng, segment_ms: u64, span_ms: u64) -> Self {
        let n = span_ms.div_ceil(segment_ms) as usize;
        let rates: Vec<f64> = (0..n)
            .map(|_| {
                mbps_to_bytes_per_s(rng.random_range(ATTACK_RATE_MIN_MBPS..=ATTACK_RATE_MAX_MBPS))
            })
            .collect();
        let mut prefix = Vec::with_capacity(n);
        let mut acc = 0.0;
        for r in &rates {
            prefix.push(acc);
            acc += r * segment_ms as f64 / 1000.0;
        }
        Self {
            segment_ms,
            rates,
            prefix,
        }
    }

    fn cumulative(&self, elapsed_ms: u64) -> u64 {
        let seg = ((elapsed_ms / self.segment_ms) as usize).min(self.rates.len() - 1);
        let into = elapsed_ms - seg as u64 * self.segment_ms;
        (self.prefix[seg] + self.rates[seg] * into as f64 / 1000.0).floor() as u64
    }
}

fn attack_contributions(
    topology: &Topology,
    scenario: &ScenarioSpec,
    slices: usize,
) -> Vec<Vec<(u32, u64)>> {
    let mut per_slice: Vec<Vec<(u32, u64)>> = vec![Vec::new(); slices];
    if !scenario.has_attack() {
        return per_slice;
    }
    let t_a = scenario.attack_start_ms();
    let t_end = scenario.attack_end_ms();
    let span = t_end - t_a;
    for zombie in &topology.zombies {
        let schedule = match scenario.attack_mode {
            AttackMode::Varied => {
                let mut rng =
                    seeded_stream(scenario.rng_seed, ZOMBIE_STREAM_BASE + zombie.index as u64);
                AttackSchedule::varied(&mut rng, scenario.varied_segment_ms, span)
            }
            _ => AttackSchedule::constant(mbps_to_bytes_per_s(scenario.attack_rate_mbps), span),
        };
        for (s, slot) in per_slice.iter_mut().enumerate() {
            let lo = s as u64 * scenario.slice_ms;
            let hi = lo + scenario.slice_ms;
            if hi <= t_a || lo >= t_end {
                continue;
            }
            let from = lo.max(t_a) - t_a;
            let to = hi.min(t_end) - t_a;
            let bytes = schedule.cumulative(to) - schedule.cumulative(from);
            if bytes > 0 {
                slot.push((zombie.index, bytes));
            }
        }
    }
    per_slice
}

/// Runs one scenario over a topology.
pub fn run_scenario(
    topology: &Topology,
    scenario: &ScenarioSpec,
    windowing: &WindowingConfig,
) -> Result<LabeledTrace, SimError> {
    windowing.validate()?;
    scenario.validate(windowing.delta_ms)?;
    let delta = windowing.delta_ms;
    let slices = (scenario.duration_ms() / scenario.slice_ms) as usize;
    let window_count = scenario.duration_ms() / delta;

    let legit = legit_contributions(topology, scenario, slices);
    let attack = attack_contributions(topology, scenario, slices);
    let capacity_per_slice =
        (mbps_to_bytes_per_s(scenario.victim_capacity_mbps) * scenario.slice_ms as f64 / 1000.0)
            .floor() as u64;

    let client_flows: Vec<_> = topology.clients.iter().map(|e| e.flow_id()).collect();
    let zombie_flows: Vec<_> = topology.zombies.iter().map(|e| e.flow_id()).collect();
    let packets = |bytes: u64, size: u64| bytes.div_ceil(size);

    let mut victim_records = Vec::new();
    let mut edge_records: Vec<Vec<FlowRecord>> = vec![Vec::new(); topology.edge_count()];
    let mut attack_bytes = vec![0u64; window_count as usize];

    for (s, load) in legit
        .into_iter()
        .zip(attack)
        .map(|(legit, attack)| SliceLoad { legit, attack })
        .enumerate()
    {
        let ts = (s as u64 + 1) * scenario.slice_ms;
        let offered_attack: u64 = load.attack.iter().map(|(_, b)| b).sum();
        let offered_legit: u64 = load.legit.iter().map(|(_, b)| b).sum();
        let scale = (scenario.legit_backoff && offered_attack + offered_legit > capacity_per_slice)
            .then(|| capacity_per_slice.saturating_sub(offered_attack));

        for (client, bytes) in load.legit {
            let bytes = match scale {
                Some(avail) => (bytes as u128 * avail as u128 / offered_legit as u128) as u64,
                None => bytes,
            };
            if bytes == 0 {
                continue;
            }
            let rec = FlowRecord::new(
                ts,
                client_flows[client as usize].clone(),
                bytes,
                packets(bytes, scenario.legit_packet_bytes),
            );
            edge_records[topology.clients[client as usize].edge.0 as usize].push(rec.clone());
            victim_records.push(rec);
        }
        for (zombie, bytes) in load.attack {
            attack_bytes[(windowing.window_of(ts) - 1) as usize] += bytes;
            let rec = FlowRecord::new(
                ts,
                zombie_flows[zombie as usize].clone(),
                bytes,
                packets(bytes, scenario.attack_packet_bytes),
            );
            edge_records[topology.zombies[zombie as usize].edge.0 as usize].push(rec.clone());
            victim_records.push(rec);
        }
    }

    let victim_windows = window_partition_span(&victim_records, windowing, window_count)?;
    let edge_windows = edge_records
        .iter()
        .map(|r| window_partition_span(r, windowing, window_count))
        .collect::<Result<Vec<_>, _>>()?;

    let attacking = scenario.has_attack() && !topology.zombies.is_empty();
    let (t_a, t_end) = (scenario.attack_start_ms(), scenario.attack_end_ms());
    let truth: Vec<bool> = (1..=window_count)
        .map(|w| attacking && (w - 1) * delta < t_end && w * delta > t_a)
        .collect();

    let t_b_ms = if attacking {
        let onset = windowing.window_of(t_a + 1) as usize - 1;
        overwhelm_time(
            &victim_windows[onset..],
            delta,
            scenario.victim_capacity_mbps,
            scenario.k_sustain,
        )
    } else {
        None
    };

    Ok(LabeledTrace {
        delta_ms: delta,
        victim_windows,
        edge_windows,
        truth,
        t_a_ms: attacking.then_some(t_a),
        t_b_ms,
        attack_end_ms: attacking.then_some(t_end),
        attack_bytes,
        victim_records,
        edge_records,
    })
}

/// End time of the `k_sustain`-th window of the first run of consecutive
/// windows whose offered load strictly exceeds `capacity_mbps`.
pub fn overwhelm_time(
    windows: &[WindowStats],
    delta_ms: u64,
    capacity_mbps: f64,
    k_sustain: u32,
) -> Option<u64> {
    let k = k_sustain.max(1) as usize;
    let capacity_bytes = mbps_to_bytes_per_s(capacity_mbps) * delta_ms as f64 / 1000.0;
    let mut run = 0usize;
    for w in windows {
        if w.volume_bytes as f64 > capacity_bytes {
            run += 1;
            if run == k {
                return Some(w.window_end_ms);
            }
        } else {
            run = 0;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_model::MeasureKind;

    const SET: [MeasureKind; 2] = [MeasureKind::Volume, MeasureKind::Flow];

    fn at_mbps(i: u64, mbps: f64) -> WindowStats {
        let bytes = (mbps * 1e6 / 8.0 * 0.2) as u64;
        WindowStats::summary(i, i * 200, bytes, 1, &SET)
    }

    #[test]
    fn overwhelm_never() {
        let w: Vec<_> = (1..=300).map(|i| at_mbps(i, 5.0)).collect();
        assert_eq!(overwhelm_time(&w, 200, 10.0, 3), None);
    }

    #[test]
    fn overwhelm_after_sustained_run() {
        let w: Vec<_> = (1..=300)
            .map(|i| at_mbps(i, if i >= 130 { 12.0 } else { 5.0 }))
            .collect();
        assert_eq!(overwhelm_time(&w, 200, 10.0, 3), Some(132 * 200));
    }

    #[test]
    fn single_spike_is_not_overwhelm() {
        let w: Vec<_> = (1..=300)
            .map(|i| at_mbps(i, if i == 50 { 50.0 } else { 5.0 }))
            .collect();
        assert_eq!(overwhelm_time(&w, 200, 10.0, 3), None);
        assert_eq!(overwhelm_time(&w, 200, 10.0, 1), Some(50 * 200));
    }

    #[test]
    fn varied_schedule_stays_in_range() {
        let mut rng = seeded_stream(1, 9);
        let s = AttackSchedule::varied(&mut rng, 1000, 25_000);
        assert_eq!(s.rates.len(), 25);
        for r in &s.rates {
            let mbps = r * 8.0 / 1e6;
            assert!((ATTACK_RATE_MIN_MBPS..=ATTACK_RATE_MAX_MBPS).contains(&mbps));
        }
        assert!(s.cumulative(1000) <= s.cumulative(1001));
    }

    #[test]
    fn constant_schedule_is_exact() {
        let s = AttackSchedule::constant(mbps_to_bytes_per_s(3.0), 25_000);
        assert_eq!(s.cumulative(200), 75_000);
        assert_eq!(s.cumulative(25_000), 9_375_000);
    }
}
