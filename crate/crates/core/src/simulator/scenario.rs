use serde::{Deserialize, Serialize};

use super::SimError;

/// Per-zombie rate range of reference attacks and of the varied mode.
pub const ATTACK_RATE_MIN_MBPS: f64 = 0.1;
pub const ATTACK_RATE_MAX_MBPS: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    None,
    ConstantHigh,
    ConstantLow,
    /// Piecewise-constant per-zombie rate, redrawn each segment uniformly in
    /// `[ATTACK_RATE_MIN_MBPS, ATTACK_RATE_MAX_MBPS]`.
    Varied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub duration_s: f64,
    pub attack_start_s: f64,
    pub attack_end_s: f64,
    pub attack_mode: AttackMode,
    /// Per-zombie rate for the constant modes.
    pub attack_rate_mbps: f64,
    /// Poisson request rate per client (requests per second).
    pub client_request_rate: f64,
    /// Bytes delivered by one legitimate transfer.
    pub client_flow_bytes: u64,
    /// Rate cap of a single legitimate transfer.
    pub client_flow_rate_mbps: f64,
    pub victim_capacity_mbps: f64,
    /// Scale legitimate bytes down to the capacity left over by the attack.
    pub legit_backoff: bool,
    /// Consecutive over-capacity windows that mark the overwhelm time.
    pub k_sustain: u32,
    /// Granularity of emitted flow records; must divide the window length.
    pub slice_ms: u64,
    pub varied_segment_ms: u64,
    pub legit_packet_bytes: u64,
    pub attack_packet_bytes: u64,
    pub rng_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            attack_start_s: 25.0,
            attack_end_s: 50.0,
            attack_mode: AttackMode::ConstantHigh,
            attack_rate_mbps: 3.0,
            client_request_rate: 0.2,
            client_flow_bytes: 125_000,
            client_flow_rate_mbps: 1.0,
            victim_capacity_mbps: 200.0,
            legit_backoff: true,
            k_sustain: 3,
            slice_ms: 50,
            varied_segment_ms: 1000,
            legit_packet_bytes: 1460,
            attack_packet_bytes: 1024,
            rng_seed: 1,
        }
    }
}

fn to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

impl ScenarioSpec {
    pub fn duration_ms(&self) -> u64 {
        to_ms(self.duration_s)
    }

    pub fn attack_start_ms(&self) -> u64 {
        to_ms(self.attack_start_s)
    }

    pub fn attack_end_ms(&self) -> u64 {
        to_ms(self.attack_end_s)
    }

    pub fn has_attack(&self) -> bool {
        self.attack_mode != AttackMode::None
    }

    /// Validates the scenario against a window length. Returns warnings for
    /// settings that are allowed but outside the reference parameter ranges.
    pub fn validate(&self, delta_ms: u64) -> Result<Vec<String>, SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        let finite_non_neg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_non_neg(self.duration_s) || self.duration_ms() == 0 {
            return fail("duration_s must be positive".into());
        }
        if !finite_non_neg(self.attack_start_s) || !finite_non_neg(self.attack_end_s) {
            return fail("attack times must be finite and non-negative".into());
        }
        if !(self.attack_start_ms() < self.attack_end_ms()
            && self.attack_end_ms() <= self.duration_ms())
        {
            return fail("require 0 <= attack_start_s < attack_end_s <= duration_s".into());
        }
        if self.slice_ms == 0 || !delta_ms.is_multiple_of(self.slice_ms) {
            return fail(format!(
                "slice_ms {} must divide delta_ms {delta_ms}",
                self.slice_ms
            ));
        }
        if !self.duration_ms().is_multiple_of(delta_ms) {
            return fail(format!(
                "duration must be a whole number of {delta_ms} ms windows"
            ));
        }
        if !(self.client_request_rate >= 0.0 && self.client_request_rate.is_finite()) {
            return fail("client_request_rate must be finite and non-negative".into());
        }
        if self.client_flow_bytes == 0
            || self.client_flow_rate_mbps.is_nan()
            || self.client_flow_rate_mbps <= 0.0
        {
            return fail("client transfers need positive size and rate".into());
        }
        if self.victim_capacity_mbps.is_nan() || self.victim_capacity_mbps <= 0.0 {
            return fail("victim_capacity_mbps must be positive".into());
        }
        if self.k_sustain == 0 {
            return fail("k_sustain must be at least 1".into());
        }
        if self.varied_segment_ms == 0 {
            return fail("varied_segment_ms must be positive".into());
        }
        if self.legit_packet_bytes == 0 || self.attack_packet_bytes == 0 {
            return fail("packet sizes must be positive".into());
        }

        let mut warnings = Vec::new();
        if matches!(
            self.attack_mode,
            AttackMode::ConstantHigh | AttackMode::ConstantLow
        ) {
            if !(self.attack_rate_mbps > 0.0 && self.attack_rate_mbps.is_finite()) {
                return fail("attack_rate_mbps must be positive".into());
            }
            if !(ATTACK_RATE_MIN_MBPS..=ATTACK_RATE_MAX_MBPS).contains(&self.attack_rate_mbps) {
                warnings.push(format!(
                    "attack_rate_mbps {} outside the reference range [{ATTACK_RATE_MIN_MBPS}, {ATTACK_RATE_MAX_MBPS}]",
                    self.attack_rate_mbps
                ));
            }
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(ScenarioSpec::default().validate(200).unwrap().is_empty());
    }

    #[test]
    fn attack_interval_ordering() {
        let s = ScenarioSpec {
            attack_start_s: 50.0,
            attack_end_s: 25.0,
            ..Default::default()
        };
        assert!(s.validate(200).is_err());
        let s = ScenarioSpec {
            attack_end_s: 70.0,
            ..Default::default()
        };
        assert!(s.validate(200).is_err());
    }

    #[test]
    fn slice_must_divide_window() {
        let s = ScenarioSpec {
            slice_ms: 30,
            ..Default::default()
        };
        assert!(s.validate(200).is_err());
    }

    #[test]
    fn out_of_range_rate_warns() {
        let s = ScenarioSpec {
            attack_rate_mbps: 10.0,
            ..Default::default()
        };
        assert_eq!(s.validate(200).unwrap().len(), 1);
    }

    #[test]
    fn mode_names() {
        let s: ScenarioSpec = serde_json::from_str(r#"{"attack_mode": "constant_low"}"#).unwrap();
        assert_eq!(s.attack_mode, AttackMode::ConstantLow);
        assert!(serde_json::from_str::<ScenarioSpec>(r#"{"bogus": 1}"#).is_err());
    }
}
