//! Machine-readable summary of one invocation.

use std::time::Duration;

use otsat::saturation::SaturationStats;
use otsat::ClassReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

impl Input {
    pub fn new(path: &str, content: &str) -> Self {
        let digest = Sha256::digest(content.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Input {
            path: path.to_string(),
            sha256,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub order: u32,
    pub flat: bool,
    pub shallow: bool,
    pub unary: bool,
    pub linear: bool,
    pub nondeterministic: bool,
    pub complexity_class: String,
}

impl From<&ClassReport> for ClassSummary {
    fn from(r: &ClassReport) -> Self {
        ClassSummary {
            order: r.order,
            flat: r.is_flat,
            shallow: r.is_shallow,
            unary: r.is_unary,
            linear: r.is_linear,
            nondeterministic: r.is_nondeterministic,
            complexity_class: r.complexity_class.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub added_transitions: usize,
    pub created_deep_states: usize,
    pub pattern_states: usize,
    pub iterations: usize,
}

impl From<&SaturationStats> for StatsSummary {
    fn from(s: &SaturationStats) -> Self {
        StatsSummary {
            added_transitions: s.added_transitions,
            created_deep_states: s.created_deep_states,
            pattern_states: s.pattern_states,
            iterations: s.iterations,
        }
    }
}

/// Wall-clock times in microseconds; the only non-deterministic part.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub parse_us: u128,
    pub run_us: u128,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<Input>,
    pub verdict: Option<String>,
    pub class: Option<ClassSummary>,
    pub saturation: Option<StatsSummary>,
    pub exit_code: u8,
    pub error: Option<String>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn add_input(&mut self, path: &str, content: &str) {
        self.inputs.push(Input::new(path, content));
    }

    pub fn parsed(&mut self, d: Duration) {
        self.timings.parse_us += d.as_micros();
    }

    pub fn ran(&mut self, d: Duration) {
        self.timings.run_us += d.as_micros();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_lowercase_hex() {
        let i = Input::new("x", "abc");
        assert_eq!(i.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn field_order_is_stable() {
        let r = RunReport::new("validate");
        let json = r.to_json();
        let keys: Vec<usize> = ["\"command\"", "\"inputs\"", "\"verdict\"", "\"timings\""]
            .iter()
            .map(|k| json.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }
}
