//! Solution file text: `key value` lines, spins as a `spins` line of ±1.

use spinglass::{IsingInstance, SpinConfiguration};

pub struct SolutionText(String);

impl SolutionText {
    pub fn new(solver: &str, instance: &IsingInstance, config: &SpinConfiguration, energy: i64) -> Self {
        let mut s = String::from("# spinglass solution\n");
        s.push_str(&format!("solver {solver}\n"));
        s.push_str(&format!("n {}\n", instance.n));
        s.push_str(&format!("energy {}\n", instance.format_value(energy)));
        let spins: Vec<String> = config.spins().iter().map(|v| format!("{v:+}")).collect();
        s.push_str(&format!("spins {}\n", spins.join(" ")));
        SolutionText(s)
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push_str(&format!("{key} {value}\n"));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0.into_bytes()
    }
}
