//! Scenarios shipped with the binary.

use crate::config::{ConfigError, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub transform: &'static str,
    pub description: &'static str,
    source: &'static str,
}

impl Builtin {
    pub fn source(&self) -> &'static str {
        self.source
    }

    pub fn config(&self) -> ScenarioConfig {
        ScenarioConfig::from_toml(self.source).expect("builtin scenarios are valid")
    }
}

const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "example3_1",
        transform: "power",
        description: "unit uniform maxima under m^(n/ln n) at level 0.9; ratio criterion gives i.o. = 0",
        source: include_str!("../scenarios/example3_1.toml"),
    },
    Builtin {
        name: "example3_2",
        transform: "scale",
        description: "Pareto F(x) = 1 - 1/x maxima scaled by ln(n)/n at level 2; sum P(A_n) diverges, ratio criterion gives i.o. = 0",
        source: include_str!("../scenarios/example3_2.toml"),
    },
    Builtin {
        name: "example3_2_log_squared",
        transform: "scale",
        description: "as example3_2 with a_n = (ln n)^2/n; sum P(A_n) converges",
        source: include_str!("../scenarios/example3_2_log_squared.toml"),
    },
];

/// Builtin scenarios in a fixed order.
pub fn list_builtins() -> &'static [Builtin] {
    BUILTINS
}

pub fn builtin(name: &str) -> Result<ScenarioConfig, ConfigError> {
    BUILTINS
        .iter()
        .find(|b| b.name == name)
        .map(Builtin::config)
        .ok_or_else(|| {
            let names: Vec<_> = BUILTINS.iter().map(|b| b.name).collect();
            ConfigError::new(
                "--builtin",
                format!("unknown builtin `{name}` (available: {})", names.join(", ")),
            )
        })
}
