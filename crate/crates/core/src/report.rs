use serde::{Deserialize, Serialize};

use crate::model::{ColorId, Configuration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundKind {
    Initial,
    TwoChoices,
    Propagation,
}

/// State after one synchronous round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    /// Global round index; 0 is the input state.
    pub round: u64,
    /// 1-based phase of the memory protocol, `None` for plain two-choices.
    pub phase: Option<u32>,
    pub kind: RoundKind,
    pub configuration: Configuration,
    /// Set bits per color (`x_j(t)`), memory protocol only.
    pub set_counts: Option<Vec<u64>>,
    pub converged: bool,
}

impl RoundReport {
    pub(crate) fn new(
        round: u64,
        phase: Option<u32>,
        kind: RoundKind,
        configuration: Configuration,
        set_counts: Option<Vec<u64>>,
    ) -> Self {
        let converged = configuration.is_unanimous();
        RoundReport {
            round,
            phase,
            kind,
            configuration,
            set_counts,
            converged,
        }
    }

    /// `x(t)`.
    pub fn set_total(&self) -> Option<u64> {
        self.set_counts.as_ref().map(|s| s.iter().sum())
    }
}

/// Summary of a synchronous run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub rounds: u64,
    pub phases: Option<u32>,
    pub converged: bool,
    pub winner: Option<ColorId>,
    pub final_configuration: Configuration,
}

impl RunOutcome {
    pub(crate) fn from_final(
        rounds: u64,
        phases: Option<u32>,
        final_configuration: Configuration,
    ) -> Self {
        let winner = final_configuration.unanimous();
        RunOutcome {
            rounds,
            phases,
            converged: winner.is_some(),
            winner,
            final_configuration,
        }
    }
}

/// Summary of an asynchronous run. One time unit is `n` activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncOutcome {
    pub activations: u64,
    pub time_units: f64,
    /// Instructions executed by nodes that had not yet halted.
    pub instructions: u64,
    pub all_halted: bool,
    pub converged: bool,
    pub winner: Option<ColorId>,
    pub final_configuration: Configuration,
}
