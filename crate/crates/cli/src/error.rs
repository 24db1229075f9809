use std::fmt;

use spinglass::bench::BenchError;
use spinglass::fcl::FclError;
use spinglass::ground_state::GroundStateError;
use spinglass::heuristics::HeuristicError;
use spinglass::ising::IsingError;
use spinglass::matching::MatchingError;
use spinglass::topology::TopologyError;
use spinglass::tts::TtsError;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Precondition(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    pub fn input(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition violated: {m}"),
            CliError::Budget(m) => write!(f, "budget exhausted: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<IsingError> for CliError {
    fn from(e: IsingError) -> Self {
        match e {
            IsingError::TooLarge { .. } | IsingError::NonzeroBias | IsingError::MissingPlanted => {
                CliError::Precondition(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GroundStateError> for CliError {
    fn from(e: GroundStateError) -> Self {
        match e {
            GroundStateError::NonPlanar { witness: Some(ref w) } => {
                let edges: Vec<String> = w.iter().map(|(u, v)| format!("{u}-{v}")).collect();
                CliError::Precondition(format!("{e}; Kuratowski witness edges: {}", edges.join(" ")))
            }
            GroundStateError::Ising(inner) => inner.into(),
            GroundStateError::NoRepetitions => CliError::Usage(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<FclError> for CliError {
    fn from(e: FclError) -> Self {
        match e {
            FclError::LoopBudgetExhausted(_) | FclError::InstanceBudgetExhausted(_) => {
                CliError::Budget(e.to_string())
            }
            FclError::InvalidParams(_) => CliError::Usage(e.to_string()),
            FclError::EmptyGraph => CliError::Input(e.to_string()),
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<HeuristicError> for CliError {
    fn from(e: HeuristicError) -> Self {
        match e {
            HeuristicError::Ising(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MatchingError> for CliError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::NoPerfectMatching | MatchingError::OddNodeCount(_) => {
                CliError::Precondition(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<TtsError> for CliError {
    fn from(e: TtsError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidPlan(m) => CliError::Input(format!("plan: {m}")),
            BenchError::Topology(e) => e.into(),
            BenchError::Generation { source, size, index } => match CliError::from(source) {
                CliError::Budget(m) => CliError::Budget(format!("size {size}, instance {index}: {m}")),
                other => other,
            },
            BenchError::Exact(e) => e.into(),
            BenchError::Heuristic(e) => e.into(),
            BenchError::Tts(e) => e.into(),
            e @ BenchError::PlantedMismatch { .. } => CliError::Precondition(e.to_string()),
        }
    }
}
