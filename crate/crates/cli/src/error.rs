use volflow::coop::CoopError;
use volflow::detector::DetectorError;
use volflow::eval::EvalError;
use volflow::flow_model::FlowModelError;
use volflow::simulator::SimError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data contract violation: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Config(e.to_string()),
            SimError::Windowing(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<FlowModelError> for CliError {
    fn from(e: FlowModelError) -> Self {
        match e {
            FlowModelError::InvalidConfig(_) | FlowModelError::UnknownMeasure(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DetectorError> for CliError {
    fn from(e: DetectorError) -> Self {
        match e {
            DetectorError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CoopError> for CliError {
    fn from(e: CoopError) -> Self {
        match e {
            CoopError::Config(_) => CliError::Config(e.to_string()),
            CoopError::Detector(d) => d.into(),
            CoopError::MissingFlows(_) => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Sweep(_) => CliError::Config(e.to_string()),
            EvalError::Detector(d) => d.into(),
            EvalError::Sim(s) => s.into(),
            EvalError::Misaligned(_) => CliError::Data(e.to_string()),
        }
    }
}
