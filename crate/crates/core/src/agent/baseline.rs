use serde::{Deserialize, Serialize};

/// How the reference value is updated.
///
/// `PaperLiteral` applies `ref' = λ·ref + (1−λ)·(observed − ref)`; for a
/// constant input `r` its fixed point is `r/2`, not `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    #[default]
    StandardEma,
    PaperLiteral,
}

/// Moving reference subtracted from rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineTracker {
    pub reference: f64,
    pub lambda: f64,
    pub mode: BaselineMode,
}

impl BaselineTracker {
    pub fn new(lambda: f64, mode: BaselineMode) -> Self {
        BaselineTracker {
            reference: 0.0,
            lambda: lambda.clamp(0.0, 1.0),
            mode,
        }
    }
}

pub fn update_baseline(tracker: BaselineTracker, observed: f64) -> BaselineTracker {
    let BaselineTracker {
        reference, lambda, ..
    } = tracker;
    let reference = match tracker.mode {
        BaselineMode::StandardEma => lambda * reference + (1.0 - lambda) * observed,
        BaselineMode::PaperLiteral => lambda * reference + (1.0 - lambda) * (observed - reference),
    };
    BaselineTracker { reference, ..tracker }
}
