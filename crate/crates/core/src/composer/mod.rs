//! Parallel composition of perfect strategies: the tensor baseline on Σ nᵢ qubits and the
//! routed lift into a single max nᵢ-qubit space.

mod routed;
mod tensor;

use serde::{Deserialize, Serialize};

pub use routed::{
    route_strategies, routed_report, LiftMode, RoutedComposition, RoutedGameReport, RoutedPlan, RoutedReport, WorstCase,
};
pub use tensor::{tensor_report, tensor_strategies, TensorReport, TensorStrategy};

/// Composition mode selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComposeMode {
    Tensor,
    Route,
}

/// Summary emitted by the `compose` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComposeReport {
    pub mode: ComposeMode,
    pub games: Vec<String>,
    pub qubits_per_player: u32,
    pub per_question_min_acceptance: f64,
    pub residuals: serde_json::Map<String, serde_json::Value>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<RoutedReport>,
}

impl ComposeReport {
    pub fn from_tensor(games: Vec<String>, r: TensorReport, tol: f64) -> Self {
        let mut residuals = serde_json::Map::new();
        residuals.insert("factorization".into(), r.factorization_residual.into());
        residuals.insert("cross_commutation".into(), r.cross_commutation_max.into());
        let pass = r.perfect && r.factorization_residual <= tol && r.cross_commutation_max <= tol;
        ComposeReport {
            mode: ComposeMode::Tensor,
            games,
            qubits_per_player: r.qubits_per_player,
            per_question_min_acceptance: r.min_acceptance,
            residuals,
            pass,
            tensor: Some(r),
            route: None,
        }
    }

    pub fn from_route(games: Vec<String>, r: RoutedReport) -> Self {
        let mut residuals = serde_json::Map::new();
        residuals.insert("prob_match_unrescaled".into(), r.max_residual_unrescaled.into());
        residuals.insert("prob_match_rescaled".into(), r.max_residual_rescaled.into());
        ComposeReport {
            mode: ComposeMode::Route,
            games,
            qubits_per_player: r.qubits_per_player,
            per_question_min_acceptance: r.min_acceptance,
            residuals,
            pass: r.distributions_match,
            tensor: None,
            route: Some(r),
        }
    }
}
