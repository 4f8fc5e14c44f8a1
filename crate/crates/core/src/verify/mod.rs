//! Instance families, the claim catalog and reproduction of the worked
//! examples.

pub mod claims;
pub mod fixtures;
pub mod generate;

use thiserror::Error;

use crate::fairness::FairnessError;
use crate::mechanisms::MechanismError;
use crate::strategy::StrategyError;

pub use claims::{check_claim, replay_counterexample, ClaimId, ClaimParams, ClaimReport, ClaimResult, WitnessCheck};
pub use fixtures::{fixture_instance, reproduce_paper_example, Completion, FieldCheck, FixtureId, Reproduction};
pub use generate::{
    enumerate_instances, random_instance, Enumeration, Family, FamilyConfig, FpfPolicy, PriorityMode, PrioritySet,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("unknown claim {0}")]
    UnknownClaim(String),
    #[error("family too large: {0}")]
    SizeGuard(String),
    #[error("invalid family: {0}")]
    InvalidConfig(String),
    #[error("invalid claim parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
}
