//! Linear Threshold Ranking (LTR) diffusion and election control.
//!
//! An attacker seeds a budget-limited set of voters in an influence graph.
//! Influence spreads under the linear threshold model and, once the process
//! quiesces, every voter reached by active in-neighbours moves a target
//! candidate up (constructive control) or down (destructive control) in
//! their ranking. The crate provides:
//!
//! * [`graph`]: influence graphs, edge-list loading and validation;
//! * [`election`]: preference profiles, scoring rules and static tallies;
//! * [`diffusion`]: forward LTM/LTR simulation;
//! * [`live_edge`]: live-edge sampling, the dice-roll shift distribution and
//!   an exact enumeration oracle for tiny graphs;
//! * [`optimizer`]: Monte-Carlo score estimation, lazy greedy seed
//!   selection and the destructive-to-constructive reduction;
//! * [`evaluation`]: margin of victory and probability of victory;
//! * [`harness`]: batch experiments with CSV/SVG output.

pub mod diffusion;
pub mod election;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod harness;
pub mod live_edge;
pub mod optimizer;
pub mod parallel;
pub mod seeding;

pub use diffusion::{AlphaTable, ControlInstance, DiffusionOutcome, Mode};
pub use election::{Candidate, PreferenceProfile, ScoringRule};
pub use error::{Error, Result};
pub use graph::{InfluenceGraph, NodeId, WeightMode};
pub use live_edge::{LiveEdgeGraph, ShiftDistribution};
pub use optimizer::{Estimator, SeedSet};
