//! Camouflage and state-perception attack planning for finite-horizon,
//! multi-agent tabular MDPs.
//!
//! A group of identical recipient agents follows a shared optimal policy on a
//! stage-indexed MDP. Attackers cannot touch the recipients' states or
//! actions; they can only change how objects they control *appear*. Every
//! recipient sees the same appearances, so the induced delusions are
//! correlated across agents. This crate computes:
//!
//! * the recipients' optimal policy family ([`mdp`]),
//! * the perception model that turns appearances into delusions ([`attack`]),
//! * attacker-optimal plans for unconstrained camouflage, free per-agent
//!   state perception, and per-step budget-constrained camouflage
//!   ([`planners`]),
//! * the one-step camouflage-vs-perception gap bounds ([`bounds`]),
//! * the ring and chessboard benchmark instances ([`env`]),
//! * brute-force certification oracles ([`oracle`]), and
//! * a config-driven experiment harness ([`harness`]).

pub mod attack;
pub mod bounds;
pub mod env;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod planners;

pub use attack::{Appearance, CamouflageScheme, Perception, PerceptionDomain, PerceptionKind};
pub use error::{CamoError, Result};
pub use mdp::{JointSpace, PolicyFamily, StageMdp, ValidationReport};
pub use planners::{AttackMode, AttackPlan, BudgetModel, Instance, ValueTable};
