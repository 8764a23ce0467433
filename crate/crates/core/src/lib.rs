//! N-player cooperative cooking engine and the N-XPlay training pipeline.
//!
//! - [`layout`]: kitchen maps for any number of seats
//! - [`engine`]: deterministic game dynamics
//! - [`features`]: egocentric observation vectors
//! - [`policy`]: scripted collaborators and the linear REINFORCE learner
//! - [`population`]: checkpoint populations with performance tiers
//! - [`nxplay`]: ego-team episode composition and training
//! - [`eval`]: cross-play evaluation and unseen-ratio sweeps
//! - [`replay`], [`render`]: replay files and ASCII frames

pub mod digest;
pub mod engine;
pub mod eval;
pub mod features;
pub mod layout;
pub mod layouts;
pub mod nxplay;
pub mod policy;
pub mod population;
pub mod render;
pub mod replay;
pub mod seeding;

pub use engine::{reset, step, Action, EngineConfig, GameState};
pub use layout::{check_reachability, Layout, Pos, Tile};
