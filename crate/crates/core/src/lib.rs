//! Insight mining over tabular data.
//!
//! The crate covers the whole offline path of an interactive exploration
//! session:
//!
//! * [`table`] loads CSV data, defines locators and subspaces, and
//!   aggregates analysis entities into series.
//! * [`insight`] runs the registered insight detectors over every analysis
//!   entity and collects the results into an [`insight::InsightCatalog`].
//! * [`graph`] connects subspaces by sibling and parent-child relations and
//!   performs step-bounded structural filtering.
//! * [`narrator`] renders insights into textual descriptions.
//! * [`retrieval`] embeds descriptions, runs dual-path similarity search and
//!   applies metadata constraints.
//! * [`reasoner`] builds the chain-of-thought prompt and votes over sampled
//!   model answers.
//! * [`story`] maintains the tree of insights the user builds.
//! * [`engine`] wires all of the above into one query turn.

pub mod config;
pub mod engine;
pub mod error;
pub mod graph;
pub mod insight;
pub mod narrator;
pub mod reasoner;
pub mod registry;
pub mod retrieval;
pub mod story;
pub mod table;

pub use error::{Error, IngestError, Result, StoryError};
