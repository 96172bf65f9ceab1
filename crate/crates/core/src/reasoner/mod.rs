//! Prompt assembly, language-model providers and the self-consistency vote.

mod prompt;
mod provider;
mod vote;

pub use prompt::{compose_prompt, HistoryTurn, PromptBundle, FEW_SHOT, PREAMBLE};
pub use provider::{HttpLm, LmProvider, ScriptedLm, StubLm};
pub use vote::{parse_model_output, recommend, tally, Chosen, Recommendation, FALLBACK_RELATION};
