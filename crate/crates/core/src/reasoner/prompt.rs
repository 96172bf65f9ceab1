use std::collections::HashSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::narrator::InsightDescription;

pub const PREAMBLE: &str = "ROLE: You are a data analyst helping a user explore a table through scored data insights.\n\
TASK: Given the user's question, the insight they are focused on and a numbered list of candidate insights, \
reason step by step about which candidates answer the question or extend the focused insight, then choose one or more of them.";

pub const FEW_SHOT: &str = include_str!("../../resources/few_shot.txt");

const OUTPUT_FORMAT: &str = "Think step by step first. Then end with one line per chosen candidate, exactly in the form\n\
ANSWER: <candidate number> - <one sentence relating it to the focused insight>\n\
Only use candidate numbers from the list above.";

/// One earlier turn: the question and the descriptions it led to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryTurn {
    pub query: String,
    pub chosen: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub preamble: String,
    pub few_shot: String,
    /// The most recent turns, oldest first.
    pub history: Vec<HistoryTurn>,
    /// Turns dropped from the window.
    pub omitted_turns: usize,
    pub user_query: String,
    pub focused: InsightDescription,
    /// Numbered from 1 in this order.
    pub candidates: Vec<InsightDescription>,
}

pub fn compose_prompt(
    history: &[HistoryTurn],
    query: &str,
    focused: &InsightDescription,
    candidates: &[InsightDescription],
    window: usize,
) -> Result<PromptBundle> {
    if candidates.is_empty() {
        return Err(Error::Reasoning("no candidates to reason over".into()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = candidates.iter().find(|c| !seen.insert(c.insight_id.as_str())) {
        return Err(Error::Reasoning(format!("candidate {} listed twice", dup.insight_id)));
    }
    let keep = history.len().min(window);
    Ok(PromptBundle {
        preamble: PREAMBLE.to_owned(),
        few_shot: FEW_SHOT.trim_end().to_owned(),
        history: history[history.len() - keep..].to_vec(),
        omitted_turns: history.len() - keep,
        user_query: query.to_owned(),
        focused: focused.clone(),
        candidates: candidates.to_vec(),
    })
}

impl PromptBundle {
    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.preamble);
        out.push_str("\n\nEXAMPLES:\n");
        out.push_str(&self.few_shot);
        out.push_str("\n\nHISTORY:\n");
        if self.omitted_turns > 0 {
            let _ = writeln!(out, "({} earlier turns omitted)", self.omitted_turns);
        }
        for (i, turn) in self.history.iter().enumerate() {
            let _ = writeln!(out, "Turn {}: {}", i + 1, turn.query);
            for c in &turn.chosen {
                let _ = writeln!(out, "  chose: {c}");
            }
        }
        let _ = write!(out, "\nQUERY: {}\n", self.user_query);
        let _ = write!(out, "\nFOCUSED INSIGHT: {}\n", self.focused.render());
        out.push_str("\nCANDIDATES:\n");
        for (i, c) in self.candidates.iter().enumerate() {
            let _ = writeln!(out, "{}. {}", i + 1, c.render());
        }
        out.push_str("\nOUTPUT FORMAT:\n");
        out.push_str(OUTPUT_FORMAT);
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insight::InsightType;

    fn desc(id: &str) -> InsightDescription {
        InsightDescription {
            insight_id: id.into(),
            header: vec!["A".into()],
            itype: InsightType::Outlier,
            score: 0.5,
            text: format!("text {id}"),
        }
    }

    #[test]
    fn numbered_candidates_empty_history() {
        let b = compose_prompt(&[], "q", &desc("f"), &[desc("a"), desc("b"), desc("c")], 5).unwrap();
        let text = b.render();
        assert!(text.contains("HISTORY:\n\nQUERY: q"));
        assert!(text.contains("1. <Header=(A), Type=outlier"));
        assert!(text.contains("3. <Header"));
        assert!(!text.contains("4. <Header"));
        let order = ["ROLE:", "EXAMPLES:", "HISTORY:", "QUERY:", "FOCUSED INSIGHT:", "CANDIDATES:", "OUTPUT FORMAT:"];
        let pos: Vec<usize> = order.iter().map(|s| text.find(s).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn history_window() {
        let hist: Vec<HistoryTurn> = (0..5)
            .map(|i| HistoryTurn {
                query: format!("query {i}"),
                chosen: vec![],
            })
            .collect();
        let b = compose_prompt(&hist, "q", &desc("f"), &[desc("a")], 3).unwrap();
        assert_eq!(b.history.len(), 3);
        assert_eq!(b.history[0].query, "query 2");
        let text = b.render();
        assert!(text.contains("(2 earlier turns omitted)"));
        assert!(!text.contains("query 1"));
    }

    #[test]
    fn rejects_empty_and_duplicate() {
        assert!(compose_prompt(&[], "q", &desc("f"), &[], 5).is_err());
        assert!(compose_prompt(&[], "q", &desc("f"), &[desc("a"), desc("a")], 5).is_err());
    }
}
