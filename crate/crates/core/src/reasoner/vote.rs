use std::collections::BTreeSet;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::prompt::PromptBundle;
use super::provider::LmProvider;
use crate::error::{Error, Result};

/// Relation text used when the model could not be consulted.
pub const FALLBACK_RELATION: &str = "structurally related";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub insight_id: String,
    pub relation_text: String,
    pub vote_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Vote count descending, then candidate order.
    pub chosen: Vec<Chosen>,
    pub samples_used: usize,
    pub fallback: bool,
}

impl Recommendation {
    /// Top `n` ids taken as-is, used when reasoning is unavailable.
    pub fn structural<'a>(ids: impl IntoIterator<Item = &'a str>, n: usize) -> Self {
        Recommendation {
            chosen: ids
                .into_iter()
                .take(n)
                .map(|id| Chosen {
                    insight_id: id.to_owned(),
                    relation_text: FALLBACK_RELATION.to_owned(),
                    vote_count: 0,
                })
                .collect(),
            samples_used: 0,
            fallback: true,
        }
    }
}

fn answer_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*ANSWER:\s*(\d+)\s*(?:—|–|-|:)\s*(.+?)\s*$").expect("valid regex"))
}

/// Extracts `ANSWER: n - relation` lines. Prose without such lines is a
/// parse error, as is any number outside `1..=candidates`. Repeated numbers
/// keep their first relation.
pub fn parse_model_output(text: &str, candidates: usize) -> Result<Vec<(usize, String)>> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for line in text.lines() {
        let Some(caps) = answer_line().captures(line) else {
            continue;
        };
        let n: usize = caps[1]
            .parse()
            .map_err(|_| Error::Parse(format!("candidate number {:?} is not an integer", &caps[1])))?;
        if n == 0 || n > candidates {
            return Err(Error::Parse(format!("candidate {n} is outside 1..={candidates}")));
        }
        if !out.iter().any(|(m, _)| *m == n) {
            out.push((n, caps[2].to_owned()));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no ANSWER lines".into()));
    }
    Ok(out)
}

/// Majority vote over parsed samples. `m` is the number of samples drawn,
/// which sets the threshold ⌈m/2⌉ even when some samples failed to parse.
pub fn tally(samples: &[Vec<(usize, String)>], m: usize, candidate_ids: &[String]) -> Recommendation {
    let k = candidate_ids.len();
    let mut votes = vec![0usize; k + 1];
    for s in samples {
        let distinct: BTreeSet<usize> = s.iter().map(|(n, _)| *n).filter(|n| (1..=k).contains(n)).collect();
        for n in distinct {
            votes[n] += 1;
        }
    }
    let weight: Vec<usize> = samples
        .iter()
        .map(|s| {
            let distinct: BTreeSet<usize> = s.iter().map(|(n, _)| *n).collect();
            distinct.iter().filter(|n| **n <= k).map(|n| votes[*n]).sum()
        })
        .collect();

    let threshold = m.div_ceil(2);
    let mut ranked: Vec<usize> = (1..=k).filter(|n| votes[*n] > 0).collect();
    ranked.sort_by(|a, b| votes[*b].cmp(&votes[*a]).then(a.cmp(b)));
    let mut picked: Vec<usize> = ranked.iter().copied().filter(|n| votes[*n] >= threshold).collect();
    let fallback = picked.is_empty();
    if fallback {
        picked.extend(ranked.first().copied());
    }

    let chosen = picked
        .into_iter()
        .map(|n| {
            let mut best: Option<(usize, &str)> = None;
            for (s, w) in samples.iter().zip(&weight) {
                if let Some((_, rel)) = s.iter().find(|(c, _)| *c == n) {
                    if best.is_none_or(|(bw, _)| *w > bw) {
                        best = Some((*w, rel));
                    }
                }
            }
            Chosen {
                insight_id: candidate_ids[n - 1].clone(),
                relation_text: best.map(|b| b.1.to_owned()).unwrap_or_default(),
                vote_count: votes[n],
            }
        })
        .collect();
    Recommendation {
        chosen,
        samples_used: samples.len(),
        fallback,
    }
}

/// Draws `m` samples, parses each and votes.
pub fn recommend(provider: &dyn LmProvider, bundle: &PromptBundle, m: usize) -> Result<Recommendation> {
    if m == 0 {
        return Err(Error::Reasoning("sample count must be at least 1".into()));
    }
    let prompt = bundle.render();
    let k = bundle.candidate_count();
    let outputs: Vec<Result<String>> = (0..m).into_par_iter().map(|i| provider.complete(&prompt, i)).collect();

    let mut parsed = Vec::new();
    let mut provider_error = None;
    for out in outputs {
        match out {
            Ok(text) => match parse_model_output(&text, k) {
                Ok(p) => parsed.push(p),
                Err(e) => tracing::debug!("discarding sample: {e}"),
            },
            Err(e) => {
                tracing::warn!("sample failed: {e}");
                provider_error.get_or_insert(e);
            }
        }
    }
    if parsed.is_empty() {
        return Err(provider_error.unwrap_or_else(|| Error::Reasoning(format!("none of the {m} samples could be parsed"))));
    }
    let ids: Vec<String> = bundle.candidates.iter().map(|c| c.insight_id.clone()).collect();
    Ok(tally(&parsed, m, &ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_answer_lines() {
        let p = parse_model_output("ANSWER: 2 — both describe seasonal surges", 10).unwrap();
        assert_eq!(p, [(2, "both describe seasonal surges".to_owned())]);
        let p = parse_model_output("thinking...\nANSWER: 1 - a\n  ANSWER: 3: b \n", 3).unwrap();
        assert_eq!(p, [(1, "a".to_owned()), (3, "b".to_owned())]);
    }

    #[test]
    fn rejects_out_of_range_and_missing() {
        assert!(matches!(parse_model_output("ANSWER: 99 - x", 10), Err(Error::Parse(_))));
        assert!(matches!(parse_model_output("ANSWER: 0 - x", 10), Err(Error::Parse(_))));
        assert!(matches!(parse_model_output("I pick two.", 10), Err(Error::Parse(_))));
    }

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("id{i}")).collect()
    }

    fn s(ns: &[usize]) -> Vec<(usize, String)> {
        ns.iter().map(|n| (*n, format!("rel {n}"))).collect()
    }

    #[test]
    fn majority_of_three() {
        let r = tally(&[s(&[1, 2]), s(&[1]), s(&[1, 3])], 3, &ids(3));
        assert_eq!(r.chosen.len(), 1);
        assert_eq!(r.chosen[0].insight_id, "id1");
        assert_eq!(r.chosen[0].vote_count, 3);
        assert!(!r.fallback);
    }

    #[test]
    fn no_majority_falls_back_to_top() {
        let r = tally(&[s(&[2]), s(&[3]), s(&[1])], 3, &ids(3));
        assert!(r.fallback);
        assert_eq!(r.chosen.len(), 1);
        assert_eq!(r.chosen[0].insight_id, "id1");
    }

    #[test]
    fn relation_from_heaviest_sample() {
        let samples = vec![
            vec![(2, "weak".to_owned())],
            vec![(1, "x".to_owned()), (2, "strong".to_owned())],
            vec![(1, "y".to_owned())],
        ];
        let r = tally(&samples, 3, &ids(2));
        let two = r.chosen.iter().find(|c| c.insight_id == "id2").unwrap();
        assert_eq!(two.relation_text, "strong");
    }
}
