//! Per-label n-gram TF-IDF over persona descriptions.
//!
//! Each label is one document (all its persona texts), terms are unigrams and
//! bigrams, tf is the raw count and idf = ln((1 + D) / (1 + df)) + 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::behavior::BehaviorLabel;

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub tf: usize,
    pub df: usize,
    pub score: f64,
}

/// Lower-cased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Unigrams and bigrams of one text; bigrams do not span texts.
pub fn ngrams(text: &str) -> Vec<String> {
    let toks = tokenize(text);
    let mut out = toks.clone();
    out.extend(toks.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

pub fn smooth_idf(documents: usize, df: usize) -> f64 {
    ((1.0 + documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Top `top_k` terms per label, highest score first, ties by term.
pub fn tfidf_analysis(pairs: &[(String, BehaviorLabel)], top_k: usize) -> BTreeMap<BehaviorLabel, Vec<TermScore>> {
    let mut docs: BTreeMap<BehaviorLabel, BTreeMap<String, usize>> = BTreeMap::new();
    for (text, label) in pairs {
        let counts = docs.entry(*label).or_default();
        for g in ngrams(text) {
            *counts.entry(g).or_default() += 1;
        }
    }
    for label in BehaviorLabel::ALL {
        if !docs.contains_key(&label) {
            log::warn!("no persona texts for {label}; omitted from the TF-IDF table");
        }
    }
    let d = docs.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in docs.values() {
        for term in counts.keys() {
            *df.entry(term.as_str()).or_default() += 1;
        }
    }
    let mut out = BTreeMap::new();
    for (label, counts) in &docs {
        let mut scores: Vec<TermScore> = counts
            .iter()
            .map(|(term, &tf)| {
                let n = df[term.as_str()];
                TermScore {
                    term: term.clone(),
                    tf,
                    df: n,
                    score: tf as f64 * smooth_idf(d, n),
                }
            })
            .collect();
        scores.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
        scores.truncate(top_k);
        out.insert(*label, scores);
    }
    out
}

/// Terms whose idf exceeds the floor, i.e. not present in every document.
pub fn distinctive_terms(table: &BTreeMap<BehaviorLabel, Vec<TermScore>>) -> BTreeSet<String> {
    let d = table.len();
    table
        .values()
        .flatten()
        .filter(|t| t.df < d)
        .map(|t| t.term.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use BehaviorLabel::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Calm, PROTECTIVE-leader's 2nd"), vec!["calm", "protective", "leader", "s", "2nd"]);
    }

    #[test]
    fn ngrams_include_bigrams() {
        assert_eq!(ngrams("a b c"), vec!["a", "b", "c", "a b", "b c"]);
    }

    #[test]
    fn hand_computed_toy_corpus() {
        // D = 3. "calm" appears in two documents, "brave" in one.
        let pairs = vec![
            ("calm brave".to_string(), Fight),
            ("calm".to_string(), HideInPlace),
            ("quiet".to_string(), Freeze),
        ];
        let t = tfidf_analysis(&pairs, 10);
        let fight = &t[&Fight];
        let get = |term: &str| fight.iter().find(|s| s.term == term).unwrap().score;
        let idf1 = (4.0f64 / 2.0).ln() + 1.0;
        let idf2 = (4.0f64 / 3.0).ln() + 1.0;
        assert!((get("brave") - idf1).abs() < 1e-12);
        assert!((get("calm brave") - idf1).abs() < 1e-12);
        assert!((get("calm") - idf2).abs() < 1e-12);
        assert_eq!(fight[0].term, "brave");
    }

    #[test]
    fn unique_word_ranks_in_its_label() {
        let mut pairs = Vec::new();
        for l in BehaviorLabel::ALL {
            pairs.push(("a calm person who likes school".to_string(), l));
        }
        pairs.push(("commanding and protective".to_string(), Fight));
        let t = tfidf_analysis(&pairs, 10);
        assert!(t[&Fight].iter().any(|s| s.term == "commanding"));
        assert!(!t[&Freeze].iter().any(|s| s.term == "commanding"));
    }

    #[test]
    fn shared_text_has_no_distinctive_terms() {
        let pairs: Vec<_> = BehaviorLabel::ALL.iter().map(|l| ("same words here".to_string(), *l)).collect();
        let t = tfidf_analysis(&pairs, 10);
        assert!(distinctive_terms(&t).is_empty());
        let first: Vec<f64> = t[&Fight].iter().map(|s| s.score).collect();
        for scores in t.values() {
            assert_eq!(scores.iter().map(|s| s.score).collect::<Vec<_>>(), first);
        }
    }

    #[test]
    fn missing_labels_are_omitted() {
        let t = tfidf_analysis(&[("x".to_string(), Fight)], 10);
        assert_eq!(t.len(), 1);
    }
}
