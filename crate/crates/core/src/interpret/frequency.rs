use serde::Serialize;

use super::literal_name;
use crate::booleanize::Preprocessing;
use crate::tm::{BooleanSample, EvalMode, InputShape, MulticlassModel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiteralCount {
    pub literal: usize,
    pub name: String,
    pub negated: bool,
    /// Triggered clauses that include this literal.
    pub count: usize,
}

/// Literal inclusion counts over the clauses a sample triggers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeatureFrequency {
    /// Predicted class; its machine supplies the clauses.
    pub class: usize,
    pub triggered: Vec<usize>,
    /// Ranked by count (descending), ties by literal index, at most `top_m`.
    pub ranked: Vec<LiteralCount>,
}

impl FeatureFrequency {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn ranked_list(&self) -> String {
        self.ranked
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:>4}  {:>6}  {}\n", i + 1, c.count, c.name))
            .collect()
    }

    /// The sentence with each ranked present token marked as `[token:count]`,
    /// followed by the ranked negated features, which by construction are
    /// absent from the sentence.
    pub fn annotate<S: AsRef<str>>(&self, tokens: &[S], stem: bool) -> String {
        let out: Vec<String> = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                let key = if stem {
                    crate::booleanize::stem(&t.to_lowercase())
                } else {
                    t.to_lowercase()
                };
                match self.ranked.iter().find(|c| !c.negated && c.name == key) {
                    Some(c) => format!("[{t}:{}]", c.count),
                    None => t.to_string(),
                }
            })
            .collect();
        let absent: Vec<String> = self
            .ranked
            .iter()
            .filter(|c| c.negated)
            .map(|c| format!("{}:{}", c.name, c.count))
            .collect();
        let mut text = out.join(" ");
        if !absent.is_empty() {
            text.push_str("\n  absent: ");
            text.push_str(&absent.join(" "));
        }
        text
    }
}

/// Counts literal inclusions over the clauses of the predicted class that
/// fire on `sample`.
pub fn word_frequency_map(
    model: &MulticlassModel,
    sample: &BooleanSample,
    top_m: usize,
) -> Result<FeatureFrequency> {
    let InputShape::Flat { features } = *model.shape() else {
        return Err(Error::param("word-frequency maps need a flat model"));
    };
    if let Preprocessing::BagOfWords { vocabulary, .. } = model.preprocessing() {
        if vocabulary.len() != sample.features() {
            return Err(Error::format(
                "vocabulary",
                format!(
                    "sample has {} features, model vocabulary has {}",
                    sample.features(),
                    vocabulary.len()
                ),
            ));
        }
    }
    if sample.features() != features {
        return Err(Error::Dimension {
            expected: features,
            found: sample.features(),
        });
    }

    let input = model.encode(sample)?;
    let class = model.predict(&input);
    let machine = &model.machines()[model.machine_index(class)?];
    let triggered: Vec<usize> = (0..machine.clauses())
        .filter(|&j| machine.clause_output(j, &input, EvalMode::Infer))
        .collect();

    let mut counts = vec![0usize; machine.layout().literals()];
    for &j in &triggered {
        for lit in machine.bank().included_literals(j, machine.layout()) {
            counts[lit] += 1;
        }
    }
    let mut ranked: Vec<LiteralCount> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(lit, &count)| LiteralCount {
            literal: lit,
            name: literal_name(model, lit),
            negated: lit >= features,
            count,
        })
        .collect();
    ranked.sort_by_key(|c| (std::cmp::Reverse(c.count), c.literal));
    ranked.truncate(top_m);
    Ok(FeatureFrequency {
        class,
        triggered,
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booleanize::{build_vocab, text_to_bow};
    use crate::tm::{Dataset, Hyperparams};

    fn text_model() -> (MulticlassModel, crate::booleanize::Vocabulary) {
        let words = ["witty", "graceful", "dull", "plot"];
        let corpus = vec![words.iter().map(|w| w.to_string()).collect()];
        let vocab = build_vocab(&corpus, 10, 1).unwrap();
        let mut model = MulticlassModel::new(
            Hyperparams {
                clauses: 4,
                ..Hyperparams::default()
            },
            InputShape::Flat {
                features: vocab.len(),
            },
            Dataset::numeric_classes(2),
            false,
        )
        .unwrap();
        model.set_preprocessing(Preprocessing::BagOfWords {
            vocabulary: vocab.clone(),
            stem: false,
        });
        (model, vocab)
    }

    #[test]
    fn single_triggered_clause() {
        let (mut model, vocab) = text_model();
        let o = vocab.len();
        let witty = vocab.get("witty").unwrap();
        let graceful = vocab.get("graceful").unwrap();
        let m = &mut model.machines_mut()[0];
        // every clause but 1 blocked by an unsatisfiable pair
        for j in [0, 2, 3] {
            m.set_state(j, 0, 256).unwrap();
            m.set_state(j, o, 256).unwrap();
        }
        m.set_state(1, o + witty, 256).unwrap();
        m.set_state(1, o + graceful, 256).unwrap();

        let sample = text_to_bow(&["dull", "plot"], &vocab);
        let f = word_frequency_map(&model, &sample, 100).unwrap();
        assert_eq!(f.class, 0);
        assert_eq!(f.triggered, vec![1]);
        assert_eq!(f.ranked.len(), 2);
        assert!(f.ranked.iter().all(|c| c.count == 1 && c.negated));
        let names: Vec<&str> = f.ranked.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"¬witty") && names.contains(&"¬graceful"));
        assert!(f.annotate(&["dull", "plot"], false).contains("absent"));
    }

    #[test]
    fn nothing_triggers() {
        let (mut model, vocab) = text_model();
        let o = vocab.len();
        let m = &mut model.machines_mut()[0];
        for j in 0..4 {
            m.set_state(j, 0, 256).unwrap();
            m.set_state(j, o, 256).unwrap();
        }
        let f = word_frequency_map(&model, &text_to_bow(&["plot"], &vocab), 10).unwrap();
        assert!(f.triggered.is_empty() && f.ranked.is_empty());
    }

    #[test]
    fn vocabulary_mismatch() {
        let (model, _) = text_model();
        assert!(word_frequency_map(&model, &BooleanSample::zeros(3), 5).is_err());
    }
}
