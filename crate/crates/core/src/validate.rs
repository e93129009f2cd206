//! Consistency conditions on models.
//!
//! 1. condition species appear in the body;
//! 2. `pos` and `neg` are disjoint;
//! 3. condition sites of body species are sites of the model;
//! 4. association bodies are in `neg`;
//! 5. dissociation bodies are in `pos`;
//! 6. transformations have empty `pos` and `neg` = every site of the source;
//! 7. same-kind sentences with the same body do not overlap in states.
//!
//! Code 8 covers checks specific to this tool: bodies binding a species to
//! itself, and duplicated sentences.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{Body, Model, SiteRef, SourceSpan, SpeciesName, StateSet};

#[derive(Clone, PartialEq, Debug)]
pub struct Violation {
    /// 1..=7, or 8 for the additional checks.
    pub condition: u8,
    /// 1-based sentence numbers involved.
    pub sentences: Vec<usize>,
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {}: {}", self.condition, self.message)?;
        match self.span {
            Some(span) => write!(f, " at line {}", span.line),
            None => write!(f, " at sentence {}", self.sentences[0]),
        }
    }
}

fn refs(set: impl IntoIterator<Item = impl fmt::Display>) -> String {
    set.into_iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Checks every condition and returns all violations, ordered by sentence
/// then condition number. An empty result means the model is valid.
pub fn validate(model: &Model) -> Vec<Violation> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Violation>, condition: u8, sentences: Vec<usize>, message: String| {
        let span = model.span(sentences[0] - 1);
        out.push(Violation {
            condition,
            sentences,
            message,
            span,
        });
    };

    for (i, s) in model.sentences().iter().enumerate() {
        let n = i + 1;
        let body_species: BTreeSet<&SpeciesName> = s.body().species().collect();
        let conditions = || s.pos().iter().chain(s.neg());

        let foreign: BTreeSet<&SpeciesName> = conditions()
            .map(|r| &r.species)
            .filter(|sp| !body_species.contains(sp))
            .collect();
        if !foreign.is_empty() {
            push(
                &mut out,
                1,
                vec![n],
                format!("condition species {} not in the sentence body", refs(foreign)),
            );
        }

        let both: Vec<&SiteRef> = s.pos().intersection(s.neg()).collect();
        if !both.is_empty() {
            push(
                &mut out,
                2,
                vec![n],
                format!("{} required both bound and unbound", refs(both)),
            );
        }

        let undeclared: BTreeSet<&SiteRef> = conditions()
            .filter(|r| body_species.contains(&r.species))
            .filter(|r| !model.sites(&r.species).contains(&r.site))
            .collect();
        if !undeclared.is_empty() {
            push(
                &mut out,
                3,
                vec![n],
                format!("condition sites {} are not sites of the model", refs(undeclared)),
            );
        }

        match s.body() {
            Body::Association(l, r) => {
                let missing: Vec<_> = [l, r].into_iter().filter(|x| !s.neg().contains(x)).collect();
                if !missing.is_empty() {
                    push(
                        &mut out,
                        4,
                        vec![n],
                        format!("association body {} not required unbound", refs(missing)),
                    );
                }
            }
            Body::Dissociation(l, r) => {
                let missing: Vec<_> = [l, r].into_iter().filter(|x| !s.pos().contains(x)).collect();
                if !missing.is_empty() {
                    push(
                        &mut out,
                        5,
                        vec![n],
                        format!("dissociation body {} not required bound", refs(missing)),
                    );
                }
            }
            Body::Transformation { source, .. } => {
                let expected: BTreeSet<SiteRef> = model
                    .sites(source)
                    .into_iter()
                    .map(|x| SiteRef::new(source.clone(), x))
                    .collect();
                if !s.pos().is_empty() || s.neg() != &expected {
                    push(
                        &mut out,
                        6,
                        vec![n],
                        format!(
                            "transformation of {source} must require exactly {{{}}} unbound and nothing bound",
                            refs(&expected)
                        ),
                    );
                }
            }
        }

        if let Some((l, r)) = s.body().pair() {
            if l.species == r.species {
                push(
                    &mut out,
                    8,
                    vec![n],
                    format!("{} binds species {} to itself", s.kind(), l.species),
                );
            }
        }
    }

    overlap_checks(model, &mut out);

    out.sort_by_key(|v| (v.sentences[0], v.condition));
    out
}

/// Body with its two sides ordered, plus the matching state sets.
struct Canonical {
    key: (crate::model::SentenceKind, String, String),
    left: StateSet,
    right: Option<StateSet>,
}

fn canonical(model: &Model, index: usize) -> Canonical {
    let s = &model.sentences()[index];
    let (left, right) = model.sentence_states(index);
    match s.body() {
        Body::Association(a, b) | Body::Dissociation(a, b) => {
            let (a_key, b_key) = (a.to_string(), b.to_string());
            if b < a {
                Canonical {
                    key: (s.kind(), b_key, a_key),
                    left: right.expect("binding body has two sides"),
                    right: Some(left),
                }
            } else {
                Canonical {
                    key: (s.kind(), a_key, b_key),
                    left,
                    right,
                }
            }
        }
        Body::Transformation { source, target } => Canonical {
            key: (
                s.kind(),
                source.to_string(),
                target.as_ref().map_or(String::new(), |t| t.to_string()),
            ),
            left,
            right,
        },
    }
}

/// Condition 7 and duplicate detection.
fn overlap_checks(model: &Model, out: &mut Vec<Violation>) {
    let sentences = model.sentences();
    let canon: Vec<Canonical> = (0..sentences.len()).map(|i| canonical(model, i)).collect();
    for i in 0..sentences.len() {
        for j in i + 1..sentences.len() {
            if sentences[i] == sentences[j] {
                out.push(Violation {
                    condition: 8,
                    sentences: vec![i + 1, j + 1],
                    message: format!("sentences {} and {} are identical", i + 1, j + 1),
                    span: model.span(i),
                });
            }
            let (x, y) = (&canon[i], &canon[j]);
            if x.key != y.key {
                continue;
            }
            // A decay has no right side; treat it as the single empty state.
            let right_equal = x.right == y.right;
            let right_meet = match (&x.right, &y.right) {
                (Some(a), Some(b)) => a.intersects(b),
                _ => true,
            };
            let left_equal = x.left == y.left;
            let left_meet = x.left.intersects(&y.left);
            let ok = if left_equal {
                !right_meet
            } else if right_equal {
                !left_meet
            } else {
                !left_meet && !right_meet
            };
            if !ok {
                out.push(Violation {
                    condition: 7,
                    sentences: vec![i + 1, j + 1],
                    message: format!(
                        "sentences {} and {} overlap: states {} / {} and {} / {}",
                        i + 1,
                        j + 1,
                        x.left,
                        y.left,
                        x.right.as_ref().map_or("{{}}".to_string(), |s| s.to_string()),
                        y.right.as_ref().map_or("{{}}".to_string(), |s| s.to_string()),
                    ),
                    span: model.span(i),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sentence, SpeciesName};
    use crate::parser::parse;

    fn r(sp: &str, site: &str) -> SiteRef {
        SiteRef::parse(sp, site).unwrap()
    }

    fn codes(v: &[Violation]) -> Vec<(usize, u8)> {
        v.iter().map(|v| (v.sentences[0], v.condition)).collect()
    }

    #[test]
    fn plain_transformation_is_valid() {
        assert!(validate(&parse("A becomes B").unwrap()).is_empty());
    }

    #[test]
    fn self_association_is_rejected() {
        let v = validate(&parse("site a on A associates site b on A").unwrap());
        assert_eq!(codes(&v), vec![(1, 8)]);
    }

    #[test]
    fn duplicates_are_reported() {
        let v = validate(&parse("site a on A associates site b on B\nsite a on A associates site b on B").unwrap());
        assert_eq!(codes(&v), vec![(1, 7), (1, 8)]);
        assert_eq!(v[0].sentences, vec![1, 2]);
    }

    #[test]
    fn swapped_bodies_are_compared() {
        let v = validate(
            &parse("site a on A associates site b on B with rate 2.0\nsite b on B associates site a on A").unwrap(),
        );
        assert_eq!(codes(&v), vec![(1, 7)]);
    }

    #[test]
    fn disjoint_conditions_do_not_overlap() {
        let m = parse(
            "site a on A associates site b on B if site c on A is bound\n\
             site a on A associates site b on B with rate 3.0 if site c on A is unbound\n\
             site c on A associates site d on D",
        )
        .unwrap();
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn two_decays_of_one_species_overlap() {
        let v = validate(&parse("A decays\nA decays with rate 2.0").unwrap());
        assert_eq!(codes(&v), vec![(1, 7)]);
    }

    #[test]
    fn transformation_with_wrong_neg() {
        let m = Model::new(vec![
            Sentence::association(r("A", "a"), r("B", "b"), [], [r("A", "a"), r("B", "b")], 1.0).unwrap(),
            Sentence::transformation(SpeciesName::new("A").unwrap(), None, [], [], 1.0).unwrap(),
        ]);
        let v = validate(&m);
        assert_eq!(codes(&v), vec![(2, 6)]);
        assert_eq!(v[0].to_string(), "condition 6: transformation of A must require exactly {(A,a)} unbound and nothing bound at sentence 2");
    }

    #[test]
    fn rendering_uses_line_numbers() {
        let v = validate(&parse("A decays\n\nsite a on A associates site b on A").unwrap());
        assert!(v[0].to_string().ends_with("at line 3"), "{}", v[0]);
    }
}
