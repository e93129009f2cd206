//! Surface sentences and their mapping onto the three core primitives.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::ModelError;
use crate::model::{
    Body, Model, Sentence, SiteRef, SourceSpan, SpeciesName, DEFAULT_RATE,
    PHOSPH_SITE, PHOSPH_SPECIES,
};

/// `site X on S is bound` / `... is unbound`.
#[derive(Clone, PartialEq, Debug)]
pub struct Condition {
    pub target: SiteRef,
    pub bound: bool,
}

/// The six grammar productions.
#[derive(Clone, PartialEq, Debug)]
pub enum SurfaceForm {
    Association { left: SiteRef, right: SiteRef },
    Dissociation { left: SiteRef, right: SiteRef },
    Phosphorylation { target: SiteRef },
    Dephosphorylation { target: SiteRef },
    Transformation { source: SpeciesName, target: SpeciesName },
    Decay { source: SpeciesName },
}

#[derive(Clone, PartialEq, Debug)]
pub struct SurfaceSentence {
    pub form: SurfaceForm,
    pub rate: Option<f64>,
    pub conditions: Vec<Condition>,
    pub span: SourceSpan,
}

impl SurfaceSentence {
    fn user_species(&self) -> impl Iterator<Item = &SpeciesName> {
        let body: Vec<&SpeciesName> = match &self.form {
            SurfaceForm::Association { left, right } | SurfaceForm::Dissociation { left, right } => {
                vec![&left.species, &right.species]
            }
            SurfaceForm::Phosphorylation { target } | SurfaceForm::Dephosphorylation { target } => {
                vec![&target.species]
            }
            SurfaceForm::Transformation { source, target } => vec![source, target],
            SurfaceForm::Decay { source } => vec![source],
        };
        body.into_iter()
            .chain(self.conditions.iter().map(|c| &c.target.species))
    }
}

pub fn phosph_ref() -> SiteRef {
    SiteRef::parse(PHOSPH_SPECIES, PHOSPH_SITE).expect("static names are valid")
}

/// Maps one surface sentence to a core sentence.
///
/// Transformations come out with empty conditions; [`desugar_all`] fills in
/// their `neg` set once the sites of the whole model are known.
pub fn desugar(s: &SurfaceSentence) -> Result<Sentence, ModelError> {
    if s.user_species().any(|sp| sp.as_str() == PHOSPH_SPECIES) {
        return Err(ModelError::ReservedSpecies);
    }
    let rate = s.rate.unwrap_or(DEFAULT_RATE);
    let (pos, neg): (Vec<_>, Vec<_>) = s.conditions.iter().partition(|c| c.bound);
    let pos = pos.into_iter().map(|c| c.target.clone());
    let neg = neg.into_iter().map(|c| c.target.clone());
    let sentence = match &s.form {
        SurfaceForm::Association { left, right } => {
            Sentence::association(left.clone(), right.clone(), pos, neg, rate)?
        }
        SurfaceForm::Dissociation { left, right } => {
            Sentence::dissociation(left.clone(), right.clone(), pos, neg, rate)?
        }
        SurfaceForm::Phosphorylation { target } => {
            Sentence::association(target.clone(), phosph_ref(), pos, neg, rate)?
        }
        SurfaceForm::Dephosphorylation { target } => {
            Sentence::dissociation(target.clone(), phosph_ref(), pos, neg, rate)?
        }
        SurfaceForm::Transformation { source, target } => {
            Sentence::transformation(source.clone(), Some(target.clone()), pos, neg, rate)?
        }
        SurfaceForm::Decay { source } => {
            Sentence::transformation(source.clone(), None, pos, neg, rate)?
        }
    };
    Ok(sentence.with_implicit_conditions())
}

/// Desugars a whole model and closes every transformation's `neg` set over
/// all sites of its source species. Errors carry the offending sentence
/// index.
pub fn desugar_all(surface: &[SurfaceSentence]) -> Result<Model, (usize, ModelError)> {
    let sentences = surface
        .iter()
        .enumerate()
        .map(|(i, s)| desugar(s).map_err(|e| (i, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let spans = surface.iter().map(|s| s.span).collect();
    let mut model = Model::with_spans(sentences, spans);
    close_transformations(&mut model);
    Ok(model)
}

fn close_transformations(model: &mut Model) {
    let closed: Vec<Option<BTreeSet<SiteRef>>> = model
        .sentences()
        .iter()
        .map(|s| match s.body() {
            Body::Transformation { source, .. } => Some(
                model
                    .sites(source)
                    .into_iter()
                    .map(|site| SiteRef::new(source.clone(), site))
                    .collect(),
            ),
            _ => None,
        })
        .collect();
    for (s, neg) in model.sentences_mut().iter_mut().zip(closed) {
        if let Some(neg) = neg {
            s.set_neg(neg);
        }
    }
}

/// Inverse of [`desugar`] for printing: restores the phosphorylation sugar
/// and drops the conditions the parser adds implicitly.
pub fn resugar(s: &Sentence) -> SurfaceSentence {
    let implicit: BTreeSet<&SiteRef> = match s.body() {
        Body::Association(l, r) | Body::Dissociation(l, r) => [l, r].into(),
        Body::Transformation { .. } => BTreeSet::new(),
    };
    let is_phosph = |r: &SiteRef| r == &phosph_ref();
    let form = match s.body() {
        Body::Association(l, r) if is_phosph(r) => SurfaceForm::Phosphorylation { target: l.clone() },
        Body::Dissociation(l, r) if is_phosph(r) => {
            SurfaceForm::Dephosphorylation { target: l.clone() }
        }
        Body::Association(l, r) => SurfaceForm::Association {
            left: l.clone(),
            right: r.clone(),
        },
        Body::Dissociation(l, r) => SurfaceForm::Dissociation {
            left: l.clone(),
            right: r.clone(),
        },
        Body::Transformation {
            source,
            target: Some(t),
        } => SurfaceForm::Transformation {
            source: source.clone(),
            target: t.clone(),
        },
        Body::Transformation { source, target: None } => SurfaceForm::Decay {
            source: source.clone(),
        },
    };
    let conditions = match s.body() {
        Body::Transformation { .. } => Vec::new(),
        _ => s
            .pos()
            .iter()
            .filter(|r| !implicit.contains(r))
            .map(|r| Condition {
                target: r.clone(),
                bound: true,
            })
            .chain(s.neg().iter().filter(|r| !implicit.contains(r)).map(|r| Condition {
                target: r.clone(),
                bound: false,
            }))
            .collect(),
    };
    SurfaceSentence {
        form,
        rate: Some(s.rate()),
        conditions,
        span: SourceSpan::default(),
    }
}

fn site_on(r: &SiteRef) -> String {
    format!("site {} on {}", r.site, r.species)
}

/// Formats a rate so that it parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Canonical surface text of one sentence.
pub fn render_surface(s: &SurfaceSentence) -> String {
    let mut out = match &s.form {
        SurfaceForm::Association { left, right } => {
            format!("{} associates {}", site_on(left), site_on(right))
        }
        SurfaceForm::Dissociation { left, right } => {
            format!("{} dissociates {}", site_on(left), site_on(right))
        }
        SurfaceForm::Phosphorylation { target } => format!("{} gets phosphorylated", site_on(target)),
        SurfaceForm::Dephosphorylation { target } => {
            format!("{} gets dephosphorylated", site_on(target))
        }
        SurfaceForm::Transformation { source, target } => format!("{source} becomes {target}"),
        SurfaceForm::Decay { source } => format!("{source} decays"),
    };
    if let Some(rate) = s.rate {
        let _ = write!(out, " with rate {}", format_float(rate));
    }
    for (i, c) in s.conditions.iter().enumerate() {
        out.push_str(if i == 0 { " if " } else { " and " });
        let _ = write!(
            out,
            "{} is {}",
            site_on(&c.target),
            if c.bound { "bound" } else { "unbound" }
        );
    }
    out
}

/// Prints a model in surface syntax, one sentence per line.
pub fn pretty_print(model: &Model) -> String {
    model
        .sentences()
        .iter()
        .map(|s| render_surface(&resugar(s)) + "\n")
        .collect()
}
