//! Species, sites, sentences and models.
//!
//! A sentence is the tuple `(kind, body, pos, neg, rate)`. Bodies name either
//! two `(species, site)` pairs (association, dissociation) or a source and an
//! optional target species (transformation; no target means decay). The
//! condition sets `pos` / `neg` list sites that must be bound / unbound for
//! the sentence to apply.
//!
//! States of a species are subsets of its sites (the bound ones). Internally a
//! state is a bitmask over the species' [`SiteTable`], whose site order is the
//! byte-wise lexicographic order on site names.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;

/// Species introduced by the phosphorylation sugar.
pub const PHOSPH_SPECIES: &str = "Phosph";
/// Binding site of [`PHOSPH_SPECIES`].
pub const PHOSPH_SITE: &str = "phosph";
pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_POPULATION: u64 = 1000;
pub const DEFAULT_SAMPLE_TIME: f64 = 10.0;

/// Words the lexer reserves; they can never be species or site names.
pub const KEYWORDS: &[&str] = &[
    "site",
    "on",
    "associates",
    "dissociates",
    "gets",
    "phosphorylated",
    "dephosphorylated",
    "becomes",
    "decays",
    "with",
    "rate",
    "if",
    "and",
    "is",
    "bound",
    "unbound",
];

/// True when `s` is a letter followed by letters, digits or underscores and
/// is not a keyword.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
                let name = name.into();
                if is_identifier(&name) {
                    Ok(Self(name))
                } else {
                    Err(ModelError::InvalidName { kind: $what, name })
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = ModelError;
            fn try_from(s: &str) -> Result<Self, ModelError> {
                Self::new(s)
            }
        }
    };
}

name_type!(
    /// Name of a species. Case-sensitive.
    SpeciesName,
    "species"
);
name_type!(
    /// Name of a site on a species.
    SiteName,
    "site"
);

/// A `(species, site)` pair.
///
/// Ordered by site name first, then species name: this is the total order
/// used to decide which partner of an association sends and which receives.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SiteRef {
    pub species: SpeciesName,
    pub site: SiteName,
}

impl SiteRef {
    pub fn new(species: SpeciesName, site: SiteName) -> Self {
        Self { species, site }
    }

    pub fn parse(species: &str, site: &str) -> Result<Self, ModelError> {
        Ok(Self::new(SpeciesName::new(species)?, SiteName::new(site)?))
    }
}

impl Ord for SiteRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.site
            .cmp(&other.site)
            .then_with(|| self.species.cmp(&other.species))
    }
}

impl PartialOrd for SiteRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SiteRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.species, self.site)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SentenceKind {
    Association,
    Dissociation,
    Transformation,
}

impl fmt::Display for SentenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentenceKind::Association => "association",
            SentenceKind::Dissociation => "dissociation",
            SentenceKind::Transformation => "transformation",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Body {
    Association(SiteRef, SiteRef),
    Dissociation(SiteRef, SiteRef),
    Transformation {
        source: SpeciesName,
        target: Option<SpeciesName>,
    },
}

impl Body {
    pub fn kind(&self) -> SentenceKind {
        match self {
            Body::Association(..) => SentenceKind::Association,
            Body::Dissociation(..) => SentenceKind::Dissociation,
            Body::Transformation { .. } => SentenceKind::Transformation,
        }
    }

    /// The two site references of a binding body.
    pub fn pair(&self) -> Option<(&SiteRef, &SiteRef)> {
        match self {
            Body::Association(l, r) | Body::Dissociation(l, r) => Some((l, r)),
            Body::Transformation { .. } => None,
        }
    }

    pub fn left_species(&self) -> &SpeciesName {
        match self {
            Body::Association(l, _) | Body::Dissociation(l, _) => &l.species,
            Body::Transformation { source, .. } => source,
        }
    }

    pub fn right_species(&self) -> Option<&SpeciesName> {
        match self {
            Body::Association(_, r) | Body::Dissociation(_, r) => Some(&r.species),
            Body::Transformation { target, .. } => target.as_ref(),
        }
    }

    /// Species appearing in the body, left first.
    pub fn species(&self) -> impl Iterator<Item = &SpeciesName> {
        std::iter::once(self.left_species()).chain(self.right_species())
    }
}

/// One core sentence.
#[derive(Clone, PartialEq, Debug)]
pub struct Sentence {
    body: Body,
    pos: BTreeSet<SiteRef>,
    neg: BTreeSet<SiteRef>,
    rate: f64,
}

impl Sentence {
    pub fn new(
        body: Body,
        pos: impl IntoIterator<Item = SiteRef>,
        neg: impl IntoIterator<Item = SiteRef>,
        rate: f64,
    ) -> Result<Self, ModelError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ModelError::InvalidRate(rate));
        }
        Ok(Self {
            body,
            pos: pos.into_iter().collect(),
            neg: neg.into_iter().collect(),
            rate,
        })
    }

    pub fn association(
        left: SiteRef,
        right: SiteRef,
        pos: impl IntoIterator<Item = SiteRef>,
        neg: impl IntoIterator<Item = SiteRef>,
        rate: f64,
    ) -> Result<Self, ModelError> {
        Self::new(Body::Association(left, right), pos, neg, rate)
    }

    pub fn dissociation(
        left: SiteRef,
        right: SiteRef,
        pos: impl IntoIterator<Item = SiteRef>,
        neg: impl IntoIterator<Item = SiteRef>,
        rate: f64,
    ) -> Result<Self, ModelError> {
        Self::new(Body::Dissociation(left, right), pos, neg, rate)
    }

    pub fn transformation(
        source: SpeciesName,
        target: Option<SpeciesName>,
        pos: impl IntoIterator<Item = SiteRef>,
        neg: impl IntoIterator<Item = SiteRef>,
        rate: f64,
    ) -> Result<Self, ModelError> {
        Self::new(Body::Transformation { source, target }, pos, neg, rate)
    }

    pub fn kind(&self) -> SentenceKind {
        self.body.kind()
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn pos(&self) -> &BTreeSet<SiteRef> {
        &self.pos
    }

    pub fn neg(&self) -> &BTreeSet<SiteRef> {
        &self.neg
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Adds the body sites to `neg` (associations) or `pos` (dissociations).
    /// Idempotent; transformations are returned unchanged.
    pub fn with_implicit_conditions(mut self) -> Self {
        match &self.body {
            Body::Association(l, r) => {
                self.neg.insert(l.clone());
                self.neg.insert(r.clone());
            }
            Body::Dissociation(l, r) => {
                self.pos.insert(l.clone());
                self.pos.insert(r.clone());
            }
            Body::Transformation { .. } => {}
        }
        self
    }

    pub(crate) fn set_neg(&mut self, neg: BTreeSet<SiteRef>) {
        self.neg = neg;
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &BTreeSet<SiteRef>| {
            s.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
        };
        match &self.body {
            Body::Association(l, r) | Body::Dissociation(l, r) => {
                write!(f, "<{}, {}, {}", self.kind(), l, r)?
            }
            Body::Transformation { source, target } => write!(
                f,
                "<{}, {}, {}",
                self.kind(),
                source,
                target.as_ref().map_or("", |t| t.as_str())
            )?,
        }
        write!(f, ", {{{}}}, {{{}}}, {}>", set(&self.pos), set(&self.neg), self.rate)
    }
}

/// Location of a sentence or diagnostic in source text. 1-based columns,
/// `col_end` inclusive.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SourceSpan {
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.line, self.col_start, self.col_end)
    }
}

/// Sorted sites of one species, with helpers to convert between site names
/// and state bitmasks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SiteTable {
    species: SpeciesName,
    sites: Vec<SiteName>,
}

/// A state of a species: bit `i` set iff the `i`-th site of its table is bound.
pub type StateMask = u32;

/// Largest number of sites a single species may carry.
pub const MAX_SITES: usize = 24;

impl SiteTable {
    pub fn new(species: SpeciesName, sites: impl IntoIterator<Item = SiteName>) -> Self {
        let sites: BTreeSet<SiteName> = sites.into_iter().collect();
        Self {
            species,
            sites: sites.into_iter().collect(),
        }
    }

    pub fn species(&self) -> &SpeciesName {
        &self.species
    }

    pub fn sites(&self) -> &[SiteName] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index_of(&self, site: &SiteName) -> Option<usize> {
        self.sites.binary_search(site).ok()
    }

    pub fn bit(&self, site: &SiteName) -> Option<StateMask> {
        self.index_of(site).map(|i| 1 << i)
    }

    pub fn mask_of<'a>(&self, sites: impl IntoIterator<Item = &'a SiteName>) -> StateMask {
        sites
            .into_iter()
            .filter_map(|s| self.bit(s))
            .fold(0, |m, b| m | b)
    }

    pub fn names(&self, mask: StateMask) -> Vec<SiteName> {
        self.sites
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.clone())
            .collect()
    }

    pub fn state_count(&self) -> usize {
        1usize << self.sites.len()
    }

    /// All states ordered by cardinality, then lexicographically by their
    /// sorted site lists: `{}`, `{a}`, `{b}`, `{a,b}` ...
    pub fn states_in_order(&self) -> Vec<StateMask> {
        graded_order(self.sites.len())
    }
}

/// Graded-lexicographic enumeration of all subsets of `n` ordered sites.
pub fn graded_order(n: usize) -> Vec<StateMask> {
    assert!(n <= MAX_SITES, "too many sites for a single species");
    let mut masks: Vec<StateMask> = (0..(1u32 << n)).collect();
    masks.sort_by(|a, b| {
        a.count_ones()
            .cmp(&b.count_ones())
            .then_with(|| bits_of(*a).cmp(&bits_of(*b)))
    });
    masks
}

fn bits_of(mask: StateMask) -> Vec<u32> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Inverse of [`graded_order`]: `index[mask]` is the position of `mask`.
pub fn graded_index(n: usize) -> Vec<usize> {
    let order = graded_order(n);
    let mut index = vec![0; order.len()];
    for (i, m) in order.into_iter().enumerate() {
        index[m as usize] = i;
    }
    index
}

/// A set of states of one species.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateSet {
    table: SiteTable,
    /// Members in graded order.
    masks: Vec<StateMask>,
}

impl StateSet {
    pub fn new(table: SiteTable, masks: impl IntoIterator<Item = StateMask>) -> Self {
        let members: BTreeSet<StateMask> = masks.into_iter().collect();
        let masks = table
            .states_in_order()
            .into_iter()
            .filter(|m| members.contains(m))
            .collect();
        Self { table, masks }
    }

    pub fn table(&self) -> &SiteTable {
        &self.table
    }

    pub fn masks(&self) -> &[StateMask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn contains(&self, mask: StateMask) -> bool {
        self.masks.contains(&mask)
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        self.masks.iter().any(|m| other.contains(*m))
    }

    /// Members as sets of site names.
    pub fn to_named(&self) -> BTreeSet<BTreeSet<String>> {
        self.masks
            .iter()
            .map(|m| {
                self.table
                    .names(*m)
                    .into_iter()
                    .map(|s| s.as_str().to_string())
                    .collect()
            })
            .collect()
    }

    /// Membership table indexed by mask.
    pub fn membership(&self) -> Vec<bool> {
        let mut v = vec![false; self.table.state_count()];
        for m in &self.masks {
            v[*m as usize] = true;
        }
        v
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.masks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let names: Vec<_> = self.table.names(*m).iter().map(|s| s.to_string()).collect();
            write!(f, "{{{}}}", names.join(","))?;
        }
        f.write_str("}")
    }
}

/// `{S ⊆ sites(table) | every pos site of the species is in S, no member of S
/// is a neg site of the species}`.
pub fn states_from(
    table: &SiteTable,
    pos: &BTreeSet<SiteRef>,
    neg: &BTreeSet<SiteRef>,
) -> StateSet {
    let sp = table.species();
    let mut required: StateMask = 0;
    for r in pos.iter().filter(|r| &r.species == sp) {
        match table.bit(&r.site) {
            Some(b) => required |= b,
            // A required site the species does not have: nothing qualifies.
            None => return StateSet::new(table.clone(), []),
        }
    }
    let forbidden = table.mask_of(neg.iter().filter(|r| &r.species == sp).map(|r| &r.site));
    let masks = (0..table.state_count() as StateMask)
        .filter(|m| m & required == required && m & forbidden == 0);
    StateSet::new(table.clone(), masks)
}

/// An ordered collection of sentences plus simulation defaults.
#[derive(Clone, PartialEq, Debug)]
pub struct Model {
    sentences: Vec<Sentence>,
    spans: Vec<Option<SourceSpan>>,
    populations: BTreeMap<SpeciesName, u64>,
    default_population: u64,
    sample_time: f64,
}

impl Model {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let spans = vec![None; sentences.len()];
        Self {
            sentences,
            spans,
            populations: BTreeMap::new(),
            default_population: DEFAULT_POPULATION,
            sample_time: DEFAULT_SAMPLE_TIME,
        }
    }

    pub fn with_spans(sentences: Vec<Sentence>, spans: Vec<SourceSpan>) -> Self {
        assert_eq!(sentences.len(), spans.len());
        let mut m = Self::new(sentences);
        m.spans = spans.into_iter().map(Some).collect();
        m
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub(crate) fn sentences_mut(&mut self) -> &mut [Sentence] {
        &mut self.sentences
    }

    pub fn span(&self, index: usize) -> Option<SourceSpan> {
        self.spans.get(index).copied().flatten()
    }

    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    pub fn set_sample_time(&mut self, t: f64) -> Result<(), ModelError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(ModelError::InvalidSampleTime(t));
        }
        self.sample_time = t;
        Ok(())
    }

    pub fn default_population(&self) -> u64 {
        self.default_population
    }

    pub fn set_default_population(&mut self, n: u64) {
        self.default_population = n;
    }

    pub fn set_population(&mut self, species: SpeciesName, n: u64) {
        self.populations.insert(species, n);
    }

    /// Initial count of `species`: its override, else the default population.
    pub fn population(&self, species: &SpeciesName) -> u64 {
        self.populations
            .get(species)
            .copied()
            .unwrap_or(self.default_population)
    }

    /// Species occurring in sentence bodies, in order of first occurrence.
    pub fn species(&self) -> Vec<SpeciesName> {
        let mut out: Vec<SpeciesName> = Vec::new();
        for s in &self.sentences {
            for sp in s.body.species() {
                if !out.contains(sp) {
                    out.push(sp.clone());
                }
            }
        }
        out
    }

    /// Sites of `species` occurring in sentence bodies, sorted.
    pub fn sites(&self, species: &SpeciesName) -> Vec<SiteName> {
        let set: BTreeSet<SiteName> = self
            .sentences
            .iter()
            .filter_map(|s| s.body.pair())
            .flat_map(|(l, r)| [l, r])
            .filter(|r| &r.species == species)
            .map(|r| r.site.clone())
            .collect();
        set.into_iter().collect()
    }

    pub fn site_table(&self, species: &SpeciesName) -> SiteTable {
        SiteTable::new(species.clone(), self.sites(species))
    }

    pub fn states(
        &self,
        species: &SpeciesName,
        pos: &BTreeSet<SiteRef>,
        neg: &BTreeSet<SiteRef>,
    ) -> StateSet {
        states_from(&self.site_table(species), pos, neg)
    }

    /// `(states(left), states(right))` of sentence `index`; the right side is
    /// `None` for decays.
    pub fn sentence_states(&self, index: usize) -> (StateSet, Option<StateSet>) {
        let s = &self.sentences[index];
        let left = self.states(s.body.left_species(), &s.pos, &s.neg);
        let right = s
            .body
            .right_species()
            .map(|sp| self.states(sp, &s.pos, &s.neg));
        (left, right)
    }
}

/// Free-standing form of [`Model::species`].
pub fn species_of(model: &Model) -> Vec<SpeciesName> {
    model.species()
}

/// Free-standing form of [`Model::sites`].
pub fn sites_of(model: &Model, species: &SpeciesName) -> Vec<SiteName> {
    model.sites(species)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(sp: &str, site: &str) -> SiteRef {
        SiteRef::parse(sp, site).unwrap()
    }

    fn sp(s: &str) -> SpeciesName {
        SpeciesName::new(s).unwrap()
    }

    #[test]
    fn names_follow_identifier_class() {
        assert!(SpeciesName::new("FcR").is_ok());
        assert!(SiteName::new("a_1").is_ok());
        assert!(SpeciesName::new("1A").is_err());
        assert!(SpeciesName::new("").is_err());
        assert!(SiteName::new("on").is_err());
        assert!(SiteName::new("a-b").is_err());
        assert_ne!(sp("a"), sp("A"));
    }

    #[test]
    fn site_ref_orders_by_site_then_species() {
        assert!(r("FcR", "f") < r("IgG", "i"));
        assert!(r("Phosph", "phosph") < r("FcR", "y"));
        assert!(r("A", "x") < r("B", "x"));
        assert!(r("B", "s") < r("A", "sr"));
    }

    #[test]
    fn graded_order_matches_three_site_numbering() {
        // {}, {f}, {y}, {z}, {f,y}, {f,z}, {y,z}, {f,y,z}
        assert_eq!(graded_order(3), vec![0, 1, 2, 4, 3, 5, 6, 7]);
        let idx = graded_index(3);
        assert_eq!(idx[0b011], 4);
        assert_eq!(idx[0b111], 7);
        assert_eq!(graded_order(0), vec![0]);
    }

    #[test]
    fn rate_must_be_positive() {
        assert!(Sentence::association(r("A", "a"), r("B", "b"), [], [], 0.0).is_err());
        assert!(Sentence::association(r("A", "a"), r("B", "b"), [], [], f64::NAN).is_err());
        assert!(Sentence::association(r("A", "a"), r("B", "b"), [], [], 0.1).is_ok());
    }

    #[test]
    fn implicit_conditions_are_idempotent() {
        let s = Sentence::dissociation(r("A", "a"), r("B", "b"), [r("A", "c")], [], 1.0).unwrap();
        let once = s.with_implicit_conditions();
        assert_eq!(once.pos().len(), 3);
        assert_eq!(once.clone().with_implicit_conditions(), once);
    }

    #[test]
    fn states_with_required_and_forbidden_sites() {
        let table = SiteTable::new(sp("A"), [SiteName::new("a1").unwrap(), SiteName::new("a2").unwrap()]);
        let pos: BTreeSet<_> = [r("A", "a1")].into();
        let s = states_from(&table, &pos, &BTreeSet::new());
        let expected: BTreeSet<BTreeSet<String>> = [
            ["a1".to_string()].into(),
            ["a1".to_string(), "a2".to_string()].into(),
        ]
        .into();
        assert_eq!(s.to_named(), expected);
        assert_eq!(states_from(&table, &BTreeSet::new(), &BTreeSet::new()).len(), 4);
        let missing: BTreeSet<_> = [r("A", "zz")].into();
        assert!(states_from(&table, &missing, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn species_and_sites_come_from_bodies_only() {
        let m = Model::new(vec![Sentence::association(
            r("A", "a"),
            r("B", "b"),
            [r("C", "c")],
            [],
            1.0,
        )
        .unwrap()]);
        assert_eq!(m.species(), vec![sp("A"), sp("B")]);
        assert!(m.sites(&sp("C")).is_empty());
        assert!(Model::new(vec![]).species().is_empty());
    }

    #[test]
    fn populations_default_and_override() {
        let mut m = Model::new(vec![]);
        assert_eq!(m.population(&sp("A")), 1000);
        m.set_population(sp("A"), 3);
        m.set_default_population(7);
        assert_eq!(m.population(&sp("A")), 3);
        assert_eq!(m.population(&sp("B")), 7);
        assert!(m.set_sample_time(0.0).is_err());
    }
}
