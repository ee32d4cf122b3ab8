//! Triple files, vocabularies, encoded splits and ground-truth indexes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl RawTriple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        RawTriple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// Integer-encoded fact. `h` and `t` index entities, `r` indexes relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub h: usize,
    pub r: usize,
    pub t: usize,
}

impl Triple {
    pub const fn new(h: usize, r: usize, t: usize) -> Self {
        Triple { h, r, t }
    }
}

/// Parses tab-separated `head<TAB>relation<TAB>tail` lines.
///
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_triples(text: &str) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let tokens: Vec<&str> = fields.iter().map(|f| f.trim()).collect();
        if let Some(pos) = tokens.iter().position(|t| t.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("field {} is empty", pos + 1),
            });
        }
        out.push(RawTriple::new(tokens[0], tokens[1], tokens[2]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), i);
        i
    }

    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::Inconsistent(format!("duplicate vocabulary token {tok}")));
            }
        }
        Ok(Interner { tokens, index })
    }
}

/// Entity and relation token tables, indexed by first appearance in training.
///
/// Node layout of the Levi graph: entity `e` is node `e`, relation `r` is
/// node `num_entities() + r`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entities: Interner,
    relations: Interner,
}

impl Vocabulary {
    pub fn from_tokens(entities: Vec<String>, relations: Vec<String>) -> Result<Self> {
        Ok(Vocabulary {
            entities: Interner::from_tokens(entities)?,
            relations: Interner::from_tokens(relations)?,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.entities.tokens.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.tokens.len()
    }

    pub fn node_count(&self) -> usize {
        self.num_entities() + self.num_relations()
    }

    pub fn entity_id(&self, token: &str) -> Option<usize> {
        self.entities.index.get(token).copied()
    }

    pub fn relation_id(&self, token: &str) -> Option<usize> {
        self.relations.index.get(token).copied()
    }

    pub fn entity(&self, id: usize) -> Option<&str> {
        self.entities.tokens.get(id).map(String::as_str)
    }

    pub fn relation(&self, id: usize) -> Option<&str> {
        self.relations.tokens.get(id).map(String::as_str)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities.tokens
    }

    pub fn relations(&self) -> &[String] {
        &self.relations.tokens
    }

    pub fn entity_node(&self, e: usize) -> usize {
        e
    }

    pub fn relation_node(&self, r: usize) -> usize {
        self.num_entities() + r
    }

    pub fn encode(&self, raw: &RawTriple) -> Result<Triple> {
        let mut missing = Vec::new();
        self.encode_into(raw, &mut missing)
            .ok_or(Error::UnknownTokens(missing))
    }

    fn encode_into(&self, raw: &RawTriple, missing: &mut Vec<(TokenKind, String)>) -> Option<Triple> {
        let h = self.entity_id(&raw.head);
        let r = self.relation_id(&raw.relation);
        let t = self.entity_id(&raw.tail);
        let mut note = |kind: TokenKind, tok: &str| {
            let item = (kind, tok.to_owned());
            if !missing.contains(&item) {
                missing.push(item);
            }
        };
        if h.is_none() {
            note(TokenKind::Entity, &raw.head);
        }
        if r.is_none() {
            note(TokenKind::Relation, &raw.relation);
        }
        if t.is_none() {
            note(TokenKind::Entity, &raw.tail);
        }
        Some(Triple::new(h?, r?, t?))
    }

    pub fn decode(&self, triple: Triple) -> Option<RawTriple> {
        Some(RawTriple::new(
            self.entity(triple.h)?,
            self.relation(triple.r)?,
            self.entity(triple.t)?,
        ))
    }
}

pub fn build_vocabulary(train: &[RawTriple]) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut vocab = Vocabulary::default();
    for t in train {
        vocab.entities.intern(&t.head);
        vocab.relations.intern(&t.relation);
        vocab.entities.intern(&t.tail);
    }
    Ok(vocab)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RawSplits {
    pub train: Vec<RawTriple>,
    pub valid: Vec<RawTriple>,
    pub test: Vec<RawTriple>,
}

/// Encoded splits.
///
/// With `inverse_augmented`, each split holds its original triples followed
/// by their inverses `(t, r + base_relations, h)`, in the same order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub vocabulary: Vocabulary,
    pub inverse_augmented: bool,
}

fn augment(triples: &[Triple], base_relations: usize) -> Vec<Triple> {
    let mut out = Vec::with_capacity(triples.len() * 2);
    out.extend_from_slice(triples);
    out.extend(
        triples
            .iter()
            .map(|t| Triple::new(t.t, t.r + base_relations, t.h)),
    );
    out
}

pub fn encode_dataset(raw: &RawSplits, vocab: &Vocabulary, add_inverses: bool) -> Result<Dataset> {
    let mut missing = Vec::new();
    let mut encode_split = |split: &[RawTriple]| -> Vec<Triple> {
        split
            .iter()
            .filter_map(|t| vocab.encode_into(t, &mut missing))
            .collect()
    };
    let train = encode_split(&raw.train);
    let valid = encode_split(&raw.valid);
    let test = encode_split(&raw.test);
    if !missing.is_empty() {
        return Err(Error::UnknownTokens(missing));
    }
    Dataset::from_encoded(train, valid, test, vocab.clone(), add_inverses)
}

impl Dataset {
    /// Builds a dataset from un-augmented encoded splits.
    pub fn from_encoded(
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
        vocabulary: Vocabulary,
        add_inverses: bool,
    ) -> Result<Self> {
        let (ne, nr) = (vocabulary.num_entities(), vocabulary.num_relations());
        for t in train.iter().chain(&valid).chain(&test) {
            if t.h >= ne || t.t >= ne || t.r >= nr {
                return Err(Error::Inconsistent(format!("triple {t:?} outside vocabulary")));
            }
        }
        let (train, valid, test) = if add_inverses {
            (augment(&train, nr), augment(&valid, nr), augment(&test, nr))
        } else {
            (train, valid, test)
        };
        Ok(Dataset {
            train,
            valid,
            test,
            vocabulary,
            inverse_augmented: add_inverses,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.vocabulary.num_entities()
    }

    /// Relations in the working (possibly inverse-augmented) index space.
    pub fn num_relations(&self) -> usize {
        self.base_relations() * if self.inverse_augmented { 2 } else { 1 }
    }

    pub fn base_relations(&self) -> usize {
        self.vocabulary.num_relations()
    }

    /// Nodes of the Levi graph built over the working relation space.
    pub fn node_count(&self) -> usize {
        self.num_entities() + self.num_relations()
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// The split without its inverse half.
    pub fn originals(&self, split: Split) -> &[Triple] {
        let all = self.split(split);
        if self.inverse_augmented {
            &all[..all.len() / 2]
        } else {
            all
        }
    }

    /// Index of the inverse of relation `r`, when augmentation is on.
    pub fn inverse_relation(&self, r: usize) -> Option<usize> {
        if !self.inverse_augmented {
            return None;
        }
        let base = self.base_relations();
        Some(if r < base { r + base } else { r - base })
    }

    /// Human-readable name for a working-space relation; inverses get a `^-1` suffix.
    pub fn relation_name(&self, r: usize) -> Option<String> {
        let base = self.base_relations();
        if r < base {
            self.vocabulary.relation(r).map(str::to_owned)
        } else if self.inverse_augmented && r < 2 * base {
            self.vocabulary.relation(r - base).map(|s| format!("{s}^-1"))
        } else {
            None
        }
    }
}

/// Known-true tails per `(h, r)` and heads per `(t, r)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TruthIndex {
    pub tails_of: BTreeMap<(usize, usize), BTreeSet<usize>>,
    pub heads_of: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

static EMPTY: BTreeSet<usize> = BTreeSet::new();

impl TruthIndex {
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut idx = TruthIndex::default();
        for t in triples {
            idx.insert(*t);
        }
        idx
    }

    pub fn insert(&mut self, t: Triple) {
        self.tails_of.entry((t.h, t.r)).or_default().insert(t.t);
        self.heads_of.entry((t.t, t.r)).or_default().insert(t.h);
    }

    pub fn tails(&self, h: usize, r: usize) -> &BTreeSet<usize> {
        self.tails_of.get(&(h, r)).unwrap_or(&EMPTY)
    }

    pub fn heads(&self, t: usize, r: usize) -> &BTreeSet<usize> {
        self.heads_of.get(&(t, r)).unwrap_or(&EMPTY)
    }

    pub fn contains(&self, t: Triple) -> bool {
        self.tails(t.h, t.r).contains(&t.t)
    }

    /// Distinct `(h, r)` query pairs in ascending order.
    pub fn query_pairs(&self) -> Vec<(usize, usize)> {
        self.tails_of.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.tails_of.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tails_of.is_empty()
    }
}

pub fn build_truth_index(dataset: &Dataset, splits: &[Split]) -> TruthIndex {
    TruthIndex::from_triples(splits.iter().flat_map(|&s| dataset.split(s)))
}
