//! Immutable, indexed triple store.
//!
//! Every original predicate `P` with index `i` is given the id `2i`; its inverse
//! `P^-1` gets `2i + 1`. Only original facts are stored in the fact list, while
//! the per-predicate adjacency covers both directions, so path joins can walk
//! inverse edges without special cases.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Suffix used to render an inverse predicate.
pub const INVERSE_SUFFIX: &str = "^-1";

#[derive(Debug, Error)]
pub enum KgError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty field")]
    EmptyField { line: usize },
    #[error("line {line}: literal object {value:?} is not allowed (enable literals to keep it)")]
    Literal { line: usize, value: String },
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("unknown predicate id {0}")]
    UnknownPredicate(u32),
    #[error("unknown predicate name {0:?}")]
    UnknownPredicateName(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Predicate identifier. Even ids are original predicates, odd ids their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateId(pub u32);

impl PredicateId {
    #[inline]
    pub fn from_base(base_index: usize) -> Self {
        PredicateId((base_index as u32) << 1)
    }

    #[inline]
    pub fn inverse(self) -> Self {
        PredicateId(self.0 ^ 1)
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    /// The original (non-inverted) predicate this id refers to.
    #[inline]
    pub fn base(self) -> Self {
        PredicateId(self.0 & !1)
    }

    /// Index of the original predicate in the predicate symbol table.
    #[inline]
    pub fn base_index(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: EntityId,
}

impl Fact {
    pub fn new(subject: EntityId, predicate: PredicateId, object: EntityId) -> Self {
        Fact {
            subject,
            predicate,
            object,
        }
    }

    /// The same statement expressed with an original predicate.
    pub fn canonical(self) -> Self {
        if self.predicate.is_inverse() {
            Fact::new(self.object, self.predicate.inverse(), self.subject)
        } else {
            self
        }
    }
}

/// Bijection between surface strings and dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SymbolTable::new();
        for n in names {
            table.intern(&n.into());
        }
        table
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// One name per line, in id order.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for n in &self.names {
            writeln!(w, "{n}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> std::io::Result<Self> {
        let mut table = SymbolTable::new();
        for line in r.lines() {
            let line = line?;
            table.intern(line.trim_end_matches('\r'));
        }
        Ok(table)
    }
}

/// CSR adjacency for one predicate direction, subjects sorted ascending.
#[derive(Clone, Debug, Default)]
struct Adjacency {
    subjects: Vec<EntityId>,
    offsets: Vec<u32>,
    objects: Vec<EntityId>,
}

impl Adjacency {
    fn from_sorted_pairs(pairs: &[(EntityId, EntityId)]) -> Self {
        let mut adj = Adjacency::default();
        for &(s, o) in pairs {
            if adj.subjects.last() != Some(&s) {
                adj.subjects.push(s);
                adj.offsets.push(adj.objects.len() as u32);
            }
            adj.objects.push(o);
        }
        adj.offsets.push(adj.objects.len() as u32);
        adj
    }

    #[inline]
    fn objects_of(&self, s: EntityId) -> &[EntityId] {
        match self.subjects.binary_search(&s) {
            Ok(i) => &self.objects[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            Err(_) => &[],
        }
    }

    fn len(&self) -> usize {
        self.objects.len()
    }

    fn pairs(&self) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.subjects.iter().enumerate().flat_map(move |(i, &s)| {
            self.objects[self.offsets[i] as usize..self.offsets[i + 1] as usize]
                .iter()
                .map(move |&o| (s, o))
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Keep objects that look like literals (`"..."`) as ordinary entities.
    pub allow_literals: bool,
}

#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: SymbolTable,
    predicates: SymbolTable,
    facts: Vec<Fact>,
    adjacency: Vec<Adjacency>,
}

impl KnowledgeGraph {
    /// Builds a graph over the given symbol tables. Facts may use inverse
    /// predicates; they are canonicalized and deduplicated.
    pub fn from_parts(
        entities: SymbolTable,
        predicates: SymbolTable,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Self, KgError> {
        let n_ent = entities.len() as u32;
        let n_pred = predicates.len();
        let mut canon: Vec<Fact> = Vec::new();
        for f in facts {
            if f.subject.0 >= n_ent {
                return Err(KgError::UnknownEntity(f.subject.0));
            }
            if f.object.0 >= n_ent {
                return Err(KgError::UnknownEntity(f.object.0));
            }
            if f.predicate.base_index() >= n_pred {
                return Err(KgError::UnknownPredicate(f.predicate.0));
            }
            canon.push(f.canonical());
        }
        canon.sort_unstable_by_key(|f| (f.predicate, f.subject, f.object));
        canon.dedup();

        let mut adjacency = Vec::with_capacity(2 * n_pred);
        let mut start = 0;
        for base in 0..n_pred {
            let p = PredicateId::from_base(base);
            let mut end = start;
            while end < canon.len() && canon[end].predicate == p {
                end += 1;
            }
            let forward: Vec<(EntityId, EntityId)> =
                canon[start..end].iter().map(|f| (f.subject, f.object)).collect();
            let mut backward: Vec<(EntityId, EntityId)> =
                forward.iter().map(|&(s, o)| (o, s)).collect();
            backward.sort_unstable();
            adjacency.push(Adjacency::from_sorted_pairs(&forward));
            adjacency.push(Adjacency::from_sorted_pairs(&backward));
            start = end;
        }

        canon.sort_unstable_by_key(|f| (f.subject, f.predicate, f.object));
        Ok(KnowledgeGraph {
            entities,
            predicates,
            facts: canon,
            adjacency,
        })
    }

    pub fn empty() -> Self {
        KnowledgeGraph {
            entities: SymbolTable::new(),
            predicates: SymbolTable::new(),
            facts: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    /// Reads `subject<TAB>predicate<TAB>object` lines. Blank lines and lines
    /// starting with `#` are skipped; duplicate triples are merged.
    pub fn load_triples<R: BufRead>(reader: R, options: &LoadOptions) -> Result<Self, KgError> {
        Self::load_triples_with_symbols(reader, options, SymbolTable::new(), SymbolTable::new())
    }

    /// Like [`load_triples`](Self::load_triples) but extends existing symbol
    /// tables, so ids already assigned stay stable.
    pub fn load_triples_with_symbols<R: BufRead>(
        reader: R,
        options: &LoadOptions,
        mut entities: SymbolTable,
        mut predicates: SymbolTable,
    ) -> Result<Self, KgError> {
        let mut facts = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(KgError::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(KgError::EmptyField { line: line_no });
            }
            if !options.allow_literals && fields[2].starts_with('"') {
                return Err(KgError::Literal {
                    line: line_no,
                    value: fields[2].to_string(),
                });
            }
            let s = EntityId(entities.intern(fields[0]));
            let p = PredicateId::from_base(predicates.intern(fields[1]) as usize);
            let o = EntityId(entities.intern(fields[2]));
            facts.push(Fact::new(s, p, o));
        }
        Self::from_parts(entities, predicates, facts)
    }

    /// Writes the original facts in the load format, sorted by id.
    pub fn write_triples<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for f in &self.facts {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.entity_name(f.subject),
                self.predicates.names[f.predicate.base_index()],
                self.entity_name(f.object)
            )?;
        }
        Ok(())
    }

    pub fn entities(&self) -> &SymbolTable {
        &self.entities
    }

    pub fn predicates(&self) -> &SymbolTable {
        &self.predicates
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Number of original predicates.
    pub fn num_base_predicates(&self) -> usize {
        self.predicates.len()
    }

    /// Size of the predicate vocabulary including inverses.
    pub fn vocabulary_size(&self) -> usize {
        2 * self.predicates.len()
    }

    /// Distinct original facts.
    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Original facts sorted by (subject, predicate, object).
    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    /// Every predicate id, inverses included, in id order.
    pub fn predicate_vocabulary(&self) -> Vec<PredicateId> {
        (0..self.vocabulary_size() as u32).map(PredicateId).collect()
    }

    /// Original predicates only, in id order.
    pub fn original_predicates(&self) -> Vec<PredicateId> {
        (0..self.predicates.len()).map(PredicateId::from_base).collect()
    }

    fn check_entity(&self, e: EntityId) -> Result<(), KgError> {
        if e.index() < self.entities.len() {
            Ok(())
        } else {
            Err(KgError::UnknownEntity(e.0))
        }
    }

    fn check_predicate(&self, p: PredicateId) -> Result<(), KgError> {
        if p.index() < self.adjacency.len() {
            Ok(())
        } else {
            Err(KgError::UnknownPredicate(p.0))
        }
    }

    /// `{ o : (s, p, o) in kg }`, inverse predicates answered by argument swap.
    pub fn objects_of(&self, s: EntityId, p: PredicateId) -> Result<&[EntityId], KgError> {
        self.check_entity(s)?;
        self.check_predicate(p)?;
        Ok(self.adjacency[p.index()].objects_of(s))
    }

    /// Unchecked variant for join loops; ids must be valid.
    #[inline]
    pub(crate) fn neighbors(&self, s: EntityId, p: PredicateId) -> &[EntityId] {
        self.adjacency[p.index()].objects_of(s)
    }

    /// Subjects with at least one `p` edge, ascending.
    pub fn subjects_of(&self, p: PredicateId) -> &[EntityId] {
        self.adjacency
            .get(p.index())
            .map(|a| a.subjects.as_slice())
            .unwrap_or(&[])
    }

    /// Distinct `(s, o)` pairs with `p(s, o)`, sorted.
    pub fn pairs(&self, p: PredicateId) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
        self.adjacency[p.index()].pairs()
    }

    pub fn predicate_count(&self, p: PredicateId) -> usize {
        self.adjacency.get(p.index()).map_or(0, Adjacency::len)
    }

    pub fn contains(&self, s: EntityId, p: PredicateId, o: EntityId) -> bool {
        self.adjacency
            .get(p.index())
            .is_some_and(|a| a.objects_of(s).binary_search(&o).is_ok())
    }

    pub fn contains_fact(&self, f: &Fact) -> bool {
        self.contains(f.subject, f.predicate, f.object)
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        self.entities.name(e.0).unwrap_or("<unknown>")
    }

    /// Surface form of a predicate, inverses suffixed with `^-1`.
    pub fn predicate_name(&self, p: PredicateId) -> String {
        let base = self.predicates.name(p.base_index() as u32).unwrap_or("<unknown>");
        if p.is_inverse() {
            format!("{base}{INVERSE_SUFFIX}")
        } else {
            base.to_string()
        }
    }

    /// Resolves a surface form, honoring the `^-1` suffix.
    pub fn parse_predicate(&self, name: &str) -> Result<PredicateId, KgError> {
        if let Some(id) = self.predicates.get(name) {
            return Ok(PredicateId::from_base(id as usize));
        }
        if let Some(base) = name.strip_suffix(INVERSE_SUFFIX) {
            if let Some(id) = self.predicates.get(base) {
                return Ok(PredicateId::from_base(id as usize).inverse());
            }
        }
        Err(KgError::UnknownPredicateName(name.to_string()))
    }

    /// Number of facts (either direction) touching each entity.
    pub fn entity_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_entities()];
        for f in &self.facts {
            deg[f.subject.index()] += 1;
            deg[f.object.index()] += 1;
        }
        deg
    }

    /// Drops facts touching entities with fewer than `min_degree` facts. Symbol
    /// tables are kept whole so ids stay aligned with the source graph.
    pub fn filter_min_degree(&self, min_degree: usize) -> KnowledgeGraph {
        let deg = self.entity_degrees();
        let kept = self
            .facts
            .iter()
            .copied()
            .filter(|f| deg[f.subject.index()] >= min_degree && deg[f.object.index()] >= min_degree);
        Self::from_parts(self.entities.clone(), self.predicates.clone(), kept)
            .expect("subset of a valid graph is valid")
    }

    /// Same symbol tables, minus the given facts.
    pub fn without(&self, removed: &HashSet<Fact>) -> KnowledgeGraph {
        let kept = self
            .facts
            .iter()
            .copied()
            .filter(|f| !removed.contains(f));
        Self::from_parts(self.entities.clone(), self.predicates.clone(), kept)
            .expect("subset of a valid graph is valid")
    }
}

impl fmt::Display for KnowledgeGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} facts, {} entities, {} predicates",
            self.num_facts(),
            self.num_entities(),
            self.num_base_predicates()
        )
    }
}
