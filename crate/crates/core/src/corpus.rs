//! Tokenized corpora, vocabularies and uniform sampling.
//!
//! A [`Corpus`] stores its sentences as interned token ids in one flat buffer,
//! so multi-million-line pools stay compact. Sentence indices are 0-based and
//! dense; they are the identity every other module refers to.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length filter used for all training data.
pub const DEFAULT_MAX_LEN: usize = 80;

/// Size of the uniformly sampled in-domain training sets.
pub const DEFAULT_IN_DOMAIN_SAMPLE: usize = 15_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Source,
    Target,
}

/// String interner shared between a corpus and the subsets derived from it.
#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    ids: FxHashMap<Box<str>, u32>,
    names: Vec<Box<str>>,
}

impl SymbolTable {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(token.into());
        self.ids.insert(token.into(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| &**s)
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    symbols: Arc<SymbolTable>,
    tokens: Vec<u32>,
    // offsets[i]..offsets[i + 1] spans sentence i
    offsets: Vec<usize>,
    side: Side,
    origin: String,
    provenance: Option<Vec<usize>>,
}

/// Borrowed view of one sentence.
#[derive(Clone, Copy, Debug)]
pub struct Sentence<'a> {
    ids: &'a [u32],
    symbols: &'a SymbolTable,
}

impl<'a> Sentence<'a> {
    /// Token ids in the owning corpus' symbol table.
    pub fn ids(&self) -> &'a [u32] {
        self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &'a str> + 'a {
        let symbols = self.symbols;
        self.ids.iter().map(move |&id| symbols.name(id))
    }

    pub fn to_tokens(&self) -> Vec<String> {
        self.tokens().map(str::to_owned).collect()
    }

    pub fn join(&self) -> String {
        self.tokens().collect::<Vec<_>>().join(" ")
    }
}

/// Incrementally builds a [`Corpus`].
#[derive(Debug)]
pub struct CorpusBuilder {
    symbols: SymbolTable,
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    side: Side,
    origin: String,
}

impl CorpusBuilder {
    pub fn new(side: Side, origin: impl Into<String>) -> Self {
        CorpusBuilder {
            symbols: SymbolTable::default(),
            tokens: Vec::new(),
            offsets: vec![0],
            side,
            origin: origin.into(),
        }
    }

    /// Appends a sentence; returns `false` (and appends nothing) when it has no tokens.
    pub fn push<'t>(&mut self, tokens: impl IntoIterator<Item = &'t str>) -> bool {
        let start = self.tokens.len();
        for tok in tokens {
            let id = self.symbols.intern(tok);
            self.tokens.push(id);
        }
        if self.tokens.len() == start {
            return false;
        }
        self.offsets.push(self.tokens.len());
        true
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn finish(self) -> Corpus {
        Corpus {
            symbols: Arc::new(self.symbols),
            tokens: self.tokens,
            offsets: self.offsets,
            side: self.side,
            origin: self.origin,
            provenance: None,
        }
    }
}

impl Corpus {
    /// Builds a corpus from in-memory sentences. Fails on a sentence without tokens.
    pub fn from_sentences<S, T>(sentences: S, side: Side, origin: impl Into<String>) -> Result<Self>
    where
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let origin = origin.into();
        let mut builder = CorpusBuilder::new(side, origin.clone());
        for (i, line) in sentences.into_iter().enumerate() {
            if !builder.push(split_tokens(line.as_ref())) {
                return Err(Error::EmptySentence {
                    path: origin.into(),
                    line: i + 1,
                });
            }
        }
        Ok(builder.finish())
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sentence(&self, index: usize) -> Sentence<'_> {
        Sentence {
            ids: &self.tokens[self.offsets[index]..self.offsets[index + 1]],
            symbols: &self.symbols,
        }
    }

    pub fn sentences(&self) -> impl ExactSizeIterator<Item = Sentence<'_>> + '_ {
        (0..self.len()).map(move |i| self.sentence(i))
    }

    pub fn sentence_len(&self, index: usize) -> usize {
        self.offsets[index + 1] - self.offsets[index]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    /// Indices into the parent corpus this one was sampled or cut from.
    pub fn provenance(&self) -> Option<&[usize]> {
        self.provenance.as_deref()
    }

    /// Copies the given sentences, in the given order, into a new corpus that
    /// records `indices` as its provenance.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let mut tokens = Vec::new();
        let mut offsets = Vec::with_capacity(indices.len() + 1);
        offsets.push(0);
        for &i in indices {
            tokens.extend_from_slice(self.sentence(i).ids());
            offsets.push(tokens.len());
        }
        Corpus {
            symbols: Arc::clone(&self.symbols),
            tokens,
            offsets,
            side: self.side,
            origin: self.origin.clone(),
            provenance: Some(indices.to_vec()),
        }
    }

    /// Drops sentences longer than `max_len`; returns the filtered corpus and the
    /// number of dropped sentences. Provenance of the result points into `self`.
    pub fn filter_max_len(&self, max_len: usize) -> (Corpus, usize) {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.sentence_len(i) <= max_len).collect();
        let dropped = self.len() - keep.len();
        (self.subset(&keep), dropped)
    }
}

fn split_tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(' ').filter(|t| !t.is_empty())
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub dropped: usize,
}

fn read_lines(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        let line = std::str::from_utf8(&buf).map_err(|_| Error::NonUtf8 {
            path: path.to_path_buf(),
            line: line_no,
        })?;
        f(line_no, line)?;
    }
    Ok(())
}

fn load_unfiltered(path: &Path, side: Side) -> Result<Corpus> {
    let mut builder = CorpusBuilder::new(side, path.display().to_string());
    read_lines(path, |line_no, line| {
        if builder.push(split_tokens(line)) {
            Ok(())
        } else {
            Err(Error::EmptySentence {
                path: path.to_path_buf(),
                line: line_no,
            })
        }
    })?;
    Ok(builder.finish())
}

/// Reads a whitespace-tokenized file, one sentence per line, dropping
/// sentences longer than `max_len` tokens.
pub fn load_corpus(path: impl AsRef<Path>, max_len: usize) -> Result<LoadedCorpus> {
    load_corpus_side(path, max_len, Side::Source)
}

pub fn load_corpus_side(path: impl AsRef<Path>, max_len: usize, side: Side) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    if max_len == 0 {
        return Err(Error::invalid("max_len must be positive"));
    }
    let raw = load_unfiltered(path, side)?;
    let (corpus, dropped) = raw.filter_max_len(max_len);
    // Filtering keeps file order, so the result is indexed by kept line.
    let corpus = Corpus {
        provenance: None,
        ..corpus
    };
    if dropped > 0 {
        log::info!(
            "{}: dropped {dropped} sentences longer than {max_len} tokens",
            path.display()
        );
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(path.display().to_string()));
    }
    Ok(LoadedCorpus { corpus, dropped })
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for sentence in corpus.sentences() {
        let mut first = true;
        for tok in sentence.tokens() {
            if !first {
                w.write_all(b" ").map_err(|e| Error::io(path, e))?;
            }
            w.write_all(tok.as_bytes()).map_err(|e| Error::io(path, e))?;
            first = false;
        }
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the sampling sidecar: one original 0-based line number per line.
pub fn save_provenance(indices: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in indices {
        writeln!(w, "{i}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub src: Corpus,
    pub trg: Corpus,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .sentences()
                .zip(other.sentences())
                .all(|(a, b)| a.len() == b.len() && a.tokens().eq(b.tokens()))
    }
}

impl Eq for Corpus {}

impl ParallelCorpus {
    pub fn new(src: Corpus, trg: Corpus) -> Result<Self> {
        if src.len() != trg.len() {
            return Err(Error::LengthMismatch {
                what: "parallel corpus sides",
                left: src.len(),
                right: trg.len(),
            });
        }
        Ok(ParallelCorpus {
            src: src.with_side(Side::Source),
            trg: trg.with_side(Side::Target),
        })
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn side(&self, side: Side) -> &Corpus {
        match side {
            Side::Source => &self.src,
            Side::Target => &self.trg,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> ParallelCorpus {
        ParallelCorpus {
            src: self.src.subset(indices),
            trg: self.trg.subset(indices),
        }
    }
}

/// Loads both sides of a bitext, dropping a pair when either side exceeds `max_len`.
pub fn load_parallel(
    src_path: impl AsRef<Path>,
    trg_path: impl AsRef<Path>,
    max_len: usize,
) -> Result<(ParallelCorpus, usize)> {
    let (src_path, trg_path) = (src_path.as_ref(), trg_path.as_ref());
    if max_len == 0 {
        return Err(Error::invalid("max_len must be positive"));
    }
    let src = load_unfiltered(src_path, Side::Source)?;
    let trg = load_unfiltered(trg_path, Side::Target)?;
    if src.len() != trg.len() {
        return Err(Error::LengthMismatch {
            what: "parallel corpus sides",
            left: src.len(),
            right: trg.len(),
        });
    }
    let keep: Vec<usize> = (0..src.len())
        .filter(|&i| src.sentence_len(i) <= max_len && trg.sentence_len(i) <= max_len)
        .collect();
    let dropped = src.len() - keep.len();
    if keep.is_empty() {
        return Err(Error::EmptyCorpus(src_path.display().to_string()));
    }
    let mut src = src.subset(&keep);
    let mut trg = trg.subset(&keep);
    src.provenance = None;
    trg.provenance = None;
    if dropped > 0 {
        log::info!(
            "{}: dropped {dropped} sentence pairs longer than {max_len} tokens",
            src_path.display()
        );
    }
    Ok((ParallelCorpus { src, trg }, dropped))
}

/// `k` distinct indices out of `0..n`, uniform without replacement, in random order.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::SampleTooLarge {
            requested: k,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

/// Uniform sample of `k` sentences. The result's provenance lists the sampled
/// indices of `corpus` in sample order.
pub fn sample_uniform(corpus: &Corpus, k: usize, seed: u64) -> Result<Corpus> {
    let indices = sample_indices(corpus.len(), k, seed)?;
    Ok(corpus.subset(&indices))
}

pub fn sample_parallel(corpus: &ParallelCorpus, k: usize, seed: u64) -> Result<ParallelCorpus> {
    let indices = sample_indices(corpus.len(), k, seed)?;
    Ok(corpus.subset(&indices))
}

/// Token inventory with exact frequencies. Ids follow first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    ids: FxHashMap<String, u32>,
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl Vocabulary {
    pub fn add(&mut self, token: &str, count: u64) -> u32 {
        match self.ids.get(token) {
            Some(&id) => {
                self.counts[id as usize] += count;
                id
            }
            None => {
                let id = self.tokens.len() as u32;
                self.ids.insert(token.to_owned(), id);
                self.tokens.push(token.to_owned());
                self.counts.push(count);
                id
            }
        }
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn count_of(&self, token: &str) -> u64 {
        self.id(token).map_or(0, |id| self.count(id))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    /// Adds all counts of `corpus` into this vocabulary.
    pub fn extend_from(&mut self, corpus: &Corpus) {
        let mut local = vec![0u64; corpus.symbols().len()];
        for s in corpus.sentences() {
            for &id in s.ids() {
                local[id as usize] += 1;
            }
        }
        for (id, &c) in local.iter().enumerate() {
            if c > 0 {
                self.add(corpus.symbols().name(id as u32), c);
            }
        }
    }
}

pub fn build_vocab(corpus: &Corpus) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.origin().to_owned()));
    }
    let mut vocab = Vocabulary::default();
    for s in corpus.sentences() {
        for tok in s.tokens() {
            vocab.add(tok, 1);
        }
    }
    Ok(vocab)
}
