//! Dense word-embedding tables in the GloVe text format, and corpus word
//! counts.
//!
//! The text format holds one word per line, followed by its vector
//! components, all separated by single spaces:
//!
//! ```text
//! the 0.418 0.24968 -0.41242
//! of 0.70853 0.57088 -0.4716
//! ```
//!
//! A leading `vocab_size dims` line (as written by word2vec) is accepted on
//! read and never written.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::knn::cosine_similarity;
use crate::treebank::DepSentence;
use crate::{Error, Result};

/// Surface-form normalisation applied when words are ingested.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    #[default]
    Identity,
    Lowercase,
}

impl Normalization {
    pub fn apply<'a>(self, word: &'a str) -> Cow<'a, str> {
        match self {
            Normalization::Identity => Cow::Borrowed(word),
            Normalization::Lowercase => Cow::Owned(word.to_lowercase()),
        }
    }
}

/// An ordered vocabulary with one fixed-length vector per word.
///
/// Iteration follows insertion order. Replacing the vector of an existing
/// word keeps the word at its original position.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimensionality must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    /// Build a table from `(word, vector)` pairs. Later duplicates replace
    /// earlier ones.
    pub fn from_pairs<I, S>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::new(dim)?;
        for (word, vector) in pairs {
            table.insert(word, &vector)?;
        }
        Ok(table)
    }

    /// Insert or replace a word's vector. Returns `true` if the word was
    /// already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<bool> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(Error::dim(self.dim, vector.len(), format!("vector of '{}'", word)));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("vector of '{}' has non-finite components", word)));
        }

        match self.index.get(&word) {
            Some(&idx) => {
                self.data[idx * self.dim..(idx + 1) * self.dim].copy_from_slice(vector);
                Ok(true)
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.data.extend_from_slice(vector);
                Ok(false)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&idx| self.row(idx))
    }

    /// Position of `word` in iteration order.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.words
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(w, v)| (w.as_str(), v))
    }
}

/// Options for [`load_embeddings`].
#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub expected_dim: Option<usize>,
    pub normalization: Normalization,
}

/// A loaded table together with what the reader had to tolerate.
#[derive(Clone, Debug)]
pub struct LoadedTable {
    pub table: EmbeddingTable,
    /// Number of records whose word had already been seen. The last
    /// occurrence wins.
    pub duplicates: usize,
    /// The `vocab_size dims` header, if the file had one.
    pub header: Option<(usize, usize)>,
}

pub fn load_embeddings(path: impl AsRef<Path>, options: LoadOptions) -> Result<LoadedTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), path, options)
}

/// Read the text format from any buffered reader. `origin` is used in error
/// messages only.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    origin: impl AsRef<Path>,
    options: LoadOptions,
) -> Result<LoadedTable> {
    let origin = origin.as_ref();
    let mut table: Option<EmbeddingTable> = None;
    let mut header = None;
    let mut duplicates = 0;
    let mut seen_record = false;
    let mut components = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }

        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields.next().expect("non-empty line has a field");
        let rest: Vec<&str> = fields.collect();

        if !seen_record && header.is_none() && is_header(word, &rest, options.expected_dim) {
            let vocab = word.parse().expect("checked by is_header");
            let dims = rest[0].parse().expect("checked by is_header");
            header = Some((vocab, dims));
            continue;
        }
        seen_record = true;

        components.clear();
        for field in &rest {
            let value: f64 = field.parse().map_err(|_| {
                Error::parse(origin, lineno, format!("non-numeric field '{}'", field))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(origin, lineno, format!("non-finite value '{}'", field)));
            }
            components.push(value);
        }

        let table = match table.as_mut() {
            Some(t) => t,
            None => {
                let dim = options
                    .expected_dim
                    .or(header.map(|(_, d)| d))
                    .unwrap_or(components.len());
                if dim == 0 {
                    return Err(Error::parse(origin, lineno, "record without vector components"));
                }
                table.insert(EmbeddingTable::new(dim)?)
            }
        };
        if components.len() != table.dim() {
            return Err(Error::parse(
                origin,
                lineno,
                format!(
                    "dimension mismatch (expected {}, found {})",
                    table.dim(),
                    components.len()
                ),
            ));
        }

        let word = options.normalization.apply(word);
        if table.insert(word.into_owned(), &components)? {
            duplicates += 1;
        }
    }

    let table = table.ok_or_else(|| {
        Error::invalid(format!("{}: no embeddings found", origin.display()))
    })?;
    if duplicates > 0 {
        eprintln!(
            "warning: {}: {} duplicate word(s), last occurrence kept",
            origin.display(),
            duplicates
        );
    }

    Ok(LoadedTable {
        table,
        duplicates,
        header,
    })
}

fn is_header(first: &str, rest: &[&str], expected_dim: Option<usize>) -> bool {
    // A one-dimensional record such as `2 5` is indistinguishable from a
    // header; trust the caller when they say vectors have one component.
    rest.len() == 1
        && expected_dim != Some(1)
        && first.parse::<usize>().is_ok()
        && rest[0].parse::<usize>().is_ok()
}

pub fn save_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    check_writable(table)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_embeddings(table, &mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

fn check_writable(table: &EmbeddingTable) -> Result<()> {
    if table.is_empty() {
        return Err(Error::invalid("refusing to write an empty embedding table"));
    }
    for word in table.words() {
        if word.is_empty() {
            return Err(Error::invalid("empty word in embedding table"));
        }
        if word.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("word contains whitespace: {:?}", word)));
        }
    }
    Ok(())
}

/// Write a table without header. Validation is the caller's job; see
/// [`save_embeddings`].
pub fn write_embeddings<W: Write>(table: &EmbeddingTable, writer: &mut W) -> std::io::Result<()> {
    let mut line = String::new();
    for (word, vector) in table.iter() {
        line.clear();
        line.push_str(word);
        for &v in vector {
            line.push(' ');
            line.push_str(&format_component(v));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Format a value rounded to 9 significant digits, in the shortest form
/// that parses back to the rounded value.
pub(crate) fn format_component(v: f64) -> String {
    let rounded: f64 = format!("{:.8e}", v).parse().expect("valid float literal");
    if rounded == 0.0 {
        return "0".to_string();
    }
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{}", rounded)
    } else {
        format!("{:e}", rounded)
    }
}

/// Token counts over an annotated training corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VocabCounts {
    counts: HashMap<String, u64>,
    total: u64,
}

impl VocabCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: impl Into<String>, n: u64) {
        *self.counts.entry(word.into()).or_insert(0) += n;
        self.total += n;
    }

    /// Count of `word`; absent words count zero.
    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Words with a positive count.
    pub fn vocabulary(&self) -> HashSet<String> {
        self.counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(w, _)| w.clone())
            .collect()
    }

    /// Entries sorted by descending count, then by word.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }
}

impl<S: Into<String>> FromIterator<(S, u64)> for VocabCounts {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut counts = VocabCounts::new();
        for (w, c) in iter {
            counts.add(w, c);
        }
        counts
    }
}

/// Count token occurrences of each surface form in `corpus`.
pub fn count_tokens(corpus: &[DepSentence], normalization: Normalization) -> VocabCounts {
    let mut counts = VocabCounts::new();
    for sentence in corpus {
        for token in &sentence.tokens {
            counts.add(normalization.apply(&token.form).into_owned(), 1);
        }
    }
    counts
}

/// Read a counts file with one `word count` pair per line.
pub fn load_counts(path: impl AsRef<Path>, normalization: Normalization) -> Result<VocabCounts> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut counts = VocabCounts::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let (word, count) = match (fields.next(), fields.next(), fields.next()) {
            (None, _, _) => continue,
            (Some(w), Some(c), None) => (w, c),
            _ => return Err(Error::parse(path, idx + 1, "expected 'word count'")),
        };
        let count: u64 = count
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid count '{}'", count)))?;
        counts.add(normalization.apply(word).into_owned(), count);
    }
    Ok(counts)
}

pub fn save_counts(counts: &VocabCounts, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for (word, count) in counts.sorted() {
        writeln!(writer, "{} {}", word, count).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// A neighbour returned by [`nearest_neighbors`].
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
}

/// Exhaustive cosine search. Results are sorted by descending similarity,
/// ties broken by word. Zero vectors have similarity 0 to everything.
pub fn nearest_neighbors(
    table: &EmbeddingTable,
    query: &[f64],
    k: usize,
    exclude: Option<&HashSet<String>>,
) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if query.len() != table.dim() {
        return Err(Error::dim(table.dim(), query.len(), "neighbour query"));
    }

    let mut scored: Vec<(&str, f64)> = table
        .iter()
        .filter(|(w, _)| exclude.is_none_or(|ex| !ex.contains(*w)))
        .map(|(w, v)| (w, cosine_similarity(query, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);

    Ok(scored
        .into_iter()
        .map(|(w, s)| Neighbor {
            word: w.to_string(),
            similarity: s,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::treebank::DepToken;

    fn read(text: &str, options: LoadOptions) -> Result<LoadedTable> {
        read_embeddings(text.as_bytes(), "test.vec", options)
    }

    fn sentence(forms: &[&str]) -> DepSentence {
        DepSentence {
            tokens: forms
                .iter()
                .map(|f| DepToken {
                    form: f.to_string(),
                    pos: "_".to_string(),
                    head: 0,
                    label: "root".to_string(),
                })
                .collect(),
        }
    }

    #[test]
    fn reads_headerless_table() {
        let loaded = read("a 1.0 2.0\nb 0.0 0.5\n", LoadOptions::default()).unwrap();
        assert_eq!(loaded.table.len(), 2);
        assert_eq!(loaded.table.dim(), 2);
        assert_eq!(loaded.table.get("a"), Some(&[1.0, 2.0][..]));
        assert_eq!(loaded.table.get("b"), Some(&[0.0, 0.5][..]));
        assert!(loaded.header.is_none());
    }

    #[test]
    fn header_is_skipped() {
        let plain = read("a 1.0 2.0\nb 0.0 0.5\n", LoadOptions::default()).unwrap();
        let with_header = read("2 2\na 1.0 2.0\nb 0.0 0.5\n", LoadOptions::default()).unwrap();
        assert_eq!(plain.table, with_header.table);
        assert_eq!(with_header.header, Some((2, 2)));
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let err = read("a 1.0\nb 1.0 2.0\n", LoadOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dimension mismatch"), "{}", msg);
        assert!(msg.contains("line 2"), "{}", msg);
    }

    #[test]
    fn expected_dim_is_enforced() {
        let options = LoadOptions {
            expected_dim: Some(3),
            ..Default::default()
        };
        let err = read("a 1.0 2.0\n", options).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn non_numeric_field_is_an_error() {
        let err = read("a 1.0 x\n", LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("non-numeric"));
        let err = read("a 1.0 nan\n", LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(read("", LoadOptions::default()).is_err());
        assert!(read("\n\n", LoadOptions::default()).is_err());
    }

    #[test]
    fn duplicates_last_wins() {
        let loaded = read("a 1 1\nb 2 2\na 3 3\n", LoadOptions::default()).unwrap();
        assert_eq!(loaded.duplicates, 1);
        assert_eq!(loaded.table.words(), &["a".to_string(), "b".to_string()]);
        assert_eq!(loaded.table.get("a"), Some(&[3.0, 3.0][..]));
    }

    #[test]
    fn lowercasing_is_opt_in() {
        let text = "The 1 0\nthe 0 1\n";
        let exact = read(text, LoadOptions::default()).unwrap();
        assert_eq!(exact.table.len(), 2);
        let lowered = read(
            text,
            LoadOptions {
                normalization: Normalization::Lowercase,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(lowered.table.len(), 1);
        assert_eq!(lowered.duplicates, 1);
    }

    #[test]
    fn absent_word_differs_from_zero_vector() {
        let table = EmbeddingTable::from_pairs(2, vec![("z", vec![0.0, 0.0])]).unwrap();
        assert_eq!(table.get("z"), Some(&[0.0, 0.0][..]));
        assert_eq!(table.get("y"), None);
    }

    #[test]
    fn save_round_trip() {
        let table = EmbeddingTable::from_pairs(
            3,
            vec![
                ("a", vec![1.0 / 3.0, -2.5e-7, 12345.678901]),
                ("b", vec![0.0, -0.1, 7e20]),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vec");
        save_embeddings(&table, &path).unwrap();
        let loaded = load_embeddings(&path, LoadOptions::default()).unwrap().table;
        assert_eq!(loaded.words(), table.words());
        for ((_, a), (_, b)) in loaded.iter().zip(table.iter()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn save_rejects_whitespace_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vec");
        let table = EmbeddingTable::from_pairs(1, vec![("a b", vec![1.0])]).unwrap();
        let err = save_embeddings(&table, &path).unwrap_err();
        assert!(err.to_string().contains("word contains whitespace"));
        let empty = EmbeddingTable::new(2).unwrap();
        assert!(save_embeddings(&empty, &path).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let table = EmbeddingTable::from_pairs(1, vec![("a", vec![1.0])]).unwrap();
        let err = save_embeddings(&table, "/nonexistent-dir/x/t.vec").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn component_formatting() {
        assert_eq!(format_component(0.0), "0");
        assert_eq!(format_component(0.5), "0.5");
        assert_eq!(format_component(-1.0), "-1");
        assert_eq!(format_component(1.0 / 3.0), "0.333333333");
        assert_eq!(format_component(1.5e-7), "1.5e-7");
    }

    #[test]
    fn counting_tokens() {
        let counts = count_tokens(&[sentence(&["a", "b", "a"])], Normalization::Identity);
        assert_eq!(counts.get("a"), 2);
        assert_eq!(counts.get("b"), 1);
        assert_eq!(counts.total(), 3);

        assert!(count_tokens(&[], Normalization::Identity).is_empty());

        let counts = count_tokens(&[sentence(&["a"]), sentence(&["a"])], Normalization::Identity);
        assert_eq!(counts.get("a"), 2);
        assert_eq!(counts.get("zzz"), 0);
    }

    #[test]
    fn counting_is_case_sensitive_by_default() {
        let corpus = [sentence(&["The", "the"])];
        assert_eq!(count_tokens(&corpus, Normalization::Identity).get("the"), 1);
        assert_eq!(count_tokens(&corpus, Normalization::Lowercase).get("the"), 2);
    }

    #[test]
    fn counts_file_round_trip() {
        let counts: VocabCounts = vec![("a", 5), ("b", 1), ("c", 5)].into_iter().collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.txt");
        save_counts(&counts, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a 5\nc 5\nb 1\n");
        assert_eq!(load_counts(&path, Normalization::Identity).unwrap(), counts);
    }

    #[test]
    fn neighbours_by_cosine() {
        let table =
            EmbeddingTable::from_pairs(2, vec![("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])])
                .unwrap();
        let hits = nearest_neighbors(&table, &[1.0, 0.0], 2, None).unwrap();
        assert_eq!(
            hits,
            vec![
                Neighbor { word: "a".into(), similarity: 1.0 },
                Neighbor { word: "b".into(), similarity: 0.0 },
            ]
        );

        let exclude: HashSet<String> = ["a".to_string()].into_iter().collect();
        let hits = nearest_neighbors(&table, &[1.0, 0.0], 2, Some(&exclude)).unwrap();
        assert_eq!(hits, vec![Neighbor { word: "b".into(), similarity: 0.0 }]);
    }

    #[test]
    fn neighbour_self_similarity_and_ties() {
        let table = EmbeddingTable::from_pairs(
            2,
            vec![
                ("x", vec![0.3, -0.7]),
                ("c", vec![1.0, 1.0]),
                ("b", vec![2.0, 2.0]),
                ("zero", vec![0.0, 0.0]),
            ],
        )
        .unwrap();
        let hits = nearest_neighbors(&table, &[0.3, -0.7], 1, None).unwrap();
        assert_eq!(hits[0].word, "x");
        assert!((hits[0].similarity - 1.0).abs() < 1e-12);

        // b and c tie at cosine 1; lexicographic order decides.
        let hits = nearest_neighbors(&table, &[1.0, 1.0], 4, None).unwrap();
        assert_eq!(hits[0].word, "b");
        assert_eq!(hits[1].word, "c");
        let zero = hits.iter().find(|n| n.word == "zero").unwrap();
        assert_eq!(zero.similarity, 0.0);

        let zero_query = nearest_neighbors(&table, &[0.0, 0.0], 4, None).unwrap();
        assert!(zero_query.iter().all(|n| n.similarity == 0.0));
    }

    #[test]
    fn neighbour_errors() {
        let table = EmbeddingTable::from_pairs(2, vec![("a", vec![1.0, 0.0])]).unwrap();
        assert!(nearest_neighbors(&table, &[1.0, 0.0], 0, None).is_err());
        assert!(nearest_neighbors(&table, &[1.0], 1, None).is_err());
        assert_eq!(nearest_neighbors(&table, &[1.0, 0.0], 5, None).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn save_load_round_trip(
            rows in proptest::collection::btree_map("[a-zA-Z0-9_.-]{1,8}", proptest::collection::vec(-1e6f64..1e6, 3), 1..20),
        ) {
            let table = EmbeddingTable::from_pairs(3, rows.clone()).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.vec");
            save_embeddings(&table, &path).unwrap();
            let loaded = load_embeddings(&path, LoadOptions::default()).unwrap().table;
            prop_assert_eq!(loaded.words(), table.words());
            for (w, v) in &rows {
                for (a, b) in loaded.get(w).unwrap().iter().zip(v) {
                    prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
                }
            }
        }
    }
}
