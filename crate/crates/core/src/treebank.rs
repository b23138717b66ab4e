//! CoNLL-X treebanks and parser evaluation: attachment scores, rates of
//! words unseen in training, and a paired bootstrap significance test.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::EmbeddingTable;
use crate::{Error, Result};

/// Name of the generator behind every resampling decision, reported next
/// to p-values so results can be reproduced.
pub const BOOTSTRAP_RNG: &str = "ChaCha8 (rand_chacha 0.9), one stream per resample";

pub const PUNCT_LABEL: &str = "punct";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepToken {
    pub form: String,
    pub pos: String,
    /// 1-based index of the head token, 0 for the root.
    pub head: usize,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepSentence {
    pub tokens: Vec<DepToken>,
}

impl DepSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn parse_conll(path: impl AsRef<Path>) -> Result<Vec<DepSentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_conll(BufReader::new(file), path)
}

/// Read CoNLL-X: ten tab-separated columns, sentences separated by blank
/// lines. Rows whose index is not a plain integer (multiword tokens, empty
/// nodes) are skipped.
pub fn read_conll<R: BufRead>(reader: R, origin: impl AsRef<Path>) -> Result<Vec<DepSentence>> {
    let origin = origin.as_ref();
    let mut sentences = Vec::new();
    let mut current = DepSentence::default();
    // Source line of each token, for head errors found when the sentence ends.
    let mut heads: Vec<usize> = Vec::new();

    let mut finish = |current: &mut DepSentence, heads: &mut Vec<usize>| -> Result<()> {
        let n = current.tokens.len();
        for (i, (token, &line)) in current.tokens.iter().zip(heads.iter()).enumerate() {
            if token.head > n {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("head {} out of range for sentence of {} tokens", token.head, n),
                ));
            }
            if token.head == i + 1 {
                return Err(Error::parse(origin, line, "token is its own head"));
            }
        }
        if n > 0 {
            sentences.push(std::mem::take(current));
        }
        heads.clear();
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut current, &mut heads)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let Ok(index) = cols[0].parse::<usize>() else {
            continue;
        };
        if index != current.tokens.len() + 1 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("token index {} out of sequence", index),
            ));
        }
        let head = cols[6]
            .parse::<usize>()
            .map_err(|_| Error::parse(origin, lineno, format!("invalid head '{}'", cols[6])))?;

        current.tokens.push(DepToken {
            form: cols[1].to_string(),
            pos: cols[4].to_string(),
            head,
            label: cols[7].to_string(),
        });
        heads.push(lineno);
    }
    finish(&mut current, &mut heads)?;

    Ok(sentences)
}

/// Write sentences as CoNLL-X. Unknown columns are written as `_`.
pub fn write_conll<W: Write>(sentences: &[DepSentence], writer: &mut W) -> std::io::Result<()> {
    for sentence in sentences {
        for (i, t) in sentence.tokens.iter().enumerate() {
            writeln!(
                writer,
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_",
                i + 1,
                t.form,
                t.pos,
                t.pos,
                t.head,
                t.label
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttachmentScores {
    pub uas: f64,
    pub las: f64,
    pub scored_tokens: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
}

fn check_aligned(gold: &[DepSentence], pred: &[DepSentence]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "corpus length mismatch: gold has {} sentences, prediction has {}",
            gold.len(),
            pred.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let same = g.len() == p.len() && g.tokens.iter().zip(&p.tokens).all(|(a, b)| a.form == b.form);
        if !same {
            return Err(Error::invalid(format!(
                "sentence {} differs between gold and prediction",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Per-sentence `(scored, correct heads, correct heads and labels)`.
fn sentence_counts(gold: &DepSentence, pred: &DepSentence, exclude_punct: bool) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for (g, p) in gold.tokens.iter().zip(&pred.tokens) {
        if exclude_punct && g.label == PUNCT_LABEL {
            continue;
        }
        counts.0 += 1;
        if g.head == p.head {
            counts.1 += 1;
            if g.label == p.label {
                counts.2 += 1;
            }
        }
    }
    counts
}

/// Unlabelled and labelled attachment scores, as percentages.
pub fn attachment_scores(
    gold: &[DepSentence],
    pred: &[DepSentence],
    exclude_punct: bool,
) -> Result<AttachmentScores> {
    let all: Vec<usize> = (0..gold.len()).collect();
    attachment_scores_subset(gold, pred, &all, exclude_punct)
}

/// Attachment scores restricted to the sentences at `indices`.
pub fn attachment_scores_subset(
    gold: &[DepSentence],
    pred: &[DepSentence],
    indices: &[usize],
    exclude_punct: bool,
) -> Result<AttachmentScores> {
    check_aligned(gold, pred)?;
    let (mut scored, mut heads, mut labeled) = (0, 0, 0);
    for &i in indices {
        let sentence = gold
            .get(i)
            .ok_or_else(|| Error::invalid(format!("sentence index {} out of range", i)))?;
        let (s, h, l) = sentence_counts(sentence, &pred[i], exclude_punct);
        scored += s;
        heads += h;
        labeled += l;
    }
    if scored == 0 {
        return Err(Error::invalid("no scorable tokens"));
    }
    Ok(AttachmentScores {
        uas: 100.0 * heads as f64 / scored as f64,
        las: 100.0 * labeled as f64 / scored as f64,
        scored_tokens: scored,
        correct_heads: heads,
        correct_labeled: labeled,
    })
}

/// Type-level coverage of an evaluation corpus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OotvStats {
    pub types: usize,
    /// Types absent from the training vocabulary.
    pub unseen_types: usize,
    /// Unseen types without an initial embedding either, which stay unknown
    /// after mapping.
    pub unmappable_types: usize,
    pub rate_before: f64,
    pub rate_after: f64,
    /// Sentences containing at least one unseen token.
    pub ootv_sentences: Vec<usize>,
    /// Sentences containing at least one unseen token that has an initial
    /// embedding (and so is actually mapped).
    pub mappable_ootv_sentences: Vec<usize>,
}

/// Rates of evaluation word types unseen in training, before and after
/// mapping. A type still lacks a vector after mapping when it is neither in
/// the training vocabulary nor in the initial table.
pub fn ootv_stats(
    train_vocab: &HashSet<String>,
    corpus: &[DepSentence],
    initial: &EmbeddingTable,
) -> OotvStats {
    let mut types: HashSet<&str> = HashSet::new();
    let mut ootv_sentences = Vec::new();
    let mut mappable_ootv_sentences = Vec::new();

    for (i, sentence) in corpus.iter().enumerate() {
        let mut unseen = false;
        let mut mappable = false;
        for token in &sentence.tokens {
            types.insert(&token.form);
            if !train_vocab.contains(&token.form) {
                unseen = true;
                mappable |= initial.contains(&token.form);
            }
        }
        if unseen {
            ootv_sentences.push(i);
        }
        if mappable {
            mappable_ootv_sentences.push(i);
        }
    }

    let unseen_types = types.iter().filter(|w| !train_vocab.contains(**w)).count();
    let unmappable_types = types
        .iter()
        .filter(|w| !train_vocab.contains(**w) && !initial.contains(w))
        .count();
    let rate = |n: usize| {
        if types.is_empty() {
            0.0
        } else {
            100.0 * n as f64 / types.len() as f64
        }
    };

    OotvStats {
        types: types.len(),
        unseen_types,
        unmappable_types,
        rate_before: rate(unseen_types),
        rate_after: rate(unmappable_types),
        ootv_sentences,
        mappable_ootv_sentences,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Uas,
    Las,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Uas => "uas",
            Metric::Las => "las",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub p_value: f64,
    pub metric: Metric,
    pub score_a: f64,
    pub score_b: f64,
    pub samples: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Per-sentence `(scored tokens, correct by A, correct by B)` under `metric`.
pub fn paired_sentence_counts(
    gold: &[DepSentence],
    pred_a: &[DepSentence],
    pred_b: &[DepSentence],
    metric: Metric,
    exclude_punct: bool,
) -> Result<Vec<(usize, usize, usize)>> {
    check_aligned(gold, pred_a)?;
    check_aligned(gold, pred_b)?;
    Ok(gold
        .iter()
        .zip(pred_a.iter().zip(pred_b))
        .map(|(g, (a, b))| {
            let ca = sentence_counts(g, a, exclude_punct);
            let cb = sentence_counts(g, b, exclude_punct);
            let pick = |c: (usize, usize, usize)| match metric {
                Metric::Uas => c.1,
                Metric::Las => c.2,
            };
            (ca.0, pick(ca), pick(cb))
        })
        .collect())
}

/// One-sided paired bootstrap over sentences.
///
/// `pred_b` is the system hypothesised to be better. Each resample draws
/// sentence indices with replacement and recomputes the corpus-level
/// score of both systems; the p-value is the fraction of resamples in
/// which B does not beat A. Resample `r` draws from stream `r` of a ChaCha8
/// generator seeded with `seed`, so the result is independent of the
/// number of worker threads.
pub fn bootstrap_test(
    gold: &[DepSentence],
    pred_a: &[DepSentence],
    pred_b: &[DepSentence],
    samples: usize,
    seed: u64,
    metric: Metric,
    exclude_punct: bool,
) -> Result<BootstrapResult> {
    if samples == 0 {
        return Err(Error::invalid("bootstrap needs at least one sample"));
    }
    let counts = paired_sentence_counts(gold, pred_a, pred_b, metric, exclude_punct)?;
    let scored: usize = counts.iter().map(|c| c.0).sum();
    if scored == 0 {
        return Err(Error::invalid("no scorable tokens"));
    }
    let correct_a: usize = counts.iter().map(|c| c.1).sum();
    let correct_b: usize = counts.iter().map(|c| c.2).sum();
    if correct_b < correct_a {
        return Err(Error::invalid(format!(
            "system B scores below system A on {} ({} < {} correct); swap the arguments",
            metric, correct_b, correct_a
        )));
    }

    // Both systems share the scored-token denominator in every resample, so
    // comparing summed per-sentence differences is exact.
    let diffs: Vec<i64> = counts.iter().map(|c| c.2 as i64 - c.1 as i64).collect();
    let n = diffs.len() as u32;

    let not_better = (0..samples as u64)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let total: i64 = (0..n).map(|_| diffs[rng.random_range(0..n) as usize]).sum();
            total <= 0
        })
        .count();

    Ok(BootstrapResult {
        p_value: not_better as f64 / samples as f64,
        metric,
        score_a: 100.0 * correct_a as f64 / scored as f64,
        score_b: 100.0 * correct_b as f64 / scored as f64,
        samples,
        seed,
        rng: BOOTSTRAP_RNG,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tok(form: &str, head: usize, label: &str) -> DepToken {
        DepToken {
            form: form.into(),
            pos: "X".into(),
            head,
            label: label.into(),
        }
    }

    fn sent(tokens: Vec<DepToken>) -> DepSentence {
        DepSentence { tokens }
    }

    const TWO_SENTENCES: &str = "1\tHe\t_\t_\tPRP\t_\t2\tnsubj\t_\t_\n\
                                 2\truns\t_\t_\tVBZ\t_\t0\troot\t_\t_\n\
                                 \n\
                                 1\tGo\t_\t_\tVB\t_\t0\troot\t_\t_\n\
                                 2\t!\t_\t_\t.\t_\t1\tpunct\t_\t_\n";

    #[test]
    fn parses_sentences() {
        let sentences = read_conll(TWO_SENTENCES.as_bytes(), "t.conll").unwrap();
        assert_eq!(sentences.len(), 2);
        let heads: Vec<usize> = sentences[0].tokens.iter().map(|t| t.head).collect();
        assert_eq!(heads, vec![2, 0]);
        assert_eq!(sentences[0].tokens[0].form, "He");
        assert_eq!(sentences[0].tokens[0].pos, "PRP");
        assert_eq!(sentences[0].tokens[0].label, "nsubj");
    }

    #[test]
    fn skips_multiword_rows() {
        let text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
                    1\tdo\t_\t_\tVB\t_\t0\troot\t_\t_\n\
                    2\tn't\t_\t_\tRB\t_\t1\tneg\t_\t_\n";
        let sentences = read_conll(text.as_bytes(), "t.conll").unwrap();
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].len(), 2);
    }

    #[test]
    fn head_out_of_range_is_an_error() {
        let text = "1\tHe\t_\t_\tPRP\t_\t9\tnsubj\t_\t_\n2\truns\t_\t_\tVBZ\t_\t0\troot\t_\t_\n";
        let err = read_conll(text.as_bytes(), "t.conll").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{}", err);
    }

    #[test]
    fn self_head_is_an_error() {
        let text = "1\tHe\t_\t_\tPRP\t_\t1\tnsubj\t_\t_\n";
        assert!(read_conll(text.as_bytes(), "t.conll").is_err());
    }

    #[test]
    fn write_then_read() {
        let sentences = read_conll(TWO_SENTENCES.as_bytes(), "t.conll").unwrap();
        let mut buf = Vec::new();
        write_conll(&sentences, &mut buf).unwrap();
        assert_eq!(read_conll(&buf[..], "t.conll").unwrap(), sentences);
    }

    #[test]
    fn identical_prediction_scores_full_marks() {
        let gold = read_conll(TWO_SENTENCES.as_bytes(), "t.conll").unwrap();
        let scores = attachment_scores(&gold, &gold, false).unwrap();
        assert_eq!((scores.uas, scores.las), (100.0, 100.0));
    }

    #[test]
    fn hand_counted_scores() {
        let gold = vec![sent(vec![tok("a", 2, "x"), tok("b", 0, "root"), tok("c", 2, "y")])];
        // a: right head, right label; b: right head, wrong label; c: wrong head.
        let pred = vec![sent(vec![tok("a", 2, "x"), tok("b", 0, "dep"), tok("c", 1, "y")])];
        let scores = attachment_scores(&gold, &pred, false).unwrap();
        assert!((scores.uas - 200.0 / 3.0).abs() < 1e-12);
        assert!((scores.las - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn punctuation_exclusion() {
        let gold = read_conll(TWO_SENTENCES.as_bytes(), "t.conll").unwrap();
        let mut pred = gold.clone();
        pred[1].tokens[1].head = 0;
        let with = attachment_scores(&gold, &pred, false).unwrap();
        let without = attachment_scores(&gold, &pred, true).unwrap();
        assert_eq!(with.scored_tokens, 4);
        assert_eq!(with.uas, 75.0);
        assert_eq!(without.scored_tokens, 3);
        assert_eq!(without.uas, 100.0);

        let only_punct = vec![sent(vec![tok("!", 0, PUNCT_LABEL)])];
        let err = attachment_scores(&only_punct, &only_punct, true).unwrap_err();
        assert!(err.to_string().contains("no scorable tokens"));
    }

    #[test]
    fn misaligned_corpora_are_rejected() {
        let gold = read_conll(TWO_SENTENCES.as_bytes(), "t.conll").unwrap();
        assert!(attachment_scores(&gold, &gold[..1], false).is_err());
        let mut pred = gold.clone();
        pred[1].tokens[0].form = "Stop".into();
        let err = attachment_scores(&gold, &pred, false).unwrap_err();
        assert!(err.to_string().contains("sentence 2"), "{}", err);
    }

    #[test]
    fn ootv_rates() {
        let corpus = vec![
            sent(vec![tok("a", 2, "x"), tok("b", 0, "root")]),
            sent(vec![tok("c", 0, "root"), tok("d", 1, "x")]),
        ];
        let initial = EmbeddingTable::from_pairs(1, vec![("d", vec![1.0])]).unwrap();

        let all: HashSet<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let stats = ootv_stats(&all, &corpus, &initial);
        assert_eq!((stats.rate_before, stats.rate_after), (0.0, 0.0));
        assert!(stats.ootv_sentences.is_empty());

        let seen: HashSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let stats = ootv_stats(&seen, &corpus, &initial);
        assert_eq!(stats.rate_before, 25.0);
        assert_eq!(stats.rate_after, 0.0);
        assert_eq!(stats.ootv_sentences, vec![1]);
        assert_eq!(stats.mappable_ootv_sentences, vec![1]);

        let empty = EmbeddingTable::new(1).unwrap();
        let stats = ootv_stats(&seen, &corpus, &empty);
        assert_eq!(stats.rate_after, stats.rate_before);
        assert!(stats.mappable_ootv_sentences.is_empty());

        let mut doubled = corpus.clone();
        doubled.push(corpus[1].clone());
        let again = ootv_stats(&seen, &doubled, &initial);
        assert_eq!(again.rate_before, 25.0);
    }

    #[test]
    fn bootstrap_extremes() {
        let gold = vec![
            sent(vec![tok("a", 2, "x"), tok("b", 0, "root")]),
            sent(vec![tok("c", 0, "root"), tok("d", 1, "x")]),
        ];
        let same = bootstrap_test(&gold, &gold, &gold, 1000, 1, Metric::Uas, false).unwrap();
        assert_eq!(same.p_value, 1.0);

        let wrong: Vec<DepSentence> = vec![
            sent(vec![tok("a", 0, "x"), tok("b", 1, "root")]),
            sent(vec![tok("c", 2, "root"), tok("d", 0, "x")]),
        ];
        let better = bootstrap_test(&gold, &wrong, &gold, 1000, 1, Metric::Uas, false).unwrap();
        assert_eq!(better.p_value, 0.0);
        assert_eq!((better.score_a, better.score_b), (0.0, 100.0));

        let err = bootstrap_test(&gold, &gold, &wrong, 1000, 1, Metric::Uas, false).unwrap_err();
        assert!(err.to_string().contains("swap"));
    }

    #[test]
    fn bootstrap_is_seeded_and_thread_independent() {
        let gold: Vec<DepSentence> = (0..6)
            .map(|_| sent(vec![tok("a", 2, "x"), tok("b", 0, "root")]))
            .collect();
        let mut a = gold.clone();
        let mut b = gold.clone();
        a[0].tokens[0].head = 0;
        a[1].tokens[0].head = 0;
        b[2].tokens[0].head = 0;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_test(&gold, &a, &b, 5000, 42, Metric::Uas, false).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert!(one.p_value > 0.0 && one.p_value < 1.0);
    }

    /// Per token: gold head, predicted head, gold label, predicted label.
    type Row = (usize, usize, usize, usize);

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<Row>>> {
        let sentence = (1usize..6).prop_flat_map(|len| {
            proptest::collection::vec((0..=len, 0..=len, 0usize..3, 0usize..3), len)
        });
        proptest::collection::vec(sentence, 1..8)
    }

    fn build(rows: &[Vec<Row>]) -> (Vec<DepSentence>, Vec<DepSentence>) {
        const LABELS: [&str; 3] = ["x", "y", "punct"];
        let side = |pick: fn(&Row) -> (usize, usize)| {
            rows.iter()
                .map(|s| {
                    sent(s
                        .iter()
                        .enumerate()
                        .map(|(i, r)| {
                            let (head, label) = pick(r);
                            tok(&format!("w{}", i), head, LABELS[label])
                        })
                        .collect())
                })
                .collect::<Vec<_>>()
        };
        (side(|r| (r.0, r.2)), side(|r| (r.1, r.3)))
    }

    proptest! {
        #[test]
        fn las_never_exceeds_uas(rows in corpus_strategy(), punct in any::<bool>()) {
            let (gold, pred) = build(&rows);
            if let Ok(s) = attachment_scores(&gold, &pred, punct) {
                prop_assert!(s.las <= s.uas);
                prop_assert!(s.correct_labeled <= s.correct_heads);
            }
        }

        #[test]
        fn scores_ignore_sentence_order(rows in corpus_strategy(), shift in 0usize..8) {
            let (gold, pred) = build(&rows);
            let k = shift % gold.len();
            let rotate = |v: &[DepSentence]| {
                let mut v = v.to_vec();
                v.rotate_left(k);
                v
            };
            let a = attachment_scores(&gold, &pred, false).unwrap();
            let b = attachment_scores(&rotate(&gold), &rotate(&pred), false).unwrap();
            prop_assert_eq!(a.correct_heads, b.correct_heads);
            prop_assert_eq!(a.correct_labeled, b.correct_labeled);
            prop_assert_eq!(a.scored_tokens, b.scored_tokens);
        }

        #[test]
        fn wider_margin_never_raises_p(rows in corpus_strategy(), pick in any::<prop::sample::Index>()) {
            let (gold, pred) = build(&rows);
            // B is A with one more head corrected, and again with another.
            let wrong: Vec<(usize, usize)> = gold
                .iter()
                .zip(&pred)
                .enumerate()
                .flat_map(|(i, (g, p))| {
                    g.tokens.iter().zip(&p.tokens).enumerate()
                        .filter(|(_, (a, b))| a.head != b.head)
                        .map(move |(j, _)| (i, j))
                })
                .collect();
            prop_assume!(!wrong.is_empty());
            let (i, j) = wrong[pick.index(wrong.len())];
            let mut better = pred.clone();
            better[i].tokens[j].head = gold[i].tokens[j].head;
            let p_same = bootstrap_test(&gold, &pred, &pred, 300, 5, Metric::Uas, false).unwrap().p_value;
            let p_better = bootstrap_test(&gold, &pred, &better, 300, 5, Metric::Uas, false).unwrap().p_value;
            prop_assert!(p_better <= p_same);
            let mut best = better.clone();
            for &(i, j) in &wrong {
                best[i].tokens[j].head = gold[i].tokens[j].head;
            }
            let p_best = bootstrap_test(&gold, &pred, &best, 300, 5, Metric::Uas, false).unwrap().p_value;
            prop_assert!(p_best <= p_better);
        }

        #[test]
        fn ootv_rates_are_type_based(rows in corpus_strategy(), dup in any::<prop::sample::Index>()) {
            let (gold, _) = build(&rows);
            let train: HashSet<String> = ["w0", "w2"].iter().map(|s| s.to_string()).collect();
            let initial = EmbeddingTable::from_pairs(1, [("w1", vec![1.0])]).unwrap();
            let before = ootv_stats(&train, &gold, &initial);
            let mut doubled = gold.clone();
            doubled.push(gold[dup.index(gold.len())].clone());
            let after = ootv_stats(&train, &doubled, &initial);
            prop_assert_eq!(before.rate_before, after.rate_before);
            prop_assert_eq!(before.rate_after, after.rate_after);
            prop_assert!(before.rate_after <= before.rate_before);
        }
    }
}
