//! Nearest-neighbour "artificial refinement" baseline.
//!
//! An unseen word `t` is moved by the refinement shifts of its `K` nearest
//! neighbours `n_k` in the original space:
//!
//! ```text
//! φ_r(t) = φ_o(t) + Σ_k α_k (φ_r(n_k) − φ_o(n_k)),   α_k = cos(φ_o(t), φ_o(n_k))
//! ```
//!
//! The weights are the raw cosines. They are not normalised to sum to one
//! unless [`RefinementConfig::normalize_weights`] is set, so with `K = 3`
//! the total weight can approach 3. Negative cosines are kept signed.

use crate::embedding::{EmbeddingTable, VocabCounts};
use crate::pipeline::{merge_tables, MappingOptions, MappingReport, Threshold};
use crate::{Error, Result};

/// `u·v / (‖u‖ ‖v‖)`, or 0 when either vector is zero.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct RefinementConfig {
    /// Number of neighbours (3 in the usual setting).
    pub k: usize,
    /// Words with both an original and a refined vector that may serve as
    /// neighbours.
    pub pool: Vec<String>,
    /// Divide the summed shift by the total weight.
    pub normalize_weights: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub vector: Vec<f64>,
    /// Neighbours used, with their weights, most similar first.
    pub neighbors: Vec<(String, f64)>,
    /// The pool held fewer than `k` words, so all of them were used.
    pub short_pool: bool,
}

/// Precomputed neighbour pool for refining many words.
pub struct KnnRefiner<'a> {
    words: Vec<&'a str>,
    originals: Vec<&'a [f64]>,
    shifts: Vec<Vec<f64>>,
    k: usize,
    normalize: bool,
    dim: usize,
}

impl<'a> KnnRefiner<'a> {
    pub fn new(
        original: &'a EmbeddingTable,
        refined: &'a EmbeddingTable,
        pool: &'a [String],
        k: usize,
        normalize: bool,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if pool.is_empty() {
            return Err(Error::invalid("neighbour pool is empty"));
        }
        if original.dim() != refined.dim() {
            return Err(Error::dim(original.dim(), refined.dim(), "refined vs original space"));
        }

        let mut words = Vec::with_capacity(pool.len());
        let mut originals = Vec::with_capacity(pool.len());
        let mut shifts = Vec::with_capacity(pool.len());
        for word in pool {
            let (Some(o), Some(r)) = (original.get(word), refined.get(word)) else {
                return Err(Error::invalid(format!(
                    "pool word '{}' lacks an original or refined vector",
                    word
                )));
            };
            words.push(word.as_str());
            originals.push(o);
            shifts.push(r.iter().zip(o).map(|(r, o)| r - o).collect());
        }

        Ok(KnnRefiner {
            words,
            originals,
            shifts,
            k,
            normalize,
            dim: original.dim(),
        })
    }

    pub fn short_pool(&self) -> bool {
        self.words.len() < self.k
    }

    /// Refine an original-space vector.
    pub fn refine(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<(String, f64)>)> {
        if x.len() != self.dim {
            return Err(Error::dim(self.dim, x.len(), "refinement target"));
        }

        // Top-k by descending cosine, ties by word.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (idx, o) in self.originals.iter().enumerate() {
            let s = cosine_similarity(x, o);
            let ranks_before = |&(bs, bi): &(f64, usize)| {
                bs > s || (bs == s && self.words[bi] < self.words[idx])
            };
            let pos = best.iter().take_while(|e| ranks_before(e)).count();
            if pos < self.k {
                best.insert(pos, (s, idx));
                best.truncate(self.k);
            }
        }

        let mut out = x.to_vec();
        let total: f64 = best.iter().map(|(s, _)| s).sum();
        let scale = if self.normalize && total != 0.0 { 1.0 / total } else { 1.0 };
        for &(s, idx) in &best {
            for (o, d) in out.iter_mut().zip(&self.shifts[idx]) {
                *o += scale * s * d;
            }
        }

        let neighbors = best
            .into_iter()
            .map(|(s, idx)| (self.words[idx].to_string(), s))
            .collect();
        Ok((out, neighbors))
    }
}

/// Refine a single word of the original table.
pub fn knn_refine(
    target: &str,
    original: &EmbeddingTable,
    refined: &EmbeddingTable,
    config: &RefinementConfig,
) -> Result<Refinement> {
    let x = original
        .get(target)
        .ok_or_else(|| Error::invalid(format!("'{}' has no original embedding", target)))?;
    let refiner = KnnRefiner::new(original, refined, &config.pool, config.k, config.normalize_weights)?;
    let short_pool = refiner.short_pool();
    if short_pool {
        eprintln!(
            "warning: neighbour pool has {} word(s), fewer than k = {}",
            config.pool.len(),
            config.k
        );
    }
    let (vector, neighbors) = refiner.refine(x)?;
    Ok(Refinement {
        vector,
        neighbors,
        short_pool,
    })
}

/// Words usable as neighbours: present in both tables and seen at least
/// `tau_t` times, in refined-table order. This matches mapper pair
/// selection.
pub fn neighbor_pool(
    original: &EmbeddingTable,
    refined: &EmbeddingTable,
    counts: &VocabCounts,
    tau_t: Threshold,
) -> Vec<String> {
    refined
        .words()
        .iter()
        .filter(|w| original.contains(w) && tau_t.admits(counts.get(w)))
        .cloned()
        .collect()
}

/// Build a merged table in which every word that the mapper would map is
/// instead refined by its nearest neighbours.
pub fn refine_table(
    original: &EmbeddingTable,
    refined: &EmbeddingTable,
    counts: &VocabCounts,
    config: &RefinementConfig,
    options: &MappingOptions<'_>,
) -> Result<(EmbeddingTable, MappingReport)> {
    let refiner = KnnRefiner::new(original, refined, &config.pool, config.k, config.normalize_weights)?;
    if refiner.short_pool() {
        eprintln!(
            "warning: neighbour pool has {} word(s), fewer than k = {}",
            config.pool.len(),
            config.k
        );
    }
    merge_tables(original, refined, counts, options, |x| {
        refiner.refine(x).map(|(v, _)| v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: Vec<(&str, Vec<f64>)>) -> EmbeddingTable {
        let dim = rows[0].1.len();
        EmbeddingTable::from_pairs(dim, rows).unwrap()
    }

    fn pool(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]), -1.0);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn zero_shift_is_identity() {
        let original = table(vec![("t", vec![1.0, 2.0]), ("a", vec![0.5, 0.1]), ("b", vec![-1.0, 1.0])]);
        let refined = table(vec![("a", vec![0.5, 0.1]), ("b", vec![-1.0, 1.0])]);
        let config = RefinementConfig { k: 2, pool: pool(&["a", "b"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        assert_eq!(r.vector, vec![1.0, 2.0]);
    }

    #[test]
    fn single_neighbour_hand_value() {
        // t = (1, 0), n = (1, 1): cos = 1/√2; shift δ = (0.2, −0.4).
        let original = table(vec![("t", vec![1.0, 0.0]), ("n", vec![1.0, 1.0])]);
        let refined = table(vec![("n", vec![1.2, 0.6])]);
        let config = RefinementConfig { k: 1, pool: pool(&["n"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((r.vector[0] - (1.0 + s * 0.2)).abs() < 1e-12);
        assert!((r.vector[1] - (0.0 - s * 0.4)).abs() < 1e-12);
        assert_eq!(r.neighbors.len(), 1);
        assert!((r.neighbors[0].1 - s).abs() < 1e-12);
    }

    #[test]
    fn target_in_pool_contributes_its_full_shift() {
        // Three words; t itself is in the pool with cos(t, t) = 1.
        // t = (1, 0), u = (0, 1) (cos 0), v = (1, 1) (cos 1/√2).
        let original = table(vec![
            ("t", vec![1.0, 0.0]),
            ("u", vec![0.0, 1.0]),
            ("v", vec![1.0, 1.0]),
        ]);
        let refined = table(vec![
            ("t", vec![1.5, 0.5]),
            ("u", vec![0.0, 3.0]),
            ("v", vec![0.0, 1.0]),
        ]);
        let config = RefinementConfig { k: 2, pool: pool(&["t", "u", "v"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        // neighbours: t (1.0), v (1/√2); shifts (0.5, 0.5) and (−1, 0).
        let s = 1.0 / 2f64.sqrt();
        let expected = [1.0 + 0.5 - s, 0.0 + 0.5];
        assert_eq!(r.neighbors[0].0, "t");
        assert_eq!(r.neighbors[1].0, "v");
        assert!((r.vector[0] - expected[0]).abs() < 1e-12);
        assert!((r.vector[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn weights_are_not_normalised() {
        // Every neighbour parallel to the target with the same shift δ.
        let original = table(vec![
            ("t", vec![1.0, 1.0]),
            ("a", vec![2.0, 2.0]),
            ("b", vec![3.0, 3.0]),
            ("c", vec![0.5, 0.5]),
        ]);
        let delta = [0.1, -0.2];
        let shifted = |v: f64| vec![v + delta[0], v + delta[1]];
        let refined = table(vec![("a", shifted(2.0)), ("b", shifted(3.0)), ("c", shifted(0.5))]);
        let mut config = RefinementConfig { k: 3, pool: pool(&["a", "b", "c"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        assert!((r.vector[0] - (1.0 + 3.0 * delta[0])).abs() < 1e-12);
        assert!((r.vector[1] - (1.0 + 3.0 * delta[1])).abs() < 1e-12);

        config.normalize_weights = true;
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        assert!((r.vector[0] - (1.0 + delta[0])).abs() < 1e-12);
    }

    #[test]
    fn ties_break_lexicographically() {
        let original = table(vec![
            ("t", vec![1.0, 0.0]),
            ("b", vec![2.0, 0.0]),
            ("a", vec![3.0, 0.0]),
            ("c", vec![0.0, 1.0]),
        ]);
        let refined = original.clone();
        let config = RefinementConfig { k: 2, pool: pool(&["c", "b", "a"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        let names: Vec<&str> = r.neighbors.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn short_pool_and_errors() {
        let original = table(vec![("t", vec![1.0, 0.0]), ("a", vec![1.0, 1.0])]);
        let refined = table(vec![("a", vec![1.0, 1.0])]);
        let config = RefinementConfig { k: 3, pool: pool(&["a"]), normalize_weights: false };
        let r = knn_refine("t", &original, &refined, &config).unwrap();
        assert!(r.short_pool);
        assert_eq!(r.neighbors.len(), 1);
        assert_eq!(r.vector.len(), refined.dim());

        assert!(knn_refine("missing", &original, &refined, &config).is_err());
        let bad_pool = RefinementConfig { k: 1, pool: pool(&["t"]), normalize_weights: false };
        assert!(knn_refine("t", &original, &refined, &bad_pool).is_err());
    }

    proptest! {
        #[test]
        fn equal_shifts_add_up_k_times(
            t in proptest::collection::vec(0.1f64..2.0, 3),
            scales in proptest::collection::vec(0.5f64..4.0, 1..6),
            delta in proptest::collection::vec(-1.0f64..1.0, 3),
            k in 1usize..6,
        ) {
            // Pool words are positive multiples of the target, so every
            // cosine is 1.
            let mut original = vec![("t".to_string(), t.clone())];
            let mut refined = Vec::new();
            for (i, s) in scales.iter().enumerate() {
                let v: Vec<f64> = t.iter().map(|x| x * s).collect();
                let r: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + d).collect();
                original.push((format!("n{}", i), v));
                refined.push((format!("n{}", i), r));
            }
            let original = EmbeddingTable::from_pairs(3, original).unwrap();
            let refined = EmbeddingTable::from_pairs(3, refined).unwrap();
            let pool: Vec<String> = (0..scales.len()).map(|i| format!("n{}", i)).collect();
            let used = k.min(pool.len()) as f64;
            let config = RefinementConfig { k, pool, normalize_weights: false };
            let r = knn_refine("t", &original, &refined, &config).unwrap();
            prop_assert_eq!(r.vector.len(), 3);
            for ((out, x), d) in r.vector.iter().zip(&t).zip(&delta) {
                prop_assert!((out - (x + used * d)).abs() < 1e-9);
            }
        }
    }
}
