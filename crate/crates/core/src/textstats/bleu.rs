//! Unsmoothed sentence BLEU and Self-BLEU over token ids.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Token, TokenCorpus};
use crate::error::{Error, Result};

pub const DEFAULT_BLEU_ORDER: usize = 4;
pub const DEFAULT_SELF_BLEU_SAMPLES: usize = 1000;

fn ngram_counts(seq: &[Token], n: usize) -> HashMap<&[Token], u32> {
    let mut counts = HashMap::new();
    for gram in seq.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Length of the reference closest to `hyp_len`, preferring the shorter one
/// on ties.
fn closest_ref_len(hyp_len: usize, ref_lens: impl Iterator<Item = usize>) -> usize {
    ref_lens
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn combine(clipped: &[u64], totals: &[u64], hyp_len: usize, ref_len: usize) -> f64 {
    if clipped.iter().zip(totals).any(|(c, t)| *c == 0 || *t == 0) {
        return 0.0;
    }
    let order = clipped.len() as f64;
    let log_mean = clipped
        .iter()
        .zip(totals)
        .map(|(c, t)| (*c as f64 / *t as f64).ln())
        .sum::<f64>()
        / order;
    let brevity = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    brevity * log_mean.exp()
}

/// BLEU of `hypothesis` against `references` with uniform weights over
/// orders `1..=max_order`, reference-clipped counts and no smoothing.
pub fn bleu(hypothesis: &[Token], references: &[&[Token]], max_order: usize) -> Result<f64> {
    if max_order == 0 {
        return Err(Error::param("BLEU order must be at least 1"));
    }
    if references.is_empty() || hypothesis.is_empty() {
        return Ok(0.0);
    }
    let mut clipped = vec![0u64; max_order];
    let mut totals = vec![0u64; max_order];
    for n in 1..=max_order {
        let mut best: HashMap<&[Token], u32> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let slot = best.entry(g).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        for (g, c) in ngram_counts(hypothesis, n) {
            clipped[n - 1] += c.min(best.get(g).copied().unwrap_or(0)) as u64;
            totals[n - 1] += c as u64;
        }
    }
    let ref_len = closest_ref_len(hypothesis.len(), references.iter().map(|r| r.len()));
    Ok(combine(&clipped, &totals, hypothesis.len(), ref_len))
}

/// Largest and second-largest per-sequence count of one n-gram, with the
/// owner of the largest, so "max over all other sequences" is O(1).
#[derive(Clone, Copy)]
struct TopTwo {
    best: u32,
    owner: usize,
    second: u32,
}

impl TopTwo {
    fn push(&mut self, count: u32, owner: usize) {
        if count > self.best {
            self.second = self.best;
            self.best = count;
            self.owner = owner;
        } else if count > self.second {
            self.second = count;
        }
    }

    fn excluding(&self, who: usize) -> u32 {
        if self.owner == who {
            self.second
        } else {
            self.best
        }
    }
}

/// Mean BLEU of `sample_size` sampled sequences, each scored against every
/// other sequence in the corpus. Sampling is without replacement and seeded;
/// a sample size above the corpus size is clamped.
pub fn self_bleu(
    corpus: &TokenCorpus,
    max_order: usize,
    sample_size: usize,
    seed: u64,
) -> Result<f64> {
    let seqs = corpus.sequences();
    let n = seqs.len();
    if n < 2 {
        return Err(Error::param("Self-BLEU needs at least 2 sequences"));
    }
    if max_order == 0 {
        return Err(Error::param("BLEU order must be at least 1"));
    }
    if sample_size == 0 {
        return Err(Error::param("Self-BLEU sample size must be at least 1"));
    }
    let take = if sample_size > n {
        log::warn!("Self-BLEU sample size {sample_size} clamped to corpus size {n}");
        n
    } else {
        sample_size
    };

    let per_seq: Vec<Vec<HashMap<&[Token], u32>>> = seqs
        .par_iter()
        .map(|s| (1..=max_order).map(|o| ngram_counts(s, o)).collect())
        .collect();

    let mut tables: Vec<HashMap<&[Token], TopTwo>> = vec![HashMap::new(); max_order];
    for (i, orders) in per_seq.iter().enumerate() {
        for (table, counts) in tables.iter_mut().zip(orders) {
            for (&g, &c) in counts {
                table
                    .entry(g)
                    .or_insert(TopTwo {
                        best: 0,
                        owner: usize::MAX,
                        second: 0,
                    })
                    .push(c, i);
            }
        }
    }

    let mut lengths: Vec<usize> = seqs.iter().map(Vec::len).collect();
    lengths.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, n, take).into_vec();
    picks.sort_unstable();

    let scores: Vec<f64> = picks
        .par_iter()
        .map(|&h| {
            let mut clipped = vec![0u64; max_order];
            let mut totals = vec![0u64; max_order];
            for (o, counts) in per_seq[h].iter().enumerate() {
                for (g, &c) in counts {
                    clipped[o] += c.min(tables[o][g].excluding(h)) as u64;
                    totals[o] += c as u64;
                }
            }
            let hyp_len = seqs[h].len();
            let ref_len = closest_ref_len(hyp_len, other_lengths(&lengths, hyp_len));
            combine(&clipped, &totals, hyp_len, ref_len)
        })
        .collect();

    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Sorted corpus lengths with one copy of `own` removed.
fn other_lengths(sorted: &[usize], own: usize) -> impl Iterator<Item = usize> + '_ {
    let skip = sorted.partition_point(|&l| l < own);
    sorted
        .iter()
        .enumerate()
        .filter(move |(i, _)| *i != skip)
        .map(|(_, l)| *l)
}
