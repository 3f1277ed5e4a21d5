//! Corpus statistics over pre-tokenized generations, perplexity from
//! externally computed log-probabilities, and top-p truncation.

mod bleu;

pub use bleu::{bleu, self_bleu, DEFAULT_BLEU_ORDER, DEFAULT_SELF_BLEU_SAMPLES};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::divergence::DiscreteDistribution;
use crate::error::{Error, Result};

pub type Token = u32;

/// Non-empty token sequences, optionally bounded by a vocabulary size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenCorpus {
    sequences: Vec<Vec<Token>>,
    vocab_size: Option<usize>,
}

impl TokenCorpus {
    pub fn new(sequences: Vec<Vec<Token>>) -> Result<Self> {
        Self::with_vocab(sequences, None)
    }

    pub fn with_vocab(sequences: Vec<Vec<Token>>, vocab_size: Option<usize>) -> Result<Self> {
        if let Some(i) = sequences.iter().position(Vec::is_empty) {
            return Err(Error::param(format!("sequence {i} is empty")));
        }
        if let Some(v) = vocab_size {
            for (i, seq) in sequences.iter().enumerate() {
                if let Some(t) = seq.iter().find(|t| **t as usize >= v) {
                    return Err(Error::param(format!(
                        "sequence {i} has token {t} outside vocabulary of size {v}"
                    )));
                }
            }
        }
        Ok(Self {
            sequences,
            vocab_size,
        })
    }

    pub fn sequences(&self) -> &[Vec<Token>] {
        &self.sequences
    }

    pub fn vocab_size(&self) -> Option<usize> {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Absolute log-log slope of unigram count against frequency rank.
pub fn zipf_coefficient(corpus: &TokenCorpus) -> Result<f64> {
    let mut counts: HashMap<Token, u64> = HashMap::new();
    for &t in corpus.sequences.iter().flatten() {
        *counts.entry(t).or_default() += 1;
    }
    let mut ranked: Vec<(Token, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let freqs: Vec<f64> = ranked.into_iter().map(|(_, c)| c as f64).collect();
    zipf_from_frequencies(&freqs)
}

/// Fit on frequencies already sorted in descending order (rank 1 first).
pub fn zipf_from_frequencies(freqs: &[f64]) -> Result<f64> {
    if freqs.len() < 2 {
        return Err(Error::param(
            "Zipf fit needs at least 2 distinct tokens",
        ));
    }
    if freqs.iter().any(|f| f.is_nan() || *f <= 0.0) {
        return Err(Error::param("frequencies must be positive"));
    }
    let xs: Vec<f64> = (1..=freqs.len()).map(|r| (r as f64).ln()).collect();
    let ys: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok((sxy / sxx).abs())
}

/// True when the sequence ends in two back-to-back copies of some phrase.
pub fn ends_in_repetition(seq: &[Token]) -> bool {
    let len = seq.len();
    (1..=len / 2).any(|l| seq[len - l..] == seq[len - 2 * l..len - l])
}

/// Fraction of sequences that end in a repeated phrase.
pub fn repetition_frequency(corpus: &TokenCorpus) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    let hits = corpus
        .sequences
        .iter()
        .filter(|s| ends_in_repetition(s))
        .count();
    hits as f64 / corpus.len() as f64
}

/// Unique n-grams over all n-gram positions, pooled across sequences.
pub fn distinct_n(corpus: &TokenCorpus, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let mut unique: HashSet<&[Token]> = HashSet::new();
    let mut slots = 0usize;
    for seq in &corpus.sequences {
        for gram in seq.windows(n) {
            unique.insert(gram);
            slots += 1;
        }
    }
    if slots == 0 {
        return Err(Error::param(format!("no sequence has length >= {n}")));
    }
    Ok(unique.len() as f64 / slots as f64)
}

/// Summed log-likelihood of one sequence under an external model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProbRecord {
    /// Natural-log probability of the whole sequence.
    pub total_logprob: f64,
    pub n_tokens: u64,
}

impl LogProbRecord {
    pub fn new(total_logprob: f64, n_tokens: u64) -> Result<Self> {
        if n_tokens == 0 {
            return Err(Error::param("log-prob record has zero tokens"));
        }
        if !total_logprob.is_finite() {
            return Err(Error::param(format!(
                "log-prob total {total_logprob} is not finite"
            )));
        }
        Ok(Self {
            total_logprob,
            n_tokens,
        })
    }
}

/// Token-weighted perplexity, `exp(-sum log p / sum tokens)`.
pub fn perplexity(records: &[LogProbRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::param("no log-prob records"));
    }
    let tokens: u64 = records.iter().map(|r| r.n_tokens).sum();
    if tokens == 0 {
        return Err(Error::param("log-prob records contain zero tokens"));
    }
    let total: f64 = records.iter().map(|r| r.total_logprob).sum();
    Ok((-total / tokens as f64).exp())
}

pub fn gen_ppl_gap(model: &[LogProbRecord], human: &[LogProbRecord]) -> Result<f64> {
    Ok((perplexity(model)? - perplexity(human)?).abs())
}

/// Keeps the smallest most-probable prefix with mass at least `top_p` and
/// renormalizes it.
pub fn nucleus_truncate(probs: &DiscreteDistribution, top_p: f64) -> Result<DiscreteDistribution> {
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(Error::param(format!("top-p {top_p} outside (0, 1]")));
    }
    let p = probs.probs();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));

    let mut keep = vec![false; p.len()];
    let mut mass = 0.0;
    for &i in &order {
        if p[i] <= 0.0 {
            break;
        }
        keep[i] = true;
        mass += p[i];
        if mass >= top_p - 1e-12 {
            break;
        }
    }
    if keep.iter().zip(p).all(|(k, v)| *k || *v == 0.0) {
        return Ok(probs.clone());
    }
    DiscreteDistribution::renormalize(
        p.iter()
            .zip(&keep)
            .map(|(v, k)| if *k { *v } else { 0.0 })
            .collect(),
    )
}
