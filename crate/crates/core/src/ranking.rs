//! Bradley-Terry scores from pairwise preferences, and Spearman correlation.
//!
//! Scores use the `/100` parametrization: player `i` beats `j` with
//! probability `1 / (1 + exp(-(w_i - w_j) / 100))`. Fitted scores have mean
//! zero.

use std::collections::HashMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCORE_SCALE: f64 = 100.0;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// `wins[i][j]` counts how often player `i` beat player `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceDataset {
    pub player_names: Vec<String>,
    pub wins: Vec<Vec<u64>>,
}

impl PreferenceDataset {
    pub fn new(player_names: Vec<String>, wins: Vec<Vec<u64>>) -> Result<Self> {
        let n = player_names.len();
        if n < 2 {
            return Err(Error::param("need at least 2 players"));
        }
        if wins.len() != n || wins.iter().any(|r| r.len() != n) {
            return Err(Error::param(format!("wins matrix must be {n}x{n}")));
        }
        if (0..n).any(|i| wins[i][i] != 0) {
            return Err(Error::param("wins matrix diagonal must be zero"));
        }
        Ok(Self { player_names, wins })
    }

    /// Unnamed players `0..n`.
    pub fn from_matrix(wins: Vec<Vec<u64>>) -> Result<Self> {
        let names = (0..wins.len()).map(|i| i.to_string()).collect();
        Self::new(names, wins)
    }

    pub fn n_players(&self) -> usize {
        self.player_names.len()
    }

    /// Total comparisons involving each player.
    pub fn games_per_player(&self) -> Vec<u64> {
        let n = self.n_players();
        (0..n)
            .map(|i| (0..n).map(|j| self.wins[i][j] + self.wins[j][i]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtScores {
    pub w: Vec<f64>,
}

impl BtScores {
    pub fn win_prob(&self, i: usize, j: usize) -> Result<f64> {
        bt_win_prob(self, i, j)
    }

    /// `table[i][j]` is the probability that `i` beats `j`.
    pub fn win_prob_table(&self) -> Vec<Vec<f64>> {
        let n = self.w.len();
        (0..n)
            .map(|i| (0..n).map(|j| sigmoid((self.w[i] - self.w[j]) / SCORE_SCALE)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtFit {
    pub scores: BtScores,
    pub iterations: usize,
    pub converged: bool,
    /// Negative log-likelihood before the first update and after each one.
    pub nll_trace: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn bt_win_prob(scores: &BtScores, i: usize, j: usize) -> Result<f64> {
    let n = scores.w.len();
    if i >= n || j >= n {
        return Err(Error::param(format!(
            "player index out of range for {n} players"
        )));
    }
    Ok(sigmoid((scores.w[i] - scores.w[j]) / SCORE_SCALE))
}

/// `sum_ij N_ij ln(1 + exp(-(w_i - w_j) / 100))`.
pub fn bt_negative_log_likelihood(data: &PreferenceDataset, scores: &BtScores) -> f64 {
    let n = data.n_players();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let nij = data.wins[i][j];
            if nij > 0 {
                total += nij as f64 * softplus(-(scores.w[i] - scores.w[j]) / SCORE_SCALE);
            }
        }
    }
    total
}

/// Players reachable from player 0 following `edge(from, to)`.
fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && edge(u, v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// The maximum-likelihood estimate is finite only when every player can be
/// linked to every other by a chain of wins in both directions.
fn check_fittable(data: &PreferenceDataset) -> Result<()> {
    let n = data.n_players();
    for i in 0..n {
        let won: u64 = data.wins[i].iter().sum();
        let lost: u64 = (0..n).map(|j| data.wins[j][i]).sum();
        if won == 0 {
            return Err(Error::DegenerateComparisons(format!(
                "player {:?} has no wins; its score diverges to -inf",
                data.player_names[i]
            )));
        }
        if lost == 0 {
            return Err(Error::DegenerateComparisons(format!(
                "player {:?} has no losses; its score diverges to +inf",
                data.player_names[i]
            )));
        }
    }
    let forward = reachable(n, |u, v| data.wins[u][v] > 0);
    let backward = reachable(n, |u, v| data.wins[v][u] > 0);
    if let Some(i) = (0..n).find(|&i| !forward[i] || !backward[i]) {
        let kind = if data.games_per_player()[i] == 0
            || !reachable(n, |u, v| data.wins[u][v] + data.wins[v][u] > 0)[i]
        {
            "is disconnected from"
        } else {
            "is not linked by wins in both directions to"
        };
        return Err(Error::DegenerateComparisons(format!(
            "player {:?} {kind} player {:?}",
            data.player_names[i], data.player_names[0]
        )));
    }
    Ok(())
}

/// Zermelo's fixed-point iteration for the Bradley-Terry MLE, mean-centred
/// after every step, until the largest score change drops below `tol` (in
/// unscaled units) or `max_iters` steps have run.
pub fn bt_fit(data: &PreferenceDataset, max_iters: usize, tol: f64) -> Result<BtFit> {
    check_fittable(data)?;
    let n = data.n_players();
    let won: Vec<f64> = (0..n)
        .map(|i| data.wins[i].iter().sum::<u64>() as f64)
        .collect();

    let mut w = vec![0.0f64; n];
    let mut trace = vec![bt_negative_log_likelihood(
        data,
        &BtScores { w: vec![0.0; n] },
    )];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        let strength: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let mut u: Vec<f64> = (0..n)
            .map(|i| {
                let denom: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (data.wins[i][j] + data.wins[j][i]) as f64 / (strength[i] + strength[j]))
                    .sum();
                won[i].ln() - denom.ln()
            })
            .collect();
        let mean = u.iter().sum::<f64>() / n as f64;
        u.iter_mut().for_each(|v| *v -= mean);

        let delta = u
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = u;
        iterations += 1;
        trace.push(bt_negative_log_likelihood(
            data,
            &BtScores {
                w: w.iter().map(|v| v * SCORE_SCALE).collect(),
            },
        ));
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Bradley-Terry fit stopped after {max_iters} iterations without converging");
    }

    Ok(BtFit {
        scores: BtScores {
            w: w.into_iter().map(|v| v * SCORE_SCALE).collect(),
        },
        iterations,
        converged,
        nll_trace: trace,
    })
}

/// One answer on the five-point preference scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rating {
    DefA,
    SlightA,
    Tie,
    SlightB,
    DefB,
}

impl FromStr for Rating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "def_a" => Ok(Rating::DefA),
            "slight_a" => Ok(Rating::SlightA),
            "tie" => Ok(Rating::Tie),
            "slight_b" => Ok(Rating::SlightB),
            "def_b" => Ok(Rating::DefB),
            other => Err(Error::param(format!("unknown rating label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub player_a: String,
    pub player_b: String,
    pub rating: Rating,
}

/// Collapses ratings into win counts. Definite and slight preferences count
/// as wins; ties go to either side by a seeded fair coin, one draw per tie in
/// input order. Players are indexed by first appearance.
pub fn preprocess_ratings(raw: &[RatingRecord], seed: u64) -> Result<PreferenceDataset> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut pairs = Vec::with_capacity(raw.len());
    for rec in raw {
        if rec.player_a == rec.player_b {
            return Err(Error::param(format!(
                "player {:?} rated against itself",
                rec.player_a
            )));
        }
        let a = intern(&mut index, &mut names, &rec.player_a);
        let b = intern(&mut index, &mut names, &rec.player_b);
        pairs.push((a, b, rec.rating));
    }

    let n = names.len();
    let mut wins = vec![vec![0u64; n]; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (a, b, rating) in pairs {
        let a_wins = match rating {
            Rating::DefA | Rating::SlightA => true,
            Rating::DefB | Rating::SlightB => false,
            Rating::Tie => rng.random_bool(0.5),
        };
        if a_wins {
            wins[a][b] += 1;
        } else {
            wins[b][a] += 1;
        }
    }
    PreferenceDataset::new(names, wins)
}

fn intern<'a>(index: &mut HashMap<&'a str, usize>, names: &mut Vec<String>, name: &'a str) -> usize {
    *index.entry(name).or_insert_with(|| {
        names.push(name.to_string());
        names.len() - 1
    })
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean_rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::param("Spearman correlation needs at least 2 values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::param("Spearman inputs must be finite"));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::param(
            "Spearman correlation is undefined for a constant vector",
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
