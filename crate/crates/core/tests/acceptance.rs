//! Acceptance gate. Runs every primary criterion at its stated tolerance,
//! prints one PASS/FAIL line per criterion and exits non-zero if any fail.

use std::fs;
use std::process::Command;
use std::time::Instant;

use mauve::divergence::{kl, mixture, DiscreteDistribution, MixtureWeight};
use mauve::frontier::{
    divergence_curve, frechet_distance, mauve, mauve_from_curve, scaling_sweep, CurveConfig,
    MauveConfig,
};
use mauve::io::{write_embeddings, EmbeddingFormat};
use mauve::quantize::{quantize_pair, EmbeddingSet, QuantizeConfig};
use mauve::ranking::{bt_fit, bt_negative_log_likelihood, spearman, PreferenceDataset};
use mauve::textstats::{
    self, distinct_n, perplexity, repetition_frequency, self_bleu, zipf_coefficient,
    zipf_from_frequencies, LogProbRecord, Token, TokenCorpus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> DiscreteDistribution {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    DiscreteDistribution::renormalize(w).unwrap()
}

fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: &[f64]) -> EmbeddingSet {
    let data: Vec<f64> = (0..n * d)
        .map(|i| {
            let z: f64 = StandardNormal.sample(rng);
            z + shift.get(i % d).copied().unwrap_or(0.0)
        })
        .collect();
    EmbeddingSet::new(data, n, d).unwrap()
}

fn axis_shift(d: usize, mu: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = mu;
    v
}

fn identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for seed in 0..5 {
        let p = gaussian_cloud(&mut rng(seed), 200, 16, &[]);
        let config = MauveConfig {
            quantize: QuantizeConfig {
                k: 10,
                seed,
                ..QuantizeConfig::default()
            },
            ..MauveConfig::default()
        };
        let start = Instant::now();
        let report = mauve(&p, &p, &config).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        worst = worst.max((report.mauve - 1.0).abs());
    }
    let detail = format!("max |mauve - 1| = {worst:.2e}, slowest run {slowest:.3}s");
    if worst <= 1e-9 && slowest < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mixture_identity() -> Outcome {
    let mut r = rng(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = r.random_range(2..=10);
        let (p, q, s) = (dirichlet(&mut r, k), dirichlet(&mut r, k), dirichlet(&mut r, k));
        let lambda = r.random_range(0.0..1.0);
        let w = MixtureWeight::new(lambda).map_err(|e| e.to_string())?;
        let m = mixture(&p, &q, w).unwrap();
        let lhs = lambda * kl(&p, &s).unwrap() + (1.0 - lambda) * kl(&q, &s).unwrap();
        let rhs = lambda * kl(&p, &m).unwrap()
            + (1.0 - lambda) * kl(&q, &m).unwrap()
            + kl(&m, &s).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    let detail = format!("1000 triples, max residual {worst:.2e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// All points of the simplex whose coordinates are multiples of `1/steps`.
fn simplex_grid(k: usize, steps: usize) -> Vec<DiscreteDistribution> {
    fn fill(k: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in 0..=left {
            prefix.push(a);
            fill(k, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    fill(k, steps, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|c| {
            DiscreteDistribution::renormalize(c.into_iter().map(|v| v as f64).collect()).unwrap()
        })
        .collect()
}

fn pareto() -> Outcome {
    let grids: Vec<Vec<DiscreteDistribution>> = (2..=4).map(|k| simplex_grid(k, 50)).collect();
    let mut r = rng(12);
    let mut checked = 0usize;
    for pair in 0..100 {
        let k = r.random_range(2..=4);
        let (p, q) = (dirichlet(&mut r, k), dirichlet(&mut r, k));
        for lambda in [0.25, 0.5, 0.75] {
            let m = mixture(&p, &q, MixtureWeight::new(lambda).unwrap()).unwrap();
            let (kq, kp) = (kl(&q, &m).unwrap(), kl(&p, &m).unwrap());
            for cand in &grids[k - 2] {
                checked += 1;
                if kl(&q, cand).unwrap() < kq - 1e-9 && kl(&p, cand).unwrap() < kp - 1e-9 {
                    return Err(format!(
                        "pair {pair}, lambda {lambda}: {:?} dominates the mixture",
                        cand.probs()
                    ));
                }
            }
        }
    }
    Ok(format!("100 pairs, {checked} candidates, none dominating"))
}

fn quadrature() -> Outcome {
    let mut r = rng(13);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = 8;
        let mu = r.random_range(0.0..3.0);
        let p = gaussian_cloud(&mut r, 300, d, &[]);
        let q = gaussian_cloud(&mut r, 300, d, &axis_shift(d, mu));
        let cfg = QuantizeConfig {
            k: r.random_range(4..=30),
            restarts: 1,
            seed: i,
            ..QuantizeConfig::default()
        };
        let pair = quantize_pair(&p, &q, &cfg).map_err(|e| e.to_string())?;
        let area = |n| {
            let cfg = CurveConfig {
                grid_size: n,
                ..CurveConfig::default()
            };
            mauve_from_curve(&divergence_curve(&pair.p, &pair.q, &cfg).unwrap()).unwrap()
        };
        worst = worst.max((area(25) - area(100_000)).abs());
    }
    let detail = format!("50 quantized pairs, max |A_25 - A_1e5| = {worst:.2e}");
    if worst <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scaling_order() -> Outcome {
    let mut r = rng(14);
    let mut unstable = Vec::new();
    for family in 0..20 {
        let k = r.random_range(2..=20);
        let p = dirichlet(&mut r, k);
        let qs: Vec<DiscreteDistribution> = (0..5).map(|_| dirichlet(&mut r, k)).collect();
        let sweep = scaling_sweep(&p, &qs, &[1.0, 2.0, 5.0, 10.0], 25).map_err(|e| e.to_string())?;
        if !sweep.rank_stable() {
            unstable.push(format!("family {family} (k={k}): {:?}", sweep.rankings));
        }
    }
    if unstable.is_empty() {
        Ok("20 families, rankings identical for c in {1, 2, 5, 10}".into())
    } else {
        Err(format!(
            "{} of 20 families change rank; first: {}",
            unstable.len(),
            unstable[0]
        ))
    }
}

fn monotone_degradation() -> Outcome {
    let shifts = [0.0, 1.0, 2.0, 4.0];
    let d = 4;
    let mut table = Vec::new();
    for seed in 0..5u64 {
        let mut r = rng(100 + seed);
        let p = gaussian_cloud(&mut r, 1000, d, &[]);
        let config = MauveConfig {
            quantize: QuantizeConfig {
                k: 50,
                seed,
                ..QuantizeConfig::default()
            },
            ..MauveConfig::default()
        };
        let row: Vec<f64> = shifts
            .iter()
            .map(|&mu| {
                let q = gaussian_cloud(&mut r, 1000, d, &axis_shift(d, mu));
                mauve(&p, &q, &config).unwrap().mauve
            })
            .collect();
        table.push(row);
    }
    let ok = table.iter().all(|row| row.windows(2).all(|w| w[0] > w[1]));
    let detail = format!(
        "shifts {shifts:?}; seed 0 scores {:?}",
        table[0].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
    );
    if ok {
        Ok(detail)
    } else {
        Err(format!("not strictly decreasing: {table:?}"))
    }
}

fn frechet() -> Outcome {
    let d = 8;
    let mut values = Vec::new();
    let mut self_worst = 0.0f64;
    for seed in 0..3 {
        let mut r = rng(200 + seed);
        let p = gaussian_cloud(&mut r, 10_000, d, &[]);
        let q = gaussian_cloud(&mut r, 10_000, d, &axis_shift(d, 3.0));
        values.push(frechet_distance(&p, &q).map_err(|e| e.to_string())?);
        self_worst = self_worst.max(frechet_distance(&p, &p).unwrap().abs());
    }
    let detail = format!("shifted {values:.4?}, identical max {self_worst:.2e}");
    if values.iter().all(|v| (v - 9.0).abs() <= 0.3) && self_worst < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nll_non_increasing(trace: &[f64]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
}

fn bradley_terry() -> Outcome {
    let two = PreferenceDataset::from_matrix(vec![vec![0, 3], vec![1, 0]]).unwrap();
    let fit2 = bt_fit(&two, 10_000, 1e-10).map_err(|e| e.to_string())?;
    let gap = fit2.scores.w[0] - fit2.scores.w[1];
    if (gap - 109.861).abs() > 1e-3 || (gap - 100.0 * 3f64.ln()).abs() > 1e-6 {
        return Err(format!("two-player gap {gap}"));
    }

    let truth = [60.0, 0.0, -60.0];
    let mut r = rng(300);
    let mut wins = vec![vec![0u64; 3]; 3];
    for i in 0..3 {
        for j in i + 1..3 {
            let p_ij = 1.0 / (1.0 + (-(truth[i] - truth[j]) / 100.0f64).exp());
            for _ in 0..10_000 {
                if r.random_bool(p_ij) {
                    wins[i][j] += 1;
                } else {
                    wins[j][i] += 1;
                }
            }
        }
    }
    let three = PreferenceDataset::from_matrix(wins).unwrap();
    let fit3 = bt_fit(&three, 10_000, 1e-10).map_err(|e| e.to_string())?;
    let err = fit3
        .scores
        .w
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut monotone = nll_non_increasing(&fit2.nll_trace) && nll_non_increasing(&fit3.nll_trace);
    for seed in 0..20 {
        let mut r = rng(400 + seed);
        let n = r.random_range(3..=8);
        let wins: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else { r.random_range(1..30) }).collect())
            .collect();
        let data = PreferenceDataset::from_matrix(wins).unwrap();
        let fit = bt_fit(&data, 10_000, 1e-10).unwrap();
        let final_nll = bt_negative_log_likelihood(&data, &fit.scores);
        monotone &= nll_non_increasing(&fit.nll_trace)
            && (fit.nll_trace.last().unwrap() - final_nll).abs() <= 1e-9 * final_nll.max(1.0);
    }

    let detail = format!(
        "w1-w2 = {gap:.9}; 3-player scores {:.2?} (max err {err:.2}); NLL monotone: {monotone}",
        fit3.scores.w
    );
    if err <= 5.0 && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn records_for(ppl: f64, lengths: &[u64]) -> Vec<LogProbRecord> {
    lengths
        .iter()
        .map(|&n| LogProbRecord::new(-(n as f64) * ppl.ln(), n).unwrap())
        .collect()
}

fn perplexity_gap() -> Outcome {
    let model = records_for(12.554, &[312, 1024, 77, 640]);
    let human = records_for(12.602, &[500, 81, 1024]);
    let (pm, ph) = (perplexity(&model).unwrap(), perplexity(&human).unwrap());
    let gap = textstats::gen_ppl_gap(&model, &human).unwrap();
    let detail = format!("model {pm:.6}, human {ph:.6}, gap {gap:.6}");
    if (gap - 0.048).abs() <= 1e-9 && (pm - 12.554).abs() <= 1e-9 && (ph - 12.602).abs() <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Average ranks by counting, then the Pearson formula written out.
fn brute_spearman(a: &[f64], b: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn spearman_oracle() -> Outcome {
    let worked = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
    if (worked - 0.8).abs() > 1e-12 {
        return Err(format!("worked example gives {worked}"));
    }
    let mut r = rng(500);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let n = r.random_range(3..=60);
        let tied = done % 2 == 0;
        let draw = |r: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v: f64 = r.random_range(-10.0..10.0);
                    if tied {
                        v.round()
                    } else {
                        v
                    }
                })
                .collect()
        };
        let (a, b) = (draw(&mut r), draw(&mut r));
        let Ok(got) = spearman(&a, &b) else {
            continue;
        };
        worst = worst.max((got - brute_spearman(&a, &b)).abs());
        done += 1;
    }
    let detail = format!("worked example {worked}; 100 vectors, max diff {worst:.2e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn brute_distinct(seqs: &[Vec<Token>], n: usize) -> Option<f64> {
    let grams: Vec<&[Token]> = seqs
        .iter()
        .flat_map(|s| (0..s.len().saturating_sub(n - 1)).map(move |i| &s[i..i + n]))
        .filter(|g| g.len() == n)
        .collect();
    if grams.is_empty() {
        return None;
    }
    let unique = (0..grams.len())
        .filter(|&i| !grams[..i].contains(&grams[i]))
        .count();
    Some(unique as f64 / grams.len() as f64)
}

fn brute_repeats(s: &[Token]) -> bool {
    let len = s.len();
    (1..=len / 2).any(|l| (0..l).all(|i| s[len - 1 - i] == s[len - 1 - l - i]))
}

fn brute_bleu(hyp: &[Token], refs: &[&[Token]], order: usize) -> f64 {
    let count = |s: &[Token], g: &[Token]| s.windows(g.len()).filter(|w| *w == g).count();
    let mut log_sum = 0.0;
    for n in 1..=order {
        if hyp.len() < n {
            return 0.0;
        }
        let total = hyp.len() - n + 1;
        let mut seen: Vec<&[Token]> = Vec::new();
        let mut clipped = 0;
        for g in hyp.windows(n) {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            let best = refs.iter().map(|r| count(r, g)).max().unwrap_or(0);
            clipped += count(hyp, g).min(best);
        }
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let c = hyp.len();
    let mut best_r = refs[0].len();
    for r in refs {
        let (dr, db) = (r.len().abs_diff(c), best_r.abs_diff(c));
        if dr < db || (dr == db && r.len() < best_r) {
            best_r = r.len();
        }
    }
    let bp = if c > best_r {
        1.0
    } else {
        (1.0 - best_r as f64 / c as f64).exp()
    };
    bp * (log_sum / order as f64).exp()
}

fn statistics_oracles() -> Outcome {
    let inv: Vec<f64> = (1..=50).map(|r| 1.0 / r as f64).collect();
    let inv2: Vec<f64> = (1..=50).map(|r| 1.0 / (r * r) as f64).collect();
    let (z1, z2) = (
        zipf_from_frequencies(&inv).unwrap(),
        zipf_from_frequencies(&inv2).unwrap(),
    );
    // Scales divisible by every r^exp so the counts are exact.
    let corpus_law = |exp: u32, ranks: u64, scale: u64| {
        let seqs: Vec<Vec<Token>> = (1..=ranks)
            .map(|r| vec![r as Token; (scale / r.pow(exp)) as usize])
            .collect();
        zipf_coefficient(&TokenCorpus::new(seqs).unwrap()).unwrap()
    };
    let (c1, c2) = (corpus_law(1, 12, 27_720), corpus_law(2, 6, 3_600));
    let zipf_ok = [(z1, 1.0), (z2, 2.0), (c1, 1.0), (c2, 2.0)]
        .iter()
        .all(|(got, want)| (got - want).abs() <= 1e-6);
    if !zipf_ok {
        return Err(format!("zipf fits {z1} {z2} {c1} {c2}"));
    }

    let mut r = rng(600);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let vocab = r.random_range(2..=5);
        let n_seq = r.random_range(2..=12);
        let seqs: Vec<Vec<Token>> = (0..n_seq)
            .map(|_| {
                let len = r.random_range(1..=12);
                (0..len).map(|_| r.random_range(0..vocab)).collect()
            })
            .collect();
        let corpus = TokenCorpus::new(seqs.clone()).unwrap();
        for n in 1..=4 {
            match (distinct_n(&corpus, n), brute_distinct(&seqs, n)) {
                (Ok(a), Some(b)) => worst = worst.max((a - b).abs()),
                (Err(_), None) => {}
                (a, b) => return Err(format!("distinct-{n} disagreement: {a:?} vs {b:?}")),
            }
        }
        let reps = seqs.iter().filter(|s| brute_repeats(s)).count() as f64 / seqs.len() as f64;
        worst = worst.max((repetition_frequency(&corpus) - reps).abs());
        for order in 1..=4 {
            let oracle = (0..seqs.len())
                .map(|h| {
                    let refs: Vec<&[Token]> = (0..seqs.len())
                        .filter(|&j| j != h)
                        .map(|j| seqs[j].as_slice())
                        .collect();
                    brute_bleu(&seqs[h], &refs, order)
                })
                .sum::<f64>()
                / seqs.len() as f64;
            let got = self_bleu(&corpus, order, seqs.len(), 1).unwrap();
            worst = worst.max((got - oracle).abs());
        }
    }
    let detail = format!("zipf {z1:.9}/{z2:.9}; 20 corpora, max oracle diff {worst:.2e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(700);
    let p = gaussian_cloud(&mut r, 300, 8, &[]);
    let q = gaussian_cloud(&mut r, 300, 8, &axis_shift(8, 1.0));
    let (pp, qp) = (dir.path().join("p.bin"), dir.path().join("q.bin"));
    write_embeddings(&pp, &p, EmbeddingFormat::Binary).unwrap();
    write_embeddings(&qp, &q, EmbeddingFormat::Binary).unwrap();
    let run = |name: &str| -> Result<String, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mauve"))
            .args(["mauve", "--num-buckets", "20", "--seed", "42", "--p"])
            .arg(&pp)
            .arg("--q")
            .arg(&qp)
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("mauve exited with {status}"));
        }
        let text = fs::read_to_string(&out).map_err(|e| e.to_string())?;
        Ok(text
            .lines()
            .filter(|l| !l.contains("elapsed"))
            .collect::<Vec<_>>()
            .join("\n"))
    };
    let (a, b) = (run("a.json")?, run("b.json")?);
    if a == b {
        Ok(format!("{} bytes identical outside timing", a.len()))
    } else {
        Err("reports differ".into())
    }
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("identity", identity),
        ("mixture-identity", mixture_identity),
        ("pareto-frontier", pareto),
        ("quadrature", quadrature),
        ("scaling-order", scaling_order),
        ("monotone-degradation", monotone_degradation),
        ("frechet", frechet),
        ("bradley-terry", bradley_terry),
        ("perplexity-gap", perplexity_gap),
        ("spearman", spearman_oracle),
        ("statistics-oracles", statistics_oracles),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<22} {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<22} {detail} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
