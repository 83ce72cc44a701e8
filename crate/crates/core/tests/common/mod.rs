//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use extremal_glove::{CoocRecord, VocabTable, WordVectors};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random corpus over a small alphabet with a skewed word distribution.
pub fn random_corpus(rng: &mut impl Rng, len: usize, alphabet: usize) -> Vec<String> {
    (0..len)
        .map(|_| {
            // squaring a uniform index skews toward low ids
            let u: f64 = rng.random();
            let id = ((u * u) * alphabet as f64) as usize;
            format!("w{id}")
        })
        .collect()
}

/// Every position pair `p < q` with `q - p <= window`, accumulated as exact
/// rationals and rounded once at the end. Returned sorted by `(i, j)`.
pub fn brute_force_cooccurrences(
    tokens: &[String],
    vocab: &VocabTable,
    window: usize,
) -> Vec<CoocRecord> {
    let mut cells: BTreeMap<(u32, u32), Ratio<i128>> = BTreeMap::new();
    for p in 0..tokens.len() {
        for q in p + 1..tokens.len() {
            let d = q - p;
            if d > window {
                continue;
            }
            let (Some(a), Some(b)) = (vocab.index_of(&tokens[p]), vocab.index_of(&tokens[q]))
            else {
                continue;
            };
            let mass = Ratio::new(1, d as i128);
            *cells
                .entry((a, b))
                .or_insert_with(|| Ratio::from_integer(0)) += mass;
            *cells
                .entry((b, a))
                .or_insert_with(|| Ratio::from_integer(0)) += mass;
        }
    }
    cells
        .into_iter()
        .map(|((i, j), r)| CoocRecord::new(i, j, ratio_to_f64(r)))
        .collect()
}

/// Correctly rounded for reduced fractions whose parts fit in 53 bits.
pub fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    let (n, d) = (*r.numer(), *r.denom());
    assert!(
        n.abs() < 1 << 53 && d < 1 << 53,
        "oracle fraction too large"
    );
    n as f64 / d as f64
}

/// Exact total mass `2 Σ 1/(q-p)` over in-vocabulary pairs.
pub fn total_mass(tokens: &[String], vocab: &VocabTable, window: usize) -> Ratio<i128> {
    let mut total = Ratio::from_integer(0);
    for p in 0..tokens.len() {
        for q in p + 1..(p + window + 1).min(tokens.len()) {
            if vocab.index_of(&tokens[p]).is_some() && vocab.index_of(&tokens[q]).is_some() {
                total += Ratio::new(2, (q - p) as i128);
            }
        }
    }
    total
}

/// Analytic Pareto quantiles `(i/(n+1))^(-gamma)` for `i = 1..=n`, i.e. the
/// descending order statistics of an idealized sample.
pub fn pareto_quantiles(n: usize, gamma: f64) -> Vec<f64> {
    (1..=n)
        .map(|i| (i as f64 / (n as f64 + 1.0)).powf(-gamma))
        .collect()
}

/// Descending copy.
pub fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Estimator formulas evaluated literally on raw logs, 1-based order statistics.
pub mod literal {
    use super::sorted_desc;

    fn x(desc: &[f64], i: usize) -> f64 {
        desc[i - 1]
    }

    pub fn hill(values: &[f64], k: usize) -> f64 {
        let s = sorted_desc(values);
        (1..=k).map(|i| x(&s, i).ln()).sum::<f64>() / k as f64 - x(&s, k + 1).ln()
    }

    pub fn adapted_hill(values: &[f64], k: usize) -> f64 {
        let s = sorted_desc(values);
        let uh = |i: usize| {
            let mean: f64 = (1..=i).map(|j| x(&s, j).ln()).sum::<f64>() / i as f64;
            x(&s, i + 1) * (mean - x(&s, i + 1).ln())
        };
        (1..=k).map(|i| uh(i).ln()).sum::<f64>() / k as f64 - uh(k + 1).ln()
    }

    pub fn moment_m(values: &[f64], k: usize, j: i32) -> f64 {
        let s = sorted_desc(values);
        (1..=k)
            .map(|i| (x(&s, i).ln() - x(&s, k + 1).ln()).powi(j))
            .sum::<f64>()
            / k as f64
    }

    pub fn qq(values: &[f64], k: usize) -> f64 {
        let s = sorted_desc(values);
        let kf = k as f64;
        let u = |i: usize| (i as f64 / (kf + 1.0)).ln();
        let log_sum: f64 = (1..=k).map(|j| x(&s, j).ln()).sum();
        let numer: f64 = (1..=k).map(|i| u(i) * (log_sum - kf * x(&s, i).ln())).sum();
        let sq: f64 = (1..=k).map(|i| u(i) * u(i)).sum();
        let plain: f64 = (1..=k).map(u).sum();
        numer / (kf * sq - plain * plain)
    }

    pub fn pickands(values: &[f64], m: usize) -> f64 {
        let s = sorted_desc(values);
        ((x(&s, m) - x(&s, 2 * m)) / (x(&s, 2 * m) - x(&s, 4 * m))).ln() / 2f64.ln()
    }
}

/// Weighted squared residual written out directly.
pub fn record_loss(wi: &[f64], wj: &[f64], bi: f64, bj: f64, x: f64, weight: f64) -> f64 {
    let mut dot = 0.0;
    for k in 0..wi.len() {
        dot += wi[k] * wj[k];
    }
    let r = dot + bi + bj - x.ln();
    weight * r * r
}

/// Ten entities in five pairs for two relations, embedded so that
/// `v(b) - v(a) + v(c) = v(d)` holds exactly for every generated question.
/// Returns the vectors and a question file with 10 semantic and 10
/// syntactic questions.
pub fn perfect_analogy_fixture() -> (WordVectors, String) {
    let capitals = ["athens", "paris", "rome", "oslo", "lima"];
    let countries = ["greece", "france", "italy", "norway", "peru"];
    let adjectives = ["calm", "quick", "quiet", "rare", "slow"];
    let adverbs = ["calmly", "quickly", "quietly", "rarely", "slowly"];
    // dims 0..10 entities, 10/11 semantic roles, 12/13 syntactic roles
    let dim = 14;
    let mut words = Vec::new();
    let mut data = Vec::new();
    let mut push = |w: &str, entity: usize, role: usize| {
        let mut v = vec![0.0; dim];
        v[entity] = 1.0;
        v[role] = 1.0;
        words.push(w.to_owned());
        data.extend(v);
    };
    for k in 0..5 {
        push(capitals[k], k, 10);
        push(countries[k], k, 11);
        push(adjectives[k], 5 + k, 12);
        push(adverbs[k], 5 + k, 13);
    }
    let mut q = String::from(": capital-common-countries\n");
    for (a, c) in [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 0),
        (0, 2),
        (1, 3),
        (2, 4),
        (3, 0),
        (4, 1),
    ] {
        q += &format!(
            "{} {} {} {}\n",
            capitals[a], countries[a], capitals[c], countries[c]
        );
    }
    q += ": gram1-adjective-to-adverb\n";
    for (a, c) in [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 0),
        (0, 3),
        (1, 4),
        (2, 0),
        (3, 1),
        (4, 2),
    ] {
        q += &format!(
            "{} {} {} {}\n",
            adjectives[a], adverbs[a], adjectives[c], adverbs[c]
        );
    }
    (WordVectors::new(words, dim, data).unwrap(), q)
}
