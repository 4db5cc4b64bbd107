//! Acceptance criteria. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits non-zero if any fails.
//!
//! Oracles here are written independently of the library paths they check:
//! codewords come from Horner evaluation of every low-degree polynomial,
//! small-bias bits from carry-less GF(2^m) arithmetic, and probabilities from
//! direct enumeration.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use mdsaudit::code::combinations;
use mdsaudit::experiments::{
    bias_sweep, cost_counter, exact_failure_small, fit_cost, mc_failure_rate, run_trial,
    uniform_sum_law, TrialConfig,
};
use mdsaudit::format::{read_header, serialize, Payload};
use mdsaudit::hashing::{minimal_extension_degree, PrgSeed};
use mdsaudit::verifier::NodeBehavior;
use mdsaudit::{
    accounting, collect_hashes, draw_random_vector, make_code, make_extension, make_field,
    next_prime_power, prg_expand, Decoder, ErrorModel, Field, FieldElement, HashDecode, Matrix,
    RandomnessKind, SystemState,
};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn field_for(q: u64) -> Field {
    let (p, s) = next_prime_power(q);
    assert_eq!(p.pow(s as u32), q, "{q} is not a prime power");
    make_field(p, s).unwrap()
}

fn e(v: u64) -> FieldElement {
    FieldElement::from_index(v)
}

/// 1. Every k-subset of nodes reconstructs X.
fn mds_roundtrip() -> Outcome {
    let mut decodes = 0usize;
    for (n, k) in [(4usize, 2usize), (6, 3), (9, 5)] {
        let (p, s) = next_prime_power(n as u64);
        let f = make_field(p, s).unwrap();
        let code = make_code(n, k, &f, 2).unwrap();
        let subsets = combinations(n, k);
        let bad = (0..100u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + trial);
                let x = Matrix::random(&f, k * (n - k), 2, &mut rng);
                let coded = code.encode(&x).unwrap();
                subsets
                    .iter()
                    .filter(|set| {
                        let slices: Vec<_> = set
                            .iter()
                            .map(|&i| (i + 1, coded.node_slice(n - k, i + 1)))
                            .collect();
                        code.erasure_decode(&slices).ok() != Some(x.clone())
                    })
                    .count()
            })
            .sum::<usize>();
        if bad > 0 {
            return Err(format!("({n},{k}) q={}: {bad} subsets failed", f.order()));
        }
        decodes += 100 * subsets.len();
    }
    Ok(format!("{decodes} erasure decodes exact"))
}

/// 2. Flagged nodes are always truly corrupted when |W| <= t1.
fn soundness() -> Outcome {
    let models = [
        ErrorModel::SingleCell,
        ErrorModel::RandomDense,
        ErrorModel::Rank1,
        ErrorModel::RankF(2),
    ];
    let mut configs = Vec::new();
    for (n, k, q) in [(4usize, 2usize, 17u64), (7, 3, 17), (8, 2, 9)] {
        let code = make_code(n, k, &field_for(q), 4).unwrap();
        for model in &models {
            for t in 0..=code.params.t1 {
                for kind in [RandomnessKind::TrueRandom, RandomnessKind::Pseudorandom] {
                    for behavior in [
                        NodeBehavior::HashStored,
                        NodeBehavior::Arbitrary { seed: 99 },
                    ] {
                        let cfg = TrialConfig::new(code.clone(), model.clone(), t, kind).unwrap();
                        configs.push(cfg.with_behavior(behavior));
                    }
                }
            }
        }
    }
    let per = 10_000u64.div_ceil(configs.len() as u64);
    let (trials, violations) = configs
        .par_iter()
        .enumerate()
        .map(|(ci, cfg)| {
            let mut bad = 0u64;
            for i in 0..per {
                let r = run_trial(cfg, 7 + ci as u64, i).unwrap();
                if !r.flagged.is_subset(&r.truth) {
                    bad += 1;
                }
            }
            (per, bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    check(
        violations == 0,
        format!(
            "{trials} audits over {} settings, {violations} false accusations",
            configs.len()
        ),
    )
}

fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// 3. Uniform projection, one rank-1 node: miss rate 1/q.
fn uniform_rate() -> Outcome {
    let trials = 100_000u64;
    let mut details = Vec::new();
    let mut ok = true;
    for q in [17u64, 257] {
        let code = make_code(4, 2, &field_for(q), 4).unwrap();
        let cfg = TrialConfig::new(code, ErrorModel::Rank1, 1, RandomnessKind::TrueRandom).unwrap();
        let est = mc_failure_rate(&cfg, trials, 31 + q).unwrap();
        let exact = 1.0 / q as f64;
        let sigma = binomial_sigma(exact, trials);
        let near = (est.estimate - exact).abs() <= 3.0 * sigma;
        let bound = 1.0 / q as f64; // t1 / q with t1 = 1
        let under = est.estimate <= bound + 3.0 * sigma;
        ok &= near && under && est.false_accusations == 0;
        details.push(format!(
            "q={q}: {:.5} vs 1/q={exact:.5} (3σ={:.5})",
            est.estimate,
            3.0 * sigma
        ));
    }
    check(ok, details.join("; "))
}

/// Probability that every row of `err` is orthogonal to a uniform `r`,
/// counted with plain loops.
fn orthogonal_fraction(q: u64, err: &[[u64; 3]]) -> Ratio<u64> {
    let f = field_for(q);
    let mut hits = 0;
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                let r = [a, b, c];
                let zero = err.iter().all(|row| {
                    let mut acc = f.from_int(0);
                    for i in 0..3 {
                        acc = f.add(acc, f.mul(e(row[i]), e(r[i])));
                    }
                    acc.is_zero()
                });
                hits += u64::from(zero);
            }
        }
    }
    Ratio::new(hits, q * q * q)
}

/// 4. Exact rank-f law over F_3.
fn exact_rank_law() -> Outcome {
    let f3 = field_for(3);
    let rank1 = [[1, 2, 0], [2, 1, 0]];
    let rank2 = [[1, 1, 0], [0, 2, 1]];
    let m1 = Matrix::from_indices(2, 3, &rank1.concat()).unwrap();
    let m2 = Matrix::from_indices(2, 3, &rank2.concat()).unwrap();
    let got1 = exact_failure_small(&f3, 3, &[m1.clone()]).unwrap();
    let got2 = exact_failure_small(&f3, 3, &[m2.clone()]).unwrap();
    let ok = m1.rank(&f3) == 1
        && m2.rank(&f3) == 2
        && got1 == Ratio::new(1, 3)
        && got2 == Ratio::new(1, 9)
        && orthogonal_fraction(3, &rank1) == got1
        && orthogonal_fraction(3, &rank2) == got2;
    check(ok, format!("rank 1 -> {got1}, rank 2 -> {got2}"))
}

/// 5. Sums of independent uniform field elements are uniform.
fn uniform_sum() -> Outcome {
    for q in [2u64, 3, 4, 5] {
        let f = field_for(q);
        for count in [1usize, 2, 3, 5] {
            let dist = uniform_sum_law(&f, count);
            // independent tally over all q^count tuples
            let mut tally = vec![0u64; q as usize];
            let total = q.pow(count as u32);
            for idx in 0..total {
                let mut rest = idx;
                let mut acc = f.from_int(0);
                for _ in 0..count {
                    acc = f.add(acc, e(rest % q));
                    rest /= q;
                }
                tally[acc.index() as usize] += 1;
            }
            let uniform = Ratio::new(1, q);
            if dist.iter().any(|p| *p != uniform)
                || tally.iter().any(|&t| Ratio::new(t, total) != uniform)
            {
                return Err(format!("q={q} count={count}: {dist:?}"));
            }
        }
    }
    Ok("16 cases exactly uniform".into())
}

/// Carry-less multiplication mod `modulus` (bit i = coefficient of x^i).
fn gf2m_mul(mut a: u64, mut b: u64, modulus: u64, m: usize) -> u64 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 == 1 {
            a ^= modulus;
        }
    }
    acc
}

/// Seed expansion over F_2 written from the definition.
fn prg_bits_oracle(x: u64, y: u64, modulus: u64, m: usize, len: usize) -> Vec<u64> {
    let mut pow = 1u64;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(u64::from((pow & y).count_ones() % 2 == 1));
        pow = gf2m_mul(pow, x, modulus, m);
    }
    out
}

/// 6. Exhaustive small-bias check over F_2.
fn small_bias() -> Outcome {
    let f2 = field_for(2);
    let mut details = Vec::new();
    for n in 3..=9usize {
        let m = minimal_extension_degree(2, n);
        let sweep = bias_sweep(&f2, m, n).unwrap();
        let ext = make_extension(&f2, m).unwrap();
        let modulus = ext
            .modulus()
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, c)| acc | (c.index() << i));
        // oracle bias: enumerate seeds and tests directly
        let mut worst = Ratio::from_integer(0i64);
        let mut worst_zero = Ratio::from_integer(0u64);
        let seeds = 1u64 << (2 * m);
        let vectors: Vec<Vec<u64>> = (0..seeds)
            .map(|s| prg_bits_oracle(s & ((1 << m) - 1), s >> m, modulus, m, n))
            .collect();
        for beta in 1..(1u64 << n) {
            let ones = vectors
                .iter()
                .filter(|r| (0..n).map(|i| (beta >> i & 1) * r[i]).sum::<u64>() % 2 == 1)
                .count() as i64;
            for c in 0..2i64 {
                let zeros = if c == 0 { seeds as i64 - ones } else { ones };
                let bias = Ratio::new(2 * zeros - seeds as i64, seeds as i64);
                worst = worst.max(if bias < Ratio::from_integer(0) {
                    -bias
                } else {
                    bias
                });
                worst_zero = worst_zero.max(Ratio::new(zeros as u64, seeds));
            }
        }
        // library expansion agrees with the oracle on every seed
        for s in 0..seeds {
            let coords: Vec<FieldElement> = (0..2 * m).map(|i| e(s >> i & 1)).collect();
            let seed = PrgSeed::from_coords(&f2, m, &coords).unwrap();
            let lib: Vec<u64> = prg_expand(&seed, n)
                .unwrap()
                .values()
                .iter()
                .map(|v| v.index())
                .collect();
            if lib != vectors[s as usize] {
                return Err(format!("N={n}: expansion differs from oracle for seed {s}"));
            }
        }
        let bound = Ratio::new((n as i64) - 1, 1i64 << m);
        let ok = sweep.within_bounds()
            && sweep.max_abs_bias == worst
            && sweep.max_zero_probability == worst_zero
            && worst <= bound
            && bound <= Ratio::from_integer(1)
            && worst_zero <= Ratio::from_integer(1);
        if !ok {
            return Err(format!(
                "N={n} m={m}: bias {worst} bound {bound} P0 {worst_zero}"
            ));
        }
        details.push(format!("N={n}:{worst}<={bound}"));
    }
    Ok(details.join(" "))
}

/// 7. Small-bias projection stays under the pseudorandom bound.
fn small_bias_rate() -> Outcome {
    let trials = 100_000u64;
    let code = make_code(4, 2, &field_for(17), 16).unwrap();
    let cfg = TrialConfig::new(code, ErrorModel::Rank1, 1, RandomnessKind::Pseudorandom).unwrap();
    let est = mc_failure_rate(&cfg, trials, 4242).unwrap();
    let bound = 4.0 / 17.0;
    let slack = 3.0 * binomial_sigma(bound, trials);
    check(
        est.estimate <= bound + slack && (est.bound - bound).abs() < 1e-12,
        format!("{:.5} <= 4/17 = {bound:.5} (+3σ {slack:.5})", est.estimate),
    )
}

fn ceil_log2(x: u64) -> u64 {
    64 - (x - 1).leading_zeros() as u64
}

/// 8. Serialized hash size is constant in N and within the formula.
fn accounting_check() -> Outcome {
    let mut details = Vec::new();
    for (n, k) in [(4usize, 2usize), (6, 2)] {
        let t1 = ((n - k) / 2) as u64;
        for m_bits in [1_000u64, 1_000_000] {
            let f = field_for({
                let (p, s) = next_prime_power(t1 * m_bits);
                p.pow(s as u32)
            });
            let limit = (n * (n - k)) as u64
                * (ceil_log2(m_bits) + if t1 > 1 { ceil_log2(t1) } else { 0 } + 8);
            let mut sizes = Vec::new();
            let mut naive = Vec::new();
            for columns in [100usize, 1_000, 10_000] {
                let code = make_code(n, k, &f, columns).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(columns as u64);
                let x = Matrix::random(&f, code.params.message_rows(), columns, &mut rng);
                let state = SystemState::new(&code, x).unwrap();
                let r = draw_random_vector(columns, &f, &mut rng);
                let h = collect_hashes(&state, &r).unwrap();
                let bytes = serialize(&code, &Payload::Hashes(h.symbols().to_vec())).unwrap();
                let payload = bytes.len() - read_header(&bytes).unwrap().byte_len();
                let b = accounting(&code.params, RandomnessKind::TrueRandom);
                let file_bits = (k * (n - k) * columns) as u64 * ceil_log2(f.order());
                if b.naive_bits != (n as u64 * file_bits).div_ceil(k as u64) {
                    return Err(format!("naive bits {} for N={columns}", b.naive_bits));
                }
                if b.hash_bits > payload as u64 * 8 {
                    return Err("hash bits exceed serialized size".into());
                }
                sizes.push(payload as u64 * 8);
                naive.push(b.naive_bits);
            }
            let constant = sizes.iter().all(|&s| s == sizes[0]);
            let linear = naive[1] == 10 * naive[0] && naive[2] == 10 * naive[1];
            if !(constant && linear && sizes[0] <= limit) {
                return Err(format!(
                    "({n},{k}) M={m_bits}: hash {sizes:?} limit {limit}, naive {naive:?}"
                ));
            }
            details.push(format!("({n},{k}) M={m_bits}: {} <= {limit}", sizes[0]));
        }
    }
    Ok(details.join("; "))
}

/// 9. Production decoders agree with a minimum-distance oracle.
fn decoder_equivalence() -> Outcome {
    let (n, k) = (6usize, 3usize);
    let f = field_for(7);
    let code = make_code(n, k, &f, 1).unwrap();
    let alpha = n - k;
    let t1 = code.params.t1;
    let points = code.params.eval_points.clone();

    // every codeword of one group: evaluations of polynomials of degree < k
    let eval = |coeffs: &[u64], x: FieldElement| {
        coeffs
            .iter()
            .rev()
            .fold(f.from_int(0), |acc, &c| f.add(f.mul(acc, x), e(c)))
    };
    let mut codewords = Vec::new();
    for idx in 0..7u64.pow(k as u32) {
        let coeffs: Vec<u64> = (0..k).map(|i| idx / 7u64.pow(i as u32) % 7).collect();
        codewords.push(
            points
                .iter()
                .map(|&x| eval(&coeffs, x).index())
                .collect::<Vec<u64>>(),
        );
    }
    // decoding spheres of radius t1 around every codeword
    let mut sphere: HashMap<Vec<u64>, usize> = HashMap::new();
    for (ci, c) in codewords.iter().enumerate() {
        sphere.insert(c.clone(), ci);
        for pos in 0..n {
            for v in 1..7 {
                let mut w = c.clone();
                w[pos] = f.add(e(w[pos]), e(v)).index();
                sphere.insert(w, ci);
            }
        }
    }
    assert_eq!(t1, 1);

    // other two groups hold fixed codewords
    let fixed = [codewords[123].clone(), codewords[45].clone()];
    let mut patterns: Vec<Option<(usize, [u64; 3])>> = vec![None];
    for node in 0..n {
        for v in 1..343u64 {
            patterns.push(Some((node, [v % 7, v / 7 % 7, v / 49])));
        }
    }
    let cases = codewords.len() * patterns.len();
    let mismatches: usize = codewords
        .par_iter()
        .map(|c0| {
            let mut bad = 0;
            for pat in &patterns {
                let groups = [c0, &fixed[0], &fixed[1]];
                let mut h = vec![FieldElement::ZERO; n * alpha];
                for i in 0..n {
                    for j in 0..alpha {
                        let mut v = e(groups[j][i]);
                        if let Some((node, err)) = pat {
                            if *node == i {
                                v = f.add(v, e(err[j]));
                            }
                        }
                        h[i * alpha + j] = v;
                    }
                }
                // oracle: nearest codeword per group within radius t1, then node support
                let mut oracle_cw = vec![FieldElement::ZERO; n * alpha];
                let mut oracle_nodes = BTreeSet::new();
                let mut decodable = true;
                for j in 0..alpha {
                    let word: Vec<u64> = (0..n).map(|i| h[i * alpha + j].index()).collect();
                    match sphere.get(&word) {
                        Some(&ci) => {
                            for i in 0..n {
                                oracle_cw[i * alpha + j] = e(codewords[ci][i]);
                                if codewords[ci][i] != word[i] {
                                    oracle_nodes.insert(i + 1);
                                }
                            }
                        }
                        None => decodable = false,
                    }
                }
                let decodable = decodable && oracle_nodes.len() <= t1;
                for decoder in [Decoder::BerlekampWelch, Decoder::Subsets] {
                    let agree = match code.hash_word_decode_with(&h, decoder).unwrap() {
                        HashDecode::Decoded {
                            codeword,
                            error_nodes,
                            ..
                        } => decodable && codeword == oracle_cw && error_nodes == oracle_nodes,
                        HashDecode::Undecodable => !decodable,
                    };
                    bad += usize::from(!agree);
                }
            }
            bad
        })
        .sum();
    check(
        mismatches == 0,
        format!("{cases} cases exhaustive, 2 decoders, {mismatches} disagreements"),
    )
}

/// 10. Expansion cost is c·N·m² up to a factor 1.5.
fn prg_cost() -> Outcome {
    let f2 = field_for(2);
    let columns: Vec<usize> = (4..=12).map(|e| 1usize << e).collect();
    let rows = cost_counter(&f2, &columns, None).unwrap();
    // independent count: N inner products of 2m ops, N-1 products of
    // m^2 schoolbook multiply-adds plus (m-1)·m reduction multiply-adds
    for r in &rows {
        let (nn, m) = (r.columns as u64, r.m as u64);
        let expected = nn * 2 * m + (nn - 1) * (2 * m * m + 2 * (m - 1) * m);
        if r.ops != expected {
            return Err(format!(
                "N={nn} m={m}: counted {} expected {expected}",
                r.ops
            ));
        }
    }
    let fit = fit_cost(&rows);
    check(
        fit.worst_factor <= 1.5,
        format!(
            "c = {:.3}, worst factor {:.3} over N = 2^4..2^12",
            fit.c, fit.worst_factor
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("MDS roundtrip", mds_roundtrip),
        ("soundness", soundness),
        ("uniform-projection miss rate", uniform_rate),
        ("exact rank-f law", exact_rank_law),
        ("sum of uniforms is uniform", uniform_sum),
        ("small-bias exactness", small_bias),
        ("small-bias miss rate", small_bias_rate),
        ("communication accounting", accounting_check),
        ("decoder oracle equivalence", decoder_equivalence),
        ("PRG cost scaling", prg_cost),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!(
                "criterion {:>2} [PRIMARY] {name}: PASS ({d}) [{secs:.1}s]",
                i + 1
            ),
            Err(d) => {
                failed += 1;
                println!(
                    "criterion {:>2} [PRIMARY] {name}: FAIL ({d}) [{secs:.1}s]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
