//! Independent reference implementations used by the oracle and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_string(r: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let n = r.gen_range(0..=max_len);
    (0..n)
        .map(|_| alphabet[r.gen_range(0..alphabet.len())])
        .collect()
}

/// Edit distance by memoized recursion on suffixes.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo)
                .min(go(a, b, i, j + 1, memo))
                .min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

pub fn cer(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    edit_distance(&h, &r) as f64 / r.len() as f64
}

fn occurrences<T: PartialEq>(gram: &[T], seq: &[T]) -> usize {
    if gram.len() > seq.len() {
        return 0;
    }
    (0..=seq.len() - gram.len())
        .filter(|&i| &seq[i..i + gram.len()] == gram)
        .count()
}

/// Clipped n-gram matches, counted by scanning each distinct hypothesis n-gram.
pub fn clipped<T: PartialEq>(h: &[T], r: &[T], n: usize) -> usize {
    if h.len() < n {
        return 0;
    }
    let mut total = 0;
    for i in 0..=h.len() - n {
        let g = &h[i..i + n];
        let first = (0..i).all(|j| &h[j..j + n] != g);
        if first {
            total += occurrences(g, h).min(occurrences(g, r));
        }
    }
    total
}

pub fn ngrams_in(len: usize, n: usize) -> usize {
    if len >= n {
        len - n + 1
    } else {
        0
    }
}

/// BLEU over token lists. Sentence mode halves the pseudo-count at each
/// successive zero-match order; corpus mode returns 0 on any zero match.
pub fn bleu(pairs: &[(Vec<String>, Vec<String>)], max_n: usize, smooth: bool) -> f64 {
    let c: usize = pairs.iter().map(|p| p.0.len()).sum();
    let rl: usize = pairs.iter().map(|p| p.1.len()).sum();
    if c == 0 {
        return 0.0;
    }
    let mut logs = Vec::new();
    let mut pseudo = 1.0;
    for n in 1..=max_n {
        let m: usize = pairs.iter().map(|(h, r)| clipped(h, r, n)).sum();
        let t: usize = pairs.iter().map(|(h, _)| ngrams_in(h.len(), n)).sum();
        if t == 0 {
            continue;
        }
        if m == 0 {
            if !smooth {
                return 0.0;
            }
            pseudo /= 2.0;
            logs.push((pseudo / t as f64).ln());
        } else {
            logs.push((m as f64 / t as f64).ln());
        }
    }
    if logs.is_empty() {
        return 0.0;
    }
    let geo = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let bp = if c < rl {
        (1.0 - rl as f64 / c as f64).exp()
    } else {
        1.0
    };
    100.0 * bp * geo
}

pub fn chrf_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let cs: Vec<char> = w.chars().collect();
        let mut lo = 0;
        let mut hi = cs.len();
        let mut tail = None;
        if cs.len() > 1 {
            if cs[0].is_ascii_punctuation() {
                out.push(cs[0].to_string());
                lo = 1;
            }
            if cs[cs.len() - 1].is_ascii_punctuation() {
                tail = Some(cs[cs.len() - 1].to_string());
                hi -= 1;
            }
        }
        if lo < hi {
            out.push(cs[lo..hi].iter().collect());
        }
        out.extend(tail);
    }
    out
}

pub fn chrf(hyp: &str, reference: &str, char_n: usize, word_n: usize, beta: f64) -> f64 {
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hw = chrf_words(hyp);
    let rw = chrf_words(reference);
    let mut rows = Vec::new();
    for n in 1..=char_n {
        rows.push((
            ngrams_in(hc.len(), n),
            ngrams_in(rc.len(), n),
            clipped(&hc, &rc, n),
        ));
    }
    for n in 1..=word_n {
        rows.push((
            ngrams_in(hw.len(), n),
            ngrams_in(rw.len(), n),
            clipped(&hw, &rw, n),
        ));
    }
    if rows.iter().all(|&(h, r, _)| h == 0 && r == 0) {
        return 100.0;
    }
    let used: Vec<_> = rows.iter().filter(|&&(h, r, _)| h > 0 && r > 0).collect();
    if used.is_empty() {
        return 0.0;
    }
    let p = used
        .iter()
        .map(|&&(h, _, m)| m as f64 / h as f64)
        .sum::<f64>()
        / used.len() as f64;
    let r = used
        .iter()
        .map(|&&(_, r, m)| m as f64 / r as f64)
        .sum::<f64>()
        / used.len() as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    100.0 * (1.0 + b2) * p * r / (b2 * p + r)
}

/// Greedy block-move TER: all candidate moves are listed, and the first one
/// (start ascending, length descending, destination ascending) reaching the
/// lowest distance is taken while it beats the current distance.
pub fn ter<T: PartialEq + Clone>(hyp: &[T], reference: &[T]) -> f64 {
    let mut cur = hyp.to_vec();
    let mut d = edit_distance(&cur, reference);
    let mut moves = 0;
    loop {
        let mut cands: Vec<(usize, Vec<T>)> = Vec::new();
        for s in 0..cur.len() {
            for len in (1..=10.min(cur.len() - s)).rev() {
                let block = cur[s..s + len].to_vec();
                if occurrences(&block, reference) == 0 {
                    continue;
                }
                let mut rest = cur.clone();
                rest.drain(s..s + len);
                for dest in 0..=rest.len() {
                    if dest == s || dest.abs_diff(s) > 50 {
                        continue;
                    }
                    let mut moved = rest.clone();
                    for (k, x) in block.iter().enumerate() {
                        moved.insert(dest + k, x.clone());
                    }
                    cands.push((edit_distance(&moved, reference), moved));
                }
            }
        }
        let best = cands.iter().map(|c| c.0).min();
        match best {
            Some(b) if b < d && d > 0 => {
                let pick = cands.into_iter().find(|c| c.0 == b).unwrap();
                cur = pick.1;
                d = b;
                moves += 1;
            }
            _ => break,
        }
    }
    100.0 * (d + moves) as f64 / reference.len() as f64
}

/// Mean NLL with a direct softmax.
pub fn nll(e: &[Vec<f64>], w: &[Vec<f64>], b: &[f64], inputs: &[usize], targets: &[usize]) -> f64 {
    let mut total = 0.0;
    for (&s, &y) in inputs.iter().zip(targets) {
        let z: Vec<f64> = (0..b.len())
            .map(|j| b[j] + (0..e[s].len()).map(|i| e[s][i] * w[i][j]).sum::<f64>())
            .collect();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        total -= (z[y].exp() / denom).ln();
    }
    total / inputs.len() as f64
}
