//! Word error rate: word-level Levenshtein distance over the reference
//! length.

/// Edit distance with unit costs, O(min) memory row DP.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        curr[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            curr[j] = sub.min(prev[j] + 1).min(curr[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Ratio of word edits to reference words. The reference must be non-empty.
pub fn wer(reference: &[String], hypothesis: &[String]) -> Result<f64, String> {
    if reference.is_empty() {
        return Err("wer is undefined for an empty reference".into());
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

pub fn split_words(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_lowercase()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Vec<String> {
        split_words(s)
    }

    #[test]
    fn identical_sequences() {
        assert_eq!(wer(&w("ab ab"), &w("ab ab")).unwrap(), 0.0);
    }

    #[test]
    fn single_substitution() {
        let r = wer(&w("a b c"), &w("a x c")).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_reference_is_an_error() {
        assert!(wer(&[], &w("a")).is_err());
    }

    #[test]
    fn insertions_can_push_wer_above_one() {
        let r = wer(&w("a"), &w("x y z")).unwrap();
        assert_eq!(r, 3.0);
    }

    /// Full-matrix dynamic program, kept independent of the row-compressed
    /// implementation above.
    fn dp_oracle(a: &[String], b: &[String]) -> usize {
        let (n, m) = (a.len(), b.len());
        let mut d = vec![vec![0usize; m + 1]; n + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=n {
            for j in 1..=m {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[n][m]
    }

    #[test]
    fn matches_dp_oracle_on_random_pairs() {
        let vocab = ["a", "b", "c", "d"];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let len_a = rng.random_range(0..=6);
            let len_b = rng.random_range(0..=6);
            let a: Vec<String> = (0..len_a)
                .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                .collect();
            let b: Vec<String> = (0..len_b)
                .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                .collect();
            assert_eq!(edit_distance(&a, &b), dp_oracle(&a, &b), "{a:?} vs {b:?}");
        }
    }
}
