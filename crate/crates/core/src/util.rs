//! Small enumeration helpers shared by the search and simulation modules.

/// All nondecreasing `k`-tuples over `0..n` (multisets of size `k`).
pub fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, k, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Number of multisets of size `k` over `n` symbols.
pub fn multiset_count(n: usize, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    binomial((n + k - 1) as u64, k as u64)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Decode `index` into `len` digits of the given radix, most significant first.
pub fn digits(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for d in out.iter_mut().rev() {
        *d = index % radix;
        index /= radix;
    }
    out
}

/// Inverse of [`digits`].
pub fn undigits(ds: &[usize], radix: usize) -> usize {
    ds.iter().fold(0, |acc, d| acc * radix + d)
}

/// Saturating `base^exp`.
pub fn pow_sat(base: usize, exp: usize) -> usize {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Advance `v` to its next distinct lexicographic arrangement; false after the last.
pub fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    let Some(i) = (1..n).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..n).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Number of sequences with the given letter counts.
pub fn multinomial(counts: &[usize]) -> u128 {
    let mut total = 0u64;
    let mut acc: u128 = 1;
    for &c in counts {
        total += c as u64;
        acc = acc.saturating_mul(binomial(total, c as u64));
    }
    acc
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_forms() {
        assert_eq!(multisets(4, 2).len() as u128, multiset_count(4, 2));
        assert_eq!(multisets(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(compositions(6, 3).len() as u128, binomial(8, 2));
        assert_eq!(binomial(32, 2), 496);
        assert_eq!(multinomial(&[2, 1, 1]), 12);
        let mut v = vec![0, 0, 1];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
        assert_eq!(digits(undigits(&[1, 0, 3], 4), 4, 3), vec![1, 0, 3]);
    }
}
