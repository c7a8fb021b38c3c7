//! Sorted multi-indices `i_1 <= ... <= i_p` over `0..n` in lexicographic
//! order, the layout of every coefficient array.

use std::ops::Range;

/// `C(n, k)` in `u128`; exact for every size this crate can allocate.
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

/// Number of sorted `p`-tuples over `n` indices, `C(n + p - 1, p)`.
pub fn tuple_count(n: usize, p: usize) -> u128 {
    binomial((n + p - 1) as u64, p as u64)
}

/// Number of distinct orderings of a sorted tuple, `p! / prod(mult!)`.
pub fn orderings(tuple: &[usize]) -> f64 {
    let mut r = 1.0;
    let mut seen = 0usize;
    let mut run = 0usize;
    for (i, &t) in tuple.iter().enumerate() {
        if i > 0 && t == tuple[i - 1] {
            run += 1;
        } else {
            run = 1;
        }
        seen += 1;
        r *= seen as f64 / run as f64;
    }
    r
}

/// Offsets of the blocks of tuples sharing their first index: block `a`
/// spans `offsets[a]..offsets[a + 1]`.
pub fn first_index_offsets(n: usize, p: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0usize;
    offsets.push(0);
    for a in 0..n {
        acc += tuple_count(n - a, p - 1) as usize;
        offsets.push(acc);
    }
    offsets
}

/// Splits `0..n` into at most `parts` contiguous first-index ranges of
/// roughly equal tuple counts. Depends only on its arguments.
pub fn balanced_ranges(offsets: &[usize], parts: usize) -> Vec<Range<usize>> {
    let n = offsets.len() - 1;
    let total = offsets[n];
    let parts = parts.clamp(1, n.max(1));
    let mut ranges = Vec::with_capacity(parts);
    let mut start = 0;
    for k in 1..=parts {
        let target = total * k / parts;
        let mut end = start;
        while end < n && (offsets[end + 1] <= target || end == start) {
            end += 1;
        }
        if k == parts {
            end = n;
        }
        if end > start {
            ranges.push(start..end);
        }
        start = end;
    }
    ranges
}

/// Calls `f(tuple, flat_index)` for every sorted `p`-tuple whose first index
/// lies in `first`, in lexicographic order.
pub fn for_each_tuple<F: FnMut(&[usize], usize)>(
    n: usize,
    p: usize,
    first: Range<usize>,
    offsets: &[usize],
    mut f: F,
) {
    if first.is_empty() || p == 0 {
        return;
    }
    let mut idx = offsets[first.start];
    let end = offsets[first.end];
    let mut t = vec![first.start; p];
    while idx < end {
        f(&t, idx);
        idx += 1;
        // odometer step on a non-decreasing tuple
        let mut k = p;
        while k > 0 && t[k - 1] == n - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        let v = t[k - 1] + 1;
        for slot in &mut t[k - 1..] {
            *slot = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(2, 5), 0);
        assert_eq!(tuple_count(3, 2), 6);
        assert_eq!(tuple_count(300, 3), 4_545_100);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        for (n, p) in [(4, 1), (4, 2), (5, 3), (3, 4)] {
            let offsets = first_index_offsets(n, p);
            let mut all = Vec::new();
            for_each_tuple(n, p, 0..n, &offsets, |t, i| {
                assert_eq!(i, all.len());
                all.push(t.to_vec());
            });
            assert_eq!(all.len() as u128, tuple_count(n, p));
            assert!(all.windows(2).all(|w| w[0] < w[1]));
            assert!(all.iter().all(|t| t.windows(2).all(|w| w[0] <= w[1])));
            // sub-ranges agree with the full walk
            let ranges = balanced_ranges(&offsets, 3);
            let mut again = Vec::new();
            for r in ranges {
                for_each_tuple(n, p, r, &offsets, |t, i| again.push((i, t.to_vec())));
            }
            assert!(again.iter().all(|(i, t)| &all[*i] == t));
            assert_eq!(again.len(), all.len());
        }
    }

    #[test]
    fn ordering_counts() {
        assert_eq!(orderings(&[1, 1, 1]), 1.0);
        assert_eq!(orderings(&[1, 1, 2]), 3.0);
        assert_eq!(orderings(&[1, 2, 3]), 6.0);
        assert_eq!(orderings(&[0, 0, 1, 1]), 6.0);
    }

    #[test]
    fn ranges_cover() {
        let offsets = first_index_offsets(100, 3);
        let r = balanced_ranges(&offsets, 16);
        assert_eq!(r.first().unwrap().start, 0);
        assert_eq!(r.last().unwrap().end, 100);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!(balanced_ranges(&first_index_offsets(1, 2), 4), vec![0..1]);
    }
}
