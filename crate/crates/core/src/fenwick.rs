//! Fenwick (binary indexed) tree specialised to prefix maxima, the backbone
//! of the O(n log n) passage-time sweep over x-sorted points.

/// Values with a total "better than" preference and a bottom element.
pub(crate) trait Best: Copy {
    fn bottom() -> Self;
    /// Strictly prefer `self` over `other`.
    fn better(&self, other: &Self) -> bool;
}

impl Best for f64 {
    fn bottom() -> Self {
        f64::NEG_INFINITY
    }
    fn better(&self, other: &Self) -> bool {
        self > other
    }
}

pub(crate) struct FenwickMax<T: Best> {
    tree: Vec<T>,
}

impl<T: Best> FenwickMax<T> {
    pub fn new(n: usize) -> Self {
        FenwickMax {
            tree: vec![T::bottom(); n + 1],
        }
    }

    /// Record value `v` at position `i` (0-based). Values only accumulate;
    /// there is no removal.
    pub fn update(&mut self, i: usize, v: T) {
        let mut k = i + 1;
        while k < self.tree.len() {
            if v.better(&self.tree[k]) {
                self.tree[k] = v;
            }
            k += k & k.wrapping_neg();
        }
    }

    /// Best value over positions `[0, r)`; `bottom()` if the range is empty.
    pub fn prefix(&self, r: usize) -> T {
        let mut best = T::bottom();
        let mut k = r.min(self.tree.len() - 1);
        while k > 0 {
            if self.tree[k].better(&best) {
                best = self.tree[k];
            }
            k &= k - 1;
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_max_matches_naive() {
        let vals = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut fw = FenwickMax::<f64>::new(vals.len());
        for (i, &v) in vals.iter().enumerate() {
            fw.update(i, v);
            for r in 0..=vals.len() {
                let naive = vals
                    .iter()
                    .take(r)
                    .enumerate()
                    .filter(|&(j, _)| j <= i)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(fw.prefix(r), naive, "r={r} i={i}");
            }
        }
    }

    #[test]
    fn empty_prefix_is_bottom() {
        let fw = FenwickMax::<f64>::new(4);
        assert_eq!(fw.prefix(0), f64::NEG_INFINITY);
        assert_eq!(fw.prefix(4), f64::NEG_INFINITY);
    }
}
