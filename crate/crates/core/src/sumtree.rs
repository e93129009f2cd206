//! Array-backed binary tree of nonnegative weights with O(log n) update and
//! proportional sampling.

#[derive(Clone, Debug, Default)]
pub(crate) struct SumTree {
    cap: usize,
    len: usize,
    /// Node `i` has children `2i` and `2i+1`; leaves start at `cap`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new() -> Self {
        Self {
            cap: 1,
            len: 0,
            nodes: vec![0.0; 2],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        debug_assert!(i < self.len);
        let mut k = self.cap + i;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            // Recomputed from children, so no rounding drift accumulates.
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn push(&mut self, value: f64) {
        if self.len == self.cap {
            let leaves: Vec<f64> = (0..self.len).map(|i| self.get(i)).collect();
            self.cap *= 2;
            self.nodes = vec![0.0; 2 * self.cap];
            self.nodes[self.cap..self.cap + leaves.len()].copy_from_slice(&leaves);
            for k in (1..self.cap).rev() {
                self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
            }
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    /// Moves the last leaf into `i`, mirroring `IndexMap::swap_remove_index`.
    pub fn swap_remove(&mut self, i: usize) {
        let last = self.len - 1;
        let moved = self.get(last);
        self.set(last, 0.0);
        if i != last {
            self.set(i, moved);
        }
        self.len -= 1;
    }

    /// Leaf whose cumulative interval contains `u * total()`, `u` in [0, 1).
    pub fn find(&self, u: f64) -> usize {
        let mut target = u * self.total();
        let mut k = 1;
        while k < self.cap {
            let left = self.nodes[2 * k];
            if target < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        let mut i = k - self.cap;
        // Rounding can land on an empty leaf; step back to a positive one.
        while self.get(i) <= 0.0 && i > 0 {
            i -= 1;
        }
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_sampling() {
        let mut t = SumTree::new();
        for v in [1.0, 0.0, 3.0] {
            t.push(v);
        }
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.find(0.0), 0);
        assert_eq!(t.find(0.24), 0);
        assert_eq!(t.find(0.26), 2);
        assert_eq!(t.find(0.999), 2);
        t.swap_remove(0);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(0), 3.0);
        assert_eq!(t.total(), 3.0);
        t.set(1, 1.0);
        assert_eq!(t.find(0.9), 1);
    }

    #[test]
    fn growth_keeps_values() {
        let mut t = SumTree::new();
        for i in 0..37 {
            t.push(i as f64);
        }
        assert_eq!(t.total(), (0..37).sum::<i32>() as f64);
        assert_eq!(t.get(20), 20.0);
    }

    #[derive(Clone, Debug)]
    enum Op {
        Push(f64),
        Set(usize, f64),
        Remove(usize),
    }

    fn op() -> impl proptest::strategy::Strategy<Value = Op> {
        use proptest::prelude::*;
        prop_oneof![
            (0.0..10.0f64).prop_map(Op::Push),
            (any::<usize>(), 0.0..10.0f64).prop_map(|(i, v)| Op::Set(i, v)),
            any::<usize>().prop_map(Op::Remove),
        ]
    }

    proptest::proptest! {
        #[test]
        fn matches_a_plain_vector(ops in proptest::collection::vec(op(), 0..200), u in 0.0..1.0f64) {
            let mut t = SumTree::new();
            let mut v: Vec<f64> = Vec::new();
            for o in ops {
                match o {
                    Op::Push(x) => {
                        t.push(x);
                        v.push(x);
                    }
                    Op::Set(i, x) if !v.is_empty() => {
                        let i = i % v.len();
                        t.set(i, x);
                        v[i] = x;
                    }
                    Op::Remove(i) if !v.is_empty() => {
                        let i = i % v.len();
                        t.swap_remove(i);
                        v.swap_remove(i);
                    }
                    _ => {}
                }
            }
            proptest::prop_assert_eq!(t.len(), v.len());
            let total: f64 = v.iter().sum();
            proptest::prop_assert!((t.total() - total).abs() <= 1e-9 * total.max(1.0));
            if total > 0.0 {
                let i = t.find(u);
                proptest::prop_assert!(v[i] > 0.0);
                let below: f64 = v[..i].iter().sum();
                // Leaf boundaries agree with the running sum up to rounding.
                proptest::prop_assert!(below <= u * total + 1e-9 && u * total <= below + v[i] + 1e-9);
            }
        }
    }
}
