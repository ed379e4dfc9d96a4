//! Packed storage for fully symmetric tensors.
//!
//! A symmetric tensor of order `k` over `n` indices has `C(n+k-1, k)`
//! independent entries, one per non-decreasing multi-index. Entries are
//! stored in colexicographic order of the multi-index: for sorted
//! `i_0 <= .. <= i_{k-1}` the slot is `sum_j C(i_j + j, j + 1)`.

use serde::{Deserialize, Serialize};

pub const MAX_ORDER: usize = 4;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

pub fn packed_len(dim: usize, order: usize) -> usize {
    if order == 0 {
        return 1;
    }
    binomial(dim + order - 1, order)
}

/// Slot of a non-decreasing multi-index.
pub fn rank_sorted(sorted: &[usize]) -> usize {
    sorted.iter().enumerate().map(|(j, &i)| binomial(i + j, j + 1)).sum()
}

/// Slot of an arbitrary multi-index (sorted internally).
pub fn rank(index: &[usize]) -> usize {
    debug_assert!(index.len() <= MAX_ORDER);
    let mut buf = [0usize; MAX_ORDER];
    let k = index.len();
    buf[..k].copy_from_slice(index);
    buf[..k].sort_unstable();
    rank_sorted(&buf[..k])
}

/// All non-decreasing multi-indices of the given order, in storage order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); packed_len(dim, order)];
    let mut current = Vec::with_capacity(order);
    fn rec(dim: usize, order: usize, start: usize, current: &mut Vec<usize>, out: &mut [Vec<usize>]) {
        if current.len() == order {
            out[rank_sorted(current)] = current.clone();
            return;
        }
        for i in start..dim {
            current.push(i);
            rec(dim, order, i, current, out);
            current.pop();
        }
    }
    rec(dim, order, 0, &mut current, &mut out);
    out
}

/// Product of factorials of the index multiplicities of a sorted multi-index.
pub fn multiplicity_factorial(sorted: &[usize]) -> f64 {
    let mut prod = 1.0;
    let mut run = 0usize;
    for (j, &i) in sorted.iter().enumerate() {
        if j > 0 && sorted[j - 1] == i {
            run += 1;
        } else {
            run = 1;
        }
        prod *= run as f64;
    }
    prod
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "order {order} exceeds {MAX_ORDER}");
        SymTensor {
            dim,
            order,
            data: vec![0.0; packed_len(dim, order)],
        }
    }

    pub fn from_packed(dim: usize, order: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), packed_len(dim, order));
        SymTensor { dim, order, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Storage slot for an index tuple; permutations share a slot.
    pub fn slot(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.order, "wrong number of indices");
        debug_assert!(index.iter().all(|&i| i < self.dim));
        rank(index)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.slot(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let s = self.slot(index);
        self.data[s] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> SymTensor {
        SymTensor {
            dim: self.dim,
            order: self.order,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Row-major dense expansion of length `dim^order`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let total = n.pow(self.order as u32);
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; self.order];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut r = flat;
            for k in (0..self.order).rev() {
                idx[k] = r % n;
                r /= n;
            }
            *slot = self.data[rank(&idx)];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_are_a_bijection() {
        for dim in 1..=6 {
            for order in 0..=4 {
                let all = multi_indices(dim, order);
                assert_eq!(all.len(), packed_len(dim, order));
                for (r, mi) in all.iter().enumerate() {
                    assert_eq!(mi.len(), order);
                    assert!(mi.windows(2).all(|w| w[0] <= w[1]));
                    assert_eq!(rank_sorted(mi), r);
                }
            }
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity_factorial(&[0, 0, 1, 1]), 4.0);
        assert_eq!(multiplicity_factorial(&[2, 2, 2, 2]), 24.0);
        assert_eq!(multiplicity_factorial(&[0, 1, 2]), 1.0);
        assert_eq!(multiplicity_factorial(&[]), 1.0);
    }

    proptest! {
        #[test]
        fn permutations_share_a_slot(
            a in 0usize..5, b in 0usize..5, c in 0usize..5, d in 0usize..5
        ) {
            let t = SymTensor::zeros(5, 4);
            let s = t.slot(&[a, b, c, d]);
            for p in [[b, a, c, d], [d, c, b, a], [c, a, d, b], [a, d, b, c]] {
                prop_assert_eq!(t.slot(&p), s);
            }
        }
    }
}
