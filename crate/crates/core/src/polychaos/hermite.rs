/// `n!` as a float.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Probabilists' Hermite polynomial `He_i(x)` by the three-term recurrence
/// `He_{i+1} = x He_i - i He_{i-1}`.
pub fn hermite_eval(i: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..i {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[He_0(x), ..., He_n(x)]`.
pub fn hermite_table(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// `E[He_i He_j He_k]` for a standard normal argument.
///
/// Nonzero only when `i + j + k = 2s` is even and each index is at most `s`,
/// in which case it equals `i! j! k! / ((s-i)! (s-j)! (s-k)!)`.
pub fn triple_product(i: usize, j: usize, k: usize) -> f64 {
    let total = i + j + k;
    if total % 2 == 1 {
        return 0.0;
    }
    let s = total / 2;
    if i > s || j > s || k > s {
        return 0.0;
    }
    factorial(i) * factorial(j) * factorial(k)
        / (factorial(s - i) * factorial(s - j) * factorial(s - k))
}

/// All triple products `e_ijk` for `0 ≤ i, j, k ≤ order`.
#[derive(Debug, Clone)]
pub struct TripleProductTensor {
    order: usize,
    entries: Vec<f64>,
}

impl TripleProductTensor {
    pub fn new(order: usize) -> Self {
        let p = order + 1;
        let mut entries = vec![0.0; p * p * p];
        for i in 0..p {
            for j in 0..p {
                for k in 0..p {
                    entries[(i * p + j) * p + k] = triple_product(i, j, k);
                }
            }
        }
        Self { order, entries }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let p = self.order + 1;
        assert!(i < p && j < p && k < p, "index ({i}, {j}, {k}) beyond order {}", self.order);
        self.entries[(i * p + j) * p + k]
    }
}
