//! Per-atom scalar oracle for classical (commutative) martingales.
//!
//! A diagonal terminal on a tensor filtration with dims [1, 2, 2, …] is a
//! classical dyadic martingale on the atoms; every construction of the crate
//! then reduces to per-atom arithmetic with block averages. This module
//! recomputes all of it with plain `f64` vectors and no matrix code, as an
//! independent cross-check.

#![allow(dead_code)]

/// Classical filtration on `atoms` points: at level n the cells are
/// consecutive blocks of `block_sizes[n-1]` atoms.
pub struct ScalarSystem {
    pub atoms: usize,
    pub block_sizes: Vec<usize>,
}

impl ScalarSystem {
    /// Cells of the classical filtration matching a tensor filtration with
    /// the given factor dimensions: the level-n block size is the product of
    /// the factor dimensions after n.
    pub fn from_tensor_dims(dims: &[usize]) -> Self {
        let atoms: usize = dims.iter().product();
        let block_sizes = (1..=dims.len())
            .map(|n| dims[n..].iter().product::<usize>())
            .collect();
        Self { atoms, block_sizes }
    }

    pub fn levels(&self) -> usize {
        self.block_sizes.len()
    }

    /// E_n: average over each level-n cell.
    pub fn expect(&self, level: usize, v: &[f64]) -> Vec<f64> {
        let b = self.block_sizes[level - 1];
        let mut out = vec![0.0; self.atoms];
        for block in 0..self.atoms / b {
            let slice = &v[block * b..(block + 1) * b];
            let mean = slice.iter().sum::<f64>() / b as f64;
            out[block * b..(block + 1) * b].fill(mean);
        }
        out
    }

    pub fn expect_prev(&self, level: usize, v: &[f64]) -> Vec<f64> {
        self.expect(level.max(2) - 1, v)
    }

    pub fn martingale(&self, terminal: &[f64]) -> Vec<Vec<f64>> {
        (1..=self.levels()).map(|n| self.expect(n, terminal)).collect()
    }

    pub fn differences(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = vec![xs[0].clone()];
        for n in 1..xs.len() {
            out.push(sub(&xs[n], &xs[n - 1]));
        }
        out
    }

    pub fn lp(&self, v: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        }
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / self.atoms as f64).powf(1.0 / p)
    }

    pub fn weak_l1(&self, v: &[f64]) -> f64 {
        pooled_weak_l1(&[v.to_vec()], self.atoms)
    }

    /// Stopping indicators: q_n = q_{n−1}·[q_{n−1} x_n q_{n−1} ≤ λ] per atom.
    pub fn cuculescu(&self, xs: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
        let mut q_prev = vec![1.0; self.atoms];
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            let q: Vec<f64> = q_prev
                .iter()
                .zip(x)
                .map(|(&q, &v)| if q > 0.5 && q * v * q > lambda { 0.0 } else { q })
                .collect();
            out.push(q.clone());
            q_prev = q;
        }
        out
    }

    pub fn k_max(&self, xs: &[Vec<f64>]) -> usize {
        let top = xs.iter().flat_map(|x| x.iter()).fold(0.0_f64, |m, &v| m.max(v.abs()));
        let mut k = 0;
        while ((1u64 << k) as f64) < top {
            k += 1;
        }
        k
    }

    /// layers[n-1][i] indicators for i = 0..=k_max+1.
    pub fn layers(&self, xs: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
        let k_max = self.k_max(xs);
        let fams: Vec<Vec<Vec<f64>>> =
            (0..=k_max).map(|k| self.cuculescu(xs, (1u64 << k) as f64)).collect();
        let mut out = Vec::with_capacity(xs.len());
        for n in 0..xs.len() {
            // meets[i] = ∧_{k≥i} q_n^{(2^k)}: per atom the product of
            // indicators; the empty meet is 1.
            let mut meets = Vec::with_capacity(k_max + 2);
            for i in 0..=k_max {
                let mut m = vec![1.0; self.atoms];
                for fam in &fams[i..=k_max] {
                    for (slot, &q) in m.iter_mut().zip(&fam[n]) {
                        *slot *= q;
                    }
                }
                meets.push(m);
            }
            meets.push(vec![1.0; self.atoms]);
            let mut layers_n = vec![meets[0].clone()];
            for i in 1..=k_max + 1 {
                layers_n.push(sub(&meets[i], &meets[i - 1]));
            }
            out.push(layers_n);
        }
        out
    }

    /// The unique layer index of each atom at each level.
    fn layer_index(&self, layers: &[Vec<Vec<f64>>], n: usize, atom: usize) -> usize {
        layers[n - 1]
            .iter()
            .position(|p| p[atom] > 0.5)
            .expect("layers partition the atoms")
    }

    /// Classical three-way split: per atom dx goes to `a` when the level-n
    /// layer index exceeds the level-(n−1) one, else to `b`; `c` vanishes
    /// because a commuting atom cannot sit in layer i at level n−1 and in a
    /// strictly higher layer at level n at the same time.
    pub fn abc(&self, xs: &[Vec<f64>], layers: &[Vec<Vec<f64>>]) -> [Vec<Vec<f64>>; 3] {
        let dx = self.differences(xs);
        let mut a = vec![vec![0.0; self.atoms]; xs.len()];
        let mut b = vec![vec![0.0; self.atoms]; xs.len()];
        let c = vec![vec![0.0; self.atoms]; xs.len()];
        for n in 1..=xs.len() {
            let prev = if n == 1 { 1 } else { n - 1 };
            for atom in 0..self.atoms {
                let i = self.layer_index(layers, n, atom);
                let j = self.layer_index(layers, prev, atom);
                if n >= 2 && i > j {
                    a[n - 1][atom] = dx[n - 1][atom];
                } else if i <= j {
                    b[n - 1][atom] = dx[n - 1][atom];
                }
                // i > j at n = 1 cannot happen: both indices use level 1.
            }
        }
        [a, b, c]
    }

    /// Column/row square function per atom.
    pub fn square_function(&self, dx: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![0.0; self.atoms];
        for d in dx {
            for (slot, &v) in acc.iter_mut().zip(d) {
                *slot += v * v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Conditioned square function per atom, with E_0 = E_1.
    pub fn conditioned_square(&self, dx: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![0.0; self.atoms];
        for (idx, d) in dx.iter().enumerate() {
            let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
            let cond = self.expect_prev(idx + 1, &sq);
            for (slot, v) in acc.iter_mut().zip(cond) {
                *slot += v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    pub fn h_diag(&self, seq: &[Vec<f64>], p: f64) -> f64 {
        if p.is_infinite() {
            return seq.iter().map(|s| self.lp(s, p)).fold(0.0, f64::max);
        }
        seq.iter().map(|s| self.lp(s, p).powf(p)).sum::<f64>().powf(1.0 / p)
    }

    /// Centered version of an adapted sequence: s_n − E_{n−1}(s_n) for n ≥ 2.
    pub fn center(&self, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
        seq.iter()
            .enumerate()
            .map(|(idx, s)| {
                if idx == 0 {
                    s.clone()
                } else {
                    sub(s, &self.expect(idx, s))
                }
            })
            .collect()
    }

    /// BMO column norm with E_0 = E_1 (the row norm coincides for scalars).
    pub fn bmo(&self, terminal: &[f64]) -> f64 {
        let xs = self.martingale(terminal);
        let mut worst = 0.0_f64;
        for n in 1..=self.levels() {
            let prev = if n == 1 { xs[0].clone() } else { xs[n - 2].clone() };
            let osc: Vec<f64> = terminal.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).collect();
            let val = self.expect(n, &osc).into_iter().fold(0.0, f64::max);
            worst = worst.max(val);
        }
        worst.sqrt()
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Weak-L¹ of pooled absolute values with per-value mass 1/atoms.
pub fn pooled_weak_l1(seqs: &[Vec<f64>], atoms: usize) -> f64 {
    let mut vals: Vec<f64> = seqs.iter().flat_map(|s| s.iter().map(|v| v.abs())).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals.iter()
        .enumerate()
        .map(|(k, v)| (k + 1) as f64 / atoms as f64 * v)
        .fold(0.0, f64::max)
}

/// Deterministic positive normalized atom values.
pub fn random_atoms(seed: u64, atoms: usize) -> Vec<f64> {
    // Small xorshift-style stream; only reproducibility matters here.
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut vals = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        vals.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 3.0 + 0.05);
    }
    let mean = vals.iter().sum::<f64>() / atoms as f64;
    vals.iter().map(|v| v / mean).collect()
}
