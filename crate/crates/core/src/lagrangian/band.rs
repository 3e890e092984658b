//! Banded storage with an LU factorization using partial pivoting (LAPACK `gbtf2` layout).

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Column-major storage with `kl` extra rows on top for pivoting fill-in:
/// entry `(r, c)` lives at `c * ldab + kl + ku + r - c`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, r: usize, c: usize) -> bool {
        r < self.n && c < self.n && r + self.ku >= c && c + self.kl >= r
    }

    #[inline]
    fn offset(&self, r: usize, c: usize) -> usize {
        c * self.ldab + self.kl + self.ku + r - c
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.data[self.offset(r, c)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(r, c)`; panics outside the band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(self.in_band(r, c), "entry ({r}, {c}) outside band ({}, {})", self.kl, self.ku);
        let o = self.offset(r, c);
        self.data[o] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let r0 = c.saturating_sub(self.ku);
            let r1 = (c + self.kl).min(self.n - 1);
            for r in r0..=r1 {
                y[r] += self.data[self.offset(r, c)] * x[c];
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = self.data[col].abs();
            for r in 1..=km {
                let v = self.data[col + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::State(format!("singular Jacobian at column {j}")));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.offset(j + jp, c);
                    let b = self.offset(j, c);
                    self.data.swap(a, b);
                }
            }
            if km > 0 {
                let piv = self.data[col];
                for r in 1..=km {
                    self.data[col + r] /= piv;
                }
                let (head, tail) = self.data.split_at_mut((j + 1) * ldab);
                let mult = &head[col + 1..=col + km];
                for c in j + 1..=ju {
                    let base = (c - j - 1) * ldab + kv + j - c;
                    let a_jc = tail[base];
                    if a_jc != 0.0 {
                        let target = &mut tail[base + 1..=base + km];
                        for (t, m) in target.iter_mut().zip(mult) {
                            *t -= m * a_jc;
                        }
                    }
                }
            }
        }
        Ok(BandLu { lu: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        let kv = a.kl + a.ku;
        for j in 0..n {
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let km = a.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * a.ldab + kv;
                for r in 1..=km {
                    b[j + r] -= a.data[col + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * a.ldab + kv;
            b[j] /= a.data[col];
            let bj = b[j];
            if bj != 0.0 {
                let top = j.saturating_sub(kv);
                for r in top..j {
                    b[r] -= a.data[col + r - j] * bj;
                }
            }
        }
    }
}
