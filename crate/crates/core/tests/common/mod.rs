//! Independent reference implementations used only by the integration tests.
#![allow(dead_code)]

use cyclin::linearization::FactorChain;
use cyclin::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

pub fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `Y(z)` assembled entry by entry: `X_j` at block `(j, j+1)`, `X_M` at `(M, 1)`, `-z` on the diagonal.
pub fn assemble(chain: &FactorChain, z: Complex64) -> Dense {
    let (n, m) = (chain.n(), chain.m());
    let dim = n * m;
    let mut y = vec![vec![zero(); dim]; dim];
    for j in 0..m {
        let col_block = (j + 1) % m;
        let f = chain.factor(j + 1);
        for r in 0..n {
            for c in 0..n {
                y[j * n + r][col_block * n + c] += f.get(r, c);
            }
        }
    }
    for (i, row) in y.iter_mut().enumerate() {
        row[i] -= z;
    }
    y
}

pub fn matvec(a: &Dense, x: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![zero(); c]; r];
    for i in 0..r {
        for l in 0..k {
            let ail = a[i][l];
            for j in 0..c {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Dense) -> f64 {
    a.iter().map(|r| r.iter().map(|x| x.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting on `[A | B]`; returns `A^{-1} B`.
pub fn gauss_solve(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let k = b[0].len();
    let mut aug: Dense = a.iter().zip(b).map(|(ra, rb)| ra.iter().chain(rb).copied().collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| aug[i][col].norm().total_cmp(&aug[j][col].norm())).unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p.norm() > 0.0, "singular matrix in oracle");
        for row in col + 1..n {
            let f = aug[row][col] / p;
            if f == zero() {
                continue;
            }
            for c in col..n + k {
                let t = aug[col][c];
                aug[row][c] -= f * t;
            }
        }
    }
    let mut x = vec![vec![zero(); k]; n];
    for row in (0..n).rev() {
        for c in 0..k {
            let mut s = aug[row][n + c];
            for j in row + 1..n {
                s -= aug[row][j] * x[j][c];
            }
            x[row][c] = s / aug[row][row];
        }
    }
    x
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { zero() }).collect()).collect()
}

/// One-sided Jacobi SVD; singular values in decreasing order.
pub fn jacobi_singular_values(a: &Dense) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    // work on columns
    let mut c: Vec<Vec<Complex64>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = c[p].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = c[q].iter().map(|x| x.norm_sqr()).sum();
                let g: Complex64 = c[p].iter().zip(&c[q]).map(|(x, y)| x.conj() * y).sum();
                let gabs = g.norm();
                if gabs <= 1e-15 * (alpha * beta).sqrt() || gabs == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = g / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let xp = c[p][i];
                    let xq = c[q][i] * phase.conj();
                    c[p][i] = xp * cs - xq * sn;
                    c[q][i] = xp * sn + xq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| norm(col)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Distance to vectors supported on at most `k` coordinates, by enumerating every support.
pub fn brute_dist_to_sparse(v: &[Complex64], k: usize) -> f64 {
    let d = v.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let off: f64 = (0..d).filter(|i| mask & (1 << i) == 0).map(|i| v[i].norm_sqr()).sum();
        best = best.min(off.sqrt());
    }
    best
}
