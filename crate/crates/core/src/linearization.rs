//! The linearization `Y` of a factor chain, its translate `Y(z) = Y - zI`, and a solver
//! that exploits the block-cyclic structure.
//!
//! Block layout (1-based blocks): block `(j, j+1)` holds `X_j` for `j < M`, block `(M, 1)`
//! holds `X_M`, the diagonal holds `-z I`. Eliminating blocks `2..M` leaves the `n x n` core
//!
//! ```text
//! (z^{1-M} X - z I) u_1 = sum_j z^{1-j} X_1 ... X_{j-1} w_j,      X = X_1 X_2 ... X_M,
//! ```
//!
//! after which `u_M = (X_M u_1 - w_M) / z` and `u_j = (X_j u_{j+1} - w_j) / z` for
//! `j = M-1, ..., 2`. The inverse of the core is the top-left block of `Y(z)^{-1}`.
//! The core of `Y(z)^*` is the adjoint of the same matrix, so one LU serves both solves.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, norm2, ComplexMatrix, LuFactor, CONDITION_CAP};

/// Ordered factors `X_1, ..., X_M`, all `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorChain {
    factors: Vec<ComplexMatrix>,
}

impl FactorChain {
    pub fn new(factors: Vec<ComplexMatrix>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidParameter("a chain needs M >= 1 factors".into()))?;
        let n = first.rows();
        for (k, f) in factors.iter().enumerate() {
            if f.rows() != n || f.cols() != n {
                return Err(Error::Dimension(format!(
                    "factor {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    f.rows(),
                    f.cols()
                )));
            }
        }
        Ok(Self { factors })
    }

    /// `M` copies of the `n x n` identity.
    pub fn identities(n: usize, m: usize) -> Self {
        Self { factors: vec![ComplexMatrix::identity(n); m] }
    }

    pub fn n(&self) -> usize {
        self.factors[0].rows()
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    /// Factor `k`, 1-based.
    pub fn factor(&self, k: usize) -> &ComplexMatrix {
        &self.factors[k - 1]
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<ComplexMatrix> {
        self.factors
    }
}

/// `X_1 X_2 ... X_M` (left-to-right).
pub fn product(chain: &FactorChain) -> ComplexMatrix {
    let mut acc = chain.factors[0].clone();
    for f in &chain.factors[1..] {
        acc = acc.matmul(f).expect("chain factors share a dimension");
    }
    acc
}

/// An element of `C^{Mn}` split into `M` blocks of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    blocks: Vec<Vec<Complex64>>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = blocks.first().map(Vec::len).ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
        if n == 0 || blocks.iter().any(|b| b.len() != n) {
            return Err(Error::Dimension("blocks must share a positive length".into()));
        }
        Ok(Self { blocks })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self { blocks: vec![vec![Complex64::new(0.0, 0.0); n]; m] }
    }

    pub fn from_flat(m: usize, n: usize, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != m * n {
            return Err(Error::Dimension(format!("{} entries for {m} blocks of {n}", flat.len())));
        }
        Self::new(flat.chunks(n).map(<[Complex64]>::to_vec).collect())
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        self.blocks.concat()
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks[0].len()
    }

    /// Block `j`, 1-based.
    pub fn block(&self, j: usize) -> &[Complex64] {
        &self.blocks[j - 1]
    }

    pub fn blocks(&self) -> &[Vec<Complex64>] {
        &self.blocks
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> BlockVector {
        Self { blocks: self.blocks.iter().map(|b| b.iter().map(|z| z * s).collect()).collect() }
    }
}

/// `Y(z) = Y - zI`, kept implicit as (chain, z).
#[derive(Clone, Debug, PartialEq)]
pub struct TranslatedLinearization {
    chain: FactorChain,
    z: Complex64,
}

impl TranslatedLinearization {
    pub fn new(chain: FactorChain, z: Complex64) -> Self {
        Self { chain, z }
    }

    pub fn chain(&self) -> &FactorChain {
        &self.chain
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn n(&self) -> usize {
        self.chain.n()
    }

    pub fn m(&self) -> usize {
        self.chain.m()
    }

    /// `N = M n`.
    pub fn dim(&self) -> usize {
        self.n() * self.m()
    }

    fn check_shape(&self, u: &BlockVector) -> Result<()> {
        if u.m() != self.m() || u.n() != self.n() {
            return Err(Error::Dimension(format!(
                "block vector is {}x{}, linearization needs {}x{}",
                u.m(),
                u.n(),
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }

    /// `Y(z) u` without materializing.
    pub fn apply(&self, u: &BlockVector) -> Result<BlockVector> {
        self.check_shape(u)?;
        let m = self.m();
        let blocks = (0..m)
            .map(|j| {
                let next = (j + 1) % m;
                let mut out = self.chain.factors[j].matvec(&u.blocks[next]);
                for (o, x) in out.iter_mut().zip(&u.blocks[j]) {
                    *o -= self.z * x;
                }
                out
            })
            .collect();
        Ok(BlockVector { blocks })
    }

    /// `Y(z)^* v` without materializing.
    pub fn apply_adjoint(&self, v: &BlockVector) -> Result<BlockVector> {
        self.check_shape(v)?;
        let m = self.m();
        let zc = self.z.conj();
        let blocks = (0..m)
            .map(|j| {
                let prev = (j + m - 1) % m;
                let mut out = self.chain.factors[prev].adjoint_matvec(&v.blocks[prev]);
                for (o, x) in out.iter_mut().zip(&v.blocks[j]) {
                    *o -= zc * x;
                }
                out
            })
            .collect();
        Ok(BlockVector { blocks })
    }

    /// The dense `Mn x Mn` matrix. Only for oracles and small sizes.
    pub fn materialize(&self) -> ComplexMatrix {
        let (n, m) = (self.n(), self.m());
        let mut y = ComplexMatrix::zeros(n * m, n * m);
        for (j, f) in self.chain.factors.iter().enumerate() {
            let (r0, c0) = (j * n, ((j + 1) % m) * n);
            for a in 0..n {
                for b in 0..n {
                    y.set(r0 + a, c0 + b, f.get(a, b));
                }
            }
        }
        for i in 0..n * m {
            y.set(i, i, y.get(i, i) - self.z);
        }
        y
    }

    /// `Y(z)` with the same chain and a different shift.
    pub fn with_z(&self, z: Complex64) -> Self {
        Self { chain: self.chain.clone(), z }
    }
}

/// `z^{1-M} X - z I`.
fn core_matrix(chain: &FactorChain, z: Complex64) -> Result<ComplexMatrix> {
    let m = chain.m();
    if m > 1 && z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroShift);
    }
    let x = product(chain);
    let scale = if m == 1 { Complex64::new(1.0, 0.0) } else { z.powi(1 - m as i32) };
    Ok(x.scale(scale).shift(z))
}

/// Top-left `n x n` block of `Y(z)^{-1}`, computed as `(z^{1-M} X - z I)^{-1}`.
pub fn top_left_inverse_block(chain: &FactorChain, z: Complex64) -> Result<ComplexMatrix> {
    let core = core_matrix(chain, z)?;
    Ok(LuFactor::new(&core, CONDITION_CAP)?.inverse())
}

/// Work done by one structured solve, in complex multiply-adds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveCost {
    /// `n x n` matrix-vector products with chain factors.
    pub matvecs: usize,
    /// Triangular-solve pairs with the pre-factorized core.
    pub core_solves: usize,
    /// Scalar multiply-adds (`n^2` per matvec, `n^2` per core solve, `n` per vector update).
    pub madds: usize,
}

/// Prefactorized solver for `Y(z) u = w` and `Y(z)^* v = w`.
///
/// Setup forms the product and factorizes the `n x n` core once. Each solve then costs
/// `2M - 1` factor matvecs plus one core solve.
pub struct StructuredSolver<'a> {
    lin: &'a TranslatedLinearization,
    core: LuFactor,
}

impl<'a> StructuredSolver<'a> {
    pub fn new(lin: &'a TranslatedLinearization) -> Result<Self> {
        Self::with_condition_cap(lin, CONDITION_CAP)
    }

    pub fn with_condition_cap(lin: &'a TranslatedLinearization, cap: f64) -> Result<Self> {
        let core = LuFactor::new(&core_matrix(&lin.chain, lin.z)?, cap)?;
        Ok(Self { lin, core })
    }

    pub fn linearization(&self) -> &TranslatedLinearization {
        self.lin
    }

    pub fn core_condition(&self) -> f64 {
        self.core.condition_estimate()
    }

    pub fn solve(&self, w: &BlockVector) -> Result<BlockVector> {
        self.solve_counted(w).map(|(u, _)| u)
    }

    pub fn solve_adjoint(&self, w: &BlockVector) -> Result<BlockVector> {
        self.solve_adjoint_counted(w).map(|(u, _)| u)
    }

    /// Solves `Y(z) u = w`, reporting the work done.
    pub fn solve_counted(&self, w: &BlockVector) -> Result<(BlockVector, SolveCost)> {
        self.lin.check_shape(w)?;
        let (n, m, z) = (self.lin.n(), self.lin.m(), self.lin.z);
        let x = &self.lin.chain.factors;
        let mut cost = CostMeter::new(n);
        if m == 1 {
            let u = self.core.solve(&w.blocks[0]);
            cost.core_solve();
            return Ok((BlockVector { blocks: vec![u] }, cost.done()));
        }
        let zinv = z.inv();
        // Horner: g = w_1 + X_1/z (w_2 + X_2/z (... + X_{M-1}/z w_M))
        let mut g = w.blocks[m - 1].clone();
        for j in (0..m - 1).rev() {
            let xg = x[j].matvec(&g);
            cost.matvec();
            g = w.blocks[j].iter().zip(&xg).map(|(wj, t)| wj + t * zinv).collect();
            cost.axpy();
        }
        let mut blocks = vec![Vec::new(); m];
        blocks[0] = self.core.solve(&g);
        cost.core_solve();
        // u_M = (X_M u_1 - w_M)/z, then u_j = (X_j u_{j+1} - w_j)/z for j = M-1..2
        let back = |f: &ComplexMatrix, next: &[Complex64], wj: &[Complex64]| -> Vec<Complex64> {
            f.matvec(next).iter().zip(wj).map(|(a, b)| (a - b) * zinv).collect()
        };
        blocks[m - 1] = back(&x[m - 1], &blocks[0], &w.blocks[m - 1]);
        cost.matvec();
        cost.axpy();
        for j in (1..m - 1).rev() {
            blocks[j] = back(&x[j], &blocks[j + 1], &w.blocks[j]);
            cost.matvec();
            cost.axpy();
        }
        Ok((BlockVector { blocks }, cost.done()))
    }

    /// Solves `Y(z)^* v = w`, reporting the work done.
    ///
    /// Block equations: `X_M^* v_M - conj(z) v_1 = w_1` and
    /// `X_{j-1}^* v_{j-1} - conj(z) v_j = w_j` for `j >= 2`.
    pub fn solve_adjoint_counted(&self, w: &BlockVector) -> Result<(BlockVector, SolveCost)> {
        self.lin.check_shape(w)?;
        let (n, m) = (self.lin.n(), self.lin.m());
        let x = &self.lin.chain.factors;
        let mut cost = CostMeter::new(n);
        if m == 1 {
            let v = self.core.solve_adjoint(&w.blocks[0]);
            cost.core_solve();
            return Ok((BlockVector { blocks: vec![v] }, cost.done()));
        }
        let zc_inv = self.lin.z.conj().inv();
        // v_j = A_j v_1 + b_j with b_1 = 0, b_j = (X_{j-1}^* b_{j-1} - w_j)/conj(z)
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..m {
            let xb = if j == 1 { vec![Complex64::new(0.0, 0.0); n] } else { x[j - 1].adjoint_matvec(&b) };
            if j > 1 {
                cost.matvec();
            }
            b = xb.iter().zip(&w.blocks[j]).map(|(a, wj)| (a - wj) * zc_inv).collect();
            cost.axpy();
        }
        let xb = x[m - 1].adjoint_matvec(&b);
        cost.matvec();
        let g: Vec<Complex64> = w.blocks[0].iter().zip(&xb).map(|(a, t)| a - t).collect();
        cost.axpy();
        let mut blocks = vec![self.core.solve_adjoint(&g)];
        cost.core_solve();
        for j in 1..m {
            let prev = x[j - 1].adjoint_matvec(&blocks[j - 1]);
            cost.matvec();
            blocks.push(prev.iter().zip(&w.blocks[j]).map(|(a, wj)| (a - wj) * zc_inv).collect());
            cost.axpy();
        }
        Ok((BlockVector { blocks }, cost.done()))
    }

    /// Column `k` (0-based) of `Y(z)^{-1}`.
    pub fn inverse_column(&self, k: usize) -> Result<BlockVector> {
        let (n, m) = (self.lin.n(), self.lin.m());
        if k >= n * m {
            return Err(Error::IndexOutOfRange { index: k + 1, max: n * m });
        }
        let mut e = BlockVector::zeros(m, n);
        e.blocks[k / n][k % n] = Complex64::new(1.0, 0.0);
        self.solve(&e)
    }

    /// Solves `Y(z) U = W` for a block right-hand side; `w[j]` holds rows `jn .. (j+1)n` of `W`.
    /// Same recursion as [`Self::solve_counted`] with matrix products in place of matvecs.
    pub fn solve_blocks(&self, w: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
        let (n, m, z) = (self.lin.n(), self.lin.m(), self.lin.z);
        let cols = w.first().map_or(0, |b| b.cols());
        if w.len() != m || w.iter().any(|b| b.rows() != n || b.cols() != cols) {
            return Err(Error::Dimension(format!("block right-hand side must be {m} blocks of {n} x {cols}")));
        }
        let x = &self.lin.chain.factors;
        if m == 1 {
            return Ok(vec![self.core.solve_matrix(&w[0])]);
        }
        let zinv = z.inv();
        let mut g = w[m - 1].clone();
        for j in (0..m - 1).rev() {
            g = w[j].add(&x[j].matmul(&g)?.scale(zinv))?;
        }
        let mut blocks = vec![ComplexMatrix::zeros(0, 0); m];
        blocks[0] = self.core.solve_matrix(&g);
        blocks[m - 1] = x[m - 1].matmul(&blocks[0])?.sub(&w[m - 1])?.scale(zinv);
        for j in (1..m - 1).rev() {
            blocks[j] = x[j].matmul(&blocks[j + 1])?.sub(&w[j])?.scale(zinv);
        }
        Ok(blocks)
    }

    /// Distances from each row of `Y(z)` to the span of the others, `1 / ||Y(z)^{-1} e_k||`.
    pub fn row_distances(&self) -> Result<Vec<f64>> {
        let (n, m) = (self.lin.n(), self.lin.m());
        let dim = n * m;
        let one = Complex64::new(1.0, 0.0);
        let rhs: Vec<ComplexMatrix> = (0..m)
            .map(|j| ComplexMatrix::from_fn(n, dim, |i, k| if k == j * n + i { one } else { Complex64::new(0.0, 0.0) }))
            .collect();
        let inv = self.solve_blocks(&rhs)?;
        Ok((0..dim)
            .map(|k| 1.0 / inv.iter().map(|b| (0..n).map(|i| b.get(i, k).norm_sqr()).sum::<f64>()).sum::<f64>().sqrt())
            .collect())
    }
}

struct CostMeter {
    n: usize,
    cost: SolveCost,
}

impl CostMeter {
    fn new(n: usize) -> Self {
        Self { n, cost: SolveCost::default() }
    }
    fn matvec(&mut self) {
        self.cost.matvecs += 1;
        self.cost.madds += self.n * self.n;
    }
    fn core_solve(&mut self) {
        self.cost.core_solves += 1;
        self.cost.madds += self.n * self.n;
    }
    fn axpy(&mut self) {
        self.cost.madds += self.n;
    }
    fn done(self) -> SolveCost {
        self.cost
    }
}

/// One-shot `Y(z) u = w`.
pub fn structured_solve(lin: &TranslatedLinearization, w: &BlockVector) -> Result<BlockVector> {
    StructuredSolver::new(lin)?.solve(w)
}

/// One-shot `Y(z)^* v = w`.
pub fn adjoint_structured_solve(lin: &TranslatedLinearization, w: &BlockVector) -> Result<BlockVector> {
    StructuredSolver::new(lin)?.solve_adjoint(w)
}

/// Default cap on `Mn` for dense eigen-solves.
pub const MULTIPLICITY_CAP: usize = 200;

/// Eigenvalues of `Y^M` paired against those of `X`, each repeated `M` times.
#[derive(Clone, Debug)]
pub struct MultiplicityReport {
    pub product_eigenvalues: Vec<Complex64>,
    pub power_eigenvalues: Vec<Complex64>,
    /// Largest distance in a greedy nearest-neighbour pairing of the two multisets.
    pub max_pairing_distance: f64,
}

pub fn verify_multiplicity(chain: &FactorChain, cap: usize) -> Result<MultiplicityReport> {
    let dim = chain.n() * chain.m();
    if dim > cap {
        return Err(Error::CapExceeded { size: dim, cap });
    }
    let y = TranslatedLinearization::new(chain.clone(), Complex64::new(0.0, 0.0)).materialize();
    let mut power = y.clone();
    for _ in 1..chain.m() {
        power = power.matmul(&y)?;
    }
    let power_eigenvalues = eigenvalues(&power)?;
    let product_eigenvalues = eigenvalues(&product(chain))?;
    let targets: Vec<Complex64> =
        product_eigenvalues.iter().flat_map(|&l| std::iter::repeat(l).take(chain.m())).collect();
    let max_pairing_distance = greedy_pairing_distance(&targets, &power_eigenvalues);
    Ok(MultiplicityReport { product_eigenvalues, power_eigenvalues, max_pairing_distance })
}

/// Max distance when each target (in order of decreasing isolation) takes its nearest
/// unused candidate. Returns infinity on a length mismatch.
pub fn greedy_pairing_distance(targets: &[Complex64], candidates: &[Complex64]) -> f64 {
    if targets.len() != candidates.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; candidates.len()];
    let mut worst: f64 = 0.0;
    for t in targets {
        let (best, d) = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, c)| (i, (c - t).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("equal lengths");
        used[best] = true;
        worst = worst.max(d);
    }
    worst
}

/// `||Y(z) u - materialize(Y(z)) u||` style residual helper: `||Y(z) u - w||`.
pub fn residual_norm(lin: &TranslatedLinearization, u: &BlockVector, w: &BlockVector) -> Result<f64> {
    let yu = lin.apply(u)?;
    Ok(norm2(&crate::numerics::sub_vec(&yu.to_flat(), &w.to_flat())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_chain(values: &[Complex64]) -> FactorChain {
        FactorChain::new(values.iter().map(|&v| ComplexMatrix::from_diag(&[v])).collect()).unwrap()
    }

    #[test]
    fn materialize_two_by_two() {
        let (a, b, z) = (Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), Complex64::new(0.5, -1.0));
        let y = TranslatedLinearization::new(scalar_chain(&[a, b]), z).materialize();
        assert_eq!(y.row(0), vec![-z, a]);
        assert_eq!(y.row(1), vec![b, -z]);
    }

    #[test]
    fn product_edge_cases() {
        let f = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(product(&FactorChain::new(vec![f.clone()]).unwrap()), f);
        assert_eq!(product(&FactorChain::identities(4, 3)), ComplexMatrix::identity(4));
        assert!(FactorChain::new(vec![]).is_err());
        assert!(FactorChain::new(vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)]).is_err());
    }

    #[test]
    fn top_left_block_closed_form() {
        let chain = FactorChain::identities(1, 2);
        let t = top_left_inverse_block(&chain, c(2.0)).unwrap();
        assert!((t.get(0, 0) - c(-2.0 / 3.0)).norm() < 1e-15);
        assert_eq!(top_left_inverse_block(&chain, c(0.0)).unwrap_err(), Error::ZeroShift);
        // shift hits an eigenvalue: X = 1, M = 1, z = 1
        let err = top_left_inverse_block(&FactorChain::identities(2, 1), c(1.0)).unwrap_err();
        assert!(matches!(err, Error::NearSingular { .. }));
    }

    #[test]
    fn structured_solve_two_by_two() {
        let lin = TranslatedLinearization::new(FactorChain::identities(1, 2), c(2.0));
        let w = BlockVector::new(vec![vec![c(1.0)], vec![c(0.0)]]).unwrap();
        let u = structured_solve(&lin, &w).unwrap();
        assert!((u.block(1)[0] - c(-2.0 / 3.0)).norm() < 1e-15);
        assert!((u.block(2)[0] - c(-1.0 / 3.0)).norm() < 1e-15);
        let lin0 = lin.with_z(c(0.0));
        assert_eq!(structured_solve(&lin0, &w).unwrap_err(), Error::ZeroShift);
    }

    #[test]
    fn block_solve_matches_column_solves() {
        use crate::ensembles::{ChainSource, EnsembleSpec, EntryDistribution, SeedStream};
        for m in 1..=3 {
            let spec = EnsembleSpec::iid(5, m, EntryDistribution::ginibre()).unwrap();
            let lin = TranslatedLinearization::new(spec.sample_chain(SeedStream::new(m as u64)).unwrap(), Complex64::new(1.7, 0.4));
            let s = StructuredSolver::new(&lin).unwrap();
            let w: Vec<ComplexMatrix> =
                (0..m).map(|j| ComplexMatrix::from_fn(5, 3, |i, k| Complex64::new((i + j) as f64 - k as f64, 0.5 * k as f64))).collect();
            let u = s.solve_blocks(&w).unwrap();
            for k in 0..3 {
                let col = BlockVector::new(w.iter().map(|b| b.column(k)).collect()).unwrap();
                let expect = s.solve(&col).unwrap();
                for j in 0..m {
                    let err = norm2(&u[j].column(k).iter().zip(expect.block(j + 1)).map(|(a, b)| a - b).collect::<Vec<_>>());
                    assert!(err < 1e-12, "m = {m}, column {k}, block {j}: {err}");
                }
            }
            for (k, d) in s.row_distances().unwrap().iter().enumerate() {
                let expect = 1.0 / s.inverse_column(k).unwrap().norm();
                assert!((d - expect).abs() <= 1e-12 * expect, "m = {m}, row {k}");
            }
            assert!(s.solve_blocks(&w[..m - 1]).is_err());
        }
    }

    #[test]
    fn single_factor_allows_zero_shift() {
        let lin = TranslatedLinearization::new(
            FactorChain::new(vec![ComplexMatrix::from_real_diag(&[1.0, 2.0])]).unwrap(),
            c(0.0),
        );
        let w = BlockVector::new(vec![vec![c(1.0), c(1.0)]]).unwrap();
        let u = structured_solve(&lin, &w).unwrap();
        assert!((u.block(1)[1] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn multiplicity_scalar_and_permutation_cases() {
        let (a, b) = (Complex64::new(1.5, -0.5), Complex64::new(0.25, 2.0));
        let rep = verify_multiplicity(&scalar_chain(&[a, b]), MULTIPLICITY_CAP).unwrap();
        assert_eq!(rep.power_eigenvalues.len(), 2);
        assert!(rep.max_pairing_distance < 1e-13);
        assert!(rep.power_eigenvalues.iter().all(|l| (l - a * b).norm() < 1e-13));

        let rep = verify_multiplicity(&FactorChain::identities(2, 3), MULTIPLICITY_CAP).unwrap();
        assert_eq!(rep.power_eigenvalues.len(), 6);
        assert!(rep.max_pairing_distance < 1e-12);
        // eigenvalues of Y itself are the cube roots of unity
        let y = TranslatedLinearization::new(FactorChain::identities(2, 3), c(0.0)).materialize();
        for l in eigenvalues(&y).unwrap() {
            assert!((l.powu(3) - c(1.0)).norm() < 1e-12);
        }
        assert!(matches!(
            verify_multiplicity(&FactorChain::identities(101, 2), MULTIPLICITY_CAP),
            Err(Error::CapExceeded { size: 202, cap: 200 })
        ));
    }

    #[test]
    fn block_vector_validation() {
        assert!(BlockVector::new(vec![vec![c(1.0)], vec![]]).is_err());
        let v = BlockVector::from_flat(2, 2, &[c(3.0), c(0.0), c(0.0), c(4.0)]).unwrap();
        assert_eq!(v.norm(), 5.0);
        assert_eq!(v.block(2), &[c(0.0), c(4.0)]);
    }
}
