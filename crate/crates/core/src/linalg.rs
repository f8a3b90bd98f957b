//! Direct solvers: dense LU, stationary distribution of a BSCC, reachability
//! probabilities and the full-chain stationary distribution.
//!
//! These are the exact building blocks of the classic method and the
//! reference every approximate result in the test suite is checked against.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::chain::{ChainAccess, MarkovChain, StateId};
use crate::graph::{bsccs, can_reach_mask};
use crate::sum::NeumaierSum;

/// Pivots smaller than this in magnitude are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is singular (no usable pivot in column {0})")]
    Singular(usize),
    #[error("dimension mismatch: matrix {rows}x{cols}, right-hand side {rhs}")]
    Dimension {
        rows: usize,
        cols: usize,
        rhs: usize,
    },
    #[error("empty target set")]
    EmptyTarget,
    #[error("initial state {0} out of range")]
    BadInitial(usize),
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .collect::<NeumaierSum>()
                    .value()
            })
            .collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors `PA = LU` of a square matrix.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors `a` with partial pivoting.
    pub fn new(a: &DenseMatrix) -> Result<Self, SolveError> {
        let n = a.rows;
        if a.cols != n {
            return Err(SolveError::Dimension {
                rows: a.rows,
                cols: a.cols,
                rhs: n,
            });
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot < PIVOT_TOLERANCE {
                return Err(SolveError::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f == 0.0 {
                    continue;
                }
                let (upper, lower) = lu.data.split_at_mut(i * n);
                let pivot_row = &upper[k * n + k + 1..k * n + n];
                for (x, &v) in lower[k + 1..n].iter_mut().zip(pivot_row) {
                    *x -= f * v;
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(SolveError::Dimension {
                rows: n,
                cols: n,
                rhs: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut acc = NeumaierSum::new();
            acc.add(x[i]);
            for j in 0..i {
                acc.add(-self.lu[(i, j)] * x[j]);
            }
            x[i] = acc.value();
        }
        for k in (0..n).rev() {
            let mut acc = NeumaierSum::new();
            acc.add(x[k]);
            for j in k + 1..n {
                acc.add(-self.lu[(k, j)] * x[j]);
            }
            x[k] = acc.value() / self.lu[(k, k)];
        }
        Ok(x)
    }

    /// [`solve`](Self::solve) followed by iterative refinement against `a`
    /// (the matrix that was factored), with residuals computed exactly up to
    /// the final rounding. Recovers close to full precision on
    /// ill-conditioned systems such as nearly decomposable chains.
    pub fn solve_refined(&self, a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let mut x = self.solve(b)?;
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_ROUNDS {
            let r = residual(a, &x, b);
            let dx = self.solve(&r)?;
            let step = dx.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(step < last) {
                break;
            }
            for (v, d) in x.iter_mut().zip(&dx) {
                *v += d;
            }
            if step <= 4.0 * f64::EPSILON * scale {
                break;
            }
            last = step;
        }
        Ok(x)
    }
}

const REFINE_ROUNDS: usize = 8;

/// `b − A x` with exact products (via FMA) and compensated accumulation.
fn residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.rows)
        .map(|i| {
            let mut acc = NeumaierSum::new();
            acc.add(b[i]);
            for (&aij, &xj) in a.row(i).iter().zip(x) {
                let p = aij * xj;
                acc.add(-p);
                acc.add(-aij.mul_add(xj, -p));
            }
            acc.value()
        })
        .collect()
}

/// Solves `A x = b` by LU decomposition with partial pivoting and
/// iterative refinement.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    if b.len() != a.rows {
        return Err(SolveError::Dimension {
            rows: a.rows,
            cols: a.cols,
            rhs: b.len(),
        });
    }
    LuFactors::new(a)?.solve_refined(a, b)
}

/// Stationary distribution of a chain that is a single BSCC.
///
/// Solves the transposed balance equations `(Pᵀ − I) π = 0` with the last
/// equation replaced by `Σ π = 1`.
pub fn stationary_exact(bscc: &MarkovChain) -> Result<Vec<f64>, SolveError> {
    let n = bscc.num_states();
    let mut a = DenseMatrix::zeros(n, n);
    for s in bscc.states() {
        for (t, p) in bscc.successors(s).iter() {
            a[(t.index(), s.index())] += p;
        }
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    lu_solve(&a, &b)
}

/// Probability of eventually reaching `targets` from every state.
pub fn reachability_exact(
    chain: &MarkovChain,
    targets: &[StateId],
) -> Result<Vec<f64>, SolveError> {
    if targets.is_empty() {
        return Err(SolveError::EmptyTarget);
    }
    let n = chain.num_states();
    let can_reach = can_reach_mask(chain, targets);
    let mut in_target = vec![false; n];
    for &t in targets {
        in_target[t.index()] = true;
    }
    let mut result = vec![0.0; n];
    let mut local = vec![usize::MAX; n];
    let mut unknown = Vec::new();
    for s in 0..n {
        if in_target[s] {
            result[s] = 1.0;
        } else if can_reach[s] {
            local[s] = unknown.len();
            unknown.push(s);
        }
    }
    if unknown.is_empty() {
        return Ok(result);
    }
    let m = unknown.len();
    let mut a = DenseMatrix::identity(m);
    let mut b = vec![0.0; m];
    for (i, &s) in unknown.iter().enumerate() {
        let mut rhs = NeumaierSum::new();
        for (t, p) in chain.successors(StateId(s)).iter() {
            let ti = t.index();
            if in_target[ti] {
                rhs.add(p);
            } else if local[ti] != usize::MAX {
                a[(i, local[ti])] -= p;
            }
        }
        b[i] = rhs.value();
    }
    let x = lu_solve(&a, &b)?;
    for (i, &s) in unknown.iter().enumerate() {
        result[s] = x[i].clamp(0.0, 1.0);
    }
    Ok(result)
}

/// `P_from[◊R]` for every BSCC in `bsccs` (which must be all BSCCs of the
/// chain), from a single factorization.
///
/// Solves `(I − P_TT)ᵀ y = e_from` over the transient states `T` reachable
/// from `from`, so `y` holds expected visit counts, then sums `y(t)·P(t, R)`.
pub fn bscc_reach_exact(
    chain: &MarkovChain,
    bsccs: &[Vec<StateId>],
    from: StateId,
) -> Result<Vec<f64>, SolveError> {
    let n = chain.num_states();
    if from.index() >= n {
        return Err(SolveError::BadInitial(from.index()));
    }
    let mut owner = vec![usize::MAX; n];
    for (r, members) in bsccs.iter().enumerate() {
        for &s in members {
            owner[s.index()] = r;
        }
    }
    let mut result = vec![0.0; bsccs.len()];
    if owner[from.index()] != usize::MAX {
        result[owner[from.index()]] = 1.0;
        return Ok(result);
    }
    let mut local = vec![usize::MAX; n];
    let mut transient = vec![from];
    local[from.index()] = 0;
    let mut head = 0;
    while head < transient.len() {
        let s = transient[head];
        head += 1;
        for (t, _) in chain.successors(s).iter() {
            if owner[t.index()] == usize::MAX && local[t.index()] == usize::MAX {
                local[t.index()] = transient.len();
                transient.push(t);
            }
        }
    }
    let m = transient.len();
    let mut a = DenseMatrix::identity(m);
    for (i, &s) in transient.iter().enumerate() {
        for (t, p) in chain.successors(s).iter() {
            let j = local[t.index()];
            if j != usize::MAX {
                a[(j, i)] -= p;
            }
        }
    }
    let mut e = vec![0.0; m];
    e[0] = 1.0;
    let visits = LuFactors::new(&a)?.solve_refined(&a, &e)?;
    let mut acc = vec![NeumaierSum::new(); bsccs.len()];
    for (i, &s) in transient.iter().enumerate() {
        for (t, p) in chain.successors(s).iter() {
            let r = owner[t.index()];
            if r != usize::MAX {
                acc[r].add(visits[i] * p);
            }
        }
    }
    for (x, a) in result.iter_mut().zip(&acc) {
        *x = a.value().clamp(0.0, 1.0);
    }
    Ok(result)
}

/// Stationary distribution of `chain` from `initial`, assembled as
/// `Σ_R P[◊R] · π_R` over all BSCCs.
pub fn stationary_full_exact(
    chain: &MarkovChain,
    initial: StateId,
) -> Result<Vec<f64>, SolveError> {
    let n = chain.num_states();
    if initial.index() >= n {
        return Err(SolveError::BadInitial(initial.index()));
    }
    let all = bsccs(chain);
    let weights = bscc_reach_exact(chain, &all, initial)?;
    let mut result = vec![0.0; n];
    for (bscc, &weight) in all.iter().zip(&weights) {
        if weight == 0.0 {
            continue;
        }
        let restricted = crate::chain::restrict(chain, bscc).expect("BSCC is closed");
        let pi = stationary_exact(&restricted.chain)?;
        for (local, &g) in restricted.to_global.iter().enumerate() {
            result[g.index()] = weight * pi[local];
        }
    }
    Ok(result)
}

/// `max_i |x_i − y_i|`.
pub fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Applies one left multiplication `πᵀ P` (distribution step).
pub fn left_multiply<C: ChainAccess + ?Sized>(chain: &C, pi: &[f64]) -> Vec<f64> {
    let n = chain.num_states();
    let mut acc = vec![NeumaierSum::new(); n];
    for (s, &mass) in pi.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for (t, p) in chain.successors(StateId(s)).iter() {
            acc[t.index()].add(mass * p);
        }
    }
    acc.iter().map(NeumaierSum::value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::restrict;
    use crate::chain::tests::fig1;

    #[test]
    fn lu_identity_and_diagonal() {
        let x = lu_solve(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(lu_solve(&a, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn lu_singular() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(lu_solve(&a, &[1.0, 2.0]), Err(SolveError::Singular(1)));
    }

    #[test]
    fn lu_residual_is_small() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![3.0, -1.0, 0.5],
            vec![1.0, 1.0, 1.0],
        ]);
        let b = [1.0, 2.0, 3.0];
        let x = lu_solve(&a, &b).unwrap();
        assert!(sup_distance(&a.mul_vec(&x), &b) <= 1e-8);
    }

    #[test]
    fn stationary_examples() {
        let p = MarkovChain::new(vec![vec![(0, 1.0)]], None).unwrap();
        assert_eq!(stationary_exact(&p).unwrap(), vec![1.0]);

        let q = restrict(&fig1(), &[StateId(2), StateId(3)]).unwrap().chain;
        let pi = stationary_exact(&q).unwrap();
        assert!((pi[0] - 1.0 / 6.0).abs() < 1e-12 && (pi[1] - 5.0 / 6.0).abs() < 1e-12);

        let flip = MarkovChain::new(vec![vec![(1, 1.0)], vec![(0, 1.0)]], None).unwrap();
        let pi = stationary_exact(&flip).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reachability_examples() {
        let c = fig1();
        let r = reachability_exact(&c, &[StateId(1)]).unwrap();
        assert_eq!(r, vec![0.5, 1.0, 0.0, 0.0]);
        let r = reachability_exact(&c, &[StateId(2), StateId(3)]).unwrap();
        assert_eq!(r[0], 0.5);
        assert_eq!(reachability_exact(&c, &[]), Err(SolveError::EmptyTarget));
    }

    #[test]
    fn fig1_full() {
        let pi = stationary_full_exact(&fig1(), StateId(0)).unwrap();
        let want = [0.0, 0.5, 1.0 / 12.0, 5.0 / 12.0];
        assert!(sup_distance(&pi, &want) < 1e-12, "{pi:?}");
    }

    #[test]
    fn started_inside_a_bscc() {
        let pi = stationary_full_exact(&fig1(), StateId(3)).unwrap();
        assert!(sup_distance(&pi, &[0.0, 0.0, 1.0 / 6.0, 5.0 / 6.0]) < 1e-12);
    }

    #[test]
    fn bscc_reach_matches_per_target_solves() {
        let c = fig1();
        let all = bsccs(&c);
        let w = bscc_reach_exact(&c, &all, StateId(0)).unwrap();
        for (r, members) in all.iter().enumerate() {
            let single = reachability_exact(&c, members).unwrap()[0];
            assert!((w[r] - single).abs() < 1e-15);
        }
        assert_eq!(
            bscc_reach_exact(&c, &all, StateId(1)).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn lu_factors_reuse() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]);
        let f = LuFactors::new(&a).unwrap();
        for b in [[1.0, 0.0], [0.0, 1.0], [5.0, 5.0]] {
            let x = f.solve(&b).unwrap();
            assert!(sup_distance(&a.mul_vec(&x), &b) < 1e-14);
        }
    }

    #[test]
    fn left_multiply_moves_mass() {
        let c = fig1();
        assert_eq!(
            left_multiply(&c, &[1.0, 0.0, 0.0, 0.0]),
            vec![0.0, 0.5, 0.5, 0.0]
        );
    }
}
