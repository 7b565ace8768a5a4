//! Sparse exact linear algebra over arbitrary-precision rationals.
//!
//! Everything here is deterministic and exact: ranks, kernels and homology
//! dimensions are computed by rational Gaussian elimination, with a pivot
//! heuristic that prefers small entries to limit coefficient growth. Pivot
//! choice never affects results.

use crate::{Error, Q, Result};
use num::{BigInt, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Q>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn from_entries(rows: usize, cols: usize, it: impl IntoIterator<Item = ((usize, usize), Q)>) -> Self {
        let mut m = SparseMatrix::new(rows, cols);
        for ((r, c), v) in it {
            m.add(r, c, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_entries(n, n, (0..n).map(|i| ((i, i), Q::from_integer(1.into()))))
    }

    pub fn get(&self, r: usize, c: usize) -> Q {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: Q) {
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Q)> {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Q::zero(); self.rows];
        for ((r, c), a) in &self.entries {
            if !v[*c].is_zero() {
                out[*r] += a * &v[*c];
            }
        }
        out
    }

    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut out = SparseMatrix::new(self.rows, other.cols);
        // group rhs by row for sparse traversal
        let mut by_row: BTreeMap<usize, Vec<(usize, &Q)>> = BTreeMap::new();
        for ((r, c), v) in &other.entries {
            by_row.entry(*r).or_default().push((*c, v));
        }
        for ((r, k), a) in &self.entries {
            if let Some(row) = by_row.get(k) {
                for (c, b) in row {
                    out.add(*r, *c, a * *b);
                }
            }
        }
        out
    }

    /// Dense row-major copy, used by elimination.
    fn to_rows(&self) -> Vec<BTreeMap<usize, Q>> {
        let mut rows = vec![BTreeMap::new(); self.rows];
        for ((r, c), v) in &self.entries {
            rows[*r].insert(*c, v.clone());
        }
        rows
    }
}

fn entry_size(v: &Q) -> u64 {
    fn bits(i: &BigInt) -> u64 {
        i.abs().bits()
    }
    bits(v.numer()) + bits(v.denom())
}

/// Row echelon form data: pivot columns plus the reduced rows.
struct Echelon {
    rows: Vec<BTreeMap<usize, Q>>,
    pivots: Vec<usize>, // pivot column of each kept row, strictly increasing after sort
}

fn echelonize(m: &SparseMatrix) -> Echelon {
    let mut rows: Vec<BTreeMap<usize, Q>> = m.to_rows().into_iter().filter(|r| !r.is_empty()).collect();
    let mut done: Vec<BTreeMap<usize, Q>> = Vec::new();
    let mut pivots = Vec::new();
    while !rows.is_empty() {
        // pick the (row, leading column) whose pivot entry is smallest, among
        // rows with the leftmost leading column
        let lead = rows.iter().map(|r| *r.keys().next().unwrap()).min().unwrap();
        let mut best: Option<(usize, u64)> = None;
        for (i, r) in rows.iter().enumerate() {
            let c = *r.keys().next().unwrap();
            if c != lead {
                continue;
            }
            let sz = entry_size(&r[&c]);
            if best.map_or(true, |(_, bs)| sz < bs) {
                best = Some((i, sz));
            }
        }
        let (pi, _) = best.unwrap();
        let pivot_row = rows.swap_remove(pi);
        let pv = pivot_row[&lead].clone();
        for r in rows.iter_mut() {
            if let Some(v) = r.get(&lead).cloned() {
                let factor = &v / &pv;
                let mut sub: Vec<(usize, Q)> = Vec::new();
                for (c, a) in &pivot_row {
                    sub.push((*c, a * &factor));
                }
                for (c, a) in sub {
                    let cur = r.remove(&c).unwrap_or_else(Q::zero);
                    let nv = cur - a;
                    if !nv.is_zero() {
                        r.insert(c, nv);
                    }
                }
            }
        }
        rows.retain(|r| !r.is_empty());
        pivots.push(lead);
        done.push(pivot_row);
    }
    let mut order: Vec<usize> = (0..done.len()).collect();
    order.sort_by_key(|&i| pivots[i]);
    let rows = order.iter().map(|&i| done[i].clone()).collect();
    let pivots = {
        let mut p = pivots;
        p.sort_unstable();
        p
    };
    Echelon { rows, pivots }
}

/// Rank over ℚ.
pub fn rank(m: &SparseMatrix) -> usize {
    echelonize(m).pivots.len()
}

/// A basis of `ker m` as exact rational vectors of length `m.cols`.
pub fn kernel_basis(m: &SparseMatrix) -> Vec<Vec<Q>> {
    let ech = echelonize(m);
    // back-substitute to reduced echelon form
    let mut rows = ech.rows;
    for i in (0..rows.len()).rev() {
        let c = ech.pivots[i];
        let pv = rows[i][&c].clone();
        let normalized: BTreeMap<usize, Q> = rows[i].iter().map(|(k, v)| (*k, v / &pv)).collect();
        rows[i] = normalized;
        let row_i = rows[i].clone();
        for j in 0..i {
            if let Some(f) = rows[j].get(&c).cloned() {
                for (k, v) in &row_i {
                    let cur = rows[j].remove(k).unwrap_or_else(Q::zero);
                    let nv = cur - v * &f;
                    if !nv.is_zero() {
                        rows[j].insert(*k, nv);
                    }
                }
            }
        }
    }
    let pivot_set: BTreeSet<usize> = ech.pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![Q::zero(); m.cols];
        v[free] = Q::from_integer(1.into());
        for (i, pc) in ech.pivots.iter().enumerate() {
            if let Some(a) = rows[i].get(&free) {
                v[*pc] = -a.clone();
            }
        }
        basis.push(v);
    }
    basis
}

/// A finite window of a chain complex: per-degree bases and differentials
/// `d_n : C_n -> C_{n-1}`, indexed by the degree of the source.
#[derive(Clone, Debug)]
pub struct ComplexSlice {
    pub deg_min: i64,
    pub deg_max: i64,
    pub bases: BTreeMap<i64, Vec<String>>,
    pub differentials: BTreeMap<i64, SparseMatrix>,
}

impl ComplexSlice {
    pub fn dim(&self, n: i64) -> usize {
        self.bases.get(&n).map_or(0, |b| b.len())
    }

    pub fn differential(&self, n: i64) -> SparseMatrix {
        self.differentials
            .get(&n)
            .cloned()
            .unwrap_or_else(|| SparseMatrix::new(self.dim(n - 1), self.dim(n)))
    }

    /// Checks `d_{n-1} ∘ d_n = 0` on every interior degree of the window.
    pub fn validate(&self) -> Result<()> {
        for n in self.deg_min + 1..=self.deg_max {
            let dn = self.differential(n);
            let dn1 = self.differential(n - 1);
            if dn1.cols != dn.rows {
                return Err(Error::D2Violation(format!(
                    "differential shape mismatch at degree {n}: d_{} has {} rows, d_{} has {} cols",
                    n,
                    dn.rows,
                    n - 1,
                    dn1.cols
                )));
            }
            let prod = dn1.mul(&dn);
            if !prod.is_zero() {
                return Err(Error::D2Violation(format!("d∘d != 0 from degree {n}")));
            }
        }
        Ok(())
    }
}

/// Homology dimensions of a complex window. Degrees at the window edge only
/// bound homology from below, so they are reported separately.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyDims {
    pub dims: BTreeMap<i64, usize>,
    pub edges: BTreeSet<i64>,
}

/// For each degree `n` in the window, `dim ker d_n - rank d_{n+1}`.
/// Degrees `deg_min` and `deg_max` are flagged as edges: truncation destroys
/// exactness there, so the numbers are lower bounds, not Betti numbers.
pub fn homology_dims(c: &ComplexSlice) -> Result<HomologyDims> {
    c.validate()?;
    let mut dims = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for n in c.deg_min..=c.deg_max {
        let dn = c.differential(n);
        let ker = c.dim(n) - rank(&dn);
        let im = if n < c.deg_max { rank(&c.differential(n + 1)) } else { 0 };
        dims.insert(n, ker - im);
        if n == c.deg_min || n == c.deg_max {
            edges.insert(n);
        }
    }
    Ok(HomologyDims { dims, edges })
}
