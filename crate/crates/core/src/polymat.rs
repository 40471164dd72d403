//! Polynomial matrices over ℚ[ξ]: evaluation, determinants, rank profiles,
//! the Smith normal form, and two-variable matrices Φ(ζ, η) with the
//! ∂Φ(ξ) = Φ(−ξ, ξ) map.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::poly::{rat_from_f64, rat_to_f64, Poly, Rational};

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Poly>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(PolyMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix { rows, cols, entries: vec![Poly::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Poly::one() } else { Poly::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        PolyMatrix { rows, cols, entries }
    }

    /// Build from nested rows; `cols` is needed when there are no rows.
    pub fn from_rows(rows: Vec<Vec<Poly>>, cols: usize) -> Result<Self> {
        let r = rows.len();
        let mut entries = Vec::with_capacity(r * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Ok(PolyMatrix { rows: r, cols, entries })
    }

    /// Integer-coefficient convenience constructor: `rows[i][j]` lists ascending coefficients.
    pub fn from_ints(rows: &[&[&[i64]]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows: Vec<Vec<Poly>> =
            rows.iter().map(|r| r.iter().map(|c| Poly::from_ints(c)).collect()).collect();
        Self::from_rows(rows, cols).expect("ragged integer matrix")
    }

    /// Constant matrix with the exact rational value of each float entry.
    pub fn from_real(m: &RMat) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Poly::constant(rat_from_f64(m[(i, j)])))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Poly) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn row(&self, i: usize) -> &[Poly] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest entry degree; `None` for the zero matrix.
    pub fn degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(Poly::degree).max()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// M(−ξ).
    pub fn reflect(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).reflect())
    }

    pub fn mul(&self, rhs: &PolyMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Poly::zero();
            for k in 0..self.cols {
                let a = self.get(i, k);
                let b = rhs.get(k, j);
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(a * b);
                }
            }
            acc
        }))
    }

    pub fn add(&self, rhs: &PolyMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch("add".into()));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j)))
    }

    pub fn sub(&self, rhs: &PolyMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch("sub".into()));
        }
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j)))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).scale(c))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self.get(idx[i], j).clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]).clone())
    }

    pub fn vstack(&self, other: &PolyMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch("vstack".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(PolyMatrix { rows: self.rows + other.rows, cols: self.cols, entries })
    }

    pub fn hstack(&self, other: &PolyMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch("hstack".into()));
        }
        Ok(Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        }))
    }

    /// Real coefficient matrix of ξ^k.
    pub fn coeff_matrix(&self, k: usize) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| rat_to_f64(&self.get(i, j).coeff(k)))
    }

    /// Exact coefficient of ξ^k in entry (i, j).
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> Rational {
        self.get(i, j).coeff(k)
    }

    /// Entrywise evaluation at a complex point.
    pub fn eval(&self, z: Complex64) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval_complex(z))
    }

    /// Exact determinant (fraction-free Bareiss elimination over ℚ[ξ]).
    pub fn det(&self) -> Result<Poly> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Poly::one());
        }
        let mut a: Vec<Vec<Poly>> = (0..n).map(|i| self.row(i).to_vec()).collect();
        let mut negate = false;
        let mut prev = Poly::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        negate = !negate;
                    }
                    None => return Ok(Poly::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                    a[i][j] = num.exact_div(&prev).expect("Bareiss division is exact");
                }
                a[i][k] = Poly::zero();
            }
            prev = a[k][k].clone();
        }
        let d = a[n - 1][n - 1].clone();
        Ok(if negate { -d } else { d })
    }

    /// Determinant of the submatrix keeping `rows` and `cols`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Poly {
        self.select_rows(rows).select_cols(cols).det().expect("square minor")
    }

    /// Adjugate of a square matrix: `adj(P) P = det(P) I`.
    pub fn adjugate(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        Ok(Self::from_fn(n, n, |i, j| {
            // cofactor C_ji
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let m = self.minor(&rows, &cols);
            if (i + j) % 2 == 1 {
                -m
            } else {
                m
            }
        }))
    }

    /// Rank over the field of rational functions.
    pub fn normal_rank(&self) -> usize {
        self.smith_form().invariant_factors.len()
    }

    /// Numerical rank of P(λ): singular values below `tol · σ_max` count as zero.
    pub fn rank_at(&self, z: Complex64, tol: f64) -> usize {
        linalg::numerical_rank(&self.eval(z), tol)
    }

    /// `det` is a nonzero constant.
    pub fn is_unimodular(&self) -> bool {
        self.is_square() && self.det().map(|d| !d.is_zero() && d.is_constant()).unwrap_or(false)
    }

    pub fn smith_form(&self) -> SmithDecomposition {
        SmithBuilder::new(self).run()
    }

    /// Entries converted to floating point coefficient lists.
    pub fn to_f64_entries(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.rows).map(|i| self.row(i).iter().map(Poly::to_f64).collect()).collect()
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "] ({}x{})", self.rows, self.cols)
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for PolyMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Poly]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Poly>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        PolyMatrix::from_rows(rows, cols).map_err(serde::de::Error::custom)
    }
}

/// `P = U · S · V` with `U`, `V` unimodular and `S = [diag(d₁..d_r) 0; 0 0]`.
///
/// The inverses `u_inv = U⁻¹` and `v_inv = V⁻¹` are tracked alongside, so
/// `u_inv · P · v_inv = S`.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: PolyMatrix,
    pub s: PolyMatrix,
    pub v: PolyMatrix,
    pub u_inv: PolyMatrix,
    pub v_inv: PolyMatrix,
    /// Monic nonzero diagonal entries of `S`, each dividing the next.
    pub invariant_factors: Vec<Poly>,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Invariant factors of positive degree.
    pub fn nontrivial_factors(&self) -> Vec<Poly> {
        self.invariant_factors.iter().filter(|d| !d.is_constant()).cloned().collect()
    }

    /// Product of all invariant factors; its roots are where the rank drops.
    pub fn factor_product(&self) -> Poly {
        self.invariant_factors.iter().fold(Poly::one(), |acc, d| &acc * d)
    }
}

struct SmithBuilder {
    a: Vec<Vec<Poly>>,
    rows: usize,
    cols: usize,
    // tracked so that L·P·R = S, P = L_inv·S·R_inv
    l: Vec<Vec<Poly>>,
    l_inv: Vec<Vec<Poly>>,
    r: Vec<Vec<Poly>>,
    r_inv: Vec<Vec<Poly>>,
}

fn ident(n: usize) -> Vec<Vec<Poly>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Poly::one() } else { Poly::zero() }).collect())
        .collect()
}

fn to_matrix(v: &[Vec<Poly>], rows: usize, cols: usize) -> PolyMatrix {
    PolyMatrix::from_fn(rows, cols, |i, j| v[i][j].clone())
}

impl SmithBuilder {
    fn new(p: &PolyMatrix) -> Self {
        let (rows, cols) = p.shape();
        SmithBuilder {
            a: (0..rows).map(|i| p.row(i).to_vec()).collect(),
            rows,
            cols,
            l: ident(rows),
            l_inv: ident(rows),
            r: ident(cols),
            r_inv: ident(cols),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.l.swap(i, j);
        for row in self.l_inv.iter_mut() {
            row.swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in self.a.iter_mut() {
            row.swap(i, j);
        }
        for row in self.r.iter_mut() {
            row.swap(i, j);
        }
        self.r_inv.swap(i, j);
    }

    /// row_i += c · row_j
    fn add_row(&mut self, i: usize, j: usize, c: &Poly) {
        if c.is_zero() {
            return;
        }
        for k in 0..self.cols {
            let t = &self.a[j][k] * c;
            self.a[i][k] = &self.a[i][k] + &t;
        }
        for k in 0..self.rows {
            let t = &self.l[j][k] * c;
            self.l[i][k] = &self.l[i][k] + &t;
        }
        // L_inv ← L_inv · (I − c e_i e_jᵀ): column j −= c · column i
        for row in self.l_inv.iter_mut() {
            let t = &row[i] * c;
            row[j] = &row[j] - &t;
        }
    }

    /// col_j += c · col_i
    fn add_col(&mut self, j: usize, i: usize, c: &Poly) {
        if c.is_zero() {
            return;
        }
        for row in self.a.iter_mut() {
            let t = &row[i] * c;
            row[j] = &row[j] + &t;
        }
        for row in self.r.iter_mut() {
            let t = &row[i] * c;
            row[j] = &row[j] + &t;
        }
        // R_inv ← (I − c e_i e_jᵀ) · R_inv: row i −= c · row j
        for k in 0..self.cols {
            let t = &self.r_inv[j][k] * c;
            self.r_inv[i][k] = &self.r_inv[i][k] - &t;
        }
    }

    fn scale_row(&mut self, i: usize, c: &Rational) {
        for k in 0..self.cols {
            self.a[i][k] = self.a[i][k].scale(c);
        }
        for k in 0..self.rows {
            self.l[i][k] = self.l[i][k].scale(c);
        }
        let inv = c.recip();
        for row in self.l_inv.iter_mut() {
            row[i] = row[i].scale(&inv);
        }
    }

    /// Minimal-degree nonzero entry in the trailing block, ties by (row, col).
    fn pick_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                if let Some(d) = self.a[i][j].degree() {
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    fn run(mut self) -> SmithDecomposition {
        let mut factors = Vec::new();
        for t in 0..self.rows.min(self.cols) {
            loop {
                let Some((pi, pj)) = self.pick_pivot(t) else {
                    return self.finish(factors);
                };
                self.swap_rows(t, pi);
                self.swap_cols(t, pj);
                let pivot = self.a[t][t].clone();
                let mut clean = true;
                for i in t + 1..self.rows {
                    if self.a[i][t].is_zero() {
                        continue;
                    }
                    let (q, r) = self.a[i][t].div_rem(&pivot);
                    self.add_row(i, t, &-q);
                    clean &= r.is_zero();
                }
                for j in t + 1..self.cols {
                    if self.a[t][j].is_zero() {
                        continue;
                    }
                    let (q, r) = self.a[t][j].div_rem(&pivot);
                    self.add_col(j, t, &-q);
                    clean &= r.is_zero();
                }
                if !clean {
                    continue;
                }
                let offender = (t + 1..self.rows).find(|&i| {
                    (t + 1..self.cols).any(|j| !pivot.divides(&self.a[i][j]))
                });
                if let Some(i) = offender {
                    self.add_row(t, i, &Poly::one());
                    continue;
                }
                break;
            }
            let lc = self.a[t][t].leading();
            if !lc.is_one() {
                self.scale_row(t, &lc.recip());
            }
            factors.push(self.a[t][t].clone());
        }
        self.finish(factors)
    }

    fn finish(self, factors: Vec<Poly>) -> SmithDecomposition {
        let (r, c) = (self.rows, self.cols);
        SmithDecomposition {
            u: to_matrix(&self.l_inv, r, r),
            s: to_matrix(&self.a, r, c),
            v: to_matrix(&self.r_inv, c, c),
            u_inv: to_matrix(&self.l, r, r),
            v_inv: to_matrix(&self.r, c, c),
            invariant_factors: factors,
        }
    }
}

/// Two-variable polynomial matrix Φ(ζ, η) = Σ Φ_jk ζ^j η^k with exact
/// rational coefficient matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoVarPolyMatrix {
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<(usize, usize), Vec<Rational>>,
}

impl TwoVarPolyMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        TwoVarPolyMatrix { rows, cols, coeffs: BTreeMap::new() }
    }

    /// Constant Φ equal to `s`.
    pub fn constant(s: &RMat) -> Self {
        let mut out = Self::new(s.nrows(), s.ncols());
        out.set(0, 0, s.iter_rows_exact());
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn set(&mut self, j: usize, k: usize, m: Vec<Rational>) {
        if m.iter().all(Zero::is_zero) {
            self.coeffs.remove(&(j, k));
        } else {
            self.coeffs.insert((j, k), m);
        }
    }

    pub fn add_term(&mut self, j: usize, k: usize, m: &[Rational]) {
        assert_eq!(m.len(), self.rows * self.cols);
        let mut cur = self
            .coeffs
            .get(&(j, k))
            .cloned()
            .unwrap_or_else(|| vec![Rational::zero(); self.rows * self.cols]);
        for (c, v) in cur.iter_mut().zip(m) {
            *c += v;
        }
        self.set(j, k, cur);
    }

    /// Φ_jk as a float matrix (zero when absent).
    pub fn coeff(&self, j: usize, k: usize) -> RMat {
        match self.coeffs.get(&(j, k)) {
            Some(v) => RMat::from_row_iterator(self.rows, self.cols, v.iter().map(rat_to_f64)),
            None => RMat::zeros(self.rows, self.cols),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<Rational>)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Φ_jk = Φ_kjᵀ for all (j, k).
    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        self.coeffs.iter().all(|(&(j, k), m)| {
            let Some(t) = self.coeffs.get(&(k, j)) else { return false };
            (0..n).all(|a| (0..n).all(|b| m[a * n + b] == t[b * n + a]))
        })
    }

    /// ∂Φ(ξ) = Φ(−ξ, ξ) = Σ Φ_jk (−1)^j ξ^{j+k}.
    pub fn partial_op(&self) -> PolyMatrix {
        let (r, c) = (self.rows, self.cols);
        let mut grid: Vec<Vec<Rational>> = vec![Vec::new(); r * c];
        for (&(j, k), m) in &self.coeffs {
            let deg = j + k;
            let sign_neg = j % 2 == 1;
            for (idx, v) in m.iter().enumerate() {
                let cell = &mut grid[idx];
                if cell.len() <= deg {
                    cell.resize(deg + 1, Rational::zero());
                }
                if sign_neg {
                    cell[deg] -= v;
                } else {
                    cell[deg] += v;
                }
            }
        }
        PolyMatrix {
            rows: r,
            cols: c,
            entries: grid.into_iter().map(Poly::new).collect(),
        }
    }

    /// Evaluate Φ(ζ, η) at complex points.
    pub fn eval(&self, zeta: Complex64, eta: Complex64) -> CMat {
        let mut out = CMat::zeros(self.rows, self.cols);
        for (&(j, k), _) in &self.coeffs {
            let w = zeta.powu(j as u32) * eta.powu(k as u32);
            out += linalg::to_complex(&self.coeff(j, k)) * w;
        }
        out
    }
}

trait ExactRows {
    fn iter_rows_exact(&self) -> Vec<Rational>;
}

impl ExactRows for RMat {
    fn iter_rows_exact(&self) -> Vec<Rational> {
        let mut v = Vec::with_capacity(self.len());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                v.push(rat_from_f64(self[(i, j)]));
            }
        }
        v
    }
}

/// Φ(ζ, η) = M₁ᵀ(ζ) Σ M₂(η), computed exactly (Σ entries taken at their exact
/// binary values).
pub fn two_var_from_images(
    m1: &PolyMatrix,
    sigma: &RMat,
    m2: &PolyMatrix,
) -> Result<TwoVarPolyMatrix> {
    let w = sigma.nrows();
    if sigma.ncols() != w || m1.nrows() != w || m2.nrows() != w {
        return Err(Error::ShapeMismatch(format!(
            "Σ is {}x{}, M₁ has {} rows, M₂ has {} rows",
            sigma.nrows(),
            sigma.ncols(),
            m1.nrows(),
            m2.nrows()
        )));
    }
    let s = sigma.iter_rows_exact();
    let (a, b) = (m1.ncols(), m2.ncols());
    let mut out = TwoVarPolyMatrix::new(a, b);
    let d1 = m1.degree().map_or(0, |d| d + 1);
    let d2 = m2.degree().map_or(0, |d| d + 1);
    for j in 0..d1 {
        // (M1_j)ᵀ Σ
        let left: Vec<Rational> = (0..a * w)
            .map(|idx| {
                let (r, cc) = (idx / w, idx % w);
                (0..w).fold(Rational::zero(), |acc, l| acc + m1.coeff(l, r, j) * &s[l * w + cc])
            })
            .collect();
        for k in 0..d2 {
            let term: Vec<Rational> = (0..a * b)
                .map(|idx| {
                    let (r, cc) = (idx / b, idx % b);
                    (0..w).fold(Rational::zero(), |acc, l| acc + &left[r * w + l] * m2.coeff(l, cc, k))
                })
                .collect();
            out.add_term(j, k, &term);
        }
    }
    Ok(out)
}
