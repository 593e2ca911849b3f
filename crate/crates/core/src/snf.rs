//! Integer matrix normal forms: dense Smith normal form with unimodular
//! transforms, Hermite row reduction for lattice bases and membership, and a
//! sparse pipeline for the large, very sparse relation matrices of the group
//! presentations (Hermite first, then strip unit pivots, then a small dense
//! core).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zero(rows: usize, cols: usize) -> IntMat {
        IntMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> IntMat {
        let mut m = IntMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> IntMat {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = IntMat::zero(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j) + a * b;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }

    /// row_i -= q * row_k
    fn row_sub(&mut self, i: usize, k: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(i, j) - q * self.get(k, j);
            self.set(i, j, v);
        }
    }

    /// col_j -= q * col_k
    fn col_sub(&mut self, j: usize, k: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, j) - q * self.get(i, k);
            self.set(i, j, v);
        }
    }

    /// row_i += row_k
    fn row_add(&mut self, i: usize, k: usize) {
        for j in 0..self.cols {
            let v = self.get(i, j) + self.get(k, j);
            self.set(i, j, v);
        }
    }

    /// Determinant by fraction-free elimination; used in tests to witness
    /// unimodularity of the transforms.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if m.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m.get(i, k).is_zero()) else {
                    return BigInt::zero();
                };
                m.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(k, k) * m.get(i, j) - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, v);
                }
                m.set(i, k, BigInt::zero());
            }
            prev = m.get(k, k).clone();
        }
        sign * m.get(n - 1, n - 1).clone()
    }
}

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal with a
/// divisibility chain.
#[derive(Debug, Clone)]
pub struct Snf {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
}

/// Classic Smith reduction with full pivoting, preferring the smallest
/// pivot, tracking both transforms.
pub fn smith_normal_form(m: &IntMat) -> Snf {
    let mut d = m.clone();
    let mut u = IntMat::identity(m.rows);
    let mut v = IntMat::identity(m.cols);
    let n = m.rows.min(m.cols);
    for k in 0..n {
        'pivot: loop {
            // smallest nonzero entry of the trailing submatrix
            let mut best: Option<(usize, usize)> = None;
            for i in k..d.rows {
                for j in k..d.cols {
                    if d.get(i, j).is_zero() {
                        continue;
                    }
                    match &best {
                        None => best = Some((i, j)),
                        Some((bi, bj)) => {
                            if d.get(i, j).abs() < d.get(*bi, *bj).abs() {
                                best = Some((i, j));
                            }
                        }
                    }
                }
            }
            let Some((pi, pj)) = best else { break 'pivot };
            d.swap_rows(k, pi);
            u.swap_rows(k, pi);
            d.swap_cols(k, pj);
            v.swap_cols(k, pj);
            if d.get(k, k).is_negative() {
                d.negate_row(k);
                u.negate_row(k);
            }
            let mut dirty = false;
            for i in k + 1..d.rows {
                let q = div_round(d.get(i, k), d.get(k, k));
                d.row_sub(i, k, &q);
                u.row_sub(i, k, &q);
                if !d.get(i, k).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue 'pivot;
            }
            for j in k + 1..d.cols {
                let q = div_round(d.get(k, j), d.get(k, k));
                d.col_sub(j, k, &q);
                v.col_sub(j, k, &q);
                if !d.get(k, j).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue 'pivot;
            }
            // divisibility: fold a non-multiple into the pivot row
            let mut fixed = true;
            'search: for i in k + 1..d.rows {
                for j in k + 1..d.cols {
                    if !d.get(i, j).mod_floor(d.get(k, k)).is_zero() {
                        d.row_add(k, i);
                        u.row_add(k, i);
                        fixed = false;
                        break 'search;
                    }
                }
            }
            if fixed {
                break 'pivot;
            }
        }
    }
    Snf { u, d, v }
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // round-to-nearest keeps remainders at most |b|/2
    let two = BigInt::from(2);
    let (q, r) = a.div_mod_floor(b);
    if &r * &two > b.abs() {
        q + BigInt::one()
    } else {
        q
    }
}

/// Canonical Hermite form of the row lattice: one row per pivot column, a
/// positive leading entry, entries above each pivot reduced into
/// `[0, pivot)`. Rows of zeros are dropped.
pub fn hermite_rows(rows: Vec<Vec<BigInt>>, ncols: usize) -> Vec<Vec<BigInt>> {
    let mut pivots: BTreeMap<usize, Vec<BigInt>> = BTreeMap::new();
    for row in rows {
        insert_row(&mut pivots, row, ncols);
    }
    reduce_above(&mut pivots);
    pivots.into_values().collect()
}

fn lead_col(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|v| !v.is_zero())
}

fn insert_row(pivots: &mut BTreeMap<usize, Vec<BigInt>>, mut row: Vec<BigInt>, ncols: usize) {
    assert_eq!(row.len(), ncols);
    loop {
        let Some(c) = lead_col(&row) else { return };
        match pivots.get(&c) {
            None => {
                if row[c].is_negative() {
                    for v in row.iter_mut() {
                        *v = -v.clone();
                    }
                }
                pivots.insert(c, row);
                return;
            }
            Some(p) => {
                let e = p[c].clone().extended_gcd(&row[c]);
                // new pivot = x*p + y*row has lead gcd; the remainder row
                // (p[c]/g)*row - (row[c]/g)*p vanishes at c
                let pc_g = &p[c] / &e.gcd;
                let rc_g = &row[c] / &e.gcd;
                let p_old = p.clone();
                let mut new_p = vec![BigInt::zero(); ncols];
                let mut new_row = vec![BigInt::zero(); ncols];
                for j in 0..ncols {
                    new_p[j] = &e.x * &p_old[j] + &e.y * &row[j];
                    new_row[j] = &pc_g * &row[j] - &rc_g * &p_old[j];
                }
                pivots.insert(c, new_p);
                row = new_row;
            }
        }
    }
}

fn reduce_above(pivots: &mut BTreeMap<usize, Vec<BigInt>>) {
    let cols: Vec<usize> = pivots.keys().cloned().collect();
    for &c in &cols {
        let p = pivots[&c].clone();
        for (&c2, q) in pivots.iter_mut() {
            if c2 >= c {
                continue;
            }
            let f = q[c].div_floor(&p[c]);
            if f.is_zero() {
                continue;
            }
            for j in 0..q.len() {
                q[j] = &q[j] - &f * &p[j];
            }
        }
    }
}

/// Exact membership of a row in the integer row span of a Hermite basis.
pub fn row_in_span(row: &[BigInt], hnf: &[Vec<BigInt>]) -> bool {
    let pivots: BTreeMap<usize, &Vec<BigInt>> = hnf
        .iter()
        .filter_map(|r| lead_col(r).map(|c| (c, r)))
        .collect();
    let mut v = row.to_vec();
    loop {
        let Some(c) = lead_col(&v) else { return true };
        let Some(p) = pivots.get(&c) else { return false };
        let (q, r) = v[c].div_mod_floor(&p[c]);
        if !r.is_zero() {
            return false;
        }
        for j in 0..v.len() {
            v[j] = &v[j] - &q * &p[j];
        }
    }
}

/// Basis of the left kernel `{ x : x * M = 0 }` of a dense row list, via the
/// Hermite form of the augmented matrix `[M | I]`.
pub fn left_kernel(rows: &[Vec<BigInt>], ncols: usize) -> Vec<Vec<BigInt>> {
    let n = rows.len();
    let mut aug = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), ncols);
        let mut r = row.clone();
        r.extend((0..n).map(|j| if j == i { BigInt::one() } else { BigInt::zero() }));
        aug.push(r);
    }
    let h = hermite_rows(aug, ncols + n);
    h.into_iter()
        .filter(|r| r[..ncols].iter().all(|v| v.is_zero()))
        .map(|r| r[ncols..].to_vec())
        .collect()
}

// ---- sparse pipeline for the big, very sparse presentation matrices ----

/// A sparse integer row: (column, coefficient) sorted by column.
pub type SparseRow = Vec<(usize, BigInt)>;

/// Builds a sparse row from small integer entries.
pub fn sparse_row(entries: &[(usize, i64)]) -> SparseRow {
    let mut map: BTreeMap<usize, i64> = BTreeMap::new();
    for &(c, v) in entries {
        *map.entry(c).or_insert(0) += v;
    }
    map.into_iter()
        .filter(|&(_, v)| v != 0)
        .map(|(c, v)| (c, BigInt::from(v)))
        .collect()
}

fn sparse_lead(row: &SparseRow) -> Option<(usize, &BigInt)> {
    row.first().map(|(c, v)| (*c, v))
}

/// a + k * b
fn sparse_scale_add(a: &SparseRow, b: &SparseRow, k: &BigInt) -> SparseRow {
    let mut out = SparseRow::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some((ca, va)), Some((cb, vb))) => {
                if ca < cb {
                    out.push((*ca, va.clone()));
                    i += 1;
                } else if cb < ca {
                    let v = k * vb;
                    if !v.is_zero() {
                        out.push((*cb, v));
                    }
                    j += 1;
                } else {
                    let v = va + k * vb;
                    if !v.is_zero() {
                        out.push((*ca, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            (Some((ca, va)), None) => {
                out.push((*ca, va.clone()));
                i += 1;
            }
            (None, Some((cb, vb))) => {
                let v = k * vb;
                if !v.is_zero() {
                    out.push((*cb, v));
                }
                j += 1;
            }
            (None, None) => break,
        }
    }
    out
}

fn sparse_negate(row: &mut SparseRow) {
    for (_, v) in row.iter_mut() {
        *v = -v.clone();
    }
}

/// Hermite form of a sparse row lattice. Insertion runs Euclid on the
/// leading entries with rounded quotients, which keeps coefficient growth
/// modest on the incidence-like matrices of the presentations.
pub struct SparseHnf {
    pivots: BTreeMap<usize, SparseRow>,
}

impl SparseHnf {
    pub fn new(rows: impl IntoIterator<Item = SparseRow>) -> SparseHnf {
        let mut h = SparseHnf { pivots: BTreeMap::new() };
        for row in rows {
            h.insert(row);
        }
        h.reduce_above();
        h
    }

    fn insert(&mut self, mut row: SparseRow) {
        loop {
            let Some((c, lead)) = sparse_lead(&row).map(|(c, v)| (c, v.clone())) else {
                return;
            };
            match self.pivots.get_mut(&c) {
                None => {
                    if lead.is_negative() {
                        sparse_negate(&mut row);
                    }
                    self.pivots.insert(c, row);
                    return;
                }
                Some(p) => {
                    let pl = p.first().expect("pivot is nonzero").1.clone();
                    let q = div_round(&lead, &pl);
                    row = sparse_scale_add(&row, p, &(-q));
                    let still = row.first().map(|(cc, _)| *cc == c).unwrap_or(false);
                    if still {
                        // remainder lead is smaller: swap roles and continue
                        std::mem::swap(p, &mut row);
                        if p.first().expect("nonzero").1.is_negative() {
                            sparse_negate(p);
                        }
                    }
                }
            }
        }
    }

    fn reduce_above(&mut self) {
        let cols: Vec<usize> = self.pivots.keys().cloned().collect();
        for &c in &cols {
            let p = self.pivots[&c].clone();
            let pl = p.first().expect("nonzero").1.clone();
            for &c2 in &cols {
                if c2 >= c {
                    break;
                }
                let q = self.pivots.get_mut(&c2).unwrap();
                let entry = match q.binary_search_by_key(&c, |&(col, _)| col) {
                    Ok(idx) => q[idx].1.clone(),
                    Err(_) => continue,
                };
                let f = entry.div_floor(&pl);
                if !f.is_zero() {
                    *q = sparse_scale_add(q, &p, &(-f));
                }
            }
        }
    }

    pub fn contains(&self, row: &SparseRow) -> bool {
        let mut v = row.clone();
        loop {
            let Some((c, lead)) = sparse_lead(&v).map(|(c, l)| (c, l.clone())) else {
                return true;
            };
            let Some(p) = self.pivots.get(&c) else { return false };
            let pl = &p.first().expect("nonzero").1;
            let (q, r) = lead.div_mod_floor(pl);
            if !r.is_zero() {
                return false;
            }
            v = sparse_scale_add(&v, p, &(-q));
        }
    }

    pub fn pivot_rows(&self) -> impl Iterator<Item = (&usize, &SparseRow)> {
        self.pivots.iter()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Two canonical Hermite forms are equal iff the row lattices coincide.
    pub fn same_lattice(&self, other: &SparseHnf) -> bool {
        self.pivots == other.pivots
    }
}

/// A reduced basis of a sparse row lattice, built by eliminating with unit
/// pivots only (so coefficients never multiply by anything larger than one)
/// and keeping the small non-unit remainder in a Hermite form. The unit rows
/// end with their pivot as the only entry in any unit-pivot column, so
/// membership reduction is a single integer pass.
pub struct RowBasis {
    /// unit-pivot rows keyed by pivot column, normalized to a +1 pivot
    unit: BTreeMap<usize, SparseRow>,
    /// Hermite form of the remainder (entries only in non-unit columns)
    residual: SparseHnf,
    residual_cols: Vec<usize>,
    ncols: usize,
}

impl RowBasis {
    pub fn new(rows: impl IntoIterator<Item = SparseRow>, ncols: usize) -> RowBasis {
        // live rows, plus a column index of rows with an entry there
        let mut rows: Vec<SparseRow> = rows.into_iter().filter(|r| !r.is_empty()).collect();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); ncols];
        for (i, row) in rows.iter().enumerate() {
            debug_assert!(
                row.windows(2).all(|w| w[0].0 < w[1].0),
                "sparse rows must be sorted by column"
            );
            for (c, _) in row {
                col_rows[*c].push(i);
            }
        }
        let mut pivot_of_col: BTreeMap<usize, usize> = BTreeMap::new();
        let mut used: Vec<bool> = vec![false; rows.len()];
        loop {
            let mut progressed = false;
            for c in 0..ncols {
                if pivot_of_col.contains_key(&c) {
                    continue;
                }
                // a not-yet-used row with a unit entry at c, smallest support
                let mut best: Option<usize> = None;
                col_rows[c].retain(|&i| {
                    rows[i].binary_search_by_key(&c, |&(col, _)| col).is_ok()
                });
                for &i in &col_rows[c] {
                    if used[i] {
                        continue;
                    }
                    let Ok(idx) = rows[i].binary_search_by_key(&c, |&(col, _)| col) else {
                        continue;
                    };
                    if rows[i][idx].1.abs() != BigInt::one() {
                        continue;
                    }
                    match best {
                        None => best = Some(i),
                        Some(b) => {
                            if rows[i].len() < rows[b].len() {
                                best = Some(i);
                            }
                        }
                    }
                }
                let Some(pi) = best else { continue };
                // normalize the pivot to +1
                let idx = rows[pi].binary_search_by_key(&c, |&(col, _)| col).unwrap();
                if rows[pi][idx].1.is_negative() {
                    let mut neg = rows[pi].clone();
                    sparse_negate(&mut neg);
                    rows[pi] = neg;
                }
                let pivot = rows[pi].clone();
                // eliminate c from every other row
                let touching: Vec<usize> = col_rows[c].iter().copied().filter(|&i| i != pi).collect();
                for i in touching {
                    let Ok(idx) = rows[i].binary_search_by_key(&c, |&(col, _)| col) else {
                        continue;
                    };
                    let v = rows[i][idx].1.clone();
                    let updated = sparse_scale_add(&rows[i], &pivot, &(-v));
                    for (col, _) in &updated {
                        if rows[i].binary_search_by_key(col, |&(cc, _)| cc).is_err() {
                            col_rows[*col].push(i);
                        }
                    }
                    rows[i] = updated;
                }
                col_rows[c] = vec![pi];
                used[pi] = true;
                pivot_of_col.insert(c, pi);
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
        let unit: BTreeMap<usize, SparseRow> = pivot_of_col
            .iter()
            .map(|(&c, &i)| (c, rows[i].clone()))
            .collect();
        let residual_rows: Vec<SparseRow> = rows
            .iter()
            .enumerate()
            .filter(|(i, r)| !used[*i] && !r.is_empty())
            .map(|(_, r)| r.clone())
            .collect();
        let residual = SparseHnf::new(residual_rows);
        let residual_cols: Vec<usize> =
            (0..ncols).filter(|c| !unit.contains_key(c)).collect();
        RowBasis { unit, residual, residual_cols, ncols }
    }

    /// Reduces away the unit-pivot components; what is left lives in the
    /// non-unit columns.
    fn reduce_units(&self, row: &SparseRow) -> SparseRow {
        let mut v = row.clone();
        loop {
            let Some((c, coeff)) = v
                .iter()
                .find(|(c, _)| self.unit.contains_key(c))
                .map(|(c, coeff)| (*c, coeff.clone()))
            else {
                return v;
            };
            v = sparse_scale_add(&v, &self.unit[&c], &(-coeff));
        }
    }

    pub fn contains(&self, row: &SparseRow) -> bool {
        self.residual.contains(&self.reduce_units(row))
    }

    pub fn rank(&self) -> usize {
        self.unit.len() + self.residual.rank()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Invariant factors of the cokernel: each unit pivot splits off a
    /// trivial factor, and the remainder goes through the dense Smith form
    /// over the surviving columns.
    pub fn invariant_factors(&self) -> InvariantFactors {
        let col_index: BTreeMap<usize, usize> = self
            .residual_cols
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let core_cols = col_index.len();
        let rows: Vec<&SparseRow> = self.residual.pivots.values().collect();
        let mut m = IntMat::zero(rows.len(), core_cols);
        for (i, row) in rows.iter().enumerate() {
            for (c, v) in row.iter() {
                let j = *col_index
                    .get(c)
                    .expect("residual rows live in non-unit columns");
                m.set(i, j, v.clone());
            }
        }
        let s = smith_normal_form(&m);
        let diag = s.d.diagonal();
        let rank = diag.iter().filter(|v| !v.is_zero()).count();
        let torsion: Vec<BigInt> = diag.into_iter().filter(|v| *v > BigInt::one()).collect();
        InvariantFactors { torsion, free_rank: core_cols - rank }
    }
}

/// Invariant factors of the cokernel `Z^ncols / rowspace`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantFactors {
    /// Nontrivial torsion factors (each > 1), in divisibility order.
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

impl InvariantFactors {
    /// Rendered with one `0` per free summand first, then the torsion
    /// factors: `[0, 0, 2, 2]`.
    pub fn display_list(&self) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.free_rank];
        out.extend(self.torsion.iter().cloned());
        out
    }
}

/// Cokernel invariants of a sparse relation matrix.
pub fn invariant_factors(
    rows: impl IntoIterator<Item = SparseRow>,
    ncols: usize,
) -> InvariantFactors {
    RowBasis::new(rows, ncols).invariant_factors()
}
