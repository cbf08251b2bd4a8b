use serde_json::{json, Value};

use crate::combinat::tarjan_scc;
use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec, PrimeField, RationalField};

/// Dense square matrix over an exact field, carrying its (sorted, distinct)
/// index labels so submatrices keep the original names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<F: Field> {
    field: F,
    index: Vec<usize>,
    entries: Vec<F::Elem>,
}

/// Rank-one factorization witness for a cut X: A[X,X̄] = p·qᵀ with qᵀ the
/// first nonzero row, and A[X̄,X] = u·vᵀ with u the first nonzero column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutWitness<F: Field> {
    pub x: Vec<usize>,
    pub p: Vec<F::Elem>,
    pub q: Vec<F::Elem>,
    pub u: Vec<F::Elem>,
    pub v: Vec<F::Elem>,
}

fn check_index(index: &[usize]) -> Result<()> {
    if index.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadInput("index labels must be sorted and distinct".into()));
    }
    Ok(())
}

/// Determinant of a row-major n×n entry slice.
pub fn det_entries<F: Field>(f: &F, n: usize, entries: &[F::Elem]) -> F::Elem {
    debug_assert_eq!(entries.len(), n * n);
    if let Some(d) = f.det_hook(n, entries) {
        return d;
    }
    let mut m = entries.to_vec();
    let mut neg = false;
    let mut det = f.one();
    for k in 0..n {
        let Some(pr) = (k..n).find(|&r| !f.is_zero(&m[r * n + k])) else {
            return f.zero();
        };
        if pr != k {
            for c in 0..n {
                m.swap(k * n + c, pr * n + c);
            }
            neg = !neg;
        }
        let piv = m[k * n + k].clone();
        det = f.mul(&det, &piv);
        let pinv = f.inv(&piv).unwrap();
        for r in k + 1..n {
            if f.is_zero(&m[r * n + k]) {
                continue;
            }
            let factor = f.mul(&m[r * n + k], &pinv);
            for c in k + 1..n {
                let s = f.mul(&factor, &m[k * n + c]);
                m[r * n + c] = f.sub(&m[r * n + c], &s);
            }
        }
    }
    if neg {
        f.neg(&det)
    } else {
        det
    }
}

/// Determinant and inverse in one Gauss-Jordan pass over a row-major n×n
/// slice; the inverse is None exactly when the determinant is zero.
pub fn det_and_inverse<F: Field>(
    f: &F,
    n: usize,
    entries: &[F::Elem],
) -> (F::Elem, Option<Vec<F::Elem>>) {
    debug_assert_eq!(entries.len(), n * n);
    let mut m = entries.to_vec();
    let mut inv = vec![f.zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = f.one();
    }
    let mut det = f.one();
    let mut neg = false;
    for k in 0..n {
        let Some(pr) = (k..n).find(|&r| !f.is_zero(&m[r * n + k])) else {
            return (f.zero(), None);
        };
        if pr != k {
            for c in 0..n {
                m.swap(k * n + c, pr * n + c);
                inv.swap(k * n + c, pr * n + c);
            }
            neg = !neg;
        }
        let piv = m[k * n + k].clone();
        det = f.mul(&det, &piv);
        let pinv = f.inv(&piv).unwrap();
        for c in 0..n {
            m[k * n + c] = f.mul(&m[k * n + c], &pinv);
            inv[k * n + c] = f.mul(&inv[k * n + c], &pinv);
        }
        for r in 0..n {
            if r == k || f.is_zero(&m[r * n + k]) {
                continue;
            }
            let factor = m[r * n + k].clone();
            for c in 0..n {
                let s = f.mul(&factor, &m[k * n + c]);
                m[r * n + c] = f.sub(&m[r * n + c], &s);
                let s = f.mul(&factor, &inv[k * n + c]);
                inv[r * n + c] = f.sub(&inv[r * n + c], &s);
            }
        }
    }
    if neg {
        det = f.neg(&det);
    }
    (det, Some(inv))
}

/// Rank of a row-major nr×nc entry slice.
pub fn rank_entries<F: Field>(f: &F, nr: usize, nc: usize, entries: &[F::Elem]) -> usize {
    debug_assert_eq!(entries.len(), nr * nc);
    let mut m = entries.to_vec();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..nc {
        let Some(pr) = (row..nr).find(|&r| !f.is_zero(&m[r * nc + col])) else {
            continue;
        };
        if pr != row {
            for c in 0..nc {
                m.swap(row * nc + c, pr * nc + c);
            }
        }
        let pinv = f.inv(&m[row * nc + col]).unwrap();
        for r in row + 1..nr {
            if f.is_zero(&m[r * nc + col]) {
                continue;
            }
            let factor = f.mul(&m[r * nc + col], &pinv);
            for c in col..nc {
                let s = f.mul(&factor, &m[row * nc + c]);
                m[r * nc + c] = f.sub(&m[r * nc + c], &s);
            }
        }
        rank += 1;
        row += 1;
        if row == nr {
            break;
        }
    }
    rank
}

impl<F: Field> Matrix<F> {
    pub fn new(field: F, index: Vec<usize>, entries: Vec<F::Elem>) -> Result<Matrix<F>> {
        check_index(&index)?;
        if entries.len() != index.len() * index.len() {
            return Err(Error::BadInput("entry count does not match dimension".into()));
        }
        Ok(Matrix { field, index, entries })
    }

    /// Rows with the default index 1..=n.
    pub fn from_rows(field: F, rows: Vec<Vec<F::Elem>>) -> Result<Matrix<F>> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadInput("rows must form a square matrix".into()));
        }
        let entries = rows.into_iter().flatten().collect();
        Matrix::new(field, (1..=n).collect(), entries)
    }

    /// Integer rows with the default index, for fixtures and tests.
    pub fn from_i64_rows(field: F, rows: &[Vec<i64>]) -> Matrix<F> {
        let conv = rows.iter().map(|r| r.iter().map(|&x| field.from_i64(x)).collect()).collect();
        Matrix::from_rows(field, conv).unwrap()
    }

    pub fn zero(field: F, n: usize) -> Matrix<F> {
        let entries = vec![field.zero(); n * n];
        Matrix { field, index: (1..=n).collect(), entries }
    }

    pub fn identity(field: F, n: usize) -> Matrix<F> {
        let mut m = Matrix::zero(field, n);
        for i in 0..n {
            m.entries[i * n + i] = m.field.one();
        }
        m
    }

    /// Builds entry-by-entry from labels.
    pub fn from_fn(field: F, index: Vec<usize>, mut f: impl FnMut(usize, usize) -> F::Elem) -> Matrix<F> {
        check_index(&index).unwrap();
        let n = index.len();
        let mut entries = Vec::with_capacity(n * n);
        for &i in &index {
            for &j in &index {
                entries.push(f(i, j));
            }
        }
        Matrix { field, index, entries }
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn entries(&self) -> &[F::Elem] {
        &self.entries
    }

    fn pos(&self, label: usize) -> usize {
        self.index.binary_search(&label).expect("label not in index set")
    }

    /// Entry by label.
    pub fn at(&self, i: usize, j: usize) -> &F::Elem {
        let n = self.n();
        &self.entries[self.pos(i) * n + self.pos(j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        let n = self.n();
        let (pi, pj) = (self.pos(i), self.pos(j));
        self.entries[pi * n + pj] = v;
    }

    /// Complement of `labels` within this matrix's index set.
    pub fn complement(&self, labels: &[usize]) -> Vec<usize> {
        self.index.iter().copied().filter(|i| !labels.contains(i)).collect()
    }

    /// Principal submatrix A[S]; labels must be sorted and present.
    pub fn principal(&self, labels: &[usize]) -> Matrix<F> {
        check_index(labels).unwrap();
        let n = self.n();
        let pos: Vec<usize> = labels.iter().map(|&l| self.pos(l)).collect();
        let mut entries = Vec::with_capacity(pos.len() * pos.len());
        for &r in &pos {
            for &c in &pos {
                entries.push(self.entries[r * n + c].clone());
            }
        }
        Matrix { field: self.field.clone(), index: labels.to_vec(), entries }
    }

    /// Row-major block A[rows, cols] as a flat vector.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<F::Elem> {
        let n = self.n();
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                out.push(self.entries[self.pos(r) * n + self.pos(c)].clone());
            }
        }
        out
    }

    pub fn det(&self) -> F::Elem {
        det_entries(&self.field, self.n(), &self.entries)
    }

    /// det(A[S]) by labels; the empty minor is 1.
    pub fn principal_minor(&self, labels: &[usize]) -> F::Elem {
        det_entries(&self.field, labels.len(), &self.block(labels, labels))
    }

    /// Determinant of the square block A[rows, cols].
    pub fn det_block(&self, rows: &[usize], cols: &[usize]) -> F::Elem {
        assert_eq!(rows.len(), cols.len());
        det_entries(&self.field, rows.len(), &self.block(rows, cols))
    }

    pub fn rank(&self) -> usize {
        rank_entries(&self.field, self.n(), self.n(), &self.entries)
    }

    pub fn rank_block(&self, rows: &[usize], cols: &[usize]) -> usize {
        rank_entries(&self.field, rows.len(), cols.len(), &self.block(rows, cols))
    }

    pub fn transpose(&self) -> Matrix<F> {
        let n = self.n();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(self.entries[c * n + r].clone());
            }
        }
        Matrix { field: self.field.clone(), index: self.index.clone(), entries }
    }

    pub fn mul(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.index, other.index);
        let f = &self.field;
        let n = self.n();
        let mut entries = vec![f.zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = &self.entries[r * n + k];
                if f.is_zero(a) {
                    continue;
                }
                for c in 0..n {
                    let s = f.mul(a, &other.entries[k * n + c]);
                    entries[r * n + c] = f.add(&entries[r * n + c], &s);
                }
            }
        }
        Matrix { field: f.clone(), index: self.index.clone(), entries }
    }

    pub fn scale(&self, s: &F::Elem) -> Matrix<F> {
        let entries = self.entries.iter().map(|e| self.field.mul(e, s)).collect();
        Matrix { field: self.field.clone(), index: self.index.clone(), entries }
    }

    /// A + diag(d), with d given in index order.
    pub fn plus_diag(&self, d: &[F::Elem]) -> Matrix<F> {
        assert_eq!(d.len(), self.n());
        let n = self.n();
        let mut m = self.clone();
        for i in 0..n {
            m.entries[i * n + i] = self.field.add(&m.entries[i * n + i], &d[i]);
        }
        m
    }

    pub fn inverse(&self) -> Option<Matrix<F>> {
        let (_, inv) = det_and_inverse(&self.field, self.n(), &self.entries);
        inv.map(|entries| Matrix {
            field: self.field.clone(),
            index: self.index.clone(),
            entries,
        })
    }

    /// Adjugate, satisfying A·adj(A) = det(A)·I for every A. Computed as
    /// det·A⁻¹ when invertible and by cofactors otherwise.
    pub fn adjugate(&self) -> Matrix<F> {
        let f = &self.field;
        let n = self.n();
        let d = self.det();
        if !f.is_zero(&d) {
            return self.inverse().unwrap().scale(&d);
        }
        let mut out = Matrix::zero(f.clone(), n);
        out.index = self.index.clone();
        for i in 0..n {
            for j in 0..n {
                // delete row i and column j, then transpose into (j, i)
                let mut sub = Vec::with_capacity((n - 1) * (n - 1));
                for r in 0..n {
                    if r == i {
                        continue;
                    }
                    for c in 0..n {
                        if c == j {
                            continue;
                        }
                        sub.push(self.entries[r * n + c].clone());
                    }
                }
                let minor = det_entries(f, n - 1, &sub);
                let cof = if (i + j) % 2 == 0 { minor } else { f.neg(&minor) };
                out.entries[j * n + i] = cof;
            }
        }
        out
    }

    /// Cut predicate: 2 ≤ |X| ≤ n−2 and both off-diagonal blocks have rank
    /// at most one. Matrices smaller than 4×4 have no cuts.
    pub fn is_cut(&self, x: &[usize]) -> bool {
        let n = self.n();
        if n < 4 || x.len() < 2 || x.len() > n - 2 {
            return false;
        }
        check_index(x).unwrap();
        let xb = self.complement(x);
        if xb.len() + x.len() != n {
            return false;
        }
        self.rank_block(x, &xb) <= 1 && self.rank_block(&xb, x) <= 1
    }

    /// Witness vectors for a cut whose off-diagonal blocks are both nonzero.
    pub fn cut_witness(&self, x: &[usize]) -> Result<CutWitness<F>> {
        if !self.is_cut(x) {
            return Err(Error::NotACut);
        }
        let f = &self.field;
        let xb = self.complement(x);
        let top = self.block(x, &xb);
        let bot = self.block(&xb, x);
        let (k, m) = (x.len(), xb.len());

        // q: first nonzero row of A[X, X̄]; p: column of multipliers
        let r0 = (0..k)
            .find(|&r| (0..m).any(|c| !f.is_zero(&top[r * m + c])))
            .ok_or(Error::NotACut)?;
        let q: Vec<F::Elem> = (0..m).map(|c| top[r0 * m + c].clone()).collect();
        let c0 = (0..m).find(|&c| !f.is_zero(&q[c])).unwrap();
        let qinv = f.inv(&q[c0]).unwrap();
        let p: Vec<F::Elem> = (0..k).map(|r| f.mul(&top[r * m + c0], &qinv)).collect();

        // u: first nonzero column of A[X̄, X]; v: row of multipliers
        let c1 = (0..k)
            .find(|&c| (0..m).any(|r| !f.is_zero(&bot[r * k + c])))
            .ok_or(Error::NotACut)?;
        let u: Vec<F::Elem> = (0..m).map(|r| bot[r * k + c1].clone()).collect();
        let r1 = (0..m).find(|&r| !f.is_zero(&u[r])).unwrap();
        let uinv = f.inv(&u[r1]).unwrap();
        let v: Vec<F::Elem> = (0..k).map(|c| f.mul(&bot[r1 * k + c], &uinv)).collect();

        // the rank condition makes these exact factorizations
        for r in 0..k {
            for c in 0..m {
                debug_assert_eq!(top[r * m + c], f.mul(&p[r], &q[c]));
                debug_assert_eq!(bot[c * k + r], f.mul(&u[c], &v[r]));
            }
        }
        Ok(CutWitness { x: x.to_vec(), p, q, u, v })
    }

    /// Cut-transpose: [A[X], p·uᵀ; q·vᵀ, A[X̄]ᵀ]. Preserves every principal
    /// minor.
    pub fn cut_transpose(&self, x: &[usize]) -> Result<Matrix<F>> {
        let w = self.cut_witness(x)?;
        let f = &self.field;
        let xb = self.complement(x);
        let xpos = |l: usize| x.binary_search(&l).ok();
        let bpos = |l: usize| xb.binary_search(&l).ok();
        let out = Matrix::from_fn(f.clone(), self.index.clone(), |i, j| {
            match (xpos(i), xpos(j), bpos(i), bpos(j)) {
                (Some(_), Some(_), _, _) => self.at(i, j).clone(),
                (Some(r), None, _, Some(c)) => f.mul(&w.p[r], &w.u[c]),
                (None, Some(c), Some(r), _) => f.mul(&w.q[r], &w.v[c]),
                _ => self.at(j, i).clone(),
            }
        });
        Ok(out)
    }

    /// Diagonal similarity D·A·D⁻¹ with D[i]=1 and D[j]=A[i,j], making row i
    /// all ones off the diagonal.
    pub fn canonical_diag_similar(&self, i: usize) -> Result<Matrix<F>> {
        let f = self.field.clone();
        let mut d = Vec::with_capacity(self.n());
        for &j in &self.index {
            if j == i {
                d.push(f.one());
            } else {
                let e = self.at(i, j).clone();
                if f.is_zero(&e) {
                    return Err(Error::ZeroOffDiagonal);
                }
                d.push(e);
            }
        }
        let pos = |l: usize| self.index.binary_search(&l).unwrap();
        Ok(Matrix::from_fn(f.clone(), self.index.clone(), |r, c| {
            let num = f.mul(&d[pos(r)], self.at(r, c));
            f.div(&num, &d[pos(c)]).unwrap()
        }))
    }

    /// Strongly connected components of the support digraph (edge i→j iff
    /// i≠j and A[i,j]≠0), as sorted label blocks in topological order, so
    /// permuting by the concatenation gives a block upper triangular matrix.
    pub fn scc_partition(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let f = &self.field;
        let mut adj = vec![Vec::new(); n];
        for r in 0..n {
            for c in 0..n {
                if r != c && !f.is_zero(&self.entries[r * n + c]) {
                    adj[r].push(c);
                }
            }
        }
        tarjan_scc(n, &adj)
            .into_iter()
            .map(|c| c.into_iter().map(|p| self.index[p]).collect())
            .collect()
    }

    /// Block-diagonal assembly: places each block at its labels, zero
    /// elsewhere. The labels must partition the union exactly.
    pub fn assemble_blocks(field: F, blocks: &[(Vec<usize>, Matrix<F>)]) -> Result<Matrix<F>> {
        let mut index: Vec<usize> = blocks.iter().flat_map(|(l, _)| l.iter().copied()).collect();
        index.sort_unstable();
        let total: usize = blocks.iter().map(|(l, _)| l.len()).sum();
        if index.windows(2).any(|w| w[0] == w[1]) || index.len() != total {
            return Err(Error::PartitionMismatch);
        }
        for (labels, m) in blocks {
            if labels.len() != m.n() || check_index(labels).is_err() {
                return Err(Error::PartitionMismatch);
            }
        }
        let n = index.len();
        let mut out = Matrix {
            field: field.clone(),
            index: index.clone(),
            entries: vec![field.zero(); n * n],
        };
        for (labels, m) in blocks {
            for (r, &i) in labels.iter().enumerate() {
                for (c, &j) in labels.iter().enumerate() {
                    out.set(i, j, m.entries[r * m.n() + c].clone());
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<String>> = (0..self.n())
            .map(|r| (0..self.n()).map(|c| self.field.format_elem(&self.entries[r * self.n() + c])).collect())
            .collect();
        json!({
            "field": serde_json::to_value(self.field.spec()).unwrap(),
            "n": self.n(),
            "index": self.index,
            "rows": rows,
        })
    }

    pub fn from_json(field: F, v: &Value) -> Result<Matrix<F>> {
        let bad = |m: &str| Error::BadInput(format!("matrix json: {m}"));
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as usize;
        let index: Vec<usize> = match v.get("index") {
            Some(ix) => serde_json::from_value(ix.clone()).map_err(|_| bad("bad index"))?,
            None => (1..=n).collect(),
        };
        if index.len() != n {
            return Err(bad("index length mismatch"));
        }
        let rows = v.get("rows").and_then(Value::as_array).ok_or_else(|| bad("missing rows"))?;
        if rows.len() != n {
            return Err(bad("row count mismatch"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("row must be an array"))?;
            if row.len() != n {
                return Err(bad("row length mismatch"));
            }
            for cell in row {
                let s = cell.as_str().ok_or_else(|| bad("entries must be strings"))?;
                entries.push(field.parse_elem(s)?);
            }
        }
        Matrix::new(field, index, entries)
    }
}

/// Runtime-dispatched matrix for the CLI: the field kind is part of the
/// serialized form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyMatrix {
    Prime(Matrix<PrimeField>),
    Rational(Matrix<RationalField>),
}

impl AnyMatrix {
    pub fn from_json(v: &Value) -> Result<AnyMatrix> {
        let spec: FieldSpec = serde_json::from_value(
            v.get("field").cloned().ok_or_else(|| Error::BadInput("matrix json: missing field".into()))?,
        )
        .map_err(|e| Error::BadInput(format!("matrix json: bad field spec: {e}")))?;
        match spec {
            FieldSpec::Prime { modulus } => {
                let p: u64 = modulus
                    .parse()
                    .map_err(|_| Error::BadInput(format!("bad modulus {modulus:?}")))?;
                Ok(AnyMatrix::Prime(Matrix::from_json(PrimeField::new(p)?, v)?))
            }
            FieldSpec::Rational => Ok(AnyMatrix::Rational(Matrix::from_json(RationalField, v)?)),
        }
    }

    pub fn from_json_str(s: &str) -> Result<AnyMatrix> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::BadInput(format!("invalid json: {e}")))?;
        AnyMatrix::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyMatrix::Prime(m) => m.to_json(),
            AnyMatrix::Rational(m) => m.to_json(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyMatrix::Prime(m) => m.n(),
            AnyMatrix::Rational(m) => m.n(),
        }
    }
}
