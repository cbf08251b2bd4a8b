//! Principal minor equivalence of explicit matrices.
//!
//! `test_pme` decides equivalence deterministically: match the irreducible
//! block partitions, shift each block pair so both adjugates become dense,
//! shift again so the second adjugates acquire the rank-one extension
//! property, then compare minors of order at most four. Determinant guards
//! around both adjugate levels let every mismatch be pulled back to an
//! explicit subset witness. `pme_bruteforce` and `pme_randomized` are the
//! independent baselines.

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::combinat::{shortest_cycle_through, subsets_size_then_lex, Digraph};
use crate::error::{Error, Result};
use crate::field::{batch_invert, is_prime_u64, Field, FieldSpec, PrimeField};
use crate::matrix::{det_entries, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmeMethod {
    Deterministic,
    Bruteforce,
    Randomized(usize),
}

/// Outcome of an equivalence test. On the bruteforce and deterministic paths
/// an unequal verdict carries a subset with mismatching principal minors; the
/// one exception is a block-partition mismatch, where the witness is the
/// lexicographically first pair of labels joined in one matrix and separated
/// in the other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PmeVerdict {
    pub equal: bool,
    pub method: PmeMethod,
    pub witness: Option<Vec<usize>>,
}

impl PmeVerdict {
    pub fn to_json(&self) -> Value {
        let method = match self.method {
            PmeMethod::Deterministic => "deterministic",
            PmeMethod::Bruteforce => "bruteforce",
            PmeMethod::Randomized(_) => "randomized",
        };
        let mut v = json!({
            "equal": self.equal,
            "method": method,
            "witness": self.witness.clone().map_or(Value::Null, |w| json!(w)),
        });
        if let PmeMethod::Randomized(k) = self.method {
            v["samples"] = json!(k);
        }
        v
    }
}

fn validate_pair<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<()> {
    if a.index() != b.index() {
        return Err(Error::BadInput("matrices must share an index set".into()));
    }
    if a.field() != b.field() {
        return Err(Error::BadInput("matrices must share a field".into()));
    }
    Ok(())
}

/// Compares all 2^n - 1 principal minors in size-then-lex order.
pub fn pme_bruteforce<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<PmeVerdict> {
    validate_pair(a, b)?;
    if a.n() > 14 {
        return Err(Error::TooLarge);
    }
    for s in subsets_size_then_lex(a.index()) {
        if a.principal_minor(&s) != b.principal_minor(&s) {
            return Ok(PmeVerdict { equal: false, method: PmeMethod::Bruteforce, witness: Some(s) });
        }
    }
    Ok(PmeVerdict { equal: true, method: PmeMethod::Bruteforce, witness: None })
}

/// Compares det(A + R) with det(B + R) at `samples` random diagonal points;
/// one-sided error, never reports a false inequality.
pub fn pme_randomized<F: Field, R: Rng + ?Sized>(
    a: &Matrix<F>,
    b: &Matrix<F>,
    rng: &mut R,
    samples: usize,
) -> PmeVerdict {
    assert_eq!(a.index(), b.index(), "matrices must share an index set");
    assert!(a.field() == b.field(), "matrices must share a field");
    let f = a.field();
    let method = PmeMethod::Randomized(samples);
    for _ in 0..samples {
        let d: Vec<F::Elem> = (0..a.n()).map(|_| f.sample(rng)).collect();
        if a.plus_diag(&d).det() != b.plus_diag(&d).det() {
            return PmeVerdict { equal: false, method, witness: None };
        }
    }
    PmeVerdict { equal: true, method, witness: None }
}

/// det((M + diag d)[rows, cols]) with d positional over the full index.
fn shifted_minor_det<F: Field>(
    m: &Matrix<F>,
    d: &[F::Elem],
    rows: &[usize],
    cols: &[usize],
) -> F::Elem {
    debug_assert_eq!(rows.len(), cols.len());
    let f = m.field();
    let idx = m.index();
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for &r in rows {
        for &c in cols {
            let mut e = m.at(r, c).clone();
            if r == c {
                e = f.add(&e, &d[idx.binary_search(&r).unwrap()]);
            }
            entries.push(e);
        }
    }
    det_entries(f, rows.len(), &entries)
}

/// Scans uniform diagonals c, c, ..., c; sound whenever the scanned minor has
/// a provably nonzero leading coefficient in c.
fn uniform_scan<F: Field>(
    m: &Matrix<F>,
    rows: &[usize],
    cols: &[usize],
    degree: usize,
) -> Result<Vec<F::Elem>> {
    let f = m.field();
    for k in 0..=degree as u64 + 1 {
        let Some(c) = f.element_at(k) else { return Err(Error::FieldTooSmall) };
        let d = vec![c; m.n()];
        if !f.is_zero(&shifted_minor_det(m, &d, rows, cols)) {
            return Ok(d);
        }
    }
    Err(Error::FieldTooSmall)
}

fn bfs_path(g: &Digraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; g.n];
    let mut queue = std::collections::VecDeque::new();
    parent[from] = from;
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &w in &g.adj[u] {
            if parent[w] == usize::MAX {
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    if parent[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    let mut u = to;
    while u != from {
        u = parent[u];
        path.push(u);
    }
    path.reverse();
    Some(path)
}

/// adj(M+Y)[a,b] expands over support paths a -> b: zeroing the diagonal along
/// a shortest path and scanning one value elsewhere reaches its top k-degree
/// term, and with no path at all every expansion term carries a zero factor.
fn witness_path_minor<F: Field>(m: &Matrix<F>, a: usize, b: usize) -> Result<Option<Vec<F::Elem>>> {
    let f = m.field();
    let idx = m.index();
    let n = m.n();
    let mut g = Digraph::new(n);
    for (i, &r) in idx.iter().enumerate() {
        for (j, &c) in idx.iter().enumerate() {
            if i != j && !f.is_zero(m.at(r, c)) {
                g.add_edge(i, j);
            }
        }
    }
    let pa = idx.binary_search(&a).unwrap();
    let pb = idx.binary_search(&b).unwrap();
    let Some(path) = bfs_path(&g, pa, pb) else { return Ok(None) };
    let mut on_path = vec![false; n];
    for &p in &path {
        on_path[p] = true;
    }
    let rows = m.complement(&[b]);
    let cols = m.complement(&[a]);
    let degree = n - path.len();
    for k in 0..=degree as u64 + 1 {
        let Some(c) = f.element_at(k) else { return Err(Error::FieldTooSmall) };
        let d: Vec<F::Elem> =
            (0..n).map(|i| if on_path[i] { f.zero() } else { c.clone() }).collect();
        if !f.is_zero(&shifted_minor_det(m, &d, &rows, &cols)) {
            return Ok(Some(d));
        }
    }
    Err(Error::FieldTooSmall)
}

/// Disjoint 2-set case: eliminate the minor's constant pivot row (taken from
/// the S rows x T columns corner, which carries no diagonal variables), then
/// hunt a shortest support cycle through the eliminated matrix's first node.
/// No cycle means the minor is identically zero; a cycle gives a 0/c diagonal
/// pattern whose scan reaches the minor's top surviving term.
fn witness_cycle_minor<F: Field>(
    m: &Matrix<F>,
    s: &[usize],
    t: &[usize],
) -> Result<Option<Vec<F::Elem>>> {
    let f = m.field();
    let idx = m.index();
    let n = m.n();
    let mut pivot = None;
    'find: for &sp in s {
        for &tq in t {
            if !f.is_zero(m.at(sp, tq)) {
                pivot = Some((sp, tq));
                break 'find;
            }
        }
    }
    let Some((sp, tq)) = pivot else {
        return Err(Error::BadInput("disjoint 2-set targets need a dense matrix".into()));
    };
    let so = *s.iter().find(|&&l| l != sp).unwrap();
    let to = *t.iter().find(|&&l| l != tq).unwrap();
    let free: Vec<usize> =
        idx.iter().copied().filter(|l| !s.contains(l) && !t.contains(l)).collect();
    let rows: Vec<usize> = std::iter::once(so).chain(free.iter().copied()).collect();
    let cols: Vec<usize> = std::iter::once(to).chain(free.iter().copied()).collect();
    let piv_inv = f.inv(m.at(sp, tq)).unwrap();
    let mm = rows.len();
    let mut reduced = Vec::with_capacity(mm * mm);
    for &r in &rows {
        for &c in &cols {
            let factor = f.mul(m.at(sp, c), &piv_inv);
            reduced.push(f.sub(m.at(r, c), &f.mul(&factor, m.at(r, tq))));
        }
    }
    // self-loops at nodes past the first stand for diagonal variables, so only
    // the first node's constant entry may close a length-one cycle
    let mut g = Digraph::new(mm);
    for ri in 0..mm {
        for ci in 0..mm {
            if (ri != ci || ri == 0) && !f.is_zero(&reduced[ri * mm + ci]) {
                g.add_edge(ri, ci);
            }
        }
    }
    let Some(cycle) = shortest_cycle_through(&g, 0) else { return Ok(None) };
    let mut zero_at = vec![false; n];
    for &l in s.iter().chain(t) {
        zero_at[idx.binary_search(&l).unwrap()] = true;
    }
    for &p in &cycle {
        if p > 0 {
            zero_at[idx.binary_search(&free[p - 1]).unwrap()] = true;
        }
    }
    let minor_rows = m.complement(t);
    let minor_cols = m.complement(s);
    let degree = mm - cycle.len();
    for k in 0..=degree as u64 + 1 {
        let Some(c) = f.element_at(k) else { return Err(Error::FieldTooSmall) };
        let d: Vec<F::Elem> =
            (0..n).map(|i| if zero_at[i] { f.zero() } else { c.clone() }).collect();
        if !f.is_zero(&shifted_minor_det(m, &d, &minor_rows, &minor_cols)) {
            return Ok(Some(d));
        }
    }
    Err(Error::FieldTooSmall)
}

/// Decides whether det((M+Y)[T-bar, S-bar]) is identically zero, for label
/// sets with |S| = |T| <= 2; this is the adjugate minor adj(M+Y)[S,T] up to
/// the invertible factor det(M+Y)^(|S|-1). Returns a diagonal making the
/// minor nonzero, or None exactly when it vanishes identically. Overlapping
/// 2-sets and the pivot hunt of disjoint ones expect a dense matrix.
pub fn nonzero_witness_minor<F: Field>(
    m: &Matrix<F>,
    s: &[usize],
    t: &[usize],
) -> Result<Option<Vec<F::Elem>>> {
    if s.len() != t.len() || s.len() > 2 {
        return Err(Error::BadInput("witness minors need |S| = |T| <= 2".into()));
    }
    let idx = m.index();
    for &l in s.iter().chain(t) {
        if idx.binary_search(&l).is_err() {
            return Err(Error::BadInput(format!("label {l} outside the index")));
        }
    }
    let f = m.field();
    let n = m.n();
    if s == t {
        // principal complement: monic of degree n - |S| under a uniform shift
        let rows = m.complement(t);
        return uniform_scan(m, &rows, &rows, n - s.len()).map(Some);
    }
    if s.len() == 1 {
        return witness_path_minor(m, s[0], t[0]);
    }
    let shared = s.iter().filter(|l| t.contains(l)).count();
    if shared == 1 {
        // uniform leading coefficient is the lone off-corner entry
        let &a = s.iter().find(|l| !t.contains(l)).unwrap();
        let &b = t.iter().find(|l| !s.contains(l)).unwrap();
        if f.is_zero(m.at(a, b)) {
            return Err(Error::BadInput("overlapping 2-set targets need a dense matrix".into()));
        }
        let rows = m.complement(t);
        let cols = m.complement(s);
        return uniform_scan(m, &rows, &cols, n - 3).map(Some);
    }
    witness_cycle_minor(m, s, t)
}

/// A determinant that must stay nonzero at the combined diagonal.
pub struct NonzeroGoal<'a, F: Field> {
    pub matrix: &'a Matrix<F>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// One interpolation target: a diagonal known to satisfy its own goals.
pub struct ShiftTarget<'a, F: Field> {
    pub diag: Vec<F::Elem>,
    pub goals: Vec<NonzeroGoal<'a, F>>,
}

/// Threads one polynomial diagonal curve through all target diagonals at
/// distinct canonical nodes, then scans scalar values past the nodes until
/// every goal determinant is nonzero. Since each goal holds at its target's
/// own node, no goal polynomial vanishes identically, and the scan budget is
/// the root bound goals * degree_bound * (targets - 1) + 1.
pub fn lagrange_combine_diagonals<F: Field>(
    f: &F,
    targets: &[ShiftTarget<'_, F>],
    degree_bound: usize,
) -> Result<Vec<F::Elem>> {
    let k = targets.len();
    if k == 0 || degree_bound == 0 {
        return Err(Error::BadInput("need targets and a positive degree bound".into()));
    }
    let n = targets[0].diag.len();
    for tg in targets {
        if tg.diag.len() != n || tg.goals.iter().any(|g| g.matrix.n() != n) {
            return Err(Error::BadInput("targets must share one index length".into()));
        }
    }
    if k == 1 {
        return Ok(targets[0].diag.clone());
    }
    if let Some(ord) = f.order() {
        if ord <= k as u128 * degree_bound as u128 {
            return Err(Error::FieldTooSmall);
        }
    }
    let nodes: Vec<F::Elem> = (0..k as u64).map(|i| f.element_at(i).unwrap()).collect();
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let mut acc = f.one();
        for j in 0..k {
            if j != i {
                acc = f.mul(&acc, &f.sub(&nodes[i], &nodes[j]));
            }
        }
        weights.push(acc);
    }
    let winv = batch_invert(f, &weights);
    let goals: Vec<&NonzeroGoal<'_, F>> = targets.iter().flat_map(|t| t.goals.iter()).collect();
    let budget = goals.len() as u128 * degree_bound as u128 * (k - 1) as u128 + 1;
    let mut scanned = 0u128;
    let mut point = k as u64;
    while scanned < budget {
        let Some(x) = f.element_at(point) else { return Err(Error::FieldTooSmall) };
        point += 1;
        scanned += 1;
        let diffs: Vec<F::Elem> = nodes.iter().map(|nd| f.sub(&x, nd)).collect();
        let mut pre = vec![f.one(); k + 1];
        for i in 0..k {
            pre[i + 1] = f.mul(&pre[i], &diffs[i]);
        }
        let mut suf = vec![f.one(); k + 1];
        for i in (0..k).rev() {
            suf[i] = f.mul(&suf[i + 1], &diffs[i]);
        }
        let lag: Vec<F::Elem> =
            (0..k).map(|i| f.mul(&f.mul(&pre[i], &suf[i + 1]), &winv[i])).collect();
        let d: Vec<F::Elem> = (0..n)
            .map(|c| {
                let mut acc = f.zero();
                for (ti, tg) in targets.iter().enumerate() {
                    acc = f.add(&acc, &f.mul(&tg.diag[c], &lag[ti]));
                }
                acc
            })
            .collect();
        if goals.iter().all(|g| !f.is_zero(&shifted_minor_det(g.matrix, &d, &g.rows, &g.cols))) {
            return Ok(d);
        }
    }
    Err(Error::FieldTooSmall)
}

/// Finds D making A+D and B+D invertible with dense adjugates. Needs both
/// inputs irreducible: every adjugate entry then has a surviving support
/// path, so each of the 2(n^2 - n + 1) targets owns a witness diagonal.
pub fn dense_adjugate_shift<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<Vec<F::Elem>> {
    validate_pair(a, b)?;
    let f = a.field();
    let n = a.n();
    let mut targets = Vec::new();
    for m in [a, b] {
        let d = nonzero_witness_minor(m, &[], &[])?.expect("full shifted determinant is monic");
        targets.push(ShiftTarget {
            diag: d,
            goals: vec![NonzeroGoal {
                matrix: m,
                rows: m.index().to_vec(),
                cols: m.index().to_vec(),
            }],
        });
        for &i in m.index() {
            for &j in m.index() {
                if i == j {
                    continue;
                }
                let Some(d) = nonzero_witness_minor(m, &[i], &[j])? else {
                    return Err(Error::ZeroOffDiagonal);
                };
                targets.push(ShiftTarget {
                    diag: d,
                    goals: vec![NonzeroGoal {
                        matrix: m,
                        rows: m.complement(&[j]),
                        cols: m.complement(&[i]),
                    }],
                });
            }
        }
    }
    lagrange_combine_diagonals(f, &targets, n.max(1))
}

/// Finds D making both shifted adjugates invertible, dense, and nonzero on
/// every symbolically surviving disjoint 2x2 adjugate minor; identically zero
/// minors are excluded, which is what lets planted rank-one structure persist.
/// Needs dense invertible inputs.
pub fn prop_r_adjugate_shift<F: Field>(a1: &Matrix<F>, b1: &Matrix<F>) -> Result<Vec<F::Elem>> {
    validate_pair(a1, b1)?;
    let f = a1.field();
    let n = a1.n();
    let idx = a1.index().to_vec();
    let mut two_sets: Vec<Vec<usize>> = Vec::new();
    for (u, &i) in idx.iter().enumerate() {
        for &j in &idx[u + 1..] {
            two_sets.push(vec![i, j]);
        }
    }
    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for s in &two_sets {
        for t in &two_sets {
            if s.iter().all(|l| !t.contains(l)) {
                pairs.push((s.clone(), t.clone()));
            }
        }
    }
    let mut targets = Vec::new();
    for m in [a1, b1] {
        let d = nonzero_witness_minor(m, &[], &[])?.expect("full shifted determinant is monic");
        targets.push(ShiftTarget {
            diag: d,
            goals: vec![NonzeroGoal {
                matrix: m,
                rows: m.index().to_vec(),
                cols: m.index().to_vec(),
            }],
        });
        for &i in &idx {
            for &j in &idx {
                if i == j {
                    continue;
                }
                let Some(d) = nonzero_witness_minor(m, &[i], &[j])? else {
                    return Err(Error::ZeroOffDiagonal);
                };
                targets.push(ShiftTarget {
                    diag: d,
                    goals: vec![NonzeroGoal {
                        matrix: m,
                        rows: m.complement(&[j]),
                        cols: m.complement(&[i]),
                    }],
                });
            }
        }
        let witnesses: Vec<Result<Option<Vec<F::Elem>>>> =
            pairs.par_iter().map(|(s, t)| nonzero_witness_minor(m, s, t)).collect();
        for ((s, t), w) in pairs.iter().zip(witnesses) {
            if let Some(d) = w? {
                targets.push(ShiftTarget {
                    diag: d,
                    goals: vec![NonzeroGoal { matrix: m, rows: m.complement(t), cols: m.complement(s) }],
                });
            }
        }
    }
    lagrange_combine_diagonals(f, &targets, n.max(1))
}

/// Peels a shifted-minor mismatch down to an unshifted one: removing a label
/// whose shift still separates the pair shrinks the subset, and a label whose
/// shift stops mattering is frozen at zero. Ends at a plain minor mismatch.
fn descend<F: Field>(a: &Matrix<F>, b: &Matrix<F>, x0: &[usize], d: &[F::Elem]) -> Vec<usize> {
    let f = a.field();
    let idx = a.index();
    let pos = |l: usize| idx.binary_search(&l).unwrap();
    let mut x = x0.to_vec();
    let mut active: Vec<bool> = d.iter().map(|e| !f.is_zero(e)).collect();
    let differs = |x: &[usize], active: &[bool]| {
        let masked: Vec<F::Elem> = d
            .iter()
            .zip(active)
            .map(|(e, &on)| if on { e.clone() } else { f.zero() })
            .collect();
        shifted_minor_det(a, &masked, x, x) != shifted_minor_det(b, &masked, x, x)
    };
    debug_assert!(differs(&x, &active));
    loop {
        let Some(i) = x.iter().copied().find(|&l| active[pos(l)]) else { return x };
        let shrunk: Vec<usize> = x.iter().copied().filter(|&l| l != i).collect();
        if differs(&shrunk, &active) {
            x = shrunk;
        } else {
            active[pos(i)] = false;
        }
    }
}

/// Per-block equivalence: None when equal, otherwise a subset of the block
/// with det(A[S]) != det(B[S]). A size-k principal minor of adj(M) equals
/// det(M)^(k-1) times the complementary minor of M, so while the guarded
/// determinants agree, mismatches pull back level by level through the
/// complements, and the leftover diagonal shifts peel off by descent.
fn decide_block<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<Option<Vec<usize>>> {
    if a.n() <= 3 {
        for s in subsets_size_then_lex(a.index()) {
            if a.principal_minor(&s) != b.principal_minor(&s) {
                return Ok(Some(s));
            }
        }
        return Ok(None);
    }
    let labels = a.index().to_vec();
    let d1 = dense_adjugate_shift(a, b)?;
    let sa = a.plus_diag(&d1);
    let sb = b.plus_diag(&d1);
    if sa.det() != sb.det() {
        return Ok(Some(descend(a, b, &labels, &d1)));
    }
    let a1 = sa.adjugate();
    let b1 = sb.adjugate();
    let d2 = prop_r_adjugate_shift(&a1, &b1)?;
    let ta = a1.plus_diag(&d2);
    let tb = b1.plus_diag(&d2);
    let mismatch = if ta.det() != tb.det() {
        Some(labels.clone())
    } else {
        let a2 = ta.adjugate();
        let b2 = tb.adjugate();
        subsets_size_then_lex(&labels)
            .take_while(|s| s.len() <= 4)
            .find(|s| a2.principal_minor(s) != b2.principal_minor(s))
    };
    let Some(s2) = mismatch else { return Ok(None) };
    let y1 = if s2 == labels {
        descend(&a1, &b1, &labels, &d2)
    } else {
        let x1: Vec<usize> = labels.iter().copied().filter(|l| !s2.contains(l)).collect();
        descend(&a1, &b1, &x1, &d2)
    };
    debug_assert!(y1.len() < labels.len());
    let x0: Vec<usize> = labels.iter().copied().filter(|l| !y1.contains(l)).collect();
    Ok(Some(descend(a, b, &x0, &d1)))
}

fn decide_pme<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<PmeVerdict> {
    let mut pa = a.scc_partition();
    let mut pb = b.scc_partition();
    pa.sort();
    pb.sort();
    if pa != pb {
        let same = |p: &[Vec<usize>], i: usize, j: usize| {
            p.iter().any(|blk| blk.contains(&i) && blk.contains(&j))
        };
        let idx = a.index();
        for (u, &i) in idx.iter().enumerate() {
            for &j in &idx[u + 1..] {
                if same(&pa, i, j) != same(&pb, i, j) {
                    return Ok(PmeVerdict {
                        equal: false,
                        method: PmeMethod::Deterministic,
                        witness: Some(vec![i, j]),
                    });
                }
            }
        }
        unreachable!("distinct partitions separate some pair");
    }
    let results: Vec<Result<Option<Vec<usize>>>> = pa
        .par_iter()
        .map(|blk| decide_block(&a.principal(blk), &b.principal(blk)))
        .collect();
    for r in results {
        if let Some(w) = r? {
            return Ok(PmeVerdict {
                equal: false,
                method: PmeMethod::Deterministic,
                witness: Some(w),
            });
        }
    }
    Ok(PmeVerdict { equal: true, method: PmeMethod::Deterministic, witness: None })
}

/// Embeds small-integer matrices over a too-small prime field into a larger
/// one. Symmetric-representative minors are bounded by n^ceil(n/2) * m^n, and
/// once twice that bound is below both moduli, minor equalities transfer
/// through the integers in both directions, witnesses included.
fn decide_embedded<F: Field>(a: &Matrix<F>, b: &Matrix<F>, need: u128) -> Result<PmeVerdict> {
    let f = a.field();
    let FieldSpec::Prime { modulus } = f.spec() else { unreachable!() };
    let p: u128 = modulus.parse().map_err(|_| Error::BadInput("unreadable modulus".into()))?;
    let n = a.n();
    let lift = |m: &Matrix<F>| -> Vec<i64> {
        m.entries()
            .iter()
            .map(|e| {
                let v: u128 = f.format_elem(e).parse().expect("prime elements print as residues");
                if v > p / 2 {
                    (v as i128 - p as i128) as i64
                } else {
                    v as i64
                }
            })
            .collect()
    };
    let ea = lift(a);
    let eb = lift(b);
    let mabs = ea.iter().chain(&eb).map(|v| v.unsigned_abs()).max().unwrap_or(1).max(1);
    let bound = (n as u128)
        .checked_pow(n.div_ceil(2) as u32)
        .and_then(|x| (mabs as u128).checked_pow(n as u32).map(|y| (x, y)))
        .and_then(|(x, y)| x.checked_mul(y))
        .ok_or(Error::FieldTooSmall)?;
    let doubled = bound.checked_mul(2).ok_or(Error::FieldTooSmall)?;
    if doubled >= p {
        return Err(Error::FieldTooSmall);
    }
    let mut q = need.max(doubled + 1).max(3);
    if q % 2 == 0 {
        q += 1;
    }
    if q >= 1 << 63 {
        return Err(Error::FieldTooSmall);
    }
    let mut q = q as u64;
    while !is_prime_u64(q) {
        q = q.checked_add(2).ok_or(Error::FieldTooSmall)?;
        if q >= 1 << 63 {
            return Err(Error::FieldTooSmall);
        }
    }
    let fq = PrimeField::new(q)?;
    let rebuild = |ints: &[i64]| {
        let entries: Vec<u64> = ints.iter().map(|&v| fq.from_i64(v)).collect();
        Matrix::new(fq.clone(), a.index().to_vec(), entries).expect("same shape as the input")
    };
    decide_pme(&rebuild(&ea), &rebuild(&eb))
}

/// Deterministic principal minor equivalence test. Prime fields smaller than
/// 10 n^5 are first embedded via `decide_embedded`; the rationals need no
/// size check. Unequal verdicts carry a witness subset.
pub fn test_pme<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<PmeVerdict> {
    validate_pair(a, b)?;
    let need = 10u128 * (a.n() as u128).pow(5);
    if let (FieldSpec::Prime { .. }, Some(ord)) = (a.field().spec(), a.field().order()) {
        if ord < need {
            return decide_embedded(a, b, need);
        }
    }
    decide_pme(a, b)
}
