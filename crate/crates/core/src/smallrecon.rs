use std::collections::BTreeMap;

use itertools::Itertools;

use crate::combinat::subsets_size_then_lex;
use crate::error::{Error, Result};
use crate::field::{solve_quadratic, Field};
use crate::matrix::Matrix;
use crate::oracle::PMOracle;

/// Canonical 2×2 reconstruction: ones above the diagonal, the pair product
/// below. Fails when the off-diagonal product vanishes.
pub fn recon2<F: Field>(pm: &PMOracle<F>, pair: (usize, usize)) -> Result<Matrix<F>> {
    let f = pm.field().clone();
    let (i, j) = (pair.0.min(pair.1), pair.0.max(pair.1));
    assert_ne!(i, j);
    let m = pm.pair_product(i, j)?;
    if f.is_zero(&m) {
        return Err(Error::ZeroOffDiagonal);
    }
    let qi = pm.query(&[i])?;
    let qj = pm.query(&[j])?;
    Matrix::new(f.clone(), vec![i, j], vec![qi, f.one(), m, qj])
}

/// Quadratic coefficients tying the (x, y) entry of a first-row-ones matrix
/// to the oracle: a z^2 - b z + c with a = m(anchor, y), b = s(anchor, x, y),
/// c = m(anchor, x) * m(x, y).
pub(crate) fn entry_quadratic<F: Field>(
    pm: &PMOracle<F>,
    anchor: usize,
    x: usize,
    y: usize,
) -> Result<(F::Elem, F::Elem, F::Elem)> {
    let f = pm.field();
    let a = pm.pair_product(anchor, y)?;
    let b = pm.triple_sum(anchor, x, y)?;
    let c = f.mul(&pm.pair_product(anchor, x)?, &pm.pair_product(x, y)?);
    Ok((a, b, c))
}

/// Canonical 3×3 reconstructions: at most two candidates, each validated
/// against every principal minor of the triple.
pub fn recon3<F: Field>(pm: &PMOracle<F>, triple: (usize, usize, usize)) -> Result<Vec<Matrix<F>>> {
    let f = pm.field().clone();
    let mut t = [triple.0, triple.1, triple.2];
    t.sort_unstable();
    let [i, j, k] = t;
    assert!(i < j && j < k);

    let m_ij = pm.pair_product(i, j)?;
    let m_ik = pm.pair_product(i, k)?;
    let m_jk = pm.pair_product(j, k)?;
    if f.is_zero(&m_ij) || f.is_zero(&m_ik) || f.is_zero(&m_jk) {
        return Err(Error::ZeroOffDiagonal);
    }
    let (a, b, c) = entry_quadratic(pm, i, j, k)?;
    let roots = solve_quadratic(&f, &a, &b, &c)?;
    if roots.is_empty() {
        return Err(Error::NoRoot);
    }

    let qi = pm.query(&[i])?;
    let qj = pm.query(&[j])?;
    let qk = pm.query(&[k])?;
    let mut out = Vec::new();
    for z in roots {
        // c != 0 rules out zero roots
        let zi = f.inv(&z).unwrap();
        let cand = Matrix::new(
            f.clone(),
            vec![i, j, k],
            vec![
                qi.clone(),
                f.one(),
                f.one(),
                m_ij.clone(),
                qj.clone(),
                z.clone(),
                m_ik.clone(),
                f.mul(&m_jk, &zi),
                qk.clone(),
            ],
        )?;
        let mut ok = true;
        for s in subsets_size_then_lex(&t) {
            if cand.principal_minor(&s) != pm.query(&s)? {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(cand);
        }
    }
    if out.is_empty() {
        return Err(Error::NoRoot);
    }
    Ok(out)
}

/// All 4×4 matrices with first-row ones that share every principal minor
/// with the oracle's matrix on T. The `cut_splits` flags record, per 2+2
/// split of T, whether some member has that split as a cut.
#[derive(Clone, Debug)]
pub struct Family4<F: Field> {
    t: [usize; 4],
    pub members: Vec<Matrix<F>>,
    cut_splits: [bool; 3],
}

impl<F: Field> Family4<F> {
    pub fn labels(&self) -> &[usize; 4] {
        &self.t
    }

    /// True when some member has the split {a,b} | T∖{a,b} as a cut.
    pub fn has_cut_pair(&self, a: usize, b: usize) -> bool {
        assert!(a != b && self.t.contains(&a) && self.t.contains(&b));
        let t0 = self.t[0];
        let mate = if a == t0 || b == t0 {
            a + b - t0
        } else {
            // the complement pair contains the anchor
            *self.t[1..].iter().find(|&&x| x != a && x != b).unwrap()
        };
        let k = self.t[1..].iter().position(|&x| x == mate).unwrap();
        self.cut_splits[k]
    }
}

/// Reconstructs the full PME family over a 4-subset: solve the three entry
/// quadratics at the anchor (the smallest label), assemble one candidate per
/// root triple in canonical order, and keep exactly those matching all 15
/// principal minors. The family can be empty for adversarial oracles; for
/// genuine dense matrices it always contains the canonical form of A[T].
pub fn family4<F: Field>(pm: &PMOracle<F>, t: &[usize]) -> Result<Family4<F>> {
    assert_eq!(t.len(), 4);
    let mut ts = [t[0], t[1], t[2], t[3]];
    ts.sort_unstable();
    let [t1, t2, t3, t4] = ts;
    assert!(t1 < t2 && t2 < t3 && t3 < t4);
    let f = pm.field().clone();

    let q: Vec<F::Elem> = ts.iter().map(|&x| pm.query(&[x])).collect::<Result<_>>()?;
    let pairs = [(t2, t3), (t2, t4), (t3, t4)];
    let mut root_sets: Vec<Vec<F::Elem>> = Vec::with_capacity(3);
    for &(x, y) in &pairs {
        let (a, b, c) = entry_quadratic(pm, t1, x, y)?;
        let roots = match solve_quadratic(&f, &a, &b, &c) {
            Ok(r) => r,
            Err(Error::DegenerateEquation) => vec![f.zero()],
            Err(e) => return Err(e),
        };
        root_sets.push(roots);
    }

    let mut m = BTreeMap::new();
    for v in ts.iter().combinations(2) {
        let (x, y) = (*v[0], *v[1]);
        m.insert((x, y), pm.pair_product(x, y)?);
    }

    let mut members: Vec<Matrix<F>> = Vec::new();
    'triple: for (r1, r2, r3) in root_sets[0]
        .iter()
        .cartesian_product(root_sets[1].iter())
        .cartesian_product(root_sets[2].iter())
        .map(|((a, b), c)| (a, b, c))
    {
        let mut cand = Matrix::from_fn(f.clone(), ts.to_vec(), |_, _| f.zero());
        for (d, &x) in ts.iter().enumerate() {
            cand.set(x, x, q[d].clone());
        }
        for &x in &[t2, t3, t4] {
            cand.set(t1, x, f.one());
            cand.set(x, t1, m[&(t1, x)].clone());
        }
        for (&(x, y), r) in pairs.iter().zip([r1, r2, r3]) {
            let mv = &m[&(x, y)];
            let lower = if f.is_zero(r) {
                if f.is_zero(mv) {
                    f.zero()
                } else {
                    continue 'triple;
                }
            } else {
                f.div(mv, r).unwrap()
            };
            cand.set(x, y, r.clone());
            cand.set(y, x, lower);
        }
        for s in subsets_size_then_lex(&ts) {
            if cand.principal_minor(&s) != pm.query(&s)? {
                continue 'triple;
            }
        }
        if !members.contains(&cand) {
            members.push(cand);
        }
    }
    assert!(members.len() <= 8, "root combinations bound the family size by 8");

    let mut cut_splits = [false; 3];
    for (k, &mate) in [t2, t3, t4].iter().enumerate() {
        cut_splits[k] = members.iter().any(|c| c.is_cut(&[t1, mate]));
    }
    Ok(Family4 { t: ts, members, cut_splits })
}

/// The family map over every 4-subset of the index set.
#[derive(Clone, Debug)]
pub struct SubmatrixFamily<F: Field> {
    families: BTreeMap<[usize; 4], Family4<F>>,
}

impl<F: Field> SubmatrixFamily<F> {
    pub fn get(&self, t: &[usize; 4]) -> &Family4<F> {
        self.families.get(t).expect("no family for this quadruple")
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize; 4], &Family4<F>)> {
        self.families.iter()
    }

    /// Restricted view containing only quadruples inside `labels`.
    pub fn restrict(&self, labels: &[usize]) -> SubmatrixFamily<F> {
        let families = self
            .families
            .iter()
            .filter(|(t, _)| t.iter().all(|x| labels.contains(x)))
            .map(|(t, fam)| (*t, fam.clone()))
            .collect();
        SubmatrixFamily { families }
    }
}

pub fn submatrix_family<F: Field>(pm: &PMOracle<F>, labels: &[usize]) -> Result<SubmatrixFamily<F>> {
    assert!(labels.len() >= 4);
    let mut families = BTreeMap::new();
    for v in labels.iter().copied().combinations(4) {
        let t = [v[0], v[1], v[2], v[3]];
        let fam = family4(pm, &v).map_err(|e| e.at_subset(v.clone()))?;
        families.insert(t, fam);
    }
    Ok(SubmatrixFamily { families })
}

/// Order-≤4 principal minor equivalence between an oracle and an explicit
/// matrix on the same index set.
pub fn pme_upto4<F: Field>(pm: &PMOracle<F>, b: &Matrix<F>) -> Result<bool> {
    assert_eq!(pm.index(), b.index(), "index sets must agree");
    for s in subsets_size_then_lex(b.index()).filter(|s| s.len() <= 4) {
        if pm.query(&s)? != b.principal_minor(&s) {
            return Ok(false);
        }
    }
    Ok(true)
}
