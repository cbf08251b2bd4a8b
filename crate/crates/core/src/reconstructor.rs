use itertools::Itertools;

use crate::cutfinder::{find_plausible_set, minimal_plausible_set};
use crate::error::{Error, Result};
use crate::field::{solve_quadratic, Field};
use crate::matrix::Matrix;
use crate::oracle::PMOracle;
use crate::smallrecon::{
    entry_quadratic, pme_upto4, recon2, recon3, submatrix_family, SubmatrixFamily,
};

/// Peeling order for a cut-free index set: removing the recorded indices one
/// by one (largest position first) keeps every prefix cut-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoCutSequence {
    pub anchors: (usize, usize),
    /// (i_n, ..., i_3): prefix I_j = {r, s, i_3..i_j} has no cut for every j.
    pub order: Vec<usize>,
}

/// Finds an index whose removal keeps the matrix cut-free and recurses.
pub fn no_cut_sequence<F: Field>(
    labels: &[usize],
    fam: &SubmatrixFamily<F>,
    r: usize,
    s: usize,
) -> Result<NoCutSequence> {
    assert!(labels.len() >= 4);
    assert!(r != s && labels.contains(&r) && labels.contains(&s));
    let mut order = Vec::with_capacity(labels.len() - 2);
    let mut cur: Vec<usize> = labels.to_vec();
    while cur.len() > 4 {
        let e = cur
            .iter()
            .copied()
            .filter(|&e| e != r && e != s)
            .find(|&e| {
                let rest: Vec<usize> = cur.iter().copied().filter(|&x| x != e).collect();
                find_plausible_set(&rest, fam).is_none()
            })
            .ok_or(Error::NoRemovableIndex)?;
        order.push(e);
        cur.retain(|&x| x != e);
    }
    let tail: Vec<usize> = cur.into_iter().filter(|&x| x != r && x != s).collect();
    order.push(tail[1]);
    order.push(tail[0]);
    Ok(NoCutSequence { anchors: (r, s), order })
}

/// Reconstruction for cut-free matrices: grow the output one index at a
/// time, resolving each unknown entry pair through its quadratic and
/// accepting the first candidate (direct, then conjugated-transpose) that
/// matches all revealed minors of order up to 4.
pub fn reconstruct_no_cut<F: Field>(
    pm: &PMOracle<F>,
    fam: &SubmatrixFamily<F>,
    labels: &[usize],
) -> Result<Matrix<F>> {
    let f = pm.field().clone();
    let n = labels.len();
    assert!(n >= 4);
    let i1 = labels[0];
    let i2 = labels[1];
    let seq = no_cut_sequence(labels, fam, i1, i2)?;
    let mut order = vec![i1, i2];
    order.extend(seq.order.iter().rev());

    let mut b = Matrix::from_fn(f.clone(), labels.to_vec(), |_, _| f.zero());
    b.set(i1, i1, pm.query(&[i1])?);
    b.set(i2, i2, pm.query(&[i2])?);
    b.set(i1, i2, f.one());
    b.set(i2, i1, pm.pair_product(i1, i2)?);

    for j in 3..=n {
        let ij = order[j - 1];
        b.set(ij, ij, pm.query(&[ij])?);
        b.set(i1, ij, f.one());
        b.set(ij, i1, pm.pair_product(i1, ij)?);

        let ks: Vec<usize> = if j == 3 {
            vec![i2]
        } else {
            let mut prefix: Vec<usize> = order[..j].to_vec();
            prefix.sort_unstable();
            let inner = no_cut_sequence(&prefix, fam, i1, ij)?;
            inner.order.iter().rev().copied().collect()
        };

        let mut l_prev = vec![i1.min(ij), i1.max(ij)];
        for &kl in &ks {
            let mut l_cur = l_prev.clone();
            l_cur.push(kl);
            l_cur.sort_unstable();

            let (qa, qb, qc) = entry_quadratic(pm, i1, ij, kl)?;
            let roots = match solve_quadratic(&f, &qa, &qb, &qc) {
                Ok(r) => r,
                Err(Error::DegenerateEquation) => vec![f.zero()],
                Err(e) => return Err(e),
            };
            let m_jk = pm.pair_product(ij, kl)?;
            let pm_l = pm.restrict(&l_cur);

            let direct = b.principal(&l_cur);
            let conjugated = (|| {
                // D-conjugated transpose of the already-fixed block; the kl
                // row and column stay as in the direct candidate
                let mut d = Vec::with_capacity(l_prev.len());
                for &x in &l_prev {
                    let dx = if x == i1 { f.one() } else { b.at(x, i1).clone() };
                    if f.is_zero(&dx) {
                        return None;
                    }
                    d.push(dx);
                }
                let mut m2 = direct.clone();
                for (xi, &x) in l_prev.iter().enumerate() {
                    for (yi, &y) in l_prev.iter().enumerate() {
                        if x == y {
                            continue;
                        }
                        let val = f.div(&f.mul(&d[xi], direct.at(y, x)), &d[yi]).unwrap();
                        m2.set(x, y, val);
                    }
                }
                Some(m2)
            })();

            let mut accepted = false;
            'candidates: for base in std::iter::once(Some(&direct)).chain([conjugated.as_ref()]) {
                let Some(base) = base else { continue };
                for gamma in &roots {
                    let lower = if f.is_zero(gamma) {
                        if f.is_zero(&m_jk) {
                            f.zero()
                        } else {
                            continue;
                        }
                    } else {
                        f.div(&m_jk, gamma).unwrap()
                    };
                    let mut cand = base.clone();
                    cand.set(ij, kl, gamma.clone());
                    cand.set(kl, ij, lower);
                    if pme_upto4(&pm_l, &cand)? {
                        for &x in &l_cur {
                            for &y in &l_cur {
                                b.set(x, y, cand.at(x, y).clone());
                            }
                        }
                        accepted = true;
                        break 'candidates;
                    }
                }
            }
            if !accepted {
                return Err(Error::NoCandidateAccepted);
            }
            l_prev = l_cur;
        }
    }
    Ok(b)
}

/// Glue two reconstructions over a cut: rank-one coupling blocks are rebuilt
/// from the bridge row/column through s and t.
pub fn combine_across_cut<F: Field>(
    m: &Matrix<F>,
    n: &Matrix<F>,
    s_set: &[usize],
    s: usize,
    t: usize,
) -> Result<Matrix<F>> {
    let f = m.field().clone();
    assert!(s_set.contains(&s) && !s_set.contains(&t));
    let n_st = n.at(s, t).clone();
    let n_ts = n.at(t, s).clone();
    if f.is_zero(&n_st) || f.is_zero(&n_ts) {
        return Err(Error::ZeroCouplingEntry);
    }
    let mut labels: Vec<usize> = s_set.to_vec();
    labels.extend(n.index().iter().copied().filter(|&x| x != s));
    labels.sort_unstable();
    let inside = |x: usize| s_set.contains(&x);
    let out = Matrix::from_fn(f.clone(), labels, |x, y| match (inside(x), inside(y)) {
        (true, true) => m.at(x, y).clone(),
        (false, false) => n.at(x, y).clone(),
        (true, false) => f.div(&f.mul(m.at(x, t), n.at(s, y)), &n_st).unwrap(),
        (false, true) => f.div(&f.mul(n.at(x, s), m.at(t, y)), &n_ts).unwrap(),
    });
    Ok(out)
}

/// Counters exposed by the recursive reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReconStats {
    pub combines: u64,
    pub no_cut_calls: u64,
}

fn rec_reconstruct<F: Field>(
    pm: &PMOracle<F>,
    fam: &SubmatrixFamily<F>,
    labels: &[usize],
    stats: &mut ReconStats,
) -> Result<Matrix<F>> {
    match labels.len() {
        0 | 1 => unreachable!("recursion never reaches sets below size 2"),
        2 => recon2(pm, (labels[0], labels[1])),
        3 => Ok(recon3(pm, (labels[0], labels[1], labels[2]))?.swap_remove(0)),
        _ => match minimal_plausible_set(labels, fam) {
            None => {
                stats.no_cut_calls += 1;
                reconstruct_no_cut(pm, fam, labels)
            }
            Some(ps) => {
                let s_set = ps.set;
                let sbar: Vec<usize> =
                    labels.iter().copied().filter(|x| !s_set.contains(x)).collect();
                let s = s_set[0];
                let t = sbar[0];
                let mut splus = s_set.clone();
                splus.push(t);
                splus.sort_unstable();
                let mut sbarplus = sbar;
                sbarplus.push(s);
                sbarplus.sort_unstable();
                let m = rec_reconstruct(pm, fam, &splus, stats)?;
                let n = rec_reconstruct(pm, fam, &sbarplus, stats)?;
                stats.combines += 1;
                combine_across_cut(&m, &n, &s_set, s, t)
            }
        },
    }
}

/// Full reconstruction from order-≤4 queries for dense matrices with the
/// rank-one extension property: split across cuts recursively, solve the
/// cut-free cores iteratively.
pub fn reconstruct_prop_r<F: Field>(pm: &PMOracle<F>) -> Result<Matrix<F>> {
    Ok(reconstruct_prop_r_with_stats(pm)?.0)
}

pub fn reconstruct_prop_r_with_stats<F: Field>(pm: &PMOracle<F>) -> Result<(Matrix<F>, ReconStats)> {
    let labels = pm.index().to_vec();
    let mut stats = ReconStats::default();
    let out = match labels.len() {
        0 => return Err(Error::BadInput("empty index set".into())),
        1 => {
            let q = pm.query(&[labels[0]])?;
            Matrix::new(pm.field().clone(), labels, vec![q])?
        }
        2 => recon2(pm, (labels[0], labels[1]))?,
        3 => recon3(pm, (labels[0], labels[1], labels[2]))?.swap_remove(0),
        _ => {
            let fam = submatrix_family(pm, &labels)?;
            rec_reconstruct(pm, &fam, &labels, &mut stats)?
        }
    };
    Ok((out, stats))
}

/// Exhaustive property check: density plus, for every rank-one 2x2
/// off-diagonal block, a bipartition extending it on the same side.
pub fn verify_property_r<F: Field>(a: &Matrix<F>) -> Result<bool> {
    let n = a.n();
    if n > 16 {
        return Err(Error::TooLarge);
    }
    let idx = a.index();
    for &i in idx {
        for &j in idx {
            if i != j && a.field().is_zero(a.at(i, j)) {
                return Ok(false);
            }
        }
    }
    if n < 4 {
        return Ok(true);
    }
    for rows in idx.iter().copied().combinations(2) {
        for cols in idx.iter().copied().combinations(2) {
            if cols.iter().any(|c| rows.contains(c)) {
                continue;
            }
            if a.rank_block(&rows, &cols) != 1 {
                continue;
            }
            let rest: Vec<usize> =
                idx.iter().copied().filter(|x| !rows.contains(x) && !cols.contains(x)).collect();
            let mut extended = false;
            'split: for take in 0..(1u32 << rest.len()) {
                let mut x: Vec<usize> = rows.clone();
                for (bit, &e) in rest.iter().enumerate() {
                    if take >> bit & 1 == 1 {
                        x.push(e);
                    }
                }
                x.sort_unstable();
                let xbar: Vec<usize> = idx.iter().copied().filter(|e| !x.contains(e)).collect();
                if a.rank_block(&x, &xbar) <= 1 {
                    extended = true;
                    break 'split;
                }
            }
            if !extended {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::subsets_size_then_lex;
    use crate::cutfinder::has_cut_bruteforce;
    use crate::field::PrimeField;
    use crate::oracle::PolyBox;
    use crate::smallrecon::family4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn f() -> PrimeField {
        PrimeField::new(2437).unwrap()
    }

    fn dense_random(f: &PrimeField, n: usize, rng: &mut ChaCha20Rng) -> Matrix<PrimeField> {
        Matrix::from_fn(f.clone(), (1..=n).collect(), |_, _| 1 + rng.gen_range(0..2436))
    }

    fn plant_cut(
        f: &PrimeField,
        n: usize,
        x: &[usize],
        rng: &mut ChaCha20Rng,
    ) -> Matrix<PrimeField> {
        let mut a = dense_random(f, n, rng);
        let xb: Vec<usize> = (1..=n).filter(|i| !x.contains(i)).collect();
        let nz = |rng: &mut ChaCha20Rng| 1 + rng.gen_range(0..2436u64);
        let p: Vec<u64> = x.iter().map(|_| nz(rng)).collect();
        let q: Vec<u64> = xb.iter().map(|_| nz(rng)).collect();
        let u: Vec<u64> = xb.iter().map(|_| nz(rng)).collect();
        let v: Vec<u64> = x.iter().map(|_| nz(rng)).collect();
        for (r, &i) in x.iter().enumerate() {
            for (c, &j) in xb.iter().enumerate() {
                a.set(i, j, f.mul(&p[r], &q[c]));
                a.set(j, i, f.mul(&u[c], &v[r]));
            }
        }
        assert!(a.is_cut(x));
        a
    }

    fn full_pme(a: &Matrix<PrimeField>, b: &Matrix<PrimeField>) -> bool {
        subsets_size_then_lex(a.index()).all(|s| a.principal_minor(&s) == b.principal_minor(&s))
    }

    fn family_of(a: &Matrix<PrimeField>) -> SubmatrixFamily<PrimeField> {
        submatrix_family(&PMOracle::from_matrix(a), a.index()).unwrap()
    }

    #[test]
    fn no_cut_sequence_prefixes_are_cut_free() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(71);
        for n in [5usize, 6, 8] {
            let a = dense_random(&fh, n, &mut rng);
            assert_eq!(has_cut_bruteforce(&a).unwrap(), None);
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            let seq = no_cut_sequence(&labels, &fam, 1, 2).unwrap();
            assert_eq!(seq.order.len(), n - 2);
            let mut rest: Vec<usize> = seq.order.clone();
            rest.reverse();
            for j in 4..=n {
                let mut prefix = vec![1, 2];
                prefix.extend(&rest[..j - 2]);
                prefix.sort_unstable();
                assert_eq!(
                    has_cut_bruteforce(&a.principal(&prefix)).unwrap(),
                    None,
                    "prefix I_{j} must be cut-free"
                );
            }
        }
    }

    #[test]
    fn no_cut_sequence_small_cases() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(72);
        let a = dense_random(&fh, 4, &mut rng);
        let fam = family_of(&a);
        let seq = no_cut_sequence(&[1, 2, 3, 4], &fam, 1, 3).unwrap();
        assert_eq!(seq.order, vec![4, 2]);

        let cut = plant_cut(&fh, 6, &[1, 2, 3], &mut rng);
        let famc = family_of(&cut);
        assert_eq!(
            no_cut_sequence(&[1, 2, 3, 4, 5, 6], &famc, 1, 2),
            Err(Error::NoRemovableIndex)
        );
    }

    #[test]
    fn reconstruct_no_cut_matches_all_minors() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(73);
        for n in [4usize, 5, 6] {
            for _ in 0..6 {
                let a = dense_random(&fh, n, &mut rng);
                if has_cut_bruteforce(&a).unwrap().is_some() {
                    continue;
                }
                let pm = PMOracle::from_matrix(&a);
                let fam = family_of(&a);
                let b = reconstruct_no_cut(&pm, &fam, a.index()).unwrap();
                assert!(full_pme(&a, &b), "n={n}");
                for &x in &a.index()[1..] {
                    assert_eq!(*b.at(1, x), fh.one(), "row of ones at the first anchor");
                }
            }
        }
    }

    #[test]
    fn reconstruct_no_cut_symmetric_source() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(74);
        for _ in 0..5 {
            let mut a = dense_random(&fh, 5, &mut rng);
            for i in 1..=5usize {
                for j in (i + 1)..=5 {
                    let v = a.at(i, j).clone();
                    a.set(j, i, v);
                }
            }
            if has_cut_bruteforce(&a).unwrap().is_some() {
                continue;
            }
            let b = reconstruct_no_cut(&PMOracle::from_matrix(&a), &family_of(&a), a.index())
                .unwrap();
            assert!(full_pme(&a, &b));
        }
    }

    #[test]
    fn reconstruct_no_cut_quadruple_lands_in_family() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(75);
        for _ in 0..10 {
            let a = dense_random(&fh, 4, &mut rng);
            if has_cut_bruteforce(&a).unwrap().is_some() {
                continue;
            }
            let pm = PMOracle::from_matrix(&a);
            let fam = family_of(&a);
            let b = reconstruct_no_cut(&pm, &fam, a.index()).unwrap();
            let f4 = family4(&pm, &[1, 2, 3, 4]).unwrap();
            assert!(f4.members.contains(&b));
        }
    }

    #[test]
    fn combine_exact_blocks() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(76);
        for n in [6usize, 7] {
            let x: Vec<usize> = if n == 6 { vec![1, 2, 5] } else { vec![2, 3] };
            let a = plant_cut(&fh, n, &x, &mut rng);
            let sbar: Vec<usize> = (1..=n).filter(|i| !x.contains(i)).collect();
            let s = x[0];
            let t = sbar[0];
            let mut splus = x.clone();
            splus.push(t);
            splus.sort_unstable();
            let mut sbarplus = sbar.clone();
            sbarplus.push(s);
            sbarplus.sort_unstable();

            let m = a.principal(&splus);
            let nm = a.principal(&sbarplus);
            let glued = combine_across_cut(&m, &nm, &x, s, t).unwrap();
            assert!(full_pme(&a, &glued), "exact blocks must glue to a PME matrix");

            // conjugate N by a random diagonal: still PME
            let d: Vec<u64> = (0..sbarplus.len()).map(|_| 1 + rng.gen_range(0..2436)).collect();
            let dm = Matrix::from_fn(fh.clone(), sbarplus.clone(), |i, j| {
                if i == j {
                    d[sbarplus.iter().position(|&z| z == i).unwrap()]
                } else {
                    fh.zero()
                }
            });
            let nm2 = dm.mul(&nm).mul(&dm.inverse().unwrap());
            let glued2 = combine_across_cut(&m, &nm2, &x, s, t).unwrap();
            assert!(full_pme(&a, &glued2));
        }
    }

    #[test]
    fn combine_rejects_zero_coupling() {
        let fh = f();
        // m over {1,2,3} = S+t with S={1,2}, t=3; n over {1,3,4} = S̄+s with s=1
        let m = Matrix::from_i64_rows(fh.clone(), &[vec![1, 1, 1], vec![1, 1, 1], vec![1, 1, 1]]);
        let mut n = Matrix::new(fh.clone(), vec![1, 3, 4], vec![fh.one(); 9]).unwrap();
        n.set(1, 3, fh.zero());
        assert_eq!(
            combine_across_cut(&m, &n, &[1, 2], 1, 3),
            Err(Error::ZeroCouplingEntry)
        );
    }

    #[test]
    fn reconstruct_prop_r_dense_instances() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        for n in [2usize, 3, 5, 7, 8] {
            let a = dense_random(&fh, n, &mut rng);
            let pm = PMOracle::from_matrix(&a);
            let (b, stats) = reconstruct_prop_r_with_stats(&pm).unwrap();
            assert!(full_pme(&a, &b), "n={n}");
            if n >= 5 && has_cut_bruteforce(&a).unwrap().is_none() {
                assert_eq!(stats.combines, 0);
                assert_eq!(stats.no_cut_calls, 1);
            }
        }
    }

    #[test]
    fn reconstruct_prop_r_planted_cut_combines_once() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(78);
        for _ in 0..5 {
            let a = plant_cut(&fh, 8, &[1, 2, 3, 4], &mut rng);
            if !verify_property_r(&a).unwrap() {
                continue;
            }
            let pm = PMOracle::from_matrix(&a);
            let (b, stats) = reconstruct_prop_r_with_stats(&pm).unwrap();
            assert!(full_pme(&a, &b));
            assert!(stats.combines >= 1, "a cut instance must take the combine path");
        }
    }

    #[test]
    fn reconstruct_queries_stay_order_four() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(79);
        let a = dense_random(&fh, 7, &mut rng);
        let pm = PMOracle::from_box(
            PolyBox::from_matrix(&a),
            a.index().to_vec(),
            Some(4),
        );
        let b = reconstruct_prop_r(&pm).unwrap();
        assert!(full_pme(&a, &b), "box-backed reconstruction with a hard order cap");
    }

    #[test]
    fn theorem_order_four_suffices() {
        // property R plus agreement up to order 4 forces full agreement
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(80);
        for trial in 0..12 {
            let n = 5 + trial % 3;
            let a = if trial % 2 == 0 {
                dense_random(&fh, n, &mut rng)
            } else {
                plant_cut(&fh, n, &[1, 2], &mut rng)
            };
            if !verify_property_r(&a).unwrap() {
                continue;
            }
            let pm = PMOracle::from_matrix(&a);
            let b = reconstruct_prop_r(&pm).unwrap();
            assert!(pme_upto4(&pm, &b).unwrap());
            assert!(full_pme(&a, &b));
        }
    }

    #[test]
    fn property_r_on_cut_instances() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(82);
        let dense = dense_random(&fh, 8, &mut rng);
        assert!(verify_property_r(&dense).unwrap());
        for x in [vec![1usize, 2], vec![2usize, 4, 5]] {
            let a = plant_cut(&fh, 7, &x, &mut rng);
            assert!(verify_property_r(&a).unwrap(), "planted cut {x:?} extends");
        }

        let mut holed = dense_random(&fh, 6, &mut rng);
        holed.set(2, 5, fh.zero());
        assert!(!verify_property_r(&holed).unwrap(), "zero entry breaks density");

        // breaking one entry of the coupling block leaves a 2x2 rank-one
        // block with no bipartition extension
        let mut broken = plant_cut(&fh, 6, &[1, 2], &mut rng);
        broken.set(1, 5, fh.add(broken.at(1, 5), &fh.one()));
        assert!(broken.rank_block(&[1, 2], &[3, 4]) == 1);
        assert!(!verify_property_r(&broken).unwrap());

        let big = dense_random(&fh, 17, &mut rng);
        assert_eq!(verify_property_r(&big), Err(Error::TooLarge));
    }
}
