use itertools::Itertools;

use crate::combinat::{minimal_true_assignment, subsets_size_then_lex, two_sat_solve, TwoSatInstance};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::Matrix;
use crate::smallrecon::SubmatrixFamily;

/// A set that looks like a cut through order-4 information alone: every
/// inside pair / outside pair combination passes the family cut test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlausibleSet {
    pub set: Vec<usize>,
    /// The anchoring quadruple as ((i,j),(k,l)) with {i,j} inside, {k,l} outside.
    pub quadruple: [(usize, usize); 2],
    /// The satisfying assignment over the remaining labels.
    pub assignment: Vec<(usize, bool)>,
}

/// True when some member of the family over {i,j,k,l} has {i,j} as a cut.
pub fn satisfies_p<F: Field>(
    fam: &SubmatrixFamily<F>,
    pair1: (usize, usize),
    pair2: (usize, usize),
) -> bool {
    let mut t = [pair1.0, pair1.1, pair2.0, pair2.1];
    t.sort_unstable();
    assert!(t.windows(2).all(|w| w[0] < w[1]), "labels must be distinct");
    fam.get(&t).has_cut_pair(pair1.0, pair1.1)
}

/// Shared skeleton for the black-box and explicit searches. `p` decides
/// whether a pair split of a quadruple counts as a cut.
fn search_with<P>(labels: &[usize], p: &P, minimize: bool) -> Option<PlausibleSet>
where
    P: Fn((usize, usize), (usize, usize)) -> bool,
{
    let n = labels.len();
    assert!(n >= 4, "need at least four indices");
    assert!(labels.windows(2).all(|w| w[0] < w[1]));

    let pairs: Vec<(usize, usize)> = labels.iter().copied().tuple_combinations().collect();
    for (pi, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[pi + 1..] {
            if k == i || k == j || l == i || l == j {
                continue;
            }
            if !p((i, j), (k, l)) {
                continue;
            }
            let free: Vec<usize> =
                labels.iter().copied().filter(|&e| e != i && e != j && e != k && e != l).collect();
            let mut inst = TwoSatInstance::new(free.len());
            for (v, &e) in free.iter().enumerate() {
                if !p((i, j), (k, e)) || !p((i, j), (l, e)) {
                    inst.add_unit((v, true));
                }
                if !p((i, e), (k, l)) || !p((j, e), (k, l)) {
                    inst.add_unit((v, false));
                }
            }
            for (vp, &ep) in free.iter().enumerate() {
                for (vq, &eq) in free.iter().enumerate() {
                    if vp == vq {
                        continue;
                    }
                    for a in [i, j] {
                        for c in [k, l] {
                            if !p((a, ep), (c, eq)) {
                                // p in S forces q in S
                                inst.add_clause((vq, true), (vp, false));
                            }
                        }
                    }
                }
            }
            if let Some(mut assign) = two_sat_solve(&inst) {
                if minimize {
                    assign = minimal_true_assignment(&inst, &assign).unwrap();
                }
                let mut set: Vec<usize> = free
                    .iter()
                    .zip(&assign)
                    .filter_map(|(&e, &b)| b.then_some(e))
                    .chain([i, j])
                    .collect();
                set.sort_unstable();
                return Some(PlausibleSet {
                    set,
                    quadruple: [(i, j), (k, l)],
                    assignment: free.into_iter().zip(assign).collect(),
                });
            }
        }
    }
    None
}

/// Cut finding from order-4 data: scans anchoring quadruples in
/// lexicographic order and solves a 2-SAT instance per candidate. Returns a
/// set that is a cut in some matrix sharing all principal minors with the
/// oracle's, or None when no quadruple yields one.
pub fn find_plausible_set<F: Field>(
    labels: &[usize],
    fam: &SubmatrixFamily<F>,
) -> Option<PlausibleSet> {
    search_with(labels, &|p1, p2| satisfies_p(fam, p1, p2), false)
}

/// As `find_plausible_set`, then shrinks the satisfying assignment to a
/// local minimum, so no proper subset reachable by unsetting variables is
/// itself plausible.
pub fn minimal_plausible_set<F: Field>(
    labels: &[usize],
    fam: &SubmatrixFamily<F>,
) -> Option<PlausibleSet> {
    search_with(labels, &|p1, p2| satisfies_p(fam, p1, p2), true)
}

/// The explicit-matrix adaptation: the quadruple test inspects A directly
/// instead of the reconstructed family.
pub fn find_cut_explicit<F: Field>(a: &Matrix<F>) -> Option<Vec<usize>> {
    if a.n() < 4 {
        return None;
    }
    let check = |p1: (usize, usize), p2: (usize, usize)| {
        let mut t = [p1.0, p1.1, p2.0, p2.1];
        t.sort_unstable();
        a.principal(&t).is_cut(&[p1.0.min(p1.1), p1.0.max(p1.1)])
    };
    search_with(a.index(), &check, false).map(|ps| ps.set)
}

/// Exhaustive cut scan, the test oracle for the searches above. Returns the
/// first cut in size-then-lexicographic subset order.
pub fn has_cut_bruteforce<F: Field>(a: &Matrix<F>) -> Result<Option<Vec<usize>>> {
    let n = a.n();
    if n > 16 {
        return Err(Error::TooLarge);
    }
    for x in subsets_size_then_lex(a.index()) {
        if x.len() < 2 {
            continue;
        }
        if x.len() > n - 2 {
            break;
        }
        if a.is_cut(&x) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use crate::oracle::PMOracle;
    use crate::smallrecon::submatrix_family;
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

    fn family_of(a: &Matrix<PrimeField>) -> SubmatrixFamily<PrimeField> {
        submatrix_family(&PMOracle::from_matrix(a), a.index()).unwrap()
    }

    fn is_plausible(s: &[usize], labels: &[usize], fam: &SubmatrixFamily<PrimeField>) -> bool {
        let sbar: Vec<usize> = labels.iter().copied().filter(|x| !s.contains(x)).collect();
        if s.len() < 2 || sbar.len() < 2 {
            return false;
        }
        s.iter()
            .tuple_combinations()
            .all(|(&a, &b)| sbar.iter().tuple_combinations().all(|(&c, &d)| satisfies_p(fam, (a, b), (c, d))))
    }

    #[test]
    fn satisfies_p_examples() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        let a = plant_cut(&fh, 4, &[1, 2], &mut rng);
        let fam = family_of(&a);
        assert!(satisfies_p(&fam, (1, 2), (3, 4)));
        assert!(satisfies_p(&fam, (3, 4), (1, 2)), "symmetric in the two pairs");

        // dense random 4x4: no PME-equivalent matrix has a cut
        let mut found = false;
        for _ in 0..5 {
            let b = dense_random(&fh, 4, &mut rng);
            let fam = family_of(&b);
            let any = satisfies_p(&fam, (1, 2), (3, 4))
                || satisfies_p(&fam, (1, 3), (2, 4))
                || satisfies_p(&fam, (1, 4), (2, 3));
            if !any {
                found = true;
            }
            assert_eq!(any, fam.get(&[1, 2, 3, 4]).members.iter().any(|m| {
                m.is_cut(&[1, 2]) || m.is_cut(&[1, 3]) || m.is_cut(&[1, 4])
            }));
        }
        assert!(found, "a generic 4x4 should fail every split");
    }

    #[test]
    fn transitivity_on_planted_instances() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(62);
        for _ in 0..15 {
            let n = 6 + (rng.gen_range(0..2u32) as usize);
            let x: Vec<usize> = if rng.gen_bool(0.5) { vec![1, 2] } else { vec![1, 2, 3] };
            let a = plant_cut(&fh, n, &x, &mut rng);
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            for v in labels.iter().copied().combinations(4) {
                for perm in [[0usize, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]] {
                    let (i, j) = (v[perm[0]], v[perm[1]]);
                    let (k, l1) = (v[perm[2]], v[perm[3]]);
                    for &l2 in &labels {
                        if [i, j, k, l1].contains(&l2) {
                            continue;
                        }
                        if satisfies_p(&fam, (i, j), (k, l1)) && satisfies_p(&fam, (i, j), (k, l2)) {
                            assert!(
                                satisfies_p(&fam, (i, j), (l1, l2)),
                                "transitivity violated at ({i},{j}) vs ({k},{l1},{l2})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn plausible_set_on_planted_cuts() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(63);
        for trial in 0..25 {
            let n = 5 + (trial % 4) as usize;
            let size = 2 + (trial % 2) as usize;
            let mut x: Vec<usize> = (1..=n).collect();
            for _ in 0..n.saturating_sub(size) {
                let d = rng.gen_range(0..x.len());
                x.remove(d);
            }
            if x.len() > n - 2 {
                continue;
            }
            let a = plant_cut(&fh, n, &x, &mut rng);
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            let ps = find_plausible_set(&labels, &fam).expect("planted cut must be discoverable");
            assert!(is_plausible(&ps.set, &labels, &fam), "soundness: all pair splits pass");
            let [(i, j), (k, l)] = ps.quadruple;
            assert!(ps.set.contains(&i) && ps.set.contains(&j));
            assert!(!ps.set.contains(&k) && !ps.set.contains(&l));

            let mps = minimal_plausible_set(&labels, &fam).unwrap();
            assert!(mps.set.len() <= ps.set.len());
            assert!(is_plausible(&mps.set, &labels, &fam));
            // no single flip below the minimal set stays plausible
            for &(e, b) in &mps.assignment {
                if b {
                    let shrunk: Vec<usize> =
                        mps.set.iter().copied().filter(|&z| z != e).collect();
                    assert!(!is_plausible(&shrunk, &labels, &fam));
                }
            }
        }
    }

    #[test]
    fn dense_random_has_no_plausible_set() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(64);
        for n in [5usize, 6] {
            let a = dense_random(&fh, n, &mut rng);
            assert_eq!(has_cut_bruteforce(&a).unwrap(), None);
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            assert_eq!(find_plausible_set(&labels, &fam), None);
            assert_eq!(minimal_plausible_set(&labels, &fam), None);
            assert_eq!(find_cut_explicit(&a), None);
        }
    }

    #[test]
    fn quadruple_case_returns_the_pair() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(65);
        let a = plant_cut(&fh, 4, &[2, 3], &mut rng);
        let fam = family_of(&a);
        let ps = find_plausible_set(&[1, 2, 3, 4], &fam).unwrap();
        // {2,3} is a cut iff {1,4} is; the lexicographically first anchoring
        // quadruple puts {1,4} inside
        assert!(ps.set == vec![2, 3] || ps.set == vec![1, 4]);
        assert!(ps.assignment.is_empty());
        let c = find_cut_explicit(&a).unwrap();
        assert!(a.is_cut(&c));
    }

    #[test]
    fn explicit_finder_agrees_with_bruteforce() {
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(66);
        for trial in 0..30 {
            let n = 5 + (trial % 5) as usize;
            let planted = trial % 3 != 2;
            let a = if planted {
                let size = 2 + rng.gen_range(0..(n - 3) as u32) as usize;
                let mut x: Vec<usize> = (1..=n).collect();
                while x.len() > size {
                    let d = rng.gen_range(0..x.len());
                    x.remove(d);
                }
                plant_cut(&fh, n, &x, &mut rng)
            } else {
                dense_random(&fh, n, &mut rng)
            };
            let brute = has_cut_bruteforce(&a).unwrap();
            let found = find_cut_explicit(&a);
            match (brute, found) {
                (Some(_), Some(x)) => assert!(a.is_cut(&x), "explicit finder must return a cut"),
                (None, None) => {}
                (b, f2) => panic!("disagreement: brute={b:?} explicit={f2:?}"),
            }
        }
    }

    #[test]
    fn nested_cuts_minimality() {
        // both {1,2} and {1,2,3,4} are genuine cuts; the minimal search must
        // settle on the inner one
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(67);
        for _ in 0..10 {
            let n = 7;
            let nz = |rng: &mut ChaCha20Rng| 1 + rng.gen_range(0..2436u64);
            let mut a = dense_random(&fh, n, &mut rng);
            let ps: Vec<u64> = (0..4).map(|_| nz(&mut rng)).collect();
            let qs: Vec<u64> = (0..3).map(|_| nz(&mut rng)).collect();
            let us: Vec<u64> = (0..3).map(|_| nz(&mut rng)).collect();
            let vs: Vec<u64> = (0..4).map(|_| nz(&mut rng)).collect();
            let w: Vec<u64> = (0..2).map(|_| nz(&mut rng)).collect();
            let z: Vec<u64> = (0..2).map(|_| nz(&mut rng)).collect();
            for i in 1..=4usize {
                for c in 5..=7usize {
                    a.set(i, c, fh.mul(&ps[i - 1], &qs[c - 5]));
                    a.set(c, i, fh.mul(&us[c - 5], &vs[i - 1]));
                }
            }
            for i in 1..=2usize {
                for j in 3..=4usize {
                    a.set(i, j, fh.mul(&ps[i - 1], &w[j - 3]));
                    a.set(j, i, fh.mul(&z[j - 3], &vs[i - 1]));
                }
            }
            assert!(a.is_cut(&[1, 2, 3, 4]));
            assert!(a.is_cut(&[1, 2]));
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            let mps = minimal_plausible_set(&labels, &fam).unwrap();
            assert_eq!(mps.set.len(), 2, "the inner cut should win after minimization");
            assert!(is_plausible(&mps.set, &labels, &fam));
        }
    }

    #[test]
    fn bruteforce_examples() {
        let fh = f();
        let a = Matrix::from_i64_rows(
            fh.clone(),
            &[vec![5, 1, 0, 0], vec![1, 6, 0, 0], vec![0, 0, 7, 1], vec![0, 0, 1, 8]],
        );
        assert_eq!(has_cut_bruteforce(&a).unwrap(), Some(vec![1, 2]));
        let small = Matrix::from_i64_rows(fh.clone(), &[vec![1, 2], vec![3, 4]]);
        assert_eq!(has_cut_bruteforce(&small).unwrap(), None);
        let mut rng = ChaCha20Rng::seed_from_u64(68);
        let big = dense_random(&fh, 17, &mut rng);
        assert_eq!(has_cut_bruteforce(&big), Err(Error::TooLarge));
    }

    #[test]
    fn blackbox_plausible_iff_brute_cut_on_r_matrices() {
        // completeness direction: brute-force cut implies a plausible set
        let fh = f();
        let mut rng = ChaCha20Rng::seed_from_u64(69);
        for trial in 0..20 {
            let n = 5 + (trial % 3) as usize;
            let a = if trial % 2 == 0 {
                plant_cut(&fh, n, &[1, 3], &mut rng)
            } else {
                dense_random(&fh, n, &mut rng)
            };
            let fam = family_of(&a);
            let labels: Vec<usize> = (1..=n).collect();
            let plausible = find_plausible_set(&labels, &fam);
            if has_cut_bruteforce(&a).unwrap().is_some() {
                assert!(plausible.is_some());
            }
            if plausible.is_none() {
                assert_eq!(has_cut_bruteforce(&a).unwrap(), None);
            }
        }
    }
}
