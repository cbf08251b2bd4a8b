use std::time::{Duration, Instant};

use rand::Rng;

use crate::combinat::subsets_size_then_lex;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::Matrix;
use crate::oracle::{PMOracle, PolyBox};
use crate::reconstructor::reconstruct_prop_r_with_stats;

const R_MAX: u32 = 8;
const VERIFY_POINTS: usize = 8;

/// Counters for one `solve_blackbox_pmap` call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Diagonal shifts drawn, including the successful one.
    pub attempts: u64,
    /// Failed attempts (attempts - 1 on success).
    pub retries: u64,
    pub singular_shifts: u64,
    pub transitivity_failures: u64,
    pub reconstruct_failures: u64,
    pub assembly_failures: u64,
    pub verify_failures: u64,
    /// Block count of the successful attempt.
    pub blocks: u64,
    pub combine_count: u64,
    pub no_cut_calls: u64,
    /// Raw box evaluations consumed, including verification.
    pub box_queries: u64,
}

/// Wall-clock time spent in each phase, summed over retries.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub shift: Duration,
    pub blocks: Duration,
    pub reconstruct: Duration,
    pub verify: Duration,
}

/// Full record of a successful solve: the shift, the discovered blocks with
/// their reconstructions, the assembled C, and the output B = C^{-1} - D.
#[derive(Clone, Debug)]
pub struct PmapRun<F: Field> {
    /// Filled by callers that own the seed; the solver only sees an Rng.
    pub seed: Option<u64>,
    pub shift: Vec<F::Elem>,
    pub blocks: Vec<(Vec<usize>, Matrix<F>)>,
    pub assembled: Matrix<F>,
    pub output: Matrix<F>,
    pub stats: SolveStats,
    pub timings: PhaseTimings,
}

/// Greedy grouping by 2x2 irreducibility, then a full pairwise audit inside
/// each group. An audit failure means the shift was bad; the caller retries.
pub fn find_irreducible_blocks<F: Field>(pm: &PMOracle<F>) -> Result<Vec<Vec<usize>>> {
    let labels = pm.index().to_vec();
    let mut grouped = vec![false; labels.len()];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (ii, &i) in labels.iter().enumerate() {
        if grouped[ii] {
            continue;
        }
        grouped[ii] = true;
        let mut t = vec![i];
        for (jj, &j) in labels.iter().enumerate() {
            if !grouped[jj] && pm.check_2x2_irreducible(i, j)? {
                grouped[jj] = true;
                t.push(j);
            }
        }
        blocks.push(t);
    }
    for t in &blocks {
        for (xi, &x) in t.iter().enumerate() {
            for &y in &t[xi + 1..] {
                if !pm.check_2x2_irreducible(x, y)? {
                    return Err(Error::TransitivityViolation);
                }
            }
        }
    }
    Ok(blocks)
}

/// Stitch per-block reconstructions back together and undo the shift:
/// the result is C^{-1} - D over the original labels.
pub fn recombine<F: Field>(
    field: &F,
    blocks: &[(Vec<usize>, Matrix<F>)],
    d: &[F::Elem],
) -> Result<Matrix<F>> {
    let c = Matrix::assemble_blocks(field.clone(), blocks)?;
    undo_shift(field, &c, d)
}

fn undo_shift<F: Field>(field: &F, c: &Matrix<F>, d: &[F::Elem]) -> Result<Matrix<F>> {
    let cinv = c.inverse().ok_or(Error::SingularAssembly)?;
    let neg: Vec<F::Elem> = d.iter().map(|x| field.neg(x)).collect();
    Ok(cinv.plus_diag(&neg))
}

/// Learns B with det(B+Y) = det(A+Y) from evaluation access alone: shift by
/// a random diagonal, invert, split into irreducible blocks, reconstruct
/// each block from order-4 minors, recombine, and verify. Retries with a
/// fresh shift whenever any stage rejects.
pub fn solve_blackbox_pmap<F: Field, R: Rng + ?Sized>(
    bx: &PolyBox<F>,
    rng: &mut R,
) -> Result<(Matrix<F>, SolveStats)> {
    let run = solve_blackbox_pmap_run(bx, rng)?;
    Ok((run.output, run.stats))
}

/// As `solve_blackbox_pmap`, keeping the whole run record.
pub fn solve_blackbox_pmap_run<F: Field, R: Rng + ?Sized>(
    bx: &PolyBox<F>,
    rng: &mut R,
) -> Result<PmapRun<F>> {
    let f = bx.field().clone();
    let n = bx.arity();
    assert!(n >= 1);
    let labels: Vec<usize> = (1..=n).collect();
    let queries_at_start = bx.queries();
    let orig_pm = PMOracle::from_box(bx.clone(), labels.clone(), None);
    let mut stats = SolveStats::default();
    let mut timings = PhaseTimings::default();

    for _ in 0..R_MAX {
        stats.attempts += 1;
        let t0 = Instant::now();
        let d: Vec<F::Elem> = (0..n).map(|_| f.sample(rng)).collect();
        let shifted = bx.shifted_inverse(&d);
        timings.shift += t0.elapsed();
        let shifted = match shifted {
            Ok(s) => s,
            Err(Error::SingularShift) => {
                stats.singular_shifts += 1;
                stats.retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let g_pm = PMOracle::from_box(shifted, labels.clone(), Some(4));
        let t0 = Instant::now();
        let blocks = find_irreducible_blocks(&g_pm);
        timings.blocks += t0.elapsed();
        let blocks = match blocks {
            Ok(b) => b,
            Err(Error::TransitivityViolation) => {
                stats.transitivity_failures += 1;
                stats.retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };

        let t0 = Instant::now();
        let mut parts: Vec<(Vec<usize>, Matrix<F>)> = Vec::with_capacity(blocks.len());
        let mut combines = 0u64;
        let mut no_cut_calls = 0u64;
        let mut failed = false;
        for t in &blocks {
            let mut t = t.clone();
            t.sort_unstable();
            match reconstruct_prop_r_with_stats(&g_pm.restrict(&t)) {
                Ok((c, rs)) => {
                    combines += rs.combines;
                    no_cut_calls += rs.no_cut_calls;
                    parts.push((t, c));
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        timings.reconstruct += t0.elapsed();
        if failed {
            stats.reconstruct_failures += 1;
            stats.retries += 1;
            continue;
        }

        let assembled = Matrix::assemble_blocks(f.clone(), &parts)?;
        let b = match undo_shift(&f, &assembled, &d) {
            Ok(b) => b,
            Err(Error::SingularAssembly) => {
                stats.assembly_failures += 1;
                stats.retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };

        let t0 = Instant::now();
        let ok = verify_solution(bx, &orig_pm, &b, rng)?;
        timings.verify += t0.elapsed();
        if ok {
            stats.blocks = parts.len() as u64;
            stats.combine_count = combines;
            stats.no_cut_calls = no_cut_calls;
            stats.box_queries = bx.queries() - queries_at_start;
            return Ok(PmapRun {
                seed: None,
                shift: d,
                blocks: parts,
                assembled,
                output: b,
                stats,
                timings,
            });
        }
        stats.verify_failures += 1;
        stats.retries += 1;
    }

    if stats.singular_shifts == stats.attempts {
        Err(Error::SingularAlways)
    } else {
        Err(Error::RetriesExhausted)
    }
}

/// Order-≤4 minor agreement against the original box plus random-point
/// determinant agreement.
fn verify_solution<F: Field, R: Rng + ?Sized>(
    bx: &PolyBox<F>,
    orig_pm: &PMOracle<F>,
    b: &Matrix<F>,
    rng: &mut R,
) -> Result<bool> {
    let f = bx.field();
    for s in subsets_size_then_lex(orig_pm.index()).take_while(|s| s.len() <= 4) {
        if orig_pm.query(&s)? != b.principal_minor(&s) {
            return Ok(false);
        }
    }
    for _ in 0..VERIFY_POINTS {
        let y: Vec<F::Elem> = (0..bx.arity()).map(|_| f.sample(rng)).collect();
        if bx.eval_dense(&y)? != b.plus_diag(&y).det() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{choose_prime, PrimeField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fp(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn dense_random(f: &PrimeField, n: usize, rng: &mut ChaCha20Rng) -> Matrix<PrimeField> {
        let p = f.order().unwrap() as u64;
        Matrix::from_fn(f.clone(), (1..=n).collect(), |_, _| 1 + rng.gen_range(0..p - 1))
    }

    fn full_pme(a: &Matrix<PrimeField>, b: &Matrix<PrimeField>) -> bool {
        subsets_size_then_lex(a.index()).all(|s| a.principal_minor(&s) == b.principal_minor(&s))
    }

    #[test]
    fn blocks_of_dense_matrix() {
        let f = fp(2437);
        let mut rng = ChaCha20Rng::seed_from_u64(91);
        let a = dense_random(&f, 6, &mut rng);
        let pm = PMOracle::from_box(PolyBox::from_matrix(&a), (1..=6).collect(), Some(4));
        assert_eq!(find_irreducible_blocks(&pm).unwrap(), vec![vec![1, 2, 3, 4, 5, 6]]);
    }

    #[test]
    fn blocks_of_block_diagonal() {
        let f = fp(2437);
        let mut a = Matrix::from_fn(f.clone(), (1..=4).collect(), |_, _| f.zero());
        // dense blocks {1,3} and {2,4}
        for &(i, j, v) in
            &[(1, 1, 5u64), (1, 3, 2), (3, 1, 3), (3, 3, 7), (2, 2, 1), (2, 4, 4), (4, 2, 6), (4, 4, 2)]
        {
            a.set(i, j, v);
        }
        let pm = PMOracle::from_box(PolyBox::from_matrix(&a), (1..=4).collect(), Some(4));
        assert_eq!(find_irreducible_blocks(&pm).unwrap(), vec![vec![1, 3], vec![2, 4]]);
        let mut scc = a.scc_partition();
        scc.sort();
        assert_eq!(scc, vec![vec![1, 3], vec![2, 4]]);
    }

    #[test]
    fn blocks_of_triangular_matrix() {
        let f = fp(2437);
        let a = Matrix::from_fn(f.clone(), (1..=5).collect(), |i, j| {
            if i <= j {
                (i * 7 + j) as u64 % 2437
            } else {
                f.zero()
            }
        });
        let pm = PMOracle::from_box(PolyBox::from_matrix(&a), (1..=5).collect(), Some(4));
        let blocks = find_irreducible_blocks(&pm).unwrap();
        assert_eq!(blocks.len(), 5, "upper-triangular splits into singletons");
    }

    #[test]
    fn transitivity_violation_detected() {
        // a genuine matrix cannot couple {1,2} and {1,3} but not {2,3} after
        // greedy grouping succeeds, but a rigged box can:
        // f = y1*y2*y3 - y3 - y2 has exactly those two coupled pairs
        let f = fp(2437);
        let f2 = f.clone();
        let bx = PolyBox::from_fn(f.clone(), 3, 3, vec![false; 3], move |y| {
            let d = f2.mul(&f2.mul(&y[0], &y[1]), &y[2]);
            f2.sub(&f2.sub(&d, &y[2]), &y[1])
        });
        let pm = PMOracle::from_box(bx, vec![1, 2, 3], Some(4));
        assert!(pm.check_2x2_irreducible(1, 2).unwrap());
        assert!(pm.check_2x2_irreducible(1, 3).unwrap());
        assert!(!pm.check_2x2_irreducible(2, 3).unwrap());
        assert_eq!(find_irreducible_blocks(&pm), Err(Error::TransitivityViolation));
    }

    #[test]
    fn recombine_exact_inverse_roundtrip() {
        let f = fp(2437);
        let mut rng = ChaCha20Rng::seed_from_u64(92);
        for n in [1usize, 3, 5] {
            let a = dense_random(&f, n, &mut rng);
            let d: Vec<u64> = (0..n).map(|_| rng.gen_range(0..2437)).collect();
            let Some(c) = a.plus_diag(&d).inverse() else { continue };
            let out = recombine(&f, &[((1..=n).collect(), c)], &d).unwrap();
            assert_eq!(out, a, "C = (A+D)^{{-1}} must recombine to A exactly");
        }
    }

    #[test]
    fn recombine_scalar_block() {
        let f = fp(331);
        // C = 1/(a + d) for a = 17, d = 40: recombining returns a
        let c = Matrix::from_fn(f.clone(), vec![1], |_, _| f.inv(&57u64).unwrap());
        assert_eq!(*recombine(&f, &[(vec![1], c)], &[40]).unwrap().at(1, 1), 17);
    }

    #[test]
    fn recombine_diagonal_similar_blocks() {
        // conjugating each block of (A+D)^{-1} by a diagonal changes the
        // assembly but not the principal minors of the recombined output
        let f = fp(2437);
        let mut rng = ChaCha20Rng::seed_from_u64(98);
        for _ in 0..10 {
            let mut a = dense_random(&f, 6, &mut rng);
            for i in 1..=3usize {
                for j in 4..=6usize {
                    a.set(i, j, f.zero());
                    a.set(j, i, f.zero());
                }
            }
            let d: Vec<u64> = (0..6).map(|_| rng.gen_range(0..2437)).collect();
            let Some(c) = a.plus_diag(&d).inverse() else { continue };
            let parts: Vec<(Vec<usize>, Matrix<PrimeField>)> = [vec![1, 2, 3], vec![4, 5, 6]]
                .into_iter()
                .map(|lab| {
                    let e: Vec<u64> = (0..3).map(|_| 1 + rng.gen_range(0..2436)).collect();
                    let block = c.principal(&lab);
                    let conj = Matrix::from_fn(f.clone(), lab.clone(), |i, j| {
                        let ip = lab.iter().position(|&x| x == i).unwrap();
                        let jp = lab.iter().position(|&x| x == j).unwrap();
                        f.mul(&f.mul(&e[ip], block.at(i, j)), &f.inv(&e[jp]).unwrap())
                    });
                    (lab, conj)
                })
                .collect();
            let out = recombine(&f, &parts, &d).unwrap();
            assert!(full_pme(&a, &out));
        }
    }

    #[test]
    fn recombine_rejects_singular_assembly() {
        let f = fp(2437);
        let c = Matrix::from_i64_rows(f.clone(), &[vec![1, 1], vec![1, 1]]);
        assert_eq!(
            recombine(&f, &[(vec![1, 2], c)], &[0, 0]),
            Err(Error::SingularAssembly)
        );
    }

    #[test]
    fn solve_diagonal_matrix_exactly() {
        let f = fp(2437);
        let a = Matrix::from_i64_rows(
            f.clone(),
            &[vec![3, 0, 0], vec![0, 5, 0], vec![0, 0, 11]],
        );
        let mut rng = ChaCha20Rng::seed_from_u64(93);
        let (b, stats) = solve_blackbox_pmap(&PolyBox::from_matrix(&a), &mut rng).unwrap();
        assert_eq!(b, a, "diagonal input reconstructs exactly");
        assert_eq!(stats.blocks, 3);
    }

    #[test]
    fn solve_two_by_two_example() {
        let f = fp(331);
        let a = Matrix::from_i64_rows(f.clone(), &[vec![1, 2], vec![3, 1]]);
        let mut rng = ChaCha20Rng::seed_from_u64(94);
        let (b, _) = solve_blackbox_pmap(&PolyBox::from_matrix(&a), &mut rng).unwrap();
        assert_eq!(*b.at(1, 1), 1);
        assert_eq!(*b.at(2, 2), 1);
        assert_eq!(f.mul(b.at(1, 2), b.at(2, 1)), 6);
    }

    #[test]
    fn solve_random_dense_instances() {
        let mut rng = ChaCha20Rng::seed_from_u64(95);
        for n in [4usize, 6, 8] {
            let f = fp(choose_prime(n));
            let a = dense_random(&f, n, &mut rng);
            let run = solve_blackbox_pmap_run(&PolyBox::from_matrix(&a), &mut rng).unwrap();
            assert!(full_pme(&a, &run.output), "n={n}");
            assert_eq!(run.stats.blocks, 1);
            assert_eq!(run.stats.attempts, run.stats.retries + 1);
            assert_eq!(run.shift.len(), n);
            assert!(run.stats.box_queries > 0);
            assert_eq!(run.assembled, Matrix::assemble_blocks(f.clone(), &run.blocks).unwrap());
        }
    }

    #[test]
    fn solve_reducible_instance() {
        let mut rng = ChaCha20Rng::seed_from_u64(96);
        let f = fp(choose_prime(6));
        // two dense diagonal blocks with an upper coupling block: the
        // shifted inverse stays block-triangular, so discovery sees 2 blocks
        let mut a = dense_random(&f, 6, &mut rng);
        for i in 4..=6usize {
            for j in 1..=3usize {
                a.set(i, j, f.zero());
            }
        }
        let (b, stats) = solve_blackbox_pmap(&PolyBox::from_matrix(&a), &mut rng).unwrap();
        assert!(full_pme(&a, &b));
        assert_eq!(stats.blocks, 2);
    }

    #[test]
    fn solver_never_reads_entries() {
        // the solver sees only the evaluation closure; the box counter
        // proves all information flowed through eval
        let f = fp(choose_prime(5));
        let mut rng = ChaCha20Rng::seed_from_u64(97);
        let a = dense_random(&f, 5, &mut rng);
        let bx = PolyBox::from_matrix(&a);
        let before = bx.queries();
        let (b, stats) = solve_blackbox_pmap(&bx, &mut rng).unwrap();
        assert!(full_pme(&a, &b));
        assert_eq!(bx.queries() - before, stats.box_queries);
        assert!(stats.box_queries > 0);
    }

    #[test]
    fn blocks_agree_with_explicit_scc() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let f = fp(choose_prime(7));
        for _ in 0..10 {
            let mut a = dense_random(&f, 7, &mut rng);
            // zero out a random pattern to induce block structure
            for i in 1..=7usize {
                for j in 1..=7usize {
                    if i != j && rng.gen_bool(0.35) {
                        a.set(i, j, f.zero());
                    }
                }
            }
            let d: Vec<u64> = (0..7).map(|_| f.sample(&mut rng)).collect();
            let Some(cinv) = a.plus_diag(&d).inverse() else { continue };
            let Ok(g) = PolyBox::from_matrix(&a).shifted_inverse(&d) else { continue };
            let pm = PMOracle::from_box(g, (1..=7).collect(), Some(4));
            match find_irreducible_blocks(&pm) {
                Ok(blocks) => {
                    let mut sorted: Vec<Vec<usize>> = blocks
                        .into_iter()
                        .map(|mut b| {
                            b.sort_unstable();
                            b
                        })
                        .collect();
                    sorted.sort();
                    let mut scc = cinv.scc_partition();
                    scc.sort();
                    assert_eq!(sorted, scc);
                }
                Err(Error::TransitivityViolation) => {}
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
    }
}
