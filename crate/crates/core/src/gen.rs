//! Seeded instance generators and the explicit pairs that sit on the
//! order-four boundary of principal minor equivalence.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::Matrix;
use crate::rod::RodInstance;

pub const STREAM_SHIFT: &str = "shift";
pub const STREAM_ISOLATION: &str = "isolation";
pub const STREAM_GENERATION: &str = "generation";

const REDRAW_LIMIT: usize = 64;

/// One run seed fans out into independent streams keyed by label, so any
/// reported instance can be regenerated without replaying the whole run.
pub fn stream_rng(seed: u64, label: &str) -> ChaCha20Rng {
    const PRIME: u64 = 0x100000001b3;
    let fnv = |init: u64, bytes: &[u8]| {
        bytes.iter().fold(init, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
    };
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut h = fnv(0xcbf29ce484222325, label.as_bytes());
    for chunk in key[8..].chunks_mut(8) {
        h = fnv(h, &seed.to_le_bytes());
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

fn nonzero_sample<F: Field>(f: &F, rng: &mut ChaCha20Rng) -> F::Elem {
    loop {
        let x = f.sample(rng);
        if !f.is_zero(&x) {
            return x;
        }
    }
}

fn random_dense<F: Field>(f: &F, labels: &[usize], rng: &mut ChaCha20Rng) -> Matrix<F> {
    Matrix::from_fn(f.clone(), labels.to_vec(), |i, j| {
        if i == j {
            f.sample(rng)
        } else {
            nonzero_sample(f, rng)
        }
    })
}

/// Matrix with i.i.d. uniform entries, zeros on the off-diagonal redrawn so
/// the result is dense.
pub fn gen_random_dense<F: Field>(f: &F, n: usize, seed: u64) -> Result<Matrix<F>> {
    if n == 0 {
        return Err(Error::BadInput("need at least one row".into()));
    }
    let mut rng = stream_rng(seed, STREAM_GENERATION);
    Ok(random_dense(f, &(1..=n).collect::<Vec<_>>(), &mut rng))
}

fn planted<F: Field>(f: &F, labels: &[usize], splits: &[usize], rng: &mut ChaCha20Rng) -> Result<Matrix<F>> {
    let n = labels.len();
    let Some((&s, rest)) = splits.split_first() else {
        return Ok(random_dense(f, labels, rng));
    };
    if s < 2 || s + 2 > n {
        return Err(Error::BadInput("cut part must leave two labels on each side".into()));
    }
    let (xs, ys) = labels.split_at(s);
    let left = planted(f, xs, rest, rng)?;
    let right = random_dense(f, ys, rng);
    let row_out: Vec<F::Elem> = (0..s).map(|_| nonzero_sample(f, rng)).collect();
    let col_out: Vec<F::Elem> = (0..n - s).map(|_| nonzero_sample(f, rng)).collect();
    let row_in: Vec<F::Elem> = (0..n - s).map(|_| nonzero_sample(f, rng)).collect();
    let col_in: Vec<F::Elem> = (0..s).map(|_| nonzero_sample(f, rng)).collect();
    let m = Matrix::from_fn(f.clone(), labels.to_vec(), |i, j| {
        match (xs.binary_search(&i), xs.binary_search(&j)) {
            (Ok(_), Ok(_)) => left.at(i, j).clone(),
            (Err(_), Err(_)) => right.at(i, j).clone(),
            (Ok(r), Err(_)) => {
                let c = ys.binary_search(&j).unwrap();
                f.mul(&row_out[r], &col_out[c])
            }
            (Err(_), Ok(c)) => {
                let r = ys.binary_search(&i).unwrap();
                f.mul(&row_in[r], &col_in[c])
            }
        }
    });
    assert!(m.is_cut(xs), "planted coupling must be a cut");
    assert_eq!(m.scc_partition().len(), 1, "planted matrix must be irreducible");
    Ok(m)
}

/// Dense blocks joined by nonzero rank-one couplings in both directions, so
/// the first `splits[0]` labels form a cut of an irreducible matrix. Further
/// split sizes recurse into that part, nesting cuts.
pub fn gen_planted_cut<F: Field>(f: &F, n: usize, splits: &[usize], seed: u64) -> Result<Matrix<F>> {
    if splits.is_empty() {
        return Err(Error::BadInput("need at least one split".into()));
    }
    let mut rng = stream_rng(seed, STREAM_GENERATION);
    planted(f, &(1..=n).collect::<Vec<_>>(), splits, &mut rng)
}

/// Random det(B0 + sum y_i u_i v_i^T) instance. Every factor vector is
/// redrawn while zero, keeping each rank exactly one; instances whose
/// polynomial vanishes at a random probe are redrawn whole.
pub fn gen_rod_instance<F: Field>(f: &F, n: usize, r: usize, seed: u64) -> Result<RodInstance<F>> {
    if n == 0 || r == 0 {
        return Err(Error::BadInput("need at least one variable and one row".into()));
    }
    let mut rng = stream_rng(seed, STREAM_GENERATION);
    let vector = |rng: &mut ChaCha20Rng| loop {
        let v: Vec<F::Elem> = (0..r).map(|_| f.sample(rng)).collect();
        if v.iter().any(|x| !f.is_zero(x)) {
            return v;
        }
    };
    for _ in 0..REDRAW_LIMIT {
        let b0 = Matrix::from_fn(f.clone(), (1..=r).collect(), |_, _| f.sample(&mut rng));
        let factors: Vec<_> = (0..n).map(|_| (vector(&mut rng), vector(&mut rng))).collect();
        let inst = RodInstance::new(b0, factors)?;
        let probe: Vec<F::Elem> = (0..n).map(|_| f.sample(&mut rng)).collect();
        if !f.is_zero(&inst.eval(&probe)) {
            return Ok(inst);
        }
    }
    Err(Error::RetriesExhausted)
}

/// Directed n-cycle with a single reweighted closing edge. All proper
/// principal minors agree, so the pair matches to order n−1 yet differs at
/// the full order.
pub fn cycle_gap_pair<F: Field>(f: &F, n: usize) -> Result<(Matrix<F>, Matrix<F>)> {
    if n < 2 {
        return Err(Error::BadInput("cycle pair needs n >= 2".into()));
    }
    let build = |close: i64| {
        Matrix::from_fn(f.clone(), (1..=n).collect(), |i, j| {
            if i < n && j == i + 1 {
                f.one()
            } else if i == n && j == 1 {
                f.from_i64(close)
            } else {
                f.zero()
            }
        })
    };
    Ok((build(1), build(2)))
}

/// The order-four corner shared by the dense gap pairs. Swapping the two
/// marked entries is a cut-transpose of the corner, so every minor of order
/// at most four is preserved.
const GAP_CORNER: [[i64; 4]; 4] = [[1, 1, 1, 1], [2, 1, 1, 1], [1, 1, 1, 2], [1, 1, 1, 1]];

fn swap_corner<F: Field>(f: &F, a: &Matrix<F>) -> (Matrix<F>, Matrix<F>) {
    let mut b = a.clone();
    b.set(1, 2, f.from_i64(2));
    b.set(2, 1, f.from_i64(1));
    (a.clone(), b)
}

/// All-ones matrix carrying the corner, a symmetric band of twos from (4,5)
/// outward and twos at the (1,n) corner. The band blocks every cut that
/// would separate {1,2} from {3,4}, so the pair agrees on all minors of
/// order < n yet is not equivalent.
pub fn banded_gap_pair<F: Field>(f: &F, n: usize) -> Result<(Matrix<F>, Matrix<F>)> {
    if n < 5 {
        return Err(Error::BadInput("banded pair needs n >= 5".into()));
    }
    let a = Matrix::from_fn(f.clone(), (1..=n).collect(), |i, j| {
        if i <= 4 && j <= 4 {
            f.from_i64(GAP_CORNER[i - 1][j - 1])
        } else if i.abs_diff(j) == 1 && i.max(j) >= 5 {
            f.from_i64(2)
        } else if (i, j) == (1, n) || (i, j) == (n, 1) {
            f.from_i64(2)
        } else {
            f.one()
        }
    });
    Ok(swap_corner(f, &a))
}

/// Same corner with geometric entries 2^(i+j) elsewhere off the diagonal.
/// A dense pair that agrees to order four without being equivalent.
pub fn geometric_gap_pair<F: Field>(f: &F, n: usize) -> Result<(Matrix<F>, Matrix<F>)> {
    if n < 5 {
        return Err(Error::BadInput("geometric pair needs n >= 5".into()));
    }
    let two = f.from_i64(2);
    let a = Matrix::from_fn(f.clone(), (1..=n).collect(), |i, j| {
        if i <= 4 && j <= 4 {
            f.from_i64(GAP_CORNER[i - 1][j - 1])
        } else if i == j {
            f.one()
        } else {
            f.pow(&two, (i + j) as u64)
        }
    });
    Ok(swap_corner(f, &a))
}
