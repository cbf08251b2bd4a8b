use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec, PrimeField, RationalField};
use crate::matrix::Matrix;
use crate::oracle::{Point, PolyBox};
use crate::pmap::solve_blackbox_pmap;

const ISOLATION_ROUNDS: usize = 16;
const LEARN_RETRIES: usize = 8;
const LEARN_VERIFY_POINTS: usize = 16;

/// det(B0 + sum B_i y_i) with every B_i, i >= 1, stored as an outer product
/// u_i v_i^T, so the rank-one invariant holds by representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RodInstance<F: Field> {
    pub r: usize,
    pub n: usize,
    pub b0: Matrix<F>,
    pub factors: Vec<(Vec<F::Elem>, Vec<F::Elem>)>,
}

impl<F: Field> RodInstance<F> {
    pub fn new(
        b0: Matrix<F>,
        factors: Vec<(Vec<F::Elem>, Vec<F::Elem>)>,
    ) -> Result<RodInstance<F>> {
        let r = b0.n();
        if b0.index() != (1..=r).collect::<Vec<_>>() {
            return Err(Error::BadInput("B0 must use labels 1..=r".into()));
        }
        for (u, v) in &factors {
            if u.len() != r || v.len() != r {
                return Err(Error::BadInput("rank-one factor length mismatch".into()));
            }
        }
        Ok(RodInstance { r, n: factors.len(), b0, factors })
    }

    pub fn field(&self) -> &F {
        self.b0.field()
    }

    /// det(B0 + sum y_i u_i v_i^T) at a concrete point.
    pub fn eval(&self, y: &[F::Elem]) -> F::Elem {
        assert_eq!(y.len(), self.n);
        let f = self.field().clone();
        let m = Matrix::from_fn(f.clone(), (1..=self.r).collect(), |a, b| {
            let mut acc = self.b0.at(a, b).clone();
            for (yi, (u, v)) in y.iter().zip(&self.factors) {
                acc = f.add(&acc, &f.mul(yi, &f.mul(&u[a - 1], &v[b - 1])));
            }
            acc
        });
        m.det()
    }

    /// Evaluation access only; no coordinate is inverted.
    pub fn to_box(&self) -> PolyBox<F> {
        let inst = self.clone();
        let f = self.field().clone();
        PolyBox::from_fn(f, self.n, self.n, vec![false; self.n], move |y| inst.eval(y))
    }

    pub fn to_json(&self) -> Value {
        let f = self.field();
        let fmt = |xs: &[F::Elem]| xs.iter().map(|x| f.format_elem(x)).collect::<Vec<_>>();
        let b0: Vec<Vec<String>> = (1..=self.r)
            .map(|i| (1..=self.r).map(|j| f.format_elem(self.b0.at(i, j))).collect())
            .collect();
        let rank1: Vec<Value> =
            self.factors.iter().map(|(u, v)| json!({"u": fmt(u), "v": fmt(v)})).collect();
        json!({
            "field": serde_json::to_value(f.spec()).unwrap(),
            "n": self.n,
            "r": self.r,
            "B0": b0,
            "rank1": rank1,
        })
    }

    pub fn from_json(field: F, v: &Value) -> Result<RodInstance<F>> {
        let bad = |m: &str| Error::BadInput(format!("rod json: {m}"));
        let r = v.get("r").and_then(Value::as_u64).ok_or_else(|| bad("missing r"))? as usize;
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as usize;
        let rows = v.get("B0").and_then(Value::as_array).ok_or_else(|| bad("missing B0"))?;
        if rows.len() != r {
            return Err(bad("B0 row count mismatch"));
        }
        let mut entries = Vec::with_capacity(r * r);
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("B0 row must be an array"))?;
            if row.len() != r {
                return Err(bad("B0 row length mismatch"));
            }
            for cell in row {
                let s = cell.as_str().ok_or_else(|| bad("entries must be strings"))?;
                entries.push(field.parse_elem(s)?);
            }
        }
        let b0 = Matrix::new(field.clone(), (1..=r).collect(), entries)?;
        let parse_vec = |v: &Value| -> Result<Vec<F::Elem>> {
            let arr = v.as_array().ok_or_else(|| bad("factor must be an array"))?;
            if arr.len() != r {
                return Err(bad("factor length mismatch"));
            }
            arr.iter()
                .map(|c| {
                    let s = c.as_str().ok_or_else(|| bad("entries must be strings"))?;
                    field.parse_elem(s)
                })
                .collect()
        };
        let rank1 = v.get("rank1").and_then(Value::as_array).ok_or_else(|| bad("missing rank1"))?;
        if rank1.len() != n {
            return Err(bad("rank1 count mismatch"));
        }
        let mut factors = Vec::with_capacity(n);
        for fv in rank1 {
            let u = parse_vec(fv.get("u").ok_or_else(|| bad("missing u"))?)?;
            let vv = parse_vec(fv.get("v").ok_or_else(|| bad("missing v"))?)?;
            factors.push((u, vv));
        }
        RodInstance::new(b0, factors)
    }
}

/// Runtime-dispatched ROD instance for the CLI.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyRod {
    Prime(RodInstance<PrimeField>),
    Rational(RodInstance<RationalField>),
}

impl AnyRod {
    pub fn from_json(v: &Value) -> Result<AnyRod> {
        let spec: FieldSpec = serde_json::from_value(
            v.get("field").cloned().ok_or_else(|| Error::BadInput("rod json: missing field".into()))?,
        )
        .map_err(|e| Error::BadInput(format!("rod json: bad field spec: {e}")))?;
        match spec {
            FieldSpec::Prime { modulus } => {
                let p: u64 = modulus
                    .parse()
                    .map_err(|_| Error::BadInput(format!("bad modulus {modulus:?}")))?;
                Ok(AnyRod::Prime(RodInstance::from_json(PrimeField::new(p)?, v)?))
            }
            FieldSpec::Rational => Ok(AnyRod::Rational(RodInstance::from_json(RationalField, v)?)),
        }
    }

    pub fn from_json_str(s: &str) -> Result<AnyRod> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::BadInput(format!("invalid json: {e}")))?;
        AnyRod::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyRod::Prime(i) => i.to_json(),
            AnyRod::Rational(i) => i.to_json(),
        }
    }
}

/// One accepted monomial isolation over the homogenized box: weights on the
/// 2n variables (y block first), the per-index pick z_i in {y_i, t_i}, the
/// minimal isolated weight W, and the monomial's coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsolationContext<F: Field> {
    pub weights: Vec<u64>,
    pub selects_y: Vec<bool>,
    pub min_weight: u64,
    pub gamma: F::Elem,
}

/// f'(y, t) = t_1..t_n f(y_1/t_1, ..., y_n/t_n): homogeneous of degree n,
/// with the t half declared inverted so zeros there are interpolated away.
pub fn homogenize_box<F: Field>(bx: &PolyBox<F>) -> Result<PolyBox<F>> {
    let n = bx.arity();
    let f = bx.field().clone();
    if let Some(ord) = f.order() {
        if ord <= n as u128 + 1 {
            return Err(Error::FieldTooSmall);
        }
    }
    let inner = bx.clone();
    let f2 = f.clone();
    let raw: Arc<dyn Fn(&Point<F>) -> Result<F::Elem> + Send + Sync> =
        Arc::new(move |pt: &Point<F>| {
            let vals = pt.materialize(&f2, 2 * n);
            let mut scaled = Vec::with_capacity(n);
            let mut prod = f2.one();
            for i in 0..n {
                let ti = &vals[n + i];
                prod = f2.mul(&prod, ti);
                let ti_inv = f2.inv(ti).expect("inverted coordinates arrive nonzero");
                scaled.push(f2.mul(&vals[i], &ti_inv));
            }
            let fv = inner.eval_dense(&scaled)?;
            Ok(f2.mul(&prod, &fv))
        });
    let mut inverted = vec![false; 2 * n];
    inverted[n..].fill(true);
    Ok(PolyBox::from_raw(f, 2 * n, n, inverted, raw))
}

/// Monomial-basis coefficients of the unique degree < m polynomial through
/// (xs[k], ys[k]), via Newton divided differences.
fn univariate_coeffs<F: Field>(f: &F, xs: &[F::Elem], ys: &[F::Elem]) -> Vec<F::Elem> {
    let m = xs.len();
    assert_eq!(ys.len(), m);
    let mut dd = ys.to_vec();
    for k in 1..m {
        for j in (k..m).rev() {
            let num = f.sub(&dd[j], &dd[j - 1]);
            let den = f.sub(&xs[j], &xs[j - k]);
            dd[j] = f.div(&num, &den).expect("interpolation nodes are distinct");
        }
    }
    let mut coeffs = vec![f.zero(); m];
    let mut basis = vec![f.zero(); m];
    basis[0] = f.one();
    let mut basis_len = 1;
    for (k, c) in dd.iter().enumerate() {
        for j in 0..basis_len {
            coeffs[j] = f.add(&coeffs[j], &f.mul(c, &basis[j]));
        }
        if k + 1 < m {
            for j in (0..basis_len).rev() {
                let carry = basis[j].clone();
                basis[j + 1] = f.add(&basis[j + 1], &carry);
                basis[j] = f.mul(&f.neg(&xs[k]), &basis[j]);
            }
            basis_len += 1;
        }
    }
    coeffs
}

fn interpolation_nodes<F: Field>(f: &F, m: usize) -> Result<Vec<F::Elem>> {
    if let Some(ord) = f.order() {
        if ord <= m as u128 {
            return Err(Error::FieldTooSmall);
        }
    }
    Ok((1..=m as u64).map(|k| f.element_at(k).unwrap()).collect())
}

/// Finds a monomial of the homogenized box with nonzero coefficient: random
/// weights in [1, 4n] per variable, minimum-weight coefficient W located by
/// substituting s^w(v) and interpolating, membership by coefficient survival
/// under zeroing, and gamma read off at the 0/1 indicator point. Any
/// inconsistency draws fresh weights, up to 16 rounds.
pub fn isolate_monomial<F: Field, R: Rng + ?Sized>(
    fprime: &PolyBox<F>,
    rng: &mut R,
) -> Result<IsolationContext<F>> {
    let f = fprime.field().clone();
    assert_eq!(fprime.arity() % 2, 0, "homogenized box has 2n coordinates");
    let n = fprime.arity() / 2;
    let wmax = 4 * n as u64;

    'round: for _ in 0..ISOLATION_ROUNDS {
        let weights: Vec<u64> = (0..2 * n).map(|_| rng.gen_range(1..=wmax)).collect();
        let dmax: u64 = (0..n).map(|i| weights[i].max(weights[n + i])).sum();
        let m = dmax as usize + 1;
        let xs = interpolation_nodes(&f, m)?;

        let substituted = |x: &F::Elem, zeroed: Option<usize>| -> Vec<F::Elem> {
            (0..2 * n)
                .map(|v| {
                    if zeroed == Some(v) {
                        f.zero()
                    } else {
                        f.pow(x, weights[v])
                    }
                })
                .collect()
        };
        let mut gvals = Vec::with_capacity(m);
        for x in &xs {
            gvals.push(fprime.eval_dense(&substituted(x, None))?);
        }
        let coeffs = univariate_coeffs(&f, &xs, &gvals);
        let Some(w_idx) = coeffs.iter().position(|c| !f.is_zero(c)) else {
            // the zero polynomial has no monomial to isolate, under any weights
            return Err(Error::IsolationFailed);
        };
        let cw = coeffs[w_idx].clone();

        let mut selected = vec![false; 2 * n];
        for v in 0..2 * n {
            let mut vals = Vec::with_capacity(m);
            for x in &xs {
                vals.push(fprime.eval_dense(&substituted(x, Some(v)))?);
            }
            selected[v] = f.is_zero(&univariate_coeffs(&f, &xs, &vals)[w_idx]);
        }

        for i in 0..n {
            if selected[i] == selected[n + i] {
                continue 'round;
            }
        }
        let picked_weight: u64 =
            (0..2 * n).filter(|&v| selected[v]).map(|v| weights[v]).sum();
        if picked_weight != w_idx as u64 {
            continue 'round;
        }
        let indicator: Vec<F::Elem> =
            selected.iter().map(|&s| if s { f.one() } else { f.zero() }).collect();
        let gamma = fprime.eval_dense(&indicator)?;
        if gamma != cw {
            continue 'round;
        }
        return Ok(IsolationContext {
            weights,
            selects_y: selected[..n].to_vec(),
            min_weight: w_idx as u64,
            gamma,
        });
    }
    Err(Error::IsolationFailed)
}

/// h(z) = gamma^{-1} f'(z at the selected slots, 1 at the complements),
/// which is det(A + Z) for an unknown A.
pub fn pmap_shaped_box<F: Field>(fprime: &PolyBox<F>, ctx: &IsolationContext<F>) -> PolyBox<F> {
    let f = fprime.field().clone();
    let n = ctx.selects_y.len();
    assert_eq!(fprime.arity(), 2 * n);
    let gamma_inv = f.inv(&ctx.gamma).expect("isolated coefficient is nonzero");
    let selects_y = ctx.selects_y.clone();
    let inner = fprime.clone();
    let f2 = f.clone();
    let raw: Arc<dyn Fn(&Point<F>) -> Result<F::Elem> + Send + Sync> =
        Arc::new(move |pt: &Point<F>| {
            let z = pt.materialize(&f2, n);
            let mut full = vec![f2.one(); 2 * n];
            for i in 0..n {
                let slot = if selects_y[i] { i } else { n + i };
                full[slot] = z[i].clone();
            }
            let fv = inner.eval_dense(&full)?;
            Ok(f2.mul(&gamma_inv, &fv))
        });
    PolyBox::from_raw(f, n, n, vec![false; n], raw)
}

/// Steps 1-3 of the reduction: homogenize, isolate, and form the PMAP box.
pub fn reduce_rod_to_pmap<F: Field, R: Rng + ?Sized>(
    bx: &PolyBox<F>,
    rng: &mut R,
) -> Result<(PolyBox<F>, IsolationContext<F>)> {
    let fprime = homogenize_box(bx)?;
    let ctx = isolate_monomial(&fprime, rng)?;
    let h = pmap_shaped_box(&fprime, &ctx);
    Ok((h, ctx))
}

/// Steps 4-5: from the PMAP answer A', rebuild rank-one coefficients.
/// Row i of [I_n; A'] lands in B_i when y_i was selected and in B0
/// otherwise; first rows carry the gamma scaling.
pub fn lift_pmap_solution<F: Field>(
    ctx: &IsolationContext<F>,
    a_prime: &Matrix<F>,
) -> RodInstance<F> {
    let f = a_prime.field().clone();
    let n = a_prime.n();
    assert_eq!(ctx.selects_y.len(), n);
    assert_eq!(a_prime.index(), (1..=n).collect::<Vec<_>>());
    let unit = |i: usize| -> Vec<F::Elem> {
        (1..=n).map(|k| if k == i { f.one() } else { f.zero() }).collect()
    };
    let aprime_row = |i: usize| -> Vec<F::Elem> {
        (1..=n).map(|j| a_prime.at(i, j).clone()).collect()
    };
    let b0 = Matrix::from_fn(f.clone(), (1..=n).collect(), |i, j| {
        let cell = if ctx.selects_y[i - 1] {
            a_prime.at(i, j).clone()
        } else if i == j {
            f.one()
        } else {
            f.zero()
        };
        if i == 1 {
            f.mul(&ctx.gamma, &cell)
        } else {
            cell
        }
    });
    let factors: Vec<(Vec<F::Elem>, Vec<F::Elem>)> = (1..=n)
        .map(|i| {
            let mut v = if ctx.selects_y[i - 1] { unit(i) } else { aprime_row(i) };
            if i == 1 {
                for x in &mut v {
                    *x = f.mul(&ctx.gamma, x);
                }
            }
            (unit(i), v)
        })
        .collect();
    RodInstance { r: n, n, b0, factors }
}

/// The converse direction: when det(B0 + sum B_i y_i) = det(A + Y) for some
/// A, the factor matrices U and V^T are square and invertible, and
/// A' = U^{-1} B0 (V^T)^{-1} reproduces it.
pub fn pmap_to_rod_extract<F: Field>(inst: &RodInstance<F>) -> Result<Matrix<F>> {
    if inst.r != inst.n {
        return Err(Error::NotPmapShaped);
    }
    let f = inst.field().clone();
    let n = inst.n;
    let labels: Vec<usize> = (1..=n).collect();
    let u = Matrix::from_fn(f.clone(), labels.clone(), |i, j| inst.factors[j - 1].0[i - 1].clone());
    let vt = Matrix::from_fn(f.clone(), labels, |i, j| inst.factors[i - 1].1[j - 1].clone());
    let u_inv = u.inverse().ok_or(Error::NotPmapShaped)?;
    let vt_inv = vt.inverse().ok_or(Error::NotPmapShaped)?;
    Ok(u_inv.mul(&inst.b0).mul(&vt_inv))
}

/// Learns a rank-one decomposition of a read-once determinant from
/// evaluation access: reduce to PMAP, solve, lift, and verify at random
/// points, re-isolating on mismatch.
pub fn learn_rod<F: Field, R: Rng + ?Sized>(
    bx: &PolyBox<F>,
    rng: &mut R,
) -> Result<RodInstance<F>> {
    let f = bx.field().clone();
    let n = bx.arity();
    for _ in 0..LEARN_RETRIES {
        let (h, ctx) = reduce_rod_to_pmap(bx, rng)?;
        let a_prime = match solve_blackbox_pmap(&h, rng) {
            Ok((m, _)) => m,
            Err(Error::RetriesExhausted) | Err(Error::SingularAlways) => continue,
            Err(e) => return Err(e),
        };
        let inst = lift_pmap_solution(&ctx, &a_prime);
        let mut ok = true;
        for _ in 0..LEARN_VERIFY_POINTS {
            let y: Vec<F::Elem> = (0..n).map(|_| f.sample(rng)).collect();
            if bx.eval_dense(&y)? != inst.eval(&y) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(inst);
        }
    }
    Err(Error::RetriesExhausted)
}
