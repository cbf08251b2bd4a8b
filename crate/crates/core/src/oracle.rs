use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::field::{batch_invert, Field};
use crate::matrix::{det_and_inverse, det_entries, Matrix};

static NEXT_POINT_ID: AtomicU64 = AtomicU64::new(1);

/// Shared dense diagonal with a process-unique id, so evaluation caches can
/// key on the vector without comparing entries.
#[derive(Debug)]
pub struct BasePoint<F: Field> {
    pub id: u64,
    pub vals: Vec<F::Elem>,
}

impl<F: Field> BasePoint<F> {
    pub fn new(vals: Vec<F::Elem>) -> Arc<BasePoint<F>> {
        Arc::new(BasePoint { id: NEXT_POINT_ID.fetch_add(1, Ordering::Relaxed), vals })
    }
}

/// Structured evaluation point: coordinate i reads `overrides[i]` when
/// present, otherwise `base[i] + fill` (an absent base is the zero vector).
/// Keeping points in this shape lets matrix-backed boxes reuse one
/// factorization per (base, fill) across many sparse overrides.
#[derive(Clone, Debug)]
pub struct Point<F: Field> {
    pub base: Option<Arc<BasePoint<F>>>,
    pub fill: F::Elem,
    pub overrides: Vec<(usize, F::Elem)>,
}

impl<F: Field> Point<F> {
    pub fn dense(f: &F, vals: Vec<F::Elem>) -> Point<F> {
        Point { base: Some(BasePoint::new(vals)), fill: f.zero(), overrides: Vec::new() }
    }

    pub fn uniform(fill: F::Elem) -> Point<F> {
        Point { base: None, fill, overrides: Vec::new() }
    }

    pub fn zero(f: &F) -> Point<F> {
        Point::uniform(f.zero())
    }

    /// Sets sorted absolute overrides, replacing any previous ones.
    pub fn with_overrides(mut self, overrides: Vec<(usize, F::Elem)>) -> Point<F> {
        debug_assert!(overrides.windows(2).all(|w| w[0].0 < w[1].0));
        self.overrides = overrides;
        self
    }

    pub fn base_id(&self) -> u64 {
        self.base.as_ref().map_or(0, |b| b.id)
    }

    pub fn value_at(&self, f: &F, i: usize) -> F::Elem {
        if let Ok(k) = self.overrides.binary_search_by_key(&i, |e| e.0) {
            return self.overrides[k].1.clone();
        }
        match &self.base {
            Some(b) => f.add(&b.vals[i], &self.fill),
            None => self.fill.clone(),
        }
    }

    pub fn materialize(&self, f: &F, arity: usize) -> Vec<F::Elem> {
        (0..arity).map(|i| self.value_at(f, i)).collect()
    }

    /// Product of all coordinates.
    pub fn product(&self, f: &F, arity: usize) -> F::Elem {
        match &self.base {
            Some(_) => {
                let mut acc = f.one();
                for v in self.materialize(f, arity) {
                    acc = f.mul(&acc, &v);
                }
                acc
            }
            None => {
                let free = arity - self.overrides.len();
                let mut acc = f.pow(&self.fill, free as u64);
                for (_, v) in &self.overrides {
                    acc = f.mul(&acc, v);
                }
                acc
            }
        }
    }

    /// Copy with the given coordinates forced to `value`.
    pub fn substituting(&self, coords: &[usize], value: &F::Elem) -> Point<F> {
        let mut ov = self.overrides.clone();
        for &c in coords {
            match ov.binary_search_by_key(&c, |e| e.0) {
                Ok(k) => ov[k].1 = value.clone(),
                Err(k) => ov.insert(k, (c, value.clone())),
            }
        }
        Point { base: self.base.clone(), fill: self.fill.clone(), overrides: ov }
    }
}

type RawFn<F> = dyn Fn(&Point<F>) -> Result<<F as Field>::Elem> + Send + Sync;

struct InterpTables<F: Field> {
    /// m -> Lagrange weights evaluating at zero from nodes 1..m
    at_zero: BTreeMap<usize, Arc<Vec<F::Elem>>>,
    /// m -> weights extracting the degree-(m-1) coefficient from nodes 1..m
    leading: BTreeMap<usize, Arc<Vec<F::Elem>>>,
}

impl<F: Field> Default for InterpTables<F> {
    fn default() -> Self {
        InterpTables { at_zero: BTreeMap::new(), leading: BTreeMap::new() }
    }
}

/// Black-box access to an n-variate polynomial of bounded degree. Some
/// coordinates may be declared "inverted": the underlying formula divides by
/// them, so zeros there are resolved by substituting a shared scalar and
/// interpolating back to the true value (degree+1 underlying evaluations).
/// The counter increments once per `eval` call.
#[derive(Clone)]
pub struct PolyBox<F: Field> {
    field: F,
    arity: usize,
    degree: usize,
    inverted: Arc<Vec<bool>>,
    counter: Arc<AtomicU64>,
    interp: Arc<Mutex<InterpTables<F>>>,
    raw: Arc<RawFn<F>>,
}

fn nodes<F: Field>(f: &F, m: usize) -> Result<Vec<F::Elem>> {
    if let Some(ord) = f.order() {
        if ord <= m as u128 {
            return Err(Error::FieldTooSmall);
        }
    }
    Ok((1..=m as u64).map(|k| f.element_at(k).unwrap()).collect())
}

/// Weights w_k with sum w_k * h(k) = h(0) for polynomials h of degree < m,
/// nodes 1..m: w_k = (m!/k) * (-1)^(k-1) / ((k-1)!(m-k)!).
fn weights_at_zero<F: Field>(f: &F, m: usize) -> Vec<F::Elem> {
    let mut fact = vec![f.one(); m];
    for k in 1..m {
        fact[k] = f.mul(&fact[k - 1], &f.from_i64(k as i64));
    }
    let full = f.mul(&fact[m - 1], &f.from_i64(m as i64));
    let mut denoms = Vec::with_capacity(m);
    for k in 1..=m {
        denoms.push(f.mul(&f.from_i64(k as i64), &f.mul(&fact[k - 1], &fact[m - k])));
    }
    let invs = batch_invert(f, &denoms);
    (1..=m)
        .map(|k| {
            let w = f.mul(&full, &invs[k - 1]);
            if k % 2 == 1 {
                w
            } else {
                f.neg(&w)
            }
        })
        .collect()
}

/// Weights w_k with sum w_k * h(k) = leading coefficient of h, for h of
/// degree exactly m-1, nodes 1..m: w_k = (-1)^(m-k) / ((k-1)!(m-k)!).
fn weights_leading<F: Field>(f: &F, m: usize) -> Vec<F::Elem> {
    let mut fact = vec![f.one(); m];
    for k in 1..m {
        fact[k] = f.mul(&fact[k - 1], &f.from_i64(k as i64));
    }
    let denoms: Vec<F::Elem> = (1..=m).map(|k| f.mul(&fact[k - 1], &fact[m - k])).collect();
    let invs = batch_invert(f, &denoms);
    (1..=m)
        .map(|k| {
            if (m - k) % 2 == 0 {
                invs[k - 1].clone()
            } else {
                f.neg(&invs[k - 1])
            }
        })
        .collect()
}

impl<F: Field> PolyBox<F> {
    pub fn from_raw(
        field: F,
        arity: usize,
        degree: usize,
        inverted: Vec<bool>,
        raw: Arc<RawFn<F>>,
    ) -> PolyBox<F> {
        assert_eq!(inverted.len(), arity);
        PolyBox {
            field,
            arity,
            degree,
            inverted: Arc::new(inverted),
            counter: Arc::new(AtomicU64::new(0)),
            interp: Arc::new(Mutex::new(InterpTables::default())),
            raw,
        }
    }

    /// Box over a plain closure taking the dense coordinate vector.
    pub fn from_fn(
        field: F,
        arity: usize,
        degree: usize,
        inverted: Vec<bool>,
        ev: impl Fn(&[F::Elem]) -> F::Elem + Send + Sync + 'static,
    ) -> PolyBox<F> {
        let f2 = field.clone();
        let raw: Arc<RawFn<F>> = Arc::new(move |pt| Ok(ev(&pt.materialize(&f2, arity))));
        PolyBox::from_raw(field, arity, degree, inverted, raw)
    }

    /// det(A + diag(y)): factorizations are cached per (base, fill) and
    /// sparse overrides are folded in with a rank-k determinant update.
    pub fn from_matrix(a: &Matrix<F>) -> PolyBox<F> {
        let f = a.field().clone();
        let n = a.n();
        let mat = a.clone();
        type Fact<E> = Arc<(E, Option<Vec<E>>)>;
        let cache: Mutex<HashMap<(u64, F::Elem), Fact<F::Elem>>> = Mutex::new(HashMap::new());
        let f2 = f.clone();
        let raw: Arc<RawFn<F>> = Arc::new(move |pt| {
            let f = &f2;
            let key = (pt.base_id(), pt.fill.clone());
            let fact = {
                let mut c = cache.lock().unwrap();
                match c.get(&key) {
                    Some(x) => x.clone(),
                    None => {
                        let mut w = mat.entries().to_vec();
                        for i in 0..n {
                            let mut d = pt.fill.clone();
                            if let Some(b) = &pt.base {
                                d = f.add(&d, &b.vals[i]);
                            }
                            w[i * n + i] = f.add(&w[i * n + i], &d);
                        }
                        let x = Arc::new(det_and_inverse(f, n, &w));
                        c.insert(key, x.clone());
                        x
                    }
                }
            };
            if pt.overrides.is_empty() {
                return Ok(fact.0.clone());
            }
            if let Some(winv) = &fact.1 {
                // det(W + sum delta_j E_jj) = det(W) det(I_k + Winv[J,J] diag(delta))
                let k = pt.overrides.len();
                let mut small = vec![f.zero(); k * k];
                for (col, (j, ov)) in pt.overrides.iter().enumerate() {
                    let mut base_fill = pt.fill.clone();
                    if let Some(b) = &pt.base {
                        base_fill = f.add(&base_fill, &b.vals[*j]);
                    }
                    let delta = f.sub(ov, &base_fill);
                    for (row, (i, _)) in pt.overrides.iter().enumerate() {
                        small[row * k + col] = f.mul(&winv[i * n + j], &delta);
                    }
                    small[col * k + col] = f.add(&small[col * k + col], &f.one());
                }
                let ds = det_entries(f, k, &small);
                return Ok(f.mul(&fact.0, &ds));
            }
            let vals = pt.materialize(f, n);
            let mut w = mat.entries().to_vec();
            for i in 0..n {
                w[i * n + i] = f.add(&w[i * n + i], &vals[i]);
            }
            Ok(det_entries(f, n, &w))
        });
        PolyBox::from_raw(f, n, n, vec![false; n], raw)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    fn zero_weights(&self, m: usize) -> Vec<F::Elem> {
        let mut t = self.interp.lock().unwrap();
        if let Some(w) = t.at_zero.get(&m) {
            return w.as_ref().clone();
        }
        let w = Arc::new(weights_at_zero(&self.field, m));
        t.at_zero.insert(m, w.clone());
        w.as_ref().clone()
    }

    fn leading_weights(&self, m: usize) -> Vec<F::Elem> {
        let mut t = self.interp.lock().unwrap();
        if let Some(w) = t.leading.get(&m) {
            return w.as_ref().clone();
        }
        let w = Arc::new(weights_leading(&self.field, m));
        t.leading.insert(m, w.clone());
        w.as_ref().clone()
    }

    /// Evaluates the polynomial. Zeros at declared-inverted coordinates are
    /// handled by substituting a shared fresh scalar there, evaluating at
    /// degree+1 scalar values, and interpolating the value back at zero.
    pub fn eval(&self, pt: &Point<F>) -> Result<F::Elem> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let f = &self.field;
        let mut zero_inv: Vec<usize> = Vec::new();
        if self.inverted.iter().any(|&b| b) {
            for i in 0..self.arity {
                if self.inverted[i] && f.is_zero(&pt.value_at(f, i)) {
                    zero_inv.push(i);
                }
            }
        }
        if zero_inv.is_empty() {
            return (self.raw)(pt);
        }
        let m = self.degree + 1;
        let taus = nodes(f, m)?;
        let mut vals = Vec::with_capacity(m);
        for tau in &taus {
            vals.push((self.raw)(&pt.substituting(&zero_inv, tau))?);
        }
        let w = self.zero_weights(m);
        let mut acc = f.zero();
        for (wk, vk) in w.iter().zip(&vals) {
            acc = f.add(&acc, &f.mul(wk, vk));
        }
        Ok(acc)
    }

    pub fn eval_dense(&self, vals: &[F::Elem]) -> Result<F::Elem> {
        assert_eq!(vals.len(), self.arity);
        self.eval(&Point::dense(&self.field, vals.to_vec()))
    }

    /// det(A[T] + Y[T]) at Y[T] = 0, extracted as the coefficient of
    /// z^(n-|T|) from evaluations with all coordinates outside T set to z.
    /// Costs exactly n - |T| + 1 evaluations of this box.
    pub fn pm_query(&self, t_coords: &[usize]) -> Result<F::Elem> {
        debug_assert!(t_coords.windows(2).all(|w| w[0] < w[1]));
        assert!(!t_coords.is_empty() && t_coords.len() <= self.arity);
        let m = self.arity - t_coords.len() + 1;
        let zs = nodes(&self.field, m)?;
        let f = &self.field;
        let ov: Vec<(usize, F::Elem)> = t_coords.iter().map(|&c| (c, f.zero())).collect();
        let mut vals = Vec::with_capacity(m);
        for z in zs {
            let pt = Point::uniform(z).with_overrides(ov.clone());
            vals.push(self.eval(&pt)?);
        }
        let w = self.leading_weights(m);
        let mut acc = f.zero();
        for (wk, vk) in w.iter().zip(&vals) {
            acc = f.add(&acc, &f.mul(wk, vk));
        }
        Ok(acc)
    }

    /// Box computing det(A[T] + diag(u)) for |T|-dimensional u; each
    /// evaluation spends n - |T| + 1 queries on the underlying box.
    pub fn restrict(&self, t_coords: &[usize]) -> PolyBox<F> {
        assert!(t_coords.windows(2).all(|w| w[0] < w[1]));
        assert!(!t_coords.is_empty() && t_coords.len() <= self.arity);
        let inner = self.clone();
        let coords = t_coords.to_vec();
        let k = coords.len();
        let f = self.field.clone();
        let raw: Arc<RawFn<F>> = Arc::new(move |pt| {
            let m = inner.arity - k + 1;
            let zs = nodes(&f, m)?;
            let ov: Vec<(usize, F::Elem)> =
                coords.iter().enumerate().map(|(j, &c)| (c, pt.value_at(&f, j))).collect();
            let mut vals = Vec::with_capacity(m);
            for z in zs {
                let p = Point::uniform(z).with_overrides(ov.clone());
                vals.push(inner.eval(&p)?);
            }
            let w = inner.leading_weights(m);
            let mut acc = f.zero();
            for (wk, vk) in w.iter().zip(&vals) {
                acc = f.add(&acc, &f.mul(wk, vk));
            }
            Ok(acc)
        });
        PolyBox::from_raw(self.field.clone(), k, k, vec![false; k], raw)
    }

    /// Box for det((A+D)^(-1) + Y) given a box for det(A + Y), via
    /// det((A+D)^(-1) + Y) = det(A+D)^(-1) * prod(y) * f(d + 1/y).
    /// All coordinates of the new box are declared inverted. One evaluation
    /// checks det(A+D) != 0 up front.
    pub fn shifted_inverse(&self, d: &[F::Elem]) -> Result<PolyBox<F>> {
        assert_eq!(d.len(), self.arity);
        let f = self.field.clone();
        let dbase = BasePoint::new(d.to_vec());
        let det_ad = self.eval(&Point {
            base: Some(dbase.clone()),
            fill: f.zero(),
            overrides: Vec::new(),
        })?;
        let Some(c) = f.inv(&det_ad) else {
            return Err(Error::SingularShift);
        };
        let inner = self.clone();
        let arity = self.arity;
        let f2 = f.clone();
        let raw: Arc<RawFn<F>> = Arc::new(move |pt| {
            let f = &f2;
            let prod = pt.product(f, arity);
            let inner_pt = if pt.base.is_none() {
                let fill_inv = if pt.overrides.len() == arity {
                    f.zero()
                } else {
                    f.inv(&pt.fill).expect("nonzero fill guaranteed by inversion handling")
                };
                let ov = pt
                    .overrides
                    .iter()
                    .map(|(i, v)| (*i, f.add(&dbase.vals[*i], &f.inv(v).unwrap())))
                    .collect();
                Point { base: Some(dbase.clone()), fill: fill_inv, overrides: ov }
            } else {
                let vals = pt.materialize(f, arity);
                let shifted: Vec<F::Elem> = vals
                    .iter()
                    .enumerate()
                    .map(|(i, v)| f.add(&dbase.vals[i], &f.inv(v).unwrap()))
                    .collect();
                Point::dense(f, shifted)
            };
            let fv = inner.eval(&inner_pt)?;
            Ok(f.mul(&c, &f.mul(&prod, &fv)))
        });
        Ok(PolyBox::from_raw(f, arity, arity, vec![true; arity], raw))
    }
}

enum PmBackend<F: Field> {
    Matrix(Matrix<F>),
    Box { poly: PolyBox<F>, labels: Vec<usize> },
}

/// Principal minor oracle over an index-label set. Queries are memoized (a
/// repeat subset does not touch the backend) but every call still counts.
#[derive(Clone)]
pub struct PMOracle<F: Field> {
    field: F,
    index: Vec<usize>,
    backend: Arc<PmBackend<F>>,
    max_order: Option<usize>,
    counter: Arc<AtomicU64>,
    memo: Arc<Mutex<HashMap<Vec<usize>, F::Elem>>>,
}

impl<F: Field> PMOracle<F> {
    pub fn from_matrix(a: &Matrix<F>) -> PMOracle<F> {
        PMOracle {
            field: a.field().clone(),
            index: a.index().to_vec(),
            backend: Arc::new(PmBackend::Matrix(a.clone())),
            max_order: None,
            counter: Arc::new(AtomicU64::new(0)),
            memo: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    /// Oracle backed by a det(A+Y)-style box whose coordinates carry the
    /// given labels. `max_order` asserts a query-size discipline.
    pub fn from_box(poly: PolyBox<F>, labels: Vec<usize>, max_order: Option<usize>) -> PMOracle<F> {
        assert_eq!(labels.len(), poly.arity());
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
        PMOracle {
            field: poly.field().clone(),
            index: labels.clone(),
            backend: Arc::new(PmBackend::Box { poly, labels }),
            max_order,
            counter: Arc::new(AtomicU64::new(0)),
            memo: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    /// View onto a label subset, sharing the backend, memo, and counter.
    pub fn restrict(&self, labels: &[usize]) -> PMOracle<F> {
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
        assert!(labels.iter().all(|l| self.index.binary_search(l).is_ok()));
        PMOracle { index: labels.to_vec(), ..self.clone() }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn queries(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }

    /// det(A[S]) for a sorted nonempty label subset S of this oracle's index.
    pub fn query(&self, s: &[usize]) -> Result<F::Elem> {
        assert!(!s.is_empty(), "empty principal minor query");
        assert!(s.windows(2).all(|w| w[0] < w[1]), "query labels must be sorted");
        assert!(s.iter().all(|l| self.index.binary_search(l).is_ok()));
        if let Some(mo) = self.max_order {
            assert!(s.len() <= mo, "query order {} exceeds the declared limit {mo}", s.len());
        }
        self.counter.fetch_add(1, Ordering::Relaxed);
        if let Some(v) = self.memo.lock().unwrap().get(s) {
            return Ok(v.clone());
        }
        let v = match self.backend.as_ref() {
            PmBackend::Matrix(a) => a.principal_minor(s),
            PmBackend::Box { poly, labels } => {
                let coords: Vec<usize> =
                    s.iter().map(|l| labels.binary_search(l).unwrap()).collect();
                poly.pm_query(&coords)?
            }
        };
        self.memo.lock().unwrap().insert(s.to_vec(), v.clone());
        Ok(v)
    }

    /// A[i,j]A[j,i] from three queries: q(i)q(j) - q({i,j}).
    pub fn pair_product(&self, i: usize, j: usize) -> Result<F::Elem> {
        assert_ne!(i, j);
        let f = &self.field;
        let (a, b) = (i.min(j), i.max(j));
        let qi = self.query(&[a])?;
        let qj = self.query(&[b])?;
        let qij = self.query(&[a, b])?;
        Ok(f.sub(&f.mul(&qi, &qj), &qij))
    }

    /// A[i,j]A[j,k]A[k,i] + A[i,k]A[k,j]A[j,i] from seven queries.
    pub fn triple_sum(&self, i: usize, j: usize, k: usize) -> Result<F::Elem> {
        let mut t = [i, j, k];
        t.sort_unstable();
        let [a, b, c] = t;
        assert!(a < b && b < c);
        let f = &self.field;
        let qabc = self.query(&[a, b, c])?;
        let qab = self.query(&[a, b])?;
        let qbc = self.query(&[b, c])?;
        let qac = self.query(&[a, c])?;
        let qa = self.query(&[a])?;
        let qb = self.query(&[b])?;
        let qc = self.query(&[c])?;
        let mut s = qabc;
        s = f.sub(&s, &f.mul(&qab, &qc));
        s = f.sub(&s, &f.mul(&qbc, &qa));
        s = f.sub(&s, &f.mul(&qac, &qb));
        let prod = f.mul(&qa, &f.mul(&qb, &qc));
        s = f.add(&s, &f.add(&prod, &prod));
        Ok(s)
    }

    /// B[{i,j}] is irreducible iff B[i,j]B[j,i] != 0.
    pub fn check_2x2_irreducible(&self, i: usize, j: usize) -> Result<bool> {
        Ok(!self.field.is_zero(&self.pair_product(i, j)?))
    }
}
