//! Quaternion and dual-quaternion arithmetic.
//!
//! Vectors and matrices are stored structure-of-arrays: one real array per
//! component, so every kernel below is a handful of contiguous real loops or
//! real matrix products.
//!
//! The `*_rows` kernels act on a batch of vectors at once. A batch is stored
//! as component matrices whose row `i` is vector `i`; `quat_matmul_rows(W, X)`
//! returns the batch whose row `i` is `W ⊗ x_i`.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Quaternion<T> {
    pub const fn new(a: T, b: T, c: T, d: T) -> Self {
        Quaternion { a, b, c, d }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn one() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn i() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::zero())
    }

    pub fn j() -> Self {
        Self::new(T::zero(), T::zero(), T::one(), T::zero())
    }

    pub fn k() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::one())
    }

    pub fn conj(self) -> Self {
        Self::new(self.a, -self.b, -self.c, -self.d)
    }

    /// Four-component dot product.
    pub fn dot(self, o: Self) -> T {
        self.a * o.a + self.b * o.b + self.c * o.c + self.d * o.d
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn normalize(self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalize quaternion of norm {n}")));
        }
        Ok(self.scale(T::one() / n))
    }

    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

/// Hamilton product `x ⊗ y`.
#[inline]
pub fn hamilton<T: Scalar>(x: Quaternion<T>, y: Quaternion<T>) -> Quaternion<T> {
    Quaternion::new(
        x.a * y.a - x.b * y.b - x.c * y.c - x.d * y.d,
        x.a * y.b + x.b * y.a + x.c * y.d - x.d * y.c,
        x.a * y.c - x.b * y.d + x.c * y.a + x.d * y.b,
        x.a * y.d + x.b * y.c - x.c * y.b + x.d * y.a,
    )
}

impl<T: Scalar> Add for Quaternion<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl<T: Scalar> Sub for Quaternion<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl<T: Scalar> Neg for Quaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl<T: Scalar> Mul for Quaternion<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        hamilton(self, o)
    }
}

/// `real + ε dual` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualNumber<T> {
    pub real: T,
    pub dual: T,
}

impl<T: Scalar> DualNumber<T> {
    pub const fn new(real: T, dual: T) -> Self {
        DualNumber { real, dual }
    }
}

impl<T: Scalar> Mul for DualNumber<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.real * o.real, self.real * o.dual + self.dual * o.real)
    }
}

impl<T: Scalar> Add for DualNumber<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.real + o.real, self.dual + o.dual)
    }
}

/// `q + ε p`. There is no slot for an `ε²` term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualQuaternion<T> {
    pub q: Quaternion<T>,
    pub p: Quaternion<T>,
}

impl<T: Scalar> DualQuaternion<T> {
    pub const fn new(q: Quaternion<T>, p: Quaternion<T>) -> Self {
        DualQuaternion { q, p }
    }

    pub fn one() -> Self {
        Self::new(Quaternion::one(), Quaternion::zero())
    }

    pub fn conj(self) -> Self {
        Self::new(self.q.conj(), self.p.conj())
    }

    /// Dual-number norm `‖q‖ + ε (q•p)/‖q‖`.
    pub fn norm(self) -> Result<DualNumber<T>> {
        let nq = self.q.norm();
        if nq == T::zero() || !nq.is_finite() {
            return Err(Error::Degenerate(format!(
                "dual-quaternion norm undefined for real part of norm {nq}"
            )));
        }
        Ok(DualNumber::new(nq, self.q.dot(self.p) / nq))
    }

    /// `q/‖q‖ + ε (p/‖q‖ − (q/‖q‖)(q•p)/‖q‖²)`; the result is unit.
    pub fn normalize(self) -> Result<Self> {
        let nq = self.norm()?.real;
        let inv = T::one() / nq;
        let q_unit = self.q.scale(inv);
        let qp = self.q.dot(self.p);
        let p = self.p.scale(inv) - q_unit.scale(qp * inv * inv);
        Ok(Self::new(q_unit, p))
    }
}

/// `(q1⊗q2) + ε(q1⊗p2 + p1⊗q2)`.
#[inline]
pub fn dq_multiply<T: Scalar>(h1: DualQuaternion<T>, h2: DualQuaternion<T>) -> DualQuaternion<T> {
    DualQuaternion::new(
        hamilton(h1.q, h2.q),
        hamilton(h1.q, h2.p) + hamilton(h1.p, h2.q),
    )
}

impl<T: Scalar> Mul for DualQuaternion<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        dq_multiply(self, o)
    }
}

impl<T: Scalar> Add for DualQuaternion<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.q + o.q, self.p + o.p)
    }
}

/// `n` quaternion coordinates as four parallel arrays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuatVector<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub d: Vec<T>,
}

impl<T: Scalar> QuatVector<T> {
    pub fn zeros(n: usize) -> Self {
        QuatVector {
            a: vec![T::zero(); n],
            b: vec![T::zero(); n],
            c: vec![T::zero(); n],
            d: vec![T::zero(); n],
        }
    }

    pub fn from_quats(qs: &[Quaternion<T>]) -> Self {
        QuatVector {
            a: qs.iter().map(|q| q.a).collect(),
            b: qs.iter().map(|q| q.b).collect(),
            c: qs.iter().map(|q| q.c).collect(),
            d: qs.iter().map(|q| q.d).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn get(&self, i: usize) -> Quaternion<T> {
        Quaternion::new(self.a[i], self.b[i], self.c[i], self.d[i])
    }

    pub fn set(&mut self, i: usize, q: Quaternion<T>) {
        self.a[i] = q.a;
        self.b[i] = q.b;
        self.c[i] = q.c;
        self.d[i] = q.d;
    }

    pub fn iter(&self) -> impl Iterator<Item = Quaternion<T>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// `[a.., b.., c.., d..]`.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(4 * self.len());
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.c);
        out.extend_from_slice(&self.d);
        out
    }

    fn check_parallel(&self) -> Result<()> {
        let n = self.a.len();
        if self.b.len() != n || self.c.len() != n || self.d.len() != n {
            return Err(Error::shape("QuatVector", n, format!("{}/{}/{}", self.b.len(), self.c.len(), self.d.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualQuatVector<T> {
    pub q: QuatVector<T>,
    pub p: QuatVector<T>,
}

impl<T: Scalar> DualQuatVector<T> {
    pub fn zeros(n: usize) -> Self {
        DualQuatVector {
            q: QuatVector::zeros(n),
            p: QuatVector::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, i: usize) -> DualQuaternion<T> {
        DualQuaternion::new(self.q.get(i), self.p.get(i))
    }

    pub fn set(&mut self, i: usize, h: DualQuaternion<T>) {
        self.q.set(i, h.q);
        self.p.set(i, h.p);
    }
}

/// Quaternion matrix as four real component matrices of equal shape.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatMatrix<T> {
    pub a: Array2<T>,
    pub b: Array2<T>,
    pub c: Array2<T>,
    pub d: Array2<T>,
}

impl<T: Scalar> QuatMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QuatMatrix {
            a: Array2::zeros((rows, cols)),
            b: Array2::zeros((rows, cols)),
            c: Array2::zeros((rows, cols)),
            d: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.a = Array2::eye(n);
        m
    }

    pub fn from_parts(a: Array2<T>, b: Array2<T>, c: Array2<T>, d: Array2<T>) -> Result<Self> {
        let shape = a.dim();
        for (name, m) in [("b", &b), ("c", &c), ("d", &d)] {
            if m.dim() != shape {
                return Err(Error::shape("QuatMatrix component", format!("{shape:?}"), format!("{name}: {:?}", m.dim())));
            }
        }
        Ok(QuatMatrix { a, b, c, d })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion<T> {
        Quaternion::new(self.a[[i, j]], self.b[[i, j]], self.c[[i, j]], self.d[[i, j]])
    }

    pub fn set(&mut self, i: usize, j: usize, q: Quaternion<T>) {
        self.a[[i, j]] = q.a;
        self.b[[i, j]] = q.b;
        self.c[[i, j]] = q.c;
        self.d[[i, j]] = q.d;
    }

    pub fn parts(&self) -> [&Array2<T>; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn parts_mut(&mut self) -> [&mut Array2<T>; 4] {
        [&mut self.a, &mut self.b, &mut self.c, &mut self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualQuatMatrix<T> {
    pub q: QuatMatrix<T>,
    pub p: QuatMatrix<T>,
}

impl<T: Scalar> DualQuatMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DualQuatMatrix {
            q: QuatMatrix::zeros(rows, cols),
            p: QuatMatrix::zeros(rows, cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.q.rows()
    }

    pub fn cols(&self) -> usize {
        self.q.cols()
    }
}

/// `y_i = Σ_j W[i,j] ⊗ x_j`.
pub fn quat_matvec<T: Scalar>(w: &QuatMatrix<T>, x: &QuatVector<T>) -> Result<QuatVector<T>> {
    x.check_parallel()?;
    if w.cols() != x.len() {
        return Err(Error::shape("quat_matvec", w.cols(), x.len()));
    }
    let mut y = QuatVector::zeros(w.rows());
    for i in 0..w.rows() {
        let mut acc = Quaternion::zero();
        for j in 0..w.cols() {
            acc = acc + hamilton(w.get(i, j), x.get(j));
        }
        y.set(i, acc);
    }
    Ok(y)
}

/// `(W_q⊗x_q) + ε(W_q⊗x_p + W_p⊗x_q)`.
pub fn dq_matvec<T: Scalar>(w: &DualQuatMatrix<T>, x: &DualQuatVector<T>) -> Result<DualQuatVector<T>> {
    if w.q.cols() != x.len() || w.p.cols() != x.len() || x.p.len() != x.q.len() {
        return Err(Error::shape("dq_matvec", w.cols(), x.len()));
    }
    let q = quat_matvec(&w.q, &x.q)?;
    let qp = quat_matvec(&w.q, &x.p)?;
    let pq = quat_matvec(&w.p, &x.q)?;
    let mut p = QuatVector::zeros(q.len());
    for i in 0..q.len() {
        p.set(i, qp.get(i) + pq.get(i));
    }
    Ok(DualQuatVector { q, p })
}

/// Sum of per-coordinate four-component dot products.
pub fn quat_inner<T: Scalar>(x: &QuatVector<T>, y: &QuatVector<T>) -> Result<T> {
    x.check_parallel()?;
    y.check_parallel()?;
    if x.len() != y.len() {
        return Err(Error::shape("quat_inner", x.len(), y.len()));
    }
    Ok(inner_slices(
        [&x.a, &x.b, &x.c, &x.d],
        [&y.a, &y.b, &y.c, &y.d],
    ))
}

/// Fixed-order quaternion inner product over component slices.
///
/// Every score in the crate goes through this function so per-triple and
/// batched scoring agree bit-for-bit.
#[inline]
pub fn inner_slices<T: Scalar>(x: [&[T]; 4], y: [&[T]; 4]) -> T {
    let n = x[0].len();
    let mut acc = T::zero();
    for j in 0..n {
        acc += x[0][j] * y[0][j] + x[1][j] * y[1][j] + x[2][j] * y[2][j] + x[3][j] * y[3][j];
    }
    acc
}

/// Batch of quaternion vectors; row `i` of every component is vector `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatBatch<T> {
    pub a: Array2<T>,
    pub b: Array2<T>,
    pub c: Array2<T>,
    pub d: Array2<T>,
}

impl<T: Scalar> QuatBatch<T> {
    pub fn zeros(rows: usize, n: usize) -> Self {
        QuatBatch {
            a: Array2::zeros((rows, n)),
            b: Array2::zeros((rows, n)),
            c: Array2::zeros((rows, n)),
            d: Array2::zeros((rows, n)),
        }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn coords(&self) -> usize {
        self.a.ncols()
    }

    pub fn row(&self, i: usize) -> QuatVector<T> {
        QuatVector {
            a: self.a.row(i).to_vec(),
            b: self.b.row(i).to_vec(),
            c: self.c.row(i).to_vec(),
            d: self.d.row(i).to_vec(),
        }
    }

    pub fn set_row(&mut self, i: usize, v: &QuatVector<T>) {
        for (dst, src) in self.parts_mut().into_iter().zip([&v.a, &v.b, &v.c, &v.d]) {
            dst.row_mut(i).iter_mut().zip(src.iter()).for_each(|(d, s)| *d = *s);
        }
    }

    pub fn from_rows(rows: &[QuatVector<T>]) -> Self {
        let n = rows.first().map_or(0, QuatVector::len);
        let mut out = Self::zeros(rows.len(), n);
        for (i, r) in rows.iter().enumerate() {
            out.set_row(i, r);
        }
        out
    }

    pub fn parts(&self) -> [&Array2<T>; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn parts_mut(&mut self) -> [&mut Array2<T>; 4] {
        [&mut self.a, &mut self.b, &mut self.c, &mut self.d]
    }

    pub fn into_parts(self) -> [Array2<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn from_parts([a, b, c, d]: [Array2<T>; 4]) -> Self {
        QuatBatch { a, b, c, d }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualQuatBatch<T> {
    pub q: QuatBatch<T>,
    pub p: QuatBatch<T>,
}

impl<T: Scalar> DualQuatBatch<T> {
    pub fn zeros(rows: usize, n: usize) -> Self {
        DualQuatBatch {
            q: QuatBatch::zeros(rows, n),
            p: QuatBatch::zeros(rows, n),
        }
    }

    pub fn rows(&self) -> usize {
        self.q.rows()
    }

    pub fn coords(&self) -> usize {
        self.q.coords()
    }

    pub fn row(&self, i: usize) -> DualQuatVector<T> {
        DualQuatVector {
            q: self.q.row(i),
            p: self.p.row(i),
        }
    }

    pub fn set_row(&mut self, i: usize, v: &DualQuatVector<T>) {
        self.q.set_row(i, &v.q);
        self.p.set_row(i, &v.p);
    }
}

/// Row-wise Hamilton transform: row `i` of the result is `W ⊗ x_i`.
pub fn quat_matmul_rows<T: Scalar>(w: &QuatMatrix<T>, x: &QuatBatch<T>) -> Result<QuatBatch<T>> {
    if w.cols() != x.coords() {
        return Err(Error::shape("quat_matmul_rows", w.cols(), x.coords()));
    }
    let [wa, wb, wc, wd] = [w.a.t(), w.b.t(), w.c.t(), w.d.t()];
    let (xa, xb, xc, xd) = (&x.a, &x.b, &x.c, &x.d);
    let a = xa.dot(&wa) - xb.dot(&wb) - xc.dot(&wc) - xd.dot(&wd);
    let b = xb.dot(&wa) + xa.dot(&wb) + xd.dot(&wc) - xc.dot(&wd);
    let c = xc.dot(&wa) - xd.dot(&wb) + xa.dot(&wc) + xb.dot(&wd);
    let d = xd.dot(&wa) + xc.dot(&wb) - xb.dot(&wc) + xa.dot(&wd);
    Ok(QuatBatch { a, b, c, d })
}

/// Reverse mode of [`quat_matmul_rows`]: returns `(dW, dX)` for upstream `dY`.
pub fn quat_matmul_rows_backward<T: Scalar>(
    w: &QuatMatrix<T>,
    x: &QuatBatch<T>,
    dy: &QuatBatch<T>,
) -> Result<(QuatMatrix<T>, QuatBatch<T>)> {
    if dy.coords() != w.rows() || dy.rows() != x.rows() || x.coords() != w.cols() {
        return Err(Error::shape(
            "quat_matmul_rows_backward",
            format!("{}x{} / {} rows", w.rows(), w.cols(), x.rows()),
            format!("{}x{}", dy.rows(), dy.coords()),
        ));
    }
    let (ga, gb, gc, gd) = (&dy.a, &dy.b, &dy.c, &dy.d);
    let (wa, wb, wc, wd) = (&w.a, &w.b, &w.c, &w.d);
    let dxa = ga.dot(wa) + gb.dot(wb) + gc.dot(wc) + gd.dot(wd);
    let dxb = gb.dot(wa) - ga.dot(wb) + gc.dot(wd) - gd.dot(wc);
    let dxc = gc.dot(wa) + gd.dot(wb) - ga.dot(wc) - gb.dot(wd);
    let dxd = gd.dot(wa) - gc.dot(wb) + gb.dot(wc) - ga.dot(wd);

    let (xa, xb, xc, xd) = (&x.a, &x.b, &x.c, &x.d);
    let t = |g: &Array2<T>, m: &Array2<T>| g.t().dot(m);
    let dwa = t(ga, xa) + t(gb, xb) + t(gc, xc) + t(gd, xd);
    let dwb = t(gb, xa) - t(ga, xb) + t(gd, xc) - t(gc, xd);
    let dwc = t(gc, xa) - t(ga, xc) + t(gb, xd) - t(gd, xb);
    let dwd = t(gd, xa) - t(ga, xd) - t(gb, xc) + t(gc, xb);
    Ok((
        QuatMatrix { a: dwa, b: dwb, c: dwc, d: dwd },
        QuatBatch { a: dxa, b: dxb, c: dxc, d: dxd },
    ))
}

fn add_batches<T: Scalar>(x: QuatBatch<T>, y: &QuatBatch<T>) -> QuatBatch<T> {
    QuatBatch {
        a: x.a + &y.a,
        b: x.b + &y.b,
        c: x.c + &y.c,
        d: x.d + &y.d,
    }
}

fn add_matrices<T: Scalar>(x: QuatMatrix<T>, y: &QuatMatrix<T>) -> QuatMatrix<T> {
    QuatMatrix {
        a: x.a + &y.a,
        b: x.b + &y.b,
        c: x.c + &y.c,
        d: x.d + &y.d,
    }
}

/// Row-wise dual-quaternion transform: row `i` is `W ⊗_d x_i`.
pub fn dq_matmul_rows<T: Scalar>(w: &DualQuatMatrix<T>, x: &DualQuatBatch<T>) -> Result<DualQuatBatch<T>> {
    let q = quat_matmul_rows(&w.q, &x.q)?;
    let p = add_batches(quat_matmul_rows(&w.q, &x.p)?, &quat_matmul_rows(&w.p, &x.q)?);
    Ok(DualQuatBatch { q, p })
}

pub fn dq_matmul_rows_backward<T: Scalar>(
    w: &DualQuatMatrix<T>,
    x: &DualQuatBatch<T>,
    dy: &DualQuatBatch<T>,
) -> Result<(DualQuatMatrix<T>, DualQuatBatch<T>)> {
    // y_q = W_q x_q ; y_p = W_q x_p + W_p x_q
    let (dwq_1, dxq_1) = quat_matmul_rows_backward(&w.q, &x.q, &dy.q)?;
    let (dwq_2, dxp) = quat_matmul_rows_backward(&w.q, &x.p, &dy.p)?;
    let (dwp, dxq_2) = quat_matmul_rows_backward(&w.p, &x.q, &dy.p)?;
    Ok((
        DualQuatMatrix {
            q: add_matrices(dwq_1, &dwq_2),
            p: dwp,
        },
        DualQuatBatch {
            q: add_batches(dxq_1, &dxq_2),
            p: dxp,
        },
    ))
}

/// Concatenates the q-part and p-part coordinates: `n` dual coords become `2n` quaternion coords.
pub fn concat_dual_to_quat<T: Scalar>(x: &DualQuatBatch<T>) -> QuatBatch<T> {
    let cat = |q: &Array2<T>, p: &Array2<T>| {
        ndarray::concatenate(ndarray::Axis(1), &[q.view(), p.view()]).expect("equal row counts").as_standard_layout().into_owned()
    };
    QuatBatch {
        a: cat(&x.q.a, &x.p.a),
        b: cat(&x.q.b, &x.p.b),
        c: cat(&x.q.c, &x.p.c),
        d: cat(&x.q.d, &x.p.d),
    }
}

/// Reverse of [`concat_dual_to_quat`]: splits `2n` coordinates back into q and p halves.
pub fn split_quat_to_dual<T: Scalar>(x: &QuatBatch<T>) -> DualQuatBatch<T> {
    let n = x.coords() / 2;
    let half = |m: &Array2<T>, lo: usize| -> Array2<T> { m.slice(s![.., lo..lo + n]).to_owned() };
    DualQuatBatch {
        q: QuatBatch {
            a: half(&x.a, 0),
            b: half(&x.b, 0),
            c: half(&x.c, 0),
            d: half(&x.d, 0),
        },
        p: QuatBatch {
            a: half(&x.a, n),
            b: half(&x.b, n),
            c: half(&x.c, n),
            d: half(&x.d, n),
        },
    }
}

/// Component-wise row slices `[a, b, c, d]` of row `i`.
#[inline]
pub(crate) fn row_slices<'a, T: Scalar>(parts: [&'a Array2<T>; 4], i: usize) -> [&'a [T]; 4] {
    parts.map(|m| m.row(i).to_slice().expect("standard layout"))
}

pub(crate) fn view_parts<T: Scalar>(b: &QuatBatch<T>) -> [ArrayView2<'_, T>; 4] {
    [b.a.view(), b.b.view(), b.c.view(), b.d.view()]
}
