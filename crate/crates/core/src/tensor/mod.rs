//! Minimal dense-tensor engine with reverse-mode automatic differentiation.
//!
//! Tensors are reference-counted handles over row-major f64 storage. Every
//! differentiable op is a method on [`Tape`]; the tape records one backward
//! closure per executed op, in execution order, and [`Tape::backward`]
//! replays them in reverse, accumulating gradients additively. A tape and
//! its tensors belong to one worker at a time; parallel training runs own
//! fully independent tapes.

mod adam;
mod checkpoint;
mod sparse;

pub use adam::{Adam, AdamConfig, ParamSet};
pub use checkpoint::{load_parameters, save_parameters};
pub use sparse::CsrMatrix;

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

struct TensorInner {
    shape: Vec<usize>,
    values: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

/// Dense real tensor; cloning copies the handle, not the storage.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<RefCell<TensorInner>>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("Tensor")
            .field("shape", &inner.shape)
            .field("requires_grad", &inner.requires_grad)
            .finish()
    }
}

fn numel_of(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn check_finite(values: &[f64], op: &str) {
    debug_assert!(
        values.iter().all(|v| v.is_finite()),
        "non-finite value produced by {op}"
    );
    let _ = (values, op);
}

impl Tensor {
    fn build(shape: Vec<usize>, values: Vec<f64>, requires_grad: bool) -> Result<Tensor> {
        if shape.is_empty() || numel_of(&shape) != values.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} does not describe {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("tensor holds a non-finite value".into()));
        }
        let grad = requires_grad.then(|| vec![0.0; values.len()]);
        Ok(Tensor {
            inner: Rc::new(RefCell::new(TensorInner {
                shape,
                values,
                requires_grad,
                grad,
            })),
        })
    }

    /// Output of an op: storage is trusted, only debug-checked.
    fn output(shape: Vec<usize>, values: Vec<f64>, requires_grad: bool, op: &str) -> Tensor {
        check_finite(&values, op);
        debug_assert_eq!(numel_of(&shape), values.len());
        let grad = requires_grad.then(|| vec![0.0; values.len()]);
        Tensor {
            inner: Rc::new(RefCell::new(TensorInner {
                shape,
                values,
                requires_grad,
                grad,
            })),
        }
    }

    /// Constant tensor (no gradient tracking).
    pub fn new(shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        Tensor::build(shape.to_vec(), values, false)
    }

    /// Trainable tensor; its gradient starts at zero so parameters unused
    /// by a loss still report all-zero gradients after backward.
    pub fn parameter(shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        Tensor::build(shape.to_vec(), values, true)
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::build(shape.to_vec(), vec![0.0; numel_of(shape)], false)
            .expect("zeros are always valid")
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor::new(&[1], vec![value]).expect("finite scalar")
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tensor> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Tensor::new(&[r, c], rows.concat())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.inner.borrow().shape.clone()
    }

    pub fn numel(&self) -> usize {
        self.inner.borrow().values.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.borrow().requires_grad
    }

    pub fn values(&self) -> Vec<f64> {
        self.inner.borrow().values.clone()
    }

    /// The single value of a scalar tensor.
    pub fn value(&self) -> f64 {
        let inner = self.inner.borrow();
        assert_eq!(inner.values.len(), 1, "value() requires a scalar tensor");
        inner.values[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.borrow().grad.clone()
    }

    /// Overwrite values in place (optimizer updates, checkpoint loads).
    pub fn set_values(&self, values: &[f64]) -> Result<()> {
        let mut inner = self.inner.borrow_mut();
        if values.len() != inner.values.len() {
            return Err(Error::Dimension(format!(
                "{} values for shape {:?}",
                values.len(),
                inner.shape
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("assigning a non-finite value".into()));
        }
        inner.values.copy_from_slice(values);
        Ok(())
    }

    pub fn zero_grad(&self) {
        if let Some(grad) = self.inner.borrow_mut().grad.as_mut() {
            grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    fn dims2(&self, op: &str) -> Result<(usize, usize)> {
        let inner = self.inner.borrow();
        match inner.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            other => Err(Error::Dimension(format!(
                "{op} needs a 2-d tensor, got shape {other:?}"
            ))),
        }
    }

    fn accumulate(&self, delta: &[f64]) {
        let mut inner = self.inner.borrow_mut();
        if let Some(grad) = inner.grad.as_mut() {
            debug_assert_eq!(grad.len(), delta.len());
            for (g, d) in grad.iter_mut().zip(delta) {
                *g += d;
            }
        }
    }

    fn grad_snapshot(&self) -> Vec<f64> {
        self.inner
            .borrow()
            .grad
            .clone()
            .expect("output of a recorded op always has a gradient buffer")
    }
}

type BackwardFn = Box<dyn FnOnce()>;

/// Ordered record of executed ops; replayed in reverse by [`Tape::backward`].
#[derive(Default)]
pub struct Tape {
    records: RefCell<Vec<BackwardFn>>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.records.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.borrow().is_empty()
    }

    fn push(&self, f: impl FnOnce() + 'static) {
        self.records.borrow_mut().push(Box::new(f));
    }

    /// Populate gradients of every tensor reachable from `loss`, then clear
    /// the tape. Gradients accumulate additively across multiple uses of a
    /// tensor and across backward calls (until `zero_grad`).
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if loss.numel() != 1 {
            return Err(Error::Invalid(format!(
                "backward requires a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        loss.accumulate(&[1.0]);
        let records = std::mem::take(&mut *self.records.borrow_mut());
        for record in records.into_iter().rev() {
            record();
        }
        Ok(())
    }

    /// C = A x B for [n, m] x [m, p].
    pub fn matmul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (n, m) = a.dims2("matmul")?;
        let (m2, p) = b.dims2("matmul")?;
        if m != m2 {
            return Err(Error::Dimension(format!(
                "matmul: [{n}, {m}] x [{m2}, {p}]"
            )));
        }
        let av = a.inner.borrow();
        let bv = b.inner.borrow();
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            for k in 0..m {
                let aik = av.values[i * m + k];
                if aik != 0.0 {
                    let brow = &bv.values[k * p..(k + 1) * p];
                    let orow = &mut out[i * p..(i + 1) * p];
                    for (o, &bkj) in orow.iter_mut().zip(brow) {
                        *o += aik * bkj;
                    }
                }
            }
        }
        drop((av, bv));
        let requires = a.requires_grad() || b.requires_grad();
        let c = Tensor::output(vec![n, p], out, requires, "matmul");
        if requires {
            let (a, b, c_out) = (a.clone(), b.clone(), c.clone());
            self.push(move || {
                let g = c_out.grad_snapshot();
                if a.requires_grad() {
                    let bv = b.values();
                    let mut da = vec![0.0; n * m];
                    for i in 0..n {
                        for j in 0..p {
                            let gij = g[i * p + j];
                            if gij != 0.0 {
                                for k in 0..m {
                                    da[i * m + k] += gij * bv[k * p + j];
                                }
                            }
                        }
                    }
                    a.accumulate(&da);
                }
                if b.requires_grad() {
                    let av = a.values();
                    let mut db = vec![0.0; m * p];
                    for i in 0..n {
                        for k in 0..m {
                            let aik = av[i * m + k];
                            if aik != 0.0 {
                                for j in 0..p {
                                    db[k * p + j] += aik * g[i * p + j];
                                }
                            }
                        }
                    }
                    b.accumulate(&db);
                }
            });
        }
        Ok(c)
    }

    /// A + B, either same-shape or with B of shape [1, p] broadcast over
    /// the rows of A.
    pub fn add(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let ashape = a.shape();
        let bshape = b.shape();
        let broadcast = ashape.len() == 2
            && bshape.as_slice() == [1, ashape[1]]
            && ashape != bshape;
        if !broadcast && ashape != bshape {
            return Err(Error::Dimension(format!(
                "add: shape {ashape:?} vs {bshape:?}"
            )));
        }
        let av = a.values();
        let bv = b.values();
        let out: Vec<f64> = if broadcast {
            let p = ashape[1];
            av.iter()
                .enumerate()
                .map(|(idx, &v)| v + bv[idx % p])
                .collect()
        } else {
            av.iter().zip(&bv).map(|(&x, &y)| x + y).collect()
        };
        let requires = a.requires_grad() || b.requires_grad();
        let c = Tensor::output(ashape.clone(), out, requires, "add");
        if requires {
            let (a, b, c_out) = (a.clone(), b.clone(), c.clone());
            let p = if broadcast { ashape[1] } else { 0 };
            self.push(move || {
                let g = c_out.grad_snapshot();
                if a.requires_grad() {
                    a.accumulate(&g);
                }
                if b.requires_grad() {
                    if p > 0 {
                        let mut db = vec![0.0; p];
                        for (idx, &gi) in g.iter().enumerate() {
                            db[idx % p] += gi;
                        }
                        b.accumulate(&db);
                    } else {
                        b.accumulate(&g);
                    }
                }
            });
        }
        Ok(c)
    }

    /// Elementwise product of same-shape tensors.
    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.shape() != b.shape() {
            return Err(Error::Dimension(format!(
                "mul: shape {:?} vs {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let out: Vec<f64> = a.values().iter().zip(b.values().iter()).map(|(&x, &y)| x * y).collect();
        let requires = a.requires_grad() || b.requires_grad();
        let c = Tensor::output(a.shape(), out, requires, "mul");
        if requires {
            let (a, b, c_out) = (a.clone(), b.clone(), c.clone());
            self.push(move || {
                let g = c_out.grad_snapshot();
                if a.requires_grad() {
                    let bv = b.values();
                    let da: Vec<f64> = g.iter().zip(&bv).map(|(&gi, &bi)| gi * bi).collect();
                    a.accumulate(&da);
                }
                if b.requires_grad() {
                    let av = a.values();
                    let db: Vec<f64> = g.iter().zip(&av).map(|(&gi, &ai)| gi * ai).collect();
                    b.accumulate(&db);
                }
            });
        }
        Ok(c)
    }

    pub fn relu(&self, x: &Tensor) -> Tensor {
        let out: Vec<f64> = x.values().iter().map(|&v| v.max(0.0)).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "relu");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let xv = x.values();
                let dx: Vec<f64> = g
                    .iter()
                    .zip(&xv)
                    .map(|(&gi, &xi)| if xi > 0.0 { gi } else { 0.0 })
                    .collect();
                x.accumulate(&dx);
            });
        }
        y
    }

    pub fn sigmoid(&self, x: &Tensor) -> Tensor {
        let out: Vec<f64> = x.values().iter().map(|&v| stable_sigmoid(v)).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "sigmoid");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let yv = y_out.values();
                let dx: Vec<f64> = g.iter().zip(&yv).map(|(&gi, &s)| gi * s * (1.0 - s)).collect();
                x.accumulate(&dx);
            });
        }
        y
    }

    pub fn exp(&self, x: &Tensor) -> Tensor {
        let out: Vec<f64> = x.values().iter().map(|&v| v.exp()).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "exp");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let yv = y_out.values();
                let dx: Vec<f64> = g.iter().zip(&yv).map(|(&gi, &e)| gi * e).collect();
                x.accumulate(&dx);
            });
        }
        y
    }

    /// x * c for a compile-time constant factor.
    pub fn scale(&self, x: &Tensor, c: f64) -> Tensor {
        let out: Vec<f64> = x.values().iter().map(|&v| v * c).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "scale");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let dx: Vec<f64> = g.iter().map(|&gi| gi * c).collect();
                x.accumulate(&dx);
            });
        }
        y
    }

    /// x + c elementwise for a constant offset.
    pub fn add_scalar(&self, x: &Tensor, c: f64) -> Tensor {
        let out: Vec<f64> = x.values().iter().map(|&v| v + c).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "add_scalar");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                x.accumulate(&g);
            });
        }
        y
    }

    /// x * s where s is a scalar tensor (possibly trainable, e.g. a
    /// learnable epsilon).
    pub fn scale_by(&self, x: &Tensor, s: &Tensor) -> Result<Tensor> {
        if s.numel() != 1 {
            return Err(Error::Dimension(format!(
                "scale_by needs a scalar multiplier, got shape {:?}",
                s.shape()
            )));
        }
        let sv = s.value();
        let out: Vec<f64> = x.values().iter().map(|&v| v * sv).collect();
        let requires = x.requires_grad() || s.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "scale_by");
        if requires {
            let (x, s, y_out) = (x.clone(), s.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                if x.requires_grad() {
                    let sv = s.value();
                    let dx: Vec<f64> = g.iter().map(|&gi| gi * sv).collect();
                    x.accumulate(&dx);
                }
                if s.requires_grad() {
                    let xv = x.values();
                    let ds: f64 = g.iter().zip(&xv).map(|(&gi, &xi)| gi * xi).sum();
                    s.accumulate(&[ds]);
                }
            });
        }
        Ok(y)
    }

    /// Vertical stack of 2-d tensors sharing a column count.
    pub fn concat_rows(&self, parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Dimension("concat_rows of zero tensors".into()));
        }
        let (_, cols) = parts[0].dims2("concat_rows")?;
        let mut total_rows = 0;
        let mut values = Vec::new();
        for part in parts {
            let (r, c) = part.dims2("concat_rows")?;
            if c != cols {
                return Err(Error::Dimension(format!(
                    "concat_rows: {c} columns vs {cols}"
                )));
            }
            total_rows += r;
            values.extend(part.values());
        }
        let requires = parts.iter().any(Tensor::requires_grad);
        let y = Tensor::output(vec![total_rows, cols], values, requires, "concat_rows");
        if requires {
            let parts: Vec<Tensor> = parts.to_vec();
            let y_out = y.clone();
            self.push(move || {
                let g = y_out.grad_snapshot();
                let mut offset = 0;
                for part in &parts {
                    let len = part.numel();
                    if part.requires_grad() {
                        part.accumulate(&g[offset..offset + len]);
                    }
                    offset += len;
                }
            });
        }
        Ok(y)
    }

    /// Column-wise sum over all rows: [n, p] -> [1, p].
    pub fn sum_rows(&self, x: &Tensor) -> Result<Tensor> {
        let (n, p) = x.dims2("sum_rows")?;
        let xv = x.values();
        let mut out = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                out[j] += xv[i * p + j];
            }
        }
        let requires = x.requires_grad();
        let y = Tensor::output(vec![1, p], out, requires, "sum_rows");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let dx: Vec<f64> = (0..n * p).map(|idx| g[idx % p]).collect();
                x.accumulate(&dx);
            });
        }
        Ok(y)
    }

    /// Column-wise mean over all rows: [n, p] -> [1, p].
    pub fn mean_rows(&self, x: &Tensor) -> Result<Tensor> {
        let (n, _) = x.dims2("mean_rows")?;
        if n == 0 {
            return Err(Error::Dimension("mean_rows of an empty tensor".into()));
        }
        let summed = self.sum_rows(x)?;
        Ok(self.scale(&summed, 1.0 / n as f64))
    }

    /// Rows grouped and summed by segment id: [n, p] -> [segments, p].
    pub fn segment_sum(&self, x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor> {
        let (n, p) = x.dims2("segment_sum")?;
        if ids.len() != n {
            return Err(Error::Dimension(format!(
                "segment_sum: {} ids for {n} rows",
                ids.len()
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= segments) {
            return Err(Error::Index(format!(
                "segment id {bad} out of range for {segments} segments"
            )));
        }
        let xv = x.values();
        let mut out = vec![0.0; segments * p];
        for (i, &id) in ids.iter().enumerate() {
            for j in 0..p {
                out[id * p + j] += xv[i * p + j];
            }
        }
        let requires = x.requires_grad();
        let y = Tensor::output(vec![segments, p], out, requires, "segment_sum");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            let ids = ids.to_vec();
            self.push(move || {
                let g = y_out.grad_snapshot();
                let mut dx = vec![0.0; n * p];
                for (i, &id) in ids.iter().enumerate() {
                    dx[i * p..(i + 1) * p].copy_from_slice(&g[id * p..(id + 1) * p]);
                }
                x.accumulate(&dx);
            });
        }
        Ok(y)
    }

    /// Per-segment mean; empty segments produce zero rows.
    pub fn segment_mean(&self, x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor> {
        let summed = self.segment_sum(x, ids, segments)?;
        let mut counts = vec![0.0; segments];
        for &id in ids {
            counts[id] += 1.0;
        }
        let inverse: Vec<f64> = counts
            .iter()
            .map(|&c| if c > 0.0 { 1.0 / c } else { 0.0 })
            .collect();
        let p = summed.shape()[1];
        let weights = Tensor::new(
            &[segments, p],
            (0..segments * p).map(|idx| inverse[idx / p]).collect(),
        )?;
        self.mul(&summed, &weights)
    }

    /// Select rows by index: [n, p] -> [k, p]. Gradient scatter-adds back.
    pub fn gather_rows(&self, x: &Tensor, indices: &[usize]) -> Result<Tensor> {
        let (n, p) = x.dims2("gather_rows")?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Index(format!(
                "row index {bad} out of range for {n} rows"
            )));
        }
        let xv = x.values();
        let mut out = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            out.extend_from_slice(&xv[i * p..(i + 1) * p]);
        }
        let requires = x.requires_grad();
        let y = Tensor::output(vec![indices.len(), p], out, requires, "gather_rows");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            let indices = indices.to_vec();
            self.push(move || {
                let g = y_out.grad_snapshot();
                let mut dx = vec![0.0; n * p];
                for (r, &i) in indices.iter().enumerate() {
                    for j in 0..p {
                        dx[i * p + j] += g[r * p + j];
                    }
                }
                x.accumulate(&dx);
            });
        }
        Ok(y)
    }

    /// Inner products <Z_i, Z_j> for a list of node pairs: [n, k] -> [m].
    pub fn pair_dot(&self, z: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
        let (n, k) = z.dims2("pair_dot")?;
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::Index(format!(
                "pair ({i}, {j}) out of range for {n} rows"
            )));
        }
        let zv = z.values();
        let out: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| {
                (0..k).map(|d| zv[i * k + d] * zv[j * k + d]).sum()
            })
            .collect();
        let requires = z.requires_grad();
        let y = Tensor::output(vec![pairs.len()], out, requires, "pair_dot");
        if requires {
            let (z, y_out) = (z.clone(), y.clone());
            let pairs = pairs.to_vec();
            self.push(move || {
                let g = y_out.grad_snapshot();
                let zv = z.values();
                let mut dz = vec![0.0; n * k];
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    for d in 0..k {
                        dz[i * k + d] += g[r] * zv[j * k + d];
                        dz[j * k + d] += g[r] * zv[i * k + d];
                    }
                }
                z.accumulate(&dz);
            });
        }
        Ok(y)
    }

    /// Clamp values into [lo, hi]; gradient passes only strictly inside.
    pub fn clamp(&self, x: &Tensor, lo: f64, hi: f64) -> Tensor {
        assert!(lo < hi, "clamp bounds must be ordered");
        let out: Vec<f64> = x.values().iter().map(|&v| v.clamp(lo, hi)).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "clamp");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let xv = x.values();
                let dx: Vec<f64> = g
                    .iter()
                    .zip(&xv)
                    .map(|(&gi, &xi)| if xi > lo && xi < hi { gi } else { 0.0 })
                    .collect();
                x.accumulate(&dx);
            });
        }
        y
    }

    /// Inverted dropout: each value is kept with probability 1 - rate and
    /// scaled by 1/(1 - rate); dropped values are zero. Rate 0 is the
    /// identity. Callers apply this only in training mode.
    pub fn dropout(&self, x: &Tensor, rate: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Invalid(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if rate == 0.0 {
            return Ok(x.clone());
        }
        let keep_scale = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..x.numel())
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    keep_scale
                }
            })
            .collect();
        let out: Vec<f64> = x.values().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        let requires = x.requires_grad();
        let y = Tensor::output(x.shape(), out, requires, "dropout");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot();
                let dx: Vec<f64> = g.iter().zip(&mask).map(|(&gi, &m)| gi * m).collect();
                x.accumulate(&dx);
            });
        }
        Ok(y)
    }

    /// Sum of every entry: any shape -> scalar.
    pub fn sum_all(&self, x: &Tensor) -> Tensor {
        let total: f64 = x.values().iter().sum();
        let requires = x.requires_grad();
        let y = Tensor::output(vec![1], vec![total], requires, "sum_all");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            self.push(move || {
                let g = y_out.grad_snapshot()[0];
                let dx = vec![g; x.numel()];
                x.accumulate(&dx);
            });
        }
        y
    }

    /// Mean over rows of -log softmax(logits)[label], stabilized by
    /// max-subtraction. Labels index columns of an [n, c] logit matrix.
    pub fn softmax_cross_entropy(&self, logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
        let (n, c) = logits.dims2("softmax_cross_entropy")?;
        if c < 2 {
            return Err(Error::Invalid(format!(
                "cross entropy needs at least 2 classes, got {c}"
            )));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {n} logit rows",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Index(format!("label {bad} out of range for {c} classes")));
        }
        let xv = logits.values();
        let mut probs = vec![0.0; n * c];
        let mut total = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            let row = &xv[r * c..(r + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
            let denom: f64 = exps.iter().sum();
            for (j, &e) in exps.iter().enumerate() {
                probs[r * c + j] = e / denom;
            }
            total += denom.ln() - (row[label] - max);
        }
        let loss_value = total / n as f64;
        let requires = logits.requires_grad();
        let loss = Tensor::output(vec![1], vec![loss_value], requires, "softmax_cross_entropy");
        if requires {
            let (logits, loss_out) = (logits.clone(), loss.clone());
            let labels = labels.to_vec();
            self.push(move || {
                let g = loss_out.grad_snapshot()[0];
                let scale = g / n as f64;
                let mut dx = probs.clone();
                for (r, &label) in labels.iter().enumerate() {
                    dx[r * c + label] -= 1.0;
                }
                dx.iter_mut().for_each(|d| *d *= scale);
                logits.accumulate(&dx);
            });
        }
        Ok(loss)
    }

    /// Mean of pos_weight * t * softplus(-x) + (1 - t) * softplus(x).
    /// Targets are treated as constants; no gradient flows to them.
    pub fn binary_cross_entropy_with_logits(
        &self,
        logits: &Tensor,
        targets: &Tensor,
        pos_weight: f64,
    ) -> Result<Tensor> {
        if logits.shape() != targets.shape() {
            return Err(Error::Dimension(format!(
                "bce: logits {:?} vs targets {:?}",
                logits.shape(),
                targets.shape()
            )));
        }
        let xv = logits.values();
        let tv = targets.values();
        let n = xv.len() as f64;
        let total: f64 = xv
            .iter()
            .zip(&tv)
            .map(|(&x, &t)| pos_weight * t * softplus(-x) + (1.0 - t) * softplus(x))
            .sum();
        let requires = logits.requires_grad();
        let loss = Tensor::output(vec![1], vec![total / n], requires, "bce_with_logits");
        if requires {
            let (logits, loss_out) = (logits.clone(), loss.clone());
            self.push(move || {
                let g = loss_out.grad_snapshot()[0];
                let xv = logits.values();
                let dx: Vec<f64> = xv
                    .iter()
                    .zip(&tv)
                    .map(|(&x, &t)| {
                        let d = -pos_weight * t * stable_sigmoid(-x)
                            + (1.0 - t) * stable_sigmoid(x);
                        g * d / n
                    })
                    .collect();
                logits.accumulate(&dx);
            });
        }
        Ok(loss)
    }

    /// Total KL(N(mu, sigma^2) || N(0, I)) summed over all entries:
    /// 0.5 * sum(mu^2 + sigma^2 - 1 - 2 log sigma).
    pub fn gaussian_kl(&self, mu: &Tensor, log_sigma: &Tensor) -> Result<Tensor> {
        if mu.shape() != log_sigma.shape() {
            return Err(Error::Dimension(format!(
                "gaussian_kl: mu {:?} vs log_sigma {:?}",
                mu.shape(),
                log_sigma.shape()
            )));
        }
        let mv = mu.values();
        let lv = log_sigma.values();
        let total: f64 = mv
            .iter()
            .zip(&lv)
            .map(|(&m, &l)| 0.5 * (m * m + (2.0 * l).exp() - 1.0 - 2.0 * l))
            .sum();
        let requires = mu.requires_grad() || log_sigma.requires_grad();
        let loss = Tensor::output(vec![1], vec![total], requires, "gaussian_kl");
        if requires {
            let (mu, log_sigma, loss_out) = (mu.clone(), log_sigma.clone(), loss.clone());
            self.push(move || {
                let g = loss_out.grad_snapshot()[0];
                if mu.requires_grad() {
                    let mv = mu.values();
                    let dm: Vec<f64> = mv.iter().map(|&m| g * m).collect();
                    mu.accumulate(&dm);
                }
                if log_sigma.requires_grad() {
                    let lv = log_sigma.values();
                    let dl: Vec<f64> = lv.iter().map(|&l| g * ((2.0 * l).exp() - 1.0)).collect();
                    log_sigma.accumulate(&dl);
                }
            });
        }
        Ok(loss)
    }

    /// Sparse constant matrix times dense tensor: [n, m] x [m, p].
    pub fn spmm(&self, m: &Rc<CsrMatrix>, x: &Tensor) -> Result<Tensor> {
        let (rows_x, p) = x.dims2("spmm")?;
        if m.n_cols() != rows_x {
            return Err(Error::Dimension(format!(
                "spmm: [{}, {}] x [{rows_x}, {p}]",
                m.n_rows(),
                m.n_cols()
            )));
        }
        let xv = x.values();
        let out = m.multiply_dense(&xv, p);
        let requires = x.requires_grad();
        let y = Tensor::output(vec![m.n_rows(), p], out, requires, "spmm");
        if requires {
            let (x, y_out) = (x.clone(), y.clone());
            let m = Rc::clone(m);
            self.push(move || {
                let g = y_out.grad_snapshot();
                let dx = m.multiply_dense_transposed(&g, p);
                x.accumulate(&dx);
            });
        }
        Ok(y)
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Compare backward gradients of a scalar-valued function against central
/// finite differences at step `eps`; returns the maximum relative error
/// over coordinates, with the denominator floored at 1e-2 so near-zero
/// gradients are judged on absolute error.
pub fn finite_difference_check<F>(f: F, x: &Tensor, eps: f64) -> f64
where
    F: Fn(&Tape, &Tensor) -> Tensor,
{
    let shape = x.shape();
    let base = x.values();

    let param = Tensor::parameter(&shape, base.clone()).expect("input values are finite");
    let tape = Tape::new();
    let loss = f(&tape, &param);
    assert_eq!(loss.numel(), 1, "finite_difference_check needs a scalar function");
    tape.backward(&loss).expect("loss is scalar");
    let analytic = param.grad().expect("parameter gradient populated");

    let eval = |values: Vec<f64>| -> f64 {
        let probe = Tensor::new(&shape, values).expect("perturbed values are finite");
        let tape = Tape::new();
        f(&tape, &probe).value()
    };

    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += eps;
        let mut minus = base.clone();
        minus[i] -= eps;
        let numeric = (eval(plus) - eval(minus)) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-2);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn constant(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    fn parameter(rows: &[Vec<f64>]) -> Tensor {
        let t = constant(rows);
        Tensor::parameter(&t.shape(), t.values()).unwrap()
    }

    #[test]
    fn matmul_identity_returns_input() {
        let tape = Tape::new();
        let a = constant(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let eye = constant(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = tape.matmul(&a, &eye).unwrap();
        assert_eq!(out.values(), a.values());
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let tape = Tape::new();
        let a = constant(&[vec![1.0, 2.0]]);
        let b = constant(&[vec![1.0, 2.0]]);
        let err = tape.matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains('1') && err.contains('2'), "{err}");
    }

    #[test]
    fn relu_clamps_negatives() {
        let tape = Tape::new();
        let x = Tensor::new(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(tape.relu(&x).values(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn segment_sum_groups_rows() {
        let tape = Tape::new();
        let x = constant(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let out = tape.segment_sum(&x, &[0, 0, 1], 2).unwrap();
        assert_eq!(out.values(), vec![4.0, 6.0, 5.0, 6.0]);
    }

    #[test]
    fn segment_sum_rejects_out_of_range_id() {
        let tape = Tape::new();
        let x = constant(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            tape.segment_sum(&x, &[0, 2], 2),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn segment_sum_of_ones_counts_rows() {
        let tape = Tape::new();
        let ids = [2usize, 0, 2, 1, 2];
        let ones = Tensor::new(&[5, 1], vec![1.0; 5]).unwrap();
        let out = tape.segment_sum(&ones, &ids, 3).unwrap();
        assert_eq!(out.values(), vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn add_broadcasts_bias_over_rows() {
        let tape = Tape::new();
        let x = parameter(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let bias = parameter(&[vec![10.0, 20.0]]);
        let out = tape.add(&x, &bias).unwrap();
        assert_eq!(out.values(), vec![11.0, 22.0, 13.0, 24.0]);
        let loss = tape.sum_all(&out);
        tape.backward(&loss).unwrap();
        assert_eq!(bias.grad().unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn add_shape_mismatch_is_error() {
        let tape = Tape::new();
        let a = constant(&[vec![1.0, 2.0]]);
        let b = constant(&[vec![1.0], vec![2.0]]);
        assert!(matches!(tape.add(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn sum_of_parameter_gives_all_ones_gradient() {
        let tape = Tape::new();
        let w = parameter(&[vec![1.0, -2.0], vec![0.5, 3.0]]);
        let loss = tape.sum_all(&w);
        tape.backward(&loss).unwrap();
        assert_eq!(w.grad().unwrap(), vec![1.0; 4]);
        assert!(tape.is_empty());
    }

    #[test]
    fn matmul_gradient_is_x_transpose_ones() {
        let tape = Tape::new();
        let x = constant(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let w = parameter(&[vec![0.1], vec![0.2]]);
        let out = tape.matmul(&x, &w).unwrap();
        let loss = tape.sum_all(&out);
        tape.backward(&loss).unwrap();
        assert_eq!(w.grad().unwrap(), vec![9.0, 12.0]);
    }

    #[test]
    fn unused_parameter_reports_zero_gradient() {
        let tape = Tape::new();
        let used = parameter(&[vec![1.0]]);
        let unused = parameter(&[vec![5.0, 6.0]]);
        let loss = tape.sum_all(&used);
        tape.backward(&loss).unwrap();
        assert_eq!(unused.grad().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gradients_accumulate_across_reuse() {
        let tape = Tape::new();
        let x = parameter(&[vec![3.0]]);
        let doubled = tape.add(&x, &x).unwrap();
        let loss = tape.sum_all(&doubled);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let tape = Tape::new();
        let x = parameter(&[vec![1.0, 2.0]]);
        assert!(tape.backward(&x).is_err());
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences() {
        let x = Tensor::new(&[4], vec![0.5, -1.5, 2.0, 0.0]).unwrap();
        let err = finite_difference_check(
            |tape, x| {
                let squared = tape.mul(x, x).unwrap();
                tape.scale(&tape.sum_all(&squared), 0.5)
            },
            &x,
            1e-4,
        );
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn constant_function_has_zero_gradient_error() {
        let x = Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let err = finite_difference_check(|_, _| Tensor::scalar(7.0), &x, 1e-4);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_classes() {
        let tape = Tape::new();
        for c in [2usize, 3, 5] {
            let logits = Tensor::new(&[4, c], vec![0.3; 4 * c]).unwrap();
            let labels: Vec<usize> = (0..4).map(|i| i % c).collect();
            let loss = tape.softmax_cross_entropy(&logits, &labels).unwrap();
            assert_relative_eq!(loss.value(), (c as f64).ln(), max_relative = 1e-12);
        }
    }

    #[test]
    fn cross_entropy_decreases_with_margin() {
        let tape = Tape::new();
        let mut last = f64::INFINITY;
        for margin in [1.0, 5.0, 10.0] {
            let logits = Tensor::new(&[1, 2], vec![margin, 0.0]).unwrap();
            let loss = tape.softmax_cross_entropy(&logits, &[0]).unwrap().value();
            assert!(loss < last, "margin {margin}: {loss} !< {last}");
            assert!(loss >= 0.0);
            last = loss;
        }
    }

    #[test]
    fn cross_entropy_matches_direct_recomputation() {
        let tape = Tape::new();
        let values = vec![
            0.31, -1.2, 0.55, 2.4, -0.7, 0.02, 1.9, -2.2, 0.4, -0.1, 0.9, 1.1,
        ];
        let labels = [3usize, 0, 2];
        let logits = Tensor::new(&[3, 4], values.clone()).unwrap();
        let loss = tape.softmax_cross_entropy(&logits, &labels).unwrap().value();

        let mut expected = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            let row = &values[r * 4..(r + 1) * 4];
            let denom: f64 = row.iter().map(|&v| v.exp()).sum();
            expected += -(row[label].exp() / denom).ln();
        }
        expected /= 3.0;
        assert_relative_eq!(loss, expected, max_relative = 1e-10);
    }

    #[test]
    fn cross_entropy_rejects_single_class() {
        let tape = Tape::new();
        let logits = Tensor::new(&[2, 1], vec![0.0, 0.0]).unwrap();
        assert!(tape.softmax_cross_entropy(&logits, &[0, 0]).is_err());
    }

    #[test]
    fn bce_of_zero_logits_and_mixed_targets_is_ln_two() {
        let tape = Tape::new();
        let logits = Tensor::new(&[10], vec![0.0; 10]).unwrap();
        let targets =
            Tensor::new(&[10], (0..10).map(|i| (i % 2) as f64).collect()).unwrap();
        let loss = tape
            .binary_cross_entropy_with_logits(&logits, &targets, 1.0)
            .unwrap();
        assert_relative_eq!(loss.value(), 2.0f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn bce_vanishes_for_confident_correct_logit() {
        let tape = Tape::new();
        let logits = Tensor::new(&[1], vec![30.0]).unwrap();
        let targets = Tensor::new(&[1], vec![1.0]).unwrap();
        let loss = tape
            .binary_cross_entropy_with_logits(&logits, &targets, 1.0)
            .unwrap();
        assert!(loss.value() < 1e-12);
    }

    #[test]
    fn bce_matches_direct_recomputation() {
        let tape = Tape::new();
        let xs = vec![0.7, -1.3, 2.2, -0.05, 4.0];
        let ts = vec![1.0, 0.0, 1.0, 1.0, 0.0];
        let pos_weight = 1.7;
        let logits = Tensor::new(&[5], xs.clone()).unwrap();
        let targets = Tensor::new(&[5], ts.clone()).unwrap();
        let loss = tape
            .binary_cross_entropy_with_logits(&logits, &targets, pos_weight)
            .unwrap()
            .value();

        let expected: f64 = xs
            .iter()
            .zip(&ts)
            .map(|(&x, &t)| {
                pos_weight * t * (1.0 + (-x).exp()).ln() + (1.0 - t) * (1.0 + x.exp()).ln()
            })
            .sum::<f64>()
            / 5.0;
        assert_relative_eq!(loss, expected, max_relative = 1e-10);
    }

    #[test]
    fn kl_of_standard_normal_posterior_is_zero() {
        let tape = Tape::new();
        let mu = Tensor::new(&[2, 3], vec![0.0; 6]).unwrap();
        let ls = Tensor::new(&[2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(tape.gaussian_kl(&mu, &ls).unwrap().value(), 0.0);
    }

    #[test]
    fn kl_of_unit_mean_is_half_per_dimension() {
        let tape = Tape::new();
        for dims in [4usize, 8] {
            let mu = Tensor::new(&[1, dims], vec![1.0; dims]).unwrap();
            let ls = Tensor::new(&[1, dims], vec![0.0; dims]).unwrap();
            let kl = tape.gaussian_kl(&mu, &ls).unwrap().value();
            assert_relative_eq!(kl, 0.5 * dims as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn clamp_blocks_gradient_at_the_bounds() {
        let tape = Tape::new();
        let x = Tensor::parameter(&[3], vec![-20.0, 0.5, 20.0]).unwrap();
        let y = tape.clamp(&x, -15.0, 15.0);
        assert_eq!(y.values(), vec![-15.0, 0.5, 15.0]);
        let loss = tape.sum_all(&y);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn dropout_backward_matches_forward_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tape = Tape::new();
        let x = Tensor::parameter(&[8], vec![1.0; 8]).unwrap();
        let y = tape.dropout(&x, 0.5, &mut rng).unwrap();
        let loss = tape.sum_all(&y);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), y.values());
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tape = Tape::new();
        let x = Tensor::new(&[4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = tape.dropout(&x, 0.0, &mut rng).unwrap();
        assert_eq!(y.values(), x.values());
        assert!(tape.is_empty());
    }

    #[test]
    fn gather_rows_scatter_adds_gradient() {
        let tape = Tape::new();
        let x = parameter(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let y = tape.gather_rows(&x, &[0, 0, 1]).unwrap();
        assert_eq!(y.shape(), vec![3, 2]);
        let loss = tape.sum_all(&y);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn pair_dot_is_symmetric_and_exact() {
        let tape = Tape::new();
        let z = constant(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]);
        let out = tape.pair_dot(&z, &[(0, 0), (0, 1), (2, 0), (0, 2)]).unwrap();
        assert_eq!(out.values(), vec![1.0, 0.0, 0.6, 0.6]);
    }

    #[test]
    fn forward_and_backward_are_bit_deterministic() {
        let run = || {
            let tape = Tape::new();
            let x = Tensor::parameter(&[2, 2], vec![0.3, -0.7, 1.1, 0.05]).unwrap();
            let w = Tensor::parameter(&[2, 2], vec![0.9, 0.1, -0.4, 0.2]).unwrap();
            let h = tape.relu(&tape.matmul(&x, &w).unwrap());
            let loss = tape.softmax_cross_entropy(&h, &[0, 1]).unwrap();
            tape.backward(&loss).unwrap();
            (loss.value(), x.grad().unwrap(), w.grad().unwrap())
        };
        let (l1, gx1, gw1) = run();
        let (l2, gx2, gw2) = run();
        assert!(l1.to_bits() == l2.to_bits());
        assert_eq!(gx1, gx2);
        assert_eq!(gw1, gw2);
    }

    #[test]
    fn concat_rows_stacks_and_splits_gradient() {
        let tape = Tape::new();
        let a = parameter(&[vec![1.0, 2.0]]);
        let b = parameter(&[vec![3.0, 4.0], vec![5.0, 6.0]]);
        let y = tape.concat_rows(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(y.shape(), vec![3, 2]);
        let picked = tape.gather_rows(&y, &[1]).unwrap();
        let loss = tape.sum_all(&picked);
        tape.backward(&loss).unwrap();
        assert_eq!(a.grad().unwrap(), vec![0.0, 0.0]);
        assert_eq!(b.grad().unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn mean_rows_averages_columns() {
        let tape = Tape::new();
        let x = constant(&[vec![1.0, 2.0], vec![3.0, 6.0]]);
        let out = tape.mean_rows(&x).unwrap();
        assert_eq!(out.values(), vec![2.0, 4.0]);
    }

    #[test]
    fn segment_mean_handles_empty_segment() {
        let tape = Tape::new();
        let x = constant(&[vec![2.0], vec![4.0]]);
        let out = tape.segment_mean(&x, &[0, 0], 2).unwrap();
        assert_eq!(out.values(), vec![3.0, 0.0]);
    }

    #[test]
    fn elementwise_losses_pass_finite_difference_checks() {
        let x = Tensor::new(&[6], vec![0.4, -0.9, 1.3, 0.2, -0.3, 2.1]).unwrap();
        for (name, err) in [
            (
                "sigmoid",
                finite_difference_check(
                    |t, x| t.sum_all(&t.sigmoid(x)),
                    &x,
                    1e-4,
                ),
            ),
            (
                "exp",
                finite_difference_check(|t, x| t.sum_all(&t.exp(x)), &x, 1e-4),
            ),
            (
                "bce",
                finite_difference_check(
                    |t, x| {
                        let targets =
                            Tensor::new(&[6], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
                        t.binary_cross_entropy_with_logits(x, &targets, 1.5).unwrap()
                    },
                    &x,
                    1e-4,
                ),
            ),
        ] {
            assert!(err < 1e-6, "{name}: relative error {err}");
        }
    }
}
