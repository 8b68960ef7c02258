//! Polynomial chaos expansion over independent standard-normal germs.
//!
//! Coefficients are obtained by pseudo-spectral projection: the forward model
//! is evaluated at the nodes of a tensor Gauss–Hermite rule whose weights
//! already contain the Gaussian density, and each coefficient is the weighted
//! sum of model output times basis polynomial. The basis is orthonormal, so no
//! normalization by ⟨Ψ_j, Ψ_j⟩ is needed.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ForwardModel;

/// Orthonormal probabilists' Hermite basis on a total-degree multi-index set.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    degree: usize,
    n_germs: usize,
    multi_indices: Vec<Vec<usize>>,
}

impl HermiteBasis {
    /// Multi-indices are graded by total degree, so index 0 is always the
    /// constant polynomial.
    pub fn new(degree: usize, n_germs: usize) -> Result<Self> {
        if n_germs == 0 {
            return Err(Error::InvalidArgument("basis needs at least one germ".into()));
        }
        let mut multi_indices = Vec::new();
        for total in 0..=degree {
            let mut current = vec![0; n_germs];
            push_compositions(total, 0, &mut current, &mut multi_indices);
        }
        Ok(Self {
            degree,
            n_germs,
            multi_indices,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_germs(&self) -> usize {
        self.n_germs
    }

    /// Number of basis functions, C(d + n_ξ, d).
    pub fn len(&self) -> usize {
        self.multi_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi_indices.is_empty()
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.multi_indices
    }

    /// Evaluates every basis function at `xi`.
    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        debug_assert_eq!(xi.len(), self.n_germs);
        // univariate tables ψ_n(ξ_k) for n = 0..=degree
        let tables: Vec<Vec<f64>> = xi.iter().map(|&x| hermite_orthonormal(self.degree, x)).collect();
        self.multi_indices
            .iter()
            .map(|alpha| alpha.iter().zip(&tables).map(|(&a, t)| t[a]).product())
            .collect()
    }
}

// Enumerates all compositions of `remaining` into the germ slots from `slot` on.
fn push_compositions(remaining: usize, slot: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slot + 1 == current.len() {
        current[slot] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[slot] = k;
        push_compositions(remaining - k, slot + 1, current, out);
    }
    current[slot] = 0;
}

/// Orthonormal probabilists' Hermite polynomials ψ_0..ψ_degree at `x`:
/// ψ_n = He_n / √(n!).
pub fn hermite_orthonormal(degree: usize, x: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(degree + 1);
    psi.push(1.0);
    if degree >= 1 {
        psi.push(x);
    }
    for n in 1..degree {
        let nf = n as f64;
        let next = (x * psi[n] - nf.sqrt() * psi[n - 1]) / (nf + 1.0).sqrt();
        psi.push(next);
    }
    psi
}

/// Tensor-product Gauss–Hermite rule for the standard normal density.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    n_germs: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(order: usize, n_germs: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        if n_germs == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one germ".into()));
        }
        let (x1, w1) = gauss_hermite_1d(order);
        let total = order.pow(n_germs as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; n_germs];
        for _ in 0..total {
            nodes.push(idx.iter().map(|&i| x1[i]).collect());
            weights.push(idx.iter().map(|&i| w1[i]).product());
            // odometer increment, last germ fastest
            for slot in (0..n_germs).rev() {
                idx[slot] += 1;
                if idx[slot] < order {
                    break;
                }
                idx[slot] = 0;
            }
        }
        Ok(Self {
            order,
            n_germs,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_germs(&self) -> usize {
        self.n_germs
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Golub–Welsch for the probabilists' Hermite weight: the Jacobi matrix has a
/// zero diagonal and off-diagonal entries √k.
fn gauss_hermite_1d(order: usize) -> (Vec<f64>, Vec<f64>) {
    if order == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize against round-off
    for k in 0..order / 2 {
        let m = order - 1 - k;
        let x = 0.5 * (pairs[m].0 - pairs[k].0);
        let w = 0.5 * (pairs[m].1 + pairs[k].1);
        pairs[k] = (-x, w);
        pairs[m] = (x, w);
    }
    if order % 2 == 1 {
        pairs[order / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// PCE coefficients of a vector-valued response, one row per output.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticResponse {
    n_outputs: usize,
    n_basis: usize,
    // row-major n_outputs × n_basis
    coefficients: Vec<f64>,
}

impl StochasticResponse {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_basis = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_basis) {
            return Err(Error::InvalidArgument("ragged coefficient rows".into()));
        }
        Ok(Self {
            n_outputs: rows.len(),
            n_basis,
            coefficients: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn row(&self, output: usize) -> &[f64] {
        &self.coefficients[output * self.n_basis..(output + 1) * self.n_basis]
    }

    pub fn mean(&self, output: usize) -> f64 {
        self.row(output)[0]
    }

    pub fn std(&self, output: usize) -> f64 {
        self.row(output)[1..].iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Per-output mean α_{i0} and standard deviation √(Σ_{j≥1} α_{ij}²).
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.n_outputs).map(|i| (self.mean(i), self.std(i))).unzip()
    }

    /// Writes the coefficient matrix as CSV, rows = outputs, columns = basis index.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let header: Vec<String> = (0..self.n_basis).map(|j| format!("alpha_{j}")).collect();
        let mut text = format!("output,{}\n", header.join(","));
        for i in 0..self.n_outputs {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            text.push_str(&format!("{i},{}\n", row.join(",")));
        }
        out.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Free-function form of [`StochasticResponse::moments`].
pub fn moments(response: &StochasticResponse) -> (Vec<f64>, Vec<f64>) {
    response.moments()
}

/// How the forward model is evaluated across quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    Serial,
    Parallel,
}

/// Projects the embedded response onto the basis.
///
/// Germ `k` perturbs model parameter `k`: the model is evaluated at
/// `θ = means + scales ⊙ ξ` (padded with zeros for trailing deterministic
/// parameters), so `means.len()` may exceed `scales.len()`.
pub fn project(
    model: &dyn ForwardModel,
    means: &[f64],
    scales: &[f64],
    basis: &HermiteBasis,
    quad: &QuadratureRule,
    evaluation: Evaluation,
) -> Result<StochasticResponse> {
    if basis.n_germs() != scales.len() || quad.n_germs() != scales.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_germs(),
            actual: scales.len(),
            context: "germs vs scales",
        });
    }
    if means.len() < scales.len() || means.len() != model.n_params() {
        return Err(Error::DimensionMismatch {
            expected: model.n_params(),
            actual: means.len(),
            context: "model parameters",
        });
    }
    if let Some(s) = scales.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or non-finite scale {s}")));
    }

    let eval_node = |(k, xi): (usize, &Vec<f64>)| -> Result<Vec<f64>> {
        let mut theta = means.to_vec();
        for (j, (&s, &x)) in scales.iter().zip(xi).enumerate() {
            theta[j] += s * x;
        }
        let out = model.evaluate(&theta).map_err(|e| Error::ModelEvaluation {
            node: k,
            source: Box::new(e),
        })?;
        if out.len() != model.n_outputs() {
            return Err(Error::ModelEvaluation {
                node: k,
                source: Box::new(Error::DimensionMismatch {
                    expected: model.n_outputs(),
                    actual: out.len(),
                    context: "model outputs",
                }),
            });
        }
        Ok(out)
    };
    let outputs: Vec<Vec<f64>> = match evaluation {
        Evaluation::Serial => quad.nodes().iter().enumerate().map(eval_node).collect::<Result<_>>()?,
        Evaluation::Parallel => quad
            .nodes()
            .par_iter()
            .enumerate()
            .map(eval_node)
            .collect::<Result<_>>()?,
    };

    let n_out = model.n_outputs();
    let n_basis = basis.len();
    let mut coefficients = vec![0.0; n_out * n_basis];
    for ((xi, w), f) in quad.nodes().iter().zip(quad.weights()).zip(&outputs) {
        let psi = basis.eval(xi);
        for (i, fi) in f.iter().enumerate() {
            let row = &mut coefficients[i * n_basis..(i + 1) * n_basis];
            for (a, p) in row.iter_mut().zip(&psi) {
                *a += w * fi * p;
            }
        }
    }
    Ok(StochasticResponse {
        n_outputs: n_out,
        n_basis,
        coefficients,
    })
}
