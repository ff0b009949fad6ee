//! C-SVC trained with sequential minimal optimization.
//!
//! Working-set selection uses second-order information (the LIBSVM WSS3
//! rule). The Gram matrix is held densely, so training sets are expected
//! to be subsampled to a few thousand rows before reaching this solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest training set the dense Gram matrix is built for.
pub const MAX_DENSE_ROWS: usize = 12_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn rbf(c: f64, gamma: f64) -> Self {
        SvmParams {
            c,
            kernel: Kernel::Rbf { gamma },
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

/// A trained two-class SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub c: f64,
    pub dim: usize,
    /// Support vectors, row-major `n_sv x dim`.
    pub support: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Labels of the support vectors, +1 or -1.
    pub y: Vec<f64>,
    pub bias: f64,
}

/// Solver diagnostics and in-sample margins.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final `max(-y G) over I_up - min(-y G) over I_low`.
    pub kkt_violation: f64,
    /// Full dual vector, aligned with the training rows.
    pub alpha: Vec<f64>,
    /// Decision values of the training rows, from the solver gradient.
    pub margins: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_index: Vec<usize>,
}

impl Svm {
    pub fn n_support(&self) -> usize {
        self.alpha.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support[i * self.dim..(i + 1) * self.dim]
    }

    /// `sum_i alpha_i y_i K(x, x_i) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (i, (a, y)) in self.alpha.iter().zip(&self.y).enumerate() {
            acc += a * y * self.kernel.eval(x, self.support_vector(i));
        }
        acc + self.bias
    }

    /// Trains on `rows` (each of length `dim`) with labels in {true, false}.
    pub fn train(rows: &[&[f64]], labels: &[bool], params: &SvmParams) -> Result<(Svm, SolveReport)> {
        let n = rows.len();
        if n != labels.len() {
            return Err(Error::LengthMismatch {
                what: "training rows vs labels",
                left: n,
                right: labels.len(),
            });
        }
        let n_pos = labels.iter().filter(|&&l| l).count();
        if n_pos == 0 || n_pos == n {
            return Err(Error::SingleClass(format!(
                "{n_pos} positive of {n} training rows; both classes are required"
            )));
        }
        if n > MAX_DENSE_ROWS {
            return Err(Error::InvalidInput(format!(
                "{n} training rows exceed the dense solver limit of {MAX_DENSE_ROWS}"
            )));
        }
        if !(params.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", params.c)));
        }
        let dim = rows[0].len();
        let c = params.c;
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = params.kernel.eval(rows[i], rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
        let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

        let mut iter = 0;
        let violation;
        loop {
            // select i: maximal violating index in I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = usize::MAX;
            for t in 0..n {
                if in_up(alpha[t], y[t]) {
                    let v = -y[t] * grad[t];
                    if v > gmax {
                        gmax = v;
                        i_sel = t;
                    }
                }
            }
            // select j by second-order gain, and track the stopping gap
            let mut gmin = f64::INFINITY;
            let mut j_sel = usize::MAX;
            let mut best_gain = f64::INFINITY;
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                if v < gmin {
                    gmin = v;
                }
                if i_sel != usize::MAX {
                    let b = gmax - v;
                    if b > 0.0 {
                        let a = k[i_sel * n + i_sel] + k[t * n + t] - 2.0 * k[i_sel * n + t];
                        let a = if a > 0.0 { a } else { TAU };
                        let gain = -(b * b) / a;
                        if gain <= best_gain {
                            best_gain = gain;
                            j_sel = t;
                        }
                    }
                }
            }
            if gmax - gmin < params.tol || i_sel == usize::MAX || j_sel == usize::MAX {
                violation = (gmax - gmin).max(0.0);
                break;
            }
            if iter >= params.max_iter {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: gmax - gmin,
                });
            }
            iter += 1;

            let (i, j) = (i_sel, j_sel);
            let (old_ai, old_aj) = (alpha[i], alpha[j]);
            let quad = {
                let a = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
                if a > 0.0 {
                    a
                } else {
                    TAU
                }
            };
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
            for t in 0..n {
                grad[t] += q(t, i) * dai + q(t, j) * daj;
            }
        }

        // bias from free vectors, or the midpoint of the feasible interval
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if alpha[t] > 0.0 && alpha[t] < c {
                sum_free += yg;
                n_free += 1;
            } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        }
        let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
        let bias = -rho;

        let support_index: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
        let mut support = Vec::with_capacity(support_index.len() * dim);
        for &t in &support_index {
            support.extend_from_slice(rows[t]);
        }
        let margins = (0..n).map(|t| y[t] * (grad[t] + 1.0) + bias).collect();
        let svm = Svm {
            kernel: params.kernel,
            c,
            dim,
            support,
            alpha: support_index.iter().map(|&t| alpha[t]).collect(),
            y: support_index.iter().map(|&t| y[t]).collect(),
            bias,
        };
        Ok((
            svm,
            SolveReport {
                iterations: iter,
                kkt_violation: violation,
                alpha,
                margins,
                support_index,
            },
        ))
    }

    /// `|sum_i alpha_i y_i|`, which the dual constraint keeps at zero.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum::<f64>().abs()
    }
}
