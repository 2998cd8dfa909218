use super::{CMatrix, DensityMatrix, OperatorMatrix, QubitRegister, HERMITICITY_TOL};
use crate::error::{Error, Result};

/// Kronecker product; `a`'s qubits come first in the result's register.
pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix::from_parts(
        a.data().kronecker(b.data()),
        a.register().concat(b.register()),
    )
}

/// Lift a single-qubit operator onto `target` of `register`, identity elsewhere.
pub fn embed(op: &OperatorMatrix, target: usize, register: &QubitRegister) -> Result<OperatorMatrix> {
    if op.dim() != 2 {
        return Err(Error::Dimension(format!(
            "embed expects a single-qubit operator, got dimension {}",
            op.dim()
        )));
    }
    register.check_index(target)?;
    Ok(OperatorMatrix::from_parts(
        embed_matrix(op.data(), target, register.len()),
        register.clone(),
    ))
}

pub(crate) fn embed_matrix(op: &CMatrix, target: usize, n: usize) -> CMatrix {
    let d = 1usize << n;
    let shift = n - 1 - target;
    let mask = 1usize << shift;
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let bi = (i >> shift) & 1;
        for bj in 0..2 {
            let j = (i & !mask) | (bj << shift);
            out[(i, j)] = op[(bi, bj)];
        }
    }
    out
}

fn normalized_subset(qubits: &[usize], register: &QubitRegister) -> Result<Vec<usize>> {
    let mut v = qubits.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != qubits.len() {
        return Err(Error::InvalidSubset(format!("duplicate qubits in {qubits:?}")));
    }
    for &q in &v {
        register.check_index(q)?;
    }
    Ok(v)
}

fn subset_mask(qubits: &[usize], register: &QubitRegister) -> usize {
    qubits.iter().fold(0, |m, &q| m | register.mask(q))
}

/// Reduced state on `keep`, tracing out every other qubit.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidSubset("partial trace needs a nonempty keep set".into()));
    }
    let reg = rho.register();
    let keep = normalized_subset(keep, reg)?;
    let keep_mask = subset_mask(&keep, reg);
    let n = reg.len();
    let dk = 1usize << keep.len();
    let compress = |i: usize| -> usize {
        keep.iter()
            .fold(0, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
    };
    let d = reg.dim();
    let data = rho.data();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..d {
        let ki = compress(i);
        for j in 0..d {
            if (i & !keep_mask) == (j & !keep_mask) {
                out[(ki, compress(j))] += data[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_parts(out, reg.select(&keep)))
}

/// Transpose of the `part` qubit indices only.
pub fn partial_transpose(rho: &DensityMatrix, part: &[usize]) -> Result<OperatorMatrix> {
    let reg = rho.register();
    if part.is_empty() || part.len() >= reg.len() {
        return Err(Error::InvalidSubset(format!(
            "partial transpose needs a proper nonempty subset, got {part:?} of {} qubits",
            reg.len()
        )));
    }
    let part = normalized_subset(part, reg)?;
    let mask = subset_mask(&part, reg);
    Ok(OperatorMatrix::from_parts(
        partial_transpose_matrix(rho.data(), mask),
        reg.clone(),
    ))
}

pub(crate) fn partial_transpose_matrix(data: &CMatrix, mask: usize) -> CMatrix {
    let d = data.nrows();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let ii = (i & !mask) | (j & mask);
            let jj = (j & !mask) | (i & mask);
            out[(ii, jj)] = data[(i, j)];
        }
    }
    out
}

/// Sum of singular values.
pub fn trace_norm(m: &OperatorMatrix) -> f64 {
    trace_norm_matrix(m.data())
}

pub fn trace_norm_matrix(m: &CMatrix) -> f64 {
    let scale = m.norm().max(1.0);
    if super::max_abs_diff(m, &m.adjoint()) <= HERMITICITY_TOL * scale {
        hermitian_eigen(&super::hermitize(m))
            .0
            .iter()
            .map(|l| l.abs())
            .sum()
    } else {
        m.clone().svd(false, false).singular_values.iter().sum()
    }
}

/// Eigenvalues (ascending) and the matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let d = m.nrows();
    let mut vectors = CMatrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}
