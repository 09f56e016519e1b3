//! Principal component analysis via cyclic Jacobi eigendecomposition.

use crate::dataset::IndustryTable;

use super::{Result, StructureError};

/// Ordered principal components of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// One unit-norm loading vector per retained component.
    pub components: Vec<Vec<f64>>,
    /// Fraction of total variance per retained component, non-increasing.
    pub explained_ratio: Vec<f64>,
    /// Scores matrix, one row per input row, one column per component.
    pub scores: Vec<Vec<f64>>,
    /// Column labels carried through for exports.
    pub column_labels: Vec<String>,
    /// Row labels carried through for exports.
    pub row_labels: Vec<String>,
    /// Column means removed before decomposition.
    pub column_means: Vec<f64>,
}

/// PCA of the employment distribution across sectors: rows are converted
/// to shares, columns mean-centered (covariance PCA; set `scale` for the
/// correlation variant), and the sample covariance eigendecomposed.
pub fn pca_industry(ind: &IndustryTable, n_components: usize) -> Result<PcaResult> {
    pca_industry_with(ind, n_components, false)
}

pub fn pca_industry_with(ind: &IndustryTable, n_components: usize, scale: bool) -> Result<PcaResult> {
    let n_cities = ind.cities().len();
    if n_cities < 2 {
        return Err(StructureError::EmptyInput);
    }
    let shares: Vec<Vec<f64>> = (0..n_cities)
        .map(|i| {
            let row = ind.row(i);
            let total: u64 = row.iter().sum();
            row.iter().map(|&c| c as f64 / total as f64).collect()
        })
        .collect();
    let mut result = pca_matrix_with(&shares, n_components, scale)?;
    result.column_labels = ind.industries().to_vec();
    result.row_labels = ind.cities().to_vec();
    Ok(result)
}

/// Covariance PCA of an arbitrary numeric matrix (rows are observations).
pub fn pca_matrix(data: &[Vec<f64>], n_components: usize) -> Result<PcaResult> {
    pca_matrix_with(data, n_components, false)
}

#[allow(clippy::needless_range_loop)]
pub fn pca_matrix_with(data: &[Vec<f64>], n_components: usize, scale: bool) -> Result<PcaResult> {
    let n_rows = data.len();
    if n_rows < 2 {
        return Err(StructureError::EmptyInput);
    }
    let n_cols = data[0].len();
    assert!(
        data.iter().all(|row| row.len() == n_cols),
        "ragged data matrix"
    );
    if n_components == 0 || n_components > n_cols {
        return Err(StructureError::BadComponentCount {
            requested: n_components,
            available: n_cols,
        });
    }

    let means: Vec<f64> = (0..n_cols)
        .map(|j| data.iter().map(|row| row[j]).sum::<f64>() / n_rows as f64)
        .collect();
    let mut centered: Vec<Vec<f64>> = data
        .iter()
        .map(|row| row.iter().zip(&means).map(|(x, m)| x - m).collect())
        .collect();
    if scale {
        for j in 0..n_cols {
            let var: f64 =
                centered.iter().map(|r| r[j] * r[j]).sum::<f64>() / (n_rows - 1) as f64;
            let sd = var.sqrt();
            if sd > 0.0 {
                for row in centered.iter_mut() {
                    row[j] /= sd;
                }
            }
        }
    }

    // Sample covariance, divisor n - 1.
    let mut cov = vec![vec![0.0; n_cols]; n_cols];
    for row in &centered {
        for a in 0..n_cols {
            for b in a..n_cols {
                cov[a][b] += row[a] * row[b];
            }
        }
    }
    let denom = (n_rows - 1) as f64;
    for a in 0..n_cols {
        for b in a..n_cols {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&cov);
    let total: f64 = eigenvalues.iter().map(|&v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(StructureError::DegenerateData);
    }

    // Sort descending; equal eigenvalues keep column order.
    let mut order: Vec<usize> = (0..n_cols).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(n_components);
    let mut explained_ratio = Vec::with_capacity(n_components);
    for &idx in order.iter().take(n_components) {
        let mut vector: Vec<f64> = (0..n_cols).map(|r| eigenvectors[r][idx]).collect();
        orient(&mut vector);
        components.push(vector);
        explained_ratio.push(eigenvalues[idx].max(0.0) / total);
    }

    let scores: Vec<Vec<f64>> = centered
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|comp| row.iter().zip(comp).map(|(x, c)| x * c).sum())
                .collect()
        })
        .collect();

    Ok(PcaResult {
        components,
        explained_ratio,
        scores,
        column_labels: (0..n_cols).map(|j| format!("col{j}")).collect(),
        row_labels: (0..n_rows).map(|i| format!("row{i}")).collect(),
        column_means: means,
    })
}

/// Flips the vector so its largest-magnitude loading is positive.
fn orient(vector: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in vector.iter().enumerate() {
        if v.abs() > vector[best].abs() {
            best = i;
        }
    }
    if vector[best] < 0.0 {
        for v in vector.iter_mut() {
            *v = -*v;
        }
    }
}

/// Cyclic Jacobi rotation for a symmetric matrix. Returns (eigenvalues,
/// eigenvector matrix with vectors in columns).
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = matrix
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}
