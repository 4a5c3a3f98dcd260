use faer::linalg::solvers::DenseSolveCore;
use serde::Serialize;

use crate::sparse::CsrMatrix;

/// Relative tolerance on negative entries of the dense inverse.
const INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MMatrixViolation {
    NonPositiveDiagonal { row: usize, value: f64 },
    PositiveOffDiagonal { row: usize, col: usize, value: f64 },
    NegativeInverse { row: usize, col: usize, value: f64 },
    /// Column sum of a column whose diagonal does not dominate.
    WeakColumn { col: usize, margin: f64 },
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct MMatrixReport {
    pub size: usize,
    /// Whether the dense inverse was formed; otherwise column dominance was checked.
    pub dense_checked: bool,
    /// Smallest entry of the inverse divided by its largest magnitude, when formed.
    pub min_inverse_ratio: Option<f64>,
    /// Smallest `a_jj - sum_{i != j} |a_ij|` over columns, when checked.
    pub min_column_margin: Option<f64>,
    pub violations: Vec<MMatrixViolation>,
}

impl MMatrixReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the M-matrix sign pattern, and either nonnegativity of the dense
/// inverse (below `dense_threshold` unknowns) or weak column diagonal dominance.
pub fn verify_m_matrix(matrix: &CsrMatrix, dense_threshold: usize) -> MMatrixReport {
    let n = matrix.nrows();
    let mut report = MMatrixReport {
        size: n,
        dense_checked: false,
        min_inverse_ratio: None,
        min_column_margin: None,
        violations: Vec::new(),
    };
    if !matrix.is_square() {
        report.violations.push(MMatrixViolation::NotSquare { rows: n, cols: matrix.ncols() });
        return report;
    }
    let mut has_diag = vec![false; n];
    for (i, j, v) in matrix.triplets() {
        if i == j {
            has_diag[i] = true;
            if !(v > 0.0) {
                report.violations.push(MMatrixViolation::NonPositiveDiagonal { row: i, value: v });
            }
        } else if v > 0.0 {
            report.violations.push(MMatrixViolation::PositiveOffDiagonal { row: i, col: j, value: v });
        }
    }
    for (i, present) in has_diag.iter().enumerate() {
        if !present {
            report.violations.push(MMatrixViolation::NonPositiveDiagonal { row: i, value: 0.0 });
        }
    }
    if !report.violations.is_empty() {
        return report;
    }

    if n <= dense_threshold {
        report.dense_checked = true;
        let inv = matrix.to_dense().partial_piv_lu().inverse();
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for j in 0..n {
            for i in 0..n {
                let v = inv[(i, j)];
                if !v.is_finite() {
                    report.violations.push(MMatrixViolation::NegativeInverse { row: i, col: j, value: v });
                    return report;
                }
                max = max.max(v.abs());
                min = min.min(v);
            }
        }
        report.min_inverse_ratio = Some(if max > 0.0 { min / max } else { 0.0 });
        for j in 0..n {
            for i in 0..n {
                let v = inv[(i, j)];
                if v < -INVERSE_TOL * max {
                    report.violations.push(MMatrixViolation::NegativeInverse { row: i, col: j, value: v });
                }
            }
        }
    } else {
        let mut margin = matrix.diagonal();
        for (i, j, v) in matrix.triplets() {
            if i != j {
                margin[j] -= v.abs();
            }
        }
        let scale = matrix.max_abs();
        let mut min_margin = f64::INFINITY;
        for (j, &m) in margin.iter().enumerate() {
            min_margin = min_margin.min(m);
            if m < -1e-12 * scale {
                report.violations.push(MMatrixViolation::WeakColumn { col: j, margin: m });
            }
        }
        report.min_column_margin = Some(min_margin);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes() {
        assert!(verify_m_matrix(&CsrMatrix::identity(4), 10).passed());
        assert!(verify_m_matrix(&CsrMatrix::identity(4), 0).passed());
    }

    #[test]
    fn positive_offdiagonal_is_located() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 2.0), (1, 0, 0.5)]);
        let r = verify_m_matrix(&m, 10);
        assert_eq!(r.violations, vec![MMatrixViolation::PositiveOffDiagonal { row: 1, col: 0, value: 0.5 }]);
    }

    #[test]
    fn sign_pattern_alone_is_not_enough() {
        // Z-matrix with a negative inverse entry: eigenvalues 3 and -1
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, -2.0), (1, 0, -2.0)]);
        let dense = verify_m_matrix(&m, 10);
        assert!(dense.violations.iter().any(|v| matches!(v, MMatrixViolation::NegativeInverse { .. })));
        let sparse = verify_m_matrix(&m, 0);
        assert!(sparse.violations.iter().any(|v| matches!(v, MMatrixViolation::WeakColumn { .. })));
    }

    #[test]
    fn dominant_tridiagonal_passes() {
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let m = CsrMatrix::from_triplets(n, n, &t);
        let r = verify_m_matrix(&m, 100);
        assert!(r.passed());
        assert!(r.min_inverse_ratio.unwrap() > 0.0);
    }
}
