//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's linear algebra.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Mat {
    (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

pub fn center_columns(x: &Mat) -> Mat {
    let m = x.len() as f64;
    let n = x[0].len();
    let means: Vec<f64> = (0..n).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / m).collect();
    x.iter().map(|r| r.iter().zip(&means).map(|(v, mu)| v - mu).collect()).collect()
}

/// Sample covariance (n - 1 denominator) of already-centered data.
pub fn sample_covariance(x: &Mat) -> Mat {
    let m = x.len();
    let n = x[0].len();
    let mut c = vec![vec![0.0; n]; n];
    for r in x {
        for i in 0..n {
            for j in 0..n {
                c[i][j] += r[i] * r[j];
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= (m - 1) as f64;
        }
    }
    c
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues in decreasing order with unit eigenvectors.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        let scale: f64 = (0..n).map(|i| a[i][i].powi(2)).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
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
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n).map(|k| (a[k][k], v.iter().map(|r| r[k]).collect())).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs.into_iter().unzip()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let z = b[0].len();
    let mut m: Mat = a.iter().zip(b).map(|(r, br)| r.iter().chain(br).copied().collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular system");
        for row in 0..n {
            if row != col {
                let f = m[row][col] / d;
                for k in col..n + z {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..n).map(|i| (0..z).map(|j| m[i][n + j] / m[i][i]).collect()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .map(|r| (0..b[0].len()).map(|j| r.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}

/// Gaussian design matrix `[1, phi_1, ..., phi_k]` computed from scratch.
pub fn gaussian_design(centers: &Mat, sigma: f64, inputs: &Mat) -> Mat {
    inputs
        .iter()
        .map(|x| {
            std::iter::once(1.0)
                .chain(centers.iter().map(|c| {
                    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                    (-d2 / (2.0 * sigma * sigma)).exp()
                }))
                .collect()
        })
        .collect()
}

/// Least squares through the normal equations `(A^T A) w = A^T t`.
pub fn normal_equations(a: &Mat, t: &Mat) -> Mat {
    let at = transpose(a);
    solve_linear(&matmul(&at, a), &matmul(&at, t))
}

/// Minimum-norm solution of an underdetermined full-row-rank system:
/// `w = A^T (A A^T)^{-1} t`.
pub fn min_norm_solution(a: &Mat, t: &Mat) -> Mat {
    let at = transpose(a);
    matmul(&at, &solve_linear(&matmul(a, &at), t))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}
