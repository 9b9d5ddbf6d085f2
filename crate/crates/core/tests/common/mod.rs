//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nlglrt::numerics::ComplexMatrix;
use nlglrt::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Entries with I and Q uniform in [-1, 1).
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Gauss-Jordan with partial pivoting on a general complex matrix.
pub fn gauss_jordan_inverse(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let mut aug: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut row: Vec<Complex64> = (0..n).map(|j| a[(i, j)]).collect();
            row.extend((0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].norm().total_cmp(&aug[y][col].norm()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                for c in 0..2 * n {
                    let sub = f * aug[col][c];
                    aug[r][c] -= sub;
                }
            }
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| aug[i][n + j])
}

/// Plain triple-loop product.
pub fn naive_matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|p| a[(i, p)] * b[(p, j)]).sum()
    })
}

/// Plain loop conjugate transpose.
pub fn naive_hermitian(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)].conj())
}
