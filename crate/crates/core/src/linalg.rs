//! Dense helpers around `nalgebra` plus sparse-times-dense products.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::vectorize::DocTermMatrix;

/// `A · X` for sparse `A` (d×w) and dense `X` (w×k).
pub fn sparse_mul(a: &DocTermMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.n_terms(), x.nrows());
    let k = x.ncols();
    let mut out = DMatrix::zeros(a.n_docs(), k);
    for r in 0..a.n_docs() {
        for (c, v) in a.row(r) {
            for j in 0..k {
                out[(r, j)] += v * x[(c, j)];
            }
        }
    }
    out
}

/// `Aᵀ · Y` for sparse `A` (d×w) and dense `Y` (d×k).
pub fn sparse_tr_mul(a: &DocTermMatrix, y: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.n_docs(), y.nrows());
    let k = y.ncols();
    let mut out = DMatrix::zeros(a.n_terms(), k);
    for r in 0..a.n_docs() {
        for (c, v) in a.row(r) {
            for j in 0..k {
                out[(c, j)] += v * y[(r, j)];
            }
        }
    }
    out
}

/// Fills a matrix with standard normals in row-major draw order.
pub fn gaussian<R: Rng>(rng: &mut R, nrows: usize, ncols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nrows, ncols);
    for r in 0..nrows {
        for c in 0..ncols {
            m[(r, c)] = rng.sample(StandardNormal);
        }
    }
    m
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Option<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

/// Serde adapter storing a dense matrix as an array of rows.
pub mod row_major {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        super::from_rows(&rows, ncols).ok_or_else(|| D::Error::custom("ragged matrix rows"))
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::MatrixKind;

    #[test]
    fn sparse_products_match_dense() {
        let dense = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let a = DocTermMatrix::from_dense(&dense, MatrixKind::Tfidf);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(sparse_mul(&a, &x), &dense * &x);
        let y = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        assert_eq!(sparse_tr_mul(&a, &y), dense.transpose() * &y);
    }
}
