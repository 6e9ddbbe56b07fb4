//! Matrix-factorization topic models: randomized truncated-SVD LSA and
//! multiplicative-update NMF.
//!
//! The document-term matrix is stored documents × terms. NMF factors its
//! transpose, so `W` is terms × topics and `H` is topics × documents.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian, row_major, sparse_mul, sparse_tr_mul};
use crate::rng::seeded;
use crate::vectorize::DocTermMatrix;

/// Extra sketch columns beyond the requested rank.
pub const LSA_OVERSAMPLING: usize = 10;
/// Subspace (power) iterations applied to the sketch.
pub const LSA_POWER_ITERATIONS: usize = 2;
/// Guard added to every multiplicative-update denominator.
pub const NMF_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    /// Documents in latent space, `U_t · Σ_t` (d × t).
    #[serde(with = "row_major")]
    pub doc_factors: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Latent dimensions over terms, `V_tᵀ` (t × V).
    #[serde(with = "row_major")]
    pub term_factors: DMatrix<f64>,
    pub t: usize,
    pub seed: u64,
}

impl LsaModel {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.doc_factors * &self.term_factors
    }
}

/// Rank-`t` truncated SVD by seeded randomized range finding followed by
/// an exact SVD of the projected matrix.
pub fn fit_lsa(m: &DocTermMatrix, t: usize, seed: u64) -> Result<LsaModel> {
    let max = m.n_docs().min(m.n_terms());
    if t < 1 || t > max {
        return Err(Error::RankTooLarge { requested: t, max });
    }
    if m.values().iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateMatrix);
    }
    let sketch = (t + LSA_OVERSAMPLING).min(max);
    let mut rng = seeded(seed);
    let omega = gaussian(&mut rng, m.n_terms(), sketch);

    let mut q = sparse_mul(m, &omega).qr().q();
    for _ in 0..LSA_POWER_ITERATIONS {
        let z = sparse_tr_mul(m, &q).qr().q();
        q = sparse_mul(m, &z).qr().q();
    }
    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ.
    let b = sparse_tr_mul(m, &q).transpose();
    let svd = b.svd(true, true);
    let u_small = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let u = &q * u_small;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    order.truncate(t);

    let n_docs = m.n_docs();
    let n_terms = m.n_terms();
    let mut doc_factors = DMatrix::zeros(n_docs, t);
    let mut term_factors = DMatrix::zeros(t, n_terms);
    let mut singular_values = Vec::with_capacity(t);
    for (k, &src) in order.iter().enumerate() {
        let s = svd.singular_values[src].max(0.0);
        // Sign convention: the largest-magnitude term loading is positive.
        let pivot = (0..n_terms)
            .max_by(|&a, &b| v_t[(src, a)].abs().total_cmp(&v_t[(src, b)].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if v_t[(src, pivot)] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n_terms {
            term_factors[(k, j)] = sign * v_t[(src, j)];
        }
        for i in 0..n_docs {
            doc_factors[(i, k)] = sign * u[(i, src)] * s;
        }
        singular_values.push(s);
    }
    Ok(LsaModel {
        doc_factors,
        singular_values,
        term_factors,
        t,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub t: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfModel {
    /// Terms × topics.
    #[serde(with = "row_major")]
    pub w: DMatrix<f64>,
    /// Topics × documents.
    #[serde(with = "row_major")]
    pub h: DMatrix<f64>,
    pub t: usize,
    /// Objective at initialization followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl NmfModel {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    /// Topics × terms view.
    pub fn topic_term(&self) -> DMatrix<f64> {
        self.w.transpose()
    }

    /// Documents × topics view.
    pub fn doc_topic(&self) -> DMatrix<f64> {
        self.h.transpose()
    }
}

/// Lee–Seung multiplicative updates for `½‖Vᵀ − W·H‖²_F`.
pub fn fit_nmf(m: &DocTermMatrix, cfg: &NmfConfig) -> Result<NmfModel> {
    fit_nmf_observed(m, cfg, |_, _, _| {})
}

/// As [`fit_nmf`], calling `observe(iteration, W, H)` after every update.
pub fn fit_nmf_observed<F>(m: &DocTermMatrix, cfg: &NmfConfig, mut observe: F) -> Result<NmfModel>
where
    F: FnMut(usize, &DMatrix<f64>, &DMatrix<f64>),
{
    if let Some((row, col, value)) = m.iter().find(|e| e.2 < 0.0) {
        return Err(Error::NegativeInput { row, col, value });
    }
    let t = cfg.t;
    let max = m.n_docs().min(m.n_terms());
    if t < 1 || t > max {
        return Err(Error::RankTooLarge { requested: t, max });
    }
    let n_docs = m.n_docs();
    let n_terms = m.n_terms();
    let mean = m.total() / (n_docs * n_terms) as f64;
    let scale = (mean / t as f64).sqrt();
    let mut rng = seeded(cfg.seed);
    let mut draw = |rows, cols| {
        let mut x = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let z: f64 = rng.sample(StandardNormal);
                x[(r, c)] = z.abs() * scale;
            }
        }
        x
    };
    let mut w: DMatrix<f64> = draw(n_terms, t);
    let mut h: DMatrix<f64> = draw(t, n_docs);

    let mut trace = vec![nmf_objective(m, &w, &h)?];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        // H ← H ∘ (Wᵀ X) / (Wᵀ W H), with Wᵀ X = (V W)ᵀ.
        let wtx = sparse_mul(m, &w).transpose();
        let wtwh = (w.transpose() * &w) * &h;
        h.zip_zip_apply(&wtx, &wtwh, |hv, num, den| *hv *= num / (den + NMF_EPSILON));
        // W ← W ∘ (X Hᵀ) / (W H Hᵀ), with X Hᵀ = Vᵀ Hᵀ.
        let xht = sparse_tr_mul(m, &h.transpose());
        let whht = &w * (&h * h.transpose());
        w.zip_zip_apply(&xht, &whht, |wv, num, den| *wv *= num / (den + NMF_EPSILON));
        iterations += 1;
        debug_assert!(w.iter().chain(h.iter()).all(|v| *v >= 0.0));
        observe(iterations, &w, &h);

        let prev = *trace.last().unwrap();
        let obj = nmf_objective(m, &w, &h)?;
        trace.push(obj);
        if prev <= 0.0 || (prev - obj) < cfg.tol * prev {
            break;
        }
    }
    Ok(NmfModel {
        w,
        h,
        t,
        objective_trace: trace,
        iterations,
    })
}

/// `½‖Vᵀ − W·H‖²_F` evaluated over the nonzeros of `V` plus the dense
/// remainder `‖WH‖² − Σ_nz (WH)²`.
pub fn nmf_objective(m: &DocTermMatrix, w: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    if w.nrows() != m.n_terms() || h.ncols() != m.n_docs() || w.ncols() != h.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "V is {}x{} (docs x terms) but W is {}x{} and H is {}x{}",
            m.n_docs(),
            m.n_terms(),
            w.nrows(),
            w.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    let k = w.ncols();
    let mut residual = 0.0;
    let mut recon_nz = 0.0;
    for (doc, term, v) in m.iter() {
        let r: f64 = (0..k).map(|z| w[(term, z)] * h[(z, doc)]).sum();
        residual += (v - r) * (v - r);
        recon_nz += r * r;
    }
    let wtw = w.transpose() * w;
    let hht = h * h.transpose();
    let recon_all = wtw.component_mul(&hht).sum();
    Ok(0.5 * (residual + (recon_all - recon_nz)).max(0.0))
}
