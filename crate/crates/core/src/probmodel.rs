//! Probabilistic topic models: pLSA fit by expectation-maximization and
//! LDA fit by collapsed Gibbs sampling.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::row_major;
use crate::rng::{seeded, SeededRng};
use crate::vectorize::DocTermMatrix;

/// Floor applied inside `ln` when a cell's mixture probability is zero.
pub const PLSA_LOG_FLOOR: f64 = 1e-300;

/// Read access to a fitted model's per-document topic mixture.
pub trait DocTopics {
    fn n_docs(&self) -> usize;
    fn n_topics(&self) -> usize;
    fn doc_topic_row(&self, doc: usize) -> Vec<f64>;

    fn doc_topics(&self, doc: usize) -> Result<Vec<f64>> {
        if doc >= self.n_docs() {
            return Err(Error::IndexOutOfRange {
                index: doc,
                len: self.n_docs(),
            });
        }
        Ok(self.doc_topic_row(doc))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlsaConfig {
    pub t: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsaModel {
    /// Documents × topics.
    #[serde(with = "row_major")]
    pub p_z_given_d: DMatrix<f64>,
    /// Topics × terms.
    #[serde(with = "row_major")]
    pub p_w_given_z: DMatrix<f64>,
    pub p_d: Vec<f64>,
    /// Log-likelihood at initialization, then after every EM iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    /// Cells that hit [`PLSA_LOG_FLOOR`] across all evaluations.
    pub degenerate_cells: usize,
}

impl DocTopics for PlsaModel {
    fn n_docs(&self) -> usize {
        self.p_z_given_d.nrows()
    }
    fn n_topics(&self) -> usize {
        self.p_z_given_d.ncols()
    }
    fn doc_topic_row(&self, doc: usize) -> Vec<f64> {
        self.p_z_given_d.row(doc).iter().copied().collect()
    }
}

fn random_stochastic(rng: &mut SeededRng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            // strictly positive so that no topic starts dead
            m[(r, c)] = rng.random::<f64>() + f64::MIN_POSITIVE;
        }
        let s: f64 = m.row(r).sum();
        m.row_mut(r).iter_mut().for_each(|v| *v /= s);
    }
    m
}

pub fn fit_plsa(counts: &DocTermMatrix, cfg: &PlsaConfig) -> Result<PlsaModel> {
    fit_plsa_observed(counts, cfg, |_, _| {})
}

/// As [`fit_plsa`], calling `observe(iteration, model)` after every M-step.
pub fn fit_plsa_observed<F>(counts: &DocTermMatrix, cfg: &PlsaConfig, mut observe: F) -> Result<PlsaModel>
where
    F: FnMut(usize, &PlsaModel),
{
    if cfg.t < 1 {
        return Err(Error::InvalidHyperparameter("pLSA needs at least one topic".into()));
    }
    let total = counts.total();
    if counts.n_docs() == 0 || counts.n_terms() == 0 || total <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    let t = cfg.t;
    let n_docs = counts.n_docs();
    let n_terms = counts.n_terms();
    let doc_len: Vec<f64> = (0..n_docs).map(|d| counts.row(d).map(|(_, v)| v).sum()).collect();
    let p_d = doc_len.iter().map(|n| n / total).collect();

    let mut rng = seeded(cfg.seed);
    let p_z_given_d = random_stochastic(&mut rng, n_docs, t);
    let p_w_given_z = random_stochastic(&mut rng, t, n_terms);
    let mut model = PlsaModel {
        p_z_given_d,
        p_w_given_z,
        p_d,
        loglik_trace: Vec::new(),
        iterations: 0,
        degenerate_cells: 0,
    };
    let (ll, bad) = log_likelihood_parts(counts, &model);
    model.loglik_trace.push(ll);
    model.degenerate_cells += bad;

    let mut post = vec![0.0; t];
    while model.iterations < cfg.max_iter {
        let mut n_dz = DMatrix::<f64>::zeros(n_docs, t);
        let mut n_zw = DMatrix::<f64>::zeros(t, n_terms);
        // E-step fused with the expected-count accumulation.
        for (d, w, n) in counts.iter() {
            let mut norm = 0.0;
            for (z, p) in post.iter_mut().enumerate() {
                *p = model.p_z_given_d[(d, z)] * model.p_w_given_z[(z, w)];
                norm += *p;
            }
            if norm <= 0.0 {
                continue;
            }
            for (z, p) in post.iter().enumerate() {
                let c = n * p / norm;
                n_dz[(d, z)] += c;
                n_zw[(z, w)] += c;
            }
        }
        // M-step.
        for d in 0..n_docs {
            let s: f64 = n_dz.row(d).sum();
            if s > 0.0 {
                for z in 0..t {
                    model.p_z_given_d[(d, z)] = n_dz[(d, z)] / s;
                }
            }
        }
        for z in 0..t {
            let s: f64 = n_zw.row(z).sum();
            if s > 0.0 {
                for w in 0..n_terms {
                    model.p_w_given_z[(z, w)] = n_zw[(z, w)] / s;
                }
            }
        }
        model.iterations += 1;
        let (ll, bad) = log_likelihood_parts(counts, &model);
        if bad > 0 {
            log::warn!("pLSA iteration {}: {bad} cells with zero probability", model.iterations);
        }
        model.degenerate_cells += bad;
        let prev = *model.loglik_trace.last().unwrap();
        model.loglik_trace.push(ll);
        observe(model.iterations, &model);
        if ll - prev < cfg.tol {
            break;
        }
    }
    Ok(model)
}

/// `Σ n(d,w) · ln[P(d) Σ_z P(z|d) P(w|z)]` over the nonzero cells.
pub fn plsa_log_likelihood(counts: &DocTermMatrix, model: &PlsaModel) -> Result<f64> {
    if counts.n_docs() != model.p_z_given_d.nrows()
        || counts.n_terms() != model.p_w_given_z.ncols()
        || model.p_z_given_d.ncols() != model.p_w_given_z.nrows()
        || model.p_d.len() != counts.n_docs()
    {
        return Err(Error::ShapeMismatch(format!(
            "counts {}x{} vs model P(z|d) {}x{}, P(w|z) {}x{}",
            counts.n_docs(),
            counts.n_terms(),
            model.p_z_given_d.nrows(),
            model.p_z_given_d.ncols(),
            model.p_w_given_z.nrows(),
            model.p_w_given_z.ncols()
        )));
    }
    let (ll, bad) = log_likelihood_parts(counts, model);
    if bad > 0 {
        log::warn!("{bad} cells with zero probability in pLSA log-likelihood");
    }
    Ok(ll)
}

fn log_likelihood_parts(counts: &DocTermMatrix, model: &PlsaModel) -> (f64, usize) {
    let t = model.p_z_given_d.ncols();
    let mut ll = 0.0;
    let mut bad = 0;
    for (d, w, n) in counts.iter() {
        let mix: f64 = (0..t)
            .map(|z| model.p_z_given_d[(d, z)] * model.p_w_given_z[(z, w)])
            .sum();
        let p = model.p_d[d] * mix;
        if p > 0.0 {
            ll += n * p.ln();
        } else {
            bad += 1;
            ll += n * PLSA_LOG_FLOOR.ln();
        }
    }
    (ll, bad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            t: 10,
            alpha: 0.1,
            beta: 0.01,
            seed: 42,
            iterations: 1000,
            burn_in: 200,
            sample_lag: 10,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidHyperparameter(m.to_string()));
        if self.t < 1 {
            return bad("T must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be > 0");
        }
        if self.iterations <= self.burn_in {
            return bad("iterations must exceed burn_in");
        }
        if self.sample_lag < 1 {
            return bad("sample_lag must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// Topics × terms.
    #[serde(with = "row_major")]
    pub phi: DMatrix<f64>,
    /// Documents × topics.
    #[serde(with = "row_major")]
    pub theta: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub t: usize,
    #[serde(skip)]
    pub assignments: Vec<Vec<usize>>,
    pub samples: usize,
}

impl DocTopics for LdaModel {
    fn n_docs(&self) -> usize {
        self.theta.nrows()
    }
    fn n_topics(&self) -> usize {
        self.t
    }
    fn doc_topic_row(&self, doc: usize) -> Vec<f64> {
        self.theta.row(doc).iter().copied().collect()
    }
}

/// Gibbs chain state: topic labels plus the three count tables.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub t: usize,
    pub n_terms: usize,
    pub z: Vec<Vec<usize>>,
    /// Documents × topics, row-major.
    pub n_dk: Vec<u32>,
    /// Topics × terms, row-major.
    pub n_kw: Vec<u32>,
    pub n_k: Vec<u32>,
}

impl GibbsState {
    /// Exact integer checks of the marginal identities between tables.
    pub fn check_consistency(&self, docs: &[Vec<usize>]) -> std::result::Result<(), String> {
        let t = self.t;
        let mut total = 0u64;
        for (d, doc) in docs.iter().enumerate() {
            let s: u64 = self.n_dk[d * t..(d + 1) * t].iter().map(|&c| c as u64).sum();
            if s != doc.len() as u64 {
                return Err(format!("doc {d}: sum_k n_dk = {s}, N_d = {}", doc.len()));
            }
            total += doc.len() as u64;
        }
        for k in 0..t {
            let s: u64 = self.n_kw[k * self.n_terms..(k + 1) * self.n_terms]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if s != self.n_k[k] as u64 {
                return Err(format!("topic {k}: sum_w n_kw = {s}, n_k = {}", self.n_k[k]));
            }
        }
        let s: u64 = self.n_k.iter().map(|&c| c as u64).sum();
        if s != total {
            return Err(format!("sum_k n_k = {s}, total tokens = {total}"));
        }
        Ok(())
    }
}

pub fn fit_lda_gibbs(docs: &[Vec<usize>], n_terms: usize, cfg: &LdaConfig) -> Result<LdaModel> {
    fit_lda_gibbs_observed(docs, n_terms, cfg, |_, _| {})
}

/// As [`fit_lda_gibbs`], calling `observe(sweep, state)` after every sweep.
pub fn fit_lda_gibbs_observed<F>(
    docs: &[Vec<usize>],
    n_terms: usize,
    cfg: &LdaConfig,
    mut observe: F,
) -> Result<LdaModel>
where
    F: FnMut(usize, &GibbsState),
{
    cfg.validate()?;
    let n_tokens: usize = docs.iter().map(Vec::len).sum();
    if docs.is_empty() || n_tokens == 0 || n_terms == 0 {
        return Err(Error::EmptyCorpus);
    }
    if let Some(&w) = docs.iter().flatten().find(|&&w| w >= n_terms) {
        return Err(Error::IndexOutOfRange { index: w, len: n_terms });
    }
    let t = cfg.t;
    let n_docs = docs.len();
    let mut rng = seeded(cfg.seed);
    let mut st = GibbsState {
        t,
        n_terms,
        z: Vec::with_capacity(n_docs),
        n_dk: vec![0; n_docs * t],
        n_kw: vec![0; t * n_terms],
        n_k: vec![0; t],
    };
    for (d, doc) in docs.iter().enumerate() {
        let labels: Vec<usize> = doc
            .iter()
            .map(|&w| {
                let k = rng.random_range(0..t);
                st.n_dk[d * t + k] += 1;
                st.n_kw[k * n_terms + w] += 1;
                st.n_k[k] += 1;
                k
            })
            .collect();
        st.z.push(labels);
    }

    let v_beta = n_terms as f64 * cfg.beta;
    let mut weights = vec![0.0; t];
    let mut phi = DMatrix::<f64>::zeros(t, n_terms);
    let mut theta = DMatrix::<f64>::zeros(n_docs, t);
    let mut samples = 0usize;

    for sweep in 1..=cfg.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = st.z[d][i];
                st.n_dk[d * t + old] -= 1;
                st.n_kw[old * n_terms + w] -= 1;
                st.n_k[old] -= 1;

                let mut acc = 0.0;
                for (k, wt) in weights.iter_mut().enumerate() {
                    acc += (st.n_dk[d * t + k] as f64 + cfg.alpha) * (st.n_kw[k * n_terms + w] as f64 + cfg.beta)
                        / (st.n_k[k] as f64 + v_beta);
                    *wt = acc;
                }
                let u = rng.random::<f64>() * acc;
                let new = weights.iter().position(|&c| u < c).unwrap_or(t - 1);

                st.z[d][i] = new;
                st.n_dk[d * t + new] += 1;
                st.n_kw[new * n_terms + w] += 1;
                st.n_k[new] += 1;
            }
        }
        observe(sweep, &st);

        let scheduled = sweep > cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.sample_lag);
        if scheduled || (sweep == cfg.iterations && samples == 0) {
            samples += 1;
            accumulate_estimates(&st, docs, cfg, samples, &mut phi, &mut theta);
        }
    }

    Ok(LdaModel {
        phi,
        theta,
        alpha: cfg.alpha,
        beta: cfg.beta,
        t,
        assignments: st.z,
        samples,
    })
}

/// Running mean of the posterior-mean estimates of ϕ and θ.
fn accumulate_estimates(
    st: &GibbsState,
    docs: &[Vec<usize>],
    cfg: &LdaConfig,
    count: usize,
    phi: &mut DMatrix<f64>,
    theta: &mut DMatrix<f64>,
) {
    let t = st.t;
    let n_terms = st.n_terms;
    let c = count as f64;
    let v_beta = n_terms as f64 * cfg.beta;
    for k in 0..t {
        let denom = st.n_k[k] as f64 + v_beta;
        for w in 0..n_terms {
            let est = (st.n_kw[k * n_terms + w] as f64 + cfg.beta) / denom;
            let cur = &mut phi[(k, w)];
            *cur += (est - *cur) / c;
        }
    }
    let t_alpha = t as f64 * cfg.alpha;
    for (d, doc) in docs.iter().enumerate() {
        let denom = doc.len() as f64 + t_alpha;
        for k in 0..t {
            let est = (st.n_dk[d * t + k] as f64 + cfg.alpha) / denom;
            let cur = &mut theta[(d, k)];
            *cur += (est - *cur) / c;
        }
    }
}
