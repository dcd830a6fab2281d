//! The cone of PPT operators: membership, projections, a projected-descent
//! search for PPT states detected by a witness, and the interior / boundary
//! constructions along the segment towards the maximally mixed state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duality::{detects, dual_matrix, pairing, in_kill_set, ProductVector, WitnessReport};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_min, eigh, partial_transpose, span_rank, BipartiteDims, CMatrix, HermMatrix, DEFAULT_RANK_TOL,
};
use crate::maps::LinMapRep;
use crate::sampling::{gaussian_vector, rng_from_seed};

/// Eigenvalues above this count as strictly positive in [`InteriorReport`].
pub const INTERIOR_TOL: f64 = 1e-12;

/// Relative tolerance of [`is_ppt`], scaled by `‖A‖`.
pub const PPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptCheck {
    pub is_ppt: bool,
    pub state_min_eig: f64,
    pub partial_transpose_min_eig: f64,
}

/// Both minimum eigenvalues together with the PPT verdict at `1e-9·‖A‖`.
pub fn ppt_check(a: &HermMatrix, dims: BipartiteDims) -> Result<PptCheck> {
    let pt = partial_transpose(a, dims)?;
    let state_min_eig = eig_min(a);
    let partial_transpose_min_eig = eig_min(&pt);
    let tol = PPT_TOL * a.frobenius_norm();
    Ok(PptCheck {
        is_ppt: state_min_eig >= -tol && partial_transpose_min_eig >= -tol,
        state_min_eig,
        partial_transpose_min_eig,
    })
}

pub fn is_ppt(a: &HermMatrix, dims: BipartiteDims) -> Result<bool> {
    Ok(ppt_check(a, dims)?.is_ppt)
}

fn rebuild(values: &[f64], vectors: &CMatrix) -> HermMatrix {
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * values[c]);
    crate::linalg::hermitian_part(&(scaled * vectors.adjoint()))
}

/// Nearest positive semi-definite matrix in Frobenius norm.
pub fn project_psd(a: &HermMatrix) -> HermMatrix {
    let (values, vectors) = eigh(a);
    if values[0] >= 0.0 {
        return a.clone();
    }
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    rebuild(&clipped, &vectors)
}

fn project_pt_psd(a: &HermMatrix, dims: BipartiteDims) -> HermMatrix {
    let pt = partial_transpose(a, dims).expect("dims checked by caller");
    partial_transpose(&project_psd(&pt), dims).expect("dims checked by caller")
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let cand = (cum - 1.0) / (k as f64 + 1.0);
        if s - cand > 0.0 {
            theta = cand;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix (PSD, trace one).
fn project_density(a: &HermMatrix) -> HermMatrix {
    let (values, vectors) = eigh(a);
    rebuild(&project_simplex(&values), &vectors)
}

fn project_pt_density(a: &HermMatrix, dims: BipartiteDims) -> HermMatrix {
    let pt = partial_transpose(a, dims).expect("dims checked by caller");
    partial_transpose(&project_density(&pt), dims).expect("dims checked by caller")
}

fn check_dims(a: &HermMatrix, dims: BipartiteDims) -> Result<()> {
    if a.dim() != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix does not act on C^{} ⊗ C^{}",
            a.dim(),
            a.dim(),
            dims.n,
            dims.m
        )));
    }
    Ok(())
}

/// Dykstra's alternating projections between the PSD cone and the cone of
/// matrices with PSD partial transpose, converging to the nearest PPT matrix.
///
/// Fails with [`Error::NonConvergence`] if the iterate is not PPT and stable
/// after `iters` rounds.
pub fn project_ppt(a: &HermMatrix, dims: BipartiteDims, iters: usize) -> Result<HermMatrix> {
    check_dims(a, dims)?;
    if is_ppt(a, dims)? {
        return Ok(a.clone());
    }
    let scale = a.frobenius_norm().max(1.0);
    let mut x = a.clone();
    let mut p = HermMatrix::zeros(a.dim());
    let mut q = HermMatrix::zeros(a.dim());
    let mut residual = f64::INFINITY;
    for _ in 0..iters {
        let y = project_psd(&x.combine(1.0, &p, 1.0));
        p = x.combine(1.0, &p, 1.0).combine(1.0, &y, -1.0);
        let next = project_pt_psd(&y.combine(1.0, &q, 1.0), dims);
        q = y.combine(1.0, &q, 1.0).combine(1.0, &next, -1.0);
        residual = next.combine(1.0, &y, -1.0).frobenius_norm();
        x = next;
        if residual <= 1e-12 * scale && is_ppt(&x, dims)? {
            return Ok(x);
        }
    }
    if is_ppt(&x, dims)? && residual <= 1e-9 * scale {
        return Ok(x);
    }
    Err(Error::NonConvergence { residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptSearchConfig {
    pub max_iterations: usize,
    pub step_size: f64,
    /// Weight of `I/(nm)` mixed into the final state.
    pub mixing_epsilon: f64,
    pub restarts: usize,
    /// Dykstra rounds per projection onto the trace-one PPT set.
    pub inner_iterations: usize,
    pub seed: u64,
    /// Success requires `pairing < -tolerance`.
    pub tolerance: f64,
}

impl Default for PptSearchConfig {
    fn default() -> Self {
        PptSearchConfig {
            max_iterations: 2000,
            step_size: 0.05,
            mixing_epsilon: 1e-6,
            restarts: 8,
            inner_iterations: 6,
            seed: 0,
            tolerance: 1e-9,
        }
    }
}

impl PptSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_size.is_nan() || self.step_size <= 0.0 {
            return Err(Error::InvalidParameter("step size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mixing_epsilon) {
            return Err(Error::InvalidParameter("mixing epsilon must lie in [0, 1)".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Approximate projection onto `{A ⪰ 0, A^τ ⪰ 0, Tr A = 1}` by a few Dykstra
/// rounds between the two trace-one spectraplexes.
fn project_trace_ppt(a: &HermMatrix, dims: BipartiteDims, rounds: usize) -> HermMatrix {
    let mut x = a.clone();
    let mut p = HermMatrix::zeros(a.dim());
    let mut q = HermMatrix::zeros(a.dim());
    for _ in 0..rounds.max(1) {
        let y = project_density(&x.combine(1.0, &p, 1.0));
        p = x.combine(1.0, &p, 1.0).combine(1.0, &y, -1.0);
        let next = project_pt_density(&y.combine(1.0, &q, 1.0), dims);
        q = y.combine(1.0, &q, 1.0).combine(1.0, &next, -1.0);
        x = next;
    }
    x
}

/// Pushes a nearly PPT trace-one matrix into the cone by mixing in just enough
/// of the identity, then renormalizes.
fn make_ppt(a: &HermMatrix, dims: BipartiteDims, extra: f64) -> HermMatrix {
    let pt = partial_transpose(a, dims).expect("dims checked by caller");
    let deficit = (-eig_min(a)).max(-eig_min(&pt)).max(0.0);
    let d = a.dim() as f64;
    let lifted = a.combine(1.0, &HermMatrix::identity(a.dim()), deficit);
    let state = lifted.scale(1.0 / lifted.trace());
    state.combine(1.0 - extra, &HermMatrix::identity(a.dim()), extra / d)
}

fn search_once(map: &LinMapRep, h: &HermMatrix, dims: BipartiteDims, cfg: &PptSearchConfig, restart: usize) -> (f64, HermMatrix) {
    let d = dims.total();
    let mut rng = rng_from_seed(cfg.seed, restart as u64);
    let g = gaussian_vector(&mut rng, d * d);
    let start = CMatrix::from_fn(d, d, |i, j| g[i * d + j]);
    let start = crate::linalg::hermitian_part(&(&start * start.adjoint()));
    let mut a = project_trace_ppt(&start.scale(1.0 / start.trace()), dims, cfg.inner_iterations);

    let hn = h.scale(1.0 / h.frobenius_norm());
    let mut best = make_ppt(&a, dims, cfg.mixing_epsilon);
    let mut best_val = pairing(&best, map).expect("dims checked by caller");
    for it in 1..=cfg.max_iterations {
        a = project_trace_ppt(&a.combine(1.0, &hn, -cfg.step_size), dims, cfg.inner_iterations);
        if it % 50 == 0 || it == cfg.max_iterations {
            let cand = make_ppt(&a, dims, cfg.mixing_epsilon);
            let val = pairing(&cand, map).expect("dims checked by caller");
            if val < best_val {
                best_val = val;
                best = cand;
            }
        }
    }
    (best_val, best)
}

/// Projected linear descent of `A ↦ ⟨A, φ⟩` over trace-one PPT states.
///
/// Restarts run in parallel from seeded random states; the lowest pairing
/// wins, ties broken by restart index. A search that finds nothing is still
/// reported through the returned [`WitnessReport`].
pub fn find_detected_ppt_state(map: &LinMapRep, cfg: &PptSearchConfig) -> Result<(HermMatrix, WitnessReport)> {
    cfg.validate()?;
    let dims = map.state_dims();
    let h = dual_matrix(map);
    if h.frobenius_norm() == 0.0 {
        let state = HermMatrix::identity(dims.total()).scale(1.0 / dims.total() as f64);
        let report = detects(map, &state, dims)?;
        return Ok((state, report));
    }
    let (_, _, state) = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|k| {
            let (v, a) = search_once(map, &h, dims, cfg, k);
            (v, k, a)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
        .expect("at least one restart");
    let report = detects(map, &state, dims)?;
    Ok((state, report))
}

/// Whether a search result counts as a detection at the configured tolerance.
pub fn search_succeeded(report: &WitnessReport, cfg: &PptSearchConfig) -> bool {
    report.state_is_ppt && report.pairing_value < -cfg.tolerance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorReport {
    pub state_min_eig: f64,
    pub pt_min_eig: f64,
    pub is_interior: bool,
    pub mixing_weight: f64,
    pub pairing_value: f64,
}

fn mix_with_identity(a: &HermMatrix, eps: f64) -> HermMatrix {
    let d = a.dim();
    a.combine(1.0 - eps, &HermMatrix::identity(d), eps / d as f64)
}

/// Finds `A' = (1-ε)A + ε I/(nm)` with `A'` and `A'^τ` of full rank and
/// `⟨A', φ⟩ < 0`, starting from `eps` and bisecting.
pub fn interior_point_from_detection(a: &HermMatrix, map: &LinMapRep, eps: f64) -> Result<(HermMatrix, InteriorReport)> {
    let dims = map.state_dims();
    check_dims(a, dims)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter("mixing weight must lie in [0, 1)".into()));
    }
    if pairing(a, map)? >= 0.0 {
        return Err(Error::PreconditionViolated("the state is not detected by the map".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut e = eps;
    loop {
        let cand = mix_with_identity(a, e);
        let check = ppt_check(&cand, dims)?;
        let value = pairing(&cand, map)?;
        let interior = check.state_min_eig > INTERIOR_TOL && check.partial_transpose_min_eig > INTERIOR_TOL;
        if interior && value < 0.0 {
            let report = InteriorReport {
                state_min_eig: check.state_min_eig,
                pt_min_eig: check.partial_transpose_min_eig,
                is_interior: true,
                mixing_weight: e,
                pairing_value: value,
            };
            return Ok((cand, report));
        }
        if value >= 0.0 {
            hi = e;
        } else {
            lo = e;
        }
        if hi - lo < 1e-12 {
            return Err(Error::PreconditionViolated(
                "no mixing weight gives an interior point that is still detected".into(),
            ));
        }
        e = 0.5 * (lo + hi);
    }
}

/// The point `A₀ = λA + (1-λ)I/(nm)` where the pairing vanishes, with
/// `λ = p_I / (p_I - p_A)`.
pub fn boundary_zero_on_segment(a: &HermMatrix, map: &LinMapRep) -> Result<(HermMatrix, f64)> {
    let dims = map.state_dims();
    check_dims(a, dims)?;
    let d = dims.total();
    let mixed = HermMatrix::identity(d).scale(1.0 / d as f64);
    let pa = pairing(a, map)?;
    let pi = pairing(&mixed, map)?;
    if pa >= 0.0 {
        return Err(Error::PreconditionViolated("the state is not detected by the map".into()));
    }
    if pi <= 0.0 {
        return Err(Error::PreconditionViolated("the map is not positive on the maximally mixed state".into()));
    }
    let lambda = pi / (pi - pa);
    Ok((a.combine(lambda, &mixed, 1.0 - lambda), lambda))
}

/// Checks whether the product vectors span a `d_dim`-dimensional space while
/// their partial conjugates span an `e_dim`-dimensional one.
pub fn range_criterion_check(family: &[ProductVector], d_dim: usize, e_dim: usize) -> bool {
    if family.is_empty() {
        return d_dim == 0 && e_dim == 0;
    }
    let (d, e) = family_ranks(family);
    d == d_dim && e == e_dim
}

fn family_ranks(family: &[ProductVector]) -> (usize, usize) {
    let emb: Vec<_> = family.iter().map(|p| p.embedded().clone()).collect();
    let conj: Vec<_> = family.iter().map(|p| p.partial_conjugate().clone()).collect();
    (
        span_rank(&emb, DEFAULT_RANK_TOL).expect("nonempty family of equal length"),
        span_rank(&conj, DEFAULT_RANK_TOL).expect("nonempty family of equal length"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanningStatus {
    /// Both ranks are full, so the kill set and its partial conjugates span.
    Established,
    /// A finite subset that does not span proves nothing.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanningReport {
    pub embedded_rank: usize,
    pub conjugate_rank: usize,
    pub status: SpanningStatus,
}

pub fn spanning_conditions(map: &LinMapRep, family: &[ProductVector]) -> Result<SpanningReport> {
    if family.is_empty() {
        return Err(Error::EmptyInput("spanning check needs at least one product vector"));
    }
    for (index, pv) in family.iter().enumerate() {
        if !in_kill_set(map, pv, None)? {
            let value = crate::duality::kill_value(map, pv)?;
            return Err(Error::NotInKillSet { index, value });
        }
    }
    let (embedded_rank, conjugate_rank) = family_ranks(family);
    let full = map.dim_in() * map.dim_out();
    let status = if embedded_rank == full && conjugate_rank == full {
        SpanningStatus::Established
    } else {
        SpanningStatus::Inconclusive
    };
    Ok(SpanningReport { embedded_rank, conjugate_rank, status })
}

/// The unnormalized maximally entangled projector `Σ_ij e_ij ⊗ e_ij` on `C^d ⊗ C^d`.
pub fn maximally_entangled(d: usize) -> HermMatrix {
    let v = crate::linalg::CVector::from_fn(d * d, |r, _| if r / d == r % d { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    HermMatrix::projector(&v)
}
