//! Kill-set product vectors of `Φ(t)`, the structured double-dual family with
//! its determinant polynomial, and a sampled certificate that `Φ(t)` spans an
//! exposed ray of the cone of positive maps.

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::duality::ProductVector;
use crate::error::{Error, Result};
use crate::linalg::{c64, eig_min, eig_min_pair, CMatrix, CVector, HermMatrix, C64};
use crate::maps::{generalized_choi, numeric_positivity, phi_t, ChoiParams, LinMapRep, TParam};
use crate::sampling::{gaussian_vector, rng_from_seed, QuasiSphere};

fn cvec(v: [C64; 3]) -> CVector {
    CVector::from_column_slice(&v)
}

fn re(x: f64) -> C64 {
    c64(x, 0.0)
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// The nine product vectors `ȳ_i ⊗ x_i` in the kill set of `Φ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalKillSet {
    pub t: f64,
    pub vectors: Vec<ProductVector>,
}

impl CanonicalKillSet {
    pub fn xs(&self) -> Vec<CVector> {
        self.vectors.iter().map(|p| p.x().clone()).collect()
    }

    pub fn ybars(&self) -> Vec<CVector> {
        self.vectors.iter().map(|p| p.ybar()).collect()
    }
}

pub fn canonical_kill_vectors(t: f64) -> Result<CanonicalKillSet> {
    let t = TParam::new(t)?.t();
    let s = t.sqrt();
    let (o, z, i) = (re(1.0), re(0.0), c64(0.0, 1.0));
    let pairs: [([C64; 3], [C64; 3]); 9] = [
        ([o, o, o], [o, o, o]),
        ([o, -o, o], [o, -o, o]),
        ([o, i, -i], [o, -i, i]),
        ([z, re(s), o], [z, re(s), re(t)]),
        ([z, re(s), i], [z, re(s), c64(0.0, -t)]),
        ([o, z, re(s)], [re(t), z, re(s)]),
        ([i, z, re(s)], [c64(0.0, -t), z, re(s)]),
        ([re(s), o, z], [re(s), re(t), z]),
        ([re(s), i, z], [re(s), c64(0.0, -t), z]),
    ];
    let vectors = pairs
        .into_iter()
        .map(|(x, yb)| ProductVector::from_ybar(cvec(yb), cvec(x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CanonicalKillSet { t, vectors })
}

/// One member of a kill-vector family of `Φ(t)`.
///
/// Case 1 uses both phases, `x = (1, e^{iθ₁}, e^{iθ₂})` and `ȳ = x̄`; cases
/// 2–4 use only `θ₁`, with the moduli pinned by `|a₂|² = t|a₃|²`,
/// `|a₃|² = t|a₁|²` and `|a₁|² = t|a₂|²` respectively.
pub fn kill_family_member(t: f64, case: u8, theta1: f64, theta2: f64) -> Result<ProductVector> {
    let t = TParam::new(t)?.t();
    let s = t.sqrt();
    let z = re(0.0);
    let e = phase(theta1);
    let (x, yb) = match case {
        1 => {
            let x = [re(1.0), e, phase(theta2)];
            (x, x.map(|v| v.conj()))
        }
        2 => ([z, re(s), e], [z, re(s), e.conj() * t]),
        3 => ([e, z, re(s)], [e.conj() * t, z, re(s)]),
        4 => ([re(s), e, z], [re(s), e.conj() * t, z]),
        _ => return Err(Error::InvalidParameter(format!("kill family case must be 1..=4, got {case}"))),
    };
    ProductVector::from_ybar(cvec(yb), cvec(x))
}

/// Samples a family on a uniform phase grid of `samples` points per free
/// phase (so `samples²` vectors for case 1).
pub fn sample_kill_family(t: f64, case: u8, samples: usize) -> Result<Vec<ProductVector>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one phase sample".into()));
    }
    let step = TAU / samples as f64;
    match case {
        1 => (0..samples * samples)
            .map(|k| kill_family_member(t, 1, step * (k / samples) as f64, step * (k % samples) as f64))
            .collect(),
        2..=4 => (0..samples).map(|k| kill_family_member(t, case, step * k as f64, 0.0)).collect(),
        _ => Err(Error::InvalidParameter(format!("kill family case must be 1..=4, got {case}"))),
    }
}

/// All four families at the given resolution.
pub fn sample_all_families(t: f64, samples: usize) -> Result<Vec<ProductVector>> {
    let mut out = Vec::new();
    for case in 1..=4 {
        out.extend(sample_kill_family(t, case, samples)?);
    }
    Ok(out)
}

/// The 2×2 matrices orthogonal to the restricted case-2 vectors (`A`) and to
/// their partial conjugates (`B`).
pub fn ab_submatrix_witnesses(t: f64) -> (CMatrix, CMatrix) {
    let a = CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]);
    let b = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(-t), re(0.0)]);
    (a, b)
}

/// Largest `|Tr(A* x'y'*)|` and `|Tr(B* x̄'y'*)|` over case-2 samples, where
/// `x'`, `y'` are the last two coordinates.
pub fn ab_orthogonality_defect(t: f64, samples: usize) -> Result<(f64, f64)> {
    let (a, b) = ab_submatrix_witnesses(t);
    let family = sample_kill_family(t, 2, samples)?;
    let mut worst = (0.0f64, 0.0f64);
    for pv in &family {
        let x = CVector::from_column_slice(&[pv.x()[1], pv.x()[2]]);
        let y = CVector::from_column_slice(&[pv.y()[1], pv.y()[2]]);
        let xy = &x * y.adjoint();
        let xbar_y = x.map(|v| v.conj()) * y.adjoint();
        let ia = (a.adjoint() * xy).trace().norm();
        let ib = (b.adjoint() * xbar_y).trace().norm();
        worst = (worst.0.max(ia), worst.1.max(ib));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleDualParams {
    pub t: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl DoubleDualParams {
    pub fn new(t: f64, alpha: f64, p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("t", t), ("alpha", alpha), ("p", p), ("q", q), ("r", r)] {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let s1 = p + q + r;
        let s2 = p * q + q * r + r * p;
        let s3 = p * q * r;
        Ok(DoubleDualParams {
            t,
            alpha,
            p,
            q,
            r,
            s1,
            s2,
            s3,
            t1: -(4.0 / 27.0) * s1.powi(3) + s1 * s2 / 3.0 + s3,
            t2: -(4.0 / 9.0) * s1.powi(3) + (4.0 / 3.0) * s1 * s2,
            t3: (4.0 / 9.0) * s3 - (4.0 / 27.0) * (p.powi(3) + q.powi(3) + r.powi(3)),
        })
    }

    /// `α` fixed by `3α = (1-t)² S₁`.
    pub fn with_case1_constraint(t: f64, p: f64, q: f64, r: f64) -> Result<Self> {
        Self::new(t, (1.0 - t).powi(2) * (p + q + r) / 3.0, p, q, r)
    }

    pub fn case1_defect(&self) -> f64 {
        (3.0 * self.alpha - (1.0 - self.t).powi(2) * self.s1).abs()
    }
}

/// The 9×9 Choi matrix with diagonal `(α,p,t²r,t²p,α,q,r,t²q,α)` and corner
/// entries `-α-tp`, `-α-tr`, `-α-tq`.
pub fn double_dual_candidate(params: &DoubleDualParams) -> HermMatrix {
    let DoubleDualParams { t, alpha, p, q, r, .. } = *params;
    let t2 = t * t;
    let diag = [alpha, p, t2 * r, t2 * p, alpha, q, r, t2 * q, alpha];
    let mut w = CMatrix::zeros(9, 9);
    for (k, d) in diag.iter().enumerate() {
        w[(k, k)] = re(*d);
    }
    for (i, j, v) in [(0, 4, -alpha - t * p), (0, 8, -alpha - t * r), (4, 8, -alpha - t * q)] {
        w[(i, j)] = re(v);
        w[(j, i)] = re(v);
    }
    HermMatrix::new(w).expect("real symmetric")
}

fn d_terms(pr: &DoubleDualParams) -> [f64; 8] {
    let DoubleDualParams { t, alpha: a, s1, s2, s3, .. } = *pr;
    [
        s3 * t.powi(6),
        a * s2 * t.powi(4),
        -2.0 * (s3 + a * s2) * t.powi(3),
        -a * s2 * t * t,
        -2.0 * a * (s2 + 2.0 * a * s1) * t,
        s3,
        a * s2,
        -4.0 * a.powi(3),
    ]
}

/// `D[α,p,q,r] = S₃t⁶ + αS₂t⁴ - 2(S₃+αS₂)t³ - αS₂t² - 2α(S₂+2αS₁)t + S₃ + αS₂ - 4α³`.
pub fn d_polynomial(params: &DoubleDualParams) -> f64 {
    d_terms(params).iter().sum()
}

/// Magnitude scale for tolerances on `D`: the sum of the absolute values of its terms.
pub fn d_scale(params: &DoubleDualParams) -> f64 {
    d_terms(params).iter().map(|v| v.abs()).sum()
}

/// Determinant of the image of `(1,1,1)ᵗ(1,1,1)`-type test matrix, assembled
/// entrywise; equal to [`d_polynomial`] as a polynomial.
pub fn det_oracle(params: &DoubleDualParams) -> f64 {
    let DoubleDualParams { t, alpha: a, p, q, r, .. } = *params;
    let t2 = t * t;
    Matrix3::new(
        a + t2 * p + r,
        -a - t * p,
        -a - t * r,
        -a - t * p,
        a + t2 * q + p,
        -a - t * q,
        -a - t * r,
        -a - t * q,
        a + t2 * r + q,
    )
    .determinant()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityChainReport {
    /// `T₃ - T₁ ≥ 0`
    pub first_slack: f64,
    /// `-2T₃ - (T₁ - T₂) ≥ 0`
    pub second_slack: f64,
    /// `(t-1)⁴(t²+t+1)T₃ - D ≥ 0`
    pub third_slack: f64,
    /// `-(t-1)⁴(t²+t+1)T₃ ≥ 0`
    pub bound_sign_slack: f64,
    pub d_value: f64,
    pub scale: f64,
    pub holds: bool,
    pub p_minus_q: f64,
    pub q_minus_r: f64,
}

/// Evaluates `T₁ ≤ T₃`, `T₁ - T₂ ≤ -2T₃` and `D ≤ (t-1)⁴(t²+t+1)T₃ ≤ 0`
/// with slack `-1e-10·scale`.
pub fn inequality_chain_check(params: &DoubleDualParams) -> Result<InequalityChainReport> {
    let scale = d_scale(params).max(params.s1.powi(3)).max(f64::MIN_POSITIVE);
    if params.case1_defect() > 1e-12 * (1.0 + params.s1) {
        return Err(Error::PreconditionViolated(format!(
            "3α = (1-t)²(p+q+r) violated by {:e}",
            params.case1_defect()
        )));
    }
    let t = params.t;
    let bound = (t - 1.0).powi(4) * (t * t + t + 1.0) * params.t3;
    let d_value = d_polynomial(params);
    let first_slack = params.t3 - params.t1;
    let second_slack = -2.0 * params.t3 - (params.t1 - params.t2);
    let third_slack = bound - d_value;
    let bound_sign_slack = -bound;
    let tol = -1e-10 * scale;
    let holds = [first_slack, second_slack, third_slack, bound_sign_slack].iter().all(|&s| s >= tol);
    Ok(InequalityChainReport {
        first_slack,
        second_slack,
        third_slack,
        bound_sign_slack,
        d_value,
        scale,
        holds,
        p_minus_q: (params.p - params.q).abs(),
        q_minus_r: (params.q - params.r).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureVerdict {
    ExposedRayConfirmed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposednessConfig {
    /// Phase grid per free phase; stabilization is checked against twice this.
    pub phase_samples: usize,
    /// Random null-space directions, each tried with both signs.
    pub budget: usize,
    pub seed: u64,
    /// Relative singular-value cutoff of the null-space computation.
    pub svd_cutoff: f64,
    /// Maps whose minimum output eigenvalue stays above `-positivity_tol` survive.
    pub positivity_tol: f64,
    pub positivity_samples: usize,
    pub refine_steps: usize,
}

impl Default for ExposednessConfig {
    fn default() -> Self {
        ExposednessConfig {
            phase_samples: 24,
            budget: 5000,
            seed: 0,
            svd_cutoff: 1e-8,
            positivity_tol: 1e-9,
            positivity_samples: 512,
            refine_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposednessCertificate {
    pub t: f64,
    pub phase_samples: usize,
    pub num_constraint_samples: usize,
    pub null_space_dim: usize,
    pub refined_num_constraint_samples: usize,
    pub refined_null_space_dim: usize,
    pub choi_residual: f64,
    pub candidates_tested: usize,
    pub positive_survivors: usize,
    pub ray_residual: f64,
    pub verdict: ExposureVerdict,
    pub seed: u64,
    pub method: String,
}

/// Number of real coordinates of an `d×d` Hermitian matrix.
fn herm_coords(d: usize) -> usize {
    d * d
}

/// Orthonormal real coordinates: diagonal, then `√2·Re`, `√2·Im` above it.
fn to_coords(w: &CMatrix) -> DVector<f64> {
    let d = w.nrows();
    let mut out = Vec::with_capacity(herm_coords(d));
    for a in 0..d {
        out.push(w[(a, a)].re);
    }
    for a in 0..d {
        for b in a + 1..d {
            out.push(2f64.sqrt() * w[(a, b)].re);
            out.push(2f64.sqrt() * w[(a, b)].im);
        }
    }
    DVector::from_vec(out)
}

fn from_coords(v: &DVector<f64>, d: usize) -> HermMatrix {
    let mut w = CMatrix::zeros(d, d);
    for a in 0..d {
        w[(a, a)] = re(v[a]);
    }
    let mut k = d;
    for a in 0..d {
        for b in a + 1..d {
            let z = c64(v[k], v[k + 1]) / 2f64.sqrt();
            w[(a, b)] = z;
            w[(b, a)] = z.conj();
            k += 2;
        }
    }
    HermMatrix::new(w).expect("Hermitian by construction")
}

/// Coefficient row of `W ↦ Tr(W ρ)` with `ρ = vv*` in the coordinates of [`to_coords`].
fn constraint_row(v: &CVector) -> Vec<f64> {
    let rho = v * v.adjoint();
    let d = v.len();
    let mut row = Vec::with_capacity(herm_coords(d));
    for a in 0..d {
        row.push(rho[(a, a)].re);
    }
    for a in 0..d {
        for b in a + 1..d {
            row.push(2f64.sqrt() * rho[(b, a)].re);
            row.push(-(2f64.sqrt()) * rho[(b, a)].im);
        }
    }
    row
}

/// `x̄ ⊗ y` in Choi ordering, so that `y*φ(xx*)y = v* W v`.
fn choi_vector(pv: &ProductVector) -> CVector {
    let x = pv.x();
    let y = pv.y();
    let (m, n) = (x.len(), y.len());
    CVector::from_fn(m * n, |r, _| x[r / n].conj() * y[r % n])
}

/// Orthonormal basis (columns) of `{w : Rw = 0}`.
fn null_space(rows: &[Vec<f64>], cutoff: f64) -> DMatrix<f64> {
    let cols = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    // reduce to a square triangular factor first; only its row space matters
    let r = if rows.len() > cols { a.qr().r() } else { a };
    let mut padded = DMatrix::zeros(cols, cols);
    padded.view_mut((0, 0), (r.nrows(), cols)).copy_from(&r);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..cols).filter(|&k| svd.singular_values[k] <= cutoff * top).collect();
    DMatrix::from_fn(cols, kept.len(), |r, c| v_t[(kept[c], r)])
}

fn constraint_rows(t: f64, samples: usize) -> Result<Vec<Vec<f64>>> {
    let family = sample_all_families(t, samples)?;
    Ok(family.par_iter().map(|pv| constraint_row(&choi_vector(pv))).collect())
}

/// Null-space basis of the kill-set constraints at the given phase resolution,
/// together with the number of constraints used.
pub fn kill_constraint_null_space(t: f64, samples: usize, cutoff: f64) -> Result<(DMatrix<f64>, usize)> {
    let rows = constraint_rows(t, samples)?;
    let count = rows.len();
    Ok((null_space(&rows, cutoff), count))
}

// y*φ(xx*)y = x* K x with K_ji = y* φ(e_ij) y
fn dual_form(map: &LinMapRep, y: &CVector) -> HermMatrix {
    let (m, n) = (map.dim_in(), map.dim_out());
    let w = map.choi();
    let mut k = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = re(0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += y[a].conj() * w[(i * n + a, j * n + b)] * y[b];
                }
            }
            k[(j, i)] = acc;
        }
    }
    crate::linalg::hermitian_part(&k)
}

/// Cheap necessary test for positivity: evaluates `λ_min(φ(xx*))` on the
/// given points, then descends by alternating minimization from them.
fn passes_screen(map: &LinMapRep, starts: &[CVector], tol: f64) -> bool {
    if starts.iter().any(|x| eig_min(&map.apply_rank_one(x)) < -tol) {
        return false;
    }
    for x0 in starts {
        let mut x = x0.clone();
        for _ in 0..30 {
            let (f, y) = eig_min_pair(&map.apply_rank_one(&x));
            if f < -tol {
                return false;
            }
            let (g, nx) = eig_min_pair(&dual_form(map, &y));
            if g < -tol {
                return false;
            }
            x = nx;
        }
    }
    true
}

fn screen_starts(t: f64, samples: usize, seed: u64) -> Result<Vec<CVector>> {
    let mut xs: Vec<CVector> = canonical_kill_vectors(t)?.xs();
    for case in 2..=4 {
        xs.extend(sample_kill_family(t, case, samples)?.iter().map(|p| p.x().clone()));
    }
    let coarse = samples.min(8);
    xs.extend(sample_kill_family(t, 1, coarse)?.iter().map(|p| p.x().clone()));
    let sphere = QuasiSphere::new(3, seed);
    xs.extend((0..64).map(|k| sphere.point(k)));
    Ok(xs.into_iter().map(|x| {
        let n = x.norm();
        x / re(n)
    }).collect())
}

/// Sampled certificate that `Φ(t)` spans an exposed ray: the Hermitian
/// matrices annihilated by the sampled kill-set projectors form a subspace
/// containing `Choi(Φ(t))`, and every element of it found positive lies on
/// that ray. A finite-sample corroboration, not a proof.
pub fn certify_exposedness(t: f64, cfg: &ExposednessConfig) -> Result<ExposednessCertificate> {
    let tp = TParam::new(t)?;
    if (t - 1.0).abs() < 1e-12 {
        return Err(Error::ExcludedParameter(
            "t = 1 is the completely copositive reduction map, which is not exposed".into(),
        ));
    }
    if cfg.phase_samples == 0 {
        return Err(Error::InvalidParameter("need at least one phase sample".into()));
    }
    let (basis, num_rows) = kill_constraint_null_space(t, cfg.phase_samples, cfg.svd_cutoff)?;
    let (fine_basis, fine_rows) = kill_constraint_null_space(t, 2 * cfg.phase_samples, cfg.svd_cutoff)?;
    if basis.ncols() != fine_basis.ncols() {
        return Err(Error::InsufficientSamples { coarse: basis.ncols(), fine: fine_basis.ncols() });
    }

    let target = phi_t(&tp);
    let w = to_coords(target.choi());
    let w_hat = &w / w.norm();
    let inside = &basis * (basis.transpose() * &w_hat);
    let choi_residual = (&w_hat - &inside).norm();

    // candidate directions: the ray, random null-space vectors and tilts of the ray
    let dim = basis.ncols();
    let mut candidates: Vec<DVector<f64>> = vec![w_hat.clone(), -w_hat.clone()];
    let mut rng = rng_from_seed(cfg.seed, 0xe4905ed);
    for k in 0..cfg.budget {
        let g = gaussian_vector(&mut rng, dim);
        let coeff = DVector::from_iterator(dim, g.iter().map(|z| z.re));
        let mut u = &basis * coeff;
        if k % 2 == 1 {
            // perturb the ray by an angle between 1e-2 and 1 radians
            u -= &w_hat * w_hat.dot(&u);
            let angle = 10f64.powf(-2.0 * rng.random::<f64>());
            u = &w_hat * angle.cos() + u.normalize() * angle.sin();
        }
        let u = u.normalize();
        candidates.push(-u.clone());
        candidates.push(u);
    }

    let starts = screen_starts(t, cfg.phase_samples, cfg.seed)?;
    let survivors: Vec<f64> = candidates
        .par_iter()
        .filter_map(|c| {
            let choi = from_coords(c, 9);
            let map = LinMapRep::from_choi(choi, 3, 3).expect("9x9 Choi matrix");
            if !passes_screen(&map, &starts, cfg.positivity_tol) {
                return None;
            }
            let scan = numeric_positivity(&map, cfg.positivity_samples, cfg.refine_steps);
            (scan.min_value >= -cfg.positivity_tol).then(|| 1.0 - c.dot(&w_hat).abs().min(1.0))
        })
        .collect();

    let ray_residual = survivors.iter().copied().fold(0.0, f64::max);
    let confirmed = !survivors.is_empty() && ray_residual <= 1e-8 && choi_residual <= 1e-10;
    Ok(ExposednessCertificate {
        t,
        phase_samples: cfg.phase_samples,
        num_constraint_samples: num_rows,
        null_space_dim: basis.ncols(),
        refined_num_constraint_samples: fine_rows,
        refined_null_space_dim: fine_basis.ncols(),
        choi_residual,
        candidates_tested: candidates.len(),
        positive_survivors: survivors.len(),
        ray_residual: if survivors.is_empty() { 1.0 } else { ray_residual },
        verdict: if confirmed { ExposureVerdict::ExposedRayConfirmed } else { ExposureVerdict::Inconclusive },
        seed: cfg.seed,
        method: "finite-sample corroboration: sampled kill-set constraints and numerical positivity scan".into(),
    })
}

/// Default tolerance on `a + b + c = 2` in [`decompose_on_plane`].
pub const PLANE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneDecomposition {
    /// Weight of `Φ(t)`; the completely positive part `Φ[2,0,0]` gets `1 - weight`.
    pub weight: f64,
    pub t: f64,
    pub cp_part: ChoiParams,
    pub exposed_part: ChoiParams,
    pub weight_in_unit_interval: bool,
}

/// Writes `Φ[a,b,c]` with `a+b+c = 2` as `(1-α)Φ[2,0,0] + αΦ(t)`, where
/// `t = √(b/c)` and `α = c(1-t+t²)`.
pub fn decompose_on_plane(p: &ChoiParams, tol: f64) -> Result<PlaneDecomposition> {
    let sum = p.a + p.b + p.c;
    if (sum - 2.0).abs() > tol {
        return Err(Error::PreconditionViolated(format!("a + b + c = {sum}, expected 2")));
    }
    if p.c <= 0.0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    if p.b <= 0.0 {
        return Err(Error::InvalidParameter("b must be positive".into()));
    }
    let t = (p.b / p.c).sqrt();
    let weight = p.c * (1.0 - t + t * t);
    Ok(PlaneDecomposition {
        weight,
        t,
        cp_part: ChoiParams::new(2.0, 0.0, 0.0)?,
        exposed_part: TParam::new(t)?.choi_params(),
        weight_in_unit_interval: (0.0..=1.0).contains(&weight),
    })
}

impl PlaneDecomposition {
    /// `(1-α)·Choi(Φ[2,0,0]) + α·Choi(Φ(t))`.
    pub fn recombined_choi(&self) -> HermMatrix {
        let cp = generalized_choi(&self.cp_part);
        let ex = generalized_choi(&self.exposed_part);
        cp.choi().combine(1.0 - self.weight, ex.choi(), self.weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{in_kill_set, kill_value};
    use crate::linalg::{span_rank, DEFAULT_RANK_TOL};

    fn close(a: &CVector, b: &[C64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-15)
    }

    #[test]
    fn canonical_table_entries() {
        let k = canonical_kill_vectors(1.0).unwrap();
        assert!(close(&k.xs()[3], &[re(0.0), re(1.0), re(1.0)]));
        assert!(close(&k.ybars()[3], &[re(0.0), re(1.0), re(1.0)]));
        let k = canonical_kill_vectors(0.25).unwrap();
        assert!(close(&k.xs()[7], &[re(0.5), re(1.0), re(0.0)]));
        assert!(close(&k.ybars()[7], &[re(0.5), re(0.25), re(0.0)]));
        assert!(canonical_kill_vectors(0.0).is_err());
        assert!(canonical_kill_vectors(-1.0).is_err());
    }

    #[test]
    fn canonical_vectors_are_killed_and_span() {
        for t in [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 2.0, 5.0] {
            let map = phi_t(&TParam::new(t).unwrap());
            let k = canonical_kill_vectors(t).unwrap();
            for pv in &k.vectors {
                assert!(kill_value(&map, pv).unwrap().abs() <= 1e-10, "t={t}");
                assert!(in_kill_set(&map, pv, None).unwrap());
            }
            let emb: Vec<_> = k.vectors.iter().map(|p| p.embedded().clone()).collect();
            let conj: Vec<_> = k.vectors.iter().map(|p| p.partial_conjugate().clone()).collect();
            assert_eq!(span_rank(&emb, DEFAULT_RANK_TOL).unwrap(), 9);
            assert_eq!(span_rank(&conj, DEFAULT_RANK_TOL).unwrap(), 9);
        }
        let k = canonical_kill_vectors(1.0).unwrap();
        let emb: Vec<_> = k.vectors.iter().map(|p| p.embedded().clone()).collect();
        let conj: Vec<_> = k.vectors.iter().map(|p| p.partial_conjugate().clone()).collect();
        let r = span_rank(&emb, DEFAULT_RANK_TOL).unwrap().min(span_rank(&conj, DEFAULT_RANK_TOL).unwrap());
        assert!(r < 9);
    }

    #[test]
    fn family_templates_reproduce_table() {
        let pv = kill_family_member(0.25, 2, 0.0, 0.0).unwrap();
        assert!(close(pv.x(), &[re(0.0), re(0.5), re(1.0)]));
        assert!(close(&pv.ybar(), &[re(0.0), re(0.5), re(0.25)]));
        let pv = kill_family_member(0.5, 1, 0.0, 0.0).unwrap();
        assert!(close(pv.x(), &[re(1.0), re(1.0), re(1.0)]));
        let pv = kill_family_member(0.5, 1, std::f64::consts::PI, 0.0).unwrap();
        let expect = [re(1.0), re(-1.0), re(1.0)];
        assert!(pv.x().iter().zip(&expect).all(|(a, b)| (a - b).norm() < 1e-15));
        assert!(kill_family_member(0.5, 5, 0.0, 0.0).is_err());
        assert!(sample_kill_family(0.5, 0, 4).is_err());
    }

    #[test]
    fn families_are_killed() {
        for t in [0.1, 0.5, 2.0] {
            let map = phi_t(&TParam::new(t).unwrap());
            for case in 1..=4 {
                let fam = sample_kill_family(t, case, 8).unwrap();
                assert_eq!(fam.len(), if case == 1 { 64 } else { 8 });
                for pv in &fam {
                    assert!(kill_value(&map, pv).unwrap().abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn ab_witnesses() {
        let (a, b) = ab_submatrix_witnesses(1.0);
        assert_eq!(b, CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(-1.0), re(0.0)]));
        assert_eq!(a, ab_submatrix_witnesses(3.0).0);
        let (da, db) = ab_orthogonality_defect(0.5, 32).unwrap();
        assert!(da <= 1e-10 && db <= 1e-10);
    }

    #[test]
    fn double_dual_on_the_ray() {
        for t in [0.2, 0.5, 3.0] {
            let p0 = 1.7;
            let pr = DoubleDualParams::new(t, (1.0 - t).powi(2) * p0, p0, p0, p0).unwrap();
            let w = double_dual_candidate(&pr);
            let target = phi_t(&TParam::new(t).unwrap()).choi().scale((1.0 - t + t * t) * p0);
            assert!((w.as_matrix() - target.as_matrix()).norm() < 1e-12);
        }
        let zero = double_dual_candidate(&DoubleDualParams::new(0.5, 0.0, 0.0, 0.0, 0.0).unwrap());
        assert_eq!(zero.frobenius_norm(), 0.0);
        assert!(DoubleDualParams::new(0.5, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn double_dual_map_image() {
        let (t, a, p, q, r) = (0.4, 0.3, 1.1, 0.7, 2.0);
        let pr = DoubleDualParams::new(t, a, p, q, r).unwrap();
        let map = LinMapRep::from_choi(double_dual_candidate(&pr), 3, 3).unwrap();
        let x = CMatrix::from_fn(3, 3, |i, j| c64((i * 3 + j) as f64 + 1.0, i as f64 - j as f64));
        let img = map.apply(&x).unwrap();
        let t2 = t * t;
        assert!((img[(0, 0)] - (x[(0, 0)] * a + x[(1, 1)] * (t2 * p) + x[(2, 2)] * r)).norm() < 1e-12);
        assert!((img[(1, 1)] - (x[(0, 0)] * p + x[(1, 1)] * a + x[(2, 2)] * (t2 * q))).norm() < 1e-12);
        assert!((img[(2, 2)] - (x[(0, 0)] * (t2 * r) + x[(1, 1)] * q + x[(2, 2)] * a)).norm() < 1e-12);
        assert!((img[(0, 1)] - x[(0, 1)] * (-a - t * p)).norm() < 1e-12);
        assert!((img[(1, 2)] - x[(1, 2)] * (-a - t * q)).norm() < 1e-12);
        assert!((img[(0, 2)] - x[(0, 2)] * (-a - t * r)).norm() < 1e-12);
    }

    #[test]
    fn d_polynomial_examples() {
        let pr = DoubleDualParams::new(0.5, 0.25, 1.0, 1.0, 1.0).unwrap();
        assert!(d_polynomial(&pr).abs() < 1e-10);
        let pr = DoubleDualParams::new(0.5, 0.25 * 2.0, 1.0, 2.0, 3.0).unwrap();
        assert!(d_polynomial(&pr) < 0.0);
        assert!((d_polynomial(&pr) - det_oracle(&pr)).abs() < 1e-12);
        let pr = DoubleDualParams::new(0.5, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(d_polynomial(&pr), 0.0);
        let pr = DoubleDualParams::new(0.0, 0.0, 1.5, 2.0, 0.5).unwrap();
        assert!((det_oracle(&pr) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn chain_examples() {
        let pr = DoubleDualParams::with_case1_constraint(0.5, 1.0, 2.0, 3.0).unwrap();
        let rep = inequality_chain_check(&pr).unwrap();
        assert!(rep.holds && rep.d_value < 0.0);
        let pr = DoubleDualParams::with_case1_constraint(0.5, 2.0, 2.0, 2.0).unwrap();
        let rep = inequality_chain_check(&pr).unwrap();
        for s in [rep.first_slack, rep.second_slack, rep.third_slack, rep.bound_sign_slack] {
            assert!(s.abs() <= 1e-10 * rep.scale);
        }
        let pr = DoubleDualParams::with_case1_constraint(0.5, 0.0, 0.0, 0.0).unwrap();
        assert!(inequality_chain_check(&pr).unwrap().holds);
        let pr = DoubleDualParams::new(0.5, 5.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(inequality_chain_check(&pr), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn coordinates_round_trip_and_rows() {
        let map = phi_t(&TParam::new(0.5).unwrap());
        let w = to_coords(map.choi());
        assert!((w.norm() - map.choi().frobenius_norm()).abs() < 1e-12);
        let back = from_coords(&w, 9);
        assert!((back.as_matrix() - map.choi().as_matrix()).norm() < 1e-14);
        let pv = kill_family_member(0.5, 3, 0.7, 0.0).unwrap();
        let row = DVector::from_vec(constraint_row(&choi_vector(&pv)));
        assert!(row.dot(&w).abs() < 1e-12);
        let g = generalized_choi(&ChoiParams::new(0.3, 1.0, 2.0).unwrap());
        let direct = kill_value(&g, &pv).unwrap();
        assert!((row.dot(&to_coords(g.choi())) - direct).abs() < 1e-12);
    }

    #[test]
    fn certificate_rejects_excluded_parameters() {
        let cfg = ExposednessConfig::default();
        assert!(matches!(certify_exposedness(1.0, &cfg), Err(Error::ExcludedParameter(_))));
        assert!(certify_exposedness(0.0, &cfg).is_err());
    }

    #[test]
    fn small_certificate_at_half() {
        let cfg = ExposednessConfig { budget: 40, positivity_samples: 64, refine_steps: 40, ..ExposednessConfig::default() };
        let cert = certify_exposedness(0.5, &cfg).unwrap();
        assert_eq!(cert.null_space_dim, cert.refined_null_space_dim);
        assert!(cert.choi_residual <= 1e-10);
        assert_eq!(cert.verdict, ExposureVerdict::ExposedRayConfirmed);
    }

    #[test]
    fn plane_decomposition_examples() {
        let d = decompose_on_plane(&ChoiParams::new(1.0 / 3.0, 1.0 / 3.0, 4.0 / 3.0).unwrap(), PLANE_TOL).unwrap();
        assert!((d.t - 0.5).abs() < 1e-12 && (d.weight - 1.0).abs() < 1e-12);
        let d = decompose_on_plane(&ChoiParams::new(0.0, 1.0, 1.0).unwrap(), PLANE_TOL).unwrap();
        assert!((d.t - 1.0).abs() < 1e-15 && (d.weight - 1.0).abs() < 1e-15);
        let p = ChoiParams::new(0.4, 0.5, 1.1).unwrap();
        let d = decompose_on_plane(&p, PLANE_TOL).unwrap();
        let direct = generalized_choi(&p);
        assert!((d.recombined_choi().as_matrix() - direct.choi().as_matrix()).norm() < 1e-12);
        assert!(decompose_on_plane(&ChoiParams::new(1.0, 1.0, 1.0).unwrap(), PLANE_TOL).is_err());
        assert!(decompose_on_plane(&ChoiParams::new(1.0, 1.0, 0.0).unwrap(), PLANE_TOL).is_err());
    }
}
