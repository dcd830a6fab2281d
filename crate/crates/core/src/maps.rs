//! Hermiticity-preserving linear maps `M_m -> M_n` stored through their Choi
//! matrices, the elementary maps `X ↦ V*XV` and `X ↦ V*XᵗV`, and the
//! generalized Choi family `Φ[a,b,c]` on `M_3`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_min, eig_min_pair, hermitian_part, partial_transpose, BipartiteDims, CMatrix, CVector,
    HermMatrix, C64,
};
use crate::sampling::QuasiSphere;

/// Slack applied to the closed-form classification inequalities.
pub const CLASSIFY_SLACK: f64 = 1e-12;

/// Eigenvalue tolerance for the Choi-matrix based CP / coCP tests.
pub const CP_TOL: f64 = 1e-9;

/// A linear map `M_m -> M_n` represented by its Choi matrix
/// `W = Σ_ij e_ij ⊗ φ(e_ij)` (size `mn × mn`, blocks of size `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinMapRep {
    dim_in: usize,
    dim_out: usize,
    choi: HermMatrix,
}

impl LinMapRep {
    pub fn from_choi(choi: HermMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidParameter("map dimensions must be positive".into()));
        }
        if choi.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of a map M_{dim_in} -> M_{dim_out} must be {0}x{0}, got {1}x{1}",
                dim_in * dim_out,
                choi.dim()
            )));
        }
        Ok(LinMapRep { dim_in, dim_out, choi })
    }

    /// Input size `m`.
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    /// Output size `n`.
    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &HermMatrix {
        &self.choi
    }

    /// Splitting `C^n ⊗ C^m` of the states this map pairs with.
    pub fn state_dims(&self) -> BipartiteDims {
        BipartiteDims { n: self.dim_out, m: self.dim_in }
    }

    /// Splitting `C^m ⊗ C^n` of the Choi matrix.
    pub fn choi_dims(&self) -> BipartiteDims {
        BipartiteDims { n: self.dim_in, m: self.dim_out }
    }

    /// `φ(e_ij)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let n = self.dim_out;
        self.choi.view((i * n, j * n), (n, n)).into_owned()
    }

    /// `φ(X) = Σ_ij x_ij W_ij`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let (m, n) = (self.dim_in, self.dim_out);
        if x.nrows() != m || x.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "map input must be {m}x{m}, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = CMatrix::zeros(n, n);
        for i in 0..m {
            for j in 0..m {
                let xij = x[(i, j)];
                if xij == C64::default() {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        out[(k, l)] += xij * self.choi[(i * n + k, j * n + l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `φ(xx*)` for a vector `x ∈ C^m`.
    pub fn apply_rank_one(&self, x: &CVector) -> HermMatrix {
        let (m, n) = (self.dim_in, self.dim_out);
        assert_eq!(x.len(), m, "input vector has the wrong length");
        let mut out = CMatrix::zeros(n, n);
        for i in 0..m {
            for j in 0..m {
                let w = x[i] * x[j].conj();
                for k in 0..n {
                    for l in 0..n {
                        out[(k, l)] += w * self.choi[(i * n + k, j * n + l)];
                    }
                }
            }
        }
        hermitian_part(&out)
    }

    /// Smallest eigenvalue of `φ(xx*)`.
    pub fn min_output_eigenvalue(&self, x: &CVector) -> f64 {
        eig_min(&self.apply_rank_one(x))
    }

    pub fn scale(&self, s: f64) -> LinMapRep {
        LinMapRep { dim_in: self.dim_in, dim_out: self.dim_out, choi: self.choi.scale(s) }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &LinMapRep, b: f64) -> Result<LinMapRep> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch("cannot combine maps of different shapes".into()));
        }
        Ok(LinMapRep {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            choi: self.choi.combine(a, &other.choi, b),
        })
    }
}

fn matrix_unit(m: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(m, m);
    e[(i, j)] = c64(1.0, 0.0);
    e
}

/// Choi matrix of the linear map given as a function on `M_m`.
pub fn choi_of<F>(apply: F, m: usize, n: usize) -> Result<LinMapRep>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    let mut w = CMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            let out = apply(&matrix_unit(m, i, j));
            if out.nrows() != n || out.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "map output must be {n}x{n}, got {}x{}",
                    out.nrows(),
                    out.ncols()
                )));
            }
            w.view_mut((i * n, j * n), (n, n)).copy_from(&out);
        }
    }
    LinMapRep::from_choi(HermMatrix::new(w)?, m, n)
}

pub fn map_from_choi(w: &LinMapRep, x: &CMatrix) -> Result<CMatrix> {
    w.apply(x)
}

pub fn identity_map(d: usize) -> LinMapRep {
    choi_of(|x| x.clone(), d, d).expect("identity map is Hermiticity preserving")
}

pub fn transpose_map(d: usize) -> LinMapRep {
    choi_of(|x| x.transpose(), d, d).expect("transpose map is Hermiticity preserving")
}

/// `φ_V : X ↦ V* X V` for an `m×n` matrix `V`.
pub fn ad_map(v: &CMatrix) -> LinMapRep {
    let (m, n) = v.shape();
    let vd = v.adjoint();
    let w = kraus_choi(m, n, |x| &vd * x * v);
    LinMapRep::from_choi(w, m, n).expect("shape fixed by V")
}

/// `φ^V : X ↦ V* Xᵗ V` for an `m×n` matrix `V`.
pub fn conj_ad_map(v: &CMatrix) -> LinMapRep {
    let (m, n) = v.shape();
    let vd = v.adjoint();
    let w = kraus_choi(m, n, |x| &vd * x.transpose() * v);
    LinMapRep::from_choi(w, m, n).expect("shape fixed by V")
}

// V*XV is Hermitian in exact arithmetic for Hermitian X, but the Choi assembly
// sees rounding at the relative 1e-16 level.
fn kraus_choi<F: Fn(&CMatrix) -> CMatrix>(m: usize, n: usize, f: F) -> HermMatrix {
    let mut w = CMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..m {
            w.view_mut((i * n, j * n), (n, n)).copy_from(&f(&matrix_unit(m, i, j)));
        }
    }
    hermitian_part(&w)
}

/// Parameters of the generalized Choi map `Φ[a,b,c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ChoiParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a finite nonnegative number, got {v}"
                )));
            }
        }
        Ok(ChoiParams { a, b, c })
    }
}

/// Parameter `t > 0` of the exposed family `Φ(t) = Φ[a(t), b(t), c(t)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TParam {
    t: f64,
}

impl TParam {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidParameter(format!("t must be positive and finite, got {t}")));
        }
        Ok(TParam { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn denom(&self) -> f64 {
        1.0 - self.t + self.t * self.t
    }

    pub fn a(&self) -> f64 {
        (1.0 - self.t).powi(2) / self.denom()
    }

    pub fn b(&self) -> f64 {
        self.t * self.t / self.denom()
    }

    pub fn c(&self) -> f64 {
        1.0 / self.denom()
    }

    pub fn choi_params(&self) -> ChoiParams {
        ChoiParams { a: self.a(), b: self.b(), c: self.c() }
    }
}

/// `Φ[a,b,c](X)`: diagonal `(a x11 + b x22 + c x33, c x11 + a x22 + b x33,
/// b x11 + c x22 + a x33)`, off-diagonal entries `-x_ij`.
pub fn generalized_choi_apply(p: &ChoiParams, x: &CMatrix) -> CMatrix {
    let (a, b, c) = (p.a, p.b, p.c);
    let d = [x[(0, 0)], x[(1, 1)], x[(2, 2)]];
    CMatrix::from_fn(3, 3, |i, j| {
        if i != j {
            return -x[(i, j)];
        }
        match i {
            0 => d[0] * a + d[1] * b + d[2] * c,
            1 => d[0] * c + d[1] * a + d[2] * b,
            _ => d[0] * b + d[1] * c + d[2] * a,
        }
    })
}

pub fn generalized_choi(p: &ChoiParams) -> LinMapRep {
    choi_of(|x| generalized_choi_apply(p, x), 3, 3).expect("Φ[a,b,c] is Hermiticity preserving")
}

pub fn phi_t(t: &TParam) -> LinMapRep {
    generalized_choi(&t.choi_params())
}

/// Positivity-type flags of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapClass {
    pub positive: bool,
    pub decomposable: bool,
    pub completely_positive: bool,
    pub completely_copositive: bool,
}

/// Closed-form classification of `Φ[a,b,c]` with the inequality margins that
/// decided it. Margins that do not apply (e.g. the `bc` condition when `a > 1`)
/// are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiClassification {
    pub class: MapClass,
    /// `a + b + c - 2`
    pub sum_margin: f64,
    /// `bc - (1-a)^2`, for `a ≤ 1`
    pub positivity_margin: Option<f64>,
    /// `bc - ((2-a)/2)^2`, for `a ≤ 2`
    pub decomposability_margin: Option<f64>,
    /// `a - 2`
    pub cp_margin: f64,
    /// `bc - 1`
    pub cocp_margin: f64,
}

pub fn classify_choi_params(p: &ChoiParams) -> MapClass {
    classify_choi_params_detailed(p).class
}

pub fn classify_choi_params_detailed(p: &ChoiParams) -> ChoiClassification {
    let (a, b, c) = (p.a, p.b, p.c);
    let ok = |margin: f64| margin >= -CLASSIFY_SLACK;
    let bc = b * c;

    let sum_margin = a + b + c - 2.0;
    let positivity_margin = (a <= 1.0).then(|| bc - (1.0 - a).powi(2));
    let decomposability_margin = (a <= 2.0).then(|| bc - ((2.0 - a) / 2.0).powi(2));
    let cp_margin = a - 2.0;
    let cocp_margin = bc - 1.0;

    let positive = ok(sum_margin) && positivity_margin.is_none_or(ok);
    let completely_positive = ok(cp_margin);
    let completely_copositive = ok(cocp_margin);
    let decomposable =
        completely_positive || completely_copositive || (positive && decomposability_margin.is_none_or(ok));

    ChoiClassification {
        class: MapClass { positive, decomposable, completely_positive, completely_copositive },
        sum_margin,
        positivity_margin,
        decomposability_margin,
        cp_margin,
        cocp_margin,
    }
}

/// Completely positive ⟺ Choi matrix PSD.
pub fn is_cp(map: &LinMapRep) -> bool {
    eig_min(map.choi()) >= -CP_TOL
}

/// Completely copositive ⟺ partial transpose of the Choi matrix PSD.
pub fn is_ccp(map: &LinMapRep) -> bool {
    let pt = partial_transpose(map.choi(), map.choi_dims()).expect("Choi dims are consistent");
    eig_min(&pt) >= -CP_TOL
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityScanConfig {
    pub samples: usize,
    pub refine_steps: usize,
    /// How many of the best samples get the local descent.
    pub refine_top: usize,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for PositivityScanConfig {
    fn default() -> Self {
        PositivityScanConfig { samples: 512, refine_steps: 200, refine_top: 8, initial_step: 0.25, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityScan {
    /// Smallest `λ_min(φ(xx*))` found over unit `x`.
    pub min_value: f64,
    pub argmin: CVector,
    /// Eigenvector of `φ(xx*)` for `min_value`.
    pub witness_output: CVector,
}

pub fn numeric_positivity(map: &LinMapRep, samples: usize, refine_steps: usize) -> PositivityScan {
    numeric_positivity_with(
        map,
        &PositivityScanConfig { samples, refine_steps, ..PositivityScanConfig::default() },
    )
}

/// Minimizes `λ_min(φ(xx*))` over unit `x` by quasi-random sampling followed by
/// coordinatewise complex descent with step halving on the best samples.
pub fn numeric_positivity_with(map: &LinMapRep, cfg: &PositivityScanConfig) -> PositivityScan {
    let m = map.dim_in();
    let sphere = QuasiSphere::new(m, cfg.seed);
    let samples = cfg.samples.max(1);

    let mut scored: Vec<(f64, usize)> = (0..samples)
        .into_par_iter()
        .map(|k| (map.min_output_eigenvalue(&sphere.point(k)), k))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let top = cfg.refine_top.clamp(1, samples);
    let refined: Vec<(f64, usize, CVector)> = scored[..top]
        .par_iter()
        .map(|&(_, k)| {
            let (v, x) = descend(map, sphere.point(k), cfg.refine_steps, cfg.initial_step);
            (v, k, x)
        })
        .collect();

    let (min_value, _, argmin) = refined
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one sample");
    let (_, witness_output) = eig_min_pair(&map.apply_rank_one(&argmin));
    PositivityScan { min_value, argmin, witness_output }
}

fn descend(map: &LinMapRep, mut x: CVector, steps: usize, initial_step: f64) -> (f64, CVector) {
    let dirs = [c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0)];
    let mut best = map.min_output_eigenvalue(&x);
    let mut h = initial_step;
    for _ in 0..steps {
        let mut improved = false;
        for k in 0..x.len() {
            for d in dirs {
                let mut cand = x.clone();
                cand[k] += d * h;
                let norm = cand.norm();
                if norm == 0.0 {
                    continue;
                }
                cand /= c64(norm, 0.0);
                let v = map.min_output_eigenvalue(&cand);
                if v < best {
                    best = v;
                    x = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-12 {
                break;
            }
        }
    }
    (best, x)
}
