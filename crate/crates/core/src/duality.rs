//! The bilinear pairing between `M_n ⊗ M_m` and maps `M_m -> M_n`,
//! product vectors, the kill set `P_φ` and witness verdicts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, eig_min, eig_min_pair, kron_vec, BipartiteDims, CMatrix, CVector, HermMatrix};
use crate::maps::LinMapRep;
use crate::ppt;
use crate::sampling::QuasiSphere;

/// A product vector `ȳ ⊗ x ∈ C^n ⊗ C^m` built from `y ∈ C^n`, `x ∈ C^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    y: CVector,
    x: CVector,
    embedded: CVector,
    partial_conjugate: CVector,
}

impl ProductVector {
    pub fn new(y: CVector, x: CVector) -> Result<Self> {
        if y.is_empty() || x.is_empty() {
            return Err(Error::EmptyInput("product vector factors must be nonempty"));
        }
        if y.norm() == 0.0 || x.norm() == 0.0 {
            return Err(Error::InvalidParameter("product vector factors must be nonzero".into()));
        }
        let ybar = y.map(|z| z.conj());
        let embedded = kron_vec(&ybar, &x);
        let partial_conjugate = kron_vec(&ybar, &x.map(|z| z.conj()));
        Ok(ProductVector { y, x, embedded, partial_conjugate })
    }

    /// Builds from the conjugated first factor `ȳ`, the form in which kill
    /// vectors are usually tabulated.
    pub fn from_ybar(ybar: CVector, x: CVector) -> Result<Self> {
        Self::new(ybar.map(|z| z.conj()), x)
    }

    pub fn y(&self) -> &CVector {
        &self.y
    }

    pub fn x(&self) -> &CVector {
        &self.x
    }

    pub fn ybar(&self) -> CVector {
        self.y.map(|z| z.conj())
    }

    /// `ȳ ⊗ x`
    pub fn embedded(&self) -> &CVector {
        &self.embedded
    }

    /// `ȳ ⊗ x̄`
    pub fn partial_conjugate(&self) -> &CVector {
        &self.partial_conjugate
    }

    pub fn dims(&self) -> BipartiteDims {
        BipartiteDims { n: self.y.len(), m: self.x.len() }
    }

    /// `(ȳ⊗x)(ȳ⊗x)*`
    pub fn projector(&self) -> HermMatrix {
        HermMatrix::projector(&self.embedded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DetectedEntangled,
    DetectedPptEntangled,
    NotDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub pairing_value: f64,
    pub state_is_ppt: bool,
    pub state_min_eig: f64,
    pub partial_transpose_min_eig: f64,
    pub verdict: Verdict,
}

fn check_state_dims(a: &HermMatrix, map: &LinMapRep) -> Result<()> {
    let d = map.dim_in() * map.dim_out();
    if a.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "a map M_{} -> M_{} pairs with {d}x{d} operators, got {}x{}",
            map.dim_in(),
            map.dim_out(),
            a.dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// `⟨A, φ⟩ = Σ_kl [φ(B_kl)]_kl` for `A = Σ_kl e_kl ⊗ B_kl`, with `e_kl ∈ M_n`
/// and `B_kl ∈ M_m`.
pub fn pairing(a: &HermMatrix, map: &LinMapRep) -> Result<f64> {
    check_state_dims(a, map)?;
    let (m, n) = (map.dim_in(), map.dim_out());
    let w = map.choi();
    let mut acc = c64(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            for i in 0..m {
                for j in 0..m {
                    acc += a[(k * m + i, l * m + j)] * w[(i * n + k, j * n + l)];
                }
            }
        }
    }
    let scale = 1.0f64.max(a.frobenius_norm() * w.frobenius_norm());
    if acc.im.abs() > 1e-10 * scale {
        return Err(Error::ImaginaryResidue { value: acc.im });
    }
    Ok(acc.re)
}

/// The Hermitian `H` on `C^n ⊗ C^m` with `⟨A, φ⟩ = Tr(H A)`; it is also the
/// Frobenius gradient of the pairing in `A`.
pub fn dual_matrix(map: &LinMapRep) -> HermMatrix {
    let (m, n) = (map.dim_in(), map.dim_out());
    let w = map.choi();
    let h = CMatrix::from_fn(n * m, n * m, |r, c| {
        // H[(l,j),(k,i)] = W[(i,k),(j,l)]
        let (l, j) = (r / m, r % m);
        let (k, i) = (c / m, c % m);
        w[(i * n + k, j * n + l)]
    });
    HermMatrix::new(h).expect("the dual of a Hermitian Choi matrix is Hermitian")
}

/// `(φ(xx*) y | y)`; zero exactly on the kill set of a positive map.
pub fn kill_value(map: &LinMapRep, pv: &ProductVector) -> Result<f64> {
    if pv.x.len() != map.dim_in() || pv.y.len() != map.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "product vector in C^{} ⊗ C^{} does not match a map M_{} -> M_{}",
            pv.y.len(),
            pv.x.len(),
            map.dim_in(),
            map.dim_out()
        )));
    }
    let image = map.apply_rank_one(&pv.x);
    Ok((pv.y.adjoint() * image.as_matrix() * &pv.y)[(0, 0)].re)
}

/// Default kill-set tolerance, `1e-9 · ‖W_φ‖`.
pub fn default_kill_tol(map: &LinMapRep) -> f64 {
    1e-9 * map.choi().frobenius_norm()
}

/// Whether `|kill_value|`, normalized by `‖x‖²‖y‖²`, is below `tol`
/// (default [`default_kill_tol`]).
pub fn in_kill_set(map: &LinMapRep, pv: &ProductVector, tol: Option<f64>) -> Result<bool> {
    let tol = tol.unwrap_or_else(|| default_kill_tol(map));
    let norm = pv.x.norm_squared() * pv.y.norm_squared();
    Ok(kill_value(map, pv)?.abs() / norm < tol)
}

/// Pairing below `-1e-10 · ‖W_φ‖ · ‖A‖` counts as detection.
pub fn detection_threshold(map: &LinMapRep, a: &HermMatrix) -> f64 {
    -1e-10 * map.choi().frobenius_norm() * a.frobenius_norm()
}

pub fn detects(map: &LinMapRep, a: &HermMatrix, dims: BipartiteDims) -> Result<WitnessReport> {
    if dims != map.state_dims() {
        return Err(Error::DimensionMismatch(format!(
            "state split as C^{} ⊗ C^{} but the map needs C^{} ⊗ C^{}",
            dims.n,
            dims.m,
            map.dim_out(),
            map.dim_in()
        )));
    }
    check_state_dims(a, map)?;
    let state_min_eig = eig_min(a);
    if state_min_eig < -1e-10 * a.frobenius_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite { min_eig: state_min_eig });
    }
    let pairing_value = pairing(a, map)?;
    let check = ppt::ppt_check(a, dims)?;
    let detected = pairing_value < detection_threshold(map, a);
    let verdict = match (detected, check.is_ppt) {
        (true, true) => Verdict::DetectedPptEntangled,
        (true, false) => Verdict::DetectedEntangled,
        (false, _) => Verdict::NotDetected,
    };
    Ok(WitnessReport {
        pairing_value,
        state_is_ppt: check.is_ppt,
        state_min_eig,
        partial_transpose_min_eig: check.partial_transpose_min_eig,
        verdict,
    })
}

/// Settings for [`enumerate_kill_vectors`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillSearchConfig {
    pub starts: usize,
    pub max_iterations: usize,
    /// Minima with `λ_min(φ(xx*))` at or below this are kept.
    pub accept_tol: f64,
    /// Components of `x` below `snap_tol · max|x_i|` are tried at zero.
    pub snap_tol: f64,
    /// Two vectors with normalized overlap at or above this are duplicates.
    pub dedup_overlap: f64,
    pub seed: u64,
}

impl Default for KillSearchConfig {
    fn default() -> Self {
        KillSearchConfig {
            starts: 4096,
            max_iterations: 400,
            accept_tol: 1e-12,
            snap_tol: 0.3,
            dedup_overlap: 1.0 - 1e-8,
            seed: 0,
        }
    }
}

// x* K(y) x = y* φ(xx*) y
fn dual_form(map: &LinMapRep, y: &CVector) -> HermMatrix {
    let (m, n) = (map.dim_in(), map.dim_out());
    let w = map.choi();
    let mut k = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = c64(0.0, 0.0);
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

/// Alternating exact minimization over `y` then `x`, optionally with `x`
/// confined to a coordinate support.
fn alternate(map: &LinMapRep, mut x: CVector, iterations: usize, support: Option<&[usize]>) -> (f64, CVector, CVector) {
    let mut prev = f64::INFINITY;
    for _ in 0..iterations {
        let (f, y) = eig_min_pair(&map.apply_rank_one(&x));
        if f <= 0.0 || (prev - f).abs() <= 1e-32 {
            break;
        }
        prev = f;
        let k = dual_form(map, &y);
        x = match support {
            None => eig_min_pair(&k).1,
            Some(idx) => {
                let sub = CMatrix::from_fn(idx.len(), idx.len(), |r, c| k[(idx[r], idx[c])]);
                let (_, v) = eig_min_pair(&HermMatrix::new(sub).expect("principal submatrix"));
                let mut full = CVector::zeros(x.len());
                for (r, &i) in idx.iter().enumerate() {
                    full[i] = v[r];
                }
                full
            }
        };
    }
    let (f, y) = eig_min_pair(&map.apply_rank_one(&x));
    (f, x, y)
}

fn refine_start(map: &LinMapRep, x0: CVector, cfg: &KillSearchConfig) -> Option<ProductVector> {
    let (f, x, y) = alternate(map, x0, cfg.max_iterations, None);

    // degenerate zeros on coordinate subspaces converge slowly; try them exactly
    let top = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].norm().total_cmp(&x[j].norm()).then(i.cmp(&j)));
    let mut best = (f, x.clone(), y);
    for drop in 1..x.len() {
        if x[order[drop - 1]].norm() >= cfg.snap_tol * top {
            break;
        }
        let mut support: Vec<usize> = order[drop..].to_vec();
        support.sort_unstable();
        let mut xs = CVector::zeros(x.len());
        for &i in &support {
            xs[i] = x[i];
        }
        xs /= c64(xs.norm(), 0.0);
        let (fs, xs, ys) = alternate(map, xs, 64, Some(&support));
        if fs <= best.0 {
            best = (fs, xs, ys);
        }
    }
    let (f, x, y) = best;
    (f <= cfg.accept_tol).then(|| ProductVector::new(y, x).expect("unit factors"))
}

fn overlap(u: &CVector, v: &CVector) -> f64 {
    u.dotc(v).norm() / (u.norm() * v.norm())
}

/// Numerically enumerates product vectors of `P_φ` by minimizing
/// `y* φ(xx*) y` from quasi-random starts and deduplicating the zeros found.
pub fn enumerate_kill_vectors(map: &LinMapRep, cfg: &KillSearchConfig) -> Vec<ProductVector> {
    let sphere = QuasiSphere::new(map.dim_in(), cfg.seed);
    let found: Vec<ProductVector> = (0..cfg.starts)
        .into_par_iter()
        .filter_map(|k| refine_start(map, sphere.point(k), cfg))
        .collect();
    let mut unique: Vec<ProductVector> = Vec::new();
    for pv in found {
        if unique.iter().all(|u| overlap(u.embedded(), pv.embedded()) < cfg.dedup_overlap) {
            unique.push(pv);
        }
    }
    unique
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_transpose, C64};
    use crate::maps::{ad_map, conj_ad_map, generalized_choi, identity_map, phi_t, transpose_map, ChoiParams, TParam};
    use crate::sampling::{gaussian_vector, rng_from_seed};

    fn cv(v: &[C64]) -> CVector {
        CVector::from_column_slice(v)
    }

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn maximally_entangled(d: usize) -> HermMatrix {
        let v = CVector::from_fn(d * d, |r, _| if r / d == r % d { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        HermMatrix::projector(&v)
    }

    #[test]
    fn pairing_with_identity_state() {
        for (a, b, c) in [(1.0, 0.0, 1.0), (0.3, 2.0, 0.7)] {
            let map = generalized_choi(&ChoiParams::new(a, b, c).unwrap());
            let v = pairing(&HermMatrix::identity(9), &map).unwrap();
            assert!((v - 3.0 * (a + b + c)).abs() < 1e-12);
        }
        let map = phi_t(&TParam::new(0.5).unwrap());
        assert!((pairing(&HermMatrix::identity(9), &map).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_matches_dual_matrix_trace() {
        let map = generalized_choi(&ChoiParams::new(0.3, 2.0, 0.7).unwrap());
        let mut rng = rng_from_seed(5, 0);
        let g = gaussian_vector(&mut rng, 81);
        let a = crate::linalg::hermitian_part(&CMatrix::from_fn(9, 9, |i, j| g[i * 9 + j]));
        let h = dual_matrix(&map);
        let tr = (h.as_matrix() * a.as_matrix()).trace();
        assert!((tr.re - pairing(&a, &map).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pairing_dimension_mismatch() {
        let map = identity_map(3);
        assert!(matches!(pairing(&HermMatrix::identity(4), &map), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn pairing_of_product_projector_and_conj_ad_map() {
        let mut rng = rng_from_seed(9, 0);
        let v = CMatrix::from_fn(3, 3, |_, _| c64(0.0, 0.0)) + {
            let g = gaussian_vector(&mut rng, 9);
            CMatrix::from_fn(3, 3, |i, j| g[i * 3 + j])
        };
        let pv = ProductVector::new(gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3)).unwrap();
        let map = conj_ad_map(&v);
        let lhs = pairing(&pv.projector(), &map).unwrap();
        // |(V | ȳ⊗x̄)|² with V read as a vector through the identification
        let vv = crate::linalg::identify(&v);
        let rhs = vv.dotc(pv.partial_conjugate()).norm_sqr();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));

        let map = ad_map(&v);
        let lhs = pairing(&pv.projector(), &map).unwrap();
        let rhs = vv.dotc(pv.embedded()).norm_sqr();
        assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn canonical_kill_examples_at_half() {
        let map = phi_t(&TParam::new(0.5).unwrap());
        let one = cv(&[r(1.0), r(1.0), r(1.0)]);
        let pv = ProductVector::from_ybar(one.clone(), one).unwrap();
        assert!(kill_value(&map, &pv).unwrap().abs() < 1e-10);

        let s = 0.5f64.sqrt();
        let pv = ProductVector::from_ybar(cv(&[r(0.0), r(s), r(0.5)]), cv(&[r(0.0), r(s), r(1.0)])).unwrap();
        assert!(kill_value(&map, &pv).unwrap().abs() < 1e-10);
        assert!(in_kill_set(&map, &pv, None).unwrap());
    }

    #[test]
    fn kill_values_of_simple_maps() {
        let e1 = cv(&[r(1.0), r(0.0), r(0.0)]);
        let pv = ProductVector::new(e1.clone(), e1).unwrap();
        assert!((kill_value(&identity_map(3), &pv).unwrap() - 1.0).abs() < 1e-15);
        assert!(!in_kill_set(&transpose_map(3), &pv, None).unwrap());
    }

    #[test]
    fn random_product_vector_is_not_killed() {
        let map = phi_t(&TParam::new(0.5).unwrap());
        let mut rng = rng_from_seed(17, 0);
        for _ in 0..10 {
            let pv = ProductVector::new(gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3)).unwrap();
            assert!(!in_kill_set(&map, &pv, None).unwrap());
        }
    }

    #[test]
    fn product_vector_rejects_zero_factor() {
        let z = CVector::zeros(3);
        let e = cv(&[r(1.0), r(0.0), r(0.0)]);
        assert!(ProductVector::new(z, e).is_err());
    }

    #[test]
    fn detect_examples() {
        let dims = BipartiteDims::new(3, 3).unwrap();
        let map = phi_t(&TParam::new(0.5).unwrap());
        let mixed = HermMatrix::identity(9).scale(1.0 / 9.0);
        let rep = detects(&map, &mixed, dims).unwrap();
        assert_eq!(rep.verdict, Verdict::NotDetected);
        assert!((rep.pairing_value - 2.0 / 3.0).abs() < 1e-12);
        assert!(rep.state_is_ppt);

        // the transpose map pairs through the swap operator F: Tr(F P⁺)/3 = 1
        let bell = maximally_entangled(3).scale(1.0 / 3.0);
        let rep = detects(&transpose_map(3), &bell, dims).unwrap();
        assert!((rep.pairing_value - 1.0).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::NotDetected);
        assert!(!rep.state_is_ppt);
        assert!((rep.partial_transpose_min_eig + 1.0 / 3.0).abs() < 1e-12);

        // antisymmetric vectors are where F is negative
        let mut v = CVector::zeros(9);
        v[1] = r(0.5f64.sqrt());
        v[3] = r(-(0.5f64.sqrt()));
        let rep = detects(&transpose_map(3), &HermMatrix::projector(&v), dims).unwrap();
        assert!((rep.pairing_value + 1.0).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::DetectedEntangled);

        let wrong = BipartiteDims::new(9, 1).unwrap();
        assert!(detects(&map, &mixed, wrong).is_err());
        let not_psd = HermMatrix::from_diagonal(&[-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(detects(&map, &not_psd, dims), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn separable_mixture_is_not_detected() {
        let dims = BipartiteDims::new(3, 3).unwrap();
        let map = phi_t(&TParam::new(0.5).unwrap());
        let mut rng = rng_from_seed(23, 0);
        let mut acc = HermMatrix::zeros(9);
        for _ in 0..6 {
            let pv = ProductVector::new(gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3)).unwrap();
            let p = pv.projector();
            acc = acc.combine(1.0, &p, 1.0 / p.trace());
        }
        let rep = detects(&map, &acc.scale(1.0 / acc.trace()), dims).unwrap();
        assert_eq!(rep.verdict, Verdict::NotDetected);
    }

    #[test]
    fn pt_of_bell_state_matches_swap() {
        let dims = BipartiteDims::new(3, 3).unwrap();
        let pt = partial_transpose(&maximally_entangled(3), dims).unwrap();
        assert!((eig_min(&pt) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumerated_kill_vectors_are_zeros() {
        let map = generalized_choi(&ChoiParams::new(1.0, 0.0, 1.0).unwrap());
        let cfg = KillSearchConfig { starts: 64, ..KillSearchConfig::default() };
        let found = enumerate_kill_vectors(&map, &cfg);
        assert!(!found.is_empty());
        for pv in &found {
            assert!(kill_value(&map, pv).unwrap().abs() <= 1e-12);
        }
    }
}
