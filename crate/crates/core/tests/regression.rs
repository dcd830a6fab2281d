//! Frozen values from independent computations.

use witness_forge_core::duality::{enumerate_kill_vectors, KillSearchConfig, Verdict};
use witness_forge_core::exposed::{certify_exposedness, kill_constraint_null_space, ExposednessConfig, ExposureVerdict};
use witness_forge_core::linalg::{span_rank, BipartiteDims, DEFAULT_RANK_TOL};
use witness_forge_core::maps::{generalized_choi, phi_t, ChoiParams, TParam};
use witness_forge_core::ppt::{find_detected_ppt_state, maximally_entangled, project_ppt, PptSearchConfig};

/// Hermitian 9×9 matrices annihilated by every sampled kill projector.
const NULL_SPACE_DIM: usize = 53;

/// Default search on `Φ(1/2)`; an SDP over the PPT states gives -0.09717.
const PPT_PAIRING_HALF: f64 = -0.09716677139950976;

#[test]
fn kill_constraint_null_space_dimension() {
    for t in [0.5, 2.0] {
        for (phases, rows) in [(24, 648), (48, 2448)] {
            let (basis, n_rows) = kill_constraint_null_space(t, phases, 1e-8).unwrap();
            assert_eq!(basis.ncols(), NULL_SPACE_DIM, "t = {t}, phases = {phases}");
            assert_eq!(n_rows, rows);
        }
    }
}

#[test]
fn certificate_at_defaults() {
    for t in [0.5, 2.0] {
        let cert = certify_exposedness(t, &ExposednessConfig::default()).unwrap();
        assert_eq!(cert.verdict, ExposureVerdict::ExposedRayConfirmed);
        assert_eq!(cert.null_space_dim, NULL_SPACE_DIM);
        assert_eq!(cert.refined_null_space_dim, NULL_SPACE_DIM);
        assert!(cert.ray_residual <= 1e-8);
        assert!(cert.choi_residual <= 1e-10);
    }
}

#[test]
fn ppt_search_value_at_half() {
    let map = phi_t(&TParam::new(0.5).unwrap());
    let (state, report) = find_detected_ppt_state(&map, &PptSearchConfig::default()).unwrap();
    assert_eq!(report.verdict, Verdict::DetectedPptEntangled);
    assert!((report.pairing_value - PPT_PAIRING_HALF).abs() <= 1e-9);
    assert!((state.trace() - 1.0).abs() <= 1e-12);
}

#[test]
fn nearest_ppt_matrix_to_bell_state() {
    let dims = BipartiteDims::new(3, 3).unwrap();
    let bell = maximally_entangled(3).scale(1.0 / 3.0);
    let proj = project_ppt(&bell, dims, 5000).unwrap();
    let dist = proj.combine(1.0, &bell, -1.0).frobenius_norm();
    assert!((dist - 1.0 / 3f64.sqrt()).abs() <= 1e-9);
}

#[test]
fn choi_map_kill_vector_ranks() {
    let map = generalized_choi(&ChoiParams::new(1.0, 0.0, 1.0).unwrap());
    let found = enumerate_kill_vectors(&map, &KillSearchConfig::default());
    let embedded: Vec<_> = found.iter().map(|p| p.embedded().clone()).collect();
    let conj: Vec<_> = found.iter().map(|p| p.partial_conjugate().clone()).collect();
    assert_eq!(span_rank(&embedded, DEFAULT_RANK_TOL).unwrap(), 7);
    assert_eq!(span_rank(&conj, DEFAULT_RANK_TOL).unwrap(), 9);
}
