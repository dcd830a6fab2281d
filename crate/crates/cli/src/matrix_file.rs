//! JSON matrix files: a state on `C^n ⊗ C^m` or the Choi matrix of a map
//! `M_m -> M_n`, stored as flat row-major real and imaginary parts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use witness_forge_core::linalg::{c64, hermitian_defect, BipartiteDims, CMatrix, HermMatrix};
use witness_forge_core::LinMapRep;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    State,
    MapChoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub kind: MatrixKind,
    /// `(n, m)`; for a Choi matrix, `n` is the output and `m` the input dimension.
    pub dims: [usize; 2],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixFile {
    fn from_matrix(kind: MatrixKind, dims: [usize; 2], a: &CMatrix) -> Self {
        let d = a.nrows();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                re.push(a[(r, c)].re);
                im.push(a[(r, c)].im);
            }
        }
        MatrixFile { kind, dims, re, im }
    }

    pub fn from_state(a: &HermMatrix, dims: BipartiteDims) -> Self {
        Self::from_matrix(MatrixKind::State, [dims.n, dims.m], a.as_matrix())
    }

    pub fn from_map(map: &LinMapRep) -> Self {
        Self::from_matrix(MatrixKind::MapChoi, [map.dim_out(), map.dim_in()], map.choi().as_matrix())
    }

    /// Checks lengths, finiteness and Hermiticity.
    pub fn validate(&self) -> CliResult<()> {
        let [n, m] = self.dims;
        if n == 0 || m == 0 {
            return Err(CliError::Parse("dims must be positive".into()));
        }
        let d = n * m;
        if self.re.len() != d * d || self.im.len() != d * d {
            return Err(CliError::Parse(format!(
                "dims {:?} need {} entries in re and im, found {} and {}",
                self.dims,
                d * d,
                self.re.len(),
                self.im.len()
            )));
        }
        if self.re.iter().chain(&self.im).any(|v| !v.is_finite()) {
            return Err(CliError::Parse("matrix entries must be finite".into()));
        }
        let defect = hermitian_defect(&self.matrix());
        let scale = self.re.iter().chain(&self.im).fold(1.0f64, |acc, v| acc.max(v.abs()));
        if defect > 1e-12 * scale {
            let what = match self.kind {
                MatrixKind::State => "state",
                MatrixKind::MapChoi => "Choi matrix",
            };
            return Err(CliError::Parse(format!("{what} is not Hermitian (defect {defect:e})")));
        }
        Ok(())
    }

    fn matrix(&self) -> CMatrix {
        let d = self.dims[0] * self.dims[1];
        CMatrix::from_fn(d, d, |r, c| c64(self.re[r * d + c], self.im[r * d + c]))
    }

    pub fn bipartite_dims(&self) -> CliResult<BipartiteDims> {
        Ok(BipartiteDims::new(self.dims[0], self.dims[1])?)
    }

    pub fn to_state(&self) -> CliResult<HermMatrix> {
        if self.kind != MatrixKind::State {
            return Err(CliError::Parse("expected a file of kind \"state\"".into()));
        }
        self.validate()?;
        Ok(HermMatrix::new(self.matrix())?)
    }

    pub fn to_map(&self) -> CliResult<LinMapRep> {
        if self.kind != MatrixKind::MapChoi {
            return Err(CliError::Parse("expected a file of kind \"map-choi\"".into()));
        }
        self.validate()?;
        let [n, m] = self.dims;
        Ok(LinMapRep::from_choi(HermMatrix::new(self.matrix())?, m, n)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let file: MatrixFile =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("matrix files serialize");
        fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use witness_forge_core::maps::{phi_t, TParam};

    #[test]
    fn round_trip_is_bit_exact() {
        let map = phi_t(&TParam::new(0.3).unwrap());
        let file = MatrixFile::from_map(&map);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        let back = MatrixFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_map().unwrap(), map);
    }

    #[test]
    fn rejects_bad_files() {
        let mut f = MatrixFile { kind: MatrixKind::State, dims: [1, 2], re: vec![1.0, 0.0, 0.0, 1.0], im: vec![0.0; 4] };
        assert!(f.validate().is_ok());
        f.re.pop();
        assert!(f.validate().is_err());
        let f = MatrixFile { kind: MatrixKind::State, dims: [1, 2], re: vec![1.0, 2.0, 0.0, 1.0], im: vec![0.0; 4] };
        assert!(f.validate().is_err());
        let f = MatrixFile { kind: MatrixKind::MapChoi, dims: [1, 2], re: vec![1.0, 0.0, 0.0, 1.0], im: vec![0.0; 4] };
        assert!(f.to_state().is_err());
    }
}
