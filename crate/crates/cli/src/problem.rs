//! Problem-file schema (version 1).

use num_complex::Complex64;
use serde::Deserialize;

use crtorsion::density::{CurvatureData, EtaQuadrature};
use crtorsion::hermitian::HermitianMatrix;
use crtorsion::kernels::HeisenbergModel;
use crtorsion::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// A matrix entry: `[re, im]` or a bare real number.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Complex([re, im]) => Complex64::new(re, im),
            Entry::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type MatrixRows = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub beta: f64,
    pub hess: MatrixRows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(rename = "A")]
    pub a: MatrixRows,
    #[serde(rename = "B")]
    pub b: MatrixRows,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Option<MatrixRows>,
    #[serde(rename = "B")]
    pub b: Option<MatrixRows>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub model: Option<ModelSpec>,
    pub t_grid: Option<Vec<f64>>,
    pub quadrature: Option<QuadratureSettings>,
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
}

fn hermitian(rows: &MatrixRows, n: usize, name: &str) -> Result<HermitianMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation(format!("{name} must be {n}×{n}")));
    }
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| r.iter().map(|e| e.value()).collect())
        .collect();
    HermitianMatrix::from_rows(&rows).map_err(|e| Error::Validation(format!("{name}: {e}")))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: ProblemFile =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("problem file: {e}")))?;
        if p.version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported problem file version {} (expected {SCHEMA_VERSION})",
                p.version
            )));
        }
        if p.n == 0 || p.n > 8 {
            return Err(Error::Validation(format!("n = {} outside 1..=8", p.n)));
        }
        Ok(p)
    }

    pub fn curvature(&self) -> Result<CurvatureData> {
        match (&self.a, &self.b) {
            (Some(a), Some(b)) => CurvatureData::new(hermitian(a, self.n, "A")?, hermitian(b, self.n, "B")?),
            _ => Err(Error::Validation("problem file needs top-level A and B".into())),
        }
    }

    /// Weighted samples; a file without a samples list is one sample of weight 1.
    pub fn weighted_samples(&self) -> Result<Vec<(CurvatureData, f64)>> {
        if self.samples.is_empty() {
            return Ok(vec![(self.curvature()?, 1.0)]);
        }
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let d = CurvatureData::new(
                    hermitian(&s.a, self.n, &format!("samples[{i}].A"))?,
                    hermitian(&s.b, self.n, &format!("samples[{i}].B"))?,
                )?;
                Ok((d, s.weight))
            })
            .collect()
    }

    pub fn eta_quadrature(&self, data: &CurvatureData) -> Result<EtaQuadrature> {
        let base = EtaQuadrature::for_data(data);
        let settings = self.quadrature.as_ref();
        let q = EtaQuadrature::new(
            self.c.unwrap_or(base.c),
            settings.and_then(|s| s.rel_tol).unwrap_or(base.opts.rel_tol),
            settings.and_then(|s| s.abs_tol).unwrap_or(base.opts.abs_tol),
        )?;
        q.validate(data)?;
        Ok(q)
    }

    pub fn heisenberg(&self) -> Result<HeisenbergModel> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Validation("problem file has no model section".into()))?;
        HeisenbergModel::new(m.lambda.clone(), m.beta, hermitian(&m.hess, self.n, "model.hess")?)
    }
}
