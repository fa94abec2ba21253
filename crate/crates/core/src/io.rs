//! JSON file formats.
//!
//! Rationals are written as `"p/q"` strings. Lattice vectors are stored by
//! their integer coefficients only; embeddings are recomputed on load.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianParam, SampleSet, SamplerKind, SmoothingEstimate};
use crate::gddp::{GddSolution, GddpParams, HaltReason, NAlpha, Preprocessing};
use crate::lattice::{Basis, Target};
use crate::rational;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisFile {
    pub n: usize,
    pub rows: Vec<Vec<String>>,
    pub provenance: String,
    pub seed: Option<u64>,
}

impl From<&Basis> for BasisFile {
    fn from(b: &Basis) -> Self {
        BasisFile {
            n: b.n(),
            rows: b.rows().iter().map(|r| r.iter().map(rational::format).collect()).collect(),
            provenance: b.provenance().to_string(),
            seed: b.seed(),
        }
    }
}

impl BasisFile {
    pub fn to_basis(&self) -> Result<Basis> {
        if self.rows.len() != self.n {
            return Err(Error::MalformedBasis(format!("n = {} but {} rows", self.n, self.rows.len())));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| rational::parse(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Basis::new(rows, self.provenance.clone())?.with_seed(self.seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFile {
    pub n: usize,
    pub t: Vec<f64>,
}

impl TargetFile {
    pub fn new(t: &Target) -> Self {
        TargetFile { n: t.len(), t: t.as_slice().to_vec() }
    }

    pub fn to_target(&self) -> Result<Target> {
        if self.t.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.t.len() });
        }
        Target::new(self.t.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSetFile {
    pub basis_hash: String,
    pub s: f64,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub stat_distance_bound: Option<f64>,
    pub samples: Vec<Vec<i64>>,
}

impl From<&SampleSet> for SampleSetFile {
    fn from(set: &SampleSet) -> Self {
        SampleSetFile {
            basis_hash: set.basis_hash.clone(),
            s: set.s.get(),
            sampler: set.sampler,
            seed: set.seed,
            stat_distance_bound: set.stat_distance_bound,
            samples: set.samples.iter().map(|v| v.coeffs.clone()).collect(),
        }
    }
}

impl SampleSetFile {
    pub fn to_sample_set(&self, basis: &Basis) -> Result<SampleSet> {
        if self.basis_hash != basis.hash() {
            return Err(Error::Parse("sample file belongs to a different basis".into()));
        }
        let samples = self.samples.iter().map(|c| basis.vector(c.clone())).collect::<Result<_>>()?;
        Ok(SampleSet {
            samples,
            s: GaussianParam::new(self.s)?,
            sampler: self.sampler,
            seed: self.seed,
            stat_distance_bound: self.stat_distance_bound,
            basis_hash: self.basis_hash.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingFile {
    pub params: GddpParams,
    pub smoothing: SmoothingEstimate,
    pub n_alpha: Option<NAlpha>,
    pub theorem_guarantee: bool,
    pub basis: BasisFile,
    pub vectors: SampleSetFile,
}

impl From<&Preprocessing> for PreprocessingFile {
    fn from(p: &Preprocessing) -> Self {
        PreprocessingFile {
            params: p.params.clone(),
            smoothing: p.smoothing,
            n_alpha: p.n_alpha.clone(),
            theorem_guarantee: p.theorem_guarantee(),
            basis: BasisFile::from(&p.basis),
            vectors: SampleSetFile::from(&p.vectors),
        }
    }
}

impl PreprocessingFile {
    pub fn to_preprocessing(&self) -> Result<Preprocessing> {
        let basis = self.basis.to_basis()?;
        let vectors = self.vectors.to_sample_set(&basis)?;
        Preprocessing::from_parts(basis, self.params.clone(), vectors, self.smoothing, self.n_alpha.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub target: Vec<f64>,
    pub coeffs: Vec<i64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub iterations: usize,
    pub halt_reason: HaltReason,
}

impl From<&GddSolution> for SolutionFile {
    fn from(s: &GddSolution) -> Self {
        SolutionFile {
            n: s.y.coeffs.len(),
            target: s.trace.target.clone(),
            coeffs: s.y.coeffs.clone(),
            y: s.y.embedding.clone(),
            distance: s.distance,
            iterations: s.trace.steps.len(),
            halt_reason: s.trace.halt_reason,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
