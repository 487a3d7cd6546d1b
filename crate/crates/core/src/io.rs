//! JSON file formats for instances, families and centeredness certificates.
//!
//! Numbers are written with shortest round-trip precision, so reading a
//! written file reproduces the value exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::CenterednessCertificate;
use crate::distributions::{Atom, Segment, ValueDistribution};
use crate::engine::Instance;
use crate::error::{Error, Result};
use crate::permutations::{Permutation, PermutationFamily, Provenance};

/// Failure reading a file: malformed input, or well-formed input that
/// violates a precondition.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends its own location; keep only the message.
        let message = match message.rfind(" at line ") {
            Some(cut) => message[..cut].to_string(),
            None => message,
        };
        FormatError::Parse { line: e.line(), column: e.column(), message }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Component {
    Atoms {
        points: Vec<(f64, f64)>,
    },
    Uniform {
        a: f64,
        b: f64,
        #[serde(default = "one")]
        w: f64,
    },
    ExpCapped {
        rate: f64,
        #[serde(default = "one")]
        w: f64,
    },
    TwoLevel {
        #[serde(rename = "H")]
        h: f64,
        n: usize,
        #[serde(default = "one")]
        w: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum DistSpec {
    One(Component),
    Mixture(Vec<Component>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    dists: Vec<DistSpec>,
}

fn components(d: &ValueDistribution) -> Vec<Component> {
    let mut out = Vec::new();
    if !d.atoms().is_empty() {
        out.push(Component::Atoms { points: d.atoms().iter().map(|a| (a.x, a.p)).collect() });
    }
    out.extend(d.segments().iter().map(|s| match *s {
        Segment::Uniform { a, b, w } => Component::Uniform { a, b, w },
        Segment::ExpCapped { rate, w } => Component::ExpCapped { rate, w },
        Segment::TwoLevel { h, n, w } => Component::TwoLevel { h, n, w },
    }));
    out
}

fn distribution(spec: DistSpec) -> Result<ValueDistribution> {
    let parts = match spec {
        DistSpec::One(c) => vec![c],
        DistSpec::Mixture(cs) => cs,
    };
    let mut atoms = Vec::new();
    let mut segments = Vec::new();
    for c in parts {
        match c {
            Component::Atoms { points } => atoms.extend(points.into_iter().map(|(x, p)| Atom { x, p })),
            Component::Uniform { a, b, w } => segments.push(Segment::Uniform { a, b, w }),
            Component::ExpCapped { rate, w } => segments.push(Segment::ExpCapped { rate, w }),
            Component::TwoLevel { h, n, w } => segments.push(Segment::TwoLevel { h, n, w }),
        }
    }
    ValueDistribution::new(atoms, segments)
}

pub fn instance_to_json(inst: &Instance) -> String {
    let dists = inst
        .dists()
        .iter()
        .map(|d| {
            let mut cs = components(d);
            if cs.len() == 1 {
                DistSpec::One(cs.remove(0))
            } else {
                DistSpec::Mixture(cs)
            }
        })
        .collect();
    serde_json::to_string_pretty(&InstanceFile { n: inst.n(), dists }).expect("instance serialises")
}

pub fn instance_from_json(text: &str) -> std::result::Result<Instance, FormatError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.dists.len() != file.n {
        return Err(Error::SizeMismatch { expected: file.n, found: file.dists.len() }.into());
    }
    let dists = file.dists.into_iter().map(distribution).collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(dists)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ProvenanceFile {
    Explicit,
    ForwardReverse,
    Affine,
    Sampled { seed: u64, epsilon: f64, delta: f64, m: usize, attempts: u32 },
    Padded { parent_n: usize, parent: Box<ProvenanceFile> },
}

impl From<&Provenance> for ProvenanceFile {
    fn from(p: &Provenance) -> Self {
        match p {
            Provenance::Explicit => ProvenanceFile::Explicit,
            Provenance::ForwardReverse => ProvenanceFile::ForwardReverse,
            Provenance::Affine => ProvenanceFile::Affine,
            &Provenance::Sampled { seed, epsilon, delta, m, attempts } => {
                ProvenanceFile::Sampled { seed, epsilon, delta, m, attempts }
            }
            Provenance::Padded { parent_n, parent } => {
                ProvenanceFile::Padded { parent_n: *parent_n, parent: Box::new(parent.as_ref().into()) }
            }
        }
    }
}

impl From<ProvenanceFile> for Provenance {
    fn from(p: ProvenanceFile) -> Self {
        match p {
            ProvenanceFile::Explicit => Provenance::Explicit,
            ProvenanceFile::ForwardReverse => Provenance::ForwardReverse,
            ProvenanceFile::Affine => Provenance::Affine,
            ProvenanceFile::Sampled { seed, epsilon, delta, m, attempts } => {
                Provenance::Sampled { seed, epsilon, delta, m, attempts }
            }
            ProvenanceFile::Padded { parent_n, parent } => {
                Provenance::Padded { parent_n, parent: Box::new((*parent).into()) }
            }
        }
    }
}

fn explicit() -> ProvenanceFile {
    ProvenanceFile::Explicit
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    n: usize,
    perms: Vec<Vec<usize>>,
    #[serde(default = "explicit")]
    provenance: ProvenanceFile,
}

pub fn family_to_json(family: &PermutationFamily) -> String {
    let file = FamilyFile {
        n: family.n(),
        perms: family.perms().iter().map(|p| p.as_slice().to_vec()).collect(),
        provenance: family.provenance().into(),
    };
    serde_json::to_string(&file).expect("family serialises")
}

pub fn family_from_json(text: &str) -> std::result::Result<PermutationFamily, FormatError> {
    let file: FamilyFile = serde_json::from_str(text)?;
    let perms = file.perms.into_iter().map(Permutation::new).collect::<Result<Vec<_>>>()?;
    let family = PermutationFamily::new(perms, file.provenance.into())?;
    if family.n() != file.n {
        return Err(Error::SizeMismatch { expected: file.n, found: family.n() }.into());
    }
    Ok(family)
}

const CERTIFICATE_SEMANTICS: &str = "index j is eps-centered for every eps strictly greater than epsilon";

#[derive(Debug, Serialize, Deserialize)]
struct CertificateFile {
    j: usize,
    epsilon: f64,
    p: BTreeMap<usize, f64>,
    dual_w: Vec<f64>,
    lp_gap: f64,
    #[serde(default)]
    semantics: Option<String>,
}

fn certificate_file(cert: &CenterednessCertificate) -> CertificateFile {
    let p = cert
        .witness_p
        .iter()
        .enumerate()
        .filter(|(k, _)| k + 1 != cert.j)
        .map(|(k, &w)| (k + 1, w))
        .collect();
    CertificateFile {
        j: cert.j,
        epsilon: cert.epsilon,
        p,
        dual_w: cert.dual_w.clone(),
        lp_gap: cert.lp_gap,
        semantics: Some(CERTIFICATE_SEMANTICS.into()),
    }
}

/// The certificate as a JSON value, for embedding in larger documents.
pub fn certificate_to_value(cert: &CenterednessCertificate) -> serde_json::Value {
    serde_json::to_value(certificate_file(cert)).expect("certificate serialises")
}

pub fn certificate_to_json(cert: &CenterednessCertificate) -> String {
    serde_json::to_string_pretty(&certificate_file(cert)).expect("certificate serialises")
}

/// `n` is needed because the file lists only the indices other than `j`.
pub fn certificate_from_json(text: &str, n: usize) -> std::result::Result<CenterednessCertificate, FormatError> {
    let file: CertificateFile = serde_json::from_str(text)?;
    if file.j == 0 || file.j > n {
        return Err(Error::IndexOutOfRange { index: file.j, n }.into());
    }
    let mut witness_p = vec![0.0; n];
    for (&i, &w) in &file.p {
        if i == 0 || i > n || i == file.j {
            return Err(Error::IndexOutOfRange { index: i, n }.into());
        }
        witness_p[i - 1] = w;
    }
    Ok(CenterednessCertificate { j: file.j, epsilon: file.epsilon, witness_p, dual_w: file.dual_w, lp_gap: file.lp_gap })
}
