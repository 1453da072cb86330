use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cases::{get_case, Target, Term};
use crate::numerics::{read_romx, write_romx, DenseMatrix};

use super::{HyperTerm, JacobianTerm, ReducedAffine, RomError, RomOperators, Scheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermMeta {
    pub target: String,
    pub m: usize,
    pub p: usize,
    pub points: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactMeta {
    pub case: String,
    pub scheme: Scheme,
    pub n: usize,
    /// `[nx, ny, p, quad_order]`.
    pub mesh: [usize; 4],
    pub n_affine: usize,
    pub residual: Vec<TermMeta>,
    pub jacobian: Vec<TermMeta>,
    /// File name to lowercase hex SHA-256 of its bytes.
    pub hashes: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn row(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(1, v.len(), |_, j| v[j])
}

/// Role-based names: `C_NM_g`/`Q_MN_g` for the reaction term, `D_NK_f1`/`S_KN_f1`
/// for fluxes, `Cgu_001`, `Df1u_001`, ... for Jacobian tensors.
fn coupling_names(t: Target) -> (String, String) {
    match t.term {
        Term::G => (format!("C_NM_{}", t.tag()), format!("Q_MN_{}", t.tag())),
        Term::F(_) => (format!("D_NK_{}", t.tag()), format!("S_KN_{}", t.tag())),
    }
}

fn tensor_name(t: Target, k: usize) -> String {
    let prefix = match t.term {
        Term::G => "C",
        Term::F(_) => "D",
    };
    format!("{prefix}{}_{:03}", t.tag(), k + 1)
}

fn term_meta(target: Target, m: usize, p: usize, points: &[usize], coords: &[[f64; 2]]) -> TermMeta {
    TermMeta { target: target.tag(), m, p, points: points.to_vec(), coords: coords.to_vec() }
}

/// Writes `meta.json` and one ROMX file per operator into `dir`.
pub fn save_artifacts(ops: &RomOperators, dir: &Path) -> Result<ArtifactMeta, RomError> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, &DenseMatrix)> = Vec::new();
    let l = row(&ops.affine.load);
    let lo = row(&ops.affine.output);
    for (q, a) in ops.affine.a.iter().enumerate() {
        files.push((format!("A_{}", q + 1), a));
    }
    files.push(("l_N".into(), &l));
    files.push(("lO_N".into(), &lo));
    for t in &ops.residual {
        let (c, q) = coupling_names(t.target);
        files.push((c, &t.c));
        files.push((q, &t.q));
        files.push((format!("B_{}", t.target.tag()), &t.b));
    }
    for t in &ops.jacobian {
        files.push((format!("Q_{}", t.target.tag()), &t.q));
        files.push((format!("B_{}", t.target.tag()), &t.b));
        for (k, tk) in t.tensors.iter().enumerate() {
            files.push((tensor_name(t.target, k), tk));
        }
    }

    let mut hashes = BTreeMap::new();
    for (name, m) in files {
        let mut bytes = Vec::new();
        write_romx(&mut bytes, m)?;
        let file = format!("{name}.romx");
        fs::write(dir.join(&file), &bytes)?;
        hashes.insert(file, sha256_hex(&bytes));
    }
    let meta = ArtifactMeta {
        case: ops.case.as_str().to_string(),
        scheme: ops.scheme,
        n: ops.n,
        mesh: ops.mesh,
        n_affine: ops.affine.a.len(),
        residual: ops.residual.iter().map(|t| term_meta(t.target, t.m, t.p, &t.points, &t.coords)).collect(),
        jacobian: ops.jacobian.iter().map(|t| term_meta(t.target, t.m, 0, &t.points, &t.coords)).collect(),
        hashes,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

struct Reader<'a> {
    dir: &'a Path,
    meta: &'a ArtifactMeta,
}

impl Reader<'_> {
    fn read(&self, name: &str) -> Result<DenseMatrix, RomError> {
        let file = format!("{name}.romx");
        let expected = self
            .meta
            .hashes
            .get(&file)
            .ok_or_else(|| RomError::ArtifactMismatch(format!("{file} not listed in meta.json")))?;
        let bytes = fs::read(self.dir.join(&file))
            .map_err(|e| RomError::ArtifactMismatch(format!("{file}: {e}")))?;
        if &sha256_hex(&bytes) != expected {
            return Err(RomError::ArtifactMismatch(format!("{file}: content hash differs from meta.json")));
        }
        read_romx(&mut bytes.as_slice()).map_err(|e| RomError::ArtifactMismatch(format!("{file}: {e}")))
    }

    fn shaped(&self, name: &str, rows: usize, cols: usize) -> Result<DenseMatrix, RomError> {
        let m = self.read(name)?;
        if (m.rows(), m.cols()) != (rows, cols) {
            return Err(RomError::ArtifactMismatch(format!(
                "{name}: expected {rows}x{cols}, found {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }
}

fn parse_target(tag: &str) -> Result<Target, RomError> {
    Target::from_tag(tag).ok_or_else(|| RomError::ArtifactMismatch(format!("unknown target `{tag}`")))
}

/// Reads an artifact directory, rejecting any file whose hash or shape does
/// not match `meta.json`.
pub fn load_artifacts(dir: &Path) -> Result<RomOperators, RomError> {
    let text = fs::read_to_string(dir.join("meta.json"))
        .map_err(|e| RomError::ArtifactMismatch(format!("meta.json: {e}")))?;
    let meta: ArtifactMeta =
        serde_json::from_str(&text).map_err(|e| RomError::ArtifactMismatch(format!("meta.json: {e}")))?;
    let case = get_case(&meta.case)?;
    let rd = Reader { dir, meta: &meta };
    let n = meta.n;

    let a = (0..meta.n_affine).map(|q| rd.shaped(&format!("A_{}", q + 1), n, n)).collect::<Result<_, _>>()?;
    let load = rd.shaped("l_N", 1, n)?.into_vec();
    let output = rd.shaped("lO_N", 1, n)?.into_vec();

    let mut residual = Vec::new();
    for tm in &meta.residual {
        let target = parse_target(&tm.target)?;
        let (cn, qn) = coupling_names(target);
        let k = tm.m + tm.p;
        residual.push(HyperTerm {
            target,
            m: tm.m,
            p: tm.p,
            b: rd.shaped(&format!("B_{}", tm.target), k, k)?,
            q: rd.shaped(&qn, k, n)?,
            c: rd.shaped(&cn, n, tm.m)?,
            points: tm.points.clone(),
            coords: tm.coords.clone(),
        });
    }
    let mut jacobian = Vec::new();
    for tm in &meta.jacobian {
        let target = parse_target(&tm.target)?;
        let tensors = (0..tm.m).map(|k| rd.shaped(&tensor_name(target, k), n, n)).collect::<Result<_, _>>()?;
        jacobian.push(JacobianTerm {
            target,
            m: tm.m,
            b: rd.shaped(&format!("B_{}", tm.target), tm.m, tm.m)?,
            q: rd.shaped(&format!("Q_{}", tm.target), tm.m, n)?,
            tensors,
            points: tm.points.clone(),
            coords: tm.coords.clone(),
        });
    }

    Ok(RomOperators {
        case: case.name,
        scheme: meta.scheme,
        n,
        mesh: meta.mesh,
        affine: ReducedAffine { a, load, output },
        residual,
        jacobian,
    })
}
