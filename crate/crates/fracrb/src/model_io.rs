//! Single-file container for trained models.
//!
//! Layout (all integers little endian):
//!
//! ```text
//! "FRBM"                magic
//! u32                   format version (currently 1)
//! u32 + bytes           metadata: UTF-8 `key=value` lines
//! u32                   section count
//! per section:
//!   u32 + bytes         section name
//!   u64 + data          length-prefixed array of f64 (little endian bits)
//! u64                   FNV-1a checksum of everything above
//! ```
//!
//! Floats are stored bit-exactly, so a save/load round trip reproduces every
//! array identically and online evaluations of a reloaded model match the
//! original to the last bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::certify::{ScmConstraint, ScmModel};
use crate::eim::EimModel;
use crate::error::{Error, Result};
use crate::fem::RhsDescription;
use crate::param::{Parameter, Subdomain};
use crate::rbm::{CertificationBlock, ReducedModel};

pub const MAGIC: &[u8; 4] = b"FRBM";
pub const FORMAT_VERSION: u32 = 1;

/// Generic container: textual metadata plus named float sections.
#[derive(Clone, Debug, Default)]
pub struct Container {
    pub metadata: BTreeMap<String, String>,
    pub sections: Vec<(String, Vec<f64>)>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

impl Container {
    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        assert!(!key.contains('=') && !key.contains('\n'));
        assert!(!value.contains('\n'));
        self.metadata.insert(key.to_string(), value);
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Format(format!("missing metadata key `{key}`")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta(key)?
            .parse::<T>()
            .map_err(|_| Error::Format(format!("metadata key `{key}` has an invalid value")))
    }

    pub fn push_section(&mut self, name: &str, data: Vec<f64>) {
        self.sections.push((name.to_string(), data));
    }

    pub fn section(&self, name: &str) -> Result<&[f64]> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_slice())
            .ok_or_else(|| Error::Format(format!("missing section `{name}`")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let mut meta = String::new();
        for (k, v) in &self.metadata {
            meta.push_str(k);
            meta.push('=');
            meta.push_str(v);
            meta.push('\n');
        }
        buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        buf.extend_from_slice(meta.as_bytes());
        buf.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for (name, data) in &self.sections {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
            for v in data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let checksum = fnv1a64(&buf);
        buf.extend_from_slice(&checksum.to_le_bytes());
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        struct Cursor<'a> {
            bytes: &'a [u8],
            pos: usize,
        }
        impl<'a> Cursor<'a> {
            fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
                if self.pos + n > self.bytes.len() {
                    return Err(Error::Format(format!(
                        "truncated container while reading {what}"
                    )));
                }
                let out = &self.bytes[self.pos..self.pos + n];
                self.pos += n;
                Ok(out)
            }
            fn u32(&mut self, what: &str) -> Result<u32> {
                Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
            }
            fn u64(&mut self, what: &str) -> Result<u64> {
                Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
            }
        }
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format("not a model container (bad magic)".into()));
        }
        let version = cur.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let meta_len = cur.u32("metadata length")? as usize;
        let meta_bytes = cur.take(meta_len, "metadata")?;
        let meta_text = std::str::from_utf8(meta_bytes)
            .map_err(|_| Error::Format("metadata is not valid UTF-8".into()))?;
        let mut metadata = BTreeMap::new();
        for line in meta_text.lines() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("malformed metadata line `{line}`")))?;
            metadata.insert(k.to_string(), v.to_string());
        }
        let n_sections = cur.u32("section count")? as usize;
        let mut sections = Vec::with_capacity(n_sections);
        for i in 0..n_sections {
            let name_len = cur.u32(&format!("name length of section {i}"))? as usize;
            let name_bytes = cur.take(name_len, &format!("name of section {i}"))?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| Error::Format(format!("section {i} name is not UTF-8")))?
                .to_string();
            let count = cur.u64(&format!("length of section `{name}`"))? as usize;
            let data_bytes = cur.take(count * 8, &format!("data of section `{name}`"))?;
            let mut data = Vec::with_capacity(count);
            for chunk in data_bytes.chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
            sections.push((name, data));
        }
        let payload_end = cur.pos;
        let stored = cur.u64("checksum")?;
        let computed = fnv1a64(&bytes[..payload_end]);
        if stored != computed {
            return Err(Error::Format(format!(
                "checksum mismatch: stored {stored:#018x}, computed {computed:#018x}"
            )));
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checksum".into()));
        }
        Ok(Container { metadata, sections })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Mesh construction parameters, enough to rebuild the discretization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshParams {
    pub n: usize,
    pub m_fe: usize,
    pub gamma: f64,
    pub y_plus: f64,
}

/// A trained, shippable surrogate for one subdomain.
pub struct ModelBundle {
    pub mesh: MeshParams,
    pub reduced: ReducedModel,
    pub scm: Option<ScmModel>,
}

fn rhs_to_string(rhs: &RhsDescription) -> String {
    match rhs {
        RhsDescription::Example1 => "example1".to_string(),
        RhsDescription::Example2 => "example2".to_string(),
        RhsDescription::Modal(modes) => {
            let parts: Vec<String> = modes
                .iter()
                .map(|(j, k, c)| format!("{j},{k},{c}"))
                .collect();
            format!("modal:{}", parts.join(";"))
        }
    }
}

pub fn rhs_from_string(text: &str) -> Result<RhsDescription> {
    match text {
        "example1" => Ok(RhsDescription::Example1),
        "example2" => Ok(RhsDescription::Example2),
        other => {
            let Some(spec) = other.strip_prefix("modal:") else {
                return Err(Error::Format(format!("unknown right-hand side `{other}`")));
            };
            let mut modes = Vec::new();
            for part in spec.split(';').filter(|p| !p.is_empty()) {
                let fields: Vec<&str> = part.split(',').collect();
                if fields.len() != 3 {
                    return Err(Error::Format(format!("malformed mode `{part}`")));
                }
                let j = fields[0]
                    .parse::<usize>()
                    .map_err(|_| Error::Format(format!("malformed mode `{part}`")))?;
                let k = fields[1]
                    .parse::<usize>()
                    .map_err(|_| Error::Format(format!("malformed mode `{part}`")))?;
                let coeff = fields[2]
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("malformed mode `{part}`")))?;
                modes.push((j, k, coeff));
            }
            Ok(RhsDescription::Modal(modes))
        }
    }
}

fn matrix_section(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn matrix_from_section(data: &[f64], rows: usize, cols: usize, name: &str) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "section `{name}` has {} entries, expected {rows} x {cols}",
            data.len()
        )));
    }
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = data[i * cols + j];
        }
    }
    Ok(m)
}

/// Serializes a trained bundle into a container.
pub fn bundle_to_container(bundle: &ModelBundle, extra_meta: &[(String, String)]) -> Container {
    let mut c = Container::default();
    let reduced = &bundle.reduced;
    let eim = &reduced.eim;
    c.set_meta("format", "fractional-rb-model");
    c.set_meta("subdomain", reduced.subdomain.name());
    c.set_meta("rhs", rhs_to_string(&reduced.rhs));
    c.set_meta("mesh.n", bundle.mesh.n);
    c.set_meta("mesh.m_fe", bundle.mesh.m_fe);
    c.set_meta("mesh.gamma", bundle.mesh.gamma);
    c.set_meta("mesh.y_plus", bundle.mesh.y_plus);
    c.set_meta("eim.q", eim.q());
    c.set_meta("eim.exhausted", eim.exhausted);
    c.set_meta("rbm.n_basis", reduced.n_basis());
    c.set_meta("rbm.n_loads", reduced.reduced_loads.len());
    c.set_meta("rbm.trace_len", reduced.trace_snapshots[0].len());
    c.set_meta("rbm.has_nu", reduced.mu_snapshots[0].nu.is_some());
    c.set_meta("cert.present", reduced.cert.is_some());
    c.set_meta("scm.present", bundle.scm.is_some());
    c.set_meta(
        "created_unix",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );
    for (k, v) in extra_meta {
        c.set_meta(k, v);
    }

    let (interp_lower, snapshot_upper, basis_grid) = eim.parts();
    c.push_section("eim.s_snapshots", eim.s_snapshots.clone());
    c.push_section("eim.magic_points", eim.magic_points.clone());
    c.push_section(
        "eim.magic_indices",
        eim.magic_indices.iter().map(|&i| i as f64).collect(),
    );
    c.push_section("eim.y_grid", eim.y_grid.clone());
    c.push_section("eim.s_grid", eim.s_grid.clone());
    c.push_section("eim.interp_lower", matrix_section(interp_lower));
    c.push_section("eim.snapshot_upper", matrix_section(snapshot_upper));
    c.push_section("eim.basis_grid", basis_grid.concat());
    c.push_section("eim.error_history", eim.error_history.clone());

    c.push_section(
        "rbm.mu_s",
        reduced.mu_snapshots.iter().map(|m| m.s).collect(),
    );
    if reduced.mu_snapshots[0].nu.is_some() {
        c.push_section(
            "rbm.mu_nu",
            reduced
                .mu_snapshots
                .iter()
                .map(|m| m.nu.unwrap_or(f64::NAN))
                .collect(),
        );
    }
    let mut ops = Vec::new();
    for op in &reduced.reduced_ops {
        ops.extend(matrix_section(op));
    }
    c.push_section("rbm.reduced_ops", ops);
    let mut loads = Vec::new();
    for load in &reduced.reduced_loads {
        loads.extend(load.iter().copied());
    }
    c.push_section("rbm.reduced_loads", loads);
    c.push_section("rbm.trace_snapshots", reduced.trace_snapshots.concat());
    c.push_section("rbm.basis_r", matrix_section(&reduced.basis_r));
    c.push_section("rbm.greedy_objectives", reduced.greedy_objectives.clone());
    if let Some(cert) = &reduced.cert {
        c.push_section("cert.riesz_r", matrix_section(&cert.riesz_r));
        c.set_meta("cert.n_loads", cert.n_loads);
        c.set_meta("cert.n_terms", cert.n_terms);
    }

    if let Some(scm) = &bundle.scm {
        c.push_section("scm.sigma_lo", scm.sigma_lo.clone());
        c.push_section("scm.sigma_hi", scm.sigma_hi.clone());
        c.push_section(
            "scm.anchor",
            vec![
                scm.anchor_s,
                scm.anchor_beta,
                scm.anchor_pert_abs,
                scm.anchor_pert_rel,
                scm.y_plus,
            ],
        );
        c.push_section(
            "scm.constraint_s",
            scm.constraints.iter().map(|c| c.mu.s).collect(),
        );
        c.push_section(
            "scm.constraint_nu",
            scm.constraints
                .iter()
                .map(|c| c.mu.nu.unwrap_or(f64::NAN))
                .collect(),
        );
        c.push_section(
            "scm.constraint_beta",
            scm.constraints.iter().map(|c| c.beta_hat).collect(),
        );
        let mut thetas = Vec::new();
        let mut rayleighs = Vec::new();
        for con in &scm.constraints {
            thetas.extend(con.theta_scaled.iter().copied());
            rayleighs.extend(con.rayleigh.iter().copied());
        }
        c.push_section("scm.constraint_theta", thetas);
        c.push_section("scm.constraint_rayleigh", rayleighs);
    }
    c
}

/// Rebuilds a bundle from a container.
pub fn bundle_from_container(c: &Container) -> Result<ModelBundle> {
    let subdomain = Subdomain::parse(c.meta("subdomain")?)?;
    let rhs = rhs_from_string(c.meta("rhs")?)?;
    let mesh = MeshParams {
        n: c.meta_parse("mesh.n")?,
        m_fe: c.meta_parse("mesh.m_fe")?,
        gamma: c.meta_parse("mesh.gamma")?,
        y_plus: c.meta_parse("mesh.y_plus")?,
    };
    let q: usize = c.meta_parse("eim.q")?;
    let n_basis: usize = c.meta_parse("rbm.n_basis")?;
    let n_loads: usize = c.meta_parse("rbm.n_loads")?;
    let trace_len: usize = c.meta_parse("rbm.trace_len")?;
    let has_nu: bool = c.meta_parse("rbm.has_nu")?;

    let y_grid = c.section("eim.y_grid")?.to_vec();
    let basis_flat = c.section("eim.basis_grid")?;
    if basis_flat.len() != q * y_grid.len() {
        return Err(Error::Format(format!(
            "section `eim.basis_grid` has {} entries, expected {q} x {}",
            basis_flat.len(),
            y_grid.len()
        )));
    }
    let basis_grid: Vec<Vec<f64>> = basis_flat
        .chunks_exact(y_grid.len())
        .map(|c| c.to_vec())
        .collect();
    let eim = EimModel::from_parts(
        subdomain,
        c.section("eim.s_snapshots")?.to_vec(),
        c.section("eim.magic_points")?.to_vec(),
        c.section("eim.magic_indices")?
            .iter()
            .map(|&v| v as usize)
            .collect(),
        y_grid,
        c.section("eim.s_grid")?.to_vec(),
        matrix_from_section(c.section("eim.interp_lower")?, q, q, "eim.interp_lower")?,
        matrix_from_section(c.section("eim.snapshot_upper")?, q, q, "eim.snapshot_upper")?,
        basis_grid,
        c.section("eim.error_history")?.to_vec(),
        c.meta_parse("eim.exhausted")?,
    );

    let mu_s = c.section("rbm.mu_s")?;
    let mu_snapshots: Vec<Parameter> = if has_nu {
        let mu_nu = c.section("rbm.mu_nu")?;
        mu_s.iter()
            .zip(mu_nu)
            .map(|(&s, &nu)| Parameter::with_nu(s, nu))
            .collect()
    } else {
        mu_s.iter().map(|&s| Parameter::new(s)).collect()
    };
    let ops_flat = c.section("rbm.reduced_ops")?;
    if ops_flat.len() != q * n_basis * n_basis {
        return Err(Error::Format(format!(
            "section `rbm.reduced_ops` has {} entries, expected {q} x {n_basis}^2",
            ops_flat.len()
        )));
    }
    let reduced_ops: Vec<DMatrix<f64>> = ops_flat
        .chunks_exact(n_basis * n_basis)
        .map(|chunk| matrix_from_section(chunk, n_basis, n_basis, "rbm.reduced_ops").unwrap())
        .collect();
    let loads_flat = c.section("rbm.reduced_loads")?;
    if loads_flat.len() != n_loads * n_basis {
        return Err(Error::Format(format!(
            "section `rbm.reduced_loads` has {} entries, expected {n_loads} x {n_basis}",
            loads_flat.len()
        )));
    }
    let reduced_loads: Vec<DVector<f64>> = loads_flat
        .chunks_exact(n_basis)
        .map(DVector::from_row_slice)
        .collect();
    let traces_flat = c.section("rbm.trace_snapshots")?;
    if traces_flat.len() != n_basis * trace_len {
        return Err(Error::Format(format!(
            "section `rbm.trace_snapshots` has {} entries, expected {n_basis} x {trace_len}",
            traces_flat.len()
        )));
    }
    let trace_snapshots: Vec<Vec<f64>> = traces_flat
        .chunks_exact(trace_len)
        .map(|c| c.to_vec())
        .collect();
    let cert = if c.meta_parse::<bool>("cert.present")? {
        let n_terms: usize = c.meta_parse("cert.n_terms")?;
        let cert_loads: usize = c.meta_parse("cert.n_loads")?;
        let dim = cert_loads + n_basis * n_terms;
        Some(CertificationBlock {
            n_loads: cert_loads,
            n_terms,
            riesz_r: matrix_from_section(c.section("cert.riesz_r")?, dim, dim, "cert.riesz_r")?,
        })
    } else {
        None
    };
    let reduced = ReducedModel {
        subdomain,
        rhs,
        eim: Arc::new(eim),
        mu_snapshots,
        reduced_ops,
        reduced_loads,
        trace_snapshots,
        basis_r: matrix_from_section(c.section("rbm.basis_r")?, n_basis, n_basis, "rbm.basis_r")?,
        greedy_objectives: c.section("rbm.greedy_objectives")?.to_vec(),
        cert,
    };

    let scm = if c.meta_parse::<bool>("scm.present")? {
        let anchor = c.section("scm.anchor")?;
        if anchor.len() != 5 {
            return Err(Error::Format(
                "section `scm.anchor` must have 5 entries".into(),
            ));
        }
        let betas = c.section("scm.constraint_beta")?;
        let ss = c.section("scm.constraint_s")?;
        let nus = c.section("scm.constraint_nu")?;
        let thetas = c.section("scm.constraint_theta")?;
        let rayleighs = c.section("scm.constraint_rayleigh")?;
        let k = betas.len();
        if ss.len() != k || nus.len() != k || thetas.len() != k * q || rayleighs.len() != k * q {
            return Err(Error::Format(
                "inconsistent stability constraint sections".into(),
            ));
        }
        let constraints = (0..k)
            .map(|i| ScmConstraint {
                mu: if nus[i].is_nan() {
                    Parameter::new(ss[i])
                } else {
                    Parameter::with_nu(ss[i], nus[i])
                },
                theta_scaled: thetas[i * q..(i + 1) * q].to_vec(),
                beta_hat: betas[i],
                rayleigh: rayleighs[i * q..(i + 1) * q].to_vec(),
            })
            .collect();
        Some(ScmModel {
            sigma_lo: c.section("scm.sigma_lo")?.to_vec(),
            sigma_hi: c.section("scm.sigma_hi")?.to_vec(),
            constraints,
            anchor_s: anchor[0],
            anchor_beta: anchor[1],
            anchor_pert_abs: anchor[2],
            anchor_pert_rel: anchor[3],
            y_plus: anchor[4],
        })
    } else {
        None
    };

    Ok(ModelBundle { mesh, reduced, scm })
}

impl ModelBundle {
    /// Reassembles the truth problem this bundle was trained on (same mesh,
    /// same interpolation model, same right-hand side).
    pub fn rebuild_problem(&self, options: crate::fem::SolverOptions) -> Result<crate::fem::TruthProblem> {
        let tri = crate::mesh::build_unit_square_triangulation(self.mesh.n)?;
        let interval = crate::mesh::build_graded_partition(
            self.mesh.m_fe,
            self.mesh.gamma,
            self.mesh.y_plus,
        )?;
        let mesh = Arc::new(crate::mesh::build_cylinder_mesh(tri, interval));
        crate::fem::TruthProblem::new(
            mesh,
            self.reduced.eim.clone(),
            self.reduced.rhs.clone(),
            options,
        )
    }
}

pub fn save_bundle(
    bundle: &ModelBundle,
    path: &Path,
    extra_meta: &[(String, String)],
) -> Result<()> {
    bundle_to_container(bundle, extra_meta).save(path)
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    bundle_from_container(&Container::load(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn container_round_trip_bitexact() {
        let mut c = Container::default();
        c.set_meta("alpha", "1");
        c.set_meta("name", "desk run");
        c.push_section("a", vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300]);
        c.push_section("b", vec![]);
        let bytes = c.to_bytes();
        let back = Container::from_bytes(&bytes).unwrap();
        assert_eq!(back.metadata, c.metadata);
        assert_eq!(back.sections.len(), 2);
        for ((n0, d0), (n1, d1)) in c.sections.iter().zip(&back.sections) {
            assert_eq!(n0, n1);
            assert_eq!(d0.len(), d1.len());
            for (a, b) in d0.iter().zip(d1) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn truncation_names_the_section() {
        let mut c = Container::default();
        c.push_section("first", vec![1.0; 4]);
        c.push_section("payload", vec![2.0; 16]);
        let bytes = c.to_bytes();
        let cut = bytes.len() - 40; // inside the `payload` data block
        let err = Container::from_bytes(&bytes[..cut]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("payload"), "unhelpful message: {msg}");
    }

    #[test]
    fn version_bump_rejected() {
        let mut c = Container::default();
        c.push_section("x", vec![1.0]);
        let mut bytes = c.to_bytes();
        bytes[4] = FORMAT_VERSION as u8 + 1;
        let err = Container::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn checksum_corruption_detected() {
        let mut c = Container::default();
        c.push_section("x", vec![1.0, 2.0, 3.0]);
        let mut bytes = c.to_bytes();
        let idx = bytes.len() - 20;
        bytes[idx] ^= 0x40;
        let err = Container::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn rhs_strings_round_trip() {
        for rhs in [
            RhsDescription::Example1,
            RhsDescription::Example2,
            RhsDescription::Modal(vec![(2, 2, 0.5), (3, 1, -1.25)]),
        ] {
            let text = rhs_to_string(&rhs);
            assert_eq!(rhs_from_string(&text).unwrap(), rhs);
        }
        assert!(rhs_from_string("nope").is_err());
        assert!(rhs_from_string("modal:1,2").is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_containers_round_trip(
            names in proptest::collection::vec("[a-z.]{1,12}", 5),
            data in proptest::collection::vec(
                proptest::collection::vec(proptest::num::f64::ANY, 0..32), 5),
            meta_vals in proptest::collection::vec("[ -<>-~]{0,20}", 0..4),
        ) {
            let mut c = Container::default();
            for (i, v) in meta_vals.iter().enumerate() {
                c.set_meta(&format!("k{i}"), v);
            }
            for (name, d) in names.iter().zip(&data) {
                c.push_section(name, d.clone());
            }
            let back = Container::from_bytes(&c.to_bytes()).unwrap();
            prop_assert_eq!(&back.metadata, &c.metadata);
            prop_assert_eq!(back.sections.len(), c.sections.len());
            for ((n0, d0), (n1, d1)) in c.sections.iter().zip(&back.sections) {
                prop_assert_eq!(n0, n1);
                prop_assert_eq!(d0.len(), d1.len());
                for (a, b) in d0.iter().zip(d1) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
