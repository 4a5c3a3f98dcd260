use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crstokes_core::analysis::AuditConfig;
use crstokes_core::solver::SolverControls;
use crstokes_core::SchemeParams;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Study,
    Verify,
    MeshInfo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Study => "study",
            Command::Verify => "verify",
            Command::MeshInfo => "mesh-info",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// Forcing of the manufactured solution of the chosen mode.
    Manufactured,
    Zero,
}

/// Where the base mesh comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// `nx x ny` right triangles on the unit square.
    Structured { nx: usize, ny: usize },
    File(PathBuf),
}

impl MeshSource {
    /// `"8x8"` (spaces allowed around the `x`) or a file path.
    pub fn parse(s: &str) -> MeshSource {
        let parts: Vec<&str> = s.split('x').map(str::trim).collect();
        if let [a, b] = parts[..] {
            if let (Ok(nx), Ok(ny)) = (a.parse(), b.parse()) {
                return MeshSource::Structured { nx, ny };
            }
        }
        MeshSource::File(PathBuf::from(s))
    }
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Structured { nx: 4, ny: 4 }
    }
}

/// Everything a run depends on. Serialized form is hashed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub params: SchemeParams,
    pub solver: SolverControls,
    /// Manufactured mode for `solve` (with manufactured forcing), `study` and `verify`.
    pub mode: u32,
    /// Factor on the manufactured stream potential.
    pub amplitude: f64,
    pub forcing: Forcing,
    /// Refinement levels for `study` and `verify`.
    pub levels: usize,
    /// Audit knobs other than `levels` and `mode`, which are taken from above.
    pub audit: AuditConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshSource::default(),
            params: SchemeParams::default(),
            solver: SolverControls::default(),
            mode: 0,
            amplitude: 1.0,
            forcing: Forcing::Manufactured,
            levels: 4,
            audit: AuditConfig::default(),
        }
    }
}

const SECTIONS: [&str; 3] = ["params", "solver", "audit"];

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("{origin}: {e}")))
    }

    /// Applies `key=value` overrides. Dotted keys address nested fields
    /// (`solver.tol`); a bare key names a top-level field or, failing that,
    /// a field of exactly one section. Values are read as JSON, falling back to a string.
    pub fn with_overrides(self, overrides: &[String]) -> Result<Self, Failure> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("--param `{item}`: expected key=value")))?;
            let (key, raw) = (key.trim(), raw.trim());
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let path = resolve_key(&tree, key)?;
            let mut slot = &mut tree;
            for part in &path {
                slot = slot.get_mut(part.as_str()).expect("resolved path exists");
            }
            *slot = value;
        }
        serde_json::from_value(tree).map_err(|e| Failure::config(format!("after --param overrides: {e}")))
    }

    /// Makes a relative mesh path absolute against `base` and checks it exists.
    pub fn resolve_paths(&mut self, base: &Path) -> Result<(), Failure> {
        if let MeshSource::File(p) = &mut self.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.is_file() {
                return Err(Failure::config(format!("mesh file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn audit_config(&self) -> AuditConfig {
        AuditConfig { levels: self.levels, mode: self.mode, ..self.audit.clone() }
    }

    /// SHA-256 of the command name and the canonical JSON form of the config.
    pub fn hash(&self, command: Command) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(command.name().as_bytes());
        h.update(b"\n");
        h.update(text.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn resolve_key(tree: &Value, key: &str) -> Result<Vec<String>, Failure> {
    let unknown = || Failure::config(format!("--param: unknown key `{key}`"));
    if key.contains('.') {
        let path: Vec<String> = key.split('.').map(String::from).collect();
        let mut node = tree;
        for part in &path {
            node = node.get(part.as_str()).ok_or_else(unknown)?;
        }
        return Ok(path);
    }
    if tree.get(key).is_some() {
        return Ok(vec![key.to_string()]);
    }
    let mut found = Vec::new();
    for s in SECTIONS {
        if tree[s].get(key).is_some() {
            found.push(vec![s.to_string(), key.to_string()]);
        }
    }
    match found.len() {
        0 => Err(unknown()),
        1 => Ok(found.pop().unwrap()),
        _ => {
            let names: Vec<String> = found.iter().map(|p| p.join(".")).collect();
            Err(Failure::config(format!("--param: `{key}` is ambiguous, use one of {}", names.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_source_forms() {
        assert_eq!(MeshSource::parse("8x4"), MeshSource::Structured { nx: 8, ny: 4 });
        assert_eq!(MeshSource::parse("3 x 3"), MeshSource::Structured { nx: 3, ny: 3 });
        assert_eq!(MeshSource::parse("meshes/box.msh"), MeshSource::File("meshes/box.msh".into()));
    }

    #[test]
    fn overrides_reach_sections() {
        let c = RunConfig::default()
            .with_overrides(&["a=0.25".into(), "solver.tol=1e-9".into(), "forcing=zero".into(), "levels=3".into()])
            .unwrap();
        assert_eq!(c.params.a, 0.25);
        assert_eq!(c.solver.tol, 1e-9);
        assert_eq!(c.forcing, Forcing::Zero);
        assert_eq!(c.levels, 3);
        assert_eq!(c.audit_config().levels, 3);
    }

    #[test]
    fn bad_overrides_rejected() {
        for bad in ["nope=1", "seed=3", "a", "a=\"x\"", "solver.nope=1"] {
            let e = RunConfig::default().with_overrides(&[bad.into()]).unwrap_err();
            assert_eq!(e.code, crate::EXIT_CONFIG, "{bad}");
        }
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let e = RunConfig::from_json("{\n  \"levels\": 3,\n  \"colour\": 1\n}", "cfg.json").unwrap_err();
        assert!(e.message.contains("colour") && e.message.contains("line 3"), "{}", e.message);
        let e = RunConfig::from_json("{\"solver\": {\"tol\": 1e-9, \"tolerance\": 1}}", "cfg.json").unwrap_err();
        assert!(e.message.contains("tolerance"), "{}", e.message);
    }

    #[test]
    fn hash_tracks_content_and_command() {
        let a = RunConfig::default();
        let b = a.clone().with_overrides(&["mode=1".into()]).unwrap();
        assert_eq!(a.hash(Command::Solve), RunConfig::default().hash(Command::Solve));
        assert_ne!(a.hash(Command::Solve), b.hash(Command::Solve));
        assert_ne!(a.hash(Command::Solve), a.hash(Command::Study));
        assert_eq!(a.hash(Command::Solve).len(), 64);
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig::default().with_overrides(&["mesh=\"grid.msh\"".into()]);
        // a bare string is not a valid mesh source; the tagged form is
        assert!(c.is_err());
        let c = RunConfig::default().with_overrides(&[r#"mesh={"file":"grid.msh"}"#.into()]).unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap(), "x").unwrap();
        assert_eq!(back, c);
    }
}
