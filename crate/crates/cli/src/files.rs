use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use unicirc::{SquareMatrix, C64};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

/// Parses the target-matrix text layout: the dimension on the first line,
/// then `dim²` lines `re im` in row-major order. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_matrix(text: &str) -> unicirc::Result<SquareMatrix> {
    let perr = |m: String| unicirc::Error::Parse(m);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, first) = lines.next().ok_or_else(|| perr("empty matrix file".into()))?;
    let dim: usize = first
        .parse()
        .map_err(|_| perr(format!("line {line}: expected the dimension, got `{first}`")))?;
    if dim == 0 {
        return Err(perr(format!("line {line}: dimension must be positive")));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [re, im] = fields[..] else {
            return Err(perr(format!("line {line}: expected `re im`, got `{content}`")));
        };
        let number = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| perr(format!("line {line}: `{s}` is not a finite number")))
        };
        data.push(C64::new(number(re)?, number(im)?));
    }
    if data.len() != dim * dim {
        return Err(perr(format!(
            "expected {} entries for dimension {dim}, found {}",
            dim * dim,
            data.len()
        )));
    }
    SquareMatrix::from_vec(data)
}

/// Inverse of [`parse_matrix`]; the shortest round-trip float formatting
/// keeps every bit.
pub fn format_matrix(m: &SquareMatrix) -> String {
    let mut out = format!("{}\n", m.dim());
    for z in m.as_slice() {
        out.push_str(&format!("{:?} {:?}\n", z.re, z.im));
    }
    out
}

/// Resolves a relative output path against the output directory.
pub fn output_path(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir.join(path)
    }
}

/// `result.json` → `result.json.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn absolute(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
