//! Reading series and writing outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{InputFormat, PipelineConfig};
use crate::error::{CliError, CliResult};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve_format(path: &Path, format: InputFormat) -> InputFormat {
    if format != InputFormat::Auto {
        return format;
    }
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("f32") => InputFormat::F32,
        Some("f64") | Some("bin") => InputFormat::F64,
        _ => InputFormat::Csv,
    }
}

/// Parses one numeric column (CSV) or a raw little-endian float dump.
pub fn parse_series(path: &Path, bytes: &[u8], cfg: &PipelineConfig) -> CliResult<Vec<f64>> {
    match resolve_format(path, cfg.input_format) {
        InputFormat::F32 => raw_floats::<4>(path, bytes, |b| f32::from_le_bytes(b) as f64),
        InputFormat::F64 => raw_floats::<8>(path, bytes, f64::from_le_bytes),
        InputFormat::Csv | InputFormat::Auto => parse_csv(path, bytes, cfg),
    }
}

fn raw_floats<const W: usize>(path: &Path, bytes: &[u8], conv: impl Fn([u8; W]) -> f64) -> CliResult<Vec<f64>> {
    if !bytes.len().is_multiple_of(W) {
        return Err(CliError::io(path, format!("length {} is not a multiple of {W}", bytes.len())));
    }
    Ok(bytes.chunks_exact(W).map(|c| conv(c.try_into().expect("exact chunk"))).collect())
}

fn parse_csv(path: &Path, bytes: &[u8], cfg: &PipelineConfig) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(cfg.skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = record
            .get(cfg.column)
            .ok_or_else(|| CliError::io(path, format!("record {i} has no column {}", cfg.column)))?;
        let x: f64 = field
            .parse()
            .map_err(|_| CliError::io(path, format!("record {i}: cannot parse {field:?} as a number")))?;
        out.push(x);
    }
    Ok(out)
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

/// Writes a header plus rows of pre-formatted fields.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<PathBuf> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::io(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e))?;
    write_atomic(path, &bytes)?;
    Ok(path.to_path_buf())
}

/// Series files of a batch directory in file-name order.
pub fn list_batch(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("csv" | "txt" | "dat" | "f32" | "f64" | "bin")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

/// File stem used as the sample id in batch outputs.
pub fn sample_id(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("sample").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn csv_column_and_header() {
        let cfg = PipelineConfig { column: 1, skip_header: true, ..Default::default() };
        let got = parse_series(Path::new("x.csv"), b"t,v\n0,1.5\n1, -2\n\n2,3e-1\n", &cfg).unwrap();
        assert_eq!(got, vec![1.5, -2.0, 0.3]);
        let bad = parse_series(Path::new("x.csv"), b"1\nabc\n", &PipelineConfig::default());
        assert_eq!(bad.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn raw_binary() {
        let bytes: Vec<u8> = [1.0f32, -0.5].iter().flat_map(|x| x.to_le_bytes()).collect();
        assert_eq!(parse_series(Path::new("s.f32"), &bytes, &PipelineConfig::default()).unwrap(), vec![1.0, -0.5]);
        let bytes: Vec<u8> = [2.25f64].iter().flat_map(|x| x.to_le_bytes()).collect();
        assert_eq!(parse_series(Path::new("s.f64"), &bytes, &PipelineConfig::default()).unwrap(), vec![2.25]);
        assert!(parse_series(Path::new("s.f64"), &bytes[..5], &PipelineConfig::default()).is_err());
    }
}
