use std::path::Path;

use anyhow::Context;
use depdiag_core::interp::TestCase;
use depdiag_core::lang::{check, parse, CheckError, CheckedProgram, SyntaxError};
use sha2::{Digest, Sha256};

use crate::wire::TestFile;

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

pub fn parse_program(name: &str, source: &str) -> Result<CheckedProgram, ProgramError> {
    Ok(check(parse(name, source)?)?)
}

pub fn program_hash(source: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(source.as_bytes())))
}

pub fn read_program(path: &Path) -> anyhow::Result<CheckedProgram> {
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    parse_program(&name, &source).with_context(|| format!("in {}", path.display()))
}

pub fn read_test(path: &Path) -> anyhow::Result<TestCase> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: TestFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.to_test()?)
}
