use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Writes `body` to `dir/name` through a temporary file in `dir` and a
/// rename, so readers never see a partial artifact.
pub fn write_atomic(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let target = dir.join(name);
    let mut tmp = temp_in(dir).map_err(io)?;
    tmp.write_all(body.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

/// Temporary file that will end up with ordinary `rw-r--r--` permissions
/// rather than the private default.
fn temp_in(dir: &Path) -> std::io::Result<NamedTempFile> {
    let mut b = tempfile::Builder::new();
    b.prefix(".gaussdyn-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        b.permissions(std::fs::Permissions::from_mode(0o644));
    }
    b.tempfile_in(dir)
}
