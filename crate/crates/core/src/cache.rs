//! On-disk cache of canonical tables, one JSON file per `(d, r)`.
//!
//! Files carry a format version; a file with any other version, or one that fails to
//! parse or to pass the structural check, is treated as absent and overwritten.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_basis, BarInvolution, CanonError, CanonicalTable};
use crate::repmod::Composition;

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "QSL2_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Entry {
    version: u32,
    table: CanonicalTable,
}

#[derive(Deserialize)]
struct VersionOnly {
    version: u32,
}

#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The directory named by [`CACHE_DIR_ENV`], if set and nonempty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, d: &Composition, r: usize) -> PathBuf {
        let parts: Vec<String> = d.parts().iter().map(usize::to_string).collect();
        self.dir.join(format!(
            "canon-v{FORMAT_VERSION}-d{}-r{r}.json",
            parts.join("_")
        ))
    }

    pub fn load(&self, d: &Composition, r: usize) -> Option<CanonicalTable> {
        let text = fs::read_to_string(self.path(d, r)).ok()?;
        let version: VersionOnly = serde_json::from_str(&text).ok()?;
        if version.version != FORMAT_VERSION {
            return None;
        }
        let entry: Entry = serde_json::from_str(&text).ok()?;
        let t = entry.table;
        (t.ambient() == d && t.level() == r && t.check_structure().is_ok()).then_some(t)
    }

    pub fn store(&self, table: &CanonicalTable) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(table.ambient(), table.level());
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let entry = Entry {
            version: FORMAT_VERSION,
            table: table.clone(),
        };
        fs::write(
            &tmp,
            serde_json::to_string(&entry).map_err(io::Error::other)?,
        )?;
        fs::rename(&tmp, &path)
    }

    /// Loads the table, or computes and stores it. A failed write is not an error.
    pub fn get_or_compute(
        &self,
        bar: &BarInvolution,
        d: &Composition,
        r: usize,
    ) -> Result<CanonicalTable, CanonError> {
        if let Some(t) = self.load(d, r) {
            return Ok(t);
        }
        let t = canonical_basis(bar, d, r)?;
        let _ = self.store(&t);
        Ok(t)
    }
}
