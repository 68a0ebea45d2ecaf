//! A library of pieces stored as a flat directory of `.pm` files.
//!
//! The files are the source of truth. An optional `playlist.json` may give
//! a preferred order and display names:
//!
//! ```json
//! { "order": ["relaxing", "night"], "titles": { "night": "Night Walk" } }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::{parse_spec, CompositionSpec, ParseError};

pub const SPEC_EXTENSION: &str = "pm";
pub const MANIFEST_FILE: &str = "playlist.json";
const MAX_ID_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum PlaylistError {
    #[error("library directory `{0}` does not exist")]
    DirectoryMissing(PathBuf),
    #[error("`{0}` is not a valid piece id")]
    InvalidId(String),
    #[error("no piece with id `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaylistEntry {
    pub id: String,
    pub spec: CompositionSpec,
    /// Exact file contents.
    pub spec_text: String,
    pub file_path: PathBuf,
    pub display_name: Option<String>,
    pub keywords: BTreeSet<String>,
    pub excluded: bool,
}

impl PlaylistEntry {
    pub fn title(&self) -> &str {
        self.display_name.as_deref().unwrap_or(&self.spec.title)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerConfig {
    pub length_ms: usize,
    pub streams_k: usize,
    pub stagger_s: f64,
    pub excluded_keywords: BTreeSet<String>,
}

impl Default for PlayerConfig {
    fn default() -> Self {
        PlayerConfig {
            length_ms: 120,
            streams_k: 3,
            stagger_s: 3.0,
            excluded_keywords: BTreeSet::new(),
        }
    }
}

/// A file that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    pub message: String,
}

#[derive(Debug, Default, Deserialize)]
struct Manifest {
    #[serde(default)]
    order: Vec<String>,
    #[serde(default)]
    titles: BTreeMap<String, String>,
}

/// Ids are 1 to 64 characters from `[A-Za-z0-9_-]`, not starting with `-`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && !id.starts_with('-')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    dir: PathBuf,
    entries: Vec<PlaylistEntry>,
    diagnostics: Vec<Diagnostic>,
}

/// Loads every `.pm` file in `dir`. Unreadable or invalid files become
/// diagnostics; the rest are sorted by id, then by the manifest order if any.
pub fn load_library(dir: impl AsRef<Path>) -> Result<Library, PlaylistError> {
    let mut library = Library {
        dir: dir.as_ref().to_path_buf(),
        entries: Vec::new(),
        diagnostics: Vec::new(),
    };
    library.reload()?;
    Ok(library)
}

impl Library {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[PlaylistEntry] {
        &self.entries
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn get(&self, id: &str) -> Option<&PlaylistEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Re-reads the directory, keeping the current exclusion flags.
    pub fn reload(&mut self) -> Result<(), PlaylistError> {
        if !self.dir.is_dir() {
            return Err(PlaylistError::DirectoryMissing(self.dir.clone()));
        }
        let excluded: BTreeSet<String> = self
            .entries
            .iter()
            .filter(|e| e.excluded)
            .map(|e| e.id.clone())
            .collect();
        let manifest = self.read_manifest();
        let mut entries = Vec::new();
        let mut diagnostics = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == SPEC_EXTENSION) && p.is_file())
            .collect();
        paths.sort();
        for path in paths {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !is_valid_id(&id) {
                diagnostics.push(Diagnostic {
                    file: path,
                    message: format!("`{id}` is not a valid piece id"),
                });
                continue;
            }
            match read_entry(&id, &path) {
                Ok(mut entry) => {
                    entry.display_name = manifest.titles.get(&id).cloned();
                    entry.excluded = excluded.contains(&id);
                    entries.push(entry);
                }
                Err(e) => diagnostics.push(Diagnostic {
                    file: path,
                    message: e.to_string(),
                }),
            }
        }
        diagnostics.extend(manifest_error(&self.dir));
        self.entries = entries;
        self.diagnostics = diagnostics;
        self.sort(&manifest);
        Ok(())
    }

    fn read_manifest(&self) -> Manifest {
        fs::read_to_string(self.dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_default()
    }

    fn sort(&mut self, manifest: &Manifest) {
        let rank = |id: &str| {
            manifest
                .order
                .iter()
                .position(|o| o == id)
                .unwrap_or(usize::MAX)
        };
        self.entries
            .sort_by(|a, b| rank(&a.id).cmp(&rank(&b.id)).then_with(|| a.id.cmp(&b.id)));
    }

    /// Writes `spec_text` as `<id>.pm` (via a temporary file and rename) and
    /// adds or replaces the entry.
    pub fn upsert(&mut self, id: &str, spec_text: &str) -> Result<PlaylistEntry, PlaylistError> {
        if !is_valid_id(id) {
            return Err(PlaylistError::InvalidId(id.to_string()));
        }
        let spec = parse_spec(spec_text)?;
        let path = self.dir.join(format!("{id}.{SPEC_EXTENSION}"));
        let tmp = self.dir.join(format!(".{id}.{SPEC_EXTENSION}.tmp"));
        fs::write(&tmp, spec_text)?;
        if let Err(e) = fs::rename(&tmp, &path) {
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        let manifest = self.read_manifest();
        let previous = self.get(id).map(|e| e.excluded).unwrap_or(false);
        let entry = PlaylistEntry {
            id: id.to_string(),
            keywords: spec.keywords.clone(),
            spec,
            spec_text: spec_text.to_string(),
            file_path: path,
            display_name: manifest.titles.get(id).cloned(),
            excluded: previous,
        };
        self.entries.retain(|e| e.id != id);
        self.entries.push(entry.clone());
        self.sort(&manifest);
        Ok(entry)
    }

    /// Every keyword used by any entry.
    pub fn keywords(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .flat_map(|e| e.keywords.iter().cloned())
            .collect()
    }

    /// Marks entries whose keywords meet `excluded_keywords`.
    pub fn apply_filters(&mut self, excluded_keywords: &BTreeSet<String>) {
        for e in &mut self.entries {
            e.excluded = !e.keywords.is_disjoint(excluded_keywords);
        }
    }
}

fn manifest_error(dir: &Path) -> Option<Diagnostic> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).ok()?;
    serde_json::from_str::<Manifest>(&text)
        .err()
        .map(|e| Diagnostic {
            file: path,
            message: e.to_string(),
        })
}

fn read_entry(id: &str, path: &Path) -> Result<PlaylistEntry, PlaylistError> {
    let spec_text = fs::read_to_string(path)?;
    let spec = parse_spec(&spec_text)?;
    Ok(PlaylistEntry {
        id: id.to_string(),
        keywords: spec.keywords.clone(),
        spec,
        spec_text,
        file_path: path.to_path_buf(),
        display_name: None,
        excluded: false,
    })
}

/// Entries to play for "play all", in library order, skipping every entry
/// with a keyword in `config.excluded_keywords`.
pub fn play_all_queue<'a>(
    entries: &'a [PlaylistEntry],
    config: &PlayerConfig,
) -> Vec<&'a PlaylistEntry> {
    entries
        .iter()
        .filter(|e| e.keywords.is_disjoint(&config.excluded_keywords))
        .collect()
}
