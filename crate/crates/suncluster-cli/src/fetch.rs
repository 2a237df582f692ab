//! Download client for the public measurement-station CSVs.
//!
//! One file per month from a URL template. Files already present with a
//! matching recorded hash are skipped, so re-runs are idempotent and
//! `--offline` succeeds once everything is cached. The download backend is
//! injectable so the retry/idempotence logic is testable without network.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use suncluster::config::FetchConfig;

#[derive(Debug)]
pub enum FetchError {
    Config(String),
    Io(std::io::Error),
    /// Some files could not be fetched; lists what succeeded and what is
    /// still missing.
    Incomplete {
        completed: Vec<String>,
        missing: Vec<String>,
        detail: String,
    },
}

impl std::fmt::Display for FetchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FetchError::Config(msg) => write!(f, "fetch configuration: {msg}"),
            FetchError::Io(e) => write!(f, "fetch i/o: {e}"),
            FetchError::Incomplete { completed, missing, detail } => write!(
                f,
                "fetch incomplete: {} files ok, missing [{}]; last error: {detail}",
                completed.len(),
                missing.join(", ")
            ),
        }
    }
}

impl std::error::Error for FetchError {}

impl From<std::io::Error> for FetchError {
    fn from(e: std::io::Error) -> Self {
        FetchError::Io(e)
    }
}

/// Fetch backend: bytes for a URL, or an error message.
pub trait Downloader {
    fn get(&self, url: &str) -> Result<Vec<u8>, String>;
}

/// Blocking HTTP backend with retry and exponential backoff.
pub struct HttpDownloader {
    pub attempts: u32,
    pub base_backoff: Duration,
}

impl Default for HttpDownloader {
    fn default() -> Self {
        Self { attempts: 3, base_backoff: Duration::from_millis(500) }
    }
}

impl Downloader for HttpDownloader {
    fn get(&self, url: &str) -> Result<Vec<u8>, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| e.to_string())?;
        let mut delay = self.base_backoff;
        let mut last = String::from("no attempts made");
        for attempt in 0..self.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match client.get(url).send() {
                Ok(response) if response.status().is_success() => {
                    return response
                        .bytes()
                        .map(|b| b.to_vec())
                        .map_err(|e| format!("{url}: {e}"));
                }
                Ok(response) => last = format!("{url}: http {}", response.status()),
                Err(e) => last = format!("{url}: {e}"),
            }
            log::warn!("attempt {} failed: {last}", attempt + 1);
        }
        Err(last)
    }
}

/// Backend for `--offline`: any required download is an error.
pub struct OfflineDownloader;

impl Downloader for OfflineDownloader {
    fn get(&self, url: &str) -> Result<Vec<u8>, String> {
        Err(format!("offline mode forbids fetching {url}"))
    }
}

/// (file name, url) for every month in the configured range.
pub fn month_files(config: &FetchConfig) -> Result<Vec<(String, String)>, FetchError> {
    let parse = |s: &str| -> Result<(i32, u32), FetchError> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| FetchError::Config(format!("month {s:?} is not YYYY-MM")))?;
        let year: i32 = y
            .parse()
            .map_err(|_| FetchError::Config(format!("bad year in {s:?}")))?;
        let month: u32 = m
            .parse()
            .map_err(|_| FetchError::Config(format!("bad month in {s:?}")))?;
        if !(1..=12).contains(&month) {
            return Err(FetchError::Config(format!("month {month} out of range in {s:?}")));
        }
        Ok((year, month))
    };
    let (mut year, mut month) = parse(&config.start)?;
    let (end_year, end_month) = parse(&config.end)?;
    if (year, month) > (end_year, end_month) {
        return Err(FetchError::Config(format!(
            "start {} is after end {}",
            config.start, config.end
        )));
    }
    let mut files = Vec::new();
    loop {
        let url = config
            .url_template
            .replace("{year}", &year.to_string())
            .replace("{month}", &format!("{month:02}"));
        files.push((format!("{year}-{month:02}.csv"), url));
        if (year, month) == (end_year, end_month) {
            break;
        }
        month += 1;
        if month > 12 {
            month = 1;
            year += 1;
        }
    }
    Ok(files)
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub downloaded: Vec<String>,
    pub skipped: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest_path(dest: &Path) -> std::path::PathBuf {
    dest.join("manifest.json")
}

fn load_manifest(dest: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(manifest_path(dest))
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok())
        .unwrap_or_default()
}

fn save_manifest(dest: &Path, manifest: &BTreeMap<String, String>) -> Result<(), FetchError> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| FetchError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(manifest_path(dest), text)?;
    Ok(())
}

/// Fetch every configured month into `dest`, skipping files already present
/// with a matching recorded hash.
pub fn fetch_all(
    config: &FetchConfig,
    dest: &Path,
    downloader: &dyn Downloader,
) -> Result<FetchOutcome, FetchError> {
    let files = month_files(config)?;
    std::fs::create_dir_all(dest)?;
    let mut manifest = load_manifest(dest);
    let mut outcome = FetchOutcome::default();
    let mut missing: Vec<String> = Vec::new();
    let mut last_error = String::new();

    for (name, url) in &files {
        let path = dest.join(name);
        if path.exists() {
            let on_disk = sha256_hex(&std::fs::read(&path)?);
            match manifest.get(name) {
                Some(recorded) if *recorded == on_disk => {
                    outcome.skipped.push(name.clone());
                    continue;
                }
                Some(_) => {
                    log::warn!("{name} no longer matches its recorded hash; re-fetching");
                }
                None => {
                    // adopt a pre-existing file into the manifest
                    manifest.insert(name.clone(), on_disk);
                    outcome.skipped.push(name.clone());
                    continue;
                }
            }
        }
        match downloader.get(url) {
            Ok(bytes) => {
                let hash = sha256_hex(&bytes);
                if let Some(recorded) = manifest.get(name) {
                    if *recorded != hash {
                        log::warn!("{name}: content changed upstream (stale local data?)");
                    }
                }
                std::fs::write(&path, &bytes)?;
                manifest.insert(name.clone(), hash);
                outcome.downloaded.push(name.clone());
            }
            Err(detail) => {
                last_error = detail;
                missing.push(name.clone());
            }
        }
    }

    save_manifest(dest, &manifest)?;
    if !missing.is_empty() {
        let mut completed = outcome.downloaded;
        completed.extend(outcome.skipped);
        return Err(FetchError::Incomplete { completed, missing, detail: last_error });
    }
    Ok(outcome)
}
