//! Append-only density-count cache.
//!
//! One record per line:
//!
//! ```text
//! qfz1 <form-hash> <n> <p> <k> <count> <crc32>
//! ```
//!
//! where the CRC is computed over everything before it.  Records never
//! change once written; rewriting the same key is idempotent.  A lock file
//! enforces the single-writer rule between processes.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub form_hash: String,
    pub n: i128,
    pub p: u64,
    pub k: u32,
}

#[derive(Debug, Default)]
pub struct CacheVerifyReport {
    pub total_records: usize,
    /// 1-based line numbers of corrupt records
    pub bad_lines: Vec<usize>,
}

#[derive(Debug, Default)]
pub struct CacheStats {
    /// (p, k) -> record count
    pub by_pk: Vec<((u64, u32), usize)>,
    pub total: usize,
}

/// In-memory view of the on-disk record log.
#[derive(Debug)]
pub struct DensityCache {
    path: Option<PathBuf>,
    map: HashMap<CacheKey, u128>,
}

fn record_body(key: &CacheKey, count: u128) -> String {
    format!("qfz1 {} {} {} {} {}", key.form_hash, key.n, key.p, key.k, count)
}

fn crc_of(body: &str) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(body.as_bytes());
    h.finalize()
}

fn parse_line(line: &str) -> Option<(CacheKey, u128)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "qfz1" {
        return None;
    }
    let key = CacheKey {
        form_hash: fields[1].to_string(),
        n: fields[2].parse().ok()?,
        p: fields[3].parse().ok()?,
        k: fields[4].parse().ok()?,
    };
    let count: u128 = fields[5].parse().ok()?;
    let crc: u32 = u32::from_str_radix(fields[6], 16).ok()?;
    if crc_of(&record_body(&key, count)) != crc {
        return None;
    }
    Some((key, count))
}

impl DensityCache {
    /// Purely in-memory cache (no persistence).
    pub fn in_memory() -> Self {
        DensityCache { path: None, map: HashMap::new() }
    }

    /// Open (or create) a cache file, loading every valid record.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let mut map = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(path)?;
            for line in text.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                if let Some((key, count)) = parse_line(line) {
                    map.insert(key, count);
                }
            }
        }
        Ok(DensityCache { path: Some(path.to_path_buf()), map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, key: &CacheKey) -> Option<u128> {
        self.map.get(key).copied()
    }

    /// Insert and append to disk (idempotent for repeated keys).
    pub fn put(&mut self, key: CacheKey, count: u128) -> std::io::Result<()> {
        if self.map.get(&key) == Some(&count) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let body = record_body(&key, count);
            let line = format!("{} {:08x}\n", body, crc_of(&body));
            let _lock = FileLock::acquire(path)?;
            let mut fh = OpenOptions::new().create(true).append(true).open(path)?;
            fh.write_all(line.as_bytes())?;
        }
        self.map.insert(key, count);
        Ok(())
    }

    /// Scan the file and report corrupt records.
    pub fn verify(path: &Path) -> std::io::Result<CacheVerifyReport> {
        let mut report = CacheVerifyReport::default();
        if !path.exists() {
            return Ok(report);
        }
        let text = fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            report.total_records += 1;
            if parse_line(line).is_none() {
                report.bad_lines.push(i + 1);
            }
        }
        Ok(report)
    }

    /// Record counts grouped by `(p, k)`.
    pub fn stats(&self) -> CacheStats {
        let mut by: HashMap<(u64, u32), usize> = HashMap::new();
        for key in self.map.keys() {
            *by.entry((key.p, key.k)).or_default() += 1;
        }
        let mut by_pk: Vec<_> = by.into_iter().collect();
        by_pk.sort();
        CacheStats { by_pk, total: self.map.len() }
    }

    pub fn clear(path: &Path) -> std::io::Result<()> {
        if path.exists() {
            fs::write(path, b"")?;
        }
        Ok(())
    }
}

struct FileLock {
    path: PathBuf,
}

impl FileLock {
    fn acquire(target: &Path) -> std::io::Result<FileLock> {
        let path = target.with_extension("lock");
        for _ in 0..200 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(FileLock { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    std::thread::sleep(std::time::Duration::from_millis(10));
                }
                Err(e) => return Err(e),
            }
        }
        Err(std::io::Error::new(std::io::ErrorKind::TimedOut, "cache lock busy"))
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(n: i128, p: u64, k: u32) -> CacheKey {
        CacheKey { form_hash: "abc123".into(), n, p, k }
    }

    #[test]
    fn roundtrip_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.cache");
        {
            let mut c = DensityCache::open(&path).unwrap();
            c.put(key(1, 3, 1), 72).unwrap();
            c.put(key(1, 3, 1), 72).unwrap(); // idempotent
            c.put(key(-2, 5, 2), 123456).unwrap();
        }
        let c = DensityCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&key(1, 3, 1)), Some(72));
        assert_eq!(c.get(&key(-2, 5, 2)), Some(123456));
        // single line per unique record
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn corruption_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.cache");
        {
            let mut c = DensityCache::open(&path).unwrap();
            c.put(key(1, 3, 1), 72).unwrap();
            c.put(key(2, 3, 1), 90).unwrap();
        }
        // flip one byte in the middle of the first record
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[10] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();
        let report = DensityCache::verify(&path).unwrap();
        assert_eq!(report.total_records, 2);
        assert_eq!(report.bad_lines.len(), 1);
    }

    #[test]
    fn stats_and_clear() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.cache");
        let mut c = DensityCache::open(&path).unwrap();
        assert!(c.is_empty());
        c.put(key(1, 3, 1), 1).unwrap();
        c.put(key(2, 3, 1), 2).unwrap();
        c.put(key(1, 5, 2), 3).unwrap();
        let stats = c.stats();
        assert_eq!(stats.total, 3);
        assert_eq!(stats.by_pk, vec![((3, 1), 2), ((5, 2), 1)]);
        DensityCache::clear(&path).unwrap();
        assert!(DensityCache::open(&path).unwrap().is_empty());
    }
}
