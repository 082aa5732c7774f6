//! Versioned CSV cache for [`BoundsTable`]s.
//!
//! Files are named after the cache version, the window policy, the scale and
//! `n_max`, and hold the header `n,lower_p_num,lower_q_num,scale` followed by
//! one row for every `n >= 2`.

use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rug::Integer;

use super::{run_bounds_with, BoundsTable, Progress, WindowPolicy};
use crate::error::{Error, Result};

pub const CACHE_VERSION: u32 = 1;

const HEADER: [&str; 4] = ["n", "lower_p_num", "lower_q_num", "scale"];

/// Rows up to this `n` are recomputed and compared whenever a cache is read.
const SPOT_CHECK_N: u32 = 40;

pub fn cache_file_name(scale: &Integer, n_max: u32, policy: WindowPolicy) -> String {
    format!("bounds-v{CACHE_VERSION}-{policy}-scale{scale}-n{n_max}.csv")
}

fn parse_file_name(name: &str) -> Option<(WindowPolicy, Integer, u32)> {
    let rest = name
        .strip_prefix(&format!("bounds-v{CACHE_VERSION}-"))?
        .strip_suffix(".csv")?;
    let (policy, rest) = rest.split_once("-scale")?;
    let (scale, n) = rest.rsplit_once("-n")?;
    Some((WindowPolicy::from_name(policy)?, scale.parse().ok()?, n.parse().ok()?))
}

/// Serialize the table (rows `n = 2..=n_max`).
pub fn write_table<W: Write>(table: &BoundsTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    let scale = table.scale().to_string();
    for n in 2..=table.n_max() {
        out.write_record([
            n.to_string(),
            table.lower_p_num(n).to_string(),
            table.lower_q_num(n).to_string(),
            scale.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Write the table to `path` through a temporary file and a rename.
pub fn write_cache(table: &BoundsTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let f = fs::File::create(&tmp)?;
        let mut w = std::io::BufWriter::new(f);
        write_table(table, &mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn corrupt(line: usize, reason: impl Into<String>) -> Error {
    Error::CacheIntegrity {
        row: line,
        reason: reason.into(),
    }
}

/// Parse and validate a cached table. Row numbers in errors are file lines
/// (the header is line 1).
pub fn read_table<R: Read>(r: R, policy: WindowPolicy) -> Result<BoundsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| corrupt(1, "empty file"))?
        .map_err(|e| corrupt(1, e.to_string()))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(corrupt(
            1,
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    let mut scale: Option<Integer> = None;
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| corrupt(line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(corrupt(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let field = |j: usize| -> Result<Integer> {
            rec[j]
                .trim()
                .parse::<Integer>()
                .map_err(|_| corrupt(line, format!("field {} is not an integer: {:?}", HEADER[j], &rec[j])))
        };
        let n = field(0)?;
        if n != i as u64 + 2 {
            return Err(corrupt(line, format!("expected n = {}, found {n}", i + 2)));
        }
        let (p, q, s) = (field(1)?, field(2)?, field(3)?);
        if s <= 0 {
            return Err(corrupt(line, "scale must be positive"));
        }
        match &scale {
            None => scale = Some(s.clone()),
            Some(prev) if *prev != s => {
                return Err(corrupt(line, format!("scale {s} differs from {prev}")));
            }
            _ => {}
        }
        if p < 0 || q < 0 {
            return Err(corrupt(line, "negative bound"));
        }
        if Integer::from(&p + &q) > s {
            return Err(corrupt(line, "lower bounds on p and 1-p sum above 1"));
        }
        rows.push((p, q));
    }
    let scale = scale.ok_or_else(|| corrupt(2, "no data rows"))?;
    let table = BoundsTable::from_rows(scale, policy, rows)?;
    spot_check(&table)?;
    Ok(table)
}

/// Recompute the first rows and compare them with the stored ones.
fn spot_check(table: &BoundsTable) -> Result<()> {
    let upto = table.n_max().min(SPOT_CHECK_N);
    if upto < 2 {
        return Ok(());
    }
    let fresh = run_bounds_with(upto, table.scale(), table.policy(), None)?;
    for n in 2..=upto {
        if fresh.lower_p_num(n) != table.lower_p_num(n) || fresh.lower_q_num(n) != table.lower_q_num(n) {
            return Err(corrupt(n as usize, format!("row n={n} does not match a recomputation")));
        }
    }
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<BoundsTable> {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
    let policy = parse_file_name(name)
        .map(|(p, _, _)| p)
        .unwrap_or(WindowPolicy::Widened);
    let f = fs::File::open(path)?;
    read_table(BufReader::new(f), policy)
}

/// The cached file with the smallest `n_max >= n_min` for this scale and policy.
pub fn find_cache(dir: &Path, scale: &Integer, n_min: u32, policy: WindowPolicy) -> Result<Option<PathBuf>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut best: Option<(u32, PathBuf)> = None;
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name();
        let Some((p, s, n)) = name.to_str().and_then(parse_file_name) else {
            continue;
        };
        if p == policy && s == *scale && n >= n_min && best.as_ref().is_none_or(|b| n < b.0) {
            best = Some((n, entry.path()));
        }
    }
    Ok(best.map(|b| b.1))
}

/// Where a table handed out by [`load_or_compute`] came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit(PathBuf),
    Computed(PathBuf),
}

/// Load a cached table covering `n_max`, or compute and store one. A cached
/// table may extend beyond `n_max`. With `force`, always recompute.
pub fn load_or_compute(
    dir: &Path,
    n_max: u32,
    scale: &Integer,
    policy: WindowPolicy,
    force: bool,
    progress: Option<Progress<'_>>,
) -> Result<(BoundsTable, CacheStatus)> {
    if !force {
        if let Some(path) = find_cache(dir, scale, n_max, policy)? {
            let table = read_cache(&path)?;
            return Ok((table, CacheStatus::Hit(path)));
        }
    }
    let table = run_bounds_with(n_max, scale, policy, progress)?;
    let path = dir.join(cache_file_name(scale, n_max, policy));
    write_cache(&table, &path)?;
    Ok((table, CacheStatus::Computed(path)))
}

/// Like [`load_or_compute`], but never computes: a missing cache is an error.
pub fn load_existing(dir: &Path, n_max: u32, scale: &Integer, policy: WindowPolicy) -> Result<BoundsTable> {
    match find_cache(dir, scale, n_max, policy)? {
        Some(path) => read_cache(&path),
        None => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "no bounds cache covering n = {n_max} at scale {scale} in {}",
                dir.display()
            ),
        ))),
    }
}
