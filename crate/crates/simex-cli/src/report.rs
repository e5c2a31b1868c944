//! CSV emission and parsing, plus the run summary.
//!
//! Convergence CSVs carry `method,tableau,filter,h,error,status`; the 2D
//! study adds grid index and wall time; region maps serialize the raw
//! amplification grid with 17 significant digits so re-parsing recovers
//! the exact f64 values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use simex_core::stability::RegionMap;

use crate::experiments::{
    ConvergencePoint, ConvergenceRecord, Method, Pde2dOutput, Pde2dPoint, Pde2dRecord, RunStatus,
    StabilityRecord,
};

/// Shortest representation that round-trips (Rust's default float Display).
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Fixed 17-significant-digit form used for region grids.
fn fmt_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_convergence_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["method", "tableau", "filter", "h", "error", "status"])?;
    for rec in records {
        for p in &rec.points {
            w.write_record([
                rec.method.as_str(),
                &rec.tableau,
                &rec.filter,
                &fmt_f64(p.h),
                &p.error.map(fmt_f64).unwrap_or_default(),
                p.status.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Re-parse an emitted convergence CSV into records (grouped in file
/// order); slopes are not recomputed.
pub fn read_convergence_csv(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut records: Vec<ConvergenceRecord> = Vec::new();
    for row in r.records() {
        let row = row?;
        let method = Method::parse(&row[0])?;
        let tableau = row[1].to_string();
        let filter = row[2].to_string();
        let h: f64 = row[3].parse()?;
        let error: Option<f64> =
            if row[4].is_empty() { None } else { Some(row[4].parse()?) };
        let status = RunStatus::parse(&row[5])?;
        let point = ConvergencePoint { h, error, status };
        match records.last_mut() {
            Some(last) if last.method == method && last.tableau == tableau && last.filter == filter => {
                last.points.push(point)
            }
            _ => records.push(ConvergenceRecord {
                method,
                tableau,
                filter,
                points: vec![point],
                slope: None,
                slope_points: 0,
            }),
        }
    }
    Ok(records)
}

pub fn write_pde2d_csv(path: &Path, records: &[Pde2dRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["method", "filter", "j", "h", "error", "seconds", "status"])?;
    for rec in records {
        for p in &rec.points {
            w.write_record([
                rec.method.as_str(),
                &rec.filter,
                &p.j.to_string(),
                &fmt_f64(p.h),
                &p.error.map(fmt_f64).unwrap_or_default(),
                &fmt_f64(p.seconds),
                p.status.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pde2d_csv(path: &Path) -> Result<Vec<Pde2dRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut records: Vec<Pde2dRecord> = Vec::new();
    for row in r.records() {
        let row = row?;
        let method = Method::parse(&row[0])?;
        let filter = row[1].to_string();
        let point = Pde2dPoint {
            j: row[2].parse()?,
            h: row[3].parse()?,
            error: if row[4].is_empty() { None } else { Some(row[4].parse()?) },
            seconds: row[5].parse()?,
            status: RunStatus::parse(&row[6])?,
        };
        match records.last_mut() {
            Some(last) if last.method == method && last.filter == filter => {
                last.points.push(point)
            }
            _ => records.push(Pde2dRecord { method, filter, points: vec![point] }),
        }
    }
    Ok(records)
}

/// `re,im,amplification` rows in row-major order (imaginary index slowest),
/// 17 significant digits.
pub fn write_region_csv(path: &Path, map: &RegionMap) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["re", "im", "amplification"])?;
    let (n_re, n_im) = map.resolution;
    for iy in 0..n_im {
        for ix in 0..n_re {
            w.write_record([
                fmt_f64_17(map.re_coord(ix)),
                fmt_f64_17(map.im_coord(iy)),
                fmt_f64_17(map.value(ix, iy)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Values of an emitted region CSV, in file order.
pub fn read_region_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        out.push((row[0].parse()?, row[1].parse()?, row[2].parse()?));
    }
    Ok(out)
}

pub fn write_contours_csv(path: &Path, map: &RegionMap) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["contour_id", "re", "im"])?;
    for (id, line) in map.contours.iter().enumerate() {
        for &(re, im) in line {
            w.write_record([id.to_string(), fmt_f64_17(re), fmt_f64_17(im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// File-name-safe form of a filter designation: `ilu(0.02)` → `ilu_0.02`.
pub fn sanitize_name(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '(' | ',' => '_',
            ')' => '\0',
            c => c,
        })
        .filter(|&c| c != '\0')
        .collect()
}

pub struct Summary {
    lines: Vec<String>,
}

impl Summary {
    pub fn new() -> Self {
        Self { lines: Vec::new() }
    }

    pub fn push(&mut self, line: impl Into<String>) {
        let line = line.into();
        println!("{line}");
        self.lines.push(line);
    }

    pub fn convergence(&mut self, command: &str, records: &[ConvergenceRecord]) {
        for rec in records {
            let slope = rec
                .slope
                .map(|s| format!("{s:.3}"))
                .unwrap_or_else(|| "n/a".to_string());
            let completed = rec
                .points
                .iter()
                .filter(|p| p.status == RunStatus::Completed)
                .count();
            self.push(format!(
                "{command} method={} tableau={} filter={} slope={slope} slope_points={} completed={}/{}",
                rec.method.as_str(),
                rec.tableau,
                rec.filter,
                rec.slope_points,
                completed,
                rec.points.len(),
            ));
        }
    }

    pub fn stability(&mut self, records: &[StabilityRecord]) {
        for rec in records {
            let real = rec
                .real_crossing
                .map(|x| format!("{x:.4}"))
                .unwrap_or_else(|| "none-in-window".to_string());
            let imag = rec
                .imag_crossing
                .map(|x| format!("{x:.4}"))
                .unwrap_or_else(|| "none-in-window".to_string());
            self.push(format!(
                "stability-region tableau={} filter={} real_axis_crossing={real} imag_axis_crossing={imag} contours={}",
                rec.tableau,
                rec.filter,
                rec.map.contours.len(),
            ));
        }
    }

    pub fn pde2d(&mut self, out: &Pde2dOutput) {
        for (method, j, filter, error) in &out.best {
            self.push(format!(
                "pde2d best-stable method={} j={j} filter={filter} error={error:.6e}",
                method.as_str()
            ));
        }
        let slope = out
            .simex_best_slope
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|| "n/a".to_string());
        self.push(format!("pde2d simex_best_slope={slope}"));
        self.push(format!("pde2d ilu_fill_ratio={:.4}", out.ilu_fill_ratio));
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("summary.txt");
        fs::write(&path, self.lines.join("\n") + "\n")?;
        Ok(path)
    }
}

impl Default for Summary {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_makes_flat_names() {
        assert_eq!(sanitize_name("ilu(0.02)"), "ilu_0.02");
        assert_eq!(sanitize_name("gs(5,0.9)"), "gs_5_0.9");
        assert_eq!(sanitize_name("default"), "default");
    }

    #[test]
    fn convergence_csv_round_trips_exactly() {
        let rec = ConvergenceRecord {
            method: Method::Simex,
            tableau: "ark548".into(),
            filter: "gs(5,0.9)".into(),
            points: vec![
                ConvergencePoint {
                    h: 0.1,
                    error: Some(1.234567890123456e-7),
                    status: RunStatus::Completed,
                },
                ConvergencePoint { h: 0.05, error: None, status: RunStatus::Unstable },
            ],
            slope: None,
            slope_points: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_convergence_csv(&path, &[rec.clone()]).unwrap();
        let back = read_convergence_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].filter, rec.filter);
        assert_eq!(back[0].points, rec.points);
    }
}
