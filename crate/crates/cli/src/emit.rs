//! Plot-ready CSV and JSON writers. Numbers are written with Rust's
//! round-trip float formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use givar::select::{SelectionReport, SelectionRow};
use givar::spectral::{PairGrid, SpectralGrid, TaperSpec, TimeSeries};
use givar::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::InvalidData(format!("{}: {e}", path.display()))
}

/// Sidecar describing a spectral export: `{d, N, taper}`.
#[derive(Serialize)]
pub struct SpectraMeta {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub taper: TaperSpec,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Spectral matrix entries on the upper triangle (a <= b), one row per
/// (frequency, pair): `freq_index,lambda,a,b,re,im`.
pub fn write_spectra_csv(path: &Path, grid: &SpectralGrid) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "freq_index,lambda,a,b,re,im").map_err(io_err(path))?;
    for j in 0..grid.len() {
        let lambda = grid.freq(j);
        let m = grid.value(j);
        for a in 0..grid.dim() {
            for b in a..grid.dim() {
                let z = m[(a, b)];
                writeln!(w, "{j},{lambda},{a},{b},{},{}", z.re, z.im).map_err(io_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

/// Pairwise coherence-style values: `freq_index,lambda,a,b,re,im,abs`.
pub fn write_pair_csv(
    path: &Path,
    pairs: &PairGrid,
    lambda_of: impl Fn(usize) -> f64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "freq_index,lambda,a,b,re,im,abs").map_err(io_err(path))?;
    for &(a, b) in pairs.pairs() {
        let values = pairs.pair(a, b).expect("listed pair");
        for (j, z) in values.iter().enumerate() {
            writeln!(
                w,
                "{j},{},{a},{b},{},{},{}",
                lambda_of(j),
                z.re,
                z.im,
                z.norm()
            )
            .map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Simulated series: header row of labels, one row per time point.
pub fn write_series_csv(path: &Path, x: &TimeSeries) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", x.labels().join(",")).map_err(io_err(path))?;
    for t in 0..x.len() {
        let row: Vec<String> = (0..x.dim()).map(|a| x.value(t, a).to_string()).collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn format_edges(row: &SelectionRow) -> String {
    row.graph
        .edges()
        .map(|(a, b)| format!("{a}-{b}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Ranked model table: `rank,p,edges,q,bic,loglik,converged,cycles,note`.
pub fn write_selection_csv(path: &Path, report: &SelectionReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "rank,p,edges,q,bic,loglik,converged,cycles,note").map_err(io_err(path))?;
    for (rank, row) in report.rows.iter().enumerate() {
        let bic = row.bic.map(|b| b.to_string()).unwrap_or_default();
        let loglik = row.loglik.map(|l| l.to_string()).unwrap_or_default();
        let note = row.note.clone().unwrap_or_default().replace(',', ";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            rank + 1,
            row.p,
            format_edges(row),
            row.q,
            bic,
            loglik,
            row.converged,
            row.cycles,
            note
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
