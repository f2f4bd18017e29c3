//! `stats` — per-domain rule and statement counts.

use std::path::{Path, PathBuf};

use anyhow::Result;

use longtail_core::dataset::dataset_stats;
use longtail_core::rule::Domain;

use crate::io::{load_records, write_text};

pub fn run(records_paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let records = load_records(records_paths)?;
    let stats = dataset_stats(&records);
    println!("{:<22} {:>6} {:>8} {:>8}", "Domain", "Rules", "Head", "Tail");
    for row in stats.rows.iter().chain(std::iter::once(&stats.total)) {
        let label = row.domain.map(Domain::label).unwrap_or("Total");
        println!("{label:<22} {:>6} {:>8} {:>8}", row.rules, row.head, row.tail);
    }
    if let Some(out) = out {
        let path = out.join("stats.csv");
        write_text(&path, &stats.to_csv())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
