//! On-disk day store: a JSONL file with a header line carrying the fleet
//! configuration, then one episodic day per line.

use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use evcoord_core::{EpisodeDay, FleetConfig};

#[derive(Serialize, Deserialize)]
struct DaysHeader {
    version: u32,
    kind: String,
    fleet: FleetConfig,
}

pub fn write_days<W: Write>(mut w: W, days: &[EpisodeDay], cfg: &FleetConfig) -> Result<()> {
    let header = DaysHeader {
        version: 1,
        kind: "episode-days".into(),
        fleet: cfg.clone(),
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for day in days {
        serde_json::to_writer(&mut w, day)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn days_to_bytes(days: &[EpisodeDay], cfg: &FleetConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_days(&mut buf, days, cfg)?;
    Ok(buf)
}

pub fn load_days(path: &Path) -> Result<(Vec<EpisodeDay>, FleetConfig)> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open days file {}", path.display()))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header_line = lines
        .next()
        .context("days file is empty; expected a header line")??;
    let header: DaysHeader =
        serde_json::from_str(&header_line).context("bad days file header")?;
    if header.kind != "episode-days" {
        bail!("not a days file: kind {:?}", header.kind);
    }
    if header.version != 1 {
        bail!("unsupported days file version {}", header.version);
    }
    let mut days = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let day: EpisodeDay = serde_json::from_str(&line)
            .with_context(|| format!("bad day record on line {}", i + 2))?;
        days.push(day);
    }
    Ok((days, header.fleet))
}
