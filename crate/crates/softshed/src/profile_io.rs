//! Cleaned demand profiles on disk: `household_id,demand_kwh`.

use std::io::{Read, Write};

use softshed_core::DemandProfile;

use crate::ingest::{IngestError, Result};

pub const PROFILE_HEADER: [&str; 2] = ["household_id", "demand_kwh"];

pub fn write_profile<W: Write>(profile: &DemandProfile, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(PROFILE_HEADER)?;
    for (id, d) in profile.household_ids().iter().zip(profile.demands()) {
        writer.write_record([id.as_str(), &d.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_profile<R: Read>(source: R) -> Result<DemandProfile> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().map(str::trim).ne(PROFILE_HEADER) {
        return Err(IngestError::Header(format!(
            "expected {PROFILE_HEADER:?}, got {headers:?}"
        )));
    }
    let mut ids = Vec::new();
    let mut demands = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(1).unwrap_or("").trim();
        let d: f64 = raw.parse().map_err(|_| {
            softshed_core::Error::InvalidDemand(format!("line {}: bad demand {raw:?}", k + 2))
        })?;
        ids.push(record.get(0).unwrap_or("").trim().to_string());
        demands.push(d);
    }
    if ids.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(DemandProfile::new(ids, demands)?)
}
