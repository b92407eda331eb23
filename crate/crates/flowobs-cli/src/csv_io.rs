//! CSV emission and ingestion.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so an
//! emit-then-ingest cycle reproduces every value bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{bail, Context, Result};
use flowobs_core::battery::Trajectory;
use flowobs_core::observer::{MeasurementSample, ObserverTrace};

pub const MEASUREMENT_HEADER: [&str; 4] = ["time_min", "v_out_V", "current_A", "flow_L_per_min"];

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Writes a measurement stream with the canonical header.
pub fn write_measurements(path: &Path, samples: &[MeasurementSample]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(MEASUREMENT_HEADER)?;
    for s in samples {
        w.write_record([fmt(s.time), fmt(s.v_out), fmt(s.current), fmt(s.flow_rate)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a measurement stream, validating the header, per-row arity,
/// finiteness and strictly increasing time stamps. Errors name the
/// offending row (1-based, header excluded).
pub fn read_measurements(path: &Path) -> Result<Vec<MeasurementSample>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    {
        let header = r.headers().context("reading CSV header")?;
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got != MEASUREMENT_HEADER {
            bail!(
                "bad CSV header: expected {:?}, found {:?}",
                MEASUREMENT_HEADER.join(","),
                got.join(",")
            );
        }
    }
    let mut samples = Vec::new();
    for (idx, record) in r.records().enumerate() {
        let row = idx + 1;
        let record = record.with_context(|| format!("reading CSV row {row}"))?;
        if record.len() != 4 {
            bail!("row {row}: expected 4 columns, found {}", record.len());
        }
        let mut vals = [0.0f64; 4];
        for (k, field) in record.iter().enumerate() {
            vals[k] = field
                .trim()
                .parse()
                .with_context(|| format!("row {row}: bad float `{field}`"))?;
            if !vals[k].is_finite() {
                bail!("row {row}: non-finite value `{field}`");
            }
        }
        let sample = MeasurementSample {
            time: vals[0],
            v_out: vals[1],
            current: vals[2],
            flow_rate: vals[3],
        };
        if let Some(prev) = samples.last() {
            let prev: &MeasurementSample = prev;
            if sample.time <= prev.time {
                bail!(
                    "row {row}: time {} does not increase past {}",
                    sample.time,
                    prev.time
                );
            }
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        bail!("measurement CSV {} has no data rows", path.display());
    }
    Ok(samples)
}

/// Writes a simulated plant trajectory.
pub fn write_truth(path: &Path, truth: &Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["time_min", "soc", "soc_cell", "crossover_mol_per_min", "v_out_V"])?;
    for s in &truth.samples {
        w.write_record([
            fmt(s.time),
            fmt(s.state.soc),
            fmt(s.state.soc_cell),
            fmt(s.crossover_flux),
            fmt(s.v_out),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an observer trace; the chain columns follow the configured order.
pub fn write_trace(path: &Path, trace: &ObserverTrace) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let order_l = trace
        .records
        .first()
        .map(|r| r.x_hat.len() - 2)
        .unwrap_or(0);
    let mut header = vec!["time_min".to_string(), "soc_hat".into(), "soc_cell_hat".into(), "theta_hat".into()];
    for k in 2..=order_l {
        header.push(format!("omega{k}_hat"));
    }
    header.push("y_hat".into());
    header.push("y_tilde".into());
    header.push("qx_hat_mol_per_min".into());
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![fmt(r.time)];
        for v in r.x_hat.iter() {
            row.push(fmt(*v));
        }
        row.push(fmt(r.y_hat));
        row.push(fmt(r.y_tilde));
        row.push(fmt(r.qx_hat));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn measurement_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let samples = vec![
            MeasurementSample {
                time: 0.0,
                v_out: 2.8546565912361567,
                current: 0.0,
                flow_rate: 0.009,
            },
            MeasurementSample {
                time: 1.0 / 3.0,
                v_out: 2.2 + 1e-16,
                current: -0.25,
                flow_rate: 5.6142e-8,
            },
        ];
        write_measurements(&path, &samples).unwrap();
        let back = read_measurements(&path).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.time.to_bits(), b.time.to_bits());
            assert_eq!(a.v_out.to_bits(), b.v_out.to_bits());
            assert_eq!(a.current.to_bits(), b.current.to_bits());
            assert_eq!(a.flow_rate.to_bits(), b.flow_rate.to_bits());
        }
    }

    #[test]
    fn rejects_bad_header_and_names_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "time,voltage").unwrap();
        writeln!(f, "0,2.2").unwrap();
        drop(f);
        let err = read_measurements(&path).unwrap_err();
        assert!(err.to_string().contains("bad CSV header"), "{err}");

        let path2 = dir.path().join("rows.csv");
        let mut f = File::create(&path2).unwrap();
        writeln!(f, "{}", MEASUREMENT_HEADER.join(",")).unwrap();
        writeln!(f, "0,2.2,0,0.009").unwrap();
        writeln!(f, "1,abc,0,0.009").unwrap();
        drop(f);
        let err = read_measurements(&path2).unwrap_err();
        assert!(format!("{err:#}").contains("row 2"), "{err:#}");
    }

    #[test]
    fn rejects_non_monotone_time_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{}", MEASUREMENT_HEADER.join(",")).unwrap();
        writeln!(f, "0,2.2,0,0.009").unwrap();
        writeln!(f, "2,2.2,0,0.009").unwrap();
        writeln!(f, "1,2.2,0,0.009").unwrap();
        drop(f);
        let err = read_measurements(&path).unwrap_err();
        assert!(format!("{err:#}").contains("row 3"), "{err:#}");

        let empty = dir.path().join("e.csv");
        let mut f = File::create(&empty).unwrap();
        writeln!(f, "{}", MEASUREMENT_HEADER.join(",")).unwrap();
        drop(f);
        assert!(read_measurements(&empty).is_err());
    }
}
