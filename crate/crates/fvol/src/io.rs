//! Dataset and report file formats: wide curve CSV with a one-column grid
//! sidecar, `id,y,delta` response CSV, and report writers with a
//! `#`-prefixed header block.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use crate::error::{FvolError, Result};
use crate::estimator::EstimatorConfig;
use crate::fda::{Curve, FdaDataset, FdaObservation, Grid};
use crate::model::VolEstimate;

fn schema_error(file: &str, line: usize, message: impl Into<String>) -> FvolError {
    FvolError::SchemaError {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// One grid point per line, no header.
pub fn write_grid(mut out: impl Write, grid: &Grid) -> Result<()> {
    for p in grid.points() {
        writeln!(out, "{p}")?;
    }
    Ok(())
}

pub fn read_grid(input: impl Read) -> Result<Grid> {
    let mut points = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        points.push(
            t.parse::<f64>()
                .map_err(|_| schema_error("grid", i + 1, format!("bad grid point `{t}`")))?,
        );
    }
    Grid::new(points)
}

/// Wide format: header `id,l_1,...,l_p`, one row per curve.
pub fn write_curves_csv(out: impl Write, ids: &[String], curves: &[Curve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let p = curves.first().map(|c| c.grid().len()).unwrap_or(0);
    let mut header = vec!["id".to_string()];
    header.extend((1..=p).map(|j| format!("l_{j}")));
    w.write_record(&header)?;
    for (id, c) in ids.iter().zip(curves) {
        let mut row = vec![id.clone()];
        row.extend(c.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv(input: impl Read, grid: Arc<Grid>) -> Result<(Vec<String>, Vec<Curve>)> {
    let mut rdr = csv::Reader::from_reader(input);
    {
        let headers = rdr.headers()?;
        if headers.is_empty() || &headers[0] != "id" {
            return Err(schema_error("curves", 1, "expected header `id,l_1,...`"));
        }
        if headers.len() != grid.len() + 1 {
            return Err(schema_error(
                "curves",
                1,
                format!(
                    "curve columns ({}) do not match grid length ({})",
                    headers.len() - 1,
                    grid.len()
                ),
            ));
        }
    }
    let mut ids = Vec::new();
    let mut curves = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        ids.push(record[0].to_string());
        let values = record
            .iter()
            .skip(1)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| schema_error("curves", line, format!("bad value `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        curves.push(Curve::new(grid.clone(), values)?);
    }
    Ok((ids, curves))
}

/// Responses: `id,y,delta`; the `y` field is empty exactly when `delta=0`.
pub fn write_responses_csv(out: impl Write, ids: &[String], data: &FdaDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "y", "delta"])?;
    for (id, obs) in ids.iter().zip(data.observations()) {
        let y = obs.y().map(|y| y.to_string()).unwrap_or_default();
        let delta = if obs.delta() { "1" } else { "0" };
        w.write_record([id.as_str(), &y, delta])?;
    }
    w.flush()?;
    Ok(())
}

type ResponseRow = (String, Option<f64>, bool);

pub fn read_responses_csv(input: impl Read) -> Result<Vec<ResponseRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    {
        let headers = rdr.headers()?;
        if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "y" || &headers[2] != "delta"
        {
            return Err(schema_error("responses", 1, "expected header `id,y,delta`"));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let delta = match record.get(2).unwrap_or("").trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(schema_error(
                    "responses",
                    line,
                    format!("delta must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let raw = record.get(1).unwrap_or("").trim();
        let y = if raw.is_empty() {
            if delta {
                return Err(schema_error("responses", line, "empty y with delta=1"));
            }
            None
        } else {
            if !delta {
                return Err(schema_error("responses", line, "y present with delta=0"));
            }
            Some(
                raw.parse::<f64>()
                    .map_err(|_| schema_error("responses", line, format!("bad y `{raw}`")))?,
            )
        };
        rows.push((record[0].to_string(), y, delta));
    }
    Ok(rows)
}

/// Assemble the three files into a dataset; curve and response rows are
/// matched by id, in curve-file order.
pub fn read_dataset(
    curves: impl Read,
    grid: impl Read,
    responses: impl Read,
) -> Result<(Vec<String>, FdaDataset)> {
    let grid = Arc::new(read_grid(grid)?);
    let (ids, curves) = read_curves_csv(curves, grid)?;
    let rows = read_responses_csv(responses)?;
    if rows.len() != ids.len() {
        return Err(schema_error(
            "responses",
            1,
            format!("{} response rows for {} curves", rows.len(), ids.len()),
        ));
    }
    let mut observations = Vec::with_capacity(ids.len());
    for ((id, curve), (rid, y, delta)) in ids.iter().zip(curves).zip(rows) {
        if *id != rid {
            return Err(schema_error(
                "responses",
                1,
                format!("id mismatch: curve `{id}` vs response `{rid}`"),
            ));
        }
        observations.push(match (y, delta) {
            (Some(y), true) => FdaObservation::observed(curve, y)?,
            (None, false) => FdaObservation::missing(curve),
            _ => unreachable!("invariant enforced while parsing"),
        });
    }
    Ok((ids, FdaDataset::new(observations)?))
}

/// `#`-prefixed free-form header block for report files.
pub fn write_comment_header(mut out: impl Write, lines: &[String]) -> Result<()> {
    for line in lines {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Standard header lines: version, bandwidths, and extras.
pub fn report_header(cfg: &EstimatorConfig, extra: &[String]) -> Vec<String> {
    let mut lines = vec![
        format!("fvol {}", env!("CARGO_PKG_VERSION")),
        format!(
            "bandwidths: h1={} h2={} h3={} h4={}",
            cfg.h1, cfg.h2, cfg.h3, cfg.h4
        ),
        format!(
            "kernels: {}/{}/{}/{}",
            cfg.kernel_k.name(),
            cfg.kernel_w.name(),
            cfg.kernel_h.name(),
            cfg.kernel_htilde.name()
        ),
    ];
    lines.extend(extra.iter().cloned());
    lines
}

/// Per-point CI report with a comment header.
pub fn write_estimates_csv(
    mut out: impl Write,
    header: &[String],
    ids: &[String],
    estimates: &[VolEstimate],
) -> Result<()> {
    write_comment_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "x_id", "u_hat", "ci_low", "ci_high", "omega_hat", "pi_hat", "m1_hat", "m2_hat", "f_hat",
    ])?;
    for (id, e) in ids.iter().zip(estimates) {
        w.write_record([
            id.clone(),
            e.u_hat.to_string(),
            e.ci_low.to_string(),
            e.ci_high.to_string(),
            e.components.omega_hat.to_string(),
            e.components.pi_hat.to_string(),
            e.components.m1_hat.to_string(),
            e.components.m2_hat.to_string(),
            e.components.f_hat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dataset() -> (Vec<String>, FdaDataset) {
        let g = Arc::new(Grid::uniform(0.0, 1.0, 5).unwrap());
        let obs = vec![
            FdaObservation::observed(Curve::from_fn(g.clone(), |l| l).unwrap(), 1.5).unwrap(),
            FdaObservation::missing(Curve::from_fn(g.clone(), |l| 2.0 * l).unwrap()),
            FdaObservation::observed(Curve::from_fn(g, |l| l * l).unwrap(), -0.25).unwrap(),
        ];
        (
            vec!["a".into(), "b".into(), "c".into()],
            FdaDataset::new(obs).unwrap(),
        )
    }

    #[test]
    fn dataset_round_trip() {
        let (ids, data) = sample_dataset();
        let curves: Vec<Curve> = data.curves().cloned().collect();
        let mut cbuf = Vec::new();
        write_curves_csv(&mut cbuf, &ids, &curves).unwrap();
        let mut gbuf = Vec::new();
        write_grid(&mut gbuf, data.grid()).unwrap();
        let mut rbuf = Vec::new();
        write_responses_csv(&mut rbuf, &ids, &data).unwrap();

        let (ids2, data2) =
            read_dataset(cbuf.as_slice(), gbuf.as_slice(), rbuf.as_slice()).unwrap();
        assert_eq!(ids, ids2);
        assert_eq!(data.len(), data2.len());
        for (a, b) in data.observations().iter().zip(data2.observations()) {
            assert_eq!(a.y(), b.y());
            assert_eq!(a.delta(), b.delta());
            assert_eq!(a.x.values(), b.x.values());
        }
    }

    #[test]
    fn response_invariants_enforced() {
        let bad = "id,y,delta\na,,1\n";
        assert!(matches!(
            read_responses_csv(bad.as_bytes()),
            Err(FvolError::SchemaError { line: 2, .. })
        ));
        let bad = "id,y,delta\na,3.0,0\n";
        assert!(read_responses_csv(bad.as_bytes()).is_err());
        let ok = "id,y,delta\na,,0\nb,2.5,1\n";
        let rows = read_responses_csv(ok.as_bytes()).unwrap();
        assert_eq!(rows[0], ("a".into(), None, false));
        assert_eq!(rows[1], ("b".into(), Some(2.5), true));
    }

    #[test]
    fn comment_header_is_prefixed() {
        let mut buf = Vec::new();
        write_comment_header(&mut buf, &["one".into(), "two".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# one\n# two\n");
    }

    #[test]
    fn grid_mismatch_is_schema_error() {
        let g = Arc::new(Grid::uniform(0.0, 1.0, 4).unwrap());
        let csv = "id,l_1,l_2,l_3\nx,1,2,3\n";
        assert!(matches!(
            read_curves_csv(csv.as_bytes(), g),
            Err(FvolError::SchemaError { .. })
        ));
    }
}
