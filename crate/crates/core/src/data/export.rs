use std::path::Path;

use super::{Dataset, Examples};
use crate::error::Result;

/// One row per example: `label` (empty when unlabeled) then the feature or pixel values.
pub fn write_dataset_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = match ds.examples() {
        Examples::Vectors(m) => m.cols(),
        Examples::Images(v) => v.first().map_or(0, |i| i.pixels().len()),
    };
    let mut header = vec!["label".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec = vec![ds.labels().map_or(String::new(), |l| l[i].to_string())];
        match ds.examples() {
            Examples::Vectors(m) => rec.extend(m.row(i).iter().map(f64::to_string)),
            Examples::Images(v) => rec.extend(v[i].pixels().iter().map(f32::to_string)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_gaussians;

    #[test]
    fn csv_round_trips_values() {
        let ds = synth_gaussians(2, 3, 2, 1.0, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_dataset_csv(&ds, &path).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["label", "x0", "x1"]);
        let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 6);
        let m = ds.vectors().unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0].parse::<usize>().unwrap(), ds.labels().unwrap()[i]);
            assert_eq!(row[1].parse::<f64>().unwrap(), m.row(i)[0]);
        }
    }
}
