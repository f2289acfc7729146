//! CSV / JSON serialization of experiment reports.
//!
//! Set-level CSV: `[T,]set_id,variant,n,M,r,proportion_pass,chi2,p_uniform,uniformity_pass`,
//! one row per set per test, ordered by period, test, then set. Floats use
//! the shortest representation that round-trips, so output is byte-stable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ReportFormat;
use crate::harness::experiment::{ExperimentKind, ExperimentReport};

impl ExperimentReport {
    fn has_period(&self) -> bool {
        self.experiment == ExperimentKind::DetectionSweep
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["set_id", "variant", "n", "M", "r", "proportion_pass", "chi2", "p_uniform", "uniformity_pass"];
        if self.has_period() {
            header.insert(0, "T");
        }
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.set_rows {
            let rep = &row.report;
            let mut record = vec![
                row.set_id.to_string(),
                row.variant.to_string(),
                self.n.to_string(),
                rep.m.to_string(),
                rep.r.to_string(),
                rep.proportion_pass.to_string(),
                rep.chi2_stat.to_string(),
                rep.p_uniform.to_string(),
                rep.uniformity_pass.to_string(),
            ];
            if self.has_period() {
                record.insert(0, row.period.unwrap_or_default().to_string());
            }
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-test aggregates, one row per test (and period).
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "variant",
            "pvalues",
            "small_pvalues",
            "proportion_rejections",
            "uniformity_rejections",
            "total_rejections",
            "meta_uniformity",
        ];
        if self.has_period() {
            header.insert(0, "T");
        }
        w.write_record(&header).map_err(csv_error)?;
        for s in &self.summaries {
            let mut record = vec![
                s.variant.to_string(),
                s.pvalues.to_string(),
                s.small_pvalues.to_string(),
                s.proportion_rejections.to_string(),
                s.uniformity_rejections.to_string(),
                s.total_rejections.to_string(),
                s.meta_uniformity.map(|p| p.to_string()).unwrap_or_default(),
            ];
            if self.has_period() {
                record.insert(0, s.period.unwrap_or_default().to_string());
            }
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.into()))
    }

    pub fn write(&self, format: ReportFormat, out: impl Write) -> Result<()> {
        match format {
            ReportFormat::Csv => self.write_csv(out),
            ReportFormat::Json => self.write_json(out),
        }
    }

    pub fn write_to_path(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        self.write(format, &mut w)?;
        w.flush()?;
        Ok(())
    }

    /// One row per sequence: `[T,]set_id,index,hash,<test>...`. Empty unless
    /// the run recorded p-values.
    pub fn write_pvalues_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["set_id", "index", "hash"].map(String::from).to_vec();
        if self.has_period() {
            header.insert(0, "T".into());
        }
        header.extend(self.tests.iter().map(|t| t.to_string()));
        w.write_record(&header).map_err(csv_error)?;
        for row in self.pvalue_rows.iter().flatten() {
            let mut record = vec![row.set_id.to_string(), row.index.to_string(), format!("{:016x}", row.hash)];
            if self.has_period() {
                record.insert(0, row.period.unwrap_or_default().to_string());
            }
            record.extend(row.pvalues.iter().map(|p| p.to_string()));
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable table of the summaries.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# {} n={} M={} sets={} generator={}",
            match self.experiment {
                ExperimentKind::Batch => "batch",
                ExperimentKind::DetectionSweep => "detection sweep",
            },
            self.n,
            self.per_set,
            self.sets,
            self.generator
        )?;
        writeln!(
            out,
            "{:>8} {:>9} {:>10} {:>9} {:>10} {:>10} {:>8} {:>10}",
            "T", "variant", "p<0.01", "fraction", "prop.rej", "unif.rej", "total", "meta-p"
        )?;
        for s in &self.summaries {
            writeln!(
                out,
                "{:>8} {:>9} {:>10} {:>9.5} {:>10} {:>10} {:>8} {:>10}",
                s.period.map_or_else(|| "-".to_string(), |t| t.to_string()),
                s.variant,
                s.small_pvalues,
                s.small_fraction(),
                s.proportion_rejections,
                s.uniformity_rejections,
                s.total_rejections,
                s.meta_uniformity.map_or_else(|| "-".to_string(), |p| format!("{:.6}", p.value())),
            )?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}

#[cfg(test)]
mod tests {
    use crate::dftt::TestKind;
    use crate::generators::{GeneratorSpec, PeriodicDefect};
    use crate::harness::config::ExperimentConfig;
    use crate::harness::experiment::{run_batch, run_detection_sweep};

    fn config() -> ExperimentConfig {
        ExperimentConfig::new(vec![TestKind::Kim, TestKind::Proposed], 128, 20, 2, GeneratorSpec::Mt19937 { seed: 3 })
    }

    #[test]
    fn batch_csv_schema() {
        let report = run_batch(&config()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "set_id,variant,n,M,r,proportion_pass,chi2,p_uniform,uniformity_pass");
        assert_eq!(lines.count(), 4);
        assert!(text.contains("\n0,kim,128,20,"));
    }

    #[test]
    fn sweep_csv_has_period_column() {
        let mut c = config();
        c.periods = vec![PeriodicDefect::new(8).unwrap()];
        let report = run_detection_sweep(&c).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,set_id,variant,n,M,"));
        assert!(text.contains("\n8,0,kim,128,20,"));
        let mut buf = Vec::new();
        report.write_summary_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("T,variant,pvalues,"));
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let report = run_batch(&config()).unwrap();
        let mut buf = Vec::new();
        report.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let row = &v["set_rows"][0];
        for key in ["set_id", "variant", "m", "r", "proportion_pass", "chi2_stat", "p_uniform", "uniformity_pass", "bin_counts"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert!(row.get("T").is_none());
        assert_eq!(v["M"], 20);
        assert_eq!(v["n"], 128);
    }

    #[test]
    fn pvalue_dump_lists_every_sequence() {
        let mut c = config();
        c.record_pvalues = true;
        let report = run_batch(&c).unwrap();
        let mut buf = Vec::new();
        report.write_pvalues_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("set_id,index,hash,kim,proposed\n"));
        assert_eq!(text.lines().count(), 41);
    }
}
