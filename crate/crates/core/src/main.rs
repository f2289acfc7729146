use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use specvar::bitseq::{parse_all_bits, BitFormat, BitSequence};
use specvar::generators::{inject_periodic, GeneratorSpec, SequenceSource};
use specvar::harness::{empirical_cdf, run_batch, run_detection_sweep, ExperimentConfig, Settings};
use specvar::spectral::dft_power;
use specvar::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(name = "specvar", version, about = "Spectral randomness tests and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// P-values of every selected test for one sequence, or for each
    /// `--length` block of the input.
    Test(Flags),
    /// Type-1-error batch: sets of unmodified generator sequences.
    Exp1(Flags),
    /// Detection power against a periodic defect, swept over `--period`.
    Exp2(Flags),
    /// Empirical CDF of the normalized statistic against the standard normal.
    Cdf(Flags),
    /// Dump generator output.
    Gen(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// TOML file whose keys are the long flag names; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of original,kim,pareschi,proposed.
    #[arg(long)]
    test: Option<String>,
    /// Sequence length in bits.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    per_set: Option<usize>,
    #[arg(long)]
    sets: Option<usize>,
    /// Sample count (cdf) or sequence count (gen, test).
    #[arg(long)]
    samples: Option<usize>,
    /// mt, aes or file.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    seed: Option<u32>,
    /// AES key, 32 hex digits.
    #[arg(long)]
    key: Option<String>,
    /// Initial AES counter block, up to 32 hex digits.
    #[arg(long)]
    ctr: Option<String>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Bit format of `--in` and of `gen` output: ascii or raw.
    #[arg(long)]
    format: Option<BitFormat>,
    /// Defect period T, or a comma-separated sweep for exp2.
    #[arg(long)]
    period: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    report_format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Per-sequence p-value dump (CSV) for exp1/exp2.
    #[arg(long)]
    pvalues_out: Option<PathBuf>,
}

impl Flags {
    fn settings(&self) -> Result<Settings> {
        use specvar::harness::config::ListValue;
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let report_format = self.report_format.as_deref().map(str::parse).transpose()?;
        let cli = Settings {
            test: self.test.clone().map(ListValue::One),
            length: self.length,
            per_set: self.per_set,
            sets: self.sets,
            samples: self.samples,
            gen: self.gen.clone(),
            seed: self.seed,
            key: self.key.clone(),
            ctr: self.ctr.clone(),
            input: self.input.clone(),
            format: self.format,
            period: self.period.clone().map(ListValue::One),
            out: self.out.clone(),
            report_format,
            workers: self.workers,
            pvalues_out: self.pvalues_out.clone(),
        };
        let mut merged = base.overlay(cli);
        // `--in` alone selects the file source
        if merged.gen.is_none() && merged.input.is_some() {
            merged.gen = Some("file".into());
        }
        Ok(merged)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::File {
            path: p.to_path_buf(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn single_period(settings: &Settings) -> Result<Option<specvar::generators::PeriodicDefect>> {
    match settings.periods()? {
        None => Ok(None),
        Some(list) if list.len() == 1 => Ok(Some(list[0])),
        Some(_) => Err(Error::Config("this command takes a single --period".into())),
    }
}

/// Whole input file as one sequence unless `--length` splits it.
fn test_sequences(settings: &Settings) -> Result<Vec<BitSequence>> {
    let generator = settings.generator()?;
    if let GeneratorSpec::File { path, format } = &generator {
        let file = File::open(path).map_err(|source| Error::File {
            path: path.clone(),
            source,
        })?;
        let bits = parse_all_bits(io::BufReader::new(file), *format)?;
        let n = settings.length.unwrap_or(bits.len());
        let count = settings.samples.unwrap_or(bits.len() / n.max(1));
        if count == 0 || count * n > bits.len() {
            return Err(Error::Truncated {
                needed: count.max(1) * n,
                available: bits.len(),
            });
        }
        return (0..count).map(|i| bits.slice(i * n, n)).collect();
    }
    let n = settings.length.unwrap_or(1_000_000);
    let source = SequenceSource::open(&generator)?;
    (0..settings.samples.unwrap_or(1)).map(|i| source.sequence(i as u64, n)).collect()
}

fn cmd_test(settings: &Settings) -> Result<()> {
    let tests = settings.tests()?;
    let defect = single_period(settings)?;
    let mut out = output(settings.out.as_deref())?;
    writeln!(out, "index,n,variant,statistic,pvalue")?;
    for (i, bits) in test_sequences(settings)?.into_iter().enumerate() {
        let mut x = bits.to_pm1();
        if let Some(d) = defect {
            x = inject_periodic(&x, d)?;
        }
        let spectrum = dft_power(&x, true)?;
        for t in &tests {
            let o = t.evaluate(&spectrum)?;
            writeln!(out, "{i},{},{t},{},{}", o.n, o.statistic, o.pvalue)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_experiment(settings: &Settings, sweep: bool) -> Result<()> {
    let config: ExperimentConfig = settings.experiment(sweep)?;
    log::info!(
        "n={} M={} sets={} tests={:?} workers={}",
        config.n,
        config.per_set,
        config.sets,
        config.tests,
        config.workers
    );
    let report = if sweep {
        run_detection_sweep(&config)?
    } else {
        run_batch(&config)?
    };
    match &config.output {
        Some(path) => report.write_to_path(config.format, path)?,
        None => {
            let mut out = output(None)?;
            report.write(config.format, &mut out)?;
            out.flush()?;
        }
    }
    if let Some(path) = &settings.pvalues_out {
        let mut out = output(Some(path))?;
        report.write_pvalues_csv(&mut out)?;
        out.flush()?;
    }
    report.write_table(io::stderr().lock())
}

fn cmd_cdf(settings: &Settings) -> Result<()> {
    let n = settings.length.unwrap_or(10_000);
    let samples = settings.samples.unwrap_or(10_000);
    let workers = settings.workers.unwrap_or_else(specvar::harness::config::default_workers);
    let table = empirical_cdf(n, samples, &settings.generator()?, workers)?;
    let mut out = output(settings.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    eprintln!("n={n} samples={samples} ks={}", table.ks);
    Ok(())
}

fn cmd_gen(settings: &Settings) -> Result<()> {
    let n = settings.length.unwrap_or(1_000_000);
    let format = settings.format.unwrap_or(BitFormat::Ascii);
    let defect = single_period(settings)?;
    let source = SequenceSource::open(&settings.generator()?)?;
    let mut out = output(settings.out.as_deref())?;
    for i in 0..settings.samples.unwrap_or(1) {
        let mut bits = source.sequence(i as u64, n)?;
        if let Some(d) = defect {
            bits = inject_periodic(&bits.to_pm1(), d)?.to_bits();
        }
        out.write_all(&bits.serialize(format))?;
        if format == BitFormat::Ascii {
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Test(f) => cmd_test(&f.settings()?),
        Command::Exp1(f) => cmd_experiment(&f.settings()?, false),
        Command::Exp2(f) => cmd_experiment(&f.settings()?, true),
        Command::Cdf(f) => cmd_cdf(&f.settings()?),
        Command::Gen(f) => cmd_gen(&f.settings()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_io() => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
