//! Command-line front end. Every command stages its files and moves them
//! into the output directory only after the whole command succeeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;
use serde_json::json;

use crate::corpus::{
    filter_rare_symbols, preprocess_byte_level, preprocess_english, shuffle, split_offsets_from_delimited, EncodingMode,
    RawText, ShuffleLevel, ShuffleSpec, DEFAULT_BOUNDARY_MARKER,
};
use crate::encrate::{
    bundled_compressor, default_prefix_lengths, encoding_rate_curve, fit_curve, CompressorSpec, DEFAULT_MIN_PREFIX,
    DEFAULT_PREFIX_POINTS,
};
use crate::error::{Error, Result};
use crate::fit::PowerLawFit;
use crate::generators::{markov_generate, markov_train, monkey_generate, MonkeySpec};
use crate::longrange::{
    acf_curve, classify_decay, default_distances, mi_curve, rare_word_intervals_with, RareQuota,
};
use crate::output::Staging;
use crate::report::{analyze_text, compare, digest_file, write_fits_csv, AnalysisConfig, FitRow};
use crate::sidecar::{find_sidecar, sidecar_path, PseudoTextMeta};
use crate::tokens::{tokenize, tokenize_words, TokenMode, TokenStream};
use crate::zipfheaps::{
    exponent_trend, fit_heaps, log_spaced, tail_crossing, vocabulary_growth, zipf_analysis, ZipfConfig,
};

#[derive(Debug, Parser)]
#[command(name = "lexlaws", version, about = "Zipf, Heaps, long-range correlation and encoding-rate analysis of text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize raw text (a-z and single spaces, or byte level with word markers).
    Preprocess(PreprocessArgs),
    /// Rank-frequency tables and Zipf exponents for several n.
    Zipf(ZipfArgs),
    /// Vocabulary growth and the Heaps exponent.
    Heaps(HeapsArgs),
    /// Mutual information against distance.
    Mi(MiArgs),
    /// Autocorrelation of rare-word intervals.
    Acf(AcfArgs),
    /// Encoding rate of growing prefixes under a compressor.
    Encrate(EncrateArgs),
    /// Shuffle at character, word or document level.
    Shuffle(ShuffleArgs),
    /// Generate a baseline pseudo-text with a metadata sidecar.
    Generate(GenerateArgs),
    /// Full report for one text, or a comparison of two.
    Report(ReportArgs),
    /// Exponent trend over per-epoch pseudo-texts.
    Trend(TrendArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Char,
    Word,
    Byte,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Char,
    Word,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuotaArg {
    Occurrences,
    Types,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Monkey,
    Markov,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Input files; each is preprocessed and the results joined by a space.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// `char`/`word` apply the English recipe; `byte` marks word borders.
    #[arg(long, value_enum, default_value = "word")]
    pub mode: ModeArg,
    /// Byte mode: the byte that separates words in the segmented input.
    #[arg(long, default_value = " ")]
    pub delimiter: String,
    /// Byte mode: marker written at word borders (e.g. 0x1f).
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    /// Drop characters rarer than this relative frequency.
    #[arg(long)]
    pub rare_cutoff: Option<f64>,
    #[arg(long, default_value = "preprocessed.txt")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ZipfArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "word")]
    pub mode: ModeArg,
    /// N-gram lengths.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub fit_lo: f64,
    #[arg(long, default_value_t = 1e4)]
    pub fit_hi: f64,
    #[arg(long, default_value_t = 10)]
    pub bins: u32,
    /// Word marker for byte-mode input.
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HeapsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "word")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100.0)]
    pub fit_lo: f64,
    /// Upper end of the fit; defaults to the text length.
    #[arg(long)]
    pub fit_hi: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub samples_per_decade: u32,
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "char")]
    pub mode: ModeArg,
    /// Comma list, or `log:LO:HI:PER_DECADE`; default 1..min(10^4, N/10) at 20 per decade.
    #[arg(long)]
    pub distances: Option<String>,
    /// Distance range `LO,HI` for the decay verdict.
    #[arg(long, default_value = "1,10")]
    pub compare: String,
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AcfArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Fraction of rare words, as `p/q` or a decimal.
    #[arg(long, default_value = "1/16")]
    pub rare_fraction: String,
    #[arg(long, value_enum, default_value = "occurrences")]
    pub quota: QuotaArg,
    #[arg(long)]
    pub distances: Option<String>,
    #[arg(long, default_value = "1,1000")]
    pub compare: String,
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EncrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Command with `{input}` and `{output}` placeholders; defaults to the bundled PPMd.
    #[arg(long)]
    pub compressor_cmd: Option<String>,
    /// Comma list of prefix lengths; defaults to a log grid from 1000 to the full length.
    #[arg(long, value_delimiter = ',')]
    pub prefixes: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_PREFIX_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_PREFIX)]
    pub min_prefix: usize,
    /// Concurrent compressor processes.
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ShuffleArgs {
    /// Input text; with `--level document` several files are taken as the documents.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub level: LevelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Document delimiter (escapes \n and \t understood).
    #[arg(long, default_value = "\\n\\n")]
    pub delimiter: String,
    #[arg(long, default_value = "shuffled.txt")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub generator: GeneratorArg,
    /// Characters for monkey text, tokens for Markov text.
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monkey: number of non-space characters.
    #[arg(long, default_value_t = 26)]
    pub alphabet: u32,
    /// Monkey: space probability.
    #[arg(long, default_value_t = 0.2)]
    pub space_prob: f64,
    /// Markov: training text.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Markov: context length.
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    /// Markov: token level.
    #[arg(long, value_enum, default_value = "char")]
    pub mode: ModeArg,
    /// Markov: seed context is the `order` tokens starting here in the training text.
    #[arg(long, default_value_t = 0)]
    pub context_offset: usize,
    #[arg(long, default_value = "pseudo.txt")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Second text (e.g. a pseudo-text) to compare against the input.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub fit_lo: f64,
    #[arg(long, default_value_t = 1e4)]
    pub fit_hi: f64,
    #[arg(long, default_value = "1/16")]
    pub rare_fraction: String,
    /// Include the encoding-rate section with the bundled PPMd.
    #[arg(long)]
    pub encrate: bool,
    /// Include the encoding-rate section with this compressor.
    #[arg(long)]
    pub compressor_cmd: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value = "0x1f", value_parser = parse_byte)]
    pub marker: u8,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    /// Pseudo-texts, each with a sidecar giving its epoch.
    #[arg(long, required = true, num_args = 3..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub fit_lo: f64,
    #[arg(long, default_value_t = 1e4)]
    pub fit_hi: f64,
    #[command(flatten)]
    pub common: Common,
}

fn parse_byte(s: &str) -> std::result::Result<u8, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u8::from_str_radix(hex, 16).ok(),
        None => t.parse::<u8>().ok(),
    };
    parsed.ok_or_else(|| format!("{s:?} is not a byte (use 0xNN or 0-255)"))
}

/// `\n`, `\t`, `\r` and `\\` escapes.
pub fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some(o) => out.push(o),
            None => out.push('\\'),
        }
    }
    out
}

pub fn parse_fraction(s: &str) -> Result<Ratio<u64>> {
    let bad = || Error::InvalidArgument(format!("rare fraction {s:?} must be p/q or a decimal in (0, 1]"));
    let r = match s.split_once('/') {
        Some((p, q)) => {
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let q: u64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ratio::new(p, q)
        }
        None => {
            let (int, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
            if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10u64.pow(frac.len() as u32);
            let num: u64 = format!("{int}{frac}").parse().map_err(|_| bad())?;
            Ratio::new(num, den)
        }
    };
    if *r.numer() == 0 || r > Ratio::from_integer(1) {
        return Err(bad());
    }
    Ok(r)
}

pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidArgument(format!("range {s:?} must be LO,HI"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Comma list, or `log:LO:HI:PER_DECADE`.
pub fn parse_distances(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("distances {s:?} must be a comma list or log:LO:HI:PER_DECADE"));
    if let Some(spec) = s.strip_prefix("log:") {
        let parts: Vec<u64> = spec.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let [lo, hi, pd] = parts[..] else { return Err(bad()) };
        return Ok(log_spaced(lo, hi, pd as u32));
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn encoding_for(mode: ModeArg) -> EncodingMode {
    match mode {
        ModeArg::Byte => EncodingMode::Byte,
        _ => EncodingMode::Unicode,
    }
}

fn read_text(path: &Path, mode: ModeArg) -> Result<RawText> {
    RawText::read(path, encoding_for(mode))
}

/// Tokens at the requested level; words of byte-mode text split on `marker`.
fn stream_for(text: &RawText, mode: ModeArg, marker: u8) -> Result<TokenStream> {
    match (mode, text.encoding_mode()) {
        (ModeArg::Char, _) => tokenize(text, TokenMode::Character),
        (ModeArg::Byte, _) => tokenize(text, TokenMode::Byte),
        (ModeArg::Word, EncodingMode::Byte) => tokenize_words(text, marker),
        (ModeArg::Word, EncodingMode::Unicode) => tokenize(text, TokenMode::Word),
    }
}

fn mode_name(mode: ModeArg) -> &'static str {
    match mode {
        ModeArg::Char => "char",
        ModeArg::Word => "word",
        ModeArg::Byte => "byte",
    }
}

/// Exit status: 2 usage, 3 data error, 4 fit failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        e if e.is_fit_failure() => 4,
        _ => 3,
    }
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lexlaws: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs one command and returns the files it committed.
pub fn execute(command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Zipf(a) => cmd_zipf(a),
        Command::Heaps(a) => cmd_heaps(a),
        Command::Mi(a) => cmd_mi(a),
        Command::Acf(a) => cmd_acf(a),
        Command::Encrate(a) => cmd_encrate(a),
        Command::Shuffle(a) => cmd_shuffle(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Report(a) => cmd_report(a),
        Command::Trend(a) => cmd_trend(a),
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(Error::InvalidArgument(format!("output name {name:?} must be a plain file name")));
    }
    Ok(())
}

fn write_csv_with(staging: &mut Staging, name: &str, f: impl FnOnce(&mut dyn std::io::Write) -> Result<()>) -> Result<()> {
    let mut w = staging.create(name)?;
    f(&mut w)?;
    std::io::Write::flush(&mut w).map_err(Error::Io)
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<Vec<PathBuf>> {
    check_name(&a.name)?;
    let mut staging = Staging::new(&a.common.out)?;
    let text = match a.mode {
        ModeArg::Byte => {
            let delim = unescape(&a.delimiter);
            let &[d] = delim.as_bytes() else {
                return Err(Error::InvalidArgument("byte-mode delimiter must be a single byte".into()));
            };
            let mut joined = Vec::new();
            for p in &a.input {
                if !joined.is_empty() {
                    joined.push(d);
                }
                joined.extend(std::fs::read(p).map_err(|e| Error::file(p, e))?);
            }
            let (bytes, offsets) = split_offsets_from_delimited(&joined, d);
            let raw = RawText::bytes(bytes, "input")?;
            preprocess_byte_level(&raw, &offsets, a.marker)?
        }
        _ => {
            let mut parts = Vec::with_capacity(a.input.len());
            for p in &a.input {
                let pre = preprocess_english(&RawText::read(p, EncodingMode::Unicode)?)?;
                parts.push(pre.as_str().expect("unicode").to_owned());
            }
            RawText::unicode(parts.join(" "), "preprocessed")?
        }
    };
    let text = match a.rare_cutoff {
        Some(c) => filter_rare_symbols(&text, c)?,
        None => text,
    };
    staging.write(&a.name, text.as_bytes())?;
    staging.commit()
}

#[derive(Serialize)]
struct ZipfSummary<'a> {
    input: String,
    mode: &'static str,
    tokens: usize,
    fits: Vec<(usize, &'a PowerLawFit<f64>)>,
    tail_crossing: Option<f64>,
}

fn cmd_zipf(a: ZipfArgs) -> Result<Vec<PathBuf>> {
    let text = read_text(&a.input, a.mode)?;
    let stream = stream_for(&text, a.mode, a.marker)?;
    let cfg = ZipfConfig { ns: a.n.clone(), bins_per_decade: a.bins, fit_range: (a.fit_lo, a.fit_hi) };
    let results = zipf_analysis::<f64>(&stream, &cfg)?;
    let mut rows = Vec::new();
    for r in &results {
        let fit = r.fit.ok_or(Error::InsufficientPoints { got: 0, needed: 3 }).inspect_err(|_| {
            eprintln!("lexlaws: n={} has too few binned points in [{}, {}]", r.n, a.fit_lo, a.fit_hi);
        })?;
        rows.push(FitRow { quantity: "zipf".into(), n: Some(r.n as u64), fit });
    }
    let mut staging = Staging::new(&a.common.out)?;
    for r in &results {
        write_csv_with(&mut staging, &format!("rankfreq_n{}.csv", r.n), |w| r.table.write_csv(w))?;
    }
    write_csv_with(&mut staging, "zipf_binned.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["n", "rank", "freq"])?;
        for r in &results {
            for &(x, y) in &r.binned.points {
                c.write_record([r.n.to_string(), x.to_string(), y.to_string()])?;
            }
        }
        c.flush()?;
        Ok(())
    })?;
    write_csv_with(&mut staging, "zipf_fits.csv", |w| write_fits_csv(w, &rows))?;
    let uni = results.iter().find(|r| r.n == 1);
    let bi = results.iter().find(|r| r.n == 2);
    let summary = ZipfSummary {
        input: a.input.display().to_string(),
        mode: mode_name(a.mode),
        tokens: stream.len(),
        fits: rows.iter().map(|r| (r.n.unwrap_or(0) as usize, &r.fit)).collect(),
        tail_crossing: uni.zip(bi).and_then(|(u, b)| tail_crossing(&u.binned, &b.binned)),
    };
    staging.write_json("zipf.json", &summary)?;
    staging.commit()
}

fn cmd_heaps(a: HeapsArgs) -> Result<Vec<PathBuf>> {
    let text = read_text(&a.input, a.mode)?;
    let stream = stream_for(&text, a.mode, a.marker)?;
    let growth = vocabulary_growth(&stream, a.samples_per_decade)?;
    let fit = match a.fit_hi {
        None => fit_heaps(&growth, a.fit_lo)?,
        Some(hi) => crate::zipfheaps::fit_power_law(&growth, (a.fit_lo, hi), crate::fit::Scale::LogLog)?,
    };
    let mut staging = Staging::new(&a.common.out)?;
    write_csv_with(&mut staging, "growth.csv", |w| growth.write_csv(w))?;
    let rows = [FitRow { quantity: "heaps".into(), n: Some(1), fit }];
    write_csv_with(&mut staging, "heaps_fits.csv", |w| write_fits_csv(w, &rows))?;
    staging.write_json(
        "heaps.json",
        &json!({
            "input": a.input.display().to_string(),
            "mode": mode_name(a.mode),
            "tokens": growth.final_length(),
            "vocabulary": growth.final_vocabulary(),
            "fit": fit,
        }),
    )?;
    staging.commit()
}

fn cmd_mi(a: MiArgs) -> Result<Vec<PathBuf>> {
    let text = read_text(&a.input, a.mode)?;
    let stream = stream_for(&text, a.mode, a.marker)?;
    let compare_range = parse_range(&a.compare)?;
    let distances = match &a.distances {
        Some(d) => parse_distances(d)?,
        None => default_distances(stream.len()),
    };
    let series = mi_curve::<f64>(&stream, &distances)?;
    let verdict = classify_decay(&series, compare_range);
    let mut staging = Staging::new(&a.common.out)?;
    write_csv_with(&mut staging, "mi.csv", |w| series.write_csv(w))?;
    staging.write_json("mi_verdict.json", &verdict.summary())?;
    staging.commit()
}

fn cmd_acf(a: AcfArgs) -> Result<Vec<PathBuf>> {
    let fraction = parse_fraction(&a.rare_fraction)?;
    let compare_range = parse_range(&a.compare)?;
    let text = RawText::read(&a.input, EncodingMode::Unicode).or_else(|_| RawText::read(&a.input, EncodingMode::Byte))?;
    let words = stream_for(&text, ModeArg::Word, a.marker)?;
    let quota = match a.quota {
        QuotaArg::Occurrences => RareQuota::Occurrences,
        QuotaArg::Types => RareQuota::Types,
    };
    let seq = rare_word_intervals_with(&words, fraction, quota)?;
    let distances = match &a.distances {
        Some(d) => parse_distances(d)?,
        None => default_distances(seq.len()),
    };
    let series = acf_curve::<f64>(&seq, &distances)?;
    let verdict = classify_decay(&series, compare_range);
    let mut staging = Staging::new(&a.common.out)?;
    write_csv_with(&mut staging, "acf.csv", |w| series.write_csv(w))?;
    staging.write_json("acf_verdict.json", &verdict.summary())?;
    staging.write_json(
        "intervals.json",
        &json!({
            "intervals": seq.len(),
            "rare_fraction": fraction.to_string(),
            "quota": quota,
            "rare_types": seq.rare_types,
            "threshold_rank": seq.threshold_rank,
            "threshold_frequency": seq.threshold_frequency,
            "mean_interval": seq.mean::<f64>(),
        }),
    )?;
    staging.commit()
}

fn compressor_from(cmd: Option<&str>) -> Result<CompressorSpec> {
    let spec = match cmd {
        Some(t) => CompressorSpec::from_template(t)?,
        None => CompressorSpec {
            argv: vec![bundled_compressor().display().to_string(), "{input}".into(), "{output}".into()],
        },
    };
    Ok(spec.with_env_override())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn cmd_encrate(a: EncrateArgs) -> Result<Vec<PathBuf>> {
    let text = RawText::read(&a.input, EncodingMode::Unicode).or_else(|_| RawText::read(&a.input, EncodingMode::Byte))?;
    let spec = compressor_from(a.compressor_cmd.as_deref())?;
    let ns = a.prefixes.clone().unwrap_or_else(|| default_prefix_lengths(text.len(), a.min_prefix, a.points));
    let curve = encoding_rate_curve::<f64>(&text, &ns, &spec, a.workers.unwrap_or_else(default_workers))?;
    let ansatz = fit_curve(&curve);
    let mut staging = Staging::new(&a.common.out)?;
    write_csv_with(&mut staging, "encrate.csv", |w| curve.write_csv(w))?;
    staging.write_json(
        "encrate.json",
        &json!({
            "input": a.input.display().to_string(),
            "compressor_id": curve.compressor_id,
            "template": spec.template(),
            "monotone": curve.is_monotone(),
            "ansatz": ansatz.as_ref().ok(),
            "ansatz_error": ansatz.as_ref().err().map(|e| e.to_string()),
        }),
    )?;
    if let Err(e) = &ansatz {
        eprintln!("lexlaws: curve written without an ansatz fit: {e}");
    }
    staging.commit()
}

fn cmd_shuffle(a: ShuffleArgs) -> Result<Vec<PathBuf>> {
    check_name(&a.name)?;
    let delimiter = unescape(&a.delimiter);
    let text = match (a.level, a.input.as_slice()) {
        (_, [one]) => RawText::read(one, EncodingMode::Unicode)?,
        (LevelArg::Document, many) => {
            let mut docs = Vec::with_capacity(many.len());
            for p in many {
                docs.push(std::fs::read_to_string(p).map_err(|e| Error::file(p, e))?);
            }
            RawText::unicode(docs.join(&delimiter), "documents")?
        }
        _ => return Err(Error::InvalidArgument("several inputs are only allowed with --level document".into())),
    };
    let level = match a.level {
        LevelArg::Char => ShuffleLevel::Character,
        LevelArg::Word => ShuffleLevel::Word,
        LevelArg::Document => ShuffleLevel::Document,
    };
    let out = shuffle(&text, &ShuffleSpec::new(level, a.seed).with_delimiter(delimiter))?;
    let mut staging = Staging::new(&a.common.out)?;
    staging.write(&a.name, out.as_bytes())?;
    staging.commit()
}

fn cmd_generate(a: GenerateArgs) -> Result<Vec<PathBuf>> {
    check_name(&a.name)?;
    let (text, meta) = match a.generator {
        GeneratorArg::Monkey => {
            let spec = MonkeySpec::new(a.alphabet, a.space_prob, a.seed, a.length)?;
            let text = monkey_generate(&spec);
            let params = json!({"alphabet_size": spec.alphabet_size, "space_prob": spec.space_prob});
            let meta = PseudoTextMeta::generator("monkey", params, a.seed, text.len() as u64);
            (text, meta)
        }
        GeneratorArg::Markov => {
            let input = a
                .input
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--input is required for the markov generator".into()))?;
            let training = read_text(input, a.mode)?;
            let stream = stream_for(&training, a.mode, DEFAULT_BOUNDARY_MARKER)?;
            let model = markov_train(&stream, a.order)?;
            let end = a.context_offset + a.order;
            if end > stream.len() {
                return Err(Error::InvalidArgument(format!("context offset {} beyond the training text", a.context_offset)));
            }
            let text = markov_generate(&model, a.length, a.seed, &stream.tokens()[a.context_offset..end])?;
            let params = json!({
                "order": a.order,
                "mode": mode_name(a.mode),
                "context_offset": a.context_offset,
                "training_sha256": digest_file(input)?.sha256,
            });
            let meta = PseudoTextMeta::generator("markov", params, a.seed, text.len() as u64);
            (text, meta)
        }
    };
    let mut staging = Staging::new(&a.common.out)?;
    staging.write(&a.name, text.as_bytes())?;
    let side = sidecar_path(Path::new(&a.name));
    let mut json_bytes = serde_json::to_vec_pretty(&meta)?;
    json_bytes.push(b'\n');
    staging.write(&side.to_string_lossy(), &json_bytes)?;
    staging.commit()
}

fn analyze_path(path: &Path, config: &AnalysisConfig, mode: Option<ModeArg>) -> Result<crate::report::TextReport> {
    let text = match mode {
        Some(m) => read_text(path, m)?,
        None => RawText::read(path, EncodingMode::Unicode).or_else(|_| RawText::read(path, EncodingMode::Byte))?,
    };
    let mut report = analyze_text(&text, &path.display().to_string(), config, vec![digest_file(path)?])?;
    report.provenance.pseudo_text = find_sidecar(path)?;
    Ok(report)
}

fn cmd_report(a: ReportArgs) -> Result<Vec<PathBuf>> {
    let compressor = match (&a.compressor_cmd, a.encrate) {
        (Some(c), _) => Some(c.clone()),
        (None, true) => Some(compressor_from(None)?.template()),
        (None, false) => None,
    };
    let config = AnalysisConfig {
        ns: a.n.clone(),
        zipf_range: (a.fit_lo, a.fit_hi),
        rare_fraction: parse_fraction(&a.rare_fraction)?,
        compressor,
        workers: default_workers(),
        word_marker: a.marker,
        ..Default::default()
    };
    let original = analyze_path(&a.input, &config, a.mode)?;
    let mut staging = Staging::new(&a.common.out)?;
    match &a.compare {
        None => staging.write_json("report.json", &original)?,
        Some(other_path) => {
            let other = analyze_path(other_path, &config, a.mode)?;
            let comparison = compare(&original, &other);
            staging.write_json("report.json", &json!({"original": original, "other": other, "comparison": comparison}))?;
        }
    }
    staging.commit()
}

fn cmd_trend(a: TrendArgs) -> Result<Vec<PathBuf>> {
    let mut per_epoch = Vec::with_capacity(a.input.len());
    for p in &a.input {
        let meta = find_sidecar(p)?.ok_or_else(|| {
            Error::InvalidArgument(format!("{} has no sidecar {}", p.display(), sidecar_path(p).display()))
        })?;
        let epoch = meta
            .epoch
            .ok_or_else(|| Error::InvalidArgument(format!("sidecar of {} has no epoch", p.display())))?;
        let text = RawText::read(p, EncodingMode::Unicode)?;
        meta.check_text(&text)?;
        let words = tokenize(&text, TokenMode::Word)?;
        let cfg = ZipfConfig { ns: vec![1], fit_range: (a.fit_lo, a.fit_hi), ..Default::default() };
        let xi = zipf_analysis::<f64>(&words, &cfg)?
            .into_iter()
            .next()
            .and_then(|z| z.fit)
            .ok_or(Error::InsufficientPoints { got: 0, needed: 3 })?;
        let zeta = fit_heaps(&vocabulary_growth(&words, 20)?, 100.0)?;
        per_epoch.push((epoch, xi, zeta, meta.cross_entropy));
    }
    per_epoch.sort_by_key(|e| e.0);
    if per_epoch.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("two inputs share an epoch".into()));
    }
    let xi_trend = exponent_trend(&per_epoch.iter().map(|e| (e.0, e.1)).collect::<Vec<_>>())?;
    let zeta_trend = exponent_trend(&per_epoch.iter().map(|e| (e.0, e.2)).collect::<Vec<_>>())?;
    let mut staging = Staging::new(&a.common.out)?;
    write_csv_with(&mut staging, "per_epoch.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["epoch", "xi", "zeta", "cross_entropy"])?;
        for (e, xi, zeta, ce) in &per_epoch {
            c.write_record([
                e.to_string(),
                xi.exponent.to_string(),
                zeta.exponent.to_string(),
                ce.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    let rows = [
        FitRow { quantity: "zipf_trend".into(), n: Some(1), fit: xi_trend },
        FitRow { quantity: "heaps_trend".into(), n: None, fit: zeta_trend },
    ];
    write_csv_with(&mut staging, "trend_fits.csv", |w| write_fits_csv(w, &rows))?;
    staging.write_json("trend.json", &json!({"zipf": xi_trend, "heaps": zeta_trend}))?;
    staging.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions() {
        assert_eq!(parse_fraction("1/16").unwrap(), Ratio::new(1, 16));
        assert_eq!(parse_fraction("0.0625").unwrap(), Ratio::new(1, 16));
        assert_eq!(parse_fraction("1").unwrap(), Ratio::new(1, 1));
        for bad in ["0", "2/1", "1/0", "x", "-1/4", "0.5.5"] {
            assert!(parse_fraction(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_distances_and_ranges() {
        assert_eq!(parse_distances("1, 5,10").unwrap(), vec![1, 5, 10]);
        assert_eq!(parse_distances("log:1:10:10").unwrap(), vec![1, 2, 3, 4, 5, 6, 8, 10]);
        assert!(parse_distances("log:1:10").is_err());
        assert_eq!(parse_range("1,1000").unwrap(), (1.0, 1000.0));
        assert!(parse_range("5,1").is_err());
    }

    #[test]
    fn escapes_and_bytes() {
        assert_eq!(unescape("\\n\\n"), "\n\n");
        assert_eq!(unescape("a\\tb\\\\"), "a\tb\\");
        assert_eq!(parse_byte("0x1f"), Ok(0x1f));
        assert_eq!(parse_byte("31"), Ok(31));
        assert!(parse_byte("0x100").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        assert_eq!(exit_code(&Error::EmptyCorpus(None)), 3);
        assert_eq!(exit_code(&Error::DegenerateRange), 4);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
