use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use blockveil::dataset::{self, CifarFormat, LabeledDataset};
use blockveil::metrics::{DatasetMetrics, MetricsReport};
use blockveil::probe::{self, ProbeConfig};
use blockveil::scheme::{KeySpec, Scheme};
use blockveil::ImageU8;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Keyed block-wise image encryption that stays learnable.
#[derive(Parser)]
#[command(name = "blockveil", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a key file.
    Keygen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        block: usize,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Cat-map iterations.
        #[arg(long = "rounds", default_value_t = 5)]
        rounds: u32,
        /// Enable cat-map XOR diffusion.
        #[arg(long)]
        xor: bool,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Encrypt a CIFAR batch or a P6 image with a key file.
    Encrypt(CryptArgs),
    /// Invert `encrypt`.
    Decrypt(CryptArgs),
    /// Print histogram, entropy and adjacent-pixel correlation statistics.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Cifar10)]
        format: Format,
        /// Number of leading records to measure.
        #[arg(long, default_value_t = 100)]
        sample: usize,
    },
    /// Train the learnability probe on each input and print the results.
    Probe(ProbeArgs),
    /// Tile leading images of a batch into one P6 sheet.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Cifar10)]
        format: Format,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        cols: usize,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CryptArgs {
    #[arg(long)]
    key: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Cifar10)]
    format: Format,
    /// Fail unless the key file is for this scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, required = true)]
    plain: Vec<PathBuf>,
    #[arg(long)]
    encrypted: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Cifar10)]
    format: Format,
    /// Leading records used for training.
    #[arg(long, default_value_t = 5000)]
    train: usize,
    /// Records after the training split used for testing.
    #[arg(long, default_value_t = 1000)]
    test: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Epochs (0-based) at which the learning rate is multiplied by --lr-decay.
    #[arg(long = "decay-epoch", default_values_t = [20])]
    decay_epochs: Vec<usize>,
    #[arg(long = "lr-decay", default_value_t = 0.1)]
    lr_decay: f64,
    #[arg(long = "embed-width", default_value_t = 64)]
    embed_width: usize,
    #[arg(long = "mix-width", default_value_t = 32)]
    mix_width: usize,
    #[arg(long, default_value_t = 4)]
    block: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write `<stem>.curve.csv` for every input into this directory.
    #[arg(long = "curve-dir")]
    curve_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Proposed,
    Naive,
    Catmap,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Proposed => Scheme::Proposed,
            SchemeArg::Naive => Scheme::Naive,
            SchemeArg::Catmap => Scheme::Catmap,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Cifar10,
    Cifar100,
    Ppm,
}

impl Format {
    fn cifar(self) -> Option<CifarFormat> {
        match self {
            Format::Cifar10 => Some(CifarFormat::Cifar10),
            Format::Cifar100 => Some(CifarFormat::Cifar100),
            Format::Ppm => None,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path)
        .map_err(blockveil::Error::from)
        .with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)
        .map_err(blockveil::Error::from)
        .with_context(|| format!("cannot write {}", path.display()))
}

fn load_images(path: &Path, format: Format) -> Result<LabeledDataset> {
    let bytes = read_file(path)?;
    let ds = match format.cifar() {
        Some(f) => dataset::parse_cifar(&bytes, f),
        None => {
            dataset::parse_ppm(&bytes).and_then(|img| LabeledDataset::new(vec![img], vec![0], 10))
        }
    };
    ds.with_context(|| format!("cannot parse {}", path.display()))
}

fn crypt(args: &CryptArgs, decrypt: bool) -> Result<()> {
    let text = read_file(&args.key)?;
    let spec = std::str::from_utf8(&text)
        .map_err(|_| blockveil::Error::KeyFormat("not UTF-8".into()))
        .and_then(KeySpec::parse)
        .with_context(|| format!("in key file {}", args.key.display()))?;
    if let Some(requested) = args.scheme {
        spec.require(requested.into())?;
    }
    let bytes = read_file(&args.input)?;
    let out = match args.format.cifar() {
        Some(format) => {
            let key = spec.resolve(dataset::CIFAR_SIDE)?;
            dataset::transform_cifar_bytes(&bytes, format, |img| {
                if decrypt {
                    key.decrypt(img)
                } else {
                    key.encrypt(img)
                }
            })
            .with_context(|| format!("cannot process {}", args.input.display()))?
        }
        None => {
            let img = dataset::parse_ppm(&bytes)
                .with_context(|| format!("cannot parse {}", args.input.display()))?;
            if spec.scheme == Scheme::Catmap && img.width() != img.height() {
                return Err(blockveil::Error::NotSquare {
                    width: img.width(),
                    height: img.height(),
                }
                .into());
            }
            let key = spec.resolve(img.width())?;
            let img = if decrypt {
                key.decrypt(&img)?
            } else {
                key.encrypt(&img)?
            };
            let mut buf = Vec::new();
            dataset::write_ppm(&img, &mut buf)?;
            buf
        }
    };
    write_file(&args.out, &out)
}

fn probe_config(args: &ProbeArgs, classes: usize) -> ProbeConfig {
    ProbeConfig {
        block: args.block,
        embed_width: args.embed_width,
        mix_width: args.mix_width,
        classes,
        learning_rate: args.lr,
        lr_decay: args.lr_decay,
        decay_epochs: args.decay_epochs.clone(),
        momentum: args.momentum,
        batch_size: args.batch,
        epochs: args.epochs,
        seed: args.seed,
        train_size: args.train,
        test_size: args.test,
    }
}

fn run_probe(args: &ProbeArgs, out: &mut impl Write) -> Result<()> {
    if args.format == Format::Ppm {
        bail!(blockveil::Error::Config("probe needs a CIFAR batch".into()));
    }
    let inputs = args
        .plain
        .iter()
        .map(|p| ("plain", p))
        .chain(args.encrypted.iter().map(|p| ("encrypted", p)));
    for (role, path) in inputs {
        let ds = load_images(path, args.format)?;
        if ds.len() < args.train + args.test {
            bail!(blockveil::Error::Config(format!(
                "{} holds {} records, need {} for train + test",
                path.display(),
                ds.len(),
                args.train + args.test
            )));
        }
        let cfg = probe_config(args, ds.num_classes);
        let result = probe::run_probe(
            &ds.slice(0, args.train),
            &ds.slice(args.train, args.test),
            &cfg,
        )?;
        writeln!(out, "input={}\nrole={role}", path.display())?;
        write!(out, "{}", result.to_key_values())?;
        writeln!(out)?;
        if let Some(dir) = &args.curve_dir {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            write_file(
                &dir.join(format!("{stem}.curve.csv")),
                result.curve_csv().as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Keygen {
            seed,
            block,
            scheme,
            rounds,
            xor,
            out: path,
        } => {
            if block == 0 {
                bail!(blockveil::Error::Config(
                    "block size must be positive".into()
                ));
            }
            let mut spec = KeySpec::new(scheme.into(), seed, block);
            spec.rounds = rounds;
            spec.xor = xor;
            write_file(&path, spec.to_key_file().as_bytes())?;
        }
        Command::Encrypt(args) => crypt(&args, false)?,
        Command::Decrypt(args) => crypt(&args, true)?,
        Command::Metrics {
            input,
            format,
            sample,
        } => {
            let ds = load_images(&input, format)?;
            let report = if format == Format::Ppm {
                MetricsReport::measure(&ds.images[0])?.to_key_values()
            } else {
                let n = sample.min(ds.len());
                DatasetMetrics::measure(&ds.images[..n])?.to_key_values()
            };
            write!(out, "{report}")?;
        }
        Command::Probe(args) => run_probe(&args, &mut out)?,
        Command::Export {
            input,
            format,
            count,
            cols,
            out: path,
        } => {
            let ds = load_images(&input, format)?;
            let images: Vec<ImageU8> = ds.images.into_iter().take(count).collect();
            let sheet = dataset::tile_grid(&images, cols)?;
            let mut buf = Vec::new();
            dataset::write_ppm(&sheet, &mut buf)?;
            write_file(&path, &buf)?;
        }
    }
    Ok(())
}

/// Distinct exit codes per failure class; 2 is reserved for usage errors.
fn exit_code(err: &anyhow::Error) -> u8 {
    use blockveil::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::Io(_)) => 3,
        Some(
            E::BadLength { .. }
            | E::BadLabel { .. }
            | E::BadDims { .. }
            | E::BufferSize { .. }
            | E::Ppm(_)
            | E::KeyFormat(_),
        ) => 4,
        Some(E::SchemeMismatch { .. }) => 5,
        Some(
            E::Dimension { .. }
            | E::NotSquare { .. }
            | E::DimsMismatch
            | E::CountMismatch { .. }
            | E::LengthMismatch { .. }
            | E::NotAPermutation { .. },
        ) => 6,
        Some(_) => 7,
        None if err.chain().any(|e| e.downcast_ref::<io::Error>().is_some()) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("blockveil: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("blockveil: error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
