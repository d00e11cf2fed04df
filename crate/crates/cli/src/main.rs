use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotlab_cli::output::write_atomic;
use rotlab_cli::{commands, Cache, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rotlab", version, about = "Harper-type Hamiltonians: spectra, dimensions, transport, frames")]
struct Cli {
    #[command(subcommand)]
    sub: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Continued-fraction expansion of alpha
    #[command(after_help = "CSV columns: n, a_n, p_n, q_n, err_q2 = |alpha - p_n/q_n| q_n^2")]
    Cf(Opts),
    /// Density of states: pooled eigenvalues over the phase grid
    #[command(after_help = "CSV columns: E (eigenvalue), w (weight, total 1)")]
    Dos(Opts),
    /// Generalized dimensions of the density of states
    #[command(after_help = "CSV columns: q, D_plus (largest windowed slope), D_minus (smallest), D_mid (global fit), residual (RMS)")]
    Dims(Opts),
    /// Moment traces M(q, t) in the 1d, 2d or weyl representation
    #[command(after_help = "CSV columns: q, t, moment, error_bound (truncation bound on the moment)")]
    Transport(Opts),
    /// Diffusion exponents against dimensions of the density of states
    #[command(after_help = "JSON: per-q exponent and dimension fits, margin, uncertainty and verdict")]
    Bound(Opts),
    /// Frame bounds of a Gaussian or tracial vector and the DOS sandwich
    #[command(after_help = "JSON: frame report (defect, bounds, flags) and per-bin DOS sandwich")]
    Frame(Opts),
    /// Certificate for the zero of the theta function in the unit cell
    #[command(after_help = "JSON: winding number, center value, functional-equation errors")]
    ThetaZeros(Opts),
    /// Gaussian or Mehler lattice-sum scans
    #[command(after_help = "CSV columns: delta or t (scan parameter), sup (largest sum over the cell grid)")]
    LatticeSum(Opts),
    /// Symmetry oscillator data for S3, S4 or S6
    #[command(after_help = "JSON: order, quadratic form, eigen-decomposition and ground-state width")]
    Oscillator(Opts),
}

#[derive(clap::Args)]
struct Opts {
    /// Key-value config file (`key = value` per line)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the artifact here instead of stdout or the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config and exit
    #[arg(long)]
    print_config: bool,
    /// Set any config key, e.g. --set ring_periods=2 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// harper4 | triangular6 | free-chain | v-control | custom:<file>
    #[arg(long)]
    model: Option<String>,
    /// golden | sqrt2 | number in (0, 1)
    #[arg(long)]
    alpha: Option<String>,
    /// Convergent index of alpha used for theta
    #[arg(long)]
    depth: Option<String>,
    /// Whole turns added to theta/2pi
    #[arg(long)]
    offset: Option<String>,
    #[arg(long)]
    terms: Option<String>,
    #[arg(long)]
    sites: Option<String>,
    #[arg(long)]
    n_omega: Option<String>,
    /// open | ring
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    k_points: Option<String>,
    /// Comma-separated q values
    #[arg(long = "q", allow_hyphen_values = true)]
    qs: Option<String>,
    #[arg(long)]
    t_min: Option<String>,
    #[arg(long, alias = "Tmax")]
    t_max: Option<String>,
    #[arg(long)]
    t_ratio: Option<String>,
    /// Energy window `lo,hi` or `all`
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    /// gaussian | indicator
    #[arg(long)]
    kernel: Option<String>,
    /// cesaro | gaussian
    #[arg(long)]
    averaging: Option<String>,
    /// 1d | 2d | weyl
    #[arg(long)]
    rep: Option<String>,
    /// S3 | S4 | S6
    #[arg(long)]
    symmetry: Option<String>,
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    cells: Option<String>,
    /// gaussian | tracial
    #[arg(long)]
    vector: Option<String>,
    /// gaussian | mehler
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Cache root; falls back to $ROTLAB_CACHE
    #[arg(long)]
    cache_dir: Option<String>,
}

impl Opts {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let flags: [(&'static str, &Option<String>); 25] = [
            ("model", &self.model),
            ("alpha", &self.alpha),
            ("depth", &self.depth),
            ("offset", &self.offset),
            ("terms", &self.terms),
            ("sites", &self.sites),
            ("n_omega", &self.n_omega),
            ("boundary", &self.boundary),
            ("k_points", &self.k_points),
            ("qs", &self.qs),
            ("t_min", &self.t_min),
            ("t_max", &self.t_max),
            ("t_ratio", &self.t_ratio),
            ("delta", &self.delta),
            ("bins", &self.bins),
            ("kernel", &self.kernel),
            ("averaging", &self.averaging),
            ("rep", &self.rep),
            ("symmetry", &self.symmetry),
            ("refinement", &self.refinement),
            ("cells", &self.cells),
            ("vector", &self.vector),
            ("lattice", &self.lattice),
            ("output_dir", &self.output_dir),
            ("cache_dir", &self.cache_dir),
        ];
        flags.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect()
    }
}

fn resolve(command: Command, opts: &Opts) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults(command);
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text)?;
    }
    let mut sets = Vec::new();
    for s in &opts.set {
        let Some((k, v)) = s.split_once('=') else {
            return Err(CliError::Setup(format!("--set expects KEY=VALUE, got '{s}'")));
        };
        let key = rotlab_cli::config::KEYS
            .iter()
            .find(|known| **known == k.trim())
            .ok_or_else(|| CliError::Setup(format!("--set: unknown key '{}'", k.trim())))?;
        sets.push((*key, v.to_string()));
    }
    cfg.apply_pairs(sets)?;
    cfg.apply_pairs(opts.pairs())?;
    cfg.finalize()?;
    Ok(cfg)
}

fn execute(command: Command, opts: &Opts) -> Result<(), CliError> {
    let cfg = resolve(command, opts)?;
    if opts.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let cache = Cache::new(cfg.cache_dir.as_deref());
    let bytes = commands::run(&cfg, &cache)?;
    let target = opts.out.clone().or_else(|| {
        cfg.output_dir
            .as_ref()
            .map(|d| d.join(format!("{}-{}.{}", command.name(), &cfg.hash()[..12], command.extension())))
    });
    match target {
        Some(path) => {
            write_atomic(&path, &bytes)?;
            eprintln!("wrote {}", path.display());
        }
        None => match std::io::stdout().write_all(&bytes) {
            // a closed pipe (e.g. `| head`) is not a failure
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.sub {
        Sub::Cf(o) => (Command::Cf, o),
        Sub::Dos(o) => (Command::Dos, o),
        Sub::Dims(o) => (Command::Dims, o),
        Sub::Transport(o) => (Command::Transport, o),
        Sub::Bound(o) => (Command::Bound, o),
        Sub::Frame(o) => (Command::Frame, o),
        Sub::ThetaZeros(o) => (Command::ThetaZeros, o),
        Sub::LatticeSum(o) => (Command::LatticeSum, o),
        Sub::Oscillator(o) => (Command::Oscillator, o),
    };
    match execute(command, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
