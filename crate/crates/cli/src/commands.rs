//! One function per subcommand; each returns the artifact bytes.

use rotlab::diophantine::continued_fraction;
use rotlab::dynamics::{
    beta_estimate_on, transport_1d, transport_2d, transport_weyl, verify_main_bound, Averaging, BoundResources,
    TransportConfig, TransportTrace,
};
use rotlab::frames::{
    dos_equivalence_check, frame_bounds, frame_operator, theta_zero_certificate, tracial_defect, tracial_vector,
    FrameReport, SandwichReport,
};
use rotlab::lattice_sums::{lattice_sum_scan, mehler_scan};
use rotlab::scaling::geometric_grid;
use rotlab::spectral::{dos_estimate_with, multifractal_dimensions, Boundary, DimensionOptions, Kernel};
use rotlab::weyl_phase_space::{build_oscillator, GridSpec};
use rotlab::{EmpiricalMeasure, HamiltonianSpec};
use serde::Serialize;

use crate::cache::{Cache, Lookup};
use crate::config::{Command, ExperimentConfig, LatticeKind, Rep, VectorKind};
use crate::output::{csv_artifact, json_artifact, num};
use crate::CliError;

pub fn run(cfg: &ExperimentConfig, cache: &Cache) -> Result<Vec<u8>, CliError> {
    match cfg.command {
        Command::Cf => cf(cfg),
        Command::Dos => dos(cfg, cache),
        Command::Dims => dims(cfg, cache),
        Command::Transport => transport(cfg),
        Command::Bound => bound(cfg),
        Command::Frame => frame(cfg),
        Command::ThetaZeros => Ok(json_artifact(cfg, &theta_zero_certificate(cfg.terms as i64)?)),
        Command::LatticeSum => lattice_sum(cfg),
        Command::Oscillator => Ok(json_artifact(cfg, &build_oscillator(&cfg.symmetry)?.report())),
    }
}

fn setup(cfg: &ExperimentConfig) -> Result<(HamiltonianSpec, f64), CliError> {
    Ok((cfg.hamiltonian().map_err(CliError::Setup)?, cfg.theta().map_err(CliError::Setup)?))
}

fn cf(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    let alpha = cfg.alpha_value().map_err(CliError::Setup)?;
    let c = continued_fraction(alpha, cfg.terms)?;
    if c.len() < cfg.terms {
        eprintln!("expansion stopped after {} terms: {:?}", c.len(), c.stop);
    }
    let rows: Vec<Vec<String>> = c
        .convergents
        .iter()
        .enumerate()
        .map(|(k, &(p, q))| {
            let qf = q as f64;
            vec![
                (k + 1).to_string(),
                c.partial_quotients[k].to_string(),
                p.to_string(),
                q.to_string(),
                num((alpha - p as f64 / qf).abs() * qf * qf),
            ]
        })
        .collect();
    Ok(csv_artifact(cfg, &["n", "a_n", "p_n", "q_n", "err_q2"], &rows))
}

/// Density of states through the cache. The key covers the coefficients
/// themselves, so custom models are keyed by content rather than path.
fn measure(cfg: &ExperimentConfig, cache: &Cache) -> Result<(EmpiricalMeasure, f64), CliError> {
    let (h, theta) = setup(cfg)?;
    let (p, q) = cfg.ratio().map_err(CliError::Setup)?;
    let boundary = if cfg.ring { Boundary::Periodic { k_points: cfg.k_points } } else { Boundary::Open };
    let records = serde_json::to_string(&h.element(theta).to_records()).expect("records serialize");
    let key = format!("dos-v1|{records}|{p}/{q}|{}|{}|{boundary:?}", cfg.sites, cfg.n_omega);
    let (mu, status) = cache.measure(&key, || dos_estimate_with(&h, theta, cfg.sites, cfg.n_omega, boundary))?;
    if status == Lookup::Miss || status == Lookup::Corrupt {
        eprintln!("density of states computed: {} atoms", mu.len());
    }
    Ok((mu, h.element(theta).norm1()))
}

fn dos(cfg: &ExperimentConfig, cache: &Cache) -> Result<Vec<u8>, CliError> {
    let (mu, _) = measure(cfg, cache)?;
    let rows: Vec<Vec<String>> = mu.atoms.iter().map(|&(e, w)| vec![num(e), num(w)]).collect();
    Ok(csv_artifact(cfg, &["E", "w"], &rows))
}

fn dims(cfg: &ExperimentConfig, cache: &Cache) -> Result<Vec<u8>, CliError> {
    let (mu, h1) = measure(cfg, cache)?;
    let delta = cfg.delta.unwrap_or((-h1 - 0.1, h1 + 0.1));
    let ts = geometric_grid(cfg.t_min, cfg.t_max, cfg.t_ratio);
    let kernel = if cfg.indicator_kernel { Kernel::Indicator } else { Kernel::Gaussian };
    let opts = DimensionOptions { kernel, ..DimensionOptions::default() };
    let rows: Vec<Vec<String>> = multifractal_dimensions(&mu, delta, &cfg.qs, &ts, &opts)?
        .iter()
        .map(|d| vec![num(d.q), num(d.fit.upper), num(d.fit.lower), num(d.fit.exponent), num(d.fit.residual_rms)])
        .collect();
    Ok(csv_artifact(cfg, &["q", "D_plus", "D_minus", "D_mid", "residual"], &rows))
}

fn traces(cfg: &ExperimentConfig) -> Result<Vec<TransportTrace>, CliError> {
    let (h, theta) = setup(cfg)?;
    let tc = TransportConfig {
        qs: cfg.qs.clone(),
        t_max: cfg.t_max,
        delta: cfg.delta,
        half_width: cfg.sites,
        n_omega: cfg.n_omega,
        ..TransportConfig::default()
    };
    Ok(match cfg.rep {
        Rep::Chain => transport_1d(&h, theta, &tc)?,
        Rep::Lattice => transport_2d(&h, theta, &tc)?,
        Rep::Weyl => transport_weyl(&h, theta, &cfg.symmetry, GridSpec::new(theta, cfg.refinement, cfg.cells)?, &tc)?,
    })
}

fn transport(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    let traces = traces(cfg)?;
    let mut rows = Vec::new();
    for tr in &traces {
        let ts = geometric_grid(cfg.t_min, tr.t_avg_max(), cfg.t_ratio);
        match beta_estimate_on(tr, &ts) {
            Ok(fit) => eprintln!("q = {}: beta = {:.4} (windowed {:.4} .. {:.4})", tr.q, fit.exponent, fit.lower, fit.upper),
            Err(e) => eprintln!("q = {}: no exponent ({e})", tr.q),
        }
        for ((t, m), e) in tr.times.iter().zip(&tr.moments).zip(&tr.error_bounds) {
            rows.push(vec![num(tr.q), num(*t), num(*m), num(*e)]);
        }
    }
    Ok(csv_artifact(cfg, &["q", "t", "moment", "error_bound"], &rows))
}

fn bound(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    let (h, _) = setup(cfg)?;
    let ratio = cfg.ratio().map_err(CliError::Setup)?;
    let res = BoundResources {
        ratio,
        dos_sites: ratio.1 as usize * cfg.ring_periods,
        dos_n_omega: cfg.n_omega,
        dos_k_points: cfg.k_points,
        dim_t_grid: geometric_grid(cfg.dim_t_min, cfg.dim_t_max, cfg.t_ratio),
        transport: TransportConfig { t_max: cfg.t_max, half_width: cfg.sites, n_omega: cfg.n_omega, ..TransportConfig::default() },
        beta_t_grid: geometric_grid(cfg.t_min, cfg.t_max, cfg.t_ratio),
        averaging: if cfg.gaussian_average { Averaging::Gaussian } else { Averaging::Cesaro },
    };
    Ok(json_artifact(cfg, &verify_main_bound(&h, &cfg.qs, &res)?))
}

#[derive(Serialize)]
struct FrameOutput {
    frame: FrameReport,
    sandwich: SandwichReport,
}

fn frame(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    let (h, theta) = setup(cfg)?;
    let (p, q) = cfg.ratio().map_err(CliError::Setup)?;
    let spec = GridSpec::for_ratio(p, q, cfg.refinement, cfg.cells)?;
    let (psi, name) = match cfg.vector {
        VectorKind::Gaussian => (build_oscillator(&cfg.symmetry)?.ground_state(spec).normalized(), "gaussian"),
        VectorKind::Tracial => {
            let eps = 1f64.min(0.5 * (theta - std::f64::consts::TAU));
            (tracial_vector(&spec, eps, false)?, "tracial")
        }
    };
    let cutoff = 4;
    let op = frame_operator(&psi, cutoff)?;
    let (lo, hi) = frame_bounds(&op.element, cfg.sites, cfg.n_omega)?;
    let report = FrameReport {
        theta,
        vector: name.into(),
        tracial_defect: tracial_defect(&psi, cutoff),
        frame_lower: lo,
        frame_upper: hi,
        cutoff,
        half_width: cfg.sites,
        n_omega: cfg.n_omega,
        flagged: op.flagged,
    };
    let sandwich = dos_equivalence_check(&h, &op.element, cfg.sites, cfg.n_omega, cfg.bins)?;
    Ok(json_artifact(cfg, &FrameOutput { frame: report, sandwich }))
}

fn lattice_sum(cfg: &ExperimentConfig) -> Result<Vec<u8>, CliError> {
    let alpha = cfg.alpha_value().map_err(CliError::Setup)?;
    let grid = geometric_grid(cfg.t_min, cfg.t_max, cfg.t_ratio);
    let scan = match cfg.lattice {
        LatticeKind::Gaussian => lattice_sum_scan(alpha, 1.0, &grid, cfg.cells)?,
        LatticeKind::Mehler => {
            let theta = std::f64::consts::TAU * (cfg.offset as f64 + alpha);
            mehler_scan(&build_oscillator(&cfg.symmetry)?, theta, &grid, cfg.cells)?
        }
    };
    eprintln!("fitted exponent {:.4}, largest relative tail {:.2e}", scan.fit.exponent, scan.max_relative_tail);
    let rows: Vec<Vec<String>> = scan.values.iter().zip(&scan.sups).map(|(v, s)| vec![num(*v), num(*s)]).collect();
    Ok(csv_artifact(cfg, &[scan.parameter.as_str(), "sup"], &rows))
}
