//! Monte-Carlo execution: one deterministic RNG stream per (SNR point,
//! trial), trials fanned out with rayon and reduced in trial order so results
//! do not depend on thread count.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    awgn, gen_correlated_channel, gen_freq_selective, gen_iid_channel, gen_symbols,
    laplacian_covariance, snr_db_to_linear, snr_db_to_n0, ChannelError, Constellation,
    CorrelationSpec,
};
use crate::detection::{
    two_stage_detect, DetectionError, HammingWeights, MlDetector, PhiMode,
};
use crate::estimation::{
    joint_ce_dd_refine, nmse, svm_ce_correlated, svm_ce_uncorrelated, ChannelEstimate,
};
use crate::lifting::{
    lift_channel_det, one_bit_quantize, realify_ce, stack_on_top, stack_rotation,
    stack_side_by_side, LiftError,
};
use crate::ofdm::{build_g_fd, simulate_ofdm_rx, svm_ce_ofdm, svm_detect_ofdm, OfdmConfig, OfdmError};
use crate::svm::{SolveOptions, SvmError};

use super::config::{ConfigError, DetectorKind, EstimatorKind, ExperimentConfig, ScenarioKind};
use super::metrics::MetricTable;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

/// Everything a run produces; callers decide where to write it.
#[derive(Debug)]
pub struct RunOutput {
    pub table: MetricTable,
    /// The effective configuration, serialized back to TOML.
    pub config_echo: String,
}

/// Independent, reproducible stream for one (SNR point, trial) cell.
pub fn trial_rng(master_seed: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(snr_index as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
    seed[24..32].copy_from_slice(b"1bitmimo");
    ChaCha8Rng::from_seed(seed)
}

/// Everything one trial reports; absent metrics are simply not recorded.
#[derive(Debug, Clone, Default)]
struct TrialMetrics {
    nmse: Option<f64>,
    ber: Option<f64>,
    ser: Option<f64>,
    mean_candidates: Option<f64>,
    flagged_rows: Option<f64>,
    flagged_columns: Option<f64>,
}

fn solver_opts(cfg: &ExperimentConfig) -> SolveOptions<f64> {
    SolveOptions {
        tol: cfg.tol,
        ..SolveOptions::default()
    }
}

fn estimate_flat(
    cfg: &ExperimentConfig,
    h: &Array2<num_complex::Complex64>,
    covariances: Option<&[Array2<num_complex::Complex64>]>,
    constellation: &Constellation<f64>,
    n0: f64,
    rng: &mut ChaCha8Rng,
) -> Result<
    (
        Array2<num_complex::Complex64>,
        Option<(crate::lifting::CeRealForms<f64>, ChannelEstimate<f64>)>,
        Option<f64>,
        Option<f64>,
    ),
    RunError,
> {
    let opts = solver_opts(cfg);
    match cfg.estimator {
        EstimatorKind::PerfectCsi => Ok((h.clone(), None, None, None)),
        est => {
            let (_, x_t) = gen_symbols(cfg.k_users, cfg.t_train, constellation, rng);
            let noise = awgn(cfg.n_antennas, cfg.t_train, n0, rng);
            let y_t = one_bit_quantize(&(h.dot(&x_t) + noise));
            let ce = realify_ce(&y_t, &x_t, None)?;
            let estimate = match est {
                EstimatorKind::SvmCorrelated => svm_ce_correlated(
                    &ce,
                    covariances.expect("correlated estimator implies covariances"),
                    cfg.penalty,
                    &opts,
                )?,
                _ => svm_ce_uncorrelated(&ce, cfg.penalty, &opts)?,
            };
            let e = nmse(&estimate.h_hat, h);
            let flagged = estimate.flagged_rows as f64;
            let h_hat = estimate.h_hat.clone();
            Ok((h_hat, Some((ce, estimate)), Some(e), Some(flagged)))
        }
    }
}

/// Detect one data block and score it against the true indices.
fn detect_and_score(
    cfg: &ExperimentConfig,
    snr_db: f64,
    y_d2: &Array2<f64>,
    h_d: &Array2<f64>,
    true_idx: &Array2<usize>,
    constellation: &Constellation<f64>,
) -> Result<(Array2<usize>, TrialMetrics), RunError> {
    let rho = snr_db_to_linear(snr_db);
    let opts = solver_opts(cfg);
    let mut m = TrialMetrics::default();
    let indices = match cfg.detector {
        DetectorKind::SvmTwoStage | DetectorKind::SvmStage1 => {
            // gamma = 1 makes every candidate set a singleton, which reduces
            // the pipeline to plain stage-1 slicing
            let gamma = if cfg.detector == DetectorKind::SvmStage1 {
                1.0
            } else {
                cfg.gamma_override
                    .unwrap_or_else(|| crate::detection::gamma_schedule(snr_db, constellation.kind()))
            };
            let out = two_stage_detect(
                y_d2,
                h_d,
                constellation,
                rho,
                gamma,
                cfg.penalty,
                &opts,
                HammingWeights::Llr(PhiMode::Asymptotic),
            )?;
            m.mean_candidates = Some(out.mean_candidates);
            m.flagged_columns = Some(out.flagged_columns as f64);
            out.indices
        }
        DetectorKind::Ml => {
            let det = MlDetector::new(h_d, rho, cfg.k_users, constellation, PhiMode::Asymptotic)?;
            let t_d = y_d2.ncols();
            let cols: Vec<Vec<usize>> = (0..t_d)
                .into_par_iter()
                .map(|t| det.detect(&y_d2.column(t).to_owned()))
                .collect();
            let mut indices = Array2::zeros((cfg.k_users, t_d));
            for (t, col) in cols.iter().enumerate() {
                for k in 0..cfg.k_users {
                    indices[[k, t]] = col[k];
                }
            }
            indices
        }
        DetectorKind::OfdmSvm => unreachable!("validated: ofdm_svm only in the ofdm scenario"),
    };
    let (ber, ser) = score(&indices, true_idx, constellation);
    m.ber = Some(ber);
    m.ser = Some(ser);
    Ok((indices, m))
}

fn score(
    detected: &Array2<usize>,
    truth: &Array2<usize>,
    constellation: &Constellation<f64>,
) -> (f64, f64) {
    let mut bit_errors = 0u64;
    let mut sym_errors = 0u64;
    for (d, t) in detected.iter().zip(truth.iter()) {
        bit_errors += constellation.bit_errors(*d, *t) as u64;
        if d != t {
            sym_errors += 1;
        }
    }
    let symbols = truth.len() as u64;
    let bits = symbols * constellation.bits_per_symbol() as u64;
    (
        bit_errors as f64 / bits as f64,
        sym_errors as f64 / symbols as f64,
    )
}

fn flat_trial(
    cfg: &ExperimentConfig,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialMetrics, RunError> {
    let constellation = Constellation::new(cfg.constellation);
    let n0 = snr_db_to_n0(snr_db);

    let covariances = if cfg.scenario == ScenarioKind::FlatCorrelated {
        let mean_angles: Vec<f64> = (0..cfg.k_users)
            .map(|_| rng.random_range(-90.0..90.0))
            .collect();
        let spec = CorrelationSpec {
            spacing_wavelengths: cfg.spacing_wavelengths,
            angle_spread_deg: cfg.angle_spread_deg,
            mean_angles_deg: mean_angles,
        };
        Some(
            (0..cfg.k_users)
                .map(|k| laplacian_covariance(&spec, k, cfg.n_antennas))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    let h = match &covariances {
        Some(covs) => gen_correlated_channel(covs, rng)?,
        None => gen_iid_channel(cfg.n_antennas, cfg.k_users, rng),
    };

    let (h_hat, pilot_ctx, est_nmse, flagged_rows) =
        estimate_flat(cfg, &h, covariances.as_deref(), &constellation, n0, rng)?;

    let (true_idx, x_d) = gen_symbols(cfg.k_users, cfg.t_data, &constellation, rng);
    let noise = awgn(cfg.n_antennas, cfg.t_data, n0, rng);
    let y_d_q = one_bit_quantize(&(h.dot(&x_d) + noise));
    let y_d2 = stack_on_top(y_d_q.as_complex());
    let h_d = lift_channel_det(&h_hat);

    let (detected, mut m) = detect_and_score(cfg, snr_db, &y_d2, &h_d, &true_idx, &constellation)?;
    m.nmse = est_nmse;
    m.flagged_rows = flagged_rows;

    if cfg.estimator == EstimatorKind::JointCeDd {
        let (ce, pilot_est) = pilot_ctx.expect("joint_ce_dd implies a pilot estimate");
        let x_hat = detected.mapv(|idx| constellation.point(idx));
        let x_d2 = stack_rotation(&x_hat);
        let y_d2_sbs = stack_side_by_side(y_d_q.as_complex());
        let refined = joint_ce_dd_refine(
            &ce,
            &y_d2_sbs,
            &x_d2,
            Some(&pilot_est),
            cfg.penalty,
            &solver_opts(cfg),
        )?;
        m.nmse = Some(nmse(&refined.h_hat, &h));
        m.flagged_rows = Some(refined.flagged_rows as f64);
        // second pass: re-detect the block with the refined channel
        let h_d2 = lift_channel_det(&refined.h_hat);
        let (_, m2) = detect_and_score(cfg, snr_db, &y_d2, &h_d2, &true_idx, &constellation)?;
        m.ber = m2.ber;
        m.ser = m2.ser;
        m.mean_candidates = m2.mean_candidates;
        m.flagged_columns = m2.flagged_columns;
    }
    Ok(m)
}

fn ofdm_trial(
    cfg: &ExperimentConfig,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialMetrics, RunError> {
    let constellation = Constellation::new(cfg.constellation);
    let n0 = snr_db_to_n0(snr_db);
    let ofdm = OfdmConfig {
        nc: cfg.nc,
        ncp: cfg.ncp,
        l: cfg.taps,
    };
    let opts = solver_opts(cfg);
    let taps = gen_freq_selective(cfg.n_antennas, cfg.k_users, cfg.taps, rng);

    let mut m = TrialMetrics::default();
    let tap_estimate = if cfg.estimator == EstimatorKind::PerfectCsi {
        taps.clone()
    } else {
        let (_, pilot_fd) = gen_symbols(cfg.k_users, cfg.nc, &constellation, rng);
        let y_pilot = simulate_ofdm_rx(&ofdm, &taps, &pilot_fd, n0, rng)?;
        let est = svm_ce_ofdm(&ofdm, &y_pilot, &pilot_fd, cfg.penalty, &opts)?;
        let err: f64 = est
            .taps
            .iter()
            .zip(taps.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        m.nmse = Some(err / (cfg.n_antennas * cfg.k_users) as f64);
        m.flagged_rows = Some(est.flagged_antennas as f64);
        est.taps
    };

    let g_fd = build_g_fd(&ofdm, &tap_estimate);
    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    for _ in 0..cfg.ofdm_data_symbols {
        let (true_idx, x_fd) = gen_symbols(cfg.k_users, cfg.nc, &constellation, rng);
        let y = simulate_ofdm_rx(&ofdm, &taps, &x_fd, n0, rng)?;
        let det = svm_detect_ofdm(&ofdm, &y, &g_fd, &constellation, cfg.penalty, &opts)?;
        for (d, t) in det.indices.iter().zip(true_idx.iter()) {
            bit_errors += constellation.bit_errors(*d, *t) as u64;
        }
        bits += (cfg.k_users * cfg.nc) as u64 * constellation.bits_per_symbol() as u64;
    }
    m.ber = Some(bit_errors as f64 / bits as f64);
    Ok(m)
}

fn run_trial(
    cfg: &ExperimentConfig,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialMetrics, RunError> {
    match cfg.scenario {
        ScenarioKind::Ofdm => ofdm_trial(cfg, snr_db, rng),
        _ => flat_trial(cfg, snr_db, rng),
    }
}

/// Run the full sweep. Output is a deterministic function of the config
/// alone (thread count does not matter).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut table = MetricTable::new();
    for (snr_index, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let results: Vec<Result<TrialMetrics, RunError>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(cfg.master_seed, snr_index, trial);
                run_trial(cfg, snr_db, &mut rng)
            })
            .collect();
        for res in results {
            let m = res?;
            let mut put = |name: &str, v: Option<f64>| {
                if let Some(v) = v {
                    table.push(snr_index, snr_db, name, v);
                }
            };
            put("nmse", m.nmse);
            put("ber", m.ber);
            put("ser", m.ser);
            put("mean_candidates", m.mean_candidates);
            put("flagged_rows", m.flagged_rows);
            put("flagged_columns", m.flagged_columns);
        }
    }
    Ok(RunOutput {
        table,
        config_echo: cfg.to_toml(),
    })
}

/// One synthetic data column per scenario, used by the CLI self-test.
pub fn selftest() -> Result<(), RunError> {
    let base = ExperimentConfig {
        scenario: ScenarioKind::FlatIid,
        estimator: EstimatorKind::Svm,
        detector: DetectorKind::SvmTwoStage,
        constellation: crate::channel::ConstellationKind::Qpsk,
        k_users: 2,
        n_antennas: 8,
        t_train: 10,
        t_data: 8,
        snr_grid_db: vec![10.0],
        trials: 2,
        master_seed: 1,
        penalty: 1.0,
        tol: 1e-5,
        gamma_override: None,
        spacing_wavelengths: 0.5,
        angle_spread_deg: 10.0,
        nc: 0,
        ncp: 0,
        taps: 0,
        ofdm_data_symbols: 1,
    };
    run_experiment(&base)?;

    let mut corr = base.clone();
    corr.scenario = ScenarioKind::FlatCorrelated;
    corr.estimator = EstimatorKind::SvmCorrelated;
    run_experiment(&corr)?;

    let mut ofdm = base.clone();
    ofdm.scenario = ScenarioKind::Ofdm;
    ofdm.detector = DetectorKind::OfdmSvm;
    ofdm.estimator = EstimatorKind::Svm;
    ofdm.nc = 16;
    ofdm.ncp = 4;
    ofdm.taps = 2;
    ofdm.trials = 1;
    run_experiment(&ofdm)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ConstellationKind;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            scenario: ScenarioKind::FlatIid,
            estimator: EstimatorKind::Svm,
            detector: DetectorKind::SvmTwoStage,
            constellation: ConstellationKind::Qpsk,
            k_users: 2,
            n_antennas: 8,
            t_train: 10,
            t_data: 10,
            snr_grid_db: vec![0.0, 10.0],
            trials: 3,
            master_seed: 42,
            penalty: 1.0,
            tol: 1e-5,
            gamma_override: None,
            spacing_wavelengths: 0.5,
            angle_spread_deg: 10.0,
            nc: 0,
            ncp: 0,
            taps: 0,
            ofdm_data_symbols: 1,
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = tiny();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.table.to_csv(), b.table.to_csv());
    }

    #[test]
    fn seed_changes_results() {
        let mut cfg = tiny();
        let a = run_experiment(&cfg).unwrap();
        cfg.master_seed = 43;
        let b = run_experiment(&cfg).unwrap();
        assert_ne!(a.table.to_csv(), b.table.to_csv());
    }

    #[test]
    fn trial_streams_are_distinct() {
        let mut a = trial_rng(1, 0, 0);
        let mut b = trial_rng(1, 0, 1);
        let mut c = trial_rng(1, 1, 0);
        let x: u64 = a.random();
        assert_ne!(x, b.random());
        assert_ne!(x, c.random());
        // and reproducible
        let mut a2 = trial_rng(1, 0, 0);
        assert_eq!(x, a2.random());
    }

    #[test]
    fn emits_expected_metrics() {
        let out = run_experiment(&tiny()).unwrap();
        let rows = out.table.rows();
        let metrics: std::collections::BTreeSet<&str> =
            rows.iter().map(|r| r.metric.as_str()).collect();
        assert!(metrics.contains("nmse"));
        assert!(metrics.contains("ber"));
        assert!(metrics.contains("mean_candidates"));
        for r in &rows {
            assert_eq!(r.n, 3);
        }
        assert!(out.config_echo.contains("scenario"));
    }

    #[test]
    fn ml_perfect_csi_path_runs() {
        let mut cfg = tiny();
        cfg.estimator = EstimatorKind::PerfectCsi;
        cfg.detector = DetectorKind::Ml;
        let out = run_experiment(&cfg).unwrap();
        // perfect CSI reports no nmse
        assert!(out.table.mean_of(0, "nmse").is_none());
        assert!(out.table.mean_of(0, "ber").is_some());
    }

    #[test]
    fn joint_ce_dd_path_runs() {
        let mut cfg = tiny();
        cfg.estimator = EstimatorKind::JointCeDd;
        cfg.snr_grid_db = vec![10.0];
        let out = run_experiment(&cfg).unwrap();
        assert!(out.table.mean_of(0, "nmse").is_some());
    }

    #[test]
    fn ofdm_path_runs() {
        let mut cfg = tiny();
        cfg.scenario = ScenarioKind::Ofdm;
        cfg.detector = DetectorKind::OfdmSvm;
        cfg.nc = 16;
        cfg.ncp = 4;
        cfg.taps = 2;
        cfg.trials = 2;
        cfg.snr_grid_db = vec![10.0];
        let out = run_experiment(&cfg).unwrap();
        assert!(out.table.mean_of(0, "nmse").is_some());
        assert!(out.table.mean_of(0, "ber").is_some());
    }

    #[test]
    fn selftest_passes() {
        selftest().unwrap();
    }
}
