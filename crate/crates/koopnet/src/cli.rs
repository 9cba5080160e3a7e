//! Command implementations behind the `koopnet` binary. Every command is a
//! pure function of (config file, input files, seed) and writes its outputs
//! plus a resolved-config echo into the chosen output directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::report::{
    ablation_csv, dft_comparison_csv, eigenfunctions_csv, error_report_csv, identity_trials_csv,
    metrics_csv, rank_sweep_csv, spectrum_csv,
};
use crate::analysis::{koopman_spectrum, prediction_error, rank_sweep};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::koopman::{train, KoopmanModel};
use crate::nn::demo::demo_identity;
use crate::nn::tensor::Tensor;
use crate::numerics::rng::CounterRng;
use crate::pde::dataset::{read_kpd1, write_kpd1, GenerateOptions};
use crate::pde::ic::{sample_ic, IcClass};
use crate::pde::{generate_dataset, Dataset};

pub struct CommonOpts {
    pub seed: Option<u64>,
    pub threads: usize,
    pub out: PathBuf,
    /// Full command line, echoed into the provenance file.
    pub argv: String,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_echo(opts: &CommonOpts, config: Option<&RunConfig>) -> Result<()> {
    fs::create_dir_all(&opts.out).map_err(|e| Error::io(opts.out.display().to_string(), e))?;
    let mut body = format!("# command: {}\n", opts.argv);
    if let Some(cfg) = config {
        body.push_str(&cfg.resolved());
    }
    write_file(&opts.out, "config.resolved", &body)
}

fn load_config(path: &Path, opts: &CommonOpts) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(seed) = opts.seed {
        cfg.set("data.seed", seed.to_string())?;
        cfg.set("opt.seed", seed.to_string())?;
    }
    Ok(cfg)
}

fn generate_from_config(cfg: &RunConfig, threads: usize) -> Result<Dataset> {
    generate_dataset(
        cfg.pde()?,
        cfg.grid_n()?,
        cfg.data_mix()?,
        cfg.data_count()?,
        cfg.data_t_steps()?,
        cfg.data_dt()?,
        cfg.data_seed()?,
        &GenerateOptions {
            substeps: cfg.data_substeps()?,
            ranges: cfg.ic_ranges()?,
            threads,
            max_retries: 3,
        },
    )
}

pub fn cmd_datagen(config_path: &Path, opts: &CommonOpts) -> Result<()> {
    let cfg = load_config(config_path, opts)?;
    let dataset = generate_from_config(&cfg, opts.threads)?;
    write_echo(opts, Some(&cfg))?;
    write_kpd1(&opts.out.join("dataset.kpd"), &dataset)?;
    println!(
        "wrote {} ({} trajectories, T = {}, n = {})",
        opts.out.join("dataset.kpd").display(),
        dataset.count(),
        dataset.t_len(),
        dataset.n()
    );
    Ok(())
}

fn load_training_data(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let train_data = read_kpd1(&cfg.path("paths.train")?)?;
    let val_data = read_kpd1(&cfg.path("paths.val")?)?;
    Ok((train_data, val_data))
}

pub fn cmd_train(config_path: &Path, warm_start: Option<&Path>, opts: &CommonOpts) -> Result<()> {
    let cfg = load_config(config_path, opts)?;
    let (train_data, val_data) = load_training_data(&cfg)?;
    let arch = cfg.arch()?;
    if arch.n != train_data.n() {
        return Err(Error::Shape(format!(
            "grid.n = {} but training data has n = {}",
            arch.n,
            train_data.n()
        )));
    }
    let train_cfg = cfg.train_config(opts.threads)?;
    let model = match warm_start {
        Some(ckpt) => KoopmanModel::warm_start(arch, ckpt)?,
        None => {
            let mut rng = CounterRng::new(train_cfg.seed);
            KoopmanModel::new(arch, &mut rng)?
        }
    };
    let outcome = train(model, &train_data, &val_data, &train_cfg)?;
    write_echo(opts, Some(&cfg))?;
    outcome.model.save(&opts.out.join("checkpoint.kpm"))?;
    write_file(&opts.out, "metrics.csv", &metrics_csv(&outcome.metrics))?;
    println!(
        "trained {} epochs; best validation total {} at epoch {}",
        outcome.metrics.len(),
        outcome.best_val_total,
        outcome.best_epoch
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_predict(
    checkpoint: &Path,
    dataset: Option<&Path>,
    traj_index: usize,
    config: Option<&Path>,
    ic: Option<&str>,
    horizon: usize,
    opts: &CommonOpts,
) -> Result<()> {
    let model = KoopmanModel::load(checkpoint)?;
    let n = model.arch().n;

    // Initial state plus optional exact rows for comparison.
    let (u0, exact, cfg): (Vec<f64>, Option<Vec<Vec<f64>>>, Option<RunConfig>) =
        match (dataset, ic) {
            (Some(path), None) => {
                let ds = read_kpd1(path)?;
                if ds.n() != n {
                    return Err(Error::Shape(format!(
                        "dataset width {} does not match model width {n}",
                        ds.n()
                    )));
                }
                if traj_index >= ds.count() {
                    return Err(Error::InvalidArgument(format!(
                        "trajectory index {traj_index} out of range (dataset has {})",
                        ds.count()
                    )));
                }
                let tr = &ds.trajectories()[traj_index];
                let rows = (0..tr.t_len().min(horizon + 1))
                    .map(|t| tr.state(t).to_vec())
                    .collect();
                (tr.state(0).to_vec(), Some(rows), None)
            }
            (None, Some(class_name)) => {
                let config_path = config.ok_or_else(|| {
                    Error::InvalidArgument("--ic needs --config for the grid and ranges".into())
                })?;
                let cfg = load_config(config_path, opts)?;
                let grid = cfg.pde()?.grid(cfg.grid_n()?)?;
                if grid.n() != n {
                    return Err(Error::Shape(format!(
                        "grid.n = {} does not match model width {n}",
                        grid.n()
                    )));
                }
                let class = match class_name {
                    "white_noise" => IcClass::WhiteNoise,
                    "sine" => IcClass::Sine,
                    "square" => IcClass::Square,
                    "gaussian" => IcClass::Gaussian,
                    "triangle" => IcClass::Triangle,
                    other => {
                        return Err(Error::InvalidArgument(format!("unknown IC class {other:?}")))
                    }
                };
                let mut rng = CounterRng::new(cfg.data_seed()?);
                let sample = sample_ic(class, &grid, &cfg.ic_ranges()?, &mut rng)?;
                (sample.evaluate(&grid, &mut rng), None, Some(cfg))
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "pass exactly one of --dataset or --ic".into(),
                ))
            }
        };

    // Advance the latent state once per step, decoding at every step.
    let mut csv = String::from("step,source");
    for j in 0..n {
        csv.push_str(&format!(",u{j}"));
    }
    csv.push('\n');
    let mut push_row = |step: usize, source: &str, values: &[f64]| {
        csv.push_str(&format!("{step},{source}"));
        for v in values {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    };

    let batch = Tensor::from_vec(&[1, n], u0.clone())?;
    let mut y = model.encode(&batch)?;
    let mut scratch = Vec::new();
    for step in 0..=horizon {
        if step > 0 {
            model.k().apply(&mut y.row_mut(0)[..], &mut scratch);
        }
        let decoded = model.decode(&y)?;
        push_row(step, "predicted", decoded.data());
        if let Some(rows) = &exact {
            if let Some(truth) = rows.get(step) {
                push_row(step, "exact", truth);
            }
        }
    }

    write_echo(opts, cfg.as_ref())?;
    write_file(&opts.out, "prediction.csv", &csv)?;
    println!("wrote {}", opts.out.join("prediction.csv").display());
    Ok(())
}

pub fn cmd_spectrum(checkpoint: &Path, dt: f64, opts: &CommonOpts) -> Result<()> {
    let model = KoopmanModel::load(checkpoint)?;
    let report = koopman_spectrum(&model, dt)?;
    write_echo(opts, None)?;
    write_file(&opts.out, "spectrum.csv", &spectrum_csv(&report))?;
    write_file(&opts.out, "eigenfunctions.csv", &eigenfunctions_csv(&report))?;
    println!("wrote {}", opts.out.join("spectrum.csv").display());
    Ok(())
}

pub fn cmd_eval(
    checkpoint: &Path,
    dataset: &Path,
    horizons: &[usize],
    opts: &CommonOpts,
) -> Result<()> {
    let model = KoopmanModel::load(checkpoint)?;
    let ds = read_kpd1(dataset)?;
    let report = prediction_error(&model, &ds, horizons)?;
    write_echo(opts, None)?;
    write_file(&opts.out, "errors.csv", &error_report_csv(&report))?;
    println!("wrote {}", opts.out.join("errors.csv").display());
    Ok(())
}

pub fn cmd_sweep_rank(config_path: &Path, ranks: &[usize], opts: &CommonOpts) -> Result<()> {
    let cfg = load_config(config_path, opts)?;
    let (train_data, val_data) = load_training_data(&cfg)?;
    let template = cfg.arch()?;
    let train_cfg = cfg.train_config(opts.threads)?;
    let rows = rank_sweep(&template, ranks, &train_data, &val_data, &train_cfg)?;
    write_echo(opts, Some(&cfg))?;
    write_file(&opts.out, "sweep.csv", &rank_sweep_csv(&rows))?;
    println!("wrote {}", opts.out.join("sweep.csv").display());
    Ok(())
}

/// Chained training across increasing time steps: each stage warm-starts
/// from the previous stage's checkpoint and is compared against a cold start
/// under the same epoch budget.
pub fn cmd_homotopy(config_path: &Path, dts: &[f64], opts: &CommonOpts) -> Result<()> {
    if dts.len() < 2 {
        return Err(Error::InvalidArgument(
            "homotopy needs at least two dt values".into(),
        ));
    }
    let cfg = load_config(config_path, opts)?;
    let arch = cfg.arch()?;
    let train_cfg = cfg.train_config(opts.threads)?;
    write_echo(opts, Some(&cfg))?;

    let data_for = |dt: f64, role_seed: u64, count: usize| -> Result<Dataset> {
        let mut stage_cfg = cfg.clone();
        stage_cfg.set("data.dt", dt.to_string())?;
        stage_cfg.set(
            "data.seed",
            (cfg.data_seed()?.wrapping_add(role_seed)).to_string(),
        )?;
        stage_cfg.set("data.count", count.to_string())?;
        generate_from_config(&stage_cfg, opts.threads)
    };

    let mut csv = String::from("dt,cold_val_total,warm_val_total\n");
    let mut chain: Option<KoopmanModel> = None;
    for (stage, &dt) in dts.iter().enumerate() {
        let count = cfg.data_count()?;
        let train_data = data_for(dt, 0, count)?;
        let val_data = data_for(dt, 1, (count / 4).max(1))?;

        let cold_model = {
            let mut rng = CounterRng::new(train_cfg.seed);
            KoopmanModel::new(arch, &mut rng)?
        };
        let cold = train(cold_model, &train_data, &val_data, &train_cfg)?;
        cold.model
            .save(&opts.out.join(format!("cold_dt{stage}.kpm")))?;

        match chain.take() {
            None => {
                // First stage: the chain starts from the cold run.
                csv.push_str(&format!("{dt},{},\n", cold.best_val_total));
                chain = Some(cold.model);
            }
            Some(prev) => {
                let warm = train(prev, &train_data, &val_data, &train_cfg)?;
                warm.model
                    .save(&opts.out.join(format!("warm_dt{stage}.kpm")))?;
                csv.push_str(&format!(
                    "{dt},{},{}\n",
                    cold.best_val_total, warm.best_val_total
                ));
                chain = Some(warm.model);
            }
        }
    }
    write_file(&opts.out, "homotopy.csv", &csv)?;
    println!("wrote {}", opts.out.join("homotopy.csv").display());
    Ok(())
}

pub fn cmd_demo_identity(seed: u64, trials: usize, opts: &CommonOpts) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let reports = demo_identity(seed, trials)?;
    write_echo(opts, None)?;
    write_file(&opts.out, "trials.csv", &identity_trials_csv(&reports))?;
    for (i, t) in reports.iter().enumerate() {
        println!(
            "trial {i}: in-domain MSE {:.3e}, f(2) = {:.4}",
            t.in_domain_mse, t.value_at_2
        );
    }
    Ok(())
}

/// Emit the encoder-vs-DFT comparison for a dataset state (used by the
/// analysis workflows; exposed for parity with the report set).
pub fn cmd_encoder_dft(
    checkpoint: &Path,
    dataset: &Path,
    traj_index: usize,
    opts: &CommonOpts,
) -> Result<()> {
    let model = KoopmanModel::load(checkpoint)?;
    let ds = read_kpd1(dataset)?;
    if traj_index >= ds.count() {
        return Err(Error::InvalidArgument(format!(
            "trajectory index {traj_index} out of range"
        )));
    }
    let cmp = crate::analysis::encoder_vs_dft(
        &model,
        ds.grid(),
        ds.trajectories()[traj_index].state(0),
    )?;
    write_echo(opts, None)?;
    write_file(&opts.out, "encoder_dft.csv", &dft_comparison_csv(&cmp))?;
    println!("wrote {}", opts.out.join("encoder_dft.csv").display());
    Ok(())
}

/// Run the data/architecture ablation grid from a config (mixes regenerated
/// per cell label).
pub fn cmd_ablation(config_path: &Path, horizons: &[usize], opts: &CommonOpts) -> Result<()> {
    let cfg = load_config(config_path, opts)?;
    let template = cfg.arch()?;
    let train_cfg = cfg.train_config(opts.threads)?;

    let gen_mix = |mix: &str, seed_offset: u64, count: usize| -> Result<Dataset> {
        let mut c = cfg.clone();
        c.set("data.mix", mix)?;
        c.set(
            "data.seed",
            (cfg.data_seed()?.wrapping_add(seed_offset)).to_string(),
        )?;
        c.set("data.count", count.to_string())?;
        generate_from_config(&c, opts.threads)
    };
    let count = cfg.data_count()?;
    let train1 = gen_mix("1", 0, count)?;
    let val1 = gen_mix("1", 1, (count / 4).max(1))?;
    let train3 = gen_mix("3", 2, count)?;
    let val3 = gen_mix("3", 3, (count / 4).max(1))?;
    let test = gen_mix("test", 4, (count / 2).max(1))?;

    let mixes = vec![
        ("1".to_string(), &train1, &val1),
        ("3".to_string(), &train3, &val3),
    ];
    let cells = crate::analysis::ablation_study(&template, &mixes, &test, horizons, &train_cfg)?;
    write_echo(opts, Some(&cfg))?;
    write_file(&opts.out, "ablation.csv", &ablation_csv(&cells))?;
    println!("wrote {}", opts.out.join("ablation.csv").display());
    Ok(())
}
