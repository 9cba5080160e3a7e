//! Post-training diagnostics: the spectrum of the learned dynamics matrix
//! against analytic decay rates, decoded eigenfunctions, prediction-error
//! tables per initial-condition family, encoder-vs-DFT and Cole-Hopf
//! comparisons, rank sweeps, and the data/architecture ablation grid.

pub mod report;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::koopman::train::{train, TrainConfig, TrainOutcome};
use crate::koopman::{KoopmanModel, ModelArch};
use crate::nn::tensor::Tensor;
use crate::numerics::eigen::eig_dense;
use crate::numerics::grid::Grid1D;
use crate::numerics::rng::CounterRng;
use crate::pde::solve::colehopf_transform;
use crate::pde::{Dataset, IcClass};

/// Floor applied to relative-error denominators so fully decayed states do
/// not blow up the statistics.
pub const REL_ERROR_FLOOR: f64 = 1e-12;

/// Spectrum of the learned dynamics matrix. Entries are sorted jointly by
/// the transformed value -log|lambda| / dt ascending, so `eigenvalues[i]`,
/// `transformed[i]`, and `eigenfunctions[i]` describe the same mode.
#[derive(Debug, Clone)]
pub struct EigenReport {
    pub eigenvalues: Vec<Complex64>,
    pub transformed: Vec<f64>,
    /// Decoded real parts of the unit eigenvectors, normalized to unit
    /// max-amplitude with a positive value at the leftmost extremum.
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// Eigenvalues of K mapped through -log|lambda| / dt and decoded
/// eigenfunctions. Complex pairs contribute two entries; their real parts
/// decode identically.
pub fn koopman_spectrum(model: &KoopmanModel, dt: f64) -> Result<EigenReport> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let k = model.realized_k();
    let pairs = eig_dense(&k)?;
    let vectors = pairs.vectors.expect("eig_dense returns vectors");
    let r = pairs.values.len();

    let mut order: Vec<usize> = (0..r).collect();
    let transformed: Vec<f64> = pairs
        .values
        .iter()
        .map(|l| {
            let mag = l.norm();
            if mag > 0.0 {
                -mag.ln() / dt
            } else {
                f64::INFINITY
            }
        })
        .collect();
    order.sort_by(|&a, &b| {
        transformed[a]
            .partial_cmp(&transformed[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                pairs.values[a]
                    .im
                    .partial_cmp(&pairs.values[b].im)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });

    // Decode the real parts of all eigenvectors in one batch.
    let mut batch = Tensor::zeros(&[r, r]);
    for (row, &i) in order.iter().enumerate() {
        for (j, z) in vectors[i].iter().enumerate() {
            batch.row_mut(row)[j] = z.re;
        }
    }
    let decoded = model.decode(&batch)?;
    let n = model.arch().n;
    let mut eigenfunctions = Vec::with_capacity(r);
    for row in 0..r {
        eigenfunctions.push(normalize_eigenfunction(&decoded.row(row)[..n]));
    }

    Ok(EigenReport {
        eigenvalues: order.iter().map(|&i| pairs.values[i]).collect(),
        transformed: order.iter().map(|&i| transformed[i]).collect(),
        eigenfunctions,
    })
}

/// Scale to unit max-amplitude and flip the sign so the leftmost point of
/// maximum magnitude is positive (decoded scalings are not unique).
fn normalize_eigenfunction(f: &[f64]) -> Vec<f64> {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, &x) in f.iter().enumerate() {
        if x.abs() > best_mag {
            best_mag = x.abs();
            best = i;
        }
    }
    if best_mag == 0.0 {
        return f.to_vec();
    }
    let scale = 1.0 / f[best];
    f.iter().map(|&x| x * scale).collect()
}

/// Per-IC-class root-mean-square relative prediction errors.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub horizons: Vec<usize>,
    pub classes: Vec<ClassErrors>,
}

#[derive(Debug, Clone)]
pub struct ClassErrors {
    pub class: IcClass,
    pub count: usize,
    /// RMS over the class's trajectories of the relative L2 error, one per
    /// horizon.
    pub rms_by_horizon: Vec<f64>,
    /// RMS pooled over every (trajectory, horizon) pair.
    pub rms_overall: f64,
}

impl ErrorReport {
    pub fn class(&self, class: IcClass) -> Option<&ClassErrors> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Compare multi-step predictions against stored states over the requested
/// horizons. The latent state advances once per step; nothing re-encodes
/// between steps.
pub fn prediction_error(
    model: &KoopmanModel,
    test: &Dataset,
    horizons: &[usize],
) -> Result<ErrorReport> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("need at least one horizon".into()));
    }
    let t_len = test.t_len();
    for &p in horizons {
        if p > t_len - 1 {
            return Err(Error::InvalidArgument(format!(
                "horizon {p} exceeds T-1 = {}",
                t_len - 1
            )));
        }
    }
    let n = test.n();
    if n != model.arch().n {
        return Err(Error::Shape(format!(
            "dataset width {n} does not match model width {}",
            model.arch().n
        )));
    }
    let m = test.count();
    let mut u0 = Tensor::zeros(&[m, n]);
    for (i, tr) in test.trajectories().iter().enumerate() {
        u0.row_mut(i).copy_from_slice(tr.state(0));
    }

    let max_h = *horizons.iter().max().unwrap();
    let mut sorted_h: Vec<usize> = horizons.to_vec();
    sorted_h.sort_unstable();
    sorted_h.dedup();

    // rel[i][hi]: relative L2 error of trajectory i at sorted_h[hi].
    let mut rel = vec![vec![0.0f64; sorted_h.len()]; m];
    let mut y = model.encode(&u0)?;
    let r = model.arch().r;
    let mut scratch = Vec::with_capacity(r);
    let mut h_idx = 0;
    for step in 0..=max_h {
        if step > 0 {
            for row in 0..m {
                model.k.apply(&mut y.row_mut(row)[..], &mut scratch);
            }
        }
        if h_idx < sorted_h.len() && sorted_h[h_idx] == step {
            let pred = model.decode(&y)?;
            for (i, tr) in test.trajectories().iter().enumerate() {
                let truth = tr.state(step);
                let num: f64 = pred
                    .row(i)
                    .iter()
                    .zip(truth)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                let den: f64 = truth.iter().map(|&b| b * b).sum();
                rel[i][h_idx] = (num.sqrt()) / den.sqrt().max(REL_ERROR_FLOOR);
            }
            h_idx += 1;
        }
    }

    let mut classes = Vec::new();
    for class in [
        IcClass::WhiteNoise,
        IcClass::Sine,
        IcClass::Square,
        IcClass::Gaussian,
        IcClass::Triangle,
    ] {
        let idx = test.indices_of(class);
        if idx.is_empty() {
            continue;
        }
        let mut by_h = Vec::with_capacity(sorted_h.len());
        let mut pooled = 0.0;
        for hi in 0..sorted_h.len() {
            let ms: f64 = idx.iter().map(|&i| rel[i][hi] * rel[i][hi]).sum::<f64>() / idx.len() as f64;
            by_h.push(ms.sqrt());
            pooled += ms;
        }
        classes.push(ClassErrors {
            class,
            count: idx.len(),
            rms_by_horizon: by_h,
            rms_overall: (pooled / sorted_h.len() as f64).sqrt(),
        });
    }

    Ok(ErrorReport {
        horizons: sorted_h,
        classes,
    })
}

/// Side-by-side report of the encoded coordinates and the r dominant DFT
/// coefficient magnitudes of the same state. Nothing is asserted equal; the
/// encoder may scale modes arbitrarily.
#[derive(Debug, Clone)]
pub struct DftComparison {
    pub encoded: Vec<f64>,
    pub dft_magnitude: Vec<f64>,
    pub dft_mode: Vec<usize>,
}

pub fn encoder_vs_dft(model: &KoopmanModel, grid: &Grid1D, u: &[f64]) -> Result<DftComparison> {
    let n = model.arch().n;
    if u.len() != n || grid.n() != n {
        return Err(Error::Shape(format!(
            "state length {} does not match model width {n}",
            u.len()
        )));
    }
    let r = model.arch().r;
    let batch = Tensor::from_vec(&[1, n], u.to_vec())?;
    let encoded = model.encode(&batch)?.data().to_vec();

    let spec = grid.rfft(u)?;
    let mut modes: Vec<usize> = (0..spec.coefficients.len()).collect();
    modes.sort_by(|&a, &b| {
        spec.coefficients[b]
            .norm()
            .partial_cmp(&spec.coefficients[a].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut dominant: Vec<usize> = modes.into_iter().take(r).collect();
    dominant.sort_unstable();
    let dft_magnitude = dominant.iter().map(|&m| spec.coefficients[m].norm()).collect();

    Ok(DftComparison {
        encoded,
        dft_magnitude,
        dft_mode: dominant,
    })
}

/// The outer-encoder output next to the analytic transform of the same
/// state. For inputs with nonzero spatial mean the analytic column is
/// omitted with a note (the transform requires a periodic antiderivative).
#[derive(Debug, Clone)]
pub struct ColehopfComparison {
    pub x: Vec<f64>,
    pub outer_encoded: Vec<f64>,
    pub colehopf: Option<Vec<f64>>,
    pub note: Option<String>,
}

pub fn compare_colehopf(
    model: &KoopmanModel,
    grid: &Grid1D,
    u: &[f64],
    epsilon: f64,
    mu: f64,
) -> Result<ColehopfComparison> {
    let n = model.arch().n;
    if u.len() != n || grid.n() != n {
        return Err(Error::Shape(format!(
            "state length {} does not match model width {n}",
            u.len()
        )));
    }
    let batch = Tensor::from_vec(&[1, n], u.to_vec())?;
    let outer = model.outer_encode(&batch)?.data().to_vec();
    let (colehopf, note) = match colehopf_transform(grid, u, epsilon, mu) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ColehopfComparison {
        x: grid.points(),
        outer_encoded: outer,
        colehopf,
        note,
    })
}

/// One row of a rank sweep.
#[derive(Debug, Clone)]
pub struct RankRow {
    pub rank: usize,
    pub val_total: Option<f64>,
    pub error: Option<String>,
}

/// Train one model per rank under identical budgets; failures are recorded
/// and the sweep continues. Each rank gets its own seed stream.
pub fn rank_sweep(
    template: &ModelArch,
    ranks: &[usize],
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<RankRow>> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("rank list is empty".into()));
    }
    let mut rows = Vec::with_capacity(ranks.len());
    for &rank in ranks {
        let arch = ModelArch {
            r: rank,
            ..*template
        };
        let row = (|| -> Result<f64> {
            arch.validate()?;
            let mut rng = CounterRng::stream(config.seed, rank as u64);
            let model = KoopmanModel::new(arch, &mut rng)?;
            let out = train(model, train_data, val_data, config)?;
            Ok(out.best_val_total)
        })();
        match row {
            Ok(v) => rows.push(RankRow {
                rank,
                val_total: Some(v),
                error: None,
            }),
            Err(e) => rows.push(RankRow {
                rank,
                val_total: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(rows)
}

/// One cell of the data/architecture ablation grid.
#[derive(Debug, Clone)]
pub struct AblationCell {
    pub mix: String,
    pub residual: bool,
    pub val_total: Option<f64>,
    pub errors: Option<ErrorReport>,
    pub error: Option<String>,
}

/// Train the (mix x skip/no-skip) grid under equal budgets and evaluate each
/// cell's per-class prediction errors on the shared test set.
#[allow(clippy::too_many_arguments)]
pub fn ablation_study(
    template: &ModelArch,
    mixes: &[(String, &Dataset, &Dataset)],
    test: &Dataset,
    horizons: &[usize],
    config: &TrainConfig,
) -> Result<Vec<AblationCell>> {
    if mixes.is_empty() {
        return Err(Error::InvalidArgument("no dataset mixes provided".into()));
    }
    let mut cells = Vec::new();
    for (mi, (mix_name, train_data, val_data)) in mixes.iter().enumerate() {
        for (vi, residual) in [(0usize, true), (1usize, false)] {
            let arch = ModelArch {
                residual,
                ..*template
            };
            let result = (|| -> Result<(f64, ErrorReport)> {
                let mut rng = CounterRng::stream(config.seed, (mi * 2 + vi) as u64);
                let model = KoopmanModel::new(arch, &mut rng)?;
                let out: TrainOutcome = train(model, train_data, val_data, config)?;
                let errors = prediction_error(&out.model, test, horizons)?;
                Ok((out.best_val_total, errors))
            })();
            match result {
                Ok((val_total, errors)) => cells.push(AblationCell {
                    mix: mix_name.clone(),
                    residual,
                    val_total: Some(val_total),
                    errors: Some(errors),
                    error: None,
                }),
                Err(e) => cells.push(AblationCell {
                    mix: mix_name.clone(),
                    residual,
                    val_total: None,
                    errors: None,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    Ok(cells)
}
