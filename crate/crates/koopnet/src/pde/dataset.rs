//! Trajectory datasets: stratified generation across IC mixes and the KPD1
//! on-disk format.
//!
//! KPD1 layout (little-endian): magic "KPD1", u32 version = 1, u32 n, u32 T,
//! u32 trajectory count M, f64 dt, f64 a, f64 b, u32 pde tag, M u32 IC tags,
//! then M*T*n f64 states ordered trajectory-major, time-major, grid fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::grid::Grid1D;
use crate::numerics::rng::CounterRng;
use crate::numerics::sampling::latin_hypercube;
use crate::pde::ic::{sample_ic, IcClass, IcRanges, InitialCondition};
use crate::pde::solve::solve_sampled;
use crate::pde::{PdeKind, Trajectory};
use crate::util::map_chunks;

pub const MAGIC: &[u8; 4] = b"KPD1";
pub const VERSION: u32 = 1;

/// Which IC families a dataset draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    /// White noise only.
    Mix1,
    /// White noise + sines.
    Mix2,
    /// White noise + sines + square waves.
    Mix3,
    /// The three training families plus Gaussians and triangles (test data).
    Test,
}

impl Mix {
    pub fn classes(&self) -> &'static [IcClass] {
        match self {
            Mix::Mix1 => &[IcClass::WhiteNoise],
            Mix::Mix2 => &[IcClass::WhiteNoise, IcClass::Sine],
            Mix::Mix3 => &[IcClass::WhiteNoise, IcClass::Sine, IcClass::Square],
            Mix::Test => &[
                IcClass::WhiteNoise,
                IcClass::Sine,
                IcClass::Square,
                IcClass::Gaussian,
                IcClass::Triangle,
            ],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mix::Mix1 => "1",
            Mix::Mix2 => "2",
            Mix::Mix3 => "3",
            Mix::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "1" => Mix::Mix1,
            "2" => Mix::Mix2,
            "3" => Mix::Mix3,
            "test" => Mix::Test,
            _ => {
                return Err(Error::Config(format!(
                    "unknown mix {s:?} (expected 1, 2, 3, or test)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pde: PdeKind,
    trajectories: Vec<Trajectory>,
    ic_tags: Vec<IcClass>,
    mix_name: String,
    seed: u64,
}

impl Dataset {
    pub fn new(
        pde: PdeKind,
        trajectories: Vec<Trajectory>,
        ic_tags: Vec<IcClass>,
        mix_name: String,
        seed: u64,
    ) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one trajectory".into()));
        }
        if trajectories.len() != ic_tags.len() {
            return Err(Error::Shape(format!(
                "{} trajectories but {} IC tags",
                trajectories.len(),
                ic_tags.len()
            )));
        }
        let first = &trajectories[0];
        for t in &trajectories[1..] {
            if t.grid() != first.grid() || t.dt() != first.dt() || t.t_len() != first.t_len() {
                return Err(Error::Shape("trajectories must share grid, dt, and T".into()));
            }
        }
        Ok(Dataset {
            pde,
            trajectories,
            ic_tags,
            mix_name,
            seed,
        })
    }

    pub fn pde(&self) -> &PdeKind {
        &self.pde
    }

    pub fn grid(&self) -> &Grid1D {
        self.trajectories[0].grid()
    }

    pub fn dt(&self) -> f64 {
        self.trajectories[0].dt()
    }

    pub fn t_len(&self) -> usize {
        self.trajectories[0].t_len()
    }

    pub fn n(&self) -> usize {
        self.grid().n()
    }

    pub fn count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn ic_tags(&self) -> &[IcClass] {
        &self.ic_tags
    }

    pub fn mix_name(&self) -> &str {
        &self.mix_name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Indices of trajectories with the given IC class.
    pub fn indices_of(&self, class: IcClass) -> Vec<usize> {
        self.ic_tags
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == class)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    /// Solver substeps per snapshot; 0 picks the per-PDE default.
    pub substeps: usize,
    pub ranges: IcRanges,
    pub threads: usize,
    /// How many fresh ICs to try when the solver diverges.
    pub max_retries: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            substeps: 0,
            ranges: IcRanges::default(),
            threads: 1,
            max_retries: 3,
        }
    }
}

/// Generate `count` trajectories of the given PDE, ICs assigned round-robin
/// over the mix's families. Stratified families consume exactly one latin
/// hypercube per batch. Every trajectory derives its randomness from
/// (seed, index), so parallel and serial runs produce identical datasets.
pub fn generate_dataset(
    pde: PdeKind,
    n: usize,
    mix: Mix,
    count: usize,
    t_len: usize,
    dt: f64,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<Dataset> {
    pde.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("trajectory count must be positive".into()));
    }
    if t_len < 2 {
        return Err(Error::InvalidArgument("need at least 2 time steps".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let grid = pde.grid(n)?;
    let substeps = if opts.substeps == 0 {
        pde.default_substeps()
    } else {
        opts.substeps
    };

    let classes = mix.classes();
    let class_of = |i: usize| classes[i % classes.len()];

    // Draw stratified parameter batches up front, one latin hypercube per
    // family, using a dedicated stream per class so trajectory streams stay
    // untouched.
    let mut params: Vec<Option<InitialCondition>> = vec![None; count];
    for &class in classes {
        let dims = IcRanges::lhc_dims(class);
        if dims == 0 {
            continue;
        }
        let indices: Vec<usize> = (0..count).filter(|&i| class_of(i) == class).collect();
        if indices.is_empty() {
            continue;
        }
        let mut class_rng = CounterRng::stream(seed, (1 << 32) + class.tag() as u64);
        let cube = latin_hypercube(dims, indices.len(), &mut class_rng)?;
        for (row, &i) in indices.iter().enumerate() {
            params[i] = Some(opts.ranges.from_unit(class, cube.row(row), &grid, &mut class_rng)?);
        }
    }

    let results = map_chunks(count, 16, opts.threads.max(1), |range| {
        range
            .map(|i| -> Result<(Trajectory, IcClass)> {
                let mut rng = CounterRng::stream(seed, i as u64);
                let class = class_of(i);
                let mut ic = match &params[i] {
                    Some(p) => p.clone(),
                    None => InitialCondition::WhiteNoise {
                        sigma: opts.ranges.sigma,
                    },
                };
                let mut attempt = 0;
                loop {
                    let u0 = ic.evaluate(&grid, &mut rng);
                    match solve_sampled(&pde, &grid, &u0, dt, t_len, substeps) {
                        Ok(traj) => return Ok((traj, class)),
                        Err(Error::Divergence(msg)) => {
                            attempt += 1;
                            if attempt > opts.max_retries {
                                return Err(Error::Divergence(format!(
                                    "trajectory {i}: retries exhausted: {msg}"
                                )));
                            }
                            eprintln!(
                                "warning: trajectory {i} diverged (attempt {attempt}), resampling IC"
                            );
                            ic = sample_ic(class, &grid, &opts.ranges, &mut rng)?;
                        }
                        Err(e) => return Err(e),
                    }
                }
            })
            .collect::<Vec<_>>()
    });

    let mut trajectories = Vec::with_capacity(count);
    let mut tags = Vec::with_capacity(count);
    for chunk in results {
        for item in chunk {
            let (traj, class) = item?;
            trajectories.push(traj);
            tags.push(class);
        }
    }

    Dataset::new(pde, trajectories, tags, mix.name().to_string(), seed)
}

pub fn write_kpd1(path: &Path, dataset: &Dataset) -> Result<()> {
    let n = dataset.n();
    let t_len = dataset.t_len();
    let m = dataset.count();
    let mut buf: Vec<u8> = Vec::with_capacity(40 + 4 * m + 8 * m * t_len * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(t_len as u32).to_le_bytes());
    buf.extend_from_slice(&(m as u32).to_le_bytes());
    buf.extend_from_slice(&dataset.dt().to_le_bytes());
    buf.extend_from_slice(&dataset.grid().a().to_le_bytes());
    buf.extend_from_slice(&dataset.grid().b().to_le_bytes());
    buf.extend_from_slice(&dataset.pde().tag().to_le_bytes());
    for tag in dataset.ic_tags() {
        buf.extend_from_slice(&tag.tag().to_le_bytes());
    }
    for traj in dataset.trajectories() {
        for &x in traj.states() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Read a KPD1 file. Burgers datasets come back with the reference
/// parameters (eps = 10, mu = 1); the format does not carry them, the
/// config sidecar written next to every generated file does.
pub fn read_kpd1(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let display = path.display().to_string();
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > bytes.len() {
            return Err(Error::Format(format!("{display}: truncated KPD1 file")));
        }
        let s = &bytes[*pos..*pos + len];
        *pos += len;
        Ok(s)
    };
    let read_u32 = |pos: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
    };
    let read_f64 = |pos: &mut usize| -> Result<f64> {
        Ok(f64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
    };

    if take(&mut pos, 4)? != MAGIC {
        return Err(Error::Format(format!("{display}: bad magic, expected KPD1")));
    }
    let version = read_u32(&mut pos)?;
    if version != VERSION {
        return Err(Error::Format(format!("{display}: unsupported version {version}")));
    }
    let n = read_u32(&mut pos)? as usize;
    let t_len = read_u32(&mut pos)? as usize;
    let m = read_u32(&mut pos)? as usize;
    let dt = read_f64(&mut pos)?;
    let a = read_f64(&mut pos)?;
    let b = read_f64(&mut pos)?;
    let pde = match read_u32(&mut pos)? {
        0 => PdeKind::Heat,
        1 => PdeKind::Burgers { epsilon: 10.0, mu: 1.0 },
        2 => PdeKind::Ks,
        tag => return Err(Error::Format(format!("{display}: unknown pde tag {tag}"))),
    };
    let mut tags = Vec::with_capacity(m);
    for _ in 0..m {
        tags.push(IcClass::from_tag(read_u32(&mut pos)?)?);
    }
    let grid = Grid1D::new(n, a, b)?;
    let mut trajectories = Vec::with_capacity(m);
    for _ in 0..m {
        let mut states = Vec::with_capacity(t_len * n);
        for _ in 0..t_len * n {
            states.push(read_f64(&mut pos)?);
        }
        trajectories.push(Trajectory::new(grid, dt, t_len, states)?);
    }
    if pos != bytes.len() {
        return Err(Error::Format(format!("{display}: trailing bytes")));
    }
    let mix_name = "file".to_string();
    Dataset::new(pde, trajectories, tags, mix_name, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::solve::heat_solve;

    #[test]
    fn heat_dataset_rows_match_exact_solver() {
        let ds = generate_dataset(
            PdeKind::Heat,
            32,
            Mix::Mix1,
            10,
            50,
            0.0025,
            42,
            &GenerateOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.count(), 10);
        assert_eq!(ds.t_len(), 50);
        for traj in ds.trajectories() {
            for t in 0..50 {
                let expected = heat_solve(ds.grid(), traj.state(0), t as f64 * 0.0025).unwrap();
                for (a, b) in traj.state(t).iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn mix3_balances_classes() {
        let ds = generate_dataset(
            PdeKind::Heat,
            16,
            Mix::Mix3,
            9,
            5,
            0.01,
            7,
            &GenerateOptions::default(),
        )
        .unwrap();
        for class in [IcClass::WhiteNoise, IcClass::Sine, IcClass::Square] {
            assert_eq!(ds.indices_of(class).len(), 3, "{class:?}");
        }
    }

    #[test]
    fn burgers_mix3_small_set_is_finite() {
        let ds = generate_dataset(
            PdeKind::Burgers { epsilon: 10.0, mu: 1.0 },
            32,
            Mix::Mix3,
            6,
            11,
            0.002,
            3,
            &GenerateOptions::default(),
        )
        .unwrap();
        for traj in ds.trajectories() {
            assert!(traj.states().iter().all(|x| x.is_finite()));
            let max = traj.states().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            assert!(max < 100.0, "state blew up to {max}");
        }
    }

    #[test]
    fn parallel_generation_matches_serial() {
        let serial = generate_dataset(
            PdeKind::Burgers { epsilon: 10.0, mu: 1.0 },
            32,
            Mix::Mix3,
            8,
            6,
            0.002,
            11,
            &GenerateOptions::default(),
        )
        .unwrap();
        let parallel = generate_dataset(
            PdeKind::Burgers { epsilon: 10.0, mu: 1.0 },
            32,
            Mix::Mix3,
            8,
            6,
            0.002,
            11,
            &GenerateOptions {
                threads: 4,
                ..GenerateOptions::default()
            },
        )
        .unwrap();
        for (a, b) in serial.trajectories().iter().zip(parallel.trajectories()) {
            assert_eq!(a.states(), b.states());
        }
    }

    #[test]
    fn kpd1_roundtrip() {
        let dir = std::env::temp_dir().join("koopnet_kpd_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.kpd");
        let ds = generate_dataset(
            PdeKind::Heat,
            16,
            Mix::Mix2,
            4,
            6,
            0.0025,
            99,
            &GenerateOptions::default(),
        )
        .unwrap();
        write_kpd1(&path, &ds).unwrap();
        let back = read_kpd1(&path).unwrap();
        assert_eq!(back.count(), 4);
        assert_eq!(back.t_len(), 6);
        assert_eq!(back.n(), 16);
        assert_eq!(back.dt(), 0.0025);
        assert_eq!(back.ic_tags(), ds.ic_tags());
        for (a, b) in back.trajectories().iter().zip(ds.trajectories()) {
            assert_eq!(a.states(), b.states());
        }
        // byte-identical on rewrite
        let again = dir.join("again.kpd");
        write_kpd1(&again, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
        fs::remove_file(&path).unwrap();
        fs::remove_file(&again).unwrap();
    }

    #[test]
    fn sine_batch_consumes_one_hypercube() {
        // Sine amplitudes across the batch must occupy distinct strata.
        let ds = generate_dataset(
            PdeKind::Heat,
            32,
            Mix::Mix2,
            20,
            4,
            0.01,
            13,
            &GenerateOptions::default(),
        )
        .unwrap();
        let sines = ds.indices_of(IcClass::Sine);
        let m = sines.len();
        assert_eq!(m, 10);
        // Recover each amplitude exactly from the dominant Fourier mode of
        // the stored initial state (A sin(wx + phi) has |c_w| = A n / 2).
        let mut strata = vec![false; m];
        for &i in &sines {
            let u0 = ds.trajectories()[i].state(0);
            let spec = ds.grid().rfft(u0).unwrap();
            let amp = spec
                .coefficients
                .iter()
                .map(|c| 2.0 * c.norm() / 32.0)
                .fold(0.0f64, f64::max);
            let bin = ((amp * m as f64).floor() as usize).min(m - 1);
            assert!(!strata[bin], "two sine amplitudes in stratum {bin}");
            strata[bin] = true;
        }
        assert!(strata.iter().all(|&s| s));
    }
}
