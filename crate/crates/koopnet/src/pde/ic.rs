//! Initial-condition families and their samplers.
//!
//! Sine parameters follow the stated distributions (amplitude and phase from
//! a latin hypercube, integer frequency from a truncated geometric). The
//! square/Gaussian/triangle parameter ranges are configurable; defaults are
//! scaled to the domain length.

use crate::error::{Error, Result};
use crate::numerics::grid::Grid1D;
use crate::numerics::rng::CounterRng;
use crate::numerics::sampling::{latin_hypercube, truncated_geometric};

/// IC family tag; also the on-disk u32 tag in KPD1 files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IcClass {
    WhiteNoise = 0,
    Sine = 1,
    Square = 2,
    Gaussian = 3,
    Triangle = 4,
}

impl IcClass {
    pub fn tag(self) -> u32 {
        self as u32
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        Ok(match tag {
            0 => IcClass::WhiteNoise,
            1 => IcClass::Sine,
            2 => IcClass::Square,
            3 => IcClass::Gaussian,
            4 => IcClass::Triangle,
            _ => return Err(Error::Format(format!("unknown IC tag {tag}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            IcClass::WhiteNoise => "white_noise",
            IcClass::Sine => "sine",
            IcClass::Square => "square",
            IcClass::Gaussian => "gaussian",
            IcClass::Triangle => "triangle",
        }
    }
}

/// A concrete initial condition.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    WhiteNoise { sigma: f64 },
    Sine { amplitude: f64, omega: usize, phase: f64 },
    Square { height: f64, width: f64, center: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Triangle { amplitude: f64, center: f64, half_width: f64 },
}

impl InitialCondition {
    pub fn class(&self) -> IcClass {
        match self {
            InitialCondition::WhiteNoise { .. } => IcClass::WhiteNoise,
            InitialCondition::Sine { .. } => IcClass::Sine,
            InitialCondition::Square { .. } => IcClass::Square,
            InitialCondition::Gaussian { .. } => IcClass::Gaussian,
            InitialCondition::Triangle { .. } => IcClass::Triangle,
        }
    }

    /// Render on the grid. White noise draws from `rng`; the other families
    /// are deterministic given their parameters. Localized shapes wrap
    /// periodically.
    pub fn evaluate(&self, grid: &Grid1D, rng: &mut CounterRng) -> Vec<f64> {
        let length = grid.length();
        let wrap = |d: f64| d - length * (d / length).round();
        match self {
            InitialCondition::WhiteNoise { sigma } => {
                (0..grid.n()).map(|_| sigma * rng.next_normal()).collect()
            }
            InitialCondition::Sine { amplitude, omega, phase } => {
                grid.sample(|x| amplitude * (*omega as f64 * x + phase).sin())
            }
            InitialCondition::Square { height, width, center } => grid.sample(|x| {
                if wrap(x - center).abs() <= width / 2.0 {
                    *height
                } else {
                    0.0
                }
            }),
            InitialCondition::Gaussian { amplitude, center, width } => grid.sample(|x| {
                let d = wrap(x - center);
                amplitude * (-d * d / (2.0 * width * width)).exp()
            }),
            InitialCondition::Triangle { amplitude, center, half_width } => grid.sample(|x| {
                let d = wrap(x - center).abs();
                amplitude * (1.0 - d / half_width).max(0.0)
            }),
        }
    }
}

/// Configurable parameter ranges for the sampled families.
#[derive(Debug, Clone, PartialEq)]
pub struct IcRanges {
    /// White-noise standard deviation.
    pub sigma: f64,
    /// Success probability of the truncated geometric over frequencies 1..=10.
    pub geometric_p: f64,
    pub omega_max: usize,
    pub sine_amplitude: (f64, f64),
    pub square_height: (f64, f64),
    /// Square width as a fraction of the domain length L: (min, max * L).
    pub square_width: (f64, f64),
    pub gaussian_amplitude: (f64, f64),
    /// Gaussian width in fractions of L.
    pub gaussian_width: (f64, f64),
    pub triangle_amplitude: (f64, f64),
    /// Triangle half-width in fractions of L.
    pub triangle_half_width: (f64, f64),
}

impl Default for IcRanges {
    fn default() -> Self {
        IcRanges {
            sigma: 0.5,
            geometric_p: 0.25,
            omega_max: 10,
            sine_amplitude: (0.0, 1.0),
            square_height: (0.2, 1.0),
            square_width: (0.5, 0.25), // min absolute, max as fraction of L
            gaussian_amplitude: (0.2, 1.0),
            gaussian_width: (1.0 / 32.0, 1.0 / 8.0),
            triangle_amplitude: (0.2, 1.0),
            triangle_half_width: (1.0 / 16.0, 0.25),
        }
    }
}

impl IcRanges {
    /// Latin-hypercube dimensionality of a family (0 = not stratified).
    pub fn lhc_dims(class: IcClass) -> usize {
        match class {
            IcClass::WhiteNoise => 0,
            IcClass::Sine => 2,
            IcClass::Square => 3,
            IcClass::Gaussian => 3,
            IcClass::Triangle => 3,
        }
    }

    /// Map a unit-cube latin-hypercube row (plus the geometric frequency
    /// draw for sines) onto concrete parameters.
    pub fn from_unit(
        &self,
        class: IcClass,
        unit: &[f64],
        grid: &Grid1D,
        rng: &mut CounterRng,
    ) -> Result<InitialCondition> {
        let l = grid.length();
        let lerp = |(lo, hi): (f64, f64), u: f64| lo + (hi - lo) * u;
        Ok(match class {
            IcClass::WhiteNoise => InitialCondition::WhiteNoise { sigma: self.sigma },
            IcClass::Sine => InitialCondition::Sine {
                amplitude: lerp(self.sine_amplitude, unit[0]),
                omega: truncated_geometric(self.geometric_p, self.omega_max, rng)?,
                phase: 2.0 * std::f64::consts::PI * unit[1],
            },
            IcClass::Square => InitialCondition::Square {
                height: lerp(self.square_height, unit[0]),
                width: lerp((self.square_width.0, self.square_width.1 * l), unit[1]),
                center: grid.a() + l * unit[2],
            },
            IcClass::Gaussian => InitialCondition::Gaussian {
                amplitude: lerp(self.gaussian_amplitude, unit[0]),
                center: grid.a() + l * unit[1],
                width: lerp((self.gaussian_width.0 * l, self.gaussian_width.1 * l), unit[2]),
            },
            IcClass::Triangle => InitialCondition::Triangle {
                amplitude: lerp(self.triangle_amplitude, unit[0]),
                center: grid.a() + l * unit[1],
                half_width: lerp(
                    (self.triangle_half_width.0 * l, self.triangle_half_width.1 * l),
                    unit[2],
                ),
            },
        })
    }
}

/// Sample one initial condition of the given family (a batch of one: the
/// latin hypercube degenerates to a plain uniform draw).
pub fn sample_ic(
    class: IcClass,
    grid: &Grid1D,
    ranges: &IcRanges,
    rng: &mut CounterRng,
) -> Result<InitialCondition> {
    let d = IcRanges::lhc_dims(class).max(1);
    let unit = latin_hypercube(d, 1, rng)?;
    ranges.from_unit(class, unit.row(0), grid, rng)
}
