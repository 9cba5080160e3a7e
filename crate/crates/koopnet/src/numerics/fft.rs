//! Iterative radix-2 FFT with precomputed twiddle tables.
//!
//! Grid sizes in this crate are powers of two, so no mixed-radix support.
//! The forward transform is unnormalized, `X_m = sum_j u_j exp(-2 pi i j m / n)`;
//! the inverse divides by n.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-input FFT output: the `n/2 + 1` nonredundant coefficients together
/// with the physical wavenumbers `k_m = 2 pi m / L` of the domain they were
/// computed on.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
    pub wavenumbers: Vec<f64>,
}

/// Precomputed plan for transforms of one size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    // twiddles[k] = exp(-2 pi i k / n) for k < n/2
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Length(format!(
                "FFT length must be a power of two >= 2, got {n}"
            )));
        }
        let half = n / 2;
        let mut twiddles = Vec::with_capacity(half);
        for k in 0..half {
            let angle = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            twiddles.push(Complex64::new(angle.cos(), angle.sin()));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| i.reverse_bits() >> (32 - bits))
            .collect();
        Ok(FftPlan { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform, unnormalized.
    pub fn fft_inplace(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n);
        for i in 0..self.n {
            let j = self.bitrev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let step = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len *= 2;
        }
    }

    /// In-place inverse transform including the 1/n scaling.
    pub fn ifft_inplace(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.fft_inplace(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z = z.conj() * scale;
        }
    }

    /// Forward transform of a real signal; returns the n/2 + 1 coefficients.
    pub fn rfft(&self, u: &[f64]) -> Result<Vec<Complex64>> {
        if u.len() != self.n {
            return Err(Error::Length(format!(
                "rfft input length {} does not match plan size {}",
                u.len(),
                self.n
            )));
        }
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft_inplace(&mut buf);
        buf.truncate(self.n / 2 + 1);
        Ok(buf)
    }

    /// Inverse of [`FftPlan::rfft`]: rebuilds the Hermitian-symmetric spectrum
    /// and returns the real signal.
    pub fn irfft(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        let half = self.n / 2;
        if coeffs.len() != half + 1 {
            return Err(Error::Shape(format!(
                "irfft expects {} coefficients for length {}, got {}",
                half + 1,
                self.n,
                coeffs.len()
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        buf[..=half].copy_from_slice(coeffs);
        for m in 1..half {
            buf[self.n - m] = coeffs[m].conj();
        }
        self.ifft_inplace(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }
}

/// Wavenumbers `2 pi m / length` for the rfft coefficient layout.
pub fn rfft_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..=n / 2)
        .map(|m| 2.0 * std::f64::consts::PI * m as f64 / length)
        .collect()
}

/// Forward real FFT on the canonical 2-pi domain.
pub fn rfft(u: &[f64]) -> Result<Spectrum> {
    rfft_on(u, 2.0 * std::f64::consts::PI)
}

/// Forward real FFT with wavenumbers for a domain of the given length.
pub fn rfft_on(u: &[f64], length: f64) -> Result<Spectrum> {
    let plan = FftPlan::new(u.len())?;
    Ok(Spectrum {
        coefficients: plan.rfft(u)?,
        wavenumbers: rfft_wavenumbers(u.len(), length),
    })
}

/// Inverse real FFT back to `n` samples.
pub fn irfft(spectrum: &Spectrum, n: usize) -> Result<Vec<f64>> {
    let plan = FftPlan::new(n)?;
    plan.irfft(&spectrum.coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;

    // O(n^2) reference transform, kept independent of the fast path.
    fn naive_dft(u: &[f64]) -> Vec<Complex64> {
        let n = u.len();
        (0..=n / 2)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &x) in u.iter().enumerate() {
                    let angle = -2.0 * std::f64::consts::PI * (j * m) as f64 / n as f64;
                    acc += x * Complex64::new(angle.cos(), angle.sin());
                }
                acc
            })
            .collect()
    }

    fn max_abs(u: &[f64]) -> f64 {
        u.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    #[test]
    fn constant_signal() {
        let s = rfft(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((s.coefficients[0] - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        assert!(s.coefficients[1].norm() < 1e-12);
        assert!(s.coefficients[2].norm() < 1e-12);
    }

    #[test]
    fn single_cosine_mode() {
        let n = 8;
        let u: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        let s = rfft(&u).unwrap();
        for (m, c) in s.coefficients.iter().enumerate() {
            if m == 1 {
                assert!((c - Complex64::new(4.0, 0.0)).norm() < 1e-12, "m=1: {c}");
            } else {
                assert!(c.norm() < 1e-12, "m={m}: {c}");
            }
        }
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = crate::numerics::rng::CounterRng::new(5);
        let n = 32;
        let u: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let s = rfft(&u).unwrap();
        let reference = naive_dft(&u);
        for (a, b) in s.coefficients.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn roundtrip_random() {
        let mut rng = crate::numerics::rng::CounterRng::new(9);
        let n = 64;
        let u: Vec<f64> = (0..n).map(|_| rng.next_range(-2.0, 2.0)).collect();
        let back = irfft(&rfft(&u).unwrap(), n).unwrap();
        let err = u
            .iter()
            .zip(&back)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 1e-12 * max_abs(&u));
    }

    #[test]
    fn zero_spectrum_gives_zero_signal() {
        let n = 16;
        let s = Spectrum {
            coefficients: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
            wavenumbers: rfft_wavenumbers(n, 2.0 * std::f64::consts::PI),
        };
        let u = irfft(&s, n).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parseval() {
        let mut rng = crate::numerics::rng::CounterRng::new(21);
        let n = 128usize;
        let u: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let s = rfft(&u).unwrap();
        // Direct-sum oracle for the signal energy.
        let direct: f64 = u.iter().map(|x| x * x).sum();
        let mut weighted = 0.0;
        for (m, c) in s.coefficients.iter().enumerate() {
            let w = if m == 0 || m == n / 2 { 1.0 } else { 2.0 };
            weighted += w * c.norm_sqr();
        }
        assert!((direct - weighted / n as f64).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(rfft(&[1.0, 2.0, 3.0]).is_err());
        assert!(FftPlan::new(12).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let s = rfft(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(irfft(&s, 8).is_err());
    }

    #[test]
    fn nyquist_and_dc_are_real() {
        let mut rng = crate::numerics::rng::CounterRng::new(2);
        let n = 32;
        let u: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let s = rfft(&u).unwrap();
        assert!(s.coefficients[0].im.abs() < 1e-12);
        assert!(s.coefficients[n / 2].im.abs() < 1e-12);
    }
}
