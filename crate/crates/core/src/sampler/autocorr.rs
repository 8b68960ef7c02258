use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Window constant in Sokal's adaptive truncation.
pub const SOKAL_C: f64 = 5.0;

/// Normalized autocorrelation function of one series via zero-padded FFT.
/// Returns `None` for a constant series.
pub fn autocorrelation(series: &[f64]) -> Option<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 1e-300 * n as f64) || !c0.is_finite() {
        return None;
    }
    Some(buf[..n].iter().map(|c| c.re / c0).collect())
}

/// Integrated autocorrelation time of an ensemble series.
///
/// `walkers[w]` is the scalar chain of walker `w`. The autocorrelation
/// functions of non-constant walkers are averaged, then summed up to the
/// smallest window `M ≥ c·τ̂(M)`. The result is clamped to at least 1.
pub fn integrated_autocorrelation_time(walkers: &[Vec<f64>]) -> Result<f64> {
    let n = walkers.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::Autocorrelation(format!("need at least 2 iterations, got {n}")));
    }
    if walkers.iter().any(|w| w.len() != n) {
        return Err(Error::Autocorrelation("walkers have different lengths".into()));
    }
    // The inverse transform is linear, so the mean of the normalized ACFs is
    // the inverse transform of the mean normalized power spectrum.
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let mut power = vec![Complex::new(0.0, 0.0); size];
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    let mut used = 0usize;
    for w in walkers {
        let mean = w.iter().sum::<f64>() / n as f64;
        let c0: f64 = w.iter().map(|x| (x - mean) * (x - mean)).sum();
        if !(c0 > 1e-300 * n as f64) || !c0.is_finite() {
            continue;
        }
        for (b, &x) in buf.iter_mut().zip(w) {
            *b = Complex::new(x - mean, 0.0);
        }
        buf[n..].iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
        forward.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            p.re += b.norm_sqr() / c0;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Autocorrelation("series is constant".into()));
    }
    planner.plan_fft_inverse(size).process(&mut power);
    let scale = (size * used) as f64;
    let mean_acf: Vec<f64> = power[..n].iter().map(|c| c.re / scale).collect();
    let mut tau = 1.0;
    for (lag, rho) in mean_acf.iter().enumerate().skip(1) {
        tau += 2.0 * rho;
        if lag as f64 >= SOKAL_C * tau {
            break;
        }
    }
    Ok(tau.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn white_noise_has_unit_time() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let walkers: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let tau = integrated_autocorrelation_time(&walkers).unwrap();
        assert!((tau - 1.0).abs() < 0.2, "tau = {tau}");
    }

    #[test]
    fn ar1_matches_analytic_time() {
        let phi: f64 = 0.9;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let walkers: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let mut x = 0.0;
                (0..100_000)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = phi * x + e;
                        x
                    })
                    .collect()
            })
            .collect();
        let tau = integrated_autocorrelation_time(&walkers).unwrap();
        let expected = (1.0 + phi) / (1.0 - phi);
        assert!((tau / expected - 1.0).abs() < 0.2, "tau = {tau}");
    }

    #[test]
    fn alternating_series_clamped() {
        let s: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(integrated_autocorrelation_time(&[s]).unwrap(), 1.0);
    }

    #[test]
    fn constant_series_is_an_error() {
        assert!(integrated_autocorrelation_time(&[vec![2.0; 100], vec![2.0; 100]]).is_err());
    }

    #[test]
    fn acf_starts_at_one() {
        let acf = autocorrelation(&[1.0, 3.0, 2.0, 5.0]).unwrap();
        assert!((acf[0] - 1.0).abs() < 1e-12);
    }
}
