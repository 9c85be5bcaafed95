//! FFT-based multipliers on periodic grids.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}

pub fn fft_in_place(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Inverse transform including the `1/n` normalization; returns the real part.
pub fn ifft_real(mut spec: Vec<Complex64>) -> Vec<f64> {
    ifft_in_place(&mut spec);
    spec.into_iter().map(|c| c.re).collect()
}

pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    plan.process(buf);
    let s = 1.0 / n as f64;
    for c in buf.iter_mut() {
        *c *= s;
    }
}

/// Angular wavenumber of FFT bin `j` on a period of length `period`.
/// The Nyquist bin (even `n`, `j = n/2`) is reported with `nyquist = true`.
#[inline]
pub fn wavenumber(j: usize, n: usize, period: f64) -> (f64, bool) {
    let base = 2.0 * PI / period;
    if n % 2 == 0 && j == n / 2 {
        (base * j as f64, true)
    } else if j <= n / 2 {
        (base * j as f64, false)
    } else {
        (-base * (n - j) as f64, false)
    }
}

/// Applies a Fourier multiplier `m(k)` to real data. The Nyquist bin is passed
/// to `m` with the positive wavenumber and the `nyquist` flag set.
pub fn apply_multiplier(values: &[f64], period: f64, m: impl Fn(f64, bool) -> Complex64) -> Vec<f64> {
    let n = values.len();
    let mut spec = fft(values);
    for (j, c) in spec.iter_mut().enumerate() {
        let (k, nyq) = wavenumber(j, n, period);
        *c *= m(k, nyq);
    }
    ifft_real(spec)
}

/// `(ik)^order` with the Nyquist bin dropped for odd orders.
pub fn derivative_symbol(k: f64, nyquist: bool, order: u32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if nyquist && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k).powu(order)
}

/// Spectral derivative of order `order` on a periodic grid of the given period.
pub fn derivative(values: &[f64], period: f64, order: u32) -> Vec<f64> {
    if order == 0 {
        return values.to_vec();
    }
    apply_multiplier(values, period, |k, nyq| derivative_symbol(k, nyq, order))
}

/// Several derivative orders sharing one forward transform.
pub fn derivatives(values: &[f64], period: f64, max_order: u32) -> Vec<Vec<f64>> {
    let n = values.len();
    let spec = fft(values);
    (0..=max_order)
        .map(|order| {
            if order == 0 {
                return values.to_vec();
            }
            let s: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let (k, nyq) = wavenumber(j, n, period);
                    c * derivative_symbol(k, nyq, order)
                })
                .collect();
            ifft_real(s)
        })
        .collect()
}

/// Embeds compactly supported samples in a grid `factor` times longer (zeros
/// appended symmetrically), applies `op`, and crops back.
pub fn with_zero_padding(
    values: &[f64],
    period: f64,
    factor: usize,
    op: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Vec<f64> {
    let n = values.len();
    if factor <= 1 {
        return op(values, period);
    }
    let total = n * factor;
    let offset = (total - n) / 2;
    let mut padded = vec![0.0; total];
    padded[offset..offset + n].copy_from_slice(values);
    let out = op(&padded, period * factor as f64);
    out[offset..offset + n].to_vec()
}

/// Derivatives `0..=max_order` of zero-padded compactly supported samples.
pub fn with_zero_padding_multi(values: &[f64], period: f64, factor: usize, max_order: u32) -> Vec<Vec<f64>> {
    let n = values.len();
    let factor = factor.max(1);
    let total = n * factor;
    let offset = (total - n) / 2;
    let mut padded = vec![0.0; total];
    padded[offset..offset + n].copy_from_slice(values);
    derivatives(&padded, period * factor as f64, max_order)
        .into_iter()
        .map(|d| d[offset..offset + n].to_vec())
        .collect()
}

/// `sum |k|^{2s} |f_k|^2` scaled so that for `s = 0` it equals the trapezoid `∫ f^2`.
pub fn homogeneous_seminorm_sq(values: &[f64], period: f64, s: f64) -> f64 {
    let n = values.len();
    let spec = fft(values);
    let h = period / n as f64;
    let mut acc = 0.0;
    for (j, c) in spec.iter().enumerate() {
        let (k, _) = wavenumber(j, n, period);
        let w = if s == 0.0 {
            1.0
        } else if k == 0.0 {
            0.0
        } else {
            k.abs().powf(2.0 * s)
        };
        acc += w * c.norm_sqr();
    }
    acc * h / n as f64
}

/// Band-limited (trigonometric) interpolant of periodic samples starting at `x0`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    spec: Vec<Complex64>,
    x0: f64,
    period: f64,
}

impl TrigInterpolant {
    pub fn new(values: &[f64], x0: f64, period: f64) -> Self {
        Self {
            spec: fft(values),
            x0,
            period,
        }
    }

    /// `order`-th derivative of the interpolant at `x`; the Nyquist mode is taken as a cosine.
    pub fn eval(&self, x: f64, order: u32) -> f64 {
        let n = self.spec.len();
        let base = 2.0 * PI / self.period;
        let s = x - self.x0;
        let mut acc = 0.0;
        for (j, c) in self.spec.iter().enumerate() {
            let (k, nyq) = wavenumber(j, n, self.period);
            if nyq {
                let m = base * j as f64;
                let v = match order % 4 {
                    0 => (m * s).cos(),
                    1 => -(m * s).sin(),
                    2 => -(m * s).cos(),
                    _ => (m * s).sin(),
                };
                acc += c.re * m.powi(order as i32) * v;
                continue;
            }
            let e = Complex64::from_polar(1.0, k * s);
            acc += (c * e * derivative_symbol(k, false, order)).re;
        }
        acc / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_sine() {
        let n = 64;
        let period = 2.0 * PI;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * period / n as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| (3.0 * x).sin()).collect();
        let d = derivatives(&f, period, 4);
        for (i, x) in x.iter().enumerate() {
            assert!((d[1][i] - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
            assert!((d[2][i] + 9.0 * (3.0 * x).sin()).abs() < 1e-11);
            assert!((d[4][i] - 81.0 * (3.0 * x).sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn seminorm_matches_parseval() {
        let n = 128;
        let period = 2.0 * PI;
        let f: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 * period / n as f64).cos()).collect();
        // ∫cos²(2x) = π and ∫(2 sin 2x)² = 4π over one period
        assert!((homogeneous_seminorm_sq(&f, period, 0.0) - PI).abs() < 1e-12);
        assert!((homogeneous_seminorm_sq(&f, period, 1.0) - 4.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn zero_padding_preserves_compact_derivative() {
        let n = 256;
        let half = 2.0;
        let h = 2.0 * half / n as f64;
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let x = -half + i as f64 * h;
                (-(x * x) * 20.0).exp()
            })
            .collect();
        let plain = derivative(&f, 2.0 * half, 1);
        let padded = with_zero_padding(&f, 2.0 * half, 2, |v, p| derivative(v, p, 1));
        for (a, b) in plain.iter().zip(&padded) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn trig_interpolant_hits_off_node_values() {
        let n = 32;
        let period = 2.0 * PI;
        let f: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * period / n as f64).sin()).collect();
        let t = TrigInterpolant::new(&f, 0.0, period);
        for x in [0.1, 1.234, 5.0] {
            assert!((t.eval(x, 0) - (3.0 * x).sin()).abs() < 1e-12);
            assert!((t.eval(x, 1) - 3.0 * (3.0 * x).cos()).abs() < 1e-11);
            assert!((t.eval(x, 3) + 27.0 * (3.0 * x).cos()).abs() < 1e-9);
        }
    }
}
