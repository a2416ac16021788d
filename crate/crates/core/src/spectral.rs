//! Discrete operators of the reconstruction pipeline: differences, the DFT,
//! out-of-band bookkeeping and the Vandermonde dictionary.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// `z[k+1] - z[k]`.
pub fn forward_difference(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() < 2 {
        return Err(invalid("forward difference needs at least two samples"));
    }
    Ok(z.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Running sum `out[k] = sum_{j < k} z[j]`; one element longer than the input.
pub fn anti_difference<T>(z: &[T]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    let mut out = Vec::with_capacity(z.len() + 1);
    let mut acc = T::default();
    out.push(acc);
    for &v in z {
        acc = acc + v;
        out.push(acc);
    }
    out
}

/// Direct `O(N^2)` DFT, `Z[m] = sum_n z[n] exp(-2 pi i m n / N)`.
///
/// Twiddles are indexed by `m n mod N` so every phase is reduced exactly.
pub fn dft(z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    if n == 0 {
        return Vec::new();
    }
    let twiddles: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect();
    (0..n)
        .map(|m| {
            z.iter()
                .enumerate()
                .map(|(j, v)| v * twiddles[(m * j) % n])
                .sum()
        })
        .collect()
}

pub fn dft_real(z: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = z.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(&c)
}

/// Ceiling that treats values within `1e-12` (relative, at least absolute) of
/// an integer as that integer.
pub fn ceil_snapped(x: f64) -> i64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * x.abs().max(1.0) {
        nearest as i64
    } else {
        x.ceil() as i64
    }
}

/// Index bookkeeping for `N` differences: effective bandwidth `N_omega`, the
/// out-of-band bins `N_omega + 1 ..= N - N_omega - 1` and their count `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandLayout {
    pub n: usize,
    pub n_omega: usize,
    pub m: usize,
    pub omega0: f64,
}

impl BandLayout {
    /// First out-of-band DFT bin.
    pub fn first_bin(&self) -> usize {
        self.n_omega + 1
    }

    /// Out-of-band bins in increasing order.
    pub fn bins(&self) -> std::ops::Range<usize> {
        self.first_bin()..self.first_bin() + self.m
    }
}

pub fn band_layout(omega: f64, n: usize, period: f64) -> Result<BandLayout> {
    if n < 2 || !(period > 0.0) || !(omega > 0.0) {
        return Err(invalid(format!(
            "band layout needs N >= 2 and positive omega, T (got N = {n}, omega = {omega}, T = {period})"
        )));
    }
    let n_omega = ceil_snapped(omega * (n as f64 + 1.0) * period / (2.0 * PI)).max(0);
    let m = n as i64 - 2 * n_omega - 1;
    if m < 1 {
        return Err(Error::InsufficientOversampling {
            n,
            n_omega: n_omega as usize,
            m,
        });
    }
    Ok(BandLayout {
        n,
        n_omega: n_omega as usize,
        m: m as usize,
        omega0: 2.0 * PI / n as f64,
    })
}

/// `M x N` dictionary with entries `exp(-i omega0 m n)`, rows `m` over the
/// out-of-band bins and columns `n = 0..N`.
pub fn build_vandermonde(layout: &BandLayout) -> DMatrix<Complex64> {
    let n = layout.n;
    let first = layout.first_bin();
    DMatrix::from_fn(layout.m, n, |row, col| {
        let phase = ((first + row) * col) % n;
        Complex64::from_polar(1.0, -layout.omega0 * phase as f64)
    })
}

static FLIP_RHS_SIGN: AtomicBool = AtomicBool::new(false);

/// Fault-injection hook for the self-test: negates every right-hand side built
/// afterwards. Never enabled outside that mutation check.
#[doc(hidden)]
pub fn set_rhs_sign_fault(enabled: bool) {
    FLIP_RHS_SIGN.store(enabled, Ordering::SeqCst);
}

/// Out-of-band part of the DFT of the differenced samples.
pub fn build_rhs(samples: &[f64], layout: &BandLayout) -> Result<Vec<Complex64>> {
    if samples.len() != layout.n + 1 {
        return Err(Error::LengthMismatch {
            expected: layout.n + 1,
            actual: samples.len(),
        });
    }
    let spectrum = dft_real(&forward_difference(samples)?);
    let sign = if FLIP_RHS_SIGN.load(Ordering::Relaxed) {
        -1.0
    } else {
        1.0
    };
    Ok(layout.bins().map(|m| spectrum[m] * sign).collect())
}
