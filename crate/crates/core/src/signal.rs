//! Bandlimited test signals in the Paley-Wiener space.
//!
//! A [`BandlimitedSignal`] is a finite sinc series
//! `g(t) = sum_j a_j sinc(omega t / pi - j)` with nodes spaced `pi / omega`
//! apart, so it is bandlimited to `[-omega, omega]`, smooth, and can be
//! evaluated (and differentiated) in closed form at any real time.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::encoder::HysteresisParams;
use crate::error::{invalid, Result};
use crate::spectral::{band_layout, ceil_snapped};

/// Grid density used for all sup-norm estimates, in points per sampling interval.
pub const POINTS_PER_SAMPLE: usize = 20;

/// Anything the encoders can fold: a continuous waveform with a known slope.
pub trait Waveform {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    sinc_u(PI * x)
}

// Closed forms of sin(u)/u and its first two derivatives in u. Near u = 0 the
// closed forms cancel catastrophically, so a Taylor expansion is used instead.
const SERIES_RADIUS: f64 = 0.1;

fn sinc_u(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        let u2 = u * u;
        1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)))
    } else {
        u.sin() / u
    }
}

fn sinc_u_d1(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        let u2 = u * u;
        u * (-1.0 / 3.0 + u2 / 30.0 - u2 * u2 / 840.0 + u2 * u2 * u2 / 45360.0)
    } else {
        (u * u.cos() - u.sin()) / (u * u)
    }
}

fn sinc_u_d2(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        let u2 = u * u;
        -1.0 / 3.0 + u2 / 10.0 - u2 * u2 / 168.0 + u2 * u2 * u2 / 6480.0
    } else {
        ((2.0 - u * u) * u.sin() - 2.0 * u * u.cos()) / (u * u * u)
    }
}

/// A finite sinc series bandlimited to `[-omega, omega]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandlimitedSignal {
    omega: f64,
    /// Index of `coefficients[0]`; node `j` sits at `t = j pi / omega`.
    first_index: i64,
    coefficients: Vec<f64>,
}

impl BandlimitedSignal {
    /// Coefficients are indexed `first_index, first_index + 1, ...`.
    pub fn new(omega: f64, first_index: i64, coefficients: Vec<f64>) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {omega}")));
        }
        if coefficients.is_empty() {
            return Err(invalid(
                "a bandlimited signal needs at least one coefficient",
            ));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        Ok(Self {
            omega,
            first_index,
            coefficients,
        })
    }

    /// Symmetric coefficient sequence `a_{-J}..=a_J`.
    pub fn symmetric(omega: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) {
            return Err(invalid("symmetric coefficient sequence needs odd length"));
        }
        let half = (coefficients.len() / 2) as i64;
        Self::new(omega, -half, coefficients)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Spacing between sinc nodes, `pi / omega`.
    pub fn node_spacing(&self) -> f64 {
        PI / self.omega
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }

    /// Coefficient-wise sum; both signals must share the bandwidth.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.omega != other.omega {
            return Err(invalid("cannot add signals with different bandwidths"));
        }
        let lo = self.first_index.min(other.first_index);
        let hi = self.last_index().max(other.last_index());
        let coefficients = (lo..=hi)
            .map(|j| self.coefficient(j) + other.coefficient(j))
            .collect();
        Self::new(self.omega, lo, coefficients)
    }

    fn last_index(&self) -> i64 {
        self.first_index + self.coefficients.len() as i64 - 1
    }

    fn coefficient(&self, j: i64) -> f64 {
        if j < self.first_index || j > self.last_index() {
            0.0
        } else {
            self.coefficients[(j - self.first_index) as usize]
        }
    }

    fn series(&self, t: f64, kernel: fn(f64) -> f64) -> f64 {
        let phase = self.omega * t;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let j = (self.first_index + i as i64) as f64;
                a * kernel(phase - j * PI)
            })
            .sum()
    }

    /// Exact value of the series at `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.series(t, sinc_u)
    }

    pub fn first_derivative(&self, t: f64) -> f64 {
        self.omega * self.series(t, sinc_u_d1)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.omega * self.omega * self.series(t, sinc_u_d2)
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.evaluate(t)).collect()
    }
}

impl Waveform for BandlimitedSignal {
    fn value(&self, t: f64) -> f64 {
        self.evaluate(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.first_derivative(t)
    }
}

/// Sampling instants `(n - K) T` for `n = 0..=2K`.
pub fn sample_times(k: usize, period: f64) -> Vec<f64> {
    (0..=2 * k)
        .map(|n| (n as f64 - k as f64) * period)
        .collect()
}

/// The grid on `[-KT, KT]` with `POINTS_PER_SAMPLE` points per sampling interval
/// that `generate_random_pw` normalizes the peak on.
pub fn generation_grid(k: usize, period: f64) -> Vec<f64> {
    let steps = 2 * k * POINTS_PER_SAMPLE;
    let start = -(k as f64) * period;
    let step = period / POINTS_PER_SAMPLE as f64;
    (0..=steps).map(|i| start + i as f64 * step).collect()
}

/// Draws a random member of PW_omega.
///
/// Coefficients are standard normal draws weighted by a Gaussian envelope of
/// width `0.4 K T`, then rescaled so that the maximum of `|g|` on the
/// generation grid equals `peak`. The same arguments always give the same
/// signal.
pub fn generate_random_pw(
    omega: f64,
    k: usize,
    period: f64,
    peak: f64,
    seed: u64,
) -> Result<BandlimitedSignal> {
    if !(omega > 0.0) || !(period > 0.0) || !(peak > 0.0) {
        return Err(invalid(format!(
            "random signal needs positive omega, T and peak (got {omega}, {period}, {peak})"
        )));
    }
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let scale = 0.4 * k as f64 * period;
    let spacing = PI / omega;
    // Envelope below 1e-16 beyond this many nodes.
    let half = (8.6 * scale / spacing).ceil() as i64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coefficients: Vec<f64> = (-half..=half)
        .map(|j| {
            let w: f64 = StandardNormal.sample(&mut rng);
            let tj = j as f64 * spacing;
            w * (-(tj * tj) / (2.0 * scale * scale)).exp()
        })
        .collect();

    let raw = BandlimitedSignal::new(omega, -half, coefficients)?;
    let grid_max = max_abs_on(&raw, &generation_grid(k, period));
    if grid_max == 0.0 {
        return Err(invalid("generated signal vanished on the grid"));
    }
    Ok(raw.scaled(peak / grid_max))
}

fn max_abs_on(g: &BandlimitedSignal, times: &[f64]) -> f64 {
    times
        .iter()
        .map(|&t| g.evaluate(t).abs())
        .fold(0.0, f64::max)
}

fn uniform(t_min: f64, t_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (t_max - t_min) / (n - 1) as f64;
    (0..n).map(move |i| t_min + i as f64 * step)
}

/// Grid estimate of `sup |g''|` on `[t_min, t_max]` using the closed-form
/// second derivative of the sinc series.
pub fn estimate_d2_bound(g: &BandlimitedSignal, t_min: f64, t_max: f64, n_grid: usize) -> f64 {
    let n = n_grid.max(2);
    uniform(t_min, t_max, n)
        .map(|t| g.second_derivative(t).abs())
        .fold(0.0, f64::max)
}

/// Shannon reconstruction from the finite window of samples taken at
/// `start + n period`.
pub fn sinc_interpolate(samples: &[f64], start: f64, period: f64, t: f64) -> f64 {
    samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * sinc((t - start) / period - n as f64))
        .sum()
}

/// Grid-estimated admissibility of a signal for a given encoder and sampling setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// Estimated `sup |g(t)|` over `|t| >= |tau_0|`.
    pub max_abs_outside: f64,
    /// Estimated `sup |g''|`.
    pub d2_bound: f64,
    pub lipschitz_ok: bool,
    /// `max_abs_outside < lambda - h`.
    pub decay_ok: bool,
    /// `d2_bound <= 2h / alpha^2`, vacuous for `alpha = 0`.
    pub d2_ok: bool,
    /// `ceil((|tau_0| + 2 alpha) / T) + K <= N - 2 N_omega - 2`.
    pub guarantee_ok: bool,
    /// `T < pi / omega`.
    pub oversampling_ok: bool,
    /// `0 <= h < lambda`.
    pub hysteresis_ok: bool,
}

impl AdmissibilityReport {
    /// Hypotheses of the separation and return properties plus identifiability.
    /// The OMP support guarantee is reported separately.
    pub fn is_admissible(&self) -> bool {
        self.lipschitz_ok
            && self.decay_ok
            && self.d2_ok
            && self.oversampling_ok
            && self.hysteresis_ok
    }
}

/// Checks the hypotheses under which the modified encoder is identifiable and
/// OMP recovery is guaranteed.
///
/// Sup-norms are estimated on a grid of `POINTS_PER_SAMPLE` points per `T`
/// covering `|t| <= |tau_0| + 2KT + 2 alpha`; the decay check looks at the part
/// of that range with `|t| >= |tau_0|`.
pub fn check_admissibility(
    g: &BandlimitedSignal,
    params: &HysteresisParams,
    omega: f64,
    k: usize,
    period: f64,
) -> AdmissibilityReport {
    let tau0 = params.tau0.abs();
    let reach = tau0 + 2.0 * k as f64 * period + 2.0 * params.alpha;
    let points = |span: f64| ((span / period).ceil() as usize * POINTS_PER_SAMPLE).max(2) + 1;

    let outer = points(reach - tau0);
    let max_abs_outside = uniform(tau0, reach, outer)
        .flat_map(|t| [g.evaluate(t).abs(), g.evaluate(-t).abs()])
        .fold(0.0, f64::max);

    let d2_bound = estimate_d2_bound(g, -reach, reach, points(2.0 * reach));
    let max_slope = uniform(-reach, reach, points(2.0 * reach))
        .map(|t| g.first_derivative(t).abs())
        .fold(0.0, f64::max);

    let (lambda, h, alpha) = (params.lambda, params.h, params.alpha);
    let d2_ok = alpha == 0.0 || d2_bound <= 2.0 * h / (alpha * alpha);

    let n = 2 * k;
    let guarantee_ok = match band_layout(omega, n, period) {
        Ok(layout) => {
            let lhs = ceil_snapped((tau0 + 2.0 * alpha) / period) + k as i64;
            lhs <= n as i64 - 2 * layout.n_omega as i64 - 2
        }
        Err(_) => false,
    };

    AdmissibilityReport {
        max_abs_outside,
        d2_bound,
        lipschitz_ok: max_slope.is_finite(),
        decay_ok: max_abs_outside < lambda - h,
        d2_ok,
        guarantee_ok,
        oversampling_ok: period < PI / omega,
        hysteresis_ok: (0.0..lambda).contains(&h),
    }
}
