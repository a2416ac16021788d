//! Modulo encoders: the ideal pointwise modulo, the generalized hysteresis
//! encoder, and the modified hysteresis operator whose output always stays in
//! `[-lambda, lambda]`.
//!
//! Both hysteresis encoders are simulated by event detection. The residual
//!
//! ```text
//! zeta(t) = g(t) - (2 lambda - h) * sum_n sigma_n * eps(t - kappa_n)
//! ```
//!
//! is scanned on a fine grid after the last folding point; the first grid point
//! with `|zeta| >= lambda` brackets the next folding point, which is then
//! refined by bisection. The modified encoder detects on the ramped residual
//! (`eps = eps_alpha`), the generalized encoder on the instantaneous one
//! (`eps = eps_0`) while still emitting ramps in its output.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::signal::Waveform;

/// Ideal modulo folding of `v` into `[-lambda, lambda)`.
pub fn ideal_modulo(v: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!(
            "modulo threshold must be positive, got {lambda}"
        )));
    }
    let width = 2.0 * lambda;
    Ok(v - width * ((v + lambda) / width).floor())
}

/// Folding transition: a unit step for `alpha = 0`, a ramp of length `alpha` otherwise.
pub fn transient(t: f64, alpha: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if alpha == 0.0 || t >= alpha {
        1.0
    } else {
        t / alpha
    }
}

/// Right derivative of [`transient`].
fn transient_slope(t: f64, alpha: f64) -> f64 {
    if alpha > 0.0 && t >= 0.0 && t < alpha {
        1.0 / alpha
    } else {
        0.0
    }
}

/// Threshold `lambda`, hysteresis `h`, transient length `alpha` and the time
/// `tau0` at which fold tracking starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HysteresisParams {
    pub lambda: f64,
    pub h: f64,
    pub alpha: f64,
    pub tau0: f64,
}

impl HysteresisParams {
    pub fn new(lambda: f64, h: f64, alpha: f64, tau0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !(h >= 0.0 && h.is_finite()) {
            return Err(invalid(format!("h must be non-negative, got {h}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be non-negative, got {alpha}")));
        }
        if !tau0.is_finite() {
            return Err(invalid("tau0 must be finite"));
        }
        Ok(Self {
            lambda,
            h,
            alpha,
            tau0,
        })
    }

    /// Height of one fold, `2 lambda - h`.
    pub fn fold_height(&self) -> f64 {
        2.0 * self.lambda - self.h
    }
}

/// Uniform grid `start + i * step`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || count < 2 || !start.is_finite() {
            return Err(invalid(
                "time grid needs a positive step and at least two points",
            ));
        }
        Ok(Self { start, step, count })
    }

    /// `count` points spanning `[start, end]` inclusive.
    pub fn spanning(start: f64, end: f64, count: usize) -> Result<Self> {
        if !(end > start) || count < 2 {
            return Err(invalid(
                "time grid needs end > start and at least two points",
            ));
        }
        Self::new(start, (end - start) / (count - 1) as f64, count)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.count - 1)
    }

    pub fn span(&self) -> f64 {
        self.end() - self.start
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.time(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fold {
    pub time: f64,
    /// `+1` for a fold triggered at `+lambda`, `-1` at `-lambda`.
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EncoderKind {
    Ideal,
    Generalized,
    Modified,
}

/// Output of an encoder on a grid together with its folding points.
#[derive(Debug, Clone, Serialize)]
pub struct EncodedTrace {
    pub kind: EncoderKind,
    pub params: HysteresisParams,
    pub grid: TimeGrid,
    pub output: Vec<f64>,
    pub folds: Vec<Fold>,
    /// Absolute time tolerance used when refining folding points.
    pub time_tolerance: f64,
}

impl EncodedTrace {
    /// Encoder output at an arbitrary time, given the signal that was encoded.
    pub fn output_at<S: Waveform + ?Sized>(&self, g: &S, t: f64) -> f64 {
        g.value(t) - fold_signal_at(&self.folds, &self.params, t)
    }

    pub fn max_abs_output(&self) -> f64 {
        self.output.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Limits that stop the fold detection loop on inadmissible input.
#[derive(Debug, Clone, Copy)]
pub struct EncoderLimits {
    /// Total fold cap; `None` means `10 * count / 20`.
    pub max_folds: Option<usize>,
    /// Folds allowed at a single instant when the transient is instantaneous.
    pub max_folds_per_instant: usize,
}

impl Default for EncoderLimits {
    fn default() -> Self {
        Self {
            max_folds: None,
            max_folds_per_instant: 3,
        }
    }
}

/// `(2 lambda - h) * sum sigma * eps_alpha(t - kappa)`.
pub fn fold_signal_at(folds: &[Fold], params: &HysteresisParams, t: f64) -> f64 {
    let ramps: f64 = folds
        .iter()
        .take_while(|f| f.time <= t)
        .map(|f| f.sign * transient(t - f.time, params.alpha))
        .sum();
    params.fold_height() * ramps
}

/// Fold-ramp sum on every grid point. Adding it to an encoder's output gives
/// back the input samples.
pub fn build_fold_signal(folds: &[Fold], params: &HysteresisParams, grid: &TimeGrid) -> Vec<f64> {
    grid.times()
        .map(|t| fold_signal_at(folds, params, t))
        .collect()
}

/// Samples of `g` folded by the ideal modulo encoder.
pub fn encode_ideal<S: Waveform + ?Sized>(
    g: &S,
    lambda: f64,
    grid: &TimeGrid,
) -> Result<EncodedTrace> {
    let output = grid
        .times()
        .map(|t| ideal_modulo(g.value(t), lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedTrace {
        kind: EncoderKind::Ideal,
        params: HysteresisParams::new(lambda, 0.0, 0.0, grid.start)?,
        grid: *grid,
        output,
        folds: Vec::new(),
        time_tolerance: 0.0,
    })
}

/// Modified modulo hysteresis operator on `grid`.
pub fn encode_modified<S: Waveform + ?Sized>(
    g: &S,
    params: &HysteresisParams,
    grid: &TimeGrid,
) -> Result<EncodedTrace> {
    encode_modified_with(g, params, grid, EncoderLimits::default())
}

pub fn encode_modified_with<S: Waveform + ?Sized>(
    g: &S,
    params: &HysteresisParams,
    grid: &TimeGrid,
    limits: EncoderLimits,
) -> Result<EncodedTrace> {
    let detector = FoldDetector::new(g, params, params.alpha, grid, limits)?;
    let folds = detector.run()?;
    Ok(assemble(
        g,
        EncoderKind::Modified,
        params,
        grid,
        folds,
        detector.tolerance,
    ))
}

/// Generalized modulo encoder: folding points are found on the instantaneous
/// residual, so the ramped output may leave `[-lambda, lambda]`.
pub fn encode_generalized<S: Waveform + ?Sized>(
    g: &S,
    params: &HysteresisParams,
    grid: &TimeGrid,
) -> Result<EncodedTrace> {
    encode_generalized_with(g, params, grid, EncoderLimits::default())
}

pub fn encode_generalized_with<S: Waveform + ?Sized>(
    g: &S,
    params: &HysteresisParams,
    grid: &TimeGrid,
    limits: EncoderLimits,
) -> Result<EncodedTrace> {
    let detector = FoldDetector::new(g, params, 0.0, grid, limits)?;
    let folds = detector.run()?;
    Ok(assemble(
        g,
        EncoderKind::Generalized,
        params,
        grid,
        folds,
        detector.tolerance,
    ))
}

fn assemble<S: Waveform + ?Sized>(
    g: &S,
    kind: EncoderKind,
    params: &HysteresisParams,
    grid: &TimeGrid,
    folds: Vec<Fold>,
    time_tolerance: f64,
) -> EncodedTrace {
    let output = grid
        .times()
        .map(|t| g.value(t) - fold_signal_at(&folds, params, t))
        .collect();
    EncodedTrace {
        kind,
        params: *params,
        grid: *grid,
        output,
        folds,
        time_tolerance,
    }
}

/// Event loop shared by both hysteresis encoders. `detect_alpha` is the
/// transient used for the residual that is compared against the threshold.
struct FoldDetector<'a, S: ?Sized> {
    g: &'a S,
    lambda: f64,
    height: f64,
    detect_alpha: f64,
    tau0: f64,
    grid: TimeGrid,
    tolerance: f64,
    max_folds: usize,
    max_per_instant: usize,
}

impl<'a, S: Waveform + ?Sized> FoldDetector<'a, S> {
    fn new(
        g: &'a S,
        params: &HysteresisParams,
        detect_alpha: f64,
        grid: &TimeGrid,
        limits: EncoderLimits,
    ) -> Result<Self> {
        if grid.start > params.tau0 + grid.step {
            return Err(invalid(format!(
                "grid starts at {} but fold tracking starts at tau0 = {}",
                grid.start, params.tau0
            )));
        }
        let max_folds = limits.max_folds.unwrap_or(10 * grid.count / 20).max(1);
        // With a ramped transient every extra fold at an instant lowers the
        // outward slope by (2 lambda - h) / alpha, so the instant cap only
        // matters for instantaneous folds or non-positive fold heights.
        let max_per_instant = if detect_alpha > 0.0 && params.fold_height() > 0.0 {
            max_folds
        } else {
            limits.max_folds_per_instant
        };
        Ok(Self {
            g,
            lambda: params.lambda,
            height: params.fold_height(),
            detect_alpha,
            tau0: params.tau0,
            grid: *grid,
            tolerance: 1e-12 * grid.span(),
            max_folds,
            max_per_instant,
        })
    }

    fn residual(&self, folds: &[Fold], t: f64) -> f64 {
        let ramps: f64 = folds
            .iter()
            .take_while(|f| f.time <= t)
            .map(|f| f.sign * transient(t - f.time, self.detect_alpha))
            .sum();
        self.g.value(t) - self.height * ramps
    }

    fn residual_slope(&self, folds: &[Fold], t: f64) -> f64 {
        let ramps: f64 = folds
            .iter()
            .take_while(|f| f.time <= t)
            .map(|f| f.sign * transient_slope(t - f.time, self.detect_alpha))
            .sum();
        self.g.derivative(t) - self.height * ramps
    }

    fn outside(&self, v: f64) -> bool {
        v.abs() >= self.lambda
    }

    /// Strictly past the threshold, off the boundary.
    fn beyond(&self, v: f64) -> bool {
        v.abs() - self.lambda > 1e-12 * self.lambda
    }

    /// Start-up with the residual already past the threshold and a ramped
    /// transient. The inf rule would fold forever at that instant, so enough
    /// folds are placed there to bring the settled value into range, and
    /// detection resumes once the residual is back inside. Returns the time
    /// detection resumes from.
    fn settle_start(&self, folds: &mut Vec<Fold>) -> Result<f64> {
        let mut at = self.tau0;
        loop {
            let v = self.residual(folds, at);
            if !self.beyond(v) {
                return Ok(at);
            }
            if self.height <= 0.0 {
                return Err(Error::RunawayFolds {
                    folds: folds.len() + 1,
                    cap: self.max_folds,
                    time: at,
                });
            }
            let count = ((v.abs() - self.lambda) / self.height).ceil().max(1.0) as usize;
            for _ in 0..count {
                self.push(
                    folds,
                    Fold {
                        time: at,
                        sign: v.signum(),
                    },
                )?;
            }
            let end = at + self.detect_alpha;
            let mut prev = at;
            let inside = self
                .grid
                .times()
                .filter(|&t| t > at && t < end)
                .chain(std::iter::once(end))
                .find(|&t| {
                    let hit = !self.outside(self.residual(folds, t));
                    if !hit {
                        prev = t;
                    }
                    hit
                });
            match inside {
                Some(t) => return Ok(self.bisect(folds, prev, t, false)),
                None => at = end,
            }
        }
    }

    /// Smallest time in `(lo, hi]` with `|zeta| >= lambda`, given that the
    /// residual is inside just after `lo` and outside at `hi`.
    fn refine(&self, folds: &[Fold], lo: f64, hi: f64) -> f64 {
        self.bisect(folds, lo, hi, true)
    }

    /// Bisection for the first time in `(lo, hi]` where `outside` equals
    /// `want_outside`.
    fn bisect(&self, folds: &[Fold], mut lo: f64, mut hi: f64, want_outside: bool) -> f64 {
        for _ in 0..200 {
            if hi - lo <= self.tolerance {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.outside(self.residual(folds, mid)) == want_outside {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// A local extremum of the residual strictly inside `(lo, hi)` that
    /// reaches the threshold although both ends are inside the band.
    fn grazing_peak(&self, folds: &[Fold], lo: f64, hi: f64) -> Option<f64> {
        let slope_lo = self.residual_slope(folds, lo);
        let slope_hi = self.residual_slope(folds, hi);
        if slope_lo * slope_hi >= 0.0 {
            return None;
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            if b - a <= self.tolerance {
                break;
            }
            let mid = 0.5 * (a + b);
            if self.residual_slope(folds, mid) * slope_lo > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        [a, b]
            .into_iter()
            .find(|&t| t > lo && self.outside(self.residual(folds, t)))
    }

    fn push(&self, folds: &mut Vec<Fold>, fold: Fold) -> Result<()> {
        folds.push(fold);
        if folds.len() > self.max_folds {
            return Err(Error::RunawayFolds {
                folds: folds.len(),
                cap: self.max_folds,
                time: fold.time,
            });
        }
        Ok(())
    }

    /// Registers the fold at `time` and any further folds the residual demands
    /// at the same instant: the post-fold value is past the threshold, or sits
    /// on it while still moving outward.
    fn fold_at(&self, folds: &mut Vec<Fold>, time: f64, sign: f64) -> Result<()> {
        self.push(folds, Fold { time, sign })?;
        let step = transient(0.0, self.detect_alpha);
        let mut value = sign * self.lambda - sign * self.height * step;
        let mut at_instant = 1;
        loop {
            let magnitude = value.abs();
            let on_boundary = (magnitude - self.lambda).abs() <= 1e-12 * self.lambda;
            let direction = value.signum();
            let retrigger = if magnitude > self.lambda && !on_boundary {
                true
            } else if on_boundary {
                direction * self.residual_slope(folds, time) > 0.0
            } else {
                false
            };
            if !retrigger {
                return Ok(());
            }
            at_instant += 1;
            if at_instant > self.max_per_instant {
                return Err(Error::RunawayFolds {
                    folds: folds.len() + 1,
                    cap: self.max_per_instant,
                    time,
                });
            }
            self.push(
                folds,
                Fold {
                    time,
                    sign: direction,
                },
            )?;
            value -= direction * self.height * step;
        }
    }

    fn run(&self) -> Result<Vec<Fold>> {
        let mut folds = Vec::new();
        let mut last = self.tau0;

        // inf over t > tau0 lands on tau0 itself when g already sits outside.
        let v0 = self.residual(&folds, self.tau0);
        if self.beyond(v0) && self.detect_alpha > 0.0 {
            last = self.settle_start(&mut folds)?;
        } else if self.outside(v0) {
            self.fold_at(&mut folds, self.tau0, v0.signum())?;
        }

        let mut i = (0..self.grid.count)
            .find(|&i| self.grid.time(i) > last)
            .unwrap_or(self.grid.count);
        while i < self.grid.count {
            let t = self.grid.time(i);
            if t <= last {
                // Fold landed exactly on this grid point; same-instant folds
                // were already settled by `fold_at`.
                i += 1;
                continue;
            }
            let hi = if self.outside(self.residual(&folds, t)) {
                t
            } else if let Some(peak) = self.grazing_peak(&folds, last, t) {
                peak
            } else {
                last = t;
                i += 1;
                continue;
            };
            let time = self.refine(&folds, last, hi);
            let sign = self.residual(&folds, time).signum();
            self.fold_at(&mut folds, time, sign)?;
            // The same grid point is examined again against the new residual.
            last = time;
        }
        Ok(folds)
    }
}

/// True if folds of opposite sign are never closer than `alpha` (less the
/// trace's time tolerance).
pub fn verify_separation(trace: &EncodedTrace, params: &HysteresisParams) -> bool {
    let slack = trace.time_tolerance.max(1e-12);
    trace
        .folds
        .windows(2)
        .filter(|w| w[0].sign * w[1].sign < 0.0)
        .all(|w| w[1].time - w[0].time >= params.alpha - slack)
}

/// True if the output equals `g` to within `tol` on every grid point
/// `t >= |tau0| + 2 alpha`.
pub fn verify_return<S: Waveform + ?Sized>(
    trace: &EncodedTrace,
    g: &S,
    params: &HysteresisParams,
    tol: f64,
) -> bool {
    let from = params.tau0.abs() + 2.0 * params.alpha;
    trace
        .grid
        .times()
        .zip(&trace.output)
        .filter(|(t, _)| *t >= from)
        .all(|(t, out)| (out - g.value(t)).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_random_pw, BandlimitedSignal};

    /// `a + b t` on the whole line.
    struct Line(f64, f64);

    impl Waveform for Line {
        fn value(&self, t: f64) -> f64 {
            self.0 + self.1 * t
        }
        fn derivative(&self, _t: f64) -> f64 {
            self.1
        }
    }

    fn ramped() -> HysteresisParams {
        HysteresisParams::new(0.2, 0.1, 0.3, -1.0).unwrap()
    }

    #[test]
    fn ideal_modulo_values() {
        assert!((ideal_modulo(0.5, 0.2).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(ideal_modulo(0.1, 0.2).unwrap(), 0.1);
        assert!((ideal_modulo(-0.5, 0.2).unwrap() + 0.1).abs() < 1e-15);
        assert!(ideal_modulo(1.0, 0.0).is_err());
        assert!(ideal_modulo(1.0, -0.3).is_err());
    }

    #[test]
    fn transient_values() {
        assert_eq!(transient(-1.0, 0.0), 0.0);
        assert_eq!(transient(0.0, 0.0), 1.0);
        assert_eq!(transient(0.15, 0.3), 0.5);
        assert_eq!(transient(0.4, 0.3), 1.0);
        assert_eq!(transient(-1e-9, 0.3), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(HysteresisParams::new(0.0, 0.1, 0.1, 0.0).is_err());
        assert!(HysteresisParams::new(0.2, -0.1, 0.1, 0.0).is_err());
        assert!(HysteresisParams::new(0.2, 0.1, -0.1, 0.0).is_err());
        assert!(HysteresisParams::new(0.2, 0.5, 0.1, 0.0).is_ok());
    }

    #[test]
    fn quiet_signal_passes_through() {
        let g = generate_random_pw(6.3, 48, 0.0208, 0.15, 4).unwrap();
        let grid = TimeGrid::spanning(-1.0, 1.0, 2001).unwrap();
        for trace in [
            encode_modified(&g, &ramped(), &grid).unwrap(),
            encode_generalized(&g, &ramped(), &grid).unwrap(),
        ] {
            assert!(trace.folds.is_empty());
            for (t, out) in grid.times().zip(&trace.output) {
                assert_eq!(*out, g.evaluate(t));
            }
        }
    }

    #[test]
    fn start_outside_with_ramp_settles() {
        // 0.55 needs two folds of 0.3 to come back into [-0.2, 0.2].
        let g = Line(0.55, 0.0);
        let params = HysteresisParams::new(0.2, 0.1, 0.3, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 1001).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        assert_eq!(trace.folds.len(), 2);
        assert!(trace.folds.iter().all(|f| f.time == 0.0 && f.sign == 1.0));
        let last = *trace.output.last().unwrap();
        assert!((last + 0.05).abs() < 1e-12);
        assert!(trace
            .output
            .iter()
            .skip(300)
            .all(|v| v.abs() <= 0.2 + 1e-12));
    }

    #[test]
    fn instantaneous_single_fold() {
        // Crosses 0.1 at t = 0.5, then never again within the window.
        let g = Line(0.0, 0.2);
        let params = HysteresisParams::new(0.1, 0.03, 0.0, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 201).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        assert_eq!(trace.folds.len(), 1);
        let fold = trace.folds[0];
        assert!((fold.time - 0.5).abs() < 1e-9);
        assert_eq!(fold.sign, 1.0);
        let post = trace.output_at(&g, fold.time);
        assert!((post.abs() - (0.1 - 0.03)).abs() < 1e-6, "{post}");
    }

    #[test]
    fn zero_hysteresis_instant_fold_does_not_loop() {
        let g = Line(0.0, 0.5);
        let params = HysteresisParams::new(0.1, 0.0, 0.0, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.1, 441).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        // Folds every 2 lambda / slope = 0.4 s starting at 0.2.
        let times: Vec<f64> = trace.folds.iter().map(|f| f.time).collect();
        assert_eq!(times.len(), 3, "{times:?}");
        for (t, want) in times.iter().zip([0.2, 0.6, 1.0]) {
            assert!((t - want).abs() < 1e-9);
        }
        assert!(trace.max_abs_output() <= 0.1 + 1e-9);
    }

    #[test]
    fn steep_ramped_signal_folds_several_times_at_once() {
        // Slope 2.5 against ramp slope (2 lambda - h) / alpha = 1 needs three
        // simultaneous folds before the residual turns inward.
        let g = Line(0.0, 2.5);
        let params = HysteresisParams::new(0.2, 0.1, 0.3, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 0.2, 401).unwrap();
        let trace = encode_modified(&g, &params, &grid).unwrap();
        assert_eq!(trace.folds.len(), 3, "{:?}", trace.folds);
        assert!(trace.folds.iter().all(|f| (f.time - 0.08).abs() < 1e-9));
        assert!(trace.max_abs_output() <= 0.2 + 1e-9);
    }

    #[test]
    fn oversized_hysteresis_runs_away() {
        let g = Line(0.0, 1.0);
        let params = HysteresisParams::new(0.1, 0.5, 0.0, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 101).unwrap();
        assert!(matches!(
            encode_modified(&g, &params, &grid),
            Err(Error::RunawayFolds { .. })
        ));
    }

    #[test]
    fn fold_signal_shapes() {
        let params = HysteresisParams::new(0.2, 0.1, 0.0, 0.0).unwrap();
        let grid = TimeGrid::spanning(-1.0, 1.0, 5).unwrap();
        assert!(build_fold_signal(&[], &params, &grid)
            .iter()
            .all(|v| *v == 0.0));
        let step = build_fold_signal(
            &[Fold {
                time: 0.0,
                sign: 1.0,
            }],
            &params,
            &grid,
        );
        assert_eq!(step.len(), 5);
        for (t, v) in grid.times().zip(step) {
            let want = if t >= 0.0 { 0.2 * 2.0 - 0.1 } else { 0.0 };
            assert!((v - want).abs() < 1e-15);
        }
    }

    #[test]
    fn ramped_modified_stays_in_range_and_hits_threshold() {
        let params = ramped();
        let grid = TimeGrid::spanning(-1.0, 1.0, 10_001).unwrap();
        for seed in 1..=10 {
            let g = generate_random_pw(6.3, 48, 0.0208, 0.6, seed).unwrap();
            let trace = encode_modified(&g, &params, &grid).unwrap();
            assert!(!trace.folds.is_empty());
            assert!(trace.max_abs_output() <= 0.2 + 1e-6);
            for f in &trace.folds {
                let v = trace.output_at(&g, f.time);
                assert!((v.abs() - 0.2).abs() < 1e-6, "seed {seed}: {v}");
            }
            let rebuilt = build_fold_signal(&trace.folds, &params, &grid);
            for ((t, out), fold) in grid.times().zip(&trace.output).zip(rebuilt) {
                assert!((out + fold - g.evaluate(t)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generalized_matches_modified_without_transient() {
        let params = HysteresisParams::new(0.1, 0.05, 0.0, -1.0).unwrap();
        let grid = TimeGrid::spanning(-1.0, 1.0, 2001).unwrap();
        let g = generate_random_pw(6.3, 48, 0.0208, 0.4, 8).unwrap();
        let a = encode_modified(&g, &params, &grid).unwrap();
        let b = encode_generalized(&g, &params, &grid).unwrap();
        assert_eq!(a.folds, b.folds);
        assert_eq!(a.output, b.output);
    }

    #[test]
    fn separation_checks() {
        let params = HysteresisParams::new(0.2, 0.1, 0.3, 0.0).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 11).unwrap();
        let mut trace = EncodedTrace {
            kind: EncoderKind::Modified,
            params,
            grid,
            output: vec![0.0; 11],
            folds: vec![],
            time_tolerance: 1e-12,
        };
        assert!(verify_separation(&trace, &params));
        trace.folds.push(Fold {
            time: 0.1,
            sign: 1.0,
        });
        assert!(verify_separation(&trace, &params));
        trace.folds.push(Fold {
            time: 0.25,
            sign: -1.0,
        });
        trace.folds.push(Fold {
            time: 0.4,
            sign: 1.0,
        });
        assert!(!verify_separation(&trace, &params));
    }

    #[test]
    fn return_check_detects_late_fold() {
        let g = BandlimitedSignal::new(6.3, 0, vec![0.05]).unwrap();
        let params = HysteresisParams::new(0.1, 0.02, 0.05, -0.5).unwrap();
        let grid = TimeGrid::spanning(-0.5, 1.0, 1501).unwrap();
        let mut trace = encode_modified(&g, &params, &grid).unwrap();
        assert!(verify_return(&trace, &g, &params, 0.0));
        trace.folds.push(Fold {
            time: 0.5 + 3.0 * 0.05,
            sign: 1.0,
        });
        trace.output = grid.times().map(|t| trace.output_at(&g, t)).collect();
        assert!(!verify_return(&trace, &g, &params, 1e-6));
    }

    #[test]
    fn grid_refinement_moves_folds_less_than_a_step() {
        let params = HysteresisParams::new(0.1, 0.05, 0.05, -1.0).unwrap();
        let g = generate_random_pw(6.3, 48, 0.0208, 0.4, 12).unwrap();
        let coarse = TimeGrid::spanning(-1.0, 1.0, 1001).unwrap();
        let fine = TimeGrid::spanning(-1.0, 1.0, 2001).unwrap();
        let a = encode_modified(&g, &params, &coarse).unwrap();
        let b = encode_modified(&g, &params, &fine).unwrap();
        assert_eq!(a.folds.len(), b.folds.len());
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert!((x.time - y.time).abs() < coarse.step);
            assert_eq!(x.sign, y.sign);
        }
    }
}
