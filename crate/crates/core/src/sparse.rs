//! Greedy solvers for `min ||c||_0 subject to V c = s`: orthogonal matching
//! pursuit and its stagewise variant with batch selection and pruning.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Omp,
    Saomp,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(SolverKind::Omp),
            "saomp" => Ok(SolverKind::Saomp),
            other => Err(invalid(format!(
                "unknown solver '{other}' (expected omp or saomp)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Omp => "omp",
            SolverKind::Saomp => "saomp",
        })
    }
}

/// Stopping tolerance `eps` on `||V^*(s - V c)||_inf` plus the SAOMP schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    /// Initial batch threshold, relative to the largest correlation.
    pub nu: f64,
    /// Pruning threshold, relative to the largest coefficient.
    pub mu: f64,
    pub i_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            nu: 0.8,
            mu: 0.05,
            i_max: 50,
        }
    }
}

impl SolverConfig {
    /// The SAOMP settings under which it coincides with OMP.
    pub fn omp_equivalent(eps: f64, n: usize) -> Self {
        Self {
            eps,
            nu: 1.0,
            mu: 0.0,
            i_max: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(invalid(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if !(0.0..=1.0).contains(&self.nu) || !(0.0..=1.0).contains(&self.mu) {
            return Err(invalid(format!(
                "nu and mu must lie in [0, 1] (got {}, {})",
                self.nu, self.mu
            )));
        }
        if self.i_max == 0 {
            return Err(invalid("i_max must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseSolveResult {
    #[serde(skip)]
    pub c: DVector<Complex64>,
    /// Final support, ascending.
    pub support: Vec<usize>,
    /// Support (ascending) after each iteration.
    pub trajectory: Vec<Vec<usize>>,
    /// `||s - V c||_2` before the first and after every iteration.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SparseSolveResult {
    fn empty(n: usize, residual: f64) -> Self {
        Self {
            c: DVector::zeros(n),
            support: Vec::new(),
            trajectory: Vec::new(),
            residual_norms: vec![residual],
            iterations: 0,
            converged: true,
        }
    }
}

fn check_shapes(v: &DMatrix<Complex64>, s: &DVector<Complex64>) -> Result<()> {
    if v.nrows() != s.len() {
        return Err(Error::LengthMismatch {
            expected: v.nrows(),
            actual: s.len(),
        });
    }
    Ok(())
}

/// Least-squares fit of `s` using only the columns in `support`.
///
/// Householder QR of the restricted block; a rank-deficient block falls back
/// to the SVD, which yields the minimum-norm minimizer. Entries off the
/// support are exactly zero.
pub fn least_squares_restricted(
    v: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    support: &[usize],
) -> Result<DVector<Complex64>> {
    check_shapes(v, s)?;
    let mut c = DVector::zeros(v.ncols());
    if support.is_empty() {
        return Ok(c);
    }
    if support.len() > v.nrows() {
        return Err(Error::SupportTooLarge {
            support: support.len(),
            rows: v.nrows(),
        });
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= v.ncols()) {
        return Err(invalid(format!("support index {bad} out of range")));
    }
    let block = v.select_columns(support);

    let qr = block.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().map(|d| d.norm()).fold(0.0, f64::max);
    let full_rank = r
        .diagonal()
        .iter()
        .all(|d| d.norm() > 1e-10 * diag_max.max(f64::MIN_POSITIVE));

    let x = if full_rank {
        let qts = qr.q().ad_mul(s);
        r.solve_upper_triangular(&qts)
            .ok_or_else(|| invalid("triangular solve failed"))?
    } else {
        let svd = block.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        svd.solve(s, cutoff).map_err(|e| invalid(e.to_string()))?
    };
    for (k, &j) in support.iter().enumerate() {
        c[j] = x[k];
    }
    Ok(c)
}

fn inf_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Orthogonal matching pursuit.
///
/// Adds the column with the largest residual correlation (smallest index on
/// ties) until `||V^*(s - V c)||_inf <= eps`. Stops unconverged once the
/// support can no longer grow.
pub fn omp(v: &DMatrix<Complex64>, s: &DVector<Complex64>, eps: f64) -> Result<SparseSolveResult> {
    check_shapes(v, s)?;
    let n = v.ncols();
    let capacity = v.nrows().min(n);
    let mut result = SparseSolveResult::empty(n, s.norm());
    let mut residual = s.clone();
    let mut support: Vec<usize> = Vec::new();

    loop {
        let corr = v.ad_mul(&residual);
        if inf_norm(&corr) <= eps {
            result.converged = true;
            break;
        }
        if support.len() == capacity {
            result.converged = false;
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, z) in corr.iter().enumerate() {
            if support.contains(&j) {
                continue;
            }
            let mag = z.norm();
            if best.is_none_or(|(_, b)| mag > b) {
                best = Some((j, mag));
            }
        }
        let Some((j, _)) = best else {
            result.converged = false;
            break;
        };
        support.push(j);
        support.sort_unstable();

        result.c = least_squares_restricted(v, s, &support)?;
        residual = s - v * &result.c;
        result.residual_norms.push(residual.norm());
        result.trajectory.push(support.clone());
        result.iterations += 1;
    }
    result.support = support;
    Ok(result)
}

/// Stagewise arithmetic OMP.
///
/// Each iteration adds every column whose correlation reaches `delta` times
/// the largest one, refits, then drops support entries whose coefficient is
/// below `mu` times the largest coefficient. `delta` starts at `nu` and grows
/// by `(1 - nu) / i_max` per iteration.
pub fn saomp(
    v: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    config: &SolverConfig,
) -> Result<SparseSolveResult> {
    check_shapes(v, s)?;
    config.validate()?;
    let n = v.ncols();
    let rows = v.nrows();
    let mut result = SparseSolveResult::empty(n, s.norm());
    let mut residual = s.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut delta = config.nu;
    let step = (1.0 - config.nu) / config.i_max as f64;

    result.converged = false;
    for _ in 0..config.i_max {
        let corr = v.ad_mul(&residual);
        let top = inf_norm(&corr);
        if top <= config.eps {
            result.converged = true;
            break;
        }

        let mut fresh: Vec<(usize, f64)> = corr
            .iter()
            .enumerate()
            .map(|(j, z)| (j, z.norm()))
            .filter(|&(j, mag)| mag >= delta * top && !support.contains(&j))
            .collect();
        fresh.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let room = rows.saturating_sub(support.len());
        if room == 0 || fresh.is_empty() {
            break;
        }
        support.extend(fresh.into_iter().take(room).map(|(j, _)| j));
        support.sort_unstable();

        let mut c = least_squares_restricted(v, s, &support)?;
        let c_max = inf_norm(&c);
        support.retain(|&j| c[j].norm() >= config.mu * c_max);
        for j in 0..n {
            if support.binary_search(&j).is_err() {
                c[j] = Complex64::new(0.0, 0.0);
            }
        }
        result.c = c;
        residual = s - v * &result.c;
        result.residual_norms.push(residual.norm());
        result.trajectory.push(support.clone());
        result.iterations += 1;
        delta += step;
    }
    if !result.converged {
        result.converged = inf_norm(&v.ad_mul(&residual)) <= config.eps;
    }
    result.support = support;
    Ok(result)
}

/// Runs the chosen solver; OMP only reads `config.eps`.
pub fn solve(
    kind: SolverKind,
    v: &DMatrix<Complex64>,
    s: &DVector<Complex64>,
    config: &SolverConfig,
) -> Result<SparseSolveResult> {
    match kind {
        SolverKind::Omp => omp(v, s, config.eps),
        SolverKind::Saomp => saomp(v, s, config),
    }
}
