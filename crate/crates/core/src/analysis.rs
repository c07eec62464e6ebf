//! Pairwise error probability, diversity slope and envelope statistics.
//!
//! With rotated difference `β` (unit-power coordinates) and `m` product
//! channel dimensions, the averaged PEP of both code families is
//! `(1/π)∫₀^{π/2} ∏ᵢ (1 + ρβᵢ²/(8 sin²α))^{-2} dα`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::channel::RngStream;
use crate::error::{Error, Result};
use crate::numerics::RealMatrix;
use crate::rotation::DifferenceSet;
use crate::scheme::Scheme;

/// Nodes per Gauss–Legendre panel.
pub const DEFAULT_NODES: usize = 64;
/// Panels `[2^{-k-1}, 2^{-k}]·π/2` for `k < PANELS`, plus `[0, 2^{-PANELS}·π/2]`.
pub const PANELS: usize = 40;
/// `β` coordinates below this count as zero.
pub const ZERO_BETA_TOL: f64 = 1e-9;
/// `2⁷·C(16, 8)`.
pub const QSTBC_ASYMPTOTIC_CONSTANT: f64 = 1_647_360.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on `(0, π/2]` with panels shrinking geometrically
/// towards 0, so that sharp transitions at any small angle are resolved.
#[derive(Debug, Clone)]
pub struct AngleQuadrature {
    points: Vec<(f64, f64)>,
}

impl AngleQuadrature {
    pub fn new(nodes: usize) -> Self {
        let (x, w) = gauss_legendre(nodes);
        let mut points = Vec::with_capacity(nodes * (PANELS + 1));
        let mut panel = |a: f64, b: f64| {
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (xi, wi) in x.iter().zip(&w) {
                points.push((mid + half * xi, half * wi));
            }
        };
        let mut hi = FRAC_PI_2;
        for _ in 0..PANELS {
            panel(hi / 2.0, hi);
            hi /= 2.0;
        }
        panel(0.0, hi);
        Self { points }
    }

    pub fn shared() -> &'static Self {
        static RULE: OnceLock<AngleQuadrature> = OnceLock::new();
        RULE.get_or_init(|| Self::new(DEFAULT_NODES))
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().map(|&(a, w)| w * f(a)).sum()
    }
}

fn exact_with(rule: &AngleQuadrature, beta: &[f64], rho: f64) -> f64 {
    let sq: Vec<f64> = beta.iter().map(|b| rho * b * b / 8.0).collect();
    rule.integrate(|a| {
        let s2 = a.sin().powi(2);
        sq.iter().map(|c| (1.0 + c / s2).powi(-2)).product::<f64>()
    }) / PI
}

/// Averaged PEP for any number of product dimensions.
pub fn pep_exact(beta: &[f64], rho: f64) -> f64 {
    exact_with(AngleQuadrature::shared(), beta, rho)
}

/// [`pep_exact`] with a different node count per panel.
pub fn pep_exact_with_nodes(beta: &[f64], rho: f64, nodes: usize) -> f64 {
    exact_with(&AngleQuadrature::new(nodes), beta, rho)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("SNR must be positive, got {rho}")))
    }
}

/// Averaged PEP of the 8-antenna 4Gp-QSTBC (`β` of length 4).
pub fn pep_exact_qstbc(beta: &[f64], rho: f64) -> Result<f64> {
    if beta.len() != 4 {
        return Err(Error::Dimension(format!("QSTBC PEP needs 4 coordinates, got {}", beta.len())));
    }
    check_rho(rho)?;
    Ok(pep_exact(beta, rho))
}

/// Averaged PEP of 4Gp-SAST (`β` of length `M/2`).
pub fn pep_exact_sast(beta: &[f64], rho: f64) -> Result<f64> {
    if beta.is_empty() {
        return Err(Error::EmptyInput("beta"));
    }
    check_rho(rho)?;
    Ok(pep_exact(beta, rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymptoticPep {
    Finite(f64),
    /// Some `βᵢ = 0`: the high-SNR power law does not reach full diversity.
    DiversityDeficient,
}

impl AsymptoticPep {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::DiversityDeficient => None,
        }
    }
}

fn inverse_fourth_product(beta: &[f64]) -> Option<f64> {
    if beta.iter().any(|b| b.abs() < ZERO_BETA_TOL) {
        return None;
    }
    Some(beta.iter().map(|b| b.powi(-4)).product())
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `2^{2m-1}·C(4m, 2m)`: the high-SNR constant for `m` product dimensions.
pub fn asymptotic_constant(m: usize) -> f64 {
    let m = m as u64;
    2f64.powi(2 * m as i32 - 1) * binomial(4 * m, 2 * m)
}

/// `1 647 360·ρ⁻⁸·∏|βᵢ|⁻⁴`.
pub fn pep_asymptotic_qstbc(beta: &[f64], rho: f64) -> Result<AsymptoticPep> {
    if beta.len() != 4 {
        return Err(Error::Dimension(format!("QSTBC PEP needs 4 coordinates, got {}", beta.len())));
    }
    check_rho(rho)?;
    Ok(match inverse_fourth_product(beta) {
        Some(p) => AsymptoticPep::Finite(QSTBC_ASYMPTOTIC_CONSTANT * rho.powi(-8) * p),
        None => AsymptoticPep::DiversityDeficient,
    })
}

/// `2^{6m}·ρ^{-2m}/2^{17}·C(16, 8)·∏βᵢ⁻⁴`, a form whose integral factor is
/// specific to `m = 4`; see [`pep_asymptotic`] for general `m`.
pub fn pep_asymptotic_sast(beta: &[f64], rho: f64) -> Result<AsymptoticPep> {
    if beta.is_empty() {
        return Err(Error::EmptyInput("beta"));
    }
    check_rho(rho)?;
    let m = beta.len() as i32;
    Ok(match inverse_fourth_product(beta) {
        Some(p) => AsymptoticPep::Finite(2f64.powi(6 * m - 17) * binomial(16, 8) * rho.powi(-2 * m) * p),
        None => AsymptoticPep::DiversityDeficient,
    })
}

/// `2^{2m-1}·C(4m, 2m)·ρ^{-2m}·∏βᵢ⁻⁴`, the high-SNR limit of [`pep_exact`].
pub fn pep_asymptotic(beta: &[f64], rho: f64) -> Result<AsymptoticPep> {
    if beta.is_empty() {
        return Err(Error::EmptyInput("beta"));
    }
    check_rho(rho)?;
    let m = beta.len();
    Ok(match inverse_fourth_product(beta) {
        Some(p) => AsymptoticPep::Finite(asymptotic_constant(m) * rho.powi(-2 * m as i32) * p),
        None => AsymptoticPep::DiversityDeficient,
    })
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `Q(x)` from the finite-range integral `(1/π)∫₀^{π/2} exp(−x²/(2sin²θ)) dθ`.
pub fn q_function_craig(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_function_craig(-x);
    }
    AngleQuadrature::shared().integrate(|t| (-x * x / (2.0 * t.sin().powi(2))).exp()) / PI
}

fn conditional_argument(beta: &[f64], lambdas: &[Vec<Complex64>], rho: f64, antennas: usize) -> Result<f64> {
    if lambdas.iter().any(|l| l.len() != beta.len()) {
        return Err(Error::Dimension("each eigenvalue row must match beta".into()));
    }
    let energy: f64 = lambdas
        .iter()
        .flat_map(|l| l.iter().zip(beta).map(|(z, b)| b * b * z.norm_sqr()))
        .sum();
    Ok((rho * energy / (2.0 * antennas as f64)).sqrt())
}

/// PEP for a fixed channel: `Q(√(ρ·Σᵢⱼ βⱼ²|λᵢⱼ|²/(2M)))` with `M` transmit
/// antennas (`/16` for `M = 8`).
pub fn conditional_pep(beta: &[f64], lambdas: &[Vec<Complex64>], rho: f64, antennas: usize) -> Result<f64> {
    Ok(q_function(conditional_argument(beta, lambdas, rho, antennas)?))
}

/// [`conditional_pep`] through [`q_function_craig`].
pub fn conditional_pep_craig(beta: &[f64], lambdas: &[Vec<Complex64>], rho: f64, antennas: usize) -> Result<f64> {
    Ok(q_function_craig(conditional_argument(beta, lambdas, rho, antennas)?))
}

/// Least-squares slope of `log₁₀ pep` against `log₁₀ ρ`.
pub fn diversity_slope(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::EmptyInput("at least two curve points"));
    }
    if curve.iter().any(|&(r, p)| r <= 0.0 || p <= 0.0) {
        return Err(Error::Config("slope needs positive SNR and probability values".into()));
    }
    let pts: Vec<(f64, f64)> = curve.iter().map(|&(r, p)| (r.log10(), p.log10())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("slope needs at least two distinct SNR values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub pep: f64,
    /// Raw difference attaining the maximum.
    pub delta: Vec<f64>,
    /// Rotated, unit-power `β` of that difference.
    pub beta: Vec<f64>,
    /// Largest asymptotic PEP over the set; deficient if any difference
    /// loses a coordinate.
    pub asymptotic: AsymptoticPep,
}

/// `β = s·R·δ` in unit-power coordinates.
pub fn rotated_beta(combined: &RealMatrix, delta: &[f64], scale: f64) -> Vec<f64> {
    (0..combined.nrows())
        .map(|i| delta.iter().enumerate().map(|(j, d)| combined[(i, j)] * d).sum::<f64>() * scale)
        .collect()
}

/// Largest PEP over all differences for the combined rotation `R`.
pub fn worst_case_pep(diffs: &DifferenceSet, combined: &RealMatrix, rho: f64) -> Result<WorstCase> {
    check_rho(rho)?;
    if diffs.is_empty() {
        return Err(Error::EmptyInput("difference set"));
    }
    if combined.nrows() != diffs.dim() || combined.ncols() != diffs.dim() {
        return Err(Error::Dimension("rotation size differs from differences".into()));
    }
    let mut worst: Option<WorstCase> = None;
    let mut asym = AsymptoticPep::Finite(0.0);
    for d in diffs.iter() {
        let beta = rotated_beta(combined, d, diffs.scale());
        let p = pep_exact(&beta, rho);
        match (asym, pep_asymptotic(&beta, rho)?) {
            (AsymptoticPep::Finite(a), AsymptoticPep::Finite(b)) => asym = AsymptoticPep::Finite(a.max(b)),
            _ => asym = AsymptoticPep::DiversityDeficient,
        }
        if worst.as_ref().is_none_or(|w| p > w.pep) {
            worst = Some(WorstCase { pep: p, delta: d.to_vec(), beta, asymptotic: AsymptoticPep::Finite(0.0) });
        }
    }
    let mut w = worst.expect("nonempty set");
    w.asymptotic = asym;
    Ok(w)
}

/// Peak-to-average power ratio of the transmitted entries: for each
/// antenna, the largest `|X_tm|²` over the sampled blocks divided by the
/// mean `|X_tm|²`; the maximum over antennas is returned.
pub fn papr(scheme: &Scheme, trials: usize, rng: &mut RngStream) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("PAPR needs at least one block".into()));
    }
    let m = scheme.code().antennas();
    let q = scheme.constellation().len();
    let mut peak = vec![0.0f64; m];
    let mut sum = vec![0.0f64; m];
    for _ in 0..trials {
        let idx: Vec<usize> = (0..scheme.symbols_per_block()).map(|_| rng.uniform_index(q)).collect();
        let x = scheme.encode_indices(&idx)?;
        for c in 0..m {
            for t in 0..x.nrows() {
                let p = x[(t, c)].norm_sqr();
                peak[c] = peak[c].max(p);
                sum[c] += p;
            }
        }
    }
    let per_entry = (trials * scheme.code().time_slots()) as f64;
    Ok((0..m)
        .filter(|&c| sum[c] > 0.0)
        .map(|c| peak[c] / (sum[c] / per_entry))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // Exact up to degree 15.
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((int - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn zero_beta_gives_half() {
        assert!((pep_exact(&[0.0; 4], 10.0) - 0.5).abs() < 1e-14);
        // The deficit from 1/2 scales like sqrt(rho).
        assert!((pep_exact(&[1.0, 0.5, 2.0, 1.0], 1e-30) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn wallis_constant() {
        assert_eq!(asymptotic_constant(4), QSTBC_ASYMPTOTIC_CONSTANT);
        assert!((binomial(16, 8) - 12870.0).abs() < 1e-9);
    }

    #[test]
    fn q_function_paths_agree() {
        for x in [0.0, 0.1, 1.0, 2.5, 5.0, 9.0] {
            assert!((q_function(x) - q_function_craig(x)).abs() < 1e-13, "{x}");
        }
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn synthetic_slope() {
        let curve: Vec<(f64, f64)> = (0..5).map(|i| {
            let r = 10f64.powi(i);
            (r, 3.0 * r.powi(-8))
        }).collect();
        assert!((diversity_slope(&curve).unwrap() + 8.0).abs() < 1e-9);
        assert!(diversity_slope(&curve[..1]).is_err());
    }

    #[test]
    fn deficient_beta() {
        assert_eq!(pep_asymptotic_qstbc(&[1.0, 0.0, 1.0, 1.0], 10.0).unwrap(), AsymptoticPep::DiversityDeficient);
        assert!(pep_exact_qstbc(&[1.0; 3], 10.0).is_err());
    }
}
