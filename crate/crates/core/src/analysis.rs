//! Fringe-scan analysis: sinusoid fitting, relative phases, phase-slope
//! regression and the Bloch-sphere geometric phase.
//!
//! Fits use the linear reparameterization `I = A + B cos x + C sin x` of the
//! fringe model `I = A(1 + ν cos(x + Φ))`, solved in closed form. All
//! reported phases are wrapped to `(−π, π]`.

use thiserror::Error;

use std::f64::consts::{PI, TAU};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    /// The fit problem is rank-deficient or under-sampled.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    /// The fitted mean intensity is not positive.
    #[error("fitted offset must be positive, got {0}")]
    NegativeOffset(f64),
    /// No modulation: the fringe phase cannot be identified.
    #[error("fringe phase is unidentifiable (zero modulation)")]
    PhaseUnidentifiable,
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Fitted fringe parameters for `I = A(1 + ν cos(x + Φ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    /// Mean intensity `A > 0`.
    pub offset_a: f64,
    /// Visibility `ν = √(B² + C²)/A`.
    pub visibility: f64,
    /// Phase in `(−π, π]`; `None` when the scan carries no modulation.
    pub phase: Option<f64>,
    pub residual_rms: f64,
}

/// A sampled intensity scan and, once fitted, its fringe parameters.
#[derive(Clone, Debug)]
pub struct FringeScan {
    pub points: Vec<(f64, f64)>,
    pub fitted: Option<FringeFit>,
}

impl FringeScan {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        FringeScan {
            points,
            fitted: None,
        }
    }

    pub fn fit(&mut self) -> Result<FringeFit, FitError> {
        let fit = fit_fringe(&self.points)?;
        self.fitted = Some(fit);
        Ok(fit)
    }
}

/// Ordinary-least-squares line fit result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least-squares fringe fit via `I = A + B cos x + C sin x`, then
/// `ν = √(B² + C²)/A` and `Φ = atan2(−C, B)`.
///
/// Requires at least four points spanning at least half a period.
pub fn fit_fringe(points: &[(f64, f64)]) -> Result<FringeFit, FitError> {
    let n = points.len();
    if n < 4 {
        return Err(FitError::DegenerateFit(format!(
            "need at least 4 points, got {n}"
        )));
    }
    let span = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if !(span.is_finite() && span >= PI) {
        return Err(FitError::DegenerateFit(format!(
            "scan spans {span:.3} rad, need at least half a period (π)"
        )));
    }

    // normal equations for the design [1, cos x, sin x], scaled by 1/n
    let inv_n = 1.0 / n as f64;
    let mut m = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for &(x, y) in points {
        let row = [1.0, x.cos(), x.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j] * inv_n;
            }
            rhs[i] += row[i] * y * inv_n;
        }
    }
    let coeffs = solve3(&m, &rhs)
        .ok_or_else(|| FitError::DegenerateFit("design matrix is rank-deficient".into()))?;
    let (a, b, c) = (coeffs[0], coeffs[1], coeffs[2]);
    if a <= 0.0 {
        return Err(FitError::NegativeOffset(a));
    }

    let amplitude = b.hypot(c);
    let phase = if amplitude > 1e-12 * a.max(1.0) {
        Some(wrap_angle((-c).atan2(b)))
    } else {
        None
    };
    let residual_sq: f64 = points
        .iter()
        .map(|&(x, y)| {
            let model = a + b * x.cos() + c * x.sin();
            (y - model) * (y - model)
        })
        .sum();
    Ok(FringeFit {
        offset_a: a,
        visibility: amplitude / a,
        phase,
        residual_rms: (residual_sq * inv_n).sqrt(),
    })
}

fn solve3(m: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let det = det3(m);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = *m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *slot = det3(&mc) / det;
    }
    Some(out)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Relative phase between a measurement and its reference scan,
/// `wrap(Φ_on − Φ_off)`.
pub fn relative_phase(scan_on: &FringeFit, scan_off: &FringeFit) -> Result<f64, FitError> {
    match (scan_on.phase, scan_off.phase) {
        (Some(on), Some(off)) => Ok(wrap_angle(on - off)),
        _ => Err(FitError::PhaseUnidentifiable),
    }
}

/// Least-squares slope of `phases` against `settings`.
///
/// Phases are unwrapped before the regression: points are ordered by
/// setting, then each phase is shifted by the multiple of 2π that minimizes
/// the jump from its predecessor.
pub fn phase_slope(settings: &[f64], phases: &[f64]) -> Result<SlopeResult, FitError> {
    let n = settings.len();
    if n != phases.len() || n < 3 {
        return Err(FitError::DegenerateFit(format!(
            "need matching settings/phases of length >= 3, got {n}/{}",
            phases.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| settings[i].total_cmp(&settings[j]));

    let mut xs: Vec<f64> = Vec::with_capacity(n);
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    for &i in &order {
        let raw = phases[i];
        let y = match ys.last() {
            None => raw,
            Some(&prev) => raw + TAU * ((prev - raw) / TAU).round(),
        };
        xs.push(settings[i]);
        ys.push(y);
    }

    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx < 1e-24 {
        return Err(FitError::DegenerateFit("settings are constant".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if n > 2 {
        (ssr.max(0.0) / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeResult {
        slope,
        intercept,
        stderr,
    })
}

/// Geometric phase picked up between the two flipper settings,
/// `Φ_G = wrap(φ_ω − φ_{ω/2})`, i.e. half the enclosed solid angle.
pub fn geometric_phase(phi_omega: f64, phi_half: f64) -> f64 {
    wrap_angle(phi_omega - phi_half)
}

/// Signed solid angle of the spherical lune enclosed by the two pole-to-pole
/// semi-great circles at azimuths `phi1` and `phi2`.
///
/// The area is evaluated by numerical quadrature of `∫∫ sin θ dθ dφ` over
/// the lune rather than the closed form `2·wrap(φ₁ − φ₂)`, so it can serve
/// as an independent check of the geometric-phase law.
pub fn solid_angle_semi_great_circles(phi1: f64, phi2: f64) -> f64 {
    let opening = wrap_angle(phi1 - phi2);

    // the two geodesics bounding the lune; both run pole to pole
    let left = semi_great_circle(phi2, 64);
    let right = semi_great_circle(phi1, 64);
    for curve in [&left, &right] {
        debug_assert!((curve[0].2 - 1.0).abs() < 1e-12);
        debug_assert!((curve.last().unwrap().2 + 1.0).abs() < 1e-12);
        debug_assert!(curve
            .iter()
            .all(|&(x, y, z)| ((x * x + y * y + z * z) - 1.0).abs() < 1e-12));
    }

    // ∫_φ₂^{φ₂+|Δφ|} ∫_0^π sinθ dθ dφ via composite Simpson in both axes
    let theta_integral = simpson(|theta: f64| theta.sin(), 0.0, PI, 512);
    let area = simpson(|_phi| theta_integral, 0.0, opening.abs(), 128);
    area.copysign(opening)
}

/// Sample the pole-to-pole geodesic at fixed azimuth as unit vectors.
fn semi_great_circle(phi: f64, samples: usize) -> Vec<(f64, f64, f64)> {
    (0..=samples)
        .map(|i| {
            let theta = PI * i as f64 / samples as f64;
            (
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            )
        })
        .collect()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals.is_multiple_of(2));
    if (b - a).abs() == 0.0 {
        return 0.0;
    }
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 0 { 2.0 } else { 4.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}
