//! Closed-form reliability analytics for three-qubit flip-code storage:
//! the physical decay coefficient, the (a, b) rate-equation coefficients,
//! closed-form and matrix-exponential logical reliability, the classical
//! 2-out-of-3 comparison curve, fault-tolerance classification and the
//! parameter-scan tables.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::apparatus::{apparatus_matrix_discrete, entropy_gap, EntropyGap};
use crate::dynamics::{independent_sum, thermal_qubit, StepMethod};
use crate::error::{Error, Result};
use crate::events::{flip_code_projector, flip_code_state};
use crate::numkernel::{gates, matexp, ComplexMatrix};

/// Stored-state amplitude α (of |111⟩, with β = √(1−α²)) and thermal
/// occupation N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    pub alpha: f64,
    pub n_thermal: f64,
}

impl CodeParams {
    pub fn new(alpha: f64, n_thermal: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("alpha = {}, need [0, 1]", alpha)));
        }
        if !(0.0..=0.5).contains(&n_thermal) {
            return Err(Error::OutOfRange(format!(
                "n_thermal = {}, need [0, 0.5]",
                n_thermal
            )));
        }
        Ok(Self { alpha, n_thermal })
    }

    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha * self.alpha).sqrt()
    }

    /// Single-qubit ket α|1⟩ + β|0⟩.
    pub fn single_qubit_state(&self) -> ComplexMatrix {
        ComplexMatrix::from_real(2, 1, &[self.beta(), self.alpha]).unwrap()
    }
}

/// Expectation values on the stored single-qubit state, kept complex so a
/// complex-amplitude mode needs no refactor.
struct Expectations {
    sp_sm: Complex64,
    sm_sp: Complex64,
    sm: Complex64,
    sp: Complex64,
}

fn expectations(params: &CodeParams) -> Expectations {
    let psi = params.single_qubit_state();
    let ev = |op: &ComplexMatrix| -> Complex64 { psi.inner(&op.mul(&psi)) };
    let sp = gates::sigma_plus();
    let sm = gates::sigma_minus();
    Expectations {
        sp_sm: ev(&sp.mul(&sm)),
        sm_sp: ev(&sm.mul(&sp)),
        sm: ev(&sm),
        sp: ev(&sp),
    }
}

/// Physical decay coefficient
/// `M = (1−N)·Cov(σ₊,σ₋) + N·Cov(σ₋,σ₊)` with `Cov(A,B) = ⟨AB⟩ − ⟨A⟩⟨B⟩`
/// on the stored state.
pub fn coeff_m(params: &CodeParams) -> f64 {
    let e = expectations(params);
    let n = params.n_thermal;
    let cov_pm = e.sp_sm - e.sp * e.sm;
    let cov_mp = e.sm_sp - e.sm * e.sp;
    ((1.0 - n) * cov_pm + n * cov_mp).re
}

/// Physical-bit reliability `R_P(t) = e^{−M t}` (t in 1/γ₀ units).
pub fn r_physical(t: f64, params: &CodeParams) -> f64 {
    (-coeff_m(params) * t).exp()
}

/// The four rate-equation coefficients (q₁, q₂, q₃, q₄) for the code-space
/// amplitudes a (code state) and b (one-flip manifold):
/// a′ = q₁a + q₂b, b′ = q₃a + q₄b.
pub fn q_coeffs(params: &CodeParams) -> (f64, f64, f64, f64) {
    let e = expectations(params);
    let n = params.n_thermal;
    let q1 = -3.0 * (1.0 - n) * e.sp_sm - 3.0 * n * e.sm_sp;
    let q2 = 3.0 * (1.0 - n) * e.sm_sp * e.sm_sp + 3.0 * n * e.sp_sm * e.sp_sm;
    let q3 = (1.0 - n) * e.sp_sm * e.sp_sm + n * e.sm_sp * e.sm_sp;
    let q4 = (1.0 - n) * (2.0 * e.sm * e.sm - 2.0 * e.sp_sm - e.sm_sp)
        + n * (2.0 * e.sp * e.sp - 2.0 * e.sm_sp - e.sp_sm);
    (q1.re, q2.re, q3.re, q4.re)
}

/// Exponents of the closed form: M₁ = ½(q₁+q₄),
/// M₂ = ½√(4q₂q₃ + (q₁−q₄)²), M₃ = (q₁+6q₃−q₄)/(2M₂).
/// `m3` is `None` in the degenerate M₂ = 0 case, where the cosh/sinh pair
/// collapses to the limit 1 + (q₁+6q₃−q₄)t/2.
#[derive(Debug, Clone, Copy)]
pub struct MCoeffs {
    pub m1: f64,
    pub m2: f64,
    pub m3: Option<f64>,
}

const M2_DEGENERATE_EPS: f64 = 1e-12;

pub fn m_coeffs(q: (f64, f64, f64, f64)) -> Result<MCoeffs> {
    let (q1, q2, q3, q4) = q;
    let m1 = 0.5 * (q1 + q4);
    let disc = 4.0 * q2 * q3 + (q1 - q4) * (q1 - q4);
    if disc < -1e-12 {
        return Err(Error::OutOfRange(format!(
            "4q₂q₃ + (q₁−q₄)² = {} < 0 has no real exponent pair",
            disc
        )));
    }
    let m2 = 0.5 * disc.max(0.0).sqrt();
    let m3 = if m2 > M2_DEGENERATE_EPS {
        Some((q1 + 6.0 * q3 - q4) / (2.0 * m2))
    } else {
        None
    };
    Ok(MCoeffs { m1, m2, m3 })
}

/// All closed-form constants for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub m: f64,
    pub q: (f64, f64, f64, f64),
    pub m123: MCoeffs,
}

impl ClosedForm {
    pub fn for_params(params: &CodeParams) -> Result<Self> {
        let q = q_coeffs(params);
        Ok(Self { m: coeff_m(params), q, m123: m_coeffs(q)? })
    }

    /// Closed-form logical reliability at one time, un-clamped.
    ///
    /// `e^{M₁t}(cosh M₂t + M₃ sinh M₂t)` is evaluated as the equivalent
    /// pair `½(1+M₃)e^{(M₁+M₂)t} + ½(1−M₃)e^{(M₁−M₂)t}`; both exponents
    /// are non-positive for physical parameters, so the value stays
    /// finite at the large times the phase scan reaches (the cosh/sinh
    /// form overflows to 0·∞ there when M ≪ M₂).
    pub fn r_logical_raw(&self, t: f64) -> f64 {
        let MCoeffs { m1, m2, m3 } = self.m123;
        match m3 {
            Some(m3) => {
                0.5 * (1.0 + m3) * ((m1 + m2) * t).exp()
                    + 0.5 * (1.0 - m3) * ((m1 - m2) * t).exp()
            }
            None => {
                let (q1, _, q3, q4) = self.q;
                (m1 * t).exp() * (1.0 + 0.5 * (q1 + 6.0 * q3 - q4) * t)
            }
        }
    }
}

/// Closed-form logical reliability
/// `R_L(t) = e^{M₁t}(cosh M₂t + M₃ sinh M₂t)`; the raw value is within
/// float noise of [0, 1] for physical parameters and is reported as is.
pub fn r_logical_closed(t: f64, params: &CodeParams) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::OutOfRange(format!("t = {}", t)));
    }
    Ok(ClosedForm::for_params(params)?.r_logical_raw(t))
}

/// Logical reliability from the (a, b) rate equations integrated exactly
/// via the 2×2 matrix exponential of the constant coefficient matrix;
/// returns a(t) + 3b(t) per grid point.
pub fn r_logical_ode(t_grid: &[f64], params: &CodeParams) -> Result<Vec<f64>> {
    let mut prev = -f64::INFINITY;
    for &t in t_grid {
        if t < 0.0 || t < prev {
            return Err(Error::OutOfRange("grid must be ascending from 0".into()));
        }
        prev = t;
    }
    let (q1, q2, q3, q4) = q_coeffs(params);
    let coeff = ComplexMatrix::from_real(2, 2, &[q1, q2, q3, q4])?;
    t_grid
        .iter()
        .map(|&t| {
            let e = matexp(&coeff, t)?;
            // (a(0), b(0)) = (1, 0); R_L = a + 3b
            Ok(e[(0, 0)].re + 3.0 * e[(1, 0)].re)
        })
        .collect()
}

/// Classical 2-out-of-3 structure-function curve
/// `R_L = R_P³ + 3R_P²(1−R_P)`.
pub fn classical_curve(r_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r_p) {
        return Err(Error::OutOfRange(format!("r_p = {}, need [0, 1]", r_p)));
    }
    Ok(r_p.powi(3) + 3.0 * r_p.powi(2) * (1.0 - r_p))
}

/// Fault-tolerance verdict of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FtClass {
    /// R_L ≥ R_P for every R_P above the threshold.
    Ft { r_c: f64 },
    Nft,
}

impl FtClass {
    pub fn is_ft(&self) -> bool {
        matches!(self, FtClass::Ft { .. })
    }
}

/// Tolerance band that keeps the tangency at R_P = 1 from registering as
/// a crossing.
const FT_BAND: f64 = 1e-12;
/// Bisection target on the threshold location, in R_P.
const RC_BISECTION_TOL: f64 = 1e-6;

/// Classify a parameter point by scanning the parametric curve
/// (R_P(t), R_L(t)) on log-spaced times. The scan range extends past the
/// requested `t_max` when needed so R_P reaches ≈ 1e-3.
pub fn ft_classify(params: &CodeParams, t_max: f64, samples: usize) -> Result<FtClass> {
    if t_max <= 0.0 || samples < 16 {
        return Err(Error::OutOfRange("need t_max > 0 and ≥ 16 samples".into()));
    }
    let cf = ClosedForm::for_params(params)?;
    let m = cf.m;
    if m <= 1e-15 {
        // R_P ≡ 1: the dark point, where R_L ≡ 1 as well
        return Ok(FtClass::Ft { r_c: 0.0 });
    }
    let t_end = t_max.max(-(1e-3f64).ln() / m);
    let t_start: f64 = 1e-6;
    let log_start = t_start.ln();
    let log_step = (t_end.ln() - log_start) / (samples - 1) as f64;
    let margin = |t: f64| -> f64 { cf.r_logical_raw(t) - (-m * t).exp() };

    let mut first_violation: Option<(f64, f64)> = None; // (t_prev, t_bad)
    let mut prev_t = 0.0;
    for i in 0..samples {
        let t = (log_start + log_step * i as f64).exp();
        if margin(t) < -FT_BAND {
            first_violation = Some((prev_t, t));
            break;
        }
        prev_t = t;
    }
    match first_violation {
        None => Ok(FtClass::Ft { r_c: 0.0 }),
        Some((0.0, _)) => Ok(FtClass::Nft),
        Some((mut lo, mut hi)) => {
            // refine the largest crossing to 1e-6 in R_P
            while ((-m * lo).exp() - (-m * hi).exp()).abs() > RC_BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                if margin(mid) < -FT_BAND {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(FtClass::Ft { r_c: (-m * 0.5 * (lo + hi)).exp() })
        }
    }
}

/// One row of the phase-diagram table.
#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    pub alpha: f64,
    pub n_thermal: f64,
    pub class: FtClass,
}

/// Classify every (α, N) grid point; rows come back sorted by (α, N)
/// regardless of evaluation order.
pub fn phase_diagram(
    alpha_grid: &[f64],
    n_grid: &[f64],
    t_max: f64,
    samples: usize,
) -> Result<Vec<PhasePoint>> {
    let mut points = Vec::new();
    for &alpha in alpha_grid {
        for &n in n_grid {
            points.push(CodeParams::new(alpha, n)?);
        }
    }
    let mut rows = points
        .par_iter()
        .map(|p| {
            Ok(PhasePoint {
                alpha: p.alpha,
                n_thermal: p.n_thermal,
                class: ft_classify(p, t_max, samples)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.alpha, a.n_thermal)
            .partial_cmp(&(b.alpha, b.n_thermal))
            .unwrap()
    });
    Ok(rows)
}

/// One row of the entropy-scan table; `entropies` is `None` where no
/// failure weight accumulates (dark points).
#[derive(Debug, Clone, Copy)]
pub struct EntropyPoint {
    pub alpha: f64,
    pub n_thermal: f64,
    pub trace: f64,
    pub entropies: Option<EntropyGap>,
}

/// Lifetime-record entropies per (α, N) grid point: the apparatus matrix
/// is built from the trace recursions at `steps` checkpoints over
/// [0, t_max], normalized, and its diagonal/spectral entropies compared.
pub fn entropy_scan(
    alpha_grid: &[f64],
    n_grid: &[f64],
    t_max: f64,
    steps: usize,
) -> Result<Vec<EntropyPoint>> {
    if steps < 2 || t_max <= 0.0 {
        return Err(Error::OutOfRange("need steps ≥ 2 and t_max > 0".into()));
    }
    let mut points = Vec::new();
    for &alpha in alpha_grid {
        for &n in n_grid {
            points.push(CodeParams::new(alpha, n)?);
        }
    }
    let dt = t_max / steps as f64;
    let mut rows = points
        .par_iter()
        .map(|p| {
            let model = independent_sum(&thermal_qubit(p.n_thermal)?, 3)?;
            let step = StepMethod::Exact.build(&model, dt)?;
            let survival = flip_code_projector(p.alpha)?;
            let psi = flip_code_state(p.alpha)?;
            let matrix = apparatus_matrix_discrete(&step, &survival, &psi, steps, dt)?;
            let trace = matrix.trace();
            let entropies = if trace > 1e-12 { Some(entropy_gap(&matrix)?) } else { None };
            Ok(EntropyPoint { alpha: p.alpha, n_thermal: p.n_thermal, trace, entropies })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.alpha, a.n_thermal)
            .partial_cmp(&(b.alpha, b.n_thermal))
            .unwrap()
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn params(alpha: f64, n: f64) -> CodeParams {
        CodeParams::new(alpha, n).unwrap()
    }

    #[test]
    fn coeff_m_reference_points() {
        assert!((coeff_m(&params(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(coeff_m(&params(0.0, 0.0)).abs() < 1e-15);
        assert!((coeff_m(&params(SQRT_HALF, 0.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn q_coeffs_reference_points() {
        let q = q_coeffs(&params(1.0, 0.0));
        assert_eq!(q, (-3.0, 0.0, 1.0, -2.0));

        let q = q_coeffs(&params(SQRT_HALF, 0.0));
        assert!((q.0 - (-1.5)).abs() < 1e-12);
        assert!((q.1 - 0.75).abs() < 1e-12);
        assert!((q.2 - 0.25).abs() < 1e-12);
        assert!((q.3 - (-1.0)).abs() < 1e-12);

        // ⟨σ₋σ₊⟩ = 1 drives q₂ (and the b-manifold decay q₄ = −1); the
        // (a, b) pair still keeps a + 3b ≡ 1
        let q = q_coeffs(&params(0.0, 0.0));
        assert!((q.0 - 0.0).abs() < 1e-15);
        assert!((q.1 - 3.0).abs() < 1e-15);
        assert!((q.2 - 0.0).abs() < 1e-15);
        assert!((q.3 - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn m_coeffs_reference_points() {
        let m = m_coeffs((-3.0, 0.0, 1.0, -2.0)).unwrap();
        assert!((m.m1 - (-2.5)).abs() < 1e-15);
        assert!((m.m2 - 0.5).abs() < 1e-15);
        assert!((m.m3.unwrap() - 5.0).abs() < 1e-15);

        let m = m_coeffs((-1.5, 0.75, 0.25, -1.0)).unwrap();
        assert!((m.m1 - (-1.25)).abs() < 1e-15);
        assert!((m.m2 - 0.5).abs() < 1e-15);
        assert!((m.m3.unwrap() - 1.0).abs() < 1e-15);

        // degenerate M₂ = 0 input takes the limit form
        let m = m_coeffs((0.0, 3.0, 0.0, 0.0)).unwrap();
        assert_eq!(m.m2, 0.0);
        assert!(m.m3.is_none());
        let cf = ClosedForm { m: 0.0, q: (0.0, 3.0, 0.0, 0.0), m123: m };
        for &t in &[0.0, 1.0, 5.0] {
            assert!((cf.r_logical_raw(t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn r_physical_reference_points() {
        let p = params(1.0, 0.0);
        assert!((r_physical(0.0, &p) - 1.0).abs() < 1e-15);
        assert!((r_physical(1.0, &p) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_reference_curves() {
        // α = 1: R_L = 3e^{−2t} − 2e^{−3t}
        let p = params(1.0, 0.0);
        for &t in &[0.0f64, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let want = 3.0 * (-2.0 * t).exp() - 2.0 * (-3.0 * t).exp();
            assert!((r_logical_closed(t, &p).unwrap() - want).abs() < 1e-13, "t={}", t);
        }
        // α = 1/√2: R_L = e^{−0.75t} = R_P³
        let p = params(SQRT_HALF, 0.0);
        for &t in &[0.0f64, 1.0, 2.0, 4.0] {
            let want = (-0.75 * t).exp();
            assert!((r_logical_closed(t, &p).unwrap() - want).abs() < 1e-13);
            let rp = r_physical(t, &p);
            assert!((want - rp.powi(3)).abs() < 1e-13);
        }
        // α = 0: dark state, R_L ≡ 1
        let p = params(0.0, 0.0);
        for &t in &[0.0, 1.0, 7.0] {
            assert!((r_logical_closed(t, &p).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn classical_identity_at_alpha_one() {
        let p = params(1.0, 0.0);
        for i in 0..=1000 {
            let t = 10.0 * i as f64 / 1000.0;
            let closed = r_logical_closed(t, &p).unwrap();
            let classical = classical_curve(r_physical(t, &p)).unwrap();
            assert!((closed - classical).abs() <= 1e-12, "t = {}", t);
        }
    }

    #[test]
    fn ode_route_matches_closed_form() {
        let grid: Vec<f64> = (0..=100).map(|i| 5.0 * i as f64 / 100.0).collect();
        for &alpha in &[0.0, 0.5, SQRT_HALF, 0.9, 1.0] {
            for &n in &[0.0, 0.25, 0.5] {
                let p = params(alpha, n);
                let ode = r_logical_ode(&grid, &p).unwrap();
                for (i, &t) in grid.iter().enumerate() {
                    let closed = r_logical_closed(t, &p).unwrap();
                    assert!(
                        (ode[i] - closed).abs() <= 1e-12,
                        "alpha={} N={} t={}: {} vs {}",
                        alpha,
                        n,
                        t,
                        ode[i],
                        closed
                    );
                }
            }
        }
    }

    #[test]
    fn ode_initial_condition() {
        let p = params(0.7, 0.2);
        let v = r_logical_ode(&[0.0], &p).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_is_finite_at_scan_horizon_times() {
        // small-M points push the phase scan out to t ~ 1/M; the closed
        // form must stay finite there rather than hitting 0·inf
        for &(alpha, n) in &[(0.2, 0.0), (0.1, 0.0), (0.05, 0.0)] {
            let p = params(alpha, n);
            for &t in &[1e3, 1e4, 1e5] {
                let r = r_logical_closed(t, &p).unwrap();
                assert!(r.is_finite(), "alpha={} t={}: {}", alpha, t, r);
                assert!((-1e-12..=1.0 + 1e-12).contains(&r));
            }
        }
    }

    #[test]
    fn closed_form_stays_in_unit_interval_and_monotone() {
        for &alpha in &[0.0, 0.2, 0.5, SQRT_HALF, 0.9, 1.0] {
            for &n in &[0.0, 0.25, 0.5] {
                let p = params(alpha, n);
                let mut prev = f64::INFINITY;
                for i in 0..=200 {
                    let t = 10.0 * i as f64 / 200.0;
                    let r = r_logical_closed(t, &p).unwrap();
                    assert!((-1e-12..=1.0 + 1e-12).contains(&r), "r={} at {}", r, t);
                    assert!(r <= prev + 1e-12);
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn classical_curve_reference_points() {
        assert!((classical_curve(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((classical_curve(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((classical_curve(0.9).unwrap() - 0.972).abs() < 1e-15);
        assert!(classical_curve(1.3).is_err());
    }

    #[test]
    fn ft_classification_reference_points() {
        match ft_classify(&params(1.0, 0.0), 20.0, 2000).unwrap() {
            FtClass::Ft { r_c } => assert!((r_c - 0.5).abs() < 1e-6, "r_c = {}", r_c),
            FtClass::Nft => panic!("alpha = 1 must be fault tolerant"),
        }
        assert!(!ft_classify(&params(0.2, 0.0), 20.0, 2000).unwrap().is_ft());
        assert!(ft_classify(&params(0.9, 0.0), 20.0, 2000).unwrap().is_ft());
        // dark point: trivially fault tolerant
        assert!(ft_classify(&params(0.0, 0.0), 20.0, 2000).unwrap().is_ft());
    }

    #[test]
    fn phase_diagram_has_single_boundary_at_zero_temperature() {
        let alphas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let rows = phase_diagram(&alphas, &[0.0], 20.0, 2000).unwrap();
        // skip the trivial dark point at alpha = 0
        let classes: Vec<bool> = rows[1..].iter().map(|r| r.class.is_ft()).collect();
        let transitions = classes.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(transitions, 1, "classes: {:?}", classes);
        assert!(!classes[0], "small alpha must be NFT");
        assert!(*classes.last().unwrap(), "alpha = 1 must be FT");
    }

    #[test]
    fn entropy_scan_grid_properties() {
        let alphas = [0.3, 0.6, 1.0];
        let ns = [0.0, 0.5];
        let rows = entropy_scan(&alphas, &ns, 4.0, 80).unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            let g = row.entropies.expect("non-dark points have entropies");
            assert!(g.gap >= -1e-12, "alpha={} N={}", row.alpha, row.n_thermal);
        }
        // dark point reports no entropies
        let dark = entropy_scan(&[0.0], &[0.0], 2.0, 40).unwrap();
        assert!(dark[0].entropies.is_none());
        assert!(dark[0].trace.abs() < 1e-12);
    }
}
