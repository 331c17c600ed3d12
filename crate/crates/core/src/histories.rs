//! Trajectories, chain kets, trajectory weights, consistency checking,
//! and iterated-projection survival weights under the Markov
//! approximation.
//!
//! A trajectory appends a time-ordered list of survival/failure events to
//! an initial ket. Its chain ket alternates interval evolution with
//! projection; the squared norm is the trajectory weight. Weights are
//! interpretable as probabilities only when the family's consistency
//! condition holds (all real cross-overlaps vanish), which measurement
//! dilation enforces.

use crate::dynamics::{LindbladModel, StepMethod, Superoperator};
use crate::error::{Error, Result};
use crate::events::Projector;
use crate::numkernel::ComplexMatrix;

/// Default tolerance on the consistency condition.
pub const CONSISTENCY_TOL: f64 = 1e-10;

const UNITARITY_TOL: f64 = 1e-10;

/// Initial state plus a time-ordered list of checkpoint projectors.
#[derive(Debug, Clone)]
pub struct Trajectory {
    initial: ComplexMatrix,
    checkpoints: Vec<(f64, Projector)>,
}

impl Trajectory {
    pub fn new(initial: ComplexMatrix, checkpoints: Vec<(f64, Projector)>) -> Result<Self> {
        if initial.cols() != 1 {
            return Err(Error::DimMismatch("initial state must be a ket".into()));
        }
        if (initial.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::OutOfRange("initial ket is not normalized".into()));
        }
        let mut prev: Option<f64> = None;
        for (t, p) in &checkpoints {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::OutOfRange(format!("checkpoint time {}", t)));
            }
            if let Some(p) = prev {
                if *t <= p {
                    return Err(Error::OutOfRange(format!(
                        "checkpoint times must be strictly increasing (saw {} after {})",
                        t, p
                    )));
                }
            }
            prev = Some(*t);
            if p.dim() != initial.rows() {
                return Err(Error::DimMismatch(format!(
                    "projector dim {} vs state dim {}",
                    p.dim(),
                    initial.rows()
                )));
            }
        }
        Ok(Self { initial, checkpoints })
    }

    pub fn initial(&self) -> &ComplexMatrix {
        &self.initial
    }

    pub fn checkpoints(&self) -> &[(f64, Projector)] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.rows(), cols: u.cols() });
    }
    let dev = u
        .adjoint()
        .mul(u)
        .sub(&ComplexMatrix::identity(u.rows()))
        .frobenius_norm();
    if dev > UNITARITY_TOL {
        return Err(Error::NotUnitary { dev, tol: UNITARITY_TOL });
    }
    Ok(())
}

/// Chain ket `E_f U_f ⋯ E₁ U₁ |ψ⟩`: evolve, project, repeat; the result
/// is un-normalized.
pub fn chain_ket(traj: &Trajectory, unitaries: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if unitaries.len() != traj.len() {
        return Err(Error::DimMismatch(format!(
            "{} unitaries for {} checkpoints",
            unitaries.len(),
            traj.len()
        )));
    }
    let mut ket = traj.initial().clone();
    for ((_, proj), u) in traj.checkpoints().iter().zip(unitaries) {
        check_unitary(u)?;
        if u.rows() != ket.rows() {
            return Err(Error::DimMismatch("unitary dim vs state dim".into()));
        }
        ket = proj.apply(&u.mul(&ket));
    }
    Ok(ket)
}

/// Trajectory weight `W[𝒴;U] = ⟨Φ_𝒴|Φ_𝒴⟩`.
pub fn weight(traj: &Trajectory, unitaries: &[ComplexMatrix]) -> Result<f64> {
    Ok(chain_ket(traj, unitaries)?.norm_sqr())
}

/// A family of trajectories over shared checkpoint times, each outcome
/// pattern choosing the event or its complement at every time it covers.
///
/// Construction guarantees the family invariant: at any shared time every
/// member projects with `E(t)` or `E(t)^⊥` of the common event.
#[derive(Debug, Clone)]
pub struct TrajectoryFamily {
    initial: ComplexMatrix,
    times: Vec<f64>,
    events: Vec<Projector>,
    /// One pattern per trajectory: `true` = survival, `false` = failure;
    /// a pattern may stop early (trajectory defined up to that time).
    patterns: Vec<Vec<bool>>,
    labels: Vec<String>,
}

impl TrajectoryFamily {
    pub fn new(
        initial: ComplexMatrix,
        times: Vec<f64>,
        events: Vec<Projector>,
        patterns: Vec<Vec<bool>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if events.len() != times.len() {
            return Err(Error::DimMismatch("one event per checkpoint time".into()));
        }
        if labels.len() != patterns.len() {
            return Err(Error::DimMismatch("one label per trajectory".into()));
        }
        for p in &patterns {
            if p.is_empty() || p.len() > times.len() {
                return Err(Error::OutOfRange("pattern length out of range".into()));
            }
        }
        // validate through Trajectory construction
        let fam = Self { initial, times, events, patterns, labels };
        for i in 0..fam.patterns.len() {
            fam.trajectory(i)?;
        }
        Ok(fam)
    }

    /// The standard survival/failure family: failure-first-at-`t_k`
    /// trajectories `F1..Ff` plus the full survival trajectory `Rf`.
    pub fn survival_failure(
        initial: ComplexMatrix,
        times: Vec<f64>,
        event: &Projector,
    ) -> Result<Self> {
        let f = times.len();
        if f == 0 {
            return Err(Error::OutOfRange("need at least one checkpoint".into()));
        }
        let mut patterns = Vec::with_capacity(f + 1);
        let mut labels = Vec::with_capacity(f + 1);
        for k in 1..=f {
            let mut p = vec![true; k];
            p[k - 1] = false;
            patterns.push(p);
            labels.push(format!("F{}", k));
        }
        patterns.push(vec![true; f]);
        labels.push(format!("R{}", f));
        Self::new(initial, times, vec![event.clone(); f], patterns, labels)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn initial(&self) -> &ComplexMatrix {
        &self.initial
    }

    pub fn events(&self) -> &[Projector] {
        &self.events
    }

    pub fn patterns(&self) -> &[Vec<bool>] {
        &self.patterns
    }

    /// Materialize member `i` as a standalone trajectory.
    pub fn trajectory(&self, i: usize) -> Result<Trajectory> {
        let pattern = &self.patterns[i];
        let checkpoints = pattern
            .iter()
            .enumerate()
            .map(|(k, &survive)| {
                let p = if survive { self.events[k].clone() } else { self.events[k].complement() };
                (self.times[k], p)
            })
            .collect();
        Trajectory::new(self.initial.clone(), checkpoints)
    }
}

/// Result of a consistency check: the matrix of real chain-ket overlaps
/// (diagonal = trajectory weights) and the verdict.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub overlaps: Vec<Vec<f64>>,
    pub consistent: bool,
    pub max_off_diagonal: f64,
    pub tolerance: f64,
}

/// Real overlap matrix of the family's chain kets, each extended by
/// unitary evolution alone (no further projections) to the family's final
/// time so inner products between different-length members are defined.
pub fn consistency_matrix(
    family: &TrajectoryFamily,
    unitaries: &[ComplexMatrix],
    tolerance: Option<f64>,
) -> Result<ConsistencyReport> {
    let tol = tolerance.unwrap_or(CONSISTENCY_TOL);
    let f = family.times().len();
    if unitaries.len() != f {
        return Err(Error::DimMismatch(format!(
            "{} unitaries for {} checkpoint times",
            unitaries.len(),
            f
        )));
    }
    let mut kets = Vec::with_capacity(family.len());
    for i in 0..family.len() {
        let traj = family.trajectory(i)?;
        let kept = traj.len();
        let mut ket = chain_ket(&traj, &unitaries[..kept])?;
        for u in &unitaries[kept..] {
            check_unitary(u)?;
            ket = u.mul(&ket);
        }
        kets.push(ket);
    }
    let n = kets.len();
    let mut overlaps = vec![vec![0.0; n]; n];
    let mut max_off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let re = kets[i].inner(&kets[j]).re;
            overlaps[i][j] = re;
            if i != j {
                max_off = max_off.max(re.abs());
            }
        }
    }
    Ok(ConsistencyReport { overlaps, consistent: max_off <= tol, max_off_diagonal: max_off, tolerance: tol })
}

/// Survival weight after `n` rounds of evolve-then-project:
/// `Tr[(P_E ∘ Λ)ⁿ |ψ⟩⟨ψ|]` with `P_E(ρ) = EρE`.
pub fn survival_weight_markov(
    step: &Superoperator,
    survival: &Projector,
    initial: &ComplexMatrix,
    n: usize,
) -> Result<f64> {
    if survival.dim() != step.dim() || initial.rows() != step.dim() || initial.cols() != 1 {
        return Err(Error::DimMismatch("step/projector/state dims".into()));
    }
    let project = Superoperator::sandwich(survival.matrix());
    let round = project.compose(step);
    let mut v = initial.outer(initial).vec_columns();
    for _ in 0..n {
        v = round.apply_vec(&v);
    }
    let d = step.dim();
    let tr: num_complex::Complex64 = (0..d).map(|i| v[i * d + i]).sum();
    Ok(tr.re)
}

/// Reliability curve data: survival weights on a uniform grid, with a
/// step-halved companion run for convergence metadata.
#[derive(Debug, Clone)]
pub struct ReliabilityCurve {
    pub times: Vec<f64>,
    /// Survival weight at the nominal step.
    pub values: Vec<f64>,
    /// Pointwise |R(dt) − R(dt/2)| from the halved companion run.
    pub err_est: Vec<f64>,
    /// Survival weight from the halved run, sampled on the same grid.
    pub values_halved: Vec<f64>,
    pub dt: f64,
    pub method: StepMethod,
    /// Optional provenance for CSV metadata.
    pub alpha: Option<f64>,
    pub n_thermal: Option<f64>,
}

impl ReliabilityCurve {
    /// Richardson estimate of the δt → 0 limit, `2·R(dt/2) − R(dt)`,
    /// valid because the projection splitting converges at first order.
    pub fn limit_estimate(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.values_halved)
            .map(|(a, b)| 2.0 * b - a)
            .collect()
    }

    pub fn max_err_est(&self) -> f64 {
        self.err_est.iter().cloned().fold(0.0, f64::max)
    }
}

fn iterate_curve(
    step: &Superoperator,
    survival: &Projector,
    initial: &ComplexMatrix,
    n: usize,
    stride: usize,
) -> Vec<f64> {
    let project = Superoperator::sandwich(survival.matrix());
    let round = project.compose(step);
    let d = step.dim();
    let mut v = initial.outer(initial).vec_columns();
    let trace = |v: &[num_complex::Complex64]| -> f64 {
        (0..d).map(|i| v[i * d + i].re).sum()
    };
    let mut out = Vec::with_capacity(n / stride + 1);
    out.push(trace(&v));
    for k in 1..=n {
        v = round.apply_vec(&v);
        if k % stride == 0 {
            out.push(trace(&v));
        }
    }
    out
}

/// Sample the iterated-projection survival weight on `t = 0, dt, …,
/// t_max`, with one dt-halved companion run for the error estimate.
pub fn reliability_curve(
    model: &LindbladModel,
    survival: &Projector,
    initial: &ComplexMatrix,
    t_max: f64,
    dt: f64,
    method: StepMethod,
) -> Result<ReliabilityCurve> {
    if t_max <= 0.0 || dt <= 0.0 || !t_max.is_finite() || !dt.is_finite() {
        return Err(Error::OutOfRange(format!("t_max = {}, dt = {}", t_max, dt)));
    }
    let n = (t_max / dt).round() as usize;
    if n == 0 {
        return Err(Error::OutOfRange("grid has no steps".into()));
    }
    if survival.dim() != model.dim() || initial.rows() != model.dim() {
        return Err(Error::DimMismatch("model/projector/state dims".into()));
    }
    let step = method.build(model, dt)?;
    let step_half = method.build(model, dt / 2.0)?;
    let values = iterate_curve(&step, survival, initial, n, 1);
    let values_halved = iterate_curve(&step_half, survival, initial, 2 * n, 2);
    let times = (0..=n).map(|k| k as f64 * dt).collect();
    let err_est = values
        .iter()
        .zip(&values_halved)
        .map(|(a, b): (&f64, &f64)| (a - b).abs())
        .collect();
    Ok(ReliabilityCurve {
        times,
        values,
        err_est,
        values_halved,
        dt,
        method,
        alpha: None,
        n_thermal: None,
    })
}

/// Per-step failure weights `w_k = R(k−1) − R(k)` for `k = 1..=n` under
/// the iterated-projection map; together with `R(n)` they sum to one.
pub fn failure_weights(
    model: &LindbladModel,
    survival: &Projector,
    initial: &ComplexMatrix,
    t_max: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let curve = reliability_curve(model, survival, initial, t_max, dt, StepMethod::Exact)?;
    Ok(curve.values.windows(2).map(|w| w[0] - w[1]).collect())
}

/// Failure weights by explicit complement insertion,
/// `w_k = Tr[E^⊥ Λ((P_E ∘ Λ)^{k−1} ρ₀) E^⊥]`; agrees with the reliability
/// decrements because the per-interval map is trace preserving.
pub fn failure_weights_projected(
    model: &LindbladModel,
    survival: &Projector,
    initial: &ComplexMatrix,
    t_max: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if t_max <= 0.0 || dt <= 0.0 {
        return Err(Error::OutOfRange(format!("t_max = {}, dt = {}", t_max, dt)));
    }
    let n = (t_max / dt).round() as usize;
    let step = StepMethod::Exact.build(model, dt)?;
    let project = Superoperator::sandwich(survival.matrix());
    let project_fail = Superoperator::sandwich(survival.complement().matrix());
    let d = model.dim();
    let trace = |v: &[num_complex::Complex64]| -> f64 {
        (0..d).map(|i| v[i * d + i].re).sum()
    };
    let mut v = initial.outer(initial).vec_columns();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let evolved = step.apply_vec(&v);
        out.push(trace(&project_fail.apply_vec(&evolved)));
        v = project.apply_vec(&evolved);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::thermal_qubit;
    use crate::events::flip_code_projector;
    use crate::events::flip_code_state;
    use crate::numkernel::{gates, matexp, ComplexMatrix};
    use num_complex::Complex64;

    fn ket0() -> ComplexMatrix {
        ComplexMatrix::basis_ket(2, 0)
    }

    fn proj0() -> Projector {
        Projector::onto_ket(&ket0()).unwrap()
    }

    #[test]
    fn chain_ket_identity_step() {
        let psi = ket0();
        let traj =
            Trajectory::new(psi.clone(), vec![(1.0, Projector::onto_ket(&psi).unwrap())]).unwrap();
        let ket = chain_ket(&traj, &[ComplexMatrix::identity(2)]).unwrap();
        assert!(ket.sub(&psi).frobenius_norm() < 1e-15);
    }

    #[test]
    fn chain_ket_orthogonal_projection_annihilates() {
        let traj = Trajectory::new(ket0(), vec![(1.0, proj0())]).unwrap();
        let ket = chain_ket(&traj, &[gates::sigma_x()]).unwrap();
        assert!(ket.frobenius_norm() < 1e-15);
    }

    #[test]
    fn chain_ket_hadamard_half_weight() {
        let traj = Trajectory::new(ket0(), vec![(1.0, proj0())]).unwrap();
        let ket = chain_ket(&traj, &[gates::hadamard()]).unwrap();
        let want = ket0().scale_re(std::f64::consts::FRAC_1_SQRT_2);
        assert!(ket.sub(&want).frobenius_norm() < 1e-15);
        assert!((weight(&traj, &[gates::hadamard()]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chain_ket_rejects_non_unitary() {
        let traj = Trajectory::new(ket0(), vec![(1.0, proj0())]).unwrap();
        let bad = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(chain_ket(&traj, &[bad]), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn repeated_hadamard_weight_quarters() {
        let traj =
            Trajectory::new(ket0(), vec![(1.0, proj0()), (2.0, proj0())]).unwrap();
        let w = weight(&traj, &[gates::hadamard(), gates::hadamard()]).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
    }

    #[test]
    fn survival_weight_is_monotone_under_random_unitaries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _trial in 0..100 {
            // random unitary per step via exp(iH)
            let mut us = Vec::new();
            for _ in 0..4 {
                let mut h = ComplexMatrix::zeros(2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        h[(i, j)] = Complex64::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        );
                    }
                }
                let h = h.add(&h.adjoint()).scale_re(0.5);
                let ih = h.scale(Complex64::new(0.0, 1.0));
                us.push(matexp(&ih, 1.0).unwrap());
            }
            let mut prev = 1.0;
            for k in 1..=4usize {
                let traj = Trajectory::new(
                    ket0(),
                    (1..=k).map(|i| (i as f64, proj0())).collect(),
                )
                .unwrap();
                let w = weight(&traj, &us[..k]).unwrap();
                assert!(w <= prev + 1e-12);
                assert!((0.0..=1.0 + 1e-12).contains(&w));
                prev = w;
            }
        }
    }

    #[test]
    fn tracking_projector_keeps_weight_one() {
        // unitary-only dynamics with E = |ψ(t)⟩⟨ψ(t)| tracking the state
        let u = gates::hadamard();
        let psi0 = ket0();
        let psi1 = u.mul(&psi0);
        let psi2 = u.mul(&psi1);
        let traj = Trajectory::new(
            psi0,
            vec![
                (1.0, Projector::onto_ket(&psi1).unwrap()),
                (2.0, Projector::onto_ket(&psi2).unwrap()),
            ],
        )
        .unwrap();
        let w = weight(&traj, &[u.clone(), u]).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_family_is_inconsistent() {
        let times = vec![1.0, 2.0];
        let family = TrajectoryFamily::survival_failure(ket0(), times, &proj0()).unwrap();
        assert_eq!(family.labels(), &["F1", "F2", "R2"]);
        let us = vec![gates::hadamard(), gates::hadamard()];
        let report = consistency_matrix(&family, &us, None).unwrap();
        assert!(!report.consistent);
        // Re⟨Φ_F1|Φ_F2⟩ = −1/4
        assert!((report.overlaps[0][1] - (-0.25)).abs() < 1e-12);
        assert!((report.overlaps[1][0] - (-0.25)).abs() < 1e-12);
        // diagonal equals the trajectory weights 1/2, 1/4, 1/4
        assert!((report.overlaps[0][0] - 0.5).abs() < 1e-12);
        assert!((report.overlaps[1][1] - 0.25).abs() < 1e-12);
        assert!((report.overlaps[2][2] - 0.25).abs() < 1e-12);
        // symmetric
        for i in 0..3 {
            for j in 0..3 {
                assert!((report.overlaps[i][j] - report.overlaps[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_step_orthogonal_family_is_consistent() {
        let family =
            TrajectoryFamily::survival_failure(ket0(), vec![1.0], &proj0()).unwrap();
        let report = consistency_matrix(&family, &[gates::hadamard()], None).unwrap();
        assert!(report.consistent);
        assert!(report.max_off_diagonal <= 1e-12);
    }

    #[test]
    fn markov_weight_base_cases() {
        let model = thermal_qubit(0.0).unwrap();
        let step = StepMethod::Exact.build(&model, 0.01).unwrap();
        let psi = ComplexMatrix::basis_ket(2, 1);
        let e = Projector::onto_ket(&psi).unwrap();
        assert!((survival_weight_markov(&step, &e, &psi, 0).unwrap() - 1.0).abs() < 1e-15);

        // dark state: |0⟩ is invariant at zero temperature
        let psi0 = ket0();
        let e0 = Projector::onto_ket(&psi0).unwrap();
        for n in [1usize, 10, 100] {
            let w = survival_weight_markov(&step, &e0, &psi0, n).unwrap();
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn markov_weight_matches_exponential_decay() {
        // excited qubit at zero temperature: R(t) = e^{−t} (M = 1); the
        // rank-one projection makes the iterate exact at any dt
        let model = thermal_qubit(0.0).unwrap();
        let dt = 1e-3;
        let step = StepMethod::Exact.build(&model, dt).unwrap();
        let psi = ComplexMatrix::basis_ket(2, 1);
        let e = Projector::onto_ket(&psi).unwrap();
        for &t in &[0.5, 1.0, 3.0] {
            let n = (t / dt).round() as usize;
            let w = survival_weight_markov(&step, &e, &psi, n).unwrap();
            assert!((w - (-t).exp()).abs() < 1e-12, "t = {}", t);
        }
    }

    #[test]
    fn flip_code_curve_matches_closed_form_at_alpha_one() {
        let model =
            crate::dynamics::independent_sum(&thermal_qubit(0.0).unwrap(), 3).unwrap();
        let e = flip_code_projector(1.0).unwrap();
        let psi = flip_code_state(1.0).unwrap();
        let curve =
            reliability_curve(&model, &e, &psi, 5.0, 1e-3, StepMethod::Exact).unwrap();
        let mut worst: f64 = 0.0;
        for (t, r) in curve.times.iter().zip(&curve.values) {
            let closed = 3.0 * (-2.0 * t).exp() - 2.0 * (-3.0 * t).exp();
            worst = worst.max((r - closed).abs());
        }
        assert!(worst <= 1e-6, "worst deviation {}", worst);
        assert!((curve.values[0] - 1.0).abs() < 1e-15);
        for w in curve.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn dark_logical_state_never_fails() {
        let model =
            crate::dynamics::independent_sum(&thermal_qubit(0.0).unwrap(), 3).unwrap();
        let e = flip_code_projector(0.0).unwrap();
        let psi = flip_code_state(0.0).unwrap();
        let curve =
            reliability_curve(&model, &e, &psi, 2.0, 1e-2, StepMethod::Exact).unwrap();
        for r in &curve.values {
            assert!((r - 1.0).abs() < 1e-12);
        }
        let weights = failure_weights(&model, &e, &psi, 2.0, 1e-2).unwrap();
        for w in weights {
            assert!(w.abs() < 1e-12);
        }
    }

    #[test]
    fn failure_weights_exponential_and_sum_rule() {
        let model = thermal_qubit(0.0).unwrap();
        let psi = ComplexMatrix::basis_ket(2, 1);
        let e = Projector::onto_ket(&psi).unwrap();
        let dt = 1e-2;
        let weights = failure_weights(&model, &e, &psi, 3.0, dt).unwrap();
        let n = weights.len();
        for (k, w) in weights.iter().enumerate() {
            let t_prev = k as f64 * dt;
            let want = (-t_prev).exp() * (1.0 - (-dt).exp());
            assert!((w - want).abs() < 1e-12);
        }
        let step = StepMethod::Exact.build(&model, dt).unwrap();
        let tail = survival_weight_markov(&step, &e, &psi, n).unwrap();
        let total: f64 = weights.iter().sum::<f64>() + tail;
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn failure_weight_paths_agree() {
        let model =
            crate::dynamics::independent_sum(&thermal_qubit(0.25).unwrap(), 3).unwrap();
        let e = flip_code_projector(0.6).unwrap();
        let psi = flip_code_state(0.6).unwrap();
        let a = failure_weights(&model, &e, &psi, 1.0, 0.01).unwrap();
        let b = failure_weights_projected(&model, &e, &psi, 1.0, 0.01).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        // sum rule on the flip-code run
        let step = StepMethod::Exact.build(&model, 0.01).unwrap();
        let tail = survival_weight_markov(&step, &e, &psi, a.len()).unwrap();
        assert!((a.iter().sum::<f64>() + tail - 1.0).abs() < 1e-10);
    }

    #[test]
    fn halving_the_step_halves_the_error() {
        // order-1 convergence of the projection splitting: the halving
        // residual |R(dt) − R(dt/2)| itself halves with dt, and the
        // Richardson estimates stabilize at O(dt²)
        let model =
            crate::dynamics::independent_sum(&thermal_qubit(0.0).unwrap(), 3).unwrap();
        let e = flip_code_projector(0.2).unwrap();
        let psi = flip_code_state(0.2).unwrap();
        let dt = 1e-4;
        let curve =
            reliability_curve(&model, &e, &psi, 1.0, dt, StepMethod::Exact).unwrap();
        let fine =
            reliability_curve(&model, &e, &psi, 1.0, dt / 2.0, StepMethod::Exact).unwrap();
        let ratio = curve.max_err_est() / fine.max_err_est();
        assert!((1.7..=2.3).contains(&ratio), "residual ratio {}", ratio);

        let coarse_limit = curve.limit_estimate();
        let fine_limit = fine.limit_estimate();
        let mut worst: f64 = 0.0;
        for (i, t) in curve.times.iter().enumerate() {
            let j = ((t / (dt / 2.0)).round()) as usize;
            worst = worst.max((coarse_limit[i] - fine_limit[j]).abs());
        }
        assert!(worst < 1e-8, "Richardson instability {}", worst);
    }

    #[test]
    fn euler_and_exact_methods_converge_together() {
        // both per-interval maps carry their own O(dt) coefficient, so
        // compare their Richardson limits, which agree at O(dt²)
        let model = thermal_qubit(0.25).unwrap();
        let psi = ComplexMatrix::basis_ket(2, 1);
        let e = Projector::onto_ket(&psi).unwrap();
        let ex = reliability_curve(&model, &e, &psi, 1.0, 1e-3, StepMethod::Exact).unwrap();
        let eu = reliability_curve(&model, &e, &psi, 1.0, 1e-3, StepMethod::Euler).unwrap();
        let worst = ex
            .limit_estimate()
            .iter()
            .zip(&eu.limit_estimate())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 2e-6, "limit disagreement {}", worst);
    }
}
