//! Lindblad generators and per-interval maps for the thermal qubit and
//! for registers of independently dissipating qubits.
//!
//! Time is measured in units of 1/γ₀ throughout; the spontaneous emission
//! coefficient only ever rescales the time axis on output.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkernel::{gates, kron, kron_all, matexp, ComplexMatrix};

/// Dissipative model: jump operators with rates (in units of γ₀) and an
/// optional Hamiltonian.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    dim: usize,
    jump_ops: Vec<(ComplexMatrix, f64)>,
    hamiltonian: Option<ComplexMatrix>,
}

impl LindbladModel {
    pub fn new(
        dim: usize,
        jump_ops: Vec<(ComplexMatrix, f64)>,
        hamiltonian: Option<ComplexMatrix>,
    ) -> Result<Self> {
        for (op, rate) in &jump_ops {
            if op.rows() != dim || op.cols() != dim {
                return Err(Error::DimMismatch(format!(
                    "jump op is {}x{}, model dim {}",
                    op.rows(),
                    op.cols(),
                    dim
                )));
            }
            if *rate < 0.0 || !rate.is_finite() {
                return Err(Error::OutOfRange(format!("jump rate {}", rate)));
            }
        }
        if let Some(h) = &hamiltonian {
            if h.rows() != dim || h.cols() != dim {
                return Err(Error::DimMismatch("hamiltonian dim".into()));
            }
        }
        Ok(Self { dim, jump_ops, hamiltonian })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump_ops(&self) -> &[(ComplexMatrix, f64)] {
        &self.jump_ops
    }

    pub fn hamiltonian(&self) -> Option<&ComplexMatrix> {
        self.hamiltonian.as_ref()
    }
}

/// Matrix form of a superoperator in the column-stacking convention,
/// acting on vec(ρ) of a dim-dimensional system.
#[derive(Debug, Clone)]
pub struct Superoperator {
    matrix: ComplexMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn new(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        if matrix.rows() != dim * dim || matrix.cols() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "superoperator matrix {}x{} for dim {}",
                matrix.rows(),
                matrix.cols(),
                dim
            )));
        }
        Ok(Self { matrix, dim })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply to a density operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = self.apply_vec(&rho.vec_columns());
        ComplexMatrix::from_vec_columns(&v, self.dim)
    }

    /// Apply to an already-vectorised operator.
    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.matrix.rows();
        assert_eq!(v.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let data = self.matrix.data();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &data[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        }
        out
    }

    /// Compose with another superoperator: `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, other.dim);
        Superoperator { matrix: self.matrix.mul(&other.matrix), dim: self.dim }
    }

    /// Sandwich map ρ ↦ A ρ A†.
    pub fn sandwich(a: &ComplexMatrix) -> Superoperator {
        Superoperator { matrix: kron(&a.conj(), a), dim: a.rows() }
    }

    /// Right multiplication ρ ↦ ρ A.
    pub fn right_mul(a: &ComplexMatrix) -> Superoperator {
        let id = ComplexMatrix::identity(a.rows());
        Superoperator { matrix: kron(&a.transpose(), &id), dim: a.rows() }
    }
}

/// Two-level atom in a thermal environment: σ₋ at rate (1−N) and σ₊ at
/// rate N, with 0 ≤ N ≤ 0.5 set by the temperature.
pub fn thermal_qubit(n_thermal: f64) -> Result<LindbladModel> {
    if !(0.0..=0.5).contains(&n_thermal) {
        return Err(Error::OutOfRange(format!(
            "thermal occupation N = {}, need [0, 0.5]",
            n_thermal
        )));
    }
    LindbladModel::new(
        2,
        vec![(gates::sigma_minus(), 1.0 - n_thermal), (gates::sigma_plus(), n_thermal)],
        None,
    )
}

/// Replicate a model over `copies` non-interacting sites; each jump
/// operator is embedded per site with its original rate.
pub fn independent_sum(model: &LindbladModel, copies: usize) -> Result<LindbladModel> {
    if copies == 0 {
        return Err(Error::OutOfRange("copies must be ≥ 1".into()));
    }
    let total = model.dim().checked_pow(copies as u32).filter(|&d| d <= 64);
    let total = match total {
        Some(d) => d,
        None => {
            return Err(Error::OutOfRange(format!(
                "dim {}^{} exceeds the 64-dimensional budget",
                model.dim(),
                copies
            )))
        }
    };
    if copies == 1 {
        return Ok(model.clone());
    }
    let id = ComplexMatrix::identity(model.dim());
    let embed_at = |op: &ComplexMatrix, site: usize| -> ComplexMatrix {
        let factors: Vec<&ComplexMatrix> =
            (0..copies).map(|i| if i == site { op } else { &id }).collect();
        kron_all(&factors)
    };
    let mut jump_ops = Vec::new();
    for site in 0..copies {
        for (op, rate) in model.jump_ops() {
            jump_ops.push((embed_at(op, site), *rate));
        }
    }
    let hamiltonian = model.hamiltonian().map(|h| {
        let mut acc = ComplexMatrix::zeros(total, total);
        for site in 0..copies {
            acc = acc.add(&embed_at(h, site));
        }
        acc
    });
    LindbladModel::new(total, jump_ops, hamiltonian)
}

/// Generator L with vec(ρ̇) = L vec(ρ):
/// Σ rate·(conj(J)⊗J − ½ I⊗J†J − ½ (J†J)ᵀ⊗I), plus −i(I⊗H − Hᵀ⊗I) when a
/// Hamiltonian is present.
pub fn generator(model: &LindbladModel) -> Superoperator {
    let d = model.dim();
    let id = ComplexMatrix::identity(d);
    let mut l = ComplexMatrix::zeros(d * d, d * d);
    for (j, rate) in model.jump_ops() {
        let jdj = j.adjoint().mul(j);
        let term = kron(&j.conj(), j)
            .sub(&kron(&id, &jdj).scale_re(0.5))
            .sub(&kron(&jdj.transpose(), &id).scale_re(0.5));
        l = l.add(&term.scale_re(*rate));
    }
    if let Some(h) = model.hamiltonian() {
        let comm = kron(&id, h).sub(&kron(&h.transpose(), &id));
        l = l.add(&comm.scale(Complex64::new(0.0, -1.0)));
    }
    Superoperator { matrix: l, dim: d }
}

/// First-order per-interval map `I + dt·L`.
pub fn euler_step_map(model: &LindbladModel, dt: f64) -> Result<Superoperator> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::OutOfRange(format!("dt = {}", dt)));
    }
    let l = generator(model);
    let d = model.dim();
    let m = ComplexMatrix::identity(d * d).add(&l.matrix().scale_re(dt));
    Ok(Superoperator { matrix: m, dim: d })
}

/// Exact per-interval map `exp(L·dt)`.
pub fn propagator(model: &LindbladModel, dt: f64) -> Result<Superoperator> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::OutOfRange(format!("dt = {}", dt)));
    }
    let l = generator(model);
    let m = matexp(l.matrix(), dt)?;
    Ok(Superoperator { matrix: m, dim: model.dim() })
}

/// Which per-interval map backs an iterated-projection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    /// First-order map I + dt·L.
    Euler,
    /// Exact exponential exp(L·dt).
    Exact,
}

impl StepMethod {
    pub fn build(self, model: &LindbladModel, dt: f64) -> Result<Superoperator> {
        match self {
            StepMethod::Euler => euler_step_map(model, dt),
            StepMethod::Exact => propagator(model, dt),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepMethod::Euler => "euler",
            StepMethod::Exact => "exact",
        }
    }
}

impl std::str::FromStr for StepMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(StepMethod::Euler),
            "exact" => Ok(StepMethod::Exact),
            other => Err(Error::OutOfRange(format!(
                "method `{}`, expected euler|exact",
                other
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::C_ZERO;

    fn trace_vector(d: usize) -> Vec<Complex64> {
        ComplexMatrix::identity(d).vec_columns()
    }

    fn trace_of(v: &[Complex64], d: usize) -> Complex64 {
        trace_vector(d).iter().zip(v).map(|(a, b)| a.conj() * b).sum()
    }

    #[test]
    fn thermal_qubit_rates() {
        let zero = thermal_qubit(0.0).unwrap();
        assert_eq!(zero.jump_ops().len(), 2);
        assert_eq!(zero.jump_ops()[0].1, 1.0);
        assert_eq!(zero.jump_ops()[1].1, 0.0);

        let hot = thermal_qubit(0.5).unwrap();
        assert_eq!(hot.jump_ops()[0].1, 0.5);
        assert_eq!(hot.jump_ops()[1].1, 0.5);

        let mid = thermal_qubit(0.25).unwrap();
        assert_eq!(mid.jump_ops()[0].1, 0.75);
        assert_eq!(mid.jump_ops()[1].1, 0.25);

        assert!(thermal_qubit(-0.1).is_err());
        assert!(thermal_qubit(0.6).is_err());
    }

    #[test]
    fn independent_sum_basics() {
        let m = thermal_qubit(0.25).unwrap();
        let one = independent_sum(&m, 1).unwrap();
        assert_eq!(one.dim(), 2);
        assert_eq!(one.jump_ops().len(), 2);

        let three = independent_sum(&thermal_qubit(0.0).unwrap(), 3).unwrap();
        assert_eq!(three.dim(), 8);
        // two ops per site even at N = 0 (the σ₊ rate is zero)
        assert_eq!(three.jump_ops().len(), 6);
        let nonzero: Vec<_> =
            three.jump_ops().iter().filter(|(_, r)| *r > 0.0).collect();
        assert_eq!(nonzero.len(), 3);

        assert!(independent_sum(&m, 7).is_err());
    }

    #[test]
    fn independent_sum_generator_equals_embedded_sum() {
        let single = thermal_qubit(0.25).unwrap();
        let triple = independent_sum(&single, 3).unwrap();
        let l3 = generator(&triple);

        // one single-site model per slot, generators summed
        let id = ComplexMatrix::identity(2);
        let mut acc = ComplexMatrix::zeros(64, 64);
        for site in 0..3 {
            let jump_ops: Vec<(ComplexMatrix, f64)> = single
                .jump_ops()
                .iter()
                .map(|(j, rate)| {
                    let factors: Vec<&ComplexMatrix> =
                        (0..3).map(|i| if i == site { j } else { &id }).collect();
                    (kron_all(&factors), *rate)
                })
                .collect();
            let site_model = LindbladModel::new(8, jump_ops, None).unwrap();
            acc = acc.add(generator(&site_model).matrix());
        }
        assert!(l3.matrix().max_abs_diff(&acc) < 1e-12);

        // and against direct matrix arithmetic, not going through the
        // superoperator construction at all
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let mut x = ComplexMatrix::zeros(8, 8);
            for i in 0..8 {
                for j in 0..8 {
                    x[(i, j)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let x = x.add(&x.adjoint()).scale_re(0.5);
            let direct = l3.apply(&x);
            let mut summed = ComplexMatrix::zeros(8, 8);
            for site in 0..3 {
                summed = summed.add(&apply_single_site(&single, site, &x));
            }
            assert!(direct.max_abs_diff(&summed) < 1e-12);
        }
    }

    // single-site Lindbladian applied to the 8-dim operator by plain
    // matrix arithmetic
    fn apply_single_site(single: &LindbladModel, site: usize, x: &ComplexMatrix) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let mut out = ComplexMatrix::zeros(8, 8);
        for (j, rate) in single.jump_ops() {
            let factors: Vec<&ComplexMatrix> =
                (0..3).map(|i| if i == site { j } else { &id }).collect();
            let jj = kron_all(&factors);
            let jdj = jj.adjoint().mul(&jj);
            let term = jj
                .mul(x)
                .mul(&jj.adjoint())
                .sub(&jdj.mul(x).scale_re(0.5))
                .sub(&x.mul(&jdj).scale_re(0.5));
            out = out.add(&term.scale_re(*rate));
        }
        out
    }

    #[test]
    fn generator_is_trace_preserving() {
        for n in [0.0, 0.25, 0.5] {
            let l = generator(&thermal_qubit(n).unwrap());
            // (vec I)† L = 0
            let tv = trace_vector(2);
            let lm = l.matrix();
            for col in 0..4 {
                let acc: Complex64 =
                    (0..4).map(|row| tv[row].conj() * lm[(row, col)]).sum();
                assert!(acc.norm() < 1e-12, "N={} col={}", n, col);
            }
        }
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let model = thermal_qubit(0.0).unwrap();
        let rho0 = ComplexMatrix::basis_ket(2, 1).outer(&ComplexMatrix::basis_ket(2, 1));
        for &t in &[0.3, 1.0, 2.5] {
            let map = propagator(&model, t).unwrap();
            let rho = map.apply(&rho0);
            assert!((rho[(1, 1)].re - (-t).exp()).abs() < 1e-12);
            assert!((rho[(0, 0)].re - (1.0 - (-t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_temperature_steady_state_is_maximally_mixed() {
        let l = generator(&thermal_qubit(0.5).unwrap());
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        let dot = l.apply(&half);
        assert!(dot.frobenius_norm() < 1e-14);
        // and evolution converges there
        let map = propagator(&thermal_qubit(0.5).unwrap(), 40.0).unwrap();
        let rho0 = ComplexMatrix::basis_ket(2, 1).outer(&ComplexMatrix::basis_ket(2, 1));
        assert!(map.apply(&rho0).max_abs_diff(&half) < 1e-12);
    }

    #[test]
    fn euler_map_first_order_accuracy() {
        let model = thermal_qubit(0.25).unwrap();
        let mut errs = Vec::new();
        for &dt in &[1e-2, 1e-3] {
            let e = euler_step_map(&model, dt).unwrap();
            let x = propagator(&model, dt).unwrap();
            errs.push(e.matrix().max_abs_diff(x.matrix()));
        }
        // ‖euler − exp‖ ≤ C·dt²
        assert!(errs[0] < 1.0 * 1e-4);
        assert!(errs[1] < 1.0 * 1e-6);

        // dt → 0 approaches the identity map
        let tiny = euler_step_map(&model, 1e-12).unwrap();
        assert!(tiny.matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-11);
    }

    #[test]
    fn euler_map_preserves_trace_exactly() {
        let model = thermal_qubit(0.3).unwrap();
        let e = euler_step_map(&model, 0.05).unwrap();
        let tv = trace_vector(2);
        for col in 0..4 {
            let acc: Complex64 =
                (0..4).map(|row| tv[row].conj() * e.matrix()[(row, col)]).sum();
            let want = tv[col].conj();
            assert!((acc - want).norm() < 1e-14);
        }
    }

    #[test]
    fn propagator_semigroup_and_positivity() {
        let model = independent_sum(&thermal_qubit(0.2).unwrap(), 2).unwrap();
        let p1 = propagator(&model, 0.4).unwrap();
        let p2 = propagator(&model, 0.8).unwrap();
        assert!(p1.matrix().mul(p1.matrix()).max_abs_diff(p2.matrix()) < 1e-10);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut v = ComplexMatrix::zeros(4, 1);
            for i in 0..4 {
                v[(i, 0)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let v = v.scale_re(1.0 / v.norm_sqr().sqrt());
            let rho = p1.apply(&v.outer(&v));
            let eig = crate::numkernel::herm_eig(&rho).unwrap();
            assert!(eig.eigenvalues[0] >= -1e-12);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_decays_at_half_rate() {
        // ⟨0|ρ(t)|1⟩ for the zero-temperature qubit decays as e^{−t/2}
        let model = thermal_qubit(0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::from_real(2, 1, &[h, h]).unwrap();
        let rho0 = plus.outer(&plus);
        for &t in &[0.5, 1.0, 3.0] {
            let rho = propagator(&model, t).unwrap().apply(&rho0);
            assert!((rho[(0, 1)].re - 0.5 * (-t / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_preserved_under_evolution() {
        let model = independent_sum(&thermal_qubit(0.4).unwrap(), 2).unwrap();
        let map = propagator(&model, 1.3).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..4 {
            let mut x = ComplexMatrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    x[(i, j)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let x = x.add(&x.adjoint()).scale_re(0.5);
            let y = map.apply(&x);
            assert!(y.hermiticity_deviation() < 1e-12);
        }
    }

    #[test]
    fn sandwich_and_rightmul_helpers() {
        let e = gates::sigma_z();
        let s = Superoperator::sandwich(&e);
        let r = Superoperator::right_mul(&e);
        let x = ComplexMatrix::from_real(2, 2, &[0.1, 0.3, 0.3, 0.7]).unwrap();
        assert!(s.apply(&x).max_abs_diff(&e.mul(&x).mul(&e.adjoint())) < 1e-14);
        assert!(r.apply(&x).max_abs_diff(&x.mul(&e)) < 1e-14);
        let tr = trace_of(&x.vec_columns(), 2);
        assert!((tr.re - 0.8).abs() < 1e-15 && C_ZERO.im == 0.0);
    }
}
