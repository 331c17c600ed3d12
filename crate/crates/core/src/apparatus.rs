//! Measurement-dilated lifetime recording: counter measurement operators,
//! the apparatus density matrix (discrete via trace recursions, continuous
//! via the reduced-generator blocks), lifetime statistics, failure rate
//! and entropies.
//!
//! The counter has states |0⟩…|f⟩ and starts in |0⟩; it increments on
//! every survival and freezes at the first failure. Row `c` of the
//! apparatus matrix therefore holds the branch that survives `c`
//! checkpoints and fails at the (c+1)-th, with time label `(c+1)·dt`
//! (the failure time, matching the lifetime operator T̂ = Σ k|k⟩⟨k| over
//! failure steps). The last row is the all-survival reading and carries
//! no failure weight, so the unnormalized trace is the total failure
//! weight `1 − R(f)`, and the cumulative diagonal sum through counter
//! value c is `1 − R(c+1)` rather than a survival weight.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::Superoperator;
use crate::error::{Error, Result};
use crate::events::Projector;
use crate::flipcode::{q_coeffs, CodeParams};
use crate::histories::{ReliabilityCurve, TrajectoryFamily};
use crate::numkernel::{herm_eig, kron, matexp, ComplexMatrix, C_ONE};

/// Entropy sums drop eigenvalues and diagonal weights below this cutoff
/// (0·ln 0 := 0).
pub const ENTROPY_EIGENVALUE_CUTOFF: f64 = 1e-14;

/// Counter update `O_k = E ⊗ F_k + E^⊥ ⊗ I` with
/// `F_k = |k⟩⟨k−1| + |k−1⟩⟨k| + Σ_{i≠k−1,k} |i⟩⟨i|`; unitary, since `F_k`
/// is a transposition.
pub fn measurement_operator(
    k: usize,
    survival: &Projector,
    counter_dim: usize,
) -> Result<ComplexMatrix> {
    if k == 0 || k >= counter_dim {
        return Err(Error::OutOfRange(format!(
            "measurement index {} needs 1 ≤ k < counter dim {}",
            k, counter_dim
        )));
    }
    let mut f_k = ComplexMatrix::zeros(counter_dim, counter_dim);
    f_k[(k, k - 1)] = C_ONE;
    f_k[(k - 1, k)] = C_ONE;
    for i in 0..counter_dim {
        if i != k && i != k - 1 {
            f_k[(i, i)] = C_ONE;
        }
    }
    let id_g = ComplexMatrix::identity(counter_dim);
    Ok(kron(survival.matrix(), &f_k).add(&kron(survival.complement().matrix(), &id_g)))
}

/// Dilate a survival/failure family and its interval unitaries with the
/// counter: initial `|ψ⟩⊗|0⟩`, events `E⊗I`, and interval maps
/// `W_k = O_k (U_k ⊗ I)`.
///
/// The dilated family is consistent (the counter records the failure
/// step) while every trajectory weight is unchanged.
pub fn dilate_survival_failure(
    initial: &ComplexMatrix,
    times: &[f64],
    event: &Projector,
    unitaries: &[ComplexMatrix],
) -> Result<(TrajectoryFamily, Vec<ComplexMatrix>)> {
    if unitaries.len() != times.len() {
        return Err(Error::DimMismatch("one unitary per checkpoint".into()));
    }
    let counter_dim = times.len() + 1;
    let id_g = ComplexMatrix::identity(counter_dim);
    let dilated_initial = kron(initial, &ComplexMatrix::basis_ket(counter_dim, 0));
    let dilated_event = Projector::from_matrix(kron(event.matrix(), &id_g))?;
    let family = TrajectoryFamily::survival_failure(dilated_initial, times.to_vec(), &dilated_event)?;
    let dilated_unitaries = unitaries
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let o_k = measurement_operator(i + 1, event, counter_dim)?;
            Ok(o_k.mul(&kron(u, &id_g)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((family, dilated_unitaries))
}

/// Hermitian PSD record of failure-time weights and their interference.
///
/// Large diagonal-only records (fine time grids carrying just the
/// lifetime distribution) are stored without the dense zero block.
#[derive(Debug, Clone)]
pub struct ApparatusMatrix {
    repr: Repr,
    times: Vec<f64>,
    normalized: bool,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(ComplexMatrix),
    Diagonal(Vec<f64>),
}

impl ApparatusMatrix {
    /// Wrap a full matrix, enforcing the type invariants (Hermitian within
    /// 1e-10, trace ≤ 1 + 1e-10, one time label per counter value).
    pub fn from_dense(entries: ComplexMatrix, times: Vec<f64>) -> Result<ApparatusMatrix> {
        if !entries.is_square() {
            return Err(Error::NotSquare { rows: entries.rows(), cols: entries.cols() });
        }
        if times.len() != entries.rows() {
            return Err(Error::DimMismatch("one time label per counter value".into()));
        }
        let dev = entries.hermiticity_deviation();
        if dev > 1e-10 {
            return Err(Error::NotHermitian { dev, tol: 1e-10 });
        }
        let tr = entries.trace().re;
        if tr > 1.0 + 1e-10 {
            return Err(Error::OutOfRange(format!("apparatus trace {} exceeds 1", tr)));
        }
        Ok(ApparatusMatrix { repr: Repr::Dense(entries), times, normalized: false })
    }

    /// Diagonal-only matrix from per-step failure weights (`weights[c]` =
    /// branch failing at step c+1, time `(c+1)·dt`); the all-survival slot
    /// is appended with zero weight.
    pub fn from_failure_weights(weights: &[f64], dt: f64) -> Result<ApparatusMatrix> {
        if weights.is_empty() || dt <= 0.0 {
            return Err(Error::OutOfRange("empty weights or bad dt".into()));
        }
        let mut diag = weights.to_vec();
        diag.push(0.0);
        let times = (0..diag.len()).map(|c| (c + 1) as f64 * dt).collect();
        Ok(ApparatusMatrix { repr: Repr::Diagonal(diag), times, normalized: false })
    }

    /// Dense view of the entries; materializes the zero off-diagonals for
    /// diagonal-only records.
    pub fn dense(&self) -> ComplexMatrix {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Diagonal(d) => {
                let mut m = ComplexMatrix::zeros(d.len(), d.len());
                for (i, &v) in d.iter().enumerate() {
                    m[(i, i)] = Complex64::new(v, 0.0);
                }
                m
            }
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.rows(),
            Repr::Diagonal(d) => d.len(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.trace().re,
            Repr::Diagonal(d) => d.iter().sum(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(m) => (0..m.rows()).map(|i| m[(i, i)].re).collect(),
            Repr::Diagonal(d) => d.clone(),
        }
    }

    /// Smallest eigenvalue (PSD check).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        match &self.repr {
            Repr::Dense(m) => Ok(herm_eig(m)?.eigenvalues[0]),
            Repr::Diagonal(d) => {
                Ok(d.iter().cloned().fold(f64::INFINITY, f64::min))
            }
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.hermiticity_deviation(),
            Repr::Diagonal(_) => 0.0,
        }
    }

    /// Unit-trace copy.
    pub fn normalize(&self) -> Result<ApparatusMatrix> {
        let tr = self.trace();
        if tr <= ENTROPY_EIGENVALUE_CUTOFF {
            return Err(Error::ZeroTrace(format!("apparatus trace {}", tr)));
        }
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.scale_re(1.0 / tr)),
            Repr::Diagonal(d) => Repr::Diagonal(d.iter().map(|v| v / tr).collect()),
        };
        Ok(ApparatusMatrix { repr, times: self.times.clone(), normalized: true })
    }

    /// Copy with the off-diagonal interference removed (still stored
    /// dense, so spectral code paths stay exercised).
    pub fn diagonalized(&self) -> ApparatusMatrix {
        let n = self.dim();
        let diag = self.diagonal();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        ApparatusMatrix {
            repr: Repr::Dense(m),
            times: self.times.clone(),
            normalized: self.normalized,
        }
    }

    /// Frobenius norm of the entries.
    pub fn frobenius_norm(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.frobenius_norm(),
            Repr::Diagonal(d) => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Full (f+1)×(f+1) apparatus matrix from the trace recursions
/// `G_{k,n} = Tr{Λ̃^∘n[Λ_E^∘k(ρ₀)]}` with `Λ_E(·) = EΛ(·)E` and
/// `Λ̃(·) = Λ(·)E`:
///
/// ```text
/// ρ^M_{k,k}   = G_{k,0} − G_{k+1,0}
/// ρ^M_{k,k+n} = G_{k,n} − G_{k,n+1} − G_{k+1,n−1} + G_{k+1,n}
/// ```
///
/// Cost is O(f²) map applications; use [`ApparatusMatrix::from_failure_weights`]
/// when only the lifetime distribution is needed on a fine grid.
pub fn apparatus_matrix_discrete(
    step: &Superoperator,
    survival: &Projector,
    initial: &ComplexMatrix,
    f: usize,
    dt: f64,
) -> Result<ApparatusMatrix> {
    if survival.dim() != step.dim() || initial.rows() != step.dim() || initial.cols() != 1 {
        return Err(Error::DimMismatch("step/projector/state dims".into()));
    }
    if f == 0 || dt <= 0.0 {
        return Err(Error::OutOfRange("need f ≥ 1 and dt > 0".into()));
    }
    let d = step.dim();
    let sandwich = Superoperator::sandwich(survival.matrix()).compose(step);
    let right = Superoperator::right_mul(survival.matrix()).compose(step);
    let trace = |v: &[Complex64]| -> Complex64 { (0..d).map(|i| v[i * d + i]).sum() };

    // survival chain σ_k = Λ_E^∘k(ρ₀)
    let mut sigma = Vec::with_capacity(f + 1);
    sigma.push(initial.outer(initial).vec_columns());
    for _ in 0..f {
        let next = sandwich.apply_vec(sigma.last().unwrap());
        sigma.push(next);
    }

    // g[k][n] for n ≤ f − k
    let g: Vec<Vec<Complex64>> = (0..=f)
        .into_par_iter()
        .map(|k| {
            let mut row = Vec::with_capacity(f - k + 1);
            let mut y = sigma[k].clone();
            row.push(trace(&y));
            for _ in 1..=(f - k) {
                y = right.apply_vec(&y);
                row.push(trace(&y));
            }
            row
        })
        .collect();

    let mut entries = ComplexMatrix::zeros(f + 1, f + 1);
    for k in 0..f {
        entries[(k, k)] = g[k][0] - g[k + 1][0];
        for kp in (k + 1)..f {
            let n = kp - k;
            let val = g[k][n] - g[k][n + 1] - g[k + 1][n - 1] + g[k + 1][n];
            entries[(k, kp)] = val;
            entries[(kp, k)] = val.conj();
        }
    }
    let times = (0..=f).map(|c| (c + 1) as f64 * dt).collect();
    Ok(ApparatusMatrix { repr: Repr::Dense(entries), times, normalized: false })
}

/// Which filling of the upper-left reduced-generator block to use.
///
/// The typeset D₁ and the coefficient matrix of the (a, b) rate equations
/// disagree in the second row; `OdeConsistent` is the default because it
/// reproduces the independently verified closed-form R_L, while `Printed`
/// keeps the block exactly as typeset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D1Variant {
    Printed,
    OdeConsistent,
}

impl std::str::FromStr for D1Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(D1Variant::Printed),
            "ode-consistent" | "ode_consistent" => Ok(D1Variant::OdeConsistent),
            other => Err(Error::OutOfRange(format!(
                "variant `{}`, expected printed|ode-consistent",
                other
            ))),
        }
    }
}

impl D1Variant {
    pub fn name(self) -> &'static str {
        match self {
            D1Variant::Printed => "printed",
            D1Variant::OdeConsistent => "ode-consistent",
        }
    }
}

/// The four real 2×2 blocks of the reduced one-sided and two-sided
/// projected generators, plus the relative phase of the coherence
/// sectors.
#[derive(Debug, Clone)]
pub struct DBlocks {
    pub d1: ComplexMatrix,
    pub d2: ComplexMatrix,
    pub d3: ComplexMatrix,
    pub d4: ComplexMatrix,
    pub phi: f64,
}

/// Reduced-generator blocks for the flip code; they depend only on |α|²
/// and N.
pub fn d_blocks(alpha: f64, n_thermal: f64, variant: D1Variant) -> Result<DBlocks> {
    let params = CodeParams::new(alpha, n_thermal)?;
    let a2 = alpha * alpha;
    let b2 = 1.0 - a2;
    let ab = alpha * b2.sqrt();
    let n = n_thermal;

    let d1 = match variant {
        D1Variant::Printed => ComplexMatrix::from_real(
            2,
            2,
            &[
                -3.0 * (1.0 - n) * a2 - 3.0 * n * b2,
                3.0 * n * a2 * a2 + 3.0 * (1.0 - n) * b2 * b2,
                (n - 1.0) * a2 * a2 + n * b2 * b2,
                -(1.0 + n) * b2 - a2 * (-2.0 + n + 2.0 * b2),
            ],
        )?,
        D1Variant::OdeConsistent => {
            let (q1, q2, q3, q4) = q_coeffs(&params);
            ComplexMatrix::from_real(2, 2, &[q1, q2, q3, q4])?
        }
    };
    let d2 = ComplexMatrix::from_real(
        2,
        2,
        &[
            1.5 - 3.0 * n,
            3.0 * b2 - 3.0 * n,
            n - a2,
            0.5 + n - 2.0 * b2,
        ],
    )?
    .scale_re(ab);
    let d3 = ComplexMatrix::from_real(
        2,
        2,
        &[
            1.5 - 3.0 * n,
            3.0 * b2 - 3.0 * n,
            n - a2,
            2.5 - 3.0 * n - 2.0 * b2,
        ],
    )?
    .scale_re(ab);
    let abab = ab * ab;
    let d4 = ComplexMatrix::from_real(
        2,
        2,
        &[-1.5, 3.0 * abab, abab, -1.5 - 2.0 * abab],
    )?;
    Ok(DBlocks { d1, d2, d3, d4, phi: 0.0 })
}

impl DBlocks {
    /// Same blocks with the coherence-sector phase replaced.
    pub fn with_phase(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// 4×4 matrix of the one-sided projected generator:
    /// `[[D₁, e^{iφ}D₂], [e^{−iφ}D₃, D₄]]`.
    pub fn assemble_le(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        let ph = Complex64::from_polar(1.0, self.phi);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = self.d1[(i, j)];
                m[(i, j + 2)] = ph * self.d2[(i, j)];
                m[(i + 2, j)] = ph.conj() * self.d3[(i, j)];
                m[(i + 2, j + 2)] = self.d4[(i, j)];
            }
        }
        m
    }

    /// 4×4 matrix of the two-sided projected generator:
    /// `[[D₁, 0], [0, 0]]`.
    pub fn assemble_ele(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = self.d1[(i, j)];
            }
        }
        m
    }

    /// `exp(𝒟_ELE · t)` computed blockwise as diag(exp(D₁t), I).
    pub fn exp_ele(&self, t: f64) -> Result<ComplexMatrix> {
        let e1 = matexp(&self.d1, t)?;
        let mut m = ComplexMatrix::identity(4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = e1[(i, j)];
            }
        }
        Ok(m)
    }
}

/// Continuous-limit matrix element
/// `ρ^M_{t,t+τ} = (1 3 0 0) 𝒟_LE exp(𝒟_LE τ) 𝒟_ELE exp(𝒟_ELE t) (1 0 0 0)ᵀ`.
///
/// Its value is independent of the coherence phase φ: the off-diagonal
/// blocks always enter in conjugate pairs, so products of block matrices
/// keep the phase confined off the (1,1) block that the boundary vectors
/// select.
pub fn rho_continuous(t: f64, tau: f64, blocks: &DBlocks) -> Result<Complex64> {
    if t < 0.0 || tau < 0.0 {
        return Err(Error::OutOfRange(format!("t = {}, tau = {}", t, tau)));
    }
    let d_le = blocks.assemble_le();
    let d_ele = blocks.assemble_ele();
    let left = ComplexMatrix::from_real(1, 4, &[1.0, 3.0, 0.0, 0.0])?;
    let right = ComplexMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0])?;
    let exp_le = matexp(&d_le, tau)?;
    let exp_ele = blocks.exp_ele(t)?;
    let out = left
        .mul(&d_le)
        .mul(&exp_le)
        .mul(&d_ele)
        .mul(&exp_ele)
        .mul(&right);
    Ok(out[(0, 0)])
}

impl ApparatusMatrix {
    /// Discretize the continuous kernel on an n-point uniform grid over
    /// [0, t_max] with trapezoid quadrature weights,
    /// `M[i][j] = √(w_i) ρ^M_{t_i,t_j} √(w_j)`, Hermitized.
    pub fn from_continuous_grid(blocks: &DBlocks, t_max: f64, n: usize) -> Result<ApparatusMatrix> {
        if n < 2 || t_max <= 0.0 {
            return Err(Error::OutOfRange("need n ≥ 2 grid points and t_max > 0".into()));
        }
        let delta = t_max / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * delta).collect();
        let d_le = blocks.assemble_le();
        let left = ComplexMatrix::from_real(1, 4, &[1.0, 3.0, 0.0, 0.0])?;
        let right = ComplexMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0])?;
        // u_d = (1 3 0 0)·𝒟_LE·exp(𝒟_LE·dΔ)  and  v_i = 𝒟_ELE·exp(𝒟_ELE·t_i)·e₀
        let us: Vec<ComplexMatrix> = (0..n)
            .into_par_iter()
            .map(|dstep| {
                let e = matexp(&d_le, dstep as f64 * delta)?;
                Ok(left.mul(&d_le).mul(&e))
            })
            .collect::<Result<Vec<_>>>()?;
        let d_ele = blocks.assemble_ele();
        let vs: Vec<ComplexMatrix> = times
            .par_iter()
            .map(|&t| Ok(d_ele.mul(&blocks.exp_ele(t)?).mul(&right)))
            .collect::<Result<Vec<_>>>()?;
        let mut entries = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let wi = if i == 0 || i == n - 1 { delta / 2.0 } else { delta };
            for j in i..n {
                let wj = if j == 0 || j == n - 1 { delta / 2.0 } else { delta };
                let val = us[j - i].mul(&vs[i])[(0, 0)] * (wi * wj).sqrt();
                entries[(i, j)] = val;
                entries[(j, i)] = val.conj();
            }
        }
        Ok(ApparatusMatrix { repr: Repr::Dense(entries), times, normalized: false })
    }
}

/// Mean lifetime `Tr[ρ^M T̂]/Tr[ρ^M]` with T̂ diagonal on the time grid.
pub fn lifetime_mean(m: &ApparatusMatrix) -> Result<f64> {
    let tr = m.trace();
    if tr <= ENTROPY_EIGENVALUE_CUTOFF {
        return Err(Error::ZeroTrace(format!(
            "apparatus trace {} (no failure weight recorded)",
            tr
        )));
    }
    let weighted: f64 = m
        .diagonal()
        .iter()
        .zip(m.times())
        .map(|(p, t)| p * t)
        .sum();
    Ok(weighted / tr)
}

/// Discrete hazard `x(k) = ρ^M_{kk}/R(k)` against an aligned reliability
/// curve; entries where the reliability has vanished (or the slot carries
/// no failure branch) are `None`.
pub fn failure_rate(m: &ApparatusMatrix, curve: &ReliabilityCurve) -> Result<Vec<Option<f64>>> {
    let f = m.dim() - 1;
    if curve.values.len() < f + 1 {
        return Err(Error::GridMismatch(format!(
            "curve has {} samples, apparatus needs {}",
            curve.values.len(),
            f + 1
        )));
    }
    for c in 0..f {
        let want = curve.times[c + 1];
        if (m.times()[c] - want).abs() > 1e-9 * want.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "apparatus time {} vs curve time {}",
                m.times()[c],
                want
            )));
        }
    }
    let diag = m.diagonal();
    let mut out = Vec::with_capacity(f + 1);
    for (c, &d) in diag.iter().enumerate() {
        if c == f {
            out.push(None); // all-survival slot
            continue;
        }
        let r = curve.values[c + 1];
        if r < 1e-14 {
            out.push(None);
        } else {
            out.push(Some(d / r));
        }
    }
    Ok(out)
}

/// Shannon (diagonal) and von Neumann (spectral) entropies of the
/// trace-normalized matrix, natural logs, and their gap.
#[derive(Debug, Clone, Copy)]
pub struct EntropyGap {
    pub s_shannon: f64,
    pub s_von_neumann: f64,
    pub gap: f64,
}

/// `S_s − S_v ≥ 0` whenever the matrix is PSD: the spectrum majorizes the
/// diagonal.
pub fn entropy_gap(m: &ApparatusMatrix) -> Result<EntropyGap> {
    let normalized = if m.is_normalized() { m.clone() } else { m.normalize()? };
    let spectrum = match &normalized.repr {
        Repr::Dense(entries) => herm_eig(entries)?.eigenvalues,
        // a diagonal record is its own spectrum
        Repr::Diagonal(d) => d.clone(),
    };
    let s_von_neumann = -spectrum
        .iter()
        .filter(|&&lam| lam > ENTROPY_EIGENVALUE_CUTOFF)
        .map(|&lam| lam * lam.ln())
        .sum::<f64>();
    let s_shannon = -normalized
        .diagonal()
        .iter()
        .filter(|&&p| p > ENTROPY_EIGENVALUE_CUTOFF)
        .map(|&p| p * p.ln())
        .sum::<f64>();
    Ok(EntropyGap { s_shannon, s_von_neumann, gap: s_shannon - s_von_neumann })
}
