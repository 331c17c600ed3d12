//! Reliability events as projectors and the Boolean structure-function
//! DSL that compiles to a system survival projector E_S = 𝔤(E₁,…,E_n).
//!
//! Naming caution: here `parallel(a, b)` is the conjunction E₁E₂ (every
//! branch must survive, the tensor-product composite) and `series` is the
//! disjunction (at least one branch survives). This is the REVERSE of the
//! usual reliability-block-diagram convention, where a parallel bank
//! survives if any unit does. The `all_of` / `any_of` forms carry the
//! conventional meanings and are parsed to the same AST nodes.

mod parser;

pub use parser::{parse_structure, parse_system, ComponentDecl, SystemSpec};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numkernel::{kron_all, ComplexMatrix, HERMITICITY_TOL};

/// Tolerance for the numeric commutator guard applied before combining
/// projectors on the same space.
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// Largest component list accepted by `atleast` (the survivor-subset
/// expansion is exponential in the list length).
pub const ATLEAST_MAX_COMPONENTS: usize = 16;

/// Hermitian idempotent operator marking a survival subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
}

impl Projector {
    /// Validate and wrap a matrix as a projector (Hermitian and idempotent
    /// within 1e-10 in Frobenius norm).
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        let herm = matrix.hermiticity_deviation();
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian { dev: herm, tol: HERMITICITY_TOL });
        }
        let idem = matrix.mul(&matrix).sub(&matrix).frobenius_norm();
        if idem > HERMITICITY_TOL {
            return Err(Error::NotIdempotent { dev: idem, tol: HERMITICITY_TOL });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    /// Rank-one projector |ψ⟩⟨ψ| onto a unit ket.
    pub fn onto_ket(ket: &ComplexMatrix) -> Result<Self> {
        let n = ket.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::OutOfRange(format!("ket norm² = {}, expected 1", n)));
        }
        Ok(Self { matrix: ket.outer(ket) })
    }

    /// Projector onto the span of mutually orthonormal kets.
    pub fn onto_orthonormal_kets(kets: &[ComplexMatrix]) -> Result<Self> {
        if kets.is_empty() {
            return Err(Error::OutOfRange("no kets given".into()));
        }
        let dim = kets[0].rows();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for k in kets {
            m = m.add(&k.outer(k));
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Rank as the rounded trace.
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    /// Apply to a ket.
    pub fn apply(&self, ket: &ComplexMatrix) -> ComplexMatrix {
        self.matrix.mul(ket)
    }

    /// Failure event `I − P`.
    pub fn complement(&self) -> Self {
        Self { matrix: ComplexMatrix::identity(self.dim()).sub(&self.matrix) }
    }

    fn check_commuting(&self, other: &Self) -> Result<()> {
        let ab = self.matrix.mul(&other.matrix);
        let ba = other.matrix.mul(&self.matrix);
        let dev = ab.sub(&ba).frobenius_norm();
        if dev > COMMUTATOR_TOL {
            return Err(Error::NonCommuting { dev, tol: COMMUTATOR_TOL });
        }
        Ok(())
    }

    /// Conjunction of commuting events: the product `P Q`.
    pub fn and(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(format!("and: {} vs {}", self.dim(), other.dim())));
        }
        self.check_commuting(other)?;
        Ok(Self { matrix: self.matrix.mul(&other.matrix) })
    }

    /// Disjunction of commuting events: `P + Q − P Q`.
    pub fn or(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(format!("or: {} vs {}", self.dim(), other.dim())));
        }
        self.check_commuting(other)?;
        let pq = self.matrix.mul(&other.matrix);
        Ok(Self { matrix: self.matrix.add(&other.matrix).sub(&pq) })
    }

    /// At-least-k-of-n over commuting events: the sum over every exact
    /// survivor subset of size ≥ k of survivor products times failure
    /// complements.
    pub fn at_least(k: usize, events: &[Self]) -> Result<Self> {
        let n = events.len();
        if n == 0 || k == 0 || k > n {
            return Err(Error::OutOfRange(format!("atleast {} of {}", k, n)));
        }
        if n > ATLEAST_MAX_COMPONENTS {
            return Err(Error::OutOfRange(format!(
                "atleast over {} events exceeds the {}-event limit",
                n, ATLEAST_MAX_COMPONENTS
            )));
        }
        let dim = events[0].dim();
        for (a, b) in events.iter().enumerate().flat_map(|(i, a)| {
            events[i + 1..].iter().map(move |b| (a, b))
        }) {
            a.check_commuting(b)?;
        }
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for mask in 0u32..(1u32 << n) {
            if (mask.count_ones() as usize) < k {
                continue;
            }
            let mut term = ComplexMatrix::identity(dim);
            for (i, ev) in events.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    term = term.mul(&ev.matrix);
                } else {
                    term = term.mul(&ev.complement().matrix);
                }
            }
            acc = acc.add(&term);
        }
        Self::from_matrix(acc)
    }
}

/// Ordered component register: names and per-component Hilbert dimensions.
#[derive(Debug, Clone)]
pub struct ComponentSpace {
    names: Vec<String>,
    dims: Vec<usize>,
}

impl ComponentSpace {
    pub fn new(components: &[(&str, usize)]) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, dim) in components {
            if !seen.insert(name.to_string()) {
                return Err(Error::OutOfRange(format!("duplicate component `{}`", name)));
            }
            if *dim < 2 {
                return Err(Error::OutOfRange(format!(
                    "component `{}` has dim {}, need ≥ 2",
                    name, dim
                )));
            }
        }
        Ok(Self {
            names: components.iter().map(|(n, _)| n.to_string()).collect(),
            dims: components.iter().map(|(_, d)| *d).collect(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownComponent(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(name)?])
    }
}

/// Lift a single-component projector into the joint space:
/// `I ⊗ … ⊗ P ⊗ … ⊗ I` with `P` at the named slot.
pub fn embed(p: &Projector, space: &ComponentSpace, at: &str) -> Result<Projector> {
    let slot = space.index_of(at)?;
    if p.dim() != space.dims()[slot] {
        return Err(Error::DimMismatch(format!(
            "projector dim {} vs component `{}` dim {}",
            p.dim(),
            at,
            space.dims()[slot]
        )));
    }
    let identities: Vec<ComplexMatrix> =
        space.dims().iter().map(|&d| ComplexMatrix::identity(d)).collect();
    let factors: Vec<&ComplexMatrix> = (0..space.dims().len())
        .map(|i| if i == slot { p.matrix() } else { &identities[i] })
        .collect();
    Ok(Projector { matrix: kron_all(&factors) })
}

/// AST of a Boolean structure function over named component events.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureExpr {
    Atom(String),
    Not(Box<StructureExpr>),
    And(Box<StructureExpr>, Box<StructureExpr>),
    Or(Box<StructureExpr>, Box<StructureExpr>),
    AtLeast(usize, Vec<StructureExpr>),
    /// Every branch survives (tensor composite).
    Series(Vec<StructureExpr>),
    /// At least one branch survives. See the module note on naming.
    Parallel(Vec<StructureExpr>),
}

impl StructureExpr {
    /// Atom names referenced anywhere in the expression.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            StructureExpr::Atom(n) => out.push(n.clone()),
            StructureExpr::Not(e) => e.collect_atoms(out),
            StructureExpr::And(a, b) | StructureExpr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            StructureExpr::AtLeast(_, list)
            | StructureExpr::Series(list)
            | StructureExpr::Parallel(list) => {
                for e in list {
                    e.collect_atoms(out);
                }
            }
        }
    }
}

/// Compile a structure expression to the joint-space survival projector,
/// embedding each bound component event first so all Boolean operations
/// act on commuting operators.
pub fn compile_structure(
    expr: &StructureExpr,
    bindings: &BTreeMap<String, Projector>,
    space: &ComponentSpace,
) -> Result<Projector> {
    let p = compile_inner(expr, bindings, space)?;
    Projector::from_matrix(p.matrix)
}

fn compile_inner(
    expr: &StructureExpr,
    bindings: &BTreeMap<String, Projector>,
    space: &ComponentSpace,
) -> Result<Projector> {
    match expr {
        StructureExpr::Atom(name) => {
            space.index_of(name)?;
            let bound = bindings
                .get(name)
                .ok_or_else(|| Error::UnboundComponent(name.clone()))?;
            embed(bound, space, name)
        }
        StructureExpr::Not(e) => Ok(compile_inner(e, bindings, space)?.complement()),
        StructureExpr::And(a, b) => {
            compile_inner(a, bindings, space)?.and(&compile_inner(b, bindings, space)?)
        }
        StructureExpr::Or(a, b) => {
            compile_inner(a, bindings, space)?.or(&compile_inner(b, bindings, space)?)
        }
        StructureExpr::AtLeast(k, list) => {
            let events = list
                .iter()
                .map(|e| compile_inner(e, bindings, space))
                .collect::<Result<Vec<_>>>()?;
            Projector::at_least(*k, &events)
        }
        StructureExpr::Parallel(list) => {
            let mut acc: Option<Projector> = None;
            for e in list {
                let p = compile_inner(e, bindings, space)?;
                acc = Some(match acc {
                    None => p,
                    Some(prev) => prev.and(&p)?,
                });
            }
            acc.ok_or_else(|| Error::OutOfRange("empty parallel list".into()))
        }
        StructureExpr::Series(list) => {
            let mut acc: Option<Projector> = None;
            for e in list {
                let p = compile_inner(e, bindings, space)?;
                acc = Some(match acc {
                    None => p,
                    Some(prev) => prev.or(&p)?,
                });
            }
            acc.ok_or_else(|| Error::OutOfRange("empty series list".into()))
        }
    }
}

/// Survival projector of the three-qubit flip code holding
/// `α|111⟩ + √(1−α²)|000⟩`: the span of the code state and its three
/// single-bit-flip images, a rank-4 projector on the 8-dimensional space.
pub fn flip_code_projector(alpha: f64) -> Result<Projector> {
    let psi = flip_code_state(alpha)?;
    let x = crate::numkernel::gates::sigma_x();
    let id = ComplexMatrix::identity(2);
    let mut m = psi.outer(&psi);
    for site in 0..3 {
        let factors: Vec<&ComplexMatrix> =
            (0..3).map(|i| if i == site { &x } else { &id }).collect();
        let flipped = kron_all(&factors).mul(&psi);
        m = m.add(&flipped.outer(&flipped));
    }
    Projector::from_matrix(m)
}

/// Code ket `α|111⟩ + √(1−α²)|000⟩` with real nonnegative amplitudes.
pub fn flip_code_state(alpha: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!("alpha = {}, need [0, 1]", alpha)));
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let mut ket = ComplexMatrix::zeros(8, 1);
    ket[(0, 0)] = num_complex::Complex64::new(beta, 0.0);
    ket[(7, 0)] = num_complex::Complex64::new(alpha, 0.0);
    Ok(ket)
}
