//! Dense reference simulator for small registers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseTerm, C64};
use crate::pauli::{PauliSum, DEFAULT_DENSE_LIMIT};
use crate::trotter::Circuit;

/// Generators acting on more qubits than this are applied by Taylor propagation
/// instead of a local dense exponential (unless their terms commute).
const LOCAL_GATE_LIMIT: usize = 8;

fn check_limit(n: usize) -> Result<()> {
    if n > DEFAULT_DENSE_LIMIT {
        return Err(Error::DenseLimit { n, limit: DEFAULT_DENSE_LIMIT });
    }
    Ok(())
}

/// Complex `2^n × 2^n` matrix. Qubit 0 is the most significant index bit.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub n: usize,
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        DenseOperator { n, matrix: DMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { n: self.n, matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &DenseOperator) -> Self {
        DenseOperator { n: self.n, matrix: &self.matrix * &other.matrix }
    }

    /// `‖A − A†‖` (Frobenius), zero for Hermitian operators.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    /// `‖A A† − I‖` (Frobenius), zero for unitaries.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        (&self.matrix * self.matrix.adjoint() - DMatrix::<Complex64>::identity(d, d)).norm()
    }

    /// Spectral norm of a Hermitian operator.
    pub fn hermitian_norm(&self) -> f64 {
        let d = self.dim();
        if d <= 256 {
            let e = self.matrix.clone().symmetric_eigenvalues();
            return e.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        }
        let m = &self.matrix;
        let (lo, hi) = linalg::lanczos_extremes(d, |v, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..d).map(|j| m[(i, j)] * v[j]).sum();
            }
        });
        lo.abs().max(hi.abs())
    }

    /// Largest singular value, for general operators.
    pub fn spectral_norm(&self) -> f64 {
        let g = DenseOperator { n: self.n, matrix: self.matrix.adjoint() * &self.matrix };
        g.hermitian_norm().sqrt()
    }

    /// `U · O · U†`.
    pub fn conjugate(&self, o: &DenseOperator) -> DenseOperator {
        DenseOperator { n: self.n, matrix: &self.matrix * &o.matrix * self.matrix.adjoint() }
    }

    /// `<ψ|A|ψ>`.
    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        let v = nalgebra::DVector::from_column_slice(&psi.amps);
        (v.adjoint() * &self.matrix * &v)[(0, 0)]
    }
}

/// Normalized state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<ψ|A|ψ>` for a Pauli sum (real for Hermitian sums).
    pub fn expectation(&self, a: &PauliSum) -> f64 {
        linalg::expectation(&linalg::compile(a), &self.amps).re
    }

    /// `|ψ⟩ ← exp(−i H t)|ψ⟩`.
    pub fn evolve(&mut self, h: &PauliSum, t: f64) {
        linalg::taylor_propagate(&linalg::compile(h), h.one_norm(), -t, &mut self.amps);
    }

    /// Applies the circuit unitary `U` (gates in order).
    pub fn apply_circuit(&mut self, c: &CompiledCircuit) {
        for g in &c.gates {
            g.apply(&mut self.amps, c.n);
        }
    }
}

/// Expands a Pauli sum into a dense matrix.
pub fn materialize(a: &PauliSum) -> Result<DenseOperator> {
    check_limit(a.n())?;
    let d = 1usize << a.n();
    Ok(DenseOperator { n: a.n(), matrix: linalg::dense_matrix(&linalg::compile(a), d) })
}

/// `e^{iHt}` via Hermitian eigendecomposition.
pub fn exact_evolution(h: &PauliSum, t: f64) -> Result<DenseOperator> {
    let m = materialize(h)?;
    Ok(DenseOperator { n: h.n(), matrix: linalg::hermitian_exp(&m.matrix, t) })
}

enum GateKernel {
    /// Mutually commuting terms: a product of Pauli rotations `(x, z, i^{#Y}, angle·coeff)`.
    Rotations(Vec<(usize, usize, Complex64, f64)>),
    /// Dense exponential on a few qubits.
    Local { qubits: Vec<usize>, unitary: DMatrix<Complex64> },
    /// Taylor propagation of `exp(i θ G)`.
    Taylor { terms: Vec<DenseTerm>, one_norm: f64, angle: f64 },
}

impl GateKernel {
    fn apply(&self, v: &mut [C64], n: usize) {
        match self {
            GateKernel::Rotations(rots) => {
                for &(x, z, phase, phi) in rots {
                    linalg::apply_pauli_rotation(v, x, z, phase, phi);
                }
            }
            GateKernel::Local { qubits, unitary } => linalg::apply_local(v, n, qubits, unitary),
            GateKernel::Taylor { terms, one_norm, angle } => linalg::taylor_propagate(terms, *one_norm, *angle, v),
        }
    }
}

/// A circuit with each gate prepared for repeated application.
pub struct CompiledCircuit {
    n: usize,
    gates: Vec<GateKernel>,
}

impl CompiledCircuit {
    pub fn new(c: &Circuit) -> Result<Self> {
        check_limit(c.n)?;
        let gates = c
            .gates
            .iter()
            .map(|g| {
                if g.generator.terms_commute() {
                    GateKernel::Rotations(
                        g.generator
                            .iter()
                            .map(|(p, coeff)| {
                                let (x, z) = p.dense_masks();
                                let phase = crate::pauli::Phase::from_power(p.y_count()).to_complex();
                                (x, z, phase, g.angle * coeff)
                            })
                            .collect(),
                    )
                } else {
                    let qubits = g.generator.support().to_vec();
                    if qubits.len() <= LOCAL_GATE_LIMIT {
                        let local = linalg::restrict(&g.generator, &qubits);
                        let m = linalg::dense_matrix(&linalg::compile(&local), 1 << qubits.len());
                        GateKernel::Local { unitary: linalg::hermitian_exp(&m, g.angle), qubits }
                    } else {
                        GateKernel::Taylor {
                            terms: linalg::compile(&g.generator),
                            one_norm: g.generator.one_norm(),
                            angle: g.angle,
                        }
                    }
                }
            })
            .collect();
        Ok(CompiledCircuit { n: c.n, gates })
    }
}

/// The circuit unitary `G_last ⋯ G_first`.
pub fn apply_circuit(c: &Circuit) -> Result<DenseOperator> {
    let compiled = CompiledCircuit::new(c)?;
    let d = 1usize << c.n;
    let mut m = DMatrix::<Complex64>::identity(d, d);
    let mut col = vec![Complex64::new(0.0, 0.0); d];
    for j in 0..d {
        col.copy_from_slice(m.column(j).as_slice());
        for g in &compiled.gates {
            g.apply(&mut col, c.n);
        }
        m.column_mut(j).copy_from_slice(&col);
    }
    Ok(DenseOperator { n: c.n, matrix: m })
}

/// `U O U†` computed gate by gate: each gate conjugates the running operator.
pub fn conjugate_by_gates(c: &Circuit, o: &DenseOperator) -> Result<DenseOperator> {
    let compiled = CompiledCircuit::new(c)?;
    let d = o.dim();
    let mut m = o.matrix.clone();
    let mut col = vec![Complex64::new(0.0, 0.0); d];
    for g in &compiled.gates {
        // M ← G M: apply G to each column.
        for j in 0..d {
            col.copy_from_slice(m.column(j).as_slice());
            g.apply(&mut col, c.n);
            m.column_mut(j).copy_from_slice(&col);
        }
        // M ← M G† = (G M†)†.
        m = m.adjoint();
        for j in 0..d {
            col.copy_from_slice(m.column(j).as_slice());
            g.apply(&mut col, c.n);
            m.column_mut(j).copy_from_slice(&col);
        }
        m = m.adjoint();
    }
    Ok(DenseOperator { n: c.n, matrix: m })
}

/// Exact Heisenberg-evolved observable `e^{iHt} O e^{−iHt}`, reusable across circuits.
pub struct ExactHeisenberg {
    pub evolved: DenseOperator,
}

impl ExactHeisenberg {
    pub fn new(h: &PauliSum, o: &PauliSum, t: f64) -> Result<Self> {
        if h.n() != o.n() {
            return Err(Error::SizeMismatch(h.n(), o.n()));
        }
        let u = exact_evolution(h, t)?;
        Ok(ExactHeisenberg { evolved: u.conjugate(&materialize(o)?) })
    }

    /// `e^{iHt} O e^{−iHt} − U O U†`.
    pub fn difference(&self, o: &PauliSum, c: &Circuit) -> Result<DenseOperator> {
        let u = apply_circuit(c)?;
        let approx = u.conjugate(&materialize(o)?);
        Ok(DenseOperator { n: c.n, matrix: &self.evolved.matrix - approx.matrix })
    }

    pub fn error(&self, o: &PauliSum, c: &Circuit) -> Result<f64> {
        Ok(self.difference(o, c)?.hermitian_norm())
    }
}

/// `‖e^{iHt} O e^{−iHt} − U O U†‖`.
pub fn heisenberg_error(h: &PauliSum, o: &PauliSum, c: &Circuit, t: f64) -> Result<f64> {
    ExactHeisenberg::new(h, o, t)?.error(o, c)
}

/// Haar-random state from the stream `index` of the generator keyed by `seed`.
pub fn sample_haar_indexed(n: usize, seed: u64, index: u64) -> Result<StateVector> {
    check_limit(n)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let d = 1usize << n;
    let mut amps: Vec<Complex64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let nrm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= nrm);
    Ok(StateVector { n, amps })
}

/// Haar-random state determined by `seed`.
pub fn sample_haar(n: usize, seed: u64) -> Result<StateVector> {
    sample_haar_indexed(n, seed, 0)
}

/// Statistics of per-state errors over Haar samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AverageError {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub samples: Vec<f64>,
}

impl AverageError {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    fn from_samples(samples: Vec<f64>) -> Self {
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
        AverageError { mean, std: var.sqrt(), samples }
    }
}

/// Per-state errors `|<ψ|Δ|ψ>|` for a precomputed difference operator.
pub fn average_error_of(delta: &DenseOperator, samples: usize, seed: u64) -> Result<AverageError> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let psi = sample_haar_indexed(delta.n, seed, i as u64)?;
        values.push(delta.expectation(&psi).norm());
    }
    Ok(AverageError::from_samples(values))
}

/// Mean and spread of `|<ψ|e^{iHt}Oe^{−iHt}|ψ> − <ψ|UOU†|ψ>|` over Haar states.
pub fn empirical_average_error(
    h: &PauliSum,
    o: &PauliSum,
    c: &Circuit,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<AverageError> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let delta = ExactHeisenberg::new(h, o, t)?.difference(o, c)?;
    average_error_of(&delta, samples, seed)
}

/// Floor applied to the return probability before taking the logarithm.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// One point of a rate-function series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub t: f64,
    /// Return probability `L_k(t)`.
    pub echo: f64,
    /// `−log(L_k)/k`.
    pub lambda: f64,
    /// Set when `L_k` was at or below the floor.
    pub singular: bool,
}

/// Evolution used for the rate function.
pub enum RateSource<'a> {
    Exact,
    /// One circuit per grid point, each approximating `e^{iHt}` at that time.
    Circuits(&'a [Circuit]),
}

/// `λ_k(t) = −log(<ψ0|e^{iHt} Π_k e^{−iHt}|ψ0>)/k` with `ψ0 = |0…0⟩` and
/// `Π_k = Π_{j<k} (I+Z_j)/2`.
///
/// The exact source requires an increasing grid of nonnegative times.
pub fn rate_function(h: &PauliSum, k: usize, source: &RateSource, t_grid: &[f64]) -> Result<Vec<RatePoint>> {
    let n = h.n();
    check_limit(n)?;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must be in 1..={n}, got {k}")));
    }
    let projector = crate::models::zero_projector(n, k)?;
    let point = |t: f64, psi: &StateVector| -> RatePoint {
        let echo = psi.expectation(&projector);
        let singular = echo <= SINGULAR_FLOOR;
        let e = echo.max(SINGULAR_FLOOR);
        RatePoint { t, echo, lambda: -e.ln() / k as f64, singular }
    };
    let mut out = Vec::with_capacity(t_grid.len());
    match source {
        RateSource::Exact => {
            let mut psi = StateVector::zero(n);
            let mut now = 0.0;
            for &t in t_grid {
                if t < now {
                    return Err(Error::InvalidArgument("time grid must be increasing".into()));
                }
                psi.evolve(h, t - now);
                now = t;
                out.push(point(t, &psi));
            }
        }
        RateSource::Circuits(circuits) => {
            if circuits.len() != t_grid.len() {
                return Err(Error::InvalidArgument("one circuit per grid point is required".into()));
            }
            for (c, &t) in circuits.iter().zip(t_grid) {
                // The state picture evolves with U† ≈ e^{−iHt}.
                let mut psi = StateVector::zero(n);
                psi.apply_circuit(&CompiledCircuit::new(&c.inverse())?);
                out.push(point(t, &psi));
            }
        }
    }
    Ok(out)
}
