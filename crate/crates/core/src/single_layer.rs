//! One-layer networks: each output neuron's spike train is a set of linear
//! constraints on its weight row, solved row by row in least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::num::Real;
use crate::signals::PeriodicSignal;
use crate::tem::{encode, isi_rhs, weighted_input, SpikeTrain, TemParams};
use crate::WeightMatrix;

/// One training pair: `n0` input signals and the `n1` target spike trains.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub inputs: Vec<PeriodicSignal<T>>,
    pub target_trains: Vec<SpikeTrain<T>>,
}

impl<T: Real> Example<T> {
    pub fn new(inputs: Vec<PeriodicSignal<T>>, target_trains: Vec<SpikeTrain<T>>) -> Result<Self> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::InvalidArgument("example needs at least one input".into()))?;
        if let Some(s) = inputs.iter().find(|s| !s.same_grid(first)) {
            return Err(Error::DimensionMismatch(format!(
                "inputs disagree on period/bandwidth ({}, {}) vs ({}, {})",
                first.period(),
                first.bandwidth(),
                s.period(),
                s.bandwidth()
            )));
        }
        Ok(Self {
            inputs,
            target_trains,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }
}

/// Stacked rows `A w = b`, one row per inter-spike interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem<T: Real> {
    pub matrix: DMatrix<T>,
    pub rhs: DVector<T>,
}

impl<T: Real> ConstraintSystem<T> {
    pub fn empty(cols: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(0, cols),
            rhs: DVector::zeros(0),
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    /// `‖A w − b‖₂`.
    pub fn residual(&self, weights: &DVector<T>) -> T {
        (&self.matrix * weights - &self.rhs).norm()
    }
}

/// Rows `(∫_{t_ℓ}^{t_{ℓ+1}} x_j)_j` with right-hand side `2κδ − βΔt_ℓ` for
/// neuron `neuron`. Fewer than two spikes yield an empty system.
pub fn build_row_constraints<T: Real>(
    example: &Example<T>,
    neuron: usize,
    params: &TemParams<T>,
) -> Result<ConstraintSystem<T>> {
    let train = example.target_trains.get(neuron).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "neuron {neuron} out of range ({} targets)",
            example.target_trains.len()
        ))
    })?;
    let n0 = example.n_inputs();
    if train.len() < 2 {
        return Ok(ConstraintSystem::empty(n0));
    }
    let rows = train.len() - 1;
    let mut matrix = DMatrix::zeros(rows, n0);
    let mut rhs = DVector::zeros(rows);
    for (r, (a, b)) in train.intervals().enumerate() {
        for (j, x) in example.inputs.iter().enumerate() {
            matrix[(r, j)] = x.integrate_real(a, b)?;
        }
        rhs[r] = isi_rhs(params, a, b)?;
    }
    Ok(ConstraintSystem { matrix, rhs })
}

/// Vertical concatenation in the given order.
pub fn stack_examples<T: Real>(systems: &[ConstraintSystem<T>]) -> Result<ConstraintSystem<T>> {
    let cols = systems
        .first()
        .ok_or_else(|| Error::InvalidArgument("no systems to stack".into()))?
        .cols();
    if let Some(s) = systems.iter().find(|s| s.cols() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "column count {} vs {cols}",
            s.cols()
        )));
    }
    let rows: usize = systems.iter().map(|s| s.rows()).sum();
    let mut matrix = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    let mut r0 = 0;
    for s in systems {
        matrix
            .view_mut((r0, 0), (s.rows(), cols))
            .copy_from(&s.matrix);
        rhs.rows_mut(r0, s.rows()).copy_from(&s.rhs);
        r0 += s.rows();
    }
    Ok(ConstraintSystem { matrix, rhs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics<T> {
    pub rows: usize,
    pub rank: usize,
    pub condition: T,
    /// Numerical rank below the number of unknowns; the returned weights are
    /// the minimum-norm solution.
    pub underdetermined: bool,
}

/// Minimum-norm least-squares weights for one neuron.
pub fn solve_weights<T: Real>(
    system: &ConstraintSystem<T>,
) -> Result<(DVector<T>, SolveDiagnostics<T>)> {
    if system.is_empty() {
        return Err(Error::EmptySystem);
    }
    let sol = lstsq(&system.matrix, &system.rhs);
    let diag = SolveDiagnostics {
        rows: system.rows(),
        rank: sol.rank,
        condition: sol.condition,
        underdetermined: sol.rank < system.cols(),
    };
    Ok((sol.solution, diag))
}

/// Plain gradient descent on `½‖A w − b‖²` from zero with the fixed step
/// `1/‖A‖_F²`. Converges to the minimum-norm solution, slowly; the one-shot
/// [`solve_weights`] is what everything else uses.
pub fn solve_weights_gradient<T: Real>(
    system: &ConstraintSystem<T>,
    iterations: usize,
) -> Result<DVector<T>> {
    if system.is_empty() {
        return Err(Error::EmptySystem);
    }
    let a = &system.matrix;
    let step = T::one() / a.norm_squared();
    let mut w = DVector::zeros(system.cols());
    for _ in 0..iterations {
        let grad = a.transpose() * (a * &w - &system.rhs);
        w -= grad * step;
    }
    Ok(w)
}

/// Learned weights plus one diagnostics entry per output neuron.
#[derive(Debug, Clone)]
pub struct SingleLayerFit<T: Real> {
    pub weights: WeightMatrix<T>,
    pub diagnostics: Vec<SolveDiagnostics<T>>,
}

/// Learns `W` (`n1 × n0`) row by row from every example's constraints.
/// `params` holds one entry per output neuron.
pub fn learn_single_layer<T: Real>(
    examples: &[Example<T>],
    params: &[TemParams<T>],
) -> Result<SingleLayerFit<T>> {
    let first = examples
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one example is required".into()))?;
    let n0 = first.n_inputs();
    let n1 = params.len();
    if let Some(e) = examples
        .iter()
        .find(|e| e.n_inputs() != n0 || e.target_trains.len() != n1)
    {
        return Err(Error::DimensionMismatch(format!(
            "example has {} inputs and {} targets, expected {n0} and {n1}",
            e.n_inputs(),
            e.target_trains.len()
        )));
    }
    let mut weights = DMatrix::zeros(n1, n0);
    let mut diagnostics = Vec::with_capacity(n1);
    for (i, p) in params.iter().enumerate() {
        let systems = examples
            .iter()
            .map(|e| build_row_constraints(e, i, p))
            .collect::<Result<Vec<_>>>()?;
        let stacked = stack_examples(&systems)?;
        if stacked.is_empty() {
            return Err(Error::NoIntervals { neuron: i });
        }
        let (w, d) = solve_weights(&stacked)?;
        weights.set_row(i, &w.transpose());
        diagnostics.push(d);
    }
    Ok(SingleLayerFit {
        weights,
        diagnostics,
    })
}

/// Teacher forward pass: output neuron `i` encodes `Σ_j W_ij x_j` over
/// `[0, exposure]` starting from its reset state.
pub fn forward_single_layer<T: Real>(
    weights: &WeightMatrix<T>,
    inputs: &[PeriodicSignal<T>],
    params: &[TemParams<T>],
    exposure: T,
) -> Result<Vec<SpikeTrain<T>>> {
    if weights.ncols() != inputs.len() || weights.nrows() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights {:?} for {} inputs and {} neurons",
            weights.shape(),
            inputs.len(),
            params.len()
        )));
    }
    params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let row: Vec<T> = weights.row(i).iter().copied().collect();
            let drive = weighted_input(&row, inputs)?;
            encode(&drive, p, T::zero(), exposure, p.reset_state())
        })
        .collect()
}
