//! Symbolic intervals with fresh variables.
//!
//! A value vector is enclosed by a pair of affine maps over the network
//! inputs plus `k` auxiliary "fresh" variables. Each fresh variable stands
//! for an overapproximated neuron; its own input-space bounds are kept in a
//! side table and substituted back in when concrete numbers are needed.
//! Keeping the neuron as a single symbol prevents its lower and upper bound
//! from being used simultaneously in later computations.

use ndarray::{s, Array1, Array2};
use thiserror::Error;

use crate::model_io::{Hyperrectangle, Network};

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row index {row} out of range (rows: {rows})")]
    IndexOutOfRange { row: usize, rows: usize },
}

/// An affine map `v -> C v + o`, one row per enclosed value.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub coeffs: Array2<f64>,
    pub offset: Array1<f64>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            coeffs: Array2::eye(dim),
            offset: Array1::zeros(dim),
        }
    }

    pub fn rows(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn vars(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Range of one row's affine function over a box: the minimum takes each
    /// variable at the bound matching the coefficient sign, the maximum the
    /// opposite one.
    pub fn row_range(&self, row: usize, domain: &Hyperrectangle) -> (f64, f64) {
        let mut lo = self.offset[row];
        let mut hi = self.offset[row];
        for (i, &c) in self.coeffs.row(row).iter().enumerate() {
            if c >= 0.0 {
                lo += c * domain.lo[i];
                hi += c * domain.hi[i];
            } else {
                lo += c * domain.hi[i];
                hi += c * domain.lo[i];
            }
        }
        (lo, hi)
    }
}

fn pos(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.max(0.0))
}

fn neg(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.min(0.0))
}

/// Input-space bounds and cached concrete range of one fresh variable.
///
/// The bound maps reference input variables only; bounds that mentioned
/// earlier fresh variables are substituted to input form before storage.
#[derive(Debug, Clone, PartialEq)]
pub struct FreshVar {
    pub lb_coeffs: Array1<f64>,
    pub lb_offset: f64,
    pub ub_coeffs: Array1<f64>,
    pub ub_offset: f64,
    /// Concrete range at introduction time; heuristic data only.
    pub lo: f64,
    pub hi: f64,
}

/// Concrete per-value interval bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteBounds {
    pub lo: Array1<f64>,
    pub hi: Array1<f64>,
}

impl ConcreteBounds {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// Elementwise intersection with another valid enclosure.
    pub fn intersect(&mut self, other: &ConcreteBounds) {
        for i in 0..self.lo.len() {
            self.lo[i] = self.lo[i].max(other.lo[i]);
            self.hi[i] = self.hi[i].min(other.hi[i]);
        }
    }

    pub fn contains(&self, v: &Array1<f64>, tol: f64) -> bool {
        v.iter()
            .enumerate()
            .all(|(i, &x)| x >= self.lo[i] - tol && x <= self.hi[i] + tol)
    }
}

/// Which of the two symbolic bound functions to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// A symbolic interval vector with fresh variables over a fixed input box.
///
/// Coefficient layout: columns `0..d0` are the network inputs, columns
/// `d0..d0+k` the fresh variables in introduction order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicIntervalFV {
    pub low: AffineMap,
    pub up: AffineMap,
    pub fresh: Vec<FreshVar>,
    pub domain: Hyperrectangle,
}

impl SymbolicIntervalFV {
    pub fn rows(&self) -> usize {
        self.low.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn var_count(&self) -> usize {
        self.fresh.len()
    }
}

/// The identity symbolic interval over a box: both bounds are `x_i`.
pub fn init_identity(domain: Hyperrectangle) -> SymbolicIntervalFV {
    let d = domain.dim();
    SymbolicIntervalFV {
        low: AffineMap::identity(d),
        up: AffineMap::identity(d),
        fresh: Vec::new(),
        domain,
    }
}

/// Push a symbolic interval through `y = W v + b`.
///
/// Positive weights keep the bound side, negative weights swap it. The
/// transformation itself introduces no overapproximation.
pub fn affine_transform(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    s: &SymbolicIntervalFV,
) -> Result<SymbolicIntervalFV, SymbolicError> {
    if weights.ncols() != s.rows() {
        return Err(SymbolicError::DimensionMismatch {
            expected: s.rows(),
            got: weights.ncols(),
        });
    }
    let wp = pos(weights);
    let wn = neg(weights);
    let low = AffineMap {
        coeffs: wp.dot(&s.low.coeffs) + wn.dot(&s.up.coeffs),
        offset: wp.dot(&s.low.offset) + wn.dot(&s.up.offset) + bias,
    };
    let up = AffineMap {
        coeffs: wp.dot(&s.up.coeffs) + wn.dot(&s.low.coeffs),
        offset: wp.dot(&s.up.offset) + wn.dot(&s.low.offset) + bias,
    };
    Ok(SymbolicIntervalFV {
        low,
        up,
        fresh: s.fresh.clone(),
        domain: s.domain.clone(),
    })
}

/// The input-only affine maps obtained by replacing every fresh variable by
/// its stored bound of matching sign: in the lower bound, positive
/// coefficients take the variable's lower bound and negative ones its upper
/// bound; in the upper bound, the other way around.
pub fn substituted_maps(s: &SymbolicIntervalFV) -> (AffineMap, AffineMap) {
    (
        substitute_side(s, BoundSide::Lower, BoundSide::Lower),
        substitute_side(s, BoundSide::Upper, BoundSide::Upper),
    )
}

/// Eliminate fresh variables from one of the two bound maps (`which`) so
/// that the resulting input-only map bounds it from the requested `side`
/// over every feasible fresh-variable assignment.
///
/// Both sides of both maps matter: e.g. the chord relaxation of an upper
/// bound function needs a true minimum of that function, which requires the
/// lower-side substitution of the upper map.
pub fn substitute_side(s: &SymbolicIntervalFV, which: BoundSide, side: BoundSide) -> AffineMap {
    let d0 = s.input_dim();
    let k = s.var_count();
    let m = match which {
        BoundSide::Lower => &s.low,
        BoundSide::Upper => &s.up,
    };
    if k == 0 {
        return m.clone();
    }
    let mut f_lb = Array2::<f64>::zeros((k, d0));
    let mut f_ub = Array2::<f64>::zeros((k, d0));
    let mut f_lb0 = Array1::<f64>::zeros(k);
    let mut f_ub0 = Array1::<f64>::zeros(k);
    for (j, fv) in s.fresh.iter().enumerate() {
        f_lb.row_mut(j).assign(&fv.lb_coeffs);
        f_ub.row_mut(j).assign(&fv.ub_coeffs);
        f_lb0[j] = fv.lb_offset;
        f_ub0[j] = fv.ub_offset;
    }

    let inputs = m.coeffs.slice(s![.., ..d0]).to_owned();
    let fresh = m.coeffs.slice(s![.., d0..]).to_owned();
    let (fp, fn_) = (pos(&fresh), neg(&fresh));
    // Positive coefficients pull the substituted bound towards the fresh
    // variable's bound of matching side, negative ones towards the other.
    match side {
        BoundSide::Lower => AffineMap {
            coeffs: inputs + fp.dot(&f_lb) + fn_.dot(&f_ub),
            offset: &m.offset + fp.dot(&f_lb0) + fn_.dot(&f_ub0),
        },
        BoundSide::Upper => AffineMap {
            coeffs: inputs + fp.dot(&f_ub) + fn_.dot(&f_lb),
            offset: &m.offset + fp.dot(&f_ub0) + fn_.dot(&f_lb0),
        },
    }
}

/// Eliminate all fresh variables, returning an equivalent-or-wider symbolic
/// interval over the inputs only (`k = 0`).
pub fn substitute_to_inputs(s: &SymbolicIntervalFV) -> SymbolicIntervalFV {
    let (low, up) = substituted_maps(s);
    SymbolicIntervalFV {
        low,
        up,
        fresh: Vec::new(),
        domain: s.domain.clone(),
    }
}

/// Concrete bounds of a symbolic interval over its domain. Fresh variables
/// are substituted first so input correlations inside their stored bounds
/// are preserved.
pub fn concretize(s: &SymbolicIntervalFV) -> ConcreteBounds {
    let (low, up) = substituted_maps(s);
    let n = low.rows();
    let mut lo = Array1::<f64>::zeros(n);
    let mut hi = Array1::<f64>::zeros(n);
    for r in 0..n {
        lo[r] = low.row_range(r, &s.domain).0;
        hi[r] = up.row_range(r, &s.domain).1;
    }
    ConcreteBounds { lo, hi }
}

/// Minimum and maximum of one symbolic bound function over the domain, after
/// substituting fresh variables. Feeds the separate ReLU relaxations.
pub fn concretize_split(
    s: &SymbolicIntervalFV,
    row: usize,
    which: BoundSide,
) -> Result<(f64, f64), SymbolicError> {
    if row >= s.rows() {
        return Err(SymbolicError::IndexOutOfRange {
            row,
            rows: s.rows(),
        });
    }
    let from_below = substitute_side(s, which, BoundSide::Lower);
    let from_above = substitute_side(s, which, BoundSide::Upper);
    Ok((
        from_below.row_range(row, &s.domain).0,
        from_above.row_range(row, &s.domain).1,
    ))
}

/// Plain interval arithmetic forward pass. Returns pre-activation bounds for
/// every layer. Always sound, usually much looser than the symbolic pass;
/// serves as a baseline and an independent oracle component.
pub fn interval_arithmetic_pass(net: &Network, domain: &Hyperrectangle) -> Vec<ConcreteBounds> {
    let mut lo = domain.lo.clone();
    let mut hi = domain.hi.clone();
    let last = net.layers.len() - 1;
    let mut result = Vec::with_capacity(net.layers.len());
    for (li, layer) in net.layers.iter().enumerate() {
        let wp = pos(&layer.weights);
        let wn = neg(&layer.weights);
        let new_lo = wp.dot(&lo) + wn.dot(&hi) + &layer.bias;
        let new_hi = wp.dot(&hi) + wn.dot(&lo) + &layer.bias;
        result.push(ConcreteBounds {
            lo: new_lo.clone(),
            hi: new_hi.clone(),
        });
        if li < last {
            lo = new_lo.mapv(|v| v.max(0.0));
            hi = new_hi.mapv(|v| v.max(0.0));
        }
    }
    result
}
