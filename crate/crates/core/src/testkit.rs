//! Seeded generators and independent oracles backing the test suite.
//!
//! The certified oracle deliberately uses plain interval propagation, not
//! the symbolic domain, so agreement with the solver is evidence from an
//! independent code path.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model_io::{Hyperrectangle, Layer, Network, Objective};
use crate::symbolic::interval_arithmetic_pass;

#[derive(Debug, Error)]
pub enum TestkitError {
    #[error("oracle region budget exceeded ({cap} regions)")]
    BudgetExceeded { cap: usize },
}

/// Shape and seed of a generated random network. All ranges are inclusive.
#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub input_dim: (usize, usize),
    /// Number of hidden layers.
    pub layers: (usize, usize),
    /// Width of hidden layers and of the output layer.
    pub width: (usize, usize),
    pub weight_scale: f64,
    pub seed: u64,
}

/// Deterministic random ReLU network; weights and biases uniform in
/// `[-weight_scale, weight_scale]`.
pub fn gen_network(spec: &GenSpec) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d0 = rng.random_range(spec.input_dim.0..=spec.input_dim.1);
    let hidden = rng.random_range(spec.layers.0..=spec.layers.1);
    let mut dims = vec![d0];
    for _ in 0..hidden {
        dims.push(rng.random_range(spec.width.0..=spec.width.1));
    }
    dims.push(rng.random_range(spec.width.0..=spec.width.1)); // output layer
    let scale = spec.weight_scale;
    let layers = dims
        .windows(2)
        .map(|w| {
            let (cols, rows) = (w[0], w[1]);
            let weights =
                Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..=scale));
            let bias = Array1::from_shape_fn(rows, |_| rng.random_range(-scale..=scale));
            Layer { weights, bias }
        })
        .collect();
    Network::new(layers).expect("generated dimensions chain by construction")
}

/// Best objective value over `n_samples` uniform samples: a lower bound to
/// the maximal violation (maximization mode) and an upper bound to the
/// minimal one (polytope mode).
pub fn sample_max(
    net: &Network,
    domain: &Hyperrectangle,
    objective: &Objective,
    n_samples: usize,
    seed: u64,
) -> f64 {
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maximizing = matches!(objective, Objective::MaxViolation { .. });
    let mut best = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for _ in 0..n_samples {
        let x = Array1::from_shape_fn(domain.dim(), |i| {
            if domain.lo[i] == domain.hi[i] {
                domain.lo[i]
            } else {
                rng.random_range(domain.lo[i]..=domain.hi[i])
            }
        });
        let v = objective.violation(&net.eval(&x));
        best = if maximizing { best.max(v) } else { best.min(v) };
    }
    best
}

const ORACLE_REGION_CAP: usize = 1_000_000;

/// Certified enclosure of the optimal objective value by recursive
/// bisection with plain interval propagation.
///
/// Regions are split along their widest dimension until every hidden neuron
/// is fixed (the network is affine on the region, so corner evaluation is
/// exact) or until all widths drop below `delta`, where the interval bound
/// stands in. Returns `(lower, upper)` containing the true optimum.
pub fn certified_opt(
    net: &Network,
    domain: &Hyperrectangle,
    objective: &Objective,
    delta: f64,
) -> Result<(f64, f64), TestkitError> {
    certified_opt_with_cap(net, domain, objective, delta, ORACLE_REGION_CAP)
}

pub fn certified_opt_with_cap(
    net: &Network,
    domain: &Hyperrectangle,
    objective: &Objective,
    delta: f64,
    cap: usize,
) -> Result<(f64, f64), TestkitError> {
    assert!(delta > 0.0);
    let maximizing = matches!(objective, Objective::MaxViolation { .. });
    let mut stack = vec![domain.clone()];
    let mut processed = 0usize;
    // Relaxed bound folded over leaves (max of uppers / min of lowers) and
    // best exactly evaluated point value.
    let mut leaf_bound = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let mut point_best = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let eval_at = |x: &Array1<f64>, point_best: &mut f64| {
        let v = objective.violation(&net.eval(x));
        *point_best = if maximizing {
            point_best.max(v)
        } else {
            point_best.min(v)
        };
    };

    while let Some(region) = stack.pop() {
        processed += 1;
        if processed > cap {
            return Err(TestkitError::BudgetExceeded { cap });
        }
        let bounds = interval_arithmetic_pass(net, &region);
        let hidden = net.num_layers() - 1;
        let all_fixed = bounds[..hidden]
            .iter()
            .all(|cb| cb.lo.iter().zip(cb.hi.iter()).all(|(&l, &u)| l >= 0.0 || u <= 0.0));
        let tiny = (0..region.dim()).all(|i| region.width(i) < delta);

        if all_fixed {
            // Affine composite over the region; corner evaluation is exact
            // per linear function.
            let (a_mat, a_off) = affine_composite(net, &bounds);
            match objective {
                Objective::MaxViolation { c, b } => {
                    let coeffs = c.dot(&a_mat);
                    let off = c.dot(&a_off) + b;
                    let corner = sign_corner(&coeffs, &region, true);
                    eval_at(&corner, &mut point_best);
                    let upper = affine_box_max(&coeffs, off, &region);
                    leaf_bound = leaf_bound.max(upper);
                }
                Objective::PolytopeAvoid { constraints } => {
                    // Lower bound on min over the region of the largest
                    // constraint value; exact only if the same corner
                    // minimizes every constraint, so keep splitting while
                    // the region-local gap is large.
                    let mut lower = f64::NEG_INFINITY;
                    let mut local_best = f64::INFINITY;
                    for (c, b) in constraints {
                        let coeffs = c.dot(&a_mat);
                        let off = c.dot(&a_off) + b;
                        lower = lower.max(-affine_box_max(&coeffs.mapv(|v| -v), -off, &region));
                        let corner = sign_corner(&coeffs, &region, false);
                        local_best = local_best.min(objective.violation(&net.eval(&corner)));
                    }
                    let center = region.midpoint();
                    local_best = local_best.min(objective.violation(&net.eval(&center)));
                    point_best = point_best.min(local_best);
                    if local_best - lower <= 1e-9 || tiny {
                        leaf_bound = leaf_bound.min(lower);
                    } else {
                        split_widest(&region, &mut stack);
                        continue;
                    }
                }
            }
        } else if tiny {
            let out = bounds.last().unwrap();
            match objective {
                Objective::MaxViolation { c, b } => {
                    let mut upper = *b;
                    for (i, &ci) in c.iter().enumerate() {
                        upper += if ci >= 0.0 { ci * out.hi[i] } else { ci * out.lo[i] };
                    }
                    leaf_bound = leaf_bound.max(upper);
                    eval_at(&region.midpoint(), &mut point_best);
                }
                Objective::PolytopeAvoid { constraints } => {
                    let mut lower = f64::NEG_INFINITY;
                    for (c, b) in constraints {
                        let mut lo = *b;
                        for (i, &ci) in c.iter().enumerate() {
                            lo += if ci >= 0.0 { ci * out.lo[i] } else { ci * out.hi[i] };
                        }
                        lower = lower.max(lo);
                    }
                    leaf_bound = leaf_bound.min(lower);
                    eval_at(&region.midpoint(), &mut point_best);
                }
            }
        } else {
            split_widest(&region, &mut stack);
        }
    }

    if maximizing {
        Ok((point_best, leaf_bound))
    } else {
        Ok((leaf_bound, point_best))
    }
}

fn split_widest(region: &Hyperrectangle, stack: &mut Vec<Hyperrectangle>) {
    let mut dim = 0;
    let mut w = f64::NEG_INFINITY;
    for i in 0..region.dim() {
        if region.width(i) > w {
            w = region.width(i);
            dim = i;
        }
    }
    let mid = 0.5 * (region.lo[dim] + region.hi[dim]);
    let mut left = region.clone();
    let mut right = region.clone();
    left.hi[dim] = mid;
    right.lo[dim] = mid;
    stack.push(right);
    stack.push(left);
}

/// Effective affine map of the network over a region where every hidden
/// neuron is fixed: fixed-zero rows are zeroed after each hidden layer.
fn affine_composite(
    net: &Network,
    bounds: &[crate::symbolic::ConcreteBounds],
) -> (Array2<f64>, Array1<f64>) {
    let d0 = net.input_dim();
    let mut mat = Array2::<f64>::eye(d0);
    let mut off = Array1::<f64>::zeros(d0);
    let hidden = net.num_layers() - 1;
    for (li, layer) in net.layers.iter().enumerate() {
        mat = layer.weights.dot(&mat);
        off = layer.weights.dot(&off) + &layer.bias;
        if li < hidden {
            for r in 0..layer.out_dim() {
                if bounds[li].hi[r] <= 0.0 {
                    mat.row_mut(r).fill(0.0);
                    off[r] = 0.0;
                }
            }
        }
    }
    (mat, off)
}

/// The box corner maximizing (or minimizing) an affine function.
fn sign_corner(coeffs: &Array1<f64>, region: &Hyperrectangle, maximize: bool) -> Array1<f64> {
    Array1::from_shape_fn(region.dim(), |i| {
        let c = if maximize { coeffs[i] } else { -coeffs[i] };
        if c >= 0.0 {
            region.hi[i]
        } else {
            region.lo[i]
        }
    })
}

fn affine_box_max(coeffs: &Array1<f64>, off: f64, region: &Hyperrectangle) -> f64 {
    let mut v = off;
    for (i, &c) in coeffs.iter().enumerate() {
        v += if c >= 0.0 { c * region.hi[i] } else { c * region.lo[i] };
    }
    v
}
