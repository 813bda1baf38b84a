//! Branch-and-bound over the input hyperrectangle.
//!
//! Sub-problems are ordered best-first by their optimistic objective bound;
//! ties fall back to insertion order. Each popped region gets a symbolic
//! forward pass (refined against its parent's cached neuron bounds), a
//! certified objective bound, and a candidate input read off the symbolic
//! output bounds. Regions on the safe side of zero are pruned, violating
//! candidates end the search with a counterexample, everything else is
//! bisected along the input chosen by the smear heuristic.

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::model_io::{Hyperrectangle, Objective, VerificationProblem};
use crate::relaxation::{forward_pass, FreshVarConfig, PassResult};
use crate::symbolic::{affine_transform, substituted_maps, ConcreteBounds, SymbolicError};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("every input dimension has zero width")]
    AllDegenerate,
    #[error("cannot bisect dimension {dim}: zero width")]
    ZeroWidth { dim: usize },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// Bisect the input with the largest smear score.
    SmearFV,
    /// Bisect the widest input.
    WidestInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateRule {
    /// The input that maximizes (or minimizes) the symbolic output bound.
    SymbolicArgmax,
    /// The region midpoint.
    CenterSample,
}

/// Solver configuration. Defaults follow the evaluated setup: at most 20
/// fresh variables, lambda 1/2, smear splitting, symbolic candidates,
/// monotone refinement, 60 s timeout.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub fresh: FreshVarConfig,
    pub split_rule: SplitRule,
    pub candidate_rule: CandidateRule,
    pub monotone_refinement: bool,
    pub timeout: Duration,
    /// Reserved for bound-gap termination in the `bounds` command; property
    /// checking itself only needs the sign of the bound.
    pub bound_tolerance: f64,
    pub max_nodes: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            fresh: FreshVarConfig::default(),
            split_rule: SplitRule::SmearFV,
            candidate_rule: CandidateRule::SymbolicArgmax,
            monotone_refinement: true,
            timeout: Duration::from_secs(60),
            bound_tolerance: 1e-6,
            max_nodes: u64::MAX,
        }
    }
}

impl SolverConfig {
    pub fn echo(&self) -> String {
        format!(
            "vars={:?} max_vars={} lambda={} priority={:?} split={:?} candidate={:?} monotone={} timeout_s={} max_nodes={}",
            self.fresh.budget_rule,
            self.fresh.max_total,
            self.fresh.lambda,
            self.fresh.priority_rule,
            self.split_rule,
            self.candidate_rule,
            self.monotone_refinement,
            self.timeout.as_secs_f64(),
            self.max_nodes,
        )
    }
}

/// Widths below this make a region ineligible for further splitting.
const MIN_SPLIT_WIDTH: f64 = 1e-12;

/// Final outcome of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Property violated; `value` is the exact violation at the witness.
    Sat {
        counterexample: Array1<f64>,
        value: f64,
    },
    /// Property certified over the whole input region.
    Unsat { bound: f64 },
    /// Budget exhausted; residual bounds reported.
    Inconclusive {
        /// Best certified bound over the unexplored regions.
        certified_bound: f64,
        /// Best exactly evaluated candidate value seen so far.
        best_candidate: f64,
    },
}

#[derive(Debug, Clone)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub nodes: u64,
    pub elapsed: Duration,
    pub config_echo: String,
}

/// A branch-and-bound node: a region plus the bound and neuron bounds
/// inherited from its parent.
#[derive(Debug, Clone)]
pub struct SubProblem {
    pub region: Hyperrectangle,
    pub cached_bounds: Option<Vec<ConcreteBounds>>,
    /// Optimistic objective bound inherited from the parent (valid for this
    /// region since it is a subset).
    pub bound: f64,
    pub seq: u64,
}

struct QueueItem {
    /// Higher key = popped earlier. The sign is flipped for minimization.
    key: f64,
    node: SubProblem,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.node.seq == other.node.seq
    }
}
impl Eq for QueueItem {}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key
            .total_cmp(&other.key)
            .then(other.node.seq.cmp(&self.node.seq)) // FIFO among equal keys
    }
}

/// Estimated bound improvement from bisecting each input: half its width
/// times the summed coefficient magnitudes over all unstable neurons, taken
/// from the input-substituted symbolic bounds.
pub fn smear_scores(pass: &PassResult, region: &Hyperrectangle) -> Array1<f64> {
    let d = region.dim();
    let mut scores = Array1::<f64>::zeros(d);
    for n in &pass.unstable {
        for i in 0..d {
            scores[i] +=
                0.5 * region.width(i) * (n.low_coeffs[i].abs() + n.up_coeffs[i].abs());
        }
    }
    scores
}

/// Pick the input dimension to bisect.
pub fn choose_split(
    pass: &PassResult,
    region: &Hyperrectangle,
    rule: SplitRule,
) -> Result<usize, OptimizerError> {
    let widest = || -> Result<usize, OptimizerError> {
        let mut best = 0;
        let mut best_w = f64::NEG_INFINITY;
        for i in 0..region.dim() {
            if region.width(i) > best_w {
                best_w = region.width(i);
                best = i;
            }
        }
        if best_w <= 0.0 {
            return Err(OptimizerError::AllDegenerate);
        }
        Ok(best)
    };
    match rule {
        SplitRule::WidestInput => widest(),
        SplitRule::SmearFV => {
            let scores = smear_scores(pass, region);
            let mut best = 0;
            let mut best_s = f64::NEG_INFINITY;
            for (i, &s) in scores.iter().enumerate() {
                if s > best_s {
                    best_s = s;
                    best = i;
                }
            }
            if best_s > 0.0 {
                Ok(best)
            } else {
                widest()
            }
        }
    }
}

/// Midpoint bisection of one dimension.
pub fn bisect(
    region: &Hyperrectangle,
    dim: usize,
) -> Result<(Hyperrectangle, Hyperrectangle), OptimizerError> {
    if region.width(dim) <= 0.0 {
        return Err(OptimizerError::ZeroWidth { dim });
    }
    let mid = 0.5 * (region.lo[dim] + region.hi[dim]);
    let mut left = region.clone();
    let mut right = region.clone();
    left.hi[dim] = mid;
    right.lo[dim] = mid;
    Ok((left, right))
}

/// Symbolic interval of the scalar `c^T y + b` over the region.
fn objective_row(
    pass: &PassResult,
    c: &Array1<f64>,
    b: f64,
) -> Result<crate::symbolic::SymbolicIntervalFV, SymbolicError> {
    let w = Array2::from_shape_vec((1, c.len()), c.to_vec()).unwrap();
    affine_transform(&w, &Array1::from_vec(vec![b]), &pass.output)
}

/// Certified objective bound for the region of a pass: an upper bound on
/// `c^T y + b` in maximization mode, a lower bound on the largest constraint
/// violation in polytope mode.
pub fn region_bound(pass: &PassResult, objective: &Objective) -> Result<f64, OptimizerError> {
    match objective {
        Objective::MaxViolation { c, b } => {
            let s = objective_row(pass, c, *b)?;
            let (_, up) = substituted_maps(&s);
            Ok(up.row_range(0, &s.domain).1)
        }
        Objective::PolytopeAvoid { constraints } => {
            let mut best = f64::NEG_INFINITY;
            for (c, b) in constraints {
                let s = objective_row(pass, c, *b)?;
                let (low, _) = substituted_maps(&s);
                best = best.max(low.row_range(0, &s.domain).0);
            }
            Ok(best)
        }
    }
}

/// A candidate input for the region: the optimizer of the symbolic output
/// bound (read off the coefficient signs), or the region midpoint.
pub fn candidate_point(
    pass: &PassResult,
    region: &Hyperrectangle,
    objective: &Objective,
    rule: CandidateRule,
) -> Result<Array1<f64>, OptimizerError> {
    if rule == CandidateRule::CenterSample {
        return Ok(region.midpoint());
    }
    match objective {
        Objective::MaxViolation { c, b } => {
            let s = objective_row(pass, c, *b)?;
            let (_, up) = substituted_maps(&s);
            Ok(argopt(&up.coeffs.row(0).to_owned(), region, true))
        }
        Objective::PolytopeAvoid { constraints } => {
            // Minimize the lower bound of the constraint that attains the
            // region bound.
            let mut best: Option<(f64, Array1<f64>)> = None;
            for (c, b) in constraints {
                let s = objective_row(pass, c, *b)?;
                let (low, _) = substituted_maps(&s);
                let lb = low.row_range(0, &s.domain).0;
                if best.as_ref().is_none_or(|(v, _)| lb > *v) {
                    best = Some((lb, low.coeffs.row(0).to_owned()));
                }
            }
            let (_, coeffs) = best.expect("polytope objective has constraints");
            Ok(argopt(&coeffs, region, false))
        }
    }
}

/// Maximizer (or minimizer) of an affine function over a box: each input
/// goes to the bound selected by its coefficient sign, zero-coefficient
/// inputs to the midpoint.
fn argopt(coeffs: &Array1<f64>, region: &Hyperrectangle, maximize: bool) -> Array1<f64> {
    let mut x = Array1::<f64>::zeros(region.dim());
    for i in 0..region.dim() {
        let c = if maximize { coeffs[i] } else { -coeffs[i] };
        x[i] = if c > 0.0 {
            region.hi[i]
        } else if c < 0.0 {
            region.lo[i]
        } else {
            0.5 * (region.lo[i] + region.hi[i])
        };
    }
    x
}

/// Whether a certified bound already places a region on the safe side.
fn is_safe(objective: &Objective, bound: f64) -> bool {
    match objective {
        Objective::MaxViolation { .. } => bound <= 0.0,
        Objective::PolytopeAvoid { .. } => bound > 0.0,
    }
}

/// Fold two bounds keeping the weaker (more pessimistic) one.
fn fold_residual(objective: &Objective, a: f64, b: f64) -> f64 {
    match objective {
        Objective::MaxViolation { .. } => a.max(b),
        Objective::PolytopeAvoid { .. } => a.min(b),
    }
}

/// Best-first branch-and-bound verification.
pub fn solve(
    problem: &VerificationProblem,
    cfg: &SolverConfig,
) -> Result<VerdictReport, OptimizerError> {
    let start = Instant::now();
    let objective = &problem.objective;
    let maximizing = matches!(objective, Objective::MaxViolation { .. });
    let key_of = |bound: f64| if maximizing { bound } else { -bound };
    let worst = if maximizing {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };

    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    heap.push(QueueItem {
        key: f64::INFINITY,
        node: SubProblem {
            region: problem.input.clone(),
            cached_bounds: None,
            bound: worst,
            seq,
        },
    });

    let mut nodes: u64 = 0;
    // Weakest bound among pruned (safe) regions: the certified global bound.
    let mut certified = if maximizing {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    // Regions too small to split but not provably safe.
    let mut unresolved: Option<f64> = None;
    let mut best_candidate = -worst;

    let report = |verdict: Verdict, nodes: u64| VerdictReport {
        verdict,
        nodes,
        elapsed: start.elapsed(),
        config_echo: cfg.echo(),
    };

    // Residual certified bound if the search stops with work left in the queue.
    let drain_bound = |heap: &BinaryHeap<QueueItem>, certified: f64, unresolved: Option<f64>| {
        let mut bound = certified;
        for item in heap.iter() {
            bound = fold_residual(objective, bound, item.node.bound);
        }
        if let Some(u) = unresolved {
            bound = fold_residual(objective, bound, u);
        }
        bound
    };

    while let Some(item) = heap.pop() {
        let node = item.node;

        // Best-first order: once the best remaining inherited bound is on
        // the safe side, every remaining region is certified.
        if node.bound.is_finite() && is_safe(objective, node.bound) {
            certified = fold_residual(objective, certified, node.bound);
            for rest in heap.iter() {
                certified = fold_residual(objective, certified, rest.node.bound);
            }
            heap.clear();
            break;
        }

        if nodes >= cfg.max_nodes || start.elapsed() >= cfg.timeout {
            let mut bound = drain_bound(&heap, certified, unresolved);
            bound = fold_residual(objective, bound, node.bound);
            return Ok(report(
                Verdict::Inconclusive {
                    certified_bound: bound,
                    best_candidate,
                },
                nodes,
            ));
        }
        nodes += 1;

        let prior = if cfg.monotone_refinement {
            node.cached_bounds.as_deref()
        } else {
            None
        };
        let pass = forward_pass(&problem.network, &node.region, &cfg.fresh, prior)?;
        let mut bound = region_bound(&pass, objective)?;
        if cfg.monotone_refinement && node.bound.is_finite() {
            // Child bounds never loosen past the parent's.
            bound = if maximizing {
                bound.min(node.bound)
            } else {
                bound.max(node.bound)
            };
        }

        let x = candidate_point(&pass, &node.region, objective, cfg.candidate_rule)?;
        let y = problem.network.eval(&x);
        let value = objective.violation(&y);
        best_candidate = if maximizing {
            best_candidate.max(value)
        } else {
            best_candidate.min(value)
        };
        if objective.is_violated(value) {
            return Ok(report(
                Verdict::Sat {
                    counterexample: x,
                    value,
                },
                nodes,
            ));
        }

        if is_safe(objective, bound) {
            certified = fold_residual(objective, certified, bound);
            continue;
        }

        if (0..node.region.dim()).all(|i| node.region.width(i) < MIN_SPLIT_WIDTH) {
            // Too small to split, bound still on the unsafe side: finalize
            // by bound, downgrade the final verdict to inconclusive.
            unresolved = Some(match unresolved {
                Some(u) => fold_residual(objective, u, bound),
                None => bound,
            });
            continue;
        }

        let dim = choose_split(&pass, &node.region, cfg.split_rule)?;
        let (left, right) = bisect(&node.region, dim)?;
        let cached = if cfg.monotone_refinement {
            Some(pass.pre_bounds.clone())
        } else {
            None
        };
        for region in [left, right] {
            seq += 1;
            heap.push(QueueItem {
                key: key_of(bound),
                node: SubProblem {
                    region,
                    cached_bounds: cached.clone(),
                    bound,
                    seq,
                },
            });
        }
    }

    if let Some(u) = unresolved {
        let bound = fold_residual(objective, certified, u);
        return Ok(report(
            Verdict::Inconclusive {
                certified_bound: bound,
                best_candidate,
            },
            nodes,
        ));
    }
    Ok(report(Verdict::Unsat { bound: certified }, nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::{Layer, Network};
    use crate::relaxation::UnstableNeuron;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    fn unit_box(dim: usize) -> Hyperrectangle {
        Hyperrectangle::new(Array1::from_elem(dim, -1.0), Array1::from_elem(dim, 1.0)).unwrap()
    }

    /// f(x) = relu(x) presented as a two-layer network.
    fn relu_net() -> Network {
        Network::new(vec![
            Layer {
                weights: arr2(&[[1.0]]),
                bias: arr1(&[0.0]),
            },
            Layer {
                weights: arr2(&[[1.0]]),
                bias: arr1(&[0.0]),
            },
        ])
        .unwrap()
    }

    fn pass_on(net: &Network, h: &Hyperrectangle) -> PassResult {
        forward_pass(net, h, &FreshVarConfig::default(), None).unwrap()
    }

    #[test]
    fn smear_direct_example() {
        let net = relu_net();
        let mut pass = pass_on(&net, &unit_box(1));
        pass.unstable = vec![UnstableNeuron {
            layer: 0,
            neuron: 0,
            low_coeffs: arr1(&[0.5, 0.0]),
            up_coeffs: arr1(&[1.0, 0.25]),
        }];
        let region = Hyperrectangle::new(arr1(&[0.0, 0.0]), arr1(&[2.0, 4.0])).unwrap();
        let s = smear_scores(&pass, &region);
        assert_abs_diff_eq!(s[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 0.5, epsilon = 1e-12);
        assert_eq!(choose_split(&pass, &region, SplitRule::SmearFV).unwrap(), 0);
    }

    #[test]
    fn smear_zero_without_unstable_neurons() {
        let net = relu_net();
        let h = Hyperrectangle::new(arr1(&[0.5]), arr1(&[2.0])).unwrap();
        let pass = pass_on(&net, &h);
        assert!(pass.unstable.is_empty());
        assert_eq!(smear_scores(&pass, &h), arr1(&[0.0]));
    }

    #[test]
    fn smear_fixed_dimension_scores_zero() {
        let net = relu_net();
        let mut pass = pass_on(&net, &unit_box(1));
        pass.unstable = vec![UnstableNeuron {
            layer: 0,
            neuron: 0,
            low_coeffs: arr1(&[1.0, 1.0]),
            up_coeffs: arr1(&[1.0, 1.0]),
        }];
        let region = Hyperrectangle::new(arr1(&[2.0, 0.0]), arr1(&[2.0, 1.0])).unwrap();
        assert_eq!(smear_scores(&pass, &region)[0], 0.0);
    }

    #[test]
    fn split_fallback_and_ties() {
        let net = relu_net();
        let mut pass = pass_on(&net, &unit_box(1));
        pass.unstable.clear();
        let region = Hyperrectangle::new(arr1(&[0.0, 0.0]), arr1(&[1.0, 3.0])).unwrap();
        assert_eq!(choose_split(&pass, &region, SplitRule::SmearFV).unwrap(), 1);
        let tied = Hyperrectangle::new(arr1(&[0.0, 0.0]), arr1(&[2.0, 2.0])).unwrap();
        assert_eq!(choose_split(&pass, &tied, SplitRule::WidestInput).unwrap(), 0);
        let point = Hyperrectangle::new(arr1(&[1.0]), arr1(&[1.0])).unwrap();
        assert!(matches!(
            choose_split(&pass, &point, SplitRule::WidestInput),
            Err(OptimizerError::AllDegenerate)
        ));
    }

    #[test]
    fn bisection() {
        let (a, b) = bisect(&unit_box(1), 0).unwrap();
        assert_eq!((a.lo[0], a.hi[0]), (-1.0, 0.0));
        assert_eq!((b.lo[0], b.hi[0]), (0.0, 1.0));
        let r = Hyperrectangle::new(arr1(&[0.0, 0.0]), arr1(&[4.0, 2.0])).unwrap();
        let (a, b) = bisect(&r, 1).unwrap();
        assert_eq!((a.lo[1], a.hi[1]), (0.0, 1.0));
        assert_eq!((b.lo[1], b.hi[1]), (1.0, 2.0));
        assert_eq!(a.width(1), r.width(1) / 2.0);
        let point = Hyperrectangle::new(arr1(&[1.0]), arr1(&[1.0])).unwrap();
        assert!(matches!(
            bisect(&point, 0),
            Err(OptimizerError::ZeroWidth { dim: 0 })
        ));
    }

    #[test]
    fn candidate_from_symbolic_coefficients() {
        // Output upper bound has coefficients (1, 0) after the pass; the
        // candidate pins x1 to its maximum and centers x2.
        let net = Network::new(vec![
            Layer {
                weights: arr2(&[[1.0, 0.0], [0.0, 1.0]]),
                bias: arr1(&[2.0, 2.0]),
            },
            Layer {
                weights: arr2(&[[1.0, 0.0]]),
                bias: arr1(&[0.0]),
            },
        ])
        .unwrap();
        let h = unit_box(2);
        let pass = pass_on(&net, &h);
        let obj = Objective::MaxViolation {
            c: arr1(&[1.0]),
            b: 0.0,
        };
        let x = candidate_point(&pass, &h, &obj, CandidateRule::SymbolicArgmax).unwrap();
        assert_eq!(x, arr1(&[1.0, 0.0]));
        assert!(h.contains(&x));
    }

    #[test]
    fn candidate_center() {
        let net = relu_net();
        let region = Hyperrectangle::new(arr1(&[0.0, 0.0]), arr1(&[4.0, 2.0])).unwrap();
        let pass = pass_on(&net, &unit_box(1));
        let obj = Objective::MaxViolation {
            c: arr1(&[1.0]),
            b: 0.0,
        };
        let x = candidate_point(&pass, &region, &obj, CandidateRule::CenterSample).unwrap();
        assert_eq!(x, arr1(&[2.0, 1.0]));
    }

    #[test]
    fn region_bound_exact_affine() {
        // relu(x) is fixed-active on [0.25, 1]: bound is the exact maximum 1.
        let net = relu_net();
        let h = Hyperrectangle::new(arr1(&[0.25]), arr1(&[1.0])).unwrap();
        let pass = pass_on(&net, &h);
        let obj = Objective::MaxViolation {
            c: arr1(&[1.0]),
            b: 0.0,
        };
        assert_abs_diff_eq!(region_bound(&pass, &obj).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn region_bound_worked_node() {
        // Hidden layer mirrors the worked two-neuron node; the objective is
        // the first (only) output: certified upper bound 2.5.
        let net = Network::new(vec![
            Layer {
                weights: arr2(&[[0.5, 0.5], [0.5, -0.5]]),
                bias: arr1(&[1.0, 1.0]),
            },
            Layer {
                weights: arr2(&[[1.0, 1.0]]),
                bias: arr1(&[-0.5]),
            },
        ])
        .unwrap();
        let pass = pass_on(&net, &unit_box(2));
        let obj = Objective::MaxViolation {
            c: arr1(&[1.0]),
            b: 0.0,
        };
        assert_abs_diff_eq!(region_bound(&pass, &obj).unwrap(), 2.5, epsilon = 1e-9);
    }

    fn problem(net: Network, h: Hyperrectangle, obj: Objective) -> VerificationProblem {
        VerificationProblem::new(net, h, obj, "test").unwrap()
    }

    #[test]
    fn solve_unsat_at_root() {
        let p = problem(
            relu_net(),
            unit_box(1),
            Objective::MaxViolation {
                c: arr1(&[1.0]),
                b: -2.0,
            },
        );
        let r = solve(&p, &SolverConfig::default()).unwrap();
        match r.verdict {
            Verdict::Unsat { bound } => {
                assert!(bound <= 0.0);
                assert_abs_diff_eq!(bound, -1.0, epsilon = 1e-9);
            }
            other => panic!("expected UNSAT, got {other:?}"),
        }
        assert_eq!(r.nodes, 1);
    }

    #[test]
    fn solve_sat_immediately() {
        let p = problem(
            relu_net(),
            unit_box(1),
            Objective::MaxViolation {
                c: arr1(&[1.0]),
                b: 0.0,
            },
        );
        let r = solve(&p, &SolverConfig::default()).unwrap();
        match r.verdict {
            Verdict::Sat {
                counterexample,
                value,
            } => {
                assert_eq!(counterexample, arr1(&[1.0]));
                assert_abs_diff_eq!(value, 1.0, epsilon = 1e-12);
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn solve_polytope_modes() {
        // Output (y1, y2) = (relu(x), relu(-x)). Polytope {y1 <= 0 and
        // y2 <= 0} is hit exactly at x = 0.
        let net = Network::new(vec![
            Layer {
                weights: arr2(&[[1.0], [-1.0]]),
                bias: arr1(&[0.0, 0.0]),
            },
            Layer {
                weights: arr2(&[[1.0, 0.0], [0.0, 1.0]]),
                bias: arr1(&[0.0, 0.0]),
            },
        ])
        .unwrap();
        let reachable = problem(
            net.clone(),
            unit_box(1),
            Objective::PolytopeAvoid {
                constraints: vec![(arr1(&[1.0, 0.0]), 0.0), (arr1(&[0.0, 1.0]), 0.0)],
            },
        );
        let r = solve(&reachable, &SolverConfig::default()).unwrap();
        assert!(matches!(r.verdict, Verdict::Sat { .. }));

        // Shifting the polytope to y1 <= -1 and y2 <= -1 makes it
        // unreachable: outputs are nonnegative.
        let avoided = problem(
            net,
            unit_box(1),
            Objective::PolytopeAvoid {
                constraints: vec![(arr1(&[1.0, 0.0]), 1.0), (arr1(&[0.0, 1.0]), 1.0)],
            },
        );
        let r = solve(&avoided, &SolverConfig::default()).unwrap();
        match r.verdict {
            Verdict::Unsat { bound } => assert!(bound > 0.0),
            other => panic!("expected UNSAT, got {other:?}"),
        }
    }

    #[test]
    fn solve_inconclusive_on_node_budget() {
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (2, 2),
            layers: (4, 4),
            width: (10, 10),
            weight_scale: 2.0,
            seed: 5,
        });
        let mut obj_c = Array1::zeros(net.output_dim());
        obj_c[0] = 1.0;
        // A large positive offset the solver cannot certify or refute fast.
        let p = problem(
            net,
            unit_box(2),
            Objective::MaxViolation {
                c: obj_c,
                b: -1e6,
            },
        );
        let cfg = SolverConfig {
            max_nodes: 1,
            ..Default::default()
        };
        let r = solve(&p, &cfg).unwrap();
        match r.verdict {
            Verdict::Inconclusive {
                certified_bound, ..
            } => assert!(certified_bound.is_finite()),
            Verdict::Unsat { .. } => {} // bound may already certify at root
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic_reports() {
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (2, 2),
            layers: (3, 3),
            width: (8, 8),
            weight_scale: 1.5,
            seed: 17,
        });
        let mut c = Array1::zeros(net.output_dim());
        c[0] = 1.0;
        let p = problem(net, unit_box(2), Objective::MaxViolation { c, b: -0.5 });
        let cfg = SolverConfig::default();
        let a = solve(&p, &cfg).unwrap();
        let b = solve(&p, &cfg).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.nodes, b.nodes);
    }
}
