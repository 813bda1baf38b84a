//! ReLU layer propagation: separate adaptive relaxations, fresh-variable
//! budgeting and placement, and the full symbolic forward pass.

use ndarray::Array1;

use crate::model_io::{Hyperrectangle, Network};
use crate::symbolic::{
    affine_transform, substitute_side, substituted_maps, AffineMap, BoundSide, ConcreteBounds,
    FreshVar, SymbolicError, SymbolicIntervalFV,
};

/// Below this width the chord slope of the upper relaxation is numerically
/// meaningless; the bound function is treated as constant instead.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// How many fresh variables to allot per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    /// Per-layer cap `floor(lambda * n_l)` with `n_l` the non-fixed-zero
    /// neuron count, plus a global `max_total` cap.
    LayerFraction,
    /// Earliest-possible placement up to `sum_l floor(N_l / l)` unstable
    /// neurons, `N_l` counting the unstable neurons of layer `l`.
    DepthAllowance,
    /// No fresh variables (plain symbolic interval propagation).
    None,
}

/// Which unstable neurons get the fresh variables of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorityRule {
    /// Largest concrete pre-activation range first, ties to the lower index.
    ConcreteRange,
    /// First unstable neurons by index.
    EarliestFirst,
}

/// Fresh-variable policy for a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreshVarConfig {
    pub max_total: usize,
    pub lambda: f64,
    pub budget_rule: BudgetRule,
    pub priority_rule: PriorityRule,
    pub forbid_last_hidden: bool,
}

impl Default for FreshVarConfig {
    fn default() -> Self {
        FreshVarConfig {
            max_total: 20,
            lambda: 0.5,
            budget_rule: BudgetRule::LayerFraction,
            priority_rule: PriorityRule::ConcreteRange,
            forbid_last_hidden: true,
        }
    }
}

impl FreshVarConfig {
    /// Plain symbolic interval propagation, no fresh variables.
    pub fn disabled() -> Self {
        FreshVarConfig {
            budget_rule: BudgetRule::None,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    FixedActive,
    FixedZero,
    Unstable,
}

/// Classification of one neuron from the concrete enclosures of its two
/// symbolic pre-activation bound functions, after refinement against any
/// parent bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronStatus {
    pub phase: Phase,
    /// Refined concrete pre-activation enclosure `[l, u]`.
    pub pre: (f64, f64),
    /// Enclosure `[l_l, l_u]` of the symbolic lower bound function.
    pub low_range: (f64, f64),
    /// Enclosure `[u_l, u_u]` of the symbolic upper bound function.
    pub up_range: (f64, f64),
}

impl NeuronStatus {
    pub fn range(&self) -> f64 {
        self.pre.1 - self.pre.0
    }
}

/// Input-substituted pre-activation coefficients of one unstable neuron;
/// input to the smear splitting heuristic.
#[derive(Debug, Clone)]
pub struct UnstableNeuron {
    pub layer: usize,
    pub neuron: usize,
    pub low_coeffs: Array1<f64>,
    pub up_coeffs: Array1<f64>,
}

/// Everything produced by one symbolic forward pass.
#[derive(Debug, Clone)]
pub struct PassResult {
    /// Symbolic interval of the network outputs.
    pub output: SymbolicIntervalFV,
    /// Refined pre-activation bounds per layer (hidden layers and output).
    pub pre_bounds: Vec<ConcreteBounds>,
    /// Per hidden layer neuron statuses.
    pub statuses: Vec<Vec<NeuronStatus>>,
    /// All unstable neurons, with input-substituted coefficients.
    pub unstable: Vec<UnstableNeuron>,
    /// (layer, neuron) of every introduced fresh variable.
    pub fresh_placements: Vec<(usize, usize)>,
}

impl PassResult {
    /// Concrete bounds of the network outputs.
    pub fn output_bounds(&self) -> &ConcreteBounds {
        self.pre_bounds.last().unwrap()
    }
}

/// Apply ReLU relaxations row by row.
///
/// Fixed-zero rows become the constant 0, fixed-active rows pass through.
/// Unstable rows relax each bound function separately over its own concrete
/// range: the upper bound through the chord of ReLU over `[u_l, u_u]`, the
/// lower bound through the area-minimizing choice of 0 or the identity.
pub fn relu_relax(s: &SymbolicIntervalFV, statuses: &[NeuronStatus]) -> SymbolicIntervalFV {
    assert_eq!(s.rows(), statuses.len());
    let mut out = s.clone();
    for (r, st) in statuses.iter().enumerate() {
        match st.phase {
            Phase::FixedActive => {}
            Phase::FixedZero => {
                zero_row(&mut out.low, r);
                zero_row(&mut out.up, r);
            }
            Phase::Unstable => {
                relax_lower_row(&mut out.low, r, st.low_range);
                relax_upper_row(&mut out.up, r, st.up_range);
            }
        }
    }
    out
}

fn zero_row(map: &mut AffineMap, r: usize) {
    map.coeffs.row_mut(r).fill(0.0);
    map.offset[r] = 0.0;
}

fn constant_row(map: &mut AffineMap, r: usize, v: f64) {
    map.coeffs.row_mut(r).fill(0.0);
    map.offset[r] = v;
}

fn scale_row(map: &mut AffineMap, r: usize, slope: f64, intercept: f64) {
    map.coeffs.row_mut(r).mapv_inplace(|c| c * slope);
    map.offset[r] = map.offset[r] * slope + intercept;
}

fn relax_lower_row(map: &mut AffineMap, r: usize, (l_l, l_u): (f64, f64)) {
    if l_l >= 0.0 {
        // ReLU is the identity on the whole range of the bound function.
    } else if l_u <= 0.0 {
        zero_row(map, r);
    } else if l_u < -l_l {
        // Adaptive choice: the zero relaxation has smaller area.
        zero_row(map, r);
    }
    // else: keep the identity relaxation.
}

fn relax_upper_row(map: &mut AffineMap, r: usize, (u_l, u_u): (f64, f64)) {
    if u_l >= 0.0 {
        // Monotonicity: ReLU passes the bound through unchanged.
    } else if u_u <= 0.0 {
        zero_row(map, r);
    } else if u_u - u_l < DEGENERATE_WIDTH {
        constant_row(map, r, u_u.max(0.0));
    } else {
        let slope = u_u / (u_u - u_l);
        let intercept = -u_u * u_l / (u_u - u_l);
        scale_row(map, r, slope, intercept);
    }
}

/// Fresh-variable budget for one layer.
///
/// `remaining_total` is the number of fresh variables the pass may still
/// introduce under the active rule.
pub fn layer_budget(
    cfg: &FreshVarConfig,
    statuses: &[NeuronStatus],
    remaining_total: usize,
    is_last_hidden: bool,
) -> usize {
    match cfg.budget_rule {
        BudgetRule::None => 0,
        BudgetRule::LayerFraction => {
            if cfg.forbid_last_hidden && is_last_hidden {
                return 0;
            }
            let n_l = statuses
                .iter()
                .filter(|s| s.phase != Phase::FixedZero)
                .count();
            let per_layer = (cfg.lambda * n_l as f64).floor() as usize;
            per_layer.min(remaining_total)
        }
        BudgetRule::DepthAllowance => {
            let unstable = statuses
                .iter()
                .filter(|s| s.phase == Phase::Unstable)
                .count();
            unstable.min(remaining_total)
        }
    }
}

/// The total fresh-variable allowance of the original earliest-first rule:
/// `sum_l floor(N_l / l)` over 1-based layer indices.
pub fn depth_allowance_total(unstable_per_layer: &[usize]) -> usize {
    unstable_per_layer
        .iter()
        .enumerate()
        .map(|(i, &n)| n / (i + 1))
        .sum()
}

/// Pick the neurons that receive fresh variables. Only unstable neurons are
/// eligible; at most `budget` are returned.
pub fn select_fresh(
    statuses: &[NeuronStatus],
    budget: usize,
    priority: PriorityRule,
) -> Vec<usize> {
    let mut unstable: Vec<usize> = statuses
        .iter()
        .enumerate()
        .filter(|(_, s)| s.phase == Phase::Unstable)
        .map(|(i, _)| i)
        .collect();
    match priority {
        PriorityRule::EarliestFirst => {}
        PriorityRule::ConcreteRange => {
            // Stable sort keeps the lower index first among equal ranges.
            unstable.sort_by(|&a, &b| {
                statuses[b]
                    .range()
                    .partial_cmp(&statuses[a].range())
                    .unwrap()
            });
        }
    }
    unstable.truncate(budget);
    unstable
}

/// Replace the bounds of the selected rows by fresh variables.
///
/// Each selected row's current bounds are substituted to input-only form and
/// stored in the table together with their concrete range; the row itself
/// becomes the degenerate interval `[x_new, x_new]`.
pub fn introduce_fresh(s: &SymbolicIntervalFV, rows: &[usize]) -> SymbolicIntervalFV {
    if rows.is_empty() {
        return s.clone();
    }
    let (subst_low, subst_up) = substituted_maps(s);
    let mut out = s.clone();
    for &r in rows {
        let (lo, _) = subst_low.row_range(r, &s.domain);
        let (_, hi) = subst_up.row_range(r, &s.domain);
        out.fresh.push(FreshVar {
            lb_coeffs: subst_low.coeffs.row(r).to_owned(),
            lb_offset: subst_low.offset[r],
            ub_coeffs: subst_up.coeffs.row(r).to_owned(),
            ub_offset: subst_up.offset[r],
            lo,
            hi,
        });
        append_zero_column(&mut out.low);
        append_zero_column(&mut out.up);
        let new_col = out.low.vars() - 1;
        unit_row(&mut out.low, r, new_col);
        unit_row(&mut out.up, r, new_col);
    }
    out
}

fn append_zero_column(map: &mut AffineMap) {
    let rows = map.rows();
    map.coeffs
        .push_column(Array1::<f64>::zeros(rows).view())
        .unwrap();
}

fn unit_row(map: &mut AffineMap, r: usize, col: usize) {
    map.coeffs.row_mut(r).fill(0.0);
    map.coeffs[[r, col]] = 1.0;
    map.offset[r] = 0.0;
}

/// One full symbolic forward pass through the network.
///
/// `prior_bounds`, when given, are valid pre-activation enclosures from a
/// parent region; every freshly computed enclosure is intersected with them
/// before statuses are derived, so bounds never loosen after a split.
pub fn forward_pass(
    net: &Network,
    domain: &Hyperrectangle,
    cfg: &FreshVarConfig,
    prior_bounds: Option<&[ConcreteBounds]>,
) -> Result<PassResult, SymbolicError> {
    if domain.dim() != net.input_dim() {
        return Err(SymbolicError::DimensionMismatch {
            expected: net.input_dim(),
            got: domain.dim(),
        });
    }
    let num_layers = net.num_layers();
    let mut s = crate::symbolic::init_identity(domain.clone());
    let mut pre_bounds = Vec::with_capacity(num_layers);
    let mut statuses = Vec::with_capacity(num_layers - 1);
    let mut unstable = Vec::new();
    let mut fresh_placements = Vec::new();

    // Budget state. For the earliest-first rule the allowance accrues layer
    // by layer as unstable neurons are seen.
    let mut remaining = match cfg.budget_rule {
        BudgetRule::LayerFraction => cfg.max_total,
        _ => 0,
    };
    let mut introduced_total = 0usize;

    for (li, layer) in net.layers.iter().enumerate() {
        s = affine_transform(&layer.weights, &layer.bias, &s)?;
        let (subst_low, subst_up) = substituted_maps(&s);
        // Each bound function's full range needs substitutions from both
        // sides: the matching side for the outer endpoint, the opposite one
        // for the inner (e.g. the minimum the upper bound can reach).
        let low_above = substitute_side(&s, BoundSide::Lower, BoundSide::Upper);
        let up_below = substitute_side(&s, BoundSide::Upper, BoundSide::Lower);
        let rows = s.rows();

        let mut layer_status = Vec::with_capacity(rows);
        let mut lo = Array1::<f64>::zeros(rows);
        let mut hi = Array1::<f64>::zeros(rows);
        for r in 0..rows {
            let (mut l_l, _) = subst_low.row_range(r, &s.domain);
            let (_, mut l_u) = low_above.row_range(r, &s.domain);
            let (mut u_l, _) = up_below.row_range(r, &s.domain);
            let (_, mut u_u) = subst_up.row_range(r, &s.domain);
            if let Some(prior) = prior_bounds {
                // Monotone refinement: the true value also satisfies the
                // parent's enclosure, so the outer endpoints may shrink.
                l_l = l_l.max(prior[li].lo[r]);
                u_u = u_u.min(prior[li].hi[r]);
                l_u = l_u.max(l_l);
                u_l = u_l.min(u_u);
            }
            lo[r] = l_l;
            hi[r] = u_u;
            let phase = if l_l >= 0.0 {
                Phase::FixedActive
            } else if u_u <= 0.0 {
                Phase::FixedZero
            } else {
                Phase::Unstable
            };
            layer_status.push(NeuronStatus {
                phase,
                pre: (l_l, u_u),
                low_range: (l_l, l_u),
                up_range: (u_l, u_u),
            });
        }
        pre_bounds.push(ConcreteBounds { lo, hi });

        if li == num_layers - 1 {
            break; // linear output layer: no ReLU, no fresh variables
        }

        for (r, st) in layer_status.iter().enumerate() {
            if st.phase == Phase::Unstable {
                unstable.push(UnstableNeuron {
                    layer: li,
                    neuron: r,
                    low_coeffs: subst_low.coeffs.row(r).to_owned(),
                    up_coeffs: subst_up.coeffs.row(r).to_owned(),
                });
            }
        }

        s = relu_relax(&s, &layer_status);

        if cfg.budget_rule == BudgetRule::DepthAllowance {
            let n_unstable = layer_status
                .iter()
                .filter(|s| s.phase == Phase::Unstable)
                .count();
            remaining += n_unstable / (li + 1);
            remaining = remaining.min(cfg.max_total - introduced_total);
        }
        let budget = layer_budget(
            cfg,
            &layer_status,
            remaining,
            li + 2 == num_layers,
        );
        let picked = select_fresh(&layer_status, budget, cfg.priority_rule);
        if !picked.is_empty() {
            s = introduce_fresh(&s, &picked);
            remaining -= picked.len();
            introduced_total += picked.len();
            fresh_placements.extend(picked.into_iter().map(|r| (li, r)));
        }

        statuses.push(layer_status);
    }

    Ok(PassResult {
        output: s,
        pre_bounds,
        statuses,
        unstable,
        fresh_placements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::Layer;
    use crate::symbolic::{concretize, init_identity, substitute_to_inputs, BoundSide};
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, Array2};

    fn unit_box(dim: usize) -> Hyperrectangle {
        Hyperrectangle::new(Array1::from_elem(dim, -1.0), Array1::from_elem(dim, 1.0)).unwrap()
    }

    fn status(phase: Phase, low: (f64, f64), up: (f64, f64)) -> NeuronStatus {
        NeuronStatus {
            phase,
            pre: (low.0, up.1),
            low_range: low,
            up_range: up,
        }
    }

    #[test]
    fn fixed_active_passthrough() {
        let s = init_identity(Hyperrectangle::new(arr1(&[0.5]), arr1(&[2.0])).unwrap());
        let st = [status(Phase::FixedActive, (0.5, 2.0), (0.5, 2.0))];
        assert_eq!(relu_relax(&s, &st), s);
    }

    #[test]
    fn fixed_zero_clamps() {
        let s = init_identity(Hyperrectangle::new(arr1(&[-2.0]), arr1(&[-0.5])).unwrap());
        let st = [status(Phase::FixedZero, (-2.0, -0.5), (-2.0, -0.5))];
        let out = relu_relax(&s, &st);
        assert_eq!(out.low.coeffs[[0, 0]], 0.0);
        assert_eq!(out.up.coeffs[[0, 0]], 0.0);
        assert_eq!(out.up.offset[0], 0.0);
    }

    #[test]
    fn unstable_chord_and_adaptive_identity() {
        // ub(x) = x over [-1, 1]: chord is 0.5 x + 0.5.
        // lb(x) = x with l_u = 1 = |l_l|: identity branch keeps x.
        let s = init_identity(unit_box(1));
        let st = [status(Phase::Unstable, (-1.0, 1.0), (-1.0, 1.0))];
        let out = relu_relax(&s, &st);
        assert_abs_diff_eq!(out.up.coeffs[[0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.up.offset[0], 0.5, epsilon = 1e-12);
        assert_eq!(out.low.coeffs[[0, 0]], 1.0);
        assert_eq!(out.low.offset[0], 0.0);
    }

    #[test]
    fn unstable_adaptive_zero_branch() {
        // lb range [-2, 1]: zero area wins (1 < |-2|).
        let h = Hyperrectangle::new(arr1(&[-2.0]), arr1(&[1.0])).unwrap();
        let s = init_identity(h);
        let st = [status(Phase::Unstable, (-2.0, 1.0), (-2.0, 1.0))];
        let out = relu_relax(&s, &st);
        assert_eq!(out.low.coeffs[[0, 0]], 0.0);
        assert_eq!(out.low.offset[0], 0.0);
    }

    #[test]
    fn relaxation_contains_relu_on_grid() {
        let h = Hyperrectangle::new(arr1(&[-1.5]), arr1(&[2.5])).unwrap();
        let s = init_identity(h.clone());
        let st = [status(Phase::Unstable, (-1.5, 2.5), (-1.5, 2.5))];
        let out = relu_relax(&s, &st);
        for i in 0..=100 {
            let v = -1.5 + 4.0 * i as f64 / 100.0;
            let low = out.low.coeffs[[0, 0]] * v + out.low.offset[0];
            let up = out.up.coeffs[[0, 0]] * v + out.up.offset[0];
            let relu = v.max(0.0);
            assert!(low <= relu + 1e-12 && relu <= up + 1e-12);
        }
    }

    #[test]
    fn budget_dpnfv() {
        let cfg = FreshVarConfig::default();
        let mut statuses = vec![status(Phase::Unstable, (-1.0, 1.0), (-1.0, 1.0)); 40];
        statuses.extend(vec![status(Phase::FixedZero, (-1.0, -0.5), (-1.0, -0.5)); 10]);
        assert_eq!(layer_budget(&cfg, &statuses, 100, false), 20);
        assert_eq!(layer_budget(&cfg, &statuses, 5, false), 5);
        assert_eq!(layer_budget(&cfg, &statuses, 100, true), 0);
        let zero = FreshVarConfig {
            lambda: 0.0,
            ..cfg
        };
        assert_eq!(layer_budget(&zero, &statuses, 100, false), 0);
    }

    #[test]
    fn depth_allowance_totals() {
        assert_eq!(depth_allowance_total(&[10, 8, 6]), 16);
        assert_eq!(depth_allowance_total(&[]), 0);
    }

    #[test]
    fn selection_by_range_and_ties() {
        let mk = |lo: f64, hi: f64| status(Phase::Unstable, (lo, hi), (lo, hi));
        let statuses = vec![mk(-1.0, 2.0), mk(-2.0, 3.0), mk(-0.5, 0.5)];
        assert_eq!(
            select_fresh(&statuses, 2, PriorityRule::ConcreteRange),
            vec![1, 0]
        );
        assert_eq!(select_fresh(&statuses, 0, PriorityRule::ConcreteRange), Vec::<usize>::new());
        let tied = vec![mk(-1.0, 1.0), mk(-1.0, 1.0)];
        assert_eq!(select_fresh(&tied, 1, PriorityRule::ConcreteRange), vec![0]);
        assert_eq!(select_fresh(&statuses, 2, PriorityRule::EarliestFirst), vec![0, 1]);
    }

    #[test]
    fn only_unstable_selected() {
        let statuses = vec![
            status(Phase::FixedActive, (0.5, 2.0), (0.5, 2.0)),
            status(Phase::Unstable, (-1.0, 1.0), (-1.0, 1.0)),
        ];
        assert_eq!(select_fresh(&statuses, 5, PriorityRule::ConcreteRange), vec![1]);
    }

    #[test]
    fn introduction_stores_bounds_and_inverts() {
        // Row with bounds [0, 0.5 x1 - 0.5 x2 + 1] over [-1,1]^2.
        let mut s = init_identity(unit_box(2));
        s.low = AffineMap {
            coeffs: arr2(&[[0.0, 0.0], [0.0, 0.0]]),
            offset: arr1(&[0.0, 0.0]),
        };
        s.up = AffineMap {
            coeffs: arr2(&[[0.5, 0.5], [0.5, -0.5]]),
            offset: arr1(&[1.0, 1.0]),
        };
        let out = introduce_fresh(&s, &[1]);
        assert_eq!(out.var_count(), 1);
        assert_eq!(out.low.vars(), 3);
        assert_eq!(out.low.coeffs[[1, 2]], 1.0);
        assert_eq!(out.up.coeffs[[1, 2]], 1.0);
        assert_eq!(out.fresh[0].ub_coeffs, arr1(&[0.5, -0.5]));
        assert_eq!(out.fresh[0].ub_offset, 1.0);
        assert_eq!(out.fresh[0].lo, 0.0);
        assert_abs_diff_eq!(out.fresh[0].hi, 2.0, epsilon = 1e-12);
        // Substitution recovers the original bounds for that row.
        let back = substitute_to_inputs(&out);
        assert_abs_diff_eq!(back.up.coeffs[[1, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(back.up.coeffs[[1, 1]], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(back.up.offset[1], 1.0, epsilon = 1e-12);
        assert_eq!(back.low.offset[1], 0.0);
    }

    #[test]
    fn double_introduction_grows_two_columns() {
        let mut s = init_identity(unit_box(2));
        s.low = AffineMap {
            coeffs: Array2::zeros((2, 2)),
            offset: arr1(&[0.0, 0.0]),
        };
        let out = introduce_fresh(&s, &[0, 1]);
        assert_eq!(out.var_count(), 2);
        assert_eq!(out.low.vars(), 4);
        assert_eq!(out.up.vars(), 4);
    }

    fn all_active_net() -> Network {
        // Large positive biases keep every neuron fixed-active on [-1,1]^2.
        Network::new(vec![
            Layer {
                weights: arr2(&[[1.0, 0.5], [-0.5, 1.0]]),
                bias: arr1(&[10.0, 10.0]),
            },
            Layer {
                weights: arr2(&[[1.0, -1.0]]),
                bias: arr1(&[0.0]),
            },
        ])
        .unwrap()
    }

    #[test]
    fn affine_network_is_exact() {
        let net = all_active_net();
        let h = unit_box(2);
        let pass = forward_pass(&net, &h, &FreshVarConfig::default(), None).unwrap();
        let out = pass.output_bounds();
        // Corner enumeration of the affine composite.
        let mut exact_lo = f64::INFINITY;
        let mut exact_hi = f64::NEG_INFINITY;
        for &a in &[-1.0, 1.0] {
            for &b in &[-1.0, 1.0] {
                let y = net.eval(&arr1(&[a, b]))[0];
                exact_lo = exact_lo.min(y);
                exact_hi = exact_hi.max(y);
            }
        }
        assert_abs_diff_eq!(out.lo[0], exact_lo, epsilon = 1e-9);
        assert_abs_diff_eq!(out.hi[0], exact_hi, epsilon = 1e-9);
    }

    #[test]
    fn refinement_with_own_bounds_is_idempotent() {
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (2, 2),
            layers: (3, 3),
            width: (6, 6),
            weight_scale: 1.0,
            seed: 7,
        });
        let h = unit_box(2);
        let cfg = FreshVarConfig::default();
        let first = forward_pass(&net, &h, &cfg, None).unwrap();
        let second = forward_pass(&net, &h, &cfg, Some(&first.pre_bounds)).unwrap();
        for (a, b) in first.pre_bounds.iter().zip(&second.pre_bounds) {
            assert_eq!(a, b);
        }
        assert_eq!(first.output, second.output);
    }

    #[test]
    fn lambda_zero_equals_disabled_rule() {
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (3, 3),
            layers: (3, 3),
            width: (8, 8),
            weight_scale: 1.5,
            seed: 21,
        });
        let h = unit_box(3);
        let a = forward_pass(
            &net,
            &h,
            &FreshVarConfig {
                lambda: 0.0,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let b = forward_pass(&net, &h, &FreshVarConfig::disabled(), None).unwrap();
        assert_eq!(a.output, b.output);
        assert_eq!(a.pre_bounds, b.pre_bounds);
        assert!(a.fresh_placements.is_empty());
    }

    #[test]
    fn fresh_accounting_respects_caps() {
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (3, 3),
            layers: (4, 4),
            width: (10, 10),
            weight_scale: 2.0,
            seed: 3,
        });
        let cfg = FreshVarConfig {
            max_total: 7,
            ..Default::default()
        };
        let pass = forward_pass(&net, &unit_box(3), &cfg, None).unwrap();
        assert!(pass.fresh_placements.len() <= 7);
        assert_eq!(pass.output.var_count(), pass.fresh_placements.len());
        // None in the last hidden layer under the default config.
        let last_hidden = net.num_layers() - 2;
        assert!(pass.fresh_placements.iter().all(|&(l, _)| l != last_hidden));
    }

    #[test]
    fn pass_bounds_contain_sampled_values() {
        use rand::{Rng, SeedableRng};
        let net = crate::testkit::gen_network(&crate::testkit::GenSpec {
            input_dim: (2, 2),
            layers: (3, 3),
            width: (8, 8),
            weight_scale: 1.2,
            seed: 11,
        });
        let h = unit_box(2);
        let pass = forward_pass(&net, &h, &FreshVarConfig::default(), None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let x = arr1(&[rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]);
            let y = net.eval(&x);
            assert!(pass.output_bounds().contains(&y, 1e-6));
        }
    }

    #[test]
    fn split_bound_matches_worked_example() {
        // Upper bound 0.5 x1 + 0.5 x2 + 1 over [-1,1]^2 has range [0, 2].
        let mut s = init_identity(unit_box(2));
        s.up = AffineMap {
            coeffs: arr2(&[[0.5, 0.5], [0.0, 0.0]]),
            offset: arr1(&[1.0, 0.0]),
        };
        let (lo, hi) = crate::symbolic::concretize_split(&s, 0, BoundSide::Upper).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-12);
        let _ = concretize(&s);
    }
}
