//! Loading and saving of networks, verification problems and result documents.
//!
//! Networks come in the NNet text format (plain-text fully-connected ReLU
//! networks, as distributed with the ACAS Xu benchmark). Verification
//! problems are described in a small line-oriented property format pairing
//! an input hyperrectangle with a set of linear output constraints.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::optimizer::{Verdict, VerdictReport};

/// Errors raised while parsing NNet or property files.
///
/// Every variant carries the 1-based line number of the offending input line.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: cannot parse `{token}` as a number")]
    NumericParse { line: usize, token: String },
    #[error("line {line}: unexpected end of file")]
    UnexpectedEof { line: usize },
    #[error("line {line}: input dimension {dim} has no {side} bound")]
    UnboundedInput {
        line: usize,
        dim: usize,
        side: &'static str,
    },
    #[error("line {line}: property declares no output constraint")]
    EmptyObjective { line: usize },
    #[error("line {line}: multiple `out` constraints are not allowed with `mode max`")]
    ModeMismatch { line: usize },
    #[error("line {line}: malformed line: {msg}")]
    Malformed { line: usize, msg: String },
}

/// One fully-connected layer: `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }
}

/// Input normalization metadata from the NNet header.
///
/// Stored as parsed; it is only applied to input boxes when explicitly
/// requested (the `--normalize-input` CLI flag), never baked into weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    /// Means for each input plus one trailing entry for the output.
    pub means: Vec<f64>,
    /// Ranges for each input plus one trailing entry for the output.
    pub ranges: Vec<f64>,
}

impl Normalization {
    /// Normalize a raw input box: clamp to the declared input range, then
    /// shift by mean and divide by range, per dimension.
    pub fn normalize_box(&self, input: &Hyperrectangle) -> Hyperrectangle {
        let d = input.dim();
        let mut lo = input.lo.clone();
        let mut hi = input.hi.clone();
        for i in 0..d {
            let clamp = |v: f64| v.clamp(self.input_min[i], self.input_max[i]);
            lo[i] = (clamp(lo[i]) - self.means[i]) / self.ranges[i];
            hi[i] = (clamp(hi[i]) - self.means[i]) / self.ranges[i];
        }
        Hyperrectangle { lo, hi }
    }
}

/// A layered feed-forward ReLU network. All hidden layers use ReLU, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub normalization: Option<Normalization>,
}

impl Network {
    /// Build a network from layers, checking the chaining invariants.
    pub fn new(layers: Vec<Layer>) -> Result<Self, String> {
        if layers.len() < 2 {
            return Err("network needs at least one hidden layer".into());
        }
        for l in &layers {
            if l.out_dim() == 0 || l.in_dim() == 0 {
                return Err("zero-sized layer".into());
            }
            if l.bias.len() != l.out_dim() {
                return Err("bias length does not match weight rows".into());
            }
        }
        for w in layers.windows(2) {
            if w[1].in_dim() != w[0].out_dim() {
                return Err("layer dimensions do not chain".into());
            }
        }
        Ok(Network {
            layers,
            normalization: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Exact forward evaluation: ReLU on hidden layers, linear output.
    pub fn eval(&self, x: &Array1<f64>) -> Array1<f64> {
        let last = self.layers.len() - 1;
        let mut v = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            v = layer.weights.dot(&v) + &layer.bias;
            if i < last {
                v.mapv_inplace(|t| t.max(0.0));
            }
        }
        v
    }
}

/// Axis-aligned box of admissible inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    pub lo: Array1<f64>,
    pub hi: Array1<f64>,
}

impl Hyperrectangle {
    pub fn new(lo: Array1<f64>, hi: Array1<f64>) -> Result<Self, String> {
        if lo.len() != hi.len() {
            return Err("bound vectors differ in length".into());
        }
        for (a, b) in lo.iter().zip(hi.iter()) {
            if !a.is_finite() || !b.is_finite() {
                return Err("non-finite bound".into());
            }
            if a > b {
                return Err("lower bound exceeds upper bound".into());
            }
        }
        Ok(Hyperrectangle { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn midpoint(&self) -> Array1<f64> {
        (&self.lo + &self.hi) * 0.5
    }

    pub fn contains(&self, x: &Array1<f64>) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }
}

/// The output property, stated so that positive violation values falsify it.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Property `c^T y + b <= 0`; the solver maximizes `c^T y + b`.
    MaxViolation { c: Array1<f64>, b: f64 },
    /// The output must avoid the polytope `{y | c_k^T y + b_k <= 0 for all k}`;
    /// the solver minimizes `max_k (c_k^T y + b_k)`.
    PolytopeAvoid { constraints: Vec<(Array1<f64>, f64)> },
}

impl Objective {
    pub fn out_dim(&self) -> usize {
        match self {
            Objective::MaxViolation { c, .. } => c.len(),
            Objective::PolytopeAvoid { constraints } => constraints[0].0.len(),
        }
    }

    /// Scalar violation measure at an output vector: the maximized quantity
    /// in `MaxViolation` mode, the minimized one in `PolytopeAvoid` mode.
    pub fn violation(&self, y: &Array1<f64>) -> f64 {
        match self {
            Objective::MaxViolation { c, b } => c.dot(y) + b,
            Objective::PolytopeAvoid { constraints } => constraints
                .iter()
                .map(|(c, b)| c.dot(y) + b)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Whether a violation value falsifies the property.
    pub fn is_violated(&self, value: f64) -> bool {
        match self {
            Objective::MaxViolation { .. } => value > 0.0,
            Objective::PolytopeAvoid { .. } => value <= 0.0,
        }
    }
}

/// A fully assembled verification instance.
#[derive(Debug, Clone)]
pub struct VerificationProblem {
    pub network: Network,
    pub input: Hyperrectangle,
    pub objective: Objective,
    pub name: String,
}

impl VerificationProblem {
    pub fn new(
        network: Network,
        input: Hyperrectangle,
        objective: Objective,
        name: impl Into<String>,
    ) -> Result<Self, String> {
        if input.dim() != network.input_dim() {
            return Err(format!(
                "input box has {} dimensions, network expects {}",
                input.dim(),
                network.input_dim()
            ));
        }
        if objective.out_dim() != network.output_dim() {
            return Err(format!(
                "objective has {} output coefficients, network produces {}",
                objective.out_dim(),
                network.output_dim()
            ));
        }
        Ok(VerificationProblem {
            network,
            input,
            objective,
            name: name.into(),
        })
    }
}

/// Non-comment, non-blank lines with their original 1-based line numbers.
struct Lines<'a> {
    iter: std::iter::Peekable<std::vec::IntoIter<(usize, &'a str)>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with("//"))
            .collect();
        let last_line = items.last().map(|&(n, _)| n).unwrap_or(0);
        Lines {
            iter: items.into_iter().peekable(),
            last_line,
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str), ParseError> {
        self.iter.next().ok_or(ParseError::UnexpectedEof {
            line: self.last_line + 1,
        })
    }
}

fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>, ParseError> {
    line.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| ParseError::NumericParse {
                line: lineno,
                token: t.to_string(),
            })
        })
        .collect()
}

fn parse_usizes(line: &str, lineno: usize) -> Result<Vec<usize>, ParseError> {
    line.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>().map_err(|_| ParseError::NumericParse {
                line: lineno,
                token: t.to_string(),
            })
        })
        .collect()
}

fn expect_floats(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>, ParseError> {
    let v = parse_floats(line, lineno)?;
    if v.len() != expected {
        return Err(ParseError::DimensionMismatch {
            line: lineno,
            expected,
            got: v.len(),
        });
    }
    Ok(v)
}

/// Parse a network from NNet text.
pub fn parse_nnet(text: &str) -> Result<Network, ParseError> {
    let mut lines = Lines::new(text);

    let (hline, header) = lines.next()?;
    let header = parse_usizes(header, hline)?;
    if header.len() < 4 {
        return Err(ParseError::MalformedHeader {
            line: hline,
            msg: format!("expected 4 header values, got {}", header.len()),
        });
    }
    let (num_layers, input_size, output_size) = (header[0], header[1], header[2]);
    if num_layers < 2 || input_size == 0 || output_size == 0 {
        return Err(ParseError::MalformedHeader {
            line: hline,
            msg: "degenerate layer counts".into(),
        });
    }

    let (sline, sizes) = lines.next()?;
    let layer_sizes = parse_usizes(sizes, sline)?;
    if layer_sizes.len() != num_layers + 1 {
        return Err(ParseError::MalformedHeader {
            line: sline,
            msg: format!(
                "expected {} layer sizes, got {}",
                num_layers + 1,
                layer_sizes.len()
            ),
        });
    }
    if layer_sizes[0] != input_size || layer_sizes[num_layers] != output_size {
        return Err(ParseError::MalformedHeader {
            line: sline,
            msg: "layer sizes disagree with header input/output sizes".into(),
        });
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(ParseError::MalformedHeader {
            line: sline,
            msg: "zero-sized layer".into(),
        });
    }

    // Legacy "symmetric" flag line, unused.
    lines.next()?;

    let (l, min_line) = lines.next()?;
    let input_min = expect_floats(min_line, l, input_size)?;
    let (l, max_line) = lines.next()?;
    let input_max = expect_floats(max_line, l, input_size)?;

    // Means and ranges carry one trailing entry for the output.
    let (l, means_line) = lines.next()?;
    let means = parse_floats(means_line, l)?;
    if means.len() != input_size + 1 && means.len() != input_size {
        return Err(ParseError::DimensionMismatch {
            line: l,
            expected: input_size + 1,
            got: means.len(),
        });
    }
    let (l, ranges_line) = lines.next()?;
    let ranges = parse_floats(ranges_line, l)?;
    if ranges.len() != means.len() {
        return Err(ParseError::DimensionMismatch {
            line: l,
            expected: means.len(),
            got: ranges.len(),
        });
    }

    let mut layers = Vec::with_capacity(num_layers);
    for li in 0..num_layers {
        let rows = layer_sizes[li + 1];
        let cols = layer_sizes[li];
        let mut weights = Array2::<f64>::zeros((rows, cols));
        for r in 0..rows {
            let (l, row_line) = lines.next()?;
            let row = expect_floats(row_line, l, cols)?;
            for (c, v) in row.into_iter().enumerate() {
                weights[[r, c]] = v;
            }
        }
        let mut bias = Array1::<f64>::zeros(rows);
        for r in 0..rows {
            let (l, bias_line) = lines.next()?;
            let vals = expect_floats(bias_line, l, 1)?;
            bias[r] = vals[0];
        }
        layers.push(Layer { weights, bias });
    }

    let mut net = Network::new(layers).map_err(|msg| ParseError::MalformedHeader {
        line: hline,
        msg,
    })?;
    net.normalization = Some(Normalization {
        input_min,
        input_max,
        means,
        ranges,
    });
    Ok(net)
}

/// Serialize a network back to NNet text.
pub fn serialize_nnet(net: &Network) -> String {
    let mut out = String::new();
    let d0 = net.input_dim();
    let num_layers = net.num_layers();
    let max_size = net
        .layers
        .iter()
        .map(Layer::out_dim)
        .chain(std::iter::once(d0))
        .max()
        .unwrap();
    out.push_str(&format!(
        "{},{},{},{},\n",
        num_layers,
        d0,
        net.output_dim(),
        max_size
    ));
    let sizes: Vec<String> = std::iter::once(d0)
        .chain(net.layers.iter().map(Layer::out_dim))
        .map(|s| s.to_string())
        .collect();
    out.push_str(&format!("{},\n", sizes.join(",")));
    out.push_str("0,\n");
    let norm = net.normalization.clone().unwrap_or_else(|| Normalization {
        input_min: vec![f64::MIN; d0],
        input_max: vec![f64::MAX; d0],
        means: vec![0.0; d0 + 1],
        ranges: vec![1.0; d0 + 1],
    });
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&format!("{},\n", join(&norm.input_min)));
    out.push_str(&format!("{},\n", join(&norm.input_max)));
    out.push_str(&format!("{},\n", join(&norm.means)));
    out.push_str(&format!("{},\n", join(&norm.ranges)));
    for layer in &net.layers {
        for r in 0..layer.out_dim() {
            let row: Vec<f64> = layer.weights.row(r).to_vec();
            out.push_str(&format!("{},\n", join(&row)));
        }
        for r in 0..layer.out_dim() {
            out.push_str(&format!("{},\n", layer.bias[r]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PropMode {
    Max,
    Polytope,
}

/// Parse a property file: input bounds, output constraints and a mode line.
///
/// ```text
/// in 0 >= -1
/// in 0 <= 1
/// mode max
/// out 1 0 + 0 <= 0
/// ```
pub fn parse_property(text: &str) -> Result<(Hyperrectangle, Objective), ParseError> {
    let mut lo: Vec<Option<f64>> = Vec::new();
    let mut hi: Vec<Option<f64>> = Vec::new();
    let mut outs: Vec<(Array1<f64>, f64, usize)> = Vec::new();
    let mut mode: Option<(PropMode, usize)> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
            continue;
        }
        last_line = lineno;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "in" => {
                if toks.len() != 4 {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        msg: "expected `in <dim> <=|>= <value>`".into(),
                    });
                }
                let dim: usize = toks[1].parse().map_err(|_| ParseError::NumericParse {
                    line: lineno,
                    token: toks[1].to_string(),
                })?;
                let val: f64 = toks[3].parse().map_err(|_| ParseError::NumericParse {
                    line: lineno,
                    token: toks[3].to_string(),
                })?;
                if dim >= lo.len() {
                    lo.resize(dim + 1, None);
                    hi.resize(dim + 1, None);
                }
                match toks[2] {
                    ">=" => lo[dim] = Some(val),
                    "<=" => hi[dim] = Some(val),
                    other => {
                        return Err(ParseError::Malformed {
                            line: lineno,
                            msg: format!("expected `<=` or `>=`, got `{other}`"),
                        })
                    }
                }
            }
            "out" => {
                // out c1 c2 ... + b <= 0
                let plus = toks.iter().position(|&t| t == "+").ok_or_else(|| {
                    ParseError::Malformed {
                        line: lineno,
                        msg: "expected `out <coeffs...> + <b> <= 0`".into(),
                    }
                })?;
                if toks.len() != plus + 4 || toks[plus + 2] != "<=" || toks[plus + 3] != "0" {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        msg: "expected `out <coeffs...> + <b> <= 0`".into(),
                    });
                }
                let coeffs: Result<Vec<f64>, _> = toks[1..plus]
                    .iter()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| ParseError::NumericParse {
                            line: lineno,
                            token: t.to_string(),
                        })
                    })
                    .collect();
                let coeffs = coeffs?;
                if coeffs.is_empty() {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        msg: "output constraint needs at least one coefficient".into(),
                    });
                }
                let b: f64 = toks[plus + 1].parse().map_err(|_| ParseError::NumericParse {
                    line: lineno,
                    token: toks[plus + 1].to_string(),
                })?;
                outs.push((Array1::from_vec(coeffs), b, lineno));
            }
            "mode" => {
                if toks.len() != 2 {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        msg: "expected `mode max` or `mode polytope`".into(),
                    });
                }
                let m = match toks[1] {
                    "max" => PropMode::Max,
                    "polytope" => PropMode::Polytope,
                    other => {
                        return Err(ParseError::Malformed {
                            line: lineno,
                            msg: format!("unknown mode `{other}`"),
                        })
                    }
                };
                mode = Some((m, lineno));
            }
            other => {
                return Err(ParseError::Malformed {
                    line: lineno,
                    msg: format!("unknown directive `{other}`"),
                })
            }
        }
    }

    let (mode, mode_line) = mode.ok_or(ParseError::Malformed {
        line: last_line,
        msg: "missing `mode` line".into(),
    })?;

    if lo.is_empty() {
        return Err(ParseError::UnboundedInput {
            line: last_line,
            dim: 0,
            side: "lower",
        });
    }
    let mut lo_v = Array1::<f64>::zeros(lo.len());
    let mut hi_v = Array1::<f64>::zeros(hi.len());
    for i in 0..lo.len() {
        lo_v[i] = lo[i].ok_or(ParseError::UnboundedInput {
            line: last_line,
            dim: i,
            side: "lower",
        })?;
        hi_v[i] = hi[i].ok_or(ParseError::UnboundedInput {
            line: last_line,
            dim: i,
            side: "upper",
        })?;
    }
    let input = Hyperrectangle::new(lo_v, hi_v).map_err(|msg| ParseError::Malformed {
        line: last_line,
        msg,
    })?;

    if outs.is_empty() {
        return Err(ParseError::EmptyObjective { line: last_line });
    }
    let objective = match mode {
        PropMode::Max => {
            if outs.len() > 1 {
                return Err(ParseError::ModeMismatch { line: outs[1].2 });
            }
            let (c, b, _) = outs.into_iter().next().unwrap();
            Objective::MaxViolation { c, b }
        }
        PropMode::Polytope => {
            let dim = outs[0].0.len();
            for (c, _, lineno) in &outs {
                if c.len() != dim {
                    return Err(ParseError::DimensionMismatch {
                        line: *lineno,
                        expected: dim,
                        got: c.len(),
                    });
                }
            }
            let _ = mode_line;
            Objective::PolytopeAvoid {
                constraints: outs.into_iter().map(|(c, b, _)| (c, b)).collect(),
            }
        }
    };

    Ok((input, objective))
}

/// Serialize a property back to its text format.
pub fn serialize_property(input: &Hyperrectangle, objective: &Objective) -> String {
    let mut out = String::new();
    for i in 0..input.dim() {
        out.push_str(&format!("in {} >= {}\n", i, input.lo[i]));
        out.push_str(&format!("in {} <= {}\n", i, input.hi[i]));
    }
    let fmt_constraint = |c: &Array1<f64>, b: f64| {
        let coeffs: Vec<String> = c.iter().map(|x| format!("{x}")).collect();
        format!("out {} + {} <= 0\n", coeffs.join(" "), b)
    };
    match objective {
        Objective::MaxViolation { c, b } => {
            out.push_str("mode max\n");
            out.push_str(&fmt_constraint(c, *b));
        }
        Objective::PolytopeAvoid { constraints } => {
            out.push_str("mode polytope\n");
            for (c, b) in constraints {
                out.push_str(&fmt_constraint(c, *b));
            }
        }
    }
    out
}

/// Serialize a completed verification run as a machine-parseable key-value
/// document.
pub fn serialize_result(report: &VerdictReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
    match &report.verdict {
        Verdict::Sat {
            counterexample,
            value,
        } => {
            kv("verdict", "SAT".into());
            kv("violation_value", format!("{value}"));
            let cx: Vec<String> = counterexample.iter().map(|x| format!("{x}")).collect();
            kv("counterexample", cx.join(","));
        }
        Verdict::Unsat { bound } => {
            kv("verdict", "UNSAT".into());
            kv("certified_bound", format!("{bound}"));
        }
        Verdict::Inconclusive {
            certified_bound,
            best_candidate,
        } => {
            kv("verdict", "INCONCLUSIVE".into());
            kv("certified_bound", format!("{certified_bound}"));
            kv("best_candidate", format!("{best_candidate}"));
        }
    }
    kv("nodes", format!("{}", report.nodes));
    kv("elapsed_s", format!("{}", report.elapsed.as_secs_f64()));
    kv("config", report.config_echo.clone());
    out
}
