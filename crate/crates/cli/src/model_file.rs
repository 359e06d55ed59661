//! Plain-text model files.
//!
//! ```text
//! format_version=1
//! method=gowl
//! levels=3
//! ...
//! [intercepts 2 1]
//! 1.2500000000000000e0
//! -3.0000000000000000e-1
//! [beta 6 1]
//! ...
//! ```
//!
//! Scalars come first as `key=value` lines, then numeric blocks headed by
//! `[name rows cols]` with one comma-separated row per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use ordinal_itr::{
    BaselineMethod, BaselineRule, DecisionFunction, FittedRule, KernelSpec, Model, SubRule, TreatmentRule,
};

use crate::csv_io::float;
use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Default)]
struct Writer {
    keys: String,
    blocks: String,
}

impl Writer {
    fn key(&mut self, name: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.keys, "{name}={value}");
    }

    fn block(&mut self, name: &str, rows: usize, cols: usize, values: impl Iterator<Item = f64>) {
        let _ = writeln!(self.blocks, "[{name} {rows} {cols}]");
        let values: Vec<f64> = values.collect();
        for row in values.chunks(cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| float(*v)).collect();
            let _ = writeln!(self.blocks, "{}", line.join(","));
        }
    }

    fn column(&mut self, name: &str, values: &[f64]) {
        self.block(name, values.len(), 1, values.iter().copied());
    }

    fn rule(&mut self, prefix: &str, rule: &FittedRule) {
        self.key(&format!("{prefix}kernel"), rule.kernel().name());
        if let Some(s) = rule.kernel().sigma() {
            self.key(&format!("{prefix}sigma"), float(s));
        }
        self.key(&format!("{prefix}c"), float(rule.c));
        self.key(&format!("{prefix}kkt_violation"), float(rule.kkt_violation));
        self.key(&format!("{prefix}converged"), rule.converged);
        let degenerate: Vec<String> = rule.degenerate_thresholds.iter().map(|k| k.to_string()).collect();
        self.key(&format!("{prefix}degenerate_thresholds"), degenerate.join(","));
        self.column(&format!("{prefix}intercepts"), &rule.intercepts);
        match &rule.function {
            DecisionFunction::Linear { beta } => self.column(&format!("{prefix}beta"), beta),
            DecisionFunction::Kernel { support, coeffs, .. } => {
                self.block(
                    &format!("{prefix}support"),
                    support.nrows(),
                    support.ncols(),
                    support.iter().copied(),
                );
                self.column(&format!("{prefix}coeffs"), coeffs);
            }
        }
    }
}

pub fn to_text(model: &Model) -> String {
    let mut w = Writer::default();
    w.key("format_version", FORMAT_VERSION);
    match model {
        Model::Gowl(rule) => {
            w.key("method", "gowl");
            w.key("levels", rule.levels);
            w.key("dim", rule.dim());
            w.key("lambda", float(rule.lambda));
            w.rule("", rule);
        }
        Model::Baseline(b) => {
            w.key("method", b.method.name());
            w.key("levels", b.levels);
            w.key("dim", b.dim);
            w.key("lambda", float(b.lambda));
            if let Some(s) = b.shift {
                w.key("shift", float(s));
            }
            w.key("sub_rules", b.sub_rules.len());
            for (k, sub) in b.sub_rules.iter().enumerate() {
                let prefix = format!("sub{}.", k + 1);
                match sub {
                    SubRule::Svm(rule) => w.rule(&prefix, rule),
                    SubRule::Linear { intercept, slope } => {
                        w.key(&format!("{prefix}intercept"), float(*intercept));
                        w.column(&format!("{prefix}slope"), slope);
                    }
                }
            }
        }
    }
    w.keys + &w.blocks
}

pub fn save(path: &Path, model: &Model) -> CliResult<()> {
    std::fs::write(path, to_text(model)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_text(&text).map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

struct Parsed {
    keys: BTreeMap<String, String>,
    blocks: BTreeMap<String, Array2<f64>>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("malformed model file: {}", msg.into()))
}

impl Parsed {
    fn get(&self, key: &str) -> CliResult<&str> {
        self.keys
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| bad(format!("missing key `{key}`")))
    }

    fn float(&self, key: &str) -> CliResult<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| bad(format!("`{key}` is not a number")))
    }

    fn usize(&self, key: &str) -> CliResult<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| bad(format!("`{key}` is not a count")))
    }

    fn block(&self, name: &str) -> CliResult<&Array2<f64>> {
        self.blocks
            .get(name)
            .ok_or_else(|| bad(format!("missing block `{name}`")))
    }

    fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let b = self.block(name)?;
        if b.ncols() != 1 {
            return Err(bad(format!("block `{name}` must have one column")));
        }
        Ok(b.iter().copied().collect())
    }

    fn rule(&self, prefix: &str, levels: usize, lambda: f64, dim: usize) -> CliResult<FittedRule> {
        let spec = match self.get(&format!("{prefix}kernel"))? {
            "linear" => KernelSpec::Linear,
            "gaussian" => KernelSpec::gaussian(self.float(&format!("{prefix}sigma"))?)?,
            other => return Err(bad(format!("unknown kernel `{other}`"))),
        };
        let function = match spec {
            KernelSpec::Linear => DecisionFunction::Linear {
                beta: self.column(&format!("{prefix}beta"))?,
            },
            _ => {
                let support = self.block(&format!("{prefix}support"))?.clone();
                let coeffs = self.column(&format!("{prefix}coeffs"))?;
                if coeffs.len() != support.nrows() {
                    return Err(bad("support and coefficient blocks differ in length"));
                }
                DecisionFunction::Kernel { spec, support, coeffs }
            }
        };
        if function.dim() != dim {
            return Err(bad(format!(
                "coefficients have dimension {}, header says {dim}",
                function.dim()
            )));
        }
        let intercepts = self.column(&format!("{prefix}intercepts"))?;
        if intercepts.len() + 1 != levels {
            return Err(bad(format!("{} intercepts for {levels} levels", intercepts.len())));
        }
        let degenerate = self.get(&format!("{prefix}degenerate_thresholds"))?;
        let degenerate_thresholds = if degenerate.is_empty() {
            Vec::new()
        } else {
            degenerate
                .split(',')
                .map(|k| k.parse().map_err(|_| bad("bad degenerate threshold list")))
                .collect::<CliResult<_>>()?
        };
        Ok(FittedRule {
            function,
            intercepts,
            levels,
            lambda,
            c: self.float(&format!("{prefix}c"))?,
            kkt_violation: self.float(&format!("{prefix}kkt_violation"))?,
            converged: match self.get(&format!("{prefix}converged"))? {
                "true" => true,
                "false" => false,
                _ => return Err(bad("`converged` must be true or false")),
            },
            degenerate_thresholds,
        })
    }
}

fn parse(text: &str) -> CliResult<Parsed> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    match lines.next() {
        Some(first) => match first.strip_prefix("format_version=") {
            Some(v) if v.parse::<u32>() == Ok(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "unsupported model format version {v} (this build reads version {FORMAT_VERSION})"
                )))
            }
            None => return Err(bad("first line must be `format_version=...`")),
        },
        None => return Err(bad("empty file")),
    }
    let mut keys = BTreeMap::new();
    while let Some(line) = lines.next_if(|l| !l.starts_with('[')) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
        keys.insert(k.to_string(), v.to_string());
    }
    let mut blocks = BTreeMap::new();
    while let Some(head) = lines.next() {
        let inner = head
            .strip_prefix('[')
            .and_then(|h| h.strip_suffix(']'))
            .ok_or_else(|| bad(format!("expected block header, got `{head}`")))?;
        let parts: Vec<&str> = inner.split_whitespace().collect();
        let [name, rows, cols] = parts[..] else {
            return Err(bad(format!("block header `{head}` needs name, rows and columns")));
        };
        let rows: usize = rows.parse().map_err(|_| bad(format!("bad row count in `{head}`")))?;
        let cols: usize = cols.parse().map_err(|_| bad(format!("bad column count in `{head}`")))?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("block `{name}` is truncated")))?;
            for v in line.split(',') {
                values.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number `{v}` in `{name}`")))?,
                );
            }
        }
        let block = Array2::from_shape_vec((rows, cols), values)
            .map_err(|_| bad(format!("block `{name}` does not have {cols} columns per row")))?;
        blocks.insert(name.to_string(), block);
    }
    Ok(Parsed { keys, blocks })
}

pub fn from_text(text: &str) -> CliResult<Model> {
    let parsed = parse(text)?;
    let levels = parsed.usize("levels")?;
    let dim = parsed.usize("dim")?;
    let lambda = parsed.float("lambda")?;
    if levels < 2 || dim == 0 {
        return Err(bad(format!("need levels >= 2 and dim >= 1, got {levels} and {dim}")));
    }
    match parsed.get("method")? {
        "gowl" => Ok(Model::Gowl(parsed.rule("", levels, lambda, dim)?)),
        name @ ("owl" | "pls_l1") => {
            let count = parsed.usize("sub_rules")?;
            if count + 1 != levels {
                return Err(bad(format!("{count} sub-rules for {levels} levels")));
            }
            let mut sub_rules = Vec::with_capacity(count);
            for k in 1..=count {
                let prefix = format!("sub{k}.");
                sub_rules.push(if name == "owl" {
                    SubRule::Svm(parsed.rule(&prefix, 2, lambda, dim)?)
                } else {
                    let slope = parsed.column(&format!("{prefix}slope"))?;
                    if slope.len() != dim {
                        return Err(bad(format!(
                            "sub-rule {k} has dimension {}, header says {dim}",
                            slope.len()
                        )));
                    }
                    SubRule::Linear {
                        intercept: parsed.float(&format!("{prefix}intercept"))?,
                        slope,
                    }
                });
            }
            Ok(Model::Baseline(BaselineRule {
                method: if name == "owl" {
                    BaselineMethod::Owl
                } else {
                    BaselineMethod::PlsL1
                },
                sub_rules,
                shift: if name == "owl" {
                    Some(parsed.float("shift")?)
                } else {
                    None
                },
                levels,
                dim,
                lambda,
            }))
        }
        other => Err(bad(format!("unknown method `{other}`"))),
    }
}

/// Largest KKT violation among the model's fitted sub-problems, and whether
/// all of them converged.
pub fn convergence(model: &Model) -> (f64, bool) {
    let rules: Vec<&FittedRule> = match model {
        Model::Gowl(r) => vec![r],
        Model::Baseline(b) => b
            .sub_rules
            .iter()
            .filter_map(|s| match s {
                SubRule::Svm(r) => Some(r),
                SubRule::Linear { .. } => None,
            })
            .collect(),
    };
    rules
        .iter()
        .fold((0.0, true), |(k, c), r| (k.max(r.kkt_violation), c && r.converged))
}
