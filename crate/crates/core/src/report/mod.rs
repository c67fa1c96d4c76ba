//! Derived zero-statistics constants from verified functional bounds.
//!
//! Every bound and derived value is an interval with exact rational
//! endpoints, so printing can round in the valid direction without any
//! floating-point doubt.

use std::fmt::Write as _;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::FunctionalKind;

/// Decimal places in printed constants.
pub const DEFAULT_PLACES: u32 = 4;

/// Conditional hypothesis a bound depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(rename = "RH")]
    Rh,
    #[serde(rename = "GRH")]
    Grh,
    #[serde(rename = "RH+simplicity")]
    RhSimplicity,
    #[serde(rename = "GRH+simplicity")]
    GrhSimplicity,
}

impl Hypothesis {
    pub fn for_kind(kind: FunctionalKind) -> Self {
        match kind {
            FunctionalKind::Z | FunctionalKind::Z1 => Hypothesis::Rh,
            FunctionalKind::ZTilde | FunctionalKind::L => Hypothesis::Grh,
            FunctionalKind::P => Hypothesis::RhSimplicity,
            FunctionalKind::PTilde => Hypothesis::GrhSimplicity,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Rh => "RH",
            Hypothesis::Grh => "GRH",
            Hypothesis::RhSimplicity => "RH + simplicity conjecture N*(T) ~ N(T)",
            Hypothesis::GrhSimplicity => "GRH + simplicity conjecture N*(T) ~ N(T)",
        }
    }
}

/// Closed interval with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl ExactInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument("interval endpoints out of order".into()));
        }
        Ok(ExactInterval { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        ExactInterval { lo: x.clone(), hi: x }
    }

    /// Exact image under `x ↦ a + b·x`.
    pub fn affine(&self, a: &Rational, b: &Rational) -> Self {
        let p = Rational::from(a + Rational::from(b * &self.lo));
        let q = Rational::from(a + Rational::from(b * &self.hi));
        if p <= q {
            ExactInterval { lo: p, hi: q }
        } else {
            ExactInterval { lo: q, hi: p }
        }
    }
}

impl From<&crate::rigor::Interval> for ExactInterval {
    fn from(i: &crate::rigor::Interval) -> Self {
        ExactInterval { lo: crate::mp::to_rational(i.lo()), hi: crate::mp::to_rational(i.hi()) }
    }
}

/// Whether a constant is claimed as a lower or an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl Direction {
    fn symbol(self) -> &'static str {
        match self {
            Direction::AtLeast => ">=",
            Direction::AtMost => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedConstant {
    pub name: String,
    pub direction: Direction,
    pub value: ExactInterval,
    pub formula: String,
}

impl DerivedConstant {
    /// The claimed constant: the low end for lower bounds, the high end for
    /// upper bounds.
    pub fn claim(&self) -> &Rational {
        match self.direction {
            Direction::AtLeast => &self.value.lo,
            Direction::AtMost => &self.value.hi,
        }
    }

    /// `claim` rounded to `places` decimals toward validity.
    pub fn printed(&self, places: u32) -> String {
        let down = self.direction == Direction::AtLeast;
        decimal_directed(self.claim(), places, down)
    }
}

/// External inputs of the derivations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationInputs {
    /// Proportion of distinct zeros known from pair-correlation methods
    /// (Bui and Heath-Brown): `19/27`.
    pub distinct_input: Rational,
}

impl Default for DerivationInputs {
    fn default() -> Self {
        DerivationInputs { distinct_input: Rational::from((19, 27)) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub kind: FunctionalKind,
    pub hypothesis: Hypothesis,
    /// Enclosure of the verified functional value, or the certified
    /// threshold for `P` and `PTilde`.
    pub bound: ExactInterval,
    pub derived: Vec<DerivedConstant>,
}

pub fn derive_constants(kind: FunctionalKind, bound: &ExactInterval) -> BoundReport {
    derive_constants_with(kind, bound, &DerivationInputs::default())
}

pub fn derive_constants_with(kind: FunctionalKind, bound: &ExactInterval, inputs: &DerivationInputs) -> BoundReport {
    let r = |n: i64, d: i64| Rational::from((n, d));
    let lower = |name: &str, a: Rational, b: Rational, formula: String| DerivedConstant {
        name: name.into(),
        direction: Direction::AtLeast,
        value: bound.affine(&a, &b),
        formula,
    };
    let derived = match kind {
        FunctionalKind::Z | FunctionalKind::ZTilde => {
            let q = &inputs.distinct_input;
            // (2q + 5 - c)/6
            let a = Rational::from((Rational::from(q * 2) + 5) / 6);
            vec![
                lower("N_s", r(2, 1), r(-1, 1), "2 - c".into()),
                lower("N_d", a, r(-1, 6), format!("(2*{q} + 5 - c)/6")),
            ]
        }
        FunctionalKind::Z1 => vec![
            lower("N_1,s", r(2, 1), r(-1, 1), "2 - c".into()),
            lower("N_1,d", r(3, 2), r(-1, 2), "3/2 - c/2".into()),
        ],
        FunctionalKind::L => vec![lower("N_Phi,s", r(2, 1), r(-1, 1), "2 - c".into())],
        FunctionalKind::P | FunctionalKind::PTilde => vec![DerivedConstant {
            name: "pair-correlation threshold".into(),
            direction: Direction::AtMost,
            value: bound.clone(),
            formula: "c".into(),
        }],
    };
    BoundReport { kind, hypothesis: Hypothesis::for_kind(kind), bound: bound.clone(), derived }
}

/// `x` rounded to `places` decimals, down (toward `-∞`) or up.
pub fn decimal_directed(x: &Rational, places: u32, down: bool) -> String {
    let scale = Integer::from(10).pow(places);
    let scaled = Rational::from(x * &scale);
    let n = if down { scaled.floor().numer().clone() } else { scaled.ceil().numer().clone() };
    let neg = n < 0;
    let digits = Integer::from(n.abs_ref()).to_string();
    let places = places as usize;
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportStyle {
    Text,
    Machine,
}

#[derive(Serialize, Deserialize)]
struct MachineConstant {
    name: String,
    direction: Direction,
    lo: String,
    hi: String,
    printed: String,
    formula: String,
}

#[derive(Serialize, Deserialize)]
struct MachineReport {
    kind: FunctionalKind,
    hypothesis: Hypothesis,
    bound_lo: String,
    bound_hi: String,
    places: u32,
    derived: Vec<MachineConstant>,
}

pub fn format_report(report: &BoundReport, style: ReportStyle) -> String {
    format_report_places(report, style, DEFAULT_PLACES)
}

pub fn format_report_places(report: &BoundReport, style: ReportStyle, places: u32) -> String {
    match style {
        ReportStyle::Text => {
            let mut s = String::new();
            let b = &report.bound;
            let _ = writeln!(s, "functional   {}", report.kind);
            let _ = writeln!(s, "hypothesis   {}", report.hypothesis.label());
            if report.kind.is_threshold() {
                let _ = writeln!(s, "threshold    {} (certified)", decimal_directed(&b.hi, places + 2, false));
            } else {
                let _ = writeln!(
                    s,
                    "bound        {} <= {}   enclosure [{}, {}]",
                    report.kind,
                    decimal_directed(&b.hi, places + 2, false),
                    decimal_directed(&b.lo, 12, true),
                    decimal_directed(&b.hi, 12, false)
                );
            }
            for c in &report.derived {
                let _ = writeln!(s, "{:<12} {} {}   ({})", c.name, c.direction.symbol(), c.printed(places), c.formula);
            }
            let _ = writeln!(s, "note         limiting constants; o(1) and O(delta) terms are omitted");
            s
        }
        ReportStyle::Machine => {
            let m = MachineReport {
                kind: report.kind,
                hypothesis: report.hypothesis,
                bound_lo: report.bound.lo.to_string(),
                bound_hi: report.bound.hi.to_string(),
                places,
                derived: report
                    .derived
                    .iter()
                    .map(|c| MachineConstant {
                        name: c.name.clone(),
                        direction: c.direction,
                        lo: c.value.lo.to_string(),
                        hi: c.value.hi.to_string(),
                        printed: c.printed(places),
                        formula: c.formula.clone(),
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&m).expect("report serializes")
        }
    }
}

/// Reads a report written in [`ReportStyle::Machine`].
pub fn parse_machine_report(text: &str) -> Result<BoundReport> {
    let m: MachineReport =
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let rat = |s: &str| -> Result<Rational> {
        s.parse::<Rational>().map_err(|_| Error::InvalidArgument(format!("not an exact rational: {s}")))
    };
    let derived = m
        .derived
        .iter()
        .map(|c| {
            Ok(DerivedConstant {
                name: c.name.clone(),
                direction: c.direction,
                value: ExactInterval::new(rat(&c.lo)?, rat(&c.hi)?)?,
                formula: c.formula.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport {
        kind: m.kind,
        hypothesis: m.hypothesis,
        bound: ExactInterval::new(rat(&m.bound_lo)?, rat(&m.bound_hi)?)?,
        derived,
    })
}
