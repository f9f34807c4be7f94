//! Abstract syntax of monitoring specifications.
//!
//! The parser produces a [`Specification`]; [`check_types`] resolves names and
//! types and yields the [`TypedSpecification`] consumed by the analysis and
//! the engine.

mod typing;

pub use typing::{
    check_types, AccessKind, Builtin, Owner, StreamRef, TypeError, TypedExpr, TypedExprKind, TypedInput, TypedOutput,
    TypedSpecification, TypedTrigger, TypedTriggerKind, WindowDecl, WindowId,
};

use std::fmt;

use serde::Serialize;

use crate::time::{Frequency, Rational};
use crate::value::{Value, ValueType};

/// Location of a node in the specification source. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> SourceSpan {
        SourceSpan { line, column, length }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Specification {
    pub inputs: Vec<InputDecl>,
    pub outputs: Vec<StreamTemplate>,
    pub triggers: Vec<TriggerDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: String,
    pub ty: ValueType,
    /// Declared with the `time` keyword: bound to the trace timestamp on every event.
    pub is_time: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub ty: ValueType,
    pub span: SourceSpan,
}

/// An output stream declaration. Unparameterized outputs are templates with no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTemplate {
    pub name: String,
    pub ty: ValueType,
    pub params: Vec<Parameter>,
    pub clock: Option<Frequency>,
    /// One expression per parameter.
    pub invoke: Option<Vec<Expression>>,
    pub extend: Option<Expression>,
    pub terminate: Option<Expression>,
    pub expr: Expression,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerDecl {
    pub kind: TriggerKind,
    pub message: Option<String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TriggerKind {
    Plain(Expression),
    /// Fires if the condition holds for some instance of the template it refers to.
    Any(Expression),
    /// Compares the number of live instances of `stream` against `bound`.
    Count { stream: String, cmp: BinOp, bound: i64, stream_span: SourceSpan },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl Expression {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Expression {
        Expression { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Const(Value),
    ParamRef(String),
    StreamAccess { stream: String, args: Vec<Expression>, offset: Offset },
    WindowAccess { stream: String, args: Vec<Expression>, duration: Rational, aggregation: AggFn },
    Default { inner: Box<Expression>, default: Box<Expression> },
    Unary { op: UnaryOp, operand: Box<Expression> },
    Binary { op: BinOp, lhs: Box<Expression>, rhs: Box<Expression> },
    IfThenElse { cond: Box<Expression>, then: Box<Expression>, otherwise: Box<Expression> },
    FnCall { function: String, args: Vec<Expression> },
}

/// How far into a stream's past an access reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Offset {
    /// Number of extensions back; `0` is the latest value.
    Discrete(i64),
    /// Seconds relative to the evaluation instant; negative for the past.
    RealTime(Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Integral,
    Median,
}

impl AggFn {
    pub const ALL: [AggFn; 7] =
        [AggFn::Count, AggFn::Sum, AggFn::Avg, AggFn::Min, AggFn::Max, AggFn::Integral, AggFn::Median];

    /// Whether per-pane summaries can be merged into the whole-window result.
    pub fn is_homomorphic(self) -> bool {
        !matches!(self, AggFn::Median)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Avg => "avg",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Integral => "integral",
            AggFn::Median => "median",
        }
    }

    pub fn from_keyword(word: &str) -> Option<AggFn> {
        Some(match word {
            "count" => AggFn::Count,
            "sum" => AggFn::Sum,
            "avg" => AggFn::Avg,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "integral" | "∫" => AggFn::Integral,
            "median" => AggFn::Median,
            _ => return None,
        })
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Compares two integers with a comparison operator.
    pub fn compare_ints(self, lhs: i64, rhs: i64) -> bool {
        match self {
            BinOp::Eq => lhs == rhs,
            BinOp::Ne => lhs != rhs,
            BinOp::Lt => lhs < rhs,
            BinOp::Le => lhs <= rhs,
            BinOp::Gt => lhs > rhs,
            BinOp::Ge => lhs >= rhs,
            _ => false,
        }
    }
}

impl Specification {
    /// The same specification with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Specification {
        let mut spec = self.clone();
        spec.visit_spans(&mut |span| *span = SourceSpan::default());
        spec
    }

    fn visit_spans(&mut self, f: &mut impl FnMut(&mut SourceSpan)) {
        for input in &mut self.inputs {
            f(&mut input.span);
        }
        for output in &mut self.outputs {
            f(&mut output.span);
            for p in &mut output.params {
                f(&mut p.span);
            }
            for e in output.invoke.iter_mut().flatten() {
                e.visit_spans(f);
            }
            if let Some(e) = &mut output.extend {
                e.visit_spans(f);
            }
            if let Some(e) = &mut output.terminate {
                e.visit_spans(f);
            }
            output.expr.visit_spans(f);
        }
        for trigger in &mut self.triggers {
            f(&mut trigger.span);
            match &mut trigger.kind {
                TriggerKind::Plain(e) | TriggerKind::Any(e) => e.visit_spans(f),
                TriggerKind::Count { stream_span, .. } => f(stream_span),
            }
        }
    }
}

impl Expression {
    fn visit_spans(&mut self, f: &mut impl FnMut(&mut SourceSpan)) {
        f(&mut self.span);
        match &mut self.kind {
            ExprKind::Const(_) | ExprKind::ParamRef(_) => {}
            ExprKind::StreamAccess { args, .. } | ExprKind::WindowAccess { args, .. } | ExprKind::FnCall { args, .. } => {
                for a in args {
                    a.visit_spans(f);
                }
            }
            ExprKind::Default { inner, default } => {
                inner.visit_spans(f);
                default.visit_spans(f);
            }
            ExprKind::Unary { operand, .. } => operand.visit_spans(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit_spans(f);
                rhs.visit_spans(f);
            }
            ExprKind::IfThenElse { cond, then, otherwise } => {
                cond.visit_spans(f);
                then.visit_spans(f);
                otherwise.visit_spans(f);
            }
        }
    }
}
