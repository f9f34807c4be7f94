//! Name resolution and type checking.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use super::{
    AggFn, BinOp, ExprKind, Expression, Offset, SourceSpan, Specification, StreamTemplate, TriggerKind, UnaryOp,
};
use crate::parser::{print_expression, Diagnostic};
use crate::time::{Frequency, Rational};
use crate::value::{Value, ValueType};
use num_traits::Signed;

pub type WindowId = usize;

/// Resolved reference to a declared stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StreamRef {
    Input(usize),
    Output(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "abs" => Builtin::Abs,
            "sqrt" => Builtin::Sqrt,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Abs | Builtin::Sqrt => 1,
            Builtin::Min | Builtin::Max => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedExpr {
    pub kind: TypedExprKind,
    pub ty: ValueType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedExprKind {
    Const(Value),
    Param(usize),
    Access { target: StreamRef, args: Vec<TypedExpr>, offset: Offset },
    Window { window: WindowId, args: Vec<TypedExpr> },
    Default { inner: Box<TypedExpr>, default: Box<TypedExpr> },
    Unary { op: UnaryOp, operand: Box<TypedExpr> },
    Binary { op: BinOp, lhs: Box<TypedExpr>, rhs: Box<TypedExpr> },
    Ite { cond: Box<TypedExpr>, then: Box<TypedExpr>, otherwise: Box<TypedExpr> },
    Call { function: Builtin, args: Vec<TypedExpr> },
}

/// A single stream access found in an expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessKind {
    Stream { target: StreamRef, offset: Offset },
    /// The target is recorded in the window declaration.
    Window(WindowId),
}

impl TypedExpr {
    /// Calls `f` for every stream access, outermost first.
    pub fn visit_accesses(&self, f: &mut impl FnMut(AccessKind)) {
        match &self.kind {
            TypedExprKind::Const(_) | TypedExprKind::Param(_) => {}
            TypedExprKind::Access { target, args, offset } => {
                f(AccessKind::Stream { target: *target, offset: *offset });
                args.iter().for_each(|a| a.visit_accesses(f));
            }
            TypedExprKind::Window { window, args } => {
                f(AccessKind::Window(*window));
                args.iter().for_each(|a| a.visit_accesses(f));
            }
            TypedExprKind::Default { inner, default } => {
                inner.visit_accesses(f);
                default.visit_accesses(f);
            }
            TypedExprKind::Unary { operand, .. } => operand.visit_accesses(f),
            TypedExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit_accesses(f);
                rhs.visit_accesses(f);
            }
            TypedExprKind::Ite { cond, then, otherwise } => {
                cond.visit_accesses(f);
                then.visit_accesses(f);
                otherwise.visit_accesses(f);
            }
            TypedExprKind::Call { args, .. } => args.iter().for_each(|a| a.visit_accesses(f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedInput {
    pub name: String,
    pub ty: ValueType,
    pub is_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedOutput {
    pub name: String,
    pub ty: ValueType,
    pub params: Vec<(String, ValueType)>,
    pub clock: Option<Frequency>,
    pub invoke: Option<Vec<TypedExpr>>,
    pub extend: Option<TypedExpr>,
    pub terminate: Option<TypedExpr>,
    pub expr: TypedExpr,
}

/// Where a window expression occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Owner {
    Output(usize),
    Trigger(usize),
}

/// One sliding-window expression occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDecl {
    pub id: WindowId,
    pub owner: Owner,
    pub target: StreamRef,
    pub duration: Rational,
    pub aggregation: AggFn,
    pub target_ty: ValueType,
    pub result_ty: ValueType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedTrigger {
    pub kind: TypedTriggerKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedTriggerKind {
    Plain(TypedExpr),
    /// `cond` is checked with the parameters of instances of `scope`.
    Any { scope: usize, cond: TypedExpr },
    Count { target: usize, cmp: BinOp, bound: i64 },
}

/// A name-resolved, well-typed specification.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedSpecification {
    pub inputs: Vec<TypedInput>,
    pub outputs: Vec<TypedOutput>,
    pub triggers: Vec<TypedTrigger>,
    pub windows: Vec<WindowDecl>,
}

impl TypedSpecification {
    pub fn stream_name(&self, stream: StreamRef) -> &str {
        match stream {
            StreamRef::Input(i) => &self.inputs[i].name,
            StreamRef::Output(o) => &self.outputs[o].name,
        }
    }

    pub fn stream_type(&self, stream: StreamRef) -> ValueType {
        match stream {
            StreamRef::Input(i) => self.inputs[i].ty,
            StreamRef::Output(o) => self.outputs[o].ty,
        }
    }

    pub fn param_types(&self, stream: StreamRef) -> Vec<ValueType> {
        match stream {
            StreamRef::Input(_) => Vec::new(),
            StreamRef::Output(o) => self.outputs[o].params.iter().map(|(_, t)| *t).collect(),
        }
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|i| i.name == name)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.name == name)
    }

    pub fn stream_count(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    /// Dense index over inputs followed by outputs.
    pub fn vertex(&self, stream: StreamRef) -> usize {
        match stream {
            StreamRef::Input(i) => i,
            StreamRef::Output(o) => self.inputs.len() + o,
        }
    }

    pub fn stream_at(&self, vertex: usize) -> StreamRef {
        if vertex < self.inputs.len() {
            StreamRef::Input(vertex)
        } else {
            StreamRef::Output(vertex - self.inputs.len())
        }
    }

    /// Clocks every unclocked output at `frequency`.
    pub fn with_default_clock(&self, frequency: Frequency) -> TypedSpecification {
        let mut spec = self.clone();
        for output in &mut spec.outputs {
            output.clock.get_or_insert(frequency);
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String, span: SourceSpan },
    #[error("unknown name `{name}`")]
    UnknownName { name: String, span: SourceSpan },
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize, span: SourceSpan },
    #[error("{message}")]
    Invalid { message: String, span: SourceSpan },
}

impl Diagnostic for TypeError {
    fn span(&self) -> SourceSpan {
        match self {
            TypeError::Mismatch { span, .. }
            | TypeError::UnknownName { span, .. }
            | TypeError::Arity { span, .. }
            | TypeError::Invalid { span, .. } => *span,
        }
    }

    fn message(&self) -> String {
        self.to_string()
    }
}

fn invalid(message: impl Into<String>, span: SourceSpan) -> TypeError {
    TypeError::Invalid { message: message.into(), span }
}

fn mismatch(expected: impl ToString, found: impl ToString, span: SourceSpan) -> TypeError {
    TypeError::Mismatch { expected: expected.to_string(), found: found.to_string(), span }
}

/// Resolves names and assigns a type to every expression.
pub fn check_types(spec: &Specification) -> Result<TypedSpecification, Vec<TypeError>> {
    let mut checker = Checker::new(spec);
    let typed = checker.check();
    if checker.errors.is_empty() {
        Ok(typed)
    } else {
        Err(checker.errors)
    }
}

#[derive(Clone, Copy)]
struct Scope<'a> {
    params: &'a [(String, ValueType)],
    owner: Owner,
    /// Template whose bare accesses bind to the scope parameters (inside `any`).
    any_scope: Option<usize>,
    /// Set while checking invoke arguments.
    in_invoke: bool,
}

struct Checker<'s> {
    spec: &'s Specification,
    inputs: HashMap<&'s str, usize>,
    outputs: HashMap<&'s str, usize>,
    params: Vec<Vec<(String, ValueType)>>,
    windows: Vec<WindowDecl>,
    errors: Vec<TypeError>,
}

impl<'s> Checker<'s> {
    fn new(spec: &'s Specification) -> Checker<'s> {
        let mut errors = Vec::new();
        let mut inputs = HashMap::new();
        let mut outputs = HashMap::new();
        for (i, input) in spec.inputs.iter().enumerate() {
            if inputs.insert(input.name.as_str(), i).is_some() {
                errors.push(invalid(format!("duplicate declaration of `{}`", input.name), input.span));
            }
        }
        for (o, output) in spec.outputs.iter().enumerate() {
            if inputs.contains_key(output.name.as_str()) || outputs.insert(output.name.as_str(), o).is_some() {
                errors.push(invalid(format!("duplicate declaration of `{}`", output.name), output.span));
            }
        }
        let params = spec
            .outputs
            .iter()
            .map(|o| o.params.iter().map(|p| (p.name.clone(), p.ty)).collect())
            .collect();
        Checker { spec, inputs, outputs, params, windows: Vec::new(), errors }
    }

    fn check(&mut self) -> TypedSpecification {
        let inputs = self
            .spec
            .inputs
            .iter()
            .map(|i| TypedInput { name: i.name.clone(), ty: i.ty, is_time: i.is_time })
            .collect();
        let placeholder = TypedExpr { kind: TypedExprKind::Const(Value::Bool(false)), ty: ValueType::Bool };
        let mut outputs = Vec::with_capacity(self.spec.outputs.len());
        for (o, output) in self.spec.outputs.iter().enumerate() {
            outputs.push(self.check_output(o, output).unwrap_or_else(|| TypedOutput {
                name: output.name.clone(),
                ty: output.ty,
                params: self.params[o].clone(),
                clock: output.clock,
                invoke: None,
                extend: None,
                terminate: None,
                expr: placeholder.clone(),
            }));
        }
        let mut triggers = Vec::with_capacity(self.spec.triggers.len());
        for (t, trigger) in self.spec.triggers.iter().enumerate() {
            let message = trigger.message.clone().unwrap_or_else(|| match &trigger.kind {
                TriggerKind::Plain(e) => print_expression(e),
                TriggerKind::Any(e) => format!("any({})", print_expression(e)),
                TriggerKind::Count { stream, cmp, bound, .. } => format!("count({stream}) {} {bound}", cmp.symbol()),
            });
            if let Some(kind) = self.check_trigger(t, &trigger.kind, trigger.span) {
                triggers.push(TypedTrigger { kind, message });
            }
        }
        TypedSpecification { inputs, outputs, triggers, windows: std::mem::take(&mut self.windows) }
    }

    fn check_output(&mut self, o: usize, output: &'s StreamTemplate) -> Option<TypedOutput> {
        let params = self.params[o].clone();
        let scope = Scope { params: &params, owner: Owner::Output(o), any_scope: None, in_invoke: false };
        let before = self.errors.len();

        let invoke = match (&output.invoke, params.is_empty()) {
            (Some(args), true) => {
                self.errors.push(invalid(
                    format!("`{}` has no parameters and cannot declare `invoke`", output.name),
                    args.first().map_or(output.span, |a| a.span),
                ));
                None
            }
            (None, false) => {
                self.errors.push(invalid(
                    format!("parameterized output `{}` requires an `invoke` clause", output.name),
                    output.span,
                ));
                None
            }
            (None, true) => None,
            (Some(args), false) => {
                if args.len() != params.len() {
                    self.errors.push(TypeError::Arity {
                        name: format!("invoke of {}", output.name),
                        expected: params.len(),
                        found: args.len(),
                        span: args[0].span,
                    });
                    None
                } else {
                    let invoke_scope = Scope { in_invoke: true, ..scope };
                    let mut typed = Vec::new();
                    for (arg, (_, pty)) in args.iter().zip(&params) {
                        if let Some(t) = self.check_expr(arg, invoke_scope) {
                            if !t.ty.coerces_to(*pty) {
                                self.errors.push(mismatch(pty, t.ty, arg.span));
                            }
                            typed.push(t);
                        }
                    }
                    Some(typed)
                }
            }
        };
        let extend = output.extend.as_ref().and_then(|e| self.expect_type(e, scope, ValueType::Bool));
        let terminate = output.terminate.as_ref().and_then(|e| self.expect_type(e, scope, ValueType::Bool));
        let expr = self.check_expr(&output.expr, scope)?;
        if !expr.ty.coerces_to(output.ty) {
            self.errors.push(mismatch(output.ty, expr.ty, output.expr.span));
        }
        if self.errors.len() > before {
            return None;
        }
        Some(TypedOutput {
            name: output.name.clone(),
            ty: output.ty,
            params,
            clock: output.clock,
            invoke,
            extend,
            terminate,
            expr,
        })
    }

    fn check_trigger(&mut self, t: usize, kind: &'s TriggerKind, span: SourceSpan) -> Option<TypedTriggerKind> {
        match kind {
            TriggerKind::Plain(e) => {
                let scope = Scope { params: &[], owner: Owner::Trigger(t), any_scope: None, in_invoke: false };
                self.expect_type(e, scope, ValueType::Bool).map(TypedTriggerKind::Plain)
            }
            TriggerKind::Any(e) => {
                let target = self.any_scope_of(e, span)?;
                let params = self.params[target].clone();
                let scope = Scope { params: &params, owner: Owner::Trigger(t), any_scope: Some(target), in_invoke: false };
                let cond = self.expect_type(e, scope, ValueType::Bool)?;
                Some(TypedTriggerKind::Any { scope: target, cond })
            }
            TriggerKind::Count { stream, cmp, bound, stream_span } => match self.outputs.get(stream.as_str()) {
                Some(&target) if cmp.is_comparison() => Some(TypedTriggerKind::Count { target, cmp: *cmp, bound: *bound }),
                Some(_) => {
                    self.errors.push(invalid("count trigger needs a comparison operator", span));
                    None
                }
                None => {
                    self.errors.push(TypeError::UnknownName { name: stream.clone(), span: *stream_span });
                    None
                }
            },
        }
    }

    /// The single template an `any(...)` condition quantifies over.
    fn any_scope_of(&mut self, e: &Expression, span: SourceSpan) -> Option<usize> {
        let mut parameterized = BTreeSet::new();
        let mut plain = BTreeSet::new();
        collect_bare_outputs(e, &mut |name| {
            if let Some(&o) = self.outputs.get(name) {
                if self.params[o].is_empty() {
                    plain.insert(o);
                } else {
                    parameterized.insert(o);
                }
            }
        });
        let candidates = if parameterized.is_empty() { plain } else { parameterized };
        if candidates.len() == 1 {
            candidates.into_iter().next()
        } else {
            self.errors.push(invalid(
                format!("`any` must refer to exactly one output template, found {}", candidates.len()),
                span,
            ));
            None
        }
    }

    fn expect_type(&mut self, e: &Expression, scope: Scope<'_>, ty: ValueType) -> Option<TypedExpr> {
        let typed = self.check_expr(e, scope)?;
        if typed.ty.coerces_to(ty) {
            Some(typed)
        } else {
            self.errors.push(mismatch(ty, typed.ty, e.span));
            None
        }
    }

    fn resolve(&mut self, name: &str, span: SourceSpan) -> Option<(StreamRef, ValueType, usize)> {
        if let Some(&i) = self.inputs.get(name) {
            return Some((StreamRef::Input(i), self.spec.inputs[i].ty, 0));
        }
        if let Some(&o) = self.outputs.get(name) {
            return Some((StreamRef::Output(o), self.spec.outputs[o].ty, self.params[o].len()));
        }
        self.errors.push(TypeError::UnknownName { name: name.to_string(), span });
        None
    }

    fn check_args(
        &mut self,
        stream: &str,
        target: StreamRef,
        arity: usize,
        args: &[Expression],
        scope: Scope<'_>,
        span: SourceSpan,
    ) -> Option<Vec<TypedExpr>> {
        if let (StreamRef::Output(o), true) = (target, args.is_empty()) {
            if scope.any_scope == Some(o) && arity > 0 {
                return Some(
                    scope
                        .params
                        .iter()
                        .enumerate()
                        .map(|(i, (_, ty))| TypedExpr { kind: TypedExprKind::Param(i), ty: *ty })
                        .collect(),
                );
            }
        }
        if args.len() != arity {
            self.errors.push(TypeError::Arity { name: stream.to_string(), expected: arity, found: args.len(), span });
            return None;
        }
        if scope.in_invoke && arity > 0 {
            self.errors.push(invalid("invoke may only refer to unparameterized streams", span));
            return None;
        }
        let param_types = match target {
            StreamRef::Output(o) => self.params[o].iter().map(|(_, t)| *t).collect(),
            StreamRef::Input(_) => Vec::new(),
        };
        let mut typed = Vec::with_capacity(args.len());
        for (arg, pty) in args.iter().zip(param_types) {
            let t = self.check_expr(arg, scope)?;
            if !t.ty.coerces_to(pty) {
                self.errors.push(mismatch(pty, t.ty, arg.span));
                return None;
            }
            typed.push(t);
        }
        Some(typed)
    }

    fn check_expr(&mut self, e: &Expression, scope: Scope<'_>) -> Option<TypedExpr> {
        let span = e.span;
        let (kind, ty) = match &e.kind {
            ExprKind::Const(v) => (TypedExprKind::Const(*v), v.ty()),
            ExprKind::ParamRef(name) => {
                if scope.in_invoke {
                    self.errors.push(invalid("invoke cannot refer to the template's own parameters", span));
                    return None;
                }
                match scope.params.iter().position(|(p, _)| p == name) {
                    Some(i) => (TypedExprKind::Param(i), scope.params[i].1),
                    None => {
                        self.errors.push(TypeError::UnknownName { name: name.clone(), span });
                        return None;
                    }
                }
            }
            ExprKind::StreamAccess { stream, args, offset } => {
                let (target, ty, arity) = self.resolve(stream, span)?;
                match offset {
                    Offset::Discrete(n) if *n > 0 => {
                        self.errors.push(invalid("offsets into the future are not supported", span));
                        return None;
                    }
                    Offset::RealTime(d) if !d.is_negative() => {
                        self.errors.push(invalid("real-time offsets must be strictly negative", span));
                        return None;
                    }
                    _ => {}
                }
                let args = self.check_args(stream, target, arity, args, scope, span)?;
                (TypedExprKind::Access { target, args, offset: *offset }, ty)
            }
            ExprKind::WindowAccess { stream, args, duration, aggregation } => {
                let (target, target_ty, arity) = self.resolve(stream, span)?;
                if !duration.is_positive() {
                    self.errors.push(invalid("window duration must be positive", span));
                    return None;
                }
                let result_ty = match (aggregation, target_ty) {
                    (AggFn::Count, _) => ValueType::Int,
                    (_, ValueType::Bool) => {
                        self.errors.push(invalid(format!("`{aggregation}` needs a numeric target, `{stream}` is bool"), span));
                        return None;
                    }
                    (AggFn::Integral | AggFn::Median, _) => ValueType::Double,
                    (AggFn::Sum | AggFn::Avg | AggFn::Min | AggFn::Max, t) => t,
                };
                if scope.in_invoke {
                    self.errors.push(invalid("windows are not allowed in invoke clauses", span));
                    return None;
                }
                let args = self.check_args(stream, target, arity, args, scope, span)?;
                let id = self.windows.len();
                self.windows.push(WindowDecl {
                    id,
                    owner: scope.owner,
                    target,
                    duration: *duration,
                    aggregation: *aggregation,
                    target_ty,
                    result_ty,
                });
                (TypedExprKind::Window { window: id, args }, result_ty)
            }
            ExprKind::Default { inner, default } => {
                let inner_t = self.check_expr(inner, scope);
                let default_t = self.check_expr(default, scope);
                let (inner_t, default_t) = (inner_t?, default_t?);
                let Some(ty) = inner_t.ty.join(default_t.ty) else {
                    self.errors.push(mismatch(inner_t.ty, default_t.ty, default.span));
                    return None;
                };
                (TypedExprKind::Default { inner: Box::new(inner_t), default: Box::new(default_t) }, ty)
            }
            ExprKind::Unary { op, operand } => {
                let t = self.check_expr(operand, scope)?;
                let ok = match op {
                    UnaryOp::Not => t.ty == ValueType::Bool,
                    UnaryOp::Neg => t.ty.is_numeric(),
                };
                if !ok {
                    let expected = if *op == UnaryOp::Not { "bool" } else { "numeric" };
                    self.errors.push(mismatch(expected, t.ty, operand.span));
                    return None;
                }
                let ty = t.ty;
                (TypedExprKind::Unary { op: *op, operand: Box::new(t) }, ty)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.check_expr(lhs, scope);
                let r = self.check_expr(rhs, scope);
                let (l, r) = (l?, r?);
                let ty = if op.is_logical() {
                    if l.ty != ValueType::Bool || r.ty != ValueType::Bool {
                        let bad = if l.ty != ValueType::Bool { (&l, lhs) } else { (&r, rhs) };
                        self.errors.push(mismatch("bool", bad.0.ty, bad.1.span));
                        return None;
                    }
                    ValueType::Bool
                } else if op.is_arithmetic() || matches!(op, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge) {
                    if !l.ty.is_numeric() || !r.ty.is_numeric() {
                        let bad = if !l.ty.is_numeric() { (&l, lhs) } else { (&r, rhs) };
                        self.errors.push(mismatch("numeric", bad.0.ty, bad.1.span));
                        return None;
                    }
                    if op.is_arithmetic() {
                        l.ty.join(r.ty).expect("numeric types join")
                    } else {
                        ValueType::Bool
                    }
                } else {
                    if l.ty.join(r.ty).is_none() {
                        self.errors.push(mismatch(l.ty, r.ty, rhs.span));
                        return None;
                    }
                    ValueType::Bool
                };
                (TypedExprKind::Binary { op: *op, lhs: Box::new(l), rhs: Box::new(r) }, ty)
            }
            ExprKind::IfThenElse { cond, then, otherwise } => {
                let c = self.expect_type(cond, scope, ValueType::Bool);
                let t = self.check_expr(then, scope);
                let o = self.check_expr(otherwise, scope);
                let (c, t, o) = (c?, t?, o?);
                let Some(ty) = t.ty.join(o.ty) else {
                    self.errors.push(mismatch(t.ty, o.ty, otherwise.span));
                    return None;
                };
                (TypedExprKind::Ite { cond: Box::new(c), then: Box::new(t), otherwise: Box::new(o) }, ty)
            }
            ExprKind::FnCall { function, args } => {
                let Some(builtin) = Builtin::from_name(function) else {
                    self.errors.push(TypeError::UnknownName { name: function.clone(), span });
                    return None;
                };
                if args.len() != builtin.arity() {
                    self.errors.push(TypeError::Arity {
                        name: function.clone(),
                        expected: builtin.arity(),
                        found: args.len(),
                        span,
                    });
                    return None;
                }
                let mut typed = Vec::with_capacity(args.len());
                for arg in args {
                    let t = self.check_expr(arg, scope)?;
                    if !t.ty.is_numeric() {
                        self.errors.push(mismatch("numeric", t.ty, arg.span));
                        return None;
                    }
                    typed.push(t);
                }
                let ty = match builtin {
                    Builtin::Abs => typed[0].ty,
                    Builtin::Sqrt => ValueType::Double,
                    Builtin::Min | Builtin::Max => typed[0].ty.join(typed[1].ty).expect("numeric types join"),
                };
                (TypedExprKind::Call { function: builtin, args: typed }, ty)
            }
        };
        Some(TypedExpr { kind, ty })
    }
}

fn collect_bare_outputs<'e>(e: &'e Expression, f: &mut impl FnMut(&'e str)) {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::ParamRef(_) => {}
        ExprKind::StreamAccess { stream, args, .. } | ExprKind::WindowAccess { stream, args, .. } => {
            if args.is_empty() {
                f(stream);
            }
            args.iter().for_each(|a| collect_bare_outputs(a, f));
        }
        ExprKind::FnCall { args, .. } => args.iter().for_each(|a| collect_bare_outputs(a, f)),
        ExprKind::Default { inner, default } => {
            collect_bare_outputs(inner, f);
            collect_bare_outputs(default, f);
        }
        ExprKind::Unary { operand, .. } => collect_bare_outputs(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            collect_bare_outputs(lhs, f);
            collect_bare_outputs(rhs, f);
        }
        ExprKind::IfThenElse { cond, then, otherwise } => {
            collect_bare_outputs(cond, f);
            collect_bare_outputs(then, f);
            collect_bare_outputs(otherwise, f);
        }
    }
}
