//! Pretty printer producing source text the parser reads back to the same tree.

use std::fmt::Write;

use crate::ast::{ExprKind, Expression, Offset, Specification, TriggerKind, UnaryOp};
use crate::time::format_duration;
use crate::value::Value;

pub fn print_specification(spec: &Specification) -> String {
    let mut out = String::new();
    for input in &spec.inputs {
        let prefix = if input.is_time { "time " } else { "" };
        let _ = writeln!(out, "{prefix}input {} {}", input.ty, input.name);
    }
    for output in &spec.outputs {
        let _ = write!(out, "output {} {}", output.ty, output.name);
        if !output.params.is_empty() {
            let params: Vec<String> = output.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
            let _ = write!(out, "<{}>", params.join(", "));
        }
        if let Some(clock) = &output.clock {
            let _ = write!(out, ": {clock}");
        }
        if let Some(invoke) = &output.invoke {
            let args: Vec<String> = invoke.iter().map(print_expression).collect();
            let _ = write!(out, "\n  invoke: {}", args.join(", "));
        }
        if let Some(extend) = &output.extend {
            let _ = write!(out, "\n  extend: {}", print_expression(extend));
        }
        if let Some(terminate) = &output.terminate {
            let _ = write!(out, "\n  terminate: {}", print_expression(terminate));
        }
        let _ = writeln!(out, "\n  := {}", print_expression(&output.expr));
    }
    for trigger in &spec.triggers {
        match &trigger.kind {
            TriggerKind::Plain(e) => {
                let _ = write!(out, "trigger {}", print_expression(e));
            }
            TriggerKind::Any(e) => {
                let _ = write!(out, "trigger any({})", print_expression(e));
            }
            TriggerKind::Count { stream, cmp, bound, .. } => {
                let _ = write!(out, "trigger count({stream}) {} {bound}", cmp.symbol());
            }
        }
        if let Some(message) = &trigger.message {
            let escaped = message.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n").replace('\t', "\\t");
            let _ = write!(out, " \"{escaped}\"");
        }
        out.push('\n');
    }
    out
}

/// Prints an expression; every compound sub-expression is parenthesized.
pub fn print_expression(e: &Expression) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn is_compound(e: &Expression) -> bool {
    match &e.kind {
        ExprKind::Default { .. } | ExprKind::Unary { .. } | ExprKind::Binary { .. } | ExprKind::IfThenElse { .. } => true,
        ExprKind::Const(Value::Int(i)) => *i < 0,
        ExprKind::Const(Value::Double(d)) => d.is_sign_negative(),
        _ => false,
    }
}

fn write_child(out: &mut String, e: &Expression) {
    if is_compound(e) {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_args(out: &mut String, args: &[Expression]) {
    if args.is_empty() {
        return;
    }
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
    out.push(')');
}

fn write_expr(out: &mut String, e: &Expression) {
    match &e.kind {
        ExprKind::Const(Value::Double(d)) => {
            let _ = write!(out, "{d:?}");
        }
        ExprKind::Const(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::ParamRef(name) => out.push_str(name),
        ExprKind::StreamAccess { stream, args, offset } => {
            out.push_str(stream);
            write_args(out, args);
            match offset {
                Offset::Discrete(0) => {}
                Offset::Discrete(n) => {
                    let _ = write!(out, "[{n}]");
                }
                Offset::RealTime(d) => {
                    let _ = write!(out, "[{}]", format_duration(d));
                }
            }
        }
        ExprKind::WindowAccess { stream, args, duration, aggregation } => {
            out.push_str(stream);
            write_args(out, args);
            let _ = write!(out, "[{}, {}]", format_duration(duration), aggregation);
        }
        ExprKind::Default { inner, default } => {
            write_child(out, inner);
            out.push('?');
            write_child(out, default);
        }
        ExprKind::Unary { op, operand } => {
            out.push(if *op == UnaryOp::Not { '!' } else { '-' });
            write_child(out, operand);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            write_child(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_child(out, rhs);
        }
        ExprKind::IfThenElse { cond, then, otherwise } => {
            out.push_str("if ");
            write_child(out, cond);
            out.push_str(" then ");
            write_child(out, then);
            out.push_str(" else ");
            write_child(out, otherwise);
        }
        ExprKind::FnCall { function, args } => {
            out.push_str(function);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}
