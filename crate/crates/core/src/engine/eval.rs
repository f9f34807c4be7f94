//! Evaluation of typed expressions against the current store.

use crate::ast::{BinOp, Builtin, Offset, TypedExpr, TypedExprKind, TypedSpecification, UnaryOp};
use crate::time::{Rational, Time};
use crate::value::{Value, ValueType};

use super::plan::Plan;
use super::store::Store;

pub(crate) struct Context<'a> {
    pub spec: &'a TypedSpecification,
    pub plan: &'a Plan,
    pub store: &'a Store,
    pub ts: Time,
}

impl Context<'_> {
    /// Evaluates `expr` for the instance with parameter values `params`.
    /// `None` means the value is undefined.
    pub fn eval(&self, expr: &TypedExpr, params: &[Value]) -> Option<Value> {
        let value = match &expr.kind {
            TypedExprKind::Const(v) => *v,
            TypedExprKind::Param(i) => *params.get(*i)?,
            TypedExprKind::Access { target, args, offset } => {
                let key = self.key(args, params, &self.spec.param_types(*target))?;
                let instance = self.store.get(self.spec.vertex(*target), &key)?;
                match offset {
                    Offset::Discrete(n) => instance.back(n.unsigned_abs() as usize)?,
                    Offset::RealTime(d) => instance.at_or_before(self.ts - Time::from_rational_secs(&abs(d)))?,
                }
            }
            TypedExprKind::Window { window, args } => {
                let decl = &self.spec.windows[*window];
                let key = self.key(args, params, &self.spec.param_types(decl.target))?;
                let (vertex, slot) = self.plan.window_slot[*window];
                let instance = self.store.get(vertex, &key)?;
                instance.windows[slot].peek(self.ts)?
            }
            TypedExprKind::Default { inner, default } => match self.eval(inner, params) {
                Some(v) => v,
                None => self.eval(default, params)?,
            },
            TypedExprKind::Unary { op, operand } => {
                let v = self.eval(operand, params)?;
                match (op, v) {
                    (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (UnaryOp::Neg, Value::Int(i)) => Value::Int(i.checked_neg()?),
                    (UnaryOp::Neg, Value::Double(d)) => Value::Double(-d),
                    _ => return None,
                }
            }
            TypedExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                let (l, r) = (self.eval_bool(lhs, params), self.eval_bool(rhs, params));
                match (l, r) {
                    (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                    (Some(true), Some(true)) => Value::Bool(true),
                    _ => return None,
                }
            }
            TypedExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                let (l, r) = (self.eval_bool(lhs, params), self.eval_bool(rhs, params));
                match (l, r) {
                    (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                    (Some(false), Some(false)) => Value::Bool(false),
                    _ => return None,
                }
            }
            TypedExprKind::Binary { op, lhs, rhs } => {
                binary(*op, self.eval(lhs, params)?, self.eval(rhs, params)?)?
            }
            TypedExprKind::Ite { cond, then, otherwise } => {
                if self.eval_bool(cond, params)? {
                    self.eval(then, params)?
                } else {
                    self.eval(otherwise, params)?
                }
            }
            TypedExprKind::Call { function, args } => {
                let values = args.iter().map(|a| self.eval(a, params)).collect::<Option<Vec<_>>>()?;
                call(*function, &values)?
            }
        };
        value.coerce(expr.ty)
    }

    pub fn eval_bool(&self, expr: &TypedExpr, params: &[Value]) -> Option<bool> {
        self.eval(expr, params)?.as_bool()
    }

    fn key(&self, args: &[TypedExpr], params: &[Value], types: &[ValueType]) -> Option<Vec<Value>> {
        args.iter().zip(types).map(|(a, ty)| self.eval(a, params)?.coerce(*ty)).collect()
    }
}

fn abs(r: &Rational) -> Rational {
    if *r < Rational::from_integer(0) {
        -*r
    } else {
        *r
    }
}

fn finite(d: f64) -> Option<Value> {
    d.is_finite().then_some(Value::Double(d))
}

fn binary(op: BinOp, l: Value, r: Value) -> Option<Value> {
    use Value::{Bool, Int};
    if op.is_comparison() {
        let ord = match (l, r) {
            (Bool(a), Bool(b)) => a.cmp(&b),
            (Int(a), Int(b)) => a.cmp(&b),
            _ => l.as_f64()?.partial_cmp(&r.as_f64()?)?,
        };
        let holds = match op {
            BinOp::Eq => ord.is_eq(),
            BinOp::Ne => ord.is_ne(),
            BinOp::Lt => ord.is_lt(),
            BinOp::Le => ord.is_le(),
            BinOp::Gt => ord.is_gt(),
            _ => ord.is_ge(),
        };
        return Some(Bool(holds));
    }
    match (l, r) {
        (Int(a), Int(b)) => Some(Int(match op {
            BinOp::Add => a.checked_add(b)?,
            BinOp::Sub => a.checked_sub(b)?,
            BinOp::Mul => a.checked_mul(b)?,
            BinOp::Div => a.checked_div(b)?,
            BinOp::Rem => a.checked_rem(b)?,
            _ => return None,
        })),
        _ => {
            let (a, b) = (l.as_f64()?, r.as_f64()?);
            finite(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Rem => a % b,
                _ => return None,
            })
        }
    }
}

fn call(function: Builtin, args: &[Value]) -> Option<Value> {
    use Value::{Double, Int};
    match (function, args) {
        (Builtin::Abs, [Int(i)]) => Some(Int(i.checked_abs()?)),
        (Builtin::Abs, [Double(d)]) => Some(Double(d.abs())),
        (Builtin::Sqrt, [v]) => finite(v.as_f64()?.sqrt()),
        (Builtin::Min, [Int(a), Int(b)]) => Some(Int(*a.min(b))),
        (Builtin::Max, [Int(a), Int(b)]) => Some(Int(*a.max(b))),
        (Builtin::Min, [a, b]) => Some(Double(a.as_f64()?.min(b.as_f64()?))),
        (Builtin::Max, [a, b]) => Some(Double(a.as_f64()?.max(b.as_f64()?))),
        _ => None,
    }
}
