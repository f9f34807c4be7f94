//! Efficiently bound templates: extend conditions that pin every parameter to
//! the current value of an input stream.

use crate::ast::{BinOp, Offset, StreamRef, TypedExpr, TypedExprKind, TypedOutput};

/// One conjunction of `parameter = input` atoms.
pub type BindingClause = Vec<(usize, usize)>;

/// Clause count above which the disjunctive form is not expanded.
const MAX_CLAUSES: usize = 64;

fn atom(expr: &TypedExpr) -> Option<(usize, usize)> {
    let TypedExprKind::Binary { op: BinOp::Eq, lhs, rhs } = &expr.kind else { return None };
    let input = |e: &TypedExpr| match &e.kind {
        TypedExprKind::Access { target: StreamRef::Input(i), args, offset: Offset::Discrete(0) } if args.is_empty() => {
            Some(*i)
        }
        _ => None,
    };
    match (&lhs.kind, &rhs.kind) {
        (TypedExprKind::Param(p), _) => input(rhs).map(|i| (*p, i)),
        (_, TypedExprKind::Param(p)) => input(lhs).map(|i| (*p, i)),
        _ => None,
    }
}

fn is_positive_binding_formula(expr: &TypedExpr) -> bool {
    match &expr.kind {
        TypedExprKind::Binary { op: BinOp::And | BinOp::Or, lhs, rhs } => {
            is_positive_binding_formula(lhs) && is_positive_binding_formula(rhs)
        }
        _ => atom(expr).is_some(),
    }
}

/// Whether the template's extend condition is a negation-free combination of
/// `parameter = input` equalities. Templates without parameters qualify.
pub fn classify_efficiently_bound(output: &TypedOutput) -> bool {
    if output.params.is_empty() {
        return true;
    }
    output.extend.as_ref().is_some_and(is_positive_binding_formula)
}

/// The condition in disjunctive normal form over binding atoms, or `None`
/// if it is not a positive binding formula (or expands too far).
pub fn binding_clauses(expr: &TypedExpr) -> Option<Vec<BindingClause>> {
    match &expr.kind {
        TypedExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
            let mut clauses = binding_clauses(lhs)?;
            clauses.extend(binding_clauses(rhs)?);
            (clauses.len() <= MAX_CLAUSES).then_some(clauses)
        }
        TypedExprKind::Binary { op: BinOp::And, lhs, rhs } => {
            let left = binding_clauses(lhs)?;
            let right = binding_clauses(rhs)?;
            if left.len() * right.len() > MAX_CLAUSES {
                return None;
            }
            Some(
                left.iter()
                    .flat_map(|l| right.iter().map(move |r| l.iter().chain(r).copied().collect()))
                    .collect(),
            )
        }
        _ => atom(expr).map(|a| vec![vec![a]]),
    }
}
