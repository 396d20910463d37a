use super::{BinOp, FuncExpr, OrderFn, UnOp, Var};
use crate::error::{Error, Result};
use crate::numerics::LogNum;

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// IEEE evaluation with every variable bound to `x`.
pub(crate) fn eval_plain(e: &FuncExpr, x: Option<f64>) -> Result<f64> {
    let v = match e {
        FuncExpr::Const(c) => *c,
        FuncExpr::Var(v) => x.ok_or_else(|| Error::UnboundVariable(v.name().into()))?,
        FuncExpr::Unary(op, c) => {
            let a = eval_plain(c, x)?;
            match op {
                UnOp::Neg => -a,
                UnOp::Exp => a.exp(),
                UnOp::Ln => {
                    if a < 0.0 {
                        return Err(domain(format!("ln of negative value {a}")));
                    }
                    a.ln()
                }
                UnOp::Sqrt => {
                    if a < 0.0 {
                        return Err(domain(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                UnOp::Abs => a.abs(),
                UnOp::Sin => a.sin(),
            }
        }
        FuncExpr::Binary(op, l, r) => {
            let a = eval_plain(l, x)?;
            let b = eval_plain(r, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
    };
    if v.is_nan() {
        return Err(domain(format!("`{e}` is undefined here")));
    }
    Ok(v)
}

/// Evaluates `e` under an explicit binding.
pub(crate) fn eval_expr(e: &FuncExpr, binding: &[(Var, f64)]) -> Result<f64> {
    match e.variable() {
        None => eval_plain(e, None),
        Some(var) => {
            let x = binding
                .iter()
                .find(|(v, _)| *v == var)
                .map(|(_, x)| *x)
                .ok_or_else(|| Error::UnboundVariable(var.name().into()))?;
            eval_plain(e, Some(x))
        }
    }
}

/// Evaluation in signed log arithmetic; domain errors yield NaN.
pub(crate) fn eval_lognum(e: &FuncExpr, x: LogNum) -> LogNum {
    match e {
        FuncExpr::Const(c) => LogNum::from_f64(*c),
        FuncExpr::Var(_) => x,
        FuncExpr::Unary(op, c) => {
            let a = eval_lognum(c, x);
            match op {
                UnOp::Neg => a.neg(),
                UnOp::Exp => a.exp(),
                UnOp::Ln => a.ln(),
                UnOp::Sqrt => a.sqrt(),
                UnOp::Abs => a.abs(),
                UnOp::Sin => a.sin(),
            }
        }
        FuncExpr::Binary(op, l, r) => {
            let a = eval_lognum(l, x);
            let b = eval_lognum(r, x);
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => a.div(b),
                BinOp::Pow => a.pow(b),
            }
        }
    }
}

/// For `exp(u)` returns `u`, which is `ln` of the expression.
pub(crate) fn derive_log_expr(e: &FuncExpr) -> Option<FuncExpr> {
    match e {
        FuncExpr::Unary(UnOp::Exp, u) => Some((**u).clone()),
        _ => None,
    }
}

/// `ln(rho(alpha))`, through the derived log form when there is one.
pub fn eval_log(order: &OrderFn, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    match &order.log_expr {
        Some(le) => eval_plain(le, Some(alpha)),
        None => {
            let v = eval_plain(&order.expr, Some(alpha))?;
            if v < 0.0 {
                return Err(domain(format!("rho({alpha}) = {v} is negative")));
            }
            Ok(v.ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;
    use approx::assert_relative_eq;

    fn ev(s: &str, x: f64) -> Result<f64> {
        parse_expr(s).unwrap().eval(x)
    }

    #[test]
    fn spot_values() {
        assert_relative_eq!(ev("-1/ln(alpha)", (-2f64).exp()).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(ev("alpha^1", 0.25).unwrap(), 0.25);
        assert_eq!(ev("sqrt(lambda)", 4.0).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ev("ln(alpha)", -1.0), Err(Error::Domain(_))));
        assert!(matches!(ev("sqrt(lambda)", -1.0), Err(Error::Domain(_))));
        assert!(matches!(ev("alpha^0.5", -1.0), Err(Error::Domain(_))));
        assert_eq!(ev("ln(alpha)", 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(ev("exp(alpha)", 1e4).unwrap(), f64::INFINITY);
        let e = parse_expr("alpha").unwrap();
        assert!(matches!(e.eval_with(&[]), Err(Error::UnboundVariable(_))));
        assert_eq!(e.eval_with(&[(Var::Alpha, 3.0)]).unwrap(), 3.0);
    }

    #[test]
    fn lognum_matches_plain() {
        for s in ["alpha^2+alpha", "-1/ln(alpha)", "(1-0.5*sqrt(alpha))^(1/alpha)", "exp(-1/alpha)"] {
            let e = parse_expr(s).unwrap();
            for a in [0.4, 0.1, 1e-3] {
                let p = e.eval(a).unwrap();
                let l = eval_lognum(&e, LogNum::from_f64(a)).value();
                assert_relative_eq!(l, p, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn lognum_deep() {
        let e = parse_expr("(1-0.5*sqrt(alpha))^(1/alpha)").unwrap();
        let v = eval_lognum(&e, LogNum::from_ln(-600.0));
        // ln rho ~ -0.5 / sqrt(alpha) = -0.5 e^{300}
        assert_relative_eq!(v.ln_abs, -0.5 * 300f64.exp(), max_relative = 1e-12);
    }
}
