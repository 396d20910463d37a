//! Closed-form rate functions `rho(alpha)` and source functions
//! `s(lambda)`: a small expression language, evaluation in plain and log
//! arithmetic, grid certification and the "precedes at the origin"
//! comparators.

mod certify;
mod compare;
mod eval;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use certify::{
    certify_order_fn, certify_source_fn, deep_log_points, default_order_grid,
    default_source_grid, OrderFn, OrderLike, SourceFn, SourceLike, TabulatedOrder,
    TabulatedSource,
};
pub use compare::{
    equivalent_at_origin, equivalent_sources, precedes, precedes_samples, precedes_sources,
    Equivalence, Precedence,
};
pub use eval::eval_log;
pub use parser::parse_expr;

use crate::error::Result;

/// Variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Alpha,
    Lambda,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Alpha => "alpha",
            Var::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FuncExpr {
    Const(f64),
    Var(Var),
    Unary(UnOp, Box<FuncExpr>),
    Binary(BinOp, Box<FuncExpr>, Box<FuncExpr>),
}

impl FuncExpr {
    /// The single variable used, if any.
    pub fn variable(&self) -> Option<Var> {
        let mut v = None;
        self.visit_vars(&mut |x| v = Some(x));
        v
    }

    fn visit_vars(&self, f: &mut dyn FnMut(Var)) {
        match self {
            FuncExpr::Const(_) => {}
            FuncExpr::Var(v) => f(*v),
            FuncExpr::Unary(_, c) => c.visit_vars(f),
            FuncExpr::Binary(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    pub(crate) fn uses_both(&self) -> bool {
        let mut a = false;
        let mut l = false;
        self.visit_vars(&mut |x| match x {
            Var::Alpha => a = true,
            Var::Lambda => l = true,
        });
        a && l
    }

    /// Evaluates with the expression's variable bound to `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        eval::eval_plain(self, Some(x))
    }

    /// Evaluates with an explicit variable binding.
    pub fn eval_with(&self, binding: &[(Var, f64)]) -> Result<f64> {
        eval::eval_expr(self, binding)
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncExpr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            FuncExpr::Var(v) => f.write_str(v.name()),
            FuncExpr::Unary(op, c) => match op {
                UnOp::Neg => write!(f, "(-{c})"),
                UnOp::Exp => write!(f, "exp({c})"),
                UnOp::Ln => write!(f, "ln({c})"),
                UnOp::Sqrt => write!(f, "sqrt({c})"),
                UnOp::Abs => write!(f, "abs({c})"),
                UnOp::Sin => write!(f, "sin({c})"),
            },
            FuncExpr::Binary(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

impl From<FuncExpr> for String {
    fn from(e: FuncExpr) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for FuncExpr {
    type Error = crate::error::Error;
    fn try_from(s: String) -> Result<Self> {
        parse_expr(&s)
    }
}

impl std::str::FromStr for FuncExpr {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_expr(s)
    }
}

/// Closed forms that appear throughout the catalog, as DSL text.
pub const CATALOG_EXPRESSIONS: [&str; 14] = [
    "alpha",
    "alpha^0.5",
    "alpha^2",
    "exp(-1/alpha)",
    "-1/ln(alpha)",
    "(-ln(alpha))^(-0.5)",
    "exp(-1/sqrt(alpha))",
    "(1-0.5*sqrt(alpha))^(1/alpha)",
    "lambda",
    "lambda^0.5",
    "lambda/(1+lambda)",
    "lambda^2",
    "lambda^0.25",
    "lambda^(-0.5)*abs(sin(lambda^1.5))",
];
