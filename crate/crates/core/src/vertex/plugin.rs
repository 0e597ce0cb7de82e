//! JSON plugin families.
//!
//! A plugin file describes an R-matrix as a sum of terms
//! `coeff(h, z) * (A (x) B)` with constant N x N matrices A, B and a scalar
//! coefficient expression over `h`, `z` and the variant-bound special
//! functions. Loaded families are certified on registration exactly like the
//! built-ins.
//!
//! File format:
//!
//! ```json
//! {
//!   "name": "yang-by-hand",
//!   "n": 2,
//!   "variant": "rational",
//!   "terms": [
//!     { "coeff": "1/h", "a": [[[1,0],[0,0]],[[0,0],[1,0]]], "b": ... }
//!   ]
//! }
//! ```
//!
//! Matrix entries are `[re, im]` pairs. `variant` is one of `rational`,
//! `trigonometric` (alias `trig`) or `elliptic`; the elliptic variant
//! requires `"tau": [re, im]`. The optional `"planck_divisor"` declares the
//! refinement of the Planck-argument pole lattice (as for Belavin-type
//! coefficient shifts).
//!
//! Coefficient expressions support `+ - * / ^` (integer powers), parentheses,
//! the constants `i`, `pi`, `tau`, numeric literals with an optional `i`
//! suffix (`0.5i`), the variables `h` and `z`, and the functions `phi(a,b)`,
//! `e1(x)`, `wp(x)`, `exp(x)`, `sinh(x)`, `cosh(x)`, `coth(x)`.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::FunctionVariant;
use crate::tensor::{SlotShape, TensorOp};
use crate::vertex::{custom_family, RFamily};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PluginFile {
    name: String,
    n: usize,
    variant: String,
    #[serde(default)]
    tau: Option<[f64; 2]>,
    #[serde(default)]
    planck_divisor: Option<u32>,
    terms: Vec<PluginTerm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PluginTerm {
    coeff: String,
    a: Vec<Vec<[f64; 2]>>,
    b: Vec<Vec<[f64; 2]>>,
}

/// Parsed header of a plugin file: enough to resolve configuration before
/// paying for construction and certification.
#[derive(Debug, Clone)]
pub struct PluginHeader {
    pub name: String,
    pub n: usize,
    pub variant: FunctionVariant,
}

fn parse_variant(name: &str, tau: Option<[f64; 2]>) -> Result<FunctionVariant> {
    match name {
        "rational" => Ok(FunctionVariant::Rational),
        "trigonometric" | "trig" => Ok(FunctionVariant::Trigonometric),
        "elliptic" => {
            let t = tau.ok_or_else(|| Error::Plugin("elliptic variant requires tau".into()))?;
            FunctionVariant::elliptic(Complex64::new(t[0], t[1]))
        }
        other => Err(Error::Plugin(format!("unknown variant '{other}'"))),
    }
}

fn read_file(path: &Path) -> Result<PluginFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Plugin(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Plugin(format!("{}: {e}", path.display())))
}

/// Read only the metadata of a plugin file.
pub fn read_header(path: &Path) -> Result<PluginHeader> {
    let file = read_file(path)?;
    Ok(PluginHeader {
        variant: parse_variant(&file.variant, file.tau)?,
        name: file.name,
        n: file.n,
    })
}

/// Load, compile and certify a plugin family.
pub fn load_plugin(path: &Path) -> Result<RFamily> {
    let file = read_file(path)?;
    let variant = parse_variant(&file.variant, file.tau)?;
    if file.n == 0 {
        return Err(Error::Plugin("n must be positive".into()));
    }
    if file.terms.is_empty() {
        return Err(Error::Plugin("plugin needs at least one term".into()));
    }

    let mut compiled: Vec<(Expr, TensorOp)> = Vec::with_capacity(file.terms.len());
    for (idx, term) in file.terms.iter().enumerate() {
        let expr = parse_expr(&term.coeff)
            .map_err(|e| Error::Plugin(format!("term {idx}: {e}")))?;
        let a = matrix_from(&term.a, file.n)
            .map_err(|e| Error::Plugin(format!("term {idx} matrix a: {e}")))?;
        let b = matrix_from(&term.b, file.n)
            .map_err(|e| Error::Plugin(format!("term {idx} matrix b: {e}")))?;
        let one_slot = SlotShape::new(vec![file.n]);
        let kron = TensorOp::from_matrix(one_slot.clone(), a)
            .kron(&TensorOp::from_matrix(one_slot, b));
        compiled.push((expr, kron));
    }
    let compiled = Arc::new(compiled);
    let shape = SlotShape::new(vec![file.n, file.n]);

    let eval_terms = Arc::clone(&compiled);
    let eval = Arc::new(move |h: Complex64, z: Complex64| -> Result<TensorOp> {
        let mut acc = TensorOp::zeros(shape.clone());
        for (expr, kron) in eval_terms.iter() {
            acc = &acc + &kron.scale(expr.eval(h, z, &variant)?);
        }
        Ok(acc)
    });

    custom_family(
        file.name,
        file.n,
        variant,
        file.planck_divisor.unwrap_or(1),
        eval,
        None,
        None,
    )
}

fn matrix_from(rows: &[Vec<[f64; 2]>], n: usize) -> std::result::Result<Array2<Complex64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("expected an {n} x {n} matrix"));
    }
    let mut mat = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            mat[[i, j]] = Complex64::new(re, im);
        }
    }
    Ok(mat)
}

// --- coefficient expression language ---------------------------------------

#[derive(Debug, Clone)]
pub(crate) enum Expr {
    Num(Complex64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Var {
    H,
    Z,
    Tau,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Func {
    Phi,
    E1,
    Wp,
    Exp,
    Sinh,
    Cosh,
    Coth,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Phi => 2,
            _ => 1,
        }
    }
}

impl Expr {
    pub(crate) fn eval(
        &self,
        h: Complex64,
        z: Complex64,
        variant: &FunctionVariant,
    ) -> Result<Complex64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::H) => h,
            Expr::Var(Var::Z) => z,
            Expr::Var(Var::Tau) => match variant {
                FunctionVariant::Elliptic { tau } => *tau,
                _ => {
                    return Err(Error::Plugin(
                        "tau is only defined for the elliptic variant".into(),
                    ))
                }
            },
            Expr::Neg(e) => -e.eval(h, z, variant)?,
            Expr::Add(a, b) => a.eval(h, z, variant)? + b.eval(h, z, variant)?,
            Expr::Sub(a, b) => a.eval(h, z, variant)? - b.eval(h, z, variant)?,
            Expr::Mul(a, b) => a.eval(h, z, variant)? * b.eval(h, z, variant)?,
            Expr::Div(a, b) => {
                let denom = b.eval(h, z, variant)?;
                if denom.norm() < 1e-12 {
                    return Err(Error::PoleProximity {
                        context: "plugin coefficient division".into(),
                        value: denom,
                        distance: denom.norm(),
                    });
                }
                a.eval(h, z, variant)? / denom
            }
            Expr::Pow(a, k) => a.eval(h, z, variant)?.powi(*k),
            Expr::Call(f, args) => {
                let x = args[0].eval(h, z, variant)?;
                match f {
                    Func::Phi => variant.phi(x, args[1].eval(h, z, variant)?)?,
                    Func::E1 => variant.e1(x)?,
                    Func::Wp => variant.wp(x)?,
                    Func::Exp => x.exp(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Coth => x.cosh() / x.sinh(),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64, bool), // value, imaginary suffix
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> std::result::Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    while i < bytes.len() {
        let ch = bytes[i];
        match ch {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| format!("bad number '{text}'"))?;
                let imaginary = i < bytes.len() && bytes[i] == 'i' && {
                    // 'i' ends the literal only when not starting an identifier
                    let next = bytes.get(i + 1);
                    !matches!(next, Some(c) if c.is_ascii_alphanumeric() || *c == '_')
                };
                if imaginary {
                    i += 1;
                }
                tokens.push(Token::Num(value, imaginary));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> std::result::Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, String> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Star => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Expr, String> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, String> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.next();
            let negative = if matches!(self.peek(), Some(Token::Minus)) {
                self.next();
                true
            } else {
                false
            };
            match self.next() {
                Some(Token::Num(v, false)) if v.fract() == 0.0 => {
                    let k = v as i32;
                    return Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }));
                }
                other => return Err(format!("exponent must be an integer, found {other:?}")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, String> {
        match self.next() {
            Some(Token::Num(v, imaginary)) => Ok(Expr::Num(if imaginary {
                Complex64::new(0.0, v)
            } else {
                Complex64::new(v, 0.0)
            })),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    let func = match name.as_str() {
                        "phi" => Func::Phi,
                        "e1" => Func::E1,
                        "wp" => Func::Wp,
                        "exp" => Func::Exp,
                        "sinh" => Func::Sinh,
                        "cosh" => Func::Cosh,
                        "coth" => Func::Coth,
                        other => return Err(format!("unknown function '{other}'")),
                    };
                    self.next();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Token::Comma)) {
                        self.next();
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    if args.len() != func.arity() {
                        return Err(format!(
                            "{name} takes {} argument(s), got {}",
                            func.arity(),
                            args.len()
                        ));
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    match name.as_str() {
                        "h" => Ok(Expr::Var(Var::H)),
                        "z" => Ok(Expr::Var(Var::Z)),
                        "tau" => Ok(Expr::Var(Var::Tau)),
                        "i" => Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                        "pi" => Ok(Expr::Num(Complex64::new(PI, 0.0))),
                        other => Err(format!("unknown identifier '{other}'")),
                    }
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

pub(crate) fn parse_expr(src: &str) -> std::result::Result<Expr, String> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!(
            "trailing input after expression at token {}",
            parser.pos
        ));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eval(src: &str, h: Complex64, z: Complex64) -> Complex64 {
        parse_expr(src)
            .unwrap()
            .eval(h, z, &FunctionVariant::Rational)
            .unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        let h = c(2.0, 0.0);
        let z = c(4.0, 0.0);
        assert!((eval("1/h + 1/z", h, z) - c(0.75, 0.0)).norm() < 1e-15);
        assert!((eval("2 + 3 * 4", h, z) - c(14.0, 0.0)).norm() < 1e-15);
        assert!((eval("(2 + 3) * 4", h, z) - c(20.0, 0.0)).norm() < 1e-15);
        assert!((eval("-h^2", h, z) - c(-4.0, 0.0)).norm() < 1e-15);
        assert!((eval("z^-1", h, z) - c(0.25, 0.0)).norm() < 1e-15);
        assert!((eval("1.5i * 2", h, z) - c(0.0, 3.0)).norm() < 1e-15);
        assert!((eval("i^2", h, z) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn functions_evaluate_through_the_variant() {
        let h = c(1.0, 0.0);
        let z = c(1.0, 0.0);
        assert!((eval("phi(h, z)", h, z) - c(2.0, 0.0)).norm() < 1e-15);
        assert!((eval("e1(z) + wp(z)", h, z) - c(2.0, 0.0)).norm() < 1e-15);
        assert!((eval("exp(0)", h, z) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(parse_expr("1 +").is_err());
        assert!(parse_expr("foo(h)").is_err());
        assert!(parse_expr("h ^ z").is_err());
        assert!(parse_expr("phi(h)").is_err());
        assert!(parse_expr("2 $ 2").is_err());
    }
}
