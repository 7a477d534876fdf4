//! Polynomial expressions in `p_0..p_{n-1}` for realization files.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' INT)*
//! atom    := INT ('/' INT)? | 'p_' INT | '(' sum ')'
//! ```
//!
//! Whitespace is ignored. Exponents are non-negative integer literals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::ParseError;
use crate::scalar::ExactScalar;
use crate::series::GradedSeries;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Non-negative rational literal; signs are `Neg` nodes.
    Lit(BigRational),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let digits = |start: usize| {
        let mut j = start;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, i));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let end = digits(i);
            let n: BigInt = src[i..end].parse().expect("ascii digits");
            out.push((Tok::Int(n), i));
            i = end;
        } else if c == b'p' {
            if bytes.get(i + 1) != Some(&b'_') {
                return Err(ParseError::Syntax {
                    offset: i,
                    message: "expected '_' after 'p'".into(),
                });
            }
            let end = digits(i + 2);
            if end == i + 2 {
                return Err(ParseError::Syntax {
                    offset: i + 2,
                    message: "expected variable index after 'p_'".into(),
                });
            }
            let idx = src[i + 2..end].parse::<usize>().map_err(|_| ParseError::Syntax {
                offset: i + 2,
                message: "variable index too large".into(),
            })?;
            out.push((Tok::Var(idx), i));
            i = end;
        } else {
            let ch = src[i..].chars().next().expect("in bounds");
            return Err(ParseError::Syntax {
                offset: i,
                message: format!("unexpected character {ch:?}"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {what}, found {found}"),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let at = self.offset();
            let e = match self.peek().clone() {
                Tok::Int(e) => {
                    self.bump();
                    e
                }
                Tok::Minus => return Err(ParseError::NegativeExponent { offset: at }),
                _ => return Err(self.unexpected("an integer exponent")),
            };
            if *self.peek() == Tok::Slash {
                return Err(ParseError::FractionalExponent { offset: at });
            }
            let e = u32::try_from(e).map_err(|_| ParseError::Syntax {
                offset: at,
                message: "exponent too large".into(),
            })?;
            base = Expr::Pow(Box::new(base), e);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Int(num) => {
                self.bump();
                if *self.peek() != Tok::Slash {
                    return Ok(Expr::Lit(BigRational::from_integer(num)));
                }
                self.bump();
                let den_at = self.offset();
                match self.peek().clone() {
                    Tok::Int(den) if den.is_zero() => Err(ParseError::Syntax {
                        offset: den_at,
                        message: "zero denominator".into(),
                    }),
                    Tok::Int(den) => {
                        self.bump();
                        Ok(Expr::Lit(BigRational::new(num, den)))
                    }
                    _ => Err(self.unexpected("an integer denominator")),
                }
            }
            Tok::Var(index) => {
                self.bump();
                if index >= self.n {
                    return Err(ParseError::VariableOutOfRange { index, n: self.n, offset: at });
                }
                Ok(Expr::Var(index))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, a variable or '('")),
        }
    }
}

/// Parses `src` as a polynomial in `p_0..p_{n-1}`.
pub fn parse_expression(src: &str, n: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        toks: lex(src)?,
        pos: 0,
        n,
    };
    let e = parser.sum()?;
    if *parser.peek() != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Lit(..) | Expr::Var(..) => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Lit(r) => write!(f, "{r}")?,
            Expr::Var(i) => write!(f, "p_{i}")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.write(f, 1)?;
                f.write_str(" + ")?;
                b.write(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.write(f, 1)?;
                f.write_str(" - ")?;
                b.write(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, 2)?;
                f.write_str("*")?;
                b.write(f, 3)?;
            }
            Expr::Pow(a, e) => {
                match a.as_ref() {
                    Expr::Lit(r) if !r.is_integer() => write!(f, "({r})")?,
                    _ => a.write(f, 5)?,
                }
                write!(f, "^{e}")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

fn lower_exact(e: &Expr, n: usize, kmax: u32) -> GradedSeries {
    let rec = |x: &Expr| lower_exact(x, n, kmax);
    match e {
        Expr::Lit(r) => GradedSeries::constant(n, kmax, ExactScalar::real(r.clone())),
        Expr::Var(i) => GradedSeries::p_var(n, kmax, *i),
        Expr::Neg(a) => rec(a).neg(),
        Expr::Add(a, b) => rec(a).try_add(&rec(b)).expect("same dimension"),
        Expr::Sub(a, b) => rec(a).try_sub(&rec(b)).expect("same dimension"),
        Expr::Mul(a, b) => rec(a).try_mul(&rec(b)).expect("same dimension"),
        Expr::Pow(a, k) => rec(a).pow(*k).expect("same dimension"),
    }
}

/// Expanded polynomial (k-degree 0). With `pmax`, terms above the cap are
/// dropped and a warning is returned.
pub fn lower_to_series(e: &Expr, n: usize, kmax: u32, pmax: Option<u32>) -> (GradedSeries, Vec<String>) {
    let exact = lower_exact(e, n, kmax);
    let mut warnings = Vec::new();
    let capped = exact.clone().with_pmax(pmax);
    if capped.len() != exact.len() {
        warnings.push(format!(
            "expression {e} has terms above p-degree {}; they were truncated",
            pmax.unwrap_or_default()
        ));
    }
    (capped, warnings)
}

/// Builds an expression whose lowering is the given k-free real series.
pub fn expr_from_series(s: &GradedSeries) -> Option<Expr> {
    if !s.is_k_free() || !s.is_real() {
        return None;
    }
    let mut acc: Option<Expr> = None;
    for (m, c) in s.terms() {
        let negative = c.re < BigRational::zero();
        let mag = if negative { -c.re.clone() } else { c.re.clone() };
        let mut factors: Vec<Expr> = Vec::new();
        if !mag.is_one() || m.p.is_zero() {
            factors.push(Expr::Lit(mag));
        }
        for (i, &e) in m.p.as_slice().iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(Expr::Var(i)),
                _ => factors.push(Expr::Pow(Box::new(Expr::Var(i)), e)),
            }
        }
        let term = factors
            .into_iter()
            .reduce(|a, b| Expr::Mul(Box::new(a), Box::new(b)))
            .expect("at least one factor");
        acc = Some(match (acc, negative) {
            (None, false) => term,
            (None, true) => Expr::Neg(Box::new(term)),
            (Some(a), false) => Expr::Add(Box::new(a), Box::new(term)),
            (Some(a), true) => Expr::Sub(Box::new(a), Box::new(term)),
        });
    }
    Some(acc.unwrap_or_else(|| Expr::Lit(BigRational::zero())))
}

/// Convenience: parse and lower in one go, ignoring warnings.
pub fn polynomial(src: &str, n: usize) -> Result<GradedSeries, ParseError> {
    Ok(lower_to_series(&parse_expression(src, n)?, n, 0, None).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::MultiIndex;
    use proptest::prelude::*;

    fn series(terms: &[(&[u32], i64, i64)], n: usize) -> GradedSeries {
        let mut s = GradedSeries::zero(n, 0);
        for (p, num, den) in terms {
            s = s
                .try_add(&GradedSeries::monomial(
                    n,
                    0,
                    MultiIndex::zero(n),
                    MultiIndex::from_vec(p.to_vec()),
                    ExactScalar::ratio(*num, *den),
                ))
                .unwrap();
        }
        s
    }

    #[test]
    fn parses_with_precedence() {
        let e = parse_expression("p_0^2 + 2*p_1", 2).unwrap();
        assert_eq!(
            e,
            Expr::Add(
                Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)),
                Box::new(Expr::Mul(Box::new(Expr::Lit(BigRational::from_integer(2.into()))), Box::new(Expr::Var(1))))
            )
        );
        assert_eq!(polynomial("p_0^2 + 2*p_1", 2).unwrap(), series(&[(&[2, 0], 1, 1), (&[0, 1], 2, 1)], 2));
        // unary minus binds looser than ^
        assert_eq!(polynomial("-p_0^2", 1).unwrap(), series(&[(&[2], -1, 1)], 1));
        assert_eq!(polynomial("2 - 3 - 4", 1).unwrap(), series(&[(&[0], -5, 1)], 1));
    }

    #[test]
    fn rational_literals() {
        let s = polynomial("1/2 * p_0 * (p_0 - 1)", 1).unwrap();
        assert_eq!(s, series(&[(&[2], 1, 2), (&[1], -1, 2)], 1));
        assert_eq!(polynomial(" 6 / 4 ", 1).unwrap(), series(&[(&[0], 3, 2)], 1));
    }

    #[test]
    fn lowering_examples() {
        assert!(polynomial("0", 1).unwrap().is_zero());
        let cube = polynomial("(p_0+1)^3", 1).unwrap();
        assert_eq!(cube, series(&[(&[0], 1, 1), (&[1], 3, 1), (&[2], 3, 1), (&[3], 1, 1)], 1));
        let (capped, warnings) = lower_to_series(&parse_expression("(p_0+1)^3", 1).unwrap(), 1, 2, Some(2));
        assert_eq!(capped.len(), 3);
        assert_eq!(warnings.len(), 1);
        let (_, none) = lower_to_series(&parse_expression("p_0^2", 1).unwrap(), 1, 2, Some(2));
        assert!(none.is_empty());
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_expression("p_2", 2),
            Err(ParseError::VariableOutOfRange { index: 2, n: 2, offset: 0 })
        );
        assert_eq!(parse_expression("p_0^-1", 1), Err(ParseError::NegativeExponent { offset: 4 }));
        assert_eq!(parse_expression("p_0^1/2", 1), Err(ParseError::FractionalExponent { offset: 4 }));
        assert!(matches!(parse_expression("p_0 +", 1), Err(ParseError::Syntax { offset: 5, .. })));
        assert!(matches!(parse_expression("p_0 $ 1", 1), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("(p_0", 1), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("1/0", 1), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("p_0 p_0", 1), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("p_0/2", 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expression("x", 1), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("p_0^", 1), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("1/", 1), Err(ParseError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn printing_examples() {
        for src in ["-p_0^2", "(-p_0)^2", "p_0*-p_1", "(1/2)^3", "p_0 - (p_1 - 1)", "--p_0", "(p_0^2)^3"] {
            let e = parse_expression(src, 2).unwrap();
            assert_eq!(parse_expression(&e.to_string(), 2).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn series_back_to_expression() {
        let s = polynomial("3/2*p_0^2*p_1 - p_1 + 7 - 1/3*p_0", 2).unwrap();
        let e = expr_from_series(&s).unwrap();
        assert_eq!(polynomial(&e.to_string(), 2).unwrap(), s);
        assert_eq!(expr_from_series(&GradedSeries::zero(2, 0)).unwrap().to_string(), "0");
    }

    fn arb_expr(n: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0i64..20, 1i64..5).prop_map(|(a, b)| Expr::Lit(BigRational::new(a.into(), b.into()))),
            (0..n).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner, 0u32..4).prop_map(|(a, e)| Expr::Pow(Box::new(a), e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(3)) {
            let printed = e.to_string();
            let back = parse_expression(&printed, 3).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(polynomial(&printed, 3).unwrap(), lower_exact(&e, 3, 0));
        }

        #[test]
        fn parser_never_panics(s in "[p_0-9+*/^() -]{0,24}") {
            let _ = parse_expression(&s, 2);
        }
    }
}
