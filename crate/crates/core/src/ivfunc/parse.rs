//! Recursive-descent parser for interval-valued expressions.
//!
//! ```text
//! expr      ::= term (('+' | '-M') term)*
//! term      ::= interval '*'? real?
//! real      ::= product (('+' | '-') product)*     -- stops before '+ [' / '- ['
//! product   ::= unary ('*' unary)*
//! unary     ::= '-' unary | power
//! power     ::= atom ('^' '-'? integer)?
//! atom      ::= number | 'x' index | func '(' real ')' | '(' real ')'
//! func      ::= 'exp' | 'sin' | 'cos'
//! ```

use crate::error::{Error, Result};
use crate::interval::Interval;

use super::expr::{Func, IvExpr, RealExpr, Term, TermOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Interval(Interval),
    Num(f64),
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    MarkovMinus,
    Star,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        pos,
        msg: msg.into(),
    }
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn number_len(s: &str) -> usize {
        let b = s.as_bytes();
        let mut i = 0;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        if i > 0 && i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            let digits = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            if j > digits {
                i = j;
            }
        }
        i
    }

    fn next(&mut self) -> Result<(usize, Tok)> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let Some(c) = rest.chars().next() else {
            return Ok((start, Tok::Eof));
        };
        let single = |lx: &mut Self, t: Tok| {
            lx.pos += 1;
            Ok((start, t))
        };
        match c {
            '+' => single(self, Tok::Plus),
            '*' => single(self, Tok::Star),
            '^' => single(self, Tok::Caret),
            '(' => single(self, Tok::LParen),
            ')' => single(self, Tok::RParen),
            '-' if rest[1..].starts_with('M') => {
                self.pos += 2;
                Ok((start, Tok::MarkovMinus))
            }
            '-' => single(self, Tok::Minus),
            '[' => {
                let close = rest
                    .find(']')
                    .ok_or_else(|| err(start, "unterminated interval literal"))?;
                let lit = &rest[..=close];
                let iv: Interval = lit.parse().map_err(|e| match e {
                    Error::Parse { msg, .. } => err(start, msg),
                    other => other,
                })?;
                self.pos += close + 1;
                Ok((start, Tok::Interval(iv)))
            }
            'x' => {
                let digits: &str = {
                    let tail = &rest[1..];
                    let n = tail.bytes().take_while(u8::is_ascii_digit).count();
                    &tail[..n]
                };
                let idx: usize = digits
                    .parse()
                    .map_err(|_| err(start, "expected variable index after 'x'"))?;
                if idx == 0 {
                    return Err(err(start, "variables are numbered from x1"));
                }
                self.pos += 1 + digits.len();
                Ok((start, Tok::Var(idx - 1)))
            }
            c if c.is_ascii_digit() || c == '.' => {
                let n = Self::number_len(rest);
                let v: f64 = rest[..n]
                    .parse()
                    .map_err(|_| err(start, format!("bad number {:?}", &rest[..n])))?;
                self.pos += n;
                Ok((start, Tok::Num(v)))
            }
            c if c.is_ascii_alphabetic() => {
                let n = rest.bytes().take_while(u8::is_ascii_alphanumeric).count();
                let func = match &rest[..n] {
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    other => return Err(err(start, format!("unknown identifier {other:?}"))),
                };
                self.pos += n;
                Ok((start, Tok::Func(func)))
            }
            other => Err(err(start, format!("unexpected character {other:?}"))),
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(err(self.pos(), format!("expected {what}")))
        }
    }

    fn iv_expr(&mut self) -> Result<IvExpr> {
        let mut terms = vec![self.term(TermOp::Plus)?];
        loop {
            let op = match self.peek() {
                Tok::Plus => TermOp::Plus,
                Tok::MarkovMinus => TermOp::MarkovMinus,
                Tok::Eof => break,
                Tok::Minus => return Err(err(
                    self.pos(),
                    "plain '-' between terms is not allowed; use '-M' for the Markov difference",
                )),
                _ => return Err(err(self.pos(), "expected '+', '-M' or end of input")),
            };
            self.bump();
            terms.push(self.term(op)?);
        }
        IvExpr::new(terms)
    }

    fn term(&mut self, op: TermOp) -> Result<Term> {
        let coeff = match self.bump() {
            Tok::Interval(iv) => iv,
            _ => {
                self.at = self.at.saturating_sub(1);
                return Err(err(self.pos(), "expected interval coefficient like [a,b]"));
            }
        };
        if *self.peek() == Tok::Star {
            self.bump();
        }
        let basis = match self.peek() {
            Tok::Plus | Tok::MarkovMinus | Tok::Eof => RealExpr::Const(1.0),
            _ => self.sum()?,
        };
        Ok(Term { op, coeff, basis })
    }

    fn sum(&mut self) -> Result<RealExpr> {
        let mut lhs = self.product()?;
        loop {
            let plus = match self.peek() {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => break,
            };
            // '+ [' starts the next term
            if matches!(self.peek2(), Tok::Interval(_)) {
                break;
            }
            self.bump();
            let rhs = self.product()?;
            lhs = if plus {
                RealExpr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                RealExpr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<RealExpr> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            lhs = RealExpr::mul(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RealExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(RealExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<RealExpr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v <= f64::from(i32::MAX) => {
                let k = v as i32;
                Ok(RealExpr::pow(base, if neg { -k } else { k }))
            }
            _ => Err(err(pos, "exponent must be an integer")),
        }
    }

    fn atom(&mut self) -> Result<RealExpr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(RealExpr::Const(v)),
            Tok::Var(i) if i < self.dim => Ok(RealExpr::Var(i)),
            Tok::Var(i) => Err(err(
                pos,
                format!("unknown variable x{} (dimension is {})", i + 1, self.dim),
            )),
            Tok::Func(f) => {
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(RealExpr::Call(f, Box::new(arg)))
            }
            Tok::LParen => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Interval(_) => Err(err(
                pos,
                "interval literal inside a real expression; join terms with '+' or '-M'",
            )),
            _ => Err(err(pos, "expected a number, variable, function or '('")),
        }
    }
}

fn parser_for(text: &str, dim: usize) -> Result<Parser> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let mut toks = Vec::new();
    loop {
        let (p, t) = lexer.next()?;
        let done = t == Tok::Eof;
        toks.push((p, t));
        if done {
            break;
        }
    }
    Ok(Parser { toks, at: 0, dim })
}

/// Parses an interval-valued expression over `x1..x{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<IvExpr> {
    parser_for(text, dim)?.iv_expr()
}

/// Parses a plain real expression over `x1..x{dim}` (no interval literals).
pub fn parse_real(text: &str, dim: usize) -> Result<RealExpr> {
    let mut parser = parser_for(text, dim)?;
    let e = parser.sum()?;
    match parser.peek() {
        Tok::Eof => Ok(e),
        _ => Err(err(parser.pos(), "unexpected trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "[2,4]*x1^2 + [2,3]*x1*x2 + [1,2]*x2^2 + [1,2]*x1 -M [1,3]*x2";

    #[test]
    fn example_has_five_terms_ending_in_markov() {
        let e = parse(EXAMPLE, 2).unwrap();
        assert_eq!(e.terms().len(), 5);
        let ops: Vec<_> = e.terms().iter().map(|t| t.op).collect();
        assert_eq!(ops[..4], [TermOp::Plus; 4]);
        assert_eq!(ops[4], TermOp::MarkovMinus);
        assert_eq!(e.terms()[1].coeff, Interval::new(2.0, 3.0).unwrap());
    }

    #[test]
    fn single_term_identity_coefficient() {
        let e = parse("[1,1]*x1", 1).unwrap();
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.terms()[0].coeff, Interval::ONE);
        assert_eq!(e.terms()[0].basis, RealExpr::Var(0));
    }

    #[test]
    fn reversed_literal_is_sorted() {
        let e = parse("[3,-3]*x1", 1).unwrap();
        assert_eq!(e.terms()[0].coeff, Interval::new(-3.0, 3.0).unwrap());
    }

    #[test]
    fn optional_star_and_constant_terms() {
        let e = parse("[2,4]x1^2 + [1,2]", 1).unwrap();
        assert_eq!(e.terms()[1].basis, RealExpr::Const(1.0));
        assert_eq!(e.eval(&[1.0]).unwrap(), Interval::new(3.0, 6.0).unwrap());
    }

    #[test]
    fn real_minus_stays_inside_basis() {
        let e = parse("[1,2]*(x1 - x2) + [1,1]*x2", 2).unwrap();
        assert_eq!(e.terms().len(), 2);
        let e = parse("[1,2]*x1 - 2*x2", 2).unwrap();
        assert_eq!(e.terms().len(), 1);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("[1,2]*x3", 2) {
            Err(Error::Parse { pos, msg }) => {
                assert_eq!(pos, 6);
                assert!(msg.contains("x3"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("[1,2]*x1 - [1,3]*x2", 2),
            Err(Error::Parse { pos: 9, .. })
        ));
        assert!(parse("x1", 1).is_err());
        assert!(parse("[1,2]*x1^1.5", 1).is_err());
        assert!(parse("[1,2]*foo(x1)", 1).is_err());
        assert!(parse("[1,2*x1", 1).is_err());
        assert!(parse("", 1).is_err());
    }

    #[test]
    fn real_expressions() {
        let e = parse_real("x1^2 - 2*x2", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 1.0]), 7.0);
        assert!(parse_real("x1 x2", 2).is_err());
        assert!(parse_real("[1,2]", 2).is_err());
    }

    #[test]
    fn functions_and_negative_powers() {
        let e = parse("[1,1]*exp(x1) + [1,1]*sin(x1)*cos(x1) + [1,1]*x1^-2", 1).unwrap();
        let v = e.eval(&[0.5]).unwrap();
        let want = 0.5f64.exp() + 0.5f64.sin() * 0.5f64.cos() + 4.0;
        assert!((v.lo() - want).abs() < 1e-12);
    }

    #[test]
    fn print_reparses_to_same_tree() {
        for text in [
            EXAMPLE,
            "[1,2]*-x1*x2^3 -M [0.5,1e-3]*(x1 + x2)^2",
            "[-1,1]*exp(-x1^2) + [2,2]*-(x1 - x2)",
        ] {
            let e = parse(text, 2).unwrap();
            let printed = e.to_string();
            let again = parse(&printed, 2).unwrap();
            assert_eq!(again, e, "{printed}");
            assert_eq!(again.to_string(), printed);
        }
    }
}
