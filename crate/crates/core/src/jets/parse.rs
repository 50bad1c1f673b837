//! Reader for polynomial map expressions such as `"x1^2 + x2; 2*x1*x2 - x1^3"`.
//!
//! Grammar (components separated by `;`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' digits | '(' expr ')'
//! ```
//!
//! Division is only allowed by constant subexpressions.

use crate::error::{ParseError, ParseErrorKind};
use crate::scalar::Scalar;

use super::polynomial::{Polynomial, PolynomialMap};

const MAX_EXPONENT: u32 = 64;

type PResult<T> = std::result::Result<T, ParseError>;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

fn err<T>(kind: ParseErrorKind, position: usize) -> PResult<T> {
    Err(ParseError { kind, position })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr<T: Scalar>(&mut self) -> PResult<Polynomial<T>> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term<T: Scalar>(&mut self) -> PResult<Polynomial<T>> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary::<T>()?;
                    match d.as_constant() {
                        None => return err(ParseErrorKind::DivisionByNonConstant, at),
                        Some(c) if c == T::zero() => return err(ParseErrorKind::DivisionByZero, at),
                        Some(c) => acc = acc.scale(T::one() / c),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary<T: Scalar>(&mut self) -> PResult<Polynomial<T>> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary::<T>()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power<T: Scalar>(&mut self) -> PResult<Polynomial<T>> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some(b'-') => return err(ParseErrorKind::NegativeExponent, at),
            Some(c) if c.is_ascii_digit() || c == b'.' => {}
            Some(c) => return err(ParseErrorKind::UnexpectedChar(c as char), at),
            None => return err(ParseErrorKind::UnexpectedEnd, at),
        }
        let text = self.number_text();
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError { kind: ParseErrorKind::BadNumber(text.to_string()), position: at })?;
        if value.fract() != 0.0 {
            return err(ParseErrorKind::FractionalExponent, at);
        }
        if value > MAX_EXPONENT as f64 {
            return err(ParseErrorKind::ExponentTooLarge, at);
        }
        Ok(base.pow(value as u32))
    }

    fn number_text(&mut self) -> &'a str {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        // exponent part, only when followed by a digit (optionally signed)
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < s.len() && (s[look] == b'+' || s[look] == b'-') {
                look += 1;
            }
            if look < s.len() && s[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        std::str::from_utf8(&s[start..self.pos]).expect("ascii")
    }

    fn atom<T: Scalar>(&mut self) -> PResult<Polynomial<T>> {
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            None => err(ParseErrorKind::UnexpectedEnd, at),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    let p = self.pos;
                    return match self.peek() {
                        None => err(ParseErrorKind::ExpectedToken("')'"), p),
                        Some(_) => err(ParseErrorKind::ExpectedToken("')'"), p),
                    };
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let text = self.number_text();
                let v = T::from_str_radix(text, 10).map_err(|_| ParseError {
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                    position: at,
                })?;
                Ok(Polynomial::constant(self.n, v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match variable_index(name) {
                    Some(i) if i >= 1 && i <= self.n => Ok(Polynomial::variable(self.n, i - 1)),
                    _ => err(ParseErrorKind::UnknownVariable(name.to_string()), start),
                }
            }
            Some(c) => err(ParseErrorKind::UnexpectedChar(c as char), at),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Parses `text` as a polynomial map in `x1..xn`.
pub fn parse_polynomial_map<T: Scalar>(text: &str, n: usize) -> Result<PolynomialMap<T>, crate::Error> {
    if n == 0 {
        return Err(crate::Error::InvalidArgument("input dimension must be positive".into()));
    }
    let mut comps = Vec::new();
    let mut offset = 0;
    for piece in text.split(';') {
        let mut p = Parser { src: piece.as_bytes(), pos: 0, n };
        let poly = p.expr::<T>().map_err(|mut e| {
            e.position += offset;
            e
        })?;
        if let Some(c) = p.peek() {
            return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(c as char), position: p.pos + offset }.into());
        }
        comps.push(poly);
        offset += piece.len() + 1;
    }
    PolynomialMap::new(n, comps)
}

/// Largest `k` such that `xk` occurs in `text` (0 when no variable occurs).
pub fn max_variable_index(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if let Some(k) = variable_index(&text[start..i]) {
                best = best.max(k);
            }
        } else {
            i += 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::jets::polynomial::Term;

    fn terms(p: &PolynomialMap<f64>, c: usize) -> Vec<(f64, Vec<u32>)> {
        p.components()[c].terms().iter().map(|t| (t.coefficient, t.exponents.clone())).collect()
    }

    #[test]
    fn reads_simple_sum() {
        let p = parse_polynomial_map::<f64>("x1^2 + x2", 2).unwrap();
        let mut got = terms(&p, 0);
        got.sort_by(|a, b| a.1.cmp(&b.1));
        assert_eq!(got, vec![(1.0, vec![0, 1]), (1.0, vec![2, 0])]);
    }

    #[test]
    fn zero_map() {
        let p = parse_polynomial_map::<f64>("0", 3).unwrap();
        assert!(p.components()[0].is_zero());
        assert_eq!(p.to_string(), "0");
    }

    #[test]
    fn reads_product_and_cubic() {
        let p = parse_polynomial_map::<f64>("2*x1*x2 - x1^3", 2).unwrap();
        let mut got = terms(&p, 0);
        got.sort_by(|a, b| a.1.cmp(&b.1));
        assert_eq!(got, vec![(2.0, vec![1, 1]), (-1.0, vec![3, 0])]);
        // ∂/∂x1 at (1,1) = 2 - 3
        assert_eq!(p.components()[0].partial(0).eval(&[1.0, 1.0]), -1.0);
    }

    #[test]
    fn division_by_constants_and_parentheses() {
        let p = parse_polynomial_map::<f64>("x1^4/4 - x1^2/2; (x1 + 1)^2 / (1 + 1)", 1).unwrap();
        assert_eq!(p.evaluate(&[2.0]), vec![2.0, 4.5]);
        let q = parse_polynomial_map::<f64>("-x1^2 + 1e-3*x1 + 2.5E+1", 1).unwrap();
        assert_eq!(q.evaluate(&[1.0]), vec![-1.0 + 1e-3 + 25.0]);
    }

    #[test]
    fn error_positions() {
        let e = parse_polynomial_map::<f64>("x1 + x3", 2).unwrap_err();
        match e {
            Error::Parse(pe) => {
                assert_eq!(pe.kind, ParseErrorKind::UnknownVariable("x3".into()));
                assert_eq!(pe.position, 5);
            }
            other => panic!("{other:?}"),
        }
        let e = parse_polynomial_map::<f64>("x1; x1^-2", 1).unwrap_err();
        assert!(matches!(e, Error::Parse(ParseError { kind: ParseErrorKind::NegativeExponent, position: 7 })));
        let e = parse_polynomial_map::<f64>("x1^1.5", 1).unwrap_err();
        assert!(matches!(e, Error::Parse(ParseError { kind: ParseErrorKind::FractionalExponent, .. })));
        let e = parse_polynomial_map::<f64>("x1 * (x1 + 2", 1).unwrap_err();
        assert!(matches!(e, Error::Parse(ParseError { kind: ParseErrorKind::ExpectedToken(_), position: 12 })));
        assert!(parse_polynomial_map::<f64>("y + 1", 1).is_err());
        assert!(parse_polynomial_map::<f64>("1 / x1", 1).is_err());
        assert!(parse_polynomial_map::<f64>("x1 x1", 1).is_err());
        assert!(parse_polynomial_map::<f64>("", 1).is_err());
    }

    #[test]
    fn variable_scan() {
        assert_eq!(max_variable_index("x1 + x12*x3"), 12);
        assert_eq!(max_variable_index("3"), 0);
    }

    #[test]
    fn single_precision_parse() {
        let p = parse_polynomial_map::<f32>("0.5*x1", 1).unwrap();
        assert_eq!(p.components()[0].terms(), &[Term { coefficient: 0.5f32, exponents: vec![1] }]);
    }
}
