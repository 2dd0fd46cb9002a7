//! Text syntax for frequencies and vectors.
//!
//! Expressions combine rationals, decimals with optional exponent (read exactly), `sqrtK`, `golden`
//! (`(√5−1)/2`) and `phi` (`(1+√5)/2`) with `+ - * /` and parentheses.
//! Vectors are two comma-separated expressions with an optional kind prefix:
//! `rat:1/3,2/5`, `surd:sqrt2-1,1/2`, `float:0.1,0.2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{DiophantineError, Frequency, QuadraticValue, Vector2};

const MAX_EXPONENT: i64 = 4096;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    offset: usize,
}

type PResult = Result<QuadraticValue, DiophantineError>;

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> DiophantineError {
        DiophantineError::Parse {
            pos: self.offset + self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> PResult {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.term()?;
            let r = if c == b'+' {
                acc.checked_add(&rhs)
            } else {
                acc.checked_sub(&rhs)
            };
            acc = r.ok_or(DiophantineError::Parse {
                pos: self.offset + at,
                msg: "mixed square roots are not supported".into(),
            })?;
        }
        Ok(acc)
    }

    fn term(&mut self) -> PResult {
        let mut acc = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.unary()?;
            if c == b'/' && rhs.is_zero() {
                return Err(DiophantineError::Parse {
                    pos: self.offset + at,
                    msg: "division by zero".into(),
                });
            }
            let r = if c == b'*' {
                acc.checked_mul(&rhs)
            } else {
                acc.checked_div(&rhs)
            };
            acc = r.ok_or(DiophantineError::Parse {
                pos: self.offset + at,
                msg: "mixed square roots are not supported".into(),
            })?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> PResult {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.contains('.') || (int.is_empty() && frac.is_empty()) {
            self.pos = start;
            return Err(self.err(format!("malformed number `{text}`")));
        }
        let digits = format!("{int}{frac}");
        let n: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let exp = self.exponent()? - frac.len() as i64;
        let ten = |k: i64| num_traits::pow(BigInt::from(10), k.unsigned_abs() as usize);
        let r = if exp >= 0 {
            BigRational::from_integer(n * ten(exp))
        } else {
            BigRational::new(n, ten(exp))
        };
        Ok(QuadraticValue::rational(r))
    }

    /// Optional `e±N` suffix of a decimal.
    fn exponent(&mut self) -> Result<i64, DiophantineError> {
        if !matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            return Ok(0);
        }
        let start = self.pos;
        self.pos += 1;
        if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let ds = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start + 1..self.pos]).expect("ascii");
        match text.parse::<i64>() {
            Ok(e) if self.pos > ds && e.abs() <= MAX_EXPONENT => Ok(e),
            _ => {
                self.pos = start;
                Err(self.err(format!("exponent must be an integer of size at most {MAX_EXPONENT}")))
            }
        }
    }

    fn word(&mut self) -> PResult {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let w = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let half = BigRational::new(1.into(), 2.into());
        match w {
            "golden" => Ok(QuadraticValue::new(-half.clone(), half, 5)),
            "phi" => Ok(QuadraticValue::new(half.clone(), half, 5)),
            "sqrt" => {
                let ds = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let k: u64 = std::str::from_utf8(&self.src[ds..self.pos])
                    .expect("ascii")
                    .parse()
                    .map_err(|_| self.err("expected an integer after `sqrt`"))?;
                Ok(QuadraticValue::new(BigRational::zero(), BigRational::one(), k))
            }
            _ => {
                self.pos = start;
                Err(self.err(format!("unknown name `{w}`")))
            }
        }
    }
}

fn parse_expr(s: &str, offset: usize) -> PResult {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
        offset,
    };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

fn parse_with_kind(s: &str, kind: Option<&str>, offset: usize) -> Result<Frequency, DiophantineError> {
    match kind {
        Some("float") => s.trim().parse::<f64>().map(Frequency::from_f64).map_err(|_| DiophantineError::Parse {
            pos: offset,
            msg: format!("malformed float `{}`", s.trim()),
        }),
        Some("rat") => {
            let v = parse_expr(s, offset)?;
            if !v.is_rational() {
                return Err(DiophantineError::Parse {
                    pos: offset,
                    msg: "expected a rational".into(),
                });
            }
            Ok(Frequency::exact(v))
        }
        None | Some("surd") | Some("exact") => parse_expr(s, offset).map(Frequency::exact),
        Some(k) => Err(DiophantineError::Parse {
            pos: 0,
            msg: format!("unknown kind `{k}`"),
        }),
    }
}

fn split_kind(s: &str) -> (Option<&str>, &str, usize) {
    match s.split_once(':') {
        Some((k, rest)) => (Some(k.trim()), rest, k.len() + 1),
        None => (None, s, 0),
    }
}

/// Parses a single frequency such as `golden`, `1/3`, `float:0.25` or `(sqrt5-1)/2`.
pub fn parse_frequency(s: &str) -> Result<Frequency, DiophantineError> {
    let (kind, body, off) = split_kind(s);
    parse_with_kind(body, kind, off)
}

/// Parses `kind:expr,expr`.
pub fn parse_vector(s: &str) -> Result<Vector2, DiophantineError> {
    let (kind, body, off) = split_kind(s);
    let Some((a, b)) = body.split_once(',') else {
        return Err(DiophantineError::Parse {
            pos: s.len(),
            msg: "expected two comma-separated components".into(),
        });
    };
    let x = parse_with_kind(a, kind, off)?;
    let y = parse_with_kind(b, kind, off + a.len() + 1)?;
    Ok(Vector2::new(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        assert_eq!(parse_frequency("1/3").unwrap(), Frequency::ratio(1, 3));
        assert_eq!(parse_frequency("0.125").unwrap(), Frequency::ratio(1, 8));
        assert_eq!(parse_frequency("2.5e-3").unwrap(), Frequency::ratio(1, 400));
        assert_eq!(parse_frequency("3E+2").unwrap(), Frequency::ratio(300, 1));
        assert!(parse_frequency("1e").is_err());
        assert!(parse_frequency("1e99999").is_err());
        assert_eq!(parse_frequency("golden").unwrap(), Frequency::golden());
        assert_eq!(parse_frequency("(sqrt5 - 1)/2").unwrap(), Frequency::golden());
        assert_eq!(parse_frequency("sqrt2-1").unwrap(), Frequency::sqrt2_minus_1());
        assert_eq!(parse_frequency("1/(sqrt2+1)").unwrap(), Frequency::sqrt2_minus_1());
        assert_eq!(parse_frequency("phi - 1").unwrap(), Frequency::golden());
        assert_eq!(parse_frequency("float:0.3").unwrap(), Frequency::from_f64(0.3));
        assert_eq!(parse_frequency("-(2*3)").unwrap(), Frequency::ratio(-6, 1));
    }

    #[test]
    fn vectors() {
        let v = parse_vector("rat:1/3,2/5").unwrap();
        assert_eq!(v, Vector2::new(Frequency::ratio(1, 3), Frequency::ratio(2, 5)));
        let v = parse_vector("surd:sqrt2-1,1/2").unwrap();
        assert_eq!(v.components[0], Frequency::sqrt2_minus_1());
        assert!(parse_vector("rat:1/3").is_err());
        assert!(parse_vector("rat:sqrt2,1").is_err());
    }

    #[test]
    fn error_positions() {
        match parse_frequency("1/3 +") {
            Err(DiophantineError::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match parse_vector("rat:1/3,2/x") {
            Err(DiophantineError::Parse { pos, .. }) => assert_eq!(pos, 10),
            other => panic!("{other:?}"),
        }
        assert!(parse_frequency("sqrt2+sqrt3").is_err());
        assert!(parse_frequency("1/0").is_err());
        assert!(parse_frequency("foo").is_err());
    }
}
