//! Model strings such as `MAGMAR(4,1)-ging-t`.
//!
//! Grammar: `MAGMAR(<p>,<q>)-<ar codes>[-<mag codes>]`, one code per lag from
//! `n` (normal), `t`, `g` (gumbel) and `i` (independence). The MAG code list
//! is present exactly when `q > 0`. Blanks around the orders are accepted.

use crate::copula::Family;
use crate::error::{MagmarError, Result};
use crate::model::MagmarSpec;
use std::str::FromStr;

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(MagmarError::Parse { position: self.pos, message: message.into() })
    }

    fn skip_blanks(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(format!("expected '{lit}'"))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_blanks();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an order");
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
        let n = text.parse().or_else(|_| {
            self.pos = start;
            self.err("order too large")
        })?;
        self.skip_blanks();
        Ok(n)
    }

    fn codes(&mut self, expected: usize, part: &str) -> Result<Vec<Family>> {
        let start = self.pos;
        let mut out = Vec::new();
        while self.pos < self.s.len() && self.s[self.pos] != b'-' {
            let c = self.s[self.pos] as char;
            match Family::from_code(c) {
                Some(f) => out.push(f),
                None => return self.err(format!("unknown copula code '{c}'")),
            }
            self.pos += 1;
        }
        if out.len() != expected {
            self.pos = start;
            return self.err(format!("{part} part needs {expected} codes, found {}", out.len()));
        }
        Ok(out)
    }
}

/// Parses a model string into a spec with default parameters.
pub fn parse_model_string(text: &str) -> Result<MagmarSpec> {
    let mut c = Cursor { s: text.as_bytes(), pos: 0 };
    c.skip_blanks();
    c.expect("MAGMAR(")?;
    let p = c.number()?;
    c.expect(",")?;
    let q = c.number()?;
    c.expect(")")?;
    c.expect("-")?;
    let ar = c.codes(p, "AR")?;
    let mag = if q > 0 {
        c.expect("-")?;
        c.codes(q, "MAG")?
    } else {
        Vec::new()
    };
    if c.pos != c.s.len() {
        return c.err("unexpected trailing input");
    }
    Ok(MagmarSpec::from_families(&ar, &mag))
}

/// Number of free parameters of a model string.
pub fn count_params(text: &str) -> Result<usize> {
    parse_model_string(text).map(|s| s.n_params())
}

impl FromStr for MagmarSpec {
    type Err = MagmarError;
    fn from_str(s: &str) -> Result<Self> {
        parse_model_string(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Family::*;

    #[test]
    fn table_labels() {
        let s = parse_model_string("MAGMAR(4,1)-ging-t").unwrap();
        assert_eq!((s.p(), s.q()), (4, 1));
        assert_eq!(s.ar_families(), vec![Gumbel, Independence, Normal, Gumbel]);
        assert_eq!(s.mag_families(), vec![T]);
        let s = parse_model_string("MAGMAR(4, 0)-ggtg").unwrap();
        assert_eq!(s.q(), 0);
        assert_eq!(s.to_string(), "MAGMAR(4,0)-ggtg");
    }

    #[test]
    fn counts() {
        assert_eq!(count_params("MAGMAR(4,1)-ging-t").unwrap(), 5);
        assert_eq!(count_params("MAGMAR(4,1)-ggtg-t").unwrap(), 7);
        assert_eq!(count_params("MAGMAR(1,1)-i-i").unwrap(), 0);
    }

    #[test]
    fn errors_carry_position() {
        assert_eq!(
            parse_model_string("MAGMAR(2,1)-xy-n"),
            Err(MagmarError::Parse { position: 12, message: "unknown copula code 'x'".into() })
        );
        assert!(matches!(parse_model_string("MAGMAR(2,1)-n-n"), Err(MagmarError::Parse { position: 12, .. })));
        assert!(matches!(parse_model_string("MAGMAR(1,0)-n-n"), Err(MagmarError::Parse { position: 13, .. })));
        assert!(matches!(parse_model_string("ARMA(1,1)-n-n"), Err(MagmarError::Parse { position: 0, .. })));
        assert!(matches!(parse_model_string("MAGMAR(1,1)-n"), Err(MagmarError::Parse { position: 13, .. })));
        assert!(matches!(parse_model_string("MAGMAR(,1)-n"), Err(MagmarError::Parse { position: 7, .. })));
    }

    #[test]
    fn roundtrip_canonical() {
        for s in ["MAGMAR(3,2)-ngt-it", "MAGMAR(0,1)--g", "MAGMAR(0,0)-", "MAGMAR(1,0)-t"] {
            assert_eq!(parse_model_string(s).unwrap().to_string(), s);
        }
    }
}
