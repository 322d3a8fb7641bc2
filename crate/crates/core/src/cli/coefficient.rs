//! Coefficient expressions: sums of constants, monomials, sinusoids and box
//! indicators, e.g. `sin(2*pi*x) + 0.3` or `1 - 200*box(0.4, 0.6)`.
//!
//! ```text
//! expr   := [sign] term (sign term)*
//! term   := number ['*' factor] | factor
//! factor := var ['^' number] | 'sin(' [number '*'] 'pi*' var ')'
//!         | 'box(' number ',' number [',' number ',' number] ')'
//! var    := 'x' | 'y'
//! ```
//! Whitespace is ignored.

use std::fmt;
use std::sync::Arc;

use crate::grid::{Grid, ScalarField};
use crate::model::Coefficient;

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Constant,
    /// `x_axis^k`
    Monomial {
        axis: usize,
        k: f64,
    },
    /// `sin(k pi x_axis)`
    Sine {
        axis: usize,
        k: f64,
    },
    /// Indicator of the closed box, one interval per axis.
    Box {
        ranges: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub kind: TermKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDef {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the whitespace-free expression.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at character {})", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(format!("expected '{lit}'"))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            let exp_sign = matches!(c, b'+' | b'-') && matches!(self.s[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err("expected a number")
            }
        }
    }

    fn var(&mut self) -> Result<usize, ParseError> {
        if self.eat("x") {
            Ok(0)
        } else if self.eat("y") {
            Ok(1)
        } else {
            self.err("expected 'x' or 'y'")
        }
    }

    fn factor(&mut self) -> Result<TermKind, ParseError> {
        if self.eat("sin(") {
            let k = if self.eat("pi*") {
                1.0
            } else {
                let k = self.number()?;
                self.expect("*")?;
                self.expect("pi*")?;
                k
            };
            let axis = self.var()?;
            self.expect(")")?;
            Ok(TermKind::Sine { axis, k })
        } else if self.eat("box(") {
            let mut vals = vec![self.number()?];
            while self.eat(",") {
                vals.push(self.number()?);
            }
            self.expect(")")?;
            if vals.len() != 2 && vals.len() != 4 {
                return self.err("box takes 2 or 4 bounds");
            }
            let ranges: Vec<(f64, f64)> = vals.chunks(2).map(|c| (c[0], c[1])).collect();
            if ranges.iter().any(|(a, b)| a > b) {
                return self.err("box bounds must be increasing");
            }
            Ok(TermKind::Box { ranges })
        } else if matches!(self.peek(), Some(b'x' | b'y')) {
            let axis = self.var()?;
            let k = if self.eat("^") { self.number()? } else { 1.0 };
            if k < 0.0 {
                return self.err("monomial exponent must be nonnegative");
            }
            Ok(TermKind::Monomial { axis, k })
        } else {
            self.err("expected a number, 'x', 'y', 'sin(' or 'box('")
        }
    }

    fn term(&mut self, sign: f64) -> Result<Term, ParseError> {
        let starts_number = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.');
        if starts_number {
            let coef = sign * self.number()?;
            if self.eat("*") {
                let kind = self.factor()?;
                return Ok(Term { coef, kind });
            }
            return Ok(Term {
                coef,
                kind: TermKind::Constant,
            });
        }
        let kind = self.factor()?;
        Ok(Term { coef: sign, kind })
    }
}

impl CoefficientDef {
    pub fn constant(c: f64) -> Self {
        CoefficientDef {
            terms: vec![Term {
                coef: c,
                kind: TermKind::Constant,
            }],
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = Parser {
            s: compact.as_bytes(),
            pos: 0,
        };
        if p.s.is_empty() {
            return p.err("empty expression");
        }
        let mut terms = Vec::new();
        let mut sign = if p.eat("-") {
            -1.0
        } else {
            p.eat("+");
            1.0
        };
        loop {
            terms.push(p.term(sign)?);
            sign = match p.peek() {
                None => break,
                Some(b'+') => 1.0,
                Some(b'-') => -1.0,
                Some(_) => return p.err("expected '+' or '-'"),
            };
            p.pos += 1;
        }
        Ok(CoefficientDef { terms })
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.kind == TermKind::Constant)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * match &t.kind {
                        TermKind::Constant => 1.0,
                        TermKind::Monomial { axis, k } => x[*axis].powf(*k),
                        TermKind::Sine { axis, k } => (k * std::f64::consts::PI * x[*axis]).sin(),
                        TermKind::Box { ranges } => {
                            let inside = ranges.iter().enumerate().all(|(i, (a, b))| *a <= x[i] && x[i] <= *b);
                            if inside {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    }
            })
            .sum()
    }

    /// Checks axis usage and box bounds against the domain.
    pub fn validate(&self, extents: &[(f64, f64)]) -> Result<(), String> {
        let dim = extents.len();
        for t in &self.terms {
            match &t.kind {
                TermKind::Constant => {}
                TermKind::Monomial { axis, .. } | TermKind::Sine { axis, .. } => {
                    if *axis >= dim {
                        return Err(format!("term uses 'y' on a {dim}-dimensional domain"));
                    }
                }
                TermKind::Box { ranges } => {
                    if ranges.len() != dim {
                        return Err(format!("box needs {} bounds on a {dim}-dimensional domain", 2 * dim));
                    }
                    for ((a, b), (lo, hi)) in ranges.iter().zip(extents) {
                        if *a < *lo || *b > *hi {
                            return Err(format!("box [{a}, {b}] leaves the domain [{lo}, {hi}]"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_coefficient(&self, grid: &Arc<Grid>) -> Coefficient {
        if self.is_constant() {
            Coefficient::Constant(self.eval([0.0, 0.0]))
        } else {
            Coefficient::Nodal(ScalarField::from_fn(grid, |x| self.eval(x)).expect("finite coefficient"))
        }
    }
}

fn axis_name(axis: usize) -> &'static str {
    if axis == 0 {
        "x"
    } else {
        "y"
    }
}

impl fmt::Display for CoefficientDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let c = if i == 0 {
                if t.coef < 0.0 {
                    f.write_str("-")?;
                }
                t.coef.abs()
            } else {
                f.write_str(if t.coef < 0.0 { " - " } else { " + " })?;
                t.coef.abs()
            };
            match &t.kind {
                TermKind::Constant => write!(f, "{c:?}")?,
                TermKind::Monomial { axis, k } => write!(f, "{c:?}*{}^{k:?}", axis_name(*axis))?,
                TermKind::Sine { axis, k } => write!(f, "{c:?}*sin({k:?}*pi*{})", axis_name(*axis))?,
                TermKind::Box { ranges } => {
                    let b: Vec<String> = ranges
                        .iter()
                        .flat_map(|(a, b)| [format!("{a:?}"), format!("{b:?}")])
                        .collect();
                    write!(f, "{c:?}*box({})", b.join(", "))?
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_scenario_weights() {
        let a = CoefficientDef::parse("sin(2*pi*x) + 0.3").unwrap();
        assert_eq!(a.terms.len(), 2);
        assert!((a.eval([0.25, 0.0]) - 1.3).abs() < 1e-15);
        let b = CoefficientDef::parse(" 1 - 200 * box( 0.4 , 0.6 ) ").unwrap();
        assert_eq!(b.eval([0.5, 0.0]), -199.0);
        assert_eq!(b.eval([0.4, 0.0]), -199.0);
        assert_eq!(b.eval([0.39, 0.0]), 1.0);
        let c = CoefficientDef::parse("-x^2 + 3*y - sin(pi*y) + 2e-1*box(0,1,0,0.5)").unwrap();
        assert_eq!(c.terms.len(), 4);
        let v = c.eval([0.5, 0.25]);
        let expected = -0.25 + 0.75 - (std::f64::consts::PI * 0.25).sin() + 0.2;
        assert!((v - expected).abs() < 1e-15);
        assert!(CoefficientDef::parse("4").unwrap().is_constant());
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "1 +",
            "2*z",
            "sin(2*x)",
            "box(1)",
            "box(0.6,0.4)",
            "3 x",
            "x^-1",
            "1e400",
        ] {
            assert!(CoefficientDef::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn validation_against_domain() {
        let one = [(0.0, 1.0)];
        assert!(CoefficientDef::parse("y").unwrap().validate(&one).is_err());
        assert!(CoefficientDef::parse("box(0.5, 1.5)").unwrap().validate(&one).is_err());
        assert!(CoefficientDef::parse("box(0, 1, 0, 1)")
            .unwrap()
            .validate(&one)
            .is_err());
        assert!(CoefficientDef::parse("1 - 4*box(0.5, 1)")
            .unwrap()
            .validate(&one)
            .is_ok());
    }

    fn term_strategy() -> impl Strategy<Value = Term> {
        let coef = -50.0f64..50.0;
        let kind = prop_oneof![
            Just(TermKind::Constant),
            (0usize..2, 0.0f64..4.0).prop_map(|(axis, k)| TermKind::Monomial { axis, k }),
            (0usize..2, 0.5f64..6.0).prop_map(|(axis, k)| TermKind::Sine { axis, k }),
            (0.0f64..0.5, 0.5f64..1.0).prop_map(|(a, b)| TermKind::Box { ranges: vec![(a, b)] }),
        ];
        (coef, kind).prop_map(|(coef, kind)| Term { coef, kind })
    }

    proptest! {
        #[test]
        fn display_round_trips(terms in proptest::collection::vec(term_strategy(), 1..6)) {
            let def = CoefficientDef { terms };
            let text = def.to_string();
            let back = CoefficientDef::parse(&text).unwrap();
            prop_assert_eq!(back, def);
        }
    }
}
