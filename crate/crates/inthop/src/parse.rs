//! Infix expression parser and the problem file format.
//!
//! Expression grammar: `+ - * / ^` with parentheses; `^` binds tighter than
//! unary minus and is right-associative; functions `exp`, `log`, `sin`,
//! `cos`, `sqrt`; variables `x1..xn`; decimal literals with optional
//! exponent. Nonnegative integer exponents parse to the dedicated integer
//! power node.
//!
//! Problem files are UTF-8 text, one problem per file:
//!
//! ```text
//! name: rosenbrock_2
//! n: 2
//! objective: 100*(x2 - x1^2)^2 + (1 - x1)^2
//! x0: -1.2, 1
//! fstar: 0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored; `fstar` is optional.

use thiserror::Error;

use crate::expr::{build, ExprRef, Problem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("parse error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable x{index} at byte {position}: expression has n = {n} variables")]
    UnknownVariable {
        index: usize,
        n: usize,
        position: usize,
    },
}

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
}

/// Parse an infix expression over variables `x1..xn`.
pub fn parse_expr(text: &str, n: usize) -> Result<ExprRef, ParseError> {
    let mut p = ExprParser {
        src: text.as_bytes(),
        pos: 0,
        n,
    };
    let e = p.parse_sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> ExprParser<'a> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            message: message.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_sum(&mut self) -> Result<ExprRef, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.parse_term()?;
                acc = build::add(acc, rhs);
            } else if self.eat(b'-') {
                let rhs = self.parse_term()?;
                acc = build::sub(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_term(&mut self) -> Result<ExprRef, ParseError> {
        let mut acc = self.parse_unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.parse_unary()?;
                acc = build::mul(acc, rhs);
            } else if self.eat(b'/') {
                let rhs = self.parse_unary()?;
                acc = build::div(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<ExprRef, ParseError> {
        if self.eat(b'-') {
            let inner = self.parse_unary()?;
            return Ok(build::neg(inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<ExprRef, ParseError> {
        let base = self.parse_atom()?;
        if self.eat(b'^') {
            // Right-associative; the exponent may itself carry a sign.
            let exponent = self.parse_unary()?;
            return Ok(build::pow(base, exponent));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<ExprRef, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(_) => Err(self.syntax("expected a number, variable, function, or `(`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn parse_number(&mut self) -> Result<ExprRef, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            position: start,
            message: format!("invalid numeric literal `{text}`"),
        })?;
        Ok(build::constant(value))
    }

    fn parse_ident(&mut self) -> Result<ExprRef, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(index_text) = ident.strip_prefix('x') {
            if !index_text.is_empty() && index_text.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = index_text.parse().map_err(|_| ParseError::Syntax {
                    position: start,
                    message: format!("variable index out of range in `{ident}`"),
                })?;
                if index == 0 {
                    return Err(ParseError::Syntax {
                        position: start,
                        message: "variable indices start at x1".to_string(),
                    });
                }
                if index > self.n {
                    return Err(ParseError::UnknownVariable {
                        index,
                        n: self.n,
                        position: start,
                    });
                }
                return Ok(build::var(index - 1));
            }
        }
        let func: fn(ExprRef) -> ExprRef = match ident {
            "exp" => build::exp,
            "log" => build::log,
            "sin" => build::sin,
            "cos" => build::cos,
            "sqrt" => build::sqrt,
            _ => {
                return Err(ParseError::Syntax {
                    position: start,
                    message: format!("unknown identifier `{ident}`"),
                })
            }
        };
        if !self.eat(b'(') {
            return Err(self.syntax("expected `(` after function name"));
        }
        let arg = self.parse_sum()?;
        if !self.eat(b')') {
            return Err(self.syntax("expected `)`"));
        }
        Ok(func(arg))
    }
}

/// Parse one problem file (see the module docs for the format).
pub fn parse_problem(text: &str) -> Result<Problem, ProblemFileError> {
    let mut name: Option<String> = None;
    let mut n: Option<usize> = None;
    let mut objective_src: Option<(usize, String)> = None;
    let mut x0: Option<Vec<f64>> = None;
    let mut fstar: Option<f64> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once(':').ok_or(ProblemFileError::Malformed {
            line,
            message: "expected `key: value`".to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let dup = |field: &str| ProblemFileError::Malformed {
            line,
            message: format!("duplicate field `{field}`"),
        };
        match key {
            "name" => {
                if name.is_some() {
                    return Err(dup("name"));
                }
                if value.is_empty() || value.contains(',') || value.contains(char::is_whitespace) {
                    return Err(ProblemFileError::Malformed {
                        line,
                        message: format!("`{value}` is not a valid identifier"),
                    });
                }
                name = Some(value.to_string());
            }
            "n" => {
                if n.is_some() {
                    return Err(dup("n"));
                }
                let parsed: usize = value.parse().map_err(|_| ProblemFileError::Malformed {
                    line,
                    message: format!("invalid dimension `{value}`"),
                })?;
                if parsed == 0 {
                    return Err(ProblemFileError::Malformed {
                        line,
                        message: "dimension must be positive".to_string(),
                    });
                }
                n = Some(parsed);
            }
            "objective" => {
                if objective_src.is_some() {
                    return Err(dup("objective"));
                }
                objective_src = Some((line, value.to_string()));
            }
            "x0" => {
                if x0.is_some() {
                    return Err(dup("x0"));
                }
                let mut parsed = Vec::new();
                for piece in value.split(',') {
                    let v: f64 =
                        piece
                            .trim()
                            .parse()
                            .map_err(|_| ProblemFileError::Malformed {
                                line,
                                message: format!("invalid x0 entry `{}`", piece.trim()),
                            })?;
                    parsed.push(v);
                }
                x0 = Some(parsed);
            }
            "fstar" => {
                if fstar.is_some() {
                    return Err(dup("fstar"));
                }
                fstar = Some(value.parse().map_err(|_| ProblemFileError::Malformed {
                    line,
                    message: format!("invalid fstar `{value}`"),
                })?);
            }
            other => {
                return Err(ProblemFileError::Malformed {
                    line,
                    message: format!("unknown field `{other}`"),
                });
            }
        }
    }

    let name = name.ok_or(ProblemFileError::MissingField("name"))?;
    let n = n.ok_or(ProblemFileError::MissingField("n"))?;
    let (obj_line, obj_src) = objective_src.ok_or(ProblemFileError::MissingField("objective"))?;
    let x0 = x0.ok_or(ProblemFileError::MissingField("x0"))?;

    if x0.len() != n {
        return Err(ProblemFileError::Malformed {
            line: 0,
            message: format!("x0 has {} entries but n = {n}", x0.len()),
        });
    }
    let objective = parse_expr(&obj_src, n).map_err(|source| ProblemFileError::Expr {
        line: obj_line,
        source,
    })?;
    let mut problem = Problem::new(name, n, objective, x0);
    problem.fstar = fstar;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval_expr, Expr};

    #[test]
    fn parses_and_evaluates() {
        let e = parse_expr("x1^2 + 1", 1).unwrap();
        assert_eq!(eval_expr(&e, &[2.0]), 5.0);
        let e = parse_expr("100*(x2 - x1^2)^2 + (1 - x1)^2", 2).unwrap();
        assert_eq!(eval_expr(&e, &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn unknown_variable_is_reported() {
        let err = parse_expr("x3", 2).unwrap_err();
        assert!(matches!(
            err,
            ParseError::UnknownVariable { index: 3, n: 2, .. }
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus.
        let e = parse_expr("-x1^2", 1).unwrap();
        assert_eq!(eval_expr(&e, &[3.0]), -9.0);
        // ^ is right-associative: 2^3^2 = 2^9 = 512.
        let e = parse_expr("2^3^2", 1).unwrap();
        assert_eq!(eval_expr(&e, &[0.0]), 512.0);
        // * binds tighter than +.
        let e = parse_expr("1 + 2*3", 1).unwrap();
        assert_eq!(eval_expr(&e, &[0.0]), 7.0);
        // Division is left-associative.
        let e = parse_expr("8/4/2", 1).unwrap();
        assert_eq!(eval_expr(&e, &[0.0]), 1.0);
    }

    #[test]
    fn integer_exponents_become_pow_int() {
        let e = parse_expr("x1^4", 1).unwrap();
        assert!(matches!(&*e, Expr::PowInt(_, 4)));
        let e = parse_expr("x1^2.5", 1).unwrap();
        assert!(matches!(&*e, Expr::Pow(_, _)));
        let e = parse_expr("x1^-2", 1).unwrap();
        assert!(matches!(&*e, Expr::Pow(_, _)));
        assert_eq!(eval_expr(&e, &[2.0]), 0.25);
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expr("1.5e2 + 2E-1", 1).unwrap();
        assert_eq!(eval_expr(&e, &[0.0]), 150.2);
    }

    #[test]
    fn functions_parse() {
        let e = parse_expr("exp(x1) + log(x1) - sin(x1)*cos(x1) + sqrt(x1)", 1).unwrap();
        let x = 1.7f64;
        let expected = x.exp() + x.ln() - x.sin() * x.cos() + x.sqrt();
        assert_eq!(eval_expr(&e, &[x]), expected);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_expr("x1 + ", 1).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
        let err = parse_expr("foo(x1)", 1).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { position: 0, .. }));
    }

    #[test]
    fn problem_file_round_trip() {
        let text = "# comment\nname: rosenbrock_2\nn: 2\nobjective: 100*(x2 - x1^2)^2 + (1 - x1)^2\nx0: -1.2, 1\nfstar: 0\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.name, "rosenbrock_2");
        assert_eq!(p.n, 2);
        assert_eq!(p.x0, vec![-1.2, 1.0]);
        assert_eq!(p.fstar, Some(0.0));
        assert_eq!(eval_expr(&p.objective, &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn problem_file_x0_length_mismatch() {
        let text = "name: bad\nn: 2\nobjective: x1 + x2\nx0: 1, 2, 3\n";
        let err = parse_problem(text).unwrap_err();
        assert!(err.to_string().contains("x0 has 3 entries but n = 2"));
    }

    #[test]
    fn problem_file_missing_field() {
        let text = "name: bad\nn: 1\nx0: 1\n";
        let err = parse_problem(text).unwrap_err();
        assert!(matches!(err, ProblemFileError::MissingField("objective")));
    }
}
