use super::{BinOp, Func, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let c = c as char;
        if c.is_ascii_digit() || c == '.' {
            let mut end = start;
            while end < bytes.len() && ((bytes[end] as char).is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok((Tok::Num(v), start)),
                _ => Err(Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                }),
            };
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while end < bytes.len() && ((bytes[end] as char).is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{c}`"),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    dim: usize,
}

pub(super) fn parse(source: &str, dim: usize) -> Result<Node> {
    let mut lexer = Lexer { src: source, pos: 0 };
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at, dim };
    let node = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    Ok(node)
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self) -> Error {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number {v}"),
            Tok::Ident(s) => format!("unexpected identifier `{s}`"),
            Tok::Sym(c) => format!("unexpected `{c}`"),
        };
        Error::Syntax {
            offset: self.at,
            message,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(Error::Syntax {
                offset: self.at,
                message: format!("expected `{c}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.base()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let at = self.at;
        // the exponent is itself a signed factor, which makes ^ right-associative
        let exponent = self.unary()?;
        match fold_constant(&exponent) {
            Some(p) if p.is_finite() => Ok(Node::Pow(Box::new(base), p)),
            Some(_) => Err(Error::Syntax {
                offset: at,
                message: "exponent does not evaluate to a finite constant".into(),
            }),
            None => Err(Error::NonConstantExponent { offset: at }),
        }
    }

    fn base(&mut self) -> Result<Node> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.at;
                if let Some(func) = Func::from_name(&name) {
                    self.bump()?;
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Func(func, Box::new(arg)));
                }
                let index = variable_index(&name).ok_or(Error::UnknownIdentifier {
                    name: name.clone(),
                    offset: at,
                })?;
                if index == 0 || index > self.dim {
                    return Err(Error::VariableOutOfRange { name, dim: self.dim });
                }
                self.bump()?;
                Ok(Node::Var(index - 1))
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// One-based index of `t`, `xK` or `uK`.
fn variable_index(name: &str) -> Option<usize> {
    if name == "t" {
        return Some(1);
    }
    let digits = name.strip_prefix('x').or_else(|| name.strip_prefix('u'))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // absurdly long indices are simply out of range
    Some(digits.parse::<usize>().unwrap_or(usize::MAX))
}

fn fold_constant(node: &Node) -> Option<f64> {
    Some(match node {
        Node::Const(c) => *c,
        Node::Var(_) => return None,
        Node::Neg(a) => -fold_constant(a)?,
        Node::Func(f, a) => {
            let x = fold_constant(a)?;
            match f {
                Func::Ln => x.ln(),
                Func::Exp => x.exp(),
                Func::Sqrt => x.sqrt(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
            }
        }
        Node::Bin(op, a, b) => {
            let (x, y) = (fold_constant(a)?, fold_constant(b)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
        Node::Pow(a, p) => crate::scalar::Real::powc(fold_constant(a)?, *p),
    })
}
