//! Line-oriented textual net format used for fixtures.
//!
//! ```text
//! # comment
//! domain A = [0,2]
//! domain B = [4,5]
//! domain AB = A * B
//! var x : A
//! var y : B
//! place p1 : A = 2'(0)+3'(2)
//! place p2 : B = 2'(5)
//! place p3 : AB
//! transition t [x < 1]
//! arc p1 -> t : 1'(x)
//! arc p2 -> t : 1'(y)
//! arc t -> p3 : 1'(x-1,y)
//! inhibit p3 -> t : 1
//! ```
//!
//! Domains are `[a,b]`, `[a]`, `dot`, `empty(k)`, inline sets
//! `{([1],[3,4]),([2],[1])}`, sort names, or `*`-products of those.
//! Arc expressions: `n'(t1,..,tk)`, `D.all`, `e + e`, `e - e`, `n*e`, and
//! parentheses; tuple entries are constants, variables, or `x+s` / `x-s`.
//! Guards use `&&`, `||`, `!`, parentheses, `true`, `false`, comparisons
//! `< <= > >= == !=` between tuple entries, and `==` / `!=` between arc
//! expressions. A transition line may end with `label L`.

use std::fmt::Write as _;

use crate::color::{Color, ColorSet, Interval, RangeTuple};
use crate::error::{Error, Result};
use crate::expr::{ArcExpr, CmpOp, GuardExpr, SimpleExpr, Variable};
use crate::multiset::Multiset;
use crate::net::{ColoredNet, NetBuilder};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
}

const SYMBOLS: &[&str] = &[
    "->", "<=", ">=", "==", "!=", "&&", "||", "<", ">", "!", "(", ")", "[", "]", "{", "}", ",", "'", "+", "-", "*",
    ":", "=", ".",
];

fn tokenize(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'#' {
            break;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let col = i + 1;
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = line[start..i].parse().map_err(|_| Error::Syntax {
                line: line_no,
                column: col,
                message: "integer literal too large".into(),
            })?;
            out.push((Tok::Int(v), col));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(line[start..i].to_string()), col));
        } else if let Some(sym) = SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) {
            i += sym.len();
            out.push((Tok::Sym(sym), col));
        } else {
            return Err(Error::Syntax {
                line: line_no,
                column: col,
                message: format!("unexpected character `{}`", line[i..].chars().next().unwrap()),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    b: &'a NetBuilder,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let column = self.toks.get(self.pos).map_or(self.end_col, |t| t.1);
        Err(Error::Syntax {
            line: self.line,
            column,
            message: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == kw)
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn int(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected integer"),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let v = self.int()?;
        if v > u32::MAX as u64 {
            self.pos -= 1;
            return self.err("value exceeds 32 bits");
        }
        Ok(v as u32)
    }

    fn done(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }

    fn range(&mut self) -> Result<Interval> {
        self.expect_sym("[")?;
        let lo = self.u32()?;
        let hi = if self.eat_sym(",") { self.u32()? } else { lo };
        if lo > hi {
            return self.err(format!("empty range [{lo},{hi}]"));
        }
        self.expect_sym("]")?;
        Ok(Interval::new(lo, hi))
    }

    fn sort(&self, name: &str) -> Option<&'a ColorSet> {
        self.b.sorts().iter().rev().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    fn domain_factor(&mut self) -> Result<ColorSet> {
        if self.is_sym("[") {
            let iv = self.range()?;
            return Ok(ColorSet::from_tuple(&RangeTuple::new([iv])));
        }
        if self.eat_sym("{") {
            let mut tuples = Vec::new();
            loop {
                self.expect_sym("(")?;
                let mut ranges = vec![self.range()?];
                while self.eat_sym(",") {
                    ranges.push(self.range()?);
                }
                self.expect_sym(")")?;
                tuples.push(RangeTuple(ranges));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            let arity = tuples[0].arity();
            return match ColorSet::from_tuples(arity, tuples) {
                Ok(s) => Ok(s),
                Err(e) => self.err(e.to_string()),
            };
        }
        if self.is_keyword("dot") {
            self.pos += 1;
            return Ok(ColorSet::dot());
        }
        if self.is_keyword("empty") && matches!(self.peek_at(1), Some(Tok::Sym("("))) {
            self.pos += 2;
            let k = self.int()? as usize;
            if k == 0 {
                self.pos -= 1;
                return self.err("arity must be positive");
            }
            self.expect_sym(")")?;
            return Ok(ColorSet::empty(k));
        }
        let name = self.ident()?;
        match self.sort(&name) {
            Some(s) => Ok(s.clone()),
            None => {
                self.pos -= 1;
                self.err(format!("unknown domain `{name}`"))
            }
        }
    }

    fn domain(&mut self) -> Result<ColorSet> {
        let mut d = self.domain_factor()?;
        while self.eat_sym("*") {
            d = d.cartesian(&self.domain_factor()?);
        }
        Ok(d)
    }

    fn variable(&self, name: &str) -> Option<usize> {
        self.b.variables().iter().position(|v: &Variable| v.name == name)
    }

    fn simple(&mut self) -> Result<SimpleExpr> {
        if let Some(Tok::Int(_)) = self.peek() {
            return Ok(SimpleExpr::Const(self.u32()?));
        }
        let name = self.ident()?;
        let Some(v) = self.variable(&name) else {
            self.pos -= 1;
            return self.err(format!("unknown variable `{name}`"));
        };
        let sign = if self.is_sym("+") && matches!(self.peek_at(1), Some(Tok::Int(_))) {
            1
        } else if self.is_sym("-") && matches!(self.peek_at(1), Some(Tok::Int(_))) {
            -1
        } else {
            return Ok(SimpleExpr::Var(v));
        };
        self.pos += 1;
        let s = self.int()? as i64;
        if s == 0 {
            return Ok(SimpleExpr::Var(v));
        }
        Ok(SimpleExpr::VarShift(v, sign * s))
    }

    fn arc(&mut self) -> Result<ArcExpr> {
        let mut e = self.arc_term()?;
        loop {
            if self.eat_sym("+") {
                e = ArcExpr::Add(Box::new(e), Box::new(self.arc_term()?));
            } else if self.eat_sym("-") {
                e = ArcExpr::Sub(Box::new(e), Box::new(self.arc_term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn arc_term(&mut self) -> Result<ArcExpr> {
        if let (Some(Tok::Int(_)), Some(Tok::Sym("*"))) = (self.peek(), self.peek_at(1)) {
            let n = self.int()?;
            self.pos += 1;
            if n == 0 {
                return self.err("scale factor must be positive");
            }
            return Ok(ArcExpr::Scale(n, Box::new(self.arc_term()?)));
        }
        if self.eat_sym("(") {
            let e = self.arc()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if let Some(Tok::Int(_)) = self.peek() {
            let n = self.int()?;
            if n == 0 {
                self.pos -= 1;
                return self.err("multiplicity must be positive");
            }
            self.expect_sym("'")?;
            self.expect_sym("(")?;
            let mut tuple = vec![self.simple()?];
            while self.eat_sym(",") {
                tuple.push(self.simple()?);
            }
            self.expect_sym(")")?;
            return Ok(ArcExpr::NumberOf(n, tuple));
        }
        let d = self.domain_factor()?;
        self.expect_sym(".")?;
        if !self.is_keyword("all") {
            return self.err("expected `all`");
        }
        self.pos += 1;
        Ok(ArcExpr::All(d))
    }

    fn starts_arc(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Some(Tok::Int(_)), Some(Tok::Sym("'" | "*")))
                | (Some(Tok::Sym("{" | "[")), _)
                | (Some(Tok::Ident(_)), Some(Tok::Sym(".")))
        )
    }

    fn guard(&mut self) -> Result<GuardExpr> {
        let mut g = self.guard_and()?;
        while self.eat_sym("||") {
            g = GuardExpr::Or(Box::new(g), Box::new(self.guard_and()?));
        }
        Ok(g)
    }

    fn guard_and(&mut self) -> Result<GuardExpr> {
        let mut g = self.guard_unary()?;
        while self.eat_sym("&&") {
            g = GuardExpr::And(Box::new(g), Box::new(self.guard_unary()?));
        }
        Ok(g)
    }

    fn guard_unary(&mut self) -> Result<GuardExpr> {
        if self.eat_sym("!") {
            return Ok(GuardExpr::Not(Box::new(self.guard_unary()?)));
        }
        if self.eat_sym("(") {
            let g = self.guard()?;
            self.expect_sym(")")?;
            return Ok(g);
        }
        if self.is_keyword("true") && self.variable("true").is_none() {
            self.pos += 1;
            return Ok(GuardExpr::True);
        }
        if self.is_keyword("false") && self.variable("false").is_none() {
            self.pos += 1;
            return Ok(GuardExpr::False);
        }
        if self.starts_arc() {
            let l = self.arc()?;
            let eq = if self.eat_sym("==") {
                true
            } else if self.eat_sym("!=") {
                false
            } else {
                return self.err("expected `==` or `!=` after multiset expression");
            };
            let r = self.arc()?;
            return Ok(if eq {
                GuardExpr::MsEq(l, r)
            } else {
                GuardExpr::MsNeq(l, r)
            });
        }
        let l = self.simple()?;
        let op = match self.peek() {
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            Some(Tok::Sym("==")) => CmpOp::Eq,
            Some(Tok::Sym("!=")) => CmpOp::Ne,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        if self.peek().is_none() || self.is_sym("]") {
            return self.err("expected operand after comparison operator");
        }
        let r = self.simple()?;
        Ok(GuardExpr::Cmp(op, l, r))
    }

    fn marking(&mut self, domain: &ColorSet) -> Result<Multiset> {
        if let (Some(Tok::Int(0)), None) = (self.peek(), self.peek_at(1)) {
            self.pos += 1;
            return Ok(Multiset::new());
        }
        let mut m = Multiset::new();
        loop {
            if let (Some(Tok::Int(_)), Some(Tok::Sym("'"))) = (self.peek(), self.peek_at(1)) {
                let n = self.int()?;
                self.pos += 1;
                self.expect_sym("(")?;
                let mut c = vec![self.u32()?];
                while self.eat_sym(",") {
                    c.push(self.u32()?);
                }
                self.expect_sym(")")?;
                if c.len() != domain.arity() {
                    return self.err(format!(
                        "token arity {} differs from domain arity {}",
                        c.len(),
                        domain.arity()
                    ));
                }
                m.insert(Color::new(c), n);
            } else {
                let d = self.domain_factor()?;
                self.expect_sym(".")?;
                if !self.is_keyword("all") {
                    return self.err("expected `all`");
                }
                self.pos += 1;
                if d.arity() != domain.arity() {
                    return self.err("`.all` domain arity differs from the place domain");
                }
                m.add_assign(&Multiset::of_set(&d));
            }
            if !self.eat_sym("+") {
                return Ok(m);
            }
        }
    }
}

/// Parses a net from the textual format.
pub fn parse(text: &str) -> Result<ColoredNet> {
    let mut b = NetBuilder::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let toks = tokenize(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let end_col = line.trim_end().len() + 1;
        let mut p = Parser {
            toks,
            pos: 0,
            line: line_no,
            end_col,
            b: &b,
        };
        let keyword = p.ident()?;
        let first_col = p.toks[0].1;
        let syntax = |_: &Parser, msg: String| -> Error {
            Error::Syntax {
                line: line_no,
                column: first_col,
                message: msg,
            }
        };
        match keyword.as_str() {
            "domain" => {
                let name = p.ident()?;
                p.expect_sym("=")?;
                let d = p.domain()?;
                p.done()?;
                b.sort(&name, d);
            }
            "var" => {
                let name = p.ident()?;
                p.expect_sym(":")?;
                let d = p.domain()?;
                p.done()?;
                let (Some(hull), 1) = (d.project(0).hull(), d.arity()) else {
                    return Err(syntax(&p, format!("variable `{name}` needs a 1-dimensional range")));
                };
                if d.size() != hull.len() {
                    return Err(syntax(&p, format!("variable `{name}` needs a contiguous range")));
                }
                drop(p);
                b.variable(&name, hull).map_err(|e| Error::Syntax {
                    line: line_no,
                    column: first_col,
                    message: e.to_string(),
                })?;
            }
            "place" => {
                let name = p.ident()?;
                p.expect_sym(":")?;
                let d = p.domain()?;
                let m = if p.eat_sym("=") {
                    p.marking(&d)?
                } else {
                    Multiset::new()
                };
                p.done()?;
                if b.place_index(&name).is_some() {
                    return Err(syntax(&p, format!("duplicate place `{name}`")));
                }
                b.place(&name, d, m);
            }
            "transition" => {
                let name = p.ident()?;
                let guard = if p.eat_sym("[") {
                    let g = p.guard()?;
                    p.expect_sym("]")?;
                    g
                } else {
                    GuardExpr::True
                };
                let label = if p.is_keyword("label") {
                    p.pos += 1;
                    Some(p.ident()?)
                } else {
                    None
                };
                p.done()?;
                if b.transition_index(&name).is_some() {
                    return Err(syntax(&p, format!("duplicate transition `{name}`")));
                }
                let t = b.transition(&name, guard);
                if let Some(l) = label {
                    b.label(t, &l);
                }
            }
            "arc" | "inhibit" => {
                let from = p.ident()?;
                p.expect_sym("->")?;
                let to = p.ident()?;
                let weight_or_expr = if p.eat_sym(":") { Some(()) } else { None };
                let place_first = b.place_index(&from).zip(b.transition_index(&to));
                let trans_first = b.transition_index(&from).zip(b.place_index(&to));
                if keyword == "inhibit" {
                    let w = if weight_or_expr.is_some() { p.int()? } else { 1 };
                    p.done()?;
                    let Some((pl, t)) = place_first else {
                        return Err(syntax(
                            &p,
                            format!("inhibitor `{from} -> {to}` must go from a place to a transition"),
                        ));
                    };
                    if w == 0 {
                        return Err(syntax(&p, "inhibitor weight must be positive".into()));
                    }
                    b.inhibitor(pl, t, w);
                    continue;
                }
                if weight_or_expr.is_none() {
                    return p.err("expected `:` and an arc expression");
                }
                let e = p.arc()?;
                p.done()?;
                match (place_first, trans_first) {
                    (Some((pl, t)), _) => {
                        b.input(pl, t, e);
                    }
                    (None, Some((t, pl))) => {
                        b.output(t, pl, e);
                    }
                    _ => return Err(syntax(&p, format!("unknown endpoints in arc `{from} -> {to}`"))),
                }
            }
            other => return Err(syntax(&p, format!("unknown declaration `{other}`"))),
        }
    }
    b.build()
}

/// Writes a net in canonical textual form; `parse(&write(n))` rebuilds `n`.
pub fn write(net: &ColoredNet) -> String {
    let mut out = String::new();
    let w = Writer { net };
    for (name, d) in &net.sorts {
        let _ = writeln!(out, "domain {name} = {}", w.inline_domain(d));
    }
    for v in &net.variables {
        let _ = writeln!(
            out,
            "var {} : {}",
            v.name,
            w.domain(&ColorSet::range(v.range.lo, v.range.hi))
        );
    }
    for (i, p) in net.places.iter().enumerate() {
        let _ = write!(out, "place {} : {}", p.name, w.domain(&p.domain));
        let m = net.initial.place(i);
        if !m.is_empty() {
            let _ = write!(out, " = {m}");
        }
        out.push('\n');
    }
    for t in &net.transitions {
        let _ = write!(out, "transition {}", t.name);
        if t.guard != GuardExpr::True {
            let _ = write!(out, " [{}]", w.guard(&t.guard));
        }
        if t.label != t.name {
            let _ = write!(out, " label {}", t.label);
        }
        out.push('\n');
        for (p, e) in &t.inputs {
            let _ = writeln!(out, "arc {} -> {} : {}", net.places[*p].name, t.name, w.arc(e));
        }
        for (p, e) in &t.outputs {
            let _ = writeln!(out, "arc {} -> {} : {}", t.name, net.places[*p].name, w.arc(e));
        }
        for (p, wt) in &t.inhibitors {
            let _ = writeln!(out, "inhibit {} -> {} : {wt}", net.places[*p].name, t.name);
        }
    }
    out
}

struct Writer<'a> {
    net: &'a ColoredNet,
}

impl Writer<'_> {
    fn domain(&self, d: &ColorSet) -> String {
        match self.net.sorts.iter().find(|(_, s)| s == d) {
            Some((name, _)) => name.clone(),
            None => self.inline_domain(d),
        }
    }

    fn inline_domain(&self, d: &ColorSet) -> String {
        let tuples = d.tuples();
        match tuples.as_slice() {
            [] => format!("empty({})", d.arity()),
            [single] => single.0.iter().map(|iv| iv.to_string()).collect::<Vec<_>>().join(" * "),
            _ => d.to_string(),
        }
    }

    fn simple(&self, s: &SimpleExpr) -> String {
        match *s {
            SimpleExpr::Const(c) => c.to_string(),
            SimpleExpr::Var(v) => self.net.variables[v].name.clone(),
            SimpleExpr::VarShift(v, d) if d > 0 => format!("{}+{d}", self.net.variables[v].name),
            SimpleExpr::VarShift(v, d) => format!("{}-{}", self.net.variables[v].name, -d),
        }
    }

    fn arc(&self, e: &ArcExpr) -> String {
        match e {
            ArcExpr::NumberOf(n, t) => {
                let parts: Vec<_> = t.iter().map(|s| self.simple(s)).collect();
                format!("{n}'({})", parts.join(","))
            }
            ArcExpr::All(d) => {
                let dom = self.domain(d);
                if dom.contains(" * ") {
                    // a product needs a named sort or set notation to take `.all`
                    format!("{}.all", d)
                } else {
                    format!("{dom}.all")
                }
            }
            ArcExpr::Add(l, r) => format!("{} + {}", self.arc(l), self.arc_operand(r)),
            ArcExpr::Sub(l, r) => format!("{} - {}", self.arc(l), self.arc_operand(r)),
            ArcExpr::Scale(n, inner) => format!("{n}*{}", self.arc_operand(inner)),
        }
    }

    fn arc_operand(&self, e: &ArcExpr) -> String {
        match e {
            ArcExpr::NumberOf(..) | ArcExpr::All(_) => self.arc(e),
            _ => format!("({})", self.arc(e)),
        }
    }

    fn guard(&self, g: &GuardExpr) -> String {
        match g {
            GuardExpr::True => "true".into(),
            GuardExpr::False => "false".into(),
            GuardExpr::Not(inner) => match **inner {
                GuardExpr::And(..)
                | GuardExpr::Or(..)
                | GuardExpr::Cmp(..)
                | GuardExpr::MsEq(..)
                | GuardExpr::MsNeq(..) => {
                    format!("!({})", self.guard(inner))
                }
                _ => format!("!{}", self.guard(inner)),
            },
            GuardExpr::Or(l, r) => {
                let rs = match **r {
                    GuardExpr::Or(..) => format!("({})", self.guard(r)),
                    _ => self.guard_operand(r),
                };
                format!("{} || {rs}", self.guard_operand(l))
            }
            GuardExpr::And(l, r) => {
                let ls = match **l {
                    GuardExpr::Or(..) => format!("({})", self.guard(l)),
                    _ => self.guard_operand(l),
                };
                let rs = match **r {
                    GuardExpr::Or(..) | GuardExpr::And(..) => format!("({})", self.guard(r)),
                    _ => self.guard_operand(r),
                };
                format!("{ls} && {rs}")
            }
            GuardExpr::MsEq(l, r) => format!("{} == {}", self.arc(l), self.arc(r)),
            GuardExpr::MsNeq(l, r) => format!("{} != {}", self.arc(l), self.arc(r)),
            GuardExpr::Cmp(op, l, r) => format!("{} {} {}", self.simple(l), op.symbol(), self.simple(r)),
        }
    }

    /// Multiset comparisons are parenthesized inside connectives so the
    /// greedy arc parser stops at the right place.
    fn guard_operand(&self, g: &GuardExpr) -> String {
        match g {
            GuardExpr::MsEq(..) | GuardExpr::MsNeq(..) => format!("({})", self.guard(g)),
            _ => self.guard(g),
        }
    }
}
