//! A restricted structural Verilog-2001 dialect: combinational modules made
//! of wire declarations, continuous assignments, and module instances. This
//! is both the output language of the emitters and the input of the
//! parse-back verifier, so the grammar is deliberately small.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Shl,
    AShr,
    Eq,
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(i64),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub dir: Dir,
    /// Total bit width ([width-1:0]).
    pub width: u32,
    pub signed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireDecl {
    pub name: String,
    pub width: u32,
    pub signed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    /// (port on the child, signal in the parent)
    pub connections: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Wire(WireDecl),
    Assign(String, Expr),
    Instance(Instance),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VModule {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub items: Vec<Item>,
}

impl VModule {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn assigns(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.items.iter().filter_map(|i| match i {
            Item::Assign(name, e) => Some((name, e)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Design {
    pub modules: BTreeMap<String, VModule>,
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(i64),
    Punct(&'static str),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                if self.src[self.pos] == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            }
            if self.pos + 1 < self.src.len() && &self.src[self.pos..self.pos + 2] == b"//" {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let line = self.line;
        let c = self.src[self.pos];
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok(Some((Tok::Ident(s), line)));
        }
        if c.is_ascii_digit() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let first: i64 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.error("bad number"))?;
            // Sized literal: <size>'[s]d<value>
            if self.pos < self.src.len() && self.src[self.pos] == b'\'' {
                self.pos += 1;
                if self.pos < self.src.len() && self.src[self.pos] == b's' {
                    self.pos += 1;
                }
                if self.pos >= self.src.len() || !matches!(self.src[self.pos], b'd' | b'b' | b'h') {
                    return Err(self.error("expected base after '"));
                }
                let base = match self.src[self.pos] {
                    b'b' => 2,
                    b'h' => 16,
                    _ => 10,
                };
                self.pos += 1;
                let vstart = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[vstart..self.pos]).unwrap();
                let value = i64::from_str_radix(digits, base)
                    .map_err(|_| self.error("bad sized literal"))?;
                return Ok(Some((Tok::Num(value), line)));
            }
            return Ok(Some((Tok::Num(first), line)));
        }
        for p in [
            "<<<", ">>>", "<<", ">>", "==", "(", ")", "[", "]", "{", "}", ";", ",", ":", "?",
            "+", "-", "*", "<", ">", "=", ".",
        ] {
            if self.src[self.pos..].starts_with(p.as_bytes()) {
                self.pos += p.len();
                return Ok(Some((Tok::Punct(p), line)));
            }
        }
        Err(self.error(format!("unexpected character '{}'", c as char)))
    }
}

// ---------------------------------------------------------------- parsing

pub struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self> {
        let mut lx = Lexer::new(src);
        let mut toks = Vec::new();
        while let Some(t) = lx.next()? {
            toks.push(t);
        }
        Ok(Parser { toks, pos: 0 })
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|(_, l)| *l)
            .unwrap_or(0)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .map(|(t, _)| t.clone())
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat_punct(&mut self, p: &str) -> Result<()> {
        match self.bump()? {
            Tok::Punct(q) if q == p => Ok(()),
            other => Err(self.error(format!("expected '{p}', found {other:?}"))),
        }
    }

    fn try_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump()? {
            Tok::Ident(s) => Ok(s),
            other => Err(self.error(format!("expected identifier, found {other:?}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let s = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}', found '{s}'")))
        }
    }

    fn number(&mut self) -> Result<i64> {
        match self.bump()? {
            Tok::Num(n) => Ok(n),
            other => Err(self.error(format!("expected number, found {other:?}"))),
        }
    }

    /// `[msb:0]` -> width msb+1; absent range -> width 1.
    fn opt_range(&mut self) -> Result<u32> {
        if self.try_punct("[") {
            let msb = self.number()?;
            self.eat_punct(":")?;
            let lsb = self.number()?;
            if lsb != 0 {
                return Err(self.error("only [msb:0] ranges are supported"));
            }
            self.eat_punct("]")?;
            Ok(msb as u32 + 1)
        } else {
            Ok(1)
        }
    }

    pub fn design(&mut self) -> Result<Design> {
        let mut design = Design::default();
        while self.peek().is_some() {
            let m = self.module()?;
            design.modules.insert(m.name.clone(), m);
        }
        Ok(design)
    }

    pub fn module(&mut self) -> Result<VModule> {
        self.keyword("module")?;
        let name = self.ident()?;
        self.eat_punct("(")?;
        let mut ports = Vec::new();
        if !self.try_punct(")") {
            loop {
                let dir = match self.ident()?.as_str() {
                    "input" => Dir::Input,
                    "output" => Dir::Output,
                    other => return Err(self.error(format!("expected port direction, found '{other}'"))),
                };
                let mut signed = false;
                if matches!(self.peek(), Some(Tok::Ident(s)) if s == "signed") {
                    self.pos += 1;
                    signed = true;
                }
                let width = self.opt_range()?;
                let pname = self.ident()?;
                ports.push(PortDecl {
                    name: pname,
                    dir,
                    width,
                    signed,
                });
                if self.try_punct(")") {
                    break;
                }
                self.eat_punct(",")?;
            }
        }
        self.eat_punct(";")?;
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(s)) if s == "endmodule" => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Ident(s)) if s == "wire" => {
                    self.pos += 1;
                    let mut signed = false;
                    if matches!(self.peek(), Some(Tok::Ident(s)) if s == "signed") {
                        self.pos += 1;
                        signed = true;
                    }
                    let width = self.opt_range()?;
                    let wname = self.ident()?;
                    self.eat_punct(";")?;
                    items.push(Item::Wire(WireDecl {
                        name: wname,
                        width,
                        signed,
                    }));
                }
                Some(Tok::Ident(s)) if s == "assign" => {
                    self.pos += 1;
                    let target = self.ident()?;
                    self.eat_punct("=")?;
                    let e = self.expr()?;
                    self.eat_punct(";")?;
                    items.push(Item::Assign(target, e));
                }
                Some(Tok::Ident(_)) => {
                    // module instance
                    let module = self.ident()?;
                    let iname = self.ident()?;
                    self.eat_punct("(")?;
                    let mut connections = Vec::new();
                    if !self.try_punct(")") {
                        loop {
                            self.eat_punct(".")?;
                            let port = self.ident()?;
                            self.eat_punct("(")?;
                            let signal = self.ident()?;
                            self.eat_punct(")")?;
                            connections.push((port, signal));
                            if self.try_punct(")") {
                                break;
                            }
                            self.eat_punct(",")?;
                        }
                    }
                    self.eat_punct(";")?;
                    items.push(Item::Instance(Instance {
                        module,
                        name: iname,
                        connections,
                    }));
                }
                other => return Err(self.error(format!("unexpected token {other:?} in module body"))),
            }
        }
        Ok(VModule { name, ports, items })
    }

    // expression grammar, loosest to tightest:
    //   ternary -> compare (? expr : ternary)?
    //   compare -> shift ((== | < | >) shift)?
    //   shift   -> addsub ((<<< | >>> | << | >>) addsub)*
    //   addsub  -> mul ((+ | -) mul)*
    //   mul     -> unary (* unary)*
    //   unary   -> - unary | primary
    pub fn expr(&mut self) -> Result<Expr> {
        let cond = self.compare()?;
        if self.try_punct("?") {
            let then = self.expr()?;
            self.eat_punct(":")?;
            let els = self.expr()?;
            Ok(Expr::Ternary(Box::new(cond), Box::new(then), Box::new(els)))
        } else {
            Ok(cond)
        }
    }

    fn compare(&mut self) -> Result<Expr> {
        let lhs = self.shift()?;
        let op = match self.peek() {
            Some(Tok::Punct("==")) => Some(BinOp::Eq),
            Some(Tok::Punct("<")) => Some(BinOp::Lt),
            Some(Tok::Punct(">")) => Some(BinOp::Gt),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let rhs = self.shift()?;
            Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn shift(&mut self) -> Result<Expr> {
        let mut lhs = self.addsub()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct("<<<")) | Some(Tok::Punct("<<")) => Some(BinOp::Shl),
                Some(Tok::Punct(">>>")) | Some(Tok::Punct(">>")) => Some(BinOp::AShr),
                _ => None,
            };
            match op {
                Some(op) => {
                    self.pos += 1;
                    let rhs = self.addsub()?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                None => return Ok(lhs),
            }
        }
    }

    fn addsub(&mut self) -> Result<Expr> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct("+")) => Some(BinOp::Add),
                Some(Tok::Punct("-")) => Some(BinOp::Sub),
                _ => None,
            };
            match op {
                Some(op) => {
                    self.pos += 1;
                    let rhs = self.mul()?;
                    lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
                }
                None => return Ok(lhs),
            }
        }
    }

    fn mul(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.try_punct("*") {
            let rhs = self.unary()?;
            lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.try_punct("-") {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump()? {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Ident(s) => Ok(Expr::Ident(s)),
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.eat_punct(")")?;
                Ok(e)
            }
            other => Err(self.error(format!("expected expression, found {other:?}"))),
        }
    }
}

pub fn parse_design(text: &str) -> Result<Design> {
    Parser::new(text)?.design()
}

// ------------------------------------------------------------- simulation

/// Evaluates a combinational module for one input vector. All arithmetic is
/// exact i64; the interval analysis below guarantees every emitted signal
/// fits its declared width, so exact evaluation matches hardware behavior.
pub fn simulate(
    design: &Design,
    module: &str,
    inputs: &BTreeMap<String, i64>,
) -> Result<BTreeMap<String, i64>> {
    let m = design
        .modules
        .get(module)
        .ok_or_else(|| Error::Input(format!("no module named '{module}'")))?;
    let mut ctx = SimCtx {
        design,
        module: m,
        inputs,
        cache: BTreeMap::new(),
        in_progress: Vec::new(),
    };
    let mut out = BTreeMap::new();
    for p in &m.ports {
        if p.dir == Dir::Output {
            out.insert(p.name.clone(), ctx.resolve(&p.name)?);
        }
    }
    Ok(out)
}

struct SimCtx<'a> {
    design: &'a Design,
    module: &'a VModule,
    inputs: &'a BTreeMap<String, i64>,
    cache: BTreeMap<String, i64>,
    in_progress: Vec<String>,
}

impl SimCtx<'_> {
    fn resolve(&mut self, signal: &str) -> Result<i64> {
        if let Some(&v) = self.cache.get(signal) {
            return Ok(v);
        }
        if self.in_progress.iter().any(|s| s == signal) {
            return Err(Error::Invariant(format!("combinational loop through '{signal}'")));
        }
        self.in_progress.push(signal.to_string());
        let v = self.resolve_uncached(signal)?;
        self.in_progress.pop();
        self.cache.insert(signal.to_string(), v);
        Ok(v)
    }

    fn resolve_uncached(&mut self, signal: &str) -> Result<i64> {
        if let Some(p) = self.module.port(signal) {
            if p.dir == Dir::Input {
                return self
                    .inputs
                    .get(signal)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("missing input '{signal}'")));
            }
        }
        for item in &self.module.items {
            match item {
                Item::Assign(target, e) if target == signal => {
                    return self.eval(e);
                }
                Item::Instance(inst) => {
                    let child = self.design.modules.get(&inst.module).ok_or_else(|| {
                        Error::Input(format!("no module named '{}'", inst.module))
                    })?;
                    let drives = inst.connections.iter().any(|(port, sig)| {
                        sig == signal
                            && child.port(port).map(|p| p.dir) == Some(Dir::Output)
                    });
                    if !drives {
                        continue;
                    }
                    let mut child_inputs = BTreeMap::new();
                    for (port, sig) in &inst.connections {
                        if child.port(port).map(|p| p.dir) == Some(Dir::Input) {
                            child_inputs.insert(port.clone(), self.resolve(sig)?);
                        }
                    }
                    let child_out = simulate(self.design, &inst.module, &child_inputs)?;
                    for (port, sig) in &inst.connections {
                        if sig == signal {
                            if let Some(&v) = child_out.get(port) {
                                return Ok(v);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Err(Error::Input(format!("undriven signal '{signal}'")))
    }

    fn eval(&mut self, e: &Expr) -> Result<i64> {
        Ok(match e {
            Expr::Num(n) => *n,
            Expr::Ident(s) => self.resolve(s)?,
            Expr::Neg(inner) => -self.eval(inner)?,
            Expr::Binary(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Shl => a << b,
                    BinOp::AShr => a >> b,
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Gt => (a > b) as i64,
                }
            }
            Expr::Ternary(c, t, f) => {
                if self.eval(c)? != 0 {
                    self.eval(t)?
                } else {
                    self.eval(f)?
                }
            }
        })
    }
}

// -------------------------------------------------------- interval analysis

pub type Range = (i64, i64);

/// Propagates input ranges through a module and checks that every declared
/// signal can hold its value range: signed wires must fit in
/// [-2^(w-1), 2^(w-1) - 1], unsigned in [0, 2^w - 1].
pub fn check_widths(
    design: &Design,
    module: &str,
    input_ranges: &BTreeMap<String, Range>,
) -> Result<BTreeMap<String, Range>> {
    let m = design
        .modules
        .get(module)
        .ok_or_else(|| Error::Input(format!("no module named '{module}'")))?;
    let mut ctx = RangeCtx {
        design,
        module: m,
        inputs: input_ranges,
        cache: BTreeMap::new(),
        in_progress: Vec::new(),
        refine: Vec::new(),
    };
    let mut out = BTreeMap::new();
    // Resolve every assigned signal and every port, checking declared widths.
    let check = |name: &str, width: u32, signed: bool, r: Range| -> Result<()> {
        let (lo_ok, hi_ok) = if signed {
            (-(1i64 << (width - 1)), (1i64 << (width - 1)) - 1)
        } else {
            (0, (1i64 << width) - 1)
        };
        if r.0 < lo_ok || r.1 > hi_ok {
            return Err(Error::Invariant(format!(
                "signal '{name}' range [{}, {}] overflows its {}[{}] declaration",
                r.0,
                r.1,
                if signed { "signed " } else { "" },
                width
            )));
        }
        Ok(())
    };
    for item in &m.items {
        if let Item::Wire(w) = item {
            let r = ctx.resolve(&w.name)?;
            check(&w.name, w.width, w.signed, r)?;
        }
    }
    for p in &m.ports {
        let r = ctx.resolve(&p.name)?;
        check(&p.name, p.width, p.signed, r)?;
        if p.dir == Dir::Output {
            out.insert(p.name.clone(), r);
        }
    }
    Ok(out)
}

struct RangeCtx<'a> {
    design: &'a Design,
    module: &'a VModule,
    inputs: &'a BTreeMap<String, Range>,
    cache: BTreeMap<String, Range>,
    in_progress: Vec<String>,
    /// Path conditions active while evaluating a ternary branch: extra
    /// bounds on named signals, intersected at identifier lookup.
    refine: Vec<(String, Range)>,
}

/// Bounds implied by a ternary condition of the form `ident OP const`:
/// (true-branch refinement, false-branch refinement).
#[allow(clippy::type_complexity)]
fn cond_refinements(c: &Expr) -> (Option<(String, Range)>, Option<(String, Range)>) {
    if let Expr::Binary(op, a, b) = c {
        if let (Expr::Ident(s), Expr::Num(n)) = (a.as_ref(), b.as_ref()) {
            let s = s.clone();
            let n = *n;
            return match op {
                BinOp::Lt => (
                    Some((s.clone(), (i64::MIN, n - 1))),
                    Some((s, (n, i64::MAX))),
                ),
                BinOp::Gt => (
                    Some((s.clone(), (n + 1, i64::MAX))),
                    Some((s, (i64::MIN, n))),
                ),
                BinOp::Eq => (Some((s, (n, n))), None),
                _ => (None, None),
            };
        }
    }
    (None, None)
}

impl RangeCtx<'_> {
    fn resolve(&mut self, signal: &str) -> Result<Range> {
        if let Some(&r) = self.cache.get(signal) {
            return Ok(r);
        }
        if self.in_progress.iter().any(|s| s == signal) {
            return Err(Error::Invariant(format!("combinational loop through '{signal}'")));
        }
        self.in_progress.push(signal.to_string());
        let r = self.resolve_uncached(signal)?;
        self.in_progress.pop();
        self.cache.insert(signal.to_string(), r);
        Ok(r)
    }

    fn resolve_uncached(&mut self, signal: &str) -> Result<Range> {
        if let Some(p) = self.module.port(signal) {
            if p.dir == Dir::Input {
                return self
                    .inputs
                    .get(signal)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("missing input range for '{signal}'")));
            }
        }
        for item in &self.module.items {
            match item {
                Item::Assign(target, e) if target == signal => return self.eval(e),
                Item::Instance(inst) => {
                    let child = self.design.modules.get(&inst.module).ok_or_else(|| {
                        Error::Input(format!("no module named '{}'", inst.module))
                    })?;
                    let drives = inst.connections.iter().any(|(port, sig)| {
                        sig == signal
                            && child.port(port).map(|p| p.dir) == Some(Dir::Output)
                    });
                    if !drives {
                        continue;
                    }
                    let mut child_inputs = BTreeMap::new();
                    for (port, sig) in &inst.connections {
                        if child.port(port).map(|p| p.dir) == Some(Dir::Input) {
                            child_inputs.insert(port.clone(), self.resolve(sig)?);
                        }
                    }
                    let child_out = check_widths(self.design, &inst.module, &child_inputs)?;
                    for (port, sig) in &inst.connections {
                        if sig == signal {
                            if let Some(&r) = child_out.get(port) {
                                return Ok(r);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Err(Error::Input(format!("undriven signal '{signal}'")))
    }

    /// Evaluates a ternary branch under a path condition. Returns None when
    /// the condition makes the branch unreachable.
    fn eval_branch(
        &mut self,
        e: &Expr,
        refinement: Option<(String, Range)>,
    ) -> Result<Option<Range>> {
        let Some((name, rr)) = refinement else {
            return self.eval(e).map(Some);
        };
        self.refine.push((name.clone(), rr));
        let probe = self.eval(&Expr::Ident(name));
        let out = match probe {
            Ok((lo, hi)) if lo > hi => Ok(None),
            Ok(_) => self.eval(e).map(Some),
            Err(err) => Err(err),
        };
        self.refine.pop();
        out
    }

    fn eval(&mut self, e: &Expr) -> Result<Range> {
        Ok(match e {
            Expr::Num(n) => (*n, *n),
            Expr::Ident(s) => {
                let mut r = self.resolve(s)?;
                for (name, rr) in &self.refine {
                    if name == s {
                        r = (r.0.max(rr.0), r.1.min(rr.1));
                    }
                }
                r
            }
            Expr::Neg(inner) => {
                let (lo, hi) = self.eval(inner)?;
                (-hi, -lo)
            }
            Expr::Binary(op, a, b) => {
                let (alo, ahi) = self.eval(a)?;
                let (blo, bhi) = self.eval(b)?;
                match op {
                    BinOp::Add => (alo + blo, ahi + bhi),
                    BinOp::Sub => (alo - bhi, ahi - blo),
                    BinOp::Mul => {
                        let p = [alo * blo, alo * bhi, ahi * blo, ahi * bhi];
                        (*p.iter().min().unwrap(), *p.iter().max().unwrap())
                    }
                    BinOp::Shl => {
                        debug_assert!(blo == bhi, "shift amounts are constants");
                        (alo << blo, ahi << blo)
                    }
                    BinOp::AShr => {
                        debug_assert!(blo == bhi, "shift amounts are constants");
                        (alo >> blo, ahi >> blo)
                    }
                    BinOp::Eq | BinOp::Lt | BinOp::Gt => (0, 1),
                }
            }
            Expr::Ternary(c, t, f) => {
                self.eval(c)?;
                let (tref, fref) = cond_refinements(c);
                let tr = self.eval_branch(t, tref)?;
                let fr = self.eval_branch(f, fref)?;
                match (tr, fr) {
                    (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => (0, 0),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
module adder (
  input signed [10:0] x,
  output signed [12:0] y
);
  wire signed [12:0] n1;
  assign n1 = (x <<< 1) + x;
  assign y = n1;
endmodule
";

    #[test]
    fn parse_and_simulate_small_module() {
        let d = parse_design(SMALL).unwrap();
        let mut inputs = BTreeMap::new();
        inputs.insert("x".to_string(), 100i64);
        let out = simulate(&d, "adder", &inputs).unwrap();
        assert_eq!(out["y"], 300);
    }

    #[test]
    fn interval_analysis_accepts_fitting_widths() {
        let d = parse_design(SMALL).unwrap();
        let mut ranges = BTreeMap::new();
        ranges.insert("x".to_string(), (0i64, 1023i64));
        let out = check_widths(&d, "adder", &ranges).unwrap();
        assert_eq!(out["y"], (0, 3069));
    }

    #[test]
    fn interval_analysis_rejects_overflow() {
        let d = parse_design(SMALL).unwrap();
        let mut ranges = BTreeMap::new();
        ranges.insert("x".to_string(), (0i64, 4095i64));
        assert!(check_widths(&d, "adder", &ranges).is_err());
    }

    #[test]
    fn parse_error_carries_line_number() {
        let bad = "module m (\n  input wire& x\n);\nendmodule\n";
        match parse_design(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ternary_and_comparison() {
        let src = "\
module clipper (
  input signed [12:0] v,
  output signed [10:0] p
);
  assign p = (v < 0) ? 0 : ((v > 1023) ? 1023 : v);
endmodule
";
        let d = parse_design(src).unwrap();
        for (v, expect) in [(-5i64, 0i64), (1040, 1023), (512, 512)] {
            let mut inputs = BTreeMap::new();
            inputs.insert("v".to_string(), v);
            assert_eq!(simulate(&d, "clipper", &inputs).unwrap()["p"], expect);
        }
    }

    #[test]
    fn instance_wiring() {
        let src = format!(
            "{SMALL}
module top (
  input signed [10:0] a,
  output signed [12:0] out
);
  wire signed [12:0] t;
  adder u0 ( .x(a), .y(t) );
  assign out = t + 1;
endmodule
"
        );
        let d = parse_design(&src).unwrap();
        let mut inputs = BTreeMap::new();
        inputs.insert("a".to_string(), 10i64);
        assert_eq!(simulate(&d, "top", &inputs).unwrap()["out"], 31);
    }
}
