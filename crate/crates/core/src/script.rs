//! The command-line DSL: named object, cobordism, and cone bindings followed
//! by commands. One statement per line, `#` comments, every number printed
//! back as an exact integer or fraction.
//!
//! ```text
//! object O = brick(r=1,d=0,x=0/2,m=0)[0]^1
//! cob V = ends[(1,O),(3,O)]
//! charge V
//! hn V kappa=4
//! ```

use crate::base::{self, BaseObject, Brick, Grading, SemistableAtom};
use crate::cone::{flatten, ConeExpr, MorphismTag};
use crate::hn;
use crate::k0::{self, ModelParams};
use crate::lift::{self, CobordismEnd, CobordismSpec, LiftedGenerator};
use crate::phase::fmt_rational;
use crate::sample;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptError {
    Syntax { line: usize, col: usize, msg: String },
    UndefinedName { line: usize, col: usize, name: String },
    /// A module operation failed while running a command.
    Command { index: usize, msg: String },
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptError::Syntax { line, col, msg } => {
                write!(f, "syntax error at {}:{}: {}", line, col, msg)
            }
            ScriptError::UndefinedName { line, col, name } => {
                write!(f, "undefined name `{}` at {}:{}", name, line, col)
            }
            ScriptError::Command { index, msg } => {
                write!(f, "command {} failed: {}", index, msg)
            }
        }
    }
}

impl std::error::Error for ScriptError {}

// ---- tokens ----

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Arrow,
    Sym(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Spanned>, ScriptError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c == '"' {
            let mut j = i + 1;
            let mut text = String::new();
            while j < chars.len() && chars[j] != '"' {
                text.push(chars[j]);
                j += 1;
            }
            if j == chars.len() {
                return Err(ScriptError::Syntax {
                    line: line_no,
                    col,
                    msg: "unterminated string".into(),
                });
            }
            out.push(Spanned { tok: Tok::Str(text), line: line_no, col });
            i = j + 1;
            continue;
        }
        if c == '-' && i + 1 < chars.len() && chars[i + 1] == '>' {
            out.push(Spanned { tok: Tok::Arrow, line: line_no, col });
            i += 2;
            continue;
        }
        if c == '-' && i + 1 < chars.len() && chars[i + 1] == '-' {
            // long flags read as identifiers
            let mut j = i + 2;
            let mut name = String::new();
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                name.push(chars[j]);
                j += 1;
            }
            if name.is_empty() {
                return Err(ScriptError::Syntax {
                    line: line_no,
                    col,
                    msg: "dangling `--`".into(),
                });
            }
            out.push(Spanned { tok: Tok::Ident(name), line: line_no, col });
            i = j;
            continue;
        }
        if c == '-' || c.is_ascii_digit() {
            let mut j = i + (c == '-') as usize;
            let start = j;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j == start {
                return Err(ScriptError::Syntax {
                    line: line_no,
                    col,
                    msg: "expected digits after `-`".into(),
                });
            }
            let text: String = chars[i..j].iter().collect();
            let value = text.parse().map_err(|_| ScriptError::Syntax {
                line: line_no,
                col,
                msg: format!("integer out of range: {}", text),
            })?;
            out.push(Spanned { tok: Tok::Int(value), line: line_no, col });
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            out.push(Spanned { tok: Tok::Ident(text), line: line_no, col });
            i = j;
            continue;
        }
        if "()[]{}=,;+^@/:".contains(c) {
            out.push(Spanned { tok: Tok::Sym(c), line: line_no, col });
            i += 1;
            continue;
        }
        return Err(ScriptError::Syntax {
            line: line_no,
            col,
            msg: format!("unexpected character `{}`", c),
        });
    }
    Ok(out)
}

// ---- AST ----

/// An atom literal before point-residue resolution: `x` is kept as the pair
/// (numerator, denominator) until the modulus is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomLit {
    pub r: i64,
    pub d: i64,
    pub x_num: i64,
    pub x_den: i64,
    pub m: i64,
    pub shift: i64,
    pub jordan: i64,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjTerm {
    Atom(AtomLit),
    Ref { name: String, line: usize, col: usize },
}

pub type ObjExpr = Vec<ObjTerm>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndLit {
    pub height: i64,
    pub object: ObjExpr,
    pub grading: Option<(i64, i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeItem {
    pub height: i64,
    pub object: ObjExpr,
    pub shift: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    BindObject { name: String, value: ObjExpr },
    BindCob { name: String, ends: Vec<EndLit> },
    BindCone { name: String, items: Vec<ConeItem>, tags: Vec<MorphismTag> },
    Command { name: String, args: Vec<(String, Option<String>)>, line: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    pub statements: Vec<Stmt>,
}

// ---- parser ----

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.line, 0))
    }

    fn err(&self, msg: impl Into<String>) -> ScriptError {
        let (line, col) = self.here();
        ScriptError::Syntax { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ScriptError> {
        match self.next() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            _ => {
                self.pos -= 1;
                Err(self.err(format!("expected `{}`", c)))
            }
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ScriptError> {
        match self.next() {
            Some(Tok::Ident(s)) if s == word => Ok(()),
            _ => {
                self.pos -= 1;
                Err(self.err(format!("expected `{}`", word)))
            }
        }
    }

    fn ident(&mut self) -> Result<String, ScriptError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a name"))
            }
        }
    }

    fn int(&mut self) -> Result<i64, ScriptError> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.err("expected an integer"))
            }
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn atom(&mut self) -> Result<AtomLit, ScriptError> {
        let (line, col) = self.here();
        self.expect_ident("brick")?;
        self.expect_sym('(')?;
        self.expect_ident("r")?;
        self.expect_sym('=')?;
        let r = self.int()?;
        self.expect_sym(',')?;
        self.expect_ident("d")?;
        self.expect_sym('=')?;
        let d = self.int()?;
        self.expect_sym(',')?;
        self.expect_ident("x")?;
        self.expect_sym('=')?;
        let x_num = self.int()?;
        let x_den = if self.eat_sym('/') { self.int()? } else { 1 };
        self.expect_sym(',')?;
        self.expect_ident("m")?;
        self.expect_sym('=')?;
        let m = self.int()?;
        self.expect_sym(')')?;
        let shift = if self.eat_sym('[') {
            let s = self.int()?;
            self.expect_sym(']')?;
            s
        } else {
            0
        };
        let jordan = if self.eat_sym('^') { self.int()? } else { 1 };
        if jordan < 1 {
            return Err(self.err("jordan size must be positive"));
        }
        Ok(AtomLit { r, d, x_num, x_den, m, shift, jordan, line, col })
    }

    fn obj_expr(&mut self) -> Result<ObjExpr, ScriptError> {
        let mut terms = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(name)) if name == "brick" => terms.push(ObjTerm::Atom(self.atom()?)),
                Some(Tok::Ident(_)) => {
                    let (line, col) = self.here();
                    let name = self.ident()?;
                    terms.push(ObjTerm::Ref { name, line, col });
                }
                _ => return Err(self.err("expected an object term")),
            }
            if !self.eat_sym('+') {
                break;
            }
        }
        Ok(terms)
    }

    fn end(&mut self) -> Result<EndLit, ScriptError> {
        self.expect_sym('(')?;
        let height = self.int()?;
        self.expect_sym(',')?;
        let object = self.obj_expr()?;
        let grading = if self.eat_sym('@') {
            self.expect_ident("g")?;
            self.expect_sym('(')?;
            let w = self.int()?;
            self.expect_sym(';')?;
            let a = self.int()?;
            self.expect_sym(',')?;
            let b = self.int()?;
            self.expect_sym(')')?;
            Some((w, a, b))
        } else {
            None
        };
        self.expect_sym(')')?;
        Ok(EndLit { height, object, grading })
    }

    fn cone_item(&mut self) -> Result<ConeItem, ScriptError> {
        self.expect_ident("lift")?;
        self.expect_sym('(')?;
        let height = self.int()?;
        self.expect_sym(',')?;
        let object = self.obj_expr()?;
        self.expect_sym(')')?;
        let shift = if self.eat_sym('[') {
            let s = self.int()?;
            self.expect_sym(']')?;
            s
        } else {
            0
        };
        Ok(ConeItem { height, object, shift })
    }

    fn tag(&mut self) -> Result<MorphismTag, ScriptError> {
        let word = self.ident()?;
        match word.as_str() {
            "zero" => Ok(MorphismTag::Zero),
            "unknown" => Ok(MorphismTag::Unknown),
            "nonzero" => {
                let label = if self.eat_sym(':') { self.ident()? } else { "f".into() };
                Ok(MorphismTag::Nonzero(label))
            }
            other => Err(self.err(format!("unknown tag `{}`", other))),
        }
    }
}

/// Parses a script: one statement per line, names defined before use (use is
/// checked while running).
pub fn parse(text: &str) -> Result<Script, ScriptError> {
    let mut script = Script::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser { toks, pos: 0, line: line_no };
        let head = p.ident()?;
        let stmt = match head.as_str() {
            "object" => {
                let name = p.ident()?;
                p.expect_sym('=')?;
                let value = p.obj_expr()?;
                Stmt::BindObject { name, value }
            }
            "cob" => {
                let name = p.ident()?;
                p.expect_sym('=')?;
                p.expect_ident("ends")?;
                p.expect_sym('[')?;
                let mut ends = vec![p.end()?];
                while p.eat_sym(',') {
                    ends.push(p.end()?);
                }
                p.expect_sym(']')?;
                Stmt::BindCob { name, ends }
            }
            "cone" => {
                let name = p.ident()?;
                p.expect_sym('=')?;
                p.expect_ident("cone")?;
                p.expect_sym('(')?;
                let mut items = vec![p.cone_item()?];
                loop {
                    match p.next() {
                        Some(Tok::Arrow) => {}
                        _ => {
                            p.pos -= 1;
                            return Err(p.err("expected `->`"));
                        }
                    }
                    if p.peek() == Some(&Tok::Int(0)) {
                        p.pos += 1;
                        break;
                    }
                    items.push(p.cone_item()?);
                }
                let mut tags = Vec::new();
                if p.eat_sym(';') {
                    p.expect_ident("tags")?;
                    p.expect_sym('=')?;
                    p.expect_sym('[')?;
                    tags.push(p.tag()?);
                    while p.eat_sym(',') {
                        tags.push(p.tag()?);
                    }
                    p.expect_sym(']')?;
                }
                p.expect_sym(')')?;
                if !tags.is_empty() && tags.len() != items.len() {
                    return Err(p.err(format!(
                        "{} tags for {} factors",
                        tags.len(),
                        items.len()
                    )));
                }
                Stmt::BindCone { name, items, tags }
            }
            cmd @ ("hn" | "charge" | "axioms" | "k0" | "theta" | "localfin" | "trace"
            | "lift") => {
                let (line, col) = (line_no, 1);
                let mut args = Vec::new();
                while p.peek().is_some() {
                    let tok = p.next().unwrap();
                    match tok {
                        Tok::Ident(key) => {
                            if p.eat_sym('=') {
                                args.push((key, Some(p.value_text()?)));
                            } else if matches!(p.peek(), Some(Tok::Int(_)))
                                && key != "trace"
                            {
                                // `--key value` style
                                args.push((key, Some(p.value_text()?)));
                            } else {
                                args.push((key, None));
                            }
                        }
                        _ => return Err(p.err("expected an argument name")),
                    }
                }
                Stmt::Command { name: cmd.to_string(), args, line, col }
            }
            other => {
                return Err(ScriptError::Syntax {
                    line: line_no,
                    col: 1,
                    msg: format!("unknown statement `{}`", other),
                })
            }
        };
        if p.pos != p.toks.len() {
            return Err(p.err("trailing tokens"));
        }
        script.statements.push(stmt);
    }
    Ok(script)
}

impl Parser {
    /// The textual value of an argument: an integer, a fraction `p/q`, or a
    /// bare word.
    fn value_text(&mut self) -> Result<String, ScriptError> {
        match self.next() {
            Some(Tok::Int(v)) => {
                if self.eat_sym('/') {
                    let d = self.int()?;
                    Ok(format!("{}/{}", v, d))
                } else {
                    Ok(v.to_string())
                }
            }
            Some(Tok::Ident(s)) => Ok(s),
            Some(Tok::Str(s)) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a value"))
            }
        }
    }
}

/// Canonical rendering; `parse` after `print` is the identity on scripts
/// that are already canonical.
pub fn print_script(script: &Script) -> String {
    let mut out = String::new();
    for stmt in &script.statements {
        match stmt {
            Stmt::BindObject { name, value } => {
                out.push_str(&format!("object {} = {}\n", name, print_obj(value)));
            }
            Stmt::BindCob { name, ends } => {
                let parts: Vec<String> = ends
                    .iter()
                    .map(|e| {
                        let grading = e
                            .grading
                            .map(|(w, a, b)| format!("@g({}; {}, {})", w, a, b))
                            .unwrap_or_default();
                        format!("({}, {}{})", e.height, print_obj(&e.object), grading)
                    })
                    .collect();
                out.push_str(&format!("cob {} = ends[{}]\n", name, parts.join(", ")));
            }
            Stmt::BindCone { name, items, tags } => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|it| {
                        format!("lift({}, {})[{}]", it.height, print_obj(&it.object), it.shift)
                    })
                    .collect();
                let tag_text = if tags.is_empty() {
                    String::new()
                } else {
                    let ts: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
                    format!(" ; tags=[{}]", ts.join(", "))
                };
                out.push_str(&format!(
                    "cone {} = cone({} -> 0{})\n",
                    name,
                    parts.join(" -> "),
                    tag_text
                ));
            }
            Stmt::Command { name, args, .. } => {
                let mut text = name.clone();
                for (k, v) in args {
                    match v {
                        Some(v) => {
                            let plain = v.chars().all(|c| c.is_alphanumeric() || c == '_')
                                || v.parse::<i64>().is_ok()
                                || is_fraction(v);
                            if plain {
                                text.push_str(&format!(" {}={}", k, v));
                            } else {
                                text.push_str(&format!(" {}=\"{}\"", k, v));
                            }
                        }
                        None => text.push_str(&format!(" {}", k)),
                    }
                }
                out.push_str(&text);
                out.push('\n');
            }
        }
    }
    out
}

fn print_obj(obj: &ObjExpr) -> String {
    let parts: Vec<String> = obj
        .iter()
        .map(|t| match t {
            ObjTerm::Atom(a) => {
                let x = if a.x_den == 1 {
                    format!("{}", a.x_num)
                } else {
                    format!("{}/{}", a.x_num, a.x_den)
                };
                format!(
                    "brick(r={},d={},x={},m={})[{}]^{}",
                    a.r, a.d, x, a.m, a.shift, a.jordan
                )
            }
            ObjTerm::Ref { name, .. } => name.clone(),
        })
        .collect();
    parts.join(" + ")
}

// ---- evaluation ----

#[derive(Debug, Clone)]
enum Binding {
    Object(BaseObject),
    Cob(CobordismSpec),
    Cone(ConeExpr<LiftedGenerator>),
}

/// Options carried from the command line into a run; per-command arguments
/// override them.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub kappa: i64,
    pub modulus: u32,
    pub bound: i64,
    pub trace: bool,
    pub json: bool,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions { kappa: 4, modulus: 2, bound: 2, trace: false, json: false }
    }
}

/// The result of running a script: output lines, diagnostics, and the number
/// of failed commands (the process exit is nonzero iff any failed).
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub stdout: Vec<String>,
    pub stderr: Vec<String>,
    pub failures: usize,
}

struct Evaluator<'a> {
    opts: &'a RunOptions,
    bindings: BTreeMap<String, Binding>,
    out: RunOutput,
    command_index: usize,
}

/// Executes a parsed script. Commands run in order; a failing command is
/// reported on the diagnostic stream and counted, and execution continues.
/// In json mode each command's output lines fold into one structured record.
pub fn run(script: &Script, opts: &RunOptions) -> RunOutput {
    let mut ev = Evaluator {
        opts,
        bindings: BTreeMap::new(),
        out: RunOutput::default(),
        command_index: 0,
    };
    for stmt in &script.statements {
        let before = ev.out.stdout.len();
        if let Err(e) = ev.step(stmt) {
            ev.out.stderr.push(e.to_string());
            ev.out.failures += 1;
        }
        if opts.json {
            if let Stmt::Command { name, .. } = stmt {
                let lines: Vec<String> = ev.out.stdout.drain(before..).collect();
                let quoted: Vec<String> = lines.iter().map(|l| json_quote(l)).collect();
                ev.out.stdout.push(format!(
                    "{{\"cmd\": \"{}\", \"output\": [{}]}}",
                    name,
                    quoted.join(", ")
                ));
            }
        }
    }
    ev.out
}

fn json_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

impl<'a> Evaluator<'a> {
    fn step(&mut self, stmt: &Stmt) -> Result<(), ScriptError> {
        match stmt {
            Stmt::BindObject { name, value } => {
                let obj = self.eval_obj(value)?;
                self.bindings.insert(name.clone(), Binding::Object(obj));
                Ok(())
            }
            Stmt::BindCob { name, ends } => {
                let mut built = Vec::new();
                for e in ends {
                    let object = self.eval_obj(&e.object)?;
                    let grading = match e.grading {
                        Some((w, a, b)) => Some(Grading::new(w, a, b).map_err(|err| {
                            ScriptError::Command {
                                index: self.command_index,
                                msg: err.to_string(),
                            }
                        })?),
                        None => None,
                    };
                    built.push(CobordismEnd { height: e.height, object, grading });
                }
                let spec = CobordismSpec::new(built).map_err(|err| ScriptError::Command {
                    index: self.command_index,
                    msg: err.to_string(),
                })?;
                self.bindings.insert(name.clone(), Binding::Cob(spec));
                Ok(())
            }
            Stmt::BindCone { name, items, tags } => {
                let mut expr = ConeExpr::Zero;
                for (i, item) in items.iter().enumerate().rev() {
                    let object = self.eval_obj(&item.object)?;
                    let gen = LiftedGenerator::new(item.height, 0, object).map_err(|err| {
                        ScriptError::Command {
                            index: self.command_index,
                            msg: err.to_string(),
                        }
                    })?;
                    let tag = tags.get(i).cloned().unwrap_or(MorphismTag::Unknown);
                    expr = ConeExpr::cone(ConeExpr::leaf(gen, item.shift), expr, tag);
                }
                self.bindings.insert(name.clone(), Binding::Cone(expr));
                Ok(())
            }
            Stmt::Command { name, args, line, col } => {
                self.command_index += 1;
                self.command(name, args, *line, *col).map_err(|e| match e {
                    ScriptError::Command { msg, .. } => ScriptError::Command {
                        index: self.command_index,
                        msg,
                    },
                    other => other,
                })
            }
        }
    }

    fn eval_obj(&self, expr: &ObjExpr) -> Result<BaseObject, ScriptError> {
        let modulus = self.opts.modulus;
        let mut atoms: Vec<SemistableAtom> = Vec::new();
        for term in expr {
            match term {
                ObjTerm::Atom(a) => {
                    if a.x_den <= 0 || (modulus as i64) % a.x_den != 0 {
                        return Err(ScriptError::Syntax {
                            line: a.line,
                            col: a.col,
                            msg: format!(
                                "point denominator {} does not divide the modulus {}",
                                a.x_den, modulus
                            ),
                        });
                    }
                    let x = (a.x_num * ((modulus as i64) / a.x_den)).rem_euclid(modulus as i64);
                    let m = a.m.rem_euclid(modulus as i64);
                    let brick =
                        Brick::new(a.r, a.d, x as u32, m as u32).map_err(|err| {
                            ScriptError::Syntax {
                                line: a.line,
                                col: a.col,
                                msg: err.to_string(),
                            }
                        })?;
                    atoms.push(SemistableAtom::new(brick, a.jordan, a.shift));
                }
                ObjTerm::Ref { name, line, col } => match self.bindings.get(name) {
                    Some(Binding::Object(obj)) => atoms.extend(obj.atoms().iter().cloned()),
                    _ => {
                        return Err(ScriptError::UndefinedName {
                            line: *line,
                            col: *col,
                            name: name.clone(),
                        })
                    }
                },
            }
        }
        Ok(BaseObject::new(atoms))
    }

    fn lookup(&self, name: &str, line: usize, col: usize) -> Result<&Binding, ScriptError> {
        self.bindings.get(name).ok_or(ScriptError::UndefinedName {
            line,
            col,
            name: name.to_string(),
        })
    }

    fn fail(&self, msg: impl fmt::Display) -> ScriptError {
        ScriptError::Command { index: self.command_index, msg: msg.to_string() }
    }

    fn arg<'b>(args: &'b [(String, Option<String>)], key: &str) -> Option<&'b str> {
        args.iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    fn flag(args: &[(String, Option<String>)], key: &str) -> bool {
        args.iter().any(|(k, v)| k == key && v.is_none())
    }

    fn int_arg(
        &self,
        args: &[(String, Option<String>)],
        key: &str,
        default: i64,
    ) -> Result<i64, ScriptError> {
        match Self::arg(args, key) {
            None => Ok(default),
            Some(text) => text
                .parse()
                .map_err(|_| self.fail(format!("argument {}={} is not an integer", key, text))),
        }
    }

    fn emit(&mut self, line: String) {
        self.out.stdout.push(line);
    }

    fn command(
        &mut self,
        name: &str,
        args: &[(String, Option<String>)],
        line: usize,
        col: usize,
    ) -> Result<(), ScriptError> {
        let kappa_value = self.int_arg(args, "kappa", self.opts.kappa)?;
        let kappa = lift::validate_kappa(kappa_value).map_err(|e| self.fail(e))?;
        match name {
            "charge" => {
                let target = Self::arg(args, "of")
                    .or_else(|| args.first().map(|(k, _)| k.as_str()))
                    .ok_or_else(|| self.fail("charge needs an object name"))?
                    .to_string();
                let z = match self.lookup(&target, line, col)? {
                    Binding::Object(obj) => base::central_charge(obj),
                    Binding::Cob(spec) => {
                        let expr = lift::cone_decomposition(spec).map_err(|e| self.fail(e))?;
                        lift::central_charge_lifted(&expr)
                    }
                    Binding::Cone(expr) => lift::central_charge_lifted(expr),
                };
                self.emit(format!("charge {} = {}", target, z.to_json()));
                Ok(())
            }
            "hn" | "trace" => {
                let want_trace = name == "trace" || Self::flag(args, "trace") || self.opts.trace;
                let target = args
                    .iter()
                    .find(|(k, v)| v.is_none() && k != "trace")
                    .map(|(k, _)| k.clone())
                    .ok_or_else(|| self.fail("hn needs an object name"))?;
                match self.lookup(&target, line, col)?.clone() {
                    Binding::Object(obj) => {
                        let filtration = base::hn_filtration(&obj).map_err(|e| self.fail(e))?;
                        let modulus = self.opts.modulus;
                        self.emit(format!(
                            "hn {}: {} factors",
                            target,
                            filtration.len()
                        ));
                        for (i, (phi, factor)) in filtration.iter().enumerate() {
                            let stable = factor.atoms().len() == 1
                                && base::is_stable(&factor.atoms()[0]);
                            self.emit(format!(
                                "  {}: phase={} charge={} stable={} object={}",
                                i + 1,
                                phi.to_json(),
                                base::central_charge(factor).to_json(),
                                stable,
                                describe_object(factor, modulus)
                            ));
                        }
                        Ok(())
                    }
                    Binding::Cob(spec) => {
                        let expr = lift::cone_decomposition(&spec).map_err(|e| self.fail(e))?;
                        let refined = hn::refine_by_base_hn(&expr).map_err(|e| self.fail(e))?;
                        self.report_filtration(&target, &refined, kappa, want_trace)
                    }
                    Binding::Cone(expr) => {
                        let refined = hn::refine_by_base_hn(&expr).map_err(|e| self.fail(e))?;
                        self.report_filtration(&target, &refined, kappa, want_trace)
                    }
                }
            }
            "lift" => {
                let target = args
                    .first()
                    .map(|(k, _)| k.clone())
                    .ok_or_else(|| self.fail("lift needs a cobordism name"))?;
                let expr = match self.lookup(&target, line, col)? {
                    Binding::Cob(spec) => lift::cone_decomposition(spec).map_err(|e| self.fail(e))?,
                    Binding::Cone(expr) => expr.clone(),
                    Binding::Object(_) => {
                        return Err(self.fail("lift applies to a cobordism or cone binding"))
                    }
                };
                let modulus = self.opts.modulus;
                self.emit(format!("lift {} = {}", target, describe_expr(&expr, modulus)));
                self.emit(format!(
                    "charge {} = {}",
                    target,
                    lift::central_charge_lifted(&expr).to_json()
                ));
                Ok(())
            }
            "axioms" => {
                let seed = self.int_arg(args, "seed", 1)? as u64;
                let generators = self.int_arg(args, "generators", 50)? as usize;
                let specs = self.int_arg(args, "specs", 10)? as usize;
                let mut rng = sample::Rng::new(seed);
                let mut axiom_sample = hn::AxiomSample::default();
                for _ in 0..generators {
                    axiom_sample
                        .generators
                        .push(sample::random_generator(&mut rng, 4, self.opts.modulus));
                }
                let shape = sample::SpecShape {
                    modulus: self.opts.modulus,
                    ..sample::SpecShape::default()
                };
                for _ in 0..specs {
                    axiom_sample.specs.push(sample::random_spec(&mut rng, &shape));
                }
                let report = hn::verify_axioms(&axiom_sample, kappa);
                self.emit(format!(
                    "axioms kappa={} generators={} specs={}: A1 {} A2 {} A3 {} A4 {} failures {}",
                    kappa.value(),
                    generators,
                    specs,
                    report.a1_checked,
                    report.a2_checked,
                    report.a3_checked,
                    report.a4_checked,
                    report.failures.len()
                ));
                for f in &report.failures {
                    self.emit(format!("  failure: {}", f));
                }
                if report.passed() {
                    Ok(())
                } else {
                    Err(self.fail("axiom suite reported failures"))
                }
            }
            "k0" => {
                let params = self.params(args)?;
                let group = k0::k0_presentation(params).map_err(|e| self.fail(e))?;
                let inv = group.invariants();
                self.emit(format!(
                    "k0 modulus={} bound={}: generators={} relations={} invariants={}",
                    params.modulus,
                    params.bound,
                    group.generators.len(),
                    group.relations.len(),
                    display_invariants(&inv)
                ));
                if let Some(path) = Self::arg(args, "export") {
                    std::fs::write(path, group.export_text())
                        .map_err(|e| self.fail(format!("cannot write {}: {}", path, e)))?;
                    self.emit(format!("  exported presentation to {}", path));
                }
                Ok(())
            }
            "theta" => {
                let params = self.params(args)?;
                let k0g = k0::k0_presentation(params).map_err(|e| self.fail(e))?;
                let omega = k0::omega_lag_presentation(params).map_err(|e| self.fail(e))?;
                let (_, verdict) = k0::theta_map(&omega, &k0g).map_err(|e| self.fail(e))?;
                let assumptions = k0::check_assumptions(&k0g, &omega).map_err(|e| self.fail(e))?;
                self.emit(format!(
                    "theta modulus={} bound={}: omega={} k0={} well_defined={} iso={}",
                    params.modulus,
                    params.bound,
                    display_invariants(&verdict.src_invariants),
                    display_invariants(&verdict.dst_invariants),
                    verdict.well_defined,
                    verdict.iso
                ));
                self.emit(format!(
                    "  S1 affirmed ({} stable generators) S2 {} S3 {}",
                    assumptions.s1_stable_generators,
                    match &assumptions.s2 {
                        Ok(n) => format!("holds ({} relations)", n),
                        Err(w) => format!("fails: {}", w),
                    },
                    match &assumptions.s3 {
                        Ok(n) => format!("holds ({} branes)", n),
                        Err(w) => format!("fails: {}", w),
                    }
                ));
                Ok(())
            }
            "localfin" => {
                let seed = self.int_arg(args, "seed", 1)? as u64;
                let count = self.int_arg(args, "count", 40)? as usize;
                let eta = match Self::arg(args, "eta") {
                    None => BigRational::new(BigInt::from(1), BigInt::from(4)),
                    Some(text) => parse_rational(text)
                        .ok_or_else(|| self.fail(format!("bad eta `{}`", text)))?,
                };
                let mut rng = sample::Rng::new(seed);
                let sample: Vec<LiftedGenerator> = (0..count)
                    .map(|_| sample::random_generator(&mut rng, 4, self.opts.modulus))
                    .collect();
                let center = lift::lifted_phase(&sample[0], kappa).map_err(|e| self.fail(e))?;
                let report = hn::check_local_finiteness(&center, &eta, &sample, kappa)
                    .map_err(|e| self.fail(e))?;
                let basis: Vec<String> = report
                    .lattice_basis
                    .iter()
                    .map(|(a, b)| format!("({}, {})", a, b))
                    .collect();
                self.emit(format!(
                    "localfin kappa={} eta={}: denominator={} lattice=[{}] members={} max_chain={} pass={}",
                    kappa.value(),
                    fmt_rational(&eta),
                    report.denominator,
                    basis.join(", "),
                    report.members_checked,
                    report.max_chain_length,
                    report.pass
                ));
                Ok(())
            }
            other => Err(self.fail(format!("unknown command `{}`", other))),
        }
    }

    fn params(&self, args: &[(String, Option<String>)]) -> Result<ModelParams, ScriptError> {
        let modulus = self.int_arg(args, "modulus", self.opts.modulus as i64)? as u32;
        let bound = self.int_arg(args, "bound", self.opts.bound)?;
        let twist = self.int_arg(args, "twist", 3)?;
        let mut params = ModelParams::new(modulus, bound);
        params.twist_degree = twist;
        Ok(params)
    }

    fn report_filtration(
        &mut self,
        target: &str,
        refined: &ConeExpr<LiftedGenerator>,
        kappa: lift::Kappa,
        want_trace: bool,
    ) -> Result<(), ScriptError> {
        let (filtration, trace) = hn::normalize(refined, kappa).map_err(|e| self.fail(e))?;
        self.emit(format!(
            "hn {} kappa={}: {} factors",
            target,
            kappa.value(),
            filtration.factors.len()
        ));
        let modulus = self.opts.modulus;
        for (i, (phi, parts)) in filtration.factors.iter().enumerate() {
            let heights: Vec<String> =
                parts.iter().map(|g| g.height().to_string()).collect();
            let bases: Vec<String> =
                parts.iter().map(|g| describe_object(&g.base, modulus)).collect();
            self.emit(format!(
                "  {}: phase={} heights=[{}] parts=[{}]",
                i + 1,
                phi.to_json(),
                heights.join(", "),
                bases.join(", ")
            ));
        }
        if want_trace {
            self.emit(format!("  trace: {} steps", trace.steps.len()));
            for step in &trace.steps {
                self.emit(format!("    {}", describe_step(step)));
            }
        }
        Ok(())
    }
}

fn is_fraction(text: &str) -> bool {
    match text.split_once('/') {
        Some((n, d)) => n.parse::<i64>().is_ok() && d.parse::<i64>().is_ok(),
        None => false,
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.parse().ok()?;
            let d: i64 = d.parse().ok()?;
            (d != 0).then(|| BigRational::new(BigInt::from(n), BigInt::from(d)))
        }
        None => {
            let n: i64 = text.parse().ok()?;
            Some(BigRational::from_integer(BigInt::from(n)))
        }
    }
}

fn display_invariants(inv: &crate::snf::InvariantFactors) -> String {
    let list: Vec<String> = inv.display_list().iter().map(|v| v.to_string()).collect();
    format!("[{}]", list.join(","))
}

/// `brick(r=..,d=..,x=p/N,m=..)[shift]^jordan + ...`; the point prints as an
/// exact fraction of the modulus so output parses back to the same atom.
fn describe_object(obj: &BaseObject, modulus: u32) -> String {
    if obj.is_empty() {
        return "0".into();
    }
    let parts: Vec<String> = obj
        .atoms()
        .iter()
        .map(|a| {
            format!(
                "brick(r={},d={},x={}/{},m={})[{}]^{}",
                a.brick.r, a.brick.d, a.brick.point, modulus, a.brick.monodromy, a.shift,
                a.jordan
            )
        })
        .collect();
    parts.join(" + ")
}

/// The flattened textual form `cone( ... -> 0 ; tags=[...] )`.
pub fn describe_expr(expr: &ConeExpr<LiftedGenerator>, modulus: u32) -> String {
    let flats = flatten(expr);
    if flats.entries.is_empty() {
        return "cone( 0 )".into();
    }
    let items: Vec<String> = flats
        .entries
        .iter()
        .map(|(g, s)| {
            format!(
                "lift({}, {})[{}]",
                g.height(),
                describe_object(&g.base.shifted(g.shift), modulus),
                s
            )
        })
        .collect();
    let tags: Vec<String> = flats.tags.iter().map(|t| t.to_string()).collect();
    format!("cone( {} -> 0 ; tags=[{}] )", items.join(" -> "), tags.join(", "))
}

fn describe_step(step: &hn::RewriteStep) -> String {
    match step {
        hn::RewriteStep::Refine { leaf, produced } => {
            format!("refine leaf {} into {} factors", leaf, produced)
        }
        hn::RewriteStep::Swap { pos } => format!("swap at {}", pos),
        hn::RewriteStep::Merge { pos } => format!("merge at {}", pos),
        hn::RewriteStep::Collapse { pos, start, len, produced } => format!(
            "collapse at {} (block {}..{} into {} factors)",
            pos,
            start,
            start + len,
            produced
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_binding_and_command() {
        let script = parse(
            "object O = brick(r=1,d=0,x=0/2,m=0)[0]^1\n\
             cob V = ends[(1, O), (3, O)]\n\
             charge V\n",
        )
        .unwrap();
        assert_eq!(script.statements.len(), 3);
        match &script.statements[0] {
            Stmt::BindObject { name, value } => {
                assert_eq!(name, "O");
                assert_eq!(value.len(), 1);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn undefined_name_is_reported_with_position() {
        let script = parse("hn V kappa=4\n").unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 1);
        assert!(out.stderr[0].contains("undefined name `V`"));
        assert!(out.stderr[0].contains("1:"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("object = brick(r=1,d=0,x=0,m=0)\n").unwrap_err();
        match err {
            ScriptError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert!(col >= 8);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn charge_of_two_ended_cobordism() {
        let script = parse(
            "object O = brick(r=1,d=0,x=0/2,m=0)[0]^1\n\
             cob V = ends[(1, O), (3, O)]\n\
             charge V\n",
        )
        .unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 0);
        assert_eq!(out.stdout, vec!["charge V = {\"re\": \"0\", \"im\": \"1\"}"]);
    }

    #[test]
    fn charge_of_endless_at_height_one_balanced_cob() {
        // upper ends with cancelling classes: the charge is exactly zero
        let script = parse(
            "object O = brick(r=1,d=0,x=0/2,m=0)[0]^1\n\
             object Oshift = brick(r=1,d=0,x=0/2,m=0)[1]^1\n\
             cob W = ends[(2, O), (5, Oshift)]\n\
             charge W\n",
        )
        .unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 0);
        assert_eq!(out.stdout, vec!["charge W = {\"re\": \"0\", \"im\": \"0\"}"]);
    }

    #[test]
    fn hn_command_reports_descending_factors() {
        let script = parse(
            "object O = brick(r=1,d=0,x=0/2,m=0)[0]^1\n\
             object K = brick(r=0,d=1,x=0/2,m=0)[0]^1\n\
             cob V = ends[(1, O), (2, K), (4, O)]\n\
             hn V kappa=4\n",
        )
        .unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 0, "stderr: {:?}", out.stderr);
        assert!(out.stdout[0].starts_with("hn V kappa=4:"));
        assert!(out.stdout.len() >= 3);
    }

    #[test]
    fn k0_invariants_modulus_two() {
        let script = parse("k0 modulus=2 bound=4\n").unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 0);
        assert!(
            out.stdout[0].ends_with("invariants=[0,0,2,2]"),
            "got {}",
            out.stdout[0]
        );
    }

    #[test]
    fn roundtrip_canonical_script() {
        let text = "object O = brick(r=1,d=0,x=0,m=0)[0]^1\n\
                    cob V = ends[(1, O@g(0; 1, 0)), (3, O@g(0; 1, 0))]\n\
                    cone C = cone(lift(3, O)[-1] -> 0 ; tags=[zero])\n\
                    hn V kappa=4\n";
        let script = parse(text).unwrap();
        let printed = print_script(&script);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(script, reparsed);
        assert_eq!(print_script(&reparsed), printed);
    }

    #[test]
    fn deterministic_output() {
        let text = "axioms kappa=4 seed=3 generators=20 specs=5\n";
        let script = parse(text).unwrap();
        let a = run(&script, &RunOptions::default());
        let b = run(&script, &RunOptions::default());
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.failures, 0, "stderr: {:?}", a.stderr);
    }

    #[test]
    fn cone_binding_normalizes() {
        let script = parse(
            "object O = brick(r=1,d=0,x=0,m=0)[0]^1\n\
             cone C = cone(lift(2, O)[-1] -> lift(3, O)[-1] -> 0 ; tags=[zero, zero])\n\
             hn C kappa=4\n\
             lift C\n",
        )
        .unwrap();
        let out = run(&script, &RunOptions::default());
        assert_eq!(out.failures, 0, "stderr: {:?}", out.stderr);
        assert!(out.stdout[0].contains("2 factors"));
        assert!(out.stdout.iter().any(|l| l.starts_with("lift C = cone(")));
    }
}
