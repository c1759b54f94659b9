//! Recursive-descent parser producing span-annotated raw items. Name resolution happens
//! afterwards in `lower`, so sections may appear in any order.

use std::collections::BTreeMap;

use super::lexer::{Tok, Token};
use super::{DslError, SourceSpan};
use crate::manager::{CmpOp, CommArg, Event, Guard, TargetSelector};

pub(crate) type Name = (String, SourceSpan);

#[derive(Clone, Debug)]
pub(crate) enum GraphStmt {
    Nodes(Vec<Name>),
    Edge {
        name: Option<Name>,
        label: Name,
        args: Vec<Name>,
    },
}

#[derive(Clone, Debug)]
pub(crate) enum RawCondKind {
    Idle,
    Action {
        name: String,
        output: bool,
        args: Vec<Name>,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct RawCond {
    pub index: usize,
    pub kind: RawCondKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub(crate) struct RawProduction {
    pub name: Name,
    pub label: Name,
    pub formals: Vec<Name>,
    pub fresh: Vec<Name>,
    pub conds: Vec<RawCond>,
    pub rhs: Vec<GraphStmt>,
}

#[derive(Clone, Debug)]
pub(crate) enum RawUse {
    Library(Name),
    Emit {
        action: Name,
        args: Vec<Name>,
        alias: Option<Name>,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct RawRule {
    pub event: String,
    pub guard: Guard,
    pub op: Name,
    pub target: TargetSelector,
    pub args: Vec<CommArg>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub(crate) enum RawStep {
    Inject(Event),
    Apply(usize),
    AssertCount { label: String, op: CmpOp, value: u64 },
    AssertIso(Vec<GraphStmt>),
}

#[derive(Clone, Debug)]
pub(crate) enum Item {
    Labels(Vec<(Name, usize)>),
    Graph(Vec<GraphStmt>),
    Production(RawProduction),
    Use(Vec<RawUse>),
    Rules(Vec<RawRule>),
    Scenario(Vec<(RawStep, SourceSpan)>),
}

const TOP_LEVEL: &[&str] = &["labels", "graph", "production", "use", "rule", "scenario"];
const MAX_GUARD_DEPTH: usize = 64;

type PResult<T> = Result<T, ()>;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    pub errors: Vec<DslError>,
    guard_depth: usize,
}

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            errors: Vec::new(),
            guard_depth: 0,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.peek().span
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("number {s}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let found = Self::describe(&self.peek().tok);
        let span = self.span();
        self.errors
            .push(DslError::new("SYNTAX", format!("expected {expected}, found {found}"), span));
        Err(())
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.at_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<SourceSpan> {
        if self.at_sym(sym) {
            Ok(self.bump().span)
        } else {
            self.fail(&format!("`{sym}`"))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            self.fail(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => self.fail("an identifier"),
        }
    }

    fn int(&mut self) -> PResult<(u64, SourceSpan)> {
        match &self.peek().tok {
            Tok::Int(s) => {
                let s = s.clone();
                let span = self.bump().span;
                match s.parse::<u64>() {
                    Ok(v) => Ok((v, span)),
                    Err(_) => {
                        self.errors
                            .push(DslError::new("INT_OVERFLOW", format!("{s} does not fit in 64 bits"), span));
                        Err(())
                    }
                }
            }
            _ => self.fail("a number"),
        }
    }

    fn small_int(&mut self) -> PResult<(usize, SourceSpan)> {
        let (v, span) = self.int()?;
        usize::try_from(v).map(|v| (v, span)).map_err(|_| {
            self.errors
                .push(DslError::new("INT_OVERFLOW", format!("{v} is too large"), span));
        })
    }

    /// `ident` or `ident#k` (generated node names).
    fn name(&mut self) -> PResult<Name> {
        let (mut text, span) = self.ident()?;
        if self.at_sym("#") && matches!(self.peek_at(1), Tok::Int(_)) {
            self.bump();
            let (k, _) = self.int()?;
            text = format!("{text}#{k}");
        }
        Ok((text, span))
    }

    fn list<T>(&mut self, close: &str, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if self.at_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    /// Skips to just past the next `;`, or to the `}` closing the current block.
    fn recover_statement(&mut self) {
        let mut depth = 0usize;
        while !self.at_eof() {
            if self.at_sym("{") {
                depth += 1;
            } else if self.at_sym("}") {
                if depth == 0 {
                    return;
                }
                depth -= 1;
            } else if self.at_sym(";") && depth == 0 {
                self.bump();
                return;
            }
            self.bump();
        }
    }

    fn recover_item(&mut self) {
        self.bump();
        while !self.at_eof() {
            if let Tok::Ident(s) = &self.peek().tok {
                if TOP_LEVEL.contains(&s.as_str()) {
                    return;
                }
            }
            self.bump();
        }
    }

    fn block<T>(&mut self, mut stmt: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.at_sym("}") && !self.at_eof() {
            match stmt(self) {
                Ok(s) => out.push(s),
                Err(()) => self.recover_statement(),
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    pub fn items(&mut self) -> Vec<Item> {
        let mut items = Vec::new();
        while !self.at_eof() {
            match self.item() {
                Ok(item) => items.push(item),
                Err(()) => self.recover_item(),
            }
        }
        items
    }

    fn item(&mut self) -> PResult<Item> {
        if self.eat_kw("labels") {
            let decls = self.block(|p| {
                let name = p.ident()?;
                p.expect_sym("/")?;
                let (arity, _) = p.small_int()?;
                p.expect_sym(";")?;
                Ok((name, arity))
            })?;
            Ok(Item::Labels(decls))
        } else if self.eat_kw("graph") {
            Ok(Item::Graph(self.graph_body()?))
        } else if self.at_kw("production") {
            Ok(Item::Production(self.production()?))
        } else if self.eat_kw("use") {
            let uses = self.list(";", Self::use_item)?;
            self.expect_sym(";")?;
            Ok(Item::Use(uses))
        } else if self.eat_kw("rule") {
            let rules = self.block(Self::rule)?;
            Ok(Item::Rules(rules))
        } else if self.eat_kw("scenario") {
            let steps = self.block(|p| {
                let span = p.span();
                p.step().map(|s| (s, span))
            })?;
            Ok(Item::Scenario(steps))
        } else {
            self.fail("a section (labels, graph, production, use, rule, scenario)")
        }
    }

    fn graph_body(&mut self) -> PResult<Vec<GraphStmt>> {
        self.block(Self::graph_stmt)
    }

    fn graph_stmt(&mut self) -> PResult<GraphStmt> {
        if self.eat_kw("node") {
            let names = self.list(";", Self::name)?;
            self.expect_sym(";")?;
            Ok(GraphStmt::Nodes(names))
        } else if self.eat_kw("edge") {
            let first = self.ident()?;
            let (name, label) = if self.eat_sym(":") {
                (Some(first), self.ident()?)
            } else {
                (None, first)
            };
            self.expect_sym("(")?;
            let args = self.list(")", Self::name)?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            Ok(GraphStmt::Edge { name, label, args })
        } else {
            self.fail("`node` or `edge`")
        }
    }

    fn production(&mut self) -> PResult<RawProduction> {
        self.expect_kw("production")?;
        let name = self.ident()?;
        self.expect_kw("for")?;
        let label = self.ident()?;
        self.expect_sym("(")?;
        let formals = self.list(")", Self::ident)?;
        self.expect_sym(")")?;

        let mut prod = RawProduction {
            name,
            label,
            formals,
            fresh: Vec::new(),
            conds: Vec::new(),
            rhs: Vec::new(),
        };
        enum Part {
            Fresh(Vec<Name>),
            Cond(RawCond),
            Rhs(Vec<GraphStmt>),
        }
        let parts = self.block(|p| {
            if p.eat_kw("new") {
                let names = p.list(";", Self::ident)?;
                p.expect_sym(";")?;
                Ok(Part::Fresh(names))
            } else if p.at_kw("on") {
                let span = p.bump().span;
                let (index, _) = p.small_int()?;
                p.expect_sym(":")?;
                let kind = p.condition()?;
                p.expect_sym(";")?;
                Ok(Part::Cond(RawCond { index, kind, span }))
            } else if p.eat_kw("rhs") {
                Ok(Part::Rhs(p.graph_body()?))
            } else {
                p.fail("`new`, `on` or `rhs`")
            }
        })?;
        for part in parts {
            match part {
                Part::Fresh(names) => prod.fresh.extend(names),
                Part::Cond(c) => prod.conds.push(c),
                Part::Rhs(stmts) => prod.rhs.extend(stmts),
            }
        }
        Ok(prod)
    }

    fn condition(&mut self) -> PResult<RawCondKind> {
        if self.eat_kw("idle") {
            return Ok(RawCondKind::Idle);
        }
        let (mut name, _) = self.ident()?;
        if self.eat_sym("[") {
            let (role, _) = self.ident()?;
            self.expect_sym("]")?;
            name = format!("{name}_{role}");
        }
        let output = self.eat_sym("!");
        self.expect_sym("(")?;
        let args = self.list(")", Self::ident)?;
        self.expect_sym(")")?;
        Ok(RawCondKind::Action { name, output, args })
    }

    fn use_item(&mut self) -> PResult<RawUse> {
        if !self.at_kw("am_emit") {
            return Ok(RawUse::Library(self.ident()?));
        }
        self.bump();
        self.expect_sym("(")?;
        let action = self.ident()?;
        let mut args = Vec::new();
        if self.eat_sym(";") {
            args = self.list(")", Self::ident)?;
        }
        self.expect_sym(")")?;
        let alias = if self.eat_kw("as") { Some(self.ident()?) } else { None };
        Ok(RawUse::Emit { action, args, alias })
    }

    fn rule(&mut self) -> PResult<RawRule> {
        let span = self.expect_kw("when")?;
        let (event, _) = self.ident()?;
        let guard = if self.eat_kw("if") { self.guard()? } else { Guard::True };
        self.expect_kw("then")?;
        let op = self.ident()?;
        self.expect_sym("(")?;
        self.expect_kw("target")?;
        let (label_or_name, _) = self.ident()?;
        let target = if self.eat_sym("#") {
            let (index, _) = self.small_int()?;
            TargetSelector::Ordinal { label: label_or_name, index }
        } else {
            TargetSelector::Named(label_or_name)
        };
        let mut args = Vec::new();
        if self.eat_sym(";") {
            args = self.list(")", Self::comm_arg)?;
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(RawRule {
            event,
            guard,
            op,
            target,
            args,
            span,
        })
    }

    fn comm_arg(&mut self) -> PResult<CommArg> {
        if self.eat_sym("$") {
            return Ok(CommArg::Payload(self.ident()?.0));
        }
        let (name, _) = self.name()?;
        Ok(match name.as_str() {
            "new" => CommArg::Fresh,
            "port" => CommArg::Port,
            "loc" => CommArg::Location,
            _ => CommArg::Node(name),
        })
    }

    fn guard(&mut self) -> PResult<Guard> {
        self.guard_depth += 1;
        let result = if self.guard_depth > MAX_GUARD_DEPTH {
            let span = self.span();
            self.errors
                .push(DslError::new("NESTING_TOO_DEEP", "guard nests too deeply", span));
            Err(())
        } else {
            self.guard_or()
        };
        self.guard_depth -= 1;
        result
    }

    fn guard_or(&mut self) -> PResult<Guard> {
        let mut lhs = self.guard_and()?;
        while self.eat_sym("||") {
            let rhs = self.guard_and()?;
            lhs = Guard::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_and(&mut self) -> PResult<Guard> {
        let mut lhs = self.guard_unary()?;
        while self.eat_sym("&&") {
            let rhs = self.guard_unary()?;
            lhs = Guard::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self) -> PResult<Guard> {
        if self.eat_sym("!") {
            self.guard_depth += 1;
            let inner = if self.guard_depth > MAX_GUARD_DEPTH {
                let span = self.span();
                self.errors
                    .push(DslError::new("NESTING_TOO_DEEP", "guard nests too deeply", span));
                Err(())
            } else {
                self.guard_unary()
            };
            self.guard_depth -= 1;
            return Ok(Guard::Not(Box::new(inner?)));
        }
        if self.eat_sym("(") {
            let inner = self.guard()?;
            self.expect_sym(")")?;
            return Ok(inner);
        }
        if self.eat_kw("true") {
            return Ok(Guard::True);
        }
        if self.eat_kw("count") {
            let (label, op, value) = self.count_cmp()?;
            return Ok(Guard::Count { label, op, value });
        }
        if self.eat_kw("exists") {
            self.expect_sym("(")?;
            let (label, _) = self.ident()?;
            self.expect_sym(",")?;
            let (tentacle, _) = self.small_int()?;
            self.expect_sym(",")?;
            let (node, _) = self.name()?;
            self.expect_sym(")")?;
            return Ok(Guard::Exists { label, tentacle, node });
        }
        self.fail("a guard (count, exists, true, `!` or `(`)")
    }

    /// `(label) <op> <int>`, after `count`.
    fn count_cmp(&mut self) -> PResult<(String, CmpOp, u64)> {
        self.expect_sym("(")?;
        let (label, _) = self.ident()?;
        self.expect_sym(")")?;
        let op = match &self.peek().tok {
            Tok::Sym(s) => CmpOp::from_symbol(s),
            _ => None,
        };
        let Some(op) = op else {
            return self.fail("a comparison operator");
        };
        self.bump();
        let (value, _) = self.int()?;
        Ok((label, op, value))
    }

    fn step(&mut self) -> PResult<RawStep> {
        if self.eat_kw("inject") {
            let (name, _) = self.ident()?;
            let mut payload = BTreeMap::new();
            if self.eat_sym("(") {
                let pairs = self.list(")", |p| {
                    let (k, _) = p.ident()?;
                    p.expect_sym("=")?;
                    let (v, _) = p.name()?;
                    Ok((k, v))
                })?;
                self.expect_sym(")")?;
                payload.extend(pairs);
            }
            self.expect_sym(";")?;
            Ok(RawStep::Inject(Event { name, payload }))
        } else if self.eat_kw("apply") {
            let (index, _) = self.small_int()?;
            self.expect_sym(";")?;
            Ok(RawStep::Apply(index))
        } else if self.eat_kw("assert") {
            if self.eat_kw("count") {
                let (label, op, value) = self.count_cmp()?;
                self.expect_sym(";")?;
                Ok(RawStep::AssertCount { label, op, value })
            } else if self.eat_kw("iso") {
                Ok(RawStep::AssertIso(self.graph_body()?))
            } else {
                self.fail("`count` or `iso`")
            }
        } else {
            self.fail("`inject`, `apply` or `assert`")
        }
    }
}
