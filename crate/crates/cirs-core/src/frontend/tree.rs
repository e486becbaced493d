//! Syntax tree: a flattened arena built from the grammar parser's AST.
//!
//! Node kinds form a frozen vocabulary ([`AST_KINDS`]): statement and
//! expression constructs plus the auxiliary clause nodes (comprehension
//! clauses, exception handlers, argument lists). Helper tags of the raw
//! grammar (expression contexts, operator atoms) are not nodes here;
//! literal constants are named by their value class (`Number`, `String`,
//! `Boolean`, ...) so the vocabulary stays stable across grammar revisions.

use rustpython_parser::ast::Ranged;
use rustpython_parser::{ast, Parse};
use serde::Serialize;

use super::LineIndex;
use crate::error::{Error, Result};

/// The frozen node-kind vocabulary, in documentation order.
pub const AST_KINDS: &[&str] = &[
    // module root
    "Module",
    // statements
    "FunctionDef",
    "AsyncFunctionDef",
    "ClassDef",
    "Return",
    "Delete",
    "Assign",
    "TypeAlias",
    "AugAssign",
    "AnnAssign",
    "For",
    "AsyncFor",
    "While",
    "If",
    "With",
    "AsyncWith",
    "Match",
    "Raise",
    "Try",
    "TryStar",
    "Assert",
    "Import",
    "ImportFrom",
    "Global",
    "Nonlocal",
    "Expr",
    "Pass",
    "Break",
    "Continue",
    // expressions
    "BoolOp",
    "NamedExpr",
    "BinOp",
    "UnaryOp",
    "Lambda",
    "IfExp",
    "Dict",
    "Set",
    "ListComp",
    "SetComp",
    "DictComp",
    "GeneratorExp",
    "Await",
    "Yield",
    "YieldFrom",
    "Compare",
    "Call",
    "FormattedValue",
    "JoinedStr",
    "Attribute",
    "Subscript",
    "Starred",
    "Name",
    "List",
    "Tuple",
    "Slice",
    // literal constants, by value class
    "Number",
    "String",
    "Bytes",
    "Boolean",
    "None",
    "Ellipsis",
    // auxiliary clauses
    "Comprehension",
    "ExceptHandler",
    "Arguments",
    "Arg",
    "Keyword",
    "Alias",
    "WithItem",
    "MatchCase",
    // match patterns
    "MatchValue",
    "MatchSingleton",
    "MatchSequence",
    "MatchMapping",
    "MatchClass",
    "MatchStar",
    "MatchAs",
    "MatchOr",
    // type parameters
    "TypeVar",
    "ParamSpec",
    "TypeVarTuple",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone)]
struct Node {
    kind: &'static str,
    children: Vec<NodeId>,
    span: (u32, u32),
}

/// Arena-backed syntax tree. The root is always node 0 with kind `Module`.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    nodes: Vec<Node>,
}

impl SyntaxTree {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind(&self, id: NodeId) -> &'static str {
        self.nodes[id.0 as usize].kind
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0 as usize].children
    }

    pub fn span(&self, id: NodeId) -> (usize, usize) {
        let (s, e) = self.nodes[id.0 as usize].span;
        (s as usize, e as usize)
    }

    /// Iterate all node ids in construction (pre-order) order.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn distinct_kinds(&self) -> usize {
        let mut kinds: Vec<&str> = self.nodes.iter().map(|n| n.kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        kinds.len()
    }

    /// Number of nodes on the longest root-to-leaf path; a lone root is 1.
    pub fn depth(&self) -> usize {
        let mut stack = vec![(self.root(), 1usize)];
        let mut max = 0;
        while let Some((id, d)) = stack.pop() {
            max = max.max(d);
            for &c in self.children(id) {
                stack.push((c, d + 1));
            }
        }
        max
    }
}

pub(super) fn parse_module(source: &str) -> Result<ast::ModModule> {
    let index = LineIndex::new(source);
    ast::ModModule::parse(source, "<cirs>").map_err(|e| {
        let (line, column) = index.locate(e.offset.to_usize());
        Error::Parse {
            line,
            column,
            message: e.error.to_string(),
        }
    })
}

/// Parses valid source into a [`SyntaxTree`]; malformed input is an error,
/// never a partial tree.
pub fn parse_source(source: &str) -> Result<SyntaxTree> {
    if source.trim().is_empty() {
        return Err(Error::EmptySource);
    }
    let module = parse_module(source)?;
    let mut builder = Builder { nodes: Vec::new() };
    let whole = (0u32, source.len() as u32);
    let root = builder.push("Module", whole);
    for stmt in &module.body {
        let child = builder.stmt(stmt);
        builder.attach(root, child);
    }
    Ok(SyntaxTree {
        nodes: builder.nodes,
    })
}

struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, kind: &'static str, span: (u32, u32)) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            kind,
            children: Vec::new(),
            span,
        });
        id
    }

    fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[parent.0 as usize].children.push(child);
    }

    fn span_of(range: &ast::text_size::TextRange) -> (u32, u32) {
        (range.start().to_u32(), range.end().to_u32())
    }

    fn stmt(&mut self, stmt: &ast::Stmt) -> NodeId {
        use ast::Stmt::*;
        match stmt {
            FunctionDef(s) => {
                let id = self.push("FunctionDef", Self::span_of(&s.range));
                self.exprs(id, &s.decorator_list);
                self.type_params(id, &s.type_params);
                self.arguments(id, &s.args);
                if let Some(r) = &s.returns {
                    let c = self.expr(r);
                    self.attach(id, c);
                }
                self.stmts(id, &s.body);
                id
            }
            AsyncFunctionDef(s) => {
                let id = self.push("AsyncFunctionDef", Self::span_of(&s.range));
                self.exprs(id, &s.decorator_list);
                self.type_params(id, &s.type_params);
                self.arguments(id, &s.args);
                if let Some(r) = &s.returns {
                    let c = self.expr(r);
                    self.attach(id, c);
                }
                self.stmts(id, &s.body);
                id
            }
            ClassDef(s) => {
                let id = self.push("ClassDef", Self::span_of(&s.range));
                self.exprs(id, &s.decorator_list);
                self.type_params(id, &s.type_params);
                self.exprs(id, &s.bases);
                for kw in &s.keywords {
                    let c = self.keyword(kw);
                    self.attach(id, c);
                }
                self.stmts(id, &s.body);
                id
            }
            Return(s) => {
                let id = self.push("Return", Self::span_of(&s.range));
                if let Some(v) = &s.value {
                    let c = self.expr(v);
                    self.attach(id, c);
                }
                id
            }
            Delete(s) => {
                let id = self.push("Delete", Self::span_of(&s.range));
                self.exprs(id, &s.targets);
                id
            }
            Assign(s) => {
                let id = self.push("Assign", Self::span_of(&s.range));
                self.exprs(id, &s.targets);
                let v = self.expr(&s.value);
                self.attach(id, v);
                id
            }
            TypeAlias(s) => {
                let id = self.push("TypeAlias", Self::span_of(&s.range));
                let n = self.expr(&s.name);
                self.attach(id, n);
                self.type_params(id, &s.type_params);
                let v = self.expr(&s.value);
                self.attach(id, v);
                id
            }
            AugAssign(s) => {
                let id = self.push("AugAssign", Self::span_of(&s.range));
                let t = self.expr(&s.target);
                self.attach(id, t);
                let v = self.expr(&s.value);
                self.attach(id, v);
                id
            }
            AnnAssign(s) => {
                let id = self.push("AnnAssign", Self::span_of(&s.range));
                let t = self.expr(&s.target);
                self.attach(id, t);
                let a = self.expr(&s.annotation);
                self.attach(id, a);
                if let Some(v) = &s.value {
                    let c = self.expr(v);
                    self.attach(id, c);
                }
                id
            }
            For(s) => {
                let id = self.push("For", Self::span_of(&s.range));
                let t = self.expr(&s.target);
                self.attach(id, t);
                let i = self.expr(&s.iter);
                self.attach(id, i);
                self.stmts(id, &s.body);
                self.stmts(id, &s.orelse);
                id
            }
            AsyncFor(s) => {
                let id = self.push("AsyncFor", Self::span_of(&s.range));
                let t = self.expr(&s.target);
                self.attach(id, t);
                let i = self.expr(&s.iter);
                self.attach(id, i);
                self.stmts(id, &s.body);
                self.stmts(id, &s.orelse);
                id
            }
            While(s) => {
                let id = self.push("While", Self::span_of(&s.range));
                let t = self.expr(&s.test);
                self.attach(id, t);
                self.stmts(id, &s.body);
                self.stmts(id, &s.orelse);
                id
            }
            If(s) => {
                let id = self.push("If", Self::span_of(&s.range));
                let t = self.expr(&s.test);
                self.attach(id, t);
                self.stmts(id, &s.body);
                self.stmts(id, &s.orelse);
                id
            }
            With(s) => {
                let id = self.push("With", Self::span_of(&s.range));
                for item in &s.items {
                    let c = self.with_item(item);
                    self.attach(id, c);
                }
                self.stmts(id, &s.body);
                id
            }
            AsyncWith(s) => {
                let id = self.push("AsyncWith", Self::span_of(&s.range));
                for item in &s.items {
                    let c = self.with_item(item);
                    self.attach(id, c);
                }
                self.stmts(id, &s.body);
                id
            }
            Match(s) => {
                let id = self.push("Match", Self::span_of(&s.range));
                let subj = self.expr(&s.subject);
                self.attach(id, subj);
                for case in &s.cases {
                    let c = self.match_case(case);
                    self.attach(id, c);
                }
                id
            }
            Raise(s) => {
                let id = self.push("Raise", Self::span_of(&s.range));
                if let Some(e) = &s.exc {
                    let c = self.expr(e);
                    self.attach(id, c);
                }
                if let Some(e) = &s.cause {
                    let c = self.expr(e);
                    self.attach(id, c);
                }
                id
            }
            Try(s) => {
                let id = self.push("Try", Self::span_of(&s.range));
                self.stmts(id, &s.body);
                for h in &s.handlers {
                    let c = self.except_handler(h);
                    self.attach(id, c);
                }
                self.stmts(id, &s.orelse);
                self.stmts(id, &s.finalbody);
                id
            }
            TryStar(s) => {
                let id = self.push("TryStar", Self::span_of(&s.range));
                self.stmts(id, &s.body);
                for h in &s.handlers {
                    let c = self.except_handler(h);
                    self.attach(id, c);
                }
                self.stmts(id, &s.orelse);
                self.stmts(id, &s.finalbody);
                id
            }
            Assert(s) => {
                let id = self.push("Assert", Self::span_of(&s.range));
                let t = self.expr(&s.test);
                self.attach(id, t);
                if let Some(m) = &s.msg {
                    let c = self.expr(m);
                    self.attach(id, c);
                }
                id
            }
            Import(s) => {
                let id = self.push("Import", Self::span_of(&s.range));
                for a in &s.names {
                    let c = self.push("Alias", Self::span_of(&a.range));
                    self.attach(id, c);
                }
                id
            }
            ImportFrom(s) => {
                let id = self.push("ImportFrom", Self::span_of(&s.range));
                for a in &s.names {
                    let c = self.push("Alias", Self::span_of(&a.range));
                    self.attach(id, c);
                }
                id
            }
            Global(s) => self.push("Global", Self::span_of(&s.range)),
            Nonlocal(s) => self.push("Nonlocal", Self::span_of(&s.range)),
            Expr(s) => {
                let id = self.push("Expr", Self::span_of(&s.range));
                let v = self.expr(&s.value);
                self.attach(id, v);
                id
            }
            Pass(s) => self.push("Pass", Self::span_of(&s.range)),
            Break(s) => self.push("Break", Self::span_of(&s.range)),
            Continue(s) => self.push("Continue", Self::span_of(&s.range)),
        }
    }

    fn stmts(&mut self, parent: NodeId, stmts: &[ast::Stmt]) {
        for s in stmts {
            let c = self.stmt(s);
            self.attach(parent, c);
        }
    }

    fn exprs(&mut self, parent: NodeId, exprs: &[ast::Expr]) {
        for e in exprs {
            let c = self.expr(e);
            self.attach(parent, c);
        }
    }

    fn expr(&mut self, expr: &ast::Expr) -> NodeId {
        use ast::Expr::*;
        match expr {
            BoolOp(e) => {
                let id = self.push("BoolOp", Self::span_of(&e.range));
                self.exprs(id, &e.values);
                id
            }
            NamedExpr(e) => {
                let id = self.push("NamedExpr", Self::span_of(&e.range));
                let t = self.expr(&e.target);
                self.attach(id, t);
                let v = self.expr(&e.value);
                self.attach(id, v);
                id
            }
            BinOp(e) => {
                let id = self.push("BinOp", Self::span_of(&e.range));
                let l = self.expr(&e.left);
                self.attach(id, l);
                let r = self.expr(&e.right);
                self.attach(id, r);
                id
            }
            UnaryOp(e) => {
                let id = self.push("UnaryOp", Self::span_of(&e.range));
                let o = self.expr(&e.operand);
                self.attach(id, o);
                id
            }
            Lambda(e) => {
                let id = self.push("Lambda", Self::span_of(&e.range));
                self.arguments(id, &e.args);
                let b = self.expr(&e.body);
                self.attach(id, b);
                id
            }
            IfExp(e) => {
                let id = self.push("IfExp", Self::span_of(&e.range));
                let t = self.expr(&e.test);
                self.attach(id, t);
                let b = self.expr(&e.body);
                self.attach(id, b);
                let o = self.expr(&e.orelse);
                self.attach(id, o);
                id
            }
            Dict(e) => {
                let id = self.push("Dict", Self::span_of(&e.range));
                for k in e.keys.iter().flatten() {
                    let c = self.expr(k);
                    self.attach(id, c);
                }
                self.exprs(id, &e.values);
                id
            }
            Set(e) => {
                let id = self.push("Set", Self::span_of(&e.range));
                self.exprs(id, &e.elts);
                id
            }
            ListComp(e) => {
                let id = self.push("ListComp", Self::span_of(&e.range));
                let elt = self.expr(&e.elt);
                self.attach(id, elt);
                self.comprehensions(id, &e.generators);
                id
            }
            SetComp(e) => {
                let id = self.push("SetComp", Self::span_of(&e.range));
                let elt = self.expr(&e.elt);
                self.attach(id, elt);
                self.comprehensions(id, &e.generators);
                id
            }
            DictComp(e) => {
                let id = self.push("DictComp", Self::span_of(&e.range));
                let k = self.expr(&e.key);
                self.attach(id, k);
                let v = self.expr(&e.value);
                self.attach(id, v);
                self.comprehensions(id, &e.generators);
                id
            }
            GeneratorExp(e) => {
                let id = self.push("GeneratorExp", Self::span_of(&e.range));
                let elt = self.expr(&e.elt);
                self.attach(id, elt);
                self.comprehensions(id, &e.generators);
                id
            }
            Await(e) => {
                let id = self.push("Await", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                id
            }
            Yield(e) => {
                let id = self.push("Yield", Self::span_of(&e.range));
                if let Some(v) = &e.value {
                    let c = self.expr(v);
                    self.attach(id, c);
                }
                id
            }
            YieldFrom(e) => {
                let id = self.push("YieldFrom", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                id
            }
            Compare(e) => {
                let id = self.push("Compare", Self::span_of(&e.range));
                let l = self.expr(&e.left);
                self.attach(id, l);
                self.exprs(id, &e.comparators);
                id
            }
            Call(e) => {
                let id = self.push("Call", Self::span_of(&e.range));
                let f = self.expr(&e.func);
                self.attach(id, f);
                self.exprs(id, &e.args);
                for kw in &e.keywords {
                    let c = self.keyword(kw);
                    self.attach(id, c);
                }
                id
            }
            FormattedValue(e) => {
                let id = self.push("FormattedValue", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                if let Some(spec) = &e.format_spec {
                    let c = self.expr(spec);
                    self.attach(id, c);
                }
                id
            }
            JoinedStr(e) => {
                let id = self.push("JoinedStr", Self::span_of(&e.range));
                self.exprs(id, &e.values);
                id
            }
            Constant(e) => {
                let span = Self::span_of(&e.range);
                self.constant(&e.value, span)
            }
            Attribute(e) => {
                let id = self.push("Attribute", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                id
            }
            Subscript(e) => {
                let id = self.push("Subscript", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                let s = self.expr(&e.slice);
                self.attach(id, s);
                id
            }
            Starred(e) => {
                let id = self.push("Starred", Self::span_of(&e.range));
                let v = self.expr(&e.value);
                self.attach(id, v);
                id
            }
            Name(e) => self.push("Name", Self::span_of(&e.range)),
            List(e) => {
                let id = self.push("List", Self::span_of(&e.range));
                self.exprs(id, &e.elts);
                id
            }
            Tuple(e) => {
                let id = self.push("Tuple", Self::span_of(&e.range));
                self.exprs(id, &e.elts);
                id
            }
            Slice(e) => {
                let id = self.push("Slice", Self::span_of(&e.range));
                if let Some(l) = &e.lower {
                    let c = self.expr(l);
                    self.attach(id, c);
                }
                if let Some(u) = &e.upper {
                    let c = self.expr(u);
                    self.attach(id, c);
                }
                if let Some(st) = &e.step {
                    let c = self.expr(st);
                    self.attach(id, c);
                }
                id
            }
        }
    }

    fn constant(&mut self, value: &ast::Constant, span: (u32, u32)) -> NodeId {
        use ast::Constant::*;
        match value {
            None => self.push("None", span),
            Bool(_) => self.push("Boolean", span),
            Str(_) => self.push("String", span),
            Bytes(_) => self.push("Bytes", span),
            Int(_) | Float(_) | Complex { .. } => self.push("Number", span),
            Ellipsis => self.push("Ellipsis", span),
            Tuple(items) => {
                let id = self.push("Tuple", span);
                for item in items {
                    let c = self.constant(item, span);
                    self.attach(id, c);
                }
                id
            }
        }
    }

    fn comprehensions(&mut self, parent: NodeId, gens: &[ast::Comprehension]) {
        for g in gens {
            // target, iter, then each filter `if`; clause weight for the
            // cyclomatic rule table is derived as children - 1.
            let parent_span = self.nodes[parent.0 as usize].span;
            let id = self.push("Comprehension", parent_span);
            self.attach(parent, id);
            let t = self.expr(&g.target);
            self.attach(id, t);
            let i = self.expr(&g.iter);
            self.attach(id, i);
            self.exprs(id, &g.ifs);
        }
    }

    fn except_handler(&mut self, handler: &ast::ExceptHandler) -> NodeId {
        let ast::ExceptHandler::ExceptHandler(h) = handler;
        let id = self.push("ExceptHandler", Self::span_of(&h.range));
        if let Some(t) = &h.type_ {
            let c = self.expr(t);
            self.attach(id, c);
        }
        self.stmts(id, &h.body);
        id
    }

    fn arguments(&mut self, parent: NodeId, args: &ast::Arguments) {
        let parent_span = self.nodes[parent.0 as usize].span;
        let id = self.push("Arguments", parent_span);
        self.attach(parent, id);
        for a in args.posonlyargs.iter().chain(&args.args) {
            self.arg_with_default(id, a);
        }
        if let Some(v) = &args.vararg {
            self.arg(id, v);
        }
        for a in &args.kwonlyargs {
            self.arg_with_default(id, a);
        }
        if let Some(k) = &args.kwarg {
            self.arg(id, k);
        }
    }

    fn arg_with_default(&mut self, parent: NodeId, a: &ast::ArgWithDefault) {
        self.arg(parent, &a.def);
        if let Some(d) = &a.default {
            let c = self.expr(d);
            self.attach(parent, c);
        }
    }

    fn arg(&mut self, parent: NodeId, a: &ast::Arg) {
        let id = self.push("Arg", Self::span_of(&a.range));
        self.attach(parent, id);
        if let Some(ann) = &a.annotation {
            let c = self.expr(ann);
            self.attach(id, c);
        }
    }

    fn keyword(&mut self, kw: &ast::Keyword) -> NodeId {
        let id = self.push("Keyword", Self::span_of(&kw.range));
        let v = self.expr(&kw.value);
        self.attach(id, v);
        id
    }

    fn with_item(&mut self, item: &ast::WithItem) -> NodeId {
        let span = Self::span_of(&item.context_expr.range());
        let id = self.push("WithItem", span);
        let c = self.expr(&item.context_expr);
        self.attach(id, c);
        if let Some(v) = &item.optional_vars {
            let c = self.expr(v);
            self.attach(id, c);
        }
        id
    }

    fn match_case(&mut self, case: &ast::MatchCase) -> NodeId {
        let span = match case.body.first() {
            Some(s) => Self::span_of(&s.range()),
            Option::None => (0, 0),
        };
        let id = self.push("MatchCase", span);
        let p = self.pattern(&case.pattern);
        self.attach(id, p);
        if let Some(g) = &case.guard {
            let c = self.expr(g);
            self.attach(id, c);
        }
        self.stmts(id, &case.body);
        id
    }

    fn pattern(&mut self, pattern: &ast::Pattern) -> NodeId {
        use ast::Pattern::*;
        match pattern {
            MatchValue(p) => {
                let id = self.push("MatchValue", Self::span_of(&p.range));
                let v = self.expr(&p.value);
                self.attach(id, v);
                id
            }
            MatchSingleton(p) => self.push("MatchSingleton", Self::span_of(&p.range)),
            MatchSequence(p) => {
                let id = self.push("MatchSequence", Self::span_of(&p.range));
                for sub in &p.patterns {
                    let c = self.pattern(sub);
                    self.attach(id, c);
                }
                id
            }
            MatchMapping(p) => {
                let id = self.push("MatchMapping", Self::span_of(&p.range));
                self.exprs(id, &p.keys);
                for sub in &p.patterns {
                    let c = self.pattern(sub);
                    self.attach(id, c);
                }
                id
            }
            MatchClass(p) => {
                let id = self.push("MatchClass", Self::span_of(&p.range));
                let cls = self.expr(&p.cls);
                self.attach(id, cls);
                for sub in p.patterns.iter().chain(&p.kwd_patterns) {
                    let c = self.pattern(sub);
                    self.attach(id, c);
                }
                id
            }
            MatchStar(p) => self.push("MatchStar", Self::span_of(&p.range)),
            MatchAs(p) => {
                let id = self.push("MatchAs", Self::span_of(&p.range));
                if let Some(sub) = &p.pattern {
                    let c = self.pattern(sub);
                    self.attach(id, c);
                }
                id
            }
            MatchOr(p) => {
                let id = self.push("MatchOr", Self::span_of(&p.range));
                for sub in &p.patterns {
                    let c = self.pattern(sub);
                    self.attach(id, c);
                }
                id
            }
        }
    }

    fn type_params(&mut self, parent: NodeId, params: &[ast::TypeParam]) {
        use ast::TypeParam::*;
        for p in params {
            let id = match p {
                TypeVar(t) => {
                    let id = self.push("TypeVar", Self::span_of(&t.range));
                    if let Some(b) = &t.bound {
                        let c = self.expr(b);
                        self.attach(id, c);
                    }
                    id
                }
                ParamSpec(t) => self.push("ParamSpec", Self::span_of(&t.range)),
                TypeVarTuple(t) => self.push("TypeVarTuple", Self::span_of(&t.range)),
            };
            self.attach(parent, id);
        }
    }
}
