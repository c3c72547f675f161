//! Python source to normalized [`SyntaxTree`].
//!
//! Source is parsed with `rustpython-parser` 0.4 (a Python 3.11 grammar plus
//! PEP 695 type parameters) and the resulting AST is normalized to mirror the
//! shape of CPython's `ast` module:
//!
//! * one tree node per grammar node, children in CPython `_fields` order;
//! * list-valued fields contribute their elements directly as children;
//! * absent optional fields contribute nothing;
//! * identifiers, constants and operator/context kinds are folded into the
//!   owning node's label, e.g. `Name:id=a:ctx=Store` or
//!   `Constant:value='Hello World'`;
//! * comments, layout and source positions are dropped.
//!
//! Where flattening alone would make two different programs collide, a marker
//! leaf introduces the ambiguous field: `orelse` and `finalbody` before those
//! statement lists, `returns` before a return annotation, `upper`/`step` inside
//! slices, and `/`, `*`, `**` inside argument lists. Missing dictionary keys
//! (`**mapping` entries) and missing keyword-only defaults become the
//! placeholder leaves `**` and `NoDefault`.

use rustpython_parser::ast::{self, Constant, Expr, Pattern, Stmt};
use rustpython_parser::{parse, Mode};
use thiserror::Error;

use crate::tree::SyntaxTree;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Parses Python source into a normalized syntax tree rooted at `Module`.
pub fn parse_program(source: &str) -> Result<SyntaxTree, ParseError> {
    let module = parse(source, Mode::Module, "<program>").map_err(|err| {
        let offset = usize::from(err.offset).min(source.len());
        let (line, column) = line_column(source, offset);
        ParseError {
            line,
            column,
            message: err.error.to_string(),
        }
    })?;
    let body = match module {
        ast::Mod::Module(m) => m.body,
        ast::Mod::Interactive(m) => m.body,
        ast::Mod::Expression(_) | ast::Mod::FunctionType(_) => {
            unreachable!("Mode::Module yields a module")
        }
    };
    Ok(SyntaxTree::new("Module", stmts(&body)))
}

/// 1-based line and column of a byte offset.
fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset;
    while !source.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[line_start..].chars().count() + 1)
}

struct Label(String);

impl Label {
    fn new(kind: &str) -> Self {
        Self(kind.to_owned())
    }

    fn attr(mut self, key: &str, value: impl AsRef<str>) -> Self {
        self.0.push(':');
        self.0.push_str(key);
        self.0.push('=');
        self.0.push_str(value.as_ref());
        self
    }

    fn opt(self, key: &str, value: Option<&str>) -> Self {
        match value {
            Some(v) => self.attr(key, v),
            None => self,
        }
    }

    fn node(self, children: Vec<SyntaxTree>) -> SyntaxTree {
        SyntaxTree::new(self.0, children)
    }

    fn leaf(self) -> SyntaxTree {
        SyntaxTree::leaf(self.0)
    }
}

fn marker(name: &str) -> SyntaxTree {
    SyntaxTree::leaf(name)
}

fn stmts(body: &[Stmt]) -> Vec<SyntaxTree> {
    body.iter().map(stmt).collect()
}

fn exprs(values: &[Expr]) -> Vec<SyntaxTree> {
    values.iter().map(expr).collect()
}

fn push_orelse(children: &mut Vec<SyntaxTree>, field: &str, body: &[Stmt]) {
    if !body.is_empty() {
        children.push(marker(field));
        children.extend(stmts(body));
    }
}

fn stmt(s: &Stmt) -> SyntaxTree {
    match s {
        Stmt::FunctionDef(f) => function_def(
            "FunctionDef",
            &f.name,
            &f.args,
            &f.body,
            &f.decorator_list,
            f.returns.as_deref(),
            &f.type_params,
        ),
        Stmt::AsyncFunctionDef(f) => function_def(
            "AsyncFunctionDef",
            &f.name,
            &f.args,
            &f.body,
            &f.decorator_list,
            f.returns.as_deref(),
            &f.type_params,
        ),
        Stmt::ClassDef(c) => {
            let mut children = exprs(&c.bases);
            children.extend(c.keywords.iter().map(keyword));
            children.extend(stmts(&c.body));
            children.extend(exprs(&c.decorator_list));
            children.extend(c.type_params.iter().map(type_param));
            Label::new("ClassDef")
                .attr("name", c.name.as_str())
                .node(children)
        }
        Stmt::Return(r) => Label::new("Return").node(r.value.iter().map(|v| expr(v)).collect()),
        Stmt::Delete(d) => Label::new("Delete").node(exprs(&d.targets)),
        Stmt::Assign(a) => {
            let mut children = exprs(&a.targets);
            children.push(expr(&a.value));
            Label::new("Assign").node(children)
        }
        Stmt::TypeAlias(t) => {
            let mut children = vec![expr(&t.name)];
            children.extend(t.type_params.iter().map(type_param));
            children.push(expr(&t.value));
            Label::new("TypeAlias").node(children)
        }
        Stmt::AugAssign(a) => Label::new("AugAssign")
            .attr("op", operator(a.op))
            .node(vec![expr(&a.target), expr(&a.value)]),
        Stmt::AnnAssign(a) => {
            let mut children = vec![expr(&a.target), expr(&a.annotation)];
            children.extend(a.value.iter().map(|v| expr(v)));
            Label::new("AnnAssign")
                .attr("simple", if a.simple { "1" } else { "0" })
                .node(children)
        }
        Stmt::For(f) => for_loop("For", &f.target, &f.iter, &f.body, &f.orelse),
        Stmt::AsyncFor(f) => for_loop("AsyncFor", &f.target, &f.iter, &f.body, &f.orelse),
        Stmt::While(w) => {
            let mut children = vec![expr(&w.test)];
            children.extend(stmts(&w.body));
            push_orelse(&mut children, "orelse", &w.orelse);
            Label::new("While").node(children)
        }
        Stmt::If(i) => {
            let mut children = vec![expr(&i.test)];
            children.extend(stmts(&i.body));
            push_orelse(&mut children, "orelse", &i.orelse);
            Label::new("If").node(children)
        }
        Stmt::With(w) => with("With", &w.items, &w.body),
        Stmt::AsyncWith(w) => with("AsyncWith", &w.items, &w.body),
        Stmt::Match(m) => {
            let mut children = vec![expr(&m.subject)];
            children.extend(m.cases.iter().map(match_case));
            Label::new("Match").node(children)
        }
        Stmt::Raise(r) => {
            let children = r
                .exc
                .iter()
                .chain(r.cause.iter())
                .map(|e| expr(e))
                .collect();
            Label::new("Raise").node(children)
        }
        Stmt::Try(t) => try_stmt("Try", &t.body, &t.handlers, &t.orelse, &t.finalbody),
        Stmt::TryStar(t) => try_stmt("TryStar", &t.body, &t.handlers, &t.orelse, &t.finalbody),
        Stmt::Assert(a) => {
            let mut children = vec![expr(&a.test)];
            children.extend(a.msg.iter().map(|m| expr(m)));
            Label::new("Assert").node(children)
        }
        Stmt::Import(i) => Label::new("Import").node(i.names.iter().map(alias).collect()),
        Stmt::ImportFrom(i) => {
            let level = i.level.map_or(0, |l| l.to_u32());
            Label::new("ImportFrom")
                .opt("module", i.module.as_ref().map(|m| m.as_str()))
                .attr("level", level.to_string())
                .node(i.names.iter().map(alias).collect())
        }
        Stmt::Global(g) => Label::new("Global")
            .attr("names", join_ids(&g.names))
            .leaf(),
        Stmt::Nonlocal(n) => Label::new("Nonlocal")
            .attr("names", join_ids(&n.names))
            .leaf(),
        Stmt::Expr(e) => Label::new("Expr").node(vec![expr(&e.value)]),
        Stmt::Pass(_) => Label::new("Pass").leaf(),
        Stmt::Break(_) => Label::new("Break").leaf(),
        Stmt::Continue(_) => Label::new("Continue").leaf(),
    }
}

fn join_ids(names: &[ast::Identifier]) -> String {
    names
        .iter()
        .map(|n| n.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

fn function_def(
    kind: &str,
    name: &ast::Identifier,
    args: &ast::Arguments,
    body: &[Stmt],
    decorators: &[Expr],
    returns: Option<&Expr>,
    type_params: &[ast::TypeParam],
) -> SyntaxTree {
    let mut children = vec![arguments(args)];
    children.extend(stmts(body));
    children.extend(exprs(decorators));
    if let Some(r) = returns {
        children.push(marker("returns"));
        children.push(expr(r));
    }
    children.extend(type_params.iter().map(type_param));
    Label::new(kind).attr("name", name.as_str()).node(children)
}

fn for_loop(kind: &str, target: &Expr, iter: &Expr, body: &[Stmt], orelse: &[Stmt]) -> SyntaxTree {
    let mut children = vec![expr(target), expr(iter)];
    children.extend(stmts(body));
    push_orelse(&mut children, "orelse", orelse);
    Label::new(kind).node(children)
}

fn with(kind: &str, items: &[ast::WithItem], body: &[Stmt]) -> SyntaxTree {
    let mut children: Vec<SyntaxTree> = items
        .iter()
        .map(|item| {
            let mut c = vec![expr(&item.context_expr)];
            c.extend(item.optional_vars.iter().map(|v| expr(v)));
            Label::new("withitem").node(c)
        })
        .collect();
    children.extend(stmts(body));
    Label::new(kind).node(children)
}

fn try_stmt(
    kind: &str,
    body: &[Stmt],
    handlers: &[ast::ExceptHandler],
    orelse: &[Stmt],
    finalbody: &[Stmt],
) -> SyntaxTree {
    let mut children = stmts(body);
    for handler in handlers {
        let ast::ExceptHandler::ExceptHandler(h) = handler;
        let mut c: Vec<SyntaxTree> = h.type_.iter().map(|t| expr(t)).collect();
        c.extend(stmts(&h.body));
        children.push(
            Label::new("ExceptHandler")
                .opt("name", h.name.as_ref().map(|n| n.as_str()))
                .node(c),
        );
    }
    push_orelse(&mut children, "orelse", orelse);
    push_orelse(&mut children, "finalbody", finalbody);
    Label::new(kind).node(children)
}

fn alias(a: &ast::Alias) -> SyntaxTree {
    Label::new("alias")
        .attr("name", a.name.as_str())
        .opt("asname", a.asname.as_ref().map(|n| n.as_str()))
        .leaf()
}

fn keyword(k: &ast::Keyword) -> SyntaxTree {
    Label::new("keyword")
        .opt("arg", k.arg.as_ref().map(|a| a.as_str()))
        .node(vec![expr(&k.value)])
}

fn arg(a: &ast::Arg) -> SyntaxTree {
    Label::new("arg")
        .attr("arg", a.arg.as_str())
        .node(a.annotation.iter().map(|t| expr(t)).collect())
}

fn arguments(args: &ast::Arguments) -> SyntaxTree {
    let py = args.to_python_arguments();
    let mut children: Vec<SyntaxTree> = py.posonlyargs.iter().map(arg).collect();
    if !py.posonlyargs.is_empty() {
        children.push(marker("/"));
    }
    children.extend(py.args.iter().map(arg));
    if py.vararg.is_some() || !py.kwonlyargs.is_empty() {
        children.push(marker("*"));
    }
    children.extend(py.vararg.iter().map(|a| arg(a)));
    children.extend(py.kwonlyargs.iter().map(arg));
    // One entry per keyword-only argument; `to_python_arguments` drops the
    // missing ones, so rebuild the aligned list from the source arguments.
    for kw in &args.kwonlyargs {
        children.push(match &kw.default {
            Some(d) => expr(d),
            None => marker("NoDefault"),
        });
    }
    if let Some(k) = &py.kwarg {
        children.push(marker("**"));
        children.push(arg(k));
    }
    children.extend(exprs(&py.defaults));
    Label::new("arguments").node(children)
}

fn type_param(t: &ast::TypeParam) -> SyntaxTree {
    match t {
        ast::TypeParam::TypeVar(v) => Label::new("TypeVar")
            .attr("name", v.name.as_str())
            .node(v.bound.iter().map(|b| expr(b)).collect()),
        ast::TypeParam::ParamSpec(p) => {
            Label::new("ParamSpec").attr("name", p.name.as_str()).leaf()
        }
        ast::TypeParam::TypeVarTuple(p) => Label::new("TypeVarTuple")
            .attr("name", p.name.as_str())
            .leaf(),
    }
}

fn comprehension(c: &ast::Comprehension) -> SyntaxTree {
    let mut children = vec![expr(&c.target), expr(&c.iter)];
    children.extend(exprs(&c.ifs));
    Label::new("comprehension")
        .attr("is_async", if c.is_async { "1" } else { "0" })
        .node(children)
}

fn with_generators(
    kind: &str,
    mut head: Vec<SyntaxTree>,
    gens: &[ast::Comprehension],
) -> SyntaxTree {
    head.extend(gens.iter().map(comprehension));
    Label::new(kind).node(head)
}

fn expr(e: &Expr) -> SyntaxTree {
    match e {
        Expr::BoolOp(b) => Label::new("BoolOp")
            .attr("op", bool_op(b.op))
            .node(exprs(&b.values)),
        Expr::NamedExpr(n) => Label::new("NamedExpr").node(vec![expr(&n.target), expr(&n.value)]),
        Expr::BinOp(b) => Label::new("BinOp")
            .attr("op", operator(b.op))
            .node(vec![expr(&b.left), expr(&b.right)]),
        Expr::UnaryOp(u) => Label::new("UnaryOp")
            .attr("op", unary_op(u.op))
            .node(vec![expr(&u.operand)]),
        Expr::Lambda(l) => Label::new("Lambda").node(vec![arguments(&l.args), expr(&l.body)]),
        Expr::IfExp(i) => {
            Label::new("IfExp").node(vec![expr(&i.test), expr(&i.body), expr(&i.orelse)])
        }
        Expr::Dict(d) => {
            let mut children: Vec<SyntaxTree> = d
                .keys
                .iter()
                .map(|k| k.as_ref().map_or_else(|| marker("**"), expr))
                .collect();
            children.extend(exprs(&d.values));
            Label::new("Dict").node(children)
        }
        Expr::Set(s) => Label::new("Set").node(exprs(&s.elts)),
        Expr::ListComp(c) => with_generators("ListComp", vec![expr(&c.elt)], &c.generators),
        Expr::SetComp(c) => with_generators("SetComp", vec![expr(&c.elt)], &c.generators),
        Expr::DictComp(c) => with_generators(
            "DictComp",
            vec![expr(&c.key), expr(&c.value)],
            &c.generators,
        ),
        Expr::GeneratorExp(c) => with_generators("GeneratorExp", vec![expr(&c.elt)], &c.generators),
        Expr::Await(a) => Label::new("Await").node(vec![expr(&a.value)]),
        Expr::Yield(y) => Label::new("Yield").node(y.value.iter().map(|v| expr(v)).collect()),
        Expr::YieldFrom(y) => Label::new("YieldFrom").node(vec![expr(&y.value)]),
        Expr::Compare(c) => {
            let ops: Vec<&str> = c.ops.iter().map(|op| cmp_op(*op)).collect();
            let mut children = vec![expr(&c.left)];
            children.extend(exprs(&c.comparators));
            Label::new("Compare")
                .attr("ops", ops.join(","))
                .node(children)
        }
        Expr::Call(c) => {
            let mut children = vec![expr(&c.func)];
            children.extend(exprs(&c.args));
            children.extend(c.keywords.iter().map(keyword));
            Label::new("Call").node(children)
        }
        Expr::FormattedValue(f) => {
            let mut children = vec![expr(&f.value)];
            children.extend(f.format_spec.iter().map(|s| expr(s)));
            Label::new("FormattedValue")
                .attr("conversion", (f.conversion as i8).to_string())
                .node(children)
        }
        Expr::JoinedStr(j) => Label::new("JoinedStr").node(exprs(&j.values)),
        Expr::Constant(c) => Label::new("Constant")
            .attr("value", constant_repr(&c.value))
            .opt("kind", c.kind.as_deref())
            .leaf(),
        Expr::Attribute(a) => Label::new("Attribute")
            .attr("attr", a.attr.as_str())
            .attr("ctx", context(a.ctx))
            .node(vec![expr(&a.value)]),
        Expr::Subscript(s) => Label::new("Subscript")
            .attr("ctx", context(s.ctx))
            .node(vec![expr(&s.value), expr(&s.slice)]),
        Expr::Starred(s) => Label::new("Starred")
            .attr("ctx", context(s.ctx))
            .node(vec![expr(&s.value)]),
        Expr::Name(n) => Label::new("Name")
            .attr("id", n.id.as_str())
            .attr("ctx", context(n.ctx))
            .leaf(),
        Expr::List(l) => Label::new("List")
            .attr("ctx", context(l.ctx))
            .node(exprs(&l.elts)),
        Expr::Tuple(t) => Label::new("Tuple")
            .attr("ctx", context(t.ctx))
            .node(exprs(&t.elts)),
        Expr::Slice(s) => {
            let mut children: Vec<SyntaxTree> = s.lower.iter().map(|l| expr(l)).collect();
            if let Some(u) = &s.upper {
                children.push(marker("upper"));
                children.push(expr(u));
            }
            if let Some(st) = &s.step {
                children.push(marker("step"));
                children.push(expr(st));
            }
            Label::new("Slice").node(children)
        }
    }
}

fn match_case(c: &ast::MatchCase) -> SyntaxTree {
    let mut children = vec![pattern(&c.pattern)];
    children.extend(c.guard.iter().map(|g| expr(g)));
    children.extend(stmts(&c.body));
    Label::new("match_case").node(children)
}

fn pattern(p: &Pattern) -> SyntaxTree {
    match p {
        Pattern::MatchValue(v) => Label::new("MatchValue").node(vec![expr(&v.value)]),
        Pattern::MatchSingleton(s) => Label::new("MatchSingleton")
            .attr("value", constant_repr(&s.value))
            .leaf(),
        Pattern::MatchSequence(s) => {
            Label::new("MatchSequence").node(s.patterns.iter().map(pattern).collect())
        }
        Pattern::MatchMapping(m) => {
            let mut children = exprs(&m.keys);
            children.extend(m.patterns.iter().map(pattern));
            Label::new("MatchMapping")
                .opt("rest", m.rest.as_ref().map(|r| r.as_str()))
                .node(children)
        }
        Pattern::MatchClass(c) => {
            let mut children = vec![expr(&c.cls)];
            children.extend(c.patterns.iter().map(pattern));
            children.extend(c.kwd_patterns.iter().map(pattern));
            let mut label = Label::new("MatchClass");
            if !c.kwd_attrs.is_empty() {
                label = label.attr("kwd_attrs", join_ids(&c.kwd_attrs));
            }
            label.node(children)
        }
        Pattern::MatchStar(s) => Label::new("MatchStar")
            .opt("name", s.name.as_ref().map(|n| n.as_str()))
            .leaf(),
        Pattern::MatchAs(a) => Label::new("MatchAs")
            .opt("name", a.name.as_ref().map(|n| n.as_str()))
            .node(a.pattern.iter().map(|p| pattern(p)).collect()),
        Pattern::MatchOr(o) => Label::new("MatchOr").node(o.patterns.iter().map(pattern).collect()),
    }
}

fn context(ctx: ast::ExprContext) -> &'static str {
    match ctx {
        ast::ExprContext::Load => "Load",
        ast::ExprContext::Store => "Store",
        ast::ExprContext::Del => "Del",
    }
}

fn bool_op(op: ast::BoolOp) -> &'static str {
    match op {
        ast::BoolOp::And => "And",
        ast::BoolOp::Or => "Or",
    }
}

fn operator(op: ast::Operator) -> &'static str {
    use ast::Operator::*;
    match op {
        Add => "Add",
        Sub => "Sub",
        Mult => "Mult",
        MatMult => "MatMult",
        Div => "Div",
        Mod => "Mod",
        Pow => "Pow",
        LShift => "LShift",
        RShift => "RShift",
        BitOr => "BitOr",
        BitXor => "BitXor",
        BitAnd => "BitAnd",
        FloorDiv => "FloorDiv",
    }
}

fn unary_op(op: ast::UnaryOp) -> &'static str {
    match op {
        ast::UnaryOp::Invert => "Invert",
        ast::UnaryOp::Not => "Not",
        ast::UnaryOp::UAdd => "UAdd",
        ast::UnaryOp::USub => "USub",
    }
}

fn cmp_op(op: ast::CmpOp) -> &'static str {
    use ast::CmpOp::*;
    match op {
        Eq => "Eq",
        NotEq => "NotEq",
        Lt => "Lt",
        LtE => "LtE",
        Gt => "Gt",
        GtE => "GtE",
        Is => "Is",
        IsNot => "IsNot",
        In => "In",
        NotIn => "NotIn",
    }
}

/// Python `repr()` of a literal constant.
fn constant_repr(c: &Constant) -> String {
    match c {
        Constant::None => "None".into(),
        Constant::Bool(true) => "True".into(),
        Constant::Bool(false) => "False".into(),
        Constant::Str(s) => str_repr(s),
        Constant::Bytes(b) => bytes_repr(b),
        Constant::Int(i) => i.to_string(),
        Constant::Float(f) => float_repr(*f),
        Constant::Complex { real, imag } => {
            if *real == 0.0 && real.is_sign_positive() {
                format!("{}j", float_repr_bare(*imag))
            } else {
                let sign = if *imag < 0.0 || (*imag == 0.0 && imag.is_sign_negative()) {
                    "-"
                } else {
                    "+"
                };
                format!(
                    "({}{}{}j)",
                    float_repr_bare(*real),
                    sign,
                    float_repr_bare(imag.abs())
                )
            }
        }
        Constant::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(constant_repr).collect();
            if parts.len() == 1 {
                format!("({},)", parts[0])
            } else {
                format!("({})", parts.join(", "))
            }
        }
        Constant::Ellipsis => "Ellipsis".into(),
    }
}

fn str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if c.is_control() => {
                let code = c as u32;
                if code < 0x100 {
                    out.push_str(&format!("\\x{code:02x}"));
                } else if code < 0x10000 {
                    out.push_str(&format!("\\u{code:04x}"));
                } else {
                    out.push_str(&format!("\\U{code:08x}"));
                }
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

fn bytes_repr(b: &[u8]) -> String {
    let quote = if b.contains(&b'\'') && !b.contains(&b'"') {
        b'"'
    } else {
        b'\''
    };
    let mut out = String::from("b");
    out.push(quote as char);
    for &byte in b {
        match byte {
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            q if q == quote => {
                out.push('\\');
                out.push(q as char);
            }
            0x20..=0x7e => out.push(byte as char),
            _ => out.push_str(&format!("\\x{byte:02x}")),
        }
    }
    out.push(quote as char);
    out
}

/// Float formatting following Python's `repr`: shortest round-trip digits,
/// scientific notation outside `1e-4 <= |x| < 1e16`.
fn float_repr(f: f64) -> String {
    let bare = float_repr_bare(f);
    if f.is_finite() && !bare.contains(['.', 'e']) {
        format!("{bare}.0")
    } else {
        bare
    }
}

fn float_repr_bare(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if f == 0.0 {
        return if f.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{f:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..16).contains(&exp) {
        let plain = format!("{f}");
        plain.strip_suffix(".0").map(str::to_owned).unwrap_or(plain)
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(src: &str) -> Vec<String> {
        parse_program(src)
            .unwrap()
            .preorder_labels()
            .into_iter()
            .map(str::to_owned)
            .collect()
    }

    #[test]
    fn hello_world_tree() {
        let tree = parse_program("a = 'Hello World'\nprint(a)").unwrap();
        let expected = SyntaxTree::new(
            "Module",
            vec![
                SyntaxTree::new(
                    "Assign",
                    vec![
                        SyntaxTree::leaf("Name:id=a:ctx=Store"),
                        SyntaxTree::leaf("Constant:value='Hello World'"),
                    ],
                ),
                SyntaxTree::new(
                    "Expr",
                    vec![SyntaxTree::new(
                        "Call",
                        vec![
                            SyntaxTree::leaf("Name:id=print:ctx=Load"),
                            SyntaxTree::leaf("Name:id=a:ctx=Load"),
                        ],
                    )],
                ),
            ],
        );
        assert_eq!(tree, expected);
        assert_eq!(tree.size(), 8);
    }

    #[test]
    fn empty_program() {
        assert_eq!(parse_program("").unwrap(), SyntaxTree::leaf("Module"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_program("a = (").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_program("x = 1\npip install opencv\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column >= 1);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let a = parse_program("a = 1\n\n\nb = a  # note\n").unwrap();
        let b = parse_program("# header\na = 1\nb = a\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn else_branch_is_marked() {
        let flat = parse_program("if x:\n    a\n    b\n").unwrap();
        let split = parse_program("if x:\n    a\nelse:\n    b\n").unwrap();
        assert_ne!(flat, split);
        assert_eq!(split.children[0].children[2].label, "orelse");
    }

    #[test]
    fn slices_distinguish_bounds() {
        let lower = parse_program("x[1:]").unwrap();
        let upper = parse_program("x[:1]").unwrap();
        assert_ne!(lower, upper);
    }

    #[test]
    fn argument_layout() {
        let l = labels("def f(a, /, b=2, *args, c, d=4, **kw) -> int:\n    pass\n");
        assert_eq!(
            l,
            [
                "Module",
                "FunctionDef:name=f",
                "arguments",
                "arg:arg=a",
                "/",
                "arg:arg=b",
                "*",
                "arg:arg=args",
                "arg:arg=c",
                "arg:arg=d",
                "NoDefault",
                "Constant:value=4",
                "**",
                "arg:arg=kw",
                "Constant:value=2",
                "Pass",
                "returns",
                "Name:id=int:ctx=Load",
            ]
        );
    }

    #[test]
    fn folded_attributes() {
        let l =
            labels("import cv2 as cv\nfrom skimage import filters\nx = a.b[0] < -1.5 != 2e20\n");
        assert!(l.contains(&"alias:name=cv2:asname=cv".to_owned()));
        assert!(l.contains(&"ImportFrom:module=skimage:level=0".to_owned()));
        assert!(l.contains(&"Compare:ops=Lt,NotEq".to_owned()));
        assert!(l.contains(&"Attribute:attr=b:ctx=Load".to_owned()));
        assert!(l.contains(&"UnaryOp:op=USub".to_owned()));
        assert!(l.contains(&"Constant:value=1.5".to_owned()));
        assert!(l.contains(&"Constant:value=2e+20".to_owned()));
    }

    #[test]
    fn constant_reprs() {
        assert_eq!(str_repr("it's"), "\"it's\"");
        assert_eq!(str_repr("a\nb"), "'a\\nb'");
        assert_eq!(bytes_repr(b"\x00ab"), "b'\\x00ab'");
        assert_eq!(float_repr(1.0), "1.0");
        assert_eq!(float_repr(0.0001), "0.0001");
        assert_eq!(float_repr(1e-5), "1e-05");
        assert_eq!(float_repr(1e16), "1e+16");
        assert_eq!(float_repr(123.25), "123.25");
        assert_eq!(
            constant_repr(&Constant::Complex {
                real: 0.0,
                imag: 2.0
            }),
            "2j"
        );
    }

    #[test]
    fn deterministic() {
        let src = "def otsu(img):\n    import cv2\n    _, t = cv2.threshold(img, 0, 255, cv2.THRESH_OTSU)\n    return t\n";
        assert_eq!(parse_program(src).unwrap(), parse_program(src).unwrap());
    }
}
