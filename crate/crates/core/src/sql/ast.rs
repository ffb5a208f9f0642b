//! Concrete syntax tree, canonical rendering and node pruning.
//!
//! Every significant token of the input survives as a leaf, so rendering is
//! an in-order walk over the leaves. Keyword leaves carry canonical upper-case
//! text; identifiers and literals are verbatim. Comments and Oracle
//! physical-storage clauses are trivia to the parser and never appear in the
//! tree.

use std::fmt;

use super::lexer::{tokens_fuse, TokenKind};
use super::Dialect;

macro_rules! node_kinds {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeKind {
            $($name),*
        }

        impl NodeKind {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$name => stringify!($name)),*
                }
            }
        }
    };
}

node_kinds! {
    // leaves
    Keyword, Identifier, QuotedIdentifier, StringLiteral, Number, Operator, Punct,
    // statements
    Script, GenericStatement, Query, Select, SetOperation, WithClause, CommonTableExpr,
    SelectList, SelectItem, IntoClause, FromClause, TableRef, DerivedTable, Join, WhereClause,
    HierarchicalClause, GroupBy, Having, OrderBy, OrderItem, LimitClause, OffsetClause,
    FetchClause, ForUpdate, Insert, ValuesClause, ValuesRow, Update, SetClause, Assignment,
    Delete, Returning,
    // expressions
    BinaryExpr, UnaryExpr, NotExpr, IsExpr, LikeExpr, InExpr, BetweenExpr, ExistsExpr,
    CaseExpr, WhenClause, ElseClause, FunctionCall, NamedArg, WindowSpec, Paren, Tuple,
    Subquery, ColumnRef, ObjectName, CastExpr, PgCast, AttributeRef, TypedLiteral,
    BindVariable, OuterJoinMarker, Star, ArraySubscript,
    // DDL
    CreateTable, ColumnDef, DataType, ColumnConstraint, TableConstraint, TableOptions,
    CreateIndex, IndexElem, CreateView, CreateSequence, CreateProcedure, CreateFunction,
    CreatePackage, CreatePackageBody, CreateTrigger, TriggerEvent, ParamList, Param,
    ReturnClause, RoutineOptions, DollarBody,
    // procedural
    PlsqlBlock, DeclareSection, VariableDecl, CursorDecl, ExceptionDecl, LooseDecl,
    RoutineDecl, StatementList, ExceptionSection, Handler, AssignStmt, IfStmt, ElsifClause,
    ElseBranch, LoopStmt, WhileLoop, ForLoop, ExitStmt, ReturnStmt, RaiseStmt, NullStmt,
    CallStmt, CaseStmt, Label, LooseStmt, DoBlock,
}

impl NodeKind {
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            NodeKind::Keyword
                | NodeKind::Identifier
                | NodeKind::QuotedIdentifier
                | NodeKind::StringLiteral
                | NodeKind::Number
                | NodeKind::Operator
                | NodeKind::Punct
        )
    }

    fn token_kind(self) -> TokenKind {
        match self {
            NodeKind::Keyword => TokenKind::Keyword,
            NodeKind::QuotedIdentifier => TokenKind::QuotedIdentifier,
            NodeKind::StringLiteral => TokenKind::StringLiteral,
            NodeKind::Number => TokenKind::Number,
            NodeKind::Operator => TokenKind::Operator,
            NodeKind::Punct => TokenKind::Punct,
            _ => TokenKind::Identifier,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parse-tree node. Derived equality is structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AstNode {
    pub kind: NodeKind,
    pub children: Vec<AstNode>,
    pub leaf_text: Option<String>,
}

impl AstNode {
    pub fn leaf(kind: NodeKind, text: impl Into<String>) -> Self {
        debug_assert!(kind.is_leaf());
        Self {
            kind,
            children: Vec::new(),
            leaf_text: Some(text.into()),
        }
    }

    pub fn branch(kind: NodeKind, children: Vec<AstNode>) -> Self {
        Self {
            kind,
            children,
            leaf_text: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_text.is_some()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(AstNode::node_count).sum::<usize>()
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a AstNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    /// Leaves in source order.
    pub fn leaves(&self) -> Vec<&AstNode> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if n.is_leaf() {
                out.push(n);
            }
        });
        out
    }

    pub fn find(&self, kind: NodeKind) -> Option<&AstNode> {
        let mut found = None;
        self.walk(&mut |n| {
            if found.is_none() && n.kind == kind {
                found = Some(n);
            }
        });
        found
    }
}

/// Joins tokens using the minified spacing rule.
///
/// Each item is `(kind, text, space_before)`. Where `space_before` is set, a
/// single space is emitted unless either neighbour is an operator or
/// punctuation; a closing parenthesis followed by a word keeps its space. A
/// space is always emitted where the two texts would otherwise lex as
/// something else.
pub fn join_compact<'a, I>(items: I, dialect: Option<Dialect>) -> String
where
    I: IntoIterator<Item = (TokenKind, &'a str, bool)>,
{
    let mut out = String::new();
    let mut prev: Option<(TokenKind, &str)> = None;
    for (kind, text, space_before) in items {
        if let Some((pk, ptext)) = prev {
            let fuse = match dialect {
                Some(d) => tokens_fuse(ptext, text, d),
                None => {
                    tokens_fuse(ptext, text, Dialect::Oracle)
                        || tokens_fuse(ptext, text, Dialect::Postgres)
                }
            };
            let symbol_adjacent = (pk.is_symbol() && ptext != ")") || kind.is_symbol();
            if fuse || (space_before && !symbol_adjacent) {
                out.push(' ');
            }
        }
        out.push_str(text);
        prev = Some((kind, text));
    }
    out
}

/// Canonical compact text of a tree.
pub fn render(ast: &AstNode) -> String {
    join_compact(
        ast.leaves().into_iter().map(|leaf| {
            (
                leaf.kind.token_kind(),
                leaf.leaf_text.as_deref().unwrap_or_default(),
                true,
            )
        }),
        None,
    )
}

/// Binding strength of an expression node; atoms bind tightest.
fn precedence(node: &AstNode) -> u8 {
    const ATOM: u8 = 10;
    match node.kind {
        NodeKind::BinaryExpr => {
            let op = node.children.get(1).and_then(|c| c.leaf_text.as_deref());
            match op.map(str::to_ascii_uppercase).as_deref() {
                Some("OR") => 1,
                Some("AND") => 2,
                Some("=" | "<>" | "!=" | "^=" | "<" | ">" | "<=" | ">=") => 4,
                Some("||") => 5,
                Some("+" | "-") => 6,
                Some("*" | "/" | "%") => 7,
                _ => 0,
            }
        }
        NodeKind::NotExpr => 3,
        NodeKind::IsExpr | NodeKind::LikeExpr | NodeKind::InExpr | NodeKind::BetweenExpr => 4,
        NodeKind::UnaryExpr => 8,
        NodeKind::PgCast | NodeKind::AttributeRef | NodeKind::ArraySubscript => 9,
        _ => ATOM,
    }
}

fn is_operator_context(kind: NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::BinaryExpr
            | NodeKind::UnaryExpr
            | NodeKind::NotExpr
            | NodeKind::IsExpr
            | NodeKind::LikeExpr
            | NodeKind::InExpr
            | NodeKind::BetweenExpr
            | NodeKind::PgCast
            | NodeKind::AttributeRef
            | NodeKind::ArraySubscript
            | NodeKind::IndexElem
    )
}

/// Drops redundant nodes: parentheses that do not change how the expression
/// groups. A parenthesised expression is redundant when it is an atom, when it
/// fills a whole expression slot (select item, condition, argument, …), or
/// when its operator binds strictly tighter than the enclosing binary
/// operator.
pub fn prune_nodes(ast: &AstNode) -> AstNode {
    prune_in(ast, None)
}

fn prune_in(node: &AstNode, parent: Option<&AstNode>) -> AstNode {
    if node.kind == NodeKind::Paren && node.children.len() == 3 {
        let inner = prune_in(&node.children[1], Some(node));
        let redundant = match parent {
            _ if precedence(&inner) == 10 => true,
            Some(p) if p.kind == NodeKind::BinaryExpr => precedence(&inner) > precedence(p),
            Some(p) if is_operator_context(p.kind) => false,
            _ => true,
        };
        if redundant {
            return inner;
        }
        let mut kept = node.clone();
        kept.children[1] = inner;
        return kept;
    }
    let children = node
        .children
        .iter()
        .map(|c| prune_in(c, Some(node)))
        .collect();
    AstNode {
        kind: node.kind,
        children,
        leaf_text: node.leaf_text.clone(),
    }
}

fn fingerprint(node: &AstNode, fold_identifiers: bool) -> String {
    let mut fp = String::from(node.kind.as_str());
    fp.push('(');
    for (i, child) in node.children.iter().enumerate() {
        if i > 0 {
            fp.push(',');
        }
        fp.push_str(child.kind.as_str());
    }
    fp.push(')');
    if let Some(text) = &node.leaf_text {
        fp.push('|');
        if fold_identifiers && node.kind == NodeKind::Identifier {
            fp.push_str(&text.to_lowercase());
        } else {
            fp.push_str(text);
        }
    }
    fp
}

/// One `kind(child-kinds)|leaf_text` fingerprint per node, in pre-order.
pub fn subtree_fingerprints(ast: &AstNode) -> Vec<String> {
    let mut out = Vec::with_capacity(ast.node_count());
    ast.walk(&mut |n| out.push(fingerprint(n, false)));
    out
}

/// As [`subtree_fingerprints`] with identifier leaves lower-cased, since the
/// two dialects fold unquoted names in opposite directions.
pub fn subtree_fingerprints_folded(ast: &AstNode) -> Vec<String> {
    let mut out = Vec::with_capacity(ast.node_count());
    ast.walk(&mut |n| out.push(fingerprint(n, true)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident(t: &str) -> AstNode {
        AstNode::leaf(NodeKind::Identifier, t)
    }

    #[test]
    fn single_leaf_fingerprint() {
        let fps = subtree_fingerprints(&ident("t"));
        assert_eq!(fps, vec!["Identifier()|t".to_string()]);
    }

    #[test]
    fn fingerprint_count_matches_nodes() {
        let tree = AstNode::branch(
            NodeKind::ColumnRef,
            vec![ident("a"), AstNode::leaf(NodeKind::Punct, "."), ident("b")],
        );
        assert_eq!(subtree_fingerprints(&tree).len(), tree.node_count());
        assert_eq!(
            subtree_fingerprints(&tree)[0],
            "ColumnRef(Identifier,Punct,Identifier)"
        );
    }

    #[test]
    fn join_keeps_required_spaces() {
        let items = vec![
            (TokenKind::Operator, "-", true),
            (TokenKind::Operator, "-", true),
            (TokenKind::Number, "1", false),
        ];
        assert_eq!(join_compact(items, Some(Dialect::Oracle)), "- -1");
    }

    #[test]
    fn join_drops_space_around_symbols() {
        let items = vec![
            (TokenKind::Identifier, "a", false),
            (TokenKind::Punct, ",", true),
            (TokenKind::Identifier, "b", true),
        ];
        assert_eq!(join_compact(items, Some(Dialect::Oracle)), "a,b");
    }
}
