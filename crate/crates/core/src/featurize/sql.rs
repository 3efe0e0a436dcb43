//! Clause-level SQL token extraction.
//!
//! This is not a SQL grammar: it is a tokenizer plus a linear scan that
//! recognizes exactly the clauses the features need — SELECT lists
//! (function calls), FROM lists (tables, joins, subqueries), GROUP BY and
//! ORDER BY column lists. Subqueries are tracked with an explicit block
//! stack, and tables and function calls are collected from every block
//! encountered anywhere in the statement.
//!
//! Normalization: function names are uppercased, table and column names
//! lowercased; qualified names are kept as written (after case folding).
//! Aliases are never resolved. One exception: an unqualified GROUP BY or
//! ORDER BY column is prefixed with the table name when the enclosing
//! block's FROM list names exactly one table.

use std::collections::BTreeMap;

/// A multiset of string tokens, ordered for deterministic iteration.
pub type TokenMultiset = BTreeMap<String, u32>;

/// Tokens extracted from one statement, plus the raw counts behind the
/// derived join count: (FROM-list items + JOIN keywords - query blocks),
/// floored at zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SqlFacts {
    pub function_call: TokenMultiset,
    pub table_reference: TokenMultiset,
    pub group_by: TokenMultiset,
    pub order_by: TokenMultiset,
    pub from_items: u32,
    pub join_keywords: u32,
    pub query_blocks: u32,
}

impl SqlFacts {
    pub fn derived_num_joins(&self) -> u32 {
        (self.from_items + self.join_keywords).saturating_sub(self.query_blocks)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number,
    StringLit,
    Star,
    LParen,
    RParen,
    Comma,
    Dot,
    Other,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$' || c == '#'
}

/// Lexer failures are the only hard parse errors; anything the clause
/// scanner does not recognize is skipped, not rejected.
fn tokenize(sql: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = sql.chars().peekable();
    let mut depth: i64 = 0;
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '-' {
            chars.next();
            if chars.peek() == Some(&'-') {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                out.push(Tok::Other);
            }
        } else if c == '/' {
            chars.next();
            if chars.peek() == Some(&'*') {
                chars.next();
                let mut prev = ' ';
                let mut closed = false;
                for c in chars.by_ref() {
                    if prev == '*' && c == '/' {
                        closed = true;
                        break;
                    }
                    prev = c;
                }
                if !closed {
                    return Err("unterminated block comment".into());
                }
            } else {
                out.push(Tok::Other);
            }
        } else if c == '\'' {
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                if c == '\'' {
                    if chars.peek() == Some(&'\'') {
                        chars.next();
                    } else {
                        closed = true;
                        break;
                    }
                }
            }
            if !closed {
                return Err("unterminated string literal".into());
            }
            out.push(Tok::StringLit);
        } else if c == '"' || c == '`' {
            let quote = c;
            chars.next();
            let mut name = String::new();
            let mut closed = false;
            while let Some(c) = chars.next() {
                if c == quote {
                    if chars.peek() == Some(&quote) {
                        name.push(quote);
                        chars.next();
                    } else {
                        closed = true;
                        break;
                    }
                } else {
                    name.push(c);
                }
            }
            if !closed {
                return Err("unterminated quoted identifier".into());
            }
            // Quoted identifiers keep their case.
            out.push(Tok::Ident(name));
        } else if is_ident_start(c) {
            let mut name = String::new();
            while let Some(&c) = chars.peek() {
                if is_ident_part(c) {
                    name.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Ident(name));
        } else if c.is_ascii_digit() {
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' {
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Number);
        } else {
            chars.next();
            match c {
                '(' => {
                    depth += 1;
                    out.push(Tok::LParen);
                }
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err("unbalanced parentheses".into());
                    }
                    out.push(Tok::RParen);
                }
                ',' => out.push(Tok::Comma),
                '.' => out.push(Tok::Dot),
                '*' => out.push(Tok::Star),
                _ => out.push(Tok::Other),
            }
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    Ok(out)
}

fn is_keyword(upper: &str) -> bool {
    const KEYWORDS: &[&str] = &[
        "SELECT",
        "FROM",
        "WHERE",
        "GROUP",
        "ORDER",
        "BY",
        "HAVING",
        "LIMIT",
        "OFFSET",
        "UNION",
        "INTERSECT",
        "EXCEPT",
        "ALL",
        "DISTINCT",
        "AS",
        "ON",
        "JOIN",
        "INNER",
        "LEFT",
        "RIGHT",
        "FULL",
        "OUTER",
        "CROSS",
        "NATURAL",
        "USING",
        "AND",
        "OR",
        "NOT",
        "IN",
        "EXISTS",
        "BETWEEN",
        "LIKE",
        "IS",
        "NULL",
        "CASE",
        "WHEN",
        "THEN",
        "ELSE",
        "END",
        "ASC",
        "DESC",
        "NULLS",
        "FIRST",
        "LAST",
        "WITH",
        "VALUES",
        "INTO",
        "SET",
        "OVER",
        "PARTITION",
    ];
    KEYWORDS.contains(&upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clause {
    /// Before the first SELECT of a block (WITH prologue, UNION gap).
    None,
    SelectList,
    From,
    GroupBy,
    OrderBy,
    Other,
}

/// Position within a FROM list. Comma-separated items count toward the
/// derived join formula; items introduced by a JOIN keyword do not (the
/// keyword itself is counted). Aliases and ON expressions are skipped
/// because no item is expected there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Expect {
    No,
    CountedItem,
    JoinedItem,
}

struct Block {
    clause: Clause,
    /// Parenthesis depth the block lives at. Clause keywords only apply at
    /// this exact depth; function-call detection applies at any deeper
    /// depth inside the block.
    depth: u32,
    /// Named tables in this block's own FROM list.
    direct_tables: Vec<String>,
    expect: Expect,
}

impl Block {
    fn new(depth: u32) -> Self {
        Block {
            clause: Clause::SelectList,
            depth,
            direct_tables: Vec::new(),
            expect: Expect::No,
        }
    }
}

fn bump(set: &mut TokenMultiset, token: String) {
    *set.entry(token).or_insert(0) += 1;
}

/// Reads an `ident(.ident)*` chain starting at `i`. Returns the joined
/// lowercased name, the position after the chain, and the part count.
/// Keywords cannot start a chain but may follow a dot.
fn ident_chain(toks: &[Tok], mut i: usize) -> Option<(String, usize, usize)> {
    let mut parts: Vec<String> = Vec::new();
    loop {
        match toks.get(i) {
            Some(Tok::Ident(name)) if !(parts.is_empty() && is_keyword(&name.to_uppercase())) => {
                parts.push(name.to_lowercase());
                i += 1;
                if toks.get(i) == Some(&Tok::Dot) && matches!(toks.get(i + 1), Some(Tok::Ident(_)))
                {
                    i += 1;
                    continue;
                }
                break;
            }
            _ => break,
        }
    }
    if parts.is_empty() {
        None
    } else {
        let n = parts.len();
        Some((parts.join("."), i, n))
    }
}

/// Extract clause tokens and join-count inputs from one SQL statement.
pub fn extract(sql: &str) -> Result<SqlFacts, String> {
    let toks = tokenize(sql)?;
    let mut facts = SqlFacts::default();
    let mut stack: Vec<Block> = Vec::new();
    let mut depth: u32 = 0;
    let mut i = 0usize;

    while i < toks.len() {
        match &toks[i] {
            Tok::LParen => {
                depth += 1;
                if matches!(toks.get(i + 1), Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("select"))
                {
                    if let Some(top) = stack.last_mut() {
                        if top.clause == Clause::From && top.expect != Expect::No {
                            // A derived table is one FROM-list item.
                            if top.expect == Expect::CountedItem {
                                facts.from_items += 1;
                            }
                            top.expect = Expect::No;
                        }
                    }
                    facts.query_blocks += 1;
                    stack.push(Block::new(depth));
                    i += 2;
                } else {
                    i += 1;
                }
            }
            Tok::RParen => {
                while stack.last().map(|b| b.depth == depth).unwrap_or(false) {
                    stack.pop();
                }
                depth = depth.saturating_sub(1);
                i += 1;
            }
            Tok::Comma => {
                if let Some(top) = stack.last_mut() {
                    if top.clause == Clause::From && top.depth == depth {
                        top.expect = Expect::CountedItem;
                    }
                }
                i += 1;
            }
            Tok::Ident(word) => {
                let upper = word.to_uppercase();
                let at_block_depth = stack.last().map(|b| b.depth == depth).unwrap_or(false);
                match upper.as_str() {
                    "SELECT" => {
                        // Top-level statement or the arm after UNION and
                        // friends: replaces the block at this depth.
                        if at_block_depth {
                            stack.pop();
                        }
                        facts.query_blocks += 1;
                        stack.push(Block::new(depth));
                        i += 1;
                    }
                    "FROM" if at_block_depth => {
                        let top = stack.last_mut().unwrap();
                        top.clause = Clause::From;
                        top.expect = Expect::CountedItem;
                        i += 1;
                    }
                    "GROUP" | "ORDER"
                        if at_block_depth
                            && matches!(toks.get(i + 1), Some(Tok::Ident(w)) if w.eq_ignore_ascii_case("by")) =>
                    {
                        stack.last_mut().unwrap().clause = if upper == "GROUP" {
                            Clause::GroupBy
                        } else {
                            Clause::OrderBy
                        };
                        i += 2;
                    }
                    "WHERE" | "HAVING" | "LIMIT" | "OFFSET" | "WINDOW" | "QUALIFY"
                        if at_block_depth =>
                    {
                        stack.last_mut().unwrap().clause = Clause::Other;
                        i += 1;
                    }
                    "UNION" | "INTERSECT" | "EXCEPT" if at_block_depth => {
                        stack.last_mut().unwrap().clause = Clause::None;
                        i += 1;
                    }
                    "JOIN"
                        if stack
                            .last()
                            .map(|b| b.clause == Clause::From && depth >= b.depth)
                            .unwrap_or(false) =>
                    {
                        facts.join_keywords += 1;
                        stack.last_mut().unwrap().expect = Expect::JoinedItem;
                        i += 1;
                    }
                    _ => {
                        i = consume_ident(&toks, i, depth, &mut stack, &mut facts);
                    }
                }
            }
            _ => {
                i += 1;
            }
        }
    }

    Ok(facts)
}

/// Handle a non-keyword identifier according to the innermost block's
/// clause. Returns the position to continue scanning from.
fn consume_ident(
    toks: &[Tok],
    i: usize,
    depth: u32,
    stack: &mut [Block],
    facts: &mut SqlFacts,
) -> usize {
    let Some(top) = stack.last_mut() else {
        return i + 1;
    };
    match top.clause {
        Clause::SelectList => {
            // A name directly followed by "(" is a function call; detected
            // at any depth inside the select list so nested calls count.
            if let Some((name, next, _)) = ident_chain(toks, i) {
                if toks.get(next) == Some(&Tok::LParen) {
                    bump(&mut facts.function_call, name.to_uppercase());
                }
                return next;
            }
            i + 1
        }
        Clause::From if top.expect != Expect::No && depth >= top.depth => {
            if let Some((name, next, _)) = ident_chain(toks, i) {
                bump(&mut facts.table_reference, name.clone());
                if top.expect == Expect::CountedItem {
                    facts.from_items += 1;
                }
                if depth == top.depth {
                    top.direct_tables.push(name);
                }
                top.expect = Expect::No;
                return next;
            }
            i + 1
        }
        Clause::GroupBy | Clause::OrderBy if depth == top.depth => {
            if let Some((name, next, parts)) = ident_chain(toks, i) {
                // A call like LOWER(x) is an expression, not a column.
                if toks.get(next) == Some(&Tok::LParen) {
                    return next;
                }
                let token = if parts == 1 && top.direct_tables.len() == 1 {
                    format!("{}.{}", top.direct_tables[0], name)
                } else {
                    name
                };
                let set = if top.clause == Clause::GroupBy {
                    &mut facts.group_by
                } else {
                    &mut facts.order_by
                };
                bump(set, token);
                return next;
            }
            i + 1
        }
        _ => i + 1,
    }
}
