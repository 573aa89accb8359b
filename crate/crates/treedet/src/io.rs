//! On-disk formats for automata, terms, grammars, and decompositions.
//!
//! Automaton files:
//!
//! ```text
//! # comment
//! bottomup name
//! alphabet a:0 b:0 f:2
//! states q qa qb qf
//! final qf
//! transitions
//! a -> qa
//! f(qa,qb) -> q
//! end
//! ```
//!
//! Top-down files use `topdown`, `initial`, and rules `q(f) -> (q1,q2)`
//! (rank 0: `q(a) -> ()`). Lines are whitespace-insensitive; identifiers
//! match `[A-Za-z_][A-Za-z0-9_']*`, optionally carrying a buffer suffix
//! like `q@[1,2.1]`. Rendering is canonical: symbols, states, and
//! transitions each come out sorted.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::construct::EliminationTrace;
use crate::core::{
    BottomUpAutomaton, RankedAlphabet, RankedTree, State, TdRule, TopDownAutomaton, Transition,
};
use crate::fudt::{Decomposition, GrammarSymbol, Production, RhsItem, ViolationGrammar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomatonKind {
    BottomUp(BottomUpAutomaton),
    TopDown(TopDownAutomaton),
}

/// A named automaton as read from or written to a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomatonDocument {
    pub name: String,
    pub automaton: AutomatonKind,
}

impl AutomatonDocument {
    pub fn bottom_up(name: impl Into<String>, automaton: BottomUpAutomaton) -> Self {
        AutomatonDocument {
            name: name.into(),
            automaton: AutomatonKind::BottomUp(automaton),
        }
    }

    pub fn top_down(name: impl Into<String>, automaton: TopDownAutomaton) -> Self {
        AutomatonDocument {
            name: name.into(),
            automaton: AutomatonKind::TopDown(automaton),
        }
    }

    pub fn as_bottom_up(&self) -> Option<&BottomUpAutomaton> {
        match &self.automaton {
            AutomatonKind::BottomUp(a) => Some(a),
            AutomatonKind::TopDown(_) => None,
        }
    }

    pub fn as_top_down(&self) -> Option<&TopDownAutomaton> {
        match &self.automaton {
            AutomatonKind::TopDown(a) => Some(a),
            AutomatonKind::BottomUp(_) => None,
        }
    }
}

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Number(usize),
    Colon,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Arrow,
    Epsilon,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "{}", s),
            TokenKind::Number(n) => write!(f, "{}", n),
            TokenKind::Colon => write!(f, ":"),
            TokenKind::Comma => write!(f, ","),
            TokenKind::LParen => write!(f, "("),
            TokenKind::RParen => write!(f, ")"),
            TokenKind::LBracket => write!(f, "["),
            TokenKind::RBracket => write!(f, "]"),
            TokenKind::Arrow => write!(f, "->"),
            TokenKind::Epsilon => write!(f, "ε"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn tokenize_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            ':' => {
                tokens.push(Token { kind: TokenKind::Colon, line, col });
                i += 1;
            }
            ',' => {
                tokens.push(Token { kind: TokenKind::Comma, line, col });
                i += 1;
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, line, col });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, line, col });
                i += 1;
            }
            '[' => {
                tokens.push(Token { kind: TokenKind::LBracket, line, col });
                i += 1;
            }
            ']' => {
                tokens.push(Token { kind: TokenKind::RBracket, line, col });
                i += 1;
            }
            'ε' => {
                tokens.push(Token { kind: TokenKind::Epsilon, line, col });
                i += 1;
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    tokens.push(Token { kind: TokenKind::Arrow, line, col });
                    i += 2;
                } else {
                    return Err(ParseError::new(line, col, "expected '->'"));
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let value = digits
                    .parse()
                    .map_err(|_| ParseError::new(line, col, "number out of range"))?;
                tokens.push(Token { kind: TokenKind::Number(value), line, col });
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_continue(chars[i]) {
                    i += 1;
                }
                // Optional buffer suffix @[dewey,...] belongs to the name.
                if chars.get(i) == Some(&'@') {
                    if chars.get(i + 1) != Some(&'[') {
                        return Err(ParseError::new(line, i + 2, "expected '[' after '@'"));
                    }
                    i += 2;
                    while i < chars.len() && chars[i] != ']' {
                        let c = chars[i];
                        if !(c.is_ascii_digit() || c == '.' || c == ',') {
                            return Err(ParseError::new(
                                line,
                                i + 1,
                                format!("unexpected character {:?} in buffer suffix", c),
                            ));
                        }
                        i += 1;
                    }
                    if chars.get(i) != Some(&']') {
                        return Err(ParseError::new(line, i + 1, "unterminated buffer suffix"));
                    }
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                tokens.push(Token { kind: TokenKind::Ident(name), line, col });
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unexpected character {:?}", other),
                ));
            }
        }
    }
    Ok(tokens)
}

/// Token lines with content, comments and blanks removed.
fn significant_lines(text: &str) -> Result<Vec<Vec<Token>>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let tokens = tokenize_line(raw, i + 1)?;
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        let line = tokens.first().map_or(0, |t| t.line);
        Cursor { tokens, pos: 0, line }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(t) => ParseError::new(t.line, t.col, message),
            None => {
                let col = self
                    .tokens
                    .last()
                    .map_or(1, |t| t.col + t.kind.to_string().len());
                ParseError::new(self.line, col, message)
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.next() {
            Some(Token { kind: TokenKind::Ident(name), line, col }) => {
                Ok((name.clone(), *line, *col))
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error_here(format!("expected {}", what)))
            }
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == *kind => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(format!("expected '{}'", kind))),
        }
    }

    fn at_end(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.error_here("unexpected trailing tokens"))
        }
    }
}

fn keyword(tokens: &[Token]) -> Option<&str> {
    match tokens.first().map(|t| &t.kind) {
        Some(TokenKind::Ident(name)) => Some(name.as_str()),
        _ => None,
    }
}

// ---------------------------------------------------------------------
// Automaton parsing
// ---------------------------------------------------------------------

pub fn parse_automaton(text: &str) -> Result<AutomatonDocument, ParseError> {
    let lines = significant_lines(text)?;
    if lines.is_empty() {
        return Err(ParseError::new(1, 1, "empty input"));
    }
    let mut it = lines.iter();

    let header = it.next().unwrap();
    let mut cursor = Cursor::new(header);
    let (kind, _, _) = cursor.ident("'bottomup' or 'topdown'")?;
    let bottom_up = match kind.as_str() {
        "bottomup" => true,
        "topdown" => false,
        _ => {
            return Err(ParseError::new(
                header[0].line,
                header[0].col,
                "expected 'bottomup' or 'topdown'",
            ))
        }
    };
    let (name, _, _) = cursor.ident("automaton name")?;
    cursor.at_end()?;

    let alpha_line = it
        .next()
        .ok_or_else(|| ParseError::new(header[0].line + 1, 1, "expected 'alphabet' line"))?;
    let alphabet = parse_alphabet_line(alpha_line)?;

    let states_line = it
        .next()
        .ok_or_else(|| ParseError::new(alpha_line[0].line + 1, 1, "expected 'states' line"))?;
    let states = parse_id_list_line(states_line, "states")?;
    let declared: BTreeSet<State> = states.iter().map(|(n, _, _)| State::new(n.clone())).collect();

    let marker_line = it.next().ok_or_else(|| {
        ParseError::new(states_line[0].line + 1, 1, "expected 'final' or 'initial' line")
    })?;
    let marker_keyword = if bottom_up { "final" } else { "initial" };
    let marked = parse_id_list_line(marker_line, marker_keyword)?;
    for (name, line, col) in &marked {
        if !declared.contains(&State::new(name.clone())) {
            return Err(ParseError::new(*line, *col, format!("undeclared state {}", name)));
        }
    }

    let transitions_line = it.next().ok_or_else(|| {
        ParseError::new(marker_line[0].line + 1, 1, "expected 'transitions' line")
    })?;
    if keyword(transitions_line) != Some("transitions") || transitions_line.len() != 1 {
        return Err(ParseError::new(
            transitions_line[0].line,
            transitions_line[0].col,
            "expected 'transitions'",
        ));
    }

    let mut body: Vec<&Vec<Token>> = Vec::new();
    let mut saw_end = false;
    for line in it {
        if keyword(line) == Some("end") && line.len() == 1 {
            saw_end = true;
            continue;
        }
        if saw_end {
            return Err(ParseError::new(
                line[0].line,
                line[0].col,
                "content after 'end'",
            ));
        }
        body.push(line);
    }
    if !saw_end {
        return Err(ParseError::new(
            transitions_line[0].line,
            transitions_line[0].col,
            "missing 'end'",
        ));
    }

    let check_state = |name: &str, line: usize, col: usize| -> Result<State, ParseError> {
        let q = State::new(name);
        if declared.contains(&q) {
            Ok(q)
        } else {
            Err(ParseError::new(line, col, format!("undeclared state {}", name)))
        }
    };
    let check_symbol = |name: &str, arity: usize, line: usize, col: usize| -> Result<(), ParseError> {
        match alphabet.rank(name) {
            None => Err(ParseError::new(line, col, format!("undeclared symbol {}", name))),
            Some(rank) if rank != arity => Err(ParseError::new(
                line,
                col,
                format!("symbol {} has rank {}, got {} arguments", name, rank, arity),
            )),
            Some(_) => Ok(()),
        }
    };

    let final_states: Vec<State> = marked.iter().map(|(n, _, _)| State::new(n.clone())).collect();
    if bottom_up {
        let mut transitions: Vec<Transition> = Vec::new();
        let mut seen = BTreeSet::new();
        for line in body {
            let mut cursor = Cursor::new(line);
            let (symbol, sline, scol) = cursor.ident("symbol")?;
            let mut args = Vec::new();
            if matches!(cursor.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
                cursor.expect(&TokenKind::LParen)?;
                loop {
                    let (arg, aline, acol) = cursor.ident("state")?;
                    args.push(check_state(&arg, aline, acol)?);
                    match cursor.peek().map(|t| &t.kind) {
                        Some(TokenKind::Comma) => {
                            cursor.expect(&TokenKind::Comma)?;
                        }
                        _ => break,
                    }
                }
                cursor.expect(&TokenKind::RParen)?;
            }
            check_symbol(&symbol, args.len(), sline, scol)?;
            cursor.expect(&TokenKind::Arrow)?;
            let (target, tline, tcol) = cursor.ident("target state")?;
            let target = check_state(&target, tline, tcol)?;
            cursor.at_end()?;
            let transition = Transition::new(symbol, args, target);
            if !seen.insert(transition.clone()) {
                return Err(ParseError::new(
                    sline,
                    scol,
                    format!("duplicate transition {}", transition),
                ));
            }
            transitions.push(transition);
        }
        let automaton =
            BottomUpAutomaton::new(alphabet, declared, final_states, transitions)
                .map_err(|e| ParseError::new(header[0].line, 1, e.to_string()))?;
        Ok(AutomatonDocument::bottom_up(name, automaton))
    } else {
        let mut rules: Vec<TdRule> = Vec::new();
        let mut seen = BTreeSet::new();
        for line in body {
            let mut cursor = Cursor::new(line);
            let (state, qline, qcol) = cursor.ident("state")?;
            let state = check_state(&state, qline, qcol)?;
            cursor.expect(&TokenKind::LParen)?;
            let (symbol, sline, scol) = cursor.ident("symbol")?;
            cursor.expect(&TokenKind::RParen)?;
            cursor.expect(&TokenKind::Arrow)?;
            cursor.expect(&TokenKind::LParen)?;
            let mut args = Vec::new();
            if !matches!(cursor.peek().map(|t| &t.kind), Some(TokenKind::RParen)) {
                loop {
                    let (arg, aline, acol) = cursor.ident("state")?;
                    args.push(check_state(&arg, aline, acol)?);
                    match cursor.peek().map(|t| &t.kind) {
                        Some(TokenKind::Comma) => {
                            cursor.expect(&TokenKind::Comma)?;
                        }
                        _ => break,
                    }
                }
            }
            cursor.expect(&TokenKind::RParen)?;
            cursor.at_end()?;
            check_symbol(&symbol, args.len(), sline, scol)?;
            let rule = TdRule { state, symbol, args };
            if !seen.insert(rule.clone()) {
                return Err(ParseError::new(
                    qline,
                    qcol,
                    format!("duplicate rule {}", rule),
                ));
            }
            rules.push(rule);
        }
        let automaton = TopDownAutomaton::new(alphabet, declared, final_states, rules)
            .map_err(|e| ParseError::new(header[0].line, 1, e.to_string()))?;
        Ok(AutomatonDocument::top_down(name, automaton))
    }
}

fn parse_alphabet_line(tokens: &[Token]) -> Result<RankedAlphabet, ParseError> {
    if keyword(tokens) != Some("alphabet") {
        return Err(ParseError::new(tokens[0].line, tokens[0].col, "expected 'alphabet'"));
    }
    let mut cursor = Cursor::new(tokens);
    cursor.next();
    let mut symbols = Vec::new();
    while cursor.peek().is_some() {
        let (name, _, _) = cursor.ident("symbol")?;
        cursor.expect(&TokenKind::Colon)?;
        let rank = match cursor.next() {
            Some(Token { kind: TokenKind::Number(n), .. }) => *n,
            _ => {
                cursor.pos = cursor.pos.saturating_sub(1);
                return Err(cursor.error_here("expected rank"));
            }
        };
        symbols.push((name, rank));
    }
    RankedAlphabet::new(symbols)
        .map_err(|e| ParseError::new(tokens[0].line, tokens[0].col, e.to_string()))
}

fn parse_id_list_line(
    tokens: &[Token],
    expected_keyword: &str,
) -> Result<Vec<(String, usize, usize)>, ParseError> {
    if keyword(tokens) != Some(expected_keyword) {
        return Err(ParseError::new(
            tokens[0].line,
            tokens[0].col,
            format!("expected '{}'", expected_keyword),
        ));
    }
    let mut out = Vec::new();
    for t in &tokens[1..] {
        match &t.kind {
            TokenKind::Ident(name) => out.push((name.clone(), t.line, t.col)),
            other => {
                return Err(ParseError::new(
                    t.line,
                    t.col,
                    format!("expected identifier, got '{}'", other),
                ))
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Term parsing
// ---------------------------------------------------------------------

/// Parses `f(t1,...,tk)` term syntax against an alphabet; rank-0 symbols
/// are bare identifiers.
pub fn parse_term(text: &str, alphabet: &RankedAlphabet) -> Result<RankedTree, ParseError> {
    let tokens = tokenize_line(text, 1)?;
    let mut cursor = Cursor::new(&tokens);
    let tree = parse_term_node(&mut cursor, alphabet)?;
    cursor.at_end()?;
    Ok(tree)
}

fn parse_term_node(
    cursor: &mut Cursor<'_>,
    alphabet: &RankedAlphabet,
) -> Result<RankedTree, ParseError> {
    let (symbol, line, col) = cursor.ident("symbol")?;
    let rank = alphabet
        .rank(&symbol)
        .ok_or_else(|| ParseError::new(line, col, format!("unknown symbol {}", symbol)))?;
    let mut children = Vec::new();
    if matches!(cursor.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
        cursor.expect(&TokenKind::LParen)?;
        loop {
            children.push(parse_term_node(cursor, alphabet)?);
            match cursor.peek().map(|t| &t.kind) {
                Some(TokenKind::Comma) => {
                    cursor.expect(&TokenKind::Comma)?;
                }
                _ => break,
            }
        }
        cursor.expect(&TokenKind::RParen)?;
    }
    if children.len() != rank {
        return Err(ParseError::new(
            line,
            col,
            format!(
                "symbol {} has rank {}, got {} arguments",
                symbol,
                rank,
                children.len()
            ),
        ));
    }
    Ok(RankedTree::new(symbol, children))
}

pub fn render_term(tree: &RankedTree) -> String {
    tree.to_string()
}

// ---------------------------------------------------------------------
// Rendering automata
// ---------------------------------------------------------------------

pub fn render_automaton(doc: &AutomatonDocument) -> String {
    let mut out = String::new();
    match &doc.automaton {
        AutomatonKind::BottomUp(a) => {
            out.push_str(&format!("bottomup {}\n", doc.name));
            out.push_str(&format!("alphabet {}\n", a.alphabet()));
            out.push_str(&render_id_line("states", a.states()));
            out.push_str(&render_id_line("final", a.finals()));
            out.push_str("transitions\n");
            for t in a.transitions() {
                out.push_str(&format!("{}\n", t));
            }
        }
        AutomatonKind::TopDown(a) => {
            out.push_str(&format!("topdown {}\n", doc.name));
            out.push_str(&format!("alphabet {}\n", a.alphabet()));
            out.push_str(&render_id_line("states", a.states()));
            out.push_str(&render_id_line("initial", a.initials()));
            out.push_str("transitions\n");
            for r in a.rules() {
                out.push_str(&format!("{}\n", r));
            }
        }
    }
    out.push_str("end\n");
    out
}

fn render_id_line(keyword: &str, ids: &BTreeSet<State>) -> String {
    let mut line = keyword.to_string();
    for id in ids {
        line.push(' ');
        line.push_str(id.as_str());
    }
    line.push('\n');
    line
}

// ---------------------------------------------------------------------
// Grammars
// ---------------------------------------------------------------------

/// A context-free grammar over brackets and violation symbols, as stored
/// on disk. Violation terminals are `v0`, `v1`, ... up to the declared
/// count; every other identifier is a nonterminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrammarDocument {
    pub name: String,
    pub start: String,
    pub violations: usize,
    pub productions: BTreeSet<Production>,
}

impl GrammarDocument {
    pub fn from_grammar(name: impl Into<String>, grammar: &ViolationGrammar) -> Self {
        GrammarDocument {
            name: name.into(),
            start: grammar.start.clone(),
            violations: grammar.violating_groups.len(),
            productions: grammar.productions.clone(),
        }
    }
}

pub fn render_grammar(doc: &GrammarDocument) -> String {
    let mut out = String::new();
    out.push_str(&format!("grammar {}\n", doc.name));
    out.push_str(&format!("start {}\n", doc.start));
    out.push_str(&format!("violations {}\n", doc.violations));
    out.push_str("productions\n");
    let mut productions: Vec<&Production> = doc.productions.iter().collect();
    productions.sort_by_key(|p| (p.lhs != doc.start, p.lhs.clone(), p.rhs.clone()));
    for p in productions {
        out.push_str(&format!("{}\n", p));
    }
    out.push_str("end\n");
    out
}

pub fn parse_grammar(text: &str) -> Result<GrammarDocument, ParseError> {
    let lines = significant_lines(text)?;
    if lines.len() < 5 {
        return Err(ParseError::new(1, 1, "truncated grammar"));
    }
    let mut it = lines.iter();

    let header = it.next().unwrap();
    let mut cursor = Cursor::new(header);
    let (kw, line, col) = cursor.ident("'grammar'")?;
    if kw != "grammar" {
        return Err(ParseError::new(line, col, "expected 'grammar'"));
    }
    let (name, _, _) = cursor.ident("grammar name")?;
    cursor.at_end()?;

    let start_line = it.next().unwrap();
    let mut cursor = Cursor::new(start_line);
    let (kw, line, col) = cursor.ident("'start'")?;
    if kw != "start" {
        return Err(ParseError::new(line, col, "expected 'start'"));
    }
    let (start, _, _) = cursor.ident("start symbol")?;
    cursor.at_end()?;

    let violations_line = it.next().unwrap();
    let mut cursor = Cursor::new(violations_line);
    let (kw, line, col) = cursor.ident("'violations'")?;
    if kw != "violations" {
        return Err(ParseError::new(line, col, "expected 'violations'"));
    }
    let violations = match cursor.next() {
        Some(Token { kind: TokenKind::Number(n), .. }) => *n,
        _ => return Err(cursor.error_here("expected violation count")),
    };
    cursor.at_end()?;

    let productions_line = it.next().unwrap();
    if keyword(productions_line) != Some("productions") || productions_line.len() != 1 {
        return Err(ParseError::new(
            productions_line[0].line,
            productions_line[0].col,
            "expected 'productions'",
        ));
    }

    let classify = |name: &str| -> RhsItem {
        if let Some(rest) = name.strip_prefix('v') {
            if let Ok(k) = rest.parse::<usize>() {
                if k < violations && rest.chars().all(|c| c.is_ascii_digit()) {
                    return RhsItem::Terminal(GrammarSymbol::Violation(k));
                }
            }
        }
        RhsItem::Nonterminal(name.to_string())
    };

    let mut productions = BTreeSet::new();
    let mut saw_end = false;
    for tokens in it {
        if keyword(tokens) == Some("end") && tokens.len() == 1 {
            saw_end = true;
            continue;
        }
        if saw_end {
            return Err(ParseError::new(tokens[0].line, tokens[0].col, "content after 'end'"));
        }
        let mut cursor = Cursor::new(tokens);
        let (lhs, _, _) = cursor.ident("nonterminal")?;
        cursor.expect(&TokenKind::Arrow)?;
        let mut rhs = Vec::new();
        let mut epsilon = false;
        while let Some(token) = cursor.next() {
            match &token.kind {
                TokenKind::LBracket => rhs.push(RhsItem::Terminal(GrammarSymbol::Open)),
                TokenKind::RBracket => rhs.push(RhsItem::Terminal(GrammarSymbol::Close)),
                TokenKind::Ident(name) => rhs.push(classify(name)),
                TokenKind::Epsilon => {
                    epsilon = true;
                }
                other => {
                    return Err(ParseError::new(
                        token.line,
                        token.col,
                        format!("unexpected '{}' in production", other),
                    ))
                }
            }
        }
        if epsilon && !rhs.is_empty() {
            return Err(ParseError::new(
                tokens[0].line,
                tokens[0].col,
                "ε must stand alone",
            ));
        }
        productions.insert(Production { lhs, rhs });
    }
    if !saw_end {
        return Err(ParseError::new(
            productions_line[0].line,
            productions_line[0].col,
            "missing 'end'",
        ));
    }
    Ok(GrammarDocument {
        name,
        start,
        violations,
        productions,
    })
}

// ---------------------------------------------------------------------
// Decompositions and traces
// ---------------------------------------------------------------------

/// Writes one `topdown` file per component plus a `manifest` listing them.
pub fn render_decomposition(
    decomposition: &Decomposition,
    directory: &Path,
) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(directory)?;
    let mut names = Vec::new();
    for (i, component) in decomposition.components.iter().enumerate() {
        let file = format!("component_{}.ta", i);
        let doc = AutomatonDocument::top_down(format!("component_{}", i), component.clone());
        std::fs::write(directory.join(&file), render_automaton(&doc))?;
        names.push(file);
    }
    let mut manifest = String::new();
    for name in &names {
        manifest.push_str(name);
        manifest.push('\n');
    }
    std::fs::write(directory.join("manifest"), manifest)?;
    Ok(names)
}

pub fn render_trace(trace: &EliminationTrace) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "eliminations: {} ({} initial, {} cleanup)\n",
        trace.steps.len(),
        trace.phase1_steps,
        trace.phase2_steps()
    ));
    for (i, step) in trace.steps.iter().enumerate() {
        out.push_str(&format!(
            "step {}: group {} -> {} with {} transitions\n",
            i + 1,
            step.group.symbol,
            step.group.target,
            step.group.tuples.len()
        ));
        let fresh: Vec<&str> = step.fresh.iter().map(State::as_str).collect();
        out.push_str(&format!("  fresh {}\n", fresh.join(" ")));
        out.push_str(&format!("  substitute {}\n", step.substitute));
        for adapter in &step.adapters {
            out.push_str(&format!("  adapter {}\n", adapter));
        }
        if step.verified_bound > 0 {
            out.push_str(&format!(
                "  language preserved up to size {}\n",
                step.verified_bound
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{anchored_products, eight_trees, swap_pair};
    use crate::fudt::build_violation_grammar;
    use crate::minimize::minimize;

    #[test]
    fn parse_paper_style_listing_keeps_declared_states() {
        // The canonical listing declares the vestigial q0 even though no
        // transition mentions it; parsing keeps all five declared states.
        let text = "\
# four trees under a fixed left leaf
bottomup products
alphabet f:2 a:0 b:0
states q0 qa qb q qf
final qf
transitions
a -> qa
b -> qb
f(qa,qb) -> q
f(qb,qa) -> q
f(qa,qa) -> q
f(qb,qb) -> q
f(qa,q) -> qf
end
";
        let doc = parse_automaton(text).unwrap();
        let a = doc.as_bottom_up().unwrap();
        assert_eq!(a.states().len(), 5);
        assert_eq!(a.transitions().len(), 7);
        assert!(a.is_deterministic());
    }

    #[test]
    fn parse_minimal_single_transition_file() {
        let text = "bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q\nend\n";
        let doc = parse_automaton(text).unwrap();
        let a = doc.as_bottom_up().unwrap();
        assert_eq!(a.transitions().len(), 1);
        assert_eq!(doc.name, "t");
    }

    #[test]
    fn roundtrip_fixture_automata() {
        for automaton in [swap_pair(), anchored_products(), eight_trees()] {
            let doc = AutomatonDocument::bottom_up("x", automaton);
            let text = render_automaton(&doc);
            assert_eq!(parse_automaton(&text).unwrap(), doc);
        }
    }

    #[test]
    fn roundtrip_topdown() {
        let m = minimize(&anchored_products()).unwrap();
        let (dta, _) = crate::construct::dta_pipeline(&m, 8).unwrap();
        let doc = AutomatonDocument::top_down("x", dta);
        let text = render_automaton(&doc);
        assert_eq!(parse_automaton(&text).unwrap(), doc);
    }

    #[test]
    fn render_orders_transitions() {
        let doc = AutomatonDocument::bottom_up("pair", swap_pair());
        let text = render_automaton(&doc);
        let qa_qb = text.find("f(qa,qb) -> qf").unwrap();
        let qb_qa = text.find("f(qb,qa) -> qf").unwrap();
        assert!(qa_qb < qb_qa);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let text = "bottomup t\nalphabet a:0 f:2\nstates q\nfinal q\ntransitions\nf(q) -> q\nend\n";
        let err = parse_automaton(text).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("rank"));

        let text = "bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> z\nend\n";
        let err = parse_automaton(text).unwrap_err();
        assert!(err.message.contains("undeclared state"));

        let text =
            "bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q\na -> q\nend\n";
        let err = parse_automaton(text).unwrap_err();
        assert!(err.message.contains("duplicate transition"));
    }

    #[test]
    fn parse_terms() {
        let alpha = crate::fixtures::fab_alphabet();
        let t = parse_term("f(a,b)", &alpha).unwrap();
        assert_eq!(t.size(), 3);
        assert_eq!(render_term(&t), "f(a,b)");

        let t = parse_term("f(f(a,b),f(f(a,b),f(a,b)))", &alpha).unwrap();
        assert_eq!(t.size(), 11);

        let err = parse_term("f(a)", &alpha).unwrap_err();
        assert!(err.message.contains("rank"));
        let err = parse_term("g(a,b)", &alpha).unwrap_err();
        assert!(err.message.contains("unknown symbol"));
    }

    #[test]
    fn buffered_state_names_roundtrip() {
        let text = "\
bottomup buffered
alphabet f:2 a:0
states qa@[] p@[1] p@[2.1] qf@[1,2.1]
final qf@[1,2.1]
transitions
a -> qa@[]
f(qa@[],qa@[]) -> p@[1]
f(qa@[],qa@[]) -> p@[2.1]
f(p@[1],p@[2.1]) -> qf@[1,2.1]
end
";
        let doc = parse_automaton(text).unwrap();
        let rendered = render_automaton(&doc);
        assert_eq!(parse_automaton(&rendered).unwrap(), doc);
    }

    #[test]
    fn grammar_rendering_of_swap_pair() {
        let m = minimize(&swap_pair()).unwrap();
        let grammar = build_violation_grammar(&m);
        let doc = GrammarDocument::from_grammar("pair", &grammar);
        let text = render_grammar(&doc);
        for expected in [
            "S -> [ qf ]",
            "qf -> v0 [ qa qb ]",
            "qf -> v0 [ qb qa ]",
            "qa -> ε",
            "qb -> ε",
        ] {
            assert!(text.contains(expected), "missing {:?} in {}", expected, text);
        }
        assert_eq!(parse_grammar(&text).unwrap(), doc);
    }

    #[test]
    fn whitespace_is_insignificant_within_lines() {
        let a = "bottomup t\nalphabet a:0 f:2\nstates q p\nfinal p\ntransitions\nf(q,q) -> p\na -> q\nend\n";
        let b = "bottomup   t\n alphabet  a : 0   f : 2\nstates   q   p\nfinal p\ntransitions\n f ( q , q )->p\n a->q\nend\n";
        assert_eq!(parse_automaton(a).unwrap(), parse_automaton(b).unwrap());
    }
}
