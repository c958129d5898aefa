//! Hand-written lexer and recursive-descent parser for the CNF fragment of
//! TPTP, plus the TSTP annotation terms (`inference(...)`, `file(...)`) that
//! provers attach to derived records.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{AnnotatedClause, Clause, Literal, Role, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("include '{include}' from {from} not found (searched {searched:?})")]
    MissingInclude {
        include: String,
        from: PathBuf,
        searched: Vec<PathBuf>,
    },
    #[error("include nesting deeper than {0} levels")]
    TooDeep(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Dollar(String),
    Quoted(String),
    Distinct(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Pipe,
    Tilde,
    Eq,
    Neq,
    Colon,
    Other(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lower(s)
            | Tok::Upper(s)
            | Tok::Dollar(s)
            | Tok::Quoted(s)
            | Tok::Distinct(s)
            | Tok::Number(s)
            | Tok::Other(s) => write!(f, "'{s}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Tilde => f.write_str("'~'"),
            Tok::Eq => f.write_str("'='"),
            Tok::Neq => f.write_str("'!='"),
            Tok::Colon => f.write_str("':'"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };

    while i < chars.len() {
        let ch = chars[i];
        let pos = Pos { line, column: col };
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };

        if ch.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if ch == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if ch == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(pos.line, pos.column, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }

        let word_end = |start: usize| {
            let mut j = start;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            j
        };

        let (tok, len) = if ch.is_ascii_lowercase() {
            let j = word_end(i);
            (Tok::Lower(chars[i..j].iter().collect()), j - i)
        } else if ch.is_ascii_uppercase() {
            let j = word_end(i);
            (Tok::Upper(chars[i..j].iter().collect()), j - i)
        } else if ch == '$' {
            let mut j = i + 1;
            if chars.get(j) == Some(&'$') {
                j += 1;
            }
            let j = word_end(j);
            if j == i + 1 {
                return Err(err(pos.line, pos.column, "lone '$'".into()));
            }
            (Tok::Dollar(chars[i..j].iter().collect()), j - i)
        } else if ch == '\'' || ch == '"' {
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None => {
                        return Err(err(pos.line, pos.column, "unterminated quoted token".into()))
                    }
                    Some('\\') => j += 2,
                    Some(c) if *c == ch => break,
                    Some('\n') => {
                        return Err(err(pos.line, pos.column, "newline inside quotes".into()))
                    }
                    Some(_) => j += 1,
                }
            }
            let raw: String = chars[i..=j].iter().collect();
            let tok = if ch == '\'' {
                Tok::Quoted(raw)
            } else {
                Tok::Distinct(raw)
            };
            (tok, j + 1 - i)
        } else if ch.is_ascii_digit()
            || ((ch == '-' || ch == '+')
                && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()))
        {
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_ascii_digit()
                    || matches!(chars[j], '.' | '/' | 'e' | 'E')
                        && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit()))
            {
                j += 1;
            }
            (Tok::Number(chars[i..j].iter().collect()), j - i)
        } else {
            match ch {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '|' => (Tok::Pipe, 1),
                ':' => (Tok::Colon, 1),
                '~' if matches!(chars.get(i + 1), Some('|') | Some('&')) => {
                    (Tok::Other(chars[i..i + 2].iter().collect()), 2)
                }
                '~' => (Tok::Tilde, 1),
                '=' if chars.get(i + 1) == Some(&'>') => (Tok::Other("=>".into()), 2),
                '=' => (Tok::Eq, 1),
                '!' if chars.get(i + 1) == Some(&'=') => (Tok::Neq, 2),
                '<' | '>' | '&' | '!' | '?' | '^' | '@' | '*' | '+' | '-' => {
                    let mut j = i + 1;
                    while j < chars.len() && matches!(chars[j], '<' | '>' | '=' | '~' | '-') {
                        j += 1;
                    }
                    (Tok::Other(chars[i..j].iter().collect()), j - i)
                }
                other => {
                    return Err(err(
                        pos.line,
                        pos.column,
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        };
        out.push((tok, pos));
        advance(&mut i, &mut line, &mut col, len);
    }
    Ok(out)
}

/// A TSTP general term, as used in record sources and useful-info lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneralTerm {
    /// Atomic word, number or quoted token with optional arguments.
    Word(String, Vec<GeneralTerm>),
    Var(String),
    List(Vec<GeneralTerm>),
    Colon(Box<GeneralTerm>, Box<GeneralTerm>),
    /// `$cnf(...)`, `$fot(...)` and friends, kept as raw text.
    Formula(String),
}

impl GeneralTerm {
    /// For `inference(rule, info, parents)`: the rule name and every parent
    /// record name, looking through nested inferences.
    pub fn inference(&self) -> Option<(String, Vec<String>)> {
        match self {
            GeneralTerm::Word(w, args) if w == "inference" && args.len() == 3 => {
                let rule = match &args[0] {
                    GeneralTerm::Word(r, _) => r.clone(),
                    _ => String::from("unknown"),
                };
                let mut parents = Vec::new();
                collect_parents(&args[2], &mut parents);
                Some((rule, parents))
            }
            _ => None,
        }
    }

    pub fn is_file_source(&self) -> bool {
        matches!(self, GeneralTerm::Word(w, _) if w == "file")
    }

    pub fn is_introduced(&self) -> bool {
        matches!(self, GeneralTerm::Word(w, _) if w == "introduced")
    }
}

fn collect_parents(t: &GeneralTerm, out: &mut Vec<String>) {
    match t {
        GeneralTerm::List(items) => items.iter().for_each(|i| collect_parents(i, out)),
        GeneralTerm::Word(w, args) if args.is_empty() => out.push(w.clone()),
        GeneralTerm::Word(w, args) if w == "inference" && args.len() == 3 => {
            collect_parents(&args[2], out)
        }
        GeneralTerm::Colon(head, _) => collect_parents(head, out),
        // theory(equality), file(...), introduced(...) and the like
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TptpRecord {
    pub annotated: AnnotatedClause,
    pub source: Option<GeneralTerm>,
    /// 1-based line where the record starts.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Record(TptpRecord),
    Include {
        path: String,
        selection: Option<Vec<String>>,
    },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let end = match text.lines().enumerate().last() {
            Some((i, l)) => Pos {
                line: i + 1,
                column: l.chars().count() + 1,
            },
            None => Pos { line: 1, column: 1 },
        };
        Ok(Parser { toks, at: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let p = self.pos();
        ParseError {
            line: p.line,
            column: p.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(&want.to_string()))
        }
    }

    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Lower(s)) | Some(Tok::Quoted(s)) | Some(Tok::Number(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let start = self.pos();
        let head = match self.peek() {
            Some(Tok::Lower(w)) => w.clone(),
            _ => return Err(self.unexpected("'cnf' or 'include'")),
        };
        match head.as_str() {
            "include" => {
                self.at += 1;
                self.expect(Tok::LParen)?;
                let path = match self.next() {
                    Some(Tok::Quoted(q)) => unquote(&q),
                    _ => {
                        self.at = self.at.saturating_sub(1);
                        return Err(self.unexpected("a quoted file name"));
                    }
                };
                let mut selection = None;
                if self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                    self.expect(Tok::LBracket)?;
                    let mut names = Vec::new();
                    if self.peek() != Some(&Tok::RBracket) {
                        loop {
                            names.push(self.name()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.at += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RBracket)?;
                    selection = Some(names);
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                Ok(Statement::Include { path, selection })
            }
            "cnf" => {
                self.at += 1;
                self.expect(Tok::LParen)?;
                let name = self.name()?;
                self.expect(Tok::Comma)?;
                let role_word = match self.peek() {
                    Some(Tok::Lower(w)) => w.clone(),
                    _ => return Err(self.unexpected("a role")),
                };
                let role = Role::parse(&role_word)
                    .ok_or_else(|| self.error(format!("unsupported role '{role_word}'")))?;
                self.at += 1;
                self.expect(Tok::Comma)?;
                let clause = self.cnf_formula()?;
                let mut source = None;
                if self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                    source = Some(self.general_term()?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                        self.general_term()?;
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                Ok(Statement::Record(TptpRecord {
                    annotated: AnnotatedClause::new(name, role, clause),
                    source,
                    line: start.line,
                }))
            }
            "fof" | "tff" | "thf" | "tcf" | "tpi" => {
                Err(self.error(format!("unsupported formula language '{head}'")))
            }
            other => Err(self.error(format!("unknown statement '{other}'"))),
        }
    }

    fn cnf_formula(&mut self) -> Result<Clause, ParseError> {
        // `(a|b)` and `a|b` are both legal; a leading '(' is only the clause
        // wrapper when the disjunction inside it is followed by ')'.
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            let c = self.disjunction()?;
            self.expect(Tok::RParen)?;
            Ok(c)
        } else {
            self.disjunction()
        }
    }

    fn disjunction(&mut self) -> Result<Clause, ParseError> {
        let mut lits = Vec::new();
        loop {
            if let Some(l) = self.literal()? {
                lits.push(l);
            }
            if self.peek() == Some(&Tok::Pipe) {
                self.at += 1;
            } else {
                break;
            }
        }
        Ok(Clause::new(lits))
    }

    /// `None` for `$false`, which contributes nothing to a disjunction.
    fn literal(&mut self) -> Result<Option<Literal>, ParseError> {
        if self.peek() == Some(&Tok::Tilde) {
            self.at += 1;
            let wrapped = self.peek() == Some(&Tok::LParen);
            if wrapped {
                self.at += 1;
            }
            let inner = self.literal()?;
            if wrapped {
                self.expect(Tok::RParen)?;
            }
            return match inner {
                Some(l) => Ok(Some(l.negated())),
                None => Ok(Some(Literal::new(true, "$true", Vec::new()))),
            };
        }
        let start = self.pos();
        let lhs = self.term()?;
        let op = match self.peek() {
            Some(Tok::Eq) => Some(true),
            Some(Tok::Neq) => Some(false),
            _ => None,
        };
        if let Some(positive) = op {
            self.at += 1;
            let rhs = self.term()?;
            return Ok(Some(Literal::equality(positive, lhs, rhs)));
        }
        match lhs {
            Term::Var(v) => Err(ParseError {
                line: start.line,
                column: start.column,
                message: format!("variable '{v}' used as a literal"),
            }),
            Term::App(p, args) if p == "$false" && args.is_empty() => Ok(None),
            Term::App(p, args) => Ok(Some(Literal::new(true, p, args))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Upper(v)) => {
                self.at += 1;
                Ok(Term::Var(v))
            }
            Some(Tok::Lower(f))
            | Some(Tok::Quoted(f))
            | Some(Tok::Dollar(f))
            | Some(Tok::Number(f))
            | Some(Tok::Distinct(f)) => {
                self.at += 1;
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::LParen) {
                    self.at += 1;
                    loop {
                        args.push(self.term()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.at += 1;
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(Term::App(f, args))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn general_term(&mut self) -> Result<GeneralTerm, ParseError> {
        let head = if self.peek() == Some(&Tok::LBracket) {
            self.at += 1;
            let mut items = Vec::new();
            if self.peek() != Some(&Tok::RBracket) {
                loop {
                    items.push(self.general_term()?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket)?;
            GeneralTerm::List(items)
        } else {
            match self.next() {
                Some(Tok::Upper(v)) => GeneralTerm::Var(v),
                Some(Tok::Dollar(d)) if self.peek() == Some(&Tok::LParen) => {
                    GeneralTerm::Formula(format!("{d}({})", self.skip_balanced()?))
                }
                Some(Tok::Lower(w))
                | Some(Tok::Quoted(w))
                | Some(Tok::Number(w))
                | Some(Tok::Distinct(w))
                | Some(Tok::Dollar(w)) => {
                    let mut args = Vec::new();
                    if self.peek() == Some(&Tok::LParen) {
                        self.at += 1;
                        loop {
                            args.push(self.general_term()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.at += 1;
                            } else {
                                break;
                            }
                        }
                        self.expect(Tok::RParen)?;
                    }
                    GeneralTerm::Word(w, args)
                }
                _ => {
                    self.at = self.at.saturating_sub(1);
                    return Err(self.unexpected("a general term"));
                }
            }
        };
        if self.peek() == Some(&Tok::Colon) {
            self.at += 1;
            let tail = self.general_term()?;
            return Ok(GeneralTerm::Colon(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    /// Consumes `( ... )` and returns the token text inside it.
    fn skip_balanced(&mut self) -> Result<String, ParseError> {
        self.expect(Tok::LParen)?;
        let mut depth = 1usize;
        let mut parts = Vec::new();
        while depth > 0 {
            match self.next() {
                None => return Err(self.error("unbalanced parentheses")),
                Some(Tok::LParen) => {
                    depth += 1;
                    parts.push("(".to_string());
                }
                Some(Tok::RParen) => {
                    depth -= 1;
                    if depth > 0 {
                        parts.push(")".to_string());
                    }
                }
                Some(t) => parts.push(t.to_string().trim_matches('\'').to_string()),
            }
        }
        Ok(parts.concat())
    }
}

fn unquote(q: &str) -> String {
    let inner = &q[1..q.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut esc = false;
    for ch in inner.chars() {
        if esc {
            out.push(ch);
            esc = false;
        } else if ch == '\\' {
            esc = true;
        } else {
            out.push(ch);
        }
    }
    out
}

/// Parses a whole TPTP/TSTP text into statements.
pub fn parse_tptp(text: &str) -> Result<Vec<Statement>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Parses exactly one `cnf(name,role,formula).` record.
pub fn parse_annotated_clause(text: &str) -> Result<AnnotatedClause, ParseError> {
    let mut p = Parser::new(text)?;
    let stmt = p.statement()?;
    if !p.at_end() {
        return Err(p.error("trailing input after record"));
    }
    match stmt {
        Statement::Record(r) => Ok(r.annotated),
        Statement::Include { .. } => Err(ParseError {
            line: 1,
            column: 1,
            message: "expected a cnf record, found include".into(),
        }),
    }
}

/// Parses a bare clause such as `(p(X1)|~q(a))` or `p(X1) | ~q(a)`.
pub fn parse_clause(text: &str) -> Result<Clause, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.cnf_formula()?;
    if !p.at_end() {
        return Err(p.error("trailing input after clause"));
    }
    Ok(c)
}

const MAX_INCLUDE_DEPTH: usize = 32;

/// Loads a TPTP file, resolving `include(...)` directives.
///
/// Include paths are looked up under `root` first (the TPTP convention),
/// then relative to the including file. Record domains default to the
/// leading uppercase letters of the top-level file name (`SET001-0.ax`
/// gives `SET`).
pub fn load_tptp_file(path: &Path, root: Option<&Path>) -> Result<Vec<AnnotatedClause>, LoadError> {
    let domain = domain_code(path);
    let mut out = Vec::new();
    load_into(path, root, None, 0, &mut out)?;
    for c in &mut out {
        if c.source_domain.is_empty() {
            c.source_domain = domain.clone();
        }
    }
    Ok(out)
}

fn domain_code(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.chars().take_while(|c| c.is_ascii_uppercase()).collect())
        .unwrap_or_default()
}

fn load_into(
    path: &Path,
    root: Option<&Path>,
    selection: Option<&[String]>,
    depth: usize,
    out: &mut Vec<AnnotatedClause>,
) -> Result<(), LoadError> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(LoadError::TooDeep(MAX_INCLUDE_DEPTH));
    }
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stmts = parse_tptp(&text).map_err(|source| LoadError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    for stmt in stmts {
        match stmt {
            Statement::Record(r) => {
                let keep = selection.is_none_or(|sel| sel.contains(&r.annotated.name));
                if keep {
                    out.push(r.annotated);
                }
            }
            Statement::Include {
                path: inc,
                selection: sel,
            } => {
                let mut searched = Vec::new();
                if let Some(r) = root {
                    searched.push(r.join(&inc));
                }
                if let Some(dir) = path.parent() {
                    searched.push(dir.join(&inc));
                }
                let found = searched.iter().find(|p| p.is_file()).cloned();
                match found {
                    Some(p) => load_into(&p, root, sel.as_deref(), depth + 1, out)?,
                    None => {
                        return Err(LoadError::MissingInclude {
                            include: inc,
                            from: path.to_path_buf(),
                            searched,
                        })
                    }
                }
            }
        }
    }
    Ok(())
}
