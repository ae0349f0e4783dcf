//! The TV GUI DSL: AST, canonical printer and recursive-descent parser.
//!
//! ```text
//! document  := statement*
//! statement := ("Row" | "Col") "(" group ("," group)* ")"
//! group     := Category "(" properties ")"
//! ```
//!
//! Properties are positional and fixed per category:
//!
//! | category                       | properties                    |
//! |--------------------------------|-------------------------------|
//! | `PicInfo`, `Grid`, `List`, `Player` | size, source, title     |
//! | `IcoInfo`                      | size, source, text            |
//! | `Tab`                          | text, optional `selected`     |
//! | `Srch`                         | text                          |
//! | `Chan`, `ToolBar`              | one or more texts             |
//!
//! Sizes are the bare words `large`, `medium`, `small`. Strings are double
//! quoted with the escapes `\"`, `\\`, `\n`, `\r`, `\t` and `\u{hex}`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::LayoutSolution;
use crate::transform::{SizeClass, TvGroupCategory, TvItem, TvPage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DslLayout {
    Row,
    Col,
}

impl DslLayout {
    fn token(self) -> &'static str {
        match self {
            DslLayout::Row => "Row",
            DslLayout::Col => "Col",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DslCategory {
    ToolBar,
    List,
    Tab,
    Srch,
    Grid,
    Player,
    PicInfo,
    IcoInfo,
    Chan,
}

impl DslCategory {
    pub const ALL: [DslCategory; 9] = [
        DslCategory::ToolBar,
        DslCategory::List,
        DslCategory::Tab,
        DslCategory::Srch,
        DslCategory::Grid,
        DslCategory::Player,
        DslCategory::PicInfo,
        DslCategory::IcoInfo,
        DslCategory::Chan,
    ];

    pub fn token(self) -> &'static str {
        match self {
            DslCategory::ToolBar => "ToolBar",
            DslCategory::List => "List",
            DslCategory::Tab => "Tab",
            DslCategory::Srch => "Srch",
            DslCategory::Grid => "Grid",
            DslCategory::Player => "Player",
            DslCategory::PicInfo => "PicInfo",
            DslCategory::IcoInfo => "IcoInfo",
            DslCategory::Chan => "Chan",
        }
    }

    fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.token() == s)
    }
}

impl From<TvGroupCategory> for DslCategory {
    fn from(c: TvGroupCategory) -> Self {
        match c {
            TvGroupCategory::IconInfo => DslCategory::IcoInfo,
            TvGroupCategory::ToolBar => DslCategory::ToolBar,
            TvGroupCategory::Search => DslCategory::Srch,
            TvGroupCategory::TabLayout => DslCategory::Tab,
            TvGroupCategory::Channel => DslCategory::Chan,
            TvGroupCategory::GridLayout => DslCategory::Grid,
            TvGroupCategory::PicInfo => DslCategory::PicInfo,
            TvGroupCategory::VideoMusicPlayer => DslCategory::Player,
            TvGroupCategory::ListView => DslCategory::List,
        }
    }
}

impl From<DslCategory> for TvGroupCategory {
    fn from(c: DslCategory) -> Self {
        match c {
            DslCategory::IcoInfo => TvGroupCategory::IconInfo,
            DslCategory::ToolBar => TvGroupCategory::ToolBar,
            DslCategory::Srch => TvGroupCategory::Search,
            DslCategory::Tab => TvGroupCategory::TabLayout,
            DslCategory::Chan => TvGroupCategory::Channel,
            DslCategory::Grid => TvGroupCategory::GridLayout,
            DslCategory::PicInfo => TvGroupCategory::PicInfo,
            DslCategory::Player => TvGroupCategory::VideoMusicPlayer,
            DslCategory::List => TvGroupCategory::ListView,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DslProperty {
    Title(String),
    Size(SizeClass),
    Text(String),
    Selected,
    Source(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DslGroup {
    pub category: DslCategory,
    pub properties: Vec<DslProperty>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DslStatement {
    pub layout: DslLayout,
    pub groups: Vec<DslGroup>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DslDocument {
    pub statements: Vec<DslStatement>,
}

/// Byte range of one statement, group or property in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DslSourceSpan {
    pub statement: usize,
    pub group: Option<usize>,
    pub property: Option<usize>,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.column)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("layout places item {0}, which the page does not contain")]
    UnknownItem(String),
    #[error("layout refers to group {0}, which the page does not contain")]
    UnknownGroup(usize),
}

// ---- printing ----

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_group(out: &mut String, g: &DslGroup) {
    out.push_str(g.category.token());
    out.push('(');
    for (i, p) in g.properties.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match p {
            DslProperty::Title(s) | DslProperty::Text(s) | DslProperty::Source(s) => write_string(out, s),
            DslProperty::Size(size) => out.push_str(size.as_str()),
            DslProperty::Selected => out.push_str("selected"),
        }
    }
    out.push(')');
}

/// Canonical text: one statement per line, `", "` between arguments.
pub fn format_document(doc: &DslDocument) -> String {
    let mut out = String::new();
    for st in &doc.statements {
        out.push_str(st.layout.token());
        out.push('(');
        for (i, g) in st.groups.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_group(&mut out, g);
        }
        out.push_str(")\n");
    }
    out
}

impl fmt::Display for DslDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_document(self))
    }
}

// ---- emission from a laid-out page ----

fn card(category: DslCategory, size: SizeClass, item: &TvItem) -> DslGroup {
    let last = if category == DslCategory::IcoInfo {
        DslProperty::Text(item.title.clone())
    } else {
        DslProperty::Title(item.title.clone())
    };
    DslGroup {
        category,
        properties: vec![DslProperty::Size(size), DslProperty::Source(item.source.clone()), last],
    }
}

fn row_groups(category: DslCategory, size: SizeClass, items: &[&TvItem]) -> Vec<DslGroup> {
    match category {
        DslCategory::ToolBar | DslCategory::Chan => vec![DslGroup {
            category,
            properties: items.iter().map(|i| DslProperty::Text(i.title.clone())).collect(),
        }],
        DslCategory::Srch => items
            .iter()
            .map(|i| DslGroup {
                category,
                properties: vec![DslProperty::Text(i.title.clone())],
            })
            .collect(),
        DslCategory::Tab => items
            .iter()
            .map(|i| {
                let mut properties = vec![DslProperty::Text(i.title.clone())];
                if i.selected {
                    properties.push(DslProperty::Selected);
                }
                DslGroup { category, properties }
            })
            .collect(),
        _ => items.iter().map(|i| card(category, size, i)).collect(),
    }
}

/// One `Row` per realized row of each unit; the Channel rail becomes a
/// single `Col`.
pub fn build_document(page: &TvPage, solution: &LayoutSolution) -> Result<DslDocument, EmitError> {
    let by_id: HashMap<&str, &TvItem> = page.items().map(|i| (i.id.as_str(), i)).collect();
    let mut statements = Vec::new();
    for unit in &solution.units {
        let group = page.groups.get(unit.group).ok_or(EmitError::UnknownGroup(unit.group))?;
        let category = DslCategory::from(group.category);
        let lookup = |range: std::ops::Range<usize>| -> Result<Vec<&TvItem>, EmitError> {
            solution.items[range]
                .iter()
                .map(|p| {
                    by_id
                        .get(p.id.as_str())
                        .copied()
                        .ok_or_else(|| EmitError::UnknownItem(p.id.clone()))
                })
                .collect()
        };
        if category == DslCategory::Chan {
            let start = unit.rows.first().map_or(0, |r| r.start);
            let end = unit.rows.last().map_or(0, |r| r.end);
            statements.push(DslStatement {
                layout: DslLayout::Col,
                groups: row_groups(category, group.size_class, &lookup(start..end)?),
            });
            continue;
        }
        for row in &unit.rows {
            statements.push(DslStatement {
                layout: DslLayout::Row,
                groups: row_groups(category, group.size_class, &lookup(row.clone())?),
            });
        }
    }
    Ok(DslDocument { statements })
}

pub fn emit_dsl(page: &TvPage, solution: &LayoutSolution) -> Result<String, EmitError> {
    Ok(format_document(&build_document(page, solution)?))
}

// ---- lexing ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    start: usize,
    end: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error_at(&self, at: usize, expected: &[&str], found: String) -> SyntaxError {
        let (line, column) = line_col(self.src, at);
        SyntaxError {
            line,
            column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn next(&mut self) -> Result<Spanned, SyntaxError> {
        while self.peek_char().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let start = self.pos;
        let Some(c) = self.bump() else {
            return Ok(Spanned {
                tok: Tok::Eof,
                start,
                end: start,
            });
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '"' => Tok::Str(self.string(start)?),
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            c => return Err(self.error_at(start, &["identifier", "string", "`(`", "`)`", "`,`"], format!("{c:?}"))),
        };
        Ok(Spanned {
            tok,
            start,
            end: self.pos,
        })
    }

    fn string(&mut self, open: usize) -> Result<String, SyntaxError> {
        let mut out = String::new();
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(self.error_at(open, &["closing `\"`"], "end of input".into())),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some('u') => out.push(self.unicode_escape(at)?),
                    other => {
                        let found = other.map_or("end of input".into(), |c| format!("{c:?}"));
                        return Err(self.error_at(at, &["escape"], found));
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn unicode_escape(&mut self, at: usize) -> Result<char, SyntaxError> {
        let bad = |lx: &Self| lx.error_at(at, &["`\\u{hex}`"], "malformed unicode escape".into());
        if self.bump() != Some('{') {
            return Err(bad(self));
        }
        let digits_start = self.pos;
        while self.peek_char().is_some_and(|c| c.is_ascii_hexdigit()) {
            self.bump();
        }
        let digits = &self.src[digits_start..self.pos];
        if digits.is_empty() || digits.len() > 6 || self.bump() != Some('}') {
            return Err(bad(self));
        }
        u32::from_str_radix(digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| bad(self))
    }
}

fn line_col(src: &str, at: usize) -> (usize, usize) {
    let before = &src[..at];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

// ---- parsing ----

struct Parser<'a> {
    lexer: Lexer<'a>,
    look: Spanned,
    /// End offset of the last consumed token.
    last_end: usize,
    spans: Vec<DslSourceSpan>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, SyntaxError> {
        let mut lexer = Lexer { src, pos: 0 };
        let look = lexer.next()?;
        Ok(Self {
            lexer,
            look,
            last_end: 0,
            spans: Vec::new(),
        })
    }

    fn advance(&mut self) -> Result<Spanned, SyntaxError> {
        let next = self.lexer.next()?;
        self.last_end = self.look.end;
        Ok(std::mem::replace(&mut self.look, next))
    }

    fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        self.lexer.error_at(self.look.start, expected, self.look.tok.describe())
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<Spanned, SyntaxError> {
        if self.look.tok == tok {
            self.advance()
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn string(&mut self, what: &str) -> Result<String, SyntaxError> {
        match &self.look.tok {
            Tok::Str(_) => match self.advance()?.tok {
                Tok::Str(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn document(&mut self) -> Result<DslDocument, SyntaxError> {
        let mut statements = Vec::new();
        while self.look.tok != Tok::Eof {
            statements.push(self.statement(statements.len())?);
        }
        Ok(DslDocument { statements })
    }

    fn statement(&mut self, index: usize) -> Result<DslStatement, SyntaxError> {
        let start = self.look.start;
        let layout = match &self.look.tok {
            Tok::Ident(s) if s == "Row" => DslLayout::Row,
            Tok::Ident(s) if s == "Col" => DslLayout::Col,
            _ => return Err(self.unexpected(&["`Row`", "`Col`"])),
        };
        self.advance()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut groups = vec![self.group(index, 0)?];
        while self.look.tok == Tok::Comma {
            self.advance()?;
            groups.push(self.group(index, groups.len())?);
        }
        let close = self.expect(Tok::RParen, "`)`")?;
        self.spans.push(DslSourceSpan {
            statement: index,
            group: None,
            property: None,
            start,
            end: close.end,
        });
        Ok(DslStatement { layout, groups })
    }

    fn group(&mut self, statement: usize, index: usize) -> Result<DslGroup, SyntaxError> {
        let start = self.look.start;
        let category = match &self.look.tok {
            Tok::Ident(s) => DslCategory::from_token(s),
            _ => None,
        };
        let Some(category) = category else {
            let tokens: Vec<String> = DslCategory::ALL.iter().map(|c| format!("`{}`", c.token())).collect();
            let names: Vec<&str> = tokens.iter().map(String::as_str).collect();
            return Err(self.unexpected(&names));
        };
        self.advance()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut properties = Vec::new();
        let mut prop = |p: &mut Self, value: DslProperty, start: usize| {
            p.spans.push(DslSourceSpan {
                statement,
                group: Some(index),
                property: Some(properties.len()),
                start,
                end: p.last_end,
            });
            properties.push(value);
        };
        match category {
            DslCategory::PicInfo
            | DslCategory::Grid
            | DslCategory::List
            | DslCategory::Player
            | DslCategory::IcoInfo => {
                let at = self.look.start;
                let size = self.size()?;
                prop(self, DslProperty::Size(size), at);
                self.expect(Tok::Comma, "`,`")?;
                let at = self.look.start;
                let source = self.string("source string")?;
                prop(self, DslProperty::Source(source), at);
                self.expect(Tok::Comma, "`,`")?;
                let at = self.look.start;
                let last = if category == DslCategory::IcoInfo {
                    DslProperty::Text(self.string("text string")?)
                } else {
                    DslProperty::Title(self.string("title string")?)
                };
                prop(self, last, at);
            }
            DslCategory::Tab => {
                let at = self.look.start;
                let text = self.string("text string")?;
                prop(self, DslProperty::Text(text), at);
                if self.look.tok == Tok::Comma {
                    self.advance()?;
                    let at = self.look.start;
                    match &self.look.tok {
                        Tok::Ident(s) if s == "selected" => {
                            self.advance()?;
                            prop(self, DslProperty::Selected, at);
                        }
                        _ => return Err(self.unexpected(&["`selected`"])),
                    }
                }
            }
            DslCategory::Srch => {
                let at = self.look.start;
                let text = self.string("text string")?;
                prop(self, DslProperty::Text(text), at);
            }
            DslCategory::Chan | DslCategory::ToolBar => loop {
                let at = self.look.start;
                let text = self.string("text string")?;
                prop(self, DslProperty::Text(text), at);
                if self.look.tok != Tok::Comma {
                    break;
                }
                self.advance()?;
            },
        }
        let close = self.expect(Tok::RParen, "`)`")?;
        self.spans.push(DslSourceSpan {
            statement,
            group: Some(index),
            property: None,
            start,
            end: close.end,
        });
        Ok(DslGroup { category, properties })
    }

    fn size(&mut self) -> Result<SizeClass, SyntaxError> {
        let size = match &self.look.tok {
            Tok::Ident(s) => SizeClass::ALL.into_iter().find(|c| c.as_str() == s),
            _ => None,
        };
        match size {
            Some(size) => {
                self.advance()?;
                Ok(size)
            }
            None => Err(self.unexpected(&["`large`", "`medium`", "`small`"])),
        }
    }
}

pub fn parse_dsl(text: &str) -> Result<DslDocument, SyntaxError> {
    parse_dsl_with_spans(text).map(|(doc, _)| doc)
}

/// Parses and also returns the byte span of every statement, group and
/// property, each listed when it closes.
pub fn parse_dsl_with_spans(text: &str) -> Result<(DslDocument, Vec<DslSourceSpan>), SyntaxError> {
    let mut parser = Parser::new(text)?;
    let doc = parser.document()?;
    Ok((doc, parser.spans))
}

/// Re-prints valid DSL text in canonical form.
pub fn format_dsl(text: &str) -> Result<String, SyntaxError> {
    parse_dsl(text).map(|d| format_document(&d))
}
