//! Lexer and recursive-descent parser for the narrative model language.
//!
//! ```text
//! site f on FcR associates site i on IgG with rate 2.0
//! site y on FcR gets phosphorylated if site f on FcR is bound
//! A becomes B with rate 3.0
//! A decays
//! ```
//!
//! Sentences are delimited by the grammar, not by lines. `(* ... *)`
//! comments are skipped (an extension over the base grammar).

use std::fmt;

use crate::desugar::{desugar_all, Condition, SurfaceForm, SurfaceSentence};
use crate::model::{Model, SiteName, SiteRef, SourceSpan, SpeciesName};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Keyword {
    Site,
    On,
    Associates,
    Dissociates,
    Gets,
    Phosphorylated,
    Dephosphorylated,
    Becomes,
    Decays,
    With,
    Rate,
    If,
    And,
    Is,
    Bound,
    Unbound,
}

impl Keyword {
    fn from_word(w: &str) -> Option<Self> {
        use Keyword::*;
        Some(match w {
            "site" => Site,
            "on" => On,
            "associates" => Associates,
            "dissociates" => Dissociates,
            "gets" => Gets,
            "phosphorylated" => Phosphorylated,
            "dephosphorylated" => Dephosphorylated,
            "becomes" => Becomes,
            "decays" => Decays,
            "with" => With,
            "rate" => Rate,
            "if" => If,
            "and" => And,
            "is" => Is,
            "bound" => Bound,
            "unbound" => Unbound,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Site => "site",
            On => "on",
            Associates => "associates",
            Dissociates => "dissociates",
            Gets => "gets",
            Phosphorylated => "phosphorylated",
            Dephosphorylated => "dephosphorylated",
            Becomes => "becomes",
            Decays => "decays",
            With => "with",
            Rate => "rate",
            If => "if",
            And => "and",
            Is => "is",
            Bound => "bound",
            Unbound => "unbound",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Float(f64),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Ident(s) => write!(f, "name `{s}`"),
            TokenKind::Float(x) => write!(f, "number {x}"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

/// A lex or syntax error.
#[derive(Clone, PartialEq, Debug)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

impl Diagnostic {
    fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.span.line, self.span.col_start, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

/// Splits `text` into tokens.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let start = SourceSpan {
                line,
                col_start: col,
                col_end: col + 1,
            };
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => return Err(Diagnostic::new(start, "unterminated comment")),
                    Some('*') if chars.get(i + 1) == Some(&')') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(_) => {
                        i += 1;
                        col += 1;
                    }
                }
            }
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_alphabetic() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match Keyword::from_word(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            i = scan_number(&chars, i);
            let lit: String = chars[start..i].iter().collect();
            match lit.parse::<f64>() {
                Ok(x) => TokenKind::Float(x),
                Err(_) => {
                    return Err(Diagnostic::new(
                        SourceSpan {
                            line,
                            col_start: col,
                            col_end: col + (i - start) - 1,
                        },
                        format!("malformed number `{lit}`"),
                    ))
                }
            }
        } else {
            return Err(Diagnostic::new(
                SourceSpan {
                    line,
                    col_start: col,
                    col_end: col,
                },
                format!("unexpected character `{c}`"),
            ));
        };
        let len = i - start;
        tokens.push(Token {
            kind,
            span: SourceSpan {
                line,
                col_start: col,
                col_end: col + len - 1,
            },
        });
        col += len;
    }
    Ok(tokens)
}

/// Digits, optional fraction, optional exponent. Returns the end index.
fn scan_number(chars: &[char], mut i: usize) -> usize {
    let digits = |mut j: usize| {
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    i = digits(i);
    if chars.get(i) == Some(&'.') {
        i = digits(i + 1);
    }
    if matches!(chars.get(i), Some('e' | 'E')) {
        let mut j = i + 1;
        if matches!(chars.get(j), Some('+' | '-')) {
            j += 1;
        }
        if chars.get(j).is_some_and(|c| c.is_ascii_digit()) {
            i = digits(j);
        }
    }
    i
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Span used for errors at end of input.
    eof: SourceSpan,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self, offset: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn next(&mut self, expected: &str) -> PResult<&'t Token> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(Diagnostic::new(
                self.eof,
                format!("expected {expected}, found end of input"),
            )),
        }
    }

    fn at(&self, k: Keyword) -> bool {
        self.peek_kind(0) == Some(&TokenKind::Keyword(k))
    }

    fn expect(&mut self, k: Keyword) -> PResult<&'t Token> {
        let what = format!("`{}`", k.as_str());
        let t = self.next(&what)?;
        if t.kind == TokenKind::Keyword(k) {
            Ok(t)
        } else {
            Err(Diagnostic::new(t.span, format!("expected {what}, found {}", t.kind)))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(&'t str, SourceSpan)> {
        let t = self.next(what)?;
        match &t.kind {
            TokenKind::Ident(s) => Ok((s, t.span)),
            other => Err(Diagnostic::new(t.span, format!("expected {what}, found {other}"))),
        }
    }

    fn species(&mut self) -> PResult<SpeciesName> {
        let (s, span) = self.ident("species name")?;
        SpeciesName::new(s).map_err(|e| Diagnostic::new(span, e.to_string()))
    }

    /// `site X on S`
    fn site_on(&mut self) -> PResult<SiteRef> {
        self.expect(Keyword::Site)?;
        let (s, span) = self.ident("site name")?;
        let site = SiteName::new(s).map_err(|e| Diagnostic::new(span, e.to_string()))?;
        self.expect(Keyword::On)?;
        Ok(SiteRef::new(self.species()?, site))
    }

    fn opt_rate(&mut self) -> PResult<Option<f64>> {
        if !self.at(Keyword::With) {
            return Ok(None);
        }
        self.pos += 1;
        self.expect(Keyword::Rate)?;
        let t = self.next("rate value")?;
        match t.kind {
            TokenKind::Float(x) if x > 0.0 && x.is_finite() => Ok(Some(x)),
            TokenKind::Float(x) => Err(Diagnostic::new(
                t.span,
                format!("rate must be positive, found {x}"),
            )),
            ref other => Err(Diagnostic::new(
                t.span,
                format!("expected rate value, found {other}"),
            )),
        }
    }

    fn opt_conditions(&mut self) -> PResult<Vec<Condition>> {
        let mut out = Vec::new();
        if !self.at(Keyword::If) {
            return Ok(out);
        }
        self.pos += 1;
        loop {
            let target = self.site_on()?;
            self.expect(Keyword::Is)?;
            let t = self.next("`bound` or `unbound`")?;
            let bound = match t.kind {
                TokenKind::Keyword(Keyword::Bound) => true,
                TokenKind::Keyword(Keyword::Unbound) => false,
                ref other => {
                    return Err(Diagnostic::new(
                        t.span,
                        format!("expected `bound` or `unbound`, found {other}"),
                    ))
                }
            };
            out.push(Condition { target, bound });
            if self.at(Keyword::And) {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn sentence(&mut self) -> PResult<SurfaceSentence> {
        let first = self.pos;
        let (form, rate, conditions) = match self.peek_kind(0) {
            Some(TokenKind::Keyword(Keyword::Site)) => {
                let left = self.site_on()?;
                let t = self.next("`associates`, `dissociates` or `gets`")?;
                let form = match t.kind {
                    TokenKind::Keyword(Keyword::Associates) => SurfaceForm::Association {
                        left,
                        right: self.site_on()?,
                    },
                    TokenKind::Keyword(Keyword::Dissociates) => SurfaceForm::Dissociation {
                        left,
                        right: self.site_on()?,
                    },
                    TokenKind::Keyword(Keyword::Gets) => {
                        let t = self.next("`phosphorylated` or `dephosphorylated`")?;
                        match t.kind {
                            TokenKind::Keyword(Keyword::Phosphorylated) => {
                                SurfaceForm::Phosphorylation { target: left }
                            }
                            TokenKind::Keyword(Keyword::Dephosphorylated) => {
                                SurfaceForm::Dephosphorylation { target: left }
                            }
                            ref other => {
                                return Err(Diagnostic::new(
                                    t.span,
                                    format!(
                                        "expected `phosphorylated` or `dephosphorylated`, found {other}"
                                    ),
                                ))
                            }
                        }
                    }
                    ref other => {
                        return Err(Diagnostic::new(
                            t.span,
                            format!("expected `associates`, `dissociates` or `gets`, found {other}"),
                        ))
                    }
                };
                let rate = self.opt_rate()?;
                (form, rate, self.opt_conditions()?)
            }
            Some(TokenKind::Ident(_)) => {
                let source = self.species()?;
                let t = self.next("`becomes` or `decays`")?;
                let form = match t.kind {
                    TokenKind::Keyword(Keyword::Becomes) => SurfaceForm::Transformation {
                        source,
                        target: self.species()?,
                    },
                    TokenKind::Keyword(Keyword::Decays) => SurfaceForm::Decay { source },
                    ref other => {
                        return Err(Diagnostic::new(
                            t.span,
                            format!("expected `becomes` or `decays`, found {other}"),
                        ))
                    }
                };
                (form, self.opt_rate()?, Vec::new())
            }
            Some(other) => {
                let t = &self.tokens[self.pos];
                return Err(Diagnostic::new(
                    t.span,
                    format!("expected the start of a sentence, found {other}"),
                ));
            }
            None => return Err(Diagnostic::new(self.eof, "expected a sentence")),
        };
        let start = self.tokens[first].span;
        let last = self.tokens[self.pos - 1].span;
        let col_end = if last.line == start.line {
            last.col_end
        } else {
            self.tokens[first..self.pos]
                .iter()
                .take_while(|t| t.span.line == start.line)
                .last()
                .map_or(start.col_end, |t| t.span.col_end)
        };
        Ok(SurfaceSentence {
            form,
            rate,
            conditions,
            span: SourceSpan {
                line: start.line,
                col_start: start.col_start,
                col_end,
            },
        })
    }

    /// Skips to the next token that can start a sentence: a `site` not
    /// inside a condition list, or a name followed by `becomes`/`decays`.
    fn recover(&mut self) {
        while let Some(t) = self.peek() {
            let prev = self.pos.checked_sub(1).map(|p| &self.tokens[p].kind);
            let in_condition = matches!(
                prev,
                Some(TokenKind::Keyword(Keyword::If | Keyword::And))
            );
            match &t.kind {
                TokenKind::Keyword(Keyword::Site) if !in_condition => return,
                TokenKind::Ident(_)
                    if matches!(
                        self.peek_kind(1),
                        Some(TokenKind::Keyword(Keyword::Becomes | Keyword::Decays))
                    ) =>
                {
                    return
                }
                _ => self.pos += 1,
            }
        }
    }
}

/// Parses `text` into surface sentences, collecting every syntax error.
pub fn parse_surface(text: &str) -> Result<Vec<SurfaceSentence>, Vec<Diagnostic>> {
    let tokens = tokenize(text).map_err(|d| vec![d])?;
    let eof = end_span(text);
    if tokens.is_empty() {
        return Err(vec![Diagnostic::new(
            eof,
            "a model needs at least one sentence",
        )]);
    }
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        eof,
    };
    let mut sentences = Vec::new();
    let mut errors = Vec::new();
    while p.peek().is_some() {
        let before = p.pos;
        match p.sentence() {
            Ok(s) => sentences.push(s),
            Err(d) => {
                errors.push(d);
                if p.pos == before {
                    p.pos += 1;
                }
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(sentences)
    } else {
        Err(errors)
    }
}

/// Parses and desugars `text` into a core [`Model`].
pub fn parse(text: &str) -> Result<Model, Vec<Diagnostic>> {
    let surface = parse_surface(text)?;
    desugar_all(&surface).map_err(|(i, e)| vec![Diagnostic::new(surface[i].span, e.to_string())])
}

/// Position just past the last character, clamped to a real column.
fn end_span(text: &str) -> SourceSpan {
    let line = text.split('\n').count().max(1);
    let last = text.rsplit('\n').next().unwrap_or("");
    let col = last.chars().count().max(1);
    SourceSpan {
        line,
        col_start: col,
        col_end: col,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Body;

    #[test]
    fn first_sentence_has_twelve_tokens() {
        let toks = tokenize("site f on FcR associates site i on IgG with rate 2.0").unwrap();
        assert_eq!(toks.len(), 12);
        assert_eq!(toks.last().unwrap().kind, TokenKind::Float(2.0));
        assert_eq!(toks[3].kind, TokenKind::Ident("FcR".into()));
        assert_eq!(
            toks[3].span,
            SourceSpan {
                line: 1,
                col_start: 11,
                col_end: 13
            }
        );
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  \n (* nothing *) \n").unwrap().is_empty());
    }

    #[test]
    fn illegal_character_reports_column() {
        let d = tokenize("site @ on A").unwrap_err();
        assert_eq!(d.span.line, 1);
        assert_eq!(d.span.col_start, 6);
    }

    #[test]
    fn numbers_with_exponent_and_integers() {
        let toks = tokenize("3 2.5e-1 1E2 4.").unwrap();
        let vals: Vec<_> = toks
            .iter()
            .map(|t| match t.kind {
                TokenKind::Float(x) => x,
                _ => panic!(),
            })
            .collect();
        assert_eq!(vals, vec![3.0, 0.25, 100.0, 4.0]);
    }

    #[test]
    fn keywords_are_case_sensitive() {
        let toks = tokenize("Site site").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Ident("Site".into()));
        assert_eq!(toks[1].kind, TokenKind::Keyword(Keyword::Site));
    }

    #[test]
    fn unterminated_comment_is_an_error() {
        assert!(tokenize("A decays (* oops").is_err());
    }

    #[test]
    fn transformation_production() {
        let m = parse("A becomes B with rate 3.0").unwrap();
        let s = &m.sentences()[0];
        assert_eq!(
            s.body(),
            &Body::Transformation {
                source: SpeciesName::new("A").unwrap(),
                target: Some(SpeciesName::new("B").unwrap()),
            }
        );
        assert_eq!(s.rate(), 3.0);
        assert!(s.pos().is_empty() && s.neg().is_empty());
    }

    #[test]
    fn sentences_may_span_lines() {
        let m = parse("site a on A\n associates site b on B\nA decays").unwrap();
        assert_eq!(m.sentences().len(), 2);
        assert_eq!(m.span(1).unwrap().line, 3);
    }

    #[test]
    fn empty_model_is_an_error() {
        let errs = parse("").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("at least one"));
    }

    #[test]
    fn zero_rate_is_rejected() {
        let errs = parse("A decays with rate 0").unwrap_err();
        assert!(errs[0].message.contains("positive"));
    }

    #[test]
    fn recovery_reports_several_errors() {
        let text = "site a on A associates B\nsite c on C gets bound\nA decays";
        let errs = parse(text).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].span.line, 1);
        assert_eq!(errs[1].span.line, 2);
    }

    #[test]
    fn conditions_split_into_pos_and_neg() {
        let m = parse(
            "site a on A associates site b on B if site c on A is bound and site d on B is unbound",
        )
        .unwrap();
        let s = &m.sentences()[0];
        assert_eq!(s.pos(), &[SiteRef::parse("A", "c").unwrap()].into());
        assert!(s.neg().contains(&SiteRef::parse("B", "d").unwrap()));
        assert!(s.neg().contains(&SiteRef::parse("A", "a").unwrap()));
    }

    #[test]
    fn phosph_in_source_is_rejected_with_span() {
        let errs = parse("A decays\nsite x on Phosph associates site y on B").unwrap_err();
        assert_eq!(errs[0].span.line, 2);
    }
}
