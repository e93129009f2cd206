//! Reader for the SPiM subset produced by [`super::render`].

use thiserror::Error;

use super::{Action, ChannelDecl, Continuation, PiProgram, Prefix, ProcessDef, Run};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct SpimParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Word(String),
    /// Numeric literal and its number of fractional digits.
    Num(f64, usize),
    Punct(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SpimParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line) = (0, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '(' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(SpimParseError {
                            line,
                            message: "unterminated comment".into(),
                        })
                    }
                    Some('*') if chars.get(i + 1) == Some(&')') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        i += 1;
                    }
                    Some(_) => i += 1,
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Word(chars[start..i].iter().collect()), line));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                i += 1;
                if i < chars.len() && matches!(chars[i], '+' | '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let decimals = lit
                .split_once('.')
                .map_or(0, |(_, f)| f.chars().take_while(|c| c.is_ascii_digit()).count());
            let x = lit.parse::<f64>().map_err(|_| SpimParseError {
                line,
                message: format!("bad number `{lit}`"),
            })?;
            out.push((Tok::Num(x, decimals), line));
        } else if "()!?;,:@*=".contains(c) {
            out.push((Tok::Punct(c), line));
            i += 1;
        } else {
            return Err(SpimParseError {
                line,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl P {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SpimParseError> {
        Err(SpimParseError {
            line: self.line(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn word(&mut self) -> Result<String, SpimParseError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(w)
            }
            other => self.err(format!("expected a name, found {other:?}")),
        }
    }

    fn keyword(&mut self, w: &str) -> Result<(), SpimParseError> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{w}`, found {:?}", self.peek()))
        }
    }

    fn punct(&mut self, c: char) -> Result<(), SpimParseError> {
        if self.is_punct(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {:?}", self.peek()))
        }
    }

    fn number(&mut self) -> Result<(f64, usize), SpimParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(x, d)) => {
                self.pos += 1;
                Ok((x, d))
            }
            other => self.err(format!("expected a number, found {other:?}")),
        }
    }

    /// `( a, b, c )` of names, possibly empty.
    fn names(&mut self) -> Result<Vec<String>, SpimParseError> {
        self.punct('(')?;
        let mut out = Vec::new();
        if self.is_punct(')') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.word()?);
            if self.is_punct(',') {
                self.pos += 1;
            } else {
                self.punct(')')?;
                return Ok(out);
            }
        }
    }

    /// `new name@rate:chan` optionally followed by `(chan,...)`.
    fn decl(&mut self) -> Result<ChannelDecl, SpimParseError> {
        self.keyword("new")?;
        let name = self.word()?;
        self.punct('@')?;
        let (rate, decimals) = self.number()?;
        self.punct(':')?;
        self.keyword("chan")?;
        let mut arity = 0;
        if self.is_punct('(') {
            arity = self.names()?.len();
        }
        Ok(ChannelDecl {
            name,
            rate,
            arity,
            min_decimals: decimals.max(1),
        })
    }

    fn continuation(&mut self) -> Result<Continuation, SpimParseError> {
        if self.is_punct('(') {
            self.punct('(')?;
            self.punct(')')?;
            return Ok(Continuation::Stop);
        }
        let process = self.word()?;
        let args = self.names()?;
        Ok(Continuation::Call { process, args })
    }

    fn action(&mut self) -> Result<Action, SpimParseError> {
        let prefix = if self.is_punct('!') {
            self.pos += 1;
            let channel = self.word()?;
            let payload = if self.is_punct('(') { self.names()? } else { Vec::new() };
            let weight = if self.is_punct('*') {
                self.pos += 1;
                Some(self.number()?.0)
            } else {
                None
            };
            Prefix::Output {
                channel,
                payload,
                weight,
            }
        } else if self.is_punct('?') {
            self.pos += 1;
            let channel = self.word()?;
            let params = if self.is_punct('(') { self.names()? } else { Vec::new() };
            Prefix::Input { channel, params }
        } else if self.is_word("delay") {
            self.pos += 1;
            self.punct('@')?;
            Prefix::Delay {
                rate: self.number()?.0,
            }
        } else {
            return self.err(format!("expected an action, found {:?}", self.peek()));
        };
        self.punct(';')?;
        Ok(Action {
            prefix,
            cont: self.continuation()?,
        })
    }

    fn def(&mut self) -> Result<ProcessDef, SpimParseError> {
        let name = self.word()?;
        self.punct('(')?;
        let mut params = Vec::new();
        while !self.is_punct(')') {
            params.push(self.word()?);
            self.punct(':')?;
            self.keyword("chan")?;
            if self.is_punct('(') {
                self.names()?;
            }
            if self.is_punct(',') {
                self.pos += 1;
            }
        }
        self.punct(')')?;
        self.punct('=')?;
        self.punct('(')?;
        let mut locals = Vec::new();
        while self.is_word("new") {
            locals.push(self.decl()?);
        }
        let mut body = Vec::new();
        if self.is_word("do") {
            self.pos += 1;
            body.push(self.action()?);
            while self.is_word("or") {
                self.pos += 1;
                body.push(self.action()?);
            }
        } else if self.is_punct('(') && self.peek_at(1) == Some(&Tok::Punct(')')) {
            self.pos += 2;
        } else if !self.is_punct(')') {
            body.push(self.action()?);
        }
        self.punct(')')?;
        Ok(ProcessDef {
            name,
            params,
            locals,
            body,
        })
    }
}

/// Parses SPiM text in the subset this crate emits.
pub fn parse_program(text: &str) -> Result<PiProgram, SpimParseError> {
    let mut p = P {
        toks: lex(text)?,
        pos: 0,
    };
    let mut program = PiProgram {
        sample_time: crate::model::DEFAULT_SAMPLE_TIME,
        plot: Vec::new(),
        globals: Vec::new(),
        blocks: Vec::new(),
        runs: Vec::new(),
    };
    while p.peek().is_some() {
        if p.is_word("directive") {
            p.pos += 1;
            if p.is_word("sample") {
                p.pos += 1;
                program.sample_time = p.number()?.0;
            } else if p.is_word("plot") {
                p.pos += 1;
                loop {
                    program.plot.push(p.word()?);
                    p.punct('(')?;
                    p.punct(')')?;
                    if p.is_punct(';') {
                        p.pos += 1;
                    } else {
                        break;
                    }
                }
            } else {
                return p.err("unknown directive");
            }
        } else if p.is_word("new") {
            program.globals.push(p.decl()?);
        } else if p.is_word("let") {
            p.pos += 1;
            let mut block = vec![p.def()?];
            while p.is_word("and") {
                p.pos += 1;
                block.push(p.def()?);
            }
            program.blocks.push(block);
        } else if p.is_word("run") {
            p.pos += 1;
            let (count, _) = p.number()?;
            p.keyword("of")?;
            let process = p.word()?;
            p.punct('(')?;
            p.punct(')')?;
            program.runs.push(Run {
                count: count as u64,
                process,
            });
        } else {
            return p.err(format!("unexpected {:?}", p.peek()));
        }
    }
    Ok(program)
}
