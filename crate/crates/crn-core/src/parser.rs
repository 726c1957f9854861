//! Text format for reaction networks and enlargement specifications.
//!
//! One statement per line (`;` also separates statements), `#` starts a
//! comment. Reactions use `->` / `<->` with `@ rate` (or `@ fwd, back` for
//! reversible pairs); rates are positive rationals (`1`, `3/2`, `0.75`,
//! `2.5e-3`) or identifiers naming free parameters.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{pow::Pow, Zero};

use crate::error::{NetworkError, ParseError};
use crate::exact::Rat;
use crate::network::{Complex, Network, RateConstant, Reaction, Species};
use crate::poly::fmt_rat;

/// A complex as written in the file: (coefficient, species name) pairs.
pub type RawComplex = Vec<(u32, String)>;

/// An enlargement statement, unresolved against a concrete network.
/// Reaction references `rK` are 1-based file-order indices.
#[derive(Debug, Clone, PartialEq)]
pub enum EnlargeSpec {
    E1 {
        reactant: RawComplex,
        product: RawComplex,
    },
    E2,
    /// rows: (reaction index, added reactant coeff, added product coeff)
    E3 {
        species: String,
        rows: Vec<(usize, u32, u32)>,
    },
    E4 {
        species: String,
        rows: Vec<(usize, u32, u32)>,
    },
    E5 {
        reactions: Vec<(RawComplex, RawComplex)>,
    },
    /// splits: (reaction index, intermediate complex)
    E6 {
        splits: Vec<(usize, RawComplex)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedFile {
    pub network: Network,
    pub enlargements: Vec<EnlargeSpec>,
}

/// Parse a network file, expanding reversible arrows into two reactions.
/// Species are ordered by first appearance; reactions keep file order.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    Ok(parse_file(text)?.network)
}

pub fn parse_file(text: &str) -> Result<ParsedFile, ParseError> {
    Parser::new(text).parse_file()
}

/// Parse a single enlargement specification fragment, e.g.
/// `E5: Y1 + X1 <-> 2 Y2` (the leading `enlarge` keyword is implied).
pub fn parse_enlargement(text: &str) -> Result<EnlargeSpec, ParseError> {
    let mut p = Parser::new(text);
    let spec = p.parse_enlarge()?;
    if !p.at_statement_end() {
        return Err(p.err("unexpected trailing input in enlargement spec"));
    }
    Ok(spec)
}

/// Canonical serialization: a species declaration line followed by one
/// reaction per line in the same grammar the parser accepts.
pub fn serialize_network(net: &Network) -> String {
    let mut out = String::new();
    out.push_str("species ");
    let names: Vec<&str> = net.species().iter().map(|s| s.name.as_str()).collect();
    out.push_str(&names.join(", "));
    out.push('\n');
    for r in net.reactions() {
        out.push_str(&format!(
            "{} -> {} @ {}\n",
            fmt_complex(&r.reactant, net),
            fmt_complex(&r.product, net),
            fmt_rate(&r.rate)
        ));
    }
    out
}

pub fn fmt_complex(c: &Complex, net: &Network) -> String {
    if c.is_empty() {
        return "0".to_string();
    }
    let mut parts = Vec::new();
    for (&i, &k) in &c.coeffs {
        let name = &net.species()[i].name;
        if k == 1 {
            parts.push(name.clone());
        } else {
            parts.push(format!("{} {}", k, name));
        }
    }
    parts.join(" + ")
}

pub fn fmt_rate(r: &RateConstant) -> String {
    match r {
        RateConstant::Fixed(q) => fmt_rat(q),
        RateConstant::Param(p) => p.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,    // ->
    RevArrow, // <->
    At,
    Plus,
    Comma,
    Colon,
    Slash,
    Newline,
    Semi,
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    species: Vec<String>,
    species_idx: BTreeMap<String, usize>,
    reactions: Vec<Reaction>,
    reaction_pos: Vec<(usize, usize)>,
    enlargements: Vec<EnlargeSpec>,
}

impl Parser {
    fn new(text: &str) -> Self {
        Parser {
            toks: lex(text),
            pos: 0,
            species: Vec::new(),
            species_idx: BTreeMap::new(),
            reactions: Vec::new(),
            reaction_pos: Vec::new(),
            enlargements: Vec::new(),
        }
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .or_else(|| self.toks.last().map(|t| (t.1, t.2)))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline) | Some(Tok::Semi)) {
            self.pos += 1;
        }
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Newline) | Some(Tok::Semi))
    }

    fn intern(&mut self, name: String) -> usize {
        if let Some(&i) = self.species_idx.get(&name) {
            return i;
        }
        let i = self.species.len();
        self.species_idx.insert(name.clone(), i);
        self.species.push(name);
        i
    }

    fn parse_file(mut self) -> Result<ParsedFile, ParseError> {
        loop {
            self.skip_separators();
            let Some(tok) = self.peek() else { break };
            match tok {
                Tok::Ident(w) if w == "species" => {
                    self.pos += 1;
                    self.parse_species_decl()?;
                }
                Tok::Ident(w) if w == "enlarge" => {
                    self.pos += 1;
                    let spec = self.parse_enlarge()?;
                    self.enlargements.push(spec);
                }
                _ => self.parse_reaction_stmt()?,
            }
            if !self.at_statement_end() {
                return Err(self.err("expected end of statement"));
            }
        }
        if self.reactions.is_empty() {
            return Err(ParseError::EmptyNetwork);
        }
        let species = self
            .species
            .iter()
            .map(|n| Species { name: n.clone() })
            .collect();
        let network = Network::new(species, self.reactions.clone()).map_err(|e| match e {
            NetworkError::DuplicateReaction(_, j) => {
                let (line, col) = self.reaction_pos[j];
                ParseError::DuplicateReaction { line, col }
            }
            NetworkError::NullReaction(j) => {
                let (line, col) = self.reaction_pos[j];
                ParseError::NullReaction { line, col }
            }
            NetworkError::NonpositiveRate(j) => {
                let (line, col) = self.reaction_pos[j];
                ParseError::NonpositiveRate { line, col }
            }
            NetworkError::Empty => ParseError::EmptyNetwork,
            other => ParseError::Syntax {
                line: 1,
                col: 1,
                msg: other.to_string(),
            },
        })?;
        Ok(ParsedFile {
            network,
            enlargements: self.enlargements,
        })
    }

    fn parse_species_decl(&mut self) -> Result<(), ParseError> {
        loop {
            match self.next() {
                Some(Tok::Ident(name)) => {
                    self.intern(name);
                }
                _ => return Err(self.err("expected species name")),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn parse_reaction_stmt(&mut self) -> Result<(), ParseError> {
        let start = self.here();
        let lhs = self.parse_complex()?;
        let reversible = if self.eat(&Tok::Arrow) {
            false
        } else if self.eat(&Tok::RevArrow) {
            true
        } else {
            return Err(self.err("expected `->` or `<->`"));
        };
        let rhs = self.parse_complex()?;
        self.expect(&Tok::At, "`@ rate`")?;
        let rate_fwd = self.parse_rate()?;
        if reversible {
            self.expect(&Tok::Comma, "`, backward-rate` after reversible rate")?;
            let rate_back = self.parse_rate()?;
            self.reactions.push(Reaction {
                reactant: lhs.clone(),
                product: rhs.clone(),
                rate: rate_fwd,
            });
            self.reaction_pos.push(start);
            self.reactions.push(Reaction {
                reactant: rhs,
                product: lhs,
                rate: rate_back,
            });
            self.reaction_pos.push(start);
        } else {
            self.reactions.push(Reaction {
                reactant: lhs,
                product: rhs,
                rate: rate_fwd,
            });
            self.reaction_pos.push(start);
        }
        Ok(())
    }

    fn parse_complex(&mut self) -> Result<Complex, ParseError> {
        let raw = self.parse_raw_complex()?;
        let mut c = Complex::empty();
        for (k, name) in raw {
            let i = self.intern(name);
            c.add_species(i, k);
        }
        Ok(c)
    }

    fn parse_raw_complex(&mut self) -> Result<RawComplex, ParseError> {
        let mut terms = Vec::new();
        loop {
            match self.peek().cloned() {
                Some(Tok::Number(s)) => {
                    self.pos += 1;
                    let coeff = parse_uint(&s).ok_or_else(|| {
                        self.err("stoichiometric coefficients must be nonnegative integers")
                    })?;
                    match self.peek().cloned() {
                        Some(Tok::Ident(name)) => {
                            self.pos += 1;
                            terms.push((coeff, name));
                        }
                        _ if coeff == 0 && terms.is_empty() => {
                            // the empty complex `0`
                            return Ok(Vec::new());
                        }
                        _ => return Err(self.err("expected species name after coefficient")),
                    }
                }
                Some(Tok::Ident(name)) => {
                    self.pos += 1;
                    terms.push((1, name));
                }
                _ => return Err(self.err("expected complex")),
            }
            if !self.eat(&Tok::Plus) {
                break;
            }
        }
        Ok(terms)
    }

    fn parse_rate(&mut self) -> Result<RateConstant, ParseError> {
        match self.next() {
            Some(Tok::Ident(name)) => Ok(RateConstant::Param(name)),
            Some(Tok::Number(s)) => {
                let mut q = parse_rational(&s).ok_or_else(|| self.err("invalid rate literal"))?;
                if self.eat(&Tok::Slash) {
                    match self.next() {
                        Some(Tok::Number(d)) => {
                            let den = parse_rational(&d)
                                .ok_or_else(|| self.err("invalid rate denominator"))?;
                            if den.is_zero() {
                                return Err(self.err("zero denominator in rate"));
                            }
                            q /= den;
                        }
                        _ => return Err(self.err("expected denominator")),
                    }
                }
                Ok(RateConstant::Fixed(q))
            }
            _ => Err(self.err("expected rate constant")),
        }
    }

    fn parse_enlarge(&mut self) -> Result<EnlargeSpec, ParseError> {
        let kind = match self.next() {
            Some(Tok::Ident(k)) => k,
            _ => return Err(self.err("expected enlargement kind E1..E6")),
        };
        match kind.as_str() {
            "E2" => Ok(EnlargeSpec::E2),
            "E1" => {
                self.expect(&Tok::Colon, "`:`")?;
                let reactant = self.parse_raw_complex()?;
                self.expect(&Tok::Arrow, "`->`")?;
                let product = self.parse_raw_complex()?;
                Ok(EnlargeSpec::E1 { reactant, product })
            }
            "E3" | "E4" => {
                self.expect(&Tok::Colon, "`:`")?;
                let species = match self.next() {
                    Some(Tok::Ident(s)) => s,
                    _ => return Err(self.err("expected new species name")),
                };
                let mut rows = Vec::new();
                let has_rows = match self.peek() {
                    Some(Tok::Ident(w)) if w == "in" => {
                        self.pos += 1;
                        true
                    }
                    _ => false,
                };
                if has_rows {
                    loop {
                        let idx = self.parse_reaction_ref()?;
                        let a = self.parse_small_uint("added reactant coefficient")?;
                        let b = self.parse_small_uint("added product coefficient")?;
                        rows.push((idx, a, b));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                if kind == "E3" {
                    Ok(EnlargeSpec::E3 { species, rows })
                } else {
                    Ok(EnlargeSpec::E4 { species, rows })
                }
            }
            "E5" => {
                self.expect(&Tok::Colon, "`:`")?;
                let mut reactions = Vec::new();
                loop {
                    let lhs = self.parse_raw_complex()?;
                    self.expect(&Tok::RevArrow, "`<->`")?;
                    let rhs = self.parse_raw_complex()?;
                    reactions.push((lhs, rhs));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                Ok(EnlargeSpec::E5 { reactions })
            }
            "E6" => {
                self.expect(&Tok::Colon, "`:`")?;
                let mut splits = Vec::new();
                loop {
                    match self.next() {
                        Some(Tok::Ident(w)) if w == "split" => {}
                        _ => return Err(self.err("expected `split rK with <complex>`")),
                    }
                    let idx = self.parse_reaction_ref()?;
                    match self.next() {
                        Some(Tok::Ident(w)) if w == "with" => {}
                        _ => return Err(self.err("expected `with`")),
                    }
                    let inter = self.parse_raw_complex()?;
                    splits.push((idx, inter));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                Ok(EnlargeSpec::E6 { splits })
            }
            other => Err(self.err(format!("unknown enlargement kind `{other}`"))),
        }
    }

    fn parse_reaction_ref(&mut self) -> Result<usize, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) if s.starts_with('r') => s[1..]
                .parse::<usize>()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| self.err("expected reaction reference rK (1-based)")),
            _ => Err(self.err("expected reaction reference rK")),
        }
    }

    fn parse_small_uint(&mut self, what: &str) -> Result<u32, ParseError> {
        match self.next() {
            Some(Tok::Number(s)) => {
                parse_uint(&s).ok_or_else(|| self.err(format!("expected {what}")))
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }
}

fn parse_uint(s: &str) -> Option<u32> {
    if s.chars().all(|c| c.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

/// Parse a nonnegative rational literal: integer, decimal or scientific.
pub fn parse_rational(s: &str) -> Option<Rat> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().ok()?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = frac_part.len() as i32;
    let mut q = Rat::from_integer(numer);
    let ten = BigInt::from(10);
    let net_exp = exp - scale;
    if net_exp >= 0 {
        q *= Rat::from_integer(ten.pow(net_exp as u32));
    } else {
        q /= Rat::from_integer(ten.pow((-net_exp) as u32));
    }
    Some(q)
}

fn lex(text: &str) -> Vec<(Tok, usize, usize)> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let (l0, c0) = (line, col);
        match c {
            '\n' => {
                toks.push((Tok::Newline, l0, c0));
                line += 1;
                col = 1;
                i += 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                    col += 1;
                }
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            ';' => {
                toks.push((Tok::Semi, l0, c0));
                i += 1;
                col += 1;
            }
            '+' => {
                toks.push((Tok::Plus, l0, c0));
                i += 1;
                col += 1;
            }
            '@' => {
                toks.push((Tok::At, l0, c0));
                i += 1;
                col += 1;
            }
            ',' => {
                toks.push((Tok::Comma, l0, c0));
                i += 1;
                col += 1;
            }
            ':' => {
                toks.push((Tok::Colon, l0, c0));
                i += 1;
                col += 1;
            }
            '/' => {
                toks.push((Tok::Slash, l0, c0));
                i += 1;
                col += 1;
            }
            '-' if i + 1 < bytes.len() && bytes[i + 1] == '>' => {
                toks.push((Tok::Arrow, l0, c0));
                i += 2;
                col += 2;
            }
            '<' if i + 2 < bytes.len() && bytes[i + 1] == '-' && bytes[i + 2] == '>' => {
                toks.push((Tok::RevArrow, l0, c0));
                i += 3;
                col += 3;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    s.push(bytes[i]);
                    i += 1;
                    col += 1;
                }
                toks.push((Tok::Ident(s), l0, c0));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    s.push(bytes[i]);
                    i += 1;
                    col += 1;
                }
                // scientific exponent, only when followed by digits or sign+digits
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    let mut probe = String::new();
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        probe.push(bytes[j]);
                        j += 1;
                    }
                    let mut any = false;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        probe.push(bytes[j]);
                        j += 1;
                        any = true;
                    }
                    if any {
                        s.push('e');
                        s.push_str(&probe);
                        col += j - i;
                        i = j;
                    }
                }
                toks.push((Tok::Number(s), l0, c0));
            }
            other => {
                // unknown character: emit as an impossible ident so the parser
                // reports a positioned syntax error
                toks.push((Tok::Ident(format!("\u{0}{other}")), l0, c0));
                i += 1;
                col += 1;
            }
        }
    }
    toks
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.species() == other.species() && self.reactions() == other.reactions()
    }
}
