//! Parser for the interferometer setup description.
//!
//! Grammar (comments run from `#` to end of line):
//!
//! ```text
//! file    := stmt*
//! stmt    := grid | arm | bs | collect | model
//! grid    := "grid" INT NUMBER ";"
//! arm     := "arm" ("signal" | "idler") "{" element* "}"
//! element := "mirror;" | "phase_step" NUMBER ";"
//!          | "phase_file" PATH ";" | "delay" NUMBER ";"
//! bs      := "bs" NUMBER ";"                      # transmittance
//! collect := "collect" ("a" | "b") ("+k0" | "-k0" | INT INT) [NUMBER] ";"
//! model   := "model" "k0" INT INT ";"
//!          | "model" "filter" NUMBER NUMBER ";"   # wavelength, bandwidth
//!          | "model" ("mu" | "pair_rate" | "time" | "accidental"
//!                    | "coherence_length") NUMBER ";"
//! ```
//!
//! Numbers accept the `pi` grammar of [`crate::num`]. Errors carry the line
//! and column of the offending token.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use homsim_core::{
    Circuit, CoherenceModel, CollectionMode, Element, ImperfectionModel, MomentumGrid,
    MomentumLabel, PhaseMask, Port,
};

use crate::num::parse_number;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementDesc {
    Mirror,
    PhaseStep(f64),
    PhaseFile(PathBuf),
    Delay(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollectTarget {
    PlusK0,
    MinusK0,
    Coords(i32, i32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectDesc {
    pub port: Port,
    pub target: CollectTarget,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoherenceSpec {
    DefaultFilter,
    Filter { wavelength: f64, bandwidth: f64 },
    Length(f64),
}

/// Parsed form of a setup file: the two interferometer arms and detection plus grid
/// and model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDescription {
    pub grid_n: usize,
    pub grid_k_max: f64,
    pub signal: Vec<ElementDesc>,
    pub idler: Vec<ElementDesc>,
    pub transmittance: f64,
    pub collects: Vec<CollectDesc>,
    pub k0: (i32, i32),
    pub mode_overlap: f64,
    pub pair_rate: f64,
    pub integration_time: f64,
    pub accidental_rate: f64,
    pub coherence: CoherenceSpec,
}

impl Default for CircuitDescription {
    fn default() -> Self {
        Self {
            grid_n: 3,
            grid_k_max: 1.0,
            signal: vec![],
            idler: vec![],
            transmittance: 0.5,
            collects: vec![],
            k0: (1, 0),
            mode_overlap: 1.0,
            pair_rate: 1e4,
            integration_time: 1.0,
            accidental_rate: 0.0,
            coherence: CoherenceSpec::DefaultFilter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Word(String),
    LBrace,
    RBrace,
    Semi,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let mut col = 0usize;
        let chars: Vec<char> = line.chars().collect();
        while col < chars.len() {
            let c = chars[col];
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                col += 1;
                continue;
            }
            let (kind, len) = match c {
                '{' => (TokenKind::LBrace, 1),
                '}' => (TokenKind::RBrace, 1),
                ';' => (TokenKind::Semi, 1),
                _ => {
                    let start = col;
                    let mut end = col;
                    while end < chars.len() {
                        let ch = chars[end];
                        if ch.is_whitespace() || matches!(ch, '{' | '}' | ';' | '#') {
                            break;
                        }
                        end += 1;
                    }
                    (
                        TokenKind::Word(chars[start..end].iter().collect()),
                        end - start,
                    )
                }
            };
            tokens.push(Token {
                kind,
                line: line_idx + 1,
                col: col + 1,
            });
            col += len;
        }
    }
    tokens
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_line: usize,
}

impl Parser {
    fn err<T>(&self, line: usize, col: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line, col, message: message.into() })
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or((self.end_line, 1))
    }

    fn next(&mut self, expected: &str) -> Result<Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => {
                let (line, col) = self.here();
                self.err(line, col, format!("unexpected end of file, expected {expected}"))
            }
        }
    }

    fn peek_is(&self, kind: &TokenKind) -> bool {
        self.tokens.get(self.pos).map(|t| &t.kind == kind).unwrap_or(false)
    }

    fn word(&mut self, expected: &str) -> Result<(String, usize, usize), ParseError> {
        let t = self.next(expected)?;
        match t.kind {
            TokenKind::Word(w) => Ok((w, t.line, t.col)),
            other => self.err(t.line, t.col, format!("expected {expected}, found {other:?}")),
        }
    }

    fn number(&mut self, expected: &str) -> Result<(f64, usize, usize), ParseError> {
        let (w, line, col) = self.word(expected)?;
        match parse_number(&w) {
            Ok(v) => Ok((v, line, col)),
            Err(e) => self.err(line, col, e),
        }
    }

    fn integer(&mut self, expected: &str) -> Result<(i64, usize, usize), ParseError> {
        let (w, line, col) = self.word(expected)?;
        match w.parse::<i64>() {
            Ok(v) => Ok((v, line, col)),
            Err(_) => self.err(line, col, format!("expected {expected}, found '{w}'")),
        }
    }

    fn semi(&mut self) -> Result<(), ParseError> {
        let t = self.next("';'")?;
        if t.kind == TokenKind::Semi {
            Ok(())
        } else {
            self.err(t.line, t.col, format!("expected ';', found {:?}", t.kind))
        }
    }
}

/// Parse a setup description. Grammar errors and range violations carry
/// positions; structural violations (missing arms, missing beamsplitter)
/// are reported at end of file.
pub fn parse_setup(text: &str) -> Result<CircuitDescription, ParseError> {
    let tokens = tokenize(text);
    let end_line = text.lines().count().max(1);
    let mut p = Parser { tokens, pos: 0, end_line };
    let mut desc = CircuitDescription::default();
    let mut seen_signal = false;
    let mut seen_idler = false;
    let mut seen_bs = false;
    let mut seen_grid = false;

    while p.pos < p.tokens.len() {
        let (word, line, col) = p.word("a statement keyword")?;
        match word.as_str() {
            "grid" => {
                if seen_grid {
                    return p.err(line, col, "duplicate grid statement");
                }
                seen_grid = true;
                let (n, nline, ncol) = p.integer("grid size")?;
                if n < 3 || n % 2 == 0 {
                    return p.err(nline, ncol, format!("grid size must be an odd integer >= 3, got {n}"));
                }
                let (k_max, kline, kcol) = p.number("grid half-extent")?;
                if !(k_max > 0.0) {
                    return p.err(kline, kcol, format!("grid half-extent must be positive, got {k_max}"));
                }
                desc.grid_n = n as usize;
                desc.grid_k_max = k_max;
                p.semi()?;
            }
            "arm" => {
                let (name, nline, ncol) = p.word("arm name ('signal' or 'idler')")?;
                let slot = match name.as_str() {
                    "signal" => {
                        if seen_signal {
                            return p.err(nline, ncol, "duplicate arm 'signal'");
                        }
                        seen_signal = true;
                        &mut desc.signal
                    }
                    "idler" => {
                        if seen_idler {
                            return p.err(nline, ncol, "duplicate arm 'idler'");
                        }
                        seen_idler = true;
                        &mut desc.idler
                    }
                    other => {
                        return p.err(nline, ncol, format!("arm name must be 'signal' or 'idler', got '{other}'"))
                    }
                };
                let open = p.next("'{'")?;
                if open.kind != TokenKind::LBrace {
                    return p.err(open.line, open.col, "expected '{' after arm name");
                }
                loop {
                    if p.peek_is(&TokenKind::RBrace) {
                        p.pos += 1;
                        break;
                    }
                    let (kw, eline, ecol) = p.word("an element ('mirror', 'phase_step', 'phase_file', 'delay') or '}'")?;
                    let element = match kw.as_str() {
                        "mirror" => ElementDesc::Mirror,
                        "phase_step" => {
                            let (v, ..) = p.number("phase jump in radians")?;
                            ElementDesc::PhaseStep(v)
                        }
                        "phase_file" => {
                            let (path, ..) = p.word("mask file path")?;
                            ElementDesc::PhaseFile(PathBuf::from(path))
                        }
                        "delay" => {
                            let (v, ..) = p.number("delay in meters")?;
                            ElementDesc::Delay(v)
                        }
                        other => return p.err(eline, ecol, format!("unknown element keyword '{other}'")),
                    };
                    slot.push(element);
                    p.semi()?;
                }
            }
            "bs" => {
                if seen_bs {
                    return p.err(line, col, "duplicate beamsplitter statement");
                }
                seen_bs = true;
                let (t, tline, tcol) = p.number("transmittance")?;
                if !(t > 0.0 && t < 1.0) {
                    return p.err(tline, tcol, format!("transmittance must lie strictly between 0 and 1, got {t}"));
                }
                desc.transmittance = t;
                p.semi()?;
            }
            "collect" => {
                let (port_word, pline, pcol) = p.word("port ('a' or 'b')")?;
                let port = match port_word.as_str() {
                    "a" => Port::A,
                    "b" => Port::B,
                    other => return p.err(pline, pcol, format!("port must be 'a' or 'b', got '{other}'")),
                };
                let (target_word, tline, tcol) = p.word("'+k0', '-k0', or coordinates")?;
                let target = match target_word.as_str() {
                    "+k0" => CollectTarget::PlusK0,
                    "-k0" => CollectTarget::MinusK0,
                    other => match other.parse::<i32>() {
                        Ok(ix) => {
                            let (iy, ..) = p.integer("second coordinate")?;
                            CollectTarget::Coords(ix, iy as i32)
                        }
                        Err(_) => {
                            return p.err(tline, tcol, format!("expected '+k0', '-k0', or coordinates, found '{other}'"))
                        }
                    },
                };
                let width = if p.peek_is(&TokenKind::Semi) {
                    0.0
                } else {
                    let (w, wline, wcol) = p.number("collection width")?;
                    if !(w >= 0.0) {
                        return p.err(wline, wcol, format!("collection width must be non-negative, got {w}"));
                    }
                    w
                };
                desc.collects.push(CollectDesc { port, target, width });
                p.semi()?;
            }
            "model" => {
                let (key, kline, kcol) = p.word("a model parameter name")?;
                match key.as_str() {
                    "k0" => {
                        let (ix, ..) = p.integer("k0 x index")?;
                        let (iy, ..) = p.integer("k0 y index")?;
                        desc.k0 = (ix as i32, iy as i32);
                    }
                    "filter" => {
                        let (wl, ..) = p.number("center wavelength in meters")?;
                        let (bw, ..) = p.number("bandwidth FWHM in meters")?;
                        desc.coherence = CoherenceSpec::Filter { wavelength: wl, bandwidth: bw };
                    }
                    "coherence_length" => {
                        let (v, ..) = p.number("coherence length in meters")?;
                        desc.coherence = CoherenceSpec::Length(v);
                    }
                    "mu" => {
                        let (v, vline, vcol) = p.number("mode overlap")?;
                        if !(0.0..=1.0).contains(&v) {
                            return p.err(vline, vcol, format!("mode overlap must lie in [0, 1], got {v}"));
                        }
                        desc.mode_overlap = v;
                    }
                    "pair_rate" => {
                        let (v, ..) = p.number("pair rate in counts/s")?;
                        desc.pair_rate = v;
                    }
                    "time" => {
                        let (v, ..) = p.number("integration time in seconds")?;
                        desc.integration_time = v;
                    }
                    "accidental" => {
                        let (v, ..) = p.number("accidental rate in counts/s")?;
                        desc.accidental_rate = v;
                    }
                    other => return p.err(kline, kcol, format!("unknown model parameter '{other}'")),
                }
                p.semi()?;
            }
            other => return p.err(line, col, format!("unknown keyword '{other}'")),
        }
    }

    if !seen_signal || !seen_idler {
        return Err(ParseError {
            line: end_line,
            col: 1,
            message: "missing arm blocks: a setup needs both 'arm signal' and 'arm idler'".into(),
        });
    }
    if !seen_bs {
        return Err(ParseError {
            line: end_line,
            col: 1,
            message: "missing beamsplitter: add a 'bs <transmittance>;' statement".into(),
        });
    }
    if desc.collects.len() < 2 {
        return Err(ParseError {
            line: end_line,
            col: 1,
            message: "need at least two collect statements (one per port)".into(),
        });
    }
    Ok(desc)
}

/// Canonical text form. `parse_setup(pretty_print(d))` returns `d` again,
/// so pretty-printing is a fixed point of the round trip.
pub fn pretty_print(desc: &CircuitDescription) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "grid {} {};", desc.grid_n, desc.grid_k_max);
    for (name, elements) in [("signal", &desc.signal), ("idler", &desc.idler)] {
        let _ = writeln!(out, "arm {name} {{");
        for e in elements {
            match e {
                ElementDesc::Mirror => {
                    let _ = writeln!(out, "  mirror;");
                }
                ElementDesc::PhaseStep(v) => {
                    let _ = writeln!(out, "  phase_step {v};");
                }
                ElementDesc::PhaseFile(p) => {
                    let _ = writeln!(out, "  phase_file {};", p.display());
                }
                ElementDesc::Delay(v) => {
                    let _ = writeln!(out, "  delay {v};");
                }
            }
        }
        let _ = writeln!(out, "}}");
    }
    let _ = writeln!(out, "bs {};", desc.transmittance);
    for c in &desc.collects {
        let port = match c.port {
            Port::A => "a",
            Port::B => "b",
        };
        let target = match c.target {
            CollectTarget::PlusK0 => "+k0".to_string(),
            CollectTarget::MinusK0 => "-k0".to_string(),
            CollectTarget::Coords(ix, iy) => format!("{ix} {iy}"),
        };
        if c.width == 0.0 {
            let _ = writeln!(out, "collect {port} {target};");
        } else {
            let _ = writeln!(out, "collect {port} {target} {};", c.width);
        }
    }
    let _ = writeln!(out, "model k0 {} {};", desc.k0.0, desc.k0.1);
    let _ = writeln!(out, "model mu {};", desc.mode_overlap);
    let _ = writeln!(out, "model pair_rate {};", desc.pair_rate);
    let _ = writeln!(out, "model time {};", desc.integration_time);
    let _ = writeln!(out, "model accidental {};", desc.accidental_rate);
    match &desc.coherence {
        CoherenceSpec::DefaultFilter => {}
        CoherenceSpec::Filter { wavelength, bandwidth } => {
            let _ = writeln!(out, "model filter {wavelength} {bandwidth};");
        }
        CoherenceSpec::Length(v) => {
            let _ = writeln!(out, "model coherence_length {v};");
        }
    }
    out
}

/// Everything a command needs from a setup file.
pub struct BuiltSetup {
    pub grid: MomentumGrid,
    pub circuit: Circuit,
    pub model: ImperfectionModel,
    pub coherence: CoherenceModel,
    pub k0: MomentumLabel,
}

fn load_mask_file(grid: MomentumGrid, path: &Path) -> Result<PhaseMask, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read mask file '{}': {e}", path.display()))?;
    let mut values = Vec::with_capacity(grid.mode_count());
    for (i, word) in text.split_whitespace().enumerate() {
        let v = parse_number(word)
            .map_err(|e| format!("mask file '{}', entry {}: {e}", path.display(), i + 1))?;
        values.push(v);
    }
    PhaseMask::from_values(grid, values)
        .map_err(|e| format!("mask file '{}': {e}", path.display()))
}

impl CircuitDescription {
    /// Resolve the description into production types, loading any mask
    /// files relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<BuiltSetup, String> {
        let grid = MomentumGrid::new(self.grid_n, self.grid_k_max).map_err(|e| e.to_string())?;
        let k0 = MomentumLabel::new(self.k0.0, self.k0.1);
        if !grid.contains(k0) || k0.is_origin() {
            return Err(format!("k0 ({}, {}) must be a non-origin grid mode", k0.ix, k0.iy));
        }

        let build_arm = |elements: &[ElementDesc]| -> Result<Vec<Element>, String> {
            elements
                .iter()
                .map(|e| {
                    Ok(match e {
                        ElementDesc::Mirror => Element::Mirror,
                        ElementDesc::PhaseStep(v) => {
                            Element::Mask(PhaseMask::step(grid, *v).map_err(|e| e.to_string())?)
                        }
                        ElementDesc::PhaseFile(p) => {
                            let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                            Element::Mask(load_mask_file(grid, &path)?)
                        }
                        ElementDesc::Delay(v) => Element::Delay(*v),
                    })
                })
                .collect()
        };
        let signal = build_arm(&self.signal)?;
        let idler = build_arm(&self.idler)?;

        if self.collects.len() != 2 {
            return Err(format!(
                "expected exactly two collection modes (one per port), got {}",
                self.collects.len()
            ));
        }
        let resolve = |c: &CollectDesc| -> Result<CollectionMode, String> {
            let center = match c.target {
                CollectTarget::PlusK0 => k0,
                CollectTarget::MinusK0 => k0.negated(),
                CollectTarget::Coords(ix, iy) => MomentumLabel::new(ix, iy),
            };
            if !grid.contains(center) {
                return Err(format!("collection center ({}, {}) is outside the grid", center.ix, center.iy));
            }
            Ok(CollectionMode::new(c.port, center, c.width))
        };
        let first = resolve(&self.collects[0])?;
        let second = resolve(&self.collects[1])?;
        let (mode_a, mode_b) = match (first.port, second.port) {
            (Port::A, Port::B) => (first, second),
            (Port::B, Port::A) => (second, first),
            _ => return Err("collection modes must sit on distinct ports".into()),
        };

        let coherence = match &self.coherence {
            CoherenceSpec::DefaultFilter => CoherenceModel::default_filter(),
            CoherenceSpec::Filter { wavelength, bandwidth } => {
                CoherenceModel::from_filter(*wavelength, *bandwidth).map_err(|e| e.to_string())?
            }
            CoherenceSpec::Length(v) => CoherenceModel::new(*v).map_err(|e| e.to_string())?,
        };
        let circuit = Circuit::new(grid, signal, idler, self.transmittance, (mode_a, mode_b), coherence)
            .map_err(|e| e.to_string())?;
        let model = ImperfectionModel::new(
            self.transmittance,
            self.mode_overlap,
            self.accidental_rate,
            self.pair_rate,
            self.integration_time,
        )
        .map_err(|e| e.to_string())?;
        Ok(BuiltSetup { grid, circuit, model, coherence, k0 })
    }
}
