//! Line-oriented parser for the SPICE-like netlist format.

use crate::circuit::{Circuit, Element, ElementKind, IntegrationMethod, Waveform, GROUND};
use crate::device::{FinFetParams, Polarity, PtmParams, PtmState};
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, ch) in line.chars().enumerate() {
        let column = i + 1;
        if ch.is_whitespace() || ch == ',' || matches!(ch, '(' | ')' | '=') {
            if !cur.is_empty() {
                out.push(Token { text: std::mem::take(&mut cur), column: start });
            }
            if matches!(ch, '(' | ')' | '=') {
                out.push(Token { text: ch.to_string(), column });
            }
        } else {
            if cur.is_empty() {
                start = column;
            }
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push(Token { text: cur, column: start });
    }
    out
}

/// Parses a number with an optional engineering suffix
/// (`f p n u m k meg g`, case-insensitive).
pub fn parse_number(text: &str) -> Option<f64> {
    let lower = text.to_ascii_lowercase();
    let (body, shift) = if let Some(b) = lower.strip_suffix("meg") {
        (b, 6)
    } else {
        match lower.chars().last()? {
            'f' => (&lower[..lower.len() - 1], -15),
            'p' => (&lower[..lower.len() - 1], -12),
            'n' => (&lower[..lower.len() - 1], -9),
            'u' => (&lower[..lower.len() - 1], -6),
            'm' => (&lower[..lower.len() - 1], -3),
            'k' => (&lower[..lower.len() - 1], 3),
            'g' => (&lower[..lower.len() - 1], 9),
            _ => (lower.as_str(), 0),
        }
    };
    // Reject forms f64::from_str accepts but a netlist should not.
    if body.is_empty() || body.contains(|c: char| c.is_ascii_alphabetic() && c != 'e') {
        return None;
    }
    body.parse::<f64>().ok()?;
    // Fold the suffix into the decimal exponent so `100u` is exactly 1e-4.
    let (mantissa, exp) = match body.split_once('e') {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (body, 0),
    };
    let v: f64 = format!("{mantissa}e{}", exp + shift).parse().ok()?;
    v.is_finite().then_some(v)
}

/// Cursor over the tokens of one line.
struct Line<'a> {
    number: usize,
    tokens: &'a [Token],
    pos: usize,
    end_column: usize,
}

impl<'a> Line<'a> {
    fn error(&self, message: impl Into<String>, expected: &[&str]) -> Error {
        let (token, column) = match self.tokens.get(self.pos) {
            Some(t) => (t.text.clone(), t.column),
            None => (String::new(), self.end_column),
        };
        self.error_at(token, column, message, expected)
    }

    fn error_prev(&self, message: impl Into<String>, expected: &[&str]) -> Error {
        let t = &self.tokens[self.pos - 1];
        self.error_at(t.text.clone(), t.column, message, expected)
    }

    fn error_at(&self, token: String, column: usize, message: impl Into<String>, expected: &[&str]) -> Error {
        Error::Parse(ParseError {
            line: self.number,
            column,
            token,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|t| t.text.as_str())
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.tokens.get(self.pos)?;
        self.pos += 1;
        Some(t.text.as_str())
    }

    fn node(&mut self) -> Result<String> {
        match self.peek() {
            Some(t) if is_identifier(t) => {
                self.pos += 1;
                let lower = t.to_ascii_lowercase();
                Ok(if lower == "gnd" { GROUND.to_string() } else { lower })
            }
            _ => Err(self.error("expected a node name", &["<node>"])),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek().and_then(parse_number) {
            Some(v) => {
                self.pos += 1;
                Ok(v)
            }
            None => Err(self.error("expected a number", &["<number>"])),
        }
    }

    fn expect(&mut self, text: &str) -> Result<()> {
        match self.peek() {
            Some(t) if t.eq_ignore_ascii_case(text) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected '{text}'"), &[text])),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.tokens.len() {
            Err(self.error("unexpected trailing token", &["<end of line>"]))
        } else {
            Ok(())
        }
    }

    /// `KEY=value` pairs up to the end of the line, keys upper-cased.
    fn assignments(&mut self, keys: &[&str]) -> Result<Vec<(String, &'a str, usize)>> {
        let mut out: Vec<(String, &'a str, usize)> = Vec::new();
        while let Some(key) = self.peek() {
            let upper = key.to_ascii_uppercase();
            if !keys.contains(&upper.as_str()) {
                return Err(self.error("unknown parameter", keys));
            }
            if out.iter().any(|(k, _, _)| *k == upper) {
                return Err(self.error("parameter given twice", keys));
            }
            self.pos += 1;
            self.expect("=")?;
            let at = self.pos;
            match self.next() {
                Some(v) if is_identifier(v) || parse_number(v).is_some() => out.push((upper, v, at)),
                _ => {
                    self.pos = at;
                    return Err(self.error("expected a value", &["<value>"]));
                }
            }
        }
        Ok(out)
    }

    fn value_error(&self, at: usize, message: &str, expected: &[&str]) -> Error {
        let t = &self.tokens[at];
        self.error_at(t.text.clone(), t.column, message, expected)
    }
}

fn is_identifier(t: &str) -> bool {
    !t.is_empty() && !matches!(t, "(" | ")" | "=")
}

const CARDS: &[&str] = &["R", "C", "V", "I", "M", "P", ".options", ".ic", ".end"];

/// Parses netlist text into a validated [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit> {
    let mut circuit = Circuit::default();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let tokens = tokenize(raw);
        let mut line = Line { number: i + 1, tokens: &tokens, pos: 0, end_column: raw.chars().count() + 1 };
        let head = line.peek().unwrap_or_default();
        if head.starts_with('.') {
            match head.to_ascii_lowercase().as_str() {
                ".end" => {
                    line.pos += 1;
                    line.finish()?;
                    break;
                }
                ".options" => {
                    line.pos += 1;
                    parse_options(&mut line, &mut circuit)?;
                }
                ".ic" => {
                    line.pos += 1;
                    parse_ic(&mut line, &mut circuit)?;
                }
                _ => return Err(line.error("unknown directive", &[".options", ".ic", ".end"])),
            }
            continue;
        }
        let element = parse_element(&mut line)?;
        if circuit.elements.iter().any(|e| e.name.eq_ignore_ascii_case(&element.name)) {
            return Err(Error::DuplicateName(element.name));
        }
        circuit.elements.push(element);
    }
    circuit.validate()?;
    Ok(circuit)
}

fn parse_element(line: &mut Line<'_>) -> Result<Element> {
    let name = line.peek().unwrap_or_default().to_string();
    let card = name.chars().next().map(|c| c.to_ascii_uppercase());
    if !is_identifier(&name) || !matches!(card, Some('R' | 'C' | 'V' | 'I' | 'M' | 'P')) {
        let c = card.unwrap_or(' ');
        return Err(line.error(format!("unknown element card '{c}'"), CARDS));
    }
    line.pos += 1;
    let element = match card.unwrap() {
        'R' | 'C' => {
            let (a, b) = (line.node()?, line.node()?);
            let v = line.number()?;
            if card == Some('R') {
                Element::resistor(&name, &a, &b, v)
            } else {
                Element::capacitor(&name, &a, &b, v)
            }
        }
        'V' | 'I' => {
            let (p, n) = (line.node()?, line.node()?);
            let wave = parse_waveform(line)?;
            if card == Some('V') {
                Element::vsource(&name, &p, &n, wave)
            } else {
                Element::isource(&name, &p, &n, wave)
            }
        }
        'M' => {
            let (d, g, s) = (line.node()?, line.node()?, line.node()?);
            let params = parse_finfet(line)?;
            Element::finfet(&name, &d, &g, &s, params)
        }
        _ => {
            let (a, b) = (line.node()?, line.node()?);
            let (params, state) = parse_ptm(line)?;
            let mut e = Element::ptm(&name, &a, &b, params);
            e.kind = ElementKind::Ptm { params, initial_state: state };
            e
        }
    };
    line.finish()?;
    Ok(element)
}

fn parse_waveform(line: &mut Line<'_>) -> Result<Waveform> {
    match line.peek().map(str::to_ascii_uppercase).as_deref() {
        Some("DC") => {
            line.pos += 1;
            Ok(Waveform::Dc(line.number()?))
        }
        Some("PWL") => {
            line.pos += 1;
            line.expect("(")?;
            let mut values = Vec::new();
            while line.peek() != Some(")") {
                if line.peek().is_none() {
                    return Err(line.error("unterminated PWL list", &[")"]));
                }
                values.push(line.number()?);
            }
            if values.is_empty() || values.len() % 2 != 0 {
                return Err(line.error("PWL needs time/value pairs", &["<number>"]));
            }
            line.pos += 1;
            let points: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
            if points.windows(2).any(|w| w[1].0 < w[0].0) {
                return Err(line.error_prev("PWL times must not decrease", &[]));
            }
            Ok(Waveform::Pwl(points))
        }
        _ => Err(line.error("expected a source specification", &["DC", "PWL"])),
    }
}

const M_KEYS: &[&str] = &["TYPE", "VTH", "NFIN", "K", "NSS", "ALPHA", "LAMBDA", "DVTH", "PHIT"];
const P_KEYS: &[&str] = &["RHOINS", "RHOMET", "L", "AREA", "VIMT", "IMIT", "STATE"];

fn required(line: &Line<'_>, found: &[(String, &str, usize)], keys: &[&str]) -> Result<()> {
    for key in keys {
        if !found.iter().any(|(k, _, _)| k == key) {
            return Err(line.error(format!("missing required parameter {key}"), &[key]));
        }
    }
    Ok(())
}

fn number_at(line: &Line<'_>, text: &str, at: usize) -> Result<f64> {
    parse_number(text).ok_or_else(|| line.value_error(at, "expected a number", &["<number>"]))
}

fn parse_finfet(line: &mut Line<'_>) -> Result<FinFetParams> {
    let found = line.assignments(M_KEYS)?;
    required(line, &found, &["TYPE", "VTH", "NFIN"])?;
    let mut p = FinFetParams::default();
    for (key, text, at) in &found {
        let at = *at;
        match key.as_str() {
            "TYPE" => {
                p.polarity = match text.to_ascii_lowercase().as_str() {
                    "n" | "nmos" => Polarity::N,
                    "p" | "pmos" => Polarity::P,
                    _ => return Err(line.value_error(at, "unknown device type", &["n", "p"])),
                }
            }
            "NFIN" => {
                p.n_fin = text
                    .parse::<u32>()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| line.value_error(at, "fin count must be a positive integer", &["<integer>"]))?
            }
            "VTH" => p.v_th = number_at(line, text, at)?,
            "K" => p.k = number_at(line, text, at)?,
            "NSS" => p.n_ss = number_at(line, text, at)?,
            "ALPHA" => p.alpha_sat = number_at(line, text, at)?,
            "LAMBDA" => p.lambda_clm = number_at(line, text, at)?,
            "DVTH" => p.delta_v_th = number_at(line, text, at)?,
            "PHIT" => p.phi_t = number_at(line, text, at)?,
            _ => unreachable!(),
        }
    }
    Ok(p)
}

fn parse_ptm(line: &mut Line<'_>) -> Result<(PtmParams, PtmState)> {
    let found = line.assignments(P_KEYS)?;
    required(line, &found, &["RHOINS", "RHOMET", "L", "AREA", "VIMT", "IMIT"])?;
    let mut p = PtmParams::default();
    let mut state = PtmState::Insulating;
    for (key, text, at) in &found {
        let at = *at;
        match key.as_str() {
            "STATE" => {
                state = match text.to_ascii_lowercase().as_str() {
                    "ins" => PtmState::Insulating,
                    "met" => PtmState::Metallic,
                    _ => return Err(line.value_error(at, "unknown PTM state", &["ins", "met"])),
                }
            }
            "RHOINS" => p.rho_ins = number_at(line, text, at)?,
            "RHOMET" => p.rho_met = number_at(line, text, at)?,
            "L" => p.length = number_at(line, text, at)?,
            "AREA" => p.area = number_at(line, text, at)?,
            "VIMT" => p.v_c_imt = number_at(line, text, at)?,
            "IMIT" => p.i_c_mit = number_at(line, text, at)?,
            _ => unreachable!(),
        }
    }
    Ok((p, state))
}

pub(crate) const OPTION_KEYS: &[&str] =
    &["VDD", "ABSTOL", "RELTOL", "VNTOL", "ITL", "STATEITL", "DTINIT", "DTMIN", "DTMAX", "MAXDV", "GMIN", "METHOD"];

fn parse_options(line: &mut Line<'_>, circuit: &mut Circuit) -> Result<()> {
    let found = line.assignments(OPTION_KEYS)?;
    let o = &mut circuit.options;
    for (key, text, at) in &found {
        let at = *at;
        let count = |line: &Line<'_>| {
            text.parse::<usize>()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| line.value_error(at, "expected a positive integer", &["<integer>"]))
        };
        match key.as_str() {
            "VDD" => circuit.vdd = number_at(line, text, at)?,
            "ABSTOL" => o.abstol_current = number_at(line, text, at)?,
            "RELTOL" => o.reltol = number_at(line, text, at)?,
            "VNTOL" => o.vntol = number_at(line, text, at)?,
            "ITL" => o.max_newton_iters = count(line)?,
            "STATEITL" => o.max_state_resolution_iters = count(line)?,
            "DTINIT" => o.dt_initial = number_at(line, text, at)?,
            "DTMIN" => o.dt_min = number_at(line, text, at)?,
            "DTMAX" => o.dt_max = number_at(line, text, at)?,
            "MAXDV" => o.max_step_dv = number_at(line, text, at)?,
            "GMIN" => o.gmin = number_at(line, text, at)?,
            "METHOD" => {
                o.integration_method = match text.to_ascii_lowercase().as_str() {
                    "be" => IntegrationMethod::BackwardEuler,
                    "trap" => IntegrationMethod::Trapezoidal,
                    _ => return Err(line.value_error(at, "unknown integration method", &["be", "trap"])),
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(())
}

fn parse_ic(line: &mut Line<'_>, circuit: &mut Circuit) -> Result<()> {
    if line.peek().is_none() {
        return Err(line.error("expected an initial condition", &["v(<node>)=<number>"]));
    }
    while line.peek().is_some() {
        line.expect("v")?;
        line.expect("(")?;
        let node = line.node()?;
        line.expect(")")?;
        line.expect("=")?;
        let v = line.number()?;
        circuit.nodeset.insert(node, v);
    }
    Ok(())
}
