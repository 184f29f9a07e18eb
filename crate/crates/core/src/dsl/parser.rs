use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde_json::Value;

use super::ast::*;
use super::ParseError;
use crate::dynamics::{InternalLevel, PulseConvention};
use crate::params::{Quantity, Unit, OVERRIDE_KEYS};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn column_of(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

/// Split a line into whitespace-separated tokens. `{...}` is one token with
/// braces matched outside JSON strings; `#` outside a brace token starts a comment.
fn tokenize(line: &str) -> Result<Vec<Token<'_>>, (usize, String)> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'#' {
            break;
        }
        let start = i;
        if b == b'{' {
            let mut depth = 0usize;
            let mut in_string = false;
            let mut escaped = false;
            let mut end = None;
            for (j, &c) in bytes.iter().enumerate().skip(i) {
                if in_string {
                    match (escaped, c) {
                        (true, _) => escaped = false,
                        (false, b'\\') => escaped = true,
                        (false, b'"') => in_string = false,
                        _ => {}
                    }
                    continue;
                }
                match c {
                    b'"' => in_string = true,
                    b'{' => depth += 1,
                    b'}' => {
                        depth -= 1;
                        if depth == 0 {
                            end = Some(j + 1);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let end = end.ok_or((column_of(line, start), "unterminated state literal".to_string()))?;
            out.push(Token { text: &line[start..end], column: column_of(line, start) });
            i = end;
            continue;
        }
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        out.push(Token { text: &line[start..i], column: column_of(line, start) });
    }
    Ok(out)
}

/// `pi`, `-pi/2`, `3*pi/4`, `0.5`: a signed product/quotient of numbers and `pi`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text.strip_prefix('+').unwrap_or(text)),
    };
    let factor = |s: &str| -> Option<f64> {
        match s {
            "pi" | "π" => Some(PI),
            _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
        }
    };
    let mut value = None;
    let mut op = '*';
    let mut rest = body;
    loop {
        let cut = rest.find(['*', '/']).unwrap_or(rest.len());
        let x = factor(&rest[..cut])?;
        value = Some(match (value, op) {
            (None, _) => x,
            (Some(v), '*') => v * x,
            (Some(v), _) => v / x,
        });
        if cut == rest.len() {
            break;
        }
        op = rest[cut..].chars().next()?;
        rest = &rest[cut + 1..];
    }
    value.map(|v| sign * v).filter(|v| v.is_finite())
}

/// Momentum arms an atom carries.
fn is_arm(label: &str) -> bool {
    matches!(label, "P0" | "P-2")
}

fn is_time_unit(u: Unit) -> bool {
    matches!(u, Unit::Second | Unit::Millisecond | Unit::Microsecond | Unit::Dimensionless)
}

/// Ids visible at a given point of the script.
#[derive(Default)]
struct Scope {
    atoms: BTreeSet<String>,
    modes: BTreeSet<String>,
}

impl Scope {
    fn contains(&self, id: &str) -> bool {
        self.atoms.contains(id) || self.modes.contains(id)
    }

    /// Subsystem id as written in state literals, e.g. `a1.int` or `c`.
    fn has_subsystem(&self, id: &str) -> bool {
        if self.modes.contains(id) {
            return true;
        }
        [".int", ".mom"]
            .iter()
            .any(|s| id.strip_suffix(s).is_some_and(|a| self.atoms.contains(a)))
    }
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> LineParser<'a> {
    fn err_at(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column, message: message.into() }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let column = self.tokens.get(self.pos.saturating_sub(1)).map_or(1, |t| t.column);
        self.err_at(column, message)
    }

    fn next(&mut self, what: &str) -> PResult<&'a str> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.text)
            }
            None => Err(self.err_at(self.end_column, format!("expected {what}"))),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|t| t.text)
    }

    fn finish(&self) -> PResult<()> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err_at(t.column, format!("unexpected {:?}", t.text))),
            None => Ok(()),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> PResult<T> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| self.err(format!("expected {what}, got {tok:?}")))
    }

    fn float(&mut self, what: &str) -> PResult<f64> {
        let v: f64 = self.parse(what)?;
        if !v.is_finite() {
            return Err(self.err(format!("{what} must be finite")));
        }
        Ok(v)
    }

    fn level(&mut self) -> PResult<InternalLevel> {
        self.parse("internal level g or e")
    }

    fn atom(&mut self, scope: &Scope) -> PResult<String> {
        let a = self.next("atom")?;
        if !scope.atoms.contains(a) {
            return Err(self.err(format!("undefined atom {a:?}")));
        }
        Ok(a.to_string())
    }

    fn mode(&mut self, scope: &Scope) -> PResult<String> {
        let m = self.next("cavity or mode")?;
        if !scope.modes.contains(m) {
            return Err(self.err(format!("undefined cavity or mode {m:?}")));
        }
        Ok(m.to_string())
    }

    fn fresh(&mut self, scope: &Scope, what: &str) -> PResult<String> {
        let id = self.next(what)?;
        let ok = !id.is_empty()
            && id.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
            && !id.starts_with('-');
        if !ok {
            return Err(self.err(format!("invalid {what} {id:?}")));
        }
        if scope.contains(id) {
            return Err(self.err(format!("{id:?} is already defined")));
        }
        Ok(id.to_string())
    }

    fn list(&mut self, what: &str) -> PResult<Vec<&'a str>> {
        let tok = self.next(what)?;
        let items: Vec<&str> = tok.split(',').collect();
        if items.iter().any(|s| s.is_empty()) {
            return Err(self.err(format!("malformed {what} list {tok:?}")));
        }
        Ok(items)
    }

    fn distinct(&self, items: &[&str], what: &str) -> PResult<()> {
        let set: BTreeSet<&&str> = items.iter().collect();
        if set.len() != items.len() {
            return Err(self.err(format!("repeated {what}")));
        }
        Ok(())
    }

    fn duration(&mut self) -> PResult<Duration> {
        let tok = self.next("duration")?;
        if tok == "auto" {
            return Ok(Duration::Auto);
        }
        let q: Quantity = tok.parse().map_err(|e| self.err(format!("bad duration: {e}")))?;
        let seconds = q.to_si(Default::default());
        if !is_time_unit(q.unit) || !(seconds >= 0.0) || !seconds.is_finite() {
            return Err(self.err(format!("bad duration {tok:?}")));
        }
        Ok(Duration::Fixed { text: tok.to_string(), seconds })
    }

    fn angle(&mut self, what: &str) -> PResult<Angle> {
        let tok = self.next(what)?;
        let value = parse_angle(tok).ok_or_else(|| self.err(format!("bad angle {tok:?}")))?;
        Ok(Angle { text: tok.to_string(), value })
    }

    /// `key=value` option; `None` if the next token is not one.
    fn option(&mut self) -> Option<(&'a str, &'a str)> {
        let (k, v) = self.peek()?.split_once('=')?;
        self.pos += 1;
        Some((k, v))
    }

    fn literal(&mut self, scope: &Scope) -> PResult<StateLiteral> {
        let column = self.tokens.get(self.pos).map_or(self.end_column, |t| t.column);
        let tok = self.next("state literal")?;
        if let Some(path) = tok.strip_prefix('@') {
            if path.is_empty() {
                return Err(self.err_at(column, "empty state file path"));
            }
            return Ok(StateLiteral::File(path.to_string()));
        }
        let v: Value = serde_json::from_str(tok)
            .map_err(|e| self.err_at(column, format!("malformed state literal: {e}")))?;
        check_literal(&v, scope).map_err(|m| self.err_at(column, format!("malformed state literal: {m}")))?;
        Ok(StateLiteral::Inline(v))
    }
}

fn check_literal(v: &Value, scope: &Scope) -> Result<(), String> {
    let amps = v
        .get("amplitudes")
        .and_then(Value::as_array)
        .filter(|a| !a.is_empty())
        .ok_or("needs a non-empty \"amplitudes\" array")?;
    for a in amps {
        let config = a.get("config").and_then(Value::as_object).ok_or("term without \"config\"")?;
        for id in config.keys() {
            if !scope.has_subsystem(id) {
                return Err(format!("undefined subsystem {id:?}"));
            }
        }
        for part in ["re", "im"] {
            if !a.get(part).is_some_and(Value::is_number) {
                return Err(format!("term without numeric {part:?}"));
            }
        }
    }
    Ok(())
}

/// Parse a whole script. Blank lines and `#` comments are skipped.
pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let mut scope = Scope::default();
    let mut statements = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens = tokenize(raw).map_err(|(column, message)| ParseError { line, column, message })?;
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser { line, tokens, pos: 0, end_column: raw.chars().count() + 1 };
        let step = parse_step(&mut p, &mut scope)?;
        p.finish()?;
        statements.push(Statement { line, step });
    }
    Ok(Script { statements })
}

fn parse_step(p: &mut LineParser<'_>, scope: &mut Scope) -> PResult<Step> {
    let keyword = p.next("keyword")?;
    let step = match keyword {
        "params" => {
            let source = p.next("preset name or file")?.to_string();
            let mut overrides = Vec::new();
            while p.peek().is_some() {
                let (k, v) = p.option().ok_or_else(|| p.err_at(p.tokens[p.pos].column, "expected key=value"))?;
                if !OVERRIDE_KEYS.contains(&k) {
                    return Err(p.err(format!("unknown parameter {k:?}")));
                }
                v.parse::<Quantity>().map_err(|e| p.err(format!("bad value for {k}: {e}")))?;
                overrides.push((k.to_string(), v.to_string()));
            }
            Step::Params { source, overrides }
        }
        "cavity" => {
            let id = p.fresh(scope, "cavity id")?;
            let initial = match p.next("initial state 0, 1 or plus")? {
                "0" => CavityInit::Vacuum,
                "1" => CavityInit::One,
                "plus" => CavityInit::Plus,
                other => return Err(p.err(format!("expected 0, 1 or plus, got {other:?}"))),
            };
            let nmax = match p.option() {
                None => None,
                Some(("nmax", v)) => {
                    let n: usize = v.parse().map_err(|_| p.err(format!("bad nmax {v:?}")))?;
                    if n == 0 {
                        return Err(p.err("nmax must be at least 1"));
                    }
                    Some(n)
                }
                Some((k, _)) => return Err(p.err(format!("unknown option {k:?}"))),
            };
            scope.modes.insert(id.clone());
            Step::Cavity { id, initial, nmax }
        }
        "atom" => {
            let name = p.fresh(scope, "atom name")?;
            let internal = p.level()?;
            let momentum = p.next("momentum P0 or P-2")?;
            if !is_arm(momentum) {
                return Err(p.err(format!("bad momentum label {momentum:?}")));
            }
            scope.atoms.insert(name.clone());
            Step::Atom { name, internal, momentum: momentum.to_string() }
        }
        "bragg" => {
            let atom = p.atom(scope)?;
            let cavity = p.mode(scope)?;
            let duration = p.duration()?;
            let route = match p.option() {
                None => None,
                Some(("route", v)) => Some(v.parse().map_err(|e: String| p.err(e))?),
                Some((k, _)) => return Err(p.err(format!("unknown option {k:?}"))),
            };
            Step::Bragg { atom, cavity, duration, route }
        }
        "pulse" => {
            let atom = p.atom(scope)?;
            let arm = match p.next("arm or all")? {
                "all" => None,
                label => {
                    if !is_arm(label) {
                        return Err(p.err(format!("bad arm {label:?}")));
                    }
                    Some(label.to_string())
                }
            };
            let theta = p.angle("theta")?;
            let phi = p.angle("phi")?;
            let convention: PulseConvention = p.parse("convention minus or plus")?;
            Step::Pulse { atom, arm, theta, phi, convention }
        }
        "ramsey" => Step::Ramsey { atom: p.atom(scope)? },
        "hadamard-momentum" => Step::HadamardMomentum { atom: p.atom(scope)? },
        "aux" => {
            let id = p.fresh(scope, "auxiliary atom id")?;
            let cavity = p.mode(scope)?;
            let duration = p.duration()?;
            let outcome = p.level()?;
            scope.modes.remove(&cavity);
            Step::Aux { id, cavity, duration, outcome }
        }
        "splitter" => {
            let in0 = p.mode(scope)?;
            let in1 = p.mode(scope)?;
            if in0 == in1 {
                return Err(p.err("splitter inputs must differ"));
            }
            scope.modes.remove(&in0);
            scope.modes.remove(&in1);
            let out2 = p.fresh(scope, "output mode")?;
            let out3 = p.fresh(scope, "output mode")?;
            if out2 == out3 {
                return Err(p.err("splitter outputs must differ"));
            }
            scope.modes.insert(out2.clone());
            scope.modes.insert(out3.clone());
            Step::Splitter { in0, in1, out2, out3 }
        }
        "postselect" => {
            let modes = mode_list(p, scope)?;
            let total = match p.option() {
                Some(("total", v)) => v.parse().map_err(|_| p.err(format!("bad total {v:?}")))?,
                _ => return Err(p.err("expected total=N")),
            };
            Step::Postselect { modes, total }
        }
        "detect" => {
            let modes = mode_list(p, scope)?;
            let choice = match p.next("enumerate or select=...")? {
                "enumerate" => Choice::Enumerate,
                tok => {
                    let counts = tok
                        .strip_prefix("select=")
                        .ok_or_else(|| p.err("expected enumerate or select=..."))?
                        .split(',')
                        .map(|c| c.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| p.err(format!("bad photon counts {tok:?}")))?;
                    if counts.len() != modes.len() {
                        return Err(p.err("one count per mode expected"));
                    }
                    for m in &modes {
                        scope.modes.remove(m);
                    }
                    Choice::Select(counts)
                }
            };
            Step::Detect { modes, choice }
        }
        "measure" => {
            let atoms = p.list("atom")?;
            for a in &atoms {
                if !scope.atoms.contains(*a) {
                    return Err(p.err(format!("undefined atom {a:?}")));
                }
            }
            p.distinct(&atoms, "atom")?;
            let parts = match p.next("int, mom or int,mom")? {
                "int" => Parts { internal: true, momentum: false },
                "mom" => Parts { internal: false, momentum: true },
                "int,mom" => Parts { internal: true, momentum: true },
                other => return Err(p.err(format!("expected int, mom or int,mom, got {other:?}"))),
            };
            let choice = match p.next("enumerate or select=...")? {
                "enumerate" => Choice::Enumerate,
                tok => {
                    let labels: Vec<String> = tok
                        .strip_prefix("select=")
                        .ok_or_else(|| p.err("expected enumerate or select=..."))?
                        .split(',')
                        .map(String::from)
                        .collect();
                    let n = atoms.len();
                    let want = n * (usize::from(parts.internal) + usize::from(parts.momentum));
                    if labels.len() != want {
                        return Err(p.err(format!("expected {want} outcome labels")));
                    }
                    let split = if parts.internal { n } else { 0 };
                    for (k, l) in labels.iter().enumerate() {
                        let ok = if k < split {
                            l.parse::<InternalLevel>().is_ok()
                        } else {
                            is_arm(l)
                        };
                        if !ok {
                            return Err(p.err(format!("bad outcome label {l:?}")));
                        }
                    }
                    Choice::Select(labels)
                }
            };
            let entropy = match p.option() {
                None => None,
                Some(("entropy", v)) => Some(id_list(p, scope, v)?),
                Some((k, _)) => return Err(p.err(format!("unknown option {k:?}"))),
            };
            Step::Measure {
                atoms: atoms.into_iter().map(String::from).collect(),
                parts,
                choice,
                entropy,
            }
        }
        "drop" => {
            let tok = p.next("ids")?;
            let ids = id_list(p, scope, tok)?;
            for id in &ids {
                scope.atoms.remove(id);
                scope.modes.remove(id);
            }
            Step::Drop { ids }
        }
        "oracle" => {
            let mut branch = InternalLevel::G;
            let mut beta_t = Angle { text: "pi/2".into(), value: PI / 2.0 };
            let mut lmax = 6;
            let mut tol = 1e-8;
            while p.peek().is_some() {
                let (k, v) = p.option().ok_or_else(|| p.err_at(p.tokens[p.pos].column, "expected key=value"))?;
                match k {
                    "branch" => branch = v.parse().map_err(|e: String| p.err(e))?,
                    "beta_t" => {
                        let value = parse_angle(v).ok_or_else(|| p.err(format!("bad angle {v:?}")))?;
                        beta_t = Angle { text: v.to_string(), value };
                    }
                    "lmax" => {
                        lmax = v.parse().ok().filter(|&l: &i32| l >= 2).ok_or_else(|| p.err("lmax must be an integer >= 2"))?
                    }
                    "tol" => {
                        tol = v.parse().ok().filter(|&t: &f64| t > 0.0).ok_or_else(|| p.err("tol must be positive"))?
                    }
                    _ => return Err(p.err(format!("unknown option {k:?}"))),
                }
            }
            Step::Oracle { branch, beta_t, lmax, tol }
        }
        "expect" => Step::Expect(match p.next("fidelity, entropy or probability")? {
            "fidelity" => {
                let target = p.literal(scope)?;
                let threshold = p.float("threshold")?;
                Expectation::Fidelity { target, threshold }
            }
            "entropy" => {
                let tok = p.next("bipartition ids")?;
                let part = id_list(p, scope, tok)?;
                let value = p.float("entropy value")?;
                let tol = p.float("tolerance")?;
                Expectation::Entropy { part, value, tol }
            }
            "probability" => {
                let value = p.float("probability")?;
                let tol = p.float("tolerance")?;
                Expectation::Probability { value, tol }
            }
            other => return Err(p.err(format!("unknown expectation {other:?}"))),
        }),
        other => return Err(p.err_at(p.tokens[0].column, format!("unknown keyword {other:?}"))),
    };
    Ok(step)
}

fn mode_list(p: &mut LineParser<'_>, scope: &Scope) -> PResult<Vec<String>> {
    let modes = p.list("mode")?;
    for m in &modes {
        if !scope.modes.contains(*m) {
            return Err(p.err(format!("undefined cavity or mode {m:?}")));
        }
    }
    p.distinct(&modes, "mode")?;
    Ok(modes.into_iter().map(String::from).collect())
}

/// Comma-separated atoms or modes, all defined.
fn id_list(p: &LineParser<'_>, scope: &Scope, tok: &str) -> PResult<Vec<String>> {
    let ids: Vec<&str> = tok.split(',').collect();
    for id in &ids {
        if id.is_empty() || !scope.contains(id) {
            return Err(p.err(format!("undefined id {id:?}")));
        }
    }
    p.distinct(&ids, "id")?;
    Ok(ids.into_iter().map(String::from).collect())
}
