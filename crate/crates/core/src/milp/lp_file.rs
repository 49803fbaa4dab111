//! CPLEX-style LP text files.
//!
//! Layout written by [`write_lp`]:
//!
//! ```text
//! \ goml model
//! Minimize
//!  obj: 2 x0 - 1 z0 + 3
//! Subject To
//!  c0: 1 x0 + 1 x1 <= 4
//!  q0: [ x1 ^ 2 + 4 x2 ^ 2 - x3 ^ 2 ] <= 0
//! Bounds
//!  0 <= x0 <= 1
//!  -inf <= x1 <= +inf
//!  0 <= z0 <= 1
//! Binaries
//!  z0
//! Generals
//!  x2
//! End
//! ```
//!
//! Variables are renamed: binaries `z0, z1, ..` and every other variable
//! `x0, x1, ..`, each counted in model order. Every variable gets a line in
//! `Bounds`, in model order, so the reader recovers the original ordering.
//! A bare number in the objective is the objective constant. Rows use their
//! model name when it is a valid LP identifier, else `c<k>`. Second-order
//! cone rows are written in the bracketed quadratic form and are rejected by
//! the reader.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::milp::model::{MilpModel, VarKind};
use crate::model::Sense;

/// Deterministic file names for every model variable.
pub fn lp_names(model: &MilpModel) -> Vec<String> {
    let (mut nx, mut nz) = (0, 0);
    model
        .vars
        .iter()
        .map(|v| {
            if v.kind == VarKind::Binary {
                nz += 1;
                format!("z{}", nz - 1)
            } else {
                nx += 1;
                format!("x{}", nx - 1)
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !s.eq_ignore_ascii_case("inf")
        && !s.eq_ignore_ascii_case("infinity")
        && !s.eq_ignore_ascii_case("free")
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k == 0 {
            let _ = write!(out, " {} {}", num(a), names[j]);
        } else if a < 0.0 {
            let _ = write!(out, " - {} {}", num(-a), names[j]);
        } else {
            let _ = write!(out, " + {} {}", num(a), names[j]);
        }
    }
}

fn sense_str(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

pub fn write_lp(model: &MilpModel) -> String {
    let names = lp_names(model);
    let mut out = String::from("\\ goml model\n");
    out.push_str(if model.minimize { "Minimize\n" } else { "Maximize\n" });
    out.push_str(" obj:");
    let terms: Vec<(usize, f64)> = model.objective.iter().copied().filter(|t| t.1 != 0.0).collect();
    write_terms(&mut out, &terms, &names);
    let c = model.objective_constant;
    if terms.is_empty() {
        let _ = write!(out, " {}", num(c));
    } else if c != 0.0 {
        let _ = write!(out, " {} {}", if c < 0.0 { "-" } else { "+" }, num(c.abs()));
    }
    out.push('\n');

    out.push_str("Subject To\n");
    let mut used: HashMap<String, usize> = HashMap::new();
    for (i, row) in model.rows.iter().enumerate() {
        let mut name = if valid_ident(&row.name) && !names.contains(&row.name) {
            row.name.clone()
        } else {
            format!("c{i}")
        };
        if used.contains_key(&name) {
            name = format!("c{i}");
        }
        used.insert(name.clone(), i);
        let _ = write!(out, " {name}:");
        if row.coeffs.is_empty() && !names.is_empty() {
            let _ = write!(out, " 0 {}", names[0]);
        }
        write_terms(&mut out, &row.coeffs, &names);
        let _ = writeln!(out, " {} {}", sense_str(row.sense), num(row.rhs));
    }
    for (i, cone) in model.cones.iter().enumerate() {
        let _ = write!(out, " q{i}: [");
        for (k, &(j, a)) in cone.terms.iter().enumerate() {
            let sep = if k == 0 { "" } else { " +" };
            let _ = write!(out, "{sep} {} {} ^ 2", num(a * a), names[j]);
        }
        let _ = writeln!(out, " - {} ^ 2 ] <= 0", names[cone.t]);
    }

    out.push_str("Bounds\n");
    for (j, v) in model.vars.iter().enumerate() {
        let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), names[j], num(v.upper));
    }
    let section = |out: &mut String, title: &str, kind: VarKind| {
        let list: Vec<&str> = (0..model.vars.len())
            .filter(|&j| model.vars[j].kind == kind)
            .map(|j| names[j].as_str())
            .collect();
        if !list.is_empty() {
            let _ = writeln!(out, "{title}");
            for name in list {
                let _ = writeln!(out, " {name}");
            }
        }
    };
    section(&mut out, "Binaries", VarKind::Binary);
    section(&mut out, "Generals", VarKind::Integer);
    out.push_str("End\n");
    out
}

pub fn export_lp_file(model: &MilpModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_lp(model))?;
    Ok(())
}

pub fn read_lp_file(path: impl AsRef<Path>) -> Result<MilpModel> {
    parse_lp(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Colon,
    Plus,
    Minus,
    Sense(Sense),
    Other(char),
}

fn tokenize(line: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Syntax { offset: s, message: format!("bad number `{text}`") })?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            if text.eq_ignore_ascii_case("inf") || text.eq_ignore_ascii_case("infinity") {
                out.push(Tok::Num(f64::INFINITY));
            } else {
                out.push(Tok::Ident(text));
            }
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                ('<', Some('=')) | ('=', Some('<')) => (Tok::Sense(Sense::Le), 2),
                ('>', Some('=')) | ('=', Some('>')) => (Tok::Sense(Sense::Ge), 2),
                ('<', _) => (Tok::Sense(Sense::Le), 1),
                ('>', _) => (Tok::Sense(Sense::Ge), 1),
                ('=', _) => (Tok::Sense(Sense::Eq), 1),
                (':', _) => (Tok::Colon, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                (c, _) => (Tok::Other(c), 1),
            };
            out.push(tok);
            i += len;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_header(line: &str) -> Option<(Section, bool)> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, true),
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, false),
        "subject to" | "such that" | "st" | "s.t." => (Section::Constraints, true),
        "bounds" | "bound" => (Section::Bounds, true),
        "binaries" | "binary" | "bin" => (Section::Binaries, true),
        "generals" | "general" | "gen" | "integers" => (Section::Generals, true),
        "end" => (Section::End, true),
        _ => return None,
    })
}

struct Reader {
    model: MilpModel,
    index: HashMap<String, usize>,
    touched: Vec<bool>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.model.add_continuous(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), j);
        self.touched.push(false);
        j
    }

    /// Parses `[name:] terms`, returning the name, the terms, the constant and
    /// the remaining tokens.
    fn linear<'a>(&mut self, toks: &'a [Tok]) -> Result<(Option<String>, Vec<(usize, f64)>, f64, &'a [Tok])> {
        let mut rest = toks;
        let mut name = None;
        if let [Tok::Ident(n), Tok::Colon, tail @ ..] = rest {
            name = Some(n.clone());
            rest = tail;
        }
        let mut terms = Vec::new();
        let mut constant = 0.0;
        loop {
            let mut sign = 1.0;
            let mut any = false;
            while let [t @ (Tok::Plus | Tok::Minus), tail @ ..] = rest {
                if *t == Tok::Minus {
                    sign = -sign;
                }
                rest = tail;
                any = true;
            }
            match rest {
                [Tok::Num(v), Tok::Ident(id), tail @ ..] => {
                    let j = self.var(id);
                    terms.push((j, sign * v));
                    rest = tail;
                }
                [Tok::Num(v), tail @ ..] => {
                    constant += sign * v;
                    rest = tail;
                }
                [Tok::Ident(id), tail @ ..] => {
                    let j = self.var(id);
                    terms.push((j, sign));
                    rest = tail;
                }
                _ if any => {
                    return Err(Error::Syntax { offset: 0, message: "dangling sign".into() });
                }
                _ => break,
            }
        }
        Ok((name, terms, constant, rest))
    }
}

fn bound_value(toks: &[Tok]) -> Option<(f64, &[Tok])> {
    match toks {
        [Tok::Minus, Tok::Num(v), rest @ ..] => Some((-v, rest)),
        [Tok::Plus, Tok::Num(v), rest @ ..] => Some((*v, rest)),
        [Tok::Num(v), rest @ ..] => Some((*v, rest)),
        _ => None,
    }
}

pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut rd = Reader {
        model: MilpModel::new(),
        index: HashMap::new(),
        touched: Vec::new(),
    };
    let mut section = Section::None;
    let mut pending: Vec<Tok> = Vec::new();
    let syntax = |line: usize, message: String| Error::Syntax { offset: line, message };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some((s, minimize)) = section_header(line) {
            if !pending.is_empty() {
                return Err(syntax(lineno, "unterminated statement".into()));
            }
            if s == Section::Objective {
                rd.model.minimize = minimize;
            }
            section = s;
            continue;
        }
        let toks = tokenize(line).map_err(|_| syntax(lineno, format!("cannot tokenize `{}`", line.trim())))?;
        match section {
            Section::None | Section::End => {
                return Err(syntax(lineno, "content outside a section".into()));
            }
            Section::Objective => {
                let (_, terms, constant, rest) = rd.linear(&toks)?;
                if !rest.is_empty() {
                    return Err(syntax(lineno, "unexpected tokens in objective".into()));
                }
                for (j, c) in terms {
                    rd.model.add_objective_term(j, c);
                }
                rd.model.objective_constant += constant;
            }
            Section::Constraints => {
                if toks.iter().any(|t| *t == Tok::Other('[')) {
                    return Err(syntax(lineno, "quadratic rows are not supported".into()));
                }
                pending.extend(toks);
                let Some(pos) = pending.iter().position(|t| matches!(t, Tok::Sense(_))) else {
                    continue;
                };
                let Some((rhs, tail)) = bound_value(&pending[pos + 1..]) else {
                    continue;
                };
                if !tail.is_empty() {
                    return Err(syntax(lineno, "unexpected tokens after right-hand side".into()));
                }
                let Tok::Sense(sense) = pending[pos] else { unreachable!() };
                let stmt = std::mem::take(&mut pending);
                let (name, terms, constant, rest) = rd.linear(&stmt[..pos])?;
                if !rest.is_empty() {
                    return Err(syntax(lineno, "malformed row".into()));
                }
                let name = name.unwrap_or_else(|| format!("c{}", rd.model.rows.len()));
                rd.model.add_row(name, terms, sense, rhs - constant);
            }
            Section::Bounds => parse_bound(&mut rd, &toks).map_err(|m| syntax(lineno, m))?,
            Section::Binaries | Section::Generals => {
                for t in toks {
                    let Tok::Ident(id) = t else {
                        return Err(syntax(lineno, "expected variable names".into()));
                    };
                    let j = rd.var(&id);
                    let v = &mut rd.model.vars[j];
                    if section == Section::Binaries {
                        v.kind = VarKind::Binary;
                        if !rd.touched[j] {
                            v.lower = 0.0;
                            v.upper = 1.0;
                        }
                    } else {
                        v.kind = VarKind::Integer;
                    }
                }
            }
        }
    }
    if !pending.is_empty() {
        return Err(syntax(text.lines().count(), "unterminated row".into()));
    }
    Ok(rd.model)
}

fn parse_bound(rd: &mut Reader, toks: &[Tok]) -> std::result::Result<(), String> {
    let err = || "malformed bound".to_string();
    if let [Tok::Ident(id), Tok::Ident(kw)] = toks {
        if kw.eq_ignore_ascii_case("free") {
            let j = rd.var(id);
            rd.touched[j] = true;
            rd.model.vars[j].lower = f64::NEG_INFINITY;
            rd.model.vars[j].upper = f64::INFINITY;
            return Ok(());
        }
    }
    // optional leading "value sense"
    let (lead, rest) = match bound_value(toks) {
        Some((v, [Tok::Sense(s), rest @ ..])) => (Some((v, *s)), rest),
        Some(_) => return Err(err()),
        None => (None, toks),
    };
    let [Tok::Ident(id), rest @ ..] = rest else {
        return Err(err());
    };
    let j = rd.var(id);
    rd.touched[j] = true;
    let mut apply = |sense: Sense, v: f64, var_on_left: bool| {
        let var = &mut rd.model.vars[j];
        let s = if var_on_left {
            sense
        } else {
            match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            }
        };
        match s {
            Sense::Le => var.upper = v,
            Sense::Ge => var.lower = v,
            Sense::Eq => {
                var.lower = v;
                var.upper = v;
            }
        }
    };
    if let Some((v, s)) = lead {
        apply(s, v, false);
    }
    match rest {
        [] if lead.is_some() => Ok(()),
        [Tok::Sense(s), tail @ ..] => match bound_value(tail) {
            Some((v, [])) => {
                apply(*s, v, true);
                Ok(())
            }
            _ => Err(err()),
        },
        _ => Err(err()),
    }
}

impl MilpModel {
    /// Equality of variables (kind and bounds), rows, cones and objective,
    /// ignoring names and the registry.
    pub fn same_structure(&self, other: &MilpModel) -> bool {
        self.vars.len() == other.vars.len()
            && self
                .vars
                .iter()
                .zip(&other.vars)
                .all(|(a, b)| a.kind == b.kind && a.lower == b.lower && a.upper == b.upper)
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.coeffs == b.coeffs && a.sense == b.sense && a.rhs == b.rhs)
            && self.cones == other.cones
            && {
                let mut a: Vec<_> = self.objective.iter().copied().filter(|t| t.1 != 0.0).collect();
                let mut b: Vec<_> = other.objective.iter().copied().filter(|t| t.1 != 0.0).collect();
                a.sort_by_key(|t| t.0);
                b.sort_by_key(|t| t.0);
                a == b
            }
            && self.objective_constant == other.objective_constant
            && self.minimize == other.minimize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MilpModel {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", -1.5, 2.0);
        let z = m.add_binary("z");
        let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY);
        let k = m.add_var("k", VarKind::Integer, 0.0, 7.0);
        m.add_row("link", vec![(x, 1.0), (z, -3.25e-7), (y, 1.0)], Sense::Le, 4.0);
        m.add_row("", vec![(y, 2.0), (k, -1.0)], Sense::Eq, -0.1);
        m.add_row("ge", vec![(x, 1e12), (k, 1.0)], Sense::Ge, 1e-9);
        m.objective = vec![(x, 2.0), (z, -1.0)];
        m.objective_constant = -3.5;
        m.minimize = false;
        m
    }

    #[test]
    fn empty_model_header_only() {
        let text = write_lp(&MilpModel::new());
        assert!(text.contains("Minimize") && text.contains("Subject To") && text.ends_with("End\n"));
        let back = parse_lp(&text).unwrap();
        assert!(back.same_structure(&MilpModel::new()));
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let text = write_lp(&m);
        let back = parse_lp(&text).unwrap();
        assert!(back.same_structure(&m), "{text}");
        assert_eq!(back.vars[1].name, "z0");
        assert_eq!(back.vars[3].name, "x2");
    }

    #[test]
    fn reads_hand_written_file() {
        let text = "\\ comment\nMaximize\n obj: 3 a + 2 b\nSubject To\n c1: a + b\n   <= 4\n a + 3 b <= 6\nBounds\n a <= 3\n -inf <= b\nGenerals\n a\nEnd\n";
        let m = parse_lp(text).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!((m.vars[0].lower, m.vars[0].upper), (0.0, 3.0));
        assert_eq!(m.vars[1].lower, f64::NEG_INFINITY);
        assert_eq!(m.vars[0].kind, VarKind::Integer);
        assert!(!m.minimize);
    }
}
