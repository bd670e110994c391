//! CPLEX LP text format with quadratic constraint sections for cones.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{check_name, fmt_num};
use crate::error::{Error, Result};
use crate::model::{Block, LinearExpr, ModelInstance, RowSense, VarId, VarKind};

const TERMS_PER_LINE: usize = 6;
const OBJ_CONSTANT: &str = "objective constant:";

/// Canonical rank of each variable id.
pub(crate) fn ranks(model: &ModelInstance) -> (Vec<VarId>, Vec<usize>) {
    let order = model.canonical_order();
    let mut rank = vec![0; order.len()];
    for (r, id) in order.iter().enumerate() {
        rank[id.0] = r;
    }
    (order, rank)
}

fn write_terms(out: &mut String, model: &ModelInstance, rank: &[usize], expr: &LinearExpr, fallback: Option<VarId>) {
    let mut terms: Vec<(VarId, f64)> = expr.terms().to_vec();
    terms.sort_by_key(|(v, _)| rank[v.0]);
    if terms.is_empty() {
        if let Some(v) = fallback {
            let _ = write!(out, " 0 {}", model.variable(v).name);
        }
        return;
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.variable(*v).name;
        let sign = if *c < 0.0 { "-" } else { "+" };
        if i == 0 && sign == "+" {
            let _ = write!(out, " {} {}", fmt_num(*c), name);
        } else {
            let _ = write!(out, " {} {} {}", sign, fmt_num(c.abs()), name);
        }
    }
}

fn sense_text(s: RowSense) -> &'static str {
    match s {
        RowSense::Le => "<=",
        RowSense::Ge => ">=",
        RowSense::Eq => "=",
    }
}

pub fn emit_lp(model: &ModelInstance) -> Result<String> {
    for v in model.variables() {
        check_name(&v.name)?;
    }
    for r in model.rows() {
        check_name(&r.name)?;
    }
    for c in model.cones() {
        check_name(&c.name)?;
    }
    let (order, rank) = ranks(model);
    let first = order.first().copied();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} rows, {} cones",
        model.num_vars(),
        model.rows().len(),
        model.cones().len()
    );
    let k = model.objective().constant_term();
    if k != 0.0 {
        let _ = writeln!(out, "\\ {OBJ_CONSTANT} {}", fmt_num(k));
    }
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model, &rank, model.objective(), first);
    out.push_str("\nSubject To\n");
    for r in model.rows() {
        let _ = write!(out, " {}:", r.name);
        write_terms(&mut out, model, &rank, &r.expr, first);
        let _ = writeln!(out, " {} {}", sense_text(r.sense), fmt_num(r.rhs));
    }
    for c in model.cones() {
        let _ = write!(out, " {}: [", c.name);
        for (i, v) in c.squares.iter().enumerate() {
            if i > 0 {
                out.push_str(" +");
            }
            let _ = write!(out, " {} ^2", model.variable(*v).name);
        }
        let _ = writeln!(
            out,
            " - {} * {} ] <= 0",
            model.variable(c.product.0).name,
            model.variable(c.product.1).name
        );
    }
    out.push_str("Bounds\n");
    for &id in &order {
        let v = model.variable(id);
        let line = match (v.lower, v.upper) {
            (lo, hi) if lo == hi => format!("{} = {}", v.name, fmt_num(lo)),
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => format!("{} free", v.name),
            (lo, hi) if hi == f64::INFINITY => format!("{} >= {}", v.name, fmt_num(lo)),
            (lo, hi) if lo == f64::NEG_INFINITY => format!("-inf <= {} <= {}", v.name, fmt_num(hi)),
            (lo, hi) => format!("{} <= {} <= {}", fmt_num(lo), v.name, fmt_num(hi)),
        };
        let _ = writeln!(out, " {line}");
    }
    for (title, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = order
            .iter()
            .map(|&id| model.variable(id))
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if !names.is_empty() {
            let _ = writeln!(out, "{title}");
            for n in names {
                let _ = writeln!(out, " {n}");
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." | "such that" => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, format!("expected a number, found '{tok}'")))
}

fn is_num(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

struct Builder {
    model: ModelInstance,
    ids: HashMap<String, VarId>,
}

impl Builder {
    fn var(&mut self, name: &str) -> Result<VarId> {
        if let Some(&id) = self.ids.get(name) {
            return Ok(id);
        }
        let id = self.model.continuous(name, 0.0, f64::INFINITY)?;
        self.ids.insert(name.to_string(), id);
        Ok(id)
    }
}

/// Linear terms `[sign] [coef] name ...` until a sense token.
fn parse_linear(b: &mut Builder, toks: &[(&str, usize)]) -> Result<(LinearExpr, usize)> {
    let mut expr = LinearExpr::new();
    let mut i = 0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < toks.len() {
        let (t, ln) = toks[i];
        match t {
            "<=" | "=<" | ">=" | "=>" | "=" | "<" | ">" => break,
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ if is_num(t) && !t.eq_ignore_ascii_case("inf") && !t.eq_ignore_ascii_case("infinity") => {
                if coef.is_some() {
                    return Err(perr(ln, format!("two numbers in a row at '{t}'")));
                }
                coef = Some(num(t, ln)?);
            }
            _ => {
                let id = b.var(t)?;
                expr.add(id, sign * coef.take().unwrap_or(1.0));
                sign = 1.0;
            }
        }
        i += 1;
    }
    if let Some(v) = coef {
        expr.add_constant(sign * v);
    }
    Ok((expr, i))
}

fn parse_sense(tok: &str, line: usize) -> Result<RowSense> {
    match tok {
        "<=" | "=<" | "<" => Ok(RowSense::Le),
        ">=" | "=>" | ">" => Ok(RowSense::Ge),
        "=" => Ok(RowSense::Eq),
        other => Err(perr(line, format!("expected a sense, found '{other}'"))),
    }
}

fn parse_cone(b: &mut Builder, name: &str, toks: &[(&str, usize)], line: usize) -> Result<()> {
    // toks: between '[' and ']'
    let mut squares = Vec::new();
    let mut product = None;
    let mut i = 0;
    let mut sign = 1.0;
    while i < toks.len() {
        let (t, ln) = toks[i];
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ if is_num(t) => {
                if num(t, ln)? != 1.0 {
                    return Err(perr(ln, format!("cone {name}: only unit coefficients are supported")));
                }
            }
            _ => {
                let a = b.var(t)?;
                match toks.get(i + 1).map(|x| x.0) {
                    Some("^2") if sign > 0.0 => {
                        squares.push(a);
                        i += 1;
                    }
                    Some("*") if sign < 0.0 && product.is_none() => {
                        let (other, _) = toks
                            .get(i + 2)
                            .ok_or_else(|| perr(ln, format!("cone {name}: dangling product")))?;
                        product = Some((a, b.var(other)?));
                        i += 2;
                    }
                    _ => return Err(perr(ln, format!("cone {name}: expected Σx^2 - y * z"))),
                }
                sign = 1.0;
            }
        }
        i += 1;
    }
    let product = product.ok_or_else(|| perr(line, format!("cone {name}: missing product term")))?;
    b.model.add_cone(name, Block::General, squares, product)
}

pub fn parse_lp(text: &str) -> Result<ModelInstance> {
    let mut section = Section::Preamble;
    let mut obj_constant = 0.0;
    let mut obj_toks: Vec<(&str, usize)> = Vec::new();
    let mut con_toks: Vec<(&str, usize)> = Vec::new();
    let mut bound_lines: Vec<(&str, usize)> = Vec::new();
    let mut generals: Vec<&str> = Vec::new();
    let mut binaries: Vec<&str> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let (body, comment) = match raw.find('\\') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(v) = c.trim().strip_prefix(OBJ_CONSTANT) {
                obj_constant = num(v.trim(), ln)?;
            }
        }
        if body.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(body) {
            section = s;
            continue;
        }
        let toks = body.split_whitespace().map(|t| (t, ln));
        match section {
            Section::Preamble => return Err(perr(ln, "content before objective section")),
            Section::Objective => obj_toks.extend(toks),
            Section::Constraints => con_toks.extend(toks),
            Section::Bounds => bound_lines.push((body.trim(), ln)),
            Section::Generals => generals.extend(body.split_whitespace()),
            Section::Binaries => binaries.extend(body.split_whitespace()),
            Section::End => return Err(perr(ln, "content after End")),
        }
    }
    if section != Section::End {
        return Err(perr(text.lines().count(), "missing End"));
    }

    let mut b = Builder {
        model: ModelInstance::new(),
        ids: HashMap::new(),
    };
    let mut bounds: Vec<(VarId, f64, f64)> = Vec::new();
    for (line, ln) in bound_lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        let parsed = match t.as_slice() {
            [name, "free"] => (b.var(name)?, f64::NEG_INFINITY, f64::INFINITY),
            [name, "=", v] => {
                let v = num(v, ln)?;
                (b.var(name)?, v, v)
            }
            [name, ">=", v] => (b.var(name)?, num(v, ln)?, f64::INFINITY),
            [name, "<=", v] => (b.var(name)?, 0.0, num(v, ln)?),
            [lo, "<=", name, "<=", hi] => (b.var(name)?, num(lo, ln)?, num(hi, ln)?),
            _ => return Err(perr(ln, format!("unrecognised bound '{line}'"))),
        };
        bounds.push(parsed);
    }

    // objective
    if let Some((first, _)) = obj_toks.first() {
        if !first.ends_with(':') {
            return Err(perr(obj_toks[0].1, "objective needs a label"));
        }
        let (expr, used) = parse_linear(&mut b, &obj_toks[1..])?;
        if used + 1 != obj_toks.len() {
            return Err(perr(obj_toks[used + 1].1, "unexpected token in objective"));
        }
        let mut expr = expr;
        expr.add_constant(obj_constant);
        b.model.set_objective(expr);
    }

    // constraints
    let mut i = 0;
    while i < con_toks.len() {
        let (t, ln) = con_toks[i];
        let name = t
            .strip_suffix(':')
            .ok_or_else(|| perr(ln, format!("expected constraint label, found '{t}'")))?;
        let end = con_toks[i + 1..]
            .iter()
            .position(|(t, _)| t.ends_with(':'))
            .map(|p| i + 1 + p)
            .unwrap_or(con_toks.len());
        let body = &con_toks[i + 1..end];
        if body.first().map(|x| x.0) == Some("[") {
            let close = body
                .iter()
                .position(|x| x.0 == "]")
                .ok_or_else(|| perr(ln, format!("{name}: unclosed '['")))?;
            match &body[close + 1..] {
                [(s, sl), (r, rl)] if parse_sense(s, *sl)? == RowSense::Le && num(r, *rl)? == 0.0 => {}
                _ => return Err(perr(ln, format!("{name}: quadratic rows must read [ ... ] <= 0"))),
            }
            parse_cone(&mut b, name, &body[1..close], ln)?;
        } else {
            let (expr, used) = parse_linear(&mut b, body)?;
            let (s, sl) = *body.get(used).ok_or_else(|| perr(ln, format!("{name}: missing sense")))?;
            let sense = parse_sense(s, sl)?;
            let (r, rl) = *body.get(used + 1).ok_or_else(|| perr(ln, format!("{name}: missing rhs")))?;
            let rhs = num(r, rl)?;
            if body.len() != used + 2 {
                return Err(perr(rl, format!("{name}: trailing tokens")));
            }
            b.model.add_row(name, Block::General, expr, sense, rhs)?;
        }
        i = end;
    }

    for (id, lo, hi) in bounds {
        b.model.set_bounds(id, lo, hi)?;
    }
    for n in generals {
        let id = b.var(n)?;
        b.model.set_kind(id, VarKind::Integer);
    }
    for n in binaries {
        let id = b.var(n)?;
        b.model.set_kind(id, VarKind::Binary);
    }
    Ok(b.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelInstance {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", 3.0, f64::INFINITY).unwrap();
        m.add_row("r", Block::General, LinearExpr::new().with(x, 2.0), RowSense::Le, 10.0)
            .unwrap();
        m.set_objective(LinearExpr::new().with(x, 1.0));
        m
    }

    #[test]
    fn single_row_document() {
        let text = emit_lp(&tiny()).unwrap();
        assert_eq!(
            text,
            "\\ 1 variables, 1 rows, 0 cones\nMinimize\n obj: 1 x\nSubject To\n r: 2 x <= 10\nBounds\n x >= 3\nEnd\n"
        );
        assert_eq!(emit_lp(&parse_lp(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn cone_row_pattern() {
        let mut m = ModelInstance::new();
        let c = m.continuous("cij(rp1,k1,B1,B2)", 0.81, 1.21).unwrap();
        let s = m.continuous("sij(rp1,k1,B1,B2)", -1.21, 1.21).unwrap();
        let a = m.continuous("cii(rp1,k1,B1)", 0.81, 1.21).unwrap();
        let d = m.continuous("cii(rp1,k1,B2)", 0.81, 1.21).unwrap();
        m.add_cone("ac_cone(rp1,k1,B1,B2)", Block::AcOpf, vec![c, s], (a, d)).unwrap();
        let text = emit_lp(&m).unwrap();
        assert!(text.contains(
            " ac_cone(rp1,k1,B1,B2): [ cij(rp1,k1,B1,B2) ^2 + sij(rp1,k1,B1,B2) ^2 - cii(rp1,k1,B1) * cii(rp1,k1,B2) ] <= 0"
        ));
        let back = parse_lp(&text).unwrap();
        assert_eq!(back.cones().len(), 1);
        assert_eq!(emit_lp(&back).unwrap(), text);
    }

    #[test]
    fn empty_row_and_kinds_survive() {
        let mut m = ModelInstance::new();
        let x = m.add_var("x(g)", VarKind::Integer, 0.0, 4.0).unwrap();
        let u = m.binary("u(rp1,k1,g)").unwrap();
        let f = m.continuous("f", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_row("empty", Block::General, LinearExpr::new(), RowSense::Le, 1.0).unwrap();
        m.add_row(
            "long",
            Block::General,
            LinearExpr::from_terms((0..8).map(|i| ([x, u, f][i % 3], -0.1 * i as f64))),
            RowSense::Eq,
            -2.5e-9,
        )
        .unwrap();
        m.set_objective(LinearExpr::new().with(x, 3.0).with(f, 1e20));
        let text = emit_lp(&m).unwrap();
        assert!(text.contains(" empty: 0 f <= 1"));
        let back = parse_lp(&text).unwrap();
        assert_eq!(back.variable(back.require("x(g)").unwrap()).kind, VarKind::Integer);
        assert_eq!(back.variable(back.require("u(rp1,k1,g)").unwrap()).kind, VarKind::Binary);
        assert!(back.rows()[0].expr.is_empty());
        assert_eq!(emit_lp(&back).unwrap(), text);
    }

    #[test]
    fn overlong_name_rejected() {
        let mut m = ModelInstance::new();
        let long = format!("v({})", "a".repeat(300));
        m.continuous(long.clone(), 0.0, 1.0).unwrap();
        match emit_lp(&m) {
            Err(Error::Format(msg)) => assert!(msg.contains(&long)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn objective_constant_kept() {
        let mut m = tiny();
        let x = m.require("x").unwrap();
        m.set_objective(LinearExpr::new().with(x, 1.0).with(x, 1.0).add_const(4.0));
        let back = parse_lp(&emit_lp(&m).unwrap()).unwrap();
        assert_eq!(back.objective().constant_term(), 4.0);
    }

    trait AddConst {
        fn add_const(self, v: f64) -> Self;
    }
    impl AddConst for LinearExpr {
        fn add_const(mut self, v: f64) -> Self {
            self.add_constant(v);
            self
        }
    }
}
