//! Free-format MPS with QCMATRIX sections for cones.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::lp::ranks;
use super::{check_name, fmt_num};
use crate::error::{Error, Result};
use crate::model::{Block, LinearExpr, ModelInstance, RowSense, VarId, VarKind};

const OBJ: &str = "obj";

pub fn emit_mps(model: &ModelInstance) -> Result<String> {
    for n in model
        .variables()
        .iter()
        .map(|v| &v.name)
        .chain(model.rows().iter().map(|r| &r.name))
        .chain(model.cones().iter().map(|c| &c.name))
    {
        check_name(n)?;
        if n == OBJ {
            return Err(Error::Format(format!("name '{OBJ}' is reserved for the objective row")));
        }
    }
    let (order, _) = ranks(model);
    let mut out = String::new();
    out.push_str("NAME gep\nROWS\n N obj\n");
    for r in model.rows() {
        let t = match r.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {t} {}", r.name);
    }
    for c in model.cones() {
        let _ = writeln!(out, " L {}", c.name);
    }

    let mut entries: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(v, c) in model.objective().terms() {
        entries[v.0].push((OBJ, c));
    }
    for r in model.rows() {
        for &(v, c) in r.expr.terms() {
            entries[v.0].push((&r.name, c));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for &id in &order {
        let v = model.variable(id);
        let int = v.kind.is_discrete();
        if int != in_int {
            let tag = if int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, " M{marker} 'MARKER' '{tag}'");
            marker += 1;
            in_int = int;
        }
        if entries[id.0].is_empty() {
            let _ = writeln!(out, " {} {OBJ} 0", v.name);
        }
        for (row, c) in &entries[id.0] {
            let _ = writeln!(out, " {} {row} {}", v.name, fmt_num(*c));
        }
    }
    if in_int {
        let _ = writeln!(out, " M{marker} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    let k = model.objective().constant_term();
    if k != 0.0 {
        let _ = writeln!(out, " RHS {OBJ} {}", fmt_num(-k));
    }
    for r in model.rows() {
        if r.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", r.name, fmt_num(r.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for &id in &order {
        let v = model.variable(id);
        let n = &v.name;
        match (v.kind, v.lower, v.upper) {
            (VarKind::Binary, lo, hi) if lo == 0.0 && hi == 1.0 => {
                let _ = writeln!(out, " BV BND {n}");
            }
            (_, lo, hi) if lo == hi => {
                let _ = writeln!(out, " FX BND {n} {}", fmt_num(lo));
            }
            (_, lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => {
                let _ = writeln!(out, " FR BND {n}");
            }
            (_, lo, hi) => {
                if lo == f64::NEG_INFINITY {
                    let _ = writeln!(out, " MI BND {n}");
                } else {
                    let _ = writeln!(out, " LO BND {n} {}", fmt_num(lo));
                }
                if hi == f64::INFINITY {
                    let _ = writeln!(out, " PL BND {n}");
                } else {
                    let _ = writeln!(out, " UP BND {n} {}", fmt_num(hi));
                }
            }
        }
    }

    for c in model.cones() {
        let _ = writeln!(out, "QCMATRIX {}", c.name);
        for v in &c.squares {
            let n = &model.variable(*v).name;
            let _ = writeln!(out, " {n} {n} 1");
        }
        let (a, b) = (&model.variable(c.product.0).name, &model.variable(c.product.1).name);
        if a == b {
            let _ = writeln!(out, " {a} {a} -1");
        } else {
            let _ = writeln!(out, " {a} {b} -0.5");
            let _ = writeln!(out, " {b} {a} -0.5");
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
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

enum RowKind {
    Linear(RowSense),
    Objective,
}

pub fn parse_mps(text: &str) -> Result<ModelInstance> {
    let mut section = "";
    let mut rows: Vec<(String, RowKind)> = Vec::new();
    let mut row_pos: HashMap<String, usize> = HashMap::new();
    let mut exprs: Vec<LinearExpr> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut objective = LinearExpr::new();
    let mut obj_constant = 0.0;
    let mut model = ModelInstance::new();
    let mut ids: HashMap<String, VarId> = HashMap::new();
    let mut in_int = false;
    let mut explicit_lower: Vec<bool> = Vec::new();
    let mut cones: Vec<(String, Vec<VarId>, Option<(VarId, VarId)>)> = Vec::new();
    let mut ended = false;

    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let t: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = t[0];
            match section {
                "NAME" | "ROWS" | "COLUMNS" | "RHS" | "BOUNDS" => {}
                "QCMATRIX" => {
                    let name = t.get(1).ok_or_else(|| perr(ln, "QCMATRIX without row name"))?;
                    cones.push((name.to_string(), Vec::new(), None));
                }
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(perr(ln, format!("unknown section {other}"))),
            }
            continue;
        }
        match section {
            "ROWS" => {
                let [kind, name] = t.as_slice() else {
                    return Err(perr(ln, "ROWS entries need a type and a name"));
                };
                let k = match *kind {
                    "N" => RowKind::Objective,
                    "L" => RowKind::Linear(RowSense::Le),
                    "G" => RowKind::Linear(RowSense::Ge),
                    "E" => RowKind::Linear(RowSense::Eq),
                    other => return Err(perr(ln, format!("unknown row type {other}"))),
                };
                row_pos.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), k));
                exprs.push(LinearExpr::new());
                rhs.push(0.0);
            }
            "COLUMNS" => {
                if t.len() == 3 && t[1] == "'MARKER'" {
                    in_int = match t[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(perr(ln, format!("unknown marker {other}"))),
                    };
                    continue;
                }
                if t.len() < 3 || t.len() % 2 == 0 {
                    return Err(perr(ln, "COLUMNS entries are: column (row value)+"));
                }
                let id = match ids.get(t[0]) {
                    Some(&id) => id,
                    None => {
                        let kind = if in_int { VarKind::Integer } else { VarKind::Continuous };
                        let id = model.add_var(t[0], kind, 0.0, f64::INFINITY)?;
                        ids.insert(t[0].to_string(), id);
                        explicit_lower.push(false);
                        id
                    }
                };
                for pair in t[1..].chunks(2) {
                    let pos = *row_pos
                        .get(pair[0])
                        .ok_or_else(|| perr(ln, format!("unknown row {}", pair[0])))?;
                    let v = num(pair[1], ln)?;
                    match rows[pos].1 {
                        RowKind::Objective => objective.add(id, v),
                        RowKind::Linear(_) => exprs[pos].add(id, v),
                    }
                }
            }
            "RHS" => {
                if t.len() < 3 || t.len() % 2 == 0 {
                    return Err(perr(ln, "RHS entries are: set (row value)+"));
                }
                for pair in t[1..].chunks(2) {
                    let pos = *row_pos
                        .get(pair[0])
                        .ok_or_else(|| perr(ln, format!("unknown row {}", pair[0])))?;
                    let v = num(pair[1], ln)?;
                    match rows[pos].1 {
                        RowKind::Objective => obj_constant = -v,
                        RowKind::Linear(_) => rhs[pos] = v,
                    }
                }
            }
            "BOUNDS" => {
                if t.len() < 3 {
                    return Err(perr(ln, "BOUNDS entries are: type set column [value]"));
                }
                let id = *ids
                    .get(t[2])
                    .ok_or_else(|| perr(ln, format!("unknown column {}", t[2])))?;
                let v = model.variable(id).clone();
                let val = || t.get(3).ok_or_else(|| perr(ln, "bound value missing")).and_then(|x| num(x, ln));
                let (lo, hi) = match t[0] {
                    "UP" => {
                        let u = val()?;
                        let lo = if u < 0.0 && !explicit_lower[id.0] { f64::NEG_INFINITY } else { v.lower };
                        (lo, u)
                    }
                    "LO" => {
                        explicit_lower[id.0] = true;
                        (val()?, v.upper)
                    }
                    "FX" => {
                        let x = val()?;
                        (x, x)
                    }
                    "FR" => (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => {
                        explicit_lower[id.0] = true;
                        (f64::NEG_INFINITY, v.upper)
                    }
                    "PL" => (v.lower, f64::INFINITY),
                    "BV" => {
                        model.set_kind(id, VarKind::Binary);
                        (0.0, 1.0)
                    }
                    other => return Err(perr(ln, format!("unknown bound type {other}"))),
                };
                if lo > hi {
                    // transient while LO/UP arrive in either order
                    model.set_bounds(id, lo, lo)?;
                } else {
                    model.set_bounds(id, lo, hi)?;
                }
            }
            "QCMATRIX" => {
                let [a, b, v] = t.as_slice() else {
                    return Err(perr(ln, "QCMATRIX entries are: column column value"));
                };
                let v = num(v, ln)?;
                let ia = *ids.get(*a).ok_or_else(|| perr(ln, format!("unknown column {a}")))?;
                let ib = *ids.get(*b).ok_or_else(|| perr(ln, format!("unknown column {b}")))?;
                let cone = cones.last_mut().expect("section opened with a name");
                match (ia == ib, v) {
                    (true, v) if v == 1.0 => cone.1.push(ia),
                    (true, v) if v == -1.0 && cone.2.is_none() => cone.2 = Some((ia, ia)),
                    (false, v) if v == -0.5 => match cone.2 {
                        None => cone.2 = Some((ia, ib)),
                        Some(p) if p == (ib, ia) => {}
                        _ => return Err(perr(ln, format!("cone {}: more than one product term", cone.0))),
                    },
                    _ => return Err(perr(ln, format!("cone {}: unsupported coefficient {v}", cone.0))),
                }
            }
            "NAME" => {}
            other => return Err(perr(ln, format!("data outside a section ({other})"))),
        }
    }
    if !ended {
        return Err(perr(text.lines().count(), "missing ENDATA"));
    }

    objective.add_constant(obj_constant);
    model.set_objective(objective);
    let cone_names: HashMap<&str, usize> = cones.iter().enumerate().map(|(i, c)| (c.0.as_str(), i)).collect();
    for (pos, (name, kind)) in rows.iter().enumerate() {
        if let RowKind::Linear(sense) = kind {
            if cone_names.contains_key(name.as_str()) {
                continue;
            }
            model.add_row(name.clone(), Block::General, exprs[pos].clone(), *sense, rhs[pos])?;
        }
    }
    for (name, squares, product) in cones {
        let product = product.ok_or_else(|| perr(0, format!("cone {name}: missing product term")))?;
        model.add_cone(name, Block::General, squares, product)?;
    }
    Ok(model)
}
