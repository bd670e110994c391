use nalgebra::DMatrix;

use super::SystemData;
use crate::error::{Error, Result};

/// Injection shift factors: flow on each line (from→to positive) caused by a
/// unit injection at a non-slack bus withdrawn at the slack.
#[derive(Clone, Debug, PartialEq)]
pub struct Isf {
    /// Line labels, in system order.
    pub lines: Vec<String>,
    /// Non-slack bus ids, in system order.
    pub buses: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl Isf {
    pub fn get(&self, line: usize, bus: &str) -> Option<f64> {
        let col = self.buses.iter().position(|b| b == bus)?;
        Some(self.matrix[(line, col)])
    }

    /// Line flows for per-bus net injections given in system bus order. The
    /// slack entry is ignored.
    pub fn flows(&self, system: &SystemData, injections: &[f64]) -> Vec<f64> {
        let slack = &system.slack().id;
        let reduced: Vec<f64> = system
            .buses
            .iter()
            .zip(injections)
            .filter(|(b, _)| &b.id != slack)
            .map(|(_, &p)| p)
            .collect();
        (0..self.lines.len())
            .map(|l| {
                reduced
                    .iter()
                    .enumerate()
                    .map(|(n, p)| self.matrix[(l, n)] * p)
                    .sum()
            })
            .collect()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components as lists of bus ids; a single entry means connected.
pub(crate) fn islands(system: &SystemData) -> Vec<Vec<String>> {
    let n = system.buses.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for l in &system.lines {
        let (Some(a), Some(b)) = (system.bus_index(&l.from), system.bus_index(&l.to)) else {
            continue;
        };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<(usize, Vec<String>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(system.buses[i].id.clone()),
            None => groups.push((r, vec![system.buses[i].id.clone()])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

pub fn compute_isf(system: &SystemData) -> Result<Isf> {
    let isl = islands(system);
    if isl.len() > 1 {
        return Err(Error::Disconnected { islands: isl });
    }
    let slack = system
        .buses
        .iter()
        .position(|b| b.is_slack)
        .ok_or_else(|| Error::Numerical("no slack bus".into()))?;
    let n = system.buses.len();
    // position of each bus in the reduced (slack-free) ordering
    let red: Vec<Option<usize>> = {
        let mut next = 0;
        (0..n)
            .map(|i| {
                if i == slack {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let m = n - 1;
    let mut b = DMatrix::<f64>::zeros(m, m);
    let mut ends = Vec::with_capacity(system.lines.len());
    for l in &system.lines {
        if l.reactance == 0.0 {
            return Err(Error::Numerical(format!("line {} has zero reactance", l.label())));
        }
        let (i, j) = (
            system.bus_index(&l.from).expect("validated"),
            system.bus_index(&l.to).expect("validated"),
        );
        let y = 1.0 / l.reactance;
        if let Some(ri) = red[i] {
            b[(ri, ri)] += y;
        }
        if let Some(rj) = red[j] {
            b[(rj, rj)] += y;
        }
        if let (Some(ri), Some(rj)) = (red[i], red[j]) {
            b[(ri, rj)] -= y;
            b[(rj, ri)] -= y;
        }
        ends.push((red[i], red[j], y));
    }

    let x = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let lu = b.lu();
        lu.try_inverse()
            .ok_or_else(|| Error::Numerical("singular reduced susceptance matrix".into()))?
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("singular reduced susceptance matrix".into()));
    }

    let mut matrix = DMatrix::<f64>::zeros(system.lines.len(), m);
    for (l, &(ri, rj, y)) in ends.iter().enumerate() {
        for c in 0..m {
            let ti = ri.map_or(0.0, |r| x[(r, c)]);
            let tj = rj.map_or(0.0, |r| x[(r, c)]);
            matrix[(l, c)] = y * (ti - tj);
        }
    }

    Ok(Isf {
        lines: system.lines.iter().map(|l| l.label()).collect(),
        buses: system
            .buses
            .iter()
            .filter(|b| !b.is_slack)
            .map(|b| b.id.clone())
            .collect(),
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_bus_sign_convention() {
        let s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B2", 0.37)], 1);
        let isf = compute_isf(&s).unwrap();
        assert_abs_diff_eq!(isf.get(0, "B2").unwrap(), -1.0, epsilon = 1e-12);
        assert!(isf.get(0, "B1").is_none());
    }

    #[test]
    fn triangle_thirds() {
        let s = system(
            vec![bus("B1", true), bus("B2", false), bus("B3", false)],
            vec![line("B1", "B2", 0.1), line("B2", "B3", 0.1), line("B1", "B3", 0.1)],
            1,
        );
        let isf = compute_isf(&s).unwrap();
        // injection at B2: 2/3 goes directly to B1, 1/3 via B3
        assert_abs_diff_eq!(isf.get(0, "B2").unwrap(), -2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(isf.get(1, "B2").unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(isf.get(2, "B2").unwrap(), -1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_lists_islands() {
        let s = system(
            vec![bus("B1", true), bus("B2", false), bus("B3", false)],
            vec![line("B1", "B2", 0.1)],
            1,
        );
        match compute_isf(&s) {
            Err(Error::Disconnected { islands }) => {
                assert_eq!(islands, vec![vec!["B1".to_string(), "B2".into()], vec!["B3".into()]]);
            }
            other => panic!("expected disconnected, got {other:?}"),
        }
    }

    #[test]
    fn single_bus_has_empty_matrix() {
        let s = system(vec![bus("B1", true)], vec![], 1);
        let isf = compute_isf(&s).unwrap();
        assert_eq!(isf.matrix.shape(), (0, 0));
    }
}
