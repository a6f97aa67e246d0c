//! Plain-text rendering of result files.
//!
//! Output depends only on the result file, and every float goes through
//! [`sig6`], so reports are reproducible byte for byte.

use std::fmt::Write;

use poset_h2_core::io::{ResultFile, Rows, VerdictEntry};
use poset_h2_core::verify::NormReport;
use poset_h2_core::{Poset, PosetError};

const GAP_ZERO: f64 = 1e-9;

/// Six significant digits, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn norm(x: f64) -> String {
    if x.is_finite() {
        sig6(x)
    } else {
        "unbounded".into()
    }
}

pub fn norm_line(n: &NormReport) -> String {
    format!(
        "h_open {}, h_centralized {}, h_decentralized {}",
        norm(n.h_open),
        norm(n.h_centralized),
        norm(n.h_decentralized)
    )
}

pub fn gap_line(n: &NormReport) -> String {
    let gap = n.gap();
    if !gap.is_finite() {
        "decentralization gap: undefined".into()
    } else if gap.abs() <= GAP_ZERO {
        "decentralization gap: 0".into()
    } else {
        format!("decentralization gap: {}", sig6(gap))
    }
}

pub fn verdict_table(verdicts: impl IntoIterator<Item = VerdictEntry>) -> String {
    let rows: Vec<VerdictEntry> = verdicts.into_iter().collect();
    let width = rows.iter().map(|v| v.check_name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for v in &rows {
        let measured = v.measured.map_or_else(|| "n/a".to_string(), sig6);
        let _ = writeln!(
            out,
            "  {:<width$}  {}  measured {:>12}  tolerance {}",
            v.check_name,
            if v.passed { "PASS" } else { "FAIL" },
            measured,
            sig6(v.tolerance)
        );
    }
    out
}

fn matrix(out: &mut String, rows: &Rows, indent: &str) {
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>12}", sig6(x))).collect();
        let _ = writeln!(out, "{indent}[{} ]", cells.join(""));
    }
}

/// Symbolic names for the signals of the controller's local laws.
struct Laws<'a> {
    poset: &'a Poset,
}

impl Laws<'_> {
    fn x(&self, i: usize) -> String {
        format!("x_{}", self.poset.label(i))
    }

    /// `q_l(k) = Φ_{l←k}(Γx)_k`, written through `x_k` when `k` is minimal.
    fn q(&self, l: usize, k: usize) -> String {
        let (ll, kl) = (self.poset.label(l), self.poset.label(k));
        if self.poset.strict_upstream(k).is_empty() {
            format!("Φ_{{{ll}←{kl}}} x_{kl}")
        } else {
            format!("q_{ll}({kl})")
        }
    }

    /// `(Γx)_j = x_j − Σ_{k≺j} q_j(k)`.
    fn gamma_x(&self, j: usize) -> String {
        let mut s = self.x(j);
        for k in self.poset.strict_upstream(j) {
            let _ = write!(s, " - {}", self.q(j, k));
        }
        s
    }

    /// Component `l` of `e(j) = Φ(j)(Γx)_j`.
    fn e(&self, j: usize, l: usize) -> String {
        if l == j {
            self.gamma_x(j)
        } else {
            self.q(l, j)
        }
    }
}

fn local_laws(out: &mut String, poset: &Poset) {
    let laws = Laws { poset };
    let lab = |i: usize| poset.label(i).to_string();
    let _ = writeln!(out, "local control laws: u = -Σ_j K_j e(j), e(j) = Φ(j)(Γx)_j, q_l(k) = Φ_{{l←k}}(Γx)_k");
    for j in 0..poset.len() {
        let comps: Vec<String> = poset.downstream(j).into_iter().map(|l| laws.e(j, l)).collect();
        let _ = writeln!(out, "  e({}) = [{}] over ↓{}", lab(j), comps.join("; "), lab(j));
    }
    for i in 0..poset.len() {
        let mut groups = Vec::new();
        for j in poset.upstream(i) {
            let terms: Vec<String> = poset
                .downstream(j)
                .into_iter()
                .map(|l| {
                    let e = laws.e(j, l);
                    let e = if e.contains(" - ") { format!("({e})") } else { e };
                    format!("K_{}[{},{}] {e}", lab(j), lab(i), lab(l))
                })
                .collect();
            groups.push(if terms.len() == 1 {
                format!("-{}", terms[0])
            } else {
                format!("-({})", terms.join(" + "))
            });
        }
        let mut law = groups[0].clone();
        for g in &groups[1..] {
            let _ = write!(law, " - {}", &g[1..]);
        }
        let _ = writeln!(out, "  u_{} = {law}", lab(i));
    }
}

pub fn render(file: &ResultFile) -> Result<String, PosetError> {
    let poset = Poset::build(&file.poset.elements, &file.poset.hasse_edges)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}: poset-causal H2 synthesis report",
        file.tool.name, file.tool.version
    );
    let _ = writeln!(out, "poset: {} elements ({})", poset.len(), file.poset.elements.join(", "));
    let edges: Vec<String> = file.poset.hasse_edges.iter().map(|(a, b)| format!("{a} ⪯ {b}")).collect();
    let _ = writeln!(
        out,
        "hasse edges: {}",
        if edges.is_empty() { "none".to_string() } else { edges.join(", ") }
    );
    let _ = writeln!(out, "σ_P: {}", file.poset.sigma);

    let _ = writeln!(out, "gains K_j = Ric(↓j):");
    for g in &file.gains {
        let _ = writeln!(out, "  K_{} on ↓{} = {{{}}}", g.label, g.label, g.downstream.join(", "));
        matrix(&mut out, &g.l, "    ");
    }
    let _ = writeln!(out, "controller degree: {} (bound {})", file.degree, file.degree_bound);
    let norms: NormReport = file.norms.into();
    let _ = writeln!(out, "norms: {}", norm_line(&norms));
    let _ = writeln!(out, "{}", gap_line(&norms));

    let passed = file.verdicts.iter().filter(|v| v.passed).count();
    let _ = writeln!(out, "verdicts: {passed}/{} passed", file.verdicts.len());
    out.push_str(&verdict_table(file.verdicts.iter().cloned()));
    local_laws(&mut out, &poset);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(31.631908), "31.6319");
        assert_eq!(sig6(2.8279609), "2.82796");
        assert_eq!(sig6(2.828), "2.828");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1e-9), "1e-9");
        assert_eq!(sig6(-1.234567e-12), "-1.23457e-12");
        assert_eq!(sig6(5.0), "5");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(f64::INFINITY), "inf");
    }

    #[test]
    fn gap_is_zero_within_tolerance() {
        let n = NormReport { h_open: 3.0, h_centralized: 1.0, h_decentralized: 1.0 + 1e-12 };
        assert_eq!(gap_line(&n), "decentralization gap: 0");
        let n = NormReport { h_decentralized: 1.5, ..n };
        assert_eq!(gap_line(&n), "decentralization gap: 0.5");
    }

    #[test]
    fn two_chain_laws_follow_the_nested_template() {
        let poset = Poset::chain(2);
        let mut out = String::new();
        local_laws(&mut out, &poset);
        assert!(out.contains("u_1 = -(K_1[1,1] x_1 + K_1[1,2] Φ_{2←1} x_1)"), "{out}");
        assert!(out.contains("u_2 = -(K_1[2,1] x_1 + K_1[2,2] Φ_{2←1} x_1) - K_2[2,2] (x_2 - Φ_{2←1} x_1)"), "{out}");
    }

    #[test]
    fn diamond_sink_subtracts_every_upstream_prediction() {
        let poset = Poset::build(&["1", "2", "3", "4"], &[("1", "2"), ("1", "3"), ("2", "4"), ("3", "4")]).unwrap();
        let mut out = String::new();
        local_laws(&mut out, &poset);
        assert!(out.contains("e(1) = [x_1; Φ_{2←1} x_1; Φ_{3←1} x_1; Φ_{4←1} x_1]"), "{out}");
        assert!(out.contains("e(2) = [x_2 - Φ_{2←1} x_1; q_4(2)]"), "{out}");
        assert!(out.contains("e(4) = [x_4 - Φ_{4←1} x_1 - q_4(2) - q_4(3)]"), "{out}");
    }
}
