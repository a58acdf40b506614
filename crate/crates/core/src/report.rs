//! Analysis rows and their text and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lattice::SecurityLevel;
use crate::term::TheoryTag;
use crate::witness::SelectionVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl From<bool> for Verdict {
    fn from(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomClass {
    Atom,
    Variable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    Increasing,
    NotIncreasing,
}

/// One protective-key case of a variable's upper bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRow {
    pub key: Option<String>,
    pub lower: SecurityLevel,
    pub upper: SecurityLevel,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub role: String,
    pub session: String,
    pub step: u32,
    pub atom: String,
    pub kind: AtomClass,
    #[serde(rename = "type")]
    pub atom_type: Option<SecurityLevel>,
    pub lower: SecurityLevel,
    /// Join of the case values when there are several.
    pub upper: SecurityLevel,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseRow>,
    pub r_minus: Vec<String>,
    pub r_plus: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub protocol: String,
    pub theory: TheoryTag,
    pub variant: SelectionVariant,
    pub overall: Overall,
    pub rows: Vec<AnalysisRow>,
}

impl Report {
    pub fn new(protocol: String, theory: TheoryTag, variant: SelectionVariant, rows: Vec<AnalysisRow>) -> Report {
        let overall = if rows.iter().all(|r| r.verdict == Verdict::Pass) {
            Overall::Increasing
        } else {
            Overall::NotIncreasing
        };
        Report {
            protocol,
            theory,
            variant,
            overall,
            rows,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &AnalysisRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }
}

pub fn render_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

fn paint(text: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

fn pad(s: &str, w: usize) -> String {
    let mut out = s.to_string();
    out.extend(std::iter::repeat_n(' ', w.saturating_sub(width(s))));
    out
}

/// Fixed-width table with a summary footer.
pub fn render_text(report: &Report, color: bool, notes: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "protocol {}  theory {}  variant {}",
        report.protocol, report.theory, report.variant
    );
    if report.rows.is_empty() {
        let _ = writeln!(out, "no analyzable atoms");
    } else {
        let header = ["#", "atom", "role", "R-", "r+", "lower", "upper", ""];
        let cells: Vec<[String; 8]> = report
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mark = match r.verdict {
                    Verdict::Pass => "✓",
                    Verdict::Fail => "✗",
                };
                [
                    (i + 1).to_string(),
                    r.atom.clone(),
                    format!("{}:{}", r.role, r.step),
                    if r.r_minus.is_empty() {
                        "-".to_string()
                    } else {
                        r.r_minus.join(", ")
                    },
                    r.r_plus.clone(),
                    r.lower.to_string(),
                    r.upper.to_string(),
                    mark.to_string(),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| width(h)).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(width(c));
            }
        }
        let line: Vec<String> = header.iter().zip(&widths).map(|(h, w)| pad(h, *w)).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        for (row, r) in cells.iter().zip(&report.rows) {
            let mut parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| pad(c, *w)).collect();
            let code = if r.verdict == Verdict::Pass { "32" } else { "31" };
            let last = parts.pop().unwrap_or_default();
            parts.push(paint(last.trim_end(), code, color));
            let _ = writeln!(out, "{}", parts.join("  "));
            for c in &r.cases {
                let _ = writeln!(
                    out,
                    "    case {}: {} vs {} {}",
                    c.key.as_deref().unwrap_or("clear"),
                    c.lower,
                    c.upper,
                    if c.verdict == Verdict::Pass { "✓" } else { "✗" }
                );
            }
        }
    }
    for n in notes {
        let _ = writeln!(out, "note: {n}");
    }
    match report.overall {
        Overall::Increasing => {
            let _ = writeln!(
                out,
                "{}",
                paint("increasing: every checked atom keeps its level", "32", color)
            );
        }
        Overall::NotIncreasing => {
            let failed: Vec<String> = report.failures().map(|r| format!("{} in {}", r.atom, r.role)).collect();
            let _ = writeln!(
                out,
                "{}",
                paint(
                    &format!(
                        "not increasing: {} may involve a flaw (check failed for {})",
                        report.protocol,
                        failed.join(", ")
                    ),
                    "31",
                    color
                )
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(atom: &str, verdict: Verdict) -> AnalysisRow {
        AnalysisRow {
            role: "A^1".into(),
            session: "a".into(),
            step: 1,
            atom: atom.into(),
            kind: AtomClass::Atom,
            atom_type: Some(SecurityLevel::of(["A", "B"])),
            lower: SecurityLevel::of(["B"]),
            upper: SecurityLevel::top(),
            verdict,
            cases: Vec::new(),
            r_minus: Vec::new(),
            r_plus: format!("{{{atom}.A}}_kb"),
        }
    }

    #[test]
    fn empty_report() {
        let r = Report::new("p".into(), TheoryTag::Empty, SelectionVariant::Max, Vec::new());
        assert_eq!(r.overall, Overall::Increasing);
        assert!(render_text(&r, false, &[]).contains("no analyzable atoms"));
    }

    #[test]
    fn failing_row_is_named_in_footer() {
        let r = Report::new(
            "p".into(),
            TheoryTag::Homomorphic,
            SelectionVariant::Max,
            vec![row("Na", Verdict::Pass), row("Nb", Verdict::Fail)],
        );
        assert_eq!(r.overall, Overall::NotIncreasing);
        let text = render_text(&r, false, &[]);
        assert!(text.contains("may involve a flaw (check failed for Nb in A^1)"));
        assert!(text.lines().nth(2).unwrap().ends_with('✓'));
        assert!(render_text(&r, true, &[]).contains("\x1b[31m"));
    }
}
