//! Rule files: one rule per line, `text<TAB>supp<TAB>conf<TAB>hc<TAB>rho<TAB>score`.

use std::io::{BufRead, Write};

use super::{MinedRule, SearchError};
use crate::kg::KnowledgeGraph;
use crate::rule::{Rule, RuleStats};

pub fn write_rules<W: Write>(mut w: W, kg: &KnowledgeGraph, rules: &[MinedRule]) -> std::io::Result<()> {
    for r in rules {
        writeln!(
            w,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            r.rule.display(kg),
            r.stats.supp,
            r.stats.conf,
            r.stats.hc,
            r.rho,
            r.score
        )?;
    }
    Ok(())
}

/// Reads a rule file. Only the columns present in the file are restored;
/// other statistics are left at their defaults.
pub fn read_rules<R: BufRead>(r: R, kg: &KnowledgeGraph) -> Result<Vec<MinedRule>, SearchError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| SearchError::Format { line: i + 1, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let rule = Rule::parse(fields[0], kg).map_err(|e| bad(e.to_string()))?;
        let supp = fields[1].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let mut nums = [0.0; 4];
        for (n, f) in nums.iter_mut().zip(&fields[2..]) {
            *n = f.parse::<f64>().map_err(|e| bad(e.to_string()))?;
        }
        out.push(MinedRule {
            rule,
            stats: RuleStats {
                supp,
                conf: nums[0],
                hc: nums[1],
                ..Default::default()
            },
            rho: nums[2],
            score: nums[3],
            emitted_secs: 0.0,
        });
    }
    Ok(out)
}
