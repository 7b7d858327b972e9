//! Record and summary CSV output. Formatting is plain `Display` for
//! floats (shortest round-trip form), so identical runs serialize to
//! identical bytes.

use ced_core::policy::PolicyKind;

use crate::sweep::TrialRecord;

pub const RECORD_HEADER: &str = "n,trial,strategy,seed,interventions,identified,fvs,wall_ms";
pub const SUMMARY_HEADER: &str = "n,strategy,mean,std,min,max,fvs_mean,ratio_to_fvs";

/// One line per record, LF endings, empty cells for absent values.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let fvs = r.fvs_size.map(|s| s.to_string()).unwrap_or_default();
        let wall = r.wall_ms.map(|w| w.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            r.trial,
            r.strategy.name(),
            r.seed,
            r.interventions,
            u8::from(r.identified),
            fvs,
            wall,
        ));
    }
    out
}

/// Interventions-used statistics for one (node count, strategy) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub strategy: PolicyKind,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: usize,
    pub max: usize,
    pub fvs_mean: Option<f64>,
    /// fvs_mean / mean; absent when FVS is off or the mean is zero.
    pub ratio_to_fvs: Option<f64>,
}

/// Groups records by (n, strategy), in their order of first appearance,
/// which for sweep output means node counts then configured strategies.
pub fn aggregate(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, PolicyKind)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.n, r.strategy)) {
            keys.push((r.n, r.strategy));
        }
    }
    keys.iter()
        .map(|&(n, strategy)| {
            let group: Vec<&TrialRecord> =
                records.iter().filter(|r| r.n == n && r.strategy == strategy).collect();
            let count = group.len() as f64;
            let mean = group.iter().map(|r| r.interventions as f64).sum::<f64>() / count;
            let variance = group
                .iter()
                .map(|r| (r.interventions as f64 - mean).powi(2))
                .sum::<f64>()
                / count;
            let sizes: Vec<usize> = group.iter().filter_map(|r| r.fvs_size).collect();
            let fvs_mean = (sizes.len() == group.len())
                .then(|| sizes.iter().sum::<usize>() as f64 / count);
            SummaryRow {
                n,
                strategy,
                mean,
                std: variance.sqrt(),
                min: group.iter().map(|r| r.interventions).min().unwrap(),
                max: group.iter().map(|r| r.interventions).max().unwrap(),
                fvs_mean,
                ratio_to_fvs: fvs_mean.and_then(|f| (mean > 0.0).then(|| f / mean)),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let fvs_mean = row.fvs_mean.map(|v| v.to_string()).unwrap_or_default();
        let ratio = row.ratio_to_fvs.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.n,
            row.strategy.name(),
            row.mean,
            row.std,
            row.min,
            row.max,
            fvs_mean,
            ratio,
        ));
    }
    out
}
