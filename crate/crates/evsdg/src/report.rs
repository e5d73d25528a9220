//! JSON rendering of validation reports.

use evsdg_core::validate::ValidationReport;
use evsdg_core::SlotKey;
use serde::Serialize;

const NOTES: [&str; 2] = [
    "ks_per_slot tests each slot's inter-arrival times against the exponential with the model's rate for that slot; the rate is not re-estimated from the tested sample",
    "p-values use the asymptotic Kolmogorov distribution; slots listed in low_power have fewer than 10 inter-arrival times",
];

#[derive(Debug, Serialize)]
struct KsRow {
    month: u8,
    daytype: &'static str,
    slot: u32,
    d: f64,
    p: f64,
    n: usize,
}

#[derive(Debug, Serialize)]
struct CountRow {
    month: u8,
    daytype: &'static str,
    slot: u32,
    mean_real: Option<f64>,
    var_real: Option<f64>,
    mean_synth: Option<f64>,
    var_synth: Option<f64>,
}

#[derive(Debug, Serialize)]
struct KeyRow {
    month: u8,
    daytype: &'static str,
    slot: u32,
}

impl From<&SlotKey> for KeyRow {
    fn from(k: &SlotKey) -> Self {
        Self { month: k.month, daytype: k.daytype.as_str(), slot: k.slot }
    }
}

#[derive(Debug, Serialize)]
struct ReportFile {
    ks_per_slot: Vec<KsRow>,
    counts: Vec<CountRow>,
    duration_ks: f64,
    energy_ks: f64,
    n_real: usize,
    n_synth: usize,
    ks_pass_rate: Option<f64>,
    alpha: f64,
    omitted: Vec<KeyRow>,
    low_power: Vec<KeyRow>,
    notes: [&'static str; 2],
}

/// Significance level used for the pass rate in reports and summaries.
pub const ALPHA: f64 = 0.05;

/// Pretty JSON with sorted keys and a trailing newline.
pub fn report_to_string(r: &ValidationReport) -> String {
    let fit = &r.arrival_fit;
    let file = ReportFile {
        ks_per_slot: fit
            .cells
            .iter()
            .map(|(k, res)| KsRow {
                month: k.month,
                daytype: k.daytype.as_str(),
                slot: k.slot,
                d: res.statistic,
                p: res.p_value,
                n: res.n,
            })
            .collect(),
        counts: r
            .comparison
            .counts
            .iter()
            .map(|(k, c)| CountRow {
                month: k.month,
                daytype: k.daytype.as_str(),
                slot: k.slot,
                mean_real: c.mean_real,
                var_real: c.var_real,
                mean_synth: c.mean_synth,
                var_synth: c.var_synth,
            })
            .collect(),
        duration_ks: r.comparison.duration_ks,
        energy_ks: r.comparison.energy_ks,
        n_real: r.comparison.n_real,
        n_synth: r.comparison.n_synth,
        ks_pass_rate: fit.pass_rate(ALPHA),
        alpha: ALPHA,
        omitted: fit.omitted.iter().map(Into::into).collect(),
        low_power: fit.low_power.iter().map(Into::into).collect(),
        notes: NOTES,
    };
    let value = serde_json::to_value(file).expect("report values are finite");
    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
    text.push('\n');
    text
}
