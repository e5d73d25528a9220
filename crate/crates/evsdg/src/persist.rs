//! Model files: one JSON document holding the arrival model and both mixture
//! banks, with parameters only.
//!
//! Output is canonical: object keys sorted, two-space indentation, floats in
//! their shortest round-trip form, a trailing newline. Saving a loaded file
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use evsdg_core::arrival::FourierSeries;
use evsdg_core::generator::SCHEMA_VERSION;
use evsdg_core::{
    ArrivalModel, ArrivalRate, ArrivalSampler, CountFamily, DayKey, DayType, Gmm, IatBoundaryPolicy, LambdaCurve,
    LambdaTable, MixKey, MixtureBank, MixtureKind, ModelMeta, RateBounds, SdgModel, SlotKey, TimeGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::parse_timestamp;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersionMismatch { found: String },
    #[error("invalid model: {0}")]
    InvariantViolation(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError { line: usize, column: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn invalid(msg: impl Into<String>) -> PersistError {
    PersistError::InvariantViolation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DayTypeField {
    Weekday,
    Weekend,
}

impl From<DayType> for DayTypeField {
    fn from(d: DayType) -> Self {
        match d {
            DayType::Weekday => DayTypeField::Weekday,
            DayType::Weekend => DayTypeField::Weekend,
        }
    }
}

impl From<DayTypeField> for DayType {
    fn from(d: DayTypeField) -> Self {
        match d {
            DayTypeField::Weekday => DayType::Weekday,
            DayTypeField::Weekend => DayType::Weekend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RateMode {
    Table,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PolicyField {
    Naive,
    Restart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SamplerField {
    Iat,
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindField {
    ConnectedTime,
    Energy,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: String,
    grid: GridFile,
    arrival: ArrivalFile,
    connected: BankFile,
    energy: BankFile,
    meta: MetaFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    slot_minutes: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    lambda_min: f64,
    lambda_max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrivalFile {
    mode: RateMode,
    bounds: BoundsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<RateEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<CurveEntry>>,
    count_family: Vec<NegBinomEntry>,
    iat_boundary_policy: PolicyField,
    sampler: SamplerField,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateEntry {
    month: u32,
    daytype: DayTypeField,
    slot: u32,
    lambda: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveEntry {
    month: u32,
    daytype: DayTypeField,
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NegBinomEntry {
    month: u32,
    daytype: DayTypeField,
    slot: u32,
    r: f64,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankFile {
    kind: KindField,
    by_daytype: bool,
    cells: Vec<CellFile>,
    pooled_fallback: GmmFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    month: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    daytype: Option<DayTypeField>,
    slot: u32,
    weights: Vec<f64>,
    means: Vec<f64>,
    stddevs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GmmFile {
    weights: Vec<f64>,
    means: Vec<f64>,
    stddevs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    trained_at: String,
    n_training_sessions: u64,
}

impl From<&Gmm> for GmmFile {
    fn from(g: &Gmm) -> Self {
        Self { weights: g.weights().to_vec(), means: g.means().to_vec(), stddevs: g.stddevs().to_vec() }
    }
}

fn bank_to_file(bank: &MixtureBank) -> BankFile {
    let cells = bank
        .models()
        .iter()
        .map(|(key, g)| CellFile {
            month: u32::from(key.month),
            daytype: key.daytype.map(Into::into),
            slot: key.slot,
            weights: g.weights().to_vec(),
            means: g.means().to_vec(),
            stddevs: g.stddevs().to_vec(),
        })
        .collect();
    BankFile {
        kind: match bank.kind() {
            MixtureKind::ConnectedTime => KindField::ConnectedTime,
            MixtureKind::Energy => KindField::Energy,
        },
        by_daytype: bank.by_daytype(),
        cells,
        pooled_fallback: bank.pooled_fallback().into(),
    }
}

fn arrival_to_file(model: &ArrivalModel) -> ArrivalFile {
    let bounds = model.rate().bounds();
    let (mode, entries, order, coefficients) = match model.rate() {
        ArrivalRate::Table(t) => {
            let entries = t
                .values()
                .iter()
                .map(|(k, &lambda)| RateEntry {
                    month: u32::from(k.month),
                    daytype: k.daytype.into(),
                    slot: k.slot,
                    lambda,
                })
                .collect();
            (RateMode::Table, Some(entries), None, None)
        }
        ArrivalRate::Curve(c) => {
            let coefficients = c
                .series()
                .iter()
                .map(|(d, s)| CurveEntry {
                    month: u32::from(d.month),
                    daytype: d.daytype.into(),
                    a0: s.a0,
                    a: s.cos.clone(),
                    b: s.sin.clone(),
                })
                .collect();
            (RateMode::Curve, None, Some(c.order()), Some(coefficients))
        }
    };
    let count_family = model
        .counts()
        .negbinom_entries()
        .map(|(k, r, p)| NegBinomEntry { month: u32::from(k.month), daytype: k.daytype.into(), slot: k.slot, r, p })
        .collect();
    ArrivalFile {
        mode,
        bounds: BoundsFile { lambda_min: bounds.min(), lambda_max: bounds.max() },
        entries,
        order,
        coefficients,
        count_family,
        iat_boundary_policy: match model.iat_boundary_policy() {
            IatBoundaryPolicy::Naive => PolicyField::Naive,
            IatBoundaryPolicy::Restart => PolicyField::Restart,
        },
        sampler: match model.sampler() {
            ArrivalSampler::Iat => SamplerField::Iat,
            ArrivalSampler::Counts => SamplerField::Counts,
        },
    }
}

fn to_file(m: &SdgModel) -> ModelFile {
    ModelFile {
        schema_version: m.meta().schema_version.clone(),
        grid: GridFile { slot_minutes: m.grid().slot_minutes() },
        arrival: arrival_to_file(m.arrival()),
        connected: bank_to_file(m.connected()),
        energy: bank_to_file(m.energy()),
        meta: MetaFile {
            trained_at: m.meta().trained_at.to_string(),
            n_training_sessions: m.meta().n_training_sessions,
        },
    }
}

/// The canonical text of a model file.
pub fn model_to_string(m: &SdgModel) -> String {
    // Value objects are BTreeMaps, so keys come out sorted.
    let value = serde_json::to_value(to_file(m)).expect("model fields are finite");
    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
    text.push('\n');
    text
}

pub fn save_model<W: Write>(m: &SdgModel, mut sink: W) -> io::Result<()> {
    sink.write_all(model_to_string(m).as_bytes())?;
    sink.flush()
}

fn parse_error(e: serde_json::Error) -> PersistError {
    PersistError::ParseError { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn model_from_str(text: &str) -> Result<SdgModel, PersistError> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    match value.get("schema_version") {
        Some(Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(Value::String(v)) => return Err(PersistError::SchemaVersionMismatch { found: v.clone() }),
        Some(other) => return Err(PersistError::SchemaVersionMismatch { found: other.to_string() }),
        None => return Err(PersistError::SchemaVersionMismatch { found: "(missing)".into() }),
    }
    let file: ModelFile = serde_json::from_str(text).map_err(parse_error)?;
    from_file(file)
}

pub fn load_model<R: Read>(mut source: R) -> Result<SdgModel, PersistError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    model_from_str(&text)
}

fn slot_key(month: u32, daytype: DayTypeField, slot: u32, grid: &TimeGrid, what: &str) -> Result<SlotKey, PersistError> {
    SlotKey::new(month, daytype.into(), slot, grid)
        .map_err(|e| invalid(format!("{what} (month {month}, slot {slot}): {e}")))
}

fn rate_from_file(a: &ArrivalFile, grid: TimeGrid) -> Result<ArrivalRate, PersistError> {
    let bounds = RateBounds::new(a.bounds.lambda_min, a.bounds.lambda_max).map_err(|e| invalid(e.to_string()))?;
    match a.mode {
        RateMode::Table => {
            if a.order.is_some() || a.coefficients.is_some() {
                return Err(invalid("table mode takes `entries` only"));
            }
            let entries = a.entries.as_ref().ok_or_else(|| invalid("table mode needs `entries`"))?;
            let mut values = BTreeMap::new();
            for e in entries {
                let key = slot_key(e.month, e.daytype, e.slot, &grid, "arrival entry")?;
                if values.insert(key, e.lambda).is_some() {
                    return Err(invalid(format!("duplicate arrival entry {key}")));
                }
            }
            let table = LambdaTable::new(grid, bounds, values).map_err(|e| invalid(e.to_string()))?;
            Ok(ArrivalRate::Table(table))
        }
        RateMode::Curve => {
            if a.entries.is_some() {
                return Err(invalid("curve mode takes `order` and `coefficients` only"));
            }
            let order = a.order.ok_or_else(|| invalid("curve mode needs `order`"))?;
            let coefficients = a.coefficients.as_ref().ok_or_else(|| invalid("curve mode needs `coefficients`"))?;
            let mut series = BTreeMap::new();
            for c in coefficients {
                let key = slot_key(c.month, c.daytype, 0, &grid, "arrival coefficients")?;
                let day = DayKey { month: key.month, daytype: key.daytype };
                let s = FourierSeries { a0: c.a0, cos: c.a.clone(), sin: c.b.clone() };
                if series.insert(day, s).is_some() {
                    return Err(invalid(format!(
                        "duplicate arrival coefficients for month {}, {}",
                        day.month,
                        day.daytype.as_str()
                    )));
                }
            }
            let curve = LambdaCurve::new(grid, bounds, order, series).map_err(|e| invalid(e.to_string()))?;
            Ok(ArrivalRate::Curve(curve))
        }
    }
}

fn arrival_from_file(a: &ArrivalFile, grid: TimeGrid) -> Result<ArrivalModel, PersistError> {
    let rate = rate_from_file(a, grid)?;
    let mut nb = Vec::with_capacity(a.count_family.len());
    let mut seen = std::collections::BTreeSet::new();
    for e in &a.count_family {
        let key = slot_key(e.month, e.daytype, e.slot, &grid, "count family entry")?;
        if !seen.insert(key) {
            return Err(invalid(format!("duplicate count family entry {key}")));
        }
        nb.push((key, e.r, e.p));
    }
    let counts = CountFamily::from_negbinom(nb).map_err(|e| invalid(e.to_string()))?;
    let policy = match a.iat_boundary_policy {
        PolicyField::Naive => IatBoundaryPolicy::Naive,
        PolicyField::Restart => IatBoundaryPolicy::Restart,
    };
    let sampler = match a.sampler {
        SamplerField::Iat => ArrivalSampler::Iat,
        SamplerField::Counts => ArrivalSampler::Counts,
    };
    ArrivalModel::new(rate, counts, policy, sampler).map_err(|e| invalid(e.to_string()))
}

fn bank_from_file(b: &BankFile, section: &str, expected: MixtureKind, grid: &TimeGrid) -> Result<MixtureBank, PersistError> {
    let kind = match b.kind {
        KindField::ConnectedTime => MixtureKind::ConnectedTime,
        KindField::Energy => MixtureKind::Energy,
    };
    if kind != expected {
        return Err(invalid(format!("`{section}` holds a {} bank", kind.as_str())));
    }
    let mut models = BTreeMap::new();
    for c in &b.cells {
        let mut key = MixKey::new(c.month, c.slot, grid)
            .map_err(|e| invalid(format!("{section} cell (month {}, slot {}): {e}", c.month, c.slot)))?;
        key.daytype = c.daytype.map(Into::into);
        if key.daytype.is_some() != b.by_daytype {
            return Err(invalid(format!("{section} cell {key} does not match by_daytype = {}", b.by_daytype)));
        }
        let gmm = Gmm::new(c.weights.clone(), c.means.clone(), c.stddevs.clone())
            .map_err(|e| invalid(format!("{section} cell {key}: {e}")))?;
        if models.insert(key, gmm).is_some() {
            return Err(invalid(format!("duplicate {section} cell {key}")));
        }
    }
    let p = &b.pooled_fallback;
    let pooled = Gmm::new(p.weights.clone(), p.means.clone(), p.stddevs.clone())
        .map_err(|e| invalid(format!("{section} pooled fallback: {e}")))?;
    MixtureBank::new(kind, b.by_daytype, models, pooled).map_err(|e| invalid(format!("{section}: {e}")))
}

fn from_file(f: ModelFile) -> Result<SdgModel, PersistError> {
    let grid = TimeGrid::new(f.grid.slot_minutes).map_err(|e| invalid(format!("grid: {e}")))?;
    let arrival = arrival_from_file(&f.arrival, grid)?;
    let connected = bank_from_file(&f.connected, "connected", MixtureKind::ConnectedTime, &grid)?;
    let energy = bank_from_file(&f.energy, "energy", MixtureKind::Energy, &grid)?;
    let trained_at = parse_timestamp(&f.meta.trained_at)
        .ok_or_else(|| invalid(format!("meta.trained_at {:?} is not YYYY-MM-DDTHH:MM:SS", f.meta.trained_at)))?;
    let meta = ModelMeta {
        schema_version: f.schema_version,
        trained_at,
        n_training_sessions: f.meta.n_training_sessions,
    };
    SdgModel::new(arrival, connected, energy, meta).map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_type_names_match_core() {
        for d in DayType::ALL {
            let text = serde_json::to_string(&DayTypeField::from(d)).unwrap();
            assert_eq!(text, format!("\"{}\"", d.as_str()));
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match model_from_str("{\n  \"schema_version\": \"1\",\n  oops\n}") {
            Err(PersistError::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_version_is_a_mismatch() {
        assert!(matches!(model_from_str("{}"), Err(PersistError::SchemaVersionMismatch { .. })));
    }
}
