//! Versioned output records and their serializers. JSON records carry a
//! `schema` tag matching a schema file shipped under `schemas/`; CSV column
//! order is fixed.

use serde::{Deserialize, Serialize};

pub const CENSUS_SCHEMA: &str = "census.v1";
pub const DENSITY_SCHEMA: &str = "density.v1";
pub const COMPARE_SCHEMA: &str = "compare.v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRecord {
    pub schema: String,
    pub kind: String,
    pub g: Option<String>,
    pub a: u64,
    pub d: u64,
    pub value: f64,
    pub tail_bound: f64,
    pub method: String,
    pub params: Params,
    pub reduction: ReductionRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Params {
    pub t_max: u64,
    pub n_max: u64,
    pub w_max: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub a: u64,
    pub d: u64,
    pub scale: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusRecord {
    pub schema: String,
    pub g: String,
    pub x: u64,
    pub d: u64,
    pub mode: String,
    pub counts: Vec<u64>,
    pub total: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub a: u64,
    pub empirical: f64,
    pub theoretical: f64,
    pub diff: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRecord {
    pub schema: String,
    pub g: String,
    pub d: u64,
    pub x: u64,
    pub mode: String,
    pub tolerance: f64,
    pub rows: Vec<CompareRow>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub a: u64,
    pub delta_g: f64,
    pub delta0_g: f64,
    pub delta_avg: f64,
    pub rho_g: f64,
    pub rho_avg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRecord {
    pub g: String,
    pub d: u64,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantRow {
    pub index: usize,
    pub order: u64,
    pub is_principal: bool,
    pub re: f64,
    pub im: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub d: u64,
    pub prime_bound: u64,
    pub constants: Vec<ConstantRow>,
}

/// Emit a record in the chosen format. CSV and text renderings are produced
/// from the same row data the JSON carries.
pub trait Render {
    fn csv(&self) -> String;
    fn text(&self) -> String;
}

impl Render for DensityRecord {
    fn csv(&self) -> String {
        let mut out = String::from("kind,g,a,d,value,tail_bound,method\n");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            self.kind,
            self.g.as_deref().unwrap_or(""),
            self.a,
            self.d,
            self.value,
            self.tail_bound,
            self.method
        ));
        out
    }
    fn text(&self) -> String {
        format!(
            "{}({}, {}) for g={} = {:.10} (tail bound {:.3e}, method {}, reduced to ({}, {}) scale {})\n",
            self.kind,
            self.a,
            self.d,
            self.g.as_deref().unwrap_or("-"),
            self.value,
            self.tail_bound,
            self.method,
            self.reduction.a,
            self.reduction.d,
            self.reduction.scale
        )
    }
}

impl Render for CensusRecord {
    fn csv(&self) -> String {
        let mut out = String::from("a,count\n");
        for (a, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{a},{c}\n"));
        }
        out
    }
    fn text(&self) -> String {
        let mut out = format!(
            "census g={} x={} d={} mode={} total={}\n",
            self.g, self.x, self.d, self.mode, self.total
        );
        for (a, c) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "  a={a}: {c} ({:.6})\n",
                *c as f64 / self.total as f64
            ));
        }
        out
    }
}

impl Render for CompareRecord {
    fn csv(&self) -> String {
        let mut out = String::from("a,empirical,theoretical,diff,tail_bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.a, r.empirical, r.theoretical, r.diff, r.tail_bound, r.pass
            ));
        }
        out
    }
    fn text(&self) -> String {
        let mut out = format!(
            "compare g={} d={} x={} mode={} tolerance={}\n",
            self.g, self.d, self.x, self.mode, self.tolerance
        );
        for r in &self.rows {
            out.push_str(&format!(
                "  a={:>3}  empirical {:.6}  series {:.6}  |diff| {:.6}  {}\n",
                r.a,
                r.empirical,
                r.theoretical,
                r.diff,
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(if self.all_pass {
            "all rows pass\n"
        } else {
            "FAILURES present\n"
        });
        out
    }
}

impl Render for TableRecord {
    fn csv(&self) -> String {
        let mut out = String::from("a,delta_g,delta0_g,delta_avg,rho_g,rho_avg\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.a, r.delta_g, r.delta0_g, r.delta_avg, r.rho_g, r.rho_avg
            ));
        }
        out
    }
    fn text(&self) -> String {
        let mut out = format!(
            "g={} d={}\n  a   delta_g    delta0_g   delta      rho_g      rho\n",
            self.g, self.d
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>3}   {:.6}   {:.6}   {:.6}   {:.6}   {:.6}\n",
                r.a, r.delta_g, r.delta0_g, r.delta_avg, r.rho_g, r.rho_avg
            ));
        }
        out
    }
}

impl Render for ConstantsRecord {
    fn csv(&self) -> String {
        let mut out = String::from("index,order,is_principal,re,im,error_estimate\n");
        for r in &self.constants {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.index, r.order, r.is_principal, r.re, r.im, r.error_estimate
            ));
        }
        out
    }
    fn text(&self) -> String {
        let mut out = format!("A_chi for characters mod {} (primes up to {})\n", self.d, self.prime_bound);
        for r in &self.constants {
            out.push_str(&format!(
                "  chi_{} (order {}{}): {:.10} {} {:.10}i  (err <= {:.1e})\n",
                r.index,
                r.order,
                if r.is_principal { ", principal" } else { "" },
                r.re,
                if r.im < 0.0 { "-" } else { "+" },
                r.im.abs(),
                r.error_estimate
            ));
        }
        out
    }
}

/// Minimal structural validation of an emitted JSON value against one of
/// the shipped schema documents (type and required-property checks; enough
/// to pin the wire format without an external validator).
pub fn validate_against_schema(value: &serde_json::Value, schema: &serde_json::Value) -> Result<(), String> {
    validate_node(value, schema, "$")
}

fn validate_node(value: &serde_json::Value, schema: &serde_json::Value, path: &str) -> Result<(), String> {
    use serde_json::Value;
    if let Some(ty) = schema.get("type").and_then(|t| t.as_str()) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            "boolean" => value.is_boolean(),
            other => return Err(format!("{path}: unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("{path}: expected {ty}, got {value}"));
        }
    }
    if let Some(req) = schema.get("required").and_then(|r| r.as_array()) {
        for key in req {
            let key = key.as_str().ok_or_else(|| format!("{path}: bad required entry"))?;
            if value.get(key).is_none() {
                return Err(format!("{path}: missing required property {key:?}"));
            }
        }
    }
    if let (Some(props), Value::Object(map)) = (schema.get("properties"), value) {
        for (key, sub) in props.as_object().into_iter().flatten() {
            if let Some(v) = map.get(key) {
                validate_node(v, sub, &format!("{path}.{key}"))?;
            }
        }
    }
    if let (Some(items), Value::Array(arr)) = (schema.get("items"), value) {
        for (i, v) in arr.iter().enumerate() {
            validate_node(v, items, &format!("{path}[{i}]"))?;
        }
    }
    if let Some(konst) = schema.get("const") {
        if konst != value {
            return Err(format!("{path}: expected constant {konst}, got {value}"));
        }
    }
    Ok(())
}

pub fn census_schema() -> serde_json::Value {
    serde_json::from_str(include_str!("../schemas/census.v1.json")).expect("valid schema")
}

pub fn density_schema() -> serde_json::Value {
    serde_json::from_str(include_str!("../schemas/density.v1.json")).expect("valid schema")
}

pub fn compare_schema() -> serde_json::Value {
    serde_json::from_str(include_str!("../schemas/compare.v1.json")).expect("valid schema")
}
