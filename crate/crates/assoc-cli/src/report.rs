//! JSON report assembly. All reports carry a schema version and echo the
//! configuration that produced them.

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// Report skeleton: schema version, command name, then command fields.
pub fn report(command: &str, fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    Value::Object(map)
}

pub fn to_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

/// serde_json drops the sign bit distinctions we do not care about but will
/// not serialize NaN; map those to null explicitly.
pub fn float(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn float_vec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

pub fn matrix(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| float(m[(i, j)])).collect()))
            .collect(),
    )
}
