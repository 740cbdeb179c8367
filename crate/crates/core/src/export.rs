//! Hand-rolled JSON fragments with every number printed to 17 significant
//! digits, so exported artifacts round-trip bit for bit.

use nalgebra::DMatrix;

pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

pub fn json_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| json_num(x)).collect();
    format!("[{}]", items.join(", "))
}

pub fn json_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
            json_vec(&row)
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Row-major flat data as nested rows of width `width`.
pub fn json_rows(flat: &[f64], width: usize) -> String {
    let rows: Vec<String> = flat.chunks(width).map(json_vec).collect();
    format!("[{}]", rows.join(", "))
}

/// Writes `{"key": value, ...}` from pre-rendered values, one key per line.
pub fn json_object(fields: &[(&str, String)]) -> String {
    let mut s = String::from("{\n");
    for (k, (name, value)) in fields.iter().enumerate() {
        s.push_str(&format!("  \"{name}\": {value}"));
        s.push_str(if k + 1 < fields.len() { ",\n" } else { "\n" });
    }
    s.push_str("}\n");
    s
}
