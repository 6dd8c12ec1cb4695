use serde::Serializer;

/// Serializes non-finite values as the string `"inf"` / `"-inf"` / `"nan"`.
pub fn ext_real<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if value.is_finite() {
        serializer.serialize_f64(*value)
    } else {
        serializer.serialize_str(&format_real(*value))
    }
}

/// Shortest round-trip decimal form; `inf` for `+inf`.
pub fn format_real(value: f64) -> String {
    if value.is_nan() {
        "nan".to_string()
    } else if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{value:?}")
    }
}
