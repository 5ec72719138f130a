use serde::Serializer;

/// Serializes any `Display` value as a string (for big integers and exact
/// rationals).
pub fn display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
