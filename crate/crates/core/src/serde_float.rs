//! Serde helpers that write non-finite floats as `"inf"`, `"-inf"` and `"nan"`.

use serde::{de, Deserialize, Deserializer, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
}

fn parse(repr: Repr) -> Result<f64, String> {
    match repr {
        Repr::Num(x) => Ok(x),
        Repr::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => other.parse().map_err(|_| format!("not a number: {s}")),
        },
    }
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    parse(Repr::deserialize(d)?).map_err(de::Error::custom)
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Repr>::deserialize(d)?.map(parse).transpose().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Row {
        #[serde(with = "super")]
        x: f64,
        #[serde(default, with = "super::option")]
        y: Option<f64>,
    }

    #[test]
    fn infinity_round_trips_as_text() {
        let row = Row { x: f64::INFINITY, y: Some(f64::NEG_INFINITY) };
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(json, r#"{"x":"inf","y":"-inf"}"#);
        assert_eq!(serde_json::from_str::<Row>(&json).unwrap(), row);
        let plain: Row = serde_json::from_str(r#"{"x":1.5}"#).unwrap();
        assert_eq!(plain, Row { x: 1.5, y: None });
    }
}
