//! Deterministic JSON and CSV output.

use std::io::{self, Write};

use critlen_core::poly::Poly;
use critlen_core::trigpoly::{Harmonic, TrigPoly};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

/// Every float with 17 significant digits, in exponent form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON whose floats are always written by [`fmt_f64`].
pub struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Default for FixedFloats<'_> {
    fn default() -> Self {
        FixedFloats(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn write_json<T: Serialize, W: Write>(out: &mut W, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, FixedFloats::default());
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// `{"k": {"cos": ["p/q", ...], "sin": [...]}}`, harmonics in increasing `k`,
/// coefficients in increasing power of `x`.
pub struct TrigPolyJson<'a>(pub &'a TrigPoly);

struct HarmonicJson<'a>(&'a Harmonic);
struct PolyJson<'a>(&'a Poly);

impl Serialize for TrigPolyJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let hs: Vec<_> = self.0.harmonics().collect();
        let mut map = s.serialize_map(Some(hs.len()))?;
        for (k, h) in hs {
            map.serialize_entry(&k.to_string(), &HarmonicJson(h))?;
        }
        map.end()
    }
}

impl Serialize for HarmonicJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Harmonic", 2)?;
        st.serialize_field("cos", &PolyJson(&self.0.cos))?;
        st.serialize_field("sin", &PolyJson(&self.0.sin))?;
        st.end()
    }
}

impl Serialize for PolyJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.coeffs().iter().map(|c| format!("{}/{}", c.numer(), c.denom())))
    }
}

/// `x,value,sign` rows.
pub fn write_csv<W: Write>(out: &mut W, rows: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "x,value,sign")?;
    for &(x, v) in rows {
        writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(v), sign(v))?;
    }
    Ok(())
}

pub fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use critlen_core::trigpoly::spherical_fn;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(std::f64::consts::PI), "3.1415926535897931e0");
        assert_eq!(to_json_string(&[0.5f64]), "[\n  5.0000000000000000e-1\n]\n");
    }

    #[test]
    fn non_finite_floats_become_null() {
        assert_eq!(to_json_string(&f64::INFINITY), "null\n");
    }

    #[test]
    fn trig_poly_json_shape() {
        // f_1 = sin x - x cos x
        let v: serde_json::Value = serde_json::from_str(&to_json_string(&TrigPolyJson(&spherical_fn(1).unwrap()))).unwrap();
        assert_eq!(v, serde_json::json!({"1": {"cos": ["0/1", "-1/1"], "sin": ["1/1"]}}));
    }
}
