//! CSV, JSON and plain PGM emitters.

use cantor_core::dim::DimEstimate;
use cantor_core::logs::{Bracket, Sci};
use cantor_core::Rat;
use serde_json::{json, Value};

/// `num/den` in lowest terms (`n/1` for integers).
pub fn rat_str(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Non-finite values are spelled `inf`, `-inf` or `nan`.
pub fn f64_str(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn bracket(b: &Bracket) -> Value {
    json!({ "mid": num(b.mid), "rad": num(b.rad) })
}

pub fn sci(s: &Sci) -> Value {
    json!({ "sign": s.sign, "log10_abs": bracket(&s.log10_abs) })
}

pub fn trend(t: &[(u64, f64)]) -> Value {
    Value::Array(t.iter().map(|(n, v)| json!({ "n": n, "value": num(*v) })).collect())
}

/// Dimension report object.
pub fn dim_json(d: &DimEstimate) -> Value {
    json!({
        "checkpoints": d.checkpoints.iter().map(|p| json!({
            "n": p.n,
            "ratio_num_log": num(p.num_log.mid),
            "ratio_den_log": num(p.den_log.mid),
            "value": num(p.value.mid),
            "value_rad": num(p.value.rad),
        })).collect::<Vec<_>>(),
        "running_min": num(d.running_min),
        "hypothesis": { "ok": d.hypothesis.ok, "trend": trend(&d.hypothesis.trend) },
    })
}

pub const DIM_CSV_HEADER: &str = "n,ratio_num_log,ratio_den_log,value,value_rad";

pub fn dim_csv_rows(d: &DimEstimate, out: &mut Csv) {
    for p in &d.checkpoints {
        out.row([p.n.to_string(), f64_str(p.num_log.mid), f64_str(p.den_log.mid), f64_str(p.value.mid), f64_str(p.value.rad)]);
    }
}

/// Line-oriented CSV with a fixed header. Fields never contain commas.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv { buf: format!("{header}\n") }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(f.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Pretty JSON followed by a newline.
pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

/// Plain (P2) 8-bit PGM; `pixels[row][col]`, row 0 on top.
pub fn pgm(width: usize, height: usize, pixels: &[Vec<u8>]) -> Vec<u8> {
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in pixels {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s.into_bytes()
}

/// Parses a P2 image produced by [`pgm`].
pub fn parse_pgm(bytes: &[u8]) -> Option<(usize, usize, Vec<Vec<u8>>)> {
    let text = std::str::from_utf8(bytes).ok()?;
    let mut tok = text.split_ascii_whitespace();
    if tok.next()? != "P2" {
        return None;
    }
    let w: usize = tok.next()?.parse().ok()?;
    let h: usize = tok.next()?.parse().ok()?;
    if tok.next()? != "255" {
        return None;
    }
    let vals: Vec<u8> = tok.map(|t| t.parse().ok()).collect::<Option<_>>()?;
    if vals.len() != w * h {
        return None;
    }
    Some((w, h, vals.chunks(w).map(<[u8]>::to_vec).collect()))
}
