//! Number grammar for angles and setup files: plain decimals plus exact
//! multiples and fractions of pi, e.g. `pi`, `-pi/2`, `2pi/3`, `0.5pi`.

use std::f64::consts::PI;

/// Parse a number, accepting `pi` literals and `pi/6`-style fractions.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let s = text.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let rest = rest.trim();

    if let Some(idx) = rest.find("pi") {
        let (coef_str, tail) = rest.split_at(idx);
        let tail = &tail[2..];
        let coef = if coef_str.is_empty() {
            1.0
        } else {
            coef_str
                .parse::<f64>()
                .map_err(|_| format!("bad coefficient '{coef_str}' before pi"))?
        };
        let denom = match tail.strip_prefix('/') {
            Some(d) => d
                .parse::<f64>()
                .map_err(|_| format!("bad denominator '{d}' after pi/"))?,
            None if tail.is_empty() => 1.0,
            None => return Err(format!("unexpected trailing '{tail}' after pi")),
        };
        if denom == 0.0 {
            return Err("zero denominator".into());
        }
        return Ok(sign * coef * PI / denom);
    }

    rest.parse::<f64>()
        .map(|v| sign * v)
        .map_err(|_| format!("'{s}' is not a number"))
}
