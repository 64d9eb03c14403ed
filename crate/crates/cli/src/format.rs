//! CSV helpers: `# schema=1` comment line, header row, 12-significant-digit floats.

use std::io::Write;

use cayley_gibbs::sweep::{SweepRow, SWEEP_COLUMNS};

pub const SCHEMA_LINE: &str = "# schema=1";

/// `x` with `digits` significant digits, trailing zeros removed, switching to
/// exponent notation outside `1e-4 <= |x| < 10^digits`, as C `%.12g` does.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn g12(x: f64) -> String {
    fmt_sig(x, 12)
}

pub fn write_header<W: Write>(w: &mut W, columns: &[&str]) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "{}", columns.join(","))
}

pub fn write_sweep_row<W: Write>(w: &mut W, r: &SweepRow) -> std::io::Result<()> {
    let cells: [String; SWEEP_COLUMNS.len()] = [
        r.k.to_string(),
        r.a1.to_string(),
        r.a2.to_string(),
        r.a3.to_string(),
        r.a4.to_string(),
        r.b1.to_string(),
        r.b2.to_string(),
        r.b3.to_string(),
        r.b4.to_string(),
        r.a.to_string(),
        r.b.to_string(),
        r.c.to_string(),
        r.d.to_string(),
        g12(r.theta),
        r.criterion.to_string(),
        r.n_solutions.to_string(),
        r.family.clone(),
        g12(r.h),
        g12(r.l),
        g12(r.kappa_bound),
        g12(r.gamma_bound),
        g12(r.product),
        r.verdict.clone(),
    ];
    writeln!(w, "{}", cells.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        // reference strings from printf("%.12g")
        for (x, s) in [
            (0.0, "0"),
            (1.0, "1"),
            (-0.5, "-0.5"),
            (0.05, "0.05"),
            (2.0634370688955605, "2.0634370689"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1.5e-7, "1.5e-07"),
            (0.0001, "0.0001"),
            (1e-5, "1e-05"),
            (0.000012345678901234, "1.23456789012e-05"),
            (0.95, "0.95"),
            (f64::INFINITY, "inf"),
        ] {
            assert_eq!(g12(x), s, "{x}");
        }
    }
}
