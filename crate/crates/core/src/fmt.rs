//! Deterministic float formatting: fixed significant digits, trailing zeros
//! trimmed. Used for the graph file format and all CSV output so that
//! reruns produce byte-identical files.

/// Format with `digits` significant decimal digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let digits_str: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits_str.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    let sign = if neg { "-" } else { "" };

    if exp > 17 || exp < -7 {
        // keep scientific for extreme magnitudes
        let (head, tail) = trimmed.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    if exp >= 0 {
        let ip_len = exp as usize + 1;
        if trimmed.len() <= ip_len {
            let zeros = "0".repeat(ip_len - trimmed.len());
            format!("{sign}{trimmed}{zeros}")
        } else {
            let (ip, fp) = trimmed.split_at(ip_len);
            format!("{sign}{ip}.{fp}")
        }
    } else {
        let zeros = "0".repeat((-exp) as usize - 1);
        format!("{sign}0.{zeros}{trimmed}")
    }
}

/// 12 significant digits, the file-format and CSV convention.
pub fn fmt_g12(x: f64) -> String {
    fmt_sig(x, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-2.5), "-2.5");
        assert_eq!(fmt_g12(0.05), "0.05");
        assert_eq!(fmt_g12(19f64.ln()), "2.94443897917");
        assert_eq!(fmt_g12(100.0), "100");
        assert_eq!(fmt_g12(1e-7), "0.0000001");
        assert_eq!(fmt_g12(1e-9), "1e-9");
        assert_eq!(fmt_g12(1.23e-12), "1.23e-12");
        assert_eq!(fmt_g12(9.99999999999999), "10");
    }

    #[test]
    fn round_trip_is_stable() {
        for &x in &[0.05, 19f64.ln(), 1.0 / 3.0, 2.944438979166441, 1e-7, 123456.789] {
            let s1 = fmt_g12(x);
            let y: f64 = s1.parse().unwrap();
            assert_eq!(fmt_g12(y), s1, "unstable for {x}");
        }
    }
}
