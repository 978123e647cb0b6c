//! Unit-suffixed quantities on the command line. Everything is converted
//! to SI before it reaches the library.

fn split(input: &str, units: &[(&str, f64)], what: &str) -> Result<f64, String> {
    let s = input.trim();
    // Longest suffix first so that "ms" wins over "s".
    let mut sorted: Vec<_> = units.to_vec();
    sorted.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    let (number, scale) = sorted
        .iter()
        .find_map(|(u, k)| {
            let lower = s.to_ascii_lowercase();
            lower
                .strip_suffix(&u.to_ascii_lowercase())
                .map(|rest| (s[..rest.len()].trim().to_string(), *k))
        })
        .unwrap_or_else(|| (s.to_string(), 1.0));
    let value: f64 = number.parse().map_err(|_| format!("cannot parse {what} `{input}`"))?;
    let v = value * scale;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} `{input}` is not finite"))
    }
}

/// Speed in m/s. Accepts a bare number (m/s) or the suffixes `m/s`, `mps`,
/// `kmh` and `km/h`.
pub fn parse_speed(s: &str) -> Result<f64, String> {
    split(
        s,
        &[("m/s", 1.0), ("mps", 1.0), ("km/h", 1.0 / 3.6), ("kmh", 1.0 / 3.6)],
        "speed",
    )
}

/// Frequency in Hz. Accepts `Hz`, `kHz`, `MHz` and `GHz`.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    split(s, &[("hz", 1.0), ("khz", 1e3), ("mhz", 1e6), ("ghz", 1e9)], "frequency")
}

/// Duration in seconds. Accepts `s`, `ms`, `us` and `ns`.
pub fn parse_duration(s: &str) -> Result<f64, String> {
    split(s, &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)], "duration")
}
