//! Simulation time. All instants and durations are integer microseconds so
//! that rounds and slots land on exact boundaries and traces compare
//! byte-for-byte.

/// Microseconds, used both for instants (since simulation start) and durations.
pub type Micros = u64;

pub const MICROSECOND: Micros = 1;
pub const MILLISECOND: Micros = 1_000;
pub const SECOND: Micros = 1_000_000;

/// Unit assumed when a duration literal carries no suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultUnit {
    Seconds,
    Milliseconds,
}

/// Parses `"10s"`, `"10 s"`, `"15ms"`, `"250us"`, `"1.5s"` or a bare number
/// (interpreted in `default_unit`).
pub fn parse_duration(text: &str, default_unit: DefaultUnit) -> Option<Micros> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let scale = match unit.trim() {
        "" => match default_unit {
            DefaultUnit::Seconds => SECOND,
            DefaultUnit::Milliseconds => MILLISECOND,
        },
        "s" | "sec" => SECOND,
        "ms" => MILLISECOND,
        "us" | "µs" => MICROSECOND,
        _ => return None,
    };
    if number.is_empty() {
        return None;
    }
    if let Some((whole, frac)) = number.split_once('.') {
        if frac.contains('.') || (whole.is_empty() && frac.is_empty()) {
            return None;
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
        // Exact fixed-point: digits past the unit's resolution must be zero.
        let mut frac_us: u64 = 0;
        let mut place = scale;
        for digit in frac.chars() {
            let d = digit.to_digit(10)? as u64;
            place /= 10;
            if place == 0 {
                if d != 0 {
                    return None;
                }
                continue;
            }
            frac_us += d * place;
        }
        whole.checked_mul(scale)?.checked_add(frac_us)
    } else {
        number.parse::<u64>().ok()?.checked_mul(scale)
    }
}

/// Canonical, lossless text form used when serializing configs.
pub fn format_duration(value: Micros) -> String {
    display_duration(value).replace(' ', "")
}

/// Human-readable form for summaries.
pub fn display_duration(value: Micros) -> String {
    if value.is_multiple_of(SECOND) {
        format!("{} s", value / SECOND)
    } else if value.is_multiple_of(MILLISECOND) {
        format!("{} ms", value / MILLISECOND)
    } else {
        format!("{value} us")
    }
}
