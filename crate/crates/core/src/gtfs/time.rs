use crate::Seconds;

/// Parses a GTFS `H:MM:SS` time into seconds since service midnight.
/// Hours may exceed 23 for after-midnight service.
pub fn parse_time(s: &str) -> Option<Seconds> {
    let mut it = s.trim().split(':');
    let h: u32 = it.next()?.parse().ok()?;
    let m: u32 = parse_two_digits(it.next()?)?;
    let sec: u32 = parse_two_digits(it.next()?)?;
    if it.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    h.checked_mul(3600)?.checked_add(m * 60 + sec)
}

fn parse_two_digits(s: &str) -> Option<u32> {
    if s.len() != 2 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Formats seconds since service midnight as zero-padded `HH:MM:SS`.
pub fn format_time(t: Seconds) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}
