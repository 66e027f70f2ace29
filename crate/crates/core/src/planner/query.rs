//! Flat key-value form of a plan request, with the same field names as the
//! OpenTripPlanner `plan` endpoint: `fromPlace`, `toPlace`, `time`, `date`,
//! `numItineraries`, `mode`.
//!
//! `time` is clock time (`10:30am`, or `10:30:15am` when seconds are set).
//! Clock time covers a single day, so departures are taken modulo 24 h.

use chrono::NaiveDate;

use super::{PlanMode, PlanRequest, PlannerError};
use crate::{GeoPoint, Seconds};

impl PlanRequest {
    pub fn to_query(&self) -> String {
        let mut parts = vec![
            format!("fromPlace={},{}", self.from.lat, self.from.lon),
            format!("toPlace={},{}", self.to.lat, self.to.lon),
            format!("time={}", format_clock(self.departure)),
        ];
        if let Some(d) = self.date {
            parts.push(format!("date={}", d.format("%m-%d-%Y")));
        }
        parts.push(format!("numItineraries={}", self.num_itineraries));
        parts.push(format!("mode={}", self.mode.as_str()));
        parts.join("&")
    }

    pub fn from_query(q: &str) -> Result<Self, PlannerError> {
        let bad = |m: String| PlannerError::BadQuery(m);
        let (mut from, mut to, mut time) = (None, None, None);
        let mut req = PlanRequest::new(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 0.0), 0);
        for pair in q.trim_start_matches('?').split('&').filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {pair:?}")))?;
            match k {
                "fromPlace" => from = Some(parse_place(v).ok_or_else(|| bad(format!("bad fromPlace {v:?}")))?),
                "toPlace" => to = Some(parse_place(v).ok_or_else(|| bad(format!("bad toPlace {v:?}")))?),
                "time" => time = Some(parse_clock(v).ok_or_else(|| bad(format!("bad time {v:?}")))?),
                "date" => {
                    req.date = Some(
                        NaiveDate::parse_from_str(v, "%m-%d-%Y").map_err(|_| bad(format!("bad date {v:?}")))?,
                    )
                }
                "numItineraries" => {
                    let n: usize = v.parse().map_err(|_| bad(format!("bad numItineraries {v:?}")))?;
                    if n == 0 {
                        return Err(bad("numItineraries must be at least 1".into()));
                    }
                    req.num_itineraries = n;
                }
                "mode" => req.mode = PlanMode::parse(v).ok_or_else(|| bad(format!("unknown mode {v:?}")))?,
                _ => {}
            }
        }
        req.from = from.ok_or_else(|| bad("missing fromPlace".into()))?;
        req.to = to.ok_or_else(|| bad("missing toPlace".into()))?;
        req.departure = time.ok_or_else(|| bad("missing time".into()))?;
        Ok(req)
    }
}

fn parse_place(v: &str) -> Option<GeoPoint> {
    let (lat, lon) = v.split_once(',')?;
    let p = GeoPoint::new(lat.trim().parse().ok()?, lon.trim().parse().ok()?);
    p.is_valid().then_some(p)
}

pub(crate) fn format_clock(t: Seconds) -> String {
    let t = t % 86_400;
    let (h, m, s) = (t / 3600, (t / 60) % 60, t % 60);
    let suffix = if h < 12 { "am" } else { "pm" };
    let h12 = match h % 12 {
        0 => 12,
        h => h,
    };
    if s == 0 {
        format!("{h12}:{m:02}{suffix}")
    } else {
        format!("{h12}:{m:02}:{s:02}{suffix}")
    }
}

pub(crate) fn parse_clock(v: &str) -> Option<Seconds> {
    let v = v.trim().to_ascii_lowercase();
    let (body, pm) = if let Some(b) = v.strip_suffix("pm") {
        (b, true)
    } else {
        (v.strip_suffix("am")?, false)
    };
    let mut it = body.split(':');
    let h: u32 = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let s: u32 = match it.next() {
        Some(s) => s.parse().ok()?,
        None => 0,
    };
    if it.next().is_some() || !(1..=12).contains(&h) || m >= 60 || s >= 60 {
        return None;
    }
    let h24 = (h % 12) + if pm { 12 } else { 0 };
    Some(h24 * 3600 + m * 60 + s)
}
