use std::fmt;

use chrono::{DateTime, NaiveDate, SecondsFormat, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Activity id reserved for "no annotated activity".
pub const IDLE: &str = "Idle";

/// A UTC instant with exact millisecond precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Instant(i64);

impl Instant {
    pub const fn from_millis(utc_millis: i64) -> Self {
        Instant(utc_millis)
    }

    pub fn from_secs_f64(secs: f64) -> Self {
        Instant((secs * 1000.0).round() as i64)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub fn add_millis(self, millis: i64) -> Self {
        Instant(self.0 + millis)
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp_millis(self.0).expect("instant within chrono range")
    }

    /// Canonical `YYYY-MM-DDTHH:MM:SS.mmmZ` rendering.
    pub fn to_rfc3339(self) -> String {
        self.to_datetime().to_rfc3339_opts(SecondsFormat::Millis, true)
    }

    /// Parses the canonical form. Other RFC 3339 offsets are accepted and
    /// normalized to UTC, but sub-millisecond digits are rejected.
    pub fn parse_rfc3339(text: &str) -> Result<Self, String> {
        let dt = DateTime::parse_from_rfc3339(text).map_err(|e| format!("{text:?}: {e}"))?;
        if dt.timestamp_subsec_nanos() % 1_000_000 != 0 {
            return Err(format!("{text:?}: sub-millisecond precision"));
        }
        Ok(Instant(dt.timestamp_millis()))
    }

    pub fn local_date(self, tz: &Tz) -> NaiveDate {
        tz.from_utc_datetime(&self.to_datetime().naive_utc()).date_naive()
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl Serialize for Instant {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Instant {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Instant::parse_rfc3339(&text).map_err(serde::de::Error::custom)
    }
}

/// Whether two half-open intervals share at least one instant. A
/// zero-length interval `[p, p)` is treated as the single instant `p`.
pub fn intervals_intersect(a: (Instant, Instant), b: (Instant, Instant)) -> bool {
    match (a.0 == a.1, b.0 == b.1) {
        (true, true) => a.0 == b.0,
        (true, false) => b.0 <= a.0 && a.0 < b.1,
        (false, true) => a.0 <= b.0 && b.0 < a.1,
        (false, false) => a.0 < b.1 && b.0 < a.1,
    }
}

/// Length in milliseconds of the intersection of two half-open intervals.
pub fn overlap_millis(a: (Instant, Instant), b: (Instant, Instant)) -> i64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (hi.millis() - lo.millis()).max(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub sensor_id: String,
    pub label: String,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMeta {
    pub activity_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub event_id: u64,
    pub sensor_id: String,
    pub start: Instant,
    pub end: Instant,
}

impl SensorEvent {
    pub fn duration_millis(&self) -> i64 {
        self.end.millis() - self.start.millis()
    }

    fn sort_key(&self) -> (Instant, Instant, u64) {
        (self.start, self.end, self.event_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityAnnotation {
    pub annotation_id: u64,
    pub resident_id: String,
    pub activity_id: String,
    pub start: Instant,
    pub end: Instant,
}

impl ActivityAnnotation {
    pub fn duration_millis(&self) -> i64 {
        self.end.millis() - self.start.millis()
    }

    fn sort_key(&self) -> (Instant, Instant, u64) {
        (self.start, self.end, self.annotation_id)
    }
}

/// A uniformized dataset: catalogs plus chronologically ordered interval records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub timezone: Tz,
    pub sensors: Vec<SensorMeta>,
    pub activities: Vec<ActivityMeta>,
    pub residents: Vec<String>,
    pub events: Vec<SensorEvent>,
    pub annotations: Vec<ActivityAnnotation>,
}

impl Dataset {
    /// Sorts events and annotations into canonical `(start, end, id)` order.
    /// Catalog order is preserved.
    pub fn canonicalize(&mut self) {
        self.events.sort_by_key(SensorEvent::sort_key);
        self.annotations.sort_by_key(ActivityAnnotation::sort_key);
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn sensor(&self, sensor_id: &str) -> Option<&SensorMeta> {
        self.sensors.iter().find(|s| s.sensor_id == sensor_id)
    }

    /// Sensor ids in lexicographic order.
    pub fn sorted_sensor_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sensors.iter().map(|s| s.sensor_id.clone()).collect();
        ids.sort();
        ids
    }

    /// Activity ids in catalog order.
    pub fn activity_ids(&self) -> Vec<String> {
        self.activities.iter().map(|a| a.activity_id.clone()).collect()
    }

    /// Annotations of one resident, in canonical order.
    pub fn resident_annotations(&self, resident_id: &str) -> Vec<ActivityAnnotation> {
        self.annotations
            .iter()
            .filter(|a| a.resident_id == resident_id)
            .cloned()
            .collect()
    }

    /// Distinct local calendar dates touched by events or annotations.
    pub fn local_days(&self) -> Vec<NaiveDate> {
        let spans = self
            .events
            .iter()
            .map(|e| (e.start, e.end))
            .chain(self.annotations.iter().map(|a| (a.start, a.end)));
        days_spanned(&self.timezone, spans)
    }

    /// Distinct local dates on which at least one annotation starts or continues.
    pub fn annotated_days(&self) -> Vec<NaiveDate> {
        days_spanned(
            &self.timezone,
            self.annotations.iter().map(|a| (a.start, a.end)),
        )
    }
}

/// UTC instant of local midnight starting `day` (the first existing local
/// time when a DST gap swallows midnight).
pub fn local_midnight(tz: &Tz, day: NaiveDate) -> Instant {
    let mut t = day.and_hms_opt(0, 0, 0).expect("midnight exists");
    loop {
        if let Some(dt) = tz.from_local_datetime(&t).earliest() {
            return Instant::from_millis(dt.timestamp_millis());
        }
        t += chrono::Duration::minutes(15);
    }
}

impl Dataset {
    /// `[start, end)` in UTC of one local calendar day.
    pub fn local_day_bounds(&self, day: NaiveDate) -> (Instant, Instant) {
        let next = day.succ_opt().expect("date in range");
        (local_midnight(&self.timezone, day), local_midnight(&self.timezone, next))
    }

    /// Events and annotations intersecting one local day.
    pub fn day_slice(&self, day: NaiveDate) -> (Vec<SensorEvent>, Vec<ActivityAnnotation>) {
        let span = self.local_day_bounds(day);
        let events = self
            .events
            .iter()
            .filter(|e| intervals_intersect((e.start, e.end), span))
            .cloned()
            .collect();
        let annotations = self
            .annotations
            .iter()
            .filter(|a| intervals_intersect((a.start, a.end), span))
            .cloned()
            .collect();
        (events, annotations)
    }
}

fn days_spanned(tz: &Tz, spans: impl Iterator<Item = (Instant, Instant)>) -> Vec<NaiveDate> {
    let mut days: Vec<NaiveDate> = Vec::new();
    for (start, end) in spans {
        let first = start.local_date(tz);
        // the end instant is exclusive
        let last = Instant::from_millis((end.millis() - 1).max(start.millis())).local_date(tz);
        let mut day = first;
        while day <= last {
            days.push(day);
            day = day.succ_opt().expect("date in range");
        }
    }
    days.sort();
    days.dedup();
    days
}

/// Parses an IANA zone name.
pub fn parse_timezone(name: &str) -> Result<Tz, String> {
    name.parse::<Tz>()
        .map_err(|_| format!("unknown IANA timezone {name:?}"))
}
