//! Indoor measurement positions from surveyed corridor endpoints.
//!
//! Each session is one straight corridor run: a surveyed start and end
//! position and a known number of equidistant stationary measurements.
//! Positions are linear interpolations between the endpoints in the local
//! frame, altitude included. Curved runs must be split into several
//! sessions.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{to_local, GeoError, GeoPoint, LocalPoint};

/// Plausible RSRP range in dBm; anything outside is treated as corrupt.
pub const RSRP_GATE_DBM: (f64, f64) = (-160.0, -20.0);

pub const SESSIONS_CSV_HEADER: [&str; 8] =
    ["session_id", "start_lat", "start_lon", "start_alt", "end_lat", "end_lon", "end_alt", "point_count"];
pub const OBSERVATIONS_CSV_HEADER: [&str; 3] = ["session_id", "index", "rsrp_dbm"];

#[derive(Debug, Error)]
pub enum PositioningError {
    #[error("session '{session}': invalid session: {reason}")]
    InvalidSession { session: String, reason: String },
    #[error("session '{session}': degenerate geometry, start and end coincide")]
    DegenerateGeometry { session: String },
    #[error("session '{session}': {reason}")]
    Validation { session: String, reason: String },
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {message}")]
    Format { path: String, message: String },
    #[error("no sessions in {0}")]
    Empty(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation {
    pub rsrp_dbm: f64,
    pub aux: BTreeMap<String, String>,
}

impl Observation {
    pub fn new(rsrp_dbm: f64) -> Self {
        Observation { rsrp_dbm, aux: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSession {
    pub session_id: String,
    pub start: GeoPoint,
    pub end: GeoPoint,
    pub point_count: usize,
    /// Ordered from `start` to `end`.
    pub observations: Vec<Observation>,
}

impl MeasurementSession {
    pub fn validate(&self) -> Result<(), PositioningError> {
        let invalid = |reason: String| PositioningError::InvalidSession { session: self.session_id.clone(), reason };
        if self.point_count < 2 {
            return Err(invalid(format!("point_count {} < 2", self.point_count)));
        }
        self.start.validate().map_err(|e| invalid(format!("start: {e}")))?;
        self.end.validate().map_err(|e| invalid(format!("end: {e}")))?;
        if self.observations.len() != self.point_count {
            return Err(PositioningError::Validation {
                session: self.session_id.clone(),
                reason: format!("declares {} points but has {} observations", self.point_count, self.observations.len()),
            });
        }
        for (i, o) in self.observations.iter().enumerate() {
            if !(RSRP_GATE_DBM.0..=RSRP_GATE_DBM.1).contains(&o.rsrp_dbm) {
                return Err(PositioningError::Validation {
                    session: self.session_id.clone(),
                    reason: format!("observation {i}: RSRP {} dBm outside plausibility gate", o.rsrp_dbm),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPoint {
    pub position: LocalPoint,
    pub rsrp_dbm: f64,
    pub session_id: String,
    pub index: usize,
}

/// Mean of repeated RSRP readings, taken in the dB domain.
pub fn average_db(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    Some(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Place the session's observations at equidistant points between its
/// surveyed endpoints.
pub fn interpolate_positions(
    session: &MeasurementSession,
    origin: &GeoPoint,
) -> Result<Vec<MeasurementPoint>, PositioningError> {
    session.validate()?;
    let start = to_local(&session.start, origin)?;
    let end = to_local(&session.end, origin)?;
    let span = end - start;
    if span.norm() == 0.0 {
        return Err(PositioningError::DegenerateGeometry { session: session.session_id.clone() });
    }
    let last = session.point_count - 1;
    Ok(session
        .observations
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let position = match i {
                0 => start,
                i if i == last => end,
                i => start + span * (i as f64 / last as f64),
            };
            MeasurementPoint { position, rsrp_dbm: obs.rsrp_dbm, session_id: session.session_id.clone(), index: i }
        })
        .collect())
}

pub fn interpolate_all(
    sessions: &[MeasurementSession],
    origin: &GeoPoint,
) -> Result<Vec<MeasurementPoint>, PositioningError> {
    let mut out = Vec::with_capacity(sessions.iter().map(|s| s.point_count).sum());
    for s in sessions {
        out.extend(interpolate_positions(s, origin)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSummary {
    pub sessions: usize,
    pub points: usize,
}

pub fn summarize(sessions: &[MeasurementSession]) -> SessionSummary {
    SessionSummary { sessions: sessions.len(), points: sessions.iter().map(|s| s.point_count).sum() }
}

/// Load sessions from JSON, or from a sessions CSV plus its observations CSV.
///
/// For CSV input, `observations` defaults to `observations.csv` next to the
/// sessions file.
pub fn load_sessions(path: &Path, observations: Option<&Path>) -> Result<Vec<MeasurementSession>, PositioningError> {
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let open = |p: &Path| File::open(p).map_err(|source| PositioningError::Io { path: p.to_path_buf(), source });
    let sessions = if is_json {
        parse_sessions_json(open(path)?, &path.display().to_string())?
    } else {
        let obs_path = observations
            .map(Path::to_path_buf)
            .unwrap_or_else(|| path.with_file_name("observations.csv"));
        parse_sessions_csv(open(path)?, open(&obs_path)?)?
    };
    if sessions.is_empty() {
        return Err(PositioningError::Empty(path.display().to_string()));
    }
    Ok(sessions)
}

fn format_err(path: &str, e: impl std::fmt::Display) -> PositioningError {
    PositioningError::Format { path: path.to_string(), message: e.to_string() }
}

fn column(headers: &csv::StringRecord, name: &str, what: &str) -> Result<usize, PositioningError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| format_err(what, format!("missing column '{name}'")))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, what: &str) -> Result<T, PositioningError> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        format_err(what, format!("line {line}: bad {name} '{raw}'"))
    })
}

/// Parse the two-file CSV form. Repeated `(session_id, index)` rows are raw
/// samples of one point and are averaged in dB.
pub fn parse_sessions_csv<S: Read, O: Read>(sessions: S, observations: O) -> Result<Vec<MeasurementSession>, PositioningError> {
    const S_WHAT: &str = "sessions CSV";
    const O_WHAT: &str = "observations CSV";
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(sessions);
    let headers = rdr.headers().map_err(|e| format_err(S_WHAT, e))?.clone();
    let idx: Vec<usize> = SESSIONS_CSV_HEADER
        .iter()
        .map(|c| column(&headers, c, S_WHAT))
        .collect::<Result<_, _>>()?;

    let mut heads = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(S_WHAT, e))?;
        let id = rec.get(idx[0]).unwrap_or("").to_string();
        let geo = |a: usize, b: usize, c: usize| -> Result<GeoPoint, PositioningError> {
            Ok(GeoPoint {
                latitude: field(&rec, idx[a], SESSIONS_CSV_HEADER[a], S_WHAT)?,
                longitude: field(&rec, idx[b], SESSIONS_CSV_HEADER[b], S_WHAT)?,
                altitude: field(&rec, idx[c], SESSIONS_CSV_HEADER[c], S_WHAT)?,
            })
        };
        let start = geo(1, 2, 3)?;
        let end = geo(4, 5, 6)?;
        let point_count: usize = field(&rec, idx[7], "point_count", S_WHAT)?;
        heads.push((id, start, end, point_count));
    }

    let mut ordr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(observations);
    let oheaders = ordr.headers().map_err(|e| format_err(O_WHAT, e))?.clone();
    let oidx: Vec<usize> = OBSERVATIONS_CSV_HEADER
        .iter()
        .map(|c| column(&oheaders, c, O_WHAT))
        .collect::<Result<_, _>>()?;
    let extra: Vec<(usize, String)> = oheaders
        .iter()
        .enumerate()
        .filter(|(i, _)| !oidx.contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    // session -> index -> (samples, aux)
    let mut grouped: HashMap<String, BTreeMap<usize, (Vec<f64>, BTreeMap<String, String>)>> = HashMap::new();
    for rec in ordr.records() {
        let rec = rec.map_err(|e| format_err(O_WHAT, e))?;
        let id = rec.get(oidx[0]).unwrap_or("").to_string();
        let index: usize = field(&rec, oidx[1], "index", O_WHAT)?;
        let rsrp: f64 = field(&rec, oidx[2], "rsrp_dbm", O_WHAT)?;
        let slot = grouped.entry(id).or_default().entry(index).or_default();
        slot.0.push(rsrp);
        for (i, name) in &extra {
            if let Some(v) = rec.get(*i).filter(|v| !v.is_empty()) {
                slot.1.insert(name.clone(), v.to_string());
            }
        }
    }

    let mut out = Vec::with_capacity(heads.len());
    for (id, start, end, point_count) in heads {
        let points = grouped.remove(&id).unwrap_or_default();
        if let Some((&bad, _)) = points.iter().find(|(&i, _)| i >= point_count) {
            return Err(PositioningError::Validation {
                session: id,
                reason: format!("observation index {bad} outside 0..{point_count}"),
            });
        }
        if points.len() != point_count {
            return Err(PositioningError::Validation {
                session: id,
                reason: format!("declares {point_count} points but lists {}", points.len()),
            });
        }
        let observations = points
            .into_values()
            .map(|(samples, aux)| Observation { rsrp_dbm: average_db(&samples).unwrap_or(f64::NAN), aux })
            .collect();
        let session = MeasurementSession { session_id: id, start, end, point_count, observations };
        session.validate()?;
        out.push(session);
    }
    if let Some(orphan) = grouped.keys().min() {
        return Err(PositioningError::Validation {
            session: orphan.clone(),
            reason: "observations reference an undeclared session".into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RsrpValue {
    Single(f64),
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObservationRecord {
    index: usize,
    rsrp_dbm: RsrpValue,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    aux: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionRecord {
    session_id: String,
    start_lat: f64,
    start_lon: f64,
    start_alt: f64,
    end_lat: f64,
    end_lon: f64,
    end_alt: f64,
    point_count: usize,
    observations: Vec<ObservationRecord>,
}

pub fn parse_sessions_json<R: Read>(reader: R, what: &str) -> Result<Vec<MeasurementSession>, PositioningError> {
    let records: Vec<SessionRecord> = serde_json::from_reader(reader).map_err(|e| format_err(what, e))?;
    records
        .into_iter()
        .map(|r| {
            let mut by_index: BTreeMap<usize, Observation> = BTreeMap::new();
            for o in r.observations {
                if o.index >= r.point_count || by_index.contains_key(&o.index) {
                    return Err(PositioningError::Validation {
                        session: r.session_id.clone(),
                        reason: format!("observation index {} is out of range or repeated", o.index),
                    });
                }
                let rsrp = match o.rsrp_dbm {
                    RsrpValue::Single(v) => v,
                    RsrpValue::Samples(s) => average_db(&s).ok_or_else(|| PositioningError::Validation {
                        session: r.session_id.clone(),
                        reason: format!("observation {} has no samples", o.index),
                    })?,
                };
                by_index.insert(o.index, Observation { rsrp_dbm: rsrp, aux: o.aux });
            }
            let session = MeasurementSession {
                session_id: r.session_id,
                start: GeoPoint { latitude: r.start_lat, longitude: r.start_lon, altitude: r.start_alt },
                end: GeoPoint { latitude: r.end_lat, longitude: r.end_lon, altitude: r.end_alt },
                point_count: r.point_count,
                observations: by_index.into_values().collect(),
            };
            session.validate()?;
            Ok(session)
        })
        .collect()
}

pub fn write_sessions_csv<S: Write, O: Write>(
    sessions: &[MeasurementSession],
    sessions_out: S,
    observations_out: O,
) -> Result<(), csv::Error> {
    let mut sw = csv::Writer::from_writer(sessions_out);
    sw.write_record(SESSIONS_CSV_HEADER)?;
    let mut ow = csv::Writer::from_writer(observations_out);
    ow.write_record(OBSERVATIONS_CSV_HEADER)?;
    for s in sessions {
        sw.write_record([
            s.session_id.clone(),
            s.start.latitude.to_string(),
            s.start.longitude.to_string(),
            s.start.altitude.to_string(),
            s.end.latitude.to_string(),
            s.end.longitude.to_string(),
            s.end.altitude.to_string(),
            s.point_count.to_string(),
        ])?;
        for (i, o) in s.observations.iter().enumerate() {
            ow.write_record([s.session_id.clone(), i.to_string(), o.rsrp_dbm.to_string()])?;
        }
    }
    sw.flush()?;
    ow.flush()?;
    Ok(())
}

pub fn write_sessions_json<W: Write>(sessions: &[MeasurementSession], out: W) -> serde_json::Result<()> {
    let records: Vec<SessionRecord> = sessions
        .iter()
        .map(|s| SessionRecord {
            session_id: s.session_id.clone(),
            start_lat: s.start.latitude,
            start_lon: s.start.longitude,
            start_alt: s.start.altitude,
            end_lat: s.end.latitude,
            end_lon: s.end.longitude,
            end_alt: s.end.altitude,
            point_count: s.point_count,
            observations: s
                .observations
                .iter()
                .enumerate()
                .map(|(i, o)| ObservationRecord { index: i, rsrp_dbm: RsrpValue::Single(o.rsrp_dbm), aux: o.aux.clone() })
                .collect(),
        })
        .collect();
    serde_json::to_writer_pretty(out, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::to_geo;

    const ORIGIN: GeoPoint = GeoPoint { latitude: 55.7858, longitude: 12.5213, altitude: 20.0 };

    fn session(id: &str, start: LocalPoint, end: LocalPoint, n: usize) -> MeasurementSession {
        MeasurementSession {
            session_id: id.into(),
            start: to_geo(&start, &ORIGIN).unwrap(),
            end: to_geo(&end, &ORIGIN).unwrap(),
            point_count: n,
            observations: (0..n).map(|i| Observation::new(-80.0 - i as f64 * 0.1)).collect(),
        }
    }

    #[test]
    fn eleven_points_one_metre_apart() {
        let s = session("a", LocalPoint::ORIGIN, LocalPoint::new(0.0, 10.0, 0.0), 11);
        let pts = interpolate_positions(&s, &ORIGIN).unwrap();
        assert_eq!(pts.len(), 11);
        for (i, p) in pts.iter().enumerate() {
            assert!((p.position.north - i as f64).abs() < 1e-6, "{:?}", p.position);
            assert!(p.position.east.abs() < 1e-6);
            assert_eq!(p.index, i);
            assert_eq!(p.rsrp_dbm, s.observations[i].rsrp_dbm);
        }
    }

    #[test]
    fn two_points_are_the_endpoints() {
        let s = session("b", LocalPoint::new(1.0, 2.0, -5.0), LocalPoint::new(4.0, 6.0, -6.0), 2);
        let pts = interpolate_positions(&s, &ORIGIN).unwrap();
        assert_eq!(pts[0].position, to_local(&s.start, &ORIGIN).unwrap());
        assert_eq!(pts[1].position, to_local(&s.end, &ORIGIN).unwrap());
    }

    #[test]
    fn fifty_metre_corridor_two_metre_spacing() {
        let s = session("c", LocalPoint::new(0.0, 0.0, -8.0), LocalPoint::new(50.0, 0.0, -8.0), 26);
        let pts = interpolate_positions(&s, &ORIGIN).unwrap();
        for w in pts.windows(2) {
            assert!((w[0].position.distance(w[1].position) - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_sessions() {
        let mut s = session("d", LocalPoint::ORIGIN, LocalPoint::new(1.0, 0.0, 0.0), 2);
        s.point_count = 1;
        s.observations.truncate(1);
        assert!(matches!(interpolate_positions(&s, &ORIGIN), Err(PositioningError::InvalidSession { .. })));

        let z = session("e", LocalPoint::ORIGIN, LocalPoint::ORIGIN, 3);
        assert!(matches!(interpolate_positions(&z, &ORIGIN), Err(PositioningError::DegenerateGeometry { .. })));

        let mut loud = session("f", LocalPoint::ORIGIN, LocalPoint::new(1.0, 0.0, 0.0), 2);
        loud.observations[1].rsrp_dbm = -5.0;
        assert!(matches!(loud.validate(), Err(PositioningError::Validation { .. })));
    }

    fn sessions_csv(counts: &[(&str, usize)]) -> String {
        let mut s = SESSIONS_CSV_HEADER.join(",") + "\n";
        for (id, n) in counts {
            s += &format!("{id},55.7858,12.5213,0,55.7859,12.5213,0,{n}\n");
        }
        s
    }

    fn observations_csv(counts: &[(&str, usize)]) -> String {
        let mut s = OBSERVATIONS_CSV_HEADER.join(",") + "\n";
        for (id, n) in counts {
            for i in 0..*n {
                s += &format!("{id},{i},-95.5\n");
            }
        }
        s
    }

    #[test]
    fn csv_two_sessions_of_ten() {
        let decl = [("s1", 10), ("s2", 10)];
        let sessions = parse_sessions_csv(sessions_csv(&decl).as_bytes(), observations_csv(&decl).as_bytes()).unwrap();
        assert_eq!(summarize(&sessions), SessionSummary { sessions: 2, points: 20 });
    }

    #[test]
    fn csv_count_mismatch_names_session() {
        let err = parse_sessions_csv(
            sessions_csv(&[("ok", 3), ("short", 10)]).as_bytes(),
            observations_csv(&[("ok", 3), ("short", 9)]).as_bytes(),
        )
        .unwrap_err();
        match err {
            PositioningError::Validation { session, .. } => assert_eq!(session, "short"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raw_samples_average_in_db() {
        let obs = "session_id,index,rsrp_dbm,cell\ns,0,-90,A\ns,0,-100,A\ns,1,-80,B\n";
        let sessions = parse_sessions_csv(sessions_csv(&[("s", 2)]).as_bytes(), obs.as_bytes()).unwrap();
        assert_eq!(sessions[0].observations[0].rsrp_dbm, -95.0);
        assert_eq!(sessions[0].observations[1].aux["cell"], "B");
    }

    #[test]
    fn full_campaign_counts_895_points() {
        // 35 runs of 25 points and one of 20.
        let mut decl: Vec<(String, usize)> = (0..35).map(|i| (format!("run{i}"), 25)).collect();
        decl.push(("run35".into(), 20));
        let refs: Vec<(&str, usize)> = decl.iter().map(|(s, n)| (s.as_str(), *n)).collect();
        let sessions = parse_sessions_csv(sessions_csv(&refs).as_bytes(), observations_csv(&refs).as_bytes()).unwrap();
        assert_eq!(summarize(&sessions).points, 895);
    }

    #[test]
    fn json_mirror_round_trips() {
        let sessions = vec![
            session("j1", LocalPoint::ORIGIN, LocalPoint::new(10.0, 0.0, -3.0), 6),
            session("j2", LocalPoint::new(0.0, 5.0, 0.0), LocalPoint::new(0.0, 25.0, 0.0), 11),
        ];
        let mut buf = Vec::new();
        write_sessions_json(&sessions, &mut buf).unwrap();
        assert_eq!(parse_sessions_json(buf.as_slice(), "mem").unwrap(), sessions);

        let samples = r#"[{"session_id":"x","start_lat":0,"start_lon":0,"start_alt":0,"end_lat":0.0001,"end_lon":0,"end_alt":0,
            "point_count":2,"observations":[{"index":1,"rsrp_dbm":-90},{"index":0,"rsrp_dbm":[-80,-82]}]}]"#;
        let parsed = parse_sessions_json(samples.as_bytes(), "mem").unwrap();
        assert_eq!(parsed[0].observations[0].rsrp_dbm, -81.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn equidistant_with_exact_endpoints(
                s in (-500.0f64..500.0, -500.0f64..500.0, -30.0f64..5.0),
                e in (-500.0f64..500.0, -500.0f64..500.0, -30.0f64..5.0),
                n in 2usize..300,
            ) {
                let (a, b) = (LocalPoint::new(s.0, s.1, s.2), LocalPoint::new(e.0, e.1, e.2));
                prop_assume!(a.distance(b) > 0.5);
                let sess = session("p", a, b, n);
                let pts = interpolate_positions(&sess, &ORIGIN).unwrap();
                let gaps: Vec<f64> = pts.windows(2).map(|w| w[0].position.distance(w[1].position)).collect();
                let (lo, hi) = gaps.iter().fold((f64::MAX, f64::MIN), |(l, h), g| (l.min(*g), h.max(*g)));
                prop_assert!(hi - lo < 1e-9);
                prop_assert_eq!(pts[0].position, to_local(&sess.start, &ORIGIN).unwrap());
                prop_assert_eq!(pts[n - 1].position, to_local(&sess.end, &ORIGIN).unwrap());
            }
        }
    }
}
