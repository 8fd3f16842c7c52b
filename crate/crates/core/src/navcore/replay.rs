//! Line-oriented probe/replay record format.
//!
//! ```text
//! probe <t_s> <session_id> <x> <y> <speed_kph> <heading_deg>
//! report <t_s> <session_id> <kind> <x> <y> [note...]
//! confirm <t_s> <session_id> <report_id>
//! invalidate <t_s> <session_id> <report_id>
//! ```
//!
//! Files written by the simulator additionally carry `param <key> <value>`,
//! `session <t_s> <session_id> <username|-> <source_ip>`,
//! `weight <t_s> <session_id> <w>`, `logout <t_s> <session_id>` and
//! `end <t_s>` records so that re-ingestion reproduces trust weights and
//! the evaluation horizon. `#` starts a comment.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geomap::Point;

use super::{ObstacleKind, ProbeReport, ReportId, SessionId};

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayRecord {
    Param {
        key: String,
        value: String,
    },
    Session {
        t: f64,
        session: SessionId,
        username: Option<String>,
        source_ip: String,
    },
    Weight {
        t: f64,
        session: SessionId,
        weight: f64,
    },
    Probe {
        session: SessionId,
        fix: ProbeReport,
    },
    Report {
        t: f64,
        session: SessionId,
        kind: ObstacleKind,
        position: Point,
        note: Option<String>,
    },
    Confirm {
        t: f64,
        session: SessionId,
        report: ReportId,
    },
    Invalidate {
        t: f64,
        session: SessionId,
        report: ReportId,
    },
    Logout {
        t: f64,
        session: SessionId,
    },
    End {
        t: f64,
    },
}

impl ReplayRecord {
    /// Event time; `None` for parameter records.
    pub fn time(&self) -> Option<f64> {
        match self {
            ReplayRecord::Param { .. } => None,
            ReplayRecord::Probe { fix, .. } => Some(fix.t),
            ReplayRecord::Session { t, .. }
            | ReplayRecord::Weight { t, .. }
            | ReplayRecord::Report { t, .. }
            | ReplayRecord::Confirm { t, .. }
            | ReplayRecord::Invalidate { t, .. }
            | ReplayRecord::Logout { t, .. }
            | ReplayRecord::End { t } => Some(*t),
        }
    }
}

impl fmt::Display for ReplayRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayRecord::Param { key, value } => write!(f, "param {key} {value}"),
            ReplayRecord::Session {
                t,
                session,
                username,
                source_ip,
            } => write!(
                f,
                "session {t} {session} {} {source_ip}",
                username.as_deref().unwrap_or("-")
            ),
            ReplayRecord::Weight { t, session, weight } => {
                write!(f, "weight {t} {session} {weight}")
            }
            ReplayRecord::Probe { session, fix } => write!(
                f,
                "probe {} {session} {} {} {} {}",
                fix.t, fix.position.x, fix.position.y, fix.speed_kph, fix.heading
            ),
            ReplayRecord::Report {
                t,
                session,
                kind,
                position,
                note,
            } => {
                write!(
                    f,
                    "report {t} {session} {kind} {} {}",
                    position.x, position.y
                )?;
                if let Some(n) = note {
                    write!(f, " {n}")?;
                }
                Ok(())
            }
            ReplayRecord::Confirm { t, session, report } => {
                write!(f, "confirm {t} {session} {report}")
            }
            ReplayRecord::Invalidate { t, session, report } => {
                write!(f, "invalidate {t} {session} {report}")
            }
            ReplayRecord::Logout { t, session } => write!(f, "logout {t} {session}"),
            ReplayRecord::End { t } => write!(f, "end {t}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("replay line {line}: {msg}")]
pub struct ReplayError {
    pub line: usize,
    pub msg: String,
}

fn field<T: FromStr>(toks: &[&str], i: usize, name: &str) -> Result<T, String> {
    let tok = toks.get(i).ok_or_else(|| format!("missing {name}"))?;
    tok.parse().map_err(|_| format!("invalid {name} {tok:?}"))
}

impl FromStr for ReplayRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let arity = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(format!(
                    "{} expects {} fields, got {}",
                    toks[0],
                    n - 1,
                    toks.len() - 1
                ))
            }
        };
        let rec = match toks.first().copied() {
            Some("param") => {
                arity(3)?;
                ReplayRecord::Param {
                    key: toks[1].to_string(),
                    value: toks[2].to_string(),
                }
            }
            Some("session") => {
                arity(5)?;
                ReplayRecord::Session {
                    t: field(&toks, 1, "time")?,
                    session: field(&toks, 2, "session id")?,
                    username: (toks[3] != "-").then(|| toks[3].to_string()),
                    source_ip: toks[4].to_string(),
                }
            }
            Some("weight") => {
                arity(4)?;
                ReplayRecord::Weight {
                    t: field(&toks, 1, "time")?,
                    session: field(&toks, 2, "session id")?,
                    weight: field(&toks, 3, "weight")?,
                }
            }
            Some("probe") => {
                arity(7)?;
                ReplayRecord::Probe {
                    session: field(&toks, 2, "session id")?,
                    fix: ProbeReport {
                        t: field(&toks, 1, "time")?,
                        position: Point::new(field(&toks, 3, "x")?, field(&toks, 4, "y")?),
                        speed_kph: field(&toks, 5, "speed")?,
                        heading: field(&toks, 6, "heading")?,
                    },
                }
            }
            Some("report") => {
                if toks.len() < 6 {
                    return Err("report expects at least 5 fields".to_string());
                }
                ReplayRecord::Report {
                    t: field(&toks, 1, "time")?,
                    session: field(&toks, 2, "session id")?,
                    kind: toks[3].parse()?,
                    position: Point::new(field(&toks, 4, "x")?, field(&toks, 5, "y")?),
                    note: (toks.len() > 6).then(|| toks[6..].join(" ")),
                }
            }
            Some(kw @ ("confirm" | "invalidate")) => {
                arity(4)?;
                let (t, session, report) = (
                    field(&toks, 1, "time")?,
                    field(&toks, 2, "session id")?,
                    field(&toks, 3, "report id")?,
                );
                if kw == "confirm" {
                    ReplayRecord::Confirm { t, session, report }
                } else {
                    ReplayRecord::Invalidate { t, session, report }
                }
            }
            Some("logout") => {
                arity(3)?;
                ReplayRecord::Logout {
                    t: field(&toks, 1, "time")?,
                    session: field(&toks, 2, "session id")?,
                }
            }
            Some("end") => {
                arity(2)?;
                ReplayRecord::End {
                    t: field(&toks, 1, "time")?,
                }
            }
            Some(other) => return Err(format!("unknown record {other:?}")),
            None => return Err("empty record".to_string()),
        };
        Ok(rec)
    }
}

pub fn parse_replay(text: &str) -> Result<Vec<ReplayRecord>, ReplayError> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("").trim();
            (!content.is_empty()).then_some((i + 1, content))
        })
        .map(|(line, content)| content.parse().map_err(|msg| ReplayError { line, msg }))
        .collect()
}

pub fn write_replay(records: &[ReplayRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_each_kind() {
        let text = "# header\n\
            param window_s 300\n\
            session 0 3 bot_1 10.0.0.1\n\
            session 0 4 - 10.0.0.2\n\
            weight 60 3 1.5\n\
            probe 12 3 10.5 0 8 90\n\
            report 13 4 police 1 2 speed trap ahead\n\
            confirm 14 3 0\n\
            invalidate 15 3 0\n\
            logout 16 3\n\
            end 3600\n";
        let recs = parse_replay(text).unwrap();
        assert_eq!(recs.len(), 10);
        assert_eq!(
            recs[5],
            ReplayRecord::Report {
                t: 13.0,
                session: 4,
                kind: ObstacleKind::Police,
                position: Point::new(1.0, 2.0),
                note: Some("speed trap ahead".into()),
            }
        );
        assert_eq!(
            write_replay(&recs),
            text.lines()
                .skip(1)
                .map(|l| format!("{l}\n"))
                .collect::<String>()
        );
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_replay("probe 1 2 3\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_replay("\n\nreport 1 2 tank 0 0\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.msg.contains("tank"));
    }

    proptest! {
        #[test]
        fn probe_round_trip(t in 0u32..100_000, sid in 0u64..1000, x in -5e4f64..5e4, y in -5e4f64..5e4,
                            v in 0f64..200.0, h in 0f64..360.0) {
            let rec = ReplayRecord::Probe {
                session: sid,
                fix: ProbeReport { t: f64::from(t), position: Point::new(x, y), speed_kph: v, heading: h },
            };
            let back: ReplayRecord = rec.to_string().parse().unwrap();
            prop_assert_eq!(back, rec);
        }
    }
}
