//! Trajectory CSV files.
//!
//! Header `episode,t,agent,s0..s{d_s-1},a0..a{d_a-1},mode`, one row per
//! (episode, step, agent) in that sort order. Floats are written with 17
//! significant digits so a write/read cycle is bit-exact. `mode` is empty
//! when the episode carries no mode tag.

use std::path::Path;

use super::normalize::Normalizer;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectories(path: impl AsRef<Path>, trajs: &[Trajectory]) -> Result<()> {
    let first = trajs.first().ok_or(Error::Empty("trajectory set"))?;
    let (ds, da) = (first.state_dim(), first.action_dim());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["episode".to_string(), "t".into(), "agent".into()];
    header.extend((0..ds).map(|k| format!("s{k}")));
    header.extend((0..da).map(|k| format!("a{k}")));
    header.push("mode".into());
    w.write_record(&header)?;
    for (ep, tr) in trajs.iter().enumerate() {
        if tr.state_dim() != ds || tr.action_dim() != da {
            return Err(Error::InvalidArgument("mixed dimensions in trajectory set".into()));
        }
        let mode = tr.mode_tag.map(|m| m.to_string()).unwrap_or_default();
        for t in 0..tr.horizon() {
            let (s, a) = (tr.state(t), tr.action(t));
            for agent in 0..tr.agents() {
                let mut row = vec![ep.to_string(), t.to_string(), agent.to_string()];
                row.extend(s[agent * ds..(agent + 1) * ds].iter().map(|&v| fmt_float(v)));
                row.extend(a[agent * da..(agent + 1) * da].iter().map(|&v| fmt_float(v)));
                row.push(mode.clone());
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Raw (unnormalized) trajectories from a CSV file.
pub fn read_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Empty("trajectory file"));
    }
    let ds = header.iter().filter(|h| h.starts_with('s') && h[1..].parse::<usize>().is_ok()).count();
    let da = header.iter().filter(|h| h.starts_with('a') && h[1..].parse::<usize>().is_ok()).count();
    let expected = 3 + ds + da + 1;
    if ds == 0 || da == 0 || header.len() != expected || &header[0] != "episode" || &header[expected - 1] != "mode" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }

    struct Row {
        line: usize,
        t: usize,
        agent: usize,
        vals: Vec<f64>,
    }
    // (episode id, mode, rows)
    let mut episodes: Vec<(usize, Option<usize>, Vec<Row>)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let bad = |msg: String| Error::Parse { line, msg };
        if rec.len() != expected {
            return Err(bad(format!("expected {expected} fields, got {}", rec.len())));
        }
        let int = |k: usize| rec[k].trim().parse::<usize>().map_err(|e| bad(format!("field {k}: {e}")));
        let (ep, t, agent) = (int(0)?, int(1)?, int(2)?);
        let mut vals = Vec::with_capacity(ds + da);
        for k in 3..3 + ds + da {
            let v = rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("field {k}: {e}")))?;
            if !v.is_finite() {
                return Err(bad(format!("field {k}: non-finite value")));
            }
            vals.push(v);
        }
        let mode_field = rec[expected - 1].trim();
        let mode = if mode_field.is_empty() {
            None
        } else {
            Some(mode_field.parse::<usize>().map_err(|e| bad(format!("mode: {e}")))?)
        };
        match episodes.last_mut() {
            Some((id, m, rows)) if *id == ep => {
                if *m != mode {
                    return Err(bad("mode changes within an episode".into()));
                }
                rows.push(Row { line, t, agent, vals });
            }
            Some((id, _, _)) if *id > ep => return Err(bad("rows not sorted by episode".into())),
            _ => episodes.push((ep, mode, vec![Row { line, t, agent, vals }])),
        }
    }
    if episodes.is_empty() {
        return Err(Error::Empty("trajectory file"));
    }

    let mut agents: Option<usize> = None;
    let mut out = Vec::with_capacity(episodes.len());
    for (_, mode, rows) in episodes {
        let n = rows.iter().map(|r| r.agent).max().unwrap_or(0) + 1;
        match agents {
            Some(prev) if prev != n => {
                return Err(Error::Parse {
                    line: rows[0].line,
                    msg: format!("episode has {n} agents, earlier episodes {prev}"),
                })
            }
            _ => agents = Some(n),
        }
        if rows.len() % n != 0 {
            return Err(Error::Parse {
                line: rows[rows.len() - 1].line,
                msg: format!("incomplete final step: {} rows for {n} agents", rows.len()),
            });
        }
        let (mut states, mut actions) = (Vec::new(), Vec::new());
        for (k, row) in rows.iter().enumerate() {
            if row.t != k / n || row.agent != k % n {
                return Err(Error::Parse {
                    line: row.line,
                    msg: format!("expected t={}, agent={}; rows must be sorted", k / n, k % n),
                });
            }
            states.extend_from_slice(&row.vals[..ds]);
            actions.extend_from_slice(&row.vals[ds..]);
        }
        out.push(Trajectory::new(n, ds, da, states, actions, mode)?);
    }
    Ok(out)
}

/// Trajectories with states normalized by a [`Normalizer`] fit on the whole file.
pub fn load_trajectories(path: impl AsRef<Path>) -> Result<(Vec<Trajectory>, Normalizer)> {
    let raw = read_trajectories(path)?;
    let norm = Normalizer::fit(&raw)?;
    let out = raw
        .iter()
        .map(|t| norm.normalize_trajectory(t))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, norm))
}
