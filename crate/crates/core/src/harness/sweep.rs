//! Cross-product sweeps with one CSV row per (point, seed).

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepPoint};
use super::session::run_session_detailed;
use crate::analysts::{Analyst, AnalystClass};
use crate::error::{invalid, Result};
use crate::truncation::depth_for;

pub const SWEEP_CSV_HEADER: [&str; 11] =
    ["point", "label", "config_hash", "seed", "n", "t", "max_error", "final_error", "escapes", "depth", "envelope"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub max_error: f64,
    pub final_error: f64,
    pub escapes: usize,
    /// Truncation depth `K` used in the envelope (1 off the grid).
    pub depth: usize,
    /// `multiplier · √(K d_q ln t / n)` for progressive analysts,
    /// `multiplier · (K d_q ln t)^{1/4} / √n` otherwise.
    pub envelope: f64,
}

/// Theoretical error envelope for an analyst at horizon `t`.
pub fn envelope(analyst: &Analyst, n: usize, t: usize, multiplier: f64) -> (usize, f64) {
    let k = if analyst.space().resolution().is_some() {
        depth_for(analyst, t.max(1)).map(|d| d.k_int).unwrap_or(1)
    } else {
        1
    };
    let inner = k as f64 * analyst.query_dim() as f64 * (t.max(2) as f64).ln();
    let value = match analyst.class() {
        AnalystClass::Progressive { .. } => (inner / n as f64).sqrt(),
        _ => inner.powf(0.25) / (n as f64).sqrt(),
    };
    (k, multiplier * value)
}

/// Runs every sweep point for every seed. Points that differ only in `t`
/// share one session per seed run to the largest `t`; shorter horizons
/// read its prefix, which is exactly the shorter session since every
/// random stream is consumed round by round.
pub fn scaling_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let points = config.expand()?;
    if points.iter().any(|p| p.config.t == 0) {
        return Err(invalid("sweeps need t >= 1"));
    }
    // group by the config with t erased
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let mut key = p.config.clone();
        key.t = 0;
        groups.entry(key.hash()).or_default().push(i);
    }
    let mut jobs = Vec::new();
    for members in groups.values() {
        let longest = *members.iter().max_by_key(|&&i| points[i].config.t).expect("non-empty group");
        for &seed in &points[longest].config.seeds {
            jobs.push((longest, seed, members.clone()));
        }
    }
    let results: Vec<Result<Vec<SweepRow>>> =
        jobs.par_iter().map(|(longest, seed, members)| rows_for(&points, *longest, *seed, members)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| (a.point, a.seed).cmp(&(b.point, b.seed)));
    Ok(rows)
}

fn rows_for(points: &[SweepPoint], longest: usize, seed: u64, members: &[usize]) -> Result<Vec<SweepRow>> {
    let cfg = &points[longest].config;
    let (out, _) = run_session_detailed(cfg, seed)?;
    let errors = out.transcript.per_round_errors();
    let analyst = cfg.analyst_for(seed)?;
    let mut rows = Vec::with_capacity(members.len());
    for &i in members {
        let p = &points[i];
        let t = p.config.t;
        let prefix = &errors[..t];
        let (depth, env) = envelope(&analyst, p.config.n, t, p.config.envelope_multiplier);
        rows.push(SweepRow {
            point: i,
            label: p.label(),
            config_hash: p.config.hash(),
            seed,
            n: p.config.n,
            t,
            max_error: prefix.iter().copied().fold(0.0, f64::max),
            final_error: prefix[t - 1],
            escapes: escapes_until(&out.trajectory.states, &analyst, t),
            depth,
            envelope: env,
        });
    }
    Ok(rows)
}

fn escapes_until(states: &[crate::analysts::Hidden], analyst: &Analyst, t: usize) -> usize {
    match analyst.class() {
        AnalystClass::ConservativeB { radius, .. } => {
            states[1..=t].iter().filter(|h| analyst.norm().of(&h.to_real()) > *radius).count()
        }
        _ => 0,
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.point.to_string(),
            r.label.clone(),
            r.config_hash.clone(),
            r.seed.to_string(),
            r.n.to_string(),
            r.t.to_string(),
            format!("{:?}", r.max_error),
            format!("{:?}", r.final_error),
            r.escapes.to_string(),
            r.depth.to_string(),
            format!("{:?}", r.envelope),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Mean of `max_error` per `t`, in ascending `t`.
pub fn mean_error_by_t(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut by_t: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = by_t.entry(r.t).or_insert((0.0, 0));
        e.0 += r.max_error;
        e.1 += 1;
    }
    by_t.into_iter().map(|(t, (s, c))| (t, s / c as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::session::run_session;

    const CFG: &str = r#"{
        "distribution": {"kind": "uniform_box", "dim": 2},
        "n": 200, "t": 10,
        "analyst": {"generator": "random_linear", "d": 3, "d_q": 2, "lambda": 0.5, "l": 1.0,
                    "space": {"kind": "grid", "resolution": 0.001}},
        "mechanism": {"kind": "rounded_empirical", "eps": 1.0},
        "seeds": [1, 2, 3],
        "sweep": {"t": [5, 20, 40]}
    }"#;

    #[test]
    fn prefix_rows_match_direct_sessions() {
        let cfg = ExperimentConfig::from_json(CFG).unwrap();
        let rows = scaling_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        for p in cfg.expand().unwrap() {
            for &seed in &p.config.seeds {
                let (_, r) = run_session(&p.config, seed).unwrap();
                let row = rows.iter().find(|x| x.t == p.config.t && x.seed == seed).unwrap();
                assert_eq!(row.max_error, r.max_error);
                assert_eq!(row.final_error, r.final_error);
            }
        }
    }

    #[test]
    fn csv_is_deterministic() {
        let cfg = ExperimentConfig::from_json(CFG).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sweep_csv(&scaling_sweep(&cfg).unwrap(), &mut a).unwrap();
        write_sweep_csv(&scaling_sweep(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("point,label,config_hash,seed,n,t,max_error"));
    }
}
