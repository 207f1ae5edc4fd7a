//! Batch result tables.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::montecarlo::{BatchSummary, Histogram};

pub const RUNS_HEADER: &str = "run_id,winner,end_step,peak_zombies,first_border_step";
pub const TRAJECTORIES_HEADER: &str = "run_id,step,healthy,incubating,zombies,dead_zombies";
pub const HISTOGRAMS_HEADER: &str = "metric,bin,count";

pub fn write_runs(summary: &BatchSummary, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{RUNS_HEADER}")?;
    for r in &summary.runs {
        let o = &r.outcome;
        write!(out, "{},{},{},{},", r.run_id, o.winner.as_str(), o.end_step, o.peak_zombies)?;
        if let Some(b) = o.first_border_step {
            write!(out, "{b}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_trajectories(summary: &BatchSummary, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{TRAJECTORIES_HEADER}")?;
    for r in &summary.runs {
        for p in &r.outcome.trajectory {
            let c = p.counts;
            writeln!(out, "{},{},{},{},{},{}", r.run_id, p.step, c.healthy, c.incubating, c.zombies, c.dead_zombies)?;
        }
    }
    Ok(())
}

/// Histogram metrics in output order.
pub fn histogram_metrics(summary: &BatchSummary) -> [(&'static str, &Histogram); 4] {
    [
        ("end_step_humans", &summary.human_end_steps),
        ("end_step_zombies", &summary.zombie_end_steps),
        ("end_step_unresolved", &summary.unresolved_end_steps),
        ("first_border_step", &summary.first_border_steps),
    ]
}

pub fn write_histograms(summary: &BatchSummary, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{HISTOGRAMS_HEADER}")?;
    for (metric, hist) in histogram_metrics(summary) {
        for (bin, count) in hist {
            writeln!(out, "{metric},{bin},{count}")?;
        }
    }
    Ok(())
}

/// Writes `runs.csv`, `trajectories.csv` and `histograms.csv` into `dir`,
/// creating it if needed.
pub fn write_batch_csv(summary: &BatchSummary, dir: impl AsRef<Path>) -> Result<(), super::ReportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| super::ReportError::io(dir, e))?;
    let files: [(&str, fn(&BatchSummary, &mut Vec<u8>) -> io::Result<()>); 3] = [
        ("runs.csv", |s, b| write_runs(s, b)),
        ("trajectories.csv", |s, b| write_trajectories(s, b)),
        ("histograms.csv", |s, b| write_histograms(s, b)),
    ];
    for (name, write) in files {
        let mut buf = Vec::new();
        write(summary, &mut buf).expect("writing to memory");
        let path = dir.join(name);
        fs::write(&path, buf).map_err(|e| super::ReportError::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Counts, RunOutcome, TrajectoryPoint, Winner};
    use crate::montecarlo::aggregate_outcomes;

    fn text(f: impl Fn(&mut Vec<u8>) -> io::Result<()>) -> String {
        let mut b = Vec::new();
        f(&mut b).unwrap();
        String::from_utf8(b).unwrap()
    }

    #[test]
    fn empty_summary_has_headers_only() {
        let s = BatchSummary::default();
        assert_eq!(text(|b| write_runs(&s, b)), format!("{RUNS_HEADER}\n"));
        assert_eq!(text(|b| write_trajectories(&s, b)), format!("{TRAJECTORIES_HEADER}\n"));
        assert_eq!(text(|b| write_histograms(&s, b)), format!("{HISTOGRAMS_HEADER}\n"));
    }

    #[test]
    fn single_human_win_row() {
        let traj = vec![
            TrajectoryPoint { step: 0, counts: Counts { healthy: 4, zombies: 1, ..Default::default() } },
            TrajectoryPoint { step: 3, counts: Counts { healthy: 4, dead_zombies: 1, ..Default::default() } },
        ];
        let mut z = RunOutcome { winner: Winner::Zombies, end_step: 7, peak_zombies: 5, first_border_step: Some(2), trajectory: vec![] };
        z.trajectory = traj.clone();
        let s = aggregate_outcomes(vec![
            RunOutcome { winner: Winner::Humans, end_step: 3, peak_zombies: 1, first_border_step: None, trajectory: traj },
            z,
        ]);
        let runs = text(|b| write_runs(&s, b));
        assert_eq!(runs, format!("{RUNS_HEADER}\n0,Humans,3,1,\n1,Zombies,7,5,2\n"));
        let traj = text(|b| write_trajectories(&s, b));
        assert!(traj.starts_with(&format!("{TRAJECTORIES_HEADER}\n0,0,4,0,1,0\n0,3,4,0,0,1\n")));
        let hist = text(|b| write_histograms(&s, b));
        assert_eq!(
            hist,
            format!("{HISTOGRAMS_HEADER}\nend_step_humans,3,1\nend_step_zombies,7,1\nfirst_border_step,2,1\n")
        );
    }

    #[test]
    fn files_are_byte_identical_across_writes() {
        let s = aggregate_outcomes(vec![RunOutcome {
            winner: Winner::Humans,
            end_step: 3,
            peak_zombies: 1,
            first_border_step: None,
            trajectory: vec![],
        }]);
        let dir = tempfile::tempdir().unwrap();
        write_batch_csv(&s, dir.path().join("a")).unwrap();
        write_batch_csv(&s, dir.path().join("b")).unwrap();
        for f in ["runs.csv", "trajectories.csv", "histograms.csv"] {
            let a = fs::read(dir.path().join("a").join(f)).unwrap();
            assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap());
            assert!(!a.contains(&b'\r'));
        }
        assert_eq!(fs::read_to_string(dir.path().join("a/runs.csv")).unwrap(), format!("{RUNS_HEADER}\n0,Humans,3,1,\n"));
    }
}
