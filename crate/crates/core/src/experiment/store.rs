//! On-disk result store.
//!
//! Layout under the experiment output directory:
//!
//! ```text
//! manifest.json                                 experiment manifest
//! problems/<problem>.json                       anchor estimation cache
//! runs/<problem>/<surrogate>/<repeat>/
//!     archive.csv                               fe,x1..xD,f1,f2
//!     snapshot_<fe>.csv                         x1..xD,f1_true,f2_true,f1_surr,f2_surr
//!     hv.csv                                    fe,hv
//!     manifest.json                             unit manifest, written last
//! static/<problem>/snapshot_0.csv               static sample (empty surrogate cells)
//! features.csv                                  per-repeat feature rows
//! features_median.csv                           medians over repeats
//! stats.csv                                     test grids
//! models.csv, importances.csv                   prediction reports
//! ```
//!
//! All CSVs are comma-separated with a header row; missing values are empty
//! cells; floats are rendered as %.17g so files are byte-stable and parse
//! back bit-exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::fmt::{g17, g17_opt, parse_opt};
use crate::features::FEATURE_NAMES;
use crate::problems::ProblemManifest;
use crate::saea::{RunLog, SampleSnapshot, SnapshotRow};
use crate::surrogates::SurrogateKind;

pub const STATIC_LABEL: &str = "static";
pub const KIND_TRUE: &str = "true";
pub const KIND_SURROGATE: &str = "surrogate";

#[derive(Debug, Clone)]
pub struct ResultStore {
    root: PathBuf,
}

/// Completion marker and provenance for one optimisation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitManifest {
    pub problem: String,
    pub surrogate: String,
    pub repeat: u32,
    pub seed: u64,
    pub true_evals_optimisation: usize,
    pub true_evals_instrumentation: usize,
    pub final_hypervolume: f64,
    pub snapshot_fes: Vec<usize>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StaticManifest {
    pub problem: String,
    pub seed: u64,
    pub size: usize,
}

/// One features.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub problem: String,
    /// surrogate id, or "static"
    pub surrogate: String,
    pub repeat: u32,
    pub checkpoint: usize,
    /// "true" or "surrogate"
    pub fitness: String,
    pub values: [Option<f64>; 28],
}

/// One stats.csv row; missing cells stay empty.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub feature: String,
    pub surrogate: String,
    pub checkpoint: usize,
    pub test: String,
    pub statistic: Option<f64>,
    pub p: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub mode: String,
    pub surrogate: String,
    /// checkpoint number or "static"
    pub sampling: String,
    /// selected features as "provenance:name", semicolon-joined
    pub selected: String,
    pub mean: f64,
    pub median: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRow {
    pub mode: String,
    pub surrogate: String,
    pub sampling: String,
    pub feature: String,
    pub provenance: String,
    pub importance: f64,
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn split_line(line: &str) -> Vec<&str> {
    line.split(',').collect()
}

impl ResultStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    // ---- problems ----------------------------------------------------

    pub fn problem_manifest_path(&self, problem: &str) -> PathBuf {
        self.root.join("problems").join(format!("{problem}.json"))
    }

    pub fn write_problem_manifest(&self, manifest: &ProblemManifest) -> Result<()> {
        let path = self.problem_manifest_path(&manifest.problem_id);
        write_atomic(&path, serde_json::to_string_pretty(manifest)?.as_bytes())
    }

    pub fn read_problem_manifest(&self, problem: &str) -> Result<ProblemManifest> {
        let text = fs::read_to_string(self.problem_manifest_path(problem))?;
        Ok(serde_json::from_str(&text)?)
    }

    // ---- run units ----------------------------------------------------

    pub fn run_dir(&self, problem: &str, surrogate: SurrogateKind, repeat: u32) -> PathBuf {
        self.root.join("runs").join(problem).join(surrogate.id()).join(repeat.to_string())
    }

    pub fn static_dir(&self, problem: &str) -> PathBuf {
        self.root.join(STATIC_LABEL).join(problem)
    }

    pub fn run_complete(&self, problem: &str, surrogate: SurrogateKind, repeat: u32) -> bool {
        self.run_dir(problem, surrogate, repeat).join("manifest.json").is_file()
    }

    pub fn static_complete(&self, problem: &str) -> bool {
        self.static_dir(problem).join("manifest.json").is_file()
    }

    fn snapshot_csv(rows: &[SnapshotRow], dim: usize) -> String {
        let mut out = String::new();
        for q in 1..=dim {
            out.push_str(&format!("x{q},"));
        }
        out.push_str("f1_true,f2_true,f1_surr,f2_surr\n");
        for row in rows {
            for v in &row.x {
                out.push_str(&g17(*v));
                out.push(',');
            }
            out.push_str(&g17(row.f_true[0]));
            out.push(',');
            out.push_str(&g17(row.f_true[1]));
            out.push(',');
            out.push_str(&g17_opt(row.f_surrogate.map(|f| f[0])));
            out.push(',');
            out.push_str(&g17_opt(row.f_surrogate.map(|f| f[1])));
            out.push('\n');
        }
        out
    }

    fn parse_snapshot_csv(text: &str, dim: usize) -> Result<Vec<SnapshotRow>> {
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let cells = split_line(line);
            if cells.len() != dim + 4 {
                return Err(Error::Store(format!("snapshot row has {} cells", cells.len())));
            }
            let x: Vec<f64> = cells[..dim]
                .iter()
                .map(|c| c.parse().map_err(|_| Error::Store(format!("bad float `{c}`"))))
                .collect::<Result<_>>()?;
            let f_true = [
                cells[dim].parse().map_err(|_| Error::Store("bad f1_true".into()))?,
                cells[dim + 1].parse().map_err(|_| Error::Store("bad f2_true".into()))?,
            ];
            let s1 = parse_opt(cells[dim + 2]);
            let s2 = parse_opt(cells[dim + 3]);
            let f_surrogate = match (s1, s2) {
                (Some(a), Some(b)) => Some([a, b]),
                (None, None) => None,
                _ => return Err(Error::Store("half-missing surrogate fitness".into())),
            };
            rows.push(SnapshotRow { x, f_true, f_surrogate });
        }
        Ok(rows)
    }

    /// Persist a run: trajectory, snapshots, hypervolume trace, and the
    /// unit manifest last so its presence marks completion.
    pub fn write_run(&self, log: &RunLog) -> Result<()> {
        let dir = self.run_dir(&log.problem_id, log.surrogate, log.repeat);
        fs::create_dir_all(&dir)?;
        let dim = log.trajectory.first().map_or(0, |p| p.x.len());

        let mut archive = String::from("fe");
        for q in 1..=dim {
            archive.push_str(&format!(",x{q}"));
        }
        archive.push_str(",f1,f2\n");
        for point in &log.trajectory {
            archive.push_str(&point.fe.to_string());
            for v in &point.x {
                archive.push(',');
                archive.push_str(&g17(*v));
            }
            archive.push(',');
            archive.push_str(&g17(point.f[0]));
            archive.push(',');
            archive.push_str(&g17(point.f[1]));
            archive.push('\n');
        }
        write_atomic(&dir.join("archive.csv"), archive.as_bytes())?;

        let mut hv = String::from("fe,hv\n");
        for (fe, value) in &log.hypervolumes {
            hv.push_str(&format!("{fe},{}\n", g17(*value)));
        }
        write_atomic(&dir.join("hv.csv"), hv.as_bytes())?;

        for snapshot in &log.snapshots {
            let text = Self::snapshot_csv(&snapshot.rows, dim);
            write_atomic(&dir.join(format!("snapshot_{}.csv", snapshot.checkpoint_fe)), text.as_bytes())?;
        }

        let manifest = UnitManifest {
            problem: log.problem_id.clone(),
            surrogate: log.surrogate.id().to_string(),
            repeat: log.repeat,
            seed: log.seed,
            true_evals_optimisation: log.true_evals_optimisation,
            true_evals_instrumentation: log.true_evals_instrumentation,
            final_hypervolume: log.final_hypervolume(),
            snapshot_fes: log.snapshots.iter().map(|s| s.checkpoint_fe).collect(),
            wall_time_s: log.wall_time.as_secs_f64(),
        };
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
    }

    pub fn read_unit_manifest(
        &self,
        problem: &str,
        surrogate: SurrogateKind,
        repeat: u32,
    ) -> Result<UnitManifest> {
        let path = self.run_dir(problem, surrogate, repeat).join("manifest.json");
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn read_run_snapshots(
        &self,
        problem: &str,
        surrogate: SurrogateKind,
        repeat: u32,
        dim: usize,
    ) -> Result<Vec<SampleSnapshot>> {
        let manifest = self.read_unit_manifest(problem, surrogate, repeat)?;
        let dir = self.run_dir(problem, surrogate, repeat);
        manifest
            .snapshot_fes
            .iter()
            .map(|&fe| {
                let text = fs::read_to_string(dir.join(format!("snapshot_{fe}.csv")))?;
                Ok(SampleSnapshot {
                    checkpoint_fe: fe,
                    rows: Self::parse_snapshot_csv(&text, dim)?,
                    surrogate: Some(surrogate),
                    problem_id: problem.to_string(),
                    repeat,
                })
            })
            .collect()
    }

    pub fn read_hv_series(
        &self,
        problem: &str,
        surrogate: SurrogateKind,
        repeat: u32,
    ) -> Result<Vec<(usize, f64)>> {
        let text = fs::read_to_string(self.run_dir(problem, surrogate, repeat).join("hv.csv"))?;
        text.lines()
            .skip(1)
            .map(|line| {
                let cells = split_line(line);
                if cells.len() != 2 {
                    return Err(Error::Store("hv.csv row must have 2 cells".into()));
                }
                let fe = cells[0].parse().map_err(|_| Error::Store("bad fe".into()))?;
                let hv = cells[1].parse().map_err(|_| Error::Store("bad hv".into()))?;
                Ok((fe, hv))
            })
            .collect()
    }

    pub fn write_static(&self, snapshot: &SampleSnapshot, seed: u64) -> Result<()> {
        let dir = self.static_dir(&snapshot.problem_id);
        fs::create_dir_all(&dir)?;
        let dim = snapshot.rows.first().map_or(0, |r| r.x.len());
        let text = Self::snapshot_csv(&snapshot.rows, dim);
        write_atomic(&dir.join("snapshot_0.csv"), text.as_bytes())?;
        let manifest = StaticManifest {
            problem: snapshot.problem_id.clone(),
            seed,
            size: snapshot.rows.len(),
        };
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
    }

    pub fn read_static_snapshot(&self, problem: &str, dim: usize) -> Result<SampleSnapshot> {
        let dir = self.static_dir(problem);
        let text = fs::read_to_string(dir.join("snapshot_0.csv"))?;
        Ok(SampleSnapshot {
            checkpoint_fe: 0,
            rows: Self::parse_snapshot_csv(&text, dim)?,
            surrogate: None,
            problem_id: problem.to_string(),
            repeat: 0,
        })
    }

    // ---- aggregate CSVs -------------------------------------------------

    fn feature_header(with_repeat: bool) -> String {
        let mut head = String::from("problem,surrogate,");
        if with_repeat {
            head.push_str("repeat,");
        }
        head.push_str("checkpoint,fitness");
        for name in FEATURE_NAMES {
            head.push(',');
            head.push_str(name);
        }
        head.push('\n');
        head
    }

    pub fn write_features_csv(&self, path_name: &str, rows: &[FeatureRow], with_repeat: bool) -> Result<()> {
        let file = fs::File::create(self.root.join(path_name))?;
        let mut w = BufWriter::new(file);
        w.write_all(Self::feature_header(with_repeat).as_bytes())?;
        for row in rows {
            let mut line = format!("{},{}", row.problem, row.surrogate);
            if with_repeat {
                line.push_str(&format!(",{}", row.repeat));
            }
            line.push_str(&format!(",{},{}", row.checkpoint, row.fitness));
            for v in row.values {
                line.push(',');
                line.push_str(&g17_opt(v));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_features_csv(&self, path_name: &str, with_repeat: bool) -> Result<Vec<FeatureRow>> {
        let text = fs::read_to_string(self.root.join(path_name))?;
        let fixed = if with_repeat { 5 } else { 4 };
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let cells = split_line(line);
            if cells.len() != fixed + 28 {
                return Err(Error::Store(format!("feature row has {} cells", cells.len())));
            }
            let mut values = [None; 28];
            for (i, v) in values.iter_mut().enumerate() {
                *v = parse_opt(cells[fixed + i]);
            }
            let mut col = 0;
            let problem = cells[col].to_string();
            col += 1;
            let surrogate = cells[col].to_string();
            col += 1;
            let repeat = if with_repeat {
                let r = cells[col].parse().map_err(|_| Error::Store("bad repeat".into()))?;
                col += 1;
                r
            } else {
                0
            };
            let checkpoint = cells[col].parse().map_err(|_| Error::Store("bad checkpoint".into()))?;
            col += 1;
            let fitness = cells[col].to_string();
            rows.push(FeatureRow { problem, surrogate, repeat, checkpoint, fitness, values });
        }
        Ok(rows)
    }

    pub fn write_stats_csv(&self, rows: &[StatRow]) -> Result<()> {
        let file = fs::File::create(self.root.join("stats.csv"))?;
        let mut w = BufWriter::new(file);
        w.write_all(b"feature,surrogate,checkpoint,test,statistic,p,significant\n")?;
        for row in rows {
            let significant = match row.significant {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.feature,
                row.surrogate,
                row.checkpoint,
                row.test,
                g17_opt(row.statistic),
                g17_opt(row.p),
                significant
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_stats_csv(&self) -> Result<Vec<StatRow>> {
        let text = fs::read_to_string(self.root.join("stats.csv"))?;
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let cells = split_line(line);
            if cells.len() != 7 {
                return Err(Error::Store(format!("stats row has {} cells", cells.len())));
            }
            rows.push(StatRow {
                feature: cells[0].to_string(),
                surrogate: cells[1].to_string(),
                checkpoint: cells[2].parse().map_err(|_| Error::Store("bad checkpoint".into()))?,
                test: cells[3].to_string(),
                statistic: parse_opt(cells[4]),
                p: parse_opt(cells[5]),
                significant: match cells[6] {
                    "1" => Some(true),
                    "0" => Some(false),
                    "" => None,
                    other => return Err(Error::Store(format!("bad significance `{other}`"))),
                },
            });
        }
        Ok(rows)
    }

    pub fn write_models_csv(&self, rows: &[ModelRow]) -> Result<()> {
        let file = fs::File::create(self.root.join("models.csv"))?;
        let mut w = BufWriter::new(file);
        w.write_all(b"mode,surrogate,sampling,selected,mean,median,se\n")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.mode,
                row.surrogate,
                row.sampling,
                row.selected,
                g17(row.mean),
                g17(row.median),
                g17(row.std_err)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_importances_csv(&self, rows: &[ImportanceRow]) -> Result<()> {
        let file = fs::File::create(self.root.join("importances.csv"))?;
        let mut w = BufWriter::new(file);
        w.write_all(b"mode,surrogate,sampling,feature,provenance,importance\n")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.mode, row.surrogate, row.sampling, row.feature, row.provenance,
                g17(row.importance)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_experiment_manifest(&self, manifest: &serde_json::Value) -> Result<()> {
        write_atomic(&self.root.join("manifest.json"), serde_json::to_string_pretty(manifest)?.as_bytes())
    }

    pub fn read_experiment_manifest(&self) -> Result<serde_json::Value> {
        let text = fs::read_to_string(self.root.join("manifest.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}
