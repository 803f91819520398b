//! Orchestration behind the command line: each `cmd_*` reads an
//! [`ExperimentConfig`], runs the relevant modules and writes its artifacts
//! into the output directory.
//!
//! Artifacts (all deterministic, no timestamps):
//!
//! | command   | files |
//! |-----------|-------|
//! | enumerate | `length_spectrum.csv`, `length_spectrum.meta.json` |
//! | spectrum  | `spectrum.csv`, `spectrum.json` |
//! | geomside  | `geomside_<i>.csv` per test function, `geomside.json` |
//! | weyl      | `weyl.csv`, `weyl.json` |
//! | verify    | `trace_report.json`, `trace_report.txt` |

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use faer::c64;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, RepresentationSource};
pub use report::{relative_residual, Provenance, TraceEntry, TraceReport};

use crate::error::{Error, Result};
use crate::fuchsian::cache::{read_cache, write_cache, CacheMeta, CachePaths};
use crate::fuchsian::group::preset;
use crate::fuchsian::{enumerate_with, ConjugacyClass, EnumerationOptions, SurfaceGroup};
use crate::geomside::{geometric_side, GeometricSideReport};
use crate::reps::Representation;
use crate::spectral::side::{middle_third, spectral_side, spectral_side_lenient};
use crate::spectral::{assemble, build_octagon_mesh, solve_spectrum_with, SolverOptions, SpectrumResult, WeylPoint};
use crate::TOOL_VERSION;

/// Where artifacts go and how the length-spectrum cache is treated.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Recompute and overwrite the cache instead of reading it.
    pub refresh: bool,
    /// Never enumerate; a missing cache is an error.
    pub no_compute: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> RunOptions {
        RunOptions { out_dir: out_dir.into(), refresh: false, no_compute: false }
    }

    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct EnumerateOutcome {
    pub meta: CacheMeta,
    pub classes: Vec<ConjugacyClass>,
    /// `false` when the cache was reused.
    pub computed: bool,
}

/// Length spectrum up to `l_max`, through the cache in the output
/// directory. A cache that fails its checks is an error unless `refresh`.
pub fn cmd_enumerate(cfg: &ExperimentConfig, run: &RunOptions) -> Result<EnumerateOutcome> {
    cfg.validate()?;
    let g = preset(&cfg.preset)?;
    let paths = CachePaths::in_dir(&run.out_dir);
    if paths.exists() && !run.refresh {
        let (meta, classes) = read_cache(&paths, &g, cfg.l_max)?;
        return Ok(EnumerateOutcome { meta, classes, computed: false });
    }
    if run.no_compute {
        return Err(Error::IncompleteLengthSpectrum { have: 0.0, need: cfg.l_max });
    }
    run.ensure_dir()?;
    let spec = enumerate_with(&g, EnumerationOptions { l_max: cfg.l_max, element_budget: cfg.element_budget })?;
    let meta = write_cache(&paths, &cfg.preset, cfg.l_max, &spec.classes)?;
    Ok(EnumerateOutcome { meta, classes: spec.classes, computed: true })
}

fn solve(cfg: &ExperimentConfig, g: &SurfaceGroup, r: &Representation) -> Result<SpectrumResult> {
    let mesh = build_octagon_mesh(g, cfg.mesh_level)?;
    let sys = assemble(g, &mesh, r)?;
    let opts = SolverOptions { count: cfg.eigen_count, shift: cfg.shift, dense_limit: cfg.dense_limit, enforce_trust_region: true };
    solve_spectrum_with(&sys, &opts)
}

/// Computes the spectrum and writes `spectrum.csv` / `spectrum.json`.
pub fn cmd_spectrum(cfg: &ExperimentConfig, run: &RunOptions) -> Result<SpectrumResult> {
    cfg.validate()?;
    let g = preset(&cfg.preset)?;
    let r = cfg.build_representation()?;
    let spec = solve(cfg, &g, &r)?;
    run.ensure_dir()?;
    fs::write(run.path("spectrum.csv"), spec.to_csv())?;
    write_json(&run.path("spectrum.json"), &spec)?;
    Ok(spec)
}

/// Geometric side for every configured test function.
pub fn cmd_geomside(cfg: &ExperimentConfig, run: &RunOptions) -> Result<Vec<GeometricSideReport>> {
    let classes = cmd_enumerate(cfg, run)?.classes;
    let g = preset(&cfg.preset)?;
    let r = cfg.build_representation()?;
    let reports = geometric_reports(cfg, &g, &r, &classes)?;
    run.ensure_dir()?;
    let mut summary = Vec::with_capacity(reports.len());
    for (i, (rep, f)) in reports.iter().zip(&cfg.test_functions).enumerate() {
        fs::write(run.path(&format!("geomside_{i}.csv")), rep.to_csv())?;
        summary.push(serde_json::json!({ "test_function": f, "summary": rep.summary_json() }));
    }
    write_json(&run.path("geomside.json"), &summary)?;
    Ok(reports)
}

fn geometric_reports(
    cfg: &ExperimentConfig,
    g: &SurfaceGroup,
    r: &Representation,
    classes: &[ConjugacyClass],
) -> Result<Vec<GeometricSideReport>> {
    cfg.test_functions.iter().map(|f| geometric_side(g, classes, cfg.l_max, r, &f.build()?)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub points: Vec<WeylPoint>,
    pub rank: usize,
    pub covolume: f64,
    pub lambda_max: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Counting function over the middle third of the computed range.
pub fn cmd_weyl(cfg: &ExperimentConfig, run: &RunOptions) -> Result<WeylReport> {
    cfg.validate()?;
    let g = preset(&cfg.preset)?;
    let r = cfg.build_representation()?;
    let spec = solve(cfg, &g, &r)?;
    let radii = middle_third(&spec, cfg.weyl_points);
    let points = crate::spectral::weyl_counting(&spec, &radii, r.dim, g.covolume);
    let ratios = points.iter().map(WeylPoint::ratio);
    let report = WeylReport {
        rank: r.dim,
        covolume: g.covolume,
        lambda_max: spec.max_modulus(),
        min_ratio: ratios.clone().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.fold(0.0, f64::max),
        points,
    };
    run.ensure_dir()?;
    let mut csv = String::from("r,count,prediction,ratio\n");
    for p in &report.points {
        let _ = writeln!(csv, "{:.16e},{},{:.16e},{:.16e}", p.r, p.count, p.prediction, p.ratio());
    }
    fs::write(run.path("weyl.csv"), csv)?;
    write_json(&run.path("weyl.json"), &report)?;
    Ok(report)
}

/// Both sides for every test function; `report.passed` iff every relative
/// residual is within the configured threshold.
pub fn cmd_verify(cfg: &ExperimentConfig, run: &RunOptions) -> Result<TraceReport> {
    cfg.validate()?;
    let classes = cmd_enumerate(cfg, run)?.classes;
    let g = preset(&cfg.preset)?;
    let r = cfg.build_representation()?;
    let geo = geometric_reports(cfg, &g, &r, &classes)?;
    let spec = solve(cfg, &g, &r)?;
    let mut advisories = cfg.advisories();
    let mut entries = Vec::with_capacity(cfg.test_functions.len());
    for (fs_, gr) in cfg.test_functions.iter().zip(&geo) {
        let f = fs_.build()?;
        let side = if cfg.strict_truncation { spectral_side(&spec, &f, 0.5)? } else { spectral_side_lenient(&spec, &f, 0.5)? };
        if !side.truncation_ok {
            advisories.push(format!(
                "T = {}: spectral sum truncated (tail {:.2e} at |lambda| = {:.1})",
                fs_.t,
                side.truncation_tail,
                c64::new(side.lambda_max[0], side.lambda_max[1]).norm()
            ));
        }
        let mut e = TraceEntry::new(fs_.clone(), side.value(), gr.total(), gr.identity_term, gr.class_contributions.len());
        e.truncation_ok = side.truncation_ok;
        e.truncation_tail = side.truncation_tail;
        e.branch_flip_difference = side.branch_flip_difference;
        e.geometric_exact = gr.exactness_flag;
        entries.push(e);
    }
    let spectrum_real = spec.raw_values().iter().all(|v| v.im.abs() <= 1e-8 * (1.0 + v.norm()));
    let top = spec
        .raw_values()
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    let passed = entries.iter().all(|e| e.rel_residual <= cfg.residual_threshold);
    let report = TraceReport {
        provenance: Provenance {
            tool_version: TOOL_VERSION.to_string(),
            preset: cfg.preset.clone(),
            rep_dim: r.dim,
            rep_unitary: r.is_unitary(1e-12),
            l_max: cfg.l_max,
            class_count: classes.len(),
            mesh_level: cfg.mesh_level,
            mesh_h: spec.mesh_h,
            n_free: spec.n_free,
            eigen_count: spec.count(),
            eigen_method: spec.method.clone(),
            max_eigen_residual: spec.max_residual,
            lambda_max: [top.re, top.im],
        },
        entries,
        spectrum_real,
        max_abs_imag: spec.max_abs_imag(),
        threshold: cfg.residual_threshold,
        passed,
        advisories,
    };
    run.ensure_dir()?;
    fs::write(run.path("trace_report.json"), report.to_json())?;
    fs::write(run.path("trace_report.txt"), report.table())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TestFunctionSpec;
    use crate::reps::RepresentationSpec;

    fn small(dir: &Path) -> (ExperimentConfig, RunOptions) {
        let mut cfg = ExperimentConfig::example();
        cfg.l_max = 4.5;
        cfg.mesh_level = 2;
        cfg.eigen_count = 15;
        cfg.test_functions = vec![TestFunctionSpec::mollifier(2.0, 8), TestFunctionSpec::mollifier(4.0, 3)];
        (cfg, RunOptions::new(dir))
    }

    #[test]
    fn enumerate_reuses_and_guards_cache() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, run) = small(dir.path());
        let first = cmd_enumerate(&cfg, &run).unwrap();
        assert!(first.computed);
        let bytes = fs::read(run.path("length_spectrum.csv")).unwrap();
        let second = cmd_enumerate(&cfg, &run).unwrap();
        assert!(!second.computed);
        assert_eq!(fs::read(run.path("length_spectrum.csv")).unwrap(), bytes);
        assert_eq!(second.classes.len(), first.classes.len());

        // different cutoff against the same cache is stale
        let mut other = cfg.clone();
        other.l_max = 5.0;
        assert!(matches!(cmd_enumerate(&other, &run), Err(Error::StaleCache(_))));

        // corrupted CSV: hard error, then --refresh repairs it
        let mut bad = bytes.clone();
        let last = bad.len() - 3;
        bad[last] = if bad[last] == b'1' { b'2' } else { b'1' };
        fs::write(run.path("length_spectrum.csv"), &bad).unwrap();
        assert!(matches!(cmd_enumerate(&cfg, &run), Err(Error::StaleCache(_))));
        let mut refresh = run.clone();
        refresh.refresh = true;
        assert!(cmd_enumerate(&cfg, &refresh).unwrap().computed);
        assert_eq!(fs::read(run.path("length_spectrum.csv")).unwrap(), bytes);
    }

    #[test]
    fn short_cutoff_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let (mut cfg, run) = small(dir.path());
        cfg.l_max = 1.0;
        let out = cmd_enumerate(&cfg, &run).unwrap();
        assert!(out.classes.is_empty());
        let text = fs::read_to_string(run.path("length_spectrum.csv")).unwrap();
        assert_eq!(text, format!("{}\n", crate::fuchsian::cache::CSV_HEADER));
    }

    #[test]
    fn geomside_without_cache_and_no_compute() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, mut run) = small(dir.path());
        run.no_compute = true;
        assert!(matches!(cmd_geomside(&cfg, &run), Err(Error::IncompleteLengthSpectrum { .. })));
        run.no_compute = false;
        let reps = cmd_geomside(&cfg, &run).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(run.path("geomside_1.csv").exists());
    }

    #[test]
    fn verify_is_deterministic_and_rank_linear() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, run) = small(dir.path());
        let a = cmd_verify(&cfg, &run).unwrap();
        let json = fs::read(run.path("trace_report.json")).unwrap();
        let b = cmd_verify(&cfg, &run).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read(run.path("trace_report.json")).unwrap(), json);
        assert!(a.spectrum_real);

        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.representation = RepresentationSource::Inline(RepresentationSpec::trivial(2));
        cfg2.eigen_count = 30;
        let two = cmd_verify(&cfg2, &RunOptions::new(dir2.path())).unwrap();
        for (x, y) in a.entries.iter().zip(&two.entries) {
            assert!((x.rel_residual - y.rel_residual).abs() <= 1e-9 * (1.0 + x.rel_residual));
            assert!((2.0 * x.geometric[0] - y.geometric[0]).abs() <= 1e-12 * y.geometric[0].abs());
        }
    }
}
