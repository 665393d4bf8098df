//! Executes configs: builds the operator, cutoff and propagator, runs the named
//! experiment, writes CSV/JSON/plot files and returns a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Axis, Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiments::{self as exp, ConeSetup, Cutoff, LeakageCurve};
use crate::fit::{fit_decay, linear_fit, DecayFit, Verdict};
use crate::funcalc::{compute_k, exact_k, extrapolate_k, EnergyFilter};
use crate::grid::{gaussian_packet, GridSpec, WaveFunction};
use crate::hamiltonian::{kato_diagnostic, HamiltonianOp};
use crate::io::{fmt_f64, write_csv};
use crate::observables::{self as obs, ConeFrame};
use crate::propagator::Propagator;
use crate::smooth::{FFunction, SpectralCutoff};

/// Grids at most this large get `k` from dense matrices; larger ones use power iteration.
const DENSE_K_LIMIT: usize = 1024;

/// Everything an experiment needs, built once per config.
pub struct Lab {
    pub config: ExperimentConfig,
    pub grid: GridSpec,
    pub prop: Propagator,
    pub cutoff: SpectralCutoff,
    pub filter: EnergyFilter,
    pub k: f64,
    pub warnings: Vec<String>,
}

impl Lab {
    /// Builds the lab and checks the spectral invariants: `p_max >= 4k` is
    /// required, `c <= k` only warns (sub-`k` cones are the negative control).
    pub fn new(config: &ExperimentConfig) -> Result<Lab> {
        config.validate()?;
        let grid = config.grid.spec()?;
        let mut op = HamiltonianOp::new(grid, config.hamiltonian.potential)?;
        if let Some(w) = config.hamiltonian.time_dep {
            op = op.with_time_dep(w);
        }
        let cutoff = config.cutoff.cutoff()?;
        let filter = EnergyFilter::new(&op, |l| cutoff.eval(l))?;
        let stat = op.stationary();
        let k = if stat.is_free() || grid.len() <= DENSE_K_LIMIT {
            exact_k(&cutoff, &stat)?
        } else {
            compute_k(&cutoff, &stat, 2000, config.seed)?.k
        };
        let p_max = grid.momentum_cutoff();
        if p_max < 4.0 * k {
            return Err(Error::Config(format!(
                "p_max >= 4k required: grid momentum cutoff {p_max:.4} against k = {k:.4}; refine the grid"
            )));
        }
        let mut warnings = vec![];
        if config.frame.c <= k {
            warnings.push(format!(
                "c = {} <= k = {k:.6}: running as a negative control",
                config.frame.c
            ));
        }
        let prop = Propagator::new(op, config.propagator)?;
        Ok(Lab {
            config: config.clone(),
            grid,
            prop,
            cutoff,
            filter,
            k,
            warnings,
        })
    }

    pub fn setup(&self) -> ConeSetup<'_> {
        ConeSetup {
            prop: &self.prop,
            filter: &self.filter,
            k: self.k,
            window: (self.config.cutoff.lower, self.config.cutoff.upper),
            seed: self.config.seed,
        }
    }

    pub fn packet(&self) -> Result<WaveFunction> {
        let p = &self.config.packet;
        gaussian_packet(&self.grid, p.center, p.momentum, p.sigma)
    }

    /// `normalize(g(H) χ_b φ)` for the configured packet.
    pub fn prepared(&self) -> Result<WaveFunction> {
        exp::prepared_state(&self.filter, &self.packet()?, self.config.frame.b)
    }

    /// Frame with `v` defaulting to the midpoint of `k` and `c`.
    pub fn frame(&self, t_final: f64) -> ConeFrame {
        let f = &self.config.frame;
        ConeFrame {
            v: f.v.unwrap_or(0.5 * (self.k + f.c)),
            c: f.c,
            a: f.a,
            b: f.b,
            s: t_final.max(f.s_min),
            k_ref: self.k,
        }
    }
}

/// Result of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub label: String,
    pub experiment: String,
    pub config_hash: String,
    pub verdict: Verdict,
    pub k: f64,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub wall_clock_seconds: f64,
    pub verdict: Verdict,
    pub experiments: Vec<ExperimentRecord>,
    /// Every file written, relative to the manifest's directory.
    pub files: Vec<String>,
}

impl RunManifest {
    fn assemble(config_hash: String, experiments: Vec<ExperimentRecord>, started: Instant) -> Self {
        let verdict = experiments
            .iter()
            .fold(Verdict::Pass, |v, e| v.worst(e.verdict));
        let files = experiments
            .iter()
            .flat_map(|e| e.files.iter().cloned())
            .collect();
        RunManifest {
            config_hash,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            verdict,
            experiments,
            files,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Invalid(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Human-readable summary.
    pub fn report(&self) -> String {
        let mut out = format!(
            "config {}  version {}  {:.1} s  overall: {}\n",
            &self.config_hash[..12.min(self.config_hash.len())],
            self.artifact_version,
            self.wall_clock_seconds,
            self.verdict
        );
        for e in &self.experiments {
            out += &format!(
                "  [{}] {} ({}), k = {:.6}\n",
                e.verdict, e.label, e.experiment, e.k
            );
            if let Some(obj) = e.summary.as_object() {
                for (key, v) in obj {
                    if v.is_number() || v.is_boolean() || v.is_string() {
                        out += &format!("      {key}: {v}\n");
                    }
                }
            }
            for w in &e.warnings {
                out += &format!("      warning: {w}\n");
            }
        }
        out += &format!("  files: {}\n", self.files.len());
        out
    }
}

/// Runs a config, writing outputs under `out_dir` and `manifest.json` there.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let record = run_one(config, out_dir, config.experiment.name())?;
    let manifest = RunManifest::assemble(config.hash(), vec![record], started);
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// One sub-run per axis value, each in its own directory, plus a merged table.
pub fn sweep(
    config: &ExperimentConfig,
    axis: Axis,
    values: &[f64],
    out_dir: &Path,
) -> Result<RunManifest> {
    if values.is_empty() {
        return Err(Error::Config(format!("empty sweep axis {axis}")));
    }
    let started = Instant::now();
    let mut records = vec![];
    let mut rows = vec![];
    for (i, &v) in values.iter().enumerate() {
        let cfg = config.with_axis(axis, v)?;
        let label = format!("{axis}_{i:03}");
        let mut rec = run_one(&cfg, &out_dir.join(&label), &label)?;
        rec.files = rec.files.iter().map(|f| format!("{label}/{f}")).collect();
        rows.push(vec![v, rec.k, verdict_code(rec.verdict), headline(&rec)]);
        records.push(rec);
    }
    let table = "sweep.csv";
    write_csv(
        &out_dir.join(table),
        &[&axis.to_string(), "k", "verdict", "headline"],
        &rows,
    )?;
    let mut manifest = RunManifest::assemble(config.hash(), records, started);
    manifest.files.push(table.into());
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Pass => 0.0,
        Verdict::Flagged => 1.0,
        Verdict::Fail => 2.0,
    }
}

/// The single number each experiment is judged by.
fn headline(rec: &ExperimentRecord) -> f64 {
    rec.summary
        .get("headline")
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::NAN)
}

struct Outputs<'a> {
    dir: &'a Path,
    stem: String,
    files: Vec<String>,
}

impl Outputs<'_> {
    fn csv(&mut self, suffix: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let name = format!("{}{suffix}.csv", self.stem);
        write_csv(&self.dir.join(&name), header, rows)?;
        self.files.push(name);
        Ok(())
    }

    /// Whitespace-separated two-column file for plotting tools.
    fn plot(&mut self, suffix: &str, x: &[f64], y: &[f64]) -> Result<()> {
        let name = format!("{}{suffix}.dat", self.stem);
        let mut text = String::new();
        for (a, b) in x.iter().zip(y) {
            text += &format!("{} {}\n", fmt_f64(*a), fmt_f64(*b));
        }
        std::fs::write(self.dir.join(&name), text)?;
        self.files.push(name);
        Ok(())
    }

    fn curve(&mut self, suffix: &str, c: &LeakageCurve) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..c.times.len())
            .map(|i| {
                vec![
                    c.times[i],
                    c.values[i],
                    if c.flagged[i] { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        self.csv(suffix, &["t", "value", "flagged"], &rows)?;
        self.plot(suffix, &c.times, &c.values)
    }
}

fn fit_json(f: &Option<DecayFit>) -> serde_json::Value {
    serde_json::to_value(f).unwrap_or(serde_json::Value::Null)
}

fn decay_verdict(fit: &Option<DecayFit>, flagged: bool) -> Verdict {
    match fit {
        Some(f) if flagged => f.verdict.worst(Verdict::Flagged),
        Some(f) => f.verdict,
        None => Verdict::Fail,
    }
}

fn run_one(config: &ExperimentConfig, out_dir: &Path, label: &str) -> Result<ExperimentRecord> {
    std::fs::create_dir_all(out_dir)?;
    let lab = Lab::new(config)?;
    let mut out = Outputs {
        dir: out_dir,
        stem: config.experiment.name().to_string(),
        files: vec![],
    };
    let setup = lab.setup();
    let fr = &config.frame;
    let mut warnings = lab.warnings.clone();
    let (verdict, summary) = match &config.experiment {
        Experiment::Theorem21 {
            times,
            fit_window,
            target,
            tolerance,
            norm,
        } => {
            let curve = exp::operator_norm_curve(
                &setup,
                Cutoff::Static(&lab.filter),
                fr.c,
                fr.a,
                fr.b,
                &times.values(),
                *norm,
            )?;
            out.curve("", &curve)?;
            let fit = curve.fit(*fit_window, *target, *tolerance).ok();
            let mid = (fit_window.0 * fit_window.1).sqrt();
            let profile = curve.slope_profile(&[(fit_window.0, mid), (mid, fit_window.1)]);
            let summary = json!({
                "headline": fit.as_ref().map(|f| f.exponent),
                "fit": fit_json(&fit),
                "slope_profile": profile,
                "steepening": exp::steepening(&profile, 0.0),
                "any_flagged": curve.any_flagged(),
            });
            (decay_verdict(&fit, curve.any_flagged()), summary)
        }
        Experiment::Dichotomy {
            c_values,
            relative_to_k,
            times,
            fit_window,
            norm,
        } => {
            let cs: Vec<f64> = c_values
                .iter()
                .map(|&c| if *relative_to_k { c * lab.k } else { c })
                .collect();
            let rows = exp::dichotomy_scan(
                &setup,
                &lab.packet()?,
                &cs,
                fr.a,
                fr.b,
                &times.values(),
                *fit_window,
                *norm,
            )?;
            let table: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.c,
                        r.terminal_state_leakage,
                        r.norm_fit.as_ref().map_or(f64::NAN, |f| f.exponent),
                    ]
                })
                .collect();
            out.csv("", &["c", "terminal_state_leakage", "norm_slope"], &table)?;
            for (i, r) in rows.iter().enumerate() {
                out.curve(&format!("_state_{i}"), &r.state_curve)?;
                out.curve(&format!("_norm_{i}"), &r.norm_curve)?;
            }
            // nested regions: leakage cannot grow with c; cones faster than k decay
            let mut sorted: Vec<&exp::DichotomyRow> = rows.iter().collect();
            sorted.sort_by(|a, b| a.c.total_cmp(&b.c));
            let monotone = sorted
                .windows(2)
                .all(|w| w[1].terminal_state_leakage <= w[0].terminal_state_leakage + 1e-12);
            let decaying = rows
                .iter()
                .filter(|r| r.c > lab.k)
                .all(|r| r.norm_fit.as_ref().is_some_and(|f| f.exponent < 0.0));
            let summary = json!({
                "headline": rows.last().map(|r| r.terminal_state_leakage),
                "rows": table,
                "monotone_in_c": monotone,
                "super_k_decay": decaying,
            });
            (Verdict::from_bool(monotone && decaying), summary)
        }
        Experiment::Weighted {
            alpha,
            eps,
            times,
            fit_window,
            tolerance,
            norm,
        } => {
            let curve = exp::weighted_estimate_experiment(
                &setup,
                *alpha,
                *eps,
                fr.c,
                &times.values(),
                *norm,
            )?;
            out.curve("", &curve)?;
            let fit = curve.fit(*fit_window, -alpha, *tolerance).ok();
            let summary =
                json!({ "headline": fit.as_ref().map(|f| f.exponent), "fit": fit_json(&fit) });
            (decay_verdict(&fit, curve.any_flagged()), summary)
        }
        Experiment::InfoBound {
            t,
            rho,
            ordering,
            target,
            tolerance,
            norm,
        } => {
            let rhos = rho.values();
            let (r, v) =
                exp::info_bound_experiment(&setup, fr.a, fr.b, fr.c, *t, &rhos, *ordering, *norm)?;
            let rows: Vec<Vec<f64>> = r.iter().zip(&v).map(|(a, b)| vec![*a, *b]).collect();
            out.csv("", &["rho", "value"], &rows)?;
            out.plot("", &r, &v)?;
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.iter().cloned().fold(0.0, f64::max);
            let fit = fit_decay(&r, &v, (lo, hi), *target, *tolerance).ok();
            let summary = json!({ "headline": fit.as_ref().map(|f| f.exponent), "fit": fit_json(&fit), "t": t });
            (decay_verdict(&fit, false), summary)
        }
        Experiment::BasicEquality {
            t_final,
            max_residual,
        } => {
            let frame = lab.frame(*t_final);
            let f = FFunction::new(frame.span())?;
            let psi = lab.packet()?;
            let ledger = obs::basic_equality_run(&psi, &lab.prop, &f, &frame, *t_final)?;
            let name = format!("{}.csv", out.stem);
            ledger.write_csv(std::fs::File::create(out_dir.join(&name))?)?;
            out.files.push(name);
            out.plot("", &ledger.times, &ledger.residual)?;
            let half = Propagator::new(
                lab.prop.op.clone(),
                crate::propagator::PropagatorConfig {
                    dt: 0.5 * lab.prop.config.dt,
                    ..lab.prop.config
                },
            )?;
            let refined = obs::basic_equality_run(&psi, &half, &f, &frame, *t_final)?;
            let ratio = ledger.max_residual() / refined.max_residual();
            let summary = json!({
                "headline": ledger.max_residual(),
                "max_residual": ledger.max_residual(),
                "refined_max_residual": refined.max_residual(),
                "halving_ratio": ratio,
                "frame": frame,
            });
            (
                Verdict::from_bool(ledger.max_residual() <= *max_residual),
                summary,
            )
        }
        Experiment::PullThrough {
            times,
            t0,
            t_cap,
            tol,
            tolerance,
        } => {
            let mu = config
                .hamiltonian
                .time_dep
                .map(|w| w.mu)
                .unwrap_or(f64::INFINITY);
            let psi = lab.packet()?;
            let ts = times.values();
            let (lo, hi) = ts
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
            let gp = obs::asymptotic_cutoff_apply(&lab.filter, &lab.prop, &psi, *t0, *t_cap, *tol)?;
            warnings.extend(gp.warnings.iter().cloned());
            let (ct, cd): (Vec<f64>, Vec<f64>) = gp.cauchy.iter().cloned().unzip();
            out.csv(
                "_cauchy",
                &["T", "difference"],
                &ct.iter()
                    .zip(&cd)
                    .map(|(a, b)| vec![*a, *b])
                    .collect::<Vec<_>>(),
            )?;
            let usable: Vec<(f64, f64)> = gp
                .cauchy
                .iter()
                .filter(|c| c.1 > 1e-14 && c.0 >= lo * (1.0 - 1e-12) && c.0 <= hi * (1.0 + 1e-12))
                .map(|c| (c.0.ln(), c.1.ln()))
                .collect();
            let cauchy_slope = if usable.len() >= 2 {
                let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
                linear_fit(&x, &y).slope
            } else {
                f64::NAN
            };
            let gplus = gp.psi.clone().expect("state kept");
            let pt = obs::pull_through_residual(&lab.filter, &lab.prop, &psi, &gplus, &ts)?;
            out.csv(
                "",
                &["t", "residual"],
                &pt.times
                    .iter()
                    .zip(&pt.residual)
                    .map(|(a, b)| vec![*a, *b])
                    .collect::<Vec<_>>(),
            )?;
            out.plot("", &pt.times, &pt.residual)?;
            let slope = pt.fit.map_or(f64::NAN, |f| f.slope);
            let ok = (slope + mu).abs() <= *tolerance && (cauchy_slope + mu).abs() <= *tolerance;
            let summary = json!({
                "headline": slope,
                "residual_slope": slope,
                "cauchy_slope": cauchy_slope,
                "envelope": pt.envelope,
                "tail_estimate": gp.tail_estimate,
                "converged": gp.converged,
            });
            (Verdict::from_bool(ok), summary)
        }
        Experiment::Theorem32 {
            horizon,
            times,
            fit_window,
            target,
            tolerance,
            norm,
        } => {
            let curve = exp::td_theorem_experiment(
                &setup,
                *horizon,
                fr.c,
                fr.a,
                fr.b,
                &times.values(),
                *norm,
            )?;
            out.curve("", &curve)?;
            let fit = curve.fit(*fit_window, *target, *tolerance).ok();
            // how far g_T(H) is from its limit at the chosen horizon, on the prepared state
            let gp = obs::asymptotic_cutoff_apply(
                &lab.filter,
                &lab.prop,
                &lab.prepared()?,
                0.5 * horizon,
                *horizon,
                0.0,
            )?;
            let tail = gp.cauchy.last().map_or(f64::NAN, |c| c.1);
            let flagged = curve.any_flagged() || !(tail <= 1e-3);
            if !(tail <= 1e-3) {
                warnings.push(format!(
                    "g_T not settled at T={horizon}: last difference {tail:.3e}"
                ));
            }
            let summary = json!({
                "headline": fit.as_ref().map(|f| f.exponent),
                "fit": fit_json(&fit),
                "horizon_difference": tail,
            });
            (decay_verdict(&fit, flagged), summary)
        }
        Experiment::Density {
            windows,
            t0,
            t_cap,
            tol,
            final_max,
        } => {
            let filters: Vec<EnergyFilter> = windows
                .iter()
                .map(|&(lo, hi)| {
                    let g = SpectralCutoff::new(lo, hi, config.cutoff.width)?;
                    EnergyFilter::new(&lab.prop.op, |l| g.eval(l))
                })
                .collect::<Result<_>>()?;
            let psi = lab.packet()?;
            let series = obs::g_plus_density_check(&filters, &lab.prop, &psi, *t0, *t_cap, *tol)?;
            let idx: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
            out.csv(
                "",
                &["window", "distance"],
                &idx.iter()
                    .zip(&series)
                    .map(|(a, b)| vec![*a, *b])
                    .collect::<Vec<_>>(),
            )?;
            let decreasing = series.windows(2).all(|w| w[1] < w[0]);
            let last = *series.last().unwrap_or(&f64::NAN);
            let summary =
                json!({ "headline": last, "series": series, "strictly_decreasing": decreasing });
            (
                Verdict::from_bool(decreasing && last <= *final_max),
                summary,
            )
        }
        Experiment::TimeReversal { times } => {
            let r = exp::time_reversal_experiment(
                &setup,
                &lab.prepared()?,
                fr.c,
                fr.a,
                &times.values(),
            )?;
            out.curve("_forward", &r.forward)?;
            out.curve("_backward", &r.backward)?;
            out.curve("_conjugated", &r.conjugated)?;
            let summary = json!({ "headline": r.deviation, "deviation": r.deviation });
            (Verdict::from_bool(r.deviation <= 1e-8), summary)
        }
        Experiment::SpeedConstant {
            widths,
            expected,
            rel_tol,
        } => {
            let beta = lab.cutoff.beta();
            let stat = lab.prop.op.stationary();
            let ext = extrapolate_k(
                config.cutoff.lower,
                config.cutoff.upper,
                widths,
                beta,
                &stat,
                20000,
                config.seed,
            )?;
            out.csv(
                "",
                &["width", "k"],
                &ext.widths
                    .iter()
                    .zip(&ext.values)
                    .map(|(a, b)| vec![*a, *b])
                    .collect::<Vec<_>>(),
            )?;
            let kato = kato_diagnostic(&stat, 200, config.seed)?;
            let bound = (2.0 * (config.cutoff.upper + kato.b) / (1.0 - kato.a)).sqrt();
            let within_bound = lab.k <= bound;
            let matches = expected.is_none_or(|e| ((ext.extrapolated - e) / e).abs() <= *rel_tol);
            if ext.converged.iter().any(|c| !c) {
                warnings.push("power iteration hit its cap for some widths".into());
            }
            let summary = json!({
                "headline": ext.extrapolated,
                "extrapolated": ext.extrapolated,
                "values": ext.values,
                "kato_a": kato.a,
                "kato_b": kato.b,
                "kato_bound": bound,
                "within_kato_bound": within_bound,
            });
            (Verdict::from_bool(within_bound && matches), summary)
        }
    };
    let mut summary = summary;
    summary["config"] = serde_json::to_value(config).map_err(|e| Error::Invalid(e.to_string()))?;
    summary["k"] = json!(lab.k);
    summary["verdict"] = json!(verdict);
    summary["warnings"] = json!(warnings);
    let name = format!("{}.json", out.stem);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(out_dir.join(&name), text + "\n")?;
    out.files.push(name);
    Ok(ExperimentRecord {
        label: label.to_string(),
        experiment: config.experiment.name().to_string(),
        config_hash: config.hash(),
        verdict,
        k: lab.k,
        summary,
        warnings,
        files: out.files,
    })
}

/// Default location of a run's outputs.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&config.output.dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    const SMALL: &str = r#"
[grid]
extent = 20.0
points = 128
[cutoff]
lower = -1.0
upper = 0.5
width = 0.5
[propagator]
dt = 0.05
[frame]
c = 1.5
a = 2.25
b = 2.0
"#;

    #[test]
    fn grid_headroom_is_enforced() {
        let c = cfg("[grid]\nextent = 80.0\npoints = 64\n[cutoff]\nupper = 2.0\nwidth = 0.1\n[experiment]\nkind = \"theorem21\"\n");
        let err = Lab::new(&c).err().unwrap().to_string();
        assert!(err.contains("p_max >= 4k"), "{err}");
    }

    #[test]
    fn slow_cone_warns() {
        let text =
            format!("{SMALL}[experiment]\nkind = \"theorem21\"\n").replace("c = 1.5", "c = 0.2");
        let lab = Lab::new(&cfg(&text)).unwrap();
        assert_eq!(lab.warnings.len(), 1);
    }

    #[test]
    fn run_is_deterministic_and_indexed() {
        let text = format!("{SMALL}[experiment]\nkind = \"theorem21\"\ntimes = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0]\nfit_window = [1.0, 6.0]\nnorm = {{ mode = \"exact_columns\" }}\n");
        let c = cfg(&text);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = run(&c, d1.path()).unwrap();
        let m2 = run(&c, d2.path()).unwrap();
        assert_eq!(m1.config_hash, m2.config_hash);
        for f in &m1.files {
            let a = std::fs::read(d1.path().join(f)).unwrap();
            let b = std::fs::read(d2.path().join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
        assert!(m1.files.contains(&"theorem21.csv".to_string()));
        assert!(m1.files.contains(&"theorem21.json".to_string()));
        let back = RunManifest::load(&d1.path().join("manifest.json")).unwrap();
        assert_eq!(back.files, m1.files);
        assert!(back.report().contains("theorem21"));
    }

    #[test]
    fn sweep_indexes_sub_runs() {
        let text =
            format!("{SMALL}[experiment]\nkind = \"time_reversal\"\ntimes = [0.0, 1.0, 2.0]\n");
        let c = cfg(&text);
        let d = tempfile::tempdir().unwrap();
        assert!(sweep(&c, Axis::C, &[], d.path()).is_err());
        let m = sweep(&c, Axis::C, &[1.0, 2.0], d.path()).unwrap();
        assert_eq!(m.experiments.len(), 2);
        for f in &m.files {
            assert!(d.path().join(f).exists(), "{f}");
        }
        assert_eq!(m.verdict, Verdict::Pass);
    }
}
