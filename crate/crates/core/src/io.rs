//! Text formats: run configurations (key = value), measurement records,
//! fringe grids, noise traces and reports. Every writer has a matching
//! reader so outputs can be fed back in.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::{KappaEstimate, LineSync, MeasurementRecord, RecordPoint, RunConfig};
use crate::halfint::HalfInt;
use crate::noise::{LineHarmonic, NoiseModel, NoiseTrace, StaticKappaBudget, TimeGrid};
use crate::sensitivity::{Probe, SensitivityReport};
use crate::sequence::{FringeGrid, IntegratorOptions, PulseMode, SequenceConfig};
use crate::sidereal::{sidereal_omega, FrequencyBound, Harmonic, HarmonicFit, KappaSample, SiderealModel, SIDEREAL_YEAR_S, SOLAR_DAY_S};
use crate::species::IonSpecies;
use crate::spin::{full_range_shift, kappa_lv, SpinSystem};

pub const RECORD_HEADER: &str = "t_unix_s,successes,trials,chi_rad,kappa_hat,sigma";
pub const GRID_HEADER: &str = "kappaT_rad,phi_rad,probability";
pub const TRACE_HEADER: &str = "t_s,delta_rad_per_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Kv,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Angle in radians; accepts plain numbers and forms such as `pi`, `-pi`,
/// `2pi`, `pi/2`, `3*pi/4` and `0.5pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let bad = || Error::InvalidParameter(format!("cannot parse angle '{s}'"));
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim().to_string(), b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t.clone(), 1.0),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?.trim().trim_end_matches('*').trim();
    let c = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(c * PI / den)
}

/// Angular frequency in rad/s. Named forms: `sidereal`, `2sidereal`,
/// `solar`, `2solar`, `annual`.
pub fn parse_omega(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let (k, name) = match t.find(|c: char| c.is_ascii_alphabetic()) {
        Some(0) => (1.0, t.as_str()),
        Some(i) => (t[..i].trim_end_matches('*').parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad frequency '{s}'")))?, &t[i..]),
        None => return Err(Error::InvalidParameter(format!("bad frequency '{s}'"))),
    };
    let base = match name {
        "sidereal" => sidereal_omega(),
        "solar" => 2.0 * PI / SOLAR_DAY_S,
        "annual" => 2.0 * PI / SIDEREAL_YEAR_S,
        _ => return Err(Error::InvalidParameter(format!("unknown frequency name '{name}'"))),
    };
    Ok(k * base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>> {
    let mut out: Vec<KvEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| perr(line, format!("expected 'key = value', got '{body}'")))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(perr(line, "empty key"));
        }
        if out.iter().any(|e| e.key == key) {
            return Err(perr(line, format!("duplicate key '{key}'")));
        }
        out.push(KvEntry { line, key, value: v.trim().to_string() });
    }
    Ok(out)
}

fn num(e: &KvEntry) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| perr(e.line, format!("{}: expected a number, got '{}'", e.key, e.value)))
}

fn list(e: &KvEntry) -> Result<Vec<f64>> {
    if e.value.is_empty() || e.value == "none" {
        return Ok(Vec::new());
    }
    e.value
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| perr(e.line, format!("{}: bad list entry '{}'", e.key, x.trim()))))
        .collect()
}

fn int<T: std::str::FromStr>(e: &KvEntry) -> Result<T> {
    e.value.parse::<T>().map_err(|_| perr(e.line, format!("{}: expected an integer, got '{}'", e.key, e.value)))
}

fn boolean(e: &KvEntry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(perr(e.line, format!("{}: expected true/false, got '{v}'", e.key))),
    }
}

fn join(xs: &[f64]) -> String {
    if xs.is_empty() {
        return "none".into();
    }
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Reads a run configuration. Hz-valued keys (`*_hz`) are converted to rad/s.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let entries = parse_kv(text)?;
    let hz = 2.0 * PI;
    let mut j: Option<HalfInt> = None;
    let mut m: Option<HalfInt> = None;
    let mut t_w: Option<f64> = None;
    let mut n_blocks: Option<u32> = None;
    let mut phi = PI;
    let mut pulses = PulseMode::Instantaneous;
    let mut budget = StaticKappaBudget::default();
    let mut auto_working_point = false;
    let mut noise = NoiseModel::quiet();
    let (mut freqs, mut amps, mut phases): (Vec<f64>, Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new(), Vec::new());
    let mut line_sync = LineSync::FreeRunning;
    let mut correlate = false;
    let mut n_spins = 1u32;
    let mut n_trials = 100u32;
    let mut lifetime = None;
    let (mut t_start, mut t_step, mut n_points) = (0.0, 1800.0, None::<usize>);
    let mut explicit_ts: Option<Vec<f64>> = None;
    let mut injected = SiderealModel::default();
    let mut seed = 0u64;
    let mut integrator = IntegratorOptions::default();

    for e in &entries {
        let half = |e: &KvEntry| e.value.parse::<HalfInt>().map_err(|err| perr(e.line, format!("{}: {err}", e.key)));
        let step = |e: &KvEntry| -> Result<Option<f64>> { if e.value == "auto" { Ok(None) } else { num(e).map(Some) } };
        match e.key.as_str() {
            "J" => j = Some(half(e)?),
            "m" => m = Some(half(e)?),
            "t_w_s" => t_w = Some(num(e)?),
            "n_blocks" => n_blocks = Some(int(e)?),
            "phi_rad" => phi = parse_angle(&e.value).map_err(|err| perr(e.line, err.to_string()))?,
            "rabi_omega0_rad_per_s" => {
                pulses = if e.value == "inf" { PulseMode::Instantaneous } else { PulseMode::Finite { rabi_omega0: num(e)? } }
            }
            "working_point" => {
                auto_working_point = match e.value.as_str() {
                    "auto" => true,
                    "manual" => false,
                    v => return Err(perr(e.line, format!("working_point: expected auto/manual, got '{v}'"))),
                }
            }
            "kappa_quadrupole_rad_per_s" => budget.quadrupole = num(e)?,
            "kappa_second_order_zeeman_rad_per_s" => budget.second_order_zeeman = num(e)?,
            "kappa_lv_rad_per_s" => budget.lv_term = num(e)?,
            "ou_sigma_hz" => noise.ou_sigma = num(e)? * hz,
            "ou_sigma_rad_per_s" => noise.ou_sigma = num(e)?,
            "ou_tau_c_s" => noise.ou_tau_c = num(e)?,
            "dc_offset_hz" => noise.dc_offset = num(e)? * hz,
            "dc_offset_rad_per_s" => noise.dc_offset = num(e)?,
            "line_freqs_hz" => freqs = list(e)?,
            "line_amps_hz" => amps = list(e)?.into_iter().map(|a| a * hz).collect(),
            "line_amps_rad_per_s" => amps = list(e)?,
            "line_phases_rad" => phases = list(e)?,
            "line_sync" => {
                line_sync = match e.value.as_str() {
                    "free" => LineSync::FreeRunning,
                    "triggered" => LineSync::Triggered,
                    v => return Err(perr(e.line, format!("line_sync: expected free/triggered, got '{v}'"))),
                }
            }
            "correlate_trials" => correlate = boolean(e)?,
            "n_spins" => n_spins = int(e)?,
            "n_trials" => n_trials = int(e)?,
            "lifetime_s" => lifetime = if e.value == "none" { None } else { Some(num(e)?) },
            "t_start_unix_s" => t_start = num(e)?,
            "t_step_s" => t_step = num(e)?,
            "n_points" => n_points = Some(int(e)?),
            "timestamps" => explicit_ts = Some(list(e)?),
            "inject_static_rad_per_s" => injected.kappa_static = num(e)?,
            "inject_epoch_unix_s" => injected.epoch = num(e)?,
            "inject_harmonics" => injected.harmonics = parse_harmonics(e)?,
            "seed" => seed = int(e)?,
            "free_step_s" => integrator.free_step = step(e)?,
            "pulse_step_s" => integrator.pulse_step = step(e)?,
            other => return Err(perr(e.line, format!("unknown key '{other}'"))),
        }
    }
    let missing = |k: &str| perr(0, format!("missing required key '{k}'"));
    let sys = SpinSystem::new(j.ok_or_else(|| missing("J"))?)?;
    let sequence = SequenceConfig::new(
        sys,
        t_w.ok_or_else(|| missing("t_w_s"))?,
        n_blocks.ok_or_else(|| missing("n_blocks"))?,
        0.0,
        phi,
        pulses,
        m.ok_or_else(|| missing("m"))?,
    )?;
    if freqs.len() != amps.len() || (!phases.is_empty() && phases.len() != freqs.len()) {
        return Err(perr(0, "line_freqs_hz, line_amps and line_phases_rad must have equal lengths"));
    }
    noise.line_harmonics = freqs
        .iter()
        .zip(&amps)
        .enumerate()
        .map(|(k, (&f, &a))| LineHarmonic { freq_hz: f, amplitude: a, phase: phases.get(k).copied().unwrap_or(0.0) })
        .collect();
    let timestamps = match explicit_ts {
        Some(ts) => ts,
        None => (0..n_points.unwrap_or(1)).map(|k| t_start + k as f64 * t_step).collect(),
    };
    let mut cfg = RunConfig {
        sequence,
        noise,
        line_sync,
        correlate_trials: correlate,
        n_spins,
        n_trials,
        lifetime,
        budget,
        timestamps,
        injected,
        master_seed: seed,
        integrator,
    };
    if auto_working_point {
        cfg.tune_to_working_point()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_harmonics(e: &KvEntry) -> Result<Vec<Harmonic>> {
    if e.value.is_empty() || e.value == "none" {
        return Ok(Vec::new());
    }
    e.value
        .split(';')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(perr(e.line, format!("inject_harmonics: expected omega:cos:sin, got '{item}'")));
            }
            let omega = parse_omega(parts[0]).map_err(|err| perr(e.line, err.to_string()))?;
            let f = |s: &str| s.parse::<f64>().map_err(|_| perr(e.line, format!("inject_harmonics: bad amplitude '{s}'")));
            Ok(Harmonic { omega, cos_amp: f(parts[1])?, sin_amp: f(parts[2])? })
        })
        .collect()
}

/// Writes a fully resolved configuration; `parse_run_config` reads it back
/// to an identical `RunConfig`.
pub fn format_run_config(cfg: &RunConfig) -> String {
    let s = &cfg.sequence;
    let mut o = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };
    kv("J", s.sys.j().to_string());
    kv("m", s.initial_m.to_string());
    kv("t_w_s", s.t_w.to_string());
    kv("n_blocks", s.n_blocks.to_string());
    kv("phi_rad", s.phi.to_string());
    kv(
        "rabi_omega0_rad_per_s",
        match s.pulses {
            PulseMode::Instantaneous => "inf".into(),
            PulseMode::Finite { rabi_omega0 } => rabi_omega0.to_string(),
        },
    );
    kv("working_point", "manual".into());
    kv("kappa_quadrupole_rad_per_s", cfg.budget.quadrupole.to_string());
    kv("kappa_second_order_zeeman_rad_per_s", cfg.budget.second_order_zeeman.to_string());
    kv("kappa_lv_rad_per_s", cfg.budget.lv_term.to_string());
    kv("ou_sigma_rad_per_s", cfg.noise.ou_sigma.to_string());
    kv("ou_tau_c_s", cfg.noise.ou_tau_c.to_string());
    kv("dc_offset_rad_per_s", cfg.noise.dc_offset.to_string());
    let lh = &cfg.noise.line_harmonics;
    kv("line_freqs_hz", join(&lh.iter().map(|h| h.freq_hz).collect::<Vec<_>>()));
    kv("line_amps_rad_per_s", join(&lh.iter().map(|h| h.amplitude).collect::<Vec<_>>()));
    kv("line_phases_rad", join(&lh.iter().map(|h| h.phase).collect::<Vec<_>>()));
    kv(
        "line_sync",
        match cfg.line_sync {
            LineSync::FreeRunning => "free".into(),
            LineSync::Triggered => "triggered".into(),
        },
    );
    kv("correlate_trials", cfg.correlate_trials.to_string());
    kv("n_spins", cfg.n_spins.to_string());
    kv("n_trials", cfg.n_trials.to_string());
    kv("lifetime_s", cfg.lifetime.map_or("none".into(), |l| l.to_string()));
    let ts = &cfg.timestamps;
    let uniform = ts.len() >= 2 && {
        let step = ts[1] - ts[0];
        ts.iter().enumerate().all(|(k, &t)| t == ts[0] + k as f64 * step)
    };
    if uniform || ts.len() == 1 {
        kv("t_start_unix_s", ts[0].to_string());
        kv("t_step_s", if uniform { (ts[1] - ts[0]).to_string() } else { "1".into() });
        kv("n_points", ts.len().to_string());
    } else {
        kv("timestamps", join(ts));
    }
    kv("inject_static_rad_per_s", cfg.injected.kappa_static.to_string());
    kv("inject_epoch_unix_s", cfg.injected.epoch.to_string());
    kv(
        "inject_harmonics",
        if cfg.injected.harmonics.is_empty() {
            "none".into()
        } else {
            cfg.injected.harmonics.iter().map(|h| format!("{}:{}:{}", h.omega, h.cos_amp, h.sin_amp)).collect::<Vec<_>>().join(";")
        },
    );
    kv("seed", cfg.master_seed.to_string());
    let step = |x: Option<f64>| x.map_or("auto".into(), |v| v.to_string());
    kv("free_step_s", step(cfg.integrator.free_step));
    kv("pulse_step_s", step(cfg.integrator.pulse_step));
    o
}

fn echo(header: &str) -> String {
    header.lines().map(|l| format!("# {l}\n")).collect()
}

/// Record with a `#`-prefixed configuration echo. Fringe-wrap rows carry
/// `wrap` in the estimate columns.
pub fn format_record(record: &MeasurementRecord) -> String {
    let mut o = echo(&format_run_config(&record.config));
    o.push_str(RECORD_HEADER);
    o.push('\n');
    for p in &record.points {
        let _ = match p.estimate {
            Some(e) => writeln!(o, "{},{},{},{:.16e},{:.16e},{:.16e}", p.t, p.successes, p.trials, p.chi, e.kappa, e.sigma),
            None => writeln!(o, "{},{},{},{:.16e},wrap,wrap", p.t, p.successes, p.trials, p.chi),
        };
    }
    o
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn strip_echo(text: &str) -> String {
    text.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| l.strip_prefix(' ').unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Full record written by `format_record`, including the echoed config.
pub fn parse_record(text: &str) -> Result<MeasurementRecord> {
    let config = parse_run_config(&strip_echo(text))?;
    let mut points = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if !seen_header {
            if l != RECORD_HEADER {
                return Err(perr(line, format!("expected header '{RECORD_HEADER}'")));
            }
            seen_header = true;
            continue;
        }
        let f = split_fields(l);
        if f.len() != 6 {
            return Err(perr(line, format!("expected 6 fields, got {}", f.len())));
        }
        let n = |s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("bad number '{s}'")));
        let u = |s: &str| s.parse::<u64>().map_err(|_| perr(line, format!("bad count '{s}'")));
        let (successes, trials) = (u(f[1])?, u(f[2])?);
        if successes > trials {
            return Err(perr(line, "successes exceed trials"));
        }
        let chi = n(f[3])?;
        let estimate = if f[4] == "wrap" {
            None
        } else {
            let kappa = n(f[4])?;
            Some(KappaEstimate { chi: kappa * config.ramsey_time(), kappa, sigma: n(f[5])? })
        };
        points.push(RecordPoint { t: n(f[0])?, successes, trials, chi, estimate });
    }
    Ok(MeasurementRecord { config, points })
}

/// κ time series for fitting. Accepts the simulator record (6 columns) or
/// `t_unix_s, kappa_rad_per_s, sigma_rad_per_s` (3 columns), comma or
/// whitespace separated, with an optional header naming the columns.
/// Fringe-wrap rows are skipped.
pub fn parse_kappa_record(text: &str) -> Result<Vec<KappaSample>> {
    let mut cols: Option<(usize, usize, usize, usize)> = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let f = split_fields(l);
        if cols.is_none() {
            if f[0].parse::<f64>().is_err() {
                let find = |names: &[&str]| f.iter().position(|c| names.contains(c));
                let t = find(&["t_unix_s", "t", "t_s"]).ok_or_else(|| perr(line, "header has no time column"))?;
                let k = find(&["kappa_hat", "kappa_rad_per_s", "kappa"]).ok_or_else(|| perr(line, "header has no kappa column"))?;
                let s = find(&["sigma", "sigma_rad_per_s"]).ok_or_else(|| perr(line, "missing sigma column"))?;
                cols = Some((t, k, s, f.len()));
                continue;
            }
            cols = Some(match f.len() {
                3 => (0, 1, 2, 3),
                6 => (0, 4, 5, 6),
                n => return Err(perr(line, format!("expected 3 or 6 columns (t, kappa, sigma), got {n}"))),
            });
        }
        let (ti, ki, si, width) = cols.expect("columns set above");
        if f.len() != width {
            return Err(perr(line, format!("expected {width} fields, got {}", f.len())));
        }
        if f[ki] == "wrap" {
            continue;
        }
        let n = |s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("bad number '{s}'")));
        let sigma = n(f[si])?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(perr(line, format!("sigma must be positive, got {sigma}")));
        }
        out.push(KappaSample { t: n(f[ti])?, kappa: n(f[ki])?, sigma });
    }
    Ok(out)
}

pub fn format_fringe_grid(grid: &FringeGrid, header: &str) -> String {
    let mut o = echo(header);
    o.push_str(GRID_HEADER);
    o.push('\n');
    for (i, kt) in grid.kappa_t.iter().enumerate() {
        for (j, ph) in grid.phi.iter().enumerate() {
            let _ = writeln!(o, "{kt:.16e},{ph:.16e},{:.16e}", grid.get(i, j));
        }
    }
    o
}

/// Reads a grid written row-major with κT as the slow axis.
pub fn parse_fringe_grid(text: &str) -> Result<FringeGrid> {
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if !seen_header {
            if l != GRID_HEADER {
                return Err(perr(line, format!("expected header '{GRID_HEADER}'")));
            }
            seen_header = true;
            continue;
        }
        let f = split_fields(l);
        if f.len() != 3 {
            return Err(perr(line, format!("expected 3 fields, got {}", f.len())));
        }
        let n = |s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("bad number '{s}'")));
        rows.push((n(f[0])?, n(f[1])?, n(f[2])?));
    }
    let mut kappa_t: Vec<f64> = Vec::new();
    for r in &rows {
        if kappa_t.last() != Some(&r.0) {
            kappa_t.push(r.0);
        }
    }
    if kappa_t.is_empty() || !rows.len().is_multiple_of(kappa_t.len()) {
        return Err(perr(0, "grid is empty or not rectangular"));
    }
    let n_phi = rows.len() / kappa_t.len();
    let phi: Vec<f64> = rows[..n_phi].iter().map(|r| r.1).collect();
    Ok(FringeGrid { kappa_t, phi, values: rows.iter().map(|r| r.2).collect() })
}

/// One-dimensional fringe with the working point noted in the header.
pub fn format_fringe_slice(chi: &[f64], p: &[f64], phi: f64, chi_m: f64) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# phi_rad = {phi}");
    let _ = writeln!(o, "# chi_m_rad = {chi_m:.16e}");
    o.push_str("kappaT_rad,probability,slope_sign\n");
    for (k, (&x, &y)) in chi.iter().zip(p).enumerate() {
        let next = p.get(k + 1).copied().unwrap_or(y);
        let prev = if k > 0 { p[k - 1] } else { y };
        let s = (next - prev).signum() as i32;
        let _ = writeln!(o, "{x:.16e},{y:.16e},{s}");
    }
    o
}

pub fn format_trace(trace: &NoiseTrace) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# descriptor = {}", trace.descriptor());
    if let Some(s) = trace.seed() {
        let _ = writeln!(o, "# seed = {s}");
    }
    o.push_str(TRACE_HEADER);
    o.push('\n');
    let g = trace.grid();
    for (k, v) in trace.samples().iter().enumerate() {
        let _ = writeln!(o, "{:.16e},{v:.16e}", g.time(k));
    }
    o
}

pub fn parse_trace(text: &str) -> Result<NoiseTrace> {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l == TRACE_HEADER {
            continue;
        }
        let f = split_fields(l);
        if f.len() != 2 {
            return Err(perr(line, format!("expected 2 fields, got {}", f.len())));
        }
        let n = |s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("bad number '{s}'")));
        ts.push(n(f[0])?);
        vs.push(n(f[1])?);
    }
    if ts.len() < 2 {
        return Err(perr(0, "trace needs at least two samples"));
    }
    let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    NoiseTrace::new(TimeGrid::new(ts[0], dt, ts.len())?, vs, "file")
}

/// Row of the species shift table.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRow {
    pub label: String,
    pub j: HalfInt,
    pub reduced_me_au: f64,
    /// `|ΔE / (h C₀⁽²⁾)|` between `m = ±J` and the smallest `|m|`, Hz.
    pub shift_hz: f64,
    /// `κ_LV / 2π`, Hz.
    pub kappa_lv_hz: f64,
}

pub fn shift_table(species: &[IonSpecies], c02: f64) -> Result<Vec<ShiftRow>> {
    species
        .iter()
        .map(|s| {
            Ok(ShiftRow {
                label: s.label.clone(),
                j: s.j,
                reduced_me_au: s.reduced_me_au,
                shift_hz: full_range_shift(s, c02)?,
                kappa_lv_hz: kappa_lv(s, c02)? / (2.0 * PI),
            })
        })
        .collect()
}

pub fn format_shift_table(rows: &[ShiftRow], c02: f64, format: OutputFormat) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# c02 = {c02}");
    match format {
        OutputFormat::Csv => {
            o.push_str("label,J,reduced_me_au,shift_hz,kappa_lv_over_2pi_hz\n");
            for r in rows {
                let _ = writeln!(o, "{},{},{},{:.6e},{:.6e}", r.label, r.j, r.reduced_me_au, r.shift_hz, r.kappa_lv_hz);
            }
        }
        OutputFormat::Kv => {
            for r in rows {
                let _ = writeln!(o, "{}.J = {}", r.label, r.j);
                let _ = writeln!(o, "{}.reduced_me_au = {}", r.label, r.reduced_me_au);
                let _ = writeln!(o, "{}.shift_hz = {:.6e}", r.label, r.shift_hz);
                let _ = writeln!(o, "{}.kappa_lv_over_2pi_hz = {:.6e}", r.label, r.kappa_lv_hz);
            }
        }
    }
    o
}

fn probe_label(p: &Probe) -> String {
    match p {
        Probe::Separable { j, m } => format!("J={j} m={m}"),
        Probe::Entangled { n_ions } => format!("entangled N={n_ions}"),
    }
}

/// Reports with Δκ evaluated at (N, τ, T).
pub fn format_sensitivity(reports: &[SensitivityReport], n_spins: f64, tau: f64, t: f64, format: OutputFormat) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# n_spins = {n_spins}");
    let _ = writeln!(o, "# tau_s = {tau}");
    let _ = writeln!(o, "# ramsey_time_s = {t}");
    match format {
        OutputFormat::Csv => {
            o.push_str("probe,phi_rad,chi_m_rad,f_value,dfdchi_max,coefficient,delta_kappa_rad_per_s\n");
            for r in reports {
                let _ = writeln!(
                    o,
                    "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    probe_label(&r.probe),
                    r.phi,
                    r.chi_m,
                    r.f_value,
                    r.dfdchi_max,
                    r.delta_kappa_coeff,
                    r.delta_kappa(n_spins, tau, t)
                );
            }
        }
        OutputFormat::Kv => {
            for (k, r) in reports.iter().enumerate() {
                let _ = writeln!(o, "report{k}.probe = {}", probe_label(&r.probe));
                let _ = writeln!(o, "report{k}.phi_rad = {}", r.phi);
                let _ = writeln!(o, "report{k}.chi_m_rad = {:.10e}", r.chi_m);
                let _ = writeln!(o, "report{k}.f_value = {:.10e}", r.f_value);
                let _ = writeln!(o, "report{k}.dfdchi_max = {:.10e}", r.dfdchi_max);
                let _ = writeln!(o, "report{k}.coefficient = {:.10e}", r.delta_kappa_coeff);
                let _ = writeln!(o, "report{k}.delta_kappa_rad_per_s = {:.10e}", r.delta_kappa(n_spins, tau, t));
                let _ = writeln!(o, "report{k}.assumes_no_drift = {}", r.assumes_no_drift);
            }
        }
    }
    o
}

/// Fit report in `key = value` form, covariance as its lower triangle.
pub fn format_fit_report(fit: &HarmonicFit, bounds: &[FrequencyBound], species: &str, z: f64) -> String {
    let mut o = String::new();
    let mut kv = |k: String, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };
    kv("species".into(), species.into());
    kv("epoch_unix_s".into(), fit.epoch.to_string());
    kv("z".into(), z.to_string());
    kv("offset_rad_per_s".into(), format!("{:.10e}", fit.offset));
    kv("offset_err_rad_per_s".into(), format!("{:.10e}", fit.offset_err));
    kv("chi_squared".into(), format!("{:.10e}", fit.chi_squared));
    kv("dof".into(), fit.dof.to_string());
    kv("reduced_chi_squared".into(), format!("{:.10e}", fit.reduced_chi_squared()));
    kv("condition_number".into(), format!("{:.6e}", fit.condition_number));
    for (k, h) in fit.harmonics.iter().enumerate() {
        kv(format!("h{k}.omega_rad_per_s"), format!("{:.10e}", h.omega));
        kv(format!("h{k}.cos_amp"), format!("{:.10e}", h.cos_amp));
        kv(format!("h{k}.cos_err"), format!("{:.10e}", h.cos_err));
        kv(format!("h{k}.sin_amp"), format!("{:.10e}", h.sin_amp));
        kv(format!("h{k}.sin_err"), format!("{:.10e}", h.sin_err));
        kv(format!("h{k}.quadrature"), format!("{:.10e}", h.quadrature()));
        kv(format!("h{k}.quadrature_err"), format!("{:.10e}", h.quadrature_err()));
        if let Some(b) = bounds.get(k) {
            kv(format!("h{k}.amplitude_c02"), format!("{:.6e}", b.amplitude_c02));
            kv(format!("h{k}.bound_c02"), format!("{:.6e}", b.bound_c02));
        }
    }
    let c = &fit.covariance;
    for i in 0..c.nrows() {
        for j in 0..=i {
            kv(format!("cov.{i}.{j}"), format!("{:.10e}", c[(i, j)]));
        }
    }
    o
}
