use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::Command;
use crate::model::{sample_environment, HBAR, K_B};
use crate::oracle::{validate_closed_forms, OracleReport, OracleState};
use crate::sweeps::{
    position_squeezing_comparison, sample_time_series, temperature_sweep, SweepRow,
};
use crate::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs `command` and returns the process exit code.
pub fn run(command: Command, cfg: &RunConfig) -> Result<u8> {
    if let Command::CompareSqueezing {
        momentum_only,
        position_only,
    } = command
    {
        if momentum_only || position_only {
            return Err(Error::Config(
                "compare-squeezing runs both squeezing axes; drop --momentum-only/--position-only".into(),
            ));
        }
    }
    if command != Command::Oracle {
        cfg.validate()?;
        if cfg.initial_state().displacement_ignored() {
            eprintln!("warning: bath displacement only changes phases and is ignored");
        }
    }
    let out = Output::new(command, cfg)?;
    match command {
        Command::Timeseries => timeseries(cfg, &out),
        Command::Sweep => sweep(cfg, &out),
        Command::Oracle => oracle(cfg, &out),
        Command::CompareSqueezing { .. } => compare_squeezing(cfg, &out),
    }
}

struct Output {
    dir: PathBuf,
    command: &'static str,
    config: Vec<(&'static str, String)>,
}

impl Output {
    fn new(command: Command, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.out_dir)?;
        Ok(Output {
            dir: cfg.out_dir.clone(),
            command: command.name(),
            config: cfg.entries(),
        })
    }

    fn header_pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("program".to_string(), format!("qbm-sbs {VERSION}")),
            ("command".to_string(), self.command.to_string()),
            ("hbar".to_string(), format!("{HBAR:?}")),
            ("k_b".to_string(), format!("{K_B:?}")),
        ];
        v.extend(self.config.iter().map(|(k, val)| (k.to_string(), val.clone())));
        v
    }

    /// Writes `<name>.csv` with a commented preamble and `<name>.meta` with
    /// the same key-value pairs plus `extra`.
    fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = String>,
        extra: &[(String, String)],
    ) -> Result<PathBuf> {
        let path = self.dir.join(format!("{name}.csv"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        for (k, v) in self.header_pairs() {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{row}")?;
        }
        w.flush()?;

        let mut meta = String::new();
        for (k, v) in self.header_pairs().iter().chain(extra) {
            let _ = writeln!(meta, "{k} = {v}");
        }
        fs::write(self.dir.join(format!("{name}.meta")), meta)?;
        Ok(path)
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn report_written(path: &Path) {
    println!("wrote {}", path.display());
}

fn timeseries(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let sys = cfg.system()?;
    let seed = cfg.realization_seed();
    let series = sample_time_series(
        &cfg.environment(seed),
        &sys,
        &cfg.initial_state(),
        cfg.t_max,
        cfg.n_points,
    )?;
    let rows = (0..series.len()).map(|i| {
        format!("{:?},{:?},{:?}", series.times[i], series.gamma[i], series.b[i])
    });
    let extra = [
        kv("realization_seed", seed),
        kv("traced_oscillators", series.traced_size),
        kv("macro_oscillators", series.macro_size),
    ];
    let path = out.write_csv("timeseries", "t_seconds,gamma_abs,b_mac", rows, &extra)?;
    report_written(&path);
    Ok(0)
}

fn sweep_row(r: &SweepRow) -> String {
    format!(
        "{:?},{:?},{:?},{:?},{:?},{},{},{:?}",
        r.temperature,
        r.gamma_avg,
        r.gamma_stderr,
        r.b_avg,
        r.b_stderr,
        r.regime,
        r.n_time_samples,
        r.tau
    )
}

fn sweep(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let sys = cfg.system()?;
    let sweep_cfg = cfg.sweep()?;
    let rows = temperature_sweep(
        &cfg.environment(cfg.seed),
        &sys,
        &cfg.initial_state(),
        &sweep_cfg,
    )?;
    if cfg.tau < crate::sweeps::MIN_PERIODS * sys.period() {
        eprintln!("warning: tau spans fewer than 10 system periods; averages are dominated by the transient");
    }
    for r in rows.iter().filter(|r| !r.converged()) {
        eprintln!(
            "warning: ensemble averages at T = {:e} K changed by more than 1% between n/2 and n samples",
            r.temperature
        );
    }
    let unconverged: usize = rows.iter().map(|r| r.n_unconverged).sum();
    let max_drift = rows.iter().map(|r| r.gamma_drift.max(r.b_drift)).fold(0.0, f64::max);
    let seeds: Vec<String> = (0..sweep_cfg.n_realizations)
        .map(|i| sweep_cfg.realization_seed(i).to_string())
        .collect();
    let extra = [
        kv("realization_seeds", seeds.join(",")),
        kv("max_convergence_drift", format!("{max_drift:?}")),
        kv("unconverged_realization_averages", unconverged),
    ];
    let path = out.write_csv(
        "sweep",
        "T_kelvin,gamma_avg,gamma_stderr,b_avg,b_stderr,regime,n_samples,tau_seconds",
        rows.iter().map(sweep_row),
        &extra,
    )?;
    for r in &rows {
        println!(
            "T = {:.3e} K  <|Gamma|> = {:.4e}  <B> = {:.4e}  {}",
            r.temperature, r.gamma_avg, r.b_avg, r.regime
        );
    }
    report_written(&path);
    Ok(0)
}

fn state_columns(state: OracleState) -> (String, f64, f64) {
    match state {
        OracleState::Thermal => ("thermal".into(), 0.0, 0.0),
        OracleState::SqueezedThermal { r, theta } => ("squeezed".into(), r, theta),
    }
}

/// Fixed-width text rendering of an oracle report.
pub fn oracle_table(report: &OracleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>6} {:>6} {:>9} {:>5} {:>8} {:>5} {:>11} {:>11} {:>6}",
        "cell", "nbar", "|eta|", "state", "r", "theta", "dim", "gamma_dev", "b_dev", "status"
    );
    for c in &report.cells {
        let (kind, r, theta) = state_columns(c.state);
        let _ = writeln!(
            s,
            "{:>4} {:>6.2} {:>6.2} {:>9} {:>5.2} {:>8.4} {:>5} {:>11.3e} {:>11.3e} {:>6}",
            c.index,
            c.nbar,
            c.eta.norm(),
            kind,
            r,
            theta,
            c.dim,
            c.gamma_dev(),
            c.b_dev(),
            c.status.label()
        );
    }
    let _ = writeln!(
        s,
        "max |gamma dev| = {:.3e}  max |b dev| = {:.3e}  tolerance = {:e}  {}",
        report.max_gamma_dev(),
        report.max_b_dev(),
        report.tolerance,
        if report.passed() { "PASS" } else { "FAIL" }
    );
    s
}

fn oracle(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let report = validate_closed_forms(&cfg.oracle_grid())?;
    let rows = report.cells.iter().map(|c| {
        let (kind, r, theta) = state_columns(c.state);
        format!(
            "{},{:?},{:?},{:?},{},{:?},{:?},{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            c.index,
            c.nbar,
            c.eta.re,
            c.eta.im,
            kind,
            r,
            theta,
            c.dim,
            c.gamma_fock,
            c.gamma_closed,
            c.gamma_dev(),
            c.b_fock,
            c.b_closed,
            c.b_dev(),
            c.status.label()
        )
    });
    let extra = [
        kv("passed", report.passed()),
        kv("max_gamma_dev", format!("{:?}", report.max_gamma_dev())),
        kv("max_b_dev", format!("{:?}", report.max_b_dev())),
    ];
    let path = out.write_csv(
        "oracle",
        "cell,nbar,eta_re,eta_im,state,r,theta,dim,gamma_fock,gamma_closed,gamma_dev,b_fock,b_closed,b_dev,status",
        rows,
        &extra,
    )?;
    let table = oracle_table(&report);
    fs::write(out.dir.join("oracle.txt"), &table)?;
    print!("{table}");
    for c in &report.cells {
        if let crate::oracle::CellStatus::Guard(m) | crate::oracle::CellStatus::Error(m) = &c.status {
            eprintln!("cell {}: {m}", c.index);
        }
    }
    report_written(&path);
    Ok(if report.passed() { 0 } else { 1 })
}

fn compare_squeezing(cfg: &RunConfig, out: &Output) -> Result<u8> {
    let sys = cfg.system()?;
    let seed = cfg.realization_seed();
    let realization = sample_environment(&cfg.environment(seed), &sys)?;
    let cmp = position_squeezing_comparison(
        &realization,
        Some(seed),
        &sys,
        &cfg.initial_state(),
        &cfg.comparison(),
    )?;
    let (m, p) = (&cmp.momentum, &cmp.position);
    let rows = (0..m.series.len()).map(|i| {
        format!(
            "{:?},{:?},{:?},{:?},{:?}",
            m.series.times[i], m.series.gamma[i], m.series.b[i], p.series.gamma[i], p.series.b[i]
        )
    });
    let extra = [kv("realization_seed", seed)];
    let series_path = out.write_csv(
        "squeezing_timeseries",
        "t_seconds,gamma_momentum,b_momentum,gamma_position,b_position",
        rows,
        &extra,
    )?;
    let report_row = format!(
        "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
        m.gamma_avg,
        p.gamma_avg,
        cmp.ratio,
        m.revival,
        p.revival,
        m.b_avg,
        p.b_avg,
        cfg.n_time_samples,
        cfg.tau
    );
    let extra = [
        kv("realization_seed", seed),
        kv("convergence_drift_momentum", format!("{:?}", m.convergence.max_drift())),
        kv("convergence_drift_position", format!("{:?}", p.convergence.max_drift())),
    ];
    let report_path = out.write_csv(
        "squeezing_report",
        "gamma_avg_momentum,gamma_avg_position,ratio,revival_momentum,revival_position,b_avg_momentum,b_avg_position,n_samples,tau_seconds",
        std::iter::once(report_row),
        &extra,
    )?;
    println!(
        "ratio <|Gamma|>_position / <|Gamma|>_momentum = {:.4e}; revival (max |Gamma| after {:e} s): position {:.4}, momentum {:.4}",
        cmp.ratio, cfg.revival_start, p.revival, m.revival
    );
    report_written(&series_path);
    report_written(&report_path);
    Ok(0)
}
