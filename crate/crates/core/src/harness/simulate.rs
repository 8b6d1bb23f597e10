use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use super::{advance, check_blowup, initial_state, state_diagnostics, step_plan, write_json, Formulation, RunConfig};
use crate::error::Result;
use crate::init::generate_initial;
use crate::snapshot::{write_snapshot, AnyState};
use crate::spectral::Channel;
use crate::state::DiagnosticsRecord;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub formulation: Formulation,
    pub eps: f64,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial: DiagnosticsRecord,
    pub last: DiagnosticsRecord,
    /// Largest constraint corrections applied by any step.
    pub max_mean_fix: f64,
    pub max_compat_fix: f64,
    pub max_div_fix: f64,
    pub diagnostics_path: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub final_state: AnyState,
}

#[derive(Serialize)]
struct AbortReport<'a> {
    reason: String,
    step: usize,
    t: f64,
    initial: &'a DiagnosticsRecord,
    last: &'a DiagnosticsRecord,
}

/// Advances the configured formulation to `t_end`, streaming diagnostics to
/// `diagnostics.csv` and snapshots to `snapshot_<step>.snap`. On blow-up the
/// rows written so far are kept and `abort.json` records the reason.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let eps = cfg.eps.single()?;
    let t_end = cfg.end_time();
    let ch = Channel::new(cfg.grid)?;
    let p0 = generate_initial(&ch, &cfg.initial_data, eps)?;
    let eps_tag = (cfg.formulation != Formulation::Limit).then_some(eps);
    let (steps, dt) = step_plan(&ch, &p0, eps_tag, &cfg.integrator, t_end, 1)?;
    let mut state = initial_state(&ch, p0, cfg.formulation)?;

    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("config.json"), cfg.to_json_pretty() + "\n")?;
    let diagnostics_path = out.join("diagnostics.csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&diagnostics_path)?);
    writeln!(csv, "{}", DiagnosticsRecord::CSV_HEADER)?;

    let mut snapshots = Vec::new();
    let mut snap = |state: &AnyState, step: usize| -> Result<()> {
        let path = out.join(format!("snapshot_{step:06}.snap"));
        write_snapshot(&path, &cfg.grid, state, eps_tag)?;
        snapshots.push(path);
        Ok(())
    };

    let initial = state_diagnostics(&ch, &state, eps)?;
    writeln!(csv, "{}", initial.to_csv_row())?;
    snap(&state, 0)?;
    let e0 = initial.e_frak;
    let mut last = initial;
    let (mut max_mean, mut max_compat, mut max_div) = (0.0f64, 0.0f64, 0.0f64);

    for step in 1..=steps {
        let result = advance(&ch, &state, dt, &cfg.integrator).and_then(|(s, log)| {
            max_mean = max_mean.max(log.mean_fix);
            max_compat = max_compat.max(log.compat_fix);
            max_div = max_div.max(log.div_fix);
            let d = if step % cfg.outputs.diagnostics_every == 0 || step == steps {
                let d = state_diagnostics(&ch, &s, eps)?;
                check_blowup(&d, e0)?;
                Some(d)
            } else {
                None
            };
            Ok((s, d))
        });
        let (s, d) = match result {
            Ok(v) => v,
            Err(e) => {
                csv.flush()?;
                let report = AbortReport {
                    reason: e.to_string(),
                    step,
                    t: state.t() + dt,
                    initial: &initial,
                    last: &last,
                };
                write_json(&out.join("abort.json"), &report)?;
                log::error!("run aborted at step {step}: {e}");
                return Err(e);
            }
        };
        state = s;
        if let Some(d) = d {
            writeln!(csv, "{}", d.to_csv_row())?;
            last = d;
        }
        if (cfg.outputs.snapshot_every > 0 && step % cfg.outputs.snapshot_every == 0) || step == steps {
            snap(&state, step)?;
        }
    }
    csv.flush()?;
    drop(csv);

    let summary = RunSummary {
        formulation: cfg.formulation,
        eps,
        steps,
        dt,
        t_end,
        initial,
        last,
        max_mean_fix: max_mean,
        max_compat_fix: max_compat,
        max_div_fix: max_div,
        diagnostics_path,
        snapshots,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(RunOutcome {
        summary,
        final_state: state,
    })
}
