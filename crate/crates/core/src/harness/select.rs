use super::{fan_out, num, CsvTable, ExperimentConfig};
use crate::error::Result;
use crate::mselect::{draw_channels, select_m_diminishing, sweep_sigma, SelectionResult, SweepRow};
use crate::rng::{seeded, trial_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectReport {
    pub sigma_z: f64,
    /// One draw-averaged selection per trial.
    pub selections: Vec<SelectionResult>,
}

impl SelectReport {
    /// Fraction of trials that picked `m`.
    pub fn share(&self, m: u32) -> f64 {
        let hits = self.selections.iter().filter(|s| s.m_star == m).count();
        hits as f64 / self.selections.len() as f64
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let ms: Vec<u32> = self.selections[0].objectives.iter().map(|o| o.0).collect();
        let mut header = vec![
            "trial".to_string(),
            "sigma_z".into(),
            "m_star".into(),
            "n_star".into(),
        ];
        header.extend(ms.iter().map(|m| format!("objective_m{m}")));
        let mut t = CsvTable::new("select-m", cfg, &[]);
        t.header = header;
        t.note(format!(
            "units: objectives are K/(2 N beta c1) averaged over {} channel draws (dimensionless)",
            cfg.select.draws
        ));
        for (i, s) in self.selections.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                num(self.sigma_z),
                s.m_star.to_string(),
                s.n_star.to_string(),
            ];
            row.extend(s.objectives.iter().map(|o| num(o.1)));
            t.rows.push(row);
        }
        t
    }
}

pub fn select_m(cfg: &ExperimentConfig) -> Result<SelectReport> {
    let master = cfg.seed()?;
    let cost = cfg.cost_model()?;
    let candidates = cfg.candidates();
    let sigma_sq = cfg.noise_variance()?;
    let selections = fan_out(cfg.trials()?, |t| {
        let mut rng = trial_rng(master, t);
        let chans = draw_channels(
            cfg.channel.num_devices,
            sigma_sq,
            cfg.select.draws,
            &mut rng,
        )?;
        select_m_diminishing(
            &cost,
            &chans,
            cfg.channel.p_max,
            cfg.learner.step_size,
            &candidates,
        )
    })?;
    Ok(SelectReport {
        sigma_z: sigma_sq.sqrt(),
        selections,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSweepReport {
    pub rows: Vec<SweepRow>,
}

impl SigmaSweepReport {
    pub fn m_stars(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.selection.m_star).collect()
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let ms: Vec<u32> = self.rows[0]
            .selection
            .objectives
            .iter()
            .map(|o| o.0)
            .collect();
        let mut header = vec!["sigma_z".to_string(), "m_star".into(), "n_star".into()];
        header.extend(ms.iter().map(|m| format!("objective_m{m}")));
        let mut t = CsvTable::new("sigma-sweep", cfg, &[]);
        t.header = header;
        t.note(format!(
            "units: sigma_z is the noise standard deviation per real sample; objectives are K/(2 N beta c1) averaged over {} channel draws",
            cfg.select.draws
        ));
        for r in &self.rows {
            let mut row = vec![
                num(r.sigma_z),
                r.selection.m_star.to_string(),
                r.selection.n_star.to_string(),
            ];
            row.extend(r.selection.objectives.iter().map(|o| num(o.1)));
            t.rows.push(row);
        }
        t
    }
}

/// One set of channel draws, reused at every noise level of the grid.
pub fn sigma_sweep(cfg: &ExperimentConfig) -> Result<SigmaSweepReport> {
    let mut rng = seeded(cfg.seed()?);
    let gains = draw_channels(cfg.channel.num_devices, 0.0, cfg.select.draws, &mut rng)?;
    let grid: Vec<f64> = cfg.noise_levels()?.into_iter().map(|l| l.0).collect();
    let rows = sweep_sigma(
        &cfg.cost_model()?,
        &gains,
        &grid,
        cfg.channel.p_max,
        cfg.learner.step_size,
        &cfg.candidates(),
    )?;
    Ok(SigmaSweepReport { rows })
}
