use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::integrator::RunConfig;

use super::sweep::SweepGrid;
use super::table::TableFormat;

/// Every tunable of the command line, each optional so that a config file and
/// flags can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub h: Option<f64>,
    pub n_elems: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub t_final: Option<f64>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub dt_min_factor: Option<f64>,
    pub dt_cap_factor: Option<f64>,
    pub fixed_dt: Option<f64>,
    pub snapshots: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub format: Option<TableFormat>,
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub hs: Option<Vec<f64>>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid value '{value}' for '{key}'")))
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s, line))
        .collect()
}

impl Settings {
    /// Flat `key = value` text; `#` starts a comment. Keys use the flag names
    /// with `_` or `-`; lists are comma separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {line}: expected key=value, found '{content}'")))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "h" => s.h = Some(parse_value(&key, value, line)?),
                "n_elems" => s.n_elems = Some(parse_value(&key, value, line)?),
                "alpha" => s.alpha = Some(parse_value(&key, value, line)?),
                "beta" => s.beta = Some(parse_value(&key, value, line)?),
                "t_final" => s.t_final = Some(parse_value(&key, value, line)?),
                "newton_tol" => s.newton_tol = Some(parse_value(&key, value, line)?),
                "newton_max_iter" => s.newton_max_iter = Some(parse_value(&key, value, line)?),
                "dt_min_factor" => s.dt_min_factor = Some(parse_value(&key, value, line)?),
                "dt_cap_factor" => s.dt_cap_factor = Some(parse_value(&key, value, line)?),
                "fixed_dt" => s.fixed_dt = Some(parse_value(&key, value, line)?),
                "snapshots" => s.snapshots = Some(parse_value(&key, value, line)?),
                "out_dir" => s.out_dir = Some(PathBuf::from(value)),
                "workers" => s.workers = Some(parse_value(&key, value, line)?),
                "format" => s.format = Some(value.parse()?),
                "alphas" => s.alphas = Some(parse_list(&key, value, line)?),
                "betas" => s.betas = Some(parse_list(&key, value, line)?),
                "hs" => s.hs = Some(parse_list(&key, value, line)?),
                other => return Err(Error::Parse(format!("line {line}: unknown key '{other}'"))),
            }
        }
        Ok(s)
    }

    /// `self` with every value present in `flags` replaced. A mesh given by
    /// either `h` or `n_elems` in `flags` replaces both.
    pub fn overlay(self, flags: Settings) -> Settings {
        let mesh_from_flags = flags.h.is_some() || flags.n_elems.is_some();
        let (h, n_elems) = if mesh_from_flags {
            (flags.h, flags.n_elems)
        } else {
            (self.h, self.n_elems)
        };
        Settings {
            h,
            n_elems,
            alpha: flags.alpha.or(self.alpha),
            beta: flags.beta.or(self.beta),
            t_final: flags.t_final.or(self.t_final),
            newton_tol: flags.newton_tol.or(self.newton_tol),
            newton_max_iter: flags.newton_max_iter.or(self.newton_max_iter),
            dt_min_factor: flags.dt_min_factor.or(self.dt_min_factor),
            dt_cap_factor: flags.dt_cap_factor.or(self.dt_cap_factor),
            fixed_dt: flags.fixed_dt.or(self.fixed_dt),
            snapshots: flags.snapshots.or(self.snapshots),
            out_dir: flags.out_dir.or(self.out_dir),
            workers: flags.workers.or(self.workers),
            format: flags.format.or(self.format),
            alphas: flags.alphas.or(self.alphas),
            betas: flags.betas.or(self.betas),
            hs: flags.hs.or(self.hs),
        }
    }

    /// Run configuration; `n_elems` takes precedence over `h`.
    pub fn run_config(&self) -> Result<RunConfig<f64>> {
        let mut c = match (self.n_elems, self.h) {
            (Some(n), _) => RunConfig {
                n_elems: n,
                ..RunConfig::default()
            },
            (None, Some(h)) if h > 0.0 => RunConfig::with_width(h),
            (None, Some(h)) => return Err(Error::Config(format!("h must be positive, got {h}"))),
            (None, None) => RunConfig::default(),
        };
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.t_final {
            c.t_final = v;
        }
        if let Some(v) = self.newton_tol {
            c.newton_tol = v;
        }
        if let Some(v) = self.newton_max_iter {
            c.newton_max_iter = v;
        }
        if let Some(v) = self.dt_min_factor {
            c.dt_min_factor = v;
        }
        if let Some(v) = self.dt_cap_factor {
            c.dt_cap_factor = v;
        }
        if let Some(v) = self.snapshots {
            c.snapshots = v;
        }
        c.fixed_dt = self.fixed_dt.or(c.fixed_dt);
        c.validate()?;
        Ok(c)
    }

    /// Sweep grid: default lists unless overridden; shared settings from [`Settings::run_config`].
    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        let d = SweepGrid::default();
        let grid = SweepGrid {
            alphas: self.alphas.clone().unwrap_or(d.alphas),
            betas: self.betas.clone().unwrap_or(d.betas),
            hs: self.hs.clone().unwrap_or(d.hs),
            base: self.run_config()?,
        };
        grid.validate()?;
        Ok(grid)
    }
}
