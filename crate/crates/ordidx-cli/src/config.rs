//! Runtime configuration with the precedence flags > ORDIDX_* environment
//! variables > built-in defaults.

use std::str::FromStr;

use ordidx_core::densities::{DEFAULT_N_MAX, DEFAULT_T_MAX, DEFAULT_W_MAX};

pub const ENV_PREFIX: &str = "ORDIDX_";

/// Resolve one parameter: an explicit flag wins, then the environment, then
/// the default.
pub fn resolve<T: FromStr + Copy>(flag: Option<T>, key: &str, default: T) -> T {
    if let Some(v) = flag {
        return v;
    }
    if let Ok(s) = std::env::var(format!("{ENV_PREFIX}{key}")) {
        if let Ok(v) = s.parse::<T>() {
            return v;
        }
    }
    default
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            other => Err(format!("unknown format {other:?} (json|csv|text)")),
        }
    }
}

/// Fully resolved run parameters shared by the subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub t_max: u64,
    pub n_max: u64,
    pub w_max: u64,
    pub x: u64,
    pub format: OutputFormat,
    pub cache_dir: Option<std::path::PathBuf>,
    pub cache_residues: bool,
    pub cache_only: bool,
    pub workers: usize,
    pub prime_bound: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Truncation of the outer t-sum of the order-density series
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Truncation of the inner squarefree n-sum
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Truncation of the w-form index-density series
    #[arg(long)]
    pub w_max: Option<u64>,
    /// Sieve bound for censuses
    #[arg(long)]
    pub x: Option<u64>,
    /// Output format: json, csv or text
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Directory for the residue cache
    #[arg(long)]
    pub cache_dir: Option<std::path::PathBuf>,
    /// Write the per-prime residue stream into the cache after sieving
    #[arg(long, default_value_t = false)]
    pub cache_residues: bool,
    /// Serve censuses from the cache only; a miss is an error instead of a
    /// fresh sieve
    #[arg(long, default_value_t = false)]
    pub cache_only: bool,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Prime bound for Euler products
    #[arg(long)]
    pub prime_bound: Option<u64>,
    /// Comparison tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl CommonArgs {
    pub fn resolve(&self) -> RunConfig {
        let cache_dir = self.cache_dir.clone().or_else(|| {
            std::env::var(format!("{ENV_PREFIX}CACHE_DIR"))
                .ok()
                .map(std::path::PathBuf::from)
        });
        RunConfig {
            t_max: resolve(self.t_max, "T_MAX", DEFAULT_T_MAX),
            n_max: resolve(self.n_max, "N_MAX", DEFAULT_N_MAX),
            w_max: resolve(self.w_max, "W_MAX", DEFAULT_W_MAX),
            x: resolve(self.x, "X", 10_000_000),
            format: resolve(self.format, "FORMAT", OutputFormat::Json),
            cache_dir,
            cache_residues: self.cache_residues
                || std::env::var(format!("{ENV_PREFIX}CACHE_RESIDUES")).is_ok(),
            cache_only: self.cache_only,
            workers: resolve(self.workers, "WORKERS", 0),
            prime_bound: resolve(self.prime_bound, "PRIME_BOUND", 10_000_000),
            tolerance: resolve(self.tolerance, "TOLERANCE", 0.01),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_env_over_default() {
        std::env::set_var("ORDIDX_T_MAX", "123");
        assert_eq!(resolve(Some(7u64), "T_MAX", 1), 7);
        assert_eq!(resolve(None::<u64>, "T_MAX", 1), 123);
        std::env::remove_var("ORDIDX_T_MAX");
        assert_eq!(resolve(None::<u64>, "T_MAX", 1), 1);
    }
}
