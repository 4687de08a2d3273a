use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use ordidx_cli::cache;
use ordidx_cli::config::{CommonArgs, OutputFormat, RunConfig};
use ordidx_cli::formats::{self, Render};
use ordidx_cli::parallel;
use ordidx_core::arith::{decompose, parse_rational, DecomposedBase, SpfSieve};
use ordidx_core::characters::{a_chi, enumerate_characters};
use ordidx_core::densities::{
    reduce_modulus, rho_closed_form, DensityContext, DensityEstimate, DensityKind, Method,
};
use ordidx_core::empirical::{CensusMode, ResidueStream};

#[derive(Parser)]
#[command(
    name = "ordidx",
    about = "Densities of primes by order/index residue class, with empirical verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one density: kind rho|rho-avg|delta|delta0|delta-avg
    Density {
        #[arg(long)]
        kind: String,
        /// Base g as an integer or p/q (required for the g-specific kinds)
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Count primes up to x by order/index residue class
    Census {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value = "order")]
        mode: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the census against the series prediction; exit 0 iff all
    /// residue classes agree within the tolerance
    Compare {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value = "order")]
        mode: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit the full a-vector of all five densities for one (g, d)
    Table {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pappalardi constants A_chi for all characters mod d
    Constants {
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the invariant suite at reduced scale
    Selfcheck {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = match &cli.command {
        Command::Density { common, .. }
        | Command::Census { common, .. }
        | Command::Compare { common, .. }
        | Command::Table { common, .. }
        | Command::Constants { common, .. }
        | Command::Selfcheck { common } => common.clone(),
    };
    let cfg = common.resolve();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        pool = pool.num_threads(cfg.workers);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| dispatch(cli, &cfg))
}

fn parse_base(g: &str) -> Result<DecomposedBase> {
    let q = parse_rational(g).map_err(|e| anyhow!("{e}"))?;
    decompose(q).map_err(|e| anyhow!("{e}"))
}

fn normalized_a(a: u64, d: u64) -> u64 {
    if a >= d {
        eprintln!("warning: a = {a} normalized to {} mod {d}", a % d);
    }
    a % d
}

fn print_rendered<R: Render + serde::Serialize>(cfg: &RunConfig, record: &R) -> Result<()> {
    match cfg.format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(record)?),
        OutputFormat::Csv => print!("{}", record.csv()),
        OutputFormat::Text => print!("{}", record.text()),
    }
    Ok(())
}

fn dispatch(cli: Cli, cfg: &RunConfig) -> Result<ExitCode> {
    match cli.command {
        Command::Density { kind, g, a, d, .. } => cmd_density(cfg, &kind, g.as_deref(), a, d),
        Command::Census { g, d, mode, .. } => cmd_census(cfg, &g, d, &mode),
        Command::Compare { g, d, mode, .. } => cmd_compare(cfg, &g, d, &mode),
        Command::Table { g, d, .. } => cmd_table(cfg, &g, d),
        Command::Constants { d, .. } => cmd_constants(cfg, d),
        Command::Selfcheck { .. } => cmd_selfcheck(),
    }
}

fn delta_context(cfg: &RunConfig) -> DensityContext {
    DensityContext::new(cfg.t_max.max(cfg.n_max) as usize)
}

fn density_estimate(
    cfg: &RunConfig,
    kind: &str,
    base: Option<&DecomposedBase>,
    a: u64,
    d: u64,
) -> Result<(DensityEstimate, DensityKind)> {
    let k = match kind {
        "rho" => DensityKind::RhoG,
        "rho-avg" => DensityKind::RhoAvg,
        "delta" => DensityKind::Delta,
        "delta0" => DensityKind::Delta0,
        "delta-avg" => DensityKind::DeltaAvg,
        other => bail!("unknown density kind {other:?}"),
    };
    let needs_g = matches!(k, DensityKind::RhoG | DensityKind::Delta | DensityKind::Delta0);
    if needs_g && base.is_none() {
        bail!("kind {kind} requires --g");
    }
    let est = match k {
        DensityKind::RhoG | DensityKind::RhoAvg => {
            let ctx = DensityContext::new(cfg.w_max as usize);
            parallel::rho_profile_par(k, base, d, cfg.w_max, &ctx)?[(a % d.max(1)) as usize]
        }
        _ => {
            let ctx = delta_context(cfg);
            parallel::delta_profile_par(k, base, d, cfg.t_max, cfg.n_max, &ctx)?
                [(a % d.max(1)) as usize]
        }
    };
    Ok((est, k))
}

fn cmd_density(cfg: &RunConfig, kind: &str, g: Option<&str>, a: u64, d: u64) -> Result<ExitCode> {
    if d == 0 {
        bail!("modulus d must be positive");
    }
    let base = g.map(parse_base).transpose()?;
    let a = normalized_a(a, d);
    let (est, k) = density_estimate(cfg, kind, base.as_ref(), a, d)?;
    let red = reduce_modulus(k, a, d);
    let record = formats::DensityRecord {
        schema: formats::DENSITY_SCHEMA.into(),
        kind: kind.into(),
        g: g.map(String::from),
        a,
        d,
        value: est.value,
        tail_bound: est.tail_bound,
        method: method_name(est.method).into(),
        params: formats::Params {
            t_max: cfg.t_max,
            n_max: cfg.n_max,
            w_max: cfg.w_max,
        },
        reduction: formats::ReductionRecord {
            a: red.a,
            d: red.d,
            scale: format!("{}", red.scale),
        },
    };
    print_rendered(cfg, &record)?;
    Ok(ExitCode::SUCCESS)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::DirectSeries => "direct_series",
        Method::WForm => "w_form",
        Method::CharacterForm => "character_form",
        Method::ClosedForm => "closed_form",
        Method::Reduced => "reduced",
    }
}

fn parse_mode(mode: &str) -> Result<CensusMode> {
    match mode {
        "order" => Ok(CensusMode::Order),
        "index" => Ok(CensusMode::Index),
        other => bail!("unknown mode {other:?} (order|index)"),
    }
}

/// Fetch the per-prime residue stream for (g, x), through the cache when one
/// is configured.
fn obtain_stream(cfg: &RunConfig, base: &DecomposedBase) -> Result<ResidueStream> {
    if let Some(dir) = &cfg.cache_dir {
        if let Some(stream) = cache::read_stream(dir, base, cfg.x)? {
            return Ok(stream);
        }
    }
    if cfg.cache_only {
        bail!("no cached residue stream for g, x = {} and sieving is disabled", cfg.x);
    }
    if cfg.x > ordidx_core::empirical::MAX_SIEVE_BOUND {
        bail!("x = {} exceeds the supported bound", cfg.x);
    }
    let spf = if cfg.x <= 100_000_000 {
        Some(SpfSieve::new(cfg.x as usize + 1))
    } else {
        None
    };
    let stream = parallel::residue_stream_par(base, cfg.x, spf.as_ref());
    if let (Some(dir), true) = (&cfg.cache_dir, cfg.cache_residues) {
        cache::write_stream(dir, base, &stream)?;
    }
    Ok(stream)
}

fn cmd_census(cfg: &RunConfig, g: &str, d: u64, mode: &str) -> Result<ExitCode> {
    let base = parse_base(g)?;
    let mode_v = parse_mode(mode)?;
    let stream = obtain_stream(cfg, &base)?;
    let census = stream.census_view(&base, d.max(1), mode_v);
    let record = formats::CensusRecord {
        schema: formats::CENSUS_SCHEMA.into(),
        g: g.into(),
        x: census.x,
        d: census.d,
        mode: mode.into(),
        counts: census.counts,
        total: census.total,
    };
    print_rendered(cfg, &record)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(cfg: &RunConfig, g: &str, d: u64, mode: &str) -> Result<ExitCode> {
    let base = parse_base(g)?;
    let mode_v = parse_mode(mode)?;
    let stream = obtain_stream(cfg, &base)?;
    let census = stream.census_view(&base, d.max(1), mode_v);
    let profile = match mode_v {
        CensusMode::Order => {
            let ctx = delta_context(cfg);
            parallel::delta_profile_par(
                DensityKind::Delta,
                Some(&base),
                d,
                cfg.t_max,
                cfg.n_max,
                &ctx,
            )?
        }
        CensusMode::Index => {
            let ctx = DensityContext::new(cfg.w_max as usize);
            parallel::rho_profile_par(DensityKind::RhoG, Some(&base), d, cfg.w_max, &ctx)?
        }
    };
    let mut rows = Vec::with_capacity(d as usize);
    let mut all_pass = true;
    for a in 0..d {
        let empirical = census.fraction(a);
        let est = profile[a as usize];
        let diff = (empirical - est.value).abs();
        let pass = diff <= cfg.tolerance;
        all_pass &= pass;
        rows.push(formats::CompareRow {
            a,
            empirical,
            theoretical: est.value,
            diff,
            tail_bound: est.tail_bound,
            pass,
        });
    }
    let record = formats::CompareRecord {
        schema: formats::COMPARE_SCHEMA.into(),
        g: g.into(),
        d,
        x: cfg.x,
        mode: mode.into(),
        tolerance: cfg.tolerance,
        rows,
        all_pass,
    };
    print_rendered(cfg, &record)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_table(cfg: &RunConfig, g: &str, d: u64) -> Result<ExitCode> {
    let base = parse_base(g)?;
    let dctx = delta_context(cfg);
    let wctx = DensityContext::new(cfg.w_max as usize);
    let delta =
        parallel::delta_profile_par(DensityKind::Delta, Some(&base), d, cfg.t_max, cfg.n_max, &dctx)?;
    let delta0 = parallel::delta_profile_par(
        DensityKind::Delta0,
        Some(&base),
        d,
        cfg.t_max,
        cfg.n_max,
        &dctx,
    )?;
    let delta_avg =
        parallel::delta_profile_par(DensityKind::DeltaAvg, None, d, cfg.t_max, cfg.n_max, &dctx)?;
    let rho = parallel::rho_profile_par(DensityKind::RhoG, Some(&base), d, cfg.w_max, &wctx)?;
    let rho_avg = parallel::rho_profile_par(DensityKind::RhoAvg, None, d, cfg.w_max, &wctx)?;
    let rows = (0..d)
        .map(|a| formats::TableRow {
            a,
            delta_g: delta[a as usize].value,
            delta0_g: delta0[a as usize].value,
            delta_avg: delta_avg[a as usize].value,
            rho_g: rho[a as usize].value,
            rho_avg: rho_avg[a as usize].value,
        })
        .collect();
    let record = formats::TableRecord {
        g: g.into(),
        d,
        rows,
    };
    print_rendered(cfg, &record)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_constants(cfg: &RunConfig, d: u64) -> Result<ExitCode> {
    let chars = enumerate_characters(d.max(1));
    let constants: Vec<formats::ConstantRow> = chars
        .iter()
        .enumerate()
        .map(|(index, chi)| {
            let v = a_chi(chi, cfg.prime_bound);
            formats::ConstantRow {
                index,
                order: chi.order,
                is_principal: chi.is_principal,
                re: v.value.re,
                im: v.value.im,
                error_estimate: v.error_estimate,
            }
        })
        .collect();
    let record = formats::ConstantsRecord {
        d,
        prime_bound: cfg.prime_bound,
        constants,
    };
    print_rendered(cfg, &record)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_selfcheck() -> Result<ExitCode> {
    use ordidx_core::arith::{kronecker, Rational};
    use ordidx_core::densities::Truncation;

    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("selfcheck: {name} ... {}", if pass { "ok" } else { "FAIL" });
        ok &= pass;
    };

    check("prime count pi(10^5)", ordidx_core::empirical::prime_count(100_000) == 9592);

    let mut kr = true;
    for d in [-20i64, -8, 5, 8, 13] {
        for n in 1..=2 * d.unsigned_abs() as i64 {
            kr &= kronecker(d, n) == kronecker(d, n + d.abs());
        }
    }
    check("kronecker periodicity", kr);

    let ctx = DensityContext::new(4096);
    let two = decompose(Rational::from_integer(2)).unwrap();
    let t = Truncation::Rect {
        t_max: 512,
        n_max: 512,
    };

    let mut part = true;
    for dd in [2u64, 3, 4] {
        let prof = ordidx_core::densities::delta_g_profile(&two, dd, t, &ctx).unwrap();
        let sum: f64 = prof.iter().map(|e| e.value).sum();
        let tails: f64 = prof.iter().map(|e| e.tail_bound).sum();
        part &= (sum - 1.0).abs() <= tails;
    }
    check("delta partition sums", part);

    let mut zero = true;
    for dd in 1..=8u64 {
        let full = ordidx_core::densities::delta_g_profile(&two, dd, t, &ctx).unwrap();
        let plain = ordidx_core::densities::delta0_g_profile(&two, dd, t, &ctx).unwrap();
        zero &= full[0].value == plain[0].value;
    }
    check("delta equals delta0 on the zero class", zero);

    let mut rz = true;
    for dd in 1..=8u64 {
        let est = ordidx_core::densities::rho_g_series(&two, 0, dd, 2048, &ctx).unwrap();
        let deg = ordidx_core::quadfields::kummer_degree(&two, dd, dd).unwrap();
        rz &= (est.value - 1.0 / deg as f64).abs() < 1e-12;
    }
    check("rho zero-class closed form", rz);

    let mut cf = true;
    for dd in 1..=8u64 {
        let est = ordidx_core::densities::rho_avg_series(0, dd, 2048, &ctx).unwrap();
        let r = rho_closed_form(0, dd).unwrap();
        cf &= (est.value - *r.numer() as f64 / *r.denom() as f64).abs() < 1e-12;
    }
    check("rho average closed form", cf);

    // degree oracle at reduced scale: splitting fractions at x = 10^5
    let mut deg_ok = true;
    for g in [2i64, -2, 5] {
        let b = decompose(Rational::from_integer(g)).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        let mut total = 0u64;
        ordidx_core::empirical::for_each_prime_in_range(2, 100_001, |p| {
            total += 1;
            let Ok(r) = ordidx_core::empirical::residue_mod_p(&b, p) else {
                return;
            };
            for s in [3u64, 4, 8, 12] {
                if (p - 1) % s == 0 {
                    for k in [1u64, 2, 4] {
                        if s % k == 0 && ordidx_core::arith::powmod(r, (p - 1) / k, p) == 1 {
                            *counts.entry((g, s, k)).or_insert(0u64) += 1;
                        }
                    }
                }
            }
        });
        for s in [3u64, 4, 8, 12] {
            for k in [1u64, 2, 4] {
                if s % k != 0 {
                    continue;
                }
                let c = counts.get(&(g, s, k)).copied().unwrap_or(0);
                let frac = c as f64 / total as f64;
                let deg = ordidx_core::quadfields::kummer_degree(&b, s, k).unwrap();
                deg_ok &= (frac - 1.0 / deg as f64).abs() < 0.05;
            }
        }
    }
    check("kummer degree splitting oracle", deg_ok);

    let mut orth = true;
    for dd in 1..=12u64 {
        let chars = enumerate_characters(dd);
        orth &= chars.len() as u64 == ordidx_core::arith::euler_phi(dd);
    }
    check("character group sizes", orth);

    let census =
        ordidx_core::empirical::census(&two, 2, 100_000, CensusMode::Order).unwrap();
    check(
        "even order census near 17/24",
        (census.fraction(0) - 17.0 / 24.0).abs() < 0.01,
    );

    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
