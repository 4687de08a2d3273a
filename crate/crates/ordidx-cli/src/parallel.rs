//! Deterministic parallel drivers: work is split over a fixed block
//! partition (independent of thread count) and partial results are merged
//! in block order, so output depends only on the configuration.

use ordidx_core::arith::{DecomposedBase, SpfSieve};
use ordidx_core::densities::{
    self, average_tail, reduce_modulus, series_tail, DensityContext, DensityEstimate, DensityKind,
    Method, Truncation,
};
use ordidx_core::empirical::{residue_pairs_range, residue_pairs_range_nospf, ResidueStream};
use rayon::prelude::*;

const BLOCKS: u64 = 64;

fn block_bounds(lo: u64, hi: u64, blocks: u64) -> Vec<(u64, u64)> {
    let span = hi - lo + 1;
    let blocks = blocks.min(span).max(1);
    (0..blocks)
        .map(|i| {
            let a = lo + span * i / blocks;
            let b = lo + span * (i + 1) / blocks - 1;
            (a, b)
        })
        .collect()
}

/// Parallel per-prime residue stream; identical to the serial result.
pub fn residue_stream_par(base: &DecomposedBase, x: u64, spf: Option<&SpfSieve>) -> ResidueStream {
    let ranges = block_bounds(2, x, 256);
    let chunks: Vec<Vec<(u32, u32)>> = ranges
        .par_iter()
        .map(|&(lo, hi)| match spf {
            Some(spf) => residue_pairs_range(base, lo, hi + 1, spf),
            None => residue_pairs_range_nospf(base, lo, hi + 1),
        })
        .collect();
    ResidueStream {
        x,
        pairs: chunks.concat(),
    }
}

fn merge_blocks(blocks: Vec<Vec<f64>>, d: u64) -> Vec<f64> {
    let mut acc = vec![0.0f64; d as usize];
    for block in blocks {
        for (a, v) in acc.iter_mut().zip(block) {
            *a += v;
        }
    }
    acc
}

/// Parallel delta-family profile, reduced first, blocked over the t range.
pub fn delta_profile_par(
    kind: DensityKind,
    base: Option<&DecomposedBase>,
    d: u64,
    t_max: u64,
    n_max: u64,
    ctx: &DensityContext,
) -> anyhow::Result<Vec<DensityEstimate>> {
    let trunc = Truncation::Rect { t_max, n_max };
    let tail = match kind {
        DensityKind::DeltaAvg => average_tail(trunc),
        _ => series_tail(base.expect("base").h, trunc),
    };
    let mut cache: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();
    let mut out = Vec::with_capacity(d as usize);
    for a in 0..d.max(1) {
        let red = reduce_modulus(kind, a, d);
        if !cache.contains_key(&red.d) {
            let blocks: Vec<Vec<f64>> = block_bounds(1, t_max, BLOCKS)
                .par_iter()
                .map(|&(lo, hi)| {
                    densities::delta_partial_profile(kind, base, red.d, lo, hi, n_max, ctx)
                        .expect("context covers truncation")
                })
                .collect();
            cache.insert(red.d, merge_blocks(blocks, red.d));
        }
        let raw = cache[&red.d][red.a as usize];
        let scale = *red.scale.numer() as f64 / *red.scale.denom() as f64;
        out.push(DensityEstimate {
            value: raw * scale,
            tail_bound: tail * scale,
            truncation: trunc,
            method: if scale == 1.0 {
                Method::DirectSeries
            } else {
                Method::Reduced
            },
        });
    }
    Ok(out)
}

/// Parallel rho-family profile in the w-form.
pub fn rho_profile_par(
    kind: DensityKind,
    base: Option<&DecomposedBase>,
    d: u64,
    w_max: u64,
    ctx: &DensityContext,
) -> anyhow::Result<Vec<DensityEstimate>> {
    let trunc = Truncation::W { w_max };
    let tail = match kind {
        DensityKind::RhoAvg => average_tail(trunc),
        _ => series_tail(base.expect("base").h, trunc),
    };
    let blocks: Vec<Vec<f64>> = block_bounds(1, w_max, BLOCKS)
        .par_iter()
        .map(|&(lo, hi)| {
            densities::rho_partial_profile(kind, base, d.max(1), lo, hi, ctx)
                .expect("context covers truncation")
        })
        .collect();
    let merged = merge_blocks(blocks, d.max(1));
    Ok(merged
        .into_iter()
        .map(|value| DensityEstimate {
            value,
            tail_bound: tail,
            truncation: trunc,
            method: Method::WForm,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ordidx_core::arith::{decompose, Rational};

    #[test]
    fn parallel_matches_serial() {
        let ctx = DensityContext::new(1 << 12);
        let base = decompose(Rational::from_integer(-4)).unwrap();
        let par = delta_profile_par(DensityKind::Delta, Some(&base), 8, 512, 512, &ctx).unwrap();
        let ser = ordidx_core::densities::delta_g_profile(
            &base,
            8,
            Truncation::Rect {
                t_max: 512,
                n_max: 512,
            },
            &ctx,
        )
        .unwrap();
        for (p, s) in par.iter().zip(&ser) {
            assert!((p.value - s.value).abs() < 1e-12);
        }

        let par = rho_profile_par(DensityKind::RhoG, Some(&base), 8, 4096, &ctx).unwrap();
        let ser = ordidx_core::densities::rho_g_profile(&base, 8, 4096, &ctx).unwrap();
        for (p, s) in par.iter().zip(&ser) {
            assert!((p.value - s.value).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_census_matches_serial() {
        let base = decompose(Rational::from_integer(2)).unwrap();
        let spf = SpfSieve::new(50_001);
        let par = residue_stream_par(&base, 50_000, Some(&spf));
        let ser = ordidx_core::empirical::residue_stream(&base, 50_000, &spf);
        assert_eq!(par, ser);
        let nospf = residue_stream_par(&base, 50_000, None);
        assert_eq!(nospf, ser);
    }
}
