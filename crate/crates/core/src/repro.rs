//! Data behind the two distribution figures: short sums of a Dirichlet character of
//! maximal order and of Kl_2, both modulo 7927.

use crate::error::Result;
use crate::finite_field::FieldCtx;
use crate::poly::IntRational;
use crate::short_sums::{
    gof_report, histogram, interval_offsets, window_sums, Axis, GofConfig, GofReport, Histogram,
    ShortSumEnsemble,
};
use crate::trace_functions::{kloosterman_all, kummer_all, Method, TraceTable};
use std::sync::Arc;

pub const FIGURE_PRIME: u64 = 7927;
pub const FIGURE1_H: [usize; 3] = [3, 50, 1000];
pub const FIGURE2_H: [usize; 2] = [100, 1300];
pub const FIGURE2_BINS: usize = 48;
pub const FIGURE2_RANGE: (f64, f64) = (-4.0, 4.0);

pub fn figure_field() -> Result<Arc<FieldCtx>> {
    Ok(Arc::new(FieldCtx::new(FIGURE_PRIME, 1, None)?))
}

/// x ↦ χ(x) for a character χ of order p − 1.
pub fn figure1_table(ctx: &Arc<FieldCtx>) -> Result<TraceTable> {
    kummer_all(ctx, ctx.q() - 1, 1, &IntRational::polynomial(&[0, 1]))
}

pub fn figure2_table(ctx: &Arc<FieldCtx>) -> Result<TraceTable> {
    kloosterman_all(ctx, 2, Method::Fast)
}

#[derive(Clone, Debug)]
pub struct Figure1Series {
    pub h: usize,
    pub ensemble: ShortSumEnsemble,
    pub gof: GofReport,
}

#[derive(Clone, Debug)]
pub struct Figure2Series {
    pub h: usize,
    pub ensemble: ShortSumEnsemble,
    pub histogram: Histogram,
    pub gof: GofReport,
}

pub fn figure1(ctx: &Arc<FieldCtx>, config: &GofConfig) -> Result<Vec<Figure1Series>> {
    let table = figure1_table(ctx)?;
    FIGURE1_H
        .iter()
        .map(|&h| {
            let ensemble = window_sums(&table, &interval_offsets(ctx, h)?);
            let gof = gof_report(&ensemble, config)?;
            Ok(Figure1Series { h, ensemble, gof })
        })
        .collect()
}

pub fn figure2(ctx: &Arc<FieldCtx>, config: &GofConfig) -> Result<Vec<Figure2Series>> {
    let table = figure2_table(ctx)?;
    FIGURE2_H
        .iter()
        .map(|&h| {
            let ensemble = window_sums(&table, &interval_offsets(ctx, h)?);
            let histogram = histogram(&ensemble, Axis::Re, FIGURE2_BINS, FIGURE2_RANGE)?;
            let gof = gof_report(&ensemble, config)?;
            Ok(Figure2Series {
                h,
                ensemble,
                histogram,
                gof,
            })
        })
        .collect()
}
