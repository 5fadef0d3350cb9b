//! Parse-independent reduction pipeline: quotient, approximate, unfold.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::approx::{self, restrict};
use crate::error::Result;
use crate::net::ColoredNet;
use crate::par::Exec;
use crate::ptnet::PTNet;
use crate::quotient::{self, quotient};
use crate::unfold::{colored_stats, pt_stats, unfold_with, NetStats, UnfoldOptions, DEFAULT_SIZE_CAP};

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub quotient: bool,
    pub approximate: bool,
    pub quotient_budget: Duration,
    pub approx_budget: Duration,
    pub prune_orphans: bool,
    pub size_cap: u128,
    pub exec: Exec,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            quotient: true,
            approximate: true,
            quotient_budget: quotient::DEFAULT_BUDGET,
            approx_budget: approx::DEFAULT_BUDGET,
            prune_orphans: false,
            size_cap: DEFAULT_SIZE_CAP,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct QuotientReport {
    pub enabled: bool,
    /// Equals the color count when quotienting is off.
    pub classes: usize,
    pub colors_before: u128,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ApproxReport {
    pub enabled: bool,
    pub colors_before: u128,
    pub colors_after: u128,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub quotient_ms: f64,
    pub approx_ms: f64,
    pub unfold_ms: f64,
}

/// Everything the `--stats` report records about one run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub colored: NetStats,
    pub quotient: QuotientReport,
    pub approximation: ApproxReport,
    pub unfolded: NetStats,
    pub timings: Timings,
}

pub struct Output {
    pub net: PTNet,
    pub report: Report,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// The reduced colored net that will be unfolded, with the report so far.
pub fn reduce(net: &ColoredNet, opts: &PipelineOptions) -> Result<(ColoredNet, Report)> {
    let mut report = Report {
        colored: colored_stats(net),
        ..Default::default()
    };
    let mut current = net.clone();
    if opts.quotient {
        let start = Instant::now();
        let s = quotient::stabilize_with_status(&current, opts.quotient_budget);
        report.quotient = QuotientReport {
            enabled: true,
            classes: s.partition.class_count(),
            colors_before: current.color_count(),
            budget_exhausted: s.exhausted,
        };
        // the finest partition would only rename transitions
        if !s.partition.is_finest() {
            current = quotient(&current, &s.partition)?.net;
        }
        report.timings.quotient_ms = ms(start.elapsed());
    } else {
        let colors = current.color_count();
        report.quotient = QuotientReport {
            classes: colors as usize,
            colors_before: colors,
            ..Default::default()
        };
    }
    if opts.approximate {
        let start = Instant::now();
        let a = approx::fixed_point_with_status(&current, opts.approx_budget, opts.exec);
        let before = current.color_count();
        current = restrict(&current, &a.approximation)?;
        report.approximation = ApproxReport {
            enabled: true,
            colors_before: before,
            colors_after: current.color_count(),
            budget_exhausted: a.exhausted,
        };
        report.timings.approx_ms = ms(start.elapsed());
    } else {
        let colors = current.color_count();
        report.approximation = ApproxReport {
            colors_before: colors,
            colors_after: colors,
            ..Default::default()
        };
    }
    Ok((current, report))
}

pub fn run(net: &ColoredNet, opts: &PipelineOptions) -> Result<Output> {
    let (reduced, mut report) = reduce(net, opts)?;
    let start = Instant::now();
    let mut pt = unfold_with(
        &reduced,
        &UnfoldOptions {
            exec: opts.exec,
            size_cap: opts.size_cap,
        },
    )?;
    if opts.prune_orphans {
        pt.prune_orphans();
    }
    report.timings.unfold_ms = ms(start.elapsed());
    report.unfolded = pt_stats(&pt);
    Ok(Output { net: pt, report })
}
