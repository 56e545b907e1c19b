mod config;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fconv_core::transform::default_dual_grid;
use fconv_core::valuations::default_r_values;
use fconv_core::{
    conjugate_grid, conjugate_max_affine, harness, make_radial_density, steiner_expand, DensityKind, Grid,
    Suite,
};
use serde_json::json;

use config::RunConfig;

const PASS: u8 = 0;
const PROPERTY_FAILURE: u8 = 1;
const USAGE_ERROR: u8 = 2;

/// Half-width of the symmetric sampling box for grid inputs.
const BOX_HALF_WIDTH: f64 = 2.0;

#[derive(Parser)]
#[command(name = "fconv", version, about = "Valuations on convex functions and their property harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run property suites and write one report per suite.
    Verify {
        /// JSON run config; the bundled default runs every suite in n = 1, 2.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only this suite.
        #[arg(long)]
        only: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the polynomial m*(v + r q) in r and attribute its coefficients.
    Steiner {
        /// Function document `{"dim": n, "function": {...}}`, inline or a file path.
        #[arg(long = "fn")]
        function: String,
        /// Density spec of kind alpha, inline or a file path.
        #[arg(long)]
        density: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        r_values: Option<Vec<f64>>,
        /// Nodes per axis of the sampling grid.
        #[arg(long)]
        nodes: Option<usize>,
        /// Writes the samples as CSV (r, components).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the full expansion as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Conjugate a function: a cell complex for piecewise-linear inputs, a dual grid otherwise.
    Conjugate {
        #[arg(long = "fn")]
        function: String,
        /// Nodes per axis when sampling a non-piecewise-linear input.
        #[arg(long)]
        nodes: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the JSON schema of report documents.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            config,
            only,
            seed,
            out,
        } => verify(config, only, seed, out),
        Command::Steiner {
            function,
            density,
            r_values,
            nodes,
            csv,
            json,
        } => steiner(&function, &density, r_values, nodes, csv, json),
        Command::Conjugate { function, nodes, out } => conjugate(&function, nodes, out),
        Command::Schema => {
            print!("{}", report::REPORT_SCHEMA);
            Ok(PASS)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}

fn verify(
    config: Option<PathBuf>,
    only: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let mut run = RunConfig::load(config.as_deref())?;
    if let Some(s) = seed {
        run.seed = Some(s);
    }
    if let Some(dir) = out {
        run.output.path = dir;
    }
    let suites = match only {
        Some(name) => vec![name.parse::<Suite>()?],
        None => run.suites()?,
    };
    let cfg = run.harness();
    cfg.validate().context("invalid config")?;
    let mut reports = Vec::with_capacity(suites.len());
    for suite in suites {
        let r = harness::run(suite, &cfg).with_context(|| format!("suite {suite}"))?;
        report::write_report(&run.output.path, run.output.format, &r)?;
        reports.push(r);
    }
    report::print_summary(&reports)?;
    Ok(if reports.iter().all(|r| r.pass) {
        PASS
    } else {
        PROPERTY_FAILURE
    })
}

fn default_nodes(dim: usize) -> usize {
    match dim {
        1 => 257,
        2 => 129,
        _ => 33,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:+.9e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn steiner(
    function: &str,
    density: &str,
    r_values: Option<Vec<f64>>,
    nodes: Option<usize>,
    csv_path: Option<PathBuf>,
    as_json: bool,
) -> anyhow::Result<u8> {
    let doc = input::function_doc(function)?;
    let d = input::density_spec(density)?;
    if d.kind != DensityKind::Alpha {
        bail!("steiner needs a density of kind alpha");
    }
    let alpha = make_radial_density(d.kind, d.profile)?;
    let n = doc.dim;
    let grid = Grid::symmetric(n, BOX_HALF_WIDTH, nodes.unwrap_or(default_nodes(n)))?;
    let v = doc.function.sample(&grid)?;
    let r_values = r_values.unwrap_or_else(|| default_r_values(n));
    let s = steiner_expand(&v, &alpha, &r_values)?;

    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        let mut header = vec!["r".to_string()];
        header.extend((0..n).map(|i| format!("m{i}")));
        w.write_record(&header)?;
        for (r, m) in s.r_values.iter().zip(&s.samples) {
            let mut row = vec![r.to_string()];
            row.extend(m.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }

    if as_json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("dimension {n}, degree {}, {} nodes per axis", s.degree, grid.resolution[0]);
        println!("coefficients of r^k:");
        for (k, c) in s.coefficients.iter().enumerate() {
            println!("  k={k}  {}", fmt_vec(c));
        }
        println!("attribution:");
        for a in &s.attributed {
            let z = a
                .z_part
                .as_ref()
                .map_or("-".to_string(), |(j, z)| format!("z[j={j}] {}", fmt_vec(z)));
            let t = a
                .t_part
                .as_ref()
                .map_or("-".to_string(), |(j, t)| format!("t[j={j}] {}", fmt_vec(t)));
            println!("  k={}  {z}  {t}  cross-check {:.3e}", a.power, a.cross_check_residual);
        }
        println!("fit residual {:.3e}", s.fit_residual);
        println!("condition number {:.3e}", s.condition_number);
        println!("error estimate {:.3e}", s.error_estimate);
        if let Some(w) = &s.warning {
            println!("warning: {w}");
        }
    }
    Ok(PASS)
}

fn conjugate(function: &str, nodes: Option<usize>, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let doc = input::function_doc(function)?;
    let n = doc.dim;
    let value = if doc.function.is_piecewise_linear() {
        let v = doc.function.to_max_affine(n)?;
        let c = conjugate_max_affine(&v);
        let cells: Vec<_> = c
            .cells()
            .iter()
            .map(|cell| {
                json!({
                    "vertices": cell.cell.vertices(),
                    "gradient_point": cell.gradient_point,
                    "mass": cell.cell.volume(),
                    "cell_moment": cell.cell.moment_vector(),
                    "primal_value": cell.primal_value,
                })
            })
            .collect();
        json!({
            "representation": "complex",
            "dim": n,
            "domain": c.domain().vertices(),
            "total_mass": c.total_volume(),
            "cells": cells,
        })
    } else {
        let grid = Grid::symmetric(n, BOX_HALF_WIDTH, nodes.unwrap_or(default_nodes(n)))?;
        let v = doc.function.sample(&grid)?;
        let dual = default_dual_grid(&v, &grid.resolution)?;
        let u = conjugate_grid(&v, Some(&dual))?;
        json!({
            "representation": "grid",
            "dim": n,
            "lower": u.grid().lower,
            "upper": u.grid().upper,
            "resolution": u.grid().resolution,
            "values": u.values(),
        })
    };
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(PASS)
}
