//! Command-line harness for `sbmkit`.
//!
//! Every invocation resolves its [`config::Settings`], checks that the output
//! directory is writable, runs one command and finishes with a
//! `manifest.json` that lists each produced file with its SHA-256.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::CommonArgs;
use crate::plot::PlotKind;

#[derive(Parser, Debug)]
#[command(name = "sbmkit", version, about = "Potential theory of subordinate Brownian motions, numerically")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Laplace exponents of the catalog.
    #[command(subcommand)]
    Phi(PhiCmd),
    /// Regular-variation diagnostics of φ or φ′.
    Regvar {
        #[command(subcommand)]
        cmd: RegvarCmd,
    },
    /// Lévy (`mu`) or potential (`u`) density on a grid.
    Density {
        kind: DensityArg,
        #[arg(long, default_value = "inversion")]
        method: String,
    },
    /// Jump kernel (`j`) or Green function (`g`) on a radial grid.
    Kernel { kind: KernelArg },
    /// Ratio sweeps against the small-radius comparison functions.
    Sweep {
        #[command(subcommand)]
        cmd: SweepCmd,
    },
    /// Ratio sweep of the power-weighted exponential integral.
    #[command(name = "lemmaA1")]
    LemmaA1 {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Power `b` of the weight near zero.
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long, value_enum, default_value_t = Weight::Power)]
        weight: Weight,
    },
    /// Monte Carlo simulation.
    Mc {
        #[command(subcommand)]
        cmd: McCmd,
    },
    /// Run an acceptance suite; exits nonzero if any check fails.
    Verify { suite: String },
    /// Plot CSV columns as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        /// Comma-separated y columns, one series each.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        logx: bool,
        #[arg(long)]
        logy: bool,
        #[arg(long, value_enum, default_value_t = PlotKind::Line)]
        kind: PlotKind,
        #[arg(long)]
        title: Option<String>,
        /// File name inside the output directory.
        #[arg(long, default_value = "plot.svg")]
        out: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum PhiCmd {
    /// The built-in catalog.
    List,
    /// φ and φ′ on the λ grid.
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Phi,
    PhiPrime,
}

#[derive(Subcommand, Debug)]
pub enum RegvarCmd {
    /// Fitted index over decades ending at `--lambda-max`.
    Index {
        #[arg(long, value_enum, default_value_t = Target::Phi)]
        target: Target,
        #[arg(long, default_value_t = 1e8)]
        lambda_max: f64,
        #[arg(long, default_value_t = 4)]
        decades: usize,
    },
    /// de Haan behaviour of `ℓ(λ) = λφ′(λ)`.
    Dehaan {
        #[arg(long, default_value_t = 1e8)]
        lambda_max: f64,
    },
    /// Potter constant on a probe mesh.
    Potter {
        #[arg(long, value_enum, default_value_t = Target::PhiPrime)]
        target: Target,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_min: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DensityArg {
    Mu,
    U,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    J,
    G,
}

#[derive(Subcommand, Debug)]
pub enum SweepCmd {
    /// Jump kernel ratio.
    Thm41,
    /// Green function ratio (both forms when α = 2).
    Thm42,
    /// Empirical constant of the Green difference bound at each grid radius.
    Greendiff {
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Weight {
    /// `t^(-b)`.
    Power,
    /// `t^(-b)(1 + t)`.
    PowerOnePlus,
    /// `log(e + 1/t)`; use with `--b 0`.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Exterior,
    Half,
}

#[derive(Subcommand, Debug)]
pub enum McCmd {
    /// Laplace identity of the subordinator sampler at time `--t`.
    Subordinator {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        lambdas: Vec<f64>,
    },
    /// Exit records from the ball of radius `--radius` about the origin.
    Exit {
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
    },
    /// Green function of the ball from the centre, as a shell histogram.
    Green {
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Exit distribution density on exterior shells.
    Poisson {
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Shell edges as multiples of the radius.
        #[arg(long, value_delimiter = ',', default_value = "1,1.25,1.5,2,3,5,10")]
        edges: Vec<f64>,
    },
    /// Shell-exit probabilities across radii.
    Ks {
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1")]
        radii: Vec<f64>,
    },
    /// Modulus of a Monte Carlo harmonic function across radii.
    Harmonic {
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        radii: Vec<f64>,
        #[arg(long, value_enum, default_value_t = TargetArg::Half)]
        target: TargetArg,
    },
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli, command_line: Vec<String>) -> Result<i32> {
    commands::execute(cli, command_line)
}
