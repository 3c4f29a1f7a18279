//! Command-line front end: solve and certify extension problems stored in
//! structured text files, and print tables with full float precision.
//!
//! Exit status is 0 exactly when every certificate the invocation produced
//! passed, 1 when some certificate failed, and 2 on usage or input errors.

use clap::{Parser, Subcommand};
use hyperlip::instance::fmt_float;
use hyperlip::{
    build_net, certify_hull, choose_parameters, compute_c_star, distance, loss_curve,
    read_instance, read_sample, run_pipeline, solve_one_point, verify_two_center_patch,
    Result, SolverOptions,
};
use hyperlip::sampling::{sample_ball, seeded_rng};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hyperlip",
    version,
    about = "Certified Lipschitz extension of contracting maps between hyperbolic spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimal one-point extension for every challenge point in
    /// an instance file and certify each optimum.
    SolveOnePoint {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
    /// Print the loss-bound table over a grid of contraction constants as
    /// CSV (columns C, r_star, c_hat, arcsinh_value, c_star).
    VerifyBounds {
        #[arg(long, value_delimiter = ',', required = true)]
        c_grid: Vec<f64>,
    },
    /// Build a maximal epsilon-net with R-separated bins over a sample
    /// file and certify covering, separation, and binning.
    Net {
        sample: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "R")]
        r: f64,
    },
    /// Verify patch compatibility at the first two challenge points of an
    /// instance, with parameters derived from the configured constant.
    TwoCenter {
        instance: PathBuf,
        /// Contraction constant used to derive all pipeline scales.
        #[arg(long)]
        config: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full certified extension over the instance's challenge
    /// points and write the evaluated map as CSV.
    Pipeline {
        instance: PathBuf,
        /// Contraction constant used to derive all pipeline scales.
        #[arg(long)]
        config: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the extension-loss curve over a grid of constants as CSV
    /// (columns C, lower_bound, c_star, c_prime_empirical).
    LossCurve {
        #[arg(long, value_delimiter = ',', required = true)]
        c_grid: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::SolveOnePoint {
            instance,
            tol,
            max_iters,
        } => {
            let inst = read_instance(&instance)?;
            println!(
                "instance {}: {} sources, dim {}, declared C = {}",
                instance.display(),
                inst.map.len(),
                inst.map.dim(),
                fmt_float(inst.map.declared_c())
            );
            let options = SolverOptions {
                tol,
                max_iters,
                ..SolverOptions::default()
            };
            let mut all_pass = true;
            for (k, xi) in inst.challenges.iter().enumerate() {
                let sol = solve_one_point(&inst.map, xi, &options)?;
                let cert = certify_hull(&sol, &inst.map)?;
                println!(
                    "challenge {k}: c_xi = {} residual = {} iterations = {} converged = {}",
                    fmt_float(sol.c_xi),
                    fmt_float(sol.residual),
                    sol.iterations,
                    sol.converged
                );
                let coords: Vec<String> =
                    sol.eta.coords().iter().map(|&x| fmt_float(x)).collect();
                println!("  eta = {}", coords.join(" "));
                println!(
                    "  hull: norm = {} active = {:?} {}",
                    fmt_float(cert.norm),
                    cert.active_indices,
                    if cert.pass { "PASS" } else { "FAIL" }
                );
                if !cert.pass {
                    println!("  reason: {}", cert.reason);
                    all_pass = false;
                }
            }
            if inst.challenges.is_empty() {
                println!("no challenge points in instance");
            }
            println!("certificates: {}", if all_pass { "PASS" } else { "FAIL" });
            Ok(all_pass)
        }
        Command::VerifyBounds { c_grid } => {
            println!("C,r_star,c_hat,arcsinh_value,c_star");
            let mut all_pass = true;
            for &c in &c_grid {
                let rep = compute_c_star(c)?;
                println!(
                    "{},{},{},{},{}",
                    fmt_float(rep.c),
                    fmt_float(rep.r_star),
                    fmt_float(rep.c_hat),
                    fmt_float(rep.asinh_value),
                    fmt_float(rep.c_star)
                );
                let crossing = (rep.c_hat - rep.asinh_value).abs() <= 1e-6 * rep.c_star;
                if rep.c_star >= 1.0 || !crossing {
                    all_pass = false;
                }
            }
            Ok(all_pass)
        }
        Command::Net { sample, epsilon, r } => {
            let points = read_sample(&sample)?;
            let net = build_net(&points, epsilon, r)?;
            let mut max_cover = 0.0f64;
            for p in &points {
                let ci = net.nearest_center(p);
                max_cover = max_cover.max(distance(p, &net.centers[ci]));
            }
            let mut min_sep = f64::INFINITY;
            let mut min_bin_sep = f64::INFINITY;
            for i in 0..net.centers.len() {
                for j in (i + 1)..net.centers.len() {
                    let d = distance(&net.centers[i], &net.centers[j]);
                    min_sep = min_sep.min(d);
                    if net.bin_of[i] == net.bin_of[j] {
                        min_bin_sep = min_bin_sep.min(d);
                    }
                }
            }
            let cover_ok = max_cover < epsilon;
            let sep_ok = min_sep >= epsilon - 1e-12;
            let bin_ok = min_bin_sep >= r - 1e-12;
            println!("points {}", points.len());
            println!("epsilon {}", fmt_float(epsilon));
            println!("R {}", fmt_float(r));
            println!("centers {}", net.centers.len());
            println!("bins {}", net.num_bins);
            println!("theoretical_n {}", fmt_float(net.theoretical_n));
            println!("max_cover_distance {}", fmt_float(max_cover));
            println!("min_center_separation {}", fmt_float(min_sep));
            println!("min_same_bin_separation {}", fmt_float(min_bin_sep));
            println!("cover {}", if cover_ok { "PASS" } else { "FAIL" });
            println!("separation {}", if sep_ok { "PASS" } else { "FAIL" });
            println!("binning {}", if bin_ok { "PASS" } else { "FAIL" });
            for (k, &idx) in net.center_indices.iter().enumerate() {
                println!("center {k} index {idx} bin {}", net.bin_of[k]);
            }
            Ok(cover_ok && sep_ok && bin_ok)
        }
        Command::TwoCenter {
            instance,
            config,
            seed,
        } => {
            let inst = read_instance(&instance)?;
            if inst.challenges.len() < 2 {
                return Err(hyperlip::Error::TooFewPoints {
                    got: inst.challenges.len(),
                });
            }
            let mut cfg = choose_parameters(config)?;
            cfg.seed = seed;
            let xi = &inst.challenges[0];
            let xi2 = &inst.challenges[1];
            let mut rng = seeded_rng(seed);
            let s1 = sample_ball(&mut rng, xi, cfg.epsilon, cfg.samples_per_ball)?;
            let s2 = sample_ball(&mut rng, xi2, cfg.epsilon, cfg.samples_per_ball)?;
            let report = verify_two_center_patch(&inst.map, xi, xi2, &cfg, &s1, &s2)?;
            println!("center_distance {}", fmt_float(report.xi_distance));
            println!("image_distance {}", fmt_float(report.eta_distance));
            println!(
                "image_ratio {} bound {}",
                fmt_float(report.eta_ratio),
                fmt_float(report.eta_ratio_bound)
            );
            let labels = [
                "sources_sources",
                "patch1_patch1",
                "patch2_patch2",
                "patch1_sources",
                "patch2_sources",
                "patch1_patch2",
            ];
            for (label, m) in labels.iter().zip(report.case_maxima.iter()) {
                println!("case {label} {}", fmt_float(*m));
            }
            if let Some((i, angle)) = report.obtuse_witness {
                println!("obtuse_witness index {i} angle {}", fmt_float(angle));
            }
            println!(
                "patch constants {} {} bound {}",
                fmt_float(report.patch_first.certified_constant),
                fmt_float(report.patch_second.certified_constant),
                fmt_float(report.patch_first.bound)
            );
            println!("additive {}", if report.additive_ok { "PASS" } else { "FAIL" });
            println!("certificates: {}", if report.pass { "PASS" } else { "FAIL" });
            Ok(report.pass)
        }
        Command::Pipeline {
            instance,
            config,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let cfg = choose_parameters(config)?;
            let result = run_pipeline(&inst.map, &inst.challenges, &cfg)?;
            let m = inst.map.dim();
            let mut csv = String::new();
            csv.push_str("index");
            for k in 0..=m {
                csv.push_str(&format!(",x{k}"));
            }
            for k in 0..=m {
                csv.push_str(&format!(",f{k}"));
            }
            csv.push('\n');
            for (i, (p, img)) in result
                .eval_points
                .iter()
                .zip(result.images.iter())
                .enumerate()
            {
                csv.push_str(&i.to_string());
                for &x in p.coords() {
                    csv.push(',');
                    csv.push_str(&fmt_float(x));
                }
                for &x in img.coords() {
                    csv.push(',');
                    csv.push_str(&fmt_float(x));
                }
                csv.push('\n');
            }
            fs::write(&out, csv)?;
            println!(
                "net: {} centers, {} bins, theoretical N = {}",
                result.net_size,
                result.num_bins,
                fmt_float(result.theoretical_n)
            );
            let max_bin = result
                .per_bin_constants
                .iter()
                .fold(0.0f64, |a, &b| a.max(b));
            println!("max bin constant {}", fmt_float(max_bin));
            println!(
                "final constant {} bound {} witness ({}, {})",
                fmt_float(result.final_constant),
                fmt_float(result.c_prime_empirical),
                result.witness.0,
                result.witness.1
            );
            println!("restriction_exact {}", result.restriction_exact);
            println!(
                "wrote {} ({} rows)",
                out.display(),
                result.eval_points.len()
            );
            println!("certificates: {}", if result.pass { "PASS" } else { "FAIL" });
            Ok(result.pass)
        }
        Command::LossCurve {
            c_grid,
            trials,
            seed,
        } => {
            let rows = loss_curve(&c_grid, trials, seed)?;
            println!("C,lower_bound,c_star,c_prime_empirical");
            let mut all_pass = true;
            for row in &rows {
                println!(
                    "{},{},{},{}",
                    fmt_float(row.c),
                    fmt_float(row.lower_bound),
                    fmt_float(row.c_star),
                    fmt_float(row.c_prime_empirical)
                );
                if row.lower_bound > row.c_star + 1e-6 || row.c_star >= 1.0 {
                    all_pass = false;
                }
            }
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
