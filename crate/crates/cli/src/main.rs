use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use tactoidlab::cli_io::{emit_outputs, parse_config, unix_now, CsvTable, RunInfo, RunOutputs};
use tactoidlab::fields::{
    div_lower_bound_check, divergence, interface_contour, seeded_degree_field, BoundaryData, Domain, GridField,
};
use tactoidlab::oned::{energy_eps_1d, gamma_minimizer, relax_1d, OneDInit, OneDSolverOptions, OneDStructure};
use tactoidlab::potentials::{wall_cost, WallCostTable};
use tactoidlab::relaxation::relax;
use tactoidlab::sharp::{astroid_config, astroid_interface, config_residuals, e0_energy, island_area, junction_residual};
use tactoidlab::tactoid::{calibrate_lambda, fan_min_separation, junction_data, solve_tactoid, tactoid_config, tactoid_energy};
use tactoidlab::{Curve, Error, PotentialSpec, Result, SharpConfig};

#[derive(Parser)]
#[command(name = "tactoidlab", version, about = "Nematic-isotropic tactoid toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gradient-flow relaxation of E_eps from a key-value config file.
    Relax {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// One-dimensional limit minimizer, optionally with a relaxed eps profile.
    Oned {
        #[arg(long)]
        a: f64,
        #[arg(long = "H")]
        h: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1025)]
        nodes: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabulates K, K' and H on a uniform grid of [0, 1].
    Wallcost {
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value = "csh")]
        potential: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Astroid-type island in the unit disk for boundary degree -k.
    Astroid {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Island with walls in a uniform far field.
    Tactoid {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Calibrate lambda so the island has this area.
        #[arg(long)]
        area: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Divergence lower bound for e^{i d theta}, optionally perturbed.
    CheckDivBound {
        #[arg(long, allow_hyphen_values = true)]
        degree: i32,
        #[arg(long, default_value_t = 257)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long = "rho-prime", default_value_t = 1.0)]
        rho_prime: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
    },
    /// Largest criticality residuals of a sharp configuration (JSON).
    Residuals {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "L", default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// E_0 of a sharp configuration (JSON); L = inf gives E_0^inf.
    Energy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "L", default_value = "inf")]
        l: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn print_json(v: &serde_json::Value) {
    // a closed pipe is not an error for a report
    let _ = writeln!(std::io::stdout().lock(), "{v:#}");
}

fn curve_table(name: &str, c: &Curve) -> CsvTable {
    let mut t = CsvTable::new(name, &["s", "x", "y"]);
    for (s, p) in c.arclength().iter().zip(&c.vertices) {
        t.push(vec![*s, p[0], p[1]]);
    }
    t
}

fn field_table(f: &GridField) -> CsvTable {
    let div = divergence(f);
    let mut t = CsvTable::new("field.csv", &["x", "y", "u1", "u2", "modulus", "div"]);
    for n in 0..f.domain.len() {
        if f.domain.is_inside(n) {
            let [x, y] = f.domain.coords(n);
            let [u1, u2] = f.get(n);
            t.push(vec![x, y, u1, u2, u1.hypot(u2), div[n]]);
        }
    }
    t
}

fn info(echo: String, resolved: serde_json::Value, seed: Option<u64>, started: f64) -> RunInfo {
    RunInfo {
        command_line: std::env::args().collect(),
        config_echo: echo,
        resolved,
        seed,
        started_unix: started,
    }
}

fn run(cmd: Command) -> Result<()> {
    let started = unix_now();
    let spec = PotentialSpec::csh();
    match cmd {
        Command::Relax { config, out } => {
            let cfg = parse_config(&read(&config)?)?;
            let sim = cfg.to_sim_config()?;
            let clock = Instant::now();
            let rec = relax(&sim)?;
            let seconds = clock.elapsed().as_secs_f64();
            let mut energy = CsvTable::new("energy.csv", &["step", "potential", "gradient", "divergence", "total"]);
            for (step, e) in &rec.energy_history {
                energy.push(vec![*step as f64, e.potential, e.gradient, e.divergence, e.total]);
            }
            let mut contour = CsvTable::new("contour.csv", &["curve", "s", "x", "y"]);
            for (k, c) in interface_contour(&rec.final_field, 0.5).iter().enumerate() {
                for (s, p) in c.arclength().iter().zip(&c.vertices) {
                    contour.push(vec![k as f64, *s, p[0], p[1]]);
                }
            }
            let final_energy = rec.energy_history.last().map(|(_, e)| *e);
            let summary = json!({
                "config": cfg.echo(),
                "dt": rec.dt,
                "steps": rec.steps_taken,
                "converged": rec.converged,
                "final_rate": rec.final_rate,
                "final_energy": final_energy,
                "wall_clock_seconds": seconds,
            });
            let outputs = RunOutputs {
                tables: vec![field_table(&rec.final_field), energy, contour],
                summary: summary.clone(),
                extra: vec![],
            };
            emit_outputs(&outputs, &info(cfg.echo(), json!({ "dt": rec.dt }), cfg.seed(), started), &out)?;
            print_json(&summary);
        }
        Command::Oned { a, h, l, eps, nodes, out } => {
            let state = gamma_minimizer(a, h, l, &spec)?;
            let (structure, m) = match state.structure {
                OneDStructure::SingleWall { m } => ("single_wall", Some(m)),
                OneDStructure::TwoInterface { .. } => ("two_interface", None),
            };
            let mut table = CsvTable::new("profile.csv", &["y", "u1", "u2"]);
            let mut summary = json!({
                "a": a, "H": h, "L": l,
                "structure": structure,
                "m": m,
                "tie": state.tie,
                "limit_energy": state.energy,
            });
            if let Some(eps) = eps {
                let run = relax_1d(a, h, eps, l, &spec, &OneDInit::MollifiedMinimizer, &OneDSolverOptions::default())?;
                let p = &run.profile;
                for i in 0..p.y.len() {
                    table.push(vec![p.y[i], p.u1[i], p.u2[i]]);
                }
                summary["eps"] = json!(eps);
                summary["eps_energy"] = json!(energy_eps_1d(p, eps, l, &spec)?);
                summary["steps"] = json!(run.steps);
                summary["converged"] = json!(run.converged);
            } else {
                if nodes < 2 {
                    return Err(Error::Range {
                        what: "nodes",
                        value: nodes as f64,
                        range: "[2, inf)".into(),
                    });
                }
                for i in 0..nodes {
                    let y = h * (2.0 * i as f64 / (nodes - 1) as f64 - 1.0);
                    let u = state.limit_value(y, h);
                    table.push(vec![y, u[0], u[1]]);
                }
            }
            let echo = format!("a = {a:?}\nH = {h:?}\nL = {l:?}\neps = {eps:?}\nnodes = {nodes}\n");
            let outputs = RunOutputs {
                tables: vec![table],
                summary: summary.clone(),
                extra: vec![],
            };
            emit_outputs(&outputs, &info(echo, json!({}), None, started), &out)?;
            print_json(&summary);
        }
        Command::Wallcost { samples, potential, out } => {
            if potential != "csh" {
                return Err(Error::UnsupportedPotential(format!("{potential} (only csh is built in)")));
            }
            let tab = WallCostTable::build(&spec, samples)?;
            let mut table = CsvTable::new("wallcost.csv", &["z", "K", "Kp", "H"]);
            for i in 0..samples {
                table.push(vec![tab.z_samples[i], tab.k_values[i], tab.kp_values[i], tab.h_values[i]]);
            }
            let summary = json!({
                "c0": tab.c0,
                "K0": wall_cost(0.0, &spec)?,
                "z_star": tab.z_star,
                "samples": samples,
            });
            let echo = format!("samples = {samples}\npotential = {potential}\n");
            let outputs = RunOutputs {
                tables: vec![table],
                summary: summary.clone(),
                extra: vec![],
            };
            emit_outputs(&outputs, &info(echo, json!({}), None, started), &out)?;
            print_json(&summary);
        }
        Command::Astroid { k, samples, out } => {
            let curve = astroid_interface(k, samples)?;
            let cfg = astroid_config(k, samples)?;
            let e0 = e0_energy(&cfg, f64::INFINITY, &spec)?;
            let summary = json!({
                "k": k,
                "samples": samples,
                "area": island_area(k)?,
                "length": curve.length(),
                "cusps": curve.cusp_indices().len(),
                "e0_total": e0.total,
                "e0": e0,
            });
            let outputs = RunOutputs {
                tables: vec![curve_table("interface.csv", &curve)],
                summary: summary.clone(),
                extra: vec![("sharp.json".into(), cfg.to_json()? + "\n")],
            };
            let echo = format!("k = {k}\nsamples = {samples}\n");
            emit_outputs(&outputs, &info(echo, json!({}), None, started), &out)?;
            print_json(&summary);
        }
        Command::Tactoid { lambda, area, out } => {
            let sol = match area {
                Some(a) => calibrate_lambda(a, &spec)?,
                None => solve_tactoid(lambda, &spec)?,
            };
            let energy = tactoid_energy(&sol, &spec)?;
            let j = junction_residual(&junction_data(&sol), &spec)?;
            let p = &sol.profile;
            let mut iface = CsvTable::new("interface.csv", &["s", "x", "y", "theta"]);
            for i in 0..p.s.len() {
                let v = sol.interface.vertices[i];
                iface.push(vec![p.s[i], v[0], v[1], p.theta[i]]);
            }
            let mut wall = CsvTable::new("wall.csv", &["sigma", "x", "y", "t", "psi"]);
            for i in 0..sol.wall.len() {
                let v = sol.wall.vertices[i];
                wall.push(vec![p.s[i], v[0], v[1], sol.t[i], sol.psi[i]]);
            }
            let summary = json!({
                "lambda": p.lambda,
                "lambda_eff": p.lambda_eff,
                "l": p.length,
                "area": sol.area,
                "energy_reduced": energy.reduced,
                "energy_sharp": energy.sharp.total,
                "junction_theta_star": p.theta_star,
                "junction_residual_norm": j[0].hypot(j[1]),
                "fan_min_separation": fan_min_separation(&sol, 256),
            });
            let outputs = RunOutputs {
                tables: vec![iface, wall],
                summary: summary.clone(),
                extra: vec![("sharp.json".into(), tactoid_config(&sol).to_json()? + "\n")],
            };
            let echo = format!("lambda = {lambda:?}\narea = {area:?}\n");
            emit_outputs(&outputs, &info(echo, json!({ "lambda": p.lambda }), None, started), &out)?;
            print_json(&summary);
        }
        Command::CheckDivBound {
            degree,
            n,
            rho,
            rho_prime,
            seed,
            amplitude,
        } => {
            if !(rho > 0.0 && rho < rho_prime && rho_prime <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "need 0 < rho < rho' <= 1, got rho = {rho}, rho' = {rho_prime}"
                )));
            }
            let bc = BoundaryData::Degree { k: degree, alpha: 0.0 };
            let domain = Arc::new(Domain::disk(1.0, n, bc)?);
            let field = match seed {
                Some(s) => seeded_degree_field(domain, degree, s, amplitude)?,
                None => seeded_degree_field(domain, degree, 0, 0.0)?,
            };
            let report = div_lower_bound_check(&field, rho, rho_prime)?;
            print_json(&serde_json::to_value(&report)?);
        }
        Command::Residuals { input, l, lambda } => {
            let cfg = SharpConfig::from_json(&read(&input)?)?;
            let rep = config_residuals(&cfg, l, lambda, &spec)?;
            print_json(&serde_json::to_value(rep)?);
        }
        Command::Energy { input, l } => {
            let cfg = SharpConfig::from_json(&read(&input)?)?;
            let e = e0_energy(&cfg, l, &spec)?;
            print_json(&serde_json::to_value(e)?);
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("TACTOIDLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("TACTOIDLAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
