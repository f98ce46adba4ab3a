//! `qvn` — resource estimation, modeling and simulation for segmented-trap
//! quantum architectures. All numeric output is JSON on stdout unless
//! `--out` is given.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qvn_core::layout::{load_layout, resource_table, TrapLayout};
use qvn_core::models;
use qvn_core::physics;
use qvn_core::physics::coil::CoilSystem;
use qvn_core::sim;
use qvn_core::species;
use qvn_core::QvnError;

#[derive(Parser)]
#[command(name = "qvn", version, about = "Trapped-ion architecture estimator and simulator")]
struct Cli {
    /// Write JSON output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hardware resource table for a layout.
    Estimate(EstimateArgs),
    /// Run a circuit and report timing metrics (optionally a trace).
    Simulate(SimulateArgs),
    /// Closed-form architectural models.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Physics calculators.
    #[command(subcommand)]
    Physics(PhysicsCmd),
    /// Ion species selection.
    #[command(subcommand)]
    Species(SpeciesCmd),
    /// Plot emission.
    #[command(subcommand)]
    Plot(PlotCmd),
}

#[derive(Args)]
struct EstimateArgs {
    /// Layout file, or "preset:quantum4004".
    #[arg(long, default_value = "preset:quantum4004")]
    layout: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "preset:quantum4004")]
    layout: String,
    /// Circuit file: JSON list of ops, e.g. [{"op":"cx","q":[0,1]}].
    #[arg(long)]
    circuit: PathBuf,
    /// Machine parameter file (JSON); defaults apply if omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Random seed; affects only tie-breaking among equally ready work.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the event trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Trace format: jsonl, csv or svg.
    #[arg(long, default_value = "jsonl")]
    format: String,
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Shor's algorithm runtime and qubit count.
    Shor {
        /// Architecture: BCDP, NTC or AC.
        #[arg(long)]
        arch: String,
        /// Logical clock rate in Hz.
        #[arg(long)]
        clock: f64,
        /// Number to factor, in bits.
        #[arg(long)]
        n: u32,
    },
    /// QEC serialization headroom.
    Kappa {
        #[arg(long)]
        coherence: f64,
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        cycle: f64,
    },
    /// Rent's rule pin estimate.
    Rent {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        b: f64,
    },
    /// Peak gate throughput.
    Throughput {
        #[arg(long, default_value_t = 10e-6)]
        t1q: f64,
        #[arg(long, default_value_t = 20e-6)]
        t2q: f64,
        #[arg(long, default_value_t = 8)]
        parallel: u32,
    },
    /// Steane syndrome sweep over all memory qubits.
    Syndrome {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 20e-6)]
        t2q: f64,
        /// Round gate counts up per 7-qubit block.
        #[arg(long)]
        ceil: bool,
    },
    /// Local-oscillator stability requirement.
    Lo {
        /// Transition frequency in Hz.
        #[arg(long)]
        freq: f64,
        /// Coherence target in seconds.
        #[arg(long)]
        time: f64,
    },
    /// DAC waveform memory requirement.
    Dacram {
        #[arg(long)]
        ramp: f64,
        #[arg(long)]
        period: f64,
        #[arg(long, default_value_t = 16)]
        bits: u32,
        #[arg(long, default_value_t = 1)]
        waveforms: u32,
    },
    /// Steane-code QEC cycle time per qubit.
    Steane {
        #[arg(long, default_value_t = 20e-6)]
        t2q: f64,
        #[arg(long)]
        tcorrect: f64,
    },
}

#[derive(Subcommand)]
enum PhysicsCmd {
    /// Homogeneous field volume of a magnet coil pair/triplet.
    Coil {
        /// helmholtz or maxwell.
        #[arg(long)]
        kind: String,
        /// Coil radius in meters (homogeneity mode).
        #[arg(long)]
        radius: Option<f64>,
        /// Trap diagonal in meters (required-radius mode).
        #[arg(long)]
        diagonal: Option<f64>,
        /// Relative field tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Background-gas collision rate and sublimation pressure.
    Vacuum {
        #[arg(long, default_value_t = 1.0)]
        ions: f64,
        #[arg(long, default_value_t = 1e-11)]
        pressure: f64,
        /// Residual gas (h2, he4, he3) for the sublimation curve.
        #[arg(long)]
        gas: Option<String>,
        /// Surface temperature in kelvin.
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Electrode capacitance and RF pickup ratio.
    Capacitance {
        #[arg(long)]
        area: f64,
        #[arg(long)]
        thickness: f64,
        #[arg(long, default_value_t = 3.8)]
        epsr: f64,
    },
    /// Second-order Zeeman clock shift.
    Clock {
        /// Sensitivity in Hz per mT^2.
        #[arg(long)]
        sensitivity: f64,
        /// Field deviation in mT.
        #[arg(long)]
        db: f64,
    },
    /// Beam power for a changed focal waist.
    Beam {
        #[arg(long)]
        power: f64,
        #[arg(long)]
        w0: f64,
        #[arg(long)]
        w1: f64,
    },
}

#[derive(Subcommand)]
enum SpeciesCmd {
    /// Enumerate (qubit, detection, cooling) species triples.
    Triples {
        /// Trap surface material: aluminum or gold.
        #[arg(long = "surface", alias = "material", default_value = "aluminum")]
        material: String,
        /// Sympathetic-cooling mass-ratio bound.
        #[arg(long = "max-ratio", alias = "ratio", default_value_t = 3.0)]
        ratio: f64,
        /// List every eligible detection pairing, not just the best.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Subcommand)]
enum PlotCmd {
    /// SVG Gantt timeline of a simulated circuit.
    Timeline {
        #[arg(long, default_value = "preset:quantum4004")]
        layout: String,
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Resolve a layout spec: a path, or "preset:quantum4004" (overridable via
/// a quantum4004.json in QVN_DATA_DIR).
fn resolve_layout(spec: &str) -> Result<TrapLayout, QvnError> {
    if let Some(name) = spec.strip_prefix("preset:") {
        if name != "quantum4004" {
            return Err(QvnError::Validation(format!("unknown preset: {name}")));
        }
        if let Ok(dir) = std::env::var("QVN_DATA_DIR") {
            let candidate = Path::new(&dir).join("quantum4004.json");
            if candidate.exists() {
                return load_layout(candidate);
            }
        }
        return Ok(qvn_core::quantum4004_preset());
    }
    load_layout(spec)
}

fn species_db() -> Result<species::SpeciesDb, QvnError> {
    if let Ok(dir) = std::env::var("QVN_DATA_DIR") {
        let candidate = Path::new(&dir).join("species.json");
        if candidate.exists() {
            return species::SpeciesDb::load(&candidate);
        }
    }
    Ok(species::SpeciesDb::bundled())
}

fn load_params(path: &Option<PathBuf>) -> Result<sim::MachineParams, QvnError> {
    match path {
        None => Ok(sim::MachineParams::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let params: sim::MachineParams = serde_json::from_str(&text)?;
            params.validate()?;
            Ok(params)
        }
    }
}

fn load_circuit(path: &Path, layout: &TrapLayout) -> Result<sim::Circuit, QvnError> {
    let text = std::fs::read_to_string(path)?;
    // Either a bare op list or a full circuit with an explicit placement.
    if let Ok(circuit) = serde_json::from_str::<sim::Circuit>(&text) {
        return Ok(circuit);
    }
    let ops = sim::Circuit::parse_ops(&text)?;
    sim::Circuit::with_default_placement(ops, layout)
}

fn run_command(cli: &Cli) -> Result<serde_json::Value, QvnError> {
    match &cli.command {
        Command::Estimate(a) => {
            let layout = resolve_layout(&a.layout)?;
            Ok(serde_json::to_value(resource_table(&layout))?)
        }
        Command::Simulate(a) => {
            let layout = resolve_layout(&a.layout)?;
            let params = load_params(&a.params)?;
            let circuit = load_circuit(&a.circuit, &layout)?;
            let (trace, metrics) = sim::run(&layout, &circuit, &params, a.seed)?;
            if let Some(path) = &a.trace {
                let format: sim::TraceFormat = a.format.parse()?;
                sim::emit_trace(&trace, &layout, path, format)?;
            }
            Ok(serde_json::to_value(metrics)?)
        }
        Command::Model(m) => run_model(m),
        Command::Physics(p) => run_physics(p),
        Command::Species(SpeciesCmd::Triples { material, ratio, all }) => {
            let db = species_db()?;
            let material: species::SurfaceMaterial = material.parse()?;
            let options = species::TripleOptions {
                policy: if *all {
                    species::DetectionPolicy::AllEligible
                } else {
                    species::DetectionPolicy::BestTau
                },
            };
            let triples = species::enumerate_triples(&db, material, *ratio, options)?;
            Ok(serde_json::to_value(triples)?)
        }
        Command::Plot(PlotCmd::Timeline { layout, circuit, params, seed }) => {
            let layout = resolve_layout(layout)?;
            let params = load_params(params)?;
            let circuit = load_circuit(circuit, &layout)?;
            let (trace, _) = sim::run(&layout, &circuit, &params, *seed)?;
            let svg = sim::render_trace(&trace, &layout, sim::TraceFormat::SvgTimeline);
            Ok(serde_json::Value::String(svg))
        }
    }
}

fn run_model(m: &ModelCmd) -> Result<serde_json::Value, QvnError> {
    Ok(match m {
        ModelCmd::Shor { arch, clock, n } => {
            let kind = match arch.to_ascii_lowercase().as_str() {
                "bcdp" => models::ShorArch::Bcdp,
                "ntc" => models::ShorArch::Ntc,
                "ac" => models::ShorArch::Ac,
                other => return Err(QvnError::Parse(format!("unknown architecture: {other}"))),
            };
            let model = models::ShorModel { kind, logical_clock_hz: *clock };
            json!({
                "arch": arch.to_uppercase(),
                "n_bits": n,
                "logical_ops": models::shor_ops(kind, *n),
                "time_s": models::shor_time(&model, *n),
                "qubits": models::shor_qubits(kind, *n),
            })
        }
        ModelCmd::Kappa { coherence, fraction, cycle } => serde_json::to_value(models::kappa(
            &models::KappaInputs {
                coherence_time_s: *coherence,
                qec_fraction: *fraction,
                qec_cycle_per_qubit_s: *cycle,
            },
        ))?,
        ModelCmd::Rent { k, r, b } => {
            let p = models::RentParams { k: *k, r: *r, b: *b };
            json!({
                "pins": models::rent_pins(&p),
                "exponent_out_of_range": models::rent_exponent_out_of_range(&p),
            })
        }
        ModelCmd::Throughput { t1q, t2q, parallel } => {
            serde_json::to_value(models::machine_throughput(*t1q, *t2q, *parallel))?
        }
        ModelCmd::Syndrome { n, t2q, ceil } => {
            serde_json::to_value(models::syndrome_sweep(*n, *t2q, *ceil))?
        }
        ModelCmd::Lo { freq, time } => json!({
            "fractional_stability": models::lo_stability_required(*freq, *time),
        }),
        ModelCmd::Dacram { ramp, period, bits, waveforms } => json!({
            "ram_bytes": models::dac_ram_requirement(*ramp, *period, *bits, *waveforms),
        }),
        ModelCmd::Steane { t2q, tcorrect } => json!({
            "cycle_per_qubit_s": models::steane_cycle(*t2q, *tcorrect),
        }),
    })
}

fn run_physics(p: &PhysicsCmd) -> Result<serde_json::Value, QvnError> {
    Ok(match p {
        PhysicsCmd::Coil { kind, radius, diagonal, tolerance } => {
            let kind: physics::CoilKind = kind.parse()?;
            match (radius, diagonal) {
                (Some(r), None) => {
                    let system = CoilSystem::of_kind(kind, *r, 100.0);
                    let rh = physics::homogeneous_sphere_radius(&system, *tolerance)?;
                    json!({
                        "coil_radius_m": r,
                        "homogeneous_sphere_radius_m": rh,
                        "tolerance": tolerance,
                    })
                }
                (None, Some(d)) => json!({
                    "trap_diagonal_m": d,
                    "required_coil_radius_m":
                        physics::required_coil_radius(kind, *d, *tolerance)?,
                    "tolerance": tolerance,
                }),
                _ => {
                    return Err(QvnError::Validation(
                        "give exactly one of --radius or --diagonal".into(),
                    ))
                }
            }
        }
        PhysicsCmd::Vacuum { ions, pressure, gas, temperature } => {
            let mut out = json!({
                "collision_rate_per_s": physics::collision_rate(*ions, *pressure),
            });
            if let (Some(gas), Some(t)) = (gas, temperature) {
                let gas: physics::ResidualGas = gas.parse()?;
                out["sublimation_pressure_mbar"] =
                    json!(physics::sublimation_pressure(gas, *t)?);
            }
            out
        }
        PhysicsCmd::Capacitance { area, thickness, epsr } => json!({
            "plate_capacitance_f": physics::plate_capacitance(*area, *thickness, *epsr),
        }),
        PhysicsCmd::Clock { sensitivity, db } => json!({
            "shift_hz": physics::clock_shift(*sensitivity, *db),
        }),
        PhysicsCmd::Beam { power, w0, w1 } => json!({
            "power_w": physics::beam_power_scaling(*power, *w0, *w1),
        }),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli) {
        Ok(value) => {
            let text = match &value {
                serde_json::Value::String(s) => s.clone(),
                other => format!("{other:#}\n"),
            };
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Err(QvnError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
