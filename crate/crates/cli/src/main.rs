use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sbmcsp::ensemble::{verify_ensemble, DescentOrder, EnsembleOutcome};
use sbmcsp::generate::{random_instance, Profile};
use sbmcsp::hybrid::coherent::coherent_sets;
use sbmcsp::hybrid::preprocess::{localize, normalize_instance};
use sbmcsp::hybrid::HybridSolver;
use sbmcsp::instance::{ConstraintJson, InstanceJson};
use sbmcsp::oracle::{brute_solutions, brute_solve};
use sbmcsp::propagation::{establish_k_minimality, is_unsat};
use sbmcsp::sbm::normalize_and_verify;
use sbmcsp::{AlgebraRegistry, Elem, Error, FiniteAlgebra, Instance};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "sbmcsp", version, about = "Solver and toolkit for CSPs over semilattice block Mal'tsev algebras")]
struct Cli {
    /// Extra algebra definitions (JSON), usable by name in instances.
    #[arg(long = "algebra", global = true, value_name = "FILE")]
    algebras: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify that an algebra is SBM and print its certificate.
    CheckAlgebra {
        /// Algebra JSON file or builtin name (FIX-A, FIX-B, Z2, Z3, P3).
        algebra: String,
    },
    /// Solve an instance with the hybrid solver.
    Solve {
        instance: PathBuf,
        /// Write one JSON line per propagation round.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Solve an instance by exhaustive search.
    Oracle {
        instance: PathBuf,
        /// Print every solution instead of the first.
        #[arg(long)]
        all: bool,
    },
    /// Print the coherent sets of the 3-minimal instance.
    Coherent { instance: PathBuf },
    /// Print a random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        vars: usize,
        #[arg(long, default_value_t = 6)]
        constraints: usize,
        #[arg(long, default_value_t = 3)]
        arity: usize,
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        /// Comma-separated algebra names for the domains.
        #[arg(long, value_delimiter = ',', default_values_t = ["FIX-B".to_string(), "Z2".to_string()])]
        domains: Vec<String>,
    },
    /// Build an ensemble for the block-minimal instance and descend it to a solution.
    VerifyEnsemble {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Both)]
        order: Order,
        /// Randomize the initial ensemble members.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Establish k-minimality and print the tightened instance.
    Minimize {
        instance: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Sequential,
    Reversed,
    Both,
}

const SAT: u8 = 0;
const UNSAT: u8 = 1;
const FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { FAILURE } else { SAT };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(FAILURE)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut registry = AlgebraRegistry::builtin();
    for path in &cli.algebras {
        registry.load_file(path).with_context(|| format!("loading {}", path.display()))?;
    }
    match cli.command {
        Command::CheckAlgebra { algebra } => check_algebra(&registry, &algebra),
        Command::Solve { instance, trace } => solve(&load(&registry, &instance)?, trace.as_deref()),
        Command::Oracle { instance, all } => oracle(&load(&registry, &instance)?, all),
        Command::Coherent { instance } => coherent(&load(&registry, &instance)?),
        Command::Gen { seed, vars, constraints, arity, density, domains } => {
            let algebras = domains
                .iter()
                .map(|n| registry.get(n).map(|a| a.as_ref().clone()))
                .collect::<sbmcsp::Result<Vec<FiniteAlgebra>>>()?;
            if algebras.is_empty() {
                bail!("--domains needs at least one algebra");
            }
            let profile = Profile::new(algebras, vars, constraints).arity(arity).density(density);
            print_json(&random_instance(seed, &profile).to_json())?;
            Ok(SAT)
        }
        Command::VerifyEnsemble { instance, order, seed } => verify(&load(&registry, &instance)?, order, seed),
        Command::Minimize { instance, k } => {
            if k == 0 {
                bail!("--k must be at least 1");
            }
            let inst = load(&registry, &instance)?;
            let out = establish_k_minimality(&inst, k);
            print_json(&with_unary_domains(&out))?;
            Ok(if is_unsat(&out) { UNSAT } else { SAT })
        }
    }
}

fn load(registry: &AlgebraRegistry, path: &Path) -> anyhow::Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json_str(&text, registry).with_context(|| format!("parsing {}", path.display()))
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn assignment_json(inst: &Instance, a: &[Elem]) -> Value {
    let map: BTreeMap<&str, Elem> = inst.vars.iter().map(String::as_str).zip(a.iter().copied()).collect();
    json!(map)
}

/// Instance JSON with a unary constraint for every domain that is no longer full.
fn with_unary_domains(inst: &Instance) -> InstanceJson {
    let mut out = inst.to_json();
    for (v, d) in inst.domains.iter().enumerate() {
        if !d.is_full() {
            out.constraints.push(ConstraintJson {
                scope: vec![inst.vars[v].clone()],
                tuples: d.elements.iter().map(|&x| vec![x as usize]).collect(),
            });
        }
    }
    out
}

fn check_algebra(registry: &AlgebraRegistry, spec: &str) -> anyhow::Result<u8> {
    let alg = if Path::new(spec).exists() {
        let mut scratch = AlgebraRegistry::empty();
        scratch.load_file(Path::new(spec))?.as_ref().clone()
    } else {
        registry.get(spec)?.as_ref().clone()
    };
    match normalize_and_verify(&alg) {
        Ok((_, cert)) => {
            println!("algebra: {}", alg.name());
            println!("sigma: {}", cert.sigma);
            println!("theta: {}", cert.theta);
            println!("max block: {:?}", cert.max_block);
            match cert.minimal_element {
                Some(b) => println!("minimal element: {b}"),
                None => println!("minimal element: none"),
            }
            println!("SBM: yes");
            Ok(SAT)
        }
        Err(e) => {
            println!("algebra: {}", alg.name());
            println!("SBM: no");
            eprintln!("{e}");
            Ok(UNSAT)
        }
    }
}

fn solve(inst: &Instance, trace: Option<&Path>) -> anyhow::Result<u8> {
    let mut solver = if trace.is_some() { HybridSolver::with_trace() } else { HybridSolver::new() };
    let result = solver.solve(inst);
    if let Some(path) = trace {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for event in &solver.trace {
            writeln!(w, "{}", serde_json::to_string(event)?)?;
        }
        w.flush()?;
    }
    match result {
        Ok(Some(a)) => {
            print_json(&assignment_json(inst, &a))?;
            Ok(SAT)
        }
        Ok(None) => {
            println!("null");
            Ok(UNSAT)
        }
        Err(e @ Error::Rejected(_)) => {
            eprintln!("rejected: {e}");
            Ok(FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn oracle(inst: &Instance, all: bool) -> anyhow::Result<u8> {
    if all {
        let sols = brute_solutions(inst)?;
        let list: Vec<Value> = sols.iter().map(|a| assignment_json(inst, a)).collect();
        print_json(&list)?;
        return Ok(if sols.is_empty() { UNSAT } else { SAT });
    }
    match brute_solve(inst)? {
        Some(a) => {
            print_json(&assignment_json(inst, &a))?;
            Ok(SAT)
        }
        None => {
            println!("null");
            Ok(UNSAT)
        }
    }
}

fn coherent(inst: &Instance) -> anyhow::Result<u8> {
    let three = establish_k_minimality(&normalize_instance(inst)?, 3);
    if is_unsat(&three) {
        println!("[]");
        return Ok(UNSAT);
    }
    let local = localize(&three)?;
    let index = coherent_sets(&local.inst)?;
    let sets: Vec<Value> = index
        .sets()
        .iter()
        .map(|s| {
            let intervals: Vec<Value> = s
                .triples
                .iter()
                .map(|t| {
                    // report congruences on the outer labels of the variable
                    let labels = &local.to_outer[t.coord];
                    let blocks = |c: &sbmcsp::Congruence| -> Vec<Vec<Elem>> {
                        c.blocks().iter().map(|b| b.iter().map(|&x| labels[x as usize]).collect()).collect()
                    };
                    json!({"var": inst.vars[t.coord], "lower": blocks(t.alpha()), "upper": blocks(t.beta())})
                })
                .collect();
            json!({"vars": s.vars.iter().map(|&v| &inst.vars[v]).collect::<Vec<_>>(), "intervals": intervals})
        })
        .collect();
    print_json(&sets)?;
    Ok(SAT)
}

fn verify(inst: &Instance, order: Order, seed: Option<u64>) -> anyhow::Result<u8> {
    let orders: &[(DescentOrder, &str)] = match order {
        Order::Sequential => &[(DescentOrder::Sequential, "sequential")],
        Order::Reversed => &[(DescentOrder::RoundRobinReversed, "reversed")],
        Order::Both => &[(DescentOrder::Sequential, "sequential"), (DescentOrder::RoundRobinReversed, "reversed")],
    };
    let mut reports = Vec::new();
    let mut code = SAT;
    for &(o, name) in orders {
        match verify_ensemble(inst, o, seed)? {
            EnsembleOutcome::Unsat => {
                reports.push(json!({"order": name, "status": "unsat"}));
                code = UNSAT;
            }
            EnsembleOutcome::Solved { solution, steps, rebuilt } => reports.push(json!({
                "order": name,
                "status": "solved",
                "solution": assignment_json(inst, &solution),
                "steps": steps,
                "rebuilt": rebuilt,
            })),
        }
    }
    print_json(&reports)?;
    Ok(code)
}
