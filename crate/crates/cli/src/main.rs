//! Command-line front end: reads a script from a file argument or standard
//! input, runs it, and prints structured results. Exit status is nonzero iff
//! any command failed.

use cobstab::script::{parse, run, RunOptions};
use std::io::Read;
use std::process::ExitCode;

const USAGE: &str = "usage: cobstab [SCRIPT] [--kappa N] [--modulus N] [--bound N] [--trace] [--format text|json]
Reads the script from SCRIPT or standard input. Commands:
  hn NAME [kappa=N] [trace]   Harder-Narasimhan factors of a bound object/cobordism/cone
  charge NAME                 exact central charge
  lift NAME                   the iterated cone decomposition and its charge
  axioms [kappa=N] [seed=N] [generators=N] [specs=N]
  k0 [modulus=N] [bound=N]    invariant factors of the class-group presentation
  theta [modulus=N] [bound=N] class map verdict and the three assumptions
  localfin [kappa=N] [eta=P/Q] [seed=N] [count=N]
  trace NAME [kappa=N]        hn with the rewrite trace";

fn main() -> ExitCode {
    let mut opts = RunOptions::default();
    let mut path: Option<String> = None;
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--kappa" | "--modulus" | "--bound" | "--format" => {
                let Some(value) = args.next() else {
                    eprintln!("missing value for {}", arg);
                    return ExitCode::from(2);
                };
                match arg.as_str() {
                    "--kappa" => match value.parse() {
                        Ok(v) => opts.kappa = v,
                        Err(_) => return bad_value(&arg, &value),
                    },
                    "--modulus" => match value.parse() {
                        Ok(v) => opts.modulus = v,
                        Err(_) => return bad_value(&arg, &value),
                    },
                    "--bound" => match value.parse() {
                        Ok(v) => opts.bound = v,
                        Err(_) => return bad_value(&arg, &value),
                    },
                    "--format" => match value.as_str() {
                        "text" => opts.json = false,
                        "json" => opts.json = true,
                        _ => return bad_value(&arg, &value),
                    },
                    _ => unreachable!(),
                }
            }
            "--trace" => opts.trace = true,
            "--help" | "-h" => {
                println!("{}", USAGE);
                return ExitCode::SUCCESS;
            }
            other if other.starts_with('-') => {
                eprintln!("unknown flag {}\n{}", other, USAGE);
                return ExitCode::from(2);
            }
            other => {
                if path.replace(other.to_string()).is_some() {
                    eprintln!("more than one script argument\n{}", USAGE);
                    return ExitCode::from(2);
                }
            }
        }
    }
    let text = match &path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {}", p, e);
                return ExitCode::from(2);
            }
        },
        None => {
            let mut buf = String::new();
            if let Err(e) = std::io::stdin().read_to_string(&mut buf) {
                eprintln!("cannot read standard input: {}", e);
                return ExitCode::from(2);
            }
            buf
        }
    };
    let script = match parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", e);
            return ExitCode::from(1);
        }
    };
    let out = run(&script, &opts);
    for line in &out.stdout {
        println!("{}", line);
    }
    for line in &out.stderr {
        eprintln!("{}", line);
    }
    if out.failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn bad_value(flag: &str, value: &str) -> ExitCode {
    eprintln!("bad value `{}` for {}", value, flag);
    ExitCode::from(2)
}
