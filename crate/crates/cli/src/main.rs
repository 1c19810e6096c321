use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hardattn_core::circuit::netlist::{read_netlist, write_netlist};
use hardattn_core::circuit::{parse_bits, render_bits};
use hardattn_core::harness::{self, EquivOptions};
use hardattn_core::zoo::{self, ZooModel};
use hardattn_core::{compile, normalize, CompileOptions, LangSpec, NormalizeOptions, Pooling};

#[derive(Parser)]
#[command(
    name = "hardattn",
    version,
    about = "Simulate, normalize and compile hard-attention transformers"
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Zoo model name (see `hardattn list`).
    #[arg(value_name = "MODEL")]
    model: Option<String>,
    #[arg(long = "model", value_name = "MODEL", conflicts_with = "model")]
    model_flag: Option<String>,
}

impl ModelArg {
    fn name(&self) -> Result<String, String> {
        self.model
            .clone()
            .or_else(|| self.model_flag.clone())
            .ok_or_else(|| "a model name is required".to_string())
    }

    fn build(&self) -> Result<ZooModel, String> {
        let entry = zoo::registry(&self.name()?).map_err(|e| e.to_string())?;
        entry.build().map_err(|e| e.to_string())
    }
}

#[derive(Args, Clone, Copy)]
struct Budgets {
    /// Largest value table per normal-form layer.
    #[arg(long, value_name = "COUNT")]
    budget_values: Option<usize>,
    /// Largest circuit, in wires.
    #[arg(long, value_name = "COUNT")]
    budget_wires: Option<usize>,
    /// Largest input count enumerated exhaustively.
    #[arg(long, value_name = "COUNT")]
    budget_inputs: Option<u64>,
    /// Use bitwise comparators instead of rank-pair tables.
    #[arg(long)]
    structured_comparator: bool,
    /// Do not pad stage outputs to their nominal depth.
    #[arg(long)]
    unleveled: bool,
}

impl Budgets {
    fn normalize(&self) -> NormalizeOptions {
        let mut o = NormalizeOptions::default();
        if let Some(v) = self.budget_values {
            o.max_values = v;
        }
        if let Some(v) = self.budget_inputs {
            o.max_inputs = v;
        }
        o
    }

    fn compile(&self) -> CompileOptions {
        let mut o = CompileOptions::default();
        if let Some(w) = self.budget_wires {
            o.budget_wires = w;
        }
        o.structured_comparator = self.structured_comparator;
        o.leveled = !self.unleveled;
        o
    }
}

fn pick<T: Clone>(pos: &Option<T>, flag: &Option<T>, what: &str) -> Result<T, String> {
    pos.clone()
        .or_else(|| flag.clone())
        .ok_or_else(|| format!("{what} is required"))
}

#[derive(Subcommand)]
enum Command {
    /// List the model zoo.
    List,
    /// Run a model on one word; exit 0 on accept, 1 on reject.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        /// Word without the end marker (default: empty).
        #[arg(default_value = "")]
        input: String,
        /// Print every layer's activations.
        #[arg(long)]
        trace: bool,
    },
    /// Normalize a model at length n (counting `$`) and audit encoding widths.
    NfReport {
        #[command(flatten)]
        model: ModelArg,
        n: Option<usize>,
        #[arg(long = "length", conflicts_with = "n")]
        length: Option<usize>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Compile a model at length n (counting `$`) to a netlist.
    Compile {
        #[command(flatten)]
        model: ModelArg,
        n: Option<usize>,
        #[arg(long = "length", conflicts_with = "n")]
        length: Option<usize>,
        /// Netlist destination.
        out: Option<PathBuf>,
        #[arg(long = "out", conflicts_with = "out")]
        out_flag: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Evaluate a netlist on a bit string; exit code follows the first output.
    Eval { netlist: PathBuf, bits: String },
    /// Compare compiled circuits with the model on every word up to a length.
    Equiv {
        #[command(flatten)]
        model: ModelArg,
        max_len: Option<usize>,
        #[arg(long = "max-length", conflicts_with = "max_len")]
        max_length: Option<usize>,
        #[command(flatten)]
        budgets: Budgets,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Circuit size and depth over a range of lengths.
    Growth {
        #[command(flatten)]
        model: ModelArg,
        n_lo: Option<usize>,
        n_hi: Option<usize>,
        /// Flag form of N_LO.
        #[arg(long = "length", conflicts_with = "n_lo")]
        length: Option<usize>,
        /// Flag form of N_HI.
        #[arg(long = "max-length", conflicts_with = "n_hi")]
        max_length: Option<usize>,
        /// Include wall-clock build times (not reproducible).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Turn a unique-attention model into an averaging one at length n.
    Convert {
        #[command(flatten)]
        model: ModelArg,
        n: Option<usize>,
        #[arg(long = "length", conflicts_with = "n")]
        length: Option<usize>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Check the EQUALITY-to-DYCK-1 circuit reduction on all n-bit words.
    Reduce { n: usize },
    /// Decide membership with a reference oracle.
    Oracle {
        /// e.g. parity, majority, equality, dyck:2, dyckd:1:3, shuffle:2, palindromes
        lang: String,
        #[arg(default_value = "")]
        input: String,
    },
}

const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

fn run(cli: Cli) -> Result<bool, String> {
    let err = |e: hardattn_core::Error| e.to_string();
    let mut stdout = std::io::stdout().lock();
    let mut emit = |text: &str| stdout.write_all(text.as_bytes()).map_err(|e| e.to_string());
    match cli.command {
        Command::List => {
            for e in zoo::entries() {
                emit(&format!(
                    "{}\t{}\t{}\t{}\n",
                    e.name, e.kind, e.language, e.description
                ))?;
            }
            Ok(true)
        }
        Command::Simulate {
            model,
            input,
            trace,
        } => {
            let (accept, table) = match model.build()? {
                ZooModel::Guhat(m) => {
                    let (b, t) = m.run(&input, Pooling::Unique).map_err(err)?;
                    (b, t.render_table())
                }
                ZooModel::Restricted(m) => {
                    let (b, t) = m.run(&input).map_err(err)?;
                    (b, t.render_table())
                }
            };
            if trace {
                emit(&table)?;
            } else {
                emit(&format!("OUTPUT {}\n", u8::from(accept)))?;
            }
            Ok(accept)
        }
        Command::NfReport {
            model,
            n,
            length,
            budgets,
        } => {
            let n = pick(&n, &length, "length n")?;
            let m = model.build()?.as_guhat().map_err(err)?;
            let nf = normalize(&m, n, &budgets.normalize()).map_err(err)?;
            emit(&nf.report())?;
            let audit = nf.audit_widths();
            let ok = audit.iter().all(|a| a.values_fit && a.ranks_fit);
            emit(&format!("AUDIT {}\n", if ok { "ok" } else { "overflow" }))?;
            Ok(ok)
        }
        Command::Compile {
            model,
            n,
            length,
            out,
            out_flag,
            budgets,
        } => {
            let n = pick(&n, &length, "length n")?;
            let m = model.build()?.as_guhat().map_err(err)?;
            let nf = normalize(&m, n, &budgets.normalize()).map_err(err)?;
            let compiled = compile(&nf, &budgets.compile()).map_err(err)?;
            if let Some(path) = out.or(out_flag) {
                fs::write(&path, write_netlist(&compiled.circuit))
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            emit(&compiled.report.to_string())?;
            Ok(true)
        }
        Command::Eval { netlist, bits } => {
            let text = fs::read_to_string(&netlist)
                .map_err(|e| format!("cannot read {}: {e}", netlist.display()))?;
            let circuit = read_netlist(&text).map_err(err)?;
            let out = circuit
                .evaluate(&parse_bits(&bits).map_err(err)?)
                .map_err(err)?;
            emit(&format!("{}\n", render_bits(&out)))?;
            Ok(out[0])
        }
        Command::Equiv {
            model,
            max_len,
            max_length,
            budgets,
            inject_fault,
        } => {
            let max_len = pick(&max_len, &max_length, "maximum length")?;
            let m = model.build()?.as_guhat().map_err(err)?;
            let opts = EquivOptions {
                normalize: budgets.normalize(),
                compile: budgets.compile(),
                inject_fault,
            };
            let report = harness::equiv(&m, max_len, &opts).map_err(err)?;
            emit(&report.to_string())?;
            Ok(report.passed())
        }
        Command::Growth {
            model,
            n_lo,
            n_hi,
            length,
            max_length,
            timing,
            budgets,
        } => {
            let n_lo = pick(&n_lo, &length, "N_LO")?;
            let n_hi = pick(&n_hi, &max_length, "N_HI")?;
            let m = model.build()?.as_guhat().map_err(err)?;
            let report = harness::growth(&m, n_lo, n_hi, &budgets.normalize(), &budgets.compile())
                .map_err(err)?;
            emit(&report.render(timing))?;
            Ok(report.depth_constant())
        }
        Command::Convert {
            model,
            n,
            length,
            budgets,
        } => {
            let n = pick(&n, &length, "length n")?;
            let m = match model.build()? {
                ZooModel::Restricted(m) => m,
                ZooModel::Guhat(_) => {
                    return Err(format!(
                        "`{}` is not a unique-attention vector model",
                        model.name()?
                    ))
                }
            };
            let budget = budgets.budget_inputs.unwrap_or(DEFAULT_ENUMERATION_BUDGET);
            let report = harness::convert(&m, n, budget).map_err(err)?;
            emit(&report.to_string())?;
            Ok(report.passed())
        }
        Command::Reduce { n } => {
            let report = harness::reduce(n).map_err(err)?;
            emit(&report.to_string())?;
            Ok(report.agree == report.total)
        }
        Command::Oracle { lang, input } => {
            let lang: LangSpec = lang.parse().map_err(err)?;
            let member = lang.member(&input).map_err(err)?;
            emit(&format!("{}\n", u8::from(member)))?;
            Ok(member)
        }
    }
}

const SUBCOMMANDS: [&str; 10] = [
    "list",
    "simulate",
    "nf-report",
    "compile",
    "eval",
    "equiv",
    "growth",
    "convert",
    "reduce",
    "oracle",
];

/// Moves `--model NAME` to the first positional slot so the remaining
/// positionals keep their meaning.
fn hoist_model_flag(mut args: Vec<String>) -> Vec<String> {
    let Some(sub) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return args;
    };
    let name = if let Some(i) = args.iter().position(|a| a == "--model") {
        if i + 1 >= args.len() || i < sub {
            return args;
        }
        let name = args.remove(i + 1);
        args.remove(i);
        name
    } else if let Some(i) = args.iter().position(|a| a.starts_with("--model=")) {
        if i < sub {
            return args;
        }
        args.remove(i)["--model=".len()..].to_string()
    } else {
        return args;
    };
    args.insert(sub + 1, name);
    args
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(hoist_model_flag(std::env::args().collect()));
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::hoist_model_flag;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn model_flag_becomes_first_positional() {
        assert_eq!(
            hoist_model_flag(argv("h simulate --model onestar 111")),
            argv("h simulate onestar 111")
        );
        assert_eq!(
            hoist_model_flag(argv("h --jobs 2 compile 5 --model=anbn")),
            argv("h --jobs 2 compile anbn 5")
        );
        assert_eq!(
            hoist_model_flag(argv("h simulate onestar 1")),
            argv("h simulate onestar 1")
        );
        assert_eq!(
            hoist_model_flag(argv("h simulate --model")),
            argv("h simulate --model")
        );
    }
}
