//! `xbar`: compile, expand, sample, train, parse and score CNF PCFGs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use xbar_core::chart::{count_parses, cyk_fill, parse_sentence, unconstrained_count};
use xbar_core::constraints::{build_implicit_grammar, enumerate_implicit, InitMode};
use xbar_core::corpus::{read_corpus, read_treebank, write_corpus};
use xbar_core::eval::evaluate_corpus;
use xbar_core::generate::{sample_corpus, sample_palindromes, GenConfig};
use xbar_core::grammar::{compile_cnf, parse_grammar, CnfGrammar, Origin};
use xbar_core::metrics::entropy;
use xbar_core::training::{train, TrainConfig};

#[derive(Parser)]
#[command(name = "xbar", version, about = "Feature-based PCFG toolkit with constraint-licensed implicit rules")]
struct Cli {
    /// Worker threads for sentence-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a grammar file to CNF and print its size.
    Compile {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add constraint-licensed implicit rules to a compiled grammar.
    Implicit {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample sentences from a grammar.
    Generate {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_depth: usize,
        #[arg(long, default_value_t = 60)]
        max_length: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample even-length palindromes over {a, b}.
    Palindromes {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inside-outside training. A grammar file is first expanded with implicit
    /// rules unless --explicit is given; a CNF file is trained as is.
    Train {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        explicit: bool,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1e-5)]
        prune: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Viterbi parse with per-sentence statistics.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[command(flatten)]
        input: SentenceInput,
        #[arg(long, value_enum, default_value_t = TreeFormat::Paren)]
        format: TreeFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count parses of a sentence, or the unconstrained analyses for N words and K nonterminals.
    Count {
        #[arg(long, required_unless_present = "unconstrained")]
        grammar: Option<PathBuf>,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        sentence: Option<String>,
        #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "grammar")]
        unconstrained: Option<Vec<usize>>,
    },
    /// Per-word entropy table, one row per grammar.
    Entropy {
        #[arg(long, required = true)]
        grammar: Vec<PathBuf>,
        /// Row labels, in the order of --grammar.
        #[arg(long)]
        label: Vec<String>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        root: Option<String>,
        /// Report nats per word instead of bits.
        #[arg(long)]
        nats: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score Viterbi parses against a treebank.
    Eval {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Serialize)]
struct InitArgs {
    #[arg(long, default_value_t = 0.01)]
    floor: f64,
    #[arg(long, value_enum, default_value_t = Init::Deterministic)]
    init: Init,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl InitArgs {
    fn mode(&self) -> InitMode {
        match self.init {
            Init::Deterministic => InitMode::Deterministic,
            Init::SeededRandom => InitMode::SeededRandom { seed: self.seed },
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SentenceInput {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    sentence: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Init {
    Deterministic,
    SeededRandom,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TreeFormat {
    Paren,
    Appendix3,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    inputs: Vec<String>,
    seed: Option<u64>,
    config: serde_json::Value,
    version: String,
    wall_time_secs: f64,
    output: String,
}

struct Run {
    subcommand: &'static str,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    config: serde_json::Value,
    started: Instant,
}

impl Run {
    fn new(subcommand: &'static str, inputs: &[&Path], seed: Option<u64>, config: serde_json::Value) -> Run {
        Run { subcommand, inputs: inputs.iter().map(|p| p.to_path_buf()).collect(), seed, config, started: Instant::now() }
    }

    /// Writes `text` to `out` (or stdout) and a manifest beside the file.
    fn emit(&self, out: Option<&Path>, text: &str) -> Result<()> {
        let Some(path) = out else {
            print!("{text}");
            return Ok(());
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            seed: self.seed,
            config: self.config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            output: path.display().to_string(),
        };
        let mpath = manifest_path(path);
        fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", mpath.display()))?;
        Ok(())
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn is_grammar_source(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gram")
}

/// A `.gram` file is compiled to CNF; anything else is read as CNF text.
fn load_cnf(path: &Path, root: Option<&str>) -> Result<CnfGrammar> {
    let text = read(path)?;
    if is_grammar_source(path) {
        let g = parse_grammar(&text).with_context(|| format!("in {}", path.display()))?;
        return compile_cnf(&g, root).with_context(|| format!("compiling {}", path.display()));
    }
    let mut g = CnfGrammar::from_text(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(r) = root {
        let Some(id) = g.nonterminal_id(r) else { bail!("root `{r}` is not a nonterminal of {}", path.display()) };
        g.set_root(id);
    }
    Ok(g)
}

fn load_implicit(path: &Path, root: Option<&str>, init: &InitArgs) -> Result<(CnfGrammar, usize, usize)> {
    if !is_grammar_source(path) {
        bail!("implicit rules need a grammar source file (.gram), got {}", path.display());
    }
    let g = parse_grammar(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let cnf = compile_cnf(&g, root)?;
    let imp = enumerate_implicit(&cnf, &g.constraints, &g.aliases);
    let full = build_implicit_grammar(&cnf, &imp, init.floor, init.mode())?;
    Ok((full, cnf.num_rules(), imp.len()))
}

fn split(sentence: &str) -> Vec<String> {
    sentence.split_whitespace().map(str::to_string).collect()
}

fn load_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let c = read_corpus(&read(path)?);
    if c.is_empty() {
        bail!("{} contains no sentences", path.display());
    }
    Ok(c)
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Compile { grammar, root, out } => {
            let run = Run::new("compile", &[&grammar], None, json!({ "root": root }));
            let g = load_cnf(&grammar, root.as_deref())?;
            println!("{} nonterminals, {} terminals, {} rules; root {}", g.num_nonterminals(), g.num_terminals(), g.num_rules(), g.root_name());
            if out.is_some() {
                run.emit(out.as_deref(), &g.to_text())?;
            }
        }
        Command::Implicit { grammar, root, init, out } => {
            let run = Run::new("implicit", &[&grammar], Some(init.seed), json!({ "root": root, "init": init }));
            let (g, explicit, implicit) = load_implicit(&grammar, root.as_deref(), &init)?;
            println!("{} rules: {explicit} explicit + {implicit} implicit", explicit + implicit);
            match out {
                Some(_) => run.emit(out.as_deref(), &g.to_text())?,
                None => {
                    for r in g.binary_rules().iter().filter(|r| r.origin == Origin::Implicit) {
                        println!("{} --> {} {}  implicit", g.nonterminal_name(r.mother), g.nonterminal_name(r.left), g.nonterminal_name(r.right));
                    }
                }
            }
        }
        Command::Generate { grammar, root, count, seed, max_depth, max_length, out } => {
            let cfg = GenConfig { count, seed, max_depth, max_length };
            let run = Run::new("generate", &[&grammar], Some(seed), json!({ "root": root, "count": count, "max_depth": max_depth, "max_length": max_length }));
            let g = load_cnf(&grammar, root.as_deref())?;
            let corpus = sample_corpus(&g, &cfg)?;
            run.emit(out.as_deref(), &write_corpus(&corpus))?;
        }
        Command::Palindromes { count, seed, out } => {
            let run = Run::new("palindromes", &[], Some(seed), json!({ "count": count }));
            run.emit(out.as_deref(), &write_corpus(&sample_palindromes(count, seed)))?;
        }
        Command::Train { grammar, corpus, root, explicit, init, max_iter, tol, prune, out } => {
            let cfg = TrainConfig { max_iterations: max_iter, convergence_tol: tol, prune_threshold: prune, skip_unparseable: true };
            let expand = is_grammar_source(&grammar) && !explicit;
            let run = Run::new(
                "train",
                &[&grammar, &corpus],
                expand.then_some(init.seed),
                json!({ "root": root, "explicit": explicit, "init": expand.then_some(&init), "max_iter": max_iter, "tol": tol, "prune": prune }),
            );
            let g = if expand { load_implicit(&grammar, root.as_deref(), &init)?.0 } else { load_cnf(&grammar, root.as_deref())? };
            let sentences = load_corpus(&corpus)?;
            let rep = train(&g, &sentences, &cfg)?;
            for (t, ll) in rep.log_likelihoods.iter().enumerate() {
                eprintln!("iteration {:>3}  log-likelihood {ll:.4}  nonzero {}  pruned {}", t + 1, rep.nonzero_rules[t], rep.pruned[t]);
            }
            let (e, i) = rep.grammar.nonzero_counts();
            eprintln!(
                "{} after {} iterations; final log-likelihood {:.4}; {} nonzero rules ({e} explicit + {i} implicit); coverage {:.2}% -> {:.2}%",
                if rep.converged { "converged" } else { "stopped" },
                rep.iterations,
                rep.final_log_likelihood,
                e + i,
                100.0 * rep.coverage_before,
                100.0 * rep.coverage_after
            );
            run.emit(out.as_deref(), &rep.grammar.to_text())?;
        }
        Command::Parse { grammar, root, input, format, out } => {
            let mut inputs = vec![grammar.as_path()];
            if let Some(c) = &input.corpus {
                inputs.push(c);
            }
            let run = Run::new("parse", &inputs, None, json!({ "root": root, "format": format, "sentence": input.sentence }));
            let g = load_cnf(&grammar, root.as_deref())?;
            let sentences = match (&input.corpus, &input.sentence) {
                (Some(c), _) => load_corpus(c)?,
                (None, Some(s)) => vec![split(s)],
                (None, None) => unreachable!("clap requires one input"),
            };
            let blocks: Vec<String> = sentences
                .par_iter()
                .map(|s| match parse_sentence(&g, s) {
                    Ok((v, report)) => {
                        let tree = match format {
                            TreeFormat::Paren => v.tree.to_paren(),
                            TreeFormat::Appendix3 => v.tree.to_appendix3(),
                        };
                        format!("{tree}\n{report} explicit {}/{}\n", v.explicit_rules(&g), v.rules.len())
                    }
                    Err(e) => format!("no parse: {} ({e})\n", s.join(" ")),
                })
                .collect();
            run.emit(out.as_deref(), &blocks.concat())?;
        }
        Command::Count { grammar, root, sentence, unconstrained } => {
            if let Some(nk) = unconstrained {
                println!("{}", unconstrained_count(nk[0], nk[1]));
                return Ok(());
            }
            let Some(sentence) = sentence else { bail!("count needs --sentence with --grammar") };
            let g = load_cnf(grammar.as_deref().expect("clap requires --grammar"), root.as_deref())?;
            let chart = cyk_fill(&g, &split(&sentence))?;
            println!("{}", count_parses(&chart));
        }
        Command::Entropy { grammar, label, corpus, root, nats, out } => {
            if !label.is_empty() && label.len() != grammar.len() {
                bail!("{} labels for {} grammars", label.len(), grammar.len());
            }
            let mut inputs: Vec<&Path> = grammar.iter().map(PathBuf::as_path).collect();
            inputs.push(&corpus);
            let run = Run::new("entropy", &inputs, None, json!({ "root": root, "labels": label, "nats": nats }));
            let sentences = load_corpus(&corpus)?;
            let mut table = format!("Entropy Measure ({})\tH3a\tH3b\tsentences\texcluded\n", if nats { "nats/word" } else { "bits/word" });
            for (i, path) in grammar.iter().enumerate() {
                let g = load_cnf(path, root.as_deref())?;
                let r = entropy(&g, &sentences)?;
                let (a, b) = if nats { r.in_nats() } else { (r.h3a, r.h3b) };
                let name = label.get(i).cloned().unwrap_or_else(|| path.display().to_string());
                table.push_str(&format!("{name}\t{a:.4}\t{b:.4}\t{}\t{}\n", r.k, r.skipped));
            }
            run.emit(out.as_deref(), &table)?;
        }
        Command::Eval { grammar, gold, root, out } => {
            let run = Run::new("eval", &[&grammar, &gold], None, json!({ "root": root }));
            let g = load_cnf(&grammar, root.as_deref())?;
            let trees = read_treebank(&read(&gold)?).map_err(|(line, e)| anyhow::anyhow!("{} line {line}: {e}", gold.display()))?;
            let score = evaluate_corpus(&g, &trees);
            run.emit(out.as_deref(), &format!("{score}\n"))?;
        }
    }
    Ok(())
}
