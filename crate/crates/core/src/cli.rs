//! Command-line front end. `run` is the whole program minus process exit, so
//! tests can drive it with an in-memory writer.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::catalog::{verify_analysis, Analysis, Example};
use crate::consistency::enforce_23_consistency_seeded;
use crate::error::{Error, Result};
use crate::family::{simulate_deletion, step4_candidates, CensusMode};
use crate::format;
use crate::hom::HomSearch;
use crate::structures::{check_operation_properties, check_polymorphism};

#[derive(Parser, Debug)]
#[command(name = "fkr-cex", version, about = "Counterexamples for list-shrinking by Mal'tsev violations")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the template, instance, operation and both digraphs of an example.
    Build {
        #[arg(long)]
        example: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an operation against a template.
    Check {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        op: PathBuf,
    },
    /// Enforce (2,3)-consistency and print the lists.
    Consistency {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        h: PathBuf,
        /// Also print the pair lists.
        #[arg(long)]
        pairs: bool,
        /// Shuffle the propagation order with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Count or list homomorphisms.
    Homs {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        limit: Option<u64>,
        #[arg(long)]
        list: bool,
    },
    /// Run every check for an example.
    Claims {
        example: String,
        #[arg(long)]
        json: bool,
    },
    /// Simulate list-shrinking deletions on an example.
    FkrStep4 {
        #[arg(long)]
        example: String,
        /// `vertex:value`, by label; repeatable.
        #[arg(long = "delete")]
        deletions: Vec<String>,
        #[arg(long)]
        classify_all: bool,
        #[arg(long, value_enum, default_value_t = OutFormat::Text)]
        format: OutFormat,
        /// Re-close after each deletion instead of filtering the solution set.
        #[arg(long)]
        reclose: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Text,
    Tsv,
}

/// Runs the CLI. Returns 0 on success, 1 when a check fails and 2 on bad
/// input or usage.
pub fn run<I, S, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(out, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn example(name: &str) -> Result<Example> {
    Example::parse(name).ok_or_else(|| Error::Input(format!("unknown example {name:?} (use 1, 2 or 2x)")))
}

fn io<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(Error::Io)
}

fn dispatch<W: Write>(cmd: Command, out: &mut W) -> Result<i32> {
    match cmd {
        Command::Build { example: name, out: dir } => {
            let b = example(&name)?.build()?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
            let tr = &b.translation;
            let files = [
                ("template.txt", format::write_template(&b.template)),
                ("core-template.txt", format::write_template(&b.core_template)),
                ("instance.txt", format::write_instance(&b.instance)),
                ("phi.txt", format::write_operation(&b.phi, b.template.domain())),
                ("H.dg", format::write_digraph(&tr.h)),
                ("G.dg", format::write_digraph(&tr.g)),
                ("provenance.tsv", format::write_provenance(tr)),
            ];
            for (f, text) in &files {
                write_file(&dir.join(f), text)?;
            }
            io(writeln!(
                out,
                "{}: H has {} vertices, G has {} vertices; wrote {} files to {}",
                b.example.name(),
                tr.h.len(),
                tr.g.len(),
                files.len(),
                dir.display()
            ))?;
            Ok(0)
        }
        Command::Check { template, op } => {
            let t = format::parse_template(&read(&template)?)?;
            let o = format::parse_operation(&read(&op)?, t.domain())?;
            let p = check_operation_properties(&o)?;
            io(writeln!(out, "idempotent {}\ncyclic {}\nwnu {}", p.idempotent, p.cyclic, p.wnu))?;
            let pairs: Vec<String> = p
                .maltsev_pairs
                .iter()
                .map(|&(a, b)| format!("({},{})", t.domain().label(a), t.domain().label(b)))
                .collect();
            io(writeln!(out, "maltsev-violations {}", pairs.join(" ")))?;
            match check_polymorphism(&o, &t)? {
                None => {
                    io(writeln!(out, "polymorphism yes"))?;
                    Ok(0)
                }
                Some(v) => {
                    let d = t.domain();
                    let ins: Vec<String> = v.inputs.iter().map(|x| d.tuple_label(x)).collect();
                    io(writeln!(
                        out,
                        "polymorphism no: {} maps {} to {}",
                        v.relation,
                        ins.join(","),
                        d.tuple_label(&v.output)
                    ))?;
                    Ok(1)
                }
            }
        }
        Command::Consistency { g, h, pairs, seed } => {
            let g = format::parse_digraph(&read(&g)?)?;
            let h = format::parse_digraph(&read(&h)?)?;
            let st = enforce_23_consistency_seeded(&g, &h, seed);
            io(write!(out, "{}", format::write_lists(&st, &g, &h, pairs)))?;
            Ok(if st.is_consistent() { 0 } else { 1 })
        }
        Command::Homs { g, h, limit, list } => {
            let g = format::parse_digraph(&read(&g)?)?;
            let h = format::parse_digraph(&read(&h)?)?;
            let mut io_err = None;
            let n = HomSearch::new(&g, &h).limit(limit).for_each(|m| {
                if list {
                    let line: Vec<String> =
                        m.iter().enumerate().map(|(v, &a)| format!("{}={}", g.label(v), h.label(a))).collect();
                    if let Err(e) = writeln!(out, "{}", line.join(" ")) {
                        io_err = Some(e);
                        return std::ops::ControlFlow::Break(());
                    }
                }
                std::ops::ControlFlow::Continue(())
            });
            if let Some(e) = io_err {
                return Err(Error::Io(e));
            }
            io(writeln!(out, "{n} homomorphism(s)"))?;
            Ok(0)
        }
        Command::Claims { example: name, json } => {
            let an = Analysis::new(example(&name)?.build()?);
            let report = verify_analysis(&an)?;
            let text = if json { report.to_json_lines() } else { report.to_text() };
            io(write!(out, "{text}"))?;
            Ok(if report.all_passed() { 0 } else { 1 })
        }
        Command::FkrStep4 {
            example: name,
            deletions,
            classify_all,
            format: fmt,
            reclose,
        } => step4(&name, &deletions, classify_all, fmt, reclose, out),
    }
}

fn step4<W: Write>(name: &str, deletions: &[String], classify_all: bool, fmt: OutFormat, reclose: bool, out: &mut W) -> Result<i32> {
    if deletions.is_empty() && !classify_all {
        return Err(Error::Input("give --delete vertex:value or --classify-all".into()));
    }
    let an = Analysis::new(example(name)?.build()?);
    let tr = &an.bundle.translation;
    let family = an.family.as_ref().map_err(|e| Error::Construction(e.to_string()))?;
    let cands = step4_candidates(tr.g.labels(), tr.h.labels(), family);
    let header = "region\tvertex\tvalue\tcandidate\tsolutions_before\tsolutions_after\tvariable_solutions_after\tverdict";
    if let OutFormat::Tsv = fmt {
        io(writeln!(out, "{header}"))?;
    }
    let emit = |out: &mut W, region: &str, v: usize, a: usize, before: u64, after: u64, vars: u64| -> Result<()> {
        let cand = cands.iter().any(|c| c.vertex == v && c.value == a);
        let verdict = if after > 0 { "safe" } else { "fatal" };
        let (gv, ha) = (tr.g.label(v), tr.h.label(a));
        io(match fmt {
            OutFormat::Tsv => writeln!(out, "{region}\t{gv}\t{ha}\t{cand}\t{before}\t{after}\t{vars}\t{verdict}"),
            OutFormat::Text => writeln!(
                out,
                "delete {ha} from L({gv}) [{region}{}]: {before} -> {after} homomorphism(s), {vars} variable solution(s), {verdict}",
                if cand { ", violation" } else { "" }
            ),
        })
    };
    for d in deletions {
        let (vl, al) = d
            .rsplit_once(':')
            .ok_or_else(|| Error::Input(format!("--delete {d:?}: expected vertex:value")))?;
        let v = tr.g.vertex(vl).ok_or_else(|| Error::Input(format!("no vertex {vl:?} in G")))?;
        let a = tr.h.vertex(al).ok_or_else(|| Error::Input(format!("no vertex {al:?} in H")))?;
        if !an.state.contains(v, a) {
            return Err(Error::Input(format!("{al} is not in L({vl})")));
        }
        let verdict = simulate_deletion(tr, &an.state, v, a)?;
        emit(
            out,
            &an.bundle.region(v),
            v,
            a,
            verdict.solutions_before,
            verdict.solutions_after,
            verdict.variable_solutions_after,
        )?;
    }
    if classify_all {
        let mode = if reclose { CensusMode::Reclose } else { CensusMode::SolutionSet };
        let census = an.census(mode)?;
        for (region, v) in &census.verdicts {
            emit(out, region, v.vertex, v.value, v.solutions_before, v.solutions_after, v.variable_solutions_after)?;
        }
        if let OutFormat::Text = fmt {
            for (region, (safe, fatal)) in census.tally() {
                io(writeln!(out, "{region}: {safe} safe, {fatal} fatal"))?;
            }
        }
    }
    Ok(0)
}
