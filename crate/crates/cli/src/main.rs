use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pgplan::observer::{divulged_plan, finest_observer, Divulged};
use pgplan::pgraph::{image_graph, preimage_graph, sde, tensor_product, to_dot, GraphDoc};
use pgplan::scenarios::{build_nuclear, build_pentagon};
use pgplan::seek_p::{check_with, seek_plan, Outcome, SeekPConfig};
use pgplan::seek_plm::{seek_plan_and_map, SeekPlmConfig};
use pgplan::stipulation::{parse, Formula};
use pgplan::{Exec, LabelMap, PGraph, Plan, PlanningProblem};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "pgplan", version, about = "Plan synthesis under an observer")]
struct Cli {
    /// Worker threads for the data-parallel stages (1 runs sequentially).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Write the run report here instead of standard output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a graph document for structural problems.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// State-determined expansion; a goal keeps the subsets inside it.
    Sde {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tensor product of two graphs.
    Product {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Image of a graph under a label map.
    Image {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Preimage of an image-alphabet graph; `--world` fixes the map's domain.
    Preimage {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify that a plan solves the problem and satisfies the stipulation.
    Check {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        observer: ObserverArgs,
        /// Divulged plan; repeat for a plan collection. Defaults to the plan.
        #[arg(long)]
        divulged: Vec<PathBuf>,
    },
    /// Search for a plan under a fixed observer and label map.
    SolveP {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        observer: ObserverArgs,
        /// Divulged plan; repeat for a plan collection. Defaults to the world.
        #[arg(long)]
        divulged: Vec<PathBuf>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a plan together with a label map.
    SolvePlm {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 1)]
        revisit: usize,
        #[arg(long)]
        out_plan: Option<PathBuf>,
        #[arg(long)]
        out_map: Option<PathBuf>,
    },
    /// Write one of the bundled worlds to a directory.
    Scenario {
        name: ScenarioName,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Graphviz rendering of a graph document.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "G")]
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioName {
    Nuclear,
    Pentagon,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    world: PathBuf,
    /// Comma-separated goal vertices, overriding the world's `goal` list.
    #[arg(long, value_delimiter = ',')]
    goal: Option<Vec<String>>,
    /// Stipulation in CNF, e.g. `!w4 & (w1 | w3)`.
    #[arg(long, conflicts_with = "phi_file")]
    phi: Option<String>,
    /// File holding the stipulation on one line.
    #[arg(long)]
    phi_file: Option<PathBuf>,
}

#[derive(Args)]
struct ObserverArgs {
    /// Observer filter; defaults to the finest one for the map.
    #[arg(long)]
    observer: Option<PathBuf>,
    /// Label map; defaults to the identity.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunReport {
    command: Vec<String>,
    workers: usize,
    inputs: Vec<InputDigest>,
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    stats: Value,
    artifacts: Vec<String>,
}

/// How a command ended, before it becomes an exit code.
enum Status {
    Ok,
    Found,
    None,
    Fails,
    Inconclusive,
}

impl Status {
    fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Found => "found",
            Status::None => "none",
            Status::Fails => "fails",
            Status::Inconclusive => "inconclusive",
        }
    }

    fn code(&self) -> u8 {
        match self {
            Status::Ok | Status::Found => 0,
            Status::None | Status::Fails => 1,
            Status::Inconclusive => 2,
        }
    }
}

struct Run {
    exec: Exec,
    inputs: Vec<InputDigest>,
    artifacts: Vec<String>,
    stats: Value,
    message: Option<String>,
    /// Set when a payload went to stdout, so the report must not.
    stdout_used: bool,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    fn graph(&mut self, path: &Path) -> Result<PGraph> {
        let text = self.read(path)?;
        PGraph::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    fn map(&mut self, path: Option<&Path>, g: &PGraph) -> Result<LabelMap> {
        match path {
            None => Ok(LabelMap::identity_for(g)),
            Some(p) => {
                let text = self.read(p)?;
                LabelMap::from_json(&text, g).with_context(|| format!("in {}", p.display()))
            }
        }
    }

    fn problem(&mut self, a: &ProblemArgs) -> Result<(PlanningProblem, Formula)> {
        let text = self.read(&a.world)?;
        let mut problem = PlanningProblem::from_json(&text)
            .with_context(|| format!("in {}", a.world.display()))?;
        if let Some(goal) = &a.goal {
            problem = PlanningProblem::from_ids(problem.world, goal).context("in --goal")?;
        }
        let phi = match (&a.phi, &a.phi_file) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => {
                let text = self.read(p)?;
                let mut lines = text.lines().filter(|l| !l.trim().is_empty());
                let line = lines.next().unwrap_or("").to_owned();
                if lines.next().is_some() {
                    bail!("{}: the stipulation must fit on one line", p.display());
                }
                line
            }
            (None, None) => "true".to_owned(),
        };
        let formula = if phi.trim() == "true" {
            Formula {
                clauses: Vec::new(),
            }
        } else {
            parse(&phi).context("in the stipulation")?
        };
        Ok((problem, formula))
    }

    fn divulged(&mut self, paths: &[PathBuf]) -> Result<Option<PGraph>> {
        let graphs = paths
            .iter()
            .map(|p| self.graph(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(match graphs.len() {
            0 => None,
            1 => Some(divulged_plan(&Divulged::ExactPlan(
                graphs.into_iter().next().unwrap(),
            ))?),
            _ => Some(divulged_plan(&Divulged::PlanCollection(graphs))?),
        })
    }

    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(p) => {
                write_atomic(p, text)?;
                self.artifacts.push(p.display().to_string());
            }
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                if !text.ends_with('\n') {
                    so.write_all(b"\n")?;
                }
                self.stdout_used = true;
            }
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        tmp.write_all(b"\n")?;
    }
    tmp.persist(path)
        .map_err(|e| anyhow!(e.error))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn sde_doc(doc: &GraphDoc) -> Result<GraphDoc> {
    let g = doc.to_graph()?;
    let x = sde(&g);
    let mut out = GraphDoc::from_graph(&x.graph);
    if let Some(goal) = &doc.goal {
        let goal = g.set_of(goal)?;
        out.goal = Some(
            x.subsets
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.is_empty() && s.is_subset(&goal))
                .map(|(v, _)| x.graph.id(v).to_owned())
                .collect(),
        );
    }
    Ok(out)
}

fn execute(cmd: &Cmd, run: &mut Run) -> Result<Status> {
    match cmd {
        Cmd::Validate { input } => {
            let text = run.read(input)?;
            let g = PGraph::from_json(&text).with_context(|| format!("in {}", input.display()))?;
            let violations: Vec<String> = g.validate().iter().map(ToString::to_string).collect();
            let warnings: Vec<String> = g.warnings().iter().map(ToString::to_string).collect();
            run.stats = json!({
                "vertices": g.vertex_count(),
                "state_determined": g.is_state_determined(),
                "warnings": warnings,
            });
            if !violations.is_empty() {
                bail!("{}", violations.join("; "));
            }
            Ok(Status::Ok)
        }
        Cmd::Sde { input, out } => {
            let text = run.read(input)?;
            let doc = GraphDoc::parse(&text).with_context(|| format!("in {}", input.display()))?;
            let x = sde_doc(&doc).with_context(|| format!("in {}", input.display()))?;
            run.stats =
                json!({ "vertices_in": doc.vertices.len(), "vertices_out": x.vertices.len() });
            run.emit(out.as_deref(), &x.to_json())?;
            Ok(Status::Ok)
        }
        Cmd::Product { left, right, out } => {
            let (a, b) = (run.graph(left)?, run.graph(right)?);
            let p = tensor_product(&a, &b)?;
            run.stats = json!({ "vertices": p.vertex_count() });
            run.emit(out.as_deref(), &p.to_json())?;
            Ok(Status::Ok)
        }
        Cmd::Image { input, map, out } => {
            let g = run.graph(input)?;
            let h = run.map(Some(map), &g)?;
            let ig = image_graph(&h, &g)?;
            run.stats = json!({ "vertices": ig.vertex_count() });
            run.emit(out.as_deref(), &ig.to_json())?;
            Ok(Status::Ok)
        }
        Cmd::Preimage {
            input,
            map,
            world,
            out,
        } => {
            let ig = run.graph(input)?;
            let w = run.graph(world)?;
            let h = run.map(Some(map), &w)?;
            let g = preimage_graph(&h, &ig)?;
            run.stats = json!({ "vertices": g.vertex_count() });
            run.emit(out.as_deref(), &g.to_json())?;
            Ok(Status::Ok)
        }
        Cmd::Check {
            problem,
            plan,
            observer,
            divulged,
        } => {
            let (problem, formula) = run.problem(problem)?;
            let text = run.read(plan)?;
            let plan = Plan::from_json(&text).with_context(|| format!("in {}", plan.display()))?;
            let w = &problem.world;
            let h = run.map(observer.map.as_deref(), w)?;
            let i = match &observer.observer {
                Some(p) => run.graph(p)?,
                None => finest_observer(w, &h)?,
            };
            let d = run
                .divulged(divulged)?
                .unwrap_or_else(|| plan.graph.clone());
            let f = formula.bind(w)?;
            let report = check_with(&problem, &plan, &d, &i, &h, &f, run.exec)?;
            run.stats = json!({
                "evaluation_points": report.evaluation_points,
                "empty_estimate": report.empty_estimate,
            });
            Ok(match report.failure {
                None => Status::Ok,
                Some(e) => {
                    run.message = Some(e.to_string());
                    Status::Fails
                }
            })
        }
        Cmd::SolveP {
            problem,
            observer,
            divulged,
            depth,
            budget,
            out,
        } => {
            let (problem, formula) = run.problem(problem)?;
            let w = &problem.world;
            let h = run.map(observer.map.as_deref(), w)?;
            let i = match &observer.observer {
                Some(p) => run.graph(p)?,
                None => finest_observer(w, &h)?,
            };
            let d = run.divulged(divulged)?.unwrap_or_else(|| w.clone());
            let f = formula.bind(w)?;
            let cfg = SeekPConfig {
                depth_bound: *depth,
                budget: *budget,
                exec: run.exec,
            };
            let res = seek_plan(&problem, &i, &d, &h, &f, &cfg)?;
            let s = &res.stats;
            run.stats = json!({
                "triples": s.triples,
                "beliefs_evaluated": s.beliefs_evaluated,
                "expansions": s.expansions,
                "depth_bound": s.depth_bound,
                "plan_depth": s.plan_depth,
                "elapsed_ms": s.elapsed_ms as u64,
            });
            Ok(match res.outcome {
                Outcome::Found(plan) => {
                    run.emit(out.as_deref(), &plan.to_json())?;
                    Status::Found
                }
                Outcome::NoneExists => Status::None,
                Outcome::Inconclusive(why) => {
                    run.message = Some(why);
                    Status::Inconclusive
                }
            })
        }
        Cmd::SolvePlm {
            problem,
            depth,
            budget,
            revisit,
            out_plan,
            out_map,
        } => {
            let (problem, formula) = run.problem(problem)?;
            let f = formula.bind(&problem.world)?;
            let cfg = SeekPlmConfig {
                max_depth: *depth,
                budget: *budget,
                exec: run.exec,
                revisit_limit: *revisit,
                ..SeekPlmConfig::default()
            };
            let res = seek_plan_and_map(&problem, &f, &cfg)?;
            let s = &res.stats;
            run.stats = json!({
                "nodes_expanded": s.nodes_expanded,
                "partitions_tried": s.partitions_tried,
                "conflicts": s.conflicts,
                "beliefs_evaluated": s.beliefs_evaluated,
                "candidates_checked": s.candidates_checked,
                "candidates_rejected": s.candidates_rejected,
                "depth_limited": s.depth_limited,
                "elapsed_ms": s.elapsed_ms as u64,
            });
            Ok(match res.outcome {
                Outcome::Found(pm) => {
                    run.emit(out_plan.as_deref(), &pm.plan.to_json())?;
                    run.emit(out_map.as_deref(), &pm.map.to_json())?;
                    Status::Found
                }
                Outcome::NoneExists => Status::None,
                Outcome::Inconclusive(why) => {
                    run.message = Some(why);
                    Status::Inconclusive
                }
            })
        }
        Cmd::Scenario { name, out_dir } => {
            fs::create_dir_all(out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let mut files: Vec<(&str, String)> = Vec::new();
            match name {
                ScenarioName::Nuclear => {
                    let s = build_nuclear();
                    files.push(("world.json", s.problem.to_json()));
                    files.push(("raw.json", s.raw.to_json()));
                    files.push(("map.json", s.map.to_json()));
                    files.push(("formula.txt", s.formula.to_string()));
                }
                ScenarioName::Pentagon => {
                    let s = build_pentagon();
                    files.push(("world.json", s.problem.to_json()));
                    files.push(("formula.txt", s.formula.to_string()));
                    files.push(("direct_exit.json", s.direct_exit.to_json()));
                }
            }
            for (file, text) in files {
                run.emit(Some(&out_dir.join(file)), &text)?;
            }
            Ok(Status::Ok)
        }
        Cmd::Render { input, out, name } => {
            let g = run.graph(input)?;
            run.emit(out.as_deref(), &to_dot(&g, name))?;
            Ok(Status::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.max(1);
    if workers > 1 {
        // a second initialisation only fails if the pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let mut run = Run {
        exec: Exec::from_workers(workers),
        inputs: Vec::new(),
        artifacts: Vec::new(),
        stats: Value::Null,
        message: None,
        stdout_used: false,
    };
    let result = execute(&cli.cmd, &mut run);
    let (outcome, code) = match &result {
        Ok(status) => (status.label(), status.code()),
        Err(e) => {
            let msg = format!("{e:#}");
            eprintln!("error: {msg}");
            run.message = Some(msg);
            ("invalid", 3)
        }
    };
    let report = RunReport {
        command: std::env::args().collect(),
        workers,
        inputs: run.inputs,
        outcome,
        message: run.message,
        stats: run.stats,
        artifacts: run.artifacts,
    };
    let text = serde_json::to_string_pretty(&report).expect("reports always serialize");
    match &cli.report {
        Some(p) => {
            if let Err(e) = write_atomic(p, &text) {
                eprintln!("error: {e:#}");
                return ExitCode::from(4);
            }
        }
        None if run.stdout_used => eprintln!("{text}"),
        None => println!("{text}"),
    }
    ExitCode::from(code)
}
