//! Command implementations behind the `shr` binary. Every command writes its normal output to
//! `out`, diagnostics to `err`, and returns the process exit status.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use shr_core::dsl::{self, ScenarioStep, SpecFile};
use shr_core::engine::{
    applicable_steps, first_transition, run, Registry, SyncPolicy, Trace, Transition,
};
use shr_core::hypergraph::{is_isomorphic, to_dot, EdgeId, Hypergraph};
use shr_core::manager::{self, ArmedEmission};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    SpecError = 1,
    AssertionFailed = 2,
    Internal = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Steps taken by `run` when the spec has no scenario and no limit is given.
pub const DEFAULT_MAX_STEPS: usize = 100;

pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Io<'_> {
    fn error(&mut self, msg: impl std::fmt::Display) {
        let tag = if self.color { "\x1b[1;31merror\x1b[0m" } else { "error" };
        let _ = writeln!(self.err, "{tag}: {msg}");
    }

    fn warn(&mut self, msg: impl std::fmt::Display) {
        let tag = if self.color { "\x1b[1;33mwarning\x1b[0m" } else { "warning" };
        let _ = writeln!(self.err, "{tag}: {msg}");
    }

    fn print(&mut self, text: &str) -> Result<(), ExitStatus> {
        self.out.write_all(text.as_bytes()).map_err(|_| ExitStatus::Internal)
    }
}

/// Whether `SHR_COLOR` asks for ANSI colors.
pub fn color_from_env() -> bool {
    std::env::var("SHR_COLOR").is_ok_and(|v| v == "1")
}

fn load(path: &Path, io: &mut Io) -> Result<SpecFile, ExitStatus> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            io.error(format_args!("{}: {e}", path.display()));
            return Err(ExitStatus::SpecError);
        }
    };
    dsl::parse(&text).map_err(|errors| {
        for e in &errors {
            let code = if io.color { format!("\x1b[1m{}\x1b[0m", e.code) } else { e.code.to_string() };
            io.error(format_args!("{}:{}: [{code}] {}", path.display(), e.span, e.message));
        }
        ExitStatus::SpecError
    })
}

fn registry(spec: &SpecFile, io: &mut Io) -> Result<Registry, ExitStatus> {
    Registry::new(spec.productions.clone()).map_err(|diags| {
        for d in diags {
            io.error(d);
        }
        ExitStatus::SpecError
    })
}

fn write_file(path: &Path, contents: &str, io: &mut Io) -> Result<(), ExitStatus> {
    fs::write(path, contents).map_err(|e| {
        io.error(format_args!("{}: {e}", path.display()));
        ExitStatus::Internal
    })
}

fn finish(result: Result<ExitStatus, ExitStatus>) -> ExitStatus {
    result.unwrap_or_else(|status| status)
}

pub fn cmd_validate(path: &Path, io: &mut Io) -> ExitStatus {
    finish((|| {
        let spec = load(path, io)?;
        registry(&spec, io)?;
        io.print(&format!(
            "{}: ok ({} nodes, {} edges, {} productions, {} rules)\n",
            path.display(),
            spec.graph.node_count(),
            spec.graph.edge_count(),
            spec.productions.len(),
            spec.rules.len()
        ))?;
        Ok(ExitStatus::Success)
    })())
}

fn edge_ref(graph: &Hypergraph, id: EdgeId) -> String {
    match graph.edge(id) {
        Some(e) => match e.name() {
            Some(name) => name.to_string(),
            None => format!("{}#e{}", e.label().name(), id.raw()),
        },
        None => format!("e{}", id.raw()),
    }
}

/// Human-readable listing of one transition.
pub fn describe_transition(index: usize, graph: &Hypergraph, t: &Transition) -> String {
    let mut s = String::new();
    let assignment: Vec<String> = t
        .assignment
        .iter()
        .map(|(id, a)| format!("{}:{}", edge_ref(graph, *id), a.production.name))
        .collect();
    let _ = writeln!(s, "#{index} {}", assignment.join(" "));
    for f in &t.fired {
        let inputs: Vec<String> = f.inputs.iter().map(|e| edge_ref(graph, *e)).collect();
        let output = f.output.map(|e| edge_ref(graph, e)).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            s,
            "  fired {} at {}: {} -> {}",
            f.action,
            t.node_name(graph, f.node),
            output,
            inputs.join(", ")
        );
    }
    if !t.fusion.is_empty() {
        let pairs: Vec<String> = t
            .fusion
            .iter()
            .map(|(a, b)| format!("{}={}", t.node_name(graph, *a), t.node_name(graph, *b)))
            .collect();
        let _ = writeln!(s, "  fusion {}", pairs.join(", "));
    }
    s
}

fn count_line(n: usize) -> String {
    if n == 1 {
        "1 transition\n".to_string()
    } else {
        format!("{n} transitions\n")
    }
}

pub fn cmd_steps(path: &Path, policy: SyncPolicy, io: &mut Io) -> ExitStatus {
    finish((|| {
        let spec = load(path, io)?;
        let registry = registry(&spec, io)?;
        let steps = applicable_steps(&spec.graph, &registry, policy);
        let mut text = count_line(steps.len());
        for (i, t) in steps.iter().enumerate() {
            text.push_str(&describe_transition(i, &spec.graph, t));
        }
        io.print(&text)?;
        Ok(ExitStatus::Success)
    })())
}

/// Applies transition `index` and emits the whole spec with the graph replaced.
pub fn cmd_apply(path: &Path, index: usize, policy: SyncPolicy, out_file: Option<&Path>, io: &mut Io) -> ExitStatus {
    finish((|| {
        let mut spec = load(path, io)?;
        let registry = registry(&spec, io)?;
        let steps = applicable_steps(&spec.graph, &registry, policy);
        let Some(t) = steps.get(index) else {
            io.error(format_args!(
                "transition index {index} out of range ({})",
                count_line(steps.len()).trim_end()
            ));
            return Err(ExitStatus::SpecError);
        };
        spec.graph = t.result.clone();
        let text = dsl::serialize(&spec);
        match out_file {
            Some(p) => write_file(p, &text, io)?,
            None => io.print(&text)?,
        }
        Ok(ExitStatus::Success)
    })())
}

pub fn cmd_dot(path: &Path, out_file: Option<&Path>, io: &mut Io) -> ExitStatus {
    finish((|| {
        let spec = load(path, io)?;
        let dot = to_dot(&spec.graph);
        match out_file {
            Some(p) => write_file(p, &dot, io)?,
            None => io.print(&dot)?,
        }
        Ok(ExitStatus::Success)
    })())
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub policy: SyncPolicy,
    /// Caps the number of rewriting steps. Without a scenario the default is
    /// [`DEFAULT_MAX_STEPS`]; with one, the scenario runs to its end.
    pub max_steps: Option<usize>,
    pub trace: Option<PathBuf>,
    pub dot_dir: Option<PathBuf>,
}

/// How a scenario ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioOutcome {
    Completed,
    /// The step budget ran out before the scenario's next `apply`.
    BudgetExhausted,
    Failed { step: usize, message: String },
}

/// What a run produced: the trace, the graph after every step, and how it ended.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub trace: Trace,
    pub graphs: Vec<Hypergraph>,
    pub outcome: ScenarioOutcome,
    pub warnings: Vec<String>,
}

/// Executes a scenario against the spec's graph, collecting one trace record per `apply`.
pub fn run_scenario(spec: &SpecFile, registry: &Registry, policy: SyncPolicy, max_steps: Option<usize>) -> RunReport {
    let mut report = RunReport {
        trace: Trace {
            final_graph: spec.graph.clone(),
            ..Trace::default()
        },
        graphs: Vec::new(),
        outcome: ScenarioOutcome::Completed,
        warnings: Vec::new(),
    };
    report.outcome = scenario_steps(spec, registry, policy, max_steps, &mut report);
    report
}

fn scenario_steps(
    spec: &SpecFile,
    registry: &Registry,
    policy: SyncPolicy,
    max_steps: Option<usize>,
    report: &mut RunReport,
) -> ScenarioOutcome {
    let trace = &mut report.trace;
    let mut armed: Vec<ArmedEmission> = Vec::new();
    let steps = spec.scenario.as_deref().unwrap_or_default();
    for (i, step) in steps.iter().enumerate() {
        let current = trace.final_graph.clone();
        let fail = |message: String| ScenarioOutcome::Failed { step: i + 1, message };
        match step {
            ScenarioStep::Inject(event) => {
                let (new, diags) = manager::evaluate(&spec.rules, event, &current);
                report.warnings.extend(diags.iter().map(|d| format!("inject {}: {d}", event.name)));
                armed.extend(new);
            }
            ScenarioStep::Apply(index) => {
                if max_steps.is_some_and(|max| trace.len() >= max) {
                    return ScenarioOutcome::BudgetExhausted;
                }
                let candidates = if armed.is_empty() {
                    applicable_steps(&current, registry, policy)
                } else {
                    manager::armed_steps(&current, registry, &armed, policy)
                };
                let Some(t) = candidates.get(*index) else {
                    let outcome = fail(format!(
                        "apply {index}: only {}",
                        count_line(candidates.len()).trim_end()
                    ));
                    return outcome;
                };
                trace.push(&current, t);
                trace.final_graph = t.result.clone();
                report.graphs.push(t.result.clone());
                armed.clear();
            }
            ScenarioStep::AssertCount { label, op, value } => {
                let found = current.edges_with_label(label).count() as u64;
                if !op.holds(found, *value) {
                    let outcome = fail(format!(
                        "assert count({label}) {} {value}: found {found}",
                        op.symbol()
                    ));
                    return outcome;
                }
            }
            ScenarioStep::AssertIso(expected) => {
                if !is_isomorphic(&current, expected) {
                    let outcome = fail(format!(
                        "assert iso: current graph differs\n{}",
                        dsl::print_graph(&current)
                    ));
                    return outcome;
                }
            }
        }
    }
    ScenarioOutcome::Completed
}

fn write_dots(spec: &SpecFile, graphs: &[Hypergraph], dir: &Path, io: &mut Io) -> Result<(), ExitStatus> {
    if graphs.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(|e| {
        io.error(format_args!("{}: {e}", dir.display()));
        ExitStatus::Internal
    })?;
    for (i, g) in std::iter::once(&spec.graph).chain(graphs).enumerate() {
        write_file(&dir.join(format!("step-{i:03}.dot")), &to_dot(g), io)?;
    }
    Ok(())
}

/// Runs the scenario, or the engine alone when the spec has none.
pub fn execute(spec: &SpecFile, registry: &Registry, opts: &RunOptions) -> RunReport {
    if spec.scenario.is_some() {
        return run_scenario(spec, registry, opts.policy, opts.max_steps);
    }
    let mut graphs = Vec::new();
    let mut record = |steps: &[Transition]| {
        let choice = first_transition(steps);
        if let Some(i) = choice {
            graphs.push(steps[i].result.clone());
        }
        choice
    };
    let max = opts.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    let trace = run(&spec.graph, registry, opts.policy, &mut record, max);
    RunReport {
        trace,
        graphs,
        outcome: ScenarioOutcome::Completed,
        warnings: Vec::new(),
    }
}

pub fn cmd_run(path: &Path, opts: &RunOptions, io: &mut Io) -> ExitStatus {
    finish((|| {
        let spec = load(path, io)?;
        let registry = registry(&spec, io)?;
        let report = execute(&spec, &registry, opts);
        for w in &report.warnings {
            io.warn(w);
        }
        let trace = &report.trace;

        if let Some(p) = &opts.trace {
            write_file(p, &trace.to_json_lines(), io)?;
        }
        if let Some(dir) = &opts.dot_dir {
            write_dots(&spec, &report.graphs, dir, io)?;
        }

        let mut summary = String::new();
        for s in &trace.steps {
            let prods: Vec<&str> = s.assignment.iter().map(|a| a.production.as_str()).collect();
            let _ = writeln!(summary, "step {}: {} -> {}", s.step, prods.join(" "), &s.result_digest[..12]);
        }
        match &report.outcome {
            ScenarioOutcome::Completed => {
                let _ = writeln!(summary, "{}", steps_line(trace.len()));
            }
            ScenarioOutcome::BudgetExhausted => {
                let _ = writeln!(summary, "{} (step budget exhausted)", steps_line(trace.len()));
            }
            ScenarioOutcome::Failed { .. } => {}
        }
        summary.push_str(&dsl::print_graph(&trace.final_graph));
        io.print(&summary)?;

        if let ScenarioOutcome::Failed { step, message } = &report.outcome {
            io.error(format_args!("scenario step {step} failed: {message}"));
            return Ok(ExitStatus::AssertionFailed);
        }
        Ok(ExitStatus::Success)
    })())
}

fn steps_line(n: usize) -> String {
    if n == 1 {
        "1 step".to_string()
    } else {
        format!("{n} steps")
    }
}
