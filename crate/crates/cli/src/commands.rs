use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;
use tr_core::analysis::{check_tree, check_universal, AnalysisError, ModelsDoc, PropSequence, PropTree};
use tr_core::lang::{parse, ProgramLibrary};
use tr_core::netcomp::{compile, verify_equivalence, NetError};
use tr_core::sim::{run_headless, Scenario, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
/// `check`: not universal; `compile-net --verify`: not equivalent.
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(e) if e.is_runtime() => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn load_program(path: &Path) -> Result<ProgramLibrary, CliError> {
    parse(&read(path)?).map_err(|e| CliError::Parse(format!("{}:\n{e}", path.display())))
}

/// The named declaration, or the first one in the file.
fn pick<'a>(lib: &'a ProgramLibrary, name: Option<&'a str>) -> Result<&'a str, CliError> {
    match name {
        Some(n) if lib.programs.contains_key(n) || lib.trees.contains_key(n) => Ok(n),
        Some(n) => Err(CliError::Usage(format!("no program or tree named `{n}`"))),
        None => lib.order.first().map(String::as_str).ok_or_else(|| CliError::Usage("the file declares nothing".into())),
    }
}

/// Regression, completeness and universality of one program against action models.
pub fn check(program: &Path, models: &Path, name: Option<&str>, as_json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let lib = load_program(program)?;
    let doc = ModelsDoc::from_json(&read(models)?)?;
    let name = pick(&lib, name)?;
    let report = if let Some(p) = lib.programs.get(name) {
        let seq = PropSequence::from_program(p, None)?;
        let (features, models) = doc.resolve(&seq.features)?;
        check_universal(&PropSequence::from_program(p, Some(&features))?, &models)?
    } else {
        let t = &lib.trees[name];
        let tree = PropTree::from_tree(t, None)?;
        let (features, models) = doc.resolve(&tree.features)?;
        check_tree(&PropTree::from_tree(t, Some(&features))?, &models)?
    };
    let io = |source| CliError::Io { path: "stdout".into(), source };
    if as_json {
        let v = json!({ "program": name, "report": report });
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serialisable")).map_err(io)?;
    } else {
        write!(out, "{name}\n{}", report.render()).map_err(io)?;
    }
    Ok(if report.universal { EXIT_OK } else { EXIT_PROPERTY })
}

/// Compiles a propositional program to a threshold net and writes its JSON.
pub fn compile_net(
    program: &Path,
    output: &Path,
    name: Option<&str>,
    verify: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let lib = load_program(program)?;
    let name = pick(&lib, name)?;
    let p = lib
        .programs
        .get(name)
        .ok_or_else(|| CliError::Usage(format!("`{name}` is a tree; only rule sequences compile to nets")))?;
    let seq = PropSequence::from_program(p, None)?;
    let net = compile(&seq);
    std::fs::write(output, net.to_json() + "\n")
        .map_err(|source| CliError::Io { path: output.display().to_string(), source })?;
    let io = |source| CliError::Io { path: "stdout".into(), source };
    writeln!(
        out,
        "{name}: {} inputs, {} rules, {} actions -> {}",
        net.n,
        net.layer1.len(),
        net.action_names.len(),
        output.display()
    )
    .map_err(io)?;
    if !verify {
        return Ok(EXIT_OK);
    }
    let eq = verify_equivalence(&net, &seq)?;
    if eq.equivalent {
        writeln!(out, "equivalence: PASS ({} inputs)", eq.inputs_checked).map_err(io)?;
        Ok(EXIT_OK)
    } else {
        let cx: Vec<u8> = eq.counterexample.unwrap_or_default().into_iter().map(u8::from).collect();
        writeln!(out, "equivalence: FAIL at input {cx:?}").map_err(io)?;
        Ok(EXIT_PROPERTY)
    }
}

/// Runs a scenario headless and writes its JSONL trace to `trace` (stdout when `None`).
pub fn run(scenario: &Path, trace: Option<&Path>, seed: Option<u64>, ticks: Option<u64>) -> Result<u64, CliError> {
    let mut s = Scenario::load(scenario)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(ticks) = ticks {
        s.ticks = ticks;
    }
    for w in tr_core::sim::Sim::new(&s)?.warnings() {
        log::warn!("{w}");
    }
    let result = match trace {
        Some(path) => {
            let f = File::create(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            let mut w = BufWriter::new(f);
            let r = run_headless(&s, &mut w);
            w.flush().map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            r
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let r = run_headless(&s, &mut w);
            w.flush().map_err(|source| CliError::Io { path: "stdout".into(), source })?;
            r
        }
    };
    Ok(result?)
}
