//! SMT-LIB2 solver process driven over pipes (z3 by default).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{check_ground, ArrayValue, Model, SatResult, SmtError, Solver, SolverStats, Value};
use crate::term::sexp::{parse_one, Sexp};
use crate::term::{Sort, Term, UConst};

/// Environment variable naming the solver binary.
pub const SOLVER_ENV: &str = "QUIC3_SOLVER";

/// Locate a solver: `$QUIC3_SOLVER`, then `z3` on `PATH`.
pub fn find_solver() -> Result<PathBuf, SmtError> {
    if let Some(p) = std::env::var_os(SOLVER_ENV) {
        return Ok(PathBuf::from(p));
    }
    let path = std::env::var_os("PATH").unwrap_or_default();
    for dir in std::env::split_paths(&path) {
        let cand = dir.join("z3");
        if cand.is_file() {
            return Ok(cand);
        }
    }
    Err(SmtError::NotFound(SOLVER_ENV))
}

struct Proc {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    declared: HashSet<UConst>,
}

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Debug)]
enum Failure {
    Timeout,
    Died(String),
    Error(String),
}

pub struct ExternalSolver {
    program: PathBuf,
    args: Vec<String>,
    timeout: Duration,
    proc: Option<Proc>,
    stats: SolverStats,
}

fn is_cvc5(program: &Path) -> bool {
    program.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.contains("cvc5"))
}

fn sort_str(s: Sort) -> &'static str {
    match s {
        Sort::Bool => "Bool",
        Sort::Int => "Int",
        Sort::Array => "(Array Int Int)",
    }
}

impl ExternalSolver {
    /// `timeout` bounds each query; the process is spawned lazily.
    pub fn new(program: impl Into<PathBuf>, timeout: Duration) -> Result<Self, SmtError> {
        ExternalSolver::with_flags(program, timeout, &[])
    }

    /// Like [`ExternalSolver::new`], appending `extra` to the command line.
    pub fn with_flags(program: impl Into<PathBuf>, timeout: Duration, extra: &[String]) -> Result<Self, SmtError> {
        let program = program.into();
        let ms = timeout.as_millis().max(1);
        let args = if is_cvc5(&program) {
            vec![
                "--lang=smt2".into(),
                "--incremental".into(),
                "--produce-models".into(),
                "--produce-unsat-cores".into(),
                format!("--tlimit-per={ms}"),
            ]
        } else {
            vec!["-in".into(), "-smt2".into(), format!("-t:{ms}")]
        };
        let args = args.into_iter().chain(extra.iter().cloned()).collect();
        let mut s = ExternalSolver { program, args, timeout, proc: None, stats: SolverStats::default() };
        s.spawn()?;
        Ok(s)
    }

    /// Use the solver found by [`find_solver`].
    pub fn discover(timeout: Duration) -> Result<Self, SmtError> {
        ExternalSolver::new(find_solver()?, timeout)
    }

    fn spawn(&mut self) -> Result<(), SmtError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SmtError::Spawn { cmd: self.program.display().to_string(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut p = Proc { child, stdin, lines: rx, declared: HashSet::new() };
        let setup = "(set-option :produce-models true)\n(set-option :produce-unsat-cores true)\n";
        if !is_cvc5(&self.program) {
            p.stdin.write_all(setup.as_bytes()).map_err(|source| SmtError::Spawn { cmd: self.program.display().to_string(), source })?;
        }
        self.proc = Some(p);
        Ok(())
    }

    fn proc(&mut self) -> Result<&mut Proc, Failure> {
        if self.proc.is_none() {
            self.spawn().map_err(|e| Failure::Died(e.to_string()))?;
        }
        Ok(self.proc.as_mut().unwrap())
    }

    fn send(&mut self, cmd: &str) -> Result<(), Failure> {
        let p = self.proc()?;
        p.stdin.write_all(cmd.as_bytes()).and_then(|_| p.stdin.write_all(b"\n")).and_then(|_| p.stdin.flush()).map_err(|e| Failure::Died(e.to_string()))
    }

    /// Read one complete response S-expression.
    fn read(&mut self, wait: Duration) -> Result<Sexp, Failure> {
        let deadline = Instant::now() + wait;
        let p = self.proc()?;
        let mut buf = String::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match p.lines.recv_timeout(left) {
                Ok(line) => {
                    buf.push_str(&line);
                    buf.push('\n');
                    if balanced(&buf) && !buf.trim().is_empty() {
                        let s = parse_one(&buf).map_err(|e| Failure::Error(format!("unparsable response: {e}")))?;
                        if s.head() == Some("error") {
                            return Err(Failure::Error(s.to_string()));
                        }
                        return Ok(s);
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Err(Failure::Timeout),
                Err(RecvTimeoutError::Disconnected) => return Err(Failure::Died("solver exited".into())),
            }
        }
    }

    fn grace(&self) -> Duration {
        self.timeout + Duration::from_secs(5)
    }

    fn declare(&mut self, consts: &BTreeSet<UConst>) -> Result<(), Failure> {
        let mut decls = String::new();
        {
            let p = self.proc()?;
            for c in consts {
                if p.declared.insert(c.clone()) {
                    decls.push_str(&format!("(declare-const {} {})\n", c.symbol(), sort_str(c.sort())));
                }
            }
        }
        if decls.is_empty() {
            return Ok(());
        }
        self.send(decls.trim_end())
    }

    fn run(&mut self, assertions: &[(String, Term)]) -> Result<SatResult, Failure> {
        let consts: BTreeSet<UConst> = assertions.iter().flat_map(|(_, t)| t.consts()).collect();
        self.declare(&consts)?;
        let mut script = String::from("(push 1)\n");
        let mut names: HashMap<String, String> = HashMap::new();
        for (i, (label, t)) in assertions.iter().enumerate() {
            let name = format!("q!{i}");
            script.push_str(&format!("(assert (! {t} :named {name}))\n"));
            names.insert(name, label.clone());
        }
        script.push_str("(check-sat)");
        self.send(&script)?;
        let answer = self.read(self.grace())?;
        let result = match answer.atom() {
            Some("sat") => {
                let model = self.model(&consts)?;
                match assertions.iter().find(|(_, t)| !model.satisfies(t)) {
                    None => SatResult::Sat(model),
                    Some((l, _)) => SatResult::Unknown(format!("model does not satisfy assertion {l}")),
                }
            }
            Some("unsat") => {
                self.send("(get-unsat-core)")?;
                let core = self.read(self.grace())?;
                let labels = core
                    .list()
                    .ok_or_else(|| Failure::Error(format!("bad unsat core {core}")))?
                    .iter()
                    .filter_map(|s| s.atom().and_then(|a| names.get(a)).cloned())
                    .collect();
                SatResult::Unsat(labels)
            }
            Some("unknown") => {
                self.send("(get-info :reason-unknown)")?;
                let reason = self.read(self.grace()).map(|s| s.to_string()).unwrap_or_default();
                SatResult::Unknown(format!("solver returned unknown {reason}"))
            }
            _ => return Err(Failure::Error(format!("unexpected response {answer}"))),
        };
        self.send("(pop 1)")?;
        Ok(result)
    }

    fn model(&mut self, consts: &BTreeSet<UConst>) -> Result<Model, Failure> {
        let mut m = Model::new();
        if consts.is_empty() {
            return Ok(m);
        }
        let syms: Vec<String> = consts.iter().map(UConst::symbol).collect();
        self.send(&format!("(get-value ({}))", syms.join(" ")))?;
        let resp = self.read(self.grace())?;
        let pairs = resp.list().ok_or_else(|| Failure::Error(format!("bad model {resp}")))?;
        let by_name: HashMap<String, &UConst> = consts.iter().map(|c| (c.symbol(), c)).collect();
        for pair in pairs {
            let Some([key, val]) = pair.list() else { return Err(Failure::Error(format!("bad model entry {pair}"))) };
            let c = key.atom().and_then(|k| by_name.get(k)).ok_or_else(|| Failure::Error(format!("unknown model key {key}")))?;
            let v = parse_value(val, c.sort()).ok_or_else(|| Failure::Error(format!("unsupported model value {val}")))?;
            m.set((*c).clone(), v);
        }
        Ok(m)
    }

    fn finish(&mut self, r: Result<SatResult, Failure>) -> SatResult {
        match r {
            Ok(r) => r,
            Err(f) => {
                warn!("solver failure: {f:?}; restarting");
                self.proc = None;
                SatResult::Unknown(match f {
                    Failure::Timeout => "timeout".into(),
                    Failure::Died(m) | Failure::Error(m) => m,
                })
            }
        }
    }
}

fn balanced(s: &str) -> bool {
    let mut depth = 0i64;
    let mut in_str = false;
    let mut in_sym = false;
    for c in s.chars() {
        match c {
            '"' if !in_sym => in_str = !in_str,
            '|' if !in_str => in_sym = !in_sym,
            '(' if !in_str && !in_sym => depth += 1,
            ')' if !in_str && !in_sym => depth -= 1,
            _ => {}
        }
    }
    depth <= 0 && !in_str && !in_sym
}

fn parse_int(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a, _) => a.parse().ok(),
        Sexp::List(items, _) => match items.as_slice() {
            [op, x] if op.atom() == Some("-") => parse_int(x).map(|n| -n),
            _ => None,
        },
        _ => None,
    }
}

fn parse_array(s: &Sexp) -> Option<ArrayValue> {
    let items = s.list()?;
    match items {
        // ((as const (Array Int Int)) v)
        [head, v] if head.head() == Some("as") => Some(ArrayValue::constant(parse_int(v)?)),
        [op, a, i, v] if op.atom() == Some("store") => Some(parse_array(a)?.store(parse_int(i)?, parse_int(v)?)),
        // (lambda ((x Int)) (ite (= x k) v ...))
        [op, params, body] if op.atom() == Some("lambda") => {
            let x = params.list()?.first()?.list()?.first()?.atom()?.to_string();
            let mut exceptions = Vec::new();
            let mut cur = body;
            loop {
                match cur.list() {
                    Some([ite, cond, v, rest]) if ite.atom() == Some("ite") => {
                        let [eq, l, r] = cond.list()? else { return None };
                        if eq.atom() != Some("=") {
                            return None;
                        }
                        let k = if l.atom() == Some(&x) { parse_int(r)? } else if r.atom() == Some(&x) { parse_int(l)? } else { return None };
                        exceptions.push((k, parse_int(v)?));
                        cur = rest;
                    }
                    _ => break,
                }
            }
            let mut arr = ArrayValue::constant(parse_int(cur)?);
            // earlier branches take precedence
            for (k, v) in exceptions.into_iter().rev() {
                arr = arr.store(k, v);
            }
            Some(arr)
        }
        _ => None,
    }
}

/// Inline `(let ((x e) ..) body)` bindings, which z3 uses to share
/// subterms of array values.
fn inline_lets(s: &Sexp, env: &HashMap<String, Sexp>) -> Option<Sexp> {
    match s {
        Sexp::Atom(a, _) => Some(env.get(a).cloned().unwrap_or_else(|| s.clone())),
        Sexp::Str(..) => Some(s.clone()),
        Sexp::List(items, pos) => match items.as_slice() {
            [head, binds, body] if head.atom() == Some("let") => {
                let mut inner = env.clone();
                for b in binds.list()? {
                    let [name, e] = b.list()? else { return None };
                    // parallel let: bound expressions see the outer scope
                    inner.insert(name.atom()?.to_string(), inline_lets(e, env)?);
                }
                inline_lets(body, &inner)
            }
            _ => Some(Sexp::List(items.iter().map(|i| inline_lets(i, env)).collect::<Option<_>>()?, *pos)),
        },
    }
}

fn parse_value(s: &Sexp, sort: Sort) -> Option<Value> {
    let expanded;
    let s = if s.to_string().contains("let") {
        expanded = inline_lets(s, &HashMap::new())?;
        &expanded
    } else {
        s
    };
    match sort {
        Sort::Bool => match s.atom()? {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        Sort::Int => parse_int(s).map(Value::Int),
        Sort::Array => parse_array(s).map(Value::Array),
    }
}

impl Solver for ExternalSolver {
    fn check(&mut self, assertions: &[(String, Term)]) -> Result<SatResult, SmtError> {
        check_ground(assertions)?;
        let start = Instant::now();
        let r = self.run(assertions);
        let r = self.finish(r);
        debug!("check {} assertions -> {}", assertions.len(), match &r {
            SatResult::Sat(_) => "sat",
            SatResult::Unsat(_) => "unsat",
            SatResult::Unknown(_) => "unknown",
        });
        self.stats.record(&r, start.elapsed());
        Ok(r)
    }

    fn check_quantified(&mut self, ground: &[Term], universal: &[Term]) -> SatResult {
        let start = Instant::now();
        let run = |s: &mut Self| -> Result<SatResult, Failure> {
            let consts: BTreeSet<UConst> = ground.iter().chain(universal).flat_map(|t| t.consts()).collect();
            s.declare(&consts)?;
            let mut script = String::from("(push 1)\n");
            for t in ground {
                script.push_str(&format!("(assert {t})\n"));
            }
            for t in universal {
                let vars = t.free_vars();
                if vars.is_empty() {
                    script.push_str(&format!("(assert {t})\n"));
                } else {
                    let binders: Vec<String> = vars.iter().map(|v| format!("(v!{v} Int)")).collect();
                    script.push_str(&format!("(assert (forall ({}) {t}))\n", binders.join(" ")));
                }
            }
            script.push_str("(check-sat)");
            s.send(&script)?;
            let answer = s.read(s.grace())?;
            s.send("(pop 1)")?;
            Ok(match answer.atom() {
                Some("sat") => SatResult::Sat(Model::new()),
                Some("unsat") => SatResult::Unsat(Vec::new()),
                _ => SatResult::Unknown(answer.to_string()),
            })
        };
        let r = run(self);
        let r = self.finish(r);
        self.stats.record(&r, start.elapsed());
        r
    }

    fn stats(&self) -> SolverStats {
        self.stats
    }

    fn name(&self) -> String {
        format!("external:{}", self.program.display())
    }
}
