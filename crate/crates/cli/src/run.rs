use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use keyphrase_core::checkpoint;
use keyphrase_core::corpus::{load_jsonl, write_jsonl, Dataset, SyntheticCorpus, Vocabulary};
use keyphrase_core::eval::{evaluate_full, extract, rank_phrases, MetricReport};
use keyphrase_core::jlsd::{
    jlsd_train, train_simple_joint, train_simple_pretrain, train_supervised, JlsdConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, RunArgs, SynthArgs};
use crate::config;
use crate::failure::{Failure, Outcome};
use crate::output::{beside, create, json_lines, sha256_file, write_bytes, Lock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Train,
    Jlsd,
    Pretrain,
    Joint,
    Eval,
    Extract,
    Rank,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Jlsd => "jlsd",
            Mode::Pretrain => "pretrain",
            Mode::Joint => "joint",
            Mode::Eval => "eval",
            Mode::Extract => "extract",
            Mode::Rank => "rank",
        }
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Train(a) => train(Mode::Train, a),
        Command::Jlsd(a) => train(Mode::Jlsd, a),
        Command::Pretrain(a) => train(Mode::Pretrain, a),
        Command::Joint(a) => train(Mode::Joint, a),
        Command::Eval(a) => eval(a),
        Command::Extract(a) => predict(Mode::Extract, a),
        Command::Rank(a) => predict(Mode::Rank, a),
        Command::Synth(a) => synth(a),
    }
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str, mode: Mode) -> Outcome<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Failure::config(format!("{} requires --{flag}", mode.name())))
}

/// Record of a run: enough to repeat it and to check its inputs.
struct Provenance {
    mode: &'static str,
    command: Vec<String>,
    inputs: BTreeMap<String, Value>,
    outputs: BTreeMap<String, String>,
    config: Option<JlsdConfig>,
    extra: BTreeMap<String, Value>,
}

impl Provenance {
    fn new(mode: &'static str) -> Self {
        Provenance {
            mode,
            command: vec!["keyphrase".into(), mode.into()],
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: None,
            extra: BTreeMap::new(),
        }
    }

    fn flag(&mut self, name: &str, value: impl ToString) {
        self.command.push(format!("--{name}"));
        self.command.push(value.to_string());
    }

    fn input(&mut self, role: &str, path: &Path) -> Outcome {
        self.flag(role, path.display());
        self.inputs.insert(
            role.into(),
            json!({"path": path.display().to_string(), "sha256": sha256_file(path)?}),
        );
        Ok(())
    }

    fn output(&mut self, role: &str, path: &Path) {
        self.outputs.insert(role.into(), path.display().to_string());
    }

    fn write(mut self, path: &Path) -> Outcome {
        if let Some(cfg) = &self.config {
            self.command.extend(config::to_flags(cfg));
        }
        let value = json!({
            "mode": self.mode,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "details": self.extra,
        });
        let text = serde_json::to_string_pretty(&value).expect("serializable") + "\n";
        write_bytes(path, text.as_bytes())
    }
}

/// Refuses outputs that would overwrite an input file.
fn check_disjoint(inputs: &[&Path], outputs: &[&Path]) -> Outcome {
    let canon = |p: &Path| fs::canonicalize(p).ok();
    for o in outputs {
        let Some(co) = canon(o) else { continue };
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&co)) {
            return Err(Failure::config(format!(
                "output {} would overwrite an input file",
                o.display()
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricLine {
    metric: String,
    precision: f64,
    recall: f64,
    f1: f64,
    n_docs: usize,
}

impl MetricLine {
    fn new(metric: impl Into<String>, r: &MetricReport) -> Self {
        MetricLine {
            metric: metric.into(),
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            n_docs: r.n_docs,
        }
    }
}

fn metric_lines(
    model: &keyphrase_core::Model,
    ds: &Dataset,
    ks: &[usize],
) -> Outcome<Vec<MetricLine>> {
    let m = evaluate_full(model, ds, ks)?;
    let mut lines = vec![
        MetricLine::new("f1", &m.f1),
        MetricLine::new("f1_macro", &m.f1_macro),
    ];
    lines.extend(
        m.at_k
            .iter()
            .map(|(k, r)| MetricLine::new(format!("f1@{k}"), r)),
    );
    Ok(lines)
}

fn check_ks(ks: &[usize]) -> Outcome {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Failure::config("--k needs positive cutoffs"));
    }
    Ok(())
}

fn train(mode: Mode, args: RunArgs) -> Outcome {
    let train_path = require(&args.train, "train", mode)?;
    let dev_path = require(&args.dev, "dev", mode)?;
    let out = require(&args.out, "out", mode)?;
    let unlabeled_path = match mode {
        Mode::Jlsd => Some(require(&args.unlabeled, "unlabeled", mode)?),
        _ => None,
    };
    let source_path = match mode {
        Mode::Pretrain | Mode::Joint => Some(require(&args.source, "source", mode)?),
        _ => None,
    };
    check_ks(&args.k)?;
    let cfg = config::resolve(args.config.as_deref(), args.seed, &args.hyper)?;
    let ckpt_path = args.ckpt.clone().unwrap_or_else(|| out.join("model.ckpt"));
    let report_path = out.join("report.jsonl");
    let metrics_path = out.join("metrics.jsonl");
    let provenance_path = out.join("config.json");

    let mut inputs: Vec<&Path> = vec![train_path, dev_path];
    inputs.extend(args.test.as_deref());
    inputs.extend(unlabeled_path);
    inputs.extend(source_path);
    check_disjoint(
        &inputs,
        &[&ckpt_path, &report_path, &metrics_path, &provenance_path],
    )?;

    let train = load_jsonl(train_path, true)?;
    let dev = load_jsonl(dev_path, true)?;
    let test = args
        .test
        .as_deref()
        .map(|p| load_jsonl(p, true))
        .transpose()?;
    let unlabeled = unlabeled_path.map(|p| load_jsonl(p, false)).transpose()?;
    let source = source_path.map(|p| load_jsonl(p, true)).transpose()?;
    let vocab = Vocabulary::build(
        train
            .documents()
            .chain(unlabeled.iter().flat_map(|d| d.documents()))
            .chain(source.iter().flat_map(|d| d.documents())),
        cfg.min_count,
    )?;

    fs::create_dir_all(out).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
    let _lock = Lock::acquire(out.join(".lock"))?;

    let (model, mut report) = match mode {
        Mode::Train => train_supervised(&vocab, &train, &dev, &cfg)?,
        Mode::Jlsd => jlsd_train(
            &vocab,
            &train,
            unlabeled.as_ref().expect("checked"),
            &dev,
            &cfg,
        )?,
        Mode::Pretrain => train_simple_pretrain(
            &vocab,
            source.as_ref().expect("checked"),
            &train,
            &dev,
            &cfg,
        )?,
        Mode::Joint => train_simple_joint(
            &vocab,
            source.as_ref().expect("checked"),
            &train,
            &dev,
            &cfg,
        )?,
        _ => unreachable!("not a training mode"),
    };

    checkpoint::save(&model, &ckpt_path)?;
    report.set_checkpoint(ckpt_path.display().to_string());
    let mut f = create(&report_path)?;
    report.write_jsonl(&mut f)?;

    let mut prov = Provenance::new(mode.name());
    prov.input("train", train_path)?;
    prov.input("dev", dev_path)?;
    if let Some(p) = unlabeled_path {
        prov.input("unlabeled", p)?;
    }
    if let Some(p) = source_path {
        prov.input("source", p)?;
    }
    if let Some(p) = args.test.as_deref() {
        prov.input("test", p)?;
    }
    prov.flag("out", out.display());
    if let Some(c) = &args.ckpt {
        prov.flag("ckpt", c.display());
    }
    prov.flag(
        "k",
        args.k
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    prov.output("checkpoint", &ckpt_path);
    prov.output("report", &report_path);
    prov.extra.insert("vocab_size".into(), json!(vocab.len()));
    prov.extra.insert("vocab_hash".into(), json!(vocab.hash()));
    prov.config = Some(cfg);

    let mut summary = json!({
        "checkpoint": ckpt_path.display().to_string(),
        "report": report_path.display().to_string(),
        "best_dev_f1": report.best_score(),
    });
    if let Some(test) = &test {
        let lines = metric_lines(&model, test, &args.k)?;
        write_bytes(&metrics_path, json_lines(&lines).as_bytes())?;
        prov.output("metrics", &metrics_path);
        summary["test_f1"] = json!(lines[0].f1);
    }
    prov.write(&provenance_path)?;
    println!("{summary}");
    Ok(())
}

fn eval(args: RunArgs) -> Outcome {
    let mode = Mode::Eval;
    let ckpt = require(&args.ckpt, "ckpt", mode)?;
    let test_path = require(&args.test, "test", mode)?;
    check_ks(&args.k)?;
    if let Some(out) = &args.out {
        check_disjoint(&[ckpt, test_path], &[out])?;
    }
    let model = checkpoint::load(ckpt)?;
    let test = load_jsonl(test_path, true)?;
    let lines = metric_lines(&model, &test, &args.k)?;
    let text = json_lines(&lines);
    if let Some(out) = &args.out {
        let _lock = Lock::acquire(beside(out, false, "lock"))?;
        write_bytes(out, text.as_bytes())?;
        let mut prov = Provenance::new(mode.name());
        prov.input("ckpt", ckpt)?;
        prov.input("test", test_path)?;
        prov.flag(
            "k",
            args.k
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        prov.flag("out", out.display());
        prov.output("metrics", out);
        prov.write(&beside(out, false, "config.json"))?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Extracted<'a> {
    id: &'a str,
    keyphrases: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct RankedPhrase {
    phrase: Vec<String>,
    confidence: f64,
    start: usize,
    end: usize,
}

#[derive(Serialize)]
struct Ranked<'a> {
    id: &'a str,
    phrases: Vec<RankedPhrase>,
}

fn predict(mode: Mode, args: RunArgs) -> Outcome {
    let ckpt = require(&args.ckpt, "ckpt", mode)?;
    let input = require(&args.test, "test", mode)?;
    if let Some(out) = &args.out {
        check_disjoint(&[ckpt, input], &[out])?;
    }
    let model = checkpoint::load(ckpt)?;
    let docs = load_jsonl(input, false)?;
    let mut text = String::new();
    for doc in docs.documents() {
        let line = if mode == Mode::Extract {
            let ex = extract(&model, doc)?;
            serde_json::to_string(&Extracted {
                id: &doc.id,
                keyphrases: ex.predictions.into_iter().map(|p| p.phrase).collect(),
            })
        } else {
            serde_json::to_string(&Ranked {
                id: &doc.id,
                phrases: rank_phrases(&model, doc)?
                    .into_iter()
                    .map(|p| RankedPhrase {
                        phrase: p.phrase,
                        confidence: p.confidence,
                        start: p.start,
                        end: p.end,
                    })
                    .collect(),
            })
        };
        text.push_str(&line.expect("serializable"));
        text.push('\n');
    }
    match &args.out {
        Some(out) => {
            let _lock = Lock::acquire(beside(out, false, "lock"))?;
            write_bytes(out, text.as_bytes())?;
            let mut prov = Provenance::new(mode.name());
            prov.input("ckpt", ckpt)?;
            prov.input("test", input)?;
            prov.flag("out", out.display());
            prov.output("phrases", out);
            prov.write(&beside(out, false, "config.json"))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .map_err(|e| Failure::data(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Outcome {
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| Failure::config("synth requires --out"))?;
    let corpus = SyntheticCorpus::new(args.seed, args.vocab_size, args.keyword_fraction)?;
    let mut ds = corpus.generate(&args.split, args.docs);
    if args.strip_labels {
        ds = ds.strip_labels();
    }
    let _lock = Lock::acquire(beside(out, false, "lock"))?;
    let mut f = create(out)?;
    write_jsonl(&ds, &mut f)?;

    let mut prov = Provenance::new("synth");
    prov.flag("seed", args.seed);
    prov.flag("docs", args.docs);
    prov.flag("vocab-size", args.vocab_size);
    prov.flag("keyword-fraction", args.keyword_fraction);
    prov.flag("split", &args.split);
    if args.strip_labels {
        prov.command.push("--strip-labels".into());
    }
    prov.flag("out", out.display());
    prov.output("documents", out);
    prov.write(&beside(out, false, "config.json"))
}
