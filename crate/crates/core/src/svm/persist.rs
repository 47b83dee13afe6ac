//! Versioned, tab-separated text format for trained models.
//!
//! ```text
//! efsvm-model<TAB>1
//! classes<TAB>Normal<TAB>Pathologic<TAB>Suspect
//! priors<TAB>...
//! features<TAB>LB<TAB>AC...
//! mean / sd / numeric<TAB>...
//! config<TAB>C<TAB>degree<TAB>coef0<TAB>tolerance<TAB>epsilon<TAB>max_iterations
//! machine<TAB>positive<TAB>negative<TAB>n_support<TAB>converged<TAB>iterations
//! sv<TAB>label<TAB>alpha<TAB>x1<TAB>x2...
//! bias<TAB>b
//! end
//! ```
//!
//! Reals are written in Rust's shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BinarySvm, KernelSpec, PairMachine, SvmConfig, SvmModel};
use crate::data::Standardizer;
use crate::error::{Error, Result};

pub const MODEL_VERSION: &str = "1";
const MAGIC: &str = "efsvm-model";

fn real(v: f64) -> String {
    format!("{v:?}")
}

fn join_reals(values: &[f64]) -> String {
    values.iter().map(|&v| real(v)).collect::<Vec<_>>().join("\t")
}

fn check_text(s: &str) -> Result<()> {
    if s.contains('\t') || s.contains('\n') || s.contains('\r') {
        return Err(Error::ModelFormat(format!("name `{s}` contains a tab or newline")));
    }
    Ok(())
}

pub(crate) fn write_model_section(model: &SvmModel, out: &mut String) -> Result<()> {
    use std::fmt::Write as _;
    for s in model.classes.iter().chain(&model.feature_names) {
        check_text(s)?;
    }
    let st = &model.standardizer;
    let cfg = &model.config;
    let w = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    w(out, format!("{MAGIC}\t{MODEL_VERSION}"));
    w(out, format!("classes\t{}", model.classes.join("\t")));
    w(out, format!("priors\t{}", join_reals(&model.priors)));
    w(out, format!("features\t{}", model.feature_names.join("\t")));
    w(out, format!("mean\t{}", join_reals(&st.means)));
    w(out, format!("sd\t{}", join_reals(&st.sds)));
    let numeric: Vec<&str> = st.numeric.iter().map(|&b| if b { "1" } else { "0" }).collect();
    w(out, format!("numeric\t{}", numeric.join("\t")));
    w(
        out,
        format!(
            "config\t{}\t{}\t{}\t{}\t{}\t{}",
            real(cfg.c),
            cfg.kernel.degree,
            real(cfg.kernel.coef0),
            real(cfg.tolerance),
            real(cfg.epsilon),
            cfg.max_iterations
        ),
    );
    for m in &model.machines {
        let svm = &m.svm;
        w(
            out,
            format!(
                "machine\t{}\t{}\t{}\t{}\t{}",
                m.positive,
                m.negative,
                svm.support.len(),
                u8::from(svm.converged),
                svm.iterations
            ),
        );
        for ((row, &a), &y) in svm.support.iter().zip(&svm.alphas).zip(&svm.labels) {
            let _ = writeln!(out, "sv\t{}\t{}\t{}", real(y), real(a), join_reals(row));
        }
        w(out, format!("bias\t{}", real(svm.bias)));
    }
    w(out, "end".to_owned());
    Ok(())
}

pub fn write_model<W: Write>(model: &SvmModel, mut out: W) -> Result<()> {
    let mut text = String::new();
    write_model_section(model, &mut text)?;
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<model output>", e))
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<()> {
    let mut text = String::new();
    write_model_section(model, &mut text)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Cursor over non-empty lines, split on tabs.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
        }
    }

    pub(crate) fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>)> {
        loop {
            let (i, line) = self
                .inner
                .next()
                .ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))?;
            if !line.trim().is_empty() {
                return Ok((i + 1, line.split('\t').collect()));
            }
        }
    }

    pub(crate) fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, fields) = self.next_fields()?;
        if fields[0] != key {
            return Err(Error::ModelFormat(format!(
                "line {line}: expected `{key}`, found `{}`",
                fields[0]
            )));
        }
        Ok((line, fields[1..].to_vec()))
    }

    pub(crate) fn is_done(&mut self) -> bool {
        while let Some((_, l)) = self.inner.peek() {
            if l.trim().is_empty() {
                self.inner.next();
            } else {
                return false;
            }
        }
        true
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::ModelFormat(format!("line {line}: cannot parse `{s}`")))
}

fn parse_reals(fields: &[&str], line: usize) -> Result<Vec<f64>> {
    fields.iter().map(|s| parse_num(s, line)).collect()
}

pub(crate) fn parse_model_section(lines: &mut Lines<'_>) -> Result<SvmModel> {
    let (line, header) = lines.next_fields()?;
    if header[0] != MAGIC {
        return Err(Error::ModelFormat(format!("line {line}: not a model file")));
    }
    match header.get(1) {
        Some(&v) if v == MODEL_VERSION => {}
        Some(v) => return Err(Error::VersionMismatch(v.to_string())),
        None => return Err(Error::VersionMismatch(String::new())),
    }
    let classes: Vec<String> = lines.expect("classes")?.1.iter().map(|s| s.to_string()).collect();
    let (l, f) = lines.expect("priors")?;
    let priors = parse_reals(&f, l)?;
    let feature_names: Vec<String> = lines.expect("features")?.1.iter().map(|s| s.to_string()).collect();
    let (l, f) = lines.expect("mean")?;
    let means = parse_reals(&f, l)?;
    let (l, f) = lines.expect("sd")?;
    let sds = parse_reals(&f, l)?;
    let (l, f) = lines.expect("numeric")?;
    let numeric = f
        .iter()
        .map(|s| match *s {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(Error::ModelFormat(format!("line {l}: bad flag `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let (l, f) = lines.expect("config")?;
    if f.len() != 6 {
        return Err(Error::ModelFormat(format!("line {l}: config needs 6 fields")));
    }
    let config = SvmConfig {
        c: parse_num(f[0], l)?,
        kernel: KernelSpec {
            degree: parse_num(f[1], l)?,
            coef0: parse_num(f[2], l)?,
        },
        tolerance: parse_num(f[3], l)?,
        epsilon: parse_num(f[4], l)?,
        max_iterations: parse_num(f[5], l)?,
    };
    let nf = feature_names.len();
    if means.len() != nf || sds.len() != nf || numeric.len() != nf || priors.len() != classes.len() {
        return Err(Error::ModelFormat("header field counts disagree".into()));
    }

    let mut machines = Vec::new();
    loop {
        let (l, fields) = lines.next_fields()?;
        match fields[0] {
            "end" => break,
            "machine" => {
                if fields.len() != 6 {
                    return Err(Error::ModelFormat(format!("line {l}: machine needs 5 fields")));
                }
                let positive: usize = parse_num(fields[1], l)?;
                let negative: usize = parse_num(fields[2], l)?;
                let n_sv: usize = parse_num(fields[3], l)?;
                let converged = fields[4] == "1";
                let iterations = parse_num(fields[5], l)?;
                if positive >= classes.len() || negative >= classes.len() {
                    return Err(Error::ModelFormat(format!("line {l}: class index out of range")));
                }
                let mut svm = BinarySvm {
                    support: Vec::with_capacity(n_sv),
                    alphas: Vec::with_capacity(n_sv),
                    labels: Vec::with_capacity(n_sv),
                    bias: 0.0,
                    kernel: config.kernel,
                    c: config.c,
                    converged,
                    iterations,
                };
                for _ in 0..n_sv {
                    let (l, f) = lines.expect("sv")?;
                    if f.len() != nf + 2 {
                        return Err(Error::ModelFormat(format!(
                            "line {l}: support row has {} values, expected {}",
                            f.len().saturating_sub(2),
                            nf
                        )));
                    }
                    svm.labels.push(parse_num(f[0], l)?);
                    svm.alphas.push(parse_num(f[1], l)?);
                    svm.support.push(parse_reals(&f[2..], l)?);
                }
                let (l, f) = lines.expect("bias")?;
                svm.bias = parse_num(f.first().copied().unwrap_or(""), l)?;
                machines.push(PairMachine {
                    positive,
                    negative,
                    svm,
                });
            }
            other => {
                return Err(Error::ModelFormat(format!("line {l}: unexpected `{other}`")));
            }
        }
    }
    Ok(SvmModel {
        classes,
        priors,
        standardizer: Standardizer {
            feature_names: feature_names.clone(),
            means,
            sds,
            numeric,
        },
        feature_names,
        config,
        machines,
    })
}

pub fn read_model(text: &str) -> Result<SvmModel> {
    let mut lines = Lines::new(text);
    let model = parse_model_section(&mut lines)?;
    if !lines.is_done() {
        return Err(Error::ModelFormat("trailing content after `end`".into()));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text)
}
