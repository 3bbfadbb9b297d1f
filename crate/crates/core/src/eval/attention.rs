use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Example;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tensor::Scalar;
use crate::Stance;

/// Attention weights of one example, aligned with its tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub tokens: Vec<String>,
    pub alpha: Vec<f64>,
    pub target: String,
    pub gold: Stance,
    pub predicted: Stance,
}

pub fn attention_records<T: Scalar>(
    model: &Model<T>,
    examples: &[Example],
) -> Result<Vec<AttentionRecord>> {
    if !model.spec().variant.has_attention() {
        return Err(Error::Capability(format!(
            "{} has no attention layer",
            model.spec().variant
        )));
    }
    examples
        .iter()
        .map(|ex| {
            let out = model.predict(ex)?;
            let att = out.attention.as_ref().expect("attention variant");
            Ok(AttentionRecord {
                tokens: ex.tokens.clone(),
                alpha: att.alpha.iter().map(|a| a.as_f64()).collect(),
                target: ex.target_text.clone(),
                gold: ex.stance,
                predicted: out.predicted(),
            })
        })
        .collect()
}

/// One JSON object per line.
pub fn render_jsonl(records: &[AttentionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable record"));
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Static heatmap: token background opacity is `α / max α` of its sentence.
pub fn render_html(records: &[AttentionRecord]) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>attention</title>\n\
         <style>body{font-family:sans-serif}.r{margin:6px 0}.t{padding:1px 2px}\
         .m{color:#666;font-size:small}</style></head><body>\n",
    );
    for r in records {
        let max = r.alpha.iter().cloned().fold(0.0_f64, f64::max);
        let _ = write!(
            out,
            "<div class=\"r\"><span class=\"m\">{} | gold {} | pred {}</span><br>",
            escape(&r.target),
            r.gold,
            r.predicted
        );
        for (tok, &a) in r.tokens.iter().zip(&r.alpha) {
            let level = if max > 0.0 { a / max } else { 0.0 };
            let _ = write!(
                out,
                "<span class=\"t\" title=\"{a:.4}\" style=\"background:rgba(220,40,40,{level:.3})\">{}</span> ",
                escape(tok)
            );
        }
        out.push_str("</div>\n");
    }
    out.push_str("</body></html>\n");
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the JSONL records (and optionally the HTML heatmap), creating
/// parent directories. Returns the number of records.
pub fn dump_attention<T: Scalar>(
    model: &Model<T>,
    examples: &[Example],
    jsonl: &Path,
    html: Option<&Path>,
) -> Result<usize> {
    let records = attention_records(model, examples)?;
    write_file(jsonl, &render_jsonl(&records))?;
    if let Some(html) = html {
        write_file(html, &render_html(&records))?;
    }
    Ok(records.len())
}
