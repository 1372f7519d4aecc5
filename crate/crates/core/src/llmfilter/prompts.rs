//! Prompt templates, request framing and response grammars.
//!
//! A framed prompt is the stage instruction, a blank line, the response-format instruction,
//! then one or more text blocks each wrapped as `<<<\n...\n>>>`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const BLOCK_OPEN: &str = "<<<";
pub const BLOCK_CLOSE: &str = ">>>";
pub const KEYWORDS_PREFIX: &str = "Keywords: ";

pub const VERDICT_FORMAT: &str =
    "Answer with RELEVANT or IRRELEVANT as the first word, followed by a one-sentence rationale.";
pub const KEYWORD_FORMAT: &str =
    "Reply only with comma-separated keyword:count pairs summed over all summaries (for example `road:3, bus:1`), or NONE.";
pub const TRANSLATE_FORMAT: &str = "Reply with the translated text only.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub translate: String,
    pub extract_keywords: String,
    pub keyword_select: String,
    pub sentence_select: String,
    pub context_select: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        let t = |s: &str| s.trim().to_string();
        Self {
            translate: t(include_str!("../../prompts/translate.txt")),
            extract_keywords: t(include_str!("../../prompts/extract_keywords.txt")),
            keyword_select: t(include_str!("../../prompts/keyword_select.txt")),
            sentence_select: t(include_str!("../../prompts/sentence_select.txt")),
            context_select: t(include_str!("../../prompts/context_select.txt")),
        }
    }
}

impl PromptSet {
    /// Defaults overridden by any `<name>.txt` present in `dir`.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut p = Self::default();
        for (name, slot) in [
            ("translate", &mut p.translate),
            ("extract_keywords", &mut p.extract_keywords),
            ("keyword_select", &mut p.keyword_select),
            ("sentence_select", &mut p.sentence_select),
            ("context_select", &mut p.context_select),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = fs::read_to_string(&path)?.trim().to_string();
            }
        }
        Ok(p)
    }
}

fn sanitize(text: &str) -> String {
    text.replace(BLOCK_OPEN, "< < <").replace(BLOCK_CLOSE, "> > >")
}

/// Builds a framed prompt; `extra` lines go between the instruction and the format line.
pub fn frame(instruction: &str, extra: Option<&str>, format: &str, blocks: &[&str]) -> String {
    let mut s = String::new();
    s.push_str(instruction);
    s.push_str("\n\n");
    if let Some(e) = extra {
        s.push_str(e);
        s.push_str("\n\n");
    }
    s.push_str(format);
    for b in blocks {
        s.push_str("\n\n");
        s.push_str(BLOCK_OPEN);
        s.push('\n');
        s.push_str(&sanitize(b));
        s.push('\n');
        s.push_str(BLOCK_CLOSE);
    }
    s
}

/// Texts of all `<<< ... >>>` blocks in a framed prompt.
pub fn blocks(prompt: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = prompt;
    while let Some(start) = rest.find(BLOCK_OPEN) {
        let after = &rest[start + BLOCK_OPEN.len()..];
        let Some(end) = after.find(BLOCK_CLOSE) else { break };
        out.push(after[..end].trim_matches('\n'));
        rest = &after[end + BLOCK_CLOSE.len()..];
    }
    out
}

/// The keyword list line of a provider-mode keyword-selection prompt.
pub fn keyword_line(prompt: &str) -> Option<&str> {
    prompt.lines().find_map(|l| l.strip_prefix(KEYWORDS_PREFIX))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub relevant: bool,
    pub rationale: String,
}

/// Leading RELEVANT / IRRELEVANT token (case-insensitive), then a free-text rationale.
pub fn parse_verdict(response: &str) -> Result<Verdict, String> {
    let text = response.trim_start();
    let end = text.find(|c: char| !c.is_alphabetic()).unwrap_or(text.len());
    let relevant = match text[..end].to_lowercase().as_str() {
        "relevant" => true,
        "irrelevant" => false,
        other => return Err(format!("expected RELEVANT or IRRELEVANT, found {other:?}")),
    };
    let rationale = text[end..].trim_start_matches(|c: char| c.is_whitespace() || ":-.,;".contains(c)).trim_end();
    Ok(Verdict { relevant, rationale: rationale.to_string() })
}

/// `keyword:count, keyword:count, ...`; an empty reply or `NONE` means no keywords.
pub fn parse_keyword_counts(response: &str) -> Result<Vec<(String, u64)>, String> {
    let text = response.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (kw, count) = item.rsplit_once(':').ok_or_else(|| format!("missing ':' in {item:?}"))?;
            let kw = kw.trim();
            if kw.is_empty() {
                return Err(format!("empty keyword in {item:?}"));
            }
            let count: u64 = count.trim().parse().map_err(|_| format!("bad count in {item:?}"))?;
            if count == 0 {
                return Err(format!("zero count in {item:?}"));
            }
            Ok((kw.to_string(), count))
        })
        .collect()
}

/// Non-empty trimmed reply.
pub fn parse_translation(response: &str) -> Result<String, String> {
    let t = response.trim();
    if t.is_empty() {
        Err("empty translation".into())
    } else {
        Ok(t.to_string())
    }
}
