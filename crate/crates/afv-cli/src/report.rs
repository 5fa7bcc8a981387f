//! Line-oriented reports rendered as text or as key:value blocks.

use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Clone, Debug, Default)]
pub struct Block {
    kind: String,
    fields: Vec<(String, String)>,
    notes: Vec<(String, String)>,
}

impl Block {
    pub fn new(kind: &str) -> Block {
        Block { kind: kind.to_string(), ..Block::default() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Block {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    /// A free-form line such as a counterexample or a formula.
    pub fn note(mut self, key: &str, value: impl ToString) -> Block {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    pub fn notes<I: IntoIterator<Item = S>, S: ToString>(mut self, key: &str, values: I) -> Block {
        for v in values {
            self.notes.push((key.to_string(), v.to_string()));
        }
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    blocks: Vec<Block>,
}

impl Report {
    pub fn push(&mut self, b: Block) {
        self.blocks.push(b);
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            match format {
                Format::Text => {
                    out.push_str(&b.kind);
                    for (k, v) in &b.fields {
                        write!(out, " {k}={v}").unwrap();
                    }
                    out.push('\n');
                    for (k, v) in &b.notes {
                        writeln!(out, "  {k}: {v}").unwrap();
                    }
                }
                Format::Structured => {
                    writeln!(out, "block: {}", b.kind).unwrap();
                    for (k, v) in b.fields.iter().chain(&b.notes) {
                        writeln!(out, "{k}: {v}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}
